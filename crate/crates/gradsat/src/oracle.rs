//! Brute-force exact MaxSAT solving and solution verification.
//!
//! This is the ground truth the rest of the crate is checked against. The
//! default enumerator walks assignments in Gray-code order so each step
//! flips a single variable and updates per-clause satisfied-literal counts
//! incrementally; [`brute_force_naive`] re-evaluates the formula from
//! scratch per assignment and exists as an independent second route.

use thiserror::Error;

use crate::encoding::Assignment;
use crate::formula::{Formula, FormulaError};

/// Default cap on exhaustive enumeration (`2^26` assignments).
pub const DEFAULT_VAR_CAP: u32 = 26;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("refusing to enumerate 2^{num_vars} assignments (cap is 2^{cap}); this oracle never approximates")]
    TooManyVariables { num_vars: usize, cap: u32 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Outcome of exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimal_cost: usize,
    /// First assignment attaining the optimum in enumeration order.
    pub witness: Assignment,
    /// Number of assignments examined (always `2^n`).
    pub enumerated: u64,
}

fn check_cap(f: &Formula, var_cap: u32) -> Result<(), OracleError> {
    // 62 is a hard ceiling regardless of the caller's cap: the enumeration
    // counter is a u64 and 2^63 steps are out of the question anyway.
    let cap = var_cap.min(62);
    if f.num_vars() > cap as usize {
        return Err(OracleError::TooManyVariables {
            num_vars: f.num_vars(),
            cap,
        });
    }
    Ok(())
}

/// Exhaustively enumerates all `2^n` assignments in Gray-code order and
/// returns the minimum cost with a deterministic witness. Refuses formulas
/// with more than `var_cap` variables.
pub fn brute_force(f: &Formula, var_cap: u32) -> Result<OracleResult, OracleError> {
    check_cap(f, var_cap)?;
    let n = f.num_vars();
    let m = f.num_clauses();

    // Occurrence lists: for each variable, the (clause, polarity) pairs of
    // its literal occurrences. Duplicate literals keep duplicate entries so
    // the incremental counts stay consistent on raw, unpreprocessed input.
    let mut occurrences: Vec<Vec<(u32, bool)>> = vec![Vec::new(); n];
    // Satisfied-literal occurrence count per clause under the current bits.
    let mut sat_count = vec![0u32; m];
    for (j, clause) in f.clauses().iter().enumerate() {
        for lit in clause {
            occurrences[lit.var()].push((j as u32, lit.is_positive()));
            if lit.satisfied_by(false) {
                sat_count[j] += 1;
            }
        }
    }

    let mut bits = vec![false; n];
    let mut falsified = sat_count.iter().filter(|&&c| c == 0).count();
    let mut best_cost = falsified;
    let mut witness = bits.clone();

    let total = 1u64 << n;
    for step in 1..total {
        let v = step.trailing_zeros() as usize;
        bits[v] = !bits[v];
        for &(j, positive) in &occurrences[v] {
            let j = j as usize;
            if positive == bits[v] {
                // this occurrence just became satisfied
                if sat_count[j] == 0 {
                    falsified -= 1;
                }
                sat_count[j] += 1;
            } else {
                sat_count[j] -= 1;
                if sat_count[j] == 0 {
                    falsified += 1;
                }
            }
        }
        if falsified < best_cost {
            best_cost = falsified;
            witness.copy_from_slice(&bits);
        }
    }

    Ok(OracleResult {
        optimal_cost: best_cost,
        witness: Assignment::new(witness),
        enumerated: total,
    })
}

/// Independent second route: plain binary counting with a from-scratch
/// evaluation per assignment. Exponentially slower in practice; used to
/// cross-check [`brute_force`].
pub fn brute_force_naive(f: &Formula, var_cap: u32) -> Result<OracleResult, OracleError> {
    check_cap(f, var_cap)?;
    let n = f.num_vars();
    let total = 1u64 << n;
    let mut best_cost = usize::MAX;
    let mut witness = Assignment::all_false(n);
    for index in 0..total {
        let a = Assignment::new((0..n).map(|i| (index >> i) & 1 == 1).collect());
        let cost = f.evaluate(&a).expect("assignment length matches by construction");
        if cost < best_cost {
            best_cost = cost;
            witness = a;
        }
    }
    Ok(OracleResult {
        optimal_cost: best_cost,
        witness,
        enumerated: total,
    })
}

/// True iff `assignment` falsifies exactly `claimed` clauses of `f`.
pub fn verify(f: &Formula, assignment: &Assignment, claimed: usize) -> Result<bool, OracleError> {
    Ok(f.evaluate(assignment)? == claimed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs_str;
    use crate::generators;

    fn example_formula() -> Formula {
        parse_dimacs_str("p cnf 2 3\n-1 0\n-2 0\n1 2 0\n")
            .unwrap()
            .formula
    }

    #[test]
    fn example_optimum_is_one() {
        let r = brute_force(&example_formula(), DEFAULT_VAR_CAP).unwrap();
        assert_eq!(r.optimal_cost, 1);
        assert_eq!(r.enumerated, 4);
        assert_eq!(
            example_formula().evaluate(&r.witness).unwrap(),
            r.optimal_cost
        );
    }

    #[test]
    fn php2_optimum_is_one() {
        let f = generators::php(2).unwrap();
        let r = brute_force(&f, DEFAULT_VAR_CAP).unwrap();
        assert_eq!(r.optimal_cost, 1);
        assert_eq!(r.enumerated, 64);
    }

    #[test]
    fn refuses_above_cap() {
        let f = Formula::from_ints(5, vec![vec![1]]).unwrap();
        assert!(matches!(
            brute_force(&f, 4).unwrap_err(),
            OracleError::TooManyVariables { num_vars: 5, cap: 4 }
        ));
    }

    #[test]
    fn gray_and_naive_agree() {
        let f = generators::gt(2).unwrap();
        let gray = brute_force(&f, DEFAULT_VAR_CAP).unwrap();
        let naive = brute_force_naive(&f, DEFAULT_VAR_CAP).unwrap();
        assert_eq!(gray.optimal_cost, naive.optimal_cost);
        assert_eq!(gray.enumerated, naive.enumerated);
    }

    #[test]
    fn handles_empty_and_degenerate_clauses() {
        // empty clause and a tautology on raw input
        let f = Formula::from_ints(1, vec![vec![], vec![1, -1], vec![1]]).unwrap();
        let r = brute_force(&f, DEFAULT_VAR_CAP).unwrap();
        assert_eq!(r.optimal_cost, 1);
        let empty = Formula::new(0, vec![]).unwrap();
        let r = brute_force(&empty, DEFAULT_VAR_CAP).unwrap();
        assert_eq!(r.optimal_cost, 0);
        assert_eq!(r.enumerated, 1);
    }

    #[test]
    fn verify_checks_claimed_cost() {
        let f = example_formula();
        assert!(verify(&f, &Assignment::new(vec![false, true]), 1).unwrap());
        assert!(!verify(&f, &Assignment::new(vec![true, true]), 1).unwrap());
        let empty = Formula::new(0, vec![]).unwrap();
        assert!(verify(&empty, &Assignment::new(vec![]), 0).unwrap());
    }

    #[test]
    fn verify_rejects_length_mismatch() {
        let f = example_formula();
        assert!(verify(&f, &Assignment::new(vec![true]), 1).is_err());
    }
}
