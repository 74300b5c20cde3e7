//! CNF data model and DIMACS I/O.
//!
//! A [`Formula`] is a plain clause list over 1-based variables. Clause and
//! literal order are preserved exactly as given, so clause indices are stable
//! across parsing, serialization, and solving. [`preprocess`] normalizes the
//! pathological cases (duplicate literals, tautologies, empty clauses) that
//! the incidence-matrix encoding cannot represent.

use std::fmt;
use std::io::{self, BufRead};

use thiserror::Error;

use crate::encoding::Assignment;

/// Errors from formula construction, evaluation, and DIMACS parsing.
#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("literal value must be nonzero")]
    ZeroLiteral,
    #[error("literal {0} exceeds declared variable count {1}")]
    LiteralOutOfRange(i32, usize),
    #[error("assignment covers {got} variables but formula has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("missing DIMACS header line `p cnf <vars> <clauses>`")]
    MissingHeader,
    #[error("malformed DIMACS header: {0}")]
    MalformedHeader(String),
    #[error("weighted input unsupported: only unweighted `p cnf` is accepted")]
    WeightedInput,
    #[error("malformed literal token `{0}`")]
    MalformedLiteral(String),
    #[error("unterminated final clause (missing trailing 0)")]
    UnterminatedClause,
    #[error("clause data before DIMACS header")]
    ClauseBeforeHeader,
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// One literal: a 1-based variable index with a polarity, stored as the
/// usual nonzero signed integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(i32);

impl Literal {
    pub fn new(value: i32) -> Result<Self, FormulaError> {
        if value == 0 {
            return Err(FormulaError::ZeroLiteral);
        }
        Ok(Literal(value))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    /// Zero-based variable index.
    pub fn var(self) -> usize {
        self.0.unsigned_abs() as usize - 1
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Self {
        Literal(-self.0)
    }

    /// Whether the literal holds when its variable takes `value`.
    pub fn satisfied_by(self, value: bool) -> bool {
        self.is_positive() == value
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An unweighted CNF formula: a variable count plus an ordered clause list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
}

impl Formula {
    /// Builds a formula, checking every literal against `num_vars`.
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self, FormulaError> {
        for clause in &clauses {
            for lit in clause {
                if lit.var() >= num_vars {
                    return Err(FormulaError::LiteralOutOfRange(lit.value(), num_vars));
                }
            }
        }
        Ok(Formula { num_vars, clauses })
    }

    /// Convenience constructor from raw signed integers.
    pub fn from_ints<I, C>(num_vars: usize, clauses: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = i32>,
    {
        let clauses = clauses
            .into_iter()
            .map(|c| c.into_iter().map(Literal::new).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Formula::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.num_vars == 0 && self.clauses.is_empty()
    }

    /// Counts the clauses with no satisfied literal under `assignment`. This
    /// is the cost every other module reports and re-verifies against.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<usize, FormulaError> {
        if assignment.len() != self.num_vars {
            return Err(FormulaError::AssignmentLength {
                expected: self.num_vars,
                got: assignment.len(),
            });
        }
        Ok(self
            .clauses
            .iter()
            .filter(|clause| {
                !clause
                    .iter()
                    .any(|lit| lit.satisfied_by(assignment.get(lit.var())))
            })
            .count())
    }
}

/// Result of parsing a DIMACS stream: the formula plus side-band data that
/// is reported but never round-tripped.
#[derive(Debug, Clone)]
pub struct ParsedDimacs {
    pub formula: Formula,
    /// Comment lines, `c ` prefix stripped.
    pub comments: Vec<String>,
    /// Non-fatal diagnostics (e.g. header/body clause-count mismatch).
    pub warnings: Vec<String>,
}

/// Parses DIMACS CNF. Comment lines may appear anywhere; clauses may span
/// lines and are terminated by `0`. A clause-count mismatch against the
/// header is reported as a warning, not an error, since benchmark archives
/// commonly contain such files.
pub fn parse_dimacs<R: BufRead>(reader: R) -> Result<ParsedDimacs, FormulaError> {
    let mut header: Option<(usize, usize)> = None;
    let mut comments = Vec::new();
    let mut warnings = Vec::new();
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        // any line starting with `c` is a comment, per common practice
        if let Some(rest) = trimmed.strip_prefix('c') {
            comments.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
            continue;
        }
        if trimmed.starts_with('p') {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() >= 2 && fields[1] == "wcnf" {
                return Err(FormulaError::WeightedInput);
            }
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(FormulaError::MalformedHeader(trimmed.to_string()));
            }
            let nvars = fields[2]
                .parse::<usize>()
                .map_err(|_| FormulaError::MalformedHeader(trimmed.to_string()))?;
            let nclauses = fields[3]
                .parse::<usize>()
                .map_err(|_| FormulaError::MalformedHeader(trimmed.to_string()))?;
            if header.is_some() {
                return Err(FormulaError::MalformedHeader(
                    "duplicate header line".to_string(),
                ));
            }
            header = Some((nvars, nclauses));
            continue;
        }
        let (nvars, _) = header.ok_or(FormulaError::ClauseBeforeHeader)?;
        for token in trimmed.split_whitespace() {
            let value: i32 = token
                .parse()
                .map_err(|_| FormulaError::MalformedLiteral(token.to_string()))?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                let lit = Literal::new(value)?;
                if lit.var() >= nvars {
                    return Err(FormulaError::LiteralOutOfRange(value, nvars));
                }
                current.push(lit);
            }
        }
    }

    let (nvars, declared) = header.ok_or(FormulaError::MissingHeader)?;
    if !current.is_empty() {
        return Err(FormulaError::UnterminatedClause);
    }
    if clauses.len() != declared {
        warnings.push(format!(
            "header declares {} clauses but {} were found",
            declared,
            clauses.len()
        ));
    }
    let formula = Formula::new(nvars, clauses)?;
    Ok(ParsedDimacs {
        formula,
        comments,
        warnings,
    })
}

/// Parses DIMACS CNF from an in-memory string.
pub fn parse_dimacs_str(text: &str) -> Result<ParsedDimacs, FormulaError> {
    parse_dimacs(text.as_bytes())
}

/// Serializes a formula in canonical DIMACS form. `parse_dimacs` on the
/// output reproduces the formula exactly.
pub fn write_dimacs(formula: &Formula) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "p cnf {} {}\n",
        formula.num_vars(),
        formula.num_clauses()
    ));
    for clause in formula.clauses() {
        for lit in clause {
            out.push_str(&format!("{} ", lit.value()));
        }
        out.push_str("0\n");
    }
    out
}

/// A formula normalized for encoding: duplicate literals collapsed,
/// tautological clauses dropped (counted as permanently satisfied), and
/// empty clauses folded into a constant `base_cost` added to every reported
/// cost. The incidence matrix is only well-defined on the active clauses.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    source: Formula,
    active: Vec<Vec<Literal>>,
    active_to_source: Vec<usize>,
    base_cost: usize,
    tautology_count: usize,
}

/// Normalizes a formula. Within each clause the first occurrence order of
/// literals is preserved.
pub fn preprocess(formula: Formula) -> CompiledFormula {
    let mut active = Vec::new();
    let mut active_to_source = Vec::new();
    let mut base_cost = 0;
    let mut tautology_count = 0;

    for (idx, clause) in formula.clauses().iter().enumerate() {
        if clause.is_empty() {
            base_cost += 1;
            continue;
        }
        let mut seen: Vec<Literal> = Vec::with_capacity(clause.len());
        let mut tautology = false;
        for &lit in clause {
            if seen.contains(&lit.negated()) {
                tautology = true;
                break;
            }
            if !seen.contains(&lit) {
                seen.push(lit);
            }
        }
        if tautology {
            tautology_count += 1;
        } else {
            active.push(seen);
            active_to_source.push(idx);
        }
    }

    CompiledFormula {
        source: formula,
        active,
        active_to_source,
        base_cost,
        tautology_count,
    }
}

impl CompiledFormula {
    pub fn source(&self) -> &Formula {
        &self.source
    }

    pub fn num_vars(&self) -> usize {
        self.source.num_vars()
    }

    /// Deduplicated clauses that participate in the encoding.
    pub fn active_clauses(&self) -> &[Vec<Literal>] {
        &self.active
    }

    pub fn num_active(&self) -> usize {
        self.active.len()
    }

    /// Index of the source clause an active clause came from.
    pub fn source_index(&self, active_idx: usize) -> usize {
        self.active_to_source[active_idx]
    }

    /// Number of empty clauses: falsified under every assignment.
    pub fn base_cost(&self) -> usize {
        self.base_cost
    }

    /// Number of clauses dropped as always-true.
    pub fn tautology_count(&self) -> usize {
        self.tautology_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_formula() -> Formula {
        // (-x1) and (-x2) and (x1 or x2)
        Formula::from_ints(2, vec![vec![-1], vec![-2], vec![1, 2]]).unwrap()
    }

    #[test]
    fn parse_example() {
        let parsed = parse_dimacs_str("p cnf 2 3\n-1 0\n-2 0\n1 2 0\n").unwrap();
        assert_eq!(parsed.formula, example_formula());
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parse_empty_formula() {
        let parsed = parse_dimacs_str("p cnf 0 0\n").unwrap();
        assert_eq!(parsed.formula.num_vars(), 0);
        assert_eq!(parsed.formula.num_clauses(), 0);
    }

    #[test]
    fn parse_rejects_weighted() {
        let err = parse_dimacs_str("p wcnf 2 3 4\n4 -1 0\n").unwrap_err();
        assert!(matches!(err, FormulaError::WeightedInput));
    }

    #[test]
    fn parse_rejects_oversized_literal() {
        let err = parse_dimacs_str("p cnf 2 1\n3 0\n").unwrap_err();
        assert!(matches!(err, FormulaError::LiteralOutOfRange(3, 2)));
    }

    #[test]
    fn parse_rejects_unterminated_clause() {
        let err = parse_dimacs_str("p cnf 2 1\n1 2\n").unwrap_err();
        assert!(matches!(err, FormulaError::UnterminatedClause));
    }

    #[test]
    fn parse_rejects_missing_header() {
        assert!(matches!(
            parse_dimacs_str("").unwrap_err(),
            FormulaError::MissingHeader
        ));
        assert!(matches!(
            parse_dimacs_str("1 2 0\n").unwrap_err(),
            FormulaError::ClauseBeforeHeader
        ));
    }

    #[test]
    fn parse_count_mismatch_is_warning() {
        let parsed = parse_dimacs_str("p cnf 2 5\n1 0\n").unwrap();
        assert_eq!(parsed.formula.num_clauses(), 1);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn parse_keeps_comments() {
        let parsed = parse_dimacs_str("c hello\np cnf 1 1\nc mid\n1 0\n").unwrap();
        assert_eq!(parsed.comments, vec!["hello".to_string(), "mid".to_string()]);
        // comment marker without a following space, as found in archives
        let parsed = parse_dimacs_str("chello\np cnf 1 1\n1 0\n").unwrap();
        assert_eq!(parsed.comments, vec!["hello".to_string()]);
    }

    #[test]
    fn clauses_may_span_lines() {
        let parsed = parse_dimacs_str("p cnf 3 1\n1 2\n3 0\n").unwrap();
        assert_eq!(parsed.formula.clauses()[0].len(), 3);
    }

    #[test]
    fn write_example() {
        assert_eq!(
            write_dimacs(&example_formula()),
            "p cnf 2 3\n-1 0\n-2 0\n1 2 0\n"
        );
        let empty = Formula::new(0, vec![]).unwrap();
        assert_eq!(write_dimacs(&empty), "p cnf 0 0\n");
    }

    #[test]
    fn round_trip_generated_instance() {
        let f = crate::generators::php(3).unwrap();
        let parsed = parse_dimacs_str(&write_dimacs(&f)).unwrap();
        assert_eq!(parsed.formula, f);
    }

    #[test]
    fn round_trip_preserves_empty_clause() {
        let f = Formula::from_ints(1, vec![vec![], vec![1]]).unwrap();
        let text = write_dimacs(&f);
        assert_eq!(parse_dimacs_str(&text).unwrap().formula, f);
    }

    #[test]
    fn preprocess_collapses_duplicates() {
        let cf = preprocess(Formula::from_ints(2, vec![vec![1, 1, 2]]).unwrap());
        assert_eq!(cf.active_clauses().len(), 1);
        assert_eq!(
            cf.active_clauses()[0],
            vec![Literal::new(1).unwrap(), Literal::new(2).unwrap()]
        );
        assert_eq!(cf.base_cost(), 0);
        assert_eq!(cf.tautology_count(), 0);
    }

    #[test]
    fn preprocess_drops_tautologies() {
        let cf = preprocess(Formula::from_ints(1, vec![vec![1, -1]]).unwrap());
        assert_eq!(cf.num_active(), 0);
        assert_eq!(cf.tautology_count(), 1);
    }

    #[test]
    fn preprocess_counts_empty_clauses() {
        let cf = preprocess(Formula::from_ints(1, vec![vec![], vec![1]]).unwrap());
        assert_eq!(cf.num_active(), 1);
        assert_eq!(cf.base_cost(), 1);
        assert_eq!(cf.source_index(0), 1);
    }

    #[test]
    fn preprocess_accounting_is_total() {
        let f = Formula::from_ints(3, vec![vec![], vec![1, -1], vec![2, 2, 3], vec![3]]).unwrap();
        let cf = preprocess(f);
        assert_eq!(
            cf.num_active() + cf.tautology_count() + cf.base_cost(),
            cf.source().num_clauses()
        );
    }

    #[test]
    fn evaluate_example_costs() {
        let f = example_formula();
        // cost 2 under (true, true): the two unit clauses are falsified
        let cost = f.evaluate(&Assignment::new(vec![true, true])).unwrap();
        assert_eq!(cost, 2);
        // enumerating all four assignments gives minimum cost 1
        let cost = f.evaluate(&Assignment::new(vec![false, true])).unwrap();
        assert_eq!(cost, 1);
        let empty = Formula::new(0, vec![]).unwrap();
        assert_eq!(empty.evaluate(&Assignment::new(vec![])).unwrap(), 0);
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let err = example_formula()
            .evaluate(&Assignment::new(vec![true]))
            .unwrap_err();
        assert!(matches!(
            err,
            FormulaError::AssignmentLength {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn literal_rejects_zero() {
        assert!(matches!(
            Literal::new(0).unwrap_err(),
            FormulaError::ZeroLiteral
        ));
    }
}
