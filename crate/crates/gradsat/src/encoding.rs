//! The differentiable encoding of a CNF instance.
//!
//! A preprocessed formula becomes a fixed signed incidence matrix `W` with
//! one row per variable and one column per active clause: the entry for
//! variable `i` in clause `j` is `+1` when `x_i` appears in the clause, `-1`
//! when its negation does, and absent otherwise. The forward pass maps a
//! real relaxation vector `x` to per-clause activations
//! `f_j = sum_i tanh(x_i) * W[i][j]`, and the loss is the mean squared
//! activation over the currently falsified clauses only, so gradients flow
//! exclusively through variables that contribute to falsified clauses.
//!
//! Falsification is decided exactly, not from activation signs: with the
//! sign projection (`+1` for true, `-1` for false) a clause is falsified if
//! and only if its column dot product equals `s_j = -len(c_j)`, since every
//! falsified literal contributes exactly `-1`. [`IncidenceMatrix::unsat_mask`]
//! computes the equivalent condition by a direct literal scan;
//! [`IncidenceMatrix::unsat_mask_algebraic`] evaluates the dot-product form.

use thiserror::Error;

use crate::formula::CompiledFormula;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("input vector has length {got}, expected {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("non-finite value at component {0}")]
    NonFinite(usize),
}

/// A complete Boolean assignment, one bit per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn all_false(n: usize) -> Self {
        Assignment {
            bits: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, var: usize) -> bool {
        self.bits[var]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.bits[var] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Signed DIMACS-style literals for all variables, 1-based.
    pub fn to_literals(&self) -> Vec<i32> {
        self.bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { i as i32 + 1 } else { -(i as i32 + 1) })
            .collect()
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(bits: Vec<bool>) -> Self {
        Assignment::new(bits)
    }
}

/// Result of a forward pass: clause activations plus the cached `tanh`
/// values they were computed from (needed by the gradient).
#[derive(Debug, Clone)]
pub struct Activation {
    /// Per-clause activation, length `m`.
    pub f: Vec<f64>,
    /// Per-variable `tanh(x_i)`, length `n`.
    pub t: Vec<f64>,
}

impl Activation {
    pub fn zeros(n: usize, m: usize) -> Self {
        Activation {
            f: vec![0.0; m],
            t: vec![0.0; n],
        }
    }
}

/// Sparse signed incidence matrix of variables in active clauses, stored in
/// both clause-major order (for the forward pass) and variable-major order
/// (for the gradient), together with the clause-length vector `s`.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    num_vars: usize,
    num_clauses: usize,
    /// Clause-major view: `clause_entries[clause_ptr[j]..clause_ptr[j+1]]`
    /// lists the (variable, sign) pairs of column `j`.
    clause_ptr: Vec<usize>,
    clause_entries: Vec<(u32, i8)>,
    /// Variable-major view: `var_entries[var_ptr[i]..var_ptr[i+1]]` lists
    /// the (clause, sign) pairs of row `i`.
    var_ptr: Vec<usize>,
    var_entries: Vec<(u32, i8)>,
    /// `s[j] = -(literal count of active clause j)`.
    s: Vec<i32>,
}

/// Builds the incidence matrix of a preprocessed formula. Preprocessing
/// guarantees no duplicate or complementary literal pair per clause, so each
/// (variable, clause) cell holds at most one entry.
pub fn build_incidence(cf: &CompiledFormula) -> IncidenceMatrix {
    let n = cf.num_vars();
    let clauses = cf.active_clauses();
    let m = clauses.len();

    let mut clause_ptr = Vec::with_capacity(m + 1);
    let mut clause_entries = Vec::new();
    let mut s = Vec::with_capacity(m);
    let mut var_degree = vec![0usize; n];

    clause_ptr.push(0);
    for clause in clauses {
        for lit in clause {
            let sign: i8 = if lit.is_positive() { 1 } else { -1 };
            clause_entries.push((lit.var() as u32, sign));
            var_degree[lit.var()] += 1;
        }
        clause_ptr.push(clause_entries.len());
        s.push(-(clause.len() as i32));
    }

    // Counting sort into the variable-major view.
    let mut var_ptr = vec![0usize; n + 1];
    for i in 0..n {
        var_ptr[i + 1] = var_ptr[i] + var_degree[i];
    }
    let mut cursor = var_ptr.clone();
    let mut var_entries = vec![(0u32, 0i8); clause_entries.len()];
    for (j, clause) in clauses.iter().enumerate() {
        for lit in clause {
            let sign: i8 = if lit.is_positive() { 1 } else { -1 };
            var_entries[cursor[lit.var()]] = (j as u32, sign);
            cursor[lit.var()] += 1;
        }
    }

    IncidenceMatrix {
        num_vars: n,
        num_clauses: m,
        clause_ptr,
        clause_entries,
        var_ptr,
        var_entries,
        s,
    }
}

impl IncidenceMatrix {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    pub fn s(&self) -> &[i32] {
        &self.s
    }

    /// (variable, sign) pairs of clause `j`.
    pub fn clause_entries(&self, j: usize) -> &[(u32, i8)] {
        &self.clause_entries[self.clause_ptr[j]..self.clause_ptr[j + 1]]
    }

    /// (clause, sign) pairs of variable `i`.
    pub fn var_entries(&self, i: usize) -> &[(u32, i8)] {
        &self.var_entries[self.var_ptr[i]..self.var_ptr[i + 1]]
    }

    /// Number of active clauses variable `i` appears in.
    pub fn var_degree(&self, i: usize) -> usize {
        self.var_ptr[i + 1] - self.var_ptr[i]
    }

    /// Forward pass `f_j = sum_i tanh(x_i) * W[i][j]` into a caller-owned
    /// buffer; the allocation-free path the solver loop runs on.
    pub fn forward_into(&self, x: &[f64], act: &mut Activation) -> Result<(), EncodingError> {
        if x.len() != self.num_vars {
            return Err(EncodingError::InputLength {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        act.t.resize(self.num_vars, 0.0);
        act.f.resize(self.num_clauses, 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if !xi.is_finite() {
                return Err(EncodingError::NonFinite(i));
            }
            act.t[i] = xi.tanh();
        }
        for j in 0..self.num_clauses {
            let mut acc = 0.0;
            for &(i, sign) in self.clause_entries(j) {
                acc += f64::from(sign) * act.t[i as usize];
            }
            act.f[j] = acc;
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Activation, EncodingError> {
        let mut act = Activation::zeros(self.num_vars, self.num_clauses);
        self.forward_into(x, &mut act)?;
        Ok(act)
    }

    /// Exact falsification mask by direct literal scan: `mask[j]` is true
    /// iff clause `j` has no satisfied literal under `a`.
    pub fn unsat_mask_into(&self, a: &Assignment, mask: &mut Vec<bool>) {
        debug_assert_eq!(a.len(), self.num_vars);
        mask.clear();
        mask.resize(self.num_clauses, false);
        for (j, m) in mask.iter_mut().enumerate() {
            let satisfied = self
                .clause_entries(j)
                .iter()
                .any(|&(i, sign)| (sign > 0) == a.get(i as usize));
            *m = !satisfied;
        }
    }

    pub fn unsat_mask(&self, a: &Assignment) -> Vec<bool> {
        let mut mask = Vec::new();
        self.unsat_mask_into(a, &mut mask);
        mask
    }

    /// The algebraic form of the falsification check: project the
    /// assignment to sign values (`+1` true, `-1` false) and test the column
    /// dot product against `s_j`. Agrees with [`Self::unsat_mask`] on every
    /// clause; every falsified literal contributes `-1`, so the sum reaches
    /// `-len(c_j)` exactly when all literals are falsified.
    pub fn unsat_mask_algebraic(&self, a: &Assignment) -> Vec<bool> {
        debug_assert_eq!(a.len(), self.num_vars);
        (0..self.num_clauses)
            .map(|j| {
                let dot: i32 = self
                    .clause_entries(j)
                    .iter()
                    .map(|&(i, sign)| {
                        let proj: i32 = if a.get(i as usize) { 1 } else { -1 };
                        proj * i32::from(sign)
                    })
                    .sum();
                dot == self.s[j]
            })
            .collect()
    }

    /// Masked mean-squared loss and its gradient. With `U` the set of
    /// masked (falsified) clauses:
    ///
    /// - `loss = (1/|U|) * sum_{j in U} f_j^2`, or `0` when `U` is empty;
    /// - `grad_i = (1 - t_i^2) * (2/|U|) * sum_{j in U} f_j * W[i][j]`.
    pub fn loss_and_grad_into(
        &self,
        act: &Activation,
        mask: &[bool],
        grad: &mut [f64],
    ) -> f64 {
        debug_assert_eq!(mask.len(), self.num_clauses);
        debug_assert_eq!(grad.len(), self.num_vars);
        let unsat = mask.iter().filter(|&&b| b).count();
        if unsat == 0 {
            grad.fill(0.0);
            return 0.0;
        }
        let scale = 2.0 / unsat as f64;
        let mut loss = 0.0;
        for (j, &masked) in mask.iter().enumerate() {
            if masked {
                loss += act.f[j] * act.f[j];
            }
        }
        loss /= unsat as f64;
        for (i, g) in grad.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(j, sign) in self.var_entries(i) {
                if mask[j as usize] {
                    acc += f64::from(sign) * act.f[j as usize];
                }
            }
            *g = (1.0 - act.t[i] * act.t[i]) * scale * acc;
        }
        loss
    }

    pub fn loss_and_grad(&self, act: &Activation, mask: &[bool]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.num_vars];
        let loss = self.loss_and_grad_into(act, mask, &mut grad);
        (loss, grad)
    }
}

/// Projects a relaxation vector onto Booleans: `x_i > 0` maps to true, and
/// exact zero maps to false (deterministic tie-break).
pub fn project(x: &[f64]) -> Assignment {
    Assignment::new(x.iter().map(|&xi| xi > 0.0).collect())
}

/// Allocation-free projection for the solver loop.
pub fn project_into(x: &[f64], a: &mut Assignment) {
    debug_assert_eq!(a.len(), x.len());
    for (i, &xi) in x.iter().enumerate() {
        a.set(i, xi > 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{preprocess, Formula};
    use approx::assert_abs_diff_eq;

    fn example_matrix() -> IncidenceMatrix {
        let f = Formula::from_ints(2, vec![vec![-1], vec![-2], vec![1, 2]]).unwrap();
        build_incidence(&preprocess(f))
    }

    #[test]
    fn worked_example_matrix() {
        // W = [[-1, 0, 1], [0, -1, 1]], s = [-1, -1, -2]
        let w = example_matrix();
        assert_eq!(w.num_vars(), 2);
        assert_eq!(w.num_clauses(), 3);
        assert_eq!(w.s(), &[-1, -1, -2]);
        assert_eq!(w.clause_entries(0), &[(0, -1)]);
        assert_eq!(w.clause_entries(1), &[(1, -1)]);
        assert_eq!(w.clause_entries(2), &[(0, 1), (1, 1)]);
        assert_eq!(w.var_entries(0), &[(0, -1), (2, 1)]);
        assert_eq!(w.var_entries(1), &[(1, -1), (2, 1)]);
    }

    #[test]
    fn unit_clause_matrix() {
        let f = Formula::from_ints(1, vec![vec![1]]).unwrap();
        let w = build_incidence(&preprocess(f));
        assert_eq!(w.clause_entries(0), &[(0, 1)]);
        assert_eq!(w.s(), &[-1]);
    }

    #[test]
    fn s_matches_clause_lengths() {
        let f = Formula::from_ints(3, vec![vec![1, 2, 3], vec![-2], vec![1, -3]]).unwrap();
        let w = build_incidence(&preprocess(f));
        for j in 0..w.num_clauses() {
            assert_eq!(w.s()[j], -(w.clause_entries(j).len() as i32));
        }
    }

    #[test]
    fn pigeonhole_incidence_shape() {
        let f = crate::generators::php(2).unwrap();
        let cf = preprocess(f);
        let w = build_incidence(&cf);
        assert_eq!(w.num_vars(), 6);
        assert_eq!(w.num_clauses(), 9);
        for (j, clause) in cf.active_clauses().iter().enumerate() {
            assert_eq!(w.clause_entries(j).len(), clause.len());
            assert_eq!(w.s()[j], -(clause.len() as i32));
        }
        // three pigeon clauses of length 2, six exclusion pairs
        let lengths: Vec<usize> = (0..9).map(|j| w.clause_entries(j).len()).collect();
        assert_eq!(lengths, vec![2; 9]);
    }

    #[test]
    fn forward_worked_example() {
        let w = example_matrix();
        let act = w.forward(&[0.43, 1.27]).unwrap();
        // independently computed: [-tanh(0.43), -tanh(1.27), tanh(0.43)+tanh(1.27)]
        assert_abs_diff_eq!(act.f[0], -0.405321308689463, epsilon = 1e-12);
        assert_abs_diff_eq!(act.f[1], -0.8537976531552436, epsilon = 1e-12);
        assert_abs_diff_eq!(act.f[2], 1.2591189618447065, epsilon = 1e-12);
        // within the coarser published rounding as well
        assert_abs_diff_eq!(act.f[0], -0.41, epsilon = 5e-3);
        assert_abs_diff_eq!(act.f[1], -0.85, epsilon = 5e-3);
        assert_abs_diff_eq!(act.f[2], 1.26, epsilon = 5e-3);
    }

    #[test]
    fn forward_zero_input() {
        let w = example_matrix();
        let act = w.forward(&[0.0, 0.0]).unwrap();
        assert_eq!(act.f, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_is_odd() {
        let w = example_matrix();
        let pos = w.forward(&[0.43, 1.27]).unwrap();
        let neg = w.forward(&[-0.43, -1.27]).unwrap();
        for (a, b) in pos.f.iter().zip(&neg.f) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_rejects_non_finite() {
        let w = example_matrix();
        assert!(matches!(
            w.forward(&[f64::NAN, 0.0]).unwrap_err(),
            EncodingError::NonFinite(0)
        ));
        assert!(matches!(
            w.forward(&[0.0]).unwrap_err(),
            EncodingError::InputLength {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn project_thresholds() {
        assert_eq!(project(&[0.43, 1.27]).bits(), &[true, true]);
        assert_eq!(project(&[0.0]).bits(), &[false]);
        assert_eq!(project(&[-1.27, 0.43]).bits(), &[false, true]);
    }

    #[test]
    fn mask_worked_example() {
        let w = example_matrix();
        let mask = w.unsat_mask(&Assignment::new(vec![true, true]));
        assert_eq!(mask, vec![true, true, false]);
        let mask = w.unsat_mask(&Assignment::new(vec![false, true]));
        assert_eq!(mask, vec![false, true, false]);
    }

    #[test]
    fn algebraic_mask_matches_scan() {
        let w = example_matrix();
        for bits in [
            vec![false, false],
            vec![false, true],
            vec![true, false],
            vec![true, true],
        ] {
            let a = Assignment::new(bits);
            assert_eq!(w.unsat_mask(&a), w.unsat_mask_algebraic(&a));
        }
    }

    #[test]
    fn loss_and_grad_worked_example() {
        let w = example_matrix();
        let act = w.forward(&[0.43, 1.27]).unwrap();
        let mask = w.unsat_mask(&project(&[0.43, 1.27]));
        let (loss, grad) = w.loss_and_grad(&act, &mask);
        // frozen from an independent computation, cross-checked against
        // central finite differences of the masked loss
        assert_abs_diff_eq!(loss, 0.4466278979055703, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], 0.338732950247206, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[1], 0.2314044086386624, epsilon = 1e-12);
    }

    #[test]
    fn loss_zero_when_all_satisfied() {
        let f = Formula::from_ints(2, vec![vec![1, 2]]).unwrap();
        let w = build_incidence(&preprocess(f));
        let x = [0.5, 0.5];
        let act = w.forward(&x).unwrap();
        let mask = w.unsat_mask(&project(&x));
        let (loss, grad) = w.loss_and_grad(&act, &mask);
        assert_eq!(loss, 0.0);
        assert_eq!(grad, vec![0.0, 0.0]);
    }

    #[test]
    fn loss_and_grad_unit_clause() {
        let f = Formula::from_ints(1, vec![vec![1]]).unwrap();
        let w = build_incidence(&preprocess(f));
        let x = [-0.5];
        let act = w.forward(&x).unwrap();
        let mask = w.unsat_mask(&project(&x));
        assert_eq!(mask, vec![true]);
        let (loss, grad) = w.loss_and_grad(&act, &mask);
        assert_abs_diff_eq!(act.f[0], -0.4621171572600098, epsilon = 1e-12);
        assert_abs_diff_eq!(loss, 0.2135522670340726, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], -0.7268619813835873, epsilon = 1e-12);
    }

    #[test]
    fn activation_strictly_bounded_by_clause_length() {
        let f = Formula::from_ints(3, vec![vec![1, 2, 3], vec![-1, -2]]).unwrap();
        let w = build_incidence(&preprocess(f));
        let act = w.forward(&[50.0, -50.0, 1e8]).unwrap();
        for j in 0..w.num_clauses() {
            assert!(act.f[j].abs() < w.clause_entries(j).len() as f64);
        }
    }
}
