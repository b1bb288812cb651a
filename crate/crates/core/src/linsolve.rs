//! Exact sparse Gaussian elimination over ℚ.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::Rational;

pub type SparseVec = BTreeMap<usize, Rational>;

/// Row echelon form, pivot rows normalized to leading coefficient one.
#[derive(Default)]
struct Echelon {
    pivots: BTreeMap<usize, (SparseVec, Rational)>,
}

impl Echelon {
    /// Reduces `row` against the stored pivots. `Err(())` means the row reduced to `0 = c ≠ 0`.
    fn insert(&mut self, mut row: SparseVec, mut rhs: Rational) -> Result<bool, ()> {
        loop {
            let Some((&c, lead)) = row.iter().next() else {
                return if rhs.is_zero() { Ok(false) } else { Err(()) };
            };
            let lead = lead.clone();
            match self.pivots.get(&c) {
                Some((prow, prhs)) => {
                    for (k, v) in prow {
                        let nv = row.get(k).cloned().unwrap_or_else(Rational::zero) - &lead * v;
                        if nv.is_zero() {
                            row.remove(k);
                        } else {
                            row.insert(*k, nv);
                        }
                    }
                    rhs -= &lead * prhs;
                }
                None => {
                    let inv = Rational::one() / lead;
                    for v in row.values_mut() {
                        *v *= &inv;
                    }
                    rhs *= inv;
                    self.pivots.insert(c, (row, rhs));
                    return Ok(true);
                }
            }
        }
    }

    /// Back substitution with every free variable set to zero.
    fn particular(&self) -> SparseVec {
        let mut x: SparseVec = BTreeMap::new();
        for (&c, (row, rhs)) in self.pivots.iter().rev() {
            let mut v = rhs.clone();
            for (k, a) in row.range(c + 1..) {
                if let Some(xk) = x.get(k) {
                    v -= a * xk;
                }
            }
            if !v.is_zero() {
                x.insert(c, v);
            }
        }
        x
    }
}

/// Solves `Σ_j x_j · columns[j] = rhs`, returning a sparse solution or `None`.
///
/// Only the connected component of the row/column incidence graph containing the support of
/// `rhs` is eliminated; columns outside it are set to zero. Row indices are arbitrary.
pub fn solve(columns: &[SparseVec], rhs: &SparseVec) -> Option<SparseVec> {
    if rhs.is_empty() {
        return Some(BTreeMap::new());
    }
    let mut by_row: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, col) in columns.iter().enumerate() {
        for r in col.keys() {
            by_row.entry(*r).or_default().push(j);
        }
    }
    let mut rows_seen: BTreeSet<usize> = rhs.keys().copied().collect();
    let mut cols_seen: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = rows_seen.iter().copied().collect();
    while let Some(r) = queue.pop_front() {
        for &j in by_row.get(&r).map(Vec::as_slice).unwrap_or(&[]) {
            if cols_seen.insert(j) {
                for r2 in columns[j].keys() {
                    if rows_seen.insert(*r2) {
                        queue.push_back(*r2);
                    }
                }
            }
        }
    }
    let mut rows: BTreeMap<usize, SparseVec> = rows_seen.iter().map(|r| (*r, BTreeMap::new())).collect();
    for &j in &cols_seen {
        for (r, v) in &columns[j] {
            rows.get_mut(r).expect("row in component").insert(j, v.clone());
        }
    }
    let mut ech = Echelon::default();
    for (r, row) in rows {
        let b = rhs.get(&r).cloned().unwrap_or_else(Rational::zero);
        if ech.insert(row, b).is_err() {
            return None;
        }
    }
    Some(ech.particular())
}

/// Rank of a dense rational matrix given by rows.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut ech = Echelon::default();
    let mut r = 0;
    for row in rows {
        let sparse: SparseVec = row.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i, v.clone())).collect();
        if ech.insert(sparse, Rational::zero()) == Ok(true) {
            r += 1;
        }
    }
    r
}

/// Rank of an integer matrix.
pub fn rank_i64(rows: &[Vec<i64>]) -> usize {
    let q: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|v| Rational::from_integer((*v).into())).collect())
        .collect();
    rank(&q)
}

/// Dense matrix product helper used by tests and by the Morse complex.
pub fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            let mut out = vec![Rational::zero(); cols];
            for k in 0..inner {
                if row[k].is_zero() {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o += &row[k] * &b[k][j];
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn col(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|(r, v)| (*r, q(*v))).collect()
    }

    fn check(columns: &[SparseVec], rhs: &SparseVec, x: &SparseVec) -> bool {
        let mut acc: SparseVec = BTreeMap::new();
        for (j, v) in x {
            for (r, a) in &columns[*j] {
                *acc.entry(*r).or_insert_with(Rational::zero) += a * v;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        &acc == rhs
    }

    #[test]
    fn solves_small_system() {
        let cols = vec![col(&[(0, 1), (1, 1)]), col(&[(1, 2)]), col(&[(5, 3)])];
        let rhs = col(&[(0, 2), (1, 6)]);
        let x = solve(&cols, &rhs).unwrap();
        assert!(check(&cols, &rhs, &x));
        assert!(!x.contains_key(&2));
    }

    #[test]
    fn detects_inconsistency() {
        let cols = vec![col(&[(0, 1), (1, 1)])];
        assert!(solve(&cols, &col(&[(0, 1)])).is_none());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        assert_eq!(solve(&[col(&[(0, 1)])], &BTreeMap::new()), Some(BTreeMap::new()));
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]];
        assert_eq!(rank_i64(&m), 2);
    }
}
