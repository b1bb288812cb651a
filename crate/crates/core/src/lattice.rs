//! Group rings `ℚ[ℤ^rank]` of Laurent monomials `z^d`, and lattice maps between them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Rational;

pub type Exponent = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientLattice {
    pub rank: usize,
    pub labels: Option<Vec<String>>,
}

impl CoefficientLattice {
    pub fn untwisted() -> Self {
        CoefficientLattice { rank: 0, labels: None }
    }

    pub fn of_rank(rank: usize) -> Self {
        CoefficientLattice { rank, labels: None }
    }
}

pub(crate) fn add_exp(a: &[i64], b: &[i64]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn scale_exp(a: &[i64], n: i64) -> Exponent {
    a.iter().map(|x| x * n).collect()
}

/// Finite sum `Σ a_d z^d` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupRingElement {
    rank: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl GroupRingElement {
    pub fn zero(rank: usize) -> Self {
        GroupRingElement { rank, terms: BTreeMap::new() }
    }

    pub fn one(rank: usize) -> Self {
        Self::constant(rank, Rational::one())
    }

    pub fn constant(rank: usize, c: Rational) -> Self {
        Self::monomial(vec![0; rank], c)
    }

    /// `c · z^exp`; the rank is the length of `exp`.
    pub fn monomial(exp: Exponent, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        let rank = exp.len();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        GroupRingElement { rank, terms }
    }

    pub fn from_terms(rank: usize, terms: impl IntoIterator<Item = (Exponent, Rational)>) -> Result<Self> {
        let mut out = Self::zero(rank);
        for (e, c) in terms {
            if e.len() != rank {
                return Err(Error::RankMismatch { expected: rank, found: e.len() });
            }
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exp: &[i64]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub(crate) fn add_term(&mut self, exp: Exponent, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        GroupRingElement {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.rank);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.rank);
        for (e1, a) in &self.terms {
            for (e2, b) in &other.terms {
                out.add_term(add_exp(e1, e2), a * b);
            }
        }
        out
    }

    /// Pushes every exponent through `map`.
    pub fn map_exponents(&self, map: &LatticeMap) -> Result<Self> {
        if map.source_rank != self.rank {
            return Err(Error::RankMismatch { expected: map.source_rank, found: self.rank });
        }
        let mut out = Self::zero(map.target_rank);
        for (e, c) in &self.terms {
            out.add_term(map.apply(e), c.clone());
        }
        Ok(out)
    }
}

impl fmt::Display for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", c)?;
            if e.iter().any(|x| *x != 0) {
                write!(f, "·z^{:?}", e)?;
            }
        }
        Ok(())
    }
}

/// Integer matrix sending exponents of rank `source_rank` to rank `target_rank`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeMap {
    pub source_rank: usize,
    pub target_rank: usize,
    /// Row-major, `target_rank` rows of length `source_rank`.
    pub rows: Vec<Vec<i64>>,
}

impl LatticeMap {
    pub fn new(source_rank: usize, rows: Vec<Vec<i64>>) -> Result<Self> {
        for r in &rows {
            if r.len() != source_rank {
                return Err(Error::RankMismatch { expected: source_rank, found: r.len() });
            }
        }
        Ok(LatticeMap { source_rank, target_rank: rows.len(), rows })
    }

    pub fn identity(rank: usize) -> Self {
        let rows = (0..rank)
            .map(|i| (0..rank).map(|j| i64::from(i == j)).collect())
            .collect();
        LatticeMap { source_rank: rank, target_rank: rank, rows }
    }

    /// Collapse to rank 0: every `z^d` becomes `1`.
    pub fn to_untwisted(source_rank: usize) -> Self {
        LatticeMap { source_rank, target_rank: 0, rows: Vec::new() }
    }

    /// The rank-one quotient by `ker Ω` for an integral functional `Ω`.
    pub fn functional(omega: &[i64]) -> Self {
        LatticeMap { source_rank: omega.len(), target_rank: 1, rows: vec![omega.to_vec()] }
    }

    pub fn apply(&self, e: &[i64]) -> Exponent {
        self.rows
            .iter()
            .map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum())
            .collect()
    }
}
