//! The ℤ₂-graded commutative algebra `𝒜[[ħ]]` over a group ring, truncated to polynomials.
//!
//! Monomials are stored in canonical order (generator ids ascending). Reordering two odd
//! generators contributes a factor `-1`, and an odd generator squares to zero.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{add_exp, Exponent, GroupRingElement, LatticeMap};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Grading of `q_γ` in dimension three: `(μ_CZ + 1) mod 2`.
    pub fn from_cz(cz: i64) -> Parity {
        if (cz + 1).rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn plus(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

pub type GenId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub parity: Parity,
    pub action: Rational,
    pub multiplicity: u32,
}

/// Generators in canonical order, together with the coefficient lattice rank.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    gens: Vec<Generator>,
    index: BTreeMap<String, GenId>,
    rank: usize,
}

impl Registry {
    pub fn new(rank: usize) -> Self {
        Registry { gens: Vec::new(), index: BTreeMap::new(), rank }
    }

    pub fn add(&mut self, gen: Generator) -> Result<GenId> {
        if self.index.contains_key(&gen.name) {
            return Err(Error::InvalidDescriptor(format!("duplicate generator `{}`", gen.name)));
        }
        if !gen.action.is_positive() {
            return Err(Error::InvalidDescriptor(format!("generator `{}` has non-positive action", gen.name)));
        }
        let id = self.gens.len();
        self.index.insert(gen.name.clone(), id);
        self.gens.push(gen);
        Ok(id)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn get(&self, id: GenId) -> &Generator {
        &self.gens[id]
    }

    pub fn id(&self, name: &str) -> Result<GenId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownGenerator(name.into()))
    }

    pub fn check(&self, id: GenId) -> Result<()> {
        if id < self.gens.len() {
            Ok(())
        } else {
            Err(Error::UnknownGenerator(format!("#{id}")))
        }
    }

    pub fn parity(&self, id: GenId) -> Parity {
        self.gens[id].parity
    }

    pub fn action(&self, id: GenId) -> &Rational {
        &self.gens[id].action
    }

    pub fn ids(&self) -> core::ops::Range<GenId> {
        0..self.gens.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }
}

/// A product `q_{a₁}^{k₁}⋯q_{a_s}^{k_s}` with `a₁ < ⋯ < a_s`; odd generators have `k = 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<(GenId, u32)>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn factors(&self) -> &[(GenId, u32)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    pub fn exponent_of(&self, id: GenId) -> u32 {
        self.0.iter().find(|(g, _)| *g == id).map_or(0, |(_, k)| *k)
    }

    pub fn parity(&self, reg: &Registry) -> Parity {
        let odd = self
            .0
            .iter()
            .filter(|(g, k)| reg.parity(*g).is_odd() && k % 2 == 1)
            .count();
        if odd % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn action(&self, reg: &Registry) -> Rational {
        let mut a = Rational::zero();
        for (g, k) in &self.0 {
            a += reg.action(*g) * Rational::from_integer((*k).into());
        }
        a
    }

    /// Generator ids with repetition, in canonical order.
    pub fn expand(&self) -> Vec<GenId> {
        let mut out = Vec::new();
        for (g, k) in &self.0 {
            for _ in 0..*k {
                out.push(*g);
            }
        }
        out
    }

    /// Sorts an arbitrary product into canonical order. Returns the Koszul sign and the word,
    /// or `None` when an odd generator repeats.
    pub fn from_product(reg: &Registry, gens: &[GenId]) -> Option<(bool, Word)> {
        let mut v: Vec<GenId> = gens.to_vec();
        let mut negative = false;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                if reg.parity(v[j - 1]).is_odd() && reg.parity(v[j]).is_odd() {
                    negative = !negative;
                }
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        let mut out: Vec<(GenId, u32)> = Vec::new();
        for g in v {
            match out.last_mut() {
                Some((h, k)) if *h == g => {
                    if reg.parity(g).is_odd() {
                        return None;
                    }
                    *k += 1;
                }
                _ => out.push((g, 1)),
            }
        }
        Some((negative, Word(out)))
    }

    /// `self · other` in canonical form, with the sign from moving odd factors of `other`
    /// left past larger odd factors of `self`.
    pub fn multiply(&self, other: &Word, reg: &Registry) -> Option<(bool, Word)> {
        let mut negative = false;
        for (b, kb) in &other.0 {
            if !reg.parity(*b).is_odd() || kb % 2 == 0 {
                continue;
            }
            for (a, ka) in &self.0 {
                if reg.parity(*a).is_odd() && ka % 2 == 1 {
                    if a == b {
                        return None;
                    }
                    if a > b {
                        negative = !negative;
                    }
                }
            }
        }
        let mut out: Vec<(GenId, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            if j == other.0.len() || (i < self.0.len() && self.0[i].0 < other.0[j].0) {
                out.push(self.0[i]);
                i += 1;
            } else if i == self.0.len() || other.0[j].0 < self.0[i].0 {
                out.push(other.0[j]);
                j += 1;
            } else {
                out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                i += 1;
                j += 1;
            }
        }
        Some((negative, Word(out)))
    }

    /// Left derivative `∂/∂q_x`: returns the multiplicity factor, the sign, and the word.
    ///
    /// The derivative by an odd generator anticommutes with every odd factor it passes.
    pub fn derive(&self, x: GenId, reg: &Registry) -> Option<(u32, bool, Word)> {
        let pos = self.0.iter().position(|(g, _)| *g == x)?;
        let k = self.0[pos].1;
        let negative = reg.parity(x).is_odd()
            && self.0[..pos]
                .iter()
                .filter(|(g, e)| reg.parity(*g).is_odd() && e % 2 == 1)
                .count()
                % 2
                == 1;
        let mut rest = self.0.clone();
        if k == 1 {
            rest.remove(pos);
        } else {
            rest[pos].1 -= 1;
        }
        Some((k, negative, Word(rest)))
    }

    pub fn render(&self, reg: &Registry) -> String {
        if self.0.is_empty() {
            return String::from("1");
        }
        let mut parts = Vec::new();
        for (g, k) in &self.0 {
            let name = &reg.get(*g).name;
            if *k == 1 {
                parts.push(format!("q[{name}]"));
            } else {
                parts.push(format!("q[{name}]^{k}"));
            }
        }
        parts.join(" ")
    }
}

/// Sort key of a monomial: (generator list, exponent vector, ħ power).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub word: Word,
    pub exp: Exponent,
    pub hbar: u32,
}

/// Unnormalized input monomial: an arbitrary product of generators.
#[derive(Clone, Debug)]
pub struct RawMonomial {
    pub generators: Vec<GenId>,
    pub coefficient: GroupRingElement,
    pub hbar: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlgebraElement {
    rank: usize,
    terms: BTreeMap<TermKey, Rational>,
}

impl AlgebraElement {
    pub fn zero(rank: usize) -> Self {
        AlgebraElement { rank, terms: BTreeMap::new() }
    }

    pub fn one(rank: usize) -> Self {
        Self::hbar_power(rank, 0)
    }

    pub fn hbar_power(rank: usize, k: u32) -> Self {
        let mut e = Self::zero(rank);
        e.add_term(TermKey { word: Word::empty(), exp: vec![0; rank], hbar: k }, Rational::one());
        e
    }

    pub fn from_word(rank: usize, word: Word, c: Rational) -> Self {
        let mut e = Self::zero(rank);
        e.add_term(TermKey { word, exp: vec![0; rank], hbar: 0 }, c);
        e
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &TermKey) -> Rational {
        self.terms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, key: TermKey, c: Rational) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(key.exp.len(), self.rank);
        match self.terms.entry(key) {
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

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.rank);
        for (k, a) in &self.terms {
            out.add_term(k.clone(), a * c);
        }
        out
    }

    /// Multiplies by `c · z^exp · ħ^hbar`.
    pub fn shift(&self, exp: &[i64], hbar: u32) -> Self {
        let mut out = Self::zero(self.rank);
        for (k, a) in &self.terms {
            out.add_term(
                TermKey { word: k.word.clone(), exp: add_exp(&k.exp, exp), hbar: k.hbar + hbar },
                a.clone(),
            );
        }
        out
    }

    pub fn mul(&self, other: &Self, reg: &Registry) -> Self {
        let mut out = Self::zero(self.rank);
        for (k1, a) in &self.terms {
            for (k2, b) in &other.terms {
                if let Some((neg, w)) = k1.word.multiply(&k2.word, reg) {
                    let c = if neg { -(a * b) } else { a * b };
                    out.add_term(
                        TermKey { word: w, exp: add_exp(&k1.exp, &k2.exp), hbar: k1.hbar + k2.hbar },
                        c,
                    );
                }
            }
        }
        out
    }

    /// Drops every term with ħ-power above `max`.
    pub fn truncate_hbar(&self, max: u32) -> Self {
        AlgebraElement {
            rank: self.rank,
            terms: self.terms.iter().filter(|(k, _)| k.hbar <= max).map(|(k, c)| (k.clone(), c.clone())).collect(),
        }
    }

    /// Lowest ħ-power present, `None` for zero.
    pub fn hbar_order(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.hbar).min()
    }

    pub fn max_action(&self, reg: &Registry) -> Rational {
        self.terms.keys().map(|k| k.word.action(reg)).max().unwrap_or_else(Rational::zero)
    }

    /// Splits into even and odd parts.
    pub fn parity_parts(&self, reg: &Registry) -> (Self, Self) {
        let mut even = Self::zero(self.rank);
        let mut odd = Self::zero(self.rank);
        for (k, c) in &self.terms {
            if k.word.parity(reg).is_odd() {
                odd.add_term(k.clone(), c.clone());
            } else {
                even.add_term(k.clone(), c.clone());
            }
        }
        (even, odd)
    }

    /// `Some(p)` when every term has parity `p`; zero counts as even.
    pub fn homogeneous_parity(&self, reg: &Registry) -> Option<Parity> {
        let mut parities = self.terms.keys().map(|k| k.word.parity(reg));
        let first = parities.next().unwrap_or(Parity::Even);
        parities.all(|p| p == first).then_some(first)
    }

    pub fn map_coefficients(&self, map: &LatticeMap) -> Result<Self> {
        if map.source_rank != self.rank {
            return Err(Error::RankMismatch { expected: map.source_rank, found: self.rank });
        }
        let mut out = Self::zero(map.target_rank);
        for (k, c) in &self.terms {
            out.add_term(TermKey { word: k.word.clone(), exp: map.apply(&k.exp), hbar: k.hbar }, c.clone());
        }
        Ok(out)
    }

    pub fn render(&self, reg: &Registry) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut out = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() {
                factors.push(format!("{mag}"));
            }
            if k.exp.iter().any(|x| *x != 0) {
                factors.push(format!("z^{:?}", k.exp));
            }
            match k.hbar {
                0 => {}
                1 => factors.push(String::from("ħ")),
                j => factors.push(format!("ħ^{j}")),
            }
            if !k.word.is_empty() || factors.is_empty() {
                factors.push(k.word.render(reg));
            }
            out.push_str(&factors.join("·"));
        }
        out
    }
}

/// Collects raw products into canonical form.
pub fn normalize(reg: &Registry, raw: &[RawMonomial]) -> Result<AlgebraElement> {
    let mut out = AlgebraElement::zero(reg.rank());
    for m in raw {
        for g in &m.generators {
            reg.check(*g)?;
        }
        if m.coefficient.rank() != reg.rank() {
            return Err(Error::RankMismatch { expected: reg.rank(), found: m.coefficient.rank() });
        }
        let Some((negative, word)) = Word::from_product(reg, &m.generators) else {
            continue;
        };
        for (e, c) in m.coefficient.terms() {
            let c = if negative { -c.clone() } else { c.clone() };
            out.add_term(TermKey { word: word.clone(), exp: e.clone(), hbar: m.hbar }, c);
        }
    }
    Ok(out)
}

/// Convenience: the product of the named generators with coefficient `c`.
pub fn monomial(reg: &Registry, names: &[&str], c: Rational, hbar: u32) -> Result<AlgebraElement> {
    let ids = names.iter().map(|n| reg.id(n)).collect::<Result<Vec<_>>>()?;
    normalize(
        reg,
        &[RawMonomial { generators: ids, coefficient: GroupRingElement::constant(reg.rank(), c), hbar }],
    )
}
