//! Differential operators `Σ c·z^d·ħ^j·q_{o₁}⋯q_{o_p}·∂_{i₁}⋯∂_{i_k}` acting on `𝒜[[ħ]]`.
//!
//! Sign convention: derivatives act right to left (`∂_{i_k}` first), each `∂_x` is a left
//! derivation of parity `|x|`, and the outputs multiply on the left. With this convention
//! `∂_a ∂_b (q_a q_b) = -1` for odd `a`, `b`, and `∂_a ∂_b (q_a q_b) = 1` when either is even.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::algebra::{AlgebraElement, GenId, Parity, Registry, TermKey, Word};
use crate::error::{Error, Result};
use crate::lattice::{add_exp, Exponent, LatticeMap};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpTerm {
    pub coeff: Rational,
    pub exp: Exponent,
    pub hbar: u32,
    pub outputs: Vec<GenId>,
    pub inputs: Vec<GenId>,
    /// Genus of the curve the term counts; informational for hand-built operators.
    pub genus: u32,
}

impl OpTerm {
    pub fn parity(&self, reg: &Registry) -> Parity {
        self.outputs
            .iter()
            .chain(&self.inputs)
            .fold(Parity::Even, |p, g| p.plus(reg.parity(*g)))
    }

    fn output_action(&self, reg: &Registry) -> Rational {
        self.outputs.iter().fold(Rational::zero(), |a, g| a + reg.action(*g))
    }

    fn input_action(&self, reg: &Registry) -> Rational {
        self.inputs.iter().fold(Rational::zero(), |a, g| a + reg.action(*g))
    }
}

/// Outputs, inputs, exponent, `ħ`-power and genus.
type TermShape = (Vec<GenId>, Vec<GenId>, Exponent, u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialOperator {
    pub rank: usize,
    pub terms: Vec<OpTerm>,
}

/// Result of `verify_square_zero`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SquareCheck {
    Holds { monomials_checked: usize },
    Fails { monomial: Word, residual: AlgebraElement },
}

impl SquareCheck {
    pub fn holds(&self) -> bool {
        matches!(self, SquareCheck::Holds { .. })
    }
}

/// Per-term data with the output product pre-normalized.
struct Compiled {
    coeff: Rational,
    exp: Exponent,
    hbar: u32,
    inputs: Vec<GenId>,
    output: Word,
}

impl DifferentialOperator {
    pub fn zero(rank: usize) -> Self {
        DifferentialOperator { rank, terms: Vec::new() }
    }

    pub fn push(&mut self, term: OpTerm) {
        self.terms.push(term);
    }

    /// Merges terms with identical shape and drops the ones that cancel.
    pub fn consolidated(&self, reg: &Registry) -> Self {
        let mut acc: BTreeMap<TermShape, Rational> = BTreeMap::new();
        for t in &self.terms {
            let (neg_out, out) = match Word::from_product(reg, &t.outputs) {
                Some(x) => x,
                None => continue,
            };
            let mut inputs = t.inputs.clone();
            let neg_in = sort_with_sign(reg, &mut inputs);
            let mut c = t.coeff.clone();
            if neg_out != neg_in {
                c = -c;
            }
            *acc.entry((out.expand(), inputs, t.exp.clone(), t.hbar, t.genus)).or_insert_with(Rational::zero) += c;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((outputs, inputs, exp, hbar, genus), coeff)| OpTerm { coeff, exp, hbar, outputs, inputs, genus })
            .collect();
        DifferentialOperator { rank: self.rank, terms }
    }

    pub fn is_odd(&self, reg: &Registry) -> bool {
        self.terms.iter().all(|t| t.parity(reg).is_odd())
    }

    /// No term without inputs, so `D(1) = 0`.
    pub fn kills_one(&self) -> bool {
        self.terms.iter().all(|t| !t.inputs.is_empty())
    }

    /// Every term whose outputs have action at least its inputs, by position.
    pub fn action_violations(&self, reg: &Registry, strict: bool) -> Vec<usize> {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let (o, i) = (t.output_action(reg), t.input_action(reg));
                if strict {
                    o >= i
                } else {
                    o > i
                }
            })
            .map(|(k, _)| k)
            .collect()
    }

    pub fn map_coefficients(&self, map: &LatticeMap) -> Result<Self> {
        if map.source_rank != self.rank {
            return Err(Error::RankMismatch { expected: map.source_rank, found: self.rank });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| OpTerm { exp: map.apply(&t.exp), ..t.clone() })
            .collect();
        Ok(DifferentialOperator { rank: map.target_rank, terms })
    }

    fn compile(&self, reg: &Registry) -> Vec<Compiled> {
        let mut out = Vec::new();
        for t in &self.terms {
            if let Some((neg, w)) = Word::from_product(reg, &t.outputs) {
                let coeff = if neg { -t.coeff.clone() } else { t.coeff.clone() };
                out.push(Compiled { coeff, exp: t.exp.clone(), hbar: t.hbar, inputs: t.inputs.clone(), output: w });
            }
        }
        out
    }
}

fn sort_with_sign(reg: &Registry, v: &mut [GenId]) -> bool {
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
    negative
}

/// Applies one compiled term to a word; at most one word results.
fn apply_to_word(reg: &Registry, t: &Compiled, w: &Word) -> Option<(Rational, Word)> {
    let mut cur = w.clone();
    let mut c = t.coeff.clone();
    for x in t.inputs.iter().rev() {
        let (k, neg, rest) = cur.derive(*x, reg)?;
        c *= Rational::from_integer(k.into());
        if neg {
            c = -c;
        }
        cur = rest;
    }
    let (neg, out) = t.output.multiply(&cur, reg)?;
    if neg {
        c = -c;
    }
    Some((c, out))
}

fn apply_compiled(reg: &Registry, ops: &[Compiled], rank: usize, x: &AlgebraElement, hbar_max: Option<u32>) -> AlgebraElement {
    let mut out = AlgebraElement::zero(rank);
    for (k, a) in x.terms() {
        for t in ops {
            let hbar = k.hbar + t.hbar;
            if hbar_max.is_some_and(|m| hbar > m) {
                continue;
            }
            if let Some((c, w)) = apply_to_word(reg, t, &k.word) {
                out.add_term(TermKey { word: w, exp: add_exp(&k.exp, &t.exp), hbar }, c * a);
            }
        }
    }
    out
}

/// `D(x)`, exact.
pub fn apply_operator(reg: &Registry, d: &DifferentialOperator, x: &AlgebraElement) -> AlgebraElement {
    apply_compiled(reg, &d.compile(reg), d.rank, x, None)
}

/// `D(x)` with every term above `ħ^hbar_max` discarded.
pub fn apply_truncated(reg: &Registry, d: &DifferentialOperator, x: &AlgebraElement, hbar_max: u32) -> AlgebraElement {
    apply_compiled(reg, &d.compile(reg), d.rank, x, Some(hbar_max))
}

fn bracket_homogeneous(reg: &Registry, d: &DifferentialOperator, x: &AlgebraElement, px: Parity, y: &AlgebraElement) -> AlgebraElement {
    let ops = d.compile(reg);
    let dxy = apply_compiled(reg, &ops, d.rank, &x.mul(y, reg), None);
    let dx_y = apply_compiled(reg, &ops, d.rank, x, None).mul(y, reg);
    let x_dy = x.mul(&apply_compiled(reg, &ops, d.rank, y, None), reg);
    let x_dy = if px.is_odd() { x_dy.neg() } else { x_dy };
    dxy.sub(&dx_y).sub(&x_dy)
}

/// `[x, y] = D(xy) − D(x)y − (−1)^{|x|} x D(y)`, extended bilinearly over parity parts.
pub fn bracket(reg: &Registry, d: &DifferentialOperator, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let (xe, xo) = x.parity_parts(reg);
    let mut out = AlgebraElement::zero(d.rank);
    if !xe.is_zero() {
        out.add_assign(&bracket_homogeneous(reg, d, &xe, Parity::Even, y));
    }
    if !xo.is_zero() {
        out.add_assign(&bracket_homogeneous(reg, d, &xo, Parity::Odd, y));
    }
    out
}

/// All canonical words over `gens` with total action strictly below `bound`.
pub fn words_below(reg: &Registry, gens: &[GenId], bound: &Rational) -> Vec<Word> {
    let mut gens: Vec<GenId> = gens.to_vec();
    gens.sort_unstable();
    gens.dedup();
    let mut out = Vec::new();
    let mut stack: Vec<(GenId, u32)> = Vec::new();
    fn rec(
        reg: &Registry,
        gens: &[GenId],
        start: usize,
        action: Rational,
        bound: &Rational,
        stack: &mut Vec<(GenId, u32)>,
        out: &mut Vec<Word>,
    ) {
        out.push(Word::from_product(reg, &expand(stack)).map(|(_, w)| w).unwrap_or_default());
        for (pos, g) in gens.iter().enumerate().skip(start) {
            let a = reg.action(*g);
            let max_k = if reg.parity(*g).is_odd() { 1 } else { u32::MAX };
            let mut k = 0;
            let mut acc = action.clone();
            while k < max_k {
                acc += a;
                if &acc >= bound {
                    break;
                }
                k += 1;
                stack.push((*g, k));
                rec(reg, gens, pos + 1, acc.clone(), bound, stack, out);
                stack.pop();
            }
        }
    }
    fn expand(stack: &[(GenId, u32)]) -> Vec<GenId> {
        let mut v = Vec::new();
        for (g, k) in stack {
            for _ in 0..*k {
                v.push(*g);
            }
        }
        v
    }
    if &Rational::zero() < bound {
        rec(reg, &gens, 0, Rational::zero(), bound, &mut stack, &mut out);
    }
    out.sort();
    out
}

/// Checks `D(D(m)) ≡ 0 mod ħ^{hbar_bound+1}` for every word `m` of action below `action_bound`.
///
/// `D` commutes with `z^d` and `ħ`, so checking words with trivial coefficient suffices.
pub fn verify_square_zero(
    reg: &Registry,
    d: &DifferentialOperator,
    gens: &[GenId],
    action_bound: &Rational,
    hbar_bound: u32,
) -> Result<SquareCheck> {
    if let Some(&term) = d.action_violations(reg, false).first() {
        return Err(Error::TruncationViolation { term });
    }
    let ops = d.compile(reg);
    let words = words_below(reg, gens, action_bound);
    let checked = words.len();
    for w in words {
        let m = AlgebraElement::from_word(d.rank, w.clone(), Rational::one());
        let once = apply_compiled(reg, &ops, d.rank, &m, Some(hbar_bound));
        let twice = apply_compiled(reg, &ops, d.rank, &once, Some(hbar_bound));
        if !twice.is_zero() {
            return Ok(SquareCheck::Fails { monomial: w, residual: twice });
        }
    }
    Ok(SquareCheck::Holds { monomials_checked: checked })
}

/// Builder shorthand for hand-written operators.
pub fn term(coeff: Rational, hbar: u32, outputs: &[GenId], inputs: &[GenId], rank: usize) -> OpTerm {
    OpTerm { coeff, exp: vec![0; rank], hbar, outputs: outputs.to_vec(), inputs: inputs.to_vec(), genus: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{monomial, Generator};

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn reg(spec: &[(&str, Parity)]) -> Registry {
        let mut r = Registry::new(0);
        for (name, p) in spec {
            r.add(Generator { name: (*name).into(), parity: *p, action: q(1), multiplicity: 1 }).unwrap();
        }
        r
    }

    #[test]
    fn second_order_odd_pair_gives_minus_hbar() {
        let r = reg(&[("a", Parity::Odd), ("b", Parity::Odd)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 1, &[], &[0, 1], 0)] };
        let x = monomial(&r, &["a", "b"], q(1), 0).unwrap();
        assert_eq!(apply_operator(&r, &d, &x), AlgebraElement::hbar_power(0, 1).neg());
    }

    #[test]
    fn operator_kills_constants() {
        let r = reg(&[("a", Parity::Odd), ("e", Parity::Even)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 0, &[0], &[1], 0), term(q(1), 1, &[], &[0, 1], 0)] };
        assert!(apply_operator(&r, &d, &AlgebraElement::one(0)).is_zero());
    }

    #[test]
    fn unmatched_input_gives_zero() {
        let r = reg(&[("a", Parity::Odd), ("b", Parity::Odd), ("c", Parity::Even)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 0, &[2], &[0], 0)] };
        let x = monomial(&r, &["b"], q(1), 0).unwrap();
        assert!(apply_operator(&r, &d, &x).is_zero());
    }

    #[test]
    fn double_derivative_of_square() {
        let r = reg(&[("e", Parity::Even)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(Rational::new(1.into(), 2.into()), 0, &[], &[0, 0], 0)] };
        let x = monomial(&r, &["e", "e"], q(1), 0).unwrap();
        assert_eq!(apply_operator(&r, &d, &x), AlgebraElement::one(0));
    }

    #[test]
    fn first_order_bracket_vanishes() {
        let r = reg(&[("a", Parity::Odd), ("b", Parity::Odd), ("e", Parity::Even)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 0, &[0], &[2], 0), term(q(3), 0, &[1, 2], &[2], 0)] };
        let x = monomial(&r, &["e", "b"], q(1), 0).unwrap();
        let y = monomial(&r, &["e", "e"], q(2), 0).unwrap();
        assert!(bracket(&r, &d, &x, &y).is_zero());
    }

    #[test]
    fn second_order_bracket_of_generators() {
        // D(q_a q_b) = -ħ, D(q_a) = D(q_b) = 0, so [q_a, q_b] = -ħ.
        let r = reg(&[("a", Parity::Odd), ("b", Parity::Odd)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 1, &[], &[0, 1], 0)] };
        let x = monomial(&r, &["a"], q(1), 0).unwrap();
        let y = monomial(&r, &["b"], q(1), 0).unwrap();
        assert_eq!(bracket(&r, &d, &x, &y), AlgebraElement::hbar_power(0, 1).neg());
    }

    #[test]
    fn odd_derivative_squares_to_zero() {
        let r = reg(&[("a", Parity::Odd), ("e", Parity::Even)]);
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 0, &[], &[0], 0)] };
        let check = verify_square_zero(&r, &d, &[0, 1], &q(4), 3).unwrap();
        assert!(check.holds());
    }

    fn morse_like() -> (Registry, DifferentialOperator) {
        // Two saddles h1, h2 between a minimum m and a maximum M with cancelling flow lines.
        let r = reg(&[("m", Parity::Even), ("h1", Parity::Odd), ("h2", Parity::Odd), ("M", Parity::Even)]);
        let d = DifferentialOperator {
            rank: 0,
            terms: vec![
                term(q(1), 0, &[1], &[3], 0),
                term(q(1), 0, &[2], &[3], 0),
                term(q(1), 1, &[], &[0, 1], 0),
                term(q(-1), 1, &[], &[0, 2], 0),
            ],
        };
        (r, d)
    }

    #[test]
    fn cancelling_pairs_square_to_zero() {
        let (r, d) = morse_like();
        assert!(verify_square_zero(&r, &d, &[0, 1, 2, 3], &q(5), 3).unwrap().holds());
    }

    #[test]
    fn flipped_sign_is_detected() {
        let (r, mut d) = morse_like();
        d.terms[3].coeff = q(1);
        match verify_square_zero(&r, &d, &[0, 1, 2, 3], &q(5), 3).unwrap() {
            SquareCheck::Fails { monomial, residual } => {
                assert!(!residual.is_zero());
                assert!(monomial.exponent_of(0) > 0 && monomial.exponent_of(3) > 0);
            }
            SquareCheck::Holds { .. } => panic!("mutation not detected"),
        }
    }

    #[test]
    fn action_increasing_term_is_rejected() {
        let mut r = Registry::new(0);
        r.add(Generator { name: "a".into(), parity: Parity::Odd, action: q(1), multiplicity: 1 }).unwrap();
        r.add(Generator { name: "e".into(), parity: Parity::Even, action: q(2), multiplicity: 1 }).unwrap();
        let d = DifferentialOperator { rank: 0, terms: vec![term(q(1), 0, &[1], &[0], 0)] };
        assert_eq!(verify_square_zero(&r, &d, &[0, 1], &q(3), 1), Err(Error::TruncationViolation { term: 0 }));
    }

    #[test]
    fn consolidation_cancels_opposite_records() {
        let (r, mut d) = morse_like();
        d.terms.push(term(q(-1), 1, &[], &[1, 0], 0));
        let c = d.consolidated(&r);
        assert_eq!(c.terms.len(), 3);
    }

    #[test]
    fn words_respect_action_and_odd_squares() {
        let r = reg(&[("a", Parity::Odd), ("e", Parity::Even)]);
        let ws = words_below(&r, &[0, 1], &q(3));
        // 1, a, e, a·e, e², (a·e² has action 3)
        assert_eq!(ws.len(), 5);
    }
}
