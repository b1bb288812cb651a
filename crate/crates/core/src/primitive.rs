//! Primitives `D(Q) = target` in the truncated complex, by linear solve or by the bracket series.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::One;

use crate::algebra::{AlgebraElement, GenId, Registry, TermKey, Word};
use crate::error::{Error, Result};
use crate::lattice::{add_exp, Exponent};
use crate::linsolve::{self, SparseVec};
use crate::operator::{apply_operator, apply_truncated, bracket, words_below, DifferentialOperator};
use crate::Rational;

/// Truncation for `solve_primitive`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveConfig {
    /// Unknowns are words of action strictly below this bound.
    pub action_bound: Rational,
    /// Unknowns carry `ħ^j` with `j ≤ hbar_bound`.
    pub hbar_bound: u32,
    /// Equations are imposed on `ħ^j` with `j < match_below`.
    pub match_below: u32,
    /// Unknowns carry `z^e` with every `|e_i| ≤ exponent_box`.
    pub exponent_box: i64,
}

impl SolveConfig {
    /// Matches `D(Q) ≡ target mod ħ^{hbar_bound+1}`.
    pub fn new(action_bound: Rational, hbar_bound: u32, exponent_box: i64) -> Self {
        SolveConfig { action_bound, hbar_bound, match_below: hbar_bound + 1, exponent_box }
    }

    /// Only the coefficients below `ħ^{order+1}` are matched, so the target is
    /// prescribed up to `𝒪(ħ^{order+1})`.
    pub fn leading_order(mut self, order: u32) -> Self {
        self.match_below = order + 1;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Found(AlgebraElement),
    NotFound {
        /// Some unknown needed by the system fell outside the exponent box.
        box_limited: bool,
        unknowns: usize,
        equations: usize,
    },
}

impl SolveOutcome {
    pub fn witness(&self) -> Option<&AlgebraElement> {
        match self {
            SolveOutcome::Found(q) => Some(q),
            SolveOutcome::NotFound { .. } => None,
        }
    }
}

fn in_box(e: &[i64], b: i64) -> bool {
    e.iter().all(|x| x.abs() <= b)
}

fn sub_exp(a: &[i64], b: &[i64]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Searches for `Q` with `D(Q) ≡ target` in the truncation `cfg` over the words in `gens`.
///
/// Unknowns are generated lazily from the target backwards, so only the part of the complex
/// that can reach the target is ever assembled.
pub fn solve_primitive(
    reg: &Registry,
    d: &DifferentialOperator,
    gens: &[GenId],
    target: &AlgebraElement,
    cfg: &SolveConfig,
) -> Result<SolveOutcome> {
    if let Some(&term) = d.action_violations(reg, false).first() {
        return Err(Error::TruncationViolation { term });
    }
    if target.rank() != d.rank {
        return Err(Error::RankMismatch { expected: d.rank, found: target.rank() });
    }
    let allowed: BTreeSet<GenId> = gens.iter().copied().collect();
    let mut goal = AlgebraElement::zero(d.rank);
    for (k, c) in target.terms() {
        if k.word.factors().iter().any(|(g, _)| !allowed.contains(g)) || k.word.action(reg) >= cfg.action_bound {
            return Err(Error::TargetOutsideTruncation(k.word.render(reg)));
        }
        if !in_box(&k.exp, cfg.exponent_box) {
            return Err(Error::ExponentBoxOverflow(cfg.exponent_box));
        }
        if k.hbar < cfg.match_below {
            goal.add_term(k.clone(), c.clone());
        }
    }
    if goal.is_zero() {
        return Ok(SolveOutcome::Found(AlgebraElement::zero(d.rank)));
    }
    let d = d.consolidated(reg);
    let words = words_below(reg, gens, &cfg.action_bound);
    let top = cfg.match_below.saturating_sub(1);

    // Images of bare words, and for each image word the words that produce it.
    let mut images: Vec<AlgebraElement> = Vec::with_capacity(words.len());
    let mut producers: BTreeMap<Word, Vec<(usize, Exponent, u32)>> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let img = apply_truncated(reg, &d, &AlgebraElement::from_word(d.rank, w.clone(), Rational::one()), top);
        for (k, _) in img.terms() {
            producers.entry(k.word.clone()).or_default().push((i, k.exp.clone(), k.hbar));
        }
        images.push(img);
    }

    let mut rows: BTreeSet<TermKey> = goal.terms().map(|(k, _)| k.clone()).collect();
    let mut queue: VecDeque<TermKey> = rows.iter().cloned().collect();
    let mut columns: BTreeMap<TermKey, usize> = BTreeMap::new();
    let mut box_limited = false;
    while let Some(row) = queue.pop_front() {
        let Some(list) = producers.get(&row.word) else { continue };
        for (wi, dexp, dh) in list {
            if row.hbar < *dh || row.hbar - dh > cfg.hbar_bound {
                continue;
            }
            let e = sub_exp(&row.exp, dexp);
            if !in_box(&e, cfg.exponent_box) {
                box_limited = true;
                continue;
            }
            let key = TermKey { word: words[*wi].clone(), exp: e.clone(), hbar: row.hbar - dh };
            if columns.contains_key(&key) {
                continue;
            }
            columns.insert(key, *wi);
            for (k, _) in images[*wi].terms() {
                if k.hbar + (row.hbar - dh) >= cfg.match_below {
                    continue;
                }
                let r = TermKey { word: k.word.clone(), exp: add_exp(&k.exp, &e), hbar: k.hbar + row.hbar - dh };
                if rows.insert(r.clone()) {
                    queue.push_back(r);
                }
            }
        }
    }

    let row_index: BTreeMap<&TermKey, usize> = rows.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let col_keys: Vec<(&TermKey, &usize)> = columns.iter().collect();
    let mut cols: Vec<SparseVec> = Vec::with_capacity(col_keys.len());
    for (key, wi) in &col_keys {
        let mut v: SparseVec = BTreeMap::new();
        for (k, c) in images[**wi].terms() {
            let h = k.hbar + key.hbar;
            if h >= cfg.match_below {
                continue;
            }
            let r = TermKey { word: k.word.clone(), exp: add_exp(&k.exp, &key.exp), hbar: h };
            v.insert(row_index[&r], c.clone());
        }
        cols.push(v);
    }
    let rhs: SparseVec = goal.terms().map(|(k, c)| (row_index[k], c.clone())).collect();
    match linsolve::solve(&cols, &rhs) {
        None => Ok(SolveOutcome::NotFound { box_limited, unknowns: cols.len(), equations: rows.len() }),
        Some(x) => {
            let mut q = AlgebraElement::zero(d.rank);
            for (j, c) in x {
                q.add_term(col_keys[j].0.clone(), c);
            }
            let check = apply_truncated(reg, &d, &q, top).sub(&goal);
            if !check.is_zero() {
                return Err(Error::InvariantBreach(format!(
                    "solver witness fails verification, residual {}",
                    check.render(reg)
                )));
            }
            Ok(SolveOutcome::Found(q))
        }
    }
}

/// `P · B(Q)` with `B(Q) = Q − [P,Q] + [P,[P,Q]] − ⋯`, a primitive of `Q` modulo `ħ^{hbar_bound+1}`.
pub fn primitive_via_bracket(
    reg: &Registry,
    d: &DifferentialOperator,
    p: &AlgebraElement,
    q: &AlgebraElement,
    hbar_bound: u32,
) -> Result<AlgebraElement> {
    let rank = d.rank;
    let dp = apply_truncated(reg, d, p, hbar_bound);
    if dp != AlgebraElement::one(rank) {
        return Err(Error::Precondition(format!("D(P) = {} instead of 1", dp.render(reg))));
    }
    if !apply_truncated(reg, d, q, hbar_bound).is_zero() {
        return Err(Error::Precondition(String::from("Q is not closed")));
    }
    let mut current = q.truncate_hbar(hbar_bound);
    let mut series = current.clone();
    let mut step = 0usize;
    while !current.is_zero() {
        step += 1;
        let next = bracket(reg, d, p, &current).truncate_hbar(hbar_bound);
        if let (Some(before), Some(after)) = (current.hbar_order(), next.hbar_order()) {
            if after <= before {
                return Err(Error::SeriesDiverges { step, order: after });
            }
        }
        if step % 2 == 1 {
            series = series.sub(&next);
        } else {
            series = series.add(&next);
        }
        current = next;
    }
    let r = p.mul(&series, reg).truncate_hbar(hbar_bound);
    let residual = apply_operator(reg, d, &r).truncate_hbar(hbar_bound).sub(&q.truncate_hbar(hbar_bound));
    if !residual.is_zero() {
        return Err(Error::InvariantBreach(format!(
            "bracket primitive fails verification, residual {}",
            residual.render(reg)
        )));
    }
    Ok(r)
}
