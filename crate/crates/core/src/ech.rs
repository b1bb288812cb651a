//! ECH chain complexes, the `J₊` multicomplex decomposition and the invariant `f^L`.
//!
//! Generators are admissible orbit sets. Contributions are stored against full generators;
//! the model builders produce curve pieces and extend them by disjoint trivial cylinders.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::algebra::{AlgebraElement, Generator, Parity, Registry, Word};
use crate::cylinders::{enumerate_cylinders, CylinderType};
use crate::error::{Error, Result};
use crate::linsolve::{self, SparseVec};
use crate::operator::{apply_operator, term, DifferentialOperator};
use crate::reeb::{generate_orbits, ActionModel};
use crate::surface::{enumerate_flow_lines, DividedSurface};
use crate::torsion::{planar_pieces, PlanarTorsionDescriptor};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EchOrbitKind {
    Elliptic,
    PositiveHyperbolic,
    NegativeHyperbolic,
}

impl EchOrbitKind {
    pub fn is_hyperbolic(self) -> bool {
        self != EchOrbitKind::Elliptic
    }
}

/// `CZ_τ(γ^k)`, either constant in `k` or tabulated for `k = 1, 2, ..`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CzData {
    Constant(i64),
    Table(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchOrbit {
    pub id: String,
    pub kind: EchOrbitKind,
    pub action: Rational,
    pub cz: CzData,
}

impl EchOrbit {
    pub fn cz_of_iterate(&self, k: u32) -> Result<i64> {
        match &self.cz {
            CzData::Constant(c) => Ok(*c),
            CzData::Table(t) => t
                .get(k as usize - 1)
                .copied()
                .ok_or_else(|| Error::ech(format!("/orbits/{}", self.id), format!("no CZ index for iterate {k}"))),
        }
    }
}

/// Orbit index to multiplicity.
pub type OrbitSet = BTreeMap<usize, u32>;

pub fn orbit_set(entries: &[(usize, u32)]) -> OrbitSet {
    entries.iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contribution {
    pub from: OrbitSet,
    pub to: OrbitSet,
    pub c_tau: i64,
    pub q_tau: i64,
    pub sign: i8,
    pub genus: u32,
    /// `N_i⁺`: positive ends at covers of each orbit of `from`.
    pub pos_ends: BTreeMap<usize, u32>,
    /// `N_j⁻`: negative ends at covers of each orbit of `to`.
    pub neg_ends: BTreeMap<usize, u32>,
    /// Irreducible and somewhere injective.
    pub irreducible: bool,
    pub ind_equals_i: bool,
}

/// An edge of the curve graph used for simplicity; applies to any superset of `from`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveEdge {
    pub from: OrbitSet,
    pub to: OrbitSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchComplex {
    pub orbits: Vec<EchOrbit>,
    pub generators: Vec<OrbitSet>,
    pub contributions: Vec<Contribution>,
    /// All curves, including those outside the differential; `None` uses the contributions.
    pub curves: Option<Vec<CurveEdge>>,
}

/// `I = c_τ + Q_τ + Σ_i Σ_{k≤m_i} CZ(α_i^k) − Σ_j Σ_{k≤n_j} CZ(β_j^k)`.
pub fn ech_index(orbits: &[EchOrbit], from: &OrbitSet, to: &OrbitSet, c_tau: i64, q_tau: i64) -> Result<i64> {
    Ok(c_tau + q_tau + cz_sum(orbits, from, 0)? - cz_sum(orbits, to, 0)?)
}

/// `J₊ = −c_τ + Q_τ + Σ_i Σ_{k<m_i} CZ(α_i^k) − Σ_j Σ_{k<n_j} CZ(β_j^k) + |α| − |β|`.
pub fn j_plus(orbits: &[EchOrbit], from: &OrbitSet, to: &OrbitSet, c_tau: i64, q_tau: i64) -> Result<i64> {
    Ok(-c_tau + q_tau + cz_sum(orbits, from, 1)? - cz_sum(orbits, to, 1)? + from.len() as i64 - to.len() as i64)
}

fn cz_sum(orbits: &[EchOrbit], set: &OrbitSet, drop_last: u32) -> Result<i64> {
    let mut s = 0;
    for (&i, &m) in set {
        let o = orbits.get(i).ok_or_else(|| Error::ech("/orbits", format!("orbit index {i} out of range")))?;
        for k in 1..=m.saturating_sub(drop_last) {
            s += o.cz_of_iterate(k)?;
        }
    }
    Ok(s)
}

/// Right-hand side of the `J₊` index inequality for an irreducible curve.
pub fn ji_bound(c: &Contribution) -> i64 {
    let plus: i64 = c.pos_ends.values().map(|n| i64::from(*n) - 1).sum();
    let minus: i64 = c.neg_ends.values().map(|n| i64::from(*n) - 1).sum();
    2 * (i64::from(c.genus) - 1 + c.from.len() as i64 + plus + minus)
}

pub fn positive_hyperbolic_count(orbits: &[EchOrbit], from: &OrbitSet, to: &OrbitSet) -> usize {
    from.keys().chain(to.keys()).filter(|i| orbits[**i].kind == EchOrbitKind::PositiveHyperbolic).count()
}

impl EchComplex {
    pub fn action(&self, set: &OrbitSet) -> Rational {
        set.iter().map(|(i, m)| &self.orbits[*i].action * Rational::from_integer((*m).into())).sum()
    }

    pub fn render_set(&self, set: &OrbitSet) -> String {
        render_set(&self.orbits, set)
    }

    pub fn generator_index(&self, set: &OrbitSet) -> Option<usize> {
        self.generators.iter().position(|g| g == set)
    }

    pub fn empty_index(&self) -> Option<usize> {
        self.generator_index(&OrbitSet::new())
    }

    pub fn is_admissible(&self, set: &OrbitSet) -> bool {
        set.iter().all(|(i, m)| *m >= 1 && (*m == 1 || !self.orbits[*i].kind.is_hyperbolic()))
    }

    /// Checks orbit data, admissibility, `I = 1`, action decrease, CZ parities and the `J₊`
    /// inequality. `∅` is added to the generators when missing.
    pub fn validate(&mut self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for (i, o) in self.orbits.iter().enumerate() {
            let locus = format!("/ech_complex/orbits/{i}");
            if !ids.insert(o.id.clone()) {
                return Err(Error::ech(locus, format!("duplicate orbit id `{}`", o.id)));
            }
            if o.action <= Rational::zero() {
                return Err(Error::ech(locus, "action must be positive"));
            }
        }
        if self.empty_index().is_none() {
            self.generators.insert(0, OrbitSet::new());
        }
        let mut seen = BTreeSet::new();
        for (gi, g) in self.generators.iter().enumerate() {
            let locus = format!("/ech_complex/generators/{gi}");
            if g.keys().any(|i| *i >= self.orbits.len()) {
                return Err(Error::ech(locus, "unknown orbit"));
            }
            if !self.is_admissible(g) {
                return Err(Error::ech(locus, "hyperbolic orbit with multiplicity above 1"));
            }
            if !seen.insert(g.clone()) {
                return Err(Error::ech(locus, "duplicate generator"));
            }
            for (&i, &m) in g {
                let o = &self.orbits[i];
                for k in 1..=m {
                    let cz = o.cz_of_iterate(k)?;
                    let odd = cz.rem_euclid(2) == 1;
                    let want_odd = match o.kind {
                        EchOrbitKind::Elliptic | EchOrbitKind::NegativeHyperbolic => true,
                        EchOrbitKind::PositiveHyperbolic => false,
                    };
                    if k == 1 && odd != want_odd {
                        return Err(Error::ech(format!("/ech_complex/orbits/{i}"), format!("CZ index {cz} has the wrong parity for its kind")));
                    }
                    if o.kind == EchOrbitKind::Elliptic && !odd {
                        return Err(Error::ech(format!("/ech_complex/orbits/{i}"), format!("elliptic iterate {k} has even CZ index")));
                    }
                }
            }
        }
        for (ci, c) in self.contributions.iter().enumerate() {
            let locus = format!("/ech_complex/contributions/{ci}");
            if self.generator_index(&c.from).is_none() || self.generator_index(&c.to).is_none() {
                return Err(Error::ech(locus, "endpoints must be listed generators"));
            }
            if c.sign != 1 && c.sign != -1 {
                return Err(Error::ech(locus, "sign must be +1 or -1"));
            }
            let i = ech_index(&self.orbits, &c.from, &c.to, c.c_tau, c.q_tau)?;
            if i != 1 {
                return Err(Error::ech(locus, format!("ECH index is {i}, expected 1")));
            }
            if self.action(&c.from) <= self.action(&c.to) {
                return Err(Error::ech(locus, "action does not decrease"));
            }
            let j = j_plus(&self.orbits, &c.from, &c.to, c.c_tau, c.q_tau)?;
            if c.irreducible {
                let b = ji_bound(c);
                if j < b || (c.ind_equals_i && j != b) {
                    return Err(Error::ech(locus, format!("J+ = {j} violates the index inequality with bound {b}")));
                }
            }
        }
        if let Some(curves) = &self.curves {
            for (k, e) in curves.iter().enumerate() {
                if e.from.keys().chain(e.to.keys()).any(|i| *i >= self.orbits.len()) {
                    return Err(Error::ech(format!("/ech_complex/curves/{k}"), "unknown orbit"));
                }
                if self.action(&e.from) <= self.action(&e.to) {
                    return Err(Error::ech(format!("/ech_complex/curves/{k}"), "action does not decrease"));
                }
            }
        }
        Ok(())
    }
}

pub fn render_set(orbits: &[EchOrbit], set: &OrbitSet) -> String {
    if set.is_empty() {
        return "∅".into();
    }
    let parts: Vec<String> = set
        .iter()
        .map(|(i, m)| if *m == 1 { orbits[*i].id.clone() } else { format!("{}^{m}", orbits[*i].id) })
        .collect();
    format!("{{{}}}", parts.join(" "))
}

/// Sparse matrix keyed by `(row, col)` = `(target generator, source generator)`.
pub type SparseMatrix = BTreeMap<(usize, usize), Rational>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multicomplex {
    pub parts: Vec<SparseMatrix>,
    /// Degrees `s` for which `Σ_{i+j=s} ∂_i ∂_j = 0` was verified.
    pub relations_checked: usize,
}

impl Multicomplex {
    pub fn max_degree(&self) -> usize {
        self.parts.len().saturating_sub(1)
    }

    fn part(&self, k: usize) -> Option<&SparseMatrix> {
        self.parts.get(k)
    }
}

fn mat_mul(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let mut by_row: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
    for ((r, c), v) in b {
        by_row.entry(*r).or_default().push((*c, v));
    }
    let mut out = SparseMatrix::new();
    for ((r, k), v) in a {
        for (c, w) in by_row.get(k).map(Vec::as_slice).unwrap_or(&[]) {
            *out.entry((*r, *c)).or_insert_with(Rational::zero) += v * *w;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Splits `∂` by `J₊ = 2k` and checks `Σ_{i+j=s} ∂_i ∂_j = 0` for every `s` up to
/// `max(min_relation_degree, 2·k_max)`.
pub fn decompose_differential(cx: &EchComplex, min_relation_degree: usize) -> Result<Multicomplex> {
    let mut parts: Vec<SparseMatrix> = Vec::new();
    for (ci, c) in cx.contributions.iter().enumerate() {
        let j = j_plus(&cx.orbits, &c.from, &c.to, c.c_tau, c.q_tau)?;
        if j.rem_euclid(2) != 0 {
            return Err(Error::OddJPlus { index: ci, value: j });
        }
        if j < 0 {
            return Err(Error::ech(format!("/ech_complex/contributions/{ci}"), format!("negative J+ = {j}")));
        }
        let k = (j / 2) as usize;
        if parts.len() <= k {
            parts.resize(k + 1, SparseMatrix::new());
        }
        let (Some(col), Some(row)) = (cx.generator_index(&c.from), cx.generator_index(&c.to)) else {
            return Err(Error::ech(format!("/ech_complex/contributions/{ci}"), "endpoints must be listed generators"));
        };
        *parts[k].entry((row, col)).or_insert_with(Rational::zero) += Rational::from_integer(c.sign.into());
    }
    for p in &mut parts {
        p.retain(|_, v| !v.is_zero());
    }
    let mc = Multicomplex { parts, relations_checked: 0 };
    let top = core::cmp::max(min_relation_degree, 2 * mc.max_degree());
    for s in 0..=top {
        let mut acc = SparseMatrix::new();
        for i in 0..=s {
            if let (Some(a), Some(b)) = (mc.part(i), mc.part(s - i)) {
                for (k, v) in mat_mul(a, b) {
                    *acc.entry(k).or_insert_with(Rational::zero) += v;
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        if let Some(((r, c), v)) = acc.into_iter().next() {
            return Err(Error::MulticomplexRelation {
                degree: s,
                row: cx.render_set(&cx.generators[r]),
                col: cx.render_set(&cx.generators[c]),
                value: format!("{v}"),
            });
        }
    }
    Ok(Multicomplex { relations_checked: top + 1, ..mc })
}

/// `f` or `∞`; `Finite` sorts first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FValue {
    Finite(u32),
    Infinite,
}

impl core::fmt::Display for FValue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FValue::Finite(k) => write!(f, "{k}"),
            FValue::Infinite => f.write_str("∞"),
        }
    }
}

/// A chain as generator index to coefficient.
pub type Chain = SparseVec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FResult {
    pub value: FValue,
    /// `w_0, .., w_f` with `Σ_{i+j=s} ∂_i w_j = δ_{s,f} ∅` for `s ≤ f`.
    pub witness: Option<Vec<Chain>>,
    /// Largest page index examined.
    pub pages_checked: u32,
    /// Whether `J₊` comes from a potential on the component of `∅`.
    pub graded: bool,
    pub generators: usize,
}

/// Generator indices allowed by the action bound and, optionally, simplicity.
pub fn subcomplex(cx: &EchComplex, action_bound: Option<&Rational>, simple_only: bool) -> BTreeSet<usize> {
    let simple = if simple_only { Some(simplicity_closure(cx)) } else { None };
    (0..cx.generators.len())
        .filter(|i| action_bound.is_none_or(|l| &cx.action(&cx.generators[*i]) < l))
        .filter(|i| simple.as_ref().is_none_or(|s| s.contains(i)))
        .collect()
}

fn restrict(mc: &Multicomplex, keep: &BTreeSet<usize>) -> Vec<SparseMatrix> {
    mc.parts
        .iter()
        .map(|p| p.iter().filter(|((r, c), _)| keep.contains(r) && keep.contains(c)).map(|(k, v)| (*k, v.clone())).collect())
        .collect()
}

/// `J₊ = φ(from) − φ(to)` on the component of `∅`; returns the spread of `φ` over it.
fn potential_spread(parts: &[SparseMatrix], empty: usize) -> Option<i64> {
    let mut adj: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
    for (k, p) in parts.iter().enumerate() {
        for (r, c) in p.keys() {
            adj.entry(*c).or_default().push((*r, -2 * k as i64));
            adj.entry(*r).or_default().push((*c, 2 * k as i64));
        }
    }
    let mut phi: BTreeMap<usize, i64> = BTreeMap::new();
    phi.insert(empty, 0);
    let mut stack = vec![empty];
    while let Some(v) = stack.pop() {
        let pv = phi[&v];
        for (w, d) in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            match phi.get(w) {
                Some(pw) if *pw != pv + d => return None,
                Some(_) => {}
                None => {
                    phi.insert(*w, pv + d);
                    stack.push(*w);
                }
            }
        }
    }
    Some(phi.values().max().copied().unwrap_or(0) - phi.values().min().copied().unwrap_or(0))
}

/// Solves `Σ_{i+j=s} ∂_i w_j = δ_{s,r} ∅` for `s ≤ r`.
fn dies_at(parts: &[SparseMatrix], n: usize, empty: usize, r: usize) -> Option<Vec<Chain>> {
    let mut cols: Vec<SparseVec> = Vec::with_capacity((r + 1) * n);
    let mut by_col: Vec<BTreeMap<usize, Vec<(usize, &Rational)>>> = Vec::new();
    for p in parts {
        let mut m: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
        for ((row, col), v) in p {
            m.entry(*col).or_default().push((*row, v));
        }
        by_col.push(m);
    }
    for j in 0..=r {
        for g in 0..n {
            let mut col = SparseVec::new();
            for (i, m) in by_col.iter().enumerate() {
                if i + j > r {
                    break;
                }
                for (row, v) in m.get(&g).map(Vec::as_slice).unwrap_or(&[]) {
                    col.insert((i + j) * n + row, (*v).clone());
                }
            }
            cols.push(col);
        }
    }
    let mut rhs = SparseVec::new();
    rhs.insert(r * n + empty, Rational::one());
    let x = linsolve::solve(&cols, &rhs)?;
    let mut w = vec![Chain::new(); r + 1];
    for (k, v) in x {
        w[k / n].insert(k % n, v);
    }
    Some(w)
}

/// The least `k` such that `∅` does not survive to page `k + 1` of the `J₊` spectral
/// sequence of the subcomplex.
pub fn f_value(cx: &EchComplex, mc: &Multicomplex, action_bound: Option<&Rational>, simple_only: bool) -> Result<FResult> {
    let empty = cx.empty_index().ok_or_else(|| Error::Precondition("complex has no empty generator".into()))?;
    let keep = subcomplex(cx, action_bound, simple_only);
    let parts = restrict(mc, &keep);
    let n = cx.generators.len();
    let hits_empty = parts.iter().any(|p| p.keys().any(|(r, _)| *r == empty));
    let k_max = parts.len().saturating_sub(1) as i64;
    let spread = potential_spread(&parts, empty);
    let bound = match spread {
        Some(s) => core::cmp::max(s / 2, k_max),
        None => keep.len() as i64 * core::cmp::max(k_max, 1),
    } as u32;
    let mut res = FResult { value: FValue::Infinite, witness: None, pages_checked: 0, graded: spread.is_some(), generators: keep.len() };
    if !hits_empty {
        return Ok(res);
    }
    for r in 0..=bound {
        res.pages_checked = r;
        if let Some(w) = dies_at(&parts, n, empty, r as usize) {
            res.value = FValue::Finite(r);
            res.witness = Some(w);
            break;
        }
    }
    Ok(res)
}

/// Least `k` with `(∂₀ + ⋯ + ∂_k) x = ∅` solvable in the subcomplex, with `x`.
pub fn sufficient_condition(
    cx: &EchComplex,
    mc: &Multicomplex,
    action_bound: Option<&Rational>,
    simple_only: bool,
) -> Result<Option<(u32, Chain)>> {
    let empty = cx.empty_index().ok_or_else(|| Error::Precondition("complex has no empty generator".into()))?;
    let keep = subcomplex(cx, action_bound, simple_only);
    let parts = restrict(mc, &keep);
    let n = cx.generators.len();
    let mut sum = SparseMatrix::new();
    for (k, p) in parts.iter().enumerate() {
        for (key, v) in p {
            *sum.entry(*key).or_insert_with(Rational::zero) += v;
        }
        let mut cols = vec![SparseVec::new(); n];
        for ((r, c), v) in &sum {
            if !v.is_zero() {
                cols[*c].insert(*r, v.clone());
            }
        }
        let mut rhs = SparseVec::new();
        rhs.insert(empty, Rational::one());
        if let Some(x) = linsolve::solve(&cols, &rhs) {
            return Ok(Some((k as u32, x)));
        }
    }
    Ok(None)
}

/// Both answers for `∅` and whether they agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurvivalComparison {
    pub spectral: FResult,
    pub sufficient: Option<(u32, Chain)>,
}

impl SurvivalComparison {
    pub fn agree(&self) -> bool {
        match (&self.spectral.value, &self.sufficient) {
            (FValue::Finite(f), Some((k, _))) => f == k,
            (FValue::Infinite, None) => true,
            _ => false,
        }
    }
}

/// Runs both computations; a sufficient-condition witness below `f` is an invariant breach.
pub fn compare_survival(
    cx: &EchComplex,
    mc: &Multicomplex,
    action_bound: Option<&Rational>,
    simple_only: bool,
) -> Result<SurvivalComparison> {
    let spectral = f_value(cx, mc, action_bound, simple_only)?;
    let sufficient = sufficient_condition(cx, mc, action_bound, simple_only)?;
    if let Some((k, _)) = &sufficient {
        if FValue::Finite(*k) < spectral.value {
            return Err(Error::InvariantBreach(format!(
                "(∂₀+⋯+∂_{k})x = ∅ is solvable but f = {}",
                spectral.value
            )));
        }
    }
    Ok(SurvivalComparison { spectral, sufficient })
}

fn contains(big: &OrbitSet, small: &OrbitSet) -> bool {
    small.iter().all(|(i, m)| big.get(i).is_some_and(|b| b >= m))
}

fn apply_edge(s: &OrbitSet, e: &CurveEdge) -> OrbitSet {
    let mut out = s.clone();
    for (i, m) in &e.from {
        let v = out.get_mut(i).expect("contained");
        *v -= m;
        if *v == 0 {
            out.remove(i);
        }
    }
    for (i, m) in &e.to {
        *out.entry(*i).or_insert(0) += m;
    }
    out
}

/// Generator indices that are simple: multiplicity one throughout, and every orbit set
/// reachable by (possibly broken) curves has multiplicity one.
pub fn simplicity_closure(cx: &EchComplex) -> BTreeSet<usize> {
    let edges: Vec<CurveEdge> = match &cx.curves {
        Some(c) => c.clone(),
        None => cx.contributions.iter().map(|c| CurveEdge { from: c.from.clone(), to: c.to.clone() }).collect(),
    };
    let mut memo: BTreeMap<OrbitSet, bool> = BTreeMap::new();
    fn bad(s: &OrbitSet, edges: &[CurveEdge], memo: &mut BTreeMap<OrbitSet, bool>) -> bool {
        if let Some(b) = memo.get(s) {
            return *b;
        }
        let mut res = s.values().any(|m| *m > 1);
        if !res {
            for e in edges {
                if !e.from.is_empty() && contains(s, &e.from) && bad(&apply_edge(s, e), edges, memo) {
                    res = true;
                    break;
                }
            }
        }
        memo.insert(s.clone(), res);
        res
    }
    (0..cx.generators.len()).filter(|i| !bad(&cx.generators[*i], &edges, &mut memo)).collect()
}

/// Key of the certificate count table.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EchCountKey {
    pub from: String,
    pub c_tau: i64,
    pub q_tau: i64,
    pub genus: u32,
    pub n_plus: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EchCertificate {
    Granted { k: u32, counts: BTreeMap<EchCountKey, i64>, f: FValue },
    Refused { key: EchCountKey, count: i64 },
}

/// Grants `f^L ≥ k` when every `I = 1` count to `∅` with `g + N₊ ≤ k` and action below `L`
/// vanishes, then checks the claim against `f_value`.
pub fn ech_lower_bound_certificate(
    cx: &EchComplex,
    mc: &Multicomplex,
    action_bound: Option<&Rational>,
    k: u32,
) -> Result<EchCertificate> {
    let mut counts: BTreeMap<EchCountKey, i64> = BTreeMap::new();
    for c in &cx.contributions {
        if !c.to.is_empty() || action_bound.is_some_and(|l| &cx.action(&c.from) >= l) {
            continue;
        }
        if ech_index(&cx.orbits, &c.from, &c.to, c.c_tau, c.q_tau)? != 1 {
            continue;
        }
        let key = EchCountKey {
            from: cx.render_set(&c.from),
            c_tau: c.c_tau,
            q_tau: c.q_tau,
            genus: c.genus,
            n_plus: c.pos_ends.values().sum(),
        };
        *counts.entry(key).or_insert(0) += i64::from(c.sign);
    }
    if let Some((key, count)) = counts.iter().find(|(key, v)| key.genus + key.n_plus <= k && **v != 0) {
        return Ok(EchCertificate::Refused { key: key.clone(), count: *count });
    }
    let f = f_value(cx, mc, action_bound, false)?.value;
    if f < FValue::Finite(k) {
        return Err(Error::InvariantBreach(format!("certificate grants f >= {k} but f = {f}")));
    }
    Ok(EchCertificate::Granted { k, counts, f })
}

/// Multiplies every action by `c`.
pub fn scaling_relabel(cx: &EchComplex, c: &Rational) -> Result<EchComplex> {
    if *c <= Rational::zero() {
        return Err(Error::NonPositiveScale);
    }
    let mut out = cx.clone();
    for o in &mut out.orbits {
        o.action = &o.action * c;
    }
    Ok(out)
}

/// A curve component before adding trivial cylinders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvePiece {
    pub from: OrbitSet,
    pub to: OrbitSet,
    pub c_tau: i64,
    pub q_tau: i64,
    pub sign: i8,
    pub genus: u32,
    /// `false` for pieces that only enter the curve graph.
    pub in_differential: bool,
}

/// Every multiplicity-one orbit set of action below `bound`.
pub fn simple_orbit_sets(orbits: &[EchOrbit], bound: &Rational) -> Vec<OrbitSet> {
    let mut out = Vec::new();
    fn rec(orbits: &[EchOrbit], start: usize, acc: Rational, bound: &Rational, cur: &mut Vec<usize>, out: &mut Vec<OrbitSet>) {
        out.push(cur.iter().map(|i| (*i, 1)).collect());
        for i in start..orbits.len() {
            let a = &acc + &orbits[i].action;
            if &a < bound {
                cur.push(i);
                rec(orbits, i + 1, a, bound, cur, out);
                cur.pop();
            }
        }
    }
    rec(orbits, 0, Rational::zero(), bound, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Extends each piece by disjoint trivial cylinders to every generator containing its source.
///
/// Orbits of even CZ index are odd in the sign algebra, so unions pick up Koszul signs.
pub fn complex_from_pieces(orbits: Vec<EchOrbit>, generators: Vec<OrbitSet>, pieces: &[CurvePiece]) -> Result<EchComplex> {
    let mut reg = Registry::new(0);
    for o in &orbits {
        let parity = if o.kind == EchOrbitKind::PositiveHyperbolic { Parity::Odd } else { Parity::Even };
        reg.add(Generator { name: o.id.clone(), parity, action: o.action.clone(), multiplicity: 1 })?;
    }
    let word_of = |s: &OrbitSet| -> Result<Word> {
        let ids: Vec<usize> = s.keys().copied().collect();
        Word::from_product(&reg, &ids).map(|(_, w)| w).ok_or_else(|| Error::InvariantBreach("orbit set word vanishes".into()))
    };
    let gen_set: BTreeSet<&OrbitSet> = generators.iter().collect();
    let mut contributions = Vec::new();
    for p in pieces.iter().filter(|p| p.in_differential) {
        if p.from.values().chain(p.to.values()).any(|m| *m != 1) {
            return Err(Error::Precondition("curve pieces must have multiplicity-one ends".into()));
        }
        let inputs: Vec<usize> = p.from.keys().copied().collect();
        let outputs: Vec<usize> = p.to.keys().copied().collect();
        let mut op = DifferentialOperator::zero(0);
        op.push(term(Rational::one(), 0, &outputs, &inputs, 0));
        let base_src = AlgebraElement::from_word(0, word_of(&p.from)?, Rational::one());
        let base = apply_operator(&reg, &op, &base_src);
        let base_coeff = base.coefficient(&crate::algebra::TermKey { word: word_of(&p.to)?, exp: vec![], hbar: 0 });
        if base_coeff.is_zero() {
            return Err(Error::InvariantBreach("curve piece has vanishing sign".into()));
        }
        for g in &generators {
            if !contains(g, &p.from) {
                continue;
            }
            let rest: OrbitSet = g.iter().filter(|(i, _)| !p.from.contains_key(i)).map(|(i, m)| (*i, *m)).collect();
            if rest.keys().any(|i| p.to.contains_key(i)) {
                continue;
            }
            let mut target = rest.clone();
            target.extend(p.to.iter().map(|(i, m)| (*i, *m)));
            if !gen_set.contains(&target) {
                continue;
            }
            let src = AlgebraElement::from_word(0, word_of(g)?, Rational::one());
            let img = apply_operator(&reg, &op, &src);
            let coeff = img.coefficient(&crate::algebra::TermKey { word: word_of(&target)?, exp: vec![], hbar: 0 }) / &base_coeff;
            let sign = if coeff.is_zero() {
                return Err(Error::InvariantBreach("union with trivial cylinders has vanishing sign".into()));
            } else if coeff > Rational::zero() {
                p.sign
            } else {
                -p.sign
            };
            contributions.push(Contribution {
                from: g.clone(),
                to: target,
                c_tau: p.c_tau,
                q_tau: p.q_tau,
                sign,
                genus: p.genus,
                pos_ends: p.from.clone(),
                neg_ends: p.to.clone(),
                irreducible: rest.is_empty(),
                ind_equals_i: true,
            });
        }
    }
    let curves = pieces.iter().map(|p| CurveEdge { from: p.from.clone(), to: p.to.clone() }).collect();
    let mut cx = EchComplex { orbits, generators, contributions, curves: Some(curves) };
    cx.validate()?;
    Ok(cx)
}

/// Orbits `g_i`, `h_i`, `e_i` of a planar descriptor with `r = 0`: the gradient pair
/// `e_i → h_i` and the page curve to `∅` with `c_τ = 1 − k₀`.
pub fn ech_from_planar(desc: &PlanarTorsionDescriptor, action_bound: &Rational) -> Result<EchComplex> {
    desc.validate()?;
    if desc.r != 0 {
        return Err(Error::Precondition("ECH planar complexes need r = 0".into()));
    }
    let mut orbits = Vec::new();
    let ell = |id: String, a: Rational| EchOrbit { id, kind: EchOrbitKind::Elliptic, action: a, cz: CzData::Constant(1) };
    for i in 1..=desc.m {
        orbits.push(ell(format!("g{i}"), Rational::one()));
    }
    let first_torus = orbits.len();
    for i in 1..=desc.n {
        orbits.push(EchOrbit { id: format!("h{i}"), kind: EchOrbitKind::PositiveHyperbolic, action: Rational::one(), cz: CzData::Constant(0) });
        orbits.push(ell(format!("e{i}"), Rational::new(11.into(), 10.into())));
    }
    let h = |i: usize| first_torus + 2 * i;
    let e = |i: usize| first_torus + 2 * i + 1;
    let mut pieces = Vec::new();
    for i in 0..desc.n as usize {
        for sign in [1, -1] {
            pieces.push(CurvePiece { from: orbit_set(&[(e(i), 1)]), to: OrbitSet::new(), c_tau: 0, q_tau: 0, sign, genus: 0, in_differential: true });
            pieces.last_mut().expect("pushed").to = orbit_set(&[(h(i), 1)]);
        }
    }
    let mut page: OrbitSet = (0..first_torus).map(|i| (i, 1)).collect();
    page.insert(h(0), 1);
    for i in 1..desc.n as usize {
        page.insert(e(i), 1);
    }
    pieces.push(CurvePiece { from: page, to: OrbitSet::new(), c_tau: 1 - i64::from(desc.k0()), q_tau: 0, sign: 1, genus: 0, in_differential: true });
    let generators = simple_orbit_sets(&orbits, action_bound);
    complex_from_pieces(orbits, generators, &pieces)
}

/// The complex of the first planar piece of a divided surface.
pub fn ech_from_planar_piece(ds: &DividedSurface, action_bound: &Rational) -> Result<EchComplex> {
    let (_, _, desc) = planar_pieces(ds)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Precondition("surface has no planar piece".into()))?;
    ech_from_planar(&desc, action_bound)
}

/// Simple orbits over the critical points with simple cylinders as curves. Types 2 and 3
/// have `J₊ = 0`, types 4 and 5 go to `∅` with `J₊ = 2`, type 1 only enters the curve graph.
pub fn ech_from_surface(ds: &DividedSurface, model: &ActionModel, action_bound: &Rational) -> Result<EchComplex> {
    let reeb = generate_orbits(ds, 1, model)?;
    let orbits: Vec<EchOrbit> = reeb
        .iter()
        .map(|o| EchOrbit {
            id: o.name(),
            kind: if o.morse_index == 1 { EchOrbitKind::PositiveHyperbolic } else { EchOrbitKind::Elliptic },
            action: o.action.clone(),
            cz: CzData::Constant(o.cz_index),
        })
        .collect();
    let lines = enumerate_flow_lines(ds);
    let mut pieces = Vec::new();
    for c in enumerate_cylinders(ds, &reeb, 1) {
        if c.cyl_type == CylinderType::Trivial {
            continue;
        }
        let from: OrbitSet = c.positive_ends.iter().map(|i| (*i, 1)).collect();
        let to: OrbitSet = c.negative_ends.iter().map(|i| (*i, 1)).collect();
        let sign = c.flow_line.map_or(1, |l| lines[l].sign);
        let in_differential = c.cyl_type != CylinderType::Type1;
        let c_tau = if c.cyl_type == CylinderType::Type1 { 1 } else { 0 };
        pieces.push(CurvePiece { from, to, c_tau, q_tau: 0, sign, genus: 0, in_differential });
    }
    let generators = simple_orbit_sets(&orbits, action_bound);
    complex_from_pieces(orbits, generators, &pieces)
}

/// One hyperbolic orbit bounding a single plane: `∂₀{γ} = ∅`.
pub fn toy_overtwisted() -> EchComplex {
    let orbits = vec![EchOrbit {
        id: "gamma".into(),
        kind: EchOrbitKind::PositiveHyperbolic,
        action: Rational::one(),
        cz: CzData::Constant(0),
    }];
    let g = orbit_set(&[(0, 1)]);
    EchComplex {
        orbits,
        generators: vec![OrbitSet::new(), g.clone()],
        contributions: vec![Contribution {
            from: g.clone(),
            to: OrbitSet::new(),
            c_tau: 1,
            q_tau: 0,
            sign: 1,
            genus: 0,
            pos_ends: g,
            neg_ends: BTreeMap::new(),
            irreducible: true,
            ind_equals_i: true,
        }],
        curves: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::surface::build_divided_surface;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn pair_orbits() -> Vec<EchOrbit> {
        vec![
            EchOrbit { id: "h".into(), kind: EchOrbitKind::PositiveHyperbolic, action: q(1), cz: CzData::Constant(0) },
            EchOrbit { id: "e".into(), kind: EchOrbitKind::Elliptic, action: q(2), cz: CzData::Constant(1) },
        ]
    }

    #[test]
    fn index_examples() {
        let o = pair_orbits();
        let alpha = orbit_set(&[(0, 1), (1, 1)]);
        assert_eq!(ech_index(&o, &alpha, &OrbitSet::new(), 0, 0).unwrap(), 1);
        assert_eq!(j_plus(&o, &alpha, &OrbitSet::new(), 0, 0).unwrap(), 2);
        assert_eq!(ech_index(&o, &alpha, &alpha, 0, 0).unwrap(), 0);
        assert_eq!(j_plus(&o, &alpha, &alpha, 0, 0).unwrap(), 0);
        assert_eq!(ech_index(&o, &orbit_set(&[(1, 2)]), &OrbitSet::new(), 0, 0).unwrap(), 2);
        let c = Contribution {
            from: alpha.clone(),
            to: OrbitSet::new(),
            c_tau: 0,
            q_tau: 0,
            sign: 1,
            genus: 0,
            pos_ends: alpha,
            neg_ends: BTreeMap::new(),
            irreducible: true,
            ind_equals_i: true,
        };
        assert_eq!(ji_bound(&c), 2);
    }

    #[test]
    fn toy_overtwisted_has_f_zero() {
        let mut cx = toy_overtwisted();
        cx.validate().unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        assert_eq!(mc.parts.len(), 1);
        assert_eq!(f_value(&cx, &mc, None, false).unwrap().value, FValue::Finite(0));
        assert!(matches!(ech_lower_bound_certificate(&cx, &mc, None, 1).unwrap(), EchCertificate::Refused { count: 1, .. }));
    }

    #[test]
    fn empty_complex_is_infinite() {
        let mut cx = EchComplex { orbits: vec![], generators: vec![], contributions: vec![], curves: None };
        cx.validate().unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        assert_eq!(f_value(&cx, &mc, None, false).unwrap().value, FValue::Infinite);
        assert!(matches!(ech_lower_bound_certificate(&cx, &mc, None, 3).unwrap(), EchCertificate::Granted { f: FValue::Infinite, .. }));
    }

    #[test]
    fn odd_j_plus_rejected() {
        let mut cx = toy_overtwisted();
        cx.orbits[0].kind = EchOrbitKind::Elliptic;
        cx.orbits[0].cz = CzData::Constant(1);
        cx.contributions[0].c_tau = 0;
        cx.contributions[0].irreducible = false;
        cx.validate().unwrap();
        assert!(matches!(decompose_differential(&cx, 0), Err(Error::OddJPlus { index: 0, value: 1 })));
    }

    #[test]
    fn planar_v2_complex() {
        let cx = ech_from_planar(&PlanarTorsionDescriptor::untwisted(0, 2, 0), &q(8)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let cmp = compare_survival(&cx, &mc, None, false).unwrap();
        assert_eq!(cmp.spectral.value, FValue::Finite(1));
        assert!(cmp.agree());
        assert!(matches!(ech_lower_bound_certificate(&cx, &mc, None, 1).unwrap(), EchCertificate::Granted { .. }));
        assert!(matches!(ech_lower_bound_certificate(&cx, &mc, None, 2).unwrap(), EchCertificate::Refused { .. }));
        let simp = f_value(&cx, &mc, None, true).unwrap().value;
        assert!(simp >= FValue::Finite(1));
    }

    #[test]
    fn planar_k0_three() {
        let cx = ech_from_planar(&PlanarTorsionDescriptor::untwisted(0, 3, 0), &q(8)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        assert_eq!(f_value(&cx, &mc, None, false).unwrap().value, FValue::Finite(2));
    }

    #[test]
    fn surface_models() {
        let ds = build_divided_surface(models::no_giroux_surface()).unwrap();
        let cx = ech_from_surface(&ds, &ActionModel::default(), &q(4)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let cmp = compare_survival(&cx, &mc, None, false).unwrap();
        assert_eq!(cmp.spectral.value, FValue::Finite(1));
        assert!(cmp.agree());

        let ds = build_divided_surface(models::vgk_surface(2, 2).unwrap()).unwrap();
        let cx = ech_from_surface(&ds, &ActionModel::default(), &q(5)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        assert_eq!(f_value(&cx, &mc, None, false).unwrap().value, FValue::Infinite);
    }

    #[test]
    fn relation_failure_names_entry() {
        let o = vec![
            EchOrbit { id: "a".into(), kind: EchOrbitKind::Elliptic, action: q(3), cz: CzData::Constant(1) },
            EchOrbit { id: "b".into(), kind: EchOrbitKind::PositiveHyperbolic, action: q(2), cz: CzData::Constant(0) },
            EchOrbit { id: "c".into(), kind: EchOrbitKind::Elliptic, action: q(1), cz: CzData::Constant(-1) },
        ];
        let s = |i| orbit_set(&[(i, 1)]);
        let mk = |f: OrbitSet, t: OrbitSet, c: i64| Contribution {
            from: f.clone(),
            to: t.clone(),
            c_tau: c,
            q_tau: 0,
            sign: 1,
            genus: 0,
            pos_ends: f,
            neg_ends: t,
            irreducible: false,
            ind_equals_i: false,
        };
        let mut cx = EchComplex {
            orbits: o,
            generators: vec![s(0), s(1), s(2)],
            contributions: vec![mk(s(0), s(1), 0), mk(s(1), s(2), 0)],
            curves: None,
        };
        cx.validate().unwrap();
        match decompose_differential(&cx, 0) {
            Err(Error::MulticomplexRelation { degree: 0, row, col, .. }) => {
                assert_eq!((row.as_str(), col.as_str()), ("{c}", "{a}"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn v22_planar_piece_matches_witness() {
        let ds = build_divided_surface(models::vgk_surface(2, 2).unwrap()).unwrap();
        let cx = ech_from_planar_piece(&ds, &q(8)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let cmp = compare_survival(&cx, &mc, None, false).unwrap();
        assert_eq!(cmp.spectral.value, FValue::Finite(1));
        let (k, x) = cmp.sufficient.unwrap();
        assert_eq!(k, 1);
        assert_eq!(x.len(), 1);
        let (g, c) = x.iter().next().unwrap();
        assert_eq!(cx.render_set(&cx.generators[*g]), "{h1 e2}");
        assert_eq!(num_traits::Signed::abs(c), q(1));
    }

    #[test]
    fn no_giroux_pair_is_simple() {
        let ds = build_divided_surface(models::no_giroux_surface()).unwrap();
        let cx = ech_from_surface(&ds, &ActionModel::default(), &q(4)).unwrap();
        let simple = simplicity_closure(&cx);
        let names: Vec<String> = simple.iter().map(|i| cx.render_set(&cx.generators[*i])).collect();
        assert!(names.iter().any(|n| n == "{m1 zp}"));
        assert!(!names.iter().any(|n| n == "{m1 a1}"));
        let mc = decompose_differential(&cx, 4).unwrap();
        assert!(f_value(&cx, &mc, None, true).unwrap().value >= f_value(&cx, &mc, None, false).unwrap().value);
    }

    #[test]
    fn reachable_double_orbit_breaks_simplicity() {
        let o = vec![
            EchOrbit { id: "a".into(), kind: EchOrbitKind::Elliptic, action: q(3), cz: CzData::Constant(1) },
            EchOrbit { id: "b".into(), kind: EchOrbitKind::Elliptic, action: q(1), cz: CzData::Constant(1) },
        ];
        let mut cx = EchComplex {
            orbits: o,
            generators: vec![orbit_set(&[(0, 1), (1, 1)]), orbit_set(&[(1, 2)]), orbit_set(&[(0, 1)])],
            contributions: vec![],
            curves: Some(vec![CurveEdge { from: orbit_set(&[(0, 1)]), to: orbit_set(&[(1, 1)]) }]),
        };
        cx.validate().unwrap();
        let simple = simplicity_closure(&cx);
        let idx = |s: OrbitSet| cx.generator_index(&s).unwrap();
        assert!(!simple.contains(&idx(orbit_set(&[(0, 1), (1, 1)]))));
        assert!(!simple.contains(&idx(orbit_set(&[(1, 2)]))));
        assert!(simple.contains(&idx(orbit_set(&[(0, 1)]))));
        assert!(simple.contains(&idx(OrbitSet::new())));
    }

    #[test]
    fn scaling_preserves_f_with_bound() {
        let ds = build_divided_surface(models::no_giroux_surface()).unwrap();
        let cx = ech_from_surface(&ds, &ActionModel::default(), &q(4)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let l = q(3);
        let base = f_value(&cx, &mc, Some(&l), false).unwrap().value;
        assert_eq!(base, FValue::Finite(1));
        for c in [q(2), Rational::new(1.into(), 2.into())] {
            let sc = scaling_relabel(&cx, &c).unwrap();
            let smc = decompose_differential(&sc, 4).unwrap();
            assert_eq!(f_value(&sc, &smc, Some(&(&l * &c)), false).unwrap().value, base);
        }
    }

    #[test]
    fn scaling_round_trip() {
        let cx = ech_from_planar(&PlanarTorsionDescriptor::untwisted(0, 2, 0), &q(8)).unwrap();
        let half = Rational::new(1.into(), 2.into());
        let back = scaling_relabel(&scaling_relabel(&cx, &half).unwrap(), &q(2)).unwrap();
        assert_eq!(back, cx);
        assert_eq!(scaling_relabel(&cx, &q(1)).unwrap(), cx);
        assert!(matches!(scaling_relabel(&cx, &q(0)), Err(Error::NonPositiveScale)));
    }
}
