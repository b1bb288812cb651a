//! Torsion order of `[ħ^k]`: upper bounds from explicit primitives, lower bounds from
//! vanishing curve counts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::algebra::{AlgebraElement, GenId, Generator, Parity, Registry, Word};
use crate::cylinders::{
    assemble_sft_differential, count_index1_positive_only, enumerate_cylinders, AssembledDifferential, CountTable,
    CoverWeight, Cylinder,
};
use crate::error::{Error, Result};
use crate::lattice::{Exponent, LatticeMap};
use crate::operator::{apply_truncated, DifferentialOperator, OpTerm};
use crate::primitive::{solve_primitive, SolveConfig, SolveOutcome};
use crate::reeb::{generate_orbits, ActionModel, ReebOrbit};
use crate::surface::{null_homology_check, DividedSurface, Side};
use crate::Rational;

/// Action bound used when solving in a planar descriptor complex.
pub const PLANAR_ACTION_BOUND: i64 = 8;

/// Data of a planar torsion domain: `m` binding orbits, `n` boundary tori and `r` interior
/// interface tori, with classes in a lattice of rank `rank`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarTorsionDescriptor {
    pub m: u32,
    pub n: u32,
    pub r: u32,
    pub rank: usize,
    pub page_class: Exponent,
    pub torus_classes: Vec<Exponent>,
    /// Integer functional on the lattice; `None` keeps the full lattice.
    pub omega: Option<Vec<i64>>,
}

impl PlanarTorsionDescriptor {
    pub fn untwisted(m: u32, n: u32, r: u32) -> Self {
        let t = (n + r) as usize;
        PlanarTorsionDescriptor { m, n, r, rank: 0, page_class: vec![], torus_classes: vec![vec![]; t], omega: None }
    }

    /// Rank `1 + n + r`: the page class and each torus class get their own coordinate.
    pub fn fully_twisted(m: u32, n: u32, r: u32) -> Self {
        let t = (n + r) as usize;
        let rank = 1 + t;
        let unit = |i: usize| {
            let mut e = vec![0; rank];
            e[i] = 1;
            e
        };
        PlanarTorsionDescriptor {
            m,
            n,
            r,
            rank,
            page_class: unit(0),
            torus_classes: (1..=t).map(unit).collect(),
            omega: None,
        }
    }

    pub fn with_omega(mut self, omega: Vec<i64>) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn k0(&self) -> u32 {
        self.m + self.n + 2 * self.r - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDescriptor("n must be at least 1".into()));
        }
        if self.page_class.len() != self.rank {
            return Err(Error::InvalidDescriptor(format!(
                "page_class has length {} but the lattice has rank {}",
                self.page_class.len(),
                self.rank
            )));
        }
        if self.torus_classes.len() != (self.n + self.r) as usize {
            return Err(Error::InvalidDescriptor(format!(
                "expected {} torus classes, found {}",
                self.n + self.r,
                self.torus_classes.len()
            )));
        }
        if let Some(i) = self.torus_classes.iter().position(|t| t.len() != self.rank) {
            return Err(Error::InvalidDescriptor(format!("torus class {} has the wrong length", i + 1)));
        }
        if let Some(o) = &self.omega {
            if o.len() != self.rank {
                return Err(Error::InvalidDescriptor(format!("omega has length {}, expected {}", o.len(), self.rank)));
            }
        }
        Ok(())
    }

    /// `Ω([T_i]) = 0` for every torus; always true without `Ω`.
    pub fn omega_separating(&self) -> bool {
        match &self.omega {
            None => self.torus_classes.iter().all(|t| t.iter().all(|x| *x == 0)) || self.rank == 0,
            Some(o) => self.torus_classes.iter().all(|t| t.iter().zip(o).map(|(a, b)| a * b).sum::<i64>() == 0),
        }
    }
}

/// Operator and distinguished monomial of a planar descriptor.
#[derive(Clone, Debug)]
pub struct PlanarModel {
    pub descriptor: PlanarTorsionDescriptor,
    pub registry: Registry,
    /// Written over the target lattice of `omega` when present.
    pub operator: DifferentialOperator,
    /// The operator before applying `omega`.
    pub full_operator: DifferentialOperator,
    pub f: AlgebraElement,
}

impl PlanarModel {
    pub fn generators(&self) -> Vec<GenId> {
        self.registry.ids().collect()
    }
}

/// Builds the orbits `γ_1..γ_m` (`g1..`), `γ_i^h`, `γ_i^e` (`h1, e1, h2, e2, ..`), the
/// gradient terms `(z^{[T_i]} − 1) q_{h_i} ∂_{e_i}` and the page term at `ħ^{k₀}`.
pub fn planar_torsion_differential(desc: &PlanarTorsionDescriptor) -> Result<PlanarModel> {
    desc.validate()?;
    let rank = desc.rank;
    let t = (desc.n + desc.r) as usize;
    let mut reg = Registry::new(rank);
    let one = Rational::one();
    let mut binding = Vec::new();
    for i in 1..=desc.m {
        binding.push(reg.add(Generator { name: format!("g{i}"), parity: Parity::Even, action: one.clone(), multiplicity: 1 })?);
    }
    let mut hyp = Vec::new();
    let mut ell = Vec::new();
    for i in 1..=t {
        hyp.push(reg.add(Generator { name: format!("h{i}"), parity: Parity::Odd, action: one.clone(), multiplicity: 1 })?);
        ell.push(reg.add(Generator {
            name: format!("e{i}"),
            parity: Parity::Even,
            action: Rational::new(11.into(), 10.into()),
            multiplicity: 1,
        })?);
    }
    let zero = vec![0; rank];
    let mut d = DifferentialOperator::zero(rank);
    for i in 0..t {
        d.push(OpTerm { coeff: one.clone(), exp: desc.torus_classes[i].clone(), hbar: 0, outputs: vec![hyp[i]], inputs: vec![ell[i]], genus: 0 });
        d.push(OpTerm { coeff: -one.clone(), exp: zero.clone(), hbar: 0, outputs: vec![hyp[i]], inputs: vec![ell[i]], genus: 0 });
    }
    let mut inputs = vec![hyp[0]];
    inputs.extend(&binding);
    inputs.extend(&ell[1..desc.n as usize]);
    for i in 0..desc.r as usize {
        let e = ell[desc.n as usize + i];
        inputs.push(e);
        inputs.push(e);
    }
    let half_r = Rational::new(1.into(), (1i64 << desc.r).into());
    d.push(OpTerm { coeff: half_r, exp: desc.page_class.clone(), hbar: desc.k0(), outputs: vec![], inputs, genus: 0 });
    let full = d.consolidated(&reg);

    let mut f_gens: Vec<GenId> = binding.clone();
    f_gens.push(hyp[0]);
    f_gens.extend(&ell[1..desc.n as usize]);
    let mut f_word_gens = f_gens;
    for i in 0..desc.r as usize {
        let e = ell[desc.n as usize + i];
        f_word_gens.push(e);
        f_word_gens.push(e);
    }
    let (neg, word) = Word::from_product(&reg, &f_word_gens)
        .ok_or_else(|| Error::InvariantBreach("planar monomial F vanishes".into()))?;
    let c = if neg { -Rational::one() } else { Rational::one() };
    let f = AlgebraElement::from_word(rank, word, c);

    let (registry, operator, f) = match &desc.omega {
        None => (reg, full.clone(), f),
        Some(o) => {
            let map = LatticeMap::functional(o);
            let mut reg1 = Registry::new(1);
            for g in reg.generators() {
                reg1.add(g.clone())?;
            }
            let op = full.map_coefficients(&map)?.consolidated(&reg1);
            let f1 = f.map_coefficients(&map)?;
            (reg1, op, f1)
        }
    };
    Ok(PlanarModel { descriptor: desc.clone(), registry, operator, full_operator: full, f })
}

/// Pushes every `z`-exponent through `map`.
pub fn coefficient_morphism(x: &AlgebraElement, map: &LatticeMap) -> Result<AlgebraElement> {
    x.map_coefficients(map)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBound {
    pub k: u32,
    pub witness: AlgebraElement,
}

/// `ħ^k` with trivial coefficient.
pub fn hbar_target(rank: usize, k: u32) -> AlgebraElement {
    AlgebraElement::hbar_power(rank, k)
}

/// Least `k ≤ cfg.hbar_bound` such that `ħ^k` has a primitive in the truncation.
///
/// A hit at `k` is re-solved at `k + 1` when that still fits the truncation.
pub fn torsion_upper_bound(
    reg: &Registry,
    d: &DifferentialOperator,
    gens: &[GenId],
    cfg: &SolveConfig,
) -> Result<Option<UpperBound>> {
    for k in 0..=cfg.hbar_bound {
        let target = hbar_target(d.rank, k);
        if let SolveOutcome::Found(q) = solve_primitive(reg, d, gens, &target, cfg)? {
            if k < cfg.hbar_bound {
                let next = solve_primitive(reg, d, gens, &hbar_target(d.rank, k + 1), cfg)?;
                if next.witness().is_none() {
                    return Err(Error::InvariantBreach(format!("ħ^{k} is exact but ħ^{} is not", k + 1)));
                }
                let shifted = q.shift(&vec![0; d.rank], 1).truncate_hbar(cfg.hbar_bound);
                if apply_truncated(reg, d, &shifted, cfg.hbar_bound) != hbar_target(d.rank, k + 1) {
                    return Err(Error::InvariantBreach(format!("ħ·Q is not a primitive of ħ^{}", k + 1)));
                }
            }
            return Ok(Some(UpperBound { k, witness: q }));
        }
    }
    Ok(None)
}

/// Why a lower-bound certificate was not granted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateRefusal {
    NonzeroCount { ends: Vec<String>, count: i64 },
    NullHomologous { asymptotics: Vec<(String, u32)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerCertificate {
    /// No `Q` has `D(Q) = ħ^k + 𝒪(ħ^{k+1})`.
    pub k: u32,
    pub counts: CountTable,
    pub gamma_multisets_checked: usize,
    pub gamma_class_rank: usize,
    pub solver_unknowns: usize,
    pub solver_equations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LowerOutcome {
    Granted(LowerCertificate),
    Refused(CertificateRefusal),
}

/// Multisets of `(Γ component, multiplicity ≤ cover_max)` with at most `max_size` entries.
fn gamma_multisets(ds: &DividedSurface, cover_max: u32, max_size: usize) -> Vec<Vec<(String, u32)>> {
    let items: Vec<(String, u32)> =
        ds.gamma().iter().flat_map(|g| (1..=cover_max).map(move |n| (g.id.clone(), n))).collect();
    let mut out = Vec::new();
    fn rec(items: &[(String, u32)], start: usize, left: usize, cur: &mut Vec<(String, u32)>, out: &mut Vec<Vec<(String, u32)>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if left == 0 {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i].clone());
            rec(items, i, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(&items, 0, max_size, &mut Vec::new(), &mut out);
    out
}

/// Vanishing-count certificate at order `k`.
///
/// Curves without negative ends and `g + r ≤ k + 1` must have zero signed count, and no
/// collection of at most `k + 1` interface orbits may be null-homologous. A granted
/// certificate is cross-checked by a failing `solve_primitive` for `ħ^k + 𝒪(ħ^{k+1})`.
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_certificate(
    ds: &DividedSurface,
    orbits: &[ReebOrbit],
    cylinders: &[Cylinder],
    assembled: &AssembledDifferential,
    k: u32,
    cover_max: u32,
    cfg: &SolveConfig,
) -> Result<LowerOutcome> {
    let counts = count_index1_positive_only(orbits, cylinders, k + 1, &cfg.action_bound);
    if let Some((ends, count)) = counts.first_nonzero() {
        return Ok(LowerOutcome::Refused(CertificateRefusal::NonzeroCount { ends: ends.clone(), count }));
    }
    let sets = gamma_multisets(ds, cover_max, k as usize + 1);
    for s in &sets {
        if null_homology_check(ds, s)? {
            return Ok(LowerOutcome::Refused(CertificateRefusal::NullHomologous { asymptotics: s.clone() }));
        }
    }
    let reg = &assembled.registry;
    let gens: Vec<GenId> = reg.ids().collect();
    let target = hbar_target(assembled.operator.rank, k);
    let cross = solve_primitive(reg, &assembled.operator, &gens, &target, &cfg.clone().leading_order(k))?;
    let (unknowns, equations) = match cross {
        SolveOutcome::Found(q) => {
            return Err(Error::InvariantBreach(format!(
                "certificate at order {k} contradicted by primitive {}",
                q.render(reg)
            )))
        }
        SolveOutcome::NotFound { unknowns, equations, .. } => (unknowns, equations),
    };
    Ok(LowerOutcome::Granted(LowerCertificate {
        k,
        counts,
        gamma_multisets_checked: sets.len(),
        gamma_class_rank: ds.gamma_class_rank(),
        solver_unknowns: unknowns,
        solver_equations: equations,
    }))
}

/// Planar pieces `(0, #boundary, 0)` for the genus-zero components of `Σ±`.
///
/// Two components with identical topology make the decomposition symmetric, and then no
/// piece is reported.
pub fn planar_pieces(ds: &DividedSurface) -> Vec<(Side, usize, PlanarTorsionDescriptor)> {
    let comps: Vec<(Side, usize, u32, usize)> = [Side::Minus, Side::Plus]
        .into_iter()
        .flat_map(|s| ds.side(s).components.iter().enumerate().map(move |(i, c)| (s, i, c.genus, c.boundary.len())))
        .collect();
    if comps.len() == 2 && comps[0].2 == comps[1].2 && comps[0].3 == comps[1].3 {
        return Vec::new();
    }
    comps
        .into_iter()
        .filter(|c| c.2 == 0)
        .map(|(s, i, _, b)| (s, i, PlanarTorsionDescriptor::untwisted(0, b as u32, 0)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionParams {
    pub action_bound: Rational,
    pub hbar_bound: u32,
    pub cover_max: u32,
    pub exponent_box: i64,
    pub weight: CoverWeight,
    pub action_model: ActionModel,
}

impl TorsionParams {
    pub fn new(action_bound: Rational, hbar_bound: u32, cover_max: u32) -> Self {
        TorsionParams {
            action_bound,
            hbar_bound,
            cover_max,
            exponent_box: 3,
            weight: CoverWeight::default(),
            action_model: ActionModel::default(),
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig::new(self.action_bound.clone(), self.hbar_bound, self.exponent_box)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpperSource {
    Assembled,
    PlanarPiece { side: Side, component: usize, descriptor: PlanarTorsionDescriptor },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourcedUpper {
    pub bound: UpperBound,
    pub source: UpperSource,
    /// Rendered in the registry of its own complex.
    pub witness_text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorsionStatus {
    /// Lower and upper bounds meet.
    Complete,
    /// Only one bound, or a gap.
    Partial,
    /// Neither bound.
    Refused,
}

#[derive(Clone, Debug)]
pub struct SurfaceTorsion {
    pub orbits: Vec<ReebOrbit>,
    pub cylinders: Vec<Cylinder>,
    pub assembled: AssembledDifferential,
    pub upper: Option<SourcedUpper>,
    pub lower: Option<LowerCertificate>,
    /// Refusals met while lowering the certificate order, highest order first.
    pub refusals: Vec<(u32, CertificateRefusal)>,
    pub status: TorsionStatus,
}

/// Upper bound from the assembled operator and the planar pieces, then the highest granted
/// certificate below it.
pub fn analyze_surface(ds: &DividedSurface, params: &TorsionParams) -> Result<SurfaceTorsion> {
    let orbits = generate_orbits(ds, params.cover_max, &params.action_model)?;
    let cylinders = enumerate_cylinders(ds, &orbits, params.cover_max);
    let assembled = assemble_sft_differential(ds, &orbits, &cylinders, params.weight)?;
    let cfg = params.solve_config();
    let gens: Vec<GenId> = assembled.registry.ids().collect();

    let mut upper: Option<SourcedUpper> =
        torsion_upper_bound(&assembled.registry, &assembled.operator, &gens, &cfg)?.map(|b| SourcedUpper {
            witness_text: b.witness.render(&assembled.registry),
            bound: b,
            source: UpperSource::Assembled,
        });
    for (side, component, desc) in planar_pieces(ds) {
        if upper.as_ref().is_some_and(|u| u.bound.k <= desc.k0()) {
            continue;
        }
        let pm = planar_torsion_differential(&desc)?;
        let pcfg = SolveConfig::new(Rational::from_integer(PLANAR_ACTION_BOUND.into()), params.hbar_bound, params.exponent_box);
        if let Some(b) = torsion_upper_bound(&pm.registry, &pm.operator, &pm.generators(), &pcfg)? {
            upper = Some(SourcedUpper {
                witness_text: b.witness.render(&pm.registry),
                bound: b,
                source: UpperSource::PlanarPiece { side, component, descriptor: desc },
            });
        }
    }

    let top = match &upper {
        Some(u) if u.bound.k == 0 => None,
        Some(u) => Some(u.bound.k - 1),
        None => params.hbar_bound.checked_sub(1),
    };
    let mut lower = None;
    let mut refusals = Vec::new();
    if let Some(top) = top {
        for k in (0..=top).rev() {
            match lower_bound_certificate(ds, &orbits, &cylinders, &assembled, k, params.cover_max, &cfg)? {
                LowerOutcome::Granted(c) => {
                    lower = Some(c);
                    break;
                }
                LowerOutcome::Refused(r) => refusals.push((k, r)),
            }
        }
    }
    if let (Some(u), Some(l)) = (&upper, &lower) {
        if u.bound.k < l.k + 1 {
            return Err(Error::InvariantBreach(format!(
                "upper bound {} contradicts certificate at order {}",
                u.bound.k, l.k
            )));
        }
    }
    let status = match (&upper, &lower) {
        (Some(u), Some(l)) if u.bound.k == l.k + 1 => TorsionStatus::Complete,
        (Some(u), None) if u.bound.k == 0 => TorsionStatus::Complete,
        (None, None) => TorsionStatus::Refused,
        _ => TorsionStatus::Partial,
    };
    Ok(SurfaceTorsion { orbits, cylinders, assembled, upper, lower, refusals, status })
}

/// `D(x)` for a rendered witness check; used by front ends replaying certificates.
pub fn replay(reg: &Registry, d: &DifferentialOperator, witness: &AlgebraElement, k: u32, hbar_bound: u32) -> bool {
    apply_truncated(reg, d, witness, hbar_bound) == hbar_target(d.rank, k)
}

/// Coefficients of `D(F)` grouped by `ħ`-power, for diagnostics.
pub fn hbar_profile(x: &AlgebraElement) -> BTreeMap<u32, usize> {
    let mut m = BTreeMap::new();
    for (k, c) in x.terms() {
        if !c.is_zero() {
            *m.entry(k.hbar).or_insert(0) += 1;
        }
    }
    m
}
