//! Holomorphic cylinders over flow lines of `h_ε` and the assembled SFT differential.
//!
//! | type | flow line                | ind | ends           |
//! |------|--------------------------|-----|----------------|
//! | 1    | min in `Σ₋` → max in `Σ₊`  | 2   | two positive   |
//! | 2    | saddle → max inside `Σ₊`  | 1   | one of each    |
//! | 3    | min → saddle inside `Σ₋`  | 1   | one of each    |
//! | 4    | min in `Σ₋` → saddle in `Σ₊` | 1 | two positive   |
//! | 5    | saddle in `Σ₋` → max in `Σ₊` | 1 | two positive   |

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use crate::algebra::{GenId, Registry};
use crate::error::{Error, Result};
use crate::lattice::{scale_exp, Exponent};
use crate::operator::{DifferentialOperator, OpTerm};
use crate::reeb::{orbit_registry, OrbitKind, ReebOrbit};
use crate::surface::{DividedSurface, FlowLine};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CylinderType {
    Trivial,
    Type1,
    Type2,
    Type3,
    Type4,
    Type5,
}

impl CylinderType {
    pub fn number(self) -> Option<u8> {
        match self {
            CylinderType::Trivial => None,
            CylinderType::Type1 => Some(1),
            CylinderType::Type2 => Some(2),
            CylinderType::Type3 => Some(3),
            CylinderType::Type4 => Some(4),
            CylinderType::Type5 => Some(5),
        }
    }

    pub fn expected_index(self) -> i64 {
        match self {
            CylinderType::Trivial => 0,
            CylinderType::Type1 => 2,
            _ => 1,
        }
    }

    fn classify(line: &FlowLine) -> Option<Self> {
        let (from, to) = (line.from_index?, line.to_index?);
        match (line.crosses_gamma, from, to) {
            (true, 0, 2) => Some(CylinderType::Type1),
            (false, 1, 2) => Some(CylinderType::Type2),
            (false, 0, 1) => Some(CylinderType::Type3),
            (true, 0, 1) => Some(CylinderType::Type4),
            (true, 1, 2) => Some(CylinderType::Type5),
            _ => None,
        }
    }
}

/// Ends refer to positions in the orbit list passed to `enumerate_cylinders`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    /// `None` for a trivial cylinder.
    pub flow_line: Option<usize>,
    pub critical_point: Option<String>,
    pub cover: u32,
    pub positive_ends: Vec<usize>,
    pub negative_ends: Vec<usize>,
    pub cyl_type: CylinderType,
    pub fredholm_index: i64,
    pub sign: i8,
    pub homology_class: Exponent,
}

fn orbit_lookup(orbits: &[ReebOrbit]) -> BTreeMap<(&str, u32), usize> {
    orbits.iter().enumerate().map(|(i, o)| ((o.critical_point.as_str(), o.cover), i)).collect()
}

fn fredholm_index(orbits: &[ReebOrbit], pos: &[usize], neg: &[usize]) -> i64 {
    pos.iter().map(|i| orbits[*i].cz_index).sum::<i64>() - neg.iter().map(|i| orbits[*i].cz_index).sum::<i64>()
}

/// All covers `u_x^n` of flow-line cylinders plus one trivial cylinder per orbit.
///
/// Covers whose orbits are missing from `orbits` are skipped, as are lines ending on `Γ`.
pub fn enumerate_cylinders(ds: &DividedSurface, orbits: &[ReebOrbit], cover_max: u32) -> Vec<Cylinder> {
    let lookup = orbit_lookup(orbits);
    let rank = ds.h2_rank();
    let mut out = Vec::new();
    for line in crate::surface::enumerate_flow_lines(ds) {
        let Some(ty) = CylinderType::classify(line) else { continue };
        for n in 1..=cover_max {
            let (Some(&a), Some(&b)) = (lookup.get(&(line.from.as_str(), n)), lookup.get(&(line.to.as_str(), n))) else {
                continue;
            };
            let (pos, neg) = match ty {
                CylinderType::Type2 => (vec![b], vec![a]),
                CylinderType::Type3 => (vec![a], vec![b]),
                _ => (vec![a, b], vec![]),
            };
            let class = if line.class.len() == rank { scale_exp(&line.class, i64::from(n)) } else { vec![0; rank] };
            out.push(Cylinder {
                flow_line: Some(line.id),
                critical_point: None,
                cover: n,
                fredholm_index: fredholm_index(orbits, &pos, &neg),
                positive_ends: pos,
                negative_ends: neg,
                cyl_type: ty,
                sign: line.sign,
                homology_class: class,
            });
        }
    }
    for (i, o) in orbits.iter().enumerate() {
        out.push(Cylinder {
            flow_line: None,
            critical_point: Some(o.critical_point.clone()),
            cover: o.cover,
            positive_ends: vec![i],
            negative_ends: vec![i],
            cyl_type: CylinderType::Trivial,
            fredholm_index: 0,
            sign: 1,
            homology_class: vec![0; rank],
        });
    }
    out
}

/// Genus-zero automatic transversality: `ind > −2 + #Γ₀`, where `Γ₀` are the ends at
/// orbits of even Conley-Zehnder index.
pub fn automatic_transversality_check(c: &Cylinder, orbits: &[ReebOrbit]) -> bool {
    let gamma0 = c.positive_ends.iter().chain(&c.negative_ends).filter(|i| orbits[**i].cz_index % 2 == 0).count();
    c.fredholm_index > -2 + gamma0 as i64
}

/// A hypothetical multiple cover of the trivial cylinder over `γ_z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrivialCoverRecord {
    pub critical_point: String,
    pub genus: u32,
    pub positive_covers: Vec<u32>,
    pub negative_covers: Vec<u32>,
    pub claimed_index: i64,
}

/// Index of a cover of a trivial cylinder computed from its topology.
pub fn trivial_cover_index(kind: OrbitKind, genus: u32, n_pos: usize, n_neg: usize) -> i64 {
    let chi = 2 - 2 * i64::from(genus) - n_pos as i64 - n_neg as i64;
    match kind {
        OrbitKind::Hyperbolic => -chi,
        OrbitKind::Elliptic => -chi + n_pos as i64 - n_neg as i64,
    }
}

/// Accepts a record only if its degrees match, its claimed index equals the computed one,
/// and that index respects the lower bound for covers of trivial cylinders.
pub fn validate_trivial_cover(ds: &DividedSurface, rec: &TrivialCoverRecord) -> Result<i64> {
    let p = ds.critical_point(&rec.critical_point)?;
    let bad = |reason: String| Err(Error::Precondition(format!("cover of trivial cylinder over `{}`: {reason}", rec.critical_point)));
    if rec.positive_covers.is_empty() || rec.negative_covers.is_empty() {
        return bad("needs at least one end of each sign".into());
    }
    if rec.positive_covers.iter().chain(&rec.negative_covers).any(|n| *n == 0) {
        return bad("cover multiplicities must be positive".into());
    }
    let (dp, dn): (u32, u32) = (rec.positive_covers.iter().sum(), rec.negative_covers.iter().sum());
    if dp != dn {
        return bad(format!("positive degree {dp} differs from negative degree {dn}"));
    }
    let kind = if p.index == 1 { OrbitKind::Hyperbolic } else { OrbitKind::Elliptic };
    let (np, nn) = (rec.positive_covers.len(), rec.negative_covers.len());
    let bound = match kind {
        OrbitKind::Hyperbolic => 0,
        OrbitKind::Elliptic => 2 * i64::from(rec.genus) + 2 * (np as i64 - 1),
    };
    if rec.claimed_index < bound {
        return bad(format!("index {} is below the lower bound {bound}", rec.claimed_index));
    }
    let actual = trivial_cover_index(kind, rec.genus, np, nn);
    if actual != rec.claimed_index {
        return bad(format!("claimed index {} but the topology gives {actual}", rec.claimed_index));
    }
    Ok(actual)
}

/// Signed counts of index-1 curves without negative ends, keyed by their positive ends.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    /// Orbit names of the positive ends (sorted) to the signed count.
    pub entries: BTreeMap<Vec<String>, i64>,
    /// Number of cylinders contributing to each entry.
    pub contributors: BTreeMap<Vec<String>, usize>,
    /// Signed count per cylinder type and critical point at an end.
    pub by_type_and_end: BTreeMap<(u8, String), i64>,
}

impl CountTable {
    pub fn all_vanish(&self) -> bool {
        self.entries.values().all(|v| *v == 0)
    }

    pub fn first_nonzero(&self) -> Option<(&Vec<String>, i64)> {
        self.entries.iter().find(|(_, v)| **v != 0).map(|(k, v)| (k, *v))
    }
}

/// Index-1 connected curves with no negative ends, `g + r ≤ max_g_plus_r`, and total period
/// below `action_bound`. In this model they are covers of type 4 and 5 cylinders (`g = 0`,
/// `r = 2`); type 1 cylinders have index 2 and do not enter.
pub fn count_index1_positive_only(
    orbits: &[ReebOrbit],
    cylinders: &[Cylinder],
    max_g_plus_r: u32,
    action_bound: &Rational,
) -> CountTable {
    let mut table = CountTable::default();
    if max_g_plus_r < 2 {
        return table;
    }
    for c in cylinders {
        if c.fredholm_index != 1 || !c.negative_ends.is_empty() {
            continue;
        }
        let total: Rational = c.positive_ends.iter().map(|i| orbits[*i].action.clone()).sum();
        if &total >= action_bound {
            continue;
        }
        let mut key: Vec<String> = c.positive_ends.iter().map(|i| orbits[*i].name()).collect();
        key.sort();
        *table.entries.entry(key.clone()).or_default() += i64::from(c.sign);
        *table.contributors.entry(key).or_default() += 1;
        let ty = c.cyl_type.number().unwrap_or(0);
        for i in &c.positive_ends {
            *table.by_type_and_end.entry((ty, orbits[*i].critical_point.clone())).or_default() += i64::from(c.sign);
        }
    }
    table
}

/// Weight of an `n`-fold cover in the assembled operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoverWeight {
    /// `1/n`: `n` marker choices divided by the deck group and the `κ` factors.
    #[default]
    Deck,
    /// Every cover counts with weight one.
    Unit,
    /// Only simple cylinders enter.
    SimpleOnly,
}

impl CoverWeight {
    fn weight(self, n: u32) -> Option<Rational> {
        match self {
            CoverWeight::Deck => Some(Rational::new(1.into(), n.into())),
            CoverWeight::Unit => Some(Rational::one()),
            CoverWeight::SimpleOnly => (n == 1).then(Rational::one),
        }
    }
}

/// The assembled operator together with the registry it is written in.
#[derive(Clone, Debug)]
pub struct AssembledDifferential {
    pub registry: Registry,
    pub operator: DifferentialOperator,
}

/// Assembles `D` from the index-1 cylinders.
///
/// Types 2 and 3 give `q_{neg} ∂_{pos}` at `ħ⁰`, types 4 and 5 give `ħ ∂_a ∂_b` with the
/// inputs in registry order. Type 1 has index 2 and trivial cylinders index 0, so neither
/// enters.
pub fn assemble_sft_differential(
    ds: &DividedSurface,
    orbits: &[ReebOrbit],
    cylinders: &[Cylinder],
    weight: CoverWeight,
) -> Result<AssembledDifferential> {
    check_class_consistency(ds)?;
    let rank = ds.h2_rank();
    let registry = orbit_registry(orbits, rank)?;
    let mut d = DifferentialOperator::zero(rank);
    for c in cylinders {
        if c.fredholm_index != 1 {
            continue;
        }
        let Some(w) = weight.weight(c.cover) else { continue };
        let coeff = w * Rational::from_integer(c.sign.into());
        let id = |i: &usize| -> GenId { *i };
        let mut inputs: Vec<GenId> = c.positive_ends.iter().map(id).collect();
        inputs.sort();
        let outputs: Vec<GenId> = c.negative_ends.iter().map(id).collect();
        let hbar = inputs.len() as u32 - 1;
        d.push(OpTerm { coeff, exp: c.homology_class.clone(), hbar, outputs, inputs, genus: 0 });
    }
    let d = d.consolidated(&registry);
    if let Some(&term) = d.action_violations(&registry, true).first() {
        return Err(Error::TruncationViolation { term });
    }
    Ok(AssembledDifferential { registry, operator: d })
}

/// Every two-step route `x → y → z` through a saddle must carry the same class for fixed
/// `(x, z)`.
fn check_class_consistency(ds: &DividedSurface) -> Result<()> {
    let lines = crate::surface::enumerate_flow_lines(ds);
    let mut routes: BTreeMap<(&str, &str), Exponent> = BTreeMap::new();
    for a in lines.iter().filter(|l| l.from_index == Some(0) && l.to_index == Some(1)) {
        for b in lines.iter().filter(|l| l.from == a.to && l.to_index == Some(2)) {
            let sum: Exponent = a.class.iter().zip(&b.class).map(|(x, y)| x + y).collect();
            match routes.get(&(a.from.as_str(), b.to.as_str())) {
                Some(prev) if *prev != sum => {
                    return Err(Error::InconsistentClassData { from: a.from.clone(), to: b.to.clone() })
                }
                Some(_) => {}
                None => {
                    routes.insert((a.from.as_str(), b.to.as_str()), sum);
                }
            }
        }
    }
    Ok(())
}
