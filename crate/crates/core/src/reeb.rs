//! Reeb orbits `γ_z^n` over the critical points of `h_ε`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::algebra::{Generator, Parity, Registry};
use crate::error::{Error, Result};
use crate::surface::DividedSurface;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OrbitKind {
    Elliptic,
    Hyperbolic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReebOrbit {
    pub critical_point: String,
    pub cover: u32,
    pub morse_index: u8,
    pub cz_index: i64,
    pub parity: Parity,
    pub action: Rational,
    pub kind: OrbitKind,
}

impl ReebOrbit {
    /// Generator name: the critical point id for simple orbits, `id^n` for covers.
    pub fn name(&self) -> String {
        orbit_name(&self.critical_point, self.cover)
    }
}

pub fn orbit_name(critical_point: &str, cover: u32) -> String {
    if cover == 1 {
        critical_point.into()
    } else {
        format!("{critical_point}^{cover}")
    }
}

/// Conley-Zehnder index of `γ_z^n` in the `S¹`-invariant trivialization.
pub fn conley_zehnder(morse_index: u8, n: u32) -> Result<i64> {
    if n == 0 {
        return Err(Error::Precondition("cover multiplicity must be positive".into()));
    }
    match morse_index {
        0 | 2 => Ok(1),
        1 => Ok(0),
        i => Err(Error::InvalidMorseIndex(i)),
    }
}

/// Base periods of the simple orbits.
///
/// Without an override, `γ_z` gets `1 + δ + (p + 1) / (100 (N + 1))` where `δ` depends on
/// the index of `h_±` at `z`, `p` is the position of `z` and `N` the number of critical
/// points. Minima of `h_±` sit above saddles, so every cylinder lowers action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionModel {
    pub delta_extremum: Rational,
    pub delta_saddle: Rational,
    pub tie_break: bool,
    pub overrides: BTreeMap<String, Rational>,
}

impl Default for ActionModel {
    fn default() -> Self {
        ActionModel {
            delta_extremum: Rational::new(1.into(), 5.into()),
            delta_saddle: Rational::new(1.into(), 10.into()),
            tie_break: true,
            overrides: BTreeMap::new(),
        }
    }
}

impl ActionModel {
    pub fn base_action(&self, ds: &DividedSurface, id: &str) -> Result<Rational> {
        if let Some(a) = self.overrides.get(id) {
            ds.critical_point(id)?;
            return Ok(a.clone());
        }
        let pts = ds.critical_points();
        let pos = pts.iter().position(|p| p.id == id).ok_or_else(|| Error::UnknownId(id.into()))?;
        let delta = if pts[pos].side_index == 0 { &self.delta_extremum } else { &self.delta_saddle };
        let mut a = Rational::from_integer(1.into()) + delta;
        if self.tie_break {
            a += Rational::new((pos as i64 + 1).into(), (100 * (pts.len() as i64 + 1)).into());
        }
        Ok(a)
    }

    fn check(&self, ds: &DividedSurface) -> Result<()> {
        for (id, a) in &self.overrides {
            ds.critical_point(id)?;
            if *a <= Rational::zero() {
                return Err(Error::Precondition(format!("base action of `{id}` must be positive")));
            }
        }
        if self.delta_extremum < Rational::zero() || self.delta_saddle < Rational::zero() {
            return Err(Error::Precondition("action perturbations must be non-negative".into()));
        }
        Ok(())
    }
}

/// One orbit per critical point and cover `n ≤ cover_max`, grouped by critical point.
pub fn generate_orbits(ds: &DividedSurface, cover_max: u32, model: &ActionModel) -> Result<Vec<ReebOrbit>> {
    if cover_max == 0 {
        return Err(Error::Precondition("cover_max must be at least 1".into()));
    }
    model.check(ds)?;
    let mut out = Vec::new();
    for p in ds.critical_points() {
        let base = model.base_action(ds, &p.id)?;
        for n in 1..=cover_max {
            let cz = conley_zehnder(p.index, n)?;
            let kind = if p.index == 1 { OrbitKind::Hyperbolic } else { OrbitKind::Elliptic };
            out.push(ReebOrbit {
                critical_point: p.id.clone(),
                cover: n,
                morse_index: p.index,
                cz_index: cz,
                parity: Parity::from_cz(cz),
                action: &base * Rational::from_integer(n.into()),
                kind,
            });
        }
    }
    // A cover is bad when its CZ parity differs from the simple orbit's; here CZ is constant.
    debug_assert!(out.iter().all(|o| o.cz_index == conley_zehnder(o.morse_index, 1).unwrap_or(-1)));
    Ok(out)
}

/// Registers the orbits as generators, in the given order.
pub fn orbit_registry(orbits: &[ReebOrbit], rank: usize) -> Result<Registry> {
    let mut reg = Registry::new(rank);
    for o in orbits {
        reg.add(Generator { name: o.name(), parity: o.parity, action: o.action.clone(), multiplicity: o.cover })?;
    }
    Ok(reg)
}
