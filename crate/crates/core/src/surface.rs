//! Divided surfaces `Σ = Σ₊ ∪_Γ Σ₋` with Morse data for `h_ε`.
//!
//! On `Σ₋` the index of `h_ε` equals the index of `h₋`. On `Σ₊` it is flipped, so a minimum
//! of `h₊` is a maximum of `h_ε`. Flow lines run upward in `h_ε`: from `Σ₋` towards `Σ₊`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linsolve;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceComponent {
    pub genus: u32,
    pub boundary: Vec<String>,
}

impl SurfaceComponent {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * i64::from(self.genus) - self.boundary.len() as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalPointSpec {
    pub id: String,
    pub component: usize,
    /// Morse index of `h₊` or `h₋` (not of `h_ε`).
    pub index: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InternalLineSpec {
    pub from: String,
    pub to: String,
    pub sign: i8,
    pub class: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SidedSurface {
    pub components: Vec<SurfaceComponent>,
    pub critical_points: Vec<CriticalPointSpec>,
    pub flow_lines: Vec<InternalLineSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaComponent {
    pub id: String,
    pub plus_circle: String,
    pub minus_circle: String,
    pub h1_class: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingLineSpec {
    pub from: String,
    pub through: String,
    pub to: String,
    pub sign: i8,
    pub class: Option<Vec<i64>>,
}

/// Unvalidated input for `build_divided_surface`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceSpec {
    pub plus: SidedSurface,
    pub minus: SidedSurface,
    pub gamma: Vec<GammaComponent>,
    pub crossing_flow_lines: Vec<CrossingLineSpec>,
    /// Rank of the exponent lattice for curve classes; 0 for untwisted data.
    pub h2_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalPoint {
    pub id: String,
    pub side: Side,
    pub component: usize,
    pub side_index: u8,
    /// Morse index of `h_ε`.
    pub index: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowLine {
    pub id: usize,
    pub from: String,
    pub to: String,
    /// `h_ε` index of each endpoint; `None` at a boundary circle.
    pub from_index: Option<u8>,
    pub to_index: Option<u8>,
    pub crosses_gamma: bool,
    pub through: Option<String>,
    pub sign: i8,
    pub class: Vec<i64>,
}

impl FlowLine {
    pub fn touches_boundary(&self) -> bool {
        self.from_index.is_none() || self.to_index.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividedSurface {
    spec: SurfaceSpec,
    critical: Vec<CriticalPoint>,
    crit_pos: BTreeMap<String, usize>,
    lines: Vec<FlowLine>,
    genus: u32,
}

struct SideView<'a> {
    side: Side,
    surf: &'a SidedSurface,
}

fn flip(side: Side, idx: u8) -> u8 {
    match side {
        Side::Minus => idx,
        Side::Plus => 2 - idx,
    }
}

/// Validates a spec; see the module docs for the index conventions.
pub fn build_divided_surface(spec: SurfaceSpec) -> Result<DividedSurface> {
    let sides = [SideView { side: Side::Minus, surf: &spec.minus }, SideView { side: Side::Plus, surf: &spec.plus }];
    let mut circles: BTreeMap<String, (Side, usize)> = BTreeMap::new();
    let mut critical: Vec<CriticalPoint> = Vec::new();
    let mut crit_pos: BTreeMap<String, usize> = BTreeMap::new();

    for v in &sides {
        let base = format!("/surface/{}", v.side.name());
        if v.surf.components.is_empty() {
            return Err(Error::surface(format!("{base}/components"), "side has no components"));
        }
        for (ci, comp) in v.surf.components.iter().enumerate() {
            if comp.boundary.is_empty() {
                return Err(Error::surface(format!("{base}/components/{ci}/boundary"), "component has empty boundary"));
            }
            for (bi, c) in comp.boundary.iter().enumerate() {
                if circles.insert(c.clone(), (v.side, ci)).is_some() {
                    return Err(Error::surface(format!("{base}/components/{ci}/boundary/{bi}"), format!("duplicate circle `{c}`")));
                }
            }
        }
    }
    for v in &sides {
        let base = format!("/surface/{}", v.side.name());
        let mut balance = vec![0i64; v.surf.components.len()];
        for (pi, p) in v.surf.critical_points.iter().enumerate() {
            let locus = format!("{base}/critical_points/{pi}");
            if p.component >= v.surf.components.len() {
                return Err(Error::surface(locus, format!("component {} does not exist", p.component)));
            }
            if p.index > 1 {
                return Err(Error::surface(locus, format!("index {} not allowed for h_{}", p.index, v.side.name())));
            }
            if circles.contains_key(&p.id) || crit_pos.contains_key(&p.id) {
                return Err(Error::surface(locus, format!("duplicate identifier `{}`", p.id)));
            }
            balance[p.component] += if p.index == 0 { 1 } else { -1 };
            crit_pos.insert(p.id.clone(), critical.len());
            critical.push(CriticalPoint {
                id: p.id.clone(),
                side: v.side,
                component: p.component,
                side_index: p.index,
                index: flip(v.side, p.index),
            });
        }
        for (ci, comp) in v.surf.components.iter().enumerate() {
            if balance[ci] != comp.euler_characteristic() {
                return Err(Error::surface(
                    format!("{base}/components/{ci}"),
                    format!(
                        "#index0 - #index1 = {} but the Euler characteristic is {}",
                        balance[ci],
                        comp.euler_characteristic()
                    ),
                ));
            }
        }
    }

    let n_plus: usize = spec.plus.components.iter().map(|c| c.boundary.len()).sum();
    let n_minus: usize = spec.minus.components.iter().map(|c| c.boundary.len()).sum();
    if n_plus != n_minus {
        return Err(Error::surface("/surface", format!("boundary-count mismatch: {n_plus} plus circles, {n_minus} minus circles")));
    }

    let chi: i64 = spec.plus.components.iter().chain(&spec.minus.components).map(|c| c.euler_characteristic()).sum();
    if chi > 2 || chi % 2 != 0 {
        return Err(Error::surface("/surface", format!("Euler characteristic {chi} is not that of a closed surface")));
    }
    let genus = ((2 - chi) / 2) as u32;

    let mut gamma_ids: BTreeSet<&str> = BTreeSet::new();
    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut class_sum = vec![0i64; 2 * genus as usize];
    for (gi, g) in spec.gamma.iter().enumerate() {
        let locus = format!("/surface/gamma/{gi}");
        if !gamma_ids.insert(&g.id) || circles.contains_key(&g.id) || crit_pos.contains_key(&g.id) {
            return Err(Error::surface(locus, format!("duplicate identifier `{}`", g.id)));
        }
        for (circle, side) in [(&g.plus_circle, Side::Plus), (&g.minus_circle, Side::Minus)] {
            match circles.get(circle) {
                Some((s, _)) if *s == side => {}
                _ => return Err(Error::surface(locus, format!("`{circle}` is not a {} boundary circle", side.name()))),
            }
            if !used.insert(circle) {
                return Err(Error::surface(locus, format!("circle `{circle}` glued twice")));
            }
        }
        if g.h1_class.len() != class_sum.len() {
            return Err(Error::surface(
                format!("{locus}/h1_class"),
                format!("expected length {} (twice the genus), found {}", class_sum.len(), g.h1_class.len()),
            ));
        }
        for (s, c) in class_sum.iter_mut().zip(&g.h1_class) {
            *s += c;
        }
    }
    if used.len() != circles.len() {
        let missing = circles.keys().find(|c| !used.contains(c.as_str())).cloned().unwrap_or_default();
        return Err(Error::surface("/surface/gamma", format!("circle `{missing}` is not glued")));
    }
    if class_sum.iter().any(|c| *c != 0) {
        return Err(Error::surface("/surface/gamma", "h1 classes of the gamma components do not sum to zero"));
    }

    // Connectivity of the component graph.
    let n_minus_comp = spec.minus.components.len();
    let node = |side: Side, ci: usize| match side {
        Side::Minus => ci,
        Side::Plus => n_minus_comp + ci,
    };
    let total = n_minus_comp + spec.plus.components.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for g in &spec.gamma {
        let (sp, cp) = circles[&g.plus_circle];
        let (sm, cm) = circles[&g.minus_circle];
        let a = find(&mut parent, node(sp, cp));
        let b = find(&mut parent, node(sm, cm));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    if (0..total).any(|i| find(&mut parent, i) != root) {
        return Err(Error::surface("/surface", "the glued surface is disconnected"));
    }

    let mut lines = Vec::new();
    let class_of = |c: &Option<Vec<i64>>, locus: &str| -> Result<Vec<i64>> {
        match c {
            None => Ok(vec![0; spec.h2_rank]),
            Some(v) if v.len() == spec.h2_rank => Ok(v.clone()),
            Some(v) => Err(Error::surface(format!("{locus}/class"), format!("expected length {}, found {}", spec.h2_rank, v.len()))),
        }
    };
    for v in &sides {
        for (li, l) in v.surf.flow_lines.iter().enumerate() {
            let locus = format!("/surface/{}/flow_lines/{li}", v.side.name());
            if l.sign != 1 && l.sign != -1 {
                return Err(Error::surface(locus, "sign must be +1 or -1"));
            }
            let end = |id: &str| -> Result<Option<u8>> {
                if let Some(&p) = crit_pos.get(id) {
                    if critical[p].side != v.side {
                        return Err(Error::surface(locus.clone(), format!("`{id}` lies on the other side")));
                    }
                    return Ok(Some(critical[p].index));
                }
                match circles.get(id) {
                    Some((s, _)) if *s == v.side => Ok(None),
                    Some(_) => Err(Error::surface(locus.clone(), format!("`{id}` lies on the other side"))),
                    None => Err(Error::UnknownId(id.into())),
                }
            };
            let (a, b) = (end(&l.from)?, end(&l.to)?);
            match (a, b) {
                (None, None) => return Err(Error::surface(locus, "a flow line needs a critical endpoint")),
                (Some(1), Some(1)) => return Err(Error::surface(locus, "saddle-to-saddle connection")),
                (Some(x), Some(y)) if y != x + 1 => {
                    return Err(Error::surface(locus, format!("flow line must raise the h_ε index by one, found {x} -> {y}")))
                }
                _ => {}
            }
            lines.push(FlowLine {
                id: lines.len(),
                from: l.from.clone(),
                to: l.to.clone(),
                from_index: a,
                to_index: b,
                crosses_gamma: false,
                through: None,
                sign: l.sign,
                class: class_of(&l.class, &locus)?,
            });
        }
    }
    for (li, l) in spec.crossing_flow_lines.iter().enumerate() {
        let locus = format!("/surface/crossing_flow_lines/{li}");
        if l.sign != 1 && l.sign != -1 {
            return Err(Error::surface(locus, "sign must be +1 or -1"));
        }
        let from = crit_pos.get(&l.from).map(|p| &critical[*p]).ok_or_else(|| Error::UnknownId(l.from.clone()))?;
        let to = crit_pos.get(&l.to).map(|p| &critical[*p]).ok_or_else(|| Error::UnknownId(l.to.clone()))?;
        let g = spec.gamma.iter().find(|g| g.id == l.through).ok_or_else(|| Error::UnknownId(l.through.clone()))?;
        if from.side != Side::Minus || to.side != Side::Plus {
            return Err(Error::surface(locus, "crossing lines run from the minus side to the plus side"));
        }
        if circles[&g.minus_circle].1 != from.component || circles[&g.plus_circle].1 != to.component {
            return Err(Error::surface(locus, format!("`{}` does not separate the endpoint components", g.id)));
        }
        if from.index == 1 && to.index == 1 {
            return Err(Error::surface(locus, "saddle-to-saddle connection"));
        }
        lines.push(FlowLine {
            id: lines.len(),
            from: l.from.clone(),
            to: l.to.clone(),
            from_index: Some(from.index),
            to_index: Some(to.index),
            crosses_gamma: true,
            through: Some(l.through.clone()),
            sign: l.sign,
            class: class_of(&l.class, &locus)?,
        });
    }

    Ok(DividedSurface { spec, critical, crit_pos, lines, genus })
}

/// Boundary matrices of the Morse complex of `h_ε` over ℚ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorseComplex {
    pub index0: Vec<String>,
    pub index1: Vec<String>,
    pub index2: Vec<String>,
    /// `d1[x][y]`: signed count of lines from the minimum `x` up to the saddle `y`.
    pub d1: Vec<Vec<Rational>>,
    /// `d2[y][m]`: signed count of lines from the saddle `y` up to the maximum `m`.
    pub d2: Vec<Vec<Rational>>,
}

impl DividedSurface {
    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * i64::from(self.genus)
    }

    pub fn h2_rank(&self) -> usize {
        self.spec.h2_rank
    }

    /// Minus-side points first, each side in listing order.
    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }

    pub fn critical_point(&self, id: &str) -> Result<&CriticalPoint> {
        self.crit_pos.get(id).map(|p| &self.critical[*p]).ok_or_else(|| Error::UnknownId(id.into()))
    }

    pub fn gamma(&self) -> &[GammaComponent] {
        &self.spec.gamma
    }

    pub fn side(&self, side: Side) -> &SidedSurface {
        match side {
            Side::Minus => &self.spec.minus,
            Side::Plus => &self.spec.plus,
        }
    }

    /// Counts of critical points of `h_ε` by index.
    pub fn index_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for p in &self.critical {
            c[p.index as usize] += 1;
        }
        c
    }

    /// Rank of the matrix whose rows are the `h1_class` vectors of `Γ`.
    pub fn gamma_class_rank(&self) -> usize {
        let rows: Vec<Vec<i64>> = self.spec.gamma.iter().map(|g| g.h1_class.clone()).collect();
        linsolve::rank_i64(&rows)
    }

    pub fn morse_complex(&self) -> MorseComplex {
        let by = |i: u8| -> Vec<String> { self.critical.iter().filter(|p| p.index == i).map(|p| p.id.clone()).collect() };
        let (i0, i1, i2) = (by(0), by(1), by(2));
        let pos = |v: &[String], id: &str| v.iter().position(|x| x == id);
        let mut d1 = vec![vec![Rational::zero(); i1.len()]; i0.len()];
        let mut d2 = vec![vec![Rational::zero(); i2.len()]; i1.len()];
        for l in &self.lines {
            let s = Rational::from_integer(l.sign.into());
            match (l.from_index, l.to_index) {
                (Some(0), Some(1)) => {
                    let (a, b) = (pos(&i0, &l.from).expect("index 0"), pos(&i1, &l.to).expect("index 1"));
                    d1[a][b] += s;
                }
                (Some(1), Some(2)) => {
                    let (a, b) = (pos(&i1, &l.from).expect("index 1"), pos(&i2, &l.to).expect("index 2"));
                    d2[a][b] += s;
                }
                _ => {}
            }
        }
        MorseComplex { index0: i0, index1: i1, index2: i2, d1, d2 }
    }
}

/// Betti numbers of the Morse complex of `h_ε`.
pub fn morse_homology(ds: &DividedSurface) -> Result<[usize; 3]> {
    let mc = ds.morse_complex();
    let prod = linsolve::mat_mul(&mc.d1, &mc.d2);
    for (a, row) in prod.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if !v.is_zero() {
                return Err(Error::MorseSquare { minimum: mc.index0[a].clone(), maximum: mc.index2[b].clone() });
            }
        }
    }
    let r1 = linsolve::rank(&mc.d1);
    let r2 = linsolve::rank(&mc.d2);
    Ok([mc.index0.len() - r1, mc.index1.len() - r1 - r2, mc.index2.len() - r2])
}

/// Every stored flow line with its derived attributes, internal lines first.
pub fn enumerate_flow_lines(ds: &DividedSurface) -> &[FlowLine] {
    &ds.lines
}

/// Whether `Σ mult · [Γ_i]` vanishes in `H₁(Σ)`.
pub fn null_homology_check(ds: &DividedSurface, asymptotics: &[(String, u32)]) -> Result<bool> {
    let mut sum = vec![0i64; 2 * ds.genus as usize];
    for (id, mult) in asymptotics {
        let g = ds.spec.gamma.iter().find(|g| &g.id == id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        if *mult == 0 {
            return Err(Error::Precondition(format!("multiplicity of `{id}` must be positive")));
        }
        for (s, c) in sum.iter_mut().zip(&g.h1_class) {
            *s += i64::from(*mult) * c;
        }
    }
    Ok(sum.iter().all(|x| *x == 0))
}
