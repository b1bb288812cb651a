//! The input document and its conversion into core types.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sft_torsion_core::ech::{Contribution, CurveEdge, CzData, EchComplex, EchOrbit, EchOrbitKind, OrbitSet};
use sft_torsion_core::surface::{
    CriticalPointSpec, CrossingLineSpec, GammaComponent, InternalLineSpec, SidedSurface, SurfaceComponent, SurfaceSpec,
};
use sft_torsion_core::torsion::PlanarTorsionDescriptor;
use sft_torsion_core::Rational;

use crate::error::CliError;

/// An exact rational written as `"p/q"`, `"p"` or a JSON integer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Q(pub Rational);

impl Q {
    pub fn int(n: i64) -> Self {
        Q(Rational::from_integer(n.into()))
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Q {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rational::from_str(s.trim()).map(Q).map_err(|_| format!("`{s}` is not a rational number"))
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Q::int(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planar_torsion: Option<PlanarDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ech_complex: Option<EchDoc>,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub coefficients: Coefficients,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default = "default_action")]
    pub action_bound: Q,
    #[serde(default = "default_hbar")]
    pub hbar_bound: u32,
    #[serde(default = "default_cover")]
    pub cover_max: u32,
    #[serde(default = "default_box")]
    pub exponent_box: i64,
}

fn default_action() -> Q {
    Q::int(5)
}
fn default_hbar() -> u32 {
    2
}
fn default_cover() -> u32 {
    1
}
fn default_box() -> i64 {
    3
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            action_bound: default_action(),
            hbar_bound: default_hbar(),
            cover_max: default_cover(),
            exponent_box: default_box(),
        }
    }
}

impl Truncation {
    pub fn check(&self) -> Result<(), CliError> {
        if self.action_bound.0 <= Rational::from_integer(0.into()) {
            return Err(CliError::schema("/truncation/action_bound", "must be positive"));
        }
        if self.cover_max == 0 {
            return Err(CliError::schema("/truncation/cover_max", "must be positive"));
        }
        if self.exponent_box <= 0 {
            return Err(CliError::schema("/truncation/exponent_box", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficients {
    #[default]
    Untwisted,
    Twisted {
        omega: Vec<i64>,
    },
    FullyTwisted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub genus: u32,
    pub boundary: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalPointDoc {
    pub id: String,
    pub component: usize,
    pub index: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub from: String,
    pub to: String,
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideDoc {
    pub components: Vec<ComponentDoc>,
    pub critical_points: Vec<CriticalPointDoc>,
    #[serde(default)]
    pub flow_lines: Vec<LineDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaDoc {
    pub id: String,
    pub plus_circle: String,
    pub minus_circle: String,
    pub h1_class: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingDoc {
    pub from: String,
    pub through: String,
    pub to: String,
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceDoc {
    pub plus: SideDoc,
    pub minus: SideDoc,
    pub gamma: Vec<GammaDoc>,
    #[serde(default)]
    pub crossing_flow_lines: Vec<CrossingDoc>,
    #[serde(default)]
    pub h2_rank: usize,
    /// Base actions of simple orbits by critical point id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub action_overrides: BTreeMap<String, Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarDoc {
    pub m: u32,
    pub n: u32,
    #[serde(default)]
    pub r: u32,
    /// Explicit lattice classes; without them the coefficient mode picks the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_class: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus_classes: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKindDoc {
    Elliptic,
    PositiveHyperbolic,
    NegativeHyperbolic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CzDoc {
    Constant(i64),
    Table(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchOrbitDoc {
    pub id: String,
    pub kind: OrbitKindDoc,
    pub action: Q,
    pub cz: CzDoc,
}

/// Orbit id to multiplicity; `{}` is the empty set.
pub type OrbitSetDoc = BTreeMap<String, u32>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContributionDoc {
    pub from: OrbitSetDoc,
    pub to: OrbitSetDoc,
    pub c_tau: i64,
    pub q_tau: i64,
    pub sign: i8,
    #[serde(default)]
    pub genus: u32,
    /// Defaults to one end per unit of multiplicity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_ends: Option<OrbitSetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_ends: Option<OrbitSetDoc>,
    #[serde(default)]
    pub irreducible: bool,
    #[serde(default)]
    pub ind_equals_i: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    pub from: OrbitSetDoc,
    pub to: OrbitSetDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchDoc {
    pub orbits: Vec<EchOrbitDoc>,
    pub generators: Vec<OrbitSetDoc>,
    pub contributions: Vec<ContributionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<Vec<CurveDoc>>,
}

/// Which of the three payload keys a document carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Surface,
    PlanarTorsion,
    EchComplex,
}

pub(crate) fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses a document, reporting schema errors with a JSON-pointer locus.
pub fn parse_document(text: &str) -> Result<Document, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let locus = pointer(e.path());
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::schema("/", inner.to_string())
        } else {
            CliError::schema(locus, inner.to_string())
        }
    })?;
    doc.payload()?;
    doc.truncation.check()?;
    Ok(doc)
}

impl Document {
    pub fn payload(&self) -> Result<Payload, CliError> {
        match (&self.surface, &self.planar_torsion, &self.ech_complex) {
            (Some(_), None, None) => Ok(Payload::Surface),
            (None, Some(_), None) => Ok(Payload::PlanarTorsion),
            (None, None, Some(_)) => Ok(Payload::EchComplex),
            _ => Err(CliError::schema(
                "/",
                "exactly one of `surface`, `planar_torsion`, `ech_complex` is required",
            )),
        }
    }

    pub fn with_surface(s: SurfaceDoc, truncation: Truncation) -> Self {
        Document { surface: Some(s), planar_torsion: None, ech_complex: None, truncation, coefficients: Coefficients::Untwisted }
    }

    pub fn with_planar(p: PlanarDoc, truncation: Truncation, coefficients: Coefficients) -> Self {
        Document { surface: None, planar_torsion: Some(p), ech_complex: None, truncation, coefficients }
    }

    pub fn with_ech(e: EchDoc, truncation: Truncation) -> Self {
        Document { surface: None, planar_torsion: None, ech_complex: Some(e), truncation, coefficients: Coefficients::Untwisted }
    }
}

fn side_doc(s: &SidedSurface) -> SideDoc {
    SideDoc {
        components: s.components.iter().map(|c| ComponentDoc { genus: c.genus, boundary: c.boundary.clone() }).collect(),
        critical_points: s
            .critical_points
            .iter()
            .map(|p| CriticalPointDoc { id: p.id.clone(), component: p.component, index: p.index })
            .collect(),
        flow_lines: s
            .flow_lines
            .iter()
            .map(|l| LineDoc { from: l.from.clone(), to: l.to.clone(), sign: l.sign, class: l.class.clone() })
            .collect(),
    }
}

fn side_spec(s: &SideDoc) -> SidedSurface {
    SidedSurface {
        components: s.components.iter().map(|c| SurfaceComponent { genus: c.genus, boundary: c.boundary.clone() }).collect(),
        critical_points: s
            .critical_points
            .iter()
            .map(|p| CriticalPointSpec { id: p.id.clone(), component: p.component, index: p.index })
            .collect(),
        flow_lines: s
            .flow_lines
            .iter()
            .map(|l| InternalLineSpec { from: l.from.clone(), to: l.to.clone(), sign: l.sign, class: l.class.clone() })
            .collect(),
    }
}

impl SurfaceDoc {
    pub fn from_spec(spec: &SurfaceSpec) -> Self {
        SurfaceDoc {
            plus: side_doc(&spec.plus),
            minus: side_doc(&spec.minus),
            gamma: spec
                .gamma
                .iter()
                .map(|g| GammaDoc {
                    id: g.id.clone(),
                    plus_circle: g.plus_circle.clone(),
                    minus_circle: g.minus_circle.clone(),
                    h1_class: g.h1_class.clone(),
                })
                .collect(),
            crossing_flow_lines: spec
                .crossing_flow_lines
                .iter()
                .map(|l| CrossingDoc {
                    from: l.from.clone(),
                    through: l.through.clone(),
                    to: l.to.clone(),
                    sign: l.sign,
                    class: l.class.clone(),
                })
                .collect(),
            h2_rank: spec.h2_rank,
            action_overrides: BTreeMap::new(),
        }
    }

    pub fn to_spec(&self) -> SurfaceSpec {
        SurfaceSpec {
            plus: side_spec(&self.plus),
            minus: side_spec(&self.minus),
            gamma: self
                .gamma
                .iter()
                .map(|g| GammaComponent {
                    id: g.id.clone(),
                    plus_circle: g.plus_circle.clone(),
                    minus_circle: g.minus_circle.clone(),
                    h1_class: g.h1_class.clone(),
                })
                .collect(),
            crossing_flow_lines: self
                .crossing_flow_lines
                .iter()
                .map(|l| CrossingLineSpec {
                    from: l.from.clone(),
                    through: l.through.clone(),
                    to: l.to.clone(),
                    sign: l.sign,
                    class: l.class.clone(),
                })
                .collect(),
            h2_rank: self.h2_rank,
        }
    }

    pub fn overrides(&self) -> BTreeMap<String, Rational> {
        self.action_overrides.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect()
    }
}

impl PlanarDoc {
    /// The descriptor under the given coefficient mode.
    pub fn descriptor(&self, coefficients: &Coefficients) -> Result<PlanarTorsionDescriptor, CliError> {
        let mut desc = match (&self.page_class, &self.torus_classes) {
            (None, None) => match coefficients {
                Coefficients::Untwisted => PlanarTorsionDescriptor::untwisted(self.m, self.n, self.r),
                _ => PlanarTorsionDescriptor::fully_twisted(self.m, self.n, self.r),
            },
            (Some(page), Some(tori)) => {
                if matches!(coefficients, Coefficients::Untwisted) {
                    return Err(CliError::schema(
                        "/coefficients/mode",
                        "explicit classes need twisted or fully_twisted coefficients",
                    ));
                }
                PlanarTorsionDescriptor {
                    m: self.m,
                    n: self.n,
                    r: self.r,
                    rank: page.len(),
                    page_class: page.clone(),
                    torus_classes: tori.clone(),
                    omega: None,
                }
            }
            (Some(_), None) => return Err(CliError::schema("/planar_torsion/torus_classes", "required with page_class")),
            (None, Some(_)) => return Err(CliError::schema("/planar_torsion/page_class", "required with torus_classes")),
        };
        if let Coefficients::Twisted { omega } = coefficients {
            if omega.len() != desc.rank {
                return Err(CliError::schema(
                    "/coefficients/omega",
                    format!("expected {} entries, found {}", desc.rank, omega.len()),
                ));
            }
            desc = desc.with_omega(omega.clone());
        }
        desc.validate().map_err(|e| CliError::schema("/planar_torsion", e.to_string()))?;
        Ok(desc)
    }
}

fn kind_doc(k: EchOrbitKind) -> OrbitKindDoc {
    match k {
        EchOrbitKind::Elliptic => OrbitKindDoc::Elliptic,
        EchOrbitKind::PositiveHyperbolic => OrbitKindDoc::PositiveHyperbolic,
        EchOrbitKind::NegativeHyperbolic => OrbitKindDoc::NegativeHyperbolic,
    }
}

fn kind_core(k: OrbitKindDoc) -> EchOrbitKind {
    match k {
        OrbitKindDoc::Elliptic => EchOrbitKind::Elliptic,
        OrbitKindDoc::PositiveHyperbolic => EchOrbitKind::PositiveHyperbolic,
        OrbitKindDoc::NegativeHyperbolic => EchOrbitKind::NegativeHyperbolic,
    }
}

fn set_doc(orbits: &[EchOrbit], s: &OrbitSet) -> OrbitSetDoc {
    s.iter().map(|(i, m)| (orbits[*i].id.clone(), *m)).collect()
}

fn set_core(ids: &BTreeMap<&str, usize>, s: &OrbitSetDoc, locus: &str) -> Result<OrbitSet, CliError> {
    let mut out = OrbitSet::new();
    for (id, m) in s {
        let i = ids
            .get(id.as_str())
            .ok_or_else(|| CliError::schema(format!("{locus}/{id}"), format!("unknown orbit `{id}`")))?;
        if *m == 0 {
            return Err(CliError::schema(format!("{locus}/{id}"), "multiplicity must be positive"));
        }
        out.insert(*i, *m);
    }
    Ok(out)
}

impl EchDoc {
    pub fn from_complex(cx: &EchComplex) -> Self {
        let o = &cx.orbits;
        EchDoc {
            orbits: o
                .iter()
                .map(|x| EchOrbitDoc {
                    id: x.id.clone(),
                    kind: kind_doc(x.kind),
                    action: Q(x.action.clone()),
                    cz: match &x.cz {
                        CzData::Constant(c) => CzDoc::Constant(*c),
                        CzData::Table(t) => CzDoc::Table(t.clone()),
                    },
                })
                .collect(),
            generators: cx.generators.iter().map(|g| set_doc(o, g)).collect(),
            contributions: cx
                .contributions
                .iter()
                .map(|c| ContributionDoc {
                    from: set_doc(o, &c.from),
                    to: set_doc(o, &c.to),
                    c_tau: c.c_tau,
                    q_tau: c.q_tau,
                    sign: c.sign,
                    genus: c.genus,
                    pos_ends: (c.pos_ends != c.from).then(|| set_doc(o, &c.pos_ends)),
                    neg_ends: (c.neg_ends != c.to).then(|| set_doc(o, &c.neg_ends)),
                    irreducible: c.irreducible,
                    ind_equals_i: c.ind_equals_i,
                })
                .collect(),
            curves: cx
                .curves
                .as_ref()
                .map(|cs| cs.iter().map(|e| CurveDoc { from: set_doc(o, &e.from), to: set_doc(o, &e.to) }).collect()),
        }
    }

    /// Resolves orbit ids and runs the core validation.
    pub fn to_complex(&self) -> Result<EchComplex, CliError> {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, o) in self.orbits.iter().enumerate() {
            if ids.insert(o.id.as_str(), i).is_some() {
                return Err(CliError::schema(format!("/ech_complex/orbits/{i}/id"), format!("duplicate orbit `{}`", o.id)));
            }
        }
        let orbits = self
            .orbits
            .iter()
            .map(|o| EchOrbit {
                id: o.id.clone(),
                kind: kind_core(o.kind),
                action: o.action.0.clone(),
                cz: match &o.cz {
                    CzDoc::Constant(c) => CzData::Constant(*c),
                    CzDoc::Table(t) => CzData::Table(t.clone()),
                },
            })
            .collect();
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| set_core(&ids, g, &format!("/ech_complex/generators/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut contributions = Vec::new();
        for (i, c) in self.contributions.iter().enumerate() {
            let base = format!("/ech_complex/contributions/{i}");
            let from = set_core(&ids, &c.from, &format!("{base}/from"))?;
            let to = set_core(&ids, &c.to, &format!("{base}/to"))?;
            let pos_ends = match &c.pos_ends {
                Some(p) => set_core(&ids, p, &format!("{base}/pos_ends"))?,
                None => from.clone(),
            };
            let neg_ends = match &c.neg_ends {
                Some(p) => set_core(&ids, p, &format!("{base}/neg_ends"))?,
                None => to.clone(),
            };
            if c.sign != 1 && c.sign != -1 {
                return Err(CliError::schema(format!("{base}/sign"), "sign must be 1 or -1"));
            }
            contributions.push(Contribution {
                from,
                to,
                c_tau: c.c_tau,
                q_tau: c.q_tau,
                sign: c.sign,
                genus: c.genus,
                pos_ends,
                neg_ends,
                irreducible: c.irreducible,
                ind_equals_i: c.ind_equals_i,
            });
        }
        let curves = match &self.curves {
            None => None,
            Some(cs) => Some(
                cs.iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let base = format!("/ech_complex/curves/{i}");
                        Ok(CurveEdge {
                            from: set_core(&ids, &e.from, &format!("{base}/from"))?,
                            to: set_core(&ids, &e.to, &format!("{base}/to"))?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
            ),
        };
        let mut cx = EchComplex { orbits, generators, contributions, curves };
        cx.validate()?;
        Ok(cx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_from_strings_and_integers() {
        let t: Truncation = serde_json::from_str(r#"{"action_bound": "11/2", "hbar_bound": 3}"#).unwrap();
        assert_eq!(t.action_bound, "11/2".parse().unwrap());
        assert_eq!(t.cover_max, 1);
        let t: Truncation = serde_json::from_str(r#"{"action_bound": 4}"#).unwrap();
        assert_eq!(serde_json::to_string(&t.action_bound).unwrap(), "\"4\"");
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let err = parse_document(r#"{"planar_torsion": {"m": 0, "n": "two"}}"#).unwrap_err();
        assert_eq!(err.locus(), Some("/planar_torsion/n"));
        let err = parse_document(r#"{"truncation": {}}"#).unwrap_err();
        assert_eq!(err.locus(), Some("/"));
        let err = parse_document(r#"{"planar_torsion": {"m": 0, "n": 2}, "truncation": {"cover_max": 0}}"#).unwrap_err();
        assert_eq!(err.locus(), Some("/truncation/cover_max"));
    }

    #[test]
    fn unknown_orbits_are_located() {
        let doc = parse_document(
            r#"{"ech_complex": {"orbits": [{"id": "e", "kind": "elliptic", "action": 1, "cz": 1}],
                "generators": [{}, {"e": 1}],
                "contributions": [{"from": {"x": 1}, "to": {}, "c_tau": 0, "q_tau": 0, "sign": 1}]}}"#,
        )
        .unwrap();
        let err = doc.ech_complex.unwrap().to_complex().unwrap_err();
        assert_eq!(err.locus(), Some("/ech_complex/contributions/0/from/x"));
    }

    #[test]
    fn omega_length_is_checked() {
        let p = PlanarDoc { m: 0, n: 2, r: 0, page_class: None, torus_classes: None };
        assert_eq!(p.descriptor(&Coefficients::FullyTwisted).unwrap().rank, 3);
        let err = p.descriptor(&Coefficients::Twisted { omega: vec![1, 0] }).unwrap_err();
        assert_eq!(err.locus(), Some("/coefficients/omega"));
    }
}
