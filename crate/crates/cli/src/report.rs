//! Report types, serialized witnesses and the text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sft_torsion_core::algebra::{normalize, AlgebraElement, RawMonomial, Registry};
use sft_torsion_core::ech::{Chain, EchComplex};
use sft_torsion_core::lattice::GroupRingElement;
use sft_torsion_core::linsolve::SparseVec;

use crate::error::CliError;
use crate::schema::{Document, OrbitSetDoc, Payload, Truncation, Q};

pub const TOOL: &str = "sft-torsion";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Torsion,
    EchF,
    Enumerate,
    Morse,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Torsion => "torsion",
            Command::EchF => "ech-f",
            Command::Enumerate => "enumerate",
            Command::Morse => "morse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Complete,
    Partial,
    Refused,
    Invalid,
    UsageError,
    InvariantBreach,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Complete => "complete",
            Status::Partial => "partial",
            Status::Refused => "refused",
            Status::Invalid => "invalid",
            Status::UsageError => "usage_error",
            Status::InvariantBreach => "invariant_breach",
        }
    }
}

/// One monomial `coeff · z^exp · ħ^hbar · word`, with the word in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: Q,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exp: Vec<i64>,
    pub hbar: u32,
    pub word: Vec<(String, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementDoc {
    pub text: String,
    pub terms: Vec<TermDoc>,
}

impl ElementDoc {
    pub fn from_element(x: &AlgebraElement, reg: &Registry) -> Self {
        let terms = x
            .terms()
            .map(|(k, c)| TermDoc {
                coeff: Q(c.clone()),
                exp: if k.exp.iter().all(|e| *e == 0) { Vec::new() } else { k.exp.clone() },
                hbar: k.hbar,
                word: k.word.factors().iter().map(|(g, p)| (reg.get(*g).name.clone(), *p)).collect(),
            })
            .collect();
        ElementDoc { text: x.render(reg), terms }
    }

    /// Rebuilds the element in `reg`; the text field is not trusted.
    pub fn to_element(&self, reg: &Registry) -> Result<AlgebraElement, CliError> {
        let rank = reg.rank();
        let mut raws = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            let mut generators = Vec::new();
            for (name, p) in &t.word {
                let id = reg
                    .id(name)
                    .map_err(|_| CliError::schema(format!("/terms/{i}/word"), format!("unknown generator `{name}`")))?;
                generators.extend(std::iter::repeat_n(id, *p as usize));
            }
            let exp = if t.exp.is_empty() { vec![0; rank] } else { t.exp.clone() };
            if exp.len() != rank {
                return Err(CliError::schema(format!("/terms/{i}/exp"), format!("expected {rank} entries")));
            }
            raws.push(RawMonomial { generators, coefficient: GroupRingElement::monomial(exp, t.coeff.0.clone()), hbar: t.hbar });
        }
        if raws.is_empty() {
            return Ok(AlgebraElement::zero(rank));
        }
        Ok(normalize(reg, &raws)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTermDoc {
    pub generator: OrbitSetDoc,
    pub text: String,
    pub coeff: Q,
}

pub type ChainDoc = Vec<ChainTermDoc>;

pub fn chain_doc(cx: &EchComplex, c: &Chain) -> ChainDoc {
    c.iter()
        .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
        .map(|(i, v)| ChainTermDoc {
            generator: cx.generators[*i].iter().map(|(o, m)| (cx.orbits[*o].id.clone(), *m)).collect(),
            text: cx.render_set(&cx.generators[*i]),
            coeff: Q(v.clone()),
        })
        .collect()
}

pub fn chain_from_doc(cx: &EchComplex, d: &ChainDoc) -> Result<Chain, CliError> {
    let mut out = SparseVec::new();
    for (n, t) in d.iter().enumerate() {
        let mut set = sft_torsion_core::ech::OrbitSet::new();
        for (id, m) in &t.generator {
            let o = cx
                .orbits
                .iter()
                .position(|o| &o.id == id)
                .ok_or_else(|| CliError::schema(format!("/{n}/generator/{id}"), format!("unknown orbit `{id}`")))?;
            set.insert(o, *m);
        }
        let g = cx
            .generator_index(&set)
            .ok_or_else(|| CliError::schema(format!("/{n}/generator"), format!("{} is not a generator", t.text)))?;
        out.insert(g, t.coeff.0.clone());
    }
    Ok(out)
}

/// Where an upper-bound witness lives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum WitnessSource {
    Assembled,
    Planar,
    PlanarPiece { side: String, component: usize, m: u32, n: u32, r: u32 },
}

impl std::fmt::Display for WitnessSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WitnessSource::Assembled => f.write_str("assembled operator"),
            WitnessSource::Planar => f.write_str("planar operator"),
            WitnessSource::PlanarPiece { side, component, m, n, r } => {
                write!(f, "planar piece ({m},{n},{r}) on {side} component {component}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `D(witness) = ħ^k` modulo `ħ^{hbar_bound+1}`.
    TorsionUpper { k: u32, hbar_bound: u32, source: WitnessSource, witness: ElementDoc },
    /// No primitive of `ħ^k + 𝒪(ħ^{k+1})` exists.
    TorsionLower { k: u32, gamma_multisets_checked: usize, gamma_class_rank: usize, solver_unknowns: usize, solver_equations: usize },
    /// `D(F)` for the distinguished monomial of a planar model.
    PlanarPage { k0: u32, f: ElementDoc, d_of_f: ElementDoc },
    /// `Σ_{i+j=s} ∂_i w_j = δ_{s,f} ∅` for `s ≤ f`.
    EchSurvival { f: u32, pages: Vec<ChainDoc> },
    /// `(∂₀ + ⋯ + ∂_k) x = ∅`.
    EchSufficient { k: u32, chain: ChainDoc },
    /// Every relevant `I = 1` count to `∅` vanishes, so `f ≥ k`.
    EchLowerBound { k: u32, f: String },
}

impl Certificate {
    pub fn summary(&self) -> String {
        match self {
            Certificate::TorsionUpper { k, hbar_bound, source, witness } => {
                format!("torsion upper bound k = {k} from the {source}: D({}) = ħ^{k} mod ħ^{}", witness.text, hbar_bound + 1)
            }
            Certificate::TorsionLower { k, gamma_multisets_checked, gamma_class_rank, solver_unknowns, solver_equations } => format!(
                "torsion lower certificate at K = {k}: counts vanish, {gamma_multisets_checked} interface multisets excluded \
                 (class rank {gamma_class_rank}), cross-check unsolvable ({solver_unknowns} unknowns, {solver_equations} equations)"
            ),
            Certificate::PlanarPage { k0, f, d_of_f } => format!("planar page term k0 = {k0}: D({}) = {}", f.text, d_of_f.text),
            Certificate::EchSurvival { f, pages } => {
                let ws: Vec<String> = pages.iter().map(chain_text).collect();
                format!("empty set dies on page {}: w = ({})", f + 1, ws.join("; "))
            }
            Certificate::EchSufficient { k, chain } => {
                let parts: String = (0..=*k).map(|i| format!("∂{i}")).collect::<Vec<_>>().join("+");
                format!("({parts}) {} = ∅", chain_text(chain))
            }
            Certificate::EchLowerBound { k, f } => format!("ECH certificate grants f >= {k} (f = {f})"),
        }
    }
}

fn chain_text(c: &ChainDoc) -> String {
    if c.is_empty() {
        return "0".into();
    }
    c.iter().map(|t| format!("{}·{}", t.coeff, t.text)).collect::<Vec<_>>().join(" + ")
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountRow {
    pub table: String,
    pub key: String,
    pub count: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributors: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationSection {
    pub checks: Vec<String>,
    #[serde(default)]
    pub replayed: usize,
    #[serde(default)]
    pub replay_failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRow {
    pub id: String,
    pub side: String,
    pub component: usize,
    pub index: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowLineRow {
    pub id: usize,
    pub from: String,
    pub to: String,
    pub crosses_gamma: bool,
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseSection {
    pub genus: u32,
    pub euler_characteristic: i64,
    pub index_counts: [usize; 3],
    pub betti: [usize; 3],
    pub critical_points: Vec<CriticalPointRow>,
    pub flow_lines: Vec<FlowLineRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub name: String,
    pub action: Q,
    pub odd: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cz: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderRow {
    pub cyl_type: String,
    pub cover: u32,
    pub index: i64,
    pub sign: i8,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub transversal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub from: String,
    pub to: String,
    pub ech_index: i64,
    pub j_plus: i64,
    pub sign: i8,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerateSection {
    pub orbits: Vec<OrbitRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cylinders: Vec<CylinderRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operator: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contributions: Vec<ContributionRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<u32>,
    pub upper: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub lower: Option<u32>,
    pub refusals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_separating: Option<bool>,
    pub generators: usize,
    pub operator_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchSection {
    pub generators: usize,
    pub contributions: usize,
    pub action_bound: Q,
    pub filtration_parts: usize,
    pub relations_checked: usize,
    pub f: String,
    pub f_simple: String,
    pub sufficient: Option<u32>,
    pub agree: bool,
    pub graded: bool,
    pub pages_checked: u32,
    pub certified: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSection {
    pub seed: u64,
    pub samples: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morse: Option<MorseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<EnumerateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torsion: Option<TorsionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ech: Option<EchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locus: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub status: Status,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<Document>,
    #[serde(default)]
    pub sections: Sections,
    #[serde(default)]
    pub certificates: Vec<Certificate>,
    #[serde(default)]
    pub counts: Vec<CountRow>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Report {
    pub fn new(command: Command) -> Self {
        Report {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            status: Status::Ok,
            exit_code: 0,
            payload: None,
            truncation: None,
            document: None,
            sections: Sections::default(),
            certificates: Vec::new(),
            counts: Vec::new(),
            diagnostics: Vec::new(),
            error: None,
        }
    }

    pub fn failure(command: Command, err: &CliError) -> Self {
        let mut r = Report::new(command);
        r.status = match err.exit_code() {
            crate::error::EXIT_USAGE => Status::UsageError,
            crate::error::EXIT_VALIDATION => Status::Invalid,
            crate::error::EXIT_REFUSAL => Status::Refused,
            _ => Status::InvariantBreach,
        };
        r.exit_code = err.exit_code();
        r.error = Some(ErrorInfo { kind: err.kind_name().into(), locus: err.locus().map(String::from), message: err.to_string() });
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => render_text(report),
    }
}

pub fn parse_report(text: &str) -> Result<Report, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::schema(crate::schema::pointer(e.path()), e.inner().to_string()))
}

fn render_text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}  command: {}  status: {}  exit: {}", r.tool, r.version, r.command.name(), r.status.name(), r.exit_code);
    if let Some(e) = &r.error {
        let _ = writeln!(s, "error ({}): {}", e.kind, e.message);
    }
    if let Some(t) = &r.truncation {
        let _ = writeln!(
            s,
            "truncation: action < {}, ħ ≤ {}, cover ≤ {}, exponent box ±{}",
            t.action_bound, t.hbar_bound, t.cover_max, t.exponent_box
        );
    }
    let sec = &r.sections;
    if let Some(v) = &sec.validation {
        let _ = writeln!(s, "[validation]");
        for c in &v.checks {
            let _ = writeln!(s, "  ok: {c}");
        }
        if v.replayed > 0 || !v.replay_failures.is_empty() {
            let _ = writeln!(s, "  replayed certificates: {}", v.replayed);
        }
        for f in &v.replay_failures {
            let _ = writeln!(s, "  FAILED: {f}");
        }
    }
    if let Some(m) = &sec.morse {
        let _ = writeln!(s, "[morse]");
        let _ = writeln!(s, "  genus {}  euler characteristic {}", m.genus, m.euler_characteristic);
        let _ = writeln!(s, "  critical points by index: {:?}", m.index_counts);
        let _ = writeln!(s, "  betti numbers: {:?}", m.betti);
        for l in &m.flow_lines {
            let _ = writeln!(s, "  line {}: {} -> {}  sign {:+}{}", l.id, l.from, l.to, l.sign, if l.crosses_gamma { "  crosses Γ" } else { "" });
        }
    }
    if let Some(e) = &sec.enumerate {
        let _ = writeln!(s, "[enumerate]");
        for o in &e.orbits {
            let cz = o.cz.map(|c| format!("  CZ {c}")).unwrap_or_default();
            let kind = o.kind.as_ref().map(|k| format!("  {k}")).unwrap_or_default();
            let _ = writeln!(s, "  orbit {}  action {}  {}{cz}{kind}", o.name, o.action, if o.odd { "odd" } else { "even" });
        }
        for c in &e.cylinders {
            let _ = writeln!(
                s,
                "  cylinder {} cover {}  index {}  sign {:+}  +[{}] -[{}]{}",
                c.cyl_type,
                c.cover,
                c.index,
                c.sign,
                c.positive.join(" "),
                c.negative.join(" "),
                if c.transversal { "" } else { "  (not transversal)" }
            );
        }
        for g in &e.generators {
            let _ = writeln!(s, "  generator {g}");
        }
        for c in &e.contributions {
            let _ = writeln!(s, "  {} -> {}  I = {}  J+ = {}  sign {:+}", c.from, c.to, c.ech_index, c.j_plus, c.sign);
        }
        if !e.operator.is_empty() {
            let _ = writeln!(s, "  D =");
            for t in &e.operator {
                let _ = writeln!(s, "    {t}");
            }
        }
    }
    if let Some(t) = &sec.torsion {
        let _ = writeln!(s, "[torsion]");
        if let Some(k0) = t.k0 {
            let _ = writeln!(s, "  page order k0 = {k0}");
        }
        let _ = writeln!(s, "  generators {}  operator terms {}", t.generators, t.operator_terms);
        match t.upper {
            Some(k) => {
                let _ = writeln!(s, "  upper bound: torsion order <= {k}");
            }
            None => {
                let _ = writeln!(s, "  upper bound: none within the truncation");
            }
        }
        if let Some(w) = &t.witness {
            let _ = writeln!(s, "  witness: {w}");
        }
        match t.lower {
            Some(k) => {
                let _ = writeln!(s, "  lower certificate at K = {k}: torsion order > {k}");
            }
            None => {
                let _ = writeln!(s, "  lower certificate: none");
            }
        }
        if let Some(sep) = t.omega_separating {
            let _ = writeln!(s, "  omega separating: {sep}");
        }
        for x in &t.refusals {
            let _ = writeln!(s, "  refused: {x}");
        }
    }
    if let Some(e) = &sec.ech {
        let _ = writeln!(s, "[ech]");
        let _ = writeln!(s, "  generators {}  contributions {}  action < {}", e.generators, e.contributions, e.action_bound);
        let _ = writeln!(s, "  J+ parts {}  relations checked for degrees < {}", e.filtration_parts, e.relations_checked);
        let _ = writeln!(s, "  f = {}  f_simp = {}", e.f, e.f_simple);
        let suff = e.sufficient.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "  sufficient condition k = {suff}  agree: {}", e.agree);
        if let Some(k) = e.certified {
            let _ = writeln!(s, "  certificate grants f >= {k}");
        }
        if let Some(x) = &e.refusal {
            let _ = writeln!(s, "  refused: {x}");
        }
    }
    if let Some(p) = &sec.sampling {
        let _ = writeln!(s, "[sampling]");
        let _ = writeln!(s, "  seed {}  {} of {} samples passed", p.seed, p.passed, p.samples);
        for f in &p.failures {
            let _ = writeln!(s, "  FAILED: {f}");
        }
    }
    if !r.certificates.is_empty() {
        let _ = writeln!(s, "[certificates]");
        for (i, c) in r.certificates.iter().enumerate() {
            let _ = writeln!(s, "  {}. {}", i + 1, c.summary());
        }
    }
    if !r.counts.is_empty() {
        let _ = writeln!(s, "[counts]");
        for c in &r.counts {
            let extra = c.contributors.map(|n| format!(" ({n} curves)")).unwrap_or_default();
            let _ = writeln!(s, "  {} {}: {}{extra}", c.table, c.key, c.count);
        }
    }
    if !r.diagnostics.is_empty() {
        let _ = writeln!(s, "[diagnostics]");
        for d in &r.diagnostics {
            let _ = writeln!(s, "  {d}");
        }
    }
    s
}
