//! Executes a request against the core library and assembles the report.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sft_torsion_core::algebra::{AlgebraElement, GenId, Registry, Word};
use sft_torsion_core::cylinders::{
    assemble_sft_differential, automatic_transversality_check, enumerate_cylinders, AssembledDifferential, Cylinder,
};
use sft_torsion_core::ech::{
    compare_survival, decompose_differential, ech_from_planar, ech_from_surface, ech_index, ech_lower_bound_certificate,
    f_value, j_plus, scaling_relabel, Chain, EchCertificate, EchComplex, FValue, Multicomplex,
};
use sft_torsion_core::operator::{apply_operator, apply_truncated, verify_square_zero, DifferentialOperator, OpTerm, SquareCheck};
use sft_torsion_core::reeb::{generate_orbits, ActionModel, OrbitKind, ReebOrbit};
use sft_torsion_core::surface::{build_divided_surface, enumerate_flow_lines, morse_homology, DividedSurface};
use sft_torsion_core::torsion::{
    analyze_surface, lower_bound_certificate, planar_torsion_differential, replay, torsion_upper_bound, CertificateRefusal,
    LowerOutcome, PlanarModel, PlanarTorsionDescriptor, TorsionParams, TorsionStatus, UpperSource,
};
use sft_torsion_core::Rational;

use crate::error::CliError;
use crate::report::{
    chain_doc, chain_from_doc, Certificate, Command, ContributionRow, CountRow, CriticalPointRow, CylinderRow, EchSection,
    ElementDoc, EnumerateSection, FlowLineRow, MorseSection, OrbitRow, Report, SamplingSection, Status, TorsionSection,
    ValidationSection, WitnessSource,
};
use crate::schema::{Coefficients, Document, Payload, Truncation, Q};

/// Degrees for which multicomplex relations are always checked.
pub const RELATION_DEGREES: usize = 4;
/// Largest order tried by the ECH lower-bound certificate.
pub const ECH_CERTIFICATE_MAX: u32 = 4;
const SAMPLES: usize = 32;

/// A parsed input together with the command to run on it.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisRequest {
    pub command: Command,
    pub document: Document,
    pub seed: Option<u64>,
}

/// Runs a request; failures become reports with the matching exit code.
pub fn run(req: &AnalysisRequest) -> Report {
    match execute(req) {
        Ok(r) => r,
        Err(e) => {
            let mut r = Report::failure(req.command, &e);
            r.payload = req.document.payload().ok();
            r.truncation = Some(req.document.truncation.clone());
            r.document = Some(req.document.clone());
            r
        }
    }
}

fn execute(req: &AnalysisRequest) -> Result<Report, CliError> {
    let doc = &req.document;
    let payload = doc.payload()?;
    doc.truncation.check()?;
    let mut report = Report::new(req.command);
    report.payload = Some(payload);
    report.truncation = Some(doc.truncation.clone());
    report.document = Some(doc.clone());
    let model = Model::build(doc)?;
    match req.command {
        Command::Validate => validate(&model, &mut report)?,
        Command::Morse => morse(&model, &mut report)?,
        Command::Enumerate => enumerate(&model, &mut report)?,
        Command::Torsion => torsion(&model, &mut report)?,
        Command::EchF => ech(&model, &mut report)?,
    }
    if let Some(seed) = req.seed {
        report.sections.sampling = Some(sample(&model, req.command, seed)?);
    }
    report.counts.sort();
    finish(&mut report);
    Ok(report)
}

fn finish(r: &mut Report) {
    if r.sections.sampling.as_ref().is_some_and(|s| !s.failures.is_empty()) {
        r.status = Status::InvariantBreach;
    }
    r.exit_code = match r.status {
        Status::Ok | Status::Complete | Status::Partial => crate::error::EXIT_OK,
        Status::Refused => crate::error::EXIT_REFUSAL,
        Status::Invalid => crate::error::EXIT_VALIDATION,
        Status::UsageError => crate::error::EXIT_USAGE,
        Status::InvariantBreach => crate::error::EXIT_INVARIANT,
    };
}

/// The core objects behind a document.
enum Model {
    Surface { ds: Box<DividedSurface>, params: TorsionParams },
    Planar { desc: PlanarTorsionDescriptor, truncation: Truncation },
    Ech { cx: EchComplex, truncation: Truncation },
}

struct SurfaceParts {
    orbits: Vec<ReebOrbit>,
    cylinders: Vec<Cylinder>,
    assembled: AssembledDifferential,
}

impl Model {
    fn build(doc: &Document) -> Result<Model, CliError> {
        let t = &doc.truncation;
        if let Some(s) = &doc.surface {
            if doc.coefficients != Coefficients::Untwisted {
                return Err(CliError::schema(
                    "/coefficients/mode",
                    "surface documents take their lattice from `h2_rank`; use untwisted",
                ));
            }
            let ds = build_divided_surface(s.to_spec())?;
            let mut params = TorsionParams::new(t.action_bound.0.clone(), t.hbar_bound, t.cover_max);
            params.exponent_box = t.exponent_box;
            params.action_model = ActionModel { overrides: s.overrides(), ..ActionModel::default() };
            return Ok(Model::Surface { ds: Box::new(ds), params });
        }
        if let Some(p) = &doc.planar_torsion {
            return Ok(Model::Planar { desc: p.descriptor(&doc.coefficients)?, truncation: t.clone() });
        }
        let e = doc.ech_complex.as_ref().expect("payload checked");
        Ok(Model::Ech { cx: e.to_complex()?, truncation: t.clone() })
    }

    fn payload(&self) -> Payload {
        match self {
            Model::Surface { .. } => Payload::Surface,
            Model::Planar { .. } => Payload::PlanarTorsion,
            Model::Ech { .. } => Payload::EchComplex,
        }
    }

    fn action_bound(&self) -> Rational {
        match self {
            Model::Surface { params, .. } => params.action_bound.clone(),
            Model::Planar { truncation, .. } | Model::Ech { truncation, .. } => truncation.action_bound.0.clone(),
        }
    }

    fn hbar_bound(&self) -> u32 {
        match self {
            Model::Surface { params, .. } => params.hbar_bound,
            Model::Planar { truncation, .. } | Model::Ech { truncation, .. } => truncation.hbar_bound,
        }
    }

    fn surface_parts(ds: &DividedSurface, params: &TorsionParams) -> Result<SurfaceParts, CliError> {
        let orbits = generate_orbits(ds, params.cover_max, &params.action_model)?;
        let cylinders = enumerate_cylinders(ds, &orbits, params.cover_max);
        let assembled = assemble_sft_differential(ds, &orbits, &cylinders, params.weight)?;
        Ok(SurfaceParts { orbits, cylinders, assembled })
    }

    fn ech_complex(&self) -> Result<EchComplex, CliError> {
        Ok(match self {
            Model::Surface { ds, params } => ech_from_surface(ds, &params.action_model, &params.action_bound)?,
            Model::Planar { desc, truncation } => ech_from_planar(desc, &truncation.action_bound.0)?,
            Model::Ech { cx, .. } => cx.clone(),
        })
    }

    /// The operator the torsion and sampling commands work with.
    fn operator(&self) -> Result<Option<(Registry, DifferentialOperator)>, CliError> {
        Ok(match self {
            Model::Surface { ds, params } => {
                let p = Model::surface_parts(ds, params)?;
                Some((p.assembled.registry, p.assembled.operator))
            }
            Model::Planar { desc, .. } => {
                let pm = planar_torsion_differential(desc)?;
                Some((pm.registry, pm.operator))
            }
            Model::Ech { .. } => None,
        })
    }
}

fn usage(cmd: Command, payload: Payload) -> CliError {
    let p = match payload {
        Payload::Surface => "surface",
        Payload::PlanarTorsion => "planar_torsion",
        Payload::EchComplex => "ech_complex",
    };
    CliError::Usage(format!("command `{}` does not apply to a `{p}` document", cmd.name()))
}

fn q(r: &Rational) -> Q {
    Q(r.clone())
}

fn render_term(reg: &Registry, t: &OpTerm) -> String {
    let mut parts = vec![format!("{}", t.coeff)];
    if t.exp.iter().any(|e| *e != 0) {
        parts.push(format!("z^{:?}", t.exp));
    }
    if t.hbar > 0 {
        parts.push(if t.hbar == 1 { "ħ".into() } else { format!("ħ^{}", t.hbar) });
    }
    for g in &t.outputs {
        parts.push(format!("q[{}]", reg.get(*g).name));
    }
    for g in &t.inputs {
        parts.push(format!("∂[{}]", reg.get(*g).name));
    }
    parts.join("·")
}

fn surface_checks(ds: &DividedSurface, params: &TorsionParams, checks: &mut Vec<String>) -> Result<SurfaceParts, CliError> {
    let betti = morse_homology(ds)?;
    checks.push(format!("Morse complex squares to zero; homology {betti:?} for genus {}", ds.genus()));
    let parts = Model::surface_parts(ds, params)?;
    checks.push(format!("{} orbits with cover <= {}", parts.orbits.len(), params.cover_max));
    let bad: Vec<&Cylinder> = parts
        .cylinders
        .iter()
        .filter(|c| c.flow_line.is_some() && !automatic_transversality_check(c, &parts.orbits))
        .collect();
    if let Some(c) = bad.first() {
        return Err(CliError::Core(sft_torsion_core::Error::InvariantBreach(format!(
            "cylinder over line {:?} fails automatic transversality",
            c.flow_line
        ))));
    }
    checks.push(format!("{} cylinders; all nontrivial ones automatically transverse", parts.cylinders.len()));
    let (reg, d) = (&parts.assembled.registry, &parts.assembled.operator);
    if !d.is_odd(reg) || !d.kills_one() {
        return Err(CliError::Core(sft_torsion_core::Error::InvariantBreach("assembled operator is not odd or does not kill 1".into())));
    }
    if !d.action_violations(reg, true).is_empty() {
        return Err(CliError::Core(sft_torsion_core::Error::InvariantBreach("assembled operator increases action".into())));
    }
    checks.push(format!("assembled operator: {} terms, odd, kills 1, lowers action", d.terms.len()));
    let gens: Vec<GenId> = reg.ids().collect();
    match verify_square_zero(reg, d, &gens, &params.action_bound, params.hbar_bound)? {
        SquareCheck::Holds { monomials_checked } => {
            checks.push(format!("D² = 0 on {monomials_checked} words below the action bound"))
        }
        SquareCheck::Fails { monomial, residual } => {
            return Err(CliError::Core(sft_torsion_core::Error::InvariantBreach(format!(
                "D²({}) = {}",
                monomial.render(reg),
                residual.render(reg)
            ))))
        }
    }
    Ok(parts)
}

fn validate(model: &Model, r: &mut Report) -> Result<(), CliError> {
    let mut checks = Vec::new();
    match model {
        Model::Surface { ds, params } => {
            checks.push(format!(
                "divided surface: genus {}, {} critical points, {} Γ components",
                ds.genus(),
                ds.critical_points().len(),
                ds.gamma().len()
            ));
            surface_checks(ds, params, &mut checks)?;
        }
        Model::Planar { desc, .. } => {
            let pm = planar_torsion_differential(desc)?;
            checks.push(format!("descriptor ({}, {}, {}) over a rank {} lattice, k0 = {}", desc.m, desc.n, desc.r, desc.rank, desc.k0()));
            checks.push(format!("planar operator: {} terms, odd {}", pm.operator.terms.len(), pm.operator.is_odd(&pm.registry)));
        }
        Model::Ech { cx, .. } => {
            checks.push(format!("{} orbits, {} generators, {} contributions", cx.orbits.len(), cx.generators.len(), cx.contributions.len()));
            checks.push("admissible generators, parity rule, I = 1, action decrease, JI bound".into());
            let mc = decompose_differential(cx, RELATION_DEGREES)?;
            checks.push(format!("J+ even; multicomplex relations hold for degrees < {}", mc.relations_checked));
        }
    }
    r.sections.validation = Some(ValidationSection { checks, replayed: 0, replay_failures: Vec::new() });
    Ok(())
}

fn morse(model: &Model, r: &mut Report) -> Result<(), CliError> {
    let Model::Surface { ds, .. } = model else { return Err(usage(Command::Morse, model.payload())) };
    let betti = morse_homology(ds)?;
    r.sections.morse = Some(MorseSection {
        genus: ds.genus(),
        euler_characteristic: ds.euler_characteristic(),
        index_counts: ds.index_counts(),
        betti,
        critical_points: ds
            .critical_points()
            .iter()
            .map(|p| CriticalPointRow { id: p.id.clone(), side: p.side.name().into(), component: p.component, index: p.index })
            .collect(),
        flow_lines: enumerate_flow_lines(ds)
            .iter()
            .map(|l| FlowLineRow {
                id: l.id,
                from: l.from.clone(),
                to: l.to.clone(),
                crosses_gamma: l.crosses_gamma,
                sign: l.sign,
                class: if l.class.iter().all(|c| *c == 0) { Vec::new() } else { l.class.clone() },
            })
            .collect(),
    });
    let expected = [1, 2 * ds.genus() as usize, 1];
    if betti != expected {
        r.status = Status::InvariantBreach;
        r.diagnostics.push(format!("Morse homology {betti:?} differs from {expected:?}"));
    }
    Ok(())
}

fn cylinder_type(c: &Cylinder) -> String {
    match c.cyl_type.number() {
        Some(n) => format!("type {n}"),
        None => "trivial".into(),
    }
}

fn enumerate(model: &Model, r: &mut Report) -> Result<(), CliError> {
    let mut sec = EnumerateSection::default();
    match model {
        Model::Surface { ds, params } => {
            let p = Model::surface_parts(ds, params)?;
            sec.orbits = p
                .orbits
                .iter()
                .map(|o| OrbitRow {
                    name: o.name(),
                    action: q(&o.action),
                    odd: o.parity.is_odd(),
                    cz: Some(o.cz_index),
                    kind: Some(match o.kind {
                        OrbitKind::Elliptic => "elliptic".into(),
                        OrbitKind::Hyperbolic => "hyperbolic".into(),
                    }),
                })
                .collect();
            let name = |i: &usize| p.orbits[*i].name();
            sec.cylinders = p
                .cylinders
                .iter()
                .map(|c| CylinderRow {
                    cyl_type: cylinder_type(c),
                    cover: c.cover,
                    index: c.fredholm_index,
                    sign: c.sign,
                    positive: c.positive_ends.iter().map(name).collect(),
                    negative: c.negative_ends.iter().map(name).collect(),
                    transversal: c.flow_line.is_none() || automatic_transversality_check(c, &p.orbits),
                })
                .collect();
            let reg = &p.assembled.registry;
            sec.operator = p.assembled.operator.terms.iter().map(|t| render_term(reg, t)).collect();
        }
        Model::Planar { desc, .. } => {
            let pm = planar_torsion_differential(desc)?;
            sec.orbits = pm
                .registry
                .generators()
                .iter()
                .map(|g| OrbitRow { name: g.name.clone(), action: q(&g.action), odd: g.parity.is_odd(), cz: None, kind: None })
                .collect();
            sec.operator = pm.operator.terms.iter().map(|t| render_term(&pm.registry, t)).collect();
        }
        Model::Ech { cx, .. } => ech_rows(cx, &mut sec)?,
    }
    r.sections.enumerate = Some(sec);
    Ok(())
}

fn ech_rows(cx: &EchComplex, sec: &mut EnumerateSection) -> Result<(), CliError> {
    sec.orbits = cx
        .orbits
        .iter()
        .map(|o| OrbitRow {
            name: o.id.clone(),
            action: q(&o.action),
            odd: o.kind == sft_torsion_core::ech::EchOrbitKind::PositiveHyperbolic,
            cz: o.cz_of_iterate(1).ok(),
            kind: Some(format!("{:?}", o.kind)),
        })
        .collect();
    sec.generators = cx.generators.iter().map(|g| format!("{}  action {}", cx.render_set(g), cx.action(g))).collect();
    for c in &cx.contributions {
        sec.contributions.push(ContributionRow {
            from: cx.render_set(&c.from),
            to: cx.render_set(&c.to),
            ech_index: ech_index(&cx.orbits, &c.from, &c.to, c.c_tau, c.q_tau)?,
            j_plus: j_plus(&cx.orbits, &c.from, &c.to, c.c_tau, c.q_tau)?,
            sign: c.sign,
        });
    }
    Ok(())
}

fn refusal_text(k: u32, r: &CertificateRefusal) -> String {
    match r {
        CertificateRefusal::NonzeroCount { ends, count } => {
            format!("K = {k}: signed count {count} for positive ends {{{}}}", ends.join(", "))
        }
        CertificateRefusal::NullHomologous { asymptotics } => {
            let xs: Vec<String> = asymptotics.iter().map(|(g, n)| format!("{g}^{n}")).collect();
            format!("K = {k}: interface orbits {{{}}} are null-homologous", xs.join(", "))
        }
    }
}

fn torsion(model: &Model, r: &mut Report) -> Result<(), CliError> {
    match model {
        Model::Surface { ds, params } => {
            let st = analyze_surface(ds, params)?;
            let reg = &st.assembled.registry;
            let mut sec = TorsionSection {
                k0: None,
                upper: st.upper.as_ref().map(|u| u.bound.k),
                witness: st.upper.as_ref().map(|u| u.witness_text.clone()),
                lower: st.lower.as_ref().map(|l| l.k),
                refusals: st.refusals.iter().map(|(k, x)| refusal_text(*k, x)).collect(),
                omega_separating: None,
                generators: reg.len(),
                operator_terms: st.assembled.operator.terms.len(),
            };
            if let Some(u) = &st.upper {
                let (source, witness) = match &u.source {
                    UpperSource::Assembled => (WitnessSource::Assembled, ElementDoc::from_element(&u.bound.witness, reg)),
                    UpperSource::PlanarPiece { side, component, descriptor } => {
                        let pm = planar_torsion_differential(descriptor)?;
                        sec.k0 = Some(descriptor.k0());
                        (
                            WitnessSource::PlanarPiece {
                                side: side.name().into(),
                                component: *component,
                                m: descriptor.m,
                                n: descriptor.n,
                                r: descriptor.r,
                            },
                            ElementDoc::from_element(&u.bound.witness, &pm.registry),
                        )
                    }
                };
                r.certificates.push(Certificate::TorsionUpper { k: u.bound.k, hbar_bound: params.hbar_bound, source, witness });
            }
            if let Some(l) = &st.lower {
                r.certificates.push(Certificate::TorsionLower {
                    k: l.k,
                    gamma_multisets_checked: l.gamma_multisets_checked,
                    gamma_class_rank: l.gamma_class_rank,
                    solver_unknowns: l.solver_unknowns,
                    solver_equations: l.solver_equations,
                });
                for (ends, count) in &l.counts.entries {
                    r.counts.push(CountRow {
                        table: "index1_positive_only".into(),
                        key: format!("{{{}}}", ends.join(", ")),
                        count: *count,
                        contributors: l.counts.contributors.get(ends).copied(),
                    });
                }
                for ((ty, end), count) in &l.counts.by_type_and_end {
                    r.counts.push(CountRow { table: format!("type{ty}_by_end"), key: end.clone(), count: *count, contributors: None });
                }
            }
            r.status = match st.status {
                TorsionStatus::Complete => Status::Complete,
                TorsionStatus::Partial => Status::Partial,
                TorsionStatus::Refused => Status::Refused,
            };
            r.sections.torsion = Some(sec);
        }
        Model::Planar { desc, truncation } => {
            let pm = planar_torsion_differential(desc)?;
            let dff = apply_operator(&pm.registry, &pm.operator, &pm.f);
            r.certificates.push(Certificate::PlanarPage {
                k0: desc.k0(),
                f: ElementDoc::from_element(&pm.f, &pm.registry),
                d_of_f: ElementDoc::from_element(&dff, &pm.registry),
            });
            let cfg = planar_config(truncation);
            let upper = torsion_upper_bound(&pm.registry, &pm.operator, &pm.generators(), &cfg)?;
            let sep = desc.omega_separating();
            if !sep {
                r.diagnostics.push("omega does not vanish on every torus class".into());
            }
            if let Some(u) = &upper {
                r.certificates.push(Certificate::TorsionUpper {
                    k: u.k,
                    hbar_bound: truncation.hbar_bound,
                    source: WitnessSource::Planar,
                    witness: ElementDoc::from_element(&u.witness, &pm.registry),
                });
            }
            r.status = match &upper {
                Some(u) if u.k == 0 => Status::Complete,
                Some(_) => Status::Partial,
                None => Status::Refused,
            };
            r.sections.torsion = Some(TorsionSection {
                k0: Some(desc.k0()),
                upper: upper.as_ref().map(|u| u.k),
                witness: upper.as_ref().map(|u| u.witness.render(&pm.registry)),
                lower: None,
                refusals: if upper.is_none() {
                    vec![format!("no primitive of ħ^k for k <= {} within the truncation", truncation.hbar_bound)]
                } else {
                    Vec::new()
                },
                omega_separating: Some(sep),
                generators: pm.registry.len(),
                operator_terms: pm.operator.terms.len(),
            });
        }
        Model::Ech { .. } => return Err(usage(Command::Torsion, Payload::EchComplex)),
    }
    Ok(())
}

fn planar_config(t: &Truncation) -> sft_torsion_core::primitive::SolveConfig {
    sft_torsion_core::primitive::SolveConfig::new(t.action_bound.0.clone(), t.hbar_bound, t.exponent_box)
}

fn ech(model: &Model, r: &mut Report) -> Result<(), CliError> {
    if let Model::Planar { desc, .. } = model {
        if desc.rank > 0 {
            r.diagnostics.push("ECH complexes of planar descriptors ignore the coefficient lattice".into());
        }
    }
    let cx = model.ech_complex()?;
    let bound = model.action_bound();
    let mc = decompose_differential(&cx, RELATION_DEGREES)?;
    let cmp = compare_survival(&cx, &mc, Some(&bound), false)?;
    let simple = f_value(&cx, &mc, Some(&bound), true)?;
    if simple.value < cmp.spectral.value {
        return Err(CliError::Core(sft_torsion_core::Error::InvariantBreach(format!(
            "f_simp = {} is below f = {}",
            simple.value, cmp.spectral.value
        ))));
    }
    let mut certified = None;
    let mut refusal = None;
    let mut counts = BTreeMap::new();
    for k in 0..=ECH_CERTIFICATE_MAX {
        match ech_lower_bound_certificate(&cx, &mc, Some(&bound), k)? {
            EchCertificate::Granted { k, counts: c, .. } => {
                certified = Some(k);
                counts = c;
            }
            EchCertificate::Refused { key, count } => {
                refusal = Some(format!(
                    "k = {k}: count {count} for {} with c = {}, Q = {}, g = {}, N+ = {}",
                    key.from, key.c_tau, key.q_tau, key.genus, key.n_plus
                ));
                break;
            }
        }
    }
    for (key, count) in counts {
        r.counts.push(CountRow {
            table: "ech_index1_to_empty".into(),
            key: format!("{} c={} Q={} g={} N+={}", key.from, key.c_tau, key.q_tau, key.genus, key.n_plus),
            count,
            contributors: None,
        });
    }
    if let (FValue::Finite(f), Some(w)) = (cmp.spectral.value, &cmp.spectral.witness) {
        r.certificates.push(Certificate::EchSurvival { f, pages: w.iter().map(|c| chain_doc(&cx, c)).collect() });
    }
    if let Some((k, x)) = &cmp.sufficient {
        r.certificates.push(Certificate::EchSufficient { k: *k, chain: chain_doc(&cx, x) });
    }
    if let Some(k) = certified {
        r.certificates.push(Certificate::EchLowerBound { k, f: cmp.spectral.value.to_string() });
    }
    if !cmp.agree() {
        r.status = Status::Partial;
        r.diagnostics.push(format!(
            "spectral sequence gives f = {} but the sufficient condition gives {}",
            cmp.spectral.value,
            cmp.sufficient.as_ref().map(|(k, _)| k.to_string()).unwrap_or_else(|| "none".into())
        ));
    }
    if !cmp.spectral.graded {
        r.diagnostics.push("J+ has no potential on the component of the empty set".into());
    }
    r.sections.ech = Some(EchSection {
        generators: cmp.spectral.generators,
        contributions: cx.contributions.len(),
        action_bound: q(&bound),
        filtration_parts: mc.parts.len(),
        relations_checked: mc.relations_checked,
        f: cmp.spectral.value.to_string(),
        f_simple: simple.value.to_string(),
        sufficient: cmp.sufficient.as_ref().map(|(k, _)| *k),
        agree: cmp.agree(),
        graded: cmp.spectral.graded,
        pages_checked: cmp.spectral.pages_checked,
        certified,
        refusal,
    });
    Ok(())
}

fn random_word(rng: &mut ChaCha8Rng, reg: &Registry) -> Option<Word> {
    let n = reg.len();
    if n == 0 {
        return None;
    }
    let len = rng.gen_range(1..=3);
    let gens: Vec<GenId> = (0..len).map(|_| rng.gen_range(0..n)).collect();
    Word::from_product(reg, &gens).map(|(_, w)| w)
}

/// Seeded spot checks: `D²` and parity on random words, or `f` under random rescaling.
fn sample(model: &Model, command: Command, seed: u64) -> Result<SamplingSection, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut samples = 0;
    let hb = model.hbar_bound();
    let ech_mode = command == Command::EchF || matches!(model, Model::Ech { .. });
    if !ech_mode {
        if let Some((reg, d)) = model.operator()? {
            let square = !matches!(model, Model::Planar { desc, .. } if desc.rank > 0);
            let mut attempts = 0;
            while samples < SAMPLES && attempts < 8 * SAMPLES {
                attempts += 1;
                let Some(w) = random_word(&mut rng, &reg) else { continue };
                samples += 1;
                let x = AlgebraElement::from_word(d.rank, w.clone(), Rational::from_integer(rng.gen_range(-3i64..=3).into()));
                let dx = apply_truncated(&reg, &d, &x, hb);
                let px = x.homogeneous_parity(&reg);
                if let (Some(a), Some(b)) = (px, dx.homogeneous_parity(&reg)) {
                    if a == b && !dx.is_zero() {
                        failures.push(format!("D does not flip the parity of {}", w.render(&reg)));
                    }
                }
                if square && !apply_truncated(&reg, &d, &dx, hb).is_zero() {
                    failures.push(format!("D²({}) is nonzero", w.render(&reg)));
                }
            }
        }
    } else {
        let cx = model.ech_complex()?;
        let bound = model.action_bound();
        let mc = decompose_differential(&cx, RELATION_DEGREES)?;
        let base = f_value(&cx, &mc, Some(&bound), false)?.value;
        for _ in 0..8 {
            samples += 1;
            let c = Rational::new(rng.gen_range(1i64..=5).into(), rng.gen_range(1i64..=5).into());
            let scaled = scaling_relabel(&cx, &c)?;
            let smc = decompose_differential(&scaled, RELATION_DEGREES)?;
            let f = f_value(&scaled, &smc, Some(&(&bound * &c)), false)?.value;
            if f != base {
                failures.push(format!("scaling by {c} changes f from {base} to {f}"));
            }
        }
    }
    let passed = samples - failures.len().min(samples);
    Ok(SamplingSection { seed, samples, passed, failures })
}

fn apply_parts(mc: &Multicomplex, i: usize, x: &Chain) -> Chain {
    let mut out = Chain::new();
    if let Some(p) = mc.parts.get(i) {
        for ((row, col), v) in p {
            if let Some(c) = x.get(col) {
                *out.entry(*row).or_insert_with(Rational::zero) += v * c;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn add_chain(a: &mut Chain, b: &Chain) {
    for (k, v) in b {
        *a.entry(*k).or_insert_with(Rational::zero) += v;
    }
    a.retain(|_, v| !v.is_zero());
}

fn unit(i: usize) -> Chain {
    let mut c = Chain::new();
    c.insert(i, Rational::one());
    c
}

fn within(cx: &EchComplex, bound: &Rational, x: &Chain) -> bool {
    x.keys().all(|i| &cx.action(&cx.generators[*i]) < bound)
}

/// Re-verifies every certificate of a report against the document it carries.
pub fn replay_report(report: &Report) -> Report {
    let mut out = Report::new(Command::Validate);
    let Some(doc) = report.document.clone() else {
        let err = CliError::schema("/document", "report carries no document to replay against");
        return Report::failure(Command::Validate, &err);
    };
    out.payload = doc.payload().ok();
    out.truncation = Some(doc.truncation.clone());
    out.document = Some(doc.clone());
    let mut failures = Vec::new();
    let mut checks = Vec::new();
    let model = match Model::build(&doc) {
        Ok(m) => m,
        Err(e) => {
            let mut r = Report::failure(Command::Validate, &e);
            r.document = Some(doc);
            return r;
        }
    };
    for (i, c) in report.certificates.iter().enumerate() {
        match replay_one(&model, c) {
            Ok(true) => checks.push(format!("certificate {}: {}", i + 1, c.summary())),
            Ok(false) => failures.push(format!("certificate {}: {}", i + 1, c.summary())),
            Err(e) => failures.push(format!("certificate {}: {e}", i + 1)),
        }
    }
    let replayed = report.certificates.len();
    if !failures.is_empty() {
        out.status = Status::InvariantBreach;
    }
    out.sections.validation = Some(ValidationSection { checks, replayed, replay_failures: failures });
    finish(&mut out);
    out
}

fn planar_witness_model(source: &WitnessSource, model: &Model) -> Result<Option<PlanarModel>, CliError> {
    Ok(match (source, model) {
        (WitnessSource::Planar, Model::Planar { desc, .. }) => Some(planar_torsion_differential(desc)?),
        (WitnessSource::PlanarPiece { m, n, r, .. }, Model::Surface { .. }) => {
            Some(planar_torsion_differential(&PlanarTorsionDescriptor::untwisted(*m, *n, *r))?)
        }
        _ => None,
    })
}

fn replay_one(model: &Model, c: &Certificate) -> Result<bool, CliError> {
    match c {
        Certificate::TorsionUpper { k, hbar_bound, source, witness } => {
            if let Some(pm) = planar_witness_model(source, model)? {
                let w = witness.to_element(&pm.registry)?;
                return Ok(replay(&pm.registry, &pm.operator, &w, *k, *hbar_bound));
            }
            match (source, model) {
                (WitnessSource::Assembled, Model::Surface { ds, params }) => {
                    let p = Model::surface_parts(ds, params)?;
                    let w = witness.to_element(&p.assembled.registry)?;
                    Ok(replay(&p.assembled.registry, &p.assembled.operator, &w, *k, *hbar_bound))
                }
                _ => Ok(false),
            }
        }
        Certificate::TorsionLower { k, .. } => {
            let Model::Surface { ds, params } = model else { return Ok(false) };
            let p = Model::surface_parts(ds, params)?;
            let out = lower_bound_certificate(ds, &p.orbits, &p.cylinders, &p.assembled, *k, params.cover_max, &params.solve_config())?;
            Ok(matches!(out, LowerOutcome::Granted(_)))
        }
        Certificate::PlanarPage { k0, f, d_of_f } => {
            let Model::Planar { desc, .. } = model else { return Ok(false) };
            let pm = planar_torsion_differential(desc)?;
            let fe = f.to_element(&pm.registry)?;
            let dfe = d_of_f.to_element(&pm.registry)?;
            Ok(*k0 == desc.k0() && fe == pm.f && apply_operator(&pm.registry, &pm.operator, &fe) == dfe)
        }
        Certificate::EchSurvival { f, pages } => {
            let cx = model.ech_complex()?;
            let mc = decompose_differential(&cx, RELATION_DEGREES)?;
            let empty = cx.empty_index().ok_or_else(|| CliError::Replay("complex has no empty generator".into()))?;
            let bound = model.action_bound();
            let ws = pages.iter().map(|p| chain_from_doc(&cx, p)).collect::<Result<Vec<_>, _>>()?;
            if ws.len() != *f as usize + 1 || !ws.iter().all(|w| within(&cx, &bound, w)) {
                return Ok(false);
            }
            for s in 0..=*f as usize {
                let mut acc = Chain::new();
                for (j, w) in ws.iter().enumerate().take(s + 1) {
                    add_chain(&mut acc, &apply_parts(&mc, s - j, w));
                }
                let want = if s == *f as usize { unit(empty) } else { Chain::new() };
                if acc != want {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Certificate::EchSufficient { k, chain } => {
            let cx = model.ech_complex()?;
            let mc = decompose_differential(&cx, RELATION_DEGREES)?;
            let empty = cx.empty_index().ok_or_else(|| CliError::Replay("complex has no empty generator".into()))?;
            let x = chain_from_doc(&cx, chain)?;
            if !within(&cx, &model.action_bound(), &x) {
                return Ok(false);
            }
            let mut acc = Chain::new();
            for i in 0..=*k as usize {
                add_chain(&mut acc, &apply_parts(&mc, i, &x));
            }
            Ok(acc == unit(empty))
        }
        Certificate::EchLowerBound { k, .. } => {
            let cx = model.ech_complex()?;
            let mc = decompose_differential(&cx, RELATION_DEGREES)?;
            let out = ech_lower_bound_certificate(&cx, &mc, Some(&model.action_bound()), *k)?;
            Ok(matches!(out, EchCertificate::Granted { .. }))
        }
    }
}
