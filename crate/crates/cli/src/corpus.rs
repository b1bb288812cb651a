//! The bundled example documents, written to `corpus/` by the `write_corpus` example.

use sft_torsion_core::ech::{ech_from_planar_piece, toy_overtwisted};
use sft_torsion_core::models::{no_giroux_surface, vgk_surface};
use sft_torsion_core::surface::build_divided_surface;

use crate::schema::{Coefficients, Document, EchDoc, PlanarDoc, SurfaceDoc, Truncation, Q};

fn truncation(hbar_bound: u32, cover_max: u32) -> Truncation {
    Truncation { action_bound: Q::int(5), hbar_bound, cover_max, exponent_box: 3 }
}

fn planar(n: u32) -> PlanarDoc {
    PlanarDoc { m: 0, n, r: 0, page_class: None, torus_classes: None }
}

/// Documents that parse and analyze, by file stem.
pub fn bundled() -> Vec<(String, Document)> {
    let mut out = Vec::new();
    out.push((
        "no_giroux".to_string(),
        Document::with_surface(SurfaceDoc::from_spec(&no_giroux_surface()), truncation(3, 1)),
    ));
    for (g, k) in [(2, 2), (3, 2), (3, 3)] {
        let spec = vgk_surface(g, k).expect("bundled parameters are valid");
        out.push((format!("v{g}{k}"), Document::with_surface(SurfaceDoc::from_spec(&spec), truncation(k, 2))));
    }
    for k0 in 0..=3u32 {
        out.push((
            format!("planar_k0_{k0}"),
            Document::with_planar(planar(k0 + 1), truncation(k0, 1), Coefficients::Untwisted),
        ));
    }
    out.push((
        "planar_v2_separating".to_string(),
        Document::with_planar(planar(2), truncation(2, 1), Coefficients::Twisted { omega: vec![1, 0, 0] }),
    ));
    out.push((
        "planar_v2_twisted".to_string(),
        Document::with_planar(planar(2), truncation(2, 1), Coefficients::Twisted { omega: vec![0, 0, 1] }),
    ));
    out.push(("ech_toy_overtwisted".to_string(), Document::with_ech(EchDoc::from_complex(&toy_overtwisted()), truncation(2, 1))));
    let ds = build_divided_surface(vgk_surface(2, 2).expect("valid")).expect("valid");
    let cx = ech_from_planar_piece(&ds, &Q::int(5).0).expect("planar piece exists");
    out.push(("ech_v22_planar".to_string(), Document::with_ech(EchDoc::from_complex(&cx), truncation(2, 1))));
    out
}

/// Documents that parse but fail validation.
pub fn invalid() -> Vec<(String, Document)> {
    let mut s = SurfaceDoc::from_spec(&no_giroux_surface());
    s.minus.components[1].boundary.pop();
    vec![("invalid_boundary_mismatch".to_string(), Document::with_surface(s, truncation(3, 1)))]
}

/// Canonical file contents for a document.
pub fn render(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}
