//! Builders for the named surface models.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use crate::algebra::{AlgebraElement, Generator, Parity, Registry};
use crate::error::{Error, Result};
use crate::operator::{term, DifferentialOperator};
use crate::Rational;
use crate::surface::{
    CriticalPointSpec, CrossingLineSpec, GammaComponent, InternalLineSpec, SidedSurface, SurfaceComponent, SurfaceSpec,
};

fn crit(id: &str, component: usize, index: u8) -> CriticalPointSpec {
    CriticalPointSpec { id: id.into(), component, index }
}

fn line(from: &str, to: &str, sign: i8) -> InternalLineSpec {
    InternalLineSpec { from: from.into(), to: to.into(), sign, class: None }
}

fn cross(from: &str, through: &str, to: &str, sign: i8) -> CrossingLineSpec {
    CrossingLineSpec { from: from.into(), through: through.into(), to: to.into(), sign, class: None }
}

fn unit(len: usize, i: usize, v: i64) -> Vec<i64> {
    let mut e = vec![0; len];
    e[i] = v;
    e
}

/// `S¹ × Σ` with `Σ₋` planar with `k` boundary circles and `Σ₊` of genus `g − k + 1`.
///
/// `h₋` has one minimum `m` and saddles `a1..`; `h₊` has one minimum `M` (the maximum of
/// `h_ε`) and saddles `s1..`. Every saddle is joined to `m` and to `M` by two flow lines of
/// opposite sign, so the Morse differential vanishes.
pub fn vgk_surface(g: u32, k: u32) -> Result<SurfaceSpec> {
    if k == 0 || g + 1 < k {
        return Err(Error::Precondition(format!("need 1 <= k <= g + 1, got g = {g}, k = {k}")));
    }
    let gp = g + 1 - k;
    let rank = 2 * g as usize;
    let ku = k as usize;
    let bm: Vec<String> = (1..=ku).map(|i| format!("b{i}")).collect();
    let bp: Vec<String> = (1..=ku).map(|i| format!("c{i}")).collect();
    let gamma: Vec<GammaComponent> = (0..ku)
        .map(|i| {
            let class = if ku == 1 {
                vec![0; rank]
            } else if i + 1 < ku {
                unit(rank, i, 1)
            } else {
                unit(rank, 0, 0).iter().enumerate().map(|(j, _)| if j + 1 < ku { -1 } else { 0 }).collect()
            };
            GammaComponent { id: format!("G{}", i + 1), plus_circle: bp[i].clone(), minus_circle: bm[i].clone(), h1_class: class }
        })
        .collect();
    let other = if ku >= 2 { "G2" } else { "G1" };

    let minus_saddles: Vec<String> = (1..ku).map(|i| format!("a{i}")).collect();
    let plus_saddles: Vec<String> = (1..=(2 * gp as usize + ku - 1)).map(|i| format!("s{i}")).collect();

    let mut minus_crit = vec![crit("m", 0, 0)];
    minus_crit.extend(minus_saddles.iter().map(|a| crit(a, 0, 1)));
    let mut plus_crit = vec![crit("M", 0, 0)];
    plus_crit.extend(plus_saddles.iter().map(|s| crit(s, 0, 1)));

    let mut minus_lines = Vec::new();
    let mut crossing = Vec::new();
    for a in &minus_saddles {
        minus_lines.push(line("m", a, 1));
        minus_lines.push(line("m", a, -1));
        crossing.push(cross(a, "G1", "M", 1));
        crossing.push(cross(a, other, "M", -1));
    }
    let mut plus_lines = Vec::new();
    for s in &plus_saddles {
        crossing.push(cross("m", "G1", s, 1));
        crossing.push(cross("m", other, s, -1));
        plus_lines.push(line(s, "M", 1));
        plus_lines.push(line(s, "M", -1));
    }
    Ok(SurfaceSpec {
        minus: SidedSurface {
            components: vec![SurfaceComponent { genus: 0, boundary: bm }],
            critical_points: minus_crit,
            flow_lines: minus_lines,
        },
        plus: SidedSurface {
            components: vec![SurfaceComponent { genus: gp, boundary: bp }],
            critical_points: plus_crit,
            flow_lines: plus_lines,
        },
        gamma,
        crossing_flow_lines: crossing,
        h2_rank: 0,
    })
}

/// A dividing set whose negative region is disconnected.
///
/// `Σ₋` has two genus-one components with two boundary circles each, `Σ₊` is a sphere with
/// four holes, and `Σ` has genus 4. No component of `Γ` is null-homologous. The saddle `zp`
/// of `h₊` has exactly one descending line into each component of `Σ₋`, ending at `m1` and
/// `m2`.
pub fn no_giroux_surface() -> SurfaceSpec {
    let rank = 8;
    let gamma = vec![
        GammaComponent { id: "G1".into(), plus_circle: "p1".into(), minus_circle: "b1".into(), h1_class: unit(rank, 0, 1) },
        GammaComponent { id: "G2".into(), plus_circle: "p2".into(), minus_circle: "b2".into(), h1_class: unit(rank, 0, -1) },
        GammaComponent { id: "G3".into(), plus_circle: "p3".into(), minus_circle: "b3".into(), h1_class: unit(rank, 1, 1) },
        GammaComponent { id: "G4".into(), plus_circle: "p4".into(), minus_circle: "b4".into(), h1_class: unit(rank, 1, -1) },
    ];
    let mut minus_crit = vec![crit("m1", 0, 0)];
    let mut minus_lines = Vec::new();
    let mut crossing = Vec::new();
    for (comp, min, saddles, (g_in, g_out)) in [
        (0usize, "m1", ["a1", "a2", "a3"], ("G1", "G2")),
        (1usize, "m2", ["c1", "c2", "c3"], ("G3", "G4")),
    ] {
        if comp == 1 {
            minus_crit.push(crit(min, 1, 0));
        }
        for s in saddles {
            minus_crit.push(crit(s, comp, 1));
            minus_lines.push(line(min, s, 1));
            minus_lines.push(line(min, s, -1));
            crossing.push(cross(s, g_in, "M", 1));
            crossing.push(cross(s, g_out, "M", -1));
        }
    }
    crossing.push(cross("m1", "G1", "zp", 1));
    crossing.push(cross("m2", "G3", "zp", -1));
    crossing.push(cross("m1", "G1", "sp", 1));
    crossing.push(cross("m1", "G2", "sp", -1));
    crossing.push(cross("m2", "G3", "tp", 1));
    crossing.push(cross("m2", "G4", "tp", -1));
    let mut plus_lines = Vec::new();
    for s in ["zp", "sp", "tp"] {
        plus_lines.push(line(s, "M", 1));
        plus_lines.push(line(s, "M", -1));
    }
    SurfaceSpec {
        minus: SidedSurface {
            components: vec![
                SurfaceComponent { genus: 1, boundary: vec!["b1".into(), "b2".into()] },
                SurfaceComponent { genus: 1, boundary: vec!["b3".into(), "b4".into()] },
            ],
            critical_points: minus_crit,
            flow_lines: minus_lines,
        },
        plus: SidedSurface {
            components: vec![SurfaceComponent {
                genus: 0,
                boundary: vec!["p1".into(), "p2".into(), "p3".into(), "p4".into()],
            }],
            critical_points: vec![crit("M", 0, 0), crit("zp", 0, 1), crit("sp", 0, 1), crit("tp", 0, 1)],
            flow_lines: plus_lines,
        },
        gamma,
        crossing_flow_lines: crossing,
        h2_rank: 0,
    }
}

/// Two discs glued along one circle.
pub fn sphere_surface() -> SurfaceSpec {
    SurfaceSpec {
        minus: SidedSurface {
            components: vec![SurfaceComponent { genus: 0, boundary: vec!["b1".into()] }],
            critical_points: vec![crit("m", 0, 0)],
            flow_lines: vec![],
        },
        plus: SidedSurface {
            components: vec![SurfaceComponent { genus: 0, boundary: vec!["c1".into()] }],
            critical_points: vec![crit("M", 0, 0)],
            flow_lines: vec![],
        },
        gamma: vec![GammaComponent { id: "G1".into(), plus_circle: "c1".into(), minus_circle: "b1".into(), h1_class: vec![] }],
        crossing_flow_lines: vec![],
        h2_rank: 0,
    }
}

/// Two annuli glued into a torus; the Morse differential vanishes.
pub fn torus_surface() -> SurfaceSpec {
    SurfaceSpec {
        minus: SidedSurface {
            components: vec![SurfaceComponent { genus: 0, boundary: vec!["b1".into(), "b2".into()] }],
            critical_points: vec![crit("m", 0, 0), crit("a", 0, 1)],
            flow_lines: vec![line("m", "a", 1), line("m", "a", -1)],
        },
        plus: SidedSurface {
            components: vec![SurfaceComponent { genus: 0, boundary: vec!["c1".into(), "c2".into()] }],
            critical_points: vec![crit("M", 0, 0), crit("s", 0, 1)],
            flow_lines: vec![line("s", "M", 1), line("s", "M", -1)],
        },
        gamma: vec![
            GammaComponent { id: "G1".into(), plus_circle: "c1".into(), minus_circle: "b1".into(), h1_class: vec![1, 0] },
            GammaComponent { id: "G2".into(), plus_circle: "c2".into(), minus_circle: "b2".into(), h1_class: vec![-1, 0] },
        ],
        crossing_flow_lines: vec![
            cross("a", "G1", "M", 1),
            cross("a", "G2", "M", -1),
            cross("m", "G1", "s", 1),
            cross("m", "G2", "s", -1),
        ],
        h2_rank: 0,
    }
}

/// An untwisted operator with `D(q_a) = 1` on seven generators:
/// `D = ∂_a + q_e ∂_f + ħ ∂_b ∂_c + ħ ∂_g ∂_h`.
///
/// Returns the registry, `D` and the primitive `P = q_a`.
pub fn synthetic_acyclic() -> (Registry, DifferentialOperator, AlgebraElement) {
    let mut reg = Registry::new(0);
    let spec = [
        ("a", Parity::Odd, 1),
        ("b", Parity::Odd, 2),
        ("c", Parity::Even, 3),
        ("e", Parity::Odd, 1),
        ("f", Parity::Even, 2),
        ("g", Parity::Odd, 2),
        ("h", Parity::Even, 3),
    ];
    for (name, parity, action) in spec {
        reg.add(Generator { name: name.into(), parity, action: Rational::from_integer(action.into()), multiplicity: 1 })
            .expect("fresh names");
    }
    let one = Rational::one();
    let d = DifferentialOperator {
        rank: 0,
        terms: vec![
            term(one.clone(), 0, &[], &[0], 0),
            term(one.clone(), 0, &[3], &[4], 0),
            term(one.clone(), 1, &[], &[1, 2], 0),
            term(one, 1, &[], &[5, 6], 0),
        ],
    };
    let p = AlgebraElement::from_word(0, crate::algebra::Word::from_product(&reg, &[0]).expect("odd once").1, Rational::one());
    (reg, d, p)
}
