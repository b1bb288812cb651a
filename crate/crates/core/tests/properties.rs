use std::collections::BTreeMap;

use num_traits::{One, Zero};
use proptest::prelude::*;
use sft_torsion_core::algebra::{monomial, AlgebraElement, Generator, Parity, Registry, Word};
use sft_torsion_core::cylinders::{
    assemble_sft_differential, automatic_transversality_check, enumerate_cylinders, validate_trivial_cover, CoverWeight,
    CylinderType, TrivialCoverRecord,
};
use sft_torsion_core::ech::{
    self, compare_survival, decompose_differential, ech_index, f_value, j_plus, positive_hyperbolic_count, scaling_relabel,
    CzData, EchOrbit, EchOrbitKind, OrbitSet,
};
use sft_torsion_core::models;
use sft_torsion_core::operator::{apply_operator, bracket, DifferentialOperator};
use sft_torsion_core::primitive::{primitive_via_bracket, solve_primitive, SolveConfig};
use sft_torsion_core::reeb::{generate_orbits, ActionModel, OrbitKind};
use sft_torsion_core::surface::{build_divided_surface, morse_homology, DividedSurface};
use sft_torsion_core::torsion::{planar_torsion_differential, PlanarTorsionDescriptor};
use sft_torsion_core::Rational;

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn vgk(g: u32, k: u32) -> DividedSurface {
    build_divided_surface(models::vgk_surface(g, k).unwrap()).unwrap()
}

fn vgk_params() -> impl Strategy<Value = (u32, u32)> {
    (0u32..4).prop_flat_map(|g| (Just(g), 1..=g + 1))
}

fn no_giroux_d() -> (Registry, DifferentialOperator) {
    let ds = build_divided_surface(models::no_giroux_surface()).unwrap();
    let orbits = generate_orbits(&ds, 1, &ActionModel::default()).unwrap();
    let cyl = enumerate_cylinders(&ds, &orbits, 1);
    let a = assemble_sft_differential(&ds, &orbits, &cyl, CoverWeight::Deck).unwrap();
    (a.registry, a.operator)
}

fn random_word(reg: &Registry, picks: &[usize]) -> Option<AlgebraElement> {
    let ids: Vec<usize> = picks.iter().map(|p| p % reg.len()).collect();
    let (neg, w) = Word::from_product(reg, &ids)?;
    let c = if neg { -q(1) } else { q(1) };
    Some(AlgebraElement::from_word(reg.rank(), w, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn koszul_signs(parities in prop::collection::vec(any::<bool>(), 2..6), i in 0usize..6, j in 0usize..6) {
        let mut reg = Registry::new(0);
        for (k, odd) in parities.iter().enumerate() {
            let parity = if *odd { Parity::Odd } else { Parity::Even };
            reg.add(Generator { name: format!("x{k}"), parity, action: q(1), multiplicity: 1 }).unwrap();
        }
        let (a, b) = (i % parities.len(), j % parities.len());
        let (na, nb) = (format!("x{a}"), format!("x{b}"));
        let ab = monomial(&reg, &[&na, &nb], q(1), 0).unwrap();
        let ba = monomial(&reg, &[&nb, &na], q(1), 0).unwrap();
        if parities[a] && parities[b] {
            prop_assert_eq!(ab, ba.neg());
        } else {
            prop_assert_eq!(ab, ba);
        }
    }

    #[test]
    fn assembled_d_flips_parity(picks in prop::collection::vec(0usize..64, 0..4)) {
        let (reg, d) = no_giroux_d();
        prop_assert!(d.kills_one());
        if let Some(x) = random_word(&reg, &picks) {
            let px = x.homogeneous_parity(&reg).unwrap();
            let dx = apply_operator(&reg, &d, &x);
            if !dx.is_zero() {
                prop_assert_eq!(dx.homogeneous_parity(&reg), Some(px.plus(Parity::Odd)));
            }
        }
    }

    #[test]
    fn bracket_derivation_identity(xs in prop::collection::vec(0usize..64, 1..3), ys in prop::collection::vec(0usize..64, 1..3), synthetic in any::<bool>()) {
        let (reg, d) = if synthetic {
            let (reg, d, _) = models::synthetic_acyclic();
            (reg, d)
        } else {
            no_giroux_d()
        };
        let (Some(x), Some(y)) = (random_word(&reg, &xs), random_word(&reg, &ys)) else { return Ok(()) };
        let px = x.homogeneous_parity(&reg).unwrap();
        let lhs = apply_operator(&reg, &d, &bracket(&reg, &d, &x, &y));
        let dx_y = bracket(&reg, &d, &apply_operator(&reg, &d, &x), &y);
        let x_dy = bracket(&reg, &d, &x, &apply_operator(&reg, &d, &y));
        let x_dy = if px.is_odd() { x_dy.neg() } else { x_dy };
        prop_assert_eq!(lhs, dx_y.neg().sub(&x_dy));
    }

    #[test]
    fn bracket_is_bilinear(xs in prop::collection::vec(0usize..64, 1..3), ys in prop::collection::vec(0usize..64, 1..3), zs in prop::collection::vec(0usize..64, 1..3), c in -3i64..4) {
        let (reg, d) = no_giroux_d();
        let (Some(x), Some(y), Some(z)) = (random_word(&reg, &xs), random_word(&reg, &ys), random_word(&reg, &zs)) else { return Ok(()) };
        let lhs = bracket(&reg, &d, &x, &y.add(&z.scale(&q(c))));
        let rhs = bracket(&reg, &d, &x, &y).add(&bracket(&reg, &d, &x, &z).scale(&q(c)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn morse_homology_matches_genus((g, k) in vgk_params()) {
        let ds = vgk(g, k);
        let chi = ds.euler_characteristic();
        prop_assert_eq!(i64::from(ds.genus()), (2 - chi) / 2);
        prop_assert_eq!(morse_homology(&ds).unwrap(), [1, 2 * g as usize, 1]);
        let [c0, c1, c2] = ds.index_counts();
        prop_assert_eq!((c0, c2), (1, 1));
        prop_assert_eq!(c0 as i64 - c1 as i64 + c2 as i64, chi);
        prop_assert_eq!(ds.gamma().len(), k as usize);
        prop_assert_eq!(ds.gamma_class_rank(), k as usize - 1);
    }

    #[test]
    fn morse_square_vanishes((g, k) in vgk_params()) {
        let mc = vgk(g, k).morse_complex();
        let n0 = mc.index0.len();
        for row in 0..n0 {
            for col in 0..mc.index2.len() {
                let s: Rational = (0..mc.index1.len()).map(|j| &mc.d1[row][j] * &mc.d2[j][col]).sum();
                prop_assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn validator_rejects_genus_bookkeeping(extra in 1u32..3) {
        let mut spec = models::vgk_surface(2, 2).unwrap();
        spec.plus.components[0].genus += extra;
        prop_assert!(build_divided_surface(spec).is_err());
    }

    #[test]
    fn orbit_actions_scale_with_cover(cover_max in 1u32..5, (g, k) in vgk_params()) {
        let ds = vgk(g, k);
        let model = ActionModel::default();
        let orbits = generate_orbits(&ds, cover_max, &model).unwrap();
        let min_base = ds.critical_points().iter().map(|p| model.base_action(&ds, &p.id).unwrap()).min().unwrap();
        for o in &orbits {
            let base = model.base_action(&ds, &o.critical_point).unwrap();
            prop_assert_eq!(&o.action, &(&base * Rational::from_integer(o.cover.into())));
            prop_assert!(o.action >= min_base);
            let want = if o.morse_index == 1 { Parity::Odd } else { Parity::Even };
            prop_assert_eq!(o.parity, want);
        }
    }

    #[test]
    fn cylinders_follow_index_table(cover_max in 1u32..4, (g, k) in vgk_params()) {
        let ds = vgk(g, k);
        let orbits = generate_orbits(&ds, cover_max, &ActionModel::default()).unwrap();
        for c in enumerate_cylinders(&ds, &orbits, cover_max) {
            let want = match c.cyl_type {
                CylinderType::Type1 => 2,
                CylinderType::Trivial => 0,
                _ => 1,
            };
            prop_assert_eq!(c.fredholm_index, want);
            if c.cyl_type != CylinderType::Trivial {
                prop_assert!(automatic_transversality_check(&c, &orbits));
            }
        }
    }

    #[test]
    fn trivial_covers_below_bound_are_refused(genus in 0u32..3, pos in prop::collection::vec(1u32..3, 1..4), deficit in 1i64..4, saddle in any::<bool>()) {
        let ds = vgk(2, 2);
        let bound = if saddle { 0 } else { 2 * i64::from(genus) + 2 * (pos.len() as i64 - 1) };
        let degree: u32 = pos.iter().sum();
        let rec = TrivialCoverRecord {
            critical_point: if saddle { "a1".into() } else { "m".into() },
            genus,
            positive_covers: pos,
            negative_covers: vec![degree],
            claimed_index: bound - deficit,
        };
        prop_assert!(validate_trivial_cover(&ds, &rec).is_err());
    }

    #[test]
    fn assembled_operators_are_odd_and_decrease_action((g, k) in vgk_params(), cover_max in 1u32..3) {
        let ds = vgk(g, k);
        let orbits = generate_orbits(&ds, cover_max, &ActionModel::default()).unwrap();
        let cyl = enumerate_cylinders(&ds, &orbits, cover_max);
        let a = assemble_sft_differential(&ds, &orbits, &cyl, CoverWeight::Deck).unwrap();
        prop_assert!(a.operator.is_odd(&a.registry));
        prop_assert!(a.operator.kills_one());
        prop_assert!(a.operator.action_violations(&a.registry, true).is_empty());
    }

    #[test]
    fn omega_separating_keeps_page_order(n in 1u32..4, m in 0u32..2, w0 in -3i64..4) {
        let desc = PlanarTorsionDescriptor::fully_twisted(m, n, 0);
        let mut omega = vec![0; desc.rank];
        omega[0] = w0;
        let desc = desc.with_omega(omega);
        prop_assert!(desc.omega_separating());
        let pm = planar_torsion_differential(&desc).unwrap();
        let df = apply_operator(&pm.registry, &pm.operator, &pm.f);
        let want = AlgebraElement::hbar_power(1, desc.k0()).shift(&[w0], 0);
        prop_assert_eq!(df, want);
    }

    #[test]
    fn ech_parity_rule(
        kinds in prop::collection::vec(0u8..3, 1..5),
        mults in prop::collection::vec((0u32..3, 0u32..3), 1..5),
        czs in prop::collection::vec(-3i64..4, 3),
        c_tau in -4i64..5,
        q_tau in -4i64..5,
    ) {
        let orbits: Vec<EchOrbit> = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let kind = [EchOrbitKind::Elliptic, EchOrbitKind::PositiveHyperbolic, EchOrbitKind::NegativeHyperbolic][*k as usize];
                let cz = match kind {
                    EchOrbitKind::Elliptic => CzData::Table(czs.iter().map(|c| 2 * c + 1).collect()),
                    EchOrbitKind::PositiveHyperbolic => CzData::Constant(2 * czs[0]),
                    EchOrbitKind::NegativeHyperbolic => CzData::Constant(2 * czs[1] + 1),
                };
                EchOrbit { id: format!("o{i}"), kind, action: q(1), cz }
            })
            .collect();
        let mut from = OrbitSet::new();
        let mut to = OrbitSet::new();
        for (i, (a, b)) in mults.iter().enumerate().take(orbits.len()) {
            let cap = if orbits[i].kind.is_hyperbolic() { 1 } else { 3 };
            if *a > 0 { from.insert(i, (*a).min(cap)); }
            if *b > 0 { to.insert(i, (*b).min(cap)); }
        }
        let i = ech_index(&orbits, &from, &to, c_tau, q_tau).unwrap();
        let j = j_plus(&orbits, &from, &to, c_tau, q_tau).unwrap();
        prop_assert_eq!((j - i).rem_euclid(2), positive_hyperbolic_count(&orbits, &from, &to) as i64 % 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solve_primitive_is_sound(picks in prop::collection::vec(0usize..7, 1..3), c in 1i64..4, hb in 0u32..3) {
        let (reg, d, _) = models::synthetic_acyclic();
        let Some(y) = random_word(&reg, &picks) else { return Ok(()) };
        let target = apply_operator(&reg, &d, &y.scale(&q(c))).truncate_hbar(hb);
        if target.is_zero() || target.max_action(&reg) >= q(6) {
            return Ok(());
        }
        let gens: Vec<usize> = reg.ids().collect();
        let out = solve_primitive(&reg, &d, &gens, &target, &SolveConfig::new(q(6), hb, 0)).unwrap();
        let w = out.witness().expect("target is exact by construction");
        prop_assert_eq!(apply_operator(&reg, &d, w).truncate_hbar(hb), target);
    }

    #[test]
    fn acyclic_bracket_primitive(picks in prop::collection::vec((0usize..7, -2i64..3), 1..4), consts in prop::collection::vec(-2i64..3, 5)) {
        let (reg, d, p) = models::synthetic_acyclic();
        let mut qel = AlgebraElement::zero(0);
        for (j, c) in consts.iter().enumerate() {
            qel.add_assign(&AlgebraElement::hbar_power(0, j as u32).scale(&q(*c)));
        }
        for (g, c) in &picks {
            let y = random_word(&reg, &[*g, (*g + 3) % 7]).unwrap_or_else(|| AlgebraElement::one(0));
            qel.add_assign(&apply_operator(&reg, &d, &y).scale(&q(*c)));
        }
        prop_assert!(apply_operator(&reg, &d, &qel).is_zero());
        let r = primitive_via_bracket(&reg, &d, &p, &qel, 4).unwrap();
        prop_assert_eq!(apply_operator(&reg, &d, &r).truncate_hbar(4), qel.truncate_hbar(4));
    }

    #[test]
    fn ech_subcomplexes_and_scaling(m in 0u32..2, n in 1u32..4, bound in 2i64..9, num in 1i64..5, den in 1i64..5) {
        let desc = PlanarTorsionDescriptor::untwisted(m, n, 0);
        let cx = ech::ech_from_planar(&desc, &q(8)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let l = q(bound);
        let full = compare_survival(&cx, &mc, Some(&l), false).unwrap();
        let simple = compare_survival(&cx, &mc, Some(&l), true).unwrap();
        prop_assert!(simple.spectral.value >= full.spectral.value);
        let c = Rational::new(num.into(), den.into());
        let sc = scaling_relabel(&cx, &c).unwrap();
        let smc = decompose_differential(&sc, 4).unwrap();
        prop_assert_eq!(f_value(&sc, &smc, Some(&(&l * &c)), false).unwrap().value, full.spectral.value);
        let back = scaling_relabel(&sc, &(Rational::one() / &c)).unwrap();
        prop_assert_eq!(back, cx.clone());
        for contribution in &cx.contributions {
            prop_assert!(cx.action(&contribution.from) > cx.action(&contribution.to));
        }
    }

    #[test]
    fn surface_ech_models_are_multicomplexes((g, k) in (1u32..3).prop_flat_map(|g| (Just(g), 1..=g + 1))) {
        let ds = vgk(g, k);
        let cx = ech::ech_from_surface(&ds, &ActionModel::default(), &q(5)).unwrap();
        let mc = decompose_differential(&cx, 4).unwrap();
        let full = compare_survival(&cx, &mc, None, false).unwrap();
        let simple = f_value(&cx, &mc, None, true).unwrap();
        prop_assert!(simple.value >= full.spectral.value);
    }
}

#[test]
fn component_order_does_not_matter() {
    let spec = models::no_giroux_surface();
    let mut swapped = spec.clone();
    swapped.minus.components.swap(0, 1);
    for p in &mut swapped.minus.critical_points {
        p.component = 1 - p.component;
    }
    let a = build_divided_surface(spec).unwrap();
    let b = build_divided_surface(swapped).unwrap();
    assert_eq!(morse_homology(&a).unwrap(), morse_homology(&b).unwrap());
    assert_eq!(a.genus(), b.genus());
}

#[test]
fn hyperbolic_kind_matches_saddles() {
    let ds = vgk(3, 2);
    let orbits = generate_orbits(&ds, 2, &ActionModel::default()).unwrap();
    let by_kind: BTreeMap<bool, usize> = orbits.iter().fold(BTreeMap::new(), |mut acc, o| {
        *acc.entry(o.kind == OrbitKind::Hyperbolic).or_insert(0) += 1;
        acc
    });
    assert_eq!(by_kind[&false], 4);
    assert_eq!(by_kind[&true], 2 * ds.index_counts()[1]);
}
