mod common;

use common::example;
use phistatic::catalog::{catalog_names, warped_profile};
use phistatic::spfst::*;
use phistatic::tensor::Field;
use phistatic::{Error, Geo};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

#[test]
fn costa_solves_both_systems() {
    let s = example("costa");
    assert_eq!(s.dim(), 5);
    assert_eq!(s.alpha, -2.0);
    for x in s.sample_points(32, 1) {
        let geo = Geo::new(&s, &x, 2).unwrap();
        assert!((geo.sphi().value() - 12.0).abs() <= 1e-9);
        let fl = system_residual(&s, &x, SystemKind::Fluid).unwrap();
        let labels: Vec<&str> = fl.equations.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["i", "ii", "iii", "iv", "v", "conservation"]);
        assert!(fl.sup() <= 1e-7, "{x:?}: {:e}", fl.sup());
        assert!(system_residual(&s, &x, SystemKind::Eta).unwrap().sup() <= 1e-7);
    }
}

/// u·Ric − Hess u − m·u·g and Δu + m·u in an orthonormal frame.
fn hemisphere_defects(geo: &Geo) -> (f64, f64) {
    let m = geo.m;
    let u = geo.require_u().unwrap();
    let hu = geo.hess_u().unwrap();
    let ric = geo.ric();
    let t = Field::build(m, 2, |x| {
        let mut v = u * ric.at(x) - hu.at(x);
        if x[0] == x[1] {
            v -= u * (m as f64);
        }
        v
    });
    let lap = geo.trace(hu) + u * (m as f64);
    (t.sup_norm(), lap.value().abs())
}

#[test]
fn hemisphere_static_equations() {
    let s = example("hemisphere");
    for x in s.sample_points(16, 2) {
        let geo = Geo::new(&s, &x, 2).unwrap();
        let (a, b) = hemisphere_defects(&geo);
        assert!(a <= 1e-8 && b <= 1e-8);
        assert!((geo.scal().value() - 6.0).abs() < 1e-10);
        assert!(system_residual(&s, &x, SystemKind::Fluid).unwrap().sup() <= 1e-8);
    }
}

#[test]
fn hemisphere_gradient_is_constant_on_the_boundary() {
    let s = example("hemisphere");
    let mut means = Vec::new();
    for level in [1e-2, 1e-4, 1e-6] {
        let g = boundary_gradient(&s, 16, 3, level).unwrap();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let spread = g.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
        assert!(spread <= 1e-4, "level {level}: spread {spread:e}");
        means.push(mean);
    }
    // |∇u| = sin r → 1 as cos r → 0
    assert!((means[2] - 1.0).abs() < 1e-4);
    assert!((means[2] - means[1]).abs() < (means[1] - means[0]).abs());
}

#[test]
fn random_scene_is_not_a_solution() {
    let s = example("random");
    let x = &s.sample_points(1, 4)[0];
    assert!(system_residual(&s, x, SystemKind::Fluid).unwrap().sup() > 1e-3);
    assert!(system_residual(&s, x, SystemKind::Eta).unwrap().sup() > 1e-3);
    let i = integrability_residuals(&s, x).unwrap();
    assert!(i.first_sup > 1e-3 && i.second_sup > 1e-3);
}

#[test]
fn fluid_system_needs_its_fields() {
    let s = example("round-sphere");
    let x = &s.sample_points(1, 5)[0];
    assert!(matches!(system_residual(&s, x, SystemKind::Fluid), Err(Error::MissingField(_))));
    let h = example("hemisphere");
    let edge = [std::f64::consts::FRAC_PI_2 - 1e-10, 1.0, 1.0];
    assert!(matches!(system_residual(&h, &edge, SystemKind::Fluid), Err(Error::BoundaryPoint { .. })));
}

#[test]
fn integrability_on_solutions() {
    let s = example("gaussian-soliton");
    for x in s.sample_points(8, 6) {
        let i = integrability_residuals(&s, &x).unwrap();
        assert!(i.first_sup <= 1e-6 && i.second_sup <= 1e-6);
    }
    let s = example("costa");
    for x in s.sample_points(8, 7) {
        let i = integrability_residuals(&s, &x).unwrap();
        assert!(i.first_sup <= 1e-5 && i.second_sup <= 1e-5);
    }
}

#[test]
fn solutions_satisfy_the_implied_chain() {
    let mut tested = 0;
    for name in catalog_names() {
        let s = example(name);
        for x in s.sample_points(6, 8) {
            let Ok(fl) = system_residual(&s, &x, SystemKind::Fluid) else { continue };
            if fl.sup() > 1e-8 || s.f.is_none() && s.u.is_none() {
                continue;
            }
            let i = integrability_residuals(&s, &x).unwrap();
            assert!(i.first_sup <= 1e-5 && i.second_sup <= 1e-5, "{name}");
            let l = level_set_geometry(&s, &x).unwrap();
            assert!(l.norm_defect.abs() <= 1e-5, "{name}");
            tested += 1;
        }
    }
    assert!(tested >= 18);
}

#[test]
fn costa_level_sets_are_not_umbilical() {
    let s = example("costa");
    let mut max_traceless = 0.0f64;
    for x in s.sample_points(8, 9) {
        let l = level_set_geometry(&s, &x).unwrap();
        assert!(l.norm_defect.abs() <= 1e-5);
        max_traceless = max_traceless.max(l.traceless_norm());
        let tr: f64 = (0..4).map(|a| l.traceless[a * 4 + a]).sum();
        assert!(tr.abs() < 1e-12);
        let geo = Geo::new(&s, &x, 2).unwrap();
        assert!(phistatic::curvature::dbar(&geo).unwrap().sup_norm() > 1e-6);
        for (a, ta) in l.tangents.iter().enumerate() {
            let g = s.metric_at(&x);
            let ip = |p: &[f64], q: &[f64]| (0..5).map(|i| (0..5).map(|j| g[i * 5 + j] * p[i] * q[j]).sum::<f64>()).sum::<f64>();
            assert!(ip(ta, &l.normal).abs() < 1e-10);
            assert!((ip(ta, ta) - 1.0).abs() < 1e-10);
            for tb in &l.tangents[a + 1..] {
                assert!(ip(ta, tb).abs() < 1e-10);
            }
        }
    }
    assert!(max_traceless > 1e-2);
}

#[test]
fn geodesic_spheres_are_umbilical() {
    let s = example("round-sphere");
    for x in s.sample_points(6, 10) {
        assert!(level_set_geometry(&s, &x).unwrap().traceless_norm() < 1e-10);
    }
}

#[test]
fn critical_point_is_refused() {
    let s = example("gaussian-soliton");
    assert!(matches!(level_set_geometry(&s, &[0.0, 0.0, 0.0]), Err(Error::CriticalPoint { .. })));
}

#[test]
fn gradient_norm_is_constant_on_level_sets() {
    for name in ["costa", "hemisphere"] {
        let s = example(name);
        let base = &s.sample_points(1, 11)[0];
        let norms: Vec<f64> = s
            .sample_points(6, 12)
            .into_iter()
            .map(|mut y| {
                y[0] = base[0];
                level_set_geometry(&s, &y).unwrap().grad_norm
            })
            .collect();
        for v in &norms {
            assert!((v - norms[0]).abs() <= 1e-5, "{name}");
        }
    }
}

#[test]
fn warped_split_defects() {
    let s = example("warped-profile");
    for r in [0.1, 0.5, 1.0, 1.4] {
        assert!(warped_split_residual(&s, r).unwrap().abs() <= 1e-8);
    }
    let trivial = warped_profile(3, "1", "0.4", 1.0).unwrap();
    assert!((warped_split_residual(&trivial, 0.7).unwrap() - 2.0).abs() < 1e-14);
    let generic = warped_profile(4, "r^2", "r", 0.3).unwrap();
    assert!(warped_split_residual(&generic, 0.7).unwrap().abs() > 1e-2);
    assert!(matches!(warped_split_residual(&example("costa"), 0.5), Err(Error::MissingProfile(_))));
}

const SUITE: [(&str, &[&str], f64); 11] = [
    ("two_form", &["random"], 1e-5),
    ("bochner", &["costa", "random", "conformal-sphere", "flat-fluid"], 1e-5),
    ("divZ_shen", &["costa", "hemisphere", "flat-fluid"], 1e-5),
    ("cotton_fundamental", &["costa", "hemisphere", "gaussian-soliton", "flat-fluid"], 1e-5),
    ("conservation", &["costa", "hemisphere", "warped-profile"], 1e-5),
    ("divY", &["costa", "hemisphere", "gaussian-soliton", "flat-fluid"], 1e-4),
    ("divX_fp", &["costa", "random", "flat-fluid"], 1e-4),
    ("divZ_boundary", &["hemisphere", "costa", "warped-profile"], 1e-5),
    ("hess_gamma", &["round-sphere", "flat-fluid"], 1e-5),
    ("weyl_div3", &["random", "costa", "conformal-sphere"], 1e-5),
    ("bach_div", &["random", "conformal-sphere", "flat-fluid"], 1e-5),
];

#[test]
fn divergence_identity_suite() {
    for (id, scenes, tol) in SUITE {
        for name in scenes {
            let s = example(name);
            for x in s.sample_points(6, 13) {
                let v = divergence_identity(id, &s, &x).unwrap_or_else(|e| panic!("{id} on {name}: {e}"));
                assert!(v.defect <= tol, "{id} on {name}: {:e}", v.defect);
                assert_eq!(v.lhs.len(), v.rhs.len());
                if let Some(r) = v.reduced_defect {
                    assert!(r <= tol);
                }
            }
        }
    }
    assert_eq!(SUITE.len(), IDENTITY_IDS.len());
}

#[test]
fn identities_have_nontrivial_sides() {
    // the suite would pass vacuously if both sides vanished
    for (id, name) in [("bochner", "random"), ("divZ_shen", "costa"), ("weyl_div3", "random"), ("bach_div", "conformal-sphere")] {
        let s = example(name);
        let x = &s.sample_points(1, 14)[0];
        let v = divergence_identity(id, &s, x).unwrap();
        assert!(sup(&v.lhs) > 1e-3, "{id}");
    }
}

#[test]
fn conservation_on_costa_is_tight() {
    let s = example("costa");
    for x in s.sample_points(8, 15) {
        assert!(divergence_identity("conservation", &s, &x).unwrap().defect <= 1e-7);
    }
}

#[test]
fn unmet_hypotheses_are_named() {
    let s = example("random");
    let x = &s.sample_points(1, 16)[0];
    match divergence_identity("divY", &s, x) {
        Err(Error::HypothesisUnmet { id, hypothesis }) => {
            assert_eq!(id, "divY");
            assert!(hypothesis.starts_with("eta_system"), "{hypothesis}");
        }
        other => panic!("expected HypothesisUnmet, got {other:?}"),
    }
    let flat = example("flat");
    assert!(matches!(divergence_identity("divZ_shen", &flat, &[0.1, 0.2, 0.3]), Err(Error::HypothesisUnmet { .. })));
    assert!(matches!(divergence_identity("nope", &s, x), Err(Error::UnknownCheckId(_))));
    for id in IDENTITY_IDS {
        assert!(identity_order(id).unwrap() <= phistatic::MAX_ORDER);
        assert!(identity_hypotheses(id).is_ok());
    }
}

#[test]
fn boundary_variable_change() {
    let s = example("warped-profile");
    let t = s.with_u_from_f().unwrap();
    let x = &s.sample_points(1, 17)[0];
    let g = Geo::new(&t, x, 1).unwrap();
    let f = s.f.as_ref().unwrap().eval_f64(x);
    assert!((g.u().unwrap().value() - (-s.eta * f).exp()).abs() < 1e-14);
}
