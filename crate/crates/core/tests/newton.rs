mod common;

use common::{example, rng};
use phistatic::catalog::flat_torus;
use phistatic::newton::*;
use phistatic::quadrature::{QuadratureGrid, POLE_EXCLUSION};
use phistatic::tensor::mat;
use phistatic::{Error, Expr, TensorSpec};
use rand::Rng;

fn random_sym(m: usize, r: &mut impl Rng) -> Vec<f64> {
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = r.random_range(-2.0..2.0);
            a[i * m + j] = v;
            a[j * m + i] = v;
        }
    }
    a
}

/// Elementary symmetric polynomials of the eigenvalues.
fn eigen_s(a: &[f64], m: usize) -> Vec<f64> {
    let ev = nalgebra::DMatrix::from_row_slice(m, m, a).symmetric_eigen().eigenvalues;
    let mut e = vec![1.0];
    for &l in ev.iter() {
        let mut next = e.clone();
        next.push(0.0);
        for k in 1..next.len() {
            next[k] += l * e[k - 1];
        }
        e = next;
    }
    e
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn sym_functions_small_cases() {
    let id = mat::identity(4);
    for k in 0..=4 {
        let s = sym_functions(&id, 4, k).unwrap();
        assert!((s.s_k - binom(4, k)).abs() < 1e-14);
        assert!((s.sigma_k - 1.0).abs() < 1e-14);
    }
    let d = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0];
    let s: Vec<f64> = (1..=3).map(|k| sym_functions(&d, 3, k).unwrap().s_k).collect();
    assert_eq!(s, vec![6.0, 11.0, 6.0]);
    assert!(matches!(sym_functions(&d, 3, 4), Err(Error::KOutOfRange { k: 4, m: 3 })));
    assert!(matches!(newton_operator(&d, 3, 5), Err(Error::KOutOfRange { .. })));
    assert!(sym_functions(&d, 2, 1).is_err());
}

#[test]
fn sym_functions_match_eigenvalues() {
    let mut r = rng(1);
    for _ in 0..50 {
        let a = random_sym(5, &mut r);
        let e = eigen_s(&a, 5);
        for k in 0..=5 {
            let s = sym_functions(&a, 5, k).unwrap().s_k;
            assert!((s - e[k]).abs() <= 1e-10 * e[k].abs().max(1.0), "k={k}");
        }
        let sig = sigmas(&a, 5);
        for k in 0..=5 {
            assert!((sig[k] - e[k] / binom(5, k)).abs() < 1e-10 * sig[k].abs().max(1.0));
        }
    }
}

#[test]
fn newton_operators_of_identity() {
    for m in 2..=5 {
        let id = mat::identity(m);
        for k in 0..=m {
            let p = newton_operator(&id, m, k).unwrap();
            let c = (m - k) as f64 * binom(m, k) / m as f64;
            for q in 0..m * m {
                assert!((p[q] - c * id[q]).abs() < 1e-12);
            }
            assert!((mat::trace(&p, m) - c_k(m, k)).abs() < 1e-12);
        }
    }
}

#[test]
fn newton_trace_identities_on_random_matrices() {
    let mut r = rng(2);
    for _ in 0..100 {
        let m = 5;
        let a = random_sym(m, &mut r);
        let (s, p) = newton_chain(&a, m, m);
        for k in 0..m {
            let tr = mat::trace(&p[k], m);
            assert!((tr - (m - k) as f64 * s[k]).abs() <= 1e-10);
            let ap = mat::matmul(&a, &p[k], m);
            assert!((mat::trace(&ap, m) - (k + 1) as f64 * s[k + 1]).abs() <= 1e-10);
        }
        assert!(frob(&p[m]) <= 1e-9);
    }
    for _ in 0..20 {
        let a = random_sym(4, &mut r);
        assert!(frob(&newton_operator(&a, 4, 4).unwrap()) <= 1e-9);
    }
}

#[test]
fn newton_and_garding_inequalities() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let m = r.random_range(2..7);
        let a = random_sym(m, &mut r);
        let s = sigmas(&a, m);
        for k in 1..m {
            let lhs = s[k - 1] * s[k + 1];
            assert!(lhs <= s[k] * s[k] + 1e-10 * (1.0 + s[k] * s[k]), "Newton m={m} k={k}");
        }
        // shift toward the positive cone
        let mut b = a.clone();
        let shift = r.random_range(0.0..3.0);
        for i in 0..m {
            b[i * m + i] += shift;
        }
        let s = sigmas(&b, m);
        let mut k = 1;
        while k < m && s[k + 1] > 0.0 && s[1..=k].iter().all(|&v| v > 0.0) {
            let lo = s[k + 1].powf(1.0 / (k + 1) as f64);
            let hi = s[k].powf(1.0 / k as f64);
            assert!(lo <= hi * (1.0 + 1e-10), "Gårding m={m} k={k}");
            k += 1;
        }
    }
}

#[test]
fn newton_equality_for_umbilical_matrices() {
    for c in [0.5, 1.0, -2.0] {
        let a: Vec<f64> = mat::identity(4).into_iter().map(|v| c * v).collect();
        let s = sigmas(&a, 4);
        for k in 1..4 {
            assert!((s[k - 1] * s[k + 1] - s[k] * s[k]).abs() <= 1e-9);
        }
    }
}

#[test]
fn codazzi_of_parallel_and_space_form_tensors() {
    let mut s = example("round-sphere");
    s.tensor = Some(TensorSpec::Metric(1.0));
    for x in s.sample_points(3, 4) {
        for k in 1..=3 {
            let c = codazzi_and_divergence(&s, &x, k).unwrap();
            assert!(c.codazzi_sup < 1e-12 && c.div_sup < 1e-12);
        }
    }
    let s = example("codazzi-sphere");
    for x in s.sample_points(6, 5) {
        for k in 1..=3 {
            let c = codazzi_and_divergence(&s, &x, k).unwrap();
            assert!(c.codazzi_sup <= 1e-7, "{:e}", c.codazzi_sup);
            assert!(c.div_sup <= 1e-6);
            assert!(c.formula_defect <= 1e-6);
        }
    }
}

#[test]
fn divergence_formula_holds_without_codazzi() {
    let mut s = example("random");
    s.tensor = Some(TensorSpec::ShiftedSchouten);
    for x in s.sample_points(3, 6) {
        // P_4 = 0 in dimension 4, so k stops at 3
        for k in 1..=3 {
            let c = codazzi_and_divergence(&s, &x, k).unwrap();
            assert!(c.codazzi_sup > 1e-3);
            assert!(c.div_sup > 1e-4);
            assert!(c.formula_defect <= 1e-6, "k={k}: {:e}", c.formula_defect);
        }
    }
}

#[test]
fn lk_operator_cases() {
    let s = example("codazzi-sphere");
    for x in s.sample_points(3, 7) {
        let l0 = lk_apply(&s, &x, 0).unwrap();
        let geo = phistatic::Geo::new(&s, &x, 2).unwrap();
        let lap = geo.lap(geo.u().unwrap()).value();
        assert!((l0.value - lap).abs() < 1e-10);
        for k in 0..=3 {
            let l = lk_apply(&s, &x, k).unwrap();
            assert!((l.value - l.divergence_form).abs() < 1e-8, "k={k}");
        }
    }
    let mut flat = phistatic::catalog::flat(3).unwrap();
    flat.tensor = Some(TensorSpec::Metric(1.0));
    flat.u = Some(Expr::parse("exp(-(x1^2 + x2^2 + x3^2))", &flat.chart.coords).unwrap());
    let x = [0.2, -0.3, 0.4];
    let lap = lk_apply(&flat, &x, 0).unwrap().value;
    for k in 0..=3 {
        let v = lk_apply(&flat, &x, k).unwrap().value;
        assert!((v - c_k(3, k) / 3.0 * lap).abs() < 1e-12);
    }
    assert!(matches!(lk_apply(&flat, &x, 4), Err(Error::KOutOfRange { .. })));
}

#[test]
fn lk_structured_hessians() {
    let mut r = rng(8);
    for _ in 0..200 {
        let m = r.random_range(2..6);
        let a = random_sym(m, &mut r);
        let gu: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let (p, q, l) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        for k in 0..m {
            let (d, c) = lk_structured(&a, m, k, p, q, l, &gu).unwrap();
            assert!((d - c).abs() <= 1e-8);
        }
    }
}

#[test]
fn quadrature_volumes() {
    let s = example("round-sphere");
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    let mut prev = f64::INFINITY;
    for level in 1..=3 {
        let g = QuadratureGrid::build(&s, level, POLE_EXCLUSION).unwrap();
        let err = (g.volume() - exact).abs();
        assert!(err < 1e-5, "level {level}: {err:e}");
        // level 2 already sits at the roundoff floor
        assert!(err <= prev || err < 1e-11);
        prev = err;
    }
    let t = flat_torus(3).unwrap();
    let g = QuadratureGrid::build(&t, 2, POLE_EXCLUSION).unwrap();
    assert!((g.volume() - (2.0 * std::f64::consts::PI).powi(3)).abs() < 1e-9);
    assert_eq!(g.len(), 12usize.pow(3));
    let s2 = phistatic::catalog::round_sphere(2).unwrap();
    let g = QuadratureGrid::build(&s2, 3, POLE_EXCLUSION).unwrap();
    assert!((g.volume() - 4.0 * std::f64::consts::PI).abs() < 1e-5);
}

#[test]
fn quadrature_refuses_open_scenes() {
    assert!(matches!(QuadratureGrid::build(&example("costa"), 2, POLE_EXCLUSION), Err(Error::NotClosed(_))));
    assert!(QuadratureGrid::build(&example("round-sphere"), 0, POLE_EXCLUSION).is_err());
    assert!(QuadratureGrid::build(&example("round-sphere"), 1, 0.5).is_err());
}

#[test]
fn divergence_integrals_vanish_on_closed_scenes() {
    let cases = [
        ("round-sphere", "cos(r) + sin(r)*cos(t1)", "sin(r)*sin(t1)*cos(t2)*cos(r)"),
        ("codazzi-sphere", "sin(r)^2*cos(t1)", "cos(r)*sin(r)*sin(t1)*sin(t2)"),
        ("flat-torus", "sin(x1) + cos(x2)*sin(x3)", "cos(x1)*sin(x3)"),
    ];
    for (name, f, h) in cases {
        let s = example(name);
        let g = QuadratureGrid::build(&s, 3, POLE_EXCLUSION).unwrap();
        let f = Expr::parse(f, &s.chart.coords).unwrap();
        let h = Expr::parse(h, &s.chart.coords).unwrap();
        let v = divergence_integral(&s, &f, &h, &g).unwrap();
        assert!(v.abs() <= 1e-4, "{name}: {v:e}");
    }
}

#[test]
fn kazdan_warner_on_round_sphere() {
    let s = example("round-sphere");
    let g = QuadratureGrid::build(&s, 3, POLE_EXCLUSION).unwrap();
    for k in 1..=2 {
        let kw = kazdan_warner(&s, k, &g).unwrap();
        assert!(kw.lhs.abs() <= 1e-6 && kw.rhs.abs() <= 1e-6, "k={k}: {kw:?}");
        assert!(kw.system_form);
    }
}

#[test]
fn kazdan_warner_on_flat_torus() {
    let s = flat_torus(3).unwrap();
    let g = QuadratureGrid::build(&s, 2, POLE_EXCLUSION).unwrap();
    for k in 1..3 {
        let kw = kazdan_warner(&s, k, &g).unwrap();
        assert!(kw.lhs.abs() < 1e-12 && kw.rhs.abs() < 1e-9, "{kw:?}");
        assert_eq!(kw.anselli_holds, Some(true));
    }
}

#[test]
fn kazdan_warner_converges_on_codazzi_sphere() {
    let s = example("codazzi-sphere");
    for k in 1..=2 {
        let defects: Vec<f64> = (1..=3)
            .map(|level| {
                let g = QuadratureGrid::build(&s, level, POLE_EXCLUSION).unwrap();
                let kw = kazdan_warner(&s, k, &g).unwrap();
                assert!(!kw.system_form);
                assert!(kw.lhs.abs() > 1e-3, "nontrivial integrals");
                kw.defect.abs()
            })
            .collect();
        assert!(defects[2] <= 1e-4, "k={k}: {defects:?}");
        assert!(defects[2] <= defects[1] && defects[1] <= defects[0], "k={k}: {defects:?}");
    }
}

#[test]
fn kazdan_warner_gates() {
    let mut s = example("round-sphere");
    let g = QuadratureGrid::build(&s, 1, POLE_EXCLUSION).unwrap();
    assert!(matches!(kazdan_warner(&s, 3, &g), Err(Error::KOutOfRange { .. })));
    s.u = Some(Expr::parse("cos(r)", &s.chart.coords).unwrap());
    assert!(matches!(kazdan_warner(&s, 1, &g), Err(Error::UPositivityViolated(_))));
    let mut s = example("round-sphere");
    s.tensor = Some(TensorSpec::HessPlus(Expr::parse("sin(r)^3*cos(t1)", &s.chart.coords).unwrap()));
    s.metric[0] = Expr::parse("1 + 0.2*cos(r)^2", &s.chart.coords).unwrap();
    assert!(matches!(kazdan_warner(&s, 1, &g), Err(Error::NotCodazzi(_))));
}
