mod common;

use common::{example, fd1, fd2, rel_err, rng};
use phistatic::catalog::catalog_names;
use phistatic::scene::{Chart, ScalarField};
use phistatic::tensor::{kulkarni_nomizu, mat, raise_lower, TensorValue};
use phistatic::{Error, Expr, Jet, Space, MAX_ORDER};
use rand::Rng;

fn chart2() -> Chart {
    Chart::new(vec!["x1".into(), "x2".into()], vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap()
}

fn field(src: &str, chart: &Chart) -> ScalarField {
    ScalarField::new(Expr::parse(src, &chart.coords).unwrap())
}

#[test]
fn polynomial_second_partials() {
    let c = chart2();
    let j = field("x1^2*x2", &c).eval_jet(&c, &[2.0, 3.0], 2).unwrap();
    assert_eq!(j.value, 12.0);
    assert_eq!(j.d(&[0, 0]), 6.0);
    assert_eq!(j.d(&[0, 1]), 4.0);
    assert_eq!(j.d(&[1, 0]), 4.0);
    assert_eq!(j.d(&[1, 1]), 0.0);
}

#[test]
fn sine_series_at_origin() {
    let c = chart2();
    let j = field("sin(x1)", &c).eval_jet(&c, &[0.0, 0.0], 3).unwrap();
    assert_eq!(j.value, 0.0);
    assert!((j.d(&[0]) - 1.0).abs() < 1e-15);
    assert!(j.d(&[0, 0]).abs() < 1e-15);
    assert!((j.d(&[0, 0, 0]) + 1.0).abs() < 1e-15);
}

#[test]
fn exp_derivatives_to_max_order() {
    let c = chart2();
    let j = field("exp(x1)", &c).eval_jet(&c, &[0.7, 0.0], MAX_ORDER).unwrap();
    let e = 0.7f64.exp();
    for k in 1..=MAX_ORDER {
        let idx = vec![0; k];
        assert!((j.d(&idx) - e).abs() < 1e-13 * e, "order {k}");
    }
}

#[test]
fn out_of_chart_and_order_errors() {
    let c = chart2();
    let f = field("x1*x2", &c);
    assert!(matches!(f.eval_jet(&c, &[6.0, 0.0], 1), Err(Error::OutOfChart { .. })));
    let capped = ScalarField::with_order(f.expr.clone(), 2);
    assert!(matches!(capped.eval_jet(&c, &[0.0, 0.0], 3), Err(Error::OrderExceeded { requested: 3, max: 2 })));
    assert!(matches!(f.eval_jet(&c, &[0.0, 0.0], MAX_ORDER + 1), Err(Error::OrderExceeded { .. })));
}

fn random_composite(r: &mut impl Rng) -> String {
    let mut c = || r.random_range(0.3..1.5);
    format!(
        "exp({:.6}*x1)*sin({:.6}*x2 + {:.6}) + sqrt({:.6} + x1^2)*log({:.6} + x2^2) + x1^3*x2/(1 + {:.6}*x1^2) - cos(x1*x2)^2",
        c(),
        c(),
        c(),
        c(),
        c(),
        c()
    )
}

#[test]
fn random_composites_match_finite_differences() {
    let c = chart2();
    let mut r = rng(41);
    for _ in 0..25 {
        let src = random_composite(&mut r);
        let e = Expr::parse(&src, &c.coords).unwrap();
        let x = [r.random_range(-1.5..1.5), r.random_range(-1.5..1.5)];
        let j = ScalarField::new(e.clone()).eval_jet(&c, &x, 2).unwrap();
        let f = |y: &[f64]| e.eval_f64(y);
        for i in 0..2 {
            assert!(rel_err(j.d(&[i]), fd1(&f, &x, i, 1e-4)) < 1e-6, "{src} ∂{i}");
            for k in 0..2 {
                assert!(rel_err(j.d(&[i, k]), fd2(&f, &x, i, k, 1e-4)) < 1e-6, "{src} ∂{i}∂{k}");
            }
        }
    }
}

#[test]
fn mixed_partials_are_symmetric() {
    let sp = Space::get(3, 4);
    let xs = Jet::coordinates(&sp, &[0.3, -0.4, 0.8]);
    let f = (&xs[0] * &xs[1]).sin() * (&xs[2] * &xs[2] + &xs[0]).exp() + (&xs[1] * &xs[2]).powf(3.0);
    let orders: [[usize; 4]; 4] = [[0, 1, 2, 2], [2, 0, 2, 1], [2, 2, 1, 0], [1, 2, 0, 2]];
    let first = f.partial_idx(&orders[0]);
    for o in &orders[1..] {
        assert!((f.partial_idx(o) - first).abs() <= 1e-12 * first.abs().max(1.0));
    }
    let a = f.deriv(0).deriv(1).value();
    let b = f.deriv(1).deriv(0).value();
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    assert!((a - f.partial_idx(&[0, 1])).abs() <= 1e-12 * a.abs().max(1.0));
}

#[test]
fn catalog_fields_match_finite_differences() {
    for name in catalog_names() {
        let s = example(name);
        let mut exprs: Vec<&Expr> = s.metric.iter().collect();
        exprs.extend(s.u.iter());
        exprs.extend(s.f.iter());
        if let Some(map) = &s.map {
            exprs.extend(map.components.iter());
        }
        for x in s.sample_points(3, 5) {
            for e in &exprs {
                let j = ScalarField::new((*e).clone()).eval_jet(&s.chart, &x, 2).unwrap();
                let f = |y: &[f64]| e.eval_f64(y);
                for i in 0..s.dim() {
                    let d = fd1(&f, &x, i, 1e-3);
                    assert!(rel_err(j.d(&[i]), d) < 1e-6, "{name}: {} ∂{i}", e.render(&s.chart.coords));
                    for k in 0..s.dim() {
                        let d = fd2(&f, &x, i, k, 1e-3);
                        assert!(rel_err(j.d(&[i, k]), d) < 1e-6, "{name}: {} ∂{i}∂{k}", e.render(&s.chart.coords));
                    }
                }
            }
        }
    }
}

#[test]
fn parse_error_positions() {
    let vars = vec!["x".to_string(), "y".to_string()];
    let e = Expr::parse("x + * y", &vars).unwrap_err();
    assert_eq!((e.line, e.col), (1, 5));
    let e = Expr::parse("x +\n  z", &vars).unwrap_err();
    assert_eq!((e.line, e.col), (2, 3));
    assert!(Expr::parse("sin(x", &vars).is_err());
    assert!(Expr::parse("frob(x)", &vars).is_err());
}

#[test]
fn render_round_trip() {
    let vars = vec!["x".to_string(), "y".to_string()];
    let mut r = rng(3);
    for src in ["-x^2*y/(1+y^2)", "exp(-x)*cos(2*y) - sqrt(1 + x^2)", "log(2 + sin(x*y))^3", "x - (y - 1)", "2^-x"] {
        let e = Expr::parse(src, &vars).unwrap();
        let back = Expr::parse(&e.render(&vars), &vars).unwrap();
        for _ in 0..5 {
            let p = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            assert!((e.eval_f64(&p) - back.eval_f64(&p)).abs() < 1e-14, "{src}");
        }
    }
}

#[test]
fn symbolic_derivative_agrees_with_jets() {
    let c = chart2();
    let e = Expr::parse("x1^3*sin(x2) + exp(x1*x2)", &c.coords).unwrap();
    let x = [0.4, -1.1];
    let j = ScalarField::new(e.clone()).eval_jet(&c, &x, 2).unwrap();
    assert!((e.diff(0).eval_f64(&x) - j.d(&[0])).abs() < 1e-13);
    assert!((e.diff(0).diff(1).eval_f64(&x) - j.d(&[0, 1])).abs() < 1e-13);
}

fn sym(m: usize, r: &mut impl Rng) -> TensorValue {
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = r.random_range(-1.0..1.0);
            d[i * m + j] = v;
            d[j * m + i] = v;
        }
    }
    TensorValue::covariant(m, 2, d)
}

#[test]
fn kulkarni_nomizu_of_metric() {
    for m in 2..=4 {
        let g = TensorValue::covariant(m, 2, mat::identity(m));
        let gg = kulkarni_nomizu(&g, &g).unwrap();
        for i in 0..m {
            for j in 0..m {
                let v = gg.get(&[i, j, i, j]);
                assert_eq!(v, if i == j { 0.0 } else { 2.0 });
                assert_eq!(gg.get(&[j, i, i, j]), -v);
            }
        }
    }
}

#[test]
fn kulkarni_nomizu_symmetries() {
    let mut r = rng(9);
    for _ in 0..20 {
        let (a, b) = (sym(3, &mut r), sym(3, &mut r));
        let ab = kulkarni_nomizu(&a, &b).unwrap();
        let ba = kulkarni_nomizu(&b, &a).unwrap();
        for (x, y) in ab.data.iter().zip(&ba.data) {
            assert!((x - y).abs() <= 1e-15);
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let v = ab.get(&[i, j, k, l]);
                        assert!((v + ab.get(&[j, i, k, l])).abs() <= 1e-12);
                        assert!((v + ab.get(&[i, j, l, k])).abs() <= 1e-12);
                        assert!((v - ab.get(&[k, l, i, j])).abs() <= 1e-12);
                        let bianchi = v + ab.get(&[i, k, l, j]) + ab.get(&[i, l, j, k]);
                        assert!(bianchi.abs() <= 1e-12);
                    }
                }
            }
        }
    }
    let a = sym(3, &mut r);
    let b = sym(4, &mut r);
    assert!(matches!(kulkarni_nomizu(&a, &b), Err(Error::DimensionMismatch(_))));
}

#[test]
fn raise_lower_examples() {
    let v = TensorValue::covariant(2, 1, vec![1.0, 1.0]);
    let up = raise_lower(&v, &[4.0, 0.0, 0.0, 9.0], 0).unwrap();
    assert_eq!(up.contra, vec![true]);
    assert!((up.data[0] - 0.25).abs() < 1e-15 && (up.data[1] - 1.0 / 9.0).abs() < 1e-15);

    let e = mat::identity(3);
    let t = TensorValue::covariant(3, 2, (0..9).map(|i| i as f64 - 3.5).collect());
    let back = raise_lower(&raise_lower(&t, &e, 1).unwrap(), &e, 1).unwrap();
    assert_eq!(back, t);

    let singular = [1.0, 1.0, 1.0, 1.0];
    assert!(matches!(raise_lower(&v, &singular, 0), Err(Error::SingularMetric { .. })));
    assert!(raise_lower(&v, &[1.0, 0.0, 0.0, 1.0], 1).is_err());
}

#[test]
fn raise_lower_round_trip_random_spd() {
    let mut r = rng(17);
    for m in 2..=5 {
        for _ in 0..20 {
            // g = BᵀB + I is SPD; the inverse oracle is the solve of g·v = w.
            let b: Vec<f64> = (0..m * m).map(|_| r.random_range(-1.0..1.0)).collect();
            let mut g = mat::matmul(&transpose(&b, m), &b, m);
            for i in 0..m {
                g[i * m + i] += 1.0;
            }
            let w: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
            let t = TensorValue::covariant(m, 1, w.clone());
            let up = raise_lower(&t, &g, 0).unwrap();
            let gw: Vec<f64> = (0..m).map(|i| (0..m).map(|j| g[i * m + j] * up.data[j]).sum()).collect();
            let down = raise_lower(&up, &g, 0).unwrap();
            for i in 0..m {
                assert!((gw[i] - w[i]).abs() <= 1e-12);
                assert!((down.data[i] - w[i]).abs() <= 1e-12);
            }
        }
    }
}

fn transpose(a: &[f64], m: usize) -> Vec<f64> {
    (0..m * m).map(|k| a[(k % m) * m + k / m]).collect()
}
