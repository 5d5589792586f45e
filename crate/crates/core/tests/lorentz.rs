mod common;

use common::{example, rng};
use phistatic::catalog::{flat, random_scene};
use phistatic::lorentz::*;
use phistatic::tensor::mat;
use phistatic::{Error, Expr, Geo};
use rand::Rng;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

#[test]
fn product_lift_is_trivial() {
    let mut s = random_scene(4, 2, 7).unwrap();
    s.u = Some(Expr::Num(1.0));
    s.f = None;
    for x in s.sample_points(3, 1) {
        let geo = Geo::new(&s, &x, 2).unwrap();
        let l = lift_at(&geo).unwrap();
        let ric = geo.ric().values();
        for k in 0..16 {
            assert!((l.ricci_spatial[k] - ric[k]).abs() < 1e-14);
        }
        assert!(l.ricci_time.abs() < 1e-14);
        assert!((l.scalar - geo.scal().value()).abs() < 1e-12);
        let tau = phistatic::curvature::map_quantities(&s, &x).unwrap().tension;
        for (a, b) in l.tension.iter().zip(&tau) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(sup(&l.ricci_mixed), 0.0);
    }
}

#[test]
fn costa_lifted_scalar() {
    let s = example("costa");
    for x in s.sample_points(6, 2) {
        let l = lift_static(&s, &x).unwrap();
        let geo = Geo::new(&s, &x, 2).unwrap();
        let sc = geo.scal().value();
        assert!((l.scalar - (sc + 6.0)).abs() < 1e-10);
        assert!((l.ricci_time + 3.0).abs() < 1e-10, "Δu/u = −(n+1)");
    }
}

#[test]
fn lift_matches_riemannian_companion() {
    for name in ["random", "costa", "conformal-sphere", "hemisphere"] {
        let s = example(name);
        let c = riemannian_companion(&s).unwrap();
        let m = s.dim();
        for x in s.sample_points(4, 3) {
            let l = lift_static(&s, &x).unwrap();
            let mut xc = x.clone();
            xc.push(0.0);
            let g = Geo::new(&c, &xc, 2).unwrap();
            let ric = g.ric().values();
            let k = m + 1;
            let mut tr = ric[k * k - 1];
            for i in 0..m {
                tr += ric[i * k + i];
                assert!(ric[i * k + m].abs() < 1e-10, "mixed block");
                for j in 0..m {
                    assert!((ric[i * k + j] - l.ricci_spatial[i * m + j]).abs() < 1e-8, "{name}");
                }
            }
            assert!((ric[k * k - 1] + l.ricci_time).abs() < 1e-8);
            assert!((tr - l.scalar).abs() < 1e-6, "{name}: Ŝ");
        }
    }
}

#[test]
fn lift_refuses_boundary_points() {
    let s = example("hemisphere");
    let x = [std::f64::consts::FRAC_PI_2 - 1e-12, 1.0, 1.0];
    assert!(matches!(lift_static(&s, &x), Err(Error::BoundaryPoint { .. })));
}

#[test]
fn einstein_equations_on_solutions() {
    for name in ["costa", "hemisphere", "flat-fluid"] {
        let s = example(name);
        for x in s.sample_points(16, 4) {
            let e = einstein_residual(&s, &x).unwrap();
            assert!(e.sup <= 1e-6, "{name}: {:e}", e.sup);
        }
    }
    let s = example("random");
    let x = &s.sample_points(1, 5)[0];
    assert!(einstein_residual(&s, x).unwrap().sup > 1e-3);
}

#[test]
fn vacuum_and_dust() {
    let mut s = flat(3).unwrap();
    s.u = Some(Expr::Num(1.0));
    s.mu = Some(Expr::Num(0.0));
    s.p = Some(Expr::Num(0.0));
    let x = [0.1, 0.2, 0.3];
    let t = stress_energy(&s, &x).unwrap();
    assert_eq!(t.time, 0.0);
    assert_eq!(sup(&t.spatial), 0.0);
    let r = energy_conditions(&s, &x, 200, 1).unwrap();
    for v in &r.verdicts {
        assert_eq!(v.sampled_min, 0.0, "{:?}", v.condition);
        assert!(v.sampled_holds);
        assert_eq!(v.sufficient_holds, Some(true));
    }
    s.mu = Some(Expr::Num(2.5));
    let t = stress_energy(&s, &x).unwrap();
    assert_eq!(t.time, 2.5);
    assert_eq!(sup(&t.spatial), 0.0);
    s.mu = None;
    assert!(matches!(stress_energy(&s, &x), Err(Error::MissingField(_))));
}

/// T̂ and ĝ as full (m+1)×(m+1) matrices in the frame (e_0, e_i).
fn lorentz_matrices(fp: &FluidPoint) -> (Vec<f64>, Vec<f64>) {
    let m = fp.m;
    let k = m + 1;
    let d2: f64 = (0..m).map(|i| fp.pullback[i * m + i]).sum();
    let e = fp.mu + 0.5 * fp.alpha * d2 + fp.potential;
    let s = fp.p - 0.5 * fp.alpha * d2 - fp.potential;
    let mut t = vec![0.0; k * k];
    let mut g = vec![0.0; k * k];
    t[0] = e;
    g[0] = -1.0;
    for i in 0..m {
        g[(i + 1) * k + i + 1] = 1.0;
        for j in 0..m {
            t[(i + 1) * k + j + 1] = fp.alpha * fp.pullback[i * m + j] + if i == j { s } else { 0.0 };
        }
    }
    (t, g)
}

fn form(a: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let k = v.len();
    (0..k).map(|i| (0..k).map(|j| a[i * k + j] * v[i] * w[j]).sum::<f64>()).sum()
}

struct Oracle {
    t: Vec<f64>,
    g: Vec<f64>,
    gi: Vec<f64>,
    m: usize,
}

impl Oracle {
    fn new(fp: &FluidPoint) -> Oracle {
        let (t, g) = lorentz_matrices(fp);
        let gi = mat::inverse(&g, fp.m + 1).unwrap();
        Oracle { t, g, gi, m: fp.m }
    }

    fn vec(w: &[f64]) -> Vec<f64> {
        std::iter::once(1.0).chain(w.iter().copied()).collect()
    }

    fn t_ww(&self, w: &[f64]) -> f64 {
        let v = Oracle::vec(w);
        form(&self.t, &v, &v)
    }

    fn sec(&self, w: &[f64]) -> f64 {
        let k = self.m + 1;
        let tr: f64 = (0..k * k).map(|q| self.gi[q] * self.t[q]).sum();
        let v = Oracle::vec(w);
        form(&self.t, &v, &v) - tr / (self.m as f64 - 1.0) * form(&self.g, &v, &v)
    }

    fn flux_norm(&self, w: &[f64]) -> f64 {
        let k = self.m + 1;
        let v = Oracle::vec(w);
        let tw: Vec<f64> = (0..k).map(|a| (0..k).map(|b| self.t[a * k + b] * v[b]).sum()).collect();
        let j: Vec<f64> = (0..k).map(|a| -(0..k).map(|b| self.gi[a * k + b] * tw[b]).sum::<f64>()).collect();
        form(&self.g, &j, &j)
    }
}

fn random_point(r: &mut impl Rng, alpha_lo: f64) -> FluidPoint {
    let m = r.random_range(3..7);
    let n = 2;
    let dp: Vec<f64> = (0..n * m).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut pb = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            pb[i * m + j] = (0..n).map(|a| dp[a * m + i] * dp[a * m + j]).sum();
        }
    }
    FluidPoint {
        m,
        mu: r.random_range(-2.0..2.0),
        p: r.random_range(-2.0..2.0),
        potential: r.random_range(-2.0..2.0),
        alpha: r.random_range(alpha_lo..2.0),
        pullback: pb,
    }
}

#[test]
fn quadratic_forms_match_matrix_contraction() {
    let mut r = rng(6);
    let mut wr = rng(60);
    for _ in 0..300 {
        let fp = random_point(&mut r, -2.0);
        let o = Oracle::new(&fp);
        for _ in 0..10 {
            let w = sample_timelike(&mut wr, fp.m);
            assert!((fp.t_ww(&w) - o.t_ww(&w)).abs() < 1e-10);
            assert!((fp.t_ww_closed(&w) - o.t_ww(&w)).abs() < 1e-10);
            assert!((fp.sec_ww(&w) - o.sec(&w)).abs() < 1e-10);
            assert!((fp.sec_ww_closed(&w) - o.sec(&w)).abs() < 1e-10);
            assert!((fp.flux_norm(&w) - o.flux_norm(&w)).abs() < 1e-10);
            assert!((fp.flux_norm_closed(&w) - o.flux_norm(&w)).abs() < 1e-10);
        }
    }
}

#[test]
fn timelike_and_null_sampling() {
    let mut r = rng(7);
    for m in 2..6 {
        for _ in 0..200 {
            let w = sample_timelike(&mut r, m);
            let s: f64 = w.iter().map(|v| v * v).sum();
            assert!(s < 1.0 - TIMELIKE_MARGIN + 1e-15);
            let k = sample_null(&mut r, m);
            assert!((k.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn sufficiency_implies_sampled_conditions() {
    let mut r = rng(8);
    let mut counts = [0usize; 5];
    let mut draws = 0;
    while counts.iter().any(|&c| c < 200) {
        draws += 1;
        assert!(draws < 100_000, "sufficiency battery too rarely satisfied: {counts:?}");
        let fp = random_point(&mut r, 0.05);
        let rep = energy_conditions_at(&fp, 500, draws);
        let o = Oracle::new(&fp);
        let mut wr = rng(draws);
        for (k, c) in Condition::ALL.iter().enumerate() {
            if counts[k] >= 200 || !sufficient(&fp, *c).unwrap() {
                continue;
            }
            counts[k] += 1;
            let v = rep.get(*c);
            assert_eq!(v.sufficient_holds, Some(true));
            assert!(v.sampled_min >= -EPS, "{c:?}: {:e}", v.sampled_min);
            assert!(v.sampled_holds);
            // independent sampling with the matrix oracle
            for _ in 0..500 {
                let w = sample_timelike(&mut wr, fp.m);
                let val = match c {
                    Condition::Nec => o.t_ww(&sample_null(&mut wr, fp.m)),
                    Condition::Wec => o.t_ww(&w),
                    Condition::Sec => o.sec(&w),
                    Condition::Fec => -o.flux_norm(&w),
                    Condition::Dec => o.t_ww(&w).min(-o.flux_norm(&w)),
                };
                assert!(val >= -EPS, "{c:?} oracle {val:e}");
            }
        }
    }
}

const EPS: f64 = phistatic::tol::EPS_EC;

#[test]
fn dec_is_wec_and_fec() {
    let mut r = rng(9);
    for s in 0..200 {
        let fp = random_point(&mut r, -1.0);
        let rep = energy_conditions_at(&fp, 100, s);
        let (w, f, d) = (rep.get(Condition::Wec), rep.get(Condition::Fec), rep.get(Condition::Dec));
        assert_eq!(d.sampled_min, w.sampled_min.min(f.sampled_min));
        assert_eq!(d.sampled_holds, w.sampled_holds && f.sampled_holds);
    }
}

#[test]
fn necessary_inequalities() {
    let fp = FluidPoint { m: 3, mu: 1.0, p: -0.5, potential: 1.0, alpha: 1.0, pullback: vec![0.0; 9] };
    // (m−2)μ + mp = −0.5 < 2U
    assert_eq!(necessary_violated(&fp, Condition::Sec), Some(true));
    let rep = energy_conditions_at(&fp, 500, 3);
    assert!(!rep.get(Condition::Sec).sampled_holds);
    assert_eq!(necessary_violated(&fp, Condition::Nec), None);
    assert_eq!(necessary_violated(&fp, Condition::Fec), None);
    let neg = FluidPoint { mu: -3.0, ..fp.clone() };
    assert_eq!(necessary_violated(&neg, Condition::Wec), Some(true));
    assert_eq!(necessary_violated(&neg, Condition::Dec), Some(true));
    let ok = FluidPoint { mu: 2.0, p: 1.0, potential: 0.0, ..fp };
    assert_eq!(necessary_violated(&ok, Condition::Sec), Some(false));
}

#[test]
fn sufficiency_needs_positive_alpha() {
    let fp = FluidPoint { m: 3, mu: 1.0, p: 0.0, potential: 0.0, alpha: -1.0, pullback: vec![0.0; 9] };
    assert!(matches!(sufficient(&fp, Condition::Wec), Err(Error::AlphaNonPositive(_))));
    let rep = energy_conditions_at(&fp, 50, 1);
    assert!(rep.verdicts.iter().all(|v| v.sufficient_holds.is_none() && v.samples == 50));
    let s = example("costa");
    let x = &s.sample_points(1, 2)[0];
    let rep = energy_conditions(&s, x, 50, 1).unwrap();
    assert!(rep.verdicts.iter().all(|v| v.sufficient_holds.is_none()));
}

#[test]
fn energy_sampling_is_seeded() {
    let s = example("flat-fluid");
    let x = &s.sample_points(1, 3)[0];
    let a = energy_conditions(&s, x, 100, 42).unwrap();
    let b = energy_conditions(&s, x, 100, 42).unwrap();
    for (p, q) in a.verdicts.iter().zip(&b.verdicts) {
        assert_eq!(p.sampled_min, q.sampled_min);
    }
}

#[test]
fn psd_trace_bound_cases() {
    let (l, r) = psd_trace_bound(&[1.0, 0.0, 0.0, 1.0], &[3.0, 4.0]).unwrap();
    assert_eq!((l, r), (25.0, 50.0));
    let (l, r) = psd_trace_bound(&[1.0], &[2.0]).unwrap();
    assert_eq!(l, r);
    let (l, r) = psd_trace_bound(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0]).unwrap();
    assert_eq!((l, r), (0.0, 1.0));
    assert!(matches!(psd_trace_bound(&[1.0, 0.0, 0.0, -1.0], &[0.0, 1.0]), Err(Error::NotPsd(_))));
    let mut g = rng(10);
    for _ in 0..100 {
        let n = g.random_range(1..6);
        let k = g.random_range(1..4);
        let b: Vec<f64> = (0..n * k).map(|_| g.random_range(-1.0..1.0)).collect();
        let a: Vec<f64> =
            (0..n * n).map(|q| (0..k).map(|c| b[(q / n) * k + c] * b[(q % n) * k + c]).sum()).collect();
        let u: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
        let (l, r) = psd_trace_bound(&a, &u).unwrap();
        assert!(l <= r + 1e-12);
    }
}
