//! Built-in parametrized example scenes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scene::{Chart, Claim, Closure, MapSpec, Scene, TensorSpec, WarpedProfile};

#[derive(Clone, Debug, Serialize)]
pub struct ExampleInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: Vec<(&'static str, f64)>,
}

/// All catalog entries with their default parameters.
pub fn examples_catalog() -> Vec<ExampleInfo> {
    vec![
        ExampleInfo { name: "flat", summary: "Euclidean space in Cartesian coordinates", params: vec![("m", 3.0)] },
        ExampleInfo {
            name: "round-sphere",
            summary: "unit sphere in geodesic polar coordinates with u = 1.5 + cos r",
            params: vec![("m", 3.0)],
        },
        ExampleInfo {
            name: "hemisphere",
            summary: "upper hemisphere with u = cos r solving the static fluid system",
            params: vec![("m", 3.0)],
        },
        ExampleInfo {
            name: "costa",
            summary: "product of a hemisphere and a round sphere with the projection map",
            params: vec![("n", 2.0), ("q", 2.0), ("rho", 1.0)],
        },
        ExampleInfo {
            name: "gaussian-soliton",
            summary: "flat space with f = λ|x|²/2, a steady gradient soliton",
            params: vec![("lambda", 0.5), ("m", 3.0)],
        },
        ExampleInfo {
            name: "warped-profile",
            summary: "warped product dr² + ρ(r)² g_sphere with radial f",
            params: vec![("m", 3.0), ("eta", 1.0)],
        },
        ExampleInfo {
            name: "codazzi-sphere",
            summary: "unit 3-sphere with the Codazzi tensor Hess w + w g",
            params: vec![("c", 0.4)],
        },
        ExampleInfo {
            name: "conformal-sphere",
            summary: "round sphere with a nonconstant conformal factor",
            params: vec![("m", 3.0), ("eps", 0.2)],
        },
        ExampleInfo {
            name: "random",
            summary: "perturbed metric with a map into a curved target, potential and fields",
            params: vec![("m", 4.0), ("n", 2.0), ("seed", 7.0)],
        },
        ExampleInfo {
            name: "flat-fluid",
            summary: "flat box with a line-valued map; exact solution with nonzero Cotton tensor",
            params: vec![("m", 4.0), ("alpha", -1.0)],
        },
        ExampleInfo {
            name: "flat-torus",
            summary: "flat periodic box with A = g and a positive u",
            params: vec![("m", 3.0)],
        },
    ]
}

/// Names of the entries that every catalog-wide check runs on.
pub fn catalog_names() -> Vec<&'static str> {
    examples_catalog().into_iter().map(|e| e.name).collect()
}

/// Build a catalog scene; missing parameters take their defaults.
pub fn build_example(name: &str, params: &BTreeMap<String, f64>) -> Result<Scene> {
    let info = examples_catalog()
        .into_iter()
        .find(|e| e.name == name || (name == "hemisphere-spfst" && e.name == "hemisphere") || (name == "costa-product" && e.name == "costa"))
        .ok_or_else(|| Error::Invalid(format!("unknown example '{name}'")))?;
    for k in params.keys() {
        if !info.params.iter().any(|(p, _)| p == k) {
            return Err(Error::Invalid(format!("example '{}' has no parameter '{k}'", info.name)));
        }
    }
    let get = |k: &str| params.get(k).copied().unwrap_or_else(|| info.params.iter().find(|(p, _)| *p == k).unwrap().1);
    let int = |k: &str, min: usize| -> Result<usize> {
        let v = get(k);
        if v.fract() != 0.0 || v < min as f64 {
            return Err(Error::Invalid(format!("parameter {k} must be an integer ≥ {min}")));
        }
        Ok(v as usize)
    };
    match info.name {
        "flat" => flat(int("m", 2)?),
        "round-sphere" => round_sphere(int("m", 2)?),
        "hemisphere" => hemisphere(int("m", 2)?),
        "costa" => costa(int("n", 1)?, int("q", 1)?, get("rho")),
        "gaussian-soliton" => gaussian_soliton(get("lambda"), int("m", 2)?),
        "warped-profile" => warped_profile(int("m", 3)?, "sin(r)", "-log(cos(r))", get("eta")),
        "codazzi-sphere" => codazzi_sphere(get("c")),
        "conformal-sphere" => conformal_sphere(int("m", 2)?, get("eps")),
        "flat-fluid" => flat_fluid(int("m", 3)?, get("alpha")),
        "flat-torus" => flat_torus(int("m", 1)?),
        "random" => random_scene(int("m", 2)?, int("n", 0)?, get("seed") as u64),
        _ => unreachable!(),
    }
}

fn p(src: &str, vars: &[String]) -> Expr {
    Expr::parse(src, vars).unwrap_or_else(|e| panic!("catalog expression '{src}': {e}"))
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Diagonal of the round metric on S^k in polar angles a1..ak, scaled by `pre`.
fn sphere_diag(angles: &[String], pre: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(angles.len());
    let mut acc = pre.to_string();
    for a in angles {
        out.push(acc.clone());
        acc = format!("{acc}*sin({a})^2");
    }
    out
}

fn angle_box(k: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = vec![0.0; k];
    let mut hi = vec![PI; k];
    if let Some(last) = hi.last_mut() {
        *last = 2.0 * PI;
    }
    (lo, hi)
}

fn diag_scene(name: &str, coords: Vec<String>, lo: Vec<f64>, hi: Vec<f64>, diag: &[String]) -> Result<Scene> {
    let chart = Chart::new(coords.clone(), lo, hi)?;
    let d = diag.iter().map(|s| p(s, &coords)).collect();
    Scene::diagonal(name, chart, d)
}

pub fn flat(m: usize) -> Result<Scene> {
    let coords = names("x", m);
    let diag = vec!["1".to_string(); m];
    diag_scene("flat", coords, vec![-1.0; m], vec![1.0; m], &diag)
}

/// Geodesic polar chart (r, t1, …) on the unit S^m with r ∈ (0, r_max).
fn polar_sphere(name: &str, m: usize, r_max: f64) -> Result<Scene> {
    let angles = names("t", m - 1);
    let mut coords = vec!["r".to_string()];
    coords.extend(angles.iter().cloned());
    let mut diag = vec!["1".to_string()];
    diag.extend(sphere_diag(&angles, "sin(r)^2"));
    let (alo, ahi) = angle_box(m - 1);
    let mut lo = vec![0.0];
    lo.extend(alo);
    let mut hi = vec![r_max];
    hi.extend(ahi);
    diag_scene(name, coords, lo, hi, &diag)
}

pub fn round_sphere(m: usize) -> Result<Scene> {
    let mut s = polar_sphere("round-sphere", m, PI)?;
    s.u = Some(p("1.5 + cos(r)", &s.chart.coords));
    s.lambda = Some(Expr::Num(1.5 * (m as f64 - 1.0)));
    s.closure = Some(Closure::Sphere);
    s.tensor = Some(TensorSpec::ShiftedSchouten);
    // the conformal gradient field ∇cos r
    s.aux.insert("X1".into(), p("-sin(r)", &s.chart.coords));
    for i in 2..=m {
        s.aux.insert(format!("X{i}"), Expr::Num(0.0));
    }
    Ok(s)
}

pub fn hemisphere(m: usize) -> Result<Scene> {
    let mut s = polar_sphere("hemisphere", m, PI / 2.0)?;
    let mf = m as f64;
    let mu = 0.5 * mf * (mf - 1.0);
    s.u = Some(p("cos(r)", &s.chart.coords));
    s.mu = Some(Expr::Num(mu));
    s.p = Some(Expr::Num(-mu));
    s.lambda = Some(Expr::Num(mf));
    s.eta = 1.0;
    s.claims = vec![Claim::FluidSystem, Claim::EtaSystem];
    Ok(s)
}

/// S^{n+1}_+ × S^q with metric g_{S^{n+1}} + ρ g_{S^q}, u = cos r and φ the
/// projection onto (S^q, ρ g_{S^q}); the coupling is α = (q−1)/ρ − (n+1).
pub fn costa(n: usize, q: usize, rho: f64) -> Result<Scene> {
    if !(rho > 0.0) {
        return Err(Error::Invalid("rho must be positive".into()));
    }
    let m = n + 1 + q;
    let t = names("t", n);
    let s_ = names("s", q);
    let mut coords = vec!["r".to_string()];
    coords.extend(t.iter().cloned());
    coords.extend(s_.iter().cloned());
    let mut diag = vec!["1".to_string()];
    diag.extend(sphere_diag(&t, "sin(r)^2"));
    diag.extend(sphere_diag(&s_, &format!("{rho:?}")));
    let (tlo, thi) = angle_box(n);
    let (slo, shi) = angle_box(q);
    let mut lo = vec![0.0];
    lo.extend(tlo);
    lo.extend(slo);
    let mut hi = vec![PI / 2.0];
    hi.extend(thi);
    hi.extend(shi);
    let mut sc = diag_scene("costa", coords.clone(), lo, hi, &diag)?;
    let y = names("y", q);
    let comps = s_.iter().map(|c| p(c, &coords)).collect();
    let hd = sphere_diag(&y, &format!("{rho:?}"));
    let mut h = vec![Expr::Num(0.0); q * q];
    for (i, d) in hd.iter().enumerate() {
        h[i * q + i] = p(d, &y);
    }
    sc.set_map(MapSpec::new(comps, y, h)?);
    sc.set_potential(Expr::Num(0.0));
    let alpha = (q as f64 - 1.0) / rho - (n as f64 + 1.0);
    let sphi = (m as f64 - 1.0) * (n as f64 + 1.0);
    sc.alpha = alpha;
    sc.eta = 1.0;
    sc.u = Some(p("cos(r)", &coords));
    sc.mu = Some(Expr::Num(sphi / 2.0));
    sc.p = Some(Expr::Num(-sphi / 2.0));
    sc.lambda = Some(Expr::Num(n as f64 + 1.0));
    sc.claims = vec![Claim::FluidSystem, Claim::EtaSystem];
    // level-set test function: w solving Δw − wΔu/u = −1 on the first factor
    sc.aux.insert("w".into(), p(&format!("-1/{:?} + 0.3*sin(r)*cos(t1) + 0.2*cos(r)", n as f64 + 1.0), &coords));
    Ok(sc)
}

pub fn gaussian_soliton(lambda: f64, m: usize) -> Result<Scene> {
    let mut s = flat(m)?;
    s.name = "gaussian-soliton".into();
    let sq: Vec<String> = s.chart.coords.iter().map(|c| format!("{c}^2")).collect();
    s.f = Some(p(&format!("{:?}*({})", lambda / 2.0, sq.join("+")), &s.chart.coords));
    s.lambda = Some(Expr::Num(lambda));
    s.eta = 0.0;
    s.potential = Some(Expr::Num(0.0));
    s.claims = vec![Claim::EtaSystem];
    Ok(s)
}

/// dr² + ρ(r)² g_{S^{m−1}} with radial f.
pub fn warped_profile(m: usize, rho: &str, f: &str, eta: f64) -> Result<Scene> {
    let angles = names("t", m - 1);
    let mut coords = vec!["r".to_string()];
    coords.extend(angles.iter().cloned());
    let mut diag = vec!["1".to_string()];
    diag.extend(sphere_diag(&angles, &format!("({rho})^2")));
    let (alo, ahi) = angle_box(m - 1);
    let mut lo = vec![0.0];
    lo.extend(alo);
    let mut hi = vec![PI / 2.0];
    hi.extend(ahi);
    let mut s = diag_scene("warped-profile", coords.clone(), lo, hi, &diag)?;
    let r = vec!["r".to_string()];
    s.f = Some(p(f, &coords));
    s.eta = eta;
    s.profile = Some(WarpedProfile {
        rho: p(rho, &r),
        f: p(f, &r),
        fiber_scalar: (m as f64 - 1.0) * (m as f64 - 2.0),
    });
    Ok(s)
}

/// Unit S³ with A = Hess w + w g for a nonlinear w in the embedding coordinates.
pub fn codazzi_sphere(c: f64) -> Result<Scene> {
    let mut s = polar_sphere("codazzi-sphere", 3, PI)?;
    let x0 = "cos(r)";
    let x1 = "sin(r)*cos(t1)";
    let x2 = "sin(r)*sin(t1)*cos(t2)";
    let x3 = "sin(r)*sin(t1)*sin(t2)";
    let w = format!("{c:?}*({x0})^2 + 0.3*({x1})*({x2}) + 0.25*({x3}) + 0.1*({x0})*({x3})");
    s.tensor = Some(TensorSpec::HessPlus(p(&w, &s.chart.coords)));
    s.u = Some(p(&format!("2 + 0.5*({x1}) + 0.3*({x2})*({x3}) + 0.2*({x0})^2"), &s.chart.coords));
    s.closure = Some(Closure::Sphere);
    Ok(s)
}

/// e^{2ψ} g_{S^m} with ψ = ε·x₀·(1 + x₁/2) in embedding coordinates; comes
/// with a map to the round S² and a potential.
pub fn conformal_sphere(m: usize, eps: f64) -> Result<Scene> {
    let round = polar_sphere("conformal-sphere", m, PI)?;
    let coords = round.chart.coords.clone();
    let psi = format!("{eps:?}*cos(r)*(1 + 0.5*sin(r)*cos(t1))");
    let fac = p(&format!("exp(2*{psi})"), &coords);
    let mut s = round.clone();
    s.metric = round.metric.iter().map(|e| fac.clone() * e.clone()).collect();
    let y = names("y", 2);
    let comps = vec![p("r", &coords), p("t1 + 0.3*sin(r)", &coords)];
    let h = vec![p("1", &y), Expr::Num(0.0), Expr::Num(0.0), p("sin(y1)^2 + 0.5", &y)];
    s.set_map(MapSpec::new(comps, y.clone(), h)?);
    s.set_potential(p("0.3*cos(y1) + 0.1*sin(y2)", &y));
    s.alpha = 0.7;
    s.u = Some(p("2 + cos(r)", &coords));
    s.sample_lo = Some(vec![0.3; m]);
    let mut hi = vec![PI - 0.3; m];
    if let Some(l) = hi.last_mut() {
        *l = 2.0 * PI - 0.3;
    }
    s.sample_hi = Some(hi);
    Ok(s)
}

/// Random smooth scene on the box (−1, 1)^m: perturbed metric, a map into an
/// n-dimensional curved target (none for n = 0), potential, u and f.
pub fn random_scene(m: usize, n: usize, seed: u64) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = names("x", m);
    let mut c = || -> f64 { rng.random::<f64>() - 0.5 };
    let mut g = vec![Expr::Num(0.0); m * m];
    for i in 0..m {
        for j in i..m {
            let (a, b, k) = (c(), c(), (i + j) % m);
            let base = if i == j { "1 + " } else { "" };
            let src = format!(
                "{base}0.12*({a:?})*sin({:?}*{} + {:?}) + 0.1*({b:?})*{}*{}",
                1.0 + c(),
                coords[k],
                c(),
                coords[i],
                coords[(j + 1) % m]
            );
            g[i * m + j] = p(&src, &coords);
            g[j * m + i] = g[i * m + j].clone();
        }
    }
    let chart = Chart::new(coords.clone(), vec![-1.0; m], vec![1.0; m])?;
    let mut s = Scene::new("random", chart, g)?;
    if n > 0 {
        let y = names("y", n);
        let comps = (0..n)
            .map(|a| {
                let src = format!(
                    "{:?}*sin({} + {:?}*{}) + {:?}*{}*{} + {:?}*{}",
                    0.5 + 0.3 * c(),
                    coords[a % m],
                    1.0 + c(),
                    coords[(a + 1) % m],
                    c(),
                    coords[(a + 2) % m],
                    coords[a % m],
                    c(),
                    coords[(a + 3) % m]
                );
                p(&src, &coords)
            })
            .collect();
        let mut h = vec![Expr::Num(0.0); n * n];
        for a in 0..n {
            for b in a..n {
                let src = if a == b {
                    format!("1 + 0.2*{}^2 + {:?}*sin({})", y[a], 0.1 * c(), y[(a + 1) % n])
                } else {
                    format!("{:?}*{}*{}", 0.2 * c(), y[a], y[b])
                };
                h[a * n + b] = p(&src, &y);
                h[b * n + a] = h[a * n + b].clone();
            }
        }
        let terms: Vec<String> = (0..n).map(|a| format!("{:?}*sin({:?}*{})", c(), 1.0 + c(), y[a])).collect();
        let pot = format!("{} + {:?}*{}*{}", terms.join(" + "), 0.3 * c(), y[0], y[n - 1]);
        s.set_map(MapSpec::new(comps, y.clone(), h)?);
        s.set_potential(p(&pot, &y));
    }
    s.alpha = 0.8 + c();
    s.eta = 0.5 + c();
    let fu = format!("{:?}*sin({} + {:?}*{}) + {:?}*{}^2", 0.5 * c(), coords[0], c(), coords[1 % m], 0.3 * c(), coords[m - 1]);
    s.f = Some(p(&fu, &coords));
    s.u = Some(p(&format!("exp(-({fu}))"), &coords));
    s.mu = Some(p(&format!("1 + {:?}*{}", c(), coords[0]), &coords));
    s.p = Some(p(&format!("{:?}*{}*{}", c(), coords[0], coords[1 % m]), &coords));
    s.aux.insert("w".into(), p(&format!("{:?}*{} + {:?}*{}*{}", c(), coords[1 % m], c(), coords[0], coords[0]), &coords));
    for i in 0..m {
        for j in i + 1..m {
            let src = format!("{:?}*sin({} + {:?}*{}) + {:?}*{}^2", c(), coords[i], 1.0 + c(), coords[j], c(), coords[(i + j) % m]);
            s.aux.insert(format!("omega_{}_{}", i + 1, j + 1), p(&src, &coords));
        }
    }
    s.sample_lo = Some(vec![-0.7; m]);
    s.sample_hi = Some(vec![0.7; m]);
    Ok(s)
}

/// Flat (−1, 1)^m with φ = x1 into a line with metric h(y) = (1 + y²)/(−α),
/// U(y) = −(y² + y⁴/4), f = −x1²/2, η = 1, λ = 0 and u = e^{x1²/2}; an exact
/// solution of both field systems with nonzero Cotton and Weyl tensors.
pub fn flat_fluid(m: usize, alpha: f64) -> Result<Scene> {
    if !(alpha < 0.0) {
        return Err(Error::Invalid("flat-fluid needs alpha < 0".into()));
    }
    let mut s = flat(m)?;
    s.name = "flat-fluid".into();
    let x = s.chart.coords.clone();
    let y = names("y", 1);
    s.set_map(MapSpec::new(vec![p("x1", &x)], y.clone(), vec![p(&format!("(1 + y1^2)/{:?}", -alpha), &y)])?);
    s.set_potential(p("-(y1^2 + y1^4/4)", &y));
    s.alpha = alpha;
    s.eta = 1.0;
    s.f = Some(p("-x1^2/2", &x));
    s.u = Some(p("exp(x1^2/2)", &x));
    s.lambda = Some(Expr::Num(0.0));
    // S^φ = 1 + x1², p = S^φ/2 + U(φ), μ = S^φ/2 − U(φ)
    s.p = Some(p("(1 + x1^2)/2 - (x1^2 + x1^4/4)", &x));
    s.mu = Some(p("(1 + x1^2)/2 + (x1^2 + x1^4/4)", &x));
    let last = &x[m - 1];
    s.aux.insert("w".into(), p(&format!("0.3*sin({last}) + 0.2*x1*{}", x[1 % m]), &x));
    // special conformal field 2⟨b,x⟩x − |x|²b with b = (0.3, −0.2, 0, …)
    let bx = format!("(0.3*x1 - 0.2*{})", x[1 % m]);
    let r2 = x.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + ");
    for (i, c) in x.iter().enumerate() {
        let b = match i {
            0 => 0.3,
            1 => -0.2,
            _ => 0.0,
        };
        s.aux.insert(format!("X{}", i + 1), p(&format!("2*{bx}*{c} - ({r2})*{b:?} + 0.1*{c}"), &x));
    }
    s.claims = vec![Claim::FluidSystem, Claim::EtaSystem];
    s.sample_lo = Some(vec![-0.8; m]);
    s.sample_hi = Some(vec![0.8; m]);
    Ok(s)
}

/// Flat (0, 2π)^m with periodic closure, A = g and u = 2 + sin x1 cos x2.
pub fn flat_torus(m: usize) -> Result<Scene> {
    let coords = names("x", m);
    let diag = vec!["1".to_string(); m];
    let mut s = diag_scene("flat-torus", coords.clone(), vec![0.0; m], vec![2.0 * PI; m], &diag)?;
    let u = if m >= 2 { "2 + sin(x1)*cos(x2)" } else { "2 + sin(x1)" };
    s.u = Some(p(u, &coords));
    s.closure = Some(Closure::Torus);
    s.tensor = Some(TensorSpec::Metric(1.0));
    Ok(s)
}
