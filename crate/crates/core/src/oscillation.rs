//! Radial non-existence engine: the singular Cauchy problem
//! (v z')' + A v z = 0, z(0⁺) = z0, (v z')(0⁺) = 0, its first zero, critical
//! curves of growth bounds and the zero criteria built on them.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use ode_solvers::continuous_output_model::ContinuousOutputModel;
use ode_solvers::dop_shared::OutputType;
use ode_solvers::{Dopri5, System, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Scene;

/// Start of integration away from the singular origin.
pub const BOOTSTRAP_EPS: f64 = 1e-4;
pub const ODE_RTOL: f64 = 1e-10;
pub const ODE_ATOL: f64 = 1e-14;
/// Bisection width for zeros.
pub const ZERO_TOL: f64 = 1e-10;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Growth bound v ≤ h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GrowthBound {
    /// h = C r^θ.
    Power { c: f64, theta: f64 },
    /// h = Λ exp{a r^γ log^β r}.
    Expgamma { lambda: f64, a: f64, gamma: f64, beta: f64 },
}

/// Large-r behaviour v ~ t^v, A ~ t^a.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExponents {
    pub v: f64,
    pub a: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Declarative profiles, as used in scene files and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ProfileSpec {
    /// v = c t^θ, A = D² on [0, 1) and D²/t² beyond; bounded by h = c r^θ.
    Power {
        theta: f64,
        #[serde(rename = "D")]
        d: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        horizon: Option<f64>,
    },
    /// v = Λ tanh(t)^κ exp{a t^γ log^β max(t, 1)} and
    /// A = b (a²/4)(γ log t + β)² t^{2(γ−1)} log^{2(β−1)} t for t ≥ e,
    /// frozen at its value at e below; bounded by the matching h.
    Expgamma {
        lambda: f64,
        a: f64,
        gamma: f64,
        beta: f64,
        b: f64,
        #[serde(default = "two")]
        kappa: f64,
        #[serde(default)]
        horizon: Option<f64>,
    },
    /// Samples of v and A, linearly interpolated.
    Tabulated { t: Vec<f64>, v: Vec<f64>, a: Vec<f64> },
}

#[derive(Clone)]
pub struct RadialProfile {
    pub label: String,
    pub v: RadialFn,
    pub a: RadialFn,
    pub horizon: f64,
    /// Exponent of v ~ t^κ at the origin; fitted when absent.
    pub kappa: Option<f64>,
    pub bound: Option<GrowthBound>,
    pub tail: Option<TailExponents>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .field("kappa", &self.kappa)
            .field("bound", &self.bound)
            .field("tail", &self.tail)
            .finish()
    }
}

fn interp(t: &[f64], y: &[f64], x: f64) -> f64 {
    if x <= t[0] {
        return y[0];
    }
    let n = t.len();
    if x >= t[n - 1] {
        return y[n - 1];
    }
    let i = t.partition_point(|&s| s <= x) - 1;
    let w = (x - t[i]) / (t[i + 1] - t[i]);
    y[i] * (1.0 - w) + y[i + 1] * w
}

impl RadialProfile {
    pub fn new(
        label: impl Into<String>,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        horizon: f64,
    ) -> RadialProfile {
        RadialProfile { label: label.into(), v: Arc::new(v), a: Arc::new(a), horizon, kappa: None, bound: None, tail: None }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_bound(mut self, bound: GrowthBound) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_tail(mut self, tail: TailExponents) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn tabulated(label: impl Into<String>, t: Vec<f64>, v: Vec<f64>, a: Vec<f64>) -> Result<RadialProfile> {
        if t.len() < 2 || v.len() != t.len() || a.len() != t.len() {
            return Err(Error::Invalid("tabulated profile needs matching t, v, a of length ≥ 2".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t[0] < 0.0 {
            return Err(Error::Invalid("tabulated t must be increasing and nonnegative".into()));
        }
        let horizon = t[t.len() - 1];
        let (tv, vv) = (t.clone(), v);
        let (ta, av) = (t, a);
        Ok(RadialProfile::new(label, move |x| interp(&tv, &vv, x), move |x| interp(&ta, &av, x), horizon))
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<RadialProfile> {
        match *spec {
            ProfileSpec::Power { theta, d, c, horizon } => {
                if !(c > 0.0) || !theta.is_finite() || theta < 0.0 {
                    return Err(Error::Invalid("power profile needs c > 0 and θ ≥ 0".into()));
                }
                let d2 = d * d;
                let p = RadialProfile::new(
                    format!("power(theta={theta}, D={d})"),
                    move |t| c * t.powf(theta),
                    move |t| if t < 1.0 { d2 } else { d2 / (t * t) },
                    horizon.unwrap_or(1e6),
                )
                .with_kappa(theta)
                .with_bound(GrowthBound::Power { c, theta })
                .with_tail(TailExponents { v: theta, a: -2.0 });
                Ok(p)
            }
            ProfileSpec::Expgamma { lambda, a, gamma, beta, b, kappa, horizon } => {
                if !(lambda > 0.0 && a > 0.0 && gamma >= 0.0 && beta >= 0.0 && gamma + beta > 0.0) {
                    return Err(Error::Invalid("expgamma profile needs Λ, a > 0, γ, β ≥ 0 and γ + β > 0".into()));
                }
                let chi_t = move |t: f64| {
                    let l = t.ln();
                    0.25 * a * a * (gamma * l + beta).powi(2) * t.powf(2.0 * (gamma - 1.0)) * l.powf(2.0 * (beta - 1.0))
                };
                let e = std::f64::consts::E;
                let a_e = b * chi_t(e);
                let p = RadialProfile::new(
                    format!("expgamma(a={a}, gamma={gamma}, beta={beta}, b={b})"),
                    move |t| lambda * t.tanh().powf(kappa) * (a * t.powf(gamma) * t.max(1.0).ln().powf(beta)).exp(),
                    move |t| if t < e { a_e } else { b * chi_t(t) },
                    horizon.unwrap_or(60.0),
                )
                .with_kappa(kappa)
                .with_bound(GrowthBound::Expgamma { lambda, a, gamma, beta });
                Ok(p)
            }
            ProfileSpec::Tabulated { ref t, ref v, ref a } => RadialProfile::tabulated("tabulated", t.clone(), v.clone(), a.clone()),
        }
    }
}

impl GrowthBound {
    pub fn from_spec(spec: &ProfileSpec) -> Result<GrowthBound> {
        match *spec {
            ProfileSpec::Power { theta, c, .. } => Ok(GrowthBound::Power { c, theta }),
            ProfileSpec::Expgamma { lambda, a, gamma, beta, .. } => Ok(GrowthBound::Expgamma { lambda, a, gamma, beta }),
            ProfileSpec::Tabulated { .. } => Err(Error::UnsupportedFamily("tabulated growth bound".into())),
        }
    }

    pub fn h(&self, r: f64) -> f64 {
        match *self {
            GrowthBound::Power { c, theta } => c * r.powf(theta),
            GrowthBound::Expgamma { lambda, a, gamma, beta } => lambda * (phi_exp(a, gamma, beta, r)).exp(),
        }
    }

    fn tail_integrable(&self) -> bool {
        match *self {
            GrowthBound::Power { theta, .. } => theta > 1.0,
            GrowthBound::Expgamma { a, gamma, beta, .. } => {
                a > 0.0 && (gamma > 0.0 || beta > 1.0 || (beta == 1.0 && a > 1.0))
            }
        }
    }
}

/// Exponent a r^γ log^β r of the expgamma family (log clipped at 0 below 1).
fn phi_exp(a: f64, gamma: f64, beta: f64, r: f64) -> f64 {
    if beta == 0.0 {
        a * r.powf(gamma)
    } else {
        a * r.powf(gamma) * r.max(1.0).ln().powf(beta)
    }
}

fn dphi_exp(a: f64, gamma: f64, beta: f64, r: f64) -> f64 {
    if beta == 0.0 {
        return a * gamma * r.powf(gamma - 1.0);
    }
    let l = r.ln();
    a * r.powf(gamma - 1.0) * l.powf(beta - 1.0) * (gamma * l + beta)
}

fn gl(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).unwrap()).as_node_weight_pairs().to_vec()
}

fn gl_interval(rule: &[(f64, f64)], a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// h(r) ∫_r^∞ ds/h(s), by a panel march in the decay scale of 1/h.
fn h_times_tail(bound: &GrowthBound, r: f64) -> Result<f64> {
    if !bound.tail_integrable() {
        return Err(Error::TailDivergent);
    }
    match *bound {
        GrowthBound::Power { theta, .. } => Ok(r / (theta - 1.0)),
        GrowthBound::Expgamma { a, gamma, beta, .. } => {
            if gamma == 1.0 && beta == 0.0 {
                return Ok(1.0 / a);
            }
            if beta > 0.0 && r <= 1.0 {
                return Err(Error::Invalid("expgamma bounds with β > 0 need r > 1".into()));
            }
            let rule = gl(16);
            let p0 = phi_exp(a, gamma, beta, r);
            let f = |s: f64| (p0 - phi_exp(a, gamma, beta, s)).exp();
            let d = dphi_exp(a, gamma, beta, r);
            let mut w = if d > 0.0 { (1.0 / d).min(r) } else { r };
            let mut lo = r;
            let mut acc = 0.0;
            for _ in 0..400 {
                let part = gl_interval(&rule, lo, lo + w, f);
                acc += part;
                lo += w;
                if part <= 1e-17 * acc {
                    return Ok(acc);
                }
                w *= 1.5;
            }
            Err(Error::NoConvergence(format!("tail integral of 1/h from r = {r}")))
        }
    }
}

/// ln ∫_r^∞ ds/h(s).
pub fn log_tail(bound: &GrowthBound, r: f64) -> Result<f64> {
    Ok(h_times_tail(bound, r)?.ln() - bound.h(r).ln())
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalCurve {
    pub r: f64,
    /// {2h(r)∫_r^∞ 1/h}⁻².
    pub chi: f64,
    /// (h'/2h)².
    pub chi_tilde: f64,
}

pub fn critical_curve(bound: &GrowthBound, r: f64) -> Result<CriticalCurve> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("critical curve at r = {r}")));
    }
    let chi_tilde = match *bound {
        GrowthBound::Power { theta, .. } => (theta / (2.0 * r)).powi(2),
        GrowthBound::Expgamma { a, gamma, beta, .. } => (0.5 * dphi_exp(a, gamma, beta, r)).powi(2),
    };
    let chi = match *bound {
        GrowthBound::Power { theta, .. } if theta > 1.0 => ((theta - 1.0) / (2.0 * r)).powi(2),
        _ => (2.0 * h_times_tail(bound, r)?).powi(-2),
    };
    Ok(CriticalCurve { r, chi, chi_tilde })
}

// ----- Cauchy problem -----

#[derive(Clone, Debug, Serialize)]
pub struct ZeroReport {
    pub first_zero: Option<f64>,
    pub zeros: Vec<f64>,
    /// |z| at the located first zero.
    pub z_at_zero: Option<f64>,
    pub min_gap: Option<f64>,
    pub kappa: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub steps: usize,
    /// (t, z, v z') on an even grid.
    pub samples: Vec<[f64; 3]>,
}

struct Cauchy {
    v: RadialFn,
    a: RadialFn,
}

impl System<f64, Vector2<f64>> for Cauchy {
    fn system(&self, t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let v = (self.v)(t);
        dy[0] = y[1] / v;
        dy[1] = -(self.a)(t) * v * y[0];
    }
}

/// Slope of ln v against ln t on [ε, 10ε].
pub fn fit_kappa(v: &dyn Fn(f64) -> f64, eps: f64) -> Result<f64> {
    let n = 8;
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let t = eps * 10f64.powf(i as f64 / (n - 1) as f64);
        let vt = v(t);
        if !(vt > 0.0 && vt.is_finite()) {
            return Err(Error::ProfileSingular(format!("v({t:e}) = {vt:e}")));
        }
        pts.push((t.ln(), vt.ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

pub fn solve_cauchy(profile: &RadialProfile, z0: f64, t_end: f64) -> Result<ZeroReport> {
    if !(z0 > 0.0) {
        return Err(Error::Invalid(format!("z0 must be positive (got {z0})")));
    }
    let eps = BOOTSTRAP_EPS;
    if !(t_end > 2.0 * eps) {
        return Err(Error::Invalid(format!("horizon {t_end} too short")));
    }
    // 1/v must stay bounded on the domain
    for i in 0..=2000 {
        let t = eps + (t_end - eps) * i as f64 / 2000.0;
        let v = (profile.v)(t);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::ProfileSingular(format!("v({t}) = {v:e}")));
        }
    }
    let kappa = match profile.kappa {
        Some(k) => k,
        None => fit_kappa(profile.v.as_ref(), eps)?,
    };
    let a0 = {
        let a = (profile.a)(0.0);
        if a.is_finite() { a } else { (profile.a)(eps) }
    };
    let c1 = -a0 / (2.0 * (kappa + 1.0));
    let c2 = a0 * a0 / (8.0 * (kappa + 1.0) * (kappa + 3.0));
    let z = z0 * (1.0 + c1 * eps * eps + c2 * eps.powi(4));
    let w = (profile.v)(eps) * z0 * (2.0 * c1 * eps + 4.0 * c2 * eps.powi(3));
    let sys = Cauchy { v: profile.v.clone(), a: profile.a.clone() };
    let y0 = Vector2::new(z, w);
    let mut solver = Dopri5::from_param(sys, eps, t_end, t_end, y0, ODE_RTOL, ODE_ATOL, 0.9, 0.04, 0.2, 10.0, t_end, 0.1 * eps, 1_000_000, 1000, OutputType::Sparse);
    let mut model = ContinuousOutputModel::default();
    let stats = solver
        .integrate_with_continuous_output_model(&mut model)
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    let zt = |t: f64| model.evaluate(t).map(|y| y[0]).unwrap_or(f64::NAN);
    // sign changes between accepted steps
    let (xs, ys) = (solver.x_out(), solver.y_out());
    let mut brackets = Vec::new();
    for i in 1..xs.len() {
        let (a, b) = (ys[i - 1][0], ys[i][0]);
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            brackets.push((xs[i - 1], xs[i]));
        }
    }
    let mut zeros = Vec::new();
    for &(lo0, hi0) in &brackets {
        let (mut lo, mut hi) = (lo0, hi0);
        let s_lo = zt(lo).signum();
        while hi - lo > ZERO_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let zm = zt(mid);
            if zm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if zm.signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    let first_zero = zeros.first().copied();
    let z_at_zero = first_zero.map(|t| zt(t).abs());
    let min_gap = zeros.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    let mut samples: Vec<[f64; 3]> = (0..200)
        .map(|i| {
            let t = eps + (t_end - eps) * i as f64 / 200.0;
            let y = model.evaluate(t).unwrap_or(Vector2::new(f64::NAN, f64::NAN));
            [t, y[0], y[1]]
        })
        .collect();
    if let (Some(&t), Some(y)) = (xs.last(), ys.last()) {
        samples.push([t, y[0], y[1]]);
    }
    Ok(ZeroReport {
        first_zero,
        zeros,
        z_at_zero,
        min_gap,
        kappa,
        epsilon: eps,
        horizon: t_end,
        steps: stats.accepted_steps as usize,
        samples,
    })
}

// ----- criteria -----

#[derive(Clone, Debug, Serialize)]
pub struct CriterionVerdict {
    pub id: &'static str,
    pub name: &'static str,
    pub applicable: bool,
    pub satisfied: bool,
    /// (R, r) for the condition for zeros; (R, D), (R, b) or the tail
    /// exponents for the others.
    pub witness: Option<[f64; 2]>,
    pub note: String,
}

impl CriterionVerdict {
    fn na(id: &'static str, name: &'static str, note: impl Into<String>) -> Self {
        CriterionVerdict { id, name, applicable: false, satisfied: false, witness: None, note: note.into() }
    }
}

struct Lattice {
    t: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
    /// ∫_0^{t_i} A v.
    av: Vec<f64>,
}

impl Lattice {
    fn new(p: &RadialProfile, n: usize) -> Lattice {
        let t_lo = p.horizon * 1e-4;
        let t: Vec<f64> = (0..n).map(|i| t_lo * (p.horizon / t_lo).powf(i as f64 / (n - 1) as f64)).collect();
        let v: Vec<f64> = t.iter().map(|&s| (p.v)(s)).collect();
        let a: Vec<f64> = t.iter().map(|&s| (p.a)(s)).collect();
        let rule = gl(6);
        let f = |s: f64| (p.a)(s) * (p.v)(s);
        let mut av = Vec::with_capacity(n);
        let mut acc = gl_interval(&rule, 0.0, t[0], f);
        av.push(acc);
        for w in t.windows(2) {
            acc += gl_interval(&rule, w[0], w[1], f);
            av.push(acc);
        }
        Lattice { t, v, a, av }
    }

    /// Lattice indices of 16 log-spaced R values in [T/1000, T/2].
    fn r_indices(&self) -> Vec<usize> {
        let n = self.t.len();
        let big_t = self.t[n - 1];
        let mut out: Vec<usize> = (0..16)
            .map(|i| {
                let r = big_t * 1e-3 * 500f64.powf(i as f64 / 15.0);
                self.t.partition_point(|&s| s < r).min(n - 2)
            })
            .collect();
        out.dedup();
        out
    }
}

const LATTICE: usize = 400;

fn criterion_a(p: &RadialProfile, lat: &Lattice, bound: &GrowthBound) -> Result<CriterionVerdict> {
    let (id, name) = ("a", "condition for zeros");
    if lat.a.iter().any(|&a| a < -1e-12) {
        return Ok(CriterionVerdict::na(id, name, "A takes negative values"));
    }
    if lat.a.iter().all(|&a| a <= 0.0) {
        return Ok(CriterionVerdict { applicable: true, ..CriterionVerdict::na(id, name, "A vanishes identically") });
    }
    if lat.t.iter().zip(&lat.v).any(|(&t, &v)| v > bound.h(t) * (1.0 + 1e-9)) {
        return Ok(CriterionVerdict::na(id, name, "v exceeds the growth bound"));
    }
    if !bound.tail_integrable() {
        return Ok(CriterionVerdict {
            id,
            name,
            applicable: true,
            satisfied: true,
            witness: None,
            note: "1/h is not integrable at infinity".into(),
        });
    }
    let rule = gl(6);
    let chi = |s: f64| critical_curve(bound, s).map(|c| c.chi.sqrt());
    for ri in lat.r_indices() {
        let big_r = lat.t[ri];
        if matches!(bound, GrowthBound::Expgamma { beta, .. } if *beta > 0.0) && big_r <= 1.0 {
            continue;
        }
        if lat.av[ri] <= 0.0 {
            continue;
        }
        let rhs = -0.5 * (lat.av[ri].ln() + log_tail(bound, big_r)?);
        let mut lhs = 0.0;
        for j in ri..lat.t.len() - 1 {
            let (s0, s1) = (lat.t[j], lat.t[j + 1]);
            let mut err = None;
            lhs += gl_interval(&rule, s0, s1, |s| {
                let c = chi(s).unwrap_or_else(|e| {
                    err = Some(e);
                    0.0
                });
                (p.a)(s).max(0.0).sqrt() - c
            });
            if let Some(e) = err {
                return Err(e);
            }
            if lhs > rhs {
                return Ok(CriterionVerdict {
                    id,
                    name,
                    applicable: true,
                    satisfied: true,
                    witness: Some([big_r, s1]),
                    note: format!("lhs {lhs:.6e} > rhs {rhs:.6e}"),
                });
            }
        }
    }
    Ok(CriterionVerdict { applicable: true, ..CriterionVerdict::na(id, name, "no witnessing (R, r) on the lattice") })
}

fn criterion_b(lat: &Lattice, bound: &GrowthBound) -> CriterionVerdict {
    let (id, name) = ("b", "polynomial growth");
    let GrowthBound::Power { theta, .. } = *bound else {
        return CriterionVerdict::na(id, name, "needs a power-law bound");
    };
    if theta <= 1.0 {
        return CriterionVerdict::na(id, name, "needs θ > 1");
    }
    if lat.a.iter().any(|&a| a < -1e-12) {
        return CriterionVerdict::na(id, name, "A takes negative values");
    }
    if lat.t.iter().zip(&lat.v).any(|(&t, &v)| v > bound.h(t) * (1.0 + 1e-9)) {
        return CriterionVerdict::na(id, name, "v exceeds the growth bound");
    }
    let need = 0.5 * (theta - 1.0);
    let mut best: Option<[f64; 2]> = None;
    for ri in lat.r_indices() {
        let d = (ri..lat.t.len()).map(|j| lat.t[j] * lat.a[j].max(0.0).sqrt()).fold(f64::INFINITY, f64::min);
        if d > need && best.is_none() {
            best = Some([lat.t[ri], d]);
        }
    }
    match best {
        Some(w) => CriterionVerdict {
            id,
            name,
            applicable: true,
            satisfied: true,
            witness: Some(w),
            note: format!("D = {:.6} > (θ−1)/2 = {need:.6}", w[1]),
        },
        None => CriterionVerdict { applicable: true, ..CriterionVerdict::na(id, name, format!("no D > {need:.6} on the lattice")) },
    }
}

fn criterion_c(lat: &Lattice, bound: &GrowthBound) -> CriterionVerdict {
    let (id, name) = ("c", "superexponential growth");
    let GrowthBound::Expgamma { a, gamma, beta, .. } = *bound else {
        return CriterionVerdict::na(id, name, "needs an expgamma bound");
    };
    if lat.a.iter().any(|&x| x < -1e-12) {
        return CriterionVerdict::na(id, name, "A takes negative values");
    }
    if lat.t.iter().zip(&lat.v).any(|(&t, &v)| v > bound.h(t) * (1.0 + 1e-9)) {
        return CriterionVerdict::na(id, name, "v exceeds the growth bound");
    }
    let chi_t = |r: f64| (0.5 * dphi_exp(a, gamma, beta, r)).powi(2);
    for ri in lat.r_indices() {
        if lat.t[ri] <= 1.0 {
            continue;
        }
        let b = (ri..lat.t.len()).map(|j| lat.a[j] / chi_t(lat.t[j])).fold(f64::INFINITY, f64::min);
        if b > 1.0 {
            return CriterionVerdict {
                id,
                name,
                applicable: true,
                satisfied: true,
                witness: Some([lat.t[ri], b]),
                note: format!("b = {b:.6} > 1"),
            };
        }
    }
    CriterionVerdict { applicable: true, ..CriterionVerdict::na(id, name, "no r0 with b > 1 on the lattice") }
}

fn regression(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_d(p: &RadialProfile, lat: &Lattice) -> CriterionVerdict {
    let (id, name) = ("d", "integral divergence");
    let (exps, note) = match p.tail {
        Some(t) => (t, "declared tail exponents"),
        None => {
            let n = lat.t.len();
            let from = lat.t.partition_point(|&t| t < p.horizon / 10.0).min(n - 2);
            let idx: Vec<usize> = (from..n).collect();
            if idx.iter().any(|&i| !(lat.a[i] > 0.0) || !(lat.v[i] > 0.0)) {
                return CriterionVerdict {
                    applicable: true,
                    ..CriterionVerdict::na(id, name, "A is not positive on the last decade of the horizon")
                };
            }
            let lt: Vec<f64> = idx.iter().map(|&i| lat.t[i].ln()).collect();
            let lv: Vec<f64> = idx.iter().map(|&i| lat.v[i].ln()).collect();
            let la: Vec<f64> = idx.iter().map(|&i| lat.a[i].ln()).collect();
            (TailExponents { v: regression(&lt, &lv), a: regression(&lt, &la) }, "exponents fitted on the last decade")
        }
    };
    let tail_pos = lat.a.last().is_some_and(|&a| a > 0.0);
    // tolerance absorbs the regression of exact power laws
    let sat = tail_pos && exps.v <= 1.0 + 1e-6 && exps.v + exps.a >= -1.0 - 1e-6;
    CriterionVerdict {
        id,
        name,
        applicable: true,
        satisfied: sat,
        witness: Some([exps.v, exps.a]),
        note: note.into(),
    }
}

/// Criteria (a)–(d) for a profile; `bound` defaults to the profile's own.
pub fn zero_criteria(profile: &RadialProfile, bound: Option<&GrowthBound>) -> Result<Vec<CriterionVerdict>> {
    let lat = Lattice::new(profile, LATTICE);
    let bound = bound.or(profile.bound.as_ref());
    let mut out = Vec::with_capacity(4);
    match bound {
        Some(b) => {
            out.push(criterion_a(profile, &lat, b)?);
            out.push(criterion_b(&lat, b));
            out.push(criterion_c(&lat, b));
        }
        None => {
            out.push(CriterionVerdict::na("a", "condition for zeros", "no growth bound"));
            out.push(CriterionVerdict::na("b", "polynomial growth", "no growth bound"));
            out.push(CriterionVerdict::na("c", "superexponential growth", "no growth bound"));
        }
    }
    out.push(criterion_d(profile, &lat));
    Ok(out)
}

// ----- scenes -----

/// (2U(φ) − m p − (m−2) μ)/(m − 1) at a point.
pub fn radial_coefficient(scene: &Scene, x: &[f64]) -> Result<f64> {
    let m = scene.dim() as f64;
    let mu = scene.mu.as_ref().ok_or_else(|| Error::MissingField("mu".into()))?.eval_f64(x);
    let p = scene.p.as_ref().ok_or_else(|| Error::MissingField("p".into()))?.eval_f64(x);
    let u = match (&scene.potential, &scene.map) {
        (None, _) => 0.0,
        (Some(pot), Some(map)) => {
            let y: Vec<f64> = map.components.iter().map(|c| c.eval_f64(x)).collect();
            pot.eval_f64(&y)
        }
        (Some(pot), None) => pot.eval_f64(&[]),
    };
    Ok((2.0 * u - m * p - (m - 2.0) * mu) / (m - 1.0))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RadialSampler {
    /// Center of Euclidean spheres; the box midpoint by default.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub radii: Option<usize>,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// A declared profile, used instead of sampling the scene.
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub bound: Option<ProfileSpec>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonexistenceReport {
    pub mode: String,
    pub horizon: f64,
    pub coefficient_min: f64,
    pub coefficient_max: f64,
    pub zero: ZeroReport,
    pub criteria: Vec<CriterionVerdict>,
    /// A first zero was certified inside the horizon.
    pub no_positive_solution: bool,
}

fn unit_sphere_area(m: usize) -> f64 {
    // |S^{m−1}| = 2π^{m/2}/Γ(m/2)
    let mut g = if m % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if m % 2 == 0 { 1.0 } else { 0.5 };
    while x < 0.5 * m as f64 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(0.5 * m as f64) / g
}

fn is_flat(scene: &Scene) -> bool {
    let m = scene.dim();
    scene.sample_points(8, 0).iter().all(|x| {
        let g = scene.metric_at(x);
        (0..m * m).all(|k| (g[k] - f64::from(k % (m + 1) == 0)).abs() < 1e-12)
    }) && scene.metric.iter().all(|e| e.is_const())
}

fn is_polar(scene: &Scene) -> bool {
    let m = scene.dim();
    scene.chart.coords.first().is_some_and(|c| c == "r")
        && scene.chart.lo[0] == 0.0
        && scene.sample_points(8, 0).iter().all(|x| {
            let g = scene.metric_at(x);
            (g[0] - 1.0).abs() < 1e-12 && (1..m).all(|j| g[j].abs() < 1e-12 && g[j * m].abs() < 1e-12)
        })
}

/// Radial profile of a scene around a pole (geodesic polar chart) or a
/// point of a flat chart.
pub fn scene_profile(scene: &Scene, cfg: &RadialSampler) -> Result<(RadialProfile, String, f64, f64)> {
    let m = scene.dim();
    let nr = cfg.radii.unwrap_or(64).max(8);
    if is_polar(scene) {
        let (_, hi) = scene.sample_box();
        let horizon = cfg.horizon.unwrap_or(hi[0]);
        if !(horizon > 0.0 && horizon < scene.chart.hi[0]) {
            return Err(Error::SamplerFailure(format!("horizon {horizon} outside the radial chart range")));
        }
        let angular: Vec<Vec<(f64, f64)>> = (1..m)
            .map(|i| {
                let (lo, hi) = (scene.chart.lo[i], scene.chart.hi[i]);
                if i == m - 1 {
                    let n = 24;
                    let h = (hi - lo) / n as f64;
                    (0..n).map(|k| (lo + (k as f64 + 0.5) * h, h)).collect()
                } else {
                    let (c, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    gl(12).into_iter().map(|(x, w)| (c + hw * x, hw * w)).collect()
                }
            })
            .collect();
        let mut nodes = vec![(Vec::new(), 1.0)];
        for ax in &angular {
            nodes = nodes
                .iter()
                .flat_map(|(p, w)| {
                    ax.iter().map(move |&(t, v)| {
                        let mut q = p.clone();
                        q.push(t);
                        (q, w * v)
                    })
                })
                .collect();
        }
        let sc = scene.clone();
        let nodes = Arc::new(nodes);
        let nv = nodes.clone();
        let area = move |r: f64| -> f64 {
            nv.iter()
                .map(|(ang, w)| {
                    let mut x = vec![r];
                    x.extend_from_slice(ang);
                    w * crate::tensor::mat::det_spd(&sc.metric_at(&x), m).max(0.0).sqrt()
                })
                .sum()
        };
        let mut ts = Vec::with_capacity(nr + 1);
        let mut av = Vec::with_capacity(nr + 1);
        let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=nr {
            let r = horizon * i as f64 / nr as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for (ang, w) in nodes.iter() {
                let mut x = vec![r.max(1e-9)];
                x.extend_from_slice(ang);
                let c = radial_coefficient(scene, &x)?;
                cmin = cmin.min(c);
                cmax = cmax.max(c);
                // uniform angular weight at r → 0, area weight beyond
                let wt = w * crate::tensor::mat::det_spd(&scene.metric_at(&x), m).max(0.0).sqrt() / r.max(1e-9).powi(m as i32 - 1);
                num += wt * c;
                den += wt;
            }
            if !(den > 0.0) {
                return Err(Error::SamplerFailure(format!("degenerate geodesic sphere at r = {r}")));
            }
            ts.push(r);
            av.push(num / den);
        }
        let a_tab = move |x: f64| interp(&ts, &av, x);
        let p = RadialProfile::new(format!("{}: polar spheres", scene.name), area, a_tab, horizon);
        return Ok((p, "polar".into(), cmin, cmax));
    }
    if is_flat(scene) {
        let (lo, hi) = (&scene.chart.lo, &scene.chart.hi);
        let center = cfg.center.clone().unwrap_or_else(|| lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect());
        if center.len() != m || !scene.chart.contains(&center) {
            return Err(Error::SamplerFailure("center outside the chart".into()));
        }
        let reach = (0..m).map(|i| (center[i] - lo[i]).min(hi[i] - center[i])).fold(f64::INFINITY, f64::min);
        let horizon = cfg.horizon.unwrap_or(0.95 * reach);
        if !(horizon > 0.0 && horizon < reach) {
            return Err(Error::SamplerFailure(format!("horizon {horizon} leaves the chart (reach {reach})")));
        }
        let nd = cfg.directions.unwrap_or(64).max(4);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let dirs: Vec<Vec<f64>> = (0..nd)
            .map(|_| {
                let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.into_iter().map(|a| a / n).collect()
            })
            .collect();
        let mut ts = Vec::with_capacity(nr + 1);
        let mut av = Vec::with_capacity(nr + 1);
        let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=nr {
            let r = horizon * i as f64 / nr as f64;
            let mut acc = 0.0;
            for d in &dirs {
                let x: Vec<f64> = center.iter().zip(d).map(|(c, u)| c + r * u).collect();
                let c = radial_coefficient(scene, &x)?;
                cmin = cmin.min(c);
                cmax = cmax.max(c);
                acc += c;
            }
            ts.push(r);
            av.push(acc / nd as f64);
        }
        let omega = unit_sphere_area(m);
        let a_tab = move |x: f64| interp(&ts, &av, x);
        let p = RadialProfile::new(format!("{}: euclidean spheres", scene.name), move |r| omega * r.powi(m as i32 - 1), a_tab, horizon)
            .with_kappa(m as f64 - 1.0);
        return Ok((p, "euclidean".into(), cmin, cmax));
    }
    Err(Error::SamplerFailure(format!(
        "scene '{}' is neither a geodesic polar chart nor flat; declare a profile",
        scene.name
    )))
}

pub fn nonexistence_verdict(scene: &Scene, cfg: &RadialSampler) -> Result<NonexistenceReport> {
    let (profile, mode, cmin, cmax) = match &cfg.profile {
        Some(spec) => {
            let mut p = RadialProfile::from_spec(spec)?;
            if let Some(h) = cfg.horizon {
                p.horizon = h;
            }
            (p, "declared".to_string(), f64::NAN, f64::NAN)
        }
        None => scene_profile(scene, cfg)?,
    };
    let bound = cfg.bound.as_ref().map(GrowthBound::from_spec).transpose()?;
    let zero = solve_cauchy(&profile, 1.0, profile.horizon)?;
    let criteria = zero_criteria(&profile, bound.as_ref())?;
    let fires = zero.first_zero.is_some_and(|t| t < profile.horizon);
    Ok(NonexistenceReport {
        mode,
        horizon: profile.horizon,
        coefficient_min: cmin,
        coefficient_max: cmax,
        zero,
        criteria,
        no_positive_solution: fires,
    })
}
