//! Static Lorentzian lift ĝ = −u²dt² + g, its stress-energy tensor and
//! energy conditions.
//!
//! Lifted tensors use the frame e_0 = u⁻¹∂_t plus the orthonormal frame of g,
//! so ĝ = diag(−1, 1, …, 1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::Geo;
use crate::scene::{Chart, Scene};
use crate::tol::EPS_EC;

/// Radius margin keeping sampled vectors strictly timelike.
pub const TIMELIKE_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct LorentzLift {
    pub m: usize,
    /// R̂ic on spatial frame pairs, Ric − Hess u/u, row-major.
    pub ricci_spatial: Vec<f64>,
    /// R̂ic(e_0, e_0) = Δu/u.
    pub ricci_time: f64,
    /// R̂ic(e_0, e_i); vanishes for static metrics.
    pub ricci_mixed: Vec<f64>,
    pub scalar: f64,
    /// τ(φ̂) = τ(φ) + dφ(∇u)/u in target coordinates.
    pub tension: Vec<f64>,
}

pub fn lift_static(scene: &Scene, x: &[f64]) -> Result<LorentzLift> {
    let geo = Geo::new(scene, x, 2)?;
    lift_at(&geo)
}

pub fn lift_at(geo: &Geo) -> Result<LorentzLift> {
    let m = geo.m;
    let u = geo.require_u()?.value();
    let hu = geo.hess_u()?.values();
    let ric = geo.ric().values();
    let lap: f64 = (0..m).map(|i| hu[i * m + i]).sum();
    let ricci_spatial: Vec<f64> = ric.iter().zip(&hu).map(|(r, h)| r - h / u).collect();
    let ricci_time = lap / u;
    let tr: f64 = (0..m).map(|i| ricci_spatial[i * m + i]).sum();
    let tension = if geo.n > 0 {
        let gu = geo.grad(geo.require_u()?).values();
        let d = geo.dphi();
        let tau = geo.tau();
        let fr: Vec<f64> = (0..geo.n)
            .map(|a| tau.val_t(a, &[]) + (0..m).map(|i| d.val_t(a, &[i]) * gu[i]).sum::<f64>() / u)
            .collect();
        geo.target_vector_coords(&fr)
    } else {
        Vec::new()
    };
    Ok(LorentzLift { m, ricci_spatial, ricci_time, ricci_mixed: vec![0.0; m], scalar: tr - ricci_time, tension })
}

/// The Riemannian companion g + u²dt² as an (m+1)-dimensional scene in
/// coordinates (x, t); its Ricci tensor agrees with the Lorentzian lift on
/// spatial pairs and has the opposite sign on (∂_t, ∂_t).
pub fn riemannian_companion(scene: &Scene) -> Result<Scene> {
    let m = scene.dim();
    let u = scene.u.clone().ok_or_else(|| Error::MissingField("u".into()))?;
    let mut coords = scene.chart.coords.clone();
    coords.push("t".into());
    let mut lo = scene.chart.lo.clone();
    let mut hi = scene.chart.hi.clone();
    lo.push(-1.0);
    hi.push(1.0);
    let mut g = vec![Expr::Num(0.0); (m + 1) * (m + 1)];
    for i in 0..m {
        for j in 0..m {
            g[i * (m + 1) + j] = scene.metric[i * m + j].clone();
        }
    }
    g[(m + 1) * (m + 1) - 1] = u.clone() * u;
    Scene::new(format!("{}-companion", scene.name), Chart::new(coords, lo, hi)?, g)
}

/// Pointwise fluid data entering the stress-energy tensor.
#[derive(Clone, Debug, Serialize)]
pub struct FluidPoint {
    pub m: usize,
    pub mu: f64,
    pub p: f64,
    /// U(φ).
    pub potential: f64,
    pub alpha: f64,
    /// φ*h in the orthonormal frame, row-major m×m.
    pub pullback: Vec<f64>,
}

impl FluidPoint {
    pub fn from_geo(geo: &Geo) -> Result<FluidPoint> {
        Ok(FluidPoint {
            m: geo.m,
            mu: geo.named("mu")?.value(),
            p: geo.named("p")?.value(),
            potential: geo.upot().value(),
            alpha: geo.alpha(),
            pullback: geo.pull().values(),
        })
    }

    pub fn dphi2(&self) -> f64 {
        (0..self.m).map(|i| self.pullback[i * self.m + i]).sum()
    }

    /// Energy density μ + α|dφ|²/2 + U.
    pub fn energy(&self) -> f64 {
        self.mu + 0.5 * self.alpha * self.dphi2() + self.potential
    }

    /// Isotropic stress p − α|dφ|²/2 − U.
    pub fn stress(&self) -> f64 {
        self.p - 0.5 * self.alpha * self.dphi2() - self.potential
    }

    fn pull_apply(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|j| self.pullback[i * m + j] * w[j]).sum()).collect()
    }

    fn pull_form(&self, w: &[f64]) -> f64 {
        self.pull_apply(w).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Split components of T̂: (T̂_00, spatial block).
    pub fn tensor(&self) -> (f64, Vec<f64>) {
        let m = self.m;
        let s = self.stress();
        let mut sp: Vec<f64> = self.pullback.iter().map(|v| self.alpha * v).collect();
        for i in 0..m {
            sp[i * m + i] += s;
        }
        (self.energy(), sp)
    }

    pub fn trace(&self) -> f64 {
        let mf = self.m as f64;
        -self.mu + mf * self.p - 0.5 * self.alpha * (mf - 1.0) * self.dphi2() - (mf + 1.0) * self.potential
    }

    /// T̂(w, w) for w = e_0 + Σ w^i e_i, by direct contraction.
    pub fn t_ww(&self, w: &[f64]) -> f64 {
        let (t00, sp) = self.tensor();
        let m = self.m;
        let mut v = t00;
        for i in 0..m {
            for j in 0..m {
                v += sp[i * m + j] * w[i] * w[j];
            }
        }
        v
    }

    /// (T̂ − tr T̂ ĝ/(m−1))(w, w), by direct contraction.
    pub fn sec_ww(&self, w: &[f64]) -> f64 {
        let s: f64 = w.iter().map(|v| v * v).sum();
        self.t_ww(w) - self.trace() / (self.m as f64 - 1.0) * (s - 1.0)
    }

    /// Flux J_w = −T̂(w, ·)^♯ as (J^0, J^i).
    pub fn flux(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (t00, sp) = self.tensor();
        let m = self.m;
        let ji = (0..m).map(|i| -(0..m).map(|j| sp[i * m + j] * w[j]).sum::<f64>()).collect();
        (t00, ji)
    }

    /// ĝ(J_w, J_w).
    pub fn flux_norm(&self, w: &[f64]) -> f64 {
        let (j0, ji) = self.flux(w);
        -j0 * j0 + ji.iter().map(|v| v * v).sum::<f64>()
    }

    /// Closed expression of T̂(w, w) in s = Σ(w^i)².
    pub fn t_ww_closed(&self, w: &[f64]) -> f64 {
        let s: f64 = w.iter().map(|v| v * v).sum();
        (1.0 - s) * self.energy() + s * (self.mu + self.p) + self.alpha * self.pull_form(w)
    }

    pub fn sec_ww_closed(&self, w: &[f64]) -> f64 {
        let s: f64 = w.iter().map(|v| v * v).sum();
        let mf = self.m as f64;
        let c = ((mf - 2.0) * self.mu + mf * self.p - 2.0 * self.potential) / (mf - 1.0);
        (1.0 - s) * c + s * (self.mu + self.p) + self.alpha * self.pull_form(w)
    }

    pub fn flux_norm_closed(&self, w: &[f64]) -> f64 {
        let s: f64 = w.iter().map(|v| v * v).sum();
        let (e, p) = (self.energy(), self.stress());
        let pw = self.pull_apply(w);
        let quad: f64 = pw.iter().map(|v| v * v).sum();
        -(1.0 - s) * e * e + s * (p * p - e * e) + self.alpha * self.alpha * quad
            + 2.0 * self.alpha * p * self.pull_form(w)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StressEnergy {
    /// T̂(e_0, e_0).
    pub time: f64,
    /// Spatial block, row-major.
    pub spatial: Vec<f64>,
    pub mixed: Vec<f64>,
}

pub fn stress_energy(scene: &Scene, x: &[f64]) -> Result<StressEnergy> {
    let geo = Geo::new(scene, x, 1)?;
    let fp = FluidPoint::from_geo(&geo)?;
    let (time, spatial) = fp.tensor();
    Ok(StressEnergy { time, spatial, mixed: vec![0.0; fp.m] })
}

#[derive(Clone, Debug, Serialize)]
pub struct EinsteinResidual {
    pub time: f64,
    pub spatial: Vec<f64>,
    pub sup: f64,
}

/// R̂ic − (Ŝ/2)ĝ − T̂ in the lifted frame.
pub fn einstein_residual(scene: &Scene, x: &[f64]) -> Result<EinsteinResidual> {
    let geo = Geo::new(scene, x, 2)?;
    let lift = lift_at(&geo)?;
    let fp = FluidPoint::from_geo(&geo)?;
    let (t00, ts) = fp.tensor();
    let m = geo.m;
    // ĝ_00 = −1
    let time = lift.ricci_time + 0.5 * lift.scalar - t00;
    let mut spatial: Vec<f64> = lift.ricci_spatial.iter().zip(&ts).map(|(r, t)| r - t).collect();
    for i in 0..m {
        spatial[i * m + i] -= 0.5 * lift.scalar;
    }
    let sup = spatial.iter().fold(time.abs(), |a, v| a.max(v.abs()));
    Ok(EinsteinResidual { time, spatial, sup })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    Nec,
    Wec,
    Sec,
    Fec,
    Dec,
}

impl Condition {
    pub const ALL: [Condition; 5] = [Condition::Nec, Condition::Wec, Condition::Sec, Condition::Fec, Condition::Dec];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Nec => "NEC",
            Condition::Wec => "WEC",
            Condition::Sec => "SEC",
            Condition::Fec => "FEC",
            Condition::Dec => "DEC",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyVerdict {
    pub condition: Condition,
    /// Sufficient inequalities; `None` when α ≤ 0 (not applicable).
    pub sufficient_holds: Option<bool>,
    /// Violation of a known necessary inequality; `None` when no necessary
    /// inequality is known.
    pub necessary_violated: Option<bool>,
    pub sampled_min: f64,
    pub samples: usize,
    /// sampled_min ≥ −εec.
    pub sampled_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub seed: u64,
    pub verdicts: Vec<EnergyVerdict>,
}

impl EnergyReport {
    pub fn get(&self, c: Condition) -> &EnergyVerdict {
        self.verdicts.iter().find(|v| v.condition == c).unwrap()
    }
}

/// Sufficient inequalities for each condition (α > 0 required).
pub fn sufficient(fp: &FluidPoint, c: Condition) -> Result<bool> {
    if !(fp.alpha > 0.0) {
        return Err(Error::AlphaNonPositive(fp.alpha));
    }
    let mf = fp.m as f64;
    let (mu, p, u) = (fp.mu, fp.p, fp.potential);
    let e = fp.energy();
    Ok(match c {
        Condition::Nec => p + mu >= 0.0,
        Condition::Wec => p + mu >= 0.0 && e >= 0.0,
        Condition::Sec => p + mu >= 0.0 && (mf - 2.0) * mu + mf * p >= 2.0 * u,
        Condition::Fec => u >= p && e * e >= fp.stress().powi(2),
        Condition::Dec => u >= p && mu + p >= 0.0 && e >= 0.0,
    })
}

/// Known necessary inequalities, violated beyond εec; `None` where none is known.
pub fn necessary_violated(fp: &FluidPoint, c: Condition) -> Option<bool> {
    let mf = fp.m as f64;
    match c {
        Condition::Wec | Condition::Dec => Some(fp.energy() < -EPS_EC),
        Condition::Sec => Some((mf - 2.0) * fp.mu + mf * fp.p - 2.0 * fp.potential < -EPS_EC),
        Condition::Nec | Condition::Fec => None,
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Spatial parts w^i of timelike vectors, uniform on Σ(w^i)² < 1 − δ.
pub fn sample_timelike(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let dir = unit_direction(rng, m);
    let r = ((1.0 - TIMELIKE_MARGIN) * rng.random::<f64>().powf(2.0 / m as f64)).sqrt();
    dir.into_iter().map(|a| a * r).collect()
}

/// Spatial parts of null vectors, uniform on the unit sphere.
pub fn sample_null(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    unit_direction(rng, m)
}

pub fn energy_conditions_at(fp: &FluidPoint, samples: usize, seed: u64) -> EnergyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = fp.m;
    let (mut nec, mut wec, mut sec, mut fec) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..samples {
        let k = sample_null(&mut rng, m);
        nec = nec.min(fp.t_ww(&k));
        let w = sample_timelike(&mut rng, m);
        wec = wec.min(fp.t_ww(&w));
        sec = sec.min(fp.sec_ww(&w));
        fec = fec.min(-fp.flux_norm(&w));
    }
    let dec = wec.min(fec);
    let verdicts = Condition::ALL
        .iter()
        .zip([nec, wec, sec, fec, dec])
        .map(|(&c, v)| EnergyVerdict {
            condition: c,
            sufficient_holds: sufficient(fp, c).ok(),
            necessary_violated: necessary_violated(fp, c),
            sampled_min: v,
            samples,
            sampled_holds: v >= -EPS_EC,
        })
        .collect();
    EnergyReport { seed, verdicts }
}

pub fn energy_conditions(scene: &Scene, x: &[f64], samples: usize, seed: u64) -> Result<EnergyReport> {
    let geo = Geo::new(scene, x, 1)?;
    Ok(energy_conditions_at(&FluidPoint::from_geo(&geo)?, samples, seed))
}

/// Both sides of ⟨Au, u⟩ ≤ (tr A)⟨u, u⟩ for a symmetric PSD matrix A.
pub fn psd_trace_bound(a: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    let n = u.len();
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{} entries for a {n}-vector", a.len())));
    }
    let mat = nalgebra::DMatrix::from_row_slice(n, n, a);
    if (&mat - mat.transpose()).amax() > 1e-12 * (1.0 + mat.amax()) {
        return Err(Error::Invalid("matrix is not symmetric".into()));
    }
    let low = mat.clone().symmetric_eigen().eigenvalues.min();
    if low < -1e-10 {
        return Err(Error::NotPsd(low));
    }
    let v = nalgebra::DVector::from_column_slice(u);
    Ok(((&mat * &v).dot(&v), mat.trace() * v.dot(&v)))
}
