//! Field equations of static φ-fluids, their integrability conditions,
//! level-set geometry, the warped-split ODE, and the divergence-identity
//! suite.
//!
//! Residual tensors are reported in the orthonormal Cholesky frame, so sup
//! norms do not depend on the coordinate scaling.

use serde::{Deserialize, Serialize};

use crate::curvature::{dbar, require_dim};
use crate::error::{Error, Result};
use crate::geometry::{indices, Geo};
use crate::jet::Jet;
use crate::scene::Scene;
use crate::tensor::Field;
use crate::tol::EPS_REG;

/// Default absolute tolerance for numerically checked hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// The static fluid system in u, μ, p, U.
    Fluid,
    /// Ric^φ + Hess f − η df⊗df = λg with the tension equation.
    Eta,
}

impl SystemKind {
    pub fn parse(s: &str) -> Option<SystemKind> {
        match s {
            "fluid" => Some(SystemKind::Fluid),
            "eta" | "eta_system" => Some(SystemKind::Eta),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationResidual {
    pub label: String,
    pub sup: f64,
    /// Frame components (base slots, then the target slot outermost).
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemResidual {
    pub system: SystemKind,
    pub equations: Vec<EquationResidual>,
}

impl SystemResidual {
    pub fn sup(&self) -> f64 {
        self.equations.iter().map(|e| e.sup).fold(0.0, f64::max)
    }

    pub fn get(&self, label: &str) -> Option<&EquationResidual> {
        self.equations.iter().find(|e| e.label == label)
    }
}

fn residual(label: &str, f: &Field) -> EquationResidual {
    EquationResidual { label: label.into(), sup: f.sup_norm(), values: f.values() }
}

// ----- small frame helpers -----

fn dot(geo: &Geo, a: &Field, b: &Field) -> Jet {
    geo.sum((0..geo.m).map(|i| a.at(&[i]) * b.at(&[i])))
}

fn sq(geo: &Geo, t: &Field) -> Jet {
    geo.sum(t.d.iter().map(|j| j.sqr()))
}

fn sval(f: &Field) -> &Jet {
    f.at(&[])
}

/// (dφ(v))^α.
fn dphi_of(geo: &Geo, v: &Field) -> Vec<Jet> {
    let d = geo.dphi();
    (0..geo.n).map(|a| geo.sum((0..geo.m).map(|i| d.at_t(a, &[i]) * v.at(&[i])))).collect()
}

fn ugrad_vec(geo: &Geo) -> Vec<Jet> {
    let g = geo.ugrad();
    (0..geo.n).map(|a| g.at_t(a, &[]).clone()).collect()
}

fn tdot(geo: &Geo, a: &[Jet], b: &[Jet]) -> Jet {
    geo.sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Σ_ab Hess U_ab v^a w^b.
fn uhess_apply(geo: &Geo, v: &[Jet], w: &[Jet]) -> Jet {
    let n = geo.n;
    let mut s = geo.zero();
    for a in 0..n {
        for b in 0..n {
            s += geo.uhess_at(a, b) * &v[a] * &w[b];
        }
    }
    s
}

/// λ from the scene, or from the trace of the η-equation.
pub fn lambda_jet(geo: &Geo) -> Result<Jet> {
    if geo.scene.lambda.is_some() {
        return geo.named("lambda");
    }
    let f = geo.require_f()?;
    let df = geo.grad(f);
    let m = geo.m as f64;
    Ok((geo.sphi() + geo.lap(f) - dot(geo, &df, &df) * geo.scene.eta) * (1.0 / m))
}

// ----- systems -----

/// Fluid equations i)–v) and the conservation law u∇μ = ∇[u(μ+p)].
pub fn fluid_equations(geo: &Geo) -> Result<Vec<(&'static str, Field)>> {
    let m = geo.m;
    let mf = m as f64;
    let u = geo.require_u()?.clone();
    let mu = geo.named("mu")?;
    let p = geo.named("p")?;
    let uu = geo.upot().clone();
    let sphi = geo.sphi();
    let rp = geo.ricphi();
    let hu = geo.hess_u()?;
    let c = (&sphi * 0.5 - &p + &uu) * (1.0 / (mf - 1.0));
    let e1 = Field::build(m, 2, |x| {
        let mut r = rp.at(x).clone();
        if x[0] == x[1] {
            r -= &c;
        }
        hu.at(x) - &u * r
    });
    let lap = geo.trace(hu);
    let e2 = lap - (&u * (1.0 / (mf - 1.0))) * (&p * mf - &uu * mf + &sphi * ((mf - 2.0) / 2.0));
    let gu = geo.grad(&u);
    let du = dphi_of(geo, &gu);
    let tau = geo.tau();
    let ug = ugrad_vec(geo);
    let al = geo.alpha();
    let e3 = Field::build_t(m, geo.n, 0, |a, _| &u * tau.at_t(a, &[]) + &du[a] - &u * &ug[a] * (1.0 / al));
    let e4 = &mu + &uu - &sphi * 0.5;
    let gp = geo.grad(&p);
    let e5 = Field::build(m, 1, |i| (&mu + &p) * gu.at(i) + &u * gp.at(i));
    let gmu = geo.grad(&mu);
    let gw = geo.grad(&(&u * (&mu + &p)));
    let cons = Field::build(m, 1, |i| &u * gmu.at(i) - gw.at(i));
    Ok(vec![
        ("i", e1),
        ("ii", Field::scalar(e2, m)),
        ("iii", e3),
        ("iv", Field::scalar(e4, m)),
        ("v", e5),
        ("conservation", cons),
    ])
}

/// η-equation i) and the tension equation ii).
pub fn eta_equations(geo: &Geo) -> Result<Vec<(&'static str, Field)>> {
    let m = geo.m;
    let f = geo.require_f()?;
    let eta = geo.scene.eta;
    let lam = lambda_jet(geo)?;
    let rp = geo.ricphi();
    let hf = geo.hess_f()?;
    let df = geo.grad(f);
    let e1 = Field::build(m, 2, |x| {
        let mut r = rp.at(x) + hf.at(x) - df.at(&[x[0]]) * df.at(&[x[1]]) * eta;
        if x[0] == x[1] {
            r -= &lam;
        }
        r
    });
    let dfv = dphi_of(geo, &df);
    let ug = ugrad_vec(geo);
    let al = geo.alpha();
    let tau = geo.tau();
    let e2 = Field::build_t(m, geo.n, 0, |a, _| tau.at_t(a, &[]) - &dfv[a] - &ug[a] * (1.0 / al));
    Ok(vec![("i", e1), ("ii", e2)])
}

pub fn system_residual(scene: &Scene, x: &[f64], which: SystemKind) -> Result<SystemResidual> {
    let geo = Geo::new(scene, x, 2)?;
    system_residual_at(&geo, which)
}

pub fn system_residual_at(geo: &Geo, which: SystemKind) -> Result<SystemResidual> {
    let eqs = match which {
        SystemKind::Fluid => fluid_equations(geo)?,
        SystemKind::Eta => eta_equations(geo)?,
    };
    Ok(SystemResidual { system: which, equations: eqs.iter().map(|(l, f)| residual(l, f)).collect() })
}

// ----- integrability -----

#[derive(Clone, Debug, Serialize)]
pub struct Integrability {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub first_sup: f64,
    pub second_sup: f64,
}

/// First integrability defect [1+η(m−2)]D̄ − C − W(∇f,·,·,·) − (U^a/(m−1))(φ^a_jδ_ik − φ^a_kδ_ij).
pub fn first_integrability(geo: &Geo) -> Result<Field> {
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let f = geo.require_f()?;
    let eta = geo.scene.eta;
    let df = geo.grad(f);
    let db = dbar(geo)?;
    let c = geo.cotton();
    let w = geo.weyl();
    let d = geo.dphi();
    let ug = ugrad_vec(geo);
    let c1 = 1.0 + eta * (mf - 2.0);
    let ud: Vec<Jet> = (0..m).map(|j| geo.sum((0..geo.n).map(|a| &ug[a] * d.at_t(a, &[j])))).collect();
    Ok(Field::build(m, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let mut v = db.at(x) * c1 - c.at(x);
        for t in 0..m {
            v -= df.at(&[t]) * w.at(&[t, i, j, k]);
        }
        if i == k {
            v -= &ud[j] * (1.0 / (mf - 1.0));
        }
        if i == j {
            v += &ud[k] * (1.0 / (mf - 1.0));
        }
        v
    }))
}

/// Second integrability defect.
pub fn second_integrability(geo: &Geo) -> Result<Field> {
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let n = geo.n;
    let f = geo.require_f()?;
    let eta = geo.scene.eta;
    let al = geo.alpha();
    let c1 = 1.0 + eta * (mf - 2.0);
    let df = geo.grad(f);
    let db = dbar(geo)?;
    let ddb = geo.div(&db, 2);
    let b = geo.bach();
    let c = geo.cotton();
    let w = geo.weyl();
    let d = geo.dphi();
    let dd = geo.ddphi();
    let tau = geo.tau();
    let ug = ugrad_vec(geo);
    Ok(Field::build(m, 2, |x| {
        let (i, j) = (x[0], x[1]);
        let mut br = ddb.at(x).clone();
        for a in 0..n {
            br -= tau.at_t(a, &[]) * d.at_t(a, &[i]) * df.at(&[j]) * (al / (mf - 2.0));
        }
        let mut rhs = br * c1;
        for k in 0..m {
            rhs += df.at(&[k]) * c.at(&[j, i, k]) * ((mf - 3.0) / (mf - 2.0));
            for t in 0..m {
                rhs -= w.at(&[t, i, j, k]) * df.at(&[t]) * df.at(&[k]) * eta;
            }
        }
        for a in 0..n {
            let mut q = dd.at_t(a, &[i, j]) * (mf - 2.0);
            if i == j {
                q -= tau.at_t(a, &[]) * (1.0 / (mf - 2.0));
            }
            rhs += &ug[a] * q * (1.0 / (mf - 1.0));
            for bb in 0..n {
                let mut q = d.at_t(a, &[i]) * d.at_t(bb, &[j]) * (-mf);
                if i == j {
                    q += geo.sum((0..m).map(|k| d.at_t(a, &[k]) * d.at_t(bb, &[k])));
                }
                rhs += geo.uhess_at(a, bb) * q * (1.0 / (mf - 1.0));
            }
            rhs += df.at(&[j]) * &ug[a] * d.at_t(a, &[i]) * eta;
        }
        b.at(x) * (mf - 2.0) - rhs
    }))
}

pub fn integrability_residuals(scene: &Scene, x: &[f64]) -> Result<Integrability> {
    let geo = Geo::new(scene, x, 4)?;
    let a = first_integrability(&geo)?;
    let b = second_integrability(&geo)?;
    Ok(Integrability { first_sup: a.sup_norm(), second_sup: b.sup_norm(), first: a.values(), second: b.values() })
}

// ----- level sets -----

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetFrame {
    pub point: Vec<f64>,
    pub grad_norm: f64,
    /// Unit normal ∇f/|∇f| in coordinates.
    pub normal: Vec<f64>,
    /// Orthonormal tangent vectors in coordinates.
    pub tangents: Vec<Vec<f64>>,
    /// Second fundamental form h_AB = −Hess f(e_A, e_B)/|∇f|, row-major.
    pub second_fundamental: Vec<f64>,
    pub mean_curvature: f64,
    pub traceless: Vec<f64>,
    /// Defect of the norm identity relating |D̄|², |h̊|² and the radial Ricci part.
    pub norm_defect: f64,
    /// |h_AB − (R^φ_AB − λδ_AB)/|∇f|| when λ is available.
    pub eigen_defect: Option<f64>,
}

impl LevelSetFrame {
    pub fn traceless_norm(&self) -> f64 {
        self.traceless.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Orthonormal frame vectors completing the unit frame vector `nu`.
fn complete_basis(nu: &[f64]) -> Vec<Vec<f64>> {
    let m = nu.len();
    let drop = (0..m).max_by(|&a, &b| nu[a].abs().total_cmp(&nu[b].abs())).unwrap();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
    for a in (0..m).filter(|&a| a != drop) {
        let mut v = vec![0.0; m];
        v[a] = 1.0;
        for _ in 0..2 {
            let p: f64 = (0..m).map(|i| v[i] * nu[i]).sum();
            for i in 0..m {
                v[i] -= p * nu[i];
            }
            for w in &out {
                let p: f64 = (0..m).map(|i| v[i] * w[i]).sum();
                for i in 0..m {
                    v[i] -= p * w[i];
                }
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        out.push(v);
    }
    out
}

pub fn level_set_geometry(scene: &Scene, x: &[f64]) -> Result<LevelSetFrame> {
    let geo = Geo::new(scene, x, 3)?;
    level_set_at(&geo)
}

pub fn level_set_at(geo: &Geo) -> Result<LevelSetFrame> {
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let f = geo.require_f()?;
    let df = geo.grad(f).values();
    let gn = df.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(gn > EPS_REG) {
        return Err(Error::CriticalPoint { grad: gn });
    }
    let nu: Vec<f64> = df.iter().map(|v| v / gn).collect();
    let tang = complete_basis(&nu);
    let hf = geo.hess_f()?;
    let hv = hf.values();
    let bil = |h: &[f64], a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += h[i * m + j] * a[i] * b[j];
            }
        }
        s
    };
    let k = m - 1;
    let mut sff = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            sff[a * k + b] = -bil(&hv, &tang[a], &tang[b]) / gn;
        }
    }
    let hmean: f64 = (0..k).map(|a| sff[a * k + a]).sum::<f64>() / k as f64;
    let mut tl = sff.clone();
    for a in 0..k {
        tl[a * k + a] -= hmean;
    }
    let tl2: f64 = tl.iter().map(|v| v * v).sum();
    let db = dbar(geo)?;
    let db2: f64 = db.values().iter().map(|v| v * v).sum();
    let rp = geo.ricphi().values();
    let rf: Vec<f64> = (0..m).map(|j| (0..m).map(|i| rp[i * m + j] * df[i]).sum()).collect();
    let rf2: f64 = rf.iter().map(|v| v * v).sum();
    let rff: f64 = (0..m).map(|j| rf[j] * df[j]).sum();
    let g2 = gn * gn;
    let norm_defect = (mf - 2.0).powi(2) / (2.0 * g2) * db2
        - tl2 * g2
        - (mf - 2.0) / (mf - 1.0) * (rf2 / g2 - rff * rff / (g2 * g2));
    let eigen_defect = match lambda_jet(geo) {
        Ok(l) => {
            let l = l.value();
            let mut worst = 0.0f64;
            for a in 0..k {
                for b in 0..k {
                    let mut r = bil(&rp, &tang[a], &tang[b]);
                    if a == b {
                        r -= l;
                    }
                    worst = worst.max((sff[a * k + b] - r / gn).abs());
                }
            }
            Some(worst)
        }
        Err(_) => None,
    };
    Ok(LevelSetFrame {
        point: geo.x.clone(),
        grad_norm: gn,
        normal: geo.vector_to_coords(&nu),
        tangents: tang.iter().map(|t| geo.vector_to_coords(t)).collect(),
        second_fundamental: sff,
        mean_curvature: hmean,
        traceless: tl,
        norm_defect,
        eigen_defect,
    })
}

// ----- warped split -----

/// Defect of the radial ODE satisfied by warped η-solutions I ×_ρ Σ with f = f(r).
pub fn warped_split_residual(scene: &Scene, r: f64) -> Result<f64> {
    let prof = scene.profile.as_ref().ok_or_else(|| Error::MissingProfile(scene.name.clone()))?;
    let m = scene.dim() as f64;
    let sp = crate::jet::Space::get(1, 2);
    let rj = Jet::variable(&sp, 0, r);
    let one = Jet::constant(&sp, 1.0);
    let rho = prof.rho.eval(std::slice::from_ref(&rj), &one);
    let f = prof.f.eval(std::slice::from_ref(&rj), &one);
    let (r0, r1, r2) = (rho.value(), rho.partial(&[1]), rho.partial(&[2]));
    let (f1, f2) = (f.partial(&[1]), f.partial(&[2]));
    if !(r0.abs() > EPS_REG) {
        return Err(Error::ProfileSingular(format!("rho({r}) = {r0:e}")));
    }
    let eta = scene.eta;
    Ok(prof.fiber_scalar / (r0 * r0) + (m - 1.0) * (m - 2.0) * (r2 / r0 - (r1 / r0).powi(2)) - (m - 1.0) * f2
        + eta * (m - 1.0) * f1 * f1
        + (m - 1.0) * f1 * r1 / r0)
}

// ----- near-boundary gradient -----

/// Gradient norms |∇u| at points pushed onto the level {u = level} by Newton
/// steps along ∇u, starting from seeded samples.
pub fn boundary_gradient(scene: &Scene, samples: usize, seed: u64, level: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples);
    for mut x in scene.sample_points(samples, seed) {
        let mut ok = false;
        for _ in 0..60 {
            let geo = Geo::new(scene, &x, 1)?;
            let u = geo.u().ok_or_else(|| Error::MissingField("u".into()))?;
            let gc: Vec<f64> = (0..geo.m)
                .map(|i| (0..geo.m).map(|j| geo.ginv[i * geo.m + j].value() * u.partial_idx(&[j])).sum())
                .collect();
            let g2: f64 = (0..geo.m).map(|i| gc[i] * u.partial_idx(&[i])).sum();
            if !(g2 > EPS_REG) {
                return Err(Error::CriticalPoint { grad: g2.sqrt() });
            }
            let step = (u.value() - level) / g2;
            let mut y: Vec<f64> = x.iter().zip(&gc).map(|(a, b)| a - step * b).collect();
            // damp until the step stays in the chart
            let mut tries = 0;
            while !scene.chart.contains(&y) && tries < 40 {
                y = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                tries += 1;
            }
            x = y;
            if (u.value() - level).abs() < 1e-14 * (1.0 + level.abs()) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::NoConvergence("projection onto the boundary level".into()));
        }
        let geo = Geo::new(scene, &x, 1)?;
        let u = geo.u().unwrap();
        out.push(geo.grad(u).norm2().sqrt());
    }
    Ok(out)
}

// ----- divergence identities -----

pub const IDENTITY_IDS: [&str; 11] = [
    "two_form",
    "divY",
    "divZ_shen",
    "divX_fp",
    "divZ_boundary",
    "cotton_fundamental",
    "bochner",
    "hess_gamma",
    "weyl_div3",
    "bach_div",
    "conservation",
];

/// Hypotheses an identity needs; evaluated numerically at the point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    DimAtLeast3,
    Map,
    FieldU,
    FieldF,
    AuxW,
    TwoForm,
    ConformalField,
    FluidSystem,
    EtaSystem,
    EtaEquation,
    EtaRegular,
    EtaNonzero,
    VacuumSystem,
    BoundarySystem,
    UHarmonic,
    GradientEigen,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::DimAtLeast3 => "dim_at_least_3",
            Hypothesis::Map => "map",
            Hypothesis::FieldU => "field_u",
            Hypothesis::FieldF => "field_f",
            Hypothesis::AuxW => "aux_w",
            Hypothesis::TwoForm => "two_form",
            Hypothesis::ConformalField => "conformal_field",
            Hypothesis::FluidSystem => "fluid_system",
            Hypothesis::EtaSystem => "eta_system",
            Hypothesis::EtaEquation => "eta_equation",
            Hypothesis::EtaRegular => "eta_regular",
            Hypothesis::EtaNonzero => "eta_nonzero",
            Hypothesis::VacuumSystem => "vacuum_system",
            Hypothesis::BoundarySystem => "boundary_system",
            Hypothesis::UHarmonic => "u_harmonic",
            Hypothesis::GradientEigen => "gradient_eigen",
        }
    }
}

pub fn identity_hypotheses(id: &str) -> Result<&'static [Hypothesis]> {
    use Hypothesis::*;
    Ok(match id {
        "two_form" => &[TwoForm],
        "divY" => &[DimAtLeast3, FieldF, EtaSystem],
        "divZ_shen" => &[FieldU, FluidSystem],
        "divX_fp" => &[FieldU, AuxW],
        "divZ_boundary" => &[DimAtLeast3, FieldU, EtaNonzero, EtaRegular, BoundarySystem, UHarmonic, GradientEigen],
        "cotton_fundamental" => &[DimAtLeast3, FieldF, EtaRegular, EtaEquation],
        "bochner" => &[Map],
        "hess_gamma" => &[DimAtLeast3, ConformalField],
        "weyl_div3" => &[DimAtLeast3],
        "bach_div" => &[DimAtLeast3],
        "conservation" => &[FieldU, VacuumSystem],
        other => return Err(Error::UnknownCheckId(other.into())),
    })
}

/// Jet order each identity consumes.
pub fn identity_order(id: &str) -> Result<usize> {
    Ok(match id {
        "two_form" => 2,
        "bochner" | "divZ_shen" | "divX_fp" | "hess_gamma" | "conservation" => 3,
        "divY" => 4,
        "cotton_fundamental" | "bach_div" => 5,
        "weyl_div3" | "divZ_boundary" => 6,
        other => return Err(Error::UnknownCheckId(other.into())),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityValue {
    pub id: String,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub defect: f64,
    pub hypotheses: Vec<String>,
    /// Defect of the reduced form, where one exists and its extra
    /// hypotheses hold.
    pub reduced_defect: Option<f64>,
}

fn omega_jets(geo: &Geo) -> Option<Vec<Jet>> {
    let m = geo.m;
    let mut w = vec![geo.zero(); m * m];
    let mut any = false;
    for i in 0..m {
        for j in i + 1..m {
            if let Some(e) = geo.scene.aux.get(&format!("omega_{}_{}", i + 1, j + 1)) {
                let v = geo.eval(e);
                w[j * m + i] = -v.clone();
                w[i * m + j] = v;
                any = true;
            }
        }
    }
    any.then_some(w)
}

fn conformal_jets(geo: &Geo) -> Option<Vec<Jet>> {
    (1..=geo.m).map(|i| geo.scene.aux.get(&format!("X{i}")).map(|e| geo.eval(e))).collect()
}

fn hyp_tol(geo: &Geo) -> f64 {
    geo.scene.tol_override("hypothesis").unwrap_or(HYPOTHESIS_TOL)
}

fn eta_regular(geo: &Geo) -> bool {
    (1.0 + geo.scene.eta * (geo.m as f64 - 2.0)).abs() > 1e-12
}

/// Boundary form of the η-system in u = e^{−ηf}.
fn boundary_equations(geo: &Geo) -> Result<Vec<Field>> {
    let m = geo.m;
    let mf = m as f64;
    let eta = geo.scene.eta;
    let u = geo.require_u()?;
    let hu = geo.hess_u()?;
    let rp = geo.ricphi();
    let lap = geo.trace(hu);
    let c = (u * geo.sphi() * eta - &lap) * (1.0 / mf);
    let e1 = Field::build(m, 2, |x| {
        let mut r = u * rp.at(x) * eta - hu.at(x);
        if x[0] == x[1] {
            r -= &c;
        }
        r
    });
    let gu = geo.grad(u);
    let du = dphi_of(geo, &gu);
    let tau = geo.tau();
    let ug = ugrad_vec(geo);
    let al = geo.alpha();
    let e2 = Field::build_t(m, geo.n, 0, |a, _| u * tau.at_t(a, &[]) * eta + &du[a] - u * &ug[a] * (eta / al));
    Ok(vec![e1, e2])
}

/// Returns a description of the first failing hypothesis.
pub fn check_hypothesis(geo: &Geo, h: Hypothesis) -> Result<Option<String>> {
    let tol = hyp_tol(geo);
    let m = geo.m;
    let too_big = |what: &str, v: f64| if v > tol { Some(format!("{what} residual {v:e} > {tol:e}")) } else { None };
    Ok(match h {
        Hypothesis::DimAtLeast3 => (m < 3).then(|| format!("dimension {m} < 3")),
        Hypothesis::Map => geo.scene.map.is_none().then(|| "scene has no map".to_string()),
        Hypothesis::FieldU => match geo.u() {
            None => Some("no u field".into()),
            Some(u) if !(u.value() > EPS_REG) => Some(format!("u = {:e} is not positive", u.value())),
            _ => None,
        },
        Hypothesis::FieldF => geo.f().is_none().then(|| "no f field".to_string()),
        Hypothesis::AuxW => (!geo.scene.aux.contains_key("w")).then(|| "no auxiliary field w".to_string()),
        Hypothesis::TwoForm => omega_jets(geo).is_none().then(|| "no omega_i_j components".to_string()),
        Hypothesis::ConformalField => match conformal_jets(geo) {
            None => Some("no vector field X1..Xm".into()),
            Some(xs) => {
                let xf = geo.vector_field(&xs);
                let dx = geo.cov(&xf);
                let gam = geo.trace(&dx);
                let mut worst = 0.0f64;
                for i in 0..m {
                    for j in 0..m {
                        let mut v = dx.val(&[i, j]) + dx.val(&[j, i]);
                        if i == j {
                            v -= 2.0 / m as f64 * gam.value();
                        }
                        worst = worst.max(v.abs());
                    }
                }
                too_big("conformal Killing", worst)
            }
        },
        Hypothesis::FluidSystem => {
            let eqs = fluid_equations(geo)?;
            let worst = eqs.iter().filter(|(l, _)| *l != "conservation").map(|(_, f)| f.sup_norm()).fold(0.0, f64::max);
            too_big("fluid system", worst)
        }
        Hypothesis::EtaSystem => {
            let worst = eta_equations(geo)?.iter().map(|(_, f)| f.sup_norm()).fold(0.0, f64::max);
            too_big("eta system", worst)
        }
        Hypothesis::EtaEquation => too_big("eta equation", eta_equations(geo)?[0].1.sup_norm()),
        Hypothesis::EtaRegular => (!eta_regular(geo)).then(|| "eta = -1/(m-2)".to_string()),
        Hypothesis::EtaNonzero => (geo.scene.eta == 0.0).then(|| "eta = 0".to_string()),
        Hypothesis::VacuumSystem => {
            let mf = m as f64;
            let u = geo.require_u()?;
            let hu = geo.hess_u()?;
            let rp = geo.ricphi();
            let s = geo.sphi() * (1.0 / (mf - 1.0));
            let e1 = Field::build(m, 2, |x| {
                let mut r = rp.at(x).clone();
                if x[0] == x[1] {
                    r -= &s;
                }
                hu.at(x) - u * r
            });
            let gu = geo.grad(u);
            let du = dphi_of(geo, &gu);
            let tau = geo.tau();
            let ug = ugrad_vec(geo);
            let al = geo.alpha();
            let d = geo.dphi();
            let v: Vec<Jet> =
                (0..geo.n).map(|a| u * tau.at_t(a, &[]) * al + &du[a] * al - u * &ug[a]).collect();
            let e2 = Field::build(m, 1, |i| geo.sum((0..geo.n).map(|a| &v[a] * d.at_t(a, &[i[0]]))));
            too_big("vacuum system", e1.sup_norm().max(e2.sup_norm()))
        }
        Hypothesis::BoundarySystem => {
            let worst = boundary_equations(geo)?.iter().map(Field::sup_norm).fold(0.0, f64::max);
            too_big("boundary system", worst)
        }
        Hypothesis::UHarmonic => {
            let tau = geo.tau();
            let ug = ugrad_vec(geo);
            let al = geo.alpha();
            let worst = (0..geo.n).map(|a| (tau.val_t(a, &[]) - ug[a].value() / al).abs()).fold(0.0, f64::max);
            too_big("U-harmonic", worst)
        }
        Hypothesis::GradientEigen => {
            let u = geo.require_u()?;
            let g = geo.grad(u).values();
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2 <= EPS_REG * EPS_REG {
                None
            } else {
                let rp = geo.ricphi().values();
                let rg: Vec<f64> = (0..m).map(|j| (0..m).map(|i| rp[i * m + j] * g[i]).sum()).collect();
                let ev: f64 = (0..m).map(|j| rg[j] * g[j]).sum::<f64>() / g2;
                let worst = (0..m).map(|j| (rg[j] - ev * g[j]).abs()).fold(0.0, f64::max);
                too_big("Ricci eigenvector", worst)
            }
        }
    })
}

pub fn divergence_identity(id: &str, scene: &Scene, x: &[f64]) -> Result<IdentityValue> {
    let hyps = identity_hypotheses(id)?;
    let order = identity_order(id)?;
    let geo = Geo::new(scene, x, order)?;
    for &h in hyps {
        if let Some(why) = check_hypothesis(&geo, h)? {
            return Err(Error::HypothesisUnmet { id: id.into(), hypothesis: format!("{}: {why}", h.name()) });
        }
    }
    let (lhs, rhs, reduced) = match id {
        "two_form" => two_form(&geo)?,
        "divY" => div_y(&geo)?,
        "divZ_shen" => div_z_shen(&geo)?,
        "divX_fp" => div_x_fp(&geo)?,
        "divZ_boundary" => div_z_boundary(&geo)?,
        "cotton_fundamental" => cotton_fundamental(&geo)?,
        "bochner" => bochner(&geo)?,
        "hess_gamma" => hess_gamma(&geo)?,
        "weyl_div3" => weyl_div3(&geo)?,
        "bach_div" => bach_div(&geo)?,
        "conservation" => conservation(&geo)?,
        _ => unreachable!(),
    };
    let (l, r) = (lhs.values(), rhs.values());
    let defect = l.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(IdentityValue {
        id: id.into(),
        lhs: l,
        rhs: r,
        defect,
        hypotheses: hyps.iter().map(|h| h.name().to_string()).collect(),
        reduced_defect: reduced,
    })
}

type Sides = (Field, Field, Option<f64>);

fn scalar_sides(geo: &Geo, l: Jet, r: Jet) -> Sides {
    (Field::scalar(l, geo.m), Field::scalar(r, geo.m), None)
}

fn two_form(geo: &Geo) -> Result<Sides> {
    let w = geo.two_tensor_field(&omega_jets(geo).unwrap());
    let d1 = geo.div(&w, 1);
    let d2 = geo.div(&d1, 0);
    Ok(scalar_sides(geo, sval(&d2).clone(), geo.zero()))
}

fn bochner(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let n = geo.n;
    let lhs = geo.lap(&geo.dphi_norm2()) * 0.5;
    let d = geo.dphi();
    let dd = geo.ddphi();
    let dtau = geo.cov(geo.tau());
    let ric = geo.ric();
    let mut rhs = sq(geo, dd);
    for a in 0..n {
        for i in 0..m {
            rhs += d.at_t(a, &[i]) * dtau.at_t(a, &[i]);
            for t in 0..m {
                rhs += ric.at(&[t, i]) * d.at_t(a, &[t]) * d.at_t(a, &[i]);
            }
        }
    }
    // target curvature term Σ R^N(φ_i, φ_k, φ_k, φ_i)
    let mut nr = geo.zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for dd_ in 0..n {
                    let r = geo.target_riem_at(a, b, c, dd_);
                    if r.value() == 0.0 && r.coeffs().iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let mut s = geo.zero();
                    for i in 0..m {
                        for k in 0..m {
                            s += d.at_t(a, &[i]) * d.at_t(b, &[k]) * d.at_t(c, &[k]) * d.at_t(dd_, &[i]);
                        }
                    }
                    nr += r * s;
                }
            }
        }
    }
    rhs += nr;
    Ok(scalar_sides(geo, lhs, rhs))
}

fn div_y(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let n = geo.n;
    let mf = m as f64;
    let eta = geo.scene.eta;
    let al = geo.alpha();
    let c1 = 1.0 + eta * (mf - 2.0);
    let f = geo.require_f()?;
    let df = geo.grad(f);
    let g2 = dot(geo, &df, &df);
    let db = dbar(geo)?;
    let d = geo.dphi();
    let ug = ugrad_vec(geo);
    let dfv = dphi_of(geo, &df);
    let y = Field::build(m, 1, |k| {
        let k = k[0];
        let mut v = geo.zero();
        for i in 0..m {
            for j in 0..m {
                v += db.at(&[i, j, k]) * df.at(&[i]) * df.at(&[j]);
            }
        }
        v *= c1;
        for a in 0..n {
            v -= &ug[a] * (&dfv[a] * df.at(&[k]) - d.at_t(a, &[k]) * &g2) * (1.0 / (mf - 1.0));
        }
        v
    });
    let lhs = sval(&geo.div(&y, 0)).clone();
    let b = geo.bach();
    let dd = geo.ddphi();
    let tau = geo.tau();
    let lapf = geo.lap(f);
    let gg2 = geo.grad(&g2);
    let mut rhs = sq(geo, &db) * (0.5 * c1 * (mf - 2.0));
    for i in 0..m {
        for j in 0..m {
            rhs += b.at(&[i, j]) * df.at(&[i]) * df.at(&[j]) * (mf - 2.0);
        }
    }
    for a in 0..n {
        let mut s = geo.zero();
        for i in 0..m {
            for j in 0..m {
                s += dd.at_t(a, &[i, j]) * df.at(&[i]) * df.at(&[j]);
            }
        }
        rhs -= &ug[a] * s;
    }
    rhs += uhess_apply(geo, &dfv, &dfv);
    let dg = dphi_of(geo, &gg2);
    rhs += tdot(geo, &ug, &dg) * (1.0 / (2.0 * (mf - 1.0)));
    rhs -= tdot(geo, &ug, &dfv) * &lapf * (1.0 / (mf - 1.0));
    rhs += &g2 * geo.tau_norm2() * (al / (mf - 2.0));
    let dev = geo.sum((0..n).map(|a| (tau.at_t(a, &[]) - &ug[a] * (1.0 / al)).sqr()));
    rhs += &g2 * dev * (al * eta);
    Ok(scalar_sides(geo, lhs, rhs))
}

fn div_z_shen(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let n = geo.n;
    let mf = m as f64;
    let al = geo.alpha();
    let u = geo.require_u()?.clone();
    let mu = geo.named("mu")?;
    let p = geo.named("p")?;
    let uu = geo.upot().clone();
    let q = &mu * (mf - 2.0) + &p * mf;
    let gu = geo.grad(&u);
    let gu2 = dot(geo, &gu, &gu);
    let inner = &gu2 - u.sqr() * (&q - &uu * 2.0) * (1.0 / (mf * (mf - 1.0)));
    let ur = u.recip();
    let z = geo.grad(&inner).map(|c| c * &ur);
    let lhs = sval(&geo.div(&z, 0)).clone();
    let hu = geo.hess_u()?;
    let lap = geo.trace(hu);
    let gq = geo.grad(&q);
    let d = geo.dphi();
    let ug = ugrad_vec(geo);
    let ug2 = tdot(geo, &ug, &ug);
    let duv = dphi_of(geo, &gu);
    let mut trh = geo.zero();
    for i in 0..m {
        let v: Vec<Jet> = (0..n).map(|a| d.at_t(a, &[i]).clone()).collect();
        trh += uhess_apply(geo, &v, &v);
    }
    let mut rhs = (sq(geo, hu) - lap.sqr() * (1.0 / mf)) * &ur * 2.0;
    rhs += dot(geo, &gq, &gu) * ((2.0 * mf - 3.0) / (mf * (mf - 1.0)));
    rhs += &u * trh * (2.0 / (mf * (mf - 1.0)));
    rhs += &u * &ug2 * (2.0 / (al * mf * mf * (mf - 1.0)));
    rhs -= &u * geo.lap(&q) * (1.0 / (mf * (mf - 1.0)));
    // u|√(2/α)∇U/m − √(2α) dφ(∇u)/u|², expanded so that α < 0 is allowed
    rhs += &u * &ug2 * (2.0 / (al * mf * mf));
    rhs -= tdot(geo, &ug, &duv) * (4.0 / mf);
    rhs += tdot(geo, &duv, &duv) * &ur * (2.0 * al);
    rhs += (&mu + &p) * &gu2 * &ur * 2.0;
    Ok(scalar_sides(geo, lhs, rhs))
}

fn div_x_fp(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let mf = m as f64;
    let u = geo.require_u()?.clone();
    let w = geo.named("w")?;
    let ur = u.recip();
    let wu = &w * &ur;
    let gu = geo.grad(&u);
    let gw = geo.grad(&w);
    let hu = geo.hess_u()?;
    let hw = geo.hess(&w);
    let v = Field::build(m, 1, |i| gw.at(i) - &wu * gu.at(i));
    let mm = Field::build(m, 2, |x| {
        let mut r = hw.at(x) - &wu * hu.at(x);
        if x[0] == x[1] {
            r += 1.0 / mf;
        }
        r
    });
    let xf = Field::build(m, 1, |j| &u * geo.sum((0..m).map(|i| mm.at(&[i, j[0]]) * v.at(&[i]))));
    let lhs = sval(&geo.div(&xf, 0)).clone();
    let lapu = geo.trace(hu);
    let lapw = geo.trace(&hw);
    let traceless = |t: &Field| {
        let tr = geo.trace(t) * (1.0 / mf);
        Field::build(m, 2, |x| if x[0] == x[1] { t.at(x) - &tr } else { t.at(x).clone() })
    };
    let hwo = traceless(&hw);
    let huo = traceless(hu);
    let rpo = traceless(geo.ricphi());
    let diff = hwo.zip(&huo, |a, b| a - &wu * b);
    let q = huo.zip(&rpo, |a, b| a - &u * b);
    let lw = &lapw - &wu * &lapu;
    let v2 = dot(geo, &v, &v);
    let mut qvv = geo.zero();
    for i in 0..m {
        for j in 0..m {
            qvv += q.at(&[i, j]) * v.at(&[i]) * v.at(&[j]);
        }
    }
    let glw = geo.grad(&lapw);
    let glu = geo.grad(&lapu);
    let gd = Field::build(m, 1, |i| glw.at(i) - &wu * glu.at(i));
    let dv = dphi_of(geo, &v);
    let al = geo.alpha();
    let mut rhs = &u * sq(geo, &diff);
    rhs += &u * &lw * (&lw + 1.0) * (1.0 / mf);
    rhs -= qvv;
    rhs -= &v2 * (&lapu - geo.sphi() * &u) * (1.0 / mf);
    rhs += &u * dot(geo, &v, &gd);
    rhs += &u * tdot(geo, &dv, &dv) * al;
    // reduced form on fluid solutions with Δw − wΔu/u = −1
    let tol = hyp_tol(geo);
    let reduced = if check_hypothesis(geo, Hypothesis::FluidSystem)?.is_none() && (lw.value() + 1.0).abs() <= tol {
        let mu = geo.named("mu")?;
        let p = geo.named("p")?;
        let red = &u * sq(geo, &diff) + &u * tdot(geo, &dv, &dv) * al + (&mu + &p) * &u * &v2;
        Some((lhs.value() - red.value()).abs())
    } else {
        None
    };
    Ok((Field::scalar(lhs, m), Field::scalar(rhs, m), reduced))
}

fn cotton_fundamental(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let mf = m as f64;
    let eta = geo.scene.eta;
    let f = geo.require_f()?;
    let df = geo.grad(f);
    let c = geo.cotton();
    let w = geo.weyl();
    let rp = geo.ricphi();
    let sphi = geo.sphi();
    let lam = lambda_jet(geo)?;
    let glam = geo.grad(&lam);
    let gs = geo.grad(&sphi);
    let e = (mf - 2.0) * eta + 1.0;
    let lhs = sq(geo, c) * (1.0 / (2.0 * e));
    let d1 = geo.div(c, 1);
    let d2 = geo.div(&d1, 1);
    let ctt: Vec<Jet> = (0..m).map(|k| geo.sum((0..m).map(|t| c.at(&[t, t, k]).clone()))).collect();
    let mut rhs = geo.sum((0..m).map(|t| df.at(&[t]) * d2.at(&[t])));
    let mut wc = geo.zero();
    for x in indices(m, 4) {
        let (p, t, j, k) = (x[0], x[1], x[2], x[3]);
        wc += df.at(&[t]) * w.at(&[p, t, j, k]) * c.at(&[p, j, k]);
    }
    rhs -= wc * (eta * (mf - 2.0) / (2.0 * (mf - 2.0) * eta + 2.0));
    for k in 0..m {
        let a = glam.at(&[k]) - gs.at(&[k]) * (1.0 / (2.0 * (mf - 1.0))) - &lam * df.at(&[k]) * eta;
        rhs += a * &ctt[k] * (1.0 / e);
        let fr = geo.sum((0..m).map(|t| df.at(&[t]) * rp.at(&[t, k])));
        let b = fr - &sphi * df.at(&[k]) * (1.0 / (mf - 1.0));
        rhs -= b * &ctt[k] * (eta / e);
    }
    Ok(scalar_sides(geo, lhs, rhs))
}

fn hess_gamma(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let mf = m as f64;
    let al = geo.alpha();
    let xs = conformal_jets(geo).unwrap();
    let xf = geo.vector_field(&xs);
    let dx = geo.cov(&xf);
    let gam = geo.trace(&dx);
    let lhs = geo.hess(&gam);
    let lie = |t: &Field| {
        let dt = geo.cov(t);
        Field::build(m, 2, |x| {
            let (i, j) = (x[0], x[1]);
            let mut s = geo.zero();
            for k in 0..m {
                s += xf.at(&[k]) * dt.at(&[i, j, k]) + dx.at(&[k, i]) * t.at(&[k, j]) + dx.at(&[k, j]) * t.at(&[i, k]);
            }
            s
        })
    };
    let lr = lie(geo.ricphi());
    let lp = lie(geo.pull());
    let trlp = geo.trace(&lp);
    let sphi = geo.sphi();
    let gs = geo.grad(&sphi);
    let sx = dot(geo, &gs, &xf);
    let diag = &sphi * &gam * (1.0 / ((mf - 1.0) * (mf - 2.0))) + &sx * (mf / (2.0 * (mf - 1.0) * (mf - 2.0)))
        + &trlp * (al * mf / ((mf - 2.0) * 2.0 * (mf - 1.0)));
    let rhs = Field::build(m, 2, |x| {
        let mut r = (lr.at(x) + lp.at(x) * al) * (-mf / (mf - 2.0));
        if x[0] == x[1] {
            r += &diag;
        }
        r
    });
    Ok((lhs, rhs, None))
}

fn weyl_div3(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let mf = m as f64;
    let al = geo.alpha();
    let w = geo.weyl();
    let v = geo.div(w, 0);
    let v = geo.div(&v, 2);
    let v = geo.div(&v, 1);
    let lhs = sval(&geo.div(&v, 0)).clone();
    let c = geo.cotton();
    let c3 = geo.div(c, 2);
    let c3 = geo.div(&c3, 1);
    let c3 = sval(&geo.div(&c3, 0)).clone();
    let r = geo.riem();
    let d = geo.dphi();
    let dd = geo.ddphi();
    let pull = geo.pull();
    let rp = geo.ricphi();
    let z = Field::build(m, 1, |i| {
        let i = i[0];
        let mut s = geo.zero();
        for t in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let rr = r.at(&[t, i, j, k]);
                    if rr.coeffs().iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    s += rr * geo.sum((0..geo.n).map(|a| d.at_t(a, &[j]) * dd.at_t(a, &[t, k])));
                }
            }
        }
        s
    });
    let ctt: Vec<Jet> = (0..m).map(|s| geo.sum((0..m).map(|t| c.at(&[t, t, s]).clone()))).collect();
    let y = Field::build(m, 1, |i| {
        geo.sum((0..m).map(|s| (rp.at(&[s, i[0]]) + pull.at(&[s, i[0]]) * al) * &ctt[s]))
    });
    let rhs = &c3 * (-(mf - 3.0) / (mf - 2.0))
        + sval(&geo.div(&z, 0)) * al
        + sval(&geo.div(&y, 0)) * (1.0 / (mf - 2.0));
    Ok(scalar_sides(geo, lhs, rhs))
}

/// Bi-tension field τ₂^a = φ^a_{ttss} − ^NR^a_{bcd} φ^b_s φ^c_s φ^d_{tt}.
fn bitension(geo: &Geo) -> Field {
    let m = geo.m;
    let n = geo.n;
    let tau = geo.tau();
    let lt = geo.div(&geo.cov(tau), 0);
    let d = geo.dphi();
    Field::build_t(m, n, 0, |a, _| {
        let mut s = lt.at_t(a, &[]).clone();
        for b in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let r = geo.target_riem_at(a, b, c, dd);
                    if r.coeffs().iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let bc = geo.sum((0..m).map(|k| d.at_t(b, &[k]) * d.at_t(c, &[k])));
                    s -= r * bc * tau.at_t(dd, &[]);
                }
            }
        }
        s
    })
}

fn bach_div(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let n = geo.n;
    let mf = m as f64;
    let al = geo.alpha();
    let b = geo.bach();
    let lhs = geo.div(b, 1).map(|v| v * (mf - 2.0));
    let rp = geo.ricphi();
    let c = geo.cotton();
    let d = geo.dphi();
    let dd = geo.ddphi();
    let tau = geo.tau();
    let dtau = geo.cov(tau);
    let sphi = geo.sphi();
    let gs = geo.grad(&sphi);
    let t2 = bitension(geo);
    let rhs = Field::build(m, 1, |i| {
        let i = i[0];
        let mut a1 = geo.zero();
        for j in 0..m {
            for k in 0..m {
                a1 += rp.at(&[j, k]) * c.at(&[j, k, i]);
            }
        }
        for a in 0..n {
            let rj = geo.sum((0..m).map(|j| rp.at(&[i, j]) * d.at_t(a, &[j])));
            a1 += tau.at_t(a, &[]) * (dtau.at_t(a, &[i]) + rj) * al;
        }
        let mut s = a1 * ((mf - 4.0) / (mf - 2.0));
        for a in 0..n {
            let mut br = tau.at_t(a, &[]) * &sphi * (mf / ((mf - 1.0) * (mf - 2.0)));
            for bb in 0..n {
                for j in 0..m {
                    br += tau.at_t(bb, &[]) * d.at_t(bb, &[j]) * d.at_t(a, &[j]) * (2.0 * al);
                }
            }
            s += d.at_t(a, &[i]) * br * al;
            let pj = geo.sum((0..m).map(|j| d.at_t(a, &[j]) * gs.at(&[j])));
            s -= d.at_t(a, &[i]) * pj * (al / 2.0 * (mf - 2.0) / (mf - 1.0));
            let mut hr = geo.zero();
            for j in 0..m {
                for k in 0..m {
                    hr += dd.at_t(a, &[j, k]) * rp.at(&[j, k]);
                }
            }
            s -= hr * d.at_t(a, &[i]) * (2.0 * al);
            s -= d.at_t(a, &[i]) * t2.at_t(a, &[]) * al;
        }
        s
    });
    Ok((lhs, rhs, None))
}

fn conservation(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let u = geo.require_u()?;
    let gs = geo.grad(&geo.sphi());
    let d = geo.dphi();
    let ug = ugrad_vec(geo);
    let lhs = gs.map(|v| v * u * 0.5);
    let rhs = Field::build(m, 1, |i| u * geo.sum((0..geo.n).map(|a| &ug[a] * d.at_t(a, &[i[0]]))));
    Ok((lhs, rhs, None))
}

/// The tensor D^φ of the boundary formulation, built from u.
fn boundary_d(geo: &Geo) -> Result<Field> {
    let m = geo.m;
    let mf = m as f64;
    let u = geo.require_u()?;
    let gu = geo.grad(u);
    let hu = geo.hess_u()?;
    let lap = geo.trace(hu);
    let hg: Vec<Jet> = (0..m).map(|j| geo.sum((0..m).map(|t| gu.at(&[t]) * hu.at(&[t, j])))).collect();
    Ok(Field::build(m, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let mut v = hu.at(&[i, k]) * gu.at(&[j]) - hu.at(&[i, j]) * gu.at(&[k]);
        if i == k {
            v += (&hg[j] - &lap * gu.at(&[j])) * (1.0 / (mf - 1.0));
        }
        if i == j {
            v -= (&hg[k] - &lap * gu.at(&[k])) * (1.0 / (mf - 1.0));
        }
        v * (1.0 / (mf - 2.0))
    }))
}

fn div_z_boundary(geo: &Geo) -> Result<Sides> {
    let m = geo.m;
    let n = geo.n;
    let mf = m as f64;
    let al = geo.alpha();
    let eta = geo.scene.eta;
    let c1 = 1.0 + eta * (mf - 2.0);
    let u = geo.require_u()?.clone();
    let gu = geo.grad(&u);
    let rp = geo.ricphi();
    let w = geo.weyl();
    let c = geo.cotton();
    let d = geo.dphi();
    let dd = geo.ddphi();
    let tau = geo.tau();
    let ug = ugrad_vec(geo);
    let sphi = geo.sphi();
    let gs = geo.grad(&sphi);
    let pull = geo.pull();
    let dpull = geo.cov(pull);
    let t2n = geo.tau_norm2();
    // Z
    let rw = Field::build(m, 2, |x| {
        let (i, j) = (x[0], x[1]);
        let mut s = geo.zero();
        for t in 0..m {
            for k in 0..m {
                s += rp.at(&[t, k]) * w.at(&[t, i, k, j]);
            }
        }
        s
    });
    let drw = geo.div(&rw, 1);
    let inner = Field::build(m, 2, |x| {
        let (i, k) = (x[0], x[1]);
        let mut s = geo.zero();
        for a in 0..n {
            s += dd.at_t(a, &[i, k]) * &ug[a];
            for b in 0..n {
                s -= geo.uhess_at(a, b) * d.at_t(b, &[k]) * d.at_t(a, &[i]);
            }
        }
        if i == k {
            s -= &t2n * (al / (mf - 2.0));
        }
        &u * s
    });
    let dinner = geo.div(&inner, 1);
    let z = Field::build(m, 1, |i| {
        let i = i[0];
        let mut s = &u * drw.at(&[i]);
        for t in 0..m {
            for k in 0..m {
                s -= &u * rp.at(&[t, k]) * c.at(&[t, k, i]) * ((mf - 4.0) / (mf - 2.0));
                s -= &u * rp.at(&[t, k]) * dpull.at(&[t, i, k]) * al;
            }
        }
        for a in 0..n {
            let mut hr = geo.zero();
            for j in 0..m {
                for k in 0..m {
                    hr += dd.at_t(a, &[j, k]) * rp.at(&[j, k]);
                }
            }
            s += &u * d.at_t(a, &[i]) * hr * (2.0 * al);
        }
        for t in 0..m {
            let tb = geo.sum((0..n).map(|b| tau.at_t(b, &[]) * d.at_t(b, &[t])));
            let q = gs.at(&[t]) * 0.5 - tb * al;
            s -= &u * q * pull.at(&[t, i]) * al;
        }
        s + dinner.at(&[i])
    });
    let lhs = sval(&geo.div(&z, 0)).clone();
    // right-hand side
    let dt = boundary_d(geo)?;
    let eu = &u * eta;
    let eur = eu.recip();
    let drp = geo.cov(rp);
    let mut rhs = geo.zero();
    for x in indices(m, 4) {
        let (t, i, j, k) = (x[0], x[1], x[2], x[3]);
        let wv = w.at(&[t, i, j, k]);
        if wv.coeffs().iter().all(|v| *v == 0.0) {
            continue;
        }
        rhs -= gu.at(&[t]) * wv * (dt.at(&[i, j, k]) * eur.sqr() * 0.5 + drp.at(&[i, j, k]));
    }
    rhs -= sq(geo, &dt) * eur.powi(3) * (0.5 * c1);
    let c3 = geo.div(c, 2);
    let c3 = geo.div(&c3, 1);
    rhs -= &u * sval(&geo.div(&c3, 0));
    let v1 = Field::build(m, 1, |i| {
        let i = i[0];
        let mut s = geo.zero();
        for a in 0..n {
            let mut q = geo.sum((0..m).map(|j| rp.at(&[i, j]) * d.at_t(a, &[j])));
            for b in 0..n {
                q += geo.uhess_at(a, b) * d.at_t(b, &[i]) * (1.0 / al);
            }
            s += &ug[a] * q;
        }
        s
    });
    rhs += &u * sval(&geo.div(&v1, 0)) * ((mf - 4.0) / (mf - 2.0));
    let t2 = bitension(geo);
    let v2 = Field::build(m, 1, |i| {
        let i = i[0];
        let mut s = geo.zero();
        for a in 0..n {
            let mut br = &ug[a] * &sphi * (mf / ((mf - 1.0) * (mf - 2.0)));
            for b in 0..n {
                for j in 0..m {
                    br += &ug[b] * d.at_t(b, &[j]) * d.at_t(a, &[j]) * 2.0;
                }
            }
            s += d.at_t(a, &[i]) * br;
            let pj = geo.sum((0..m).map(|j| d.at_t(a, &[j]) * gs.at(&[j])));
            s -= d.at_t(a, &[i]) * pj * (al / 2.0 * (mf - 2.0) / (mf - 1.0));
            let mut hr = geo.zero();
            for j in 0..m {
                for k in 0..m {
                    hr += dd.at_t(a, &[j, k]) * rp.at(&[j, k]);
                }
            }
            s -= hr * d.at_t(a, &[i]) * (2.0 * al);
            s -= d.at_t(a, &[i]) * t2.at_t(a, &[]) * al;
        }
        s
    });
    rhs += sval(&geo.div(&v2, 0)) * &u;
    Ok(scalar_sides(geo, lhs, rhs))
}
