//! Classical and φ-coupled curvature at a point, with consistency residuals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Geo;
use crate::jet::Jet;
use crate::scene::Scene;
use crate::tensor::{Field, TensorValue};

/// Levi-Civita data in coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct Classical {
    /// Γ^k_{ij} with the first slot contravariant.
    pub christoffel: TensorValue,
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
}

pub fn classical_curvature(scene: &Scene, x: &[f64]) -> Result<Classical> {
    let geo = Geo::new(scene, x, 2)?;
    let m = geo.m;
    let mut christoffel = TensorValue::covariant(m, 3, geo.gamma.iter().map(Jet::value).collect());
    christoffel.contra[0] = true;
    Ok(Classical {
        christoffel,
        riemann: TensorValue::covariant(m, 4, geo.riem_coord().iter().map(Jet::value).collect()),
        ricci: TensorValue::covariant(m, 2, geo.to_coords(geo.ric())),
        scalar: geo.scal().value(),
    })
}

/// Map-coupled quantities in coordinates: the target index is the target
/// coordinate index, base slots are covariant.
#[derive(Clone, Debug, Serialize)]
pub struct MapQuantities {
    pub pullback: TensorValue,
    /// (∇dφ)^a_{ij}, one 2-tensor per target coordinate.
    pub second_fundamental: Vec<TensorValue>,
    pub tension: Vec<f64>,
    pub energy_density: f64,
}

pub fn map_quantities(scene: &Scene, x: &[f64]) -> Result<MapQuantities> {
    let geo = Geo::new(scene, x, 2)?;
    let (m, n) = (geo.m, geo.n);
    let dd = geo.ddphi();
    let mut second_fundamental = Vec::with_capacity(n);
    let nn = geo.target_frame_matrix();
    for a in 0..n {
        let f = Field::build(m, 2, |i| {
            geo.sum((0..n).map(|al| dd.at_t(al, i) * nn[a * n + al]))
        });
        second_fundamental.push(TensorValue::covariant(m, 2, geo.to_coords(&f)));
    }
    let tau = geo.tau().values();
    Ok(MapQuantities {
        pullback: TensorValue::covariant(m, 2, geo.to_coords(geo.pull())),
        second_fundamental,
        tension: geo.target_vector_coords(&tau),
        energy_density: geo.dphi_norm2().value(),
    })
}

/// All φ-curvatures at one point, coordinate covariant components.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    pub classical: Classical,
    pub maps: MapQuantities,
    pub ricci_phi: TensorValue,
    pub scalar_phi: f64,
    pub schouten_phi: TensorValue,
    pub weyl_phi: TensorValue,
    pub cotton_phi: TensorValue,
    pub bach_phi: TensorValue,
    pub dbar_phi: Option<TensorValue>,
}

pub fn require_dim(m: usize, need: usize) -> Result<()> {
    if m < need {
        Err(Error::DimensionTooSmall { m, need })
    } else {
        Ok(())
    }
}

pub fn phi_bundle(scene: &Scene, x: &[f64]) -> Result<CurvatureBundle> {
    require_dim(scene.dim(), 3)?;
    let geo = Geo::new(scene, x, 4)?;
    let m = geo.m;
    let cv = |f: &Field| TensorValue::covariant(m, f.rank, geo.to_coords(f));
    let dbar = match geo.f() {
        Some(_) => Some(cv(&dbar(&geo)?)),
        None => None,
    };
    Ok(CurvatureBundle {
        classical: classical_curvature(scene, x)?,
        maps: map_quantities(scene, x)?,
        ricci_phi: cv(geo.ricphi()),
        scalar_phi: geo.sphi().value(),
        schouten_phi: cv(geo.schouten()),
        weyl_phi: cv(geo.weyl()),
        cotton_phi: cv(geo.cotton()),
        bach_phi: cv(geo.bach()),
        dbar_phi: dbar,
    })
}

/// D̄^φ from Ric^φ, S^φ and df.
pub fn dbar(geo: &Geo) -> Result<Field> {
    let f = geo.require_f()?;
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let df = geo.grad(f);
    let r = geo.ricphi();
    let s = geo.sphi();
    // Ric^φ(∇f, ·)
    let rf: Vec<Jet> = (0..m).map(|k| geo.sum((0..m).map(|t| df.at(&[t]) * r.at(&[t, k])))).collect();
    Ok(Field::build(m, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let mut v = r.at(&[i, j]) * df.at(&[k]) - r.at(&[i, k]) * df.at(&[j]);
        if i == j {
            v += (&rf[k] - &s * df.at(&[k])) * (1.0 / (mf - 1.0));
        }
        if i == k {
            v -= (&rf[j] - &s * df.at(&[j])) * (1.0 / (mf - 1.0));
        }
        v * (1.0 / (mf - 2.0))
    }))
}

/// D̄^φ in the form valid on η-system scenes, built from Hess f only.
pub fn dbar_hessian_form(geo: &Geo) -> Result<Field> {
    let f = geo.require_f()?;
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let df = geo.grad(f);
    let h = geo.hess_f()?;
    let lap = geo.trace(h);
    let hf: Vec<Jet> = (0..m).map(|k| geo.sum((0..m).map(|t| df.at(&[t]) * h.at(&[t, k])))).collect();
    Ok(Field::build(m, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let mut v = h.at(&[i, k]) * df.at(&[j]) - h.at(&[i, j]) * df.at(&[k]);
        if i == k {
            v += (&hf[j] - &lap * df.at(&[j])) * (1.0 / (mf - 1.0));
        }
        if i == j {
            v -= (&hf[k] - &lap * df.at(&[k])) * (1.0 / (mf - 1.0));
        }
        v * (1.0 / (mf - 2.0))
    }))
}

/// Sup-norms of the three trace identities of the φ-curvatures.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceResiduals {
    /// W^φ_{kikj} − α(φ*h)_{ij}
    pub weyl: f64,
    /// C^φ_{kki} − α φ^a_{kk} φ^a_i
    pub cotton: f64,
    /// B^φ_{ii} − α(m−4)/(m−2)² |τ|²
    pub bach: f64,
}

pub fn trace_residuals(geo: &Geo) -> Result<TraceResiduals> {
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let al = geo.alpha();
    let w = geo.weyl();
    let pull = geo.pull();
    let mut weyl = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let tr: f64 = (0..m).map(|k| w.val(&[k, i, k, j])).sum();
            weyl = weyl.max((tr - al * pull.val(&[i, j])).abs());
        }
    }
    let c = geo.cotton();
    let d = geo.dphi();
    let tau = geo.tau();
    let mut cotton = 0.0f64;
    for i in 0..m {
        let tr: f64 = (0..m).map(|k| c.val(&[k, k, i])).sum();
        let rhs: f64 = (0..geo.n).map(|a| tau.val_t(a, &[]) * d.val_t(a, &[i])).sum::<f64>() * al;
        cotton = cotton.max((tr - rhs).abs());
    }
    let mut bach = 0.0;
    if geo.order >= 4 {
        let b = geo.bach();
        let tr: f64 = (0..m).map(|i| b.val(&[i, i])).sum();
        bach = (tr - al * (mf - 4.0) / (mf - 2.0).powi(2) * geo.tau_norm2().value()).abs();
    }
    Ok(TraceResiduals { weyl, cotton, bach })
}

/// R^φ_{ij,i} − (½ S^φ_j − α φ^a_{tt} φ^a_j), coordinate components.
pub fn schur_residual(scene: &Scene, x: &[f64]) -> Result<Vec<f64>> {
    let geo = Geo::new(scene, x, 3)?;
    let f = schur_field(&geo);
    Ok(geo.to_coords(&f))
}

pub fn schur_field(geo: &Geo) -> Field {
    let m = geo.m;
    let al = geo.alpha();
    let dr = geo.div(geo.ricphi(), 0);
    let ds = geo.grad(&geo.sphi());
    let d = geo.dphi();
    let tau = geo.tau();
    Field::build(m, 1, |j| {
        let j = j[0];
        let t = geo.sum((0..geo.n).map(|a| tau.at_t(a, &[]) * d.at_t(a, &[j])));
        dr.at(&[j]) - ds.at(&[j]) * 0.5 + t * al
    })
}

/// Transformation law of the Cotton tensor under g̃ = e^{−2f/(m−2)} g:
/// returns C̃^φ̃ − (C^φ + f_t W^φ_{tijk}) in coordinates.
pub fn conformal_cotton_residual(scene: &Scene, x: &[f64]) -> Result<TensorValue> {
    require_dim(scene.dim(), 3)?;
    let geo = Geo::new(scene, x, 3)?;
    let m = geo.m;
    let f = geo.require_f()?;
    let df = geo.grad(f);
    let w = geo.weyl();
    let c = geo.cotton();
    let rhs = Field::build(m, 3, |x| {
        let mut v = c.at(x).clone();
        for t in 0..m {
            v += df.at(&[t]) * w.at(&[t, x[0], x[1], x[2]]);
        }
        v
    });
    let tilde = scene.conformal()?;
    let tg = Geo::new(&tilde, x, 3)?;
    let lhs = TensorValue::covariant(m, 3, tg.to_coords(tg.cotton()));
    let rhs = TensorValue::covariant(m, 3, geo.to_coords(&rhs));
    Ok(lhs.sub(&rhs))
}

/// Ricci transformation law under g̃ = e^{−2f/(m−2)} g:
/// R̃ic − [Ric + Hess f + df⊗df/(m−2) + (Δf − |∇f|²) g/(m−2)], coordinates.
pub fn ricci_conformal_residual(scene: &Scene, x: &[f64]) -> Result<TensorValue> {
    require_dim(scene.dim(), 3)?;
    let geo = Geo::new(scene, x, 2)?;
    let m = geo.m;
    let mf = m as f64;
    let f = geo.require_f()?;
    let df = geo.grad(f);
    let h = geo.hess_f()?;
    let lap = geo.trace(h);
    let g2 = geo.sum((0..m).map(|i| df.at(&[i]).sqr()));
    let ric = geo.ric();
    let rhs = Field::build(m, 2, |x| {
        let (i, j) = (x[0], x[1]);
        let mut v = ric.at(x) + h.at(x) + df.at(&[i]) * df.at(&[j]) * (1.0 / (mf - 2.0));
        if i == j {
            v += (&lap - &g2) * (1.0 / (mf - 2.0));
        }
        v
    });
    let tilde = scene.conformal()?;
    let tg = Geo::new(&tilde, x, 2)?;
    let lhs = TensorValue::covariant(m, 2, tg.to_coords(tg.ric()));
    Ok(lhs.sub(&TensorValue::covariant(m, 2, geo.to_coords(&rhs))))
}

/// Divergence of W^φ against the Cotton tensor:
/// W^φ_{sjkt,s} − α(φ^a_{jk}φ^a_t − φ^a_{jt}φ^a_k) − (α/(m−2)) φ^a_{ss}(φ^a_k δ_jt − φ^a_t δ_jk)
/// + ((m−3)/(m−2)) C^φ_{jkt}; sup-norm.
pub fn weyl_cotton_residual(geo: &Geo) -> Result<f64> {
    let m = geo.m;
    require_dim(m, 3)?;
    let mf = m as f64;
    let al = geo.alpha();
    let dw = geo.div(geo.weyl(), 0);
    let c = geo.cotton();
    let d = geo.dphi();
    let dd = geo.ddphi();
    let tau = geo.tau();
    let mut worst = 0.0f64;
    for j in 0..m {
        for k in 0..m {
            for t in 0..m {
                let mut v = dw.val(&[j, k, t]) + (mf - 3.0) / (mf - 2.0) * c.val(&[j, k, t]);
                for a in 0..geo.n {
                    v -= al * (dd.val_t(a, &[j, k]) * d.val_t(a, &[t]) - dd.val_t(a, &[j, t]) * d.val_t(a, &[k]));
                    let tt = tau.val_t(a, &[]);
                    let dl = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                    v -= al / (mf - 2.0) * tt * (d.val_t(a, &[k]) * dl(j, t) - d.val_t(a, &[t]) * dl(j, k));
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Algebraic symmetry battery results (sup-norms).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SymmetryBattery {
    pub riemann_antisym: f64,
    pub riemann_pair: f64,
    pub first_bianchi: f64,
    pub second_bianchi: f64,
    pub weyl_antisym: f64,
    pub cotton_antisym: f64,
    pub cotton_trace: f64,
    pub cotton_cyclic: f64,
    pub bach_sym: f64,
}

pub fn symmetry_battery(geo: &Geo) -> Result<SymmetryBattery> {
    let m = geo.m;
    let r = geo.riem();
    let mut b = SymmetryBattery::default();
    let idx = crate::geometry::indices(m, 4);
    for x in &idx {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let v = r.val(x);
        b.riemann_antisym = b.riemann_antisym.max((v + r.val(&[j, i, k, l])).abs()).max((v + r.val(&[i, j, l, k])).abs());
        b.riemann_pair = b.riemann_pair.max((v - r.val(&[k, l, i, j])).abs());
        b.first_bianchi = b.first_bianchi.max((v + r.val(&[i, k, l, j]) + r.val(&[i, l, j, k])).abs());
    }
    if geo.order >= 3 {
        let dr = geo.cov(r);
        for x in crate::geometry::indices(m, 5) {
            let (i, j, k, l, e) = (x[0], x[1], x[2], x[3], x[4]);
            let v = dr.val(&[i, j, k, l, e]) + dr.val(&[i, j, l, e, k]) + dr.val(&[i, j, e, k, l]);
            b.second_bianchi = b.second_bianchi.max(v.abs());
        }
    }
    if m >= 3 {
        let w = geo.weyl();
        for x in &idx {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            let v = w.val(x);
            b.weyl_antisym = b.weyl_antisym.max((v + w.val(&[j, i, k, l])).abs()).max((v - w.val(&[k, l, i, j])).abs());
        }
        if geo.order >= 3 {
            let c = geo.cotton();
            for x in crate::geometry::indices(m, 3) {
                let (i, j, k) = (x[0], x[1], x[2]);
                b.cotton_antisym = b.cotton_antisym.max((c.val(&[i, j, k]) + c.val(&[i, k, j])).abs());
                b.cotton_cyclic =
                    b.cotton_cyclic.max((c.val(&[i, j, k]) + c.val(&[k, i, j]) + c.val(&[j, k, i])).abs());
            }
            for i in 0..m {
                let tr: f64 = (0..m).map(|j| c.val(&[i, j, j])).sum();
                b.cotton_trace = b.cotton_trace.max(tr.abs());
            }
        }
        if geo.order >= 4 {
            let bb = geo.bach();
            for i in 0..m {
                for j in 0..m {
                    b.bach_sym = b.bach_sym.max((bb.val(&[i, j]) - bb.val(&[j, i])).abs());
                }
            }
        }
    }
    Ok(b)
}

impl SymmetryBattery {
    pub fn worst(&self) -> f64 {
        [
            self.riemann_antisym,
            self.riemann_pair,
            self.first_bianchi,
            self.second_bianchi,
            self.weyl_antisym,
            self.cotton_antisym,
            self.cotton_trace,
            self.cotton_cyclic,
            self.bach_sym,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// D̄^φ battery: antisymmetry in the last pair, all traces, cyclic sum.
pub fn dbar_battery(t: &Field) -> f64 {
    let m = t.m;
    let mut worst = 0.0f64;
    for x in crate::geometry::indices(m, 3) {
        let (i, j, k) = (x[0], x[1], x[2]);
        worst = worst.max((t.val(&[i, j, k]) + t.val(&[i, k, j])).abs());
        worst = worst.max((t.val(&[i, j, k]) + t.val(&[j, k, i]) + t.val(&[k, i, j])).abs());
    }
    for a in 0..m {
        let t1: f64 = (0..m).map(|i| t.val(&[i, i, a])).sum();
        let t2: f64 = (0..m).map(|i| t.val(&[i, a, i])).sum();
        let t3: f64 = (0..m).map(|i| t.val(&[a, i, i])).sum();
        worst = worst.max(t1.abs()).max(t2.abs()).max(t3.abs());
    }
    worst
}
