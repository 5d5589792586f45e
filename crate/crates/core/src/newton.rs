//! Elementary symmetric functions, Newton operators P_k and the operators
//! L_k, Codazzi diagnostics and integral obstructions of Kazdan–Warner type.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::Geo;
use crate::jet::{Jet, Scalar};
use crate::quadrature::{QuadratureGrid, NODE_DET_FLOOR};
use crate::scene::{Scene, TensorSpec};
use crate::tensor::Field;
use crate::tol::Tier;

/// Gate for the Codazzi defect in the integral obstruction.
pub const CODAZZI_GATE: f64 = 1e-5;

pub fn binom(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// c_k = (m − k)·C(m, k).
pub fn c_k(m: usize, k: usize) -> f64 {
    (m as f64 - k as f64) * binom(m, k)
}

fn matmul<S: Scalar>(a: &[S], b: &[S], m: usize) -> Vec<S> {
    let zero = a[0].lift(0.0);
    let mut c = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut s = zero.clone();
            for k in 0..m {
                s = s.plus(&a[i * m + k].times(&b[k * m + j]));
            }
            c.push(s);
        }
    }
    c
}

fn trace<S: Scalar>(a: &[S], m: usize) -> S {
    (0..m).fold(a[0].lift(0.0), |s, i| s.plus(&a[i * m + i]))
}

/// Faddeev–LeVerrier chain: S_0..S_{k_max} and P_0..P_{k_max}.
pub fn newton_chain<S: Scalar>(a: &[S], m: usize, k_max: usize) -> (Vec<S>, Vec<Vec<S>>) {
    let one = a[0].lift(1.0);
    let zero = a[0].lift(0.0);
    let id: Vec<S> = (0..m * m).map(|i| if i % (m + 1) == 0 { one.clone() } else { zero.clone() }).collect();
    let mut s = vec![one];
    let mut p = vec![id];
    for k in 1..=k_max {
        let ap = matmul(a, &p[k - 1], m);
        let sk = trace(&ap, m).times(&a[0].lift(1.0 / k as f64));
        let pk: Vec<S> = (0..m * m)
            .map(|i| if i % (m + 1) == 0 { sk.minus(&ap[i]) } else { ap[i].negate() })
            .collect();
        s.push(sk);
        p.push(pk);
    }
    (s, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymFunctions {
    pub k: usize,
    pub s_k: f64,
    pub sigma_k: f64,
}

fn check_square(a: &[f64], m: usize, k: usize) -> Result<()> {
    if a.len() != m * m || m == 0 {
        return Err(Error::DimensionMismatch(format!("{} entries for an {m}×{m} matrix", a.len())));
    }
    if k > m {
        return Err(Error::KOutOfRange { k, m });
    }
    Ok(())
}

pub fn sym_functions(a: &[f64], m: usize, k: usize) -> Result<SymFunctions> {
    check_square(a, m, k)?;
    let (s, _) = newton_chain(a, m, k);
    Ok(SymFunctions { k, s_k: s[k], sigma_k: s[k] / binom(m, k) })
}

/// All σ_0..σ_m.
pub fn sigmas(a: &[f64], m: usize) -> Vec<f64> {
    let (s, _) = newton_chain(a, m, m);
    s.iter().enumerate().map(|(k, v)| v / binom(m, k)).collect()
}

pub fn newton_operator(a: &[f64], m: usize, k: usize) -> Result<Vec<f64>> {
    check_square(a, m, k)?;
    let (_, mut p) = newton_chain(a, m, k);
    Ok(p.swap_remove(k))
}

/// Frame components of the scene's symmetric tensor field A.
pub fn tensor_field(geo: &Geo) -> Result<Field> {
    let m = geo.m;
    let spec = geo.scene.tensor.as_ref().ok_or_else(|| Error::MissingField("tensor".into()))?;
    Ok(match spec {
        TensorSpec::ShiftedSchouten => {
            let c = geo.upot().clone() * (1.0 / (m as f64 - 1.0));
            let a = geo.schouten();
            Field::build(m, 2, |i| if i[0] == i[1] { a.at(i) - &c } else { a.at(i).clone() })
        }
        TensorSpec::HessPlus(w) => {
            let wj = geo.eval(w);
            let h = geo.hess(&wj);
            Field::build(m, 2, |i| if i[0] == i[1] { h.at(i) + &wj } else { h.at(i).clone() })
        }
        TensorSpec::Metric(c) => Field::build(m, 2, |i| geo.delta(i[0], i[1]) * *c),
        TensorSpec::Components(cs) => {
            let js: Vec<Jet> = cs.iter().map(|e| geo.eval(e)).collect();
            let t = geo.two_tensor_field(&js);
            Field::build(m, 2, |i| (t.at(i) + t.at(&[i[1], i[0]])) * 0.5)
        }
    })
}

/// Jet order of `tensor_field` output relative to the geometry order.
fn tensor_loss(scene: &Scene) -> usize {
    match scene.tensor {
        Some(TensorSpec::ShiftedSchouten) | Some(TensorSpec::HessPlus(_)) => 2,
        _ => 0,
    }
}

fn field_from(m: usize, v: &[Jet]) -> Field {
    Field::build(m, 2, |i| v[i[0] * m + i[1]].clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct CodazziDivergence {
    pub k: usize,
    /// C(A)_jit = A_ji,t − A_jt,i, index order (j, i, t).
    pub codazzi: Vec<f64>,
    pub codazzi_sup: f64,
    pub div_pk: Vec<f64>,
    pub div_sup: f64,
    pub formula_defect: f64,
}

pub fn codazzi_and_divergence(scene: &Scene, x: &[f64], k: usize) -> Result<CodazziDivergence> {
    let m = scene.dim();
    if k == 0 || k > m {
        return Err(Error::KOutOfRange { k, m });
    }
    let geo = Geo::new(scene, x, tensor_loss(scene) + 1)?;
    codazzi_at(&geo, k)
}

fn codazzi_at(geo: &Geo, k: usize) -> Result<CodazziDivergence> {
    let m = geo.m;
    let a = tensor_field(geo)?;
    let da = geo.cov(&a);
    let (_, p) = newton_chain(&a.d, m, k);
    let pk = field_from(m, &p[k]);
    let pk1 = field_from(m, &p[k - 1]);
    let dk = geo.div(&pk, 1).values();
    let dk1 = geo.div(&pk1, 1).values();
    let mut codazzi = Vec::with_capacity(m * m * m);
    for j in 0..m {
        for i in 0..m {
            for t in 0..m {
                codazzi.push(da.val(&[j, i, t]) - da.val(&[j, t, i]));
            }
        }
    }
    let p1 = pk1.values();
    let mut defect: f64 = 0.0;
    for i in 0..m {
        let mut v = dk[i];
        for j in 0..m {
            v += a.val(&[i, j]) * dk1[j];
            for t in 0..m {
                v += codazzi[(j * m + i) * m + t] * p1[j * m + t];
            }
        }
        defect = defect.max(v.abs());
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    Ok(CodazziDivergence { k, codazzi_sup: sup(&codazzi), codazzi, div_sup: sup(&dk), div_pk: dk, formula_defect: defect })
}

#[derive(Clone, Debug, Serialize)]
pub struct LkValue {
    pub k: usize,
    /// tr(P_k ∘ Hess u).
    pub value: f64,
    /// div(P_k ∇u) − g(div P_k, ∇u).
    pub divergence_form: f64,
}

pub fn lk_apply(scene: &Scene, x: &[f64], k: usize) -> Result<LkValue> {
    let m = scene.dim();
    if k > m {
        return Err(Error::KOutOfRange { k, m });
    }
    let geo = Geo::new(scene, x, (tensor_loss(scene) + 1).max(2) + 1)?;
    let u = geo.require_u()?;
    let a = tensor_field(&geo)?;
    let (_, p) = newton_chain(&a.d, m, k);
    let pk = field_from(m, &p[k]);
    let gu = geo.grad(u);
    let h = geo.hess(u);
    let value: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| pk.val(&[i, j]) * h.val(&[j, i])).sum();
    let flux = Field::build(m, 1, |i| geo.sum((0..m).map(|j| pk.at(&[i[0], j]) * gu.at(&[j]))));
    let dflux = geo.div(&flux, 0).d[0].value();
    let dp = geo.div(&pk, 1).values();
    let corr: f64 = (0..m).map(|j| dp[j] * gu.val(&[j])).sum();
    Ok(LkValue { k, value, divergence_form: dflux - corr })
}

/// L_k u for Hess u = p·g + q·du⊗du − l·A, directly and through
/// c_k[pσ_k − lσ_{k+1}] + q·g(P_k∇u, ∇u).
pub fn lk_structured(a: &[f64], m: usize, k: usize, p: f64, q: f64, l: f64, grad_u: &[f64]) -> Result<(f64, f64)> {
    check_square(a, m, k)?;
    let (s, ps) = newton_chain(a, m, (k + 1).min(m));
    let pk = &ps[k];
    let mut direct = 0.0;
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            let h = p * f64::from(i == j) + q * grad_u[i] * grad_u[j] - l * a[i * m + j];
            direct += pk[i * m + j] * h;
            quad += pk[i * m + j] * grad_u[i] * grad_u[j];
        }
    }
    let sig = |j: usize| if j <= m { s[j] / binom(m, j) } else { 0.0 };
    let closed = c_k(m, k) * (p * sig(k) - l * sig(k + 1)) + q * quad;
    Ok((direct, closed))
}

#[derive(Clone, Debug, Serialize)]
pub struct KazdanWarner {
    pub k: usize,
    pub level: usize,
    pub nodes: usize,
    /// ∫∇u(σ_k).
    pub lhs: f64,
    /// −∫m(σ_1σ_k − σ_{k+1})u.
    pub rhs_system: f64,
    /// −(m/c_k)∫Hess u : (P_{k−1}∘A − (k/m)S_k g).
    pub rhs_general: f64,
    /// The right-hand side the defect refers to.
    pub rhs: f64,
    pub system_form: bool,
    pub defect: f64,
    pub codazzi_sup: f64,
    pub u_min: f64,
    /// min over nodes of σ_1σ_k − σ_{k+1}.
    pub anselli_min: f64,
    /// σ_1, …, σ_k > 0 at every node.
    pub anselli_hypotheses: bool,
    /// σ_1σ_k ≥ σ_{k+1} within the algebraic tier, when the hypotheses hold.
    pub anselli_holds: Option<bool>,
    pub positive_point: bool,
    pub volume: f64,
}

/// Integral obstruction on a closed scene. The system form of the
/// right-hand side is used for A = A^φ − U(φ)g/(m−1); other tensors use
/// the general form.
pub fn kazdan_warner(scene: &Scene, k: usize, grid: &QuadratureGrid) -> Result<KazdanWarner> {
    let m = scene.dim();
    // c_m = 0, so k = m carries no identity
    if k == 0 || k >= m {
        return Err(Error::KOutOfRange { k, m });
    }
    if scene.closure.is_none() {
        return Err(Error::NotClosed(scene.name.clone()));
    }
    let order = tensor_loss(scene) + 1;
    let coef = m as f64 / c_k(m, k);
    let mut u_min = f64::INFINITY;
    let mut cod: f64 = 0.0;
    let mut ans = f64::INFINITY;
    let mut cone = true;
    let mut positive = false;
    let sums = grid.integrate(3, |x, regular| {
        let geo = Geo::with_det_floor(scene, x, order.max(2), NODE_DET_FLOOR)?;
        let u = geo.require_u().map_err(|e| match e {
            Error::BoundaryPoint { u } => Error::UPositivityViolated(u),
            e => e,
        })?;
        u_min = u_min.min(u.value());
        let a = tensor_field(&geo)?;
        if regular {
            let da = geo.cov(&a);
            for j in 0..m {
                for i in 0..m {
                    for t in 0..i {
                        cod = cod.max((da.val(&[j, i, t]) - da.val(&[j, t, i])).abs());
                    }
                }
            }
        }
        let kk = (k + 1).min(m);
        let (s, p) = newton_chain(&a.d, m, kk);
        let sig: Vec<Jet> = s.iter().enumerate().map(|(j, v)| v * (1.0 / binom(m, j))).collect();
        let sv: Vec<f64> = sig.iter().map(|j| j.value()).collect();
        let s_next = if k < m { sv[k + 1] } else { 0.0 };
        let an = sv[1] * sv[k] - s_next;
        if regular {
            ans = ans.min(an);
            cone &= (1..=k).all(|j| sv[j] > 0.0);
            let av: Vec<f64> = a.values();
            positive |= nalgebra::DMatrix::from_row_slice(m, m, &av).symmetric_eigen().eigenvalues.min() > 0.0;
        }
        let gu = geo.grad(u);
        let gs = geo.grad(&sig[k]);
        let lhs: f64 = (0..m).map(|i| gu.val(&[i]) * gs.val(&[i])).sum();
        let h = geo.hess(u);
        let pa = matmul(&p[k - 1], &a.d, m);
        let mut hp = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut pc = pa[i * m + j].value();
                if i == j {
                    pc -= k as f64 / m as f64 * s[k].value();
                }
                hp += h.val(&[i, j]) * pc;
            }
        }
        Ok(vec![lhs, -(m as f64) * an * u.value(), -coef * hp])
    })?;
    if u_min <= 0.0 {
        return Err(Error::UPositivityViolated(u_min));
    }
    if cod > CODAZZI_GATE {
        return Err(Error::NotCodazzi(cod));
    }
    let system_form = matches!(scene.tensor, Some(TensorSpec::ShiftedSchouten));
    let rhs = if system_form { sums[1] } else { sums[2] };
    Ok(KazdanWarner {
        k,
        level: grid.level,
        nodes: grid.len(),
        lhs: sums[0],
        rhs_system: sums[1],
        rhs_general: sums[2],
        rhs,
        system_form,
        defect: sums[0] - rhs,
        codazzi_sup: cod,
        u_min,
        anselli_min: ans,
        anselli_hypotheses: cone,
        anselli_holds: cone.then_some(ans >= -Tier::Alg.tol()),
        positive_point: positive,
        volume: grid.volume(),
    })
}

/// ∫ div(F ∇G) over a closed scene; vanishes for smooth F, G.
pub fn divergence_integral(scene: &Scene, f: &Expr, g: &Expr, grid: &QuadratureGrid) -> Result<f64> {
    let out = grid.integrate(1, |x, _| {
        let geo = Geo::with_det_floor(scene, x, 2, NODE_DET_FLOOR)?;
        let fj = geo.eval(f);
        let gj = geo.eval(g);
        let v = geo.grad(&gj).map(|c| c * &fj);
        Ok(vec![geo.div(&v, 0).d[0].value()])
    })?;
    Ok(out[0])
}
