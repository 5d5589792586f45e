//! Pointwise differential-geometric context.
//!
//! [`Geo`] expands every field of a scene as a Taylor jet at one point and
//! builds a smooth orthonormal frame e_a = Σ_i E_ia ∂_i with E = L^{−T}, where
//! g = L Lᵀ is the Cholesky factorization of the metric field. Because the
//! frame is itself a jet, frame components can be differentiated exactly: the
//! covariant derivative of any frame tensor is
//!
//! (∇T)_{a₁…a_r c} = e_c(T_{a₁…a_r}) − Σ_s Σ_d Γ̂^d_{c a_s} T_{…d…}
//!
//! with the frame connection Γ̂^d_{cb} = θ^d(∇_{e_c} e_b). Sections of the
//! pulled-back target bundle use the analogous Cholesky frame of h(φ).
//!
//! Tensor index conventions: derivative indices are appended last, repeated
//! frame indices are plain sums, and
//! R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{kp}Γ^p_{lj} − Γ^i_{lp}Γ^p_{kj},
//! R_{ijkl} = g_{ip}R^p_{jkl}, Ric_{ij} = R_{kikj}, so the unit sphere has
//! R_{ijkl} = g_ik g_jl − g_il g_jk and Ric = (m−1)g.

use std::cell::OnceCell;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{jsum, Jet, Space, MAX_ORDER};
use crate::scene::Scene;
use crate::tensor::{for_each_index, kn_field, mat, Field};
use crate::tol::{EPS_DET, EPS_REG};

/// Jet Cholesky factor (lower triangular, row-major).
fn cholesky_jets(sp: &Arc<Space>, g: &[Jet], m: usize) -> Vec<Jet> {
    let mut l = vec![Jet::zero(sp); m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = g[i * m + j].clone();
            for k in 0..j {
                s -= &l[i * m + k] * &l[j * m + k];
            }
            l[i * m + j] = if i == j { s.sqrt() } else { s / &l[j * m + j] };
        }
    }
    l
}

/// E = L^{−T} for lower-triangular L.
fn inv_transpose_lower(sp: &Arc<Space>, l: &[Jet], m: usize) -> Vec<Jet> {
    let mut li = vec![Jet::zero(sp); m * m];
    for i in 0..m {
        let d = l[i * m + i].recip();
        for j in 0..i {
            let mut s = Jet::zero(sp);
            for k in j..i {
                s += &l[i * m + k] * &li[k * m + j];
            }
            li[i * m + j] = -(s * &d);
        }
        li[i * m + i] = d;
    }
    let mut e = vec![Jet::zero(sp); m * m];
    for i in 0..m {
        for a in 0..m {
            e[i * m + a] = li[a * m + i].clone();
        }
    }
    e
}

/// Target-side data along φ.
struct TargetFrame {
    n: usize,
    phi: Vec<Jet>,
    /// Cholesky factor of h(φ) and N = M^{−T}, row-major n×n.
    mm: Vec<Jet>,
    nn: Vec<Jet>,
    /// Target Christoffel symbols at φ, [a][b][c] = ^NΓ^a_{bc}.
    chris: Vec<Jet>,
    /// Pulled-back frame connection, [α][c][β].
    conn: Vec<Jet>,
}

pub struct Geo<'s> {
    pub scene: &'s Scene,
    pub m: usize,
    pub n: usize,
    pub order: usize,
    pub sp: Arc<Space>,
    pub x: Vec<f64>,
    pub xs: Vec<Jet>,
    /// Coordinate metric and inverse, row-major.
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    pub l: Vec<Jet>,
    pub e: Vec<Jet>,
    /// Coordinate Christoffel symbols, [i][j][k] = Γ^i_{jk}.
    pub gamma: Vec<Jet>,
    /// Frame connection, [d][c][b] = Γ̂^d_{cb}.
    pub fconn: Vec<Jet>,
    tf: Option<TargetFrame>,
    one: Jet,
    riem_coord: OnceCell<Vec<Jet>>,
    riem: OnceCell<Field>,
    ric: OnceCell<Field>,
    scal: OnceCell<Jet>,
    dphi: OnceCell<Field>,
    pull: OnceCell<Field>,
    ddphi: OnceCell<Field>,
    tau: OnceCell<Field>,
    ricphi: OnceCell<Field>,
    schouten: OnceCell<Field>,
    weyl: OnceCell<Field>,
    cotton: OnceCell<Field>,
    bach: OnceCell<Field>,
    u: OnceCell<Option<Jet>>,
    f: OnceCell<Option<Jet>>,
    hess_u: OnceCell<Field>,
    hess_f: OnceCell<Field>,
    upot: OnceCell<Jet>,
    ugrad: OnceCell<Field>,
    uhess: OnceCell<Vec<Jet>>,
    nriem: OnceCell<Vec<Jet>>,
}

impl<'s> Geo<'s> {
    /// Expand the scene at `x` with jets of total order `order`.
    pub fn new(scene: &'s Scene, x: &[f64], order: usize) -> Result<Geo<'s>> {
        Geo::with_det_floor(scene, x, order, EPS_DET)
    }

    /// Like `new` with a custom floor for det g; quadrature nodes close to
    /// a coordinate singularity of a polar chart use a smaller one.
    pub fn with_det_floor(scene: &'s Scene, x: &[f64], order: usize, floor: f64) -> Result<Geo<'s>> {
        if order > MAX_ORDER {
            return Err(Error::OrderExceeded { requested: order, max: MAX_ORDER });
        }
        if order == 0 {
            return Err(Error::DerivativeBudget("geometry needs at least one derivative".into()));
        }
        scene.chart.check(x)?;
        let m = scene.dim();
        let sp = Space::get(m, order);
        let xs = Jet::coordinates(&sp, x);
        let one = Jet::constant(&sp, 1.0);
        let mut g: Vec<Jet> = scene.metric.iter().map(|e| e.eval(&xs, &one)).collect();
        // symmetrize so that user input with tiny asymmetries stays consistent
        for i in 0..m {
            for j in 0..i {
                let s = (&g[i * m + j] + &g[j * m + i]) * 0.5;
                g[i * m + j] = s.clone();
                g[j * m + i] = s;
            }
        }
        let gv: Vec<f64> = g.iter().map(|j| j.value()).collect();
        let det = mat::det_spd(&gv, m);
        if !(det > floor) {
            return Err(Error::SingularMetric { det });
        }
        let l = cholesky_jets(&sp, &g, m);
        let e = inv_transpose_lower(&sp, &l, m);
        let mut ginv = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                ginv.push(jsum(&sp, (0..m).map(|a| &e[i * m + a] * &e[j * m + a])));
            }
        }
        // dg[(l*m + k)*m + j] = ∂_j g_lk
        let mut dg = Vec::with_capacity(m * m * m);
        for lk in 0..m * m {
            for j in 0..m {
                dg.push(g[lk].deriv(j));
            }
        }
        let dgi = |l_: usize, k: usize, j: usize| &dg[(l_ * m + k) * m + j];
        let mut gamma = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let s = jsum(
                        &sp,
                        (0..m).map(|l_| &ginv[i * m + l_] * (dgi(l_, k, j) + dgi(l_, j, k) - dgi(j, k, l_))),
                    );
                    gamma.push(s * 0.5);
                }
            }
        }
        let mut geo = Geo {
            scene,
            m,
            n: 0,
            order,
            sp: sp.clone(),
            x: x.to_vec(),
            xs,
            g,
            ginv,
            l,
            e,
            gamma,
            fconn: Vec::new(),
            tf: None,
            one,
            riem_coord: OnceCell::new(),
            riem: OnceCell::new(),
            ric: OnceCell::new(),
            scal: OnceCell::new(),
            dphi: OnceCell::new(),
            pull: OnceCell::new(),
            ddphi: OnceCell::new(),
            tau: OnceCell::new(),
            ricphi: OnceCell::new(),
            schouten: OnceCell::new(),
            weyl: OnceCell::new(),
            cotton: OnceCell::new(),
            bach: OnceCell::new(),
            u: OnceCell::new(),
            f: OnceCell::new(),
            hess_u: OnceCell::new(),
            hess_f: OnceCell::new(),
            upot: OnceCell::new(),
            ugrad: OnceCell::new(),
            uhess: OnceCell::new(),
            nriem: OnceCell::new(),
        };
        geo.fconn = geo.frame_connection();
        geo.tf = geo.target_frame()?;
        geo.n = geo.tf.as_ref().map_or(0, |t| t.n);
        Ok(geo)
    }

    fn frame_connection(&self) -> Vec<Jet> {
        let m = self.m;
        let e = &self.e;
        // e_c(E_kb) for all k, b, c
        let mut out = Vec::with_capacity(m * m * m);
        for d in 0..m {
            for c in 0..m {
                for b in 0..m {
                    let mut s = Jet::zero(&self.sp);
                    for k in 0..m {
                        let mut t = self.ed(&e[k * m + b], c);
                        for i in 0..m {
                            for j in 0..m {
                                let gm = &self.gamma[(k * m + i) * m + j];
                                if is_zero(gm) {
                                    continue;
                                }
                                t += &e[i * m + c] * &e[j * m + b] * gm;
                            }
                        }
                        s += &self.l[k * m + d] * t;
                    }
                    out.push(s);
                }
            }
        }
        out
    }

    fn target_frame(&self) -> Result<Option<TargetFrame>> {
        let Some(map) = &self.scene.map else { return Ok(None) };
        let n = map.dim();
        let sp = &self.sp;
        let phi: Vec<Jet> = map.components.iter().map(|e| e.eval(&self.xs, &self.one)).collect();
        let h: Vec<Jet> = map.target_metric.iter().map(|e| e.eval(&phi, &self.one)).collect();
        let hv: Vec<f64> = h.iter().map(|j| j.value()).collect();
        let det = mat::det_spd(&hv, n);
        if !(det > EPS_DET) {
            return Err(Error::SingularMetric { det });
        }
        let mm = cholesky_jets(sp, &h, n);
        let nn = inv_transpose_lower(sp, &mm, n);
        let hinv: Vec<Jet> = (0..n * n)
            .map(|ab| jsum(sp, (0..n).map(|c| &nn[(ab / n) * n + c] * &nn[(ab % n) * n + c])))
            .collect();
        let td = self.scene.target_derivs();
        let dh: Vec<Jet> = td.dh.iter().map(|e| e.eval(&phi, &self.one)).collect();
        // dh[(x*n + y)*n + z] = ∂_z h_xy
        let dhi = |x: usize, y: usize, z: usize| &dh[(x * n + y) * n + z];
        let mut chris = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = jsum(sp, (0..n).map(|d| &hinv[a * n + d] * (dhi(d, c, b) + dhi(d, b, c) - dhi(b, c, d))));
                    chris.push(s * 0.5);
                }
            }
        }
        let dphi_c: Vec<Vec<Jet>> = (0..n).map(|d| (0..self.m).map(|c| self.ed(&phi[d], c)).collect()).collect();
        let mut conn = Vec::with_capacity(n * self.m * n);
        for al in 0..n {
            for c in 0..self.m {
                for be in 0..n {
                    let mut s = Jet::zero(sp);
                    for b in 0..n {
                        let mut t = self.ed(&nn[b * n + be], c);
                        for d in 0..n {
                            for e_ in 0..n {
                                t += &chris[(b * n + d) * n + e_] * &dphi_c[d][c] * &nn[e_ * n + be];
                            }
                        }
                        s += &mm[b * n + al] * t;
                    }
                    conn.push(s);
                }
            }
        }
        Ok(Some(TargetFrame { n, phi, mm, nn, chris, conn }))
    }

    // ----- elementary helpers -----

    pub fn constant(&self, v: f64) -> Jet {
        Jet::constant(&self.sp, v)
    }

    pub fn zero(&self) -> Jet {
        Jet::zero(&self.sp)
    }

    pub fn delta(&self, a: usize, b: usize) -> Jet {
        self.constant(if a == b { 1.0 } else { 0.0 })
    }

    /// Jet of a base expression.
    pub fn eval(&self, e: &Expr) -> Jet {
        e.eval(&self.xs, &self.one)
    }

    /// Frame derivative e_c(F) = Σ_i E_ic ∂_i F.
    pub fn ed(&self, f: &Jet, c: usize) -> Jet {
        let m = self.m;
        jsum(&self.sp, (0..m).map(|i| &self.e[i * m + c] * f.deriv(i)))
    }

    pub fn sum(&self, it: impl IntoIterator<Item = Jet>) -> Jet {
        jsum(&self.sp, it)
    }

    /// Frame gradient of a scalar jet.
    pub fn grad(&self, s: &Jet) -> Field {
        Field::build(self.m, 1, |c| self.ed(s, c[0]))
    }

    /// Covariant derivative; the new index is appended last.
    pub fn cov(&self, t: &Field) -> Field {
        let m = self.m;
        let len = m.pow(t.rank as u32);
        let nt = if t.tgt { t.nt } else { 1 };
        // frame derivatives of every component
        let mut ecs: Vec<Vec<Jet>> = Vec::with_capacity(t.d.len());
        for comp in &t.d {
            let dd: Vec<Jet> = (0..m).map(|i| comp.deriv(i)).collect();
            ecs.push((0..m).map(|c| self.sum((0..m).map(|i| &self.e[i * m + c] * &dd[i]))).collect());
        }
        let mut d = Vec::with_capacity(t.d.len() * m);
        let mut idx_buf = vec![0usize; t.rank];
        for al in 0..nt {
            for flat in 0..len {
                // decode flat index
                let mut r = flat;
                for s in (0..t.rank).rev() {
                    idx_buf[s] = r % m;
                    r /= m;
                }
                for c in 0..m {
                    let mut v = ecs[al * len + flat][c].clone();
                    for s in 0..t.rank {
                        let a_s = idx_buf[s];
                        let stride = m.pow((t.rank - 1 - s) as u32);
                        let base = flat - a_s * stride;
                        for dd in 0..m {
                            let gm = &self.fconn[(dd * m + c) * m + a_s];
                            if is_zero(gm) {
                                continue;
                            }
                            v -= gm * &t.d[al * len + base + dd * stride];
                        }
                    }
                    if t.tgt {
                        let tf = self.tf.as_ref().expect("target section without a map");
                        for be in 0..nt {
                            let gm = &tf.conn[(al * m + c) * nt + be];
                            if is_zero(gm) {
                                continue;
                            }
                            v += gm * &t.d[be * len + flat];
                        }
                    }
                    d.push(v);
                }
            }
        }
        Field { m, nt: t.nt, tgt: t.tgt, rank: t.rank + 1, d }
    }

    /// Contract two base slots.
    pub fn contract(&self, t: &Field, s1: usize, s2: usize) -> Field {
        let m = self.m;
        let (a, b) = (s1.min(s2), s1.max(s2));
        assert!(a != b && b < t.rank);
        let mk = |al: usize, rest: &[usize]| {
            self.sum((0..m).map(|k| {
                let mut full = Vec::with_capacity(t.rank);
                let mut it = rest.iter();
                for s in 0..t.rank {
                    if s == a || s == b {
                        full.push(k);
                    } else {
                        full.push(*it.next().unwrap());
                    }
                }
                t.at_t(al, &full).clone()
            }))
        };
        if t.tgt {
            Field::build_t(m, t.nt, t.rank - 2, mk)
        } else {
            Field::build(m, t.rank - 2, |r| mk(0, r))
        }
    }

    /// Divergence on `slot`: Σ_c T_{…c…,c}.
    pub fn div(&self, t: &Field, slot: usize) -> Field {
        let c = self.cov(t);
        self.contract(&c, slot, t.rank)
    }

    /// Frame components → coordinate covariant components (base slots only).
    pub fn to_coords(&self, t: &Field) -> Vec<f64> {
        self.transform(t, &self.l, true)
    }

    /// Coordinate covariant components (values) → frame.
    pub fn coords_to_frame(&self, t: &Field) -> Field {
        let d = self.transform(t, &self.e, false);
        Field { d: d.into_iter().map(|v| self.constant(v)).collect(), ..t.clone() }
    }

    fn transform(&self, t: &Field, p: &[Jet], frame_to_coord: bool) -> Vec<f64> {
        // frame→coord: T_i.. = Σ L_ia T_a..; coord→frame: T_a.. = Σ E_ia T_i..
        let m = self.m;
        let pv: Vec<f64> = p.iter().map(|j| j.value()).collect();
        let mut cur = t.values();
        let len = m.pow(t.rank as u32);
        let nt = if t.tgt { t.nt } else { 1 };
        for s in 0..t.rank {
            let stride = m.pow((t.rank - 1 - s) as u32);
            let mut next = vec![0.0; cur.len()];
            for al in 0..nt {
                for flat in 0..len {
                    let a_s = (flat / stride) % m;
                    let base = flat - a_s * stride;
                    let mut acc = 0.0;
                    for q in 0..m {
                        let w = if frame_to_coord { pv[a_s * m + q] } else { pv[q * m + a_s] };
                        acc += w * cur[al * len + base + q * stride];
                    }
                    next[al * len + flat] = acc;
                }
            }
            cur = next;
        }
        cur
    }

    /// Frame components of a coordinate covector jet ω_i.
    pub fn covector_field(&self, w: &[Jet]) -> Field {
        let m = self.m;
        Field::build(m, 1, |a| self.sum((0..m).map(|i| &self.e[i * m + a[0]] * &w[i])))
    }

    /// Frame components of a coordinate vector jet X^i.
    pub fn vector_field(&self, v: &[Jet]) -> Field {
        let m = self.m;
        Field::build(m, 1, |a| self.sum((0..m).map(|i| &self.l[i * m + a[0]] * &v[i])))
    }

    /// Frame components of a coordinate covariant 2-tensor jet, row-major.
    pub fn two_tensor_field(&self, t: &[Jet]) -> Field {
        let m = self.m;
        Field::build(m, 2, |x| {
            let mut s = self.zero();
            for i in 0..m {
                for j in 0..m {
                    s += &self.e[i * m + x[0]] * &self.e[j * m + x[1]] * &t[i * m + j];
                }
            }
            s
        })
    }

    pub fn hess(&self, s: &Jet) -> Field {
        self.cov(&self.grad(s))
    }

    pub fn lap(&self, s: &Jet) -> Jet {
        self.trace(&self.hess(s))
    }

    /// Frame components of a coordinate vector, and back.
    pub fn vector_to_coords(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|a| self.e[i * m + a].value() * v[a]).sum()).collect()
    }

    // ----- base curvature -----

    /// Coordinate R_{ijkl}, all indices down.
    pub fn riem_coord(&self) -> &Vec<Jet> {
        self.riem_coord.get_or_init(|| {
            let m = self.m;
            let gm = |i: usize, j: usize, k: usize| &self.gamma[(i * m + j) * m + k];
            let mut dgam: Vec<Vec<Jet>> = Vec::with_capacity(m * m * m);
            for g in &self.gamma {
                dgam.push((0..m).map(|v| g.deriv(v)).collect());
            }
            let dg = |i: usize, j: usize, k: usize, v: usize| &dgam[(i * m + j) * m + k][v];
            let mut up = Vec::with_capacity(m.pow(4));
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        for l_ in 0..m {
                            if k == l_ {
                                up.push(self.zero());
                                continue;
                            }
                            let mut s = dg(i, l_, j, k) - dg(i, k, j, l_);
                            for p in 0..m {
                                s += gm(i, k, p) * gm(p, l_, j) - gm(i, l_, p) * gm(p, k, j);
                            }
                            up.push(s);
                        }
                    }
                }
            }
            let mut down = Vec::with_capacity(m.pow(4));
            for i in 0..m {
                for jkl in 0..m * m * m {
                    down.push(self.sum((0..m).map(|p| &self.g[i * m + p] * &up[p * m * m * m + jkl])));
                }
            }
            down
        })
    }

    /// Frame Riemann tensor R_{abcd}.
    pub fn riem(&self) -> &Field {
        self.riem.get_or_init(|| {
            let m = self.m;
            let mut cur = self.riem_coord().clone();
            for s in 0..4 {
                let stride = m.pow((3 - s) as u32);
                let mut next = Vec::with_capacity(cur.len());
                for flat in 0..m.pow(4) {
                    let a_s = (flat / stride) % m;
                    let base = flat - a_s * stride;
                    next.push(self.sum((0..m).map(|q| &self.e[q * m + a_s] * &cur[base + q * stride])));
                }
                cur = next;
            }
            Field { m, nt: 1, tgt: false, rank: 4, d: cur }
        })
    }

    pub fn ric(&self) -> &Field {
        self.ric.get_or_init(|| self.contract(self.riem(), 0, 2))
    }

    pub fn scal(&self) -> &Jet {
        self.scal.get_or_init(|| self.sum((0..self.m).map(|i| self.ric().at(&[i, i]).clone())))
    }

    pub fn metric_field(&self) -> Field {
        Field::build(self.m, 2, |i| self.delta(i[0], i[1]))
    }

    // ----- map quantities -----

    pub fn phi_jets(&self) -> &[Jet] {
        self.tf.as_ref().map_or(&[][..], |t| &t.phi[..])
    }

    /// Target Christoffel symbols at φ(x), [a][b][c].
    pub fn target_christoffel(&self) -> &[Jet] {
        self.tf.as_ref().map_or(&[][..], |t| &t.chris[..])
    }

    /// N = M^{−T} at φ(x), row-major; target-frame vector v^α has
    /// coordinate components Σ_α N_aα v^α.
    pub fn target_frame_matrix(&self) -> Vec<f64> {
        self.tf.as_ref().map_or(Vec::new(), |t| t.nn.iter().map(Jet::value).collect())
    }

    /// Target-frame vector → target coordinate components.
    pub fn target_vector_coords(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nn = self.target_frame_matrix();
        (0..n).map(|a| (0..n).map(|al| nn[a * n + al] * v[al]).sum()).collect()
    }

    /// dφ in frames: φ^α_c.
    pub fn dphi(&self) -> &Field {
        self.dphi.get_or_init(|| match &self.tf {
            None => Field::build_t(self.m, 0, 1, |_, _| unreachable!()),
            Some(tf) => {
                let n = tf.n;
                let ec: Vec<Vec<Jet>> = (0..n).map(|b| (0..self.m).map(|c| self.ed(&tf.phi[b], c)).collect()).collect();
                Field::build_t(self.m, n, 1, |al, c| self.sum((0..n).map(|b| &tf.mm[b * n + al] * &ec[b][c[0]])))
            }
        })
    }

    /// φ*h.
    pub fn pull(&self) -> &Field {
        self.pull.get_or_init(|| {
            let d = self.dphi();
            Field::build(self.m, 2, |i| self.sum((0..self.n).map(|a| d.at_t(a, &[i[0]]) * d.at_t(a, &[i[1]]))))
        })
    }

    pub fn dphi_norm2(&self) -> Jet {
        self.sum((0..self.m).map(|i| self.pull().at(&[i, i]).clone()))
    }

    /// ∇dφ: φ^α_{ij}.
    pub fn ddphi(&self) -> &Field {
        self.ddphi.get_or_init(|| self.cov(self.dphi()))
    }

    /// Tension field τ^α.
    pub fn tau(&self) -> &Field {
        self.tau.get_or_init(|| {
            let dd = self.ddphi();
            Field::build_t(self.m, self.n, 0, |a, _| self.sum((0..self.m).map(|k| dd.at_t(a, &[k, k]).clone())))
        })
    }

    pub fn tau_norm2(&self) -> Jet {
        self.sum((0..self.n).map(|a| self.tau().at_t(a, &[]).sqr()))
    }

    /// Frame target Riemann tensor at φ(x), all indices down, [α][β][γ][δ].
    pub fn target_riem(&self) -> &Vec<Jet> {
        self.nriem.get_or_init(|| {
            let Some(tf) = &self.tf else { return Vec::new() };
            let n = tf.n;
            let sp = &self.sp;
            let td = self.scene.target_derivs();
            let h: Vec<Jet> =
                self.scene.map.as_ref().unwrap().target_metric.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
            let dh: Vec<Jet> = td.dh.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
            let ddh: Vec<Jet> = td.ddh.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
            let hinv: Vec<Jet> = (0..n * n)
                .map(|ab| jsum(sp, (0..n).map(|c| &tf.nn[(ab / n) * n + c] * &tf.nn[(ab % n) * n + c])))
                .collect();
            let dhi = |x: usize, y: usize, z: usize| &dh[(x * n + y) * n + z];
            let ddhi = |x: usize, y: usize, z: usize, w: usize| &ddh[((x * n + y) * n + z) * n + w];
            // ∂_e h^{ad} = −h^{ap} ∂_e h_pq h^{qd}
            let dhinv = |a: usize, d: usize, e: usize| {
                let mut s = Jet::zero(sp);
                for p in 0..n {
                    for q in 0..n {
                        s += &hinv[a * n + p] * dhi(p, q, e) * &hinv[q * n + d];
                    }
                }
                -s
            };
            // first-kind combination Γ_{d,bc} = ½(∂_b h_dc + ∂_c h_db − ∂_d h_bc) and its derivative
            let g1 = |d: usize, b: usize, c: usize| (dhi(d, c, b) + dhi(d, b, c) - dhi(b, c, d)) * 0.5;
            let dg1 = |d: usize, b: usize, c: usize, e: usize| {
                (ddhi(d, c, b, e) + ddhi(d, b, c, e) - ddhi(b, c, d, e)) * 0.5
            };
            let chris = |a: usize, b: usize, c: usize| &tf.chris[(a * n + b) * n + c];
            let dchris = |a: usize, b: usize, c: usize, e: usize| {
                jsum(sp, (0..n).map(|d| dhinv(a, d, e) * g1(d, b, c) + &hinv[a * n + d] * dg1(d, b, c, e)))
            };
            let mut up = Vec::with_capacity(n.pow(4));
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut s = dchris(a, d, b, c) - dchris(a, c, b, d);
                            for p in 0..n {
                                s += chris(a, c, p) * chris(p, d, b) - chris(a, d, p) * chris(p, c, b);
                            }
                            up.push(s);
                        }
                    }
                }
            }
            let mut cur = Vec::with_capacity(n.pow(4));
            for a in 0..n {
                for bcd in 0..n * n * n {
                    cur.push(jsum(sp, (0..n).map(|p| &h[a * n + p] * &up[p * n * n * n + bcd])));
                }
            }
            for s in 0..4 {
                let stride = n.pow((3 - s) as u32);
                let mut next = Vec::with_capacity(cur.len());
                for flat in 0..n.pow(4) {
                    let a_s = (flat / stride) % n;
                    let base = flat - a_s * stride;
                    next.push(jsum(sp, (0..n).map(|q| &tf.nn[q * n + a_s] * &cur[base + q * stride])));
                }
                cur = next;
            }
            cur
        })
    }

    pub fn target_riem_at(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet {
        let n = self.n;
        &self.target_riem()[((a * n + b) * n + c) * n + d]
    }

    // ----- potential -----

    /// U(φ(x)).
    pub fn upot(&self) -> &Jet {
        self.upot.get_or_init(|| match &self.scene.potential {
            None => self.zero(),
            Some(p) => p.eval(self.phi_jets(), &self.one),
        })
    }

    /// Target gradient (∇U)(φ) in the target frame.
    pub fn ugrad(&self) -> &Field {
        self.ugrad.get_or_init(|| {
            let n = self.n;
            match &self.tf {
                None => Field::build_t(self.m, 0, 0, |_, _| unreachable!()),
                Some(tf) => {
                    let td = self.scene.target_derivs();
                    let du: Vec<Jet> = td.du.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
                    Field::build_t(self.m, n, 0, |al, _| self.sum((0..n).map(|a| &tf.nn[a * n + al] * &du[a])))
                }
            }
        })
    }

    /// Target Hessian of U at φ(x) in the target frame, row-major n×n.
    pub fn uhess(&self) -> &Vec<Jet> {
        self.uhess.get_or_init(|| {
            let n = self.n;
            let Some(tf) = &self.tf else { return Vec::new() };
            let td = self.scene.target_derivs();
            let du: Vec<Jet> = td.du.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
            let ddu: Vec<Jet> = td.ddu.iter().map(|e| e.eval(&tf.phi, &self.one)).collect();
            let coord: Vec<Jet> = (0..n * n)
                .map(|ab| {
                    let (a, b) = (ab / n, ab % n);
                    &ddu[ab] - self.sum((0..n).map(|c| &tf.chris[(c * n + a) * n + b] * &du[c]))
                })
                .collect();
            let mut out = Vec::with_capacity(n * n);
            for al in 0..n {
                for be in 0..n {
                    let mut s = self.zero();
                    for a in 0..n {
                        for b in 0..n {
                            s += &tf.nn[a * n + al] * &tf.nn[b * n + be] * &coord[a * n + b];
                        }
                    }
                    out.push(s);
                }
            }
            out
        })
    }

    pub fn uhess_at(&self, a: usize, b: usize) -> &Jet {
        &self.uhess()[a * self.n + b]
    }

    // ----- φ-curvatures -----

    pub fn alpha(&self) -> f64 {
        self.scene.alpha
    }

    pub fn ricphi(&self) -> &Field {
        self.ricphi.get_or_init(|| {
            let a = self.alpha();
            self.ric().zip(self.pull(), |r, p| r - p * a)
        })
    }

    pub fn sphi(&self) -> Jet {
        self.scal() - self.dphi_norm2() * self.alpha()
    }

    /// Requires m ≥ 3.
    pub fn schouten(&self) -> &Field {
        self.schouten.get_or_init(|| {
            let m = self.m as f64;
            let s = self.sphi() * (1.0 / (2.0 * (m - 1.0)));
            let r = self.ricphi();
            Field::build(self.m, 2, |i| if i[0] == i[1] { r.at(i) - &s } else { r.at(i).clone() })
        })
    }

    pub fn weyl(&self) -> &Field {
        self.weyl.get_or_init(|| {
            let kn = kn_field(self.schouten(), &self.metric_field());
            let c = 1.0 / (self.m as f64 - 2.0);
            self.riem().zip(&kn, |r, k| r - k * c)
        })
    }

    /// C^φ_{ijk} = A^φ_{ij,k} − A^φ_{ik,j}.
    pub fn cotton(&self) -> &Field {
        self.cotton.get_or_init(|| {
            let da = self.cov(self.schouten());
            Field::build(self.m, 3, |x| da.at(&[x[0], x[1], x[2]]) - da.at(&[x[0], x[2], x[1]]))
        })
    }

    /// φ-Bach tensor from its component formula.
    pub fn bach(&self) -> &Field {
        self.bach.get_or_init(|| {
            let m = self.m;
            let mf = m as f64;
            let al = self.alpha();
            let dc = self.div(self.cotton(), 2);
            let rp = self.ricphi();
            let w = self.weyl();
            let d = self.dphi();
            let dd = self.ddphi();
            let tau = self.tau();
            let dtau = self.cov(tau);
            let t2 = self.tau_norm2();
            Field::build(m, 2, |x| {
                let (i, j) = (x[0], x[1]);
                let mut s = dc.at(&[i, j]).clone();
                for t in 0..m {
                    for k in 0..m {
                        s += rp.at(&[t, k]) * w.at(&[t, i, k, j]);
                    }
                }
                for t in 0..m {
                    let pt = self.sum((0..self.n).map(|a| d.at_t(a, &[t]) * d.at_t(a, &[i])));
                    s -= rp.at(&[t, j]) * pt * al;
                }
                let mut q = self.zero();
                for a in 0..self.n {
                    q += dd.at_t(a, &[i, j]) * tau.at_t(a, &[]) - dtau.at_t(a, &[j]) * d.at_t(a, &[i]);
                }
                if i == j {
                    q -= &t2 * (1.0 / (mf - 2.0));
                }
                s += q * al;
                s * (1.0 / (mf - 2.0))
            })
        })
    }

    // ----- potential functions u, f, μ, p, λ -----

    pub fn u(&self) -> Option<&Jet> {
        self.u
            .get_or_init(|| {
                if let Some(u) = &self.scene.u {
                    Some(self.eval(u))
                } else {
                    self.scene.f.as_ref().map(|f| (-self.eval(f)).exp())
                }
            })
            .as_ref()
    }

    pub fn f(&self) -> Option<&Jet> {
        self.f
            .get_or_init(|| {
                if let Some(f) = &self.scene.f {
                    Some(self.eval(f))
                } else {
                    self.scene.u.as_ref().map(|u| -self.eval(u).ln())
                }
            })
            .as_ref()
    }

    pub fn require_u(&self) -> Result<&Jet> {
        let u = self.u().ok_or_else(|| Error::MissingField("u".into()))?;
        if !(u.value() > EPS_REG) {
            return Err(Error::BoundaryPoint { u: u.value() });
        }
        Ok(u)
    }

    pub fn require_f(&self) -> Result<&Jet> {
        self.f().ok_or_else(|| Error::MissingField("f".into()))
    }

    pub fn hess_u(&self) -> Result<&Field> {
        let u = self.require_u()?;
        Ok(self.hess_u.get_or_init(|| self.cov(&self.grad(u))))
    }

    pub fn hess_f(&self) -> Result<&Field> {
        let f = self.require_f()?;
        Ok(self.hess_f.get_or_init(|| self.cov(&self.grad(f))))
    }

    pub fn trace(&self, t: &Field) -> Jet {
        self.sum((0..self.m).map(|i| t.at(&[i, i]).clone()))
    }

    pub fn named(&self, which: &str) -> Result<Jet> {
        let e = match which {
            "mu" => self.scene.mu.as_ref(),
            "p" => self.scene.p.as_ref(),
            "lambda" => self.scene.lambda.as_ref(),
            other => self.scene.aux.get(other),
        };
        e.map(|e| self.eval(e)).ok_or_else(|| Error::MissingField(which.into()))
    }

    /// (φ^* of a target covector)·(base vector): Σ_α w^α φ^α_i for a target vector w given per α.
    pub fn dphi_apply(&self, v: &[Jet]) -> Vec<Jet> {
        let d = self.dphi();
        (0..self.n).map(|a| self.sum((0..self.m).map(|i| d.at_t(a, &[i]) * &v[i]))).collect()
    }
}

fn is_zero(j: &Jet) -> bool {
    j.coeffs().iter().all(|&v| v == 0.0)
}

/// Every multi-index of `rank` over `m`, as owned vectors.
pub fn indices(m: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_index(m, rank, |i| out.push(i.to_vec()));
    out
}
