//! Dense tensors: jet-valued frame fields for differentiation, and plain
//! coordinate tensors for reporting and algebra.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Space};

/// Visit every multi-index in `0..m` of length `rank`, last index fastest.
pub fn for_each_index(m: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    if rank == 0 {
        f(&idx);
        return;
    }
    if m == 0 {
        return;
    }
    loop {
        f(&idx);
        let mut s = rank;
        loop {
            if s == 0 {
                return;
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < m {
                break;
            }
            idx[s] = 0;
        }
    }
}

/// Frame components of a tensor field, as jets at one base point.
///
/// All base slots are covariant with respect to an orthonormal frame. An
/// optional leading target slot carries components of a section of the
/// pulled-back target bundle, also in an orthonormal frame.
#[derive(Clone, Debug)]
pub struct Field {
    pub m: usize,
    /// Target extent; 1 when the field has no target slot.
    pub nt: usize,
    pub tgt: bool,
    pub rank: usize,
    pub d: Vec<Jet>,
}

impl Field {
    pub fn build(m: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> Field {
        let mut d = Vec::with_capacity(m.pow(rank as u32));
        for_each_index(m, rank, |i| d.push(f(i)));
        Field { m, nt: 1, tgt: false, rank, d }
    }

    pub fn build_t(m: usize, n: usize, rank: usize, mut f: impl FnMut(usize, &[usize]) -> Jet) -> Field {
        let mut d = Vec::with_capacity(n * m.pow(rank as u32));
        for a in 0..n {
            for_each_index(m, rank, |i| d.push(f(a, i)));
        }
        Field { m, nt: n, tgt: true, rank, d }
    }

    pub fn scalar(j: Jet, m: usize) -> Field {
        Field { m, nt: 1, tgt: false, rank: 0, d: vec![j] }
    }

    fn off(&self, a: usize, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        let mut o = a;
        for &i in idx {
            o = o * self.m + i;
        }
        o
    }

    pub fn at(&self, idx: &[usize]) -> &Jet {
        &self.d[self.off(0, idx)]
    }

    pub fn at_t(&self, a: usize, idx: &[usize]) -> &Jet {
        &self.d[self.off(a, idx)]
    }

    pub fn val(&self, idx: &[usize]) -> f64 {
        self.at(idx).value()
    }

    pub fn val_t(&self, a: usize, idx: &[usize]) -> f64 {
        self.at_t(a, idx).value()
    }

    pub fn space(&self) -> Option<&Arc<Space>> {
        self.d.first().map(|j| j.space())
    }

    /// Lowest jet order among the components.
    pub fn order(&self) -> usize {
        self.d.iter().map(|j| j.order()).min().unwrap_or(usize::MAX)
    }

    pub fn truncate(&self, ord: usize) -> Field {
        Field { d: self.d.iter().map(|j| j.truncate(ord)).collect(), ..self.clone_shape() }
    }

    fn clone_shape(&self) -> Field {
        Field { m: self.m, nt: self.nt, tgt: self.tgt, rank: self.rank, d: Vec::new() }
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Field {
        Field { d: self.d.iter().map(f).collect(), ..self.clone_shape() }
    }

    pub fn zip(&self, o: &Field, f: impl Fn(&Jet, &Jet) -> Jet) -> Field {
        assert_eq!(self.d.len(), o.d.len());
        Field { d: self.d.iter().zip(&o.d).map(|(a, b)| f(a, b)).collect(), ..self.clone_shape() }
    }

    /// Component values at the base point, in storage order.
    pub fn values(&self) -> Vec<f64> {
        self.d.iter().map(|j| j.value()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.d.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
    }

    /// Squared norm of the base-point values (frame is orthonormal).
    pub fn norm2(&self) -> f64 {
        self.d.iter().map(|j| j.value().powi(2)).sum()
    }
}

/// Coordinate tensor reported to users: all slots covariant unless flagged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub dim: usize,
    /// `true` marks a contravariant slot.
    pub contra: Vec<bool>,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn new(dim: usize, contra: Vec<bool>, data: Vec<f64>) -> Result<TensorValue> {
        if data.len() != dim.pow(contra.len() as u32) {
            return Err(Error::DimensionMismatch(format!(
                "{} components for dim {dim} rank {}",
                data.len(),
                contra.len()
            )));
        }
        Ok(TensorValue { dim, contra, data })
    }

    pub fn covariant(dim: usize, rank: usize, data: Vec<f64>) -> TensorValue {
        TensorValue { dim, contra: vec![false; rank], data }
    }

    pub fn rank(&self) -> usize {
        self.contra.len()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |o, &i| o * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.index(idx)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn sub(&self, o: &TensorValue) -> TensorValue {
        TensorValue {
            dim: self.dim,
            contra: self.contra.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Row-major square matrix helpers on `Vec<f64>`.
pub mod mat {
    /// Cholesky factor L (lower) with g = L Lᵀ, or None if not positive definite.
    pub fn cholesky(g: &[f64], m: usize) -> Option<Vec<f64>> {
        let mut l = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = g[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * m + i] = s.sqrt();
                } else {
                    l[i * m + j] = s / l[j * m + j];
                }
            }
        }
        Some(l)
    }

    pub fn det_spd(g: &[f64], m: usize) -> f64 {
        match cholesky(g, m) {
            Some(l) => (0..m).map(|i| l[i * m + i]).product::<f64>().powi(2),
            None => 0.0,
        }
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(a: &[f64], m: usize) -> Option<Vec<f64>> {
        let mut w = a.to_vec();
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| w[x * m + c].abs().total_cmp(&w[y * m + c].abs()))?;
            if w[p * m + c].abs() < 1e-300 {
                return None;
            }
            for k in 0..m {
                w.swap(c * m + k, p * m + k);
                inv.swap(c * m + k, p * m + k);
            }
            let d = w[c * m + c];
            for k in 0..m {
                w[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = w[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            w[r * m + k] -= f * w[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let aik = a[i * m + k];
                for j in 0..m {
                    c[i * m + j] += aik * b[k * m + j];
                }
            }
        }
        c
    }

    pub fn trace(a: &[f64], m: usize) -> f64 {
        (0..m).map(|i| a[i * m + i]).sum()
    }

    pub fn identity(m: usize) -> Vec<f64> {
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = 1.0;
        }
        a
    }
}

/// Kulkarni–Nomizu product of two symmetric 2-tensors:
/// (A⊙B)_{ijkl} = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il.
pub fn kulkarni_nomizu(a: &TensorValue, b: &TensorValue) -> Result<TensorValue> {
    if a.rank() != 2 || b.rank() != 2 || a.dim != b.dim {
        return Err(Error::DimensionMismatch("Kulkarni–Nomizu needs two 2-tensors of equal dimension".into()));
    }
    let m = a.dim;
    let g = |t: &TensorValue, i: usize, j: usize| t.data[i * m + j];
    let mut data = Vec::with_capacity(m.pow(4));
    for_each_index(m, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        data.push(g(a, i, k) * g(b, j, l) + g(a, j, l) * g(b, i, k) - g(a, i, l) * g(b, j, k) - g(a, j, k) * g(b, i, l));
    });
    Ok(TensorValue::covariant(m, 4, data))
}

/// Jet-valued Kulkarni–Nomizu product of frame 2-tensors.
pub fn kn_field(a: &Field, b: &Field) -> Field {
    let m = a.m;
    Field::build(m, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        a.at(&[i, k]) * b.at(&[j, l]) + a.at(&[j, l]) * b.at(&[i, k])
            - a.at(&[i, l]) * b.at(&[j, k])
            - a.at(&[j, k]) * b.at(&[i, l])
    })
}

/// Raise (covariant → contravariant) or lower the given slot with the metric `g`
/// (row-major m×m).
pub fn raise_lower(t: &TensorValue, g: &[f64], slot: usize) -> Result<TensorValue> {
    let m = t.dim;
    if slot >= t.rank() {
        return Err(Error::Invalid(format!("slot {slot} out of range for rank {}", t.rank())));
    }
    if g.len() != m * m {
        return Err(Error::DimensionMismatch("metric size".into()));
    }
    let det = mat::det_spd(g, m);
    if det <= crate::tol::EPS_DET {
        return Err(Error::SingularMetric { det });
    }
    let use_m = if t.contra[slot] { g.to_vec() } else { mat::inverse(g, m).ok_or(Error::SingularMetric { det })? };
    let mut out = t.clone();
    out.contra[slot] = !t.contra[slot];
    let r = t.rank();
    for_each_index(m, r, |idx| {
        let mut s = 0.0;
        let mut j = idx.to_vec();
        for p in 0..m {
            j[slot] = p;
            s += use_m[idx[slot] * m + p] * t.get(&j);
        }
        let o = out.index(idx);
        out.data[o] = s;
    });
    Ok(out)
}
