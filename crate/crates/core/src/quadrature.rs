//! Product quadrature on closed scenes: geodesic polar charts of spheres
//! and periodic boxes.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::{Closure, Scene};
use crate::tensor::mat;

pub const POLE_EXCLUSION: f64 = 1e-3;

/// Determinant floor for nodes of a polar chart; nodes never sit on the
/// degenerate locus, only close to it.
pub const NODE_DET_FLOOR: f64 = 1e-200;

/// Condition number of g above which a node only contributes to sums.
pub const METRIC_COND_MAX: f64 = 1e6;

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureGrid {
    pub level: usize,
    pub pole_exclusion: f64,
    pub nodes: Vec<Vec<f64>>,
    /// Node weights including the volume element √det g.
    pub weights: Vec<f64>,
    /// Nodes where g is well conditioned; pointwise gates only look at
    /// these.
    pub regular: Vec<bool>,
}

/// Nodes per polar direction at a refinement level.
pub fn polar_nodes(level: usize) -> usize {
    4 * (level + 1)
}

fn gauss(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("at least one node"));
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| (c + h * x, h * w)).collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

fn trapezoid(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..n).map(|i| (a + (i as f64 + 0.5) * h, h)).collect()
}

fn product(axes: &[Vec<(f64, f64)>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for ax in axes {
        let mut nn = Vec::with_capacity(nodes.len() * ax.len());
        let mut nw = Vec::with_capacity(nodes.len() * ax.len());
        for (x, w) in nodes.iter().zip(&weights) {
            for &(t, v) in ax {
                let mut p = x.clone();
                p.push(t);
                nn.push(p);
                nw.push(w * v);
            }
        }
        nodes = nn;
        weights = nw;
    }
    (nodes, weights)
}

impl QuadratureGrid {
    pub fn build(scene: &Scene, level: usize, pole_exclusion: f64) -> Result<QuadratureGrid> {
        if level == 0 {
            return Err(Error::Invalid("refinement level starts at 1".into()));
        }
        let m = scene.dim();
        let n = polar_nodes(level);
        let closure = scene.closure.as_ref().ok_or_else(|| Error::NotClosed(scene.name.clone()))?;
        let (nodes, mut weights) = match closure {
            Closure::Torus => {
                let axes: Vec<_> = (0..m).map(|i| trapezoid(n, scene.chart.lo[i], scene.chart.hi[i])).collect();
                product(&axes)
            }
            Closure::Sphere => {
                if !(pole_exclusion > 0.0 && pole_exclusion < 0.25) {
                    return Err(Error::Invalid(format!("pole exclusion {pole_exclusion} out of range")));
                }
                let d = pole_exclusion;
                let radial = gauss(n, d, PI - d);
                let mut axes = vec![radial.clone()];
                for _ in 1..m.saturating_sub(1) {
                    axes.push(gauss(n, 0.0, PI));
                }
                if m >= 2 {
                    axes.push(trapezoid(2 * n, 0.0, 2.0 * PI));
                }
                let (nodes, mut w) = product(&axes);
                // first-order correction for the excluded caps: the innermost
                // and outermost radial rings absorb ∫_0^δ sin^{m-1}
                let cap = |r: f64, wr: f64| {
                    let s = gauss(8, 0.0, d).iter().map(|&(t, v)| v * t.sin().powi(m as i32 - 1)).sum::<f64>();
                    1.0 + s / (wr * r.sin().powi(m as i32 - 1))
                };
                let (r0, w0) = radial[0];
                let (r1, w1) = radial[radial.len() - 1];
                let (f0, f1) = (cap(r0, w0), cap(r1, w1));
                for (x, wt) in nodes.iter().zip(w.iter_mut()) {
                    if x[0] == r0 {
                        *wt *= f0;
                    } else if x[0] == r1 {
                        *wt *= f1;
                    }
                }
                (nodes, w)
            }
        };
        let mut regular = Vec::with_capacity(nodes.len());
        for (x, w) in nodes.iter().zip(weights.iter_mut()) {
            let g = scene.metric_at(x);
            *w *= mat::det_spd(&g, m).max(0.0).sqrt();
            let ev = nalgebra::DMatrix::from_row_slice(m, m, &g).symmetric_eigen().eigenvalues;
            regular.push(ev.min() > 0.0 && ev.max() <= METRIC_COND_MAX * ev.min());
        }
        Ok(QuadratureGrid { level, pole_exclusion, nodes, weights, regular })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted sums of a vector-valued integrand, in node order.
    /// The integrand also receives the node's regularity flag.
    pub fn integrate<F>(&self, dim: usize, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], bool) -> Result<Vec<f64>>,
    {
        let mut acc = vec![0.0; dim];
        for ((x, w), &reg) in self.nodes.iter().zip(&self.weights).zip(&self.regular) {
            let v = f(x, reg)?;
            for (a, b) in acc.iter_mut().zip(&v) {
                *a += w * b;
            }
        }
        Ok(acc)
    }
}
