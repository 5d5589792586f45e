//! Scene description: chart, metric, map into a target manifold, and the
//! scalar fields of the static fluid model.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, Space, MAX_ORDER};

/// Coordinate chart with an open validity box.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub coords: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Chart {
    pub fn new(coords: Vec<String>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Chart> {
        let m = coords.len();
        if m < 2 {
            return Err(Error::DimensionTooSmall { m, need: 2 });
        }
        if lo.len() != m || hi.len() != m {
            return Err(Error::DimensionMismatch(format!("box bounds for {m} coordinates")));
        }
        if let Some(i) = (0..m).find(|&i| !(lo[i] < hi[i])) {
            return Err(Error::Invalid(format!("empty interval for coordinate '{}'", coords[i])));
        }
        Ok(Chart { coords, lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a < v && v < b)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfChart { point: x.to_vec() })
        }
    }
}

/// Scalar component function with its declared smoothness.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub expr: Expr,
    pub order: usize,
}

/// A value with all partial derivatives up to some order. Keys are sorted
/// lists of variable indices, so `[0, 0, 1]` is ∂₀∂₀∂₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetValue {
    pub value: f64,
    pub derivatives: BTreeMap<Vec<usize>, f64>,
}

impl JetValue {
    pub fn from_jet(j: &Jet) -> JetValue {
        let sp = j.space();
        let mut derivatives = BTreeMap::new();
        for i in 1..sp.len(j.order()) {
            let e = sp.monomial(i);
            let idx: Vec<usize> = e.iter().enumerate().flat_map(|(v, &k)| std::iter::repeat_n(v, k as usize)).collect();
            derivatives.insert(idx, j.partial(e));
        }
        JetValue { value: j.value(), derivatives }
    }

    /// Derivative for any ordering of the multi-index.
    pub fn d(&self, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return self.value;
        }
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.derivatives.get(&k).copied().unwrap_or(f64::NAN)
    }
}

impl ScalarField {
    pub fn new(expr: Expr) -> ScalarField {
        ScalarField { expr, order: MAX_ORDER }
    }

    pub fn with_order(expr: Expr, order: usize) -> ScalarField {
        ScalarField { expr, order }
    }

    /// Value and exact partials up to `order` at `point`.
    pub fn eval_jet(&self, chart: &Chart, point: &[f64], order: usize) -> Result<JetValue> {
        chart.check(point)?;
        let cap = self.order.min(MAX_ORDER);
        if order > cap {
            return Err(Error::OrderExceeded { requested: order, max: cap });
        }
        let sp = Space::get(chart.dim(), order);
        let xs = Jet::coordinates(&sp, point);
        let one = Jet::constant(&sp, 1.0);
        Ok(JetValue::from_jet(&self.expr.eval(&xs, &one)))
    }
}

/// Map φ: M → (N, h) given by components in base coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub components: Vec<Expr>,
    pub target_coords: Vec<String>,
    /// Row-major n×n, in target coordinates.
    pub target_metric: Vec<Expr>,
}

impl MapSpec {
    pub fn new(components: Vec<Expr>, target_coords: Vec<String>, target_metric: Vec<Expr>) -> Result<MapSpec> {
        let n = components.len();
        if n == 0 {
            return Err(Error::Invalid("map needs at least one component".into()));
        }
        if target_coords.len() != n || target_metric.len() != n * n {
            return Err(Error::DimensionMismatch(format!("map of target dimension {n}")));
        }
        Ok(MapSpec { components, target_coords, target_metric })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// A closed manifold for quadrature, described by its chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Geodesic polar chart of the round sphere: (r, θ₁, …, θ_{m−1}) with
    /// r ∈ (0, π), θ_i ∈ (0, π) and the last angle in (0, 2π).
    Sphere,
    /// Flat periodic box; every coordinate is periodic over its interval.
    Torus,
}

/// Warped scene I ×_ρ Σ with radial profiles, for the warped-split ODE.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedProfile {
    /// ρ(r) as an expression in the single variable r.
    pub rho: Expr,
    /// f(r).
    pub f: Expr,
    /// φ-scalar curvature of the fiber Σ.
    pub fiber_scalar: f64,
}

/// Symmetric 2-tensor closure used by the Newton-operator machinery.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorSpec {
    /// A = A^φ − U(φ)/(m−1)·g.
    ShiftedSchouten,
    /// A = Hess w + w·g for the given scalar w.
    HessPlus(Expr),
    /// A = c·g.
    Metric(f64),
    /// Coordinate components, row-major, symmetrized on use.
    Components(Vec<Expr>),
}

/// Named hypothesis classes a scene may claim; identity checks verify them
/// numerically before evaluating a defect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Satisfies the full static fluid system for u, μ, p, U.
    FluidSystem,
    /// Satisfies the η-system in f.
    EtaSystem,
}

/// Symbolic derivatives of target data, built once per scene.
#[derive(Debug)]
pub(crate) struct TargetDerivs {
    pub dh: Vec<Expr>,
    pub ddh: Vec<Expr>,
    pub du: Vec<Expr>,
    pub ddu: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub chart: Chart,
    /// Row-major m×m metric components.
    pub metric: Vec<Expr>,
    pub map: Option<MapSpec>,
    /// Potential U on the target (in target coordinates). Treated as a
    /// function of nothing when there is no map.
    pub potential: Option<Expr>,
    pub u: Option<Expr>,
    pub f: Option<Expr>,
    pub mu: Option<Expr>,
    pub p: Option<Expr>,
    pub lambda: Option<Expr>,
    pub alpha: f64,
    pub eta: f64,
    /// Auxiliary named fields (e.g. `w` for level-set tests, `omega_ij`).
    pub aux: BTreeMap<String, Expr>,
    pub tensor: Option<TensorSpec>,
    pub closure: Option<Closure>,
    pub profile: Option<WarpedProfile>,
    pub claims: Vec<Claim>,
    /// Interior sub-box for random sampling; defaults to the chart box
    /// shrunk by 5% per side.
    pub sample_lo: Option<Vec<f64>>,
    pub sample_hi: Option<Vec<f64>>,
    pub tol: BTreeMap<String, f64>,
    derivs: OnceLock<Arc<TargetDerivs>>,
}

impl PartialEq for Scene {
    fn eq(&self, o: &Scene) -> bool {
        self.name == o.name
            && self.chart == o.chart
            && self.metric == o.metric
            && self.map == o.map
            && self.potential == o.potential
            && self.u == o.u
            && self.f == o.f
            && self.mu == o.mu
            && self.p == o.p
            && self.lambda == o.lambda
            && self.alpha == o.alpha
            && self.eta == o.eta
            && self.aux == o.aux
            && self.tensor == o.tensor
            && self.closure == o.closure
            && self.profile == o.profile
            && self.claims == o.claims
            && self.sample_lo == o.sample_lo
            && self.sample_hi == o.sample_hi
            && self.tol == o.tol
    }
}

impl Scene {
    pub fn new(name: impl Into<String>, chart: Chart, metric: Vec<Expr>) -> Result<Scene> {
        let m = chart.dim();
        if metric.len() != m * m {
            return Err(Error::DimensionMismatch(format!("{} metric components for dim {m}", metric.len())));
        }
        Ok(Scene {
            name: name.into(),
            chart,
            metric,
            map: None,
            potential: None,
            u: None,
            f: None,
            mu: None,
            p: None,
            lambda: None,
            alpha: 1.0,
            eta: 0.0,
            aux: BTreeMap::new(),
            tensor: None,
            closure: None,
            profile: None,
            claims: Vec::new(),
            sample_lo: None,
            sample_hi: None,
            tol: BTreeMap::new(),
            derivs: OnceLock::new(),
        })
    }

    /// Diagonal metric from its entries.
    pub fn diagonal(name: impl Into<String>, chart: Chart, diag: Vec<Expr>) -> Result<Scene> {
        let m = chart.dim();
        if diag.len() != m {
            return Err(Error::DimensionMismatch("diagonal metric length".into()));
        }
        let mut g = vec![Expr::Num(0.0); m * m];
        for (i, d) in diag.into_iter().enumerate() {
            g[i * m + i] = d;
        }
        Scene::new(name, chart, g)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.map.as_ref().map_or(0, |m| m.dim())
    }

    pub fn claims(&self, c: Claim) -> bool {
        self.claims.contains(&c)
    }

    /// Parse an expression over the base coordinates.
    pub fn parse_base(&self, src: &str) -> Result<Expr> {
        Ok(Expr::parse(src, &self.chart.coords)?)
    }

    /// Mutators invalidate the target-derivative cache.
    pub fn set_map(&mut self, map: MapSpec) {
        self.map = Some(map);
        self.derivs = OnceLock::new();
    }

    pub fn set_potential(&mut self, u: Expr) {
        self.potential = Some(u);
        self.derivs = OnceLock::new();
    }

    pub(crate) fn target_derivs(&self) -> Arc<TargetDerivs> {
        self.derivs
            .get_or_init(|| {
                let n = self.target_dim();
                let h: Vec<Expr> = self.map.as_ref().map(|m| m.target_metric.clone()).unwrap_or_default();
                let mut dh = Vec::with_capacity(n * n * n);
                for e in &h {
                    for c in 0..n {
                        dh.push(e.diff(c));
                    }
                }
                let mut ddh = Vec::with_capacity(n.pow(4));
                for e in &dh {
                    for d in 0..n {
                        ddh.push(e.diff(d));
                    }
                }
                let pot = self.potential.clone().unwrap_or(Expr::Num(0.0));
                let du: Vec<Expr> = (0..n).map(|a| pot.diff(a)).collect();
                let ddu: Vec<Expr> = (0..n * n).map(|ab| du[ab / n].diff(ab % n)).collect();
                Arc::new(TargetDerivs { dh, ddh, du, ddu })
            })
            .clone()
    }

    /// Row-major metric values at a point.
    pub fn metric_at(&self, x: &[f64]) -> Vec<f64> {
        self.metric.iter().map(|e| e.eval_f64(x)).collect()
    }

    pub fn sample_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.sample_lo.clone().unwrap_or_else(|| {
            self.chart.lo.iter().zip(&self.chart.hi).map(|(a, b)| a + 0.05 * (b - a)).collect()
        });
        let hi = self.sample_hi.clone().unwrap_or_else(|| {
            self.chart.lo.iter().zip(&self.chart.hi).map(|(a, b)| b - 0.05 * (b - a)).collect()
        });
        (lo, hi)
    }

    /// `n` uniform points in the sampling box, reproducible from `seed`.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let (lo, hi) = self.sample_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect()).collect()
    }

    /// Tolerance override for a check id, if the scene declares one.
    pub fn tol_override(&self, id: &str) -> Option<f64> {
        self.tol.get(id).copied()
    }

    /// The conformally related scene g̃ = e^{−2f/(m−2)} g; the map and the
    /// scalar fields are carried over unchanged.
    pub fn conformal(&self) -> Result<Scene> {
        let m = self.dim();
        if m < 3 {
            return Err(Error::DimensionTooSmall { m, need: 3 });
        }
        let f = self.f.clone().ok_or_else(|| Error::MissingField("f".into()))?;
        let w = crate::expr::call(crate::expr::Func::Exp, Expr::Num(-2.0 / (m as f64 - 2.0)) * f);
        let mut s = self.clone();
        s.name = format!("{}~conformal", self.name);
        s.metric = self.metric.iter().map(|e| w.clone() * e.clone()).collect();
        s.claims.clear();
        Ok(s)
    }

    /// Boundary-case change of variable u = e^{−η f}.
    pub fn with_u_from_f(&self) -> Result<Scene> {
        let f = self.f.clone().ok_or_else(|| Error::MissingField("f".into()))?;
        let mut s = self.clone();
        s.u = Some(crate::expr::call(crate::expr::Func::Exp, Expr::Num(-self.eta) * f));
        Ok(s)
    }
}
