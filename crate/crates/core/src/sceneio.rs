//! JSON scene files.
//!
//! Expressions are strings in the grammar of [`crate::expr`]; base fields
//! use the chart coordinates, the target metric and the potential use the
//! target coordinates, and warped profiles use `r`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ParseError, Result};
use crate::expr::Expr;
use crate::oscillation::RadialSampler;
use crate::scene::{Chart, Claim, Closure, MapSpec, Scene, TensorSpec, WarpedProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub components: Vec<String>,
    pub target_coords: Vec<String>,
    /// Row-major n×n target metric.
    pub target_metric: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TensorFile {
    ShiftedSchouten,
    HessPlus { w: String },
    Metric { c: f64 },
    Components { a: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedFile {
    pub rho: String,
    pub f: String,
    pub fiber_scalar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub name: String,
    pub coords: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Row-major m×m components; exclusive with `metric_diag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_diag: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub eta: f64,
    /// Optional consistency checks on the dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<Closure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warped: Option<WarpedFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claims: Vec<Claim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_hi: Option<Vec<f64>>,
    /// Explicit evaluation points, used instead of random samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tol: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialSampler>,
}

fn default_alpha() -> f64 {
    1.0
}

/// Line and column (1-based) of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, col)
}

impl SceneFile {
    /// Parse JSON; syntax and schema errors carry the JSON position,
    /// expression errors the position inside the offending string.
    pub fn parse(text: &str) -> Result<(SceneFile, Scene)> {
        let sf: SceneFile = serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.column(), e.to_string()))?;
        let scene = sf.to_scene().map_err(|e| match e {
            Error::Parse(pe) => Error::Parse(sf.locate(text, pe)),
            other => other,
        })?;
        Ok((sf, scene))
    }

    /// Every expression with the variables it is parsed over.
    fn all_exprs(&self) -> Vec<(&str, Vec<String>)> {
        let base = &self.coords;
        let mut out: Vec<(&str, Vec<String>)> = Vec::new();
        for s in self.metric.iter().flatten().chain(self.metric_diag.iter().flatten()) {
            out.push((s, base.clone()));
        }
        let mut tvars = Vec::new();
        if let Some(m) = &self.map {
            out.extend(m.components.iter().map(|s| (s.as_str(), base.clone())));
            out.extend(m.target_metric.iter().map(|s| (s.as_str(), m.target_coords.clone())));
            tvars = m.target_coords.clone();
        }
        if let Some(s) = &self.potential {
            out.push((s, tvars));
        }
        for s in [&self.u, &self.f, &self.mu, &self.p, &self.lambda].into_iter().flatten() {
            out.push((s, base.clone()));
        }
        out.extend(self.aux.values().map(|s| (s.as_str(), base.clone())));
        match &self.tensor {
            Some(TensorFile::HessPlus { w }) => out.push((w, base.clone())),
            Some(TensorFile::Components { a }) => out.extend(a.iter().map(|s| (s.as_str(), base.clone()))),
            _ => {}
        }
        if let Some(w) = &self.warped {
            out.push((&w.rho, vec!["r".into()]));
            out.push((&w.f, vec!["r".into()]));
        }
        out
    }

    /// Shift an expression-local error to the file position of the string
    /// that produced it.
    fn locate(&self, text: &str, pe: ParseError) -> ParseError {
        for (src, vars) in self.all_exprs() {
            let Err(q) = Expr::parse(src, &vars) else { continue };
            if q != pe {
                continue;
            }
            let quoted = serde_json::to_string(src).unwrap_or_default();
            if let Some(off) = text.find(&quoted) {
                let (l, c) = line_col(text, off + 1);
                let col = if pe.line == 1 { c + pe.col - 1 } else { pe.col };
                return ParseError::new(l + pe.line - 1, col, format!("in expression \"{src}\": {}", pe.msg));
            }
        }
        pe
    }

    pub fn to_scene(&self) -> Result<Scene> {
        let chart = Chart::new(self.coords.clone(), self.lo.clone(), self.hi.clone())?;
        let md = chart.dim();
        if let Some(m) = self.m {
            if m != md {
                return Err(Error::DimensionMismatch(format!("m = {m} but {md} coordinates")));
            }
        }
        let base = |s: &str| -> Result<Expr> { Ok(Expr::parse(s, &self.coords)?) };
        let opt = |s: &Option<String>| -> Result<Option<Expr>> { s.as_deref().map(base).transpose() };
        let mut scene = match (&self.metric, &self.metric_diag) {
            (Some(g), None) => Scene::new(&self.name, chart, g.iter().map(|s| base(s)).collect::<Result<_>>()?)?,
            (None, Some(d)) => Scene::diagonal(&self.name, chart, d.iter().map(|s| base(s)).collect::<Result<_>>()?)?,
            (None, None) => return Err(Error::MissingField("metric".into())),
            (Some(_), Some(_)) => return Err(Error::Invalid("give either metric or metric_diag".into())),
        };
        let mut tvars: Vec<String> = Vec::new();
        if let Some(mf) = &self.map {
            if let Some(n) = self.n {
                if n != mf.target_coords.len() {
                    return Err(Error::DimensionMismatch(format!("n = {n} but {} target coordinates", mf.target_coords.len())));
                }
            }
            let comps = mf.components.iter().map(|s| base(s)).collect::<Result<_>>()?;
            let h = mf.target_metric.iter().map(|s| Ok(Expr::parse(s, &mf.target_coords)?)).collect::<Result<_>>()?;
            scene.set_map(MapSpec::new(comps, mf.target_coords.clone(), h)?);
            tvars = mf.target_coords.clone();
        }
        if let Some(pot) = &self.potential {
            scene.set_potential(Expr::parse(pot, &tvars)?);
        }
        scene.u = opt(&self.u)?;
        scene.f = opt(&self.f)?;
        scene.mu = opt(&self.mu)?;
        scene.p = opt(&self.p)?;
        scene.lambda = opt(&self.lambda)?;
        scene.alpha = self.alpha;
        scene.eta = self.eta;
        for (k, v) in &self.aux {
            scene.aux.insert(k.clone(), base(v)?);
        }
        scene.tensor = match &self.tensor {
            None => None,
            Some(TensorFile::ShiftedSchouten) => Some(TensorSpec::ShiftedSchouten),
            Some(TensorFile::HessPlus { w }) => Some(TensorSpec::HessPlus(base(w)?)),
            Some(TensorFile::Metric { c }) => Some(TensorSpec::Metric(*c)),
            Some(TensorFile::Components { a }) => {
                if a.len() != md * md {
                    return Err(Error::DimensionMismatch(format!("{} tensor components for dim {md}", a.len())));
                }
                Some(TensorSpec::Components(a.iter().map(|s| base(s)).collect::<Result<_>>()?))
            }
        };
        scene.closure = self.closure;
        if let Some(w) = &self.warped {
            let r = vec!["r".to_string()];
            scene.profile = Some(WarpedProfile {
                rho: Expr::parse(&w.rho, &r)?,
                f: Expr::parse(&w.f, &r)?,
                fiber_scalar: w.fiber_scalar,
            });
        }
        scene.claims = self.claims.clone();
        for b in [&self.sample_lo, &self.sample_hi].into_iter().flatten() {
            if b.len() != md {
                return Err(Error::DimensionMismatch("sample box bounds".into()));
            }
        }
        scene.sample_lo = self.sample_lo.clone();
        scene.sample_hi = self.sample_hi.clone();
        if let Some(pts) = &self.points {
            for x in pts {
                scene.chart.check(x)?;
            }
        }
        scene.tol = self.tol.clone();
        Ok(scene)
    }

    pub fn from_scene(scene: &Scene) -> SceneFile {
        let c = &scene.chart.coords;
        let r = |e: &Expr| e.render(c);
        let ro = |e: &Option<Expr>| e.as_ref().map(r);
        let tvars: Vec<String> = scene.map.as_ref().map(|m| m.target_coords.clone()).unwrap_or_default();
        SceneFile {
            name: scene.name.clone(),
            coords: c.clone(),
            lo: scene.chart.lo.clone(),
            hi: scene.chart.hi.clone(),
            metric: Some(scene.metric.iter().map(r).collect()),
            metric_diag: None,
            map: scene.map.as_ref().map(|m| MapFile {
                components: m.components.iter().map(r).collect(),
                target_coords: m.target_coords.clone(),
                target_metric: m.target_metric.iter().map(|e| e.render(&m.target_coords)).collect(),
            }),
            potential: scene.potential.as_ref().map(|e| e.render(&tvars)),
            u: ro(&scene.u),
            f: ro(&scene.f),
            mu: ro(&scene.mu),
            p: ro(&scene.p),
            lambda: ro(&scene.lambda),
            alpha: scene.alpha,
            eta: scene.eta,
            m: Some(scene.dim()),
            n: scene.map.as_ref().map(|m| m.dim()),
            aux: scene.aux.iter().map(|(k, v)| (k.clone(), r(v))).collect(),
            tensor: scene.tensor.as_ref().map(|t| match t {
                TensorSpec::ShiftedSchouten => TensorFile::ShiftedSchouten,
                TensorSpec::HessPlus(w) => TensorFile::HessPlus { w: r(w) },
                TensorSpec::Metric(c) => TensorFile::Metric { c: *c },
                TensorSpec::Components(a) => TensorFile::Components { a: a.iter().map(r).collect() },
            }),
            closure: scene.closure,
            warped: scene.profile.as_ref().map(|w| {
                let rv = vec!["r".to_string()];
                WarpedFile { rho: w.rho.render(&rv), f: w.f.render(&rv), fiber_scalar: w.fiber_scalar }
            }),
            claims: scene.claims.clone(),
            sample_lo: scene.sample_lo.clone(),
            sample_hi: scene.sample_hi.clone(),
            points: None,
            tol: scene.tol.clone(),
            radial: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene files serialize")
    }
}

/// SHA-256 of the canonical scene file, hex encoded.
pub fn scene_digest(scene: &Scene) -> String {
    let canon = serde_json::to_string(&SceneFile::from_scene(scene)).expect("scene files serialize");
    Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
