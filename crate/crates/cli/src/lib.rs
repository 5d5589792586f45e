//! Command dispatch for the `phistatic` binary. `run` is the whole program
//! minus process exit, so tests can drive it in-process.

pub mod args;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use phistatic::catalog::{build_example, examples_catalog};
use phistatic::curvature::{schur_field, symmetry_battery, trace_residuals};
use phistatic::lorentz::{einstein_residual, energy_conditions, Condition};
use phistatic::newton::{codazzi_and_divergence, kazdan_warner, newton_chain, tensor_field, CODAZZI_GATE};
use phistatic::oscillation::{nonexistence_verdict, solve_cauchy, zero_criteria, ProfileSpec, RadialProfile, RadialSampler, ZeroReport};
use phistatic::quadrature::QuadratureGrid;
use phistatic::report::{report_diff, to_json_indent, CheckRecord, Report};
use phistatic::sceneio::SceneFile;
use phistatic::spfst::{divergence_identity, identity_order, integrability_residuals, level_set_geometry, system_residual, SystemKind, IDENTITY_IDS};
use phistatic::tensor::mat;
use phistatic::tol::EPS_EC;
use phistatic::{Claim, Error, Geo, Scene, Tier};

use args::{Cli, Command, ExamplesCmd, Global, OscArgs, SceneArgs};

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Identity evaluated by `identities` beyond the divergence suite.
pub const LEVEL_SET_ID: &str = "level_set_norm";

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Default tolerance of a check id.
pub fn default_tolerance(id: &str) -> f64 {
    match id {
        "symmetry" | "fluid.i" | "fluid.ii" | "fluid.iii" | "fluid.iv" | "fluid.v" | "fluid.conservation" | "eta.i"
        | "eta.ii" | "newton.div_formula" | "newton.div_free" => Tier::D1.tol(),
        "schur" | "trace.weyl" | "trace.cotton" | "trace.bach" | "einstein" => 1e-6,
        "divY" | "divX_fp" => 1e-4,
        "newton.algebra" | "oscillation.zero_residual" => Tier::Alg.tol(),
        id if id.starts_with("energy.") => EPS_EC,
        id if id.starts_with("kw.") => 1e-4,
        _ => Tier::D3.tol(),
    }
}

struct Ctx {
    g: Global,
}

impl Ctx {
    /// Scene override, then tier, then the default.
    fn tol(&self, scene: Option<&Scene>, id: &str) -> f64 {
        scene
            .and_then(|s| s.tol_override(id))
            .or(self.g.tol_tier.map(Tier::tol))
            .unwrap_or_else(|| default_tolerance(id))
    }

    fn check(&self, scene: Option<&Scene>, id: &str, points: usize, residual: f64) -> CheckRecord {
        CheckRecord::new(id, points, residual, self.tol(scene, id))
    }
}

struct Loaded {
    scene: Scene,
    file: Option<SceneFile>,
    points: Vec<Vec<f64>>,
}

fn load_scene(ctx: &Ctx, sa: &SceneArgs) -> phistatic::Result<Loaded> {
    load(ctx, sa.scene.as_deref(), sa.example.as_deref(), &sa.params)
}

fn load(ctx: &Ctx, path: Option<&Path>, example: Option<&str>, params: &[(String, f64)]) -> phistatic::Result<Loaded> {
    let (scene, file) = match (path, example) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
            let (sf, scene) = SceneFile::parse(&text)?;
            (scene, Some(sf))
        }
        (None, Some(name)) => {
            let map: BTreeMap<String, f64> = params.iter().cloned().collect();
            (build_example(name, &map)?, None)
        }
        (None, None) => return Err(Error::MissingField("scene file or --example".into())),
    };
    let points = match file.as_ref().and_then(|f| f.points.clone()) {
        Some(p) => p,
        None => scene.sample_points(ctx.g.points, ctx.g.seed),
    };
    Ok(Loaded { scene, file, points })
}

/// Errors that only disqualify one evaluation point.
fn point_local(e: &Error) -> bool {
    matches!(e, Error::BoundaryPoint { .. } | Error::CriticalPoint { .. } | Error::SingularMetric { .. })
}

fn finish(mut r: Report, started: Instant) -> Report {
    r.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    r
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            return if code == EXIT_PASS {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let ctx = Ctx { g: cli.global.clone() };
    let started = Instant::now();
    let result = dispatch(&ctx, cli.command, started);
    match result {
        Ok(Emit::Report(r)) => {
            let code = if r.all_pass() { EXIT_PASS } else { EXIT_FAIL };
            emit(&ctx, r.to_json(ctx.g.json_indent), code)
        }
        Ok(Emit::Json(v, code)) => emit(&ctx, to_json_indent(&v, ctx.g.json_indent), code),
        Ok(Emit::Text(t)) => emit(&ctx, t, EXIT_PASS),
        Err(e) => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn emit(ctx: &Ctx, text: String, code: i32) -> Outcome {
    match &ctx.g.out {
        Some(p) => match std::fs::write(p, format!("{text}\n")) {
            Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
            Err(e) => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {}: {e}\n", p.display()) },
        },
        None => Outcome { code, stdout: format!("{text}\n"), stderr: String::new() },
    }
}

enum Emit {
    Report(Report),
    Json(Value, i32),
    Text(String),
}

fn dispatch(ctx: &Ctx, cmd: Command, started: Instant) -> phistatic::Result<Emit> {
    let rep = |r: Report| Ok(Emit::Report(finish(r, started)));
    match cmd {
        Command::Curvature(sa) => {
            let l = load_scene(ctx, &sa)?;
            let mut r = new_report(ctx, "curvature", &l);
            curvature_checks(ctx, &l, &mut r)?;
            rep(r)
        }
        Command::CheckSystem { scene, system } => {
            let l = load_scene(ctx, &scene)?;
            let mut r = new_report(ctx, "check-system", &l);
            let kinds = match system.as_deref() {
                Some(s) => vec![SystemKind::parse(s).ok_or_else(|| Error::Invalid(format!("unknown system '{s}'")))?],
                None => claimed_systems(&l.scene),
            };
            if kinds.is_empty() {
                return Err(Error::Invalid("scene claims no field system; pass --system fluid|eta".into()));
            }
            system_checks(ctx, &l, &kinds, &mut r)?;
            rep(r)
        }
        Command::Integrability(sa) => {
            let l = load_scene(ctx, &sa)?;
            let mut r = new_report(ctx, "integrability", &l);
            integrability_checks(ctx, &l, &mut r)?;
            rep(r)
        }
        Command::Identities { scene, ids } => {
            let l = load_scene(ctx, &scene)?;
            let mut r = new_report(ctx, "identities", &l);
            identity_checks(ctx, &l, &ids, &mut r)?;
            rep(r)
        }
        Command::Energy { scene, samples } => {
            let l = load_scene(ctx, &scene)?;
            let mut r = new_report(ctx, "energy", &l);
            r.config("samples", samples);
            energy_checks(ctx, &l, samples, &mut r)?;
            rep(r)
        }
        Command::Newton { scene, k } => {
            let l = load_scene(ctx, &scene)?;
            let mut r = new_report(ctx, "newton", &l);
            newton_checks(ctx, &l, k, &mut r)?;
            rep(r)
        }
        Command::KazdanWarner { scene, k, pole_exclusion } => {
            let l = load_scene(ctx, &scene)?;
            let mut r = Report::new("kazdan-warner", Some(&l.scene), ctx.g.seed);
            r.config("refine", ctx.g.refine);
            r.config("pole_exclusion", pole_exclusion);
            kw_checks(ctx, &l.scene, k, pole_exclusion, &mut r)?;
            rep(r)
        }
        Command::Oscillate(oa) => rep(oscillate(ctx, &oa)?),
        Command::Examples { cmd } => match cmd {
            ExamplesCmd::List => {
                let list: Vec<Value> = examples_catalog()
                    .into_iter()
                    .map(|e| {
                        let params: BTreeMap<&str, f64> = e.params.iter().cloned().collect();
                        json!({"name": e.name, "summary": e.summary, "params": params})
                    })
                    .collect();
                Ok(Emit::Json(json!({ "examples": list }), EXIT_PASS))
            }
            ExamplesCmd::Run { name, rest } => {
                let (params, g) = split_rest(&ctx.g, &rest)?;
                let ctx = Ctx { g };
                let l = load(&ctx, None, Some(&name), &params)?;
                let mut r = new_report(&ctx, "examples run", &l);
                r.config("example", &name);
                r.config("params", params.iter().cloned().collect::<BTreeMap<String, f64>>());
                curvature_checks(&ctx, &l, &mut r)?;
                let kinds = claimed_systems(&l.scene);
                if !kinds.is_empty() {
                    system_checks(&ctx, &l, &kinds, &mut r)?;
                }
                if l.scene.f.is_some() && l.scene.claims(Claim::EtaSystem) && l.scene.dim() >= 3 {
                    integrability_checks(&ctx, &l, &mut r)?;
                }
                if l.scene.dim() >= 3 {
                    identity_checks(&ctx, &l, &[], &mut r)?;
                }
                let out = finish(r, started);
                let code = if out.all_pass() { EXIT_PASS } else { EXIT_FAIL };
                Ok(Emit::Json(out.to_value(), code))
            }
            ExamplesCmd::Export { name, rest } => {
                let (params, _) = split_rest(&ctx.g, &rest)?;
                let scene = build_example(&name, &params.into_iter().collect())?;
                Ok(Emit::Text(SceneFile::from_scene(&scene).to_json()))
            }
        },
        Command::Diff { a, b } => {
            let read = |p: &Path| -> phistatic::Result<Value> {
                let t = std::fs::read_to_string(p).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&t).map_err(|e| phistatic::ParseError::new(e.line(), e.column(), e.to_string()).into())
            };
            let d = report_diff(&read(&a)?, &read(&b)?)?;
            let code = if d.is_empty() { EXIT_PASS } else { EXIT_FAIL };
            Ok(Emit::Json(serde_json::to_value(&d).expect("diffs serialize"), code))
        }
    }
}

/// `--key value` pairs after an example name: global flags are applied,
/// anything else is a catalog parameter.
fn split_rest(g: &Global, rest: &[String]) -> phistatic::Result<(Vec<(String, f64)>, Global)> {
    let mut g = g.clone();
    let mut params = Vec::new();
    let mut it = rest.iter();
    while let Some(k) = it.next() {
        let key = k.strip_prefix("--").ok_or_else(|| Error::Invalid(format!("expected --name value, got '{k}'")))?;
        let (key, inline) = match key.split_once('=') {
            Some((a, b)) => (a, Some(b.to_string())),
            None => (key, None),
        };
        let val = match inline {
            Some(v) => v,
            None => it.next().cloned().ok_or_else(|| Error::Invalid(format!("--{key} needs a value")))?,
        };
        let num = || val.parse::<f64>().map_err(|_| Error::Invalid(format!("--{key}: '{val}' is not a number")));
        let uint = || val.parse::<usize>().map_err(|_| Error::Invalid(format!("--{key}: '{val}' is not an unsigned integer")));
        match key {
            "points" => g.points = uint()?,
            "seed" => g.seed = val.parse().map_err(|_| Error::Invalid(format!("--seed: '{val}'")))?,
            "refine" => g.refine = uint()?,
            "json-indent" => g.json_indent = uint()?,
            "out" => g.out = Some(val.clone().into()),
            "tol-tier" => g.tol_tier = Some(Tier::parse(&val).ok_or_else(|| Error::Invalid(format!("unknown tier '{val}'")))?),
            _ => params.push((key.to_string(), num()?)),
        }
    }
    Ok((params, g))
}

fn new_report(ctx: &Ctx, command: &str, l: &Loaded) -> Report {
    let mut r = Report::new(command, Some(&l.scene), ctx.g.seed);
    r.config("points", l.points.len());
    r.config("explicit_points", l.file.as_ref().is_some_and(|f| f.points.is_some()));
    if let Some(t) = ctx.g.tol_tier {
        r.config("tol_tier", t.name());
    }
    r
}

fn merge_data(r: &mut Report, key: &str, v: Value) {
    if !r.data.is_object() {
        r.data = json!({});
    }
    r.data.as_object_mut().unwrap().insert(key.to_string(), v);
}

fn claimed_systems(s: &Scene) -> Vec<SystemKind> {
    let mut k = Vec::new();
    if s.claims(Claim::FluidSystem) {
        k.push(SystemKind::Fluid);
    }
    if s.claims(Claim::EtaSystem) {
        k.push(SystemKind::Eta);
    }
    k
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn curvature_checks(ctx: &Ctx, l: &Loaded, r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    let m = s.dim();
    let (mut sym, mut schur) = (0.0f64, 0.0f64);
    let mut tr = [0.0f64; 3];
    let mut rows = Vec::new();
    let mut used = 0;
    for x in &l.points {
        let geo = match Geo::new(s, x, if m >= 3 { 4 } else { 3 }) {
            Ok(g) => g,
            Err(e) if point_local(&e) => continue,
            Err(e) => return Err(e),
        };
        used += 1;
        sym = sym.max(symmetry_battery(&geo)?.worst());
        schur = schur.max(schur_field(&geo).sup_norm());
        if m >= 3 {
            let t = trace_residuals(&geo)?;
            tr = [tr[0].max(t.weyl), tr[1].max(t.cotton), tr[2].max(t.bach)];
        }
        rows.push(json!({"x": x, "scalar": geo.scal().value(), "scalar_phi": geo.sphi().value()}));
    }
    r.push(ctx.check(Some(s), "symmetry", used, sym));
    r.push(ctx.check(Some(s), "schur", used, schur));
    if m >= 3 {
        for (id, v) in ["trace.weyl", "trace.cotton", "trace.bach"].iter().zip(tr) {
            r.push(ctx.check(Some(s), id, used, v));
        }
    }
    let sp: Vec<f64> = rows.iter().filter_map(|v| v["scalar_phi"].as_f64()).collect();
    let (lo, hi) = sp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    merge_data(r, "scalar_phi", json!({"min": lo, "max": hi}));
    merge_data(r, "alpha", json!(s.alpha));
    merge_data(r, "m", json!(m));
    merge_data(r, "curvature", Value::Array(rows));
    Ok(())
}

fn system_checks(ctx: &Ctx, l: &Loaded, kinds: &[SystemKind], r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    for &k in kinds {
        let prefix = match k {
            SystemKind::Fluid => "fluid",
            SystemKind::Eta => "eta",
        };
        let mut worst: BTreeMap<String, f64> = BTreeMap::new();
        let mut used = 0;
        for x in &l.points {
            let res = match system_residual(s, x, k) {
                Ok(v) => v,
                Err(e) if point_local(&e) => continue,
                Err(e) => return Err(e),
            };
            used += 1;
            for eq in &res.equations {
                let w = worst.entry(eq.label.clone()).or_insert(0.0);
                *w = w.max(eq.sup);
            }
        }
        for (label, v) in worst {
            r.push(ctx.check(Some(s), &format!("{prefix}.{label}"), used, v));
        }
    }
    Ok(())
}

fn integrability_checks(ctx: &Ctx, l: &Loaded, r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    let (mut a, mut b, mut used) = (0.0f64, 0.0f64, 0);
    for x in &l.points {
        match integrability_residuals(s, x) {
            Ok(v) => {
                used += 1;
                a = a.max(v.first_sup);
                b = b.max(v.second_sup);
            }
            Err(e) if point_local(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    r.push(ctx.check(Some(s), "integrability.first", used, a));
    r.push(ctx.check(Some(s), "integrability.second", used, b));
    Ok(())
}

fn identity_checks(ctx: &Ctx, l: &Loaded, ids: &[String], r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    let explicit = !ids.is_empty();
    let selected: Vec<String> = if explicit {
        ids.to_vec()
    } else {
        IDENTITY_IDS.iter().map(|s| s.to_string()).chain([LEVEL_SET_ID.to_string()]).collect()
    };
    for id in &selected {
        if id != LEVEL_SET_ID {
            identity_order(id)?;
        }
    }
    let mut skipped = serde_json::Map::new();
    let mut reduced = serde_json::Map::new();
    for id in &selected {
        let (mut worst, mut used, mut red) = (0.0f64, 0usize, None::<f64>);
        let mut why = None;
        for x in &l.points {
            let v = if id == LEVEL_SET_ID {
                if s.f.is_none() {
                    Err(Error::MissingField("f".into()))
                } else {
                    level_set_geometry(s, x).map(|v| (v.norm_defect.abs(), None))
                }
            } else {
                divergence_identity(id, s, x).map(|v| (v.defect, v.reduced_defect))
            };
            match v {
                Ok((d, rd)) => {
                    used += 1;
                    worst = worst.max(d);
                    if let Some(rd) = rd {
                        red = Some(red.unwrap_or(0.0).max(rd));
                    }
                }
                Err(e @ (Error::HypothesisUnmet { .. } | Error::MissingField(_) | Error::DimensionTooSmall { .. })) => {
                    why.get_or_insert(e.to_string());
                }
                Err(e) if point_local(&e) => {}
                Err(e) => return Err(e),
            }
        }
        if used > 0 {
            r.push(ctx.check(Some(s), id, used, worst));
            if let Some(rd) = red {
                reduced.insert(id.clone(), json!(rd));
            }
        } else if explicit {
            let note = why.unwrap_or_else(|| "no admissible point".into());
            r.push(CheckRecord::flag(id.clone(), 0, false, note));
        } else {
            skipped.insert(id.clone(), json!(why.unwrap_or_else(|| "no admissible point".into())));
        }
    }
    merge_data(r, "identities_skipped", Value::Object(skipped));
    merge_data(r, "reduced_defects", Value::Object(reduced));
    Ok(())
}

fn energy_checks(ctx: &Ctx, l: &Loaded, samples: usize, r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    let mut ein = 0.0f64;
    let mut worst = [0.0f64; 5];
    let mut counted = [0usize; 5];
    let mut rows = Vec::new();
    let mut used = 0;
    for (i, x) in l.points.iter().enumerate() {
        let er = match einstein_residual(s, x) {
            Ok(v) => v,
            Err(e) if point_local(&e) => continue,
            Err(e) => return Err(e),
        };
        used += 1;
        ein = ein.max(er.sup);
        let rep = energy_conditions(s, x, samples, ctx.g.seed.wrapping_add(i as u64))?;
        for (ci, c) in Condition::ALL.iter().enumerate() {
            let v = rep.get(*c);
            if v.sufficient_holds == Some(true) {
                counted[ci] += 1;
                worst[ci] = worst[ci].max((-v.sampled_min).max(0.0));
            }
        }
        rows.push(json!({"x": x, "einstein": er.sup, "verdicts": rep.verdicts}));
    }
    r.push(ctx.check(Some(s), "einstein", used, ein));
    for (ci, c) in Condition::ALL.iter().enumerate() {
        let id = format!("energy.{}", c.name());
        let mut rec = ctx.check(Some(s), &id, counted[ci], worst[ci]);
        rec = rec.with_note(format!("sampled values where the sufficient inequalities hold ({} of {used} points)", counted[ci]));
        r.push(rec);
    }
    merge_data(r, "energy", Value::Array(rows));
    Ok(())
}

fn newton_checks(ctx: &Ctx, l: &Loaded, k: Option<usize>, r: &mut Report) -> phistatic::Result<()> {
    let s = &l.scene;
    let m = s.dim();
    let ks: Vec<usize> = match k {
        Some(k) if k == 0 || k > m => return Err(Error::KOutOfRange { k, m }),
        Some(k) => vec![k],
        None => (1..=m).collect(),
    };
    let (mut alg, mut formula, mut div, mut cod) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut used = 0;
    let mut rows = Vec::new();
    for x in &l.points {
        let geo = match Geo::new(s, x, 2) {
            Ok(g) => g,
            Err(e) if point_local(&e) => continue,
            Err(e) => return Err(e),
        };
        used += 1;
        let a = tensor_field(&geo)?.values();
        let (sk, pk) = newton_chain(&a, m, m);
        let scale = sk.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut e = sup(&pk[m]);
        for kk in 0..=m {
            e = e.max((mat::trace(&pk[kk], m) - (m - kk) as f64 * sk[kk]).abs());
            if kk < m {
                e = e.max((mat::trace(&mat::matmul(&a, &pk[kk], m), m) - (kk + 1) as f64 * sk[kk + 1]).abs());
            }
        }
        alg = alg.max(e / scale);
        let mut per_k = Vec::new();
        for &kk in &ks {
            let cd = codazzi_and_divergence(s, x, kk)?;
            formula = formula.max(cd.formula_defect);
            div = div.max(cd.div_sup);
            cod = cod.max(cd.codazzi_sup);
            per_k.push(json!({"k": kk, "codazzi_sup": cd.codazzi_sup, "div_sup": cd.div_sup, "formula_defect": cd.formula_defect}));
        }
        rows.push(json!({"x": x, "s": sk, "k": per_k}));
    }
    r.push(ctx.check(Some(s), "newton.algebra", used, alg).with_note("relative to max(1, |S_k|)"));
    r.push(ctx.check(Some(s), "newton.div_formula", used, formula));
    if cod <= CODAZZI_GATE {
        r.push(ctx.check(Some(s), "newton.div_free", used, div));
    }
    merge_data(r, "codazzi_sup", json!(cod));
    merge_data(r, "codazzi", json!(cod <= CODAZZI_GATE));
    merge_data(r, "newton", Value::Array(rows));
    Ok(())
}

fn kw_checks(ctx: &Ctx, s: &Scene, k: Option<usize>, pole: f64, r: &mut Report) -> phistatic::Result<()> {
    let m = s.dim();
    if ctx.g.refine == 0 {
        return Err(Error::Invalid("--refine starts at 1".into()));
    }
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (1..m).collect(),
    };
    let grids: Vec<QuadratureGrid> = (1..=ctx.g.refine).map(|lv| QuadratureGrid::build(s, lv, pole)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &kk in &ks {
        let runs: Vec<_> = grids.iter().map(|g| kazdan_warner(s, kk, g)).collect::<Result<_, _>>()?;
        let last = runs.last().expect("at least one level");
        let n = last.nodes;
        r.push(ctx.check(Some(s), &format!("kw.k{kk}.defect"), n, last.defect.abs()));
        let defects: Vec<f64> = runs.iter().map(|v| v.defect.abs()).collect();
        // below the floor the defect is rounding noise and need not shrink
        let floor = 1e-12;
        let mono = defects.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
        r.push(CheckRecord::flag(format!("kw.k{kk}.monotone"), runs.len(), mono, format!("defects by level {defects:?}")));
        if let Some(h) = last.anselli_holds {
            r.push(CheckRecord::flag(format!("kw.k{kk}.anselli"), n, h, format!("min σ1σk − σk+1 = {:e}", last.anselli_min)));
        }
        rows.push(json!({"k": kk, "levels": runs}));
    }
    merge_data(r, "kazdan_warner", Value::Array(rows));
    Ok(())
}

fn osc_spec(oa: &OscArgs) -> phistatic::Result<Option<ProfileSpec>> {
    let Some(fam) = oa.family.as_deref() else { return Ok(None) };
    let need = |v: Option<f64>, n: &str| v.ok_or_else(|| Error::MissingField(format!("--{n}")));
    Ok(Some(match fam {
        "power" => ProfileSpec::Power { theta: need(oa.theta, "theta")?, d: need(oa.d, "D")?, c: oa.c.unwrap_or(1.0), horizon: oa.horizon },
        "expgamma" => ProfileSpec::Expgamma {
            lambda: oa.lambda.unwrap_or(1.0),
            a: need(oa.a, "a")?,
            gamma: need(oa.gamma, "gamma")?,
            beta: oa.beta.unwrap_or(0.0),
            b: need(oa.b, "b")?,
            kappa: oa.kappa.unwrap_or(2.0),
            horizon: oa.horizon,
        },
        other => return Err(Error::UnsupportedFamily(format!("'{other}' from the command line (use a scene file for tabulated profiles)"))),
    }))
}

fn zero_checks(ctx: &Ctx, r: &mut Report, z: &ZeroReport, z0: f64, criteria: &[phistatic::oscillation::CriterionVerdict]) {
    if let (Some(_), Some(zz)) = (z.first_zero, z.z_at_zero) {
        r.push(ctx.check(None, "oscillation.zero_residual", 1, zz / z0));
    }
    let isolated = z.min_gap.is_none_or(|g| g > 0.0);
    r.push(CheckRecord::flag("oscillation.isolated", z.zeros.len(), isolated, format!("min gap {:?}", z.min_gap)));
    let certified = criteria.iter().any(|c| (c.id == "b" || c.id == "c") && c.satisfied);
    let sound = !certified || z.first_zero.is_some();
    r.push(CheckRecord::flag("oscillation.soundness", 1, sound, "growth criteria (b), (c) imply a first zero"));
}

fn oscillate(ctx: &Ctx, oa: &OscArgs) -> phistatic::Result<Report> {
    let spec = osc_spec(oa)?;
    if oa.scene.is_some() || oa.example.is_some() {
        let l = load(ctx, oa.scene.as_deref(), oa.example.as_deref(), &oa.params)?;
        let mut cfg: RadialSampler = l.file.as_ref().and_then(|f| f.radial.clone()).unwrap_or_default();
        if spec.is_some() {
            cfg.profile = spec;
        }
        if oa.horizon.is_some() {
            cfg.horizon = oa.horizon;
        }
        cfg.seed = ctx.g.seed;
        let mut r = Report::new("oscillate", Some(&l.scene), ctx.g.seed);
        r.config("sampler", &cfg);
        let v = nonexistence_verdict(&l.scene, &cfg)?;
        zero_checks(ctx, &mut r, &v.zero, 1.0, &v.criteria);
        r.data = serde_json::to_value(&v).expect("reports serialize");
        return Ok(r);
    }
    let spec = spec.ok_or_else(|| Error::MissingField("--family or a scene".into()))?;
    let mut profile = RadialProfile::from_spec(&spec)?;
    if let Some(h) = oa.horizon {
        profile.horizon = h;
    }
    let mut r = Report::new("oscillate", None, ctx.g.seed);
    r.config("profile", &spec);
    r.config("z0", oa.z0);
    let z = solve_cauchy(&profile, oa.z0, profile.horizon)?;
    let crit = zero_criteria(&profile, None)?;
    zero_checks(ctx, &mut r, &z, oa.z0, &crit);
    r.data = json!({"first_zero": z.first_zero, "zero": z, "criteria": crit});
    Ok(r)
}
