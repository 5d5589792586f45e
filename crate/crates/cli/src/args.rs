use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use phistatic::Tier;

#[derive(Debug, Parser)]
#[command(name = "phistatic", version, about = "Pointwise and integral checks for static fluid geometries coupled to maps")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Number of random evaluation points.
    #[arg(long, global = true, default_value_t = 16)]
    pub points: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Replace every default tolerance by a tier: alg, d1 or d3.
    #[arg(long, global = true, value_parser = parse_tier)]
    pub tol_tier: Option<Tier>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Quadrature refinement level.
    #[arg(long, global = true, default_value_t = 3)]
    pub refine: usize,
    /// Spaces per indentation level; 0 for compact output.
    #[arg(long, global = true, default_value_t = 2)]
    pub json_indent: usize,
}

fn parse_tier(s: &str) -> Result<Tier, String> {
    Tier::parse(s).ok_or_else(|| format!("unknown tier '{s}' (expected alg, d1 or d3)"))
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.to_string(), v))
}

/// A scene given as a file or as a catalog entry.
#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// Scene file (JSON).
    pub scene: Option<PathBuf>,
    /// Catalog entry instead of a file.
    #[arg(long, conflicts_with = "scene")]
    pub example: Option<String>,
    /// Catalog parameter, key=value; repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct OscArgs {
    /// Scene file; when absent a synthetic family is integrated.
    pub scene: Option<PathBuf>,
    #[arg(long, conflicts_with = "scene")]
    pub example: Option<String>,
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    /// power, expgamma or tabulated.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub z0: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical and φ-curvatures with their symmetry and trace identities.
    Curvature(SceneArgs),
    /// Residuals of the fluid or η field system.
    CheckSystem {
        #[command(flatten)]
        scene: SceneArgs,
        /// fluid or eta; defaults to the systems the scene claims.
        #[arg(long)]
        system: Option<String>,
    },
    /// First and second integrability conditions.
    Integrability(SceneArgs),
    /// Divergence identities whose hypotheses hold on the scene.
    Identities {
        #[command(flatten)]
        scene: SceneArgs,
        /// Restrict to these ids; repeatable.
        #[arg(long = "id")]
        ids: Vec<String>,
    },
    /// Lorentzian lift, Einstein residual and energy conditions.
    Energy {
        #[command(flatten)]
        scene: SceneArgs,
        /// Timelike or null draws per point and condition.
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Newton operators of the scene tensor: algebra, Codazzi defect, divergence.
    Newton {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Integral obstruction on a closed scene across refinement levels.
    KazdanWarner {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = phistatic::quadrature::POLE_EXCLUSION)]
        pole_exclusion: f64,
    },
    /// First zero of the radial Cauchy problem and the zero criteria.
    Oscillate(OscArgs),
    /// Built-in example scenes.
    Examples {
        #[command(subcommand)]
        cmd: ExamplesCmd,
    },
    /// Field-level diff of two reports.
    Diff { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesCmd {
    /// List entries and their default parameters.
    List,
    /// Run the default battery on an entry; parameters as `--name value`.
    Run {
        name: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        rest: Vec<String>,
    },
    /// Print an entry as a scene file.
    Export {
        name: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        rest: Vec<String>,
    },
}
