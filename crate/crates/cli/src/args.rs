use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pathcurrents::rough::{LiftScheme, TestField};
use serde::de::DeserializeOwned;

use crate::config::{ClusterCheck, ClusterCmd, Command, DiagCmd, EnergyCmd, GibbsCmd, IntegrateCmd, LiftCheckCmd, PathFormat, PathsCfg, SampleCmd, Suite};

/// Batch driver for rough-path currents, path-space Gibbs measures and
/// cluster expansions.
///
/// Settings are resolved as defaults, then the `--config` file, then
/// environment variables, then flags.
#[derive(Debug, Parser)]
#[command(name = "pathcurrents", version)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = "PATHCURRENTS_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "PATHCURRENTS_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for library batch calls.
    #[arg(long, global = true, env = "PATHCURRENTS_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "PATHCURRENTS_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Sample paths and write them as CSV or binary.
    Sample(SampleArgs),
    /// Chen defect of lifted paths.
    LiftCheck(LiftCheckArgs),
    /// Rough integrals of test fields along sampled paths.
    Integrate(IntegrateArgs),
    /// Path energies and their pair decomposition.
    Energy(EnergyArgs),
    /// Weighted draws from the finite-window Gibbs measure.
    Gibbs(GibbsArgs),
    /// Cluster activities and the polymer-gas partition function.
    Cluster(ClusterArgs),
    /// Gated diagnostic suites; exit status 1 on failure.
    Diag(DiagArgs),
}

impl Sub {
    pub fn name(&self) -> &'static str {
        match self {
            Sub::Sample(_) => "sample",
            Sub::LiftCheck(_) => "lift-check",
            Sub::Integrate(_) => "integrate",
            Sub::Energy(_) => "energy",
            Sub::Gibbs(_) => "gibbs",
            Sub::Cluster(_) => "cluster",
            Sub::Diag(_) => "diag",
        }
    }

    pub fn default_command(&self) -> Command {
        match self {
            Sub::Sample(_) => Command::Sample(SampleCmd::default()),
            Sub::LiftCheck(_) => Command::LiftCheck(LiftCheckCmd::default()),
            Sub::Integrate(_) => Command::Integrate(IntegrateCmd::default()),
            Sub::Energy(_) => Command::Energy(EnergyCmd::default()),
            Sub::Gibbs(_) => Command::Gibbs(GibbsCmd::default()),
            Sub::Cluster(_) => Command::Cluster(ClusterCmd::default()),
            Sub::Diag(_) => Command::Diag(DiagCmd::default()),
        }
    }

    /// Applies the flags that were given on top of `command`.
    pub fn apply(self, command: &mut Command) {
        match (self, command) {
            (Sub::Sample(a), Command::Sample(c)) => {
                a.paths.apply(&mut c.paths);
                set(&mut c.format, a.format);
            }
            (Sub::LiftCheck(a), Command::LiftCheck(c)) => {
                a.paths.apply(&mut c.paths);
                set(&mut c.scheme, a.scheme);
            }
            (Sub::Integrate(a), Command::Integrate(c)) => {
                a.paths.apply(&mut c.paths);
                set(&mut c.scheme, a.scheme);
                if !a.field.is_empty() {
                    c.fields = a.field;
                }
            }
            (Sub::Energy(a), Command::Energy(c)) => {
                a.paths.apply(&mut c.paths);
                set(&mut c.segments, a.segments);
            }
            (Sub::Gibbs(a), Command::Gibbs(c)) => {
                set(&mut c.spec.lambda, a.lambda);
                set(&mut c.spec.half_window, a.half_window);
                set(&mut c.spec.level, a.level);
                set(&mut c.n_samples, a.n_samples);
                set(&mut c.marginal_stride, a.marginal_stride);
            }
            (Sub::Cluster(a), Command::Cluster(c)) => {
                set(&mut c.n, a.n);
                set(&mut c.b, a.b);
                set(&mut c.lambda, a.lambda);
                set(&mut c.level, a.level);
                set(&mut c.max_weight, a.max_weight);
                set(&mut c.n_samples, a.n_samples);
                set(&mut c.check, a.check);
                set(&mut c.n_direct, a.n_direct);
            }
            (Sub::Diag(a), Command::Diag(c)) => {
                set(&mut c.suite, a.suite);
                a.paths.apply(&mut c.paths);
                set(&mut c.instances, a.instances);
                set(&mut c.n_samples, a.n_samples);
            }
            _ => unreachable!("subcommand and payload are matched before applying flags"),
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn json_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).or_else(|_| serde_json::from_value(serde_json::Value::String(s.to_string()))).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub dim: Option<usize>,
}

impl PathArgs {
    fn apply(self, p: &mut PathsCfg) {
        set(&mut p.n_paths, self.n_paths);
        set(&mut p.level, self.level);
        set(&mut p.dim, self.dim);
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub paths: PathArgs,
    #[arg(long, value_enum)]
    pub format: Option<PathFormat>,
}

#[derive(Debug, Args)]
pub struct LiftCheckArgs {
    #[command(flatten)]
    pub paths: PathArgs,
    /// ito, strat_exact or strat_trapezoid.
    #[arg(long, value_parser = json_value::<LiftScheme>)]
    pub scheme: Option<LiftScheme>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub paths: PathArgs,
    #[arg(long, value_parser = json_value::<LiftScheme>)]
    pub scheme: Option<LiftScheme>,
    /// Test field as JSON, e.g. '{"family":"linear_coordinate","from":0,"to":1}'. Repeatable.
    #[arg(long, value_parser = json_value::<TestField>)]
    pub field: Vec<TestField>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub paths: PathArgs,
    /// Dyadic segments of the pair decomposition.
    #[arg(long)]
    pub segments: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub half_window: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub marginal_stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Number of partition intervals.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Interval length.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid level of each interval.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub max_weight: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, value_enum)]
    pub check: Option<ClusterCheck>,
    #[arg(long)]
    pub n_direct: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[command(flatten)]
    pub paths: PathArgs,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
}
