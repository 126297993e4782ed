use std::path::PathBuf;

use pathcurrents::brownian::{Law, OuStart, PathLawSpec};
use pathcurrents::gibbs::{GibbsSpec, Reference};
use pathcurrents::potentials::{PairPotential, PotentialExt};
use pathcurrents::rough::{LiftScheme, TestField};
use serde::{Deserialize, Serialize};

/// Resolved configuration of one run; hashed into the manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub command: Command,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Sample(SampleCmd),
    LiftCheck(LiftCheckCmd),
    Integrate(IntegrateCmd),
    Energy(EnergyCmd),
    Gibbs(GibbsCmd),
    Cluster(ClusterCmd),
    Diag(DiagCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::LiftCheck(_) => "lift-check",
            Command::Integrate(_) => "integrate",
            Command::Energy(_) => "energy",
            Command::Gibbs(_) => "gibbs",
            Command::Cluster(_) => "cluster",
            Command::Diag(_) => "diag",
        }
    }
}

/// A batch of paths from one law. Without `law` the paths are Brownian
/// motions started at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsCfg {
    #[serde(default)]
    pub law: Option<Law>,
    pub interval: (f64, f64),
    pub level: u32,
    pub dim: usize,
    pub n_paths: usize,
}

impl PathsCfg {
    pub fn bm(level: u32, dim: usize, n_paths: usize) -> Self {
        PathsCfg { law: None, interval: (0.0, 1.0), level, dim, n_paths }
    }

    pub fn spec(&self) -> PathLawSpec {
        let law = self.law.clone().unwrap_or(Law::Bm { start: vec![0.0; self.dim] });
        PathLawSpec::new(law, self.interval, self.level, self.dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PathFormat {
    Csv,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCmd {
    pub paths: PathsCfg,
    pub format: PathFormat,
}

impl Default for SampleCmd {
    fn default() -> Self {
        SampleCmd { paths: PathsCfg::bm(10, 1, 10), format: PathFormat::Csv }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftCheckCmd {
    pub paths: PathsCfg,
    pub scheme: LiftScheme,
}

impl Default for LiftCheckCmd {
    fn default() -> Self {
        LiftCheckCmd { paths: PathsCfg::bm(8, 2, 5), scheme: LiftScheme::Ito }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateCmd {
    pub paths: PathsCfg,
    pub scheme: LiftScheme,
    pub fields: Vec<TestField>,
    /// Grid-time ranges; the whole interval when empty.
    pub ranges: Vec<(f64, f64)>,
}

impl Default for IntegrateCmd {
    fn default() -> Self {
        IntegrateCmd { paths: PathsCfg::bm(10, 2, 10), scheme: LiftScheme::Ito, fields: vec![TestField::rotation()], ranges: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCmd {
    pub paths: PathsCfg,
    pub w: PairPotential,
    /// Number of dyadic segments for the pair decomposition.
    pub segments: usize,
}

impl Default for EnergyCmd {
    fn default() -> Self {
        EnergyCmd {
            paths: PathsCfg { law: Some(Law::Ou { start: OuStart::Stationary }), interval: (0.0, 1.0), level: 8, dim: 1, n_paths: 10 },
            w: PairPotential::default(),
            segments: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsCmd {
    pub spec: GibbsSpec,
    pub n_samples: usize,
    /// Grid stride of the marginal moment table.
    pub marginal_stride: usize,
}

impl Default for GibbsCmd {
    fn default() -> Self {
        GibbsCmd {
            spec: GibbsSpec {
                half_window: 2.0,
                level: 6,
                dim: 1,
                ext: PotentialExt::HarmonicRef { dim: 1 },
                w: PairPotential::default(),
                lambda: 0.0,
                reference: Reference::NuStationary,
            },
            n_samples: 2000,
            marginal_stride: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterCheck {
    None,
    ZIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterCmd {
    /// Number of partition intervals.
    pub n: usize,
    /// Interval length.
    pub b: f64,
    pub lambda: f64,
    /// Grid level of each interval.
    pub level: u32,
    pub ext: PotentialExt,
    pub w: PairPotential,
    pub max_weight: usize,
    pub n_samples: usize,
    pub check: ClusterCheck,
    /// Direct draws for the identity check.
    pub n_direct: usize,
    /// Agreement gate in pooled standard errors.
    pub gate_se: f64,
}

impl Default for ClusterCmd {
    fn default() -> Self {
        ClusterCmd {
            n: 4,
            b: 1.0,
            lambda: 0.05,
            level: 4,
            ext: PotentialExt::HarmonicRef { dim: 1 },
            w: PairPotential::default(),
            max_weight: 4,
            n_samples: 20_000,
            check: ClusterCheck::None,
            n_direct: 20_000,
            gate_se: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Chen,
    TreeGraph,
    FreeCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagCmd {
    pub suite: Suite,
    /// Paths for the chen suite.
    pub paths: PathsCfg,
    /// Random instances for the tree-graph suite.
    pub instances: usize,
    /// Draws for the free-case suite.
    pub n_samples: usize,
    /// Defect limit for the chen suite.
    pub chen_limit: f64,
}

impl Default for DiagCmd {
    fn default() -> Self {
        DiagCmd { suite: Suite::Chen, paths: PathsCfg::bm(10, 2, 5), instances: 300, n_samples: 2000, chen_limit: 1e-12 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"seed": 1, "command": {"diag": {"suite": "chen", "paths": {"interval": [0, 1], "level": 4, "dim": 2, "n_paths": 1}, "instances": 1, "n_samples": 1, "chen_limit": 1e-12, "extra": 0}}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let top = r#"{"seed": 1, "colour": "red", "command": {"diag": {"suite": "chen", "paths": {"interval": [0, 1], "level": 4, "dim": 2, "n_paths": 1}, "instances": 1, "n_samples": 1, "chen_limit": 1e-12}}}"#;
        assert!(serde_json::from_str::<RunConfig>(top).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        for command in [
            Command::Sample(SampleCmd::default()),
            Command::LiftCheck(LiftCheckCmd::default()),
            Command::Integrate(IntegrateCmd::default()),
            Command::Energy(EnergyCmd::default()),
            Command::Gibbs(GibbsCmd::default()),
            Command::Cluster(ClusterCmd::default()),
            Command::Diag(DiagCmd::default()),
        ] {
            let cfg = RunConfig { seed: 3, workers: 1, out: "x".into(), command };
            let text = serde_json::to_string(&cfg).unwrap();
            let back: RunConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }

    #[test]
    fn missing_defaults_filled() {
        let cfg: RunConfig = serde_json::from_str(r#"{"command": {"cluster": {"lambda": 0.2}}}"#).unwrap();
        assert_eq!((cfg.seed, cfg.workers, cfg.out), (0, 1, PathBuf::from("out")));
        let Command::Cluster(c) = cfg.command else { panic!() };
        assert_eq!((c.lambda, c.n), (0.2, 4));
    }
}
