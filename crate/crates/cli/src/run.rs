use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use pathcurrents::brownian::sample_many;
use pathcurrents::cluster::{cluster_sum_estimate, tree_graph_random, write_activity_csv, z_identity_check, ActivityModel, Partition1D};
use pathcurrents::currents::GridCurrent;
use pathcurrents::gibbs::sample_mu_t;
use pathcurrents::io::{fmt_f64, write_evaluation_table, write_path_csv, write_paths_binary, EvaluationRow};
use pathcurrents::potentials::{pair_energy_table, w_energy, SegmentedPath};
use pathcurrents::rng::RngStream;
use pathcurrents::rough::{chen_defect_max, GridPath, Step2RoughPath};
use pathcurrents::Error;
use serde_json::json;

use crate::config::{ClusterCheck, ClusterCmd, Command, DiagCmd, EnergyCmd, GibbsCmd, IntegrateCmd, LiftCheckCmd, PathFormat, PathsCfg, RunConfig, SampleCmd, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Gate(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Gate(_) => 1,
            CliError::Io(_) => 3,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema_error",
            CliError::Gate(_) => "gate_failure",
            CliError::Io(_) => "io_error",
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => CliError::Io(e.to_string()),
            Error::EssCollapse { .. } | Error::NonPositiveZ(_) => CliError::Gate(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Files written (relative to the output directory), a JSON summary and, for
/// gated commands, whether the gate passed.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<String>,
    pub summary: serde_json::Value,
    pub gate: Option<bool>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn validate_paths(p: &PathsCfg) -> Result<(), CliError> {
    if p.n_paths == 0 {
        return Err(schema("n_paths must be positive"));
    }
    p.spec().validate()?;
    Ok(())
}

fn cluster_model(c: &ClusterCmd) -> Result<ActivityModel, CliError> {
    let model = ActivityModel { partition: Partition1D::with_spacing(c.n, c.b)?, level: c.level, ext: c.ext.clone(), w: c.w.clone(), lambda: c.lambda };
    model.validate()?;
    Ok(model)
}

/// Checks the configuration without running anything.
pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.workers == 0 {
        return Err(schema("workers must be positive"));
    }
    match &cfg.command {
        Command::Sample(c) => validate_paths(&c.paths),
        Command::LiftCheck(c) => validate_paths(&c.paths),
        Command::Integrate(c) => {
            validate_paths(&c.paths)?;
            if c.fields.is_empty() {
                return Err(schema("at least one field is required"));
            }
            for f in &c.fields {
                f.validate(c.paths.dim)?;
            }
            let (lo, hi) = c.paths.interval;
            if c.ranges.iter().any(|&(s, t)| !(lo <= s && s <= t && t <= hi)) {
                return Err(schema("ranges must satisfy start <= s <= t <= end"));
            }
            Ok(())
        }
        Command::Energy(c) => {
            validate_paths(&c.paths)?;
            c.w.validate()?;
            if c.segments < 2 || !c.segments.is_power_of_two() || c.segments as u64 > 1u64 << c.paths.level {
                return Err(schema("segments must be a power of two between 2 and the number of grid steps"));
            }
            Ok(())
        }
        Command::Gibbs(c) => {
            c.spec.validate()?;
            if c.n_samples < 2 || c.marginal_stride == 0 {
                return Err(schema("n_samples must be at least 2 and marginal_stride positive"));
            }
            Ok(())
        }
        Command::Cluster(c) => {
            cluster_model(c)?;
            if c.max_weight == 0 || c.n_samples < 2 || !(c.gate_se > 0.0) {
                return Err(schema("max_weight must be positive, n_samples at least 2 and gate_se positive"));
            }
            if c.check == ClusterCheck::ZIdentity && (c.n_direct < 2 || !c.n.is_power_of_two()) {
                return Err(schema("the identity check needs n_direct >= 2 and a power-of-two N"));
            }
            Ok(())
        }
        Command::Diag(c) => {
            match c.suite {
                Suite::Chen => validate_paths(&c.paths)?,
                Suite::TreeGraph if c.instances == 0 => return Err(schema("instances must be positive")),
                Suite::FreeCase if c.n_samples < 2 => return Err(schema("n_samples must be at least 2")),
                _ => {}
            }
            if !(c.chen_limit > 0.0) {
                return Err(schema("chen_limit must be positive"));
            }
            Ok(())
        }
    }
}

pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(dir)?;
    let stream = RngStream::new(cfg.seed);
    match &cfg.command {
        Command::Sample(c) => sample(c, dir, stream),
        Command::LiftCheck(c) => lift_check(c, dir, stream),
        Command::Integrate(c) => integrate(c, dir, stream),
        Command::Energy(c) => energy(c, dir, stream),
        Command::Gibbs(c) => gibbs(c, dir, stream),
        Command::Cluster(c) => cluster(c, dir, stream),
        Command::Diag(c) => diag(c, dir, stream),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = Path::new(name).parent() {
        fs::create_dir_all(dir.join(parent))?;
    }
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn draw(p: &PathsCfg, stream: RngStream) -> Result<Vec<GridPath>, CliError> {
    Ok(sample_many(&p.spec(), p.n_paths, stream)?)
}

fn sample(c: &SampleCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let paths = draw(&c.paths, stream)?;
    let files = match c.format {
        PathFormat::Csv => {
            let mut files = Vec::new();
            for (i, p) in paths.iter().enumerate() {
                let name = format!("paths/path_{i:05}.csv");
                write_path_csv(p, create(dir, &name)?)?;
                files.push(name);
            }
            files
        }
        PathFormat::Binary => {
            write_paths_binary(&paths, create(dir, "paths.bin")?)?;
            vec!["paths.bin".to_string()]
        }
    };
    Ok(Outcome { summary: json!({ "paths": paths.len(), "points_per_path": paths[0].n_points() }), files, gate: None })
}

fn chen_table(p: &PathsCfg, scheme: pathcurrents::rough::LiftScheme, dir: &Path, stream: RngStream) -> Result<f64, CliError> {
    let mut w = csv::Writer::from_writer(create(dir, "chen.csv")?);
    w.write_record(["path", "max_defect", "triples"])?;
    let mut worst = 0.0f64;
    for (i, path) in draw(p, stream)?.into_iter().enumerate() {
        let r = chen_defect_max(&Step2RoughPath::lift(path, scheme))?;
        worst = worst.max(r.max_abs);
        w.write_record([i.to_string(), fmt_f64(r.max_abs), r.triples.to_string()])?;
    }
    w.flush()?;
    Ok(worst)
}

fn lift_check(c: &LiftCheckCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let worst = chen_table(&c.paths, c.scheme, dir, stream)?;
    Ok(Outcome { files: vec!["chen.csv".into()], summary: json!({ "max_defect": worst }), gate: None })
}

fn integrate(c: &IntegrateCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let ranges = if c.ranges.is_empty() { vec![c.paths.interval] } else { c.ranges.clone() };
    let mut rows = Vec::new();
    for (i, path) in draw(&c.paths, stream)?.into_iter().enumerate() {
        let current = GridCurrent::new(Arc::new(Step2RoughPath::lift(path, c.scheme)));
        for f in &c.fields {
            let name = serde_json::to_string(f).map_err(|e| CliError::Io(e.to_string()))?;
            for &(s, t) in &ranges {
                rows.push(EvaluationRow { path: i, field: name.clone(), s, t, value: current.evaluate(f, s, t)? });
            }
        }
    }
    write_evaluation_table(&rows, create(dir, "integrals.csv")?)?;
    Ok(Outcome { files: vec!["integrals.csv".into()], summary: json!({ "rows": rows.len() }), gate: None })
}

fn energy(c: &EnergyCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let mut totals = csv::Writer::from_writer(create(dir, "energy.csv")?);
    totals.write_record(["path", "w_energy", "segment_total"])?;
    let mut pairs = csv::Writer::from_writer(create(dir, "pairs.csv")?);
    pairs.write_record(["path", "i", "j", "pair_energy"])?;
    let n = c.segments;
    for (k, path) in draw(&c.paths, stream)?.into_iter().enumerate() {
        let seg = SegmentedPath::split(&path, n)?;
        let lift = Step2RoughPath::lift(path, pathcurrents::rough::LiftScheme::Ito);
        let total = w_energy(&lift, &c.w, 0, lift.n_steps())?;
        totals.write_record([k.to_string(), fmt_f64(total), fmt_f64(seg.total_energy(&c.w))])?;
        let table = pair_energy_table(&seg, &c.w);
        for i in 0..n {
            for j in i + 1..n {
                pairs.write_record([k.to_string(), i.to_string(), j.to_string(), fmt_f64(table[i * n + j])])?;
            }
        }
    }
    totals.flush()?;
    pairs.flush()?;
    Ok(Outcome { files: vec!["energy.csv".into(), "pairs.csv".into()], summary: json!({ "paths": c.paths.n_paths, "segments": n }), gate: None })
}

fn gibbs(c: &GibbsCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let ens = sample_mu_t(&c.spec, c.n_samples, stream)?;
    let summary = ens.summary();
    let mut w = csv::Writer::from_writer(create(dir, "expectations.csv")?);
    w.write_record(["time", "component", "mean", "mean_se", "second_moment", "second_moment_se"])?;
    for r in ens.marginal_moments(c.marginal_stride) {
        w.write_record([fmt_f64(r.time), r.component.to_string(), fmt_f64(r.mean.value), fmt_f64(r.mean.se), fmt_f64(r.second_moment.value), fmt_f64(r.second_moment.se)])?;
    }
    w.flush()?;
    let mut d = csv::Writer::from_writer(create(dir, "diagnostics.csv")?);
    d.write_record(["n", "ess", "max_weight_share", "log_weight_min", "log_weight_max"])?;
    d.write_record([summary.n.to_string(), fmt_f64(summary.ess), fmt_f64(summary.max_weight_share), fmt_f64(summary.log_weight_min), fmt_f64(summary.log_weight_max)])?;
    d.flush()?;
    let value = serde_json::to_value(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_json(dir, "summary.json", &value)?;
    Ok(Outcome { files: vec!["summary.json".into(), "expectations.csv".into(), "diagnostics.csv".into()], summary: value, gate: None })
}

fn cluster(c: &ClusterCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let model = cluster_model(c)?;
    let (summary, estimates, gate) = match c.check {
        ClusterCheck::None => {
            let cs = cluster_sum_estimate(&model, c.max_weight, c.n_samples, stream)?;
            (json!({ "n_clusters": cs.batch.estimates.len(), "z": cs.z, "truncated": cs.truncated }), cs.batch.estimates, None)
        }
        ClusterCheck::ZIdentity => {
            let (report, batch) = z_identity_check(&model, c.max_weight, c.n_samples, c.n_direct, stream)?;
            let pass = report.agrees(c.gate_se);
            (json!({ "report": report, "z_score": report.z_score(), "gate_se": c.gate_se, "pass": pass }), batch.estimates, Some(pass))
        }
    };
    write_activity_csv(create(dir, "activities.csv")?, &estimates)?;
    write_json(dir, "summary.json", &summary)?;
    Ok(Outcome { files: vec!["activities.csv".into(), "summary.json".into()], summary, gate })
}

fn diag(c: &DiagCmd, dir: &Path, stream: RngStream) -> Result<Outcome, CliError> {
    let (summary, mut files, pass) = match c.suite {
        Suite::Chen => {
            let worst = chen_table(&c.paths, pathcurrents::rough::LiftScheme::Ito, dir, stream)?;
            let pass = worst <= c.chen_limit;
            (json!({ "suite": "chen", "max_defect": worst, "limit": c.chen_limit, "pass": pass }), vec!["chen.csv".to_string()], pass)
        }
        Suite::TreeGraph => {
            let checks = tree_graph_random(c.instances, stream)?;
            let mut w = csv::Writer::from_writer(create(dir, "tree_graph.csv")?);
            w.write_record(["instance", "r", "lhs", "rhs", "holds"])?;
            for (k, (r, t)) in checks.iter().enumerate() {
                w.write_record([k.to_string(), r.to_string(), fmt_f64(t.lhs), fmt_f64(t.rhs), t.holds.to_string()])?;
            }
            w.flush()?;
            let violations = checks.iter().filter(|(_, t)| !t.holds).count();
            (json!({ "suite": "tree-graph", "instances": checks.len(), "violations": violations, "pass": violations == 0 }), vec!["tree_graph.csv".to_string()], violations == 0)
        }
        Suite::FreeCase => {
            let mut spec = crate::config::GibbsCmd::default().spec;
            spec.lambda = 0.0;
            let s = sample_mu_t(&spec, c.n_samples, stream)?.summary();
            let pass = s.z_hat.value == 1.0 && s.z_hat.se == 0.0;
            (json!({ "suite": "free-case", "z_hat": s.z_hat, "ess": s.ess, "pass": pass }), Vec::new(), pass)
        }
    };
    write_json(dir, "summary.json", &summary)?;
    files.push("summary.json".into());
    Ok(Outcome { files, summary, gate: Some(pass) })
}
