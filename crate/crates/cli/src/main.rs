mod args;
mod config;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::Cli;
use config::RunConfig;
use manifest::RunManifest;
use run::{CliError, Outcome};

fn resolve(cli: Cli) -> Result<RunConfig, (CliError, Option<PathBuf>)> {
    let out_flag = cli.out.clone();
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| (CliError::Io(format!("{}: {e}", path.display())), out_flag.clone()))?;
            let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| (CliError::Schema(format!("{}: {e}", path.display())), out_flag.clone()))?;
            if cfg.command.name() != cli.command.name() {
                let msg = format!("config holds a {} payload but the subcommand is {}", cfg.command.name(), cli.command.name());
                return Err((CliError::Schema(msg), out_flag.or(Some(cfg.out))));
            }
            cfg
        }
        None => RunConfig { seed: 0, workers: 1, out: PathBuf::from("out"), command: cli.command.default_command() },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    cli.command.apply(&mut cfg.command);
    Ok(cfg)
}

fn finish(dir: &PathBuf, command: &str, config: serde_json::Value, started: Instant, files: &[String], result: Result<(), &CliError>) -> i32 {
    let config_sha256 = manifest::sha256_hex(config.to_string().as_bytes());
    let (status, exit_code, message) = match result {
        Ok(()) => ("ok", 0, None),
        Err(e) => (e.status(), e.exit_code(), Some(e.to_string())),
    };
    let (outputs, exit_code, status, message) = match manifest::entries(dir, files) {
        Ok(o) => (o, exit_code, status, message),
        Err(e) => (Vec::new(), 3, "io_error", Some(e.to_string())),
    };
    let m = RunManifest {
        command: command.to_string(),
        status,
        exit_code,
        config_sha256,
        config,
        versions: manifest::versions(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs,
        message,
    };
    match manifest::write(dir, &m) {
        Ok(()) => exit_code,
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            3
        }
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    let command = cli.command.name();
    let cfg = match resolve(cli) {
        Ok(cfg) => cfg,
        Err((e, out)) => {
            eprintln!("error: {e}");
            let dir = out.unwrap_or_else(|| PathBuf::from("out"));
            finish(&dir, command, serde_json::Value::Null, started, &[], Err(&e));
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let config = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);
    let result = run::validate(&cfg).and_then(|()| {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().map_err(|e| CliError::Io(e.to_string()))?;
        run::execute(&cfg, &cfg.out)
    });
    let (files, err) = match result {
        Ok(Outcome { files, summary, gate }) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            let err = (gate == Some(false)).then(|| CliError::Gate(format!("{command} gate failed")));
            (files, err)
        }
        Err(e) => (Vec::new(), Some(e)),
    };
    if let Some(e) = &err {
        eprintln!("error: {e}");
    }
    let code = finish(&cfg.out, command, config, started, &files, err.as_ref().map_or(Ok(()), Err));
    ExitCode::from(code as u8)
}
