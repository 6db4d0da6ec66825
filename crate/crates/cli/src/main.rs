//! `kfourier`: runs one named experiment from a JSON configuration and
//! writes CSV artifacts plus a manifest with their SHA-256 hashes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::ExperimentConfig;
use experiments::{Verdict, EXPERIMENTS};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ACCURACY: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "kfourier", version, about = "Fourier-space experiments for the homogeneous Boltzmann equation")]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Seed for randomized checks; overrides the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Smallest angle of the angular quadrature; overrides the configuration.
    #[arg(long, value_name = "THETA")]
    theta_min: Option<f64>,
    /// Recompute the c_{alpha,d,M} table.
    #[arg(long)]
    regen_fixtures: bool,
    /// Print the experiment names and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Serialize)]
struct Artifact {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    experiment: String,
    seed: u64,
    config_sha256: String,
    status: &'static str,
    message: Option<String>,
    exit_code: u8,
    artifacts: Vec<Artifact>,
    created_unix: u64,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn exit_code(err: &kinetic_fourier::Error) -> u8 {
    use kinetic_fourier::Error::*;
    match err {
        Config(_) | Domain(_) | Parse { .. } | Variant(_) => EXIT_CONFIG,
        Verification { .. } => EXIT_VERIFICATION,
        _ => EXIT_ACCURACY,
    }
}

fn regen_fixtures(out: Option<&Path>) -> Result<(), String> {
    let table = kinetic_fourier::metric::regenerate_fixtures().map_err(|e| e.to_string())?;
    let path = match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            dir.join("c_constants.tsv")
        }
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/c_constants.tsv"),
    };
    fs::write(&path, table).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(args: Args) -> Result<u8, (u8, String)> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err((EXIT_CONFIG, "--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (EXIT_FAILURE, format!("thread pool: {e}")))?;
    }
    if args.list {
        for (name, about) in EXPERIMENTS {
            println!("{name:<18} {about}");
        }
        return Ok(0);
    }
    if args.regen_fixtures {
        regen_fixtures(args.out.as_deref()).map_err(|e| (EXIT_FAILURE, e))?;
        if args.config.is_none() {
            return Ok(0);
        }
    }
    let path = args.config.ok_or((EXIT_CONFIG, "--config is required (or use --list)".to_string()))?;
    let text = fs::read_to_string(&path).map_err(|e| (EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(theta) = args.theta_min {
        if !(theta > 0.0 && theta < 0.1) {
            return Err((EXIT_CONFIG, format!("--theta-min {theta} outside (0, 0.1)")));
        }
        cfg.quadrature.theta_min = theta;
    }
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));

    let (files, verdict) = match experiments::run(&cfg) {
        Ok(o) => (o.files, o.verdict),
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_CONFIG {
                return Err((code, format!("{}: {e}", path.display())));
            }
            let v = if code == EXIT_VERIFICATION { Verdict::Verification(e.to_string()) } else { Verdict::Accuracy(e.to_string()) };
            (Vec::new(), v)
        }
    };
    let (status, message, code) = match &verdict {
        Verdict::Pass => ("pass", None, 0),
        Verdict::Accuracy(m) => ("accuracy-failure", Some(m.clone()), EXIT_ACCURACY),
        Verdict::Verification(m) => ("verification-failure", Some(m.clone()), EXIT_VERIFICATION),
    };

    fs::create_dir_all(&out).map_err(|e| (EXIT_FAILURE, format!("cannot create {}: {e}", out.display())))?;
    let mut artifacts = Vec::with_capacity(files.len());
    for (name, contents) in &files {
        write(&out, name, contents).map_err(|e| (EXIT_FAILURE, e))?;
        artifacts.push(Artifact { file: name.clone(), bytes: contents.len(), sha256: sha256(contents.as_bytes()) });
    }
    let manifest = Manifest {
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        config_sha256: sha256(text.as_bytes()),
        status,
        message: message.clone(),
        exit_code: code,
        artifacts,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    write(&out, "manifest.json", &(json + "\n")).map_err(|e| (EXIT_FAILURE, e))?;
    match message {
        Some(m) => eprintln!("{}: {status}: {m}", cfg.experiment),
        None => println!("{}: pass ({} artifacts in {})", cfg.experiment, files.len(), out.display()),
    }
    Ok(code)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
