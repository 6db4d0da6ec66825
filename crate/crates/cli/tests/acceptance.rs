//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use kinetic_fourier::charfun::{bochner_spotcheck, lattice_samples, CharFn, DiscreteMeasure, RadialCharFn, RadialGrid};
use kinetic_fourier::kernel::{gamma2, lambda_alpha, KernelSpec};
use kinetic_fourier::metric::{default_truncation, m_norm, moment_exact, moment_upper, sup_norm};
use kinetic_fourier::physical::{moment_trajectory_check, sobolev_norm};
use kinetic_fourier::solver::{
    cutoff_sequence_study, default_quadrature, duhamel_evolve, evolve, evolve_noncutoff, verify_stability, SolverConfig,
    Trajectory,
};

type Outcome = Result<String, String>;

/// Trajectories produced along the way, re-checked by the invariant criteria.
static RUNS: Mutex<Vec<(String, Trajectory<f64>)>> = Mutex::new(Vec::new());

fn keep(label: &str, traj: &Trajectory<f64>) {
    RUNS.lock().unwrap().push((label.to_string(), traj.clone()));
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lift<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn unit_kernel() -> KernelSpec<f64> {
    KernelSpec::constant(1.0).unwrap()
}

fn singular_kernel() -> KernelSpec<f64> {
    KernelSpec::singular(0.25, 1.0).unwrap()
}

fn sample(phi: CharFn<f64>, cfg: &SolverConfig<f64>) -> Result<RadialCharFn<f64>, String> {
    lift(phi.sample_radial(cfg.grid.clone()))
}

fn max_deviation(traj: &Trajectory<f64>, reference: &RadialCharFn<f64>) -> f64 {
    traj.snapshots
        .iter()
        .flat_map(|s| s.values().iter().zip(reference.values()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn kfourier(config: &str, out: &Path, extra: &[&str]) -> Result<i32, String> {
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let path = out.join("config.json");
    fs::write(&path, config).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_kfourier"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out.join("run"))
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    Ok(status.status.code().unwrap_or(-1))
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).into_iter().flatten().flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            files.insert(name, fs::read(entry.path()).unwrap_or_default());
        }
    }
    files
}

fn constants() -> Outcome {
    let quad = default_quadrature();
    let l2_unit = lift(lambda_alpha(&unit_kernel(), 2.0, &quad))?.value().unwrap_or(f64::NAN);
    let l2_sing = lift(lambda_alpha(&singular_kernel(), 2.0, &quad))?.value().unwrap_or(f64::NAN);
    let l1 = lift(lambda_alpha(&unit_kernel(), 1.0, &quad))?.value().unwrap_or(f64::NAN);
    let g2 = lift(gamma2(&unit_kernel(), &quad))?.value().unwrap_or(f64::NAN);

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = kfourier(r#"{"experiment": "constants", "alphas": [1, 2]}"#, dir.path(), &[])?;
    let csv = fs::read_to_string(dir.path().join("run/constants.csv")).map_err(|e| e.to_string())?;
    let row = |name: &str, alpha: &str| -> f64 {
        csv.lines()
            .map(|l| l.split(',').collect::<Vec<_>>())
            .find(|c| c[0] == name && c[1] == alpha)
            .and_then(|c| c[2].parse().ok())
            .unwrap_or(f64::NAN)
    };
    let cli_ok = code == 0
        && (row("gamma2", "") - 2.0 * PI).abs() < 1e-10
        && (row("lambda", "1") - 2.0 * PI / 3.0).abs() < 1e-8
        && row("lambda", "2").abs() < 1e-12;
    ensure(
        l2_unit.abs() < 1e-12 && l2_sing.abs() < 1e-12 && (l1 - 2.0 * PI / 3.0).abs() < 1e-8 && (g2 - 2.0 * PI).abs() < 1e-10 && cli_ok,
        format!(
            "lambda2 {l2_unit:.1e} / {l2_sing:.1e}, lambda1 - 2pi/3 = {:.1e}, gamma2 - 2pi = {:.1e}, cli rows ok = {cli_ok}",
            l1 - 2.0 * PI / 3.0,
            g2 - 2.0 * PI
        ),
    )
}

fn moment_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    for i in 0..50u64 {
        let n = 2 + (i as usize) % 7;
        let m = lift(DiscreteMeasure::<f64>::random_mean_zero(3, n, 10.0, 1000 + i))?;
        if m.max_speed() > 10.0 {
            return Err(format!("seed {} has an atom beyond |v| = 10", 1000 + i));
        }
        let phi = CharFn::discrete(m.clone());
        for a in [0.3, 0.5, 1.0, 1.5, 1.9] {
            let direct = m.absolute_moment(a);
            let got = lift(lift(moment_exact(&phi, a))?.finite("moment"))?;
            worst = worst.max((got - direct).abs() / direct);
        }
    }
    ensure(worst <= 1e-4, format!("worst relative error {worst:.2e} over 250 cases"))
}

fn norm_fixtures() -> Outcome {
    let g = lift(CharFn::gaussian(1.0, 3))?;
    let one = lift(CharFn::one(3))?;
    let (eps, radius) = default_truncation(&g);
    let m = lift(lift(m_norm(&g, &one, 1.0, eps, radius))?.upper("m_norm"))?;
    let target = 4.0 * PI * (PI / 2.0).sqrt();
    let mu = lift(moment_upper(&g, 1.0))?.value;
    let mu_target = 2.0 * (2.0 / PI).sqrt();
    let (e1, e2) = ((m - target).abs() / target, (mu - mu_target).abs());
    ensure(e1 <= 1e-5 && e2 <= 1e-4, format!("M^1 norm rel error {e1:.1e}, moment bound error {e2:.1e}"))
}

fn strict_inclusion() -> Outcome {
    let st = lift(CharFn::stable(1.0, 3))?;
    let one = lift(CharFn::one(3))?;
    let eps = [1e-2_f64, 1e-3, 1e-4];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in eps {
        xs.push((1.0 / e).ln());
        ys.push(lift(m_norm(&st, &one, 1.0, e, 1e7))?.value);
    }
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let rel = (slope - 4.0 * PI).abs() / (4.0 * PI);
    let sup = lift(sup_norm(&st, &one, 1.0, &RadialGrid::standard()))?.value;
    ensure(rel <= 0.05 && sup <= 1.0, format!("fitted slope {slope:.4} (4pi = {:.4}, {:.2}% off), sup norm {sup:.15}", 4.0 * PI, 100.0 * rel))
}

fn gaussian_stationarity() -> Outcome {
    let cfg = SolverConfig::new(unit_kernel()).with_horizon(1.0).with_dt(0.05);
    let g = sample(lift(CharFn::gaussian(1.0, 3))?, &cfg)?;
    let tr = lift(duhamel_evolve(&g, &cfg))?;
    let d1 = max_deviation(&tr, &g);
    keep("gaussian b=1", &tr);
    let cfg = SolverConfig::new(singular_kernel()).with_horizon(0.5).with_dt(0.01).with_snapshot_every(0.05);
    let tr = lift(evolve_noncutoff(&g, &cfg))?;
    let d2 = max_deviation(&tr, &g);
    keep("gaussian s=0.25", &tr);
    ensure(d1 <= 1e-6 && d2 <= 5e-6, format!("Duhamel deviation {d1:.1e} (limit 1e-6), non-cutoff deviation {d2:.1e} (limit 5e-6)"))
}

fn stability_config(kernel: KernelSpec<f64>) -> SolverConfig<f64> {
    SolverConfig::new(kernel).with_alpha(1.0).with_horizon(0.5).with_dt(0.01).with_snapshot_every(0.05)
}

fn stability_envelopes() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, kernel, a, b) in [
        ("gaussian(1)/gaussian(1.1), b=1", unit_kernel(), CharFn::gaussian(1.0, 3), CharFn::gaussian(1.1, 3)),
        ("sphere(1)/gaussian(1), s=0.25", singular_kernel(), CharFn::uniform_sphere(1.0, 3), CharFn::gaussian(1.0, 3)),
    ] {
        let cfg = stability_config(kernel);
        let (a, b) = (sample(lift(a)?, &cfg)?, sample(lift(b)?, &cfg)?);
        let rep = lift(verify_stability(&a, &b, &cfg.with_diagnostics(false), 1.05))?;
        ok &= rep.passed();
        detail.push(format!("{label}: max ratios {:.4} / {:.4}", rep.max_m_ratio(), rep.max_k_ratio()));
    }
    ensure(ok, detail.join("; "))
}

fn smoothing() -> Outcome {
    let cfg = SolverConfig::new(singular_kernel()).with_horizon(0.2).with_dt(0.01).with_snapshot_every(0.05).with_diagnostics(false);
    let u = sample(lift(CharFn::uniform_sphere(1.0, 3))?, &cfg)?;
    let tr = lift(evolve(&u, &cfg))?;
    keep("sphere s=0.25 to 0.2", &tr);
    let radius = cfg.grid.r_max();
    let h0 = lift(sobolev_norm(&tr.snapshots[0], 2, radius))?;
    // ∫ r^{2N} sin²r dr grows like R^{2N+1}
    let rough = !h0.converged && (h0.growth_exponent - 5.0).abs() < 0.5;
    let at = |t: f64| tr.at(t).ok_or(format!("no snapshot at t = {t}"));
    let mut smooth = true;
    for n in 1..=4 {
        smooth &= lift(sobolev_norm(at(0.1)?, n, radius))?.converged;
    }
    let tail = |p: &RadialCharFn<f64>| {
        p.grid().radii().iter().zip(p.values()).filter(|(r, _)| **r >= 20.0).fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
    };
    let (t05, t20) = (tail(at(0.05)?), tail(at(0.2)?));
    ensure(
        rough && smooth && t20 < t05,
        format!(
            "t=0: converged {} growth exponent {:.3}; t=0.1 N=1..4 converged {smooth}; tail sup {t05:.2e} -> {t20:.2e}",
            h0.converged, h0.growth_exponent
        ),
    )
}

fn cutoff_limit() -> Outcome {
    let cfg = SolverConfig::new(singular_kernel()).with_horizon(0.25).with_dt(0.01).with_snapshot_every(0.05).with_diagnostics(false);
    let u = sample(lift(CharFn::uniform_sphere(1.0, 3))?, &cfg)?;
    let study = lift(cutoff_sequence_study(&u, &cfg, &[4.0, 16.0, 64.0, 256.0], true))?;
    for (n, tr) in study.levels.iter().zip(&study.trajectories) {
        keep(&format!("sphere b_{n}"), tr);
    }
    let d = study.direct_distance.unwrap_or(f64::NAN);
    let tol = study.direct_tolerance.unwrap_or(f64::NAN);
    ensure(
        study.is_strictly_decreasing() && d <= 10.0 * tol,
        format!("successive distances [{}]; n=256 vs direct {d:.2e} (10 x tolerance {:.2e})", study.successive.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "), 10.0 * tol),
    )
}

fn moment_propagation() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, kernel, data) in [
        ("b=1", unit_kernel(), [CharFn::gaussian(1.0, 3), CharFn::gaussian(1.1, 3)]),
        ("s=0.25", singular_kernel(), [CharFn::uniform_sphere(1.0, 3), CharFn::gaussian(1.0, 3)]),
    ] {
        let cfg = stability_config(kernel).with_diagnostics(false);
        for (k, phi) in data.into_iter().enumerate() {
            let tr = lift(evolve(&sample(lift(phi)?, &cfg)?, &cfg))?;
            let track = lift(moment_trajectory_check(&tr, 1.0, 0.5, &cfg.quadrature))?;
            let worst = track.rows.iter().map(|r| r.1 / r.2).fold(0.0, f64::max);
            ok &= track.passed();
            detail.push(format!("{label} #{k}: max lhs/bound {worst:.3}"));
            keep(&format!("{label} pair #{k}"), &tr);
        }
    }
    ensure(ok, detail.join("; "))
}

fn reproducibility() -> Outcome {
    let configs = [
        ("constants", r#"{"experiment": "constants", "kernel": {"family": "singular", "s": 0.25}}"#),
        ("moments", r#"{"experiment": "moments", "initial": {"family": "random", "samples": 6}, "alphas": [0.5, 1.5], "seed": 42}"#),
        (
            "evolve",
            r#"{"experiment": "evolve", "kernel": {"family": "singular", "s": 0.25}, "initial": {"family": "uniform-sphere"}, "horizon": 0.1, "dt": 0.01, "snapshot_every": 0.05}"#,
        ),
        ("continuity", r#"{"experiment": "verify-continuity", "initial": {"family": "uniform-sphere"}, "horizon": 0.2}"#),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (name, cfg) in configs {
        let mut outputs = Vec::new();
        for (run, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
            let out = dir.path().join(format!("{name}-{run}"));
            let code = kfourier(cfg, &out, &["--threads", threads, "--seed", "42"])?;
            if code != 0 {
                return Err(format!("{name} exited with {code}"));
            }
            outputs.push(csv_files(&out.join("run")));
        }
        if outputs[0].is_empty() {
            return Err(format!("{name} wrote no CSV files"));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{name}: two equal-seed runs differ"));
        }
        if outputs[0] != outputs[2] {
            return Err(format!("{name}: 1 and 8 threads differ"));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} CSV files byte-identical across repeated runs and thread counts 1, 8"))
}

fn contraction() -> Outcome {
    let runs = RUNS.lock().unwrap();
    let mut measured = 0;
    let mut worst = 0.0_f64;
    for (label, tr) in runs.iter() {
        for s in &tr.steps {
            if let Some(c) = s.contraction {
                measured += 1;
                worst = worst.max(c / s.bound);
                if c > s.bound {
                    return Err(format!("{label}: factor {c:.3e} exceeds gamma_alpha dt = {:.3e} at t = {}", s.bound, s.t));
                }
            }
        }
    }
    ensure(measured > 0, format!("{measured} measured Picard steps, max factor / (gamma_alpha dt) = {worst:.3}"))
}

fn mass_and_modulus() -> Outcome {
    let runs = RUNS.lock().unwrap();
    let points = lattice_samples(3, 16, 3.5);
    let (mut snaps, mut mass, mut modulus, mut eig) = (0, 0.0_f64, 0.0_f64, f64::INFINITY);
    for (label, tr) in runs.iter() {
        for (t, s) in tr.times.iter().zip(&tr.snapshots) {
            snaps += 1;
            mass = mass.max((s.values()[0] - 1.0).abs());
            modulus = modulus.max(s.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            let e = lift(bochner_spotcheck(&CharFn::radial(s.clone()), &points))?;
            eig = eig.min(e);
            if (s.values()[0] - 1.0).abs() > 1e-12 || modulus > 1.0 + 1e-10 || e < -1e-8 {
                return Err(format!("{label} at t = {t}: psi(0) - 1 = {:.1e}, max |psi| = {modulus}, min eigenvalue {e:.1e}", s.values()[0] - 1.0));
            }
        }
    }
    ensure(
        snaps > 0,
        format!("{snaps} snapshots from {} runs: |psi(0) - 1| <= {mass:.1e}, max |psi| = {modulus}, min Bochner eigenvalue {eig:.2e}", runs.len()),
    )
}

type Criterion = (u8, &'static str, fn() -> Outcome);

fn main() {
    let start = Instant::now();
    let first: [Criterion; 10] = [
        (1, "kernel constants", constants),
        (2, "moment extraction oracle", moment_oracle),
        (3, "norm fixtures", norm_fixtures),
        (4, "strict inclusion witness", strict_inclusion),
        (5, "gaussian stationarity", gaussian_stationarity),
        (7, "stability envelopes", stability_envelopes),
        (9, "smoothing", smoothing),
        (10, "cutoff limit", cutoff_limit),
        (11, "moment propagation", moment_propagation),
        (12, "reproducibility", reproducibility),
    ];
    let after: [Criterion; 2] = [(6, "Picard contraction", contraction), (8, "mass, modulus, Bochner", mass_and_modulus)];

    let mut results: Vec<(u8, &str, Outcome, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = first
            .iter()
            .map(|&(id, name, f)| {
                scope.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (id, name, r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    for (id, name, f) in after {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        results.push((id, name, r, t.elapsed().as_secs_f64()));
    }
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, r, secs) in &results {
        match r {
            Ok(detail) => println!("criterion {id:>2} {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
