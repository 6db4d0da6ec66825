//! The named experiments. Each returns its CSV artifacts and a verdict.

use std::fmt::Write;

use kinetic_fourier::charfun::{CharFn, DiscreteMeasure, RadialCharFn};
use kinetic_fourier::kernel::{gamma2, gamma_alpha, lambda_alpha, moment_kernel_factor, KernelConstant};
use kinetic_fourier::metric::{c_constant, default_truncation, dis_ab, embedding_check, m_norm, Growth, moment_exact, moment_upper, sup_norm, NormResult};
use kinetic_fourier::physical::{moment_trajectory_check, physical_diagnostics_csv, sobolev_norm, speed_grid};
use kinetic_fourier::solver::{cutoff_sequence_study, evolve, verify_continuity, verify_stability, SolverConfig, Trajectory};
use kinetic_fourier::{Error, Result};

use crate::config::{char_fn, ExperimentConfig, InitialConfig};

/// Names and one-line descriptions, sorted by name.
pub const EXPERIMENTS: [(&str, &str); 9] = [
    ("constants", "angular kernel constants gamma_2, gamma_alpha, lambda_alpha and the moment factor"),
    ("cutoff-study", "solutions for capped kernels b_n and their distances to each other and to the uncut run"),
    ("evolve", "solve the Fourier-transformed equation and write the trajectory with diagnostics"),
    ("moment-track", "moment of order alpha' along a trajectory against its exponential bound"),
    ("moments", "fractional moments extracted from the characteristic function"),
    ("norms", "sup, integral and combined distances between two characteristic functions"),
    ("verify-continuity", "time-Lipschitz table of a trajectory in the combined distance"),
    ("verify-smoothing", "Sobolev norms and high-frequency decay along a non-cutoff trajectory"),
    ("verify-stability", "distance between two solutions against the exponential stability envelope"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A numerical result missed its accuracy target.
    Accuracy(String),
    /// A theorem-level inequality failed.
    Verification(String),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    pub verdict: Verdict,
}

impl Outcome {
    fn pass(files: Vec<(String, String)>) -> Self {
        Self { files, verdict: Verdict::Pass }
    }
}

/// Shortest round-trip form: plain decimals for moderate magnitudes,
/// exponent notation otherwise, `inf` / `nan` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment.as_str() {
        "constants" => constants(cfg),
        "norms" => norms(cfg),
        "moments" => moments(cfg),
        "evolve" => run_evolve(cfg),
        "cutoff-study" => cutoff_study(cfg),
        "verify-stability" => stability(cfg),
        "verify-continuity" => continuity(cfg),
        "verify-smoothing" => smoothing(cfg),
        "moment-track" => moment_track(cfg),
        other => Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
}

fn constant_row(out: &mut String, name: &str, alpha: Option<f64>, c: KernelConstant<f64>) {
    let a = alpha.map(num).unwrap_or_default();
    match c {
        KernelConstant::Finite { value, est_error } => {
            let _ = writeln!(out, "{name},{a},{},{}", num(value), num(est_error));
        }
        KernelConstant::Divergent => {
            let _ = writeln!(out, "{name},{a},inf,");
        }
    }
}

fn constants(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kernel = cfg.kernel_spec()?;
    let quad = cfg.angular_rule()?;
    let mut out = String::from("name,alpha,value,est_error\n");
    constant_row(&mut out, "gamma2", None, gamma2(&kernel, &quad)?);
    for &a in &cfg.alphas {
        constant_row(&mut out, "gamma", Some(a), gamma_alpha(&kernel, a, &quad)?);
    }
    for &a in &cfg.alphas {
        constant_row(&mut out, "lambda", Some(a), lambda_alpha(&kernel, a, &quad)?);
    }
    for &a in cfg.alphas.iter().filter(|&&a| a < 2.0) {
        constant_row(&mut out, "moment_factor", Some(a), moment_kernel_factor(&kernel, a, &quad)?);
    }
    for &a in cfg.alphas.iter().filter(|&&a| a < 2.0) {
        for (name, m) in [("c_1", 1.0), ("c_inf", f64::INFINITY)] {
            let _ = writeln!(out, "{name},{},{},", num(a), num(c_constant(a, 3, m)?));
        }
    }
    Ok(Outcome::pass(vec![("constants.csv".into(), out)]))
}

fn norm_row(out: &mut String, name: &str, index: f64, n: &NormResult<f64>) {
    let (value, status) = if n.is_divergent() { (f64::INFINITY, "divergent") } else { (n.value + n.head, "finite") };
    let growth = match n.divergence {
        Some(Growth::Logarithmic { rate }) => format!("log:{}", num(rate)),
        Some(Growth::Power { exponent }) => format!("power:{}", num(exponent)),
        None => String::new(),
    };
    let _ = writeln!(
        out,
        "{name},{},{},{},{},{},{},{},{},{status},{growth}",
        num(index),
        num(value),
        num(n.value),
        num(n.head),
        num(n.tail_bound),
        num(n.est_error),
        num(n.epsilon),
        num(n.radius)
    );
}

fn comparison(cfg: &ExperimentConfig, dim: usize) -> Result<CharFn<f64>> {
    match &cfg.comparison {
        Some(c) => char_fn(c),
        None => CharFn::one(dim),
    }
}

fn norms(cfg: &ExperimentConfig) -> Result<Outcome> {
    let phi = char_fn(&cfg.initial)?;
    let phit = comparison(cfg, phi.dim())?;
    let grid = cfg.radial_grid()?;
    let (e1, r1) = default_truncation(&phi);
    let (e2, r2) = default_truncation(&phit);
    let (eps, radius) = if phit.is_one() { (e1, r1) } else { (e1.min(e2), r1.max(r2)) };
    let (alpha, beta) = (cfg.alpha, cfg.beta());
    let mut out = String::from("name,index,value,truncated,head,tail_bound,est_error,epsilon,radius,status,growth\n");
    norm_row(&mut out, "sup_norm", beta, &sup_norm(&phi, &phit, beta, &grid)?);
    if alpha < 2.0 {
        norm_row(&mut out, "m_norm", alpha, &m_norm(&phi, &phit, alpha, eps, radius)?);
        for e in [1e-2, 1e-3, 1e-4] {
            norm_row(&mut out, &format!("m_norm_eps_{e:e}"), alpha, &m_norm(&phi, &phit, alpha, e, radius)?);
        }
        norm_row(&mut out, "dis", alpha, &dis_ab(&phi, &phit, alpha, beta, eps, radius, &grid)?);
        if phit.is_one() {
            let rep = embedding_check(&phi, cfg.alpha_prime, alpha, eps, radius, &grid)?;
            norm_row(&mut out, "embedding_lhs", cfg.alpha_prime, &rep.lhs);
            let holds = match rep.holds() {
                Some(true) => "holds",
                Some(false) => "fails",
                None => "undecided",
            };
            let _ = writeln!(out, "embedding_rhs,{},{},,,,,,,{holds},", num(alpha), num(rep.rhs));
            if rep.holds() == Some(false) {
                return Ok(Outcome {
                    files: vec![("norms.csv".into(), out)],
                    verdict: Verdict::Verification(format!("embedding bound fails: {} > {}", rep.lhs.value, rep.rhs)),
                });
            }
        }
    }
    Ok(Outcome::pass(vec![("norms.csv".into(), out)]))
}

fn moments(cfg: &ExperimentConfig) -> Result<Outcome> {
    let alphas: Vec<f64> = cfg.alphas.iter().copied().filter(|&a| a < 2.0).collect();
    if alphas.is_empty() {
        return Err(Error::Config("moments needs at least one alpha below 2".into()));
    }
    let mut out = String::from("sample,alpha,exact,upper,direct,rel_error\n");
    let mut worst = 0.0_f64;
    let measures: Vec<Option<DiscreteMeasure<f64>>> = match &cfg.initial {
        InitialConfig::Random { samples, max_atoms, radius } => (0..*samples)
            .map(|i| {
                let n = 2 + i % (max_atoms - 1);
                DiscreteMeasure::random_mean_zero(3, n, *radius, cfg.seed.wrapping_add(i as u64)).map(Some)
            })
            .collect::<Result<_>>()?,
        InitialConfig::Discrete { .. } => match char_fn(&cfg.initial)?.family() {
            kinetic_fourier::charfun::Family::Discrete(m) => vec![Some(m.clone())],
            _ => unreachable!("discrete config builds a discrete measure"),
        },
        _ => vec![None],
    };
    for (i, m) in measures.iter().enumerate() {
        let phi = match m {
            Some(m) => CharFn::discrete(m.clone()),
            None => char_fn(&cfg.initial)?,
        };
        for &a in &alphas {
            let exact = moment_exact(&phi, a)?;
            let upper = moment_upper(&phi, a)?;
            let ex = if exact.is_divergent() { f64::INFINITY } else { exact.value + exact.head };
            let (direct, rel) = match m {
                Some(m) => {
                    let d = m.absolute_moment(a);
                    let rel = if d > 0.0 { (ex - d).abs() / d } else { ex.abs() };
                    worst = worst.max(rel);
                    (num(d), num(rel))
                }
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{i},{},{},{},{direct},{rel}", num(a), num(ex), num(upper.value));
        }
    }
    let verdict = if worst > 1e-4 {
        Verdict::Accuracy(format!("moment extraction relative error {worst:e} exceeds 1e-4"))
    } else {
        Verdict::Pass
    };
    Ok(Outcome { files: vec![("moments.csv".into(), out)], verdict })
}

fn sampled(init: &InitialConfig, solver: &SolverConfig<f64>) -> Result<RadialCharFn<f64>> {
    char_fn(init)?.sample_radial(solver.grid.clone())
}

fn steps_csv(traj: &Trajectory<f64>) -> String {
    let mut out = String::from("t,picard_iterations,contraction,bound,residual\n");
    for s in &traj.steps {
        let c = s.contraction.map(num).unwrap_or_default();
        let _ = writeln!(out, "{},{},{c},{},{}", num(s.t), s.picard_iterations, num(s.bound), num(s.residual));
    }
    out
}

fn trajectory_files(prefix: &str, traj: &Trajectory<f64>) -> Vec<(String, String)> {
    let mut files = vec![
        (format!("{prefix}trajectory.csv"), traj.to_csv()),
        (format!("{prefix}diagnostics.csv"), traj.diagnostics_csv()),
    ];
    if !traj.steps.is_empty() {
        files.push((format!("{prefix}steps.csv"), steps_csv(traj)));
    }
    files
}

fn contraction_verdict(traj: &Trajectory<f64>) -> Verdict {
    match traj.steps.iter().find(|s| s.contraction.is_some_and(|c| c > s.bound)) {
        Some(s) => Verdict::Verification(format!(
            "Picard contraction {:e} exceeds gamma_alpha dt = {:e} at t = {}",
            s.contraction.unwrap_or(0.0),
            s.bound,
            s.t
        )),
        None => Verdict::Pass,
    }
}

fn run_evolve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?;
    let traj = evolve(&sampled(&cfg.initial, &solver)?, &solver)?;
    let mut files = trajectory_files("", &traj);
    if let Some(tol) = traj.integrator_tolerance {
        files.push(("integrator.csv".into(), format!("integrator_tolerance\n{}\n", num(tol))));
    }
    Ok(Outcome { files, verdict: contraction_verdict(&traj) })
}

fn cutoff_study(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?.with_diagnostics(false);
    let psi0 = sampled(&cfg.initial, &solver)?;
    let study = cutoff_sequence_study(&psi0, &solver, &cfg.levels, cfg.direct)?;
    let mut out = String::from("n_i,n_j,sup_distance\n");
    for &(i, j, d) in &study.distances {
        let _ = writeln!(out, "{},{},{}", num(study.levels[i]), num(study.levels[j]), num(d));
    }
    if let (Some(d), Some(tol)) = (study.direct_distance, study.direct_tolerance) {
        let _ = writeln!(out, "{},direct,{}", num(*study.levels.last().expect("levels")), num(d));
        let _ = writeln!(out, "integrator_tolerance,,{}", num(tol));
    }
    let mut levels = String::from("n,dt,max_contraction_over_bound\n");
    for (k, tr) in study.trajectories.iter().enumerate() {
        let worst = tr.steps.iter().map(|s| s.contraction.unwrap_or(0.0) / s.bound).fold(0.0, f64::max);
        let _ = writeln!(levels, "{},{},{}", num(study.levels[k]), num(study.steps[k]), num(worst));
    }
    let mut profiles = String::from("r");
    for n in &study.levels {
        let _ = write!(profiles, ",psi_n{}", num(*n));
    }
    profiles.push('\n');
    let r = solver.grid.radii();
    for (i, x) in r.iter().enumerate() {
        profiles.push_str(&num(*x));
        for tr in &study.trajectories {
            let _ = write!(profiles, ",{}", num(tr.last().values()[i]));
        }
        profiles.push('\n');
    }
    let files = vec![
        ("distances.csv".into(), out),
        ("levels.csv".into(), levels),
        ("final_profiles.csv".into(), profiles),
    ];
    let verdict = if !study.is_strictly_decreasing() {
        Verdict::Verification(format!("successive distances {:?} are not strictly decreasing", study.successive))
    } else {
        match (study.direct_distance, study.direct_tolerance) {
            (Some(d), Some(tol)) if d > 10.0 * tol => {
                Verdict::Accuracy(format!("largest level differs from the direct run by {d:e} > 10 x {tol:e}"))
            }
            _ => study.trajectories.iter().map(contraction_verdict).find(|v| *v != Verdict::Pass).unwrap_or(Verdict::Pass),
        }
    };
    Ok(Outcome { files, verdict })
}

fn stability(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?;
    let a = sampled(&cfg.initial, &solver)?;
    let b = match &cfg.comparison {
        Some(c) => sampled(c, &solver)?,
        None => a.clone(),
    };
    let rep = verify_stability(&a, &b, &solver, cfg.limit)?;
    let mut out = String::from("t,m_distance,k_distance,m_ratio,k_ratio\n");
    for i in 0..rep.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(rep.times[i]),
            num(rep.m_distance[i]),
            num(rep.k_distance[i]),
            num(rep.m_ratio[i]),
            num(rep.k_ratio[i])
        );
    }
    let verdict = match rep.ensure() {
        Ok(()) => Verdict::Pass,
        Err(e) => Verdict::Verification(e.to_string()),
    };
    let summary = format!("lambda,limit,max_m_ratio,max_k_ratio\n{},{},{},{}\n", num(rep.lambda), num(rep.limit), num(rep.max_m_ratio()), num(rep.max_k_ratio()));
    Ok(Outcome { files: vec![("stability.csv".into(), out), ("stability_summary.csv".into(), summary)], verdict })
}

fn continuity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?.with_diagnostics(false);
    let traj = evolve(&sampled(&cfg.initial, &solver)?, &solver)?;
    let rep = verify_continuity(&traj, &solver.quadrature)?;
    let mut out = String::from("s,t,dis,ratio\n");
    for &(s, t, d, r) in &rep.pairs {
        let _ = writeln!(out, "{},{},{},{}", num(s), num(t), num(d), num(r));
    }
    let summary = format!(
        "lambda,initial_dis,lipschitz_constant,max_increment\n{},{},{},{}\n",
        num(rep.lambda),
        num(rep.initial),
        num(rep.constant()),
        num(rep.max_increment())
    );
    let verdict = if rep.constant().is_finite() {
        Verdict::Pass
    } else {
        Verdict::Verification("time increments are not Lipschitz-bounded".into())
    };
    Ok(Outcome { files: vec![("continuity.csv".into(), out), ("continuity_summary.csv".into(), summary)], verdict })
}

/// sup_{r ≥ r0} |ψ(r)| over grid nodes.
pub fn tail_sup(psi: &RadialCharFn<f64>, r0: f64) -> f64 {
    psi.grid()
        .radii()
        .iter()
        .zip(psi.values())
        .filter(|(r, _)| **r >= r0)
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

fn smoothing(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?.with_diagnostics(false);
    let traj = evolve(&sampled(&cfg.initial, &solver)?, &solver)?;
    let radius = solver.grid.r_max();
    let mut out = String::from("t,order,value,converged,growth_exponent,tail_sup\n");
    let mut final_converged = true;
    for (k, (t, s)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let tail = tail_sup(s, cfg.tail_radius);
        for n in 1..=4 {
            let h = sobolev_norm(s, n, radius)?;
            if k + 1 == traj.len() {
                final_converged &= h.converged;
            }
            let _ = writeln!(out, "{},{n},{},{},{},{}", num(*t), num(h.value), h.converged, num(h.growth_exponent), num(tail));
        }
    }
    let physical = physical_diagnostics_csv(&traj, cfg.alpha, radius, &speed_grid(8.0, 800))?;
    let files = vec![("smoothing.csv".into(), out), ("physical.csv".into(), physical)];
    let first = traj.times.iter().position(|&t| t > 0.0);
    let verdict = match first {
        None => Verdict::Verification("smoothing needs a positive horizon".into()),
        Some(_) if !final_converged => Verdict::Verification(format!("H^N norms at t = {} have not converged", traj.times[traj.len() - 1])),
        Some(i) if i + 1 < traj.len() && tail_sup(traj.last(), cfg.tail_radius) >= tail_sup(&traj.snapshots[i], cfg.tail_radius) => {
            Verdict::Verification("high-frequency tail did not decay".into())
        }
        Some(_) => Verdict::Pass,
    };
    Ok(Outcome { files, verdict })
}

fn moment_track(cfg: &ExperimentConfig) -> Result<Outcome> {
    let solver = cfg.solver_config()?.with_diagnostics(false);
    let mut files = Vec::new();
    let mut failed = Vec::new();
    let mut data = vec![("initial", &cfg.initial)];
    if let Some(c) = &cfg.comparison {
        data.push(("comparison", c));
    }
    for (label, init) in data {
        let traj = evolve(&sampled(init, &solver)?, &solver)?;
        let track = moment_trajectory_check(&traj, cfg.alpha, cfg.alpha_prime, &solver.quadrature)?;
        let mut out = String::from("t,moment_upper,bound\n");
        for &(t, l, r) in &track.rows {
            let _ = writeln!(out, "{},{},{}", num(t), num(l), num(r));
        }
        if !track.passed() {
            failed.push(label);
        }
        files.push((format!("moment_track_{label}.csv"), out));
    }
    let verdict = if failed.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Verification(format!("moment bound exceeded for {}", failed.join(", ")))
    };
    Ok(Outcome { files, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_is_sorted_and_unique() {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.0).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(names, sorted);
        assert_eq!(names.len(), 9);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, 2.0 * std::f64::consts::PI, 1e-300, -3.5e7] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
