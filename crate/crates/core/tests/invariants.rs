use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use kinetic_fourier::charfun::{bochner_spotcheck, lattice_samples, CharFn, DiscreteMeasure, RadialCharFn, RadialGrid};
use kinetic_fourier::kernel::{gamma_alpha, lambda_alpha, AngularQuadrature, KernelSpec};
use kinetic_fourier::metric::moment_exact;
use kinetic_fourier::solver::{default_quadrature, evolve, SolverConfig, Stencil};

fn grid() -> Arc<RadialGrid<f64>> {
    static GRID: OnceLock<Arc<RadialGrid<f64>>> = OnceLock::new();
    GRID.get_or_init(|| Arc::new(RadialGrid::standard())).clone()
}

fn quad() -> &'static AngularQuadrature<f64> {
    static QUAD: OnceLock<AngularQuadrature<f64>> = OnceLock::new();
    QUAD.get_or_init(default_quadrature)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn collision_of_one_is_zero(s in 0.05f64..0.9, k in 0.1f64..3.0) {
        let kernel = KernelSpec::singular(s, k).unwrap();
        let st = Stencil::new(grid(), &kernel, quad()).unwrap();
        let one = CharFn::one(3).unwrap().sample_radial(grid()).unwrap();
        prop_assert!(st.collision(&one).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussians_are_stationary_for_every_kernel(s in 0.05f64..0.75, sigma in 0.6f64..2.0) {
        let kernel = KernelSpec::singular(s, 1.0).unwrap();
        let st = Stencil::new(grid(), &kernel, quad()).unwrap();
        let g = CharFn::gaussian(sigma, 3).unwrap().sample_radial(grid()).unwrap();
        let (a, b) = st.split(&g).unwrap();
        // gain and loss cancel; measure what is left against their size
        let scale = a.iter().zip(&b).zip(g.values()).fold(0.0_f64, |m, ((a, b), y)| m.max((a * y).abs()).max(b.abs()));
        let worst = st.collision(&g).unwrap().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(worst < 1.5e-7 * scale, "{} vs scale {}", worst, scale);
    }

    #[test]
    fn lambda_two_vanishes_and_lambda_is_positive(s in 0.05f64..0.95, alpha in 0.1f64..1.95) {
        let kernel = KernelSpec::singular(s, 1.0).unwrap();
        let l2 = lambda_alpha(&kernel, 2.0, quad()).unwrap().value().unwrap();
        prop_assert!(l2.abs() < 1e-12);
        let la = lambda_alpha(&kernel, alpha, quad()).unwrap();
        if let Some(v) = la.value() {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn cutoff_constants_increase_with_level(n in 2.0f64..50.0, alpha in 0.2f64..1.9) {
        let kernel = KernelSpec::singular(0.25, 1.0).unwrap();
        let lo = gamma_alpha(&kernel.with_cutoff(n).unwrap(), alpha, quad()).unwrap().value().unwrap();
        let hi = gamma_alpha(&kernel.with_cutoff(2.0 * n).unwrap(), alpha, quad()).unwrap().value().unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn profile_csv_roundtrip(sigma in 0.3f64..3.0) {
        let p = CharFn::gaussian(sigma, 3).unwrap().sample_radial(grid()).unwrap();
        let q = RadialCharFn::<f64>::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(p.values(), q.values());
        prop_assert_eq!(p.grid().radii(), q.grid().radii());
    }

    #[test]
    fn measure_text_roundtrip(seed in any::<u64>(), n in 2usize..=8) {
        let m = DiscreteMeasure::<f64>::random_mean_zero(3, n, 10.0, seed).unwrap();
        let back = DiscreteMeasure::<f64>::parse(&m.to_text()).unwrap();
        prop_assert_eq!(back.atoms().len(), m.atoms().len());
        for (a, b) in m.atoms().iter().zip(back.atoms()) {
            prop_assert!((a.w - b.w).abs() < 1e-12 * a.w.max(1.0));
            for c in 0..3 {
                prop_assert!((a.v[c] - b.v[c]).abs() <= 1e-12 * a.v[c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn random_measures_respect_radius_and_mean(seed in any::<u64>(), n in 2usize..=8, radius in 0.5f64..20.0) {
        let m = DiscreteMeasure::<f64>::random_mean_zero(3, n, radius, seed).unwrap();
        prop_assert!(m.max_speed() <= radius);
        prop_assert!(m.is_mean_zero(1e-12 * radius));
    }

    #[test]
    fn moment_extraction_matches_atom_sums(seed in any::<u64>(), n in 2usize..=8, alpha in 0.3f64..1.9) {
        let m = DiscreteMeasure::<f64>::random_mean_zero(3, n, 10.0, seed).unwrap();
        let direct = m.absolute_moment(alpha);
        let phi = CharFn::discrete(m);
        let got = moment_exact(&phi, alpha).unwrap().finite("moment").unwrap();
        prop_assert!((got - direct).abs() <= 1e-4 * direct, "{} vs {}", got, direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn snapshots_keep_mass_and_modulus(sigma in 0.5f64..2.0, r0 in 0.5f64..2.0) {
        let cfg = SolverConfig::new(KernelSpec::constant(1.0_f64).unwrap()).with_horizon(0.2).with_dt(0.05);
        let g = CharFn::gaussian(sigma, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let u = CharFn::uniform_sphere(r0, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let mix: Vec<f64> = g.values().iter().zip(u.values()).map(|(a, b)| 0.5 * (a + b)).collect();
        let psi0 = RadialCharFn::new(cfg.grid.clone(), mix).unwrap();
        let traj = evolve(&psi0, &cfg).unwrap();
        let pts = lattice_samples(3, 16, 3.5);
        for s in &traj.snapshots {
            prop_assert!((s.values()[0] - 1.0).abs() <= 1e-12);
            prop_assert!(s.values().iter().all(|v| v.abs() <= 1.0 + 1e-10));
            let e = bochner_spotcheck(&CharFn::radial(s.clone()), &pts).unwrap();
            prop_assert!(e >= -1e-8, "{}", e);
        }
    }
}

#[test]
fn trajectory_csv_lists_every_node_of_every_snapshot() {
    let cfg = SolverConfig::new(KernelSpec::constant(1.0_f64).unwrap()).with_horizon(0.1).with_dt(0.05);
    let one = CharFn::one(3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
    let traj = evolve(&one, &cfg).unwrap();
    let csv = traj.to_csv();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), traj.len() * cfg.grid.len());
    for row in rows {
        let psi: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(psi, 1.0);
    }
}
