use dtqm::action::*;
use dtqm::classical::{eom_step, integrate, SolverOptions, StepOutcome};
use dtqm::correspondence::{gauge_equivalence_run, PacketParams};
use dtqm::criterion::{check_criterion, Domain, DEFAULT_SAMPLES, DEFAULT_TOLERANCE};
use dtqm::grid::{expect_x, make_gaussian, make_grid};
use dtqm::propagator::{build_kernel, evolve, evolve_adjoint, magic_time_step, AmplitudeMode};
use proptest::prelude::*;

fn potential_strategy() -> impl Strategy<Value = Potential> {
    prop_oneof![
        Just(Potential::zero()),
        (0.2f64..3.0).prop_map(|w| Potential::harmonic(1.0, w)),
        (0.01f64..0.5).prop_map(Potential::quartic),
        (0.1f64..2.0, 0.5f64..2.0).prop_map(|(d, k)| Potential::cosine_well(d, k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // an admissible verdict goes together with a unitary kernel at τ*
    #[test]
    fn admissible_actions_give_unitary_kernels(v in potential_strategy(), half_n in 8usize..40, dx in 0.05f64..0.3) {
        let g = make_grid(2 * half_n, -(half_n as f64) * dx, dx).unwrap();
        let c = PhysicalConstants::new(1.0, magic_time_step(&g, 1.0, 1.0), 1.0).unwrap();
        let model = standard_action(c, v);
        let report = check_criterion(&model, Domain::new(-2.0, 2.0).unwrap(), DEFAULT_SAMPLES, DEFAULT_TOLERANCE).unwrap();
        prop_assert!(report.is_constant);
        let kernel = build_kernel(&g, &model, AmplitudeMode::Analytic).unwrap();
        prop_assert!(kernel.unitarity_deviation() < 1e-10, "{}", kernel.unitarity_deviation());
    }

    #[test]
    fn gauged_densities_match(a in -0.5f64..0.5, k in 0.3f64..2.0, x0 in -1.0f64..1.0, p0 in -0.5f64..0.5) {
        let g = make_grid(96, -6.0, 0.125).unwrap();
        let c = PhysicalConstants::new(1.0, magic_time_step(&g, 1.0, 1.0), 1.0).unwrap();
        let phi = GaugeFunction::Sine { amplitude: a, wavenumber: k };
        let packet = PacketParams { x0, p0, alpha: 1.0 };
        let d = gauge_equivalence_run(c, Potential::harmonic(1.0, 1.0), phi, &g, &packet, 10).unwrap();
        prop_assert!(d < 1e-10);
    }

    // reversing the last two positions retraces the trajectory
    #[test]
    fn classical_steps_are_reversible(x0 in -2.0f64..2.0, v0 in -1.0f64..1.0, lambda in 0.0f64..0.3) {
        let c = PhysicalConstants::new(1.0, 0.05, 1.0).unwrap();
        let model = standard_action(c, Potential::quartic(lambda));
        let opts = SolverOptions::default();
        let fwd = integrate(&model, x0, x0 - 0.05 * v0, 20, &opts).unwrap();
        let n = fwd.len() - 1;
        let (mut prev, mut now) = (fwd.x(n), fwd.x(n - 1));
        for m in (0..n - 1).rev() {
            let next = match eom_step(&model, prev, now, &opts) {
                StepOutcome::Unique(z) => z,
                other => return Err(TestCaseError::fail(format!("{other:?}"))),
            };
            prop_assert!((next - fwd.x(m)).abs() < 1e-9);
            prev = now;
            now = next;
        }
    }
}

#[test]
fn forward_then_adjoint_restores_packet() {
    let g = make_grid(128, -8.0, 0.125).unwrap();
    let c = PhysicalConstants::new(1.0, magic_time_step(&g, 1.0, 1.0), 1.0).unwrap();
    let kernel = build_kernel(&g, &standard_action(c, Potential::quartic(0.05)), AmplitudeMode::Analytic).unwrap();
    let psi = make_gaussian(&g, 0.7, -0.3, 1.0, 1.0).unwrap();
    let mut phi = psi.clone();
    for _ in 0..30 {
        phi = evolve(&kernel, &phi).unwrap();
    }
    for _ in 0..30 {
        phi = evolve_adjoint(&kernel, &phi).unwrap();
    }
    let err = psi
        .amplitudes()
        .iter()
        .zip(phi.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    assert!((expect_x(&phi).unwrap()[0] - 0.7).abs() < 1e-9);
}
