use proptest::prelude::*;
use tqd_core::dynamics::{fidelity, target_state, IntegratorConfig, QuantumState};
use tqd_core::experiments::{simulate_pulses, Scenario};
use tqd_core::hilbert::{build_subspace, CVector, StateVector, C64};
use tqd_core::model::ModelParams;
use tqd_core::pulses::{FittedPulse, PulseSet};

fn cfg() -> IntegratorConfig {
    IntegratorConfig { dt: 0.01, record_every: 20, reduce_support: true }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fidelity_is_a_probability(re in prop::collection::vec(-1.0f64..1.0, 8), im in prop::collection::vec(-1.0f64..1.0, 8)) {
        let space = build_subspace();
        let amps = CVector::from_iterator(8, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)));
        prop_assume!(amps.norm() > 1e-3);
        let psi = StateVector::from_amplitudes(&space, amps).unwrap().normalized().unwrap();
        let f = fidelity(&QuantumState::Pure(psi), &target_state(&space).unwrap()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn closed_runs_are_unitary(scale in 0.5f64..1.5, delta in 2.0f64..8.0) {
        let params = ModelParams { delta, t_f: 50.0, ..ModelParams::default() };
        let pulses = PulseSet::tqd_fitted(FittedPulse::reference().scaled(scale), delta).unwrap();
        let run = simulate_pulses(&params, &pulses, false, &cfg()).unwrap();
        prop_assert!(run.diagnostics.max_drift < 1e-8);
        for row in &run.populations {
            prop_assert!(row.iter().sum::<f64>() <= 1.0 + 1e-6);
            // unitary evolution never leaves the eight tracked states
            prop_assert!(row[8] < 1e-10);
        }
        prop_assert!(run.fidelity.iter().all(|&f| f <= 1.0 + 1e-9));
    }

    #[test]
    fn open_runs_preserve_trace(kappa in 0.0f64..0.1, gamma in 0.0f64..0.1) {
        let base = Scenario::default();
        let params = ModelParams { kappa, gamma, t_f: 30.0, ..base.params };
        let pulses = base.pulses(tqd_core::pulses::PulseKind::TqdFitted).unwrap();
        let run = simulate_pulses(&params, &pulses, true, &cfg()).unwrap();
        prop_assert!(run.diagnostics.max_drift < 1e-6);
        prop_assert!(!run.diagnostics.positivity_warning);
        for row in &run.populations {
            prop_assert!(row.iter().all(|p| (-1e-9..=1.0 + 1e-9).contains(p)));
            prop_assert!(row.iter().sum::<f64>() <= 1.0 + 1e-6);
        }
    }
}
