//! Collapse dynamics against closed-form and matrix-exponential solutions,
//! plus the trajectory invariants of the stochastic unraveling.

use std::f64::consts::FRAC_1_SQRT_2;

use dyad_core::model::DyadState;
use dyad_core::optimizer::EigenAssignment;
use dyad_core::qdyn::{
    build_collapse_operator, coherence_decay_rate, ensemble_average, lindblad_evolve, lindblad_path,
    outcome_frequencies, sde_ensemble, sde_trajectory, CollapseDynamics, CollapseOperator,
    DensityMatrix4, Hermitian4, Matrix4c, PureState4, QdynError, SdeConfig, C64, COHERENCE_PAIRS,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn default_operator() -> CollapseOperator {
    build_collapse_operator(&EigenAssignment([2.0, 0.0, 4.0, 6.0]))
}

fn uniform_superposition() -> PureState4 {
    PureState4::new([r(0.5); 4]).unwrap()
}

fn random_density() -> impl Strategy<Value = DensityMatrix4> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_filter_map("degenerate", |w| {
        let g = Matrix4c::from_fn(|i, j| C64::new(w[4 * i + j], w[16 + 4 * i + j]));
        let m = g * g.adjoint();
        let tr = m.trace().re;
        (tr > 1e-3).then(|| DensityMatrix4::new(m.unscale(tr)).unwrap())
    })
}

fn random_hamiltonian() -> impl Strategy<Value = Hermitian4> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_map(|w| {
        let x = Matrix4c::from_fn(|i, j| C64::new(w[4 * i + j], w[16 + 4 * i + j]));
        Hermitian4::new((x + x.adjoint()).scale(0.5)).unwrap()
    })
}

/// `exp(L t) vec(ρ)` with the column-stacked Liouvillian of the master
/// equation.
fn exact_evolution(rho: &DensityMatrix4, dynamics: &CollapseDynamics, t: f64) -> Matrix4c {
    let h = DMatrix::from_fn(4, 4, |i, j| dynamics.hamiltonian.matrix()[(i, j)]);
    let id = DMatrix::<C64>::identity(4, 4);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    let a = dynamics.operator.eigenvalues;
    for k in 0..4 {
        for i in 0..4 {
            let gap = a[i] - a[k];
            l[(i + 4 * k, i + 4 * k)] -= r(0.5 * dynamics.lambda * gap * gap);
        }
    }
    let v = DMatrix::from_fn(16, 1, |n, _| rho.matrix()[(n % 4, n / 4)]);
    let out = (l * r(t)).exp() * v;
    Matrix4c::from_fn(|i, k| out[(i + 4 * k, 0)])
}

#[test]
fn coherences_decay_at_the_predicted_rate() {
    let dynamics = CollapseDynamics::collapse_only(default_operator(), 1.0).unwrap();
    let rho0 = uniform_superposition().projector();
    let path = lindblad_path(&rho0, &dynamics, 1.0, 1e-4, 100).unwrap();
    assert_eq!(path.len(), 101);
    for &(i, k) in &COHERENCE_PAIRS {
        // least-squares slope of ln|ρ_ik| against t
        let pts: Vec<(f64, f64)> = path.iter().map(|(t, m)| (*t, m.matrix()[(i, k)].norm().ln())).collect();
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let measured = -sxy / sxx;
        let si = DyadState::from_index(i).unwrap();
        let sk = DyadState::from_index(k).unwrap();
        let rate = coherence_decay_rate(&dynamics.operator, 1.0, si, sk);
        assert!(((measured - rate) / rate).abs() < 1e-4, "({i},{k}): {measured} vs {rate}");
    }
}

#[test]
fn pair_coherence_after_unit_time() {
    let dynamics = CollapseDynamics::collapse_only(default_operator(), 1.0).unwrap();
    let psi = PureState4::new([r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(0.0), r(0.0)]).unwrap();
    let rho = lindblad_evolve(&psi.projector(), &dynamics, 1.0, 1e-4).unwrap();
    assert!((rho.matrix()[(0, 1)].norm() - 0.5 * (-2.0f64).exp()).abs() < 1e-6);
    assert!((rho.populations()[0] - 0.5).abs() < 1e-12);
}

#[test]
fn oversized_steps_are_refused() {
    let op = build_collapse_operator(&EigenAssignment([0.0, 0.0, 0.0, 100.0]));
    let dynamics = CollapseDynamics::collapse_only(op, 1.0).unwrap();
    let err = lindblad_evolve(&uniform_superposition().projector(), &dynamics, 1.0, 0.1).unwrap_err();
    assert!(matches!(err, QdynError::StepTooLarge { .. }), "{err:?}");
}

#[test]
fn trajectories_are_reproducible_and_count_independent() {
    let dynamics = CollapseDynamics::collapse_only(default_operator(), 1.0).unwrap();
    let cfg = SdeConfig::new(1e-3, 0.5).with_sample_every(50);
    let psi = uniform_superposition();
    let few = sde_ensemble(&psi, &dynamics, &cfg, 7, 5).unwrap();
    let many = sde_ensemble(&psi, &dynamics, &cfg, 7, 12).unwrap();
    assert_eq!(few[..], many[..5]);
    let again = sde_trajectory(&psi, &dynamics, &cfg, 7, 3).unwrap();
    assert_eq!(again, few[3]);
    let other_seed = sde_trajectory(&psi, &dynamics, &cfg, 8, 3).unwrap();
    assert_ne!(other_seed.states, few[3].states);
    assert!(sde_ensemble(&psi, &dynamics, &cfg, 7, 0).is_err());
}

#[test]
fn collapse_outcomes_follow_squared_amplitudes() {
    // amplitudes √0.2 and √0.8 on |00⟩ and |11⟩
    let psi = PureState4::new([r(0.2f64.sqrt()), r(0.0), r(0.0), r(0.8f64.sqrt())]).unwrap();
    let dynamics = CollapseDynamics::collapse_only(default_operator(), 1.0).unwrap();
    let n = 2000;
    let runs = sde_ensemble(&psi, &dynamics, &SdeConfig::new(1e-3, 2.0), 11, n).unwrap();
    let freq = outcome_frequencies(&runs);
    let resolved: f64 = freq.iter().sum();
    assert!(resolved > 0.99, "{resolved}");
    assert_eq!(freq[1] + freq[2], 0.0);
    let sigma = (0.2f64 * 0.8 / n as f64).sqrt();
    assert!((freq[0] - 0.2).abs() < 3.0 * sigma, "{freq:?}");
}

#[test]
fn ensemble_tracks_master_equation_with_hamiltonian() {
    let dynamics =
        CollapseDynamics::new(Hermitian4::swap_generator(), build_collapse_operator(&EigenAssignment([0.0, 1.0, 0.5, 0.0])), 1.0)
            .unwrap();
    let psi = uniform_superposition();
    let mean = ensemble_average(&sde_ensemble(&psi, &dynamics, &SdeConfig::new(1e-3, 0.5), 3, 2000).unwrap(), 0.5).unwrap();
    let exact = lindblad_evolve(&psi.projector(), &dynamics, 0.5, 1e-3).unwrap();
    assert!(mean.trace_distance(&exact) < 0.05, "{}", mean.trace_distance(&exact));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn master_equation_matches_liouvillian_exponential(
        rho in random_density(),
        h in random_hamiltonian(),
        eig in prop::array::uniform4(0.0f64..3.0),
        lambda in 0.1f64..1.0,
    ) {
        let dynamics = CollapseDynamics::new(h, CollapseOperator { eigenvalues: eig }, lambda).unwrap();
        let got = lindblad_evolve(&rho, &dynamics, 0.3, 1e-3).unwrap();
        let want = exact_evolution(&rho, &dynamics, 0.3);
        let err = (got.matrix() - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn master_equation_keeps_density_invariants(
        rho in random_density(),
        h in random_hamiltonian(),
        eig in prop::array::uniform4(0.0f64..3.0),
        lambda in 0.1f64..1.0,
    ) {
        let dynamics = CollapseDynamics::new(h, CollapseOperator { eigenvalues: eig }, lambda).unwrap();
        let max_gap = eig.iter().cloned().fold(0.0, f64::max) - eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let dt = (1e-3 / (lambda * max_gap * max_gap).max(1.0)).min(1e-3);
        let path = lindblad_path(&rho, &dynamics, 0.2, dt, 20).unwrap();
        for (_, m) in &path {
            prop_assert!(DensityMatrix4::new(*m.matrix()).is_ok());
        }
    }

    #[test]
    fn trajectories_stay_normalized(
        amps in prop::array::uniform4(-1.0f64..1.0),
        seed in any::<u64>(),
    ) {
        prop_assume!(amps.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let psi = PureState4::normalized(amps.map(r)).unwrap();
        let dynamics = CollapseDynamics::new(Hermitian4::swap_generator(), default_operator(), 1.0).unwrap();
        let cfg = SdeConfig::new(1e-3, 0.2).with_sample_every(1);
        let tr = sde_trajectory(&psi, &dynamics, &cfg, seed, 0).unwrap();
        prop_assert_eq!(tr.states.len(), 201);
        for s in &tr.states {
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(tr, sde_trajectory(&psi, &dynamics, &cfg, seed, 0).unwrap());
    }

    #[test]
    fn collapse_leaves_populations_unchanged(rho in random_density(), eig in prop::array::uniform4(0.0f64..3.0)) {
        let dynamics = CollapseDynamics::collapse_only(CollapseOperator { eigenvalues: eig }, 1.0).unwrap();
        let out = lindblad_evolve(&rho, &dynamics, 0.5, 1e-3).unwrap();
        for (a, b) in out.populations().iter().zip(rho.populations()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for &(i, k) in &COHERENCE_PAIRS {
            let gap = eig[i] - eig[k];
            let want = rho.matrix()[(i, k)].norm() * (-0.25 * gap * gap).exp();
            prop_assert!((out.matrix()[(i, k)].norm() - want).abs() < 1e-10);
        }
    }
}
