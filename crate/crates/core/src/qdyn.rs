//! Collapse dynamics of the quantum dyad.
//!
//! The ensemble state follows
//! `dρ/dt = −i[H, ρ] − (λ/2)[A, [A, ρ]]`, integrated with fixed-step RK4.
//! Single realizations follow
//! `dψ = [−iH dt + √λ (A − ⟨A⟩) dW − (λ/2)(A − ⟨A⟩)² dt] ψ`, integrated with
//! Euler–Maruyama and renormalized after every step. The collapse operator is
//! diagonal in the computational basis.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::DyadState;
use crate::optimizer::EigenAssignment;

pub type C64 = Complex64;
pub type Matrix4c = Matrix4<C64>;
pub type Vector4c = Vector4<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-10;
/// Drift in trace or Hermiticity that aborts an integration.
pub const DRIFT_LIMIT: f64 = 1e-6;
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 0.99;

/// Index pairs of the six coherences, in CSV column order.
pub const COHERENCE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdynError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("numerical drift {drift:.3e} exceeds {limit:.0e} at t = {time}; reduce dt")]
    StepTooLarge { drift: f64, limit: f64, time: f64 },
    #[error("trajectories do not share a sample grid containing t = {0}")]
    GridMismatch(f64),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn hermiticity_deviation(m: &Matrix4c) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix4c) -> [f64; 4] {
    let eig = SymmetricEigen::new(*m);
    let mut v: [f64; 4] = std::array::from_fn(|i| eig.eigenvalues[i]);
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState4(Vector4c);

impl PureState4 {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self, QdynError> {
        let v = Vector4c::from(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QdynError::NotNormalized(norm));
        }
        Ok(PureState4(v))
    }

    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self, QdynError> {
        let v = Vector4c::from(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QdynError::NotNormalized(norm));
        }
        Ok(PureState4(v.unscale(norm)))
    }

    pub fn basis(s: DyadState) -> Self {
        let mut v = Vector4c::zeros();
        v[s.index()] = c(1.0);
        PureState4(v)
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        std::array::from_fn(|i| self.0[i])
    }

    pub fn vector(&self) -> &Vector4c {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.0[i].norm_sqr())
    }

    pub fn projector(&self) -> DensityMatrix4 {
        DensityMatrix4(self.0 * self.0.adjoint())
    }
}

/// `|+,0⟩ = (|00⟩ + |10⟩)/√2`, the dyad state after one SWAP step from `|0,+⟩`.
pub fn prepare_dyad_superposition() -> PureState4 {
    PureState4(Vector4c::new(c(FRAC_1_SQRT_2), c(0.0), c(FRAC_1_SQRT_2), c(0.0)))
}

/// `|0,+⟩ = (|00⟩ + |01⟩)/√2`, the input fed into channel B.
pub fn dyad_input_state() -> PureState4 {
    PureState4(Vector4c::new(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0), c(0.0)))
}

/// Permutation matrix exchanging the two qubits.
pub fn swap_unitary() -> Matrix4c {
    let mut u = Matrix4c::zeros();
    for s in DyadState::ALL {
        u[(s.transposed().index(), s.index())] = c(1.0);
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Matrix4c);

impl DensityMatrix4 {
    pub fn new(m: Matrix4c) -> Result<Self, QdynError> {
        let herm = hermiticity_deviation(&m);
        if herm > HERMITIAN_TOL {
            return Err(QdynError::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QdynError::BadTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -PSD_TOL {
            return Err(QdynError::NotPositive(min));
        }
        Ok(DensityMatrix4(m))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix4(Matrix4c::identity().scale(0.25))
    }

    pub fn basis(s: DyadState) -> Self {
        PureState4::basis(s).projector()
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    /// `|ρ_ik|` for the six pairs in [`COHERENCE_PAIRS`] order.
    pub fn coherences(&self) -> [f64; 6] {
        COHERENCE_PAIRS.map(|(i, k)| self.0[(i, k)].norm())
    }

    pub fn trace_distance(&self, other: &DensityMatrix4) -> f64 {
        let diff = self.0 - other.0;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix4) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Hermitian generator of the unitary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian4(Matrix4c);

impl Hermitian4 {
    pub fn new(m: Matrix4c) -> Result<Self, QdynError> {
        let herm = hermiticity_deviation(&m);
        if herm > HERMITIAN_TOL {
            return Err(QdynError::NotHermitian(herm));
        }
        Ok(Hermitian4(m))
    }

    pub fn zero() -> Self {
        Hermitian4(Matrix4c::zeros())
    }

    /// `H = (π/2)(I − SWAP)`, so that `exp(−iH)` is the SWAP gate.
    pub fn swap_generator() -> Self {
        Hermitian4((Matrix4c::identity() - swap_unitary()).scale(PI / 2.0))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

/// Diagonal collapse operator `Σ λ_s |s⟩⟨s|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseOperator {
    pub eigenvalues: [f64; 4],
}

impl CollapseOperator {
    pub fn matrix(&self) -> Matrix4c {
        Matrix4c::from_diagonal(&Vector4c::from(self.eigenvalues.map(c)))
    }
}

pub fn build_collapse_operator(assignment: &EigenAssignment) -> CollapseOperator {
    CollapseOperator {
        eigenvalues: assignment.values(),
    }
}

/// Damping rate of `ρ_ik` under the collapse term alone: `(λ/2)(a_i − a_k)²`.
pub fn coherence_decay_rate(a: &CollapseOperator, lambda: f64, i: DyadState, k: DyadState) -> f64 {
    let gap = a.eigenvalues[i.index()] - a.eigenvalues[k.index()];
    0.5 * lambda * gap * gap
}

/// Parameters shared by the ensemble and trajectory dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseDynamics {
    pub hamiltonian: Hermitian4,
    pub operator: CollapseOperator,
    /// Global collapse rate.
    pub lambda: f64,
}

impl CollapseDynamics {
    pub fn new(hamiltonian: Hermitian4, operator: CollapseOperator, lambda: f64) -> Result<Self, QdynError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(QdynError::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if operator.eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(QdynError::InvalidParameter("eigenvalues must be finite".into()));
        }
        Ok(CollapseDynamics {
            hamiltonian,
            operator,
            lambda,
        })
    }

    /// Pure collapse, `H = 0`.
    pub fn collapse_only(operator: CollapseOperator, lambda: f64) -> Result<Self, QdynError> {
        CollapseDynamics::new(Hermitian4::zero(), operator, lambda)
    }

    fn lindblad_rhs(&self, rho: &Matrix4c) -> Matrix4c {
        let h = &self.hamiltonian.0;
        let unitary = (h * rho - rho * h) * C64::new(0.0, -1.0);
        let a = &self.operator.eigenvalues;
        let damping = Matrix4c::from_fn(|i, k| {
            let gap = a[i] - a[k];
            rho[(i, k)] * (0.5 * self.lambda * gap * gap)
        });
        unitary - damping
    }
}

fn check_step(dt: f64, t: f64) -> Result<(), QdynError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(QdynError::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(QdynError::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    Ok(())
}

/// Step sizes covering `[0, t]`: whole steps of `dt` plus a final partial step.
fn step_schedule(t: f64, dt: f64) -> impl Iterator<Item = f64> {
    let whole = (t / dt + 1e-9).floor() as usize;
    let rest = t - whole as f64 * dt;
    std::iter::repeat(dt)
        .take(whole)
        .chain((rest > 1e-12 * dt.max(1.0)).then_some(rest))
}

fn rk4_step(dyn_: &CollapseDynamics, rho: &Matrix4c, h: f64) -> Matrix4c {
    let hc = c(h);
    let k1 = dyn_.lindblad_rhs(rho);
    let k2 = dyn_.lindblad_rhs(&(rho + k1 * (hc * 0.5)));
    let k3 = dyn_.lindblad_rhs(&(rho + k2 * (hc * 0.5)));
    let k4 = dyn_.lindblad_rhs(&(rho + k3 * hc));
    rho + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * (hc / 6.0)
}

fn drift(m: &Matrix4c) -> f64 {
    let tr = m.trace();
    let trace_drift = ((tr.re - 1.0).abs()).max(tr.im.abs());
    // 2x2 principal minors bound every coherence; a violation means lost positivity.
    let mut minor = 0.0f64;
    for &(i, k) in &COHERENCE_PAIRS {
        let excess = m[(i, k)].norm_sqr() - m[(i, i)].re * m[(k, k)].re;
        minor = minor.max(excess);
    }
    trace_drift.max(hermiticity_deviation(m)).max(minor)
}

/// Integrates the master equation over `[0, t]`, returning the states at
/// every `sample_every`-th step together with their times. The initial and
/// final states are always included.
pub fn lindblad_path(
    rho0: &DensityMatrix4,
    dynamics: &CollapseDynamics,
    t: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<(f64, DensityMatrix4)>, QdynError> {
    check_step(dt, t)?;
    let sample_every = sample_every.max(1);
    let mut rho = rho0.0;
    let mut time = 0.0;
    let mut path = vec![(0.0, *rho0)];
    let steps: Vec<f64> = step_schedule(t, dt).collect();
    let last = steps.len();
    for (n, h) in steps.into_iter().enumerate() {
        rho = rk4_step(dynamics, &rho, h);
        time += h;
        let d = drift(&rho);
        if !(d <= DRIFT_LIMIT) {
            return Err(QdynError::StepTooLarge {
                drift: d,
                limit: DRIFT_LIMIT,
                time,
            });
        }
        if (n + 1) % sample_every == 0 || n + 1 == last {
            path.push((time, DensityMatrix4(rho)));
        }
    }
    if last > 0 {
        // trace and Hermiticity were checked every step; confirm the spectrum once
        let min = hermitian_eigenvalues(&rho)[0];
        if min < -PSD_TOL {
            return Err(QdynError::StepTooLarge {
                drift: -min,
                limit: PSD_TOL,
                time,
            });
        }
        path.last_mut().expect("non-empty").1 = DensityMatrix4(rho);
    }
    Ok(path)
}

pub fn lindblad_evolve(
    rho0: &DensityMatrix4,
    dynamics: &CollapseDynamics,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix4, QdynError> {
    let path = lindblad_path(rho0, dynamics, t, dt, usize::MAX)?;
    Ok(path.last().expect("path holds the initial state").1)
}

/// Euler–Maruyama settings for a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t: f64,
    /// Record a sample every this many steps (the endpoints are always kept).
    pub sample_every: usize,
    /// Minimum population of a basis state for it to count as the outcome.
    pub collapse_threshold: f64,
}

impl SdeConfig {
    pub fn new(dt: f64, t: f64) -> Self {
        SdeConfig {
            dt,
            t,
            sample_every: usize::MAX,
            collapse_threshold: DEFAULT_COLLAPSE_THRESHOLD,
        }
    }

    pub fn with_sample_every(mut self, steps: usize) -> Self {
        self.sample_every = steps.max(1);
        self
    }

    fn validate(&self) -> Result<(), QdynError> {
        check_step(self.dt, self.t)?;
        if !(self.collapse_threshold > 0.5 && self.collapse_threshold <= 1.0) {
            return Err(QdynError::InvalidParameter(format!(
                "collapse threshold must lie in (0.5, 1], got {}",
                self.collapse_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// Index of this trajectory's random stream under `seed`.
    pub stream: u64,
    pub times: Vec<f64>,
    pub states: Vec<PureState4>,
    pub outcome: Option<DyadState>,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &PureState4 {
        self.states.last().expect("a trajectory holds at least its initial state")
    }

    fn sample_index(&self, at: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&t| (t - at).abs() <= 1e-9 * at.abs().max(1.0))
    }
}

/// Random source for trajectory `stream` under `seed`. Streams are
/// independent counters of one ChaCha key, so a trajectory does not depend on
/// how many others are drawn.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn outcome_of(psi: &PureState4, threshold: f64) -> Option<DyadState> {
    let pops = psi.populations();
    let (i, &p) = pops
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("four populations");
    (p >= threshold).then(|| DyadState::ALL[i])
}

pub fn sde_trajectory(
    psi0: &PureState4,
    dynamics: &CollapseDynamics,
    config: &SdeConfig,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord, QdynError> {
    config.validate()?;
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(QdynError::NotNormalized(norm));
    }
    let mut rng = trajectory_rng(seed, stream);
    let a = dynamics.operator.eigenvalues;
    let sqrt_lambda = dynamics.lambda.sqrt();
    let half_lambda = 0.5 * dynamics.lambda;
    let h = dynamics.hamiltonian.0;
    let has_h = !dynamics.hamiltonian.is_zero();

    let mut psi = psi0.0;
    let mut time = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![*psi0];
    let steps: Vec<f64> = step_schedule(config.t, config.dt).collect();
    let last = steps.len();
    for (n, dt) in steps.into_iter().enumerate() {
        let dw: f64 = StandardNormal.sample(&mut rng);
        let dw = dw * dt.sqrt();
        let mean: f64 = (0..4).map(|i| a[i] * psi[i].norm_sqr()).sum();
        let hpsi = if has_h { h * psi } else { Vector4c::zeros() };
        let mut next = psi;
        for i in 0..4 {
            let shift = a[i] - mean;
            let factor = c(sqrt_lambda * shift * dw - half_lambda * shift * shift * dt);
            next[i] += psi[i] * factor + hpsi[i] * C64::new(0.0, -dt);
        }
        psi = next.unscale(next.norm());
        time += dt;
        if (n + 1) % config.sample_every == 0 || n + 1 == last {
            times.push(time);
            states.push(PureState4(psi));
        }
    }
    let outcome = outcome_of(states.last().expect("non-empty"), config.collapse_threshold);
    Ok(TrajectoryRecord {
        seed,
        stream,
        times,
        states,
        outcome,
    })
}

/// Runs trajectories `0..count` of `seed` in parallel; the result is ordered
/// by stream index and independent of thread scheduling.
pub fn sde_ensemble(
    psi0: &PureState4,
    dynamics: &CollapseDynamics,
    config: &SdeConfig,
    seed: u64,
    count: u64,
) -> Result<Vec<TrajectoryRecord>, QdynError> {
    if count == 0 {
        return Err(QdynError::InvalidParameter("trajectory count must be positive".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|stream| sde_trajectory(psi0, dynamics, config, seed, stream))
        .collect()
}

/// Mean of `|ψ⟩⟨ψ|` over trajectories at sample time `at`.
pub fn ensemble_average(trajectories: &[TrajectoryRecord], at: f64) -> Result<DensityMatrix4, QdynError> {
    let first = trajectories.first().ok_or(QdynError::GridMismatch(at))?;
    let mut sum = Matrix4c::zeros();
    for tr in trajectories {
        if tr.times.len() != first.times.len()
            || tr.times.iter().zip(&first.times).any(|(x, y)| (x - y).abs() > 1e-12)
        {
            return Err(QdynError::GridMismatch(at));
        }
        let k = tr.sample_index(at).ok_or(QdynError::GridMismatch(at))?;
        let v = tr.states[k].0;
        sum += v * v.adjoint();
    }
    DensityMatrix4::new(sum.unscale(trajectories.len() as f64))
}

/// Fraction of trajectories that collapsed onto each basis state.
pub fn outcome_frequencies(trajectories: &[TrajectoryRecord]) -> [f64; 4] {
    let mut counts = [0usize; 4];
    for tr in trajectories {
        if let Some(s) = tr.outcome {
            counts[s.index()] += 1;
        }
    }
    let n = trajectories.len().max(1) as f64;
    counts.map(|k| k as f64 / n)
}
