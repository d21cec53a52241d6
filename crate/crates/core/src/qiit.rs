//! Quantum integrated information of the SWAP dyad.
//!
//! Repertoires are density operators. Divergences are evaluated on spectral
//! ensembles: with `ρ = Σ p_i |ψ_i⟩⟨ψ_i|`, `σ = Σ q_j |φ_j⟩⟨φ_j|` and overlaps
//! `P_ij = |⟨ψ_i|φ_j⟩|²`, each eigenstate of `ρ` contributes
//! `p_i (log2 p_i − Σ_j P_ij log2 q_j)`. The relative entropy sums these terms
//! and the quantum intrinsic difference (QID) takes their maximum. Partitioned
//! links are replaced by the maximally mixed qubit.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::model::Unit;
use crate::phi::Direction;
use crate::qdyn::{swap_unitary, DensityMatrix4, Matrix4c, QdynError, C64};

/// Eigenvalues below this are treated as zero.
pub const SPECTRAL_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QiitError {
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("support of rho is not contained in the support of sigma")]
    InfiniteDivergence,
    #[error("state is outside the supported family: {0}")]
    UnsupportedState(&'static str),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Dynamics(#[from] QdynError),
}

/// Anything that can be viewed as a density operator.
pub trait Density {
    fn operator(&self) -> DMatrix<C64>;
}

impl Density for DensityMatrix4 {
    fn operator(&self) -> DMatrix<C64> {
        let m = self.matrix();
        DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
    }
}

/// Single-qubit density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity(Matrix2<C64>);

impl QubitDensity {
    pub fn new(m: Matrix2<C64>) -> Result<Self, QiitError> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > STATE_TOL {
            return Err(QiitError::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(QiitError::InvalidDensity(format!("trace {}", tr.re)));
        }
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.min();
        if min < -STATE_TOL {
            return Err(QiitError::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(QubitDensity(m))
    }

    pub fn pure(amplitudes: [C64; 2]) -> Result<Self, QiitError> {
        let v = nalgebra::Vector2::from(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QiitError::InvalidDensity(format!("state norm {norm}")));
        }
        Ok(QubitDensity(v * v.adjoint()))
    }

    pub fn zero() -> Self {
        QubitDensity(Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)))
    }

    pub fn one() -> Self {
        QubitDensity(Matrix2::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)))
    }

    /// `|+⟩⟨+|`.
    pub fn plus() -> Self {
        QubitDensity(Matrix2::from_element(C64::new(0.5, 0.0)))
    }

    pub fn maximally_mixed() -> Self {
        QubitDensity(Matrix2::identity().scale(0.5))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn tensor(&self, other: &QubitDensity) -> DensityMatrix4 {
        let m = self.0.kronecker(&other.0);
        DensityMatrix4::new(Matrix4c::from_fn(|i, j| m[(i, j)])).expect("product of valid states")
    }
}

impl Density for QubitDensity {
    fn operator(&self) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |i, j| self.0[(i, j)])
    }
}

/// Eigenvalues and orthonormal eigenvectors of a density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnsemble {
    pub probabilities: Vec<f64>,
    pub states: Vec<DVector<C64>>,
}

impl SpectralEnsemble {
    pub fn of(rho: &impl Density) -> Self {
        Self::from_operator(&rho.operator())
    }

    pub fn from_operator(m: &DMatrix<C64>) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        let probabilities = eig
            .eigenvalues
            .iter()
            .map(|&p| if p.abs() < SPECTRAL_TOL { 0.0 } else { p })
            .collect();
        let states = eig.eigenvectors.column_iter().map(|c| c.into_owned()).collect();
        SpectralEnsemble {
            probabilities,
            states,
        }
    }

    /// Ensemble from explicitly chosen eigenpairs, e.g. another basis of a
    /// degenerate eigenspace.
    pub fn new(probabilities: Vec<f64>, states: Vec<DVector<C64>>) -> Result<Self, QiitError> {
        if probabilities.len() != states.len() {
            return Err(QiitError::DimensionMismatch(probabilities.len(), states.len()));
        }
        let dim = states.first().map_or(0, |s| s.len());
        if states.len() != dim {
            return Err(QiitError::DimensionMismatch(states.len(), dim));
        }
        if probabilities.iter().any(|&p| p < -SPECTRAL_TOL)
            || (probabilities.iter().sum::<f64>() - 1.0).abs() > STATE_TOL
        {
            return Err(QiitError::InvalidDensity("weights must be a distribution".into()));
        }
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let overlap = a.dotc(b).norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (overlap - expected).abs() > STATE_TOL {
                    return Err(QiitError::InvalidDensity("eigenstates must be orthonormal".into()));
                }
            }
        }
        Ok(SpectralEnsemble {
            probabilities,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (p, v) in self.probabilities.iter().zip(&self.states) {
            m += (v * v.adjoint()).scale(*p);
        }
        m
    }
}

/// Per-eigenstate contributions `p_i (log2 p_i − Σ_j P_ij log2 q_j)`.
pub fn divergence_terms(rho: &SpectralEnsemble, sigma: &SpectralEnsemble) -> Result<Vec<f64>, QiitError> {
    if rho.dim() != sigma.dim() {
        return Err(QiitError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let mut terms = Vec::with_capacity(rho.dim());
    for (&p, psi) in rho.probabilities.iter().zip(&rho.states) {
        if p <= SPECTRAL_TOL {
            terms.push(0.0);
            continue;
        }
        let mut cross = 0.0;
        for (&q, phi) in sigma.probabilities.iter().zip(&sigma.states) {
            let overlap = psi.dotc(phi).norm_sqr();
            if overlap <= SPECTRAL_TOL {
                continue;
            }
            if q <= SPECTRAL_TOL {
                return Err(QiitError::InfiniteDivergence);
            }
            cross += overlap * q.log2();
        }
        terms.push(p * (p.log2() - cross));
    }
    Ok(terms)
}

/// `S(ρ‖σ) = Tr ρ log2 ρ − Tr ρ log2 σ`, in bits.
pub fn quantum_relative_entropy(rho: &impl Density, sigma: &impl Density) -> Result<f64, QiitError> {
    let terms = divergence_terms(&SpectralEnsemble::of(rho), &SpectralEnsemble::of(sigma))?;
    Ok(terms.iter().sum::<f64>().max(0.0))
}

/// Quantum intrinsic difference: the largest single-eigenstate contribution.
pub fn qid(rho: &impl Density, sigma: &impl Density) -> Result<f64, QiitError> {
    let terms = divergence_terms(&SpectralEnsemble::of(rho), &SpectralEnsemble::of(sigma))?;
    Ok(terms.into_iter().fold(0.0, f64::max))
}

pub fn unitary_step(rho: &DensityMatrix4, u: &Matrix4c) -> Result<DensityMatrix4, QiitError> {
    let deviation = (u * u.adjoint() - Matrix4c::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if deviation > UNITARY_TOL {
        return Err(QiitError::NotUnitary(deviation));
    }
    Ok(DensityMatrix4::new(u * rho.matrix() * u.adjoint())?)
}

/// Reduced state of one qubit (A is the first tensor factor).
pub fn reduced_state(rho: &DensityMatrix4, unit: Unit) -> QubitDensity {
    let m = rho.matrix();
    let entry = |x: usize, y: usize| -> C64 {
        (0..2)
            .map(|other| match unit {
                Unit::A => m[(2 * x + other, 2 * y + other)],
                Unit::B => m[(2 * other + x, 2 * other + y)],
            })
            .sum()
    };
    QubitDensity(Matrix2::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1)))
}

/// Splits `rho` into its qubit factors when it is a product of pure or
/// maximally mixed qubits, the family the calculus is defined for.
fn supported_factors(rho: &DensityMatrix4) -> Result<(QubitDensity, QubitDensity), QiitError> {
    let a = reduced_state(rho, Unit::A);
    let b = reduced_state(rho, Unit::B);
    if rho.max_abs_diff(&a.tensor(&b)) > STATE_TOL {
        return Err(QiitError::UnsupportedState("units are correlated"));
    }
    let mm = QubitDensity::maximally_mixed();
    for f in [&a, &b] {
        let pure = (f.purity() - 1.0).abs() <= STATE_TOL;
        let mixed = (f.0 - mm.0).iter().all(|z| z.norm() <= STATE_TOL);
        if !(pure || mixed) {
            return Err(QiitError::UnsupportedState("a unit is partially mixed"));
        }
    }
    Ok((a, b))
}

/// Integrated cause or effect information of one unit of the SWAP dyad.
///
/// The effect repertoire is the partner's state one step later; the cause
/// repertoire is the unit's present state. In both cases the partitioned
/// repertoire is the maximally mixed qubit.
pub fn quantum_phi_unit(unit: Unit, state: &DensityMatrix4, direction: Direction) -> Result<f64, QiitError> {
    let (a, b) = supported_factors(state)?;
    let noise = QubitDensity::maximally_mixed();
    let constrained = match direction {
        Direction::Effect => {
            let next = unitary_step(state, &swap_unitary())?;
            reduced_state(&next, unit.partner())
        }
        Direction::Cause => match unit {
            Unit::A => a,
            Unit::B => b,
        },
    };
    qid(&constrained, &noise)
}

/// Integrated information of the whole system. Cutting the A→A and B→B links
/// leaves the SWAP unchanged, so the partitioned repertoire coincides with the
/// constrained one.
fn quantum_phi_whole(state: &DensityMatrix4) -> Result<f64, QiitError> {
    supported_factors(state)?;
    let next = unitary_step(state, &swap_unitary())?;
    let effect = qid(&next, &next)?;
    let cause = qid(state, state)?;
    Ok(effect.min(cause))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumUnitPhi {
    pub phi_e: f64,
    pub phi_c: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumPhiReport {
    #[serde(rename = "A")]
    pub a: QuantumUnitPhi,
    #[serde(rename = "B")]
    pub b: QuantumUnitPhi,
    #[serde(rename = "phi_A")]
    pub phi_a: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
    #[serde(rename = "phi_AB")]
    pub phi_ab: f64,
    pub big_phi: f64,
}

impl QuantumPhiReport {
    pub fn breakdown(&self) -> [f64; 3] {
        [self.phi_a, self.phi_b, self.phi_ab]
    }
}

pub fn quantum_big_phi(state: &DensityMatrix4) -> Result<QuantumPhiReport, QiitError> {
    let unit = |u: Unit| -> Result<QuantumUnitPhi, QiitError> {
        let phi_e = quantum_phi_unit(u, state, Direction::Effect)?;
        let phi_c = quantum_phi_unit(u, state, Direction::Cause)?;
        Ok(QuantumUnitPhi {
            phi_e,
            phi_c,
            phi: phi_e.min(phi_c),
        })
    };
    let a = unit(Unit::A)?;
    let b = unit(Unit::B)?;
    let phi_ab = quantum_phi_whole(state)?;
    Ok(QuantumPhiReport {
        phi_a: a.phi,
        phi_b: b.phi,
        phi_ab,
        big_phi: a.phi + b.phi + phi_ab,
        a,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DyadState;
    use crate::qdyn::{dyad_input_state, prepare_dyad_superposition, PureState4};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn plus0() -> DensityMatrix4 {
        prepare_dyad_superposition().projector()
    }

    #[test]
    fn swap_moves_plus_between_channels() {
        let input = dyad_input_state().projector();
        let out = unitary_step(&input, &swap_unitary()).unwrap();
        assert!(out.max_abs_diff(&plus0()) < 1e-15);
        let mm = DensityMatrix4::maximally_mixed();
        assert!(unitary_step(&mm, &swap_unitary()).unwrap().max_abs_diff(&mm) < 1e-15);
        let b01 = DensityMatrix4::basis("01".parse().unwrap());
        let b10 = DensityMatrix4::basis("10".parse().unwrap());
        assert!(unitary_step(&b01, &swap_unitary()).unwrap().max_abs_diff(&b10) < 1e-15);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = Matrix4c::identity().scale(2.0);
        assert!(matches!(
            unitary_step(&DensityMatrix4::maximally_mixed(), &m),
            Err(QiitError::NotUnitary(_))
        ));
    }

    #[test]
    fn relative_entropy_examples() {
        let mm = QubitDensity::maximally_mixed();
        let zero = QubitDensity::zero();
        let plus = QubitDensity::plus();
        assert!(quantum_relative_entropy(&plus, &plus).unwrap().abs() < 1e-12);
        assert!((quantum_relative_entropy(&zero, &mm).unwrap() - 1.0).abs() < 1e-12);
        assert!((quantum_relative_entropy(&plus, &mm).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            quantum_relative_entropy(&plus, &zero),
            Err(QiitError::InfiniteDivergence)
        );
    }

    #[test]
    fn qid_examples() {
        let mm = QubitDensity::maximally_mixed();
        let plus = QubitDensity::plus();
        assert!((qid(&plus, &mm).unwrap() - 1.0).abs() < 1e-12);
        assert!(qid(&plus, &plus).unwrap().abs() < 1e-12);
        assert!(qid(&mm, &mm).unwrap().abs() < 1e-12);
        let skew = QubitDensity::pure([r(0.6), C64::new(0.0, 0.8)]).unwrap();
        let sigma = QubitDensity::new(Matrix2::new(r(0.7), r(0.1), r(0.1), r(0.3))).unwrap();
        let s = quantum_relative_entropy(&skew, &sigma).unwrap();
        assert!((qid(&skew, &sigma).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn qid_reduces_to_classical_difference_on_diagonal_states() {
        let p: [f64; 2] = [0.7, 0.3];
        let q: [f64; 2] = [0.4, 0.6];
        let diag = |v: [f64; 2]| QubitDensity::new(Matrix2::new(r(v[0]), r(0.0), r(0.0), r(v[1]))).unwrap();
        let classical = (0..2).map(|i| p[i] * (p[i] / q[i]).log2()).fold(f64::MIN, f64::max);
        assert!((qid(&diag(p), &diag(q)).unwrap() - classical).abs() < 1e-12);
    }

    #[test]
    fn degenerate_basis_choice_is_irrelevant() {
        let plus = SpectralEnsemble::of(&QubitDensity::plus());
        let computational = SpectralEnsemble::of(&QubitDensity::maximally_mixed());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = SpectralEnsemble::new(
            vec![0.5, 0.5],
            vec![
                DVector::from_vec(vec![r(s), r(s)]),
                DVector::from_vec(vec![r(s), r(-s)]),
            ],
        )
        .unwrap();
        let t1 = divergence_terms(&plus, &computational).unwrap();
        let t2 = divergence_terms(&plus, &hadamard).unwrap();
        let max = |t: &[f64]| t.iter().copied().fold(0.0, f64::max);
        assert!((max(&t1) - max(&t2)).abs() < 1e-12);
        assert!((t1.iter().sum::<f64>() - t2.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn spectral_round_trip() {
        let rho = plus0();
        let ens = SpectralEnsemble::of(&rho);
        let diff = (ens.reconstruct() - rho.operator()).norm();
        assert!(diff < 1e-10);
    }

    #[test]
    fn reduced_states_of_plus0() {
        let rho = plus0();
        let a = reduced_state(&rho, Unit::A);
        let b = reduced_state(&rho, Unit::B);
        assert!((a.0 - QubitDensity::plus().0).norm() < 1e-15);
        assert!((b.0 - QubitDensity::zero().0).norm() < 1e-15);
    }

    #[test]
    fn unit_values_for_superposed_dyad() {
        let input = dyad_input_state().projector();
        assert!((quantum_phi_unit(Unit::B, &input, Direction::Effect).unwrap() - 1.0).abs() < 1e-12);
        assert!((quantum_phi_unit(Unit::A, &input, Direction::Cause).unwrap() - 1.0).abs() < 1e-12);
        let rho = plus0();
        for u in Unit::BOTH {
            for d in [Direction::Cause, Direction::Effect] {
                assert!((quantum_phi_unit(u, &rho, d).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn big_phi_of_superposed_dyad() {
        let report = quantum_big_phi(&plus0()).unwrap();
        assert!((report.big_phi - 2.0).abs() < 1e-12);
        let [a, b, ab] = report.breakdown();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && ab.abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_has_no_effect_information() {
        let report = quantum_big_phi(&DensityMatrix4::maximally_mixed()).unwrap();
        assert!(report.a.phi_e.abs() < 1e-12);
        assert!(report.b.phi_e.abs() < 1e-12);
    }

    #[test]
    fn entangled_and_partially_mixed_states_are_rejected() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState4::new([r(s), r(0.0), r(0.0), r(s)]).unwrap().projector();
        assert!(matches!(
            quantum_big_phi(&bell),
            Err(QiitError::UnsupportedState(_))
        ));
        let partial = QubitDensity::new(Matrix2::new(r(0.8), r(0.0), r(0.0), r(0.2)))
            .unwrap()
            .tensor(&QubitDensity::zero());
        assert!(matches!(
            quantum_phi_unit(Unit::A, &partial, Direction::Cause),
            Err(QiitError::UnsupportedState(_))
        ));
    }

    #[test]
    fn basis_states_reproduce_classical_phi() {
        for s in DyadState::ALL {
            let report = quantum_big_phi(&DensityMatrix4::basis(s)).unwrap();
            assert!((report.big_phi - 2.0).abs() < 1e-12, "{s}");
        }
    }
}
