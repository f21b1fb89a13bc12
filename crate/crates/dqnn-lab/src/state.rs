//! Density matrices over labelled qubit registers and the distance measures
//! used as losses.

use crate::error::{Error, Result};
use crate::linalg::{C64, ComplexMatrix, PureState};

/// Tolerance for algebraic identities (Hermiticity, unit trace).
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Eigenvalue floor used by the positivity check.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// Trace-one positive-semidefinite operator on `num_qubits` qubits.
///
/// Qubit 0 is the most-significant Kronecker factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, trace and positivity.
    pub fn new(num_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dm = Self::from_matrix_unchecked(num_qubits, matrix);
        dm.validate()?;
        Ok(dm)
    }

    /// Wraps a matrix that is a valid state by construction.
    pub fn from_matrix_unchecked(num_qubits: usize, matrix: ComplexMatrix) -> Self {
        assert_eq!(matrix.rows(), 1 << num_qubits);
        assert!(matrix.is_square());
        Self { num_qubits, matrix }
    }

    /// `|psi><psi|`.
    pub fn from_pure(state: &PureState) -> Self {
        Self {
            num_qubits: state.num_qubits(),
            matrix: state.projector(),
        }
    }

    /// `|00..0><00..0|` on `num_qubits` qubits.
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut matrix = ComplexMatrix::zeros(1 << num_qubits, 1 << num_qubits);
        matrix.set(0, 0, C64::new(1.0, 0.0));
        Self { num_qubits, matrix }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let matrix = ComplexMatrix::identity(dim).scaled(C64::new(1.0 / dim as f64, 0.0));
        Self { num_qubits, matrix }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Shared validator: Hermitian and unit trace within 1e-10, eigenvalues
    /// above -1e-10.
    pub fn validate(&self) -> Result<()> {
        let residue = self.matrix.hermiticity_residue();
        if residue > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity residue {residue:e}"
            )));
        }
        let trace = self.matrix.trace();
        if (trace.re - 1.0).abs() > ALGEBRAIC_TOL || trace.im.abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        let (values, _) = self.matrix.hermitian_part().hermitian_eigen();
        if let Some(&min) = values.first() {
            if min < POSITIVITY_FLOOR {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    /// Kronecker product; `self` occupies the leading (most-significant)
    /// qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            num_qubits: self.num_qubits + other.num_qubits,
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Traces out the listed qubits; the kept qubits stay in their original
    /// relative order.
    pub fn partial_trace(&self, discard: &[usize]) -> Result<DensityMatrix> {
        let matrix = self.matrix.partial_trace_qubits(self.num_qubits, discard)?;
        Ok(DensityMatrix {
            num_qubits: self.num_qubits - discard.len(),
            matrix,
        })
    }

    /// Conjugation `U rho U^dag` by a unitary of matching dimension.
    pub fn conjugate(&self, unitary: &ComplexMatrix) -> DensityMatrix {
        assert_eq!(unitary.rows(), self.dim());
        DensityMatrix {
            num_qubits: self.num_qubits,
            matrix: unitary.mul(&self.matrix).mul(&unitary.dagger()),
        }
    }
}

/// Fidelity `<phi|rho|phi>` of a pure reference with a (possibly mixed)
/// state.
pub fn fidelity_pure_mixed(reference: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if reference.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            left: reference.dim(),
            right: rho.dim(),
        });
    }
    let amps = reference.amplitudes();
    let mut value = C64::new(0.0, 0.0);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            value += amps[i].conj() * rho.matrix().at(i, j) * amps[j];
        }
    }
    debug_assert!(value.im.abs() < ALGEBRAIC_TOL);
    Ok(value.re)
}

/// Hilbert-Schmidt distance `tr((rho - sigma)^2)`.
pub fn hilbert_schmidt_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "hilbert-schmidt distance",
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let diff = rho.matrix().sub(sigma.matrix());
    // tr(D^2) = sum_ij D_ij D_ji = sum_ij |D_ij|^2 for Hermitian D.
    let value: f64 = diff.entries().iter().map(|c| c.norm_sqr()).sum();
    Ok(value)
}

/// Half trace norm `(1/2) tr|H|` of a Hermitian operator.
pub fn trace_norm_half(hermitian: &ComplexMatrix) -> Result<f64> {
    let residue = hermitian.hermiticity_residue();
    if residue > 1e-8 {
        return Err(Error::NotHermitian {
            tolerance: 1e-8,
            residue,
        });
    }
    let (values, _) = hermitian.hermitian_part().hermitian_eigen();
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}
