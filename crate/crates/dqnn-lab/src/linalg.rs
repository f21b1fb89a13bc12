//! Dense complex matrices and pure-state vectors.
//!
//! Everything in the crate is built on row-major [`ComplexMatrix`] and
//! [`PureState`]. Qubit index 0 is the most-significant factor of the
//! Kronecker product, so tracing out a leading layer is a contiguous-block
//! partial trace.

use crate::error::{Error, Result};
use num_complex::Complex;

/// Complex number type used throughout the crate.
pub type C64 = Complex<f64>;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must match dimensions");
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        let data = data.iter().map(|&r| C64::new(r, 0.0)).collect();
        Self::from_rows(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix::from_rows(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix::from_rows(self.rows, self.cols, data)
    }

    pub fn scaled(&self, factor: C64) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a * factor).collect();
        ComplexMatrix::from_rows(self.rows, self.cols, data)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    /// Kronecker product with `self` occupying the leading (most-significant)
    /// index positions.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self.data[ia * self.cols + ja];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for ib in 0..other.rows {
                    let dst = (ia * other.rows + ib) * cols + ja * other.cols;
                    let src = ib * other.cols;
                    for jb in 0..other.cols {
                        out.data[dst + jb] = a * other.data[src + jb];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Hermiticity residue `max_ij |A_ij - conj(A_ji)|`.
    pub fn hermiticity_residue(&self) -> f64 {
        assert!(self.is_square());
        let mut residue: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                let r = (self.data[i * self.cols + j] - self.data[j * self.cols + i].conj()).norm();
                residue = residue.max(r);
            }
        }
        residue
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.is_square() && self.hermiticity_residue() <= tolerance
    }

    pub fn is_unitary(&self, tolerance: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let gram = self.dagger().mul(self);
        gram.max_abs_diff(&ComplexMatrix::identity(self.rows)) <= tolerance
    }

    /// Symmetrises `(A + A†)/2`; useful to scrub rounding off operators that
    /// are Hermitian by construction.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        self.add(&self.dagger()).scaled(C64::new(0.5, 0.0))
    }

    /// Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order together with the matrix whose
    /// columns are the matching orthonormal eigenvectors.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut v = ComplexMatrix::identity(n);
        if n <= 1 {
            let vals = (0..n).map(|i| a.at(i, i).re).collect();
            return (vals, v);
        }
        let scale = self.max_abs_entry().max(1.0);
        for _sweep in 0..100 {
            let mut off: f64 = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.at(p, q).norm());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.at(p, q);
                    let abs_apq = apq.norm();
                    if abs_apq <= 1e-18 * scale {
                        continue;
                    }
                    let app = a.at(p, p).re;
                    let aqq = a.at(q, q).re;
                    let phase = apq / abs_apq;
                    let tau = (aqq - app) / (2.0 * abs_apq);
                    // Smaller-magnitude root of t^2 - 2 tau t - 1 = 0.
                    let t = if tau >= 0.0 {
                        -1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // J restricted to (p,q): [[c, -s], [s*conj(phase), c*conj(phase)]]
                    let jpp = C64::new(c, 0.0);
                    let jpq = C64::new(-s, 0.0);
                    let jqp = phase.conj() * s;
                    let jqq = phase.conj() * c;
                    // Columns: A <- A J, V <- V J.
                    for i in 0..n {
                        let aip = a.at(i, p);
                        let aiq = a.at(i, q);
                        a.set(i, p, aip * jpp + aiq * jqp);
                        a.set(i, q, aip * jpq + aiq * jqq);
                        let vip = v.at(i, p);
                        let viq = v.at(i, q);
                        v.set(i, p, vip * jpp + viq * jqp);
                        v.set(i, q, vip * jpq + viq * jqq);
                    }
                    // Rows: A <- J† A.
                    for j in 0..n {
                        let apj = a.at(p, j);
                        let aqj = a.at(q, j);
                        a.set(p, j, apj * jpp.conj() + aqj * jqp.conj());
                        a.set(q, j, apj * jpq.conj() + aqj * jqq.conj());
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.at(i, i).re.partial_cmp(&a.at(j, j).re).unwrap());
        let values = order.iter().map(|&i| a.at(i, i).re).collect();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for i in 0..n {
                vectors.set(i, dst, v.at(i, src));
            }
        }
        (values, vectors)
    }

    /// `exp(i * step * K)` for Hermitian `K`, computed by eigendecomposition.
    pub fn hermitian_exp(&self, step: f64) -> Result<ComplexMatrix> {
        let residue = self.hermiticity_residue();
        if residue > 1e-8 {
            return Err(Error::NotHermitian {
                tolerance: 1e-8,
                residue,
            });
        }
        let (values, vectors) = self.hermitian_part().hermitian_eigen();
        let n = self.rows;
        let mut diag = ComplexMatrix::zeros(n, n);
        for (i, &lambda) in values.iter().enumerate() {
            diag.set(i, i, (C64::new(0.0, 1.0) * step * lambda).exp());
        }
        Ok(vectors.mul(&diag).mul(&vectors.dagger()))
    }

    /// Extends `op` to `total` qubits: it acts as `op` on `targets` (in the
    /// listed order) and as the identity elsewhere.
    pub fn embed_operator(
        op: &ComplexMatrix,
        targets: &[usize],
        total: usize,
    ) -> Result<ComplexMatrix> {
        let t = targets.len();
        assert!(op.is_square());
        assert_eq!(op.rows(), 1 << t, "operator dimension must be 2^targets");
        for (i, &q) in targets.iter().enumerate() {
            if q >= total {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: total,
                });
            }
            if targets[..i].contains(&q) {
                return Err(Error::DuplicateQubit { index: q });
            }
        }
        let dim = 1usize << total;
        let mut out = ComplexMatrix::zeros(dim, dim);
        // Bit position (from the least-significant end) of each target qubit.
        let shifts: Vec<usize> = targets.iter().map(|&q| total - 1 - q).collect();
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let spread = |bits: usize| -> usize {
            let mut out_bits = 0usize;
            for (k, &s) in shifts.iter().enumerate() {
                if (bits >> (t - 1 - k)) & 1 == 1 {
                    out_bits |= 1 << s;
                }
            }
            out_bits
        };
        let rest_dim = 1usize << (total - t);
        // Enumerate assignments of the non-target qubits.
        let mut rest_positions: Vec<usize> = (0..total)
            .filter(|q| !targets.contains(q))
            .map(|q| total - 1 - q)
            .collect();
        rest_positions.sort_unstable();
        for z in 0..rest_dim {
            let mut base = 0usize;
            for (k, &s) in rest_positions.iter().enumerate() {
                if (z >> k) & 1 == 1 {
                    base |= 1 << s;
                }
            }
            debug_assert_eq!(base & target_mask, 0);
            for r in 0..(1 << t) {
                let row = base | spread(r);
                for c in 0..(1 << t) {
                    let value = op.at(r, c);
                    if value.re == 0.0 && value.im == 0.0 {
                        continue;
                    }
                    out.set(row, base | spread(c), value);
                }
            }
        }
        Ok(out)
    }

    /// Traces out the listed qubits of a `2^n x 2^n` matrix; the kept qubits
    /// stay in their original relative order.
    pub fn partial_trace_qubits(&self, num_qubits: usize, discard: &[usize]) -> Result<ComplexMatrix> {
        assert!(self.is_square());
        assert_eq!(self.rows, 1 << num_qubits);
        for (i, &q) in discard.iter().enumerate() {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
            if discard[..i].contains(&q) {
                return Err(Error::DuplicateQubit { index: q });
            }
        }
        let kept: Vec<usize> = (0..num_qubits).filter(|q| !discard.contains(q)).collect();
        let kept_shifts: Vec<usize> = kept.iter().map(|&q| num_qubits - 1 - q).collect();
        let disc_shifts: Vec<usize> = discard.iter().map(|&q| num_qubits - 1 - q).collect();
        let kd = kept.len();
        let dd = discard.len();
        let mut out = ComplexMatrix::zeros(1 << kd, 1 << kd);
        let compose = |bits: usize, shifts: &[usize], width: usize| -> usize {
            let mut v = 0usize;
            for (k, &s) in shifts.iter().enumerate() {
                if (bits >> (width - 1 - k)) & 1 == 1 {
                    v |= 1 << s;
                }
            }
            v
        };
        for a in 0..(1usize << kd) {
            let abase = compose(a, &kept_shifts, kd);
            for b in 0..(1usize << kd) {
                let bbase = compose(b, &kept_shifts, kd);
                let mut sum = C64::new(0.0, 0.0);
                for z in 0..(1usize << dd) {
                    let zbits = compose(z, &disc_shifts, dd);
                    sum += self.at(abase | zbits, bbase | zbits);
                }
                out.set(a, b, sum);
            }
        }
        Ok(out)
    }
}

/// Pauli X.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Pauli Y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(
        2,
        2,
        vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

/// Pauli Z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Normalised state vector on a register of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Normalises the given amplitudes. The dimension must be a power of two
    /// and the vector must not be numerically zero.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if !amplitudes.len().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "pure-state dimension {} is not a power of two",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let amplitudes = amplitudes.iter().map(|c| c / norm).collect();
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim.is_power_of_two() && index < dim);
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rank-one projector `|self><self|`.
    pub fn projector(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out.set(i, j, self.amplitudes[i] * self.amplitudes[j].conj());
            }
        }
        out
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        PureState { amplitudes }
    }

    /// Applies a square matrix, renormalising only if asked not to trust it.
    pub fn apply(&self, op: &ComplexMatrix) -> PureState {
        assert_eq!(op.cols(), self.dim());
        let mut amplitudes = vec![C64::new(0.0, 0.0); op.rows()];
        for (i, amp) in amplitudes.iter_mut().enumerate() {
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..op.cols() {
                sum += op.at(i, j) * self.amplitudes[j];
            }
            *amp = sum;
        }
        PureState { amplitudes }
    }

    /// `a|self> + b|other>`, normalised.
    pub fn superpose(&self, a: C64, other: &PureState, b: C64) -> Result<PureState> {
        assert_eq!(self.dim(), other.dim());
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        PureState::new(amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_and_mul() {
        let x = pauli_x();
        let id = ComplexMatrix::identity(2);
        assert_eq!(x.mul(&id), x);
        assert!(x.mul(&x).max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn kron_leading_factor_is_most_significant() {
        // X on qubit 0 of two qubits maps |00> -> |10>.
        let op = pauli_x().kron(&ComplexMatrix::identity(2));
        let s = PureState::basis(4, 0).apply(&op);
        assert!(approx(s.amplitudes()[2].re, 1.0, 1e-15));
    }

    #[test]
    fn embed_x_on_second_qubit_flips_low_bit() {
        // embed(X, [1], 2) applied to |00> gives |01>.
        let op = ComplexMatrix::embed_operator(&pauli_x(), &[1], 2).unwrap();
        let s = PureState::basis(4, 0).apply(&op);
        assert!(approx(s.amplitudes()[1].re, 1.0, 1e-15));
        // embed(I, ..) is the identity, and embedding on the full register is a no-op.
        let id = ComplexMatrix::embed_operator(&ComplexMatrix::identity(2), &[0], 3).unwrap();
        assert!(id.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
        let full = ComplexMatrix::embed_operator(&pauli_x().kron(&pauli_z()), &[0, 1], 2).unwrap();
        assert!(full.max_abs_diff(&pauli_x().kron(&pauli_z())) < 1e-15);
    }

    #[test]
    fn embed_respects_target_order() {
        // A two-qubit op on targets [1,0] is the qubit-swapped version of the op on [0,1].
        let cnot = ComplexMatrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let swapped = ComplexMatrix::embed_operator(&cnot, &[1, 0], 2).unwrap();
        // Control on qubit 1: |01> -> |11>, |11> -> |01>.
        let s = PureState::basis(4, 1).apply(&swapped);
        assert!(approx(s.amplitudes()[3].re, 1.0, 1e-15));
    }

    #[test]
    fn embed_rejects_bad_targets() {
        assert!(ComplexMatrix::embed_operator(&pauli_x(), &[3], 2).is_err());
        let two = pauli_x().kron(&pauli_x());
        assert!(ComplexMatrix::embed_operator(&two, &[1, 1], 3).is_err());
    }

    #[test]
    fn partial_trace_of_kron_recovers_factors() {
        let a = ComplexMatrix::from_real(2, 2, &[0.25, 0.0, 0.0, 0.75]);
        let b = ComplexMatrix::from_real(2, 2, &[0.5, 0.1, 0.1, 0.5]);
        let joint = a.kron(&b);
        let got_a = joint.partial_trace_qubits(2, &[1]).unwrap();
        let got_b = joint.partial_trace_qubits(2, &[0]).unwrap();
        assert!(got_a.max_abs_diff(&a) < 1e-15);
        assert!(got_b.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_out_of_range() {
        let m = ComplexMatrix::identity(4);
        assert!(m.partial_trace_qubits(2, &[2]).is_err());
        assert!(m.partial_trace_qubits(2, &[0, 0]).is_err());
    }

    #[test]
    fn jacobi_diagonalises_pauli_x() {
        let (vals, vecs) = pauli_x().hermitian_eigen();
        assert!(approx(vals[0], -1.0, 1e-12));
        assert!(approx(vals[1], 1.0, 1e-12));
        assert!(vecs.is_unitary(1e-12));
        // Reconstruct.
        let mut d = ComplexMatrix::zeros(2, 2);
        d.set(0, 0, C64::new(vals[0], 0.0));
        d.set(1, 1, C64::new(vals[1], 0.0));
        let rec = vecs.mul(&d).mul(&vecs.dagger());
        assert!(rec.max_abs_diff(&pauli_x()) < 1e-12);
    }

    #[test]
    fn hermitian_exp_of_z_at_pi_is_minus_identity() {
        let u = pauli_z().hermitian_exp(std::f64::consts::PI).unwrap();
        let minus_id = ComplexMatrix::identity(2).scaled(C64::new(-1.0, 0.0));
        assert!(u.max_abs_diff(&minus_id) < 1e-12);
    }

    #[test]
    fn hermitian_exp_zero_step_is_identity() {
        let u = pauli_y().hermitian_exp(0.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn hermitian_exp_rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 1, C64::new(1.0, 0.0));
        assert!(m.hermitian_exp(0.1).is_err());
    }

    #[test]
    fn pure_state_normalisation_and_inner() {
        let s = PureState::from_real(&[1.0, 1.0]).unwrap();
        assert!(approx(s.norm(), 1.0, 1e-15));
        let zero = PureState::basis(2, 0);
        assert!(approx(s.inner(&zero).norm_sqr(), 0.5, 1e-15));
        assert!(PureState::new(vec![C64::new(0.0, 0.0); 4]).is_err());
        assert!(PureState::new(vec![C64::new(1.0, 0.0); 3]).is_err());
    }
}
