//! Seeded random streams and Haar-measure sampling.

use crate::linalg::{C64, ComplexMatrix, PureState};
use crate::state::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Deterministic random stream: identical seed and call sequence reproduce
/// identical draws. Parallel code must split independent sub-streams instead
/// of sharing one.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from the same seed; streams with distinct
    /// indices never overlap.
    pub fn substream(&self, index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        Self {
            seed: self.seed,
            rng,
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn uniform_usize(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    /// Complex standard Gaussian `(N(0,1) + i N(0,1)) / sqrt(2)`.
    pub fn complex_normal(&mut self) -> C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.random_range(0..=i);
            items.swap(i, j);
        }
    }
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase of
/// the R diagonal divided out (Mezzadri construction).
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    assert!(dim >= 1);
    let mut a = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            a.set(i, j, rng.complex_normal());
        }
    }
    let (q, r_diag) = householder_qr(&a);
    // Q <- Q * diag(r_kk / |r_kk|) makes the R diagonal real positive.
    let mut out = q;
    for k in 0..dim {
        let d = r_diag[k];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            out.set(i, k, out.at(i, k) * phase);
        }
    }
    out
}

/// QR by Householder reflections; returns `Q` and the diagonal of `R`.
fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, Vec<C64>) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n {
        // Reflector for column k below the diagonal.
        let mut norm_sq = 0.0;
        for i in k..n {
            norm_sq += r.at(i, k).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r.at(k, k);
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k..n).map(|i| r.at(i, k)).collect();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        // R <- H R, Q <- Q H with H = I - 2 v v^dag / |v|^2.
        for col in k..n {
            let mut dot = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * r.at(k + i, col);
            }
            let scale = dot * (2.0 / v_norm_sq);
            for (i, vi) in v.iter().enumerate() {
                let cur = r.at(k + i, col);
                r.set(k + i, col, cur - scale * vi);
            }
        }
        for row in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += q.at(row, k + i) * vi;
            }
            let scale = dot * (2.0 / v_norm_sq);
            for (i, vi) in v.iter().enumerate() {
                let cur = q.at(row, k + i);
                q.set(row, k + i, cur - scale * vi.conj());
            }
        }
    }
    let r_diag = (0..n).map(|k| r.at(k, k)).collect();
    (q, r_diag)
}

/// Haar-random pure state `haar_unitary(dim) |0...0>`.
pub fn haar_state(dim: usize, rng: &mut RngStream) -> PureState {
    let u = haar_unitary(dim, rng);
    PureState::basis(dim, 0).apply(&u)
}

/// Haar-random pure density matrix on `num_qubits` qubits.
pub fn haar_density(num_qubits: usize, rng: &mut RngStream) -> DensityMatrix {
    DensityMatrix::from_pure(&haar_state(1 << num_qubits, rng))
}

/// Random Hermitian matrix from the Gaussian unitary ensemble,
/// `(G + G^dag)/2` for complex Gaussian `G`.
pub fn gue_hermitian(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g.set(i, j, rng.complex_normal());
        }
    }
    g.hermitian_part()
}

/// Random Hermitian matrix with entries of order one; handy as a test
/// observable.
pub fn random_hermitian(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    gue_hermitian(dim, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_z;

    #[test]
    fn same_seed_reproduces_draws() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..32 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let ua = haar_unitary(4, &mut a);
        let ub = haar_unitary(4, &mut b);
        assert!(ua.max_abs_diff(&ub) == 0.0);
    }

    #[test]
    fn substreams_differ_from_parent() {
        let base = RngStream::new(1);
        let mut s0 = base.substream(0);
        let mut s1 = base.substream(1);
        assert_ne!(s0.uniform().to_bits(), s1.uniform().to_bits());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = RngStream::new(5);
        for _ in 0..1000 {
            let u = haar_unitary(4, &mut rng);
            assert!(u.is_unitary(1e-10));
        }
    }

    #[test]
    fn haar_trace_moments() {
        // E[tr U] = 0 and E[|tr U|^2] = 1 for dim 2.
        let mut rng = RngStream::new(9);
        let n = 100_000;
        let mut sum = C64::new(0.0, 0.0);
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let t = haar_unitary(2, &mut rng).trace();
            sum += t;
            sum_sq += t.norm_sqr();
        }
        let mean = sum / n as f64;
        let mean_sq = sum_sq / n as f64;
        // |tr U| has variance 1, so the mean of each component has sigma ~ 1/sqrt(2n).
        let sigma = 1.0 / (2.0 * n as f64).sqrt();
        assert!(mean.re.abs() < 3.0 * sigma, "re {} vs {}", mean.re, sigma);
        assert!(mean.im.abs() < 3.0 * sigma);
        // Var(|tr U|^2) = E|tr|^4 - 1 = 1 at dim 2.
        let sigma_sq = 1.0 / (n as f64).sqrt();
        assert!((mean_sq - 1.0).abs() < 3.0 * sigma_sq, "got {mean_sq}");
    }

    #[test]
    fn haar_state_moments() {
        let mut rng = RngStream::new(13);
        let n = 100_000;
        let mut z_sum = 0.0;
        let mut rho_sum = ComplexMatrix::zeros(2, 2);
        for _ in 0..n {
            let s = haar_state(2, &mut rng);
            let p = s.projector();
            z_sum += p.mul(&pauli_z()).trace().re;
            rho_sum = rho_sum.add(&p);
        }
        let sigma = 1.0 / (n as f64).sqrt();
        assert!((z_sum / n as f64).abs() < 3.0 * sigma);
        let mean = rho_sum.scaled(C64::new(1.0 / n as f64, 0.0));
        let target = ComplexMatrix::identity(2).scaled(C64::new(0.5, 0.0));
        assert!(mean.max_abs_diff(&target) < 3.0 * sigma);
        assert!((haar_state(8, &mut rng).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gue_matrices_are_hermitian() {
        let mut rng = RngStream::new(17);
        for _ in 0..20 {
            let h = gue_hermitian(4, &mut rng);
            assert!(h.hermiticity_residue() < 1e-12);
        }
    }
}
