//! Classical and quantum no-free-lunch bounds, exact and empirical quantum
//! risk, and Monte-Carlo verification of the Haar integral identities behind
//! them.

use crate::dqnn::{make_unitary_dataset, Dqnn, Hyperparams, NetworkTopology};
use crate::error::{Error, Result};
use crate::linalg::{C64, ComplexMatrix};
use crate::random::{haar_unitary, RngStream};
use crate::state::{trace_norm_half, DensityMatrix};
use rayon::prelude::*;

/// Bounds and measured risk for one supervised-pair count.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub supervised_count: usize,
    pub bound_classical: f64,
    pub bound_invertible: f64,
    pub bound_quantum: f64,
    pub empirical_risk_mean: f64,
    pub empirical_risk_stddev: f64,
    pub trials: usize,
}

/// Classical bound `(1 - S/|X|)(1 - 1/|Y|)` on the average risk.
pub fn classical_nfl_bound(x_size: usize, y_size: usize, supervised: usize) -> Result<f64> {
    if x_size == 0 || y_size == 0 || supervised > x_size {
        return Err(Error::InvalidConfig(
            "need 1 <= |X|, 1 <= |Y| and S <= |X|".into(),
        ));
    }
    let x = x_size as f64;
    let y = y_size as f64;
    Ok((1.0 - supervised as f64 / x) * (1.0 - 1.0 / y))
}

/// Classical bound `1 - (S+1)/|X|` for invertible target functions.
pub fn classical_invertible_bound(x_size: usize, supervised: usize) -> Result<f64> {
    if x_size == 0 || supervised > x_size {
        return Err(Error::InvalidConfig("need 1 <= |X| and S <= |X|".into()));
    }
    Ok(1.0 - (supervised as f64 + 1.0) / x_size as f64)
}

/// Quantum bound `1 - (S^2 + d + 1) / (d(d+1))`; the raw value is returned
/// and may be negative (clamping is a plotting concern only).
pub fn qnfl_bound(dim: usize, supervised: usize) -> f64 {
    let d = dim as f64;
    let s = supervised as f64;
    1.0 - (s * s + d + 1.0) / (d * (d + 1.0))
}

/// Exact averaged risk between two unitaries:
/// `d/(d+1) - |tr(Y^dag U)|^2 / (d(d+1))`.
pub fn quantum_risk_exact(target: &ComplexMatrix, hypothesis: &ComplexMatrix) -> Result<f64> {
    if target.rows() != hypothesis.rows() {
        return Err(Error::DimensionMismatch {
            context: "quantum risk",
            left: target.rows(),
            right: hypothesis.rows(),
        });
    }
    let d = target.rows() as f64;
    let overlap = target.dagger().mul(hypothesis).trace().norm_sqr();
    Ok(d / (d + 1.0) - overlap / (d * (d + 1.0)))
}

/// The model whose action is compared against the target unitary.
pub enum Hypothesis<'a> {
    Unitary(&'a ComplexMatrix),
    Network(&'a Dqnn),
}

/// Haar-random column vector as a matrix-friendly amplitude list.
fn haar_vector(dim: usize, rng: &mut RngStream) -> Vec<C64> {
    let u = haar_unitary(dim, rng);
    (0..dim).map(|i| u.at(i, 0)).collect()
}

fn projector_of(vector: &[C64]) -> ComplexMatrix {
    let d = vector.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out.set(i, j, vector[i] * vector[j].conj());
        }
    }
    out
}

fn apply_matrix(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.at(i, j) * v[j]).sum())
        .collect()
}

/// Empirical risk over `count` Haar-random pure inputs: the mean squared
/// half-trace-norm distance between the target-evolved projector and the
/// hypothesis output. Network hypotheses may produce mixed outputs.
pub fn quantum_risk_empirical(
    target: &ComplexMatrix,
    hypothesis: &Hypothesis,
    count: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidConfig("need at least one risk sample".into()));
    }
    let dim = target.rows();
    let mut total = 0.0;
    for _ in 0..count {
        let input = haar_vector(dim, rng);
        let evolved = projector_of(&apply_matrix(target, &input));
        let output = match hypothesis {
            Hypothesis::Unitary(u) => {
                if u.rows() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "hypothesis dimension",
                        left: u.rows(),
                        right: dim,
                    });
                }
                projector_of(&apply_matrix(u, &input))
            }
            Hypothesis::Network(net) => {
                let state = crate::linalg::PureState::new(input.clone())?;
                if state.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "hypothesis dimension",
                        left: state.dim(),
                        right: dim,
                    });
                }
                net.network_output(&state)?.matrix().clone()
            }
        };
        let distance = trace_norm_half(&evolved.sub(&output))?;
        total += distance * distance;
    }
    Ok(total / count as f64)
}

/// Swap operator on `C^d (x) C^d`.
pub fn swap_operator(dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            out.set(i * dim + j, j * dim + i, C64::new(1.0, 0.0));
        }
    }
    out
}

/// Permutation operator on `(C^d)^(x)4` with `a_k = b_(perm[k])`.
fn permutation_operator(dim: usize, perm: [usize; 4]) -> ComplexMatrix {
    let total = dim * dim * dim * dim;
    let mut out = ComplexMatrix::zeros(total, total);
    for b in 0..total {
        let digits = [
            b / (dim * dim * dim) % dim,
            b / (dim * dim) % dim,
            b / dim % dim,
            b % dim,
        ];
        let mut a = 0usize;
        for k in 0..4 {
            a = a * dim + digits[perm[k]];
        }
        out.set(a, b, C64::new(1.0, 0.0));
    }
    out
}

/// Weingarten coefficients of the closed form: `(1/(d^2-1), 1/(d(d^2-1)))`.
pub fn fourth_moment_coefficients(dim: usize) -> (f64, f64) {
    let d = dim as f64;
    (1.0 / (d * d - 1.0), 1.0 / (d * (d * d - 1.0)))
}

/// Closed form of `int dY Y^dag (x) Y^dag (x) Y (x) Y`: a signed combination
/// of four permutation operators.
pub fn fourth_moment_closed_form(dim: usize) -> ComplexMatrix {
    let (plus, minus) = fourth_moment_coefficients(dim);
    let t1 = permutation_operator(dim, [2, 3, 0, 1]);
    let t4 = permutation_operator(dim, [3, 2, 1, 0]);
    let t2 = permutation_operator(dim, [3, 2, 0, 1]);
    let t3 = permutation_operator(dim, [2, 3, 1, 0]);
    t1.add(&t4)
        .scaled(C64::new(plus, 0.0))
        .sub(&t2.add(&t3).scaled(C64::new(minus, 0.0)))
}

/// Monte-Carlo estimate of `int dY Y^dag (x) Y`, returning the maximum
/// entrywise error against `SWAP/d`.
pub fn monte_carlo_s2(dim: usize, samples: usize, rng: &mut RngStream) -> f64 {
    monte_carlo_s2_estimate(dim, samples, rng)
        .max_abs_diff(&swap_operator(dim).scaled(C64::new(1.0 / dim as f64, 0.0)))
}

/// The raw sample mean of `Y^dag (x) Y`.
pub fn monte_carlo_s2_estimate(dim: usize, samples: usize, rng: &mut RngStream) -> ComplexMatrix {
    assert!(samples > 0);
    let mut sum = ComplexMatrix::zeros(dim * dim, dim * dim);
    for _ in 0..samples {
        let y = haar_unitary(dim, rng);
        sum = sum.add(&y.dagger().kron(&y));
    }
    sum.scaled(C64::new(1.0 / samples as f64, 0.0))
}

/// Monte-Carlo estimate of the fourth-moment operator, returning the maximum
/// entrywise error against the closed form.
pub fn monte_carlo_s4(dim: usize, samples: usize, rng: &mut RngStream) -> f64 {
    monte_carlo_s4_estimate(dim, samples, rng).max_abs_diff(&fourth_moment_closed_form(dim))
}

/// The raw sample mean of `Y^dag (x) Y^dag (x) Y (x) Y`.
pub fn monte_carlo_s4_estimate(dim: usize, samples: usize, rng: &mut RngStream) -> ComplexMatrix {
    assert!(samples > 0);
    let total = dim * dim * dim * dim;
    let mut sum = ComplexMatrix::zeros(total, total);
    for _ in 0..samples {
        let y = haar_unitary(dim, rng);
        let yd = y.dagger();
        sum = sum.add(&yd.kron(&yd).kron(&y).kron(&y));
    }
    sum.scaled(C64::new(1.0 / samples as f64, 0.0))
}

/// Closed form of the pure-state second moment
/// `int d|psi> |<psi|X|psi>|^2 = (d + |tr X|^2) / (d(d+1))` for unitary `X`.
pub fn state_moment_closed_form(x: &ComplexMatrix) -> f64 {
    let d = x.rows() as f64;
    (d + x.trace().norm_sqr()) / (d * (d + 1.0))
}

/// Monte-Carlo estimate of `int d|psi> |<psi|X|psi>|^2`, with the sample
/// standard deviation of the mean.
pub fn monte_carlo_state_moment(
    x: &ComplexMatrix,
    samples: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    assert!(samples > 1 && x.is_square());
    let dim = x.rows();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let psi = haar_vector(dim, rng);
        let xpsi = apply_matrix(x, &psi);
        let amp: C64 = psi.iter().zip(xpsi.iter()).map(|(a, b)| a.conj() * b).sum();
        let v = amp.norm_sqr();
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0);
    (mean, (variance / n).sqrt())
}

/// Bound-versus-trained-network experiment: for every supervised count,
/// sample a Haar target unitary, build `pairs_total` pairs, train on the
/// first `S`, and measure the empirical risk over `inputs_per_trial` random
/// inputs; trials run on independent sub-streams and are averaged.
#[allow(clippy::too_many_arguments)]
pub fn nfl_experiment(
    topology: &NetworkTopology,
    dim: usize,
    supervised_counts: &[usize],
    trials: usize,
    hyper: &Hyperparams,
    inputs_per_trial: usize,
    pairs_total: usize,
    rng: &RngStream,
) -> Result<Vec<RiskReport>> {
    if 1 << topology.input_width() != dim || 1 << topology.output_width() != dim {
        return Err(Error::DimensionMismatch {
            context: "topology width vs target dimension",
            left: 1 << topology.input_width(),
            right: dim,
        });
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let mut reports = Vec::with_capacity(supervised_counts.len());
    for (si, &s) in supervised_counts.iter().enumerate() {
        if s == 0 || s > pairs_total {
            return Err(Error::InvalidConfig(format!(
                "supervised count {s} outside 1..={pairs_total}"
            )));
        }
        let risks: Result<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut stream = rng.substream((si * trials + trial) as u64);
                let target = haar_unitary(dim, &mut stream);
                let pairs = make_unitary_dataset(&target, pairs_total, &mut stream)?;
                let mut net = Dqnn::init_random(topology.clone(), &mut stream);
                for _ in 0..hyper.epochs {
                    net = net.train_step(&pairs[..s], hyper)?;
                }
                quantum_risk_empirical(
                    &target,
                    &Hypothesis::Network(&net),
                    inputs_per_trial,
                    &mut stream,
                )
            })
            .collect();
        let risks = risks?;
        let mean = risks.iter().sum::<f64>() / trials as f64;
        let variance = if trials > 1 {
            risks.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (trials - 1) as f64
        } else {
            0.0
        };
        reports.push(RiskReport {
            supervised_count: s,
            bound_classical: classical_nfl_bound(dim, dim, s)?,
            bound_invertible: classical_invertible_bound(dim, s)?,
            bound_quantum: qnfl_bound(dim, s),
            empirical_risk_mean: mean,
            empirical_risk_stddev: variance.sqrt(),
            trials,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z};

    #[test]
    fn classical_bound_values() {
        assert!((classical_nfl_bound(4, 4, 2).unwrap() - 0.375).abs() < 1e-15);
        assert!(classical_nfl_bound(4, 4, 4).unwrap().abs() < 1e-15);
        assert!(classical_nfl_bound(4, 1, 2).unwrap().abs() < 1e-15);
        assert!(classical_nfl_bound(0, 4, 0).is_err());
        assert!(classical_nfl_bound(4, 4, 5).is_err());
    }

    #[test]
    fn invertible_bound_values() {
        assert!((classical_invertible_bound(4, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(classical_invertible_bound(4, 3).unwrap().abs() < 1e-15);
        assert!((classical_invertible_bound(2, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantum_bound_values() {
        assert!((qnfl_bound(2, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((qnfl_bound(4, 1) - 0.7).abs() < 1e-15);
        assert!((qnfl_bound(4, 2) - 0.55).abs() < 1e-15);
        assert!((qnfl_bound(4, 3) - 0.3).abs() < 1e-15);
        assert!((qnfl_bound(4, 4) - (-0.05)).abs() < 1e-15);
    }

    #[test]
    fn bounds_are_non_increasing_in_supervised_count() {
        for s in 0..4 {
            assert!(classical_nfl_bound(4, 4, s).unwrap() >= classical_nfl_bound(4, 4, s + 1).unwrap());
            assert!(classical_invertible_bound(4, s).unwrap() >= classical_invertible_bound(4, s + 1).unwrap());
            assert!(qnfl_bound(4, s) >= qnfl_bound(4, s + 1));
        }
    }

    #[test]
    fn exact_risk_examples() {
        let mut rng = RngStream::new(1);
        let y = haar_unitary(4, &mut rng);
        assert!(quantum_risk_exact(&y, &y).unwrap().abs() < 1e-12);
        let phase = y.scaled(C64::from_polar(1.0, 0.7));
        assert!(quantum_risk_exact(&y, &phase).unwrap().abs() < 1e-12);
        let id = ComplexMatrix::identity(2);
        let risk = quantum_risk_exact(&id, &pauli_x()).unwrap();
        assert!((risk - 2.0 / 3.0).abs() < 1e-12);
        assert!(quantum_risk_exact(&id, &y).is_err());
    }

    #[test]
    fn empirical_risk_matches_exact_for_unitary_hypothesis() {
        let mut rng = RngStream::new(2);
        let y = haar_unitary(2, &mut rng);
        let zero = quantum_risk_empirical(&y, &Hypothesis::Unitary(&y), 5, &mut rng).unwrap();
        assert!(zero.abs() < 1e-10);

        let u = haar_unitary(2, &mut rng);
        let exact = quantum_risk_exact(&y, &u).unwrap();
        let n = 10_000;
        let estimate = quantum_risk_empirical(&y, &Hypothesis::Unitary(&u), n, &mut rng).unwrap();
        // Per-sample values live in [0,1]; 3 sigma with a conservative
        // variance bound of 1/4.
        let sigma = 0.5 / (n as f64).sqrt();
        assert!((estimate - exact).abs() < 3.0 * sigma, "{estimate} vs {exact}");
    }

    #[test]
    fn empirical_risk_accepts_network_hypotheses() {
        let mut rng = RngStream::new(3);
        let y = haar_unitary(2, &mut rng);
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let risk = quantum_risk_empirical(&y, &Hypothesis::Network(&net), 20, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&risk));
    }

    #[test]
    fn second_moment_estimate_converges() {
        let mut rng = RngStream::new(4);
        assert!(monte_carlo_s2(2, 100_000, &mut rng) < 0.02);
        assert!(monte_carlo_s2(3, 30_000, &mut rng) < 0.03);
        let rough = monte_carlo_s2(2, 10, &mut rng);
        assert!(rough.is_finite());
        // The estimator is Hermitian up to statistical error.
        let estimate = monte_carlo_s2_estimate(2, 20_000, &mut rng);
        assert!(estimate.hermiticity_residue() < 0.03);
    }

    #[test]
    fn fourth_moment_estimate_converges() {
        let mut rng = RngStream::new(5);
        assert!(monte_carlo_s4(2, 100_000, &mut rng) < 0.03);
        let (plus, minus) = fourth_moment_coefficients(2);
        assert!((plus - 1.0 / 3.0).abs() < 1e-15);
        assert!((minus - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fourth_moment_invariance_under_fixed_conjugation() {
        // S4 = (V^dag (x) V^dag (x) 1 (x) 1) S4 (1 (x) 1 (x) V (x) V).
        let mut rng = RngStream::new(6);
        let estimate = monte_carlo_s4_estimate(2, 40_000, &mut rng);
        let v = haar_unitary(2, &mut rng);
        let id4 = ComplexMatrix::identity(4);
        let left = v.dagger().kron(&v.dagger()).kron(&id4);
        let right = id4.kron(&v.kron(&v));
        let transformed = left.mul(&estimate).mul(&right);
        let closed = fourth_moment_closed_form(2);
        assert!(transformed.max_abs_diff(&closed) < 0.05);
    }

    #[test]
    fn state_moment_values() {
        let mut rng = RngStream::new(7);
        assert!((state_moment_closed_form(&ComplexMatrix::identity(2)) - 1.0).abs() < 1e-15);
        assert!((state_moment_closed_form(&pauli_z()) - 1.0 / 3.0).abs() < 1e-15);
        let (estimate, _) = monte_carlo_state_moment(&ComplexMatrix::identity(2), 100, &mut rng);
        assert!((estimate - 1.0).abs() < 1e-12);
        let (estimate, sigma) = monte_carlo_state_moment(&pauli_z(), 50_000, &mut rng);
        assert!((estimate - 1.0 / 3.0).abs() < 3.0 * sigma.max(1e-6));
        for _ in 0..5 {
            let x = haar_unitary(3, &mut rng);
            let (estimate, sigma) = monte_carlo_state_moment(&x, 20_000, &mut rng);
            let closed = state_moment_closed_form(&x);
            assert!((estimate - closed).abs() < 3.0 * sigma.max(1e-6));
        }
    }

    #[test]
    fn experiment_validates_arguments() {
        let rng = RngStream::new(8);
        let topo = NetworkTopology::new(vec![1, 1]).unwrap();
        let hyper = Hyperparams::standard(1);
        assert!(nfl_experiment(&topo, 4, &[1], 2, &hyper, 2, 4, &rng).is_err());
        let topo = NetworkTopology::new(vec![2, 2]).unwrap();
        assert!(nfl_experiment(&topo, 4, &[5], 2, &hyper, 2, 4, &rng).is_err());
        assert!(nfl_experiment(&topo, 4, &[1], 0, &hyper, 2, 4, &rng).is_err());
        let reports = nfl_experiment(&topo, 4, &[1, 4], 2, &hyper, 2, 4, &rng).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].trials, 2);
        assert!((reports[1].bound_quantum - (-0.05)).abs() < 1e-12);
    }
}
