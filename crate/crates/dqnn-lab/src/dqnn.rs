//! Layered dissipative network: feed-forward and adjoint channels, fidelity
//! losses, closed-form update matrices and the training loop.
//!
//! A network with widths `m_0, ..., m_{L+1}` carries, for every transition
//! `l = 1..=L+1`, one perceptron unitary per qubit of layer `l`; each acts on
//! the `m_{l-1}` qubits of the previous layer plus its own output qubit and
//! they are applied in index order (they do not generally commute). The
//! layer channel tensors in the fresh layer, applies the perceptrons and
//! traces out the previous layer.

use crate::error::{Error, Result};
use crate::experiment::LossHistory;
use crate::linalg::{C64, ComplexMatrix, PureState};
use crate::random::{haar_state, haar_unitary, RngStream};
use crate::state::{fidelity_pure_mixed, DensityMatrix};
use rayon::prelude::*;

/// Layer widths `m_0, ..., m_{L+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTopology {
    widths: Vec<usize>,
}

/// Default cap on the two-layer dimension `2^(m_{l-1} + m_l)`.
pub const DEFAULT_CAP_EXPONENT: usize = 12;

impl NetworkTopology {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        Self::with_cap(widths, DEFAULT_CAP_EXPONENT)
    }

    pub fn with_cap(widths: Vec<usize>, cap_exponent: usize) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidTopology(format!(
                "need at least two layers, got {}",
                widths.len()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidTopology("zero-width layer".into()));
        }
        for pair in widths.windows(2) {
            let requested = pair[0] + pair[1];
            if requested > cap_exponent {
                return Err(Error::DimensionCapExceeded {
                    requested,
                    cap: cap_exponent,
                });
            }
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of perceptron layers `L + 1`.
    pub fn num_transitions(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }
}

/// Step size, learning rate and epoch count of the update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub step_size: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Hyperparams {
    pub fn new(step_size: f64, learning_rate: f64, epochs: usize) -> Result<Self> {
        if step_size <= 0.0 || learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "step size and learning rate must be positive".into(),
            ));
        }
        Ok(Self {
            step_size,
            learning_rate,
            epochs,
        })
    }

    /// The defaults used by most experiments: step size 0.01, learning rate 1.
    pub fn standard(epochs: usize) -> Self {
        Self {
            step_size: 0.01,
            learning_rate: 1.0,
            epochs,
        }
    }
}

/// Supervised pair of pure states.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub input: PureState,
    pub target: PureState,
}

/// Per-pair feed-forward and back-propagated states, indexed `[pair][layer]`.
pub struct PropagationCache {
    pub forward: Vec<Vec<DensityMatrix>>,
    pub backward: Vec<Vec<ComplexMatrix>>,
}

/// One summand of an update-matrix accumulation: a Hermitian forward operator
/// on the transition's input layer, a Hermitian backward operator on its
/// output layer, and a real weight.
pub(crate) struct UpdateTerm<'a> {
    pub forward: &'a ComplexMatrix,
    pub backward: &'a ComplexMatrix,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Dqnn {
    topology: NetworkTopology,
    /// `unitaries[t][p]` is the unitary of perceptron `p` of transition `t`
    /// (0-based), of dimension `2^(m_t + 1)`.
    unitaries: Vec<Vec<ComplexMatrix>>,
}

/// Cached per-transition operators on the combined `m_{l-1} + m_l` register.
pub(crate) struct TransitionOps {
    pub in_width: usize,
    pub out_width: usize,
    /// Perceptron unitaries embedded into the two-layer register.
    pub embedded: Vec<ComplexMatrix>,
    /// Product of all embedded perceptrons, last applied on the left.
    pub layer_unitary: ComplexMatrix,
}

impl Dqnn {
    /// Network with Haar-random perceptron unitaries.
    pub fn init_random(topology: NetworkTopology, rng: &mut RngStream) -> Self {
        let mut unitaries = Vec::with_capacity(topology.num_transitions());
        for t in 0..topology.num_transitions() {
            let dim = 1usize << (topology.widths[t] + 1);
            let layer = (0..topology.widths[t + 1])
                .map(|_| haar_unitary(dim, rng))
                .collect();
            unitaries.push(layer);
        }
        Self {
            topology,
            unitaries,
        }
    }

    /// Wraps explicit perceptron unitaries, checking shapes and unitarity.
    pub fn from_unitaries(
        topology: NetworkTopology,
        unitaries: Vec<Vec<ComplexMatrix>>,
    ) -> Result<Self> {
        if unitaries.len() != topology.num_transitions() {
            return Err(Error::InvalidTopology("transition count mismatch".into()));
        }
        for (t, layer) in unitaries.iter().enumerate() {
            if layer.len() != topology.widths[t + 1] {
                return Err(Error::InvalidTopology(format!(
                    "transition {} needs {} perceptrons",
                    t + 1,
                    topology.widths[t + 1]
                )));
            }
            let dim = 1usize << (topology.widths[t] + 1);
            for u in layer {
                if u.rows() != dim || !u.is_unitary(1e-10) {
                    return Err(Error::InvalidTopology(format!(
                        "perceptron of transition {} is not a {dim}x{dim} unitary",
                        t + 1
                    )));
                }
            }
        }
        Ok(Self {
            topology,
            unitaries,
        })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn num_transitions(&self) -> usize {
        self.topology.num_transitions()
    }

    pub fn unitaries(&self) -> &[Vec<ComplexMatrix>] {
        &self.unitaries
    }

    pub(crate) fn unitaries_mut(&mut self) -> &mut Vec<Vec<ComplexMatrix>> {
        &mut self.unitaries
    }

    /// Unitary of perceptron `j` of transition `l` (both 1-based).
    pub fn unitary(&self, layer: usize, perceptron: usize) -> &ComplexMatrix {
        &self.unitaries[layer - 1][perceptron - 1]
    }

    fn check_transition(&self, layer: usize) -> Result<usize> {
        if layer == 0 || layer > self.num_transitions() {
            return Err(Error::InvalidTopology(format!(
                "transition {layer} out of range 1..={}",
                self.num_transitions()
            )));
        }
        Ok(layer - 1)
    }

    pub(crate) fn transition_ops(&self, t: usize) -> TransitionOps {
        let in_width = self.topology.widths[t];
        let out_width = self.topology.widths[t + 1];
        let total = in_width + out_width;
        let mut embedded = Vec::with_capacity(out_width);
        for p in 0..out_width {
            let mut targets: Vec<usize> = (0..in_width).collect();
            targets.push(in_width + p);
            embedded.push(
                ComplexMatrix::embed_operator(&self.unitaries[t][p], &targets, total)
                    .expect("valid embedding by construction"),
            );
        }
        let mut layer_unitary = embedded[0].clone();
        for u in &embedded[1..] {
            layer_unitary = u.mul(&layer_unitary);
        }
        TransitionOps {
            in_width,
            out_width,
            embedded,
            layer_unitary,
        }
    }

    /// Layer channel: tensor in layer `l` in the zero state, apply the
    /// perceptrons, trace out layer `l - 1`. `layer` is 1-based.
    pub fn layer_forward(&self, layer: usize, x: &DensityMatrix) -> Result<DensityMatrix> {
        let t = self.check_transition(layer)?;
        if x.num_qubits() != self.topology.widths[t] {
            return Err(Error::DimensionMismatch {
                context: "layer_forward input width",
                left: x.num_qubits(),
                right: self.topology.widths[t],
            });
        }
        let ops = self.transition_ops(t);
        Ok(forward_through(&ops, x.matrix()))
    }

    /// Adjoint (Heisenberg-picture) channel of [`Dqnn::layer_forward`]:
    /// `tr_l((1 (x) |0..0><0..0|) U^dag (1 (x) X) U)`. Not trace-preserving.
    pub fn layer_adjoint(&self, layer: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let t = self.check_transition(layer)?;
        let out_width = self.topology.widths[t + 1];
        if x.rows() != 1 << out_width || !x.is_square() {
            return Err(Error::DimensionMismatch {
                context: "layer_adjoint operator width",
                left: x.rows(),
                right: 1 << out_width,
            });
        }
        let ops = self.transition_ops(t);
        Ok(adjoint_through(&ops, x))
    }

    /// Feeds an input state through the whole network, returning the states
    /// of every layer `rho^0, ..., rho^{L+1}`.
    pub fn feed_forward(&self, input: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
        if input.num_qubits() != self.topology.input_width() {
            return Err(Error::DimensionMismatch {
                context: "feed_forward input width",
                left: input.num_qubits(),
                right: self.topology.input_width(),
            });
        }
        let mut states = Vec::with_capacity(self.num_transitions() + 1);
        states.push(input.clone());
        for t in 0..self.num_transitions() {
            let ops = self.transition_ops(t);
            let next = forward_through(&ops, states[t].matrix());
            states.push(next);
        }
        Ok(states)
    }

    /// Network output for a pure input.
    pub fn network_output(&self, input: &PureState) -> Result<DensityMatrix> {
        let states = self.feed_forward(&DensityMatrix::from_pure(input))?;
        Ok(states.into_iter().next_back().unwrap())
    }

    /// Back-propagates a Hermitian operator on the output layer through the
    /// adjoint channels, returning `sigma^0, ..., sigma^{L+1}` (indexed by
    /// layer, so the seed sits at the last position).
    pub fn back_propagate_operator(&self, x: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        if x.rows() != 1 << self.topology.output_width() || !x.is_square() {
            return Err(Error::DimensionMismatch {
                context: "back_propagate operator width",
                left: x.rows(),
                right: 1 << self.topology.output_width(),
            });
        }
        let transitions = self.num_transitions();
        let mut states = vec![ComplexMatrix::zeros(1, 1); transitions + 1];
        states[transitions] = x.clone();
        for t in (0..transitions).rev() {
            let ops = self.transition_ops(t);
            states[t] = adjoint_through(&ops, &states[t + 1]);
        }
        Ok(states)
    }

    /// Back-propagates the projector of a target state.
    pub fn back_propagate(&self, target: &PureState) -> Result<Vec<ComplexMatrix>> {
        self.back_propagate_operator(&target.projector())
    }

    /// Feed-forward and back-propagation for every pair.
    pub fn propagate(&self, pairs: &[TrainingPair]) -> Result<PropagationCache> {
        if pairs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let forward: Result<Vec<_>> = pairs
            .par_iter()
            .map(|p| self.feed_forward(&DensityMatrix::from_pure(&p.input)))
            .collect();
        let backward: Result<Vec<_>> = pairs
            .par_iter()
            .map(|p| self.back_propagate(&p.target))
            .collect();
        Ok(PropagationCache {
            forward: forward?,
            backward: backward?,
        })
    }

    /// Per-perceptron sums `sum_terms w * tr_rest([advanced forward,
    /// retracted backward])` for one transition (0-based `t`), without the
    /// scalar prefactor. The reduction is performed in term order.
    pub(crate) fn transition_update_sums(
        &self,
        t: usize,
        terms: &[UpdateTerm],
    ) -> Vec<ComplexMatrix> {
        let ops = self.transition_ops(t);
        let kept_dim = 1usize << (ops.in_width + 1);
        let zero_sums = || vec![ComplexMatrix::zeros(kept_dim, kept_dim); ops.out_width];
        let per_term: Vec<Vec<ComplexMatrix>> = terms
            .par_iter()
            .map(|term| {
                let mut sums = zero_sums();
                accumulate_term(&ops, term, &mut sums);
                sums
            })
            .collect();
        let mut sums = zero_sums();
        for term_sums in per_term {
            for (acc, m) in sums.iter_mut().zip(term_sums) {
                *acc = acc.add(&m);
            }
        }
        sums
    }

    /// Update matrices for every perceptron of every transition, computed
    /// from cached propagation states:
    /// `K_j^l = (eta 2^{m_{l-1}} i / S) sum_x tr_rest(M_j^l(x))`.
    pub fn update_matrices(
        &self,
        cache: &PropagationCache,
        learning_rate: f64,
    ) -> Result<Vec<Vec<ComplexMatrix>>> {
        let pair_count = cache.forward.len();
        if pair_count == 0 || cache.backward.len() != pair_count {
            return Err(Error::EmptyTrainingSet);
        }
        let layers = self.num_transitions() + 1;
        if cache
            .forward
            .iter()
            .map(Vec::len)
            .chain(cache.backward.iter().map(Vec::len))
            .any(|len| len != layers)
        {
            return Err(Error::InvalidState("propagation cache shape".into()));
        }
        let mut all = Vec::with_capacity(self.num_transitions());
        for t in 0..self.num_transitions() {
            let terms: Vec<UpdateTerm> = (0..pair_count)
                .map(|x| UpdateTerm {
                    forward: cache.forward[x][t].matrix(),
                    backward: &cache.backward[x][t + 1],
                    weight: 1.0,
                })
                .collect();
            let sums = self.transition_update_sums(t, &terms);
            let factor =
                learning_rate * (1u64 << self.topology.widths[t]) as f64 / pair_count as f64;
            let scale = C64::new(0.0, factor);
            all.push(
                sums.into_iter()
                    .map(|m| m.scaled(scale).hermitian_part())
                    .collect(),
            );
        }
        Ok(all)
    }

    /// Update matrix of perceptron `j` of transition `l` (both 1-based).
    pub fn update_matrix(
        &self,
        layer: usize,
        perceptron: usize,
        cache: &PropagationCache,
        learning_rate: f64,
    ) -> Result<ComplexMatrix> {
        let t = self.check_transition(layer)?;
        let all = self.update_matrices(cache, learning_rate)?;
        all[t]
            .get(perceptron - 1)
            .cloned()
            .ok_or_else(|| Error::InvalidTopology(format!("perceptron {perceptron} out of range")))
    }

    /// One synchronous update: every `K_j^l` is computed against the current
    /// network, then every unitary is replaced by `exp(i step K) U`.
    pub fn train_step(&self, pairs: &[TrainingPair], hyper: &Hyperparams) -> Result<Dqnn> {
        let cache = self.propagate(pairs)?;
        let updates = self.update_matrices(&cache, hyper.learning_rate)?;
        self.apply_updates(&updates, hyper.step_size)
    }

    pub(crate) fn apply_updates(
        &self,
        updates: &[Vec<ComplexMatrix>],
        step_size: f64,
    ) -> Result<Dqnn> {
        let mut unitaries = Vec::with_capacity(self.unitaries.len());
        for (layer, layer_updates) in self.unitaries.iter().zip(updates.iter()) {
            let mut new_layer = Vec::with_capacity(layer.len());
            for (u, k) in layer.iter().zip(layer_updates.iter()) {
                new_layer.push(k.hermitian_exp(step_size)?.mul(u));
            }
            unitaries.push(new_layer);
        }
        Ok(Dqnn {
            topology: self.topology.clone(),
            unitaries,
        })
    }

    /// Analytic derivative of the training loss along the update direction:
    /// `(i/S) sum_x sum_l tr(sigma_x^l D^l(rho_x^{l-1}))`, with `D^l` the
    /// derivative of the layer channel generated by the update matrices.
    pub fn loss_derivative(&self, pairs: &[TrainingPair], learning_rate: f64) -> Result<f64> {
        let cache = self.propagate(pairs)?;
        let updates = self.update_matrices(&cache, learning_rate)?;
        let weight = 1.0 / pairs.len() as f64;
        let contributions: Vec<DerivativeContribution> = (0..pairs.len())
            .map(|x| DerivativeContribution {
                forward: cache.forward[x].iter().map(|d| d.matrix().clone()).collect(),
                backward: cache.backward[x].clone(),
                weight,
            })
            .collect();
        Ok(self.derivative_along(&updates, &contributions))
    }

    /// `sum_c w_c sum_l Re(i tr(backward_c^l D^l(forward_c^{l-1})))` for the
    /// channel derivative generated by `updates`. Shared by the supervised,
    /// graph and adversarial loss derivatives.
    pub(crate) fn derivative_along(
        &self,
        updates: &[Vec<ComplexMatrix>],
        contributions: &[DerivativeContribution],
    ) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_transitions() {
            let ops = self.transition_ops(t);
            let total_qubits = ops.in_width + ops.out_width;
            let embedded_updates: Vec<ComplexMatrix> = updates[t]
                .iter()
                .enumerate()
                .map(|(p, k)| {
                    let mut targets: Vec<usize> = (0..ops.in_width).collect();
                    targets.push(ops.in_width + p);
                    ComplexMatrix::embed_operator(k, &targets, total_qubits)
                        .expect("valid embedding")
                })
                .collect();
            for c in contributions {
                let derivative = channel_derivative(&ops, &c.forward[t], &embedded_updates);
                let value = c.backward[t + 1].mul(&derivative).trace();
                total += c.weight * (C64::new(0.0, 1.0) * value).re;
            }
        }
        total
    }
}

/// One weighted term of a directional loss derivative: Hermitian forward and
/// backward chains indexed by layer.
pub(crate) struct DerivativeContribution {
    pub forward: Vec<ComplexMatrix>,
    pub backward: Vec<ComplexMatrix>,
    pub weight: f64,
}

/// `X (x) |0..0><0..0|` on `extra` fresh trailing qubits.
pub(crate) fn tensor_with_zero_block(x: &ComplexMatrix, extra: usize) -> ComplexMatrix {
    let block = 1usize << extra;
    let dim = x.rows() * block;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            out.set(i * block, j * block, x.at(i, j));
        }
    }
    out
}

/// Traces out the leading qubits of a two-layer operator.
fn trace_leading(y: &ComplexMatrix, lead_dim: usize, kept_dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for z in 0..lead_dim {
        let base = z * kept_dim;
        for c in 0..kept_dim {
            for d in 0..kept_dim {
                let cur = out.at(c, d);
                out.set(c, d, cur + y.at(base + c, base + d));
            }
        }
    }
    out
}

/// Projects onto the trailing all-zeros block: `out[a][b] = y[a0][b0]`.
fn take_zero_block(y: &ComplexMatrix, kept_dim: usize, trailing_dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for a in 0..kept_dim {
        for b in 0..kept_dim {
            out.set(a, b, y.at(a * trailing_dim, b * trailing_dim));
        }
    }
    out
}

fn forward_through(ops: &TransitionOps, x: &ComplexMatrix) -> DensityMatrix {
    let staged = tensor_with_zero_block(x, ops.out_width);
    let evolved = ops
        .layer_unitary
        .mul(&staged)
        .mul(&ops.layer_unitary.dagger());
    let reduced = trace_leading(&evolved, 1 << ops.in_width, 1 << ops.out_width);
    DensityMatrix::from_matrix_unchecked(ops.out_width, reduced)
}

fn adjoint_through(ops: &TransitionOps, x: &ComplexMatrix) -> ComplexMatrix {
    let lifted = ComplexMatrix::identity(1 << ops.in_width).kron(x);
    let evolved = ops
        .layer_unitary
        .dagger()
        .mul(&lifted)
        .mul(&ops.layer_unitary);
    take_zero_block(&evolved, 1 << ops.in_width, 1 << ops.out_width)
}

/// Adds `weight * tr_rest([advanced, retracted])` to the per-perceptron sums.
fn accumulate_term(ops: &TransitionOps, term: &UpdateTerm, sums: &mut [ComplexMatrix]) {
    let total_qubits = ops.in_width + ops.out_width;
    // Retracted backward operators, perceptron m-1 down to 0.
    let lifted = ComplexMatrix::identity(1 << ops.in_width).kron(term.backward);
    let mut retracted = vec![lifted; ops.out_width];
    for p in (0..ops.out_width.saturating_sub(1)).rev() {
        let u = &ops.embedded[p + 1];
        retracted[p] = u.dagger().mul(&retracted[p + 1]).mul(u);
    }
    // Advanced forward state, perceptron by perceptron.
    let mut advanced = tensor_with_zero_block(term.forward, ops.out_width);
    let weight = C64::new(term.weight, 0.0);
    for p in 0..ops.out_width {
        let u = &ops.embedded[p];
        advanced = u.mul(&advanced).mul(&u.dagger());
        let commutator = advanced.commutator(&retracted[p]);
        let discard: Vec<usize> = (0..ops.out_width)
            .filter(|&k| k != p)
            .map(|k| ops.in_width + k)
            .collect();
        let reduced = commutator
            .partial_trace_qubits(total_qubits, &discard)
            .expect("indices valid by construction");
        sums[p] = sums[p].add(&reduced.scaled(weight));
    }
}

/// Derivative of the layer channel in the direction of the given embedded
/// update matrices: `sum_j tr_{l-1}(V_j [K_j, advanced_j] V_j^dag)`.
fn channel_derivative(
    ops: &TransitionOps,
    input: &ComplexMatrix,
    embedded_updates: &[ComplexMatrix],
) -> ComplexMatrix {
    let kept_dim = 1usize << ops.out_width;
    let lead_dim = 1usize << ops.in_width;
    let mut advanced = tensor_with_zero_block(input, ops.out_width);
    let mut total = ComplexMatrix::zeros(lead_dim * kept_dim, lead_dim * kept_dim);
    for p in 0..ops.out_width {
        let u = &ops.embedded[p];
        advanced = u.mul(&advanced).mul(&u.dagger());
        let mut bracket = embedded_updates[p].commutator(&advanced);
        for v in &ops.embedded[p + 1..] {
            bracket = v.mul(&bracket).mul(&v.dagger());
        }
        total = total.add(&bracket);
    }
    trace_leading(&total, lead_dim, kept_dim)
}

/// Mean fidelity of the network outputs with the pair targets.
pub fn training_loss(net: &Dqnn, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let values: Result<Vec<f64>> = pairs
        .par_iter()
        .map(|pair| {
            let out = net.network_output(&pair.input)?;
            fidelity_pure_mixed(&pair.target, &out)
        })
        .collect();
    Ok(values?.iter().sum::<f64>() / pairs.len() as f64)
}

/// Same formula evaluated on held-out pairs.
pub fn validation_loss(net: &Dqnn, pairs: &[TrainingPair]) -> Result<f64> {
    training_loss(net, pairs)
}

/// `N` pairs with Haar-random inputs and targets `Y |input>`.
pub fn make_unitary_dataset(
    y: &ComplexMatrix,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<TrainingPair>> {
    if !y.is_unitary(1e-10) {
        return Err(Error::InvalidConfig("dataset map must be unitary".into()));
    }
    let dim = y.rows();
    Ok((0..count)
        .map(|_| {
            let input = haar_state(dim, rng);
            let target = input.apply(y);
            TrainingPair { input, target }
        })
        .collect())
}

/// Replaces every target with the normalised mixture
/// `(1 - delta) |target> + delta |random>` for a fresh Haar-random state.
pub fn add_target_noise(
    pairs: &[TrainingPair],
    delta: f64,
    rng: &mut RngStream,
) -> Result<Vec<TrainingPair>> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidConfig(format!(
            "noise level {delta} outside [0, 1]"
        )));
    }
    let mut noisy = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let target = loop {
            let random = haar_state(pair.target.dim(), rng);
            let mixed =
                pair.target
                    .superpose(C64::new(1.0 - delta, 0.0), &random, C64::new(delta, 0.0));
            // The mixture is numerically zero only for an antipodal draw.
            if let Ok(state) = mixed {
                break state;
            }
        };
        noisy.push(TrainingPair {
            input: pair.input.clone(),
            target,
        });
    }
    Ok(noisy)
}

/// True when the pair inputs are pairwise orthogonal within `tol`; such
/// datasets leave local phases unconstrained and should be avoided.
pub fn inputs_pairwise_orthogonal(pairs: &[TrainingPair], tol: f64) -> bool {
    if pairs.len() < 2 {
        return false;
    }
    for (i, a) in pairs.iter().enumerate() {
        for b in &pairs[i + 1..] {
            if a.input.inner(&b.input).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Full training loop; records training and validation loss per epoch
/// (epoch 0 is the initial network, the final row follows the last update).
pub fn train(
    net: &Dqnn,
    train_pairs: &[TrainingPair],
    validation_pairs: &[TrainingPair],
    hyper: &Hyperparams,
) -> Result<(Dqnn, LossHistory)> {
    let mut history = LossHistory::new(&["training_loss", "validation_loss"]);
    let mut current = net.clone();
    for epoch in 0..=hyper.epochs {
        let train_value = training_loss(&current, train_pairs)?;
        let validation_value = if validation_pairs.is_empty() {
            f64::NAN
        } else {
            validation_loss(&current, validation_pairs)?
        };
        history.push(epoch, &[train_value, validation_value])?;
        if epoch < hyper.epochs {
            current = current.train_step(train_pairs, hyper)?;
        }
    }
    Ok((current, history))
}
