//! Adversarial training of two dissipative networks: a generator feeding a
//! one-qubit-verdict discriminator, competing fidelity losses, per-phase
//! update matrices and the alternating training loop with diversity
//! monitoring.

use crate::dqnn::{
    DerivativeContribution, Dqnn, NetworkTopology, TrainingPair, UpdateTerm,
};
use crate::error::{Error, Result};
use crate::experiment::LossHistory;
use crate::linalg::{C64, ComplexMatrix, PureState};
use crate::random::{haar_state, RngStream};
use crate::state::{fidelity_pure_mixed, DensityMatrix};

/// Whether a verdict comes from generated or training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanBranch {
    Generated,
    Training,
}

/// Which sub-network an update phase trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanPhase {
    Discriminator,
    Generator,
}

/// Pool of pure states in canonical order; the designated supervised subset
/// is accessible for training, the full pool defines the validation target
/// set.
#[derive(Debug, Clone)]
pub struct StatePool {
    states: Vec<PureState>,
    supervised: Vec<usize>,
}

impl StatePool {
    /// The first `supervised_count` states form the training subset.
    pub fn new(states: Vec<PureState>, supervised_count: usize) -> Result<Self> {
        let indices = (0..supervised_count).collect();
        Self::with_supervised_indices(states, indices)
    }

    /// Explicit supervised subset (distinct, in range, non-empty).
    pub fn with_supervised_indices(
        states: Vec<PureState>,
        mut supervised: Vec<usize>,
    ) -> Result<Self> {
        supervised.sort_unstable();
        supervised.dedup();
        if states.is_empty() || supervised.is_empty() || supervised.len() > states.len() {
            return Err(Error::InvalidConfig(
                "need between 1 and N supervised pool states".into(),
            ));
        }
        if supervised.iter().any(|&i| i >= states.len()) {
            return Err(Error::InvalidConfig("supervised index out of range".into()));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidConfig("pool states differ in dimension".into()));
        }
        Ok(Self { states, supervised })
    }

    /// Marks a uniformly random subset of `supervised_count` states as the
    /// training subset, keeping the pool order.
    pub fn random_supervised(
        self,
        supervised_count: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let mut indices: Vec<usize> = (0..self.states.len()).collect();
        rng.shuffle(&mut indices);
        indices.truncate(supervised_count);
        Self::with_supervised_indices(self.states, indices)
    }

    /// Marks `supervised_count` evenly spaced states as the training subset.
    pub fn evenly_supervised(self, supervised_count: usize) -> Result<Self> {
        if supervised_count == 0 {
            return Err(Error::InvalidConfig("need at least one supervised state".into()));
        }
        let n = self.states.len();
        let indices = (0..supervised_count)
            .map(|k| k * n / supervised_count)
            .collect();
        Self::with_supervised_indices(self.states, indices)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn supervised_count(&self) -> usize {
        self.supervised.len()
    }

    pub fn supervised_indices(&self) -> &[usize] {
        &self.supervised
    }

    pub fn is_supervised(&self, index: usize) -> bool {
        self.supervised.binary_search(&index).is_ok()
    }

    pub fn supervised_state(&self, pick: usize) -> &PureState {
        &self.states[self.supervised[pick]]
    }
}

/// Alternating-training parameters.
#[derive(Debug, Clone, Copy)]
pub struct GanHyper {
    pub epochs: usize,
    pub disc_rounds: usize,
    pub gen_rounds: usize,
    pub step_size: f64,
    pub disc_learning_rate: f64,
    pub gen_learning_rate: f64,
    pub batch_size: usize,
    pub validation_samples: usize,
}

impl GanHyper {
    pub fn standard(epochs: usize, batch_size: usize) -> Self {
        Self {
            epochs,
            disc_rounds: 1,
            gen_rounds: 1,
            step_size: 0.01,
            disc_learning_rate: 1.0,
            gen_learning_rate: 1.0,
            batch_size,
            validation_samples: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.disc_rounds == 0
            || self.gen_rounds == 0
            || self.batch_size == 0
            || self.validation_samples == 0
            || self.step_size <= 0.0
            || self.disc_learning_rate <= 0.0
            || self.gen_learning_rate <= 0.0
        {
            return Err(Error::InvalidConfig(
                "adversarial hyperparameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Optional early stop: abort once fewer than `min_distinct` pool indices are
/// covered by `samples` generated states, checked every `check_interval`
/// epochs.
#[derive(Debug, Clone, Copy)]
pub struct DiversityStop {
    pub check_interval: usize,
    pub samples: usize,
    pub min_distinct: usize,
}

/// Generator and discriminator stored as one composite network; the
/// generator's output layer is the discriminator's input layer.
#[derive(Debug, Clone)]
pub struct Dqgan {
    composite: Dqnn,
    generator_transitions: usize,
}

impl Dqgan {
    pub fn new(generator: Dqnn, discriminator: Dqnn) -> Result<Self> {
        if generator.topology().output_width() != discriminator.topology().input_width() {
            return Err(Error::DimensionMismatch {
                context: "generator output vs discriminator input",
                left: generator.topology().output_width(),
                right: discriminator.topology().input_width(),
            });
        }
        if discriminator.topology().output_width() != 1 {
            return Err(Error::InvalidTopology(
                "discriminator must emit a one-qubit verdict".into(),
            ));
        }
        let mut widths = generator.topology().widths().to_vec();
        widths.extend_from_slice(&discriminator.topology().widths()[1..]);
        let generator_transitions = generator.num_transitions();
        let mut unitaries = generator.unitaries().to_vec();
        unitaries.extend_from_slice(discriminator.unitaries());
        let composite = Dqnn::from_unitaries(NetworkTopology::new(widths)?, unitaries)?;
        Ok(Self {
            composite,
            generator_transitions,
        })
    }

    /// Haar-random generator and discriminator over the given layer widths;
    /// the generator's last width must equal the discriminator's first and
    /// the discriminator must end in a single qubit.
    pub fn init_random(
        generator_widths: Vec<usize>,
        discriminator_widths: Vec<usize>,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let generator = Dqnn::init_random(NetworkTopology::new(generator_widths)?, rng);
        let discriminator = Dqnn::init_random(NetworkTopology::new(discriminator_widths)?, rng);
        Self::new(generator, discriminator)
    }

    /// Number of generator perceptron layers.
    pub fn generator_transitions(&self) -> usize {
        self.generator_transitions
    }

    pub fn composite(&self) -> &Dqnn {
        &self.composite
    }

    pub fn generator(&self) -> Dqnn {
        let widths = self.composite.topology().widths()[..=self.generator_transitions].to_vec();
        let unitaries = self.composite.unitaries()[..self.generator_transitions].to_vec();
        Dqnn::from_unitaries(NetworkTopology::new(widths).unwrap(), unitaries)
            .expect("generator slice is well-formed")
    }

    pub fn discriminator(&self) -> Dqnn {
        let widths = self.composite.topology().widths()[self.generator_transitions..].to_vec();
        let unitaries = self.composite.unitaries()[self.generator_transitions..].to_vec();
        Dqnn::from_unitaries(NetworkTopology::new(widths).unwrap(), unitaries)
            .expect("discriminator slice is well-formed")
    }

    pub fn generator_input_dim(&self) -> usize {
        1 << self.composite.topology().input_width()
    }

    pub fn training_input_dim(&self) -> usize {
        1 << self.composite.topology().widths()[self.generator_transitions]
    }

    /// Generator output for a random-seed input.
    pub fn generate(&self, input: &PureState) -> Result<DensityMatrix> {
        let chain = self
            .composite
            .feed_forward(&DensityMatrix::from_pure(input))?;
        Ok(chain[self.generator_transitions].clone())
    }

    /// One-qubit verdict state of the chosen branch.
    pub fn forward(&self, source: &PureState, branch: GanBranch) -> Result<DensityMatrix> {
        match branch {
            GanBranch::Generated => {
                let chain = self
                    .composite
                    .feed_forward(&DensityMatrix::from_pure(source))?;
                Ok(chain.into_iter().next_back().unwrap())
            }
            GanBranch::Training => self.discriminator().network_output(source),
        }
    }

    /// Per-transition update matrices for the active phase; the frozen
    /// sub-network receives zero matrices.
    pub fn update_matrices(
        &self,
        phase: GanPhase,
        inputs: &[PureState],
        training_batch: &[PureState],
        learning_rate: f64,
    ) -> Result<Vec<Vec<ComplexMatrix>>> {
        let cache = self.build_cache(inputs, training_batch)?;
        Ok(self.updates_from_cache(phase, &cache, learning_rate))
    }

    fn build_cache(&self, inputs: &[PureState], training_batch: &[PureState]) -> Result<GanCache> {
        if inputs.is_empty() || inputs.len() != training_batch.len() {
            return Err(Error::InvalidConfig(
                "need equally many random inputs and training states".into(),
            ));
        }
        let discriminator = self.discriminator();
        let generated_forward: Result<Vec<_>> = inputs
            .iter()
            .map(|s| self.composite.feed_forward(&DensityMatrix::from_pure(s)))
            .collect();
        let training_forward: Result<Vec<_>> = training_batch
            .iter()
            .map(|s| discriminator.feed_forward(&DensityMatrix::from_pure(s)))
            .collect();
        let one = PureState::basis(2, 1);
        let backward = self.composite.back_propagate(&one)?;
        Ok(GanCache {
            generated_forward: generated_forward?,
            training_forward: training_forward?,
            backward,
        })
    }

    fn updates_from_cache(
        &self,
        phase: GanPhase,
        cache: &GanCache,
        learning_rate: f64,
    ) -> Vec<Vec<ComplexMatrix>> {
        let widths = self.composite.topology().widths().to_vec();
        let g = self.generator_transitions;
        let count = cache.generated_forward.len() as f64;
        let mut all = Vec::with_capacity(self.composite.num_transitions());
        for t in 0..self.composite.num_transitions() {
            let active = match phase {
                GanPhase::Generator => t < g,
                GanPhase::Discriminator => t >= g,
            };
            if !active {
                let dim = 1usize << (widths[t] + 1);
                all.push(vec![ComplexMatrix::zeros(dim, dim); widths[t + 1]]);
                continue;
            }
            let forwards: Vec<ComplexMatrix> = match phase {
                GanPhase::Generator => cache
                    .generated_forward
                    .iter()
                    .map(|chain| chain[t].matrix().clone())
                    .collect(),
                GanPhase::Discriminator => cache
                    .generated_forward
                    .iter()
                    .zip(cache.training_forward.iter())
                    .map(|(gen, train)| train[t - g].matrix().sub(gen[t].matrix()))
                    .collect(),
            };
            let terms: Vec<UpdateTerm> = forwards
                .iter()
                .map(|f| UpdateTerm {
                    forward: f,
                    backward: &cache.backward[t + 1],
                    weight: 1.0,
                })
                .collect();
            let sums = self.composite.transition_update_sums(t, &terms);
            let factor = learning_rate * (1u64 << widths[t]) as f64 / count;
            all.push(
                sums.into_iter()
                    .map(|m| m.scaled(C64::new(0.0, factor)).hermitian_part())
                    .collect(),
            );
        }
        all
    }

    fn apply(&self, updates: &[Vec<ComplexMatrix>], step_size: f64) -> Result<Dqgan> {
        Ok(Dqgan {
            composite: self.composite.apply_updates(updates, step_size)?,
            generator_transitions: self.generator_transitions,
        })
    }
}

struct GanCache {
    /// Random-seed inputs fed through generator and discriminator.
    generated_forward: Vec<Vec<DensityMatrix>>,
    /// Training states fed through the discriminator alone.
    training_forward: Vec<Vec<DensityMatrix>>,
    /// `|1><1|` pulled back through the composite network.
    backward: Vec<ComplexMatrix>,
}

/// `L_D = (1/S) sum <0| D(G(psi)) |0> + (1/S) sum <1| D(phi) |1>`.
pub fn discriminator_loss(
    gan: &Dqgan,
    inputs: &[PureState],
    training_batch: &[PureState],
) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != training_batch.len() {
        return Err(Error::InvalidConfig(
            "need equally many random inputs and training states".into(),
        ));
    }
    let zero = PureState::basis(2, 0);
    let one = PureState::basis(2, 1);
    let mut total = 0.0;
    for (input, training) in inputs.iter().zip(training_batch.iter()) {
        let generated_verdict = gan.forward(input, GanBranch::Generated)?;
        let training_verdict = gan.forward(training, GanBranch::Training)?;
        total += fidelity_pure_mixed(&zero, &generated_verdict)?
            + fidelity_pure_mixed(&one, &training_verdict)?;
    }
    Ok(total / inputs.len() as f64)
}

/// `L_G = (1/S) sum <1| D(G(psi)) |1>`.
pub fn generator_loss(gan: &Dqgan, inputs: &[PureState]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let one = PureState::basis(2, 1);
    let mut total = 0.0;
    for input in inputs {
        let verdict = gan.forward(input, GanBranch::Generated)?;
        total += fidelity_pure_mixed(&one, &verdict)?;
    }
    Ok(total / inputs.len() as f64)
}

/// Analytic derivative of the phase loss (`L_D` or `L_G`) along the phase
/// update direction; finite-difference oracle hook for tests.
pub fn phase_loss_derivative(
    gan: &Dqgan,
    phase: GanPhase,
    inputs: &[PureState],
    training_batch: &[PureState],
    learning_rate: f64,
) -> Result<f64> {
    let cache = gan.build_cache(inputs, training_batch)?;
    let updates = gan.updates_from_cache(phase, &cache, learning_rate);
    let g = gan.generator_transitions;
    let layers = gan.composite.num_transitions() + 1;
    let widths = gan.composite.topology().widths().to_vec();
    let weight = 1.0 / inputs.len() as f64;
    let mut contributions = Vec::new();
    for x in 0..inputs.len() {
        let forward: Vec<ComplexMatrix> = match phase {
            GanPhase::Generator => cache.generated_forward[x]
                .iter()
                .map(|d| d.matrix().clone())
                .collect(),
            GanPhase::Discriminator => (0..layers)
                .map(|t| {
                    if t >= g {
                        cache.training_forward[x][t - g]
                            .matrix()
                            .sub(cache.generated_forward[x][t].matrix())
                    } else {
                        // Frozen layers contribute nothing.
                        ComplexMatrix::zeros(1 << widths[t], 1 << widths[t])
                    }
                })
                .collect(),
        };
        contributions.push(DerivativeContribution {
            forward,
            backward: cache.backward.clone(),
            weight,
        });
    }
    Ok(gan.composite.derivative_along(&updates, &contributions))
}

/// Mean best-match fidelity of `count` generated states against the full
/// pool: `(1/V) sum_i max_x <phi_x| G(psi_i) |phi_x>`.
pub fn validation_loss_gan(
    gan: &Dqgan,
    pool: &StatePool,
    count: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidConfig("need at least one validation sample".into()));
    }
    let dim = gan.generator_input_dim();
    let mut total = 0.0;
    for _ in 0..count {
        let generated = gan.generate(&haar_state(dim, rng))?;
        let mut best = f64::MIN;
        for state in pool.states() {
            best = best.max(fidelity_pure_mixed(state, &generated)?);
        }
        total += best;
    }
    Ok(total / count as f64)
}

/// Per-pool-index counts of nearest-by-fidelity matches for `samples`
/// generated states, split into supervised and validation members. Ties go
/// to the lowest index.
#[derive(Debug, Clone)]
pub struct DiversityHistogram {
    counts: Vec<usize>,
    supervised: Vec<bool>,
}

impl DiversityHistogram {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Whether pool index `i` belongs to the training subset.
    pub fn is_supervised(&self, index: usize) -> bool {
        self.supervised[index]
    }

    /// Counts restricted to the training subset (zero elsewhere).
    pub fn supervised_counts(&self) -> Vec<usize> {
        self.counts
            .iter()
            .zip(&self.supervised)
            .map(|(&c, &s)| if s { c } else { 0 })
            .collect()
    }

    /// Counts restricted to the held-out states (zero elsewhere).
    pub fn validation_counts(&self) -> Vec<usize> {
        self.counts
            .iter()
            .zip(&self.supervised)
            .map(|(&c, &s)| if s { 0 } else { c })
            .collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of pool indices hit at least once.
    pub fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Samples `samples` generated states and assigns each to its
/// highest-fidelity pool element.
pub fn diversity_histogram(
    gan: &Dqgan,
    pool: &StatePool,
    samples: usize,
    rng: &mut RngStream,
) -> Result<DiversityHistogram> {
    let dim = gan.generator_input_dim();
    let mut counts = vec![0usize; pool.len()];
    for _ in 0..samples {
        let generated = gan.generate(&haar_state(dim, rng))?;
        let mut best_index = 0;
        let mut best = f64::MIN;
        for (i, state) in pool.states().iter().enumerate() {
            let f = fidelity_pure_mixed(state, &generated)?;
            if f > best + 1e-15 {
                best = f;
                best_index = i;
            }
        }
        counts[best_index] += 1;
    }
    let supervised = (0..pool.len()).map(|i| pool.is_supervised(i)).collect();
    Ok(DiversityHistogram { counts, supervised })
}

/// Alternating adversarial training. Per epoch: draw a batch of training
/// states from the supervised pool, run `disc_rounds` discriminator updates
/// and `gen_rounds` generator updates each on fresh Haar inputs, then record
/// the two phase losses (on the last batches used) and the validation loss.
/// Returns early if the optional diversity floor is hit.
pub fn train_gan(
    gan: &Dqgan,
    pool: &StatePool,
    hyper: &GanHyper,
    diversity_stop: Option<DiversityStop>,
    rng: &mut RngStream,
) -> Result<(Dqgan, LossHistory)> {
    hyper.validate()?;
    if pool.states()[0].dim() != gan.training_input_dim() {
        return Err(Error::DimensionMismatch {
            context: "pool state vs discriminator input",
            left: pool.states()[0].dim(),
            right: gan.training_input_dim(),
        });
    }
    let mut history = LossHistory::new(&["loss_d", "loss_g", "loss_v"]);
    let mut current = gan.clone();
    let seed_dim = gan.generator_input_dim();
    let draw_batch = |rng: &mut RngStream| -> Vec<PureState> {
        (0..hyper.batch_size)
            .map(|_| pool.supervised_state(rng.uniform_usize(pool.supervised_count())).clone())
            .collect()
    };
    let draw_inputs = |rng: &mut RngStream| -> Vec<PureState> {
        (0..hyper.batch_size)
            .map(|_| haar_state(seed_dim, rng))
            .collect()
    };
    for epoch in 1..=hyper.epochs {
        let batch = draw_batch(rng);
        let mut last_disc_inputs = Vec::new();
        for _ in 0..hyper.disc_rounds {
            let inputs = draw_inputs(rng);
            let updates = current.update_matrices(
                GanPhase::Discriminator,
                &inputs,
                &batch,
                hyper.disc_learning_rate,
            )?;
            current = current.apply(&updates, hyper.step_size)?;
            last_disc_inputs = inputs;
        }
        let mut last_gen_inputs = Vec::new();
        for _ in 0..hyper.gen_rounds {
            let inputs = draw_inputs(rng);
            let updates = current.update_matrices(
                GanPhase::Generator,
                &inputs,
                &batch,
                hyper.gen_learning_rate,
            )?;
            current = current.apply(&updates, hyper.step_size)?;
            last_gen_inputs = inputs;
        }
        let loss_d = discriminator_loss(&current, &last_disc_inputs, &batch)?;
        let loss_g = generator_loss(&current, &last_gen_inputs)?;
        let loss_v = validation_loss_gan(&current, pool, hyper.validation_samples, rng)?;
        history.push(epoch, &[loss_d, loss_g, loss_v])?;
        if let Some(stop) = diversity_stop {
            if stop.check_interval > 0 && epoch % stop.check_interval == 0 {
                let histogram = diversity_histogram(&current, pool, stop.samples, rng)?;
                if histogram.distinct() < stop.min_distinct {
                    break;
                }
            }
        }
    }
    Ok((current, history))
}

/// One-qubit pure states spaced along a line between `|0>` and `|1>`:
/// `((N-x)|0> + (x-1)|1>) / norm` for `x = 1..=N`.
pub fn data_line(n: usize) -> StatePool {
    assert!(n >= 2);
    let states = (1..=n)
        .map(|x| PureState::from_real(&[(n - x) as f64, (x - 1) as f64]).unwrap())
        .collect();
    StatePool::new(states, n).expect("line pool is well-formed")
}

/// Two polar clusters of `N/2` states each: the first hugs `|0>`
/// (`x = 1..=N/2`), the second hugs `|1>` (`x = 3N/2+1..=2N`), with
/// amplitudes `((2N-x)|0> + (x-1)|1>) / norm`. The connected variant swaps
/// the inner edge of the first cluster for `(|0>+|1>)/sqrt(2)`. With
/// `verbatim_formula` the first coefficient is the constant `2N-1` instead
/// of `2N-x`.
pub fn data_clusters_with_options(n: usize, connected: bool, verbatim_formula: bool) -> StatePool {
    assert!(n >= 4 && n % 2 == 0);
    let coefficient = |x: usize| -> f64 {
        if verbatim_formula {
            (2 * n - 1) as f64
        } else {
            (2 * n - x) as f64
        }
    };
    let mut states: Vec<PureState> = (1..=n / 2)
        .map(|x| PureState::from_real(&[coefficient(x), (x - 1) as f64]).unwrap())
        .collect();
    states.extend(
        (3 * n / 2 + 1..=2 * n)
            .map(|x| PureState::from_real(&[coefficient(x), (x - 1) as f64]).unwrap()),
    );
    if connected {
        states[n / 2 - 1] = PureState::from_real(&[1.0, 1.0]).unwrap();
    }
    StatePool::new(states, n).expect("cluster pool is well-formed")
}

/// Cluster pool with the corrected sliding coefficient.
pub fn data_clusters(n: usize, connected: bool) -> StatePool {
    data_clusters_with_options(n, connected, false)
}

/// Training pairs are not part of the adversarial interface, but the
/// generator quality check reuses the supervised container.
pub fn pool_as_pairs(pool: &StatePool) -> Vec<TrainingPair> {
    pool.states()
        .iter()
        .map(|s| TrainingPair {
            input: s.clone(),
            target: s.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_gan(seed: u64) -> Dqgan {
        let mut rng = RngStream::new(seed);
        Dqgan::init_random(vec![1, 1], vec![1, 1], &mut rng).unwrap()
    }

    fn haar_batch(count: usize, dim: usize, rng: &mut RngStream) -> Vec<PureState> {
        (0..count).map(|_| haar_state(dim, rng)).collect()
    }

    #[test]
    fn composite_shape_checks() {
        let mut rng = RngStream::new(1);
        assert!(Dqgan::init_random(vec![1, 2], vec![1, 1], &mut rng).is_err());
        assert!(Dqgan::init_random(vec![1, 1], vec![1, 2], &mut rng).is_err());
        let gan = Dqgan::init_random(vec![1, 2], vec![2, 1], &mut rng).unwrap();
        assert_eq!(gan.composite().topology().widths(), &[1, 2, 1]);
        assert_eq!(gan.generator_transitions(), 1);
        assert_eq!(gan.generator().topology().widths(), &[1, 2]);
        assert_eq!(gan.discriminator().topology().widths(), &[2, 1]);
    }

    #[test]
    fn training_branch_bypasses_generator() {
        let gan = small_gan(2);
        let mut rng = RngStream::new(3);
        let state = haar_state(2, &mut rng);
        let via_gan = gan.forward(&state, GanBranch::Training).unwrap();
        let direct = gan.discriminator().network_output(&state).unwrap();
        assert!(via_gan.matrix().max_abs_diff(direct.matrix()) < 1e-14);
        assert!((via_gan.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_discriminator_passes_generator_output() {
        // Swap perceptron acts as the identity channel on one qubit.
        let swap = ComplexMatrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        let mut rng = RngStream::new(4);
        let generator = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let discriminator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![swap]],
        )
        .unwrap();
        let gan = Dqgan::new(generator, discriminator).unwrap();
        let seed_state = haar_state(2, &mut rng);
        let generated = gan.generate(&seed_state).unwrap();
        let verdict = gan.forward(&seed_state, GanBranch::Generated).unwrap();
        assert!(verdict.matrix().max_abs_diff(generated.matrix()) < 1e-12);
    }

    #[test]
    fn discriminator_loss_bounds_and_blind_value() {
        // Identity perceptrons give a verdict of |0><0| on both branches:
        // first term 1, second term 0.
        let id = ComplexMatrix::identity(4);
        let generator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![id.clone()]],
        )
        .unwrap();
        let discriminator =
            Dqnn::from_unitaries(NetworkTopology::new(vec![1, 1]).unwrap(), vec![vec![id]])
                .unwrap();
        let gan = Dqgan::new(generator, discriminator).unwrap();
        let mut rng = RngStream::new(5);
        let inputs = haar_batch(3, 2, &mut rng);
        let batch = haar_batch(3, 2, &mut rng);
        let loss = discriminator_loss(&gan, &inputs, &batch).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);

        // A maximally mixed verdict scores 1/2 + 1/2 = 1.
        let hadamard_like = ComplexMatrix::from_real(
            4,
            4,
            &[
                0.5, 0.5, 0.5, 0.5, //
                0.5, -0.5, 0.5, -0.5, //
                0.5, 0.5, -0.5, -0.5, //
                0.5, -0.5, -0.5, 0.5,
            ],
        );
        let generator = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let discriminator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![hadamard_like]],
        )
        .unwrap();
        let blind = Dqgan::new(generator, discriminator).unwrap();
        let loss = discriminator_loss(&blind, &inputs, &batch).unwrap();
        assert!((loss - 1.0).abs() < 1e-10, "blind loss {loss}");
        let gen_loss = generator_loss(&blind, &inputs).unwrap();
        assert!((gen_loss - 0.5).abs() < 1e-10);

        // Bounds on random configurations.
        for seed in 0..100 {
            let gan = small_gan(100 + seed);
            let d = discriminator_loss(&gan, &inputs, &batch).unwrap();
            let g = generator_loss(&gan, &inputs).unwrap();
            assert!((0.0..=2.0).contains(&d));
            assert!((0.0..=1.0).contains(&g));
        }
        // Single-element batches reduce to two fidelity calls.
        let d1 = discriminator_loss(&small_gan(7), &inputs[..1], &batch[..1]).unwrap();
        assert!((0.0..=2.0).contains(&d1));
    }

    #[test]
    fn updates_respect_phase_freezing_and_learning_rate() {
        let gan = small_gan(8);
        let mut rng = RngStream::new(9);
        let inputs = haar_batch(2, 2, &mut rng);
        let batch = haar_batch(2, 2, &mut rng);
        let disc = gan
            .update_matrices(GanPhase::Discriminator, &inputs, &batch, 1.0)
            .unwrap();
        assert!(disc[0].iter().all(|k| k.max_abs_entry() < 1e-15));
        assert!(disc[1].iter().any(|k| k.max_abs_entry() > 1e-6));
        let gen = gan
            .update_matrices(GanPhase::Generator, &inputs, &batch, 1.0)
            .unwrap();
        assert!(gen[0].iter().any(|k| k.max_abs_entry() > 1e-6));
        assert!(gen[1].iter().all(|k| k.max_abs_entry() < 1e-15));
        for layer in disc.iter().chain(gen.iter()) {
            for k in layer {
                assert!(k.hermiticity_residue() < 1e-8);
            }
        }
        let zero = gan
            .update_matrices(GanPhase::Generator, &inputs, &batch, 0.0)
            .unwrap();
        assert!(zero
            .iter()
            .flatten()
            .all(|k| k.max_abs_entry() < 1e-15));
    }

    #[test]
    fn phase_derivatives_match_finite_differences() {
        let gan = small_gan(10);
        let mut rng = RngStream::new(11);
        let inputs = haar_batch(2, 2, &mut rng);
        let batch = haar_batch(2, 2, &mut rng);
        for phase in [GanPhase::Discriminator, GanPhase::Generator] {
            let derivative =
                phase_loss_derivative(&gan, phase, &inputs, &batch, 1.0).unwrap();
            let loss = |g: &Dqgan| -> f64 {
                match phase {
                    GanPhase::Discriminator => {
                        discriminator_loss(g, &inputs, &batch).unwrap()
                    }
                    GanPhase::Generator => generator_loss(g, &inputs).unwrap(),
                }
            };
            let base = loss(&gan);
            let mut errors = Vec::new();
            for step in [1e-3, 1e-4] {
                let updates = gan
                    .update_matrices(phase, &inputs, &batch, 1.0)
                    .unwrap();
                let stepped = gan.apply(&updates, step).unwrap();
                let fd = (loss(&stepped) - base) / step;
                errors.push((fd - derivative).abs());
            }
            assert!(derivative > 0.0, "{phase:?} derivative {derivative}");
            assert!(
                errors[0] > 3.0 * errors[1],
                "{phase:?} first-order convergence violated: {errors:?}"
            );
        }
    }

    #[test]
    fn frozen_phase_keeps_other_network_bit_identical() {
        let gan = small_gan(12);
        let mut rng = RngStream::new(13);
        let inputs = haar_batch(2, 2, &mut rng);
        let batch = haar_batch(2, 2, &mut rng);
        let updates = gan
            .update_matrices(GanPhase::Discriminator, &inputs, &batch, 1.0)
            .unwrap();
        let stepped = gan.apply(&updates, 0.01).unwrap();
        // exp(i step 0) = 1 exactly, so the generator must be unchanged.
        assert_eq!(
            gan.composite().unitaries()[0][0],
            stepped.composite().unitaries()[0][0]
        );
        assert!(
            stepped.composite().unitaries()[1][0]
                .max_abs_diff(&gan.composite().unitaries()[1][0])
                > 1e-8
        );
    }

    #[test]
    fn validation_loss_brute_force_oracle() {
        let gan = small_gan(14);
        let mut rng = RngStream::new(15);
        let pool = StatePool::new(haar_batch(3, 2, &mut rng), 2).unwrap();
        // Reproduce the internal maximum by hand for one sample.
        let mut probe = rng.clone();
        let value = validation_loss_gan(&gan, &pool, 1, &mut rng).unwrap();
        let generated = gan.generate(&haar_state(2, &mut probe)).unwrap();
        let expected = pool
            .states()
            .iter()
            .map(|s| fidelity_pure_mixed(s, &generated).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((value - expected).abs() < 1e-12);
        // Exact pool reproduction scores 1.
        let swap = ComplexMatrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        let generator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![swap.clone()]],
        )
        .unwrap();
        let discriminator =
            Dqnn::from_unitaries(NetworkTopology::new(vec![1, 1]).unwrap(), vec![vec![swap]])
                .unwrap();
        let identity_gan = Dqgan::new(generator, discriminator).unwrap();
        // The generator reproduces its Haar input; fidelity to the best pool
        // element of the full Bloch line is high but not 1. Use a pool that
        // contains every possible generated state instead: a single state
        // pool with the generator frozen to produce it.
        let id_pool = StatePool::new(vec![PureState::basis(2, 0)], 1).unwrap();
        let constant_generator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![ComplexMatrix::identity(4)]],
        )
        .unwrap();
        let constant_gan =
            Dqgan::new(constant_generator, identity_gan.discriminator()).unwrap();
        let v = validation_loss_gan(&constant_gan, &id_pool, 5, &mut rng).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diversity_histogram_counts() {
        let mut rng = RngStream::new(16);
        // Constant |0> generator with the line pool: everything lands on the
        // first index.
        let constant_generator = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![ComplexMatrix::identity(4)]],
        )
        .unwrap();
        let discriminator =
            Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let gan = Dqgan::new(constant_generator, discriminator).unwrap();
        let pool = data_line(50);
        let histogram = diversity_histogram(&gan, &pool, 40, &mut rng).unwrap();
        assert_eq!(histogram.total(), 40);
        assert_eq!(histogram.counts()[0], 40);
        assert_eq!(histogram.distinct(), 1);

        // Determinism under a fixed seed.
        let gan = small_gan(17);
        let mut a = RngStream::new(18);
        let mut b = RngStream::new(18);
        let ha = diversity_histogram(&gan, &pool, 25, &mut a).unwrap();
        let hb = diversity_histogram(&gan, &pool, 25, &mut b).unwrap();
        assert_eq!(ha.counts(), hb.counts());
    }

    #[test]
    fn data_line_endpoints_and_interior() {
        let pool = data_line(50);
        assert_eq!(pool.len(), 50);
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        assert!((pool.states()[0].inner(&zero).norm() - 1.0).abs() < 1e-12);
        assert!((pool.states()[49].inner(&one).norm() - 1.0).abs() < 1e-12);
        // x = 26: amplitudes proportional to (24, 25).
        let expected = PureState::from_real(&[24.0, 25.0]).unwrap();
        assert!((pool.states()[25].inner(&expected).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn data_clusters_structure() {
        for connected in [false, true] {
            let pool = data_clusters(50, connected);
            assert_eq!(pool.len(), 50);
            let plus = PureState::from_real(&[1.0, 1.0]).unwrap();
            let plus_count = pool
                .states()
                .iter()
                .filter(|s| (s.inner(&plus).norm() - 1.0).abs() < 1e-12)
                .count();
            assert_eq!(plus_count, usize::from(connected));
        }
        let pool = data_clusters(50, false);
        // First cluster: |1> amplitude strictly below the cluster edge value.
        let edge = pool.states()[24].amplitudes()[1].re;
        for s in &pool.states()[..24] {
            assert!(s.amplitudes()[1].re < edge);
        }
        // Second cluster sits near |1>.
        for s in &pool.states()[25..] {
            assert!(s.amplitudes()[1].re > s.amplitudes()[0].re);
        }
        // The verbatim variant keeps a constant leading coefficient.
        let verbatim = data_clusters_with_options(50, false, true);
        let first = &verbatim.states()[0];
        assert!((first.amplitudes()[0].re - 1.0).abs() < 1e-12);
        let last = verbatim.states().last().unwrap();
        // (2N-1)|0> + (2N-1)|1> normalises to |+>: the literal formula cannot
        // reach the |1> pole.
        assert!(last.amplitudes()[0].re > 0.5);
    }

    #[test]
    fn train_gan_runs_and_records() {
        let gan = small_gan(19);
        let mut rng = RngStream::new(20);
        let pool = data_line(20).random_supervised(5, &mut rng).unwrap();
        let hyper = GanHyper {
            epochs: 3,
            ..GanHyper::standard(3, 4)
        };
        let (_trained, history) = train_gan(&gan, &pool, &hyper, None, &mut rng).unwrap();
        assert_eq!(history.len(), 3);
        for (_, values) in history.rows() {
            assert!((0.0..=2.0).contains(&values[0]));
            assert!((0.0..=1.0).contains(&values[1]));
            assert!((0.0..=1.0).contains(&values[2]));
        }
    }
}
