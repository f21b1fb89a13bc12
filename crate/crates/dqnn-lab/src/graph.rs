//! Semi-supervised training with graph-structured targets: the
//! Hilbert-Schmidt graph loss, the combined loss and the graph update
//! matrices, plus the bundled vertex datasets.
//!
//! The graph loss sums `[A]_wx d_HS(E(rho_w), E(rho_x))` over all ordered
//! vertex pairs, so every undirected edge is counted twice; the update-matrix
//! prefactor `2^(m_{l-1}+1)` is used verbatim alongside it.

use crate::dqnn::{DerivativeContribution, Dqnn, Hyperparams, TrainingPair, UpdateTerm};
use crate::error::{Error, Result};
use crate::experiment::LossHistory;
use crate::linalg::{C64, ComplexMatrix, PureState};
use crate::random::{haar_state, RngStream};
use crate::state::{hilbert_schmidt_distance, DensityMatrix};
use std::path::Path;

/// Symmetric 0/1 adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            entries: vec![false; n * n],
        }
    }

    /// Builds from explicit 0/1 rows, enforcing symmetry and zero diagonal.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("adjacency matrix not square".into()));
        }
        let mut adj = Self::empty(n);
        for (w, row) in rows.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::InvalidConfig("adjacency entries must be 0/1".into()));
                }
                if w == x && v != 0 {
                    return Err(Error::InvalidConfig("adjacency diagonal must be zero".into()));
                }
                if v != rows[x][w] {
                    return Err(Error::InvalidConfig("adjacency must be symmetric".into()));
                }
                adj.entries[w * n + x] = v == 1;
            }
        }
        Ok(adj)
    }

    pub fn add_edge(&mut self, w: usize, x: usize) -> Result<()> {
        if w >= self.n || x >= self.n {
            return Err(Error::QubitOutOfRange {
                index: w.max(x),
                num_qubits: self.n,
            });
        }
        if w == x {
            return Err(Error::InvalidConfig("self-loops are not allowed".into()));
        }
        self.entries[w * self.n + x] = true;
        self.entries[x * self.n + w] = true;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn has_edge(&self, w: usize, x: usize) -> bool {
        self.entries[w * self.n + x]
    }

    /// Undirected edges as `(w, x)` with `w < x`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for w in 0..self.n {
            for x in (w + 1)..self.n {
                if self.has_edge(w, x) {
                    edges.push((w, x));
                }
            }
        }
        edges
    }

    pub fn neighbours(&self, w: usize) -> Vec<usize> {
        (0..self.n).filter(|&x| self.has_edge(w, x)).collect()
    }
}

/// Vertex-labelled training data: per-vertex input states, per-vertex target
/// states (the held-out ones are used only for validation), an adjacency
/// matrix, and the set of supervised vertex indices.
#[derive(Debug, Clone)]
pub struct GraphTrainingSet {
    inputs: Vec<PureState>,
    targets: Vec<PureState>,
    adjacency: AdjacencyMatrix,
    supervised: Vec<usize>,
}

impl GraphTrainingSet {
    /// The first `supervised_count` vertices are supervised.
    pub fn new(
        inputs: Vec<PureState>,
        targets: Vec<PureState>,
        adjacency: AdjacencyMatrix,
        supervised_count: usize,
    ) -> Result<Self> {
        let indices = (0..supervised_count).collect();
        Self::with_supervised_indices(inputs, targets, adjacency, indices)
    }

    /// Explicit supervised vertex set (distinct, in range, non-empty).
    pub fn with_supervised_indices(
        inputs: Vec<PureState>,
        targets: Vec<PureState>,
        adjacency: AdjacencyMatrix,
        mut supervised: Vec<usize>,
    ) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || targets.len() != n || adjacency.len() != n {
            return Err(Error::InvalidConfig(
                "inputs, targets and adjacency must agree on the vertex count".into(),
            ));
        }
        supervised.sort_unstable();
        supervised.dedup();
        if supervised.is_empty() || supervised.len() > n {
            return Err(Error::InvalidConfig(
                "need between 1 and N supervised vertices".into(),
            ));
        }
        if supervised.iter().any(|&i| i >= n) {
            return Err(Error::InvalidConfig("supervised index out of range".into()));
        }
        let in_dim = inputs[0].dim();
        let out_dim = targets[0].dim();
        if inputs.iter().any(|s| s.dim() != in_dim) || targets.iter().any(|s| s.dim() != out_dim) {
            return Err(Error::InvalidConfig("inconsistent state dimensions".into()));
        }
        Ok(Self {
            inputs,
            targets,
            adjacency,
            supervised,
        })
    }

    /// Replaces the supervised vertex set.
    pub fn resupervise(self, indices: Vec<usize>) -> Result<Self> {
        Self::with_supervised_indices(self.inputs, self.targets, self.adjacency, indices)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[PureState] {
        &self.inputs
    }

    pub fn targets(&self) -> &[PureState] {
        &self.targets
    }

    pub fn adjacency(&self) -> &AdjacencyMatrix {
        &self.adjacency
    }

    pub fn supervised_indices(&self) -> &[usize] {
        &self.supervised
    }

    pub fn supervised_count(&self) -> usize {
        self.supervised.len()
    }

    pub fn validation_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|i| !self.supervised.contains(i))
            .collect()
    }

    pub fn supervised_pairs(&self) -> Vec<TrainingPair> {
        self.supervised
            .iter()
            .map(|&i| TrainingPair {
                input: self.inputs[i].clone(),
                target: self.targets[i].clone(),
            })
            .collect()
    }

    pub fn validation_pairs(&self) -> Vec<TrainingPair> {
        self.validation_indices()
            .into_iter()
            .map(|i| TrainingPair {
                input: self.inputs[i].clone(),
                target: self.targets[i].clone(),
            })
            .collect()
    }
}

/// Graph-based loss: `sum_{w,x} [A]_wx d_HS(E(rho_w^in), E(rho_x^in))` over
/// ordered pairs. Accepts mixed outputs; zero iff adjacent outputs coincide.
pub fn graph_loss(net: &Dqnn, set: &GraphTrainingSet) -> Result<f64> {
    let outputs = vertex_outputs(net, set)?;
    let mut total = 0.0;
    for (w, x) in set.adjacency.edges() {
        total += 2.0 * hilbert_schmidt_distance(&outputs[w], &outputs[x])?;
    }
    Ok(total)
}

/// `L_SV + gamma * L_G`; the supervised part runs over the supervised
/// vertices only.
pub fn combined_loss(net: &Dqnn, set: &GraphTrainingSet, gamma: f64) -> Result<f64> {
    let supervised = crate::dqnn::training_loss(net, &set.supervised_pairs())?;
    Ok(supervised + gamma * graph_loss(net, set)?)
}

/// Validation loss over the held-out vertices.
pub fn graph_validation_loss(net: &Dqnn, set: &GraphTrainingSet) -> Result<f64> {
    let pairs = set.validation_pairs();
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    crate::dqnn::validation_loss(net, &pairs)
}

fn vertex_outputs(net: &Dqnn, set: &GraphTrainingSet) -> Result<Vec<DensityMatrix>> {
    set.inputs
        .iter()
        .map(|input| net.network_output(input))
        .collect()
}

/// Per-vertex forward chains and back-propagated output chains, plus the
/// back-propagated target chains of the supervised vertices.
struct GraphCache {
    forward: Vec<Vec<DensityMatrix>>,
    output_backward: Vec<Vec<ComplexMatrix>>,
    target_backward: Vec<Vec<ComplexMatrix>>,
}

fn build_cache(net: &Dqnn, set: &GraphTrainingSet) -> Result<GraphCache> {
    let forward: Result<Vec<_>> = set
        .inputs
        .iter()
        .map(|input| net.feed_forward(&DensityMatrix::from_pure(input)))
        .collect();
    let forward = forward?;
    let output_backward: Result<Vec<_>> = forward
        .iter()
        .map(|chain| net.back_propagate_operator(chain.last().unwrap().matrix()))
        .collect();
    let target_backward: Result<Vec<_>> = set
        .supervised
        .iter()
        .map(|&i| net.back_propagate(&set.targets[i]))
        .collect();
    Ok(GraphCache {
        forward,
        output_backward: output_backward?,
        target_backward: target_backward?,
    })
}

/// Update matrices of the graph loss alone:
/// `K_G = 2^(m_{l-1}+1) i eta sum_{w,x} [A]_wx tr_rest(M_{wx})` with the
/// commutator built from forward and back-propagated state differences.
pub fn graph_update_matrices(
    net: &Dqnn,
    set: &GraphTrainingSet,
    learning_rate: f64,
) -> Result<Vec<Vec<ComplexMatrix>>> {
    let cache = build_cache(net, set)?;
    Ok(graph_updates_from_cache(net, set, &cache, learning_rate))
}

fn graph_updates_from_cache(
    net: &Dqnn,
    set: &GraphTrainingSet,
    cache: &GraphCache,
    learning_rate: f64,
) -> Vec<Vec<ComplexMatrix>> {
    let edges = set.adjacency.edges();
    let widths = net.topology().widths().to_vec();
    let mut all = Vec::with_capacity(net.num_transitions());
    for t in 0..net.num_transitions() {
        let forward_diffs: Vec<ComplexMatrix> = edges
            .iter()
            .map(|&(w, x)| cache.forward[w][t].matrix().sub(cache.forward[x][t].matrix()))
            .collect();
        let backward_diffs: Vec<ComplexMatrix> = edges
            .iter()
            .map(|&(w, x)| cache.output_backward[w][t + 1].sub(&cache.output_backward[x][t + 1]))
            .collect();
        // Each undirected edge appears twice in the ordered double sum.
        let terms: Vec<UpdateTerm> = forward_diffs
            .iter()
            .zip(backward_diffs.iter())
            .map(|(f, b)| UpdateTerm {
                forward: f,
                backward: b,
                weight: 2.0,
            })
            .collect();
        let sums = net.transition_update_sums(t, &terms);
        let factor = learning_rate * (1u64 << (widths[t] + 1)) as f64;
        all.push(
            sums.into_iter()
                .map(|m| m.scaled(C64::new(0.0, factor)).hermitian_part())
                .collect(),
        );
    }
    all
}

/// Combined update matrices `K_SV + gamma K_G`.
pub fn combined_update_matrices(
    net: &Dqnn,
    set: &GraphTrainingSet,
    gamma: f64,
    learning_rate: f64,
) -> Result<Vec<Vec<ComplexMatrix>>> {
    let cache = build_cache(net, set)?;
    Ok(combined_updates_from_cache(net, set, &cache, gamma, learning_rate))
}

fn combined_updates_from_cache(
    net: &Dqnn,
    set: &GraphTrainingSet,
    cache: &GraphCache,
    gamma: f64,
    learning_rate: f64,
) -> Vec<Vec<ComplexMatrix>> {
    let graph_updates = graph_updates_from_cache(net, set, cache, learning_rate);
    let widths = net.topology().widths().to_vec();
    let s = set.supervised_count() as f64;
    let mut all = Vec::with_capacity(net.num_transitions());
    for (t, graph_layer) in graph_updates.into_iter().enumerate() {
        let terms: Vec<UpdateTerm> = set
            .supervised
            .iter()
            .enumerate()
            .map(|(k, &vertex)| UpdateTerm {
                forward: cache.forward[vertex][t].matrix(),
                backward: &cache.target_backward[k][t + 1],
                weight: 1.0,
            })
            .collect();
        let sums = net.transition_update_sums(t, &terms);
        let sv_factor = learning_rate * (1u64 << widths[t]) as f64 / s;
        let layer: Vec<ComplexMatrix> = sums
            .into_iter()
            .zip(graph_layer)
            .map(|(sv, g)| {
                sv.scaled(C64::new(0.0, sv_factor))
                    .add(&g.scaled(C64::new(gamma, 0.0)))
                    .hermitian_part()
            })
            .collect();
        all.push(layer);
    }
    all
}

/// Analytic derivative of the combined loss along the combined update
/// direction; used to cross-check the update matrices by finite differences.
pub fn combined_loss_derivative(
    net: &Dqnn,
    set: &GraphTrainingSet,
    gamma: f64,
    learning_rate: f64,
) -> Result<f64> {
    let cache = build_cache(net, set)?;
    let updates = combined_updates_from_cache(net, set, &cache, gamma, learning_rate);
    let mut contributions = Vec::new();
    let s = set.supervised_count() as f64;
    for (k, &vertex) in set.supervised.iter().enumerate() {
        contributions.push(DerivativeContribution {
            forward: cache.forward[vertex]
                .iter()
                .map(|d| d.matrix().clone())
                .collect(),
            backward: cache.target_backward[k].clone(),
            weight: 1.0 / s,
        });
    }
    for (w, x) in set.adjacency.edges() {
        let forward = cache.forward[w]
            .iter()
            .zip(cache.forward[x].iter())
            .map(|(a, b)| a.matrix().sub(b.matrix()))
            .collect();
        let backward = cache.output_backward[w]
            .iter()
            .zip(cache.output_backward[x].iter())
            .map(|(a, b)| a.sub(b))
            .collect();
        // Quadratic loss and the ordered double count give 2 * 2.
        contributions.push(DerivativeContribution {
            forward,
            backward,
            weight: gamma * 4.0,
        });
    }
    Ok(net.derivative_along(&updates, &contributions))
}

/// Trains with the combined loss, recording supervised, graph and validation
/// losses per epoch.
pub fn train_graph(
    net: &Dqnn,
    set: &GraphTrainingSet,
    hyper: &Hyperparams,
    gamma: f64,
) -> Result<(Dqnn, LossHistory)> {
    let mut history = LossHistory::new(&["training_loss", "graph_loss", "validation_loss"]);
    let supervised_pairs = set.supervised_pairs();
    let validation_pairs = set.validation_pairs();
    let mut current = net.clone();
    for epoch in 0..=hyper.epochs {
        let sv = crate::dqnn::training_loss(&current, &supervised_pairs)?;
        let cache = build_cache(&current, set)?;
        let mut g = 0.0;
        for (w, x) in set.adjacency.edges() {
            g += 2.0
                * hilbert_schmidt_distance(
                    cache.forward[w].last().unwrap(),
                    cache.forward[x].last().unwrap(),
                )?;
        }
        let usv = if validation_pairs.is_empty() {
            f64::NAN
        } else {
            crate::dqnn::validation_loss(&current, &validation_pairs)?
        };
        history.push(epoch, &[sv, g, usv])?;
        if epoch < hyper.epochs {
            let updates =
                combined_updates_from_cache(&current, set, &cache, gamma, hyper.learning_rate);
            current = current.apply_updates(&updates, hyper.step_size)?;
        }
    }
    Ok((current, history))
}

/// Two fully connected clusters of four and three vertices bridged by the
/// eighth vertex; one-qubit targets drift from `|0>` across the bridge to
/// `|1>`, inputs are Haar-random three-qubit states. The designated
/// supervised vertices (one per cluster plus the bridge head) form the
/// supervised set.
pub fn connected_clusters_dataset(rng: &mut RngStream) -> GraphTrainingSet {
    let amplitudes: [[f64; 2]; 8] = [
        [1.0, 0.0],
        [0.997, 0.071],
        [0.988, 0.152],
        [0.97, 0.243],
        [0.152, 0.988],
        [0.071, 0.997],
        [0.0, 1.0],
        [0.659, 0.753],
    ];
    let targets: Vec<PureState> = amplitudes
        .iter()
        .map(|a| PureState::from_real(a).unwrap())
        .collect();
    let inputs: Vec<PureState> = (0..8).map(|_| haar_state(8, rng)).collect();
    let mut adjacency = AdjacencyMatrix::empty(8);
    // Clique on vertices 1..4.
    for w in 0..4 {
        for x in (w + 1)..4 {
            adjacency.add_edge(w, x).unwrap();
        }
    }
    // Clique on vertices 5..7.
    for w in 4..7 {
        for x in (w + 1)..7 {
            adjacency.add_edge(w, x).unwrap();
        }
    }
    // Vertex 8 bridges vertex 4 and vertex 5.
    adjacency.add_edge(7, 3).unwrap();
    adjacency.add_edge(7, 4).unwrap();
    GraphTrainingSet::with_supervised_indices(inputs, targets, adjacency, vec![1, 3, 4])
        .expect("static dataset is well-formed")
}

/// Printed one-qubit amplitudes of the ten-vertex line.
const LINE_TEN: [[f64; 2]; 10] = [
    [1.0, 0.0],
    [0.99, 0.21],
    [0.96, 0.28],
    [0.89, 0.45],
    [0.78, 0.62],
    [0.62, 0.78],
    [0.45, 0.89],
    [0.27, 0.96],
    [0.12, 0.99],
    [0.0, 1.0],
];

/// Path graph whose one-qubit targets are evenly spaced between `|0>` and
/// `|1>`; inputs are Haar-random three-qubit states. For ten vertices the
/// targets carry the canonical printed amplitudes.
pub fn line_dataset(n: usize, rng: &mut RngStream) -> Result<GraphTrainingSet> {
    if n < 2 {
        return Err(Error::InvalidConfig("line needs at least two vertices".into()));
    }
    let targets: Vec<PureState> = if n == 10 {
        LINE_TEN
            .iter()
            .map(|a| PureState::from_real(a).unwrap())
            .collect()
    } else {
        (0..n)
            .map(|x| {
                let angle = std::f64::consts::FRAC_PI_2 * x as f64 / (n - 1) as f64;
                PureState::from_real(&[angle.cos(), angle.sin()]).unwrap()
            })
            .collect()
    };
    let inputs: Vec<PureState> = (0..n).map(|_| haar_state(8, rng)).collect();
    let mut adjacency = AdjacencyMatrix::empty(n);
    for w in 0..n - 1 {
        adjacency.add_edge(w, w + 1).unwrap();
    }
    let supervised = if n == 10 {
        // The canonical supervised triple: two vertices near the |0> end and
        // one in the |1> half.
        vec![1, 2, 7]
    } else {
        let mut s = vec![n / 6, n / 2, (5 * n) / 6];
        s.dedup();
        s
    };
    GraphTrainingSet::with_supervised_indices(inputs, targets, adjacency, supervised)
}

/// Edge probability of the homophilic random graph,
/// `p = 1 / (1 + (d/b)^h)` for Hamming distance `d`.
pub fn homophily_edge_probability(distance: usize, h: f64, b: f64) -> f64 {
    1.0 / (1.0 + (distance as f64 / b).powf(h))
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count()
}

/// Independent Bernoulli edges with probability
/// `1 / (1 + (d(xi_w, xi_x)/b)^h)` from binary label vectors.
pub fn homophily_graph(
    labels: &[Vec<u8>],
    h: f64,
    b: f64,
    rng: &mut RngStream,
) -> Result<AdjacencyMatrix> {
    if labels.is_empty() {
        return Err(Error::InvalidConfig("no label vectors".into()));
    }
    let len = labels[0].len();
    if labels.iter().any(|l| l.len() != len) {
        return Err(Error::InvalidConfig("label vectors differ in length".into()));
    }
    let n = labels.len();
    let mut adjacency = AdjacencyMatrix::empty(n);
    for w in 0..n {
        for x in (w + 1)..n {
            let p = homophily_edge_probability(hamming(&labels[w], &labels[x]), h, b);
            if rng.uniform() < p {
                adjacency.add_edge(w, x).unwrap();
            }
        }
    }
    Ok(adjacency)
}

/// Parsed rows of the embedding and label files.
pub struct DeepWalkData {
    pub inputs: Vec<PureState>,
    pub targets: Vec<PureState>,
    pub labels: Vec<Vec<u8>>,
}

/// Ingests vertex embeddings (`id,e0,e1,e2,e3`) and label bitstrings
/// (`id,bitstring`): inputs are the normalised four-amplitude embeddings,
/// targets the equal-weight superposition of the basis states selected by
/// each vertex's labels.
pub fn deepwalk_data(embedding_file: &Path, labels_file: &Path) -> Result<DeepWalkData> {
    let bad = |path: &Path, reason: String| Error::MalformedFile {
        path: path.display().to_string(),
        reason,
    };
    let embeddings_text = std::fs::read_to_string(embedding_file)?;
    let labels_text = std::fs::read_to_string(labels_file)?;
    let mut inputs = Vec::new();
    for (lineno, line) in embeddings_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(bad(
                embedding_file,
                format!("line {}: expected id plus 4 amplitudes", lineno + 1),
            ));
        }
        let mut amps = [0.0f64; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            amps[k] = f
                .parse()
                .map_err(|_| bad(embedding_file, format!("line {}: bad number {f}", lineno + 1)))?;
        }
        let state = PureState::from_real(&amps)
            .map_err(|_| bad(embedding_file, format!("line {}: zero embedding", lineno + 1)))?;
        inputs.push(state);
    }
    let mut targets = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in labels_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(bad(
                labels_file,
                format!("line {}: expected id plus bitstring", lineno + 1),
            ));
        }
        let bits = fields[1];
        if bits.len() != 8 || bits.bytes().any(|b| b != b'0' && b != b'1') {
            return Err(bad(
                labels_file,
                format!("line {}: labels must be 8-character bitstrings", lineno + 1),
            ));
        }
        let vector: Vec<u8> = bits.bytes().map(|b| b - b'0').collect();
        let mut amps = vec![0.0f64; 8];
        for (k, &bit) in vector.iter().enumerate() {
            if bit == 1 {
                amps[k] = 1.0;
            }
        }
        let target = PureState::from_real(&amps)
            .map_err(|_| bad(labels_file, format!("line {}: vertex has no labels", lineno + 1)))?;
        targets.push(target);
        labels.push(vector);
    }
    if inputs.len() != targets.len() {
        return Err(bad(
            labels_file,
            format!("{} embeddings but {} label rows", inputs.len(), targets.len()),
        ));
    }
    Ok(DeepWalkData {
        inputs,
        targets,
        labels,
    })
}

/// Full ingestion: embeddings and labels from file, adjacency sampled from
/// the homophilic edge model over the label vectors, first `supervised_count`
/// vertices supervised.
pub fn deepwalk_dataset(
    embedding_file: &Path,
    labels_file: &Path,
    h: f64,
    b: f64,
    supervised_count: usize,
    rng: &mut RngStream,
) -> Result<GraphTrainingSet> {
    let data = deepwalk_data(embedding_file, labels_file)?;
    let adjacency = homophily_graph(&data.labels, h, b, rng)?;
    GraphTrainingSet::new(data.inputs, data.targets, adjacency, supervised_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqnn::NetworkTopology;
    use crate::linalg::PureState;

    fn swap_net() -> Dqnn {
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
        Dqnn::from_unitaries(NetworkTopology::new(vec![1, 1]).unwrap(), vec![vec![swap]]).unwrap()
    }

    fn two_vertex_line() -> GraphTrainingSet {
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        let mut adjacency = AdjacencyMatrix::empty(2);
        adjacency.add_edge(0, 1).unwrap();
        GraphTrainingSet::new(
            vec![zero.clone(), one.clone()],
            vec![zero, one],
            adjacency,
            1,
        )
        .unwrap()
    }

    fn three_vertex_line(rng: &mut RngStream) -> GraphTrainingSet {
        let inputs: Vec<PureState> = (0..3).map(|_| haar_state(2, rng)).collect();
        let targets: Vec<PureState> = (0..3).map(|_| haar_state(2, rng)).collect();
        let mut adjacency = AdjacencyMatrix::empty(3);
        adjacency.add_edge(0, 1).unwrap();
        adjacency.add_edge(1, 2).unwrap();
        GraphTrainingSet::new(inputs, targets, adjacency, 2).unwrap()
    }

    #[test]
    fn adjacency_construction_rules() {
        assert!(AdjacencyMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).is_ok());
        assert!(AdjacencyMatrix::from_rows(&[vec![1, 0], vec![0, 0]]).is_err());
        assert!(AdjacencyMatrix::from_rows(&[vec![0, 1], vec![0, 0]]).is_err());
        assert!(AdjacencyMatrix::from_rows(&[vec![0, 1]]).is_err());
        let mut a = AdjacencyMatrix::empty(3);
        assert!(a.add_edge(0, 0).is_err());
        a.add_edge(2, 0).unwrap();
        assert!(a.has_edge(0, 2));
        assert_eq!(a.edges(), vec![(0, 2)]);
    }

    #[test]
    fn graph_loss_zero_cases() {
        let mut rng = RngStream::new(1);
        // No edges.
        let inputs: Vec<PureState> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let targets = inputs.clone();
        let set = GraphTrainingSet::new(inputs, targets, AdjacencyMatrix::empty(3), 1).unwrap();
        let net = swap_net();
        assert_eq!(graph_loss(&net, &set).unwrap(), 0.0);

        // Identity perceptron maps every input to |0><0|: identical outputs.
        let constant = Dqnn::from_unitaries(
            NetworkTopology::new(vec![1, 1]).unwrap(),
            vec![vec![ComplexMatrix::identity(4)]],
        )
        .unwrap();
        let set = three_vertex_line(&mut rng);
        assert!(graph_loss(&constant, &set).unwrap().abs() < 1e-12);
    }

    #[test]
    fn graph_loss_two_vertex_value() {
        // Outputs |0><0| and |1><1| on one edge: both orders count, 2 * 2 = 4.
        let set = two_vertex_line();
        let net = swap_net();
        assert!((graph_loss(&net, &set).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn combined_loss_reduces_and_shifts() {
        let set = two_vertex_line();
        let net = swap_net();
        let sv = crate::dqnn::training_loss(&net, &set.supervised_pairs()).unwrap();
        assert!((combined_loss(&net, &set, 0.0).unwrap() - sv).abs() < 1e-12);
        assert!((combined_loss(&net, &set, -0.5).unwrap() - (sv - 2.0)).abs() < 1e-12);
        // Additivity in gamma.
        let l1 = combined_loss(&net, &set, -0.3).unwrap();
        let l2 = combined_loss(&net, &set, -0.7).unwrap();
        let l0 = combined_loss(&net, &set, 0.0).unwrap();
        let l3 = combined_loss(&net, &set, -1.0).unwrap();
        assert!((l1 + l2 - l0 - l3).abs() < 1e-12);
    }

    #[test]
    fn graph_updates_vanish_without_edges() {
        let mut rng = RngStream::new(2);
        let inputs: Vec<PureState> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let targets: Vec<PureState> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let set = GraphTrainingSet::new(inputs, targets, AdjacencyMatrix::empty(3), 2).unwrap();
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let updates = graph_update_matrices(&net, &set, 1.0).unwrap();
        for layer in updates {
            for k in layer {
                assert!(k.max_abs_entry() < 1e-15);
            }
        }
    }

    #[test]
    fn graph_updates_invariant_under_vertex_relabelling() {
        let mut rng = RngStream::new(3);
        let set = three_vertex_line(&mut rng);
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let k = graph_update_matrices(&net, &set, 1.0).unwrap();
        // Reverse the vertex order: edges (0,1), (1,2) map onto themselves.
        let reversed = GraphTrainingSet::with_supervised_indices(
            set.inputs().iter().rev().cloned().collect(),
            set.targets().iter().rev().cloned().collect(),
            set.adjacency().clone(),
            vec![0, 1],
        )
        .unwrap();
        let k_rev = graph_update_matrices(&net, &reversed, 1.0).unwrap();
        for (a, b) in k[0].iter().zip(k_rev[0].iter()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        for layer in &k {
            for m in layer {
                assert!(m.hermiticity_residue() < 1e-8);
            }
        }
    }

    #[test]
    fn combined_update_is_linear_in_gamma() {
        let mut rng = RngStream::new(4);
        let set = three_vertex_line(&mut rng);
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let k = |gamma: f64| combined_update_matrices(&net, &set, gamma, 1.0).unwrap();
        let k1 = k(-0.3);
        let k2 = k(-0.9);
        let k0 = k(0.0);
        let k12 = k(-1.2);
        let lhs = k1[0][0].add(&k2[0][0]).sub(&k0[0][0]);
        assert!(lhs.max_abs_diff(&k12[0][0]) < 1e-10);
    }

    #[test]
    fn combined_derivative_matches_finite_differences() {
        let mut rng = RngStream::new(5);
        let set = three_vertex_line(&mut rng);
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let gamma = -0.5;
        let derivative = combined_loss_derivative(&net, &set, gamma, 1.0).unwrap();
        let base = combined_loss(&net, &set, gamma).unwrap();
        let mut errors = Vec::new();
        for step in [1e-3, 1e-4] {
            let updates = combined_update_matrices(&net, &set, gamma, 1.0).unwrap();
            let stepped = net.apply_updates(&updates, step).unwrap();
            let fd = (combined_loss(&stepped, &set, gamma).unwrap() - base) / step;
            errors.push((fd - derivative).abs());
        }
        assert!(
            errors[0] > 3.0 * errors[1],
            "first-order convergence violated: {errors:?} derivative {derivative}"
        );
    }

    #[test]
    fn train_graph_with_zero_gamma_matches_supervised_training() {
        let mut rng = RngStream::new(6);
        let set = three_vertex_line(&mut rng);
        let net = Dqnn::init_random(NetworkTopology::new(vec![1, 1]).unwrap(), &mut rng);
        let hyper = Hyperparams::standard(5);
        let (graph_net, history) = train_graph(&net, &set, &hyper, 0.0).unwrap();
        let (plain_net, _) =
            crate::dqnn::train(&net, &set.supervised_pairs(), &set.validation_pairs(), &hyper)
                .unwrap();
        assert!(graph_net.unitaries()[0][0].max_abs_diff(&plain_net.unitaries()[0][0]) < 1e-12);
        assert_eq!(history.len(), 6);
    }

    #[test]
    fn connected_clusters_structure() {
        let mut rng = RngStream::new(7);
        let set = connected_clusters_dataset(&mut rng);
        assert_eq!(set.len(), 8);
        // The bridge vertex connects the two cluster heads.
        assert_eq!(set.adjacency().neighbours(7), vec![3, 4]);
        // Endpoint targets.
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        assert!((set.targets()[0].inner(&zero).norm() - 1.0).abs() < 1e-12);
        assert!((set.targets()[6].inner(&one).norm() - 1.0).abs() < 1e-12);
        for input in set.inputs() {
            assert_eq!(input.dim(), 8);
            assert!((input.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(set.supervised_indices(), &[1, 3, 4]);
        // Both cliques are complete.
        for w in 0..4 {
            for x in (w + 1)..4 {
                assert!(set.adjacency().has_edge(w, x));
            }
        }
        for w in 4..7 {
            for x in (w + 1)..7 {
                assert!(set.adjacency().has_edge(w, x));
            }
        }
    }

    #[test]
    fn line_dataset_structure() {
        let mut rng = RngStream::new(8);
        let set = line_dataset(10, &mut rng).unwrap();
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        assert!((set.targets()[0].inner(&zero).norm() - 1.0).abs() < 1e-12);
        assert!((set.targets()[9].inner(&one).norm() - 1.0).abs() < 1e-12);
        for w in 0..10 {
            for x in 0..10 {
                assert_eq!(
                    set.adjacency().has_edge(w, x),
                    w.abs_diff(x) == 1,
                    "adjacency must be tridiagonal"
                );
            }
        }
        let small = line_dataset(3, &mut rng).unwrap();
        let expected =
            AdjacencyMatrix::from_rows(&[vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]).unwrap();
        assert_eq!(small.adjacency(), &expected);
    }

    #[test]
    fn homophily_probability_values() {
        assert!((homophily_edge_probability(0, 2.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((homophily_edge_probability(2, 2.0, 1.0) - 0.2).abs() < 1e-15);
        // Large homophily suppresses edges beyond the characteristic distance.
        assert!(homophily_edge_probability(2, 600.0, 1.0) < 1e-12);
        // Identical labels connect with certainty.
        let labels = vec![vec![1, 0, 1], vec![1, 0, 1], vec![1, 0, 1]];
        let mut rng = RngStream::new(9);
        let adj = homophily_graph(&labels, 2.0, 1.0, &mut rng).unwrap();
        assert_eq!(adj.edges().len(), 3);
    }

    #[test]
    fn deepwalk_ingestion() {
        let dir = std::env::temp_dir().join("dqnn-lab-deepwalk-test");
        std::fs::create_dir_all(&dir).unwrap();
        let emb = dir.join("embeddings.csv");
        let lab = dir.join("labels.csv");
        std::fs::write(&emb, "0,1,0,0,0\n1,0.5,0.5,0.5,0.5\n").unwrap();
        std::fs::write(&lab, "0,01100001\n1,00010000\n").unwrap();
        let data = deepwalk_data(&emb, &lab).unwrap();
        // Embedding (1,0,0,0) is |00>.
        assert!((data.inputs[0].amplitudes()[0].re - 1.0).abs() < 1e-12);
        // Labels {2,3,8} give an equal superposition of |001>, |010>, |111>.
        let t = &data.targets[0];
        let w = 1.0 / 3.0f64.sqrt();
        for (idx, expected) in [(1, w), (2, w), (7, w), (0, 0.0), (3, 0.0)] {
            assert!((t.amplitudes()[idx].re - expected).abs() < 1e-12);
        }
        // Single label is a basis state.
        assert!((data.targets[1].amplitudes()[3].re - 1.0).abs() < 1e-12);

        std::fs::write(&emb, "0,0,0,0,0\n").unwrap();
        assert!(deepwalk_data(&emb, &lab).is_err());
        std::fs::write(&emb, "0,1,0,0\n").unwrap();
        assert!(deepwalk_data(&emb, &lab).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn training_set_validation() {
        let mut rng = RngStream::new(10);
        let inputs: Vec<PureState> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let targets: Vec<PureState> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let adj = AdjacencyMatrix::empty(3);
        assert!(GraphTrainingSet::new(inputs.clone(), targets.clone(), adj.clone(), 0).is_err());
        assert!(GraphTrainingSet::new(inputs.clone(), targets.clone(), adj.clone(), 4).is_err());
        let set = GraphTrainingSet::new(inputs, targets, adj, 2).unwrap();
        assert_eq!(set.supervised_indices(), &[0, 1]);
        assert_eq!(set.validation_indices(), vec![2]);
        let set = set.resupervise(vec![2, 0]).unwrap();
        assert_eq!(set.supervised_indices(), &[0, 2]);
    }
}
