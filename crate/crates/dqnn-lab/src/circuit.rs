//! Parametrized-circuit backend: u3/CAN gate circuits with qubit discards,
//! density-matrix simulation with depolarizing gate noise, a statevector
//! fast path, the destructive swap test with shot sampling,
//! finite-difference gradient-ascent training, and the alternating-operator
//! baseline circuit.

use crate::dqnn::{Hyperparams, NetworkTopology, TrainingPair};
use crate::error::{Error, Result};
use crate::experiment::LossHistory;
use crate::linalg::{pauli_x, pauli_y, pauli_z, C64, ComplexMatrix, PureState};
use crate::random::{gue_hermitian, RngStream};
use crate::state::{fidelity_pure_mixed, DensityMatrix};
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Parameter init range for u3/CAN network circuits.
pub const NETWORK_INIT_RANGE: (f64, f64) = (0.0, std::f64::consts::TAU);
/// Parameter init range for alternating-operator circuits.
pub const ALTERNATING_INIT_RANGE: (f64, f64) = (-1.0, 1.0);

/// Gate vocabulary. Parameter slots index into the circuit-wide vector.
#[derive(Debug, Clone)]
pub enum GateKind {
    /// General single-qubit gate
    /// `[[cos(p1/2), -e^{i p3} sin(p1/2)], [e^{i p2} sin(p1/2), e^{i(p2+p3)} cos(p1/2)]]`.
    U3 { slots: [usize; 3] },
    /// Canonical two-qubit gate `RXX(px pi) RYY(py pi) RZZ(pz pi)`.
    Can { slots: [usize; 3] },
    Cnot,
    Hadamard,
    /// Unparametrized unitary.
    Fixed { name: String, matrix: ComplexMatrix },
    /// `exp(-i G p)` for a fixed Hermitian generator, one slot.
    Evolution {
        name: String,
        generator: ComplexMatrix,
        eigenvalues: Vec<f64>,
        eigenvectors: ComplexMatrix,
        slot: usize,
    },
}

impl GateKind {
    fn arity(&self) -> usize {
        match self {
            GateKind::U3 { .. } | GateKind::Hadamard => 1,
            GateKind::Can { .. } | GateKind::Cnot => 2,
            GateKind::Fixed { matrix, .. } => matrix.rows().trailing_zeros() as usize,
            GateKind::Evolution { generator, .. } => generator.rows().trailing_zeros() as usize,
        }
    }

    fn label(&self) -> &str {
        match self {
            GateKind::U3 { .. } => "u3",
            GateKind::Can { .. } => "can",
            GateKind::Cnot => "cnot",
            GateKind::Hadamard => "hadamard",
            GateKind::Fixed { .. } => "fixed",
            GateKind::Evolution { .. } => "evolution",
        }
    }

    fn slots(&self) -> Vec<usize> {
        match self {
            GateKind::U3 { slots } | GateKind::Can { slots } => slots.to_vec(),
            GateKind::Evolution { slot, .. } => vec![*slot],
            _ => Vec::new(),
        }
    }
}

/// One gate with its target qubits (original circuit indices).
#[derive(Debug, Clone)]
pub struct GateSpec {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

fn rotation_pair(theta: f64) -> (f64, f64) {
    ((theta / 2.0).cos(), (theta / 2.0).sin())
}

/// `RAA(theta) = cos(theta/2) I - i sin(theta/2) (A (x) A)`.
fn two_axis_rotation(axis: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    let (c, s) = rotation_pair(theta);
    let aa = axis.kron(axis);
    ComplexMatrix::identity(4)
        .scaled(C64::new(c, 0.0))
        .sub(&aa.scaled(C64::new(0.0, s)))
}

/// u3 gate matrix as used by the network circuits.
pub fn u3_matrix(p1: f64, p2: f64, p3: f64) -> ComplexMatrix {
    let (c, s) = rotation_pair(p1);
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, C64::new(c, 0.0));
    m.set(0, 1, -C64::from_polar(1.0, p3) * s);
    m.set(1, 0, C64::from_polar(1.0, p2) * s);
    m.set(1, 1, C64::from_polar(1.0, p2 + p3) * c);
    m
}

/// Canonical gate `RXX(px pi) RYY(py pi) RZZ(pz pi)`.
pub fn can_matrix(px: f64, py: f64, pz: f64) -> ComplexMatrix {
    use std::f64::consts::PI;
    two_axis_rotation(&pauli_x(), px * PI)
        .mul(&two_axis_rotation(&pauli_y(), py * PI))
        .mul(&two_axis_rotation(&pauli_z(), pz * PI))
}

fn cnot_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

fn hadamard_matrix() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real(2, 2, &[h, h, h, -h])
}

/// Concrete matrix of a gate at the given global parameter values.
pub fn gate_matrix(gate: &GateSpec, params: &[f64]) -> ComplexMatrix {
    match &gate.kind {
        GateKind::U3 { slots } => u3_matrix(params[slots[0]], params[slots[1]], params[slots[2]]),
        GateKind::Can { slots } => can_matrix(params[slots[0]], params[slots[1]], params[slots[2]]),
        GateKind::Cnot => cnot_matrix(),
        GateKind::Hadamard => hadamard_matrix(),
        GateKind::Fixed { matrix, .. } => matrix.clone(),
        GateKind::Evolution {
            eigenvalues,
            eigenvectors,
            slot,
            ..
        } => {
            let p = params[*slot];
            let dim = eigenvalues.len();
            let mut diag = ComplexMatrix::zeros(dim, dim);
            for (i, &lambda) in eigenvalues.iter().enumerate() {
                diag.set(i, i, (C64::new(0.0, -1.0) * lambda * p).exp());
            }
            eigenvectors.mul(&diag).mul(&eigenvectors.dagger())
        }
    }
}

/// Ordered parametrized gates over a fixed register with discard markers.
#[derive(Debug, Clone)]
pub struct ParamCircuit {
    num_qubits: usize,
    gates: Vec<GateSpec>,
    /// `(position, qubits)`: the qubits are traced out after `position`
    /// gates have been applied.
    discards: Vec<(usize, Vec<usize>)>,
    num_params: usize,
    retired: Vec<bool>,
}

impl ParamCircuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            discards: Vec::new(),
            num_params: 0,
            retired: vec![false; num_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn discards(&self) -> &[(usize, Vec<usize>)] {
        &self.discards
    }

    /// Qubits still live at the end of the circuit, in register order.
    pub fn live_qubits(&self) -> Vec<usize> {
        (0..self.num_qubits).filter(|&q| !self.retired[q]).collect()
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &q) in targets.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
            if targets[..i].contains(&q) {
                return Err(Error::DuplicateQubit { index: q });
            }
            if self.retired[q] {
                return Err(Error::InvalidConfig(format!(
                    "qubit {q} was discarded earlier in the circuit"
                )));
            }
        }
        Ok(())
    }

    fn push(&mut self, kind: GateKind, targets: Vec<usize>) -> Result<()> {
        if kind.arity() != targets.len() {
            return Err(Error::InvalidConfig(format!(
                "{} gate needs {} targets, got {}",
                kind.label(),
                kind.arity(),
                targets.len()
            )));
        }
        self.check_targets(&targets)?;
        self.gates.push(GateSpec { kind, targets });
        Ok(())
    }

    fn claim_slots(&mut self) -> [usize; 3] {
        let base = self.num_params;
        self.num_params += 3;
        [base, base + 1, base + 2]
    }

    pub fn add_u3(&mut self, qubit: usize) -> Result<()> {
        let slots = self.claim_slots();
        self.push(GateKind::U3 { slots }, vec![qubit])
    }

    pub fn add_can(&mut self, first: usize, second: usize) -> Result<()> {
        let slots = self.claim_slots();
        self.push(GateKind::Can { slots }, vec![first, second])
    }

    pub fn add_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push(GateKind::Cnot, vec![control, target])
    }

    pub fn add_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.push(GateKind::Hadamard, vec![qubit])
    }

    pub fn add_fixed(
        &mut self,
        name: &str,
        matrix: ComplexMatrix,
        targets: Vec<usize>,
    ) -> Result<()> {
        if !matrix.is_square() || !matrix.rows().is_power_of_two() {
            return Err(Error::InvalidConfig("fixed gate must be square 2^k".into()));
        }
        self.push(
            GateKind::Fixed {
                name: name.to_string(),
                matrix,
            },
            targets,
        )
    }

    /// Adds `exp(-i G p)` with a fresh parameter slot.
    pub fn add_evolution(
        &mut self,
        name: &str,
        generator: ComplexMatrix,
        targets: Vec<usize>,
    ) -> Result<()> {
        if !generator.is_hermitian(1e-12) {
            return Err(Error::NotHermitian {
                tolerance: 1e-12,
                residue: generator.hermiticity_residue(),
            });
        }
        let (eigenvalues, eigenvectors) = generator.hermitian_eigen();
        let slot = self.num_params;
        self.num_params += 1;
        self.push(
            GateKind::Evolution {
                name: name.to_string(),
                generator,
                eigenvalues,
                eigenvectors,
                slot,
            },
            targets,
        )
    }

    /// Marks qubits for tracing out after the gates pushed so far.
    pub fn add_discard(&mut self, qubits: Vec<usize>) -> Result<()> {
        self.check_targets(&qubits)?;
        for &q in &qubits {
            self.retired[q] = true;
        }
        self.discards.push((self.gates.len(), qubits));
        Ok(())
    }

    /// JSON description of the gate list for inspection: kinds, targets,
    /// parameter slots, discard markers, and the fixed matrices or
    /// generators where applicable.
    pub fn export_json(&self) -> String {
        let matrix_json = |m: &ComplexMatrix| -> serde_json::Value {
            let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| [m.at(i, j).re, m.at(i, j).im]).collect())
                .collect();
            serde_json::json!(rows)
        };
        let gates: Vec<serde_json::Value> = self
            .gates
            .iter()
            .map(|g| {
                let mut value = serde_json::json!({
                    "kind": g.kind.label(),
                    "targets": g.targets,
                    "param_slots": g.kind.slots(),
                });
                match &g.kind {
                    GateKind::Fixed { name, matrix } => {
                        value["name"] = serde_json::json!(name);
                        value["matrix"] = matrix_json(matrix);
                    }
                    GateKind::Evolution {
                        name, generator, ..
                    } => {
                        value["name"] = serde_json::json!(name);
                        value["generator"] = matrix_json(generator);
                    }
                    _ => {}
                }
                value
            })
            .collect();
        let discards: Vec<serde_json::Value> = self
            .discards
            .iter()
            .map(|(position, qubits)| serde_json::json!({"position": position, "qubits": qubits}))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "num_qubits": self.num_qubits,
            "num_params": self.num_params,
            "gates": gates,
            "discards": discards,
        }))
        .expect("circuit JSON is serialisable")
    }
}

/// Per-gate-kind depolarization rates and a global scale factor; the
/// effective probability of a gate's channel is `scale * rate(kind)`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub u3_rate: f64,
    pub can_rate: f64,
    pub cnot_rate: f64,
    pub hadamard_rate: f64,
    pub evolution_rate: f64,
    pub fixed_rate: f64,
    pub scale: f64,
}

impl NoiseModel {
    /// Maps measured basis-gate rates onto the logical gate set: the
    /// two-qubit rate covers can/cnot and the multi-qubit evolutions, the
    /// single-qubit rate covers u3/hadamard. The phase-rotation rate is
    /// accepted for completeness; the logical gate set contains no bare
    /// phase rotation, so it maps nowhere.
    pub fn from_basis_rates(two_qubit: f64, single_qubit: f64, _phase_rotation: f64) -> Self {
        Self {
            u3_rate: single_qubit,
            can_rate: two_qubit,
            cnot_rate: two_qubit,
            hadamard_rate: single_qubit,
            evolution_rate: two_qubit,
            fixed_rate: two_qubit,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn rate_for(&self, kind: &GateKind) -> f64 {
        let rate = match kind {
            GateKind::U3 { .. } => self.u3_rate,
            GateKind::Can { .. } => self.can_rate,
            GateKind::Cnot => self.cnot_rate,
            GateKind::Hadamard => self.hadamard_rate,
            GateKind::Evolution { .. } => self.evolution_rate,
            GateKind::Fixed { .. } => self.fixed_rate,
        };
        rate * self.scale
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.u3_rate,
            self.can_rate,
            self.cnot_rate,
            self.hadamard_rate,
            self.evolution_rate,
            self.fixed_rate,
        ];
        if self.scale < 0.0 {
            return Err(Error::InvalidConfig("noise scale must be >= 0".into()));
        }
        for r in rates {
            if !(0.0..=1.0).contains(&r) || r * self.scale > 1.0 + 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "effective depolarization probability {} outside [0, 1]",
                    r * self.scale
                )));
            }
        }
        Ok(())
    }
}

/// Depolarization rates approximating a current superconducting device:
/// 3.14e-2 for entangling gates, 1.18e-3 for single-qubit gates, zero for
/// phase rotations; scale 1 reproduces the device, 0 is noise-free.
pub fn noise_defaults() -> NoiseModel {
    NoiseModel::from_basis_rates(3.14e-2, 1.18e-3, 0.0)
}

/// Hardware basis-gate rate triple behind [`noise_defaults`].
pub const DEFAULT_BASIS_RATES: (f64, f64, f64) = (3.14e-2, 1.18e-3, 0.0);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Applies a k-qubit gate to the rows of a matrix (statevector columns),
/// `positions` being bit positions within the live register.
fn transform_rows(m: &mut ComplexMatrix, live_qubits: usize, gate: &ComplexMatrix, positions: &[usize]) {
    let k = positions.len();
    let gate_dim = 1usize << k;
    debug_assert_eq!(gate.rows(), gate_dim);
    let dim = 1usize << live_qubits;
    let cols = m.cols();
    let shifts: Vec<usize> = positions.iter().map(|&p| live_qubits - 1 - p).collect();
    let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
    // Row index for base + gate-row bits g.
    let compose = |base: usize, g: usize| -> usize {
        let mut idx = base;
        for (bit, &s) in shifts.iter().enumerate() {
            if (g >> (k - 1 - bit)) & 1 == 1 {
                idx |= 1 << s;
            }
        }
        idx
    };
    let mut gathered = vec![C64::new(0.0, 0.0); gate_dim];
    for base in 0..dim {
        if base & target_mask != 0 {
            continue;
        }
        for col in 0..cols {
            for g in 0..gate_dim {
                gathered[g] = m.at(compose(base, g), col);
            }
            for g in 0..gate_dim {
                let mut sum = C64::new(0.0, 0.0);
                for h in 0..gate_dim {
                    sum += gate.at(g, h) * gathered[h];
                }
                m.set(compose(base, g), col, sum);
            }
        }
    }
}

/// `G rho G^dag` on the live register.
fn conjugate_gate(rho: ComplexMatrix, live_qubits: usize, gate: &ComplexMatrix, positions: &[usize]) -> ComplexMatrix {
    let mut a = rho;
    transform_rows(&mut a, live_qubits, gate, positions);
    let mut b = a.dagger();
    transform_rows(&mut b, live_qubits, gate, positions);
    b.dagger()
}

/// Depolarizing channel on the listed live positions:
/// `rho -> (1-p) rho + p (I/2^a) (x) tr_targets(rho)`.
fn depolarize(rho: &ComplexMatrix, live_qubits: usize, positions: &[usize], probability: f64) -> Result<ComplexMatrix> {
    if probability == 0.0 {
        return Ok(rho.clone());
    }
    let reduced = rho.partial_trace_qubits(live_qubits, positions)?;
    let a = positions.len();
    let kept: Vec<usize> = (0..live_qubits).filter(|q| !positions.contains(q)).collect();
    let kept_shifts: Vec<usize> = kept.iter().map(|&q| live_qubits - 1 - q).collect();
    let target_shifts: Vec<usize> = positions.iter().map(|&q| live_qubits - 1 - q).collect();
    let dim = 1usize << live_qubits;
    let mut mixed = ComplexMatrix::zeros(dim, dim);
    let weight = 1.0 / (1u64 << a) as f64;
    let compose = |bits: usize, shifts: &[usize]| -> usize {
        let mut idx = 0usize;
        for (k, &s) in shifts.iter().enumerate() {
            if (bits >> k) & 1 == 1 {
                idx |= 1 << s;
            }
        }
        idx
    };
    for r in 0..reduced.rows() {
        // Reduced indices enumerate kept qubits most-significant-first; the
        // compose helper counts bits from the low end, so reverse.
        let r_bits = reverse_bits(r, kept.len());
        let row_base = compose(r_bits, &kept_shifts);
        for c in 0..reduced.cols() {
            let value = reduced.at(r, c);
            if value.re == 0.0 && value.im == 0.0 {
                continue;
            }
            let c_bits = reverse_bits(c, kept.len());
            let col_base = compose(c_bits, &kept_shifts);
            for z in 0..(1usize << a) {
                let zi = compose(reverse_bits(z, a), &target_shifts);
                let cur = mixed.at(row_base | zi, col_base | zi);
                mixed.set(row_base | zi, col_base | zi, cur + value * weight);
            }
        }
    }
    Ok(rho
        .scaled(C64::new(1.0 - probability, 0.0))
        .add(&mixed.scaled(C64::new(probability, 0.0))))
}

fn reverse_bits(value: usize, width: usize) -> usize {
    let mut out = 0usize;
    for k in 0..width {
        if (value >> k) & 1 == 1 {
            out |= 1 << (width - 1 - k);
        }
    }
    out
}

/// Density-matrix simulation: the input occupies the leading qubits, the
/// remaining qubits start in `|0>`; gates apply in order, each optionally
/// followed by a depolarizing channel on its targets; discard markers trace
/// qubits out in flight. Returns the state of the surviving qubits.
pub fn simulate(
    circuit: &ParamCircuit,
    params: &[f64],
    input: &DensityMatrix,
    noise: Option<&NoiseModel>,
) -> Result<DensityMatrix> {
    if params.len() != circuit.num_params {
        return Err(Error::ParamLengthMismatch {
            got: params.len(),
            expected: circuit.num_params,
        });
    }
    if input.num_qubits() > circuit.num_qubits {
        return Err(Error::DimensionMismatch {
            context: "circuit input width",
            left: input.num_qubits(),
            right: circuit.num_qubits,
        });
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let ancillas = circuit.num_qubits - input.num_qubits();
    let mut rho = crate::dqnn::tensor_with_zero_block(input.matrix(), ancillas);
    let mut live: Vec<usize> = (0..circuit.num_qubits).collect();
    let mut discard_cursor = 0usize;
    let mut apply_discards = |rho: &mut ComplexMatrix, live: &mut Vec<usize>, upto: usize, cursor: &mut usize| -> Result<()> {
        while *cursor < circuit.discards.len() && circuit.discards[*cursor].0 <= upto {
            let qubits = &circuit.discards[*cursor].1;
            let positions: Vec<usize> = qubits
                .iter()
                .map(|q| live.iter().position(|l| l == q).expect("qubit is live"))
                .collect();
            *rho = rho.partial_trace_qubits(live.len(), &positions)?;
            live.retain(|l| !qubits.contains(l));
            *cursor += 1;
        }
        Ok(())
    };
    for (i, gate) in circuit.gates.iter().enumerate() {
        apply_discards(&mut rho, &mut live, i, &mut discard_cursor)?;
        let positions: Vec<usize> = gate
            .targets
            .iter()
            .map(|q| live.iter().position(|l| l == q).expect("qubit is live"))
            .collect();
        let matrix = gate_matrix(gate, params);
        rho = conjugate_gate(rho, live.len(), &matrix, &positions);
        if let Some(model) = noise {
            let p = model.rate_for(&gate.kind);
            if p > 0.0 {
                rho = depolarize(&rho, live.len(), &positions, p)?;
            }
        }
    }
    apply_discards(&mut rho, &mut live, circuit.gates.len(), &mut discard_cursor)?;
    Ok(DensityMatrix::from_matrix_unchecked(live.len(), rho))
}

/// Noise-free statevector path: gates run on the full register (discarded
/// qubits are never referenced again), the discarded qubits are traced out
/// at the end. Returns the same state as [`simulate`] without noise.
pub fn simulate_pure(
    circuit: &ParamCircuit,
    params: &[f64],
    input: &PureState,
) -> Result<DensityMatrix> {
    if params.len() != circuit.num_params {
        return Err(Error::ParamLengthMismatch {
            got: params.len(),
            expected: circuit.num_params,
        });
    }
    if input.num_qubits() > circuit.num_qubits {
        return Err(Error::DimensionMismatch {
            context: "circuit input width",
            left: input.num_qubits(),
            right: circuit.num_qubits,
        });
    }
    let ancillas = circuit.num_qubits - input.num_qubits();
    let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << circuit.num_qubits];
    let block = 1usize << ancillas;
    for (i, &a) in input.amplitudes().iter().enumerate() {
        amplitudes[i * block] = a;
    }
    let mut column = ComplexMatrix::from_rows(amplitudes.len(), 1, amplitudes);
    for gate in &circuit.gates {
        let matrix = gate_matrix(gate, params);
        transform_rows(&mut column, circuit.num_qubits, &matrix, &gate.targets);
    }
    let discarded: Vec<usize> = circuit
        .discards
        .iter()
        .flat_map(|(_, qs)| qs.iter().copied())
        .collect();
    let dim = column.rows();
    let mut full = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            full.set(i, j, column.at(i, 0) * column.at(j, 0).conj());
        }
    }
    let reduced = full.partial_trace_qubits(circuit.num_qubits, &discarded)?;
    Ok(DensityMatrix::from_matrix_unchecked(
        circuit.num_qubits - discarded.len(),
        reduced,
    ))
}

// ---------------------------------------------------------------------------
// Network and alternating-operator circuit builders
// ---------------------------------------------------------------------------

/// Network circuit over the full layer register: per transition a u3 layer
/// on the source qubits, one CAN gate per (source, perceptron) pair and a
/// discard of the source layer; a final u3 layer acts on the outputs. The
/// plus variant splits every transition into two CAN blocks joined by a u3
/// layer on both qubit layers.
pub fn build_dqnn_circuit(topology: &NetworkTopology, plus_variant: bool) -> Result<ParamCircuit> {
    let widths = topology.widths();
    let total: usize = widths.iter().sum();
    let mut circuit = ParamCircuit::new(total);
    let starts: Vec<usize> = widths
        .iter()
        .scan(0usize, |acc, &w| {
            let s = *acc;
            *acc += w;
            Some(s)
        })
        .collect();
    for t in 0..topology.num_transitions() {
        let in_start = starts[t];
        let out_start = starts[t + 1];
        for q in 0..widths[t] {
            circuit.add_u3(in_start + q)?;
        }
        let mut can_block = |circuit: &mut ParamCircuit| -> Result<()> {
            for p in 0..widths[t + 1] {
                for q in 0..widths[t] {
                    circuit.add_can(in_start + q, out_start + p)?;
                }
            }
            Ok(())
        };
        can_block(&mut circuit)?;
        if plus_variant {
            for q in 0..widths[t] {
                circuit.add_u3(in_start + q)?;
            }
            for p in 0..widths[t + 1] {
                circuit.add_u3(out_start + p)?;
            }
            can_block(&mut circuit)?;
        }
        circuit.add_discard((in_start..in_start + widths[t]).collect())?;
    }
    let out_start = starts[topology.num_transitions()];
    for q in 0..*widths.last().unwrap() {
        circuit.add_u3(out_start + q)?;
    }
    Ok(circuit)
}

/// Parameter count of the plain network circuit:
/// `3 sum m_{l-1} (1 + m_l) + 3 m_{L+1}`.
pub fn dqnn_param_count(topology: &NetworkTopology) -> usize {
    let widths = topology.widths();
    let mut n = 3 * widths[widths.len() - 1];
    for t in 0..topology.num_transitions() {
        n += 3 * widths[t] * (1 + widths[t + 1]);
    }
    n
}

/// Parameter vector that makes the plain network circuit act as the
/// identity: zeroed u3 gates and swap-valued CAN gates pairing source qubit
/// `i` with perceptron `i`. Requires all layers to have equal width.
pub fn identity_parameters(topology: &NetworkTopology, plus_variant: bool) -> Result<Vec<f64>> {
    let widths = topology.widths();
    if widths.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidConfig(
            "identity parameters need equal layer widths".into(),
        ));
    }
    let circuit = build_dqnn_circuit(topology, plus_variant)?;
    let mut params = vec![0.0; circuit.num_params()];
    for gate in circuit.gates() {
        if let GateKind::Can { slots } = &gate.kind {
            // CAN(1/2, 1/2, 1/2) is a swap up to global phase.
            let source = gate.targets[0];
            let sink = gate.targets[1];
            if swap_pairs(topology, source, sink) {
                for &s in slots {
                    params[s] = 0.5;
                }
            }
        }
    }
    // The plus variant's second block stays at the identity, so undo the
    // swaps it would otherwise repeat: keep only the first block per
    // transition.
    if plus_variant {
        let mut seen: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
        for gate in circuit.gates() {
            if let GateKind::Can { slots } = &gate.kind {
                let key = (gate.targets[0], gate.targets[1]);
                if swap_pairs(topology, key.0, key.1) {
                    if seen.contains(&key) {
                        for &s in slots {
                            params[s] = 0.0;
                        }
                    } else {
                        seen.insert(key);
                    }
                }
            }
        }
    }
    Ok(params)
}

fn swap_pairs(topology: &NetworkTopology, source: usize, sink: usize) -> bool {
    // Matching offsets within consecutive layers of equal width.
    let width = topology.widths()[0];
    source % width == sink % width
}

/// Alternating-evolution circuit `exp(-i B k_tau) exp(-i A p_tau) ...` with
/// fixed Hermitian generators drawn from the Gaussian unitary ensemble;
/// `2 * depth` parameters on `m` qubits.
pub fn build_qaoa_circuit(m: usize, depth: usize, rng: &mut RngStream) -> Result<ParamCircuit> {
    let dim = 1usize << m;
    let a = gue_hermitian(dim, rng);
    let b = gue_hermitian(dim, rng);
    let mut circuit = ParamCircuit::new(m);
    let all: Vec<usize> = (0..m).collect();
    for _ in 0..depth {
        circuit.add_evolution("A", a.clone(), all.clone())?;
        circuit.add_evolution("B", b.clone(), all.clone())?;
    }
    Ok(circuit)
}

/// The depth `d^2/2` at which the alternating circuit carries `d^2`
/// parameters.
pub fn qaoa_default_depth(m: usize) -> usize {
    (1usize << (2 * m)) / 2
}

// ---------------------------------------------------------------------------
// Swap test and losses
// ---------------------------------------------------------------------------

/// Destructive swap test on a `2m`-qubit joint state (reference on the first
/// `m` qubits, test state on the last `m`): CNOTs from each test qubit onto
/// its reference partner, Hadamards on the test qubits, then a full
/// computational-basis readout with sign vector `(1,1,1,-1)` per pair.
/// `shots = 0` returns the exact expectation; otherwise the empirical
/// estimate from multinomially sampled outcomes.
pub fn destructive_swap_test(
    joint: &DensityMatrix,
    shots: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if joint.num_qubits() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            context: "swap test needs two equal registers",
            left: joint.num_qubits(),
            right: joint.num_qubits() + 1,
        });
    }
    let m = joint.num_qubits() / 2;
    let n = joint.num_qubits();
    let mut rho = joint.matrix().clone();
    let cnot = cnot_matrix();
    let hadamard = hadamard_matrix();
    for i in 0..m {
        rho = conjugate_gate(rho, n, &cnot, &[m + i, i]);
    }
    for i in 0..m {
        rho = conjugate_gate(rho, n, &hadamard, &[m + i]);
    }
    let dim = 1usize << n;
    let mut probabilities = vec![0.0f64; dim];
    for (o, p) in probabilities.iter_mut().enumerate() {
        *p = rho.at(o, o).re.max(0.0);
    }
    let sign = |outcome: usize| -> f64 {
        let mut s = 1.0;
        for i in 0..m {
            let reference_bit = (outcome >> (n - 1 - i)) & 1;
            let test_bit = (outcome >> (n - 1 - (m + i))) & 1;
            if reference_bit & test_bit == 1 {
                s = -s;
            }
        }
        s
    };
    if shots == 0 {
        return Ok(probabilities
            .iter()
            .enumerate()
            .map(|(o, p)| sign(o) * p)
            .sum());
    }
    let total: f64 = probabilities.iter().sum();
    let mut cumulative = Vec::with_capacity(dim);
    let mut acc = 0.0;
    for p in &probabilities {
        acc += p / total;
        cumulative.push(acc);
    }
    let mut estimate = 0.0;
    for _ in 0..shots {
        let u = rng.uniform();
        let outcome = cumulative.partition_point(|&c| c < u).min(dim - 1);
        estimate += sign(outcome);
    }
    Ok(estimate / shots as f64)
}

/// Mean swap-test fidelity of the circuit outputs against the pair targets;
/// `shots = 0` evaluates exactly, and the noise-free exact case runs on the
/// statevector fast path.
pub fn circuit_loss(
    circuit: &ParamCircuit,
    params: &[f64],
    pairs: &[TrainingPair],
    shots: usize,
    noise: Option<&NoiseModel>,
    rng: &mut RngStream,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut total = 0.0;
    for pair in pairs {
        let output = if noise.is_none() {
            simulate_pure(circuit, params, &pair.input)?
        } else {
            simulate(
                circuit,
                params,
                &DensityMatrix::from_pure(&pair.input),
                noise,
            )?
        };
        if shots == 0 {
            total += fidelity_pure_mixed(&pair.target, &output)?;
        } else {
            let joint = DensityMatrix::from_pure(&pair.target).tensor(&output);
            total += destructive_swap_test(&joint, shots, rng)?;
        }
    }
    Ok(total / pairs.len() as f64)
}

/// Central-difference gradient `(L(w + s e_k) - L(w - s e_k)) / 2s`; exactly
/// `2 * len(params)` loss evaluations.
pub fn finite_diff_gradient<F>(loss: F, params: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    params
        .par_iter()
        .enumerate()
        .map(|(k, _)| {
            let mut plus = params.to_vec();
            let mut minus = params.to_vec();
            plus[k] += step;
            minus[k] -= step;
            (loss(&plus) - loss(&minus)) / (2.0 * step)
        })
        .collect()
}

/// Counts evaluations through a shared atomic; test helper for the
/// evaluation-cost contract.
pub fn finite_diff_gradient_counted<F>(
    loss: F,
    params: &[f64],
    step: f64,
) -> (Vec<f64>, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let counter = AtomicUsize::new(0);
    let counted = |p: &[f64]| -> f64 {
        counter.fetch_add(1, Ordering::Relaxed);
        loss(p)
    };
    let grad = finite_diff_gradient(counted, params, step);
    let count = counter.load(Ordering::Relaxed);
    (grad, count)
}

/// Gradient-ascent training of the circuit parameters. Shot noise draws an
/// independent sub-stream per (epoch, parameter, sign) so gradient
/// evaluations can run in parallel deterministically.
#[allow(clippy::too_many_arguments)]
pub fn train_circuit(
    circuit: &ParamCircuit,
    pairs: &[TrainingPair],
    validation_pairs: &[TrainingPair],
    hyper: &Hyperparams,
    shots: usize,
    noise: Option<&NoiseModel>,
    init_range: (f64, f64),
    rng: &mut RngStream,
) -> Result<(Vec<f64>, LossHistory)> {
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let n = circuit.num_params();
    let mut params: Vec<f64> = (0..n)
        .map(|_| rng.uniform_range(init_range.0, init_range.1))
        .collect();
    let base_stream = rng.clone();
    let mut history = LossHistory::new(if validation_pairs.is_empty() {
        &["training_loss"]
    } else {
        &["training_loss", "validation_loss"]
    });
    let stream_index = |epoch: usize, k: usize, sign: usize| -> u64 {
        ((epoch as u64) << 24) | ((k as u64) << 1) | sign as u64
    };
    let evaluate = |params: &[f64], pairs: &[TrainingPair], index: u64| -> Result<f64> {
        let mut stream = base_stream.substream(index);
        circuit_loss(circuit, params, pairs, shots, noise, &mut stream)
    };
    let record = |history: &mut LossHistory, epoch: usize, params: &[f64]| -> Result<()> {
        let train = evaluate(params, pairs, stream_index(epoch, n, 0))?;
        if validation_pairs.is_empty() {
            history.push(epoch, &[train])
        } else {
            let validation = evaluate(params, validation_pairs, stream_index(epoch, n, 1))?;
            history.push(epoch, &[train, validation])
        }
    };
    record(&mut history, 0, &params)?;
    for epoch in 1..=hyper.epochs {
        let gradient: Result<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[k] += hyper.step_size;
                minus[k] -= hyper.step_size;
                let up = evaluate(&plus, pairs, stream_index(epoch, k, 0))?;
                let down = evaluate(&minus, pairs, stream_index(epoch, k, 1))?;
                Ok((up - down) / (2.0 * hyper.step_size))
            })
            .collect();
        for (p, g) in params.iter_mut().zip(gradient?) {
            *p += hyper.learning_rate * g;
        }
        record(&mut history, epoch, &params)?;
    }
    Ok((params, history))
}
