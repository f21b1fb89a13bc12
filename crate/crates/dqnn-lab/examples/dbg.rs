use dqnn_lab::dqnn::*;
use dqnn_lab::linalg::*;
use dqnn_lab::random::*;

// full-register oracle, standalone copy for debugging
fn oracle(net: &Dqnn, layer: usize, perceptron: usize, pairs: &[TrainingPair], lr: f64) -> ComplexMatrix {
    let widths = net.topology().widths().to_vec();
    let total: usize = widths.iter().sum();
    let starts: Vec<usize> = widths.iter().scan(0, |acc, &w| { let s = *acc; *acc += w; Some(s) }).collect();
    let mut ordered: Vec<ComplexMatrix> = Vec::new();
    let mut split_index = 0usize;
    for t in 0..net.num_transitions() {
        for p in 0..widths[t + 1] {
            let mut targets: Vec<usize> = (starts[t]..starts[t] + widths[t]).collect();
            targets.push(starts[t + 1] + p);
            ordered.push(ComplexMatrix::embed_operator(&net.unitaries()[t][p], &targets, total).unwrap());
            if t + 1 < layer || (t + 1 == layer && p + 1 <= perceptron) { split_index += 1; }
        }
    }
    let keep: Vec<usize> = (starts[layer-1]..starts[layer-1]+widths[layer-1])
        .chain(std::iter::once(starts[layer] + perceptron - 1)).collect();
    let discard: Vec<usize> = (0..total).filter(|q| !keep.contains(q)).collect();
    let kept_dim = 1usize << keep.len();
    let mut sum = ComplexMatrix::zeros(kept_dim, kept_dim);
    for pair in pairs {
        let proj = pair.input.projector();
        let extra = 1usize << (total - widths[0]);
        let dim = 1usize << total;
        let mut fwd = ComplexMatrix::zeros(dim, dim);
        for i in 0..proj.rows() { for j in 0..proj.cols() { fwd.set(i*extra, j*extra, proj.at(i,j)); } }
        for u in &ordered[..split_index] { fwd = u.mul(&fwd).mul(&u.dagger()); }
        let mut bwd = ComplexMatrix::identity(1 << (total - *widths.last().unwrap())).kron(&pair.target.projector());
        for u in ordered[split_index..].iter().rev() { bwd = u.dagger().mul(&bwd).mul(u); }
        let m = fwd.commutator(&bwd);
        sum = sum.add(&m.partial_trace_qubits(total, &discard).unwrap());
    }
    let factor = lr * (1u64 << widths[layer-1]) as f64 / pairs.len() as f64;
    sum.scaled(C64::new(0.0, factor))
}

fn main() {
    let mut rng = RngStream::new(9);
    for widths in [vec![1usize,1], vec![1,2,1], vec![2,1]] {
        let net = Dqnn::init_random(NetworkTopology::new(widths.clone()).unwrap(), &mut rng);
        let y = haar_unitary(1 << widths[0], &mut rng);
        let pairs = make_unitary_dataset(&y, 3, &mut rng).unwrap();
        let cache = net.propagate(&pairs).unwrap();
        for layer in 1..=net.num_transitions() {
            for p in 1..=widths[layer] {
                let got = net.update_matrix(layer, p, &cache, 1.0).unwrap();
                let want = oracle(&net, layer, p, &pairs, 1.0);
                println!("{widths:?} l={layer} j={p}: diff={:.3e}  |got|={:.3}  |want|={:.3}",
                    got.max_abs_diff(&want), got.max_abs_entry(), want.max_abs_entry());
            }
        }
    }
}
