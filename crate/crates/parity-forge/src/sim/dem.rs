use super::{CircuitOp, DistillationCircuit};
use crate::bits::BitVec;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// An independent fault: with probability `p` it flips the listed symptoms and
/// XORs `obs` into the observable word.
///
/// Symptom ids below `n_detectors` are detectors; id `n_detectors + i` marks a
/// residual X on layer qubit `i` at the moment of the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub p: f64,
    pub symptoms: Vec<u32>,
    pub obs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub n_detectors: usize,
    pub n_window: usize,
    /// Detectors per round.
    pub n_checks: usize,
    pub n_layer: usize,
    pub mechanisms: Vec<Mechanism>,
    /// Observable word flipped by a Z on each layer qubit right after the layer.
    pub layer_z: Vec<u64>,
}

fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

struct Collector {
    merged: BTreeMap<(Vec<u32>, u64), f64>,
}

impl Collector {
    fn add(&mut self, p: f64, symptoms: Vec<u32>, obs: u64) {
        if p <= 0.0 || (symptoms.is_empty() && obs == 0) {
            return;
        }
        let e = self.merged.entry((symptoms, obs)).or_insert(0.0);
        *e = *e + p - 2.0 * *e * p;
    }
}

impl ErrorModel {
    /// Compiles the circuit's noise into independent mechanisms by sweeping
    /// X and Z sensitivities backwards through the circuit.
    pub fn from_circuit(circuit: &DistillationCircuit) -> Self {
        let n = circuit.n_qubits;
        let n_det = circuit.n_detectors();
        let mut record_dets: Vec<Vec<u32>> = vec![Vec::new(); circuit.detectors.len()];
        for (d, recs) in circuit.detectors.iter().enumerate() {
            for &r in recs {
                record_dets[r].push(d as u32);
            }
        }
        let mut xs: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut zs: Vec<u64> = circuit.z_masks.clone();
        let mut layer_z = vec![0u64; circuit.layer_qubits.len()];
        let mut out = Collector { merged: BTreeMap::new() };
        for op in circuit.ops.iter().rev() {
            match op {
                CircuitOp::MeasureX { qubit, noise } => {
                    out.add(noise.z_component(), Vec::new(), zs[*qubit]);
                }
                CircuitOp::MeasureZ { qubit, record, noise } => {
                    xs[*qubit] = xor_sorted(&record_dets[*record], &xs[*qubit]);
                    zs[*qubit] = 0;
                    out.add(noise.p_x + noise.p_y, xs[*qubit].clone(), 0);
                }
                CircuitOp::ResetZero { qubit, noise } => {
                    out.add(noise.p_x + noise.p_y, xs[*qubit].clone(), 0);
                    xs[*qubit].clear();
                    zs[*qubit] = 0;
                }
                CircuitOp::ResetPlus { qubit, noise } => {
                    out.add(noise.z_component(), Vec::new(), zs[*qubit]);
                    xs[*qubit].clear();
                    zs[*qubit] = 0;
                }
                CircuitOp::Cnot { control, target, noise } => {
                    let (c, t) = (*control, *target);
                    for (ai, &a) in Pauli::ALL.iter().enumerate() {
                        for (bi, &b) in Pauli::ALL.iter().enumerate() {
                            let p = noise.prob(ai, bi);
                            if (ai, bi) == (0, 0) || p <= 0.0 {
                                continue;
                            }
                            let sx = match (a.has_x(), b.has_x()) {
                                (true, true) => xor_sorted(&xs[c], &xs[t]),
                                (true, false) => xs[c].clone(),
                                (false, true) => xs[t].clone(),
                                (false, false) => Vec::new(),
                            };
                            let oz = if a.has_z() { zs[c] } else { 0 } ^ if b.has_z() { zs[t] } else { 0 };
                            out.add(p, sx, oz);
                        }
                    }
                    let xt = xs[t].clone();
                    xs[c] = xor_sorted(&xs[c], &xt);
                    zs[t] ^= zs[c];
                }
                CircuitOp::NonCliffordLayer { qubits, noise, .. } => {
                    for (i, &q) in qubits.iter().enumerate() {
                        out.add(noise.p_x, xs[q].clone(), 0);
                        out.add(noise.p_y, xs[q].clone(), zs[q]);
                        out.add(noise.p_z, Vec::new(), zs[q]);
                        layer_z[i] = zs[q];
                        xs[q] = xor_sorted(&xs[q], &[(n_det + i) as u32]);
                    }
                }
            }
        }
        ErrorModel {
            n_detectors: n_det,
            n_window: circuit.n_window(),
            n_checks: circuit.n_checks(),
            n_layer: circuit.layer_qubits.len(),
            mechanisms: out
                .merged
                .into_iter()
                .map(|((symptoms, obs), p)| Mechanism { p, symptoms, obs })
                .collect(),
            layer_z,
        }
    }
}

/// Consequences of a fixed set of errors, before decoding and twirling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaultEffect {
    /// Fired detectors, sorted.
    pub detectors: Vec<u32>,
    /// Layer-qubit indices carrying an X error when the layer acts.
    pub residual: Vec<u32>,
    /// Observable word from Z errors that reach the final measurement.
    pub obs: u64,
}

impl FaultEffect {
    /// Fired detectors recorded before the layer.
    pub fn window(&self, n_window: usize) -> Vec<u32> {
        self.detectors.iter().copied().filter(|&d| (d as usize) < n_window).collect()
    }
}

/// Propagates Paulis inserted right after op `after_op` (or before the first op
/// when `None`) forward through the noiseless circuit. Channels attached to
/// measurements act before them, so a Pauli inserted just before a measurement
/// is placed with `after_op` pointing at the preceding op.
pub fn propagate_fault(circuit: &DistillationCircuit, after_op: Option<usize>, paulis: &[(usize, Pauli)]) -> FaultEffect {
    let n = circuit.n_qubits;
    let mut x = BitVec::zeros(n);
    let mut z = BitVec::zeros(n);
    for &(q, p) in paulis {
        if p.has_x() {
            x.flip(q);
        }
        if p.has_z() {
            z.flip(q);
        }
    }
    let start = after_op.map_or(0, |i| i + 1);
    let mut records = BitVec::zeros(circuit.detectors.len());
    let mut residual = Vec::new();
    let layer_index: std::collections::HashMap<usize, u32> = circuit.layer_qubits.iter().enumerate().map(|(i, &q)| (q, i as u32)).collect();
    let mut obs = 0u64;
    for op in &circuit.ops[start..] {
        match op {
            CircuitOp::ResetPlus { qubit, .. } | CircuitOp::ResetZero { qubit, .. } => {
                x.set(*qubit, false);
                z.set(*qubit, false);
            }
            CircuitOp::Cnot { control, target, .. } => {
                if x.get(*control) {
                    x.flip(*target);
                }
                if z.get(*target) {
                    z.flip(*control);
                }
            }
            CircuitOp::MeasureZ { qubit, record, .. } => {
                if x.get(*qubit) {
                    records.flip(*record);
                }
                z.set(*qubit, false);
            }
            CircuitOp::NonCliffordLayer { qubits, .. } => {
                for q in qubits {
                    if x.get(*q) {
                        residual.push(layer_index[q]);
                    }
                }
            }
            CircuitOp::MeasureX { .. } => {}
        }
    }
    for q in z.iter_ones() {
        obs ^= circuit.z_masks[q];
    }
    let detectors = circuit
        .detectors
        .iter()
        .enumerate()
        .filter(|(_, recs)| recs.iter().filter(|&&r| records.get(r)).count() % 2 == 1)
        .map(|(d, _)| d as u32)
        .collect();
    residual.sort_unstable();
    FaultEffect { detectors, residual, obs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_xor() {
        assert_eq!(xor_sorted(&[1, 3, 5], &[3, 4]), vec![1, 4, 5]);
        assert_eq!(xor_sorted(&[], &[2]), vec![2]);
    }
}
