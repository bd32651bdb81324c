//! Pauli-frame Monte-Carlo of the unfolded distillation circuit.
//!
//! The circuit resets every data qubit in `|+>`, measures the Z-type checks for
//! `ceil(n_rounds/2)` rounds, applies the non-Clifford layer to every labelled qubit
//! except the target, measures the checks for the remaining rounds and finally
//! measures the code qubits in the X basis.
//!
//! Errors are compiled once into an [`ErrorModel`] of independent fault mechanisms.
//! Each shot samples mechanisms and decodes the detector record into an estimate
//! of the X errors present on layer qubits when the layer acts. Wherever the
//! estimate is wrong, the layer turns the X into a Z error with the twirl
//! probability. The final Z errors decide post-selection and the logical flip.

mod decoder;
mod dem;
mod sample;
mod trellis;

pub use decoder::{DecoderKind, WindowDecoder};
pub use dem::{propagate_fault, ErrorModel, FaultEffect, Mechanism, Pauli};
pub use sample::{estimate, evaluate_effect, rescale_lower_bound, sample, sample_outcomes, wilson_interval, Estimate, ShotOutcome, Tally};

use crate::error::{invalid, Result};
use crate::layout::{StabilizerKind, UnfoldedLayout};
use crate::noisemodel::{conversion_prob, q_of_k, NoiseParams, PauliChannel1, PauliChannel2};
use crate::verify::check_label_completeness;
use serde::{Deserialize, Serialize};

/// How the non-Clifford layer acts on residual X errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NcMode {
    /// X becomes Y with probability `sin^2(pi/2^k)`.
    Twirl,
    /// X becomes Y with probability 1/2, as if every layer gate were a T gate.
    ProxyT,
}

impl std::str::FromStr for NcMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "twirl" => Ok(NcMode::Twirl),
            "proxy-t" | "proxyt" | "proxy_t" => Ok(NcMode::ProxyT),
            other => invalid(format!("unknown non-Clifford mode '{other}'")),
        }
    }
}

/// Which boundary checks are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Each boundary-logical stabilizer is measured by one ancilla.
    #[default]
    Logical,
    /// Composite parts are measured separately.
    Composite,
}

impl std::str::FromStr for BoundaryMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logical" => Ok(BoundaryMode::Logical),
            "composite" => Ok(BoundaryMode::Composite),
            other => invalid(format!("unknown boundary mode '{other}'")),
        }
    }
}

/// Which detectors decide the correction of X errors present at the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// The full detector record; an X error found before the layer is undone
    /// after it together with the rotation it caused.
    #[default]
    Deferred,
    /// Only the detectors recorded before the layer; the correction is applied
    /// ahead of the layer.
    Causal,
}

impl std::str::FromStr for Correction {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deferred" => Ok(Correction::Deferred),
            "causal" => Ok(Correction::Causal),
            other => invalid(format!("unknown correction mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: u32,
    pub noise: NoiseParams,
    pub nc_mode: NcMode,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub correction: Correction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum CircuitOp {
    ResetPlus {
        qubit: usize,
        noise: PauliChannel1,
    },
    ResetZero {
        qubit: usize,
        noise: PauliChannel1,
    },
    Cnot {
        control: usize,
        target: usize,
        noise: PauliChannel2,
    },
    /// Z-basis ancilla measurement writing measurement record `record`; the channel
    /// acts just before the measurement.
    MeasureZ {
        qubit: usize,
        record: usize,
        noise: PauliChannel1,
    },
    NonCliffordLayer {
        k: u32,
        qubits: Vec<usize>,
        noise: PauliChannel1,
    },
    /// Final X-basis measurement; the channel acts just before the measurement.
    MeasureX {
        qubit: usize,
        noise: PauliChannel1,
    },
}

/// One measured check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// Index into the layout's stabilizers.
    pub stabilizer: usize,
    pub ancilla: usize,
    /// Data qubits in CNOT order.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistillationCircuit {
    pub m: u32,
    pub k: u32,
    pub n_rounds: u32,
    pub rounds_before: u32,
    pub n_qubits: usize,
    pub checks: Vec<Check>,
    pub ops: Vec<CircuitOp>,
    /// Measurement records compared by each detector. Detector `r * n_checks + c`
    /// compares check `c` in rounds `r - 1` and `r` (round 0 stands alone).
    pub detectors: Vec<Vec<usize>>,
    /// Qubits the non-Clifford layer acts on.
    pub layer_qubits: Vec<usize>,
    /// Observable bits flipped by a Z error on each qubit at the end of the
    /// circuit: bit `j >= 1` is volume stabilizer `j`, bit 0 the logical.
    pub z_masks: Vec<u64>,
    pub twirl_prob: f64,
    pub config: SimConfig,
}

impl DistillationCircuit {
    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn n_detectors(&self) -> usize {
        self.detectors.len()
    }

    /// Detectors the decoder sees: ids `0..n_window()`.
    pub fn n_window(&self) -> usize {
        match self.config.correction {
            Correction::Deferred => self.detectors.len(),
            Correction::Causal => self.rounds_before as usize * self.checks.len(),
        }
    }
}

/// Orders a check's support clockwise starting from the north-west.
fn cnot_order(layout: &UnfoldedLayout, support: &[usize]) -> Vec<usize> {
    let n = support.len() as f64;
    let (cr, cc) = support.iter().fold((0.0, 0.0), |(r, c), &q| {
        (r + layout.qubits[q].row / n, c + layout.qubits[q].col / n)
    });
    let key = |q: usize| {
        let (dy, dx) = (cr - layout.qubits[q].row, layout.qubits[q].col - cc);
        // clockwise angle from north, shifted so that north-west comes first
        let a = (dx.atan2(dy) + std::f64::consts::FRAC_PI_4).rem_euclid(std::f64::consts::TAU);
        (a * 1e9).round() as i64
    };
    let mut out = support.to_vec();
    out.sort_by_key(|&q| (key(q), q));
    out
}

/// Builds the circuit for `layout` and `config`.
///
/// # Errors
///
/// `InvalidParameter` for fewer than two rounds, `k = 0`, or a layout whose labels
/// are incomplete.
pub fn build_circuit(layout: &UnfoldedLayout, config: &SimConfig) -> Result<DistillationCircuit> {
    let noise = config.noise;
    noise.validate()?;
    if noise.n_rounds < 2 {
        return invalid("n_rounds must be at least 2");
    }
    if config.k == 0 {
        return invalid("level k must be at least 1");
    }
    if !check_label_completeness(layout).passed {
        return invalid("layout labels are incomplete; run verify first");
    }
    let q = q_of_k(config.k, &noise)?;
    let one = PauliChannel1::biased(noise.p, noise.eta)?;
    let two = PauliChannel2::biased(noise.p, noise.eta)?;
    let depol = PauliChannel1::depolarizing(q)?;

    let chosen: Vec<usize> = match config.boundary {
        BoundaryMode::Logical => layout
            .stabilizers
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                matches!(
                    s.kind,
                    StabilizerKind::Bulk | StabilizerKind::BoundaryLogical | StabilizerKind::Repetition
                )
            })
            .map(|(i, _)| i)
            .collect(),
        BoundaryMode::Composite => layout.measured_stabilizers(),
    };
    let mut n_qubits = layout.qubits.len();
    let checks: Vec<Check> = chosen
        .into_iter()
        .map(|s| {
            let spec = &layout.stabilizers[s];
            let ancilla = spec.ancilla.unwrap_or_else(|| {
                n_qubits += 1;
                n_qubits - 1
            });
            Check {
                stabilizer: s,
                ancilla,
                support: cnot_order(layout, &spec.support),
            }
        })
        .collect();

    let interface = layout.target_interface();
    let layer_qubits: Vec<usize> = layout.labelled_qubits().into_iter().filter(|&q| Some(q) != interface).collect();
    let mut z_masks = vec![0u64; n_qubits];
    for node in &layout.qubits {
        if let Some(l) = node.label {
            z_masks[node.id] = l.0;
        }
    }
    for q in layout.repetition_chain() {
        z_masks[q] = 1;
    }

    let data = layout.data_qubits();
    let n_checks = checks.len();
    let n_rounds = noise.n_rounds;
    let rounds_before = n_rounds.div_ceil(2);
    let max_w = checks.iter().map(|c| c.support.len()).max().unwrap_or(0);
    let mut ops = Vec::new();
    for &d in &data {
        ops.push(CircuitOp::ResetPlus { qubit: d, noise: one });
    }
    for r in 0..n_rounds {
        if r == rounds_before {
            ops.push(CircuitOp::NonCliffordLayer {
                k: config.k,
                qubits: layer_qubits.clone(),
                noise: depol,
            });
        }
        for c in &checks {
            ops.push(CircuitOp::ResetZero {
                qubit: c.ancilla,
                noise: one,
            });
        }
        for step in 0..max_w {
            for c in &checks {
                if let Some(&d) = c.support.get(step) {
                    ops.push(CircuitOp::Cnot {
                        control: d,
                        target: c.ancilla,
                        noise: two,
                    });
                }
            }
        }
        for (ci, c) in checks.iter().enumerate() {
            ops.push(CircuitOp::MeasureZ {
                qubit: c.ancilla,
                record: r as usize * n_checks + ci,
                noise: one,
            });
        }
    }
    let chain = layout.repetition_chain();
    for &d in &data {
        if Some(d) != interface && !chain.contains(&d) {
            ops.push(CircuitOp::MeasureX { qubit: d, noise: one });
        }
    }
    let detectors = (0..n_rounds as usize * n_checks)
        .map(|i| if i < n_checks { vec![i] } else { vec![i - n_checks, i] })
        .collect();
    let twirl_prob = match config.nc_mode {
        NcMode::Twirl => conversion_prob(config.k),
        NcMode::ProxyT => 0.5,
    };
    Ok(DistillationCircuit {
        m: layout.m,
        k: config.k,
        n_rounds,
        rounds_before,
        n_qubits,
        checks,
        ops,
        detectors,
        layer_qubits,
        z_masks,
        twirl_prob,
        config: *config,
    })
}
