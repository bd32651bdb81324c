use parity_forge::cost::Connectivity;
use parity_forge::layout::*;
use parity_forge::noisemodel::{NoiseParams, Regime};
use parity_forge::sim::*;
use proptest::prelude::*;
use std::collections::{HashMap, HashSet};

fn layout4() -> UnfoldedLayout {
    build_layout(4, Connectivity::LongRange, TargetMode::Ideal).unwrap()
}

fn config(p: f64, rounds: u32, mode: NcMode, decoder: DecoderKind) -> SimConfig {
    SimConfig {
        k: 2,
        noise: NoiseParams::new(p, f64::INFINITY, rounds, Regime::Scaled).unwrap(),
        nc_mode: mode,
        boundary: BoundaryMode::Logical,
        decoder,
        correction: Correction::Deferred,
    }
}

fn final_measure_start(c: &DistillationCircuit) -> usize {
    c.ops.iter().position(|op| matches!(op, CircuitOp::MeasureX { .. })).unwrap()
}

#[test]
fn detector_layout_for_m4() {
    let c = build_circuit(&layout4(), &config(1e-2, 10, NcMode::Twirl, DecoderKind::BpOsd)).unwrap();
    assert_eq!(c.n_checks(), 11);
    assert_eq!(c.n_detectors(), 110);
    assert_eq!(c.rounds_before, 5);
    assert_eq!(c.layer_qubits.len(), 15);
    let layers = c.ops.iter().filter(|op| matches!(op, CircuitOp::NonCliffordLayer { .. })).count();
    assert_eq!(layers, 1);
    let odd = build_circuit(&layout4(), &config(1e-2, 9, NcMode::Twirl, DecoderKind::BpOsd)).unwrap();
    assert_eq!(odd.rounds_before, 5);
}

#[test]
fn invalid_configs_rejected() {
    let l = layout4();
    assert!(build_circuit(&l, &config(1e-2, 1, NcMode::Twirl, DecoderKind::Auto)).is_err());
    let mut cfg = config(1e-2, 4, NcMode::Twirl, DecoderKind::Auto);
    cfg.k = 0;
    assert!(build_circuit(&l, &cfg).is_err());
    let mut bad = l.clone();
    bad.qubits[0].label = bad.qubits[1].label;
    assert!(build_circuit(&bad, &config(1e-2, 4, NcMode::Twirl, DecoderKind::Auto)).is_err());
}

#[test]
fn noiseless_circuit_is_deterministic() {
    let c = build_circuit(&layout4(), &config(0.0, 6, NcMode::Twirl, DecoderKind::Auto)).unwrap();
    let model = ErrorModel::from_circuit(&c);
    assert!(model.mechanisms.is_empty());
    let t = sample(&c, &model, 5000, 3);
    assert_eq!(
        t,
        Tally {
            shots: 5000,
            accepted: 5000,
            flips: 0
        }
    );
}

#[test]
fn composite_boundary_adds_checks() {
    let l = build_layout(5, Connectivity::NearestNeighbour, TargetMode::Ideal).unwrap();
    let mut cfg = config(1e-3, 2, NcMode::Twirl, DecoderKind::BpOsd);
    let logical = build_circuit(&l, &cfg).unwrap();
    cfg.boundary = BoundaryMode::Composite;
    let composite = build_circuit(&l, &cfg).unwrap();
    assert!(composite.n_checks() > logical.n_checks());
}

/// Oracle: every CNOT fault, pushed forward through the noiseless circuit, shows up
/// as a mechanism with the same symptoms and observable word.
#[test]
fn error_model_matches_forward_propagation() {
    let c = build_circuit(&layout4(), &config(1e-2, 4, NcMode::Twirl, DecoderKind::BpOsd)).unwrap();
    let model = ErrorModel::from_circuit(&c);
    let keys: HashSet<(Vec<u32>, u64)> = model.mechanisms.iter().map(|m| (m.symptoms.clone(), m.obs)).collect();
    let n_det = c.n_detectors() as u32;
    let mut checked = 0;
    for (i, op) in c.ops.iter().enumerate() {
        let CircuitOp::Cnot { control, target, .. } = op else {
            continue;
        };
        for pair in [[Pauli::X, Pauli::I], [Pauli::I, Pauli::X], [Pauli::X, Pauli::X]] {
            let e = propagate_fault(&c, Some(i), &[(*control, pair[0]), (*target, pair[1])]);
            let mut symptoms = e.detectors.clone();
            symptoms.extend(e.residual.iter().map(|r| r + n_det));
            if symptoms.is_empty() && e.obs == 0 {
                continue;
            }
            assert!(keys.contains(&(symptoms, e.obs)), "op {i} {pair:?}");
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn single_faults_are_corrected() {
    let c = build_circuit(&layout4(), &config(1e-2, 6, NcMode::Twirl, DecoderKind::Auto)).unwrap();
    let model = ErrorModel::from_circuit(&c);
    let mut decoder = WindowDecoder::new(&model, DecoderKind::Auto, 4);
    let n_det = model.n_detectors as u32;
    let split = |symptoms: &[u32]| {
        let rows: Vec<u32> = symptoms.iter().copied().filter(|&s| s < n_det).collect();
        let res: Vec<u32> = symptoms.iter().filter(|&&s| s >= n_det).map(|&s| s - n_det).collect();
        (rows, res)
    };
    // rows shared by faults with different residuals are ambiguous; skip those
    let mut residuals: HashMap<Vec<u32>, HashSet<Vec<u32>>> = HashMap::new();
    for m in &model.mechanisms {
        let (rows, res) = split(&m.symptoms);
        residuals.entry(rows).or_default().insert(res);
    }
    let mut checked = 0;
    for m in &model.mechanisms {
        let (rows, res) = split(&m.symptoms);
        if rows.is_empty() || residuals[&rows].len() > 1 {
            continue;
        }
        assert_eq!(decoder.decode(&rows), res, "symptoms {:?}", m.symptoms);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn post_selection_soundness() {
    let c = build_circuit(&layout4(), &config(1e-2, 2, NcMode::Twirl, DecoderKind::BpOsd)).unwrap();
    let model = ErrorModel::from_circuit(&c);
    let mut decoder = WindowDecoder::new(&model, DecoderKind::BpOsd, 4);
    let before = Some(final_measure_start(&c) - 1);
    let q = &c.layer_qubits;
    let run = |decoder: &mut WindowDecoder, set: &[usize]| {
        let paulis: Vec<(usize, Pauli)> = set.iter().map(|&i| (q[i], Pauli::Z)).collect();
        evaluate_effect(&c, &model, decoder, &propagate_fault(&c, before, &paulis), true)
    };
    let mut patterns = 0;
    for a in 0..q.len() {
        assert!(!run(&mut decoder, &[a]).accepted);
        patterns += 1;
        for b in a + 1..q.len() {
            assert!(!run(&mut decoder, &[a, b]).accepted, "{a} {b}");
            patterns += 1;
        }
    }
    assert_eq!(patterns, 120);
    let mut flips = 0;
    for a in 0..q.len() {
        for b in a + 1..q.len() {
            for d in b + 1..q.len() {
                let o = run(&mut decoder, &[a, b, d]);
                if o.accepted {
                    assert!(o.logical_flip);
                    flips += 1;
                }
            }
        }
    }
    assert_eq!(flips, 35);
}

#[test]
fn tallies_do_not_depend_on_batching() {
    let c = build_circuit(&layout4(), &config(2e-2, 3, NcMode::Twirl, DecoderKind::Lookup)).unwrap();
    let model = ErrorModel::from_circuit(&c);
    let shots = 20_000;
    let t = sample(&c, &model, shots, 11);
    let outcomes = sample_outcomes(&c, &model, shots, 11);
    assert_eq!(t.shots, shots);
    assert_eq!(t.accepted, outcomes.iter().filter(|o| o.accepted).count() as u64);
    assert_eq!(t.flips, outcomes.iter().filter(|o| o.logical_flip).count() as u64);
    assert_eq!(sample(&c, &model, shots, 11), t);
    assert_ne!(sample(&c, &model, shots, 12), t);
}

#[test]
fn proxy_t_bounds_twirl_from_above() {
    let l = layout4();
    let mut twirl = config(2e-2, 4, NcMode::Twirl, DecoderKind::Lookup);
    twirl.k = 3;
    let mut proxy = twirl;
    proxy.nc_mode = NcMode::ProxyT;
    let shots = 100_000;
    let et = estimate(&build_circuit(&l, &twirl).unwrap(), shots, 5);
    let ep = estimate(&build_circuit(&l, &proxy).unwrap(), shots, 5);
    assert!(ep.ci_high >= et.ci_low, "{ep:?} {et:?}");
    assert!(ep.p_logical >= et.p_logical, "{ep:?} {et:?}");
}

#[test]
fn rescale_rejects_bad_levels() {
    assert!(rescale_lower_bound(1e-6, 1, 1e-3).is_err());
    assert!(rescale_lower_bound(-1.0, 3, 1e-3).is_err());
    assert!(rescale_lower_bound(1e-6, 99, 1e-3).is_err());
}

proptest! {
    #[test]
    fn rescale_is_monotone_and_lower(a in 1e-12f64..1e-3, b in 1e-12f64..1e-3, k in 2u32..8, p in 1e-5f64..1e-2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let rl = rescale_lower_bound(lo, k, p).unwrap();
        let rh = rescale_lower_bound(hi, k, p).unwrap();
        prop_assert!(rl <= rh * (1.0 + 1e-12));
        prop_assert!(rh <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn wilson_contains_point_estimate(s in 0u64..1000, extra in 0u64..1000) {
        let n = s + extra;
        prop_assume!(n > 0);
        let (lo, hi) = wilson_interval(s, n);
        let phat = s as f64 / n as f64;
        prop_assert!(lo <= phat + 1e-12 && phat <= hi + 1e-12);
        prop_assert!(0.0 <= lo && hi <= 1.0);
    }
}
