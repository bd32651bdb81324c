use super::{DistillationCircuit, ErrorModel, FaultEffect, WindowDecoder};
use crate::codes::binomial;
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub accepted: bool,
    /// Meaningful only when `accepted`.
    pub logical_flip: bool,
}

impl ShotOutcome {
    fn from_obs(obs: u64) -> Self {
        let accepted = obs >> 1 == 0;
        ShotOutcome {
            accepted,
            logical_flip: accepted && obs & 1 == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub shots: u64,
    pub accepted: u64,
    pub flips: u64,
}

impl Tally {
    fn add(&mut self, o: ShotOutcome) {
        self.shots += 1;
        self.accepted += o.accepted as u64;
        self.flips += o.logical_flip as u64;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.shots += other.shots;
        self.accepted += other.accepted;
        self.flips += other.flips;
        self
    }
}

/// Mechanisms grouped by probability for geometric skipping.
struct Sampler {
    groups: Vec<(f64, Vec<usize>)>,
}

impl Sampler {
    fn new(model: &ErrorModel) -> Self {
        let mut by_p: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
        for (i, m) in model.mechanisms.iter().enumerate() {
            by_p.entry(m.p.to_bits()).or_default().push(i);
        }
        Sampler {
            groups: by_p.into_iter().map(|(b, v)| (f64::from_bits(b), v)).collect(),
        }
    }

    fn fire(&self, rng: &mut ChaCha8Rng, mut f: impl FnMut(usize)) {
        for (p, members) in &self.groups {
            if *p >= 1.0 {
                members.iter().for_each(|&i| f(i));
                continue;
            }
            let log_q = (-p).ln_1p();
            let mut i = 0usize;
            loop {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let skip = (u.ln() / log_q).floor();
                if skip >= (members.len() - i) as f64 {
                    break;
                }
                i += skip as usize;
                f(members[i]);
                i += 1;
            }
        }
    }
}

struct Worker<'a> {
    circuit: &'a DistillationCircuit,
    model: &'a ErrorModel,
    sampler: &'a Sampler,
    decoder: WindowDecoder,
    det: Vec<bool>,
    touched: Vec<u32>,
}

impl<'a> Worker<'a> {
    fn shot(&mut self, seed: u64, index: u64) -> ShotOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut obs = 0u64;
        let n_window = self.model.n_window as u32;
        let n_det = self.model.n_detectors as u32;
        let (model, det, touched) = (self.model, &mut self.det, &mut self.touched);
        self.sampler.fire(&mut rng, |i| {
            let mech = &model.mechanisms[i];
            obs ^= mech.obs;
            for &s in &mech.symptoms {
                if s < n_window || s >= n_det {
                    let s = if s >= n_det { s - n_det + n_window } else { s };
                    if !det[s as usize] {
                        touched.push(s);
                    }
                    det[s as usize] = !det[s as usize];
                }
            }
        });
        let mut syndrome = Vec::new();
        let mut residual = Vec::new();
        for &s in touched.iter() {
            if !std::mem::take(&mut det[s as usize]) {
                continue;
            }
            if s < n_window {
                syndrome.push(s);
            } else {
                residual.push(s - n_window);
            }
        }
        touched.clear();
        syndrome.sort_unstable();
        syndrome.dedup();
        residual.sort_unstable();
        residual.dedup();
        let correction = self.decoder.decode(&syndrome);
        let s = self.circuit.twirl_prob;
        for q in sym_diff(&residual, &correction) {
            if rng.gen::<f64>() < s {
                obs ^= model.layer_z[q as usize];
            }
        }
        ShotOutcome::from_obs(obs)
    }
}

fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().filter(|x| b.binary_search(x).is_err()).copied().collect();
    out.extend(b.iter().filter(|x| a.binary_search(x).is_err()));
    out.sort_unstable();
    out
}

/// Outcome of a fixed fault set: decode its window detectors, then convert every
/// remaining residual X into Z when `twirl_all` (or none of them otherwise).
pub fn evaluate_effect(
    circuit: &DistillationCircuit,
    model: &ErrorModel,
    decoder: &mut WindowDecoder,
    effect: &FaultEffect,
    twirl_all: bool,
) -> ShotOutcome {
    let correction = decoder.decode(&effect.window(circuit.n_window()));
    let mut obs = effect.obs;
    if twirl_all {
        for q in sym_diff(&effect.residual, &correction) {
            obs ^= model.layer_z[q as usize];
        }
    }
    ShotOutcome::from_obs(obs)
}

const CHUNK: u64 = 1 << 14;

fn worker_count() -> Option<usize> {
    std::env::var("PARITY_FORGE_THREADS").ok()?.parse().ok().filter(|&n: &usize| n > 0)
}

fn run<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match worker_count() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Samples `shots` shots. Shot `i` draws from stream `i` of a ChaCha8 generator
/// seeded with `seed`, so tallies do not depend on the number of workers.
pub fn sample(circuit: &DistillationCircuit, model: &ErrorModel, shots: u64, seed: u64) -> Tally {
    let sampler = Sampler::new(model);
    let decoder = WindowDecoder::new(model, circuit.config.decoder, circuit.m);
    let n_sym = model.n_window + model.n_layer;
    let chunks: Vec<u64> = (0..shots.div_ceil(CHUNK)).collect();
    run(|| {
        chunks
            .par_iter()
            .map_init(
                || Worker {
                    circuit,
                    model,
                    sampler: &sampler,
                    decoder: decoder.clone(),
                    det: vec![false; n_sym],
                    touched: Vec::new(),
                },
                |w, &c| {
                    let mut t = Tally::default();
                    for i in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                        t.add(w.shot(seed, i));
                    }
                    t
                },
            )
            .reduce(Tally::default, Tally::merge)
    })
}

/// Per-shot outcomes, for small runs.
pub fn sample_outcomes(circuit: &DistillationCircuit, model: &ErrorModel, shots: u64, seed: u64) -> Vec<ShotOutcome> {
    let sampler = Sampler::new(model);
    let mut w = Worker {
        circuit,
        model,
        sampler: &sampler,
        decoder: WindowDecoder::new(model, circuit.config.decoder, circuit.m),
        det: vec![false; model.n_window + model.n_layer],
        touched: Vec::new(),
    };
    (0..shots).map(|i| w.shot(seed, i)).collect()
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub shots: u64,
    pub accepted: u64,
    pub flips: u64,
    pub p_accept: f64,
    pub p_accept_ci: (f64, f64),
    pub p_logical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_tally(t: Tally) -> Self {
        let p_logical = if t.accepted == 0 { 0.0 } else { t.flips as f64 / t.accepted as f64 };
        let (ci_low, ci_high) = wilson_interval(t.flips, t.accepted);
        Estimate {
            shots: t.shots,
            accepted: t.accepted,
            flips: t.flips,
            p_accept: if t.shots == 0 { 0.0 } else { t.accepted as f64 / t.shots as f64 },
            p_accept_ci: wilson_interval(t.accepted, t.shots),
            p_logical,
            ci_low,
            ci_high,
        }
    }
}

/// Samples and summarizes with Wilson intervals.
pub fn estimate(circuit: &DistillationCircuit, shots: u64, seed: u64) -> Estimate {
    let model = ErrorModel::from_circuit(circuit);
    Estimate::from_tally(sample(circuit, &model, shots, seed))
}

/// Lower bound from a proxy-T measurement: recovers `p_eff` from the cubic law,
/// rescales the part not due to last-round CNOT errors by `2^(2-k)` and re-applies
/// the law.
///
/// # Errors
///
/// `InvalidParameter` for `k < 2`, negative inputs, or `k` beyond the level range.
pub fn rescale_lower_bound(p_measured: f64, k: u32, p: f64) -> Result<f64> {
    if k < 2 || k > crate::noisemodel::MAX_K {
        return invalid(format!("level k = {k} outside [2, {}]", crate::noisemodel::MAX_K));
    }
    if !(p_measured >= 0.0) || !(p >= 0.0) {
        return invalid("probabilities must be non-negative");
    }
    let n = (1u64 << (k + 2)) - 1;
    let c = binomial(n, 2).ok_or_else(|| crate::Error::InvalidParameter("level too large".into()))? as f64 / 3.0;
    let p_eff = (p_measured / c).cbrt();
    let scale = 2f64.powi(2 - k as i32);
    let cnot = 2.0 * p / 3.0 * scale;
    let residual = (p_eff - cnot).max(0.0);
    let p_eff_new = residual * scale + cnot;
    Ok(c * p_eff_new.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo < 1e-12);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn rescale_examples() {
        let p = 1e-3;
        let c4 = 63.0 * 62.0 / 2.0 / 3.0;
        let measured = c4 * 1e-9;
        let out = rescale_lower_bound(measured, 4, p).unwrap();
        let expect = c4 * (3.75e-4f64).powi(3);
        assert!((out - expect).abs() / expect < 1e-9, "{out} vs {expect}");
        assert!((rescale_lower_bound(1e-6, 2, p).unwrap() - 1e-6).abs() < 1e-18);
    }
}
