//! Closed-form error analytics for parity-unfolded distillation.
//!
//! All rates are per distillation attempt at hierarchy level `k`, where the layout
//! is `uRM(k + 2)` and the distilled state is `|Z_k>`.

use crate::codes::binomial;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest level accepted by the analytics.
pub const MAX_K: u32 = 30;

/// How the non-Clifford gate noise depends on the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `q(k) = p/3` for every level.
    Constant,
    /// `q(k) = (p/3) 2^(2-k)`, proportional to the rotation angle.
    Scaled,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(Regime::Constant),
            "scaled" => Ok(Regime::Scaled),
            other => invalid(format!("unknown regime '{other}'")),
        }
    }
}

/// Physical noise parameters. `eta = f64::INFINITY` means pure bit-flip noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p: f64,
    #[serde(with = "eta_serde")]
    pub eta: f64,
    pub n_rounds: u32,
    pub regime: Regime,
}

mod eta_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => super::parse_eta(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a bias value; `inf`/`infinity` give infinite bias.
pub fn parse_eta(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad eta '{s}'"))),
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p: 1e-3,
            eta: 1e5,
            n_rounds: 10,
            regime: Regime::Scaled,
        }
    }
}

impl NoiseParams {
    pub fn new(p: f64, eta: f64, n_rounds: u32, regime: Regime) -> Result<Self> {
        let params = NoiseParams { p, eta, n_rounds, regime };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return invalid(format!("p = {} outside [0, 1]", self.p));
        }
        if self.eta.is_nan() || self.eta <= 0.0 {
            return invalid(format!("eta = {} must be positive", self.eta));
        }
        if self.n_rounds == 0 {
            return invalid("n_rounds must be at least 1");
        }
        Ok(())
    }
}

/// Single-qubit Pauli channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel1 {
    pub p_i: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl PauliChannel1 {
    pub fn from_xyz(p_x: f64, p_y: f64, p_z: f64) -> Result<Self> {
        let ch = PauliChannel1 {
            p_i: 1.0 - p_x - p_y - p_z,
            p_x,
            p_y,
            p_z,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_i, self.p_x, self.p_y, self.p_z];
        if ps.iter().any(|&x| !(x >= -1e-15)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return invalid(format!("not a probability vector: {ps:?}"));
        }
        Ok(())
    }

    /// Pure bit flips with probability `p`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        Self::from_xyz(p, 0.0, 0.0)
    }

    /// Dominant bit flips `p`, plus `p/eta` split evenly between `Y` and `Z`.
    pub fn biased(p: f64, eta: f64) -> Result<Self> {
        let minority = if eta.is_infinite() { 0.0 } else { p / eta };
        Self::from_xyz(p, minority / 2.0, minority / 2.0)
    }

    pub fn depolarizing(q: f64) -> Result<Self> {
        Self::from_xyz(q, q, q)
    }

    /// Probability that the channel applies an operator anticommuting with `X`.
    pub fn z_component(&self) -> f64 {
        self.p_y + self.p_z
    }
}

/// Two-qubit Pauli channel, indexed `probs[4 * a + b]` with `a, b` in `I, X, Y, Z` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel2 {
    pub probs: [f64; 16],
}

impl PauliChannel2 {
    pub fn validate(&self) -> Result<()> {
        if self.probs.iter().any(|&x| !(x >= -1e-15)) || (self.probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return invalid("two-qubit channel is not a probability vector");
        }
        Ok(())
    }

    /// `p_IX = p_XI = p_XX = p/3` with every other error `p/(12 eta)`.
    pub fn biased(p: f64, eta: f64) -> Result<Self> {
        let minority = if eta.is_infinite() { 0.0 } else { p / eta / 12.0 };
        let mut probs = [minority; 16];
        probs[0] = 0.0;
        for idx in [1, 4, 5] {
            probs[idx] = p / 3.0;
        }
        probs[0] = 1.0 - probs.iter().sum::<f64>();
        let ch = PauliChannel2 { probs };
        ch.validate()?;
        Ok(ch)
    }

    /// The infinite-bias instance.
    pub fn infinite_bias(p: f64) -> Result<Self> {
        Self::biased(p, f64::INFINITY)
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.probs[4 * a + b]
    }
}

fn check_k(k: u32) -> Result<()> {
    if !(1..=MAX_K).contains(&k) {
        return invalid(format!("level k = {k} outside [1, {MAX_K}]"));
    }
    Ok(())
}

/// Per-component depolarizing strength of the non-Clifford gate.
pub fn q_of_k(k: u32, params: &NoiseParams) -> Result<f64> {
    check_k(k)?;
    params.validate()?;
    Ok(match params.regime {
        Regime::Constant => params.p / 3.0,
        Regime::Scaled => params.p / 3.0 * 2f64.powi(2 - k as i32),
    })
}

/// `sin^2(pi / 2^k)`: chance that a residual X turns into Y at the non-Clifford layer.
pub fn conversion_prob(k: u32) -> f64 {
    match k {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => (PI / 2f64.powi(k as i32)).sin().powi(2),
    }
}

/// Probability of a Z error on a data qubit before its final X measurement.
pub fn p_eff(k: u32, params: &NoiseParams) -> Result<f64> {
    let q = q_of_k(k, params)?;
    let bias_term = if params.eta.is_infinite() {
        0.0
    } else {
        params.n_rounds as f64 / params.eta
    };
    Ok(params.p * (2.0 / 3.0 * conversion_prob(k) + bias_term) + 2.0 * q)
}

/// Number of undetectable weight-3 Z patterns, `C(2^(k+2) - 1, 2) / 3`.
pub fn harmful_triples(k: u32) -> Result<f64> {
    check_k(k)?;
    let n = (1u64 << (k + 2)) - 1;
    Ok(match binomial(n, 2) {
        Some(c) => c as f64 / 3.0,
        None => (n as f64) * (n as f64 - 1.0) / 6.0,
    })
}

/// Distillation failure for a given effective rate.
pub fn p_dist_from_eff(k: u32, p_eff: f64) -> Result<f64> {
    Ok(harmful_triples(k)? * p_eff.powi(3))
}

pub fn p_dist(k: u32, params: &NoiseParams) -> Result<f64> {
    p_dist_from_eff(k, p_eff(k, params)?)
}

/// Failure of a deterministic `Z_k` including the chain of lower-level corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateError {
    pub p_gate: f64,
    /// `2 (1 - 2^(1-k)) max_j p_dist(j)`.
    pub tight_bound: f64,
    /// `2 max_j p_dist(j)`.
    pub bound: f64,
}

pub fn p_gate(k: u32, params: &NoiseParams) -> Result<GateError> {
    if k < 2 {
        return invalid("p_gate needs k >= 2");
    }
    check_k(k)?;
    let mut total = 0.0;
    let mut max = 0.0f64;
    for j in 2..=k {
        let d = p_dist(j, params)?;
        total += d / 2f64.powi((k - j) as i32);
        max = max.max(d);
    }
    let tight_bound = 2.0 * (1.0 - 2f64.powi(1 - k as i32)) * max;
    let out = GateError {
        p_gate: total,
        tight_bound,
        bound: 2.0 * max,
    };
    if out.p_gate > out.tight_bound * (1.0 + 1e-12) {
        return Err(Error::InternalInconsistency(format!(
            "p_gate {} exceeds its bound {}",
            out.p_gate, out.tight_bound
        )));
    }
    Ok(out)
}

/// Chance that applying `Z_k` needs a correction at level `k'`.
pub fn teleport_correction_prob(k: u32, k_prime: u32) -> Result<f64> {
    if k_prime > k {
        return invalid(format!("k' = {k_prime} exceeds k = {k}"));
    }
    Ok(0.5f64.powi((k - k_prime) as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub p_success: f64,
    pub n_attempts: f64,
}

/// Leading-order acceptance `1 - n_data p_eff` and expected attempts.
pub fn acceptance_from_eff(n_data: u64, p_eff: f64) -> Result<Acceptance> {
    let load = n_data as f64 * p_eff;
    if load >= 1.0 {
        return Err(Error::OutOfRegime(format!(
            "n_data * p_eff = {load} >= 1; leading-order acceptance is invalid"
        )));
    }
    let p_success = 1.0 - load;
    Ok(Acceptance {
        p_success,
        n_attempts: 1.0 / p_success,
    })
}

pub fn acceptance_prob(k: u32, n_data: u64, params: &NoiseParams) -> Result<Acceptance> {
    acceptance_from_eff(n_data, p_eff(k, params)?)
}

/// One row of the analytics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsRow {
    pub k: u32,
    pub p_eff: f64,
    pub p_dist: f64,
    pub p_gate: f64,
}

pub fn analytics_table(ks: impl IntoIterator<Item = u32>, params: &NoiseParams) -> Result<Vec<AnalyticsRow>> {
    ks.into_iter()
        .map(|k| {
            Ok(AnalyticsRow {
                k,
                p_eff: p_eff(k, params)?,
                p_dist: p_dist(k, params)?,
                p_gate: if k >= 2 { p_gate(k, params)?.p_gate } else { f64::NAN },
            })
        })
        .collect()
}

/// Level minimising `p_dist` over `ks` (first minimum on ties).
pub fn k_threshold(ks: impl IntoIterator<Item = u32>, params: &NoiseParams) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for k in ks {
        let d = p_dist(k, params)?;
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| Error::InvalidParameter("empty k range".into()))
}
