//! Single-qubit synthesis over `C2 = {Clifford, T}` and `C3 = {Clifford, T, sqrt(T)}`.
//!
//! All unique unitaries up to a truncation cost are enumerated into cost blocks.
//! Budgets within the truncation are searched exhaustively; larger budgets split
//! into partitionings whose blocks form a chain, sampled from the conditional
//! distributions of `|Tr(U^dag V)|^2`.
//!
//! Costs are counted in half units so that `sqrt(T)` at `5/2` stays exact.

mod blocks;
mod chain;
mod nearest;

pub use blocks::{enumerate_blocks, partitionings, Blocks, CostBlock, DEFAULT_MAX_ELEMENTS};
pub use chain::{synthesize, Backend};

use crate::cost::{cost_native, CostParams};
use crate::error::{invalid, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [Complex64; 4],
}

impl Unitary2 {
    pub fn new(m: [Complex64; 4]) -> Self {
        Unitary2 { m }
    }

    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    fn diag(a: Complex64, d: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Unitary2 { m: [a, z, z, d] }
    }

    /// `diag(e^{-i theta/2}, e^{i theta/2})`.
    pub fn rz(theta: f64) -> Self {
        Self::diag(Complex64::from_polar(1.0, -theta / 2.0), Complex64::from_polar(1.0, theta / 2.0))
    }

    /// Haar-random unitary from a normalised Gaussian quaternion.
    pub fn haar(rng: &mut impl Rng) -> Self {
        let mut q = [0.0f64; 4];
        for x in &mut q {
            *x = rng.sample(StandardNormal);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= n);
        Self::from_quaternion(q)
    }

    /// The SU(2) matrix `[[a, b], [-b*, a*]]` with `a = q0 + i q1`, `b = q2 + i q3`.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let a = Complex64::new(q[0], q[1]);
        let b = Complex64::new(q[2], q[3]);
        Unitary2 {
            m: [a, b, -b.conj(), a.conj()],
        }
    }

    pub fn mul(&self, o: &Unitary2) -> Unitary2 {
        let (a, b) = (&self.m, &o.m);
        Unitary2 {
            m: [
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ],
        }
    }

    pub fn adjoint(&self) -> Unitary2 {
        let m = &self.m;
        Unitary2 {
            m: [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn scale(&self, c: Complex64) -> Unitary2 {
        Unitary2 { m: self.m.map(|x| x * c) }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.mul(&self.adjoint());
        let id = Unitary2::identity();
        p.m.iter().zip(&id.m).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Global phase chosen so that the first entry of modulus above `1e-9` is real
    /// and positive.
    pub fn canonical(&self) -> Unitary2 {
        match self.m.iter().find(|x| x.norm() > 1e-9) {
            Some(x) => self.scale(x.conj() / x.norm()),
            None => *self,
        }
    }

    /// Unit quaternion of the SU(2) representative, sign fixed so that the first
    /// coordinate above `1e-7` in magnitude is positive.
    pub fn quaternion(&self) -> [f64; 4] {
        let d = self.det();
        let s = self.scale(Complex64::from_polar(1.0, -d.arg() / 2.0));
        let q = [s.m[0].re, s.m[0].im, s.m[1].re, s.m[1].im];
        canonical_sign(q)
    }

    pub fn from_word(word: &[Gate]) -> Unitary2 {
        word.iter().fold(Unitary2::identity(), |acc, g| acc.mul(&g.matrix()))
    }
}

pub(crate) fn canonical_sign(q: [f64; 4]) -> [f64; 4] {
    match q.iter().find(|x| x.abs() > 1e-7) {
        Some(&x) if x < 0.0 => q.map(|v| -v),
        _ => q,
    }
}

/// Hamilton product of quaternions `(w, x, y, z)` in the convention matching
/// [`Unitary2::from_quaternion`]: `q(AB) = qmul(q(A), q(B))`.
pub(crate) fn qmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let (ar, ai, br, bi) = (
        Complex64::new(a[0], a[1]),
        Complex64::new(a[2], a[3]),
        Complex64::new(b[0], b[1]),
        Complex64::new(b[2], b[3]),
    );
    // [[p, r], [-r*, p*]] [[m, s], [-s*, m*]]
    let p = ar * br - ai * bi.conj();
    let r = ar * bi + ai * br.conj();
    [p.re, p.im, r.re, r.im]
}

pub(crate) fn qconj(a: [f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

pub(crate) fn qdot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// `sqrt(1 - |Tr(V U^dag)|^2 / 4)`, clamped to `[0, 1]`.
pub fn trace_distance(u: &Unitary2, v: &Unitary2) -> f64 {
    let t = v.mul(&u.adjoint()).trace().norm();
    (1.0 - t * t / 4.0).max(0.0).sqrt().min(1.0)
}

/// A gate in a synthesized word. `Phase(j)` is `Z_j = diag(1, e^{i pi / 2^j})`:
/// `Phase(2)` is `T`, `Phase(3)` is `sqrt(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    H,
    S,
    X,
    Y,
    Z,
    Phase(u32),
}

impl Gate {
    pub fn matrix(&self) -> Unitary2 {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::H => Unitary2::new([c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]),
            Gate::S => Unitary2::diag(c(1.0, 0.0), c(0.0, 1.0)),
            Gate::X => Unitary2::new([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            Gate::Y => Unitary2::new([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            Gate::Z => Unitary2::diag(c(1.0, 0.0), c(-1.0, 0.0)),
            Gate::Phase(j) => Unitary2::diag(c(1.0, 0.0), Complex64::from_polar(1.0, PI / 2f64.powi(*j as i32))),
        }
    }

    /// Hierarchy level of a non-Clifford gate.
    pub fn level(&self) -> Option<u32> {
        match self {
            Gate::Phase(j) if *j >= 2 => Some(*j),
            _ => None,
        }
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gate::H => write!(f, "H"),
            Gate::S => write!(f, "S"),
            Gate::X => write!(f, "X"),
            Gate::Y => write!(f, "Y"),
            Gate::Z => write!(f, "Z"),
            Gate::Phase(0) => write!(f, "Z"),
            Gate::Phase(1) => write!(f, "S"),
            Gate::Phase(2) => write!(f, "T"),
            Gate::Phase(3) => write!(f, "sqrtT"),
            Gate::Phase(j) => write!(f, "Z{j}"),
        }
    }
}

pub fn format_word(word: &[Gate]) -> String {
    word.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses a space-separated word such as `"H T S sqrtT"`.
pub fn parse_word(s: &str) -> Result<Vec<Gate>> {
    s.split_whitespace()
        .map(|t| match t {
            "H" => Ok(Gate::H),
            "S" => Ok(Gate::S),
            "X" => Ok(Gate::X),
            "Y" => Ok(Gate::Y),
            "Z" => Ok(Gate::Z),
            "T" => Ok(Gate::Phase(2)),
            "sqrtT" => Ok(Gate::Phase(3)),
            other => match other.strip_prefix('Z').and_then(|j| j.parse().ok()) {
                Some(j) => Ok(Gate::Phase(j)),
                None => invalid(format!("unknown gate '{other}'")),
            },
        })
        .collect()
}

/// Clifford gates at cost 0 and non-Clifford `Z_j`, `2 <= j <= k`, with costs in
/// half units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSet {
    pub k: u32,
    /// `(level, cost in half units)`, ascending level.
    pub costs: Vec<(u32, u32)>,
}

impl GateSet {
    pub fn c2() -> Self {
        GateSet { k: 2, costs: vec![(2, 2)] }
    }

    pub fn c3() -> Self {
        GateSet {
            k: 3,
            costs: vec![(2, 2), (3, 5)],
        }
    }

    /// `C_k`: levels 2 and 3 at their fixed costs, higher levels at the native
    /// distillation cost relative to `T`, rounded to the nearest half.
    pub fn for_level(k: u32, params: &CostParams) -> Result<Self> {
        match k {
            2 => Ok(Self::c2()),
            3 => Ok(Self::c3()),
            _ if k < 2 => invalid(format!("gate set level {k} below 2")),
            _ => {
                let unit = cost_native(2, params)?.cost;
                let mut gs = Self::c3();
                for j in 4..=k {
                    let halves = (2.0 * cost_native(j, params)?.cost / unit).round().max(1.0);
                    gs.costs.push((j, halves as u32));
                }
                gs.k = k;
                Ok(gs)
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C2" => Ok(Self::c2()),
            "C3" => Ok(Self::c3()),
            other => invalid(format!("unknown gate set '{other}' (use C2 or C3)")),
        }
    }

    pub fn name(&self) -> String {
        format!("C{}", self.k)
    }

    /// Cost of one gate of `level`, in half units.
    pub fn cost_halves(&self, level: u32) -> Option<u32> {
        self.costs.iter().find(|c| c.0 == level).map(|c| c.1)
    }

    /// Non-Clifford cost of a word; `None` if it uses a level outside the set.
    pub fn word_cost(&self, word: &[Gate]) -> Option<f64> {
        let mut halves = 0;
        for g in word {
            if let Some(l) = g.level() {
                halves += self.cost_halves(l)?;
            }
        }
        Some(halves as f64 / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub word: Vec<Gate>,
    /// Number of gates per non-Clifford level.
    pub counts: BTreeMap<u32, u32>,
    pub cost: f64,
    pub epsilon: f64,
}

impl SequenceResult {
    pub fn from_word(word: Vec<Gate>, target: &Unitary2, gate_set: &GateSet) -> Result<Self> {
        let cost = gate_set
            .word_cost(&word)
            .ok_or_else(|| crate::Error::InvalidParameter("word uses a gate outside the set".into()))?;
        let mut counts = BTreeMap::new();
        for g in &word {
            if let Some(l) = g.level() {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        let epsilon = trace_distance(target, &Unitary2::from_word(&word));
        Ok(SequenceResult {
            word,
            counts,
            cost,
            epsilon,
        })
    }

    pub fn count(&self, level: u32) -> u32 {
        self.counts.get(&level).copied().unwrap_or(0)
    }

    pub fn total_gates(&self) -> u32 {
        self.counts.values().sum()
    }
}

/// Least-squares fit of `y = a * log2(1/eps) + b` over `(eps, y)` points.
///
/// # Errors
///
/// `InvalidParameter` with fewer than two distinct abscissae or `eps` outside `(0, 1]`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.iter().any(|(e, _)| !(*e > 0.0 && *e <= 1.0)) {
        return invalid("eps must lie in (0, 1]");
    }
    let xs: Vec<f64> = points.iter().map(|(e, _)| (1.0 / e).log2()).collect();
    let n = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if points.len() < 2 || sxx <= 1e-300 {
        return invalid("need at least two distinct eps values");
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

/// Ratio statistics of `sqrt(T)` to `T` counts over C3 sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaStats {
    pub median: f64,
    /// 16th and 84th percentiles.
    pub interval: (f64, f64),
    /// Fraction of sequences with at least one `sqrt(T)`.
    pub with_sqrt_t: f64,
    /// Sequences entering the ratio (those with at least one `T`).
    pub n: usize,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `kappa = N_sqrtT / N_T` per sequence; sequences without `T` are left out of the
/// ratio but counted in `with_sqrt_t`.
pub fn gate_ratio(results: &[SequenceResult]) -> KappaStats {
    let mut ratios: Vec<f64> = results
        .iter()
        .filter(|r| r.count(2) > 0)
        .map(|r| r.count(3) as f64 / r.count(2) as f64)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let with = results.iter().filter(|r| r.count(3) > 0).count();
    KappaStats {
        median: percentile(&ratios, 0.5),
        interval: (percentile(&ratios, 0.16), percentile(&ratios, 0.84)),
        with_sqrt_t: if results.is_empty() {
            0.0
        } else {
            with as f64 / results.len() as f64
        },
        n: ratios.len(),
    }
}

/// Median error, cost and gate count of the sequences found at one budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetMedian {
    pub budget: f64,
    pub epsilon: f64,
    pub gates: f64,
    pub samples: usize,
}

/// Scaling fits of a budget sweep: budget and total gate count against
/// `log2(1/eps)` of the per-budget medians, plus the `sqrt(T)` ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub gate_set: String,
    pub cost_slope: f64,
    pub cost_intercept: f64,
    pub gate_slope: f64,
    pub gate_intercept: f64,
    pub kappa: KappaStats,
    pub medians: Vec<BudgetMedian>,
}

/// Fits a sweep given as `(budget, result)` pairs. Budgets whose median error is
/// zero are left out of the fits.
///
/// # Errors
///
/// `InvalidParameter` if fewer than two budgets have a non-zero median.
pub fn scaling_fit(gate_set: &GateSet, results: &[(f64, SequenceResult)]) -> Result<ScalingFit> {
    let mut by_budget: BTreeMap<u64, Vec<&SequenceResult>> = BTreeMap::new();
    for (r, res) in results {
        by_budget.entry(r.to_bits()).or_default().push(res);
    }
    let mut medians: Vec<BudgetMedian> = by_budget
        .iter()
        .map(|(bits, rs)| BudgetMedian {
            budget: f64::from_bits(*bits),
            epsilon: median(&rs.iter().map(|r| r.epsilon).collect::<Vec<_>>()).unwrap_or(0.0),
            gates: median(&rs.iter().map(|r| r.total_gates() as f64).collect::<Vec<_>>()).unwrap_or(0.0),
            samples: rs.len(),
        })
        .collect();
    medians.sort_by(|a, b| a.budget.total_cmp(&b.budget));
    let usable: Vec<&BudgetMedian> = medians.iter().filter(|m| m.epsilon > 0.0).collect();
    let (cost_slope, cost_intercept) = fit_scaling(&usable.iter().map(|m| (m.epsilon, m.budget)).collect::<Vec<_>>())?;
    let (gate_slope, gate_intercept) = fit_scaling(&usable.iter().map(|m| (m.epsilon, m.gates)).collect::<Vec<_>>())?;
    let all: Vec<SequenceResult> = results.iter().map(|(_, r)| r.clone()).collect();
    Ok(ScalingFit {
        gate_set: gate_set.name(),
        cost_slope,
        cost_intercept,
        gate_slope,
        gate_intercept,
        kappa: gate_ratio(&all),
        medians,
    })
}

/// Counting bound `3 / log2(2(k-1)) * log2(1/eps)` on gates needed at accuracy `eps`.
pub fn lower_bound_gates(k: u32, eps: f64) -> Result<f64> {
    if k < 2 {
        return invalid(format!("level k = {k} below 2"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid("eps must lie in (0, 1]");
    }
    Ok(3.0 / (2.0 * (k as f64 - 1.0)).log2() * (1.0 / eps).log2())
}

/// Median of a slice (NaN-free), `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(percentile(&v, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_product_matches_matrices() {
        let a = Unitary2::from_word(&[Gate::H, Gate::Phase(2), Gate::S]);
        let b = Unitary2::from_word(&[Gate::Phase(3), Gate::H]);
        let qa = a.quaternion();
        let qb = b.quaternion();
        let prod = canonical_sign(qmul(qa, qb));
        let direct = a.mul(&b).quaternion();
        for i in 0..4 {
            assert!((prod[i] - direct[i]).abs() < 1e-12);
        }
        let t = trace_distance(&a, &b);
        assert!((t - (1.0 - qdot(&qa, &qb).powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn word_round_trip() {
        let w = parse_word("H T sqrtT Z5 S").unwrap();
        assert_eq!(format_word(&w), "H T sqrtT Z5 S");
        assert!(parse_word("Q").is_err());
    }
}
