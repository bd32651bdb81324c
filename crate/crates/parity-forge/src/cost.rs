//! Space-time cost of native `Z_k` distillation versus synthesis from `T` gates.

use crate::error::{invalid, Error, Result};
use crate::noisemodel::{acceptance_prob, p_gate, NoiseParams, MAX_K};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    LongRange,
    NearestNeighbour,
}

impl FromStr for Connectivity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "long-range" | "longrange" => Ok(Self::LongRange),
            "nn" | "nearest-neighbour" | "nearest-neighbor" => Ok(Self::NearestNeighbour),
            other => invalid(format!("unknown connectivity '{other}' (use lr or nn)")),
        }
    }
}

/// `N_gates(eps) = slope * log2(1/eps) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisFit {
    pub slope: f64,
    pub intercept: f64,
}

impl SynthesisFit {
    /// Tensor-network fit for Clifford+T.
    pub const CLIFFORD_T: SynthesisFit = SynthesisFit {
        slope: 3.05,
        intercept: -5.97,
    };

    pub fn eval(&self, eps: f64) -> f64 {
        self.slope * (1.0 / eps).log2() + self.intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub connectivity: Connectivity,
    pub noise: NoiseParams,
    pub synthesis_fit: SynthesisFit,
    /// Synthesis trace-distance target.
    pub eps: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::NearestNeighbour,
            noise: NoiseParams::default(),
            synthesis_fit: SynthesisFit::CLIFFORD_T,
            eps: 1e-3,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(self.synthesis_fit.slope > 0.0) {
            return invalid("synthesis fit slope must be positive");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return invalid(format!("eps = {} outside (0, 1]", self.eps));
        }
        Ok(())
    }
}

fn check_level(k: u32) -> Result<()> {
    if !(2..=MAX_K - 2).contains(&k) {
        return invalid(format!("level k = {k} outside [2, {}]", MAX_K - 2));
    }
    Ok(())
}

/// Grid exponents `(h, l)` of `uRM(k+2)`.
pub fn grid_exponents(k: u32) -> (u32, u32) {
    let m = k + 2;
    (m / 2, m - m / 2)
}

/// Extra ancilla-data qubits for the boundary stabilizers along a side of length `2^x`.
pub fn edge_ancilla_data(x: u32) -> u64 {
    (1..x).map(|s| ((1u64 << (x - s)) - 1) << s).sum()
}

/// Data qubits of the nearest-neighbour layout. For odd `k` the two side types
/// have different exponents and are summed separately.
pub fn n_data(k: u32) -> Result<u64> {
    check_level(k)?;
    let (h, l) = grid_exponents(k);
    Ok((1u64 << (k + 2)) + edge_ancilla_data(h) + edge_ancilla_data(l))
}

/// Data qubits for the given connectivity (`2^(k+2)` when long-range).
pub fn n_data_for(k: u32, connectivity: Connectivity) -> Result<u64> {
    match connectivity {
        Connectivity::LongRange => {
            check_level(k)?;
            Ok(1u64 << (k + 2))
        }
        Connectivity::NearestNeighbour => n_data(k),
    }
}

/// Data qubits plus one measure-ancilla per independent check.
pub fn n_qubits(k: u32, connectivity: Connectivity) -> Result<u64> {
    Ok(2 * n_data_for(k, connectivity)? - k as u64 - 3)
}

/// Number of `|Z_k'>` states one level-`k` factory yields.
pub fn factory_capacity(k: u32, k_prime: u32) -> Result<u64> {
    if k_prime > k {
        return invalid(format!("k' = {k_prime} exceeds k = {k}"));
    }
    check_level(k)?;
    Ok(1u64 << (k - k_prime))
}

/// Expected qubit-attempts of one accepted `|Z_k>` state.
pub fn distillation_cost(k: u32, params: &CostParams) -> Result<f64> {
    let nd = n_data_for(k, params.connectivity)?;
    let att = acceptance_prob(k, nd, &params.noise)?.n_attempts;
    Ok(n_qubits(k, params.connectivity)? as f64 * att)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NativeCost {
    pub cost: f64,
    /// `2 N_qubits(k) N_attempts(k)`.
    pub bound: f64,
}

/// Cost of a deterministic `Z_k` including lower-level teleportation corrections.
pub fn cost_native(k: u32, params: &CostParams) -> Result<NativeCost> {
    params.validate()?;
    check_level(k)?;
    let mut cost = 0.0;
    for j in 2..=k {
        cost += distillation_cost(j, params)? / 2f64.powi((k - j) as i32);
    }
    let bound = 2.0 * distillation_cost(k, params)?;
    if cost > bound {
        return Err(Error::InternalInconsistency(format!(
            "native cost {cost} exceeds bound {bound} at k = {k}"
        )));
    }
    Ok(NativeCost { cost, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthCost {
    pub n_gates: f64,
    pub cost: f64,
    /// The fit gave a negative gate count and was clipped to zero.
    pub out_of_regime: bool,
}

/// `N_gates(eps)` clipped at zero.
pub fn n_gates(params: &CostParams) -> (f64, bool) {
    let raw = params.synthesis_fit.eval(params.eps);
    if raw < 0.0 {
        (0.0, true)
    } else {
        (raw, false)
    }
}

/// Cost of approximating any `Z_k` by Clifford+T; independent of `k`.
pub fn cost_synthesized(_k: u32, params: &CostParams) -> Result<SynthCost> {
    params.validate()?;
    let (n, out_of_regime) = n_gates(params);
    Ok(SynthCost {
        n_gates: n,
        cost: n * distillation_cost(2, params)?,
        out_of_regime,
    })
}

/// Rough break-even level `2 + log2(N_gates)`.
pub fn break_even(params: &CostParams) -> Result<f64> {
    params.validate()?;
    let (n, out) = n_gates(params);
    if out || n <= 0.0 {
        return Err(Error::OutOfRegime("synthesis fit gives no gates at this eps".into()));
    }
    Ok(2.0 + n.log2())
}

/// Last level in `ks` whose native cost does not exceed the synthesized cost,
/// i.e. the crossing lies in `(k, k+1)`. `None` if native is never cheaper.
pub fn crossing_level(ks: impl IntoIterator<Item = u32>, params: &CostParams) -> Result<Option<u32>> {
    let synth = cost_synthesized(2, params)?.cost;
    let mut last = None;
    for k in ks {
        if cost_native(k, params)?.cost <= synth {
            last = Some(k);
        }
    }
    Ok(last)
}

/// One row of the native-versus-synthesized table, normalised to one `T` distillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub k: u32,
    pub n_qubits: u64,
    pub n_data: u64,
    pub n_attempts: f64,
    pub native: f64,
    pub native_bound: f64,
    pub synthesized: f64,
}

pub fn cost_table(ks: impl IntoIterator<Item = u32>, params: &CostParams) -> Result<Vec<CostRow>> {
    let unit = distillation_cost(2, params)?;
    let synth = cost_synthesized(2, params)?.cost / unit;
    ks.into_iter()
        .map(|k| {
            let nat = cost_native(k, params)?;
            let nd = n_data_for(k, params.connectivity)?;
            Ok(CostRow {
                k,
                n_qubits: n_qubits(k, params.connectivity)?,
                n_data: nd,
                n_attempts: acceptance_prob(k, nd, &params.noise)?.n_attempts,
                native: nat.cost / unit,
                native_bound: nat.bound / unit,
                synthesized: synth,
            })
        })
        .collect()
}

/// Gate counts per level, e.g. `[(2, N_T), (3, N_sqrtT)]`.
pub type GateCounts = [(u32, f64)];

/// Logical error `eps^2 + sum N_k' p_gate(k')` and cost `sum N_k' R_k'(k')`,
/// with per-gate costs supplied by `gate_cost`.
pub fn total_error_and_cost(
    counts: &GateCounts,
    eps: f64,
    noise: &NoiseParams,
    gate_cost: impl Fn(u32) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut p = eps * eps;
    let mut r = 0.0;
    for &(k, n) in counts {
        if n < 0.0 {
            return invalid(format!("negative gate count {n} at level {k}"));
        }
        if n == 0.0 {
            continue;
        }
        p += n * p_gate(k, noise)?.p_gate;
        r += n * gate_cost(k)?;
    }
    Ok((p, r))
}

/// Normalised gate costs `R_2(2) = 1`, `R_3(3) = 5/2`.
pub fn fixed_gate_cost(k: u32) -> Result<f64> {
    match k {
        2 => Ok(1.0),
        3 => Ok(2.5),
        _ => invalid(format!("no fixed normalised cost for level {k}")),
    }
}

/// Split a total cost `r` into `(N_2, N_3)` for a `sqrt(T)`-to-`T` ratio `kappa`.
pub fn split_mixed_budget(r: f64, kappa: f64) -> (f64, f64) {
    let n2 = r / (fixed_gate_cost(2).unwrap() + kappa * fixed_gate_cost(3).unwrap());
    (n2, kappa * n2)
}

/// A point on an error-versus-cost curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub eps: f64,
    pub cost: f64,
    pub p_logical: f64,
}

/// Error-versus-cost curve for a gate set whose cost fit is `fit` (`R(eps)`).
/// `kappa = 0` gives Clifford+T; otherwise costs are split with [`split_mixed_budget`].
pub fn pareto_curve(fit: SynthesisFit, kappa: f64, noise: &NoiseParams, eps_grid: &[f64]) -> Result<Vec<ParetoPoint>> {
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let r = fit.eval(eps);
        if r <= 0.0 {
            continue;
        }
        let counts: Vec<(u32, f64)> = if kappa == 0.0 {
            vec![(2, r)]
        } else {
            let (n2, n3) = split_mixed_budget(r, kappa);
            vec![(2, n2), (3, n3)]
        };
        let (p_logical, cost) = total_error_and_cost(&counts, eps, noise, fixed_gate_cost)?;
        out.push(ParetoPoint { eps, cost, p_logical });
    }
    Ok(out)
}

/// Point of smallest logical error on a curve.
pub fn pareto_minimum(curve: &[ParetoPoint]) -> Option<ParetoPoint> {
    curve.iter().copied().min_by(|a, b| a.p_logical.total_cmp(&b.p_logical))
}

/// Log-spaced eps grid from `10^lo` to `10^hi` with `n` points.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![10f64.powf(lo)];
    }
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoComparison {
    pub min_c2: ParetoPoint,
    pub min_c3: ParetoPoint,
    /// `1 - P_min(C3) / P_min(C2)`.
    pub error_reduction: f64,
    /// `1 - R*(C3) / R*(C2)`.
    pub cost_reduction: f64,
    /// Cost of C3 at which it first reaches C2's minimum error, over C2's optimal cost.
    pub cost_ratio_at_c2_error: Option<f64>,
}

pub fn compare_pareto(c2: &[ParetoPoint], c3: &[ParetoPoint]) -> Result<ParetoComparison> {
    let min_c2 = pareto_minimum(c2).ok_or_else(|| Error::InvalidParameter("empty C2 curve".into()))?;
    let min_c3 = pareto_minimum(c3).ok_or_else(|| Error::InvalidParameter("empty C3 curve".into()))?;
    let cost_ratio_at_c2_error = c3
        .iter()
        .filter(|pt| pt.p_logical <= min_c2.p_logical)
        .map(|pt| pt.cost)
        .min_by(f64::total_cmp)
        .map(|c| c / min_c2.cost);
    Ok(ParetoComparison {
        min_c2,
        min_c3,
        error_reduction: 1.0 - min_c3.p_logical / min_c2.p_logical,
        cost_reduction: 1.0 - min_c3.cost / min_c2.cost,
        cost_ratio_at_c2_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_qubit_counts() {
        assert_eq!(n_qubits(2, Connectivity::LongRange).unwrap(), 27);
        assert_eq!(n_qubits(4, Connectivity::NearestNeighbour).unwrap(), 161);
        assert_eq!(n_qubits(2, Connectivity::NearestNeighbour).unwrap(), 35);
        assert_eq!(n_data(6).unwrap(), 324);
    }

    #[test]
    fn capacity() {
        assert_eq!(factory_capacity(4, 2).unwrap(), 4);
        assert_eq!(factory_capacity(6, 3).unwrap(), 8);
        assert!(factory_capacity(2, 3).is_err());
    }

    #[test]
    fn clipped_fit() {
        let params = CostParams {
            eps: 1.0,
            ..CostParams::default()
        };
        let s = cost_synthesized(5, &params).unwrap();
        assert!(s.out_of_regime);
        assert_eq!(s.cost, 0.0);
    }
}
