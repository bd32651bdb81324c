//! Executable checks of the code-theoretic properties of a layout.
//!
//! Checks return structured reports rather than failing, so that a batch run can
//! report every broken property at once.

use crate::bits::{BitMatrix, BitVec};
use crate::codes::{gf2_kernel, gf2_rank, shortened_qrm, span_weights};
use crate::error::{invalid, Error, Result};
use crate::layout::{ParityLabel, UnfoldedLayout};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Largest `m` for which distances are enumerated.
pub const MAX_ENUM_M: u32 = 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub n_checks: usize,
    pub rank: usize,
    pub expected: usize,
    /// `expected - rank` (zero when passing).
    pub deficit: usize,
    pub passed: bool,
}

/// Rank of the bulk and boundary-logical checks over the labelled qubits,
/// against `2^m - m - 1`.
pub fn check_independence(layout: &UnfoldedLayout) -> IndependenceReport {
    let (_, h) = layout.logical_check_matrix();
    let rank = gf2_rank(&h);
    let expected = (1usize << layout.m) - layout.m as usize - 1;
    IndependenceReport {
        n_checks: h.n_rows(),
        rank,
        expected,
        deficit: expected.saturating_sub(rank),
        passed: rank == expected && h.n_rows() == expected,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub n_labels: usize,
    pub expected: usize,
    pub even: Vec<ParityLabel>,
    pub duplicates: Vec<ParityLabel>,
    pub out_of_range: Vec<ParityLabel>,
    pub missing: usize,
    pub passed: bool,
}

/// Labels must be exactly the odd-size subsets of `{0..=m}`, each once.
pub fn check_label_completeness(layout: &UnfoldedLayout) -> LabelReport {
    let labels: Vec<ParityLabel> = layout.qubits.iter().filter_map(|q| q.label).collect();
    let expected = 1usize << layout.m;
    let full = (1u64 << (layout.m + 1)) - 1;
    let mut seen = HashSet::new();
    let mut report = LabelReport {
        n_labels: labels.len(),
        expected,
        even: Vec::new(),
        duplicates: Vec::new(),
        out_of_range: Vec::new(),
        missing: 0,
        passed: false,
    };
    for l in labels {
        if l.0 & !full != 0 {
            report.out_of_range.push(l);
        } else if l.len() % 2 == 0 {
            report.even.push(l);
        } else if !seen.insert(l) {
            report.duplicates.push(l);
        }
    }
    report.missing = expected - seen.len();
    report.passed = report.missing == 0
        && report.even.is_empty()
        && report.duplicates.is_empty()
        && report.out_of_range.is_empty()
        && report.n_labels == expected;
    report
}

/// Rows `k = 0..=m`: the labelled qubits (in `cols` order) whose label contains `k`.
pub fn label_incidence_matrix(layout: &UnfoldedLayout) -> (Vec<usize>, BitMatrix) {
    let cols = layout.labelled_qubits();
    let rows: Vec<BitVec> = (0..=layout.m)
        .map(|k| {
            BitVec::from_indices(
                cols.len(),
                cols.iter()
                    .enumerate()
                    .filter(|(_, &q)| layout.qubits[q].label.is_some_and(|l| l.contains(k)))
                    .map(|(c, _)| c),
            )
        })
        .collect();
    let n = cols.len();
    (cols, BitMatrix::from_bitvecs(&rows, n))
}

/// Minimum weight of a codeword of the z-check kernel whose expansion in the
/// logical X operators contains `X_k`.
///
/// # Errors
///
/// `ResourceLimit` above `m = 14`; `InternalInconsistency` when the kernel is not
/// spanned by the label-derived logical operators.
pub fn logical_distance(layout: &UnfoldedLayout, k: u32) -> Result<usize> {
    if layout.m > MAX_ENUM_M {
        return Err(Error::ResourceLimit(format!(
            "distance enumeration limited to m <= {MAX_ENUM_M}, got {}",
            layout.m
        )));
    }
    if k > layout.m {
        return invalid(format!("logical index {k} exceeds m = {}", layout.m));
    }
    let (_, h) = layout.logical_check_matrix();
    let (_, x) = label_incidence_matrix(layout);
    let kernel = gf2_kernel(&h);
    if !h.mul(&x.transpose()).is_zero() || gf2_rank(&x) != kernel.n_rows() {
        return Err(Error::InternalInconsistency(format!(
            "kernel of dimension {} is not spanned by the {} logical operators",
            kernel.n_rows(),
            x.n_rows()
        )));
    }
    let gens: Vec<BitVec> = (0..x.n_rows()).filter(|&j| j != k as usize).map(|j| x.row(j)).collect();
    Ok(span_weights(&gens, &x.row(k as usize)).into_iter().min().unwrap_or(0))
}

/// Every `j`-subset of `{0..=m}` lies in an even number of labels.
pub fn k_parity_check(labels: &[ParityLabel], m: u32, j: u32) -> bool {
    if j == 0 {
        return labels.len() % 2 == 0;
    }
    let mut counts = vec![0u32; 1 << (m + 1)];
    for l in labels {
        let mask = l.0;
        let mut sub = mask;
        loop {
            if sub.count_ones() == j {
                counts[sub as usize] += 1;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
    }
    counts.iter().all(|c| c % 2 == 0)
}

/// `k_parity_check` for `j = 1..=m+1`.
pub fn k_parity_profile(layout: &UnfoldedLayout) -> Vec<bool> {
    let labels: Vec<ParityLabel> = layout.qubits.iter().filter_map(|q| q.label).collect();
    (1..=layout.m + 1).map(|j| k_parity_check(&labels, layout.m, j)).collect()
}

/// Every `j` distinct rows have an even number of common ones.
pub fn k_orthogonality_check(x: &BitMatrix, j: usize) -> bool {
    let n = x.n_rows();
    if j == 0 || j > n {
        return true;
    }
    let rows = x.rows();
    let mut combo: Vec<usize> = (0..j).collect();
    loop {
        let mut acc = rows[combo[0]].clone();
        for &r in &combo[1..] {
            acc.and_assign(&rows[r]);
        }
        if acc.count_ones() % 2 == 1 {
            return false;
        }
        let mut i = j;
        while i > 0 && combo[i - 1] == n - j + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return true;
        }
        combo[i - 1] += 1;
        for t in i..j {
            combo[t] = combo[t - 1] + 1;
        }
    }
}

/// Weights of the x-check span are `0 mod 2^(k+1)` and weights of the logical
/// coset are `-1 mod 2^(k+1)`, which makes transversal `Z_k^dagger` a logical `Z_k`.
///
/// # Errors
///
/// `InvalidParameter` for `m < 3`; `ResourceLimit` above `m = 20`.
pub fn transversal_phase_check(m: u32, k: u32) -> Result<bool> {
    if m > 20 {
        return Err(Error::ResourceLimit(format!("span enumeration limited to m <= 20, got {m}")));
    }
    if k >= 63 {
        return invalid(format!("level k = {k} too large"));
    }
    let code = shortened_qrm(m as usize)?;
    let modulus = 1usize << (k + 1);
    let gens = code.x_checks.rows();
    let zero = BitVec::zeros(code.n());
    let stabilizers_ok = span_weights(&gens, &zero).into_iter().all(|w| w % modulus == 0);
    let coset_ok = span_weights(&gens, &code.logical_x.row(0))
        .into_iter()
        .all(|w| w % modulus == modulus - 1);
    Ok(stabilizers_ok && coset_ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub independence: Option<IndependenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelReport>,
    /// Distance of each logical index, or the reason it could not be computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<std::result::Result<usize, String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_passed: Option<bool>,
    /// `k_parity_check` for `j = 1..=m+1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kparity_profile: Option<Vec<bool>>,
    /// Parity and orthogonality agree and parity holds up to `j = m-1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kparity_passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transversal: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifySelection {
    pub independence: bool,
    pub labels: bool,
    pub distance: bool,
    pub kparity: bool,
    pub transversal: bool,
}

impl VerifySelection {
    pub const ALL: Self = Self {
        independence: true,
        labels: true,
        distance: true,
        kparity: true,
        transversal: true,
    };
}

pub fn verify_layout(layout: &UnfoldedLayout, sel: VerifySelection) -> VerifyReport {
    let m = layout.m;
    let mut report = VerifyReport {
        m,
        independence: None,
        labels: None,
        distances: None,
        distance_passed: None,
        kparity_profile: None,
        kparity_passed: None,
        transversal: None,
        passed: true,
    };
    if sel.independence {
        let r = check_independence(layout);
        report.passed &= r.passed;
        report.independence = Some(r);
    }
    if sel.labels {
        let r = check_label_completeness(layout);
        report.passed &= r.passed;
        report.labels = Some(r);
    }
    if sel.distance {
        let want = 1usize << (m - 1);
        let d: Vec<_> = (0..=m).map(|k| logical_distance(layout, k).map_err(|e| e.to_string())).collect();
        let ok = d.iter().all(|x| *x == Ok(want));
        report.passed &= ok;
        report.distances = Some(d);
        report.distance_passed = Some(ok);
    }
    if sel.kparity {
        let profile = k_parity_profile(layout);
        let (_, x) = label_incidence_matrix(layout);
        let agree = (1..m as usize).all(|j| profile[j - 1] == k_orthogonality_check(&x, j));
        let ok = agree && profile[..m as usize - 1].iter().all(|&b| b);
        report.passed &= ok;
        report.kparity_profile = Some(profile);
        report.kparity_passed = Some(ok);
    }
    if sel.transversal {
        let ok = m >= 3 && transversal_phase_check(m, m - 2).unwrap_or(false);
        report.passed &= ok;
        report.transversal = Some(ok);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonality_small_cases() {
        let single = BitMatrix::from_supports(&[[0usize, 1, 2, 3]], 4);
        assert!(k_orthogonality_check(&single, 1));
        let two = BitMatrix::from_supports(&[vec![0usize, 1, 2], vec![0, 1, 2, 3]], 4);
        assert!(!k_orthogonality_check(&two, 2));
    }

    #[test]
    fn transversal_levels() {
        assert!(transversal_phase_check(4, 2).unwrap());
        assert!(transversal_phase_check(5, 3).unwrap());
        assert!(!transversal_phase_check(4, 3).unwrap());
    }
}
