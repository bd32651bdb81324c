use super::{BoundaryStabilizer, ParityLabel, UnfoldedLayout};
use crate::error::{Error, Result};
use std::collections::HashSet;

/// Labels a line of qubits so that every boundary stabilizer on it has labels
/// summing to zero. Unforced positions take the next base index from `bases`;
/// positions given in `known` are kept.
fn label_line(
    stabs: &[BoundaryStabilizer],
    known: &mut [Option<ParityLabel>],
    order: &[usize],
    bases: &mut impl Iterator<Item = u32>,
) -> Result<()> {
    for &u in order {
        if known[u].is_some() {
            continue;
        }
        let forced = stabs.iter().find_map(|s| {
            let off = s.offsets();
            if !off.contains(&u) {
                return None;
            }
            let others: Vec<_> = off.iter().filter(|&&o| o != u).map(|&o| known[o]).collect();
            others
                .iter()
                .all(Option::is_some)
                .then(|| others.iter().fold(ParityLabel(0), |acc, l| acc ^ l.unwrap()))
        });
        known[u] = Some(match forced {
            Some(l) => l,
            None => ParityLabel::single(
                bases
                    .next()
                    .ok_or_else(|| Error::InternalInconsistency(format!("ran out of base labels at position {u}")))?,
            ),
        });
    }
    for s in stabs {
        let sum = s.offsets().iter().fold(ParityLabel(0), |acc, &o| acc ^ known[o].unwrap());
        if !sum.is_empty() {
            return Err(Error::InternalInconsistency(format!(
                "boundary stabilizer S({},{}) violated by seed labels",
                s.w, s.t
            )));
        }
    }
    Ok(())
}

/// Seeds the bottom row with base labels `0..=l` and the right column with
/// `l+1..=m`, fills positions forced by boundary stabilizers, then propagates
/// through the plaquettes from the bottom-right corner.
///
/// # Errors
///
/// `InternalInconsistency` if any label is even, repeated, or violates a stabilizer.
pub fn assign_parity_labels(mut layout: UnfoldedLayout) -> Result<UnfoldedLayout> {
    let g = layout.grid;
    let (rows, cols) = (g.rows(), g.cols());
    let mut grid_labels = vec![vec![None::<ParityLabel>; cols]; rows];

    let mut bases = 0..=g.m();
    let mut bottom = vec![None; cols];
    let order: Vec<usize> = (0..cols).collect();
    label_line(&super::boundary_stabilizers(g.l), &mut bottom, &order, &mut bases)?;

    let mut right = vec![None; rows];
    right[rows - 1] = bottom[cols - 1];
    let order: Vec<usize> = (0..rows).rev().collect();
    label_line(&super::boundary_stabilizers(g.h), &mut right, &order, &mut bases)?;
    if bases.next().is_some() {
        return Err(Error::InternalInconsistency("unused base labels".into()));
    }

    grid_labels[rows - 1] = bottom;
    for r in 0..rows {
        grid_labels[r][cols - 1] = right[r];
    }
    for r in (0..rows - 1).rev() {
        for c in (0..cols - 1).rev() {
            let l = grid_labels[r][c + 1].unwrap() ^ grid_labels[r + 1][c].unwrap() ^ grid_labels[r + 1][c + 1].unwrap();
            grid_labels[r][c] = Some(l);
        }
    }

    let mut seen = HashSet::new();
    for r in 0..rows {
        for c in 0..cols {
            let l = grid_labels[r][c].unwrap();
            if l.len() % 2 == 0 {
                return Err(Error::InternalInconsistency(format!("even label {{{l}}} at ({r},{c})")));
            }
            if !seen.insert(l) {
                return Err(Error::InternalInconsistency(format!("duplicate label {{{l}}} at ({r},{c})")));
            }
            layout.qubits[g.bulk_id(r, c)].label = Some(l);
        }
    }
    for i in layout.logical_stabilizers() {
        let sum = layout.stabilizers[i]
            .support
            .iter()
            .fold(ParityLabel(0), |acc, &q| acc ^ layout.qubits[q].label.unwrap_or(ParityLabel(0)));
        if !sum.is_empty() {
            return Err(Error::InternalInconsistency(format!(
                "stabilizer {i} has non-trivial label sum {{{sum}}}"
            )));
        }
    }
    Ok(layout)
}
