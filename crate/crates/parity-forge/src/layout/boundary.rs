use super::{Edge, StabilizerKind, StabilizerSpec, UnfoldedLayout};
use serde::{Deserialize, Serialize};

/// `S(w,t)` on a line of `2^l` qubits, with 1-based positions
/// `{i, i+1, i+w, i+w+1}` where `i = L/2 - w/2 + w t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryStabilizer {
    pub w: u32,
    pub t: i64,
    pub positions: [usize; 4],
}

impl BoundaryStabilizer {
    pub fn new(l: u32, w: u32, t: i64) -> Self {
        let len = 1i64 << l;
        let w64 = w as i64;
        let i = (len / 2 - w64 / 2 + w64 * t) as usize;
        let w = w as usize;
        Self {
            w: w as u32,
            t,
            positions: [i, i + 1, i + w, i + w + 1],
        }
    }

    /// 0-based positions.
    pub fn offsets(&self) -> [usize; 4] {
        self.positions.map(|p| p - 1)
    }
}

/// All boundary stabilizers of a side with `2^l` qubits, ordered by `w` then `t`.
pub fn boundary_stabilizers(l: u32) -> Vec<BoundaryStabilizer> {
    let mut out = Vec::new();
    if l < 2 {
        return out;
    }
    let len = 1i64 << l;
    for s in 1..l {
        let w = 1i64 << s;
        let t_max = len / (2 * w) - 1;
        for t in -t_max..=t_max {
            out.push(BoundaryStabilizer::new(l, w as u32, t));
        }
    }
    out
}

pub(super) fn edge_support(layout: &UnfoldedLayout, edge: Edge, offsets: [usize; 4]) -> Vec<usize> {
    let g = layout.grid;
    offsets
        .iter()
        .map(|&u| match edge {
            Edge::Top => g.bulk_id(0, u),
            Edge::Bottom => g.bulk_id(g.rows() - 1, u),
            Edge::Left => g.bulk_id(u, 0),
            Edge::Right => g.bulk_id(u, g.cols() - 1),
        })
        .collect()
}

/// Adds the boundary-logical stabilizers: horizontal ones on the bottom row,
/// vertical ones on the right column.
pub fn attach_boundaries(mut layout: UnfoldedLayout) -> UnfoldedLayout {
    let g = layout.grid;
    for (edge, side) in [(Edge::Bottom, g.l), (Edge::Right, g.h)] {
        for b in boundary_stabilizers(side) {
            let mut spec = StabilizerSpec::new(edge_support(&layout, edge, b.offsets()), StabilizerKind::BoundaryLogical);
            spec.w = Some(b.w);
            spec.t = Some(b.t);
            spec.edge = Some(edge);
            layout.stabilizers.push(spec);
        }
    }
    layout
}

/// Moves horizontal stabilizers with even `t` to the top row and vertical
/// stabilizers with odd `t` to the left column. Each move multiplies by a pair of
/// plaquette strips running across the grid, so the generated group is unchanged.
pub fn distribute_boundaries(mut layout: UnfoldedLayout) -> UnfoldedLayout {
    for i in 0..layout.stabilizers.len() {
        let s = &layout.stabilizers[i];
        if s.kind != StabilizerKind::BoundaryLogical || s.parent.is_some() {
            continue;
        }
        let (Some(edge), Some(w), Some(t)) = (s.edge, s.w, s.t) else {
            continue;
        };
        let target = match edge {
            Edge::Bottom | Edge::Top => {
                if t % 2 == 0 {
                    Edge::Top
                } else {
                    Edge::Bottom
                }
            }
            Edge::Right | Edge::Left => {
                if t % 2 == 0 {
                    Edge::Right
                } else {
                    Edge::Left
                }
            }
        };
        if target == edge {
            continue;
        }
        let side = if edge.is_horizontal() { layout.grid.l } else { layout.grid.h };
        let offsets = BoundaryStabilizer::new(side, w, t).offsets();
        let support = edge_support(&layout, target, offsets);
        let s = &mut layout.stabilizers[i];
        s.support = support;
        s.edge = Some(target);
    }
    layout
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l3_stabilizers() {
        let got: Vec<_> = boundary_stabilizers(3).iter().map(|b| (b.w, b.t, b.positions)).collect();
        assert_eq!(
            got,
            vec![
                (2, -1, [1, 2, 3, 4]),
                (2, 0, [3, 4, 5, 6]),
                (2, 1, [5, 6, 7, 8]),
                (4, 0, [2, 3, 6, 7])
            ]
        );
    }

    #[test]
    fn counts() {
        assert!(boundary_stabilizers(1).is_empty());
        assert_eq!(boundary_stabilizers(2).len(), 1);
        assert_eq!(boundary_stabilizers(4).len(), 11);
    }
}
