use super::{BoundaryStabilizer, Edge, Role, StabilizerKind, StabilizerSpec, UnfoldedLayout};
use crate::cost::Connectivity;
use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};

/// Maps edge coordinates (position `u` along the edge, height `v` outward) to grid `(row, col)`.
fn to_global(layout: &UnfoldedLayout, edge: Edge, u: i64, v: i64) -> (i64, i64) {
    let rows = layout.grid.rows() as i64;
    let cols = layout.grid.cols() as i64;
    match edge {
        Edge::Top => (-v, u),
        Edge::Bottom => (rows - 1 + v, u),
        Edge::Left => (u, -v),
        Edge::Right => (u, cols - 1 + v),
    }
}

/// Top-left grid corner of the unit square spanning `u..u+1`, `v..v+1`.
fn square_corner(layout: &UnfoldedLayout, edge: Edge, u: i64, v: i64) -> (i64, i64) {
    let a = to_global(layout, edge, u, v);
    let b = to_global(layout, edge, u + 1, v + 1);
    (a.0.min(b.0), a.1.min(b.1))
}

fn edge_bulk(layout: &UnfoldedLayout, edge: Edge, u: usize) -> usize {
    let g = layout.grid;
    match edge {
        Edge::Top => g.bulk_id(0, u),
        Edge::Bottom => g.bulk_id(g.rows() - 1, u),
        Edge::Left => g.bulk_id(u, 0),
        Edge::Right => g.bulk_id(u, g.cols() - 1),
    }
}

#[derive(Clone, Copy)]
struct Anc {
    id: usize,
    u: usize,
    v: i64,
}

struct Builder<'a> {
    layout: &'a mut UnfoldedLayout,
    used: HashSet<(i64, i64)>,
}

impl Builder<'_> {
    fn add_part(
        &mut self,
        parent: usize,
        support: Vec<usize>,
        borrows: Vec<usize>,
        edge: Edge,
        candidates: &[(i64, i64)],
    ) -> Result<usize> {
        let spec = &self.layout.stabilizers[parent];
        let (w, t) = (spec.w, spec.t);
        for &(u, v) in candidates {
            let corner = square_corner(self.layout, edge, u, v);
            if self.used.insert(corner) {
                let mut part = StabilizerSpec::new(support, StabilizerKind::BoundaryCompositePart);
                part.w = w;
                part.t = t;
                part.edge = Some(edge);
                part.parent = Some(parent);
                part.borrows = borrows;
                self.layout.stabilizers.push(part);
                let s = self.layout.stabilizers.len() - 1;
                self.layout
                    .attach_square_ancilla(s, corner.0, corner.1, edge.layer_sign() * (v as i32 + 1));
                return Ok(s);
            }
        }
        Err(Error::ConstructionFailure(format!(
            "no free measurement square for a part of S({},{}) on the {edge:?} edge",
            w.unwrap_or(0),
            t.unwrap_or(0)
        )))
    }
}

type EdgeStab = (usize, u32, [usize; 4]);

/// Replaces every boundary-logical stabilizer by a chain of weight-2..4 parts
/// through `w` new ancilla-data qubits, so that each part fits a unit square of
/// the extended grid. Stabilizers on an edge are stacked by increasing `w`;
/// weight-2 stabilizers whose inner pair is needed by a wider one are
/// side-blocking, all others centre-blocking.
///
/// If the current top/bottom (left/right) assignment leaves a needed qubit pair
/// covered, stabilizers are moved to the opposite edge (multiplying by plaquette
/// strips) until every edge can be realized.
///
/// # Errors
///
/// `ConstructionFailure` when no assignment realizes all stabilizers.
pub fn realize_nearest_neighbour(mut layout: UnfoldedLayout) -> Result<UnfoldedLayout> {
    if layout.stabilizers.iter().any(|s| s.parent.is_some()) {
        return Err(Error::InvalidParameter("layout already has composite parts".into()));
    }
    layout.connectivity = Connectivity::NearestNeighbour;
    for (a, b) in [(Edge::Top, Edge::Bottom), (Edge::Left, Edge::Right)] {
        let assignment = assign_side(&layout, a, b)?;
        for (idx, edge) in assignment {
            if layout.stabilizers[idx].edge != Some(edge) {
                let off = offsets_of(&layout, idx);
                layout.stabilizers[idx].support = super::boundary::edge_support(&layout, edge, off);
                layout.stabilizers[idx].edge = Some(edge);
            }
        }
    }
    let mut b = Builder::new(&mut layout);
    for edge in [Edge::Top, Edge::Bottom, Edge::Left, Edge::Right] {
        let stabs = edge_stabs(b.layout, edge);
        realize_edge(&mut b, edge, stabs)?;
    }
    check_products(&layout)?;
    Ok(layout)
}

impl<'a> Builder<'a> {
    fn new(layout: &'a mut UnfoldedLayout) -> Self {
        let mut used = HashSet::new();
        for s in &layout.stabilizers {
            if let Some(a) = s.ancilla {
                let q = &layout.qubits[a];
                used.insert(((q.row - 0.5).floor() as i64, (q.col - 0.5).floor() as i64));
            }
        }
        Self { layout, used }
    }
}

fn side_len(layout: &UnfoldedLayout, edge: Edge) -> (usize, u32) {
    let g = layout.grid;
    if edge.is_horizontal() {
        (g.cols(), g.l)
    } else {
        (g.rows(), g.h)
    }
}

fn offsets_of(layout: &UnfoldedLayout, idx: usize) -> [usize; 4] {
    let s = &layout.stabilizers[idx];
    let (_, side) = side_len(layout, s.edge.unwrap());
    BoundaryStabilizer::new(side, s.w.unwrap(), s.t.unwrap()).offsets()
}

fn edge_stabs(layout: &UnfoldedLayout, edge: Edge) -> Vec<EdgeStab> {
    layout
        .stabilizers
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == StabilizerKind::BoundaryLogical && s.edge == Some(edge))
        .map(|(i, s)| (i, s.w.unwrap(), offsets_of(layout, i)))
        .collect()
}

fn edge_feasible(layout: &UnfoldedLayout, edge: Edge, stabs: Vec<EdgeStab>) -> bool {
    let mut scratch = layout.clone();
    let mut b = Builder::new(&mut scratch);
    realize_edge(&mut b, edge, stabs).is_ok()
}

/// Whether `y` may sit on an edge where wider stabilizers need the pairs in `needs`
/// (pair start, column of the end ancilla).
fn compatible(y: &EdgeStab, needs: &[(usize, usize)]) -> bool {
    let (_, w, off) = *y;
    let (p, q) = (off[0], off[2]);
    let side_blocking = w == 2 && needs.iter().any(|&(a, _)| a == p + 1);
    for &(a, col) in needs {
        if side_blocking && (a == p || a == q) {
            return false;
        }
        if (p + 1..=q).contains(&col) && !(a == p || a == q || (w == 2 && a == p + 1)) {
            return false;
        }
    }
    true
}

const SEARCH_LEAVES: usize = 20_000;

/// Chooses one of two opposite edges for every stabilizer of a side type, keeping
/// the current edge where possible.
fn assign_side(layout: &UnfoldedLayout, a: Edge, b: Edge) -> Result<Vec<(usize, Edge)>> {
    let mut stabs: Vec<(EdgeStab, Edge)> = [a, b]
        .iter()
        .flat_map(|&e| edge_stabs(layout, e).into_iter().map(move |s| (s, e)))
        .collect();
    let current: Vec<(usize, Edge)> = stabs.iter().map(|(s, e)| (s.0, *e)).collect();
    let feasible = |assign: &[(EdgeStab, Edge)]| {
        [a, b].iter().all(|&e| {
            let on: Vec<EdgeStab> = assign.iter().filter(|(_, x)| *x == e).map(|(s, _)| *s).collect();
            edge_feasible(layout, e, on)
        })
    };
    if feasible(&stabs) {
        return Ok(current);
    }
    stabs.sort_by_key(|((_, w, off), _)| (std::cmp::Reverse(*w), off[0]));

    struct Search<'s> {
        stabs: &'s [(EdgeStab, Edge)],
        chosen: Vec<(EdgeStab, Edge)>,
        leaves: usize,
    }
    fn dfs(s: &mut Search, pair: [Edge; 2], feasible: &dyn Fn(&[(EdgeStab, Edge)]) -> bool) -> bool {
        let i = s.chosen.len();
        if i == s.stabs.len() {
            s.leaves += 1;
            return feasible(&s.chosen);
        }
        let (y, default) = s.stabs[i];
        let other = if default == pair[0] { pair[1] } else { pair[0] };
        for e in [default, other] {
            if s.leaves >= SEARCH_LEAVES {
                return false;
            }
            let needs: Vec<(usize, usize)> = s
                .chosen
                .iter()
                .filter(|(_, x)| *x == e)
                .flat_map(|((_, _, off), _)| [(off[0], off[0] + 1), (off[2], off[2])])
                .collect();
            if !compatible(&y, &needs) {
                continue;
            }
            s.chosen.push((y, e));
            if dfs(s, pair, feasible) {
                return true;
            }
            s.chosen.pop();
        }
        false
    }
    let mut search = Search {
        stabs: &stabs,
        chosen: Vec::new(),
        leaves: 0,
    };
    if dfs(&mut search, [a, b], &feasible) {
        return Ok(search.chosen.iter().map(|(s, e)| (s.0, *e)).collect());
    }
    Err(Error::ConstructionFailure(format!(
        "no nearest-neighbour realization of the {a:?}/{b:?} boundary stabilizers ({} assignments tried)",
        search.leaves
    )))
}

fn realize_edge(b: &mut Builder, edge: Edge, mut stabs: Vec<EdgeStab>) -> Result<()> {
    let (len, _) = side_len(b.layout, edge);
    stabs.sort_by_key(|&(_, w, off)| (w, off[0]));
    let outer_ends: HashSet<usize> = stabs
        .iter()
        .filter(|&&(_, w, _)| w > 2)
        .flat_map(|&(_, _, off)| [off[0], off[2]])
        .collect();

    let mut stack_top = vec![0i64; len];
    // pair start -> (representative ancillas, parts linking them to the pair)
    let mut reps: HashMap<usize, (Vec<Anc>, Vec<usize>)> = HashMap::new();
    let sign = edge.layer_sign();

    for (parent, w, off) in stabs {
        let (p, q) = (off[0], off[2]);
        let w = w as usize;
        let side_blocking = w == 2 && outer_ends.contains(&(p + 1));
        let mut base: Vec<i64> = (p + 1..=q).map(|c| stack_top[c] + 1).collect();
        if !side_blocking {
            if let Some((r, _)) = reps.get(&p) {
                base[0] = base[0].max(r.iter().map(|a| a.v).max().unwrap() + 1);
            }
            if let Some((r, _)) = reps.get(&q) {
                base[w - 1] = base[w - 1].max(r.iter().map(|a| a.v).max().unwrap() + 1);
            }
        }
        let heights: Vec<i64> = (0..w)
            .map(|i| (0..w).map(|j| base[j] - (i as i64 - j as i64).abs()).max().unwrap())
            .collect();

        let mut anc = Vec::with_capacity(w);
        for (i, &h) in heights.iter().enumerate() {
            let u = p + 1 + i;
            let (row, col) = to_global(b.layout, edge, u as i64, h);
            let id = b
                .layout
                .push_qubit(row as f64, col as f64, sign * h as i32, Role::BoundaryAncillaData);
            anc.push(Anc { id, u, v: h });
            stack_top[u] = h;
        }
        let code = |u: usize| edge_bulk(b.layout, edge, u);
        let (c0, c1, c2, c3) = (code(p), code(p + 1), code(q), code(q + 1));

        if side_blocking {
            if heights.iter().any(|&h| h != 1) {
                return Err(Error::ConstructionFailure(format!(
                    "side-blocking S(2,{}) on the {edge:?} edge is covered",
                    b.layout.stabilizers[parent].t.unwrap_or(0)
                )));
            }
            let (a1, a2) = (anc[0], anc[1]);
            b.add_part(parent, vec![c0, a1.id], vec![], edge, &[(p as i64, 0)])?;
            let mid = b.add_part(parent, vec![a1.id, c1, c2, a2.id], vec![], edge, &[(p as i64 + 1, 0)])?;
            b.add_part(parent, vec![a2.id, c3], vec![], edge, &[(p as i64 + 2, 0)])?;
            reps.insert(p + 1, (vec![a1, a2], vec![mid]));
            continue;
        }

        let first = anc[0];
        let last = anc[w - 1];
        let mut links = Vec::with_capacity(2);
        for (end, pair, pair_lo, pair_hi) in [(first, p, c0, c1), (last, q, c2, c3)] {
            if end.v == 1 {
                let e = b.add_part(parent, vec![end.id, pair_lo, pair_hi], vec![], edge, &[(pair as i64, 0)])?;
                links.push(vec![e]);
                continue;
            }
            let (rep, chain) = reps.get(&pair).cloned().ok_or_else(|| {
                Error::ConstructionFailure(format!(
                    "qubit pair at {pair} on the {edge:?} edge is covered and has no representative"
                ))
            })?;
            if rep.iter().any(|a| a.v != end.v - 1 || a.u < pair || a.u > pair + 1) {
                return Err(Error::ConstructionFailure(format!(
                    "representative of pair {pair} on the {edge:?} edge is not adjacent to height {}",
                    end.v
                )));
            }
            let mut support = vec![end.id];
            support.extend(rep.iter().map(|a| a.id));
            let e = b.add_part(parent, support, chain.clone(), edge, &[(pair as i64, end.v - 1)])?;
            let mut link = vec![e];
            link.extend(chain);
            links.push(link);
        }
        for i in 0..w - 1 {
            let (x, y) = (anc[i], anc[i + 1]);
            let cands: Vec<(i64, i64)> = if x.v == y.v {
                vec![(x.u as i64, x.v - 1), (x.u as i64, x.v)]
            } else {
                vec![(x.u as i64, x.v.min(y.v))]
            };
            b.add_part(parent, vec![x.id, y.id], vec![], edge, &cands)?;
        }
        let right = links.pop().unwrap();
        let left = links.pop().unwrap();
        reps.insert(p, (vec![first], left));
        reps.insert(q, (vec![last], right));
    }
    Ok(())
}

/// Each boundary-logical stabilizer must equal the symmetric difference of its parts.
fn check_products(layout: &UnfoldedLayout) -> Result<()> {
    let parents: HashSet<usize> = layout.stabilizers.iter().filter_map(|s| s.parent).collect();
    for p in parents {
        let mut set = HashSet::new();
        for part in layout.composite_group(p) {
            for &q in &layout.stabilizers[part].support {
                if !set.insert(q) {
                    set.remove(&q);
                }
            }
        }
        let want: HashSet<usize> = layout.stabilizers[p].support.iter().copied().collect();
        if set != want {
            return Err(Error::InternalInconsistency(format!(
                "composite parts of stabilizer {p} do not multiply to it"
            )));
        }
    }
    Ok(())
}

/// Gives each boundary-logical stabilizer its own measure ancilla just outside
/// its edge, for layouts with long-range boundary connectivity.
pub fn attach_long_range_ancillas(mut layout: UnfoldedLayout) -> UnfoldedLayout {
    layout.connectivity = Connectivity::LongRange;
    let rows = layout.grid.rows() as f64;
    let cols = layout.grid.cols() as f64;
    for s in 0..layout.stabilizers.len() {
        let spec = &layout.stabilizers[s];
        if spec.kind != StabilizerKind::BoundaryLogical || spec.ancilla.is_some() {
            continue;
        }
        let (Some(edge), Some(w)) = (spec.edge, spec.w) else {
            continue;
        };
        let pos: Vec<f64> = spec
            .support
            .iter()
            .map(|&q| {
                let n = &layout.qubits[q];
                if edge.is_horizontal() {
                    n.col
                } else {
                    n.row
                }
            })
            .collect();
        let mid = pos.iter().sum::<f64>() / pos.len() as f64;
        let out = 0.5 + w.trailing_zeros() as f64 - 1.0;
        let (row, col) = match edge {
            Edge::Top => (-out - 0.5, mid),
            Edge::Bottom => (rows - 0.5 + out, mid),
            Edge::Left => (mid, -out - 0.5),
            Edge::Right => (mid, cols - 0.5 + out),
        };
        let layer = edge.layer_sign() * w.trailing_zeros() as i32;
        let id = layout.push_qubit(row, col, layer, Role::MeasureAncilla);
        layout.stabilizers[s].ancilla = Some(id);
    }
    layout
}
