//! Exact round-by-round decoding for codes with few checks per round.
//!
//! Every column touches at most two consecutive rounds, so a column is owned by
//! the first round it touches. A stage table holds, for each pattern `t` on the
//! owning round and `s` on the next one, the cheapest column subset producing
//! `(t, s)`; a Viterbi pass then threads the pending flips `s` through the rounds.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

/// Largest number of checks per round handled; stage tables have `4^n` entries.
pub const MAX_CHECKS: usize = 12;
const TOP: usize = 48;
const SPREAD: f32 = 18.0;
const BEAM: usize = 96;
const BEAM_SPREAD: f32 = 18.0;

#[derive(Debug)]
struct StageTable {
    gens: Vec<u32>,
    /// Generator used last on the cheapest path to each node, `u16::MAX` if none.
    parent: Vec<u16>,
    /// Per `t`: reachable next-round patterns with their cost, cheapest first.
    best: Vec<Vec<(u32, f32)>>,
}

impl StageTable {
    fn build(nc: usize, gens: Vec<u32>, weights: &[f32]) -> Self {
        let size = 1usize << (2 * nc);
        let mut dist = vec![f32::INFINITY; size];
        let mut parent = vec![u16::MAX; size];
        let mut heap = BinaryHeap::new();
        dist[0] = 0.0;
        // non-negative f32 bit patterns sort like the values
        heap.push(Reverse((0u32, 0u32)));
        while let Some(Reverse((bits, node))) = heap.pop() {
            let d = f32::from_bits(bits);
            if d > dist[node as usize] {
                continue;
            }
            for (g, (&mask, &w)) in gens.iter().zip(weights).enumerate() {
                let next = (node ^ mask) as usize;
                let nd = d + w;
                if nd < dist[next] {
                    dist[next] = nd;
                    parent[next] = g as u16;
                    heap.push(Reverse((nd.to_bits(), next as u32)));
                }
            }
        }
        let low = (1usize << nc) - 1;
        let mut best: Vec<Vec<(u32, f32)>> = vec![Vec::new(); 1 << nc];
        for (node, &d) in dist.iter().enumerate() {
            if d.is_finite() {
                best[node & low].push(((node >> nc) as u32, d));
            }
        }
        for list in &mut best {
            list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if let Some(&(_, d0)) = list.first() {
                list.retain(|&(_, d)| d <= d0 + SPREAD);
            }
            list.truncate(TOP);
        }
        StageTable { gens, parent, best }
    }
}

#[derive(Debug, Clone)]
struct Stage {
    table: Arc<StageTable>,
    /// Global column of each generator.
    cols: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Trellis {
    nc: usize,
    stages: Vec<Stage>,
}

impl Trellis {
    /// `None` when the rows do not split into rounds of at most [`MAX_CHECKS`]
    /// or some column spans more than two rounds.
    pub(crate) fn new(n_rows: usize, nc: usize, cols: &[(Vec<u32>, f64)]) -> Option<Self> {
        if nc == 0 || nc > MAX_CHECKS || n_rows % nc != 0 {
            return None;
        }
        let n_rounds = n_rows / nc;
        let mut per_round: Vec<Vec<(u32, f32, u32)>> = vec![Vec::new(); n_rounds];
        for (j, (rows, llr)) in cols.iter().enumerate() {
            let first = *rows.first()? as usize / nc;
            let mut mask = 0u32;
            for &r in rows {
                let off = r as usize - first * nc;
                if off >= 2 * nc {
                    return None;
                }
                mask |= 1 << off;
            }
            per_round[first].push((mask, *llr as f32, j as u32));
        }
        let mut tables: HashMap<Vec<(u32, u32)>, Arc<StageTable>> = HashMap::new();
        let stages = per_round
            .into_iter()
            .map(|mut list| {
                list.sort_by_key(|e| e.0);
                let key: Vec<(u32, u32)> = list.iter().map(|e| (e.0, e.1.to_bits())).collect();
                let table = tables
                    .entry(key)
                    .or_insert_with(|| {
                        let gens = list.iter().map(|e| e.0).collect();
                        let weights: Vec<f32> = list.iter().map(|e| e.1).collect();
                        Arc::new(StageTable::build(nc, gens, &weights))
                    })
                    .clone();
                Stage {
                    table,
                    cols: list.iter().map(|e| e.2).collect(),
                }
            })
            .collect();
        Some(Trellis { nc, stages })
    }

    /// Cheapest columns reproducing `syndrome`, or `None` if the beam lost every
    /// consistent path.
    pub(crate) fn solve(&self, syndrome: &[u32]) -> Option<Vec<u32>> {
        let nc = self.nc;
        let mut syn = vec![0u32; self.stages.len()];
        for &r in syndrome {
            syn[r as usize / nc] |= 1 << (r as usize % nc);
        }
        // beam entries: (pending, cost, index into previous beam, t)
        let mut history: Vec<Vec<(u32, f32, u32, u32)>> = Vec::with_capacity(self.stages.len());
        let mut beam: Vec<(u32, f32, u32, u32)> = vec![(0, 0.0, 0, 0)];
        let mut slot = vec![u32::MAX; 1 << nc];
        for (stage, &sr) in self.stages.iter().zip(&syn) {
            let mut next: Vec<(u32, f32, u32, u32)> = Vec::new();
            for (bi, &(s, cost, _, _)) in beam.iter().enumerate() {
                let t = sr ^ s;
                for &(s2, d) in &stage.table.best[t as usize] {
                    let c = cost + d;
                    let i = slot[s2 as usize];
                    if i == u32::MAX {
                        slot[s2 as usize] = next.len() as u32;
                        next.push((s2, c, bi as u32, t));
                    } else if c < next[i as usize].1 {
                        next[i as usize] = (s2, c, bi as u32, t);
                    }
                }
            }
            for e in &next {
                slot[e.0 as usize] = u32::MAX;
            }
            let c0 = next.iter().map(|e| e.1).fold(f32::INFINITY, f32::min);
            next.retain(|e| e.1 <= c0 + BEAM_SPREAD);
            if next.len() > BEAM {
                // keep the cheapest BEAM, ties broken by pattern; order is irrelevant
                next.select_nth_unstable_by(BEAM - 1, |a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                next.truncate(BEAM);
            }
            history.push(std::mem::replace(&mut beam, next));
        }
        history.push(beam);
        let last = history.last()?;
        let mut idx = last.iter().position(|e| e.0 == 0)?;
        let mut out = Vec::new();
        for r in (0..self.stages.len()).rev() {
            let (s2, _, prev, t) = history[r + 1][idx];
            let stage = &self.stages[r];
            let mut node = t | (s2 << nc);
            while node != 0 {
                let g = stage.table.parent[node as usize];
                if g == u16::MAX {
                    return None;
                }
                node ^= stage.table.gens[g as usize];
                out.push(stage.cols[g as usize]);
            }
            idx = prev as usize;
        }
        out.sort_unstable();
        Some(out)
    }
}
