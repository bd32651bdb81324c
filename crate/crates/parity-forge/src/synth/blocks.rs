use super::nearest::KdTree;
use super::{canonical_sign, qmul, Gate, GateSet, Unitary2};
use crate::error::{invalid, Error, Result};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::OnceLock;

/// Element budget of [`enumerate_blocks`] when none is given.
pub const DEFAULT_MAX_ELEMENTS: usize = 20_000_000;

#[derive(Debug, Clone, Copy)]
struct Elem {
    cost: u32,
    clifford: u8,
    /// Index into the gate set's levels, `u8::MAX` for Cliffords.
    gen: u8,
    parent: u32,
}

/// All unique unitaries up to a truncation cost, sorted by exact non-Clifford cost.
///
/// Element `i` is `clifford(i) * gen(i) * element(parent(i))`, which fixes one
/// witness word per unitary.
#[derive(Debug)]
pub struct Blocks {
    pub gate_set: GateSet,
    /// Truncation cost in half units.
    pub r_trunc_halves: u32,
    elems: Vec<Elem>,
    quats: Vec<[f64; 4]>,
    clifford_words: Vec<Vec<Gate>>,
    /// `ends[c]` = number of elements of cost at most `c` half units.
    ends: Vec<usize>,
    /// Per cost prefix: target-independent chain environment maps.
    pub(crate) supers: OnceLock<Vec<Vec<f64>>>,
    /// Prefix sums of the quadratic monomials `q_i q_j`, `i <= j`.
    pub(crate) moments: OnceLock<Vec<[f64; 10]>>,
    /// Per cost prefix: nearest-neighbour index.
    pub(crate) trees: Vec<OnceLock<KdTree>>,
}

/// One block of exact cost.
#[derive(Debug, Clone)]
pub struct CostBlock {
    pub cost: f64,
    pub matrices: Vec<Unitary2>,
}

fn key(q: &[f64; 4]) -> [i64; 4] {
    q.map(|x| (x * 1e9).round() as i64)
}

fn cliffords() -> (Vec<[f64; 4]>, Vec<Vec<Gate>>) {
    let gens = [Gate::H, Gate::S, Gate::X, Gate::Y, Gate::Z];
    let id = Unitary2::identity().quaternion();
    let mut seen: HashMap<[i64; 4], usize> = HashMap::from([(key(&id), 0)]);
    let mut quats = vec![id];
    let mut words = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in gens {
            let q = canonical_sign(qmul(quats[i], g.matrix().quaternion()));
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key(&q)) {
                e.insert(quats.len());
                let mut w = words[i].clone();
                w.push(g);
                quats.push(q);
                words.push(w);
                queue.push_back(quats.len() - 1);
            }
        }
    }
    (quats, words)
}

/// Enumerates every unitary reachable with non-Clifford cost up to `r_trunc`,
/// deduplicated under global phase (tolerance `1e-9`) and kept at its lowest cost.
///
/// # Errors
///
/// `InvalidParameter` if `r_trunc` is negative or not a multiple of `1/2`;
/// `ResourceLimit` naming the last complete cost if more than `max_elements`
/// unitaries would be stored.
pub fn enumerate_blocks(gate_set: &GateSet, r_trunc: f64, max_elements: usize) -> Result<Blocks> {
    let halves = to_halves(r_trunc)?;
    let (cq, cwords) = cliffords();
    let gens: Vec<[f64; 4]> = gate_set.costs.iter().map(|&(l, _)| Gate::Phase(l).matrix().quaternion()).collect();
    let mut seen: HashMap<[i64; 4], ()> = HashMap::new();
    let mut elems = Vec::new();
    let mut quats = Vec::new();
    for (i, q) in cq.iter().enumerate() {
        seen.insert(key(q), ());
        elems.push(Elem {
            cost: 0,
            clifford: i as u8,
            gen: u8::MAX,
            parent: 0,
        });
        quats.push(*q);
    }
    let mut ends = vec![elems.len()];
    let mut starts = vec![0usize];
    for c in 1..=halves {
        starts.push(elems.len());
        for (gi, &(_, gc)) in gate_set.costs.iter().enumerate() {
            if gc > c {
                continue;
            }
            let base = (c - gc) as usize;
            for parent in starts[base]..ends[base] {
                let tail = qmul(gens[gi], quats[parent]);
                for (ci, cl) in cq.iter().enumerate() {
                    let q = canonical_sign(qmul(*cl, tail));
                    if seen.insert(key(&q), ()).is_none() {
                        if elems.len() >= max_elements {
                            return Err(Error::ResourceLimit(format!(
                                "more than {max_elements} unitaries; complete up to cost {}",
                                (c - 1) as f64 / 2.0
                            )));
                        }
                        elems.push(Elem {
                            cost: c,
                            clifford: ci as u8,
                            gen: gi as u8,
                            parent: parent as u32,
                        });
                        quats.push(q);
                    }
                }
            }
        }
        ends.push(elems.len());
    }
    Ok(Blocks {
        gate_set: gate_set.clone(),
        r_trunc_halves: halves,
        elems,
        quats,
        clifford_words: cwords,
        ends,
        supers: OnceLock::new(),
        moments: OnceLock::new(),
        trees: (0..=halves).map(|_| OnceLock::new()).collect(),
    })
}

pub(crate) fn to_halves(r: f64) -> Result<u32> {
    let h = (2.0 * r).round();
    if !(r >= 0.0) || (2.0 * r - h).abs() > 1e-9 || h > u32::MAX as f64 {
        return invalid(format!("cost {r} is not a non-negative multiple of 1/2"));
    }
    Ok(h as u32)
}

impl Blocks {
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn r_trunc(&self) -> f64 {
        self.r_trunc_halves as f64 / 2.0
    }

    /// Number of elements of cost at most `halves`.
    pub(crate) fn end(&self, halves: u32) -> usize {
        self.ends[halves.min(self.r_trunc_halves) as usize]
    }

    pub(crate) fn quats(&self) -> &[[f64; 4]] {
        &self.quats
    }

    pub(crate) fn ends(&self) -> &[usize] {
        &self.ends
    }

    pub(crate) fn cost_halves(&self, i: usize) -> u32 {
        self.elems[i].cost
    }

    /// Size of the block of exact cost `halves / 2`.
    pub fn block_size(&self, halves: u32) -> usize {
        if halves > self.r_trunc_halves {
            return 0;
        }
        let start = if halves == 0 { 0 } else { self.ends[halves as usize - 1] };
        self.ends[halves as usize] - start
    }

    /// Costs with a non-empty block.
    pub fn achievable_costs(&self) -> Vec<f64> {
        (0..=self.r_trunc_halves)
            .filter(|&h| self.block_size(h) > 0)
            .map(|h| h as f64 / 2.0)
            .collect()
    }

    pub fn word(&self, mut i: usize) -> Vec<Gate> {
        let mut out = Vec::new();
        loop {
            let e = self.elems[i];
            out.extend_from_slice(&self.clifford_words[e.clifford as usize]);
            if e.gen == u8::MAX {
                return out;
            }
            out.push(Gate::Phase(self.gate_set.costs[e.gen as usize].0));
            i = e.parent as usize;
        }
    }

    pub fn matrix(&self, i: usize) -> Unitary2 {
        Unitary2::from_quaternion(self.quats[i])
    }

    /// Materialised blocks, one per achievable cost.
    pub fn cost_blocks(&self) -> Vec<CostBlock> {
        (0..=self.r_trunc_halves)
            .filter(|&h| self.block_size(h) > 0)
            .map(|h| {
                let start = if h == 0 { 0 } else { self.ends[h as usize - 1] };
                CostBlock {
                    cost: h as f64 / 2.0,
                    matrices: (start..self.ends[h as usize]).map(|i| self.matrix(i)).collect(),
                }
            })
            .collect()
    }
}

/// Multisets of non-Clifford gates with total cost exactly `total` (half units),
/// as counts per gate-set level.
fn multisets(costs: &[u32], total: u32) -> Vec<Vec<u32>> {
    fn rec(costs: &[u32], total: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let i = cur.len();
        if i == costs.len() {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for n in 0..=total / costs[i] {
            cur.push(n);
            rec(costs, total - n * costs[i], cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(costs, total, &mut Vec::new(), &mut out);
    out
}

/// Sorted (descending) group-cost tuples for splitting `counts` into groups of cost
/// at most `cap`, using the fewest groups possible.
fn groupings(costs: &[u32], counts: &[u32], cap: u32) -> BTreeSet<Vec<u32>> {
    let total: u32 = costs.iter().zip(counts).map(|(c, n)| c * n).sum();
    let mut min_groups = total.div_ceil(cap.max(1)).max(1) as usize;
    loop {
        let mut found = BTreeSet::new();
        let mut cur = Vec::new();
        split(costs, &mut counts.to_vec(), cap, min_groups, u32::MAX, &mut cur, &mut found);
        if !found.is_empty() || min_groups > 64 {
            return found;
        }
        min_groups += 1;
    }
}

fn split(costs: &[u32], left: &mut Vec<u32>, cap: u32, groups: usize, max_cost: u32, cur: &mut Vec<u32>, out: &mut BTreeSet<Vec<u32>>) {
    if left.iter().all(|&n| n == 0) {
        if cur.len() <= groups {
            out.insert(cur.clone());
        }
        return;
    }
    if cur.len() == groups {
        return;
    }
    // choose one group (as a count vector) of cost <= min(cap, max_cost), groups non-increasing
    let mut pick = vec![0u32; costs.len()];
    fn each(costs: &[u32], left: &mut Vec<u32>, i: usize, pick: &mut Vec<u32>, budget: u32, f: &mut dyn FnMut(&mut Vec<u32>, &[u32], u32)) {
        if i == costs.len() {
            let c: u32 = costs.iter().zip(pick.iter()).map(|(a, b)| a * b).sum();
            if c > 0 {
                f(left, pick, c);
            }
            return;
        }
        for n in 0..=left[i].min(budget / costs[i]) {
            pick[i] = n;
            left[i] -= n;
            each(costs, left, i + 1, pick, budget - n * costs[i], f);
            left[i] += n;
        }
        pick[i] = 0;
    }
    let budget = cap.min(max_cost);
    each(costs, left, 0, &mut pick, budget, &mut |left, _pick, c| {
        cur.push(c);
        split(costs, left, cap, groups, c, cur, out);
        cur.pop();
    });
}

fn covers(costs: &[u32], counts: &[u32], tuple: &[u32]) -> bool {
    fn rec(costs: &[u32], left: &mut Vec<u32>, tuple: &[u32]) -> bool {
        let Some((&first, rest)) = tuple.split_first() else {
            return left.iter().all(|&n| n == 0);
        };
        fn pick(costs: &[u32], left: &mut Vec<u32>, i: usize, need: u32, rest: &[u32]) -> bool {
            if i == costs.len() {
                return need == 0 && rec(costs, left, rest);
            }
            for n in 0..=left[i].min(need / costs[i]) {
                left[i] -= n;
                let ok = pick(costs, left, i + 1, need - n * costs[i], rest);
                left[i] += n;
                if ok {
                    return true;
                }
            }
            false
        }
        pick(costs, left, 0, first, rest)
    }
    rec(costs, &mut counts.to_vec(), tuple)
}

/// Cost tuples `(R_1, ..., R_l)` with `R_i <= r_trunc` and `sum R_i = total` such
/// that every multiset of non-Clifford gates of total cost `total` splits into
/// groups of exactly these costs. Built by greedy set cover over the fewest-group
/// splits of each multiset; tuples are sorted in descending order.
///
/// # Errors
///
/// `InvalidParameter` for costs that are not multiples of `1/2`, or `r_trunc`
/// below the cheapest gate when `total > r_trunc`.
pub fn partitionings(total: f64, r_trunc: f64, gate_set: &GateSet) -> Result<Vec<Vec<f64>>> {
    let th = to_halves(total)?;
    let cap = to_halves(r_trunc)?;
    let out = partitionings_halves(th, cap, gate_set)?;
    Ok(out.into_iter().map(|t| t.into_iter().map(|h| h as f64 / 2.0).collect()).collect())
}

pub(crate) fn partitionings_halves(total: u32, cap: u32, gate_set: &GateSet) -> Result<Vec<Vec<u32>>> {
    if total <= cap {
        return Ok(vec![vec![total]]);
    }
    let costs: Vec<u32> = gate_set.costs.iter().map(|c| c.1).collect();
    if costs.iter().all(|&c| c > cap) {
        return invalid("truncation cost is below every non-Clifford gate");
    }
    let sets = multisets(&costs, total);
    let mut candidates: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut options: Vec<BTreeSet<Vec<u32>>> = Vec::new();
    for counts in &sets {
        let g = groupings(&costs, counts, cap);
        candidates.extend(g.iter().cloned());
        options.push(g);
    }
    let mut uncovered: Vec<usize> = (0..sets.len()).filter(|&i| !options[i].is_empty()).collect();
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    while !uncovered.is_empty() {
        let best = candidates
            .iter()
            .map(|t| {
                let n = uncovered.iter().filter(|&&i| covers(&costs, &sets[i], t)).count();
                (n, std::cmp::Reverse(t.len()), t.clone())
            })
            .max()
            .filter(|b| b.0 > 0);
        let Some((_, _, t)) = best else {
            break;
        };
        uncovered.retain(|&i| !covers(&costs, &sets[i], &t));
        chosen.push(t);
    }
    chosen.sort_unstable_by(|a, b| b.cmp(a));
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_group_has_24_elements() {
        let (q, w) = cliffords();
        assert_eq!(q.len(), 24);
        for (qi, wi) in q.iter().zip(&w) {
            let m = Unitary2::from_word(wi).quaternion();
            for i in 0..4 {
                assert!((m[i] - qi[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(&[2, 5], 10), vec![vec![0, 2], vec![5, 0]]);
    }

    #[test]
    fn cover_check() {
        assert!(covers(&[2, 5], &[5, 0], &[8, 2]));
        assert!(!covers(&[2, 5], &[0, 2], &[8, 2]));
        assert!(covers(&[2, 5], &[0, 2], &[5, 5]));
    }
}
