use super::blocks::{partitionings_halves, to_halves, Blocks};
use super::nearest::KdTree;
use super::{qconj, qdot, qmul, SequenceResult, Unitary2};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Scan of every enumerated unitary; needs the budget within the truncation.
    Exhaustive,
    ChainSampler,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exhaustive" => Ok(Backend::Exhaustive),
            "chain-sampler" | "chain" | "sampler" => Ok(Backend::ChainSampler),
            other => crate::error::invalid(format!("unknown backend '{other}'")),
        }
    }
}

type Mat4 = [[f64; 4]; 4];

/// Left multiplication by `a` as a matrix on quaternion coordinates.
fn left_mat(a: [f64; 4]) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let col = qmul(a, e);
        for i in 0..4 {
            m[i][j] = col[i];
        }
    }
    m
}

fn right_mat(b: [f64; 4]) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let col = qmul(e, b);
        for i in 0..4 {
            m[i][j] = col[i];
        }
    }
    m
}

/// `m^T x m`.
fn congruence(m: &Mat4, x: &Mat4) -> Mat4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = (0..4).map(|k| x[i][k] * m[k][j]).sum();
        }
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| m[k][i] * t[k][j]).sum();
        }
    }
    out
}

const PAIRS: [(usize, usize); 10] = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// `moments[n]`: sums of `q_i q_j` over the first `n` elements, so that the summed
/// quadratic form of any prefix is a ten-term dot product.
fn moments(blocks: &Blocks) -> &[[f64; 10]] {
    blocks.moments.get_or_init(|| {
        let mut acc = [0.0; 10];
        let mut out = vec![acc];
        for q in blocks.quats() {
            for (a, &(i, j)) in acc.iter_mut().zip(&PAIRS) {
                *a += q[i] * q[j];
            }
            out.push(acc);
        }
        out
    })
}

fn tree(blocks: &Blocks, halves: u32) -> &KdTree {
    let h = halves.min(blocks.r_trunc_halves);
    blocks.trees[h as usize].get_or_init(|| {
        let end = blocks.end(h);
        let keys: Vec<u32> = (0..end).map(|i| blocks.cost_halves(i)).collect();
        KdTree::new(&blocks.quats()[..end], &keys)
    })
}

/// Coefficients turning a moment vector into `sum q^T g q`.
fn form(g: &Mat4) -> [f64; 10] {
    PAIRS.map(|(i, j)| if i == j { g[i][i] } else { g[i][j] + g[j][i] })
}

/// For every cost prefix, the linear map `X -> sum_m R(q_m*) X R(q_m*)^T` over its
/// unitaries, as a 16x16 matrix acting on row-major `X`.
fn superoperators(blocks: &Blocks) -> &[Vec<f64>] {
    blocks.supers.get_or_init(|| {
        let quats = blocks.quats();
        let mut s = vec![0.0; 256];
        let mut start = 0;
        blocks
            .ends()
            .iter()
            .map(|&end| {
                accumulate(&mut s, &quats[start..end]);
                start = end;
                s.clone()
            })
            .collect()
    })
}

fn accumulate(s: &mut [f64], quats: &[[f64; 4]]) {
    for q in quats {
        let r = right_mat(qconj(*q));
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        s[(a * 4 + b) * 16 + c * 4 + d] += r[a][c] * r[b][d];
                    }
                }
            }
        }
    }
}

fn apply_super(s: &[f64], x: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let row = &s[(a * 4 + b) * 16..(a * 4 + b + 1) * 16];
            out[a][b] = (0..16).map(|i| row[i] * x[i / 4][i % 4]).sum();
        }
    }
    out
}

struct Candidate {
    eps2: f64,
    cost: u32,
    indices: Vec<usize>,
}

impl Candidate {
    fn better_than(&self, o: &Candidate) -> bool {
        const TIE: f64 = 1e-13;
        if self.eps2 < o.eps2 - TIE {
            return true;
        }
        if self.eps2 > o.eps2 + TIE {
            return false;
        }
        (self.cost, &self.indices) < (o.cost, &o.indices)
    }
}

/// Element of `0..end` maximising `|<q, z>|`, ties to the lower cost and index.
fn best_match(blocks: &Blocks, end: usize, z: &[f64; 4]) -> (usize, f64) {
    let quats = blocks.quats();
    let mut best = (0usize, -1.0f64);
    for (i, q) in quats[..end].iter().enumerate() {
        let d = qdot(q, z).abs();
        if d > best.1 + 1e-13 || (d > best.1 - 1e-13 && blocks.cost_halves(i) < blocks.cost_halves(best.0)) {
            best = (i, d.max(best.1));
        }
    }
    best
}

/// Synthesizes `target` within non-Clifford cost `budget`.
///
/// The exhaustive backend returns the global optimum over all enumerated unitaries
/// of cost at most `budget`. The chain sampler runs, for every partitioning of the
/// budget, `samples` draws: each slot but the last is drawn from the conditional
/// distribution of `|Tr(U^dag V)|^2` over the unitaries of cost at most its share,
/// the last slot is chosen optimally. Gate sets with mixed costs run every distinct
/// slot order of each partitioning. Draw `s` of the `c`-th chain uses ChaCha8
/// stream `c * 2^32 + s` of `seed`.
///
/// # Errors
///
/// `EmptyBudget` for a negative budget; `InvalidParameter` for budgets not on the
/// half-unit lattice or an exhaustive budget beyond the truncation.
pub fn synthesize(target: &Unitary2, blocks: &Blocks, budget: f64, backend: Backend, samples: u64, seed: u64) -> Result<SequenceResult> {
    if budget < 0.0 {
        return Err(Error::EmptyBudget(format!("budget {budget} is negative")));
    }
    let bh = to_halves((2.0 * budget).floor() / 2.0)?;
    let u = target.quaternion();
    let best = if bh <= blocks.r_trunc_halves {
        // a single slot: the optimum over the whole prefix
        if backend == Backend::ChainSampler && samples == 0 {
            return Err(Error::InvalidParameter("chain sampler needs at least one sample".into()));
        }
        let (i, d) = best_match(blocks, blocks.end(bh), &u);
        Candidate {
            eps2: 1.0 - d * d,
            cost: blocks.cost_halves(i),
            indices: vec![i],
        }
    } else {
        match backend {
            Backend::Exhaustive => {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive synthesis needs budget <= {} (truncation)",
                    blocks.r_trunc()
                )))
            }
            Backend::ChainSampler => {
                if samples == 0 {
                    return Err(Error::InvalidParameter("chain sampler needs at least one sample".into()));
                }
                let parts = partitionings_halves(bh, blocks.r_trunc_halves, &blocks.gate_set)?;
                let mut costs: Vec<u32> = blocks.gate_set.costs.iter().map(|c| c.1).collect();
                costs.dedup();
                let mut best: Option<Candidate> = None;
                let mut stream = 0u64;
                for tuple in &parts {
                    for order in orderings(tuple, costs.len() > 1) {
                        let c = sample_chain(blocks, &order, u, samples, seed, stream);
                        stream += 1;
                        if best.as_ref().map_or(true, |b| c.better_than(b)) {
                            best = Some(c);
                        }
                    }
                }
                best.ok_or_else(|| Error::EmptyBudget("no partitioning of the budget".into()))?
            }
        }
    };
    let mut word = Vec::new();
    for &i in &best.indices {
        word.extend(blocks.word(i));
    }
    SequenceResult::from_word(word, target, &blocks.gate_set)
}

/// Slot orders to sample for a tuple. With a single gate cost any order embeds
/// every word, so only the ascending one is used (the optimised last slot is then
/// the widest); with mixed costs a word fits a tuple only in some orders, so every
/// distinct permutation is tried, ascending first.
fn orderings(tuple: &[u32], mixed: bool) -> Vec<Vec<u32>> {
    let mut t = tuple.to_vec();
    t.sort_unstable();
    let mut out = vec![t.clone()];
    if !mixed {
        return out;
    }
    // lexicographic successors until the sequence is descending
    while let Some(i) = (1..t.len()).rev().find(|&i| t[i - 1] < t[i]) {
        let j = (i..t.len()).rev().find(|&j| t[j] > t[i - 1]).unwrap();
        t.swap(i - 1, j);
        t[i..].reverse();
        out.push(t.clone());
    }
    out
}

fn sample_chain(blocks: &Blocks, tuple: &[u32], u: [f64; 4], samples: u64, seed: u64, stream: u64) -> Candidate {
    let quats = blocks.quats();
    let ends: Vec<usize> = tuple.iter().map(|&h| blocks.end(h)).collect();
    let l = tuple.len();
    // q_env[i]: sum over slots i.. of w w^T with w = u (x) conj(suffix)
    let mut env: Vec<Mat4> = vec![[[0.0; 4]; 4]; l + 1];
    for i in 0..4 {
        for j in 0..4 {
            env[l][i][j] = u[i] * u[j];
        }
    }
    let supers = superoperators(blocks);
    for i in (1..l).rev() {
        env[i] = apply_super(&supers[tuple[i].min(blocks.r_trunc_halves) as usize], &env[i + 1]);
    }
    let mom = moments(blocks);
    let last_tree = tree(blocks, tuple[l - 1]);
    let first = form(&env[1]);
    let run = |s: u64| -> Candidate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((stream << 32) | s);
        let mut indices = Vec::with_capacity(l);
        let mut prefix = [1.0, 0.0, 0.0, 0.0];
        for i in 0..l - 1 {
            let f = if i == 0 {
                first
            } else {
                form(&congruence(&left_mat(prefix), &env[i + 1]))
            };
            let m = draw(&mom[..=ends[i]], &f, &mut rng);
            indices.push(m);
            prefix = qmul(prefix, quats[m]);
        }
        let hit = last_tree.best(&qmul(qconj(prefix), u));
        indices.push(hit.id as usize);
        Candidate {
            eps2: 1.0 - hit.dot * hit.dot,
            cost: indices.iter().map(|&i| blocks.cost_halves(i)).sum(),
            indices,
        }
    };
    (0..samples)
        .into_par_iter()
        .map(run)
        .reduce_with(|a, b| if b.better_than(&a) { b } else { a })
        .expect("samples > 0")
}

/// Draws an element with probability proportional to its quadratic form, by
/// bisection on the prefix sums `mom`.
fn draw(mom: &[[f64; 10]], f: &[f64; 10], rng: &mut ChaCha8Rng) -> usize {
    let weight = |k: usize| -> f64 { mom[k].iter().zip(f).map(|(a, b)| a * b).sum() };
    let n = mom.len() - 1;
    let total = weight(n);
    if !(total > 0.0) {
        return rng.gen_range(0..n.max(1));
    }
    let x = rng.gen::<f64>() * total;
    let (mut lo, mut hi) = (0usize, n);
    // smallest k with weight(k + 1) > x
    while lo < hi {
        let mid = (lo + hi) / 2;
        if weight(mid + 1) > x {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo.min(n - 1)
}
