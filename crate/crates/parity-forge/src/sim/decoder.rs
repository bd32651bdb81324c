use super::trellis::Trellis;
use super::ErrorModel;
use crate::bits::BitVec;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Decoder backend for the pre-layer detector window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// Exact round-by-round decoding when a round has few enough checks,
    /// otherwise lookup for `m <= 5` and belief propagation with OSD above.
    #[default]
    Auto,
    /// Most likely explanation among all single and double faults, with
    /// belief propagation + OSD for syndromes outside the table.
    Lookup,
    BpOsd,
}

impl std::str::FromStr for DecoderKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(DecoderKind::Auto),
            "lookup" => Ok(DecoderKind::Lookup),
            "bp-osd" | "bposd" => Ok(DecoderKind::BpOsd),
            other => crate::error::invalid(format!("unknown decoder '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
struct Column {
    rows: Vec<u32>,
    residual: Vec<u32>,
    llr: f64,
}

const BP_ITERS: usize = 30;
const BP_SCALE: f64 = 0.75;
const CACHE_LIMIT: usize = 1 << 18;
const PAIR_TABLE_LIMIT: usize = 2500;
const FULL_OSD_ROWS: usize = 256;
const OSD_SINGLES: usize = 64;
const OSD_PAIRS: usize = 16;

/// Maps fired window detectors to the estimated residual X on layer qubits.
#[derive(Debug, Clone)]
pub struct WindowDecoder {
    n_rows: usize,
    cols: Vec<Column>,
    row_cols: Vec<Vec<u32>>,
    /// Rows reachable through two overlapping columns; fired detectors linked
    /// this way are decoded together.
    near: Vec<Vec<u32>>,
    /// Small column sets with empty syndrome, indexed by member column.
    cycles: Vec<Vec<u32>>,
    col_cycles: Vec<Vec<u32>>,
    /// Syndrome -> columns of the best explanation with at most two faults.
    table: Option<HashMap<Vec<u32>, (f64, Vec<u32>)>>,
    cache: HashMap<Vec<u32>, Vec<u32>>,
    trellis: Option<Trellis>,
}

fn llr(p: f64) -> f64 {
    let p = p.clamp(1e-300, 0.5 - 1e-12);
    ((1.0 - p) / p).ln()
}

fn xor_into(acc: &mut Vec<u32>, other: &[u32]) {
    for &v in other {
        match acc.binary_search(&v) {
            Ok(i) => {
                acc.remove(i);
            }
            Err(i) => acc.insert(i, v),
        }
    }
}

fn near_rows(n_rows: usize, cols: &[Column], row_cols: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let adjacent: Vec<Vec<u32>> = (0..n_rows)
        .map(|r| {
            let mut v: Vec<u32> = row_cols[r].iter().flat_map(|&c| cols[c as usize].rows.iter().copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    adjacent
        .iter()
        .map(|a| {
            let mut v: Vec<u32> = a.iter().flat_map(|&r| adjacent[r as usize].iter().copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

impl WindowDecoder {
    pub fn new(model: &ErrorModel, kind: DecoderKind, m: u32) -> Self {
        let n_rows = model.n_window;
        let mut merged: BTreeMap<(Vec<u32>, Vec<u32>), f64> = BTreeMap::new();
        for mech in &model.mechanisms {
            let rows: Vec<u32> = mech.symptoms.iter().copied().filter(|&s| (s as usize) < n_rows).collect();
            if rows.is_empty() {
                continue;
            }
            let residual: Vec<u32> = mech
                .symptoms
                .iter()
                .filter(|&&s| s as usize >= model.n_detectors)
                .map(|&s| s - model.n_detectors as u32)
                .collect();
            let e = merged.entry((rows, residual)).or_insert(0.0);
            *e = *e + mech.p - 2.0 * *e * mech.p;
        }
        // columns with equal rows are indistinguishable: keep the likeliest residual
        let mut by_rows: BTreeMap<Vec<u32>, (f64, f64, Vec<u32>)> = BTreeMap::new();
        for ((rows, residual), p) in merged {
            let e = by_rows.entry(rows).or_insert((0.0, 0.0, Vec::new()));
            if p > e.1 {
                e.1 = p;
                e.2 = residual;
            }
            e.0 = e.0 + p - 2.0 * e.0 * p;
        }
        let cols: Vec<Column> = by_rows
            .into_iter()
            .map(|(rows, (p, _, residual))| Column {
                rows,
                residual,
                llr: llr(p),
            })
            .collect();
        let mut row_cols = vec![Vec::new(); n_rows];
        for (j, c) in cols.iter().enumerate() {
            for &r in &c.rows {
                row_cols[r as usize].push(j as u32);
            }
        }
        let use_table = match kind {
            DecoderKind::Lookup => true,
            DecoderKind::Auto => m <= 5,
            DecoderKind::BpOsd => false,
        };
        let near = near_rows(n_rows, &cols, &row_cols);
        let mut dec = WindowDecoder {
            n_rows,
            cols,
            row_cols,
            near,
            cycles: Vec::new(),
            col_cycles: Vec::new(),
            table: None,
            cache: HashMap::new(),
            trellis: None,
        };
        if kind == DecoderKind::Auto {
            let weighted: Vec<(Vec<u32>, f64)> = dec.cols.iter().map(|c| (c.rows.clone(), c.llr)).collect();
            dec.trellis = Trellis::new(n_rows, model.n_checks, &weighted);
        }
        if use_table && dec.trellis.is_none() {
            dec.table = Some(dec.build_table());
        }
        if dec.trellis.is_none() {
            dec.cycles = dec.local_cycles();
        }
        dec.col_cycles = vec![Vec::new(); dec.cols.len()];
        for (i, cyc) in dec.cycles.iter().enumerate() {
            for &c in cyc {
                dec.col_cycles[c as usize].push(i as u32);
            }
        }
        dec
    }

    pub fn n_columns(&self) -> usize {
        self.cols.len()
    }

    fn build_table(&self) -> HashMap<Vec<u32>, (f64, Vec<u32>)> {
        let mut table: HashMap<Vec<u32>, (f64, Vec<u32>)> = HashMap::new();
        let mut offer = |key: Vec<u32>, cost: f64, cols: Vec<u32>| {
            if key.is_empty() {
                return;
            }
            match table.get(&key) {
                Some((c, _)) if *c <= cost => {}
                _ => {
                    table.insert(key, (cost, cols));
                }
            }
        };
        for (i, a) in self.cols.iter().enumerate() {
            offer(a.rows.clone(), a.llr, vec![i as u32]);
        }
        let all_pairs = self.cols.len() <= PAIR_TABLE_LIMIT;
        for (i, a) in self.cols.iter().enumerate() {
            let partners: Vec<usize> = if all_pairs {
                (i + 1..self.cols.len()).collect()
            } else {
                let mut v: Vec<usize> = a
                    .rows
                    .iter()
                    .flat_map(|&r| self.row_cols[r as usize].iter().map(|&j| j as usize))
                    .filter(|&j| j > i)
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            for j in partners {
                let b = &self.cols[j];
                let mut key = a.rows.clone();
                xor_into(&mut key, &b.rows);
                offer(key, a.llr + b.llr, vec![i as u32, j as u32]);
            }
        }
        table
    }

    /// Triples and quadruples of overlapping columns whose rows cancel.
    fn local_cycles(&self) -> Vec<Vec<u32>> {
        let mut by_key: HashMap<Vec<u32>, Vec<(u32, u32)>> = HashMap::new();
        let single: HashMap<&[u32], u32> = self.cols.iter().enumerate().map(|(i, c)| (c.rows.as_slice(), i as u32)).collect();
        let mut cycles = Vec::new();
        for (i, a) in self.cols.iter().enumerate() {
            let mut partners: Vec<u32> = a
                .rows
                .iter()
                .flat_map(|&r| self.row_cols[r as usize].iter().copied())
                .filter(|&j| j as usize > i)
                .collect();
            partners.sort_unstable();
            partners.dedup();
            for j in partners {
                let mut key = a.rows.clone();
                xor_into(&mut key, &self.cols[j as usize].rows);
                if let Some(&c) = single.get(key.as_slice()) {
                    if c > j {
                        cycles.push(vec![i as u32, j, c]);
                    }
                }
                by_key.entry(key).or_default().push((i as u32, j));
            }
        }
        for pairs in by_key.values() {
            if pairs.len() > 64 {
                continue;
            }
            for (x, &(a, b)) in pairs.iter().enumerate() {
                for &(c, d) in &pairs[x + 1..] {
                    let mut cyc = vec![a, b, c, d];
                    cyc.sort_unstable();
                    cyc.dedup();
                    if cyc.len() == 4 {
                        cycles.push(cyc);
                    }
                }
            }
        }
        cycles.sort_unstable();
        cycles.dedup();
        cycles
    }

    /// Applies cost-reducing cycles until none is left.
    fn polish(&self, mut sol: Vec<u32>) -> Vec<u32> {
        sol.sort_unstable();
        for _ in 0..64 {
            let mut best: Option<(f64, u32)> = None;
            for &c in &sol {
                for &k in &self.col_cycles[c as usize] {
                    let delta: f64 = self.cycles[k as usize]
                        .iter()
                        .map(|&x| {
                            let w = self.cols[x as usize].llr;
                            if sol.binary_search(&x).is_ok() {
                                -w
                            } else {
                                w
                            }
                        })
                        .sum();
                    if delta < -1e-9 && best.map_or(true, |(d, _)| delta < d) {
                        best = Some((delta, k));
                    }
                }
            }
            match best {
                Some((_, k)) => xor_into(&mut sol, &self.cycles[k as usize]),
                None => break,
            }
        }
        sol
    }

    fn residual_of(&self, cols: &[u32]) -> Vec<u32> {
        let mut out = Vec::new();
        for &c in cols {
            xor_into(&mut out, &self.cols[c as usize].residual);
        }
        out
    }

    /// Estimated residual X on layer qubits for the fired window detectors.
    /// Never fails: non-converging syndromes fall back to greedy single faults.
    pub fn decode(&mut self, syndrome: &[u32]) -> Vec<u32> {
        if syndrome.is_empty() {
            return Vec::new();
        }
        if let Some(hit) = self.cache.get(syndrome) {
            return hit.clone();
        }
        let cols = self.solve(syndrome);
        let residual = self.residual_of(&cols);
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(syndrome.to_vec(), residual.clone());
        residual
    }

    /// Columns of the chosen explanation.
    pub fn solve(&self, syndrome: &[u32]) -> Vec<u32> {
        if let Some(sol) = self.trellis.as_ref().and_then(|t| t.solve(syndrome)) {
            return sol;
        }
        self.polish(self.explain(syndrome))
    }

    fn explain(&self, syndrome: &[u32]) -> Vec<u32> {
        let parts = self.components(syndrome);
        if parts.len() == 1 {
            return self.solve_part(syndrome);
        }
        let mut split = Vec::new();
        for part in &parts {
            xor_into(&mut split, &self.solve_part(part));
        }
        // parts can belong to one fault chain; keep the cheaper reading
        let joint = self.solve_part(syndrome);
        if self.cost(&joint) < self.cost(&split) {
            joint
        } else {
            split
        }
    }

    fn cost(&self, cols: &[u32]) -> f64 {
        cols.iter().map(|&c| self.cols[c as usize].llr).sum()
    }

    /// Splits fired detectors into groups not linked through `near`.
    fn components(&self, syndrome: &[u32]) -> Vec<Vec<u32>> {
        let mut seen = vec![false; syndrome.len()];
        let mut parts = Vec::new();
        for start in 0..syndrome.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut part = vec![syndrome[start]];
            let mut i = 0;
            while i < part.len() {
                let near = &self.near[part[i] as usize];
                for (k, d) in syndrome.iter().enumerate() {
                    if !seen[k] && near.binary_search(d).is_ok() {
                        seen[k] = true;
                        part.push(*d);
                    }
                }
                i += 1;
            }
            part.sort_unstable();
            parts.push(part);
        }
        parts
    }

    /// Best explanation with at most three faults from the table, if any.
    fn table_search(&self, syndrome: &[u32]) -> Option<Vec<u32>> {
        let table = self.table.as_ref()?;
        let mut best: Option<(f64, Vec<u32>)> = table.get(syndrome).cloned();
        let mut touching: Vec<u32> = syndrome.iter().flat_map(|&r| self.row_cols[r as usize].iter().copied()).collect();
        touching.sort_unstable();
        touching.dedup();
        for c in touching {
            let col = &self.cols[c as usize];
            let mut rest = syndrome.to_vec();
            xor_into(&mut rest, &col.rows);
            let Some((cost, pair)) = table.get(&rest) else {
                continue;
            };
            if pair.contains(&c) {
                continue;
            }
            let total = cost + col.llr;
            if best.as_ref().map_or(true, |(b, _)| total < *b) {
                let mut cols = pair.clone();
                cols.push(c);
                best = Some((total, cols));
            }
        }
        best.map(|(_, cols)| cols)
    }

    fn solve_part(&self, syndrome: &[u32]) -> Vec<u32> {
        if let Some(cols) = self.table_search(syndrome) {
            return cols;
        }
        let posterior = self.belief_propagation(syndrome);
        if let Some(sol) = self.osd(syndrome, &posterior) {
            return sol;
        }
        self.greedy(syndrome)
    }

    fn syndrome_of(&self, cols: &[u32]) -> Vec<u32> {
        let mut s = Vec::new();
        for &c in cols {
            xor_into(&mut s, &self.cols[c as usize].rows);
        }
        s
    }

    /// Min-sum belief propagation over the columns touching the fired detectors'
    /// neighbourhood. Returns posterior LLRs, stopping early once the hard
    /// decision reproduces the syndrome.
    fn belief_propagation(&self, syndrome: &[u32]) -> HashMap<u32, f64> {
        let (rows, cols) = self.cluster(syndrome, 2);
        let row_index: HashMap<u32, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let fired: Vec<bool> = rows.iter().map(|r| syndrome.binary_search(r).is_ok()).collect();
        // edges grouped by column
        let mut edge_row = Vec::new();
        let mut col_start = vec![0usize];
        for &c in &cols {
            for r in &self.cols[c as usize].rows {
                if let Some(&ri) = row_index.get(r) {
                    edge_row.push(ri);
                }
            }
            col_start.push(edge_row.len());
        }
        let mut row_edges: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
        for (e, &r) in edge_row.iter().enumerate() {
            row_edges[r].push(e);
        }
        let prior: Vec<f64> = cols.iter().map(|&c| self.cols[c as usize].llr).collect();
        let mut v2c: Vec<f64> = Vec::with_capacity(edge_row.len());
        for (j, &p) in prior.iter().enumerate() {
            for _ in col_start[j]..col_start[j + 1] {
                v2c.push(p);
            }
        }
        let mut c2v = vec![0.0; edge_row.len()];
        let mut total = prior.clone();
        for _ in 0..BP_ITERS {
            for (r, edges) in row_edges.iter().enumerate() {
                let mut sign = if fired[r] { -1.0 } else { 1.0 };
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for &e in edges {
                    let v = v2c[e];
                    if v < 0.0 {
                        sign = -sign;
                    }
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for &e in edges {
                    let own = if v2c[e] < 0.0 { -1.0 } else { 1.0 };
                    let mag = if e == arg { min2 } else { min1 };
                    c2v[e] = BP_SCALE * sign * own * mag;
                }
            }
            for j in 0..cols.len() {
                let range = col_start[j]..col_start[j + 1];
                let t = prior[j] + c2v[range.clone()].iter().sum::<f64>();
                total[j] = t;
                for e in range {
                    v2c[e] = t - c2v[e];
                }
            }
            let guess: Vec<u32> = cols.iter().zip(&total).filter(|(_, &t)| t < 0.0).map(|(&c, _)| c).collect();
            if self.syndrome_of(&guess) == syndrome {
                break;
            }
        }
        cols.iter().copied().zip(total).collect()
    }

    /// Rows and columns within `hops` column-row steps of the fired detectors.
    fn cluster(&self, syndrome: &[u32], hops: usize) -> (Vec<u32>, Vec<u32>) {
        let mut rows: Vec<u32> = syndrome.to_vec();
        let mut cols: Vec<u32> = Vec::new();
        for _ in 0..hops {
            let mut new_cols: Vec<u32> = rows.iter().flat_map(|&r| self.row_cols[r as usize].iter().copied()).collect();
            new_cols.sort_unstable();
            new_cols.dedup();
            cols = new_cols;
            let mut new_rows: Vec<u32> = cols.iter().flat_map(|&c| self.cols[c as usize].rows.iter().copied()).collect();
            new_rows.sort_unstable();
            new_rows.dedup();
            rows = new_rows;
        }
        (rows, cols)
    }

    /// Ordered-statistics decoding (order 0): Gaussian elimination over the
    /// cluster columns sorted by posterior reliability.
    fn osd(&self, syndrome: &[u32], posterior: &HashMap<u32, f64>) -> Option<Vec<u32>> {
        let by_reliability = |cols: &mut Vec<u32>| {
            cols.sort_by(|a, b| {
                let pa = posterior.get(a).copied().unwrap_or(self.cols[*a as usize].llr);
                let pb = posterior.get(b).copied().unwrap_or(self.cols[*b as usize].llr);
                pa.total_cmp(&pb).then(a.cmp(b))
            });
        };
        if self.n_rows <= FULL_OSD_ROWS {
            let rows: Vec<u32> = (0..self.n_rows as u32).collect();
            let mut cols: Vec<u32> = (0..self.cols.len() as u32).collect();
            by_reliability(&mut cols);
            return self.eliminate(syndrome, &rows, &cols);
        }
        for hops in [2, 3, 4, 6] {
            let (rows, mut cols) = self.cluster(syndrome, hops);
            by_reliability(&mut cols);
            if let Some(sol) = self.eliminate(syndrome, &rows, &cols) {
                return Some(sol);
            }
            if rows.len() == self.n_rows {
                break;
            }
        }
        None
    }

    /// Gaussian elimination over `cols` in the given order, followed by a
    /// combination sweep over the first non-pivot columns (OSD-CS).
    fn eliminate(&self, syndrome: &[u32], rows: &[u32], cols: &[u32]) -> Option<Vec<u32>> {
        let row_index: HashMap<u32, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let n = cols.len();
        // one extra column holds the syndrome
        let mut mat: Vec<BitVec> = vec![BitVec::zeros(n + 1); rows.len()];
        for (j, &c) in cols.iter().enumerate() {
            for r in &self.cols[c as usize].rows {
                if let Some(&ri) = row_index.get(r) {
                    mat[ri].flip(j);
                }
            }
        }
        for s in syndrome {
            mat[*row_index.get(s)?].flip(n);
        }
        let mut pivot_row = 0;
        let mut pivots = Vec::new();
        let mut free = Vec::new();
        for j in 0..n {
            if pivot_row == mat.len() {
                free.push(j);
                continue;
            }
            let Some(r) = (pivot_row..mat.len()).find(|&r| mat[r].get(j)) else {
                free.push(j);
                continue;
            };
            mat.swap(pivot_row, r);
            let pr = mat[pivot_row].clone();
            for (i, row) in mat.iter_mut().enumerate() {
                if i != pivot_row && row.get(j) {
                    row.xor_assign(&pr);
                }
            }
            pivots.push(j);
            pivot_row += 1;
        }
        if mat[pivot_row..].iter().any(|r| r.get(n)) {
            return None;
        }
        let np = pivots.len();
        let weight = |j: usize| self.cols[cols[j] as usize].llr;
        let base = BitVec::from_indices(np, (0..np).filter(|&i| mat[i].get(n)));
        let reduced: Vec<BitVec> = free
            .iter()
            .take(OSD_SINGLES)
            .map(|&j| BitVec::from_indices(np, (0..np).filter(|&i| mat[i].get(j))))
            .collect();
        let cost_of = |v: &BitVec, extra: f64| v.iter_ones().map(|i| weight(pivots[i])).sum::<f64>() + extra;
        let mut best = (cost_of(&base, 0.0), base.clone(), Vec::<usize>::new());
        for (a, ra) in reduced.iter().enumerate() {
            let mut v = base.clone();
            v.xor_assign(ra);
            let c = cost_of(&v, weight(free[a]));
            if c < best.0 {
                best = (c, v.clone(), vec![a]);
            }
            if a < OSD_PAIRS {
                for (b, rb) in reduced.iter().enumerate().take(OSD_PAIRS).skip(a + 1) {
                    let mut w = v.clone();
                    w.xor_assign(rb);
                    let c = cost_of(&w, weight(free[a]) + weight(free[b]));
                    if c < best.0 {
                        best = (c, w, vec![a, b]);
                    }
                }
            }
        }
        let mut sol: Vec<u32> = best.1.iter_ones().map(|i| cols[pivots[i]]).collect();
        sol.extend(best.2.iter().map(|&a| cols[free[a]]));
        sol.sort_unstable();
        Some(sol)
    }

    /// Repeatedly applies the most likely single fault that reduces the syndrome.
    fn greedy(&self, syndrome: &[u32]) -> Vec<u32> {
        let mut s = syndrome.to_vec();
        let mut chosen = Vec::new();
        for _ in 0..4 * syndrome.len() + 8 {
            let Some(&r) = s.first() else {
                break;
            };
            let best = self.row_cols[r as usize].iter().copied().max_by(|&a, &b| {
                let score = |c: u32| {
                    let col = &self.cols[c as usize];
                    let hit = col.rows.iter().filter(|x| s.binary_search(x).is_ok()).count() as f64;
                    2.0 * hit - col.rows.len() as f64 - 1e-3 * col.llr
                };
                score(a).total_cmp(&score(b)).then(b.cmp(&a))
            });
            match best {
                Some(c) => {
                    xor_into(&mut s, &self.cols[c as usize].rows);
                    xor_into(&mut chosen, &[c]);
                }
                None => {
                    s.remove(0);
                }
            }
        }
        chosen
    }
}
