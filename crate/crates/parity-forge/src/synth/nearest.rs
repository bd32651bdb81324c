//! Static kd-tree over unit quaternions, queried for the largest `|<q, z>|`.

const LEAF: usize = 8;

#[derive(Debug)]
pub(crate) struct KdTree {
    points: Vec<[f64; 4]>,
    /// Element index of each stored point.
    ids: Vec<u32>,
    /// Tie-break key of each stored point, lower wins.
    keys: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: [f64; 4],
    hi: [f64; 4],
    start: u32,
    end: u32,
    /// Children, `u32::MAX` for a leaf.
    left: u32,
    right: u32,
}

/// Best match so far: `|dot|`, key, id.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub dot: f64,
    pub key: u32,
    pub id: u32,
}

const TIE: f64 = 1e-13;

impl Hit {
    fn beats(&self, o: &Hit) -> bool {
        if self.dot > o.dot + TIE {
            return true;
        }
        if self.dot < o.dot - TIE {
            return false;
        }
        (self.key, self.id) < (o.key, o.id)
    }
}

impl KdTree {
    pub(crate) fn new(points: &[[f64; 4]], keys: &[u32]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        build(points, &mut order, 0, &mut nodes);
        KdTree {
            points: order.iter().map(|&i| points[i as usize]).collect(),
            keys: order.iter().map(|&i| keys[i as usize]).collect(),
            ids: order,
            nodes,
        }
    }

    /// Point maximising `|<q, z>|`; ties go to the lower key, then the lower id.
    pub(crate) fn best(&self, z: &[f64; 4]) -> Hit {
        let mut best = Hit {
            dot: -1.0,
            key: u32::MAX,
            id: u32::MAX,
        };
        if self.nodes.is_empty() {
            return best;
        }
        let neg = z.map(|x| -x);
        for target in [z, &neg] {
            self.search(0, target, &mut best);
        }
        best
    }

    fn search(&self, n: usize, z: &[f64; 4], best: &mut Hit) {
        let node = self.nodes[n];
        // squared distance from z to the box; |q - z|^2 = 2 - 2 <q, z> on the sphere
        let d2: f64 = (0..4)
            .map(|i| {
                let d = (node.lo[i] - z[i]).max(z[i] - node.hi[i]).max(0.0);
                d * d
            })
            .sum();
        if 1.0 - d2 / 2.0 < best.dot - TIE {
            return;
        }
        if node.left == u32::MAX {
            for i in node.start as usize..node.end as usize {
                let p = &self.points[i];
                let dot = p[0] * z[0] + p[1] * z[1] + p[2] * z[2] + p[3] * z[3];
                let hit = Hit {
                    dot,
                    key: self.keys[i],
                    id: self.ids[i],
                };
                if hit.beats(best) {
                    *best = hit;
                }
            }
            return;
        }
        let (l, r) = (node.left as usize, node.right as usize);
        let centre = |m: usize| -> f64 {
            let b = &self.nodes[m];
            (0..4).map(|i| (0.5 * (b.lo[i] + b.hi[i]) - z[i]).powi(2)).sum()
        };
        let (a, b) = if centre(l) <= centre(r) { (l, r) } else { (r, l) };
        self.search(a, z, best);
        self.search(b, z, best);
    }
}

fn build(points: &[[f64; 4]], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for &i in order.iter() {
        for d in 0..4 {
            lo[d] = lo[d].min(points[i as usize][d]);
            hi[d] = hi[d].max(points[i as usize][d]);
        }
    }
    let me = nodes.len();
    nodes.push(Node {
        lo,
        hi,
        start: offset as u32,
        end: (offset + order.len()) as u32,
        left: u32::MAX,
        right: u32::MAX,
    });
    if order.len() > LEAF {
        let axis = (0..4).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| points[a as usize][axis].total_cmp(&points[b as usize][axis]));
        let (left, right) = order.split_at_mut(mid);
        let l = build(points, left, offset, nodes);
        let r = build(points, right, offset + mid, nodes);
        nodes[me].left = l;
        nodes[me].right = r;
    }
    me as u32
}
