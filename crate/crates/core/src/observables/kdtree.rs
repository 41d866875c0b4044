//! Static kd-tree for k-nearest-neighbour distances in up to three dimensions.

const LEAF_SIZE: usize = 12;

pub struct KdTree<'a> {
    points: &'a [[f64; 3]],
    dims: usize,
    index: Vec<u32>,
    nodes: Vec<Node>,
}

enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[inline]
fn dist_sq(a: &[f64; 3], b: &[f64; 3], dims: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dims {
        let t = a[k] - b[k];
        s += t * t;
    }
    s
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [[f64; 3]], dims: usize) -> Self {
        assert!((1..=3).contains(&dims));
        assert!(points.len() < u32::MAX as usize);
        let mut tree = Self { points, dims, index: (0..points.len() as u32).collect(), nodes: Vec::new() };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // Split on the axis of largest spread.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.index[start..end] {
            let p = &self.points[i as usize];
            for k in 0..self.dims {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let dim = (0..self.dims).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.index[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| pts[a as usize][dim].total_cmp(&pts[b as usize][dim]));
        let value = pts[self.index[mid] as usize][dim];
        self.nodes.push(Node::Split { dim, value, left: 0, right: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// Distance from `points[query]` to its `k`-th nearest other point.
    pub fn kth_neighbor_distance(&self, query: usize, k: usize) -> f64 {
        assert!(k >= 1 && k < self.points.len());
        let q = &self.points[query];
        // Sorted ascending list of the best k squared distances.
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        self.search(0, q, query as u32, k, &mut best);
        best[k - 1].sqrt()
    }

    fn search(&self, node: usize, q: &[f64; 3], skip: u32, k: usize, best: &mut Vec<f64>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.index[start..end] {
                    if i == skip {
                        continue;
                    }
                    let d = dist_sq(q, &self.points[i as usize], self.dims);
                    if best.len() < k || d < best[k - 1] {
                        let pos = best.partition_point(|&x| x <= d);
                        best.insert(pos, d);
                        best.truncate(k);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, k, best);
                if best.len() < k || diff * diff <= best[k - 1] {
                    self.search(far, q, skip, k, best);
                }
            }
        }
    }
}
