use crate::experience::{squared_distance, ExperiencePool};

use super::{Best, LEAF_SIZE};

#[derive(Clone, Debug)]
enum Children {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Children,
}

/// Exact nearest-neighbour index splitting on the dimension of widest spread
/// at the median. Nodes carry tight bounding boxes used for pruning.
#[derive(Clone, Debug)]
pub struct KdTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn build(points: &ExperiencePool) -> Self {
        let mut tree = KdTree {
            nodes: Vec::new(),
            order: (0..points.len()).collect(),
        };
        if !points.is_empty() {
            tree.build_node(points, 0, points.len());
        }
        tree
    }

    fn build_node(&mut self, points: &ExperiencePool, start: usize, end: usize) -> usize {
        let dim = points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.order[start..end] {
            for (k, &v) in points.state(i).iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            children: Children::Leaf { start, end },
        });

        let node = &self.nodes[id];
        let (split_dim, spread) = (0..dim).map(|k| (k, node.hi[k] - node.lo[k])).fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }

        self.order[start..end].sort_by(|&a, &b| {
            points.state(a)[split_dim]
                .total_cmp(&points.state(b)[split_dim])
                .then(a.cmp(&b))
        });
        let mid = start + (end - start) / 2;
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id].children = Children::Split { left, right };
        id
    }

    fn box_bound(&self, node: usize, query: &[f64]) -> f64 {
        let node = &self.nodes[node];
        query
            .iter()
            .zip(node.lo.iter().zip(&node.hi))
            .map(|(&q, (&lo, &hi))| {
                let d = q - q.clamp(lo, hi);
                d * d
            })
            .sum()
    }

    pub(super) fn nearest(&self, points: &ExperiencePool, query: &[f64]) -> Best {
        let mut best = Best::none();
        if !self.nodes.is_empty() {
            let bound = self.box_bound(0, query);
            self.search(points, 0, bound, query, &mut best);
        }
        best
    }

    fn search(
        &self,
        points: &ExperiencePool,
        node: usize,
        bound: f64,
        query: &[f64],
        best: &mut Best,
    ) {
        if bound > best.sq_dist {
            return;
        }
        match self.nodes[node].children {
            Children::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    best.offer(i, squared_distance(points.state(i), query));
                }
            }
            Children::Split { left, right } => {
                let bl = self.box_bound(left, query);
                let br = self.box_bound(right, query);
                if bl <= br {
                    self.search(points, left, bl, query, best);
                    self.search(points, right, br, query, best);
                } else {
                    self.search(points, right, br, query, best);
                    self.search(points, left, bl, query, best);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(tree: &KdTree, node: usize) -> usize {
            match tree.nodes[node].children {
                Children::Leaf { .. } => 1,
                Children::Split { left, right } => 1 + go(tree, left).max(go(tree, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    /// Number of points in the largest leaf.
    pub fn max_leaf(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n.children {
                Children::Leaf { start, end } => Some(end - start),
                Children::Split { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }
}
