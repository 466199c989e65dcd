use crate::experience::{squared_distance, ExperiencePool};

use super::{Best, LEAF_SIZE};

#[derive(Clone, Debug)]
enum Children {
    Leaf(Vec<usize>),
    Split { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    centre: Vec<f64>,
    radius: f64,
    children: Children,
}

/// Exact nearest-neighbour index over nested balls. Each node is split by
/// picking two far-apart seeds and sending every point to the nearer one.
#[derive(Clone, Debug)]
pub struct BallTree {
    nodes: Vec<Node>,
}

impl BallTree {
    pub fn build(points: &ExperiencePool) -> Self {
        let mut tree = BallTree { nodes: Vec::new() };
        if !points.is_empty() {
            tree.build_node(points, (0..points.len()).collect());
        }
        tree
    }

    fn build_node(&mut self, points: &ExperiencePool, members: Vec<usize>) -> usize {
        let dim = points.dim();
        let mut centre = vec![0.0; dim];
        for &i in &members {
            for (c, v) in centre.iter_mut().zip(points.state(i)) {
                *c += v;
            }
        }
        for c in &mut centre {
            *c /= members.len() as f64;
        }
        let max_sq = members
            .iter()
            .map(|&i| squared_distance(points.state(i), &centre))
            .fold(0.0, f64::max);
        // Inflated so rounding in the centroid and the bound can never prune
        // a ball that holds the true nearest point.
        let scale = centre.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let radius = max_sq.sqrt() * (1.0 + 1e-9) + 1e-12 * scale;

        let id = self.nodes.len();
        let split = if members.len() > LEAF_SIZE {
            farthest_seeds(points, &members)
        } else {
            None
        };
        let Some((a, b)) = split else {
            self.nodes.push(Node {
                centre,
                radius,
                children: Children::Leaf(members),
            });
            return id;
        };
        self.nodes.push(Node {
            centre,
            radius,
            children: Children::Leaf(Vec::new()),
        });

        let (sa, sb) = (points.state(a), points.state(b));
        let (left, right): (Vec<usize>, Vec<usize>) = members.into_iter().partition(|&i| {
            let s = points.state(i);
            squared_distance(s, sa) <= squared_distance(s, sb)
        });
        let left = self.build_node(points, left);
        let right = self.build_node(points, right);
        self.nodes[id].children = Children::Split { left, right };
        id
    }

    fn ball_bound(&self, node: usize, query: &[f64]) -> f64 {
        let node = &self.nodes[node];
        let gap = squared_distance(query, &node.centre).sqrt() - node.radius;
        if gap > 0.0 {
            gap * gap
        } else {
            0.0
        }
    }

    pub(super) fn nearest(&self, points: &ExperiencePool, query: &[f64]) -> Best {
        let mut best = Best::none();
        if !self.nodes.is_empty() {
            let bound = self.ball_bound(0, query);
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
        match &self.nodes[node].children {
            Children::Leaf(members) => {
                for &i in members {
                    best.offer(i, squared_distance(points.state(i), query));
                }
            }
            &Children::Split { left, right } => {
                let bl = self.ball_bound(left, query);
                let br = self.ball_bound(right, query);
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

    pub fn max_leaf(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match &n.children {
                Children::Leaf(m) => Some(m.len()),
                Children::Split { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// The point farthest from the first member, then the point farthest from
/// that one. `None` when all members coincide.
fn farthest_seeds(points: &ExperiencePool, members: &[usize]) -> Option<(usize, usize)> {
    let farthest_from = |from: usize| {
        let origin = points.state(from);
        members
            .iter()
            .map(|&i| (i, squared_distance(points.state(i), origin)))
            .fold(
                (from, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
    };
    let (a, _) = farthest_from(members[0]);
    let (b, d) = farthest_from(a);
    (d > 0.0).then_some((a, b))
}
