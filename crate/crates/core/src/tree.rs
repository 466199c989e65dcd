//! Depth-capped binary classification trees, split greedily by entropy or
//! Gini impurity. These are the un-condensed baselines the nearest-boundary
//! students are compared against.
//!
//! Depth counts nodes on the longest root-to-leaf path, so a lone leaf has
//! depth 1 and `max_depth = 5` allows four levels of splits.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experience::{check_dim, check_finite, header_value, ActionId, ExperiencePool, Real};
use crate::policy::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    Entropy,
    Gini,
}

impl Criterion {
    fn impurity(self, counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        match self {
            Criterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|&c| {
                        let p = c as f64 / n;
                        p * p
                    })
                    .sum::<f64>()
            }
            Criterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Entropy => "entropy",
            Criterion::Gini => "gini",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Criterion::Entropy),
            "gini" => Ok(Criterion::Gini),
            other => Err(Error::Name(format!("criterion `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf(ActionId),
    Split {
        dim: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTreeModel {
    criterion: Criterion,
    max_depth: usize,
    dim: usize,
    action_count: usize,
    root: TreeNode,
}

struct Grower<'a> {
    pool: &'a ExperiencePool,
    criterion: Criterion,
    max_depth: usize,
}

struct SplitChoice {
    dim: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.pool.action_count()];
        for &i in rows {
            counts[self.pool.action(i).0] += 1;
        }
        counts
    }

    fn grow(&self, rows: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.counts(rows);
        // majority, lowest action on ties
        let majority = counts
            .iter()
            .enumerate()
            .fold(
                (0, 0),
                |best, (a, &c)| if c > best.1 { (a, c) } else { best },
            )
            .0;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth {
            return TreeNode::Leaf(ActionId(majority));
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return TreeNode::Leaf(ActionId(majority));
        };
        let mut cut = 0;
        for k in 0..rows.len() {
            if self.pool.state(rows[k])[split.dim] <= split.threshold {
                rows.swap(cut, k);
                cut += 1;
            }
        }
        let (left, right) = rows.split_at_mut(cut);
        left.sort_unstable();
        right.sort_unstable();
        TreeNode::Split {
            dim: split.dim,
            threshold: split.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    /// Highest impurity decrease over midpoints of consecutive distinct
    /// values; earlier dimension, then smaller threshold, wins ties.
    /// Zero-gain splits are allowed so impure nodes keep splitting.
    fn best_split(&self, rows: &[usize], counts: &[usize]) -> Option<SplitChoice> {
        let n = rows.len();
        let parent = self.criterion.impurity(counts, n);
        let mut best: Option<SplitChoice> = None;
        let mut sorted = rows.to_vec();
        for dim in 0..self.pool.dim() {
            let value = |i: usize| self.pool.state(i)[dim];
            sorted.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let mut left = vec![0; counts.len()];
            let mut right = counts.to_vec();
            for k in 0..n - 1 {
                let a = self.pool.action(sorted[k]).0;
                left[a] += 1;
                right[a] -= 1;
                let (lo, hi) = (value(sorted[k]), value(sorted[k + 1]));
                if lo == hi {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                let child = (nl as f64 * self.criterion.impurity(&left, nl)
                    + nr as f64 * self.criterion.impurity(&right, nr))
                    / n as f64;
                let gain = parent - child;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitChoice {
                        dim,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        best
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // adjacent floats: keep `lo` on the left side
    if mid >= hi {
        lo
    } else {
        mid
    }
}

impl DecisionTreeModel {
    /// Greedy top-down induction on every experience in `pool`.
    pub fn fit(pool: &ExperiencePool, criterion: Criterion, max_depth: usize) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        if max_depth == 0 {
            return Err(Error::Contract("max_depth must be at least 1".into()));
        }
        let grower = Grower {
            pool,
            criterion,
            max_depth,
        };
        let mut rows: Vec<usize> = (0..pool.len()).collect();
        let root = grower.grow(&mut rows, 1);
        Ok(DecisionTreeModel {
            criterion,
            max_depth,
            dim: pool.dim(),
            action_count: pool.action_count(),
            root,
        })
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn predict(&self, state: &[f64]) -> Result<ActionId> {
        check_dim(self.dim, state.len())?;
        check_finite(state)?;
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(a) => return Ok(*a),
                TreeNode::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    node = if state[*dim] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Table-style model name, e.g. `dt_gini_l5`.
    pub fn label(&self) -> String {
        format!("dt_{}_l{}", self.criterion, self.max_depth)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "#tree criterion={} max_depth={} dim={} actions={}",
            self.criterion, self.max_depth, self.dim, self.action_count
        )?;
        let mut stack = vec![(&self.root, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            let indent = "  ".repeat(depth);
            match node {
                TreeNode::Leaf(a) => writeln!(w, "{indent}leaf {a}")?,
                TreeNode::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    writeln!(w, "{indent}dim {dim} <= {}", Real(*threshold))?;
                    stack.push((right, depth + 1));
                    stack.push((left, depth + 1));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = Vec::new();
        for line in r.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                lines.push(line);
            }
        }
        let header = lines
            .first()
            .ok_or_else(|| Error::format(1, "missing #tree header"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#tree") {
            return Err(Error::format(1, "expected #tree header"));
        }
        let criterion: String = header_value(fields.next(), "criterion")?;
        let max_depth = header_value(fields.next(), "max_depth")?;
        let dim = header_value(fields.next(), "dim")?;
        let action_count = header_value(fields.next(), "actions")?;
        let mut pos = 1;
        let root = parse_node(&lines, &mut pos, 0, dim, action_count)?;
        if pos != lines.len() {
            return Err(Error::format(pos + 1, "trailing lines after tree"));
        }
        Ok(DecisionTreeModel {
            criterion: criterion.parse()?,
            max_depth,
            dim,
            action_count,
            root,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

fn parse_node(
    lines: &[String],
    pos: &mut usize,
    depth: usize,
    dim: usize,
    action_count: usize,
) -> Result<TreeNode> {
    let lineno = *pos + 1;
    let line = lines
        .get(*pos)
        .ok_or_else(|| Error::format(lineno, "unexpected end of tree"))?;
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent != 2 * depth {
        return Err(Error::format(lineno, "bad indentation"));
    }
    *pos += 1;
    let words: Vec<&str> = line.split_whitespace().collect();
    match words.as_slice() {
        ["leaf", a] => {
            let a: usize = a.parse().map_err(|_| Error::format(lineno, "bad action"))?;
            if a >= action_count {
                return Err(Error::format(lineno, "action out of range"));
            }
            Ok(TreeNode::Leaf(ActionId(a)))
        }
        ["dim", d, "<=", t] => {
            let d: usize = d
                .parse()
                .map_err(|_| Error::format(lineno, "bad dimension"))?;
            let t: f64 = t
                .parse()
                .map_err(|_| Error::format(lineno, "bad threshold"))?;
            if d >= dim || !t.is_finite() {
                return Err(Error::format(lineno, "split out of range"));
            }
            let left = parse_node(lines, pos, depth + 1, dim, action_count)?;
            let right = parse_node(lines, pos, depth + 1, dim, action_count)?;
            Ok(TreeNode::Split {
                dim: d,
                threshold: t,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        _ => Err(Error::format(
            lineno,
            "expected `leaf <a>` or `dim <d> <= <t>`",
        )),
    }
}

impl Policy for DecisionTreeModel {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        self.predict(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_pool() -> ExperiencePool {
        ExperiencePool::from_rows(1, 2, [([0.0], 0), ([1.0], 0), ([2.0], 1), ([3.0], 1)]).unwrap()
    }

    fn xor_pool() -> ExperiencePool {
        ExperiencePool::from_rows(
            2,
            2,
            [
                ([0.0, 0.0], 0),
                ([1.0, 1.0], 0),
                ([0.0, 1.0], 1),
                ([1.0, 0.0], 1),
            ],
        )
        .unwrap()
    }

    fn accuracy(tree: &DecisionTreeModel, pool: &ExperiencePool) -> f64 {
        let hits = pool
            .iter()
            .filter(|(s, a)| tree.predict(s).unwrap() == *a)
            .count();
        hits as f64 / pool.len() as f64
    }

    #[test]
    fn one_dimensional_split() {
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let tree = DecisionTreeModel::fit(&line_pool(), criterion, 5).unwrap();
            assert_eq!(
                tree.root(),
                &TreeNode::Split {
                    dim: 0,
                    threshold: 1.5,
                    left: Box::new(TreeNode::Leaf(ActionId(0))),
                    right: Box::new(TreeNode::Leaf(ActionId(1))),
                }
            );
            assert_eq!(tree.predict(&[1.4]).unwrap(), ActionId(0));
            assert_eq!(tree.predict(&[1.6]).unwrap(), ActionId(1));
            assert_eq!(tree.predict(&[1.5]).unwrap(), ActionId(0));
        }
    }

    #[test]
    fn pure_pool_is_a_leaf() {
        let pool = ExperiencePool::from_rows(2, 3, (0..10).map(|i| ([i as f64, 0.0], 2))).unwrap();
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let tree = DecisionTreeModel::fit(&pool, criterion, 10).unwrap();
            assert_eq!(tree.root(), &TreeNode::Leaf(ActionId(2)));
            assert_eq!(tree.predict(&[-7.0, 3.0]).unwrap(), ActionId(2));
        }
    }

    #[test]
    fn shallow_tree_cannot_solve_xor() {
        for depth in [1, 2] {
            let tree = DecisionTreeModel::fit(&xor_pool(), Criterion::Gini, depth).unwrap();
            assert!(accuracy(&tree, &xor_pool()) <= 0.75);
        }
        let tree = DecisionTreeModel::fit(&xor_pool(), Criterion::Gini, 3).unwrap();
        assert_eq!(accuracy(&tree, &xor_pool()), 1.0);
    }

    #[test]
    fn majority_ties_take_lowest_action() {
        let pool = ExperiencePool::from_rows(1, 3, [([0.0], 2), ([0.0], 1)]).unwrap();
        let tree = DecisionTreeModel::fit(&pool, Criterion::Entropy, 4).unwrap();
        assert_eq!(tree.root(), &TreeNode::Leaf(ActionId(1)));
    }

    #[test]
    fn errors() {
        let empty = ExperiencePool::new(1, 2).unwrap();
        assert!(matches!(
            DecisionTreeModel::fit(&empty, Criterion::Gini, 3),
            Err(Error::EmptyPool)
        ));
        assert!(DecisionTreeModel::fit(&line_pool(), Criterion::Gini, 0).is_err());
        let tree = DecisionTreeModel::fit(&line_pool(), Criterion::Gini, 3).unwrap();
        assert!(matches!(
            tree.predict(&[0.0, 1.0]),
            Err(Error::Dimension { .. })
        ));
        assert!("cart".parse::<Criterion>().is_err());
    }

    #[test]
    fn text_format() {
        let tree = DecisionTreeModel::fit(&line_pool(), Criterion::Gini, 5).unwrap();
        assert_eq!(
            tree.to_text(),
            "#tree criterion=gini max_depth=5 dim=1 actions=2\ndim 0 <= 1.5\n  leaf 0\n  leaf 1\n"
        );
        assert!(DecisionTreeModel::parse(
            "#tree criterion=gini max_depth=5 dim=1 actions=2\ndim 0 <= 1.5\n  leaf 0\n"
        )
        .is_err());
        assert!(DecisionTreeModel::parse(
            "#tree criterion=gini max_depth=5 dim=1 actions=2\nleaf 0\nleaf 1\n"
        )
        .is_err());
    }

    #[test]
    fn label() {
        let tree = DecisionTreeModel::fit(&line_pool(), Criterion::Entropy, 10).unwrap();
        assert_eq!(tree.label(), "dt_entropy_l10");
    }

    fn arb_pool() -> impl Strategy<Value = ExperiencePool> {
        (
            1usize..4,
            prop::collection::vec((prop::collection::vec(-50i32..50, 3), 0usize..3), 1..120),
        )
            .prop_map(|(dim, rows)| {
                ExperiencePool::from_rows(
                    dim,
                    3,
                    rows.into_iter().map(|(s, a)| {
                        (
                            s[..dim].iter().map(|&v| v as f64 * 0.1).collect::<Vec<_>>(),
                            a,
                        )
                    }),
                )
                .unwrap()
            })
    }

    /// Drops every experience whose state also occurs with another action.
    fn contradiction_free(pool: &ExperiencePool) -> ExperiencePool {
        let pool = pool.dedupe();
        let keep: Vec<usize> = (0..pool.len())
            .filter(|&i| {
                (0..pool.len())
                    .all(|j| pool.state(i) != pool.state(j) || pool.action(i) == pool.action(j))
            })
            .collect();
        pool.select(&keep).unwrap()
    }

    proptest! {
        #[test]
        fn invariants(pool in arb_pool(), depth in 1usize..8, gini in any::<bool>()) {
            let criterion = if gini { Criterion::Gini } else { Criterion::Entropy };
            let tree = DecisionTreeModel::fit(&pool, criterion, depth).unwrap();
            prop_assert!(tree.depth() <= depth);
            prop_assert_eq!(DecisionTreeModel::parse(&tree.to_text()).unwrap(), tree.clone());
            check_thresholds(tree.root(), &pool)?;
        }

        #[test]
        fn unlimited_depth_fits_training_set(pool in arb_pool(), gini in any::<bool>()) {
            let pool = contradiction_free(&pool);
            prop_assume!(!pool.is_empty());
            let criterion = if gini { Criterion::Gini } else { Criterion::Entropy };
            let tree = DecisionTreeModel::fit(&pool, criterion, pool.len().max(1)).unwrap();
            prop_assert_eq!(accuracy(&tree, &pool), 1.0);
        }

        #[test]
        fn criteria_agree_on_separable_data(cut in -4.0f64..4.0, xs in prop::collection::vec(-5.0f64..5.0, 2..60)) {
            let pool = ExperiencePool::from_rows(1, 2, xs.iter().map(|&x| ([x], usize::from(x > cut)))).unwrap();
            let g = DecisionTreeModel::fit(&pool, Criterion::Gini, 5).unwrap();
            let e = DecisionTreeModel::fit(&pool, Criterion::Entropy, 5).unwrap();
            prop_assert_eq!(g.root(), e.root());
            prop_assert_eq!(accuracy(&g, &pool), 1.0);
        }
    }

    fn check_thresholds(node: &TreeNode, pool: &ExperiencePool) -> Result<(), TestCaseError> {
        if let TreeNode::Split {
            dim,
            threshold,
            left,
            right,
        } = node
        {
            let below = pool.iter().any(|(s, _)| s[*dim] <= *threshold);
            let above = pool.iter().any(|(s, _)| s[*dim] > *threshold);
            prop_assert!(below && above);
            check_thresholds(left, pool)?;
            check_thresholds(right, pool)?;
        }
        Ok(())
    }
}
