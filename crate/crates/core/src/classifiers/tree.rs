//! C4.5-style decision tree: gain-ratio splits, binary thresholds on
//! continuous features, one branch per category on categorical features.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{ensure, Result};

/// Minimum information gain for a split to count.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        pos_fraction: f64,
        n: usize,
    },
    Threshold {
        feature: usize,
        threshold: f64,
        pos_fraction: f64,
        below: Box<Node>,
        above: Box<Node>,
    },
    Category {
        feature: usize,
        pos_fraction: f64,
        /// One child per vocabulary entry; `None` where no training row fell.
        children: Vec<Option<Node>>,
    },
}

impl Node {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            Node::Leaf { pos_fraction, .. } => pos_fraction - 0.5,
            Node::Threshold {
                feature,
                threshold,
                below,
                above,
                ..
            } => {
                if x[*feature] <= *threshold {
                    below.score(x)
                } else {
                    above.score(x)
                }
            }
            Node::Category {
                feature,
                pos_fraction,
                children,
            } => match children.get(x[*feature] as usize) {
                Some(Some(child)) => child.score(x),
                _ => pos_fraction - 0.5,
            },
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Threshold { below, above, .. } => 1 + below.depth().max(above.depth()),
            Node::Category { children, .. } => {
                1 + children.iter().flatten().map(Node::depth).max().unwrap_or(0)
            }
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Node>) {
        match self {
            Node::Leaf { .. } => out.push(self),
            Node::Threshold { below, above, .. } => {
                below.leaves(out);
                above.leaves(out);
            }
            Node::Category { children, .. } => {
                for c in children.iter().flatten() {
                    c.leaves(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    root: Node,
}

impl TreeModel {
    /// Positive fraction of the reached leaf minus one half.
    pub fn decision_score(&self, x: &[f64]) -> f64 {
        self.root.score(x)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// `(training rows, positive fraction)` of every leaf.
    pub fn leaf_stats(&self) -> Vec<(usize, f64)> {
        let mut leaves = Vec::new();
        self.root.leaves(&mut leaves);
        leaves
            .into_iter()
            .map(|l| match *l {
                Node::Leaf { n, pos_fraction } => (n, pos_fraction),
                _ => unreachable!(),
            })
            .collect()
    }
}

pub fn train_decision_tree(train: &Dataset, max_depth: usize, min_leaf: usize) -> Result<TreeModel> {
    ensure!(!train.is_empty(), InvalidArgument, "decision tree training set is empty");
    ensure!(min_leaf >= 1, InvalidArgument, "min_leaf must be at least 1");
    let builder = Builder {
        data: train,
        max_depth,
        min_leaf,
        vocab_sizes: train
            .schema()
            .features
            .iter()
            .map(|f| f.vocabulary().map(<[String]>::len))
            .collect(),
    };
    let rows: Vec<usize> = (0..train.n_rows()).collect();
    Ok(TreeModel {
        root: builder.grow(rows, 0),
    })
}

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Entropy of a partition into blocks of the given sizes.
fn split_info(sizes: impl Iterator<Item = usize>, n: usize) -> f64 {
    sizes
        .filter(|&s| s > 0)
        .map(|s| {
            let p = s as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone)]
enum SplitRule {
    Threshold(f64),
    Category,
}

#[derive(Debug, Clone)]
struct Candidate {
    feature: usize,
    rule: SplitRule,
    gain: f64,
    ratio: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    vocab_sizes: Vec<Option<usize>>,
}

impl Builder<'_> {
    fn grow(&self, rows: Vec<usize>, depth: usize) -> Node {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.data.label(i).is_positive()).count();
        let pos_fraction = pos as f64 / n as f64;
        let leaf = Node::Leaf { pos_fraction, n };
        if depth >= self.max_depth || pos == 0 || pos == n || n < 2 * self.min_leaf {
            return leaf;
        }
        let Some(best) = self.best_split(&rows, pos) else {
            return leaf;
        };
        let j = best.feature;
        match best.rule {
            SplitRule::Threshold(t) => {
                let (below, above): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&i| self.data.row(i)[j] <= t);
                Node::Threshold {
                    feature: j,
                    threshold: t,
                    pos_fraction,
                    below: Box::new(self.grow(below, depth + 1)),
                    above: Box::new(self.grow(above, depth + 1)),
                }
            }
            SplitRule::Category => {
                let v = self.vocab_sizes[j].expect("categorical feature");
                let mut groups: Vec<Vec<usize>> = vec![Vec::new(); v];
                for i in rows {
                    groups[self.data.row(i)[j] as usize].push(i);
                }
                let children = groups
                    .into_iter()
                    .map(|g| (!g.is_empty()).then(|| self.grow(g, depth + 1)))
                    .collect();
                Node::Category {
                    feature: j,
                    pos_fraction,
                    children,
                }
            }
        }
    }

    /// Highest gain ratio among candidates whose gain is at least the average
    /// gain of all candidates; ties go to the lower feature index.
    fn best_split(&self, rows: &[usize], pos: usize) -> Option<Candidate> {
        let base = entropy(pos, rows.len());
        let candidates: Vec<Candidate> = (0..self.data.n_features())
            .filter_map(|j| match self.vocab_sizes[j] {
                None => self.threshold_split(rows, j, base),
                Some(v) => self.category_split(rows, j, v, base),
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let avg = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
        let mut best: Option<Candidate> = None;
        for c in candidates {
            if c.gain + 1e-12 < avg {
                continue;
            }
            if best.as_ref().map_or(true, |b| c.ratio > b.ratio) {
                best = Some(c);
            }
        }
        best
    }

    fn threshold_split(&self, rows: &[usize], j: usize, base: f64) -> Option<Candidate> {
        let n = rows.len();
        let mut vals: Vec<(f64, bool)> = rows
            .iter()
            .map(|&i| (self.data.row(i)[j], self.data.label(i).is_positive()))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_pos = vals.iter().filter(|v| v.1).count();
        let mut best: Option<(f64, f64, usize)> = None;
        let mut left_pos = 0;
        for s in 1..n {
            left_pos += usize::from(vals[s - 1].1);
            if vals[s - 1].0 == vals[s].0 || s < self.min_leaf || n - s < self.min_leaf {
                continue;
            }
            let cond = (s as f64 * entropy(left_pos, s)
                + (n - s) as f64 * entropy(total_pos - left_pos, n - s))
                / n as f64;
            let gain = base - cond;
            if best.map_or(true, |(g, _, _)| gain > g) {
                let mid = 0.5 * (vals[s - 1].0 + vals[s].0);
                // guard against rounding the midpoint onto the upper value
                let t = if mid < vals[s].0 { mid } else { vals[s - 1].0 };
                best = Some((gain, t, s));
            }
        }
        let (gain, t, s) = best?;
        if gain <= MIN_GAIN {
            return None;
        }
        let si = split_info([s, n - s].into_iter(), n);
        Some(Candidate {
            feature: j,
            rule: SplitRule::Threshold(t),
            gain,
            ratio: gain / si,
        })
    }

    fn category_split(&self, rows: &[usize], j: usize, v: usize, base: f64) -> Option<Candidate> {
        let n = rows.len();
        let mut counts = vec![[0usize; 2]; v];
        for &i in rows {
            let c = &mut counts[self.data.row(i)[j] as usize];
            c[0] += 1;
            c[1] += usize::from(self.data.label(i).is_positive());
        }
        let nonempty: Vec<&[usize; 2]> = counts.iter().filter(|c| c[0] > 0).collect();
        if nonempty.len() < 2 || nonempty.iter().any(|c| c[0] < self.min_leaf) {
            return None;
        }
        let cond: f64 = nonempty
            .iter()
            .map(|c| c[0] as f64 * entropy(c[1], c[0]))
            .sum::<f64>()
            / n as f64;
        let gain = base - cond;
        if gain <= MIN_GAIN {
            return None;
        }
        let si = split_info(nonempty.iter().map(|c| c[0]), n);
        Some(Candidate {
            feature: j,
            rule: SplitRule::Category,
            gain,
            ratio: gain / si,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::fixtures::continuous;
    use crate::data::{FeatureSchema, FeatureSpec, Label};
    use proptest::prelude::*;

    #[test]
    fn separable_line_needs_one_split() {
        let d = continuous(&[&[-3.0], &[-2.0], &[-1.0], &[1.0], &[2.0]], &[-1, -1, -1, 1, 1]);
        let t = train_decision_tree(&d, 10, 1).unwrap();
        assert_eq!(t.depth(), 1);
        match t.root() {
            Node::Threshold { threshold, .. } => assert_eq!(*threshold, 0.0),
            other => panic!("{other:?}"),
        }
        for i in 0..d.n_rows() {
            assert_eq!(Label::from_score(t.decision_score(d.row(i))), d.label(i));
        }
    }

    #[test]
    fn pure_input_is_a_leaf() {
        let d = continuous(&[&[0.0], &[1.0]], &[1, 1]);
        let t = train_decision_tree(&d, 10, 1).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.decision_score(&[5.0]), 0.5);
    }

    fn binary_pair() -> Dataset {
        let schema = Arc::new(
            FeatureSchema::new(
                vec![
                    FeatureSpec::categorical("a", ["0", "1"]),
                    FeatureSpec::categorical("b", ["0", "1"]),
                ],
                "y",
            )
            .unwrap(),
        );
        // a determines y; b is split 1/1 within each a-group
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 0.0]];
        let labels = [-1, -1, 1, 1, 1].map(crate::data::fixtures::label).to_vec();
        Dataset::from_rows(schema, &rows, labels).unwrap()
    }

    #[test]
    fn gain_ratio_prefers_the_informative_feature() {
        let d = binary_pair();
        // exhaustive oracle: gain ratio of each single-feature split
        let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -(p * p.log2() + (1.0 - p) * (1.0 - p).log2()) };
        let base = h(3.0 / 5.0);
        let gain_a = base;
        let si_a = h(2.0 / 5.0);
        let gain_b = base - (3.0 / 5.0 * h(2.0 / 3.0) + 2.0 / 5.0 * h(1.0 / 2.0));
        let si_b = h(3.0 / 5.0);
        assert!(gain_a / si_a > gain_b / si_b);

        let t = train_decision_tree(&d, 10, 1).unwrap();
        match t.root() {
            Node::Category { feature, .. } => assert_eq!(*feature, 0),
            other => panic!("{other:?}"),
        }
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn unseen_category_uses_node_fraction() {
        let schema = Arc::new(
            FeatureSchema::new(vec![FeatureSpec::categorical("a", ["x", "y", "z"])], "y").unwrap(),
        );
        let rows = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![1.0]];
        let labels = [1, 1, -1, -1, -1].map(crate::data::fixtures::label).to_vec();
        let d = Dataset::from_rows(schema, &rows, labels).unwrap();
        let t = train_decision_tree(&d, 5, 1).unwrap();
        assert!((t.decision_score(&[2.0]) - (0.4 - 0.5)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn depth_and_leaf_limits_hold(
            rows in proptest::collection::vec((-10i32..10, -10i32..10, any::<bool>()), 2..120),
            max_depth in 1usize..6,
            min_leaf in 1usize..8,
        ) {
            let data: Vec<Vec<f64>> = rows.iter().map(|&(a, b, _)| vec![f64::from(a), f64::from(b)]).collect();
            let refs: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
            let labels: Vec<i8> = rows.iter().map(|r| if r.2 { 1 } else { -1 }).collect();
            let d = continuous(&refs, &labels);
            let t = train_decision_tree(&d, max_depth, min_leaf).unwrap();
            prop_assert!(t.depth() <= max_depth);
            let leaves = t.leaf_stats();
            prop_assert_eq!(leaves.iter().map(|l| l.0).sum::<usize>(), d.n_rows());
            for (n, frac) in leaves {
                let _ = frac;
                prop_assert!(n >= min_leaf || n == d.n_rows());
            }
        }
    }
}
