//! Single regression trees with axis-aligned splits.
//!
//! Growth is best-first: the leaf whose best split yields the largest
//! variance reduction on the current targets is expanded next, so
//! `max_leaf_nodes` binds naturally. Ties on gain resolve to the earliest
//! created leaf, then the lowest feature index, then the lowest threshold,
//! which keeps fitting deterministic.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Nodes stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct FrontierLeaf {
    node: usize,
    depth: usize,
    indices: Vec<usize>,
    best: Option<SplitEval>,
}

#[derive(Clone, Copy)]
struct SplitEval {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grow a tree on `targets` bounded jointly by `max_depth` (edges) and
/// `max_leaf_nodes`. Leaf values are the in-leaf target means. Also
/// returns the leaf-node index each sample reached, so callers can rewrite
/// leaf values for non-smooth losses.
pub(crate) fn grow(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    max_depth: usize,
    max_leaf_nodes: usize,
) -> (RegressionTree, Vec<usize>) {
    let n = targets.len();
    let all: Vec<usize> = (0..n).collect();
    let root_value = mean(targets, &all);
    let mut nodes = vec![Node::Leaf { value: root_value }];
    let mut leaf_of = vec![0usize; n];
    let mut n_leaves = 1usize;

    let mut frontier = vec![FrontierLeaf {
        node: 0,
        depth: 0,
        best: if max_depth > 0 {
            best_split(x, targets, &all)
        } else {
            None
        },
        indices: all,
    }];

    while n_leaves < max_leaf_nodes {
        // Earliest-created leaf wins gain ties: strict comparison while
        // scanning in creation order.
        let mut chosen: Option<usize> = None;
        let mut chosen_gain = 0.0;
        for (slot, leaf) in frontier.iter().enumerate() {
            if let Some(best) = &leaf.best {
                if chosen.is_none() || best.gain > chosen_gain {
                    chosen = Some(slot);
                    chosen_gain = best.gain;
                }
            }
        }
        let Some(slot) = chosen else { break };

        let leaf = frontier.swap_remove(slot);
        let split = leaf.best.expect("chosen leaf has a split");
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = leaf
            .indices
            .iter()
            .partition(|&&i| x[[i, split.feature]] <= split.threshold);
        debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

        let left_node = nodes.len();
        let right_node = nodes.len() + 1;
        nodes.push(Node::Leaf {
            value: mean(targets, &left_idx),
        });
        nodes.push(Node::Leaf {
            value: mean(targets, &right_idx),
        });
        nodes[leaf.node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_node,
            right: right_node,
        };
        n_leaves += 1;

        for (child_node, indices) in [(left_node, left_idx), (right_node, right_idx)] {
            for &i in &indices {
                leaf_of[i] = child_node;
            }
            let depth = leaf.depth + 1;
            let best = if depth < max_depth {
                best_split(x, targets, &indices)
            } else {
                None
            };
            frontier.push(FrontierLeaf {
                node: child_node,
                depth,
                indices,
                best,
            });
        }
    }

    let (tree, remap) = to_preorder(nodes);
    for leaf in &mut leaf_of {
        *leaf = remap[*leaf];
    }
    (tree, leaf_of)
}

fn mean(targets: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| targets[i]).sum::<f64>() / indices.len() as f64
}

/// Best variance-reduction split over all features and midpoints between
/// consecutive distinct values. Iteration order (features ascending,
/// thresholds ascending) plus strict improvement gives the lowest-feature,
/// lowest-threshold tie-break.
fn best_split(x: ArrayView2<'_, f64>, targets: &[f64], indices: &[usize]) -> Option<SplitEval> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let total: f64 = indices.iter().map(|&i| targets[i]).sum();
    let parent_score = total * total / n as f64;

    let mut best: Option<SplitEval> = None;
    let mut sorted = indices.to_vec();
    for feature in 0..x.ncols() {
        sorted.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
        let mut left_sum = 0.0;
        for pos in 0..n - 1 {
            left_sum += targets[sorted[pos]];
            let lo = x[[sorted[pos], feature]];
            let hi = x[[sorted[pos + 1], feature]];
            if lo == hi {
                continue;
            }
            let n_left = (pos + 1) as f64;
            let n_right = (n - pos - 1) as f64;
            let right_sum = total - left_sum;
            let gain =
                left_sum * left_sum / n_left + right_sum * right_sum / n_right - parent_score;
            if gain <= 0.0 {
                continue;
            }
            // Midpoint, pulled back to the lower value when rounding lands
            // on the upper one, so the right child can never be empty.
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                threshold = lo;
            }
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(SplitEval {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }
    best
}

/// Rebuild the arena in preorder (node before children, left subtree
/// first). Returns the old-index -> new-index map.
fn to_preorder(nodes: Vec<Node>) -> (RegressionTree, Vec<usize>) {
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut ordered = Vec::with_capacity(nodes.len());

    fn visit(nodes: &[Node], at: usize, ordered: &mut Vec<Node>, remap: &mut [usize]) -> usize {
        let new_index = ordered.len();
        remap[at] = new_index;
        ordered.push(nodes[at].clone());
        if let Node::Split { left, right, .. } = nodes[at] {
            let new_left = visit(nodes, left, ordered, remap);
            let new_right = visit(nodes, right, ordered, remap);
            if let Node::Split { left, right, .. } = &mut ordered[new_index] {
                *left = new_left;
                *right = new_right;
            }
        }
        new_index
    }

    visit(&nodes, 0, &mut ordered, &mut remap);
    (RegressionTree { nodes: ordered }, remap)
}
