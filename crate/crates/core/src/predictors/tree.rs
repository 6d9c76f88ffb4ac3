use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        score: f64,
        n: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with Gini splits. Leaves score the Laplace-smoothed
/// positive fraction `(pos + 1) / (n + 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<Node>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

impl Tree {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { score, .. } => return *score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn fit(xs: &[&[f64]], ys: &[u8], cfg: &TreeConfig) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..xs.len()).collect();
        tree.grow(xs, ys, idx, 0, cfg);
        tree
    }

    fn grow(&mut self, xs: &[&[f64]], ys: &[u8], idx: Vec<usize>, depth: usize, cfg: &TreeConfig) -> usize {
        let id = self.nodes.len();
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| ys[i] == 1).count();
        self.nodes.push(Node::Leaf {
            score: (pos as f64 + 1.0) / (n as f64 + 2.0),
            n,
        });
        let min_leaf = cfg.min_leaf.max(1);
        if depth >= cfg.max_depth || pos == 0 || pos == n || n < 2 * min_leaf {
            return id;
        }
        let Some((feature, threshold)) = best_split(xs, ys, &idx, pos, min_leaf) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| xs[i][feature] <= threshold);
        let left = self.grow(xs, ys, l, depth + 1, cfg);
        let right = self.grow(xs, ys, r, depth + 1, cfg);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Lowest weighted Gini impurity split; ties keep the first feature and
/// threshold found.
fn best_split(xs: &[&[f64]], ys: &[u8], idx: &[usize], pos: usize, min_leaf: usize) -> Option<(usize, f64)> {
    let n = idx.len() as f64;
    let parent = gini(pos as f64, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..xs[0].len() {
        order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        let mut left_pos = 0.0;
        for k in 0..order.len() - 1 {
            left_pos += f64::from(ys[order[k]]);
            let (v, next) = (xs[order[k]][f], xs[order[k + 1]][f]);
            let nl = (k + 1) as f64;
            if v == next || k + 1 < min_leaf || order.len() - k - 1 < min_leaf {
                continue;
            }
            let nr = n - nl;
            let impurity = (nl * gini(left_pos, nl) + nr * gini(pos as f64 - left_pos, nr)) / n;
            if parent - impurity > 1e-12 && best.is_none_or(|(b, _, _)| impurity < b - 1e-15) {
                best = Some((impurity, f, 0.5 * (v + next)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Eight points, positives at B, G, H. Root: x1 <= 0.5 (weighted Gini
    /// 0.1875, the best of all 14 candidate cuts) leaves a pure negative side.
    /// Right child {B, D, G, H}: x0 <= 0.6 and x1 <= 0.85 tie at 0.25 and the
    /// first feature wins, giving leaves {B, D} and {G, H}.
    #[test]
    fn depth_two_hand_trace() {
        let pts: [([f64; 2], u8); 8] = [
            ([0.1, 0.1], 0),
            ([0.2, 0.8], 1),
            ([0.3, 0.3], 0),
            ([0.4, 0.9], 0),
            ([0.6, 0.2], 0),
            ([0.7, 0.1], 0),
            ([0.8, 0.7], 1),
            ([0.9, 0.9], 1),
        ];
        let xs: Vec<&[f64]> = pts.iter().map(|(x, _)| x.as_slice()).collect();
        let ys: Vec<u8> = pts.iter().map(|(_, y)| *y).collect();
        let tree = Tree::fit(
            &xs,
            &ys,
            &TreeConfig {
                max_depth: 2,
                min_leaf: 1,
            },
        );
        assert_eq!(tree.depth(), 2);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 1);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(tree.score(&[0.1, 0.1]), 1.0 / 6.0);
        assert_eq!(tree.score(&[0.3, 0.85]), 0.5);
        assert_eq!(tree.score(&[0.85, 0.8]), 0.75);
    }

    #[test]
    fn first_split_is_hand_computed() {
        // Positives sit at x0 >= 0.8; splitting x0 at 0.75 is pure on both sides.
        let pts = [[0.1, 0.0], [0.5, 1.0], [0.7, 0.0], [0.8, 1.0], [0.9, 0.0]];
        let ys = [0, 0, 0, 1, 1];
        let xs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let tree = Tree::fit(
            &xs,
            &ys,
            &TreeConfig {
                max_depth: 2,
                min_leaf: 1,
            },
        );
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.75).abs() < 1e-12);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(tree.score(&[0.0, 0.0]), 0.2);
        assert_eq!(tree.score(&[1.0, 0.0]), 0.75);
    }
}
