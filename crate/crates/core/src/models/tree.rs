//! CART decision trees (Gini impurity) and bagged random forests.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check_shapes;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::par::*;
use crate::vectorize::DocVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(n_features))`.
    pub m_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Draw a bootstrap sample per tree. Turning this off is mainly useful
    /// for tests.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            m_features: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        p_editorial: f64,
        p_commercial: f64,
        samples: usize,
    },
}

/// Nodes are stored in an arena; node 0 is the root. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub m_features: usize,
    pub seeds: Vec<u64>,
    pub trees: Vec<TreeModel>,
}

impl TreeModel {
    pub fn p_commercial(&self, x: &DocVector) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p_commercial, .. } => return *p_commercial,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x.get(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// `P(commercial) - 0.5` at the reached leaf.
    pub fn score(&self, x: &DocVector) -> f64 {
        self.p_commercial(x) - 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

impl ForestModel {
    /// Mean leaf `P(commercial)` over trees, minus 0.5.
    pub fn score(&self, x: &DocVector) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.p_commercial(x)).sum();
        total / self.trees.len() as f64 - 0.5
    }
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    // equals 1 - p0^2 - p1^2, written so that swapping the classes is exact
    2.0 * (counts[0] * counts[1]) as f64 / (n * n)
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

/// Best split of one feature. `values` holds the node's non-zero entries as
/// (value, class index); the remaining samples sit at zero.
fn best_threshold(
    values: &mut Vec<(f64, usize)>,
    node_counts: [usize; 2],
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let n = node_counts[0] + node_counts[1];
    let mut zero_counts = node_counts;
    for &(_, c) in values.iter() {
        zero_counts[c] -= 1;
    }
    if zero_counts[0] + zero_counts[1] > 0 {
        values.push((0.0, usize::MAX));
    }
    values.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut left = [0usize; 2];
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < values.len() {
        let v = values[i].0;
        while i < values.len() && values[i].0 == v {
            match values[i].1 {
                usize::MAX => {
                    left[0] += zero_counts[0];
                    left[1] += zero_counts[1];
                }
                c => left[c] += 1,
            }
            i += 1;
        }
        if i == values.len() {
            break;
        }
        let n_left = left[0] + left[1];
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let right = [node_counts[0] - left[0], node_counts[1] - left[1]];
        let impurity = (n_left as f64 * gini(left) + n_right as f64 * gini(right)) / n as f64;
        if best.map_or(true, |(b, _)| impurity < b) {
            let next = values[i].0;
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next {
                threshold = v;
            }
            best = Some((impurity, threshold));
        }
    }
    best
}

struct Grower<'a> {
    x: &'a [DocVector],
    y: &'a [Label],
    params: TreeParams,
    /// `Some((m, rng))` restricts each split to `m` random non-constant features.
    sampler: Option<(usize, ChaCha8Rng)>,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf(counts: [usize; 2]) -> Node {
        let n = (counts[0] + counts[1]) as f64;
        let p_commercial = counts[1] as f64 / n;
        Node::Leaf {
            p_editorial: 1.0 - p_commercial,
            p_commercial,
            samples: counts[0] + counts[1],
        }
    }

    fn find_split(&mut self, samples: &[usize], counts: [usize; 2]) -> Option<Candidate> {
        let mut columns: HashMap<usize, Vec<(f64, usize)>> = HashMap::new();
        for &s in samples {
            let class = self.y[s].index();
            for &(f, v) in self.x[s].entries() {
                columns.entry(f).or_default().push((v, class));
            }
        }
        let n = samples.len();
        let mut features: Vec<usize> = columns
            .iter()
            .filter(|(_, col)| {
                let first = col[0].0;
                col.len() < n || col.iter().any(|&(v, _)| v != first)
            })
            .map(|(&f, _)| f)
            .collect();
        features.sort_unstable();
        if let Some((m, rng)) = self.sampler.as_mut() {
            if features.len() > *m {
                let mut chosen: Vec<usize> = sample(rng, features.len(), *m)
                    .into_iter()
                    .map(|i| features[i])
                    .collect();
                chosen.sort_unstable();
                features = chosen;
            }
        }
        let mut best: Option<Candidate> = None;
        for f in features {
            let col = columns.get_mut(&f).expect("feature present");
            if let Some((impurity, threshold)) = best_threshold(col, counts, self.params.min_leaf) {
                if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                    best = Some(Candidate {
                        impurity,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, root: Vec<usize>) {
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, root, 0usize)];
        self.nodes.push(Node::Leaf {
            p_editorial: 0.0,
            p_commercial: 0.0,
            samples: 0,
        });
        while let Some((slot, samples, depth)) = stack.pop() {
            let mut counts = [0usize; 2];
            for &s in &samples {
                counts[self.y[s].index()] += 1;
            }
            let pure = counts[0] == 0 || counts[1] == 0;
            let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
            let too_small = samples.len() < 2 * self.params.min_leaf.max(1);
            let split = if pure || depth_reached || too_small {
                None
            } else {
                self.find_split(&samples, counts)
            };
            match split {
                None => self.nodes[slot] = Self::leaf(counts),
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&s| self.x[s].get(c.feature) <= c.threshold);
                    debug_assert!(!l.is_empty() && !r.is_empty());
                    let left = self.nodes.len();
                    let right = left + 1;
                    let placeholder = Self::leaf([1, 0]);
                    self.nodes.push(placeholder.clone());
                    self.nodes.push(placeholder);
                    self.nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
    }
}

fn check_features(x: &[DocVector], n_features: usize) -> Result<()> {
    for xi in x {
        if let Some(m) = xi.max_index() {
            if m >= n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: m,
                });
            }
        }
    }
    Ok(())
}

/// Grows a CART tree on all samples. A single-class input yields one leaf.
pub fn train_decision_tree(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &TreeParams,
) -> Result<TreeModel> {
    check_shapes(x, y)?;
    check_features(x, n_features)?;
    Ok(grow_tree(x, y, n_features, params, (0..x.len()).collect(), None))
}

fn grow_tree(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &TreeParams,
    samples: Vec<usize>,
    sampler: Option<(usize, ChaCha8Rng)>,
) -> TreeModel {
    let mut grower = Grower {
        x,
        y,
        params: *params,
        sampler,
        nodes: Vec::new(),
    };
    grower.grow(samples);
    TreeModel {
        n_features,
        nodes: grower.nodes,
    }
}

pub fn train_random_forest(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    check_shapes(x, y)?;
    check_features(x, n_features)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    let m = params
        .m_features
        .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
    if m == 0 || m > n_features {
        return Err(Error::InvalidArgument(format!(
            "m_features must be in 1..={n_features}, got {m}"
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..params.n_trees).map(|_| master.next_u64()).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let n = x.len();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(x, y, n_features, &tree_params, samples, Some((m, rng)))
        })
        .collect();
    Ok(ForestModel {
        n_features,
        m_features: m,
        seeds,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::NormMode;

    fn v(dense: &[f64]) -> DocVector {
        DocVector::from_dense(dense, NormMode::RawCounts)
    }

    #[test]
    fn one_dimensional_split() {
        let x = vec![v(&[0.0]), v(&[1.0]), v(&[0.0]), v(&[1.0])];
        let y = vec![Label::Editorial, Label::Commercial, Label::Editorial, Label::Commercial];
        let t = train_decision_tree(&x, &y, 1, &TreeParams::default()).unwrap();
        match &t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((*feature, *threshold), (0, 0.5)),
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.score(&v(&[1.0])), 0.5);
        assert_eq!(t.score(&v(&[0.0])), -0.5);
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = vec![v(&[0.0]), v(&[1.0])];
        let y = vec![Label::Commercial; 2];
        let t = train_decision_tree(&x, &y, 1, &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.p_commercial(&v(&[5.0])), 1.0);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![v(&[0.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0])];
        let y = vec![Label::Editorial, Label::Commercial, Label::Commercial, Label::Editorial];
        let t = train_decision_tree(&x, &y, 2, &TreeParams::default()).unwrap();
        assert_eq!(t.depth(), 2);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(Label::from_score(t.score(xi)), *yi);
        }
        // every split leaves both sides non-empty, leaf probabilities sum to 1
        for node in &t.nodes {
            if let Node::Leaf {
                p_editorial,
                p_commercial,
                samples,
            } = node
            {
                assert!(*samples > 0);
                assert_eq!(p_editorial + p_commercial, 1.0);
            }
        }
    }

    #[test]
    fn depth_limit() {
        let x = vec![v(&[0.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0])];
        let y = vec![Label::Editorial, Label::Commercial, Label::Commercial, Label::Editorial];
        let p = TreeParams {
            max_depth: Some(1),
            min_leaf: 1,
        };
        assert_eq!(train_decision_tree(&x, &y, 2, &p).unwrap().depth(), 1);
    }

    #[test]
    fn forest_reduces_to_tree() {
        let x = vec![
            v(&[0.1, 0.0, 0.3]),
            v(&[0.0, 0.2, 0.0]),
            v(&[0.5, 0.0, 0.1]),
            v(&[0.0, 0.9, 0.4]),
            v(&[0.3, 0.3, 0.0]),
        ];
        let y = vec![
            Label::Commercial,
            Label::Editorial,
            Label::Commercial,
            Label::Editorial,
            Label::Commercial,
        ];
        let tree = train_decision_tree(&x, &y, 3, &TreeParams::default()).unwrap();
        let p = ForestParams {
            n_trees: 1,
            m_features: Some(3),
            bootstrap: false,
            ..Default::default()
        };
        let forest = train_random_forest(&x, &y, 3, &p, 5).unwrap();
        assert_eq!(forest.trees[0].nodes, tree.nodes);
    }

    #[test]
    fn forest_separable_and_seeded() {
        let x = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])];
        let y = vec![Label::Commercial, Label::Editorial];
        let p = ForestParams {
            n_trees: 25,
            ..Default::default()
        };
        let f = train_random_forest(&x, &y, 2, &p, 11).unwrap();
        // some bootstrap samples contain one class only; the vote still wins
        assert!(f.score(&x[0]) > 0.0);
        assert!(f.score(&x[1]) < 0.0);
        let g = train_random_forest(&x, &y, 2, &p, 11).unwrap();
        assert_eq!(f, g);
        assert!(train_random_forest(&x, &y, 2, &ForestParams { n_trees: 0, ..p }, 1).is_err());
        let bad_m = ForestParams {
            m_features: Some(3),
            ..p
        };
        assert!(train_random_forest(&x, &y, 2, &bad_m, 1).is_err());
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<DocVector> = (0..10).map(|i| v(&[i as f64])).collect();
        let y: Vec<Label> = (0..10)
            .map(|i| if i == 9 { Label::Commercial } else { Label::Editorial })
            .collect();
        let p = TreeParams {
            max_depth: None,
            min_leaf: 3,
        };
        let t = train_decision_tree(&x, &y, 1, &p).unwrap();
        for node in &t.nodes {
            if let Node::Leaf { samples, .. } = node {
                assert!(*samples >= 3);
            }
        }
    }
}
