//! Classifier suite. Every fitted model exposes a real-valued decision score
//! where positive means commercial; `predict` is `score > 0`.

mod knn;
mod naive_bayes;
mod sgd;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use knn::{knn_predict, KnnModel};
pub use naive_bayes::{train_naive_bayes, NbModel};
pub use sgd::{train_sgd, Loss, SgdParams};
pub use svm::{fit_linear_svm, primal_objective, train_linear_svm, SvmFit, SvmParams};
pub use tree::{
    train_decision_tree, train_random_forest, ForestModel, ForestParams, Node, TreeModel,
    TreeParams,
};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::DocVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Dcd,
    Sgd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `C` for the SVM, `lambda` for SGD.
    pub regularization: f64,
    pub solver: Solver,
}

impl LinearModel {
    /// `weights . x + bias`. Indices past the weight vector contribute 0; use
    /// [`Model::decision_score`] for a checked version.
    pub fn score(&self, x: &DocVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &DocVector) -> Label {
        Label::from_score(self.score(x))
    }
}

pub(crate) fn check_shapes(x: &[DocVector], y: &[Label]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Shape check plus "both classes present".
pub(crate) fn check_labels(x: &[DocVector], y: &[Label], n_features: usize) -> Result<()> {
    check_shapes(x, y)?;
    if !y.contains(&Label::Commercial) || !y.contains(&Label::Editorial) {
        return Err(Error::DegenerateLabels);
    }
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

/// Which classifier to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearSvm(SvmParams),
    Sgd(SgdParams),
    NaiveBayes {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
}

fn default_alpha() -> f64 {
    1.0
}

fn default_k() -> usize {
    5
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::LinearSvm(SvmParams::default())
    }
}

impl ModelSpec {
    /// Machine name, as used on the command line.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::LinearSvm(_) => "linear_svm",
            ModelSpec::Sgd(_) => "sgd",
            ModelSpec::NaiveBayes { .. } => "naive_bayes",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::DecisionTree(_) => "decision_tree",
            ModelSpec::RandomForest(_) => "random_forest",
        }
    }

    /// Short name used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelSpec::LinearSvm(_) => "linearSVC",
            ModelSpec::Sgd(_) => "SGD",
            ModelSpec::NaiveBayes { .. } => "naiveBayes",
            ModelSpec::Knn { .. } => "k-NN",
            ModelSpec::DecisionTree(_) => "decisionTree",
            ModelSpec::RandomForest(_) => "randomForest",
        }
    }

    /// Default hyperparameters for a machine name.
    pub fn from_kind(kind: &str) -> Result<Self> {
        Ok(match kind {
            "linear_svm" | "svm" | "linearsvc" => ModelSpec::LinearSvm(SvmParams::default()),
            "sgd" => ModelSpec::Sgd(SgdParams::default()),
            "naive_bayes" | "nb" => ModelSpec::NaiveBayes {
                alpha: default_alpha(),
            },
            "knn" => ModelSpec::Knn { k: default_k() },
            "decision_tree" | "tree" => ModelSpec::DecisionTree(TreeParams::default()),
            "random_forest" | "forest" => ModelSpec::RandomForest(ForestParams::default()),
            other => {
                return Err(Error::InvalidArgument(format!("unknown model kind {other:?}")));
            }
        })
    }

    pub fn all_defaults() -> Vec<ModelSpec> {
        [
            "linear_svm",
            "decision_tree",
            "random_forest",
            "knn",
            "sgd",
            "naive_bayes",
        ]
        .iter()
        .map(|k| ModelSpec::from_kind(k).expect("known kind"))
        .collect()
    }

    pub fn fit(
        &self,
        x: &[DocVector],
        y: &[Label],
        n_features: usize,
        seed: u64,
    ) -> Result<Model> {
        Ok(match self {
            ModelSpec::LinearSvm(p) => Model::Linear(train_linear_svm(x, y, n_features, p, seed)?),
            ModelSpec::Sgd(p) => Model::Linear(train_sgd(x, y, n_features, p, seed)?),
            ModelSpec::NaiveBayes { alpha } => {
                Model::NaiveBayes(train_naive_bayes(x, y, n_features, *alpha)?)
            }
            ModelSpec::Knn { k } => Model::Knn(KnnModel::fit(x, y, n_features, *k)?),
            ModelSpec::DecisionTree(p) => Model::Tree(train_decision_tree(x, y, n_features, p)?),
            ModelSpec::RandomForest(p) => {
                Model::Forest(train_random_forest(x, y, n_features, p, seed)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    NaiveBayes(NbModel),
    Knn(KnnModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Linear(m) => m.weights.len(),
            Model::NaiveBayes(m) => m.n_features(),
            Model::Knn(m) => m.n_features,
            Model::Tree(m) => m.n_features,
            Model::Forest(m) => m.n_features,
        }
    }

    pub fn decision_score(&self, x: &DocVector) -> Result<f64> {
        if let Some(m) = x.max_index() {
            if m >= self.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_features(),
                    got: m,
                });
            }
        }
        Ok(match self {
            Model::Linear(m) => m.score(x),
            Model::NaiveBayes(m) => m.score(x),
            Model::Knn(m) => m.score(x),
            Model::Tree(m) => m.score(x),
            Model::Forest(m) => m.score(x),
        })
    }

    pub fn predict(&self, x: &DocVector) -> Result<Label> {
        self.decision_score(x).map(Label::from_score)
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            Model::Linear(m) => Some(m),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Linear(m) => match m.solver {
                Solver::Dcd => "linear_svm",
                Solver::Sgd => "sgd",
            },
            Model::NaiveBayes(_) => "naive_bayes",
            Model::Knn(_) => "knn",
            Model::Tree(_) => "decision_tree",
            Model::Forest(_) => "random_forest",
        }
    }

    /// JSON export. Linear weights are written as `[index, value]` pairs for
    /// the non-zero coefficients.
    pub fn to_json(&self, vocab_hash: &str) -> Value {
        let sparse = |w: &[f64]| -> Vec<(usize, f64)> {
            w.iter()
                .copied()
                .enumerate()
                .filter(|&(_, v)| v != 0.0)
                .collect()
        };
        let n_features = self.n_features();
        match self {
            Model::Linear(m) => json!({
                "kind": self.kind(),
                "vocab_hash": vocab_hash,
                "weights": sparse(&m.weights),
                "bias": m.bias,
                "params": {
                    "regularization": m.regularization,
                    "solver": m.solver,
                    "n_features": n_features,
                },
            }),
            Model::NaiveBayes(m) => {
                // The score is linear in x: bias = prior log-odds,
                // weight = per-term log-likelihood ratio.
                let ratio: Vec<f64> = m.feature_log_prob[1]
                    .iter()
                    .zip(&m.feature_log_prob[0])
                    .map(|(c, e)| c - e)
                    .collect();
                json!({
                    "kind": self.kind(),
                    "vocab_hash": vocab_hash,
                    "weights": sparse(&ratio),
                    "bias": m.class_log_prior[1] - m.class_log_prior[0],
                    "params": {
                        "alpha": m.alpha,
                        "n_features": n_features,
                        "class_log_prior": m.class_log_prior,
                        "feature_log_prob": m.feature_log_prob,
                    },
                })
            }
            Model::Knn(m) => json!({
                "kind": self.kind(),
                "vocab_hash": vocab_hash,
                "params": { "k": m.k, "n_features": n_features },
                "train": m.x.iter().zip(&m.y).map(|(x, y)| json!({
                    "label": y,
                    "entries": x.entries(),
                })).collect::<Vec<_>>(),
            }),
            Model::Tree(m) => json!({
                "kind": self.kind(),
                "vocab_hash": vocab_hash,
                "tree": m.nodes,
                "params": { "n_features": n_features },
            }),
            Model::Forest(m) => json!({
                "kind": self.kind(),
                "vocab_hash": vocab_hash,
                "trees": m.trees.iter().map(|t| &t.nodes).collect::<Vec<_>>(),
                "params": {
                    "n_features": n_features,
                    "m_features": m.m_features,
                    "seeds": m.seeds,
                },
            }),
        }
    }

    /// Reads a linear or tree model back from [`Model::to_json`] output.
    /// Returns the model and its vocabulary hash.
    pub fn from_json(value: &Value) -> Result<(Model, String)> {
        let field = |name: &str| {
            value
                .get(name)
                .ok_or_else(|| Error::InvalidArgument(format!("model file lacks {name:?}")))
        };
        let kind = field("kind")?.as_str().unwrap_or_default().to_string();
        let hash = field("vocab_hash")?.as_str().unwrap_or_default().to_string();
        let params = field("params")?;
        let n_features = params
            .get("n_features")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidArgument("model file lacks params.n_features".into()))?
            as usize;
        let model = match kind.as_str() {
            "linear_svm" | "sgd" => {
                let pairs: Vec<(usize, f64)> = serde_json::from_value(field("weights")?.clone())?;
                let mut weights = vec![0.0; n_features];
                for (i, v) in pairs {
                    if i >= n_features {
                        return Err(Error::DimensionMismatch {
                            expected: n_features,
                            got: i,
                        });
                    }
                    weights[i] = v;
                }
                Model::Linear(LinearModel {
                    weights,
                    bias: serde_json::from_value(field("bias")?.clone())?,
                    regularization: serde_json::from_value(
                        params.get("regularization").cloned().unwrap_or(json!(0.0)),
                    )?,
                    solver: serde_json::from_value(
                        params.get("solver").cloned().unwrap_or(json!("dcd")),
                    )?,
                })
            }
            "decision_tree" => Model::Tree(TreeModel {
                n_features,
                nodes: serde_json::from_value(field("tree")?.clone())?,
            }),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "cannot import model kind {other:?}"
                )))
            }
        };
        Ok((model, hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::NormMode;
    use proptest::prelude::*;

    fn v(dense: &[f64]) -> DocVector {
        DocVector::from_dense(dense, NormMode::TfidfL2)
    }

    #[test]
    fn linear_scoring_and_ties() {
        let m = Model::Linear(LinearModel {
            weights: vec![2.0, -1.0],
            ..Default::default()
        });
        assert_eq!(m.decision_score(&v(&[1.0])).unwrap(), 2.0);
        assert_eq!(m.predict(&v(&[1.0])).unwrap(), Label::Commercial);
        assert_eq!(m.predict(&v(&[1.0, 2.0])).unwrap(), Label::Editorial);
        assert!(matches!(
            m.decision_score(&v(&[0.0, 0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nb_symmetric_case_predicts_editorial() {
        let x = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let y = vec![Label::Commercial, Label::Editorial];
        let m = ModelSpec::from_kind("naive_bayes").unwrap().fit(&x, &y, 2, 0).unwrap();
        assert_eq!(m.decision_score(&v(&[])).unwrap(), 0.0);
        assert_eq!(m.predict(&v(&[])).unwrap(), Label::Editorial);
    }

    #[test]
    fn json_round_trip() {
        let lin = Model::Linear(LinearModel {
            weights: vec![0.0, 1.5, -0.25],
            bias: 0.125,
            regularization: 1.0,
            solver: Solver::Dcd,
        });
        let j = lin.to_json("abc");
        assert_eq!(j["weights"], json!([[1, 1.5], [2, -0.25]]));
        let (back, hash) = Model::from_json(&j).unwrap();
        assert_eq!((back, hash.as_str()), (lin, "abc"));

        let x = vec![v(&[0.0]), v(&[1.0])];
        let y = vec![Label::Editorial, Label::Commercial];
        let tree = ModelSpec::from_kind("tree").unwrap().fit(&x, &y, 1, 0).unwrap();
        let (back, _) = Model::from_json(&tree.to_json("h")).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn unknown_kind() {
        assert!(ModelSpec::from_kind("bert").is_err());
    }

    #[test]
    fn spec_json() {
        let v = serde_json::to_value(ModelSpec::default()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind": "linear_svm", "C": 1.0, "max_iter": 5000, "tol": 1e-4})
        );
        let s: ModelSpec = serde_json::from_str(r#"{"kind": "linear_svm", "C": 0.5}"#).unwrap();
        assert_eq!(s, ModelSpec::LinearSvm(SvmParams { c: 0.5, ..Default::default() }));
        for bad in [
            r#"{"kind": "linear_svm", "c": 0.5}"#,
            r#"{"kind": "naive_bayes", "alpah": 1}"#,
            r#"{"kind": "random_forest", "trees": 3}"#,
        ] {
            let e = serde_json::from_str::<ModelSpec>(bad).unwrap_err().to_string();
            assert!(e.contains("unknown field"), "{e}");
        }
        for spec in ModelSpec::all_defaults() {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), spec);
        }
    }

    fn dataset() -> impl Strategy<Value = (Vec<DocVector>, Vec<Label>)> {
        proptest::collection::vec(
            (proptest::collection::vec(0.0f64..1.0, 4), any::<bool>()),
            4..16,
        )
        .prop_map(|rows| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (i, (vals, b)) in rows.into_iter().enumerate() {
                x.push(DocVector::from_dense(&vals, NormMode::TfidfL2));
                // force both classes
                y.push(match i {
                    0 => Label::Commercial,
                    1 => Label::Editorial,
                    _ if b => Label::Commercial,
                    _ => Label::Editorial,
                });
            }
            (x, y)
        })
    }

    fn quick_specs() -> Vec<ModelSpec> {
        vec![
            ModelSpec::LinearSvm(SvmParams {
                max_iter: 200,
                ..Default::default()
            }),
            ModelSpec::Sgd(SgdParams {
                epochs: 5,
                ..Default::default()
            }),
            ModelSpec::NaiveBayes { alpha: 1.0 },
            ModelSpec::Knn { k: 3 },
            ModelSpec::DecisionTree(TreeParams::default()),
            ModelSpec::RandomForest(ForestParams {
                n_trees: 7,
                ..Default::default()
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn label_swap_negates_scores((x, y) in dataset(), seed in 0u64..1000) {
            let flipped: Vec<Label> = y.iter().map(|l| l.flip()).collect();
            for spec in quick_specs() {
                let a = spec.fit(&x, &y, 4, seed).unwrap();
                let b = spec.fit(&x, &flipped, 4, seed).unwrap();
                for xi in &x {
                    let sa = a.decision_score(xi).unwrap();
                    let sb = b.decision_score(xi).unwrap();
                    match spec {
                        ModelSpec::Knn { .. } => prop_assert_eq!(sa, -sb),
                        _ => prop_assert!((sa + sb).abs() < 1e-9, "{} {} {}", spec.kind(), sa, sb),
                    }
                }
            }
        }

        #[test]
        fn predict_agrees_with_sign((x, y) in dataset(), seed in 0u64..1000) {
            for spec in quick_specs() {
                let m = spec.fit(&x, &y, 4, seed).unwrap();
                for xi in &x {
                    let s = m.decision_score(xi).unwrap();
                    let expected = if s > 0.0 { Label::Commercial } else { Label::Editorial };
                    prop_assert_eq!(m.predict(xi).unwrap(), expected);
                }
            }
        }

        #[test]
        fn feature_permutation_permutes_weights((x, y) in dataset(), shift in 1usize..4) {
            let perm: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
            let xp: Vec<DocVector> = x.iter().map(|xi| xi.permuted(&perm)).collect();
            let p = SvmParams { tol: 1e-10, max_iter: 20000, ..Default::default() };
            let a = train_linear_svm(&x, &y, 4, &p, 1).unwrap();
            let b = train_linear_svm(&xp, &y, 4, &p, 1).unwrap();
            for i in 0..4 {
                prop_assert!((a.weights[i] - b.weights[perm[i]]).abs() < 1e-6);
            }
        }

        #[test]
        fn duplicating_data_and_halving_c_keeps_solution((x, y) in dataset()) {
            let p = SvmParams { tol: 1e-10, max_iter: 50000, ..Default::default() };
            let a = train_linear_svm(&x, &y, 4, &p, 2).unwrap();
            let x2: Vec<DocVector> = x.iter().chain(&x).cloned().collect();
            let y2: Vec<Label> = y.iter().chain(&y).copied().collect();
            let half = SvmParams { c: p.c / 2.0, ..p };
            let b = train_linear_svm(&x2, &y2, 4, &half, 2).unwrap();
            for i in 0..4 {
                prop_assert!((a.weights[i] - b.weights[i]).abs() < 1e-4);
            }
            prop_assert!((a.bias - b.bias).abs() < 1e-4);
        }
    }
}
