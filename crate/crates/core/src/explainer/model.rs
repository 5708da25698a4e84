//! Per-action bagged forests and the versioned model file.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculi::CalculiConfig;

use super::dataset::{Dataset, TrainingSample};
use super::encoding::{EncodingSpec, FeatureVector};
use super::tree::{fit_tree_with_rng, DecisionTree, TreeParams};
use super::ExplainError;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Subsample negatives to the positive count for every tree.
    pub balance: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_samples_leaf: 5,
            balance: true,
        }
    }
}

impl Hyperparams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean leaf fraction over all trees.
    pub fn score(&self, features: &[u8]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().map(|t| t.predict(features)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Trained one-vs-all classifiers plus everything needed to reproduce scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u32,
    pub seed: u64,
    pub t: usize,
    pub calculi: CalculiConfig,
    pub encoding: EncodingSpec,
    pub hyperparams: Hyperparams,
    pub actions: BTreeMap<String, Forest>,
}

impl ModelBundle {
    pub fn action_names(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }

    pub fn forest(&self, action: &str) -> Result<&Forest, ExplainError> {
        self.actions
            .get(action)
            .ok_or_else(|| ExplainError::UnknownAction(action.to_string()))
    }
}

/// Per-tree random stream: one stream per (action, tree), so parallel and
/// serial training draw identical numbers.
fn tree_rng(seed: u64, action_index: usize, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((action_index as u64) << 32) | tree_index as u64);
    rng
}

fn fit_member(
    positives: &[&TrainingSample],
    negatives: &[&TrainingSample],
    hp: &Hyperparams,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTree, ExplainError> {
    let mut pool: Vec<(&[u8], bool)> = positives
        .iter()
        .map(|s| (s.features.as_slice(), true))
        .collect();
    if hp.balance && negatives.len() > positives.len() {
        let mut picked = sample(rng, negatives.len(), positives.len()).into_vec();
        picked.sort_unstable();
        pool.extend(picked.into_iter().map(|i| (negatives[i].features.as_slice(), false)));
    } else {
        pool.extend(negatives.iter().map(|s| (s.features.as_slice(), false)));
    }
    let n = pool.len();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (row, label) = pool[rng.random_range(0..n)];
        rows.push(row);
        labels.push(label);
    }
    fit_tree_with_rng(&rows, &labels, &hp.tree_params(), rng)
}

/// Trains one bagged forest per action in the dataset.
pub fn train(
    dataset: &Dataset,
    calculi: &CalculiConfig,
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<ModelBundle, ExplainError> {
    let spec = dataset.spec.ok_or(ExplainError::InsufficientData(
        "dataset carries no encoding".into(),
    ))?;
    if spec.qdc_bands != calculi.qdc_band_count() {
        return Err(ExplainError::ConfigMismatch(format!(
            "encoding has {} distance bands, configuration has {}",
            spec.qdc_bands,
            calculi.qdc_band_count()
        )));
    }
    if hyperparams.n_trees == 0 {
        return Err(ExplainError::InsufficientData("n_trees must be at least 1".into()));
    }
    if dataset.samples.is_empty() {
        return Err(ExplainError::InsufficientData("dataset has no samples".into()));
    }
    for (ann, _) in &dataset.failures {
        if dataset.samples.iter().all(|s| s.action != ann.action) {
            return Err(ExplainError::EmptyAction(ann.action.clone()));
        }
    }
    let actions = dataset.actions();
    let mut forests = BTreeMap::new();
    for (ai, action) in actions.iter().enumerate() {
        let (positives, negatives) = dataset.split_for(action);
        if positives.is_empty() {
            return Err(ExplainError::EmptyAction(action.clone()));
        }
        if negatives.is_empty() && actions.len() > 1 {
            return Err(ExplainError::InsufficientData(format!(
                "`{action}` has no negatives"
            )));
        }
        let trees = (0..hyperparams.n_trees)
            .into_par_iter()
            .map(|ti| {
                let mut rng = tree_rng(seed, ai, ti);
                fit_member(&positives, &negatives, hyperparams, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        forests.insert(action.clone(), Forest { trees });
    }
    Ok(ModelBundle {
        version: MODEL_VERSION,
        seed,
        t: spec.t,
        calculi: calculi.clone(),
        encoding: spec,
        hyperparams: *hyperparams,
        actions: forests,
    })
}

/// Likelihood that `features` explains `action`: mean leaf fraction of its forest.
pub fn score(model: &ModelBundle, action: &str, features: &FeatureVector) -> Result<f64, ExplainError> {
    let forest = model.forest(action)?;
    let expected = model.encoding.feature_len();
    if features.len() != expected {
        return Err(ExplainError::LengthMismatch {
            expected,
            got: features.len(),
        });
    }
    Ok(forest.score(features.as_slice()))
}

pub fn save_model(model: &ModelBundle) -> String {
    serde_json::to_string(model).expect("model serialization is infallible")
}

pub fn load_model(text: &str) -> Result<ModelBundle, ExplainError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ExplainError::CorruptModel(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_VERSION as u64 => {}
        Some(v) => return Err(ExplainError::VersionMismatch { found: v }),
        None => return Err(ExplainError::CorruptModel("missing version".into())),
    }
    let model: ModelBundle =
        serde_json::from_value(value).map_err(|e| ExplainError::CorruptModel(e.to_string()))?;
    let corrupt = |msg: String| Err(ExplainError::CorruptModel(msg));
    if model.actions.is_empty() {
        return corrupt("model has no actions".into());
    }
    if model.encoding.t != model.t || model.t == 0 {
        return corrupt("encoding window does not match t".into());
    }
    if model.encoding.qdc_bands != model.calculi.qdc_band_count() {
        return corrupt("encoding does not match the calculi configuration".into());
    }
    let len = model.encoding.feature_len();
    for (action, forest) in &model.actions {
        if forest.trees.is_empty() {
            return corrupt(format!("forest `{action}` is empty"));
        }
        for (i, tree) in forest.trees.iter().enumerate() {
            tree.validate(len)
                .map_err(|e| ExplainError::CorruptModel(format!("{action} tree {i}: {e}")))?;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainer::tree::TreeNode;

    fn sample_with(action: &str, bits: Vec<u8>) -> TrainingSample {
        TrainingSample {
            scene_id: "s".into(),
            frame_index: 0,
            actor_id: "ego".into(),
            other_id: "o".into(),
            action: action.into(),
            features: FeatureVector(bits),
        }
    }

    fn toy_dataset() -> (Dataset, CalculiConfig) {
        let cfg = CalculiConfig::default();
        let spec = EncodingSpec::new(1, &cfg);
        let len = spec.feature_len();
        let mut samples = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..60 {
            let action = ["Stopping", "Cruising", "Accelerating"][i % 3];
            let mut bits: Vec<u8> = (0..len).map(|_| rng.random_bool(0.2) as u8).collect();
            bits[..3].fill(0);
            bits[i % 3] = 1;
            samples.push(sample_with(action, bits));
        }
        (
            Dataset {
                spec: Some(spec),
                samples,
                ..Dataset::default()
            },
            cfg,
        )
    }

    #[test]
    fn same_seed_same_bytes() {
        let (ds, cfg) = toy_dataset();
        let hp = Hyperparams {
            n_trees: 12,
            ..Hyperparams::default()
        };
        let a = save_model(&train(&ds, &cfg, &hp, 5).unwrap());
        let b = save_model(&train(&ds, &cfg, &hp, 5).unwrap());
        assert_eq!(a, b);
        let c = save_model(&train(&ds, &cfg, &hp, 6).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn single_tree_score_is_leaf_fraction() {
        let (ds, cfg) = toy_dataset();
        let hp = Hyperparams {
            n_trees: 1,
            ..Hyperparams::default()
        };
        let model = train(&ds, &cfg, &hp, 1).unwrap();
        for s in ds.samples.iter().take(10) {
            let tree = &model.actions["Stopping"].trees[0];
            assert_eq!(
                score(&model, "Stopping", &s.features).unwrap(),
                tree.predict(s.features.as_slice())
            );
        }
    }

    #[test]
    fn separable_toy_is_learned() {
        let (ds, cfg) = toy_dataset();
        let model = train(&ds, &cfg, &Hyperparams::default(), 3).unwrap();
        for s in &ds.samples {
            for action in model.action_names() {
                let p = score(&model, action, &s.features).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert_eq!(p >= 0.5, action == s.action, "{action} vs {}", s.action);
            }
        }
    }

    #[test]
    fn stump_scores_average_exactly() {
        let cfg = CalculiConfig::default();
        let spec = EncodingSpec::new(1, &cfg);
        let stump = |f: u32, lo: f64, hi: f64| {
            serde_json::from_value::<DecisionTree>(serde_json::json!([
                {"split": {"feature": f, "left": 1, "right": 2}},
                {"leaf": {"positive_fraction": lo, "samples": 4}},
                {"leaf": {"positive_fraction": hi, "samples": 4}}
            ]))
            .unwrap()
        };
        let trees = vec![stump(0, 0.25, 1.0), stump(1, 0.5, 0.0), stump(2, 0.125, 0.75)];
        let mut model = ModelBundle {
            version: MODEL_VERSION,
            seed: 0,
            t: 1,
            calculi: cfg,
            encoding: spec,
            hyperparams: Hyperparams::default(),
            actions: BTreeMap::from([("A".to_string(), Forest { trees: trees.clone() })]),
        };
        let mut fv = vec![0u8; spec.feature_len()];
        fv[0] = 1;
        fv[2] = 1;
        // 1.0, 0.5, 0.75
        assert_eq!(score(&model, "A", &FeatureVector(fv.clone())).unwrap(), 0.75);
        let mut reversed = trees;
        reversed.reverse();
        model.actions.insert("A".into(), Forest { trees: reversed });
        assert_eq!(score(&model, "A", &FeatureVector(fv)).unwrap(), 0.75);
    }

    #[test]
    fn score_errors() {
        let (ds, cfg) = toy_dataset();
        let model = train(
            &ds,
            &cfg,
            &Hyperparams {
                n_trees: 2,
                ..Hyperparams::default()
            },
            0,
        )
        .unwrap();
        let fv = ds.samples[0].features.clone();
        assert!(matches!(
            score(&model, "Flying", &fv),
            Err(ExplainError::UnknownAction(_))
        ));
        assert!(matches!(
            score(&model, "Stopping", &FeatureVector(vec![0; 3])),
            Err(ExplainError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn save_load_round_trip_and_corruption() {
        let (ds, cfg) = toy_dataset();
        let model = train(
            &ds,
            &cfg,
            &Hyperparams {
                n_trees: 5,
                ..Hyperparams::default()
            },
            9,
        )
        .unwrap();
        let text = save_model(&model);
        let back = load_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(save_model(&back), text);

        assert!(matches!(
            load_model(&text[..text.len() / 2]),
            Err(ExplainError::CorruptModel(_))
        ));
        let v2 = text.replacen("\"version\":1", "\"version\":2", 1);
        assert!(matches!(
            load_model(&v2),
            Err(ExplainError::VersionMismatch { found: 2 })
        ));
        let mut broken = model.clone();
        broken.actions.get_mut("Stopping").unwrap().trees[0] =
            serde_json::from_value(serde_json::json!([
                {"split": {"feature": 100000, "left": 1, "right": 2}},
                {"leaf": {"positive_fraction": 0.0, "samples": 1}},
                {"leaf": {"positive_fraction": 1.0, "samples": 1}}
            ]))
            .unwrap();
        assert!(matches!(
            load_model(&save_model(&broken)),
            Err(ExplainError::CorruptModel(_))
        ));
        assert!(matches!(
            broken.actions["Stopping"].trees[0].nodes()[0],
            TreeNode::Split { .. }
        ));
    }

    #[test]
    fn single_action_corpus_trains() {
        let cfg = CalculiConfig::default();
        let spec = EncodingSpec::new(1, &cfg);
        let ds = Dataset {
            spec: Some(spec),
            samples: vec![sample_with("Stopping", vec![0; spec.feature_len()]); 4],
            ..Dataset::default()
        };
        let model = train(
            &ds,
            &cfg,
            &Hyperparams {
                n_trees: 3,
                ..Hyperparams::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(model.actions.len(), 1);
        assert_eq!(
            score(&model, "Stopping", &ds.samples[0].features).unwrap(),
            1.0
        );
    }

    #[test]
    fn empty_dataset_is_insufficient() {
        let cfg = CalculiConfig::default();
        let ds = Dataset {
            spec: Some(EncodingSpec::new(2, &cfg)),
            ..Dataset::default()
        };
        assert!(matches!(
            train(&ds, &cfg, &Hyperparams::default(), 0),
            Err(ExplainError::InsufficientData(_))
        ));
    }
}
