//! Pair-level precision/recall and planted-cause recovery.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::builder::Qxg;
use crate::scene::ActionAnnotation;

use super::dataset::{build_dataset, LabeledGraph};
use super::explain::explain;
use super::model::ModelBundle;
use super::ExplainError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl ActionMetrics {
    fn from_counts(tp: usize, fp: usize, positives: usize, negatives: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, positives),
            true_positives: tp,
            false_positives: fp,
            false_negatives: positives - tp,
            positives,
            negatives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub actions: BTreeMap<String, ActionMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub skipped_annotations: usize,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Plain-text table: one row per action and an average row.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:>9} {:>9} {:>8}", "action", "precision", "recall", "samples");
        for (name, m) in &self.actions {
            let _ = writeln!(
                s,
                "{:<16} {:>8.1}% {:>8.1}% {:>8}",
                name,
                100.0 * m.precision,
                100.0 * m.recall,
                m.positives
            );
        }
        let _ = writeln!(
            s,
            "{:<16} {:>8.1}% {:>8.1}%",
            "average",
            100.0 * self.macro_precision,
            100.0 * self.macro_recall
        );
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

/// One-vs-all evaluation over every pair vector of the test corpus: a vector
/// is predicted positive for action `a` iff its score reaches `threshold`.
pub fn evaluate(
    model: &ModelBundle,
    corpus: &[LabeledGraph],
    threshold: f64,
) -> Result<EvalReport, ExplainError> {
    let ds = build_dataset(corpus, &model.encoding);
    if ds.samples.is_empty() {
        return Err(ExplainError::EmptyTestSet);
    }
    let mut warnings = ds.warnings.clone();
    for action in ds.actions() {
        if !model.actions.contains_key(&action) {
            warnings.push(format!("test action `{action}` is unknown to the model"));
        }
    }
    let mut actions = BTreeMap::new();
    for (name, forest) in &model.actions {
        let (mut tp, mut fp, mut pos) = (0, 0, 0);
        for s in &ds.samples {
            let predicted = forest.score(s.features.as_slice()) >= threshold;
            let actual = &s.action == name;
            pos += actual as usize;
            match (predicted, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                _ => {}
            }
        }
        if pos == 0 {
            warnings.push(format!("model action `{name}` has no test positives"));
        }
        actions.insert(
            name.clone(),
            ActionMetrics::from_counts(tp, fp, pos, ds.samples.len() - pos),
        );
    }
    let n = actions.len() as f64;
    Ok(EvalReport {
        threshold,
        macro_precision: actions.values().map(|m| m.precision).sum::<f64>() / n,
        macro_recall: actions.values().map(|m| m.recall).sum::<f64>() / n,
        actions,
        skipped_annotations: ds.failures.len(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CauseRecovery {
    pub total: usize,
    pub hits: usize,
    pub rate: f64,
    /// `(scene, expected cause, top-ranked object)` for every miss.
    pub misses: Vec<(String, String, Option<String>)>,
}

/// Fraction of annotations whose top-ranked explanation is the known cause.
pub fn cause_recovery<'a, I>(model: &ModelBundle, cases: I) -> Result<CauseRecovery, ExplainError>
where
    I: IntoIterator<Item = (&'a Qxg, &'a ActionAnnotation, &'a str)>,
{
    let mut out = CauseRecovery::default();
    for (qxg, ann, cause) in cases {
        let top = explain(qxg, ann, model, 1, 0.0)?
            .into_iter()
            .next()
            .map(|c| c.other_id);
        out.total += 1;
        if top.as_deref() == Some(cause) {
            out.hits += 1;
        } else {
            out.misses
                .push((ann.scene_id.clone(), cause.to_string(), top));
        }
    }
    if out.total > 0 {
        out.rate = out.hits as f64 / out.total as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build;
    use crate::calculi::CalculiConfig;
    use crate::explainer::encoding::EncodingSpec;
    use crate::explainer::model::{Forest, Hyperparams, MODEL_VERSION};
    use crate::explainer::tree::DecisionTree;
    use crate::scene::{BBox2D, Frame, ObjectState, Point2D, Scene};

    fn labeled(id: &str, others: usize, action: &str) -> LabeledGraph {
        let mut objects = vec![ObjectState {
            id: "ego".into(),
            class: "car".into(),
            bbox: BBox2D::from_center(Point2D::new(0.0, 0.0), 2.0, 4.0).unwrap(),
        }];
        for i in 0..others {
            objects.push(ObjectState {
                id: format!("o{i}"),
                class: "car".into(),
                bbox: BBox2D::from_center(Point2D::new(6.0 * (i + 1) as f64, 0.0), 2.0, 4.0)
                    .unwrap(),
            });
        }
        let scene = Scene {
            scene_id: id.into(),
            frames: vec![Frame {
                index: 0,
                timestamp: 0.0,
                objects,
            }],
        };
        LabeledGraph {
            qxg: build(&scene, &CalculiConfig::default()).unwrap(),
            annotations: vec![ActionAnnotation {
                scene_id: id.into(),
                frame_index: 0,
                actor_id: "ego".into(),
                action: action.into(),
            }],
        }
    }

    fn constant_model(p: f64) -> ModelBundle {
        let cfg = CalculiConfig::default();
        let forest = || Forest {
            trees: vec![DecisionTree::leaf(p, 1)],
        };
        ModelBundle {
            version: MODEL_VERSION,
            seed: 0,
            t: 2,
            encoding: EncodingSpec::new(2, &cfg),
            calculi: cfg,
            hyperparams: Hyperparams::default(),
            actions: BTreeMap::from([
                ("Stopping".to_string(), forest()),
                ("Cruising".to_string(), forest()),
            ]),
        }
    }

    #[test]
    fn constant_one_has_full_recall_and_prevalence_precision() {
        let corpus = vec![
            labeled("a", 3, "Stopping"),
            labeled("b", 1, "Cruising"),
        ];
        let r = evaluate(&constant_model(1.0), &corpus, 0.5).unwrap();
        let stop = r.actions["Stopping"];
        assert_eq!(stop.recall, 1.0);
        assert_eq!(stop.precision, 0.75);
        let cruise = r.actions["Cruising"];
        assert_eq!(cruise.recall, 1.0);
        assert_eq!(cruise.precision, 0.25);
        assert_eq!(r.macro_precision, 0.5);
        assert!(r.table().contains("average"));
        assert_eq!(r.table().lines().count(), 4);
    }

    #[test]
    fn constant_zero_predicts_nothing() {
        let corpus = vec![labeled("a", 2, "Stopping")];
        let r = evaluate(&constant_model(0.0), &corpus, 0.5).unwrap();
        assert_eq!(r.actions["Stopping"].recall, 0.0);
        assert_eq!(r.actions["Stopping"].false_negatives, 2);
    }

    #[test]
    fn empty_test_set() {
        assert!(matches!(
            evaluate(&constant_model(1.0), &[], 0.5),
            Err(ExplainError::EmptyTestSet)
        ));
    }

    #[test]
    fn recovery_counts_top_hit() {
        let lg = labeled("a", 2, "Stopping");
        let m = constant_model(1.0);
        // Equal scores: id order puts o0 first.
        let r = cause_recovery(
            &m,
            [
                (&lg.qxg, &lg.annotations[0], "o0"),
                (&lg.qxg, &lg.annotations[0], "o1"),
            ],
        )
        .unwrap();
        assert_eq!((r.total, r.hits), (2, 1));
        assert_eq!(r.rate, 0.5);
        assert_eq!(r.misses[0].2.as_deref(), Some("o0"));
    }
}
