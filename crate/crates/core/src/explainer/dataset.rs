//! One-vs-all training data from annotated graphs.

use std::collections::BTreeMap;

use crate::builder::Qxg;
use crate::scene::ActionAnnotation;

use super::encoding::{extract_features, EncodingSpec, FeatureVector};
use super::ExplainError;

/// A graph together with the actions annotated on it.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub qxg: Qxg,
    pub annotations: Vec<ActionAnnotation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub scene_id: String,
    pub frame_index: u32,
    pub actor_id: String,
    pub other_id: String,
    pub action: String,
    pub features: FeatureVector,
}

/// All pair samples of a corpus. A sample is a positive for its own action
/// and a negative for every other action in the corpus.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub spec: Option<EncodingSpec>,
    pub samples: Vec<TrainingSample>,
    /// Annotations that could not be extracted, with the reason.
    pub failures: Vec<(ActionAnnotation, ExplainError)>,
    pub warnings: Vec<String>,
}

impl Dataset {
    /// Distinct actions, sorted.
    pub fn actions(&self) -> Vec<String> {
        let mut actions: Vec<String> = self.samples.iter().map(|s| s.action.clone()).collect();
        actions.sort();
        actions.dedup();
        actions
    }

    pub fn split_for(&self, action: &str) -> (Vec<&TrainingSample>, Vec<&TrainingSample>) {
        self.samples.iter().partition(|s| s.action == action)
    }

    /// `action -> (positives, negatives)` counts.
    pub fn counts(&self) -> BTreeMap<String, (usize, usize)> {
        let total = self.samples.len();
        let mut per: BTreeMap<String, usize> = BTreeMap::new();
        for s in &self.samples {
            *per.entry(s.action.clone()).or_default() += 1;
        }
        per.into_iter().map(|(a, p)| (a, (p, total - p))).collect()
    }
}

pub fn build_dataset(corpus: &[LabeledGraph], spec: &EncodingSpec) -> Dataset {
    let mut ds = Dataset {
        spec: Some(*spec),
        ..Dataset::default()
    };
    for lg in corpus {
        for ann in &lg.annotations {
            match extract_features(&lg.qxg, &ann.actor_id, ann.frame_index, spec) {
                Ok(pairs) => {
                    if pairs.is_empty() {
                        ds.warnings.push(format!(
                            "{}: `{}` has no co-occurring objects at frame {}",
                            ann.scene_id, ann.actor_id, ann.frame_index
                        ));
                    }
                    ds.samples.extend(pairs.into_iter().map(|p| TrainingSample {
                        scene_id: ann.scene_id.clone(),
                        frame_index: ann.frame_index,
                        actor_id: ann.actor_id.clone(),
                        other_id: p.other_id,
                        action: ann.action.clone(),
                        features: p.features,
                    }));
                }
                Err(e) => ds.failures.push((ann.clone(), e)),
            }
        }
    }
    let actions = ds.actions();
    if actions.len() == 1 {
        ds.warnings.push(format!(
            "only one action (`{}`) in corpus; it has no negatives",
            actions[0]
        ));
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build;
    use crate::calculi::CalculiConfig;
    use crate::scene::{BBox2D, Frame, ObjectState, Point2D, Scene};

    fn labeled(scene_id: &str, others: usize, action: &str) -> LabeledGraph {
        let mut objects = vec![ObjectState {
            id: "ego".into(),
            class: "car".into(),
            bbox: BBox2D::from_center(Point2D::new(0.0, 0.0), 2.0, 4.0).unwrap(),
        }];
        for i in 0..others {
            objects.push(ObjectState {
                id: format!("o{i}"),
                class: "car".into(),
                bbox: BBox2D::from_center(Point2D::new(5.0 * (i + 1) as f64, 3.0), 2.0, 4.0)
                    .unwrap(),
            });
        }
        let scene = Scene {
            scene_id: scene_id.into(),
            frames: vec![Frame {
                index: 0,
                timestamp: 0.0,
                objects,
            }],
        };
        LabeledGraph {
            qxg: build(&scene, &CalculiConfig::default()).unwrap(),
            annotations: vec![ActionAnnotation {
                scene_id: scene_id.into(),
                frame_index: 0,
                actor_id: "ego".into(),
                action: action.into(),
            }],
        }
    }

    #[test]
    fn one_annotation_three_others() {
        let spec = EncodingSpec::new(5, &CalculiConfig::default());
        let ds = build_dataset(&[labeled("s", 3, "Stopping")], &spec);
        let (pos, neg) = ds.split_for("Stopping");
        assert_eq!((pos.len(), neg.len()), (3, 0));
        assert!(ds.warnings.iter().any(|w| w.contains("only one action")));
    }

    #[test]
    fn negatives_are_other_actions_positives() {
        let spec = EncodingSpec::new(5, &CalculiConfig::default());
        let corpus = vec![
            labeled("a", 2, "Stopping"),
            labeled("b", 3, "Cruising"),
            labeled("c", 4, "Accelerating"),
            labeled("d", 1, "Stopping"),
        ];
        let ds = build_dataset(&corpus, &spec);
        let counts = ds.counts();
        assert_eq!(counts["Stopping"], (3, 7));
        assert_eq!(counts["Cruising"], (3, 7));
        assert_eq!(counts["Accelerating"], (4, 6));
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn failures_are_collected() {
        let spec = EncodingSpec::new(5, &CalculiConfig::default());
        let mut lg = labeled("a", 2, "Stopping");
        lg.annotations[0].actor_id = "ghost".into();
        let ds = build_dataset(&[lg], &spec);
        assert_eq!(ds.failures.len(), 1);
        assert!(ds.samples.is_empty());
    }
}
