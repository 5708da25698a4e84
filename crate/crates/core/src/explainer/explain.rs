use serde::{Deserialize, Serialize};

use crate::builder::Qxg;
use crate::calculi::RelationRecord;
use crate::scene::ActionAnnotation;

use super::encoding::{extract_features, EncodingSpec, FeatureVector};
use super::model::{Forest, ModelBundle};
use super::ExplainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationCandidate {
    pub other_id: String,
    pub score: f64,
    pub chain: Vec<RelationRecord>,
    pub decision_path: Vec<String>,
}

/// Split tests of the tree that gives `features` its highest leaf fraction
/// (first such tree on ties), followed by the leaf.
pub fn decision_path(
    forest: &Forest,
    spec: &EncodingSpec,
    band_names: &[String],
    features: &FeatureVector,
) -> Vec<String> {
    let mut best: Option<super::tree::DecisionPath> = None;
    for tree in &forest.trees {
        let p = tree.path(features.as_slice());
        if best
            .as_ref()
            .is_none_or(|b| p.positive_fraction > b.positive_fraction)
        {
            best = Some(p);
        }
    }
    let Some(best) = best else {
        return Vec::new();
    };
    let mut out: Vec<String> = best
        .steps
        .iter()
        .map(|&(feature, set)| {
            let name = spec.feature_name(feature, band_names);
            if set {
                name.to_string()
            } else {
                format!("not {name}")
            }
        })
        .collect();
    out.push(format!(
        "leaf: p={:.3} (n={})",
        best.positive_fraction, best.samples
    ));
    out
}

/// Ranks the objects around the annotated actor by how well their relation
/// chain explains the annotated action.
pub fn explain(
    qxg: &Qxg,
    annotation: &ActionAnnotation,
    model: &ModelBundle,
    k: usize,
    threshold: f64,
) -> Result<Vec<ExplanationCandidate>, ExplainError> {
    let forest = model.forest(&annotation.action)?;
    let bands = model.calculi.qdc_band_names();
    if qxg.qdc_bands() != bands {
        return Err(ExplainError::ConfigMismatch(
            "graph and model use different distance bands".into(),
        ));
    }
    let pairs = extract_features(
        qxg,
        &annotation.actor_id,
        annotation.frame_index,
        &model.encoding,
    )?;
    let mut scored: Vec<_> = pairs
        .into_iter()
        .map(|p| (forest.score(p.features.as_slice()), p))
        .filter(|(s, _)| *s >= threshold)
        .collect();
    // Stable sort keeps the id order from extraction for equal scores.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(score, p)| ExplanationCandidate {
            decision_path: decision_path(forest, &model.encoding, bands, &p.features),
            chain: p
                .chain
                .iter()
                .map(|(f, r)| RelationRecord::new(*f, r, bands))
                .collect(),
            other_id: p.other_id,
            score,
        })
        .collect())
}
