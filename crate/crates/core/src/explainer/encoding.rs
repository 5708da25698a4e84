//! One-hot encoding of relation chains.
//!
//! Each of the `t` timesteps contributes one block per relation component plus
//! a missing flag:
//!
//! ```text
//! [ x-Allen 13 | y-Allen 13 | a-motion 4 | b-motion 4 | QDC bands | STAR_4 4 | missing 1 ]
//! ```
//!
//! Timestep 0 is the oldest frame of the window and timestep `t - 1` the
//! queried frame.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::builder::Qxg;
use crate::calculi::{
    AllenRelation, CalculiConfig, Converse, QdcRelation, QtcMotion, QtcbRelation, RaRelation,
    RelationTuple, Star4Relation,
};

use super::ExplainError;

const ALLEN: usize = 13;
const MOTION: usize = 4;
const STAR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub t: usize,
    pub qdc_bands: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    AllenX,
    AllenY,
    MotionA,
    MotionB,
    Qdc,
    Star4,
    Missing,
}

impl Block {
    fn label(self) -> &'static str {
        match self {
            Block::AllenX => "x-Allen",
            Block::AllenY => "y-Allen",
            Block::MotionA => "QTC_b actor",
            Block::MotionB => "QTC_b other",
            Block::Qdc => "QDC",
            Block::Star4 => "STAR_4",
            Block::Missing => "missing",
        }
    }
}

/// Human-readable meaning of one feature index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureName {
    /// 0 for the queried frame, 1 for the frame before, ...
    pub frames_back: usize,
    pub block: Block,
    pub value: String,
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.block == Block::Missing {
            write!(f, "missing[t-{}]", self.frames_back)
        } else {
            write!(f, "{}[t-{}]={}", self.block.label(), self.frames_back, self.value)
        }
    }
}

impl EncodingSpec {
    pub fn new(t: usize, cfg: &CalculiConfig) -> Self {
        Self {
            t,
            qdc_bands: cfg.qdc_band_count(),
        }
    }

    pub fn step_len(&self) -> usize {
        2 * ALLEN + 2 * MOTION + self.qdc_bands + STAR + 1
    }

    pub fn feature_len(&self) -> usize {
        self.t * self.step_len()
    }

    fn offsets(&self) -> [(Block, usize, usize); 7] {
        let q = self.qdc_bands;
        [
            (Block::AllenX, 0, ALLEN),
            (Block::AllenY, ALLEN, ALLEN),
            (Block::MotionA, 2 * ALLEN, MOTION),
            (Block::MotionB, 2 * ALLEN + MOTION, MOTION),
            (Block::Qdc, 2 * ALLEN + 2 * MOTION, q),
            (Block::Star4, 2 * ALLEN + 2 * MOTION + q, STAR),
            (Block::Missing, 2 * ALLEN + 2 * MOTION + q + STAR, 1),
        ]
    }

    fn encode_step(&self, out: &mut [u8], tuple: Option<&RelationTuple>) {
        let [ax, ay, ma, mb, qdc, star, missing] = self.offsets();
        match tuple {
            None => out[missing.1] = 1,
            Some(r) => {
                out[ax.1 + r.ra.x.index()] = 1;
                out[ay.1 + r.ra.y.index()] = 1;
                out[ma.1 + r.qtcb.a.index()] = 1;
                out[mb.1 + r.qtcb.b.index()] = 1;
                out[qdc.1 + r.qdc.band_index()] = 1;
                out[star.1 + r.star4.index()] = 1;
            }
        }
    }

    /// Encodes a window of exactly `t` timesteps, oldest first.
    pub fn encode(&self, window: &[Option<RelationTuple>]) -> FeatureVector {
        assert_eq!(window.len(), self.t, "window length must equal t");
        let step = self.step_len();
        let mut values = vec![0u8; self.feature_len()];
        for (k, tuple) in window.iter().enumerate() {
            self.encode_step(&mut values[k * step..(k + 1) * step], tuple.as_ref());
        }
        FeatureVector(values)
    }

    /// Inverse of [`EncodingSpec::encode`]. Returns `None` if any timestep is not a
    /// well-formed one-hot encoding.
    pub fn decode(&self, fv: &FeatureVector) -> Option<Vec<Option<RelationTuple>>> {
        if fv.len() != self.feature_len() {
            return None;
        }
        let step = self.step_len();
        let [ax, ay, ma, mb, qdc, star, missing] = self.offsets();
        let hot = |s: &[u8], (_, off, len): (Block, usize, usize)| -> Option<usize> {
            let block = &s[off..off + len];
            let mut ones = block.iter().enumerate().filter(|(_, v)| **v == 1);
            let first = ones.next().map(|(i, _)| i);
            if ones.next().is_some() || block.iter().any(|v| *v > 1) {
                return None;
            }
            first
        };
        (0..self.t)
            .map(|k| {
                let s = &fv.0[k * step..(k + 1) * step];
                if s[missing.1] == 1 {
                    return s[..missing.1].iter().all(|v| *v == 0).then_some(None);
                }
                Some(Some(RelationTuple {
                    ra: RaRelation::new(
                        AllenRelation::from_index(hot(s, ax)?)?,
                        AllenRelation::from_index(hot(s, ay)?)?,
                    ),
                    qtcb: QtcbRelation::new(
                        QtcMotion::from_index(hot(s, ma)?)?,
                        QtcMotion::from_index(hot(s, mb)?)?,
                    ),
                    qdc: QdcRelation(hot(s, qdc)? as u8),
                    star4: Star4Relation::from_index(hot(s, star)?)?,
                }))
            })
            .collect()
    }

    pub fn feature_name(&self, index: usize, band_names: &[String]) -> FeatureName {
        let step = self.step_len();
        let k = index / step;
        let within = index % step;
        let (block, off, _) = self
            .offsets()
            .into_iter()
            .find(|(_, off, len)| within >= *off && within < off + len)
            .expect("offsets cover the step");
        let i = within - off;
        let value = match block {
            Block::AllenX | Block::AllenY => AllenRelation::ALL[i].name().to_string(),
            Block::MotionA | Block::MotionB => QtcMotion::ALL[i].name().to_string(),
            Block::Qdc => band_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("band{i}")),
            Block::Star4 => Star4Relation::ALL[i].name().to_string(),
            Block::Missing => String::new(),
        };
        FeatureName {
            frames_back: self.t - 1 - k,
            block,
            value,
        }
    }
}

/// Binary feature vector; every value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<u8>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.0[index] != 0
    }
}

/// Relation chain between the actor and one other object.
#[derive(Debug, Clone, PartialEq)]
pub struct PairChain {
    pub other_id: String,
    /// Recorded relations inside the window, actor first, ascending by frame.
    pub chain: Vec<(u32, RelationTuple)>,
    pub features: FeatureVector,
}

/// Chains for every object sharing at least one relation with `actor` in
/// frames `(frame - t, frame]`, sorted by object id.
pub fn extract_features(
    qxg: &Qxg,
    actor: &str,
    frame: u32,
    spec: &EncodingSpec,
) -> Result<Vec<PairChain>, ExplainError> {
    if !qxg.is_present(actor, frame) {
        return Err(ExplainError::ActorNotPresent {
            actor: actor.to_string(),
            frame,
        });
    }
    let t = spec.t as i64;
    let lowest = frame as i64 - t + 1;
    let mut out = Vec::new();
    for (other, edge, forward) in qxg.neighbors(actor) {
        let rel = edge.relations();
        let end = rel.partition_point(|(f, _)| *f <= frame);
        let start = rel[..end].partition_point(|(f, _)| (*f as i64) < lowest);
        if start == end {
            continue;
        }
        let chain: Vec<(u32, RelationTuple)> = rel[start..end]
            .iter()
            .map(|&(f, r)| (f, if forward { r } else { r.converse() }))
            .collect();
        let mut window = vec![None; spec.t];
        for (f, r) in &chain {
            window[(*f as i64 - lowest) as usize] = Some(*r);
        }
        out.push(PairChain {
            other_id: other.to_string(),
            features: spec.encode(&window),
            chain,
        });
    }
    out.sort_by(|a, b| a.other_id.cmp(&b.other_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build;
    use crate::scene::{BBox2D, Frame, ObjectState, Point2D, Scene};

    fn obj(id: &str, cx: f64, cy: f64) -> ObjectState {
        ObjectState {
            id: id.into(),
            class: "car".into(),
            bbox: BBox2D::from_center(Point2D::new(cx, cy), 2.0, 4.0).unwrap(),
        }
    }

    fn scene(frames: Vec<Vec<ObjectState>>) -> Scene {
        Scene {
            scene_id: "enc".into(),
            frames: frames
                .into_iter()
                .enumerate()
                .map(|(i, objects)| Frame {
                    index: i as u32,
                    timestamp: i as f64,
                    objects,
                })
                .collect(),
        }
    }

    #[test]
    fn feature_length_formula() {
        let cfg = CalculiConfig::default();
        let spec = EncodingSpec::new(5, &cfg);
        assert_eq!(spec.step_len(), 38 + 5 + 1);
        assert_eq!(spec.feature_len(), 5 * 44);
    }

    #[test]
    fn actor_alone_yields_nothing() {
        let cfg = CalculiConfig::default();
        let g = build(&scene(vec![vec![obj("ego", 0.0, 0.0)]; 6]), &cfg).unwrap();
        let spec = EncodingSpec::new(5, &cfg);
        assert!(extract_features(&g, "ego", 5, &spec).unwrap().is_empty());
        assert!(matches!(
            extract_features(&g, "ghost", 5, &spec),
            Err(ExplainError::ActorNotPresent { .. })
        ));
        assert!(matches!(
            extract_features(&g, "ego", 9, &spec),
            Err(ExplainError::ActorNotPresent { .. })
        ));
    }

    #[test]
    fn late_arrival_is_right_aligned() {
        let cfg = CalculiConfig::default();
        let mut frames = vec![vec![obj("ego", 0.0, 0.0)]; 5];
        frames.push(vec![obj("ego", 0.0, 0.0), obj("car", 0.0, 9.0)]);
        let g = build(&scene(frames), &cfg).unwrap();
        let spec = EncodingSpec::new(5, &cfg);
        let pairs = extract_features(&g, "ego", 5, &spec).unwrap();
        assert_eq!(pairs.len(), 1);
        let decoded = spec.decode(&pairs[0].features).unwrap();
        assert_eq!(decoded.iter().filter(|s| s.is_none()).count(), 4);
        assert!(decoded[4].is_some());
        assert_eq!(pairs[0].chain.len(), 1);
    }

    #[test]
    fn manual_one_hot_positions() {
        let cfg = CalculiConfig::default();
        let frames = vec![
            vec![obj("ego", 0.0, 0.0), obj("ped", 4.0, 10.0)],
            vec![obj("ego", 0.0, 1.0), obj("ped", 3.0, 10.0)],
        ];
        let g = build(&scene(frames), &cfg).unwrap();
        let spec = EncodingSpec::new(2, &cfg);
        let pairs = extract_features(&g, "ego", 1, &spec).unwrap();
        let fv = &pairs[0].features;

        // Frame 0: ego x=[-1,1] vs ped x=[3,5] -> Before; y=[-2,2] vs [8,12] -> Before;
        // QTC unknown; distance sqrt(116)=10.77 -> medium (2); ped is NE of ego.
        // Frame 1: ego x=[-1,1] vs [2,4] -> Before; y=[-1,3] vs [8,12] -> Before;
        // ego moves towards ped's old spot, ped moves towards ego's old spot;
        // distance sqrt(9+81)=9.49 -> medium; NE.
        let step = spec.step_len();
        let mut expected = vec![0u8; spec.feature_len()];
        for (k, motion) in [(0, 3usize), (1, 0usize)] {
            let base = k * step;
            expected[base] = 1; // x Before
            expected[base + 13] = 1; // y Before
            expected[base + 26 + motion] = 1;
            expected[base + 30 + motion] = 1;
            expected[base + 34 + 2] = 1; // medium
            expected[base + 34 + 5] = 1; // NE
        }
        assert_eq!(fv.as_slice(), expected.as_slice());

        // Viewed from the pedestrian, everything is conversed.
        let from_ped = extract_features(&g, "ped", 1, &spec).unwrap();
        let decoded = spec.decode(&from_ped[0].features).unwrap();
        assert_eq!(decoded[1].unwrap().ra.x, AllenRelation::BeforeInv);
        assert_eq!(decoded[1].unwrap().star4, Star4Relation::SW);
    }

    #[test]
    fn feature_names_are_readable() {
        let cfg = CalculiConfig::default();
        let spec = EncodingSpec::new(3, &cfg);
        let step = spec.step_len();
        let name = spec.feature_name(2 * step + 13 + 4, cfg.qdc_band_names());
        assert_eq!(name.to_string(), "y-Allen[t-0]=During");
        let name = spec.feature_name(34 + 2, cfg.qdc_band_names());
        assert_eq!(name.to_string(), "QDC[t-2]=medium");
        let name = spec.feature_name(step - 1, cfg.qdc_band_names());
        assert_eq!(name.to_string(), "missing[t-2]");
    }
}
