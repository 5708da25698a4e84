//! Scripted driving scenes with a known cause for the ego action.
//!
//! The ego drives north along the y axis and is at the local origin at the
//! annotated frame. Each kind scripts the ego speed profile and one cause
//! object. Distractors stay in the far distance band: static in most kinds,
//! moving with the ego as parallel traffic in `ClearCruise`. Every
//! object centre gets independent Gaussian jitter in every frame.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::build;
use crate::calculi::CalculiConfig;
use crate::explainer::DEFAULT_T;
use crate::scene::{
    ActionAnnotation, BBox2D, CauseAnnotation, Frame, ObjectState, Point2D, Scene, Trace,
};

pub const MIN_FRAMES: usize = 6;
pub const MAX_DISTRACTORS: usize = 256;
pub const FRAME_DT: f64 = 0.2;
pub const EGO_ID: &str = "ego";

/// Frames whose relations must separate the cause from every distractor.
const SEPARATION_WINDOW: usize = DEFAULT_T;
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    StoppingForCrosser,
    LeadVehicleBraking,
    ClearCruise,
    GapAccelerate,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::StoppingForCrosser,
        ScenarioKind::LeadVehicleBraking,
        ScenarioKind::ClearCruise,
        ScenarioKind::GapAccelerate,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ScenarioKind::StoppingForCrosser => "stopping-for-crosser",
            ScenarioKind::LeadVehicleBraking => "lead-vehicle-braking",
            ScenarioKind::ClearCruise => "clear-cruise",
            ScenarioKind::GapAccelerate => "gap-accelerate",
        }
    }

    pub fn action(self) -> &'static str {
        match self {
            ScenarioKind::StoppingForCrosser | ScenarioKind::LeadVehicleBraking => "Stopping",
            ScenarioKind::ClearCruise => "Cruising",
            ScenarioKind::GapAccelerate => "Accelerating",
        }
    }

    pub fn has_cause(self) -> bool {
        self != ScenarioKind::ClearCruise
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ScenarioKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.slug() == s || format!("{k:?}") == s)
            .ok_or_else(|| SynthError::InvalidSpec(format!("unknown scenario kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_frames: usize,
    pub n_distractors: usize,
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::StoppingForCrosser,
            n_frames: 20,
            n_distractors: 4,
            jitter_sigma: 0.1,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_frames < MIN_FRAMES {
            return Err(SynthError::InvalidSpec(format!(
                "n_frames must be at least {MIN_FRAMES}"
            )));
        }
        if self.n_frames > u32::MAX as usize {
            return Err(SynthError::InvalidSpec("n_frames too large".into()));
        }
        if self.n_distractors > MAX_DISTRACTORS {
            return Err(SynthError::InvalidSpec(format!(
                "at most {MAX_DISTRACTORS} distractors"
            )));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(SynthError::InvalidSpec(
                "jitter_sigma must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn scene_id(&self) -> String {
        format!("{}-{:016x}", self.kind.slug(), self.seed)
    }

    /// Frame carrying the action annotation.
    pub fn annotated_frame(&self) -> usize {
        let tail = if self.n_frames >= 9 { 2 } else { 0 };
        self.n_frames - 1 - tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scene_id: String,
    pub kind: ScenarioKind,
    pub frame_index: u32,
    pub actor_id: String,
    pub action: String,
    /// `None` for kinds without a cause.
    pub cause_id: Option<String>,
    /// Closest distractor at the annotated frame; recorded only for causeless kinds.
    pub nearest_id: Option<String>,
}

impl GroundTruth {
    pub fn annotation(&self) -> ActionAnnotation {
        ActionAnnotation {
            scene_id: self.scene_id.clone(),
            frame_index: self.frame_index,
            actor_id: self.actor_id.clone(),
            action: self.action.clone(),
        }
    }

    pub fn cause_annotation(&self) -> CauseAnnotation {
        CauseAnnotation {
            frame_index: self.frame_index,
            actor_id: self.actor_id.clone(),
            cause_id: self.cause_id.clone(),
            nearest: self.nearest_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub spec: ScenarioSpec,
    pub trace: Trace,
    pub ground_truth: GroundTruth,
}

impl GeneratedScene {
    pub fn scene(&self) -> &Scene {
        &self.trace.scene
    }

    pub fn annotation(&self) -> &ActionAnnotation {
        &self.trace.actions[0]
    }
}

/// One object's footprint and noise-free centre per frame.
struct Track {
    id: String,
    class: &'static str,
    size: (f64, f64),
    centres: Vec<Point2D>,
}

/// Positions along one axis from per-frame displacements, anchored at `at_f`
/// on frame `f`. `step(k)` is the displacement from frame `k - 1` to `k`.
fn integrate(n: usize, f: usize, at_f: f64, step: impl Fn(i64) -> f64) -> Vec<f64> {
    let mut pos = vec![0.0; n];
    pos[f] = at_f;
    for k in (0..f).rev() {
        pos[k] = pos[k + 1] - step(k as i64 + 1);
    }
    for k in f + 1..n {
        pos[k] = pos[k - 1] + step(k as i64);
    }
    pos
}

fn ego_step(kind: ScenarioKind, rel: i64, s: f64) -> f64 {
    let v = match kind {
        ScenarioKind::ClearCruise => 1.5,
        ScenarioKind::StoppingForCrosser | ScenarioKind::LeadVehicleBraking => match rel {
            r if r <= -5 => 1.5,
            -4 => 1.0,
            -3 => 0.5,
            _ => 0.0,
        },
        ScenarioKind::GapAccelerate => match rel {
            r if r <= -1 => 0.0,
            r => 0.6 * (r + 1) as f64,
        },
    };
    v * s
}

fn lead_step(kind: ScenarioKind, rel: i64, s: f64) -> f64 {
    let v = match kind {
        ScenarioKind::LeadVehicleBraking => match rel {
            r if r <= -6 => 1.5,
            -5 => 1.0,
            -4 => 0.5,
            _ => 0.0,
        },
        ScenarioKind::GapAccelerate => match rel {
            r if r <= -5 => 0.0,
            r => 0.5 * (r + 5) as f64,
        },
        _ => 0.0,
    };
    v * s
}

fn fresh_id(rng: &mut ChaCha8Rng, taken: &mut BTreeSet<String>) -> String {
    loop {
        let id = format!("obj-{:04x}", rng.random::<u16>());
        if taken.insert(id.clone()) {
            return id;
        }
    }
}

const DISTRACTOR_CLASSES: [(&str, (f64, f64)); 4] = [
    ("car", (1.9, 4.6)),
    ("pedestrian", (0.6, 0.6)),
    ("cyclist", (0.7, 1.8)),
    ("truck", (2.5, 9.0)),
];

/// Object ahead of or behind the ego, off to one side, in the far band.
/// `flow` is the per-frame northward speed of parallel traffic; static
/// distractors pass `None`.
fn distractor(
    rng: &mut ChaCha8Rng,
    id: String,
    n: usize,
    f: usize,
    origin: Point2D,
    flow: Option<f64>,
) -> Track {
    let pick = match flow {
        // Parallel traffic is vehicles only.
        Some(_) => [0, 3][rng.random_range(0..2)],
        None => rng.random_range(0..DISTRACTOR_CLASSES.len()),
    };
    let (class, size) = DISTRACTOR_CLASSES[pick];
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let ahead = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let x = origin.x + side * rng.random_range(5.0..12.0);
    let y_f = origin.y + ahead * rng.random_range(24.0..38.0);
    let v = flow.map_or(0.0, |v| v * rng.random_range(0.9..1.1));
    let ys = integrate(n, f, y_f, |_| v);
    Track {
        id,
        class,
        size,
        centres: ys.into_iter().map(|y| Point2D::new(x, y)).collect(),
    }
}

fn jittered(tracks: &[Track], n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<Point2D>> {
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    tracks
        .iter()
        .map(|t| {
            (0..n)
                .map(|k| {
                    let c = t.centres[k];
                    if sigma == 0.0 {
                        c
                    } else {
                        Point2D::new(c.x + noise.sample(rng), c.y + noise.sample(rng))
                    }
                })
                .collect()
        })
        .collect()
}

fn assemble(scene_id: &str, tracks: &[Track], centres: &[Vec<Point2D>], n: usize) -> Scene {
    let frames = (0..n)
        .map(|k| Frame {
            index: k as u32,
            timestamp: k as f64 * FRAME_DT,
            objects: tracks
                .iter()
                .zip(centres)
                .map(|(t, c)| ObjectState {
                    id: t.id.clone(),
                    class: t.class.to_string(),
                    bbox: BBox2D::from_center(c[k], t.size.0, t.size.1)
                        .expect("finite positive sizes"),
                })
                .collect(),
        })
        .collect();
    Scene {
        scene_id: scene_id.to_string(),
        frames,
    }
}

/// Indices of distractors whose recent chain with the ego equals the cause's.
fn inseparable(scene: &Scene, cause: &str, distractors: &[String], f: u32) -> Vec<usize> {
    let qxg = build(scene, &CalculiConfig::default()).expect("generated scenes are valid");
    let cause_chain: Vec<_> = qxg
        .edge_chain(EGO_ID, cause, f, SEPARATION_WINDOW)
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    distractors
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            let chain: Vec<_> = qxg
                .edge_chain(EGO_ID, d, f, SEPARATION_WINDOW)
                .into_iter()
                .map(|(_, r)| r)
                .collect();
            chain == cause_chain
        })
        .map(|(i, _)| i)
        .collect()
}

pub fn generate_scene(spec: &ScenarioSpec) -> Result<GeneratedScene, SynthError> {
    spec.validate()?;
    let n = spec.n_frames;
    let f = spec.annotated_frame();
    let kind = spec.kind;
    let scene_id = spec.scene_id();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let origin = Point2D::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    let s = rng.random_range(0.85..1.15);
    let rel = |k: i64| k - f as i64;

    let ego_y = integrate(n, f, origin.y, |k| ego_step(kind, rel(k), s));
    let mut tracks = vec![Track {
        id: EGO_ID.to_string(),
        class: "car",
        size: (1.9, 4.6),
        centres: ego_y.iter().map(|&y| Point2D::new(origin.x, y)).collect(),
    }];
    let mut taken = BTreeSet::from([EGO_ID.to_string()]);

    let cause_id = match kind {
        ScenarioKind::StoppingForCrosser => {
            let x0 = origin.x + rng.random_range(1.5..2.5);
            let y0 = origin.y + rng.random_range(6.0..9.0);
            let w = rng.random_range(0.4..0.6);
            let xs = integrate(n, f, x0, |_| -w);
            let id = fresh_id(&mut rng, &mut taken);
            tracks.push(Track {
                id: id.clone(),
                class: "pedestrian",
                size: (0.6, 0.6),
                centres: xs.into_iter().map(|x| Point2D::new(x, y0)).collect(),
            });
            Some(id)
        }
        ScenarioKind::LeadVehicleBraking | ScenarioKind::GapAccelerate => {
            let gap = rng.random_range(7.0..9.0);
            let at_f = match kind {
                ScenarioKind::LeadVehicleBraking => origin.y + gap,
                // The gap opens by the difference of the two speed ramps.
                _ => {
                    let opened: f64 = (f as i64 - 4..=f as i64)
                        .map(|k| lead_step(kind, rel(k), s) - ego_step(kind, rel(k), s))
                        .sum();
                    origin.y + gap + opened
                }
            };
            let ys = integrate(n, f, at_f, |k| lead_step(kind, rel(k), s));
            // Same lane, off-centre by well over the jitter.
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let x = origin.x + side * rng.random_range(0.4..0.8);
            let id = fresh_id(&mut rng, &mut taken);
            tracks.push(Track {
                id: id.clone(),
                class: "car",
                size: (1.9, 4.6),
                centres: ys.into_iter().map(|y| Point2D::new(x, y)).collect(),
            });
            Some(id)
        }
        ScenarioKind::ClearCruise => None,
    };

    let flow = (kind == ScenarioKind::ClearCruise).then(|| ego_step(kind, 0, s));
    let first_distractor = tracks.len();
    for _ in 0..spec.n_distractors {
        let id = fresh_id(&mut rng, &mut taken);
        tracks.push(distractor(&mut rng, id, n, f, origin, flow));
    }

    let mut centres = jittered(&tracks, n, spec.jitter_sigma, &mut rng);
    let mut scene = assemble(&scene_id, &tracks, &centres, n);

    if let Some(cause) = &cause_id {
        for _ in 0..MAX_REDRAWS {
            let ids: Vec<String> = tracks[first_distractor..]
                .iter()
                .map(|t| t.id.clone())
                .collect();
            let bad = inseparable(&scene, cause, &ids, f as u32);
            if bad.is_empty() {
                break;
            }
            for i in bad {
                let slot = first_distractor + i;
                let id = tracks[slot].id.clone();
                tracks[slot] = distractor(&mut rng, id, n, f, origin, flow);
                centres[slot] = jittered(&tracks[slot..=slot], n, spec.jitter_sigma, &mut rng)
                    .pop()
                    .expect("one track");
            }
            scene = assemble(&scene_id, &tracks, &centres, n);
        }
        let ids: Vec<String> = tracks[first_distractor..]
            .iter()
            .map(|t| t.id.clone())
            .collect();
        if !inseparable(&scene, cause, &ids, f as u32).is_empty() {
            return Err(SynthError::InvalidSpec(
                "could not place distractors distinct from the cause".into(),
            ));
        }
    }

    let nearest_id = if cause_id.is_none() {
        let ego = centres[0][f];
        (first_distractor..tracks.len())
            .min_by(|&a, &b| {
                ego.distance(centres[a][f])
                    .total_cmp(&ego.distance(centres[b][f]))
                    .then_with(|| tracks[a].id.cmp(&tracks[b].id))
            })
            .map(|i| tracks[i].id.clone())
    } else {
        None
    };

    let ground_truth = GroundTruth {
        scene_id: scene_id.clone(),
        kind,
        frame_index: f as u32,
        actor_id: EGO_ID.to_string(),
        action: kind.action().to_string(),
        cause_id,
        nearest_id,
    };
    let trace = Trace {
        scene,
        actions: vec![ground_truth.annotation()],
        causes: vec![ground_truth.cause_annotation()],
    };
    Ok(GeneratedScene {
        spec: *spec,
        trace,
        ground_truth,
    })
}

/// `n_per_kind` scenes of every kind, kinds round-robin. Per-scene seeds are
/// drawn from a stream seeded by `master_seed`; `base` supplies the other
/// spec fields.
pub fn generate_dataset(
    n_per_kind: usize,
    base: &ScenarioSpec,
    master_seed: u64,
) -> Result<Vec<GeneratedScene>, SynthError> {
    if n_per_kind == 0 {
        return Err(SynthError::InvalidSpec("need at least one scene per kind".into()));
    }
    generate_corpus(&ScenarioKind::ALL, n_per_kind * ScenarioKind::ALL.len(), base, master_seed)
}

/// `n_scenes` scenes cycling through `kinds`.
pub fn generate_corpus(
    kinds: &[ScenarioKind],
    n_scenes: usize,
    base: &ScenarioSpec,
    master_seed: u64,
) -> Result<Vec<GeneratedScene>, SynthError> {
    if n_scenes == 0 {
        return Err(SynthError::InvalidSpec("need at least one scene".into()));
    }
    if kinds.is_empty() {
        return Err(SynthError::InvalidSpec("no scenario kinds".into()));
    }
    base.validate()?;
    let mut seeds = ChaCha8Rng::seed_from_u64(master_seed);
    let mut used = BTreeSet::new();
    let specs: Vec<ScenarioSpec> = (0..n_scenes)
        .map(|i| {
            let seed = loop {
                let s = seeds.next_u64();
                if used.insert(s) {
                    break s;
                }
            };
            ScenarioSpec {
                kind: kinds[i % kinds.len()],
                seed,
                ..*base
            }
        })
        .collect();
    specs.iter().map(generate_scene).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split `{s}` (expected train or test)")),
        }
    }
}

/// Stable 70/30 train/test assignment from a 64-bit FNV-1a hash of the id.
pub fn split_of(scene_id: &str) -> Split {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    if h % 100 < 70 {
        Split::Train
    } else {
        Split::Test
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculi::{QdcRelation, QtcMotion};
    use crate::scene::trace_to_string;

    fn spec(kind: ScenarioKind, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            kind,
            seed,
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        for kind in ScenarioKind::ALL {
            let a = generate_scene(&spec(kind, 7)).unwrap();
            let b = generate_scene(&spec(kind, 7)).unwrap();
            assert_eq!(trace_to_string(&a.trace), trace_to_string(&b.trace));
            let c = generate_scene(&spec(kind, 8)).unwrap();
            assert_ne!(trace_to_string(&a.trace), trace_to_string(&c.trace));
        }
    }

    #[test]
    fn crosser_without_distractors_has_two_objects() {
        let g = generate_scene(&ScenarioSpec {
            n_distractors: 0,
            ..spec(ScenarioKind::StoppingForCrosser, 1)
        })
        .unwrap();
        assert!(g.scene().frames.iter().all(|f| f.objects.len() == 2));
        let cause = g.ground_truth.cause_id.as_deref().unwrap();
        assert_eq!(
            g.scene().frames[0].object(cause).unwrap().class,
            "pedestrian"
        );
    }

    #[test]
    fn crosser_approaches_with_shrinking_distance() {
        let cfg = CalculiConfig::default();
        for seed in 0..20 {
            let g = generate_scene(&ScenarioSpec {
                jitter_sigma: 0.0,
                ..spec(ScenarioKind::StoppingForCrosser, seed)
            })
            .unwrap();
            let qxg = build(g.scene(), &cfg).unwrap();
            let cause = g.ground_truth.cause_id.as_deref().unwrap();
            let f = g.ground_truth.frame_index;
            let chain = qxg.edge_chain(EGO_ID, cause, f, f as usize + 1);
            assert_eq!(chain.len(), f as usize + 1);
            assert!(chain.iter().all(|(_, r)| r.qtcb.b == QtcMotion::Towards || r.qtcb.b == QtcMotion::Unknown));
            let bands: Vec<QdcRelation> = chain.iter().map(|(_, r)| r.qdc).collect();
            assert!(bands.windows(2).all(|w| w[1] <= w[0]), "{bands:?}");
            assert!(bands.first() > bands.last());
        }
    }

    #[test]
    fn annotation_and_cause_consistent() {
        for (i, kind) in ScenarioKind::ALL.into_iter().enumerate() {
            let g = generate_scene(&spec(kind, i as u64)).unwrap();
            let gt = &g.ground_truth;
            assert_eq!(gt.action, kind.action());
            let frame = g.scene().frame(gt.frame_index).unwrap();
            assert!(frame.object(EGO_ID).is_some());
            match &gt.cause_id {
                Some(c) => assert!(frame.object(c).is_some()),
                None => {
                    assert_eq!(kind, ScenarioKind::ClearCruise);
                    assert!(gt.nearest_id.is_some());
                }
            }
        }
    }

    #[test]
    fn distractors_stay_far() {
        for seed in 0..10 {
            for kind in ScenarioKind::ALL {
                let g = generate_scene(&ScenarioSpec {
                    jitter_sigma: 0.0,
                    ..spec(kind, seed)
                })
                .unwrap();
                let cause = g.ground_truth.cause_id.clone();
                let f = g.ground_truth.frame_index as usize;
                for frame in &g.scene().frames[f + 1 - SEPARATION_WINDOW..=f] {
                    let ego = frame.object(EGO_ID).unwrap().bbox.center();
                    for o in &frame.objects {
                        if o.id == EGO_ID || Some(&o.id) == cause.as_ref() {
                            continue;
                        }
                        let d = ego.distance(o.bbox.center());
                        assert!((15.0..50.0).contains(&d), "{kind:?} {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn lead_keeps_positive_gap() {
        for kind in [ScenarioKind::LeadVehicleBraking, ScenarioKind::GapAccelerate] {
            for seed in 0..20 {
                let g = generate_scene(&ScenarioSpec {
                    jitter_sigma: 0.0,
                    ..spec(kind, seed)
                })
                .unwrap();
                let cause = g.ground_truth.cause_id.clone().unwrap();
                for frame in &g.scene().frames {
                    let ego = frame.object(EGO_ID).unwrap().bbox;
                    let lead = frame.object(&cause).unwrap().bbox;
                    assert!(lead.y.lo() > ego.y.hi(), "{kind:?} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn dataset_counts_and_round_robin() {
        let corpus = generate_dataset(3, &ScenarioSpec::default(), 11).unwrap();
        assert_eq!(corpus.len(), 12);
        let ids: BTreeSet<_> = corpus.iter().map(|g| g.ground_truth.scene_id.clone()).collect();
        assert_eq!(ids.len(), 12);
        for (i, g) in corpus.iter().enumerate() {
            assert_eq!(g.spec.kind, ScenarioKind::ALL[i % 4]);
        }
        let stopping = corpus.iter().filter(|g| g.ground_truth.action == "Stopping").count();
        assert_eq!(stopping, 6);
        assert!(generate_dataset(0, &ScenarioSpec::default(), 1).is_err());
    }

    #[test]
    fn split_is_stable_and_roughly_seventy_thirty() {
        let corpus = generate_dataset(50, &ScenarioSpec::default(), 3).unwrap();
        let train = corpus
            .iter()
            .filter(|g| split_of(&g.ground_truth.scene_id) == Split::Train)
            .count();
        assert!((110..=170).contains(&train), "{train}");
        for g in &corpus {
            assert_eq!(split_of(&g.ground_truth.scene_id), split_of(&g.ground_truth.scene_id.clone()));
        }
    }

    #[test]
    fn invalid_specs() {
        let base = ScenarioSpec::default();
        for bad in [
            ScenarioSpec { n_frames: 5, ..base },
            ScenarioSpec { jitter_sigma: -0.1, ..base },
            ScenarioSpec { jitter_sigma: f64::NAN, ..base },
            ScenarioSpec { n_distractors: MAX_DISTRACTORS + 1, ..base },
        ] {
            assert!(matches!(generate_scene(&bad), Err(SynthError::InvalidSpec(_))));
        }
        let short = generate_scene(&ScenarioSpec { n_frames: 6, ..base }).unwrap();
        assert_eq!(short.ground_truth.frame_index, 5);
    }

    #[test]
    fn kind_names_parse() {
        for kind in ScenarioKind::ALL {
            assert_eq!(kind.slug().parse::<ScenarioKind>().unwrap(), kind);
        }
        assert!("drifting".parse::<ScenarioKind>().is_err());
    }
}
