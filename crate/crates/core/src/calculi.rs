//! Qualitative calculi over bird's-eye-view boxes.
//!
//! Four calculi describe an ordered pair of objects in one frame:
//!
//! | calculus | relation            | input                         |
//! |----------|---------------------|-------------------------------|
//! | RA       | [`RaRelation`]      | axis-aligned boxes            |
//! | QTC_b    | [`QtcbRelation`]    | centroids in two frames       |
//! | QDC      | [`QdcRelation`]     | centroid distance             |
//! | STAR_4   | [`Star4Relation`]   | centroid direction            |
//!
//! A [`RelationTuple`] bundles one relation from each, always in that order.
//! Every function here is pure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{BBox2D, Point2D};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculiError {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo <= hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid calculi configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown {kind} symbol `{symbol}`")]
    UnknownSymbol { kind: &'static str, symbol: String },
}

/// Closed interval on one axis, in meters. Zero width is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, CalculiError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(CalculiError::InvalidInterval { lo, hi })
        }
    }

    /// Interval of the given width centred on `center`. Negative widths clamp to zero.
    pub fn centered(center: f64, width: f64) -> Result<Self, CalculiError> {
        let half = width.max(0.0) / 2.0;
        Self::new(center - half, center + half)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub(crate) fn shifted(&self, by: f64) -> Self {
        Self {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = CalculiError;

    fn try_from(value: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(value[0], value[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(value: Interval) -> Self {
        [value.lo, value.hi]
    }
}

/// Allen's thirteen interval relations, read as "a REL b".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
    BeforeInv,
    MeetsInv,
    OverlapsInv,
    StartsInv,
    DuringInv,
    FinishesInv,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Before,
        AllenRelation::Meets,
        AllenRelation::Overlaps,
        AllenRelation::Starts,
        AllenRelation::During,
        AllenRelation::Finishes,
        AllenRelation::Equals,
        AllenRelation::BeforeInv,
        AllenRelation::MeetsInv,
        AllenRelation::OverlapsInv,
        AllenRelation::StartsInv,
        AllenRelation::DuringInv,
        AllenRelation::FinishesInv,
    ];

    /// Position in [`AllenRelation::ALL`]; used as a one-hot offset.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn converse(self) -> Self {
        use AllenRelation::*;
        match self {
            Before => BeforeInv,
            Meets => MeetsInv,
            Overlaps => OverlapsInv,
            Starts => StartsInv,
            During => DuringInv,
            Finishes => FinishesInv,
            Equals => Equals,
            BeforeInv => Before,
            MeetsInv => Meets,
            OverlapsInv => Overlaps,
            StartsInv => Starts,
            DuringInv => During,
            FinishesInv => Finishes,
        }
    }

    pub fn name(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Before => "Before",
            Meets => "Meets",
            Overlaps => "Overlaps",
            Starts => "Starts",
            During => "During",
            Finishes => "Finishes",
            Equals => "Equals",
            BeforeInv => "BeforeInv",
            MeetsInv => "MeetsInv",
            OverlapsInv => "OverlapsInv",
            StartsInv => "StartsInv",
            DuringInv => "DuringInv",
            FinishesInv => "FinishesInv",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllenRelation {
    type Err = CalculiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| CalculiError::UnknownSymbol {
                kind: "Allen",
                symbol: s.to_string(),
            })
    }
}

/// Allen relation of `a` relative to `b`, with exact endpoint comparison.
///
/// The case split is on the start points first, then the end points, so
/// degenerate (zero-width) intervals still land in exactly one relation:
/// `Meets` requires both intervals to have positive width.
pub fn allen_relation(a: Interval, b: Interval) -> AllenRelation {
    use std::cmp::Ordering::*;
    use AllenRelation::*;

    let cmp = |x: f64, y: f64| x.partial_cmp(&y).expect("interval bounds are finite");
    match (cmp(a.lo, b.lo), cmp(a.hi, b.hi)) {
        (Equal, Equal) => Equals,
        (Equal, Less) => Starts,
        (Equal, Greater) => StartsInv,
        (Greater, Equal) => Finishes,
        (Less, Equal) => FinishesInv,
        (Greater, Less) => During,
        (Less, Greater) => DuringInv,
        (Less, Less) => match cmp(a.hi, b.lo) {
            Less => Before,
            Equal => Meets,
            Greater => Overlaps,
        },
        (Greater, Greater) => match cmp(b.hi, a.lo) {
            Less => BeforeInv,
            Equal => MeetsInv,
            Greater => OverlapsInv,
        },
    }
}

/// Rectangle-algebra relation: one Allen relation per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RaRelation {
    pub x: AllenRelation,
    pub y: AllenRelation,
}

impl RaRelation {
    pub fn new(x: AllenRelation, y: AllenRelation) -> Self {
        Self { x, y }
    }

    /// All 169 values, x-major.
    pub fn all() -> impl Iterator<Item = RaRelation> {
        AllenRelation::ALL
            .into_iter()
            .flat_map(|x| AllenRelation::ALL.into_iter().map(move |y| RaRelation { x, y }))
    }
}

pub fn ra_relation(a: &BBox2D, b: &BBox2D) -> RaRelation {
    RaRelation {
        x: allen_relation(a.x, b.x),
        y: allen_relation(a.y, b.y),
    }
}

/// Motion of one object relative to the other's previous position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QtcMotion {
    Towards,
    Stable,
    Away,
    Unknown,
}

impl QtcMotion {
    pub const ALL: [QtcMotion; 4] = [
        QtcMotion::Towards,
        QtcMotion::Stable,
        QtcMotion::Away,
        QtcMotion::Unknown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            QtcMotion::Towards => "Towards",
            QtcMotion::Stable => "Stable",
            QtcMotion::Away => "Away",
            QtcMotion::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for QtcMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QtcMotion {
    type Err = CalculiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CalculiError::UnknownSymbol {
                kind: "QTC_b",
                symbol: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QtcbRelation {
    pub a: QtcMotion,
    pub b: QtcMotion,
}

impl QtcbRelation {
    pub const UNKNOWN: QtcbRelation = QtcbRelation {
        a: QtcMotion::Unknown,
        b: QtcMotion::Unknown,
    };

    pub fn new(a: QtcMotion, b: QtcMotion) -> Self {
        Self { a, b }
    }

    /// The nine determined values followed by `(Unknown, Unknown)`.
    pub fn all() -> impl Iterator<Item = QtcbRelation> {
        const MOVING: [QtcMotion; 3] = [QtcMotion::Towards, QtcMotion::Stable, QtcMotion::Away];
        MOVING
            .into_iter()
            .flat_map(|a| MOVING.into_iter().map(move |b| QtcbRelation { a, b }))
            .chain(std::iter::once(Self::UNKNOWN))
    }
}

fn motion_sign(moved: f64, before: f64, epsilon: f64) -> QtcMotion {
    if moved < before - epsilon {
        QtcMotion::Towards
    } else if moved > before + epsilon {
        QtcMotion::Away
    } else {
        QtcMotion::Stable
    }
}

/// Basic QTC: each object's motion is judged against the other's previous position.
pub fn qtcb_relation(
    a_prev: Point2D,
    a_cur: Point2D,
    b_prev: Point2D,
    b_cur: Point2D,
    cfg: &CalculiConfig,
) -> QtcbRelation {
    let eps = cfg.qtc_epsilon;
    QtcbRelation {
        a: motion_sign(a_cur.distance(b_prev), a_prev.distance(b_prev), eps),
        b: motion_sign(b_cur.distance(a_prev), b_prev.distance(a_prev), eps),
    }
}

/// Index of a configured distance band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QdcRelation(pub u8);

impl QdcRelation {
    pub fn band_index(self) -> usize {
        self.0 as usize
    }

    pub fn band_name(self, cfg: &CalculiConfig) -> &str {
        &cfg.qdc_band_names[self.band_index()]
    }
}

pub fn qdc_relation(a: Point2D, b: Point2D, cfg: &CalculiConfig) -> QdcRelation {
    qdc_band_for_distance(a.distance(b), cfg)
}

/// Band `i` covers `[edge[i-1], edge[i])`; the last band is unbounded.
pub fn qdc_band_for_distance(distance: f64, cfg: &CalculiConfig) -> QdcRelation {
    let band = cfg.qdc_band_edges.partition_point(|edge| *edge <= distance);
    QdcRelation(band as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Star4Relation {
    NE,
    NW,
    SW,
    SE,
}

impl Star4Relation {
    pub const ALL: [Star4Relation; 4] = [
        Star4Relation::NE,
        Star4Relation::NW,
        Star4Relation::SW,
        Star4Relation::SE,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Point reflection.
    pub fn converse(self) -> Self {
        match self {
            Star4Relation::NE => Star4Relation::SW,
            Star4Relation::NW => Star4Relation::SE,
            Star4Relation::SW => Star4Relation::NE,
            Star4Relation::SE => Star4Relation::NW,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Star4Relation::NE => "NE",
            Star4Relation::NW => "NW",
            Star4Relation::SW => "SW",
            Star4Relation::SE => "SE",
        }
    }
}

impl fmt::Display for Star4Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Star4Relation {
    type Err = CalculiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| CalculiError::UnknownSymbol {
                kind: "STAR_4",
                symbol: s.to_string(),
            })
    }
}

/// Quadrant of `target` as seen from `reference`, in global axes (x east, y north).
/// Each sector owns the boundary ray counter-clockwise of it; coincident points are NE.
pub fn star4_relation(reference: Point2D, target: Point2D) -> Star4Relation {
    let dx = target.x - reference.x;
    let dy = target.y - reference.y;
    if dx >= 0.0 && dy > 0.0 {
        Star4Relation::NE
    } else if dx < 0.0 && dy >= 0.0 {
        Star4Relation::NW
    } else if dx <= 0.0 && dy < 0.0 {
        Star4Relation::SW
    } else if dx > 0.0 && dy <= 0.0 {
        Star4Relation::SE
    } else {
        Star4Relation::NE
    }
}

/// Relations that can be re-expressed for the swapped object pair.
pub trait Converse: Sized {
    fn converse(self) -> Self;
}

impl Converse for AllenRelation {
    fn converse(self) -> Self {
        AllenRelation::converse(self)
    }
}

impl Converse for RaRelation {
    fn converse(self) -> Self {
        RaRelation {
            x: self.x.converse(),
            y: self.y.converse(),
        }
    }
}

impl Converse for QtcbRelation {
    fn converse(self) -> Self {
        QtcbRelation {
            a: self.b,
            b: self.a,
        }
    }
}

impl Converse for QdcRelation {
    fn converse(self) -> Self {
        self
    }
}

impl Converse for Star4Relation {
    fn converse(self) -> Self {
        Star4Relation::converse(self)
    }
}

/// Per-frame edge label, ordered RA, QTC_b, QDC, STAR_4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationTuple {
    pub ra: RaRelation,
    pub qtcb: QtcbRelation,
    pub qdc: QdcRelation,
    pub star4: Star4Relation,
}

impl Converse for RelationTuple {
    fn converse(self) -> Self {
        RelationTuple {
            ra: self.ra.converse(),
            qtcb: self.qtcb.converse(),
            qdc: self.qdc.converse(),
            star4: self.star4.converse(),
        }
    }
}

impl RelationTuple {
    /// Compact text form, e.g. `Before,Equals | Towards,Stable | medium | NE`.
    pub fn label(&self, band_names: &[String]) -> String {
        format!(
            "{},{} | {},{} | {} | {}",
            self.ra.x,
            self.ra.y,
            self.qtcb.a,
            self.qtcb.b,
            band_names
                .get(self.qdc.band_index())
                .map(String::as_str)
                .unwrap_or("?"),
            self.star4
        )
    }
}

/// Relations between `a` and `b` in the current frame. QTC_b is `(Unknown, Unknown)`
/// unless both previous boxes are known.
pub fn relation_tuple(
    a_prev: Option<&BBox2D>,
    a_cur: &BBox2D,
    b_prev: Option<&BBox2D>,
    b_cur: &BBox2D,
    cfg: &CalculiConfig,
) -> RelationTuple {
    let ca = a_cur.center();
    let cb = b_cur.center();
    let qtcb = match (a_prev, b_prev) {
        (Some(ap), Some(bp)) => qtcb_relation(ap.center(), ca, bp.center(), cb, cfg),
        _ => QtcbRelation::UNKNOWN,
    };
    RelationTuple {
        ra: ra_relation(a_cur, b_cur),
        qtcb,
        qdc: qdc_relation(ca, cb, cfg),
        star4: star4_relation(ca, cb),
    }
}

/// Serialized form of one frame's relations, used by graph export and explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub frame: u32,
    pub ra: [AllenRelation; 2],
    pub qtcb: [QtcMotion; 2],
    pub qdc: String,
    pub star4: Star4Relation,
}

impl RelationRecord {
    pub fn new(frame: u32, tuple: &RelationTuple, band_names: &[String]) -> Self {
        Self {
            frame,
            ra: [tuple.ra.x, tuple.ra.y],
            qtcb: [tuple.qtcb.a, tuple.qtcb.b],
            qdc: band_names[tuple.qdc.band_index()].clone(),
            star4: tuple.star4,
        }
    }

    pub fn to_tuple(&self, band_names: &[String]) -> Result<RelationTuple, CalculiError> {
        let band = band_names
            .iter()
            .position(|name| *name == self.qdc)
            .ok_or_else(|| CalculiError::UnknownSymbol {
                kind: "QDC",
                symbol: self.qdc.clone(),
            })?;
        Ok(RelationTuple {
            ra: RaRelation::new(self.ra[0], self.ra[1]),
            qtcb: QtcbRelation::new(self.qtcb[0], self.qtcb[1]),
            qdc: QdcRelation(band as u8),
            star4: self.star4,
        })
    }
}

/// Thresholds for the metric-to-qualitative abstraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCalculiConfig")]
pub struct CalculiConfig {
    qdc_band_edges: Vec<f64>,
    qdc_band_names: Vec<String>,
    qtc_epsilon: f64,
}

#[derive(Deserialize)]
struct RawCalculiConfig {
    #[serde(default = "default_band_edges")]
    qdc_band_edges: Vec<f64>,
    #[serde(default = "default_band_names")]
    qdc_band_names: Vec<String>,
    #[serde(default = "default_qtc_epsilon")]
    qtc_epsilon: f64,
}

impl TryFrom<RawCalculiConfig> for CalculiConfig {
    type Error = CalculiError;

    fn try_from(raw: RawCalculiConfig) -> Result<Self, Self::Error> {
        CalculiConfig::new(raw.qdc_band_edges, raw.qdc_band_names, raw.qtc_epsilon)
    }
}

fn default_band_edges() -> Vec<f64> {
    vec![1.0, 5.0, 15.0, 50.0]
}

fn default_band_names() -> Vec<String> {
    ["adjacent", "near", "medium", "far", "very_far"]
        .into_iter()
        .map(String::from)
        .collect()
}

fn default_qtc_epsilon() -> f64 {
    0.05
}

/// Upper bound on band count; band indices are stored in a byte.
pub const MAX_QDC_BANDS: usize = 64;

impl CalculiConfig {
    pub fn new(
        qdc_band_edges: Vec<f64>,
        qdc_band_names: Vec<String>,
        qtc_epsilon: f64,
    ) -> Result<Self, CalculiError> {
        let invalid = |msg: String| Err(CalculiError::InvalidConfig(msg));
        if qdc_band_names.len() != qdc_band_edges.len() + 1 {
            return invalid(format!(
                "{} band edges need {} band names, got {}",
                qdc_band_edges.len(),
                qdc_band_edges.len() + 1,
                qdc_band_names.len()
            ));
        }
        if qdc_band_names.len() > MAX_QDC_BANDS {
            return invalid(format!("at most {MAX_QDC_BANDS} distance bands are supported"));
        }
        if qdc_band_edges.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return invalid("band edges must be finite and positive".into());
        }
        if qdc_band_edges.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("band edges must be strictly ascending".into());
        }
        for (i, name) in qdc_band_names.iter().enumerate() {
            if name.is_empty() {
                return invalid("band names must be non-empty".into());
            }
            if qdc_band_names[..i].contains(name) {
                return invalid(format!("duplicate band name `{name}`"));
            }
        }
        if !qtc_epsilon.is_finite() || qtc_epsilon < 0.0 {
            return invalid("qtc_epsilon must be finite and >= 0".into());
        }
        Ok(Self {
            qdc_band_edges,
            qdc_band_names,
            qtc_epsilon,
        })
    }

    pub fn qdc_band_edges(&self) -> &[f64] {
        &self.qdc_band_edges
    }

    pub fn qdc_band_names(&self) -> &[String] {
        &self.qdc_band_names
    }

    pub fn qdc_band_count(&self) -> usize {
        self.qdc_band_names.len()
    }

    pub fn qtc_epsilon(&self) -> f64 {
        self.qtc_epsilon
    }

    pub fn with_qtc_epsilon(mut self, epsilon: f64) -> Result<Self, CalculiError> {
        self.qtc_epsilon = epsilon;
        Self::new(self.qdc_band_edges, self.qdc_band_names, self.qtc_epsilon)
    }

    /// All band values for this configuration.
    pub fn qdc_values(&self) -> impl Iterator<Item = QdcRelation> {
        (0..self.qdc_band_count()).map(|i| QdcRelation(i as u8))
    }
}

impl Default for CalculiConfig {
    fn default() -> Self {
        Self {
            qdc_band_edges: default_band_edges(),
            qdc_band_names: default_band_names(),
            qtc_epsilon: default_qtc_epsilon(),
        }
    }
}
