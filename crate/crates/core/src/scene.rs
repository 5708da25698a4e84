//! Scene traces: frames of bird's-eye-view boxes plus action annotations.
//!
//! The on-disk form is JSON Lines, one record per line:
//!
//! ```text
//! {"type":"header","scene_id":"s1","version":1}
//! {"type":"frame","index":0,"timestamp":0.0,"objects":[{"id":"ego","class":"car","bbox":{"x":[0,2],"y":[0,4]}}]}
//! {"type":"action","frame":0,"actor":"ego","action":"Stopping"}
//! {"type":"cause","frame":0,"actor":"ego","cause":"ped-1"}
//! ```

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculi::{CalculiError, Interval};

pub const TRACE_VERSION: u32 = 1;

/// Cause value used when an action has no planted cause.
pub const NO_CAUSE: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned box in the BEV plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x: Interval,
    pub y: Interval,
}

impl BBox2D {
    pub fn new(x: Interval, y: Interval) -> Self {
        Self { x, y }
    }

    pub fn from_center(center: Point2D, width: f64, length: f64) -> Result<Self, CalculiError> {
        Ok(Self {
            x: Interval::centered(center.x, width)?,
            y: Interval::centered(center.y, length)?,
        })
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(self.x.midpoint(), self.y.midpoint())
    }

    pub fn area(&self) -> f64 {
        self.x.width() * self.y.width()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x.shifted(dx),
            y: self.y.shifted(dy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    pub class: String,
    pub bbox: BBox2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: u32,
    pub timestamp: f64,
    pub objects: Vec<ObjectState>,
}

impl Frame {
    pub fn object(&self, id: &str) -> Option<&ObjectState> {
        self.objects.iter().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub frames: Vec<Frame>,
}

impl Scene {
    pub fn frame(&self, index: u32) -> Option<&Frame> {
        self.frames
            .binary_search_by_key(&index, |f| f.index)
            .ok()
            .map(|i| &self.frames[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionAnnotation {
    pub scene_id: String,
    pub frame_index: u32,
    pub actor_id: String,
    pub action: String,
}

/// Ground-truth cause emitted by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseAnnotation {
    pub frame_index: u32,
    pub actor_id: String,
    /// `None` for actions without a planted cause.
    pub cause_id: Option<String>,
    /// Closest non-causal object, kept for bookkeeping when `cause_id` is `None`.
    pub nearest: Option<String>,
}

/// A parsed trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scene: Scene,
    pub actions: Vec<ActionAnnotation>,
    pub causes: Vec<CauseAnnotation>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: malformed JSON: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("{}schema violation in `{field}`: {reason}", line_prefix(*.line))]
    SchemaViolation {
        line: Option<usize>,
        field: String,
        reason: String,
    },
    #[error("ordering violation at frame {frame}: {reason}")]
    OrderingViolation { frame: u32, reason: String },
    #[error("line {line}: dangling annotation: {reason}")]
    DanglingAnnotation { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    EmptyScene,
    DuplicateObjectId,
    NonIncreasingIndex,
    DecreasingTimestamp,
    NonFiniteTimestamp,
}

impl Rule {
    pub fn is_ordering(self) -> bool {
        matches!(self, Rule::NonIncreasingIndex | Rule::DecreasingTimestamp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub frame: Option<u32>,
    pub object: Option<String>,
    pub rule: Rule,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.rule)?;
        if let Some(frame) = self.frame {
            write!(f, " at frame {frame}")?;
        }
        if let Some(object) = &self.object {
            write!(f, " (object `{object}`)")?;
        }
        Ok(())
    }
}

/// Checks every scene and frame invariant. An empty result means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    if scene.frames.is_empty() {
        out.push(Violation {
            frame: None,
            object: None,
            rule: Rule::EmptyScene,
        });
    }
    let mut prev: Option<&Frame> = None;
    for frame in &scene.frames {
        if !frame.timestamp.is_finite() {
            out.push(Violation {
                frame: Some(frame.index),
                object: None,
                rule: Rule::NonFiniteTimestamp,
            });
        }
        if let Some(p) = prev {
            if frame.index <= p.index {
                out.push(Violation {
                    frame: Some(frame.index),
                    object: None,
                    rule: Rule::NonIncreasingIndex,
                });
            }
            if frame.timestamp < p.timestamp {
                out.push(Violation {
                    frame: Some(frame.index),
                    object: None,
                    rule: Rule::DecreasingTimestamp,
                });
            }
        }
        let mut seen = HashSet::with_capacity(frame.objects.len());
        for obj in &frame.objects {
            if !seen.insert(obj.id.as_str()) {
                out.push(Violation {
                    frame: Some(frame.index),
                    object: Some(obj.id.clone()),
                    rule: Rule::DuplicateObjectId,
                });
            }
        }
        prev = Some(frame);
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header {
        scene_id: String,
        version: u32,
    },
    Frame {
        index: u32,
        timestamp: f64,
        objects: Vec<ObjectState>,
    },
    Action {
        frame: u32,
        actor: String,
        action: String,
    },
    Cause {
        frame: u32,
        actor: String,
        cause: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nearest: Option<String>,
    },
}

/// Parses and validates a JSON Lines trace. Blank lines are ignored.
pub fn parse_trace<R: BufRead>(input: R) -> Result<Trace, TraceError> {
    let mut header: Option<String> = None;
    let mut frames = Vec::new();
    let mut actions = Vec::new();
    let mut causes = Vec::new();

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| TraceError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let kind = value
            .get("type")
            .and_then(|t| t.as_str())
            .unwrap_or("<missing>")
            .to_string();
        let record: Line =
            serde_json::from_value(value).map_err(|e| TraceError::SchemaViolation {
                line: Some(line_no),
                field: kind.clone(),
                reason: e.to_string(),
            })?;
        match (record, header.is_some()) {
            (Line::Header { scene_id, version }, false) => {
                if version != TRACE_VERSION {
                    return Err(TraceError::SchemaViolation {
                        line: Some(line_no),
                        field: "version".into(),
                        reason: format!("unsupported trace version {version}"),
                    });
                }
                header = Some(scene_id);
            }
            (Line::Header { .. }, true) => {
                return Err(TraceError::SchemaViolation {
                    line: Some(line_no),
                    field: "header".into(),
                    reason: "duplicate header".into(),
                })
            }
            (_, false) => {
                return Err(TraceError::SchemaViolation {
                    line: Some(line_no),
                    field: "header".into(),
                    reason: "first record must be the header".into(),
                })
            }
            (
                Line::Frame {
                    index,
                    timestamp,
                    objects,
                },
                true,
            ) => frames.push(Frame {
                index,
                timestamp,
                objects,
            }),
            (
                Line::Action {
                    frame,
                    actor,
                    action,
                },
                true,
            ) => actions.push((line_no, frame, actor, action)),
            (
                Line::Cause {
                    frame,
                    actor,
                    cause,
                    nearest,
                },
                true,
            ) => causes.push((line_no, frame, actor, cause, nearest)),
        }
    }

    let scene_id = header.ok_or_else(|| TraceError::SchemaViolation {
        line: None,
        field: "frames".into(),
        reason: "scene must be nonempty".into(),
    })?;
    let scene = Scene { scene_id, frames };

    if let Some(v) = validate_scene(&scene).into_iter().next() {
        return Err(match v.rule {
            Rule::EmptyScene => TraceError::SchemaViolation {
                line: None,
                field: "frames".into(),
                reason: "scene must be nonempty".into(),
            },
            Rule::NonIncreasingIndex => TraceError::OrderingViolation {
                frame: v.frame.unwrap_or_default(),
                reason: "frame indices must be strictly increasing".into(),
            },
            Rule::DecreasingTimestamp => TraceError::OrderingViolation {
                frame: v.frame.unwrap_or_default(),
                reason: "timestamps must be nondecreasing".into(),
            },
            Rule::DuplicateObjectId => TraceError::SchemaViolation {
                line: None,
                field: "objects".into(),
                reason: v.to_string(),
            },
            Rule::NonFiniteTimestamp => TraceError::SchemaViolation {
                line: None,
                field: "timestamp".into(),
                reason: v.to_string(),
            },
        });
    }

    let check_present = |line: usize, frame: u32, id: &str, role: &str| {
        let f = scene.frame(frame).ok_or_else(|| TraceError::DanglingAnnotation {
            line,
            reason: format!("frame {frame} does not exist"),
        })?;
        if f.object(id).is_none() {
            return Err(TraceError::DanglingAnnotation {
                line,
                reason: format!("{role} `{id}` is not present in frame {frame}"),
            });
        }
        Ok(())
    };

    let actions = actions
        .into_iter()
        .map(|(line, frame, actor, action)| {
            check_present(line, frame, &actor, "actor")?;
            Ok(ActionAnnotation {
                scene_id: scene.scene_id.clone(),
                frame_index: frame,
                actor_id: actor,
                action,
            })
        })
        .collect::<Result<Vec<_>, TraceError>>()?;

    let causes = causes
        .into_iter()
        .map(|(line, frame, actor, cause, nearest)| {
            check_present(line, frame, &actor, "actor")?;
            let cause_id = if cause == NO_CAUSE {
                None
            } else {
                check_present(line, frame, &cause, "cause")?;
                Some(cause)
            };
            Ok(CauseAnnotation {
                frame_index: frame,
                actor_id: actor,
                cause_id,
                nearest,
            })
        })
        .collect::<Result<Vec<_>, TraceError>>()?;

    Ok(Trace {
        scene,
        actions,
        causes,
    })
}

pub fn parse_trace_str(input: &str) -> Result<Trace, TraceError> {
    parse_trace(input.as_bytes())
}

/// Writes the header, every frame, then actions and causes in stored order.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> std::io::Result<()> {
    let mut emit = |line: &Line| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")
    };
    emit(&Line::Header {
        scene_id: trace.scene.scene_id.clone(),
        version: TRACE_VERSION,
    })?;
    for frame in &trace.scene.frames {
        emit(&Line::Frame {
            index: frame.index,
            timestamp: frame.timestamp,
            objects: frame.objects.clone(),
        })?;
    }
    for a in &trace.actions {
        emit(&Line::Action {
            frame: a.frame_index,
            actor: a.actor_id.clone(),
            action: a.action.clone(),
        })?;
    }
    for c in &trace.causes {
        emit(&Line::Cause {
            frame: c.frame_index,
            actor: c.actor_id.clone(),
            cause: c.cause_id.clone().unwrap_or_else(|| NO_CAUSE.to_string()),
            nearest: c.nearest.clone(),
        })?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
