//! Incremental construction of the qualitative explainable graph (QXG).
//!
//! A [`Builder`] consumes frames in index order. For every pair of objects in a
//! frame it computes a [`RelationTuple`] and appends it to the pair's edge, so
//! an edge exists exactly when two objects have been seen together. QTC_b uses
//! each object's last-seen box, which may be several frames old.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculi::{relation_tuple, CalculiConfig, Converse, RelationRecord, RelationTuple};
use crate::scene::{BBox2D, Frame, Scene};

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("frame {index} is not after the last pushed frame {last}")]
    OutOfOrderFrame { index: u32, last: u32 },
    #[error("object `{id}` appears twice in frame {index}")]
    DuplicateObject { index: u32, id: String },
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("invalid graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub class: String,
}

/// Edge between `first < second` (lexicographic), holding relations for that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    first: usize,
    second: usize,
    relations: Vec<(u32, RelationTuple)>,
}

impl Edge {
    /// Relations ascending by frame.
    pub fn relations(&self) -> &[(u32, RelationTuple)] {
        &self.relations
    }
}

/// Per-frame instrumentation returned by [`Builder::push_frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BuilderStats {
    pub frame_index: u32,
    pub objects_in_frame: usize,
    pub pairs_updated: usize,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qxg {
    scene_id: String,
    qdc_bands: Vec<String>,
    nodes: Vec<Node>,
    appearances: Vec<Vec<u32>>,
    adjacency: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl Qxg {
    fn empty(scene_id: String, qdc_bands: Vec<String>) -> Self {
        Self {
            scene_id,
            qdc_bands,
            nodes: Vec::new(),
            appearances: Vec::new(),
            adjacency: Vec::new(),
            node_index: HashMap::new(),
            edges: Vec::new(),
            edge_index: HashMap::new(),
        }
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    /// QDC band names of the configuration that produced the graph.
    pub fn qdc_bands(&self) -> &[String] {
        &self.qdc_bands
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    /// Frames in which `id` was observed, ascending.
    pub fn appearances(&self, id: &str) -> &[u32] {
        self.node_index
            .get(id)
            .map(|&i| self.appearances[i].as_slice())
            .unwrap_or(&[])
    }

    pub fn is_present(&self, id: &str, frame: u32) -> bool {
        self.appearances(id).binary_search(&frame).is_ok()
    }

    /// Edges in insertion order as `(first_id, second_id, relations)`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &[(u32, RelationTuple)])> {
        self.edges.iter().map(|e| {
            (
                self.nodes[e.first].id.as_str(),
                self.nodes[e.second].id.as_str(),
                e.relations.as_slice(),
            )
        })
    }

    /// Stored edge for the unordered pair; `true` when `a` is the stored first object.
    pub fn edge(&self, a: &str, b: &str) -> Option<(&Edge, bool)> {
        let ia = *self.node_index.get(a)?;
        let ib = *self.node_index.get(b)?;
        let key = if a < b { (ia, ib) } else { (ib, ia) };
        self.edge_index
            .get(&key)
            .map(|&e| (&self.edges[e], a < b))
    }

    /// Objects sharing an edge with `id`, with the edge oriented from `id`.
    pub(crate) fn neighbors<'a>(
        &'a self,
        id: &str,
    ) -> impl Iterator<Item = (&'a str, &'a Edge, bool)> + 'a {
        let node = self.node_index.get(id).copied();
        node.into_iter().flat_map(move |n| {
            self.adjacency[n].iter().map(move |&e| {
                let edge = &self.edges[e];
                if edge.first == n {
                    (self.nodes[edge.second].id.as_str(), edge, true)
                } else {
                    (self.nodes[edge.first].id.as_str(), edge, false)
                }
            })
        })
    }

    /// Up to `t` most recent relations on edge `(a, b)` at frames `<= at_frame`,
    /// ascending, expressed with `a` as the first argument.
    pub fn edge_chain(&self, a: &str, b: &str, at_frame: u32, t: usize) -> Vec<(u32, RelationTuple)> {
        let Some((edge, forward)) = self.edge(a, b) else {
            return Vec::new();
        };
        let end = edge.relations.partition_point(|(f, _)| *f <= at_frame);
        let start = end.saturating_sub(t);
        edge.relations[start..end]
            .iter()
            .map(|&(f, r)| (f, if forward { r } else { r.converse() }))
            .collect()
    }

    fn intern(&mut self, id: &str, class: &str) -> usize {
        if let Some(&i) = self.node_index.get(id) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(Node {
            id: id.to_string(),
            class: class.to_string(),
        });
        self.appearances.push(Vec::new());
        self.adjacency.push(Vec::new());
        self.node_index.insert(id.to_string(), i);
        i
    }

    fn edge_slot(&mut self, first: usize, second: usize) -> &mut Vec<(u32, RelationTuple)> {
        let next = self.edges.len();
        let e = *self.edge_index.entry((first, second)).or_insert(next);
        if e == next {
            self.edges.push(Edge {
                first,
                second,
                relations: Vec::new(),
            });
            self.adjacency[first].push(e);
            self.adjacency[second].push(e);
        }
        &mut self.edges[e].relations
    }
}

struct Slot<'f> {
    node: usize,
    id: &'f str,
    cur: BBox2D,
    prev: Option<BBox2D>,
}

/// Single-writer incremental graph builder.
#[derive(Debug, Clone)]
pub struct Builder {
    cfg: CalculiConfig,
    graph: Qxg,
    last_seen: Vec<Option<BBox2D>>,
    last_index: Option<u32>,
    distance_cutoff: Option<f64>,
}

impl Builder {
    pub fn new(cfg: CalculiConfig) -> Self {
        let bands = cfg.qdc_band_names().to_vec();
        Self {
            cfg,
            graph: Qxg::empty(String::new(), bands),
            last_seen: Vec::new(),
            last_index: None,
            distance_cutoff: None,
        }
    }

    pub fn with_scene_id(mut self, scene_id: impl Into<String>) -> Self {
        self.graph.scene_id = scene_id.into();
        self
    }

    /// Skip pairs whose centroids are farther apart than `cutoff` meters.
    /// Off by default; a benchmarking knob only, since it drops edges.
    pub fn with_distance_cutoff(mut self, cutoff: Option<f64>) -> Self {
        self.distance_cutoff = cutoff;
        self
    }

    pub fn config(&self) -> &CalculiConfig {
        &self.cfg
    }

    /// The graph built so far.
    pub fn graph(&self) -> &Qxg {
        &self.graph
    }

    pub fn last_index(&self) -> Option<u32> {
        self.last_index
    }

    pub fn push_frame(&mut self, frame: &Frame) -> Result<BuilderStats, BuildError> {
        let start = Instant::now();
        if let Some(last) = self.last_index {
            if frame.index <= last {
                return Err(BuildError::OutOfOrderFrame {
                    index: frame.index,
                    last,
                });
            }
        }

        let mut order: Vec<usize> = (0..frame.objects.len()).collect();
        order.sort_unstable_by(|&a, &b| frame.objects[a].id.cmp(&frame.objects[b].id));
        if let Some(w) = order
            .windows(2)
            .find(|w| frame.objects[w[0]].id == frame.objects[w[1]].id)
        {
            return Err(BuildError::DuplicateObject {
                index: frame.index,
                id: frame.objects[w[0]].id.clone(),
            });
        }

        let mut slots = Vec::with_capacity(order.len());
        for &i in &order {
            let obj = &frame.objects[i];
            let node = self.graph.intern(&obj.id, &obj.class);
            if node == self.last_seen.len() {
                self.last_seen.push(None);
            }
            slots.push(Slot {
                node,
                id: &obj.id,
                cur: obj.bbox,
                prev: self.last_seen[node],
            });
        }
        debug_assert!(slots.windows(2).all(|w| w[0].id < w[1].id));

        let cutoff = self.distance_cutoff;
        let mut pairs = 0;
        for (i, a) in slots.iter().enumerate() {
            let ca = a.cur.center();
            for b in &slots[i + 1..] {
                if let Some(limit) = cutoff {
                    if ca.distance(b.cur.center()) > limit {
                        continue;
                    }
                }
                let tuple =
                    relation_tuple(a.prev.as_ref(), &a.cur, b.prev.as_ref(), &b.cur, &self.cfg);
                self.graph
                    .edge_slot(a.node, b.node)
                    .push((frame.index, tuple));
                pairs += 1;
            }
        }

        for slot in &slots {
            self.last_seen[slot.node] = Some(slot.cur);
            self.graph.appearances[slot.node].push(frame.index);
        }
        self.last_index = Some(frame.index);

        Ok(BuilderStats {
            frame_index: frame.index,
            objects_in_frame: slots.len(),
            pairs_updated: pairs,
            elapsed_ns: start.elapsed().as_nanos() as u64,
        })
    }

    pub fn finalize(self) -> Qxg {
        self.graph
    }
}

/// Batch construction: folds [`Builder::push_frame`] over the scene.
pub fn build(scene: &Scene, cfg: &CalculiConfig) -> Result<Qxg, BuildError> {
    let mut builder = Builder::new(cfg.clone()).with_scene_id(scene.scene_id.clone());
    for frame in &scene.frames {
        builder.push_frame(frame)?;
    }
    Ok(builder.finalize())
}

/// Builds the graph from frames with index `<= last_frame` only.
pub fn build_until(scene: &Scene, cfg: &CalculiConfig, last_frame: u32) -> Result<Qxg, BuildError> {
    let mut builder = Builder::new(cfg.clone()).with_scene_id(scene.scene_id.clone());
    for frame in scene.frames.iter().take_while(|f| f.index <= last_frame) {
        builder.push_frame(frame)?;
    }
    Ok(builder.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

pub fn export_graph(qxg: &Qxg, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Json => export_json(qxg).into_bytes(),
        ExportFormat::Dot => export_dot(qxg).into_bytes(),
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    scene_id: String,
    qdc_bands: Vec<String>,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    class: String,
    #[serde(default)]
    frames: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    a: String,
    b: String,
    relations: Vec<RelationRecord>,
}

pub fn export_json(qxg: &Qxg) -> String {
    let doc = GraphDoc {
        scene_id: qxg.scene_id.clone(),
        qdc_bands: qxg.qdc_bands.clone(),
        nodes: qxg
            .nodes
            .iter()
            .zip(&qxg.appearances)
            .map(|(n, frames)| NodeDoc {
                id: n.id.clone(),
                class: n.class.clone(),
                frames: frames.clone(),
            })
            .collect(),
        edges: qxg
            .edges
            .iter()
            .map(|e| EdgeDoc {
                a: qxg.nodes[e.first].id.clone(),
                b: qxg.nodes[e.second].id.clone(),
                relations: e
                    .relations
                    .iter()
                    .map(|(f, r)| RelationRecord::new(*f, r, &qxg.qdc_bands))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("graph serialization is infallible")
}

pub fn import_json(text: &str) -> Result<Qxg, ImportError> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    let invalid = |msg: String| Err(ImportError::Invalid(msg));
    let mut g = Qxg::empty(doc.scene_id, doc.qdc_bands);
    for node in doc.nodes {
        if g.node_index.contains_key(&node.id) {
            return invalid(format!("duplicate node `{}`", node.id));
        }
        if node.frames.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("frames of node `{}` are not ascending", node.id));
        }
        let i = g.intern(&node.id, &node.class);
        g.appearances[i] = node.frames;
    }
    for edge in doc.edges {
        if edge.a >= edge.b {
            return invalid(format!("edge ({}, {}) is not in canonical order", edge.a, edge.b));
        }
        let (Some(&ia), Some(&ib)) = (g.node_index.get(&edge.a), g.node_index.get(&edge.b)) else {
            return invalid(format!("edge ({}, {}) references an unknown node", edge.a, edge.b));
        };
        if g.edge_index.contains_key(&(ia, ib)) {
            return invalid(format!("duplicate edge ({}, {})", edge.a, edge.b));
        }
        if edge.relations.windows(2).any(|w| w[0].frame >= w[1].frame) {
            return invalid(format!("relations of ({}, {}) are not ascending", edge.a, edge.b));
        }
        let relations = edge
            .relations
            .iter()
            .map(|r| r.to_tuple(&g.qdc_bands).map(|t| (r.frame, t)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ImportError::Invalid(e.to_string()))?;
        *g.edge_slot(ia, ib) = relations;
    }
    Ok(g)
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering; edges are labelled with the most recent relation tuple.
pub fn export_dot(qxg: &Qxg) -> String {
    let mut out = String::new();
    out.push_str(&format!("graph {} {{\n", dot_quote(&qxg.scene_id)));
    for node in &qxg.nodes {
        out.push_str(&format!(
            "  {} [label={}];\n",
            dot_quote(&node.id),
            dot_quote(&format!("{}\n{}", node.id, node.class))
        ));
    }
    for edge in &qxg.edges {
        let Some((frame, tuple)) = edge.relations.last() else {
            continue;
        };
        out.push_str(&format!(
            "  {} -- {} [label={}];\n",
            dot_quote(&qxg.nodes[edge.first].id),
            dot_quote(&qxg.nodes[edge.second].id),
            dot_quote(&format!("f{frame}: {}", tuple.label(&qxg.qdc_bands)))
        ));
    }
    out.push_str("}\n");
    out
}
