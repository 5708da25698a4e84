//! Qualitative explainable scene graphs (QXG).
//!
//! The pipeline turns object traces into qualitative spatio-temporal graphs and
//! explains an actor's action by ranking the object pairs whose recent relation
//! chains a per-action tree ensemble finds most indicative of it.
//!
//! - [`calculi`]: RA, QTC_b, QDC and STAR_4 relations.
//! - [`scene`]: trace data model and the JSON Lines trace format.
//! - [`builder`]: incremental graph construction and export.
//! - [`explainer`]: chain encoding, one-vs-all forests, ranking and metrics.
//! - [`synthgen`]: scripted scenarios with planted causes.
//! - [`bench`]: per-frame construction timing.

pub mod bench;
pub mod builder;
pub mod calculi;
pub mod explainer;
pub mod scene;
pub mod synthgen;

pub use builder::{build, Builder, BuilderStats, Qxg};
pub use calculi::{CalculiConfig, RelationTuple};
pub use scene::{ActionAnnotation, Scene, Trace};
