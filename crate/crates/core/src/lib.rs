//! Panoptic segmentation evaluation with condition-weighted scoring.
//!
//! The crate turns ground-truth and predicted panoptic label maps into
//! PQ/SQ/RQ scores, pools them per weather / time-of-day condition, and
//! aggregates the condition scores into weighted wPQ/wSQ/wRQ used to rank
//! challenge submissions.
//!
//! * [`labels`]: PNG + JSON label maps, class taxonomy, scene manifests
//! * [`matching`]: contingency tables and the IoU > 0.5 segment matching
//! * [`metrics`]: per-class, per-condition, marginal and weighted scores
//! * [`oracle`]: brute-force reference path and synthetic scene generator
//! * [`harness`]: submission validation, quotas, event log, leaderboard
//! * [`evaluate`]: the end-to-end dataset evaluation pipeline
//! * [`render`]: markdown / CSV / JSON output for reports and leaderboards
//! * [`dataset`]: on-disk layout of synthetic ground truth and predictions

pub mod condition;
pub mod dataset;
pub mod evaluate;
pub mod harness;
pub mod labels;
pub mod matching;
pub mod metrics;
pub mod oracle;
pub mod render;

pub use condition::{ConditionTag, TimeOfDay, Weather};
