//! Stage timing instrumentation over the monotonic clock.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Wall time of one pipeline stage. The selection stage carries a per-class
/// breakdown whose entries sum to the stage total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<IndexMap<String, f64>>,
}

impl StageTiming {
    pub fn new(stage: &str, seconds: f64) -> Self {
        StageTiming {
            stage: stage.to_string(),
            seconds,
            per_class: None,
        }
    }

    /// Selection timing whose total is defined as the sum of the breakdown.
    pub fn with_breakdown(stage: &str, per_class: IndexMap<String, f64>) -> Self {
        let seconds = per_class.values().sum();
        StageTiming {
            stage: stage.to_string(),
            seconds,
            per_class: Some(per_class),
        }
    }
}

/// Runs `thunk` and reports its wall time as a stage entry.
pub fn time_stage<T>(stage: &str, thunk: impl FnOnce() -> T) -> (T, StageTiming) {
    let start = Instant::now();
    let result = thunk();
    let timing = StageTiming::new(stage, start.elapsed().as_secs_f64());
    (result, timing)
}
