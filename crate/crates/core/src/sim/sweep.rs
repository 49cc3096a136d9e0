use serde::Serialize;
use serde_json::Value;

use super::{run_scenario, Metrics};
use crate::config::{set_path, ScenarioConfig, SweepAxis};
use crate::parallel::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Runs `template` once per value along `axis`. Failed runs keep their error
/// message; the sweep itself does not fail.
pub fn sweep(template: &Value, axis: &SweepAxis, values: &[f64], exec: Execution) -> Vec<SweepRow> {
    parallel::map(exec, values, |&value| {
        let result = (|| {
            let mut v = template.clone();
            set_path(&mut v, axis.key(), axis.value(value))?;
            if let Some(obj) = v.as_object_mut() {
                obj.remove("sweep");
            }
            let sc = ScenarioConfig::from_value(v)?.resolve()?;
            run_scenario(sc)
        })();
        match result {
            Ok(out) => SweepRow {
                value,
                metrics: Some(out.metrics),
                error: None,
            },
            Err(e) => SweepRow {
                value,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    })
}
