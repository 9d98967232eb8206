use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MapAtIou;

/// Evaluation summary. Every part is optional so partial reports from
/// separate runs can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// AN (as written by [`key`]) → average recall.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ar_at_an: BTreeMap<String, f64>,
    /// IoU threshold (as written by [`key`]) → mAP.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub map_at_iou: BTreeMap<String, f64>,
    /// `[detected, total]` incomplete instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomplete_detected: Option<[usize; 2]>,
}

/// Map key of a threshold or budget: shortest exact decimal form.
pub fn key(value: f64) -> String {
    format!("{value}")
}

fn sort_numeric(map: &BTreeMap<String, f64>) -> Vec<(&String, f64)> {
    let mut items: Vec<_> = map.iter().map(|(k, &v)| (k, v)).collect();
    items.sort_by(|a, b| {
        let x: f64 = a.0.parse().unwrap_or(f64::NAN);
        let y: f64 = b.0.parse().unwrap_or(f64::NAN);
        x.total_cmp(&y).then(a.0.cmp(b.0))
    });
    items
}

impl EvalReport {
    pub fn with_map(mut self, results: &[MapAtIou]) -> Self {
        for r in results {
            self.map_at_iou.insert(key(r.iou), r.map);
        }
        self
    }

    pub fn with_recall(mut self, results: &[(f64, f64)]) -> Self {
        for &(an, ar) in results {
            self.ar_at_an.insert(key(an), ar);
        }
        self
    }

    /// Fold `other` into `self`; values present in `other` win.
    pub fn merge(&mut self, other: EvalReport) {
        if other.mae.is_some() {
            self.mae = other.mae;
        }
        if other.accuracy.is_some() {
            self.accuracy = other.accuracy;
        }
        if other.incomplete_detected.is_some() {
            self.incomplete_detected = other.incomplete_detected;
        }
        self.ar_at_an.extend(other.ar_at_an);
        self.map_at_iou.extend(other.map_at_iou);
    }

    pub fn is_finite(&self) -> bool {
        self.mae.map_or(true, f64::is_finite)
            && self.accuracy.map_or(true, f64::is_finite)
            && self.ar_at_an.values().all(|v| v.is_finite())
            && self.map_at_iou.values().all(|v| v.is_finite())
    }

    /// Two-column plain-text table.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        if let Some(m) = self.mae {
            rows.push(("MAE".into(), format!("{m:.2}")));
        }
        if let Some(a) = self.accuracy {
            rows.push(("Acc.".into(), format!("{:.2}%", 100.0 * a)));
        }
        for (an, ar) in sort_numeric(&self.ar_at_an) {
            rows.push((format!("AR@{an}"), format!("{:.2}%", 100.0 * ar)));
        }
        for (iou, map) in sort_numeric(&self.map_at_iou) {
            rows.push((format!("mAP@{iou}"), format!("{:.2}%", 100.0 * map)));
        }
        if let Some([d, t]) = self.incomplete_detected {
            rows.push(("incomplete detected".into(), format!("{d}/{t}")));
        }
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}", "metric", "value");
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<width$}  {value:>10}");
        }
        out
    }
}
