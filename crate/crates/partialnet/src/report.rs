//! Byte-stable CSV and JSON emission for experiment results.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::GridResult;

/// Summary CSV: one row per (cell, metric), cells in grid order.
/// `reps` is the number of replicates the mean used; `failures` counts
/// replicates the cell excluded.
pub fn grid_csv(result: &GridResult) -> String {
    let mut out = String::from("model,n,q_rule,q_value,metric,mean,stderr,reps,failures\n");
    for cell in &result.cells {
        for metric in &cell.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cell.model,
                cell.n,
                cell.q_rule,
                format_float(cell.q_value),
                metric.metric,
                format_float(metric.mean),
                format_float(metric.stderr),
                metric.count,
                cell.failures
            );
        }
    }
    out
}

/// Shortest round-trip decimal form; stable across runs.
fn format_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

pub fn emit_csv(result: &GridResult, path: &Path) -> Result<()> {
    std::fs::write(path, grid_csv(result)).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with the full raw structure (replicate rows included).
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(value)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_grid, AnchorRule, ExperimentGrid, MetricSet, Model, QRule};

    fn tiny_grid() -> ExperimentGrid {
        ExperimentGrid {
            model: Model::One,
            ns: vec![60],
            qs: vec![QRule::Fixed(0.15)],
            reps: 2,
            seed: 3,
            anchor: AnchorRule::FirstNode,
            metrics: MetricSet::default(),
            restarts: 5,
        }
    }

    #[test]
    fn empty_grid_result_is_header_only() {
        let result = GridResult {
            model: "model1".into(),
            seed: 0,
            reps: 0,
            rows: vec![],
            cells: vec![],
        };
        assert_eq!(
            grid_csv(&result),
            "model,n,q_rule,q_value,metric,mean,stderr,reps,failures\n"
        );
    }

    #[test]
    fn one_cell_grid_has_four_metric_rows() {
        let result = run_grid(&tiny_grid()).unwrap();
        let csv = grid_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 4, "csv was:\n{csv}");
        for metric in [
            "observed_edge_ratio",
            "within_depth_fraction",
            "misclustering_partial",
            "misclustering_full",
        ] {
            assert!(csv.contains(metric), "missing {metric}");
        }
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let a = grid_csv(&run_grid(&tiny_grid()).unwrap());
        let b = grid_csv(&run_grid(&tiny_grid()).unwrap());
        assert_eq!(a, b);
        let json_a = to_json_string(&run_grid(&tiny_grid()).unwrap()).unwrap();
        let json_b = to_json_string(&run_grid(&tiny_grid()).unwrap()).unwrap();
        assert_eq!(json_a, json_b);
    }
}
