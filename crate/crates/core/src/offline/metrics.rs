use std::fmt::Write as _;
use std::time::Instant;

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub stage: String,
    pub step: usize,
    pub loss: f64,
    pub val_loss: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct MetricsLog {
    pub rows: Vec<MetricRow>,
    start: Instant,
}

impl Default for MetricsLog {
    fn default() -> Self {
        Self { rows: Vec::new(), start: Instant::now() }
    }
}

impl MetricsLog {
    pub fn push(&mut self, stage: &str, step: usize, loss: f64, val_loss: Option<f64>) {
        let wall_ms = self.start.elapsed().as_secs_f64() * 1e3;
        self.rows.push(MetricRow { stage: stage.to_string(), step, loss, val_loss, wall_ms });
    }

    pub fn extend(&mut self, other: MetricsLog) {
        self.rows.extend(other.rows);
    }

    /// CSV with header `stage,step,loss,val-loss,wall-ms`. Without
    /// `timings` the wall-clock column is left empty so the file is a pure
    /// function of the inputs.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("stage,step,loss,val-loss,wall-ms\n");
        for r in &self.rows {
            let val = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
            let wall = if timings { format!("{:.3}", r.wall_ms) } else { String::new() };
            let _ = writeln!(out, "{},{},{},{},{}", r.stage, r.step, r.loss, val, wall);
        }
        out
    }
}
