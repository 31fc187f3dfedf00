use std::path::Path;

use super::report::{metadata_lines, write_file};
use super::{MetricsError, MetricsReport};

/// Baseline and CRNT values of one metric in one second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub baseline: Option<f64>,
    pub crnt: Option<f64>,
}

impl Pair {
    fn of(baseline: f64, crnt: f64) -> Self {
        Self {
            baseline: Some(baseline),
            crnt: Some(crnt),
        }
    }

    pub fn delta(&self) -> Option<f64> {
        Some(self.crnt? - self.baseline?)
    }

    /// `crnt / baseline`; 0/0 counts as 1.
    pub fn ratio(&self) -> Option<f64> {
        let (b, c) = (self.baseline?, self.crnt?);
        Some(if b == 0.0 && c == 0.0 { 1.0 } else { c / b })
    }
}

/// One second of the comparison. Visibility and cars sensed are the
/// network means of each run's full view.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub second: u32,
    pub visibility_m: Pair,
    pub cars_sensed: Pair,
    pub collisions: Pair,
    pub mean_delay_us: Pair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: u32,
    pub rows: Vec<ComparisonRow>,
    pub total_collisions: Pair,
    pub mean_delay_us: Pair,
}

/// Lines up two runs second by second. Both must share scenario, seed and
/// duration, and must have put exactly the same number of frames on the air
/// per vehicle.
pub fn compare_runs(baseline: &MetricsReport, crnt: &MetricsReport) -> Result<Comparison, MetricsError> {
    let (a, b) = (&baseline.meta, &crnt.meta);
    if a.scenario != b.scenario || a.seed != b.seed || a.duration_s != b.duration_s {
        return Err(MetricsError::IncomparableRuns(format!(
            "{}/seed {}/{} s vs {}/seed {}/{} s",
            a.scenario, a.seed, a.duration_s, b.scenario, b.seed, b.duration_s
        )));
    }
    let vehicles = baseline.tx_counts.keys().chain(crnt.tx_counts.keys());
    for &v in vehicles {
        let (x, y) = (
            baseline.tx_counts.get(&v).copied().unwrap_or(0),
            crnt.tx_counts.get(&v).copied().unwrap_or(0),
        );
        if x != y {
            return Err(MetricsError::TransmissionParity {
                vehicle: v,
                baseline: x,
                crnt: y,
            });
        }
    }
    let rows = baseline
        .summary
        .iter()
        .zip(&crnt.summary)
        .zip(baseline.network.iter().zip(&crnt.network))
        .map(|((sb, sc), (nb, nc))| ComparisonRow {
            second: sb.second,
            visibility_m: Pair::of(sb.mean.crnt_m, sc.mean.crnt_m),
            cars_sensed: Pair::of(sb.mean.crnt_count, sc.mean.crnt_count),
            collisions: Pair::of(nb.collisions as f64, nc.collisions as f64),
            mean_delay_us: Pair {
                baseline: nb.mean_delay_us(),
                crnt: nc.mean_delay_us(),
            },
        })
        .collect();
    Ok(Comparison {
        scenario: a.scenario.clone(),
        seed: a.seed,
        duration_s: a.duration_s,
        rows,
        total_collisions: Pair::of(baseline.total_collisions() as f64, crnt.total_collisions() as f64),
        mean_delay_us: Pair {
            baseline: baseline.mean_delay_us(),
            crnt: crnt.mean_delay_us(),
        },
    })
}

const METRICS: [&str; 4] = ["visibility_m", "cars_sensed", "collisions", "mean_delay_us"];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:.3}"),
        None => String::new(),
    }
}

fn pair_cells(p: &Pair) -> [String; 4] {
    [cell(p.baseline), cell(p.crnt), cell(p.delta()), cell(p.ratio())]
}

pub fn render_comparison_csv(cmp: &Comparison, baseline: &MetricsReport) -> Vec<u8> {
    let mut out = Vec::new();
    let mut meta = baseline.meta.clone();
    meta.mode = "compare".into();
    meta.config.retain(|(k, _)| k != "mode");
    metadata_lines(&meta, &mut out);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["second".to_string()];
    for m in METRICS {
        for suffix in ["baseline", "crnt", "delta", "ratio"] {
            header.push(format!("{m}_{suffix}"));
        }
    }
    w.write_record(&header).expect("in-memory write");
    for r in &cmp.rows {
        let mut rec = vec![r.second.to_string()];
        for p in [&r.visibility_m, &r.cars_sensed, &r.collisions, &r.mean_delay_us] {
            rec.extend(pair_cells(p));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    let mut total = vec!["total".to_string()];
    total.extend(std::iter::repeat_n(String::new(), 8));
    total.extend(pair_cells(&cmp.total_collisions));
    total.extend(pair_cells(&cmp.mean_delay_us));
    w.write_record(&total).expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

pub fn emit_comparison_csv(cmp: &Comparison, baseline: &MetricsReport, path: &Path) -> Result<(), MetricsError> {
    write_file(path, &render_comparison_csv(cmp, baseline))
}
