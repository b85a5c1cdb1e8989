//! Scalar summaries of a trace and ratio comparisons between runs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::run::{Trace, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsOptions {
    /// Lead-wheel offset counted as reached [m].
    pub eps_reach: f64,
    /// Centred moving-average window for the oscillation measure [s].
    pub oscillation_window: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            eps_reach: 0.05,
            oscillation_window: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub name: String,
    pub reached: bool,
    pub diverged: bool,
    /// First time after which `|e_l|` stays below the tolerance; the end of
    /// the trace when the run never settled.
    pub t_reach: f64,
    /// Rear-axle arc length at `t_reach`.
    pub reach_distance: f64,
    /// Statistics over `t >= t_reach`, or over the whole trace when the run
    /// never settled.
    ///
    /// The lead-wheel maximum starts at the first path crossing after
    /// `t_reach`; right at `t_reach` the offset equals the tolerance by
    /// construction.
    pub max_e_l_post: f64,
    pub max_e: f64,
    pub max_e_f: f64,
    pub std_ddelta: f64,
    pub std_dddelta: f64,
    pub max_abs_ddelta: f64,
    pub max_abs_dddelta: f64,
    /// RMS of the steering angle about its moving average.
    pub steering_oscillation: f64,
}

impl MetricsRecord {
    /// Values compared by [`radar_compare`], in [`RADAR_AXES`] order.
    pub fn radar_values(&self) -> [f64; 5] {
        [
            self.t_reach,
            self.reach_distance,
            self.max_e_l_post,
            self.std_ddelta,
            self.std_dddelta,
        ]
    }
}

pub const RADAR_AXES: [&str; 5] = [
    "t_reach",
    "reach_distance",
    "max_e_l_post",
    "std_ddelta",
    "std_dddelta",
];

/// Population mean and standard deviation.
fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(f64::abs).fold(0.0, f64::max)
}

/// RMS deviation of the steering angle from its centred moving average.
pub fn steering_oscillation(rows: &[TraceRow], window: f64) -> f64 {
    if rows.len() < 3 {
        return 0.0;
    }
    let dt = (rows[rows.len() - 1].t - rows[0].t) / (rows.len() - 1) as f64;
    let half = ((0.5 * window / dt).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(rows.len() + 1);
    prefix.push(0.0);
    for r in rows {
        prefix.push(prefix.last().unwrap() + r.delta);
    }
    let n = rows.len();
    let mut acc = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let avg = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        acc += (r.delta - avg).powi(2);
    }
    (acc / n as f64).sqrt()
}

pub fn compute_metrics(trace: &Trace, opts: &MetricsOptions) -> MetricsRecord {
    let rows = &trace.rows;
    let diverged = trace.diverged();
    let last_bad = rows.iter().rposition(|r| !(r.e_l.abs() < opts.eps_reach));
    let reach_idx = match last_bad {
        _ if diverged || rows.is_empty() => None,
        None => Some(0),
        Some(i) if i + 1 < rows.len() => Some(i + 1),
        Some(_) => None,
    };
    let (t_reach, reach_distance, post) = match (reach_idx, rows.last()) {
        (Some(i), _) => (rows[i].t, rows[i].s, &rows[i..]),
        (None, Some(last)) => (last.t, last.s, &rows[..]),
        (None, None) => (0.0, 0.0, &rows[..]),
    };
    let settled = match post.first() {
        Some(first) => {
            let side = first.e_l.signum();
            let k = post.iter().position(|r| r.e_l * side <= 0.0).unwrap_or(0);
            &post[k..]
        }
        None => post,
    };
    MetricsRecord {
        name: trace.name.clone(),
        reached: reach_idx.is_some(),
        diverged,
        t_reach,
        reach_distance,
        max_e_l_post: max_abs(settled.iter().map(|r| r.e_l)),
        max_e: max_abs(post.iter().map(|r| r.e)),
        max_e_f: max_abs(post.iter().map(|r| r.e_f)),
        std_ddelta: mean_std(post.iter().map(|r| r.ddelta_dt)).1,
        std_dddelta: mean_std(post.iter().map(|r| r.dddelta_dt)).1,
        max_abs_ddelta: max_abs(rows.iter().map(|r| r.ddelta_dt)),
        max_abs_dddelta: max_abs(rows.iter().map(|r| r.dddelta_dt)),
        steering_oscillation: steering_oscillation(post, opts.oscillation_window),
    }
}

pub fn write_metrics_csv(records: &[MetricsRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Metric ratios of every record to a baseline record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub axes: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl ComparisonTable {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["name".to_string()];
        header.extend(self.axes.iter().cloned());
        w.write_record(&header)?;
        for (name, ratios) in &self.rows {
            let mut rec = vec![name.clone()];
            rec.extend(ratios.iter().map(|r| r.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ratio(x: f64, base: f64) -> f64 {
    if x == base || (x.is_nan() && base.is_nan()) {
        1.0
    } else {
        x / base
    }
}

/// Ratios of each record's metrics to `records[baseline]`.
pub fn radar_compare(records: &[MetricsRecord], baseline: usize) -> Result<ComparisonTable> {
    if records.len() < 2 {
        return Err(Error::invalid("comparison needs at least two records"));
    }
    let base = records
        .get(baseline)
        .ok_or_else(|| Error::invalid("baseline index out of range"))?;
    let bv = base.radar_values();
    Ok(ComparisonTable {
        baseline: base.name.clone(),
        axes: RADAR_AXES.iter().map(|s| s.to_string()).collect(),
        rows: records
            .iter()
            .map(|r| {
                let v = r.radar_values();
                (
                    r.name.clone(),
                    v.iter().zip(&bv).map(|(&x, &b)| ratio(x, b)).collect(),
                )
            })
            .collect(),
    })
}
