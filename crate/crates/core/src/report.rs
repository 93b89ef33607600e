//! Result persistence: summary JSON, per-instance and per-test-set CSV
//! tables, and self-contained SVG box plots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, InstanceRecord};

/// Five-number summary with linear-interpolation quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Quantile of a sorted slice, `h = (n - 1) p` with linear interpolation.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<BoxStats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(BoxStats {
            count: sorted.len(),
            min: sorted[0],
            q25: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }

    fn to_json(&self) -> Value {
        json!({
            "count": self.count,
            "min": self.min,
            "q25": self.q25,
            "median": self.median,
            "q75": self.q75,
            "max": self.max,
        })
    }
}

fn successes(result: &ExperimentResult) -> impl Iterator<Item = &InstanceRecord> {
    result.records.iter().filter(|r| r.failure.is_none())
}

/// Gains of all test sets of all successful instances with this `w`;
/// undefined gains (greedy earned nothing) are counted separately.
fn gains_for_w(result: &ExperimentResult, w: f64) -> (Vec<f64>, usize) {
    let mut gains = Vec::new();
    let mut undefined = 0;
    for record in successes(result).filter(|r| r.w == w) {
        for t in &record.tests {
            match t.gain {
                Some(g) => gains.push(g),
                None => undefined += 1,
            }
        }
    }
    (gains, undefined)
}

fn per_w_summary(result: &ExperimentResult) -> Vec<(f64, Value)> {
    result
        .config
        .w_values
        .iter()
        .map(|&w| {
            let ratios: Vec<f64> = successes(result)
                .filter(|r| r.w == w)
                .map(|r| r.ratio_estimate)
                .collect();
            let best_ratios: Vec<f64> = successes(result)
                .filter(|r| r.w == w)
                .map(|r| r.ratio_best)
                .collect();
            let greedy_ratios: Vec<f64> = successes(result)
                .filter(|r| r.w == w)
                .map(|r| r.ratio_greedy)
                .collect();
            let (gains, undefined) = gains_for_w(result, w);
            let mut doc = Map::new();
            doc.insert("w".into(), json!(w));
            doc.insert(
                "training_ratio".into(),
                BoxStats::from_values(&ratios).map_or(Value::Null, |b| b.to_json()),
            );
            doc.insert(
                "training_ratio_best_vector".into(),
                BoxStats::from_values(&best_ratios).map_or(Value::Null, |b| b.to_json()),
            );
            doc.insert(
                "training_ratio_greedy".into(),
                BoxStats::from_values(&greedy_ratios).map_or(Value::Null, |b| b.to_json()),
            );
            doc.insert(
                "test_gain".into(),
                BoxStats::from_values(&gains).map_or(Value::Null, |b| b.to_json()),
            );
            doc.insert("undefined_gains".into(), json!(undefined));
            (w, Value::Object(doc))
        })
        .collect()
}

pub fn write_summary_json(result: &ExperimentResult, mut sink: impl Write) -> Result<()> {
    if result.records.is_empty() {
        return Err(Error::Validation("no instances".into()));
    }
    let groups: Vec<Value> = per_w_summary(result).into_iter().map(|(_, v)| v).collect();
    let min_ratio = successes(result)
        .map(|r| r.ratio_estimate)
        .fold(f64::INFINITY, f64::min);
    let doc = json!({
        "config": serde_json::to_value(&result.config)?,
        "instances": result.records.len(),
        "failed_instances": result.failed_instances(),
        "min_training_ratio": if min_ratio.is_finite() { json!(min_ratio) } else { Value::Null },
        "groups": groups,
    });
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub const PER_INSTANCE_HEADER: [&str; 12] = [
    "instance",
    "w",
    "mu",
    "status",
    "lp_objective",
    "zero_revenue",
    "prolpr_estimate",
    "prolpr_best_train",
    "greedy_train",
    "ratio_estimate",
    "ratio_best",
    "ratio_greedy",
];

pub fn write_per_instance_csv(result: &ExperimentResult, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PER_INSTANCE_HEADER)?;
    for r in &result.records {
        w.write_record([
            r.index.to_string(),
            format!("{}", r.w),
            format!("{}", r.mu),
            r.failure.clone().unwrap_or_else(|| "ok".into()),
            format!("{}", r.lp_objective),
            format!("{}", r.zero_revenue),
            format!("{}", r.estimate),
            format!("{}", r.best_train_revenue),
            format!("{}", r.greedy_train_revenue),
            format!("{}", r.ratio_estimate),
            format!("{}", r.ratio_best),
            format!("{}", r.ratio_greedy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of `per_instance.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerInstanceRow {
    pub instance: u32,
    pub w: f64,
    pub mu: f64,
    pub status: String,
    pub lp_objective: f64,
    pub zero_revenue: f64,
    pub prolpr_estimate: f64,
    pub prolpr_best_train: f64,
    pub greedy_train: f64,
    pub ratio_estimate: f64,
    pub ratio_best: f64,
    pub ratio_greedy: f64,
}

pub fn read_per_instance_csv(source: impl std::io::Read) -> Result<Vec<PerInstanceRow>> {
    let mut reader = csv::Reader::from_reader(source);
    {
        let headers = reader.headers()?;
        if headers.iter().ne(PER_INSTANCE_HEADER) {
            return Err(Error::Validation(format!(
                "unexpected per-instance header {headers:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64> {
            get(i)
                .parse()
                .map_err(|e| Error::Validation(format!("bad number in column {i}: {e}")))
        };
        rows.push(PerInstanceRow {
            instance: get(0)
                .parse()
                .map_err(|e| Error::Validation(format!("bad instance index: {e}")))?,
            w: num(1)?,
            mu: num(2)?,
            status: get(3).to_string(),
            lp_objective: num(4)?,
            zero_revenue: num(5)?,
            prolpr_estimate: num(6)?,
            prolpr_best_train: num(7)?,
            greedy_train: num(8)?,
            ratio_estimate: num(9)?,
            ratio_best: num(10)?,
            ratio_greedy: num(11)?,
        });
    }
    Ok(rows)
}

pub fn write_per_testset_csv(result: &ExperimentResult, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "instance",
        "w",
        "mu",
        "test_set",
        "prolpr_revenue",
        "greedy_revenue",
        "gain",
    ])?;
    for r in &result.records {
        for t in &r.tests {
            w.write_record([
                r.index.to_string(),
                format!("{}", r.w),
                format!("{}", r.mu),
                t.set.to_string(),
                format!("{}", t.lp_revenue),
                format!("{}", t.greedy_revenue),
                t.gain.map(|g| format!("{g}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Renders grouped box plots as a self-contained SVG string.
fn boxplot_svg(title: &str, y_label: &str, groups: &[(String, BoxStats)]) -> String {
    let width = 640.0;
    let height = 420.0;
    let margin_left = 70.0;
    let margin_right = 20.0;
    let margin_top = 40.0;
    let margin_bottom = 50.0;
    let plot_w = width - margin_left - margin_right;
    let plot_h = height - margin_top - margin_bottom;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, b) in groups {
        lo = lo.min(b.min);
        hi = hi.max(b.max);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| margin_top + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{title}</text>\n",
        width / 2.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        margin_top + plot_h / 2.0,
        margin_top + plot_h / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{margin_left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        margin_top + plot_h,
        width - margin_right,
        margin_top + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{margin_left}\" y1=\"{margin_top}\" x2=\"{margin_left}\" y2=\"{:.1}\" \
         stroke=\"black\"/>\n",
        margin_top + plot_h
    ));
    // y ticks
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let yy = y(v);
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{yy:.1}\" x2=\"{margin_left}\" y2=\"{yy:.1}\" stroke=\"black\"/>\n",
            margin_left - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{v:.4}</text>\n",
            margin_left - 8.0,
            yy + 4.0
        ));
    }
    // boxes
    let slot_w = plot_w / groups.len() as f64;
    for (i, (label, b)) in groups.iter().enumerate() {
        let cx = margin_left + slot_w * (i as f64 + 0.5);
        let bw = (slot_w * 0.4).min(60.0);
        svg.push_str(&format!(
            "  <line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            y(b.max),
            y(b.min)
        ));
        for v in [b.max, b.min] {
            svg.push_str(&format!(
                "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
                cx - bw / 4.0,
                y(v),
                cx + bw / 4.0,
                y(v)
            ));
        }
        svg.push_str(&format!(
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bw:.1}\" height=\"{:.1}\" fill=\"#9ecae1\" \
             stroke=\"black\"/>\n",
            cx - bw / 2.0,
            y(b.q75),
            (y(b.q25) - y(b.q75)).max(0.5)
        ));
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" \
             stroke-width=\"2\"/>\n",
            cx - bw / 2.0,
            y(b.median),
            cx + bw / 2.0,
            y(b.median)
        ));
        svg.push_str(&format!(
            "  <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\">{label}</text>\n",
            margin_top + plot_h + 20.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `summary.json`, `per_instance.csv`, `per_testset.csv`, and (with
/// `plots`) the two box-plot SVGs into `out_dir`. Returns the paths written.
pub fn emit_report(result: &ExperimentResult, out_dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    if result.records.is_empty() {
        return Err(Error::Validation("no instances".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let summary = out_dir.join("summary.json");
    write_summary_json(result, fs::File::create(&summary)?)?;
    written.push(summary);

    let per_instance = out_dir.join("per_instance.csv");
    write_per_instance_csv(result, fs::File::create(&per_instance)?)?;
    written.push(per_instance);

    let per_testset = out_dir.join("per_testset.csv");
    write_per_testset_csv(result, fs::File::create(&per_testset)?)?;
    written.push(per_testset);

    if plots {
        let ratio_groups: Vec<(String, BoxStats)> = result
            .config
            .w_values
            .iter()
            .filter_map(|&w| {
                let ratios: Vec<f64> = successes(result)
                    .filter(|r| r.w == w)
                    .map(|r| r.ratio_estimate)
                    .collect();
                BoxStats::from_values(&ratios).map(|b| (format!("w = {w}"), b))
            })
            .collect();
        let ratio_svg = out_dir.join("training_ratio_box.svg");
        fs::write(
            &ratio_svg,
            boxplot_svg(
                "Normalized training revenue",
                "revenue / LP objective",
                &ratio_groups,
            ),
        )?;
        written.push(ratio_svg);

        let gain_groups: Vec<(String, BoxStats)> = result
            .config
            .w_values
            .iter()
            .filter_map(|&w| {
                let (gains, _) = gains_for_w(result, w);
                BoxStats::from_values(&gains).map(|b| (format!("w = {w}"), b))
            })
            .collect();
        let gain_svg = out_dir.join("test_gain_box.svg");
        fs::write(
            &gain_svg,
            boxplot_svg(
                "Test revenue gain over greedy",
                "(lp - greedy) / greedy",
                &gain_groups,
            ),
        )?;
        written.push(gain_svg);
    }
    Ok(written)
}
