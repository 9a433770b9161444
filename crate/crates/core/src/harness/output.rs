//! CSV and JSON result files.
//!
//! Floats are written like C's `%.17g`, which round-trips every `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{AggregateRow, ChiSweepReport, RunResult, V0SweepReport};
use crate::error::Result;

pub const RUNS_HEADER: [&str; 9] =
    ["instance", "agent", "run", "step", "instant_regret", "cum_regret", "ndcg", "inversions", "cum_violations"];

pub const AGG_HEADER: [&str; 9] = [
    "instance",
    "agent",
    "step",
    "mean_cum_regret",
    "se_cum_regret",
    "mean_ndcg",
    "se_ndcg",
    "mean_cum_violations",
    "se_cum_violations",
];

pub const CHI_HEADER: [&str; 5] = ["i", "chi_min", "final_regret", "se_final_regret", "ratio"];

pub const V0_HEADER: [&str; 5] = ["list", "v0", "final_regret", "se_final_regret", "initial_list"];

/// Formats `x` with 17 significant digits, exactly as C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let fixed = format!("{:.*}", (PRECISION - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_runs_csv<W: Write>(w: W, runs: &[RunResult]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(RUNS_HEADER)?;
    for run in runs {
        let (run_idx, agent) = (run.run.to_string(), run.agent.name());
        for m in &run.checkpoints {
            out.write_record([
                run.instance.as_str(),
                agent,
                &run_idx,
                &m.step.to_string(),
                &fmt_g17(m.instant_regret),
                &fmt_g17(m.cum_regret),
                &fmt_g17(m.ndcg),
                &m.inversions.to_string(),
                &m.cum_violations.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_agg_csv<W: Write>(w: W, rows: &[AggregateRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(AGG_HEADER)?;
    for r in rows {
        out.write_record([
            r.instance.as_str(),
            r.agent.name(),
            &r.step.to_string(),
            &fmt_g17(r.mean_cum_regret),
            &fmt_g17(r.se_cum_regret),
            &fmt_g17(r.mean_ndcg),
            &fmt_g17(r.se_ndcg),
            &fmt_g17(r.mean_cum_violations),
            &fmt_g17(r.se_cum_violations),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_chi_csv<W: Write>(w: W, report: &ChiSweepReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(CHI_HEADER)?;
    for r in &report.rows {
        out.write_record([
            r.i.to_string(),
            fmt_g17(r.chi_min),
            fmt_g17(r.final_regret),
            fmt_g17(r.se_final_regret),
            r.ratio.map(fmt_g17).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_v0_csv<W: Write>(w: W, report: &V0SweepReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(V0_HEADER)?;
    for r in &report.rows {
        let labels: Vec<String> = r.initial_list.iter().map(usize::to_string).collect();
        out.write_record([
            r.list.to_string(),
            r.v0.to_string(),
            fmt_g17(r.final_regret),
            fmt_g17(r.se_final_regret),
            labels.join(" "),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
