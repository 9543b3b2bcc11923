//! CSV, JSON and SVG renderings of experiment results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bounds::{Bound, BoundTrace};
use super::spec::ExperimentSpec;
use super::verify::Verdict;
use crate::domain::RegretRecord;
use crate::stats::mean;

/// Per-round table `replicate,t,learner_loss,cum_regret,bound_value`; the
/// bound column holds the bound at horizon `t` (empty without a bound, or
/// where the bound is undefined, as at `t = 1` for the smoothed bound).
pub fn runs_csv(records: &[RegretRecord], bound: Option<&Bound>) -> String {
    let horizon = records.iter().map(RegretRecord::horizon).max().unwrap_or(0);
    let curve: Vec<String> = (1..=horizon)
        .map(|t| {
            bound
                .and_then(|b| b.value_at(t).ok())
                .map_or(String::new(), |v| v.to_string())
        })
        .collect();
    let mut out = String::from("replicate,t,learner_loss,cum_regret,bound_value\n");
    for (r, rec) in records.iter().enumerate() {
        for (t, (loss, reg)) in rec
            .per_round_loss
            .iter()
            .zip(&rec.cumulative_regret)
            .enumerate()
        {
            writeln!(out, "{r},{},{loss},{reg},{}", t + 1, curve[t]).expect("writing to a string");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: String,
    pub horizon: usize,
    pub master_seed: u64,
    pub mean_final_regret: f64,
    pub max_final_regret: f64,
    pub bound: Option<BoundTrace>,
    /// `pass`, `fail`, or `none` without a bound.
    pub verdict: String,
    pub seeds: Vec<u64>,
}

impl Summary {
    pub fn new(spec: &ExperimentSpec, records: &[RegretRecord], verdict: Option<&Verdict>) -> Self {
        let finals: Vec<f64> = records.iter().map(RegretRecord::final_regret).collect();
        Self {
            id: spec.id.clone(),
            horizon: spec.horizon,
            master_seed: spec.master_seed(),
            mean_final_regret: mean(&finals),
            max_final_regret: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            bound: verdict.map(|v| v.bound.clone()),
            verdict: match verdict {
                Some(v) if v.pass => "pass".into(),
                Some(_) => "fail".into(),
                None => "none".into(),
            },
            seeds: records.iter().map(|r| r.seed).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const PAD: f64 = 56.0;
const MAX_CURVES: usize = 25;
const MAX_POINTS: usize = 400;

/// Regret-versus-round plot: a few replicate curves, their mean, and the
/// bound as a dashed overlay.
pub fn regret_svg(title: &str, records: &[RegretRecord], bound: Option<&Bound>) -> String {
    let horizon = records
        .iter()
        .map(RegretRecord::horizon)
        .max()
        .unwrap_or(1)
        .max(1);
    let step = horizon.div_ceil(MAX_POINTS).max(1);
    let ts: Vec<usize> = (1..=horizon)
        .filter(|t| t % step == 0 || *t == 1 || *t == horizon)
        .collect();
    let mean_curve: Vec<f64> = ts
        .iter()
        .map(|&t| {
            mean(
                &records
                    .iter()
                    .filter_map(|r| r.cumulative_regret.get(t - 1).copied())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let bound_curve: Option<Vec<(usize, f64)>> = bound.map(|b| {
        ts.iter()
            .filter_map(|&t| b.value_at(t).ok().map(|v| (t, v)))
            .collect()
    });
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;
    for r in records.iter().take(MAX_CURVES) {
        for &t in &ts {
            if let Some(v) = r.cumulative_regret.get(t - 1) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    for (_, v) in bound_curve.iter().flatten() {
        hi = hi.max(*v);
    }
    let sx =
        |t: usize| PAD + (WIDTH - 2.0 * PAD) * (t as f64 - 1.0) / ((horizon as f64 - 1.0).max(1.0));
    let sy = |v: f64| HEIGHT - PAD - (HEIGHT - 2.0 * PAD) * (v - lo) / (hi - lo);
    let polyline = |vals: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut s = String::new();
        for (t, v) in vals {
            write!(s, "{:.2},{:.2} ", sx(t), sy(v)).expect("writing to a string");
        }
        s.trim_end().to_string()
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .expect("writing to a string");
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#)
        .expect("writing to a string");
    writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .expect("writing to a string");
    let (x0, x1, y0, y1) = (PAD, WIDTH - PAD, HEIGHT - PAD, PAD);
    writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    )
    .expect("writing to a string");
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let t = 1 + (horizon - 1) * k / 4;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            sy(v) + 4.0,
            fmt_tick(v)
        )
        .expect("writing to a string");
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            sx(t),
            y0 + 18.0
        )
        .expect("writing to a string");
    }
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">round t</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .expect("writing to a string");
    writeln!(svg, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">cumulative regret</text>"#, HEIGHT / 2.0, HEIGHT / 2.0)
        .expect("writing to a string");
    for r in records.iter().take(MAX_CURVES) {
        let pts = polyline(
            &mut ts
                .iter()
                .filter_map(|&t| r.cumulative_regret.get(t - 1).map(|v| (t, *v))),
        );
        writeln!(
            svg,
            r##"<polyline points="{pts}" fill="none" stroke="#9bb7d4" stroke-width="0.8"/>"##
        )
        .expect("writing to a string");
    }
    let pts = polyline(&mut ts.iter().copied().zip(mean_curve.iter().copied()));
    writeln!(
        svg,
        r##"<polyline points="{pts}" fill="none" stroke="#1f4e8c" stroke-width="2"/>"##
    )
    .expect("writing to a string");
    if let Some(b) = &bound_curve {
        let pts = polyline(&mut b.iter().copied());
        writeln!(svg, r##"<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6 4"/>"##)
            .expect("writing to a string");
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
