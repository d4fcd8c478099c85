//! Plot data and static SVG rendering.
//!
//! Line plots place each prediction set in its own column (original, MLE
//! recalibrated, then boldness-recalibrated sets by descending `t`) and join
//! the predictions of each observation across columns. Surface plots draw a
//! colored lattice with contour overlays and labelled markers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boldness::brcal_with_fit;
use crate::calibration::{assessment_from_fit, bayes_ms, validate_prior};
use crate::error::{Error, Result};
use crate::likelihood::fit_mle;
use crate::optim::OptimizerConfig;
use crate::prob::{llo_adjust, PredictionSet};
use crate::surface::{ContourSet, GridSurface, SurfaceKind};

pub const ORIGINAL: &str = "Original";
pub const MLE: &str = "MLE";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Thinning {
    #[default]
    None,
    /// Keep this many randomly chosen observations.
    To(usize),
    /// Keep this fraction of the observations, chosen at random.
    Prop(f64),
    /// Keep every `n`-th observation, starting with the first.
    By(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ThinningSpec {
    pub mode: Thinning,
    pub seed: u64,
}

impl ThinningSpec {
    /// Sorted indices of the observations to keep out of `n`.
    pub fn select(&self, n: usize) -> Result<Vec<usize>> {
        let random = |count: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let mut idx = rand::seq::index::sample(&mut rng, n, count).into_vec();
            idx.sort_unstable();
            idx
        };
        match self.mode {
            Thinning::None => Ok((0..n).collect()),
            Thinning::To(c) if c >= 1 && c <= n => Ok(random(c)),
            Thinning::To(c) => Err(Error::InvalidInput(format!(
                "thin_to must lie in [1, {n}], got {c}"
            ))),
            Thinning::Prop(p) if p > 0.0 && p <= 1.0 => {
                Ok(random(((p * n as f64).round() as usize).clamp(1, n)))
            }
            Thinning::Prop(p) => Err(Error::InvalidInput(format!(
                "thin_prop must lie in (0, 1], got {p}"
            ))),
            Thinning::By(s) if s >= 1 => Ok((0..n).step_by(s).collect()),
            Thinning::By(_) => Err(Error::InvalidInput("thin_by must be at least 1".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineplotColumn {
    pub label: String,
    /// Posterior probability of calibration of the full column.
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineplotRow {
    /// 1-based position in the input.
    pub id: usize,
    pub column: String,
    pub prob: f64,
    pub outcome: u8,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineplotTable {
    pub columns: Vec<LineplotColumn>,
    /// Grouped by column in column order, ids ascending within a column.
    pub rows: Vec<LineplotRow>,
}

pub fn t_label(t: f64) -> String {
    format!("t={t}")
}

pub fn lineplot_table(
    data: &PredictionSet,
    t_levels: &[f64],
    include_original: bool,
    include_mle: bool,
    thinning: ThinningSpec,
    prior_mc: f64,
    config: &OptimizerConfig,
) -> Result<LineplotTable> {
    validate_prior(prior_mc)?;
    if !include_original && !include_mle && t_levels.is_empty() {
        return Err(Error::InvalidInput(
            "nothing to plot: no columns requested".into(),
        ));
    }
    let keep = thinning.select(data.len())?;
    let fit = fit_mle(data, config)?;

    let mut columns: Vec<(String, Vec<f64>, f64)> = Vec::new();
    if include_original {
        let a = assessment_from_fit(data, prior_mc, fit.clone())?;
        columns.push((ORIGINAL.into(), data.x().to_vec(), a.posterior_prob));
    }
    if include_mle {
        let probs = llo_adjust(data.x(), &fit.params);
        let post = bayes_ms(&data.with_predictions(&probs)?, prior_mc, config)?.posterior_prob;
        columns.push((MLE.into(), probs, post));
    }
    let mut ts = t_levels.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    for t in ts {
        let br = brcal_with_fit(data, &fit, t, prior_mc, config)?;
        let post = bayes_ms(&data.with_predictions(&br.probs)?, prior_mc, config)?.posterior_prob;
        columns.push((t_label(t), br.probs, post));
    }

    let mut rows = Vec::with_capacity(columns.len() * keep.len());
    for (label, probs, post) in &columns {
        for &i in &keep {
            rows.push(LineplotRow {
                id: i + 1,
                column: label.clone(),
                prob: probs[i],
                outcome: data.y()[i],
                posterior: *post,
            });
        }
    }
    Ok(LineplotTable {
        columns: columns
            .into_iter()
            .map(|(label, _, posterior)| LineplotColumn { label, posterior })
            .collect(),
        rows,
    })
}

impl LineplotTable {
    /// CSV with header `id,column,prob,outcome,posterior`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "column", "prob", "outcome", "posterior"])?;
        for r in &self.rows {
            w.write_record([
                r.id.to_string(),
                r.column.clone(),
                r.prob.to_string(),
                r.outcome.to_string(),
                r.posterior.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`LineplotTable::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().collect::<Vec<_>>()
            != ["id", "column", "prob", "outcome", "posterior"]
        {
            return Err(Error::Parse {
                row: 1,
                message: "expected header id,column,prob,outcome,posterior".into(),
            });
        }
        let mut rows = Vec::new();
        let mut columns: Vec<LineplotColumn> = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Parse {
                row: n + 2,
                message,
            };
            let field = |c: usize| rec.get(c).ok_or_else(|| bad(format!("missing field {c}")));
            let row = LineplotRow {
                id: field(0)?.parse().map_err(|e| bad(format!("id: {e}")))?,
                column: field(1)?.to_string(),
                prob: field(2)?.parse().map_err(|e| bad(format!("prob: {e}")))?,
                outcome: field(3)?
                    .parse()
                    .map_err(|e| bad(format!("outcome: {e}")))?,
                posterior: field(4)?
                    .parse()
                    .map_err(|e| bad(format!("posterior: {e}")))?,
            };
            if !columns.iter().any(|c| c.label == row.column) {
                columns.push(LineplotColumn {
                    label: row.column.clone(),
                    posterior: row.posterior,
                });
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    /// Ids in first-column order.
    fn ids(&self) -> Vec<(usize, u8)> {
        let first = match self.columns.first() {
            Some(c) => &c.label,
            None => return Vec::new(),
        };
        self.rows
            .iter()
            .filter(|r| &r.column == first)
            .map(|r| (r.id, r.outcome))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub event_color: String,
    pub nonevent_color: String,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 480.0,
            margin: 56.0,
            event_color: "#2a6fb0".into(),
            nonevent_color: "#c8553d".into(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open(out: &mut String, style: &PlotStyle) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
}

pub fn render_lineplot_svg(table: &LineplotTable, style: &PlotStyle) -> Result<String> {
    if table.rows.is_empty() || table.columns.is_empty() {
        return Err(Error::InvalidInput("cannot render an empty table".into()));
    }
    let m = style.margin;
    let (pw, ph) = (style.width - 2.0 * m, style.height - 2.0 * m);
    let ncol = table.columns.len();
    let cx = |c: usize| {
        if ncol == 1 {
            m + pw / 2.0
        } else {
            m + pw * c as f64 / (ncol - 1) as f64
        }
    };
    let py = |p: f64| m + ph * (1.0 - p);

    let mut out = String::new();
    svg_open(&mut out, style);
    let _ = writeln!(
        out,
        "<style>.event{{stroke:{e};fill:{e}}} .nonevent{{stroke:{n};fill:{n}}} line{{stroke-opacity:0.35;stroke-width:1}} .axis{{stroke:#333;fill:none}}</style>",
        e = style.event_color,
        n = style.nonevent_color
    );
    let _ = writeln!(
        out,
        r#"<path class="axis" d="M{m:.2} {top:.2} V{bot:.2}"/>"#,
        top = py(1.0),
        bot = py(0.0)
    );
    for tick in 0..=4 {
        let p = tick as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<path class="axis" d="M{x0:.2} {y:.2} H{m:.2}"/><text x="{xt:.2}" y="{yt:.2}" text-anchor="end">{p:.2}</text>"#,
            x0 = m - 4.0,
            y = py(p),
            xt = m - 8.0,
            yt = py(p) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">Probability</text>"#,
        x = m / 4.0 + 4.0,
        y = m + ph / 2.0
    );
    for (c, col) in table.columns.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">{label} ({post:.4})</text>"#,
            x = cx(c),
            y = style.height - m / 2.0,
            label = escape(&col.label),
            post = col.posterior
        );
    }

    let lookup: HashMap<(&str, usize), f64> = table
        .rows
        .iter()
        .map(|r| ((r.column.as_str(), r.id), r.prob))
        .collect();
    for (id, outcome) in table.ids() {
        let class = if outcome == 1 { "event" } else { "nonevent" };
        let probs: Vec<Option<f64>> = table
            .columns
            .iter()
            .map(|c| lookup.get(&(c.label.as_str(), id)).copied())
            .collect();
        let _ = writeln!(out, r#"<g class="{class}" data-id="{id}">"#);
        for c in 1..ncol {
            if let (Some(a), Some(b)) = (probs[c - 1], probs[c]) {
                let _ = writeln!(
                    out,
                    r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    cx(c - 1),
                    py(a),
                    cx(c),
                    py(b)
                );
            }
        }
        for (c, p) in probs.iter().enumerate() {
            if let Some(p) = p {
                let _ = writeln!(
                    out,
                    r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                    cx(c),
                    py(*p)
                );
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// A labelled point drawn over a surface plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub delta: f64,
    pub gamma: f64,
    pub label: String,
}

/// Piecewise-linear dark-to-light color ramp.
fn ramp(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let i = STOPS
        .iter()
        .rposition(|s| s.0 <= t)
        .unwrap_or(0)
        .min(STOPS.len() - 2);
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3)
        .map(|k| (a.1[k] + u * (b.1[k] - a.1[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub fn render_surface_svg(
    surface: &GridSurface,
    contours: &[ContourSet],
    markers: &[Marker],
    style: &PlotStyle,
) -> String {
    let m = style.margin;
    let (pw, ph) = (style.width - 2.0 * m, style.height - 2.0 * m);
    let k = surface.k;
    let (d0, d1) = (surface.deltas[0], surface.deltas[k - 1]);
    let (g0, g1) = (surface.gammas[0], surface.gammas[k - 1]);
    // nodes sit at cell centres, so the plot spans half a cell past each end
    let (hd, hg) = (
        (d1 - d0) / (k - 1) as f64 / 2.0,
        (g1 - g0) / (k - 1) as f64 / 2.0,
    );
    let (lo_d, hi_d, lo_g, hi_g) = (d0 - hd, d1 + hd, g0 - hg, g1 + hg);
    let sx = |d: f64| m + pw * (d - lo_d) / (hi_d - lo_d);
    let sy = |g: f64| m + ph * (1.0 - (g - lo_g) / (hi_g - lo_g));
    let (vmin, vmax) = match surface.kind {
        SurfaceKind::Posterior => (0.0, 1.0),
        SurfaceKind::Boldness => (
            0.0,
            surface
                .values
                .iter()
                .cloned()
                .fold(0.0, f64::max)
                .max(1e-12),
        ),
    };

    let mut out = String::new();
    svg_open(&mut out, style);
    let _ = writeln!(
        out,
        r##"<defs><clipPath id="plot-area"><path d="M{x0:.2} {y0:.2} H{x1:.2} V{y1:.2} H{x0:.2} Z"/></clipPath></defs>
<style>.contour{{fill:none;stroke:#fff;stroke-width:1.2}} .marker{{stroke:#000;fill:#fff}} .axis{{stroke:#333;fill:none}}</style>"##,
        x0 = m,
        y0 = m,
        x1 = m + pw,
        y1 = m + ph
    );
    let (cw, ch) = (pw / k as f64, ph / k as f64);
    out.push_str("<g class=\"cells\">\n");
    for i in 0..k {
        for j in 0..k {
            let v = surface.value(i, j);
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                sx(surface.deltas[i]) - cw / 2.0,
                sy(surface.gammas[j]) - ch / 2.0,
                cw,
                ch,
                ramp((v - vmin) / (vmax - vmin))
            );
        }
    }
    out.push_str("</g>\n<g clip-path=\"url(#plot-area)\">\n");
    for set in contours {
        for line in &set.polylines {
            let pts: Vec<String> = line
                .iter()
                .map(|p| format!("{:.3},{:.3}", sx(p[0]), sy(p[1])))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="contour" data-level="{}" points="{}"/>"#,
                set.level,
                pts.join(" ")
            );
        }
    }
    for mk in markers {
        let (x, y) = (sx(mk.delta), sy(mk.gamma));
        let _ = writeln!(
            out,
            r##"<g class="marker"><path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke-width="2"/><text x="{:.2}" y="{:.2}" fill="#fff" stroke="none">{}</text></g>"##,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0,
            x + 6.0,
            y - 6.0,
            escape(&mk.label)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<path class="axis" d="M{x0:.2} {y1:.2} H{x1:.2} M{x0:.2} {y1:.2} V{y0:.2}"/>"#,
        x0 = m,
        x1 = m + pw,
        y0 = m,
        y1 = m + ph
    );
    for tick in 0..=4 {
        let d = d0 + (d1 - d0) * tick as f64 / 4.0;
        let g = g0 + (g1 - g0) * tick as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            sx(d),
            m + ph + 16.0,
            d,
            m - 6.0,
            sy(g) + 4.0,
            g
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">delta</text><text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">gamma</text>"#,
        m + pw / 2.0,
        style.height - m / 4.0,
        m / 4.0 + 4.0,
        m + ph / 2.0,
        m / 4.0 + 4.0,
        m + ph / 2.0
    );
    out.push_str("</svg>\n");
    out
}
