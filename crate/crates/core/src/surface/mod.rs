//! Posterior-probability and boldness surfaces over a `(δ, γ)` lattice.
//!
//! The posterior surface needs the MLEs of every adjusted set `c(x; δᵢ, γⱼ)`.
//! All of them follow in closed form from one fit of `x`, so a whole surface
//! costs a single optimizer call plus `k²` likelihood passes.

mod contour;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use contour::{extract_contours, ContourSet};

use crate::boldness::constraint_posterior;
use crate::calibration::{bayes_ms, mle_recal, posterior_prob_calibrated, validate_prior};
use crate::error::{Error, Result};
use crate::likelihood::{fit_mle, MleFit};
use crate::optim::OptimizerConfig;
use crate::prob::{llo_adjust, sample_sd, LloParams, PredictionSet};

pub const DEFAULT_LIMITS: (f64, f64) = (1e-4, 5.0);
pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Posterior,
    Boldness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellFlag {
    Ok,
    /// `γ = 0`: every adjusted prediction collapses to one value.
    Degenerate,
    /// Evaluation failed; the stored value is 0.
    NonFinite,
}

impl CellFlag {
    fn as_str(self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Degenerate => "degenerate",
            CellFlag::NonFinite => "nonfinite",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(CellFlag::Ok),
            "degenerate" => Some(CellFlag::Degenerate),
            "nonfinite" => Some(CellFlag::NonFinite),
            _ => None,
        }
    }
}

/// `k × k` lattice; `values[i·k + j]` belongs to `(deltas[i], gammas[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSurface {
    pub dlim: (f64, f64),
    pub glim: (f64, f64),
    pub k: usize,
    pub deltas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Vec<CellFlag>,
    pub kind: SurfaceKind,
    pub prior_mc: Option<f64>,
    pub base_mles: Option<LloParams>,
}

fn linspace(lim: (f64, f64), k: usize) -> Vec<f64> {
    let step = (lim.1 - lim.0) / (k - 1) as f64;
    (0..k)
        .map(|i| {
            if i == k - 1 {
                lim.1
            } else {
                lim.0 + step * i as f64
            }
        })
        .collect()
}

fn check_grid(dlim: (f64, f64), glim: (f64, f64), k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if !(dlim.0 > 0.0 && dlim.0 < dlim.1 && dlim.1.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "dlim must satisfy 0 < lower < upper < inf, got {dlim:?}"
        )));
    }
    if !(glim.0 < glim.1 && glim.0.is_finite() && glim.1.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "glim must satisfy lower < upper, both finite, got {glim:?}"
        )));
    }
    Ok(())
}

impl GridSurface {
    /// Fills a lattice cell by cell (δ outer, γ inner). Limits are not checked.
    pub fn from_fn(
        dlim: (f64, f64),
        glim: (f64, f64),
        k: usize,
        kind: SurfaceKind,
        mut cell: impl FnMut(f64, f64) -> (f64, CellFlag),
    ) -> Self {
        let deltas = linspace(dlim, k);
        let gammas = linspace(glim, k);
        let mut values = Vec::with_capacity(k * k);
        let mut flags = Vec::with_capacity(k * k);
        for &d in &deltas {
            for &g in &gammas {
                let (v, f) = cell(d, g);
                values.push(v);
                flags.push(f);
            }
        }
        Self {
            dlim,
            glim,
            k,
            deltas,
            gammas,
            values,
            flags,
            kind,
            prior_mc: None,
            base_mles: None,
        }
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    /// Lattice indices and value of the largest cell (first one on ties).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (idx, v) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        (idx / self.k, idx % self.k, v)
    }

    /// Cells recorded as non-finite.
    pub fn non_finite_cells(&self) -> usize {
        self.flags
            .iter()
            .filter(|f| **f == CellFlag::NonFinite)
            .count()
    }

    pub fn meta(&self) -> SurfaceMeta {
        SurfaceMeta {
            dlim: self.dlim,
            glim: self.glim,
            k: self.k,
            kind: self.kind,
            prior: self.prior_mc,
            mles: self.base_mles,
        }
    }

    /// Row-major CSV with header `delta,gamma,value,flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta", "gamma", "value", "flag"])?;
        for (i, d) in self.deltas.iter().enumerate() {
            for (j, g) in self.gammas.iter().enumerate() {
                let idx = i * self.k + j;
                w.write_record([
                    d.to_string(),
                    g.to_string(),
                    self.values[idx].to_string(),
                    self.flags[idx].as_str().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds a surface from its CSV and JSON sidecar.
    pub fn read_csv<R: Read>(input: R, meta: &SurfaceMeta) -> Result<Self> {
        let k = meta.k;
        check_grid(meta.dlim, meta.glim, k)?;
        let mut r = csv::Reader::from_reader(input);
        let mut values = Vec::with_capacity(k * k);
        let mut flags = Vec::with_capacity(k * k);
        let mut deltas = Vec::with_capacity(k);
        let mut gammas = Vec::with_capacity(k);
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Parse {
                row: row + 2,
                message,
            };
            let num = |c: usize| -> Result<f64> {
                rec.get(c)
                    .ok_or_else(|| bad(format!("missing column {c}")))?
                    .parse::<f64>()
                    .map_err(|e| bad(e.to_string()))
            };
            let (d, g, v) = (num(0)?, num(1)?, num(2)?);
            let flag = rec
                .get(3)
                .and_then(CellFlag::parse)
                .ok_or_else(|| bad("unknown flag".into()))?;
            if row % k == 0 {
                deltas.push(d);
            }
            if row < k {
                gammas.push(g);
            }
            values.push(v);
            flags.push(flag);
        }
        if values.len() != k * k {
            return Err(Error::InvalidInput(format!(
                "expected {} cells, found {}",
                k * k,
                values.len()
            )));
        }
        Ok(Self {
            dlim: meta.dlim,
            glim: meta.glim,
            k,
            deltas,
            gammas,
            values,
            flags,
            kind: meta.kind,
            prior_mc: meta.prior,
            base_mles: meta.mles,
        })
    }
}

/// JSON sidecar describing a surface CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub dlim: (f64, f64),
    pub glim: (f64, f64),
    pub k: usize,
    pub kind: SurfaceKind,
    pub prior: Option<f64>,
    pub mles: Option<LloParams>,
}

/// Posterior probability of calibration of the all-0.5 vector that a
/// `γ = 0` cell stands for. Its MLE fit can only move the common value, which
/// lands on the base rate, so the fitted NLL is `n·H(ȳ)`.
fn collapsed_posterior(data: &PredictionSet, prior_mc: f64) -> f64 {
    let n = data.len() as f64;
    let p = data.base_rate();
    let xlnx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    let entropy = -(xlnx(p) + xlnx(1.0 - p));
    let log_bf = n * std::f64::consts::LN_2 - n * entropy - n.ln();
    posterior_prob_calibrated(log_bf, prior_mc)
}

pub fn posterior_surface(
    data: &PredictionSet,
    dlim: (f64, f64),
    glim: (f64, f64),
    k: usize,
    prior_mc: f64,
    config: &OptimizerConfig,
) -> Result<GridSurface> {
    check_grid(dlim, glim, k)?;
    validate_prior(prior_mc)?;
    let fit = fit_mle(data, config)?;
    posterior_surface_with_fit(data, &fit, dlim, glim, k, prior_mc)
}

/// [`posterior_surface`] reusing an existing fit of `data`.
pub fn posterior_surface_with_fit(
    data: &PredictionSet,
    fit: &MleFit,
    dlim: (f64, f64),
    glim: (f64, f64),
    k: usize,
    prior_mc: f64,
) -> Result<GridSurface> {
    check_grid(dlim, glim, k)?;
    validate_prior(prior_mc)?;
    let base = fit.params;
    let collapsed = collapsed_posterior(data, prior_mc);
    let mut surface = GridSurface::from_fn(dlim, glim, k, SurfaceKind::Posterior, |d, g| {
        if g == 0.0 {
            return (collapsed, CellFlag::Degenerate);
        }
        match constraint_posterior(data, &base, &LloParams { delta: d, gamma: g }, prior_mc) {
            Ok(p) if p.is_finite() => (p, CellFlag::Ok),
            _ => (0.0, CellFlag::NonFinite),
        }
    });
    let bad = surface.non_finite_cells();
    if bad > 0 {
        log::warn!("{bad} surface cells were not finite and were set to 0");
    }
    surface.prior_mc = Some(prior_mc);
    surface.base_mles = Some(base);
    Ok(surface)
}

pub fn boldness_surface(
    data: &PredictionSet,
    dlim: (f64, f64),
    glim: (f64, f64),
    k: usize,
) -> Result<GridSurface> {
    check_grid(dlim, glim, k)?;
    Ok(GridSurface::from_fn(
        dlim,
        glim,
        k,
        SurfaceKind::Boldness,
        |d, g| {
            let flag = if g == 0.0 {
                CellFlag::Degenerate
            } else {
                CellFlag::Ok
            };
            let sd = sample_sd(&llo_adjust(data.x(), &LloParams { delta: d, gamma: g }));
            (sd, flag)
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineAction {
    IncreaseK,
    ExpandDeltaLower,
    ExpandDeltaUpper,
    ExpandGammaLower,
    ExpandGammaUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSuggestion {
    pub dlim: (f64, f64),
    pub glim: (f64, f64),
    pub k: usize,
    pub actions: Vec<RefineAction>,
    pub message: String,
}

/// Cells at or above this posterior count as the high-probability region.
pub const HIGH_REGION_LEVEL: f64 = 0.05;
/// Tolerated shortfall of the lattice maximum against the fitted posterior.
pub const MAX_SHORTFALL: f64 = 0.05;

/// Grid advice: refine `k` while the lattice misses the posterior of the
/// MLE-recalibrated set, then widen any limit the high region touches.
pub fn grid_refine_suggestion(
    data: &PredictionSet,
    current: &GridSurface,
    config: &OptimizerConfig,
) -> Result<RefineSuggestion> {
    let prior = current.prior_mc.unwrap_or(0.5);
    let (probs, _) = mle_recal(data, config)?;
    let reference = bayes_ms(&data.with_predictions(&probs)?, prior, config)?.posterior_prob;
    Ok(refine_against(current, reference))
}

pub fn refine_against(current: &GridSurface, reference: f64) -> RefineSuggestion {
    let k = current.k;
    let mut actions = Vec::new();
    let (_, _, max) = current.argmax();
    if reference - max > MAX_SHORTFALL {
        actions.push(RefineAction::IncreaseK);
    }
    let high = |i: usize, j: usize| current.value(i, j) >= HIGH_REGION_LEVEL;
    let touches = [
        ((0..k).any(|j| high(0, j)), RefineAction::ExpandDeltaLower),
        (
            (0..k).any(|j| high(k - 1, j)),
            RefineAction::ExpandDeltaUpper,
        ),
        ((0..k).any(|i| high(i, 0)), RefineAction::ExpandGammaLower),
        (
            (0..k).any(|i| high(i, k - 1)),
            RefineAction::ExpandGammaUpper,
        ),
    ];
    actions.extend(touches.iter().filter(|t| t.0).map(|t| t.1));

    let (mut dlim, mut glim) = (current.dlim, current.glim);
    let (dw, gw) = (dlim.1 - dlim.0, glim.1 - glim.0);
    let mut notes = Vec::new();
    for a in &actions {
        match a {
            RefineAction::IncreaseK => notes.push(format!(
                "lattice maximum {max:.4} is more than {MAX_SHORTFALL} below the fitted posterior {reference:.4}; increase k"
            )),
            RefineAction::ExpandDeltaLower => {
                dlim.0 /= 2.0;
                notes.push("high region reaches the lower delta limit; lower dlim".into());
            }
            RefineAction::ExpandDeltaUpper => {
                dlim.1 += dw / 2.0;
                notes.push("high region reaches the upper delta limit; raise dlim".into());
            }
            RefineAction::ExpandGammaLower => {
                glim.0 -= gw / 2.0;
                notes.push("high region reaches the lower gamma limit; lower glim".into());
            }
            RefineAction::ExpandGammaUpper => {
                glim.1 += gw / 2.0;
                notes.push("high region reaches the upper gamma limit; raise glim".into());
            }
        }
    }
    let new_k = if actions.contains(&RefineAction::IncreaseK) {
        2 * k
    } else {
        k
    };
    RefineSuggestion {
        dlim,
        glim,
        k: new_k,
        message: if notes.is_empty() {
            "no change".into()
        } else {
            notes.join("; ")
        },
        actions,
    }
}
