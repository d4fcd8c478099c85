use std::fs::File;
use std::io::Write;

use boldrecal::boldness::{brcal, BrcalResult};
use boldrecal::calibration::{bayes_ms, llo_lrt, mle_recal, validate_prior};
use boldrecal::emit::{
    lineplot_table, render_lineplot_svg, render_surface_svg, LineplotTable, Marker, PlotStyle,
    Thinning, ThinningSpec,
};
use boldrecal::ingest::{ingest_csv, read_probabilities, ColumnMapping};
use boldrecal::likelihood::{fit_mle, MleFit};
use boldrecal::optim::{MleAlgorithm, OptimizerConfig};
use boldrecal::prob::llo_adjust;
use boldrecal::surface::{
    boldness_surface, extract_contours, grid_refine_suggestion, posterior_surface_with_fit,
};
use boldrecal::{Error, LloParams, PredictionSet, Result};
use serde_json::{json, Value};

use crate::args::{Algorithm, Cli, Command, Common, Format, Kind};

fn optimizer_config(c: &Common) -> Result<OptimizerConfig> {
    let mut config = OptimizerConfig {
        algorithm: match c.algorithm {
            Algorithm::NelderMead => MleAlgorithm::NelderMead,
            Algorithm::QuasiNewton => MleAlgorithm::QuasiNewtonGrad,
        },
        max_time_seconds: c.max_time,
        verbosity: c.verbosity,
        ..Default::default()
    };
    if let Some(v) = c.max_eval {
        config.max_eval = v;
    }
    if let Some(v) = c.xtol_rel_outer {
        config.xtol_rel_outer = v;
    }
    if let Some(v) = c.xtol_rel_inner {
        config.xtol_rel_inner = v;
    }
    config.validate()?;
    Ok(config)
}

fn load(c: &Common) -> Result<PredictionSet> {
    let path = input_path(c)?;
    let mapping = ColumnMapping {
        x_col: c.x_col.clone(),
        y_col: c.y_col.clone(),
        event: c.event.clone(),
    };
    ingest_csv(path, &mapping, c.epsilon)
}

fn input_path(c: &Common) -> Result<&std::path::Path> {
    c.input
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--input is required".into()))
}

fn params(p: &LloParams) -> Value {
    json!([p.delta, p.gamma])
}

fn fit_details(fit: &MleFit) -> Value {
    json!({
        "algorithm": fit.algorithm,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "evaluations": fit.evaluations,
        "nll": fit.nll_at_opt,
        "start": params(&fit.start),
    })
}

fn brcal_document(r: &BrcalResult) -> Value {
    let iterations: Vec<Value> = r
        .trace
        .iterations
        .iter()
        .map(|it| json!({ "x": it.params, "f": it.objective, "g": it.constraint }))
        .collect();
    json!({
        "Pmc": r.prior_mc,
        "t": r.t,
        "BR_params": params(&r.params),
        "sb": r.sb,
        "probs": r.probs,
        "posterior_model_prob": r.posterior,
        "status": r.trace.status,
        "MLEs": params(&r.base_mles),
        "optim_details": {
            "outer_iterations": r.trace.outer_iterations,
            "evaluations": r.trace.evaluations,
            "restored": r.trace.restored,
            "penalty_history": r.trace.penalty_history,
            "multiplier_history": r.trace.multiplier_history,
            "iterations": iterations,
            "mle_fit": fit_details(&r.base_fit),
        },
    })
}

/// `id,prob` rows, ids starting at 1.
fn probs_csv(probs: &[f64]) -> String {
    let mut out = String::from("id,prob\n");
    for (i, p) in probs.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, p));
    }
    out
}

fn only(format: Format, allowed: &[Format], command: &str) -> Result<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{command} does not support --format {format:?}"
        )))
    }
}

fn pretty(doc: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

fn thinning(
    thin_to: Option<usize>,
    thin_prop: Option<f64>,
    thin_by: Option<usize>,
    seed: u64,
) -> ThinningSpec {
    let mode = match (thin_to, thin_prop, thin_by) {
        (Some(n), _, _) => Thinning::To(n),
        (_, Some(p), _) => Thinning::Prop(p),
        (_, _, Some(s)) => Thinning::By(s),
        _ => Thinning::None,
    };
    ThinningSpec { mode, seed }
}

pub fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    validate_prior(c.prior_mc)?;
    let config = optimizer_config(c)?;
    let text = match &cli.command {
        Command::Assess => {
            only(c.format, &[Format::Json], "assess")?;
            let a = bayes_ms(&load(c)?, c.prior_mc, &config)?;
            pretty(&json!({
                "Pmc": a.prior_mc,
                "BIC_Mc": a.bic_c,
                "BIC_Mu": a.bic_u,
                "log_BF": a.log_bf,
                "BF": a.bayes_factor(),
                "posterior_model_prob": a.posterior_prob,
                "MLEs": params(&a.mles),
                "optim_details": fit_details(&a.fit),
            }))?
        }
        Command::Lrt => {
            only(c.format, &[Format::Json], "lrt")?;
            let r = llo_lrt(&load(c)?, &config)?;
            pretty(&json!({
                "test_stat": r.test_stat,
                "pval": r.pval,
                "MLEs": params(&r.mles),
                "optim_details": fit_details(&r.fit),
            }))?
        }
        Command::MleRecal => {
            only(c.format, &[Format::Json, Format::Csv], "mle-recal")?;
            let (probs, fit) = mle_recal(&load(c)?, &config)?;
            match c.format {
                Format::Csv => probs_csv(&probs),
                _ => pretty(&json!({
                    "probs": probs,
                    "MLEs": params(&fit.params),
                    "optim_details": fit_details(&fit),
                }))?,
            }
        }
        Command::Brcal { t } => {
            only(c.format, &[Format::Json], "brcal")?;
            let r = brcal(&load(c)?, *t, c.prior_mc, &config)?;
            pretty(&brcal_document(&r))?
        }
        Command::Surface {
            kind,
            dlim,
            glim,
            k,
            contours,
        } => {
            let data = load(c)?;
            let (surface, fit) = match kind {
                Kind::Posterior => {
                    let fit = fit_mle(&data, &config)?;
                    let s = posterior_surface_with_fit(&data, &fit, *dlim, *glim, *k, c.prior_mc)?;
                    (s, Some(fit))
                }
                Kind::Boldness => (boldness_surface(&data, *dlim, *glim, *k)?, None),
            };
            let sets = extract_contours(&surface, contours);
            match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    surface.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv output is UTF-8")
                }
                Format::Svg => {
                    let markers: Vec<Marker> = fit
                        .iter()
                        .map(|f| Marker {
                            delta: f.params.delta,
                            gamma: f.params.gamma,
                            label: "MLE".into(),
                        })
                        .collect();
                    render_surface_svg(&surface, &sets, &markers, &PlotStyle::default())
                }
                Format::Json => {
                    let refine = match kind {
                        Kind::Posterior => {
                            serde_json::to_value(grid_refine_suggestion(&data, &surface, &config)?)?
                        }
                        Kind::Boldness => Value::Null,
                    };
                    pretty(&json!({
                        "kind": surface.kind,
                        "Pmc": surface.prior_mc,
                        "dlim": [surface.dlim.0, surface.dlim.1],
                        "glim": [surface.glim.0, surface.glim.1],
                        "k": surface.k,
                        "deltas": surface.deltas,
                        "gammas": surface.gammas,
                        "values": surface.values,
                        "flags": surface.flags,
                        "MLEs": fit.as_ref().map(|f| params(&f.params)),
                        "contours": sets,
                        "refine": refine,
                    }))?
                }
            }
        }
        Command::Lineplot {
            t_levels,
            thin_to,
            thin_prop,
            thin_by,
            seed,
            no_original,
            no_mle,
            table,
        } => {
            let table = match table {
                Some(path) => LineplotTable::read_csv(File::open(path)?)?,
                None => lineplot_table(
                    &load(c)?,
                    t_levels,
                    !no_original,
                    !no_mle,
                    thinning(*thin_to, *thin_prop, *thin_by, *seed),
                    c.prior_mc,
                    &config,
                )?,
            };
            match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv output is UTF-8")
                }
                Format::Svg => render_lineplot_svg(&table, &PlotStyle::default())?,
                Format::Json => pretty(&serde_json::to_value(&table)?)?,
            }
        }
        Command::Llo { delta, gamma } => {
            only(c.format, &[Format::Json, Format::Csv], "llo")?;
            let p = LloParams::new(*delta, *gamma)?;
            let x = read_probabilities(File::open(input_path(c)?)?, &c.x_col, c.epsilon)?;
            let probs = llo_adjust(&x, &p);
            match c.format {
                Format::Csv => probs_csv(&probs),
                _ => pretty(&json!({ "params": params(&p), "probs": probs }))?,
            }
        }
    };
    match &c.output {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
