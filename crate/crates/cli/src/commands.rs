//! The six subcommands. Every primary output embeds the resolved config —
//! as a `config` object in JSON, as leading `#` comment lines in CSV — so a
//! result file is enough to reproduce the run. All randomness is seeded and
//! outputs are byte-identical across reruns and worker counts.

use std::fmt::Write as _;

use serde_json::json;

use tradetherm::impact::default_convexity_tol;
use tradetherm::thermo::pnl_statistics;
use tradetherm::{
    bound_violation_report, calibrate_beta, convexity_test, estimate_impact_curve,
    estimate_work_variance, pnl_samples, realized_pnl, simulate, synthesize_tape, BetaEstimate,
    GibbsState, OffsetSource, StrategyEnsemble,
};

use crate::config::{parse_f64_list, Config};
use crate::error::CliError;

pub fn run(command: &str, cfg: &Config) -> Result<(), CliError> {
    let body = match command {
        "analyze" => cmd_analyze(cfg)?,
        "simulate" => cmd_simulate(cfg)?,
        "ensemble" => cmd_ensemble(cfg)?,
        "calibrate" => cmd_calibrate(cfg)?,
        "pipeline" => cmd_pipeline(cfg)?,
        "sweep" => cmd_sweep(cfg)?,
        other => return Err(CliError::config(format!("unknown command `{other}`"))),
    };
    emit(cfg, &body)
}

enum Format {
    Json,
    Csv,
}

// Shortest round-trip float text, with e-notation for extreme magnitudes
// (std Display would spell out hundreds of zeros). Matches the JSON output.
fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        x.to_string()
    }
}

fn format(cfg: &Config) -> Result<Format, CliError> {
    match cfg.get("format").unwrap_or("json") {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        other => Err(CliError::config(format!("`format` must be json or csv, got `{other}`"))),
    }
}

fn emit(cfg: &Config, body: &str) -> Result<(), CliError> {
    match cfg.get("out") {
        Some(path) => {
            let full = cfg.resolve_path(path);
            std::fs::write(&full, body).map_err(|e| {
                CliError::runtime(format!("cannot write {}: {e}", full.display()))
            })?;
            eprintln!("wrote {}", full.display());
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn json_output(cfg: &Config, command: &str, result: serde_json::Value) -> String {
    let doc = json!({
        "command": command,
        "config": cfg.echo_json(),
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn cmd_analyze(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model()?;
    let strategy = cfg.strategy()?;
    let stats = pnl_statistics(&model, &strategy, cfg.sigma()?)?;
    Ok(match format(cfg)? {
        Format::Json => json_output(cfg, "analyze", serde_json::to_value(&stats).unwrap()),
        Format::Csv => {
            let mut out = cfg.echo_comment_block("analyze");
            out.push_str(
                "work,variance_term,sigma,mean_pnl,pnl_variance,profit_prob_exact,chernoff_bound,beta_v\n",
            );
            let beta_v = stats.beta_v.map(num).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(stats.work),
                num(stats.variance_term),
                num(stats.sigma),
                num(stats.mean_pnl),
                num(stats.pnl_variance),
                num(stats.profit_prob_exact),
                num(stats.chernoff_bound),
                beta_v
            );
            out
        }
    })
}

fn cmd_simulate(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model()?;
    let strategy = cfg.strategy()?;
    let sim = cfg.sim()?;
    eprintln!("simulating {} paths at dt {} (seed {})", sim.n_paths, sim.dt, sim.seed);
    let result = simulate(&model, &strategy, &sim)?;

    if let Some(path) = cfg.get("sim.dump_paths") {
        let samples = pnl_samples(&model, &strategy, &sim)?;
        let mut dump = String::with_capacity(samples.len() * 20 + 4);
        dump.push_str("pnl\n");
        for &p in &samples {
            let _ = writeln!(dump, "{}", num(p));
        }
        let full = cfg.resolve_path(path);
        std::fs::write(&full, dump)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", full.display())))?;
        eprintln!("dumped {} path P&Ls to {}", samples.len(), full.display());
    }

    Ok(match format(cfg)? {
        Format::Json => json_output(cfg, "simulate", serde_json::to_value(&result).unwrap()),
        Format::Csv => {
            let mut out = cfg.echo_comment_block("simulate");
            out.push_str(
                "n_paths,mean_pnl,mean_pnl_se,pnl_variance,pnl_variance_se,profit_frequency,\
                 profit_frequency_se,skewness,max_decomposition_residual\n",
            );
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                result.n_paths,
                num(result.mean_pnl),
                num(result.mean_pnl_se),
                num(result.pnl_variance),
                num(result.pnl_variance_se),
                num(result.profit_frequency),
                num(result.profit_frequency_se),
                num(result.skewness),
                num(result.max_decomposition_residual)
            );
            out
        }
    })
}

fn load_ensemble(cfg: &Config, key: &str) -> Result<(StrategyEnsemble, Option<Vec<f64>>), CliError> {
    let path = cfg
        .get(key)
        .ok_or_else(|| CliError::config(format!("missing required key `{key}`")))?;
    let full = cfg.resolve_path(path);
    let file = std::fs::File::open(&full)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", full.display())))?;
    Ok(StrategyEnsemble::from_csv(file)?)
}

fn cmd_ensemble(cfg: &Config) -> Result<String, CliError> {
    let (ens, _counts) = load_ensemble(cfg, "ensemble.works")?;
    let betas: Vec<f64> = match (cfg.get("ensemble.beta"), cfg.get("ensemble.beta_grid")) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "give `ensemble.beta` or `ensemble.beta_grid`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::config(
                "missing inverse temperature: set `ensemble.beta` or `ensemble.beta_grid`".into(),
            ))
        }
        (Some(_), None) => vec![cfg.require_f64("ensemble.beta")?],
        (None, Some(list)) => parse_f64_list("ensemble.beta_grid", list)?,
    };
    let states: Vec<GibbsState> =
        betas.iter().map(|&b| ens.gibbs(b)).collect::<Result<_, _>>()?;

    Ok(match format(cfg)? {
        Format::Json => {
            let value = if states.len() == 1 && cfg.get("ensemble.beta").is_some() {
                serde_json::to_value(&states[0]).unwrap()
            } else {
                serde_json::to_value(&states).unwrap()
            };
            json_output(cfg, "ensemble", value)
        }
        Format::Csv => {
            let mut out = cfg.echo_comment_block("ensemble");
            out.push_str("beta,logZ,free_energy,mean_work,entropy,work_variance");
            for label in ens.labels() {
                let _ = write!(out, ",p_{label}");
            }
            out.push('\n');
            for s in &states {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{}",
                    num(s.beta),
                    num(s.log_z),
                    num(s.free_energy),
                    num(s.mean_work),
                    num(s.entropy),
                    num(s.work_variance)
                );
                for &p in &s.probabilities {
                    let _ = write!(out, ",{}", num(p));
                }
                out.push('\n');
            }
            out
        }
    })
}

fn cmd_calibrate(cfg: &Config) -> Result<String, CliError> {
    let (ens, counts) = load_ensemble(cfg, "calibrate.works")?;
    let counts = counts.ok_or_else(|| {
        CliError::config("calibration input must carry a count column (`label,work,count`)".into())
    })?;
    let estimate = calibrate_beta(&ens, &counts)?;
    let status = match &estimate {
        BetaEstimate::Fitted(_) => "fitted",
        BetaEstimate::AtArgmin => "at_argmin",
        BetaEstimate::OutOfRange => "out_of_range",
    };
    Ok(match format(cfg)? {
        Format::Json => json_output(
            cfg,
            "calibrate",
            json!({
                "status": status,
                "beta_hat": estimate.fitted(),
                "detail": estimate.to_string(),
            }),
        ),
        Format::Csv => {
            let mut out = cfg.echo_comment_block("calibrate");
            out.push_str("status,beta_hat\n");
            let beta = estimate.fitted().map(num).unwrap_or_default();
            let _ = writeln!(out, "{status},{beta}");
            out
        }
    })
}

fn cmd_pipeline(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model()?;
    let strategy = cfg.strategy()?;
    let sigma = cfg.sigma()?;
    let n_tapes = cfg.require_u64("pipeline.n_tapes")? as usize;
    if n_tapes == 0 {
        return Err(CliError::config("`pipeline.n_tapes` must be at least 1".into()));
    }
    let dt = cfg.require_f64("pipeline.dt")?;
    let bins = cfg.require_u64("pipeline.bins")? as usize;
    let seed = cfg.require_u64("pipeline.seed")?;

    eprintln!("synthesizing {n_tapes} tapes at dt {dt} (seed {seed})");
    let mut tapes = Vec::with_capacity(n_tapes);
    for i in 0..n_tapes {
        let tape = synthesize_tape(&model, &strategy, sigma, dt, seed + i as u64)?;
        let pnl = realized_pnl(&tape, &model)?;
        tapes.push((tape, pnl));
    }

    let curve = estimate_impact_curve(&tapes[0].0, bins, OffsetSource::Annotated)?;
    let slope = curve.linear_slope()?;
    let convexity = convexity_test(&curve, default_convexity_tol(&curve.cost_curve))?;
    let (work_estimate, variance_estimate) = estimate_work_variance(&tapes[0].0, &model)?;
    let bounds = bound_violation_report(&tapes, &model, sigma)?;

    Ok(match format(cfg)? {
        Format::Json => json_output(
            cfg,
            "pipeline",
            json!({
                "curve": curve,
                "slope": slope,
                "convexity": convexity,
                "work_estimate": work_estimate,
                "variance_estimate": variance_estimate,
                "bounds": bounds,
            }),
        ),
        Format::Csv => {
            // The flat table view is the per-tape bound report; curve and
            // estimator scalars ride along as comments.
            let mut out = cfg.echo_comment_block("pipeline");
            let _ = writeln!(out, "# slope = {}", num(slope));
            let _ = writeln!(out, "# is_convex = {}", convexity.is_convex);
            let _ = writeln!(out, "# work_estimate = {}", num(work_estimate));
            let _ = writeln!(out, "# variance_estimate = {}", num(variance_estimate));
            let _ = writeln!(out, "# profitable_frequency = {}", num(bounds.profitable_frequency));
            out.push_str(&bounds.to_csv_string());
            out
        }
    })
}

// parameter name -> config key it overrides
const SWEEP_PARAMETERS: &[(&str, &str)] = &[
    ("cycles", "strategy.cycles"),
    ("eta", "temp.eta"),
    ("horizon", "strategy.horizon"),
    ("peak_rate", "strategy.peak_rate"),
    ("sigma", "sigma"),
];

fn cmd_sweep(cfg: &Config) -> Result<String, CliError> {
    let parameter = cfg
        .get("sweep.parameter")
        .ok_or_else(|| CliError::config("missing required key `sweep.parameter`".into()))?
        .to_string();
    let key = SWEEP_PARAMETERS
        .iter()
        .find(|(name, _)| *name == parameter)
        .map(|(_, key)| *key)
        .ok_or_else(|| {
            let names: Vec<&str> = SWEEP_PARAMETERS.iter().map(|(n, _)| *n).collect();
            CliError::config(format!(
                "unknown sweep parameter `{parameter}`; expected one of {}",
                names.join(", ")
            ))
        })?;
    let grid_text = cfg
        .get("sweep.grid")
        .ok_or_else(|| CliError::config("missing required key `sweep.grid`".into()))?;
    if grid_text.trim().is_empty() {
        return Err(CliError::config("`sweep.grid` is empty".into()));
    }
    let grid = parse_f64_list("sweep.grid", grid_text)?;
    if cfg.get("strategy.csv").is_some() && key.starts_with("strategy.") {
        return Err(CliError::config(format!(
            "sweep parameter `{parameter}` needs a builder strategy, not `strategy.csv`"
        )));
    }

    eprintln!("sweeping {parameter} over {} values", grid.len());
    let with_cycles_sq = parameter == "cycles";
    let mut rows = Vec::with_capacity(grid.len());
    for &value in &grid {
        let entry = if parameter == "cycles" {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(CliError::config(format!(
                    "`sweep.grid`: cycles must be positive integers, got {value}"
                )));
            }
            format!("{}", value as u64)
        } else {
            value.to_string()
        };
        let mut point = cfg.clone();
        point.override_entry(key, entry);
        let stats = pnl_statistics(&point.model()?, &point.strategy()?, point.sigma()?)?;
        rows.push((value, stats));
    }

    Ok(match format(cfg)? {
        Format::Json => {
            let result: Vec<serde_json::Value> = rows
                .iter()
                .map(|(value, stats)| {
                    let mut obj = json!({
                        "parameter": parameter,
                        "value": value,
                        "stats": stats,
                    });
                    if with_cycles_sq {
                        obj["variance_x_cycles_sq"] =
                            json!(stats.variance_term * value * value);
                    }
                    obj
                })
                .collect();
            json_output(cfg, "sweep", serde_json::Value::Array(result))
        }
        Format::Csv => {
            let mut out = cfg.echo_comment_block("sweep");
            out.push_str(
                "parameter,value,work,variance_term,pnl_variance,profit_prob_exact,chernoff_bound",
            );
            if with_cycles_sq {
                out.push_str(",variance_x_cycles_sq");
            }
            out.push('\n');
            for &(value, ref stats) in &rows {
                let _ = write!(
                    out,
                    "{parameter},{},{},{},{},{},{}",
                    num(value),
                    num(stats.work),
                    num(stats.variance_term),
                    num(stats.pnl_variance),
                    num(stats.profit_prob_exact),
                    num(stats.chernoff_bound)
                );
                if with_cycles_sq {
                    let _ = write!(out, ",{}", num(stats.variance_term * value * value));
                }
                out.push('\n');
            }
            out
        }
    })
}
