//! Sine-prior flatness: condition the sine prior on noiseless samples of a
//! sine the prior cannot represent (different frequency). On a symmetric
//! midpoint design the residual power is identical for every phase, so the
//! posterior stays uniform and the predictive mean is flat. Deterministic —
//! the seed is unused.

use anyhow::Result;
use finite_bayes::data::Dataset;
use finite_bayes::export::{write_posterior_csv, write_ppd_csv};
use finite_bayes::posterior::posterior;
use finite_bayes::ppd::{ppd, PpdOptions};
use finite_bayes::prior::{grid, PriorFamily, PriorSpec};
use serde::{Deserialize, Serialize};

use super::{midpoints, write_context_csv, RunContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n_context: usize,
    /// Context x-range (midpoint design over this interval).
    pub x_range: [f64; 2],
    /// Target: y = amplitude · sin(2π · cycles · x).
    pub amplitude: f64,
    pub cycles: f64,
    pub prior: PriorSpec,
    pub n_queries: usize,
    pub query_range: [f64; 2],
    pub posterior_top_k: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_context: 50,
            x_range: [-1.0, 1.0],
            amplitude: 0.2,
            cycles: 1.0,
            prior: PriorSpec::family(PriorFamily::Sine),
            n_queries: 1001,
            query_range: [0.0, 1.0],
            posterior_top_k: 101,
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = config.prior.build::<f64>()?;

    let xs = midpoints(config.x_range[0], config.x_range[1], config.n_context);
    let data = Dataset::from_pairs(xs.into_iter().map(|x| {
        let y = config.amplitude * (std::f64::consts::TAU * config.cycles * x).sin();
        (x, y)
    }))?;

    let weights = posterior(&prior, &data)?;
    let queries = grid(config.query_range[0], config.query_range[1], config.n_queries);
    let result = ppd(&prior, &weights, &queries, &PpdOptions::default())?;

    write_context_csv(ctx, "context.csv", &data)?;
    write_ppd_csv(ctx.create("ppd.csv")?, &result)?;
    write_posterior_csv(
        ctx.create("posterior_top.csv")?,
        &prior,
        &weights,
        config.posterior_top_k,
    )?;

    let avg = result.mean.iter().sum::<f64>() / result.mean.len() as f64;
    let max_dev = result
        .mean
        .iter()
        .map(|m| (m - avg).abs())
        .fold(0.0f64, f64::max);
    let w_min = weights.log_weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_max = weights.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "max |PPD mean - average| over queries: {max_dev:.5} (amplitude {})",
        config.amplitude
    );
    println!("posterior log-weight spread: [{w_min:.6}, {w_max:.6}]");
    Ok(serde_json::to_value(&config)?)
}
