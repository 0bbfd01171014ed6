//! Coin misspecification: a two-coin prior observing a fair coin, with
//! every quantity averaged exactly over the Binomial(n, true_p) outcome
//! distribution. Fully deterministic — the seed is unused.

use anyhow::Result;
use finite_bayes::coins::{misspecified_sweep, CoinPrior};
use finite_bayes::export::{write_coin_detail_csv, write_coin_summary_csv};
use serde::{Deserialize, Serialize};

use super::RunContext;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Head probabilities of the latent coins.
    pub head_probs: Vec<f64>,
    /// Optional unnormalized log prior weights (uniform when absent).
    pub prior_log_weights: Option<Vec<f64>>,
    /// Head probability of the data-generating coin.
    pub true_p: f64,
    /// Context sizes (number of observed flips).
    pub n_values: Vec<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            head_probs: vec![0.3, 0.6],
            prior_log_weights: None,
            true_p: 0.5,
            n_values: (0..=10).map(|e| 1u64 << e).collect(),
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = CoinPrior::new(config.head_probs.clone(), config.prior_log_weights.clone())?;
    let result = misspecified_sweep(&prior, config.true_p, &config.n_values)?;

    write_coin_summary_csv(ctx.create("coin_summary.csv")?, &result)?;
    write_coin_detail_csv(ctx.create("coin_detail.csv")?, &prior, &result)?;

    println!("{:>8}  {:>14}", "n", "avg_predictive");
    for (&n, &p) in result.n_values.iter().zip(&result.avg_predictive) {
        println!("{n:>8}  {p:>14.10}");
    }
    Ok(serde_json::to_value(&config)?)
}
