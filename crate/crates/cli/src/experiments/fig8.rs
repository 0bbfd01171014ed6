//! Counting task: the posterior probability of heads after k consecutive
//! heads, under a uniform prior over the 99 percent-grid coins. Fully
//! deterministic — the seed is unused.

use anyhow::Result;
use finite_bayes::coins::{counting_curve, CoinPrior};
use finite_bayes::export::write_counting_csv;
use serde::{Deserialize, Serialize};

use super::RunContext;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Run lengths to evaluate.
    pub ks: Vec<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            ks: vec![1, 2, 4, 8, 16, 32, 64],
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = CoinPrior::percent_grid();
    let curve = counting_curve(&prior, &config.ks);

    write_counting_csv(ctx.create("counting.csv")?, &config.ks, &curve)?;

    println!("{:>6}  {:>10}", "k", "predictive");
    for (&k, &p) in config.ks.iter().zip(&curve) {
        println!("{k:>6}  {p:>10.4}");
    }
    Ok(serde_json::to_value(&config)?)
}
