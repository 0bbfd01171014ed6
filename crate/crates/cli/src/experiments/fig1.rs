//! Step-prior smoothing: condition the full step prior on noiseless samples
//! of an on-grid step function with the region around the jump excluded,
//! then export the posterior-predictive curve across the gap. Deterministic
//! — the seed is unused.

use anyhow::Result;
use finite_bayes::data::Dataset;
use finite_bayes::export::{write_posterior_csv, write_ppd_csv};
use finite_bayes::posterior::posterior;
use finite_bayes::ppd::{ppd, PpdOptions};
use finite_bayes::prior::{grid, LatentSpec, PriorFamily, PriorSpec};
use serde::{Deserialize, Serialize};

use super::{midpoints, write_context_csv, RunContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Function the context is sampled from (noiselessly).
    pub target: LatentSpec,
    /// Context x-range; the two context segments flank the gap inside it.
    pub x_range: [f64; 2],
    /// Excluded interval around the target's jump.
    pub gap: [f64; 2],
    /// Context points on each side of the gap (0 = empty context).
    pub points_per_side: usize,
    pub prior: PriorSpec,
    pub n_queries: usize,
    pub query_range: [f64; 2],
    /// Posterior rows exported before the remaining-mass row.
    pub posterior_top_k: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            target: LatentSpec {
                family: "step".into(),
                params: vec![0.5, -0.5, 1.0],
            },
            x_range: [0.0, 1.0],
            gap: [0.44, 0.56],
            points_per_side: 25,
            prior: PriorSpec::family(PriorFamily::Step),
            n_queries: 1001,
            query_range: [0.0, 1.0],
            posterior_top_k: 10_000,
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let target = config.target.to_latent::<f64>()?;
    let prior = config.prior.build::<f64>()?;

    let mut xs = midpoints(config.x_range[0], config.gap[0], config.points_per_side);
    xs.extend(midpoints(config.gap[1], config.x_range[1], config.points_per_side));
    let data = Dataset::from_pairs(xs.into_iter().map(|x| (x, target.eval(x))))?;

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

    let top = weights.log_weights[weights.argmax()].exp();
    println!(
        "{} latents | {} context points | evidence {:.4} | max posterior weight {:.3e}",
        prior.len(),
        data.len(),
        weights.evidence,
        top
    );
    let mid = result.mean[result.mean.len() / 2];
    println!("PPD mean at gap center: {mid:.4}");
    Ok(serde_json::to_value(&config)?)
}
