//! Representability: a three-plateau "bump" can only be matched in mean by
//! averaging two step latents, but the posterior is a distribution over
//! single functions — the best 50/50 pair never collects real mass, and
//! more data does not help. Deterministic — the seed is unused.

use anyhow::Result;
use finite_bayes::data::Dataset;
use finite_bayes::export::{write_posterior_csv, write_ppd_csv};
use finite_bayes::posterior::posterior;
use finite_bayes::ppd::{ppd, PpdOptions};
use finite_bayes::prior::{grid, FinitePrior, LatentSpec, PriorFamily, PriorSpec};
use serde::{Deserialize, Serialize};

use super::{find_latent_index, midpoints, write_context_csv, RunContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Plateau heights on [x_lo, break0), [break0, break1), [break1, x_hi].
    pub plateaus: [f64; 3],
    pub breaks: [f64; 2],
    pub x_range: [f64; 2],
    /// Base context size (midpoint design); the experiment also runs with
    /// `more_factor` times as many points.
    pub n_context: usize,
    pub more_factor: usize,
    /// The two step latents whose 50/50 mixture matches the bump exactly.
    pub optimal_pair: [LatentSpec; 2],
    pub prior: PriorSpec,
    pub n_queries: usize,
    pub query_range: [f64; 2],
    pub posterior_top_k: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            plateaus: [0.5, 1.0, 0.5],
            breaks: [0.3, 0.7],
            x_range: [0.0, 1.0],
            n_context: 30,
            more_factor: 3,
            optimal_pair: [
                LatentSpec {
                    family: "step".into(),
                    params: vec![0.3, 0.0, 1.0],
                },
                LatentSpec {
                    family: "step".into(),
                    params: vec![0.7, 1.0, -1.0],
                },
            ],
            prior: PriorSpec::family(PriorFamily::StepExtended),
            n_queries: 1001,
            query_range: [0.0, 1.0],
            posterior_top_k: 10_000,
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

fn bump(config: &Config, x: f64) -> f64 {
    if x < config.breaks[0] {
        config.plateaus[0]
    } else if x < config.breaks[1] {
        config.plateaus[1]
    } else {
        config.plateaus[2]
    }
}

fn pair_mass(
    prior: &FinitePrior<f64>,
    config: &Config,
    data: &Dataset<f64>,
) -> Result<(f64, f64)> {
    let weights = posterior(prior, data)?;
    let mut mass = 0.0;
    for spec in &config.optimal_pair {
        let idx = find_latent_index(prior, &spec.to_latent()?)?;
        mass += weights.log_weights[idx].exp();
    }
    Ok((mass, weights.log_weights[weights.argmax()].exp()))
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = config.prior.build::<f64>()?;

    let make_dataset = |n: usize| -> Result<Dataset<f64>> {
        let xs = midpoints(config.x_range[0], config.x_range[1], n);
        Ok(Dataset::from_pairs(
            xs.into_iter().map(|x| (x, bump(&config, x))),
        )?)
    };
    let base = make_dataset(config.n_context)?;
    let more = make_dataset(config.n_context * config.more_factor)?;

    let (mass_base, top_base) = pair_mass(&prior, &config, &base)?;
    let (mass_more, _) = pair_mass(&prior, &config, &more)?;

    let mut w = csv::Writer::from_writer(ctx.create("pair_mass.csv")?);
    w.write_record(["n_context", "pair_mass"])?;
    w.write_record([base.len().to_string(), format!("{mass_base}")])?;
    w.write_record([more.len().to_string(), format!("{mass_more}")])?;
    w.flush()?;

    let weights = posterior(&prior, &base)?;
    let queries = grid(config.query_range[0], config.query_range[1], config.n_queries);
    let result = ppd(&prior, &weights, &queries, &PpdOptions::default())?;
    write_context_csv(ctx, "context.csv", &base)?;
    write_ppd_csv(ctx.create("ppd.csv")?, &result)?;
    write_posterior_csv(
        ctx.create("posterior_top.csv")?,
        &prior,
        &weights,
        config.posterior_top_k,
    )?;

    let peak = result.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "mass on the optimal 50/50 pair: {mass_base:.3e} at n={}, {mass_more:.3e} at n={}",
        base.len(),
        more.len()
    );
    println!(
        "single best latent mass {top_base:.3} | PPD mean peak {peak:.3} vs optimal-mixture peak {}",
        config.plateaus[1]
    );
    Ok(serde_json::to_value(&config)?)
}
