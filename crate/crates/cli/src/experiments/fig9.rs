//! Mixture degradation: sloped-sine data under the sine/line mixture. As
//! the context grows, the posterior abandons the sine class for the best
//! compromise line. Context sets are nested prefixes of one master sample
//! whose inputs follow a low-discrepancy sequence, so every size covers the
//! interval evenly and larger contexts strictly add information. Seeded:
//! observation noise.

use anyhow::Result;
use finite_bayes::data::Dataset;
use finite_bayes::latent::Latent;
use finite_bayes::posterior::posterior;
use finite_bayes::prior::{PriorFamily, PriorSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{low_discrepancy, write_context_csv, RunContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Target: y = amplitude · sin(2π · cycles · x) + slope · x + noise.
    pub amplitude: f64,
    pub cycles: f64,
    pub slope: f64,
    pub noise_sigma_data: f64,
    /// Observation interval covered by every context prefix.
    pub x_range: [f64; 2],
    /// Context sizes; each is a prefix of one master sample.
    pub n_values: Vec<usize>,
    pub prior: PriorSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            amplitude: 0.2,
            cycles: 1.5,
            slope: 0.3,
            noise_sigma_data: 0.1,
            x_range: [0.0, 1.0],
            n_values: vec![10, 25, 50, 100],
            prior: PriorSpec::family(PriorFamily::SineLineMixture),
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = config.prior.build::<f64>()?;
    let [lo, hi] = config.x_range;
    let mut rng = ctx.rng();

    let n_sine = prior
        .latents()
        .iter()
        .filter(|l| matches!(l, Latent::Sine { .. }))
        .count();
    anyhow::ensure!(
        n_sine > 0 && n_sine < prior.len(),
        "prior must mix sine and line latents"
    );

    let n_max = config.n_values.iter().copied().max().unwrap_or(0);
    let master: Vec<(f64, f64)> = low_discrepancy(lo, hi, n_max)
        .into_iter()
        .map(|x| {
            let clean = config.amplitude * (std::f64::consts::TAU * config.cycles * x).sin()
                + config.slope * x;
            let eps: f64 = rng.sample(rand_distr::StandardNormal);
            (x, clean + config.noise_sigma_data * eps)
        })
        .collect();

    let mut w = csv::Writer::from_writer(ctx.create("class_mass.csv")?);
    w.write_record(["n_context", "sine_mass", "line_mass", "log_gap"])?;
    let mut rows = Vec::new();
    for &n in &config.n_values {
        let data = Dataset::from_pairs(master[..n].iter().copied())?;
        let weights = posterior(&prior, &data)?;
        let sine_mass = weights.mass_of_range(0..n_sine);
        let line_mass = weights.mass_of_range(n_sine..prior.len());
        let best_sine = weights.log_weights[..n_sine]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let best_line = weights.log_weights[n_sine..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let log_gap = best_line - best_sine;
        w.write_record([
            n.to_string(),
            format!("{sine_mass}"),
            format!("{line_mass}"),
            format!("{log_gap}"),
        ])?;
        rows.push((n, sine_mass, line_mass, log_gap));
    }
    w.flush()?;

    write_context_csv(ctx, "context.csv", &Dataset::from_pairs(master)?)?;

    println!(
        "{:>9}  {:>10}  {:>10}  {:>10}",
        "n_context", "sine_mass", "line_mass", "log_gap"
    );
    for (n, s, l, g) in &rows {
        println!("{n:>9}  {s:>10.4}  {l:>10.4}  {g:>10.3}");
    }
    Ok(serde_json::to_value(&config)?)
}
