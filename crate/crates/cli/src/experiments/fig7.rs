//! Likelihood threshold: two horizontal segments pulled apart by a growing
//! separation d, scored by the marginal evidence of the line prior. The
//! same noise draws are reused across separations (common random numbers),
//! so the evidence comparison isolates the geometry. Seeded: segment noise.

use anyhow::Result;
use finite_bayes::data::Dataset;
use finite_bayes::posterior::marginal_evidence;
use finite_bayes::prior::{PriorFamily, PriorSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{midpoints, write_context_csv, RunContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Vertical separations d; segments sit at ∓d/2.
    pub separations: Vec<f64>,
    pub points_per_segment: usize,
    /// x-extent of the lower-left and upper-right segments.
    pub left_x: [f64; 2],
    pub right_x: [f64; 2],
    /// Observation-noise standard deviation of the generated context.
    pub noise_sigma_data: f64,
    pub prior: PriorSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            separations: vec![0.5, 1.0, 1.5, 2.0],
            points_per_segment: 10,
            left_x: [0.0, 0.45],
            right_x: [0.55, 1.0],
            noise_sigma_data: 0.1,
            prior: PriorSpec::family(PriorFamily::Line),
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let prior = config.prior.build::<f64>()?;
    let mut rng = ctx.rng();

    let left_xs = midpoints(config.left_x[0], config.left_x[1], config.points_per_segment);
    let right_xs = midpoints(config.right_x[0], config.right_x[1], config.points_per_segment);
    let noise: Vec<f64> = (0..2 * config.points_per_segment)
        .map(|_| config.noise_sigma_data * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();

    let dataset_for = |d: f64| -> Result<Dataset<f64>> {
        let pairs = left_xs
            .iter()
            .map(|&x| (x, -d / 2.0))
            .chain(right_xs.iter().map(|&x| (x, d / 2.0)))
            .zip(&noise)
            .map(|((x, y), &e)| (x, y + e));
        Ok(Dataset::from_pairs(pairs)?)
    };

    let mut evidences = Vec::new();
    let mut w = csv::Writer::from_writer(ctx.create("evidence.csv")?);
    w.write_record(["separation", "log_evidence"])?;
    for &d in &config.separations {
        let data = dataset_for(d)?;
        let ev = marginal_evidence(&prior, &data)?;
        w.write_record([format!("{d}"), format!("{ev}")])?;
        evidences.push(ev);
    }
    w.flush()?;

    if let Some(&d) = config.separations.last() {
        write_context_csv(ctx, "context.csv", &dataset_for(d)?)?;
    }

    println!("{:>12}  {:>14}", "separation", "log_evidence");
    for (&d, &ev) in config.separations.iter().zip(&evidences) {
        println!("{d:>12.2}  {ev:>14.4}");
    }
    let strictly_decreasing = evidences.windows(2).all(|p| p[1] < p[0]);
    println!("strictly decreasing: {strictly_decreasing}");
    Ok(serde_json::to_value(&config)?)
}
