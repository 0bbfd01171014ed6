//! GP baseline: an RBF GP fit to noiseless samples of a step function
//! becomes more confidently wrong as the context grows, while a
//! well-specified constant target keeps near-full coverage. Deterministic —
//! the seed is unused.

use anyhow::Result;
use finite_bayes::export::{write_gp_coverage_csv, write_gp_prediction_csv};
use finite_bayes::gp::{gp_step_experiment, GpConfig};
use finite_bayes::prior::LatentSpec;
use serde::{Deserialize, Serialize};

use super::RunContext;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gp: GpConfig<f64>,
    /// Misspecified target the GP observes noiselessly.
    pub target: LatentSpec,
    /// Well-specified control target.
    pub control: LatentSpec,
    pub n_values: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            gp: GpConfig::default(),
            target: LatentSpec {
                family: "step".into(),
                params: vec![0.5, 0.0, 1.0],
            },
            control: LatentSpec {
                family: "line".into(),
                params: vec![0.5, 0.0],
            },
            n_values: vec![10, 25, 50, 100, 200, 400],
        }
    }
}

pub fn default_config() -> serde_json::Value {
    serde_json::to_value(Config::default()).expect("config serializes")
}

pub fn run(ctx: &RunContext) -> Result<serde_json::Value> {
    let config: Config = ctx.parse()?;
    let target = config.target.to_latent::<f64>()?;
    let control = config.control.to_latent::<f64>()?;

    let rows = gp_step_experiment(&config.gp, &config.n_values, &target)?;
    let control_rows = gp_step_experiment(&config.gp, &config.n_values, &control)?;

    write_gp_coverage_csv(ctx.create("gp_coverage.csv")?, &rows)?;
    write_gp_coverage_csv(ctx.create("gp_control_coverage.csv")?, &control_rows)?;
    for row in &rows {
        let name = format!("gp_predictions_n{}.csv", row.n_context);
        write_gp_prediction_csv(ctx.create(&name)?, row)?;
    }

    println!(
        "{:>9}  {:>12}  {:>14}  {:>16}",
        "n_context", "coverage_95", "mean_abs_error", "control_coverage"
    );
    for (row, ctrl) in rows.iter().zip(&control_rows) {
        println!(
            "{:>9}  {:>12.4}  {:>14.4}  {:>16.4}",
            row.n_context, row.coverage_95, row.mean_abs_error, ctrl.coverage_95
        );
    }
    Ok(serde_json::to_value(&config)?)
}
