//! CSV serialization for every documented output schema, plus the CSV
//! reader for custom latent lists.
//!
//! All writers emit a header row and use the shortest round-trip decimal
//! representation for floats, so re-parsing a file recovers the exact
//! values that were written.

use std::io::Write;

use crate::latent::Latent;
use crate::ppd::{top_k_weights, PpdResult};
use crate::posterior::PosteriorWeights;
use crate::prior::FinitePrior;
use crate::scalar::Scalar;
use crate::{coins::CoinExperimentResult, coins::CoinPrior, gp::GpCoverageRow, mlp::SweepResult};
use crate::{Error, Result};

fn fmt<T: Scalar>(v: T) -> String {
    // The scalar's own Display is the shortest round-trip form (f32 values
    // would pick up spurious digits if widened to f64 first).
    format!("{v}")
}

/// Column name for a quantile level: `q05` / `q50` / `q95` for whole-percent
/// levels, otherwise the literal level (`q0.975`).
fn quantile_column_name(prob: f64) -> String {
    let pct = prob * 100.0;
    if (pct - pct.round()).abs() < 1e-9 && (1.0..=99.0).contains(&pct.round()) {
        format!("q{:02}", pct.round() as u32)
    } else {
        format!("q{prob}")
    }
}

/// Per-query PPD summary: `x,mean,variance` plus one column per requested
/// quantile level.
pub fn write_ppd_csv<T: Scalar, W: Write>(out: W, result: &PpdResult<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string(), "mean".into(), "variance".into()];
    for &p in &result.quantile_probs {
        header.push(quantile_column_name(p.as_f64()));
    }
    w.write_record(&header)?;
    for i in 0..result.query_xs.len() {
        let mut row = vec![
            fmt(result.query_xs[i]),
            fmt(result.mean[i]),
            fmt(result.variance[i]),
        ];
        for q in &result.quantiles {
            row.push(fmt(q[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// PPD density matrix: header row is `x` followed by the y-grid; each data
/// row is a query x followed by the density at every y. Fails if the result
/// was computed without a density grid.
pub fn write_density_csv<T: Scalar, W: Write>(out: W, result: &PpdResult<T>) -> Result<()> {
    let (y_grid, density) = match (&result.y_grid, &result.density) {
        (Some(y), Some(d)) => (y, d),
        _ => {
            return Err(Error::InvalidParameter(
                "PPD result has no density matrix; request one in PpdOptions".into(),
            ))
        }
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(y_grid.iter().map(|&y| fmt(y)));
    w.write_record(&header)?;
    for (x, drow) in result.query_xs.iter().zip(density) {
        let mut row = vec![fmt(*x)];
        row.extend(drow.iter().map(|&d| fmt(d)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior weights, truncated to the `top_k` heaviest latents:
/// `latent_index,family,param1,param2,param3,weight`, ordered by descending
/// weight. The final row always has `latent_index` −1 and family `remaining`
/// and carries the total mass of every latent not listed.
pub fn write_posterior_csv<T: Scalar, W: Write>(
    out: W,
    prior: &FinitePrior<T>,
    weights: &PosteriorWeights<T>,
    top_k: usize,
) -> Result<()> {
    if weights.len() != prior.len() {
        return Err(Error::DimensionMismatch(format!(
            "posterior has {} weights but prior has {} latents",
            weights.len(),
            prior.len()
        )));
    }
    let (top, remaining) = top_k_weights(weights, top_k);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["latent_index", "family", "param1", "param2", "param3", "weight"])?;
    for (index, mass) in top {
        let latent = prior.latent(index).expect("index from top_k is in range");
        let params = latent.params();
        let mut row = vec![index.to_string(), latent.family().to_string()];
        for p in params {
            row.push(p.map(fmt).unwrap_or_default());
        }
        row.push(fmt(mass));
        w.write_record(&row)?;
    }
    w.write_record(["-1", "remaining", "", "", "", &fmt(remaining)])?;
    w.flush()?;
    Ok(())
}

/// Counting-sequence predictive table: `k,predictive` where `predictive` is
/// the posterior probability of heads after k consecutive heads.
pub fn write_counting_csv<W: Write>(out: W, ks: &[u64], predictive: &[f64]) -> Result<()> {
    if ks.len() != predictive.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} k values but {} predictive values",
            ks.len(),
            predictive.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "predictive"])?;
    for (&k, &p) in ks.iter().zip(predictive) {
        w.write_record([k.to_string(), fmt(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Coin-sweep summary: `n,avg_predictive` per context size.
pub fn write_coin_summary_csv<W: Write>(out: W, result: &CoinExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "avg_predictive"])?;
    for (&n, &p) in result.n_values.iter().zip(&result.avg_predictive) {
        w.write_record([n.to_string(), fmt(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Coin-sweep detail, one row per (context size, latent coin):
/// `n,latent_p,expected_log_likelihood,expected_posterior_mass`.
pub fn write_coin_detail_csv<W: Write>(
    out: W,
    prior: &CoinPrior,
    result: &CoinExperimentResult,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "latent_p", "expected_log_likelihood", "expected_posterior_mass"])?;
    for (i, &n) in result.n_values.iter().enumerate() {
        let lls = &result.avg_log_likelihood[i];
        let masses = &result.avg_posterior_mass[i];
        if lls.len() != prior.len() || masses.len() != prior.len() {
            return Err(Error::DimensionMismatch(format!(
                "sweep rows have {} entries but the prior has {} coins",
                lls.len(),
                prior.len()
            )));
        }
        for (j, &p) in prior.head_probs().iter().enumerate() {
            w.write_record([n.to_string(), fmt(p), fmt(lls[j]), fmt(masses[j])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// GP coverage summary: `n_context,coverage_95,mean_abs_error` per row.
pub fn write_gp_coverage_csv<T: Scalar, W: Write>(
    out: W,
    rows: &[GpCoverageRow<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_context", "coverage_95", "mean_abs_error"])?;
    for row in rows {
        w.write_record([
            row.n_context.to_string(),
            fmt(row.coverage_95),
            fmt(row.mean_abs_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Dense GP prediction dump for one context size: `x,mean,var`.
pub fn write_gp_prediction_csv<T: Scalar, W: Write>(
    out: W,
    row: &GpCoverageRow<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "mean", "var"])?;
    for i in 0..row.eval_xs.len() {
        w.write_record([fmt(row.eval_xs[i]), fmt(row.mean[i]), fmt(row.variance[i])])?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-sweep prediction matrix: header `seed` followed by the grid xs; one
/// row per model in sorted order, carrying the model's original seed index
/// and its predictions.
pub fn write_mlp_matrix_csv<T: Scalar, W: Write>(out: W, sweep: &SweepResult<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["seed".to_string()];
    header.extend(sweep.grid_xs.iter().map(|&x| fmt(x)));
    w.write_record(&header)?;
    for (seed, preds) in sweep.seed_order.iter().zip(&sweep.sorted_predictions) {
        let mut row = vec![seed.to_string()];
        row.extend(preds.iter().map(|&p| fmt(p)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Across-seed spread comparison between a deterministic-input sweep and a
/// noisy-input sweep: `x,std_deterministic,std_noisy`. The two sweeps must
/// share a grid.
pub fn write_mlp_std_csv<T: Scalar, W: Write>(
    out: W,
    deterministic: &SweepResult<T>,
    noisy: &SweepResult<T>,
) -> Result<()> {
    if deterministic.grid_xs != noisy.grid_xs {
        return Err(Error::DimensionMismatch(
            "sweeps were evaluated on different grids".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "std_deterministic", "std_noisy"])?;
    for i in 0..deterministic.grid_xs.len() {
        w.write_record([
            fmt(deterministic.grid_xs[i]),
            fmt(deterministic.std_per_x[i]),
            fmt(noisy.std_per_x[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a custom latent list from CSV with columns
/// `family,param1,param2,param3`. Families and their parameter columns:
/// `step` (threshold, base, jump), `sine` (phase), `line` (intercept,
/// slope). Unused trailing parameter cells may be empty or omitted.
pub fn read_latents_csv<T: Scalar, R: std::io::Read>(input: R) -> Result<Vec<Latent<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("family") {
        return Err(Error::Config(format!(
            "latent CSV must start with a `family` column, found {:?}",
            headers.get(0).unwrap_or("")
        )));
    }
    let mut latents = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 2; // 1-based, after the header
        let family = record.get(0).unwrap_or("").trim();
        let param = |idx: usize, name: &str| -> Result<T> {
            let cell = record.get(idx).map(str::trim).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                Error::Config(format!(
                    "row {row}: `{family}` needs a numeric `{name}` in column {}, found {cell:?}",
                    idx + 1
                ))
            })?;
            Ok(T::cast(v))
        };
        let latent = match family {
            "step" => Latent::Step {
                threshold: param(1, "threshold")?,
                base: param(2, "base")?,
                jump: param(3, "jump")?,
            },
            "sine" => Latent::Sine {
                phase: param(1, "phase")?,
            },
            "line" => Latent::Line {
                intercept: param(1, "intercept")?,
                slope: param(2, "slope")?,
            },
            other => {
                return Err(Error::Config(format!(
                    "row {row}: unknown latent family {other:?} (expected step, sine, or line)"
                )))
            }
        };
        latents.push(latent);
    }
    Ok(latents)
}
