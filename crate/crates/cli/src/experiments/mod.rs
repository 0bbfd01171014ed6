//! Experiment registry and run plumbing: config resolution, output-file
//! bookkeeping, and the metadata sidecar.

use std::cell::RefCell;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use finite_bayes::data::Dataset;
use finite_bayes::latent::Latent;
use finite_bayes::prior::FinitePrior;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

mod fig1;
mod fig10;
mod fig2;
mod fig3;
mod fig4;
mod fig5;
mod fig6;
mod fig7;
mod fig8;
mod fig9;

pub struct ExperimentDef {
    pub id: &'static str,
    pub summary: &'static str,
    /// Seed used when neither `--seed` nor a config file provides one.
    /// Experiments without randomness ignore it (and say so in `describe`).
    pub default_seed: u64,
    pub default_config: fn() -> serde_json::Value,
    pub run: fn(&RunContext) -> Result<serde_json::Value>,
}

/// All experiments, in figure order.
pub fn registry() -> &'static [ExperimentDef] {
    &[
        ExperimentDef {
            id: "fig1-step-smooth",
            summary: "step-prior posterior predictive across a context gap (smooth transition)",
            default_seed: 0,
            default_config: fig1::default_config,
            run: fig1::run,
        },
        ExperimentDef {
            id: "fig2-sine-flat",
            summary: "sine-prior posterior predictive on an orthogonal target (flat mean)",
            default_seed: 0,
            default_config: fig2::default_config,
            run: fig2::run,
        },
        ExperimentDef {
            id: "fig3-sloped-sine",
            summary: "sine prior on sloped-sine data, with the exact-posterior NLL estimate",
            default_seed: 7,
            default_config: fig3::default_config,
            run: fig3::run,
        },
        ExperimentDef {
            id: "fig4-coin-misspec",
            summary: "two-coin prior under a fair coin: exact predictive and posterior sweep",
            default_seed: 0,
            default_config: fig4::default_config,
            run: fig4::run,
        },
        ExperimentDef {
            id: "fig5-representability",
            summary: "bump dataset under the step prior: mass on the best 50/50 pair",
            default_seed: 0,
            default_config: fig5::default_config,
            run: fig5::run,
        },
        ExperimentDef {
            id: "fig6-mlp-sweep",
            summary: "MLP seed sweeps on the two-point task, with and without input noise",
            default_seed: 0,
            default_config: fig6::default_config,
            run: fig6::run,
        },
        ExperimentDef {
            id: "fig7-likelihood-threshold",
            summary: "marginal evidence of the line prior as two segments pull apart",
            default_seed: 7,
            default_config: fig7::default_config,
            run: fig7::run,
        },
        ExperimentDef {
            id: "fig8-counting",
            summary: "percent-grid coin prior: predictive after k consecutive heads",
            default_seed: 0,
            default_config: fig8::default_config,
            run: fig8::run,
        },
        ExperimentDef {
            id: "fig9-mixture-degradation",
            summary: "sine/line mixture on sloped-sine data: class mass versus context size",
            default_seed: 22,
            default_config: fig9::default_config,
            run: fig9::run,
        },
        ExperimentDef {
            id: "fig10-gp-step",
            summary: "GP baseline on a step target: 95% coverage versus context size",
            default_seed: 0,
            default_config: fig10::default_config,
            run: fig10::run,
        },
    ]
}

pub fn find(id: &str) -> Result<&'static ExperimentDef> {
    registry()
        .iter()
        .find(|def| def.id == id)
        .ok_or_else(|| finite_bayes::Error::UnknownExperiment(id.into()).into())
}

/// Everything a single experiment run needs, plus bookkeeping of the files
/// it writes (collected into the metadata sidecar).
pub struct RunContext<'a> {
    pub config: &'a serde_json::Value,
    pub seed: u64,
    pub out_dir: &'a Path,
    written: RefCell<Vec<String>>,
}

impl RunContext<'_> {
    pub fn parse<C: DeserializeOwned>(&self) -> Result<C> {
        serde_json::from_value(self.config.clone()).context("invalid experiment config")
    }

    /// Open `name` inside the output directory for writing and record it in
    /// the metadata output list.
    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        self.written.borrow_mut().push(name.to_string());
        Ok(BufWriter::new(file))
    }

    /// The run's root RNG. Experiments that need several independent streams
    /// derive them with `set_stream`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Sidecar record written next to the data files. Feeding this file back to
/// `run --config` reproduces the data files byte for byte.
#[derive(Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub package: String,
    pub version: String,
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

pub fn run(
    id: &str,
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out_dir: Option<&Path>,
    jobs: Option<usize>,
) -> Result<()> {
    let def = find(id)?;
    let (config, config_seed) = load_config(def, config_path)?;
    let seed = seed_flag.or(config_seed).unwrap_or(def.default_seed);

    let out_buf: PathBuf = match out_dir {
        Some(dir) => dir.to_path_buf(),
        None => Path::new("out").join(def.id),
    };
    std::fs::create_dir_all(&out_buf)
        .with_context(|| format!("cannot create output directory {}", out_buf.display()))?;

    let ctx = RunContext {
        config: &config,
        seed,
        out_dir: &out_buf,
        written: RefCell::new(Vec::new()),
    };
    let started = Instant::now();
    let resolved = (def.run)(&ctx)?;
    let wall_time_seconds = started.elapsed().as_secs_f64();

    let metadata = Metadata {
        experiment: def.id.to_string(),
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        jobs,
        config: resolved,
        outputs: ctx.written.borrow().clone(),
        wall_time_seconds,
    };
    let meta_path = out_buf.join("metadata.json");
    let file = File::create(&meta_path)
        .with_context(|| format!("cannot create {}", meta_path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &metadata)?;

    println!(
        "wrote {} + metadata.json to {} in {:.2}s",
        metadata.outputs.join(", "),
        out_buf.display(),
        wall_time_seconds
    );
    Ok(())
}

/// Load `--config`: either a bare config object or a previous run's
/// metadata record (recognized by its `experiment` field, which must match).
fn load_config(
    def: &ExperimentDef,
    path: Option<&Path>,
) -> Result<(serde_json::Value, Option<u64>)> {
    let Some(path) = path else {
        return Ok(((def.default_config)(), None));
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?;
    if value.get("experiment").is_some() {
        let meta: Metadata = serde_json::from_value(value)
            .with_context(|| format!("{} looks like a metadata record but does not parse as one", path.display()))?;
        if meta.experiment != def.id {
            bail!(
                "metadata record in {} is for experiment '{}', not '{}'",
                path.display(),
                meta.experiment,
                def.id
            );
        }
        return Ok((meta.config, Some(meta.seed)));
    }
    Ok((value, None))
}

pub fn list() {
    for def in registry() {
        println!("{:26} {}", def.id, def.summary);
    }
}

pub fn describe(id: &str) -> Result<()> {
    let def = find(id)?;
    println!("{}", def.id);
    println!("  {}", def.summary);
    println!("  default seed: {}", def.default_seed);
    println!("  default config:");
    let pretty = serde_json::to_string_pretty(&(def.default_config)())?;
    for line in pretty.lines() {
        println!("    {line}");
    }
    Ok(())
}

// ---- helpers shared by the experiment generators ----

/// `n` midpoints of equal subdivisions of [lo, hi] — a deterministic,
/// endpoint-free design for context inputs.
pub fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * ((i as f64 + 0.5) / n as f64))
        .collect()
}

/// First `n` points of the base-2 van der Corput sequence mapped to
/// `[lo, hi]`. Every prefix covers the interval near-uniformly, so nested
/// context sets of any two sizes differ in information, not in coverage.
pub fn low_discrepancy(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n as u64)
        .map(|mut i| {
            let mut u = 0.0;
            let mut denom = 1.0;
            while i > 0 {
                denom *= 2.0;
                u += (i & 1) as f64 / denom;
                i >>= 1;
            }
            lo + (hi - lo) * u
        })
        .collect()
}

/// Write a context dataset as `x,y`.
pub fn write_context_csv(ctx: &RunContext, name: &str, data: &Dataset<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(ctx.create(name)?);
    w.write_record(["x", "y"])?;
    for e in data.examples() {
        w.write_record([format!("{}", e.x), format!("{}", e.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Index of the prior latent matching `target` up to grid rounding
/// (parameters within 1e-9). Errors if no latent is that close.
pub fn find_latent_index(prior: &FinitePrior<f64>, target: &Latent<f64>) -> Result<usize> {
    let close = |a: &Latent<f64>, b: &Latent<f64>| -> bool {
        let pa = a.params();
        let pb = b.params();
        a.family() == b.family()
            && pa.iter().zip(&pb).all(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
                (None, None) => true,
                _ => false,
            })
    };
    prior
        .latents()
        .iter()
        .position(|l| close(l, target))
        .ok_or_else(|| {
            anyhow::anyhow!("no latent in the prior matches {target:?} within 1e-9")
        })
}
