//! Cross-checks the posterior engine against a naive direct implementation
//! on randomized small priors, plus the exactness guarantees the engine
//! documents (permutation invariance, sequential/batch agreement).

use finite_bayes::data::Dataset;
use finite_bayes::latent::Latent;
use finite_bayes::posterior::{posterior, posterior_update};
use finite_bayes::prior::FinitePrior;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N_PRIORS: usize = 50;
const LOG_WEIGHT_TOL: f64 = 1e-10;

struct Case {
    prior: FinitePrior<f64>,
    latents: Vec<Latent<f64>>,
    raw_log_prior: Option<Vec<f64>>,
    sigma: f64,
    data: Dataset<f64>,
}

fn random_latent(rng: &mut ChaCha8Rng) -> Latent<f64> {
    match rng.random_range(0..3u8) {
        0 => Latent::Step {
            threshold: rng.random::<f64>(),
            base: rng.random_range(-1.0..1.0),
            jump: rng.random_range(-1.0..1.0),
        },
        1 => Latent::Sine {
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        },
        _ => Latent::Line {
            intercept: rng.random_range(-1.0..1.0),
            slope: rng.random_range(-1.0..1.0),
        },
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n_latents = rng.random_range(1..=100);
    let latents: Vec<Latent<f64>> = (0..n_latents).map(|_| random_latent(rng)).collect();
    let sigma = rng.random_range(0.15..0.5);
    let raw_log_prior = if rng.random::<bool>() {
        Some((0..n_latents).map(|_| rng.random_range(-3.0..0.0)).collect())
    } else {
        None
    };
    let prior = FinitePrior::custom(latents.clone(), raw_log_prior.clone(), sigma).unwrap();

    let n_examples = rng.random_range(0..=20);
    let true_latent = latents[rng.random_range(0..n_latents)];
    let data = Dataset::from_pairs((0..n_examples).map(|_| {
        let x = rng.random::<f64>();
        let y = true_latent.eval(x) + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
        (x, y)
    }))
    .unwrap();

    Case {
        prior,
        latents,
        raw_log_prior,
        sigma,
        data,
    }
}

/// Direct translation of the definition: per-example Gaussian log-density
/// accumulated latent by latent, normalized with a max-shifted Kahan sum.
/// Shares no reduction code with the engine.
fn oracle_log_posterior(case: &Case) -> (Vec<f64>, f64) {
    let n = case.latents.len();
    let uniform = -(n as f64).ln();
    let raw_prior: Vec<f64> = match &case.raw_log_prior {
        Some(raw) => raw.clone(),
        None => vec![uniform; n],
    };
    let prior_z = naive_log_sum_exp(&raw_prior);

    let half_ln_tau = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut raw = Vec::with_capacity(n);
    for (latent, lp) in case.latents.iter().zip(&raw_prior) {
        let mut s = lp - prior_z;
        for e in case.data.examples() {
            let z = (e.y - latent.eval(e.x)) / case.sigma;
            s += -0.5 * z * z - case.sigma.ln() - half_ln_tau;
        }
        raw.push(s);
    }
    let evidence = naive_log_sum_exp(&raw);
    (raw.iter().map(|v| v - evidence).collect(), evidence)
}

fn naive_log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let term = (v - m).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    m + sum.ln()
}

#[test]
fn engine_matches_naive_oracle_on_random_priors() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_823);
    for case_idx in 0..N_PRIORS {
        let case = random_case(&mut rng);
        let engine = posterior(&case.prior, &case.data).unwrap();
        let (oracle, oracle_evidence) = oracle_log_posterior(&case);

        assert_eq!(engine.log_weights.len(), oracle.len());
        let mut worst = 0.0f64;
        for (l, (&e, &o)) in engine.log_weights.iter().zip(&oracle).enumerate() {
            let diff = (e - o).abs();
            assert!(
                diff <= LOG_WEIGHT_TOL,
                "case {case_idx} (sigma {:.3}, {} latents, {} examples): \
                 log weight {l} differs by {diff:.3e} (engine {e}, oracle {o})",
                case.sigma,
                case.latents.len(),
                case.data.len(),
            );
            worst = worst.max(diff);
        }
        assert!(
            (engine.evidence - oracle_evidence).abs() <= LOG_WEIGHT_TOL,
            "case {case_idx}: evidence differs (engine {}, oracle {oracle_evidence})",
            engine.evidence,
        );

        let total: f64 = engine.log_weights.iter().map(|w| w.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9, "case {case_idx}: mass {total}");
    }
}

#[test]
fn sequential_updates_match_batch_conditioning() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case_idx in 0..N_PRIORS {
        let case = random_case(&mut rng);
        let batch = posterior(&case.prior, &case.data).unwrap();

        let mut running = posterior(&case.prior, &Dataset::empty()).unwrap();
        for e in case.data.examples() {
            let one = Dataset::new(vec![*e]).unwrap();
            running = posterior_update(&case.prior, &running, &one).unwrap();
        }

        for (l, (&s, &b)) in running.log_weights.iter().zip(&batch.log_weights).enumerate() {
            assert!(
                (s - b).abs() <= LOG_WEIGHT_TOL,
                "case {case_idx}, latent {l}: sequential {s} vs batch {b}"
            );
        }
        assert!((running.evidence - batch.evidence).abs() <= LOG_WEIGHT_TOL);
    }
}

#[test]
fn permutations_give_bit_identical_posteriors() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let case = random_case(&mut rng);
        if case.data.len() < 2 {
            continue;
        }
        let reference = posterior(&case.prior, &case.data).unwrap();
        for _ in 0..3 {
            let mut shuffled = case.data.examples().to_vec();
            shuffled.shuffle(&mut rng);
            let permuted = posterior(&case.prior, &Dataset::new(shuffled).unwrap()).unwrap();
            for (a, b) in reference.log_weights.iter().zip(&permuted.log_weights) {
                assert_eq!(a.to_bits(), b.to_bits(), "permutation changed a log weight");
            }
            assert_eq!(reference.evidence.to_bits(), permuted.evidence.to_bits());
        }
    }
}

#[test]
fn empty_data_returns_the_normalized_prior() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let case = random_case(&mut rng);
    let post = posterior(&case.prior, &Dataset::empty()).unwrap();
    for (&w, &lp) in post.log_weights.iter().zip(case.prior.log_prior()) {
        assert_eq!(w.to_bits(), lp.to_bits());
    }
    assert_eq!(post.evidence, 0.0);
}
