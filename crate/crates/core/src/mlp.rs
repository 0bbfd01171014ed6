//! From-scratch feed-forward classifier for the two-point extrapolation
//! study: networks are trained to map x=0 → class 0 and x=1 → class 1, and
//! the interesting quantity is how differently seeded models behave
//! *between* the training points, with and without Gaussian input noise.
//!
//! Parameters live in one flat vector (row-major weight blocks followed by
//! biases, layer by layer), gradients come from hand-written reverse-mode
//! differentiation over the same layout, and the optimizer is the standard
//! adaptive-moment method. Training runs are single-threaded and
//! deterministic for a given seed; independent seeds train in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::prior::grid;
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Must be even: every batch is balanced, half class 0 and half class 1.
    pub batch_size: usize,
    pub steps: usize,
    /// Base seed; [`seed_sweep`] gives model i the i-th RNG stream of this
    /// seed.
    pub seed: u64,
    /// Standard deviation of the Gaussian perturbation added to inputs
    /// (labels stay hard 0/1); zero disables it.
    pub input_noise_sigma: f64,
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 1024,
            steps: 2000,
            seed: 0,
            input_noise_sigma: 0.0,
            hidden_layers: 3,
            hidden_width: 64,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.batch_size % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "batch size must be even and positive, got {}",
                self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.input_noise_sigma >= 0.0 && self.input_noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "input noise sigma must be non-negative, got {}",
                self.input_noise_sigma
            )));
        }
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidParameter(
                "need at least one hidden layer and unit".into(),
            ));
        }
        Ok(())
    }
}

/// Fully connected ReLU network with scalar input and one logit output.
#[derive(Clone, Debug)]
pub struct Mlp<T> {
    /// Layer widths including input and output: [1, w, …, w, 1].
    widths: Vec<usize>,
    params: Vec<T>,
}

/// Offset of layer l's weight block and bias block in the flat vector.
fn layer_offsets(widths: &[usize]) -> Vec<(usize, usize)> {
    let mut offs = Vec::with_capacity(widths.len() - 1);
    let mut at = 0;
    for l in 0..widths.len() - 1 {
        let w = at;
        at += widths[l] * widths[l + 1];
        let b = at;
        at += widths[l + 1];
        offs.push((w, b));
    }
    offs
}

impl<T: Scalar> Mlp<T> {
    /// Uniform fan-in initialization: every weight and bias of a layer with
    /// n_in inputs drawn from U(−1/√n_in, 1/√n_in).
    pub fn init<R: Rng + ?Sized>(hidden_layers: usize, hidden_width: usize, rng: &mut R) -> Self {
        let mut widths = vec![1];
        widths.extend(std::iter::repeat_n(hidden_width, hidden_layers));
        widths.push(1);
        let n_params: usize = (0..widths.len() - 1)
            .map(|l| widths[l] * widths[l + 1] + widths[l + 1])
            .sum();
        let mut params = Vec::with_capacity(n_params);
        let two = T::cast(2.0);
        for l in 0..widths.len() - 1 {
            let bound = T::one() / T::cast(widths[l] as f64).sqrt();
            for _ in 0..widths[l] * widths[l + 1] + widths[l + 1] {
                params.push((T::unit_uniform(rng) * two - T::one()) * bound);
            }
        }
        Self { widths, params }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Class-1 probability for a single input.
    pub fn predict_prob(&self, x: T) -> T {
        sigmoid(self.forward_logit(x))
    }

    pub fn predict_grid(&self, xs: &[T]) -> Vec<T> {
        xs.iter().map(|&x| self.predict_prob(x)).collect()
    }

    fn forward_logit(&self, x: T) -> T {
        let offs = layer_offsets(&self.widths);
        let mut a = vec![x];
        for (l, &(w_off, b_off)) in offs.iter().enumerate() {
            let n_out = self.widths[l + 1];
            let last = l + 1 == self.widths.len() - 1;
            let mut z = self.params[b_off..b_off + n_out].to_vec();
            for (i, &av) in a.iter().enumerate() {
                let row = &self.params[w_off + i * n_out..w_off + (i + 1) * n_out];
                for (zo, &wv) in z.iter_mut().zip(row) {
                    *zo += av * wv;
                }
            }
            if !last {
                for zo in &mut z {
                    *zo = zo.max(T::zero());
                }
            }
            a = z;
        }
        a[0]
    }

    /// Mean binary cross-entropy of the batch, using the same batched
    /// forward pass (and therefore rounding) as [`Self::loss_and_grad`].
    pub fn batch_loss(&self, xs: &[T], ys: &[T]) -> T {
        assert_eq!(xs.len(), ys.len());
        let mut acts = Vec::new();
        self.forward_batch(xs, &mut acts);
        let logits = acts.last().expect("at least one layer");
        let mut loss = T::zero();
        for (&z, &y) in logits.iter().zip(ys) {
            loss += bce(z, y);
        }
        loss / T::cast(xs.len() as f64)
    }

    /// Forward pass over a batch, filling `acts` with every post-activation
    /// (element 0 is the input column, the last element holds the logits).
    /// Buffers are reused across calls.
    fn forward_batch(&self, xs: &[T], acts: &mut Vec<Vec<T>>) {
        let batch = xs.len();
        let offs = layer_offsets(&self.widths);
        acts.resize(offs.len() + 1, Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(xs);
        for (l, &(w_off, b_off)) in offs.iter().enumerate() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let last = l + 1 == self.widths.len() - 1;
            let (before, after) = acts.split_at_mut(l + 1);
            let z = &mut after[0];
            z.resize(batch * n_out, T::zero());
            matmul_bias(
                &before[l],
                batch,
                n_in,
                &self.params[w_off..w_off + n_in * n_out],
                &self.params[b_off..b_off + n_out],
                n_out,
                z,
            );
            if !last {
                for zo in z.iter_mut() {
                    *zo = zo.max(T::zero());
                }
            }
        }
    }

    /// Mean BCE over the batch plus its gradient with respect to every
    /// parameter, written into `grad` (flat, same layout as `params`).
    pub fn loss_and_grad(&self, xs: &[T], ys: &[T], grad: &mut [T]) -> T {
        self.loss_and_grad_scratch(xs, ys, grad, &mut TrainScratch::default())
    }

    /// [`Self::loss_and_grad`] with caller-owned scratch buffers, so the hot
    /// training loop performs no per-step allocation.
    fn loss_and_grad_scratch(
        &self,
        xs: &[T],
        ys: &[T],
        grad: &mut [T],
        scratch: &mut TrainScratch<T>,
    ) -> T {
        assert_eq!(xs.len(), ys.len());
        assert_eq!(grad.len(), self.params.len());
        let batch = xs.len();
        let offs = layer_offsets(&self.widths);
        let n_layers = offs.len();
        self.forward_batch(xs, &mut scratch.acts);

        // Loss and the logit gradient dL/dz = σ(z) − y, scaled by 1/batch.
        let inv_batch = T::one() / T::cast(batch as f64);
        let logits = &scratch.acts[n_layers];
        let mut loss = T::zero();
        let delta = &mut scratch.delta;
        delta.clear();
        for (&z, &y) in logits.iter().zip(ys) {
            loss += bce(z, y);
            delta.push((sigmoid(z) - y) * inv_batch);
        }
        loss = loss * inv_batch;

        // Backward pass. ReLU layers use the post-activation as the mask
        // (a > 0 ⟺ z > 0).
        grad.fill(T::zero());
        for l in (0..n_layers).rev() {
            let (w_off, b_off) = offs[l];
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            {
                let (wg, bg) = grad[w_off..b_off + n_out].split_at_mut(b_off - w_off);
                for drow in delta.chunks_exact(n_out) {
                    for (bo, &dv) in bg.iter_mut().zip(drow) {
                        *bo += dv;
                    }
                }
                weight_grad(&scratch.acts[l], batch, n_in, delta, n_out, wg);
            }
            if l > 0 {
                // Propagate through W via its transpose so the inner loops
                // walk contiguous rows.
                let wt = &mut scratch.wt;
                wt.clear();
                wt.resize(n_in * n_out, T::zero());
                let w = &self.params[w_off..w_off + n_in * n_out];
                for i in 0..n_in {
                    for o in 0..n_out {
                        wt[o * n_in + i] = w[i * n_out + o];
                    }
                }
                let prev = &mut scratch.prev;
                prev.clear();
                prev.resize(batch * n_in, T::zero());
                scratch.zero_bias.clear();
                scratch.zero_bias.resize(n_in, T::zero());
                matmul_bias(delta, batch, n_out, wt, &scratch.zero_bias, n_in, prev);
                for (pv, &av) in prev.iter_mut().zip(&scratch.acts[l]) {
                    if !(av > T::zero()) {
                        *pv = T::zero();
                    }
                }
                std::mem::swap(delta, prev);
            }
        }
        loss
    }
}

/// Reusable buffers for [`Mlp::loss_and_grad_scratch`].
#[derive(Clone, Debug)]
struct TrainScratch<T> {
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    prev: Vec<T>,
    wt: Vec<T>,
    zero_bias: Vec<T>,
}

impl<T> Default for TrainScratch<T> {
    fn default() -> Self {
        Self {
            acts: Vec::new(),
            delta: Vec::new(),
            prev: Vec::new(),
            wt: Vec::new(),
            zero_bias: Vec::new(),
        }
    }
}

/// Width of the register-blocked column group in the matrix kernels. The
/// group accumulator lives in a fixed-size local array so the optimizer can
/// keep it in vector registers; the summation order (ascending reduction
/// index, elementwise across the group) is fixed and identical for every
/// group width, so results are bit-reproducible.
const LANES: usize = 16;

/// Full-row accumulator width used when a layer is exactly this wide — the
/// common configuration — avoiding per-group re-slicing entirely.
const FULL_ROW: usize = 64;

/// z[b][·] = bias[·] + Σ_i a[b][i] · w[i][·], row-major everywhere.
fn matmul_bias<T: Scalar>(
    a: &[T],
    batch: usize,
    n_in: usize,
    w: &[T],
    bias: &[T],
    n_out: usize,
    z: &mut [T],
) {
    debug_assert_eq!(a.len(), batch * n_in);
    debug_assert_eq!(z.len(), batch * n_out);
    if n_out == FULL_ROW {
        let bias: &[T; FULL_ROW] = bias.try_into().expect("bias length");
        for (arow, zrow) in a.chunks_exact(n_in).zip(z.chunks_exact_mut(FULL_ROW)) {
            let mut acc = *bias;
            for (wrow, &av) in w.chunks_exact(FULL_ROW).zip(arow) {
                for k in 0..FULL_ROW {
                    acc[k] += av * wrow[k];
                }
            }
            zrow.copy_from_slice(&acc);
        }
        return;
    }
    let groups = n_out / LANES * LANES;
    for (arow, zrow) in a.chunks_exact(n_in).zip(z.chunks_exact_mut(n_out)) {
        let mut go = 0;
        while go < groups {
            let mut acc = [T::zero(); LANES];
            acc.copy_from_slice(&bias[go..go + LANES]);
            for (wrow, &av) in w.chunks_exact(n_out).zip(arow) {
                let wseg = &wrow[go..go + LANES];
                for k in 0..LANES {
                    acc[k] += av * wseg[k];
                }
            }
            zrow[go..go + LANES].copy_from_slice(&acc);
            go += LANES;
        }
        for o in groups..n_out {
            let mut acc = bias[o];
            for (wrow, &av) in w.chunks_exact(n_out).zip(arow) {
                acc += av * wrow[o];
            }
            zrow[o] = acc;
        }
    }
}

/// Rows of the batch processed per tile in [`weight_grad`], chosen so one
/// tile of activations plus one of deltas stays L1-resident while the kernel
/// sweeps the input units. Tiling is over a fixed, data-independent schedule,
/// so the summation order — and therefore the result — is deterministic.
const BATCH_TILE: usize = 64;

/// wg[i][·] += Σ_b a[b][i] · delta[b][·].
fn weight_grad<T: Scalar>(
    a: &[T],
    batch: usize,
    n_in: usize,
    delta: &[T],
    n_out: usize,
    wg: &mut [T],
) {
    debug_assert_eq!(a.len(), batch * n_in);
    let mut b0 = 0;
    while b0 < batch {
        let bend = (b0 + BATCH_TILE).min(batch);
        let ablk = &a[b0 * n_in..bend * n_in];
        let dblk = &delta[b0 * n_out..bend * n_out];
        if n_out == FULL_ROW {
            for (i, wrow) in wg.chunks_exact_mut(FULL_ROW).enumerate() {
                let mut acc = [T::zero(); FULL_ROW];
                for (arow, drow) in ablk.chunks_exact(n_in).zip(dblk.chunks_exact(FULL_ROW)) {
                    let av = arow[i];
                    for k in 0..FULL_ROW {
                        acc[k] += av * drow[k];
                    }
                }
                for k in 0..FULL_ROW {
                    wrow[k] += acc[k];
                }
            }
        } else {
            let groups = n_out / LANES * LANES;
            for i in 0..n_in {
                let mut go = 0;
                while go < groups {
                    let mut acc = [T::zero(); LANES];
                    for (arow, drow) in ablk.chunks_exact(n_in).zip(dblk.chunks_exact(n_out)) {
                        let av = arow[i];
                        let dseg = &drow[go..go + LANES];
                        for k in 0..LANES {
                            acc[k] += av * dseg[k];
                        }
                    }
                    let out = &mut wg[i * n_out + go..i * n_out + go + LANES];
                    for k in 0..LANES {
                        out[k] += acc[k];
                    }
                    go += LANES;
                }
                for o in groups..n_out {
                    let mut acc = T::zero();
                    for (arow, drow) in ablk.chunks_exact(n_in).zip(dblk.chunks_exact(n_out)) {
                        acc += arow[i] * drow[o];
                    }
                    wg[i * n_out + o] += acc;
                }
            }
        }
        b0 = bend;
    }
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Numerically stable BCE on a logit: max(z,0) − z·y + ln(1+e^−|z|).
#[inline]
fn bce<T: Scalar>(z: T, y: T) -> T {
    z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p()
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub model: Mlp<T>,
    /// Batch loss before each update, one entry per step.
    pub losses: Vec<T>,
}

/// Train one network with the config's base seed (stream 0).
pub fn train_mlp<T: Scalar>(config: &TrainConfig) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    train_with_rng(config, &mut rng)
}

fn train_with_rng<T: Scalar>(config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<TrainOutcome<T>> {
    let mut model = Mlp::<T>::init(config.hidden_layers, config.hidden_width, rng);
    let n = model.n_params();
    let mut grad = vec![T::zero(); n];
    let mut m1 = vec![T::zero(); n];
    let mut m2 = vec![T::zero(); n];
    let half = config.batch_size / 2;
    let mut xs = vec![T::zero(); config.batch_size];
    let mut ys = vec![T::zero(); config.batch_size];
    let mut scratch = TrainScratch::default();
    for y in &mut ys[half..] {
        *y = T::one();
    }
    let sigma = T::cast(config.input_noise_sigma);
    let lr = T::cast(config.learning_rate);
    let beta1 = T::cast(0.9);
    let beta2 = T::cast(0.999);
    let eps = T::cast(1e-8);
    let mut losses = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        // Balanced fixed-order batch: `half` class-0 inputs at x=0 then
        // `half` class-1 inputs at x=1, each optionally perturbed.
        for (k, x) in xs.iter_mut().enumerate() {
            let center = if k < half { T::zero() } else { T::one() };
            *x = if config.input_noise_sigma > 0.0 {
                center + sigma * T::standard_normal(rng)
            } else {
                center
            };
        }
        let loss = model.loss_and_grad_scratch(&xs, &ys, &mut grad, &mut scratch);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step,
                what: "training loss".into(),
            });
        }
        losses.push(loss);
        let t = step as i32 + 1;
        let c1 = T::one() - beta1.powi(t);
        let c2 = T::one() - beta2.powi(t);
        for i in 0..n {
            let g = grad[i];
            m1[i] = beta1 * m1[i] + (T::one() - beta1) * g;
            m2[i] = beta2 * m2[i] + (T::one() - beta2) * g * g;
            let update = lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
            model.params[i] = model.params[i] - update;
        }
    }
    Ok(TrainOutcome { model, losses })
}

/// Prediction curves of many identically configured models differing only
/// in seed.
#[derive(Clone, Debug)]
pub struct SweepResult<T> {
    pub grid_xs: Vec<T>,
    /// One row per model, sorted ascending by the prediction at x = 0.5
    /// (ties broken by original seed index).
    pub sorted_predictions: Vec<Vec<T>>,
    /// Original seed index of each sorted row.
    pub seed_order: Vec<usize>,
    /// Across-seed sample standard deviation at each grid point.
    pub std_per_x: Vec<T>,
    /// Final training loss per model, in sorted-row order.
    pub final_losses: Vec<T>,
}

/// Train `n_seeds` models in parallel (model i uses RNG stream i of the
/// config's base seed) and report their prediction curves on a 1001-point
/// grid over [0, 1].
pub fn seed_sweep<T: Scalar>(n_seeds: usize, config: &TrainConfig) -> Result<SweepResult<T>> {
    if n_seeds < 2 {
        return Err(Error::InvalidParameter(format!(
            "seed sweep needs at least 2 seeds, got {n_seeds}"
        )));
    }
    config.validate()?;
    let grid_xs: Vec<T> = grid(0.0, 1.0, 1001).into_iter().map(T::cast).collect();
    let runs: Vec<(Vec<T>, T)> = (0..n_seeds)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(idx as u64);
            let out = train_with_rng::<T>(config, &mut rng).map_err(|e| match e {
                Error::Diverged { step, what } => Error::Diverged {
                    step,
                    what: format!("model {idx}: {what}"),
                },
                other => other,
            })?;
            let final_loss = out.losses.last().copied().unwrap_or_else(T::zero);
            Ok((out.model.predict_grid(&grid_xs), final_loss))
        })
        .collect::<Result<_>>()?;

    let mid = grid_xs.len() / 2;
    let mut order: Vec<usize> = (0..n_seeds).collect();
    order.sort_by(|&a, &b| {
        runs[a].0[mid]
            .partial_cmp(&runs[b].0[mid])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    let sorted_predictions: Vec<Vec<T>> = order.iter().map(|&i| runs[i].0.clone()).collect();
    let final_losses: Vec<T> = order.iter().map(|&i| runs[i].1).collect();

    let n = T::cast(n_seeds as f64);
    let std_per_x = (0..grid_xs.len())
        .map(|j| {
            let mut mean = T::zero();
            for row in &sorted_predictions {
                mean += row[j];
            }
            mean = mean / n;
            let mut ss = T::zero();
            for row in &sorted_predictions {
                let d = row[j] - mean;
                ss += d * d;
            }
            (ss / (n - T::one())).sqrt()
        })
        .collect();

    Ok(SweepResult {
        grid_xs,
        sorted_predictions,
        seed_order: order,
        std_per_x,
        final_losses,
    })
}
