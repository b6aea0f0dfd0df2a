//! Fully connected ReLU network with a linear output, trained on squared error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_features, Regressor, Samples};
use crate::ising::Spin;
use crate::math::sqrt;
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpOptions {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    /// Adam step size.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of the training rows held out to report a validation loss.
    pub validation_fraction: f64,
    /// Decoupled L2 shrinkage applied to weights (not biases) every step.
    pub weight_decay: f64,
    /// Return the parameters of the epoch with the lowest validation loss
    /// instead of the last ones.
    pub restore_best: bool,
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 0,
            validation_fraction: 0.1,
            weight_decay: 0.0,
            restore_best: true,
        }
    }
}

impl MlpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("layer widths, epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument("weight decay must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument("validation fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses. `validation` is empty when nothing was held out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Parameters are
/// stored flat, layer by layer: the row-major `out x in` weight matrix, then
/// the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpModel {
    pub fn new(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) || *sizes.last().unwrap() != 1 {
            return Err(Error::InvalidShape(format!("layer sizes {sizes:?} must be positive and end in 1")));
        }
        let expected = parameter_count(&sizes);
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("network parameter is not finite".into()));
        }
        Ok(Self { sizes, params })
    }

    /// He-uniform weights for ReLU layers, Glorot-uniform for the output layer,
    /// zero biases except the output bias.
    pub fn random(sizes: Vec<usize>, output_bias: f64, seed: u64) -> Result<Self> {
        let mut model = Self::new(sizes.clone(), vec![0.0; parameter_count(&sizes)])?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes.len() - 1;
        let mut at = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = if l + 1 == layers { sqrt(6.0 / (fan_in + fan_out) as f64) } else { sqrt(6.0 / fan_in as f64) };
            for w in &mut model.params[at..at + fan_in * fan_out] {
                *w = rng.random_range(-bound..bound);
            }
            at += fan_in * fan_out + fan_out;
        }
        *model.params.last_mut().unwrap() = output_bias;
        Ok(model)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `true` for weight entries, `false` for biases.
    fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.params.len());
        for w in self.sizes.windows(2) {
            mask.extend(core::iter::repeat_n(true, w[0] * w[1]));
            mask.extend(core::iter::repeat_n(false, w[1]));
        }
        mask
    }

    /// Activations of every layer for input `x`; the last holds the raw output.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut at = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[at..at + n_in * n_out];
            let b = &self.params[at + n_in * n_out..at + n_in * n_out + n_out];
            let input = &acts[l];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if l + 1 < layers {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
            at += n_in * n_out + n_out;
        }
        acts
    }

    /// Unclamped network output.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(x).last().unwrap()[0]
    }

    /// Mean squared error over `indices` of `samples`.
    pub fn loss(&self, samples: &Samples, indices: &[usize]) -> f64 {
        let mut x = vec![0.0; samples.n_features()];
        indices
            .iter()
            .map(|&i| {
                to_input(samples.row(i), &mut x);
                let e = self.forward(&x) - samples.target(i);
                e * e
            })
            .sum::<f64>()
            / indices.len() as f64
    }

    /// Mean squared error over `indices` and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, samples: &Samples, indices: &[usize], grad: &mut [f64]) -> f64 {
        assert_eq!(grad.len(), self.params.len());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut at = 0;
        for l in 0..layers {
            offsets.push(at);
            at += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let scale = 1.0 / indices.len() as f64;
        let mut x = vec![0.0; samples.n_features()];
        let mut total = 0.0;
        for &i in indices {
            to_input(samples.row(i), &mut x);
            let acts = self.activations(&x);
            let err = acts[layers][0] - samples.target(i);
            total += err * err;
            let mut delta = vec![2.0 * err * scale];
            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let at = offsets[l];
                let input = &acts[l];
                for o in 0..n_out {
                    let row = &mut grad[at + o * n_in..at + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += delta[o] * a;
                    }
                    grad[at + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let w = &self.params[at..at + n_in * n_out];
                    delta = (0..n_in)
                        .map(|k| {
                            if input[k] <= 0.0 {
                                return 0.0;
                            }
                            (0..n_out).map(|o| delta[o] * w[o * n_in + k]).sum()
                        })
                        .collect();
                }
            }
        }
        total * scale
    }
}

fn to_input(row: &[Spin], x: &mut [f64]) {
    for (xi, &s) in x.iter_mut().zip(row) {
        *xi = f64::from(s);
    }
}

impl Regressor for MlpModel {
    fn n_features(&self) -> usize {
        self.sizes[0]
    }

    fn predict(&self, x: &[Spin]) -> Result<f64> {
        check_features(self.sizes[0], x)?;
        let mut input = vec![0.0; x.len()];
        to_input(x, &mut input);
        Ok(self.forward(&input).clamp(0.0, 1.0))
    }
}

/// Mini-batch Adam on mean squared error. Batch order, the held-out fold and
/// the initial weights all derive from `opts.seed`.
pub fn train_mlp(samples: &Samples, opts: &MlpOptions) -> Result<(MlpModel, TrainReport)> {
    opts.validate()?;
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("an MLP needs at least two training rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let held = (libm::round(samples.len() as f64 * opts.validation_fraction) as usize).min(samples.len() - 1);
    let validation = order.split_off(samples.len() - held);
    let mut train = order;

    let mut sizes = vec![samples.n_features()];
    sizes.extend_from_slice(&opts.hidden);
    sizes.push(1);
    let mean = train.iter().map(|&i| samples.target(i)).sum::<f64>() / train.len() as f64;
    let mut model = MlpModel::random(sizes, mean, rng.random())?;

    let n = model.params.len();
    let decays = model.weight_mask();
    let (mut grad, mut m, mut v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut step = 0i32;
    let mut report = TrainReport::default();
    for epoch in 0..opts.epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(opts.batch_size) {
            model.loss_and_gradient(samples, batch, &mut grad);
            step += 1;
            let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(step));
            let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(step));
            for k in 0..n {
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * grad[k];
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                let decay = if decays[k] { opts.weight_decay * model.params[k] } else { 0.0 };
                model.params[k] -= opts.learning_rate * ((m[k] / c1) / (sqrt(v[k] / c2) + ADAM_EPS) + decay);
            }
        }
        let train_loss = model.loss(samples, &train);
        let validation_loss = (!validation.is_empty()).then(|| model.loss(samples, &validation));
        log::debug!("epoch {epoch}: train {train_loss:.6e} validation {validation_loss:?}");
        if !train_loss.is_finite() || validation_loss.is_some_and(|l| !l.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        report.train.push(train_loss);
        report.validation.extend(validation_loss);
        if let (Some(l), true) = (validation_loss, opts.restore_best) {
            if best.as_ref().is_none_or(|(b, _)| l < *b) {
                best = Some((l, model.params.clone()));
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boltzmann::central_difference;
    use crate::surrogate::evaluate_mse;

    fn samples(n: usize, f: usize, seed: u64, target: impl Fn(&[Spin]) -> f64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Spin> = (0..n * f).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let targets = features.chunks(f).map(&target).collect();
        Samples::new(f, features, targets).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Three hidden neurons.
        let s = samples(12, 2, 1, |x| 0.3 + 0.2 * f64::from(x[0]) - 0.1 * f64::from(x[0] * x[1]));
        for seed in 0..5 {
            let model = MlpModel::random(vec![2, 3, 1], 0.1, seed).unwrap();
            let idx: Vec<usize> = (0..s.len()).collect();
            let mut g = vec![0.0; model.parameters().len()];
            model.loss_and_gradient(&s, &idx, &mut g);
            let fd = central_difference(
                |p| MlpModel::new(vec![2, 3, 1], p.to_vec()).unwrap().loss(&s, &idx),
                model.parameters(),
                1e-6,
            );
            let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let den: f64 = fd.iter().map(|b| b * b).sum::<f64>();
            assert!(sqrt(num / den) < 1e-4, "seed {seed}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn learns_a_linear_single_feature_target() {
        let s = samples(64, 1, 2, |x| (f64::from(x[0]) + 1.0) / 2.0);
        let opts = MlpOptions {
            hidden: vec![4],
            epochs: 300,
            learning_rate: 1e-2,
            validation_fraction: 0.0,
            ..Default::default()
        };
        let (model, report) = train_mlp(&s, &opts).unwrap();
        assert!(report.validation.is_empty());
        assert!(evaluate_mse(&model, &s).unwrap() <= 1e-4);
    }

    #[test]
    fn reports_every_epoch_and_is_deterministic() {
        let s = samples(100, 4, 3, |x| f64::from(x[1] + 1) / 2.0);
        let opts = MlpOptions { hidden: vec![8], epochs: 5, ..Default::default() };
        let (a, ra) = train_mlp(&s, &opts).unwrap();
        assert_eq!((ra.train.len(), ra.validation.len()), (5, 5));
        let (b, rb) = train_mlp(&s, &opts).unwrap();
        assert_eq!((a, ra), (b, rb));
    }

    #[test]
    fn divergence_is_reported() {
        let s = samples(50, 3, 4, |x| f64::from(x[0]));
        let opts = MlpOptions { hidden: vec![8], learning_rate: 1e300, epochs: 5, ..Default::default() };
        assert!(matches!(train_mlp(&s, &opts), Err(Error::Diverged { .. })));
    }

    #[test]
    fn beats_shuffled_labels() {
        let s = samples(300, 6, 5, |x| if x[0] > 0 && x[2] > 0 { 0.8 } else { 0.3 });
        let mut t = s.targets().to_vec();
        t.shuffle(&mut ChaCha8Rng::seed_from_u64(6));
        let noise = s.with_targets(t).unwrap();
        let opts = MlpOptions { hidden: vec![16], epochs: 40, ..Default::default() };
        let fit = evaluate_mse(&train_mlp(&s, &opts).unwrap().0, &s).unwrap();
        let fit_noise = evaluate_mse(&train_mlp(&noise, &opts).unwrap().0, &noise).unwrap();
        assert!(fit < fit_noise, "{fit} vs {fit_noise}");
    }

    #[test]
    fn shape_validation() {
        assert!(MlpModel::new(vec![2, 3, 2], vec![0.0; 17]).is_err());
        assert!(MlpModel::new(vec![2, 3, 1], vec![0.0; 5]).is_err());
        assert!(MlpModel::new(vec![2, 3, 1], vec![0.0; 13]).is_ok());
        assert!(MlpOptions { hidden: vec![0], ..Default::default() }.validate().is_err());
    }
}
