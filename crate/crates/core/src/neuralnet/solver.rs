use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Mode, Network};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Learning-rate decay policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrPolicy {
    /// `base · gamma^⌊iter / step_size⌋`
    Step,
    /// `base · (1 + gamma · iter)^(−power)`
    Inv,
}

/// Stochastic gradient descent settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_policy: LrPolicy,
    pub gamma: f64,
    /// Exponent of the `inv` policy.
    pub power: f64,
    /// Period of the `step` policy, in iterations.
    pub step_size: u64,
    pub max_iter: u64,
    pub train_batch: usize,
    pub val_batch: usize,
    /// Validation runs every this many iterations and after the last one.
    pub test_interval: u64,
    pub rng_seed: u64,
    /// Stop as soon as a validation pass reaches this accuracy.
    pub stop_at_val_accuracy: Option<f64>,
}

impl SolverConfig {
    /// Glyph classifier solver: `inv` policy, base 0.001, γ 1e-4, power 0.75,
    /// momentum 0.9, decay 5e-4, batches 100/52, 10 000 iterations.
    pub fn glyph_classifier() -> Self {
        Self {
            base_lr: 0.001,
            momentum: 0.9,
            weight_decay: 0.0005,
            lr_policy: LrPolicy::Inv,
            gamma: 0.0001,
            power: 0.75,
            step_size: 1,
            max_iter: 10_000,
            train_batch: 100,
            val_batch: 52,
            test_interval: 100,
            rng_seed: 0,
            stop_at_val_accuracy: None,
        }
    }

    /// Region classifier solver: `step` policy, base 0.001, γ 0.1 every 1000
    /// iterations, momentum 0.9, decay 2e-4, batches 30/20, 20 000 iterations.
    pub fn region_classifier() -> Self {
        Self {
            base_lr: 0.001,
            momentum: 0.9,
            weight_decay: 0.0002,
            lr_policy: LrPolicy::Step,
            gamma: 0.1,
            power: 0.0,
            step_size: 1000,
            max_iter: 20_000,
            train_batch: 30,
            val_batch: 20,
            test_interval: 100,
            rng_seed: 0,
            stop_at_val_accuracy: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidNetwork(format!("solver: {m}")));
        if !(self.base_lr > 0.0) {
            return fail("base_lr must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative");
        }
        if self.lr_policy == LrPolicy::Step && self.step_size == 0 {
            return fail("step_size must be positive for the step policy");
        }
        if self.train_batch == 0 || self.val_batch == 0 || self.test_interval == 0 {
            return fail("batch sizes and test_interval must be positive");
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::glyph_classifier()
    }
}

/// Learning rate in effect at iteration `iter`.
pub fn lr_at(cfg: &SolverConfig, iter: u64) -> f64 {
    match cfg.lr_policy {
        LrPolicy::Step => cfg.base_lr * cfg.gamma.powi((iter / cfg.step_size) as i32),
        LrPolicy::Inv => cfg.base_lr * (1.0 + cfg.gamma * iter as f64).powf(-cfg.power),
    }
}

/// One momentum step: `v ← μ·v − lr·(g + λ·θ)`, `θ ← θ + v`.
pub fn sgd_step<T: Scalar>(
    params: &mut [Vec<T>],
    velocity: &mut [Vec<T>],
    grads: &[Vec<T>],
    cfg: &SolverConfig,
    iter: u64,
) {
    assert_eq!(params.len(), velocity.len());
    assert_eq!(params.len(), grads.len());
    let lr = T::from_f64(lr_at(cfg, iter));
    let mu = T::from_f64(cfg.momentum);
    let decay = T::from_f64(cfg.weight_decay);
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        assert_eq!(p.len(), v.len());
        assert_eq!(p.len(), g.len());
        for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = mu * *vi - lr * (gi + decay * *pi);
            *pi += *vi;
        }
    }
}

/// Samples of identical shape with class indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTensors {
    pub shape: [usize; 3],
    pub data: Vec<f32>,
    pub labels: Vec<usize>,
}

impl LabeledTensors {
    pub fn new(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, sample: &[f32], label: usize) {
        assert_eq!(sample.len(), self.sample_len(), "sample shape");
        self.data.extend_from_slice(sample);
        self.labels.push(label);
    }

    pub fn sample_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let n = self.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    /// Stacks the selected samples into an `[n, c, h, w]` tensor.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let mut data = Vec::with_capacity(indices.len() * self.sample_len());
        for &i in indices {
            data.extend(self.sample(i).iter().map(|&v| T::from_f64(v as f64)));
        }
        let [c, h, w] = self.shape;
        (
            Tensor::from_vec(&[indices.len(), c, h, w], data),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Predicted class index per sample (first maximum on ties).
pub fn argmax_rows<T: Scalar>(probs: &Tensor<T>) -> Vec<usize> {
    let classes = probs.shape()[1];
    probs
        .data()
        .chunks_exact(classes)
        .map(|row| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Top-1 accuracy over `set`, evaluated in chunks of `batch`.
pub fn evaluate_accuracy(net: &Network<f32>, set: &LabeledTensors, batch: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Dataset("empty evaluation set".into()));
    }
    let mut correct = 0;
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(batch.max(1)) {
        let (x, y) = set.batch::<f32>(chunk);
        let probs = net.forward(&x, Mode::Eval)?;
        correct += argmax_rows(&probs).iter().zip(&y).filter(|(p, t)| p == t).count();
    }
    Ok(correct as f64 / set.len() as f64)
}

/// One logged training iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub loss: f64,
    pub lr: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Snapshot with the highest validation accuracy (the final network when
    /// no validation set is given).
    pub best: Network<f32>,
    pub best_val_accuracy: Option<f64>,
    pub best_iteration: u64,
    pub last: Network<f32>,
    pub trace: Vec<TraceRow>,
}

/// Minibatch SGD over shuffled epochs. Fully determined by `cfg.rng_seed`.
pub fn train(
    mut net: Network<f32>,
    train_set: &LabeledTensors,
    val_set: Option<&LabeledTensors>,
    cfg: &SolverConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    if train_set.shape != net.input_shape() {
        return Err(Error::Dataset(format!(
            "samples are {:?} but the network expects {:?}",
            train_set.shape,
            net.input_shape()
        )));
    }
    let classes = net.output_len();
    for set in std::iter::once(train_set).chain(val_set) {
        if let Some(&bad) = set.labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Dataset(format!("label {bad} outside {classes} classes")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let mut velocity: Vec<Vec<f32>> = net.params().iter().map(|p| vec![0.0; p.len()]).collect();
    let mut trace = Vec::with_capacity(cfg.max_iter as usize);
    let mut best: Option<(f64, u64, Network<f32>)> = None;
    let mut batch_idx = Vec::with_capacity(cfg.train_batch);

    for iter in 0..cfg.max_iter {
        batch_idx.clear();
        while batch_idx.len() < cfg.train_batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch_idx.push(order[cursor]);
            cursor += 1;
        }
        let (x, y) = train_set.batch::<f32>(&batch_idx);
        let dropout_seed = rng.gen();
        let (loss, grads) = net.loss_and_gradients(&x, &y, dropout_seed)?;
        let lr = lr_at(cfg, iter);
        sgd_step(net.params_mut(), &mut velocity, &grads, cfg, iter);

        let mut val_accuracy = None;
        if let Some(val) = val_set {
            if (iter + 1) % cfg.test_interval == 0 || iter + 1 == cfg.max_iter {
                let acc = evaluate_accuracy(&net, val, cfg.val_batch)?;
                log::debug!("iteration {iter}: loss {loss:.4}, val accuracy {acc:.4}");
                if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
                    best = Some((acc, iter, net.clone()));
                }
                val_accuracy = Some(acc);
            }
        }
        trace.push(TraceRow {
            iteration: iter,
            loss,
            lr,
            val_accuracy,
        });
        if let (Some(acc), Some(target)) = (val_accuracy, cfg.stop_at_val_accuracy) {
            if acc >= target {
                break;
            }
        }
    }

    let last_iter = trace.last().map_or(0, |r| r.iteration);
    Ok(match best {
        Some((acc, iteration, snapshot)) => TrainOutcome {
            best: snapshot,
            best_val_accuracy: Some(acc),
            best_iteration: iteration,
            last: net,
            trace,
        },
        None => TrainOutcome {
            best: net.clone(),
            best_val_accuracy: None,
            best_iteration: last_iter,
            last: net,
            trace,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{LayerSpec, NetworkSpec};

    #[test]
    fn step_policy_values() {
        let mut cfg = SolverConfig::region_classifier();
        cfg.base_lr = 0.001;
        assert_eq!(lr_at(&cfg, 0), 0.001);
        assert!((lr_at(&cfg, 999) - 0.001).abs() < 1e-18);
        assert!((lr_at(&cfg, 1000) - 1e-4).abs() < 1e-18);
        assert!((lr_at(&cfg, 2500) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn inv_policy_values() {
        let cfg = SolverConfig::glyph_classifier();
        assert_eq!(lr_at(&cfg, 0), 0.001);
        let expected = 0.001 * 2f64.powf(-0.75);
        assert!((lr_at(&cfg, 10_000) - expected).abs() <= 1e-9 * expected);
        assert!((lr_at(&cfg, 10_000) - 5.946e-4).abs() < 1e-7);
    }

    #[test]
    fn schedules_are_non_increasing() {
        for cfg in [SolverConfig::glyph_classifier(), SolverConfig::region_classifier()] {
            let mut prev = f64::INFINITY;
            for i in (0..30_000).step_by(37) {
                let lr = lr_at(&cfg, i);
                assert!(lr <= prev);
                prev = lr;
            }
        }
    }

    #[test]
    fn sgd_reductions() {
        let mut cfg = SolverConfig::glyph_classifier();
        cfg.weight_decay = 0.0;
        let mut params = vec![vec![1.0f64, -2.0]];
        let mut vel = vec![vec![0.0, 0.0]];
        sgd_step(&mut params, &mut vel, &[vec![0.0, 0.0]], &cfg, 0);
        assert_eq!(params, vec![vec![1.0, -2.0]]);

        cfg.momentum = 0.0;
        sgd_step(&mut params, &mut vel, &[vec![10.0, -10.0]], &cfg, 0);
        assert!((params[0][0] - (1.0 - 0.01)).abs() < 1e-15);
        assert!((params[0][1] - (-2.0 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn momentum_accumulates() {
        let mut cfg = SolverConfig::glyph_classifier();
        cfg.weight_decay = 0.0;
        cfg.lr_policy = LrPolicy::Step;
        cfg.step_size = 1_000_000;
        let g = vec![vec![0.5f64]];
        let mut params = vec![vec![0.0]];
        let mut vel = vec![vec![0.0]];
        sgd_step(&mut params, &mut vel, &g, &cfg, 0);
        let first = params[0][0];
        sgd_step(&mut params, &mut vel, &g, &cfg, 1);
        let second = params[0][0] - first;
        assert!((second - 1.9 * first).abs() < 1e-15);
    }

    fn toy_set() -> LabeledTensors {
        let mut set = LabeledTensors::new([1, 2, 2]);
        for i in 0..8 {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            let j = (i / 2) as f32 * 0.1;
            set.push(&[s + j, s, s - j, s * 0.5], i % 2);
        }
        set
    }

    fn toy_net(seed: u64) -> Network<f32> {
        Network::new(
            NetworkSpec {
                input: [1, 2, 2],
                layers: vec![
                    LayerSpec::FullyConnected { units: 4 },
                    LayerSpec::Relu,
                    LayerSpec::FullyConnected { units: 2 },
                    LayerSpec::Softmax,
                ],
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let set = toy_set();
        let mut cfg = SolverConfig::glyph_classifier();
        cfg.base_lr = 0.05;
        cfg.train_batch = 4;
        cfg.max_iter = 500;
        let out = train(toy_net(1), &set, None, &cfg).unwrap();
        assert_eq!(evaluate_accuracy(&out.last, &set, 8).unwrap(), 1.0);
        for row in &out.trace {
            assert_eq!(row.lr, lr_at(&cfg, row.iteration));
        }
    }

    #[test]
    fn training_is_reproducible() {
        let set = toy_set();
        let mut cfg = SolverConfig::glyph_classifier();
        cfg.train_batch = 3;
        cfg.max_iter = 40;
        cfg.test_interval = 10;
        let a = train(toy_net(2), &set, Some(&set), &cfg).unwrap();
        let b = train(toy_net(2), &set, Some(&set), &cfg).unwrap();
        let bits = |t: &[TraceRow]| t.iter().map(|r| r.loss.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.trace), bits(&b.trace));
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let mut set = toy_set();
        set.labels[0] = 5;
        let err = train(toy_net(0), &set, None, &SolverConfig::default()).unwrap_err();
        assert!(err.to_string().contains("label 5"));
    }
}
