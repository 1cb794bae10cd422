//! Training a role's network from labelled crops.

use super::{default_network, stratified_split_indices, ModelFile, Preprocess, Role};
use crate::error::{Error, Result};
use crate::imaging::RasterImage;
use crate::neuralnet::{train, LabeledTensors, Network, SolverConfig, TrainOutcome};

/// Result of [`train_role`]: the best snapshot as a model file plus the run.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: ModelFile,
    pub outcome: TrainOutcome,
    pub train_len: usize,
    pub val_len: usize,
}

/// Preprocesses labelled crops into tensors.
pub fn tensors(samples: &[(RasterImage, usize)], pre: &Preprocess) -> LabeledTensors {
    let mut set = LabeledTensors::new(pre.input_shape());
    for (img, label) in samples {
        set.push(&pre.tensor_data(img), *label);
    }
    set
}

/// Stratified split of `samples`, then SGD on the role's default network.
/// Weights are initialised from `solver.rng_seed`, so one seed fixes the run.
pub fn train_role(
    role: Role,
    samples: &[(RasterImage, usize)],
    train_fraction: f64,
    split_seed: u64,
    solver: &SolverConfig,
) -> Result<TrainedModel> {
    let labels: Vec<usize> = samples.iter().map(|s| s.1).collect();
    for class in 0..role.classes() {
        let n = labels.iter().filter(|&&l| l == class).count();
        if n < 2 {
            return Err(Error::Dataset(format!(
                "class {:?} has {n} samples; at least 2 are needed",
                role.label_names()[class]
            )));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= role.classes()) {
        return Err(Error::Dataset(format!("label index {bad} outside {role}")));
    }
    let pre = role.default_preprocess();
    let (ti, vi) = stratified_split_indices(&labels, train_fraction, split_seed);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    let train_set = tensors(&pick(&ti), &pre);
    let val_set = tensors(&pick(&vi), &pre);
    let net = Network::new(default_network(role, &pre), solver.rng_seed)?;
    let val = (!val_set.is_empty()).then_some(&val_set);
    let outcome = train(net, &train_set, val, solver)?;
    Ok(TrainedModel {
        model: ModelFile::new(role, pre, &outcome.best),
        outcome,
        train_len: train_set.len(),
        val_len: val_set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stripes(n: usize) -> Vec<(RasterImage, usize)> {
        (0..n)
            .map(|i| {
                let label = i % 2;
                let img = RasterImage::from_fn_gray(16, 16, |x, y| {
                    let on = if label == 0 { x % 4 < 2 } else { y % 4 < 2 };
                    if on { 220 } else { 30 + (i % 7) as u8 }
                });
                (img, label)
            })
            .collect()
    }

    #[test]
    fn learns_stripe_orientation() {
        let solver = SolverConfig {
            max_iter: 150,
            train_batch: 10,
            test_interval: 25,
            base_lr: 0.01,
            stop_at_val_accuracy: Some(1.0),
            ..SolverConfig::glyph_classifier()
        };
        let run = train_role(Role::Glyph2, &stripes(40), 0.7, 3, &solver).unwrap();
        assert_eq!((run.train_len, run.val_len), (28, 12));
        assert_eq!(run.outcome.best_val_accuracy, Some(1.0));
        let again = train_role(Role::Glyph2, &stripes(40), 0.7, 3, &solver).unwrap();
        assert_eq!(run.model, again.model);
    }

    #[test]
    fn missing_class_is_rejected() {
        let only_zero: Vec<_> = stripes(10).into_iter().filter(|s| s.1 == 0).collect();
        assert!(train_role(Role::Glyph2, &only_zero, 0.7, 0, &SolverConfig::default()).is_err());
    }
}
