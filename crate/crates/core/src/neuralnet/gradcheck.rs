//! Finite-difference check of the analytical gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LayerSpec, Network, NetworkSpec, Tensor};

/// Reduced-width network with the glyph-classifier layer order
/// (conv, pool, conv, pool, dropout, FC, ReLU, FC, softmax). Kernels shrink to
/// 3×3 and 2×2 so an 8×8 input survives two pooling stages.
pub fn reduced_symbol_net() -> NetworkSpec {
    NetworkSpec {
        input: [1, 8, 8],
        layers: vec![
            LayerSpec::Conv { out_channels: 2, kernel: 3, stride: 1 },
            LayerSpec::MaxPool { size: 2, stride: 2 },
            LayerSpec::Conv { out_channels: 3, kernel: 2, stride: 1 },
            LayerSpec::MaxPool { size: 2, stride: 2 },
            LayerSpec::Dropout { p: 0.5 },
            LayerSpec::FullyConnected { units: 10 },
            LayerSpec::Relu,
            LayerSpec::FullyConnected { units: 2 },
            LayerSpec::Softmax,
        ],
    }
}

/// Worst relative error over every parameter for one random draw, or `None`
/// when some ±ε stencil straddles a ReLU or max-pool switch (the loss is not
/// differentiable there, which shows up as disagreement between the ε and ε/2
/// central differences).
pub fn draw_relative_error(seed: u64, eps: f64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::<f64>::new(reduced_symbol_net(), seed).unwrap();
    for (i, p) in net.params_mut().iter_mut().enumerate() {
        if i % 2 == 1 {
            p.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
    }
    let input = Tensor::from_vec(&[4, 1, 8, 8], (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let targets: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
    let dropout_seed = rng.gen();
    let (_, grads) = net.loss_and_gradients(&input, &targets, dropout_seed).unwrap();

    let central = |net: &mut Network<f64>, block: usize, i: usize, h: f64| {
        let orig = net.params()[block][i];
        net.params_mut()[block][i] = orig + h;
        let plus = net.loss_and_gradients(&input, &targets, dropout_seed).unwrap().0;
        net.params_mut()[block][i] = orig - h;
        let minus = net.loss_and_gradients(&input, &targets, dropout_seed).unwrap().0;
        net.params_mut()[block][i] = orig;
        (plus - minus) / (2.0 * h)
    };

    let mut worst: f64 = 0.0;
    for block in 0..net.params().len() {
        for i in 0..net.params()[block].len() {
            let numeric = central(&mut net, block, i, eps);
            let half = central(&mut net, block, i, eps / 2.0);
            if (numeric - half).abs() > 1e-4 * numeric.abs().max(half.abs()).max(1e-6) {
                return None;
            }
            let analytic = grads[block][i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    Some(worst)
}
