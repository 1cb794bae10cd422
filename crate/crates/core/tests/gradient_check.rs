//! Analytical gradients against central finite differences.

use glyphline::neuralnet::gradcheck::draw_relative_error;

#[test]
fn gradients_match_finite_differences() {
    let mut accepted = 0;
    let mut seed = 0;
    while accepted < 20 {
        if let Some(err) = draw_relative_error(seed, 1e-3) {
            assert!(err <= 1e-3, "draw {seed}: relative error {err}");
            accepted += 1;
        }
        seed += 1;
        assert!(seed < 100, "too many non-differentiable draws");
    }
}
