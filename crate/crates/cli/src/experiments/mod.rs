//! One module per subcommand. Each `run` returns structured rows; the
//! binary only writes them.

pub mod asr;
pub mod battery_power;
pub mod distance;
pub mod infer;
pub mod phase_transition;
pub mod simulate;
pub mod tv_curve;

use slr_core::stats::{linear_fit, LinearFit};
use std::time::Instant;

/// Runs `f` and returns its value with the elapsed seconds.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

/// Fits `ln y = intercept + slope·x` over the points with `y > 0`.
pub fn fit_log_linear(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &b)| (a, b.ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_linear_fit_skips_zeros() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [(-1.0f64).exp(), (-2.0f64).exp(), 0.0, (-4.0f64).exp()];
        let f = fit_log_linear(&x, &y).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12);
    }
}
