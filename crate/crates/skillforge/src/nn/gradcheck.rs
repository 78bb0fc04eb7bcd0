//! Central-finite-difference verification of analytic gradients.

/// Compare the analytic gradient of a scalar function against central
/// differences with h = 1e-5 and return the worst per-coordinate relative
/// error `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`.
///
/// `f` returns the function value and its analytic gradient at a point; the
/// finite-difference probe only uses the value.
pub fn gradient_check<F>(f: F, point: &[f64]) -> f64
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    const H: f64 = 1e-5;
    let (_, analytic) = f(point);
    assert_eq!(analytic.len(), point.len(), "gradient length mismatch");
    let mut worst = 0.0_f64;
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        let x = point[i];
        probe[i] = x + H;
        let (f_plus, _) = f(&probe);
        probe[i] = x - H;
        let (f_minus, _) = f(&probe);
        probe[i] = x;
        let numeric = (f_plus - f_minus) / (2.0 * H);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mlp_backward, mlp_forward, Mat, MlpSpec, ParamStore};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn quadratic_is_exact_to_rounding() {
        let err = gradient_check(|x| (x[0] * x[0], vec![2.0 * x[0]]), &[3.0]);
        assert!(err < 1e-9, "relative error {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let err = gradient_check(|_| (5.0, vec![0.0, 0.0]), &[1.0, -2.0]);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn two_hidden_layer_mlp_loss_checks_out() {
        let spec = MlpSpec::new(3, vec![8, 8], 2);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let params = ParamStore::init(&spec, &mut rng);
        let input = Mat::from_vec(4, 3, (0..12).map(|i| (i as f64 * 0.37).sin()).collect());
        let target = Mat::from_vec(4, 2, (0..8).map(|i| (i as f64 * 0.61).cos()).collect());

        let loss = |flat: &[f64]| -> (f64, Vec<f64>) {
            let p = ParamStore::from_flat(&spec, flat.to_vec()).unwrap();
            let (out, cache) = mlp_forward(&spec, &p, &input).unwrap();
            // Mean squared error over all entries.
            let n = out.data.len() as f64;
            let mut loss = 0.0;
            let mut grad_out = Mat::zeros(out.rows, out.cols);
            for i in 0..out.data.len() {
                let diff = out.data[i] - target.data[i];
                loss += diff * diff / n;
                grad_out.data[i] = 2.0 * diff / n;
            }
            let (grads, _) = mlp_backward(&spec, &p, &cache, &grad_out).unwrap();
            (loss, grads.as_flat().to_vec())
        };
        let err = gradient_check(loss, params.as_flat());
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn input_gradient_checks_out() {
        let spec = MlpSpec::new(3, vec![6], 1);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let params = ParamStore::init(&spec, &mut rng);
        let point = [0.3, -0.9, 1.7];
        let f = |x: &[f64]| -> (f64, Vec<f64>) {
            let input = Mat::from_row(x);
            let (out, cache) = mlp_forward(&spec, &params, &input).unwrap();
            let grad_out = Mat::from_row(&[1.0]);
            let (_, input_grad) = mlp_backward(&spec, &params, &cache, &grad_out).unwrap();
            (out.data[0], input_grad.data)
        };
        let err = gradient_check(f, &point);
        assert!(err <= 1e-4, "max relative error {err}");
    }
}
