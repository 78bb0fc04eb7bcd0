//! Squashed-Gaussian policy head math.
//!
//! The policy network outputs, per action dimension, a mean and a raw log
//! standard deviation (clamped to [-20, 2]). Actions are tanh(mean + std*eps)
//! with the change-of-variables correction log(1 - tanh(u)^2 + 1e-6) applied
//! per dimension.

use crate::nn::Mat;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const TANH_CORRECTION_EPS: f64 = 1e-6;
const LN_2PI: f64 = 1.8378770664093453;

/// Everything produced by one reparameterized sampling pass, kept around so
/// loss gradients can be chained exactly.
pub struct SampledActions {
    /// tanh(u), the executable actions in (-1, 1); batch x k.
    pub actions: Mat,
    /// Pre-squash values u = mean + std * eps.
    pub u: Mat,
    /// The injected standard-normal noise.
    pub eps: Mat,
    /// exp of the clamped log-std.
    pub std: Mat,
    /// True where the raw log-std was inside the clamp range (gradient
    /// flows); false where clamped flat.
    pub clamp_open: Vec<bool>,
    /// Per-row log probability of the sampled action.
    pub log_prob: Vec<f64>,
}

/// Split a policy head output row into (means, raw log-stds).
pub fn split_head(row: &[f64], k: usize) -> (&[f64], &[f64]) {
    (&row[..k], &row[k..2 * k])
}

/// Reparameterized sampling for a batch of head outputs (batch x 2k) with
/// given noise (batch x k).
pub fn sample_actions(head_out: &Mat, k: usize, eps: Mat) -> SampledActions {
    let rows = head_out.rows;
    debug_assert_eq!(head_out.cols, 2 * k);
    debug_assert_eq!(eps.rows, rows);
    debug_assert_eq!(eps.cols, k);
    let mut actions = Mat::zeros(rows, k);
    let mut u = Mat::zeros(rows, k);
    let mut std = Mat::zeros(rows, k);
    let mut clamp_open = vec![false; rows * k];
    let mut log_prob = vec![0.0; rows];
    for r in 0..rows {
        let (means, raw_log_stds) = split_head(head_out.row(r), k);
        let mut lp = 0.0;
        for j in 0..k {
            let raw = raw_log_stds[j];
            let log_std = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            clamp_open[r * k + j] = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
            let s = log_std.exp();
            let e = eps.data[r * k + j];
            let uj = means[j] + s * e;
            let t = uj.tanh();
            u.data[r * k + j] = uj;
            std.data[r * k + j] = s;
            actions.data[r * k + j] = t;
            lp += -0.5 * e * e - log_std - 0.5 * LN_2PI;
            lp -= (1.0 - t * t + TANH_CORRECTION_EPS).ln();
        }
        log_prob[r] = lp;
    }
    SampledActions {
        actions,
        u,
        eps,
        std,
        clamp_open,
        log_prob,
    }
}

/// Deterministic action: tanh of the head means, ignoring the noise head.
pub fn deterministic_action(head_row: &[f64], k: usize) -> Vec<f64> {
    let (means, _) = split_head(head_row, k);
    means.iter().map(|m| m.tanh()).collect()
}

/// Log probability of a concrete squashed action `a` in (-1, 1) under a
/// head output row. Used by validation tests that integrate the density.
pub fn log_prob_of_action(head_row: &[f64], k: usize, action: &[f64]) -> f64 {
    let (means, raw_log_stds) = split_head(head_row, k);
    let mut lp = 0.0;
    for j in 0..k {
        let log_std = raw_log_stds[j].clamp(LOG_STD_MIN, LOG_STD_MAX);
        let s = log_std.exp();
        let a = action[j];
        let u = atanh(a);
        let z = (u - means[j]) / s;
        lp += -0.5 * z * z - log_std - 0.5 * LN_2PI;
        lp -= (1.0 - a * a + TANH_CORRECTION_EPS).ln();
    }
    lp
}

fn atanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Map tanh-space actions in (-1, 1) to environment bounds: the affine map
/// sending [-1, 1] onto [low, high] per component.
pub fn scale_to_bounds(action: &[f64], low: &[f64], high: &[f64]) -> Vec<f64> {
    action
        .iter()
        .enumerate()
        .map(|(i, &a)| 0.5 * (low[i] + high[i]) + 0.5 * (high[i] - low[i]) * a)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_head_gives_zero_deterministic_action() {
        let row = vec![0.0, 0.0, 0.0, 0.0]; // k = 2
        assert_eq!(deterministic_action(&row, 2), vec![0.0, 0.0]);
    }

    #[test]
    fn sampled_actions_stay_inside_unit_cube() {
        let head = Mat::from_vec(2, 2, vec![5.0, 3.0, -5.0, 1.0]); // k = 1
        let eps = Mat::from_vec(2, 1, vec![2.5, -2.5]);
        let s = sample_actions(&head, 1, eps.clone());
        assert_eq!(s.eps.data, eps.data);
        for &a in &s.actions.data {
            assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn density_integrates_to_one_on_a_grid() {
        // Trapezoid rule over the squashed support for a handful of heads.
        for (mean, raw_log_std) in [(0.0, 0.0), (0.5, -1.0), (-1.2, 0.3), (2.0, -0.5)] {
            let head = vec![mean, raw_log_std];
            let n = 400_000;
            let a_min = -1.0 + 1e-7;
            let a_max = 1.0 - 1e-7;
            let h = (a_max - a_min) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let a = a_min + h * i as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * log_prob_of_action(&head, 1, &[a]).exp();
            }
            total *= h;
            assert!(
                (total - 1.0).abs() <= 0.02,
                "density integral {total} for mean {mean}, log_std {raw_log_std}"
            );
        }
    }

    #[test]
    fn scaling_maps_unit_interval_onto_bounds() {
        let a = [-1.0, 0.0, 1.0];
        let out = scale_to_bounds(&a, &[0.0, 0.0, 0.0], &[10.0, 10.0, 10.0]);
        assert_eq!(out, vec![0.0, 5.0, 10.0]);
    }
}
