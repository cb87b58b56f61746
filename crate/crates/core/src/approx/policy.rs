//! Diagonal-Gaussian policy heads.

use rand::Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

/// Mean and log-σ of a diagonal Gaussian for a single state.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

/// `a = μ + σ ⊙ ε` with the exact log-density of the draw.
pub fn sample_and_logprob<R: Rng>(out: &PolicyOutput, rng: &mut R) -> (Vec<f64>, f64) {
    let action: Vec<f64> = out
        .mean
        .iter()
        .zip(&out.log_std)
        .map(|(m, ls)| {
            let eps: f64 = rng.sample(StandardNormal);
            m + ls.exp() * eps
        })
        .collect();
    let logp = log_prob(out, &action);
    (action, logp)
}

/// Exact diagonal-Gaussian log-density.
pub fn log_prob(out: &PolicyOutput, action: &[f64]) -> f64 {
    debug_assert_eq!(action.len(), out.mean.len());
    let mut logp = -0.5 * LN_2PI * action.len() as f64;
    for ((a, m), ls) in action.iter().zip(&out.mean).zip(&out.log_std) {
        let inv_std = (-ls).exp();
        let z = (a - m) * inv_std;
        logp -= 0.5 * z * z + ls;
    }
    logp
}

/// Gradients of the log-density: (∂logp/∂μ, ∂logp/∂logσ).
pub fn log_prob_grad(out: &PolicyOutput, action: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(out.mean.len());
    let mut d_log_std = Vec::with_capacity(out.mean.len());
    for ((a, m), ls) in action.iter().zip(&out.mean).zip(&out.log_std) {
        let inv_var = (-2.0 * ls).exp();
        let diff = a - m;
        d_mean.push(diff * inv_var);
        d_log_std.push(diff * diff * inv_var - 1.0);
    }
    (d_mean, d_log_std)
}

/// Differential entropy of the diagonal Gaussian: Σ (logσ + ½(1 + ln 2π)).
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum()
}

/// Radially rescale a force so ‖f‖₂ ≤ f_max; direction is preserved.
pub fn clip_force_l2(force: &[f64], f_max: f64) -> Vec<f64> {
    let norm = force.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > f_max && norm > 0.0 {
        let s = f_max / norm;
        force.iter().map(|v| v * s).collect()
    } else {
        force.to_vec()
    }
}

/// A disturber draw: the raw Gaussian sample, the applied force in Newtons
/// after scaling and clipping, and the pre-clip log-density of the raw
/// sample.
#[derive(Debug, Clone)]
pub struct SampledForce {
    pub raw: Vec<f64>,
    pub applied: Vec<f64>,
    pub logp: f64,
}

/// Sample the disturber head: the Gaussian lives in a normalized space,
/// the applied force is `raw × force_scale` clipped to ‖f‖₂ ≤ f_max.
pub fn sample_force_clipped<R: Rng>(out: &PolicyOutput, rng: &mut R, force_scale: f64, f_max: f64) -> SampledForce {
    let (raw, logp) = sample_and_logprob(out, rng);
    let scaled: Vec<f64> = raw.iter().map(|v| v * force_scale).collect();
    let applied = clip_force_l2(&scaled, f_max);
    SampledForce { raw, applied, logp }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn logp_at_mean_unit_sigma() {
        let out = PolicyOutput { mean: vec![0.3], log_std: vec![0.0] };
        let lp = log_prob(&out, &[0.3]);
        assert!((lp - (-0.5 * LN_2PI)).abs() < 1e-12);
        assert!((lp - (-0.9189)).abs() < 1e-4);
    }

    #[test]
    fn sigma_floor_collapses_to_mean() {
        // At the σ clamp floor the sampled action is numerically the mean.
        let out = PolicyOutput { mean: vec![1.25, -2.0], log_std: vec![super::super::LOG_STD_MIN; 2] };
        let (a, _) = sample_and_logprob(&out, &mut rng::stream(&[9]));
        for (x, m) in a.iter().zip(&out.mean) {
            assert!((x - m).abs() < 0.01);
        }
    }

    #[test]
    fn monte_carlo_mean() {
        // Sample mean of 1e5 draws lands within 3σ/√n of the true mean.
        let out = PolicyOutput { mean: vec![0.5, -1.0], log_std: vec![0.2, -0.3] };
        let n = 100_000;
        let mut rng = rng::stream(&[123]);
        let mut sums = [0.0f64; 2];
        for _ in 0..n {
            let (a, _) = sample_and_logprob(&out, &mut rng);
            sums[0] += a[0];
            sums[1] += a[1];
        }
        for dim in 0..2 {
            let mean = sums[dim] / n as f64;
            let sigma = out.log_std[dim].exp();
            let tol = 3.0 * sigma / (n as f64).sqrt();
            assert!((mean - out.mean[dim]).abs() < tol, "dim {dim}: {mean} vs {}", out.mean[dim]);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // 1-D grid integration of exp(logp) within 1e-3.
        let out = PolicyOutput { mean: vec![0.7], log_std: vec![-0.4] };
        let sigma = (-0.4f64).exp();
        let (lo, hi) = (0.7 - 10.0 * sigma, 0.7 + 10.0 * sigma);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let a = lo + (i as f64 + 0.5) * h;
            integral += log_prob(&out, &[a]).exp() * h;
        }
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn logp_grad_matches_finite_difference() {
        let out = PolicyOutput { mean: vec![0.2, -0.5], log_std: vec![-0.1, 0.3] };
        let action = [0.5, -0.2];
        let (dm, ds) = log_prob_grad(&out, &action);
        let h = 1e-6;
        for i in 0..2 {
            let mut plus = out.clone();
            plus.mean[i] += h;
            let mut minus = out.clone();
            minus.mean[i] -= h;
            let fd = (log_prob(&plus, &action) - log_prob(&minus, &action)) / (2.0 * h);
            assert!((fd - dm[i]).abs() < 1e-6);

            let mut plus = out.clone();
            plus.log_std[i] += h;
            let mut minus = out.clone();
            minus.log_std[i] -= h;
            let fd = (log_prob(&plus, &action) - log_prob(&minus, &action)) / (2.0 * h);
            assert!((fd - ds[i]).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn clipped_force_never_exceeds_fmax(fx in -500.0f64..500.0, fy in -500.0f64..500.0) {
            let clipped = clip_force_l2(&[fx, fy], 100.0);
            let norm = (clipped[0] * clipped[0] + clipped[1] * clipped[1]).sqrt();
            prop_assert!(norm <= 100.0 + 1e-9);
            // Direction preserved
            let orig = (fx * fx + fy * fy).sqrt();
            if orig > 1e-9 {
                let cos = (clipped[0] * fx + clipped[1] * fy) / (norm.max(1e-300) * orig);
                prop_assert!(cos > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn sampled_force_clipped_records_preclip_logp() {
        let out = PolicyOutput { mean: vec![3.0, 0.0], log_std: vec![0.0, 0.0] };
        let f = sample_force_clipped(&out, &mut rng::stream(&[55]), 50.0, 100.0);
        let applied_norm = (f.applied[0].powi(2) + f.applied[1].powi(2)).sqrt();
        assert!(applied_norm <= 100.0 + 1e-9);
        // logp is the density of the raw draw, not the clipped force.
        assert!((f.logp - log_prob(&out, &f.raw)).abs() < 1e-12);
    }
}
