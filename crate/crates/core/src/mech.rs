//! Exponential-mechanism baseline.

use rayon::prelude::*;

use crate::instance::MdpInstance;
use crate::pmo::PerturbationMatrix;

/// `z[i][k] ∝ exp(-eps * d(r_i, o_k) / 2)`, evaluated with a max shift.
pub fn exponential_mechanism(instance: &MdpInstance) -> PerturbationMatrix {
    let eps = instance.epsilon();
    let z = instance
        .output_dist()
        .par_iter()
        .map(|row| softmax_row(row, eps))
        .collect();
    PerturbationMatrix { z }
}

fn softmax_row(dist: &[f64], eps: f64) -> Vec<f64> {
    let logits: Vec<f64> = dist.iter().map(|d| -eps * d / 2.0).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_example() {
        let z = softmax_row(&[0.0, 4f64.ln()], 2.0);
        assert!((z[0] - 0.8).abs() < 1e-15);
        assert!((z[1] - 0.2).abs() < 1e-15);
        assert_eq!(softmax_row(&[3.0], 5.0), vec![1.0]);
    }

    #[test]
    fn no_nan_under_extreme_distances() {
        let z = softmax_row(&[1e6, 2e6, 1e308], 10.0);
        assert!(z.iter().all(|v| v.is_finite()));
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentrates_as_epsilon_grows() {
        let mut last = 0.0;
        for eps in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let p = softmax_row(&[0.0, 3.0, 4.0], eps)[0];
            assert!(p >= last);
            last = p;
        }
        assert!(last > 1.0 - 1e-12);
    }
}
