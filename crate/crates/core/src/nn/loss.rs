use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean softmax cross-entropy over a `B×M` batch of logits and the gradient
/// `(softmax − onehot) / B`.
pub fn softmax_cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[1] < 2 {
        return Err(Error::shape(format!("logits must be B×M with M ≥ 2, got {shape:?}")));
    }
    let (b, m) = (shape[0], shape[1]);
    if labels.len() != b {
        return Err(Error::shape(format!("{b} logit rows but {} labels", labels.len())));
    }
    let scale = T::one() / T::from_count(b);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(b * m);
    for (i, &label) in labels.iter().enumerate() {
        if label >= m {
            return Err(Error::invalid(format!("label {label} out of range for {m} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        loss = loss + (total.ln() - (row[label] - max)) * scale;
        for (j, e) in exps.into_iter().enumerate() {
            let p = e / total;
            let target = if j == label { T::one() } else { T::zero() };
            grad.push((p - target) * scale);
        }
    }
    Ok((loss, Tensor::new(vec![b, m], grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_give_log_m() {
        let (loss, _) = softmax_cross_entropy(&Tensor::<f64>::zeros(vec![1, 4]), &[2]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gradient_rows_sum_to_zero_and_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..15).map(|_| rng.random_range(-3.0..3.0)).collect();
        let logits = Tensor::new(vec![3, 5], data).unwrap();
        let labels = [4, 0, 2];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        for r in 0..3 {
            assert!(grad.row(r).iter().sum::<f64>().abs() < 1e-12);
        }
        let h = 1e-6;
        for i in 0..15 {
            let mut p = logits.clone();
            p.data_mut()[i] += h;
            let mut m = logits.clone();
            m.data_mut()[i] -= h;
            let num = (softmax_cross_entropy(&p, &labels).unwrap().0 - softmax_cross_entropy(&m, &labels).unwrap().0)
                / (2.0 * h);
            let ana = grad.data()[i];
            assert!((num - ana).abs() / ana.abs().max(1e-8) < 1e-6, "{num} vs {ana}");
        }
    }

    #[test]
    fn rejects_bad_labels() {
        let logits = Tensor::<f64>::zeros(vec![2, 3]);
        assert!(softmax_cross_entropy(&logits, &[0, 3]).is_err());
        assert!(softmax_cross_entropy(&logits, &[0]).is_err());
        assert!(softmax_cross_entropy(&Tensor::<f64>::zeros(vec![2, 1]), &[0, 0]).is_err());
    }

    #[test]
    fn large_logits_stay_finite() {
        let logits = Tensor::new(vec![1, 3], vec![1000.0f64, -1000.0, 999.0]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss.is_finite() && grad.is_finite());
    }
}
