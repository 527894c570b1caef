//! Evaluation metrics: mean absolute error and exact-match accuracy.

use crate::error::{Error, Result};

/// Mean absolute error between predictions and ground truth.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Fraction of exact matches between predicted and true class ids.
pub fn accuracy(pred: &[i64], truth: &[i64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    if a == 0 {
        return Err(Error::InvalidArgument("metric on empty vectors".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_hand_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0], &[5.0]).unwrap(), 5.0);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_hand_cases() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 1]).unwrap(), 2.0 / 3.0);
        assert_eq!(accuracy(&[4, 4], &[4, 4]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 2]).unwrap(), 0.0);
        assert!(accuracy(&[0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn metrics_permutation_invariant(
            pairs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rng);

            let (p1, t1): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
            let (p2, t2): (Vec<f64>, Vec<f64>) = shuffled.iter().cloned().unzip();
            prop_assert!((mae(&p1, &t1).unwrap() - mae(&p2, &t2).unwrap()).abs() < 1e-12);

            let c1: Vec<i64> = p1.iter().map(|v| *v as i64).collect();
            let d1: Vec<i64> = t1.iter().map(|v| *v as i64).collect();
            let c2: Vec<i64> = p2.iter().map(|v| *v as i64).collect();
            let d2: Vec<i64> = t2.iter().map(|v| *v as i64).collect();
            prop_assert_eq!(accuracy(&c1, &d1).unwrap(), accuracy(&c2, &d2).unwrap());
        }
    }
}
