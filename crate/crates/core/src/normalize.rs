//! Per-utterance global normalization to `[0, 1]`.

use crate::error::{Error, Result};
use crate::types::TfRepresentation;

/// Normalized representation plus the silent-utterance flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub tf: TfRepresentation,
    /// Set when the input was all zero; the output is then all zero too.
    pub silent: bool,
}

/// Divides every value by the single maximum over all channels and frames.
///
/// The maximal element becomes exactly `1.0`. An all-zero input is returned
/// unchanged with `silent` set rather than failing, so corpus runs keep going.
pub fn normalize(tf: &TfRepresentation) -> Result<Normalized> {
    let mut max = 0.0f64;
    for (i, &v) in tf.values().iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "normalization expects finite non-negative values, found {v} at index {i}"
            )));
        }
        max = max.max(v);
    }
    if max == 0.0 {
        log::warn!("silent utterance: representation is all zero");
        return Ok(Normalized {
            tf: tf.clone(),
            silent: true,
        });
    }
    let values = tf.values().iter().map(|&v| v / max).collect();
    Ok(Normalized {
        tf: tf.with_values(values),
        silent: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TfKind;
    use proptest::prelude::*;

    fn tf(rows: Vec<Vec<f64>>) -> TfRepresentation {
        let n = rows.len();
        TfRepresentation::from_rows(rows, 1000.0, (0..n).map(|i| i as f64).collect(), TfKind::Spectrogram)
            .unwrap()
    }

    #[test]
    fn divides_by_global_max() {
        let out = normalize(&tf(vec![vec![1.0, 2.0], vec![3.0, 4.0]])).unwrap();
        assert!(!out.silent);
        assert_eq!(out.tf.values(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn all_zero_is_silent_not_an_error() {
        let zero = TfRepresentation::zeros(24, 100, 1000.0, vec![0.0; 24], TfKind::Cochleagram).unwrap();
        let out = normalize(&zero).unwrap();
        assert!(out.silent);
        assert!(out.tf.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_max_is_identity() {
        let x = tf(vec![vec![0.1, 1.0], vec![0.3, 0.7]]);
        assert_eq!(normalize(&x).unwrap().tf, x);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(normalize(&tf(vec![vec![-0.1, 1.0]])).is_err());
    }

    proptest! {
        #[test]
        fn idempotent_and_ratio_preserving(vals in prop::collection::vec(0.0f64..1e3, 2..64)) {
            prop_assume!(vals.iter().any(|&v| v > 0.0));
            let x = tf(vec![vals.clone()]);
            let once = normalize(&x).unwrap().tf;
            let twice = normalize(&once).unwrap().tf;
            prop_assert_eq!(&once, &twice);

            let max = vals.iter().cloned().fold(0.0, f64::max);
            let argmax = vals.iter().position(|&v| v == max).unwrap();
            prop_assert_eq!(once.values()[argmax], 1.0);
            for (i, &xi) in vals.iter().enumerate() {
                for (j, &xj) in vals.iter().enumerate() {
                    if xj != 0.0 && once.values()[j] != 0.0 {
                        let lhs = once.values()[i] / once.values()[j];
                        let rhs = xi / xj;
                        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
                    }
                }
            }
        }
    }
}
