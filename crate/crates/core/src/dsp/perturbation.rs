//! Cycle-to-cycle perturbation measures.

use alloc::format;

use super::pitch::PulseSequence;
use crate::{Error, Result};

fn local_perturbation(values: &[f64], what: &str) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{what} needs at least 3 cycles, got {}",
            values.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Numeric(format!("{what}: non-positive mean")));
    }
    let diffs: f64 = values.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    Ok(diffs / (values.len() - 1) as f64 / mean)
}

/// `mean|T_i − T_{i+1}| / mean(T_i)`.
pub fn jitter_local(p: &PulseSequence) -> Result<f64> {
    local_perturbation(&p.periods, "jitter")
}

/// `mean|A_i − A_{i+1}| / mean(A_i)`.
pub fn shimmer_local(p: &PulseSequence) -> Result<f64> {
    local_perturbation(&p.peak_amplitudes, "shimmer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn seq(periods: Vec<f64>, amps: Vec<f64>) -> PulseSequence {
        PulseSequence {
            periods,
            peak_amplitudes: amps,
        }
    }

    #[test]
    fn constant_cycles_have_zero_perturbation() {
        let p = seq(vec![0.01; 10], vec![0.5; 10]);
        assert_eq!(jitter_local(&p).unwrap(), 0.0);
        assert_eq!(shimmer_local(&p).unwrap(), 0.0);
    }

    #[test]
    fn alternating_cycles() {
        let periods: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.0099 } else { 0.0101 }).collect();
        let amps: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.9 } else { 1.1 }).collect();
        let p = seq(periods, amps);
        assert!((jitter_local(&p).unwrap() - 0.02).abs() < 1e-12);
        assert!((shimmer_local(&p).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn too_few_cycles() {
        let p = seq(vec![0.01, 0.01], vec![1.0, 1.0]);
        assert!(matches!(jitter_local(&p), Err(Error::InsufficientData(_))));
        assert!(matches!(shimmer_local(&p), Err(Error::InsufficientData(_))));
    }

    proptest! {
        #[test]
        fn scale_invariance(values in prop::collection::vec(0.5f64..2.0, 3..40), c in 0.01f64..100.0) {
            let p = seq(values.clone(), values.clone());
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            let q = seq(scaled.clone(), scaled);
            let (a, b) = (jitter_local(&p).unwrap(), jitter_local(&q).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12) + 1e-15);
            let (a, b) = (shimmer_local(&p).unwrap(), shimmer_local(&q).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12) + 1e-15);
        }
    }
}
