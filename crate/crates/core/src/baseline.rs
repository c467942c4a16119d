//! Conventional (non-robust) total-MMSE design that treats the channel mean
//! as the true channel.
//!
//! This is the robust iteration with every uncertainty term dropped: the
//! `tr(S R_t) R_r` term of the receiver update and `Y` in the precoder update
//! both vanish when `R_r = 0`, so the baseline runs the shared alternation on
//! [`ChannelStats::mean_only`] statistics.

use rand::Rng;

use crate::channel::ChannelStats;
use crate::error::Result;
use crate::robust::{self, SolverSettings, TransceiverDesign};

pub fn design_baseline<R: Rng + ?Sized>(
    stats: &[ChannelStats],
    settings: &SolverSettings,
    rng: &mut R,
) -> Result<TransceiverDesign> {
    let mean_only: Vec<ChannelStats> = stats.iter().map(ChannelStats::mean_only).collect();
    robust::alternate(&mean_only, settings, rng)
}

/// The objective the baseline minimizes: the closed-form average MSE with
/// the receive correlation set to zero.
pub fn baseline_objective(
    design: &TransceiverDesign,
    stats: &[ChannelStats],
    noise_var: f64,
) -> Result<f64> {
    let mean_only: Vec<ChannelStats> = stats.iter().map(ChannelStats::mean_only).collect();
    design.tmse(&mean_only, noise_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{exp_correlation, ChannelStatsRaw, CorrelationMatrix, RicianFactor};
    use crate::linalg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats(w: RicianFactor, seed: u64) -> Vec<ChannelStats> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2)
            .map(|_| {
                ChannelStatsRaw::new(
                    linalg::complex_gaussian(2, 4, &mut rng),
                    CorrelationMatrix::identity(2),
                    exp_correlation(4, 0.9).unwrap(),
                    w,
                )
                .unwrap()
                .to_equivalent()
            })
            .collect()
    }

    #[test]
    fn trace_matches_mean_only_objective() {
        let st = stats(RicianFactor::Finite(10.0), 5);
        let settings = SolverSettings::from_snr_db(1.0, 20.0, 2);
        let d = design_baseline(&st, &settings, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let last = *d.tmse_trace.last().unwrap();
        assert!((baseline_objective(&d, &st, settings.noise_var).unwrap() - last).abs() < 1e-12);
        // the true average MSE of the baseline includes the uncertainty term
        assert!(d.tmse(&st, settings.noise_var).unwrap() > last);
    }

    #[test]
    fn feasible_and_slack() {
        for seed in 0..20 {
            let st = stats(RicianFactor::Finite(50.0), seed);
            let settings = SolverSettings::from_snr_db(1.0, 5.0 * (seed % 7) as f64, 2);
            let d = design_baseline(&st, &settings, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let used = d.transmit_power();
            assert!(used <= settings.power * (1.0 + 1e-9));
            assert!((d.lambda * (used - settings.power)).abs() <= 1e-6 * settings.power);
        }
    }

    #[test]
    fn coincides_with_robust_design_without_uncertainty() {
        let st = stats(RicianFactor::Infinite, 8);
        let settings = SolverSettings::from_snr_db(1.0, 10.0, 2);
        let r = robust::design(&st, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = design_baseline(&st, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(r, b);
    }
}
