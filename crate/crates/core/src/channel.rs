//! BPSK over AWGN: mapping, noise, matched-filter LLRs and the
//! BPSK-constrained capacity limit.

use crate::convcode::LlrFrame;
use crate::error::{Error, Result};
use crate::numeric::{bisect, j_function};
use crate::rng::{rng_from_seed, SimRng};
use rand::Rng;
use rand_distr::StandardNormal;

/// Lower end of the capacity root search (just below the Shannon limit).
pub const LIMIT_SEARCH_LO_DB: f64 = -1.60;
/// Upper end of the capacity root search.
pub const LIMIT_SEARCH_HI_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelParams {
    pub eb_n0_db: f64,
    pub rate: f64,
    pub sigma2: f64,
}

impl ChannelParams {
    /// Unit-energy symbols: `sigma2 = 1 / (2 R 10^(Eb/N0 / 10))`.
    pub fn new(eb_n0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("code rate {rate} must be positive")));
        }
        if !eb_n0_db.is_finite() {
            return Err(Error::Domain(format!("Eb/N0 {eb_n0_db} dB is not finite")));
        }
        Ok(Self {
            eb_n0_db,
            rate,
            sigma2: noise_variance(eb_n0_db, rate),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

pub fn noise_variance(eb_n0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0))
}

/// Bit 0 maps to +1, bit 1 to -1.
#[inline]
pub fn bpsk(bit: u8) -> f64 {
    1.0 - 2.0 * f64::from(bit & 1)
}

/// `y = x + n` with `n ~ Normal(0, sigma2)` drawn from `rng`.
pub fn transmit_with(bits: &[u8], sigma2: f64, rng: &mut SimRng) -> Vec<f64> {
    let sigma = sigma2.max(0.0).sqrt();
    bits.iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            bpsk(b) + sigma * n
        })
        .collect()
}

pub fn transmit(bits: &[u8], params: &ChannelParams, seed: u64) -> Vec<f64> {
    transmit_with(bits, params.sigma2, &mut rng_from_seed(seed))
}

/// Matched-filter LLRs `2 y / sigma2`.
pub fn channel_llrs(y: &[f64], sigma2: f64) -> Result<LlrFrame> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise variance {sigma2} must be positive")));
    }
    let scale = 2.0 / sigma2;
    Ok(y.iter().map(|&v| scale * v).collect::<Vec<_>>().into())
}

/// Mutual information (bits per channel use) of equiprobable BPSK at noise
/// variance `sigma2`: the channel LLR is consistent Gaussian with standard
/// deviation `2 / sigma`.
pub fn bpsk_capacity(sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return 1.0;
    }
    j_function(2.0 / sigma2.sqrt())
}

/// Minimum Eb/N0 (dB) at which BPSK-input capacity equals `rate`.
pub fn bpsk_limit_db(rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Domain(format!("rate {rate} outside (0, 1]")));
    }
    let excess = |db: f64| bpsk_capacity(noise_variance(db, rate)) - rate;
    let no_root = || {
        Error::NoConvergence(format!(
            "BPSK capacity never exceeds rate {rate} on [{LIMIT_SEARCH_LO_DB}, {LIMIT_SEARCH_HI_DB}] dB"
        ))
    };
    if excess(LIMIT_SEARCH_HI_DB) <= 0.0 {
        return Err(no_root());
    }
    bisect(excess, LIMIT_SEARCH_LO_DB, LIMIT_SEARCH_HI_DB, 1e-5, true).map_err(|_| no_root())
}

/// Distance in dB from the BPSK capacity limit at `rate`.
pub fn bpsk_capacity_gap(rate: f64, eb_n0_db: f64) -> Result<f64> {
    Ok(eb_n0_db - bpsk_limit_db(rate)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{log2_one_plus_exp_neg, q_function};
    use proptest::prelude::*;

    /// Monte Carlo BPSK mutual information: `1 - E[log2(1 + e^{-L})]`
    /// over transmitted +1 symbols.
    fn mc_capacity(sigma2: f64, n: usize, seed: u64) -> f64 {
        let y = transmit_with(&vec![0u8; n], sigma2, &mut rng_from_seed(seed));
        let s: f64 = y.iter().map(|&v| log2_one_plus_exp_neg(2.0 * v / sigma2)).sum();
        1.0 - s / n as f64
    }

    #[test]
    fn noise_variance_formula() {
        let p = ChannelParams::new(3.0, 5.0 / 6.0).unwrap();
        assert!((p.sigma2 - 0.3006).abs() < 2e-4, "{}", p.sigma2);
        assert!(ChannelParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_limit_is_exact() {
        let bits = [0u8, 1, 1, 0, 1];
        let y = transmit_with(&bits, 0.0, &mut rng_from_seed(3));
        assert_eq!(y, vec![1.0, -1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn sample_variance_matches() {
        let n = 1_000_000;
        let y = transmit_with(&vec![0u8; n], 0.5, &mut rng_from_seed(11));
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 0.5).abs() / 0.5 < 0.01, "{var}");
        assert!((mean - 1.0).abs() < 0.005);
    }

    #[test]
    fn transmit_is_seed_deterministic() {
        let p = ChannelParams::new(1.0, 0.5).unwrap();
        let bits = vec![1u8; 64];
        assert_eq!(transmit(&bits, &p, 5), transmit(&bits, &p, 5));
        assert_ne!(transmit(&bits, &p, 5), transmit(&bits, &p, 6));
    }

    #[test]
    fn llr_values() {
        let l = channel_llrs(&[0.0, 1.0, -0.25], 0.5).unwrap();
        assert_eq!(&l[..], &[0.0, 4.0, -1.0]);
        assert!(channel_llrs(&[1.0], 0.0).is_err());
        assert!(channel_llrs(&[1.0], -1.0).is_err());
    }

    #[test]
    fn uncoded_ber_matches_q() {
        let p = ChannelParams::new(4.0, 1.0).unwrap();
        let n = 1_000_000;
        let bits: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        let y = transmit(&bits, &p, 99);
        let l = channel_llrs(&y, p.sigma2).unwrap();
        let errors = bits
            .iter()
            .zip(l.iter())
            .filter(|(&b, &v)| (v < 0.0) != (b == 1))
            .count();
        let ber = errors as f64 / n as f64;
        let expected = q_function((2.0 * 10f64.powf(0.4)).sqrt());
        let sd = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((ber - expected).abs() < 4.0 * sd, "{ber} vs {expected}");
    }

    #[test]
    fn capacity_agrees_with_monte_carlo() {
        for &s2 in &[0.3, 0.8, 1.5, 4.0] {
            let gh = bpsk_capacity(s2);
            let mc = mc_capacity(s2, 400_000, 7);
            assert!((gh - mc).abs() < 4e-3, "sigma2={s2}: {gh} vs {mc}");
        }
    }

    #[test]
    fn half_rate_limit() {
        let lim = bpsk_limit_db(0.5).unwrap();
        assert!((lim - 0.19).abs() < 0.01, "{lim}");
        // Independent check: Monte Carlo capacity at the computed limit is ~1/2.
        let mc = mc_capacity(noise_variance(lim, 0.5), 1_000_000, 21);
        assert!((mc - 0.5).abs() < 3e-3, "{mc}");
    }

    #[test]
    fn low_rate_limit_approaches_shannon() {
        let lim = bpsk_limit_db(1e-4).unwrap();
        let shannon = 10.0 * std::f64::consts::LN_2.log10();
        assert!((lim - shannon).abs() < 0.01, "{lim} vs {shannon}");
    }

    #[test]
    fn gap_vanishes_at_limit() {
        for &r in &[0.25, 0.5, 2.0 / 3.0, 0.9] {
            let lim = bpsk_limit_db(r).unwrap();
            assert!(bpsk_capacity_gap(r, lim).unwrap().abs() < 1e-12);
        }
        assert!(bpsk_limit_db(1.0).is_err());
        assert!(bpsk_limit_db(0.0).is_err());
    }

    #[test]
    fn capacity_increases_with_snr() {
        let mut prev = 0.0;
        for i in 0..60 {
            let c = bpsk_capacity(noise_variance(-2.0 + 0.25 * i as f64, 0.5));
            assert!(c > prev);
            prev = c;
        }
    }

    proptest! {
        #[test]
        fn llr_is_odd_and_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, s2 in 0.01f64..5.0) {
            let l = channel_llrs(&[a, b, -a], s2).unwrap();
            prop_assert_eq!(l[2], -l[0]);
            if a < b { prop_assert!(l[0] < l[1]); }
        }
    }
}
