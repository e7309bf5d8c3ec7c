//! Monte Carlo BER/FER measurement and the combined EXIT + union-bound
//! prediction curve.
//!
//! Frames are simulated in fixed-size batches. Frame `f` of SNR point `p`
//! draws all of its randomness from `derive_seed(derive_seed(seed, p), f)`,
//! and the stop rule is checked only between batches, so the counts do not
//! depend on the number of worker threads or on scheduling order.

use crate::channel::{channel_llrs, transmit_with, ChannelParams};
use crate::error::{Error, Result};
use crate::exit::{Chart, ExitSettings};
use crate::interleaving::InterleaverKind;
use crate::puncturing::CodeDimensions;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sccc::{hard_decisions, DecodeOptions, ScccConfig, Termination};
use crate::wef::BitErrorSpectrum;
use crate::convcode::SisoAlgorithm;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Frames simulated between two stop-rule checks.
pub const BATCH_FRAMES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop once this many bit errors have been counted.
    pub min_bit_errors: u64,
    /// Stop once this many information bits have been simulated.
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 100,
            max_bits: 10_000_000,
        }
    }
}

impl StopRule {
    pub fn done(&self, bit_errors: u64, bits: u64) -> bool {
        bit_errors >= self.min_bit_errors || bits >= self.max_bits
    }
}

/// What is simulated.
#[derive(Debug, Clone)]
pub enum SimTarget<'a> {
    Coded {
        config: &'a ScccConfig,
        options: DecodeOptions,
    },
    /// Uncoded BPSK with `frame_len` bits per frame (rate 1).
    Uncoded { frame_len: usize },
}

impl SimTarget<'_> {
    fn rate(&self) -> f64 {
        match self {
            SimTarget::Coded { config, .. } => config.realized_rate(),
            SimTarget::Uncoded { .. } => 1.0,
        }
    }

    fn n_iterations(&self) -> usize {
        match self {
            SimTarget::Coded { options, .. } => options.n_iterations,
            SimTarget::Uncoded { .. } => 0,
        }
    }

    fn frame_bits(&self) -> usize {
        match self {
            SimTarget::Coded { config, .. } => config.info_len(),
            SimTarget::Uncoded { frame_len } => *frame_len,
        }
    }
}

/// Error counts of a set of frames; merging is associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub bits: u64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Bit errors after each iteration (coded runs only).
    pub bit_errors_per_iteration: Vec<u64>,
}

impl Counts {
    pub fn merge(mut self, other: &Counts) -> Counts {
        self.bits += other.bits;
        self.frames += other.frames;
        self.bit_errors += other.bit_errors;
        self.frame_errors += other.frame_errors;
        if self.bit_errors_per_iteration.len() < other.bit_errors_per_iteration.len() {
            self.bit_errors_per_iteration
                .resize(other.bit_errors_per_iteration.len(), 0);
        }
        for (a, b) in self
            .bit_errors_per_iteration
            .iter_mut()
            .zip(&other.bit_errors_per_iteration)
        {
            *a += b;
        }
        self
    }
}

/// Simulates one frame with its own seed.
pub fn simulate_frame(target: &SimTarget<'_>, sigma2: f64, seed: u64) -> Result<Counts> {
    let mut rng = rng_from_seed(seed);
    let n = target.frame_bits();
    let info: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let (decided, per_iteration) = match target {
        SimTarget::Uncoded { .. } => {
            let y = transmit_with(&info, sigma2, &mut rng);
            (hard_decisions(&channel_llrs(&y, sigma2)?), Vec::new())
        }
        SimTarget::Coded { config, options } => {
            let cw = config.encode(&info)?.to_bits();
            let y = transmit_with(&cw, sigma2, &mut rng);
            let res = config.decode(&channel_llrs(&y, sigma2)?, options)?;
            let mut per: Vec<u64> = res
                .app
                .iter()
                .map(|a| errors(&hard_decisions(a), &info))
                .collect();
            // An early-stopped frame keeps its last decisions.
            let last = *per.last().unwrap_or(&0);
            per.resize(options.n_iterations, last);
            (res.bits, per)
        }
    };
    let e = errors(&decided, &info);
    Ok(Counts {
        bits: n as u64,
        frames: 1,
        bit_errors: e,
        frame_errors: u64::from(e > 0),
        bit_errors_per_iteration: per_iteration,
    })
}

fn errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub eb_n0_db: f64,
    pub ber: f64,
    pub fer: f64,
    pub counts: Counts,
    pub n_iterations: usize,
    pub seed: u64,
    /// True when the stop rule was not met (should not happen with finite limits).
    pub partial: bool,
}

impl BerPoint {
    fn from_counts(eb_n0_db: f64, counts: Counts, n_iterations: usize, seed: u64, partial: bool) -> Self {
        let ber = counts.bit_errors as f64 / counts.bits.max(1) as f64;
        let fer = counts.frame_errors as f64 / counts.frames.max(1) as f64;
        Self {
            eb_n0_db,
            ber,
            fer,
            counts,
            n_iterations,
            seed,
            partial,
        }
    }

    /// BER after iteration `i` (1-based).
    pub fn ber_at_iteration(&self, i: usize) -> Option<f64> {
        self.counts
            .bit_errors_per_iteration
            .get(i.checked_sub(1)?)
            .map(|&e| e as f64 / self.counts.bits.max(1) as f64)
    }

    /// Normal-approximation standard error of the BER.
    pub fn std_error(&self) -> f64 {
        let n = self.counts.bits.max(1) as f64;
        (self.ber * (1.0 - self.ber) / n).sqrt()
    }
}

/// Simulates one SNR point until the stop rule fires.
pub fn run_point(target: &SimTarget<'_>, eb_n0_db: f64, stop: &StopRule, seed: u64) -> Result<BerPoint> {
    let params = ChannelParams::new(eb_n0_db, target.rate())?;
    let mut total = Counts::default();
    let mut next_frame = 0u64;
    while !stop.done(total.bit_errors, total.bits) {
        let batch: Vec<Counts> = (next_frame..next_frame + BATCH_FRAMES)
            .into_par_iter()
            .map(|f| simulate_frame(target, params.sigma2, derive_seed(seed, f)))
            .collect::<Result<_>>()?;
        total = batch.iter().fold(total, |acc, c| acc.merge(c));
        next_frame += BATCH_FRAMES;
    }
    Ok(BerPoint::from_counts(eb_n0_db, total, target.n_iterations(), seed, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub manifest: RunManifest,
}

pub const BER_CSV_HEADER: &str = "eb_n0_db,ber,fer,bits,frames,bit_errors,frame_errors";

impl BerCurve {
    /// CSV `eb_n0_db,ber,fer,bits,frames,bit_errors,frame_errors`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{BER_CSV_HEADER}\n");
        for p in &self.points {
            let c = &p.counts;
            writeln!(
                s,
                "{},{:e},{:e},{},{},{},{}",
                p.eb_n0_db, p.ber, p.fer, c.bits, c.frames, c.bit_errors, c.frame_errors
            )
            .unwrap();
        }
        s
    }
}

/// Everything needed to re-run a simulation bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub mode: String,
    pub dims: Option<CodeDimensions>,
    pub upper_pattern: Option<String>,
    pub lower_pattern: Option<String>,
    pub interleaver: Option<InterleaverKind>,
    pub interleaver_seed: Option<u64>,
    pub termination: Option<Termination>,
    pub algorithm: Option<SisoAlgorithm>,
    pub n_iterations: usize,
    /// Iterations are counted as one lower pass followed by one upper pass.
    pub iteration_definition: String,
    pub early_stop: bool,
    pub frame_bits: usize,
    pub seed: u64,
    /// Seed of point `p` is `derive_seed(seed, p)`; frame `f` uses `derive_seed(point_seed, f)`.
    pub seed_rule: String,
    pub stop_rule: StopRule,
    pub batch_frames: u64,
    pub eb_n0_db: Vec<f64>,
}

impl RunManifest {
    pub fn new(target: &SimTarget<'_>, snrs: &[f64], stop: &StopRule, seed: u64) -> Self {
        let mut m = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode: "uncoded".into(),
            dims: None,
            upper_pattern: None,
            lower_pattern: None,
            interleaver: None,
            interleaver_seed: None,
            termination: None,
            algorithm: None,
            n_iterations: target.n_iterations(),
            iteration_definition: "lower SISO pass followed by upper SISO pass".into(),
            early_stop: false,
            frame_bits: target.frame_bits(),
            seed,
            seed_rule: "splitmix64(master + golden * (stream + 1)), point then frame".into(),
            stop_rule: *stop,
            batch_frames: BATCH_FRAMES,
            eb_n0_db: snrs.to_vec(),
        };
        if let SimTarget::Coded { config, options } = target {
            m.mode = "coded".into();
            m.dims = Some(config.dims());
            m.upper_pattern = Some(config.upper_pattern().to_string());
            m.lower_pattern = Some(config.lower_pattern().to_string());
            m.interleaver = Some(config.interleaver().kind());
            m.interleaver_seed = Some(config.interleaver().seed());
            m.termination = Some(config.termination());
            m.algorithm = Some(config.algorithm());
            m.early_stop = options.early_stop;
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// BER curve over an SNR grid.
pub fn run_ber(target: &SimTarget<'_>, snrs: &[f64], stop: &StopRule, seed: u64) -> Result<BerCurve> {
    let points = snrs
        .iter()
        .enumerate()
        .map(|(p, &snr)| run_point(target, snr, stop, derive_seed(seed, p as u64)))
        .collect::<Result<_>>()?;
    Ok(BerCurve {
        points,
        manifest: RunManifest::new(target, snrs, stop, seed),
    })
}

/// Which analysis supplies a point of the combined curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exit,
    Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedPoint {
    pub eb_n0_db: f64,
    pub exit_pb: f64,
    pub bound_pb: f64,
    pub pb: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedCurve {
    pub points: Vec<CombinedPoint>,
    /// SNR above which the bound is used.
    pub crossover_db: Option<f64>,
    /// True when the EXIT prediction is above the bound at the top of the
    /// grid, so no crossover exists; both columns are still emitted.
    pub flagged: bool,
    pub rule: String,
}

pub const COMBINED_CSV_HEADER: &str = "eb_n0_db,exit_pb,bound_pb,pb,source";

impl CombinedCurve {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{COMBINED_CSV_HEADER}\n");
        for p in &self.points {
            let src = match p.source {
                Source::Exit => "exit",
                Source::Bound => "bound",
            };
            writeln!(s, "{},{:e},{:e},{:e},{src}", p.eb_n0_db, p.exit_pb, p.bound_pb, p.pb).unwrap();
        }
        s
    }
}

/// Composes an EXIT-predicted curve with a union bound.
///
/// The crossover is the first grid point from which on the EXIT prediction
/// stays at or below the bound; from there the bound is used, below it the
/// EXIT prediction. If the EXIT prediction is still above the bound at the top
/// of the grid there is no crossover; the curve is flagged and uses the EXIT
/// prediction throughout.
pub fn compose(snrs: &[f64], exit_pb: &[f64], bound_pb: &[f64]) -> Result<CombinedCurve> {
    if snrs.len() != exit_pb.len() || snrs.len() != bound_pb.len() {
        return Err(Error::Length {
            what: "combined prediction columns",
            expected: snrs.len(),
            actual: exit_pb.len().min(bound_pb.len()),
        });
    }
    if snrs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("SNR grid must be strictly increasing".into()));
    }
    // Last index where the EXIT prediction exceeds the bound.
    let last_above = (0..snrs.len()).rev().find(|&i| exit_pb[i] > bound_pb[i]);
    let start = last_above.map_or(0, |i| i + 1);
    let crossover_db = snrs.get(start).copied();
    let points = (0..snrs.len())
        .map(|i| {
            let source = if i >= start { Source::Bound } else { Source::Exit };
            CombinedPoint {
                eb_n0_db: snrs[i],
                exit_pb: exit_pb[i],
                bound_pb: bound_pb[i],
                pb: if source == Source::Bound { bound_pb[i] } else { exit_pb[i] },
                source,
            }
        })
        .collect();
    Ok(CombinedCurve {
        points,
        crossover_db,
        flagged: crossover_db.is_none(),
        rule: "EXIT prediction below the crossover, union bound from the first SNR at which \
               the EXIT prediction stays at or below the bound"
            .into(),
    })
}

/// EXIT predictions at each grid SNR (equivalent chart, common random
/// numbers across points) combined with the union bound of `spectrum`.
pub fn combined_prediction(
    cfg: &ScccConfig,
    spectrum: &BitErrorSpectrum,
    snrs: &[f64],
    n_iterations: usize,
    settings: &ExitSettings,
) -> Result<CombinedCurve> {
    let exit_pb: Vec<f64> = snrs
        .iter()
        .map(|&snr| Ok(Chart::equivalent(cfg, snr, settings)?.trajectory(n_iterations)?.predicted_pb))
        .collect::<Result<_>>()?;
    let bound_pb: Vec<f64> = snrs.iter().map(|&snr| spectrum.bound(snr)).collect();
    compose(snrs, &exit_pb, &bound_pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interleaving::Interleaver;
    use crate::numeric::q_function;
    use crate::puncturing::PuncturePattern;

    fn small_config() -> ScccConfig {
        ScccConfig::new(
            200,
            PuncturePattern::all_ones(100),
            PuncturePattern::all_ones(300),
            Interleaver::random(300, 4).unwrap(),
            Termination::UpperZeroTail,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        let cfg = small_config();
        let t = SimTarget::Coded {
            config: &cfg,
            options: DecodeOptions::iterations(1),
        };
        let stop = StopRule {
            min_bit_errors: 1,
            max_bits: 20_000,
        };
        let p = run_point(&t, 80.0, &stop, 3).unwrap();
        assert_eq!(p.counts.bit_errors, 0);
        assert!(p.counts.bits >= 20_000);
    }

    #[test]
    fn uncoded_matches_closed_form() {
        let t = SimTarget::Uncoded { frame_len: 1000 };
        let stop = StopRule {
            min_bit_errors: 5_000,
            max_bits: 10_000_000,
        };
        let p = run_point(&t, 4.0, &stop, 11).unwrap();
        let expect = q_function((2.0 * 10f64.powf(0.4)).sqrt());
        let sd = (expect * (1.0 - expect) / p.counts.bits as f64).sqrt();
        assert!((p.ber - expect).abs() < 3.0 * sd, "{} vs {expect}", p.ber);
    }

    #[test]
    fn counts_do_not_depend_on_threads() {
        let cfg = small_config();
        let t = SimTarget::Coded {
            config: &cfg,
            options: DecodeOptions::iterations(3),
        };
        let stop = StopRule {
            min_bit_errors: 50,
            max_bits: 200_000,
        };
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_point(&t, 0.5, &stop, 9).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_point(&t, 0.5, &stop, 9).unwrap());
        assert_eq!(serial, parallel);
        assert_eq!(serial.counts.bit_errors_per_iteration.len(), 3);
    }

    #[test]
    fn merge_is_order_independent() {
        let a = Counts {
            bits: 10,
            frames: 1,
            bit_errors: 2,
            frame_errors: 1,
            bit_errors_per_iteration: vec![3, 2],
        };
        let b = Counts {
            bits: 10,
            frames: 1,
            bit_errors: 0,
            frame_errors: 0,
            bit_errors_per_iteration: vec![1, 0],
        };
        assert_eq!(a.clone().merge(&b), b.clone().merge(&a));
    }

    #[test]
    fn composition_switches_to_bound_in_the_floor() {
        let snr = [0.0, 1.0, 2.0, 3.0, 4.0];
        let exit = [0.2, 0.1, 1e-6, 1e-12, 1e-15];
        let ub = [10.0, 1e-2, 1e-5, 1e-8, 1e-9];
        let c = compose(&snr, &exit, &ub).unwrap();
        assert!(!c.flagged);
        assert_eq!(c.crossover_db, Some(2.0));
        assert_eq!(c.points[0].pb, 0.2);
        assert_eq!(c.points[1].pb, 0.1);
        assert_eq!(c.points[4].pb, 1e-9);
        assert!(c.to_csv().starts_with(COMBINED_CSV_HEADER));
    }

    #[test]
    fn composition_without_crossover_is_flagged() {
        let c = compose(&[0.0, 1.0], &[0.3, 0.2], &[1e-3, 1e-4]).unwrap();
        assert!(c.flagged);
        assert!(c.points.iter().all(|p| p.source == Source::Exit));
        let deep = compose(&[8.0, 9.0], &[1e-20, 1e-22], &[1e-9, 1e-10]).unwrap();
        assert!(deep.points.iter().all(|p| p.source == Source::Bound));
        assert!(compose(&[1.0, 0.0], &[0.3, 0.2], &[1e-3, 1e-4]).is_err());
    }

    #[test]
    fn csv_and_manifest() {
        let t = SimTarget::Uncoded { frame_len: 100 };
        let stop = StopRule {
            min_bit_errors: 10,
            max_bits: 10_000,
        };
        let c = run_ber(&t, &[0.0, 2.0], &stop, 5).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with(BER_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
        let m: RunManifest = serde_json::from_str(&c.manifest.to_json()).unwrap();
        assert_eq!(m, c.manifest);
    }
}
