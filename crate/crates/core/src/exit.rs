//! EXIT analysis: consistent-Gaussian priors, mutual-information
//! measurement, transfer curves of the upper/lower and outer/inner
//! decompositions, trajectory prediction and threshold search.
//!
//! Message conventions follow the decoder. The lower (or inner) decoder
//! receives the upper code's message on `z`; the upper code sends
//! `APP - prior`, which includes its channel observations of `v`, because the
//! lower decoder adds `lambda_ch(v)` to the upper extrinsic before its own
//! pass. The lower code sends its plain extrinsic, since the upper decoder
//! adds the channel itself.

use crate::channel::{channel_llrs, transmit_with, ChannelParams};
use crate::convcode::{LlrFrame, LLR_CLAMP};
use crate::error::{check_len, Error, Result};
use crate::numeric::{j_function, j_inverse, log2_one_plus_exp_neg, q_function, Pchip};
use crate::puncturing::{feasible_d2, CodeDimensions};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::sccc::{CodeFamily, ScccConfig};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::Mutex;

/// Default bits per EXIT point.
pub const DEFAULT_SAMPLES: usize = 200_000;
/// Default block length of the frames used to estimate transfer curves.
pub const DEFAULT_EXIT_BLOCK_LEN: usize = 10_000;
/// Default number of a-priori grid points.
pub const DEFAULT_GRID_POINTS: usize = 21;
/// Threshold lattice spacing in dB.
pub const THRESHOLD_STEP_DB: f64 = 0.05;
/// Threshold search bracket in dB.
pub const THRESHOLD_BRACKET_DB: (f64, f64) = (-2.0, 12.0);
/// Iterations used to decide whether a tunnel is open.
pub const TUNNEL_ITERATIONS: usize = 500;
/// Mutual information the long trajectory must reach for an open tunnel.
pub const TUNNEL_TARGET_MI: f64 = 0.99;

/// `n` uniformly spaced points on `[0, 1]`.
pub fn ia_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Consistent-Gaussian a-priori LLRs for the given bits at mutual information `ia`.
pub fn gen_prior_for(bits: &[u8], ia: f64, rng: &mut SimRng) -> Vec<f64> {
    let sigma = j_inverse(ia.clamp(0.0, 1.0));
    if sigma == 0.0 {
        return vec![0.0; bits.len()];
    }
    let mean = sigma * sigma / 2.0;
    bits.iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            let sign = 1.0 - 2.0 * f64::from(b);
            (sign * mean + sigma * n).clamp(-LLR_CLAMP, LLR_CLAMP)
        })
        .collect()
}

/// Random bits with consistent-Gaussian LLRs at mutual information `ia`.
pub fn gen_prior(ia: f64, n: usize, seed: u64) -> (LlrFrame, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let llr = gen_prior_for(&bits, ia, &mut rng);
    (llr.into(), bits)
}

/// `1 - mean(log2(1 + e^{-b L}))` with `b = +1` for bit 0, clipped to `[0, 1]`.
pub fn measure_mi(llrs: &[f64], bits: &[u8]) -> Result<f64> {
    check_len("mutual-information bits", llrs.len(), bits.len())?;
    if llrs.is_empty() {
        return Err(Error::Domain("mutual information of an empty frame".into()));
    }
    let s: f64 = llrs
        .iter()
        .zip(bits)
        .map(|(&l, &b)| log2_one_plus_exp_neg(if b == 0 { l } else { -l }))
        .sum();
    Ok((1.0 - s / llrs.len() as f64).clamp(0.0, 1.0))
}

/// Bit error probability of a consistent-Gaussian LLR with mutual information `info`.
pub fn predict_ber(info: f64) -> f64 {
    if info >= 1.0 {
        return 0.0;
    }
    q_function(j_inverse(info) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Upper,
    Lower,
    Outer,
    Inner,
}

impl Component {
    /// Frame whose prior is the curve's abscissa.
    pub fn variable(self) -> &'static str {
        match self {
            Component::Upper | Component::Outer => "v",
            Component::Lower | Component::Inner => "z",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Upper => "upper",
            Component::Lower => "lower",
            Component::Outer => "outer",
            Component::Inner => "inner",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitPoint {
    pub ia: f64,
    pub ie: f64,
    /// Mutual information of the information-bit APP (upper and outer only).
    pub app: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitCurve {
    pub component: Component,
    pub eb_n0_db: f64,
    pub dims: CodeDimensions,
    pub points: Vec<ExitPoint>,
    /// Mutual information of the channel LLRs on `v` (upper curves), the
    /// starting point of the decoder's first lower pass.
    pub channel_mi: f64,
}

/// Monotone interpolants of a curve.
#[derive(Debug, Clone)]
pub struct CurveInterp {
    ie: Pchip,
    /// Interpolates `-ln(1 - I_app)` so precision survives near 1.
    app: Option<Pchip>,
}

const APP_FLOOR: f64 = 1e-15;

impl CurveInterp {
    pub fn ie(&self, ia: f64) -> f64 {
        self.ie.eval(ia.clamp(0.0, 1.0)).clamp(0.0, 1.0)
    }

    pub fn app(&self, ia: f64) -> Option<f64> {
        self.app
            .as_ref()
            .map(|p| (1.0 - (-p.eval(ia.clamp(0.0, 1.0))).exp()).clamp(0.0, 1.0))
    }
}

impl ExitCurve {
    pub fn interp(&self) -> Result<CurveInterp> {
        let first = self.points.first().map(|p| p.ia);
        let last = self.points.last().map(|p| p.ia);
        if first != Some(0.0) || last != Some(1.0) {
            return Err(Error::Domain(format!(
                "{} curve does not cover [0, 1]",
                self.component
            )));
        }
        let xs: Vec<f64> = self.points.iter().map(|p| p.ia).collect();
        let ie = Pchip::new(xs.clone(), self.points.iter().map(|p| p.ie).collect())?;
        let app = if self.points.iter().all(|p| p.app.is_some()) {
            let ys = self
                .points
                .iter()
                .map(|p| -(1.0 - p.app.unwrap()).max(APP_FLOOR).ln())
                .collect();
            Some(Pchip::new(xs, ys)?)
        } else {
            None
        };
        Ok(CurveInterp { ie, app })
    }

    /// CSV rows `ia,ie,component,eb_n0_db,d0,d1,d2` (no header).
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.ia, p.ie, self.component, self.eb_n0_db, self.dims.d0, self.dims.d1, self.dims.d2
            )
            .unwrap();
        }
        s
    }
}

pub const CURVE_CSV_HEADER: &str = "ia,ie,component,eb_n0_db,d0,d1,d2";

/// CSV with header for several curves.
pub fn curves_to_csv(curves: &[&ExitCurve]) -> String {
    let mut s = format!("{CURVE_CSV_HEADER}\n");
    for c in curves {
        s.push_str(&c.csv_rows());
    }
    s
}

/// Estimation settings shared by all curve estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSettings {
    pub ia_grid: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl ExitSettings {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            ia_grid: ia_grid(DEFAULT_GRID_POINTS),
            n_samples,
            seed,
        }
    }
}

impl Default for ExitSettings {
    fn default() -> Self {
        Self::new(DEFAULT_SAMPLES, 1)
    }
}

/// Sum of `llrs` and `bits` statistics over frames of one grid point.
struct Accumulator {
    ie: Vec<(Vec<f64>, Vec<u8>)>,
    app: Vec<(Vec<f64>, Vec<u8>)>,
    channel: Vec<(Vec<f64>, Vec<u8>)>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            ie: Vec::new(),
            app: Vec::new(),
            channel: Vec::new(),
        }
    }
}

fn pooled_mi(parts: &[(Vec<f64>, Vec<u8>)]) -> Result<f64> {
    let llr: Vec<f64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
    let bits: Vec<u8> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
    measure_mi(&llr, &bits)
}

/// One noisy frame: information bits, intermediate frames and channel LLRs
/// split into `v` and the lower parity stream.
struct NoisyFrame {
    info: Vec<u8>,
    v: Vec<u8>,
    z: Vec<u8>,
    ch_v: Vec<f64>,
    ch_parity: Vec<f64>,
}

fn noisy_frame(cfg: &ScccConfig, sigma2: f64, rng: &mut SimRng) -> Result<NoisyFrame> {
    let info: Vec<u8> = (0..cfg.info_len()).map(|_| rng.random_range(0..2)).collect();
    let frames = cfg.encode_frames(&info)?;
    let y = transmit_with(&frames.codeword.to_bits(), sigma2, rng);
    let llr = channel_llrs(&y, sigma2)?;
    let (ch_v, ch_parity) = cfg.demultiplex(&llr)?;
    Ok(NoisyFrame {
        info,
        v: frames.v,
        z: frames.z,
        ch_v,
        ch_parity,
    })
}

fn estimate<F>(
    cfg: &ScccConfig,
    component: Component,
    eb_n0_db: f64,
    settings: &ExitSettings,
    frame_len: usize,
    point: F,
) -> Result<ExitCurve>
where
    F: Fn(&NoisyFrame, f64, &mut SimRng, &mut Accumulator) -> Result<()> + Sync,
{
    let params = ChannelParams::new(eb_n0_db, cfg.realized_rate())?;
    let frames = settings.n_samples.div_ceil(frame_len).max(1);
    let results: Vec<Result<(ExitPoint, f64)>> = settings
        .ia_grid
        .par_iter()
        .enumerate()
        .map(|(i, &ia)| {
            let mut rng = rng_from_seed(derive_seed(settings.seed, i as u64));
            let mut acc = Accumulator::new();
            for _ in 0..frames {
                let f = noisy_frame(cfg, params.sigma2, &mut rng)?;
                point(&f, ia, &mut rng, &mut acc)?;
            }
            let ie = pooled_mi(&acc.ie)?;
            let app = if acc.app.is_empty() {
                None
            } else {
                Some(pooled_mi(&acc.app)?)
            };
            let ch = if acc.channel.is_empty() {
                0.0
            } else {
                pooled_mi(&acc.channel)?
            };
            Ok((ExitPoint { ia, ie, app }, ch))
        })
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut channel_mi = 0.0;
    for r in results {
        let (p, ch) = r?;
        channel_mi = ch;
        points.push(p);
    }
    Ok(ExitCurve {
        component,
        eb_n0_db,
        dims: cfg.dims(),
        points,
        channel_mi,
    })
}

/// Transfer curve of C_U: prior on `v`, channel on `x0, x1`.
pub fn exit_curve_upper(cfg: &ScccConfig, eb_n0_db: f64, settings: &ExitSettings) -> Result<ExitCurve> {
    estimate(cfg, Component::Upper, eb_n0_db, settings, cfg.n(), |f, ia, rng, acc| {
        let a = gen_prior_for(&f.v, ia, rng);
        let prior: Vec<f64> = f.ch_v.iter().zip(&a).map(|(c, a)| c + a).collect();
        let (ext, app) = cfg.upper_siso(&prior)?;
        let msg: Vec<f64> = ext.iter().zip(&f.ch_v).map(|(e, c)| e + c).collect();
        acc.ie.push((msg, f.v.clone()));
        acc.app.push((app[..f.info.len()].to_vec(), f.info.clone()));
        acc.channel.push((f.ch_v.clone(), f.v.clone()));
        Ok(())
    })
}

/// Transfer curve of C_L: prior on `z`, channel on `x2`.
pub fn exit_curve_lower(cfg: &ScccConfig, eb_n0_db: f64, settings: &ExitSettings) -> Result<ExitCurve> {
    estimate(cfg, Component::Lower, eb_n0_db, settings, cfg.n(), |f, ia, rng, acc| {
        let a = gen_prior_for(&f.z, ia, rng);
        let ext = cfg.lower_siso(&a, &f.ch_parity)?;
        acc.ie.push((ext, f.z.clone()));
        Ok(())
    })
}

/// Classical pair: outer C_0 (no channel input) and inner C_1 (systematic
/// channel bits of `z` plus lower parity), returned as `(outer, inner)`.
pub fn exit_curve_classical(
    cfg: &ScccConfig,
    eb_n0_db: f64,
    settings: &ExitSettings,
) -> Result<(ExitCurve, ExitCurve)> {
    let outer = estimate(cfg, Component::Outer, eb_n0_db, settings, cfg.n(), |f, ia, rng, acc| {
        let a = gen_prior_for(&f.v, ia, rng);
        let (ext, app) = cfg.upper_siso(&a)?;
        acc.ie.push((ext, f.v.clone()));
        acc.app.push((app[..f.info.len()].to_vec(), f.info.clone()));
        Ok(())
    })?;
    let inner = estimate(cfg, Component::Inner, eb_n0_db, settings, cfg.n(), |f, ia, rng, acc| {
        let a = gen_prior_for(&f.z, ia, rng);
        let ch_z = cfg.interleaver().permute(&f.ch_v)?;
        let prior: Vec<f64> = a.iter().zip(&ch_z).map(|(a, c)| a + c).collect();
        let ext = cfg.lower_siso(&prior, &f.ch_parity)?;
        let msg: Vec<f64> = ext.iter().zip(&ch_z).map(|(e, c)| e + c).collect();
        acc.ie.push((msg, f.z.clone()));
        Ok(())
    })?;
    Ok((outer, inner))
}

/// Staircase of an iterative decoder predicted from two transfer curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Corner points `(I_A(z), I_E(z))` then `(I_E(z), I_E(v))` alternately.
    pub points: Vec<(f64, f64)>,
    /// Final message mutual information out of the second component.
    pub final_ie: f64,
    /// Final information-bit APP mutual information.
    pub final_app: f64,
    pub predicted_pb: f64,
}

/// Runs `n_iterations` of first (lower/inner) then second (upper/outer)
/// starting from prior information `start` on `z`.
pub fn trajectory(
    first: &ExitCurve,
    second: &ExitCurve,
    start: f64,
    n_iterations: usize,
) -> Result<Trajectory> {
    let f = first.interp()?;
    let s = second.interp()?;
    trajectory_interp(&f, &s, start, n_iterations)
}

pub fn trajectory_interp(
    first: &CurveInterp,
    second: &CurveInterp,
    start: f64,
    n_iterations: usize,
) -> Result<Trajectory> {
    if n_iterations == 0 {
        return Err(Error::Domain("at least one iteration is required".into()));
    }
    let mut ia = start;
    let mut points = Vec::with_capacity(2 * n_iterations);
    let mut final_ie = 0.0;
    let mut final_app = 0.0;
    for _ in 0..n_iterations {
        let ez = first.ie(ia);
        points.push((ia, ez));
        let ev = second.ie(ez);
        points.push((ez, ev));
        final_app = second
            .app(ez)
            .ok_or_else(|| Error::Domain("second curve has no APP column".into()))?;
        final_ie = ev;
        ia = ev;
    }
    Ok(Trajectory {
        points,
        final_ie,
        final_app,
        predicted_pb: predict_ber(final_app),
    })
}

/// A chart ready for trajectory evaluation: lower/inner first.
#[derive(Debug, Clone)]
pub struct Chart {
    pub first: ExitCurve,
    pub second: ExitCurve,
    pub start: f64,
}

impl Chart {
    /// Upper/lower chart of the decoder's schedule.
    pub fn equivalent(cfg: &ScccConfig, eb_n0_db: f64, settings: &ExitSettings) -> Result<Self> {
        let upper = exit_curve_upper(cfg, eb_n0_db, settings)?;
        let lower = exit_curve_lower(cfg, eb_n0_db, settings)?;
        let start = upper.channel_mi;
        Ok(Self {
            first: lower,
            second: upper,
            start,
        })
    }

    /// Outer/inner chart of the classical description.
    pub fn classical(cfg: &ScccConfig, eb_n0_db: f64, settings: &ExitSettings) -> Result<Self> {
        let (outer, inner) = exit_curve_classical(cfg, eb_n0_db, settings)?;
        Ok(Self {
            first: inner,
            second: outer,
            start: 0.0,
        })
    }

    pub fn trajectory(&self, n_iterations: usize) -> Result<Trajectory> {
        trajectory(&self.first, &self.second, self.start, n_iterations)
    }

    /// Open when a long trajectory climbs to [`TUNNEL_TARGET_MI`].
    pub fn tunnel_open(&self) -> Result<bool> {
        let t = self.trajectory(TUNNEL_ITERATIONS)?;
        Ok(t.final_ie >= TUNNEL_TARGET_MI)
    }

    /// Smallest vertical gap `second(first(x)) - x` over `x` in `[start, TUNNEL_TARGET_MI]`.
    pub fn min_gap(&self) -> Result<f64> {
        let f = self.first.interp()?;
        let s = self.second.interp()?;
        let n = 1000;
        Ok((0..=n)
            .map(|i| self.start + (TUNNEL_TARGET_MI - self.start) * i as f64 / n as f64)
            .map(|x| s.ie(f.ie(x)) - x)
            .fold(f64::INFINITY, f64::min))
    }
}

/// Which chart a threshold search uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Equivalent,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub dims: CodeDimensions,
    pub target_pb: f64,
    pub n_iterations: usize,
    pub eb_n0_db_min: f64,
    pub converged: bool,
}

pub const THRESHOLD_CSV_HEADER: &str = "rate,d2,eb_n0_db_min,target_pb,iters";

impl ThresholdResult {
    /// Row `rate,d2,eb_n0_db_min,target_pb,iters`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{}",
            self.dims.rate(),
            self.dims.d2,
            self.eb_n0_db_min,
            self.target_pb,
            self.n_iterations
        )
    }
}

/// Curve cache keyed by component, dimensions and Eb/N0 lattice index, so
/// repeated searches (e.g. 10 and 20 iterations) reuse estimates.
#[derive(Debug, Default)]
pub struct ChartCache {
    charts: Mutex<HashMap<(ChartKind, CodeDimensions, i64), Chart>>,
}

impl ChartCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_estimate(
        &self,
        kind: ChartKind,
        cfg: &ScccConfig,
        lattice: i64,
        settings: &ExitSettings,
    ) -> Result<Chart> {
        let key = (kind, cfg.dims(), lattice);
        if let Some(c) = self.charts.lock().expect("cache lock").get(&key) {
            return Ok(c.clone());
        }
        let snr = lattice_db(lattice);
        let chart = match kind {
            ChartKind::Equivalent => Chart::equivalent(cfg, snr, settings)?,
            ChartKind::Classical => Chart::classical(cfg, snr, settings)?,
        };
        self.charts
            .lock()
            .expect("cache lock")
            .insert(key, chart.clone());
        Ok(chart)
    }
}

/// Eb/N0 of a lattice index, divided rather than multiplied so that values
/// such as 0.95 come out as the nearest double.
fn lattice_db(index: i64) -> f64 {
    index as f64 / (1.0 / THRESHOLD_STEP_DB).round()
}

/// Criterion evaluated at one lattice point.
fn reaches(
    cache: &ChartCache,
    kind: ChartKind,
    cfg: &ScccConfig,
    lattice: i64,
    settings: &ExitSettings,
    goal: Goal,
) -> Result<bool> {
    let chart = cache.get_or_estimate(kind, cfg, lattice, settings)?;
    match goal {
        Goal::TargetPb { target_pb, n_iterations } => {
            Ok(chart.trajectory(n_iterations)?.predicted_pb <= target_pb)
        }
        Goal::OpenTunnel => chart.tunnel_open(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goal {
    /// Predicted Pb after `n_iterations` at or below `target_pb`.
    TargetPb { target_pb: f64, n_iterations: usize },
    /// Long trajectory reaches the top of the chart.
    OpenTunnel,
}

/// Smallest lattice index in `[b_lo, b_hi]` satisfying the monotone
/// predicate `ok`, found by galloping outward from `g` (1, 2, 4, ... steps)
/// and then bisecting. A good starting index, such as the threshold of a
/// neighbouring grid cell, needs only a handful of probes.
fn gallop_search<F>(mut ok: F, g: i64, b_lo: i64, b_hi: i64) -> Result<Option<i64>>
where
    F: FnMut(i64) -> Result<bool>,
{
    let g = g.clamp(b_lo, b_hi);
    // Invariant once bracketed: `lo` fails, `hi` succeeds.
    let (mut lo, mut hi);
    if ok(g)? {
        hi = g;
        let mut step = 1;
        loop {
            let probe = (hi - step).max(b_lo);
            if probe == hi {
                return Ok(Some(hi));
            }
            if ok(probe)? {
                hi = probe;
                step *= 2;
            } else {
                lo = probe;
                break;
            }
        }
    } else {
        lo = g;
        let mut step = 1;
        loop {
            let probe = (lo + step).min(b_hi);
            if probe == lo {
                return Ok(None);
            }
            if ok(probe)? {
                hi = probe;
                break;
            }
            lo = probe;
            step *= 2;
        }
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Smallest SNR on the 0.05 dB lattice inside `bracket` satisfying `goal`,
/// searched from `guess` (the success region is assumed to be an interval
/// reaching the top of the bracket).
pub fn lattice_threshold(
    cache: &ChartCache,
    kind: ChartKind,
    cfg: &ScccConfig,
    settings: &ExitSettings,
    goal: Goal,
    guess: f64,
    bracket: (f64, f64),
) -> Result<Option<f64>> {
    let b_lo = (bracket.0 / THRESHOLD_STEP_DB).round() as i64;
    let b_hi = (bracket.1 / THRESHOLD_STEP_DB).round() as i64;
    let g = (guess / THRESHOLD_STEP_DB).round() as i64;
    let found = gallop_search(|i| reaches(cache, kind, cfg, i, settings, goal), g, b_lo, b_hi)?;
    Ok(found.map(lattice_db))
}

/// Minimum Eb/N0 (0.05 dB lattice) at which the equivalent-chart trajectory
/// reaches `target_pb` within `n_iterations`.
pub fn threshold_search(
    cache: &ChartCache,
    cfg: &ScccConfig,
    target_pb: f64,
    n_iterations: usize,
    settings: &ExitSettings,
) -> Result<ThresholdResult> {
    threshold_search_kind(cache, ChartKind::Equivalent, cfg, target_pb, n_iterations, settings)
}

/// Threshold search on either chart. Without a guess the search starts one
/// decibel above the BPSK capacity limit of the code rate, below which no
/// threshold can lie.
pub fn threshold_search_kind(
    cache: &ChartCache,
    kind: ChartKind,
    cfg: &ScccConfig,
    target_pb: f64,
    n_iterations: usize,
    settings: &ExitSettings,
) -> Result<ThresholdResult> {
    threshold_search_near(cache, kind, cfg, target_pb, n_iterations, settings, None)
}

pub fn threshold_search_near(
    cache: &ChartCache,
    kind: ChartKind,
    cfg: &ScccConfig,
    target_pb: f64,
    n_iterations: usize,
    settings: &ExitSettings,
    guess: Option<f64>,
) -> Result<ThresholdResult> {
    if !(target_pb > 0.0 && target_pb < 0.5) {
        return Err(Error::Domain(format!("target Pb {target_pb} outside (0, 0.5)")));
    }
    let goal = Goal::TargetPb {
        target_pb,
        n_iterations,
    };
    let (b_lo, b_hi) = THRESHOLD_BRACKET_DB;
    let guess = match guess {
        Some(g) => g,
        None => {
            crate::channel::bpsk_limit_db(cfg.realized_rate().min(0.999)).unwrap_or(b_lo) + 1.0
        }
    };
    match lattice_threshold(cache, kind, cfg, settings, goal, guess, THRESHOLD_BRACKET_DB)? {
        Some(snr) => Ok(ThresholdResult {
            dims: cfg.dims(),
            target_pb,
            n_iterations,
            eb_n0_db_min: snr,
            converged: true,
        }),
        None => Err(Error::NoConvergence(format!(
            "{} does not reach Pb {target_pb:e} in {n_iterations} iterations below {b_hi} dB",
            cfg.dims()
        ))),
    }
}

/// Smallest lattice SNR at which the tunnel is open.
pub fn tunnel_threshold(
    cache: &ChartCache,
    kind: ChartKind,
    cfg: &ScccConfig,
    settings: &ExitSettings,
) -> Result<f64> {
    let guess = crate::channel::bpsk_limit_db(cfg.realized_rate().min(0.999)).unwrap_or(0.0) + 1.0;
    lattice_threshold(cache, kind, cfg, settings, Goal::OpenTunnel, guess, THRESHOLD_BRACKET_DB)?
        .ok_or_else(|| Error::NoConvergence(format!("tunnel of {} never opens", cfg.dims())))
}

/// Waterfall thresholds over the feasible `d2` values at total length `L`
/// (step `d2_step`, endpoints always included).
pub fn wf_grid(
    cache: &ChartCache,
    family: &CodeFamily,
    l: usize,
    target_pb: f64,
    n_iterations: usize,
    d2_step: usize,
    settings: &ExitSettings,
) -> Result<Vec<(usize, Result<ThresholdResult>)>> {
    let range = feasible_d2(l)?;
    let step = d2_step.max(1);
    let mut d2s: Vec<usize> = (*range.start()..=*range.end()).step_by(step).collect();
    if d2s.last() != Some(range.end()) {
        d2s.push(*range.end());
    }
    let mut guess = None;
    let mut out = Vec::with_capacity(d2s.len());
    for d2 in d2s {
        let cfg = family.config(CodeDimensions::from_length(l, d2)?)?;
        let r = threshold_search_near(
            cache,
            ChartKind::Equivalent,
            &cfg,
            target_pb,
            n_iterations,
            settings,
            guess,
        );
        if let Ok(t) = &r {
            guess = Some(t.eb_n0_db_min);
        }
        out.push((d2, r));
    }
    Ok(out)
}

/// Argmin of a waterfall grid; ties go to the larger `d2`.
pub fn choose_d2_wf(grid: &[(usize, Result<ThresholdResult>)]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (d2, r) in grid {
        if let Ok(t) = r {
            let better = match best {
                None => true,
                Some((bd, bs)) => t.eb_n0_db_min < bs || (t.eb_n0_db_min == bs && *d2 > bd),
            };
            if better {
                best = Some((*d2, t.eb_n0_db_min));
            }
        }
    }
    best.map(|b| b.0)
        .ok_or_else(|| Error::NoConvergence("no feasible d2 reached the target".into()))
}

/// Mutual information of the consistent-Gaussian LLR at the channel:
/// `J(2 / sigma)` (used as the BPSK capacity as well).
pub fn channel_information(sigma2: f64) -> f64 {
    j_function(2.0 / sigma2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_prior_is_zero() {
        let (l, _) = gen_prior(0.0, 100, 1);
        assert!(l.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn perfect_prior_has_clamped_correct_signs() {
        let (l, bits) = gen_prior(1.0, 1000, 2);
        for (&x, &b) in l.iter().zip(&bits) {
            assert_eq!(x.abs(), LLR_CLAMP);
            assert_eq!(x < 0.0, b == 1);
        }
        assert!((measure_mi(&l, &bits).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn estimator_recovers_half() {
        let sigma = j_inverse(0.5);
        assert!((sigma - 2.0435).abs() < 1e-3);
        let (l, bits) = gen_prior(0.5, 1_000_000, 3);
        let mi = measure_mi(&l, &bits).unwrap();
        assert!((mi - 0.5).abs() < 0.005, "{mi}");
    }

    #[test]
    fn estimator_edge_cases() {
        assert_eq!(measure_mi(&[0.0; 10], &[0; 10]).unwrap(), 0.0);
        assert!(measure_mi(&[], &[]).is_err());
        assert!(measure_mi(&[1.0], &[0, 1]).is_err());
        // Wrong-sign confident LLRs clip at zero.
        assert_eq!(measure_mi(&[-20.0; 4], &[0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn standard_error_scales_with_root_n() {
        let spread = |n: usize| {
            let v: Vec<f64> = (0..40)
                .map(|s| {
                    let (l, b) = gen_prior(0.5, n, 100 + s);
                    measure_mi(&l, &b).unwrap()
                })
                .collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        };
        let ratio = spread(4000) / spread(16000);
        assert!((1.3..3.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn ber_prediction_limits() {
        assert_eq!(predict_ber(1.0), 0.0);
        assert!((predict_ber(0.0) - 0.5).abs() < 1e-12);
        assert!(predict_ber(0.999) < predict_ber(0.9));
    }

    fn flat(component: Component, ie: impl Fn(f64) -> f64, app: bool) -> ExitCurve {
        ExitCurve {
            component,
            eb_n0_db: 0.0,
            dims: CodeDimensions::new(20, 20).unwrap(),
            points: ia_grid(21)
                .into_iter()
                .map(|ia| ExitPoint {
                    ia,
                    ie: ie(ia),
                    app: app.then(|| ie(ia)),
                })
                .collect(),
            channel_mi: 0.0,
        }
    }

    #[test]
    fn closed_tunnel_stalls() {
        let first = flat(Component::Lower, |x| 0.3 + 0.3 * x, false);
        let second = flat(Component::Upper, |x| 0.5 * x + 0.1, true);
        let t = trajectory(&first, &second, 0.0, 50).unwrap();
        assert!(t.final_ie < 0.5);
        assert!(t.predicted_pb > 0.01);
    }

    #[test]
    fn open_tunnel_reaches_one() {
        let first = flat(Component::Lower, |x| (0.4 + 0.6 * x).min(1.0), false);
        let second = flat(Component::Upper, |x| (0.2 + 0.8 * x.sqrt()).min(1.0), true);
        let t = trajectory(&first, &second, 0.0, 50).unwrap();
        assert!(t.final_ie > 0.999);
        assert!(t.predicted_pb < 1e-6);
    }

    #[test]
    fn truncated_curves_are_rejected() {
        let mut c = flat(Component::Upper, |x| x, true);
        c.points.pop();
        assert!(c.interp().is_err());
    }

    #[test]
    fn wf_argmin_prefers_larger_d2_on_ties() {
        let dims = CodeDimensions::new(50, 50).unwrap();
        let mk = |s: f64| {
            Ok(ThresholdResult {
                dims,
                target_pb: 1e-5,
                n_iterations: 10,
                eb_n0_db_min: s,
                converged: true,
            })
        };
        let grid = vec![(100, mk(1.0)), (110, mk(0.95)), (120, mk(0.95)), (130, mk(1.2))];
        assert_eq!(choose_d2_wf(&grid).unwrap(), 120);
        let none: Vec<(usize, Result<ThresholdResult>)> =
            vec![(100, Err(Error::NoConvergence("x".into())))];
        assert!(choose_d2_wf(&none).is_err());
    }

    proptest! {
        #[test]
        fn gallop_finds_the_step(t in -40i64..240, g in -40i64..240) {
            let mut probes = 0;
            let found = gallop_search(|i| { probes += 1; Ok(i >= t) }, g, -40, 240).unwrap();
            prop_assert_eq!(found, Some(t.max(-40)));
            prop_assert!(probes <= 2 * 9 + 2);
        }

        #[test]
        fn gallop_reports_no_success(g in -40i64..240) {
            prop_assert_eq!(gallop_search(|_| Ok(false), g, -40, 240).unwrap(), None);
        }

        #[test]
        fn mi_is_in_unit_interval(llrs in proptest::collection::vec(-60.0f64..60.0, 1..50), seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let bits: Vec<u8> = llrs.iter().map(|_| rng.random_range(0..2)).collect();
            let mi = measure_mi(&llrs, &bits).unwrap();
            prop_assert!((0.0..=1.0).contains(&mi));
        }
    }
}
