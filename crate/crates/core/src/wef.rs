//! Weight enumerators of the punctured constituent codes and the
//! uniform-interleaver union bound on the bit error probability.
//!
//! The bound is the standard uniform-interleaver assembly
//! `sum (w/K) A^U(w, h_t, l) A^L(l, h_2) / C(N, l) Q(sqrt(2 R (h_t + h_2) Eb/N0))`
//! over the truncated enumerators, with puncturing treated position by
//! position.

use crate::convcode::{ConvCodeSpec, Trellis};
use crate::error::{Error, Result};
use crate::numeric::{bisect, ln_binomial, q_function};
use crate::puncturing::{PuncturePattern, Rational, SYSTEMATIC_PERIOD};
use crate::sccc::{ScccConfig, Termination};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Search bracket of [`ub_required_snr`] in dB.
pub const UB_BRACKET_DB: (f64, f64) = (0.0, 14.0);

/// Truncation limits: information weight, transmitted weight and weight of
/// the interleaver frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WefLimits {
    pub w_max: usize,
    pub h_max: usize,
    pub l_max: usize,
}

impl Default for WefLimits {
    fn default() -> Self {
        Self {
            w_max: 8,
            h_max: 40,
            l_max: 40,
        }
    }
}

impl WefLimits {
    pub fn new(w_max: usize, h_max: usize, l_max: usize) -> Result<Self> {
        if w_max == 0 || h_max == 0 || l_max == 0 {
            return Err(Error::Domain("enumerator limits must be positive".into()));
        }
        Ok(Self {
            w_max,
            h_max,
            l_max,
        })
    }

    /// Limits with `h_max` raised by `dh` (truncation self-consistency check).
    pub fn with_extra_h(self, dh: usize) -> Self {
        Self {
            h_max: self.h_max + dh,
            ..self
        }
    }
}

/// Output weight enumerator of C_U: multiplicity of `(w, h_t, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperWef {
    limits: WefLimits,
    k: usize,
    info_len: usize,
    /// Dense `[w][h_t][l]`.
    counts: Vec<f64>,
}

impl UpperWef {
    fn idx(&self, w: usize, h: usize, l: usize) -> usize {
        (w * (self.limits.h_max + 1) + h) * (self.limits.l_max + 1) + l
    }

    pub fn get(&self, w: usize, h_t: usize, l: usize) -> f64 {
        let lim = self.limits;
        if w > lim.w_max || h_t > lim.h_max || l > lim.l_max {
            return 0.0;
        }
        self.counts[self.idx(w, h_t, l)]
    }

    pub fn limits(&self) -> WefLimits {
        self.limits
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn info_len(&self) -> usize {
        self.info_len
    }

    /// Nonzero entries as `(w, h_t, l, multiplicity)` in lexicographic order.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let lim = self.limits;
        let mut out = Vec::new();
        for w in 0..=lim.w_max {
            for h in 0..=lim.h_max {
                for l in 0..=lim.l_max {
                    let c = self.counts[self.idx(w, h, l)];
                    if c != 0.0 {
                        out.push((w, h, l, c));
                    }
                }
            }
        }
        out
    }

    /// Smallest transmitted weight `h_t` of a nonzero-information codeword
    /// and its multiplicity.
    pub fn d_min(&self) -> Option<(usize, f64)> {
        let lim = self.limits;
        for h in 0..=lim.h_max {
            let m: f64 = (1..=lim.w_max)
                .flat_map(|w| (0..=lim.l_max).map(move |l| (w, l)))
                .map(|(w, l)| self.counts[self.idx(w, h, l)])
                .sum();
            if m > 0.0 {
                return Some((h, m));
            }
        }
        None
    }

    /// CSV `w,h_t,l,mult`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("w,h_t,l,mult\n");
        for (w, h, l, c) in self.entries() {
            writeln!(s, "{w},{h},{l},{c}").unwrap();
        }
        s
    }
}

/// Input-output weight enumerator of C_L: multiplicity of `(l, h_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerWef {
    l_max: usize,
    h_max: usize,
    n: usize,
    /// Dense `[l][h_2]`.
    counts: Vec<f64>,
}

impl LowerWef {
    pub fn get(&self, l: usize, h2: usize) -> f64 {
        if l > self.l_max || h2 > self.h_max {
            return 0.0;
        }
        self.counts[l * (self.h_max + 1) + h2]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn h_max(&self) -> usize {
        self.h_max
    }

    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for l in 0..=self.l_max {
            for h in 0..=self.h_max {
                let c = self.get(l, h);
                if c != 0.0 {
                    out.push((l, h, c));
                }
            }
        }
        out
    }

    /// Smallest nonzero-input term `(l, h_2)` ordered by `h_2`, then `l`.
    pub fn min_term(&self) -> Option<(usize, usize, f64)> {
        (0..=self.h_max)
            .flat_map(|h| (1..=self.l_max).map(move |l| (l, h)))
            .map(|(l, h)| (l, h, self.get(l, h)))
            .find(|t| t.2 > 0.0)
    }

    /// CSV `l,h2,mult`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,h2,mult\n");
        for (l, h, c) in self.entries() {
            writeln!(s, "{l},{h},{c}").unwrap();
        }
        s
    }
}

/// Enumerates C_U over `k` trellis steps. `info_len` positions carry
/// information (the remaining ones are tail bits and, like the codec, the
/// tailed variant only accepts paths ending in state 0).
pub fn enumerate_upper(
    upper_pattern: &PuncturePattern,
    k: usize,
    termination: Termination,
    limits: WefLimits,
) -> Result<UpperWef> {
    let trellis = Trellis::new(&ConvCodeSpec::cc_1_5_7())?;
    let tail = termination.tail_len(trellis.memory());
    if k <= tail {
        return Err(Error::Domain(format!("K = {k} too short")));
    }
    let info_len = k - tail;
    let systematic = PuncturePattern::all_ones(SYSTEMATIC_PERIOD);
    let (wm, hm, lm) = (limits.w_max, limits.h_max, limits.l_max);
    let cell = (wm + 1) * (hm + 1) * (lm + 1);
    let ns = trellis.n_states();
    let idx = |w: usize, h: usize, l: usize| (w * (hm + 1) + h) * (lm + 1) + l;
    let mut cur = vec![0.0; ns * cell];
    let mut next = vec![0.0; ns * cell];
    cur[idx(0, 0, 0)] = 1.0;
    let mut reach_l = 0usize;
    for t in 0..k {
        next.iter_mut().for_each(|x| *x = 0.0);
        let parity_in_v = t % 2 == 0;
        let parity_sent = parity_in_v && upper_pattern.is_kept(t / 2);
        let sys_sent = systematic.is_kept(t);
        let info = t < info_len;
        for s in 0..ns {
            let src = &cur[s * cell..(s + 1) * cell];
            for b in 0..2u8 {
                let ns_ = trellis.next_state(s, b);
                let mask = trellis.output_mask(s, b);
                let sys = (mask & 1) as usize;
                let par = ((mask >> 1) & 1) as usize;
                let dw = if info { b as usize } else { 0 };
                let dl = sys + if parity_in_v { par } else { 0 };
                let dh = sys * usize::from(sys_sent) + if parity_sent { par } else { 0 };
                let dst = &mut next[ns_ * cell..(ns_ + 1) * cell];
                for w in 0..=wm.saturating_sub(dw) {
                    for h in 0..=hm.saturating_sub(dh) {
                        if w + dw > wm || h + dh > hm {
                            continue;
                        }
                        let base_src = idx(w, h, 0);
                        let base_dst = idx(w + dw, h + dh, dl);
                        let top = reach_l.min(lm.saturating_sub(dl));
                        if dl > lm {
                            continue;
                        }
                        for l in 0..=top {
                            let c = src[base_src + l];
                            if c != 0.0 {
                                dst[base_dst + l] += c;
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        reach_l = (reach_l + 2).min(lm);
    }
    let mut counts = vec![0.0; cell];
    let accept: Vec<usize> = match termination {
        Termination::Truncated => (0..ns).collect(),
        Termination::UpperZeroTail => vec![0],
    };
    for s in accept {
        for (c, &x) in counts.iter_mut().zip(&cur[s * cell..(s + 1) * cell]) {
            *c += x;
        }
    }
    let wef = UpperWef {
        limits,
        k,
        info_len,
        counts,
    };
    if wef.d_min().is_none() {
        return Err(Error::Truncation(format!(
            "no nonzero upper codeword within w <= {wm}, h <= {hm}, l <= {lm}"
        )));
    }
    Ok(wef)
}

/// Enumerates C_L over `n` trellis steps (unterminated: every end state accepted).
pub fn enumerate_lower(
    lower_pattern: &PuncturePattern,
    n: usize,
    l_max: usize,
    h_max: usize,
) -> Result<LowerWef> {
    if l_max == 0 || h_max == 0 {
        return Err(Error::Domain("enumerator limits must be positive".into()));
    }
    let trellis = Trellis::new(&ConvCodeSpec::cc_5_7())?;
    let ns = trellis.n_states();
    let cell = (l_max + 1) * (h_max + 1);
    let mut cur = vec![0.0; ns * cell];
    let mut next = vec![0.0; ns * cell];
    cur[0] = 1.0;
    let mut reach_l = 0usize;
    for t in 0..n {
        next.iter_mut().for_each(|x| *x = 0.0);
        let sent = lower_pattern.is_kept(t);
        for s in 0..ns {
            for b in 0..2u8 {
                let dl = b as usize;
                let par = (trellis.output_mask(s, b) & 1) as usize;
                let dh = if sent { par } else { 0 };
                let ns_ = trellis.next_state(s, b);
                for l in 0..=reach_l.min(l_max.saturating_sub(dl)) {
                    if l + dl > l_max {
                        continue;
                    }
                    for h in 0..=h_max.saturating_sub(dh) {
                        let c = cur[s * cell + l * (h_max + 1) + h];
                        if c != 0.0 {
                            next[ns_ * cell + (l + dl) * (h_max + 1) + h + dh] += c;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        reach_l = (reach_l + 1).min(l_max);
    }
    let mut counts = vec![0.0; cell];
    for s in 0..ns {
        for (c, &x) in counts.iter_mut().zip(&cur[s * cell..(s + 1) * cell]) {
            *c += x;
        }
    }
    let wef = LowerWef {
        l_max,
        h_max,
        n,
        counts,
    };
    if wef.min_term().is_none() {
        return Err(Error::Truncation(format!(
            "no nonzero lower codeword within l <= {l_max}, h <= {h_max}"
        )));
    }
    Ok(wef)
}

/// Both enumerators of a configuration.
pub fn enumerate_config(cfg: &ScccConfig, limits: WefLimits) -> Result<(UpperWef, LowerWef)> {
    let upper = enumerate_upper(cfg.upper_pattern(), cfg.k(), cfg.termination(), limits)?;
    let lower = enumerate_lower(cfg.lower_pattern(), cfg.n(), limits.l_max, limits.h_max)?;
    Ok((upper, lower))
}

/// Bit-error spectrum `c_h`: the union bound is `sum_h c_h Q(sqrt(2 R h Eb/N0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitErrorSpectrum {
    /// Indexed by total transmitted weight `h = h_t + h_2`.
    pub c: Vec<f64>,
    pub rate: f64,
    pub limits: WefLimits,
    pub k: usize,
    pub n: usize,
}

impl BitErrorSpectrum {
    /// Assembles the spectrum of the concatenation under a uniform interleaver.
    pub fn assemble(upper: &UpperWef, lower: &LowerWef, rate: f64) -> Result<Self> {
        let lim = upper.limits();
        if lower.l_max() != lim.l_max || lower.h_max() != lim.h_max {
            return Err(Error::Truncation(format!(
                "inconsistent truncation: upper (l <= {}, h <= {}), lower (l <= {}, h <= {})",
                lim.l_max,
                lim.h_max,
                lower.l_max(),
                lower.h_max()
            )));
        }
        let n = lower.n();
        let kinfo = upper.info_len() as f64;
        let mut c = vec![0.0; 2 * lim.h_max + 1];
        for l in 1..=lim.l_max.min(n) {
            let inv_binom = (-ln_binomial(n, l)).exp();
            let mut up = vec![0.0; lim.h_max + 1];
            for w in 1..=lim.w_max {
                for (h, u) in up.iter_mut().enumerate() {
                    *u += w as f64 / kinfo * upper.get(w, h, l);
                }
            }
            for (ht, &u) in up.iter().enumerate() {
                if u == 0.0 {
                    continue;
                }
                for h2 in 0..=lim.h_max {
                    let a = lower.get(l, h2);
                    if a != 0.0 {
                        c[ht + h2] += u * a * inv_binom;
                    }
                }
            }
        }
        Ok(Self {
            c,
            rate,
            limits: lim,
            k: upper.k(),
            n,
        })
    }

    /// Union bound at `eb_n0_db`.
    pub fn bound(&self, eb_n0_db: f64) -> f64 {
        let g = 2.0 * self.rate * 10f64.powf(eb_n0_db / 10.0);
        self.c
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .map(|(h, &c)| c * q_function((g * h as f64).sqrt()))
            .sum()
    }

    /// Smallest weight with a nonzero coefficient and that coefficient.
    pub fn d_min(&self) -> Option<(usize, f64)> {
        self.c.iter().enumerate().find(|(_, &c)| c > 0.0).map(|(h, &c)| (h, c))
    }

    /// Weights up to which every contributing codeword is guaranteed to be
    /// counted (beyond `h_max` a lower or upper part may have been cut).
    pub fn complete_up_to(&self) -> usize {
        self.limits.h_max
    }

    pub fn curve(&self, grid: &[f64]) -> BoundCurve {
        BoundCurve {
            points: grid.iter().map(|&s| (s, self.bound(s))).collect(),
            k: self.k,
            rate: self.rate,
            limits: self.limits,
        }
    }
}

/// Union-bound spectrum of a configuration (rate = information bits per
/// transmitted bit of the frame).
pub fn config_spectrum(cfg: &ScccConfig, limits: WefLimits) -> Result<BitErrorSpectrum> {
    let (u, l) = enumerate_config(cfg, limits)?;
    BitErrorSpectrum::assemble(&u, &l, cfg.realized_rate())
}

/// `union_bound(upper, lower, K, N, R, Eb/N0)`.
pub fn union_bound(
    upper: &UpperWef,
    lower: &LowerWef,
    rate: f64,
    eb_n0_db: f64,
) -> Result<f64> {
    Ok(BitErrorSpectrum::assemble(upper, lower, rate)?.bound(eb_n0_db))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub points: Vec<(f64, f64)>,
    pub k: usize,
    pub rate: f64,
    pub limits: WefLimits,
}

impl BoundCurve {
    /// CSV `eb_n0_db,pb_bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eb_n0_db,pb_bound\n");
        for (e, p) in &self.points {
            writeln!(s, "{e},{p:e}").unwrap();
        }
        s
    }
}

/// Smallest Eb/N0 in [`UB_BRACKET_DB`] at which the bound reaches `target_pb`.
pub fn ub_required_snr(spectrum: &BitErrorSpectrum, target_pb: f64) -> Result<f64> {
    if !(target_pb > 0.0) {
        return Err(Error::Domain(format!("target Pb {target_pb} must be positive")));
    }
    let (lo, hi) = UB_BRACKET_DB;
    let f = |s: f64| spectrum.bound(s).ln() - target_pb.ln();
    if f(lo) <= 0.0 {
        return Ok(lo);
    }
    if f(hi) > 0.0 {
        return Err(Error::NoConvergence(format!(
            "union bound stays above {target_pb:e} up to {hi} dB"
        )));
    }
    bisect(f, lo, hi, 1e-3, false)
}

/// Error-floor strategy: the largest feasible `d2 = min(300, L - 200)`.
pub fn choose_d2_ef(rate: Rational) -> Result<usize> {
    let l = crate::puncturing::length_for_rate(rate)?;
    Ok(*crate::puncturing::feasible_d2(l)?.end())
}

/// [`choose_d2_ef`] for an explicit `L`.
pub fn choose_d2_ef_for_length(l: usize) -> Result<usize> {
    Ok(*crate::puncturing::feasible_d2(l)?.end())
}
