//! Binary convolutional constituent codes: trellis construction, encoding and
//! soft-in/soft-out a-posteriori decoding.
//!
//! Polynomials are written in octal with the most significant bit of a
//! degree-`memory` polynomial holding the coefficient of `D^0`. With that
//! convention CC(1,5/7) has feedback `7` (1 + D + D^2) and feedforward `5`
//! (1 + D^2).
//!
//! Bits are `0`/`1` internally. An LLR is `ln P(bit = 0) / P(bit = 1)`, which
//! equals `ln P(+1) / P(-1)` under the channel map `0 -> +1`, `1 -> -1`.

use crate::error::{check_len, Error, Result};
use std::ops::{Deref, DerefMut};

/// Magnitude at which incoming LLRs are saturated.
pub const LLR_CLAMP: f64 = 50.0;

/// Stand-in for `-inf` in log-domain recursions; keeps `a - b` finite.
const NEG: f64 = -1.0e30;

/// Beyond this argument `ln(1 + e^-d)` is below `5e-18` and is dropped.
const CORRECTION_CUTOFF: f64 = 40.0;

/// Description of a binary recursive (or feedforward) convolutional encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCodeSpec {
    pub memory: usize,
    pub feedback: u32,
    pub feedforward: Vec<u32>,
    pub systematic: bool,
}

impl ConvCodeSpec {
    pub fn new(memory: usize, feedback: u32, feedforward: Vec<u32>, systematic: bool) -> Self {
        Self {
            memory,
            feedback,
            feedforward,
            systematic,
        }
    }

    /// Parses octal polynomial strings, e.g. `from_octal(2, "7", &["5"], true)`.
    pub fn from_octal(
        memory: usize,
        feedback: &str,
        feedforward: &[&str],
        systematic: bool,
    ) -> Result<Self> {
        let parse = |s: &str| {
            u32::from_str_radix(s.trim(), 8)
                .map_err(|_| Error::Config(format!("'{s}' is not an octal polynomial")))
        };
        let fb = parse(feedback)?;
        let ff = feedforward
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>>>()?;
        let spec = Self::new(memory, fb, ff, systematic);
        spec.validate()?;
        Ok(spec)
    }

    /// Rate-1/2, 4-state systematic CC(1,5/7).
    pub fn cc_1_5_7() -> Self {
        Self::new(2, 0o7, vec![0o5], true)
    }

    /// Rate-1 parity-only CC(5/7).
    pub fn cc_5_7() -> Self {
        Self::new(2, 0o7, vec![0o5], false)
    }

    /// Two-state accumulator 1/(1+D).
    pub fn accumulator() -> Self {
        Self::new(1, 0o3, vec![0o2], false)
    }

    pub fn n_outputs(&self) -> usize {
        usize::from(self.systematic) + self.feedforward.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.memory > 12 {
            return Err(Error::Config(format!(
                "memory must be in 1..=12, got {}",
                self.memory
            )));
        }
        let limit = 1u32 << (self.memory + 1);
        let constant = 1u32 << self.memory;
        if self.feedback >= limit {
            return Err(Error::Config(format!(
                "feedback polynomial {:o} has degree above memory {}",
                self.feedback, self.memory
            )));
        }
        if self.feedback & constant == 0 {
            return Err(Error::Config(format!(
                "feedback polynomial {:o} has no constant term",
                self.feedback
            )));
        }
        for &g in &self.feedforward {
            if g >= limit {
                return Err(Error::Config(format!(
                    "feedforward polynomial {:o} has degree above memory {}",
                    g, self.memory
                )));
            }
        }
        if self.n_outputs() == 0 {
            return Err(Error::Config("code has no outputs".into()));
        }
        Ok(())
    }
}

/// Per-bit LLR vector exchanged between the channel front end and SISO decoders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with every magnitude clamped to [`LLR_CLAMP`].
    pub fn saturated(&self) -> Self {
        Self(self.0.iter().map(|&x| saturate(x)).collect())
    }
}

impl From<Vec<f64>> for LlrFrame {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for LlrFrame {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for LlrFrame {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[inline]
pub fn saturate(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Arithmetic used for the log-domain recursions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SisoAlgorithm {
    /// Exact `max*` with the `ln(1 + e^-|a-b|)` correction.
    #[default]
    LogMap,
    /// Max-log approximation (correction dropped).
    MaxLogMap,
}

impl SisoAlgorithm {
    #[inline]
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            SisoAlgorithm::LogMap => max_star(a, b),
            SisoAlgorithm::MaxLogMap => a.max(b),
        }
    }
}

/// Jacobian logarithm `ln(e^a + e^b)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    let (m, d) = if a > b { (a, a - b) } else { (b, b - a) };
    if d > CORRECTION_CUTOFF {
        m
    } else {
        m + (-d).exp().ln_1p()
    }
}

/// Final-stage boundary condition of the backward recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndState {
    /// Unterminated trellis: every end state equally likely.
    Uniform,
    /// Terminated trellis ending in the given state.
    Known(usize),
}

/// Output of one SISO activation.
#[derive(Debug, Clone)]
pub struct SisoOutput {
    pub extrinsic_in: Vec<f64>,
    /// Step-major: entry `k * n_outputs + j` is output bit `j` at step `k`.
    pub extrinsic_out: Vec<f64>,
    pub app_in: Vec<f64>,
}

/// State-transition structure of a binary convolutional code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    n_states: usize,
    n_outputs: usize,
    memory: usize,
    /// Indexed by `state * 2 + input`.
    next: Vec<usize>,
    /// Output bitmask, bit `j` is output `j`; indexed like `next`.
    out: Vec<u32>,
    /// Feedback bit per state; feeding it as input drives the register toward zero.
    tail: Vec<u8>,
}

#[inline]
fn parity(x: u32) -> u32 {
    x.count_ones() & 1
}

impl Trellis {
    /// Builds the trellis from the shift-register realization with feedback.
    pub fn new(spec: &ConvCodeSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.memory;
        let n_states = 1usize << m;
        let fb_taps = spec.feedback & ((1u32 << m) - 1);
        let n_outputs = spec.n_outputs();
        let mut next = Vec::with_capacity(2 * n_states);
        let mut out = Vec::with_capacity(2 * n_states);
        let mut tail = Vec::with_capacity(n_states);
        for s in 0..n_states as u32 {
            let fb = parity(s & fb_taps);
            tail.push(fb as u8);
            for x in 0..2u32 {
                let w = x ^ fb;
                let reg = (w << m) | s;
                let mut mask = 0u32;
                let mut j = 0;
                if spec.systematic {
                    mask |= x;
                    j += 1;
                }
                for &g in &spec.feedforward {
                    mask |= parity(reg & g) << j;
                    j += 1;
                }
                next.push((reg >> 1) as usize);
                out.push(mask);
            }
        }
        Ok(Self {
            n_states,
            n_outputs,
            memory: m,
            next,
            out,
            tail,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn n_edges(&self) -> usize {
        self.next.len()
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: u8) -> usize {
        self.next[state * 2 + input as usize]
    }

    /// Output bits of edge `(state, input)` as a bitmask (bit `j` = output `j`).
    #[inline]
    pub fn output_mask(&self, state: usize, input: u8) -> u32 {
        self.out[state * 2 + input as usize]
    }

    /// Input bit that shifts a zero into the register from `state`.
    #[inline]
    pub fn tail_input(&self, state: usize) -> u8 {
        self.tail[state]
    }

    /// Encodes `info` from `start_state`; output is step-major.
    pub fn encode(&self, info: &[u8], start_state: usize) -> (Vec<u8>, usize) {
        assert!(start_state < self.n_states, "start state out of range");
        let mut coded = Vec::with_capacity(info.len() * self.n_outputs);
        let mut state = start_state;
        for &b in info {
            let e = state * 2 + (b & 1) as usize;
            let mask = self.out[e];
            for j in 0..self.n_outputs {
                coded.push(((mask >> j) & 1) as u8);
            }
            state = self.next[e];
        }
        (coded, state)
    }

    /// BCJR a-posteriori decoding in the log domain.
    ///
    /// `prior_in` has one LLR per trellis step and `prior_out` has
    /// `n_outputs` LLRs per step (step-major). Priors are saturated at
    /// [`LLR_CLAMP`]; all returned identities (`app_in = prior_in +
    /// extrinsic_in`, extrinsic = APP - prior) refer to the saturated priors.
    pub fn siso(
        &self,
        prior_in: &[f64],
        prior_out: &[f64],
        start_state: usize,
        end: EndState,
        algo: SisoAlgorithm,
    ) -> Result<SisoOutput> {
        let steps = prior_in.len();
        let n_out = self.n_outputs;
        let ns = self.n_states;
        check_len("siso output priors", steps * n_out, prior_out.len())?;
        if start_state >= ns {
            return Err(Error::Config(format!("start state {start_state} >= {ns}")));
        }
        if let EndState::Known(s) = end {
            if s >= ns {
                return Err(Error::Config(format!("end state {s} >= {ns}")));
            }
        }

        let n_edges = 2 * ns;
        // Per-edge sign vectors: at step k, gamma(e) = 0.5 * (sin * Lin + sum_j sgn_j * Lout_j).
        let mut gamma = vec![0.0; n_edges];
        let compute_gamma = |k: usize, gamma: &mut [f64]| {
            let lin = 0.5 * saturate(prior_in[k]);
            let louts = &prior_out[k * n_out..(k + 1) * n_out];
            for (e, g) in gamma.iter_mut().enumerate() {
                let mut acc = if e & 1 == 0 { lin } else { -lin };
                let mask = self.out[e];
                for (j, &l) in louts.iter().enumerate() {
                    let h = 0.5 * saturate(l);
                    acc += if (mask >> j) & 1 == 0 { h } else { -h };
                }
                *g = acc;
            }
        };

        // Forward recursion, normalized so that max alpha is zero at each step.
        let mut alpha = vec![NEG; (steps + 1) * ns];
        alpha[start_state] = 0.0;
        let mut next_alpha = vec![NEG; ns];
        for k in 0..steps {
            compute_gamma(k, &mut gamma);
            next_alpha.iter_mut().for_each(|a| *a = NEG);
            let cur = &alpha[k * ns..(k + 1) * ns];
            for s in 0..ns {
                let a = cur[s];
                if a <= NEG {
                    continue;
                }
                for b in 0..2 {
                    let e = 2 * s + b;
                    let t = a + gamma[e];
                    let sp = self.next[e];
                    next_alpha[sp] = if next_alpha[sp] <= NEG {
                        t
                    } else {
                        algo.combine(next_alpha[sp], t)
                    };
                }
            }
            let norm = next_alpha.iter().cloned().fold(NEG, f64::max);
            let dst = &mut alpha[(k + 1) * ns..(k + 2) * ns];
            for (d, &v) in dst.iter_mut().zip(next_alpha.iter()) {
                *d = if v <= NEG { NEG } else { v - norm };
            }
        }

        let mut beta = vec![NEG; ns];
        match end {
            EndState::Uniform => beta.iter_mut().for_each(|b| *b = 0.0),
            EndState::Known(s) => beta[s] = 0.0,
        }
        let mut prev_beta = vec![NEG; ns];
        let mut app_in = vec![0.0; steps];
        let mut extrinsic_in = vec![0.0; steps];
        let mut extrinsic_out = vec![0.0; steps * n_out];
        let mut out_acc = vec![NEG; 2 * n_out];

        for k in (0..steps).rev() {
            compute_gamma(k, &mut gamma);
            let cur = &alpha[k * ns..(k + 1) * ns];
            let mut in_acc = [NEG; 2];
            out_acc.iter_mut().for_each(|x| *x = NEG);
            for s in 0..ns {
                let mut bsum = NEG;
                for b in 0..2 {
                    let e = 2 * s + b;
                    let bn = beta[self.next[e]];
                    if bn <= NEG {
                        continue;
                    }
                    let gb = gamma[e] + bn;
                    bsum = if bsum <= NEG { gb } else { algo.combine(bsum, gb) };
                    let a = cur[s];
                    if a <= NEG {
                        continue;
                    }
                    let t = a + gb;
                    in_acc[b] = if in_acc[b] <= NEG {
                        t
                    } else {
                        algo.combine(in_acc[b], t)
                    };
                    let mask = self.out[e];
                    for j in 0..n_out {
                        let idx = 2 * j + ((mask >> j) & 1) as usize;
                        out_acc[idx] = if out_acc[idx] <= NEG {
                            t
                        } else {
                            algo.combine(out_acc[idx], t)
                        };
                    }
                }
                prev_beta[s] = bsum;
            }
            let app = in_acc[0] - in_acc[1];
            app_in[k] = app;
            extrinsic_in[k] = app - saturate(prior_in[k]);
            for j in 0..n_out {
                let i = k * n_out + j;
                extrinsic_out[i] = (out_acc[2 * j] - out_acc[2 * j + 1]) - saturate(prior_out[i]);
            }
            let norm = prev_beta.iter().cloned().fold(NEG, f64::max);
            for (b, &p) in beta.iter_mut().zip(prev_beta.iter()) {
                *b = if p <= NEG { NEG } else { p - norm };
            }
        }

        Ok(SisoOutput {
            extrinsic_in,
            extrinsic_out,
            app_in,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Literal shift-register simulation, independent of the trellis tables.
    fn shift_register(spec: &ConvCodeSpec, bits: &[u8]) -> Vec<u8> {
        let m = spec.memory;
        // reg[i] = s_{k-i}, i = 1..=m
        let mut reg = vec![0u8; m + 1];
        let coef = |p: u32, i: usize| ((p >> (m - i)) & 1) as u8;
        let mut out = Vec::new();
        for &x in bits {
            let mut w = x;
            for i in 1..=m {
                w ^= coef(spec.feedback, i) & reg[i];
            }
            reg[0] = w;
            if spec.systematic {
                out.push(x);
            }
            for &g in &spec.feedforward {
                let mut y = 0;
                for i in 0..=m {
                    y ^= coef(g, i) & reg[i];
                }
                out.push(y);
            }
            for i in (1..=m).rev() {
                reg[i] = reg[i - 1];
            }
        }
        out
    }

    /// Bitwise MAP marginals by enumerating every input sequence.
    fn brute_force_app(
        trellis: &Trellis,
        prior_in: &[f64],
        prior_out: &[f64],
        end: EndState,
    ) -> Vec<f64> {
        let k = prior_in.len();
        let n = trellis.n_outputs();
        let mut lse = vec![[f64::NEG_INFINITY; 2]; k];
        for word in 0u32..(1 << k) {
            let bits: Vec<u8> = (0..k).map(|i| ((word >> i) & 1) as u8).collect();
            let (coded, end_state) = trellis.encode(&bits, 0);
            if let EndState::Known(s) = end {
                if end_state != s {
                    continue;
                }
            }
            let mut metric = 0.0;
            for i in 0..k {
                metric += if bits[i] == 0 { 0.5 } else { -0.5 } * prior_in[i];
            }
            for i in 0..k * n {
                metric += if coded[i] == 0 { 0.5 } else { -0.5 } * prior_out[i];
            }
            for i in 0..k {
                let slot = &mut lse[i][bits[i] as usize];
                *slot = if slot.is_infinite() {
                    metric
                } else {
                    let m = slot.max(metric);
                    m + ((*slot - m).exp() + (metric - m).exp()).ln()
                };
            }
        }
        lse.iter().map(|p| p[0] - p[1]).collect()
    }

    #[test]
    fn cc_1_5_7_has_four_states_and_two_outputs() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        assert_eq!(t.n_states(), 4);
        assert_eq!(t.n_edges(), 8);
        assert_eq!(t.n_outputs(), 2);
    }

    #[test]
    fn accumulator_has_two_states() {
        let t = Trellis::new(&ConvCodeSpec::accumulator()).unwrap();
        assert_eq!(t.n_states(), 2);
        assert_eq!(t.n_edges(), 4);
        // y_k = x_k + y_{k-1}
        let (y, _) = t.encode(&[1, 0, 0, 1, 0], 0);
        assert_eq!(y, vec![1, 1, 1, 0, 0]);
    }

    #[test]
    fn malformed_polynomials_are_rejected() {
        assert!(ConvCodeSpec::new(2, 0o3, vec![0o5], false).validate().is_err());
        assert!(ConvCodeSpec::new(2, 0o17, vec![0o5], false).validate().is_err());
        assert!(ConvCodeSpec::new(2, 0o7, vec![0o15], false).validate().is_err());
        assert!(ConvCodeSpec::from_octal(2, "9", &["5"], true).is_err());
        assert!(Trellis::new(&ConvCodeSpec::new(0, 1, vec![1], false)).is_err());
    }

    #[test]
    fn transition_table_matches_shift_register() {
        for spec in [
            ConvCodeSpec::cc_5_7(),
            ConvCodeSpec::cc_1_5_7(),
            ConvCodeSpec::accumulator(),
            ConvCodeSpec::new(3, 0o13, vec![0o15, 0o17], true),
        ] {
            let t = Trellis::new(&spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..50 {
                let bits: Vec<u8> = (0..24).map(|_| rng.random_range(0..2)).collect();
                assert_eq!(t.encode(&bits, 0).0, shift_register(&spec, &bits));
            }
        }
    }

    #[test]
    fn every_state_reachable_within_memory_steps() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let mut reach = vec![false; t.n_states()];
        for word in 0..(1 << t.memory()) {
            let bits: Vec<u8> = (0..t.memory()).map(|i| (word >> i) as u8 & 1).collect();
            reach[t.encode(&bits, 0).1] = true;
        }
        assert!(reach.iter().all(|&r| r));
    }

    #[test]
    fn impulse_response_of_cc_5_7() {
        let t = Trellis::new(&ConvCodeSpec::cc_5_7()).unwrap();
        let (p, _) = t.encode(&[1, 0, 0, 0, 0, 0, 0], 0);
        assert_eq!(p, vec![1, 1, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let (c, s) = t.encode(&[0; 40], 0);
        assert!(c.iter().all(|&b| b == 0));
        assert_eq!(s, 0);
    }

    #[test]
    fn encoder_is_linear() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = t.encode(&a, 0).0;
            let eb = t.encode(&b, 0).0;
            let eab = t.encode(&ab, 0).0;
            let xor: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
            assert_eq!(xor, eab);
        }
    }

    #[test]
    fn tail_inputs_terminate_in_memory_steps() {
        let t = Trellis::new(&ConvCodeSpec::cc_5_7()).unwrap();
        for s0 in 0..t.n_states() {
            let mut s = s0;
            for _ in 0..t.memory() {
                s = t.next_state(s, t.tail_input(s));
            }
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn no_information_in_gives_none_out() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let out = t
            .siso(&[0.0; 16], &[0.0; 32], 0, EndState::Uniform, SisoAlgorithm::LogMap)
            .unwrap();
        assert!(out.extrinsic_in.iter().all(|x| x.abs() < 1e-12));
        assert!(out.extrinsic_out.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn siso_rejects_length_mismatch() {
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let r = t.siso(&[0.0; 4], &[0.0; 7], 0, EndState::Uniform, SisoAlgorithm::LogMap);
        assert!(matches!(r, Err(Error::Length { .. })));
    }

    fn random_priors(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn log_map_matches_brute_force_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for spec in [ConvCodeSpec::cc_1_5_7(), ConvCodeSpec::cc_5_7()] {
            let t = Trellis::new(&spec).unwrap();
            for trial in 0..40 {
                let k = 1 + trial % 10;
                let pin = random_priors(&mut rng, k, 3.0);
                let pout = random_priors(&mut rng, k * t.n_outputs(), 4.0);
                for end in [EndState::Uniform, EndState::Known(0)] {
                    // Short terminated blocks force some bits; their LLRs are infinite.
                    if end == EndState::Known(0) && k < 5 {
                        continue;
                    }
                    let out = t.siso(&pin, &pout, 0, end, SisoAlgorithm::LogMap).unwrap();
                    let oracle = brute_force_app(&t, &pin, &pout, end);
                    for (a, b) in out.app_in.iter().zip(&oracle) {
                        assert!((a - b).abs() <= 1e-6, "k={k} {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn doubled_priors_keep_map_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        for _ in 0..50 {
            let pin: Vec<f64> = random_priors(&mut rng, 8, 2.0)
                .iter()
                .map(|x| 2.0 * x)
                .collect();
            let pout = random_priors(&mut rng, 16, 3.0);
            let out = t
                .siso(&pin, &pout, 0, EndState::Uniform, SisoAlgorithm::LogMap)
                .unwrap();
            let oracle = brute_force_app(&t, &pin, &pout, EndState::Uniform);
            for (a, b) in out.app_in.iter().zip(&oracle) {
                if b.abs() > 1e-9 {
                    assert_eq!(a.signum(), b.signum());
                }
            }
        }
    }

    #[test]
    fn extrinsic_excludes_own_prior_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let pin = random_priors(&mut rng, 64, 10.0);
        let pout = random_priors(&mut rng, 128, 10.0);
        let out = t
            .siso(&pin, &pout, 0, EndState::Uniform, SisoAlgorithm::LogMap)
            .unwrap();
        for i in 0..64 {
            assert_eq!(out.app_in[i] - pin[i], out.extrinsic_in[i]);
        }
    }

    #[test]
    fn max_log_stays_close_to_log_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = Trellis::new(&ConvCodeSpec::cc_1_5_7()).unwrap();
        let pin = vec![0.0; 200];
        // Noisy observations of the all-zero codeword at a high SNR.
        let pout: Vec<f64> = (0..400).map(|_| 4.0 + rng.random_range(-3.0..3.0)).collect();
        let a = t.siso(&pin, &pout, 0, EndState::Uniform, SisoAlgorithm::LogMap).unwrap();
        let b = t
            .siso(&pin, &pout, 0, EndState::Uniform, SisoAlgorithm::MaxLogMap)
            .unwrap();
        let agree = a
            .app_in
            .iter()
            .zip(&b.app_in)
            .filter(|(x, y)| x.signum() == y.signum())
            .count();
        assert!(agree >= 198);
    }
}
