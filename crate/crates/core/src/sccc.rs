//! The serially concatenated code in its upper/lower form and its iterative
//! decoder.
//!
//! The upper code C_U is CC(1,5/7) on the information frame `u` with every
//! other parity bit removed, giving `v = [u | kept parity]` of length
//! `N = 3K/2`. The lower code C_L is the rate-1 CC(5/7) applied to the
//! interleaved frame `z = pi(v)`. The transmitted codeword is
//! `[x0, x1, x2]`: systematic bits under P0 (all-ones), upper parity under
//! P1 and lower parity under P2.

use crate::convcode::{ConvCodeSpec, EndState, LlrFrame, SisoAlgorithm, Trellis};
use crate::error::{check_len, Error, Result};
use crate::interleaving::Interleaver;
use crate::puncturing::{
    CodeDimensions, PuncturePattern, RateCompatibleTable, TableCode, LOWER_PERIOD,
    SYSTEMATIC_PERIOD, UPPER_PERIOD,
};
use serde::{Deserialize, Serialize};

/// How the upper trellis ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Both encoders start in state 0 and are cut off after the last bit.
    Truncated,
    /// The last `memory` positions of `u` are tail bits that return the upper
    /// encoder to state 0; they carry no information. The lower encoder stays
    /// truncated. Frame lengths `N` and `L` are unchanged.
    #[default]
    UpperZeroTail,
}

impl Termination {
    /// Trailing positions of `u` reserved for tail bits.
    pub fn tail_len(self, memory: usize) -> usize {
        match self {
            Termination::Truncated => 0,
            Termination::UpperZeroTail => memory,
        }
    }
}

/// Immutable description of one member of the code family at block length K.
#[derive(Debug, Clone)]
pub struct ScccConfig {
    dims: CodeDimensions,
    systematic_pattern: PuncturePattern,
    upper_pattern: PuncturePattern,
    lower_pattern: PuncturePattern,
    interleaver: Interleaver,
    termination: Termination,
    algorithm: SisoAlgorithm,
    upper: Trellis,
    lower: Trellis,
}

impl ScccConfig {
    /// Builds a configuration from explicit P1 (period 100) and P2 (period 300)
    /// patterns. The D vector is read off the pattern weights.
    pub fn new(
        k: usize,
        upper_pattern: PuncturePattern,
        lower_pattern: PuncturePattern,
        interleaver: Interleaver,
        termination: Termination,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("block length K = {k} must be at least 2")));
        }
        if upper_pattern.period() != UPPER_PERIOD {
            return Err(Error::Config(format!(
                "upper pattern period {} != {UPPER_PERIOD}",
                upper_pattern.period()
            )));
        }
        if lower_pattern.period() != LOWER_PERIOD {
            return Err(Error::Config(format!(
                "lower pattern period {} != {LOWER_PERIOD}",
                lower_pattern.period()
            )));
        }
        let dims = CodeDimensions::new(upper_pattern.weight(), lower_pattern.weight())?
            .with_block_len(k);
        check_len("interleaver", dims.interleaver_len(), interleaver.len())?;
        let upper = Trellis::new(&ConvCodeSpec::cc_1_5_7())?;
        let lower = Trellis::new(&ConvCodeSpec::cc_5_7())?;
        if termination.tail_len(upper.memory()) >= k {
            return Err(Error::Domain(format!("K = {k} too short for the tail")));
        }
        Ok(Self {
            dims,
            systematic_pattern: PuncturePattern::all_ones(SYSTEMATIC_PERIOD),
            upper_pattern,
            lower_pattern,
            interleaver,
            termination,
            algorithm: SisoAlgorithm::LogMap,
            upper,
            lower,
        })
    }

    /// Builds the member with `D = [200, d1, d2]` from rate-compatible tables.
    pub fn from_tables(
        dims: CodeDimensions,
        upper_table: &RateCompatibleTable,
        lower_table: &RateCompatibleTable,
        interleaver: Interleaver,
        termination: Termination,
    ) -> Result<Self> {
        if upper_table.code() != TableCode::Upper || lower_table.code() != TableCode::Lower {
            return Err(Error::Config("tables passed in the wrong order".into()));
        }
        Self::new(
            dims.k,
            upper_table.pattern_keeping(dims.d1)?,
            lower_table.pattern_keeping(dims.d2)?,
            interleaver,
            termination,
        )
    }

    pub fn with_algorithm(mut self, algorithm: SisoAlgorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn dims(&self) -> CodeDimensions {
        self.dims
    }

    pub fn k(&self) -> usize {
        self.dims.k
    }

    /// Interleaver length `N`.
    pub fn n(&self) -> usize {
        self.dims.interleaver_len()
    }

    /// Upper parity bits surviving the fixed `[1 0]` puncturer.
    pub fn upper_parity_len(&self) -> usize {
        self.k().div_ceil(2)
    }

    /// Information bits per frame (K minus tail bits).
    pub fn info_len(&self) -> usize {
        self.k() - self.tail_len()
    }

    pub fn tail_len(&self) -> usize {
        self.termination.tail_len(self.upper.memory())
    }

    pub fn x0_len(&self) -> usize {
        self.systematic_pattern.kept_count(self.k())
    }

    pub fn x1_len(&self) -> usize {
        self.upper_pattern.kept_count(self.upper_parity_len())
    }

    pub fn x2_len(&self) -> usize {
        self.lower_pattern.kept_count(self.n())
    }

    /// Transmitted bits per frame.
    pub fn codeword_len(&self) -> usize {
        self.x0_len() + self.x1_len() + self.x2_len()
    }

    /// Realized rate `info_len / codeword_len`.
    pub fn realized_rate(&self) -> f64 {
        self.info_len() as f64 / self.codeword_len() as f64
    }

    pub fn upper_pattern(&self) -> &PuncturePattern {
        &self.upper_pattern
    }

    pub fn lower_pattern(&self) -> &PuncturePattern {
        &self.lower_pattern
    }

    pub fn systematic_pattern(&self) -> &PuncturePattern {
        &self.systematic_pattern
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn algorithm(&self) -> SisoAlgorithm {
        self.algorithm
    }

    pub fn upper_trellis(&self) -> &Trellis {
        &self.upper
    }

    pub fn lower_trellis(&self) -> &Trellis {
        &self.lower
    }

    /// Upper end-state condition used by the decoder and the enumerator.
    pub fn upper_end(&self) -> EndState {
        match self.termination {
            Termination::Truncated => EndState::Uniform,
            Termination::UpperZeroTail => EndState::Known(0),
        }
    }

    /// Completes `info` with tail bits (if any) to the full frame `u`.
    pub fn frame_from_info(&self, info: &[u8]) -> Result<Vec<u8>> {
        check_len("information bits", self.info_len(), info.len())?;
        let mut u = info.to_vec();
        if self.tail_len() > 0 {
            let (_, mut state) = self.upper.encode(info, 0);
            for _ in 0..self.tail_len() {
                let b = self.upper.tail_input(state);
                u.push(b);
                state = self.upper.next_state(state, b);
            }
            debug_assert_eq!(state, 0);
        }
        Ok(u)
    }

    /// `v = [u | P(parity of C1(u))]`.
    pub fn upper_codeword(&self, u: &[u8]) -> Result<Vec<u8>> {
        check_len("upper input", self.k(), u.len())?;
        let (coded, _) = self.upper.encode(u, 0);
        let mut v = u.to_vec();
        v.extend(coded.chunks(2).step_by(2).map(|c| c[1]));
        Ok(v)
    }

    /// Full encoder chain for an information frame.
    pub fn encode_frames(&self, info: &[u8]) -> Result<EncodedFrames> {
        let u = self.frame_from_info(info)?;
        let v = self.upper_codeword(&u)?;
        let z = self.interleaver.permute(&v)?;
        let (lower_parity, _) = self.lower.encode(&z, 0);
        let x0 = self.systematic_pattern.apply(&u);
        let x1 = self.upper_pattern.apply(&v[self.k()..]);
        let x2 = self.lower_pattern.apply(&lower_parity);
        Ok(EncodedFrames {
            u,
            v,
            z,
            lower_parity,
            codeword: Codeword { x0, x1, x2 },
        })
    }

    pub fn encode(&self, info: &[u8]) -> Result<Codeword> {
        Ok(self.encode_frames(info)?.codeword)
    }

    /// Splits a channel LLR frame over `[x0, x1, x2]` into LLRs on `v` and on
    /// the lower parity stream, with zeros at punctured positions.
    pub fn demultiplex(&self, channel: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("channel frame", self.codeword_len(), channel.len())?;
        let (a, rest) = channel.split_at(self.x0_len());
        let (b, c) = rest.split_at(self.x1_len());
        let mut v = self.systematic_pattern.depuncture(a, self.k())?;
        v.extend(self.upper_pattern.depuncture(b, self.upper_parity_len())?);
        let parity = self.lower_pattern.depuncture(c, self.n())?;
        Ok((v, parity))
    }

    /// One C_U activation. `prior_v` is the full prior on `v` (channel plus
    /// lower extrinsic); returns the extrinsic on `v` and the APP on `u`.
    pub fn upper_siso(&self, prior_v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.k();
        check_len("upper prior", self.n(), prior_v.len())?;
        let mut prior_out = vec![0.0; 2 * k];
        for t in 0..k {
            prior_out[2 * t] = prior_v[t];
            if t % 2 == 0 {
                prior_out[2 * t + 1] = prior_v[k + t / 2];
            }
        }
        let out = self.upper.siso(
            &vec![0.0; k],
            &prior_out,
            0,
            self.upper_end(),
            self.algorithm,
        )?;
        let mut ext = vec![0.0; self.n()];
        for t in 0..k {
            ext[t] = out.extrinsic_out[2 * t];
            if t % 2 == 0 {
                ext[k + t / 2] = out.extrinsic_out[2 * t + 1];
            }
        }
        Ok((ext, out.app_in))
    }

    /// One C_L activation. `prior_z` is the input prior on `z`, `parity` the
    /// channel LLRs of the lower parity stream; returns the extrinsic on `z`.
    pub fn lower_siso(&self, prior_z: &[f64], parity: &[f64]) -> Result<Vec<f64>> {
        let out = self
            .lower
            .siso(prior_z, parity, 0, EndState::Uniform, self.algorithm)?;
        Ok(out.extrinsic_in)
    }

    /// Iterative decoding; one iteration is a lower pass followed by an upper pass.
    pub fn decode(&self, channel: &LlrFrame, options: &DecodeOptions) -> Result<DecodeResult> {
        if options.n_iterations == 0 {
            return Err(Error::Domain("at least one iteration is required".into()));
        }
        let (ch_v, ch_parity) = self.demultiplex(channel)?;
        let n = self.n();
        let info = self.info_len();
        let mut ext_upper = vec![0.0; n];
        let mut app = Vec::with_capacity(options.n_iterations);
        let mut trace = Vec::new();
        let mut stable = 0;
        let mut prev_bits: Option<Vec<u8>> = None;
        for _ in 0..options.n_iterations {
            let to_lower: Vec<f64> = ch_v.iter().zip(&ext_upper).map(|(a, b)| a + b).collect();
            let prior_z = self.interleaver.permute(&to_lower)?;
            let ext_lower_z = self.lower_siso(&prior_z, &ch_parity)?;
            let ext_lower_v = self.interleaver.inverse_permute(&ext_lower_z)?;
            let to_upper: Vec<f64> = ch_v.iter().zip(&ext_lower_v).map(|(a, b)| a + b).collect();
            let (ext_v, app_u) = self.upper_siso(&to_upper)?;
            ext_upper = ext_v;
            if options.trace {
                trace.push(IterationMessages {
                    lower_extrinsic_z: ext_lower_z,
                    upper_extrinsic_v: ext_upper.clone(),
                });
            }
            let app_info = app_u[..info].to_vec();
            let bits = hard_decisions(&app_info);
            app.push(app_info);
            if options.early_stop {
                if prev_bits.as_ref() == Some(&bits) {
                    stable += 1;
                } else {
                    stable = 0;
                }
                prev_bits = Some(bits);
                if stable >= 2 {
                    break;
                }
            }
        }
        let bits = hard_decisions(app.last().expect("at least one iteration"));
        Ok(DecodeResult {
            bits,
            iterations_run: app.len(),
            app,
            trace,
        })
    }
}

/// How a family member's interleaver is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InterleaverChoice {
    Random { seed: u64 },
    SRandom { s: usize, seed: u64 },
}

impl Default for InterleaverChoice {
    fn default() -> Self {
        InterleaverChoice::Random { seed: 1 }
    }
}

impl InterleaverChoice {
    pub fn build(self, n: usize) -> Result<Interleaver> {
        match self {
            InterleaverChoice::Random { seed } => Interleaver::random(n, seed),
            InterleaverChoice::SRandom { s, seed } => {
                Interleaver::s_random(n, s, seed, crate::interleaving::DEFAULT_MAX_RESTARTS)
            }
        }
    }
}

/// A rate-compatible code family: the two puncturing tables plus the block
/// length, termination and interleaver rule shared by every member.
#[derive(Debug, Clone)]
pub struct CodeFamily {
    pub upper_table: RateCompatibleTable,
    pub lower_table: RateCompatibleTable,
    pub k: usize,
    pub termination: Termination,
    pub interleaver: InterleaverChoice,
    pub algorithm: SisoAlgorithm,
}

impl CodeFamily {
    pub fn new(upper_table: RateCompatibleTable, lower_table: RateCompatibleTable, k: usize) -> Result<Self> {
        if upper_table.code() != TableCode::Upper || lower_table.code() != TableCode::Lower {
            return Err(Error::Config("tables passed in the wrong order".into()));
        }
        if !upper_table.is_full() || !lower_table.is_full() {
            return Err(Error::Config("family tables must order every position".into()));
        }
        Ok(Self {
            upper_table,
            lower_table,
            k,
            termination: Termination::default(),
            interleaver: InterleaverChoice::default(),
            algorithm: SisoAlgorithm::LogMap,
        })
    }

    pub fn with_block_len(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_interleaver(mut self, interleaver: InterleaverChoice) -> Self {
        self.interleaver = interleaver;
        self
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn with_algorithm(mut self, algorithm: SisoAlgorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    /// Member with the given `d1, d2`; the block length of `dims` is replaced
    /// by the family's.
    pub fn config(&self, dims: CodeDimensions) -> Result<ScccConfig> {
        let dims = dims.with_block_len(self.k);
        let ilv = self.interleaver.build(dims.interleaver_len())?;
        Ok(ScccConfig::from_tables(dims, &self.upper_table, &self.lower_table, ilv, self.termination)?
            .with_algorithm(self.algorithm))
    }
}

/// Bit decisions from LLRs (`L < 0` decides 1; ties decide 0).
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}

/// Transmitted streams, serialized in the order `[x0, x1, x2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codeword {
    pub x0: Vec<u8>,
    pub x1: Vec<u8>,
    pub x2: Vec<u8>,
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.x0.len() + self.x1.len() + self.x2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multiplexed bit stream.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.x0);
        out.extend_from_slice(&self.x1);
        out.extend_from_slice(&self.x2);
        out
    }
}

/// Every intermediate frame of one encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFrames {
    pub u: Vec<u8>,
    pub v: Vec<u8>,
    pub z: Vec<u8>,
    /// Unpunctured C2 parity of `z`.
    pub lower_parity: Vec<u8>,
    pub codeword: Codeword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub n_iterations: usize,
    /// Stop once hard decisions have not changed for two iterations.
    pub early_stop: bool,
    /// Keep the extrinsic messages of every iteration.
    pub trace: bool,
}

impl DecodeOptions {
    pub fn iterations(n_iterations: usize) -> Self {
        Self {
            n_iterations,
            early_stop: false,
            trace: false,
        }
    }
}

/// Extrinsic messages exchanged in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationMessages {
    pub lower_extrinsic_z: Vec<f64>,
    pub upper_extrinsic_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Decided information bits after the last iteration run.
    pub bits: Vec<u8>,
    /// APP LLRs of the information bits after each iteration.
    pub app: Vec<Vec<f64>>,
    pub iterations_run: usize,
    pub trace: Vec<IterationMessages>,
}

/// Debug dump of one frame: `{"u", "x0", "x1", "x2", "seed", "dims"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDump {
    pub u: Vec<u8>,
    pub x0: Vec<u8>,
    pub x1: Vec<u8>,
    pub x2: Vec<u8>,
    pub seed: u64,
    pub dims: CodeDimensions,
}

impl FrameDump {
    pub fn new(frames: &EncodedFrames, seed: u64, dims: CodeDimensions) -> Self {
        Self {
            u: frames.u.clone(),
            x0: frames.codeword.x0.clone(),
            x1: frames.codeword.x1.clone(),
            x2: frames.codeword.x2.clone(),
            seed,
            dims,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("frame dump serializes")
    }

    /// Parses and validates a dump: binary entries and stream lengths
    /// consistent with the D vector.
    pub fn from_json(text: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        dump.validate()?;
        Ok(dump)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        CodeDimensions::new(d.d1, d.d2)?;
        if d.d0 != SYSTEMATIC_PERIOD {
            return Err(Error::Domain(format!("d0 = {} must be {SYSTEMATIC_PERIOD}", d.d0)));
        }
        for (name, s) in [("u", &self.u), ("x0", &self.x0), ("x1", &self.x1), ("x2", &self.x2)] {
            if s.iter().any(|&b| b > 1) {
                return Err(Error::Domain(format!("{name} contains a non-binary entry")));
            }
        }
        check_len("u", d.k, self.u.len())?;
        check_len("x0", d.k, self.x0.len())?;
        let bounds = |len: usize, period: usize, weight: usize| {
            let full = len / period;
            let rem = len % period;
            (full * weight + rem.saturating_sub(period - weight), full * weight + rem.min(weight))
        };
        for (what, actual, len, period, weight) in [
            ("x1", self.x1.len(), d.k.div_ceil(2), UPPER_PERIOD, d.d1),
            ("x2", self.x2.len(), d.interleaver_len(), LOWER_PERIOD, d.d2),
        ] {
            let (lo, hi) = bounds(len, period, weight);
            if actual < lo || actual > hi {
                return Err(Error::Domain(format!(
                    "{what} has {actual} bits, expected between {lo} and {hi}"
                )));
            }
        }
        Ok(())
    }
}
