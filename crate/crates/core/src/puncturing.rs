//! Puncturing patterns, rate-compatible puncturing tables and the rate
//! bookkeeping of the D = [d0, d1, d2] parameterization.
//!
//! All counts are expressed at the 200-information-bit normalization: the
//! systematic, upper-parity and lower-parity patterns have periods 200, 100
//! and 300, and are tiled for longer frames.

use crate::error::{Error, Result};
use num_rational::Ratio;
use std::fmt;
use std::ops::RangeInclusive;

/// Period of the systematic pattern (and the normalization block length).
pub const SYSTEMATIC_PERIOD: usize = 200;
/// Period of the upper-parity pattern.
pub const UPPER_PERIOD: usize = 100;
/// Period of the lower-parity pattern.
pub const LOWER_PERIOD: usize = 300;

pub type Rational = Ratio<i64>;

/// Periodic keep/drop mask; `true` means transmit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PuncturePattern {
    keep: Vec<bool>,
}

impl PuncturePattern {
    pub fn new(keep: Vec<bool>) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Domain("puncturing pattern must be non-empty".into()));
        }
        Ok(Self { keep })
    }

    pub fn all_ones(np: usize) -> Self {
        assert!(np > 0, "pattern length must be positive");
        Self {
            keep: vec![true; np],
        }
    }

    /// Pattern of length `np` puncturing exactly the listed indices.
    pub fn from_zeros(np: usize, zeros: &[usize]) -> Result<Self> {
        let mut keep = vec![true; np];
        for &z in zeros {
            if z >= np {
                return Err(Error::Domain(format!("index {z} outside pattern of length {np}")));
            }
            keep[z] = false;
        }
        Self::new(keep)
    }

    /// Parses a `1`/`0` string such as `"1110"` (whitespace ignored).
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let keep = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected character '{other}' in pattern"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(keep)
    }

    /// Sorted indices of the punctured positions.
    pub fn zeros(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter(|(_, &k)| !k)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn period(&self) -> usize {
        self.keep.len()
    }

    pub fn keep_mask(&self) -> &[bool] {
        &self.keep
    }

    /// Tiling rule: position `i` of a frame is kept iff `keep[i mod Np]`.
    #[inline]
    pub fn is_kept(&self, i: usize) -> bool {
        self.keep[i % self.keep.len()]
    }

    /// Number of kept positions in one period.
    pub fn weight(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Number of kept positions in a frame of `len` positions (partial last period included).
    pub fn kept_count(&self, len: usize) -> usize {
        let np = self.keep.len();
        let full = len / np;
        let rem = len % np;
        full * self.weight() + self.keep[..rem].iter().filter(|&&k| k).count()
    }

    pub fn apply<T: Copy>(&self, frame: &[T]) -> Vec<T> {
        frame
            .iter()
            .enumerate()
            .filter(|(i, _)| self.is_kept(*i))
            .map(|(_, &x)| x)
            .collect()
    }

    /// Re-inserts erased (zero) LLRs at punctured positions.
    pub fn depuncture(&self, punctured: &[f64], full_len: usize) -> Result<Vec<f64>> {
        let expected = self.kept_count(full_len);
        if punctured.len() != expected {
            return Err(Error::Length {
                what: "punctured frame",
                expected,
                actual: punctured.len(),
            });
        }
        let mut src = punctured.iter();
        Ok((0..full_len)
            .map(|i| {
                if self.is_kept(i) {
                    *src.next().expect("length checked")
                } else {
                    0.0
                }
            })
            .collect())
    }
}

impl fmt::Display for PuncturePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &k in &self.keep {
            f.write_str(if k { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Which constituent a puncturing table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableCode {
    Upper,
    Lower,
}

impl TableCode {
    pub fn period(self) -> usize {
        match self {
            TableCode::Upper => UPPER_PERIOD,
            TableCode::Lower => LOWER_PERIOD,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            TableCode::Upper => "upper",
            TableCode::Lower => "lower",
        }
    }
}

/// Ordered puncturing indices. Puncturing the first `n` entries for
/// increasing `n` yields nested keep-sets, so the resulting family is rate
/// compatible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateCompatibleTable {
    np: usize,
    code: TableCode,
    order: Vec<usize>,
}

impl RateCompatibleTable {
    pub fn new(np: usize, code: TableCode, order: Vec<usize>) -> Result<Self> {
        if np == 0 {
            return Err(Error::Domain("table period must be positive".into()));
        }
        if order.len() > np {
            return Err(Error::Domain(format!(
                "table has {} entries but period {np}",
                order.len()
            )));
        }
        let mut seen = vec![false; np];
        for &i in &order {
            if i >= np {
                return Err(Error::Domain(format!("index {i} outside period {np}")));
            }
            if seen[i] {
                return Err(Error::Domain(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
        Ok(Self { np, code, order })
    }

    pub fn period(&self) -> usize {
        self.np
    }

    pub fn code(&self) -> TableCode {
        self.code
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.order.len() == self.np
    }

    /// Pattern puncturing the first `n_punctured` indices of the table.
    pub fn pattern_at(&self, n_punctured: usize) -> Result<PuncturePattern> {
        if n_punctured > self.order.len() {
            return Err(Error::Domain(format!(
                "cannot puncture {n_punctured} positions with a {}-entry table",
                self.order.len()
            )));
        }
        PuncturePattern::from_zeros(self.np, &self.order[..n_punctured])
    }

    /// Pattern transmitting exactly `n_kept` positions per period.
    pub fn pattern_keeping(&self, n_kept: usize) -> Result<PuncturePattern> {
        if n_kept > self.np {
            return Err(Error::Domain(format!(
                "cannot keep {n_kept} of {} positions",
                self.np
            )));
        }
        self.pattern_at(self.np - n_kept)
    }

    /// Plain-text form: `# np=<Np> code=<upper|lower>` then one index per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# np={} code={}\n", self.np, self.code.as_str());
        for i in &self.order {
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty table file".into(),
        })?;
        let fields = parse_header(header, 1)?;
        let mut np = None;
        let mut code = None;
        for (key, value) in fields {
            match key {
                "np" => {
                    np = Some(value.parse::<usize>().map_err(|_| Error::Parse {
                        line: 1,
                        msg: format!("bad np '{value}'"),
                    })?)
                }
                "code" => {
                    code = Some(match value {
                        "upper" => TableCode::Upper,
                        "lower" => TableCode::Lower,
                        _ => {
                            return Err(Error::Parse {
                                line: 1,
                                msg: format!("unknown code '{value}'"),
                            })
                        }
                    })
                }
                _ => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unknown header field '{key}'"),
                    })
                }
            }
        }
        let np = np.ok_or(Error::Parse {
            line: 1,
            msg: "missing np".into(),
        })?;
        let code = code.ok_or(Error::Parse {
            line: 1,
            msg: "missing code".into(),
        })?;
        let mut order = Vec::new();
        for (i, line) in lines {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v = t.parse::<usize>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("'{t}' is not an index"),
            })?;
            order.push(v);
        }
        Self::new(np, code, order).map_err(|e| Error::Parse {
            line: 0,
            msg: e.to_string(),
        })
    }
}

/// Splits a `# key=value key=value` header line.
pub(crate) fn parse_header(line: &str, line_no: usize) -> Result<Vec<(&str, &str)>> {
    let body = line.trim().strip_prefix('#').ok_or(Error::Parse {
        line: line_no,
        msg: "header must start with '#'".into(),
    })?;
    body.split_whitespace()
        .map(|tok| {
            tok.split_once('=').ok_or(Error::Parse {
                line: line_no,
                msg: format!("malformed header field '{tok}'"),
            })
        })
        .collect()
}

fn check_unit_interval(name: &str, r: Rational) -> Result<()> {
    if r < Rational::from_integer(0) || r > Rational::from_integer(1) {
        Err(Error::Domain(format!("{name} = {r} outside [0, 1]")))
    } else {
        Ok(())
    }
}

/// Overall rate `(rho0 + rho1/2 + 3 rho2/2)^-1`.
pub fn rate_from_dimensions(rho0: Rational, rho1: Rational, rho2: Rational) -> Result<Rational> {
    check_unit_interval("rho0", rho0)?;
    check_unit_interval("rho1", rho1)?;
    check_unit_interval("rho2", rho2)?;
    let denom = rho0 + rho1 / 2 + rho2 * 3 / 2;
    if denom == Rational::from_integer(0) {
        return Err(Error::UndefinedRate);
    }
    Ok(denom.recip())
}

/// Total transmitted bits `L` per 200 information bits at rate `r`, when integral.
pub fn length_for_rate(r: Rational) -> Result<usize> {
    if r <= Rational::from_integer(0) {
        return Err(Error::Domain(format!("rate {r} must be positive")));
    }
    let l = Rational::from_integer(SYSTEMATIC_PERIOD as i64) / r;
    if !l.is_integer() {
        return Err(Error::Domain(format!(
            "rate {r} gives non-integral L = {l}; use nearest_length"
        )));
    }
    Ok(*l.numer() as usize)
}

/// Nearest integral `L` for rates such as 9/10 that are not exactly representable.
pub fn nearest_length(r: f64) -> usize {
    (SYSTEMATIC_PERIOD as f64 / r).round() as usize
}

fn check_length(l: usize) -> Result<()> {
    let lo = SYSTEMATIC_PERIOD;
    let hi = SYSTEMATIC_PERIOD + UPPER_PERIOD + LOWER_PERIOD;
    if !(lo..=hi).contains(&l) {
        return Err(Error::Domain(format!("L = {l} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Feasible `d2` values at total length `L`, from `0 <= d1 <= 100` and `0 <= d2 <= 300`.
pub fn feasible_d2(l: usize) -> Result<RangeInclusive<usize>> {
    check_length(l)?;
    let free = l - SYSTEMATIC_PERIOD;
    let lo = free.saturating_sub(UPPER_PERIOD);
    let hi = free.min(LOWER_PERIOD);
    Ok(lo..=hi)
}

/// Straight-line compromise `d2 = (3L - 600) / 4` between the waterfall and
/// error-floor strategies.
///
/// Non-integral values are rounded up to the next even integer, then clamped
/// to the feasible interval.
pub fn d2_compromise(l: usize) -> Result<usize> {
    let range = feasible_d2(l)?;
    let num = 3 * l as i64 - 600;
    let d2 = if num % 4 == 0 {
        num / 4
    } else {
        let up = num.div_euclid(4) + 1;
        if up % 2 == 0 {
            up
        } else {
            up + 1
        }
    };
    Ok((d2.max(0) as usize).clamp(*range.start(), *range.end()))
}

/// The D vector and block length of one member of the code family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct CodeDimensions {
    pub d0: usize,
    pub d1: usize,
    pub d2: usize,
    /// Information bits per frame.
    pub k: usize,
}

impl CodeDimensions {
    /// `D = [200, d1, d2]` at block length 200.
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 > UPPER_PERIOD {
            return Err(Error::Domain(format!("d1 = {d1} outside [0, {UPPER_PERIOD}]")));
        }
        if d2 > LOWER_PERIOD {
            return Err(Error::Domain(format!("d2 = {d2} outside [0, {LOWER_PERIOD}]")));
        }
        Ok(Self {
            d0: SYSTEMATIC_PERIOD,
            d1,
            d2,
            k: SYSTEMATIC_PERIOD,
        })
    }

    /// Splits `L` into `d1 = L - 200 - d2` and `d2`.
    pub fn from_length(l: usize, d2: usize) -> Result<Self> {
        let range = feasible_d2(l)?;
        if !range.contains(&d2) {
            return Err(Error::Infeasible {
                l,
                d2,
                lo: *range.start(),
                hi: *range.end(),
            });
        }
        Self::new(l - SYSTEMATIC_PERIOD - d2, d2)
    }

    pub fn from_rate(r: Rational, d2: usize) -> Result<Self> {
        Self::from_length(length_for_rate(r)?, d2)
    }

    pub fn with_block_len(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Transmitted bits per 200 information bits.
    pub fn length(&self) -> usize {
        self.d0 + self.d1 + self.d2
    }

    pub fn rho0(&self) -> Rational {
        Rational::new(self.d0 as i64, SYSTEMATIC_PERIOD as i64)
    }

    pub fn rho1(&self) -> Rational {
        Rational::new(self.d1 as i64, UPPER_PERIOD as i64)
    }

    pub fn rho2(&self) -> Rational {
        Rational::new(self.d2 as i64, LOWER_PERIOD as i64)
    }

    /// Exact rate `200 / L`.
    pub fn rate(&self) -> Rational {
        Rational::new(SYSTEMATIC_PERIOD as i64, self.length() as i64)
    }

    pub fn rate_f64(&self) -> f64 {
        SYSTEMATIC_PERIOD as f64 / self.length() as f64
    }

    /// Interleaver length `3K/2` when `K` is even.
    pub fn interleaver_len(&self) -> usize {
        self.k + self.k.div_ceil(2)
    }
}

impl fmt::Display for CodeDimensions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D=[{}, {}, {}] L={} R={} K={}",
            self.d0,
            self.d1,
            self.d2,
            self.length(),
            self.rate(),
            self.k
        )
    }
}
