//! Greedy construction of the rate-compatible puncturing tables.
//!
//! Bits are punctured one at a time. At each step every position not yet
//! punctured is tried, the resulting code is scored, and the best candidate is
//! appended to the table; earlier choices stay fixed, so every prefix of the
//! table defines a nested keep-set.
//!
//! The score of a candidate is the joint union bound of the concatenation at
//! a reference Eb/N0, computed over one 200-bit normalization block with
//! truncated enumerators. The lower table is searched with the upper parity
//! fully punctured (d1 = 0), the upper table with the lower parity fully
//! transmitted (d2 = 300). Ties are broken by larger minimum distance, then
//! smaller multiplicity at that distance, then smaller candidate index.

use crate::error::{Error, Result};
use crate::puncturing::{
    CodeDimensions, PuncturePattern, RateCompatibleTable, TableCode, LOWER_PERIOD,
    SYSTEMATIC_PERIOD, UPPER_PERIOD,
};
use crate::sccc::{CodeFamily, Termination};
use crate::wef::{enumerate_lower, enumerate_upper, BitErrorSpectrum, LowerWef, UpperWef, WefLimits};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Default reference Eb/N0 of the score in dB.
pub const DEFAULT_REF_SNR_DB: f64 = 4.0;

/// Search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedySettings {
    /// Enumerator truncation used while scoring.
    pub limits: WefLimits,
    pub ref_snr_db: f64,
    /// Block length of the scored code (one normalization block by default).
    pub k: usize,
    pub termination: Termination,
    /// Stop after this many steps (partial table); `None` orders every position.
    pub max_steps: Option<usize>,
}

impl Default for GreedySettings {
    fn default() -> Self {
        Self {
            limits: WefLimits {
                w_max: 6,
                h_max: 24,
                l_max: 24,
            },
            ref_snr_db: DEFAULT_REF_SNR_DB,
            k: SYSTEMATIC_PERIOD,
            termination: Termination::default(),
            max_steps: None,
        }
    }
}

/// Ordered score of one candidate; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// Union bound at the reference SNR.
    pub bound: f64,
    /// Smallest total transmitted weight with a nonzero coefficient.
    pub d_min: usize,
    /// Bit-error coefficient at `d_min`.
    pub multiplicity: f64,
}

impl Score {
    /// Score of an assembled spectrum.
    pub fn of(spectrum: &BitErrorSpectrum, ref_snr_db: f64) -> Result<Self> {
        let (d_min, multiplicity) = spectrum
            .d_min()
            .ok_or_else(|| Error::Truncation("empty spectrum cannot be scored".into()))?;
        Ok(Self {
            bound: spectrum.bound(ref_snr_db),
            d_min,
            multiplicity,
        })
    }

    /// Bound first, then larger `d_min`, then smaller multiplicity.
    pub fn cmp_quality(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.d_min.cmp(&self.d_min))
            .then(self.multiplicity.total_cmp(&other.multiplicity))
    }
}

/// One scored candidate of a greedy step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub score: Score,
}

/// Full candidate list of one step and the index chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub chosen: usize,
    pub candidates: Vec<Candidate>,
}

/// Result of a search: the table and its per-step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLog {
    pub code: TableCode,
    pub settings: GreedySettings,
    pub steps: Vec<StepLog>,
}

impl SearchLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("search log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Table implied by the chosen indices.
    pub fn table(&self) -> Result<RateCompatibleTable> {
        RateCompatibleTable::new(
            self.code.period(),
            self.code,
            self.steps.iter().map(|s| s.chosen).collect(),
        )
    }
}

/// Best candidate: smallest score, then smallest index.
pub fn select(candidates: &[Candidate]) -> Option<Candidate> {
    candidates.iter().copied().min_by(|a, b| {
        a.score
            .cmp_quality(&b.score)
            .then(a.index.cmp(&b.index))
    })
}

fn normalized_dims(d1: usize, d2: usize, k: usize) -> Result<CodeDimensions> {
    Ok(CodeDimensions::new(d1, d2)?.with_block_len(k))
}

/// Score of a lower pattern against a fixed upper enumerator.
pub fn score_lower(
    upper: &UpperWef,
    pattern: &PuncturePattern,
    d1: usize,
    settings: &GreedySettings,
) -> Result<Score> {
    let dims = normalized_dims(d1, pattern.weight(), settings.k)?;
    let lower = enumerate_lower(
        pattern,
        dims.interleaver_len(),
        settings.limits.l_max,
        settings.limits.h_max,
    )?;
    Score::of(&BitErrorSpectrum::assemble(upper, &lower, dims.rate_f64())?, settings.ref_snr_db)
}

/// Score of an upper pattern against a fixed lower enumerator.
pub fn score_upper(
    lower: &LowerWef,
    pattern: &PuncturePattern,
    d2: usize,
    settings: &GreedySettings,
) -> Result<Score> {
    let dims = normalized_dims(pattern.weight(), d2, settings.k)?;
    let upper = enumerate_upper(pattern, settings.k, settings.termination, settings.limits)?;
    Score::of(&BitErrorSpectrum::assemble(&upper, lower, dims.rate_f64())?, settings.ref_snr_db)
}

fn greedy<F>(code: TableCode, settings: &GreedySettings, score: F) -> Result<SearchLog>
where
    F: Fn(&PuncturePattern) -> Result<Score> + Sync,
{
    let np = code.period();
    let steps = settings.max_steps.unwrap_or(np).min(np);
    let mut chosen: Vec<usize> = Vec::with_capacity(steps);
    let mut punctured = vec![false; np];
    let mut log = Vec::with_capacity(steps);
    for step in 0..steps {
        let remaining: Vec<usize> = (0..np).filter(|&i| !punctured[i]).collect();
        let candidates: Vec<Candidate> = remaining
            .par_iter()
            .map(|&index| {
                let mut zeros = chosen.clone();
                zeros.push(index);
                let pattern = PuncturePattern::from_zeros(np, &zeros)?;
                Ok(Candidate {
                    index,
                    score: score(&pattern)?,
                })
            })
            .collect::<Result<_>>()?;
        let best = select(&candidates).expect("at least one candidate remains");
        punctured[best.index] = true;
        chosen.push(best.index);
        log.push(StepLog {
            step,
            chosen: best.index,
            candidates,
        });
    }
    Ok(SearchLog {
        code,
        settings: *settings,
        steps: log,
    })
}

/// Upper enumerator with every upper parity bit punctured (d1 = 0).
pub fn reference_upper(settings: &GreedySettings) -> Result<UpperWef> {
    let none = PuncturePattern::from_zeros(UPPER_PERIOD, &(0..UPPER_PERIOD).collect::<Vec<_>>())?;
    enumerate_upper(&none, settings.k, settings.termination, settings.limits)
}

/// Lower enumerator with every lower parity bit transmitted (d2 = 300).
pub fn reference_lower(settings: &GreedySettings) -> Result<LowerWef> {
    let n = normalized_dims(0, LOWER_PERIOD, settings.k)?.interleaver_len();
    enumerate_lower(
        &PuncturePattern::all_ones(LOWER_PERIOD),
        n,
        settings.limits.l_max,
        settings.limits.h_max,
    )
}

/// Greedy order of the 300 lower-parity positions.
pub fn greedy_lower_table(settings: &GreedySettings) -> Result<SearchLog> {
    let upper = reference_upper(settings)?;
    greedy(TableCode::Lower, settings, |p| score_lower(&upper, p, 0, settings))
}

/// Greedy order of the 100 upper-parity positions.
pub fn greedy_upper_table(settings: &GreedySettings) -> Result<SearchLog> {
    let lower = reference_lower(settings)?;
    greedy(TableCode::Upper, settings, |p| score_upper(&lower, p, LOWER_PERIOD, settings))
}

/// Re-scores step `step` of a log and checks both the recorded scores and
/// that the chosen candidate is no worse than any rejected one.
pub fn audit_step(log: &SearchLog, step: usize) -> Result<()> {
    let entry = log
        .steps
        .get(step)
        .ok_or_else(|| Error::Domain(format!("log has no step {step}")))?;
    let prefix: Vec<usize> = log.steps[..step].iter().map(|s| s.chosen).collect();
    let settings = &log.settings;
    let np = log.code.period();
    let fixed_upper = match log.code {
        TableCode::Lower => Some(reference_upper(settings)?),
        TableCode::Upper => None,
    };
    let fixed_lower = match log.code {
        TableCode::Upper => Some(reference_lower(settings)?),
        TableCode::Lower => None,
    };
    let chosen = entry
        .candidates
        .iter()
        .find(|c| c.index == entry.chosen)
        .ok_or_else(|| Error::Domain("chosen index missing from candidates".into()))?;
    for c in &entry.candidates {
        let mut zeros = prefix.clone();
        zeros.push(c.index);
        let p = PuncturePattern::from_zeros(np, &zeros)?;
        let s = match (&fixed_upper, &fixed_lower) {
            (Some(u), _) => score_lower(u, &p, 0, settings)?,
            (_, Some(l)) => score_upper(l, &p, LOWER_PERIOD, settings)?,
            _ => unreachable!(),
        };
        if s != c.score {
            return Err(Error::Domain(format!(
                "step {step}: candidate {} re-scores differently",
                c.index
            )));
        }
        if c.score.cmp_quality(&chosen.score) == Ordering::Less {
            return Err(Error::Domain(format!(
                "step {step}: rejected candidate {} beats the chosen {}",
                c.index, entry.chosen
            )));
        }
    }
    Ok(())
}

/// Both regenerated tables shipped with the crate.
pub fn default_tables() -> (RateCompatibleTable, RateCompatibleTable) {
    let upper = RateCompatibleTable::parse(include_str!("../data/upper_table.txt"))
        .expect("shipped upper table parses");
    let lower = RateCompatibleTable::parse(include_str!("../data/lower_table.txt"))
        .expect("shipped lower table parses");
    (upper, lower)
}

/// Family built from the shipped tables at block length `k`.
pub fn default_family(k: usize) -> CodeFamily {
    let (upper, lower) = default_tables();
    CodeFamily::new(upper, lower, k).expect("shipped tables form a family")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GreedySettings {
        GreedySettings {
            limits: WefLimits::new(3, 10, 10).unwrap(),
            max_steps: Some(3),
            ..GreedySettings::default()
        }
    }

    fn score(bound: f64, d_min: usize, multiplicity: f64) -> Score {
        Score {
            bound,
            d_min,
            multiplicity,
        }
    }

    #[test]
    fn larger_minimum_distance_breaks_bound_ties() {
        let a = Candidate { index: 5, score: score(1e-3, 7, 2.0) };
        let b = Candidate { index: 1, score: score(1e-3, 6, 2.0) };
        assert_eq!(select(&[a, b]).unwrap().index, 5);
    }

    #[test]
    fn smaller_multiplicity_breaks_distance_ties() {
        let a = Candidate { index: 2, score: score(1e-3, 6, 7.0) };
        let b = Candidate { index: 9, score: score(1e-3, 6, 3.0) };
        assert_eq!(select(&[a, b]).unwrap().index, 9);
        let c = Candidate { index: 0, score: score(1e-3, 6, 3.0) };
        assert_eq!(select(&[a, b, c]).unwrap().index, 0);
    }

    #[test]
    fn steps_try_every_remaining_position() {
        let log = greedy_lower_table(&small()).unwrap();
        assert_eq!(log.steps[0].candidates.len(), 300);
        assert_eq!(log.steps[1].candidates.len(), 299);
        assert_eq!(log.steps[2].candidates.len(), 298);
        let up = greedy_upper_table(&small()).unwrap();
        assert_eq!(up.steps[0].candidates.len(), 100);
    }

    #[test]
    fn log_round_trips_and_audits() {
        let log = greedy_lower_table(&small()).unwrap();
        let back = SearchLog::from_json(&log.to_json()).unwrap();
        assert_eq!(back, log);
        for step in 0..3 {
            audit_step(&log, step).unwrap();
        }
        let table = log.table().unwrap();
        assert_eq!(table.len(), 3);
    }

    #[test]
    fn tampered_log_fails_audit() {
        let mut log = greedy_upper_table(&small()).unwrap();
        let worst = log.steps[1]
            .candidates
            .iter()
            .max_by(|a, b| a.score.cmp_quality(&b.score))
            .unwrap()
            .index;
        log.steps[1].chosen = worst;
        assert!(audit_step(&log, 1).is_err());
    }

    #[test]
    fn search_is_deterministic() {
        let a = greedy_upper_table(&small()).unwrap();
        let b = greedy_upper_table(&small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shipped_tables_are_full_permutations() {
        let (u, l) = default_tables();
        assert!(u.is_full() && l.is_full());
        assert_eq!(u.code(), TableCode::Upper);
        assert_eq!(l.code(), TableCode::Lower);
    }
}
