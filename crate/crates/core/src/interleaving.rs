//! Permutations between the upper codeword `v` and the lower input `z`.
//!
//! Convention: `permute(frame)[i] = frame[perm[i]]`.

use crate::error::{check_len, Error, Result};
use crate::puncturing::parse_header;
use crate::rng::rng_from_seed;
use rand::seq::SliceRandom;
use std::fmt;

pub const DEFAULT_MAX_RESTARTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterleaverKind {
    Random,
    SRandom { s: usize },
    /// Loaded from a file or built from an explicit permutation.
    Explicit,
}

impl fmt::Display for InterleaverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterleaverKind::Random => f.write_str("random"),
            InterleaverKind::SRandom { s } => write!(f, "s_random({s})"),
            InterleaverKind::Explicit => f.write_str("explicit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    kind: InterleaverKind,
    seed: u64,
}

impl Interleaver {
    /// Wraps an explicit permutation after checking bijectivity.
    pub fn from_perm(perm: Vec<usize>, kind: InterleaverKind, seed: u64) -> Result<Self> {
        if perm.is_empty() {
            return Err(Error::Domain("interleaver length must be at least 1".into()));
        }
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::Domain(format!("not a permutation of 0..{n}: entry {p}")));
            }
            seen[p] = true;
        }
        Ok(Self { perm, kind, seed })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            kind: InterleaverKind::Explicit,
            seed: 0,
        }
    }

    /// Uniform random permutation (Fisher-Yates over the seeded stream).
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("interleaver length must be at least 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        Ok(Self {
            perm,
            kind: InterleaverKind::Random,
            seed,
        })
    }

    /// S-random permutation by randomized greedy insertion with full restarts.
    ///
    /// A dead end is first repaired by a single swap with an earlier slot;
    /// only when no swap exists does the construction restart.
    pub fn s_random(n: usize, s: usize, seed: u64, max_restarts: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("interleaver length must be at least 1".into()));
        }
        if s >= n && n > 1 {
            return Err(Error::Construction(format!(
                "spread S = {s} impossible for length {n}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        for _ in 0..=max_restarts {
            let mut pool: Vec<usize> = (0..n).collect();
            pool.shuffle(&mut rng);
            let mut perm = Vec::with_capacity(n);
            'place: while !pool.is_empty() {
                let i = perm.len();
                let window = &perm[i.saturating_sub(s)..i];
                for (idx, &c) in pool.iter().enumerate() {
                    if window.iter().all(|&p: &usize| p.abs_diff(c) > s) {
                        perm.push(c);
                        pool.remove(idx);
                        continue 'place;
                    }
                }
                // Dead end: swap a pool value into an earlier slot whose
                // previous occupant fits at the end.
                if let Some((idx, j)) = find_swap(&perm, &pool, s) {
                    let c = pool.remove(idx);
                    let old = std::mem::replace(&mut perm[j], c);
                    perm.push(old);
                    continue 'place;
                }
                break;
            }
            if perm.len() == n {
                return Ok(Self {
                    perm,
                    kind: InterleaverKind::SRandom { s },
                    seed,
                });
            }
        }
        Err(Error::Construction(format!(
            "no S-random permutation with S = {s}, N = {n} after {max_restarts} restarts"
        )))
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn kind(&self) -> InterleaverKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Checks `|perm(i) - perm(j)| > s` for every pair with `0 < |i - j| <= s`.
    pub fn satisfies_spread(&self, s: usize) -> bool {
        let n = self.perm.len();
        (0..n).all(|i| {
            (i + 1..n.min(i + s + 1)).all(|j| self.perm[i].abs_diff(self.perm[j]) > s)
        })
    }

    pub fn permute<T: Copy>(&self, frame: &[T]) -> Result<Vec<T>> {
        check_len("interleaver input", self.perm.len(), frame.len())?;
        Ok(self.perm.iter().map(|&p| frame[p]).collect())
    }

    pub fn inverse_permute<T: Copy + Default>(&self, frame: &[T]) -> Result<Vec<T>> {
        check_len("deinterleaver input", self.perm.len(), frame.len())?;
        let mut out = vec![T::default(); frame.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = frame[i];
        }
        Ok(out)
    }

    /// `# n=<N> kind=<...> seed=<...>` header, then one index per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# n={} kind={} seed={}\n",
            self.perm.len(),
            self.kind,
            self.seed
        );
        for p in &self.perm {
            s.push_str(&p.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty interleaver file".into(),
        })?;
        let bad = |msg: String| Error::Parse { line: 1, msg };
        let mut n = None;
        let mut kind = None;
        let mut seed = None;
        for (key, value) in parse_header(header, 1)? {
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad(format!("bad n '{value}'")))?),
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|_| bad(format!("bad seed '{value}'")))?)
                }
                "kind" => kind = Some(parse_kind(value).ok_or_else(|| bad(format!("bad kind '{value}'")))?),
                _ => return Err(bad(format!("unknown header field '{key}'"))),
            }
        }
        let n = n.ok_or_else(|| bad("missing n".into()))?;
        let kind = kind.ok_or_else(|| bad("missing kind".into()))?;
        let seed = seed.ok_or_else(|| bad("missing seed".into()))?;
        let mut perm = Vec::new();
        for (i, line) in lines {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            perm.push(t.parse::<usize>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("'{t}' is not an index"),
            })?);
        }
        if perm.len() != n {
            return Err(bad(format!("header says n={n}, file has {} entries", perm.len())));
        }
        let ilv = Self::from_perm(perm, kind, seed).map_err(|e| bad(e.to_string()))?;
        if let InterleaverKind::SRandom { s } = kind {
            if !ilv.satisfies_spread(s) {
                return Err(bad(format!("permutation violates spread S = {s}")));
            }
        }
        Ok(ilv)
    }
}

/// Finds `(pool index, slot)` such that the pool value fits in the slot and
/// the slot's current value fits at the next free position.
fn find_swap(perm: &[usize], pool: &[usize], s: usize) -> Option<(usize, usize)> {
    let i = perm.len();
    let fits = |slot: usize, value: usize| {
        let lo = slot.saturating_sub(s);
        let hi = (slot + s + 1).min(i);
        (lo..hi).filter(|&k| k != slot).all(|k| perm[k].abs_diff(value) > s)
    };
    for (idx, &c) in pool.iter().enumerate() {
        for j in (0..i).rev() {
            if fits(j, c) {
                let tail_ok = (i.saturating_sub(s)..i).all(|k| {
                    let other = if k == j { c } else { perm[k] };
                    other.abs_diff(perm[j]) > s
                });
                if tail_ok {
                    return Some((idx, j));
                }
            }
        }
    }
    None
}

fn parse_kind(v: &str) -> Option<InterleaverKind> {
    match v {
        "random" => Some(InterleaverKind::Random),
        "explicit" => Some(InterleaverKind::Explicit),
        _ => {
            let s = v.strip_prefix("s_random(")?.strip_suffix(')')?;
            Some(InterleaverKind::SRandom { s: s.parse().ok()? })
        }
    }
}
