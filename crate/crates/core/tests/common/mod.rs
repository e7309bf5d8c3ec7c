//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcsccc::interleaving::Interleaver;
use rcsccc::puncturing::PuncturePattern;
use rcsccc::sccc::{ScccConfig, Termination};

/// Shift-register CC(1,5/7): feedback 1 + D + D^2, feedforward 1 + D^2.
pub fn rsc(input: &[u8]) -> Vec<(u8, u8)> {
    let (mut s1, mut s2) = (0u8, 0u8);
    input
        .iter()
        .map(|&b| {
            let w = b ^ s1 ^ s2;
            let p = w ^ s2;
            s2 = s1;
            s1 = w;
            (b, p)
        })
        .collect()
}

/// Position in the classical outer codeword `[u0 p0 u1 | u2 p2 u3 | ...]`
/// of entry `i` of `v = [u | p0 p2 p4 ...]`.
pub fn classical_index(i: usize, k: usize) -> usize {
    if i < k {
        let t = i;
        if t % 2 == 0 {
            3 * t / 2
        } else {
            3 * (t - 1) / 2 + 2
        }
    } else {
        3 * (i - k) + 1
    }
}

pub struct Classical {
    pub systematic_kept: Vec<u8>,
    pub systematic_positions: Vec<usize>,
    pub parity_kept: Vec<u8>,
    pub z: Vec<u8>,
}

pub fn classical_encode(
    u: &[u8],
    inner_perm: &[usize],
    keep_sys: &[bool],
    p2: &PuncturePattern,
) -> Classical {
    let outer_pa = [true, true, true, false];
    let outer: Vec<u8> = rsc(u)
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .enumerate()
        .filter(|(i, _)| outer_pa[i % 4])
        .map(|(_, x)| x)
        .collect();
    let z: Vec<u8> = inner_perm.iter().map(|&p| outer[p]).collect();
    let inner = rsc(&z);
    let mut systematic_kept = Vec::new();
    let mut systematic_positions = Vec::new();
    let mut parity_kept = Vec::new();
    for (i, &(s, p)) in inner.iter().enumerate() {
        if keep_sys[i] {
            systematic_kept.push(s);
            systematic_positions.push(i);
        }
        if p2.is_kept(i) {
            parity_kept.push(p);
        }
    }
    Classical {
        systematic_kept,
        systematic_positions,
        parity_kept,
        z,
    }
}

pub fn random_pattern(rng: &mut ChaCha8Rng, np: usize, d: usize) -> PuncturePattern {
    let mut idx: Vec<usize> = (0..np).collect();
    for i in (1..np).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    PuncturePattern::from_zeros(np, &idx[d..]).unwrap()
}

/// Encodes `frames` random frames (K = 400) with random P1, P2 and
/// interleavers in both descriptions and panics on the first mismatch.
pub fn check_encoder_equivalence(frames: u64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 400;
    let n = 600;
    for frame in 0..frames {
        let d1 = rng.random_range(0..=100);
        let d2 = rng.random_range(0..=300);
        let p1 = random_pattern(&mut rng, 100, d1);
        let p2 = random_pattern(&mut rng, 300, d2);
        let ilv = Interleaver::random(n, frame).unwrap();
        let cfg = ScccConfig::new(k, p1.clone(), p2.clone(), ilv.clone(), Termination::Truncated)
            .unwrap();
        let u: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
        let frames = cfg.encode_frames(&u).unwrap();

        // Classical interleaver and systematic puncturer induced by pi, P0 and P1.
        let inner_perm: Vec<usize> = ilv.perm().iter().map(|&p| classical_index(p, k)).collect();
        let keep_sys: Vec<bool> = ilv
            .perm()
            .iter()
            .map(|&p| p < k || p1.is_kept(p - k))
            .collect();
        let c = classical_encode(&u, &inner_perm, &keep_sys, &p2);

        // v and z carry the same bits in both descriptions.
        assert_eq!(c.z, frames.z, "frame {frame}: z differs");
        let mut a = frames.v.clone();
        let mut b = c.z.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);

        // Inner parity after P_b^p is x2.
        assert_eq!(c.parity_kept, frames.codeword.x2, "frame {frame}: x2 differs");

        // Systematic bits kept by P_b^s are exactly x0 and x1, related by pi.
        let cw = &frames.codeword;
        assert_eq!(c.systematic_kept.len(), cw.x0.len() + cw.x1.len());
        let mut x1_index = vec![usize::MAX; k / 2];
        let mut next = 0;
        for (j, slot) in x1_index.iter_mut().enumerate() {
            if p1.is_kept(j) {
                *slot = next;
                next += 1;
            }
        }
        for (&pos, &bit) in c.systematic_positions.iter().zip(&c.systematic_kept) {
            let vi = ilv.perm()[pos];
            let expected = if vi < k { cw.x0[vi] } else { cw.x1[x1_index[vi - k]] };
            assert_eq!(bit, expected);
        }
    }
}
