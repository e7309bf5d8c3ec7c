#![no_main]

//! Decodes arbitrary channel LLRs with a small code; must not panic.

use libfuzzer_sys::fuzz_target;
use rcsccc::convcode::LlrFrame;
use rcsccc::interleaving::Interleaver;
use rcsccc::puncturing::PuncturePattern;
use rcsccc::sccc::{DecodeOptions, ScccConfig, Termination};

fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let termination = if sel & 1 == 0 {
        Termination::UpperZeroTail
    } else {
        Termination::Truncated
    };
    let cfg = ScccConfig::new(
        16,
        PuncturePattern::from_zeros(100, &[1, 3]).unwrap(),
        PuncturePattern::from_zeros(300, &[0, 4, 7]).unwrap(),
        Interleaver::random(24, u64::from(sel)).unwrap(),
        termination,
    )
    .unwrap();
    let llr: Vec<f64> = rest
        .chunks(4)
        .map(|c| {
            let mut b = [0u8; 4];
            b[..c.len()].copy_from_slice(c);
            f64::from(f32::from_le_bytes(b))
        })
        .collect();
    let frame = LlrFrame::from(llr);
    let iterations = usize::from(sel >> 1) % 6 + 1;
    if let Ok(res) = cfg.decode(&frame, &DecodeOptions::iterations(iterations)) {
        assert_eq!(res.bits.len(), cfg.info_len());
    }
});
