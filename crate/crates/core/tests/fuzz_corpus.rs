//! Replays the checked-in fuzz seeds through the parsers and decoders so
//! that regressions show up without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use rcsccc::convcode::{ConvCodeSpec, EndState, LlrFrame, SisoAlgorithm, Trellis};
use rcsccc::interleaving::Interleaver;
use rcsccc::optimizer::SearchLog;
use rcsccc::puncturing::{PuncturePattern, RateCompatibleTable};
use rcsccc::sccc::{DecodeOptions, FrameDump, ScccConfig, Termination};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty(), "no seeds for {target}");
    out.sort();
    out
}

fn text(seed: &[u8]) -> &str {
    std::str::from_utf8(seed).expect("text seed")
}

#[test]
fn table_seeds_parse_and_round_trip() {
    for s in seeds("table_parse") {
        let table = RateCompatibleTable::parse(text(&s)).unwrap();
        assert_eq!(RateCompatibleTable::parse(&table.to_text()).unwrap(), table);
    }
}

#[test]
fn interleaver_seeds_parse_and_round_trip() {
    for s in seeds("interleaver_parse") {
        let il = Interleaver::parse(text(&s)).unwrap();
        assert_eq!(Interleaver::parse(&il.to_text()).unwrap(), il);
    }
}

#[test]
fn frame_dump_seeds_validate() {
    for s in seeds("frame_dump_json") {
        FrameDump::from_json(text(&s)).unwrap().validate().unwrap();
    }
}

#[test]
fn search_log_seeds_give_tables() {
    for s in seeds("search_log_json") {
        SearchLog::from_json(text(&s)).unwrap().table().unwrap();
    }
}

#[test]
fn decoder_survives_seeds() {
    for s in seeds("decode") {
        let (&sel, rest) = s.split_first().unwrap();
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
        let iterations = usize::from(sel >> 1) % 6 + 1;
        if let Ok(res) = cfg.decode(&LlrFrame::from(llr), &DecodeOptions::iterations(iterations)) {
            assert_eq!(res.bits.len(), cfg.info_len());
        }
    }
}

#[test]
fn siso_survives_seeds() {
    for s in seeds("siso") {
        let (&sel, rest) = s.split_first().unwrap();
        let spec = if sel & 1 == 0 {
            ConvCodeSpec::cc_1_5_7()
        } else {
            ConvCodeSpec::cc_5_7()
        };
        let trellis = Trellis::new(&spec).unwrap();
        let n_out = trellis.n_outputs();
        let values: Vec<f64> = rest.iter().map(|&b| (f64::from(b) - 128.0) / 8.0).collect();
        let steps = values.len() / (1 + n_out);
        let (prior_in, prior_out) = values[..steps * (1 + n_out)].split_at(steps);
        let end = if sel & 2 == 0 {
            EndState::Uniform
        } else {
            EndState::Known(0)
        };
        let algo = if sel & 4 == 0 {
            SisoAlgorithm::LogMap
        } else {
            SisoAlgorithm::MaxLogMap
        };
        let out = trellis.siso(prior_in, prior_out, 0, end, algo).unwrap();
        assert!(out.app_in.iter().all(|x| x.is_finite()));
    }
}
