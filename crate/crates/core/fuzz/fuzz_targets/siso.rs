#![no_main]

//! Runs the BCJR on arbitrary priors; outputs must match the input sizes
//! and stay finite for finite inputs.

use libfuzzer_sys::fuzz_target;
use rcsccc::convcode::{ConvCodeSpec, EndState, SisoAlgorithm, Trellis};

fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let spec = if sel & 1 == 0 {
        ConvCodeSpec::cc_1_5_7()
    } else {
        ConvCodeSpec::cc_5_7()
    };
    let trellis = Trellis::new(&spec).unwrap();
    let n_out = trellis.n_outputs();
    let values: Vec<f64> = rest
        .iter()
        .map(|&b| (f64::from(b) - 128.0) / 8.0)
        .collect();
    let steps = values.len() / (1 + n_out);
    if steps == 0 {
        return;
    }
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
    assert_eq!(out.app_in.len(), steps);
    assert_eq!(out.extrinsic_out.len(), steps * n_out);
    assert!(out.app_in.iter().all(|x| x.is_finite()));
});
