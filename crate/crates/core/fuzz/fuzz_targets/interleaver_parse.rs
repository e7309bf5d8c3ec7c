#![no_main]

use libfuzzer_sys::fuzz_target;
use rcsccc::interleaving::Interleaver;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(il) = Interleaver::parse(text) {
        let frame: Vec<usize> = (0..il.len()).collect();
        let back = il.inverse_permute(&il.permute(&frame).unwrap()).unwrap();
        assert_eq!(back, frame);
        assert_eq!(Interleaver::parse(&il.to_text()).unwrap(), il);
    }
});
