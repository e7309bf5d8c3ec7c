#![no_main]

use libfuzzer_sys::fuzz_target;
use rcsccc::sccc::FrameDump;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(dump) = FrameDump::from_json(text) {
        let _ = dump.validate();
    }
});
