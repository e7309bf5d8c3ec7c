#![no_main]

use libfuzzer_sys::fuzz_target;
use rcsccc::optimizer::SearchLog;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(log) = SearchLog::from_json(text) {
        let _ = log.table();
    }
});
