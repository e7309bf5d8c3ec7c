#![no_main]

use libfuzzer_sys::fuzz_target;
use rcsccc::puncturing::RateCompatibleTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = RateCompatibleTable::parse(text) {
        let back = RateCompatibleTable::parse(&table.to_text()).expect("printed table parses");
        assert_eq!(back, table);
        for kept in 0..=table.len().min(table.period()) {
            let _ = table.pattern_keeping(kept);
        }
    }
});
