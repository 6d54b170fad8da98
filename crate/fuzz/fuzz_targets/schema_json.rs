#![no_main]

use evoweights::dataset::DatasetSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = DatasetSchema::from_json_str(s);
    }
});
