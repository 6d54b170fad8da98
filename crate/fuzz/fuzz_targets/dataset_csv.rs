#![no_main]

use evoweights::dataset::{build_group_index, parse_csv, DatasetSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let schema = DatasetSchema::new("y", "1", vec!["s".to_string()]);
    if let Ok(ds) = parse_csv(data, &schema) {
        // Anything accepted must index cleanly.
        let gi = build_group_index(&ds);
        assert_eq!(gi.group_of_row().len(), ds.n_rows());
    }
});
