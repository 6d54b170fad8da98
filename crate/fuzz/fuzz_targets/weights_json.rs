#![no_main]

use evoweights::dataset::{build_group_index, parse_csv, DatasetSchema};
use evoweights::reweight::SlotWeights;
use libfuzzer_sys::fuzz_target;

const DATA: &str = "a,s,y\n1,f,1\n2,f,0\n3,m,1\n4,m,0\n5,f,1\n6,m,0\n7,f,0\n8,m,1\n9,f,1\n10,m,1\n";

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let schema = DatasetSchema::new("y", "1", vec!["s".to_string()]);
    let ds = parse_csv(DATA.as_bytes(), &schema).expect("fixed dataset parses");
    let gi = build_group_index(&ds);
    if let Ok(w) = SlotWeights::from_json(s, &gi) {
        let back = w.to_json(&gi).expect("parsed weights serialize");
        assert_eq!(SlotWeights::from_json(&back, &gi).expect("round trip"), w);
    }
});
