#![no_main]

use evoweights::ga::{read_archive_jsonl, write_archive_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(entries) = read_archive_jsonl(data) {
        let mut buf = Vec::new();
        write_archive_jsonl(&mut buf, &entries).expect("write to memory");
        assert_eq!(
            read_archive_jsonl(buf.as_slice()).expect("round trip"),
            entries
        );
    }
});
