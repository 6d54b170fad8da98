#![no_main]

use evoweights::harness::read_hypervolume_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_hypervolume_csv(data);
});
