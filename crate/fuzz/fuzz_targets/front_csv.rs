#![no_main]

use evoweights::pareto::read_front_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_front_csv(data);
});
