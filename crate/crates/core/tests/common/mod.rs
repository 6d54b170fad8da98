use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;

use evoweights::seed;

pub const SCHEMA: &str =
    r#"{"target_column":"y","favorable_label":"yes","sensitive_columns":["sex"]}"#;

/// A small biased dataset: label driven by `a` and `b`, with positives in the
/// `f` group flipped to negative a fifth of the time.
pub fn biased_csv(n: usize, seed_value: u64) -> String {
    let mut rng = seed::rng(seed_value);
    let mut s = String::from("a,b,sex,y\n");
    for _ in 0..n {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let female = rng.random_bool(0.5);
        let noise: f64 = rng.random_range(-0.5..0.5);
        let mut y = a + 0.5 * b + noise > 0.0;
        if female && y && rng.random_bool(0.2) {
            y = false;
        }
        let _ = writeln!(
            s,
            "{a:.4},{b:.4},{},{}",
            if female { "f" } else { "m" },
            if y { "yes" } else { "no" }
        );
    }
    s
}

/// Writes `data.csv` and `schema.json` into `dir`.
pub fn write_inputs(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let data = dir.join("data.csv");
    let schema = dir.join("schema.json");
    std::fs::write(&data, biased_csv(n, 99)).unwrap();
    std::fs::write(&schema, SCHEMA).unwrap();
    (data, schema)
}
