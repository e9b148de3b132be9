//! Shared fixtures for the benchmarks.

use obata_lab::scenario::{build_space, lookup, Parameters};
use obata_lab::{ModelSpace, Point};

/// Seed used for every fixture sample.
pub const SEED: u64 = 0xBE_7C4;

/// A registered scenario's space with its defaults.
pub fn space(name: &str) -> ModelSpace {
    let entry = lookup(name).unwrap_or_else(|| panic!("unknown scenario {name}"));
    build_space(entry, &Parameters::default()).expect("registered scenarios build")
}

/// The space together with `count` seeded admissible points.
pub fn fixture(name: &str, count: usize) -> (ModelSpace, Vec<Point>) {
    let s = space(name);
    let pts = s.sample_points(count, SEED).expect("sampling");
    (s, pts)
}
