//! Scenario builders shared by the consensus and acceptance tests.

#![allow(dead_code)]

use asymtrust::consensus::{Scenario, Strategy, Variant};
use asymtrust::fixtures::seven_process;
use asymtrust::quorums::{threshold_system, AsymFailProneSystem};
use asymtrust::{Bit, ProcessSet};

pub struct BatchConfig {
    pub name: &'static str,
    pub af: AsymFailProneSystem,
    pub faulty: ProcessSet,
}

/// The three systems of the correctness batches with their faulty sets.
pub fn batch_configs() -> Vec<BatchConfig> {
    vec![
        BatchConfig {
            name: "t41",
            af: threshold_system(4, 1).unwrap(),
            faulty: ProcessSet::from_indices(4, [3]),
        },
        BatchConfig {
            name: "t72",
            af: threshold_system(7, 2).unwrap(),
            faulty: ProcessSet::from_indices(7, [5, 6]),
        },
        BatchConfig {
            name: "seven_process",
            af: seven_process(),
            faulty: ProcessSet::from_indices(7, [3, 4]),
        },
    ]
}

pub fn named_config(name: &str) -> BatchConfig {
    batch_configs()
        .into_iter()
        .find(|c| c.name == name)
        .unwrap()
}

/// Mixed inputs derived from the seed.
pub fn mixed_inputs(n: usize, seed: u64) -> Vec<Bit> {
    (0..n)
        .map(|i| {
            Bit::from_bool((seed >> (i % 8)) & 1 == 1 || (seed * 7 + i as u64).is_multiple_of(3))
        })
        .collect()
}

pub fn scenario(cfg: &BatchConfig, strategy: Strategy, seed: u64) -> Scenario {
    let inputs = mixed_inputs(cfg.af.n(), seed);
    Scenario::new(cfg.name, cfg.af.clone(), cfg.faulty, inputs, Variant::Fixed)
        .unwrap()
        .with_strategy(strategy)
}

/// Deal seed paired with a scheduler seed in the batches.
pub fn deal_seed(seed: u64) -> u64 {
    seed + 99
}
