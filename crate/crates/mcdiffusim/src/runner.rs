//! Parallel simulation. Molecules are processed in fixed blocks and the
//! outcomes re-joined in molecule order, so results do not depend on the
//! thread count.

use mcdiff_core::particle::{
    coupled_results, simulate_molecule, simulate_molecule_coupled, SimConfig, SimResult,
};
use mcdiff_core::Scenario;
use rayon::prelude::*;

use crate::error::Result;

const BLOCK: u64 = 1024;

fn blocks(n: u64) -> impl IndexedParallelIterator<Item = std::ops::Range<u64>> {
    let count = n.div_ceil(BLOCK) as usize;
    (0..count).into_par_iter().map(move |b| {
        let b = b as u64;
        b * BLOCK..((b + 1) * BLOCK).min(n)
    })
}

pub fn simulate(scenario: &Scenario, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let n = config.molecule_count(scenario);
    let outcomes: Vec<Vec<_>> = blocks(n)
        .map(|range| {
            range
                .map(|i| (i, simulate_molecule(scenario, config, i)))
                .collect()
        })
        .collect();
    Ok(SimResult::from_outcomes(
        scenario,
        config,
        outcomes.into_iter().flatten(),
    ))
}

/// Fine run at `config.dt` and coarse run at `factor * config.dt` on shared
/// Brownian paths.
pub fn simulate_coupled(
    scenario: &Scenario,
    config: &SimConfig,
    factor: u64,
) -> Result<(SimResult, SimResult)> {
    config.validate()?;
    let n = config.molecule_count(scenario);
    let outcomes: Vec<_> = blocks(n)
        .map(|range| {
            range
                .map(|i| simulate_molecule_coupled(scenario, config, factor, i))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(coupled_results(scenario, config, factor, &outcomes))
}

/// Run `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
    }
}
