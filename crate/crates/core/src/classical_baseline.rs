//! Classical heuristic: query uniformly random tours (with replacement).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{tour_cost, tour_from_index, TourIndex, TourSet, TspInstance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryLog {
    pub queries: u64,
    pub best_cost: f64,
    pub best_tour: TourIndex,
    pub found: bool,
}

struct Sampler<'a> {
    inst: &'a TspInstance,
    rng: ChaCha8Rng,
    tours: usize,
    log: QueryLog,
}

impl<'a> Sampler<'a> {
    fn new(inst: &'a TspInstance, seed: u64) -> Self {
        Sampler {
            inst,
            rng: ChaCha8Rng::seed_from_u64(seed),
            tours: inst.tour_count(),
            log: QueryLog {
                queries: 0,
                best_cost: f64::INFINITY,
                best_tour: TourIndex(0),
                found: false,
            },
        }
    }

    /// Draws one tour and queries its cost.
    fn query(&mut self) -> Result<TourIndex> {
        let idx = TourIndex(self.rng.gen_range(0..self.tours));
        let cost = tour_cost(self.inst, &tour_from_index(idx, self.inst.n())?);
        self.log.queries += 1;
        if cost < self.log.best_cost {
            self.log.best_cost = cost;
            self.log.best_tour = idx;
        }
        Ok(idx)
    }
}

/// Queries random tours until one lands in `target` or `max_queries` is
/// spent.
pub fn random_search(
    inst: &TspInstance,
    target: &TourSet,
    max_queries: u64,
    seed: u64,
) -> Result<QueryLog> {
    if target.is_empty() {
        return Err(Error::invalid("target", "solution set is empty"));
    }
    if target.universe() != inst.tour_count() {
        return Err(Error::invalid(
            "target",
            format!(
                "covers {} tours, instance has {}",
                target.universe(),
                inst.tour_count()
            ),
        ));
    }
    if max_queries == 0 {
        return Err(Error::invalid("max_queries", "must be >= 1"));
    }
    let mut s = Sampler::new(inst, seed);
    while s.log.queries < max_queries {
        let idx = s.query()?;
        if target.contains(idx.0) {
            s.log.found = true;
            break;
        }
    }
    Ok(s.log)
}

/// Queries exactly `k` random tours and keeps the cheapest. `found` is set
/// once any tour has been seen.
pub fn best_of_k(inst: &TspInstance, k: u64, seed: u64) -> Result<QueryLog> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let mut s = Sampler::new(inst, seed);
    for _ in 0..k {
        s.query()?;
    }
    s.log.found = true;
    Ok(s.log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub seed: u64,
    pub log: QueryLog,
}

/// `random_search` repeated with seeds `base_seed, base_seed + 1, ...`.
/// Trials run in parallel; the result is in seed order.
pub fn run_trials(
    inst: &TspInstance,
    target: &TourSet,
    trials: usize,
    max_queries: u64,
    base_seed: u64,
) -> Result<Vec<Trial>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            random_search(inst, target, max_queries, seed).map(|log| Trial { seed, log })
        })
        .collect()
}

pub fn mean_queries(trials: &[Trial]) -> f64 {
    if trials.is_empty() {
        return f64::NAN;
    }
    trials.iter().map(|t| t.log.queries as f64).sum::<f64>() / trials.len() as f64
}

pub fn trials_csv(trials: &[Trial]) -> String {
    let mut out = String::from("seed,queries,found,best_cost\n");
    for t in trials {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t.seed, t.log.queries, t.log.found, t.log.best_cost
        );
    }
    out
}
