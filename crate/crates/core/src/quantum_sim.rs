//! Full statevector simulation of `G = -I_ψ0 · C` over all tours.
//!
//! One application of `G` is one oracle query; the reflection about the
//! uniform superposition is free.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{tour_cost, tour_from_index, Budget, TourIndex, TourSet, TspInstance};
use crate::phase::{cost_to_phase, discretize_phase, nominal_phase, phasor, PhaseMap};

/// Applications of `G` between renormalizations.
pub const RENORM_INTERVAL: usize = 100;

const PAR_THRESHOLD: usize = 1 << 15;
const REDUCE_CHUNK: usize = 1 << 12;

/// Which phase the oracle imprints on each tour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The tour's own cost phase.
    Continuous,
    /// The nominal phase `jπ/M` of the tour's group.
    Discretized { m: usize },
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Continuous => "continuous".into(),
            Mode::Discretized { m } => format!("discretized(M={m})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        StateVector { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        ordered_sum(&self.amps, |a| a.norm_sqr()).sqrt()
    }

    pub fn probability(&self, idx: usize) -> f64 {
        self.amps[idx].norm_sqr()
    }

    /// Rescales to unit norm and returns the correction `|‖ψ‖ - 1|`.
    pub fn renormalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        (norm - 1.0).abs()
    }
}

/// Sum of `f` over `xs` with a reduction order that does not depend on the
/// number of worker threads.
fn ordered_sum<T: Sync, S>(xs: &[T], f: impl Fn(&T) -> S + Sync) -> S
where
    S: Send + std::iter::Sum<S> + Copy,
{
    if xs.len() < PAR_THRESHOLD {
        return xs.iter().map(&f).sum();
    }
    let partials: Vec<S> = xs
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum())
        .collect();
    partials.into_iter().sum()
}

pub fn init_uniform(n_tours: usize) -> Result<StateVector> {
    init_uniform_with(n_tours, &Budget::default())
}

pub fn init_uniform_with(n_tours: usize, budget: &Budget) -> Result<StateVector> {
    if n_tours == 0 {
        return Err(Error::invalid("N", "need at least one tour"));
    }
    budget.check_state_len(n_tours)?;
    let a = Complex64::new(1.0 / (n_tours as f64).sqrt(), 0.0);
    Ok(StateVector {
        amps: vec![a; n_tours],
    })
}

/// Diagonal oracle `C|T> = e^{iφ(T)}|T>` with its phasors precomputed, and a
/// count of how often it has been applied.
#[derive(Debug, Clone)]
pub struct CostOracle {
    factors: Vec<Complex64>,
    mode: Mode,
    queries: u64,
}

impl CostOracle {
    pub fn new(pm: &PhaseMap, mode: Mode) -> Result<Self> {
        let factors = match mode {
            Mode::Continuous => pm.phases().iter().map(|&p| phasor(p)).collect(),
            Mode::Discretized { m } => {
                if m == 0 {
                    return Err(Error::invalid("M", "must be >= 1"));
                }
                pm.phases()
                    .iter()
                    .map(|&p| phasor(nominal_phase(discretize_phase(p, m), m)))
                    .collect()
            }
        };
        Ok(CostOracle {
            factors,
            mode,
            queries: 0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn apply(&mut self, sv: &mut StateVector) -> Result<()> {
        if sv.len() != self.factors.len() {
            return Err(Error::invalid(
                "phases",
                format!(
                    "oracle covers {} tours, state has {}",
                    self.factors.len(),
                    sv.len()
                ),
            ));
        }
        if sv.len() >= PAR_THRESHOLD {
            sv.amps
                .par_iter_mut()
                .zip(self.factors.par_iter())
                .for_each(|(a, f)| *a *= f);
        } else {
            sv.amps
                .iter_mut()
                .zip(&self.factors)
                .for_each(|(a, f)| *a *= f);
        }
        self.queries += 1;
        Ok(())
    }
}

pub fn apply_cost_oracle(sv: &mut StateVector, oracle: &mut CostOracle) -> Result<()> {
    oracle.apply(sv)
}

/// `-I_ψ0 = 2|ψ0><ψ0| - 1` for the uniform superposition: each amplitude
/// becomes `2·mean - a`.
pub fn reflect_about_uniform(sv: &mut StateVector) {
    let len = sv.len() as f64;
    let mean = ordered_sum(&sv.amps, |a| *a) / len;
    let twice = mean * 2.0;
    if sv.len() >= PAR_THRESHOLD {
        sv.amps.par_iter_mut().for_each(|a| *a = twice - *a);
    } else {
        sv.amps.iter_mut().for_each(|a| *a = twice - *a);
    }
}

/// One generalized Grover step `G = -I_ψ0 C` (one query).
pub fn apply_grover(sv: &mut StateVector, oracle: &mut CostOracle) -> Result<()> {
    oracle.apply(sv)?;
    reflect_about_uniform(sv);
    Ok(())
}

/// Total number of `G` applications for a phase-0 population `f0`.
///
/// Continuous mode uses `round((π/2 - √f0) / (2√f0))`. Discretized mode
/// counts blocks of `G^{2M}`, `round((π/2 - √f0) / (4M√f0))`, so the total
/// is a multiple of `2M`. Counts that round to zero are clamped to one
/// (block); `clamped` reports it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationCount {
    pub total: usize,
    pub clamped: bool,
}

pub fn iteration_count(f0: f64, mode: Mode) -> Result<IterationCount> {
    if !(f0 > 0.0 && f0 < 1.0) {
        return Err(Error::invalid(
            "f0",
            format!("must lie in (0, 1), got {f0}"),
        ));
    }
    let s = f0.sqrt();
    let (inner, block) = match mode {
        Mode::Continuous => (((PI / 2.0 - s) / (2.0 * s)).round(), 1),
        Mode::Discretized { m } => {
            if m == 0 {
                return Err(Error::invalid("M", "must be >= 1"));
            }
            (((PI / 2.0 - s) / (4.0 * m as f64 * s)).round(), 2 * m)
        }
    };
    let clamped = inner < 1.0;
    let blocks = if clamped { 1 } else { inner as usize };
    Ok(IterationCount {
        total: blocks * block,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroverConfig {
    pub mode: Mode,
    pub iterations: usize,
    /// Expected accumulated error, of order `√f0`.
    pub predicted_error: f64,
    /// Solution set: the phase-0 window (continuous) or group 0 (discretized).
    pub target: TourSet,
    pub clamped: bool,
}

impl GroverConfig {
    pub fn new(mode: Mode, iterations: usize, target: TourSet) -> Result<Self> {
        if let Mode::Discretized { m } = mode {
            if m == 0 {
                return Err(Error::invalid("M", "must be >= 1"));
            }
            if iterations % (2 * m) != 0 {
                return Err(Error::invalid(
                    "R",
                    format!("{iterations} is not a multiple of 2M = {}", 2 * m),
                ));
            }
        }
        let f0 = target.fraction();
        Ok(GroverConfig {
            mode,
            iterations,
            predicted_error: f0.sqrt(),
            target,
            clamped: false,
        })
    }

    /// Iteration count taken from [`iteration_count`] with `f0 = |target| / N`.
    pub fn from_target(mode: Mode, target: TourSet) -> Result<Self> {
        let count = iteration_count(target.fraction(), mode)?;
        let mut cfg = Self::new(mode, count.total, target)?;
        cfg.clamped = count.clamped;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub query_count: u64,
    pub p_group0: f64,
    pub p_target: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: StateVector,
    pub trace: Vec<TraceRow>,
    pub queries: u64,
    /// `(step, correction)` for every renormalization.
    pub renormalizations: Vec<(usize, f64)>,
    /// Final population of every group (discretized mode only).
    pub group_populations: Option<Vec<f64>>,
}

impl RunOutcome {
    pub fn final_success(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.p_target)
    }

    pub fn trace_csv(&self) -> String {
        trace_csv(&self.trace)
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("step,query_count,p_group0,p_target,norm_drift\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.step, r.query_count, r.p_group0, r.p_target, r.norm_drift
        );
    }
    out
}

pub fn success_probability(sv: &StateVector, target: &TourSet) -> f64 {
    target.iter().map(|k| sv.probability(k)).sum()
}

fn group_populations(sv: &StateVector, groups: &[usize], m: usize) -> Vec<f64> {
    let mut pops = vec![0.0; 2 * m];
    for (a, &g) in sv.amps.iter().zip(groups) {
        pops[g] += a.norm_sqr();
    }
    pops
}

/// Applies `G` `cfg.iterations` times starting from `sv0`, tracing the
/// success probability after every step (row 0 is the initial state).
///
/// In continuous mode the phase-0 set is the target window itself, so
/// `p_group0` equals `p_target` there.
pub fn run(sv0: &StateVector, pm: &PhaseMap, cfg: &GroverConfig) -> Result<RunOutcome> {
    if cfg.target.universe() != sv0.len() {
        return Err(Error::invalid(
            "target",
            format!(
                "target covers {} tours, state has {}",
                cfg.target.universe(),
                sv0.len()
            ),
        ));
    }
    let mut oracle = CostOracle::new(pm, cfg.mode)?;
    let groups = match cfg.mode {
        Mode::Discretized { m } => Some((pm.group_indices(m), m)),
        Mode::Continuous => None,
    };
    let group0 = |sv: &StateVector, p_target: f64| match &groups {
        Some((g, _)) => sv
            .amps
            .iter()
            .zip(g)
            .filter(|(_, &j)| j == 0)
            .map(|(a, _)| a.norm_sqr())
            .sum(),
        None => p_target,
    };

    let mut sv = sv0.clone();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let p = success_probability(&sv, &cfg.target);
    trace.push(TraceRow {
        step: 0,
        query_count: 0,
        p_group0: group0(&sv, p),
        p_target: p,
        norm_drift: (sv.norm() - 1.0).abs(),
    });
    let mut renormalizations = Vec::new();
    for step in 1..=cfg.iterations {
        apply_grover(&mut sv, &mut oracle)?;
        let norm_drift = (sv.norm() - 1.0).abs();
        if step % RENORM_INTERVAL == 0 {
            renormalizations.push((step, sv.renormalize()));
        }
        let p = success_probability(&sv, &cfg.target);
        trace.push(TraceRow {
            step,
            query_count: oracle.queries(),
            p_group0: group0(&sv, p),
            p_target: p,
            norm_drift,
        });
    }
    let group_populations = groups.map(|(g, m)| group_populations(&sv, &g, m));
    Ok(RunOutcome {
        state: sv,
        trace,
        queries: oracle.queries(),
        renormalizations,
        group_populations,
    })
}

/// `shots` independent samples from `|amps|²`, reproducible per seed.
pub fn measure(sv: &StateVector, shots: usize, seed: u64) -> Result<Vec<TourIndex>> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be >= 1"));
    }
    let mut cumulative = Vec::with_capacity(sv.len());
    let mut acc = 0.0;
    for a in &sv.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::invalid("state", "zero norm"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = sv.len() - 1;
    Ok((0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            TourIndex(cumulative.partition_point(|&c| c <= u).min(last))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    LowCost,
    /// Expensive tour whose phase wraps into the phase-0 window from above.
    HighCostImpostor,
    NonSolution,
}

/// Classifies a measured tour by classical cost lookup.
pub fn classify_measured(inst: &TspInstance, t: TourIndex, eta: f64) -> Result<Classification> {
    let tour = tour_from_index(t, inst.n())?;
    let phi = cost_to_phase(tour_cost(inst, &tour), inst.n(), inst.c1(), inst.c2())?;
    let half = eta / 2.0;
    Ok(if phi <= half {
        Classification::LowCost
    } else if phi >= TAU - half {
        Classification::HighCostImpostor
    } else {
        Classification::NonSolution
    })
}
