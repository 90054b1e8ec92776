//! Exact evolution inside the `2M`-dimensional subspace spanned by the
//! normalized group states `|φ_j>`.
//!
//! With discretized phases the oracle is diagonal in this basis and
//! `|ψ0> = Σ_j √f_j |φ_j>` lies inside it, so the subspace is invariant and
//! the reduced evolution reproduces the per-group populations of the full
//! statevector exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instance::{Budget, TspInstance};
use crate::phase::{build_group_spec, nominal_phase, phasor, PhaseMap};
use crate::quantum_sim::{apply_grover, init_uniform_with, CostOracle, Mode};

/// Tolerance on `Σ f_j = 1` when building a group state.
const FRACTION_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupState {
    amps: Vec<Complex64>,
    sqrt_f: Vec<f64>,
    phasors: Vec<Complex64>,
}

impl GroupState {
    /// The uniform superposition `Σ_j √f_j |φ_j>` for `2M = fractions.len()`
    /// groups. Empty groups stay in the basis with zero weight.
    pub fn initial(fractions: &[f64]) -> Result<Self> {
        let len = fractions.len();
        if len < 2 || len % 2 != 0 {
            return Err(Error::invalid(
                "fractions",
                format!("need 2M >= 2 entries, got {len}"),
            ));
        }
        if fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::invalid("fractions", "entries must be >= 0"));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::invalid(
                "fractions",
                format!("sum to {total}, expected 1"),
            ));
        }
        let m = len / 2;
        let sqrt_f: Vec<f64> = fractions.iter().map(|f| f.sqrt()).collect();
        Ok(GroupState {
            amps: sqrt_f.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
            phasors: (0..len).map(|j| phasor(nominal_phase(j, m))).collect(),
            sqrt_f,
        })
    }

    /// Replaces the amplitudes, keeping the reference fractions.
    pub fn with_amplitudes(mut self, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != self.amps.len() {
            return Err(Error::invalid(
                "amps",
                format!(
                    "expected {} amplitudes, got {}",
                    self.amps.len(),
                    amps.len()
                ),
            ));
        }
        self.amps = amps;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn group_oracle(gs: &mut GroupState) {
    for (a, p) in gs.amps.iter_mut().zip(&gs.phasors) {
        *a *= p;
    }
}

/// `I_ψ0` in the group basis: `a_j ← a_j − 2 (Σ_k √f_k a_k) √f_j`.
pub fn group_reflection(gs: &mut GroupState) {
    let overlap: Complex64 = gs.amps.iter().zip(&gs.sqrt_f).map(|(a, &s)| a * s).sum();
    for (a, &s) in gs.amps.iter_mut().zip(&gs.sqrt_f) {
        *a -= overlap * (2.0 * s);
    }
}

pub fn group_grover(gs: &mut GroupState) {
    group_oracle(gs);
    group_reflection(gs);
    gs.amps.iter_mut().for_each(|a| *a = -*a);
}

/// Applies `G` `r` times; entry `k` of the result holds the populations
/// after `k` steps.
pub fn group_run(gs: &mut GroupState, r: usize) -> Vec<Vec<f64>> {
    let mut history = Vec::with_capacity(r + 1);
    history.push(gs.populations());
    for _ in 0..r {
        group_grover(gs);
        history.push(gs.populations());
    }
    history
}

/// Largest absolute difference between per-group probabilities of the full
/// discretized statevector run and the reduced group run, over `r` steps.
pub fn compare_full_vs_group(inst: &TspInstance, m: usize, r: usize) -> Result<f64> {
    compare_full_vs_group_with(inst, m, r, &Budget::default())
}

pub fn compare_full_vs_group_with(
    inst: &TspInstance,
    m: usize,
    r: usize,
    budget: &Budget,
) -> Result<f64> {
    let pm = PhaseMap::from_instance_with(inst, budget)?;
    let spec = build_group_spec(&pm, m, 0.0)?;
    let groups = pm.group_indices(m);
    let mut oracle = CostOracle::new(&pm, Mode::Discretized { m })?;
    let mut full = init_uniform_with(pm.len(), budget)?;
    let mut reduced = GroupState::initial(&spec.fractions)?;

    let mut worst = 0.0f64;
    let mut pops = vec![0.0; 2 * m];
    for step in 0..=r {
        if step > 0 {
            apply_grover(&mut full, &mut oracle)?;
            group_grover(&mut reduced);
        }
        pops.iter_mut().for_each(|p| *p = 0.0);
        for (a, &g) in full.amplitudes().iter().zip(&groups) {
            pops[g] += a.norm_sqr();
        }
        for (p, q) in pops.iter().zip(reduced.populations()) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}
