//! Cost phases, their discretization into `2M` nominal-phase groups and the
//! validity diagnostics for the cost-phase Grover iteration.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instance::{enumerate_costs_with, Budget, TourSet, TspInstance};

/// Slack allowed when a summed tour cost overshoots its bound by rounding.
const BOUND_SLACK: f64 = 1e-12;

/// Affine map of a tour cost onto `[0, 2π]`: the cost bound `n·c1` goes to
/// 0, `n·c2` to 2π.
pub fn cost_to_phase(c: f64, n: usize, c1: f64, c2: f64) -> Result<f64> {
    if !(c2 > c1) {
        return Err(Error::invalid(
            "c2",
            format!("phase map needs c2 > c1, got [{c1}, {c2}]"),
        ));
    }
    let lo = n as f64 * c1;
    let hi = n as f64 * c2;
    let slack = BOUND_SLACK * hi.abs().max(1.0);
    if !(c >= lo - slack && c <= hi + slack) {
        return Err(Error::invalid("cost", format!("{c} outside [{lo}, {hi}]")));
    }
    let phi = TAU * (c - lo) / (hi - lo);
    Ok(phi.clamp(0.0, TAU))
}

/// Nearest nominal phase `jπ/M`, wrapped into `0..2M`. Exact half-bin ties
/// go to the even group.
pub fn discretize_phase(phi: f64, m: usize) -> usize {
    let two_m = 2 * m as i64;
    let j = (phi * m as f64 / PI).round_ties_even() as i64;
    j.rem_euclid(two_m) as usize
}

pub fn nominal_phase(j: usize, m: usize) -> f64 {
    j as f64 * PI / m as f64
}

/// Unit phasor `e^{iφ}`, exact on multiples of π/2.
pub fn phasor(phi: f64) -> Complex64 {
    let quarter = phi / (PI / 2.0);
    if quarter.fract() == 0.0 {
        match (quarter as i64).rem_euclid(4) {
            0 => return Complex64::new(1.0, 0.0),
            1 => return Complex64::new(0.0, 1.0),
            2 => return Complex64::new(-1.0, 0.0),
            _ => return Complex64::new(0.0, -1.0),
        }
    }
    Complex64::from_polar(1.0, phi)
}

/// Scale of the affine cost-to-phase map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScale {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
}

/// One cost phase per tour, indexed by `TourIndex`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    phases: Vec<f64>,
    costs: Vec<f64>,
    scale: PhaseScale,
}

impl PhaseMap {
    pub fn from_costs(costs: Vec<f64>, n: usize, c1: f64, c2: f64) -> Result<Self> {
        let phases = costs
            .iter()
            .map(|&c| cost_to_phase(c, n, c1, c2))
            .collect::<Result<Vec<f64>>>()?;
        Ok(PhaseMap {
            phases,
            costs,
            scale: PhaseScale { n, c1, c2 },
        })
    }

    pub fn from_instance(inst: &TspInstance) -> Result<Self> {
        Self::from_instance_with(inst, &Budget::default())
    }

    pub fn from_instance_with(inst: &TspInstance, budget: &Budget) -> Result<Self> {
        let costs = enumerate_costs_with(inst, budget)?;
        Self::from_costs(costs, inst.n(), inst.c1(), inst.c2())
    }

    /// Phase map with no underlying instance. The scale is chosen so that
    /// each tour's "cost" equals its phase.
    pub fn from_phases(phases: Vec<f64>) -> Result<Self> {
        if let Some(bad) = phases.iter().find(|p| !(0.0..=TAU).contains(*p)) {
            return Err(Error::invalid("phases", format!("{bad} outside [0, 2π]")));
        }
        Ok(PhaseMap {
            costs: phases.clone(),
            phases,
            scale: PhaseScale {
                n: 1,
                c1: 0.0,
                c2: TAU,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn scale(&self) -> PhaseScale {
        self.scale
    }

    pub fn group_indices(&self, m: usize) -> Vec<usize> {
        self.phases
            .iter()
            .map(|&p| discretize_phase(p, m))
            .collect()
    }

    /// Tours whose phase lies in `[0, η/2] ∪ [2π − η/2, 2π]`.
    pub fn window_set(&self, eta: f64) -> TourSet {
        let half = eta / 2.0;
        TourSet::from_mask(
            self.phases
                .iter()
                .map(|&p| p <= half || p >= TAU - half)
                .collect(),
        )
    }
}

/// Window width η whose lower half `[0, η/2]` holds the cheapest `⌈qN⌉`
/// tours.
pub fn eta_for_quantile(pm: &PhaseMap, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(
            "quantile",
            format!("must lie in (0, 1], got {q}"),
        ));
    }
    if pm.is_empty() {
        return Err(Error::invalid("phases", "empty phase map"));
    }
    let k = ((q * pm.len() as f64).ceil() as usize).clamp(1, pm.len());
    let mut sorted = pm.phases.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(2.0 * sorted[k - 1])
}

/// Histogram of tours over the `2M` nominal phases `jπ/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub m: usize,
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
    pub eta: f64,
}

impl GroupSpec {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn f0(&self) -> f64 {
        self.fractions[0]
    }

    /// `j,phi_j,N_j,f_j` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,phi_j,N_j,f_j\n");
        for (j, (&count, &f)) in self.counts.iter().zip(&self.fractions).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", j, nominal_phase(j, self.m), count, f);
        }
        out
    }
}

pub fn build_group_spec(pm: &PhaseMap, m: usize, eta: f64) -> Result<GroupSpec> {
    if m == 0 {
        return Err(Error::invalid("M", "must be >= 1"));
    }
    if !(eta >= 0.0) {
        return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
    }
    if eta > PI / m as f64 {
        return Err(Error::invalid(
            "eta",
            format!(
                "{eta} exceeds π/M = {} so the phase-0 window leaves group 0",
                PI / m as f64
            ),
        ));
    }
    let mut counts = vec![0usize; 2 * m];
    for &p in &pm.phases {
        counts[discretize_phase(p, m)] += 1;
    }
    let total = pm.len().max(1) as f64;
    let fractions = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(GroupSpec {
        m,
        counts,
        fractions,
        eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStats {
    pub mean_phase: f64,
    pub std_phase: f64,
    pub mean_cost: f64,
    pub std_cost: f64,
}

/// Population mean and standard deviation of phases and costs.
pub fn phase_stats(pm: &PhaseMap) -> PhaseStats {
    let (mean_phase, std_phase) = mean_std(&pm.phases);
    let (mean_cost, std_cost) = mean_std(&pm.costs);
    PhaseStats {
        mean_phase,
        std_phase,
        mean_cost,
        std_cost,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // shifted by the first sample so constant input gives exactly zero spread
    let shift = xs[0];
    let len = xs.len() as f64;
    let offset = xs.iter().map(|x| x - shift).sum::<f64>() / len;
    let var = xs
        .iter()
        .map(|x| (x - shift - offset) * (x - shift - offset))
        .sum::<f64>()
        / len;
    (shift + offset, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionThresholds {
    pub max_overlap_residual: f64,
    pub max_leakage: f64,
    pub min_eta_over_dphi: f64,
    /// Upper bound on η/Δφ as a fraction of √n.
    pub max_eta_over_dphi_per_sqrt_n: f64,
}

impl Default for ConditionThresholds {
    fn default() -> Self {
        ConditionThresholds {
            max_overlap_residual: 0.1,
            max_leakage: 0.01,
            min_eta_over_dphi: 3.0,
            max_eta_over_dphi_per_sqrt_n: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub overlap_residual: f64,
    pub leakage: f64,
    pub eta_over_dphi: f64,
    pub sqrt_n: f64,
    pub overlap_ok: bool,
    pub leakage_ok: bool,
    pub window_ok: bool,
    pub thresholds: ConditionThresholds,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.overlap_ok && self.leakage_ok && self.window_ok
    }

    /// `key=value` lines, each key prefixed with `prefix`.
    pub fn to_kv(&self, prefix: &str) -> String {
        let t = &self.thresholds;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{prefix}{k}={v}");
        };
        kv("overlap_residual", self.overlap_residual.to_string());
        kv("leakage", self.leakage.to_string());
        kv("eta_over_dphi", self.eta_over_dphi.to_string());
        kv("sqrt_n", self.sqrt_n.to_string());
        kv("overlap_ok", self.overlap_ok.to_string());
        kv("leakage_ok", self.leakage_ok.to_string());
        kv("window_ok", self.window_ok.to_string());
        kv("all_ok", self.all_ok().to_string());
        kv(
            "threshold.max_overlap_residual",
            t.max_overlap_residual.to_string(),
        );
        kv("threshold.max_leakage", t.max_leakage.to_string());
        kv(
            "threshold.min_eta_over_dphi",
            t.min_eta_over_dphi.to_string(),
        );
        kv(
            "threshold.max_eta_over_dphi_per_sqrt_n",
            t.max_eta_over_dphi_per_sqrt_n.to_string(),
        );
        out
    }
}

/// `|Σ_j f_j (1 + e^{iφ_j})|` over the nominal group phases.
pub fn overlap_residual(fractions: &[f64]) -> f64 {
    let m = fractions.len() / 2;
    fractions
        .iter()
        .enumerate()
        .map(|(j, &f)| f * (Complex64::new(1.0, 0.0) + phasor(nominal_phase(j, m))))
        .sum::<Complex64>()
        .norm()
}

pub fn check_conditions(gs: &GroupSpec, ps: &PhaseStats, n: usize) -> ConditionReport {
    check_conditions_with(gs, ps, n, ConditionThresholds::default())
}

pub fn check_conditions_with(
    gs: &GroupSpec,
    ps: &PhaseStats,
    n: usize,
    thresholds: ConditionThresholds,
) -> ConditionReport {
    let overlap = overlap_residual(&gs.fractions);
    let leakage = gs.eta * gs.eta / 12.0;
    let eta_over_dphi = if ps.std_phase > 0.0 {
        gs.eta / ps.std_phase
    } else {
        f64::INFINITY
    };
    let sqrt_n = (n as f64).sqrt();
    ConditionReport {
        overlap_residual: overlap,
        leakage,
        eta_over_dphi,
        sqrt_n,
        overlap_ok: overlap < thresholds.max_overlap_residual,
        leakage_ok: leakage < thresholds.max_leakage,
        window_ok: eta_over_dphi >= thresholds.min_eta_over_dphi
            && eta_over_dphi <= thresholds.max_eta_over_dphi_per_sqrt_n * sqrt_n,
        thresholds,
    }
}
