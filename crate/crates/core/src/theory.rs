//! Closed-form predictions: ensemble cost statistics, the Gaussian density
//! of tours, the phase-0 tail population and query-count comparisons.

use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{enumerate_costs, generate_instance};
use crate::quantum_sim::{iteration_count, Mode};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Relative tolerance of the adaptive quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;

/// Beyond this many standard deviations tails come from `erfc`.
const ERFC_CUTOFF_SIGMA: f64 = 6.0;

/// Which closed form to evaluate for the ensemble mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Uses the uniform mean `(c1 + c2) / 2` of a single pair cost.
    Corrected,
    /// Uses `(c2 - c1) / 2` for the pair mean; agrees with `Corrected` when `c1 = 0`.
    HalfWidth,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Corrected => "corrected",
            Variant::HalfWidth => "half-width",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub variant: Variant,
    pub mean_est: f64,
    pub second_moment_est: f64,
    pub variance_est: f64,
    /// `Δc / c̄`.
    pub ratio: f64,
}

/// Ensemble averages over instances with pair costs uniform on `[c1, c2]`.
///
/// The second moment is `n E[c²] + (n² − n) μ²` with `E[c²] = (c2² + c2c1 +
/// c1²)/3` and `μ` the variant's single-pair mean.
pub fn ensemble_stats(n: usize, c1: f64, c2: f64, variant: Variant) -> Result<EnsembleStats> {
    if n < 3 {
        return Err(Error::invalid(
            "n",
            format!("need at least 3 cities, got {n}"),
        ));
    }
    if !(c2 > c1) {
        return Err(Error::invalid(
            "c2",
            format!("need c2 > c1, got [{c1}, {c2}]"),
        ));
    }
    let nf = n as f64;
    let pair_mean = match variant {
        Variant::Corrected => (c1 + c2) / 2.0,
        Variant::HalfWidth => (c2 - c1) / 2.0,
    };
    let pair_sq = (c2 * c2 + c2 * c1 + c1 * c1) / 3.0;
    let mean_est = nf * pair_mean;
    let second_moment_est = nf * pair_sq + (nf * nf - nf) * pair_mean * pair_mean;
    let variance_est = match variant {
        Variant::Corrected => nf * (c2 - c1) * (c2 - c1) / 12.0,
        Variant::HalfWidth => nf * (c2 * c2 + 10.0 * c2 * c1 + c1 * c1) / 12.0,
    };
    Ok(EnsembleStats {
        variant,
        mean_est,
        second_moment_est,
        variance_est,
        ratio: variance_est.sqrt() / mean_est,
    })
}

/// Measured ensemble variance `⟨m2⟩ − ⟨m1⟩²` over random instances, where
/// `m1`, `m2` are the exact per-instance first and second moments of the tour
/// cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceExperiment {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub instances: usize,
    pub measured: f64,
    pub std_error: f64,
    /// Half width of the 99% confidence interval.
    pub ci_half_width: f64,
    /// Mean over instances of the within-instance variance `m2 − m1²`.
    pub mean_within_variance: f64,
    pub corrected: f64,
    pub half_width_variance: f64,
}

impl VarianceExperiment {
    pub fn within_ci(&self, value: f64) -> bool {
        (value - self.measured).abs() <= self.ci_half_width
    }

    pub fn corrected_in_ci(&self) -> bool {
        self.within_ci(self.corrected)
    }

    pub fn half_width_in_ci(&self) -> bool {
        self.within_ci(self.half_width_variance)
    }

    /// The variant that alone falls inside the interval, if exactly one does.
    pub fn winner(&self) -> Option<Variant> {
        match (self.corrected_in_ci(), self.half_width_in_ci()) {
            (true, false) => Some(Variant::Corrected),
            (false, true) => Some(Variant::HalfWidth),
            _ => None,
        }
    }
}

/// Enumerates every tour of `instances` random instances (seeds
/// `base_seed + i`) and measures the ensemble variance with a delta-method
/// 99% interval.
pub fn variance_experiment(
    n: usize,
    c1: f64,
    c2: f64,
    instances: usize,
    base_seed: u64,
) -> Result<VarianceExperiment> {
    if instances < 2 {
        return Err(Error::invalid("instances", "need at least 2"));
    }
    let moments = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let inst = generate_instance(n, c1, c2, base_seed.wrapping_add(i))?;
            let costs = enumerate_costs(&inst)?;
            let len = costs.len() as f64;
            let m1 = costs.iter().sum::<f64>() / len;
            let m2 = costs.iter().map(|c| c * c).sum::<f64>() / len;
            Ok((m1, m2))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let k = instances as f64;
    let a = moments.iter().map(|m| m.1).sum::<f64>() / k;
    let b = moments.iter().map(|m| m.0).sum::<f64>() / k;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for &(m1, m2) in &moments {
        var_a += (m2 - a) * (m2 - a);
        var_b += (m1 - b) * (m1 - b);
        cov += (m2 - a) * (m1 - b);
    }
    var_a /= k - 1.0;
    var_b /= k - 1.0;
    cov /= k - 1.0;
    // gradient of a - b² is (1, -2b)
    let var_est = (var_a - 4.0 * b * cov + 4.0 * b * b * var_b) / k;
    let std_error = var_est.max(0.0).sqrt();
    let mean_within_variance = moments.iter().map(|(m1, m2)| m2 - m1 * m1).sum::<f64>() / k;

    let corrected = ensemble_stats(n, c1, c2, Variant::Corrected)?.variance_est;
    let half_width_variance = ensemble_stats(n, c1, c2, Variant::HalfWidth)?.variance_est;
    Ok(VarianceExperiment {
        n,
        c1,
        c2,
        instances,
        measured: a - b * b,
        std_error,
        ci_half_width: Z_99 * std_error,
        mean_within_variance,
        corrected,
        half_width_variance,
    })
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..PANELS)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            (lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi))
        })
        .collect();
    let rough: f64 = panels.iter().map(|p| p.5).sum();
    let abs_tol = (rel_tol * rough.abs()).max(f64::MIN_POSITIVE);
    let per_panel = abs_tol / PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| {
            refine(&f, lo, hi, flo, fmid, fhi, whole, per_panel, 48)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Standard normal mass between `za` and `zb` (`za <= zb`).
fn normal_mass(za: f64, zb: f64) -> f64 {
    let q = |z: f64| 0.5 * libm::erfc(z / SQRT_2);
    if za >= 0.0 {
        q(za) - q(zb)
    } else if zb <= 0.0 {
        q(-zb) - q(-za)
    } else {
        1.0 - q(-za) - q(zb)
    }
}

/// Gaussian density of tours truncated to the cost range `[n·c1, n·c2]`:
/// `ν(c) = N (ν0/Δc) exp(−(c − c̄)² / 2Δc²)` with `∫ν = N` over the range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub mean: f64,
    pub std: f64,
    pub norm: f64,
    pub count: f64,
    pub lo: f64,
    pub hi: f64,
}

impl GaussianModel {
    pub fn new(mean: f64, std: f64, count: f64, n: usize, c1: f64, c2: f64) -> Result<Self> {
        if !(std > 0.0) {
            return Err(Error::invalid("std", format!("must be > 0, got {std}")));
        }
        if !(c2 > c1) {
            return Err(Error::invalid(
                "c2",
                format!("need c2 > c1, got [{c1}, {c2}]"),
            ));
        }
        let lo = n as f64 * c1;
        let hi = n as f64 * c2;
        let mass = normal_mass((lo - mean) / std, (hi - mean) / std);
        if !(mass > 0.0) {
            return Err(Error::invalid(
                "mean",
                "Gaussian has no mass inside the cost range",
            ));
        }
        Ok(GaussianModel {
            mean,
            std,
            norm: 1.0 / ((2.0 * PI).sqrt() * mass),
            count,
            lo,
            hi,
        })
    }

    /// Model from the ensemble mean and corrected variance.
    pub fn ensemble(n: usize, c1: f64, c2: f64) -> Result<Self> {
        let s = ensemble_stats(n, c1, c2, Variant::Corrected)?;
        let count = crate::instance::tour_count(n)? as f64;
        Self::new(s.mean_est, s.variance_est.sqrt(), count, n, c1, c2)
    }

    pub fn density(&self, c: f64) -> f64 {
        let z = (c - self.mean) / self.std;
        self.count * self.norm / self.std * (-0.5 * z * z).exp()
    }

    /// `(1/N) ∫_a^b ν(c) dc`.
    pub fn fraction_between(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if !(b > a) {
            return 0.0;
        }
        let za = (a - self.mean) / self.std;
        let zb = (b - self.mean) / self.std;
        if za >= ERFC_CUTOFF_SIGMA || zb <= -ERFC_CUTOFF_SIGMA {
            return self.norm * (2.0 * PI).sqrt() * normal_mass(za, zb);
        }
        integrate(|c| self.density(c), a, b, QUAD_REL_TOL) / self.count
    }
}

/// Population of the phase-0 window `[0, η/2] ∪ [2π − η/2, 2π]` under the
/// Gaussian model, mapped through the affine cost-to-phase scale.
pub fn gaussian_f0(eta: f64, model: &GaussianModel, n: usize, c1: f64, c2: f64) -> Result<f64> {
    if !(0.0..=TAU).contains(&eta) {
        return Err(Error::invalid(
            "eta",
            format!("must lie in [0, 2π], got {eta}"),
        ));
    }
    if !(c2 > c1) {
        return Err(Error::invalid(
            "c2",
            format!("need c2 > c1, got [{c1}, {c2}]"),
        ));
    }
    let lo = n as f64 * c1;
    let hi = n as f64 * c2;
    let width = (eta / 2.0) / TAU * (hi - lo);
    let low_edge = lo + width;
    let high_edge = (hi - width).max(low_edge);
    Ok(model.fraction_between(lo, low_edge) + model.fraction_between(high_edge, hi))
}

/// Classical heuristic success probability `e^{−3n/2 − ln(n)/2}`, the
/// Gaussian tail at `z = √(3n)` for `c1 = 0`.
pub fn asymptotic_f(n: usize) -> f64 {
    let nf = n as f64;
    (-1.5 * nf - 0.5 * nf.ln()).exp()
}

/// Window width covering one e-folding of the Gaussian tail at the lower
/// cost bound when `c1 = 0`: the log-density slope there is `c̄/Δc² = 6/c2`,
/// so the cost width is `c2/6`, i.e. a phase half-width of `2π/(6n)`.
pub fn tail_efold_eta(n: usize) -> f64 {
    2.0 * TAU / (6.0 * n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupReport {
    pub classical_queries: f64,
    pub quantum_queries: usize,
    pub ratio: f64,
    pub clamped: bool,
}

pub fn speedup_report(f0: f64, mode: Mode) -> Result<SpeedupReport> {
    let count = iteration_count(f0, mode)?;
    let classical = 1.0 / f0;
    Ok(SpeedupReport {
        classical_queries: classical,
        quantum_queries: count.total,
        ratio: classical / count.total as f64,
        clamped: count.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_at_zero_lower_bound() {
        let a = ensemble_stats(10, 0.0, 1.0, Variant::Corrected).unwrap();
        let b = ensemble_stats(10, 0.0, 1.0, Variant::HalfWidth).unwrap();
        assert_eq!(a.mean_est, 5.0);
        assert!((a.variance_est - 10.0 / 12.0).abs() < 1e-15);
        assert_eq!(a.mean_est, b.mean_est);
        assert_eq!(a.variance_est, b.variance_est);
        assert_eq!(a.second_moment_est, b.second_moment_est);
    }

    #[test]
    fn variants_split_for_positive_lower_bound() {
        let a = ensemble_stats(10, 1.0, 3.0, Variant::Corrected).unwrap();
        let b = ensemble_stats(10, 1.0, 3.0, Variant::HalfWidth).unwrap();
        assert!((a.variance_est - 10.0 * 4.0 / 12.0).abs() < 1e-12);
        assert!((b.variance_est - 10.0 * 40.0 / 12.0).abs() < 1e-12);
        // second moment minus squared mean reproduces each variance
        for s in [a, b] {
            let v = s.second_moment_est - s.mean_est * s.mean_est;
            assert!((v - s.variance_est).abs() < 1e-9 * s.variance_est);
        }
    }

    #[test]
    fn ratio_scales_as_inverse_sqrt_n() {
        let r4 = ensemble_stats(4, 0.0, 1.0, Variant::Corrected)
            .unwrap()
            .ratio;
        let r16 = ensemble_stats(16, 0.0, 1.0, Variant::Corrected)
            .unwrap()
            .ratio;
        assert!((r16 / r4 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quadrature_on_known_integrals() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-10);
        assert!((v - 2.0).abs() < 1e-9);
        let g = integrate(|x| (-0.5 * x * x).exp(), -8.0, 8.0, 1e-10);
        assert!((g - (2.0 * PI).sqrt()).abs() < 1e-9);
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-8), 0.0);
    }

    #[test]
    fn gaussian_window_limits() {
        let model = GaussianModel::ensemble(9, 0.0, 1.0).unwrap();
        assert_eq!(gaussian_f0(0.0, &model, 9, 0.0, 1.0).unwrap(), 0.0);
        let full = gaussian_f0(TAU, &model, 9, 0.0, 1.0).unwrap();
        assert!((full - 1.0).abs() < 1e-7);
        assert!(gaussian_f0(-0.1, &model, 9, 0.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_f0_increases_with_eta() {
        let model = GaussianModel::ensemble(9, 0.0, 1.0).unwrap();
        let mut prev = 0.0;
        for i in 1..=60 {
            let f = gaussian_f0(i as f64 * 0.1, &model, 9, 0.0, 1.0).unwrap();
            assert!(f > prev, "eta {} gave {f} <= {prev}", i as f64 * 0.1);
            prev = f;
        }
    }

    #[test]
    fn erfc_tail_matches_quadrature_near_cutoff() {
        let model = GaussianModel::new(0.0, 1.0, 1.0, 1, -20.0, 20.0).unwrap();
        let tail = model.fraction_between(6.0, 7.0);
        let quad = integrate(|c| model.density(c), 6.0, 7.0, 1e-12);
        assert!((tail - quad).abs() < 1e-8 * quad);
    }

    #[test]
    fn asymptotic_f_value() {
        let f = asymptotic_f(10);
        assert!((f - (-15.0f64).exp() / 10f64.sqrt()).abs() < 1e-14 * f);
        assert!((f - 9.67e-8).abs() < 0.01e-8);
    }

    #[test]
    fn speedup_examples() {
        let r = speedup_report(1e-4, Mode::Continuous).unwrap();
        assert!((r.classical_queries - 1e4).abs() < 1e-9);
        assert_eq!(r.quantum_queries, 78);
        assert!((r.ratio - 128.2).abs() < 0.1);
        let q = speedup_report(0.25, Mode::Continuous).unwrap();
        assert_eq!((q.classical_queries, q.quantum_queries), (4.0, 1));
        let deep = speedup_report(1e-6, Mode::Continuous).unwrap();
        assert!((r.ratio / deep.ratio - 0.1).abs() < 0.005);
    }
}
