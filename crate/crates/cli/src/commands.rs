use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qtsp_core::classical_baseline::{mean_queries, run_trials, trials_csv, Trial};
use qtsp_core::instance::{exact_mean_pairsum, exact_second_moment_decomposition, tour_from_index};
use qtsp_core::phase::{
    build_group_spec, check_conditions, eta_for_quantile, phase_stats, ConditionReport,
};
use qtsp_core::quantum_sim::{
    classify_measured, init_uniform, measure, run, Classification, GroverConfig, RunOutcome,
};
use qtsp_core::theory::{
    asymptotic_f, ensemble_stats, gaussian_f0, speedup_report, GaussianModel, Variant,
};
use qtsp_core::{GroupSpec, Mode, PhaseMap, PhaseStats, TourIndex, TourSet, TspInstance};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::RunReport;
use crate::CliError;

/// Offsets separating the classical and measurement RNG streams from the
/// instance stream of the same seed.
const CLASSICAL_STREAM: u64 = 1 << 32;
const SHOTS_STREAM: u64 = 2 << 32;

/// `tours.csv` is written only for instances this small.
pub const TOUR_LISTING_LIMIT: usize = 5040;

pub const AGGREGATE_HEADER: &str =
    "n,seed,f0,R,quantum_success,classical_mean_queries,ratio,dphi,eta,overlap_residual,status";

struct Timer {
    start: Instant,
    marks: Vec<(&'static str, f64)>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            marks: Vec::new(),
        }
    }

    fn mark(&mut self, label: &'static str) {
        let total: f64 = self.marks.iter().map(|m| m.1).sum();
        self.marks
            .push((label, self.start.elapsed().as_secs_f64() - total));
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.marks {
            let _ = writeln!(out, "timing.{k}_seconds={v:.6}");
        }
        let _ = writeln!(
            out,
            "timing.total_seconds={:.6}",
            self.start.elapsed().as_secs_f64()
        );
        out
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn generate(cfg: &ExperimentConfig) -> Result<TspInstance, CliError> {
    Ok(TspInstance::generate(cfg.n, cfg.c1, cfg.c2, cfg.seed)?)
}

/// Instance, phases and the solution window shared by every command.
struct Prepared {
    inst: TspInstance,
    pm: PhaseMap,
    ps: PhaseStats,
    eta: f64,
    window: TourSet,
    groups: GroupSpec,
    eta_clamped: bool,
    conditions: ConditionReport,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let inst = generate(cfg)?;
    let pm = PhaseMap::from_instance(&inst)?;
    let ps = phase_stats(&pm);
    let eta = match cfg.eta {
        Some(e) => e,
        None => eta_for_quantile(&pm, cfg.quantile)?,
    };
    let window = pm.window_set(eta);
    if window.is_empty() {
        return Err(CliError::config(
            "eta",
            format!("window of width {eta} holds no tours"),
        ));
    }
    let group_eta = eta.min(PI / cfg.m as f64);
    let groups = build_group_spec(&pm, cfg.m, group_eta)?;
    let conditions = check_conditions(&groups, &ps, cfg.n);
    Ok(Prepared {
        inst,
        pm,
        ps,
        eta,
        window,
        groups,
        eta_clamped: group_eta < eta,
        conditions,
    })
}

fn predicted_dphi(n: usize) -> f64 {
    PI / (3.0 * n as f64).sqrt()
}

fn instance_section(r: &mut RunReport, p: &Prepared) -> Result<(), CliError> {
    let costs = p.pm.costs();
    let len = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / len;
    let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / len;
    r.push("instance.n", p.inst.n());
    r.push("instance.tours", costs.len());
    r.push("instance.mean_cost", mean);
    r.push("instance.mean_cost_pairsum", exact_mean_pairsum(&p.inst));
    if p.inst.n() >= 4 {
        r.push(
            "instance.second_moment_decomposition",
            exact_second_moment_decomposition(&p.inst)?,
        );
    }
    r.push("instance.variance", var);
    r.push(
        "instance.min_cost",
        costs.iter().copied().fold(f64::INFINITY, f64::min),
    );
    r.push(
        "instance.max_cost",
        costs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    r.push("instance.mean_phase", p.ps.mean_phase);
    r.push("instance.dphi", p.ps.std_phase);
    r.push("instance.dphi_predicted", predicted_dphi(p.inst.n()));
    Ok(())
}

fn groups_section(r: &mut RunReport, p: &Prepared) {
    r.push("groups.M", p.groups.m);
    r.push("groups.eta", p.eta);
    r.push("groups.eta_group", p.groups.eta);
    r.push("groups.eta_clamped", p.eta_clamped);
    r.push("groups.window_tours", p.window.len());
    r.push("groups.f0", p.window.fraction());
    r.push("groups.group0_fraction", p.groups.f0());
    let counts: Vec<String> = p.groups.counts.iter().map(|c| c.to_string()).collect();
    r.push("groups.counts", counts.join(";"));
    r.push("groups.file", "groups.csv");
    r.extend_text(&p.conditions.to_kv("conditions."));
}

fn memory_section(r: &mut RunReport, tours: usize, quantum: bool) {
    let f64_bytes = std::mem::size_of::<f64>();
    r.push("memory.phase_map_bytes", 2 * tours * f64_bytes);
    if quantum {
        r.push("memory.statevector_bytes", tours * 2 * f64_bytes);
    }
}

fn tours_csv(p: &Prepared, m: usize) -> Result<String, CliError> {
    let mut out = String::from("index,tour,cost,phase,group\n");
    let groups = p.pm.group_indices(m);
    for (k, (&c, &phi)) in p.pm.costs().iter().zip(p.pm.phases()).enumerate() {
        let t = tour_from_index(TourIndex(k), p.inst.n())?;
        let visits: Vec<String> = t.visits().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{k},{},{c},{phi},{}", visits.join(" "), groups[k]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumResult {
    pub mode: Mode,
    pub iterations: usize,
    pub clamped: bool,
    pub queries: u64,
    pub success: f64,
    pub group0_probability: Option<f64>,
    pub measured_low_cost: usize,
    pub measured_impostor: usize,
    pub measured_other: usize,
}

fn run_mode(
    p: &Prepared,
    cfg: &ExperimentConfig,
    mode: Mode,
    dir: &Path,
    r: &mut RunReport,
) -> Result<QuantumResult, CliError> {
    let gc = GroverConfig::from_target(mode, p.window.clone())?;
    let sv = init_uniform(p.pm.len())?;
    let out: RunOutcome = run(&sv, &p.pm, &gc)?;
    let label = match mode {
        Mode::Continuous => "continuous",
        Mode::Discretized { .. } => "discretized",
    };
    let file = format!("trace_{label}.csv");
    write_file(dir, &file, &out.trace_csv())?;

    let (mut low, mut imp, mut other) = (0, 0, 0);
    if cfg.shots > 0 {
        for t in measure(&out.state, cfg.shots, cfg.seed.wrapping_add(SHOTS_STREAM))? {
            match classify_measured(&p.inst, t, p.eta)? {
                Classification::LowCost => low += 1,
                Classification::HighCostImpostor => imp += 1,
                Classification::NonSolution => other += 1,
            }
        }
    }
    let res = QuantumResult {
        mode,
        iterations: gc.iterations,
        clamped: gc.clamped,
        queries: out.queries,
        success: out.final_success(),
        group0_probability: out.group_populations.as_ref().map(|g| g[0]),
        measured_low_cost: low,
        measured_impostor: imp,
        measured_other: other,
    };
    let k = |s: &str| format!("quantum.{label}.{s}");
    r.push(k("mode"), mode.label());
    r.push(k("iterations"), res.iterations);
    r.push(k("iterations_clamped"), res.clamped);
    r.push(k("queries"), res.queries);
    r.push(k("success"), res.success);
    if let Some(g0) = res.group0_probability {
        r.push(k("group0_probability"), g0);
    }
    r.push(k("predicted_error"), gc.predicted_error);
    r.push(k("renormalizations"), out.renormalizations.len());
    r.push(k("shots"), cfg.shots);
    r.push(k("measured_low_cost"), low);
    r.push(k("measured_high_cost_impostor"), imp);
    r.push(k("measured_non_solution"), other);
    r.push(k("trace_file"), file);
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalResult {
    pub trials: usize,
    pub mean_queries: f64,
    pub found_rate: f64,
}

fn run_classical(
    p: &Prepared,
    cfg: &ExperimentConfig,
    dir: &Path,
    r: &mut RunReport,
) -> Result<ClassicalResult, CliError> {
    let base = cfg.seed.wrapping_add(CLASSICAL_STREAM);
    let trials: Vec<Trial> = run_trials(&p.inst, &p.window, cfg.trials, cfg.max_queries, base)?;
    write_file(dir, "trials.csv", &trials_csv(&trials))?;
    let found = trials.iter().filter(|t| t.log.found).count();
    let res = ClassicalResult {
        trials: trials.len(),
        mean_queries: mean_queries(&trials),
        found_rate: found as f64 / trials.len() as f64,
    };
    r.push("classical.trials", res.trials);
    r.push("classical.base_seed", base);
    r.push("classical.max_queries", cfg.max_queries);
    r.push("classical.mean_queries", res.mean_queries);
    r.push("classical.found_rate", res.found_rate);
    r.push(
        "classical.total_queries",
        trials.iter().map(|t| t.log.queries).sum::<u64>(),
    );
    r.push("classical.file", "trials.csv");
    Ok(res)
}

fn theory_section(r: &mut RunReport, p: &Prepared, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let f0 = p.window.fraction();
    let n = cfg.n;
    r.push("theory.classical_queries", 1.0 / f0);
    r.push("theory.r_formula", (PI / 2.0) / (2.0 * f0.sqrt()));
    if f0 < 1.0 {
        for (label, mode) in [
            ("continuous", Mode::Continuous),
            ("discretized", Mode::Discretized { m: cfg.m }),
        ] {
            let s = speedup_report(f0, mode)?;
            r.push(format!("theory.{label}.quantum_queries"), s.quantum_queries);
            r.push(format!("theory.{label}.ratio"), s.ratio);
        }
    }
    for v in [Variant::Corrected, Variant::HalfWidth] {
        let e = ensemble_stats(n, cfg.c1, cfg.c2, v)?;
        r.push(format!("theory.ensemble.{}.mean", v.label()), e.mean_est);
        r.push(
            format!("theory.ensemble.{}.variance", v.label()),
            e.variance_est,
        );
    }
    let model = GaussianModel::ensemble(n, cfg.c1, cfg.c2)?;
    r.push(
        "theory.gaussian_f0",
        gaussian_f0(p.eta, &model, n, cfg.c1, cfg.c2)?,
    );
    r.push("theory.asymptotic_f", asymptotic_f(n));
    r.push("theory.dphi_predicted", predicted_dphi(n));
    Ok(())
}

fn finish(dir: &Path, r: &RunReport, timer: &Timer) -> Result<(), CliError> {
    write_file(dir, "report.txt", &r.render())?;
    write_file(dir, "timing.txt", &timer.render())?;
    Ok(())
}

fn base_report(cfg: &ExperimentConfig) -> RunReport {
    let mut r = RunReport::new();
    r.extend(cfg.to_kv());
    r
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut timer = Timer::new();
    let inst = generate(cfg)?;
    timer.mark("generate");
    let mut r = base_report(cfg);
    r.push("instance.n", inst.n());
    r.push("instance.tours", inst.tour_count());
    r.push("instance.mean_cost_pairsum", exact_mean_pairsum(&inst));
    r.push("instance.file", "instance.txt");
    write_file(&cfg.out, "instance.txt", &inst.to_text())?;
    finish(&cfg.out, &r, &timer)?;
    Ok(r)
}

pub fn cmd_stats(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut timer = Timer::new();
    let p = prepare(cfg)?;
    timer.mark("enumerate");
    let mut r = base_report(cfg);
    instance_section(&mut r, &p)?;
    groups_section(&mut r, &p);
    memory_section(&mut r, p.pm.len(), false);
    theory_section(&mut r, &p, cfg)?;
    timer.mark("analyse");
    write_file(&cfg.out, "groups.csv", &p.groups.to_csv())?;
    if p.pm.len() <= TOUR_LISTING_LIMIT {
        write_file(&cfg.out, "tours.csv", &tours_csv(&p, cfg.m)?)?;
    }
    finish(&cfg.out, &r, &timer)?;
    Ok(r)
}

pub fn cmd_run_quantum(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut timer = Timer::new();
    let p = prepare(cfg)?;
    timer.mark("enumerate");
    let mut r = base_report(cfg);
    instance_section(&mut r, &p)?;
    groups_section(&mut r, &p);
    memory_section(&mut r, p.pm.len(), true);
    for mode in cfg.mode.modes(cfg.m) {
        run_mode(&p, cfg, mode, &cfg.out, &mut r)?;
    }
    timer.mark("quantum");
    write_file(&cfg.out, "groups.csv", &p.groups.to_csv())?;
    finish(&cfg.out, &r, &timer)?;
    Ok(r)
}

pub fn cmd_run_classical(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut timer = Timer::new();
    let p = prepare(cfg)?;
    timer.mark("enumerate");
    let mut r = base_report(cfg);
    instance_section(&mut r, &p)?;
    groups_section(&mut r, &p);
    run_classical(&p, cfg, &cfg.out, &mut r)?;
    timer.mark("classical");
    finish(&cfg.out, &r, &timer)?;
    Ok(r)
}

/// Headline numbers of one compare run.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub n: usize,
    pub seed: u64,
    pub f0: f64,
    /// Discretized-mode iteration count, which is also its query count.
    pub r: usize,
    pub quantum_success: f64,
    pub continuous: QuantumResult,
    pub discretized: QuantumResult,
    pub classical: ClassicalResult,
    pub dphi: f64,
    pub eta: f64,
    pub overlap_residual: f64,
    pub conditions_ok: bool,
}

impl CompareSummary {
    pub fn ratio(&self) -> f64 {
        self.classical.mean_queries / self.r as f64
    }
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<(RunReport, CompareSummary), CliError> {
    let mut timer = Timer::new();
    let p = prepare(cfg)?;
    timer.mark("enumerate");
    let dir = &cfg.out;
    let mut r = base_report(cfg);
    instance_section(&mut r, &p)?;
    groups_section(&mut r, &p);
    memory_section(&mut r, p.pm.len(), true);
    let cont = run_mode(&p, cfg, Mode::Continuous, dir, &mut r)?;
    let disc = run_mode(&p, cfg, Mode::Discretized { m: cfg.m }, dir, &mut r)?;
    timer.mark("quantum");
    let classical = run_classical(&p, cfg, dir, &mut r)?;
    timer.mark("classical");
    theory_section(&mut r, &p, cfg)?;
    r.push("compare.quantum_queries", disc.queries);
    r.push("compare.quantum_success", disc.success);
    r.push("compare.classical_mean_queries", classical.mean_queries);
    r.push(
        "compare.query_ratio",
        classical.mean_queries / disc.queries.max(1) as f64,
    );

    write_file(dir, "groups.csv", &p.groups.to_csv())?;
    if p.pm.len() <= TOUR_LISTING_LIMIT {
        write_file(dir, "tours.csv", &tours_csv(&p, cfg.m)?)?;
    }
    finish(dir, &r, &timer)?;
    let summary = CompareSummary {
        n: cfg.n,
        seed: cfg.seed,
        f0: p.window.fraction(),
        r: disc.iterations,
        quantum_success: disc.success,
        continuous: cont,
        discretized: disc,
        classical,
        dphi: p.ps.std_phase,
        eta: p.eta,
        overlap_residual: p.conditions.overlap_residual,
        conditions_ok: p.conditions.all_ok(),
    };
    Ok((r, summary))
}

#[derive(Debug)]
pub struct SweepCell {
    pub n: usize,
    pub seed: u64,
    pub outcome: Result<CompareSummary, CliError>,
}

impl SweepCell {
    pub fn csv_row(&self) -> String {
        match &self.outcome {
            Ok(s) => format!(
                "{},{},{},{},{},{},{},{},{},{},ok",
                s.n,
                s.seed,
                s.f0,
                s.r,
                s.quantum_success,
                s.classical.mean_queries,
                s.ratio(),
                s.dphi,
                s.eta,
                s.overlap_residual
            ),
            Err(e) => {
                let msg: String = e
                    .to_string()
                    .chars()
                    .map(|c| if c == ',' || c == '\n' { ';' } else { c })
                    .collect();
                format!("{},{},,,,,,,,,error: {msg}", self.n, self.seed)
            }
        }
    }
}

pub fn cell_dir(root: &Path, n: usize, seed: u64) -> PathBuf {
    root.join(format!("n{n}_seed{seed}"))
}

/// Runs every `(n, seed)` cell as an independent compare. A failing cell is
/// recorded in the aggregate; the others still run.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(RunReport, Vec<SweepCell>), CliError> {
    let mut timer = Timer::new();
    let mut grid: Vec<(usize, u64)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    grid.sort_unstable();
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|&(n, seed)| {
            let cell_cfg = cfg.cell(n, seed, &cell_dir(&cfg.out, n, seed));
            let outcome = cell_cfg
                .validate()
                .and_then(|_| cmd_compare(&cell_cfg))
                .map(|(_, s)| s);
            SweepCell { n, seed, outcome }
        })
        .collect();
    timer.mark("cells");

    let mut csv = String::from(AGGREGATE_HEADER);
    csv.push('\n');
    for c in &cells {
        csv.push_str(&c.csv_row());
        csv.push('\n');
    }
    write_file(&cfg.out, "aggregate.csv", &csv)?;

    let mut r = base_report(cfg);
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    r.push("sweep.cells", cells.len());
    r.push("sweep.failed", failed);
    r.push(
        "sweep.condition_violations",
        cells
            .iter()
            .filter(|c| c.outcome.as_ref().is_ok_and(|s| !s.conditions_ok))
            .count(),
    );
    r.push("sweep.file", "aggregate.csv");
    finish(&cfg.out, &r, &timer)?;
    Ok((r, cells))
}

/// Runs a resolved configuration and returns its report.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    use crate::config::Kind;
    match cfg.kind {
        Kind::Gen => cmd_gen(cfg),
        Kind::Stats => cmd_stats(cfg),
        Kind::RunQuantum => cmd_run_quantum(cfg),
        Kind::RunClassical => cmd_run_classical(cfg),
        Kind::Compare => cmd_compare(cfg).map(|(r, _)| r),
        Kind::Sweep => cmd_sweep(cfg).map(|(r, _)| r),
    }
}
