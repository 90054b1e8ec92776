//! Experiment configuration: a TOML file plus command-line overrides.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use qtsp_core::Mode;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Gen,
    Stats,
    RunQuantum,
    RunClassical,
    Compare,
    Sweep,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::Gen => "gen",
            Kind::Stats => "stats",
            Kind::RunQuantum => "run-quantum",
            Kind::RunClassical => "run-classical",
            Kind::Compare => "compare",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Continuous,
    Discretized,
    Both,
}

impl ModeChoice {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "continuous" => Ok(ModeChoice::Continuous),
            "discretized" => Ok(ModeChoice::Discretized),
            "both" => Ok(ModeChoice::Both),
            other => Err(CliError::config(
                "mode",
                format!("expected continuous, discretized or both, got {other:?}"),
            )),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModeChoice::Continuous => "continuous",
            ModeChoice::Discretized => "discretized",
            ModeChoice::Both => "both",
        }
    }

    pub fn modes(&self, m: usize) -> Vec<Mode> {
        match self {
            ModeChoice::Continuous => vec![Mode::Continuous],
            ModeChoice::Discretized => vec![Mode::Discretized { m }],
            ModeChoice::Both => vec![Mode::Continuous, Mode::Discretized { m }],
        }
    }
}

/// Flags that override the file. `None` leaves the file (or default) value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of phase groups per half turn
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Fraction of cheapest tours the solution window must cover
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Explicit window width; takes precedence over the quantile
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub shots: Option<usize>,
    /// continuous, discretized or both
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub max_queries: Option<u64>,
    /// Sweep city counts, comma separated
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub n_values: Option<Vec<usize>>,
    /// Sweep seeds, comma separated
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out: Option<PathBuf>,
    #[serde(default)]
    instance: InstanceSection,
    #[serde(default)]
    grover: GroverSection,
    #[serde(default)]
    classical: ClassicalSection,
    #[serde(default)]
    sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceSection {
    n: Option<usize>,
    c1: Option<f64>,
    c2: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroverSection {
    #[serde(rename = "M")]
    m: Option<usize>,
    quantile: Option<f64>,
    eta: Option<f64>,
    shots: Option<usize>,
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalSection {
    trials: Option<usize>,
    max_queries: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    n_values: Option<Vec<usize>>,
    seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    pub m: usize,
    pub quantile: f64,
    pub eta: Option<f64>,
    pub shots: usize,
    pub mode: ModeChoice,
    pub trials: usize,
    pub max_queries: u64,
    pub n_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            n: 8,
            c1: 0.0,
            c2: 1.0,
            seed: 0,
            m: 8,
            quantile: 0.002,
            eta: None,
            shots: 1000,
            mode: ModeChoice::Both,
            trials: 200,
            max_queries: 1_000_000,
            n_values: vec![6, 7, 8],
            seeds: vec![0],
            out: PathBuf::from("qtsp-out"),
        }
    }

    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(kind: Kind, ov: &Overrides) -> Result<Self, CliError> {
        let file = match &ov.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let mut cfg = Self::defaults(kind);
        let mode = ov.mode.clone().or(file.grover.mode);

        cfg.n = ov.n.or(file.instance.n).unwrap_or(cfg.n);
        cfg.c1 = ov.c1.or(file.instance.c1).unwrap_or(cfg.c1);
        cfg.c2 = ov.c2.or(file.instance.c2).unwrap_or(cfg.c2);
        cfg.seed = ov.seed.or(file.instance.seed).unwrap_or(cfg.seed);
        cfg.m = ov.m.or(file.grover.m).unwrap_or(cfg.m);
        cfg.quantile = ov.quantile.or(file.grover.quantile).unwrap_or(cfg.quantile);
        cfg.eta = ov.eta.or(file.grover.eta);
        cfg.shots = ov.shots.or(file.grover.shots).unwrap_or(cfg.shots);
        if let Some(s) = mode {
            cfg.mode = ModeChoice::parse(&s)?;
        }
        cfg.trials = ov.trials.or(file.classical.trials).unwrap_or(cfg.trials);
        cfg.max_queries = ov
            .max_queries
            .or(file.classical.max_queries)
            .unwrap_or(cfg.max_queries);
        cfg.n_values = ov
            .n_values
            .clone()
            .or(file.sweep.n_values)
            .unwrap_or(cfg.n_values);
        cfg.seeds = ov
            .seeds
            .clone()
            .or(file.sweep.seeds)
            .unwrap_or_else(|| vec![cfg.seed]);
        cfg.out = ov.out.clone().or(file.out).unwrap_or(cfg.out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 3 {
            return Err(CliError::config(
                "n",
                format!("must be >= 3, got {}", self.n),
            ));
        }
        if !(self.c1.is_finite() && self.c1 >= 0.0) {
            return Err(CliError::config(
                "c1",
                format!("must be finite and >= 0, got {}", self.c1),
            ));
        }
        if !(self.c2.is_finite() && self.c2 > self.c1) {
            return Err(CliError::config(
                "c2",
                format!("must exceed c1, got {}", self.c2),
            ));
        }
        if self.m == 0 {
            return Err(CliError::config("M", "must be >= 1"));
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(CliError::config(
                "quantile",
                format!("must lie in (0, 1], got {}", self.quantile),
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= TAU) {
                return Err(CliError::config(
                    "eta",
                    format!("must lie in (0, 2π], got {eta}"),
                ));
            }
        }
        if self.trials == 0 {
            return Err(CliError::config("trials", "must be >= 1"));
        }
        if self.max_queries == 0 {
            return Err(CliError::config("max_queries", "must be >= 1"));
        }
        if self.kind == Kind::Sweep {
            if self.n_values.is_empty() {
                return Err(CliError::config("n_values", "sweep needs at least one n"));
            }
            if self.seeds.is_empty() {
                return Err(CliError::config("seeds", "sweep needs at least one seed"));
            }
            if let Some(&bad) = self.n_values.iter().find(|&&n| n < 3) {
                return Err(CliError::config(
                    "n_values",
                    format!("must be >= 3, got {bad}"),
                ));
            }
        }
        Ok(())
    }

    /// `config.*` lines echoing every field.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let list = |v: Vec<String>| v.join(",");
        let mut kv = vec![
            ("config.kind".into(), self.kind.label().into()),
            ("config.n".into(), self.n.to_string()),
            ("config.c1".into(), self.c1.to_string()),
            ("config.c2".into(), self.c2.to_string()),
            ("config.seed".into(), self.seed.to_string()),
            ("config.M".into(), self.m.to_string()),
            ("config.quantile".into(), self.quantile.to_string()),
            (
                "config.eta".into(),
                self.eta
                    .map_or_else(|| "from_quantile".into(), |e| e.to_string()),
            ),
            ("config.shots".into(), self.shots.to_string()),
            ("config.mode".into(), self.mode.label().into()),
            ("config.trials".into(), self.trials.to_string()),
            ("config.max_queries".into(), self.max_queries.to_string()),
        ];
        if self.kind == Kind::Sweep {
            kv.push((
                "config.n_values".into(),
                list(self.n_values.iter().map(|n| n.to_string()).collect()),
            ));
            kv.push((
                "config.seeds".into(),
                list(self.seeds.iter().map(|s| s.to_string()).collect()),
            ));
        }
        kv
    }

    /// Single-cell copy used by the sweep.
    pub fn cell(&self, n: usize, seed: u64, out: &Path) -> Self {
        ExperimentConfig {
            kind: Kind::Compare,
            n,
            seed,
            out: out.to_path_buf(),
            ..self.clone()
        }
    }
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        field: "config".into(),
        reason: format!("{}: {}", path.display(), e.message()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_match_documented_scale() {
        let c = ExperimentConfig::resolve(Kind::Compare, &Overrides::default()).unwrap();
        assert_eq!((c.n, c.m, c.quantile, c.trials), (8, 8, 0.002, 200));
    }

    #[test]
    fn command_line_wins_over_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "out = \"x\"\n[instance]\nn = 6\nseed = 3\n[grover]\nM = 2\nmode = \"continuous\"\n[sweep]\nn_values = [5, 6]"
        )
        .unwrap();
        let ov = Overrides {
            config: Some(f.path().to_path_buf()),
            n: Some(7),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(Kind::Sweep, &ov).unwrap();
        assert_eq!(c.n, 7);
        assert_eq!(c.seed, 3);
        assert_eq!(c.m, 2);
        assert_eq!(c.mode, ModeChoice::Continuous);
        assert_eq!(c.n_values, vec![5, 6]);
        assert_eq!(c.seeds, vec![3]);
        assert_eq!(c.out, PathBuf::from("x"));
    }

    #[test]
    fn invalid_values_name_their_field() {
        let ov = Overrides {
            m: Some(0),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve(Kind::Compare, &ov).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`M`"), "{err}");

        let ov = Overrides {
            n_values: Some(vec![]),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve(Kind::Sweep, &ov).unwrap_err();
        assert!(err.to_string().contains("n_values"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[grover]\nm = 3").unwrap();
        let ov = Overrides {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve(Kind::Compare, &ov).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
