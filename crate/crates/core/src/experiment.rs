//! Batch experiments behind the `cylwidth` binary.
//!
//! A run is described by an [`ExperimentConfig`], produces a typed
//! [`Report`] and is written once, as JSON or CSV. All randomness is derived
//! from the config seed, so reruns give identical files.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{enumerate_orbit, GroupPresentation};
use crate::lowerbound::{adversarial_min_width, selberg_check, witness_vector, AdversaryTarget};
use crate::measures::{dyadic_alt_measure, dyadic_index_range, sample_uniform, DEFAULT_DELTA};
use crate::rip::{realize_real_subspace, real_imag_matrix, select_columns, C_RIP};
use crate::rng::{stream, sub_seed};
use crate::tnorm::gaussian_tnorm_statistics;
use crate::vectors::{gaussian_matrix, SubspaceBasis, Vector};
use crate::width::{estimate_f_integral, width_orbit, SupEvaluator, DEFAULT_RESTARTS};
use crate::Field;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest real/complex width ratio `realize` accepts.
pub const REALIZE_FACTOR: f64 = 2.0;
pub const REALIZE_SLACK: f64 = 1e-6;

/// `s_{2k}` lower bound for bases with orthonormal complex columns.
const S2K_BOUND_SLACK: f64 = 1e-9;
/// Greedy must reach this fraction of the exhaustive optimum in `rip-fuzz`.
pub const GREEDY_VS_EXHAUSTIVE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tnorm,
    Scaling,
    Lowerbound,
    Realize,
    SelbergFuzz,
    RipFuzz,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Tnorm,
        Command::Scaling,
        Command::Lowerbound,
        Command::Realize,
        Command::SelbergFuzz,
        Command::RipFuzz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tnorm => "tnorm",
            Command::Scaling => "scaling",
            Command::Lowerbound => "lowerbound",
            Command::Realize => "realize",
            Command::SelbergFuzz => "selberg-fuzz",
            Command::RipFuzz => "rip-fuzz",
        }
    }

    /// CSV header, in column order.
    pub fn csv_columns(self) -> &'static [&'static str] {
        match self {
            Command::Tnorm => &[
                "d",
                "trials",
                "mean_ratio",
                "max_ratio",
                "median_ratio",
                "mean_ratio_sum_zero",
                "max_ratio_sum_zero",
                "median_ratio_sum_zero",
            ],
            Command::Scaling => &[
                "d",
                "k",
                "j_count",
                "test_vector",
                "trials",
                "mean_sup_sq",
                "std_err",
                "normalized",
            ],
            Command::Lowerbound => &[
                "d",
                "k",
                "restarts",
                "steps",
                "min_width",
                "normalized",
                "evaluations",
            ],
            Command::Realize => &[
                "d",
                "k",
                "orbit_size",
                "candidates",
                "complex_width",
                "real_width",
                "ratio",
                "s_2k",
                "selected_s_k",
                "real_basis",
            ],
            Command::SelbergFuzz => &[
                "d",
                "instances",
                "max_m",
                "violations",
                "max_excess",
            ],
            Command::RipFuzz => &[
                "d",
                "k",
                "trials",
                "min_ratio",
                "min_vs_exhaustive",
                "selection_failures",
                "min_s_2k",
                "s_2k_violations",
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

fn default_trials() -> usize {
    100
}
fn default_delta() -> Option<u32> {
    Some(DEFAULT_DELTA)
}
fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}
fn default_steps() -> usize {
    2000
}
fn default_adversary_restarts() -> usize {
    10
}
fn default_max_orbit() -> usize {
    10_000
}

/// One experiment. Loadable from JSON; absent fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Required; `Option` only so a missing seed is reported cleanly.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Dyadic `Δ`. `null` selects the asymptotic index range.
    #[serde(default = "default_delta")]
    pub delta: Option<u32>,
    /// ALTMAX restarts for width evaluations.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Adversarial search steps per restart.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_adversary_restarts")]
    pub adversary_restarts: usize,
    #[serde(default)]
    pub group: Option<PathBuf>,
    /// Real base point; normalized before use.
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
    #[serde(default = "default_max_orbit")]
    pub max_orbit: usize,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            d: Vec::new(),
            k: Vec::new(),
            trials: default_trials(),
            seed: None,
            delta: default_delta(),
            restarts: default_restarts(),
            steps: default_steps(),
            adversary_restarts: default_adversary_restarts(),
            group: None,
            base_point: None,
            max_orbit: default_max_orbit(),
            format: Format::Json,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid(format!("{e}")))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| invalid("seed is required"))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<Command> {
        let command = self.command.ok_or_else(|| invalid("command is required"))?;
        self.seed()?;
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        let needs_d = command != Command::Realize;
        let needs_k = matches!(
            command,
            Command::Scaling | Command::Lowerbound | Command::Realize | Command::RipFuzz
        );
        if needs_d && self.d.is_empty() {
            return Err(invalid("d grid is empty"));
        }
        if needs_k && self.k.is_empty() {
            return Err(invalid("k grid is empty"));
        }
        if needs_d && self.d.contains(&0) {
            return Err(invalid("d must be >= 1"));
        }
        if needs_k && self.k.contains(&0) {
            return Err(invalid("k must be >= 1"));
        }
        match command {
            Command::Tnorm | Command::SelbergFuzz => {}
            Command::Scaling => {
                if self.trials < 2 {
                    return Err(invalid("scaling needs trials >= 2 for a standard error"));
                }
                if self.restarts == 0 {
                    return Err(invalid("restarts must be >= 1"));
                }
                for &d in &self.d {
                    for &k in &self.k {
                        if 4 * k > d {
                            return Err(invalid(format!(
                                "scaling requires k <= d/4, got k = {k}, d = {d}"
                            )));
                        }
                        dyadic_index_range(k, d, self.delta)?;
                    }
                }
            }
            Command::Lowerbound => {
                if self.adversary_restarts == 0 || self.steps == 0 {
                    return Err(invalid("adversary restarts and steps must be >= 1"));
                }
                for &d in &self.d {
                    if let Some(&k) = self.k.iter().find(|&&k| k > d) {
                        return Err(invalid(format!("k = {k} exceeds d = {d}")));
                    }
                }
            }
            Command::Realize => {
                if self.group.is_none() {
                    return Err(invalid("realize needs a group file"));
                }
                let base = self
                    .base_point
                    .as_ref()
                    .ok_or_else(|| invalid("realize needs a base point"))?;
                if base.is_empty() || base.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("base point must be nonempty and finite"));
                }
                let d = base.len();
                if let Some(&k) = self.k.iter().find(|&&k| 2 * k > d) {
                    return Err(invalid(format!("realize requires 2k <= d, got k = {k}, d = {d}")));
                }
            }
            Command::RipFuzz => {
                for &d in &self.d {
                    if let Some(&k) = self.k.iter().find(|&&k| 2 * k > d) {
                        return Err(invalid(format!("rip-fuzz requires 2k <= d, got k = {k}, d = {d}")));
                    }
                }
            }
        }
        Ok(command)
    }
}

/// Versioned report. CSV output carries only `rows`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema: u32,
    pub command: String,
    pub seed: u64,
    pub notes: Vec<String>,
    pub rows: Vec<R>,
}

impl<R: Serialize + DeserializeOwned> Report<R> {
    fn new(command: Command, seed: u64, notes: Vec<String>, rows: Vec<R>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.name().to_string(),
            seed,
            notes,
            rows,
        }
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                for row in &self.rows {
                    w.serialize(row)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    pub fn read_json<Rd: Read>(input: Rd) -> Result<Self> {
        let report: Self =
            serde_json::from_reader(input).map_err(|e| invalid(format!("report: {e}")))?;
        if report.schema != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema {}", report.schema)));
        }
        Ok(report)
    }
}

/// Rows of a CSV report.
pub fn read_csv_rows<R: DeserializeOwned, Rd: Read>(input: Rd) -> Result<Vec<R>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnormRow {
    pub d: usize,
    pub trials: usize,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub mean_ratio_sum_zero: f64,
    pub max_ratio_sum_zero: f64,
    pub median_ratio_sum_zero: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestVector {
    Random,
    Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub d: usize,
    pub k: usize,
    pub j_count: usize,
    pub test_vector: TestVector,
    pub trials: usize,
    pub mean_sup_sq: f64,
    pub std_err: f64,
    /// `mean_sup_sq · ln(d/k)`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerboundRow {
    pub d: usize,
    pub k: usize,
    pub restarts: usize,
    pub steps: usize,
    pub min_width: f64,
    /// `min_width · √ln(2d/k)`.
    pub normalized: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizeRow {
    pub d: usize,
    pub k: usize,
    pub orbit_size: usize,
    pub candidates: usize,
    pub complex_width: f64,
    pub real_width: f64,
    pub ratio: f64,
    pub s_2k: f64,
    pub selected_s_k: f64,
    /// Real basis columns as a JSON array of columns.
    pub real_basis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergRow {
    pub d: usize,
    pub instances: usize,
    pub max_m: usize,
    pub violations: usize,
    /// Largest `λ_max − max row sum` seen (negative when all hold).
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipRow {
    pub d: usize,
    pub k: usize,
    pub trials: usize,
    /// Smallest greedy `s_k / target`.
    pub min_ratio: f64,
    /// Smallest greedy / exhaustive `s_k`, when exhaustive search ran.
    pub min_vs_exhaustive: Option<f64>,
    pub selection_failures: usize,
    /// Smallest `s_{2k}([Re B | Im B])` over random complex orthonormal `B`.
    pub min_s_2k: f64,
    pub s_2k_violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Tnorm(Report<TnormRow>),
    Scaling(Report<ScalingRow>),
    Lowerbound(Report<LowerboundRow>),
    Realize(Report<RealizeRow>),
    SelbergFuzz(Report<SelbergRow>),
    RipFuzz(Report<RipRow>),
}

impl Output {
    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<()> {
        match self {
            Output::Tnorm(r) => r.write(format, out),
            Output::Scaling(r) => r.write(format, out),
            Output::Lowerbound(r) => r.write(format, out),
            Output::Realize(r) => r.write(format, out),
            Output::SelbergFuzz(r) => r.write(format, out),
            Output::RipFuzz(r) => r.write(format, out),
        }
    }

    pub fn to_bytes(&self, format: Format) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }

    /// Rows that miss a guaranteed bound, described for the user.
    pub fn guarantee_failures(&self) -> Vec<String> {
        match self {
            Output::Realize(r) => r
                .rows
                .iter()
                .filter(|row| row.ratio.is_nan() || row.ratio > REALIZE_FACTOR + REALIZE_SLACK)
                .map(|row| {
                    format!(
                        "realize d={} k={}: real/complex width ratio {} exceeds {REALIZE_FACTOR}",
                        row.d, row.k, row.ratio
                    )
                })
                .collect(),
            Output::SelbergFuzz(r) => r
                .rows
                .iter()
                .filter(|row| row.violations > 0)
                .map(|row| format!("selberg d={}: {} violations", row.d, row.violations))
                .collect(),
            Output::RipFuzz(r) => r
                .rows
                .iter()
                .filter(|row| row.selection_failures > 0 || row.s_2k_violations > 0)
                .map(|row| {
                    format!(
                        "rip d={} k={}: {} selection failures, {} s_2k violations",
                        row.d, row.k, row.selection_failures, row.s_2k_violations
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Validates and runs the configured command.
pub fn run(config: &ExperimentConfig) -> Result<Output> {
    let command = config.validate()?;
    let seed = config.seed()?;
    Ok(match command {
        Command::Tnorm => Output::Tnorm(cmd_tnorm(config, seed)?),
        Command::Scaling => Output::Scaling(cmd_scaling(config, seed)?),
        Command::Lowerbound => Output::Lowerbound(cmd_lowerbound(config, seed)?),
        Command::Realize => Output::Realize(cmd_realize(config, seed)?),
        Command::SelbergFuzz => Output::SelbergFuzz(cmd_selberg_fuzz(config, seed)?),
        Command::RipFuzz => Output::RipFuzz(cmd_rip_fuzz(config, seed)?),
    })
}

fn row_seed(seed: u64, command: Command, d: usize, k: usize) -> u64 {
    let tag = command as u64 + 1;
    sub_seed(sub_seed(sub_seed(seed, tag), d as u64), k as u64)
}

fn for_command(config: &ExperimentConfig, command: Command) -> Result<()> {
    match config.command {
        Some(c) if c == command => Ok(()),
        _ => {
            let mut c = config.clone();
            c.command = Some(command);
            c.validate().map(|_| ())
        }
    }
}

pub fn cmd_tnorm(config: &ExperimentConfig, seed: u64) -> Result<Report<TnormRow>> {
    for_command(config, Command::Tnorm)?;
    let rows = config
        .d
        .iter()
        .map(|&d| {
            let s = row_seed(seed, Command::Tnorm, d, 0);
            let plain = gaussian_tnorm_statistics(d, config.trials, false, sub_seed(s, 0))?;
            let zero = gaussian_tnorm_statistics(d, config.trials, true, sub_seed(s, 1))?;
            Ok(TnormRow {
                d,
                trials: config.trials,
                mean_ratio: plain.mean,
                max_ratio: plain.max,
                median_ratio: plain.median,
                mean_ratio_sum_zero: zero.mean,
                max_ratio_sum_zero: zero.max,
                median_ratio_sum_zero: zero.median,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(Command::Tnorm, seed, Vec::new(), rows))
}

fn random_unit_real(d: usize, seed: u64) -> Result<Vector> {
    let mut rng = stream(seed, 0);
    let g = gaussian_matrix(d, 1, Field::Real, &mut rng);
    Vector::new(g.column(0).into_owned(), Field::Real)?.normalized()
}

pub fn cmd_scaling(config: &ExperimentConfig, seed: u64) -> Result<Report<ScalingRow>> {
    for_command(config, Command::Scaling)?;
    let mut notes = Vec::new();
    match config.delta {
        Some(delta) => notes.push(format!("dyadic delta = {delta}")),
        None => notes.push("dyadic index range from the asymptotic endpoints".into()),
    }
    notes.push(format!("altmax restarts = {}", config.restarts));
    let mut rows = Vec::new();
    for &d in &config.d {
        for &k in &config.k {
            let s = row_seed(seed, Command::Scaling, d, k);
            let mu = dyadic_alt_measure(k, d, config.delta, sub_seed(s, 0))?;
            let (j_min, j_max) = dyadic_index_range(k, d, config.delta)?;
            let j_count = (j_max - j_min + 1) as usize;
            let vectors = [
                (TestVector::Random, random_unit_real(d, sub_seed(s, 1))?),
                (TestVector::Witness, witness_vector(d, k)?.vector),
            ];
            for (label, (test_vector, v)) in vectors.into_iter().enumerate() {
                let evaluator = SupEvaluator::AltMax {
                    v,
                    restarts: config.restarts,
                };
                let est = estimate_f_integral(&mu, &evaluator, config.trials, sub_seed(s, 2 + label as u64))?;
                rows.push(ScalingRow {
                    d,
                    k,
                    j_count,
                    test_vector,
                    trials: config.trials,
                    mean_sup_sq: est.mean,
                    std_err: est.std_err,
                    normalized: est.mean * (d as f64 / k as f64).ln(),
                });
            }
        }
    }
    Ok(Report::new(Command::Scaling, seed, notes, rows))
}

pub fn cmd_lowerbound(config: &ExperimentConfig, seed: u64) -> Result<Report<LowerboundRow>> {
    for_command(config, Command::Lowerbound)?;
    let mut rows = Vec::new();
    for &d in &config.d {
        for &k in &config.k {
            let s = row_seed(seed, Command::Lowerbound, d, k);
            let res = adversarial_min_width(
                d,
                k,
                &AdversaryTarget::Witness,
                config.adversary_restarts,
                config.steps,
                s,
            )?;
            rows.push(LowerboundRow {
                d,
                k,
                restarts: config.adversary_restarts,
                steps: config.steps,
                min_width: res.min_value,
                normalized: res.min_value * (2.0 * d as f64 / k as f64).ln().sqrt(),
                evaluations: res.evaluations,
            });
        }
    }
    let notes = vec!["target: signed-permutation orbit of the witness vector".to_string()];
    Ok(Report::new(Command::Lowerbound, seed, notes, rows))
}

/// Loads a group file, expanding the symbolic signed-permutation group.
pub fn load_group(path: &Path) -> Result<GroupPresentation> {
    GroupPresentation::from_json_file(path)?.to_explicit()
}

fn basis_string(b: &SubspaceBasis) -> String {
    let cols: Vec<Vec<f64>> = (0..b.dim())
        .map(|j| b.column(j).coords().iter().map(|z| z.re).collect())
        .collect();
    serde_json::to_string(&cols).expect("finite floats serialize")
}

pub fn cmd_realize(config: &ExperimentConfig, seed: u64) -> Result<Report<RealizeRow>> {
    for_command(config, Command::Realize)?;
    let path = config.group.as_deref().ok_or_else(|| invalid("realize needs a group file"))?;
    let group = load_group(path)?;
    let base = config
        .base_point
        .as_ref()
        .ok_or_else(|| invalid("realize needs a base point"))?;
    let d = group.d();
    if base.len() != d {
        return Err(invalid(format!(
            "base point has {} coordinates, group acts on dimension {d}",
            base.len()
        )));
    }
    let v = Vector::real(base)?.normalized()?;
    let orbit = enumerate_orbit(&group, &v, config.max_orbit)?;
    if !orbit.is_real() {
        return Err(invalid("realize needs a real orbit"));
    }
    let mut rows = Vec::new();
    for &k in &config.k {
        let s = row_seed(seed, Command::Realize, d, k);
        let scored = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(s, t as u64);
                let b = sample_uniform(2 * k, d, Field::Complex, &mut rng)?;
                let w = width_orbit(&b, &orbit)?.value;
                Ok((b, w))
            })
            .collect::<Result<Vec<_>>>()?;
        let (best, complex_width) = scored
            .into_iter()
            .reduce(|a, b| if b.1 < a.1 { b } else { a })
            .expect("trials >= 1");
        let real = realize_real_subspace(&best)?;
        let real_width = width_orbit(&real.basis, &orbit)?.value;
        rows.push(RealizeRow {
            d,
            k,
            orbit_size: orbit.len(),
            candidates: config.trials,
            complex_width,
            real_width,
            ratio: real_width / complex_width,
            s_2k: real.s_2k,
            selected_s_k: real.selection.achieved,
            real_basis: basis_string(&real.basis),
        });
    }
    let notes = vec![
        "base point normalized to unit length".to_string(),
        "complex candidates drawn uniformly; smallest orbit width kept".to_string(),
    ];
    Ok(Report::new(Command::Realize, seed, notes, rows))
}

/// One random Selberg instance in dimension `d`. Odd indices build clustered
/// vectors (small perturbations of a few directions) to make the Gram matrix
/// nearly degenerate.
fn selberg_instance(d: usize, seed: u64, index: usize) -> Result<Vec<Vector>> {
    let mut rng = stream(seed, index as u64);
    let field = if index % 4 < 2 { Field::Real } else { Field::Complex };
    let m = 1 + rand::Rng::random_range(&mut rng, 0..2 * d + 2);
    let g = gaussian_matrix(d, m, field, &mut rng);
    let cols: Vec<_> = if index % 2 == 1 {
        let centers = 1 + rand::Rng::random_range(&mut rng, 0..3usize);
        let c = gaussian_matrix(d, centers, field, &mut rng);
        (0..m)
            .map(|j| c.column(j % centers) + g.column(j) * crate::C64::new(1e-3, 0.0))
            .collect()
    } else {
        g.column_iter().map(|c| c.into_owned()).collect()
    };
    cols.into_iter().map(|c| Vector::new(c, field)).collect()
}

pub fn cmd_selberg_fuzz(config: &ExperimentConfig, seed: u64) -> Result<Report<SelbergRow>> {
    for_command(config, Command::SelbergFuzz)?;
    let rows = config
        .d
        .iter()
        .map(|&d| {
            let s = row_seed(seed, Command::SelbergFuzz, d, 0);
            let checks = (0..config.trials)
                .into_par_iter()
                .map(|i| {
                    let vs = selberg_instance(d, s, i)?;
                    Ok((vs.len(), selberg_check(&vs)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SelbergRow {
                d,
                instances: config.trials,
                max_m: checks.iter().map(|c| c.0).max().unwrap_or(0),
                violations: checks.iter().filter(|c| !c.1.holds).count(),
                max_excess: checks
                    .iter()
                    .map(|c| c.1.lhs - c.1.rhs)
                    .fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(Command::SelbergFuzz, seed, Vec::new(), rows))
}

struct RipTrial {
    ratio: f64,
    vs_exhaustive: Option<f64>,
    failed: bool,
    s_2k: f64,
}

fn rip_trial(d: usize, k: usize, seed: u64, t: usize) -> Result<RipTrial> {
    let mut rng = stream(seed, t as u64);
    let m = gaussian_matrix(2 * k, 4 * k, Field::Real, &mut rng).map(|z| z.re);
    let (ratio, vs_exhaustive, failed) = match select_columns(&m, k) {
        Ok(sel) => {
            let ratio = sel.greedy_achieved / sel.target;
            let vs = sel.exhaustive_achieved.map(|e| sel.greedy_achieved / e);
            let failed = ratio < C_RIP || vs.is_some_and(|x| x < GREEDY_VS_EXHAUSTIVE);
            (ratio, vs, failed)
        }
        Err(Error::GuaranteeMissed(_)) => (0.0, None, true),
        Err(e) => return Err(e),
    };
    let b = sample_uniform(2 * k, d, Field::Complex, &mut rng)?;
    let s = crate::rip::singular_values(&real_imag_matrix(&b));
    Ok(RipTrial {
        ratio,
        vs_exhaustive,
        failed,
        s_2k: s[2 * k - 1],
    })
}

pub fn cmd_rip_fuzz(config: &ExperimentConfig, seed: u64) -> Result<Report<RipRow>> {
    for_command(config, Command::RipFuzz)?;
    let mut rows = Vec::new();
    for &d in &config.d {
        for &k in &config.k {
            let s = row_seed(seed, Command::RipFuzz, d, k);
            let trials = (0..config.trials)
                .into_par_iter()
                .map(|t| rip_trial(d, k, s, t))
                .collect::<Result<Vec<_>>>()?;
            let bound = std::f64::consts::FRAC_1_SQRT_2 - S2K_BOUND_SLACK;
            let vs: Vec<f64> = trials.iter().filter_map(|t| t.vs_exhaustive).collect();
            rows.push(RipRow {
                d,
                k,
                trials: config.trials,
                min_ratio: trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min),
                min_vs_exhaustive: (!vs.is_empty())
                    .then(|| vs.iter().cloned().fold(f64::INFINITY, f64::min)),
                selection_failures: trials.iter().filter(|t| t.failed).count(),
                min_s_2k: trials.iter().map(|t| t.s_2k).fold(f64::INFINITY, f64::min),
                s_2k_violations: trials.iter().filter(|t| t.s_2k < bound).count(),
            });
        }
    }
    Ok(Report::new(Command::RipFuzz, seed, Vec::new(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(command: Command, d: &[usize], k: &[usize], trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            command: Some(command),
            d: d.to_vec(),
            k: k.to_vec(),
            trials,
            seed: Some(7),
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        let mut c = config(Command::Tnorm, &[16], &[], 3);
        assert_eq!(c.validate().unwrap(), Command::Tnorm);
        c.seed = None;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = config(Command::Tnorm, &[], &[], 3);
        assert!(c.validate().unwrap_err().is_validation());
        let c = config(Command::Tnorm, &[16], &[], 0);
        assert!(c.validate().is_err());
        let c = config(Command::Scaling, &[16], &[16], 3);
        assert!(c.validate().unwrap_err().to_string().contains("k <= d/4"));
        let c = config(Command::Scaling, &[16], &[4], 1);
        assert!(c.validate().is_err());
        let mut c = config(Command::Scaling, &[16], &[4], 2);
        c.delta = None;
        assert!(matches!(c.validate(), Err(Error::EmptyJ { .. })));
        let c = config(Command::Realize, &[], &[1], 2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults_and_errors() {
        let c = ExperimentConfig::from_json_str(r#"{"command":"selberg-fuzz","d":[4],"seed":1}"#).unwrap();
        assert_eq!(c.command, Some(Command::SelbergFuzz));
        assert_eq!(c.delta, Some(DEFAULT_DELTA));
        assert_eq!(c.trials, 100);
        let c = ExperimentConfig::from_json_str(r#"{"delta":null}"#).unwrap();
        assert_eq!(c.delta, None);
        let e = ExperimentConfig::from_json_str("{\n\"bogus\": 1}").unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("line 2"));
    }

    #[test]
    fn tnorm_has_both_modes() {
        let out = cmd_tnorm(&config(Command::Tnorm, &[256], &[], 10), 7).unwrap();
        assert_eq!(out.rows.len(), 1);
        let r = &out.rows[0];
        assert!(r.mean_ratio.is_finite() && r.mean_ratio_sum_zero.is_finite());
        assert!(r.max_ratio >= r.mean_ratio);
    }

    #[test]
    fn csv_headers_match_documented_columns() {
        for command in Command::ALL {
            let out = match command {
                Command::Tnorm => run(&config(command, &[8], &[], 2)),
                Command::Scaling => run(&config(command, &[16], &[1], 2)),
                Command::Lowerbound => {
                    let mut c = config(command, &[4], &[1], 2);
                    c.adversary_restarts = 1;
                    c.steps = 2;
                    run(&c)
                }
                Command::Realize => continue,
                Command::SelbergFuzz => run(&config(command, &[3], &[], 4)),
                Command::RipFuzz => run(&config(command, &[4], &[1], 3)),
            }
            .unwrap();
            let bytes = out.to_bytes(Format::Csv).unwrap();
            let text = String::from_utf8(bytes).unwrap();
            let header = text.lines().next().unwrap();
            assert_eq!(header, command.csv_columns().join(","), "{}", command.name());
        }
    }

    #[test]
    fn scaling_rows_and_roundtrip() {
        let out = cmd_scaling(&config(Command::Scaling, &[16], &[1], 2), 3).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.rows.iter().all(|r| r.std_err.is_finite() && r.j_count >= 1));
        let o = Output::Scaling(out.clone());
        let json = o.to_bytes(Format::Json).unwrap();
        assert_eq!(Report::<ScalingRow>::read_json(&json[..]).unwrap(), out);
        let csv = o.to_bytes(Format::Csv).unwrap();
        assert_eq!(read_csv_rows::<ScalingRow, _>(&csv[..]).unwrap(), out.rows);
    }

    #[test]
    fn lowerbound_k_equals_d_is_one() {
        let mut c = config(Command::Lowerbound, &[4], &[4], 1);
        c.adversary_restarts = 2;
        c.steps = 5;
        let out = cmd_lowerbound(&c, 1).unwrap();
        assert_eq!(out.rows[0].min_width, 1.0);
    }

    #[test]
    fn realize_trivial_group() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        std::fs::write(&path, r#"{"kind":"explicit","d":2,"generators":[]}"#).unwrap();
        let mut c = config(Command::Realize, &[], &[1], 4);
        c.group = Some(path);
        c.base_point = Some(vec![1.0, 0.0]);
        let out = cmd_realize(&c, 5).unwrap();
        let r = &out.rows[0];
        assert_eq!(r.orbit_size, 1);
        // The 2-dim complex candidate in C^2 is everything.
        assert!((r.complex_width - 1.0).abs() < 1e-12);
        assert!(r.real_width <= 1.0 + 1e-12 && r.ratio <= REALIZE_FACTOR + REALIZE_SLACK);
        assert!(Output::Realize(out).guarantee_failures().is_empty());
    }

    #[test]
    fn rip_and_selberg_fuzz_clean() {
        let out = run(&config(Command::RipFuzz, &[6], &[1, 2], 20)).unwrap();
        assert!(out.guarantee_failures().is_empty(), "{out:?}");
        let out = run(&config(Command::SelbergFuzz, &[2, 5], &[], 50)).unwrap();
        assert!(out.guarantee_failures().is_empty(), "{out:?}");
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, Just(0.0), Just(f64::MIN_POSITIVE), Just(1e-300)]
    }

    proptest! {
        #[test]
        fn rows_round_trip(
            d in 1usize..5000,
            k in 1usize..64,
            a in finite(),
            b in finite(),
            c in proptest::option::of(finite()),
            n in 0usize..1000,
        ) {
            let rows = vec![RipRow {
                d,
                k,
                trials: n,
                min_ratio: a,
                min_vs_exhaustive: c,
                selection_failures: n / 2,
                min_s_2k: b,
                s_2k_violations: n % 3,
            }];
            let report = Report::new(Command::RipFuzz, d as u64, vec!["x,y \"z\"".into()], rows);
            let out = Output::RipFuzz(report.clone());
            let json = out.to_bytes(Format::Json).unwrap();
            prop_assert_eq!(&Report::<RipRow>::read_json(&json[..]).unwrap(), &report);
            let csv = out.to_bytes(Format::Csv).unwrap();
            prop_assert_eq!(read_csv_rows::<RipRow, _>(&csv[..]).unwrap(), report.rows);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let c = config(Command::SelbergFuzz, &[4], &[], 20);
        let a = run(&c).unwrap().to_bytes(Format::Csv).unwrap();
        let b = run(&c).unwrap().to_bytes(Format::Csv).unwrap();
        assert_eq!(a, b);
    }
}
