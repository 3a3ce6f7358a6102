//! Run configuration (key=value files plus overrides), JSON reports for
//! single estimates, and CSV tables for parameter sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::estimator::{estimate, EstimatorConfig, EstimatorReport, Inequality, Route};
use crate::grid::{check_exponent, FaceSet, GridDomain};
use crate::identities::{verify_identities, IdentityReport};
use crate::oracle::oracle_for;
use crate::tensor::so_dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Grid,
    P,
    Dim,
    Gamma,
}

impl FromStr for SweepAxis {
    type Err = KornError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grid" => Ok(SweepAxis::Grid),
            "p" => Ok(SweepAxis::P),
            "dim" => Ok(SweepAxis::Dim),
            "gamma" => Ok(SweepAxis::Gamma),
            other => Err(KornError::Config(format!(
                "unknown sweep axis `{other}` (expected grid, p, dim or gamma)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Grid => "grid",
            SweepAxis::P => "p",
            SweepAxis::Dim => "dim",
            SweepAxis::Gamma => "gamma",
        })
    }
}

/// Everything a CLI invocation needs. Numbers given for `grid` are points
/// per axis; a single number applies to every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub extents: Option<Vec<f64>>,
    pub points: Vec<usize>,
    pub p: f64,
    pub inequality: String,
    pub gamma: Option<String>,
    pub max_iter: usize,
    pub tol_rel: f64,
    pub seed: u64,
    pub starts: usize,
    pub oracle: bool,
    pub out: Option<PathBuf>,
    pub dims: Vec<usize>,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            extents: None,
            points: vec![8],
            p: 2.0,
            inequality: "korn_full_bc".into(),
            gamma: None,
            max_iter: EstimatorConfig::DEFAULT_MAX_ITER,
            tol_rel: EstimatorConfig::DEFAULT_TOL_REL,
            seed: 0,
            starts: EstimatorConfig::DEFAULT_STARTS,
            oracle: false,
            out: None,
            dims: vec![2, 3, 4],
            sweep_axis: None,
            sweep_values: Vec::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| KornError::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(KornError::Config(format!("`{key}`: expected a boolean, got `{other}`"))),
    }
}

/// Reads `p`, rejecting values outside `1 < p < ∞` immediately.
pub fn parse_exponent(value: &str) -> Result<f64> {
    let p: f64 = parse_num("p", value)?;
    check_exponent(p)?;
    Ok(p)
}

/// Splits sweep values: `;` for gamma face sets, `,` otherwise.
pub fn split_sweep_values(axis: SweepAxis, raw: &str) -> Vec<String> {
    let sep = if axis == SweepAxis::Gamma { ';' } else { ',' };
    raw.split(sep)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "dim" => self.dim = parse_num(key, value)?,
            "extents" => self.extents = Some(parse_list(key, value)?),
            "grid" | "points" | "points_per_axis" => self.points = parse_list(key, value)?,
            "p" => self.p = parse_exponent(value)?,
            "ineq" | "inequality" => self.inequality = value.to_string(),
            "gamma" => self.gamma = Some(value.to_string()),
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "tol_rel" => self.tol_rel = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "starts" => self.starts = parse_num(key, value)?,
            "oracle" => self.oracle = parse_bool(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "dims" => self.dims = parse_list(key, value)?,
            "axis" => self.sweep_axis = Some(value.parse()?),
            "values" => {
                let axis = self.sweep_axis.unwrap_or(SweepAxis::Grid);
                self.sweep_values = split_sweep_values(axis, value);
            }
            other => return Err(KornError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses UTF-8 `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let mut values_line = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| KornError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            if k.trim() == "values" {
                values_line = Some(v.to_string());
                continue;
            }
            self.set(k, v)?;
        }
        if let Some(v) = values_line {
            self.set("values", &v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    fn grid_with(&self, dim: usize, points: &[usize]) -> Result<GridDomain> {
        let pts = match points.len() {
            1 => vec![points[0]; dim],
            l if l == dim => points.to_vec(),
            l => {
                return Err(KornError::Config(format!(
                    "grid lists {l} point counts for dimension {dim}"
                )))
            }
        };
        let extents = match &self.extents {
            None => vec![1.0; dim],
            Some(e) if e.len() == 1 => vec![e[0]; dim],
            Some(e) => e.clone(),
        };
        GridDomain::new(dim, &extents, &pts)
    }

    fn estimator_with(&self, dim: usize, points: &[usize], p: f64, gamma: Option<&str>) -> Result<EstimatorConfig> {
        let grid = self.grid_with(dim, points)?;
        let gamma = gamma.map(|g| FaceSet::parse(g, dim)).transpose()?;
        let inequality = Inequality::from_name(&self.inequality, gamma)?;
        let cfg = EstimatorConfig {
            inequality,
            p,
            grid,
            max_iter: self.max_iter,
            tol_rel: self.tol_rel,
            seed: self.seed,
            starts: self.starts,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The estimator configuration this run describes.
    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        self.estimator_with(self.dim, &self.points, self.p, self.gamma.as_deref())
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            dim: self.dim,
            extents: self.extents.clone().unwrap_or_else(|| vec![1.0; self.dim]),
            points_per_axis: self.points.clone(),
            p: self.p,
            inequality: self.inequality.clone(),
            gamma: self.gamma.clone(),
            max_iter: self.max_iter,
            tol_rel: self.tol_rel,
            seed: self.seed,
            starts: self.starts,
            oracle: self.oracle,
        }
    }
}

/// The run parameters as recorded in a report (the output path is left out).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub points_per_axis: Vec<usize>,
    pub p: f64,
    pub inequality: String,
    pub gamma: Option<String>,
    pub max_iter: usize,
    pub tol_rel: f64,
    pub seed: u64,
    pub starts: usize,
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub near_zero_eigenvalues: usize,
    pub expected: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    pub dim: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub relative_difference: Option<f64>,
    pub max_residual: f64,
    pub orthonormality_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub value: String,
    pub h: f64,
    pub constant_estimate: Option<f64>,
    pub quotient_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: ConfigEcho,
    pub route: Route,
    pub constant_estimate: f64,
    pub quotient_value: f64,
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub sum_form_interval: Option<[f64; 2]>,
    pub lower_bound: bool,
    pub iterations: usize,
    pub residual: f64,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(default)]
    pub kernel_check: Option<KernelCheck>,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
    #[serde(default)]
    pub refinement_table: Option<Vec<RefinementRow>>,
    /// Accepted quotient values of the best ascent start.
    #[serde(default)]
    pub ascent_trace: Vec<f64>,
}

impl ReportFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn report_from(cfg: &RunConfig, est: &EstimatorReport) -> ReportFile {
    ReportFile {
        config: cfg.echo(),
        route: est.route,
        constant_estimate: est.constant_estimate,
        quotient_value: est.quotient_value,
        lambda_min: est.lambda_min,
        sum_form_interval: est.sum_form_interval,
        lower_bound: est.lower_bound,
        iterations: est.iterations,
        residual: est.residual,
        timings_ms: BTreeMap::new(),
        kernel_check: None,
        oracle: None,
        refinement_table: None,
        ascent_trace: est.best_start.map(|b| est.ascent_traces[b].clone()).unwrap_or_default(),
    }
}

/// Runs one estimate and, with `oracle`, the dense comparison. Writes the
/// report when `out` is set.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<ReportFile> {
    let est_cfg = cfg.estimator_config()?;
    let start = Instant::now();
    let est = estimate(&est_cfg)?;
    let mut report = report_from(cfg, &est);
    report.timings_ms.insert("estimate".into(), millis(start));

    if cfg.oracle {
        let start = Instant::now();
        let summary = oracle_for(&est_cfg)?;
        report.timings_ms.insert("oracle".into(), millis(start));
        let expected = if est_cfg.inequality == Inequality::KornQuotient {
            so_dim(est_cfg.grid.dim())
        } else {
            0
        };
        report.kernel_check = Some(KernelCheck {
            near_zero_eigenvalues: summary.near_zero,
            expected,
            passed: summary.near_zero == expected,
        });
        report.oracle = Some(OracleBlock {
            dim: summary.dim,
            lambda_min: summary.lambda_min,
            lambda_max: summary.lambda_max,
            relative_difference: est.lambda_min.map(|l| (l - summary.lambda_min).abs() / summary.lambda_min),
            max_residual: summary.max_residual,
            orthonormality_error: summary.orthonormality_error,
        });
    }
    if let Some(path) = &cfg.out {
        report.write(path)?;
    }
    Ok(report)
}

pub fn cmd_verify_identities(cfg: &RunConfig) -> Result<IdentityReport> {
    verify_identities(&cfg.dims, cfg.seed)
}

fn check_monotone<T: PartialOrd + fmt::Debug>(values: &[T]) -> Result<()> {
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if up || down {
        Ok(())
    } else {
        Err(KornError::Config(format!("sweep values must be strictly monotone, got {values:?}")))
    }
}

fn check_nested(sets: &[FaceSet]) -> Result<()> {
    let grow = sets.windows(2).all(|w| w[0].is_subset(&w[1]) && w[0] != w[1]);
    let shrink = sets.windows(2).all(|w| w[1].is_subset(&w[0]) && w[0] != w[1]);
    if grow || shrink {
        Ok(())
    } else {
        Err(KornError::Config("gamma sweep values must be strictly nested face sets".into()))
    }
}

/// One estimator configuration per sweep value; `Err` rows are kept.
pub fn sweep_configs(cfg: &RunConfig) -> Result<Vec<(String, Result<EstimatorConfig>)>> {
    let axis = cfg
        .sweep_axis
        .ok_or_else(|| KornError::Config("sweep needs an axis (grid, p, dim or gamma)".into()))?;
    let values = &cfg.sweep_values;
    if values.is_empty() {
        return Err(KornError::Config("sweep needs at least one value".into()));
    }
    let gamma = cfg.gamma.as_deref();
    let configs: Vec<(String, Result<EstimatorConfig>)> = match axis {
        SweepAxis::Grid => {
            let pts = values.iter().map(|v| parse_num::<usize>("values", v)).collect::<Result<Vec<_>>>()?;
            check_monotone(&pts)?;
            pts.iter()
                .zip(values)
                .map(|(&n, v)| (v.clone(), cfg.estimator_with(cfg.dim, &[n], cfg.p, gamma)))
                .collect()
        }
        SweepAxis::P => {
            let ps = values.iter().map(|v| parse_num::<f64>("values", v)).collect::<Result<Vec<_>>>()?;
            check_monotone(&ps)?;
            ps.iter()
                .zip(values)
                .map(|(&p, v)| (v.clone(), cfg.estimator_with(cfg.dim, &cfg.points, p, gamma)))
                .collect()
        }
        SweepAxis::Dim => {
            let ds = values.iter().map(|v| parse_num::<usize>("values", v)).collect::<Result<Vec<_>>>()?;
            check_monotone(&ds)?;
            let pts = [cfg.points[0]];
            ds.iter()
                .zip(values)
                .map(|(&d, v)| (v.clone(), cfg.estimator_with(d, &pts, cfg.p, gamma)))
                .collect()
        }
        SweepAxis::Gamma => {
            let sets = values
                .iter()
                .map(|v| FaceSet::parse(v, cfg.dim))
                .collect::<Result<Vec<_>>>()?;
            check_nested(&sets)?;
            values
                .iter()
                .map(|v| (v.clone(), cfg.estimator_with(cfg.dim, &cfg.points, cfg.p, Some(v))))
                .collect()
        }
    };
    Ok(configs)
}

/// Runs every sweep point (concurrently) and writes the CSV table to `out`
/// when set. Per-point failures are recorded in the `error` column.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<RefinementRow>> {
    let configs = sweep_configs(cfg)?;
    let rows: Vec<RefinementRow> = configs
        .into_par_iter()
        .map(|(value, est_cfg)| {
            let h = est_cfg.as_ref().map(|c| c.grid.max_spacing()).unwrap_or(f64::NAN);
            match est_cfg.and_then(|c| estimate(&c)) {
                Ok(r) => RefinementRow {
                    value,
                    h,
                    constant_estimate: Some(r.constant_estimate),
                    quotient_value: Some(r.quotient_value),
                    error: None,
                },
                Err(e) => RefinementRow {
                    value,
                    h,
                    constant_estimate: None,
                    quotient_value: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    if let Some(path) = &cfg.out {
        std::fs::write(path, sweep_csv(&rows)?)?;
    }
    Ok(rows)
}

/// CSV with columns `value, h, constant_estimate, quotient_value, error`.
pub fn sweep_csv(rows: &[RefinementRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| KornError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_and_overrides() {
        let mut cfg = RunConfig::parse_str(
            "# comment\ndim = 3\ngrid = 5\np = 3\nineq = korn_partial_bc\ngamma = +x1,-x3\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.points, vec![5]);
        cfg.set("seed", "9").unwrap();
        let est = cfg.estimator_config().unwrap();
        assert_eq!(est.seed, 9);
        assert_eq!(est.grid.points(), &[5, 5, 5]);
        assert_eq!(est.inequality.gamma().unwrap().len(), 2);
    }

    #[test]
    fn exponent_one_is_rejected() {
        let err = RunConfig::parse_str("p = 1\n").unwrap_err();
        assert!(err.to_string().contains("1 < p < ∞"), "{err}");
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = RunConfig::default();
        cfg.sweep_axis = Some(SweepAxis::Grid);
        assert!(sweep_configs(&cfg).is_err());
        cfg.sweep_values = vec!["8".into(), "4".into(), "16".into()];
        assert!(sweep_configs(&cfg).is_err());
        cfg.sweep_axis = Some(SweepAxis::Gamma);
        cfg.inequality = "korn_partial_bc".into();
        cfg.sweep_values = split_sweep_values(SweepAxis::Gamma, "+x1;+x1,-x2;all");
        assert_eq!(sweep_configs(&cfg).unwrap().len(), 3);
        cfg.sweep_values = split_sweep_values(SweepAxis::Gamma, "+x1;-x2");
        assert!(sweep_configs(&cfg).is_err());
    }

    #[test]
    fn csv_columns() {
        let rows = vec![RefinementRow {
            value: "4".into(),
            h: 0.25,
            constant_estimate: Some(1.5),
            quotient_value: Some(1.0 / 1.5),
            error: None,
        }];
        let text = sweep_csv(&rows).unwrap();
        assert!(text.starts_with("value,h,constant_estimate,quotient_value,error\n"));
    }
}
