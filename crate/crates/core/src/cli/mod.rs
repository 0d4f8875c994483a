//! Command-line workflows: ingestion, threshold selection, VaR reporting,
//! simulation studies, and CDF-comparison plot emission.
//!
//! Every command is a pure function from a [`RunConfig`] (plus input files) to
//! an in-memory report; artifact writing happens strictly after a command
//! succeeds, so a failing run leaves no partial output files. JSON artifacts
//! carry `schema_version`; reruns with identical config and seed are
//! byte-identical.

pub mod scenario_file;
pub mod svg;

use crate::data_io::{
    filter_year, load_claims, summary_stats, ClaimsDataset, ColumnMapping, Ecdf,
    DEFAULT_SCALE_FACTOR,
};
use crate::error::{Error, Result};
use crate::gof::{GofConfig, PvalueMethod, DEFAULT_BOOTSTRAP_B};
use crate::gpd::{gpd_cdf, GpdFit, DEFAULT_MIN_EXCEEDANCES};
use crate::risk::{empirical_var, var_with_ci};
use crate::select::{
    build_candidate_grid, select_threshold, AccumulationKind, AccumulationSpec, CandidateGrid,
    SelectionStatus,
};
use crate::simlab::{scenario_table, ScenarioTable};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Version stamped into every machine-readable artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Stable exit-code contract.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NO_THRESHOLD: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// Maps an error to the exit-code contract.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::InvalidSpec(_) => EXIT_VALIDATION,
        Error::FileUnreadable { .. }
        | Error::SchemaMismatch { .. }
        | Error::EmptyAfterParse { .. }
        | Error::YearAbsent(_)
        | Error::EmptyInput
        | Error::DegenerateGrid(_)
        | Error::InsufficientData { .. } => EXIT_DATA,
        Error::NonConvergence(_)
        | Error::RegularityViolation { .. }
        | Error::NonPositiveVariance { .. }
        | Error::UnsupportedShape { .. }
        | Error::Domain(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

/// Full parameterization of a command run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub years: Vec<i32>,
    pub scale_factor: f64,
    pub truncation_floor: Option<f64>,
    pub accumulation: AccumulationKind,
    pub c_param: f64,
    pub alpha: f64,
    pub grid_lower: f64,
    pub grid_upper: f64,
    pub grid_count: usize,
    pub gof_method: PvalueMethod,
    pub bootstrap_b: usize,
    pub min_exceedances: usize,
    pub levels: Vec<f64>,
    pub ci_level: f64,
    /// Skip selection and fit at this threshold directly.
    pub threshold: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Points per fitted CDF curve in plot emission.
    pub points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            years: Vec::new(),
            scale_factor: DEFAULT_SCALE_FACTOR,
            truncation_floor: None,
            accumulation: AccumulationKind::ForwardStop,
            c_param: 2.0,
            alpha: 0.01,
            grid_lower: 0.01,
            grid_upper: 0.98,
            grid_count: 30,
            gof_method: PvalueMethod::TableInterpolation,
            bootstrap_b: DEFAULT_BOOTSTRAP_B,
            min_exceedances: DEFAULT_MIN_EXCEEDANCES,
            levels: vec![0.90, 0.95],
            ci_level: 0.95,
            threshold: None,
            seed: 0,
            out_dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Text],
            points: 201,
        }
    }
}

impl RunConfig {
    /// Validates every numeric option against its module's preconditions
    /// before any work starts.
    pub fn validate(&self) -> Result<()> {
        AccumulationSpec::new(self.accumulation, self.c_param, self.alpha)?;
        if !(0.0..1.0).contains(&self.grid_lower)
            || !(self.grid_upper > self.grid_lower && self.grid_upper <= 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "grid bounds ({}, {}) must satisfy 0 <= lower < upper <= 1",
                self.grid_lower, self.grid_upper
            )));
        }
        if self.grid_count < 2 {
            return Err(Error::InvalidArgument("grid count must be at least 2".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("need at least one VaR level".into()));
        }
        for &l in &self.levels {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "VaR level {l} must be in (0, 1)"
                )));
            }
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "CI level {} must be in (0, 1)",
                self.ci_level
            )));
        }
        if self.bootstrap_b == 0 {
            return Err(Error::InvalidArgument("bootstrap replicates must be positive".into()));
        }
        if !(self.scale_factor > 0.0) {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        if self.points < 2 {
            return Err(Error::InvalidArgument("plot needs at least 2 points".into()));
        }
        Ok(())
    }

    fn accumulation_spec(&self) -> Result<AccumulationSpec> {
        AccumulationSpec::new(self.accumulation, self.c_param, self.alpha)
    }

    fn gof_config(&self) -> GofConfig {
        GofConfig {
            method: self.gof_method,
            bootstrap_b: self.bootstrap_b,
            seed: self.seed,
            min_exceedances: self.min_exceedances,
            ..GofConfig::default()
        }
    }

    /// Resolves the input path, consulting `POTFIT_DATA_DIR` when the path is
    /// missing or not directly readable.
    pub fn resolve_input(&self) -> Result<PathBuf> {
        let data_dir = std::env::var_os("POTFIT_DATA_DIR").map(PathBuf::from);
        match (&self.input, data_dir) {
            (Some(p), _) if p.exists() => Ok(p.clone()),
            (Some(p), Some(dir)) => {
                let joined = dir.join(p);
                if joined.exists() {
                    Ok(joined)
                } else {
                    Ok(p.clone()) // let the loader report the readable error
                }
            }
            (Some(p), None) => Ok(p.clone()),
            (None, Some(dir)) => Ok(dir.join("claims.csv")),
            (None, None) => {
                Err(Error::InvalidArgument("no input file given (and POTFIT_DATA_DIR unset)".into()))
            }
        }
    }

    fn load_dataset(&self) -> Result<ClaimsDataset> {
        let path = self.resolve_input()?;
        let ds = load_claims(&path, &ColumnMapping::default(), self.scale_factor)?;
        match self.truncation_floor {
            Some(f) => ds.with_truncation_floor(f),
            None => Ok(ds),
        }
    }

    fn effective_years(&self, ds: &ClaimsDataset) -> Vec<i32> {
        if self.years.is_empty() {
            ds.years()
        } else {
            self.years.clone()
        }
    }
}

// ---------------------------------------------------------------------------
// summarize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub schema_version: u32,
    pub input: String,
    pub scale_factor: f64,
    pub skipped_rows: usize,
    pub years: Vec<YearSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct YearSummary {
    pub year: i32,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn cmd_summarize(config: &RunConfig) -> Result<SummaryReport> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let mut years = Vec::new();
    for year in config.effective_years(&ds) {
        let values = filter_year(&ds, year)?;
        let s = summary_stats(&values)?;
        years.push(YearSummary {
            year,
            n: s.n,
            mean: s.mean,
            sd: s.sd,
            q1: s.q1,
            q2: s.q2,
            q3: s.q3,
            max: s.max,
        });
    }
    Ok(SummaryReport {
        schema_version: SCHEMA_VERSION,
        input: ds.source_path.clone(),
        scale_factor: ds.scale_factor,
        skipped_rows: ds.skipped_rows,
        years,
    })
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SelectReport {
    pub schema_version: u32,
    pub input: String,
    pub accumulation: AccumulationKind,
    pub c_param: f64,
    pub alpha: f64,
    pub gof_method: PvalueMethod,
    pub grid_lower: f64,
    pub grid_upper: f64,
    pub grid_count: usize,
    pub seed: u64,
    pub years: Vec<YearSelection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct YearSelection {
    pub year: i32,
    pub n_claims: usize,
    pub status: SelectionStatus,
    pub k_hat: usize,
    pub chosen_threshold: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub n_exceedances: Option<usize>,
    pub candidates: Vec<CandidateRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub threshold: f64,
    pub n_exceedances: usize,
    pub p_value: f64,
    pub running_average: f64,
    pub fit_failed: bool,
}

impl SelectReport {
    /// True when any reported year ended with no usable threshold.
    pub fn any_no_threshold(&self) -> bool {
        self.years.iter().any(|y| y.status == SelectionStatus::AllRejectedNoThreshold)
    }
}

fn select_for_values(config: &RunConfig, values: &[f64]) -> Result<(CandidateGrid, crate::select::SelectionResult)> {
    let grid = match config.threshold {
        // An explicit threshold becomes a degenerate two-point grid in
        // reporting terms; selection is skipped entirely elsewhere.
        Some(_) => unreachable!("explicit threshold runs skip selection"),
        None => build_candidate_grid(
            values,
            config.grid_lower,
            config.grid_upper,
            config.grid_count,
            config.min_exceedances,
        )?,
    };
    let spec = config.accumulation_spec()?;
    let result = select_threshold(values, &grid, &spec, &config.gof_config())?;
    Ok((grid, result))
}

fn year_selection(config: &RunConfig, year: i32, values: &[f64]) -> Result<YearSelection> {
    if let Some(threshold) = config.threshold {
        // Explicit threshold: single fit, no accumulation scan.
        let (fit, ad) = crate::gof::gof_test_with_fit(values, threshold, &config.gof_config())?;
        return Ok(YearSelection {
            year,
            n_claims: values.len(),
            status: SelectionStatus::Selected,
            k_hat: 0,
            chosen_threshold: Some(threshold),
            sigma: Some(fit.params.sigma),
            gamma: Some(fit.params.gamma),
            n_exceedances: Some(fit.n_exceedances),
            candidates: vec![CandidateRow {
                threshold,
                n_exceedances: ad.n,
                p_value: ad.p_value,
                running_average: f64::NAN,
                fit_failed: false,
            }],
        });
    }
    let (_grid, result) = select_for_values(config, values)?;
    let chosen = result.chosen_fit();
    Ok(YearSelection {
        year,
        n_claims: values.len(),
        status: result.status,
        k_hat: result.k_hat,
        chosen_threshold: result.chosen_threshold,
        sigma: chosen.map(|f| f.params.sigma),
        gamma: chosen.map(|f| f.params.gamma),
        n_exceedances: chosen.map(|f| f.n_exceedances),
        candidates: result
            .candidates
            .iter()
            .zip(&result.running_averages)
            .map(|(c, &avg)| CandidateRow {
                threshold: c.threshold,
                n_exceedances: c.n_exceedances,
                p_value: c.p_value,
                running_average: avg,
                fit_failed: c.fit_failed,
            })
            .collect(),
    })
}

pub fn cmd_select(config: &RunConfig) -> Result<SelectReport> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let mut years = Vec::new();
    for year in config.effective_years(&ds) {
        let values = filter_year(&ds, year)?;
        years.push(year_selection(config, year, &values)?);
    }
    Ok(SelectReport {
        schema_version: SCHEMA_VERSION,
        input: ds.source_path.clone(),
        accumulation: config.accumulation,
        c_param: config.c_param,
        alpha: config.alpha,
        gof_method: config.gof_method,
        grid_lower: config.grid_lower,
        grid_upper: config.grid_upper,
        grid_count: config.grid_count,
        seed: config.seed,
        years,
    })
}

// ---------------------------------------------------------------------------
// var
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct VarReport {
    pub schema_version: u32,
    pub input: String,
    pub accumulation: AccumulationKind,
    pub alpha: f64,
    pub ci_level: f64,
    pub seed: u64,
    pub years: Vec<YearVar>,
}

#[derive(Debug, Clone, Serialize)]
pub struct YearVar {
    pub year: i32,
    pub status: SelectionStatus,
    pub threshold: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub n_exceedances: Option<usize>,
    pub rows: Vec<VarRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarRow {
    pub level: f64,
    pub empirical: f64,
    pub var: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub omega: Option<f64>,
    /// True when the interval fails to cover the empirical estimate.
    pub empirical_outside_ci: Option<bool>,
}

impl VarReport {
    pub fn any_no_threshold(&self) -> bool {
        self.years.iter().any(|y| y.status == SelectionStatus::AllRejectedNoThreshold)
    }
}

pub fn cmd_var(config: &RunConfig) -> Result<VarReport> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let mut years = Vec::new();
    for year in config.effective_years(&ds) {
        let values = filter_year(&ds, year)?;
        let sel = year_selection(config, year, &values)?;
        let fit: Option<GpdFit> = match (sel.chosen_threshold, sel.sigma, sel.gamma) {
            (Some(mu), Some(_), Some(_)) => {
                let exc = crate::gpd::ExceedanceSet::from_sample(&values, mu)?;
                Some(crate::gpd::fit_gpd_with(
                    &exc,
                    &crate::gpd::FitConfig {
                        min_exceedances: config.min_exceedances,
                        ..Default::default()
                    },
                )?)
            }
            _ => None,
        };
        let mut rows = Vec::new();
        for &level in &config.levels {
            let emp = empirical_var(&values, level)?;
            let est = fit.as_ref().map(|f| var_with_ci(f, level, config.ci_level)).transpose()?;
            rows.push(VarRow {
                level,
                empirical: emp,
                var: est.map(|e| e.var),
                ci_lower: est.map(|e| e.ci_lower),
                ci_upper: est.map(|e| e.ci_upper),
                omega: est.map(|e| e.omega),
                empirical_outside_ci: est.map(|e| !(e.ci_lower <= emp && emp <= e.ci_upper)),
            });
        }
        years.push(YearVar {
            year,
            status: sel.status,
            threshold: sel.chosen_threshold,
            sigma: sel.sigma,
            gamma: sel.gamma,
            n_exceedances: sel.n_exceedances,
            rows,
        });
    }
    Ok(VarReport {
        schema_version: SCHEMA_VERSION,
        input: ds.source_path.clone(),
        accumulation: config.accumulation,
        alpha: config.alpha,
        ci_level: config.ci_level,
        seed: config.seed,
        years,
    })
}

// ---------------------------------------------------------------------------
// plot-cdf
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CdfCurvePoint {
    pub year: i32,
    pub curve: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct PlotArtifacts {
    /// Tidy curve rows per year (empirical plus one curve per fit).
    pub points: Vec<CdfCurvePoint>,
    /// SVG document per year.
    pub svgs: Vec<(i32, String)>,
    pub any_no_threshold: bool,
}

pub fn cmd_plot_cdf(config: &RunConfig) -> Result<PlotArtifacts> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let mut points = Vec::new();
    let mut svgs = Vec::new();
    let mut any_no_threshold = false;
    for year in config.effective_years(&ds) {
        let values = filter_year(&ds, year)?;
        let sel = year_selection(config, year, &values)?;
        let ecdf = Ecdf::new(&values)?;
        let (lo, hi) = (ecdf.min(), ecdf.max());
        let xs: Vec<f64> = (0..config.points)
            .map(|i| lo + (hi - lo) * i as f64 / (config.points - 1) as f64)
            .collect();
        let mut year_curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();

        let emp: Vec<(f64, f64)> = xs.iter().map(|&x| (x, ecdf.eval(x))).collect();
        year_curves.push(("empirical".to_string(), emp));

        match (sel.chosen_threshold, sel.sigma, sel.gamma) {
            (Some(mu), Some(sigma), Some(gamma)) => {
                let params = crate::gpd::GpdParams::new(mu, sigma, gamma)?;
                let fitted: Vec<(f64, f64)> = xs
                    .iter()
                    .filter(|&&x| x >= mu)
                    .map(|&x| Ok((x, gpd_cdf(x, &params)?)))
                    .collect::<Result<_>>()?;
                year_curves.push((config.accumulation.label().to_string(), fitted));
            }
            _ => any_no_threshold = true,
        }

        for (curve, pts) in &year_curves {
            for &(x, y) in pts {
                points.push(CdfCurvePoint { year, curve: curve.clone(), x, y });
            }
        }
        svgs.push((
            year,
            svg::render_cdf_overlay(&format!("CDF comparison, {year}"), &year_curves),
        ));
    }
    Ok(PlotArtifacts { points, svgs, any_no_threshold })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub scenario_file: String,
    pub table: ScenarioTable,
}

pub fn cmd_simulate(config: &RunConfig, scenario_path: &Path) -> Result<SimulateReport> {
    config.validate()?;
    let specs = scenario_file::load_scenarios(scenario_path)?;
    let table = scenario_table(&specs)?;
    Ok(SimulateReport {
        schema_version: SCHEMA_VERSION,
        scenario_file: scenario_path.display().to_string(),
        table,
    })
}

// ---------------------------------------------------------------------------
// Artifact writing
// ---------------------------------------------------------------------------

fn want(config: &RunConfig, f: OutputFormat) -> bool {
    config.formats.contains(&f)
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::FileUnreadable {
        path: dir.display().to_string(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::FileUnreadable {
        path: path.display().to_string(),
        source: e,
    })?;
    written.push(path);
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or(String::new(), |x| format!("{x:.digits$}"))
}

pub fn write_summary(report: &SummaryReport, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if want(config, OutputFormat::Json) {
        write_file(&config.out_dir, "summary.json", &to_json(report), &mut written)?;
    }
    if want(config, OutputFormat::Csv) {
        let mut csv = String::from("year,n,mean,sd,q1,q2,q3,max\n");
        for y in &report.years {
            csv.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                y.year, y.n, y.mean, y.sd, y.q1, y.q2, y.q3, y.max
            ));
        }
        write_file(&config.out_dir, "summary.csv", &csv, &mut written)?;
    }
    if want(config, OutputFormat::Text) {
        let mut txt = format!(
            "{:>6} {:>7} {:>9} {:>9} {:>8} {:>8} {:>8} {:>10}\n",
            "year", "n", "mean", "sd", "q1", "q2", "q3", "max"
        );
        for y in &report.years {
            txt.push_str(&format!(
                "{:>6} {:>7} {:>9.3} {:>9.3} {:>8.3} {:>8.3} {:>8.3} {:>10.3}\n",
                y.year, y.n, y.mean, y.sd, y.q1, y.q2, y.q3, y.max
            ));
        }
        write_file(&config.out_dir, "summary.txt", &txt, &mut written)?;
    }
    Ok(written)
}

pub fn write_select(report: &SelectReport, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if want(config, OutputFormat::Json) {
        write_file(&config.out_dir, "select.json", &to_json(report), &mut written)?;
    }
    if want(config, OutputFormat::Csv) {
        let mut csv =
            String::from("year,candidate_index,threshold,n_exceedances,p_value,running_average,fit_failed,chosen\n");
        for y in &report.years {
            for (i, c) in y.candidates.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{:.6},{},{:.6},{},{},{}\n",
                    y.year,
                    i,
                    c.threshold,
                    c.n_exceedances,
                    c.p_value,
                    if c.running_average.is_nan() {
                        String::new()
                    } else {
                        format!("{:.6}", c.running_average)
                    },
                    c.fit_failed,
                    Some(c.threshold) == y.chosen_threshold
                ));
            }
        }
        write_file(&config.out_dir, "select.csv", &csv, &mut written)?;
    }
    if want(config, OutputFormat::Text) {
        let mut txt = format!(
            "accumulation={} alpha={} gof={:?}\n{:>6} {:>10} {:>9} {:>9} {:>6} {:>8} {:>26}\n",
            report.accumulation.label(),
            report.alpha,
            report.gof_method,
            "year",
            "threshold",
            "sigma",
            "gamma",
            "k_hat",
            "n_exc",
            "status"
        );
        for y in &report.years {
            txt.push_str(&format!(
                "{:>6} {:>10} {:>9} {:>9} {:>6} {:>8} {:>26}\n",
                y.year,
                fmt_opt(y.chosen_threshold, 3),
                fmt_opt(y.sigma, 3),
                fmt_opt(y.gamma, 3),
                y.k_hat,
                y.n_exceedances.map_or(String::new(), |n| n.to_string()),
                format!("{:?}", y.status)
            ));
        }
        write_file(&config.out_dir, "select.txt", &txt, &mut written)?;
    }
    Ok(written)
}

pub fn write_var(report: &VarReport, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if want(config, OutputFormat::Json) {
        write_file(&config.out_dir, "var.json", &to_json(report), &mut written)?;
    }
    if want(config, OutputFormat::Csv) {
        let mut csv = String::from(
            "year,level,empirical,var,ci_lower,ci_upper,omega,empirical_outside_ci,threshold,sigma,gamma,n_exceedances\n",
        );
        for y in &report.years {
            for r in &y.rows {
                csv.push_str(&format!(
                    "{},{},{:.6},{},{},{},{},{},{},{},{},{}\n",
                    y.year,
                    r.level,
                    r.empirical,
                    fmt_opt(r.var, 6),
                    fmt_opt(r.ci_lower, 6),
                    fmt_opt(r.ci_upper, 6),
                    fmt_opt(r.omega, 6),
                    r.empirical_outside_ci.map_or(String::new(), |b| b.to_string()),
                    fmt_opt(y.threshold, 6),
                    fmt_opt(y.sigma, 6),
                    fmt_opt(y.gamma, 6),
                    y.n_exceedances.map_or(String::new(), |n| n.to_string())
                ));
            }
        }
        write_file(&config.out_dir, "var.csv", &csv, &mut written)?;
    }
    if want(config, OutputFormat::Text) {
        let mut txt = format!(
            "{:>6} {:>7} {:>10} {:>10} {:>22} {:>9}\n",
            "year", "level", "empirical", "var", "ci", "outside"
        );
        for y in &report.years {
            for r in &y.rows {
                let ci = match (r.ci_lower, r.ci_upper) {
                    (Some(a), Some(b)) => format!("({a:.2}, {b:.2})"),
                    _ => String::from("-"),
                };
                txt.push_str(&format!(
                    "{:>6} {:>7} {:>10.2} {:>10} {:>22} {:>9}\n",
                    y.year,
                    r.level,
                    r.empirical,
                    fmt_opt(r.var, 2),
                    ci,
                    r.empirical_outside_ci.map_or(String::from("-"), |b| b.to_string())
                ));
            }
        }
        write_file(&config.out_dir, "var.txt", &txt, &mut written)?;
    }
    Ok(written)
}

pub fn write_plot(artifacts: &PlotArtifacts, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut by_year: Vec<i32> = artifacts.points.iter().map(|p| p.year).collect();
    by_year.dedup();
    for &year in &by_year {
        let mut csv = String::from("curve,x,y\n");
        for p in artifacts.points.iter().filter(|p| p.year == year) {
            csv.push_str(&format!("{},{:.8},{:.8}\n", p.curve, p.x, p.y));
        }
        write_file(&config.out_dir, &format!("cdf_{year}.csv"), &csv, &mut written)?;
    }
    for (year, svg) in &artifacts.svgs {
        write_file(&config.out_dir, &format!("cdf_{year}.svg"), svg, &mut written)?;
    }
    Ok(written)
}

pub fn write_simulation(report: &SimulateReport, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if want(config, OutputFormat::Json) {
        write_file(&config.out_dir, "simulation.json", &to_json(report), &mut written)?;
    }
    if want(config, OutputFormat::Csv) {
        write_file(&config.out_dir, "simulation.csv", &report.table.to_csv(), &mut written)?;
    }
    if want(config, OutputFormat::Text) {
        write_file(
            &config.out_dir,
            "simulation.txt",
            &report.table.to_aligned_text(),
            &mut written,
        )?;
    }
    Ok(written)
}
