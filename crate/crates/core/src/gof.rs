//! Anderson–Darling goodness-of-fit testing for fitted GPD tails.
//!
//! A fitted tail is judged through the probability integral transform:
//! exceedances mapped through the fitted CDF should be uniform, and the
//! Anderson–Darling statistic
//!
//! ```text
//! A^2 = -n - (1/n) sum_i (2i - 1) [log z_(i) + log(1 - z_(n+1-i))]
//! ```
//!
//! weighs the tails of that transformed sample. P-values come from one of two
//! interchangeable sources:
//!
//! - an embedded critical-value table for the both-parameters-estimated case,
//!   indexed by fitted shape (Monte Carlo calibrated; see
//!   `data/ad_critical_values.tsv`), interpolated in (shape, log A^2) and
//!   clamped to [0.001, 0.5];
//! - a parametric bootstrap: simulate under the fitted null, refit and re-test
//!   per replicate, with the p-value resolution set by the replicate count.

use crate::error::{Error, Result};
use crate::gpd::{
    fit_gpd_with, gpd_cdf, gpd_sample, ExceedanceSet, FitConfig, GpdFit, GpdParams,
    DEFAULT_MIN_EXCEEDANCES,
};
use crate::mix_seed;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::OnceLock;

/// Transformed values are clamped into this open interval before taking logs.
pub const Z_CLAMP: f64 = 1e-12;

/// P-value bounds in table mode; the embedded table only spans these levels.
pub const TABLE_P_MIN: f64 = 0.001;
pub const TABLE_P_MAX: f64 = 0.5;

/// Default parametric-bootstrap replicate count.
pub const DEFAULT_BOOTSTRAP_B: usize = 499;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PvalueMethod {
    TableInterpolation,
    ParametricBootstrap,
}

/// Outcome of an Anderson–Darling test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdResult {
    /// The A^2 statistic.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of exceedances tested.
    pub n: usize,
    /// Source of the p-value actually used.
    pub method: PvalueMethod,
}

/// How p-values are produced and with what resources.
#[derive(Debug, Clone)]
pub struct GofConfig {
    pub method: PvalueMethod,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub min_exceedances: usize,
    /// In table mode, fall back to the bootstrap when the fitted shape lands
    /// outside the table range instead of erroring.
    pub table_fallback_bootstrap: bool,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            method: PvalueMethod::TableInterpolation,
            bootstrap_b: DEFAULT_BOOTSTRAP_B,
            seed: 0,
            min_exceedances: DEFAULT_MIN_EXCEEDANCES,
            table_fallback_bootstrap: true,
        }
    }
}

/// Maps a sample through the fitted CDF and sorts ascending.
pub fn probability_integral_transform(sample: &[f64], params: &GpdParams) -> Result<Vec<f64>> {
    let mut z = Vec::with_capacity(sample.len());
    for &x in sample {
        if !params.contains(x) {
            return Err(Error::Domain(format!("sample value {x} outside fitted support")));
        }
        z.push(gpd_cdf(x, params)?);
    }
    z.sort_by(f64::total_cmp);
    Ok(z)
}

/// Anderson–Darling statistic for uniformity of `z` (sorted ascending; values
/// are clamped away from 0 and 1 before the logs).
pub fn ad_statistic(z: &[f64]) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = z.len();
    let mut zz: Vec<f64> = z.iter().map(|v| v.clamp(Z_CLAMP, 1.0 - Z_CLAMP)).collect();
    zz.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let w = (2 * (i + 1) - 1) as f64;
        sum += w * (zz[i].ln() + (1.0 - zz[n - 1 - i]).ln());
    }
    Ok(-nf - sum / nf)
}

/// P-value for an observed statistic given the fitted shape.
///
/// `n`, `bootstrap_b` and `seed` only matter in bootstrap mode.
pub fn ad_pvalue(
    statistic: f64,
    shape: f64,
    n: usize,
    method: PvalueMethod,
    bootstrap_b: usize,
    seed: u64,
) -> Result<f64> {
    if !statistic.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite statistic {statistic}")));
    }
    match method {
        PvalueMethod::TableInterpolation => ad_pvalue_table(statistic, shape),
        PvalueMethod::ParametricBootstrap => {
            ad_pvalue_bootstrap(statistic, shape, n, bootstrap_b, seed)
        }
    }
}

/// Table-mode p-value, clamped to `[TABLE_P_MIN, TABLE_P_MAX]`.
pub fn ad_pvalue_table(statistic: f64, shape: f64) -> Result<f64> {
    critical_table().p_value(shape, statistic)
}

/// Bootstrap p-value: fraction of replicates (simulate at the fitted shape,
/// refit, re-test) whose statistic is at least the observed one. The result
/// lives on the grid `{1/(B+1), ..., 1}`; replicates run concurrently with
/// derived seeds, so the outcome is independent of execution order.
pub fn ad_pvalue_bootstrap(
    statistic: f64,
    shape: f64,
    n: usize,
    b: usize,
    seed: u64,
) -> Result<f64> {
    if b == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one replicate".into()));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    // Scale is irrelevant: the statistic is invariant under rescaling, so
    // replicates are drawn at unit scale.
    let null = GpdParams::new(0.0, 1.0, shape)?;
    let cfg = FitConfig {
        min_exceedances: n.min(DEFAULT_MIN_EXCEEDANCES),
        ..FitConfig::default()
    };
    let outcomes: Vec<Option<bool>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let ys = gpd_sample(&null, n, mix_seed(seed, rep as u64));
            replicate_statistic(ys, &cfg).map(|a2| a2 >= statistic)
        })
        .collect();
    let (mut effective, mut at_least) = (0usize, 0usize);
    for o in outcomes.into_iter().flatten() {
        effective += 1;
        at_least += o as usize;
    }
    if effective == 0 {
        return Err(Error::NonConvergence("every bootstrap replicate failed to fit".into()));
    }
    Ok((1 + at_least) as f64 / (effective + 1) as f64)
}

fn replicate_statistic(ys: Vec<f64>, cfg: &FitConfig) -> Option<f64> {
    let exc = ExceedanceSet::from_exceedances(ys, 0.0).ok()?;
    let fit = fit_gpd_with(&exc, cfg).ok()?;
    let z = probability_integral_transform(exc.values(), &tail_of(&fit)).ok()?;
    ad_statistic(&z).ok()
}

/// Fitted exceedance distribution with the location placed at zero.
fn tail_of(fit: &GpdFit) -> GpdParams {
    GpdParams { mu: 0.0, sigma: fit.params.sigma, gamma: fit.params.gamma }
}

/// Fits the exceedances above `threshold` and tests the fit; returns both.
///
/// The composition is deterministic given the config seed.
pub fn gof_test_with_fit(
    sample: &[f64],
    threshold: f64,
    cfg: &GofConfig,
) -> Result<(GpdFit, AdResult)> {
    let exc = ExceedanceSet::from_sample(sample, threshold)?;
    if exc.len() < cfg.min_exceedances {
        return Err(Error::InsufficientData { n: exc.len(), min: cfg.min_exceedances });
    }
    let fit_cfg = FitConfig { min_exceedances: cfg.min_exceedances, ..FitConfig::default() };
    let fit = fit_gpd_with(&exc, &fit_cfg)?;
    let z = probability_integral_transform(exc.values(), &tail_of(&fit))?;
    let statistic = ad_statistic(&z)?;
    let n = exc.len();
    let shape = fit.params.gamma;

    let (p_value, method) = match cfg.method {
        PvalueMethod::ParametricBootstrap => (
            ad_pvalue_bootstrap(statistic, shape, n, cfg.bootstrap_b, cfg.seed)?,
            PvalueMethod::ParametricBootstrap,
        ),
        PvalueMethod::TableInterpolation => match ad_pvalue_table(statistic, shape) {
            Ok(p) => (p, PvalueMethod::TableInterpolation),
            Err(Error::UnsupportedShape { .. }) if cfg.table_fallback_bootstrap => (
                ad_pvalue_bootstrap(statistic, shape, n, cfg.bootstrap_b, cfg.seed)?,
                PvalueMethod::ParametricBootstrap,
            ),
            Err(e) => return Err(e),
        },
    };
    Ok((fit, AdResult { statistic, p_value, n, method }))
}

/// Shift, fit, transform, test.
pub fn gof_test(sample: &[f64], threshold: f64, cfg: &GofConfig) -> Result<AdResult> {
    gof_test_with_fit(sample, threshold, cfg).map(|(_, ad)| ad)
}

// ---------------------------------------------------------------------------
// Embedded critical-value table
// ---------------------------------------------------------------------------

struct CriticalTable {
    shapes: Vec<f64>,
    /// Upper-tail significance levels, descending (0.5 first).
    levels: Vec<f64>,
    /// `cv[i][j]`: critical value for `shapes[i]` at `levels[j]`, increasing in j.
    cv: Vec<Vec<f64>>,
}

static TABLE: OnceLock<CriticalTable> = OnceLock::new();

fn critical_table() -> &'static CriticalTable {
    TABLE.get_or_init(|| {
        parse_table(include_str!("../data/ad_critical_values.tsv"))
            .expect("embedded critical-value table is malformed")
    })
}

fn parse_table(text: &str) -> std::result::Result<CriticalTable, String> {
    let mut lines =
        text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("empty table")?;
    let mut cols = header.split_whitespace();
    if cols.next() != Some("shape") {
        return Err("first header column must be `shape`".into());
    }
    let levels: Vec<f64> = cols
        .map(|c| c.parse().map_err(|e| format!("bad level {c}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if levels.is_empty() || levels.windows(2).any(|w| w[0] <= w[1]) {
        return Err("levels must be strictly descending".into());
    }
    let mut shapes = Vec::new();
    let mut cv = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        let shape: f64 =
            it.next().ok_or("short row")?.parse().map_err(|e| format!("bad shape: {e}"))?;
        let row: Vec<f64> = it
            .map(|c| c.parse().map_err(|e| format!("bad value {c}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if row.len() != levels.len() {
            return Err(format!(
                "row for shape {shape} has {} values, need {}",
                row.len(),
                levels.len()
            ));
        }
        shapes.push(shape);
        cv.push(row);
    }
    if shapes.len() < 2 || shapes.windows(2).any(|w| w[0] >= w[1]) {
        return Err("shapes must be strictly ascending".into());
    }
    Ok(CriticalTable { shapes, levels, cv })
}

impl CriticalTable {
    fn p_value(&self, shape: f64, statistic: f64) -> Result<f64> {
        let (&lo, &hi) = (self.shapes.first().unwrap(), self.shapes.last().unwrap());
        if !shape.is_finite() || shape < lo || shape > hi {
            return Err(Error::UnsupportedShape { shape, min: lo, max: hi });
        }
        let i = match self.shapes.binary_search_by(|s| s.total_cmp(&shape)) {
            Ok(i) => i.min(self.shapes.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.shapes.len() - 2),
        };
        let w = (shape - self.shapes[i]) / (self.shapes[i + 1] - self.shapes[i]);
        let row: Vec<f64> =
            self.cv[i].iter().zip(&self.cv[i + 1]).map(|(a, b)| (1.0 - w) * a + w * b).collect();

        if statistic <= row[0] {
            return Ok(self.levels[0]); // upper clamp
        }
        if statistic >= *row.last().unwrap() {
            return Ok(*self.levels.last().unwrap()); // lower clamp
        }
        let j = row.partition_point(|&c| c <= statistic) - 1;
        let (c0, c1) = (row[j], row[j + 1]);
        if c1 - c0 < 1e-12 {
            return Ok(self.levels[j + 1]);
        }
        // Linear in log statistic between adjacent tabulated levels.
        let t = (statistic.ln() - c0.ln()) / (c1.ln() - c0.ln());
        Ok(self.levels[j] + t * (self.levels[j + 1] - self.levels[j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::std_normal_quantile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(mu: f64, sigma: f64, gamma: f64) -> GpdParams {
        GpdParams::new(mu, sigma, gamma).unwrap()
    }

    #[test]
    fn pit_at_location_is_zero() {
        let pr = params(2.0, 1.0, 0.4);
        assert_eq!(probability_integral_transform(&[2.0], &pr).unwrap(), vec![0.0]);
    }

    #[test]
    fn pit_is_uniform_for_true_model() {
        let pr = params(0.0, 1.0, 0.5);
        let xs = gpd_sample(&pr, 10_000, 77);
        let z = probability_integral_transform(&xs, &pr).unwrap();
        let n = z.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &v) in z.iter().enumerate() {
            ks = ks.max((v - i as f64 / n).abs()).max(((i + 1) as f64 / n - v).abs());
        }
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn pit_inverts_quantiles() {
        let pr = params(1.0, 2.0, 0.8);
        let xs: Vec<f64> =
            [0.1, 0.5, 0.9].iter().map(|&p| crate::gpd::gpd_quantile(p, &pr).unwrap()).collect();
        let z = probability_integral_transform(&xs, &pr).unwrap();
        for (a, b) in z.iter().zip([0.1, 0.5, 0.9]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pit_rejects_outside_support() {
        let pr = params(0.0, 1.0, -0.5); // support [0, 2]
        assert!(probability_integral_transform(&[-0.1], &pr).is_err());
        assert!(probability_integral_transform(&[2.5], &pr).is_err());
    }

    #[test]
    fn ad_single_point_closed_form() {
        // z = {0.5}: A^2 = -1 - (log 0.5 + log 0.5) = 2 log 2 - 1.
        let a2 = ad_statistic(&[0.5]).unwrap();
        let expected = 2.0 * std::f64::consts::LN_2 - 1.0;
        assert!((a2 - expected).abs() < 1e-14);
    }

    #[test]
    fn ad_matches_compensated_oracle() {
        let n = 100;
        let z: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let a2 = ad_statistic(&z).unwrap();

        // Independent re-summation in reverse order with Kahan compensation.
        let nf = n as f64;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in (0..n).rev() {
            let term =
                (2.0 * (i as f64 + 1.0) - 1.0) * (z[i].ln() + (1.0 - z[n - 1 - i]).ln());
            let t = sum + term;
            comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
        }
        let oracle = -nf - (sum + comp) / nf;
        assert!((a2 - oracle).abs() < 1e-12, "{a2} vs {oracle}");
    }

    #[test]
    fn ad_symmetric_under_complement() {
        let z = [0.04, 0.21, 0.33, 0.58, 0.77, 0.93];
        let mut flipped: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
        flipped.sort_by(f64::total_cmp);
        let a = ad_statistic(&z).unwrap();
        let b = ad_statistic(&flipped).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ad_rejects_empty() {
        assert!(matches!(ad_statistic(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn table_pvalue_perfect_fit_hits_upper_clamp() {
        let p = ad_pvalue_table(0.0, 0.5).unwrap();
        assert_eq!(p, TABLE_P_MAX);
    }

    #[test]
    fn table_pvalue_monotone_in_statistic() {
        for &shape in &[-0.2, 0.0, 0.5, 1.0, 1.8] {
            let mut prev = 1.0;
            let mut a2 = 0.05;
            while a2 < 20.0 {
                let p = ad_pvalue_table(a2, shape).unwrap();
                assert!(p <= prev + 1e-12, "shape={shape}, a2={a2}: {p} > {prev}");
                assert!((TABLE_P_MIN..=TABLE_P_MAX).contains(&p));
                prev = p;
                a2 *= 1.3;
            }
        }
    }

    #[test]
    fn table_rejects_unsupported_shape() {
        assert!(matches!(ad_pvalue_table(1.0, 5.0), Err(Error::UnsupportedShape { .. })));
        assert!(matches!(ad_pvalue_table(1.0, -0.8), Err(Error::UnsupportedShape { .. })));
    }

    #[test]
    fn bootstrap_null_pvalues_are_calibrated() {
        // Mean bootstrap p-value over data simulated under the null is ~0.5.
        let truth = params(0.0, 1.0, 0.5);
        let reps = 200;
        let ps: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let xs = gpd_sample(&truth, 100, 9_000 + r as u64);
                let cfg = GofConfig {
                    method: PvalueMethod::ParametricBootstrap,
                    bootstrap_b: 199,
                    seed: 5_000 + r as u64,
                    ..GofConfig::default()
                };
                gof_test(&xs, 0.0, &cfg).unwrap().p_value
            })
            .collect();
        let mean = ps.iter().sum::<f64>() / ps.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean bootstrap p = {mean}");
    }

    #[test]
    fn table_mode_size_is_calibrated() {
        // Rejection rate at nominal 0.05 for data that truly follow the null.
        let truth = params(0.0, 1.0, 0.5);
        let reps = 500;
        let rejections: usize = (0..reps)
            .into_par_iter()
            .map(|r| {
                let xs = gpd_sample(&truth, 500, 40_000 + r as u64);
                let ad = gof_test(&xs, 0.0, &GofConfig::default()).unwrap();
                (ad.p_value < 0.05) as usize
            })
            .sum();
        let rate = rejections as f64 / reps as f64;
        assert!((0.02..=0.09).contains(&rate), "rejection rate = {rate}");
    }

    #[test]
    fn rejects_contaminated_tail_with_power() {
        // Lognormal body below the tail threshold; testing at a threshold that
        // is clearly too low must reject most of the time.
        let reps = 100;
        let rejections: usize = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(60_000 + r as u64);
                let tail = params(2.0, 0.8, 0.8);
                let xs: Vec<f64> = (0..500)
                    .map(|_| {
                        if rng.random::<f64>() < 0.3 {
                            // Lognormal(2, 0.5) conditioned below 2.
                            let mass = crate::normal::std_normal_cdf((2.0f64.ln() - 2.0) / 0.5);
                            let u: f64 = rng.random::<f64>().max(1e-15);
                            (2.0 + 0.5 * std_normal_quantile(u * mass)).exp()
                        } else {
                            crate::gpd::gpd_quantile(rng.random(), &tail).unwrap()
                        }
                    })
                    .collect();
                let too_low = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let ad = gof_test(&xs, too_low, &GofConfig::default()).unwrap();
                (ad.p_value < 0.05) as usize
            })
            .sum();
        let power = rejections as f64 / reps as f64;
        assert!(power > 0.5, "power = {power}");
    }

    #[test]
    fn statistic_distribution_stable_under_higher_threshold() {
        // For data that are GPD above both thresholds, moving the threshold up
        // must not systematically inflate the statistic.
        let truth = params(0.0, 1.0, 0.6);
        let reps = 200;
        let diffs: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let xs = gpd_sample(&truth, 600, 70_000 + r as u64);
                let lo = gof_test(&xs, 0.0, &GofConfig::default()).unwrap().statistic;
                let mut sorted = xs.clone();
                sorted.sort_by(f64::total_cmp);
                let t = crate::data_io::quantile_sorted(&sorted, 0.3);
                let hi = gof_test(&xs, t, &GofConfig::default()).unwrap().statistic;
                hi - lo
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (diffs.len() - 1) as f64;
        let se = (var / diffs.len() as f64).sqrt();
        assert!(mean < 3.0 * se + 0.05, "mean diff = {mean}, se = {se}");
    }

    #[test]
    fn statistic_invariant_under_affine_rescaling() {
        let xs = gpd_sample(&params(0.0, 1.0, 0.4), 300, 123);
        let exc = ExceedanceSet::from_exceedances(xs.clone(), 0.0).unwrap();
        let fit = crate::gpd::fit_gpd(&exc).unwrap();
        let z = probability_integral_transform(exc.values(), &tail_of(&fit)).unwrap();
        let a = ad_statistic(&z).unwrap();

        let c = 250.0;
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let scaled_params = params(0.0, fit.params.sigma * c, fit.params.gamma);
        let z2 = probability_integral_transform(&scaled, &scaled_params).unwrap();
        let b = ad_statistic(&z2).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn table_and_bootstrap_agree_inside_table_range() {
        for (i, &shape) in [0.0, 0.5, 1.0].iter().enumerate() {
            let truth = params(0.0, 1.0, shape);
            let xs = gpd_sample(&truth, 500, 81_000 + i as u64);
            let table = gof_test(&xs, 0.0, &GofConfig::default()).unwrap();
            let boot = gof_test(
                &xs,
                0.0,
                &GofConfig {
                    method: PvalueMethod::ParametricBootstrap,
                    bootstrap_b: 499,
                    seed: 99,
                    ..GofConfig::default()
                },
            )
            .unwrap();
            // Comparison is only sharp away from the table clamps.
            if table.p_value > TABLE_P_MIN + 0.01 && table.p_value < TABLE_P_MAX - 0.01 {
                assert!(
                    (table.p_value - boot.p_value).abs() < 0.05,
                    "shape {shape}: table {} vs bootstrap {}",
                    table.p_value,
                    boot.p_value
                );
            }
        }
    }

    #[test]
    fn gof_test_deterministic_given_seed() {
        let xs = gpd_sample(&params(0.0, 1.0, 0.7), 200, 31);
        let cfg = GofConfig {
            method: PvalueMethod::ParametricBootstrap,
            bootstrap_b: 99,
            seed: 7,
            ..GofConfig::default()
        };
        let a = gof_test(&xs, 0.0, &cfg).unwrap();
        let b = gof_test(&xs, 0.0, &cfg).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.statistic, b.statistic);
    }
}
