//! Generalized Pareto distribution primitives and maximum-likelihood fitting.
//!
//! The distribution is parameterized by location `mu`, scale `sigma > 0` and
//! shape `gamma`:
//!
//! ```text
//! F(x) = 1 - (1 + gamma (x - mu) / sigma)^(-1/gamma)    gamma != 0
//! F(x) = 1 - exp(-(x - mu) / sigma)                     gamma  = 0
//! ```
//!
//! with support `x >= mu` for `gamma >= 0` and `mu <= x <= mu - sigma/gamma`
//! for `gamma < 0`.
//!
//! Fitting for a fixed threshold uses the classical one-dimensional profile
//! reduction: with `theta = gamma / sigma` the shape implied by any admissible
//! `theta` is `gamma(theta) = mean(log(1 + theta y_i))`, and the profile
//! log-likelihood
//!
//! ```text
//! l(theta) = -n - n log(sigma(theta)) - sum_i log(1 + theta y_i),
//! sigma(theta) = gamma(theta) / theta
//! ```
//!
//! is searched over `theta > -1 / max(y)`. The exponential limit `theta = 0`
//! (scale = mean of the exceedances) is always evaluated as a candidate of its
//! own because the reduction is singular there.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shapes with |gamma| below this evaluate through the exponential branch.
pub const GAMMA_EXP_EPS: f64 = 1e-12;

/// Default minimum number of exceedances accepted for fitting.
pub const DEFAULT_MIN_EXCEEDANCES: usize = 10;

/// Location/scale/shape triple of a generalized Pareto distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    /// Location (the threshold), in data units.
    pub mu: f64,
    /// Scale, strictly positive, in data units.
    pub sigma: f64,
    /// Shape, dimensionless.
    pub gamma: f64,
}

impl GpdParams {
    pub fn new(mu: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite GPD parameters (mu={mu}, sigma={sigma}, gamma={gamma})"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma, gamma })
    }

    /// Upper end of the support: finite only for negative shape.
    pub fn upper_support(&self) -> f64 {
        if self.gamma < 0.0 {
            self.mu - self.sigma / self.gamma
        } else {
            f64::INFINITY
        }
    }

    /// Whether `x` lies in the support.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.mu && x <= self.upper_support()
    }
}

/// CDF at `x`. Errors for `x` below the location.
pub fn gpd_cdf(x: f64, params: &GpdParams) -> Result<f64> {
    let y = x - params.mu;
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("x = {x} below location {}", params.mu)));
    }
    let z = y / params.sigma;
    if params.gamma.abs() < GAMMA_EXP_EPS {
        return Ok(-(-z).exp_m1());
    }
    let t = params.gamma * z;
    if t <= -1.0 {
        // Negative shape at or beyond the support endpoint: full mass below.
        return Ok(1.0);
    }
    Ok(-(-t.ln_1p() / params.gamma).exp_m1())
}

/// Quantile for `p` in `[0, 1)`; exact inverse of [`gpd_cdf`].
pub fn gpd_quantile(p: f64, params: &GpdParams) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile level must be in [0, 1), got {p}")));
    }
    let log1mp = (-p).ln_1p(); // log(1 - p) <= 0
    if params.gamma.abs() < GAMMA_EXP_EPS {
        Ok(params.mu - params.sigma * log1mp)
    } else {
        Ok(params.mu + params.sigma / params.gamma * (-params.gamma * log1mp).exp_m1())
    }
}

/// Density at `x`. Errors outside the support.
pub fn gpd_pdf(x: f64, params: &GpdParams) -> Result<f64> {
    let y = x - params.mu;
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("x = {x} below location {}", params.mu)));
    }
    let z = y / params.sigma;
    if params.gamma.abs() < GAMMA_EXP_EPS {
        return Ok((-z).exp() / params.sigma);
    }
    let t = 1.0 + params.gamma * z;
    if t < 0.0 {
        return Err(Error::Domain(format!(
            "x = {x} beyond upper support endpoint {}",
            params.upper_support()
        )));
    }
    if t == 0.0 {
        // Limit at the finite endpoint for gamma < 0.
        let exponent = -1.0 / params.gamma - 1.0;
        return Ok(if exponent > 0.0 {
            0.0
        } else if exponent == 0.0 {
            1.0 / params.sigma
        } else {
            f64::INFINITY
        });
    }
    Ok(((-1.0 / params.gamma - 1.0) * t.ln()).exp() / params.sigma)
}

/// Inverse-transform sampling with a deterministic, seedable generator.
///
/// The same seed always yields the same sample, independent of platform.
pub fn gpd_sample(params: &GpdParams, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random(); // in [0, 1): always a valid quantile level
            gpd_quantile(u, params).expect("uniform deviate is a valid quantile level")
        })
        .collect()
}

/// Non-negative exceedances `y_i = x_i - threshold`, sorted ascending.
#[derive(Debug, Clone)]
pub struct ExceedanceSet {
    values: Vec<f64>,
    threshold: f64,
}

impl ExceedanceSet {
    /// Wraps pre-computed exceedances. Values are validated (finite, >= 0)
    /// and sorted.
    pub fn from_exceedances(mut values: Vec<f64>, threshold: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "exceedances must be finite and non-negative".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, threshold })
    }

    /// Shifts a raw sample by `threshold`, keeping the non-negative part.
    pub fn from_sample(data: &[f64], threshold: f64) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample contains non-finite values".into()));
        }
        let mut values: Vec<f64> =
            data.iter().filter(|&&x| x >= threshold).map(|&x| x - threshold).collect();
        values.sort_by(f64::total_cmp);
        Ok(Self { values, threshold })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn y_max(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }
}

/// Result of a profile-likelihood GPD fit.
#[derive(Debug, Clone, Serialize)]
pub struct GpdFit {
    /// Fitted parameters; `mu` is the threshold the exceedances were taken at.
    pub params: GpdParams,
    /// Profile parameter at the optimum, `theta = gamma / sigma`.
    pub theta_hat: f64,
    /// Log-likelihood of the exceedances at the optimum.
    pub log_likelihood: f64,
    pub n_exceedances: usize,
    pub converged: bool,
    /// True iff the fitted shape is above -1/2, where the MLE is
    /// asymptotically normal and efficient.
    pub mle_regularity_ok: bool,
}

/// Knobs for the profile search. Defaults suit all in-crate uses.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub min_exceedances: usize,
    /// Log-spaced bracketing points on each side of zero.
    pub grid_points: usize,
    /// Relative width at which the bracket refinement stops.
    pub theta_rel_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { min_exceedances: DEFAULT_MIN_EXCEEDANCES, grid_points: 64, theta_rel_tol: 1e-10 }
    }
}

/// Profile log-likelihood at `theta`.
///
/// Requires `1 + theta y_i > 0` for every exceedance and a nonzero implied
/// shape; `theta = 0` is outside the profile's domain (the exponential limit
/// is handled by [`fit_gpd`] as a separate candidate).
pub fn profile_loglik(theta: f64, exceedances: &ExceedanceSet) -> Result<f64> {
    if exceedances.is_empty() {
        return Err(Error::EmptyInput);
    }
    profile_value(theta, exceedances.values()).ok_or_else(|| {
        Error::Domain(format!(
            "theta = {theta} violates 1 + theta*y > 0 or implies a zero shape"
        ))
    })
}

/// Core profile evaluation; `None` when `theta` is inadmissible.
fn profile_value(theta: f64, ys: &[f64]) -> Option<f64> {
    if theta == 0.0 {
        return None;
    }
    let n = ys.len() as f64;
    let mut s = 0.0;
    for &y in ys {
        let t = theta * y;
        if t <= -1.0 {
            return None;
        }
        s += t.ln_1p();
    }
    if s == 0.0 {
        return None; // implied shape is zero (all exceedances zero)
    }
    let sigma = s / (n * theta);
    if sigma <= 0.0 {
        return None;
    }
    Some(-n - n * sigma.ln() - s)
}

/// Full log-likelihood of exceedances under `(sigma, gamma)` (location zero).
pub fn gpd_loglik(sigma: f64, gamma: f64, ys: &[f64]) -> f64 {
    if sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = ys.len() as f64;
    if gamma.abs() < GAMMA_EXP_EPS {
        let sum: f64 = ys.iter().sum();
        return -n * sigma.ln() - sum / sigma;
    }
    let mut acc = -n * sigma.ln();
    let c = 1.0 + 1.0 / gamma;
    for &y in ys {
        let t = gamma * y / sigma;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        acc -= c * t.ln_1p();
    }
    acc
}

/// Maximum-likelihood fit of `(sigma, gamma)` for the given exceedances.
pub fn fit_gpd(exceedances: &ExceedanceSet) -> Result<GpdFit> {
    fit_gpd_with(exceedances, &FitConfig::default())
}

pub fn fit_gpd_with(exceedances: &ExceedanceSet, cfg: &FitConfig) -> Result<GpdFit> {
    let ys = exceedances.values();
    let n = ys.len();
    if n < cfg.min_exceedances {
        return Err(Error::InsufficientData { n, min: cfg.min_exceedances });
    }
    let y_max = exceedances.y_max();
    if !(y_max > 0.0) {
        return Err(Error::Domain("all exceedances are zero".into()));
    }
    let nf = n as f64;
    let y_mean = ys.iter().sum::<f64>() / nf;

    // Exponential limit candidate: scale = mean, shape = 0.
    let exp_ll = -nf * y_mean.ln() - nf;

    // Bracketing grid: log-spaced magnitudes on each side of zero. All bounds
    // scale with the data so the fit is exactly scale-equivariant. The pivot
    // is the median (falling back to the smallest positive exceedance), which
    // stays representative of the bulk even when the mean is dominated by a
    // single extreme observation.
    let theta_lo = -(1.0 - 1e-8) / y_max;
    let y_med = ys[n / 2];
    let pivot = if y_med > 0.0 {
        y_med
    } else {
        ys.iter().copied().find(|&y| y > 0.0).unwrap_or(y_max)
    };
    let mag_min = 1e-9 / pivot;
    let mut theta_hi = 1e8 / pivot;

    let mut best: Option<(f64, f64)> = None;
    let mut evals: Vec<(f64, f64)> = Vec::new();
    for extension in 0..4 {
        let mut grid = Vec::with_capacity(2 * cfg.grid_points);
        for &(lo, hi, sign) in
            &[(mag_min.min(-theta_lo * 1e-3), -theta_lo, -1.0), (mag_min, theta_hi, 1.0)]
        {
            let (lln, lhn) = (lo.ln(), hi.ln());
            for i in 0..cfg.grid_points {
                let f = i as f64 / (cfg.grid_points - 1) as f64;
                grid.push(sign * (lln + f * (lhn - lln)).exp());
            }
        }
        grid.sort_by(f64::total_cmp);

        evals = grid.iter().filter_map(|&t| profile_value(t, ys).map(|l| (t, l))).collect();

        // Refine every interior local maximum; keep the best.
        best = None;
        for i in 1..evals.len().saturating_sub(1) {
            if evals[i].1 >= evals[i - 1].1 && evals[i].1 >= evals[i + 1].1 {
                let (theta, ll) = golden_max(
                    |t| profile_value(t, ys).unwrap_or(f64::NEG_INFINITY),
                    evals[i - 1].0,
                    evals[i + 1].0,
                    cfg.theta_rel_tol,
                );
                if best.map_or(true, |(_, b)| ll > b) {
                    best = Some((theta, ll));
                }
            }
        }

        // Profile still climbing at the top of the search range: the
        // maximizer sits beyond it, so widen and retry.
        let climbing_at_top = evals.len() >= 2 && {
            let top = evals[evals.len() - 1].1;
            top > evals[evals.len() - 2].1 && best.map_or(true, |(_, b)| top > b)
        };
        if climbing_at_top && extension < 3 {
            theta_hi *= 1e4;
        } else {
            break;
        }
    }

    match best {
        Some((theta, ll)) if ll > exp_ll => {
            let s: f64 = ys.iter().map(|&y| (theta * y).ln_1p()).sum();
            let gamma = s / nf;
            let sigma = gamma / theta;
            let params = GpdParams::new(exceedances.threshold(), sigma, gamma)?;
            Ok(GpdFit {
                params,
                theta_hat: theta,
                log_likelihood: gpd_loglik(sigma, gamma, ys),
                n_exceedances: n,
                converged: true,
                mle_regularity_ok: gamma > -0.5,
            })
        }
        Some(_) | None => {
            // No interior maximum beats the exponential limit. If the profile
            // is still climbing into the lower support boundary the MLE does
            // not exist (degenerate direction); report that instead of
            // returning a boundary value.
            if best.is_none() && evals.first().map_or(false, |&(_, l)| l > exp_ll) {
                return Err(Error::NonConvergence(
                    "profile likelihood increases toward the support boundary; \
                     no interior maximum exists"
                        .into(),
                ));
            }
            let params = GpdParams::new(exceedances.threshold(), y_mean, 0.0)?;
            Ok(GpdFit {
                params,
                theta_hat: 0.0,
                log_likelihood: exp_ll,
                n_exceedances: n,
                converged: true,
                mle_regularity_ok: true,
            })
        }
    }
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
