//! Automated threshold selection via accumulation tests over ordered
//! goodness-of-fit p-values.
//!
//! Candidates `mu_1 < ... < mu_l` are each fitted and tested; the ordered
//! p-values feed an accumulation test, which picks the cutoff
//!
//! ```text
//! k_hat = max { k : (1/k) sum_{i<=k} h(p_i) <= alpha }     (0 if none)
//! ```
//!
//! rejecting the first `k_hat` candidates and selecting `mu_(k_hat + 1)`.
//! Rejection is driven by *small* transformed p-values: a candidate whose tail
//! fits badly produces a small `h(p)`, keeps the running average under
//! `alpha`, and pushes the selection to higher thresholds.
//!
//! Three accumulation functions are provided:
//!
//! ```text
//! ForwardStop:  h(p) = -log(1 - p)
//! SeqStep:      h(p) = C 1{p > 1 - 1/C}
//! HingeExp:     h(p) = C log(1 / (C (1 - p))) 1{p > 1 - 1/C}
//! ```

use crate::data_io::quantile_sorted;
use crate::error::{Error, Result};
use crate::gof::{gof_test_with_fit, GofConfig};
use crate::gpd::GpdFit;
use crate::mix_seed;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccumulationKind {
    ForwardStop,
    SeqStep,
    HingeExp,
}

impl AccumulationKind {
    pub fn label(&self) -> &'static str {
        match self {
            AccumulationKind::ForwardStop => "forward-stop",
            AccumulationKind::SeqStep => "seq-step",
            AccumulationKind::HingeExp => "hinge-exp",
        }
    }
}

impl std::str::FromStr for AccumulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward-stop" | "forwardstop" => Ok(AccumulationKind::ForwardStop),
            "seq-step" | "seqstep" => Ok(AccumulationKind::SeqStep),
            "hinge-exp" | "hingeexp" => Ok(AccumulationKind::HingeExp),
            other => Err(Error::InvalidArgument(format!("unknown accumulation test `{other}`"))),
        }
    }
}

/// An accumulation test: the function kind, its step constant `C` (only used
/// by SeqStep/HingeExp) and the target FDR level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AccumulationSpec {
    pub kind: AccumulationKind,
    pub c_param: f64,
    pub alpha: f64,
}

impl AccumulationSpec {
    pub fn new(kind: AccumulationKind, c_param: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
        }
        if matches!(kind, AccumulationKind::SeqStep | AccumulationKind::HingeExp)
            && !(c_param > 1.0)
        {
            return Err(Error::InvalidArgument(format!("C must exceed 1, got {c_param}")));
        }
        Ok(Self { kind, c_param, alpha })
    }

    pub fn forward_stop(alpha: f64) -> Result<Self> {
        Self::new(AccumulationKind::ForwardStop, 2.0, alpha)
    }

    pub fn seq_step(c_param: f64, alpha: f64) -> Result<Self> {
        Self::new(AccumulationKind::SeqStep, c_param, alpha)
    }

    pub fn hinge_exp(c_param: f64, alpha: f64) -> Result<Self> {
        Self::new(AccumulationKind::HingeExp, c_param, alpha)
    }
}

/// The accumulation function `h(p)`; maps `[0, 1]` to `[0, +inf]`.
pub fn accumulation_value(p: f64, spec: &AccumulationSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p-value must be in [0, 1], got {p}")));
    }
    let c = spec.c_param;
    Ok(match spec.kind {
        AccumulationKind::ForwardStop => -(-p).ln_1p(),
        AccumulationKind::SeqStep => {
            if p > 1.0 - 1.0 / c {
                c
            } else {
                0.0
            }
        }
        AccumulationKind::HingeExp => {
            if p > 1.0 - 1.0 / c {
                c * (c * (1.0 - p)).recip().ln()
            } else {
                0.0
            }
        }
    })
}

/// Running averages `(1/k) sum_{i<=k} h(p_i)` and the cutoff `k_hat`.
///
/// `running_averages[k-1]` holds the average over the first `k` p-values;
/// `k_hat` is the largest `k` whose average stays at or below `alpha`, zero
/// when no prefix qualifies.
pub fn accumulation_cutoff(
    p_values: &[f64],
    spec: &AccumulationSpec,
) -> Result<(usize, Vec<f64>)> {
    if p_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut averages = Vec::with_capacity(p_values.len());
    let mut sum = 0.0;
    let mut k_hat = 0;
    for (i, &p) in p_values.iter().enumerate() {
        sum += accumulation_value(p, spec)?;
        let avg = sum / (i + 1) as f64;
        averages.push(avg);
        if avg <= spec.alpha {
            k_hat = i + 1;
        }
    }
    Ok((k_hat, averages))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSource {
    PercentileGrid,
    Explicit,
}

/// Strictly ascending candidate thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateGrid {
    thresholds: Vec<f64>,
    pub source: GridSource,
}

impl CandidateGrid {
    pub fn explicit(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::DegenerateGrid("need at least two candidates".into()));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateGrid("thresholds must be strictly ascending".into()));
        }
        Ok(Self { thresholds, source: GridSource::Explicit })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// Builds a percentile-level candidate grid over `data`.
///
/// `count` equally spaced levels between `lower_pct` and `upper_pct` are
/// mapped through the empirical quantile function, deduplicated, and pruned
/// from the top until every candidate keeps at least `min_exceedances`
/// observations at or above it.
pub fn build_candidate_grid(
    data: &[f64],
    lower_pct: f64,
    upper_pct: f64,
    count: usize,
    min_exceedances: usize,
) -> Result<CandidateGrid> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("grid needs >= 2 candidates, got {count}")));
    }
    if !(0.0..=1.0).contains(&lower_pct) || !(0.0..=1.0).contains(&upper_pct) {
        return Err(Error::InvalidArgument("percentile bounds must lie in [0, 1]".into()));
    }
    if lower_pct >= upper_pct {
        return Err(Error::InvalidArgument(format!(
            "lower bound {lower_pct} must be below upper bound {upper_pct}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = (0..count)
        .map(|i| {
            let f = i as f64 / (count - 1) as f64;
            quantile_sorted(&sorted, lower_pct + f * (upper_pct - lower_pct))
        })
        .collect();
    thresholds.dedup();
    while let Some(&top) = thresholds.last() {
        let above = sorted.iter().filter(|&&x| x >= top).count();
        if above >= min_exceedances {
            break;
        }
        thresholds.pop();
    }
    if thresholds.len() < 2 {
        return Err(Error::DegenerateGrid(format!(
            "only {} distinct viable candidates survive",
            thresholds.len()
        )));
    }
    Ok(CandidateGrid { thresholds, source: GridSource::PercentileGrid })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStatus {
    /// Some prefix was rejected; the threshold after the cutoff was chosen.
    Selected,
    /// No candidate was rejected; the lowest candidate already fits and is
    /// returned as the default.
    NoneRejectedDefaultFirst,
    /// Every candidate was rejected; no usable threshold exists in the grid.
    AllRejectedNoThreshold,
}

/// Per-candidate diagnostics from a selection run.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateOutcome {
    pub threshold: f64,
    pub n_exceedances: usize,
    pub p_value: f64,
    /// Set when the fit (or test) failed; such candidates are treated as
    /// rejected with `p_value = 0`.
    pub fit_failed: bool,
    pub fit: Option<GpdFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub grid: CandidateGrid,
    pub candidates: Vec<CandidateOutcome>,
    pub p_values: Vec<f64>,
    pub running_averages: Vec<f64>,
    pub k_hat: usize,
    pub chosen_threshold: Option<f64>,
    pub status: SelectionStatus,
}

impl SelectionResult {
    /// Fit at the chosen threshold, when a threshold was chosen and its fit
    /// succeeded.
    pub fn chosen_fit(&self) -> Option<&GpdFit> {
        let k = match self.status {
            SelectionStatus::AllRejectedNoThreshold => return None,
            _ => self.k_hat,
        };
        self.candidates.get(k).and_then(|c| c.fit.as_ref())
    }
}

/// Runs the full selection pipeline over a candidate grid.
///
/// Per-candidate fits and tests run concurrently; bootstrap seeds are derived
/// per candidate index, so results are identical to a serial run.
pub fn select_threshold(
    data: &[f64],
    grid: &CandidateGrid,
    spec: &AccumulationSpec,
    gof: &GofConfig,
) -> Result<SelectionResult> {
    if grid.is_empty() {
        return Err(Error::DegenerateGrid("empty candidate grid".into()));
    }
    let candidates: Vec<CandidateOutcome> = grid
        .thresholds()
        .par_iter()
        .enumerate()
        .map(|(j, &mu)| {
            let cfg = GofConfig { seed: mix_seed(gof.seed, j as u64), ..gof.clone() };
            let n_above = data.iter().filter(|&&x| x >= mu).count();
            match gof_test_with_fit(data, mu, &cfg) {
                Ok((fit, ad)) => CandidateOutcome {
                    threshold: mu,
                    n_exceedances: ad.n,
                    p_value: ad.p_value,
                    fit_failed: false,
                    fit: Some(fit),
                },
                Err(_) => CandidateOutcome {
                    threshold: mu,
                    n_exceedances: n_above,
                    p_value: 0.0,
                    fit_failed: true,
                    fit: None,
                },
            }
        })
        .collect();

    let p_values: Vec<f64> = candidates.iter().map(|c| c.p_value).collect();
    let (k_hat, running_averages) = accumulation_cutoff(&p_values, spec)?;
    let l = grid.len();
    let (status, chosen_threshold) = if k_hat == l {
        (SelectionStatus::AllRejectedNoThreshold, None)
    } else if k_hat == 0 {
        (SelectionStatus::NoneRejectedDefaultFirst, Some(grid.thresholds()[0]))
    } else {
        (SelectionStatus::Selected, Some(grid.thresholds()[k_hat]))
    };

    Ok(SelectionResult {
        grid: grid.clone(),
        candidates,
        p_values,
        running_averages,
        k_hat,
        chosen_threshold,
        status,
    })
}
