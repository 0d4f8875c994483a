//! Claims-data ingestion, summary statistics, and empirical distribution
//! utilities.
//!
//! The expected input is a delimited text file with a header row and columns
//! `year` (integer) and `claim` (raw currency units); claim sizes are divided
//! by a scale factor (default 1e6) on load. Malformed rows are skipped and
//! counted, never imputed.

use crate::error::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// Default divisor applied to raw claim sizes.
pub const DEFAULT_SCALE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Claim {
    pub year: i32,
    /// Claim size in scaled units.
    pub size: f64,
}

#[derive(Debug, Clone)]
pub struct ClaimsDataset {
    pub claims: Vec<Claim>,
    pub scale_factor: f64,
    pub source_path: String,
    /// Known left-truncation point of the data in scaled units, if any.
    pub truncation_floor: Option<f64>,
    /// Number of malformed rows dropped during parsing.
    pub skipped_rows: usize,
}

/// Header names for the year and claim-size columns.
#[derive(Debug, Clone)]
pub struct ColumnMapping {
    pub year: String,
    pub claim: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self { year: "year".into(), claim: "claim".into() }
    }
}

/// Loads a claims CSV, dividing sizes by `scale_factor`.
pub fn load_claims(
    path: impl AsRef<Path>,
    schema: &ColumnMapping,
    scale_factor: f64,
) -> Result<ClaimsDataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    if !(scale_factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {scale_factor}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::FileUnreadable {
                path: path_str.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::SchemaMismatch { path: path_str.clone(), detail: e.to_string() },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::SchemaMismatch { path: path_str.clone(), detail: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (year_idx, claim_idx) = match (col(&schema.year), col(&schema.claim)) {
        (Some(y), Some(c)) => (y, c),
        _ => {
            return Err(Error::SchemaMismatch {
                path: path_str,
                detail: format!(
                    "need columns `{}` and `{}`, found {:?}",
                    schema.year, schema.claim, headers
                ),
            })
        }
    };

    let mut claims = Vec::new();
    let mut skipped = 0usize;
    for record in reader.records() {
        let Ok(record) = record else {
            skipped += 1;
            continue;
        };
        let parsed = (|| {
            let year: i32 = record.get(year_idx)?.parse().ok()?;
            let raw: f64 = record.get(claim_idx)?.parse().ok()?;
            if !raw.is_finite() || raw <= 0.0 {
                return None;
            }
            Some(Claim { year, size: raw / scale_factor })
        })();
        match parsed {
            Some(c) => claims.push(c),
            None => skipped += 1,
        }
    }
    if claims.is_empty() {
        return Err(Error::EmptyAfterParse { path: path_str });
    }
    Ok(ClaimsDataset {
        claims,
        scale_factor,
        source_path: path_str,
        truncation_floor: None,
        skipped_rows: skipped,
    })
}

impl ClaimsDataset {
    /// Records the dataset's known left-truncation point (scaled units),
    /// validating that no claim falls below it.
    pub fn with_truncation_floor(mut self, floor: f64) -> Result<Self> {
        if let Some(bad) = self.claims.iter().find(|c| c.size < floor - 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "claim {} below declared truncation floor {floor}",
                bad.size
            )));
        }
        self.truncation_floor = Some(floor);
        Ok(self)
    }

    /// Distinct years present, ascending.
    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.claims.iter().map(|c| c.year).collect();
        ys.sort_unstable();
        ys.dedup();
        ys
    }
}

/// Claim sizes for one year, ascending.
pub fn filter_year(data: &ClaimsDataset, year: i32) -> Result<Vec<f64>> {
    let mut out: Vec<f64> =
        data.claims.iter().filter(|c| c.year == year).map(|c| c.size).collect();
    if out.is_empty() {
        return Err(Error::YearAbsent(year));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub sd: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryStats {
        n,
        mean,
        sd,
        q1: quantile_sorted(&sorted, 0.25),
        q2: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: *sorted.last().unwrap(),
    })
}

/// Order-statistic quantile with linear interpolation: `h = (n - 1) p + 1`,
/// result `x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h))` in
/// 1-based order statistics.
///
/// This single rule is shared by every quantile consumer in the crate.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Empirical CDF: right-continuous step function `F(x) = #(x_i <= x) / n`.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Support points with their cumulative fractions `i / n`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.sorted.len() as f64;
        self.sorted.iter().enumerate().map(move |(i, &x)| (x, (i + 1) as f64 / n))
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_parses_and_scales() {
        let f = write_csv("year,claim\n1985,2000000\n1985,500000\n1986,1500000\n");
        let ds = load_claims(f.path(), &ColumnMapping::default(), 1e6).unwrap();
        assert_eq!(ds.claims.len(), 3);
        assert_eq!(ds.skipped_rows, 0);
        assert!((ds.claims[0].size - 2.0).abs() < 1e-12);
        assert!((ds.claims[1].size - 0.5).abs() < 1e-12);
    }

    #[test]
    fn load_skips_malformed_rows() {
        let mut content = String::from("year,claim\n");
        for i in 0..9 {
            content.push_str(&format!("1985,{}\n", 1_000_000 + i));
        }
        content.push_str("1985,not-a-number\n");
        let f = write_csv(&content);
        let ds = load_claims(f.path(), &ColumnMapping::default(), 1e6).unwrap();
        assert_eq!(ds.claims.len(), 9);
        assert_eq!(ds.skipped_rows, 1);
    }

    #[test]
    fn load_rejects_missing_file_and_bad_schema() {
        assert!(matches!(
            load_claims("/nonexistent/claims.csv", &ColumnMapping::default(), 1e6),
            Err(Error::FileUnreadable { .. })
        ));
        let f = write_csv("a,b\n1,2\n");
        assert!(matches!(
            load_claims(f.path(), &ColumnMapping::default(), 1e6),
            Err(Error::SchemaMismatch { .. })
        ));
        let f = write_csv("year,claim\nx,y\n");
        assert!(matches!(
            load_claims(f.path(), &ColumnMapping::default(), 1e6),
            Err(Error::EmptyAfterParse { .. })
        ));
    }

    #[test]
    fn load_roundtrip_preserves_claims() {
        let f = write_csv("year,claim\n1985,2500000\n1987,750000\n1987,1250000\n");
        let ds = load_claims(f.path(), &ColumnMapping::default(), 1e6).unwrap();
        // Re-serialize at raw scale and load again.
        let mut out = String::from("year,claim\n");
        for c in &ds.claims {
            out.push_str(&format!("{},{}\n", c.year, c.size * ds.scale_factor));
        }
        let f2 = write_csv(&out);
        let ds2 = load_claims(f2.path(), &ColumnMapping::default(), 1e6).unwrap();
        assert_eq!(ds.claims.len(), ds2.claims.len());
        for (a, b) in ds.claims.iter().zip(&ds2.claims) {
            assert_eq!(a.year, b.year);
            assert!((a.size - b.size).abs() <= 1e-9 * a.size.abs());
        }
    }

    #[test]
    fn scaling_coherence() {
        let f = write_csv("year,claim\n1985,1234567\n1985,7654321\n");
        let ds = load_claims(f.path(), &ColumnMapping::default(), 1e6).unwrap();
        let raw = [1234567.0, 7654321.0];
        for (c, r) in ds.claims.iter().zip(raw) {
            assert!((c.size * 1e6 - r).abs() <= 1e-9 * r);
        }
    }

    #[test]
    fn filter_year_sorted_and_absent() {
        let f = write_csv("year,claim\n1985,3000000\n1985,1000000\n1986,2000000\n");
        let ds = load_claims(f.path(), &ColumnMapping::default(), 1e6).unwrap();
        let y85 = filter_year(&ds, 1985).unwrap();
        assert_eq!(y85, vec![1.0, 3.0]);
        assert!(matches!(filter_year(&ds, 1990), Err(Error::YearAbsent(1990))));
    }

    #[test]
    fn summary_matches_hand_computation() {
        let s = summary_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.q2 - 2.5).abs() < 1e-12);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.n, 4);
    }

    #[test]
    fn sd_matches_two_pass_oracle() {
        let values: Vec<f64> =
            (0..1000u64).map(|i| ((i * 2654435761 % 10007) as f64).sqrt()).collect();
        let s = summary_stats(&values).unwrap();
        // Oracle: compensated (Kahan) two-pass variance.
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        for v in &values {
            let d = (v - mean) * (v - mean);
            let t = acc + d;
            comp += if acc.abs() >= d.abs() { (acc - t) + d } else { (d - t) + acc };
            acc = t;
        }
        let sd = ((acc + comp) / (n - 1.0)).sqrt();
        assert!(((s.sd - sd) / sd).abs() < 1e-10);
    }

    #[test]
    fn quartiles_coincide_with_shared_quantile_rule() {
        let mut values: Vec<f64> = (0..37).map(|i| (i as f64 * 1.7).sin() * 10.0).collect();
        let s = summary_stats(&values).unwrap();
        values.sort_by(f64::total_cmp);
        assert_eq!(s.q1, quantile_sorted(&values, 0.25));
        assert_eq!(s.q2, quantile_sorted(&values, 0.5));
        assert_eq!(s.q3, quantile_sorted(&values, 0.75));
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        // h = (2 - 1) * 0.25 + 1 = 1.25 -> 0 + 0.25 * (10 - 0) = 2.5
        assert!((quantile_sorted(&[0.0, 10.0], 0.25) - 2.5).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }

    #[test]
    fn ecdf_single_step() {
        let e = Ecdf::new(&[5.0]).unwrap();
        assert_eq!(e.eval(5.0), 1.0);
        assert_eq!(e.eval(4.9), 0.0);
        assert_eq!(e.eval(6.0), 1.0);
    }

    #[test]
    fn ecdf_agrees_with_counting_oracle() {
        let values: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let e = Ecdf::new(&values).unwrap();
        for k in 0..100 {
            let x = k as f64 * 0.17 - 1.0;
            let direct = values.iter().filter(|&&v| v <= x).count() as f64 / values.len() as f64;
            assert_eq!(e.eval(x), direct, "x = {x}");
        }
        assert_eq!(e.eval(e.max()), 1.0);
        assert_eq!(e.eval(e.min() - 1e-9), 0.0);
    }

    #[test]
    fn ecdf_nondecreasing() {
        let values = [3.0, 1.0, 2.0, 2.0, 9.0];
        let e = Ecdf::new(&values).unwrap();
        let mut prev = 0.0;
        let mut x = 0.0;
        while x < 10.0 {
            let f = e.eval(x);
            assert!(f >= prev);
            prev = f;
            x += 0.125;
        }
    }
}
