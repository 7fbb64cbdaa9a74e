//! Weights on the integer lattice Z^2: evaluation, submultiplicativity and
//! moderateness scans, and the GRS diagnostic `v(n p)^(1/n) -> 1`.
//!
//! Points of the finite phase space are evaluated at their minimal integer
//! lift (see [`TfPoint::lift`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::TfPoint;

/// A positive weight on Z^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Weight {
    /// `(1 + |p|^2)^(s/2)`
    Polynomial { s: f64 },
    /// `exp(b |p|^beta)` with `0 < beta < 1`
    Subexponential { b: f64, beta: f64 },
    /// `exp(b |p|)`
    Exponential { b: f64 },
    /// Explicit values on finitely many points.
    Custom { table: WeightTable },
}

/// Lookup table for custom weights, serialized as `[[x, y, value], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(i64, i64, f64)>", into = "Vec<(i64, i64, f64)>")]
pub struct WeightTable(BTreeMap<(i64, i64), f64>);

impl From<Vec<(i64, i64, f64)>> for WeightTable {
    fn from(rows: Vec<(i64, i64, f64)>) -> Self {
        WeightTable(rows.into_iter().map(|(x, y, v)| ((x, y), v)).collect())
    }
}

impl From<WeightTable> for Vec<(i64, i64, f64)> {
    fn from(t: WeightTable) -> Self {
        t.0.into_iter().map(|((x, y), v)| (x, y, v)).collect()
    }
}

impl WeightTable {
    pub fn get(&self, p: (i64, i64)) -> Option<f64> {
        self.0.get(&p).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.0.keys().copied()
    }
}

fn radius(p: (i64, i64)) -> f64 {
    (p.0 as f64).hypot(p.1 as f64)
}

fn add(p: (i64, i64), q: (i64, i64)) -> (i64, i64) {
    (p.0 + q.0, p.1 + q.1)
}

impl Weight {
    pub fn polynomial(s: f64) -> Self {
        Weight::Polynomial { s }
    }

    pub fn subexponential(b: f64, beta: f64) -> Self {
        Weight::Subexponential { b, beta }
    }

    pub fn exponential(b: f64) -> Self {
        Weight::Exponential { b }
    }

    pub fn custom(rows: Vec<(i64, i64, f64)>) -> Self {
        Weight::Custom {
            table: rows.into(),
        }
    }

    /// The constant weight 1.
    pub fn constant() -> Self {
        Weight::Polynomial { s: 0.0 }
    }

    /// Checks the family parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Weight::Polynomial { s } if !(s >= 0.0 && s.is_finite()) => {
                Err(Error::param(format!("polynomial weight needs s >= 0, got {s}")))
            }
            Weight::Subexponential { b, beta }
                if !(b > 0.0 && b.is_finite() && beta > 0.0 && beta < 1.0) =>
            {
                Err(Error::param(format!(
                    "subexponential weight needs b > 0 and 0 < beta < 1, got b = {b}, beta = {beta}"
                )))
            }
            Weight::Exponential { b } if !(b > 0.0 && b.is_finite()) => {
                Err(Error::param(format!("exponential weight needs b > 0, got {b}")))
            }
            Weight::Custom { ref table } => {
                match table.0.iter().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
                    Some((&(x, y), v)) => Err(Error::param(format!(
                        "custom weight value at ({x}, {y}) must be positive, got {v}"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: (i64, i64)) -> Result<f64> {
        match *self {
            Weight::Polynomial { s } => {
                let r2 = (p.0 as f64).powi(2) + (p.1 as f64).powi(2);
                Ok((1.0 + r2).powf(s / 2.0))
            }
            Weight::Subexponential { b, beta } => Ok((b * radius(p).powf(beta)).exp()),
            Weight::Exponential { b } => Ok((b * radius(p)).exp()),
            Weight::Custom { ref table } => table.get(p).ok_or(Error::Lookup(p.0, p.1)),
        }
    }

    /// `ln v(p)`, finite even where `v(p)` itself would overflow.
    pub fn ln_eval(&self, p: (i64, i64)) -> Result<f64> {
        match *self {
            Weight::Polynomial { s } => {
                let r2 = (p.0 as f64).powi(2) + (p.1 as f64).powi(2);
                Ok(0.5 * s * r2.ln_1p())
            }
            Weight::Subexponential { b, beta } => Ok(b * radius(p).powf(beta)),
            Weight::Exponential { b } => Ok(b * radius(p)),
            Weight::Custom { ref table } => {
                table.get(p).map(f64::ln).ok_or(Error::Lookup(p.0, p.1))
            }
        }
    }

    /// Evaluates at the minimal integer lift of a point of Z_N x Z_N.
    pub fn eval_lifted(&self, p: TfPoint, n: usize) -> Result<f64> {
        self.eval(p.lift(n))
    }

    fn is_custom(&self) -> bool {
        matches!(self, Weight::Custom { .. })
    }

    fn table_keys(&self) -> Vec<(i64, i64)> {
        match self {
            Weight::Custom { table } => table.keys().collect(),
            _ => Vec::new(),
        }
    }

    /// Largest observed `v(p + q) / (v(p) v(q))`.
    ///
    /// Built-in families are sampled uniformly on `[-50, 50]^2`; custom tables
    /// are scanned exhaustively over all key pairs whose sum is also a key.
    pub fn check_submultiplicative(
        &self,
        sample_count: usize,
        seed: u64,
    ) -> Result<SubmultiplicativityReport> {
        if sample_count == 0 {
            return Err(Error::param("sample_count must be at least 1"));
        }
        let mut report = SubmultiplicativityReport {
            max_violation: f64::NEG_INFINITY,
            worst: ((0, 0), (0, 0)),
            pairs_checked: 0,
        };
        let mut record = |p, q, ratio: f64| {
            report.pairs_checked += 1;
            if ratio > report.max_violation {
                report.max_violation = ratio;
                report.worst = (p, q);
            }
        };
        if self.is_custom() {
            let keys = self.table_keys();
            for &p in &keys {
                for &q in &keys {
                    if let Ok(top) = self.ln_eval(add(p, q)) {
                        let ratio = (top - self.ln_eval(p)? - self.ln_eval(q)?).exp();
                        record(p, q, ratio);
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..sample_count {
                let p = (rng.random_range(-50..=50), rng.random_range(-50..=50));
                let q = (rng.random_range(-50..=50), rng.random_range(-50..=50));
                let ratio = (self.ln_eval(add(p, q))? - self.ln_eval(p)? - self.ln_eval(q)?).exp();
                record(p, q, ratio);
            }
        }
        if report.pairs_checked == 0 {
            report.max_violation = 0.0;
        }
        Ok(report)
    }

    /// Samples `v(n p)^(1/n)` at `n = 1, 2, 4, ...` up to `n_max`.
    pub fn grs_probe(&self, p: (i64, i64), n_max: u64) -> Result<GrsReport> {
        if p == (0, 0) {
            return Err(Error::param("GRS probe point must be nonzero"));
        }
        if n_max < 16 {
            return Err(Error::param(format!("n_max must be at least 16, got {n_max}")));
        }
        let mut samples = Vec::new();
        let mut m: u64 = 1;
        while m <= n_max {
            let q = (p.0 * m as i64, p.1 * m as i64);
            samples.push((m, (self.ln_eval(q)? / m as f64).exp()));
            match m.checked_mul(2) {
                Some(next) => m = next,
                None => break,
            }
        }
        let verdict = GrsVerdict::classify(&samples);
        Ok(GrsReport {
            point: p,
            samples,
            verdict,
        })
    }
}

/// Outcome of [`Weight::check_submultiplicative`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmultiplicativityReport {
    /// Largest ratio `v(p + q) / (v(p) v(q))` seen; at most `1 + 1e-12` passes.
    pub max_violation: f64,
    pub worst: ((i64, i64), (i64, i64)),
    pub pairs_checked: usize,
}

impl SubmultiplicativityReport {
    pub fn passes(&self) -> bool {
        self.max_violation <= 1.0 + 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrsVerdict {
    ConsistentWithGrs,
    ViolatesGrs,
    Inconclusive,
}

const GRS_TAIL: usize = 4;
const GRS_ACCEPT: f64 = 1.05;
const GRS_REJECT: f64 = 1.10;
const FLAT_TOLERANCE: f64 = 1e-3;

impl GrsVerdict {
    /// Consistent when the last sample is at most 1.05 and the tail does not
    /// increase; violating when the last sample is at least 1.10 on a flat tail.
    fn classify(samples: &[(u64, f64)]) -> GrsVerdict {
        let start = samples.len().saturating_sub(GRS_TAIL);
        let tail: Vec<f64> = samples[start..].iter().map(|s| s.1).collect();
        let last = *tail.last().expect("at least one sample");
        let non_increasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let flat = tail
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= FLAT_TOLERANCE * w[0]);
        if last <= GRS_ACCEPT && non_increasing {
            GrsVerdict::ConsistentWithGrs
        } else if last >= GRS_REJECT && flat {
            GrsVerdict::ViolatesGrs
        } else {
            GrsVerdict::Inconclusive
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrsReport {
    pub point: (i64, i64),
    pub samples: Vec<(u64, f64)>,
    pub verdict: GrsVerdict,
}

impl GrsReport {
    pub fn final_sample(&self) -> f64 {
        self.samples.last().map(|s| s.1).unwrap_or(f64::NAN)
    }

    /// CSV with header `n,sample`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,sample\n");
        for (n, s) in &self.samples {
            let _ = writeln!(out, "{n},{s:.17e}");
        }
        out
    }
}

/// Outcome of [`check_moderate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModerateReport {
    /// Largest observed `m(p + q) / (v(p) m(q))`: a lower bound for the constant.
    pub constant_estimate: f64,
    /// Estimate per sampling radius, smallest radius first.
    pub range_estimates: Vec<(i64, f64)>,
    /// False when the estimate keeps growing with the sampling radius.
    pub moderate: bool,
}

const MODERATE_RANGES: [i64; 4] = [8, 64, 512, 4096];
const MODERATE_GROWTH: f64 = 1.1;

/// Integer in `[-r, r]` where `r` is drawn log-uniformly from `[1, range]`, so
/// both small and large points show up at every radius.
fn multiscale_coord(rng: &mut ChaCha8Rng, range: i64) -> i64 {
    let u: f64 = rng.random();
    let r = (range as f64).powf(u).round().max(1.0) as i64;
    rng.random_range(-r..=r)
}

/// Estimates the smallest `C` with `m(p + q) <= C v(p) m(q)`.
pub fn check_moderate(
    m: &Weight,
    v: &Weight,
    sample_count: usize,
    seed: u64,
) -> Result<ModerateReport> {
    if sample_count == 0 {
        return Err(Error::param("sample_count must be at least 1"));
    }
    let ratio = |p: (i64, i64), q: (i64, i64)| -> Result<f64> {
        Ok((m.ln_eval(add(p, q))? - v.ln_eval(p)? - m.ln_eval(q)?).exp())
    };
    if m.is_custom() || v.is_custom() {
        let ps = if v.is_custom() { v.table_keys() } else { m.table_keys() };
        let qs = if m.is_custom() { m.table_keys() } else { v.table_keys() };
        let mut best = f64::NEG_INFINITY;
        for &p in &ps {
            for &q in &qs {
                if let Ok(r) = ratio(p, q) {
                    best = best.max(r);
                }
            }
        }
        return Ok(ModerateReport {
            constant_estimate: best,
            range_estimates: Vec::new(),
            moderate: best.is_finite(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut range_estimates = Vec::with_capacity(MODERATE_RANGES.len());
    for &range in &MODERATE_RANGES {
        let mut best = f64::NEG_INFINITY;
        for _ in 0..sample_count {
            let p = (multiscale_coord(&mut rng, range), multiscale_coord(&mut rng, range));
            let q = (multiscale_coord(&mut rng, range), multiscale_coord(&mut rng, range));
            best = best.max(ratio(p, q)?);
        }
        range_estimates.push((range, best));
    }
    let constant_estimate = range_estimates
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let (last, earlier) = range_estimates.split_last().expect("non-empty ranges");
    let earlier_max = earlier.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let moderate = constant_estimate.is_finite() && last.1 <= MODERATE_GROWTH * earlier_max;
    Ok(ModerateReport {
        constant_estimate,
        range_estimates,
        moderate,
    })
}
