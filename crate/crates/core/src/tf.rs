//! Signals on the cyclic group Z_N and the time-frequency shifts acting on them.
//!
//! A time-frequency shift is modulation after translation,
//! `(pi(k, l) f)(t) = exp(2 pi i l t / N) f(t - k)`, with all indices reduced
//! mod N. Two shifts compose up to the unimodular factor returned by
//! [`cocycle`] and commute up to [`symplectic_bicharacter`].

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// `exp(2 pi i j / n)` with `j` taken mod `n`.
pub fn root_of_unity(n: usize, j: i64) -> C64 {
    let j = j.rem_euclid(n as i64) as f64;
    C64::from_polar(1.0, TAU * j / n as f64)
}

/// A point `(k, l)` of the phase space Z_N x Z_N: time shift `k`, frequency shift `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TfPoint {
    pub k: usize,
    pub l: usize,
}

impl From<[usize; 2]> for TfPoint {
    fn from([k, l]: [usize; 2]) -> Self {
        TfPoint { k, l }
    }
}

impl From<TfPoint> for [usize; 2] {
    fn from(p: TfPoint) -> Self {
        [p.k, p.l]
    }
}

impl TfPoint {
    pub const ORIGIN: TfPoint = TfPoint { k: 0, l: 0 };

    /// Canonical representative of `(k, l)` mod `n`.
    pub fn new(k: i64, l: i64, n: usize) -> Self {
        let m = n as i64;
        TfPoint {
            k: k.rem_euclid(m) as usize,
            l: l.rem_euclid(m) as usize,
        }
    }

    pub fn add(self, other: TfPoint, n: usize) -> TfPoint {
        TfPoint {
            k: (self.k + other.k) % n,
            l: (self.l + other.l) % n,
        }
    }

    pub fn neg(self, n: usize) -> TfPoint {
        TfPoint {
            k: (n - self.k) % n,
            l: (n - self.l) % n,
        }
    }

    pub fn sub(self, other: TfPoint, n: usize) -> TfPoint {
        self.add(other.neg(n), n)
    }

    /// `m * self` mod `n`.
    pub fn scale(self, m: usize, n: usize) -> TfPoint {
        TfPoint {
            k: (self.k * m) % n,
            l: (self.l * m) % n,
        }
    }

    pub fn is_reduced(self, n: usize) -> bool {
        self.k < n && self.l < n
    }

    /// Row-major position of the point in an `n x n` grid.
    pub fn flat(self, n: usize) -> usize {
        self.k * n + self.l
    }

    /// Minimal integer representative: `k` or `k - n`, whichever is smaller in
    /// absolute value, ties resolved towards the positive one.
    pub fn lift(self, n: usize) -> (i64, i64) {
        (lift_coord(self.k, n), lift_coord(self.l, n))
    }
}

fn lift_coord(x: usize, n: usize) -> i64 {
    let x = (x % n) as i64;
    let n = n as i64;
    if 2 * x <= n {
        x
    } else {
        x - n
    }
}

/// Iterator over all `n * n` points in lexicographic order.
pub fn phase_space(n: usize) -> impl Iterator<Item = TfPoint> {
    (0..n).flat_map(move |k| (0..n).map(move |l| TfPoint { k, l }))
}

fn check_point(p: TfPoint, n: usize) -> Result<()> {
    if p.is_reduced(n) {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: n,
            found: p.k.max(p.l) + 1,
        })
    }
}

/// A complex-valued function on Z_N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalJson", into = "SignalJson")]
pub struct Signal {
    values: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct SignalJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<SignalJson> for Signal {
    type Error = Error;

    fn try_from(js: SignalJson) -> Result<Self> {
        if js.re.len() != js.n {
            return Err(Error::param(format!(
                "field `re` has {} entries but n = {}",
                js.re.len(),
                js.n
            )));
        }
        if js.im.len() != js.n {
            return Err(Error::param(format!(
                "field `im` has {} entries but n = {}",
                js.im.len(),
                js.n
            )));
        }
        Signal::new(
            js.re
                .into_iter()
                .zip(js.im)
                .map(|(re, im)| C64::new(re, im))
                .collect(),
        )
    }
}

impl From<Signal> for SignalJson {
    fn from(s: Signal) -> Self {
        SignalJson {
            n: s.n(),
            re: s.values.iter().map(|z| z.re).collect(),
            im: s.values.iter().map(|z| z.im).collect(),
        }
    }
}

impl Signal {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param(format!(
                "group order must be at least 2, got {}",
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("signal has non-finite entries"));
        }
        Ok(Signal { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Signal::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 2, "group order must be at least 2");
        Signal {
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Point mass at `t`.
    pub fn delta(n: usize, t: usize) -> Self {
        let mut s = Signal::zeros(n);
        s.values[t % n] = C64::new(1.0, 0.0);
        s
    }

    /// Periodized Gaussian `sum_j exp(-pi (t + jN)^2 / (width N))`, centred at 0.
    pub fn gaussian(n: usize, width: f64) -> Self {
        let nf = n as f64;
        let values = (0..n)
            .map(|t| {
                let v: f64 = (-3..=3)
                    .map(|j| {
                        let x = t as f64 + j as f64 * nf;
                        (-std::f64::consts::PI * x * x / (width * nf)).exp()
                    })
                    .sum();
                C64::new(v, 0.0)
            })
            .collect();
        Signal { values }
    }

    /// Entries drawn independently from the standard complex normal distribution.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 2, "group order must be at least 2");
        let values = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im)
            })
            .collect();
        Signal { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `<self, other> = sum_t self(t) conj(other(t))`, linear in the first slot.
    pub fn inner(&self, other: &Signal) -> C64 {
        debug_assert_eq!(self.n(), other.n());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn scale(&self, c: C64) -> Signal {
        Signal {
            values: self.values.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Signal {
        Signal {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        Signal {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub(crate) fn check_same_n(&self, n: usize) -> Result<()> {
        if self.n() == n {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: n,
                found: self.n(),
            })
        }
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn from_dvector(v: &DVector<C64>) -> Signal {
        Signal {
            values: v.iter().copied().collect(),
        }
    }
}

/// Applies `pi(p)` to `f`.
pub fn tf_shift(p: TfPoint, f: &Signal) -> Result<Signal> {
    let n = f.n();
    check_point(p, n)?;
    let values = (0..n)
        .map(|t| root_of_unity(n, (p.l * t) as i64) * f.values[(t + n - p.k) % n])
        .collect();
    Ok(Signal { values })
}

/// The `n x n` matrix of `pi(p)`: a single nonzero per column.
pub fn tf_matrix(p: TfPoint, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        let t = (s + p.k) % n;
        m[(t, s)] = root_of_unity(n, (p.l * t) as i64);
    }
    m
}

/// The factor in `pi(lambda) pi(mu) = c(lambda, mu) pi(lambda + mu)`.
///
/// For modulation-after-translation this is `exp(-2 pi i k n' / N)` where
/// `lambda = (k, l)` and `mu = (m', n')`.
pub fn cocycle(lambda: TfPoint, mu: TfPoint, n: usize) -> C64 {
    root_of_unity(n, -((lambda.k * mu.l) as i64))
}

/// `exp(2 pi i (m l - k n') / N)`: the factor in
/// `pi(lambda) pi(mu) = c_symp(lambda, mu) pi(mu) pi(lambda)`.
pub fn symplectic_bicharacter(lambda: TfPoint, mu: TfPoint, n: usize) -> C64 {
    root_of_unity(n, symplectic_form(lambda, mu, n) as i64)
}

/// `(m l - k n') mod N`; zero exactly when the two shifts commute.
pub fn symplectic_form(lambda: TfPoint, mu: TfPoint, n: usize) -> usize {
    ((mu.k * lambda.l) % n + n - (lambda.k * mu.l) % n) % n
}

/// Phase-space array indexed by `(k, l)`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceArray {
    n: usize,
    values: Vec<C64>,
}

impl PhaseSpaceArray {
    pub fn zeros(n: usize) -> Self {
        PhaseSpaceArray {
            n,
            values: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: TfPoint) -> C64 {
        self.values[p.flat(self.n)]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise distance to another array of the same size.
    pub fn max_abs_diff(&self, other: &PhaseSpaceArray) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with header `k,l,re,im`, one row per cell in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,l,re,im\n");
        for p in phase_space(self.n) {
            let z = self.get(p);
            let _ = writeln!(out, "{},{},{:e},{:e}", p.k, p.l, z.re, z.im);
        }
        out
    }
}

/// Short-time Fourier transform `V_g f(k, l) = <f, pi(k, l) g>`.
///
/// Each time slice is one FFT of `f(t) conj(g(t - k))`.
pub fn stft(f: &Signal, g: &Signal) -> Result<PhaseSpaceArray> {
    let n = f.n();
    g.check_same_n(n)?;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        for (t, cell) in row.iter_mut().enumerate() {
            *cell = f.values[t] * g.values[(t + n - k) % n].conj();
        }
        fft.process(row);
    });
    Ok(PhaseSpaceArray { n, values })
}

/// Reference STFT by direct O(N^3) summation.
pub fn stft_direct(f: &Signal, g: &Signal) -> Result<PhaseSpaceArray> {
    let n = f.n();
    g.check_same_n(n)?;
    let mut out = PhaseSpaceArray::zeros(n);
    for p in phase_space(n) {
        let mut acc = C64::new(0.0, 0.0);
        for t in 0..n {
            acc += f.values[t]
                * g.values[(t + n - p.k) % n].conj()
                * root_of_unity(n, -((p.l * t) as i64));
        }
        out.values[p.flat(n)] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn shift_examples() {
        let d0 = Signal::delta(4, 0);
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let cases = [
            ((1, 0), [zero, one, zero, zero]),
            ((0, 1), [one, zero, zero, zero]),
            ((1, 1), [zero, i, zero, zero]),
        ];
        for ((k, l), expect) in cases {
            let out = tf_shift(TfPoint { k, l }, &d0).unwrap();
            for (a, b) in out.values().iter().zip(expect) {
                assert!(close(*a, b, 1e-15), "({k},{l}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn shift_rejects_unreduced_point() {
        let f = Signal::delta(4, 0);
        assert!(matches!(
            tf_shift(TfPoint { k: 4, l: 0 }, &f),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn matrix_agrees_with_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Signal::random(6, &mut rng);
        for p in phase_space(6) {
            let via_matrix = Signal::from_dvector(&(tf_matrix(p, 6) * f.to_dvector()));
            let direct = tf_shift(p, &f).unwrap();
            assert!(via_matrix.sub(&direct).norm2() < 1e-13);
        }
    }

    #[test]
    fn cocycle_identity_and_unimodular() {
        let n = 5;
        for a in phase_space(n) {
            for b in phase_space(n) {
                assert!((cocycle(a, b, n).norm() - 1.0).abs() < 1e-14);
                for c in [TfPoint { k: 2, l: 3 }, TfPoint { k: 4, l: 1 }] {
                    let lhs = cocycle(a, b, n) * cocycle(a.add(b, n), c, n);
                    let rhs = cocycle(b, c, n) * cocycle(a, b.add(c, n), n);
                    assert!(close(lhs, rhs, 1e-13));
                }
            }
        }
        assert_eq!(cocycle(TfPoint::ORIGIN, TfPoint { k: 3, l: 2 }, 7), C64::new(1.0, 0.0));
    }

    #[test]
    fn composition_law_n4_all_pairs() {
        let n = 4;
        let mut worst: f64 = 0.0;
        for a in phase_space(n) {
            for b in phase_space(n) {
                let lhs = tf_matrix(a, n) * tf_matrix(b, n);
                let rhs = tf_matrix(a.add(b, n), n) * cocycle(a, b, n);
                worst = worst.max(max_diff(&lhs, &rhs));
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn bicharacter_examples() {
        let p = TfPoint { k: 3, l: 1 };
        assert!(close(symplectic_bicharacter(p, p, 7), C64::new(1.0, 0.0), 1e-15));
        let v = symplectic_bicharacter(TfPoint { k: 1, l: 0 }, TfPoint { k: 0, l: 1 }, 4);
        assert!(close(v, C64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn commutation_random_pairs_n6() {
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = TfPoint::new(rng.random_range(0..6), rng.random_range(0..6), n);
            let b = TfPoint::new(rng.random_range(0..6), rng.random_range(0..6), n);
            let lhs = tf_matrix(a, n) * tf_matrix(b, n);
            let rhs = tf_matrix(b, n) * tf_matrix(a, n) * symplectic_bicharacter(a, b, n);
            assert!(max_diff(&lhs, &rhs) < 1e-12);
            let via_cocycle = cocycle(a, b, n) * cocycle(b, a, n).conj();
            assert!(close(via_cocycle, symplectic_bicharacter(a, b, n), 1e-13));
        }
    }

    #[test]
    fn adjoint_rule() {
        let n = 6;
        for p in phase_space(n) {
            let adj = tf_matrix(p, n).adjoint();
            let rhs = tf_matrix(p.neg(n), n) * cocycle(p, p, n);
            assert!(max_diff(&adj, &rhs) < 1e-13);
        }
    }

    #[test]
    fn stft_of_deltas() {
        let d = Signal::delta(4, 0);
        let v = stft(&d, &d).unwrap();
        for p in phase_space(4) {
            let expect = if p.k == 0 { 1.0 } else { 0.0 };
            assert!(close(v.get(p), C64::new(expect, 0.0), 1e-15));
        }
        let z = stft(&Signal::zeros(4), &d).unwrap();
        assert_eq!(z.energy(), 0.0);
    }

    #[test]
    fn stft_paths_agree_and_moyal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Signal::random(8, &mut rng);
        let g = Signal::random(8, &mut rng);
        let fast = stft(&f, &g).unwrap();
        let slow = stft_direct(&f, &g).unwrap();
        assert!(fast.max_abs_diff(&slow) < 1e-12);
        let expect = 8.0 * f.norm2().powi(2) * g.norm2().powi(2);
        assert!((fast.energy() - expect).abs() / expect < 1e-10);
    }

    #[test]
    fn stft_dimension_mismatch() {
        assert!(stft(&Signal::zeros(4), &Signal::zeros(5)).is_err());
    }

    #[test]
    fn lift_prefers_positive_on_ties() {
        assert_eq!(TfPoint { k: 2, l: 3 }.lift(4), (2, -1));
        assert_eq!(TfPoint { k: 3, l: 0 }.lift(6), (3, 0));
        assert_eq!(TfPoint { k: 4, l: 5 }.lift(6), (-2, -1));
    }

    #[test]
    fn signal_json_validates_lengths() {
        let bad: std::result::Result<Signal, _> =
            serde_json::from_str(r#"{"n":3,"re":[1,2,3],"im":[0,0]}"#);
        let msg = bad.unwrap_err().to_string();
        assert!(msg.contains("`im`"), "{msg}");
        let ok: Signal = serde_json::from_str(r#"{"n":2,"re":[1,2],"im":[0,1]}"#).unwrap();
        assert_eq!(ok.values()[1], C64::new(2.0, 1.0));
    }
}
