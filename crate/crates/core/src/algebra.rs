//! The twisted group algebra of a lattice: coefficient sequences multiplied by
//! twisted convolution, with involution, weighted norms and the faithful
//! representation `a -> sum_lambda a(lambda) pi(lambda)` as N x N matrices.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, CMatrix};
use crate::tf::{cocycle, root_of_unity, Signal, TfPoint, C64};
use crate::weights::Weight;

const HERMITIAN_TOL: f64 = 1e-12;
/// Relative smallest singular value below which an element counts as singular.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-10;

/// An N x N complex matrix acting on signals of length N.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("operator has non-finite entries"));
        }
        let hermitian = linalg::is_hermitian(&entries, HERMITIAN_TOL);
        Ok(OperatorMatrix { entries, hermitian })
    }

    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        let hermitian = linalg::is_hermitian(&entries, HERMITIAN_TOL);
        OperatorMatrix { entries, hermitian }
    }

    pub fn identity(n: usize) -> Self {
        OperatorMatrix::from_trusted(CMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_inner(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn frobenius(&self) -> f64 {
        linalg::frobenius(&self.entries)
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        f.check_same_n(self.n())?;
        Ok(Signal::from_dvector(&(&self.entries * f.to_dvector())))
    }

    /// Frobenius distance to another operator.
    pub fn distance(&self, other: &OperatorMatrix) -> f64 {
        linalg::frobenius(&(&self.entries - &other.entries))
    }
}

/// Finitely supported coefficients on a lattice, in canonical point order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffSeqJson", into = "CoeffSeqJson")]
pub struct CoeffSeq {
    lattice: Arc<Lattice>,
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffSeqJson {
    lattice: Lattice,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<CoeffSeqJson> for CoeffSeq {
    type Error = Error;

    fn try_from(js: CoeffSeqJson) -> Result<Self> {
        CoeffSeq::new(
            Arc::new(js.lattice),
            js.coeffs.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        )
    }
}

impl From<CoeffSeq> for CoeffSeqJson {
    fn from(a: CoeffSeq) -> Self {
        CoeffSeqJson {
            lattice: (*a.lattice).clone(),
            coeffs: a.coeffs.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl CoeffSeq {
    pub fn new(lattice: Arc<Lattice>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::param(format!(
                "field `coeffs` has {} entries but the lattice has {} points",
                coeffs.len(),
                lattice.len()
            )));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("coefficients must be finite"));
        }
        Ok(CoeffSeq { lattice, coeffs })
    }

    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); lattice.len()];
        CoeffSeq { lattice, coeffs }
    }

    /// The unit `delta_(0,0)`.
    pub fn unit(lattice: Arc<Lattice>) -> Self {
        let mut a = CoeffSeq::zeros(lattice);
        a.coeffs[0] = C64::new(1.0, 0.0);
        a
    }

    pub fn delta(lattice: Arc<Lattice>, p: TfPoint) -> Result<Self> {
        let i = lattice.index_of(p).ok_or(Error::LatticeMismatch)?;
        let mut a = CoeffSeq::zeros(lattice);
        a.coeffs[i] = C64::new(1.0, 0.0);
        Ok(a)
    }

    /// Standard complex normal coefficients.
    pub fn random<R: Rng + ?Sized>(lattice: Arc<Lattice>, rng: &mut R) -> Self {
        let coeffs = (0..lattice.len())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        CoeffSeq { lattice, coeffs }
    }

    /// Builds the sequence `lambda -> f(lambda)` over the lattice.
    pub fn from_fn(lattice: Arc<Lattice>, f: impl FnMut(TfPoint) -> C64) -> Self {
        let coeffs = lattice.points().iter().copied().map(f).collect();
        CoeffSeq { lattice, coeffs }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient at `p`; zero off the lattice.
    pub fn get(&self, p: TfPoint) -> C64 {
        self.lattice
            .index_of(p)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (TfPoint, C64)> + '_ {
        self.lattice.points().iter().copied().zip(self.coeffs.iter().copied())
    }

    fn check_same_lattice(&self, other: &CoeffSeq) -> Result<()> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || *self.lattice == *other.lattice {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    pub fn scale(&self, c: C64) -> CoeffSeq {
        CoeffSeq {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        self.check_same_lattice(other)?;
        Ok(CoeffSeq {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Plain l^1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(a # b)(lambda) = sum_mu a(mu) b(lambda - mu) c(mu, lambda - mu)`.
    pub fn twisted_conv(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        self.check_same_lattice(other)?;
        let n = self.n();
        let lat = &self.lattice;
        let mut out = vec![C64::new(0.0, 0.0); lat.len()];
        for (mu, a) in self.iter() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (nu, b) in other.iter() {
                let i = lat
                    .index_of(mu.add(nu, n))
                    .expect("lattice is closed under addition");
                out[i] += a * b * cocycle(mu, nu, n);
            }
        }
        Ok(CoeffSeq {
            lattice: lat.clone(),
            coeffs: out,
        })
    }

    /// `a*(lambda) = c(lambda, lambda) conj(a(-lambda))`, so that the
    /// representation of `a*` is the adjoint matrix.
    pub fn involution(&self) -> CoeffSeq {
        let n = self.n();
        CoeffSeq::from_fn(self.lattice.clone(), |p| {
            cocycle(p, p, n) * self.get(p.neg(n)).conj()
        })
    }

    /// `sum_lambda |a(lambda)| v(lift(lambda))^s`.
    pub fn weighted_norm(&self, v: &Weight, s: f64) -> Result<f64> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::param(format!("weight exponent must be >= 0, got {s}")));
        }
        let n = self.n();
        let mut total = 0.0;
        for (p, a) in self.iter() {
            total += a.norm() * v.eval_lifted(p, n)?.powf(s);
        }
        Ok(total)
    }

    /// `sum_lambda a(lambda) pi(lambda)`.
    pub fn represent(&self) -> OperatorMatrix {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (p, a) in self.iter() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..n {
                let t = (s + p.k) % n;
                m[(t, s)] += a * root_of_unity(n, (p.l * t) as i64);
            }
        }
        OperatorMatrix::from_trusted(m)
    }

    /// Applies the represented operator to a signal without forming the matrix.
    pub fn apply(&self, g: &Signal) -> Result<Signal> {
        let n = self.n();
        g.check_same_n(n)?;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (p, a) in self.iter() {
            for (t, slot) in out.iter_mut().enumerate() {
                *slot += a * root_of_unity(n, (p.l * t) as i64) * g.values()[(t + n - p.k) % n];
            }
        }
        Signal::new(out)
    }

    /// The inverse element, computed from the inverse matrix and projected back
    /// onto the lattice. Returns the inverse and the projection residual.
    pub fn invert_with_residual(&self) -> Result<(CoeffSeq, f64)> {
        let a = self.represent();
        let (smin, smax) = linalg::singular_value_range(a.entries());
        if smin.is_nan() || smax.is_nan() || smin <= INVERTIBILITY_THRESHOLD * smax {
            return Err(Error::NotInvertible {
                smallest_singular_value: smin,
            });
        }
        let inv = a
            .into_inner()
            .try_inverse()
            .ok_or(Error::NotInvertible {
                smallest_singular_value: smin,
            })?;
        coefficients_of(&OperatorMatrix::from_trusted(inv), &self.lattice)
    }

    pub fn invert(&self) -> Result<CoeffSeq> {
        self.invert_with_residual().map(|(b, _)| b)
    }

    /// The canonical trace, `a(0, 0)`.
    pub fn trace_tau(&self) -> C64 {
        self.coeffs[0]
    }

    /// Eigenvalues of the represented matrix, with multiplicity.
    pub fn spectrum(&self) -> Vec<C64> {
        linalg::eigenvalues(self.represent().entries())
    }
}

/// Recovers coefficients on `lattice` from an operator using
/// `trace(pi(lambda) pi(mu)^H) = N [lambda = mu]`.
///
/// The residual is the Frobenius distance between the operator and the
/// representation of the recovered coefficients; it vanishes exactly when the
/// operator lies in the span of the lattice shifts.
pub fn coefficients_of(a: &OperatorMatrix, lattice: &Arc<Lattice>) -> Result<(CoeffSeq, f64)> {
    let n = lattice.n();
    if a.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: a.n(),
        });
    }
    let m = a.entries();
    let scale = 1.0 / n as f64;
    let seq = CoeffSeq::from_fn(lattice.clone(), |p| {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..n {
            let t = (s + p.k) % n;
            acc += m[(t, s)] * root_of_unity(n, -((p.l * t) as i64));
        }
        acc * scale
    });
    let residual = a.distance(&seq.represent());
    Ok((seq, residual))
}
