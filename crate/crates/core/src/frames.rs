//! Gabor systems over a lattice: frame operators, Janssen coefficients on the
//! adjoint lattice, frame bounds, canonical dual and tight windows.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CoeffSeq, OperatorMatrix};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, CMatrix};
use crate::tf::{stft, tf_shift, Signal, C64};

/// Relative lower/upper eigenvalue ratio above which a system is a frame.
pub const FRAME_THRESHOLD: f64 = 1e-10;
const EIGEN_FLOOR: f64 = 1e-14;

/// Windows `g_1, ..., g_n` shifted along one lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GaborSystem {
    windows: Vec<Signal>,
    lattice: Arc<Lattice>,
}

impl GaborSystem {
    pub fn new(windows: Vec<Signal>, lattice: Arc<Lattice>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::param("a Gabor system needs at least one window"));
        }
        for w in &windows {
            w.check_same_n(lattice.n())?;
        }
        Ok(GaborSystem { windows, lattice })
    }

    pub fn single(window: Signal, lattice: Arc<Lattice>) -> Result<Self> {
        GaborSystem::new(vec![window], lattice)
    }

    pub fn windows(&self) -> &[Signal] {
        &self.windows
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    /// Matrix whose columns are `pi(lambda) g_i`, window-major.
    pub fn synthesis_matrix(&self) -> CMatrix {
        synthesis_matrix(&self.windows, &self.lattice)
    }

    pub fn frame_operator(&self) -> OperatorMatrix {
        let g = self.synthesis_matrix();
        OperatorMatrix::from_trusted(linalg::hermitian_part(&(&g * g.adjoint())))
    }

    pub fn frame_bounds(&self) -> FrameBounds {
        FrameBounds::from_operator(&self.frame_operator())
    }

    pub fn canonical_dual(&self) -> Result<Vec<Signal>> {
        let s = self.frame_operator();
        let bounds = FrameBounds::from_operator(&s);
        bounds.require_frame()?;
        let inv = linalg::hermitian_function(s.entries(), |x| 1.0 / x);
        Ok(apply_all(&inv, &self.windows))
    }

    pub fn canonical_tight(&self) -> Result<Vec<Signal>> {
        let s = self.frame_operator();
        let bounds = FrameBounds::from_operator(&s);
        bounds.require_frame()?;
        let floor = bounds.lower * EIGEN_FLOOR;
        let root = linalg::hermitian_function(s.entries(), |x| {
            if x > floor {
                x.powf(-0.5)
            } else {
                0.0
            }
        });
        Ok(apply_all(&root, &self.windows))
    }

    /// `sum_i sum_lambda <f, pi(lambda) d_i> pi(lambda) g_i`.
    pub fn reconstruct(&self, f: &Signal, duals: &[Signal]) -> Result<Signal> {
        if duals.len() != self.windows.len() {
            return Err(Error::Shape(format!(
                "{} dual windows for {} windows",
                duals.len(),
                self.windows.len()
            )));
        }
        f.check_same_n(self.n())?;
        for d in duals {
            d.check_same_n(self.n())?;
        }
        let g = self.synthesis_matrix();
        let d = synthesis_matrix(duals, &self.lattice);
        let coeffs = d.adjoint() * f.to_dvector();
        Ok(Signal::from_dvector(&(g * coeffs)))
    }
}

pub(crate) fn synthesis_matrix(windows: &[Signal], lattice: &Lattice) -> CMatrix {
    let n = lattice.n();
    let cols: Vec<Signal> = windows
        .par_iter()
        .flat_map_iter(|w| {
            lattice
                .points()
                .iter()
                .map(move |&p| tf_shift(p, w).expect("lattice points are reduced"))
        })
        .collect();
    CMatrix::from_fn(n, cols.len(), |r, c| cols[c].values()[r])
}

fn apply_all(m: &CMatrix, windows: &[Signal]) -> Vec<Signal> {
    windows
        .iter()
        .map(|w| Signal::from_dvector(&(m * w.to_dvector())))
        .collect()
}

/// Optimal frame bounds `A <= B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub is_frame: bool,
}

impl FrameBounds {
    /// Bounds from the extreme eigenvalues of a frame operator.
    pub fn from_operator(s: &OperatorMatrix) -> FrameBounds {
        let ev = linalg::hermitian_eigenvalues(s.entries());
        let upper = ev.last().copied().unwrap_or(0.0).max(0.0);
        let lower = ev.first().copied().unwrap_or(0.0).clamp(0.0, upper);
        FrameBounds {
            lower,
            upper,
            is_frame: upper > 0.0 && lower > FRAME_THRESHOLD * upper,
        }
    }

    pub fn require_frame(&self) -> Result<()> {
        if self.is_frame {
            Ok(())
        } else {
            Err(Error::NotAFrame {
                lower_bound: self.lower,
            })
        }
    }
}

/// Coefficients `vol(L)^-1 <h, pi(mu) g>` on the adjoint lattice, whose
/// representation is `f -> sum_lambda <f, pi(lambda) g> pi(lambda) h`.
pub fn janssen_representation(g: &Signal, h: &Signal, lattice: &Lattice) -> Result<CoeffSeq> {
    let n = lattice.n();
    g.check_same_n(n)?;
    h.check_same_n(n)?;
    let adjoint = Arc::new(lattice.adjoint());
    let inv_vol = lattice.len() as f64 / n as f64;
    let v = stft(h, g)?;
    Ok(CoeffSeq::from_fn(adjoint, |mu| v.get(mu) * inv_vol))
}

/// Janssen coefficients of the multi-window operator `sum_i S_{g_i, g_i}`.
pub fn janssen_multiwindow(windows: &[Signal], lattice: &Lattice) -> Result<CoeffSeq> {
    let adjoint = Arc::new(lattice.adjoint());
    let mut total = CoeffSeq::zeros(adjoint.clone());
    for w in windows {
        total = total.add(&janssen_representation(w, w, lattice)?)?;
    }
    Ok(total)
}

/// Relative residual `|LHS - RHS| / (1 + |LHS|)` of the fundamental identity
/// `sum_L <f1, pi g1><pi g2, f2> = vol^-1 sum_L° <f1, pi f2><pi g2, g1>`.
pub fn figa_check(f1: &Signal, f2: &Signal, g1: &Signal, g2: &Signal, lattice: &Lattice) -> Result<f64> {
    let (lhs, rhs) = figa_sides(f1, f2, g1, g2, lattice)?;
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm()))
}

/// Both sides of the fundamental identity, summed in canonical lattice order.
pub fn figa_sides(
    f1: &Signal,
    f2: &Signal,
    g1: &Signal,
    g2: &Signal,
    lattice: &Lattice,
) -> Result<(C64, C64)> {
    let n = lattice.n();
    for s in [f1, f2, g1, g2] {
        s.check_same_n(n)?;
    }
    let v11 = stft(f1, g1)?;
    let v22 = stft(f2, g2)?;
    let lhs: C64 = lattice
        .points()
        .iter()
        .map(|&p| v11.get(p) * v22.get(p).conj())
        .sum();
    let adjoint = lattice.adjoint();
    let w12 = stft(f1, f2)?;
    let w21 = stft(g1, g2)?;
    let inv_vol = lattice.len() as f64 / n as f64;
    let rhs: C64 = adjoint
        .points()
        .iter()
        .map(|&p| w12.get(p) * w21.get(p).conj())
        .sum::<C64>()
        * inv_vol;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::tf_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat(n: usize, gens: &[[i64; 2]]) -> Arc<Lattice> {
        Arc::new(Lattice::from_pairs(n, gens).unwrap())
    }

    fn unit_random(n: usize, rng: &mut ChaCha8Rng) -> Signal {
        let g = Signal::random(n, rng);
        g.scale(C64::new(1.0 / g.norm2(), 0.0))
    }

    /// Literal `sum_lambda <f, pi g> pi g` assembly.
    fn frame_operator_by_sum(windows: &[Signal], l: &Lattice) -> CMatrix {
        let n = l.n();
        let mut s = CMatrix::zeros(n, n);
        for w in windows {
            for &p in l.points() {
                let v = tf_shift(p, w).unwrap().to_dvector();
                s += &v * v.adjoint();
            }
        }
        s
    }

    #[test]
    fn frame_operator_matches_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = lat(12, &[[2, 0], [0, 3]]);
        let ws = vec![Signal::random(12, &mut rng), Signal::random(12, &mut rng)];
        let sys = GaborSystem::new(ws.clone(), l.clone()).unwrap();
        let s = sys.frame_operator();
        let oracle = frame_operator_by_sum(&ws, &l);
        assert!(linalg::frobenius(&(s.entries() - &oracle)) < 1e-11 * linalg::frobenius(&oracle));
        assert!(s.is_hermitian());
        for &p in l.points() {
            let m = tf_matrix(p, 12);
            let comm = s.entries() * &m - &m * s.entries();
            assert!(linalg::frobenius(&comm) < 1e-10 * s.frobenius());
        }
    }

    #[test]
    fn full_lattice_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = unit_random(6, &mut rng);
        let sys = GaborSystem::single(g.clone(), Arc::new(Lattice::full(6).unwrap())).unwrap();
        let s = sys.frame_operator();
        let target = CMatrix::identity(6, 6) * C64::new(6.0, 0.0);
        assert!(linalg::frobenius(&(s.entries() - target)) < 1e-12);
        let b = sys.frame_bounds();
        assert!((b.lower - 6.0).abs() < 1e-12 && (b.upper - 6.0).abs() < 1e-12);
        let dual = &sys.canonical_dual().unwrap()[0];
        assert!(dual.sub(&g.scale(C64::new(1.0 / 6.0, 0.0))).norm2() < 1e-13);
        let tight = &sys.canonical_tight().unwrap()[0];
        assert!(tight.sub(&g.scale(C64::new(6f64.powf(-0.5), 0.0))).norm2() < 1e-13);
    }

    #[test]
    fn zero_window_gives_zero_operator() {
        let sys = GaborSystem::single(Signal::zeros(8), lat(8, &[[1, 0]])).unwrap();
        assert_eq!(sys.frame_operator().frobenius(), 0.0);
        let b = sys.frame_bounds();
        assert!(!b.is_frame);
        assert!(matches!(sys.canonical_dual(), Err(Error::NotAFrame { .. })));
    }

    #[test]
    fn delta_translates_are_a_basis() {
        let n = 8;
        let sys = GaborSystem::single(Signal::delta(n, 0), Lattice::separable(n, 1, n).map(Arc::new).unwrap())
            .unwrap();
        let b = sys.frame_bounds();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12 && b.is_frame);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = Signal::random(n, &mut rng);
        let back = sys.reconstruct(&f, &[Signal::delta(n, 0)]).unwrap();
        assert!(back.sub(&f).norm2() < 1e-14);
        let zero = sys.reconstruct(&f, &[Signal::zeros(n)]).unwrap();
        assert_eq!(zero.norm2(), 0.0);
    }

    #[test]
    fn undersampled_single_window_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let l = lat(8, &[[4, 0], [0, 4]]);
        let sys = GaborSystem::single(Signal::random(8, &mut rng), l).unwrap();
        let ev = linalg::hermitian_eigenvalues(sys.frame_operator().entries());
        let rank = ev.iter().filter(|&&x| x > 1e-10 * ev[7]).count();
        assert!(rank <= 4);
        assert!(!sys.frame_bounds().is_frame);
        match sys.canonical_tight() {
            Err(Error::NotAFrame { lower_bound }) => assert!(lower_bound < 1e-9),
            other => panic!("expected frame error, got {other:?}"),
        }
    }

    #[test]
    fn janssen_matches_frame_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let l = lat(12, &[[2, 0], [0, 3]]);
        let g = Signal::random(12, &mut rng);
        let h = Signal::random(12, &mut rng);
        let sys = GaborSystem::single(g.clone(), l.clone()).unwrap();
        let s = sys.frame_operator();
        let j = janssen_representation(&g, &g, &l).unwrap();
        assert!(s.distance(&j.represent()) < 1e-10 * s.frobenius());
        let c0 = j.trace_tau();
        let vol_inv = l.len() as f64 / 12.0;
        assert!((c0 - C64::new(vol_inv * g.norm2().powi(2), 0.0)).norm() < 1e-12);

        // mixed windows: f -> sum <f, pi g> pi h
        let mixed = janssen_representation(&g, &h, &l).unwrap().represent();
        let oracle = synthesis_matrix(&[h], &l) * synthesis_matrix(std::slice::from_ref(&g), &l).adjoint();
        assert!(linalg::frobenius(&(mixed.entries() - &oracle)) < 1e-10 * linalg::frobenius(&oracle));

        let full = Lattice::full(12).unwrap();
        let jf = janssen_representation(&g, &g, &full).unwrap();
        assert_eq!(jf.coeffs().len(), 1);
        assert!((jf.coeffs()[0].re - 12.0 * g.norm2().powi(2)).abs() < 1e-10);
        let jz = janssen_representation(&Signal::zeros(12), &g, &l).unwrap();
        assert_eq!(jz.max_abs(), 0.0);
    }

    #[test]
    fn dual_and_tight_reconstruct() {
        let l = lat(12, &[[2, 0], [0, 3]]);
        let g = Signal::gaussian(12, 2.0);
        let sys = GaborSystem::single(g, l.clone()).unwrap();
        assert!(sys.frame_bounds().is_frame);
        let duals = sys.canonical_dual().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..5 {
            let f = Signal::random(12, &mut rng);
            let back = sys.reconstruct(&f, &duals).unwrap();
            assert!(back.sub(&f).norm2() < 1e-9 * f.norm2());
        }
        let tight = sys.canonical_tight().unwrap();
        let tsys = GaborSystem::new(tight.clone(), l.clone()).unwrap();
        let id = OperatorMatrix::identity(12);
        assert!(tsys.frame_operator().distance(&id) < 1e-9);
        let again = tsys.canonical_tight().unwrap();
        assert!(again[0].sub(&tight[0]).norm2() < 1e-10);
        let tdual = tsys.canonical_dual().unwrap();
        assert!(tdual[0].sub(&tight[0]).norm2() < 1e-10);
    }

    #[test]
    fn reconstruct_rejects_shape_mismatch() {
        let sys = GaborSystem::single(Signal::delta(4, 0), lat(4, &[[1, 0]])).unwrap();
        let f = Signal::delta(4, 1);
        assert!(matches!(sys.reconstruct(&f, &[]), Err(Error::Shape(_))));
        assert!(matches!(
            sys.reconstruct(&f, &[Signal::delta(6, 0)]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn figa_examples() {
        let n = 8;
        let d = Signal::delta(n, 0);
        let full = Lattice::full(n).unwrap();
        let (lhs, rhs) = figa_sides(&d, &d, &d, &d, &full).unwrap();
        assert!((lhs - C64::new(8.0, 0.0)).norm() < 1e-12);
        assert!((rhs - C64::new(8.0, 0.0)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let l = lat(12, &[[2, 0], [0, 3]]);
        let f = Signal::random(12, &mut rng);
        let z = Signal::zeros(12);
        let (lhs, rhs) = figa_sides(&f, &f, &z, &f, &l).unwrap();
        assert_eq!((lhs.norm(), rhs.norm()), (0.0, 0.0));
        for _ in 0..100 {
            let s: Vec<Signal> = (0..4).map(|_| Signal::random(12, &mut rng)).collect();
            assert!(figa_check(&s[0], &s[1], &s[2], &s[3], &l).unwrap() < 1e-10);
        }
    }

    #[test]
    fn tight_windows_stay_in_adjoint_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let l = lat(12, &[[3, 0], [0, 2]]);
        let g = Signal::random(12, &mut rng);
        let sys = GaborSystem::single(g, l.clone()).unwrap();
        let s = sys.frame_operator();
        let root = linalg::hermitian_function(s.entries(), |x| x.powf(-0.5));
        let adj = Arc::new(l.adjoint());
        let (_, res) = crate::algebra::coefficients_of(&OperatorMatrix::from_trusted(root), &adj).unwrap();
        assert!(res < 1e-9);
    }
}
