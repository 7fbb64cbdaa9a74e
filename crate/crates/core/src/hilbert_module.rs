//! Signals as a bimodule over the twisted group algebras of a lattice and of
//! its adjoint: module-valued inner products, actions, module frames and the
//! window-count probe.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CoeffSeq, OperatorMatrix, INVERTIBILITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::frames::{janssen_multiwindow, GaborSystem};
use crate::lattice::{Lattice, Volume};
use crate::linalg::{self, CMatrix};
use crate::tf::{cocycle, root_of_unity, stft, Signal, TfPoint, C64};

/// Left inner product `lambda -> <f, pi(lambda) g>` on the lattice.
pub fn inner_left(f: &Signal, g: &Signal, lattice: &Arc<Lattice>) -> Result<CoeffSeq> {
    let n = lattice.n();
    f.check_same_n(n)?;
    g.check_same_n(n)?;
    let v = stft(f, g)?;
    Ok(CoeffSeq::from_fn(lattice.clone(), |p| v.get(p)))
}

/// Right inner product `mu -> <pi(mu) g, f>` on the adjoint lattice.
///
/// The `vol^-1` prefactor lives in [`represent_right`], so the represented
/// operator is `vol^-1 sum_mu <pi(mu) g, f> pi(mu)^H`.
pub fn inner_right(f: &Signal, g: &Signal, lattice: &Lattice) -> Result<CoeffSeq> {
    let n = lattice.n();
    f.check_same_n(n)?;
    g.check_same_n(n)?;
    let v = stft(f, g)?;
    let adjoint = Arc::new(lattice.adjoint());
    Ok(CoeffSeq::from_fn(adjoint, |mu| v.get(mu).conj()))
}

/// `sum_lambda a(lambda) pi(lambda) g`.
pub fn act_left(a: &CoeffSeq, g: &Signal) -> Result<Signal> {
    a.apply(g)
}

fn inv_vol(lattice: &Lattice) -> f64 {
    lattice.len() as f64 / lattice.n() as f64
}

fn check_on_adjoint(b: &CoeffSeq, lattice: &Lattice) -> Result<()> {
    if b.n() == lattice.n() && **b.lattice() == lattice.adjoint() {
        Ok(())
    } else {
        Err(Error::LatticeMismatch)
    }
}

/// `(pi(mu)^H g)(s) = e^{-2 pi i l (s + k) / N} g(s + k)`.
fn shift_adjoint(mu: TfPoint, g: &[C64], out: &mut [C64], weight: C64) {
    let n = g.len();
    for (s, slot) in out.iter_mut().enumerate() {
        let t = (s + mu.k) % n;
        *slot += weight * root_of_unity(n, -((mu.l * t) as i64)) * g[t];
    }
}

/// `vol(L)^-1 sum_mu b(mu) pi(mu)^H g` for `b` on the adjoint lattice.
pub fn act_right(g: &Signal, b: &CoeffSeq, lattice: &Lattice) -> Result<Signal> {
    check_on_adjoint(b, lattice)?;
    g.check_same_n(lattice.n())?;
    let scale = inv_vol(lattice);
    let mut out = vec![C64::new(0.0, 0.0); lattice.n()];
    for (mu, c) in b.iter() {
        if c != C64::new(0.0, 0.0) {
            shift_adjoint(mu, g.values(), &mut out, c * scale);
        }
    }
    Signal::new(out)
}

/// Matrix of the right action, `vol(L)^-1 sum_mu b(mu) pi(mu)^H`.
pub fn represent_right(b: &CoeffSeq, lattice: &Lattice) -> Result<OperatorMatrix> {
    check_on_adjoint(b, lattice)?;
    let scale = C64::new(inv_vol(lattice), 0.0);
    let adj = b.represent_conj_shifts();
    OperatorMatrix::new(adj * scale)
}

/// Product on the adjoint lattice matching `R(b1 . b2) = R(b2) R(b1)`:
/// `vol^-1 sum_mu b1(mu) b2(lambda - mu) conj(c(mu, lambda - mu))`.
pub fn right_product(b1: &CoeffSeq, b2: &CoeffSeq, lattice: &Lattice) -> Result<CoeffSeq> {
    check_on_adjoint(b1, lattice)?;
    check_on_adjoint(b2, lattice)?;
    let n = lattice.n();
    let scale = inv_vol(lattice);
    let lat = b1.lattice().clone();
    let mut out = vec![C64::new(0.0, 0.0); lat.len()];
    for (mu, x) in b1.iter() {
        for (nu, y) in b2.iter() {
            let i = lat.index_of(mu.add(nu, n)).expect("closed under addition");
            out[i] += x * y * cocycle(mu, nu, n).conj() * scale;
        }
    }
    CoeffSeq::new(lat, out)
}

/// `S_{g,h} f = sum_lambda <f, pi(lambda) g> pi(lambda) h`.
pub fn frame_type_operator(g: &Signal, h: &Signal, lattice: &Arc<Lattice>, f: &Signal) -> Result<Signal> {
    act_left(&inner_left(f, g, lattice)?, h)
}

/// Relative distance between `L<f,g> . h` and `f . <g,h>_L°`.
pub fn associativity_residual(f: &Signal, g: &Signal, h: &Signal, lattice: &Arc<Lattice>) -> Result<f64> {
    let lhs = act_left(&inner_left(f, g, lattice)?, h)?;
    let rhs = act_right(f, &inner_right(g, h, lattice)?, lattice)?;
    let scale = lhs.norm2().max(rhs.norm2());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.sub(&rhs).norm2() / scale)
}

/// Outcome of a module-frame test for a window family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleFrameReport {
    pub is_module_frame: bool,
    /// `||S~ - I||_F` for the tightened family.
    pub residual: f64,
    pub window_count: usize,
    pub vol: Volume,
    /// Largest deviation of `L<f,f> = sum_i L<f,g~_i> # L<g~_i,f>` over probe signals.
    pub identity_residual: f64,
}

const IDENTITY_PROBES: usize = 3;
const IDENTITY_SEED: u64 = 0x6d6f_6475;

/// Decides whether the windows generate a module frame and measures how close
/// the tightened family comes to a Parseval system.
pub fn module_frame_check(windows: &[Signal], lattice: &Arc<Lattice>) -> Result<ModuleFrameReport> {
    let sys = GaborSystem::new(windows.to_vec(), lattice.clone())?;
    let janssen = janssen_multiwindow(windows, lattice)?;
    let s = janssen.represent();
    let (smin, smax) = linalg::singular_value_range(s.entries());
    let is_module_frame = smax > 0.0 && smin > INVERTIBILITY_THRESHOLD * smax;

    let tightened = pseudo_tighten(&sys, s.entries());
    let tsys = GaborSystem::new(tightened.clone(), lattice.clone())?;
    let residual = tsys.frame_operator().distance(&OperatorMatrix::identity(lattice.n()));

    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_SEED);
    let mut identity_residual: f64 = 0.0;
    for _ in 0..IDENTITY_PROBES {
        let f = Signal::random(lattice.n(), &mut rng);
        let dev = module_identity_defect(&f, &tightened, lattice)?;
        identity_residual = identity_residual.max(dev / f.norm2().powi(2));
    }

    Ok(ModuleFrameReport {
        is_module_frame,
        residual,
        window_count: windows.len(),
        vol: lattice.volume(),
        identity_residual,
    })
}

/// `S^{+1/2}` applied to each window, dropping null directions of `S`.
fn pseudo_tighten(sys: &GaborSystem, s: &CMatrix) -> Vec<Signal> {
    let ev = linalg::hermitian_eigenvalues(s);
    let top = ev.last().copied().unwrap_or(0.0);
    let floor = top * INVERTIBILITY_THRESHOLD;
    let root = linalg::hermitian_function(s, |x| if x > floor { x.powf(-0.5) } else { 0.0 });
    sys.windows()
        .iter()
        .map(|w| Signal::from_dvector(&(&root * w.to_dvector())))
        .collect()
}

/// Max-abs deviation of `L<f,f> - sum_i L<f,g_i> # L<g_i,f>`.
pub fn module_identity_defect(f: &Signal, windows: &[Signal], lattice: &Arc<Lattice>) -> Result<f64> {
    let lhs = inner_left(f, f, lattice)?;
    let mut rhs = CoeffSeq::zeros(lattice.clone());
    for g in windows {
        let a = inner_left(f, g, lattice)?;
        let b = inner_left(g, f, lattice)?;
        rhs = rhs.add(&a.twisted_conv(&b)?)?;
    }
    Ok(lhs.sub(&rhs)?.max_abs())
}

/// `sum_i trace_tau(L<f,g_i> # L<g_i,f>)` and its scalar counterpart
/// `sum_i sum_lambda |<f, pi(lambda) g_i>|^2`.
pub fn trace_bridge(f: &Signal, windows: &[Signal], lattice: &Arc<Lattice>) -> Result<(C64, f64)> {
    let mut tau = C64::new(0.0, 0.0);
    let mut energy = 0.0;
    for g in windows {
        let a = inner_left(f, g, lattice)?;
        let b = inner_left(g, f, lattice)?;
        tau += a.twisted_conv(&b)?.trace_tau();
        energy += a.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok((tau, energy))
}

/// `S_L^{-1/2} g_i` for the multi-window frame operator `S_L`.
pub fn tight_multiwindow(windows: &[Signal], lattice: &Arc<Lattice>) -> Result<Vec<Signal>> {
    GaborSystem::new(windows.to_vec(), lattice.clone())?.canonical_tight()
}

/// Lower bound `ceil(vol)` and the smallest window count that random systems
/// reach as frames in at least 90% of trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinWindows {
    pub lower_bound: u64,
    pub achieved: Option<u64>,
}

pub const MIN_WINDOWS_SUCCESS: f64 = 0.9;

pub fn min_windows(lattice: &Arc<Lattice>, trials: usize, seed: u64) -> Result<MinWindows> {
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    let lower_bound = lattice.volume().ceil();
    for count in 1..=lower_bound + 1 {
        let rate = frame_rate(lattice, count as usize, trials, seed)?;
        if rate >= MIN_WINDOWS_SUCCESS {
            return Ok(MinWindows {
                lower_bound,
                achieved: Some(count),
            });
        }
    }
    Ok(MinWindows {
        lower_bound,
        achieved: None,
    })
}

/// Fraction of seeded random `count`-window systems that are frames.
pub fn frame_rate(lattice: &Arc<Lattice>, count: usize, trials: usize, seed: u64) -> Result<f64> {
    let n = lattice.n();
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((count as u64) << 32) | t as u64);
            let ws: Vec<Signal> = (0..count).map(|_| Signal::random(n, &mut rng)).collect();
            GaborSystem::new(ws, lattice.clone()).map(|s| s.frame_bounds().is_frame)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    Ok(hits as f64 / trials as f64)
}

impl CoeffSeq {
    /// `sum_mu b(mu) pi(mu)^H` without the volume prefactor.
    pub(crate) fn represent_conj_shifts(&self) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(n, n);
        for (mu, c) in self.iter() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..n {
                let t = (s + mu.k) % n;
                m[(s, t)] += c * root_of_unity(n, -((mu.l * t) as i64));
            }
        }
        m
    }
}
