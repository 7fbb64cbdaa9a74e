//! Condensed invariant suite over small instances, used by the `selftest` verb.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{coefficients_of, CoeffSeq, OperatorMatrix};
use crate::error::Result;
use crate::frames::{figa_check, janssen_representation, GaborSystem};
use crate::hilbert_module::{
    act_left, act_right, associativity_residual, inner_left, inner_right, module_frame_check,
    represent_right, right_product, tight_multiwindow, trace_bridge,
};
use crate::lattice::{all_subgroups, Lattice};
use crate::linalg::{self, CMatrix};
use crate::modspace::{mod_norm, ModNormSpec};
use crate::tf::{cocycle, phase_space, stft, stft_direct, symplectic_bicharacter, tf_matrix, tf_shift, Signal, TfPoint, C64};
use crate::weights::{GrsVerdict, Weight};

/// One named check: `value` is a residual compared against `tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }

    fn flag(name: &str, ok: bool) -> Self {
        CheckResult::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

const TRIALS: usize = 12;

fn lattices() -> Vec<Arc<Lattice>> {
    [
        (8usize, vec![[2i64, 0], [0, 2]]),
        (12, vec![[2, 0], [0, 3]]),
        (12, vec![[1, 5]]),
    ]
    .into_iter()
    .map(|(n, g)| Arc::new(Lattice::from_pairs(n, &g).expect("selftest lattice")))
    .collect()
}

fn fro(m: &CMatrix) -> f64 {
    linalg::frobenius(m)
}

/// Runs every check; results come in a fixed order.
pub fn run(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    tf_checks(&mut rng, &mut out)?;
    lattice_checks(&mut out)?;
    weight_checks(seed, &mut out)?;
    algebra_checks(&mut rng, &mut out)?;
    frame_checks(&mut rng, &mut out)?;
    module_checks(&mut rng, &mut out)?;
    modspace_checks(&mut rng, &mut out)?;
    Ok(out)
}

fn tf_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let (mut comp, mut comm, mut adj) = (0.0f64, 0.0f64, 0.0f64);
    for n in 2..=6 {
        let mats: Vec<(TfPoint, CMatrix)> = phase_space(n).map(|p| (p, tf_matrix(p, n))).collect();
        for (a, ma) in &mats {
            let neg = tf_matrix(a.neg(n), n) * cocycle(*a, *a, n);
            adj = adj.max(fro(&(ma.adjoint() - neg)));
            for (b, mb) in &mats {
                let sum = tf_matrix(a.add(*b, n), n) * cocycle(*a, *b, n);
                comp = comp.max(fro(&(ma * mb - sum)));
                let swapped = mb * ma * symplectic_bicharacter(*a, *b, n);
                comm = comm.max(fro(&(ma * mb - swapped)));
            }
        }
    }
    out.push(CheckResult::new("time-frequency shift composition", comp, 1e-12));
    out.push(CheckResult::new("time-frequency shift commutation", comm, 1e-12));
    out.push(CheckResult::new("time-frequency shift adjoint", adj, 1e-12));

    let (mut fast, mut moyal) = (0.0f64, 0.0f64);
    for _ in 0..TRIALS {
        let n = rng.random_range(3..=16);
        let f = Signal::random(n, rng);
        let g = Signal::random(n, rng);
        let v = stft(&f, &g)?;
        fast = fast.max(v.max_abs_diff(&stft_direct(&f, &g)?));
        let expect = n as f64 * f.norm2().powi(2) * g.norm2().powi(2);
        moyal = moyal.max((v.energy() - expect).abs() / expect);
    }
    out.push(CheckResult::new("STFT fast path matches direct sum", fast, 1e-10));
    out.push(CheckResult::new("STFT Moyal identity", moyal, 1e-10));
    Ok(())
}

fn lattice_checks(out: &mut Vec<CheckResult>) -> Result<()> {
    let mut ok = true;
    for n in [4, 6, 8] {
        for l in all_subgroups(n)? {
            let adj = l.adjoint();
            ok &= l.len() * adj.len() == n * n && adj.adjoint() == l;
        }
    }
    out.push(CheckResult::flag("adjoint lattice duality", ok));
    Ok(())
}

fn weight_checks(seed: u64, out: &mut Vec<CheckResult>) -> Result<()> {
    let families = [
        Weight::polynomial(2.0),
        Weight::subexponential(1.0, 0.5),
        Weight::exponential(1.0),
    ];
    let mut sym: f64 = 0.0;
    for w in &families {
        for p in [(1, 0), (3, -4), (-7, 2), (10, 10)] {
            sym = sym.max((w.eval(p)? - w.eval((-p.0, -p.1))?).abs());
        }
    }
    out.push(CheckResult::new("weight symmetry", sym, 0.0));

    let mut tower: f64 = 0.0;
    for p in [(0, 0), (2, 1), (-5, 3), (20, -9)] {
        let base = Weight::polynomial(1.0).eval(p)?;
        for s in [0.5, 2.0, 3.0] {
            let v = Weight::polynomial(s).eval(p)?;
            tower = tower.max((v - base.powf(s)).abs() / v);
        }
    }
    out.push(CheckResult::new("polynomial weight power tower", tower, 1e-12));

    let sub = Weight::exponential(1.0)
        .check_submultiplicative(1000, seed)?
        .max_violation
        .max(Weight::subexponential(1.0, 0.5).check_submultiplicative(1000, seed)?.max_violation);
    out.push(CheckResult::new("exponential weights submultiplicative", sub, 1.0 + 1e-12));

    let mut grs_ok = true;
    for p in [(1, 0), (0, 1), (2, -3)] {
        grs_ok &= Weight::polynomial(2.0).grs_probe(p, 1 << 20)?.verdict == GrsVerdict::ConsistentWithGrs;
        grs_ok &= Weight::subexponential(1.0, 0.5).grs_probe(p, 1 << 20)?.verdict
            == GrsVerdict::ConsistentWithGrs;
        grs_ok &= Weight::exponential(1.0).grs_probe(p, 1 << 20)?.verdict == GrsVerdict::ViolatesGrs;
    }
    out.push(CheckResult::flag("GRS verdicts for built-in families", grs_ok));
    Ok(())
}

fn algebra_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let (mut hom, mut inv, mut iso, mut round, mut support) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut sub: f64 = 0.0;
    let v = Weight::subexponential(1.0, 0.5);
    for l in lattices() {
        for _ in 0..TRIALS {
            let a = CoeffSeq::random(l.clone(), rng);
            let b = CoeffSeq::random(l.clone(), rng);
            let ab = a.twisted_conv(&b)?;
            hom = hom.max(fro(&(ab.represent().entries() - a.represent().entries() * b.represent().entries())));
            inv = inv.max(fro(&(a.involution().represent().entries() - a.represent().entries().adjoint())));
            for s in [0.0, 1.0, 2.0] {
                let lhs = ab.weighted_norm(&v, s)?;
                let rhs = a.weighted_norm(&v, s)? * b.weighted_norm(&v, s)?;
                sub = sub.max(lhs / rhs);
                iso = iso.max((a.involution().weighted_norm(&v, s)? - a.weighted_norm(&v, s)?).abs());
            }
            let (back, _) = coefficients_of(&a.represent(), &l)?;
            round = round.max(back.sub(&a)?.max_abs());
            if let Ok((_, res)) = a.invert_with_residual() {
                support = support.max(res);
            }
        }
    }
    out.push(CheckResult::new("representation is a homomorphism", hom, 1e-11));
    out.push(CheckResult::new("involution maps to adjoint matrix", inv, 1e-11));
    out.push(CheckResult::new("weighted norm submultiplicative", sub, 1.0 + 1e-12));
    out.push(CheckResult::new("involution is isometric", iso, 1e-10));
    out.push(CheckResult::new("representation is faithful", round, 1e-12));
    out.push(CheckResult::new("inverse stays supported on lattice", support, 1e-9));
    Ok(())
}

fn frame_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let (mut comm, mut jans, mut figa, mut recon, mut span) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for l in lattices() {
        let n = l.n();
        for _ in 0..TRIALS / 3 {
            let g = Signal::random(n, rng);
            let sys = GaborSystem::single(g.clone(), l.clone())?;
            let s = sys.frame_operator();
            for &p in l.points() {
                let m = tf_matrix(p, n);
                comm = comm.max(fro(&(s.entries() * &m - &m * s.entries())) / s.frobenius());
            }
            jans = jans.max(s.distance(&janssen_representation(&g, &g, &l)?.represent()) / s.frobenius());
            for _ in 0..4 {
                let q: Vec<Signal> = (0..4).map(|_| Signal::random(n, rng)).collect();
                figa = figa.max(figa_check(&q[0], &q[1], &q[2], &q[3], &l)?);
            }
            if sys.frame_bounds().is_frame {
                let f = Signal::random(n, rng);
                let duals = sys.canonical_dual()?;
                let tight = sys.canonical_tight()?;
                let a = sys.reconstruct(&f, &duals)?;
                let b = GaborSystem::new(duals.clone(), l.clone())?.reconstruct(&f, sys.windows())?;
                let c = GaborSystem::new(tight.clone(), l.clone())?.reconstruct(&f, &tight)?;
                for r in [a, b, c] {
                    recon = recon.max(r.sub(&f).norm2() / f.norm2());
                }
                let root = linalg::hermitian_function(s.entries(), |x| x.powf(-0.5));
                let (_, res) = coefficients_of(&OperatorMatrix::new(root)?, &Arc::new(l.adjoint()))?;
                span = span.max(res);
            }
        }
    }
    out.push(CheckResult::new("frame operator commutes with lattice shifts", comm, 1e-10));
    out.push(CheckResult::new("Janssen representation", jans, 1e-10));
    out.push(CheckResult::new("fundamental identity of Gabor analysis", figa, 1e-10));
    out.push(CheckResult::new("dual and tight reconstruction", recon, 1e-9));
    out.push(CheckResult::new("tight window in adjoint-lattice span", span, 1e-9));
    Ok(())
}

fn module_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut pos: f64 = 0.0;
    let (mut sym, mut lcomp, mut rcomp, mut bimod, mut assoc, mut pairing) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for l in lattices() {
        let n = l.n();
        let adj = Arc::new(l.adjoint());
        for _ in 0..TRIALS {
            let f = Signal::random(n, rng);
            let g = Signal::random(n, rng);
            let h = Signal::random(n, rng);
            let a = CoeffSeq::random(l.clone(), rng);
            let b = CoeffSeq::random(adj.clone(), rng);
            let left = inner_left(&f, &f, &l)?.represent();
            let right = represent_right(&inner_right(&f, &f, &l)?, &l)?;
            for m in [left, right] {
                pos = pos.min(linalg::hermitian_eigenvalues(m.entries())[0] / m.frobenius());
            }
            sym = sym.max(inner_left(&f, &g, &l)?.involution().sub(&inner_left(&g, &f, &l)?)?.max_abs());
            let x = inner_left(&act_left(&a, &f)?, &g, &l)?;
            lcomp = lcomp.max(x.sub(&a.twisted_conv(&inner_left(&f, &g, &l)?)?)?.l1_norm());
            let y = inner_right(&f, &act_right(&g, &b, &l)?, &l)?;
            rcomp = rcomp.max(y.sub(&right_product(&inner_right(&f, &g, &l)?, &b, &l)?)?.l1_norm());
            let u = inner_right(&act_left(&a, &f)?, &g, &l)?;
            let w = inner_right(&f, &act_left(&a.involution(), &g)?, &l)?;
            bimod = bimod.max(u.sub(&w)?.l1_norm());
            assoc = assoc.max(associativity_residual(&f, &g, &h, &l)?);
            let c = inner_left(&f, &g, &l)?;
            let lhs: C64 = c.coeffs().iter().zip(a.coeffs()).map(|(x, y)| x * y.conj()).sum();
            pairing = pairing.max((lhs - f.inner(&act_left(&a, &g)?)).norm());
        }
    }
    out.push(CheckResult::new("module inner products positive", -pos, 1e-10));
    out.push(CheckResult::new("left inner product involution symmetry", sym, 1e-12));
    out.push(CheckResult::new("left action compatibility", lcomp, 1e-10));
    out.push(CheckResult::new("right action compatibility", rcomp, 1e-10));
    out.push(CheckResult::new("left action adjointable for right inner product", bimod, 1e-10));
    out.push(CheckResult::new("associativity (left/right module)", assoc, 1e-10));
    out.push(CheckResult::new("coefficient and synthesis maps adjoint", pairing, 1e-10));

    let mut agree = true;
    let (mut bridge, mut parseval) = (0.0f64, 0.0f64);
    let l8 = Arc::new(Lattice::from_pairs(8, &[[4, 0], [0, 4]])?);
    for l in lattices().into_iter().chain([l8]) {
        let n = l.n();
        for count in 1..=2 {
            let ws: Vec<Signal> = (0..count).map(|_| Signal::random(n, rng)).collect();
            let rep = module_frame_check(&ws, &l)?;
            agree &= rep.is_module_frame == GaborSystem::new(ws.clone(), l.clone())?.frame_bounds().is_frame;
            let f = Signal::random(n, rng);
            let (tau, energy) = trace_bridge(&f, &ws, &l)?;
            bridge = bridge.max((tau - C64::new(energy, 0.0)).norm() / energy);
            if rep.is_module_frame {
                let tight = tight_multiwindow(&ws, &l)?;
                let mut back = Signal::zeros(n);
                for t in &tight {
                    back = back.add(&act_left(&inner_left(&f, t, &l)?, t)?);
                }
                parseval = parseval.max(back.sub(&f).norm2() / f.norm2());
            }
        }
    }
    out.push(CheckResult::flag("module frame iff multi-window frame", agree));
    out.push(CheckResult::new("module trace reproduces Parseval sum", bridge, 1e-10));
    out.push(CheckResult::new("tight multi-window reconstruction", parseval, 1e-9));
    Ok(())
}

fn modspace_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let n = 12;
    let g = Signal::gaussian(n, 2.0);
    let v = Weight::subexponential(1.0, 0.5);
    let spec = ModNormSpec::new(1.0, 2.0, v.clone(), 1.0, g.clone())?;
    let flat = ModNormSpec::new(2.0, 2.0, Weight::constant(), 1.0, g.clone())?;
    let (mut moyal, mut homog, mut tri, mut cov) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..TRIALS {
        let f = Signal::random(n, rng);
        let h = Signal::random(n, rng);
        let expect = (n as f64).sqrt() * f.norm2() * g.norm2();
        moyal = moyal.max((mod_norm(&f, &flat)? - expect).abs() / expect);
        let c = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let nf = mod_norm(&f, &spec)?;
        homog = homog.max((mod_norm(&f.scale(c), &spec)? - c.norm() * nf).abs() / (1.0 + nf));
        tri = tri.max(mod_norm(&f.add(&h), &spec)? - nf - mod_norm(&h, &spec)?);
        let mu = TfPoint::new(rng.random_range(0..n as i64), rng.random_range(0..n as i64), n);
        let shifted = mod_norm(&tf_shift(mu, &f)?, &spec)?;
        cov = cov.max(shifted / (v.eval_lifted(mu, n)? * nf));
    }
    out.push(CheckResult::new("modulation norm Moyal identity", moyal, 1e-10));
    out.push(CheckResult::new("modulation norm homogeneity", homog, 1e-10));
    out.push(CheckResult::new("modulation norm triangle inequality", tri, 1e-10));
    out.push(CheckResult::new("modulation norm shift covariance", cov, 1.0 + 1e-12));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let results = run(7).unwrap();
        for r in &results {
            assert!(r.passed, "{} failed: {} > {}", r.name, r.value, r.tolerance);
        }
        assert!(results.len() >= 30);
    }
}
