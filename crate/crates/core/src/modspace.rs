//! Weighted mixed-norm modulation norms of the discrete STFT.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::{stft, Signal, TfPoint};
use crate::weights::Weight;

/// Exponents, weight and window of a modulation norm. The weight enters as
/// `m(lift(k, l))^s`; `p`/`q` may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModNormSpec {
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub m: Weight,
    #[serde(default = "one")]
    pub s: f64,
    pub window: Signal,
}

fn one() -> f64 {
    1.0
}

/// Exponents serialize as numbers, with `"inf"` for infinity.
mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => super::parse_exponent(&t).map_err(de::Error::custom),
        }
    }
}

/// Parses `1.5`, `2`, `inf` or `infinity`.
pub fn parse_exponent(text: &str) -> std::result::Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| format!("exponent `{text}` is not a number or `inf`")),
    }
}

impl ModNormSpec {
    pub fn new(p: f64, q: f64, m: Weight, s: f64, window: Signal) -> Result<Self> {
        let spec = ModNormSpec { p, q, m, s, window };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("p", self.p), ("q", self.q)] {
            if e.is_nan() || e < 1.0 {
                return Err(Error::param(format!("exponent {name} must lie in [1, inf], got {e}")));
            }
        }
        if !(self.s.is_finite() && self.s >= 0.0) {
            return Err(Error::param(format!("weight exponent s must be >= 0, got {}", self.s)));
        }
        if self.window.is_zero() {
            return Err(Error::param("window must be nonzero"));
        }
        self.m.validate()
    }

    pub fn with_window(&self, window: Signal) -> Result<Self> {
        ModNormSpec::new(self.p, self.q, self.m.clone(), self.s, window)
    }
}

fn lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 1.0 {
        values.sum()
    } else {
        values.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `( sum_l ( sum_k |V_g f(k,l)|^p m(k,l)^p )^{q/p} )^{1/q}` with the usual
/// maxima for infinite exponents.
pub fn mod_norm(f: &Signal, spec: &ModNormSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.window.n();
    f.check_same_n(n)?;
    let v = stft(f, &spec.window)?;
    let mut weight = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            weight[k * n + l] = spec.m.eval_lifted(TfPoint { k, l }, n)?.powf(spec.s);
        }
    }
    let rows: Vec<f64> = (0..n)
        .map(|l| lp((0..n).map(|k| v.get(TfPoint { k, l }).norm() * weight[k * n + l]), spec.p))
        .collect();
    Ok(lp(rows.into_iter(), spec.q))
}

/// `mod_norm` with `p = q = 1` and weight `v^s`.
pub fn feichtinger_norm(f: &Signal, v: &Weight, s: f64, window: &Signal) -> Result<f64> {
    mod_norm(f, &ModNormSpec::new(1.0, 1.0, v.clone(), s, window.clone())?)
}

/// Range of `mod_norm(f; g1) / mod_norm(f; g2)` over a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRatio {
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Window-equivalence constants estimated on `fs`; the window in `spec` is
/// replaced by `g1` and `g2`. Signals with a zero norm are skipped.
pub fn window_equivalence_ratio(
    fs: &[Signal],
    g1: &Signal,
    g2: &Signal,
    spec: &ModNormSpec,
) -> Result<EquivalenceRatio> {
    let s1 = spec.with_window(g1.clone())?;
    let s2 = spec.with_window(g2.clone())?;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for f in fs {
        let a = mod_norm(f, &s1)?;
        let b = mod_norm(f, &s2)?;
        if a == 0.0 || b == 0.0 {
            continue;
        }
        let r = a / b;
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    if max_ratio == 0.0 {
        return Err(Error::param("every sample signal has zero norm"));
    }
    Ok(EquivalenceRatio { min_ratio, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::{tf_shift, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(p: f64, q: f64, m: Weight, s: f64, g: Signal) -> ModNormSpec {
        ModNormSpec::new(p, q, m, s, g).unwrap()
    }

    #[test]
    fn delta_examples() {
        let d = Signal::delta(4, 0);
        let flat = spec(1.0, 1.0, Weight::constant(), 1.0, d.clone());
        assert!((mod_norm(&d, &flat).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(mod_norm(&Signal::zeros(4), &flat).unwrap(), 0.0);
        // lifted frequencies 0, 1, 2, -1 with weight 1 + l^2
        let f = feichtinger_norm(&d, &Weight::polynomial(1.0), 2.0, &d).unwrap();
        assert!((f - 10.0).abs() < 1e-12);
    }

    #[test]
    fn moyal_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [5, 8, 12] {
            let f = Signal::random(n, &mut rng);
            let g = Signal::random(n, &mut rng);
            let v = mod_norm(&f, &spec(2.0, 2.0, Weight::constant(), 1.0, g.clone())).unwrap();
            let expect = (n as f64).sqrt() * f.norm2() * g.norm2();
            assert!((v - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn infinite_exponents_are_maxima() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = Signal::random(6, &mut rng);
        let g = Signal::gaussian(6, 1.5);
        let v = stft(&f, &g).unwrap();
        let peak = v.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let inf = spec(f64::INFINITY, f64::INFINITY, Weight::constant(), 1.0, g.clone());
        assert!((mod_norm(&f, &inf).unwrap() - peak).abs() < 1e-14);
        let mixed = spec(1.0, f64::INFINITY, Weight::constant(), 1.0, g.clone());
        let best_row = (0..6)
            .map(|l| (0..6).map(|k| v.get(TfPoint { k, l }).norm()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((mod_norm(&f, &mixed).unwrap() - best_row).abs() < 1e-12);
        assert!(mod_norm(&f, &spec(f64::INFINITY, 1.0, Weight::constant(), 1.0, g)).unwrap() > 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let g = Signal::delta(4, 0);
        assert!(ModNormSpec::new(0.5, 1.0, Weight::constant(), 1.0, g.clone()).is_err());
        assert!(ModNormSpec::new(1.0, f64::NAN, Weight::constant(), 1.0, g.clone()).is_err());
        assert!(ModNormSpec::new(1.0, 1.0, Weight::constant(), -1.0, g).is_err());
        assert!(matches!(
            ModNormSpec::new(1.0, 1.0, Weight::constant(), 1.0, Signal::zeros(4)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn norm_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let g = Signal::gaussian(8, 2.0);
        for (p, q) in [(1.0, 1.0), (2.0, 1.0), (1.5, 3.0), (f64::INFINITY, 2.0)] {
            let sp = spec(p, q, Weight::polynomial(1.0), 1.0, g.clone());
            for _ in 0..20 {
                let f = Signal::random(8, &mut rng);
                let h = Signal::random(8, &mut rng);
                let c = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let nf = mod_norm(&f, &sp).unwrap();
                let scaled = mod_norm(&f.scale(c), &sp).unwrap();
                assert!((scaled - c.norm() * nf).abs() < 1e-10 * (1.0 + scaled));
                let sum = mod_norm(&f.add(&h), &sp).unwrap();
                assert!(sum <= nf + mod_norm(&h, &sp).unwrap() + 1e-10);
            }
        }
    }

    #[test]
    fn feichtinger_monotone_in_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let g = Signal::gaussian(10, 2.0);
        let v = Weight::polynomial(1.0);
        for _ in 0..10 {
            let f = Signal::random(10, &mut rng);
            let a = feichtinger_norm(&f, &v, 0.0, &g).unwrap();
            let b = feichtinger_norm(&f, &v, 1.0, &g).unwrap();
            let c = feichtinger_norm(&f, &v, 2.0, &g).unwrap();
            assert!(a <= b && b <= c);
            let plain: f64 = stft(&f, &g).unwrap().values().iter().map(|z| z.norm()).sum();
            assert!((a - plain).abs() < 1e-10 * plain);
        }
    }

    #[test]
    fn shift_covariance_with_submultiplicative_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let n = 12;
        let g = Signal::gaussian(n, 2.0);
        for v in [Weight::constant(), Weight::exponential(0.3), Weight::subexponential(1.0, 0.5)] {
            let sp = spec(1.0, 1.0, v.clone(), 1.0, g.clone());
            for _ in 0..20 {
                let f = Signal::random(n, &mut rng);
                let mu = TfPoint::new(rng.random_range(0..12), rng.random_range(0..12), n);
                let lhs = mod_norm(&tf_shift(mu, &f).unwrap(), &sp).unwrap();
                let rhs = v.eval_lifted(mu, n).unwrap() * mod_norm(&f, &sp).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn window_equivalence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let n = 12;
        let g1 = Signal::gaussian(n, 2.0);
        let fs: Vec<Signal> = (0..100).map(|_| Signal::random(n, &mut rng)).collect();
        let base = spec(1.0, 1.0, Weight::constant(), 1.0, g1.clone());

        let c = C64::new(0.0, -2.5);
        let r = window_equivalence_ratio(&fs, &g1, &g1.scale(c), &base).unwrap();
        assert!((r.min_ratio - 0.4).abs() < 1e-12 && (r.max_ratio - 0.4).abs() < 1e-12);

        let shifted = tf_shift(TfPoint { k: 3, l: 5 }, &g1).unwrap();
        let r = window_equivalence_ratio(&fs, &g1, &shifted, &base).unwrap();
        assert!(r.min_ratio >= 0.5 && r.max_ratio <= 2.0);

        let h1 = Signal::random(n, &mut rng);
        let h2 = Signal::random(n, &mut rng);
        let r = window_equivalence_ratio(&fs, &h1, &h2, &base).unwrap();
        assert!(r.min_ratio > 0.0 && r.max_ratio / r.min_ratio < 1e3);
        let again = window_equivalence_ratio(&fs[..50], &h1, &h2, &base).unwrap();
        assert!(again.max_ratio / again.min_ratio <= r.max_ratio / r.min_ratio);

        let zeros = vec![Signal::zeros(n); 3];
        assert!(window_equivalence_ratio(&zeros, &h1, &h2, &base).is_err());
    }

    #[test]
    fn spec_json_accepts_infinity() {
        let text = r#"{"p":1,"q":"inf","m":{"family":"polynomial","s":1.0},"s":2,
            "window":{"n":2,"re":[1,0],"im":[0,0]}}"#;
        let sp: ModNormSpec = serde_json::from_str(text).unwrap();
        assert!(sp.q.is_infinite());
        let back: ModNormSpec = serde_json::from_str(&serde_json::to_string(&sp).unwrap()).unwrap();
        assert_eq!(back, sp);
        assert_eq!(parse_exponent("Infinity"), Ok(f64::INFINITY));
        assert!(parse_exponent("x").is_err());
    }
}
