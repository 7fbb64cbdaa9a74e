//! Subgroups of the phase space Z_N x Z_N and their adjoint lattices.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tf::{phase_space, symplectic_form, TfPoint};

const NOT_IN_LATTICE: u32 = u32::MAX;

/// A subgroup of Z_N x Z_N.
///
/// Points are kept in lexicographic order; every summation over a lattice in
/// this crate runs in that order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson", into = "LatticeJson")]
pub struct Lattice {
    n: usize,
    points: Vec<TfPoint>,
    generators: Vec<TfPoint>,
    index: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    n: usize,
    generators: Vec<[i64; 2]>,
}

impl TryFrom<LatticeJson> for Lattice {
    type Error = Error;

    fn try_from(js: LatticeJson) -> Result<Self> {
        Lattice::from_pairs(js.n, &js.generators)
    }
}

impl From<Lattice> for LatticeJson {
    fn from(l: Lattice) -> Self {
        LatticeJson {
            n: l.n,
            generators: l
                .generators
                .iter()
                .map(|p| [p.k as i64, p.l as i64])
                .collect(),
        }
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.points == other.points
    }
}

impl Eq for Lattice {}

fn check_order(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::param(format!("group order must be at least 2, got {n}")))
    } else {
        Ok(())
    }
}

/// Adds the cyclic subgroup generated by `g` to the subgroup marked in `member`.
fn absorb(member: &mut [bool], g: TfPoint, n: usize) {
    let mut cyclic = vec![TfPoint::ORIGIN];
    let mut x = g;
    while x != TfPoint::ORIGIN {
        cyclic.push(x);
        x = x.add(g, n);
    }
    let current: Vec<TfPoint> = phase_space(n).filter(|p| member[p.flat(n)]).collect();
    for s in current {
        for &c in &cyclic {
            member[s.add(c, n).flat(n)] = true;
        }
    }
}

impl Lattice {
    /// The subgroup generated by `generators` (reduced mod `n`).
    pub fn from_generators(n: usize, generators: &[TfPoint]) -> Result<Self> {
        check_order(n)?;
        let gens: Vec<TfPoint> = generators
            .iter()
            .map(|p| TfPoint::new(p.k as i64, p.l as i64, n))
            .collect();
        let mut member = vec![false; n * n];
        member[0] = true;
        for &g in &gens {
            absorb(&mut member, g, n);
        }
        Ok(Lattice::from_membership(n, &member, gens))
    }

    /// Like [`Lattice::from_generators`] with signed integer generator coordinates.
    pub fn from_pairs(n: usize, generators: &[[i64; 2]]) -> Result<Self> {
        check_order(n)?;
        let gens: Vec<TfPoint> = generators
            .iter()
            .map(|&[k, l]| TfPoint::new(k, l, n))
            .collect();
        Lattice::from_generators(n, &gens)
    }

    fn from_membership(n: usize, member: &[bool], generators: Vec<TfPoint>) -> Self {
        let mut index = vec![NOT_IN_LATTICE; n * n];
        let mut points = Vec::new();
        for p in phase_space(n) {
            if member[p.flat(n)] {
                index[p.flat(n)] = points.len() as u32;
                points.push(p);
            }
        }
        Lattice {
            n,
            points,
            generators,
            index,
        }
    }

    /// The whole phase space Z_N x Z_N.
    pub fn full(n: usize) -> Result<Self> {
        Lattice::from_generators(n, &[TfPoint { k: 1, l: 0 }, TfPoint { k: 0, l: 1 }])
    }

    /// The trivial subgroup `{(0, 0)}`.
    pub fn trivial(n: usize) -> Result<Self> {
        Lattice::from_generators(n, &[])
    }

    /// `a Z_N x b Z_N`; `a` and `b` should divide `n`.
    pub fn separable(n: usize, a: usize, b: usize) -> Result<Self> {
        Lattice::from_generators(n, &[TfPoint { k: a % n, l: 0 }, TfPoint { k: 0, l: b % n }])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[TfPoint] {
        &self.points
    }

    pub fn generators(&self) -> &[TfPoint] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: TfPoint) -> Option<usize> {
        if !p.is_reduced(self.n) {
            return None;
        }
        match self.index[p.flat(self.n)] {
            NOT_IN_LATTICE => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, p: TfPoint) -> bool {
        self.index_of(p).is_some()
    }

    /// All points whose time-frequency shifts commute with every shift of `self`.
    pub fn adjoint(&self) -> Lattice {
        let n = self.n;
        let gens: &[TfPoint] = if self.generators.is_empty() && self.len() > 1 {
            &self.points
        } else {
            &self.generators
        };
        let member: Vec<bool> = phase_space(n)
            .map(|mu| gens.iter().all(|&g| symplectic_form(mu, g, n) == 0))
            .collect();
        let mut adj = Lattice::from_membership(n, &member, Vec::new());
        adj.generators = adj.minimal_generators();
        adj
    }

    /// A small generating set: axis points first, then the remaining points, each
    /// kept only if it is not already generated by the earlier picks.
    fn minimal_generators(&self) -> Vec<TfPoint> {
        let n = self.n;
        let time_axis = self.points.iter().filter(|p| p.l == 0);
        let freq_axis = self.points.iter().filter(|p| p.k == 0 && p.l != 0);
        let rest = self.points.iter().filter(|p| p.k != 0 && p.l != 0);
        let mut member = vec![false; n * n];
        member[0] = true;
        let mut gens = Vec::new();
        for &p in time_axis.chain(freq_axis).chain(rest) {
            if !member[p.flat(n)] {
                absorb(&mut member, p, n);
                gens.push(p);
            }
        }
        gens
    }

    /// `N / |Lambda|`.
    pub fn volume(&self) -> Volume {
        Volume(Ratio::new(self.n as u64, self.len() as u64))
    }
}

/// All subgroups of Z_N x Z_N, each generated by at most two elements.
pub fn all_subgroups(n: usize) -> Result<Vec<Lattice>> {
    check_order(n)?;
    let mut cyclic: Vec<(TfPoint, Vec<bool>)> = Vec::new();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    for g in phase_space(n) {
        let mut member = vec![false; n * n];
        member[0] = true;
        absorb(&mut member, g, n);
        if seen.insert(member.clone()) {
            cyclic.push((g, member));
        }
    }
    let mut out: Vec<Lattice> = Vec::new();
    let mut seen_all: HashSet<Vec<bool>> = HashSet::new();
    for i in 0..cyclic.len() {
        for j in i..cyclic.len() {
            let mut member = cyclic[i].1.clone();
            absorb(&mut member, cyclic[j].0, n);
            if seen_all.insert(member.clone()) {
                let gens = if i == j {
                    vec![cyclic[i].0]
                } else {
                    vec![cyclic[i].0, cyclic[j].0]
                };
                out.push(Lattice::from_membership(n, &member, gens));
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.points.cmp(&b.points)));
    Ok(out)
}

/// Covolume of a finite lattice, `N / |Lambda|`, kept as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Volume(pub Ratio<u64>);

impl Volume {
    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn ceil(&self) -> u64 {
        self.numer().div_ceil(self.denom())
    }

    /// True at critical density `|Lambda| = N`.
    pub fn is_critical(&self) -> bool {
        self.numer() == self.denom()
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Volume {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("`{s}` is not a fraction p/q"));
        let (p, q) = s.split_once('/').ok_or_else(bad)?;
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if p == 0 || q == 0 {
            return Err(bad());
        }
        Ok(Volume(Ratio::new(p, q)))
    }
}

impl Serialize for Volume {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Volume {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
