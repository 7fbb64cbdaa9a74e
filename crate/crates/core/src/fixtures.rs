//! Shared seeds and the lattice test matrix used by tests and the selftest.

use std::sync::Arc;

use crate::lattice::Lattice;

/// Seeds for randomized axiom checks.
pub const SEEDS: [u64; 8] = [
    0x5eed_0001,
    0x5eed_0002,
    0x5eed_0003,
    0x5eed_0005,
    0x5eed_0008,
    0x5eed_000d,
    0x5eed_0015,
    0x5eed_0022,
];

/// `(N, generators)` for separable and non-separable lattices with N in
/// {8, 12, 16, 24}, covering volumes below, at and above 1.
pub const LATTICE_MATRIX: &[(usize, &[[i64; 2]])] = &[
    (8, &[[2, 0], [0, 2]]),
    (8, &[[4, 0], [0, 4]]),
    (8, &[[1, 3]]),
    (8, &[[2, 2], [0, 4]]),
    (12, &[[2, 0], [0, 3]]),
    (12, &[[3, 0], [0, 4]]),
    (12, &[[1, 5]]),
    (12, &[[1, 2], [0, 6]]),
    (16, &[[2, 0], [0, 4]]),
    (16, &[[4, 0], [0, 4]]),
    (16, &[[2, 1]]),
    (16, &[[1, 4], [0, 8]]),
    (24, &[[3, 0], [0, 4]]),
    (24, &[[4, 0], [0, 3]]),
    (24, &[[1, 5], [0, 12]]),
];

pub fn lattice_matrix() -> Vec<Arc<Lattice>> {
    LATTICE_MATRIX
        .iter()
        .map(|(n, gens)| Arc::new(Lattice::from_pairs(*n, gens).expect("fixture lattice")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_has_expected_volumes() {
        let lats = lattice_matrix();
        assert_eq!(lats.len(), LATTICE_MATRIX.len());
        let mut below = 0;
        let mut above = 0;
        for l in &lats {
            let v = l.volume().to_f64();
            if v < 1.0 {
                below += 1;
            }
            if v > 1.0 {
                above += 1;
            }
            assert_eq!(l.len() * l.adjoint().len(), l.n() * l.n());
        }
        assert!(below >= 4 && above >= 1);
        let non_separable = LATTICE_MATRIX
            .iter()
            .filter(|(_, g)| g.iter().any(|p| p[0] != 0 && p[1] != 0))
            .count();
        assert!(non_separable >= 4);
    }
}
