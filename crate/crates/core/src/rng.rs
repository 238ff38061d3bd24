//! Counter-based random streams.
//!
//! Every draw is keyed by `(master_seed, trial, qubit)` rather than by its
//! position in a sequential stream, so results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::scalar::Real;

#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for the `(master, a, b)` counter.
pub fn sub_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)
}

/// Independent generator for the `(master, a, b)` counter.
pub fn stream(master: u64, a: u64, b: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(sub_seed(master, a, b))
}

/// Standard-normal deviate for qubit `qubit` in trial `trial`.
pub fn standard_normal<T: Real>(master: u64, trial: u64, qubit: u64) -> T {
    let z: f64 = StandardNormal.sample(&mut stream(master, trial, qubit));
    T::from_f64(z).unwrap_or_else(T::nan)
}

/// Row-major `trials × qubits` matrix of standard-normal deviates.
///
/// Shared across every spacing and σ_f of a sweep, so neighbouring grid
/// points see the same underlying draws.
#[derive(Debug, Clone)]
pub struct DeviateTable<T> {
    qubits: usize,
    data: Vec<T>,
}

impl<T: Real> DeviateTable<T> {
    pub fn new(master: u64, trials: usize, qubits: usize) -> Self {
        let mut data = vec![T::zero(); trials * qubits];
        if qubits > 0 {
            data.par_chunks_mut(qubits).enumerate().for_each(|(t, row)| {
                for (q, z) in row.iter_mut().enumerate() {
                    *z = standard_normal(master, t as u64, q as u64);
                }
            });
        }
        Self { qubits, data }
    }

    pub fn trials(&self) -> usize {
        self.data.len().checked_div(self.qubits).unwrap_or(0)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn row(&self, trial: usize) -> &[T] {
        &self.data[trial * self.qubits..(trial + 1) * self.qubits]
    }
}
