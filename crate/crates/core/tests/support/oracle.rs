//! Naive collision counter used as a test oracle.
//!
//! Written directly from the collision table with no shared code: adjacency
//! is re-derived from the edge list on every query and every qubit triple is
//! visited, so it costs O(n³·E).

use crowding::lattice::Lattice;

pub struct Bounds {
    pub delta: f64,
    pub b: [f64; 8],
}

impl Default for Bounds {
    fn default() -> Self {
        // index = collision type; 0 and 4 unused
        Self {
            delta: -330.0,
            b: [0.0, 17.0, 4.0, 30.0, 0.0, 17.0, 25.0, 17.0],
        }
    }
}

fn adjacent(l: &Lattice, a: usize, b: usize) -> bool {
    l.edges.iter().any(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
}

fn pattern_drives(l: &Lattice, a: usize, b: usize) -> bool {
    l.edges.iter().any(|e| e[0] == a && e[1] == b)
}

/// Does `a` drive `b`? With `sampled`, the higher frequency wins and ties
/// keep the pattern direction.
fn drives(l: &Lattice, f: &[f64], a: usize, b: usize, sampled: bool) -> bool {
    if !adjacent(l, a, b) {
        return false;
    }
    if sampled && f[a] != f[b] {
        f[a] > f[b]
    } else {
        pattern_drives(l, a, b)
    }
}

/// Per-type counts, index = type.
pub fn brute_force_counts(l: &Lattice, f: &[f64], bounds: &Bounds, sampled: bool) -> [u64; 8] {
    let n = l.len();
    let d = bounds.delta;
    let b = &bounds.b;
    let f12 = |q: usize| f[q] + d;
    let f02 = |q: usize| 2.0 * f[q] + d;
    let mut c = [0u64; 8];
    for j in 0..n {
        for k in 0..n {
            if j >= k || !adjacent(l, j, k) {
                continue;
            }
            if (f[j] - f[k]).abs() < b[1] {
                c[1] += 1;
            }
            if (f[j] - f12(k)).abs() < b[3] || (f[k] - f12(j)).abs() < b[3] {
                c[3] += 1;
            }
            let (ctl, tgt) = if drives(l, f, j, k, sampled) { (j, k) } else { (k, j) };
            if (f02(ctl) - 2.0 * f[tgt]).abs() < b[2] {
                c[2] += 1;
            }
            let inside = f12(ctl) < f[tgt] && f[tgt] < f[ctl];
            if !inside {
                c[4] += 1;
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                if i >= k || i == j || k == j || !adjacent(l, i, j) || !adjacent(l, j, k) {
                    continue;
                }
                if !(drives(l, f, j, i, sampled) || drives(l, f, j, k, sampled)) {
                    continue;
                }
                if (f[i] - f[k]).abs() < b[5] {
                    c[5] += 1;
                }
                if (f[i] - f12(k)).abs() < b[6] || (f12(i) - f[k]).abs() < b[6] {
                    c[6] += 1;
                }
                if (f02(j) - (f[k] + f[i])).abs() < b[7] {
                    c[7] += 1;
                }
            }
        }
    }
    c
}
