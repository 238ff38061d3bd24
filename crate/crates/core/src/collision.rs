//! The seven frequency-collision predicates between coupled transmons.
//!
//! Pair types (nearest neighbours `j`–`k`, `j` the control where it matters):
//!
//! | type | condition                                           |
//! |------|-----------------------------------------------------|
//! | 1    | `|f_j − f_k| < b₁`                                  |
//! | 2    | `|f_j02 − 2 f_k| < b₂`                              |
//! | 3    | `|f_j − f_k12| < b₃` or `|f_k − f_j12| < b₃`        |
//! | 4    | target outside the open interval `(f_j12, f_j)`     |
//!
//! Triple types (`Q_i – Q_j – Q_k`, `j` controlling `i` and/or `k`):
//!
//! | type | condition                                           |
//! |------|-----------------------------------------------------|
//! | 5    | `|f_i − f_k| < b₅`                                  |
//! | 6    | `|f_i − f_k12| < b₆` or `|f_i12 − f_k| < b₆`        |
//! | 7    | `|f_j02 − f_i − f_k| < b₇`                          |
//!
//! Every comparison is strict. A pair or triple meeting several types counts
//! once per type; types 3 and 6 count once even when both halves hold.
//!
//! Which qubit controls a pair is chosen by [`RoleAssignment`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::lattice::Lattice;
use crate::scalar::Real;

pub const COLLISION_TYPES: usize = 7;

/// Half-widths in MHz. Type 4 is an interval condition and has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CollisionBounds<T> {
    pub type1: T,
    pub type2: T,
    pub type3: T,
    pub type5: T,
    pub type6: T,
    pub type7: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CollisionRuleSet<T> {
    pub anharmonicity_mhz: T,
    pub bounds_mhz: CollisionBounds<T>,
}

impl<T: Real> Default for CollisionBounds<T> {
    fn default() -> Self {
        Self {
            type1: T::lit(17.0),
            type2: T::lit(4.0),
            type3: T::lit(30.0),
            type5: T::lit(17.0),
            type6: T::lit(25.0),
            type7: T::lit(17.0),
        }
    }
}

impl<T: Real> Default for CollisionRuleSet<T> {
    fn default() -> Self {
        Self {
            anharmonicity_mhz: T::lit(-330.0),
            bounds_mhz: CollisionBounds::default(),
        }
    }
}

impl<T: Real> CollisionRuleSet<T> {
    pub fn new(anharmonicity_mhz: T, bounds_mhz: CollisionBounds<T>) -> Result<Self> {
        let rules = Self {
            anharmonicity_mhz,
            bounds_mhz,
        };
        rules.validate()?;
        Ok(rules)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.anharmonicity_mhz < T::zero()) {
            return Err(invalid_param(format!(
                "anharmonicity must be negative, got {}",
                self.anharmonicity_mhz
            )));
        }
        for (ty, b) in self.bounds() {
            if let Some(b) = b {
                if !(b > T::zero()) || !b.is_finite() {
                    return Err(invalid_param(format!("type {ty} bound must be positive, got {b}")));
                }
            }
        }
        Ok(())
    }

    /// `(type, bound)` for types 1 through 7.
    pub fn bounds(&self) -> [(u8, Option<T>); COLLISION_TYPES] {
        let b = &self.bounds_mhz;
        [
            (1, Some(b.type1)),
            (2, Some(b.type2)),
            (3, Some(b.type3)),
            (4, None),
            (5, Some(b.type5)),
            (6, Some(b.type6)),
            (7, Some(b.type7)),
        ]
    }

    pub fn derived_transitions(&self, f01: T) -> (T, T) {
        derived_transitions(f01, self.anharmonicity_mhz)
    }
}

/// `(f12, f02)` for a transmon with `f01` and anharmonicity `delta`.
pub fn derived_transitions<T: Real>(f01: T, delta: T) -> (T, T) {
    (f01 + delta, f01 + f01 + delta)
}

/// How cross-resonance directions are read off a frequency sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleAssignment {
    /// The higher-frequency qubit of each pair drives the gate, as the
    /// `f_control > f_target` requirement demands of a physical device; ties
    /// fall back to the pattern direction. Triples are re-derived the same way.
    #[default]
    Sampled,
    /// Directions and triples fixed by the pattern indices, regardless of
    /// how far the sampled frequencies stray.
    Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionInstance {
    pub collision_type: u8,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub per_type_counts: BTreeMap<u8, u64>,
    pub total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<Vec<CollisionInstance>>,
}

impl CollisionReport {
    fn from_counts(counts: &[u32; COLLISION_TYPES], instances: Option<Vec<CollisionInstance>>) -> Self {
        let per_type_counts = (1..=COLLISION_TYPES as u8)
            .zip(counts.iter().map(|&c| c as u64))
            .collect::<BTreeMap<_, _>>();
        Self {
            total: per_type_counts.values().sum(),
            per_type_counts,
            instances,
        }
    }

    pub fn count(&self, collision_type: u8) -> u64 {
        self.per_type_counts.get(&collision_type).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Triple {
    i: usize,
    j: usize,
    k: usize,
    pattern_ji: bool,
    pattern_jk: bool,
}

/// Pairs and candidate triples of a lattice, prepared once for repeated
/// counting.
#[derive(Debug, Clone)]
pub struct CollisionTopology {
    n: usize,
    /// Pattern-directed `[control, target]`.
    edges: Vec<[usize; 2]>,
    /// Every pair of distinct neighbours around each centre.
    triples: Vec<Triple>,
}

impl CollisionTopology {
    pub fn new(lattice: &Lattice) -> Self {
        let adj = lattice.neighbors();
        let mut triples = Vec::new();
        for (j, nbrs) in adj.iter().enumerate() {
            for (a, &i) in nbrs.iter().enumerate() {
                for &k in &nbrs[a + 1..] {
                    triples.push(Triple {
                        i,
                        j,
                        k,
                        pattern_ji: lattice.controls(j, i),
                        pattern_jk: lattice.controls(j, k),
                    });
                }
            }
        }
        Self {
            n: lattice.len(),
            edges: lattice.edges.clone(),
            triples,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    /// Adds this sample's collisions to `counts` (index `type − 1`).
    ///
    /// `f` must hold one finite frequency per qubit and `rules` must be valid;
    /// [`count_collisions`] checks both.
    pub fn tally<T: Real>(
        &self,
        f: &[T],
        rules: &CollisionRuleSet<T>,
        roles: RoleAssignment,
        counts: &mut [u32; COLLISION_TYPES],
        mut sink: Option<&mut Vec<CollisionInstance>>,
    ) {
        let delta = rules.anharmonicity_mhz;
        let b = &rules.bounds_mhz;
        let two = T::lit(2.0);
        let mut hit = |ty: u8, qubits: &[usize], counts: &mut [u32; COLLISION_TYPES]| {
            counts[ty as usize - 1] += 1;
            if let Some(s) = sink.as_deref_mut() {
                s.push(CollisionInstance {
                    collision_type: ty,
                    qubits: qubits.to_vec(),
                });
            }
        };

        for &[a, bq] in &self.edges {
            let (fa, fb) = (f[a], f[bq]);
            if (fa - fb).abs() < b.type1 {
                hit(1, &[a, bq], counts);
            }
            if (fa - fb - delta).abs() < b.type3 || (fb - fa - delta).abs() < b.type3 {
                hit(3, &[a, bq], counts);
            }
            let (c, t) = match roles {
                RoleAssignment::Sampled if fb > fa => (bq, a),
                _ => (a, bq),
            };
            let (fc, ft) = (f[c], f[t]);
            if (two * fc + delta - two * ft).abs() < b.type2 {
                hit(2, &[c, t], counts);
            }
            if !(fc + delta < ft && ft < fc) {
                hit(4, &[c, t], counts);
            }
        }

        for t in &self.triples {
            let (fi, fj, fk) = (f[t.i], f[t.j], f[t.k]);
            let active = match roles {
                RoleAssignment::Pattern => t.pattern_ji || t.pattern_jk,
                RoleAssignment::Sampled => {
                    fj > fi || (fj == fi && t.pattern_ji) || fj > fk || (fj == fk && t.pattern_jk)
                }
            };
            if !active {
                continue;
            }
            let ids = [t.i, t.j, t.k];
            if (fi - fk).abs() < b.type5 {
                hit(5, &ids, counts);
            }
            if (fi - fk - delta).abs() < b.type6 || (fi + delta - fk).abs() < b.type6 {
                hit(6, &ids, counts);
            }
            if (two * fj + delta - fi - fk).abs() < b.type7 {
                hit(7, &ids, counts);
            }
        }
    }
}

fn check_inputs<T: Real>(lattice: &Lattice, f: &[T], rules: &CollisionRuleSet<T>) -> Result<()> {
    rules.validate()?;
    if f.len() != lattice.len() {
        return Err(invalid_input(format!(
            "expected {} qubit frequencies, got {}",
            lattice.len(),
            f.len()
        )));
    }
    if let Some((q, v)) = f.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(invalid_input(format!("qubit {q} has no valid frequency ({v})")));
    }
    Ok(())
}

/// Counts collisions for one frequency sample `f` (MHz, indexed by qubit id).
pub fn count_collisions<T: Real>(
    lattice: &Lattice,
    f: &[T],
    rules: &CollisionRuleSet<T>,
    roles: RoleAssignment,
) -> Result<CollisionReport> {
    check_inputs(lattice, f, rules)?;
    let mut counts = [0; COLLISION_TYPES];
    CollisionTopology::new(lattice).tally(f, rules, roles, &mut counts, None);
    Ok(CollisionReport::from_counts(&counts, None))
}

/// As [`count_collisions`], also listing each collision with its qubits.
pub fn collision_instances<T: Real>(
    lattice: &Lattice,
    f: &[T],
    rules: &CollisionRuleSet<T>,
    roles: RoleAssignment,
) -> Result<CollisionReport> {
    check_inputs(lattice, f, rules)?;
    let mut counts = [0; COLLISION_TYPES];
    let mut found = Vec::new();
    CollisionTopology::new(lattice).tally(f, rules, roles, &mut counts, Some(&mut found));
    Ok(CollisionReport::from_counts(&counts, Some(found)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, CodeRole, GateRole, LatticeFamily, QubitNode};
    use proptest::prelude::*;

    fn node(id: usize, pattern_index: u8, gate_role: GateRole) -> QubitNode {
        QubitNode {
            id,
            position: [id as i32, 0],
            code_role: CodeRole::Data,
            gate_role,
            pattern_index,
        }
    }

    /// `0 → 1`, a single directed edge.
    fn pair() -> Lattice {
        Lattice {
            family: LatticeFamily::Square,
            distance: 3,
            nodes: vec![node(0, 2, GateRole::Control), node(1, 1, GateRole::Target)],
            edges: vec![[0, 1]],
        }
    }

    /// `1 → 0` and `1 → 2`.
    fn path3() -> Lattice {
        Lattice {
            family: LatticeFamily::HeavyHexagon,
            distance: 3,
            nodes: vec![
                node(0, 1, GateRole::Target),
                node(1, 3, GateRole::Control),
                node(2, 2, GateRole::Target),
            ],
            edges: vec![[1, 0], [1, 2]],
        }
    }

    fn rules() -> CollisionRuleSet<f64> {
        CollisionRuleSet::default()
    }

    fn count(l: &Lattice, f: &[f64]) -> CollisionReport {
        count_collisions(l, f, &rules(), RoleAssignment::Sampled).unwrap()
    }

    #[test]
    fn transitions() {
        assert_eq!(derived_transitions(5000.0, -330.0), (4670.0, 9670.0));
        assert_eq!(derived_transitions(5000.0, 0.0), (5000.0, 10000.0));
        let (f12, f02) = rules().derived_transitions(5123.25);
        assert_eq!(f02 - f12, 5123.25);
    }

    #[test]
    fn type1_inside_bound() {
        assert_eq!(count(&pair(), &[5010.0, 5000.0]).count(1), 1);
        // boundary-equal is not a collision
        assert_eq!(count(&pair(), &[5017.0, 5000.0]).count(1), 0);
    }

    #[test]
    fn type4_interval() {
        assert_eq!(count(&pair(), &[5100.0, 5000.0]).count(4), 0);
        assert_eq!(count(&pair(), &[5100.0, 4700.0]).count(4), 1);
        // exactly on f12
        assert_eq!(count(&pair(), &[5100.0, 4770.0]).count(4), 1);
        // equal frequencies leave no straddle
        assert_eq!(count(&pair(), &[5000.0, 5000.0]).count(4), 1);
    }

    #[test]
    fn type2_two_photon() {
        let r = count(&pair(), &[5100.0, 4936.5]);
        assert_eq!(r.count(2), 1);
        // f02 − 2f_k = 2(f_j − f_k) + δ: a common offset cancels
        assert_eq!(count(&pair(), &[5150.0, 4986.5]).count(2), 1);
        // moving the target alone does not
        assert_eq!(count(&pair(), &[5100.0, 4940.5]).count(2), 0);
    }

    #[test]
    fn type3_counted_once() {
        // |f_j − f_k − δ| = |330 − 330| hits; the mirrored half cannot.
        let r = count(&pair(), &[5330.0, 5000.0]);
        assert_eq!(r.count(3), 1);
    }

    #[test]
    fn triple_types() {
        let l = path3();
        // i and k within 10 MHz of each other, both below the control
        let r = count(&l, &[5000.0, 5200.0, 5010.0]);
        assert_eq!(r.count(5), 1);
        // f_j02 = 2·5200 − 330 = 10070 = 5000 + 5070
        let r = count(&l, &[5000.0, 5200.0, 5070.0]);
        assert_eq!(r.count(7), 1);
        // f_i − f_k = 330 lands on f_k12
        let r = count(&l, &[5330.0, 5400.0, 5000.0]);
        assert_eq!(r.count(6), 1);
    }

    #[test]
    fn inactive_triple_ignored_when_centre_lowest() {
        let l = path3();
        let sampled = count(&l, &[5200.0, 5000.0, 5205.0]);
        assert_eq!(sampled.count(5), 0);
        let fixed = count_collisions(&l, &[5200.0, 5000.0, 5205.0], &rules(), RoleAssignment::Pattern).unwrap();
        assert_eq!(fixed.count(5), 1);
    }

    #[test]
    fn sampled_roles_flip_direction() {
        // pattern says 0 drives 1, but 1 is now higher
        let l = pair();
        let f = [5000.0, 5100.0];
        assert_eq!(count(&l, &f).count(4), 0);
        let fixed = count_collisions(&l, &f, &rules(), RoleAssignment::Pattern).unwrap();
        assert_eq!(fixed.count(4), 1);
    }

    #[test]
    fn total_and_instances() {
        let l = build_lattice(LatticeFamily::Square, 3).unwrap();
        let f: Vec<f64> = (0..l.len()).map(|q| 5000.0 + 7.0 * (q as f64)).collect();
        let r = collision_instances(&l, &f, &rules(), RoleAssignment::Sampled).unwrap();
        assert_eq!(r.total, r.per_type_counts.values().sum::<u64>());
        assert_eq!(r.instances.as_ref().unwrap().len() as u64, r.total);
        assert_eq!(r, {
            let mut plain = count(&l, &f);
            plain.instances = r.instances.clone();
            plain
        });
    }

    #[test]
    fn input_errors() {
        let l = pair();
        assert!(count_collisions(&l, &[5000.0], &rules(), RoleAssignment::Sampled).is_err());
        assert!(count_collisions(&l, &[5000.0, f64::NAN], &rules(), RoleAssignment::Sampled).is_err());
        let mut bad = rules();
        bad.anharmonicity_mhz = 10.0;
        assert!(bad.validate().is_err());
        bad = rules();
        bad.bounds_mhz.type6 = 0.0;
        assert!(count_collisions(&l, &[5000.0, 4900.0], &bad, RoleAssignment::Sampled).is_err());
    }

    #[test]
    fn report_json_has_all_types() {
        let json = serde_json::to_value(count(&pair(), &[5100.0, 5000.0])).unwrap();
        assert_eq!(json["per_type_counts"].as_object().unwrap().len(), 7);
        assert!(json.get("instances").is_none());
    }

    fn heavy_hex_d3() -> Lattice {
        build_lattice(LatticeFamily::HeavyHexagon, 3).unwrap()
    }

    proptest! {
        #[test]
        fn offset_invariance(
            quarters in prop::collection::vec(-240i32..240, 23),
            offset_quarters in -800i32..800,
        ) {
            // Quarter-MHz steps keep every sum and difference exact.
            let l = heavy_hex_d3();
            let base: Vec<f64> = l.nodes.iter()
                .zip(&quarters)
                .map(|(n, &q)| 5000.0 + 70.0 * f64::from(n.pattern_index - 1) + 0.25 * f64::from(q))
                .collect();
            let offset = 0.25 * f64::from(offset_quarters);
            let moved: Vec<f64> = base.iter().map(|f| f + offset).collect();
            for roles in [RoleAssignment::Sampled, RoleAssignment::Pattern] {
                let a = count_collisions(&l, &base, &rules(), roles).unwrap();
                let b = count_collisions(&l, &moved, &rules(), roles).unwrap();
                for ty in 1..=7 {
                    prop_assert_eq!(a.count(ty), b.count(ty));
                }
            }
        }

        #[test]
        fn widening_never_decreases(
            devs in prop::collection::vec(-80.0f64..80.0, 23),
            ty in prop::sample::select(vec![1u8, 2, 3, 5, 6, 7]),
            extra in 0.0f64..40.0,
        ) {
            let l = heavy_hex_d3();
            let f: Vec<f64> = l.nodes.iter()
                .zip(&devs)
                .map(|(n, d)| 5000.0 + 70.0 * f64::from(n.pattern_index - 1) + d)
                .collect();
            let narrow = rules();
            let mut wide = narrow;
            let b = &mut wide.bounds_mhz;
            match ty {
                1 => b.type1 += extra,
                2 => b.type2 += extra,
                3 => b.type3 += extra,
                5 => b.type5 += extra,
                6 => b.type6 += extra,
                _ => b.type7 += extra,
            }
            for roles in [RoleAssignment::Sampled, RoleAssignment::Pattern] {
                let a = count_collisions(&l, &f, &narrow, roles).unwrap();
                let w = count_collisions(&l, &f, &wide, roles).unwrap();
                prop_assert!(w.count(ty) >= a.count(ty));
            }
        }
    }
}
