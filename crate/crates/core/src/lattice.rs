//! Coupling graphs for square, heavy-square and heavy-hexagon lattices.
//!
//! Positions live on an integer grid. Each node carries a 1-based
//! frequency-pattern index; an edge always points from the higher-index
//! (control) node to the lower-index (target) node, so the pattern fixes every
//! cross-resonance direction.
//!
//! Layouts:
//!
//! * **Square**: rotated surface code. `d×d` data qubits at even coordinates
//!   and `d²−1` syndrome qubits at odd coordinates (all interior plaquettes
//!   plus alternating weight-two boundary plaquettes). Rotating by 45° turns
//!   the coupling graph into a subgraph of ℤ², coloured by
//!   `(u + 2v) mod 5`, which puts five distinct residues on every closed
//!   neighbourhood. [`SQUARE_RESIDUE_TO_INDEX`] maps residues to frequencies.
//! * **Heavy hexagon**: `d` rows of qubits spanning columns `0..=2d`, the first
//!   row missing its last column and the last row missing its first. Bridge
//!   qubits join neighbouring rows every fourth column, offset by two between
//!   successive gaps. Even columns of a row are hexagon vertices (targets,
//!   two-coloured onto f₁/f₂); odd-column row qubits and bridges are controls
//!   on f₃.
//! * **Heavy square**: the same row scheme with bridges on every odd column.
//!   Odd columns are the square-grid vertices (targets, checkerboard f₁/f₂);
//!   even-column row qubits, including the dangling row ends, and bridges are
//!   controls on f₃.
//!
//! Node ids follow row-major order of `(y, x)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFamily {
    Square,
    HeavySquare,
    HeavyHexagon,
}

impl LatticeFamily {
    pub const ALL: [LatticeFamily; 3] = [Self::Square, Self::HeavySquare, Self::HeavyHexagon];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::HeavySquare => "heavy-square",
            Self::HeavyHexagon => "heavy-hexagon",
        }
    }

    /// Number of distinct pattern frequencies.
    pub fn pattern_size(self) -> usize {
        match self {
            Self::Square => 5,
            Self::HeavySquare | Self::HeavyHexagon => 3,
        }
    }

    pub fn max_degree(self) -> usize {
        match self {
            Self::Square | Self::HeavySquare => 4,
            Self::HeavyHexagon => 3,
        }
    }

    /// Qubit count at code distance `d`.
    pub fn qubit_count(self, d: usize) -> usize {
        match self {
            Self::Square => 2 * d * d - 1,
            Self::HeavySquare => 3 * d * d - 2,
            Self::HeavyHexagon => (5 * d * d + 2 * d - 5) / 2,
        }
    }
}

impl fmt::Display for LatticeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatticeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "square" => Ok(Self::Square),
            "heavy-square" => Ok(Self::HeavySquare),
            "heavy-hexagon" | "heavy-hex" => Ok(Self::HeavyHexagon),
            other => Err(invalid_param(format!("unknown lattice family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeRole {
    Data,
    Ancilla,
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateRole {
    Control,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitNode {
    pub id: usize,
    pub position: [i32; 2],
    pub code_role: CodeRole,
    /// `Control` when the node drives at least one cross-resonance gate.
    pub gate_role: GateRole,
    /// 1-based index into the frequency pattern.
    pub pattern_index: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub family: LatticeFamily,
    pub distance: usize,
    pub nodes: Vec<QubitNode>,
    /// Directed `[control, target]` pairs, sorted.
    pub edges: Vec<[usize; 2]>,
}

/// Square-lattice residue `(u + 2v) mod 5` → pattern index.
pub const SQUARE_RESIDUE_TO_INDEX: [u8; 5] = [5, 4, 2, 3, 1];

struct Proto {
    position: [i32; 2],
    code_role: CodeRole,
    pattern_index: u8,
}

pub fn build_lattice(family: LatticeFamily, distance: usize) -> Result<Lattice> {
    if distance < 3 || distance.is_multiple_of(2) {
        return Err(invalid_param(format!(
            "code distance must be an odd integer >= 3, got {distance}"
        )));
    }
    let (mut protos, links) = match family {
        LatticeFamily::Square => square_layout(distance),
        LatticeFamily::HeavySquare => heavy_layout(distance, false),
        LatticeFamily::HeavyHexagon => heavy_layout(distance, true),
    };
    // Row-major ids; links refer to positions until here.
    protos.sort_by_key(|p| (p.position[1], p.position[0]));
    let id_of = |pos: [i32; 2]| {
        protos
            .binary_search_by_key(&(pos[1], pos[0]), |p| (p.position[1], p.position[0]))
            .expect("link endpoint exists")
    };
    let mut edges: Vec<[usize; 2]> = links
        .iter()
        .map(|&(a, b)| {
            let (ia, ib) = (id_of(a), id_of(b));
            let (pa, pb) = (protos[ia].pattern_index, protos[ib].pattern_index);
            assert_ne!(pa, pb, "pattern leaves an edge without direction");
            if pa > pb {
                [ia, ib]
            } else {
                [ib, ia]
            }
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();

    let mut is_control = vec![false; protos.len()];
    for e in &edges {
        is_control[e[0]] = true;
    }
    let nodes = protos
        .into_iter()
        .enumerate()
        .map(|(id, p)| QubitNode {
            id,
            position: p.position,
            code_role: p.code_role,
            gate_role: if is_control[id] {
                GateRole::Control
            } else {
                GateRole::Target
            },
            pattern_index: p.pattern_index,
        })
        .collect();
    Ok(Lattice {
        family,
        distance,
        nodes,
        edges,
    })
}

type Layout = (Vec<Proto>, Vec<([i32; 2], [i32; 2])>);

fn square_layout(d: usize) -> Layout {
    let d = d as i32;
    let mut protos = Vec::new();
    let index_at = |x: i32, y: i32| {
        let u = (x + y) / 2;
        let v = (x - y) / 2;
        SQUARE_RESIDUE_TO_INDEX[(u + 2 * v).rem_euclid(5) as usize]
    };
    for i in 0..d {
        for j in 0..d {
            protos.push(Proto {
                position: [2 * i, 2 * j],
                code_role: CodeRole::Data,
                pattern_index: index_at(2 * i, 2 * j),
            });
        }
    }
    for i in -1..d {
        for j in -1..d {
            let interior = (0..d - 1).contains(&i) && (0..d - 1).contains(&j);
            let parity_even = (i + j).rem_euclid(2) == 0;
            let top_bottom = (i == -1 || i == d - 1) && (0..d - 1).contains(&j) && parity_even;
            let left_right = (j == -1 || j == d - 1) && (0..d - 1).contains(&i) && !parity_even;
            if interior || top_bottom || left_right {
                let (x, y) = (2 * i + 1, 2 * j + 1);
                protos.push(Proto {
                    position: [x, y],
                    code_role: CodeRole::Ancilla,
                    pattern_index: index_at(x, y),
                });
            }
        }
    }
    let mut links = Vec::new();
    for p in protos.iter().filter(|p| p.code_role == CodeRole::Ancilla) {
        let [x, y] = p.position;
        for (dx, dy) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
            let (qx, qy) = (x + dx, y + dy);
            if (0..2 * d).contains(&qx) && (0..2 * d).contains(&qy) {
                links.push((p.position, [qx, qy]));
            }
        }
    }
    (protos, links)
}

fn heavy_layout(d: usize, hexagon: bool) -> Layout {
    let d = d as i32;
    let width = 2 * d;
    let mut protos = Vec::new();
    let mut links = Vec::new();
    let target_index = |col: i32, row: i32| -> u8 {
        let k = if hexagon { col / 2 } else { (col - 1) / 2 };
        1 + ((k + row).rem_euclid(2)) as u8
    };
    let row_has = |row: i32, col: i32| !((row == 0 && col == width) || (row == d - 1 && col == 0));

    for row in 0..d {
        for col in 0..=width {
            if !row_has(row, col) {
                continue;
            }
            let is_vertex = if hexagon { col % 2 == 0 } else { col % 2 == 1 };
            protos.push(Proto {
                position: [col, 2 * row],
                code_role: if is_vertex { CodeRole::Data } else { CodeRole::Flag },
                pattern_index: if is_vertex { target_index(col, row) } else { 3 },
            });
            if col > 0 && row_has(row, col - 1) {
                links.push(([col - 1, 2 * row], [col, 2 * row]));
            }
        }
    }
    for gap in 0..d - 1 {
        let columns: Vec<i32> = if hexagon {
            let offset = if gap % 2 == 0 { 0 } else { 2 };
            (offset..=width).step_by(4).collect()
        } else {
            (1..width).step_by(2).collect()
        };
        for col in columns {
            let pos = [col, 2 * gap + 1];
            protos.push(Proto {
                position: pos,
                code_role: CodeRole::Ancilla,
                pattern_index: 3,
            });
            links.push(([col, 2 * gap], pos));
            links.push((pos, [col, 2 * gap + 2]));
        }
    }
    (protos, links)
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sorted neighbour lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &[c, t] in &self.edges {
            adj[c].push(t);
            adj[t].push(c);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &[c, t] in &self.edges {
            deg[c] += 1;
            deg[t] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whether `a` drives a gate on `b`.
    pub fn controls(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&[a, b]).is_ok()
    }

    /// Graphviz rendering with controls filled black.
    pub fn to_dot(&self) -> String {
        let mut out = format!(
            "digraph \"{}-d{}\" {{\n  node [shape=circle, fontsize=10];\n",
            self.family, self.distance
        );
        for n in &self.nodes {
            let (fill, font) = match n.gate_role {
                GateRole::Control => ("black", "white"),
                GateRole::Target => ("white", "black"),
            };
            let role = match n.code_role {
                CodeRole::Data => 'D',
                CodeRole::Ancilla => 'A',
                CodeRole::Flag => 'F',
            };
            out.push_str(&format!(
                "  q{} [label=\"{}\\n{}f{}\", pos=\"{},{}!\", style=filled, fillcolor={}, fontcolor={}];\n",
                n.id, n.id, role, n.pattern_index, n.position[0], -n.position[1], fill, font
            ));
        }
        for &[c, t] in &self.edges {
            out.push_str(&format!("  q{c} -> q{t};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Evenly spaced pattern frequencies in MHz: index `i` sits at
/// `base + (i − 1)·spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPattern<T> {
    base_mhz: T,
    spacing_mhz: T,
    count: usize,
}

impl<T: Real> FrequencyPattern<T> {
    pub fn new(base_mhz: T, spacing_mhz: T, count: usize) -> Result<Self> {
        if !(spacing_mhz > T::zero()) || !spacing_mhz.is_finite() {
            return Err(invalid_param(format!("pattern spacing must be positive, got {spacing_mhz}")));
        }
        if !(base_mhz > T::zero()) || !base_mhz.is_finite() {
            return Err(invalid_param(format!("base frequency must be positive, got {base_mhz}")));
        }
        if count != 3 && count != 5 {
            return Err(invalid_param(format!("pattern must have 3 or 5 frequencies, got {count}")));
        }
        Ok(Self {
            base_mhz,
            spacing_mhz,
            count,
        })
    }

    /// Pattern sized for `family`.
    pub fn for_family(family: LatticeFamily, base_mhz: T, spacing_mhz: T) -> Result<Self> {
        Self::new(base_mhz, spacing_mhz, family.pattern_size())
    }

    pub fn base_mhz(&self) -> T {
        self.base_mhz
    }

    pub fn spacing_mhz(&self) -> T {
        self.spacing_mhz
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn frequency(&self, index: u8) -> T {
        self.base_mhz + T::from_usize_lossy(index as usize - 1) * self.spacing_mhz
    }
}

/// A lattice together with its per-qubit set-point frequencies (MHz).
#[derive(Debug, Clone, PartialEq)]
pub struct PatternedLattice<T> {
    pub lattice: Lattice,
    pub pattern: FrequencyPattern<T>,
    pub set_points: Vec<T>,
}

pub fn assign_pattern<T: Real>(lattice: &Lattice, pattern: FrequencyPattern<T>) -> Result<PatternedLattice<T>> {
    if pattern.count() != lattice.family.pattern_size() {
        return Err(invalid_param(format!(
            "{} lattices use {} pattern frequencies, got {}",
            lattice.family,
            lattice.family.pattern_size(),
            pattern.count()
        )));
    }
    let set_points = lattice.nodes.iter().map(|n| pattern.frequency(n.pattern_index)).collect();
    Ok(PatternedLattice {
        lattice: lattice.clone(),
        pattern,
        set_points,
    })
}

/// Next-nearest-neighbour triples `[i, j, k]` with `i < k` both adjacent to
/// `j`, kept when `j` controls at least one of them.
pub fn next_nearest_triples(lattice: &Lattice) -> Vec<[usize; 3]> {
    let adj = lattice.neighbors();
    let mut out = Vec::new();
    for (j, nbrs) in adj.iter().enumerate() {
        for (a, &i) in nbrs.iter().enumerate() {
            for &k in &nbrs[a + 1..] {
                if lattice.controls(j, i) || lattice.controls(j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{count_collisions, CollisionRuleSet, RoleAssignment};

    const TABLE_COUNTS: [(LatticeFamily, [usize; 3]); 3] = [
        (LatticeFamily::Square, [17, 49, 97]),
        (LatticeFamily::HeavySquare, [25, 73, 145]),
        (LatticeFamily::HeavyHexagon, [23, 65, 127]),
    ];

    fn all() -> impl Iterator<Item = Lattice> {
        LatticeFamily::ALL
            .into_iter()
            .flat_map(|f| [3, 5, 7].map(move |d| build_lattice(f, d).unwrap()))
    }

    #[test]
    fn node_counts_match_table() {
        for (family, counts) in TABLE_COUNTS {
            for (d, n) in [3, 5, 7].into_iter().zip(counts) {
                let l = build_lattice(family, d).unwrap();
                assert_eq!(l.len(), n, "{family} d={d}");
                assert_eq!(family.qubit_count(d), n);
            }
        }
        assert_eq!(build_lattice(LatticeFamily::HeavySquare, 7).unwrap().len(), 3 * 49 - 2);
        // other odd distances follow the same formulas
        for family in LatticeFamily::ALL {
            assert_eq!(build_lattice(family, 9).unwrap().len(), family.qubit_count(9));
        }
    }

    #[test]
    fn rejects_bad_distance() {
        for d in [0, 1, 2, 4, 6] {
            assert!(build_lattice(LatticeFamily::Square, d).is_err());
        }
    }

    #[test]
    fn degrees_and_connectivity() {
        for l in all() {
            assert!(l.max_degree() <= l.family.max_degree(), "{} d={}", l.family, l.distance);
            assert!(l.is_connected());
        }
        assert_eq!(build_lattice(LatticeFamily::HeavyHexagon, 3).unwrap().max_degree(), 3);
    }

    #[test]
    fn bulk_degree_histogram() {
        for d in [5, 7] {
            for (family, allowed) in [
                (LatticeFamily::HeavyHexagon, [2, 3]),
                (LatticeFamily::HeavySquare, [2, 4]),
            ] {
                let l = build_lattice(family, d).unwrap();
                let deg = l.degrees();
                let w = 2 * d as i32;
                let y_max = 2 * (d as i32 - 1);
                for n in &l.nodes {
                    let [x, y] = n.position;
                    if x >= 2 && x <= w - 2 && y >= 2 && y <= y_max - 2 {
                        assert!(allowed.contains(&deg[n.id]), "{family} node {} deg {}", n.id, deg[n.id]);
                    }
                }
            }
        }
    }

    #[test]
    fn heavy_controls_on_low_degree_f3() {
        for l in all().filter(|l| l.family != LatticeFamily::Square) {
            let deg = l.degrees();
            for n in l.nodes.iter().filter(|n| n.gate_role == GateRole::Control) {
                assert!(deg[n.id] <= 2);
                assert_eq!(n.pattern_index, 3);
            }
        }
    }

    #[test]
    fn edges_point_down_in_frequency() {
        for l in all() {
            for &[c, t] in &l.edges {
                assert!(l.nodes[c].pattern_index > l.nodes[t].pattern_index);
                assert!(l.nodes[c].pattern_index as usize <= l.family.pattern_size());
            }
        }
    }

    #[test]
    fn deterministic_serialization() {
        for l in all() {
            let again = build_lattice(l.family, l.distance).unwrap();
            assert_eq!(serde_json::to_string(&l).unwrap(), serde_json::to_string(&again).unwrap());
        }
    }

    #[test]
    fn square_pattern_frequencies() {
        let l = build_lattice(LatticeFamily::Square, 3).unwrap();
        let p = assign_pattern(&l, FrequencyPattern::new(5000.0, 70.0, 5).unwrap()).unwrap();
        for (n, f) in l.nodes.iter().zip(&p.set_points) {
            if n.pattern_index == 5 {
                assert_eq!(*f, 5280.0);
            }
        }
        assert!(l.nodes.iter().any(|n| n.pattern_index == 5));
    }

    #[test]
    fn pattern_validation() {
        let l = build_lattice(LatticeFamily::HeavyHexagon, 3).unwrap();
        assert!(assign_pattern(&l, FrequencyPattern::new(5000.0, 70.0, 5).unwrap()).is_err());
        assert!(FrequencyPattern::new(5000.0, 0.0, 3).is_err());
        assert!(FrequencyPattern::new(5000.0, -1.0, 3).is_err());
    }

    #[test]
    fn ideal_patterns_are_collision_free() {
        let rules = CollisionRuleSet::default();
        for l in all() {
            let p = assign_pattern(&l, FrequencyPattern::for_family(l.family, 5000.0, 70.0).unwrap()).unwrap();
            for roles in [RoleAssignment::Sampled, RoleAssignment::Pattern] {
                let r = count_collisions(&l, &p.set_points, &rules, roles).unwrap();
                assert_eq!(r.total, 0, "{} d={} {:?}", l.family, l.distance, r.per_type_counts);
            }
        }
    }

    fn brute_triples(l: &Lattice) -> Vec<[usize; 3]> {
        let n = l.len();
        let adjacent = |a: usize, b: usize| l.controls(a, b) || l.controls(b, a);
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                for k in i + 1..n {
                    if i != j && k != j && adjacent(i, j) && adjacent(j, k) && (l.controls(j, i) || l.controls(j, k)) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn triples_match_path_enumeration() {
        for l in all() {
            let mut fast = next_nearest_triples(&l);
            let mut slow = brute_triples(&l);
            fast.sort_unstable();
            slow.sort_unstable();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn triple_combinatorics() {
        let l = build_lattice(LatticeFamily::HeavyHexagon, 5).unwrap();
        let deg = l.degrees();
        let triples = next_nearest_triples(&l);
        for n in &l.nodes {
            let as_center = triples.iter().filter(|t| t[1] == n.id).count();
            match (deg[n.id], n.gate_role) {
                (1, _) => assert_eq!(as_center, 0),
                (2, GateRole::Control) => assert_eq!(as_center, 1),
                (_, GateRole::Target) => assert_eq!(as_center, 0),
                _ => {}
            }
        }
    }

    #[test]
    fn dot_lists_every_edge() {
        let l = build_lattice(LatticeFamily::Square, 3).unwrap();
        let dot = l.to_dot();
        assert_eq!(dot.matches("->").count(), l.edges.len());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("heavy-hexagon".parse::<LatticeFamily>().unwrap(), LatticeFamily::HeavyHexagon);
        assert_eq!("heavy_square".parse::<LatticeFamily>().unwrap(), LatticeFamily::HeavySquare);
        assert!("triangle".parse::<LatticeFamily>().is_err());
    }
}
