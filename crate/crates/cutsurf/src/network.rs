//! Time-varying directed communication graphs with self-loops and
//! row-stochastic mixing weights.
//!
//! A schedule is a periodic list of directed edge sets; slot t uses the edge
//! set at index t mod period. Edge (i, j) means i transmits to j, so j's
//! in-neighborhood at slot t is { i : (i, j) in E(t) }.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotStronglyConnected {
    pub window_start: usize,
}

impl fmt::Display for NotStronglyConnected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "union graph over the window starting at slot {} is not strongly connected",
            self.window_start
        )
    }
}

impl std::error::Error for NotStronglyConnected {}

/// Periodic schedule of directed edge sets. Self-loops are added on
/// construction if missing; edge lists are deduplicated and sorted.
#[derive(Clone, Debug)]
pub struct GraphSchedule {
    m: usize,
    edge_sets: Vec<Vec<(usize, usize)>>,
    /// Per-slot in-neighbor lists, including the node itself.
    in_neighbors: Vec<Vec<Vec<usize>>>,
    /// Window length under which the union graphs are strongly connected.
    pub s_window: usize,
}

impl GraphSchedule {
    pub fn new(m: usize, mut edge_sets: Vec<Vec<(usize, usize)>>, s_window: usize) -> Self {
        assert!(m >= 1, "need at least one agent");
        assert!(!edge_sets.is_empty(), "need at least one slot");
        assert!(s_window >= 1);
        for edges in edge_sets.iter_mut() {
            for &(i, j) in edges.iter() {
                assert!(i < m && j < m, "edge ({i}, {j}) out of range for m={m}");
            }
            for i in 0..m {
                edges.push((i, i));
            }
            edges.sort_unstable();
            edges.dedup();
        }
        let in_neighbors = edge_sets
            .iter()
            .map(|edges| {
                let mut nbrs = vec![Vec::new(); m];
                for &(i, j) in edges {
                    nbrs[j].push(i);
                }
                nbrs
            })
            .collect();
        Self {
            m,
            edge_sets,
            in_neighbors,
            s_window,
        }
    }

    /// The default benchmark topology: a static strongly connected digraph
    /// on six nodes with irregular in-degrees, so uniform averaging weights
    /// are row- but not column-stochastic (an unbalanced network).
    ///
    /// A static default keeps the zeroth-order stopping conditions
    /// attainable: under any genuinely time-varying schedule the projected
    /// consensus iteration settles into a periodic orbit whose per-slot
    /// displacement is proportional to the stepsize, which with a 1e-6
    /// displacement tolerance and alpha = 1/sqrt(t) would take ~1e11 slots
    /// to fall below. Time-varying schedules remain fully supported (see
    /// [`GraphSchedule::split_cycle6`] and explicit edge lists).
    pub fn default6() -> Self {
        // Node j hears from its d_j predecessors around the ring,
        // d = (1, 2, 3, 2, 3, 4).
        let degrees = [1usize, 2, 3, 2, 3, 4];
        let mut edges = Vec::new();
        for (j, &d) in degrees.iter().enumerate() {
            for step in 1..=d {
                edges.push(((j + 6 - step) % 6, j));
            }
        }
        Self::new(6, vec![edges], 1)
    }

    /// Two alternating edge sets splitting a directed 6-cycle: neither slot
    /// alone is strongly connected, while the union over any two consecutive
    /// slots is (a minimal uniformly jointly strongly connected schedule).
    pub fn split_cycle6() -> Self {
        let slot_a = vec![(0, 1), (2, 3), (4, 5)];
        let slot_b = vec![(1, 2), (3, 4), (5, 0)];
        Self::new(6, vec![slot_a, slot_b], 2)
    }

    /// Single-agent schedule (self-loop only).
    pub fn singleton() -> Self {
        Self::new(1, vec![vec![]], 1)
    }

    pub fn agent_count(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> usize {
        self.edge_sets.len()
    }

    pub fn edges_at(&self, t: usize) -> &[(usize, usize)] {
        &self.edge_sets[t % self.edge_sets.len()]
    }

    /// In-neighbors of `i` at slot `t`, always including `i` itself.
    pub fn in_neighbors(&self, t: usize, i: usize) -> &[usize] {
        &self.in_neighbors[t % self.in_neighbors.len()][i]
    }

    /// Union adjacency (out-lists) over slots [start, start + len).
    fn union_adjacency(&self, start: usize, len: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![vec![false; self.m]; self.m];
        for t in start..start + len {
            for &(i, j) in self.edges_at(t) {
                adj[i][j] = true;
            }
        }
        adj.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, &e)| e.then_some(j))
                    .collect()
            })
            .collect()
    }
}

/// Row-stochastic mixing matrix for one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    pub m: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        Self { m, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Max over rows of (row max - row min); 0 for a rank-one matrix with
    /// identical rows.
    pub fn row_spread(&self) -> f64 {
        let mut spread: f64 = 0.0;
        for j in 0..self.m {
            let col: Vec<f64> = (0..self.m).map(|i| self.get(i, j)).collect();
            let mx = col.iter().cloned().fold(f64::MIN, f64::max);
            let mn = col.iter().cloned().fold(f64::MAX, f64::min);
            spread = spread.max(mx - mn);
        }
        spread
    }

    pub fn multiply(&self, rhs: &WeightMatrix) -> WeightMatrix {
        let m = self.m;
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..m {
                    entries[i * m + j] += a * rhs.get(k, j);
                }
            }
        }
        WeightMatrix { m, entries }
    }
}

/// Uniform averaging weights at slot t: a_ij = 1 / |N_in(i) ∪ {i}| for
/// in-neighbors and self, 0 elsewhere. Row-stochastic with positive entries
/// at least 1/m.
pub fn weights_at(sched: &GraphSchedule, t: usize) -> WeightMatrix {
    let m = sched.agent_count();
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        let nbrs = sched.in_neighbors(t, i);
        let w = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            entries[i * m + j] = w;
        }
    }
    WeightMatrix { m, entries }
}

fn reachable_from(adj: &[Vec<usize>], src: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![src];
    seen[src] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

fn strongly_connected(adj: &[Vec<usize>]) -> bool {
    let m = adj.len();
    if m == 1 {
        return true;
    }
    if !reachable_from(adj, 0).iter().all(|&r| r) {
        return false;
    }
    // Reverse reachability: every node must reach node 0.
    let mut rev = vec![Vec::new(); m];
    for (i, outs) in adj.iter().enumerate() {
        for &j in outs {
            rev[j].push(i);
        }
    }
    reachable_from(&rev, 0).iter().all(|&r| r)
}

/// True iff the union graph over every window of `s` consecutive slots is
/// strongly connected. Periodicity makes the check over one period exhaustive.
pub fn is_ujsc(sched: &GraphSchedule, s: usize) -> bool {
    assert!(s >= 1);
    (0..sched.period()).all(|start| strongly_connected(&sched.union_adjacency(start, s)))
}

fn bfs_ecc(adj: &[Vec<usize>], src: usize) -> Option<usize> {
    let m = adj.len();
    let mut dist = vec![usize::MAX; m];
    let mut queue = std::collections::VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    let mut ecc = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                ecc = ecc.max(dist[w]);
                queue.push_back(w);
            }
        }
    }
    dist.iter().all(|&d| d != usize::MAX).then_some(ecc)
}

/// Maximum over window starts of the diameter of the union graph over `s`
/// slots. All windows must be strongly connected.
pub fn union_diameter(sched: &GraphSchedule, s: usize) -> Result<usize, NotStronglyConnected> {
    let mut diameter = 0;
    for start in 0..sched.period() {
        let adj = sched.union_adjacency(start, s);
        for src in 0..sched.agent_count() {
            match bfs_ecc(&adj, src) {
                Some(e) => diameter = diameter.max(e),
                None => return Err(NotStronglyConnected { window_start: start }),
            }
        }
    }
    Ok(diameter)
}

/// Ordered weight-matrix product A(s-1) ... A(t) with A(t:t) = I.
pub fn matrix_product(sched: &GraphSchedule, s: usize, t: usize) -> WeightMatrix {
    assert!(s >= t);
    let mut prod = WeightMatrix::identity(sched.agent_count());
    // A(s:t) = A(s-1) * A(s-2:t); build left-to-right from the highest slot.
    for slot in (t..s).rev() {
        prod = prod.multiply(&weights_at(sched, slot));
    }
    prod
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle6() -> GraphSchedule {
        GraphSchedule::split_cycle6()
    }

    #[test]
    fn weights_are_uniform_over_in_neighborhood() {
        let sched = cycle6();
        let a = weights_at(&sched, 0);
        // Node 1 has in-neighbor 0 plus self-loop at slot 0.
        assert_eq!(a.get(1, 0), 0.5);
        assert_eq!(a.get(1, 1), 0.5);
        assert_eq!(a.get(1, 2), 0.0);
        // Node 0 has only its self-loop at slot 0.
        assert_eq!(a.get(0, 0), 1.0);
        // Static default: node 2 hears from {1, 0, 5} plus itself.
        let b = weights_at(&GraphSchedule::default6(), 0);
        for j in [0, 1, 2, 5] {
            assert_eq!(b.get(2, j), 0.25);
        }
    }

    #[test]
    fn weights_row_stochastic_with_floor() {
        for sched in [cycle6(), GraphSchedule::default6()] {
            for t in 0..4 {
                let a = weights_at(&sched, t);
                for s in a.row_sums() {
                    assert!((s - 1.0).abs() <= 1e-12);
                }
                for i in 0..6 {
                    for j in 0..6 {
                        let v = a.get(i, j);
                        assert!(v == 0.0 || v >= 1.0 / 6.0);
                    }
                }
            }
        }
    }

    #[test]
    fn default6_is_unbalanced() {
        // Column sums differ from 1: uniform row weights on irregular
        // in-degrees are not column-stochastic.
        let a = weights_at(&GraphSchedule::default6(), 0);
        let mut any_off = false;
        for j in 0..6 {
            let col: f64 = (0..6).map(|i| a.get(i, j)).sum();
            if (col - 1.0).abs() > 1e-9 {
                any_off = true;
            }
        }
        assert!(any_off);
    }

    #[test]
    fn weights_periodic() {
        let sched = cycle6();
        assert_eq!(weights_at(&sched, 1), weights_at(&sched, 1 + sched.period()));
    }

    #[test]
    fn split_cycle_is_ujsc_but_single_slots_are_not() {
        let sched = cycle6();
        assert!(is_ujsc(&sched, 2));
        assert!(!is_ujsc(&sched, 1));
        // The static default is strongly connected every slot.
        assert!(is_ujsc(&GraphSchedule::default6(), 1));
    }

    #[test]
    fn unreachable_node_fails_ujsc() {
        // Node 0 has no in-edges from anyone.
        let sched = GraphSchedule::new(3, vec![vec![(0, 1), (1, 2), (2, 1)]], 1);
        assert!(!is_ujsc(&sched, 1));
        assert!(union_diameter(&sched, 1).is_err());
    }

    #[test]
    fn static_strongly_connected_is_ujsc_with_s1() {
        let ring = GraphSchedule::new(4, vec![vec![(0, 1), (1, 2), (2, 3), (3, 0)]], 1);
        assert!(is_ujsc(&ring, 1));
        assert_eq!(union_diameter(&ring, 1).unwrap(), 3);
    }

    #[test]
    fn cycle_union_diameter_is_m_minus_1() {
        let sched = cycle6();
        assert_eq!(union_diameter(&sched, 2).unwrap(), 5);
        assert_eq!(union_diameter(&GraphSchedule::default6(), 1).unwrap(), 3);
    }

    #[test]
    fn complete_digraph_diameter_is_1() {
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        let sched = GraphSchedule::new(4, vec![edges], 1);
        assert_eq!(union_diameter(&sched, 1).unwrap(), 1);
    }

    #[test]
    fn star_in_out_union_diameter_is_2() {
        // Hub 0: spokes in both directions, split across two slots.
        let slot_a: Vec<(usize, usize)> = (1..5).map(|i| (0, i)).collect();
        let slot_b: Vec<(usize, usize)> = (1..5).map(|i| (i, 0)).collect();
        let sched = GraphSchedule::new(5, vec![slot_a, slot_b], 2);
        assert_eq!(union_diameter(&sched, 2).unwrap(), 2);
    }

    #[test]
    fn matrix_product_identity_and_closure() {
        let sched = cycle6();
        let id = matrix_product(&sched, 3, 3);
        assert_eq!(id, WeightMatrix::identity(6));
        let p = matrix_product(&sched, sched.period(), 0);
        for s in p.row_sums() {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn long_products_approach_rank_one() {
        let sched = cycle6();
        let p = matrix_product(&sched, 50 * sched.period(), 0);
        assert!(p.row_spread() < 1e-6);
        // Geometric decay of the spread in the window count.
        let window = sched.s_window * 6;
        let spread5 = matrix_product(&sched, 5 * window, 0).row_spread();
        let spread20 = matrix_product(&sched, 20 * window, 0).row_spread();
        assert!(spread20 < spread5);
    }
}
