//! Randomized construction heuristics.

use rand::seq::SliceRandom;
use rand::Rng;

use super::CandidateLists;
use crate::tsp::{cycle_cost, Tour, TspInstance};

/// Largest instance for which greedy considers every edge; above it only
/// candidate-list edges are used, with a nearest-endpoint repair at the end.
const GREEDY_ALL_EDGES_LIMIT: usize = 2000;
const GREEDY_CANDIDATE_WIDTH: usize = 10;

pub fn construct_random<R: Rng + ?Sized>(inst: &TspInstance, rng: &mut R) -> Tour {
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.shuffle(rng);
    let cost = cycle_cost(inst, &order);
    Tour::from_parts_unchecked(order, cost)
}

/// Randomized nearest neighbour: each step moves to a uniformly chosen one
/// of the `k` nearest unvisited cities (ties by lower index).
pub fn construct_nearest_neighbor<R: Rng + ?Sized>(
    inst: &TspInstance,
    cands: &CandidateLists,
    rng: &mut R,
    k: usize,
) -> Tour {
    let start = rng.random_range(0..inst.len());
    nearest_neighbor_from(inst, cands, rng, k, start)
}

/// Same as [`construct_nearest_neighbor`] with a given start city.
pub fn nearest_neighbor_from<R: Rng + ?Sized>(
    inst: &TspInstance,
    cands: &CandidateLists,
    rng: &mut R,
    k: usize,
    start: usize,
) -> Tour {
    assert!(k >= 1, "candidate width must be at least 1");
    let n = inst.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    let mut choices: Vec<usize> = Vec::with_capacity(k);
    let mut rest: Vec<(i64, usize)> = Vec::new();
    while order.len() < n {
        let want = k.min(n - order.len());
        choices.clear();
        choices.extend(cands.of(cur).iter().copied().filter(|&c| !visited[c]).take(want));
        if choices.len() < want {
            rest.clear();
            rest.extend((0..n).filter(|&c| !visited[c]).map(|c| (inst.cost(cur, c), c)));
            rest.select_nth_unstable(want - 1);
            rest[..want].sort_unstable();
            choices.clear();
            choices.extend(rest[..want].iter().map(|&(_, c)| c));
        }
        cur = choices[rng.random_range(0..choices.len())];
        visited[cur] = true;
        order.push(cur);
    }
    let cost = cycle_cost(inst, &order);
    Tour::from_parts_unchecked(order, cost)
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// Randomized greedy edge matching: begins with the cheapest edge, then
/// repeatedly adds a uniformly chosen edge among the `k` cheapest feasible
/// ones (both endpoints of degree at most one, no premature cycle), and
/// finally closes the Hamiltonian path. Edges are ordered by `(cost, i, j)`.
pub fn construct_greedy<R: Rng + ?Sized>(inst: &TspInstance, rng: &mut R, k: usize) -> Tour {
    assert!(k >= 1, "candidate width must be at least 1");
    let n = inst.len();
    let mut edges: Vec<(i64, usize, usize)> = if n <= GREEDY_ALL_EDGES_LIMIT {
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (inst.cost(i, j), i, j))
            .collect()
    } else {
        let nn = inst.nearest_neighbors(GREEDY_CANDIDATE_WIDTH);
        let mut e: Vec<(i64, usize, usize)> = nn
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i.min(j), i.max(j))))
            .map(|(i, j)| (inst.cost(i, j), i, j))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    };
    edges.sort_unstable();

    let mut degree = vec![0u8; n];
    let mut adj = vec![[usize::MAX; 2]; n];
    let mut sets = DisjointSets((0..n).collect());
    // `skip[i]` points at or before the next live edge at index >= i.
    let mut skip: Vec<usize> = (0..=edges.len()).collect();
    fn next_live(skip: &mut [usize], mut i: usize) -> usize {
        while skip[i] != i {
            skip[i] = skip[skip[i]];
            i = skip[i];
        }
        i
    }
    let mut added = 0usize;
    let mut add_edge = |i: usize, j: usize, degree: &mut Vec<u8>, sets: &mut DisjointSets| {
        adj[i][degree[i] as usize] = j;
        adj[j][degree[j] as usize] = i;
        degree[i] += 1;
        degree[j] += 1;
        sets.union(i, j);
    };

    let mut picks: Vec<usize> = Vec::with_capacity(k);
    while added + 1 < n {
        picks.clear();
        let mut idx = next_live(&mut skip, 0);
        while idx < edges.len() && picks.len() < if added == 0 { 1 } else { k } {
            let (_, i, j) = edges[idx];
            if degree[i] < 2 && degree[j] < 2 && sets.find(i) != sets.find(j) {
                picks.push(idx);
                idx = next_live(&mut skip, idx + 1);
            } else {
                skip[idx] = idx + 1;
                idx = next_live(&mut skip, idx + 1);
            }
        }
        if picks.is_empty() {
            break;
        }
        let chosen = picks[rng.random_range(0..picks.len())];
        let (_, i, j) = edges[chosen];
        skip[chosen] = chosen + 1;
        add_edge(i, j, &mut degree, &mut sets);
        added += 1;
    }
    // Join remaining fragments by their nearest free endpoints.
    while added + 1 < n {
        let ends: Vec<usize> = (0..n).filter(|&c| degree[c] < 2).collect();
        let mut best: Option<(i64, usize, usize)> = None;
        for (a_idx, &a) in ends.iter().enumerate() {
            for &b in &ends[a_idx + 1..] {
                if sets.find(a) != sets.find(b) {
                    let cand = (inst.cost(a, b), a, b);
                    if best.is_none_or(|bst| cand < bst) {
                        best = Some(cand);
                    }
                }
            }
        }
        let (_, a, b) = best.expect("at least two fragments remain");
        add_edge(a, b, &mut degree, &mut sets);
        added += 1;
    }
    let ends: Vec<usize> = (0..n).filter(|&c| degree[c] < 2).collect();
    debug_assert_eq!(ends.len(), 2);
    add_edge(ends[0], ends[1], &mut degree, &mut sets);

    let mut order = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, 0usize);
    for _ in 0..n {
        order.push(cur);
        let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
        prev = cur;
        cur = next;
    }
    let cost = cycle_cost(inst, &order);
    Tour::from_parts_unchecked(order, cost)
}
