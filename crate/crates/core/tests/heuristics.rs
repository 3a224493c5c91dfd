use std::collections::HashMap;

use rand::Rng;
use scalefree_core::heuristics::*;
use scalefree_core::rng::stream_rng;
use scalefree_core::tsp::{generate_random_instance, held_karp_optimum, tour_cost, Tour, TspInstance};

fn cyc_edges(order: &[usize]) -> Vec<(usize, usize)> {
    let n = order.len();
    let mut e: Vec<_> = (0..n)
        .map(|i| {
            let (a, b) = (order[i], order[(i + 1) % n]);
            (a.min(b), a.max(b))
        })
        .collect();
    e.sort_unstable();
    e
}

fn assert_valid(inst: &TspInstance, t: &Tour) {
    assert_eq!(tour_cost(inst, t.order()).unwrap(), t.cost());
}

// ---------------------------------------------------------------------------
// Naive oracles, written against plain vectors.

/// Exhaustive check that no 2- or 3-exchange improves the tour.
fn is_three_opt_optimal(inst: &TspInstance, order: &[usize]) -> bool {
    let n = order.len();
    let base = tour_cost(inst, order).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                // Cut after positions i, j, k: A = (k+1 .. i] wrapped, B = (i..j], C = (j..k].
                let a: Vec<usize> = (k + 1..n).chain(0..=i).map(|p| order[p]).collect();
                let b: Vec<usize> = order[i + 1..=j].to_vec();
                let c: Vec<usize> = order[j + 1..=k].to_vec();
                let rb: Vec<usize> = b.iter().rev().copied().collect();
                let rc: Vec<usize> = c.iter().rev().copied().collect();
                for (x, y) in [(&b, &c), (&c, &b)] {
                    let (rx, ry) = if std::ptr::eq(x, &b) { (&rb, &rc) } else { (&rc, &rb) };
                    for xs in [x, rx] {
                        for ys in [y, ry] {
                            let cand: Vec<usize> = a.iter().chain(xs.iter()).chain(ys.iter()).copied().collect();
                            if tour_cost(inst, &cand).unwrap() < base {
                                return false;
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

fn is_two_opt_optimal(inst: &TspInstance, order: &[usize]) -> bool {
    let n = order.len();
    let base = tour_cost(inst, order).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut cand = order.to_vec();
            cand[i..=j].reverse();
            if tour_cost(inst, &cand).unwrap() < base {
                return false;
            }
        }
    }
    true
}

fn naive_neighbors(order: &[usize], c: usize) -> [usize; 2] {
    let n = order.len();
    let p = order.iter().position(|&x| x == c).unwrap();
    let (a, b) = (order[(p + 1) % n], order[(p + n - 1) % n]);
    [a.min(b), a.max(b)]
}

fn naive_is_edge(order: &[usize], a: usize, b: usize) -> bool {
    naive_neighbors(order, a).contains(&b)
}

/// Rebuilds a cycle from an edge multiset; `None` unless it is one Hamiltonian cycle.
fn naive_rebuild(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if (0..n).any(|c| adj.get(&c).map_or(0, Vec::len) != 2) {
        return None;
    }
    let mut order = vec![0];
    let (mut prev, mut cur) = (usize::MAX, 0);
    loop {
        let nb = &adj[&cur];
        let next = if nb[0] != prev { nb[0] } else { nb[1] };
        prev = cur;
        cur = next;
        if cur == 0 {
            break;
        }
        order.push(cur);
        if order.len() > n {
            return None;
        }
    }
    (order.len() == n).then_some(order)
}

fn has(edges: &[(usize, usize)], a: usize, b: usize) -> bool {
    edges.iter().any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
}

/// First-improvement 2-exchange from `t1` in the documented scan order,
/// using full sorted neighbour lists and brute-force validity checks.
fn naive_first_two_exchange(inst: &TspInstance, order: &[usize], t1: usize) -> Option<Vec<usize>> {
    let n = order.len();
    for t2 in naive_neighbors(order, t1) {
        let g0 = inst.cost(t1, t2);
        let mut others: Vec<usize> = (0..n).filter(|&c| c != t2).collect();
        others.sort_by_key(|&c| (inst.cost(t2, c), c));
        for t3 in others {
            let g1 = g0 - inst.cost(t2, t3);
            if g1 <= 0 {
                break;
            }
            if naive_is_edge(order, t2, t3) {
                continue;
            }
            for t4 in naive_neighbors(order, t3) {
                if (t3 == t1 && t4 == t2) || (t3 == t2 && t4 == t1) {
                    continue;
                }
                if t4 == t1 || naive_is_edge(order, t4, t1) {
                    continue;
                }
                let close = g1 + inst.cost(t3, t4) - inst.cost(t4, t1);
                if close <= 0 {
                    continue;
                }
                let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
                if !has(&edges, t3, t4) {
                    continue;
                }
                edges.retain(|&(a, b)| !((a == t1 && b == t2) || (a == t2 && b == t1)));
                edges.retain(|&(a, b)| !((a == t3 && b == t4) || (a == t4 && b == t3)));
                edges.push((t2, t3));
                edges.push((t4, t1));
                if let Some(new) = naive_rebuild(n, &edges) {
                    return Some(new);
                }
            }
        }
    }
    None
}

fn naive_two_opt_descent(inst: &TspInstance, order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let mut order = order.to_vec();
    loop {
        let mut moved = false;
        for t1 in 0..n {
            while let Some(new) = naive_first_two_exchange(inst, &order, t1) {
                order = new;
                moved = true;
            }
        }
        if !moved {
            return order;
        }
    }
}

// ---------------------------------------------------------------------------

#[test]
fn random_construction_is_uniform_on_four_cities() {
    let inst = generate_random_instance(4, 100, 1).unwrap();
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let draws = 10_000;
    for i in 0..draws {
        let t = construct_random(&inst, &mut stream_rng(5, &[i]));
        assert_valid(&inst, &t);
        *counts.entry(t.into_order()).or_default() += 1;
    }
    assert_eq!(counts.len(), 24);
    let p = 1.0 / 24.0;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts.values() {
        assert!((*c as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1.0, "count {c}");
    }
}

#[test]
fn constructions_are_reproducible() {
    let inst = generate_random_instance(60, 10_000, 2).unwrap();
    let cands = CandidateLists::new(&inst, 10);
    for kind in [
        ConstructionKind::Random,
        ConstructionKind::NearestNeighbor { k: 3 },
        ConstructionKind::Greedy { k: 3 },
    ] {
        let a = construct(&inst, kind, &cands, &mut stream_rng(9, &[1]));
        let b = construct(&inst, kind, &cands, &mut stream_rng(9, &[1]));
        assert_eq!(a, b);
        assert_valid(&inst, &a);
    }
}

#[test]
fn nearest_neighbor_forced_choices() {
    let inst = TspInstance::new("line", vec![[0, 0], [1, 0], [3, 0], [6, 0]]).unwrap();
    let cands = CandidateLists::new(&inst, 10);
    let t = nearest_neighbor_from(&inst, &cands, &mut stream_rng(0, &[]), 1, 0);
    assert_eq!(t.order(), &[0, 1, 2, 3]);
    // k = 1 is deterministic given the start city.
    let inst = generate_random_instance(30, 1000, 4).unwrap();
    let cands = CandidateLists::new(&inst, 10);
    let a = nearest_neighbor_from(&inst, &cands, &mut stream_rng(1, &[]), 1, 7);
    let b = nearest_neighbor_from(&inst, &cands, &mut stream_rng(2, &[]), 1, 7);
    assert_eq!(a, b);
    // Small candidate lists fall back to a full scan.
    let tiny = CandidateLists::new(&inst, 1);
    let c = nearest_neighbor_from(&inst, &tiny, &mut stream_rng(1, &[]), 1, 7);
    assert_eq!(a.order(), c.order());
}

#[test]
fn nearest_neighbor_beats_random_on_average() {
    let inst = generate_random_instance(100, 100_000, 6).unwrap();
    let cands = CandidateLists::new(&inst, 10);
    let (mut nn, mut ra) = (0i64, 0i64);
    for s in 0..100u64 {
        nn += construct_nearest_neighbor(&inst, &cands, &mut stream_rng(s, &[0]), 3).cost();
        ra += construct_random(&inst, &mut stream_rng(s, &[1])).cost();
    }
    assert!(nn <= ra);
}

/// Deterministic greedy matching: cheapest feasible edge first.
fn naive_greedy(inst: &TspInstance) -> Vec<(usize, usize)> {
    let n = inst.len();
    let mut all: Vec<(i64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            all.push((inst.cost(i, j), i, j));
        }
    }
    all.sort();
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let deg = |e: &Vec<(usize, usize)>, c: usize| e.iter().filter(|&&(a, b)| a == c || b == c).count();
    let connected = |e: &Vec<(usize, usize)>, s: usize, t: usize| {
        let mut seen = vec![s];
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &(a, b) in e {
                let y = if a == x {
                    b
                } else if b == x {
                    a
                } else {
                    continue;
                };
                if !seen.contains(&y) {
                    seen.push(y);
                    stack.push(y);
                }
            }
        }
        seen.contains(&t)
    };
    for &(_, i, j) in &all {
        if chosen.len() == n - 1 {
            break;
        }
        if deg(&chosen, i) < 2 && deg(&chosen, j) < 2 && !connected(&chosen, i, j) {
            chosen.push((i, j));
        }
    }
    let ends: Vec<usize> = (0..n).filter(|&c| deg(&chosen, c) < 2).collect();
    chosen.push((ends[0], ends[1]));
    let mut e: Vec<_> = chosen.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    e.sort_unstable();
    e
}

#[test]
fn greedy_width_one_matches_naive_greedy() {
    for seed in 0..10 {
        let inst = generate_random_instance(8, 1000, 100 + seed).unwrap();
        let t = construct_greedy(&inst, &mut stream_rng(seed, &[]), 1);
        assert_valid(&inst, &t);
        assert_eq!(cyc_edges(t.order()), naive_greedy(&inst));
    }
}

#[test]
fn greedy_outputs_are_hamiltonian() {
    let tri = TspInstance::new("tri", vec![[0, 0], [3, 0], [0, 4]]).unwrap();
    let t = construct_greedy(&tri, &mut stream_rng(1, &[]), 3);
    assert_eq!(t.cost(), 12);
    for seed in 0..20 {
        let inst = generate_random_instance(40, 1000, seed).unwrap();
        let t = construct_greedy(&inst, &mut stream_rng(seed, &[3]), 3);
        assert_valid(&inst, &t);
    }
}

#[test]
fn two_opt_uncrosses_square() {
    let inst = TspInstance::new("sq", vec![[0, 0], [1, 0], [1, 1], [0, 1]]).unwrap();
    let crossed = Tour::new(&inst, vec![0, 2, 1, 3]).unwrap();
    let cands = CandidateLists::new(&inst, 10);
    let out = improve_two_opt(&inst, &crossed, &cands);
    assert_eq!(out.cost(), 4);
    assert_valid(&inst, &out);
    let again = improve_two_opt(&inst, &out, &cands);
    assert_eq!(again, out);
}

#[test]
fn two_opt_matches_naive_descent_move_for_move() {
    for seed in 0..25 {
        let inst = generate_random_instance(10, 1000, 500 + seed).unwrap();
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        let ls = LocalSearch::with_candidates(LocalSearchKind::TwoOpt, CandidateLists::new(&inst, 9))
            .without_dont_look_bits();
        let out = ls.improve(&inst, &start);
        let oracle = naive_two_opt_descent(&inst, start.order());
        assert_valid(&inst, &out);
        assert_eq!(cyc_edges(out.order()), cyc_edges(&oracle), "seed {seed}");
        assert_eq!(out.cost(), tour_cost(&inst, &oracle).unwrap());
    }
}

#[test]
fn two_opt_with_dont_look_bits_reaches_two_opt_optimum() {
    for seed in 0..20 {
        let inst = generate_random_instance(12, 1000, 900 + seed).unwrap();
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        let out = improve_two_opt(&inst, &start, &CandidateLists::new(&inst, 11));
        assert_valid(&inst, &out);
        assert!(out.cost() <= start.cost());
        assert!(is_two_opt_optimal(&inst, out.order()));
    }
}

#[test]
fn three_opt_is_exhaustively_optimal_on_eight_cities() {
    for seed in 0..30 {
        let inst = generate_random_instance(8, 1000, 1300 + seed).unwrap();
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        let out = improve_three_opt(&inst, &start, &CandidateLists::new(&inst, 10));
        assert_valid(&inst, &out);
        assert!(out.cost() <= start.cost());
        assert!(is_three_opt_optimal(&inst, out.order()), "seed {seed}");
        assert_eq!(improve_three_opt(&inst, &out, &CandidateLists::new(&inst, 10)), out);
    }
}

#[test]
fn three_opt_no_worse_than_two_opt_on_average() {
    let (mut two, mut three) = (0i64, 0i64);
    for seed in 0..100u64 {
        let inst = generate_random_instance(50, 100_000, 2000 + seed).unwrap();
        let cands = CandidateLists::new(&inst, 10);
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        two += improve_two_opt(&inst, &start, &cands).cost();
        three += improve_three_opt(&inst, &start, &cands).cost();
    }
    assert!(three <= two, "3-opt mean {three} vs 2-opt mean {two}");
}

#[test]
fn lin_kernighan_no_worse_than_three_opt_on_average() {
    let inst = generate_random_instance(100, 100_000, 77).unwrap();
    let c3 = CandidateLists::new(&inst, KOPT_CANDIDATES);
    let clk = CandidateLists::new(&inst, LK_CANDIDATES);
    let (mut lk, mut three) = (0i64, 0i64);
    for seed in 0..100u64 {
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        let a = improve_lin_kernighan(&inst, &start, &clk, LkParams::default());
        let b = improve_three_opt(&inst, &start, &c3);
        assert_valid(&inst, &a);
        assert!(a.cost() <= start.cost());
        // The LK result is also a 3-opt local optimum.
        assert_eq!(improve_three_opt(&inst, &a, &clk).cost(), a.cost());
        lk += a.cost();
        three += b.cost();
    }
    assert!(lk <= three, "LK mean {lk} vs 3-opt mean {three}");
}

#[test]
fn lin_kernighan_finds_optimum_on_nine_cities() {
    let mut hits = 0;
    for seed in 0..40u64 {
        let inst = generate_random_instance(9, 1000, 4000 + seed).unwrap();
        let opt = held_karp_optimum(&inst).unwrap();
        let cands = CandidateLists::new(&inst, LK_CANDIDATES);
        let best = (0..20u64)
            .map(|r| {
                let start = construct_random(&inst, &mut stream_rng(seed, &[r]));
                improve_lin_kernighan(&inst, &start, &cands, LkParams::default()).cost()
            })
            .min()
            .unwrap();
        assert!(best >= opt);
        hits += (best == opt) as usize;
    }
    assert!(hits as f64 >= 0.95 * 40.0, "hits {hits}/40");
}

#[test]
fn lin_kernighan_fixpoint() {
    let inst = generate_random_instance(60, 10_000, 8).unwrap();
    let cands = CandidateLists::new(&inst, LK_CANDIDATES);
    let start = construct_random(&inst, &mut stream_rng(3, &[]));
    let once = improve_lin_kernighan(&inst, &start, &cands, LkParams::default());
    let twice = improve_lin_kernighan(&inst, &once, &cands, LkParams::default());
    assert_eq!(once, twice);
}

#[test]
fn double_bridge_properties() {
    let inst = generate_random_instance(30, 1000, 12).unwrap();
    let mut rng = stream_rng(4, &[]);
    let tour = construct_random(&inst, &mut rng);
    for _ in 0..200 {
        let kicked = double_bridge_kick(&inst, &tour, &mut rng).unwrap();
        assert_valid(&inst, &kicked);
        assert_ne!(cyc_edges(kicked.order()), cyc_edges(tour.order()));
    }
    // Four removed, four added edges.
    let o = tour.order();
    let (p1, p2, p3) = (5, 11, 20);
    let kicked = double_bridge_at(&inst, &tour, p1, p2, p3);
    let before = cyc_edges(o);
    let after = cyc_edges(kicked.order());
    let removed: Vec<_> = before.iter().filter(|e| !after.contains(e)).collect();
    let added: Vec<_> = after.iter().filter(|e| !before.contains(e)).collect();
    assert_eq!((removed.len(), added.len()), (4, 4));
    let delta: i64 = added.iter().map(|e| inst.cost(e.0, e.1)).sum::<i64>()
        - removed.iter().map(|e| inst.cost(e.0, e.1)).sum::<i64>();
    assert_eq!(kicked.cost() - tour.cost(), delta);

    let small = generate_random_instance(7, 100, 1).unwrap();
    let t = construct_random(&small, &mut rng);
    assert!(double_bridge_kick(&small, &t, &mut rng).is_err());
}

#[test]
fn local_searches_are_monotone_on_random_starts() {
    let mut rng = stream_rng(99, &[]);
    for trial in 0..10u64 {
        let n = rng.random_range(10..80);
        let inst = generate_random_instance(n, 10_000, trial).unwrap();
        for kind in [
            LocalSearchKind::TwoOpt,
            LocalSearchKind::ThreeOpt,
            LocalSearchKind::LinKernighan(LkParams::default()),
        ] {
            let ls = LocalSearch::new(&inst, kind);
            let start = construct_random(&inst, &mut rng);
            let out = ls.improve(&inst, &start);
            assert_valid(&inst, &out);
            assert!(out.cost() <= start.cost());
        }
    }
}
