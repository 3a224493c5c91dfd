//! Lin-Kernighan style variable-depth search built from chained 2-opt flips.

use arrayvec::ArrayVec;

use super::array_tour::{contains_edge, ArrayTour, Edge};
use super::kopt::find_sequential;
use super::{CandidateLists, LkParams};
use crate::tsp::TspInstance;

/// Levels below this use the configured breadth; deeper levels use 1.
const BACKTRACK_LEVELS: usize = 2;
/// Upper bound on the breadth honoured at backtracking levels.
pub(crate) const MAX_ALTERNATIVES: usize = 16;

struct Chain<'a> {
    inst: &'a TspInstance,
    cands: &'a CandidateLists,
    params: LkParams,
    t1: usize,
    /// Flips applied so far as `(a, b, c, d)` arguments of `ArrayTour::two_opt`.
    flips: Vec<(usize, usize, usize, usize)>,
    removed: Vec<Edge>,
    added: Vec<Edge>,
    best_gain: i64,
    best_len: usize,
}

impl Chain<'_> {
    /// Extends the chain whose open end is `t2` (the tour edge `(t1, t2)` is
    /// the one to break next) with cumulative gain `gain`. Returns true once
    /// an improving prefix has been recorded.
    fn extend(&mut self, tour: &mut ArrayTour, t2: usize, gain: i64, depth: usize) -> bool {
        let (inst, t1) = (self.inst, self.t1);
        let forward = tour.next(t2) == t1;
        let breadth = if depth < BACKTRACK_LEVELS {
            self.params.breadth
        } else {
            1
        };
        let mut alts: ArrayVec<(i64, usize, usize), MAX_ALTERNATIVES> = ArrayVec::new();
        for (t3, c) in self.cands.with_costs(t2) {
            let g1 = gain - c;
            if g1 <= 0 {
                break;
            }
            if t3 == t1 || tour.is_edge(t2, t3) || contains_edge(&self.removed, t2, t3) {
                continue;
            }
            let t4 = if forward { tour.next(t3) } else { tour.prev(t3) };
            if t4 == t1 || contains_edge(&self.added, t3, t4) {
                continue;
            }
            let alt = (inst.cost(t3, t4) - inst.cost(t2, t3), t3, t4);
            // Keep the `breadth` best by (gain desc, city asc).
            let at = alts.partition_point(|a| a.0 > alt.0 || (a.0 == alt.0 && a.1 < alt.1));
            if at < breadth.min(MAX_ALTERNATIVES) {
                if alts.len() == breadth.min(MAX_ALTERNATIVES) {
                    alts.pop();
                }
                alts.insert(at, alt);
            }
        }

        for &(_, t3, t4) in alts.iter() {
            tour.two_opt(t2, t1, t3, t4);
            self.flips.push((t2, t1, t3, t4));
            self.removed.push((t3, t4));
            self.added.push((t2, t3));
            let g = gain - inst.cost(t2, t3) + inst.cost(t3, t4);
            let close = g - inst.cost(t4, t1);
            if close > self.best_gain {
                self.best_gain = close;
                self.best_len = self.flips.len();
            }
            if depth + 1 < self.params.max_depth && self.extend(tour, t4, g, depth + 1) {
                return true;
            }
            if self.best_gain > 0 {
                return true;
            }
            self.undo_last(tour);
        }
        false
    }

    fn undo_last(&mut self, tour: &mut ArrayTour) {
        let (a, b, c, d) = self.flips.pop().expect("flip to undo");
        tour.two_opt(a, c, b, d);
        self.removed.pop();
        self.added.pop();
    }
}

/// Tries one LK chain from `t1`, falling back to a sequential 3-exchange.
/// On success the tour is modified in place.
pub(crate) fn lk_step<'a>(
    inst: &'a TspInstance,
    cands: &'a CandidateLists,
    params: LkParams,
) -> impl FnMut(&mut ArrayTour, usize) -> Option<(i64, Vec<usize>)> + 'a {
    let mut chain = Chain {
        inst,
        cands,
        params,
        t1: 0,
        flips: Vec::new(),
        removed: Vec::new(),
        added: Vec::new(),
        best_gain: 0,
        best_len: 0,
    };
    move |tour, t1| {
        for t2 in tour.neighbors_sorted(t1) {
            chain.t1 = t1;
            chain.flips.clear();
            chain.removed.clear();
            chain.removed.push((t1, t2));
            chain.added.clear();
            chain.best_gain = 0;
            chain.best_len = 0;
            if chain.extend(tour, t2, inst.cost(t1, t2), 0) {
                while chain.flips.len() > chain.best_len {
                    chain.undo_last(tour);
                }
                let mut touched = vec![t1, t2];
                touched.extend(chain.flips.iter().flat_map(|&(a, _, c, d)| [a, c, d]));
                return Some((chain.best_gain, touched));
            }
            debug_assert!(chain.flips.is_empty());
        }
        let x = find_sequential(inst, cands, tour, t1, 3)?;
        x.apply(tour);
        Some((x.gain, x.removed.iter().flat_map(|&(a, b)| [a, b]).collect()))
    }
}
