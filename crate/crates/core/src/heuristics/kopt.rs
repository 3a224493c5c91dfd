//! Sequential k-exchange search (k = 2, 3) and the first-improvement
//! descent driver shared by all local searches.

use arrayvec::ArrayVec;

use super::array_tour::{contains_edge, ArrayTour, Edge, Reconnection, MAX_EXCHANGE};
use super::CandidateLists;
use crate::tsp::TspInstance;

/// An improving exchange found from some base city.
pub(crate) struct Exchange {
    pub gain: i64,
    pub removed: ArrayVec<Edge, MAX_EXCHANGE>,
    pub plan: Plan,
}

pub(crate) enum Plan {
    /// Arguments of `ArrayTour::two_opt`.
    TwoOpt(usize, usize, usize, usize),
    General(Reconnection),
}

impl Exchange {
    pub fn apply(&self, tour: &mut ArrayTour) {
        match &self.plan {
            Plan::TwoOpt(a, b, c, d) => tour.two_opt(*a, *b, *c, *d),
            Plan::General(rec) => tour.apply(rec),
        }
    }
}

/// Searches sequential exchanges of up to `max_k` edges starting at `t1`.
///
/// Scan order: `t2` over the tour neighbours of `t1` by city index, then
/// every later `t(2i+1)` in candidate-list order (stopping once the partial
/// gain is no longer positive) and `t(2i+2)` over the tour neighbours of
/// `t(2i+1)` by city index. At each level the closing exchange is tested
/// before going deeper; the first improving exchange is returned.
pub(crate) fn find_sequential(
    inst: &TspInstance,
    cands: &CandidateLists,
    tour: &ArrayTour,
    t1: usize,
    max_k: usize,
) -> Option<Exchange> {
    debug_assert!((2..=MAX_EXCHANGE).contains(&max_k));
    let mut search = Search {
        inst,
        cands,
        tour,
        t1,
        t1_neighbors: tour.neighbors_sorted(t1),
        t1_row: inst.cost_row(t1),
        max_k,
        removed: ArrayVec::new(),
        added: ArrayVec::new(),
    };
    for t2 in tour.neighbors_sorted(t1) {
        search.removed.push((t1, t2));
        if let Some(x) = search.extend(t2, inst.cost(t1, t2)) {
            return Some(x);
        }
        search.removed.pop();
    }
    None
}

struct Search<'a> {
    inst: &'a TspInstance,
    cands: &'a CandidateLists,
    tour: &'a ArrayTour,
    t1: usize,
    t1_neighbors: [usize; 2],
    t1_row: Option<&'a [i64]>,
    max_k: usize,
    removed: ArrayVec<Edge, MAX_EXCHANGE>,
    added: ArrayVec<Edge, MAX_EXCHANGE>,
}

impl Search<'_> {
    #[inline]
    fn cost_to_t1(&self, c: usize) -> i64 {
        match self.t1_row {
            Some(row) => row[c],
            None => self.inst.cost(c, self.t1),
        }
    }

    fn extend(&mut self, last: usize, gain: i64) -> Option<Exchange> {
        let (inst, tour, t1) = (self.inst, self.tour, self.t1);
        let last_level = self.removed.len() + 1 == self.max_k;
        for (t3, c) in self.cands.with_costs(last) {
            let g1 = gain - c;
            if g1 <= 0 {
                break;
            }
            if tour.is_edge(last, t3) || contains_edge(&self.added, last, t3) {
                continue;
            }
            self.added.push((last, t3));
            for t4 in tour.neighbors_sorted(t3) {
                let g2 = g1 + inst.cost(t3, t4);
                if last_level && g2 - self.cost_to_t1(t4) <= 0 {
                    continue;
                }
                if contains_edge(&self.removed, t3, t4) {
                    continue;
                }
                self.removed.push((t3, t4));
                if t4 != t1 && !self.t1_neighbors.contains(&t4) && !contains_edge(&self.added, t4, t1) {
                    let close = g2 - self.cost_to_t1(t4);
                    if close > 0 {
                        self.added.push((t4, t1));
                        let plan = if self.removed.len() == 2 {
                            let t2 = self.removed[0].1;
                            ((tour.next(t2) == t1) == (tour.next(t3) == t4)).then_some(Plan::TwoOpt(t2, t1, t3, t4))
                        } else if let Some(t) = six_distinct(&self.removed) {
                            if tour.sequential3_feasible(t) {
                                tour.reconnect(&self.removed, &self.added).map(Plan::General)
                            } else {
                                None
                            }
                        } else {
                            tour.reconnect(&self.removed, &self.added).map(Plan::General)
                        };
                        if let Some(plan) = plan {
                            return Some(Exchange {
                                gain: close,
                                removed: self.removed.clone(),
                                plan,
                            });
                        }
                        self.added.pop();
                    }
                }
                if self.removed.len() < self.max_k {
                    if let Some(x) = self.extend(t4, g2) {
                        return Some(x);
                    }
                }
                self.removed.pop();
            }
            self.added.pop();
        }
        None
    }
}

/// Endpoints of three removed edges when all six cities differ.
fn six_distinct(edges: &[Edge]) -> Option<[usize; 6]> {
    let &[(a, b), (c, d), (e, f)] = edges else {
        return None;
    };
    let t = [a, b, c, d, e, f];
    (0..6).all(|i| (i + 1..6).all(|j| t[i] != t[j])).then_some(t)
}

/// Runs first-improvement sweeps over base cities in ascending index until
/// no base city yields an improvement.
///
/// `improve` tries to improve the tour from one base city and returns the
/// gain and the cities whose incident edges changed. With don't-look bits a
/// city is skipped until one of its edges changes; a final sweep with all
/// bits cleared confirms the local optimum.
pub(crate) fn descend<F>(tour: &mut ArrayTour, cost: &mut i64, dont_look_bits: bool, mut improve: F)
where
    F: FnMut(&mut ArrayTour, usize) -> Option<(i64, Vec<usize>)>,
{
    let n = tour.len();
    let mut active = vec![true; n];
    loop {
        let mut moved = false;
        let mut skipped = false;
        for t1 in 0..n {
            if dont_look_bits && !active[t1] {
                skipped = true;
                continue;
            }
            while let Some((gain, touched)) = improve(tour, t1) {
                debug_assert!(gain > 0);
                *cost -= gain;
                moved = true;
                for c in touched {
                    active[c] = true;
                }
            }
            active[t1] = false;
        }
        if !moved {
            if skipped {
                active.fill(true);
            } else {
                break;
            }
        }
    }
}

/// Improvement step for plain k-opt descent.
pub(crate) fn kopt_step<'a>(
    inst: &'a TspInstance,
    cands: &'a CandidateLists,
    max_k: usize,
) -> impl FnMut(&mut ArrayTour, usize) -> Option<(i64, Vec<usize>)> + 'a {
    move |tour, t1| {
        let x = find_sequential(inst, cands, tour, t1, max_k)?;
        x.apply(tour);
        let touched = x.removed.iter().flat_map(|&(a, b)| [a, b]).collect();
        Some((x.gain, touched))
    }
}
