//! Construction heuristics and local searches for the multi-start drivers.

mod array_tour;
mod construct;
mod kick;
mod kopt;
mod lk;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tsp::{Tour, TspInstance};
use array_tour::ArrayTour;

pub use construct::{construct_greedy, construct_nearest_neighbor, construct_random, nearest_neighbor_from};
pub use kick::{double_bridge_at, double_bridge_kick, MIN_KICK_CITIES};

/// Default randomization width of the NN and greedy constructions.
pub const DEFAULT_CONSTRUCTION_WIDTH: usize = 3;
/// Candidate-list width for 2-opt and 3-opt.
pub const KOPT_CANDIDATES: usize = 10;
/// Candidate-list width for Lin-Kernighan.
pub const LK_CANDIDATES: usize = 12;

/// Per-city neighbour lists ordered by `(cost, index)`.
#[derive(Debug, Clone)]
pub struct CandidateLists {
    width: usize,
    flat: Vec<usize>,
    costs: Vec<i64>,
}

impl CandidateLists {
    pub fn new(inst: &TspInstance, width: usize) -> Self {
        let lists = inst.nearest_neighbors(width);
        let costs = lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&j| inst.cost(i, j)))
            .collect();
        Self {
            width: lists.first().map_or(0, Vec::len),
            flat: lists.concat(),
            costs,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn of(&self, city: usize) -> &[usize] {
        &self.flat[city * self.width..(city + 1) * self.width]
    }

    /// `(neighbour, cost)` pairs of `city` in list order.
    #[inline]
    pub(crate) fn with_costs(&self, city: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let r = city * self.width..(city + 1) * self.width;
        self.flat[r.clone()].iter().copied().zip(self.costs[r].iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionKind {
    Random,
    NearestNeighbor { k: usize },
    Greedy { k: usize },
}

impl ConstructionKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::NearestNeighbor { k: 0 } | Self::Greedy { k: 0 } => {
                invalid("construction width k must be at least 1")
            }
            _ => Ok(()),
        }
    }

    /// Short name used in algorithm labels: RA, NN or GR.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Random => "RA",
            Self::NearestNeighbor { .. } => "NN",
            Self::Greedy { .. } => "GR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LkParams {
    pub max_depth: usize,
    /// Alternatives tried at each of the first two levels of a chain.
    pub breadth: usize,
}

impl Default for LkParams {
    fn default() -> Self {
        Self {
            max_depth: 50,
            breadth: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalSearchKind {
    TwoOpt,
    ThreeOpt,
    LinKernighan(LkParams),
}

impl LocalSearchKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::LinKernighan(p) if p.max_depth < 2 => invalid("LK max_depth must be at least 2"),
            Self::LinKernighan(p) if p.breadth < 1 || p.breadth > lk::MAX_ALTERNATIVES => {
                invalid(format!("LK breadth must be in 1..={}", lk::MAX_ALTERNATIVES))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::TwoOpt => "2opt",
            Self::ThreeOpt => "3opt",
            Self::LinKernighan(_) => "LK",
        }
    }

    pub fn default_candidates(&self) -> usize {
        match self {
            Self::LinKernighan(_) => LK_CANDIDATES,
            _ => KOPT_CANDIDATES,
        }
    }
}

/// 2-opt descent over candidate lists with don't-look bits.
pub fn improve_two_opt(inst: &TspInstance, tour: &Tour, cands: &CandidateLists) -> Tour {
    run_kopt(inst, tour, cands, 2, true)
}

/// 3-opt descent (sequential 3-exchanges, 2-exchanges included).
pub fn improve_three_opt(inst: &TspInstance, tour: &Tour, cands: &CandidateLists) -> Tour {
    run_kopt(inst, tour, cands, 3, true)
}

pub fn improve_lin_kernighan(inst: &TspInstance, tour: &Tour, cands: &CandidateLists, params: LkParams) -> Tour {
    run_lk(inst, tour, cands, params, true)
}

fn run_kopt(inst: &TspInstance, tour: &Tour, cands: &CandidateLists, k: usize, dlb: bool) -> Tour {
    let mut arr = ArrayTour::new(tour.order().to_vec());
    let mut cost = tour.cost();
    kopt::descend(&mut arr, &mut cost, dlb, kopt::kopt_step(inst, cands, k));
    Tour::from_parts_unchecked(arr.into_order(), cost)
}

fn run_lk(inst: &TspInstance, tour: &Tour, cands: &CandidateLists, params: LkParams, dlb: bool) -> Tour {
    let mut arr = ArrayTour::new(tour.order().to_vec());
    let mut cost = tour.cost();
    kopt::descend(&mut arr, &mut cost, dlb, lk::lk_step(inst, cands, params));
    Tour::from_parts_unchecked(arr.into_order(), cost)
}

/// A configured local search: kind, candidate lists and scan options.
#[derive(Debug, Clone)]
pub struct LocalSearch {
    kind: LocalSearchKind,
    cands: CandidateLists,
    dont_look_bits: bool,
}

impl LocalSearch {
    pub fn new(inst: &TspInstance, kind: LocalSearchKind) -> Self {
        Self::with_candidates(kind, CandidateLists::new(inst, kind.default_candidates()))
    }

    pub fn with_candidates(kind: LocalSearchKind, cands: CandidateLists) -> Self {
        Self {
            kind,
            cands,
            dont_look_bits: true,
        }
    }

    /// Disables don't-look bits: every sweep scans every base city.
    pub fn without_dont_look_bits(mut self) -> Self {
        self.dont_look_bits = false;
        self
    }

    pub fn kind(&self) -> LocalSearchKind {
        self.kind
    }

    pub fn candidates(&self) -> &CandidateLists {
        &self.cands
    }

    pub fn improve(&self, inst: &TspInstance, tour: &Tour) -> Tour {
        match self.kind {
            LocalSearchKind::TwoOpt => run_kopt(inst, tour, &self.cands, 2, self.dont_look_bits),
            LocalSearchKind::ThreeOpt => run_kopt(inst, tour, &self.cands, 3, self.dont_look_bits),
            LocalSearchKind::LinKernighan(p) => run_lk(inst, tour, &self.cands, p, self.dont_look_bits),
        }
    }
}

/// Builds a starting tour of the given kind.
pub fn construct<R: Rng + ?Sized>(
    inst: &TspInstance,
    kind: ConstructionKind,
    cands: &CandidateLists,
    rng: &mut R,
) -> Tour {
    match kind {
        ConstructionKind::Random => construct_random(inst, rng),
        ConstructionKind::NearestNeighbor { k } => construct_nearest_neighbor(inst, cands, rng, k),
        ConstructionKind::Greedy { k } => construct_greedy(inst, rng, k),
    }
}
