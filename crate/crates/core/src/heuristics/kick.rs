//! Double-bridge perturbation.

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::tsp::{Tour, TspInstance};

/// Smallest tour the double bridge is defined on.
pub const MIN_KICK_CITIES: usize = 8;

/// Cuts the tour at three distinct random positions into `A B C D` and
/// reconnects the segments as `A D C B`, replacing four edges.
pub fn double_bridge_kick<R: Rng + ?Sized>(inst: &TspInstance, tour: &Tour, rng: &mut R) -> Result<Tour> {
    let n = tour.order().len();
    if n < MIN_KICK_CITIES {
        return invalid(format!(
            "double bridge needs at least {MIN_KICK_CITIES} cities, got {n}"
        ));
    }
    let mut cuts = index::sample(rng, n - 1, 3).into_vec();
    cuts.sort_unstable();
    let [p1, p2, p3] = [cuts[0] + 1, cuts[1] + 1, cuts[2] + 1];
    Ok(double_bridge_at(inst, tour, p1, p2, p3))
}

/// Double bridge with segment starts `0 < p1 < p2 < p3 < n`.
pub fn double_bridge_at(inst: &TspInstance, tour: &Tour, p1: usize, p2: usize, p3: usize) -> Tour {
    let o = tour.order();
    let n = o.len();
    assert!(
        0 < p1 && p1 < p2 && p2 < p3 && p3 < n,
        "cut points must be increasing inside the tour"
    );
    let removed = inst.cost(o[p1 - 1], o[p1])
        + inst.cost(o[p2 - 1], o[p2])
        + inst.cost(o[p3 - 1], o[p3])
        + inst.cost(o[n - 1], o[0]);
    let added = inst.cost(o[p1 - 1], o[p3])
        + inst.cost(o[n - 1], o[p2])
        + inst.cost(o[p3 - 1], o[p1])
        + inst.cost(o[p2 - 1], o[0]);
    let mut order = Vec::with_capacity(n);
    order.extend_from_slice(&o[..p1]);
    order.extend_from_slice(&o[p3..]);
    order.extend_from_slice(&o[p2..p3]);
    order.extend_from_slice(&o[p1..p2]);
    Tour::from_parts_unchecked(order, tour.cost() - removed + added)
}
