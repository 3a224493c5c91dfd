//! Array-with-positions tour representation used by the local searches.

use arrayvec::ArrayVec;

pub(crate) type Edge = (usize, usize);

#[inline]
pub(crate) fn same_edge(e: Edge, a: usize, b: usize) -> bool {
    (e.0 == a && e.1 == b) || (e.0 == b && e.1 == a)
}

#[inline]
pub(crate) fn contains_edge(edges: &[Edge], a: usize, b: usize) -> bool {
    edges.iter().any(|&e| same_edge(e, a, b))
}

#[derive(Debug, Clone)]
pub(crate) struct ArrayTour {
    order: Vec<usize>,
    pos: Vec<usize>,
    succ: Vec<usize>,
    pred: Vec<usize>,
    scratch: Vec<usize>,
}

impl ArrayTour {
    pub fn new(order: Vec<usize>) -> Self {
        let mut pos = vec![0; order.len()];
        for (i, &c) in order.iter().enumerate() {
            pos[c] = i;
        }
        let n = order.len();
        let mut t = Self {
            order,
            pos,
            succ: vec![0; n],
            pred: vec![0; n],
            scratch: Vec::with_capacity(n),
        };
        t.relink(0, n);
        t
    }

    /// Refreshes `succ`/`pred` for the `len` tour edges starting at position `from`.
    fn relink(&mut self, from: usize, len: usize) {
        let n = self.order.len();
        let mut p = from;
        for _ in 0..len {
            let q = if p + 1 == n { 0 } else { p + 1 };
            let (a, b) = (self.order[p], self.order[q]);
            self.succ[a] = b;
            self.pred[b] = a;
            p = q;
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[cfg(test)]
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    #[inline]
    pub fn next(&self, c: usize) -> usize {
        self.succ[c]
    }

    #[inline]
    pub fn prev(&self, c: usize) -> usize {
        self.pred[c]
    }

    /// The two tour neighbours of `c`, smaller city index first.
    #[inline]
    pub fn neighbors_sorted(&self, c: usize) -> [usize; 2] {
        let (a, b) = (self.next(c), self.prev(c));
        if a <= b {
            [a, b]
        } else {
            [b, a]
        }
    }

    #[inline]
    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.next(a) == b || self.prev(a) == b
    }

    /// Reverses the forward path `from ..= to`; the complementary path is
    /// reversed instead when it is shorter, which yields the same cycle.
    pub fn reverse_path(&mut self, from: usize, to: usize) {
        let n = self.order.len();
        let (mut i, mut j) = (self.pos[from], self.pos[to]);
        let mut len = (j + n - i) % n + 1;
        if 2 * len > n {
            i = self.pos[self.next(to)];
            j = self.pos[self.prev(from)];
            len = n - len;
        }
        let first = if i == 0 { n - 1 } else { i - 1 };
        for _ in 0..len / 2 {
            let (a, b) = (self.order[i], self.order[j]);
            self.order[i] = b;
            self.order[j] = a;
            self.pos[b] = i;
            self.pos[a] = j;
            i = if i + 1 == n { 0 } else { i + 1 };
            j = if j == 0 { n - 1 } else { j - 1 };
        }
        self.relink(first, (len + 1).min(n));
    }

    /// Removes tour edges `(a, b)` and `(c, d)` and adds `(a, c)`, `(b, d)`.
    /// Requires `b` and `d` to lie on the same side of `a` and `c`.
    pub fn two_opt(&mut self, a: usize, b: usize, c: usize, d: usize) {
        if self.next(a) == b {
            debug_assert_eq!(self.next(c), d);
            self.reverse_path(b, c);
        } else {
            debug_assert_eq!(self.prev(a), b);
            debug_assert_eq!(self.prev(c), d);
            self.reverse_path(c, b);
        }
    }

    /// True when `b` lies on the forward path from `a` to `c`.
    #[inline]
    fn between(&self, a: usize, b: usize, c: usize) -> bool {
        let n = self.order.len();
        let (pa, pb, pc) = (self.pos[a], self.pos[b], self.pos[c]);
        (pb + n - pa) % n <= (pc + n - pa) % n
    }

    /// Whether the sequential 3-exchange removing `(t1,t2)`, `(t3,t4)`,
    /// `(t5,t6)` and adding `(t2,t3)`, `(t4,t5)`, `(t6,t1)` yields a tour.
    /// The six cities must be distinct and the removed pairs tour edges.
    pub fn sequential3_feasible(&self, t: [usize; 6]) -> bool {
        let [t1, t2, t3, t4, t5, t6] = t;
        // Orient so that t2 follows t1.
        let fwd = self.next(t1) == t2;
        let succ = |c: usize| if fwd { self.next(c) } else { self.prev(c) };
        let between = |a: usize, b: usize, c: usize| {
            if fwd {
                self.between(a, b, c)
            } else {
                self.between(c, b, a)
            }
        };
        if t4 == succ(t3) {
            between(t2, t5, t3)
        } else if between(t2, t5, t4) {
            t6 == succ(t5)
        } else {
            t5 == succ(t6)
        }
    }

    /// Reconnection plan for removing `removed` and adding `added`: the
    /// segments in visiting order with a reversal flag, or `None` when the
    /// result is not a single Hamiltonian cycle.
    pub fn reconnect(&self, removed: &[Edge], added: &[Edge]) -> Option<Reconnection> {
        let n = self.order.len();
        let k = removed.len();
        assert!(k <= MAX_EXCHANGE, "at most {MAX_EXCHANGE} edges per exchange");
        if k == 0 || added.len() != k {
            return None;
        }
        // Position of the left endpoint of each removed edge.
        let mut cuts = ArrayVec::<usize, MAX_EXCHANGE>::new();
        for &(u, v) in removed {
            if self.next(u) == v {
                cuts.push(self.pos[u]);
            } else if self.next(v) == u {
                cuts.push(self.pos[v]);
            } else {
                return None;
            }
        }
        cuts.sort_unstable();
        if cuts.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        // Segment s runs from cuts[s] + 1 to cuts[s + 1] (cyclically).
        let mut ends = [(0usize, 0usize); MAX_EXCHANGE];
        for (s, e) in ends.iter_mut().enumerate().take(k) {
            let head = if cuts[s] + 1 == n { 0 } else { cuts[s] + 1 };
            let tail = if s + 1 == k { cuts[0] } else { cuts[s + 1] };
            *e = (self.order[head], self.order[tail]);
        }
        const FREE: usize = usize::MAX;
        let mut link = [FREE; 2 * MAX_EXCHANGE];
        let slot_of = |city: usize, link: &[usize]| -> Option<usize> {
            (0..k).find_map(|s| {
                if ends[s].0 == city && link[2 * s] == FREE {
                    Some(2 * s)
                } else if ends[s].1 == city && link[2 * s + 1] == FREE {
                    Some(2 * s + 1)
                } else {
                    None
                }
            })
        };
        for &(x, y) in added {
            let sx = slot_of(x, &link)?;
            link[sx] = FREE - 1;
            let sy = slot_of(y, &link)?;
            link[sx] = sy;
            link[sy] = sx;
        }
        let mut plan = ArrayVec::<(usize, bool), MAX_EXCHANGE>::new();
        let mut slot = 0usize;
        loop {
            plan.push((slot / 2, slot % 2 == 1));
            slot = link[slot ^ 1];
            if slot == 0 {
                break;
            }
            if plan.len() == k {
                return None;
            }
        }
        (plan.len() == k).then_some(Reconnection { cuts, plan })
    }

    pub fn apply(&mut self, rec: &Reconnection) {
        let n = self.order.len();
        let k = rec.cuts.len();
        self.scratch.clear();
        for &(seg, reversed) in &rec.plan {
            let start = (rec.cuts[seg] + 1) % n;
            let end = rec.cuts[(seg + 1) % k];
            let len = (end + n - start) % n + 1;
            let from = self.scratch.len();
            if start + len <= n {
                self.scratch.extend_from_slice(&self.order[start..start + len]);
            } else {
                self.scratch.extend_from_slice(&self.order[start..]);
                self.scratch.extend_from_slice(&self.order[..start + len - n]);
            }
            if reversed {
                self.scratch[from..].reverse();
            }
        }
        debug_assert_eq!(self.scratch.len(), n);
        std::mem::swap(&mut self.order, &mut self.scratch);
        for (i, &c) in self.order.iter().enumerate() {
            self.pos[c] = i;
        }
        for w in self.order.windows(2) {
            self.succ[w[0]] = w[1];
            self.pred[w[1]] = w[0];
        }
        self.relink(n - 1, 1);
    }
}

/// Largest number of edges a single reconnection may exchange.
pub(crate) const MAX_EXCHANGE: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Reconnection {
    cuts: ArrayVec<usize, MAX_EXCHANGE>,
    plan: ArrayVec<(usize, bool), MAX_EXCHANGE>,
}
