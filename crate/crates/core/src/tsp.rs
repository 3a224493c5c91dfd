//! Symmetric TSP instances with rounded Euclidean costs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;

/// Above this many cities the cost matrix is not materialized.
pub const MATRIX_LIMIT: usize = 5000;

/// Largest instance accepted by [`held_karp_optimum`].
pub const HELD_KARP_LIMIT: usize = 20;

/// `floor(sqrt(dx^2 + dy^2) + 0.5)`.
pub fn rounded_euclidean_cost(p: [i64; 2], q: [i64; 2]) -> i64 {
    let dx = (p[0] - q[0]) as f64;
    let dy = (p[1] - q[1]) as f64;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor() as i64
}

/// A symmetric TSP instance on integer planar coordinates.
#[derive(Debug, Clone)]
pub struct TspInstance {
    name: String,
    coords: Vec<[i64; 2]>,
    known_optimum: Option<i64>,
    matrix: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    name: String,
    n: usize,
    coords: Vec<[i64; 2]>,
    known_optimum: Option<i64>,
}

impl TspInstance {
    pub fn new(name: impl Into<String>, coords: Vec<[i64; 2]>) -> Result<Self> {
        if coords.len() < 3 {
            return invalid(format!("an instance needs at least 3 cities, got {}", coords.len()));
        }
        if let Some((i, c)) = coords.iter().enumerate().find(|(_, c)| c[0] < 0 || c[1] < 0) {
            return invalid(format!("city {i} has a negative coordinate {c:?}"));
        }
        let n = coords.len();
        let matrix = (n <= MATRIX_LIMIT).then(|| {
            let mut m = vec![0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = rounded_euclidean_cost(coords[i], coords[j]);
                    m[i * n + j] = c;
                    m[j * n + i] = c;
                }
            }
            m
        });
        Ok(Self {
            name: name.into(),
            coords,
            known_optimum: None,
            matrix,
        })
    }

    pub fn with_known_optimum(mut self, optimum: Option<i64>) -> Self {
        self.known_optimum = optimum;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[i64; 2]] {
        &self.coords
    }

    pub fn known_optimum(&self) -> Option<i64> {
        self.known_optimum
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> i64 {
        match &self.matrix {
            Some(m) => m[i * self.coords.len() + j],
            None => rounded_euclidean_cost(self.coords[i], self.coords[j]),
        }
    }

    /// Row `i` of the cost matrix, when the matrix is stored.
    #[inline]
    pub(crate) fn cost_row(&self, i: usize) -> Option<&[i64]> {
        let n = self.coords.len();
        self.matrix.as_deref().map(|m| &m[i * n..(i + 1) * n])
    }

    /// The `k` nearest other cities of every city, ordered by `(cost, index)`.
    pub fn nearest_neighbors(&self, k: usize) -> Vec<Vec<usize>> {
        let n = self.len();
        let k = k.min(n - 1);
        (0..n)
            .map(|i| {
                let mut others: Vec<(i64, usize)> = (0..n).filter(|&j| j != i).map(|j| (self.cost(i, j), j)).collect();
                if k < others.len() {
                    others.select_nth_unstable(k);
                    others.truncate(k);
                }
                others.sort_unstable();
                others.into_iter().map(|(_, j)| j).collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceJson {
            name: self.name.clone(),
            n: self.len(),
            coords: self.coords.clone(),
            known_optimum: self.known_optimum,
        })
        .expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("instance JSON: {e}")))?;
        if raw.n != raw.coords.len() {
            return invalid(format!("n = {} but {} coordinates given", raw.n, raw.coords.len()));
        }
        Ok(Self::new(raw.name, raw.coords)?.with_known_optimum(raw.known_optimum))
    }
}

/// Uniform integer coordinates in `[0, coord_bound - 1]`, reproducible per seed.
pub fn generate_random_instance(n: usize, coord_bound: i64, seed: u64) -> Result<TspInstance> {
    if n < 3 {
        return invalid(format!("n must be at least 3, got {n}"));
    }
    if coord_bound < 1 {
        return invalid(format!("coord_bound must be at least 1, got {coord_bound}"));
    }
    let mut rng = stream_rng(seed, &[0x1257]);
    let coords = (0..n)
        .map(|_| [rng.random_range(0..coord_bound), rng.random_range(0..coord_bound)])
        .collect();
    TspInstance::new(format!("rand{n}-s{seed}"), coords)
}

/// Parses the `TYPE: TSP`, `EDGE_WEIGHT_TYPE: EUC_2D` subset of TSPLIB.
pub fn parse_tsplib(text: &str) -> Result<TspInstance> {
    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<String> = None;
    let mut lines = text.lines().enumerate();
    let mut coords: Option<Vec<Option<[i64; 2]>>> = None;
    let mut seen = 0usize;

    for (idx, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if line.starts_with("NODE_COORD_SECTION") {
            let n = dimension.ok_or_else(|| Error::Malformed {
                line: idx + 1,
                detail: "NODE_COORD_SECTION before DIMENSION".into(),
            })?;
            match weight_type.as_deref() {
                Some("EUC_2D") => {}
                Some(other) => return Err(Error::UnsupportedFormat(format!("EDGE_WEIGHT_TYPE {other}"))),
                None => return Err(Error::UnsupportedFormat("missing EDGE_WEIGHT_TYPE".into())),
            }
            coords = Some(vec![None; n]);
            break;
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                return Err(Error::Malformed {
                    line: idx + 1,
                    detail: format!("expected `KEY : VALUE`, got `{line}`"),
                })
            }
        };
        match key {
            "NAME" => name = value.to_string(),
            "TYPE" if value != "TSP" => return Err(Error::UnsupportedFormat(format!("TYPE {value}"))),
            "DIMENSION" => {
                dimension = Some(value.parse().map_err(|_| Error::Malformed {
                    line: idx + 1,
                    detail: format!("bad DIMENSION `{value}`"),
                })?)
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EUC_2D" {
                    return Err(Error::UnsupportedFormat(format!("EDGE_WEIGHT_TYPE {value}")));
                }
                weight_type = Some(value.to_string());
            }
            _ => {}
        }
    }

    let mut coords = coords.ok_or_else(|| Error::Malformed {
        line: text.lines().count(),
        detail: "missing NODE_COORD_SECTION".into(),
    })?;
    let n = coords.len();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let bad = |detail: String| Error::Malformed { line: idx + 1, detail };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected `id x y`, got `{line}`")));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad node id `{}`", fields[0])))?;
        if id == 0 || id > n {
            return Err(bad(format!("node id {id} outside 1..={n}")));
        }
        let x = parse_integral(fields[1]).ok_or_else(|| bad(format!("non-integral coordinate `{}`", fields[1])))?;
        let y = parse_integral(fields[2]).ok_or_else(|| bad(format!("non-integral coordinate `{}`", fields[2])))?;
        if coords[id - 1].replace([x, y]).is_some() {
            return Err(bad(format!("duplicate node id {id}")));
        }
        seen += 1;
    }
    if seen != n {
        return Err(Error::Malformed {
            line: text.lines().count(),
            detail: format!("DIMENSION is {n} but {seen} coordinates were given"),
        });
    }
    let coords = coords.into_iter().map(|c| c.expect("all ids seen")).collect();
    TspInstance::new(name, coords)
}

fn parse_integral(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

/// Checks that `order` is a permutation of `0..n`.
pub fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    if order.len() != n {
        return Err(Error::NotAPermutation {
            n,
            detail: format!("length {}", order.len()),
        });
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::NotAPermutation {
                n,
                detail: format!("city {c} out of range or repeated"),
            });
        }
    }
    Ok(())
}

/// Total cost of the closed tour visiting `order`.
pub fn tour_cost(inst: &TspInstance, order: &[usize]) -> Result<i64> {
    check_permutation(inst.len(), order)?;
    Ok(cycle_cost(inst, order))
}

pub(crate) fn cycle_cost(inst: &TspInstance, order: &[usize]) -> i64 {
    let n = order.len();
    (0..n).map(|i| inst.cost(order[i], order[(i + 1) % n])).sum()
}

/// A Hamiltonian cycle together with its cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
    cost: i64,
}

impl Tour {
    pub fn new(inst: &TspInstance, order: Vec<usize>) -> Result<Self> {
        let cost = tour_cost(inst, &order)?;
        Ok(Self { order, cost })
    }

    pub(crate) fn from_parts_unchecked(order: Vec<usize>, cost: i64) -> Self {
        Self { order, cost }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn cost(&self) -> i64 {
        self.cost
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Recomputes the cost and checks the permutation.
    pub fn validate(&self, inst: &TspInstance) -> Result<()> {
        let actual = tour_cost(inst, &self.order)?;
        if actual != self.cost {
            return invalid(format!("cached cost {} differs from actual {}", self.cost, actual));
        }
        Ok(())
    }

    /// Sorted list of undirected edges; equal for tours that are the same cycle.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let n = self.order.len();
        let mut edges: Vec<(usize, usize)> = (0..n)
            .map(|i| {
                let (a, b) = (self.order[i], self.order[(i + 1) % n]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        edges
    }
}

/// Exact optimum by the Held-Karp subset recursion, for `n <= 20`.
pub fn held_karp_optimum(inst: &TspInstance) -> Result<i64> {
    let n = inst.len();
    if n > HELD_KARP_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: HELD_KARP_LIMIT,
        });
    }
    // City 0 is the fixed start; subsets range over cities 1..n.
    let m = n - 1;
    let full = 1usize << m;
    let mut dp = vec![i64::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = inst.cost(0, j + 1);
    }
    for mask in 1..full {
        for last in 0..m {
            let cur = dp[mask * m + last];
            if cur == i64::MAX || mask & (1 << last) == 0 {
                continue;
            }
            let mut rest = !mask & (full - 1);
            while rest != 0 {
                let next = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let slot = &mut dp[(mask | (1 << next)) * m + next];
                let cand = cur + inst.cost(last + 1, next + 1);
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }
    Ok((0..m)
        .map(|j| dp[(full - 1) * m + j] + inst.cost(j + 1, 0))
        .min()
        .expect("n >= 3"))
}
