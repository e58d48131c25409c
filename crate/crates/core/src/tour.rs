//! Tour optimization over (possibly asymmetric) cost matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TourError {
    #[error("no finite tour exists")]
    Infeasible,
    #[error("exhaustive search supports at most {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid cost matrix: {0}")]
    InvalidMatrix(String),
}

/// Square matrix of travel costs; `f64::INFINITY` marks infeasible pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, TourError> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(if i == j { 0.0 } else { f(i, j) });
            }
        }
        Self::from_rows(n, data)
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self, TourError> {
        if data.len() != n * n {
            return Err(TourError::InvalidMatrix(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if v.is_nan() || v < 0.0 {
                    return Err(TourError::InvalidMatrix(format!("entry ({i},{j}) = {v}")));
                }
                if i == j && v != 0.0 {
                    return Err(TourError::InvalidMatrix(format!("non-zero diagonal at {i}")));
                }
            }
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Cost of visiting `order`; closes the loop when `closed`.
    pub fn tour_cost(&self, order: &[usize], closed: bool) -> f64 {
        let mut c: f64 = order.windows(2).map(|w| self.get(w[0], w[1])).sum();
        if closed && order.len() > 1 {
            c += self.get(order[order.len() - 1], order[0]);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Matrix with infinite entries replaced by a penalty larger than any finite tour.
struct Work {
    n: usize,
    c: Vec<f64>,
    symmetric: bool,
}

impl Work {
    fn new(m: &CostMatrix) -> Self {
        let finite_sum: f64 = m.data.iter().filter(|v| v.is_finite()).sum();
        let penalty = 1e6 * (1.0 + finite_sum);
        let c = m
            .data
            .iter()
            .map(|&v| if v.is_finite() { v } else { penalty })
            .collect();
        Self {
            n: m.n,
            c,
            symmetric: m.is_symmetric(),
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    fn cost(&self, t: &[usize]) -> f64 {
        let n = t.len();
        (0..n).map(|i| self.get(t[i], t[(i + 1) % n])).sum()
    }
}

fn nearest_neighbor(w: &Work, start: usize) -> Vec<usize> {
    let mut visited = vec![false; w.n];
    let mut order = vec![start];
    visited[start] = true;
    let mut cur = start;
    for _ in 1..w.n {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..w.n {
            if !visited[j] && w.get(cur, j) < best.0 {
                best = (w.get(cur, j), j);
            }
        }
        visited[best.1] = true;
        order.push(best.1);
        cur = best.1;
    }
    order
}

fn improves(delta: f64, scale: f64) -> bool {
    delta < -1e-10 * (1.0 + scale.abs())
}

/// One first-improvement 2-opt sweep; `true` if the tour changed.
fn two_opt_pass(w: &Work, t: &mut [usize]) -> bool {
    let n = t.len();
    if n < 4 {
        return false;
    }
    let total = w.cost(t);
    for i in 0..n - 1 {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b, c, d) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
            let mut delta = w.get(a, c) + w.get(b, d) - w.get(a, b) - w.get(c, d);
            if !w.symmetric {
                // reversed inner segment runs in the opposite direction
                for k in i + 1..j {
                    delta += w.get(t[k + 1], t[k]) - w.get(t[k], t[k + 1]);
                }
            }
            if improves(delta, total) {
                t[i + 1..=j].reverse();
                return true;
            }
        }
    }
    false
}

/// One Or-opt sweep: move a chain of 1..=3 nodes (optionally reversed) elsewhere.
fn or_opt_pass(w: &Work, t: &mut Vec<usize>) -> bool {
    let n = t.len();
    if n < 4 {
        return false;
    }
    let total = w.cost(t);
    for len in 1..=3.min(n - 2) {
        for start in 0..n {
            // segment occupies positions start..start+len (cyclic)
            let seg: Vec<usize> = (0..len).map(|k| t[(start + k) % n]).collect();
            let prev = t[(start + n - 1) % n];
            let next = t[(start + len) % n];
            let seg_fwd: f64 = seg.windows(2).map(|p| w.get(p[0], p[1])).sum();
            let seg_rev: f64 = seg.windows(2).map(|p| w.get(p[1], p[0])).sum();
            let removed = w.get(prev, seg[0]) + seg_fwd + w.get(seg[len - 1], next);
            let gain_close = w.get(prev, next);
            // remaining cycle, starting right after the segment
            let rest: Vec<usize> = (0..n - len).map(|k| t[(start + len + k) % n]).collect();
            for p in 0..rest.len() {
                let (x, y) = (rest[p], rest[(p + 1) % rest.len()]);
                if x == prev && y == next {
                    continue;
                }
                let base = gain_close - removed - w.get(x, y);
                let fwd = base + w.get(x, seg[0]) + seg_fwd + w.get(seg[len - 1], y);
                let rev = base + w.get(x, seg[len - 1]) + seg_rev + w.get(seg[0], y);
                let (delta, reversed) = if rev < fwd { (rev, true) } else { (fwd, false) };
                if improves(delta, total) {
                    let mut chain = seg.clone();
                    if reversed {
                        chain.reverse();
                    }
                    let mut out = Vec::with_capacity(n);
                    for (q, &node) in rest.iter().enumerate() {
                        out.push(node);
                        if q == p {
                            out.extend_from_slice(&chain);
                        }
                    }
                    *t = out;
                    return true;
                }
            }
        }
    }
    false
}

fn local_search(w: &Work, t: &mut Vec<usize>) {
    loop {
        if two_opt_pass(w, t) {
            continue;
        }
        if or_opt_pass(w, t) {
            continue;
        }
        break;
    }
}

fn rotate_to(order: &mut [usize], node: usize) {
    if let Some(p) = order.iter().position(|&x| x == node) {
        order.rotate_left(p);
    }
}

/// Closed-tour heuristic: nearest-neighbour construction from several
/// seeded starts, each polished by 2-opt and Or-opt. Returns the tour
/// rotated to begin at node 0.
fn solve_closed(m: &CostMatrix, restarts: usize, seed: u64) -> Result<Tour, TourError> {
    let n = m.len();
    if n == 0 {
        return Err(TourError::InvalidMatrix("empty matrix".into()));
    }
    if n == 1 {
        return Ok(Tour {
            order: vec![0],
            cost: 0.0,
        });
    }
    let w = Work::new(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<usize> = (0..n).collect();
    starts[1..].shuffle(&mut rng);
    let mut best: Option<Tour> = None;
    for r in 0..restarts.max(1) {
        let mut t = nearest_neighbor(&w, starts[r % n]);
        if r >= n {
            // beyond one start per node, restart from a random order
            t.shuffle(&mut rng);
        }
        local_search(&w, &mut t);
        rotate_to(&mut t, 0);
        let cost = m.tour_cost(&t, true);
        let better = match &best {
            None => true,
            Some(b) => cost < b.cost,
        };
        if better {
            best = Some(Tour { order: t, cost });
        }
    }
    let best = best.expect("at least one restart");
    if !best.cost.is_finite() {
        return Err(TourError::Infeasible);
    }
    Ok(best)
}

/// Nearest-neighbour construction cost from node 0 (no improvement).
pub fn nearest_neighbor_tour(m: &CostMatrix, closed: bool) -> Tour {
    let w = Work::new(m);
    let order = if m.is_empty() { vec![] } else { nearest_neighbor(&w, 0) };
    let cost = m.tour_cost(&order, closed);
    Tour { order, cost }
}

/// Open path that may start anywhere, via a zero-cost virtual depot.
fn with_depot(m: &CostMatrix, start: Option<usize>) -> CostMatrix {
    let n = m.len();
    CostMatrix::from_fn(n + 1, |i, j| {
        if i == n {
            match start {
                Some(s) if j != s => f64::INFINITY,
                _ => 0.0,
            }
        } else if j == n {
            0.0
        } else {
            m.get(i, j)
        }
    })
    .expect("derived from a valid matrix")
}

fn strip_depot(t: Tour, depot: usize, m: &CostMatrix) -> Result<Tour, TourError> {
    let mut order = t.order;
    rotate_to(&mut order, depot);
    order.remove(0);
    let cost = m.tour_cost(&order, false);
    if !cost.is_finite() {
        return Err(TourError::Infeasible);
    }
    Ok(Tour { order, cost })
}

/// Heuristic tour over all nodes. Closed tours start at node 0; open tours
/// start wherever is cheapest. Deterministic given `seed`.
pub fn solve_tour(m: &CostMatrix, closed: bool, restarts: usize, seed: u64) -> Result<Tour, TourError> {
    if closed || m.len() <= 1 {
        return solve_closed(m, restarts, seed);
    }
    let aug = with_depot(m, None);
    strip_depot(solve_closed(&aug, restarts, seed)?, m.len(), m)
}

/// Heuristic open path over all nodes beginning at `start`.
pub fn solve_path_from(m: &CostMatrix, start: usize, restarts: usize, seed: u64) -> Result<Tour, TourError> {
    if m.len() <= 1 {
        return solve_closed(m, restarts, seed);
    }
    let aug = with_depot(m, Some(start));
    strip_depot(solve_closed(&aug, restarts, seed)?, m.len(), m)
}

/// Largest instance accepted by the exhaustive solvers.
pub const BRUTE_FORCE_MAX: usize = 10;

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn enumerate(m: &CostMatrix, prefix: &[usize], mut rest: Vec<usize>, closed: bool) -> Result<Tour, TourError> {
    rest.sort_unstable();
    let mut best: Option<Tour> = None;
    let mut order: Vec<usize> = prefix.to_vec();
    loop {
        order.truncate(prefix.len());
        order.extend_from_slice(&rest);
        let c = m.tour_cost(&order, closed);
        let better = match &best {
            None => c.is_finite(),
            Some(b) => c < b.cost - 1e-12 * (1.0 + b.cost.abs()),
        };
        if better {
            best = Some(Tour {
                order: order.clone(),
                cost: c,
            });
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    best.ok_or(TourError::Infeasible)
}

/// Exact optimum by permutation enumeration (n <= 10). Closed tours are
/// anchored at node 0; ties resolve to the lexicographically smallest order.
pub fn brute_force_tour(m: &CostMatrix, closed: bool) -> Result<Tour, TourError> {
    let n = m.len();
    if n > BRUTE_FORCE_MAX {
        return Err(TourError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    if n == 0 {
        return Err(TourError::InvalidMatrix("empty matrix".into()));
    }
    if closed {
        enumerate(m, &[0], (1..n).collect(), true)
    } else {
        enumerate(m, &[], (0..n).collect(), false)
    }
}

/// Exact open path starting at `start`.
pub fn brute_force_path_from(m: &CostMatrix, start: usize) -> Result<Tour, TourError> {
    let n = m.len();
    if n > BRUTE_FORCE_MAX {
        return Err(TourError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    enumerate(m, &[start], (0..n).filter(|&i| i != start).collect(), false)
}
