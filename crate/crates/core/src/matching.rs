//! Maximum-weight bipartite matching with unmatched vertices allowed.
//!
//! Only pairs with strictly positive weight ever enter the matching. The
//! weights are clamped at zero and padded to a square cost matrix, which the
//! Hungarian method solves in `O(n^3)`. Among all optimal matchings the one
//! whose sorted pair list is lexicographically smallest is returned: with the
//! optimal dual potentials fixed, every optimum is a perfect matching of the
//! tight-edge subgraph, so rows are fixed one at a time to their smallest
//! reachable positive column by rotating alternating cycles in that subgraph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "weight matrix shape");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged weight matrix");
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Matched `(row, col)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowState {
    Free,
    Pinned,
    /// Fixed as unmatched: may only sit on zero-weight edges.
    Unmatched,
}

struct Solver<'a> {
    w: &'a WeightMatrix,
    n: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    eps: f64,
}

impl Solver<'_> {
    #[inline]
    fn positive(&self, i: usize, j: usize) -> bool {
        i < self.w.rows && j < self.w.cols && self.w.get(i, j) > 0.0
    }

    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        if self.positive(i, j) {
            -self.w.get(i, j)
        } else {
            0.0
        }
    }

    #[inline]
    fn tight(&self, i: usize, j: usize) -> bool {
        (self.cost(i, j) - self.u[i + 1] - self.v[j + 1]).abs() <= self.eps
    }

    /// Hungarian method (shortest augmenting paths with potentials). Returns
    /// the column assigned to each row.
    fn solve(&mut self) -> Vec<usize> {
        let n = self.n;
        // 1-based: index 0 is the virtual root column/row.
        let mut owner = vec![0usize; n + 1];
        let mut way = vec![0usize; n + 1];
        let mut minv = vec![0.0f64; n + 1];
        let mut used = vec![false; n + 1];
        for i in 1..=n {
            owner[0] = i;
            let mut j0 = 0usize;
            minv.fill(f64::INFINITY);
            used.fill(false);
            loop {
                used[j0] = true;
                let i0 = owner[j0];
                let ui0 = self.u[i0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if used[j] {
                        continue;
                    }
                    let cur = self.cost(i0 - 1, j - 1) - ui0 - self.v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        self.u[owner[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if owner[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                owner[j0] = owner[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        let mut assign = vec![0usize; n];
        for j in 1..=n {
            assign[owner[j] - 1] = j - 1;
        }
        assign
    }

    /// Rewrites `assign` into the lexicographically smallest optimum.
    fn canonicalize(&self, assign: &mut [usize]) {
        let n = self.n;
        let mut owner = vec![0usize; n];
        for (r, &c) in assign.iter().enumerate() {
            owner[c] = r;
        }
        let mut state = vec![RowState::Free; n];
        let mut releasable = vec![false; n];
        let mut next = vec![usize::MAX; n];
        let mut queue = VecDeque::new();

        for i in 0..self.w.rows {
            let cur = assign[i];
            let cur_positive = self.positive(i, cur);
            let limit = if cur_positive { cur } else { self.w.cols };
            let has_candidate = (0..limit).any(|j| self.positive(i, j) && self.tight(i, j));
            if !has_candidate {
                state[i] = if cur_positive {
                    RowState::Pinned
                } else {
                    RowState::Unmatched
                };
                continue;
            }

            // Columns whose owner can shift along tight edges, ending in `cur`.
            releasable.fill(false);
            releasable[cur] = true;
            queue.clear();
            queue.push_back(cur);
            while let Some(c) = queue.pop_front() {
                for r in 0..n {
                    let rc = assign[r];
                    if r == i || releasable[rc] || !self.tight(r, c) {
                        continue;
                    }
                    let allowed = match state[r] {
                        RowState::Free => true,
                        RowState::Pinned => false,
                        RowState::Unmatched => !self.positive(r, c),
                    };
                    if allowed {
                        releasable[rc] = true;
                        next[r] = c;
                        queue.push_back(rc);
                    }
                }
            }

            let target =
                (0..limit).find(|&j| self.positive(i, j) && self.tight(i, j) && releasable[j]);
            match target {
                Some(j) => {
                    let mut chain = Vec::new();
                    let mut r = owner[j];
                    loop {
                        chain.push(r);
                        let c = next[r];
                        if c == cur {
                            break;
                        }
                        r = owner[c];
                    }
                    assign[i] = j;
                    owner[j] = i;
                    for r in chain {
                        let c = next[r];
                        assign[r] = c;
                        owner[c] = r;
                    }
                    state[i] = RowState::Pinned;
                }
                None => {
                    state[i] = if cur_positive {
                        RowState::Pinned
                    } else {
                        RowState::Unmatched
                    };
                }
            }
        }
    }
}

/// Maximum-weight matching of a `rows x cols` weight matrix. Non-positive
/// weights never contribute; ties resolve to the lexicographically smallest
/// sorted pair list.
///
/// # Panics
/// If any weight is not finite.
pub fn max_weight_matching(weights: &WeightMatrix) -> Matching {
    assert!(
        weights.data.iter().all(|w| w.is_finite()),
        "weights must be finite"
    );
    let n = weights.rows.max(weights.cols);
    if n == 0 {
        return Matching {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let scale = weights.data.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let mut solver = Solver {
        w: weights,
        n,
        u: vec![0.0; n + 1],
        v: vec![0.0; n + 1],
        eps: 1e-9 * (1.0 + scale),
    };
    let mut assign = solver.solve();
    solver.canonicalize(&mut assign);

    let pairs: Vec<(usize, usize)> = (0..weights.rows)
        .filter(|&i| solver.positive(i, assign[i]))
        .map(|i| (i, assign[i]))
        .collect();
    let total = pairs.iter().map(|&(i, j)| weights.get(i, j)).sum();
    Matching { pairs, total }
}
