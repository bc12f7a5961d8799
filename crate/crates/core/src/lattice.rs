//! Recombining binomial lattice for the CIR variance with multiple-jump
//! node matching.
//!
//! Row `n` holds the `n + 1` values
//! `v(n,k) = (√V₀ + (σ/2)(2k - n)√h)²`, floored at zero when the bracket is
//! negative. From node `(n, k)` the chain moves to the highest node of row
//! `n + 1` not above `v + μ_V(v) h` (down) or to the lowest node not below it
//! (up), with the up probability chosen to match the local drift.

use crate::error::{invalid, Error, Result};
use crate::model::HestonParams;

/// Successors and transition probabilities of one lattice node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMatch {
    pub k_down: usize,
    pub k_up: usize,
    pub p_up: f64,
    pub p_down: f64,
}

/// Variance lattice together with its (option independent) node matches.
#[derive(Debug, Clone)]
pub struct VolLattice {
    h: f64,
    n_steps: usize,
    rows: Vec<Vec<f64>>,
    matches: Vec<Vec<NodeMatch>>,
}

impl VolLattice {
    /// Builds the lattice on `n_steps` steps of length `h` and precomputes
    /// every node match.
    pub fn build(params: &HestonParams, h: f64, n_steps: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("time step must be positive, got {h}")));
        }
        if n_steps < 1 {
            return Err(invalid("n_steps", "need at least one time step"));
        }
        let sqrt_v0 = params.v0.sqrt();
        let half_step = 0.5 * params.sigma * h.sqrt();
        let rows: Vec<Vec<f64>> = (0..=n_steps)
            .map(|n| {
                (0..=n)
                    .map(|k| {
                        let x = sqrt_v0 + half_step * (2.0 * k as f64 - n as f64);
                        if x > 0.0 {
                            x * x
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let mut lattice = VolLattice {
            h,
            n_steps,
            rows,
            matches: Vec::new(),
        };
        let mut matches = Vec::with_capacity(n_steps);
        for n in 0..n_steps {
            let row = (0..=n)
                .map(|k| lattice.match_node(n, k, |v| params.mu_v(v)))
                .collect::<Result<Vec<_>>>()?;
            matches.push(row);
        }
        lattice.matches = matches;
        Ok(lattice)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }

    pub fn value(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k]
    }

    /// Every variance value in the lattice, row by row.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().flat_map(|r| r.iter().copied())
    }

    /// Cached match of node `(n, k)`, `n < n_steps`.
    pub fn node_match(&self, n: usize, k: usize) -> &NodeMatch {
        &self.matches[n][k]
    }

    /// Locates the successors of node `(n, k)` in row `n + 1` for the given
    /// variance drift. Ties admit the node, as the defining inequalities are
    /// not strict.
    pub fn match_node(&self, n: usize, k: usize, mu_v: impl Fn(f64) -> f64) -> Result<NodeMatch> {
        if n >= self.n_steps || k > n {
            return Err(Error::NodeOutOfRange {
                n,
                k,
                n_steps: self.n_steps,
            });
        }
        let v = self.rows[n][k];
        let next = &self.rows[n + 1];
        let target = v + mu_v(v) * self.h;

        // Rows are nondecreasing, so both searches are partition points.
        // k_d: largest k* in [0, k] with next[k*] <= target.
        let below = next[..=k].partition_point(|&x| x <= target);
        let k_down = below.saturating_sub(1);
        // k_u: smallest k* in [k + 1, n + 1] with next[k*] >= target.
        let k_up = k + 1 + next[k + 1..].partition_point(|&x| x < target);
        let k_up = k_up.min(n + 1);

        let lo = next[k_down];
        let hi = next[k_up];
        if hi == lo {
            return Err(Error::DegenerateLattice { n, k });
        }
        let p_up = ((target - lo) / (hi - lo)).clamp(0.0, 1.0);
        Ok(NodeMatch {
            k_down,
            k_up,
            p_up,
            p_down: 1.0 - p_up,
        })
    }

    /// `E[V(n+1)] - v(n,k)` under the chain.
    pub fn local_mean_increment(&self, n: usize, k: usize) -> f64 {
        let m = &self.matches[n][k];
        let next = &self.rows[n + 1];
        m.p_up * next[m.k_up] + m.p_down * next[m.k_down] - self.rows[n][k]
    }
}

/// Distinct variances of a lattice with `n_steps` steps of `h`, ascending.
/// Every row value is `(√V₀ + (σ/2) m √h)²` floored at zero for some
/// `|m| ≤ n_steps`.
pub fn reachable_variances(params: &HestonParams, h: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps as i64;
    let half_step = 0.5 * params.sigma * h.sqrt();
    let mut vs: Vec<f64> = (-n..=n)
        .map(|m| {
            let x = params.v0.sqrt() + half_step * m as f64;
            if x > 0.0 {
                x * x
            } else {
                0.0
            }
        })
        .collect();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    vs
}
