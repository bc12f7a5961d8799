//! Dense brute-force reference for the backward induction, written from the
//! defining formulas without sharing code with the library's kernels.

#![allow(dead_code)]

use hybrid_heston::{ExerciseStyle, HestonParams, OptionKind, OptionSpec, YGrid};

pub fn table1(sigma: f64) -> HestonParams {
    HestonParams::new(2.0, 0.1, sigma, -0.5, 1.1f64.ln(), 0.0, 100.0, 0.1).unwrap()
}

pub fn table4(s0: f64) -> HestonParams {
    HestonParams::new(5.0, 0.16, 0.9, 0.1, 0.1, 0.0, s0, 0.25).unwrap()
}

pub fn barrier_params(s0: f64, sigma: f64) -> HestonParams {
    HestonParams::new(2.0, 0.1, sigma, -0.5, 0.03, 0.05, s0, 0.1).unwrap()
}

pub fn lattice_value(p: &HestonParams, h: f64, n: usize, k: usize) -> f64 {
    let x = p.v0.sqrt() + 0.5 * p.sigma * (2.0 * k as f64 - n as f64) * h.sqrt();
    if x > 0.0 {
        x * x
    } else {
        0.0
    }
}

/// `(k_d, k_u, p_u)` by linear scan.
pub fn successors(p: &HestonParams, h: f64, n: usize, k: usize) -> (usize, usize, f64) {
    let v = lattice_value(p, h, n, k);
    let t = v + p.kappa * (p.theta - v) * h;
    let next = |j| lattice_value(p, h, n + 1, j);
    let kd = (0..=k).rev().find(|&j| t >= next(j)).unwrap_or(0);
    let ku = (k + 1..=n + 1).find(|&j| t <= next(j)).unwrap_or(n + 1);
    let pu = ((t - next(kd)) / (next(ku) - next(kd))).clamp(0.0, 1.0);
    (kd, ku, pu)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for x in m[c].iter_mut() {
            *x /= d;
        }
        let pivot_row = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[c];
            if r != c && f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Dense one-step kernel at variance `v`: `A⁻¹` above `eps`, `C` otherwise.
/// Neumann rows.
pub fn kernel(p: &HestonParams, v: f64, h: f64, dy: f64, size: usize, eps: f64) -> Vec<Vec<f64>> {
    let mu = p.r - p.delta - v / 2.0 - p.rho / p.sigma * p.kappa * (p.theta - v);
    let al = h * mu / (2.0 * dy);
    let be = h * (1.0 - p.rho * p.rho) * v / (2.0 * dy * dy);
    let mut a = vec![vec![0.0; size]; size];
    if v > eps {
        for i in 0..size {
            a[i][i] = 1.0 + 2.0 * be;
            if i > 0 {
                a[i][i - 1] = al - be;
            }
            if i + 1 < size {
                a[i][i + 1] = -al - be;
            }
        }
        a[0][1] = -2.0 * be;
        a[size - 1][size - 2] = -2.0 * be;
        invert(&a)
    } else {
        let up = be + if al > 0.0 { 2.0 * al } else { 0.0 };
        let down = be + if al < 0.0 { -2.0 * al } else { 0.0 };
        let d = 1.0 - 2.0 * be - 2.0 * al.abs();
        for i in 0..size {
            a[i][i] = d;
            if i > 0 {
                a[i][i - 1] = down;
            }
            if i + 1 < size {
                a[i][i + 1] = up;
            }
        }
        a[0][1] = 1.0 - d;
        a[size - 1][size - 2] = 1.0 - d;
        a
    }
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn intrinsic(p: &HestonParams, spec: &OptionSpec, y: f64, v: f64) -> f64 {
    let s = (y + p.rho / p.sigma * v).exp();
    match spec.kind {
        OptionKind::Put => (spec.strike - s).max(0.0),
        OptionKind::Call => (s - spec.strike).max(0.0),
    }
}

/// Value vector at node `(n, k)` by recursion over both successors, with no
/// recombination: every path of the tree is visited. Each successor is
/// propagated separately before mixing.
fn node_values(p: &HestonParams, spec: &OptionSpec, grid: &YGrid, n_time: usize, n: usize, k: usize) -> Vec<f64> {
    let h = spec.maturity / n_time as f64;
    let v = lattice_value(p, h, n, k);
    let ys: Vec<f64> = (0..grid.len()).map(|i| grid.y0 + (i as f64 - grid.m as f64) * grid.dy).collect();
    if n == n_time {
        return ys.iter().map(|&y| intrinsic(p, spec, y, v)).collect();
    }
    let (kd, ku, pu) = successors(p, h, n, k);
    let pi = kernel(p, v, h, grid.dy, grid.len(), grid.eps);
    let up = matvec(&pi, &node_values(p, spec, grid, n_time, n + 1, ku));
    let down = matvec(&pi, &node_values(p, spec, grid, n_time, n + 1, kd));
    let disc = (-p.r * h).exp();
    (0..grid.len())
        .map(|i| {
            let cont = disc * (pu * up[i] + (1.0 - pu) * down[i]);
            match spec.style {
                ExerciseStyle::European => cont,
                ExerciseStyle::American => cont.max(intrinsic(p, spec, ys[i], v)),
            }
        })
        .collect()
}

pub fn brute_force_price(p: &HestonParams, spec: &OptionSpec, grid: &YGrid, n_time: usize) -> f64 {
    node_values(p, spec, grid, n_time, 0, 0)[grid.m]
}
