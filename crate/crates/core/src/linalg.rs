//! Small dense linear algebra on row-major `Vec<f64>` storage.
//!
//! Problem sizes never exceed a few dozen unknowns, so plain Gaussian
//! elimination with partial pivoting is both adequate and deterministic.

use alloc::vec;
use alloc::vec::Vec;

/// Relative pivot threshold below which a column is treated as dependent.
pub const PIVOT_EPS: f64 = 1e-11;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a += s * b`.
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Solve the square system `a x = b` (`a` is `n × n`, row-major).
///
/// Returns `None` when a pivot falls below `PIVOT_EPS` times the largest
/// entry of `a`.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[pivot_row * n + col].abs() <= PIVOT_EPS * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Numerical rank of a set of row vectors of length `n`.
pub fn rank(rows: &[&[f64]], n: usize) -> usize {
    let r = rows.len();
    if r == 0 {
        return 0;
    }
    let mut m: Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
    let scale = m.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for col in 0..n {
        if rank == r {
            break;
        }
        let Some(pivot_row) = (rank..r)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
        else {
            break;
        };
        if m[pivot_row * n + col].abs() <= PIVOT_EPS * scale * 10.0 {
            continue;
        }
        for k in 0..n {
            m.swap(rank * n + k, pivot_row * n + k);
        }
        let p = m[rank * n + col];
        for row in rank + 1..r {
            let f = m[row * n + col] / p;
            for k in col..n {
                m[row * n + k] -= f * m[rank * n + k];
            }
        }
        rank += 1;
    }
    rank
}

/// Whether the given rows are linearly independent.
pub fn independent(rows: &[&[f64]], n: usize) -> bool {
    rows.len() <= n && rank(rows, n) == rows.len()
}

/// Gram matrix `G_ij = ⟨r_i, r_j⟩` in row-major order.
pub fn gram(rows: &[&[f64]]) -> Vec<f64> {
    let k = rows.len();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v = dot(rows[i], rows[j]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    g
}

/// A unit vector spanning the null space of `n - 1` independent rows of
/// length `n`, or `None` if the rows do not have rank `n - 1`.
pub fn null_vector(rows: &[&[f64]], n: usize) -> Option<Vec<f64>> {
    if rows.len() + 1 != n {
        return None;
    }
    if n == 1 {
        return Some(vec![1.0]);
    }
    // Pin each coordinate to 1 in turn and solve for the rest; keep the best
    // conditioned attempt.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for free in 0..n {
        let mut a = Vec::with_capacity((n - 1) * (n - 1));
        let mut b = Vec::with_capacity(n - 1);
        for row in rows {
            for (j, v) in row.iter().enumerate() {
                if j != free {
                    a.push(*v);
                }
            }
            b.push(-row[free]);
        }
        if let Some(sol) = solve(&a, &b, n - 1) {
            let mut v = Vec::with_capacity(n);
            let mut it = sol.into_iter();
            for j in 0..n {
                v.push(if j == free { 1.0 } else { it.next().unwrap() });
            }
            let len = norm(&v);
            if best.as_ref().is_none_or(|(l, _)| len < *l) {
                best = Some((len, v));
            }
        }
    }
    best.map(|(len, v)| v.into_iter().map(|x| x / len).collect())
}

/// Iterate over all `k`-element subsets of `0..m` in lexicographic order.
pub fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}
