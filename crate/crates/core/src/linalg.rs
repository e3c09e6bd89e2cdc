//! Small dense helpers for the n ≤ 4 matrices used by the lattices here.
//!
//! Matrices are row-major `Vec`s. Points are row vectors, so a point with
//! coefficients `c` in a basis `G` is `c · G`.

use serde::{Deserialize, Serialize};

pub(crate) fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Row vector times matrix.
pub(crate) fn vec_mat(v: &[f64], m: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    vec_mat_into(v, m, n, &mut out);
    out
}

pub(crate) fn vec_mat_into(v: &[f64], m: &[f64], n: usize, out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for (k, &vk) in v.iter().enumerate().take(n) {
        if vk == 0.0 {
            continue;
        }
        let row = &m[k * n..(k + 1) * n];
        for (o, &r) in out.iter_mut().zip(row) {
            *o += vk * r;
        }
    }
}

pub(crate) fn int_vec_mat(v: &[i64], m: &[f64], n: usize) -> Vec<f64> {
    let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
    vec_mat(&vf, m, n)
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Jordan inverse with partial pivoting. `None` if singular.
pub(crate) fn invert(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().partial_cmp(&a[y * n + col].abs()).unwrap())?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let p = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row * n + j] -= f * a[col * n + j];
                inv[row * n + j] -= f * inv[col * n + j];
            }
        }
    }
    Some(inv)
}

pub(crate) fn determinant(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().partial_cmp(&a[y * n + col].abs()).unwrap())
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

/// Solves `x · A = b` for a row vector `x`, i.e. `Aᵀ xᵀ = bᵀ`.
pub(crate) fn solve_row(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let inv = invert(a, n)?;
    Some(vec_mat(b, &inv, n))
}

/// Square integer matrix, row-major. Used for sublattice bases expressed in
/// the coordinates of a finer lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<i64>) -> Self {
        assert_eq!(entries.len(), n * n, "IntMatrix needs n*n entries");
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1)
    }

    pub fn scalar(n: usize, m: i64) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = m;
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    /// `Some(m)` when the matrix is `m·I`.
    pub fn as_scalar(&self) -> Option<i64> {
        let m = self.get(0, 0);
        for i in 0..self.n {
            for j in 0..self.n {
                let want = if i == j { m } else { 0 };
                if self.get(i, j) != want {
                    return None;
                }
            }
        }
        Some(m)
    }

    pub fn scaled(&self, k: i64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|&e| e * k).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&e| e as f64).collect()
    }

    pub fn determinant(&self) -> i64 {
        let wide: Vec<i128> = self.entries.iter().map(|&e| e as i128).collect();
        det_i128(&wide, self.n) as i64
    }

    /// Classical adjugate, so that `M · adj(M) = det(M) · I`.
    pub fn adjugate(&self) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return IntMatrix::new(1, vec![1]);
        }
        let wide: Vec<i128> = self.entries.iter().map(|&e| e as i128).collect();
        let mut adj = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let minor = minor_i128(&wide, n, i, j);
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // transpose of the cofactor matrix
                adj[j * n + i] = (sign * det_i128(&minor, n - 1)) as i64;
            }
        }
        IntMatrix::new(n, adj)
    }

    /// Row vector times this matrix.
    pub fn left_mul(&self, v: &[i64]) -> Vec<i64> {
        let n = self.n;
        let mut out = vec![0i64; n];
        for (k, &vk) in v.iter().enumerate() {
            if vk == 0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += vk * self.entries[k * n + j];
            }
        }
        out
    }
}

fn minor_i128(m: &[i128], n: usize, skip_r: usize, skip_c: usize) -> Vec<i128> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in 0..n {
        if i == skip_r {
            continue;
        }
        for j in 0..n {
            if j == skip_c {
                continue;
            }
            out.push(m[i * n + j]);
        }
    }
    out
}

fn det_i128(m: &[i128], n: usize) -> i128 {
    match n {
        0 => 1,
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[j] * det_i128(&minor_i128(m, n, 0, j), n - 1)
            })
            .sum(),
    }
}

/// Floor division for signed integers.
pub(crate) fn div_floor(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if (a % b != 0) && (a < 0) {
        q - 1
    } else {
        q
    }
}
