//! Householder QR for the tall, thin least-squares problems in [`crate::regress`].
//!
//! Matrices are column-major: element `(i, j)` of an `n × p` matrix lives at
//! `j * n + i`.

/// Thin QR factorisation `X = Q R` of an `n × p` matrix with `n ≥ p`.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    p: usize,
    /// Upper triangle holds R (column-major, `n × p` storage).
    packed: Vec<f64>,
    /// Householder vectors, `v[k]` has length `n - k` and unit norm.
    reflectors: Vec<Vec<f64>>,
}

impl Qr {
    pub fn new(a: &[f64], n: usize, p: usize) -> Qr {
        assert_eq!(a.len(), n * p, "matrix storage does not match shape");
        assert!(n >= p, "QR needs at least as many rows as columns");
        let mut m = a.to_vec();
        let mut reflectors = Vec::with_capacity(p);
        for k in 0..p {
            let col = &m[k * n + k..(k + 1) * n];
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut v = col.to_vec();
            if norm == 0.0 {
                reflectors.push(vec![0.0; n - k]);
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                v.iter_mut().for_each(|x| *x /= vnorm);
            }
            // column k becomes (alpha, 0, ..., 0)
            m[k * n + k] = alpha;
            for i in k + 1..n {
                m[k * n + i] = 0.0;
            }
            for j in k + 1..p {
                let colj = &mut m[j * n + k..(j + 1) * n];
                reflect(&v, colj);
            }
            reflectors.push(v);
        }
        Qr {
            n,
            p,
            packed: m,
            reflectors,
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    /// `R[i][j]` for `i ≤ j`, zero below the diagonal.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.packed[j * self.n + i]
        }
    }

    /// Overwrites `y` with `Qᵀ y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.n);
        for (k, v) in self.reflectors.iter().enumerate() {
            reflect(v, &mut y[k..]);
        }
    }

    /// Least-squares solution of `X b ≈ y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        self.back_substitute(&qty[..self.p])
    }

    fn back_substitute(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut b = rhs.to_vec();
        for i in (0..p).rev() {
            let mut s = b[i];
            for j in i + 1..p {
                s -= self.r(i, j) * b[j];
            }
            b[i] = s / self.r(i, i);
        }
        b
    }

    /// `R⁻¹` as a dense row-major `p × p` matrix (upper triangular).
    pub fn r_inverse(&self) -> Vec<Vec<f64>> {
        let p = self.p;
        let mut inv = vec![vec![0.0; p]; p];
        for col in 0..p {
            let mut e = vec![0.0; p];
            e[col] = 1.0;
            let x = self.back_substitute(&e);
            for row in 0..p {
                inv[row][col] = x[row];
            }
        }
        inv
    }

    /// Reciprocal 1-norm condition number of R (equivalently of X up to the
    /// norm choice). Zero when R has a zero pivot.
    pub fn rcond(&self) -> f64 {
        let p = self.p;
        if (0..p).any(|i| self.r(i, i) == 0.0 || !self.r(i, i).is_finite()) {
            return 0.0;
        }
        let norm_r = (0..p)
            .map(|j| (0..=j).map(|i| self.r(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let inv = self.r_inverse();
        let norm_inv = (0..p)
            .map(|j| (0..p).map(|i| inv[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if !norm_inv.is_finite() || norm_r == 0.0 {
            return 0.0;
        }
        1.0 / (norm_r * norm_inv)
    }
}

/// Applies `I - 2 v vᵀ` (with `‖v‖ = 1`) to `x` in place.
fn reflect(v: &[f64], x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = 2.0 * dot;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            out[i][j] = (0..k).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}
