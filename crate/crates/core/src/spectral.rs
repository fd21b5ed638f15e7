//! Eigenvalues and singular values of small dense float matrices.
//!
//! General eigenvalues: balancing, Householder reduction to upper Hessenberg
//! form, then the Francis double-shift QR iteration with deflation.
//! Singular values: cyclic Jacobi on the symmetric matrix `A A^T`.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Total QR sweeps allowed across all deflations.
pub const QR_ITERATION_CAP: usize = 10_000;

const JACOBI_SWEEP_CAP: usize = 100;

impl Matrix<f64> {
    /// All eigenvalues with algebraic multiplicity, sorted by real part and
    /// then imaginary part.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let n = self.rows();
        // 1-based working copy keeps the QR sweep close to its textbook form.
        let mut a = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            for j in 0..n {
                a[i + 1][j + 1] = self[(i, j)];
            }
        }
        balance(&mut a, n);
        reduce_to_hessenberg(&mut a, n);
        let mut values = hessenberg_qr(&mut a, n)?;
        sort_complex(&mut values);
        Ok(values)
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let gram = self.multiply(&self.transpose())?;
        let mut values: Vec<f64> = symmetric_eigenvalues(&gram)?
            .into_iter()
            .map(|v| {
                if v < 0.0 && v > -1e-12 * gram.norm_inf().max(1.0) {
                    0.0
                } else {
                    v.max(0.0)
                }
                .sqrt()
            })
            .collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &Matrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut a = m.to_rows();
    let total: f64 = a.iter().flatten().map(|v| v * v).sum();
    let target = 1e-30 * total.max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_SWEEP_CAP {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= target {
            let mut values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
            values.sort_by(f64::total_cmp);
            return Ok(values);
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi eigenvalue sweep",
        iterations: JACOBI_SWEEP_CAP,
    })
}

pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Largest distance between paired elements after greedily pairing each
/// element of `a` with its nearest unused element of `b`. Returns `None` when
/// the multisets differ in size.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// Diagonal similarity scaling by powers of two so row and column norms are
/// comparable; exact in binary floating point.
fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 1..=n {
                    a[i][j] *= inv;
                }
                for j in 1..=n {
                    a[j][i] *= f;
                }
            }
        }
    }
}

/// Orthogonal similarity to upper Hessenberg form (Householder reflections).
fn reduce_to_hessenberg(a: &mut [Vec<f64>], n: usize) {
    if n < 3 {
        return;
    }
    for k in 1..=n - 2 {
        let norm: f64 = (k + 1..=n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..=n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        // A <- H A
        for j in 1..=n {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt * a[k + 1 + t][j])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[k + 1 + t][j] -= 2.0 * vt * dot;
            }
        }
        // A <- A H
        for row in a.iter_mut().take(n + 1).skip(1) {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt * row[k + 1 + t])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                row[k + 1 + t] -= 2.0 * vt * dot;
            }
        }
        a[k + 1][k] = alpha;
        for i in k + 2..=n {
            a[i][k] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based storage).
/// The matrix is destroyed.
fn hessenberg_qr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut shift_total = 0.0;
    let mut total_its = 0usize;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + shift_total;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift_total;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if total_its >= QR_ITERATION_CAP {
                return Err(Error::NoConvergence {
                    what: "Hessenberg QR",
                    iterations: total_its,
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                shift_total += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            // double QR step on rows l..nn, columns m..nn
            for k in m..nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nn - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k][k - 1] = -a[k][k - 1];
                    }
                } else {
                    a[k][k - 1] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    let mut pp = a[k][j] + q * a[k + 1][j];
                    if k != nn - 1 {
                        pp += r * a[k + 2][j];
                        a[k + 2][j] -= pp * z;
                    }
                    a[k + 1][j] -= pp * y;
                    a[k][j] -= pp * x;
                }
                let mmin = nn.min(k + 3);
                for row in a.iter_mut().take(mmin + 1).skip(l) {
                    let mut pp = x * row[k] + y * row[k + 1];
                    if k != nn - 1 {
                        pp += z * row[k + 2];
                        row[k + 2] -= pp * r;
                    }
                    row[k + 1] -= pp * q;
                    row[k] -= pp;
                }
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
