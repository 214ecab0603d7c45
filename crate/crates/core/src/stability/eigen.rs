//! Eigenvalues of small dense real matrices: balancing, Householder reduction
//! to upper Hessenberg form, then Francis double-shift QR iteration.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 10;
const MAX_ITERATIONS: usize = 60;

/// All eigenvalues of a square real matrix of dimension ≤ 10, in no
/// particular order. Complex eigenvalues appear in conjugate pairs.
pub fn eigen_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Domain(format!(
            "eigen_spectrum needs a square matrix (got {}x{})",
            n,
            matrix.ncols()
        )));
    }
    if n > MAX_DIMENSION {
        return Err(Error::UnsupportedSize(n, MAX_DIMENSION));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hessenberg_qr(&mut a)
}

fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
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
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum();
        let norm = alpha_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i > k { a[(i, k)] } else { 0.0 };
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // A <- H A with H = I - 2 v vᵀ / (vᵀv)
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum();
            let scale = 2.0 * dot / vnorm_sq;
            for i in k + 1..n {
                a[(i, j)] -= scale * v[i];
            }
        }
        // A <- A H
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let scale = 2.0 * dot / vnorm_sq;
            for j in k + 1..n {
                a[(i, j)] -= scale * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hessenberg_qr(a: &mut DMatrix<f64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut out = vec![C64::new(0.0, 0.0); n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // find a small subdiagonal element
            let mut l = 0usize;
            for ll in (1..=nu).rev() {
                let mut s = a[(ll - 1, ll - 1)].abs() + a[(ll, ll)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(ll, ll - 1)].abs() <= eps * s {
                    a[(ll, ll - 1)] = 0.0;
                    l = ll;
                    break;
                }
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                out[nu] = C64::new(x + shift, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    out[nu - 1] = C64::new(x + z, 0.0);
                    out[nu] = if z != 0.0 {
                        C64::new(x - w / z, 0.0)
                    } else {
                        C64::new(x + z, 0.0)
                    };
                } else {
                    out[nu] = C64::new(x + p, -z);
                    out[nu - 1] = C64::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            if its == MAX_ITERATIONS {
                return Err(Error::Evaluation("QR iteration did not converge".into()));
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                shift += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }
            for k in m..nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k + 1 != nu { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k + 1 != nu {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                let mmin = if nu < k + 3 { nu } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k + 1 != nu {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(out)
}
