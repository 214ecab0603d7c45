//! Reference solutions computed independently of the library: dark-state
//! populations from a numerical root-find of the stationarity conditions,
//! and small linear-algebra helpers.
#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// All complex roots of `Σ c_k x^k` (`coeffs[k] = c_k`) by Durand–Kerner
/// iteration followed by Newton polishing.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<C64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let eval = |x: C64| {
        monic
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &v| acc * x + v)
    };
    let deriv = |x: C64| {
        monic
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (k, &v)| acc * x + v * k as f64)
    };
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-18 * radius {
            break;
        }
    }
    for r in &mut roots {
        for _ in 0..5 {
            let d = deriv(*r);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval(*r) / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots
}

/// Real roots inside `[lo, hi]` (imaginary parts below `tol·(1+|x|)`).
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    polynomial_roots(coeffs)
        .into_iter()
        .filter(|r| r.im.abs() <= tol * (1.0 + r.re.abs()))
        .map(|r| r.re)
        .filter(|&x| x >= lo - tol && x <= hi + tol)
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct Populations {
    pub n_a: f64,
    pub n_b: f64,
    pub n_g: f64,
}

/// Dark state with no dimers for a single open path, starting from two A
/// atoms per B atom (`N_a = 2N_b`, `N_b + N_g = 1/3`).
///
/// The dimer equation of the A₂ path vanishes when `η²N_a² = N_b N_g`; the
/// AB path needs `η² N_a N_b = N_a N_g`. Both reduce to a polynomial in N_b;
/// among roots with `0 < N_b ≤ 1/3` the one with the smallest N_g is taken.
pub fn single_path_oracle(eta: f64, homonuclear: bool) -> Populations {
    let e2 = eta * eta;
    let third = 1.0 / 3.0;
    // N_a = 2 N_b, N_g = 1/3 − N_b
    let coeffs = if homonuclear {
        // η²(2N_b)² − N_b(1/3 − N_b)
        vec![0.0, -third, 4.0 * e2 + 1.0]
    } else {
        // 2N_b (η² N_b − (1/3 − N_b))
        vec![0.0, -2.0 * third, 2.0 * (e2 + 1.0)]
    };
    let n_b = real_roots_in(&coeffs, 0.0, third, 1e-9)
        .into_iter()
        .filter(|&x| x > 0.0)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(n_b.is_finite(), "no physical root for eta = {eta}");
    Populations {
        n_a: 2.0 * n_b,
        n_b,
        n_g: third - n_b,
    }
}

/// Dark state with both paths open under the atom-number constraint
/// `N_a + N_b + 3N_g = 1`.
///
/// Solved by Newton iteration on the amplitude moduli `(x, y, z) = (|a|,
/// |b|, |g|)`: the A₂ dimer equation vanishes for `η₁x² = yz`, the AB one for
/// `η₂y = z`. Squaring into a polynomial in N_b would create a nearly double
/// root at large η, so the moduli are used directly. Several starts are
/// tried and the all-positive solution is returned.
pub fn dual_path_oracle(eta1: f64, eta2: f64) -> Populations {
    let residual = |v: [f64; 3]| {
        let [x, y, z] = v;
        [
            eta1 * x * x - y * z,
            eta2 * y - z,
            x * x + y * y + 3.0 * z * z - 1.0,
        ]
    };
    let mut found: Option<[f64; 3]> = None;
    let starts = [0.2, 0.5, 0.9];
    'starts: for &x0 in &starts {
        for &y0 in &starts {
            for &z0 in &starts {
                let mut v = [x0, y0, z0];
                for _ in 0..200 {
                    let [x, y, z] = v;
                    let f = residual(v);
                    let j = [
                        [2.0 * eta1 * x, -z, -y],
                        [0.0, eta2, -1.0],
                        [2.0 * x, 2.0 * y, 6.0 * z],
                    ];
                    let Some(d) = solve3(j, f) else { break };
                    let mut step = 1.0;
                    let norm = |r: [f64; 3]| r.iter().map(|e| e * e).sum::<f64>();
                    let mut next = v;
                    while step > 1e-6 {
                        next = [v[0] - step * d[0], v[1] - step * d[1], v[2] - step * d[2]];
                        if norm(residual(next)) < norm(f) || norm(f) < 1e-30 {
                            break;
                        }
                        step *= 0.5;
                    }
                    let done = (0..3).all(|k| (next[k] - v[k]).abs() <= 1e-17);
                    v = next;
                    if done {
                        break;
                    }
                }
                if v.iter().all(|&c| c > 0.0) && residual(v).iter().all(|r| r.abs() < 1e-13) {
                    found = Some(v);
                    break 'starts;
                }
            }
        }
    }
    let [x, y, z] = found.unwrap_or_else(|| panic!("no positive solution for ({eta1}, {eta2})"));
    Populations {
        n_a: x * x,
        n_b: y * y,
        n_g: z * z,
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det(mk) / d;
    }
    Some(out)
}

/// Determinant of a complex square matrix by LU with partial pivoting.
pub fn complex_det(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        let (upper, lower) = m.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (x, v) in row[col..n].iter_mut().zip(&pivot_row[col..n]) {
                *x -= f * v;
            }
        }
    }
    det
}

/// Frobenius norm of a real row-major matrix.
pub fn frobenius(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Log-uniform samples over `[lo, hi]` from a seeded stream.
pub fn log_uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.random_range(lo.ln()..=hi.ln()).exp())
        .collect()
}
