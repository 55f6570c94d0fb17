//! Independent oracles shared by the integration suites: these deliberately
//! avoid the library's own computational paths.

use nalgebra::{DMatrix, DVector};

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.amax() * n as f64;
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// All solutions `(μ, ν)` of the system
/// `l μ² + (n-l) ν² = ελ`, `c + ε μ ν = 0`
/// found by damped Newton iteration from a grid of starting points.
pub fn newton_two_curvature(n: usize, l: usize, c: f64, eps: f64, lambda: f64) -> Vec<(f64, f64)> {
    let lf = l as f64;
    let mf = (n - l) as f64;
    let scale1 = 1.0 + (eps * lambda).abs();
    let scale2 = 1.0 + c.abs();
    let starts = [
        -10.0, -5.0, -2.5, -1.2, -0.6, -0.3, 0.3, 0.6, 1.2, 2.5, 5.0, 10.0,
    ];
    let mut sols: Vec<(f64, f64)> = Vec::new();
    for &m0 in &starts {
        for &n0 in &starts {
            let (mut mu, mut nu) = (m0, n0);
            let mut converged = false;
            for _ in 0..120 {
                let f1 = lf * mu * mu + mf * nu * nu - eps * lambda;
                let f2 = c + eps * mu * nu;
                if f1.abs() < 1e-13 * scale1 && f2.abs() < 1e-13 * scale2 {
                    converged = true;
                    break;
                }
                let det = 2.0 * eps * (lf * mu * mu - mf * nu * nu);
                if det.abs() < 1e-13 {
                    break;
                }
                let dmu = (eps * mu * f1 - 2.0 * mf * nu * f2) / det;
                let dnu = (-eps * nu * f1 + 2.0 * lf * mu * f2) / det;
                mu -= dmu;
                nu -= dnu;
                if !mu.is_finite() || !nu.is_finite() {
                    break;
                }
            }
            if converged
                && !sols
                    .iter()
                    .any(|&(a, b)| (a - mu).abs() < 1e-8 && (b - nu).abs() < 1e-8)
            {
                sols.push((mu, nu));
            }
        }
    }
    sols
}

/// Solutions `(γ, τ)` with `τ > 0` of
/// `n (γ² - τ²) = ελ`, `γ² + τ² = -cε`.
pub fn newton_imaginary(n: usize, c: f64, eps: f64, lambda: f64) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let starts = [0.1, 0.35, 0.8, 1.5, 3.0, 6.0];
    let mut sols: Vec<(f64, f64)> = Vec::new();
    for &g0 in &starts {
        for &t0 in &starts {
            let (mut g, mut t) = (g0, t0);
            let mut converged = false;
            for _ in 0..120 {
                let f1 = nf * (g * g - t * t) - eps * lambda;
                let f2 = g * g + t * t + c * eps;
                if f1.abs() < 1e-12 && f2.abs() < 1e-12 {
                    converged = true;
                    break;
                }
                // J = [[2nγ, -2nτ], [2γ, 2τ]], det = 8nγτ.
                let det = 8.0 * nf * g * t;
                if det.abs() < 1e-13 {
                    break;
                }
                let dg = (2.0 * t * f1 + 2.0 * nf * t * f2) / det;
                let dt = (-2.0 * g * f1 + 2.0 * nf * g * f2) / det;
                g -= dg;
                t -= dt;
                if !g.is_finite() || !t.is_finite() {
                    break;
                }
            }
            if converged
                && t > 0.0
                && !sols
                    .iter()
                    .any(|&(a, b)| (a - g.abs()).abs() < 1e-8 && (b - t).abs() < 1e-8)
            {
                sols.push((g.abs(), t));
            }
        }
    }
    sols
}

/// Richardson-extrapolated 5-point first partial of a vector-valued map,
/// written independently of the library's stencils.
pub fn fd_partial<F>(f: &F, u: &[f64], i: usize, h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let eval = |step: f64| {
        let mut v = u.to_vec();
        v[i] += step;
        f(&v)
    };
    let five = |h: f64| {
        (eval(-2.0 * h) - eval(-h) * 8.0 + eval(h) * 8.0 - eval(2.0 * h)) / (12.0 * h)
    };
    (five(h / 2.0) * 16.0 - five(h)) / 15.0
}

/// Richardson-extrapolated second partial (5-point diagonal, 4-point cross).
pub fn fd_second<F>(f: &F, u: &[f64], i: usize, j: usize, h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    if i == j {
        let five = |h: f64| {
            let eval = |step: f64| {
                let mut v = u.to_vec();
                v[i] += step;
                f(&v)
            };
            (-eval(-2.0 * h) + eval(-h) * 16.0 - f(u) * 30.0 + eval(h) * 16.0 - eval(2.0 * h))
                / (12.0 * h * h)
        };
        (five(h / 2.0) * 16.0 - five(h)) / 15.0
    } else {
        let cross = |h: f64| {
            let eval = |si: f64, sj: f64| {
                let mut v = u.to_vec();
                v[i] += si;
                v[j] += sj;
                f(&v)
            };
            (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
        };
        (cross(h / 2.0) * 4.0 - cross(h)) / 3.0
    }
}
