//! The type II / type III example families: parametrized hypersurfaces of the
//! anti-de Sitter and de Sitter space forms built from moving frames.
//!
//! Families 4.1/4.2 live in `H^{n+1}_1(-1)` and carry principal curvatures
//! `μ` and `1/μ`; families 4.3/4.4 live in `S^{n+1}_1(1)` with principal
//! curvatures `cot(θ+π/4)` and `-tan(θ+π/4)`. The frame relations only
//! constrain part of the coefficient matrix; unconstrained slots close to
//! zero, which is the simplest skew-adjoint completion (alternate closures
//! can be injected through `extra_entries`).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::frames::{integrate_frame, CoeffFn, FrameField, FrameOdeSpec, IntegrateOptions, MatrixEntry};
use super::{CatalogError, CatalogInstance, ExpectedEigenvalue, ExpectedSpectrum, InstanceDescriptor, Result};
use crate::geometry::{ChartMap, Immersion, Orientation, SpaceForm};
use crate::jets::{self, Jet, ScalarJet};
use crate::linalg::FormTag;

// ---------------------------------------------------------------------------
// Shared chart machinery.
// ---------------------------------------------------------------------------

/// Chart map built from an integrated frame (axis 0 is the frame parameter)
/// and a jet formula over the frame components and the chart variables.
pub(crate) struct FrameChartMap {
    pub field: Arc<FrameField>,
    #[allow(clippy::type_complexity)]
    pub formula: Box<
        dyn Fn(&[Vec<ScalarJet>], &[ScalarJet]) -> jets::Result<Vec<ScalarJet>> + Send + Sync,
    >,
}

impl ChartMap for FrameChartMap {
    fn eval_jet(&self, u: &[f64], order: usize) -> jets::Result<Jet> {
        let vars: Vec<ScalarJet> = u
            .iter()
            .enumerate()
            .map(|(k, &v)| ScalarJet::variable(u.len(), order, k, v))
            .collect::<jets::Result<_>>()?;
        let frame = self.field.component_jets(u[0], u.len(), order)?;
        let comps = (self.formula)(&frame, &vars)?;
        Jet::new(u.to_vec(), comps)
    }
}

fn zero_vec(vars: usize, order: usize, ambient: usize) -> Vec<ScalarJet> {
    vec![ScalarJet::constant(vars, order, 0.0); ambient]
}

fn add_scaled_row(
    acc: &mut [ScalarJet],
    row: &[ScalarJet],
    coeff: &ScalarJet,
) -> jets::Result<()> {
    for (a, r) in acc.iter_mut().zip(row) {
        *a = a.add(&coeff.mul(r)?)?;
    }
    Ok(())
}

/// Unit-sphere components from `k` angles (`k+1` components):
/// `(cos φ1, sin φ1 cos φ2, ..., sin φ1 ··· sin φk)`.
fn sphere_jets(angles: &[ScalarJet], vars: usize, order: usize) -> jets::Result<Vec<ScalarJet>> {
    if angles.is_empty() {
        return Ok(vec![ScalarJet::constant(vars, order, 1.0)]);
    }
    let mut comps = Vec::with_capacity(angles.len() + 1);
    let mut sin_prod = ScalarJet::constant(vars, order, 1.0);
    for a in angles {
        comps.push(sin_prod.mul(&a.cos()?)?);
        sin_prod = sin_prod.mul(&a.sin()?)?;
    }
    comps.push(sin_prod);
    Ok(comps)
}

fn sphere_values(angles: &[f64]) -> Vec<f64> {
    if angles.is_empty() {
        return vec![1.0];
    }
    let mut comps = Vec::with_capacity(angles.len() + 1);
    let mut sin_prod = 1.0;
    for &a in angles {
        comps.push(sin_prod * a.cos());
        sin_prod *= a.sin();
    }
    comps.push(sin_prod);
    comps
}

/// Angle box for a full sphere chart away from coordinate singularities.
fn full_sphere_domain(angles: usize) -> Vec<(f64, f64)> {
    match angles {
        0 => vec![],
        1 => vec![(0.3, 2.8)],
        k => {
            let mut d = vec![(0.35, 2.0); k - 1];
            d.push((0.35, 2.8));
            d
        }
    }
}

/// Angle box keeping the first sphere component at least `cos(max_first)`.
fn half_sphere_domain(angles: usize, max_first: f64) -> Vec<(f64, f64)> {
    match angles {
        0 => vec![],
        1 => vec![(-max_first, max_first)],
        k => {
            let mut d = vec![(0.3, max_first)];
            d.extend(vec![(0.35, 2.0); k - 2]);
            d.push((0.35, 2.8));
            d
        }
    }
}

fn corners(domain: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for &(lo, hi) in domain {
        let mut next = Vec::with_capacity(points.len() * 2);
        for p in &points {
            let mut a = p.clone();
            a.push(lo);
            next.push(a);
            let mut b = p.clone();
            b.push(hi);
            next.push(b);
        }
        points = next;
    }
    points
}

fn check_nonvanishing(c: &CoeffFn, t_range: (f64, f64), what: &str) -> Result<()> {
    let bad = (0..=24).any(|k| {
        let t = t_range.0 + (t_range.1 - t_range.0) * k as f64 / 24.0;
        c.value(t).abs() < 1e-12
    });
    if bad {
        return Err(CatalogError::InvalidParams(format!(
            "{what} must be nonvanishing on the parameter interval"
        )));
    }
    Ok(())
}

fn forbidden_theta(theta: f64) -> bool {
    let c = (theta - PI / 4.0).cos();
    let s = (theta - PI / 4.0).sin();
    c.abs() < 1e-9 || s.abs() < 1e-9
}

/// θ in `[0, 2π)` with `cot(θ + π/4) = k`.
pub fn theta_from_cot(k: f64) -> f64 {
    let mut x = (1.0 / k).atan();
    if x < 0.0 {
        x += PI;
    }
    let mut theta = x - PI / 4.0;
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    theta
}

// ---------------------------------------------------------------------------
// Family 4.1 (type II in the anti-de Sitter space form).
// ---------------------------------------------------------------------------

/// Parameters for the type II family in `H^{n+1}_1(-1)`.
#[derive(Debug, Clone)]
pub struct Family41 {
    pub n: usize,
    pub p: usize,
    pub mu: f64,
    pub b: CoeffFn,
    pub t_range: (f64, f64),
    pub step: f64,
    pub extra_entries: Vec<MatrixEntry>,
}

impl Family41 {
    pub fn new(n: usize, p: usize, mu: f64) -> Self {
        Family41 {
            n,
            p,
            mu,
            b: CoeffFn::Const(1.0),
            t_range: (0.0, 1.0),
            step: 1e-3,
            extra_entries: Vec::new(),
        }
    }
}

/// Frame spec of family 4.1: `E_1 = E_{n+2}'`, `E_{n+1}' = μ E_1 + B E_2`,
/// unconstrained slots closed to zero (skew-adjointly).
pub fn frame_spec_4_1(n: usize, mu: f64, b: CoeffFn) -> FrameOdeSpec {
    let dim = n + 2;
    let mut gram = DMatrix::zeros(dim, dim);
    gram[(0, 1)] = 1.0;
    gram[(1, 0)] = 1.0;
    for i in 2..=n {
        gram[(i, i)] = 1.0;
    }
    gram[(n + 1, n + 1)] = -1.0;
    let mut signs = vec![1.0; dim];
    signs[0] = -1.0;
    signs[1] = -1.0;
    let entries = vec![
        MatrixEntry { row: n + 1, col: 0, scale: 1.0, coeff: None },
        MatrixEntry { row: n, col: 0, scale: mu, coeff: None },
        MatrixEntry { row: n, col: 1, scale: 1.0, coeff: Some(0) },
        MatrixEntry { row: 0, col: n, scale: -1.0, coeff: Some(0) },
        MatrixEntry { row: 1, col: n, scale: -mu, coeff: None },
        MatrixEntry { row: 1, col: n + 1, scale: 1.0, coeff: None },
    ];
    FrameOdeSpec {
        dim,
        gram_target: gram,
        ambient_signs: signs,
        coefficients: vec![b],
        entries,
    }
}

pub fn initial_frame_4_1(n: usize) -> DMatrix<f64> {
    let dim = n + 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut e = DMatrix::zeros(dim, dim);
    e[(0, 0)] = s;
    e[(0, 2)] = s;
    e[(1, 0)] = -s;
    e[(1, 2)] = s;
    for i in 2..=n {
        e[(i, i + 1)] = 1.0;
    }
    e[(n + 1, 1)] = 1.0;
    e
}

pub fn example_4_1(params: &Family41) -> Result<CatalogInstance> {
    let (n, p, mu) = (params.n, params.p, params.mu);
    if n < 2 || p < 2 || p > n {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.1 requires 2 <= p <= n, got n={n}, p={p}"
        )));
    }
    if mu == 0.0 {
        return Err(CatalogError::InvalidParams("mu must be nonzero".into()));
    }
    check_nonvanishing(&params.b, params.t_range, "B")?;

    let mut spec = frame_spec_4_1(n, mu, params.b.clone());
    spec.entries.extend(params.extra_entries.iter().cloned());
    let field = Arc::new(integrate_frame(
        &spec,
        params.t_range,
        &initial_frame_4_1(n),
        &IntegrateOptions {
            step: params.step,
            ..IntegrateOptions::default()
        },
    )?);

    let mut domain = vec![params.t_range];
    domain.extend(vec![(-0.25, 0.25); n - 1]);

    let ambient = n + 2;
    let unit = mu * mu == 1.0;
    let formula = {
        let (n, p, mu) = (n, p, mu);
        move |frame: &[Vec<ScalarJet>], vars: &[ScalarJet]| -> jets::Result<Vec<ScalarJet>> {
            let (vs, order) = (vars[0].vars(), vars[0].order());
            let y = |j: usize| &vars[j - 1]; // y_j for j = 2..=n
            let mut x = zero_vec(vs, order, ambient);
            // Σ y_j E_j (frame row j-1)
            for j in 2..=n {
                add_scaled_row(&mut x, &frame[j - 1], y(j))?;
            }
            if unit {
                // x = (1 + S/2) E_{n+2} - (S/2) E_{n+1} + Σ y_j E_j
                let mut s = ScalarJet::constant(vs, order, 0.0);
                for j in 3..=n {
                    s = s.add(&y(j).mul(y(j))?)?;
                }
                let half = s.scale(0.5);
                add_scaled_row(&mut x, &frame[n + 1], &half.add_scalar(1.0))?;
                add_scaled_row(&mut x, &frame[n], &half.neg())?;
            } else {
                let d = mu * mu - 1.0;
                let mut pp = ScalarJet::constant(vs, order, 0.0);
                for j in 3..=p {
                    pp = pp.add(&y(j).mul(y(j))?)?;
                }
                let mut qq = ScalarJet::constant(vs, order, 0.0);
                for j in p + 1..=n {
                    qq = qq.add(&y(j).mul(y(j))?)?;
                }
                let sgn_a = (1.0 - mu * mu).signum();
                let sgn_b = (mu * (1.0 - mu * mu)).signum();
                let a = pp
                    .scale(-1.0 / d)
                    .add_scalar(1.0 / (d * d))
                    .sqrt()?
                    .scale(sgn_a);
                let b = qq
                    .scale(1.0 / d)
                    .add_scalar(mu * mu / (d * d))
                    .sqrt()?
                    .scale(sgn_b);
                // a (E_{n+2} - μ E_{n+1}) + b (E_{n+1} - μ E_{n+2})
                add_scaled_row(&mut x, &frame[n + 1], &a.sub(&b.scale(mu))?)?;
                add_scaled_row(&mut x, &frame[n], &b.sub(&a.scale(mu))?)?;
            }
            Ok(x)
        }
    };

    // Reject domains that leave the chart (square-root arguments must stay
    // positive at every corner).
    if !unit {
        let d = mu * mu - 1.0;
        for corner in corners(&domain[1..]) {
            let pp: f64 = (3..=p).map(|j| corner[j - 2] * corner[j - 2]).sum();
            let qq: f64 = (p + 1..=n).map(|j| corner[j - 2] * corner[j - 2]).sum();
            let ba = 1.0 / (d * d) - pp / d;
            let bb = mu * mu / (d * d) + qq / d;
            if ba < 1e-3 || bb < 1e-3 {
                return Err(CatalogError::InvalidParams(
                    "chart box too large for this mu (square-root argument vanishes)".into(),
                ));
            }
        }
    }

    let sf = SpaceForm::anti_de_sitter(n + 1, -1.0);
    let map = FrameChartMap {
        field,
        formula: Box::new(formula),
    };
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(Orientation::TraceSign(mu.signum()))
        .with_label(format!("family-4.1(n={n}, p={p}, mu={mu})"));

    let lambda = p as f64 * mu * mu + (n - p) as f64 / (mu * mu);
    let eigenvalues = if unit || p == n {
        vec![ExpectedEigenvalue {
            value: mu,
            algebraic: n,
            geometric: n - 1,
        }]
    } else {
        vec![
            ExpectedEigenvalue { value: mu, algebraic: p, geometric: p - 1 },
            ExpectedEigenvalue { value: 1.0 / mu, algebraic: n - p, geometric: n - p },
        ]
    };
    Ok(CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "4.1".into(),
            n,
            p: Some(p),
            mu: Some(mu),
            theta: None,
            curvature: -1.0,
            index: 1,
            coefficient_spec: format!("B={:?}", params.b),
            t_range: Some(params.t_range),
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues,
            form: FormTag::II,
        }),
        expected_lambda: Some(lambda),
        expected_epsilon: Some(1.0),
    })
}

// ---------------------------------------------------------------------------
// Family 4.2 (type III in the anti-de Sitter space form).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Family42 {
    pub n: usize,
    pub p: usize,
    pub mu: f64,
    pub b: CoeffFn,
    pub t_range: (f64, f64),
    pub step: f64,
}

impl Family42 {
    pub fn new(n: usize, p: usize, mu: f64) -> Self {
        Family42 {
            n,
            p,
            mu,
            b: CoeffFn::Const(1.0),
            t_range: (0.0, 1.0),
            step: 1e-3,
        }
    }
}

pub fn frame_spec_4_2(n: usize, mu: f64, b: CoeffFn) -> FrameOdeSpec {
    let dim = n + 2;
    let mut gram = DMatrix::zeros(dim, dim);
    gram[(0, 2)] = 1.0;
    gram[(2, 0)] = 1.0;
    gram[(1, 1)] = 1.0;
    for i in 3..=n {
        gram[(i, i)] = 1.0;
    }
    gram[(n + 1, n + 1)] = -1.0;
    let mut signs = vec![1.0; dim];
    signs[0] = -1.0;
    signs[1] = -1.0;
    let entries = vec![
        MatrixEntry { row: n + 1, col: 0, scale: 1.0, coeff: None },
        MatrixEntry { row: n, col: 0, scale: mu, coeff: None },
        MatrixEntry { row: n, col: 1, scale: 1.0, coeff: Some(0) },
        MatrixEntry { row: 1, col: n, scale: -1.0, coeff: Some(0) },
        MatrixEntry { row: 2, col: n, scale: -mu, coeff: None },
        MatrixEntry { row: 2, col: n + 1, scale: 1.0, coeff: None },
    ];
    FrameOdeSpec {
        dim,
        gram_target: gram,
        ambient_signs: signs,
        coefficients: vec![b],
        entries,
    }
}

pub fn initial_frame_4_2(n: usize) -> DMatrix<f64> {
    let dim = n + 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut e = DMatrix::zeros(dim, dim);
    e[(0, 0)] = s;
    e[(0, 2)] = s;
    e[(2, 0)] = -s;
    e[(2, 2)] = s;
    e[(1, 3)] = 1.0;
    for i in 3..=n {
        e[(i, i + 1)] = 1.0;
    }
    e[(n + 1, 1)] = 1.0;
    e
}

pub fn example_4_2(params: &Family42) -> Result<CatalogInstance> {
    let (n, p, mu) = (params.n, params.p, params.mu);
    if n < 3 || p < 3 || p > n {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.2 requires 3 <= p <= n, got n={n}, p={p}"
        )));
    }
    if mu == 0.0 {
        return Err(CatalogError::InvalidParams("mu must be nonzero".into()));
    }
    check_nonvanishing(&params.b, params.t_range, "B")?;

    let spec = frame_spec_4_2(n, mu, params.b.clone());
    let field = Arc::new(integrate_frame(
        &spec,
        params.t_range,
        &initial_frame_4_2(n),
        &IntegrateOptions {
            step: params.step,
            ..IntegrateOptions::default()
        },
    )?);

    let mut domain = vec![params.t_range];
    domain.extend(vec![(-0.25, 0.25); n - 1]);

    let ambient = n + 2;
    let unit = mu * mu == 1.0;
    let formula = {
        let (n, p, mu) = (n, p, mu);
        move |frame: &[Vec<ScalarJet>], vars: &[ScalarJet]| -> jets::Result<Vec<ScalarJet>> {
            let (vs, order) = (vars[0].vars(), vars[0].order());
            let y = |j: usize| &vars[j - 1];
            let mut x = zero_vec(vs, order, ambient);
            for j in 2..=n {
                add_scaled_row(&mut x, &frame[j - 1], y(j))?;
            }
            // The sums skip j = 3: E_3 is the null partner of E_1.
            if unit {
                let mut s = y(2).mul(y(2))?;
                for j in 4..=n {
                    s = s.add(&y(j).mul(y(j))?)?;
                }
                let half = s.scale(0.5);
                add_scaled_row(&mut x, &frame[n + 1], &half.add_scalar(1.0))?;
                add_scaled_row(&mut x, &frame[n], &half.neg())?;
            } else {
                let d = mu * mu - 1.0;
                let mut pp = y(2).mul(y(2))?;
                for j in 4..=p {
                    pp = pp.add(&y(j).mul(y(j))?)?;
                }
                let mut qq = ScalarJet::constant(vs, order, 0.0);
                for j in p + 1..=n {
                    qq = qq.add(&y(j).mul(y(j))?)?;
                }
                let sgn_a = (1.0 - mu * mu).signum();
                let sgn_b = (mu * (1.0 - mu * mu)).signum();
                let a = pp
                    .scale(-1.0 / d)
                    .add_scalar(1.0 / (d * d))
                    .sqrt()?
                    .scale(sgn_a);
                let b = qq
                    .scale(1.0 / d)
                    .add_scalar(mu * mu / (d * d))
                    .sqrt()?
                    .scale(sgn_b);
                add_scaled_row(&mut x, &frame[n + 1], &a.sub(&b.scale(mu))?)?;
                add_scaled_row(&mut x, &frame[n], &b.sub(&a.scale(mu))?)?;
            }
            Ok(x)
        }
    };

    if !unit {
        let d = mu * mu - 1.0;
        for corner in corners(&domain[1..]) {
            let mut pp = corner[0] * corner[0];
            for j in 4..=p {
                pp += corner[j - 2] * corner[j - 2];
            }
            let qq: f64 = (p + 1..=n).map(|j| corner[j - 2] * corner[j - 2]).sum();
            if 1.0 / (d * d) - pp / d < 1e-3 || mu * mu / (d * d) + qq / d < 1e-3 {
                return Err(CatalogError::InvalidParams(
                    "chart box too large for this mu (square-root argument vanishes)".into(),
                ));
            }
        }
    }

    let sf = SpaceForm::anti_de_sitter(n + 1, -1.0);
    let map = FrameChartMap {
        field,
        formula: Box::new(formula),
    };
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(Orientation::TraceSign(mu.signum()))
        .with_label(format!("family-4.2(n={n}, p={p}, mu={mu})"));

    let lambda = p as f64 * mu * mu + (n - p) as f64 / (mu * mu);
    let eigenvalues = if unit || p == n {
        vec![ExpectedEigenvalue {
            value: mu,
            algebraic: n,
            geometric: n - 2,
        }]
    } else {
        vec![
            ExpectedEigenvalue { value: mu, algebraic: p, geometric: p - 2 },
            ExpectedEigenvalue { value: 1.0 / mu, algebraic: n - p, geometric: n - p },
        ]
    };
    Ok(CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "4.2".into(),
            n,
            p: Some(p),
            mu: Some(mu),
            theta: None,
            curvature: -1.0,
            index: 1,
            coefficient_spec: format!("B={:?}", params.b),
            t_range: Some(params.t_range),
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues,
            form: FormTag::III,
        }),
        expected_lambda: Some(lambda),
        expected_epsilon: Some(1.0),
    })
}

// ---------------------------------------------------------------------------
// Family 4.3 (type II in the de Sitter space form).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Family43 {
    pub n: usize,
    pub p: usize,
    pub theta: f64,
    /// `B_1..B_n` (defaults: 1 for indices >= p, else 0).
    pub bs: Vec<CoeffFn>,
    pub t_range: (f64, f64),
    pub step: f64,
}

impl Family43 {
    pub fn new(n: usize, p: usize, theta: f64) -> Self {
        let bs = (1..=n)
            .map(|i| CoeffFn::Const(if i >= p { 1.0 } else { 0.0 }))
            .collect();
        Family43 {
            n,
            p,
            theta,
            bs,
            t_range: (0.0, 1.0),
            step: 1e-3,
        }
    }

    pub fn from_cot(n: usize, p: usize, cot: f64) -> Self {
        Family43::new(n, p, theta_from_cot(cot))
    }
}

/// Frame spec of family 4.3. The printed derivative relations are completed
/// to the unique Gram-preserving system by negating the `E_1` row.
pub fn frame_spec_4_3(n: usize, bs: &[CoeffFn]) -> FrameOdeSpec {
    assert_eq!(bs.len(), n, "family 4.3 uses coefficients B_1..B_n");
    let dim = n + 2;
    let mut gram = DMatrix::zeros(dim, dim);
    gram[(0, 1)] = 1.0;
    gram[(1, 0)] = 1.0;
    for i in 2..=n + 1 {
        gram[(i, i)] = 1.0;
    }
    let mut signs = vec![1.0; dim];
    signs[0] = -1.0;
    let mut entries = vec![
        MatrixEntry { row: 1, col: 2, scale: -1.0, coeff: None },
        MatrixEntry { row: 2, col: 0, scale: 1.0, coeff: None },
        MatrixEntry { row: 2, col: 1, scale: 1.0, coeff: Some(0) },
    ];
    for i in 3..=n + 2 {
        // E_1' = -Σ B_{i-2} E_i and E_i' = B_{i-2} E_2.
        entries.push(MatrixEntry { row: 0, col: i - 1, scale: -1.0, coeff: Some(i - 3) });
        if i >= 4 {
            entries.push(MatrixEntry { row: i - 1, col: 1, scale: 1.0, coeff: Some(i - 3) });
        }
    }
    FrameOdeSpec {
        dim,
        gram_target: gram,
        ambient_signs: signs,
        coefficients: bs.to_vec(),
        entries,
    }
}

pub fn initial_frame_4_3(n: usize) -> DMatrix<f64> {
    let dim = n + 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut e = DMatrix::zeros(dim, dim);
    e[(0, 0)] = s;
    e[(0, 1)] = s;
    e[(1, 0)] = -s;
    e[(1, 1)] = s;
    for i in 2..=n + 1 {
        e[(i, i)] = 1.0;
    }
    e
}

pub fn example_4_3(params: &Family43) -> Result<CatalogInstance> {
    let (n, p, theta) = (params.n, params.p, params.theta);
    if n < 2 || p < 2 || p > n {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.3 requires 2 <= p <= n, got n={n}, p={p}"
        )));
    }
    if forbidden_theta(theta) {
        return Err(CatalogError::InvalidParams(
            "theta may not be an odd multiple of pi/4".into(),
        ));
    }
    if params.bs.len() != n {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.3 needs exactly {n} coefficient functions"
        )));
    }
    // Σ_{i >= p} B_i² must stay positive along the interval.
    let bad = (0..=24).any(|k| {
        let t = params.t_range.0 + (params.t_range.1 - params.t_range.0) * k as f64 / 24.0;
        let s: f64 = (p..=n).map(|i| params.bs[i - 1].value(t).powi(2)).sum();
        s < 1e-12
    });
    if bad {
        return Err(CatalogError::InvalidParams(
            "the tail coefficient functions must not vanish simultaneously".into(),
        ));
    }

    let spec = frame_spec_4_3(n, &params.bs);
    let field = Arc::new(integrate_frame(
        &spec,
        params.t_range,
        &initial_frame_4_3(n),
        &IntegrateOptions {
            step: params.step,
            ..IntegrateOptions::default()
        },
    )?);

    let y_angles = p - 2;
    let z_angles = n - p;
    let mut domain = vec![params.t_range, (-1.0, 1.0)];
    domain.extend(half_sphere_domain(y_angles, 1.2));
    domain.extend(full_sphere_domain(z_angles));

    let ambient = n + 2;
    let cth = (theta - PI / 4.0).cos();
    let sth = (theta - PI / 4.0).sin();
    let formula = {
        move |frame: &[Vec<ScalarJet>], vars: &[ScalarJet]| -> jets::Result<Vec<ScalarJet>> {
            let (vs, order) = (vars[0].vars(), vars[0].order());
            let v = &vars[1];
            let y = sphere_jets(&vars[2..2 + y_angles], vs, order)?;
            let z = sphere_jets(&vars[2 + y_angles..], vs, order)?;
            let mut x = zero_vec(vs, order, ambient);
            // cos(θ-π/4)(v E_2 + Σ y_i E_i) - sin(θ-π/4) Σ z_α E_α
            add_scaled_row(&mut x, &frame[1], &v.scale(cth))?;
            for (k, yk) in y.iter().enumerate() {
                add_scaled_row(&mut x, &frame[2 + k], &yk.scale(cth))?;
            }
            for (k, zk) in z.iter().enumerate() {
                add_scaled_row(&mut x, &frame[p + 1 + k], &zk.scale(-sth))?;
            }
            Ok(x)
        }
    };

    let sf = SpaceForm::de_sitter(n + 1, 1.0);
    let map = FrameChartMap {
        field: field.clone(),
        formula: Box::new(formula),
    };
    let normal_ref = {
        let field = field.clone();
        move |u: &[f64]| -> DVector<f64> {
            let frame = field.frame_at(u[0]);
            let y = sphere_values(&u[2..2 + y_angles]);
            let z = sphere_values(&u[2 + y_angles..]);
            let mut xi = DVector::zeros(ambient);
            xi += frame.row(1).transpose() * (sth * u[1]);
            for (k, yk) in y.iter().enumerate() {
                xi += frame.row(2 + k).transpose() * (sth * yk);
            }
            for (k, zk) in z.iter().enumerate() {
                xi += frame.row(p + 1 + k).transpose() * (cth * zk);
            }
            xi
        }
    };
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(Orientation::Align(Arc::new(normal_ref)))
        .with_label(format!("family-4.3(n={n}, p={p}, theta={theta:.6})"));

    let cot = (theta + PI / 4.0).cos() / (theta + PI / 4.0).sin();
    let tan = 1.0 / cot;
    let lambda = p as f64 * cot * cot + (n - p) as f64 * tan * tan;
    let eigenvalues = if p == n {
        vec![ExpectedEigenvalue { value: cot, algebraic: n, geometric: n - 1 }]
    } else {
        vec![
            ExpectedEigenvalue { value: cot, algebraic: p, geometric: p - 1 },
            ExpectedEigenvalue { value: -tan, algebraic: n - p, geometric: n - p },
        ]
    };
    Ok(CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "4.3".into(),
            n,
            p: Some(p),
            mu: None,
            theta: Some(theta),
            curvature: 1.0,
            index: 1,
            coefficient_spec: format!("B={:?}", params.bs),
            t_range: Some(params.t_range),
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues,
            form: FormTag::II,
        }),
        expected_lambda: Some(lambda),
        expected_epsilon: Some(1.0),
    })
}

// ---------------------------------------------------------------------------
// Family 4.4 (type III in the de Sitter space form).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Family44 {
    pub n: usize,
    pub p: usize,
    pub theta: f64,
    /// `B_k` for subscripts `1..=n+1` (index 2 unused by the relations).
    pub bs: Vec<CoeffFn>,
    /// `(r, α, C_{rα})` with `4 <= r <= p+1`, `p+2 <= α <= n+2`.
    pub cs: Vec<(usize, usize, CoeffFn)>,
    pub t_range: (f64, f64),
    pub step: f64,
}

impl Family44 {
    pub fn new(n: usize, p: usize, theta: f64) -> Self {
        Family44 {
            n,
            p,
            theta,
            bs: vec![CoeffFn::Const(0.0); n + 1],
            cs: vec![(4, p + 2, CoeffFn::Const(1.0))],
            t_range: (0.0, 1.0),
            step: 1e-3,
        }
    }

    pub fn from_cot(n: usize, p: usize, cot: f64) -> Self {
        Family44::new(n, p, theta_from_cot(cot))
    }
}

/// Frame spec of family 4.4, with the `E_1` row negated to preserve the Gram
/// target (the C-coupled block is already consistent as printed).
pub fn frame_spec_4_4(
    n: usize,
    p: usize,
    bs: &[CoeffFn],
    cs: &[(usize, usize, CoeffFn)],
) -> FrameOdeSpec {
    assert_eq!(bs.len(), n + 1, "family 4.4 uses coefficients B_1 through B_(n+1)");
    let dim = n + 2;
    let mut gram = DMatrix::zeros(dim, dim);
    gram[(0, 2)] = 1.0;
    gram[(2, 0)] = 1.0;
    gram[(1, 1)] = 1.0;
    for i in 3..=n + 1 {
        gram[(i, i)] = 1.0;
    }
    let mut signs = vec![1.0; dim];
    signs[0] = -1.0;

    // Coefficient slots: B_k at k-1 (subscripts 1..=n+1), C's appended.
    let mut coefficients: Vec<CoeffFn> = bs.to_vec();
    let b_slot = |k: usize| k - 1;

    let mut entries = vec![
        MatrixEntry { row: 0, col: 1, scale: -1.0, coeff: Some(b_slot(1)) },
        MatrixEntry { row: 2, col: 1, scale: 1.0, coeff: None },
        MatrixEntry { row: 1, col: 0, scale: -1.0, coeff: None },
        MatrixEntry { row: 1, col: 2, scale: 1.0, coeff: Some(b_slot(1)) },
    ];
    for i in 4..=n + 2 {
        entries.push(MatrixEntry { row: 0, col: i - 1, scale: -1.0, coeff: Some(b_slot(i - 1)) });
        entries.push(MatrixEntry { row: i - 1, col: 2, scale: 1.0, coeff: Some(b_slot(i - 1)) });
    }
    for (r, alpha, c) in cs {
        assert!(*r >= 4 && *r <= p + 1 && *alpha >= p + 2 && *alpha <= n + 2);
        let slot = coefficients.len();
        coefficients.push(c.clone());
        entries.push(MatrixEntry { row: r - 1, col: alpha - 1, scale: 1.0, coeff: Some(slot) });
        entries.push(MatrixEntry { row: alpha - 1, col: r - 1, scale: -1.0, coeff: Some(slot) });
    }
    FrameOdeSpec {
        dim,
        gram_target: gram,
        ambient_signs: signs,
        coefficients,
        entries,
    }
}

pub fn initial_frame_4_4(n: usize) -> DMatrix<f64> {
    let dim = n + 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut e = DMatrix::zeros(dim, dim);
    e[(0, 0)] = s;
    e[(0, 1)] = s;
    e[(2, 0)] = -s;
    e[(2, 1)] = s;
    e[(1, 2)] = 1.0;
    for i in 3..=n + 1 {
        e[(i, i)] = 1.0;
    }
    e
}

pub fn example_4_4(params: &Family44) -> Result<CatalogInstance> {
    let (n, p, theta) = (params.n, params.p, params.theta);
    if n < 3 || p < 3 || p > n {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.4 requires 3 <= p <= n, got n={n}, p={p}"
        )));
    }
    if forbidden_theta(theta) {
        return Err(CatalogError::InvalidParams(
            "theta may not be an odd multiple of pi/4".into(),
        ));
    }
    if params.cs.is_empty() || params.cs.iter().all(|(_, _, c)| c.is_zero()) {
        return Err(CatalogError::InvalidParams(
            "the coupling matrix (C_{r a}) must not vanish identically".into(),
        ));
    }
    if params.bs.len() != n + 1 {
        return Err(CatalogError::InvalidParams(format!(
            "family 4.4 needs exactly {} coefficient functions",
            n + 1
        )));
    }

    let spec = frame_spec_4_4(n, p, &params.bs, &params.cs);
    let field = Arc::new(integrate_frame(
        &spec,
        params.t_range,
        &initial_frame_4_4(n),
        &IntegrateOptions {
            step: params.step,
            ..IntegrateOptions::default()
        },
    )?);

    let y_angles = p - 2; // >= 1
    let z_angles = n - p;
    let mut domain = vec![params.t_range, (-1.0, 1.0)];
    domain.extend(half_sphere_domain(y_angles, 1.4)); // keeps y_3 >= cos(1.4) > 0.1
    domain.extend(full_sphere_domain(z_angles));

    let ambient = n + 2;
    let cth = (theta - PI / 4.0).cos();
    let sth = (theta - PI / 4.0).sin();
    let psi_scale = -(2.0f64.sqrt());
    let cs_data: Vec<(usize, usize, CoeffFn)> = params.cs.clone();
    let formula = {
        let cs = cs_data.clone();
        move |frame: &[Vec<ScalarJet>], vars: &[ScalarJet]| -> jets::Result<Vec<ScalarJet>> {
            let (vs, order) = (vars[0].vars(), vars[0].order());
            let t = vars[0].value();
            let v = &vars[1];
            let y = sphere_jets(&vars[2..2 + y_angles], vs, order)?;
            let z = sphere_jets(&vars[2 + y_angles..], vs, order)?;
            let mut x = zero_vec(vs, order, ambient);
            // cos(θ-π/4)(v E_3 + y_3 E_2 + Σ y_r E_r) - sin(θ-π/4) Σ z_α E_α
            add_scaled_row(&mut x, &frame[2], &v.scale(cth))?;
            add_scaled_row(&mut x, &frame[1], &y[0].scale(cth))?;
            for k in 1..y.len() {
                add_scaled_row(&mut x, &frame[2 + k], &y[k].scale(cth))?;
            }
            for (k, zk) in z.iter().enumerate() {
                add_scaled_row(&mut x, &frame[p + 1 + k], &zk.scale(-sth))?;
            }
            // - √2 (Ψ / y_3) sinθ E_3,  Ψ = Σ y_r z_α C_{rα}(t)
            let mut psi = ScalarJet::constant(vs, order, 0.0);
            for (r, alpha, c) in &cs {
                let cjet = ScalarJet::from_univariate(vs, order, 0, &{
                    let d = c.derivatives(t, order);
                    let mut fact = 1.0;
                    d.iter()
                        .enumerate()
                        .map(|(k, &dk)| {
                            if k > 0 {
                                fact *= k as f64;
                            }
                            dk / fact
                        })
                        .collect::<Vec<_>>()
                })?;
                let term = y[r - 3].mul(&z[alpha - p - 2])?.mul(&cjet)?;
                psi = psi.add(&term)?;
            }
            let corr = psi.mul(&y[0].recip()?)?.scale(psi_scale * theta.sin());
            add_scaled_row(&mut x, &frame[2], &corr)?;
            Ok(x)
        }
    };

    let sf = SpaceForm::de_sitter(n + 1, 1.0);
    let map = FrameChartMap {
        field: field.clone(),
        formula: Box::new(formula),
    };
    let normal_ref = {
        let field = field.clone();
        let cs = cs_data;
        move |u: &[f64]| -> DVector<f64> {
            let frame = field.frame_at(u[0]);
            let y = sphere_values(&u[2..2 + y_angles]);
            let z = sphere_values(&u[2 + y_angles..]);
            let mut xi = DVector::zeros(ambient);
            xi += frame.row(2).transpose() * (sth * u[1]);
            xi += frame.row(1).transpose() * (sth * y[0]);
            for (k, yk) in y.iter().enumerate().skip(1) {
                xi += frame.row(2 + k).transpose() * (sth * yk);
            }
            for (k, zk) in z.iter().enumerate() {
                xi += frame.row(p + 1 + k).transpose() * (cth * zk);
            }
            let psi: f64 = cs
                .iter()
                .map(|(r, alpha, c)| y[r - 3] * z[alpha - p - 2] * c.value(u[0]))
                .sum();
            xi += frame.row(2).transpose() * (2.0f64.sqrt() * theta.cos() * psi / y[0]);
            xi
        }
    };
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(Orientation::Align(Arc::new(normal_ref)))
        .with_label(format!("family-4.4(n={n}, p={p}, theta={theta:.6})"));

    let cot = (theta + PI / 4.0).cos() / (theta + PI / 4.0).sin();
    let tan = 1.0 / cot;
    let lambda = p as f64 * cot * cot + (n - p) as f64 * tan * tan;
    let eigenvalues = if p == n {
        vec![ExpectedEigenvalue { value: cot, algebraic: n, geometric: n - 2 }]
    } else {
        vec![
            ExpectedEigenvalue { value: cot, algebraic: p, geometric: p - 2 },
            ExpectedEigenvalue { value: -tan, algebraic: n - p, geometric: n - p },
        ]
    };
    Ok(CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "4.4".into(),
            n,
            p: Some(p),
            mu: None,
            theta: Some(theta),
            curvature: 1.0,
            index: 1,
            coefficient_spec: format!("B={:?}, C={:?}", params.bs, params.cs),
            t_range: Some(params.t_range),
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues,
            form: FormTag::III,
        }),
        expected_lambda: Some(lambda),
        expected_epsilon: Some(1.0),
    })
}
