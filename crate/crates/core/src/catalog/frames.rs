//! Moving-frame ODE systems `E' = M(t) E` preserving a prescribed indefinite
//! Gram matrix, with structure-preserving RK4 integration and dense output.
//!
//! Gram preservation holds exactly when the coefficient matrix is skew-adjoint
//! with respect to the target Gram matrix (`M Ĝ + Ĝ Mᵀ = 0`); this is validated
//! before integrating. The Gram targets of the frame families contain null
//! vectors, so drift is repaired by a Newton correction step `E ← (I - ½(S -
//! Ĝ)Ĝ⁻¹)E` rather than by a Gram–Schmidt sweep, which cannot renormalize a
//! null vector.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CatalogError;
use crate::jets::{self, ScalarJet};

/// A named scalar coefficient function of the frame parameter, in closed form
/// so that exact derivatives of any order are available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CoeffFn {
    Const(f64),
    /// Polynomial with ascending coefficients.
    Poly(Vec<f64>),
    /// `amp * cos(omega * t + phase)`.
    Harmonic { amp: f64, omega: f64, phase: f64 },
}

impl CoeffFn {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            CoeffFn::Const(c) => *c,
            CoeffFn::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * t + a),
            CoeffFn::Harmonic { amp, omega, phase } => amp * (omega * t + phase).cos(),
        }
    }

    /// Derivatives `f^(k)(t)` for `k = 0..=order`.
    pub fn derivatives(&self, t: f64, order: usize) -> Vec<f64> {
        match self {
            CoeffFn::Const(c) => {
                let mut d = vec![0.0; order + 1];
                d[0] = *c;
                d
            }
            CoeffFn::Poly(c) => {
                let mut out = Vec::with_capacity(order + 1);
                let mut coeffs: Vec<f64> = c.clone();
                for _ in 0..=order {
                    out.push(coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a));
                    coeffs = coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, &a)| k as f64 * a)
                        .collect();
                }
                out
            }
            CoeffFn::Harmonic { amp, omega, phase } => {
                let mut out = Vec::with_capacity(order + 1);
                let mut scale = *amp;
                for k in 0..=order {
                    let arg = omega * t + phase + k as f64 * std::f64::consts::FRAC_PI_2;
                    out.push(scale * arg.cos());
                    scale *= omega;
                    let _ = k;
                }
                out
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CoeffFn::Const(c) => *c == 0.0,
            CoeffFn::Poly(c) => c.iter().all(|&a| a == 0.0),
            CoeffFn::Harmonic { amp, .. } => *amp == 0.0,
        }
    }
}

/// One sparse entry of the coefficient matrix: `M[row][col] = scale * f(t)`
/// where `f` is either 1 or the named coefficient function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub row: usize,
    pub col: usize,
    pub scale: f64,
    pub coeff: Option<usize>,
}

/// Specification of a moving-frame ODE with a prescribed Gram target.
#[derive(Debug, Clone)]
pub struct FrameOdeSpec {
    pub dim: usize,
    /// Prescribed scalar products of the frame vectors.
    pub gram_target: DMatrix<f64>,
    /// Diagonal signs of the ambient pseudo-Euclidean metric.
    pub ambient_signs: Vec<f64>,
    pub coefficients: Vec<CoeffFn>,
    pub entries: Vec<MatrixEntry>,
}

impl FrameOdeSpec {
    pub fn coefficient_matrix(&self, t: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            let f = e.coeff.map_or(1.0, |k| self.coefficients[k].value(t));
            m[(e.row, e.col)] += e.scale * f;
        }
        m
    }

    /// `M(t), M'(t), ..., M^(order)(t)`.
    pub fn coefficient_matrix_derivatives(&self, t: f64, order: usize) -> Vec<DMatrix<f64>> {
        let mut out = vec![DMatrix::zeros(self.dim, self.dim); order + 1];
        for e in &self.entries {
            match e.coeff {
                None => out[0][(e.row, e.col)] += e.scale,
                Some(k) => {
                    let d = self.coefficients[k].derivatives(t, order);
                    for (j, dj) in d.iter().enumerate() {
                        out[j][(e.row, e.col)] += e.scale * dj;
                    }
                }
            }
        }
        out
    }

    /// Largest entry of `M Ĝ + Ĝ Mᵀ` over the sampled times, with its position.
    pub fn skew_defect(&self, t_samples: &[f64]) -> (f64, (usize, usize)) {
        let mut worst = 0.0;
        let mut pos = (0, 0);
        for &t in t_samples {
            let m = self.coefficient_matrix(t);
            let k = &m * &self.gram_target + &self.gram_target * m.transpose();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if k[(i, j)].abs() > worst {
                        worst = k[(i, j)].abs();
                        pos = (i, j);
                    }
                }
            }
        }
        (worst, pos)
    }

    pub fn validate_skew(&self, t_range: (f64, f64)) -> Result<(), CatalogError> {
        let samples: Vec<f64> = (0..7)
            .map(|k| t_range.0 + (t_range.1 - t_range.0) * k as f64 / 6.0)
            .collect();
        let scale = samples
            .iter()
            .map(|&t| self.coefficient_matrix(t).amax())
            .fold(1.0f64, f64::max);
        let (defect, (row, col)) = self.skew_defect(&samples);
        if defect > 1e-10 * scale {
            return Err(CatalogError::NotSkewAdjoint { row, col, defect });
        }
        Ok(())
    }

    fn gram_of(&self, frame: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = frame.clone();
        for c in 0..self.dim {
            let s = self.ambient_signs[c];
            for r in 0..self.dim {
                scaled[(r, c)] *= s;
            }
        }
        scaled * frame.transpose()
    }
}

/// Step control for the frame integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub step: f64,
    /// Restore the Gram constraint when the drift exceeds the trigger.
    pub project: bool,
    pub drift_trigger: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            step: 1e-3,
            project: true,
            drift_trigger: 1e-10,
        }
    }
}

/// Integrated frame with dense output.
///
/// Frame values between nodes come from cubic Hermite interpolation of the
/// RK4 solution; t-derivatives of any order follow from the ODE recurrence
/// `E^(k+1) = Σ C(k,i) M^(i) E^(k-i)`, so jets of frame-based immersions are
/// as accurate as the frame values themselves.
#[derive(Debug, Clone)]
pub struct FrameField {
    spec: FrameOdeSpec,
    t_grid: Vec<f64>,
    frames: Vec<DMatrix<f64>>,
    derivs: Vec<DMatrix<f64>>,
    drift: f64,
}

impl FrameField {
    pub fn spec(&self) -> &FrameOdeSpec {
        &self.spec
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_grid[0], *self.t_grid.last().unwrap())
    }

    /// Max Gram drift observed at the integration nodes.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    fn segment(&self, t: f64) -> usize {
        match self
            .t_grid
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(k) => k.min(self.t_grid.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.t_grid.len() - 2),
        }
    }

    /// Frame matrix at time `t` (rows are the frame vectors).
    pub fn frame_at(&self, t: f64) -> DMatrix<f64> {
        let k = self.segment(t);
        let (t0, t1) = (self.t_grid[k], self.t_grid[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (e0, e1) = (&self.frames[k], &self.frames[k + 1]);
        let (d0, d1) = (&self.derivs[k], &self.derivs[k + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        e0 * h00 + d0 * (h10 * h) + e1 * h01 + d1 * (h11 * h)
    }

    /// Scaled derivatives `E^(k)(t) / k!` for `k = 0..=order`.
    pub fn frame_derivatives(&self, t: f64, order: usize) -> Vec<DMatrix<f64>> {
        let e0 = self.frame_at(t);
        let m = self.spec.coefficient_matrix_derivatives(t, order.saturating_sub(1));
        let mut unscaled = Vec::with_capacity(order + 1);
        unscaled.push(e0);
        for k in 0..order {
            // E^(k+1) = Σ_{i=0..k} C(k, i) M^(i) E^(k-i)
            let mut next = DMatrix::zeros(self.spec.dim, self.spec.dim);
            let mut binom = 1.0;
            for i in 0..=k {
                next += &m[i] * &unscaled[k - i] * binom;
                binom *= (k - i) as f64 / (i as f64 + 1.0);
            }
            unscaled.push(next);
        }
        let mut fact = 1.0;
        for (k, mat) in unscaled.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *mat /= fact;
        }
        unscaled
    }

    /// Jet of each frame component in the chart variables, with the frame
    /// parameter on axis 0.
    pub fn component_jets(
        &self,
        t: f64,
        vars: usize,
        order: usize,
    ) -> jets::Result<Vec<Vec<ScalarJet>>> {
        let derivs = self.frame_derivatives(t, order);
        let dim = self.spec.dim;
        let mut out = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut comps = Vec::with_capacity(dim);
            for c in 0..dim {
                let series: Vec<f64> = derivs.iter().map(|d| d[(i, c)]).collect();
                comps.push(ScalarJet::from_univariate(vars, order, 0, &series)?);
            }
            out.push(comps);
        }
        Ok(out)
    }
}

/// Newton correction restoring `Gram(E) = Ĝ`.
fn project_to_gram(
    spec: &FrameOdeSpec,
    frame: &mut DMatrix<f64>,
    gram_inv: &DMatrix<f64>,
) -> Result<(), CatalogError> {
    for _ in 0..8 {
        let d = spec.gram_of(frame) - &spec.gram_target;
        let drift = d.amax();
        if drift <= 1e-14 * spec.gram_target.amax().max(1.0) {
            return Ok(());
        }
        let correction = DMatrix::identity(spec.dim, spec.dim) - (d * gram_inv).scale(0.5);
        *frame = correction * frame.clone();
    }
    let drift = (spec.gram_of(frame) - &spec.gram_target).amax();
    if drift > 1e-10 {
        return Err(CatalogError::ProjectionFailure { drift });
    }
    Ok(())
}

/// Integrates `E' = M(t) E` over `t_range` with classical RK4 and dense
/// output, restoring the Gram constraint whenever drift exceeds the trigger.
pub fn integrate_frame(
    spec: &FrameOdeSpec,
    t_range: (f64, f64),
    initial: &DMatrix<f64>,
    opts: &IntegrateOptions,
) -> Result<FrameField, CatalogError> {
    assert!(t_range.1 > t_range.0, "time range must be increasing");
    spec.validate_skew(t_range)?;
    let init_defect = (spec.gram_of(initial) - &spec.gram_target).amax();
    if init_defect > 1e-12 * spec.gram_target.amax().max(1.0) {
        return Err(CatalogError::InitialFrameMismatch {
            defect: init_defect,
        });
    }
    let gram_inv = spec
        .gram_target
        .clone()
        .lu()
        .try_inverse()
        .ok_or(CatalogError::DegenerateGramTarget)?;

    let span = t_range.1 - t_range.0;
    let steps = (span / opts.step).ceil().max(1.0) as usize;
    let h = span / steps as f64;

    let mut t_grid = Vec::with_capacity(steps + 1);
    let mut frames = Vec::with_capacity(steps + 1);
    let mut derivs = Vec::with_capacity(steps + 1);

    let mut t = t_range.0;
    let mut e = initial.clone();
    let mut max_drift: f64 = 0.0;
    t_grid.push(t);
    derivs.push(spec.coefficient_matrix(t) * &e);
    frames.push(e.clone());

    for _ in 0..steps {
        let k1 = spec.coefficient_matrix(t) * &e;
        let mid = spec.coefficient_matrix(t + 0.5 * h);
        let k2 = &mid * (&e + &k1 * (0.5 * h));
        let k3 = &mid * (&e + &k2 * (0.5 * h));
        let k4 = spec.coefficient_matrix(t + h) * (&e + &k3 * h);
        e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;

        let drift = (spec.gram_of(&e) - &spec.gram_target).amax();
        max_drift = max_drift.max(drift);
        if opts.project && drift > opts.drift_trigger {
            project_to_gram(spec, &mut e, &gram_inv)?;
        }

        t_grid.push(t);
        derivs.push(spec.coefficient_matrix(t) * &e);
        frames.push(e.clone());
    }

    let final_drift = frames
        .iter()
        .map(|f| (spec.gram_of(f) - &spec.gram_target).amax())
        .fold(0.0f64, f64::max);
    if opts.project && final_drift > 1e-8 {
        return Err(CatalogError::GramDrift { drift: final_drift });
    }

    Ok(FrameField {
        spec: spec.clone(),
        t_grid,
        frames,
        derivs,
        drift: if opts.project { final_drift } else { max_drift },
    })
}
