//! PMCV condition verification and classification data.
//!
//! A hypersurface has proper mean curvature vector field when
//! `A(∇H) = -(n/2) ε H ∇H` and `ΔH + ε H tr A² = λ H` for a constant `λ`.
//! This module measures those conditions on sample grids, estimates `λ`,
//! checks isoparametricity (constant characteristic polynomial), and
//! evaluates the closed-form mean-curvature data of isoparametric
//! two-curvature hypersurfaces together with the bound `H² <= ελ/n`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{CatalogInstance, ExpectedSpectrum, InstanceDescriptor};
use crate::geometry::{self, extrinsic_data, ExtrinsicOptions, GeomError, Immersion};
use crate::linalg::{
    char_poly, eigen_structure, FormTag, LinalgError, ShapeSpectrum, SpectrumOptions,
};
use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("need at least {required} sample points, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    #[error("samples mix near-minimal points (|H| < {tol:.1e}) with non-minimal ones")]
    MixedMinimal { tol: f64 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("an imaginary principal-curvature pair cannot occur in odd dimension n = {n}")]
    ParityViolation { n: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Tolerances for the verification pipeline, all configurable.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub extrinsic: ExtrinsicOptions,
    pub spectrum: SpectrumOptions,
    /// `max |H| < minimal_tol` declares a minimal hypersurface.
    pub minimal_tol: f64,
    /// λ constancy: spread below `lambda_spread_tol * (1 + |λ|)`.
    pub lambda_spread_tol: f64,
    /// Isoparametric: coefficient spread below `isoparametric_tol * (1 + |coef|)`.
    pub isoparametric_tol: f64,
    /// Budget for Codazzi/Gauss/Weingarten and PMCV residuals.
    pub residual_tol: f64,
    /// Budget for the quadric constraint.
    pub quadric_tol: f64,
    /// Tolerance for spectrum and closed-form cross-checks.
    pub match_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            extrinsic: ExtrinsicOptions::default(),
            spectrum: SpectrumOptions::default(),
            minimal_tol: DEFAULT_TOL,
            lambda_spread_tol: 1e-5,
            isoparametric_tol: 1e-6,
            residual_tol: 1e-6,
            quadric_tol: DEFAULT_TOL,
            match_tol: 1e-6,
        }
    }
}

/// Rectangular sampling grid over a chart domain.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    /// Fraction of each axis kept away from the boundary (finite-difference
    /// stencils need room).
    pub inset: f64,
}

impl GridSpec {
    pub fn uniform(count: usize, dim: usize) -> GridSpec {
        GridSpec {
            counts: vec![count; dim],
            inset: 0.05,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn points(&self, domain: &[(f64, f64)]) -> Vec<Vec<f64>> {
        assert_eq!(self.counts.len(), domain.len(), "grid/domain rank mismatch");
        let axes: Vec<Vec<f64>> = domain
            .iter()
            .zip(&self.counts)
            .map(|(&(lo, hi), &count)| {
                let span = hi - lo;
                let a = lo + self.inset * span;
                let b = hi - self.inset * span;
                if count <= 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..count)
                        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

// ---------------------------------------------------------------------------
// PMCV conditions.
// ---------------------------------------------------------------------------

/// Residual of the first PMCV condition at `u`:
/// `|A(∇H) + (n/2) ε H ∇H|_G`, together with `|∇H|_G` (indefinite norms taken
/// as the square root of the absolute self-product).
pub fn pmcv_condition1(imm: &Immersion, u: &[f64], opts: &AnalysisOptions) -> Result<(f64, f64)> {
    let n = imm.chart_dim() as f64;
    let data = extrinsic_data(imm, u, &opts.extrinsic)?;
    let h_field = geometry::mean_curvature_field(imm, &opts.extrinsic);
    let grad = geometry::gradient(imm, &h_field, u)?;
    let v = &data.shape_operator * &grad + &grad * (0.5 * n * data.epsilon * data.mean_curvature);
    let g = data.metric.entries();
    let norm_g = |w: &DVector<f64>| (w.transpose() * g * w)[(0, 0)].abs().sqrt();
    Ok((norm_g(&v), norm_g(&grad)))
}

/// Per-point ingredients of the second PMCV condition.
#[derive(Debug, Clone, Copy)]
pub struct LambdaSample {
    pub mean_curvature: f64,
    pub laplacian_h: f64,
    pub trace_a_squared: f64,
    pub epsilon: f64,
}

impl LambdaSample {
    /// `λ = (ΔH + ε H tr A²) / H`.
    pub fn lambda(&self) -> f64 {
        (self.laplacian_h + self.epsilon * self.mean_curvature * self.trace_a_squared)
            / self.mean_curvature
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum LambdaEstimate {
    /// `max |H|` below the minimal threshold; λ is unconstrained.
    Minimal,
    Proper { lambda: f64, spread: f64 },
}

/// Aggregates per-point λ values; points must be uniformly non-minimal or
/// uniformly minimal.
pub fn lambda_from_samples(samples: &[LambdaSample], minimal_tol: f64) -> Result<LambdaEstimate> {
    if samples.len() < 2 {
        return Err(AnalysisError::InsufficientSamples {
            required: 2,
            got: samples.len(),
        });
    }
    let max_h = samples
        .iter()
        .map(|s| s.mean_curvature.abs())
        .fold(0.0f64, f64::max);
    if max_h < minimal_tol {
        return Ok(LambdaEstimate::Minimal);
    }
    if samples.iter().any(|s| s.mean_curvature.abs() < minimal_tol) {
        return Err(AnalysisError::MixedMinimal { tol: minimal_tol });
    }
    let lambdas: Vec<f64> = samples.iter().map(LambdaSample::lambda).collect();
    let mean = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    let max = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LambdaEstimate::Proper {
        lambda: mean,
        spread: max - min,
    })
}

/// λ estimate over explicit sample points.
pub fn estimate_lambda(
    imm: &Immersion,
    points: &[Vec<f64>],
    opts: &AnalysisOptions,
) -> Result<LambdaEstimate> {
    let samples: Result<Vec<LambdaSample>> = points
        .par_iter()
        .map(|u| lambda_sample(imm, u, opts))
        .collect();
    lambda_from_samples(&samples?, opts.minimal_tol)
}

fn lambda_sample(imm: &Immersion, u: &[f64], opts: &AnalysisOptions) -> Result<LambdaSample> {
    let data = extrinsic_data(imm, u, &opts.extrinsic)?;
    let h_field = geometry::mean_curvature_field(imm, &opts.extrinsic);
    let delta_h = geometry::laplace_beltrami(imm, &h_field, u)?;
    Ok(LambdaSample {
        mean_curvature: data.mean_curvature,
        laplacian_h: delta_h,
        trace_a_squared: data.trace_a_squared(),
        epsilon: data.epsilon,
    })
}

/// Constancy of the characteristic polynomial across sample points.
#[derive(Debug, Clone, Serialize)]
pub struct IsoparametricReport {
    pub isoparametric: bool,
    /// Largest coefficient spread relative to `1 + |coef|`.
    pub relative_spread: f64,
}

pub fn isoparametric_check(
    imm: &Immersion,
    points: &[Vec<f64>],
    opts: &AnalysisOptions,
) -> Result<IsoparametricReport> {
    if points.len() < 2 {
        return Err(AnalysisError::InsufficientSamples {
            required: 2,
            got: points.len(),
        });
    }
    let polys: Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|u| {
            let data = extrinsic_data(imm, u, &opts.extrinsic)?;
            Ok(char_poly(&data.shape_operator)?)
        })
        .collect();
    Ok(char_poly_constancy(&polys?, opts.isoparametric_tol))
}

pub(crate) fn char_poly_constancy(polys: &[Vec<f64>], tol: f64) -> IsoparametricReport {
    let degree = polys[0].len();
    let mut relative_spread = 0.0f64;
    for k in 0..degree {
        let max = polys.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let min = polys.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let scale = 1.0 + max.abs().max(min.abs());
        relative_spread = relative_spread.max((max - min) / scale);
    }
    IsoparametricReport {
        isoparametric: relative_spread < tol,
        relative_spread,
    }
}

// ---------------------------------------------------------------------------
// Curvature bound (mean curvature vs the PMCV constant).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TheoremStatus {
    Pass { margin: f64, detail: String },
    Fail { margin: f64, detail: String },
    NotApplicable { reason: String },
}

impl TheoremStatus {
    pub fn passed(&self) -> bool {
        matches!(self, TheoremStatus::Pass { .. })
    }
    pub fn applicable(&self) -> bool {
        !matches!(self, TheoremStatus::NotApplicable { .. })
    }
}

/// Checks `H² <= ελ/n` (with `ελ > 0`) for one or two distinct real principal
/// curvatures — equality exactly when all principal curvatures agree — and
/// `H² > ελ/n` for an imaginary pair.
pub fn curvature_bound_check(
    spectrum: &ShapeSpectrum,
    lambda: f64,
    epsilon: f64,
    mean_curvature: f64,
    tol: f64,
) -> TheoremStatus {
    let n = spectrum.dim() as f64;
    let h2 = mean_curvature * mean_curvature;
    let bound = epsilon * lambda / n;
    if mean_curvature.abs() < tol {
        return TheoremStatus::NotApplicable {
            reason: "minimal hypersurface".into(),
        };
    }
    let real = spectrum.real_eigenvalues.len();
    let pairs = spectrum.complex_pairs.len();
    if real + pairs > 2 || (pairs > 0 && real > 0) || pairs > 1 {
        return TheoremStatus::NotApplicable {
            reason: format!(
                "{real} real eigenvalues and {pairs} pairs exceed the two-curvature hypothesis"
            ),
        };
    }
    if pairs == 1 {
        let margin = h2 - bound;
        return if margin > -tol {
            TheoremStatus::Pass {
                margin,
                detail: format!("imaginary pair: H² = {h2:.12} > ελ/n = {bound:.12}"),
            }
        } else {
            TheoremStatus::Fail {
                margin,
                detail: format!("imaginary pair but H² = {h2:.12} <= ελ/n = {bound:.12}"),
            }
        };
    }
    if epsilon * lambda <= 0.0 {
        return TheoremStatus::Fail {
            margin: epsilon * lambda,
            detail: format!("ελ = {:.12} must be positive", epsilon * lambda),
        };
    }
    let margin = bound - h2;
    if margin < -tol {
        return TheoremStatus::Fail {
            margin,
            detail: format!("H² = {h2:.12} exceeds ελ/n = {bound:.12}"),
        };
    }
    let equality = margin.abs() <= tol;
    let single = real == 1;
    if equality != single {
        return TheoremStatus::Fail {
            margin,
            detail: format!(
                "equality holds iff the principal curvatures coincide (equality: {equality}, distinct eigenvalues: {real})"
            ),
        };
    }
    TheoremStatus::Pass {
        margin,
        detail: if single {
            format!("equality case: H² = ελ/n = {bound:.12}")
        } else {
            format!("strict: H² = {h2:.12} < ελ/n = {bound:.12}")
        },
    }
}

// ---------------------------------------------------------------------------
// Closed forms for isoparametric two-curvature hypersurfaces.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureKind {
    Real,
    Imaginary,
}

/// One sign branch of the real-case closed forms.
#[derive(Debug, Clone, Serialize)]
pub struct RealBranch {
    pub sign: i8,
    pub h_squared: f64,
    pub mu_squared: f64,
    pub nu_squared: f64,
    /// `μ² = ν²` forced onto `μ = ν` by the sign constraint `μν = -cε`,
    /// contradicting distinctness (happens for `cε < 0`).
    pub equal_curvatures: bool,
    /// `H² = 0` contradicts the non-minimal hypothesis.
    pub minimal_contradiction: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImaginaryValues {
    pub h_squared: f64,
    pub gamma_squared: f64,
    pub tau_squared: f64,
}

/// Closed-form data for a non-minimal isoparametric hypersurface with two
/// distinct principal curvatures `μ` (multiplicity `l`) and `ν`.
#[derive(Debug, Clone, Serialize)]
pub struct TwoCurvatureData {
    pub n: usize,
    pub l: usize,
    pub c: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub kind: CurvatureKind,
    /// Real kind: `ελ - 2√(l(n-l))|c|`; imaginary kind: `-ncε - |ελ|`.
    pub feasibility_margin: f64,
    pub branches: Vec<RealBranch>,
    pub imaginary: Option<ImaginaryValues>,
    /// Set when `ελ = n|c|` to round-off; names the applicable branch.
    pub special_case: Option<String>,
}

/// Real-case closed forms
/// `H² = [nελ - 4l(n-l)cε ± (2l-n)√(λ² - 4l(n-l)c²)] / (2n²)`,
/// `μ² = [ελ ± √(λ² - 4l(n-l)c²)] / (2l)`,
/// `ν² = [ελ ∓ √(λ² - 4l(n-l)c²)] / (2(n-l))`,
/// feasible for `ελ >= 2√(l(n-l))|c|`; imaginary case
/// `H² = (ελ - ncε) / (2n)` with `cε < 0`, `|ελ| < -ncε` and `n` even.
pub fn two_curvature_closed_forms(
    n: usize,
    l: usize,
    c: f64,
    epsilon: f64,
    lambda: f64,
    kind: CurvatureKind,
) -> Result<TwoCurvatureData> {
    if c == 0.0 {
        return Err(AnalysisError::InvalidParams(
            "curvature c must be nonzero".into(),
        ));
    }
    if epsilon.abs() != 1.0 {
        return Err(AnalysisError::InvalidParams("epsilon must be ±1".into()));
    }
    let nf = n as f64;
    let el = epsilon * lambda;
    let ce = c * epsilon;
    match kind {
        CurvatureKind::Imaginary => {
            if n % 2 == 1 {
                return Err(AnalysisError::ParityViolation { n });
            }
            if l != n / 2 {
                return Err(AnalysisError::InvalidParams(format!(
                    "an imaginary pair has multiplicity n/2 = {}, got l = {l}",
                    n / 2
                )));
            }
            if ce >= 0.0 {
                return Err(AnalysisError::Infeasible(format!(
                    "imaginary kind requires cε < 0, got cε = {ce}"
                )));
            }
            if el.abs() >= -nf * ce {
                return Err(AnalysisError::Infeasible(format!(
                    "imaginary kind requires |ελ| < -ncε ({:.6} >= {:.6})",
                    el.abs(),
                    -nf * ce
                )));
            }
            let h2 = (el - nf * ce) / (2.0 * nf);
            let tau2 = (-nf * ce - el) / (2.0 * nf);
            Ok(TwoCurvatureData {
                n,
                l,
                c,
                epsilon,
                lambda,
                kind,
                feasibility_margin: -nf * ce - el.abs(),
                branches: Vec::new(),
                imaginary: Some(ImaginaryValues {
                    h_squared: h2,
                    gamma_squared: h2,
                    tau_squared: tau2,
                }),
                special_case: None,
            })
        }
        CurvatureKind::Real => {
            if l == 0 || l >= n {
                return Err(AnalysisError::InvalidParams(format!(
                    "two distinct real curvatures need 1 <= l <= n-1, got l = {l}, n = {n}"
                )));
            }
            let lf = l as f64;
            let mf = (n - l) as f64;
            let threshold = 2.0 * (lf * mf).sqrt() * c.abs();
            let margin = el - threshold;
            if margin < 0.0 {
                return Err(AnalysisError::Infeasible(format!(
                    "infeasible: ελ < 2√(l(n-l))|c| ({el:.6} < {threshold:.6})"
                )));
            }
            let disc = (lambda * lambda - 4.0 * lf * mf * c * c).max(0.0).sqrt();
            let mut branches = Vec::new();
            for &sign in &[1i8, -1i8] {
                let s = sign as f64;
                let h2 =
                    (nf * el - 4.0 * lf * mf * ce + s * (2.0 * lf - nf) * disc) / (2.0 * nf * nf);
                let mu2 = (el + s * disc) / (2.0 * lf);
                let nu2 = (el - s * disc) / (2.0 * mf);
                let equal = (mu2 - nu2).abs() <= 1e-12 * (1.0 + mu2.abs()) && ce < 0.0;
                let minimal = h2.abs() <= 1e-12 * (1.0 + el.abs());
                branches.push(RealBranch {
                    sign,
                    h_squared: h2,
                    mu_squared: mu2,
                    nu_squared: nu2,
                    equal_curvatures: equal,
                    minimal_contradiction: minimal,
                });
            }
            let special = if (el - nf * c.abs()).abs() <= 1e-12 * (1.0 + el.abs()) {
                let valid: Vec<String> = branches
                    .iter()
                    .filter(|b| !b.equal_curvatures && !b.minimal_contradiction)
                    .map(|b| format!("{:+}", b.sign))
                    .collect();
                Some(if ce > 0.0 {
                    format!(
                        "ελ = n|c| with cε > 0: μ² = ν² = cε on branch {}",
                        valid.join(",")
                    )
                } else {
                    format!(
                        "ελ = n|c| with cε < 0: μ² = -(n-l)cε/l on branch {}",
                        valid.join(",")
                    )
                })
            } else {
                None
            };
            Ok(TwoCurvatureData {
                n,
                l,
                c,
                epsilon,
                lambda,
                kind,
                feasibility_margin: margin,
                branches,
                imaginary: None,
                special_case: special,
            })
        }
    }
}

/// Signed curvatures from a squared closed form: the assignment satisfying
/// `μν = -cε` (unique up to the global flip tied to the normal).
pub fn signed_curvatures(mu_squared: f64, c: f64, epsilon: f64) -> (f64, f64) {
    let mu = mu_squared.max(0.0).sqrt();
    let nu = -c * epsilon / mu;
    (mu, nu)
}

/// `c + ε μ ν` (vanishes for isoparametric two-curvature hypersurfaces).
pub fn cartan_identity_residual(mu: f64, nu: f64, c: f64, epsilon: f64) -> f64 {
    c + epsilon * mu * nu
}

// ---------------------------------------------------------------------------
// Classification lookup for Lorentzian type II / III hypersurfaces.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LorentzAmbient {
    /// `H^{n+1}_1(-1)`.
    AntiDeSitter,
    /// `S^{n+1}_1(+1)`.
    DeSitter,
}

/// Construction parameters for the catalog instance congruent to a
/// non-minimal type II/III PMCV hypersurface with the given data.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationResult {
    pub ambient: LorentzAmbient,
    pub form: FormTag,
    pub p: usize,
    /// `μ²` in the anti-de Sitter case, `cot²(θ + π/4)` in the de Sitter one;
    /// both branches when `l < n`.
    pub parameter_squared: Vec<f64>,
}

pub fn classify_lorentzian_pmcv(
    n: usize,
    l: usize,
    lambda: f64,
    ambient: LorentzAmbient,
    form: FormTag,
) -> Result<ClassificationResult> {
    if n < 3 {
        return Err(AnalysisError::InvalidParams(format!(
            "classification requires n >= 3, got {n}"
        )));
    }
    let min_l = match form {
        FormTag::II => 2,
        FormTag::III => 3,
        other => {
            return Err(AnalysisError::InvalidParams(format!(
                "classification covers forms II and III, got {other}"
            )))
        }
    };
    if l < min_l || l > n {
        return Err(AnalysisError::InvalidParams(format!(
            "form {form} requires {min_l} <= l <= n, got l = {l}"
        )));
    }
    if l == n {
        if lambda <= 0.0 {
            return Err(AnalysisError::Infeasible(format!(
                "l = n requires λ > 0, got {lambda}"
            )));
        }
        return Ok(ClassificationResult {
            ambient,
            form,
            p: n,
            parameter_squared: vec![lambda / n as f64],
        });
    }
    let lf = l as f64;
    let mf = (n - l) as f64;
    let threshold = 2.0 * (lf * mf).sqrt();
    if lambda < threshold {
        return Err(AnalysisError::Infeasible(format!(
            "infeasible: λ < 2√(l(n-l)) ({lambda:.6} < {threshold:.6})"
        )));
    }
    let disc = (lambda * lambda - 4.0 * lf * mf).max(0.0).sqrt();
    Ok(ClassificationResult {
        ambient,
        form,
        p: l,
        parameter_squared: vec![(lambda + disc) / (2.0 * lf), (lambda - disc) / (2.0 * lf)],
    })
}

// ---------------------------------------------------------------------------
// Aggregated report.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// "pass", "fail" or "skip".
    pub status: String,
    pub margin: f64,
}

impl Check {
    fn pass(name: &str, margin: f64) -> Check {
        Check {
            name: name.into(),
            status: "pass".into(),
            margin,
        }
    }
    fn fail(name: &str, margin: f64) -> Check {
        Check {
            name: name.into(),
            status: "fail".into(),
            margin,
        }
    }
    fn gate(name: &str, ok: bool, margin: f64) -> Check {
        if ok {
            Check::pass(name, margin)
        } else {
            Check::fail(name, margin)
        }
    }
    fn skip(name: &str) -> Check {
        Check {
            name: name.into(),
            status: "skip".into(),
            margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    pub quadric_max: f64,
    pub codazzi_max: f64,
    pub gauss_max: f64,
    pub weingarten_max: f64,
    pub eq1_max: f64,
    pub grad_h_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtrinsicSummary {
    pub epsilon: f64,
    pub metric_index: usize,
    pub mean_curvature_min: f64,
    pub mean_curvature_max: f64,
    pub mean_curvature_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub value: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<SpectrumEntry>,
    pub complex_pairs: Vec<(f64, f64, usize)>,
    pub form: FormTag,
    pub char_poly: Vec<f64>,
}

/// Per-immersion PMCV aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct PmcvReport {
    pub lambda: Option<f64>,
    pub spread: Option<f64>,
    pub minimal: bool,
    pub isoparametric: bool,
    pub char_poly_spread: f64,
    pub residuals: ResidualSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremChecks {
    pub t33: TheoremStatus,
    pub t35: TheoremStatus,
    pub t45_t46: TheoremStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub instance: InstanceDescriptor,
    pub grid: GridSpec,
    pub extrinsic_summary: ExtrinsicSummary,
    pub spectrum: SpectrumReport,
    pub pmcv: PmcvReport,
    pub theorems: TheoremChecks,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Per-point rows `(u, H, char-poly coefficients)` for grid dumps.
    #[serde(skip)]
    pub point_rows: Vec<PointRow>,
}

#[derive(Debug, Clone)]
pub struct PointRow {
    pub point: Vec<f64>,
    pub mean_curvature: f64,
    pub char_poly: Vec<f64>,
}

struct PointRecord {
    row: PointRow,
    sample: LambdaSample,
    quadric: f64,
    codazzi: f64,
    gauss: f64,
    weingarten: f64,
    eq1: f64,
    grad_h: f64,
}

fn analyze_point(imm: &Immersion, u: &[f64], opts: &AnalysisOptions) -> Result<PointRecord> {
    let data = extrinsic_data(imm, u, &opts.extrinsic)?;
    let quadric = geometry::quadric_residual(imm, u)?;
    let (codazzi, gauss) = geometry::gauss_codazzi_residuals(imm, u, &opts.extrinsic)?;
    let weingarten = geometry::weingarten_residual(imm, u, &opts.extrinsic)?;
    let (eq1, grad_h) = pmcv_condition1(imm, u, opts)?;
    let h_field = geometry::mean_curvature_field(imm, &opts.extrinsic);
    let delta_h = geometry::laplace_beltrami(imm, &h_field, u)?;
    Ok(PointRecord {
        row: PointRow {
            point: u.to_vec(),
            mean_curvature: data.mean_curvature,
            char_poly: char_poly(&data.shape_operator)?,
        },
        sample: LambdaSample {
            mean_curvature: data.mean_curvature,
            laplacian_h: delta_h,
            trace_a_squared: data.trace_a_squared(),
            epsilon: data.epsilon,
        },
        quadric: quadric.abs(),
        codazzi,
        gauss,
        weingarten,
        eq1,
        grad_h,
    })
}

fn install_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("PMCV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map(|pool| pool.install(f))
            .expect("thread pool"),
        _ => f(),
    }
}

/// Runs the whole verification pipeline for a catalog instance on a grid.
pub fn full_report(
    instance: &CatalogInstance,
    grid: &GridSpec,
    opts: &AnalysisOptions,
) -> Result<FullReport> {
    let imm = &instance.immersion;
    let points = grid.points(imm.domain());
    if points.len() < 2 {
        return Err(AnalysisError::InsufficientSamples {
            required: 2,
            got: points.len(),
        });
    }
    let records: Result<Vec<PointRecord>> = install_pool(|| {
        points
            .par_iter()
            .map(|u| analyze_point(imm, u, opts))
            .collect()
    });
    let records = records?;

    let fold_max = |f: fn(&PointRecord) -> f64| records.iter().map(f).fold(0.0f64, f64::max);
    let residuals = ResidualSummary {
        quadric_max: fold_max(|r| r.quadric),
        codazzi_max: fold_max(|r| r.codazzi),
        gauss_max: fold_max(|r| r.gauss),
        weingarten_max: fold_max(|r| r.weingarten),
        eq1_max: fold_max(|r| r.eq1),
        grad_h_max: fold_max(|r| r.grad_h),
    };

    let hs: Vec<f64> = records.iter().map(|r| r.sample.mean_curvature).collect();
    let h_min = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h_mean = hs.iter().sum::<f64>() / hs.len() as f64;
    let epsilon = records[0].sample.epsilon;

    // Representative spectrum at the center-most grid point.
    let mid = &points[points.len() / 2];
    let mid_data = extrinsic_data(imm, mid, &opts.extrinsic)?;
    let spectrum = eigen_structure(&mid_data.shape_operator, &opts.spectrum)?;
    let metric_index = mid_data.metric.signature().index;

    let samples: Vec<LambdaSample> = records.iter().map(|r| r.sample).collect();
    let lambda_est = lambda_from_samples(&samples, opts.minimal_tol)?;
    let polys: Vec<Vec<f64>> = records.iter().map(|r| r.row.char_poly.clone()).collect();
    let iso = char_poly_constancy(&polys, opts.isoparametric_tol);

    let (lambda, spread, minimal) = match lambda_est {
        LambdaEstimate::Minimal => (None, None, true),
        LambdaEstimate::Proper { lambda, spread } => (Some(lambda), Some(spread), false),
    };

    let not_applicable = || TheoremStatus::NotApplicable {
        reason: "minimal hypersurface".into(),
    };
    let t33 = match lambda {
        Some(l) => curvature_bound_check(&spectrum, l, epsilon, h_mean, opts.match_tol),
        None => not_applicable(),
    };
    let t35 = match lambda {
        Some(l) => cross_check_closed_forms(&spectrum, l, epsilon, h_mean, imm, opts),
        None => not_applicable(),
    };
    let t45 = match lambda {
        Some(l) => classification_cross_check(&spectrum, l, imm, opts),
        None => not_applicable(),
    };

    let mut checks = Vec::new();
    checks.push(Check::gate(
        "quadric_constraint",
        residuals.quadric_max < opts.quadric_tol,
        opts.quadric_tol - residuals.quadric_max,
    ));
    checks.push(Check::gate(
        "codazzi_residual",
        residuals.codazzi_max < opts.residual_tol,
        opts.residual_tol - residuals.codazzi_max,
    ));
    checks.push(Check::gate(
        "gauss_residual",
        residuals.gauss_max < opts.residual_tol,
        opts.residual_tol - residuals.gauss_max,
    ));
    checks.push(Check::gate(
        "weingarten_consistency",
        residuals.weingarten_max < opts.residual_tol,
        opts.residual_tol - residuals.weingarten_max,
    ));
    checks.push(Check::gate(
        "pmcv_condition1",
        residuals.eq1_max < opts.residual_tol && residuals.grad_h_max < opts.residual_tol,
        opts.residual_tol - residuals.eq1_max.max(residuals.grad_h_max),
    ));
    match (lambda, spread) {
        (Some(l), Some(s)) => {
            let budget = opts.lambda_spread_tol * (1.0 + l.abs());
            checks.push(Check::gate("lambda_constant", s < budget, budget - s));
        }
        _ => checks.push(Check::skip("lambda_constant")),
    }
    checks.push(Check::gate(
        "isoparametric",
        iso.isoparametric,
        opts.isoparametric_tol - iso.relative_spread,
    ));

    if let Some(expected) = &instance.expected_spectrum {
        let (ok, margin) = spectrum_matches(&spectrum, expected, opts.match_tol);
        checks.push(Check::gate("expected_spectrum", ok, margin));
    } else {
        checks.push(Check::skip("expected_spectrum"));
    }
    match (instance.expected_lambda, lambda) {
        (Some(want), Some(got)) => {
            let budget = opts.lambda_spread_tol * (1.0 + want.abs());
            checks.push(Check::gate(
                "expected_lambda",
                (got - want).abs() < budget,
                budget - (got - want).abs(),
            ));
        }
        (None, None) => checks.push(Check::pass("expected_lambda", 0.0)),
        (None, Some(_)) => checks.push(Check::skip("expected_lambda")),
        (Some(_), None) => checks.push(Check::fail("expected_lambda", -1.0)),
    }
    for (name, status) in [("t33", &t33), ("t35", &t35), ("t45_t46", &t45)] {
        checks.push(match status {
            TheoremStatus::Pass { margin, .. } => Check::pass(name, *margin),
            TheoremStatus::Fail { margin, .. } => Check::fail(name, *margin),
            TheoremStatus::NotApplicable { .. } => Check::skip(name),
        });
    }

    let passed = checks.iter().all(|c| c.status != "fail");

    Ok(FullReport {
        instance: instance.descriptor.clone(),
        grid: grid.clone(),
        extrinsic_summary: ExtrinsicSummary {
            epsilon,
            metric_index,
            mean_curvature_min: h_min,
            mean_curvature_max: h_max,
            mean_curvature_mean: h_mean,
        },
        spectrum: SpectrumReport {
            eigenvalues: spectrum
                .real_eigenvalues
                .iter()
                .map(|e| SpectrumEntry {
                    value: e.value,
                    algebraic: e.algebraic,
                    geometric: e.geometric,
                })
                .collect(),
            complex_pairs: spectrum
                .complex_pairs
                .iter()
                .map(|p| (p.gamma, p.tau, p.multiplicity))
                .collect(),
            form: spectrum.form_tag,
            char_poly: spectrum.char_poly.clone(),
        },
        pmcv: PmcvReport {
            lambda,
            spread,
            minimal,
            isoparametric: iso.isoparametric,
            char_poly_spread: iso.relative_spread,
            residuals,
        },
        theorems: TheoremChecks {
            t33,
            t35,
            t45_t46: t45,
        },
        checks,
        passed,
        point_rows: records.into_iter().map(|r| r.row).collect(),
    })
}

fn spectrum_matches(
    spectrum: &ShapeSpectrum,
    expected: &ExpectedSpectrum,
    tol: f64,
) -> (bool, f64) {
    if spectrum.form_tag != expected.form
        || spectrum.real_eigenvalues.len() != expected.eigenvalues.len()
        || !spectrum.complex_pairs.is_empty()
    {
        return (false, -1.0);
    }
    let mut worst: f64 = 0.0;
    let mut used = vec![false; expected.eigenvalues.len()];
    for e in &spectrum.real_eigenvalues {
        let mut matched = false;
        for (k, want) in expected.eigenvalues.iter().enumerate() {
            if used[k] {
                continue;
            }
            if (e.value - want.value).abs() < 1e-3
                && e.algebraic == want.algebraic
                && e.geometric == want.geometric
            {
                used[k] = true;
                matched = true;
                worst = worst.max((e.value - want.value).abs());
                break;
            }
        }
        if !matched {
            return (false, -1.0);
        }
    }
    (worst < tol, tol - worst)
}

/// Cross-validates the measured spectrum and mean curvature against the
/// closed forms, feeding `(n, l)` from the measured multiplicities.
fn cross_check_closed_forms(
    spectrum: &ShapeSpectrum,
    lambda: f64,
    epsilon: f64,
    mean_curvature: f64,
    imm: &Immersion,
    opts: &AnalysisOptions,
) -> TheoremStatus {
    let n = imm.chart_dim();
    let c = imm.space_form().curvature;
    let h2 = mean_curvature * mean_curvature;
    if spectrum.real_eigenvalues.len() == 2 && spectrum.complex_pairs.is_empty() {
        // The hypothesis wants one side with matching multiplicities.
        if !spectrum
            .real_eigenvalues
            .iter()
            .any(|e| e.algebraic == e.geometric)
        {
            return TheoremStatus::NotApplicable {
                reason: "no principal curvature with matching multiplicities".into(),
            };
        }
        let mu = &spectrum.real_eigenvalues[0];
        let l = mu.algebraic;
        let data = match two_curvature_closed_forms(n, l, c, epsilon, lambda, CurvatureKind::Real)
        {
            Ok(d) => d,
            Err(e) => {
                return TheoremStatus::Fail {
                    margin: -1.0,
                    detail: format!("closed forms infeasible for measured data: {e}"),
                }
            }
        };
        let mu2 = mu.value * mu.value;
        let nu2 = spectrum.real_eigenvalues[1].value.powi(2);
        for b in &data.branches {
            let err = (b.h_squared - h2)
                .abs()
                .max((b.mu_squared - mu2).abs())
                .max((b.nu_squared - nu2).abs());
            if err < opts.match_tol * (1.0 + h2.abs().max(mu2.abs())) {
                return TheoremStatus::Pass {
                    margin: opts.match_tol - err,
                    detail: format!(
                        "branch {:+} reproduces H², μ², ν² (max defect {err:.3e})",
                        b.sign
                    ),
                };
            }
        }
        TheoremStatus::Fail {
            margin: -1.0,
            detail: "no closed-form branch matches the measured H², μ², ν²".into(),
        }
    } else if spectrum.real_eigenvalues.len() == 1 && spectrum.complex_pairs.is_empty() {
        let bound = epsilon * lambda / n as f64;
        let err = (h2 - bound).abs();
        if err < opts.match_tol * (1.0 + bound.abs()) {
            TheoremStatus::Pass {
                margin: opts.match_tol - err,
                detail: format!("single curvature: H² = ελ/n (defect {err:.3e})"),
            }
        } else {
            TheoremStatus::Fail {
                margin: -err,
                detail: format!("single curvature but |H² - ελ/n| = {err:.3e}"),
            }
        }
    } else if spectrum.complex_pairs.len() == 1 && spectrum.real_eigenvalues.is_empty() {
        match two_curvature_closed_forms(n, n / 2, c, epsilon, lambda, CurvatureKind::Imaginary) {
            Ok(d) => {
                let want = d.imaginary.as_ref().unwrap().h_squared;
                let err = (want - h2).abs();
                if err < opts.match_tol * (1.0 + want.abs()) {
                    TheoremStatus::Pass {
                        margin: opts.match_tol - err,
                        detail: format!("imaginary pair reproduces H² (defect {err:.3e})"),
                    }
                } else {
                    TheoremStatus::Fail {
                        margin: -err,
                        detail: "imaginary closed form does not reproduce H²".into(),
                    }
                }
            }
            Err(e) => TheoremStatus::Fail {
                margin: -1.0,
                detail: format!("imaginary closed forms rejected measured data: {e}"),
            },
        }
    } else {
        TheoremStatus::NotApplicable {
            reason: "spectrum outside the two-curvature hypothesis".into(),
        }
    }
}

/// For Lorentzian ambients with `c = ±1` and a defective spectrum, checks
/// that the classification lookup reproduces the measured blocked curvature.
fn classification_cross_check(
    spectrum: &ShapeSpectrum,
    lambda: f64,
    imm: &Immersion,
    opts: &AnalysisOptions,
) -> TheoremStatus {
    let sf = imm.space_form();
    let n = imm.chart_dim();
    if sf.index != 1 || sf.curvature.abs() != 1.0 || n < 3 {
        return TheoremStatus::NotApplicable {
            reason: "classification lookup covers Lorentzian ambients with c = ±1, n >= 3".into(),
        };
    }
    let form = spectrum.form_tag;
    if form != FormTag::II && form != FormTag::III {
        return TheoremStatus::NotApplicable {
            reason: format!("classification lookup covers forms II and III, spectrum is {form}"),
        };
    }
    let defective = spectrum
        .real_eigenvalues
        .iter()
        .find(|e| e.geometric != e.algebraic)
        .expect("forms II/III carry a defective eigenvalue");
    let ambient = if sf.curvature > 0.0 {
        LorentzAmbient::DeSitter
    } else {
        LorentzAmbient::AntiDeSitter
    };
    match classify_lorentzian_pmcv(n, defective.algebraic, lambda, ambient, form) {
        Ok(result) => {
            let measured = defective.value * defective.value;
            let err = result
                .parameter_squared
                .iter()
                .map(|v| (v - measured).abs())
                .fold(f64::INFINITY, f64::min);
            if err < opts.match_tol * (1.0 + measured) {
                TheoremStatus::Pass {
                    margin: opts.match_tol - err,
                    detail: format!(
                        "lookup branch reproduces the blocked curvature squared (defect {err:.3e})"
                    ),
                }
            } else {
                TheoremStatus::Fail {
                    margin: -err,
                    detail: "no lookup branch matches the measured blocked curvature".into(),
                }
            }
        }
        Err(e) => TheoremStatus::Fail {
            margin: -1.0,
            detail: format!("classification lookup rejected measured data: {e}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn closed_forms_distinct_real_case() {
        // n=3, l=1, c=-1, ε=1, λ=3: discriminant √(9-8) = 1.
        let d = two_curvature_closed_forms(3, 1, -1.0, 1.0, 3.0, CurvatureKind::Real).unwrap();
        let plus = d.branches.iter().find(|b| b.sign == 1).unwrap();
        assert_relative_eq!(plus.h_squared, 8.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(plus.mu_squared, 2.0, epsilon = 1e-14);
        assert_relative_eq!(plus.nu_squared, 0.5, epsilon = 1e-14);
        assert!(!plus.equal_curvatures && !plus.minimal_contradiction);
        // The minus branch collides with μ = ν (cε < 0 forces equal signs).
        let minus = d.branches.iter().find(|b| b.sign == -1).unwrap();
        assert_relative_eq!(minus.mu_squared, 1.0, epsilon = 1e-14);
        assert!(minus.equal_curvatures);
    }

    #[test]
    fn closed_forms_special_case_positive_ce() {
        // n=4, l=1, c=1, ε=1, λ=4 = n|c|.
        let d = two_curvature_closed_forms(4, 1, 1.0, 1.0, 4.0, CurvatureKind::Real).unwrap();
        assert!(d.special_case.is_some());
        let valid = d
            .branches
            .iter()
            .find(|b| !b.minimal_contradiction)
            .unwrap();
        assert_relative_eq!(valid.h_squared, 0.25, epsilon = 1e-14);
        assert_relative_eq!(valid.mu_squared, 1.0, epsilon = 1e-14);
        assert_relative_eq!(valid.nu_squared, 1.0, epsilon = 1e-14);
        assert!(!valid.equal_curvatures, "cε > 0 allows μ = -ν");
        let other = d.branches.iter().find(|b| b.minimal_contradiction).unwrap();
        assert!(other.h_squared.abs() < 1e-14);
    }

    #[test]
    fn closed_forms_special_case_negative_ce() {
        // n=4, l=1, c=-1, ε=1, λ=4: cε < 0 printed values.
        let d = two_curvature_closed_forms(4, 1, -1.0, 1.0, 4.0, CurvatureKind::Real).unwrap();
        assert!(d.special_case.is_some());
        let valid = d
            .branches
            .iter()
            .find(|b| !b.equal_curvatures)
            .unwrap();
        assert_relative_eq!(valid.h_squared, 4.0 * 3.0 / 16.0, epsilon = 1e-14);
        assert_relative_eq!(valid.mu_squared, 3.0, epsilon = 1e-14);
        assert_relative_eq!(valid.nu_squared, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_forms_infeasible() {
        let err =
            two_curvature_closed_forms(4, 2, 1.0, 1.0, 3.0, CurvatureKind::Real).unwrap_err();
        assert!(matches!(err, AnalysisError::Infeasible(_)), "{err}");
        assert!(err.to_string().contains("ελ < 2√(l(n-l))|c|"));
    }

    #[test]
    fn closed_forms_imaginary() {
        let d = two_curvature_closed_forms(4, 2, -1.0, 1.0, 1.0, CurvatureKind::Imaginary).unwrap();
        let im = d.imaginary.unwrap();
        assert_relative_eq!(im.h_squared, 5.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(im.tau_squared, 3.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn imaginary_kind_rejects_odd_dimension() {
        for n in [3usize, 5, 7, 9, 11, 13, 15] {
            let err = two_curvature_closed_forms(n, n / 2, -1.0, 1.0, 0.5, CurvatureKind::Imaginary)
                .unwrap_err();
            assert!(matches!(err, AnalysisError::ParityViolation { .. }), "n={n}");
        }
    }

    #[test]
    fn imaginary_kind_rejects_positive_ce_and_large_lambda() {
        assert!(matches!(
            two_curvature_closed_forms(4, 2, 1.0, 1.0, 0.5, CurvatureKind::Imaginary),
            Err(AnalysisError::Infeasible(_))
        ));
        assert!(matches!(
            two_curvature_closed_forms(4, 2, -1.0, 1.0, 5.0, CurvatureKind::Imaginary),
            Err(AnalysisError::Infeasible(_))
        ));
    }

    #[test]
    fn branch_degeneracy_at_zero_discriminant() {
        // λ² = 4 l (n-l) c²: n=4, l=2, c=1, λ=4.
        let d = two_curvature_closed_forms(4, 2, 1.0, 1.0, 4.0, CurvatureKind::Real).unwrap();
        let b0 = &d.branches[0];
        let b1 = &d.branches[1];
        assert_eq!(b0.h_squared, b1.h_squared);
        assert_eq!(b0.mu_squared, b1.mu_squared);
        assert_eq!(b0.nu_squared, b1.nu_squared);
    }

    #[test]
    fn cartan_identity_values() {
        assert_relative_eq!(
            cartan_identity_residual(2.0f64.sqrt(), 0.5f64.sqrt(), -1.0, 1.0),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(cartan_identity_residual(1.0, -1.0, 1.0, 1.0), 0.0);
        assert_eq!(cartan_identity_residual(1.0, 1.0, 1.0, 1.0), 2.0);
    }

    #[test]
    fn signed_curvatures_satisfy_cartan() {
        let (mu, nu) = signed_curvatures(2.0, -1.0, 1.0);
        assert_relative_eq!(cartan_identity_residual(mu, nu, -1.0, 1.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(nu * nu, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn classification_lookup_values() {
        let r = classify_lorentzian_pmcv(3, 3, 6.0, LorentzAmbient::AntiDeSitter, FormTag::II)
            .unwrap();
        assert_eq!(r.p, 3);
        assert_relative_eq!(r.parameter_squared[0], 2.0, epsilon = 1e-14);

        let r = classify_lorentzian_pmcv(4, 2, 5.0, LorentzAmbient::AntiDeSitter, FormTag::II)
            .unwrap();
        assert_eq!(r.p, 2);
        assert_relative_eq!(r.parameter_squared[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.parameter_squared[1], 0.5, epsilon = 1e-14);

        let err = classify_lorentzian_pmcv(4, 2, 3.0, LorentzAmbient::DeSitter, FormTag::II)
            .unwrap_err();
        assert!(matches!(err, AnalysisError::Infeasible(_)));

        assert!(classify_lorentzian_pmcv(4, 2, 5.0, LorentzAmbient::DeSitter, FormTag::III)
            .is_err());
    }

    fn spectrum_of(m: DMatrix<f64>) -> ShapeSpectrum {
        eigen_structure(&m, &SpectrumOptions::default()).unwrap()
    }

    #[test]
    fn curvature_bound_equality_and_strict() {
        // All-equal case: μ=1, n=3, λ=3, H=1.
        let s = spectrum_of(DMatrix::identity(3, 3));
        assert!(curvature_bound_check(&s, 3.0, 1.0, 1.0, 1e-9).passed());
        // Two distinct: diag(1,-1,-1,-1): H = -1/2, tr A² = 4 = λ.
        let s = spectrum_of(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            &[1.0, -1.0, -1.0, -1.0],
        )));
        let status = curvature_bound_check(&s, 4.0, 1.0, -0.5, 1e-9);
        assert!(status.passed(), "{status:?}");
        // Violated equality case: single eigenvalue but H² far from ελ/n.
        let s = spectrum_of(DMatrix::identity(3, 3));
        assert!(!curvature_bound_check(&s, 3.0, 1.0, 0.3, 1e-9).passed());
    }

    #[test]
    fn curvature_bound_imaginary_pair() {
        // Two copies of the rotation block (γ=1, τ=1): n=4, ελ = n(γ²-τ²) = 0.
        let mut a = DMatrix::zeros(4, 4);
        for k in [0, 2] {
            a[(k, k)] = 1.0;
            a[(k, k + 1)] = 1.0;
            a[(k + 1, k)] = -1.0;
            a[(k + 1, k + 1)] = 1.0;
        }
        let s = spectrum_of(a);
        assert_eq!(s.complex_pairs.len(), 1);
        assert_eq!(s.complex_pairs[0].multiplicity, 2);
        let status = curvature_bound_check(&s, 0.0, 1.0, 1.0, 1e-9);
        assert!(status.passed(), "{status:?}");
    }

    #[test]
    fn lambda_aggregation_and_mixed_error() {
        let mk = |h: f64| LambdaSample {
            mean_curvature: h,
            laplacian_h: 0.0,
            trace_a_squared: 12.0,
            epsilon: 1.0,
        };
        match lambda_from_samples(&[mk(2.0), mk(2.0)], 1e-8).unwrap() {
            LambdaEstimate::Proper { lambda, spread } => {
                assert_relative_eq!(lambda, 12.0, epsilon = 1e-13);
                assert!(spread < 1e-13);
            }
            other => panic!("expected proper estimate, got {other:?}"),
        }
        assert!(matches!(
            lambda_from_samples(&[mk(1e-12), mk(1e-12)], 1e-8).unwrap(),
            LambdaEstimate::Minimal
        ));
        assert!(matches!(
            lambda_from_samples(&[mk(1e-12), mk(2.0)], 1e-8),
            Err(AnalysisError::MixedMinimal { .. })
        ));
        assert!(matches!(
            lambda_from_samples(&[mk(2.0)], 1e-8),
            Err(AnalysisError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn closed_form_sweep_satisfies_defining_equations() {
        // Recovered (μ, ν) must satisfy the trace identity, the trace-square
        // identity and the Cartan identity to 1e-10.
        let mut tested = 0;
        for n in 3..=8usize {
            for l in 1..n {
                for &c in &[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
                    for &eps in &[-1.0, 1.0] {
                        let threshold = 2.0 * ((l * (n - l)) as f64).sqrt() * f64::abs(c);
                        for &bump in &[0.1, 0.7, 2.3, 6.0] {
                            let lambda = eps * (threshold + bump);
                            let d = two_curvature_closed_forms(
                                n,
                                l,
                                c,
                                eps,
                                lambda,
                                CurvatureKind::Real,
                            )
                            .unwrap();
                            for b in &d.branches {
                                let (mu, nu) = signed_curvatures(b.mu_squared, c, eps);
                                assert_relative_eq!(
                                    nu * nu,
                                    b.nu_squared,
                                    epsilon = 1e-10,
                                    max_relative = 1e-10
                                );
                                let trace = l as f64 * mu + (n - l) as f64 * nu;
                                assert_relative_eq!(
                                    trace * trace,
                                    (n * n) as f64 * b.h_squared,
                                    epsilon = 1e-9,
                                    max_relative = 1e-9
                                );
                                let tr2 = l as f64 * mu * mu + (n - l) as f64 * nu * nu;
                                assert_relative_eq!(
                                    tr2,
                                    eps * lambda,
                                    epsilon = 1e-10,
                                    max_relative = 1e-10
                                );
                                assert!(
                                    cartan_identity_residual(mu, nu, c, eps).abs() < 1e-10
                                );
                                tested += 1;
                            }
                        }
                    }
                }
            }
        }
        assert!(tested >= 500, "swept {tested} branches");
    }

    #[test]
    fn grid_points_stay_inside_domain() {
        let grid = GridSpec::uniform(3, 2);
        let pts = grid.points(&[(0.0, 1.0), (-2.0, 2.0)]);
        assert_eq!(pts.len(), 9);
        for p in &pts {
            assert!(p[0] >= 0.05 && p[0] <= 0.95);
            assert!(p[1] >= -1.8 && p[1] <= 1.8);
        }
    }
}
