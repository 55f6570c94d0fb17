//! Small dense linear algebra over indefinite (signature-aware) inner products.
//!
//! Shape operators of Lorentzian hypersurfaces need not be diagonalizable: they
//! carry Jordan blocks or complex-conjugate eigenvalue pairs. This module
//! provides the eigenstructure bookkeeping (algebraic vs geometric
//! multiplicities, conjugate pairs) and the classification into the four
//! canonical self-adjoint forms available over a Lorentzian metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::DEFAULT_TOL;

/// Default single-linkage radius for eigenvalue clustering.
///
/// Eigenvalues of defective matrices can only be computed to roughly
/// `eps^(1/k)` for a k-fold Jordan block, so the clustering radius must sit
/// well above `eps^(1/3) ≈ 5e-6` to recognize 3-blocks reliably. Cluster
/// means remain accurate to ~1e-12 regardless.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("causal character of the zero vector is undefined")]
    ZeroVector,
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("metric matrix is not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },
    #[error("metric matrix is degenerate (|det| = {det:.3e} below threshold {threshold:.3e})")]
    Degenerate { det: f64, threshold: f64 },
    #[error("metric has index {index}, expected a Lorentzian metric (index 1)")]
    NotLorentzian { index: usize },
    #[error("operator is not self-adjoint with respect to the metric (defect {defect:.3e})")]
    NotSelfAdjoint { defect: f64 },
    #[error(
        "ambiguous eigenvalue clustering: clusters separated by {separation:.3e} < 2x radius {radius:.3e}"
    )]
    AmbiguousClustering {
        separation: f64,
        radius: f64,
        /// Clusters found at the requested radius: (re, im, multiplicity).
        fine: Vec<(f64, f64, usize)>,
        /// Clusters after merging at twice the radius.
        merged: Vec<(f64, f64, usize)>,
    },
    #[error("rank decision inconsistent for eigenvalue {eigenvalue}: algebraic {algebraic}, geometric {geometric}")]
    RankInconsistency {
        eigenvalue: f64,
        algebraic: usize,
        geometric: usize,
    },
    #[error("inconsistent canonical form parameters: {0}")]
    InconsistentParams(String),
    #[error("spectrum does not reproduce the characteristic polynomial (residual {residual:.3e})")]
    SpectrumResidual { residual: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Signature of a nondegenerate symmetric bilinear form: `index` counts the
/// negative squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub dim: usize,
    pub index: usize,
}

impl Signature {
    pub fn new(dim: usize, index: usize) -> Self {
        assert!(index <= dim, "index must not exceed dimension");
        Signature { dim, index }
    }

    pub fn is_lorentzian(&self) -> bool {
        self.index == 1
    }
}

/// A symmetric nondegenerate matrix representing an indefinite inner product.
#[derive(Debug, Clone)]
pub struct MetricMatrix {
    entries: DMatrix<f64>,
    tolerance: f64,
}

impl MetricMatrix {
    /// Validates symmetry and nondegeneracy.
    pub fn new(entries: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(LinalgError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let defect = (&entries - entries.transpose()).amax();
        if defect > tolerance * scale.max(1.0) {
            return Err(LinalgError::NotSymmetric { defect });
        }
        let det = entries.clone().lu().determinant();
        let threshold = tolerance * scale.powi(entries.nrows() as i32);
        if det.abs() <= threshold {
            return Err(LinalgError::Degenerate {
                det: det.abs(),
                threshold,
            });
        }
        Ok(MetricMatrix { entries, tolerance })
    }

    /// Diagonal metric from a list of signs/weights.
    pub fn diagonal(signs: &[f64]) -> Self {
        let entries = DMatrix::from_diagonal(&DVector::from_row_slice(signs));
        MetricMatrix::new(entries, DEFAULT_TOL).expect("diagonal metric with nonzero entries")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Signature computed from the symmetric eigenvalues.
    pub fn signature(&self) -> Signature {
        let eig = self.entries.clone().symmetric_eigen();
        let index = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        Signature::new(self.dim(), index)
    }

    pub fn is_lorentzian(&self) -> bool {
        self.signature().is_lorentzian()
    }
}

/// `u^T g v`.
pub fn indefinite_inner(u: &DVector<f64>, v: &DVector<f64>, g: &MetricMatrix) -> Result<f64> {
    if u.len() != g.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: g.dim(),
            found: u.len(),
        });
    }
    if v.len() != g.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: g.dim(),
            found: v.len(),
        });
    }
    Ok((u.transpose() * g.entries() * v)[(0, 0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Timelike,
    Spacelike,
    Lightlike,
}

/// Causal character of `v`: timelike if `<v,v> < -tol·|v|²`, spacelike if
/// `> tol·|v|²`, lightlike otherwise.
pub fn causal_character(v: &DVector<f64>, g: &MetricMatrix, tol: f64) -> Result<CausalCharacter> {
    let norm2 = v.norm_squared();
    if norm2 == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let inner = indefinite_inner(v, v, g)?;
    Ok(if inner < -tol * norm2 {
        CausalCharacter::Timelike
    } else if inner > tol * norm2 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Lightlike
    })
}

/// Monic characteristic polynomial of `a` by the Faddeev–LeVerrier recurrence.
///
/// Returns coefficients in descending powers: `[1, c1, ..., cn]` with
/// `det(tI - A) = t^n + c1 t^(n-1) + ... + cn`.
pub fn char_poly(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let mut mk = a.clone();
    for k in 1..=n {
        let ck = -mk.trace() / k as f64;
        coeffs.push(ck);
        if k < n {
            for i in 0..n {
                mk[(i, i)] += ck;
            }
            mk = a * mk;
        }
    }
    Ok(coeffs)
}

/// Evaluate a monic polynomial given in descending-power coefficients.
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * t + c)
}

/// Rank by Gaussian elimination with full pivoting; pivots at or below
/// `threshold` (absolute) stop the elimination.
pub fn numerical_rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let steps = rows.min(cols);
    let mut rank = 0;
    for step in 0..steps {
        let mut pivot = (step, step);
        let mut best = 0.0f64;
        for i in step..rows {
            for j in step..cols {
                let v = a[(i, j)].abs();
                if v > best {
                    best = v;
                    pivot = (i, j);
                }
            }
        }
        if best <= threshold {
            break;
        }
        a.swap_rows(step, pivot.0);
        a.swap_columns(step, pivot.1);
        let d = a[(step, step)];
        for i in step + 1..rows {
            let factor = a[(i, step)] / d;
            for j in step..cols {
                a[(i, j)] -= factor * a[(step, j)];
            }
        }
        rank += 1;
    }
    rank
}

/// Canonical self-adjoint forms of a Lorentzian shape operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormTag {
    I,
    II,
    III,
    IV,
    Other,
}

impl std::fmt::Display for FormTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FormTag::I => "I",
            FormTag::II => "II",
            FormTag::III => "III",
            FormTag::IV => "IV",
            FormTag::Other => "Other",
        };
        f.write_str(s)
    }
}

/// A real eigenvalue with its algebraic and geometric multiplicities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RealEigenvalue {
    pub value: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

/// A complex-conjugate eigenvalue pair `gamma ± tau·i`, `tau > 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexPair {
    pub gamma: f64,
    pub tau: f64,
    pub multiplicity: usize,
}

/// Eigenstructure of a shape operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSpectrum {
    pub real_eigenvalues: Vec<RealEigenvalue>,
    pub complex_pairs: Vec<ComplexPair>,
    pub form_tag: FormTag,
    /// Monic characteristic polynomial, descending powers.
    pub char_poly: Vec<f64>,
}

impl ShapeSpectrum {
    pub fn dim(&self) -> usize {
        self.char_poly.len() - 1
    }

    pub fn distinct_real(&self) -> usize {
        self.real_eigenvalues.len()
    }

    /// Sum of squares of all eigenvalues weighted by algebraic multiplicity
    /// (equals `tr A²`).
    pub fn trace_square(&self) -> f64 {
        let real: f64 = self
            .real_eigenvalues
            .iter()
            .map(|e| e.algebraic as f64 * e.value * e.value)
            .sum();
        let complex: f64 = self
            .complex_pairs
            .iter()
            .map(|p| 2.0 * p.multiplicity as f64 * (p.gamma * p.gamma - p.tau * p.tau))
            .sum();
        real + complex
    }
}

/// Tolerances for eigenstructure analysis.
///
/// `cluster_tol` is the single-linkage radius used to merge computed roots into
/// eigenvalue clusters; `rank_tol` scales the pivot threshold
/// `rank_tol·|A|_inf` for geometric-multiplicity rank decisions.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub cluster_tol: f64,
    pub rank_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            cluster_tol: DEFAULT_CLUSTER_TOL,
            rank_tol: DEFAULT_TOL,
        }
    }
}

struct Cluster {
    re: f64,
    im: f64,
    count: usize,
}

fn cluster_roots(roots: &[(f64, f64)], radius: f64) -> Vec<Cluster> {
    let n = roots.len();
    let mut comp: Vec<usize> = (0..n).collect();
    // Union-find with path halving; n is tiny.
    fn find(comp: &mut Vec<usize>, mut i: usize) -> usize {
        while comp[i] != i {
            comp[i] = comp[comp[i]];
            i = comp[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = ((roots[i].0 - roots[j].0).powi(2) + (roots[i].1 - roots[j].1).powi(2)).sqrt();
            if d <= radius {
                let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
                comp[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut clusters: Vec<(usize, Cluster)> = Vec::new();
    for i in 0..n {
        let root = find(&mut comp, i);
        match clusters.iter_mut().find(|(r, _)| *r == root) {
            Some((_, c)) => {
                c.re += roots[i].0;
                c.im += roots[i].1;
                c.count += 1;
            }
            None => clusters.push((
                root,
                Cluster {
                    re: roots[i].0,
                    im: roots[i].1,
                    count: 1,
                },
            )),
        }
    }
    let mut out: Vec<Cluster> = clusters
        .into_iter()
        .map(|(_, c)| Cluster {
            re: c.re / c.count as f64,
            im: c.im / c.count as f64,
            count: c.count,
        })
        .collect();
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    out
}

fn cluster_summary(clusters: &[Cluster]) -> Vec<(f64, f64, usize)> {
    clusters.iter().map(|c| (c.re, c.im, c.count)).collect()
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    let degree = coeffs.len() - 1;
    coeffs[..degree]
        .iter()
        .enumerate()
        .map(|(k, &a)| (degree - k) as f64 * a)
        .collect()
}

/// Refines a cluster representative of multiplicity `count`: a k-fold root of
/// `p` is a simple, well-conditioned root of `p^(k-1)`, so Newton from the
/// cluster mean recovers it to machine precision (simultaneous root finders
/// stall at `eps^(1/k)` on multiple roots).
fn refine_cluster(poly: &[f64], re: f64, im: f64, count: usize, radius: f64) -> (f64, f64) {
    use nalgebra::Complex;
    let mut q: Vec<f64> = poly.to_vec();
    for _ in 1..count {
        q = poly_derivative(&q);
    }
    let lead = q[0];
    for a in q.iter_mut() {
        *a /= lead;
    }
    let dq = poly_derivative(&q);
    let mut z = Complex::new(re, im);
    for _ in 0..60 {
        let p = q
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
        let d = dq
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
        if d.norm() == 0.0 {
            break;
        }
        let step = p / d;
        z -= step;
        if step.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    // Keep the refinement only if it stays inside the cluster's ball.
    if ((z.re - re).powi(2) + (z.im - im).powi(2)).sqrt() <= radius {
        if im == 0.0 {
            (z.re, 0.0)
        } else {
            (z.re, z.im)
        }
    } else {
        (re, im)
    }
}

/// All complex roots of a monic real polynomial (descending coefficients) by
/// Durand–Kerner iteration.
///
/// The simultaneous iteration is robust for the moderate degrees used here
/// and, unlike shifted-QR on a companion or Schur form, cannot stall on
/// defective spectra; multiple roots converge linearly onto a cluster whose
/// mean carries the accuracy of the coefficients.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    use nalgebra::Complex;
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let bound = 1.0 + coeffs.iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.45;
            Complex::new(bound * angle.cos(), bound * angle.sin())
        })
        .collect();
    let eval = |x: Complex<f64>| {
        coeffs
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * x + c)
    };
    for _ in 0..600 {
        let mut max_step = 0.0f64;
        let snapshot = z.clone();
        for i in 0..n {
            let mut den = Complex::new(1.0, 0.0);
            for (j, &other) in snapshot.iter().enumerate() {
                if j != i {
                    den *= z[i] - other;
                }
            }
            if den.norm() == 0.0 {
                z[i] += Complex::new(1e-8 * bound, 1e-8 * bound);
                continue;
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * bound {
            break;
        }
    }
    z.iter().map(|c| (c.re, c.im)).collect()
}

/// Eigenvalues of `a` clustered into distinct values with algebraic and
/// geometric multiplicities, plus complex-conjugate pairs and a structural
/// canonical-form tag.
///
/// The roots of the characteristic polynomial are coerced to the real axis
/// when their imaginary part is below the cluster radius and merged by
/// single-linkage clustering at that radius. Two surviving clusters closer
/// than twice the radius are reported as an ambiguity, carrying both candidate
/// clusterings.
pub fn eigen_structure(a: &DMatrix<f64>, opts: &SpectrumOptions) -> Result<ShapeSpectrum> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let radius = opts.cluster_tol;
    let poly = char_poly(a)?;
    let roots: Vec<(f64, f64)> = polynomial_roots(&poly)
        .into_iter()
        .map(|(re, im)| {
            if im.abs() <= radius {
                (re, 0.0)
            } else {
                (re, im)
            }
        })
        .collect();

    let clusters = cluster_roots(&roots, radius);

    // Ambiguity when surviving clusters are closer than twice the radius.
    let mut min_sep = f64::INFINITY;
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let d = ((clusters[i].re - clusters[j].re).powi(2)
                + (clusters[i].im - clusters[j].im).powi(2))
            .sqrt();
            min_sep = min_sep.min(d);
        }
    }
    if min_sep < 2.0 * radius {
        let merged = cluster_roots(&roots, 2.0 * radius);
        return Err(LinalgError::AmbiguousClustering {
            separation: min_sep,
            radius,
            fine: cluster_summary(&clusters),
            merged: cluster_summary(&merged),
        });
    }

    let clusters: Vec<Cluster> = clusters
        .into_iter()
        .map(|c| {
            let (re, im) = refine_cluster(&poly, c.re, c.im, c.count, radius);
            Cluster {
                re,
                im,
                count: c.count,
            }
        })
        .collect();

    let scale = a.amax().max(1.0);
    let rank_threshold = opts.rank_tol * scale;

    let mut real_eigenvalues = Vec::new();
    let mut complex_pairs = Vec::new();
    for c in &clusters {
        if c.im == 0.0 {
            let shifted = a - DMatrix::identity(n, n) * c.re;
            let geometric = n - numerical_rank(&shifted, rank_threshold);
            if geometric == 0 || geometric > c.count {
                return Err(LinalgError::RankInconsistency {
                    eigenvalue: c.re,
                    algebraic: c.count,
                    geometric,
                });
            }
            real_eigenvalues.push(RealEigenvalue {
                value: c.re,
                algebraic: c.count,
                geometric,
            });
        } else if c.im > 0.0 {
            complex_pairs.push(ComplexPair {
                gamma: c.re,
                tau: c.im,
                multiplicity: c.count,
            });
        }
    }

    let spectrum_poly = poly_from_spectrum(&real_eigenvalues, &complex_pairs);
    let poly_scale = poly.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let residual = poly
        .iter()
        .zip(spectrum_poly.iter())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max);
    if residual > 1e-5 * poly_scale {
        return Err(LinalgError::SpectrumResidual {
            residual: residual / poly_scale,
        });
    }

    let form_tag = structural_form_tag(a, &real_eigenvalues, &complex_pairs, rank_threshold);

    Ok(ShapeSpectrum {
        real_eigenvalues,
        complex_pairs,
        form_tag,
        char_poly: poly,
    })
}

fn poly_from_spectrum(real: &[RealEigenvalue], complex: &[ComplexPair]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    let mul_linear = |coeffs: &mut Vec<f64>, root: f64| {
        // p(t) <- p(t) * (t - root)
        coeffs.push(0.0);
        for k in (1..coeffs.len()).rev() {
            let prev = coeffs[k - 1];
            coeffs[k] -= root * prev;
        }
    };
    for e in real {
        for _ in 0..e.algebraic {
            mul_linear(&mut coeffs, e.value);
        }
    }
    for p in complex {
        // (t - γ)² + τ² = t² - 2γt + (γ² + τ²)
        let b = -2.0 * p.gamma;
        let c = p.gamma * p.gamma + p.tau * p.tau;
        for _ in 0..p.multiplicity {
            let old = coeffs.clone();
            coeffs.push(0.0);
            coeffs.push(0.0);
            for (k, v) in coeffs.iter_mut().enumerate() {
                let mut acc = 0.0;
                if k < old.len() {
                    acc += old[k];
                }
                if k >= 1 && k - 1 < old.len() {
                    acc += old[k - 1] * b;
                }
                if k >= 2 && k - 2 < old.len() {
                    acc += old[k - 2] * c;
                }
                *v = acc;
            }
        }
    }
    coeffs
}

/// Jordan-structure classification given multiplicities already computed.
///
/// Block sizes are probed through ranks of powers of `A - λI` rather than by
/// matching a literal matrix layout, so the tag is basis-independent.
fn structural_form_tag(
    a: &DMatrix<f64>,
    real: &[RealEigenvalue],
    complex: &[ComplexPair],
    rank_threshold: f64,
) -> FormTag {
    let n = a.nrows();
    let defective: Vec<&RealEigenvalue> = real
        .iter()
        .filter(|e| e.geometric != e.algebraic)
        .collect();
    if complex.is_empty() {
        if defective.is_empty() {
            return FormTag::I;
        }
        if defective.len() == 1 {
            let e = defective[0];
            let defect = e.algebraic - e.geometric;
            if defect == 1 {
                // Exactly one 2-block.
                return FormTag::II;
            }
            if defect == 2 && e.algebraic >= 3 {
                // Either a single 3-block or two 2-blocks; only the former has
                // (A - λI)² nonzero on the generalized eigenspace.
                let shifted = a - DMatrix::identity(n, n) * e.value;
                let shifted2 = &shifted * &shifted;
                let shifted3 = &shifted2 * &shifted;
                let r2 = numerical_rank(&shifted2, rank_threshold * shifted2.amax().max(1.0) / a.amax().max(1.0));
                let r3 = numerical_rank(&shifted3, rank_threshold * shifted3.amax().max(1.0) / a.amax().max(1.0));
                let ambient = n - e.algebraic;
                if r2 == ambient + 1 && r3 == ambient {
                    return FormTag::III;
                }
            }
        }
        return FormTag::Other;
    }
    if complex.len() == 1 && complex[0].multiplicity == 1 && defective.is_empty() {
        return FormTag::IV;
    }
    FormTag::Other
}

/// Classifies the canonical form of a shape operator self-adjoint with respect
/// to a Lorentzian metric.
pub fn classify_canonical_form(
    a: &DMatrix<f64>,
    g: &MetricMatrix,
    opts: &SpectrumOptions,
) -> Result<FormTag> {
    if a.nrows() != g.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: g.dim(),
            found: a.nrows(),
        });
    }
    let sig = g.signature();
    if !sig.is_lorentzian() {
        return Err(LinalgError::NotLorentzian { index: sig.index });
    }
    let ga = g.entries() * a;
    let defect = (&ga - ga.transpose()).amax();
    let scale = ga.amax().max(1.0);
    if defect > g.tolerance().max(opts.rank_tol) * scale {
        return Err(LinalgError::NotSelfAdjoint {
            defect: defect / scale,
        });
    }
    Ok(eigen_structure(a, opts)?.form_tag)
}

/// Parameters for emitting a canonical `(A, G)` pair.
#[derive(Debug, Clone)]
pub enum CanonicalFormParams {
    /// Diagonal `A`, `G = diag(I_{n-1}, -1)`.
    I { eigenvalues: Vec<(f64, usize)> },
    /// One 2-Jordan-block at `blocked` (total algebraic multiplicity
    /// `blocked_mult >= 2`), remaining eigenvalues diagonal.
    II {
        blocked: f64,
        blocked_mult: usize,
        rest: Vec<(f64, usize)>,
    },
    /// One 3-Jordan-block at `blocked` (total multiplicity `>= 3`).
    III {
        blocked: f64,
        blocked_mult: usize,
        rest: Vec<(f64, usize)>,
    },
    /// Trailing rotation-like block for the pair `gamma ± tau·i`.
    IV {
        gamma: f64,
        tau: f64,
        rest: Vec<(f64, usize)>,
    },
}

/// Emits the matched `(A, G)` pair for the requested canonical form.
pub fn canonical_shape_matrix(params: &CanonicalFormParams) -> Result<(DMatrix<f64>, MetricMatrix)> {
    let flat = |list: &[(f64, usize)]| -> Vec<f64> {
        list.iter()
            .flat_map(|&(v, m)| std::iter::repeat(v).take(m))
            .collect()
    };
    match params {
        CanonicalFormParams::I { eigenvalues } => {
            let values = flat(eigenvalues);
            let n = values.len();
            if n == 0 {
                return Err(LinalgError::InconsistentParams(
                    "form I requires at least one eigenvalue".into(),
                ));
            }
            let a = DMatrix::from_diagonal(&DVector::from_vec(values));
            let mut signs = vec![1.0; n];
            signs[n - 1] = -1.0;
            Ok((a, MetricMatrix::diagonal(&signs)))
        }
        CanonicalFormParams::II {
            blocked,
            blocked_mult,
            rest,
        } => {
            if *blocked_mult < 2 {
                return Err(LinalgError::InconsistentParams(
                    "form II requires the blocked eigenvalue to have multiplicity >= 2".into(),
                ));
            }
            check_rest_distinct(*blocked, rest)?;
            let rest_values = flat(rest);
            let n = blocked_mult + rest_values.len();
            let mut a = DMatrix::zeros(n, n);
            a[(0, 0)] = *blocked;
            a[(1, 1)] = *blocked;
            a[(1, 0)] = 1.0;
            let mut idx = 2;
            for _ in 0..blocked_mult - 2 {
                a[(idx, idx)] = *blocked;
                idx += 1;
            }
            for v in rest_values {
                a[(idx, idx)] = v;
                idx += 1;
            }
            let mut g = DMatrix::identity(n, n);
            g[(0, 0)] = 0.0;
            g[(1, 1)] = 0.0;
            g[(0, 1)] = 1.0;
            g[(1, 0)] = 1.0;
            Ok((a, MetricMatrix::new(g, DEFAULT_TOL)?))
        }
        CanonicalFormParams::III {
            blocked,
            blocked_mult,
            rest,
        } => {
            if *blocked_mult < 3 {
                return Err(LinalgError::InconsistentParams(
                    "form III requires the blocked eigenvalue to have multiplicity >= 3".into(),
                ));
            }
            check_rest_distinct(*blocked, rest)?;
            let rest_values = flat(rest);
            let n = blocked_mult + rest_values.len();
            let mut a = DMatrix::zeros(n, n);
            for i in 0..3 {
                a[(i, i)] = *blocked;
            }
            a[(1, 0)] = 1.0;
            a[(2, 1)] = 1.0;
            let mut idx = 3;
            for _ in 0..blocked_mult - 3 {
                a[(idx, idx)] = *blocked;
                idx += 1;
            }
            for v in rest_values {
                a[(idx, idx)] = v;
                idx += 1;
            }
            let mut g = DMatrix::identity(n, n);
            g[(0, 0)] = 0.0;
            g[(2, 2)] = 0.0;
            g[(0, 2)] = 1.0;
            g[(2, 0)] = 1.0;
            Ok((a, MetricMatrix::new(g, DEFAULT_TOL)?))
        }
        CanonicalFormParams::IV { gamma, tau, rest } => {
            if *tau == 0.0 {
                return Err(LinalgError::InconsistentParams(
                    "form IV requires tau != 0".into(),
                ));
            }
            let rest_values = flat(rest);
            let n = rest_values.len() + 2;
            let mut a = DMatrix::zeros(n, n);
            for (i, v) in rest_values.iter().enumerate() {
                a[(i, i)] = *v;
            }
            a[(n - 2, n - 2)] = *gamma;
            a[(n - 2, n - 1)] = *tau;
            a[(n - 1, n - 2)] = -*tau;
            a[(n - 1, n - 1)] = *gamma;
            let mut signs = vec![1.0; n];
            signs[n - 1] = -1.0;
            Ok((a, MetricMatrix::diagonal(&signs)))
        }
    }
}

fn check_rest_distinct(blocked: f64, rest: &[(f64, usize)]) -> Result<()> {
    if rest.iter().any(|&(v, _)| v == blocked) {
        return Err(LinalgError::InconsistentParams(
            "diagonal eigenvalues coinciding with the blocked one must be folded into its multiplicity"
                .into(),
        ));
    }
    Ok(())
}
