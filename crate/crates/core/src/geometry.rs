//! Extrinsic geometry of hypersurface immersions into non-flat pseudo-Riemannian
//! space forms.
//!
//! Space forms are realized as quadrics `<x,x> = 1/c` in a pseudo-Euclidean
//! ambient space. All second-derivative quantities come from truncated Taylor
//! jets of the immersion; derivatives of the unit normal are obtained by
//! solving the defining linear conditions in jet arithmetic, so curvature
//! residuals do not rely on the Weingarten relation they are meant to test.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{self, finite_diff, Jet, JetError, ScalarJet, MAX_ORDER};
use crate::linalg::{LinalgError, MetricMatrix, Signature};
use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid space form: {0}")]
    InvalidSpaceForm(String),
    #[error("degenerate induced metric at {point:?}")]
    DegenerateMetric { point: Vec<f64> },
    #[error("normal direction is lightlike at {point:?} (self product {self_product:.3e})")]
    LightlikeNormal { point: Vec<f64>, self_product: f64 },
    #[error("tangents and position do not span a nondegenerate subspace at {point:?}")]
    DegenerateTangency { point: Vec<f64> },
    #[error("finite-difference stencil left the chart domain near {point:?}")]
    Stencil { point: Vec<f64> },
    #[error("singular linear solve in jet arithmetic at {context}")]
    SingularJetSolve { context: &'static str },
}

pub type Result<T> = std::result::Result<T, GeomError>;

/// A non-flat pseudo-Riemannian space form `N^{n+1}_s(c)`, realized as the
/// quadric `<x,x> = 1/c` in a pseudo-Euclidean space of dimension `n+2` whose
/// index is `s` for `c > 0` and `s+1` for `c < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    /// Dimension `n+1` of the space form itself.
    pub dim: usize,
    /// Index `s` of the space form metric.
    pub index: usize,
    /// Constant curvature `c != 0`.
    pub curvature: f64,
}

impl SpaceForm {
    pub fn new(dim: usize, index: usize, curvature: f64) -> Result<SpaceForm> {
        if curvature == 0.0 {
            return Err(GeomError::InvalidSpaceForm(
                "curvature must be nonzero".into(),
            ));
        }
        if index > dim {
            return Err(GeomError::InvalidSpaceForm(format!(
                "index {index} exceeds dimension {dim}"
            )));
        }
        Ok(SpaceForm {
            dim,
            index,
            curvature,
        })
    }

    /// De Sitter space `S^{dim}_1(c)`, `c > 0`.
    pub fn de_sitter(dim: usize, c: f64) -> SpaceForm {
        assert!(c > 0.0);
        SpaceForm::new(dim, 1, c).unwrap()
    }

    /// Anti-de Sitter space `H^{dim}_1(c)`, `c < 0`.
    pub fn anti_de_sitter(dim: usize, c: f64) -> SpaceForm {
        assert!(c < 0.0);
        SpaceForm::new(dim, 1, c).unwrap()
    }

    /// Round sphere `S^{dim}(c)`, `c > 0`.
    pub fn sphere(dim: usize, c: f64) -> SpaceForm {
        assert!(c > 0.0);
        SpaceForm::new(dim, 0, c).unwrap()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn ambient_index(&self) -> usize {
        if self.curvature > 0.0 {
            self.index
        } else {
            self.index + 1
        }
    }

    pub fn ambient_signature(&self) -> Signature {
        Signature::new(self.ambient_dim(), self.ambient_index())
    }

    /// Diagonal signs of the ambient metric, timelike directions first.
    pub fn ambient_signs(&self) -> Vec<f64> {
        let mut signs = vec![1.0; self.ambient_dim()];
        for s in signs.iter_mut().take(self.ambient_index()) {
            *s = -1.0;
        }
        signs
    }

    pub fn ambient_metric(&self) -> MetricMatrix {
        MetricMatrix::diagonal(&self.ambient_signs())
    }

    /// `<a, b>` in the ambient pseudo-Euclidean metric.
    pub fn ambient_inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.ambient_signs()
            .iter()
            .enumerate()
            .map(|(k, s)| s * a[k] * b[k])
            .sum()
    }

    /// Quadric level `1/c`.
    pub fn quadric_level(&self) -> f64 {
        1.0 / self.curvature
    }
}

/// Chart-to-ambient evaluation in jet arithmetic.
pub trait ChartMap: Send + Sync {
    fn eval_jet(&self, u: &[f64], order: usize) -> jets::Result<Jet>;
}

/// Chart map defined by a closure over the chart-variable jets.
pub struct FnChartMap<F> {
    f: F,
}

impl<F> FnChartMap<F>
where
    F: Fn(&[ScalarJet]) -> jets::Result<Vec<ScalarJet>> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnChartMap { f }
    }
}

impl<F> ChartMap for FnChartMap<F>
where
    F: Fn(&[ScalarJet]) -> jets::Result<Vec<ScalarJet>> + Send + Sync,
{
    fn eval_jet(&self, u: &[f64], order: usize) -> jets::Result<Jet> {
        let vars: Vec<ScalarJet> = u
            .iter()
            .enumerate()
            .map(|(k, &v)| ScalarJet::variable(u.len(), order, k, v))
            .collect::<jets::Result<_>>()?;
        let components = (self.f)(&vars)?;
        Jet::new(u.to_vec(), components)
    }
}

/// How the sign of the unit normal is fixed.
///
/// The kernel solve produces the normal only up to sign; mean curvature and
/// shape-operator eigenvalues flip with it, so reports always record the
/// `(ξ, ε, H)` triple jointly. Catalog instances pin the orientation their
/// printed shape operators assume.
#[derive(Clone)]
pub enum Orientation {
    /// First nonzero component of the unnormalized kernel vector made positive.
    KernelSignRule,
    /// Flip so that `sign(tr A)` matches the given sign.
    TraceSign(f64),
    /// Flip so that the normal has positive Euclidean dot with the reference.
    Align(Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>),
}

impl std::fmt::Debug for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::KernelSignRule => f.write_str("KernelSignRule"),
            Orientation::TraceSign(s) => write!(f, "TraceSign({s})"),
            Orientation::Align(_) => f.write_str("Align(..)"),
        }
    }
}

/// A parametrized hypersurface immersion into a space form.
#[derive(Clone)]
pub struct Immersion {
    space_form: SpaceForm,
    chart_dim: usize,
    domain: Vec<(f64, f64)>,
    map: Arc<dyn ChartMap>,
    orientation: Orientation,
    label: String,
}

impl std::fmt::Debug for Immersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Immersion")
            .field("label", &self.label)
            .field("space_form", &self.space_form)
            .field("chart_dim", &self.chart_dim)
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl Immersion {
    pub fn new(
        space_form: SpaceForm,
        domain: Vec<(f64, f64)>,
        map: Arc<dyn ChartMap>,
    ) -> Immersion {
        let chart_dim = domain.len();
        Immersion {
            space_form,
            chart_dim,
            domain,
            map,
            orientation: Orientation::KernelSignRule,
            label: String::new(),
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Immersion {
        self.orientation = orientation;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Immersion {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space_form(&self) -> &SpaceForm {
        &self.space_form
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn orientation(&self) -> &Orientation {
        &self.orientation
    }

    /// Shared handle to the underlying chart map (for wrapping combinators).
    pub fn map_handle(&self) -> Arc<dyn ChartMap> {
        self.map.clone()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.chart_dim
            && u.iter()
                .zip(&self.domain)
                .all(|(&v, &(lo, hi))| v >= lo - 1e-12 && v <= hi + 1e-12)
    }

    /// All partial derivatives of the immersion at `u` up to `order`.
    pub fn jet(&self, u: &[f64], order: usize) -> Result<Jet> {
        if order == 0 || order > MAX_ORDER {
            return Err(GeomError::Jet(JetError::OrderOutOfRange(order)));
        }
        if !self.contains(u) {
            return Err(GeomError::Jet(JetError::OutsideDomain {
                point: u.to_vec(),
            }));
        }
        Ok(self.map.eval_jet(u, order)?)
    }

    pub fn value(&self, u: &[f64]) -> Result<DVector<f64>> {
        Ok(self.jet(u, 1)?.value())
    }

    /// Midpoint of the chart domain.
    pub fn domain_center(&self) -> Vec<f64> {
        self.domain.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Tolerances for per-point extrinsic computations.
#[derive(Debug, Clone, Copy)]
pub struct ExtrinsicOptions {
    /// Symmetry/nondegeneracy tolerance for the induced metric.
    pub metric_tol: f64,
    /// Threshold below which the normal self-product counts as lightlike.
    pub lightlike_tol: f64,
}

impl Default for ExtrinsicOptions {
    fn default() -> Self {
        ExtrinsicOptions {
            metric_tol: DEFAULT_TOL,
            lightlike_tol: DEFAULT_TOL,
        }
    }
}

/// Per-point extrinsic geometry package.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    pub point: Vec<f64>,
    /// Induced metric `G_ij = <∂_i x, ∂_j x>`.
    pub metric: MetricMatrix,
    /// Unit normal in ambient coordinates.
    pub normal: DVector<f64>,
    /// `ε = <ξ, ξ> = ±1`.
    pub epsilon: f64,
    /// Scalar second fundamental form `h_ij = ε <∂_i ∂_j x, ξ>`.
    pub second_form: DMatrix<f64>,
    /// Shape operator `A = G⁻¹ h`, so `<AX, Y> = h(X, Y)`.
    pub shape_operator: DMatrix<f64>,
    /// `H = ε tr A / n`.
    pub mean_curvature: f64,
}

impl ExtrinsicData {
    pub fn trace_a_squared(&self) -> f64 {
        (&self.shape_operator * &self.shape_operator).trace()
    }
}

/// First nonzero component (relative to the largest) made positive.
fn kernel_sign(v: &DVector<f64>) -> f64 {
    let scale = v.amax();
    for &c in v.iter() {
        if c.abs() > 1e-10 * scale {
            return if c < 0.0 { -1.0 } else { 1.0 };
        }
    }
    1.0
}

/// Unnormalized normal direction: the one-dimensional kernel of the linear
/// conditions `<ξ, ∂_i x> = 0`, `<ξ, x> = 0`.
fn kernel_vector(
    imm: &Immersion,
    u: &[f64],
    x: &DVector<f64>,
    tangents: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let ambient = imm.space_form.ambient_dim();
    let signs = imm.space_form.ambient_signs();
    let n = tangents.len();
    let mut v = DMatrix::zeros(n + 1, ambient);
    for (i, t) in tangents.iter().enumerate() {
        for c in 0..ambient {
            v[(i, c)] = signs[c] * t[c];
        }
    }
    for c in 0..ambient {
        v[(n, c)] = signs[c] * x[c];
    }
    let gram = v.transpose() * &v;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..ambient).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .abs()
            .partial_cmp(&eig.eigenvalues[b].abs())
            .unwrap()
    });
    let max_eig = eig.eigenvalues[order[ambient - 1]].abs().max(1e-300);
    let second = eig.eigenvalues[order[1]].abs();
    if second <= 1e-12 * max_eig {
        return Err(GeomError::DegenerateTangency { point: u.to_vec() });
    }
    let mut kernel = eig.eigenvectors.column(order[0]).clone_owned();
    kernel *= kernel_sign(&kernel);
    Ok(kernel)
}

/// Full extrinsic package at a chart point.
pub fn extrinsic_data(imm: &Immersion, u: &[f64], opts: &ExtrinsicOptions) -> Result<ExtrinsicData> {
    let jet = imm.jet(u, 2)?;
    extrinsic_from_jet(imm, u, &jet, opts)
}

fn extrinsic_from_jet(
    imm: &Immersion,
    u: &[f64],
    jet: &Jet,
    opts: &ExtrinsicOptions,
) -> Result<ExtrinsicData> {
    let n = imm.chart_dim;
    let sf = &imm.space_form;
    let x = jet.value();
    let tangents: Vec<DVector<f64>> = (0..n).map(|i| jet.partial(i)).collect();

    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = sf.ambient_inner(&tangents[i], &tangents[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let metric = MetricMatrix::new(g.clone(), opts.metric_tol)
        .map_err(|_| GeomError::DegenerateMetric { point: u.to_vec() })?;

    let kernel = kernel_vector(imm, u, &x, &tangents)?;
    let self_product = sf.ambient_inner(&kernel, &kernel);
    if self_product.abs() < opts.lightlike_tol * kernel.norm_squared() {
        return Err(GeomError::LightlikeNormal {
            point: u.to_vec(),
            self_product,
        });
    }
    let epsilon = self_product.signum();
    let mut normal = kernel / self_product.abs().sqrt();

    let mut h = DMatrix::zeros(n, n);
    let fill_h = |h: &mut DMatrix<f64>, normal: &DVector<f64>| {
        for i in 0..n {
            for j in i..n {
                let v = epsilon * sf.ambient_inner(&jet.second_partial(i, j), normal);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
    };
    fill_h(&mut h, &normal);

    let lu = g.clone().lu();
    let mut shape = lu
        .solve(&h)
        .ok_or(GeomError::DegenerateMetric { point: u.to_vec() })?;

    // Orientation adjustment: ξ -> -ξ flips h, A and H but not ε.
    let flip = match &imm.orientation {
        Orientation::KernelSignRule => false,
        Orientation::TraceSign(sign) => {
            let tr = shape.trace();
            tr.abs() > 1e-12 && tr * sign < 0.0
        }
        Orientation::Align(reference) => {
            let r = reference(u);
            normal.dot(&r) < 0.0
        }
    };
    if flip {
        normal = -normal;
        h = -h;
        shape = -shape;
    }

    let mean_curvature = epsilon * shape.trace() / n as f64;

    Ok(ExtrinsicData {
        point: u.to_vec(),
        metric,
        normal,
        epsilon,
        second_form: h,
        shape_operator: shape,
        mean_curvature,
    })
}

pub fn first_fundamental_form(imm: &Immersion, u: &[f64]) -> Result<MetricMatrix> {
    extrinsic_data(imm, u, &ExtrinsicOptions::default()).map(|d| d.metric)
}

pub fn unit_normal(imm: &Immersion, u: &[f64]) -> Result<(DVector<f64>, f64)> {
    extrinsic_data(imm, u, &ExtrinsicOptions::default()).map(|d| (d.normal, d.epsilon))
}

pub fn second_fundamental_form(imm: &Immersion, u: &[f64]) -> Result<DMatrix<f64>> {
    extrinsic_data(imm, u, &ExtrinsicOptions::default()).map(|d| d.second_form)
}

pub fn shape_operator(imm: &Immersion, u: &[f64]) -> Result<DMatrix<f64>> {
    extrinsic_data(imm, u, &ExtrinsicOptions::default()).map(|d| d.shape_operator)
}

/// `<x, x> - 1/c` at the chart point.
pub fn quadric_residual(imm: &Immersion, u: &[f64]) -> Result<f64> {
    let x = imm.value(u)?;
    Ok(imm.space_form.ambient_inner(&x, &x) - imm.space_form.quadric_level())
}

// ---------------------------------------------------------------------------
// Jet-valued linear algebra helpers.
// ---------------------------------------------------------------------------

/// Solves `A X = B` for jet-valued square `A` by Gaussian elimination with
/// partial pivoting on the value parts. `b` holds the columns of `B` and is
/// overwritten with the solution columns.
fn jet_lu_solve(
    a: &mut Vec<Vec<ScalarJet>>,
    b: &mut Vec<Vec<ScalarJet>>,
    context: &'static str,
) -> Result<()> {
    let n = a.len();
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[k][k].value().abs();
        for i in k + 1..n {
            let v = a[i][k].value().abs();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return Err(GeomError::SingularJetSolve { context });
        }
        a.swap(k, pivot);
        for col in b.iter_mut() {
            col.swap(k, pivot);
        }
        let inv = a[k][k]
            .recip()
            .map_err(|_| GeomError::SingularJetSolve { context })?;
        for i in k + 1..n {
            let factor = a[i][k].mul(&inv).map_err(GeomError::Jet)?;
            for j in k..n {
                let t = factor.mul(&a[k][j]).map_err(GeomError::Jet)?;
                a[i][j] = a[i][j].sub(&t).map_err(GeomError::Jet)?;
            }
            for col in b.iter_mut() {
                let t = factor.mul(&col[k]).map_err(GeomError::Jet)?;
                col[i] = col[i].sub(&t).map_err(GeomError::Jet)?;
            }
        }
    }
    for col in b.iter_mut() {
        for k in (0..n).rev() {
            let mut acc = col[k].clone();
            for j in k + 1..n {
                let t = a[k][j].mul(&col[j]).map_err(GeomError::Jet)?;
                acc = acc.sub(&t).map_err(GeomError::Jet)?;
            }
            let inv = a[k][k]
                .recip()
                .map_err(|_| GeomError::SingularJetSolve { context })?;
            col[k] = acc.mul(&inv).map_err(GeomError::Jet)?;
        }
    }
    Ok(())
}

/// Induced-metric entries as jets one order below the immersion jet.
fn metric_jets(imm: &Immersion, jet: &Jet) -> Result<Vec<Vec<ScalarJet>>> {
    let n = imm.chart_dim;
    let ambient = imm.space_form.ambient_dim();
    let signs = imm.space_form.ambient_signs();
    let partials: Vec<Vec<ScalarJet>> = (0..n)
        .map(|i| {
            (0..ambient)
                .map(|c| jet.component(c).derivative(i))
                .collect::<jets::Result<Vec<_>>>()
        })
        .collect::<jets::Result<Vec<_>>>()?;
    let order = jet.order() - 1;
    let mut g = vec![vec![ScalarJet::constant(n, order, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = ScalarJet::constant(n, order, 0.0);
            for c in 0..ambient {
                let term = partials[i][c].mul(&partials[j][c]).map_err(GeomError::Jet)?;
                acc = acc.add(&term.scale(signs[c])).map_err(GeomError::Jet)?;
            }
            g[i][j] = acc.clone();
            g[j][i] = acc;
        }
    }
    Ok(g)
}

fn jet_identity(n: usize, vars: usize, order: usize) -> Vec<Vec<ScalarJet>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ScalarJet::constant(vars, order, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

fn truncate_matrix(m: &[Vec<ScalarJet>], order: usize) -> Vec<Vec<ScalarJet>> {
    m.iter()
        .map(|row| row.iter().map(|e| e.truncate(order)).collect())
        .collect()
}

/// Christoffel symbols `Γ^k_ij` as jets of the requested order, computed from
/// metric jets of order `order + 1`.
fn christoffel_jets(
    imm: &Immersion,
    g: &[Vec<ScalarJet>],
    order: usize,
) -> Result<Vec<Vec<Vec<ScalarJet>>>> {
    let n = imm.chart_dim;
    // dg[k][i][j] = ∂_k g_ij at `order`.
    let mut dg = vec![vec![vec![ScalarJet::constant(n, order, 0.0); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                dg[k][i][j] = g[i][j].derivative(k).map_err(GeomError::Jet)?;
            }
        }
    }
    let mut a = truncate_matrix(g, order);
    let mut ginv_cols = jet_identity(n, n, order)
        .into_iter()
        .map(|row| row)
        .collect::<Vec<_>>();
    // Columns of the identity: transpose the row-major identity.
    let mut cols: Vec<Vec<ScalarJet>> = (0..n)
        .map(|j| (0..n).map(|i| ginv_cols[i][j].clone()).collect())
        .collect();
    jet_lu_solve(&mut a, &mut cols, "inverse metric")?;
    // ginv[k][l] = cols[l][k]; the metric is symmetric so either index works.
    ginv_cols = (0..n)
        .map(|k| (0..n).map(|l| cols[l][k].clone()).collect())
        .collect();

    let mut gamma = vec![vec![vec![ScalarJet::constant(n, order, 0.0); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = ScalarJet::constant(n, order, 0.0);
                for l in 0..n {
                    let bracket = dg[i][j][l]
                        .add(&dg[j][i][l])
                        .map_err(GeomError::Jet)?
                        .sub(&dg[l][i][j])
                        .map_err(GeomError::Jet)?;
                    let term = ginv_cols[k][l].mul(&bracket).map_err(GeomError::Jet)?;
                    acc = acc.add(&term).map_err(GeomError::Jet)?;
                }
                let half = acc.scale(0.5);
                gamma[k][i][j] = half.clone();
                gamma[k][j][i] = half;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols `Γ^k_ij` at `u`; `result[k][(i, j)]`.
pub fn christoffel(imm: &Immersion, u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let jet = imm.jet(u, 2)?;
    let g = metric_jets(imm, &jet)?;
    let gamma = christoffel_jets(imm, &g, 0)?;
    let n = imm.chart_dim;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = gamma[k][i][j].value();
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Laplace–Beltrami operator with the trace-of-Hessian sign convention
/// (`Δf = div grad f`), applied to a scalar field sampled by finite
/// differences on the chart.
pub fn laplace_beltrami<F>(imm: &Immersion, f: &F, u: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = imm.chart_dim;
    let jet = imm.jet(u, 2)?;
    let g = metric_jets(imm, &jet)?;
    let gamma = christoffel_jets(imm, &g, 0)?;
    let mut gmat = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gmat[(i, j)] = g[i][j].value();
        }
    }
    let ginv = gmat
        .lu()
        .try_inverse()
        .ok_or(GeomError::DegenerateMetric { point: u.to_vec() })?;

    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let h = finite_diff::default_step(u[i]);
        grad[i] = finite_diff::d1(f, u, i, h).ok_or(GeomError::Stencil { point: u.to_vec() })?;
        for j in i..n {
            let hj = h.min(finite_diff::default_step(u[j]));
            let v = finite_diff::d2(f, u, i, j, hj)
                .ok_or(GeomError::Stencil { point: u.to_vec() })?;
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }

    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut corrected = hess[(i, j)];
            for k in 0..n {
                corrected -= gamma[k][i][j].value() * grad[k];
            }
            acc += ginv[(i, j)] * corrected;
        }
    }
    Ok(acc)
}

/// Chart components of `grad f = g^{ij} ∂_j f ∂_i` at `u`.
pub fn gradient<F>(imm: &Immersion, f: &F, u: &[f64]) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = imm.chart_dim;
    let jet = imm.jet(u, 1)?;
    let tangents: Vec<DVector<f64>> = (0..n).map(|i| jet.partial(i)).collect();
    let mut gmat = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gmat[(i, j)] = imm.space_form.ambient_inner(&tangents[i], &tangents[j]);
        }
    }
    let mut df = DVector::zeros(n);
    for i in 0..n {
        let h = finite_diff::default_step(u[i]);
        df[i] = finite_diff::d1(f, u, i, h).ok_or(GeomError::Stencil { point: u.to_vec() })?;
    }
    gmat.lu()
        .solve(&df)
        .ok_or(GeomError::DegenerateMetric { point: u.to_vec() })
}

/// Unit normal as a jet (to first order), sign-matched to `oriented_normal`.
fn normal_jet(
    imm: &Immersion,
    u: &[f64],
    jet: &Jet,
    oriented_normal: &DVector<f64>,
) -> Result<Vec<ScalarJet>> {
    let n = imm.chart_dim;
    let ambient = imm.space_form.ambient_dim();
    let signs = imm.space_form.ambient_signs();
    let order = jet.order() - 2;

    // Rows of the kernel system as jets: tangents and the position.
    let mut rows: Vec<Vec<ScalarJet>> = Vec::with_capacity(n + 1);
    for i in 0..n {
        let row: Vec<ScalarJet> = (0..ambient)
            .map(|c| {
                jet.component(c)
                    .derivative(i)
                    .map(|d| d.truncate(order).scale(signs[c]))
            })
            .collect::<jets::Result<_>>()?;
        rows.push(row);
    }
    rows.push(
        (0..ambient)
            .map(|c| jet.component(c).truncate(order).scale(signs[c]))
            .collect(),
    );

    // Pin the largest component of the oriented normal and solve for the rest.
    let mut pivot = 0;
    for c in 0..ambient {
        if oriented_normal[c].abs() > oriented_normal[pivot].abs() {
            pivot = c;
        }
    }
    let free: Vec<usize> = (0..ambient).filter(|&c| c != pivot).collect();
    let mut a: Vec<Vec<ScalarJet>> = rows
        .iter()
        .map(|row| free.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let mut rhs: Vec<Vec<ScalarJet>> = vec![rows.iter().map(|row| row[pivot].neg()).collect()];
    jet_lu_solve(&mut a, &mut rhs, "normal jet")?;

    let mut xi = vec![ScalarJet::constant(n, order, 0.0); ambient];
    xi[pivot] = ScalarJet::constant(n, order, 1.0);
    for (slot, &c) in free.iter().enumerate() {
        xi[c] = rhs[0][slot].clone();
    }

    // Normalize: ξ / sqrt(|<ξ, ξ>|), then match the oriented sign.
    let mut self_product = ScalarJet::constant(n, order, 0.0);
    for c in 0..ambient {
        let t = xi[c].mul(&xi[c]).map_err(GeomError::Jet)?;
        self_product = self_product.add(&t.scale(signs[c])).map_err(GeomError::Jet)?;
    }
    let sp_sign = self_product.value().signum();
    let inv_norm = self_product
        .scale(sp_sign)
        .sqrt()
        .and_then(|s| s.recip())
        .map_err(|_| GeomError::LightlikeNormal {
            point: u.to_vec(),
            self_product: self_product.value(),
        })?;
    let flip = if xi[pivot].value() * inv_norm.value() * oriented_normal[pivot] < 0.0 {
        -1.0
    } else {
        1.0
    };
    for c in 0..ambient {
        xi[c] = xi[c].mul(&inv_norm).map_err(GeomError::Jet)?.scale(flip);
    }
    Ok(xi)
}

/// Residuals of the structural equations at `u`.
///
/// The first value is `max |(∇_i h)_{jk} - (∇_j h)_{ik}|` over index triples;
/// the second is the maximal componentwise defect of
/// `R(X,Y)Z = c(<Y,Z>X - <X,Z>Y) + ε<AY,Z>AX - ε<AX,Z>AY` on coordinate
/// fields, with `R` assembled from coordinate curvature.
pub fn gauss_codazzi_residuals(
    imm: &Immersion,
    u: &[f64],
    opts: &ExtrinsicOptions,
) -> Result<(f64, f64)> {
    let n = imm.chart_dim;
    let c = imm.space_form.curvature;
    let jet = imm.jet(u, 3)?;
    let data = extrinsic_from_jet(imm, u, &jet.truncate(2), opts)?;
    let epsilon = data.epsilon;

    let g = metric_jets(imm, &jet)?; // order 2
    let gamma = christoffel_jets(imm, &g, 1)?; // order 1

    let xi = normal_jet(imm, u, &jet, &data.normal)?; // order 1
    let signs = imm.space_form.ambient_signs();

    // h_ij as order-1 jets: ε <∂_i ∂_j x, ξ>.
    let mut hjet = vec![vec![ScalarJet::constant(n, 1, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = ScalarJet::constant(n, 1, 0.0);
            for cc in 0..imm.space_form.ambient_dim() {
                let dd = jet
                    .component(cc)
                    .derivative(i)
                    .and_then(|d| d.derivative(j))
                    .map_err(GeomError::Jet)?;
                let term = dd.mul(&xi[cc]).map_err(GeomError::Jet)?;
                acc = acc.add(&term.scale(signs[cc])).map_err(GeomError::Jet)?;
            }
            let scaled = acc.scale(epsilon);
            hjet[i][j] = scaled.clone();
            hjet[j][i] = scaled;
        }
    }

    let hval = &data.second_form;
    let gammav = |k: usize, i: usize, j: usize| gamma[k][i][j].value();
    let dh = |k: usize, i: usize, j: usize| {
        let mut e = vec![0u8; n];
        e[k] = 1;
        hjet[i][j].coeff(&e)
    };

    // Codazzi: (∇_i h)_{jk} symmetric in i <-> j.
    let nabla_h = |i: usize, j: usize, k: usize| {
        let mut v = dh(i, j, k);
        for l in 0..n {
            v -= gammav(l, i, j) * hval[(l, k)] + gammav(l, i, k) * hval[(j, l)];
        }
        v
    };
    let mut codazzi: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                codazzi = codazzi.max((nabla_h(i, j, k) - nabla_h(j, i, k)).abs());
            }
        }
    }

    // Coordinate curvature R^l_{kij} = ∂_i Γ^l_{jk} - ∂_j Γ^l_{ik} + ΓΓ terms.
    let dgamma = |m: usize, k: usize, i: usize, j: usize| {
        let mut e = vec![0u8; n];
        e[m] = 1;
        gamma[k][i][j].coeff(&e)
    };
    let a = &data.shape_operator;
    let gm = data.metric.entries();
    let mut gauss: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = dgamma(i, l, j, k) - dgamma(j, l, i, k);
                    for m in 0..n {
                        r += gammav(m, j, k) * gammav(l, i, m) - gammav(m, i, k) * gammav(l, j, m);
                    }
                    let mut rhs = c
                        * (gm[(j, k)] * if l == i { 1.0 } else { 0.0 }
                            - gm[(i, k)] * if l == j { 1.0 } else { 0.0 });
                    rhs += epsilon * hval[(j, k)] * a[(l, i)] - epsilon * hval[(i, k)] * a[(l, j)];
                    gauss = gauss.max((r - rhs).abs());
                }
            }
        }
    }
    Ok((codazzi, gauss))
}

/// Max over chart directions of `|∂_i ξ + A(∂_i)|` in ambient components;
/// an independent cross-check of the shape operator.
pub fn weingarten_residual(imm: &Immersion, u: &[f64], opts: &ExtrinsicOptions) -> Result<f64> {
    let n = imm.chart_dim;
    let jet = imm.jet(u, 3)?;
    let data = extrinsic_from_jet(imm, u, &jet.truncate(2), opts)?;
    let xi = normal_jet(imm, u, &jet, &data.normal)?;
    let tangents: Vec<DVector<f64>> = (0..n).map(|i| jet.partial(i)).collect();
    let a = &data.shape_operator;
    let ambient = imm.space_form.ambient_dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut e = vec![0u8; n];
        e[i] = 1;
        for cc in 0..ambient {
            let mut v = xi[cc].coeff(&e);
            for l in 0..n {
                v += a[(l, i)] * tangents[l][cc];
            }
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// Mean curvature as a chart scalar field; `None` outside the domain (used to
/// feed finite-difference stencils).
pub fn mean_curvature_field<'a>(
    imm: &'a Immersion,
    opts: &'a ExtrinsicOptions,
) -> impl Fn(&[f64]) -> Option<f64> + 'a {
    move |u: &[f64]| extrinsic_data(imm, u, opts).ok().map(|d| d.mean_curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Equator S² inside the round S³(1): (θ, φ) -> (cosθcosφ, cosθsinφ, sinθ, 0).
    pub fn round_equator() -> Immersion {
        let sf = SpaceForm::sphere(3, 1.0);
        let map = FnChartMap::new(|vars: &[ScalarJet]| {
            let theta = &vars[0];
            let phi = &vars[1];
            let ct = theta.cos()?;
            let st = theta.sin()?;
            let cp = phi.cos()?;
            let sp = phi.sin()?;
            Ok(vec![
                ct.mul(&cp)?,
                ct.mul(&sp)?,
                st,
                ScalarJet::constant(theta.vars(), theta.order(), 0.0),
            ])
        });
        Immersion::new(
            sf,
            vec![(-1.2, 1.2), (-1.2, 1.2)],
            Arc::new(map),
        )
        .with_label("round-equator")
    }

    #[test]
    fn equator_metric_is_round() {
        let imm = round_equator();
        let u = [0.4, -0.7];
        let g = first_fundamental_form(&imm, &u).unwrap();
        let e = g.entries();
        assert_relative_eq!(e[(0, 0)], 1.0, epsilon = 1e-10);
        assert_relative_eq!(e[(1, 1)], 0.4f64.cos().powi(2), epsilon = 1e-10);
        assert_relative_eq!(e[(0, 1)], 0.0, epsilon = 1e-12);
        assert_eq!((e - e.transpose()).amax(), 0.0);
    }

    #[test]
    fn equator_normal_is_fourth_axis() {
        let imm = round_equator();
        let (xi, eps) = unit_normal(&imm, &[0.0, 0.0]).unwrap();
        assert_eq!(eps, 1.0);
        assert_relative_eq!(xi[3].abs(), 1.0, epsilon = 1e-12);
        for k in 0..3 {
            assert!(xi[k].abs() < 1e-12);
        }
        // Orthogonality residuals at a generic point.
        let u = [0.3, 0.5];
        let jet = imm.jet(&u, 1).unwrap();
        let (xi, _) = unit_normal(&imm, &u).unwrap();
        for i in 0..2 {
            let r = imm.space_form().ambient_inner(&xi, &jet.partial(i));
            assert!(r.abs() < 1e-10);
        }
        let rx = imm.space_form().ambient_inner(&xi, &jet.value());
        assert!(rx.abs() < 1e-10);
    }

    #[test]
    fn equator_is_totally_geodesic() {
        let imm = round_equator();
        let h = second_fundamental_form(&imm, &[0.3, -0.2]).unwrap();
        assert!(h.amax() < 1e-10);
        let a = shape_operator(&imm, &[0.3, -0.2]).unwrap();
        assert!(a.amax() < 1e-10);
    }

    #[test]
    fn equator_christoffels_match_round_metric() {
        let imm = round_equator();
        let u = [0.35, 0.6];
        let gamma = christoffel(&imm, &u).unwrap();
        let theta = u[0];
        // metric dθ² + cos²θ dφ²: Γ^θ_{φφ} = sinθcosθ, Γ^φ_{θφ} = -tanθ.
        assert_relative_eq!(gamma[0][(1, 1)], theta.sin() * theta.cos(), epsilon = 1e-8);
        assert_relative_eq!(gamma[1][(0, 1)], -theta.tan(), epsilon = 1e-8);
        assert_relative_eq!(gamma[0][(0, 0)], 0.0, epsilon = 1e-10);
        for k in 0..2 {
            assert_eq!(gamma[k][(0, 1)], gamma[k][(1, 0)]);
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let imm = round_equator();
        let f = |_: &[f64]| Some(2.5);
        let v = laplace_beltrami(&imm, &f, &[0.2, 0.1]).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn laplacian_is_linear() {
        let imm = round_equator();
        let f = |u: &[f64]| Some((u[0] + 0.2).sin() * u[1]);
        let g = |u: &[f64]| Some(u[0] * u[0] - u[1]);
        let combo = |u: &[f64]| Some(2.0 * (u[0] + 0.2).sin() * u[1] + 3.0 * (u[0] * u[0] - u[1]));
        let u = [0.25, -0.4];
        let lf = laplace_beltrami(&imm, &f, &u).unwrap();
        let lg = laplace_beltrami(&imm, &g, &u).unwrap();
        let lc = laplace_beltrami(&imm, &combo, &u).unwrap();
        assert_relative_eq!(lc, 2.0 * lf + 3.0 * lg, epsilon = 1e-6);
    }

    #[test]
    fn equator_curvature_residuals_vanish() {
        let imm = round_equator();
        let (codazzi, gauss) =
            gauss_codazzi_residuals(&imm, &[0.3, 0.4], &ExtrinsicOptions::default()).unwrap();
        assert!(codazzi < 1e-8, "codazzi {codazzi}");
        assert!(gauss < 1e-8, "gauss {gauss}");
    }

    #[test]
    fn equator_weingarten_residual_vanishes() {
        let imm = round_equator();
        let r = weingarten_residual(&imm, &[0.3, 0.4], &ExtrinsicOptions::default()).unwrap();
        assert!(r < 1e-9, "weingarten {r}");
    }

    #[test]
    fn quadric_residual_is_zero_on_sphere() {
        let imm = round_equator();
        let r = quadric_residual(&imm, &[0.5, -0.9]).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let imm = round_equator();
        assert!(matches!(
            imm.jet(&[5.0, 0.0], 2),
            Err(GeomError::Jet(JetError::OutsideDomain { .. }))
        ));
        assert!(matches!(
            imm.jet(&[0.0, 0.0], 5),
            Err(GeomError::Jet(JetError::OrderOutOfRange(5)))
        ));
    }

    #[test]
    fn space_form_signatures() {
        let ds = SpaceForm::de_sitter(4, 1.0);
        assert_eq!(ds.ambient_signature(), Signature::new(5, 1));
        let ads = SpaceForm::anti_de_sitter(4, -1.0);
        assert_eq!(ads.ambient_signature(), Signature::new(5, 2));
        assert_eq!(ads.quadric_level(), -1.0);
        assert!(SpaceForm::new(3, 0, 0.0).is_err());
    }
}
