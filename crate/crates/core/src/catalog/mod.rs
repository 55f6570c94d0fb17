//! Verified instances of the standard PMCV hypersurface families, plus
//! baseline umbilical and minimal hypersurfaces.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ChartMap, GeomError, Immersion};
use crate::jets::{self, Jet, JetError, ScalarJet};
use crate::linalg::FormTag;

pub mod examples;
pub mod frames;
pub mod umbilical;

pub use examples::{
    example_4_1, example_4_2, example_4_3, example_4_4, frame_spec_4_1, frame_spec_4_2,
    frame_spec_4_3, frame_spec_4_4, initial_frame_4_1, initial_frame_4_2, initial_frame_4_3,
    initial_frame_4_4, theta_from_cot, Family41, Family42, Family43, Family44,
};
pub use frames::{integrate_frame, CoeffFn, FrameField, FrameOdeSpec, IntegrateOptions, MatrixEntry};
pub use umbilical::{ads_riemannian_equator, build_umbilical, round_equator, umbilical_slice};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coefficient matrix is not skew-adjoint w.r.t. the Gram target: entry ({row}, {col}) violates by {defect:.3e}")]
    NotSkewAdjoint { row: usize, col: usize, defect: f64 },
    #[error("initial frame does not satisfy the Gram target (defect {defect:.3e})")]
    InitialFrameMismatch { defect: f64 },
    #[error("Gram target is degenerate")]
    DegenerateGramTarget,
    #[error("Gram restoration failed to converge (drift {drift:.3e})")]
    ProjectionFailure { drift: f64 },
    #[error("Gram drift {drift:.3e} exceeds the integration budget")]
    GramDrift { drift: f64 },
    #[error("degenerate slice (normal self-product {value:.3e})")]
    DegenerateSlice { value: f64 },
    #[error("unsupported construction: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

/// Eigenvalue expectation attached to a catalog instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExpectedEigenvalue {
    pub value: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectedSpectrum {
    pub eigenvalues: Vec<ExpectedEigenvalue>,
    pub form: FormTag,
}

/// Serializable description of a catalog instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub family: String,
    pub n: usize,
    pub p: Option<usize>,
    pub mu: Option<f64>,
    pub theta: Option<f64>,
    pub curvature: f64,
    pub index: usize,
    pub coefficient_spec: String,
    pub t_range: Option<(f64, f64)>,
}

/// An immersion together with its construction data and the spectrum it is
/// expected to exhibit.
#[derive(Debug, Clone)]
pub struct CatalogInstance {
    pub immersion: Immersion,
    pub descriptor: InstanceDescriptor,
    pub expected_spectrum: Option<ExpectedSpectrum>,
    /// Expected PMCV constant; `None` for minimal instances.
    pub expected_lambda: Option<f64>,
    pub expected_epsilon: Option<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Additive smooth perturbation of an immersion: each ambient component gains
/// `delta · Π_i sin(ω_i u_i + φ_i)` with fixed pseudo-random frequencies.
/// Used as a negative control; the result is not a hypersurface of the
/// space form any more.
struct PerturbedMap {
    inner: Arc<dyn ChartMap>,
    delta: f64,
    freqs: Vec<Vec<f64>>,
    phases: Vec<Vec<f64>>,
}

impl ChartMap for PerturbedMap {
    fn eval_jet(&self, u: &[f64], order: usize) -> jets::Result<Jet> {
        let jet = self.inner.eval_jet(u, order)?;
        let vars: Vec<ScalarJet> = u
            .iter()
            .enumerate()
            .map(|(k, &v)| ScalarJet::variable(u.len(), order, k, v))
            .collect::<jets::Result<_>>()?;
        let mut comps = Vec::with_capacity(jet.ambient_dim());
        for c in 0..jet.ambient_dim() {
            let mut bump = ScalarJet::constant(u.len(), order, self.delta);
            for (i, v) in vars.iter().enumerate() {
                let arg = v.scale(self.freqs[c][i]).add_scalar(self.phases[c][i]);
                bump = bump.mul(&arg.sin()?)?;
            }
            comps.push(jet.component(c).add(&bump)?);
        }
        Jet::new(u.to_vec(), comps)
    }
}

/// Wraps an immersion with a deterministic smooth bump of amplitude `delta`.
pub fn perturb(imm: &Immersion, delta: f64, seed: u64) -> Immersion {
    let ambient = imm.space_form().ambient_dim();
    let chart = imm.chart_dim();
    let mut state = seed ^ 0xD1B5_4A32_D192_ED03;
    let mut freqs = Vec::with_capacity(ambient);
    let mut phases = Vec::with_capacity(ambient);
    for _ in 0..ambient {
        freqs.push((0..chart).map(|_| 1.5 + 2.0 * uniform(&mut state)).collect());
        phases.push(
            (0..chart)
                .map(|_| 0.3 + 5.0 * uniform(&mut state))
                .collect(),
        );
    }
    let map = PerturbedMap {
        inner: imm.map_handle(),
        delta,
        freqs,
        phases,
    };
    Immersion::new(*imm.space_form(), imm.domain().to_vec(), Arc::new(map))
        .with_orientation(imm.orientation().clone())
        .with_label(format!("{}+perturbed({delta})", imm.label()))
}
