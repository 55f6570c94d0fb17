//! Totally umbilical hypersurfaces as affine-hyperplane slices of the quadric
//! model: `{ <x, w> = d }` intersected with `<x, x> = 1/c`.
//!
//! The normal inside the space form is `ξ ∝ w - c d x`, so the slice is
//! umbilical with `A = μ I`, `μ² = c²d² / |η - c d²|` where `η = <w, w>`.
//! `d = 0` yields totally geodesic equators; a null `w` with `d != 0` yields
//! the flat horospheres of the hyperbolic space forms.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{CatalogError, CatalogInstance, ExpectedEigenvalue, ExpectedSpectrum, InstanceDescriptor, Result};
use crate::geometry::{FnChartMap, Immersion, Orientation, SpaceForm};
use crate::jets::{self, ScalarJet};
use crate::linalg::FormTag;

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

fn angle_domain(angles: usize) -> Vec<(f64, f64)> {
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

/// Chart of the sub-quadric `{ <u, u> = level }` for the listed diagonal
/// signs (timelike axes first). Returns the component formula and the chart
/// domain (dimension `sub_signs.len() - 1`).
type QuadricChart = (
    Box<dyn Fn(&[ScalarJet]) -> jets::Result<Vec<ScalarJet>> + Send + Sync>,
    Vec<(f64, f64)>,
);

fn quadric_chart(sub_signs: &[f64], level: f64) -> Result<QuadricChart> {
    let k = sub_signs.len();
    let n = k - 1;
    let index = sub_signs.iter().filter(|&&s| s < 0.0).count();
    let rho = level.abs().sqrt();
    match (index, level > 0.0) {
        // Round sphere S^n.
        (0, true) => {
            let f = move |vars: &[ScalarJet]| sphere_jets(vars, vars[0].vars(), vars[0].order());
            Ok((
                Box::new(move |vars: &[ScalarJet]| {
                    Ok(f(vars)?.into_iter().map(|c| c.scale(rho)).collect())
                }),
                angle_domain(n),
            ))
        }
        // De Sitter S^n_1: (sinh w0, cosh w0 · Ω).
        (1, true) => {
            let mut domain = vec![(-0.8, 0.8)];
            domain.extend(angle_domain(n - 1));
            Ok((
                Box::new(move |vars: &[ScalarJet]| {
                    let (vs, order) = (vars[0].vars(), vars[0].order());
                    let w = &vars[0];
                    let ew = w.exp()?;
                    let emw = ew.recip()?;
                    let sinh = ew.sub(&emw)?.scale(0.5);
                    let cosh = ew.add(&emw)?.scale(0.5);
                    let sphere = sphere_jets(&vars[1..], vs, order)?;
                    let mut out = Vec::with_capacity(sphere.len() + 1);
                    out.push(sinh.scale(rho));
                    for s in sphere {
                        out.push(cosh.mul(&s)?.scale(rho));
                    }
                    Ok(out)
                }),
                domain,
            ))
        }
        // Hyperbolic H^n: (cosh w0, sinh w0 · Ω).
        (1, false) => {
            let mut domain = vec![(0.3, 1.1)];
            domain.extend(angle_domain(n - 1));
            Ok((
                Box::new(move |vars: &[ScalarJet]| {
                    let (vs, order) = (vars[0].vars(), vars[0].order());
                    let w = &vars[0];
                    let ew = w.exp()?;
                    let emw = ew.recip()?;
                    let sinh = ew.sub(&emw)?.scale(0.5);
                    let cosh = ew.add(&emw)?.scale(0.5);
                    let sphere = sphere_jets(&vars[1..], vs, order)?;
                    let mut out = Vec::with_capacity(sphere.len() + 1);
                    out.push(cosh.scale(rho));
                    for s in sphere {
                        out.push(sinh.mul(&s)?.scale(rho));
                    }
                    Ok(out)
                }),
                domain,
            ))
        }
        // Anti-de Sitter H^n_1: (cosh σ cos τ, cosh σ sin τ, sinh σ · Ω).
        (2, false) => {
            let mut domain = vec![(-0.8, 0.8), (0.3, 1.1)];
            domain.extend(angle_domain(n - 2));
            Ok((
                Box::new(move |vars: &[ScalarJet]| {
                    let (vs, order) = (vars[0].vars(), vars[0].order());
                    let tau = &vars[0];
                    let sigma = &vars[1];
                    let es = sigma.exp()?;
                    let ems = es.recip()?;
                    let sinh = es.sub(&ems)?.scale(0.5);
                    let cosh = es.add(&ems)?.scale(0.5);
                    let sphere = sphere_jets(&vars[2..], vs, order)?;
                    let mut out = Vec::with_capacity(sphere.len() + 2);
                    out.push(cosh.mul(&tau.cos()?)?.scale(rho));
                    out.push(cosh.mul(&tau.sin()?)?.scale(rho));
                    for s in sphere {
                        out.push(sinh.mul(&s)?.scale(rho));
                    }
                    Ok(out)
                }),
                domain,
            ))
        }
        _ => Err(CatalogError::Unsupported(format!(
            "no chart for a sub-quadric of index {index} at level {level}"
        ))),
    }
}

/// Umbilical slice `{ <x, w> = d }` of the space form, with `w` of causal
/// character `eta ∈ {+1, -1, 0}` (spacelike, timelike, null).
pub fn umbilical_slice(sf: SpaceForm, eta: i8, d: f64) -> Result<CatalogInstance> {
    let c = sf.curvature;
    let ambient = sf.ambient_dim();
    let signs = sf.ambient_signs();

    if eta == 0 {
        return horosphere(sf, d);
    }
    let eta_f = eta as f64;
    let denom = eta_f - c * d * d;
    if denom.abs() < 1e-10 {
        return Err(CatalogError::DegenerateSlice { value: denom });
    }
    let epsilon = denom.signum();
    let mu = c * d / denom.abs().sqrt();

    // Slice axis: last (spacelike) or first (timelike).
    let w_axis = if eta > 0 { ambient - 1 } else { 0 };
    if signs[w_axis] != eta_f {
        return Err(CatalogError::Unsupported(format!(
            "no axis of causal sign {eta} available for the slice"
        )));
    }
    let sub_signs: Vec<f64> = signs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != w_axis)
        .map(|(_, &s)| s)
        .collect();
    let level = 1.0 / c - d * d / eta_f;
    if level.abs() < 1e-12 {
        return Err(CatalogError::DegenerateSlice { value: level });
    }
    let (chart, domain) = quadric_chart(&sub_signs, level)?;
    let offset = d / eta_f;
    let map = FnChartMap::new(move |vars: &[ScalarJet]| {
        let sub = chart(vars)?;
        let (vs, order) = (vars[0].vars(), vars[0].order());
        let mut out = Vec::with_capacity(sub.len() + 1);
        let mut it = sub.into_iter();
        for axis in 0..ambient {
            if axis == w_axis {
                out.push(ScalarJet::constant(vs, order, offset));
            } else {
                out.push(it.next().expect("sub-chart component"));
            }
        }
        Ok(out)
    });

    let orientation = if mu == 0.0 {
        Orientation::KernelSignRule
    } else {
        Orientation::TraceSign(mu.signum())
    };
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(orientation)
        .with_label(format!(
            "umbilical(dim={}, index={}, c={c}, mu={mu:.6})",
            sf.dim, sf.index
        ));
    Ok(instance(sf, immersion, mu, epsilon))
}

/// Flat horosphere of a hyperbolic space form (`w` null, `|μ| = sqrt(|c|)`).
fn horosphere(sf: SpaceForm, d: f64) -> Result<CatalogInstance> {
    let c = sf.curvature;
    if c >= 0.0 {
        return Err(CatalogError::Unsupported(
            "horospheres need negative curvature".into(),
        ));
    }
    if d == 0.0 {
        return Err(CatalogError::DegenerateSlice { value: 0.0 });
    }
    let ambient = sf.ambient_dim();
    let n = sf.dim - 1;
    let signs = sf.ambient_signs();
    // w = e_0 + e_last (null), w' = (e_last - e_0)/2, <w, w'> = 1.
    let alpha = 1.0 / (2.0 * c * d);
    let mid_signs: Vec<f64> = signs[1..ambient - 1].to_vec();
    let map = FnChartMap::new(move |vars: &[ScalarJet]| {
        let (vs, order) = (vars[0].vars(), vars[0].order());
        // β = -Σ ε_i v_i² / (2d)
        let mut beta = ScalarJet::constant(vs, order, 0.0);
        for (i, v) in vars.iter().enumerate() {
            beta = beta.add(&v.mul(v)?.scale(mid_signs[i]))?;
        }
        beta = beta.scale(-1.0 / (2.0 * d));
        let mut out = Vec::with_capacity(ambient);
        // x = (α + β) w + d w' + Σ v_i e_{i+1}
        out.push(beta.add_scalar(alpha - d / 2.0)); // e_0 component
        for v in vars {
            out.push(v.clone());
        }
        out.push(beta.add_scalar(alpha + d / 2.0)); // e_last component
        Ok(out)
    });
    let mu = -d.signum() * c.abs().sqrt();
    let domain = vec![(-0.8, 0.8); n];
    let immersion = Immersion::new(sf, domain, Arc::new(map))
        .with_orientation(Orientation::TraceSign(mu.signum()))
        .with_label(format!(
            "horosphere(dim={}, index={}, c={c}, mu={mu:.6})",
            sf.dim, sf.index
        ));
    Ok(instance(sf, immersion, mu, 1.0))
}

fn instance(sf: SpaceForm, immersion: Immersion, mu: f64, epsilon: f64) -> CatalogInstance {
    let n = sf.dim - 1;
    let minimal = mu == 0.0;
    CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "umbilical".into(),
            n,
            p: None,
            mu: Some(mu),
            theta: None,
            curvature: sf.curvature,
            index: sf.index,
            coefficient_spec: String::new(),
            t_range: None,
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues: vec![ExpectedEigenvalue {
                value: mu,
                algebraic: n,
                geometric: n,
            }],
            form: FormTag::I,
        }),
        expected_lambda: if minimal {
            None
        } else {
            Some(epsilon * n as f64 * mu * mu)
        },
        expected_epsilon: Some(epsilon),
    }
}

/// Umbilical hypersurface with prescribed principal curvature `μ`
/// (`A = μ I`); `μ = 0` yields a totally geodesic equator.
pub fn build_umbilical(sf: SpaceForm, mu: f64) -> Result<CatalogInstance> {
    let c = sf.curvature;
    if mu == 0.0 {
        return umbilical_slice(sf, 1, 0.0);
    }
    // The slice realizes μ = c d / √|η - c d²|, so the sign of d is tied to
    // the requested sign of μ.
    let orient = mu.signum() * c.signum();
    if c > 0.0 {
        let d = (mu * mu / (c * (mu * mu + c))).sqrt();
        return umbilical_slice(sf, 1, orient * d);
    }
    let ac = -c;
    if (mu * mu - ac).abs() < 1e-12 {
        umbilical_slice(sf, 0, -mu.signum() / ac.sqrt())
    } else if mu * mu < ac {
        let d = (mu * mu / (ac * (ac - mu * mu))).sqrt();
        umbilical_slice(sf, 1, orient * d)
    } else {
        let d = (mu * mu / (ac * (mu * mu - ac))).sqrt();
        umbilical_slice(sf, -1, orient * d)
    }
}

/// Totally geodesic Riemannian equator of an anti-de Sitter space form; its
/// unit normal is timelike (`ε = -1`).
pub fn ads_riemannian_equator(dim: usize, c: f64) -> Result<CatalogInstance> {
    umbilical_slice(SpaceForm::anti_de_sitter(dim, c), -1, 0.0)
}

/// The equator 2-sphere of the round `S³(1)` in the explicit trigonometric
/// chart `(θ, φ) -> (cosθcosφ, cosθsinφ, sinθ, 0)`.
pub fn round_equator() -> CatalogInstance {
    let sf = SpaceForm::sphere(3, 1.0);
    let map = FnChartMap::new(|vars: &[ScalarJet]| {
        let theta = &vars[0];
        let phi = &vars[1];
        let ct = theta.cos()?;
        Ok(vec![
            ct.mul(&phi.cos()?)?,
            ct.mul(&phi.sin()?)?,
            theta.sin()?,
            ScalarJet::constant(theta.vars(), theta.order(), 0.0),
        ])
    });
    let immersion = Immersion::new(sf, vec![(-1.2, 1.2), (-PI / 2.0, PI / 2.0)], Arc::new(map))
        .with_label("round-equator");
    CatalogInstance {
        immersion,
        descriptor: InstanceDescriptor {
            family: "round_equator".into(),
            n: 2,
            p: None,
            mu: Some(0.0),
            theta: None,
            curvature: 1.0,
            index: 0,
            coefficient_spec: String::new(),
            t_range: None,
        },
        expected_spectrum: Some(ExpectedSpectrum {
            eigenvalues: vec![ExpectedEigenvalue {
                value: 0.0,
                algebraic: 2,
                geometric: 2,
            }],
            form: FormTag::I,
        }),
        expected_lambda: None,
        expected_epsilon: Some(1.0),
    }
}
