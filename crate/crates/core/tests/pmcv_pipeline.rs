//! End-to-end PMCV verification on catalog instances, including negative
//! controls and orientation invariance.

mod common;

use approx::assert_relative_eq;

use pmcv_core::analysis::{
    self, estimate_lambda, full_report, isoparametric_check, pmcv_condition1, AnalysisOptions,
    GridSpec, LambdaEstimate,
};
use pmcv_core::catalog::{self, Family41, Family43};
use pmcv_core::geometry::{self, ExtrinsicOptions, Orientation, SpaceForm};

fn sample_points(imm: &pmcv_core::geometry::Immersion, per_axis: usize) -> Vec<Vec<f64>> {
    GridSpec::uniform(per_axis, imm.chart_dim()).points(imm.domain())
}

#[test]
fn umbilical_lambda_is_n_mu_squared() {
    // μ = 2, n = 3, ε = 1: λ = ε n μ² = 12.
    let inst = catalog::build_umbilical(SpaceForm::de_sitter(4, 1.0), 2.0).unwrap();
    let pts = sample_points(&inst.immersion, 2);
    match estimate_lambda(&inst.immersion, &pts, &AnalysisOptions::default()).unwrap() {
        LambdaEstimate::Proper { lambda, spread } => {
            assert_relative_eq!(lambda, 12.0, epsilon = 1e-6);
            assert!(spread < 1e-6, "spread {spread:.3e}");
        }
        other => panic!("expected a proper estimate, got {other:?}"),
    }
}

#[test]
fn minimal_equator_reports_the_minimal_flag() {
    let inst = catalog::build_umbilical(SpaceForm::de_sitter(4, 1.0), 0.0).unwrap();
    let pts = sample_points(&inst.immersion, 2);
    assert!(matches!(
        estimate_lambda(&inst.immersion, &pts, &AnalysisOptions::default()).unwrap(),
        LambdaEstimate::Minimal
    ));
}

#[test]
fn family_4_3_lambda_matches_the_closed_form() {
    let inst = catalog::example_4_3(&Family43::from_cot(4, 2, 2.0)).unwrap();
    let pts = sample_points(&inst.immersion, 2);
    match estimate_lambda(&inst.immersion, &pts, &AnalysisOptions::default()).unwrap() {
        LambdaEstimate::Proper { lambda, spread } => {
            assert_relative_eq!(lambda, 8.5, epsilon = 1e-5);
            assert!(spread < 1e-5, "spread {spread:.3e}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn condition_one_holds_on_catalog_and_fails_on_perturbation() {
    let inst = catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap();
    let opts = AnalysisOptions::default();
    let u = inst.immersion.domain_center();
    let (residual, grad) = pmcv_condition1(&inst.immersion, &u, &opts).unwrap();
    assert!(residual < 1e-6, "residual {residual:.3e}");
    assert!(grad < 1e-6, "grad {grad:.3e}");

    let perturbed = catalog::perturb(&inst.immersion, 1e-2, 11);
    let (_, grad) = pmcv_condition1(&perturbed, &u, &opts).unwrap();
    assert!(grad > 1e-3, "perturbed gradient too small: {grad:.3e}");
}

#[test]
fn isoparametric_on_catalog_but_not_on_perturbation() {
    let inst = catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap();
    let opts = AnalysisOptions::default();
    let pts = sample_points(&inst.immersion, 2);
    let report = isoparametric_check(&inst.immersion, &pts, &opts).unwrap();
    assert!(report.isoparametric, "spread {:.3e}", report.relative_spread);
    assert!(report.relative_spread < 1e-10);

    let perturbed = catalog::perturb(&inst.immersion, 1e-2, 11);
    let report = isoparametric_check(&perturbed, &pts, &opts).unwrap();
    assert!(!report.isoparametric);
}

#[test]
fn laplacian_of_mean_curvature_vanishes_on_catalog() {
    let inst = catalog::example_4_3(&Family43::from_cot(4, 2, 2.0)).unwrap();
    let opts = ExtrinsicOptions::default();
    let h = geometry::mean_curvature_field(&inst.immersion, &opts);
    let u = inst.immersion.domain_center();
    let dh = geometry::laplace_beltrami(&inst.immersion, &h, &u).unwrap();
    assert!(dh.abs() < 1e-6, "ΔH = {dh:.3e}");
}

#[test]
fn full_report_passes_for_type_ii_instance() {
    let inst = catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap();
    let report = full_report(&inst, &GridSpec::uniform(3, 4), &AnalysisOptions::default()).unwrap();
    assert!(report.passed, "checks: {:?}", report.checks);
    assert!(report.theorems.t33.passed());
    assert!(report.theorems.t35.passed());
    assert!(report.theorems.t45_t46.passed());
    let lambda = report.pmcv.lambda.unwrap();
    assert_relative_eq!(lambda, 5.0, epsilon = 1e-6);
    // H² sits strictly inside (0, ελ/n) for the two-curvature case.
    let h2 = report.extrinsic_summary.mean_curvature_mean.powi(2);
    assert!(h2 > 0.0 && h2 < lambda / 4.0);
}

#[test]
fn full_report_flags_the_negative_control() {
    let inst = catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap();
    let mut control = inst.clone();
    control.immersion = catalog::perturb(&inst.immersion, 1e-2, 7);
    control.expected_spectrum = None;
    control.expected_lambda = None;
    let report =
        full_report(&control, &GridSpec::uniform(3, 4), &AnalysisOptions::default()).unwrap();
    assert!(!report.passed);
    assert!(report.pmcv.residuals.codazzi_max > 1e-3);
    assert!(report.pmcv.residuals.grad_h_max > 1e-3);
    assert!(!report.pmcv.isoparametric);
}

#[test]
fn lambda_is_orientation_invariant() {
    // Flipping the normal flips H and A jointly, so the PMCV quotient
    // (ΔH + εH trA²)/H is unchanged.
    let mu = 2.0_f64.sqrt();
    let inst = catalog::example_4_1(&Family41::new(4, 2, mu)).unwrap();
    let flipped = inst
        .immersion
        .clone()
        .with_orientation(Orientation::TraceSign(-1.0));
    let opts = AnalysisOptions::default();
    let pts = sample_points(&inst.immersion, 2);

    let h0 = geometry::extrinsic_data(&inst.immersion, &pts[0], &opts.extrinsic)
        .unwrap()
        .mean_curvature;
    let h1 = geometry::extrinsic_data(&flipped, &pts[0], &opts.extrinsic)
        .unwrap()
        .mean_curvature;
    assert_relative_eq!(h0, -h1, epsilon = 1e-12);

    let l0 = match estimate_lambda(&inst.immersion, &pts, &opts).unwrap() {
        LambdaEstimate::Proper { lambda, .. } => lambda,
        other => panic!("{other:?}"),
    };
    let l1 = match estimate_lambda(&flipped, &pts, &opts).unwrap() {
        LambdaEstimate::Proper { lambda, .. } => lambda,
        other => panic!("{other:?}"),
    };
    assert_relative_eq!(l0, l1, epsilon = 1e-8);
}

#[test]
fn closed_forms_match_newton_oracle_spotcheck() {
    // One representative tuple; the full sweep lives in the acceptance suite.
    let (n, l, c, eps, lambda) = (5usize, 2usize, -1.0, 1.0, 7.0);
    let data = analysis::two_curvature_closed_forms(
        n,
        l,
        c,
        eps,
        lambda,
        analysis::CurvatureKind::Real,
    )
    .unwrap();
    let sols = common::newton_two_curvature(n, l, c, eps, lambda);
    assert!(!sols.is_empty());
    for (mu, nu) in sols {
        if (mu - nu).abs() < 1e-8 {
            continue;
        }
        let h2 = ((l as f64 * mu + (n - l) as f64 * nu) / n as f64).powi(2);
        let matched = data.branches.iter().any(|b| {
            (b.h_squared - h2).abs() < 1e-10
                && (b.mu_squared - mu * mu).abs() < 1e-10
                && (b.nu_squared - nu * nu).abs() < 1e-10
        });
        assert!(matched, "no branch matches Newton solution ({mu}, {nu})");
    }
}

#[test]
fn report_spectrum_distinguishes_de_sitter_forms() {
    let inst = catalog::example_4_3(&Family43::from_cot(4, 4, 2.0)).unwrap();
    // p = n: a single principal curvature with one 2-block.
    let report = full_report(&inst, &GridSpec::uniform(2, 4), &AnalysisOptions::default()).unwrap();
    assert!(report.passed, "checks: {:?}", report.checks);
    assert_eq!(report.spectrum.eigenvalues.len(), 1);
    assert_eq!(report.spectrum.eigenvalues[0].algebraic, 4);
    assert_eq!(report.spectrum.eigenvalues[0].geometric, 3);
    // Equality case of the curvature bound: H² = ελ/n.
    let lambda = report.pmcv.lambda.unwrap();
    let h2 = report.extrinsic_summary.mean_curvature_mean.powi(2);
    assert_relative_eq!(h2, lambda / 4.0, epsilon = 1e-7);
}
