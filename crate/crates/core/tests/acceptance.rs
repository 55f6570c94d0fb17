//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line (use `--nocapture` to see them on success).

mod common;

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pmcv_core::analysis::{
    classify_lorentzian_pmcv, full_report, two_curvature_closed_forms, AnalysisOptions,
    CurvatureKind, GridSpec, LorentzAmbient,
};
use pmcv_core::catalog::{
    self, frame_spec_4_3, initial_frame_4_3, integrate_frame, CatalogInstance, Family41, Family42,
    Family43, Family44, IntegrateOptions,
};
use pmcv_core::geometry::{self, SpaceForm};
use pmcv_core::linalg::{
    canonical_shape_matrix, classify_canonical_form, eigen_structure, CanonicalFormParams,
    FormTag, MetricMatrix, SpectrumOptions,
};

fn conclude(id: &str, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] acceptance {id} {name}: {detail}");
    assert!(ok, "acceptance {id} {name}: {detail}");
}

#[test]
fn a01_type_ii_de_sitter_end_to_end() {
    let started = Instant::now();
    let inst = catalog::example_4_3(&Family43::from_cot(4, 2, 2.0)).unwrap();
    let grid = GridSpec::uniform(5, 4);
    let opts = AnalysisOptions::default();

    // Principal curvatures {2 (mult 2), -1/2 (mult 2)} within 1e-6 at every
    // grid point.
    let mut worst_eig: f64 = 0.0;
    let mut mults_ok = true;
    for u in grid.points(inst.immersion.domain()) {
        let data = geometry::extrinsic_data(&inst.immersion, &u, &opts.extrinsic).unwrap();
        let s = eigen_structure(&data.shape_operator, &opts.spectrum).unwrap();
        if s.real_eigenvalues.len() != 2 {
            mults_ok = false;
            break;
        }
        for e in &s.real_eigenvalues {
            let (want, alg, geom) = if e.value > 0.0 {
                (2.0, 2, 1)
            } else {
                (-0.5, 2, 2)
            };
            worst_eig = worst_eig.max((e.value - want).abs());
            mults_ok &= e.algebraic == alg && e.geometric == geom;
        }
    }

    let report = full_report(&inst, &grid, &opts).unwrap();
    let lambda = report.pmcv.lambda.unwrap_or(f64::NAN);
    let spread = report.pmcv.spread.unwrap_or(f64::NAN);
    let elapsed = started.elapsed().as_secs_f64();

    let ok = mults_ok
        && worst_eig < 1e-6
        && (lambda - 8.5).abs() < 1e-5
        && spread < 1e-5
        && elapsed < 10.0;
    conclude(
        "01",
        "type II de Sitter end-to-end (5^4 grid)",
        ok,
        &format!(
            "eig dev {worst_eig:.2e}, λ = {lambda:.9} (dev {:.2e}), spread {spread:.2e}, {elapsed:.2}s",
            (lambda - 8.5).abs()
        ),
    );
}

#[test]
fn a02_type_ii_anti_de_sitter_form_and_residuals() {
    let inst = catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap();
    let opts = AnalysisOptions::default();
    let report = full_report(&inst, &GridSpec::uniform(3, 4), &opts).unwrap();

    let blocked = report
        .spectrum
        .eigenvalues
        .iter()
        .find(|e| (e.value - 2.0_f64.sqrt()).abs() < 1e-3);
    let geom_ok = matches!(blocked, Some(e) if e.geometric == 1 && e.algebraic == 2);
    let form_ok = report.spectrum.form == FormTag::II;
    let lambda = report.pmcv.lambda.unwrap_or(f64::NAN);
    let res = &report.pmcv.residuals;
    let ok = geom_ok
        && form_ok
        && (lambda - 5.0).abs() < 1e-5
        && res.codazzi_max < 1e-6
        && res.gauss_max < 1e-6;
    conclude(
        "02",
        "type II anti-de Sitter instance",
        ok,
        &format!(
            "form {}, geom(μ)=1: {geom_ok}, λ = {lambda:.9}, codazzi {:.2e}, gauss {:.2e}",
            report.spectrum.form, res.codazzi_max, res.gauss_max
        ),
    );
}

#[test]
fn a03_type_iii_instances() {
    let opts = AnalysisOptions::default();
    let k = 2.0_f64.sqrt();
    let inst42 = catalog::example_4_2(&Family42::new(4, 3, k)).unwrap();
    let r42 = full_report(&inst42, &GridSpec::uniform(3, 4), &opts).unwrap();
    let want42 = 3.0 * k * k + 1.0 / (k * k);
    let l42 = r42.pmcv.lambda.unwrap_or(f64::NAN);
    let blocked42 = r42
        .spectrum
        .eigenvalues
        .iter()
        .find(|e| e.algebraic == 3)
        .map(|e| e.geometric == 1)
        .unwrap_or(false);

    let inst44 = catalog::example_4_4(&Family44::from_cot(4, 3, 2.0)).unwrap();
    let r44 = full_report(&inst44, &GridSpec::uniform(3, 4), &opts).unwrap();
    let want44 = 3.0 * 4.0 + 1.0 / 4.0;
    let l44 = r44.pmcv.lambda.unwrap_or(f64::NAN);
    let blocked44 = r44
        .spectrum
        .eigenvalues
        .iter()
        .find(|e| e.algebraic == 3)
        .map(|e| e.geometric == 1)
        .unwrap_or(false);

    let ok = r42.spectrum.form == FormTag::III
        && r44.spectrum.form == FormTag::III
        && blocked42
        && blocked44
        && (l42 - want42).abs() < 1e-5
        && (l44 - want44).abs() < 1e-5;
    conclude(
        "03",
        "type III instances (geom = alg - 2)",
        ok,
        &format!(
            "forms {}/{}, λ devs {:.2e} / {:.2e}",
            r42.spectrum.form,
            r44.spectrum.form,
            (l42 - want42).abs(),
            (l44 - want44).abs()
        ),
    );
}

#[test]
fn a04_closed_forms_match_independent_solver() {
    let started = Instant::now();
    let mut tuples = 0usize;
    let mut worst: f64 = 0.0;
    let mut range_ok = true;

    for n in 3..=8usize {
        for l in 1..n {
            for &c in &[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
                for &eps in &[1.0, -1.0] {
                    let threshold = 2.0 * ((l * (n - l)) as f64).sqrt() * f64::abs(c);
                    for &bump in &[0.15, 0.6, 1.7, 4.2] {
                        let lambda = eps * (threshold + bump);
                        let data =
                            two_curvature_closed_forms(n, l, c, eps, lambda, CurvatureKind::Real)
                                .unwrap();
                        tuples += 1;
                        let solutions = common::newton_two_curvature(n, l, c, eps, lambda);
                        assert!(!solutions.is_empty(), "oracle found nothing");
                        // Every distinct oracle solution matches a branch.
                        for (mu, nu) in &solutions {
                            if (mu - nu).abs() < 1e-7 {
                                continue;
                            }
                            let h2 = ((l as f64 * mu + (n - l) as f64 * nu) / n as f64).powi(2);
                            let best = data
                                .branches
                                .iter()
                                .map(|b| {
                                    (b.h_squared - h2)
                                        .abs()
                                        .max((b.mu_squared - mu * mu).abs())
                                        .max((b.nu_squared - nu * nu).abs())
                                })
                                .fold(f64::INFINITY, f64::min);
                            worst = worst.max(best);
                        }
                        // Every valid branch is realized by the oracle.
                        for b in &data.branches {
                            if b.equal_curvatures || b.minimal_contradiction {
                                continue;
                            }
                            let hit = solutions.iter().any(|(mu, nu)| {
                                (mu * mu - b.mu_squared).abs() < 1e-8
                                    && (nu * nu - b.nu_squared).abs() < 1e-8
                            });
                            assert!(hit, "branch {:+} unrealized at n={n}, l={l}", b.sign);
                            // Range: 0 < H² < ελ/n strictly away from ελ = n|c|.
                            let bound = eps * lambda / n as f64;
                            range_ok &= b.h_squared > 0.0 && b.h_squared < bound;
                        }
                    }
                }
            }
        }
    }

    // Imaginary kind against its own solver.
    for n in [4usize, 6, 8] {
        for &(c, eps) in &[(-1.0, 1.0), (-2.0, 1.0), (1.0, -1.0), (0.5, -1.0)] {
            for &frac in &[-0.7, -0.2, 0.0, 0.4, 0.85] {
                let lambda = eps * frac * (-(n as f64) * c * eps);
                let data =
                    two_curvature_closed_forms(n, n / 2, c, eps, lambda, CurvatureKind::Imaginary)
                        .unwrap();
                tuples += 1;
                let h2 = data.imaginary.as_ref().unwrap().h_squared;
                let sols = common::newton_imaginary(n, c, eps, lambda);
                assert!(!sols.is_empty());
                for (g, _t) in sols {
                    worst = worst.max((g * g - h2).abs());
                }
            }
        }
    }

    // Equality H² = ελ/n occurs exactly in the single-curvature case (l = n).
    let equality_ok = (3..=8usize).all(|n| {
        let lambda = 2.3 * n as f64;
        let r = classify_lorentzian_pmcv(n, n, lambda, LorentzAmbient::DeSitter, FormTag::II)
            .unwrap();
        (r.parameter_squared[0] - lambda / n as f64).abs() < 1e-14
    }) && two_curvature_closed_forms(4, 4, 1.0, 1.0, 9.0, CurvatureKind::Real).is_err();

    let elapsed = started.elapsed().as_secs_f64();
    let ok = tuples >= 500 && worst < 1e-10 && range_ok && equality_ok && elapsed < 5.0;
    conclude(
        "04",
        "closed forms vs independent solver",
        ok,
        &format!("{tuples} tuples, worst defect {worst:.2e}, range strict: {range_ok}, {elapsed:.2}s"),
    );
}

#[test]
fn a05_special_case_values_at_the_boundary() {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 3..=8usize {
        for l in 1..n {
            for &c in &[-2.0f64, -1.0, -0.5, 0.5, 1.0, 2.0] {
                for &eps in &[1.0, -1.0] {
                    let lambda = eps * n as f64 * c.abs();
                    let nf = n as f64;
                    let (lf, mf) = (l as f64, (n - l) as f64);
                    let ce = c * eps;
                    let threshold = 2.0 * (lf * mf).sqrt() * c.abs();
                    if eps * lambda < threshold {
                        continue;
                    }
                    let data =
                        two_curvature_closed_forms(n, l, c, eps, lambda, CurvatureKind::Real)
                            .unwrap();
                    assert!(
                        data.special_case.is_some(),
                        "special case not detected at n={n}, l={l}, c={c}, eps={eps}"
                    );
                    cases += 1;
                    if ce > 0.0 {
                        // μ² = ν² = cε with H² = (2l-n)² cε / n².
                        let b = data
                            .branches
                            .iter()
                            .find(|b| (b.mu_squared - b.nu_squared).abs() < 1e-12)
                            .expect("equal-squares branch");
                        worst = worst.max((b.mu_squared - ce).abs());
                        worst = worst.max((b.nu_squared - ce).abs());
                        worst = worst
                            .max((b.h_squared - (2.0 * lf - nf).powi(2) * ce / (nf * nf)).abs());
                        assert!(!b.equal_curvatures, "μ = -ν is a valid distinct pair");
                    } else {
                        // μ² = -(n-l)cε/l, ν² = -lcε/(n-l), H² = -4l(n-l)cε/n².
                        let b = data
                            .branches
                            .iter()
                            .find(|b| !b.equal_curvatures)
                            .expect("distinct branch");
                        worst = worst.max((b.mu_squared + mf * ce / lf).abs());
                        worst = worst.max((b.nu_squared + lf * ce / mf).abs());
                        worst = worst.max((b.h_squared + 4.0 * lf * mf * ce / (nf * nf)).abs());
                        let other = data.branches.iter().find(|b| b.equal_curvatures).unwrap();
                        assert!((other.mu_squared - other.nu_squared).abs() < 1e-12);
                    }
                }
            }
        }
    }
    let ok = worst < 1e-12 && cases > 0;
    conclude(
        "05",
        "boundary special cases reproduce printed values",
        ok,
        &format!("{cases} cases, worst defect {worst:.2e}"),
    );
}

#[test]
fn a06_imaginary_kind_rejected_for_odd_dimension() {
    let mut all_rejected = true;
    for n in (3..=15usize).step_by(2) {
        let res = two_curvature_closed_forms(n, n / 2, -1.0, 1.0, 0.1, CurvatureKind::Imaginary);
        all_rejected &= matches!(
            res,
            Err(pmcv_core::analysis::AnalysisError::ParityViolation { .. })
        );
    }
    conclude(
        "06",
        "parity obstruction for imaginary pairs",
        all_rejected,
        "odd n in [3, 15] all rejected",
    );
}

#[test]
fn a07_frame_integrator_against_matrix_exponential() {
    let n = 4;
    let spec = frame_spec_4_3(n, &Family43::new(n, 2, 0.0).bs);
    let initial = initial_frame_4_3(n);
    let reference = common::expm(&(spec.coefficient_matrix(0.0) * 2.0)) * &initial;

    let field = integrate_frame(
        &spec,
        (0.0, 2.0),
        &initial,
        &IntegrateOptions {
            step: 1e-3,
            ..IntegrateOptions::default()
        },
    )
    .unwrap();
    let solution_error = (field.frame_at(2.0) - &reference).amax();
    let drift_projected = field.drift();

    let raw = integrate_frame(
        &spec,
        (0.0, 2.0),
        &initial,
        &IntegrateOptions {
            step: 1e-3,
            project: false,
            ..IntegrateOptions::default()
        },
    )
    .unwrap();
    let drift_raw = raw.drift();

    let error_at = |step: f64| {
        let f = integrate_frame(
            &spec,
            (0.0, 2.0),
            &initial,
            &IntegrateOptions {
                step,
                project: false,
                ..IntegrateOptions::default()
            },
        )
        .unwrap();
        (f.frame_at(2.0) - &reference).amax()
    };
    let (e1, e2, e3) = (error_at(0.1), error_at(0.05), error_at(0.025));
    let (r1, r2) = (e1 / e2, e2 / e3);
    let fourth_order = (12.0..22.0).contains(&r1) && (12.0..22.0).contains(&r2);

    let ok = solution_error < 1e-8 && drift_projected < 1e-8 && drift_raw < 1e-8 && fourth_order;
    conclude(
        "07",
        "frame integrator vs matrix exponential",
        ok,
        &format!(
            "error {solution_error:.2e}, drift {drift_projected:.2e} (raw {drift_raw:.2e}), halving ratios {r1:.1} / {r2:.1}"
        ),
    );
}

fn jet_oracle_check(
    instance: &CatalogInstance,
    rng: &mut ChaCha8Rng,
    points: usize,
) -> (f64, usize) {
    let imm = &instance.immersion;
    let m = imm.chart_dim();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let values = |u: &[f64]| imm.value(u).unwrap();
    for _ in 0..points {
        let u: Vec<f64> = imm
            .domain()
            .iter()
            .map(|&(lo, hi)| {
                let span = hi - lo;
                rng.random_range(lo + 0.08 * span..hi - 0.08 * span)
            })
            .collect();
        let jet = imm.jet(&u, 2).unwrap();
        for i in 0..m {
            let h = 1e-3 * (1.0 + u[i].abs());
            let fd = common::fd_partial(&values, &u, i, h);
            let exact = jet.partial(i);
            let scale = 1.0 + fd.amax();
            worst = worst.max((exact - fd).amax() / scale);
            checked += 1;
            for j in i..m {
                let fd = common::fd_second(&values, &u, i, j, h);
                let exact = jet.second_partial(i, j);
                let scale = 1.0 + fd.amax();
                worst = worst.max((exact - fd).amax() / scale);
                checked += 1;
            }
        }
    }
    (worst, checked)
}

#[test]
fn a08_jet_coefficients_match_the_difference_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let catalog: Vec<(&str, CatalogInstance)> = vec![
        (
            "4.1",
            catalog::example_4_1(&Family41::new(4, 2, 2.0_f64.sqrt())).unwrap(),
        ),
        (
            "4.2",
            catalog::example_4_2(&Family42::new(4, 3, 2.0_f64.sqrt())).unwrap(),
        ),
        ("4.3", catalog::example_4_3(&Family43::from_cot(4, 2, 2.0)).unwrap()),
        ("4.4", catalog::example_4_4(&Family44::from_cot(4, 3, 2.0)).unwrap()),
        (
            "umbilical-S",
            catalog::build_umbilical(SpaceForm::de_sitter(4, 1.0), 2.0).unwrap(),
        ),
        (
            "umbilical-H",
            catalog::build_umbilical(SpaceForm::anti_de_sitter(4, -1.0), 0.5).unwrap(),
        ),
        (
            "horosphere",
            catalog::build_umbilical(SpaceForm::anti_de_sitter(4, -1.0), 1.0).unwrap(),
        ),
        ("ads-equator", catalog::ads_riemannian_equator(3, -1.0).unwrap()),
        ("round-equator", catalog::round_equator()),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, inst) in &catalog {
        let (worst, checked) = jet_oracle_check(inst, &mut rng, 100);
        ok &= worst < 1e-6;
        detail.push_str(&format!("{name} {worst:.1e} ({checked}); "));
    }
    conclude("08", "jets vs Richardson differences (100 pts each)", ok, &detail);
}

#[test]
fn a09_negative_control_fails_structural_checks() {
    let inst = catalog::example_4_3(&Family43::from_cot(4, 2, 2.0)).unwrap();
    let mut control = inst.clone();
    control.immersion = catalog::perturb(&inst.immersion, 1e-2, 99);
    control.expected_spectrum = None;
    control.expected_lambda = None;
    let report = full_report(
        &control,
        &GridSpec::uniform(3, 4),
        &AnalysisOptions::default(),
    )
    .unwrap();
    let codazzi = report.pmcv.residuals.codazzi_max;
    let ok = codazzi > 1e-3 && !report.pmcv.isoparametric && !report.passed;
    conclude(
        "09",
        "perturbed immersion is rejected",
        ok,
        &format!(
            "codazzi {codazzi:.2e} (> 1e-3), isoparametric: {}, report passed: {}",
            report.pmcv.isoparametric, report.passed
        ),
    );
}

fn random_similarity(
    rng: &mut ChaCha8Rng,
    a: &nalgebra::DMatrix<f64>,
    g: &MetricMatrix,
) -> (nalgebra::DMatrix<f64>, MetricMatrix) {
    let n = a.nrows();
    loop {
        let mut p = nalgebra::DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] += 0.25 * rng.random_range(-1.0..1.0);
            }
        }
        let svd = p.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-3 || smax / smin > 50.0 {
            continue;
        }
        let p_inv = p.clone().try_inverse().unwrap();
        let a2 = &p_inv * a * &p;
        let g2 = p.transpose() * g.entries() * &p;
        return (a2, MetricMatrix::new(g2, 1e-8).unwrap());
    }
}

#[test]
fn a10_canonical_form_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pool = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
    let draw_distinct = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
        let mut picks: Vec<usize> = (0..pool.len()).collect();
        for i in (1..picks.len()).rev() {
            let j = rng.random_range(0..=i);
            picks.swap(i, j);
        }
        picks[..k]
            .iter()
            .map(|&i| pool[i] + rng.random_range(-0.1..0.1))
            .collect()
    };

    let opts = SpectrumOptions::default();
    let mut checked = 0;
    for draw in 0..50 {
        let form = match draw % 4 {
            0 => FormTag::I,
            1 => FormTag::II,
            2 => FormTag::III,
            _ => FormTag::IV,
        };
        let n = rng.random_range(3..=7usize);
        let params = match form {
            FormTag::I => {
                let distinct = rng.random_range(1..=3.min(n));
                let values = draw_distinct(&mut rng, distinct);
                let mut mults = vec![1usize; distinct];
                let mut left = n - distinct;
                while left > 0 {
                    let k = rng.random_range(0..distinct);
                    mults[k] += 1;
                    left -= 1;
                }
                CanonicalFormParams::I {
                    eigenvalues: values.into_iter().zip(mults).collect(),
                }
            }
            FormTag::II => {
                let values = draw_distinct(&mut rng, 2);
                let blocked_mult = rng.random_range(2..=n.max(2).min(n));
                let rest = n - blocked_mult;
                CanonicalFormParams::II {
                    blocked: values[0],
                    blocked_mult,
                    rest: if rest > 0 {
                        vec![(values[1], rest)]
                    } else {
                        vec![]
                    },
                }
            }
            FormTag::III => {
                let values = draw_distinct(&mut rng, 2);
                let blocked_mult = rng.random_range(3..=n.max(3).min(n));
                let rest = n - blocked_mult;
                CanonicalFormParams::III {
                    blocked: values[0],
                    blocked_mult,
                    rest: if rest > 0 {
                        vec![(values[1], rest)]
                    } else {
                        vec![]
                    },
                }
            }
            _ => {
                let values = draw_distinct(&mut rng, 1);
                CanonicalFormParams::IV {
                    gamma: values[0],
                    tau: rng.random_range(0.5..2.5),
                    rest: vec![(values[0] + 1.3, n - 2)],
                }
            }
        };
        let (a, g) = canonical_shape_matrix(&params).unwrap();
        let direct = classify_canonical_form(&a, &g, &opts).unwrap();
        assert_eq!(direct, form, "draw {draw}: direct classification");

        let (a2, g2) = random_similarity(&mut rng, &a, &g);
        let transformed = classify_canonical_form(&a2, &g2, &opts).unwrap();
        assert_eq!(transformed, form, "draw {draw}: transformed classification");
        checked += 1;
    }
    conclude(
        "10",
        "canonical form round trip",
        checked == 50,
        &format!("{checked} draws across all four forms, with congruence transforms"),
    );
}
