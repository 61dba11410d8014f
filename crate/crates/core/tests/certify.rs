use holo_evp::calculus::{radius_estimate, MultiIndex, RadiusSearch, THETA_SAFETY};
use holo_evp::certify::*;
use holo_evp::combinatorics::AlphaRule;
use holo_evp::exec::Exec;
use holo_evp::fields::AffineField;
use holo_evp::pde::{Mesh1D, Problem};

fn geometric(r: f64) -> CertifyOptions {
    CertifyOptions { policy: GammaPolicy::Geometric { r }, ..CertifyOptions::default() }
}

fn nu(s: &str) -> MultiIndex {
    s.parse().unwrap()
}

#[test]
fn constant_mode_fit_saturates_at_first_order() {
    let c = [0.5, 0.125, 0.03125];
    let p = Problem::constant_mode_b(64, &c).unwrap();
    let cert = build_certificate(&p, &geometric(2.0), Exec::Parallel).unwrap();
    assert!((cert.fit.raw - 1.0).abs() <= 1e-6, "raw {}", cert.fit.raw);
    for (beta, cj) in cert.beta.iter().zip(c) {
        assert!((beta - 1.1 * cj).abs() <= 1e-6 * cj);
    }
    assert_eq!(cert.rule, AlphaRule::QuadrupleFactorial);
    assert_eq!(cert.eps, 0.25);
    assert!((cert.gamma_sum - 0.9 * cert.gamma_cap).abs() < 1e-12);
    assert!(cert.gamma_ok());
    // at y = 0 this is the Laplacian: λ₂ - λ₁ = 3π² up to discretisation
    let gap = cert.spectral_gap.unwrap();
    assert!((gap - 3.0 * std::f64::consts::PI.powi(2)).abs() < 0.01 * gap, "gap {gap}");

    let scaled = Problem::constant_mode_b(64, &c.map(|v| 0.5 * v)).unwrap();
    let half = build_certificate(&scaled, &geometric(2.0), Exec::Parallel).unwrap();
    assert_eq!(half.eps, cert.eps);
    for (a, b) in half.beta.iter().zip(&cert.beta) {
        assert!((a / b - 0.5).abs() <= 0.5 * 0.1);
    }
}

#[test]
fn geometric_policy_on_eight_coordinates() {
    let c: Vec<f64> = (0..8).map(|j| 0.5 * 4f64.powi(-j)).collect();
    let p = Problem::constant_mode_b(32, &c).unwrap();
    let cert = build_certificate(&p, &geometric(2.0), Exec::Parallel).unwrap();
    let inv_sum: f64 = cert.gamma.iter().map(|g| 1.0 / g).sum();
    assert!((inv_sum - cert.gamma_sum).abs() < 1e-12);
    assert!(cert.gamma_sum < 1.0);
    for w in cert.gamma.windows(2) {
        assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
    }
}

#[test]
fn semilinear_certificate_uses_factorial_rule() {
    let mesh = Mesh1D::uniform(32).unwrap();
    let b = AffineField::constant_modes(1.0, &[0.3, 0.1]);
    let p = Problem::semilinear(mesh, AffineField::constant(1.0), b, 1.0, 3).unwrap();
    let cert = build_certificate(&p, &geometric(2.0), Exec::Parallel).unwrap();
    assert_eq!((cert.rule, cert.eps), (AlphaRule::Factorial, 1.0));
    assert_eq!(cert.gamma_cap, 1.0);
    assert_eq!(cert.spectral_gap, None);
    assert!(cert.gamma_sum < 1.0);
}

#[test]
fn admissibility_diagnostics() {
    let p = Problem::standard_fourier(32, 4).unwrap();
    let cert = build_certificate(&p, &CertifyOptions::default(), Exec::Parallel).unwrap();
    let good: Vec<f64> =
        cert.b.iter().enumerate().map(|(j, b)| 1.0 + cert.eps * 0.5f64.powi(j as i32 + 1) / b).collect();
    let report = check_admissibility_theorem(&cert, &good).unwrap();
    assert!(report.admissible && report.all_included() && report.passed());
    for d in &report.coordinates {
        assert!(d.inclusion.sampled && d.inclusion.analytic);
    }

    let mut bad = vec![1.0001; 4];
    bad[0] = 1.0 + 2.0 * cert.eps / cert.b[0];
    let report = check_admissibility_theorem(&cert, &bad).unwrap();
    assert!(!report.admissible && !report.passed());
}

#[test]
fn predictions_follow_the_product_formula() {
    let p = Problem::standard_fourier(32, 4).unwrap();
    let cert = build_certificate(&p, &CertifyOptions::default(), Exec::Parallel).unwrap();
    let list = [MultiIndex::default(), nu("1"), nu("0,1"), nu("2,1"), nu("2,0,1"), nu("0,0,0,0,0,1")];
    let rows = predict_mixed_bounds(&cert, &list).rows;
    let m = cert.m_gamma;
    assert_eq!(rows[0].predicted_u, m);
    assert_eq!(rows[0].predicted_lambda, cert.m_lambda);
    assert!((rows[1].predicted_u - 4.0 * m * cert.b[0]).abs() <= 1e-12 * rows[1].predicted_u);
    let expect = m * 2.0 * (cert.b[0] / cert.eps).powi(2) * (cert.b[1] / cert.eps);
    assert!((rows[3].predicted_u - expect).abs() <= 1e-12 * expect);
    // disjoint supports multiply: pred(ν + μ) M = pred(ν) pred(μ)
    let combined = predict_mixed_bounds(&cert, &[nu("2,0,1"), nu("2"), nu("0,0,1")]).rows;
    let lhs = combined[0].predicted_u * m;
    let rhs = combined[1].predicted_u * combined[2].predicted_u;
    assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    assert!(rows[5].predicted_u.is_infinite());
}

#[test]
fn validation_passes_and_adversary_fails() {
    let p = Problem::constant_mode_b(32, &[0.5, 0.125]).unwrap();
    let cert = build_certificate(&p, &geometric(2.0), Exec::Parallel).unwrap();
    let ys = validation_points(2, 3, 1);
    let report = validate_bounds(&cert, &p, &ys, &[nu("1,1"), nu("1"), nu("0,2")], Exec::Parallel);
    assert!(report.all_pass(), "{report:?}");
    assert!(report.rows[0].measured_lambda.unwrap() <= 1e-8);

    let a = Problem::constant_mode_a(32, &[0.45, 0.02]).unwrap();
    let cert = build_certificate(&a, &geometric(8.0), Exec::Parallel).unwrap();
    let ys = validation_points(2, 3, 1);
    let list = [nu("1"), nu("0,1"), nu("2")];
    assert!(validate_bounds(&cert, &a, &ys, &list, Exec::Parallel).all_pass());
    let weak = cert.with_beta_scaled(0.1);
    let report = validate_bounds(&weak, &a, &ys, &list, Exec::Parallel);
    let violated = report.rows.iter().filter(|r| r.worst_ratio.is_some_and(|q| q > 1.0)).count();
    assert!(violated >= 1, "{report:?}");
}

#[test]
fn analyticity_radius_exceeds_certificate_contours() {
    let p = Problem::standard_fourier(32, 4).unwrap();
    let cert = build_certificate(&p, &CertifyOptions::default(), Exec::Parallel).unwrap();
    for j in 0..4 {
        let r = radius_estimate(&p, &[0.0; 4], j, &RadiusSearch::default());
        assert!(r >= THETA_SAFETY * cert.stadium_radius(j), "j={j}: {r} < {}", THETA_SAFETY * cert.stadium_radius(j));
    }
}

#[test]
fn certificate_json_round_trip() {
    let p = Problem::constant_mode_b(16, &[0.5]).unwrap();
    let cert = build_certificate(&p, &geometric(2.0), Exec::Sequential).unwrap();
    let text = serde_json::to_string(&cert).unwrap();
    assert!(text.contains("\"Gamma\"") && text.contains("\"M_gamma\""));
    let back: HoloCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cert);
}
