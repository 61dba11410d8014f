use holo_evp::calculus::*;
use holo_evp::exec::Exec;
use holo_evp::pde::Problem;

const Y: [f64; 8] = [0.3, -0.2, 0.1, 0.0, 0.4, -0.4, 0.2, 0.1];

fn fourier() -> Problem {
    Problem::standard_fourier(64, 8).unwrap()
}

#[test]
fn constant_mode_fd_recovers_slope() {
    let p = Problem::constant_mode_b(64, &[0.7]).unwrap();
    let d1 = deriv_fd(&p, &[0.2], 0, 1, 0.05).unwrap();
    assert!((d1.d_lambda.re - 0.7).abs() <= 1e-9);
    assert!(d1.hnorm_du <= 1e-8);
    let d2 = deriv_fd(&p, &[0.2], 0, 2, 0.05).unwrap();
    assert!(d2.d_lambda.norm() <= d2.est_error.max(1e-8));
}

#[test]
fn contour_zeroth_coefficient_is_the_eigenvalue() {
    let p = fourier();
    let res = deriv_contour(&p, &Y, &ContourSpec::new(0, 0.5, 3), 3).unwrap();
    let direct = p.solve_real(&Y, None).unwrap().lambda;
    assert!((res.entries[0].d_lambda - direct).norm() <= 1e-9 * direct.norm());
    assert!(res.closure <= CLOSURE_TOL);
    for e in &res.entries {
        assert!(e.d_lambda.im.abs() <= 1e-9 * e.d_lambda.norm().max(1e-3));
    }
}

#[test]
fn contour_stable_under_quadrature_doubling() {
    let p = fourier();
    let at = |q| deriv_contour(&p, &Y, &ContourSpec::new(1, 0.5, 4).with_quadrature(q), 4).unwrap();
    let (a, b) = (at(64), at(128));
    for (x, y) in a.entries.iter().zip(&b.entries) {
        let scale = x.d_lambda.norm().max(1e-6);
        assert!((x.d_lambda - y.d_lambda).norm() <= 1e-9 * scale.max(1.0), "{} vs {}", x.d_lambda, y.d_lambda);
    }
}

#[test]
fn three_methods_agree_up_to_third_order() {
    let p = fourier();
    for j in [0, 2] {
        let contour = deriv_contour(&p, &Y, &ContourSpec::new(j, 0.5, 3), 3).unwrap().entries;
        let cheb = deriv_chebyshev(&p, &Y, j, 3).unwrap();
        for n in 1..=3u32 {
            let fd = deriv_fd(&p, &Y, j, n, 0.02).unwrap();
            let (c, h) = (&contour[n as usize], &cheb[n as usize]);
            assert_eq!((c.nu.order(), h.nu.order()), (n, n));
            for (a, b) in [(c, &fd), (c, h), (h, &fd)] {
                let tol = (a.est_error + b.est_error).max(1e-6);
                let gap = (a.d_lambda.re - b.d_lambda.re).abs();
                assert!(gap <= tol, "j={j} n={n} {:?}/{:?} gap {gap:.2e} tol {tol:.2e}", a.method, b.method);
            }
        }
    }
}

#[test]
fn mixed_derivative_matches_nested_differences() {
    let p = fourier();
    let specs = [ContourSpec::new(0, 0.5, 2), ContourSpec::new(1, 0.5, 2)];
    let nu = MultiIndex::new(vec![(0, 1), (1, 1)]);
    let mixed = deriv_mixed(&p, &Y, &nu, &specs, Exec::Parallel).unwrap();
    let h = 5e-3;
    let lam = |d0: f64, d1: f64| {
        let mut y = Y;
        y[0] += d0;
        y[1] += d1;
        p.solve_real(&y, None).unwrap().lambda.re
    };
    let nested = (lam(h, h) - lam(h, -h) - lam(-h, h) + lam(-h, -h)) / (4.0 * h * h);
    assert!((mixed.d_lambda.re - nested).abs() <= 1e-5, "{} vs {nested}", mixed.d_lambda.re);

    let single = deriv_mixed(&p, &Y, &MultiIndex::single(0, 1), &specs, Exec::Sequential).unwrap();
    let direct = deriv_contour(&p, &Y, &specs[0], 1).unwrap().entries[1].clone();
    assert_eq!(single, direct);
}

#[test]
fn multi_index_text_round_trip() {
    let nu: MultiIndex = "2,0,1".parse().unwrap();
    assert_eq!(nu.entries(), &[(0, 2), (2, 1)]);
    assert_eq!(nu.to_string(), "2;0;1");
    assert_eq!(nu.factorial(), 2.0);
    assert_eq!(nu.to_string().parse::<MultiIndex>().unwrap(), nu);
}
