use relaxkit::analysis::{self, check_cbf, check_stieltjes};
use relaxkit::evolution::{self, Scheme, SolverSettings, Solution};
use relaxkit::laplace::{self, Analytic, TransformSettings};
use relaxkit::models::{self, RelaxationModel};
use relaxkit::timedomain::{self, GeneralizedFunction, Grid};

fn matrix() -> Vec<RelaxationModel> {
    vec![
        RelaxationModel::debye(1.0).unwrap(),
        RelaxationModel::cole_cole(0.5, 1.0).unwrap(),
        RelaxationModel::cole_davidson(0.6, 1.0).unwrap(),
        RelaxationModel::havriliak_negami(0.6, 0.7, 1.0).unwrap(),
        RelaxationModel::jws(0.5, 0.5, 1.0).unwrap(),
        RelaxationModel::excess_wing(0.5, 1.0, 1.0).unwrap(),
    ]
}

fn relaxation_error(sol: &Solution, m: &RelaxationModel) -> f64 {
    sol.grid
        .nodes()
        .iter()
        .zip(&sol.relaxation)
        .filter(|(&t, _)| t >= 0.25)
        .map(|(&t, &n)| (n - timedomain::relaxation(m, t).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn solvers_reach_nominal_order_on_cole_cole() {
    let m = RelaxationModel::cole_cole(0.5, 1.0).unwrap();
    let (km, kk) = (timedomain::kernel_m(&m).unwrap(), timedomain::kernel_k(&m).unwrap());
    for scheme in [Scheme::ProductTrapezoid, Scheme::ConvolutionQuadratureOrder1] {
        let mut errs = [[0.0; 3]; 2];
        for (i, steps) in [64, 128, 256].into_iter().enumerate() {
            let cfg = SolverSettings::uniform(2.0, steps).unwrap().with_scheme(scheme);
            errs[0][i] = relaxation_error(&evolution::solve_integral_eq(&km, m.rate, &cfg).unwrap(), &m);
            errs[1][i] = relaxation_error(&evolution::solve_integrodiff_eq(&kk, m.rate, &cfg).unwrap(), &m);
        }
        let cfg = SolverSettings::uniform(2.0, 64).unwrap().with_scheme(scheme);
        let nominal = scheme.nominal_order(m.alpha, cfg.extrapolate);
        for e in errs {
            let observed = (e[1] / e[2]).log2();
            assert!(observed >= 0.9 * nominal, "{scheme:?}: {e:?} order {observed} vs {nominal}");
        }
    }
}

#[test]
fn hn_solutions_are_nonnegative() {
    for (a, b) in [(0.6, 0.7), (0.3, 0.9), (0.9, 0.3)] {
        let m = RelaxationModel::havriliak_negami(a, b, 1.0).unwrap();
        let cfg = SolverSettings::uniform(5.0, 512).unwrap();
        let sols = [
            evolution::solve_integral_eq(&timedomain::kernel_m(&m).unwrap(), m.rate, &cfg).unwrap(),
            evolution::solve_integrodiff_eq(&timedomain::kernel_k(&m).unwrap(), m.rate, &cfg).unwrap(),
        ];
        for s in sols {
            let scale = s.values.iter().fold(0.0f64, |x, v| x.max(v.abs()));
            assert!(s.values.iter().all(|&v| v >= -1e-8 * scale), "{a} {b}");
            assert!(s.values.iter().all(|v| v.is_finite()));
            assert!(s.residual_estimate >= 0.0);
        }
    }
}

#[test]
fn both_forms_agree_for_single_time_models() {
    for m in matrix().into_iter().take(5) {
        let cfg = SolverSettings::uniform(5.0, 2048).unwrap().with_window(0.05, 5.0).with_tol(1e-3);
        let r = evolution::verify_equivalence(&m, &cfg).unwrap();
        assert!(r.passed(), "{}: {}", m.kind, r.max_violation);
    }
}

#[test]
fn derivative_undoes_integral() {
    for alpha in [0.3, 0.5, 0.8] {
        let errs: Vec<f64> = [400, 800, 1600]
            .into_iter()
            .map(|steps| {
                let grid = Grid::uniform(0.0, 2.0, steps).unwrap();
                let f: Vec<f64> = grid.nodes().iter().map(|&t| t * (-t).exp() + t.sin()).collect();
                let i = evolution::frac_integral(&grid, &f, alpha).unwrap();
                let d = evolution::frac_deriv_rl(&grid, &i, alpha).unwrap();
                (1..f.len()).map(|k| (d[k] - f[k]).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < 0.6 * w[0]), "{alpha}: {errs:?}");
        assert!(errs[2] < 1e-4, "{alpha}: {errs:?}");
    }
}

#[test]
fn forward_then_invert_round_trips() {
    let cfg = TransformSettings::default();
    // Stehfest loses relative accuracy on e^(−λt) once λt ≳ 3
    let funcs = [
        GeneralizedFunction::exponential(2.0, 0.2),
        GeneralizedFunction::new(0.0, 1.0, 1.0, |t| Ok(1.0 / (1.0 + t))).unwrap(),
        GeneralizedFunction::new(0.0, 1.0, 0.0, |t| Ok((1.0 + t).ln() * (-0.2 * t).exp())).unwrap(),
        GeneralizedFunction::new(0.0, 0.5, std::f64::consts::PI.sqrt(), |t| Ok((-0.1 * t).exp() / t.sqrt())).unwrap(),
    ];
    for f in &funcs {
        for &t in Grid::logarithmic(0.1, 10.0, 9).unwrap().nodes() {
            let back = laplace::invert(&laplace::RealAxis(|s| laplace::forward(f, s, &cfg).unwrap()), t, &cfg).unwrap();
            let want = f.regular(t).unwrap();
            assert!((back - want).abs() <= 1e-4 * want.abs(), "t = {t}: {back} vs {want}");
        }
    }
}

#[test]
fn forward_of_delta_is_its_weight() {
    let cfg = TransformSettings::default();
    for w in [0.25, 1.0, -3.0] {
        for s in [1e-3, 1.0, 1e3] {
            assert_eq!(laplace::forward(&GeneralizedFunction::delta(w), s, &cfg).unwrap(), w);
        }
    }
}

#[test]
fn inverted_spectral_functions_are_nonnegative() {
    let cfg = TransformSettings::talbot();
    for m in matrix() {
        let mm = m;
        let phi = Analytic(move |s| models::continued::spectral(&mm, s));
        for &t in Grid::logarithmic(0.05, 20.0, 30).unwrap().nodes() {
            let v = laplace::invert(&phi, t, &cfg).unwrap();
            assert!(v >= -1e-8, "{}: φ({t}) = {v}", m.kind);
        }
    }
}

#[test]
fn response_is_minus_derivative_of_relaxation() {
    let models = [
        RelaxationModel::havriliak_negami(0.6, 0.7, 1.0).unwrap(),
        RelaxationModel::jws(0.5, 0.5, 1.0).unwrap(),
        RelaxationModel::excess_wing(0.5, 1.0, 1.0).unwrap(),
    ];
    for m in models {
        let phi = timedomain::response(&m).unwrap();
        for &t in Grid::logarithmic(0.2, 5.0, 12).unwrap().nodes() {
            let n = |x: f64| timedomain::relaxation(&m, x).unwrap();
            let d = |h: f64| (n(t - 2.0 * h) - 8.0 * n(t - h) + 8.0 * n(t + h) - n(t + 2.0 * h)) / (12.0 * h);
            let h = 1e-2 * t;
            let fd = -(16.0 * d(h / 2.0) - d(h)) / 15.0;
            let want = phi.regular(t).unwrap();
            assert!((fd - want).abs() <= 1e-6 * want.abs(), "{} t = {t}: {fd} vs {want}", m.kind);
        }
    }
}

#[test]
fn memory_transforms_are_stieltjes_and_exponents_bernstein() {
    let g = Grid::logarithmic(1e-4, 1e4, 41).unwrap();
    for m in matrix() {
        let (a, b, c) = (m, m, m);
        let mh = move |s: f64| models::memory_m_hat(&a, s).unwrap();
        let kh = move |s: f64| models::memory_k_hat(&b, s).unwrap();
        let psi = move |s: f64| models::levy_exponent(&c, s).unwrap();
        assert!(check_stieltjes(&mh, &g).unwrap().passed(), "{} M", m.kind);
        assert!(check_stieltjes(&kh, &g).unwrap().passed(), "{} k", m.kind);
        assert!(check_cbf(&psi, &g, 4).unwrap().passed(), "{} Ψ", m.kind);
    }
}

#[test]
fn sonine_holds_in_time_for_the_default_matrix() {
    let g = Grid::logarithmic(0.01, 10.0, 40).unwrap();
    for m in matrix() {
        let r = analysis::model_sonine_residual(&m, &g).unwrap();
        assert!(r.max_violation < 1e-4, "{}: {}", m.kind, r.max_violation);
    }
}
