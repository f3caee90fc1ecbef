use std::sync::Arc;

use jetprolong::expr::{adaptive_simpson, parse_expr, Chart, Expr, Point, Table};
use jetprolong::solutions::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOX: [[f64; 2]; 2] = [[-1.0, 1.0], [-1.0, 1.0]];

fn f1(name: &str, text: &str, var: &str) -> InputFunction {
    InputFunction::parse(name, text, var).unwrap()
}

fn same(e: &Expr, text: &str, vars: [&str; 2]) -> bool {
    let chart = Chart::new(&vars).unwrap();
    e.sub(&parse_expr(text, &chart).unwrap()).is_zero_probabilistic(&vars)
}

fn ev(s: &SolutionSurface, name: &str, u: [f64; 2]) -> f64 {
    s.component(name).unwrap().eval(&s.point(u)).unwrap()
}

fn random_poly(rng: &mut ChaCha8Rng, var: &str) -> String {
    let deg = rng.gen_range(1..=4);
    let terms: Vec<String> = (0..=deg).map(|k| format!("({})*{var}^{k}", rng.gen_range(-3i32..=3))).collect();
    terms.join(" + ")
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Real and imaginary parts of `Σ c_k (r + i s)^k` as expression strings.
fn holomorphic(coeffs: &[i64]) -> (String, String) {
    let (mut re, mut im) = (vec!["0".to_string()], vec!["0".to_string()]);
    for (k, c) in coeffs.iter().enumerate() {
        let k = k as u32;
        for j in 0..=k {
            // sign of i^j
            let m = if j % 4 >= 2 { -c * binom(k, j) } else { c * binom(k, j) };
            let term = format!("({m})*r^{}*s^{j}", k - j);
            if j % 2 == 0 { re.push(term) } else { im.push(term) }
        }
    }
    (re.join(" + "), im.join(" + "))
}

#[test]
fn wave_xt_square_input() {
    let s = wave_solution_xt(&f1("y", "t^2", "t"), &InputFunction::zero("z0", "x")).unwrap();
    let v = ["x", "t"];
    assert!(same(s.component("q").unwrap(), "2/3*t^3", v));
    assert!(same(s.component("z").unwrap(), "4/15*t^5", v));
    assert!(same(s.component("B").unwrap(), "2*t", v));
    assert!(same(s.component("y").unwrap(), "t^2", v));
    for n in ["p", "r", "c"] {
        assert!(s.component(n).unwrap().is_zero_probabilistic(&v), "{n}");
    }
}

#[test]
fn zero_sections() {
    let s = wave_solution_xt(&InputFunction::zero("y", "t"), &InputFunction::zero("z0", "x")).unwrap();
    for (n, e) in s.names.iter().zip(&s.components) {
        if n != "x" && n != "t" {
            assert!(e.is_zero_probabilistic(&["x", "t"]), "{n}");
        }
    }
    assert!(verify_integral_surface(&s, 30, BOX, 1e-9).unwrap().pass);
    let s = wave_solution_rt(&InputFunction::zero("x", "r"), &InputFunction::zero("y", "t")).unwrap();
    for (n, e) in s.names.iter().zip(&s.components) {
        if n != "r" && n != "t" {
            assert!(e.is_zero_probabilistic(&["r", "t"]), "{n}");
        }
    }
}

#[test]
fn wave_rt_square_inputs() {
    let s = wave_solution_rt(&f1("x", "r^2", "r"), &f1("y", "t^2", "t")).unwrap();
    let v = ["r", "t"];
    assert!(same(s.component("p").unwrap(), "2/3*r^3", v));
    assert!(same(s.component("q").unwrap(), "2/3*t^3", v));
    assert!(same(s.component("z").unwrap(), "4/15*r^5 + 4/15*t^5", v));
    assert!(same(s.component("A").unwrap(), "2*r", v));
    assert_eq!(detect_corank(&s, [0.0, 0.0]).unwrap(), 2);
    assert_eq!(detect_corank(&s, [0.4, -0.7]).unwrap(), 0);
    assert_eq!(detect_corank(&s, [0.0, 0.5]).unwrap(), 1);
}

#[test]
fn parabolic_square_input() {
    let s = parabolic_solution_st(&f1("y", "s^2", "s"), &InputFunction::zero("x0", "s")).unwrap();
    let v = ["s", "t"];
    assert!(same(s.component("x").unwrap(), "2*t*s", v));
    assert!(same(s.component("A").unwrap(), "2*t", v));
    assert!(same(s.component("B").unwrap(), "2*s", v));
    assert!(verify_integral_surface(&s, 30, BOX, 1e-9).unwrap().pass);
}

#[test]
fn parabolic_corank_split() {
    // y'(0) = 0, A(0, t) = 2t + 1
    let s = parabolic_solution_st(&f1("y", "s^2", "s"), &f1("x0", "s", "s")).unwrap();
    assert!((ev(&s, "A", [0.0, 0.5]) - 2.0).abs() < 1e-12);
    assert_eq!(detect_corank(&s, [0.0, 0.5]).unwrap(), 1);
    assert!(ev(&s, "A", [0.0, -0.5]).abs() < 1e-12);
    assert_eq!(detect_corank(&s, [0.0, -0.5]).unwrap(), 2);
    assert_eq!(detect_corank(&s, [0.3, 0.2]).unwrap(), 0);
}

#[test]
fn wave_xt_corank_one_where_derivative_vanishes() {
    let s = wave_solution_xt(&f1("y", "t^2", "t"), &f1("z0", "x^3", "x")).unwrap().with_designated([0.3, 0.0]);
    let rep = verify_integral_surface(&s, 50, BOX, 1e-10).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
    assert_eq!(rep.corank_at_designated, Some(1));
    assert_eq!(detect_corank(&s, [0.3, 0.6]).unwrap(), 0);
    // the grid hits t = 0 only with an odd number of rows
    let rep = verify_integral_surface(&s, 31, BOX, 1e-9).unwrap();
    assert!(!rep.rank_drops.is_empty());
    assert!(rep.rank_drops.iter().all(|(u, k)| u[1].abs() < 1e-12 && *k == 1));
}

#[test]
fn laplace_identity_closed_form() {
    // f = r + i s: p_r = s, p_s = r, q_r = -r, q_s = s, z_r = q, z_s = r s
    let s = laplace_solution_rs(&Expr::var("r"), &Expr::var("s"), [0.0, 0.0]).unwrap();
    let v = ["r", "s"];
    assert!(same(s.component("p").unwrap(), "r*s", v));
    assert!(same(s.component("q").unwrap(), "(s^2 - r^2)/2", v));
    assert!(same(s.component("z").unwrap(), "r*s^2/2 - r^3/6", v));
    let rep = verify_integral_surface(&s, 30, BOX, 1e-10).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
}

#[test]
fn laplace_square_passes() {
    let chart = Chart::new(&["r", "s"]).unwrap();
    let y = parse_expr("r^2 - s^2", &chart).unwrap();
    let x = parse_expr("2*r*s", &chart).unwrap();
    assert!(cauchy_riemann_residual(&y, &x, ["r", "s"]).unwrap() < 1e-10);
    let s = laplace_solution_rs(&y, &x, [0.0, 0.0]).unwrap().with_designated([0.0, 0.0]);
    let rep = verify_integral_surface(&s, 30, BOX, 1e-9).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
    assert!(rep.legendrian_residual < 1e-9);
    assert_eq!(rep.corank_at_designated, Some(2));
    let (p, q) = (s.component("p").unwrap(), s.component("q").unwrap());
    assert!(cauchy_riemann_residual(p, q, ["r", "s"]).unwrap() < 1e-10);
}

#[test]
fn laplace_rejects_non_holomorphic_pair() {
    let chart = Chart::new(&["r", "s"]).unwrap();
    let y = parse_expr("r^2", &chart).unwrap();
    let x = parse_expr("s", &chart).unwrap();
    assert!(matches!(laplace_solution_rs(&y, &x, [0.0, 0.0]), Err(SolutionError::CauchyRiemann(_))));
}

/// Integrates `z` along the straight ray from the base, independently of the L-path.
fn ray_integral(zr: &Expr, zs: &Expr, chart: &Arc<Chart>, u: [f64; 2]) -> f64 {
    let f = |tau: f64| {
        let pt = Point::new(chart.clone(), vec![tau * u[0], tau * u[1]]);
        zr.eval(&pt).unwrap() * u[0] + zs.eval(&pt).unwrap() * u[1]
    };
    adaptive_simpson(f, 0.0, 1.0, 1e-12)
}

#[test]
fn laplace_exponential_uses_numeric_paths() {
    let chart = Chart::new(&["r", "s"]).unwrap();
    let y = parse_expr("exp(r)*cos(s)", &chart).unwrap();
    let x = parse_expr("exp(r)*sin(s)", &chart).unwrap();
    let s = laplace_solution_rs(&y, &x, [0.0, 0.0]).unwrap();
    let rep = verify_integral_surface(&s, 8, [[-0.5, 0.5], [-0.5, 0.5]], 1e-8).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
    let p = s.component("p").unwrap();
    let pr = Expr::var("r").mul(&x.diff("r")).add(&Expr::var("s").mul(&y.diff("r")));
    let ps = Expr::var("r").mul(&x.diff("s")).add(&Expr::var("s").mul(&y.diff("s")));
    let ch = Arc::new(chart);
    for u in [[0.3, -0.2], [-0.4, 0.45]] {
        assert!((p.eval(&s.point(u)).unwrap() - ray_integral(&pr, &ps, &ch, u)).abs() < 1e-9);
    }
}

#[test]
fn laplace_paths_agree_for_polynomials() {
    let (re, im) = holomorphic(&[1, -2, 0, 1]);
    let chart = Chart::new(&["r", "s"]).unwrap();
    let y = parse_expr(&re, &chart).unwrap();
    let x = parse_expr(&im, &chart).unwrap();
    let fa = Expr::var("s").mul(&x.diff("r")).sub(&Expr::var("r").mul(&y.diff("r")));
    let fb = Expr::var("s").mul(&x.diff("s")).sub(&Expr::var("r").mul(&y.diff("s")));
    let a = path_integral(&fa, &fb, ["r", "s"], [0.5, -0.25]);
    let b = path_integral_other_way(&fa, &fb, ["r", "s"], [0.5, -0.25]);
    assert!(a.sub(&b).is_zero_probabilistic(&["r", "s"]));
    let ch = Arc::new(chart);
    let z0 = ray_integral(&fa, &fb, &ch, [0.7, 0.1]) - ray_integral(&fa, &fb, &ch, [0.5, -0.25]);
    assert!((a.eval(&Point::new(ch.clone(), vec![0.7, 0.1])).unwrap() - z0).abs() < 1e-10);
}

#[test]
fn corrupted_surface_fails() {
    let mut s = wave_solution_xt(&f1("y", "t", "t"), &f1("z0", "x^2", "x")).unwrap();
    let i = s.names.iter().position(|n| n == "q").unwrap();
    s.components[i] = s.components[i].add(&Expr::ratio(1, 100));
    let rep = verify_integral_surface(&s, 30, BOX, 1e-9).unwrap();
    assert!(!rep.pass);
    assert!((rep.residuals[0].1 - 0.01).abs() < 1e-9, "{:?}", rep.residuals);
}

#[test]
fn spline_inputs_verify() {
    let xs: Vec<f64> = (0..=20).map(|k| -1.2 + 0.12 * k as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
    let y = InputFunction::table("y", Table::new("y", xs.clone(), ys).unwrap(), "t");
    let s = wave_solution_xt(&y, &f1("z0", "x^2", "x")).unwrap();
    let rep = verify_integral_surface(&s, 30, BOX, 1e-9).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
    let zs: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
    let z0 = InputFunction::table("z0", Table::new("z0", xs, zs).unwrap(), "x");
    let s = wave_solution_xt(&f1("y", "t", "t"), &z0).unwrap();
    let rep = verify_integral_surface(&s, 30, BOX, 1e-9).unwrap();
    assert!(rep.pass, "{:?}", rep.residuals);
}

#[test]
fn random_polynomial_inputs_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let (a, b) = (random_poly(&mut rng, "t"), random_poly(&mut rng, "x"));
        let s = wave_solution_xt(&f1("y", &a, "t"), &f1("z0", &b, "x")).unwrap();
        let rep = verify_integral_surface(&s, 30, BOX, 1e-9).unwrap();
        assert!(rep.pass && rep.legendrian_residual < 1e-9, "{a} / {b}: {:?}", rep.residuals);

        let (a, b) = (random_poly(&mut rng, "r"), random_poly(&mut rng, "t"));
        let s = wave_solution_rt(&f1("x", &a, "r"), &f1("y", &b, "t")).unwrap();
        assert!(verify_integral_surface(&s, 30, BOX, 1e-9).unwrap().pass, "{a} / {b}");

        let (a, b) = (random_poly(&mut rng, "s"), random_poly(&mut rng, "s"));
        let s = parabolic_solution_st(&f1("y", &a, "s"), &f1("x0", &b, "s")).unwrap();
        assert!(verify_integral_surface(&s, 30, BOX, 1e-9).unwrap().pass, "{a} / {b}");

        let coeffs: Vec<i64> = (0..4).map(|_| rng.gen_range(-2..=2)).collect();
        let (re, im) = holomorphic(&coeffs);
        let chart = Chart::new(&["r", "s"]).unwrap();
        let (y, x) = (parse_expr(&re, &chart).unwrap(), parse_expr(&im, &chart).unwrap());
        let s = laplace_solution_rs(&y, &x, [0.0, 0.0]).unwrap();
        assert!(verify_integral_surface(&s, 30, BOX, 1e-9).unwrap().pass, "{coeffs:?}");
        let (p, q) = (s.component("p").unwrap(), s.component("q").unwrap());
        assert!(cauchy_riemann_residual(p, q, ["r", "s"]).unwrap() < 1e-10);
    }
}

#[test]
fn surfaces_are_two_dimensional() {
    let s = wave_solution_xt(&f1("y", "t^2", "t"), &f1("z0", "x^3", "x")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        assert_eq!(s.immersion_rank(u).unwrap(), 2);
    }
}

#[test]
fn insufficient_differentiability_is_rejected() {
    let t = Table::new("y", vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
    let mut y = InputFunction::table("y", t, "s");
    y.max_order = Some(1);
    assert!(matches!(
        parabolic_solution_st(&y, &InputFunction::zero("x0", "s")),
        Err(SolutionError::NotDifferentiable { need: 2, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn wave_xt_verifies_for_cubic_inputs(c in prop::array::uniform4(-3i32..=3), d in prop::array::uniform4(-3i32..=3)) {
        let y = format!("{} + {}*t + {}*t^2 + {}*t^3", c[0], c[1], c[2], c[3]);
        let z = format!("{} + {}*x + {}*x^2 + {}*x^3", d[0], d[1], d[2], d[3]);
        let s = wave_solution_xt(&f1("y", &y, "t"), &f1("z0", &z, "x")).unwrap();
        let rep = verify_integral_surface(&s, 10, BOX, 1e-9).unwrap();
        prop_assert!(rep.pass);
        prop_assert!(rep.residuals.iter().all(|r| r.1 >= 0.0));
    }
}
