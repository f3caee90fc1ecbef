use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use jetprolong::contact::{adapted_coframe, exact_discriminant, rank4_type, PdeSurface, PointClass, Rank4Kind};
use jetprolong::expr::{parse_expr, Chart, Expr, Point};
use jetprolong::forms::Form;
use jetprolong::prolong::charts::{coordinates_in_basis, hyperbolic_transition, hyperbolic_transition_back, p_chart, plane_in_basis, P_NAMES};
use jetprolong::prolong::*;
use jetprolong::solutions::*;
use jetprolong::tanaka::reference::{compare_symbol, reference_symbol, Reference};
use jetprolong::tanaka::{derived_flag, filtration, symbol_algebra};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const BOX: [[f64; 2]; 2] = [[-1.0, 1.0], [-1.0, 1.0]];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn kind_of(model: Model) -> Rank4Kind {
    match model {
        Model::Wave => Rank4Kind::HyperbolicType,
        Model::Parabolic => Rank4Kind::ParabolicType,
        Model::Laplace => Rank4Kind::EllipticType,
    }
}

fn on_surface(f: &PdeSurface, rng: &mut ChaCha8Rng) -> Point {
    let solve = ["r", "s", "t", "z", "p"].into_iter().find(|c| !f.f.diff(c).is_zero_const()).unwrap();
    loop {
        let vals: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(p) = f.project(&Point::new(f.chart.clone(), vals), solve) {
            return p;
        }
    }
}

fn model_point(model: Model, rng: &mut ChaCha8Rng) -> (PdeSurface, Point) {
    let f = model.surface();
    let mut v: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    match model {
        Model::Wave => v[6] = 0.0,
        Model::Parabolic => v[5] = 0.0,
        Model::Laplace => v[7] = -v[5],
    }
    let pt = f.point(v);
    (f, pt)
}

fn model_fiber(model: Model, rng: &mut ChaCha8Rng) -> PluckerFiber {
    let (f, pt) = model_point(model, rng);
    plucker_fiber(&f.induced_distribution(&pt).unwrap()).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cases = [("s", rat(-1, 4), PointClass::Hyperbolic), ("r", rat(0, 1), PointClass::Parabolic), ("r + t", rat(1, 1), PointClass::Elliptic)];
    let pts = [[0.0; 8], [0.5, -0.25, 1.0, 2.0, -3.0, 0.0, 0.0, 0.0], [1.5, 2.5, -0.5, 0.125, 0.75, 0.0, 0.0, 0.0]];
    let mut bad = Vec::new();
    for (text, want, class) in &cases {
        let f = PdeSurface::parse(text).unwrap();
        for v in pts {
            let pt = f.project(&f.point(v), "r").or_else(|| f.project(&f.point(v), "s")).unwrap();
            let got = exact_discriminant(&f, &pt);
            let c = f.classify(&pt).unwrap();
            if got.as_ref() != Some(want) || c.class != *class {
                bad.push(format!("{text}: {got:?} {:?}", c.class));
            }
        }
    }
    let el = start.elapsed();
    outcome(bad.is_empty() && el < Duration::from_secs(1), format!("exact values {}, {:.3}s {}", if bad.is_empty() { "ok" } else { "wrong" }, el.as_secs_f64(), bad.join("; ")))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let vars = ["x", "y", "z", "p", "q", "r", "s", "t"];
    let (mut checked, mut agree) = (0, 0);
    for _ in 0..10 {
        let mut terms: Vec<String> = vars.iter().map(|v| format!("{:.4}*{v}", rng.gen_range(-1.0..1.0))).collect();
        for (a, b) in [("r", "t"), ("s", "s"), ("r", "r"), ("x", "s"), ("p", "t"), ("t", "t")] {
            terms.push(format!("{:.4}*{a}*{b}", rng.gen_range(-1.0..1.0)));
        }
        let f = PdeSurface::parse(&terms.join(" + ")).unwrap();
        let mut n = 0;
        while n < 12 {
            let pt = on_surface(&f, &mut rng);
            let c = f.classify(&pt).unwrap();
            if c.class == PointClass::NonRegular || c.delta.abs() <= 1e-6 {
                continue;
            }
            let topo = fiber_topology(&plucker_fiber(&f.induced_distribution(&pt).unwrap()).unwrap());
            let want = if c.delta < 0.0 { TopologyLabel::Torus } else { TopologyLabel::Sphere };
            agree += usize::from(topo.label == want);
            n += 1;
            checked += 1;
        }
    }
    let mut mesh_ok = 0;
    let mut mesh_bad = Vec::new();
    for model in Model::ALL {
        for _ in 0..3 {
            let pf = model_fiber(model, &mut rng);
            let r = fiber_sampler_oracle(&pf, 100_000).unwrap();
            let chi = r.euler_characteristic;
            let ok = match model {
                Model::Wave => (chi - 0.0).abs() <= 0.1 && r.singular_points == 0,
                Model::Laplace => (chi - 2.0).abs() <= 0.1 && r.singular_points == 0,
                Model::Parabolic => ((chi - 0.0).abs() <= 0.1 || (chi - 2.0).abs() <= 0.1) && r.singular_points == 1,
            };
            if ok {
                mesh_ok += 1;
            } else {
                mesh_bad.push(format!("{model}: chi {chi} singular {}", r.singular_points));
            }
        }
    }
    let el = start.elapsed();
    let pass = checked >= 100 && agree == checked && mesh_bad.is_empty() && el < Duration::from_secs(120);
    outcome(pass, format!("labels {agree}/{checked}, mesh {mesh_ok}/9, {:.1}s {}", el.as_secs_f64(), mesh_bad.join("; ")))
}

fn chart_references(kind: Rank4Kind) -> [Option<[&'static str; 2]>; 6] {
    match kind {
        Rank4Kind::HyperbolicType => [
            Some(["p12", "p21"]),
            None,
            Some(["p22", "p11"]),
            Some(["p11", "p22"]),
            None,
            Some(["p12", "p21"]),
        ],
        Rank4Kind::ParabolicType => [
            Some(["p11", "p12 - p21"]),
            Some(["p11", "1 + p11*p22 - p12*p21"]),
            Some(["p11*p22 - p12*p21", "p11 + p22"]),
            None,
            Some(["p22", "1 + p11*p22 - p12*p21"]),
            Some(["p22", "p21 - p12"]),
        ],
        _ => [
            Some(["p12 - p21", "p11 + p22"]),
            Some(["1 + p11*p22 - p12*p21", "-p11 + p22"]),
            Some(["p11 + p22", "1 - p11*p22 + p12*p21"]),
            Some(["p11 + p22", "p11*p22 - p12*p21 - 1"]),
            Some(["1 + p11*p22 - p12*p21", "p11 - p22"]),
            Some(["-p12 + p21", "p11 + p22"]),
        ],
    }
}

const KINDS: [Rank4Kind; 3] = [Rank4Kind::HyperbolicType, Rank4Kind::ParabolicType, Rank4Kind::EllipticType];

fn criterion_3() -> Outcome {
    let ch = p_chart();
    let names: Vec<&str> = P_NAMES.to_vec();
    let (mut matched, mut empty) = (0, 0);
    let mut bad = Vec::new();
    for kind in KINDS {
        for (chart, want) in ChartId::ALL.into_iter().zip(chart_references(kind)) {
            let model = chart_defining_functions(kind, chart).unwrap();
            match (&model.f, want) {
                (None, None) => {
                    empty += 1;
                    matched += 1;
                }
                (Some(f), Some(w)) => {
                    let ok = (0..2).all(|k| {
                        let r = parse_expr(w[k], &ch).unwrap();
                        f[k].sub(&r).is_zero_probabilistic(&names) || f[k].add(&r).is_zero_probabilistic(&names)
                    });
                    if ok {
                        matched += 1;
                    } else {
                        bad.push(format!("{kind:?} {chart}"));
                    }
                }
                _ => bad.push(format!("{kind:?} {chart} emptiness")),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p11: f64 = rng.gen_range(-3.0..3.0);
        let p22: f64 = rng.gen_range(0.1..3.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let (a, b) = hyperbolic_transition(p11, p22).unwrap();
        if (a - 1.0 / p22).abs() > 1e-15 * a.abs().max(1.0) || b != p11 {
            worst = f64::INFINITY;
        }
        let (u, v) = hyperbolic_transition_back(a, b).unwrap();
        worst = worst.max((u - p11).abs()).max((v - p22).abs());
    }
    let pass = matched == 18 && empty == 3 && worst <= 1e-12;
    outcome(pass, format!("charts {matched}/18, empty {empty}, transition error {worst:.1e} {}", bad.join("; ")))
}

fn newton_on_chart(model: &GrassmannChartModel, mut p: [f64; 4], unknowns: (usize, usize)) -> Option<[f64; 4]> {
    let f = model.f.as_ref()?;
    let grads: Vec<Vec<Expr>> = f.iter().map(|fk| P_NAMES.iter().map(|n| fk.diff(n)).collect()).collect();
    for _ in 0..50 {
        let env: [(&str, f64); 4] = [("p11", p[0]), ("p12", p[1]), ("p21", p[2]), ("p22", p[3])];
        let v = [f[0].eval(&env).ok()?, f[1].eval(&env).ok()?];
        if v[0].abs().max(v[1].abs()) < 1e-14 {
            return Some(p);
        }
        let j = |k: usize, i: usize| grads[k][i].eval(&env).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[j(0, unknowns.0), j(0, unknowns.1), j(1, unknowns.0), j(1, unknowns.1)]);
        let step = m.try_inverse()? * DVector::from_vec(vec![v[0], v[1]]);
        p[unknowns.0] -= step[0];
        p[unknowns.1] -= step[1];
    }
    None
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut lines = Vec::new();
    let mut pass = true;
    for model in Model::ALL {
        let kind = kind_of(model);
        let pf = model_fiber(model, &mut rng);
        let ac = adapted_coframe(&pf.sample).unwrap();
        let models: Vec<(ChartId, GrassmannChartModel)> =
            ChartId::ALL.into_iter().map(|c| (c, chart_defining_functions(kind, c).unwrap())).collect();
        // fiber points satisfy the chart equations of every chart that sees them
        let (mut forward, mut forward_bad) = (0, 0);
        while forward < 500 {
            let plane = pf.plane(&pf.random_point(&mut rng));
            let mut seen = false;
            for (chart, cm) in &models {
                let Some(p) = coordinates_in_basis(&ac.coframe, *chart, &plane) else { continue };
                if p.iter().any(|v| v.abs() > 1e3) {
                    continue;
                }
                seen = true;
                let scale = 1.0 + p.iter().map(|x| x * x).sum::<f64>();
                let ok = !cm.is_empty() && cm.eval(&p).is_some_and(|v| v[0].abs().max(v[1].abs()) < 1e-9 * scale);
                forward_bad += usize::from(!ok);
            }
            forward += usize::from(seen);
        }
        // chart solutions are integral planes
        let (mut backward, mut backward_bad, mut tries) = (0, 0, 0);
        while backward < 500 && tries < 20_000 {
            tries += 1;
            let (chart, cm) = &models[tries % 6];
            if cm.is_empty() {
                continue;
            }
            let start: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let Some(p) = newton_on_chart(cm, start, PAIRS[tries % PAIRS.len()]) else { continue };
            if p.iter().any(|v| v.abs() > 50.0) {
                continue;
            }
            let plane = plane_in_basis(&ac.coframe, *chart, &p).unwrap();
            backward_bad += usize::from(pf.integrality_residual(&plane) >= 1e-9);
            backward += 1;
        }
        pass &= forward_bad == 0 && backward_bad == 0 && backward >= 500;
        lines.push(format!("{model} {forward}/{backward} points, {} mismatches", forward_bad + backward_bad));
    }
    outcome(pass, lines.join(", "))
}

// Base point, chart and fiber coordinates of a prolonged system at a point of the given stratum.
fn stratum_sample(model: Model, stratum: Stratum, rng: &mut ChaCha8Rng) -> (ProlongedSystem, Point, Stratum) {
    let (f, base) = model_point(model, rng);
    let sys = f.system(&base).unwrap();
    let a = rng.gen_range(0.2..1.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let (chart, free) = match stratum {
        Stratum::Sigma0 => (0, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
        Stratum::Sigma1 if model == Model::Wave && rng.gen::<bool>() => (5, [0.0, a]),
        Stratum::Sigma1 => (5, [a, 0.0]),
        Stratum::Sigma2 => (5, [0.0, 0.0]),
    };
    let pro = prolong_system(&sys, &base, ChartId::ALL[chart]).unwrap();
    let pf = plucker_fiber(&pro.base.sample(&base).unwrap()).unwrap();
    let got = stratify(&pf, &pro.plane(&base, free).unwrap()).unwrap();
    let w = pro.lift(&base, free);
    (pro, w, got)
}

fn strata_of(model: Model) -> &'static [Stratum] {
    match model {
        Model::Laplace => &[Stratum::Sigma0, Stratum::Sigma2],
        _ => &[Stratum::Sigma0, Stratum::Sigma1, Stratum::Sigma2],
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let (mut total, mut bad) = (0, Vec::new());
    for model in Model::ALL {
        for &stratum in strata_of(model) {
            for _ in 0..10 {
                let (pro, w, got) = stratum_sample(model, stratum, &mut rng);
                let fl = derived_flag(&pro.system, &w).unwrap();
                let ok = got == stratum
                    && fl.ambient_dim == 9
                    && match stratum {
                        Stratum::Sigma2 => fl.weak_ranks == [8, 8],
                        _ => fl.ranks == [4, 6, 8, 9] && fl.weak_ranks == [8, 9],
                    };
                if !ok {
                    bad.push(format!("{model} {stratum:?}: {:?} {:?}", fl.ranks, fl.weak_ranks));
                }
                total += 1;
            }
        }
    }
    outcome(bad.is_empty(), format!("{} of {total} flags as expected {}", total - bad.len(), bad.join("; ")))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let (mut total, mut worst, mut bad) = (0, 0.0f64, Vec::new());
    for model in Model::ALL {
        let kind = kind_of(model);
        for &stratum in strata_of(model) {
            for _ in 0..4 {
                let (pro, w, got) = stratum_sample(model, stratum, &mut rng);
                let gs = symbol_algebra(&filtration(&pro.system, &w).unwrap()).unwrap();
                let fp = gs.fingerprint();
                worst = worst.max(gs.jacobi_residual());
                let mut ok = got == stratum && fp.graded_dims == [4, 2, 2, 1];
                match stratum {
                    Stratum::Sigma0 => ok &= fp.generating_condition == [true; 3],
                    Stratum::Sigma2 => ok &= !fp.generating_condition[2],
                    Stratum::Sigma1 => {}
                }
                for m in 0..3 {
                    let r = Reference { kind, stratum: m };
                    match compare_symbol(&gs, r) {
                        Ok(cmp) => ok &= cmp.matched == (m == stratum.index()),
                        Err(_) => ok &= reference_symbol(r).is_none() && m != stratum.index(),
                    }
                }
                if !ok {
                    bad.push(format!("{model} {stratum:?}: {:?} {:?}", fp.graded_dims, fp.generating_condition));
                }
                total += 1;
            }
        }
    }
    let pass = bad.is_empty() && worst < 1e-9;
    outcome(pass, format!("{} of {total} symbols match, Jacobi residual {worst:.1e} {}", total - bad.len(), bad.join("; ")))
}

fn poly_text(coeffs: &[i32], var: &str) -> String {
    let terms: Vec<String> = coeffs.iter().enumerate().map(|(k, c)| format!("({c})*{var}^{k}")).collect();
    terms.join(" + ")
}

fn random_coeffs(rng: &mut ChaCha8Rng) -> Vec<i32> {
    (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(-3..=3)).collect()
}

// y with a critical point at `c`: a + b (v - c)^2 + e (v - c)^3, b != 0
fn critical_at(rng: &mut ChaCha8Rng, var: &str, c: (i32, i32)) -> String {
    let b = [-2, -1, 1, 2][rng.gen_range(0..4)];
    format!("{} + ({b})*({var} - {}/{})^2 + ({})*({var} - {}/{})^3", rng.gen_range(-3..=3), c.0, c.1, rng.gen_range(-2..=2), c.0, c.1)
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
            let m = if j % 4 >= 2 { -c * binom(k, j) } else { c * binom(k, j) };
            let term = format!("({m})*r^{}*s^{j}", k - j);
            if j % 2 == 0 { re.push(term) } else { im.push(term) }
        }
    }
    (re.join(" + "), im.join(" + "))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let f1 = |name: &str, text: &str, var: &str| InputFunction::parse(name, text, var).unwrap();
    let mut worst: f64 = 0.0;
    let mut worst_cr: f64 = 0.0;
    let mut bad = Vec::new();
    let mut record = |label: &str, s: &SolutionSurface, bad: &mut Vec<String>| {
        let rep = verify_integral_surface(s, 30, BOX, 1e-9).unwrap();
        let r = rep.residuals.iter().fold(0.0f64, |a, (_, v)| a.max(*v));
        worst = worst.max(r);
        if !rep.pass {
            bad.push(format!("{label} residual {r:.1e}"));
        }
    };
    for _ in 0..5 {
        let c = (rng.gen_range(-3..=3), 4);
        let s = wave_solution_xt(&f1("y", &critical_at(&mut rng, "t", c), "t"), &f1("z0", &poly_text(&random_coeffs(&mut rng), "x"), "x")).unwrap();
        record("wave xt", &s, &mut bad);
        let x = rng.gen_range(-0.9..0.9);
        let k = detect_corank(&s, [x, c.0 as f64 / 4.0]).unwrap();
        if k != 1 {
            bad.push(format!("wave xt corank {k}"));
        }

        let (a, b) = ((rng.gen_range(-3..=3), 4), (rng.gen_range(-3..=3), 4));
        let s = wave_solution_rt(&f1("x", &critical_at(&mut rng, "r", a), "r"), &f1("y", &critical_at(&mut rng, "t", b), "t")).unwrap();
        record("wave rt", &s, &mut bad);
        let k = detect_corank(&s, [a.0 as f64 / 4.0, b.0 as f64 / 4.0]).unwrap();
        if k != 2 {
            bad.push(format!("wave rt corank {k}"));
        }

        let c = (rng.gen_range(-3..=3), 4);
        let y = f1("y", &critical_at(&mut rng, "s", c), "s");
        let s = parabolic_solution_st(&y, &f1("x0", &poly_text(&random_coeffs(&mut rng), "s"), "s")).unwrap();
        record("parabolic", &s, &mut bad);
        // A is affine in t along the critical line; locate its zero
        let sc = c.0 as f64 / 4.0;
        let a_at = |t: f64| s.component("A").unwrap().eval(&s.point([sc, t])).unwrap();
        let (a0, a1) = (a_at(0.0), a_at(1.0));
        let t_star = a0 / (a0 - a1);
        let k_zero = detect_corank(&s, [sc, t_star]).unwrap();
        let k_off = detect_corank(&s, [sc, t_star + 0.5]).unwrap();
        if (k_zero, k_off) != (2, 1) {
            bad.push(format!("parabolic coranks {k_zero}/{k_off}"));
        }

        // f'(0) = 0 makes y_r = y_s = 0 at the origin
        let mut coeffs: Vec<i64> = (0..5).map(|_| rng.gen_range(-2..=2)).collect();
        coeffs[1] = 0;
        coeffs[2] = [-2, -1, 1, 2][rng.gen_range(0..4)];
        let (re, im) = holomorphic(&coeffs);
        let chart = Chart::new(&["r", "s"]).unwrap();
        let (y, x) = (parse_expr(&re, &chart).unwrap(), parse_expr(&im, &chart).unwrap());
        let s = laplace_solution_rs(&y, &x, [0.0, 0.0]).unwrap();
        record("laplace", &s, &mut bad);
        let k = detect_corank(&s, [0.0, 0.0]).unwrap();
        if k != 2 {
            bad.push(format!("laplace corank {k}"));
        }
        let cr = cauchy_riemann_residual(s.component("p").unwrap(), s.component("q").unwrap(), ["r", "s"]).unwrap();
        worst_cr = worst_cr.max(cr);
    }
    let pass = bad.is_empty() && worst < 1e-9 && worst_cr < 1e-10;
    outcome(pass, format!("20 surfaces, residual {worst:.1e}, Cauchy-Riemann {worst_cr:.1e} {}", bad.join("; ")))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut bad = Vec::new();
    let mut steps = 0;
    for model in Model::ALL {
        let (f, pt) = model_point(model, &mut rng);
        let sys = f.system(&pt).unwrap();
        let base_kind = rank4_type(&sys.sample(&pt).unwrap()).unwrap().kind;
        if base_kind != kind_of(model) {
            bad.push(format!("{model} base {base_kind:?}"));
        }
        for _ in 0..20 {
            let levels = tower(&sys, &pt, 2, ChartId::ALL[0], &mut rng).unwrap();
            let dims: Vec<usize> = levels.iter().map(|l| l.ambient_dim).collect();
            if dims != [7, 9, 11] || levels.iter().any(|l| l.kind != base_kind) {
                bad.push(format!("{model} {dims:?}"));
            }
            steps += 2;
        }
    }
    let el = start.elapsed();
    let pass = bad.is_empty() && el < Duration::from_secs(60);
    outcome(pass, format!("{steps} steps, dims 7/9/11, {:.1}s {}", el.as_secs_f64(), bad.join("; ")))
}

const NAMES: [&str; 4] = ["a", "b", "c", "e"];

fn poly4(rng: &mut ChaCha8Rng) -> String {
    let mut terms = vec![format!("{}", rng.gen_range(-3..=3))];
    for _ in 0..4 {
        let mono: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| NAMES[rng.gen_range(0..4)].to_string()).collect();
        terms.push(format!("({})*{}", rng.gen_range(-3..=3), mono.join("*")));
    }
    terms.join(" + ")
}

fn one_form(rng: &mut ChaCha8Rng, chart: &Arc<Chart>) -> Form {
    let text: Vec<String> = NAMES.iter().map(|n| format!("({})*d{n}", poly4(rng))).collect();
    Form::parse_one_form(&text.join(" + "), chart).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_pt(rng: &mut ChaCha8Rng, chart: &Arc<Chart>) -> Point {
    let n = chart.dim();
    Point::new(chart.clone(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_range(0..4) == 0 {
        return if rng.gen::<bool>() { NAMES[rng.gen_range(0..4)].to_string() } else { format!("{}", rng.gen_range(-3..=3)) };
    }
    let a = random_expr(rng, depth - 1);
    let b = random_expr(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => format!("({a}) + ({b})"),
        1 => format!("({a}) - ({b})"),
        2 | 3 => format!("({a})*({b})"),
        4 => format!("({a})/(2 + ({b})^2)"),
        5 => format!("sin({a})"),
        6 => format!("cos({a})*({b})"),
        7 => format!("exp(({a})/3)"),
        _ => format!("sqrt(1 + ({a})^2) + log(2 + ({b})^2)"),
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let chart = Arc::new(Chart::new(&NAMES).unwrap());
    let mut notes = Vec::new();
    let mut pass = true;

    let mut d2: f64 = 0.0;
    for _ in 0..50 {
        let w = one_form(&mut rng, &chart);
        let f = Form::function(&chart, parse_expr(&poly4(&mut rng), &chart).unwrap());
        let (ddw, ddf) = (w.ext_d().ext_d(), f.ext_d().ext_d());
        for _ in 0..20 {
            let pt = random_pt(&mut rng, &chart);
            let vs: Vec<DVector<f64>> = (0..3).map(|_| random_vec(&mut rng, 4)).collect();
            d2 = d2.max(ddw.eval(&pt).unwrap().apply(&vs).abs());
            d2 = d2.max(ddf.eval(&pt).unwrap().apply(&vs[..2]).abs());
        }
    }
    pass &= d2 < 1e-10;
    notes.push(format!("d^2 {d2:.1e}"));

    let mut leib: f64 = 0.0;
    for _ in 0..30 {
        let (a, b) = (one_form(&mut rng, &chart), one_form(&mut rng, &chart));
        let g = Form::function(&chart, parse_expr(&poly4(&mut rng), &chart).unwrap());
        let lhs = a.wedge(&b).unwrap().ext_d();
        let rhs = a.ext_d().wedge(&b).unwrap().sub(&a.wedge(&b.ext_d()).unwrap());
        let lhs0 = g.wedge(&b).unwrap().ext_d();
        let rhs0 = g.ext_d().wedge(&b).unwrap().add(&g.wedge(&b.ext_d()).unwrap());
        for _ in 0..20 {
            let pt = random_pt(&mut rng, &chart);
            let vs: Vec<DVector<f64>> = (0..3).map(|_| random_vec(&mut rng, 4)).collect();
            let (l, r) = (lhs.eval(&pt).unwrap().apply(&vs), rhs.eval(&pt).unwrap().apply(&vs));
            leib = leib.max((l - r).abs() / (1.0 + l.abs()));
            let (l, r) = (lhs0.eval(&pt).unwrap().apply(&vs[..2]), rhs0.eval(&pt).unwrap().apply(&vs[..2]));
            leib = leib.max((l - r).abs() / (1.0 + l.abs()));
        }
    }
    pass &= leib < 1e-9;
    notes.push(format!("Leibniz {leib:.1e}"));

    let source = Arc::new(Chart::new(&["u", "v", "w"]).unwrap());
    let mut pb: f64 = 0.0;
    for _ in 0..20 {
        let map: Vec<Expr> = (0..4)
            .map(|_| {
                let text = poly4(&mut rng).replace('a', "u").replace('b', "v").replace('c', "w").replace('e', "u*v");
                parse_expr(&text, &source).unwrap()
            })
            .collect();
        let alpha = one_form(&mut rng, &chart);
        let lhs = alpha.pullback(&source, &map).unwrap().ext_d();
        let rhs = alpha.ext_d().pullback(&source, &map).unwrap();
        for _ in 0..20 {
            let pt = random_pt(&mut rng, &source);
            let vs: Vec<DVector<f64>> = (0..2).map(|_| random_vec(&mut rng, 3)).collect();
            let (l, r) = (lhs.eval(&pt).unwrap().apply(&vs), rhs.eval(&pt).unwrap().apply(&vs));
            pb = pb.max((l - r).abs() / (1.0 + l.abs()));
        }
    }
    pass &= pb < 1e-9;
    notes.push(format!("pullback {pb:.1e}"));

    let mut fd: f64 = 0.0;
    let h = 1e-5;
    for _ in 0..100 {
        let e = parse_expr(&random_expr(&mut rng, 3), &chart).unwrap();
        let x = NAMES[rng.gen_range(0..4)];
        let de = e.diff(x);
        for _ in 0..10 {
            let pt = random_pt(&mut rng, &chart);
            let (mut hi, mut lo) = (pt.clone(), pt.clone());
            hi.set(x, pt.get(x).unwrap() + h);
            lo.set(x, pt.get(x).unwrap() - h);
            let (Ok(exact), Ok(a), Ok(b)) = (de.eval(&pt), e.eval(&hi), e.eval(&lo)) else { continue };
            let approx = (a - b) / (2.0 * h);
            fd = fd.max((exact - approx).abs() / exact.abs().max(1.0));
        }
    }
    pass &= fd < 1e-6;
    notes.push(format!("diff vs finite differences {fd:.1e}"));
    outcome(pass, notes.join(", "))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("model classification", criterion_1),
        ("fiber topology", criterion_2),
        ("chart tables", criterion_3),
        ("chart and Pluecker agreement", criterion_4),
        ("derived flags", criterion_5),
        ("symbol algebras", criterion_6),
        ("singular solutions", criterion_7),
        ("prolongation tower", criterion_8),
        ("engine soundness", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let mut out = std::io::stdout().lock();
        writeln!(out, "criterion {}: {} ({name}) {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail.trim_end()).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
