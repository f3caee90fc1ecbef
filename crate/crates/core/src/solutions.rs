//! Explicit integral surfaces of the model equations inside `Σ(J²)`, their
//! verification, and detection of points where the projection to `J¹` fails
//! to be an immersion.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse_expr, Chart, EvalError, Expr, ParseError, Point, Poly, Table};
use crate::forms::{Form, FormError};
use crate::linalg;
use crate::par;
use crate::prolong::atlas::{embed_model, Model};
use crate::prolong::ProlongError;

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("input {name} must be differentiable {need} times, a table gives {have}")]
    NotDifferentiable { name: String, need: u8, have: u8 },
    #[error("input depends on {0}, expected only {1}")]
    WrongVariable(String, String),
    #[error("input pair is not holomorphic: Cauchy-Riemann residual {0:.3e}")]
    CauchyRiemann(f64),
    #[error("surface component {0} is missing")]
    MissingComponent(String),
    #[error("path integral depends on the path (difference {0:.3e})")]
    PathDependent(f64),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
}

/// A function of one variable: an expression or a spline table.
#[derive(Clone, Debug)]
pub struct InputFunction {
    pub name: String,
    pub var: String,
    pub expr: Expr,
    /// highest meaningful derivative; `None` when smooth
    pub max_order: Option<u8>,
}

impl InputFunction {
    pub fn parse(name: &str, text: &str, var: &str) -> Result<InputFunction, SolutionError> {
        let chart = Chart::new(&[var]).expect("single coordinate");
        let expr = parse_expr(text, &chart)?;
        if let Some(v) = expr.variables().into_iter().find(|v| v != var) {
            return Err(SolutionError::WrongVariable(v, var.to_string()));
        }
        Ok(InputFunction { name: name.to_string(), var: var.to_string(), expr, max_order: None })
    }

    pub fn table(name: &str, table: Table, var: &str) -> InputFunction {
        InputFunction {
            name: name.to_string(),
            var: var.to_string(),
            expr: Expr::table(Arc::new(table), 0, &Expr::var(var)),
            max_order: Some(3),
        }
    }

    pub fn zero(name: &str, var: &str) -> InputFunction {
        InputFunction { name: name.to_string(), var: var.to_string(), expr: Expr::zero(), max_order: None }
    }

    /// The function as an expression in `param`.
    fn at(&self, param: &str, need: u8) -> Result<Expr, SolutionError> {
        if let Some(have) = self.max_order {
            if need > have {
                return Err(SolutionError::NotDifferentiable { name: self.name.clone(), need, have });
            }
        }
        Ok(if self.var == param { self.expr.clone() } else { self.expr.subst(&self.var, &Expr::var(param)) })
    }
}

/// A parametrized surface in a chart of `Σ(J²)` lying over a model equation.
#[derive(Clone, Debug)]
pub struct SolutionSurface {
    pub model: Model,
    /// atlas chart letter
    pub chart: char,
    pub params: [String; 2],
    pub param_chart: Arc<Chart>,
    /// coordinate names of the embedded model, in chart order
    pub names: Vec<String>,
    pub components: Vec<Expr>,
    /// candidate non-immersion point
    pub designated: Option<[f64; 2]>,
}

impl SolutionSurface {
    /// A surface from explicit components, one per coordinate of the embedded model.
    pub fn new(model: Model, chart: char, params: [&str; 2], comps: Vec<(&str, Expr)>) -> Result<SolutionSurface, SolutionError> {
        let emb = embed_model(model, &chart.to_string())?;
        let names: Vec<String> = emb.chart.names().iter().map(|n| n.to_string()).collect();
        let components = names
            .iter()
            .map(|n| {
                comps.iter().find(|(c, _)| c == n).map(|(_, e)| e.clone()).ok_or_else(|| SolutionError::MissingComponent(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(SolutionSurface {
            model,
            chart,
            params: params.map(String::from),
            param_chart: Arc::new(Chart::new(&params).unwrap()),
            names,
            components,
            designated: None,
        })
    }

    pub fn with_designated(mut self, at: [f64; 2]) -> SolutionSurface {
        self.designated = Some(at);
        self
    }

    pub fn component(&self, name: &str) -> Option<&Expr> {
        self.names.iter().position(|n| n == name).map(|i| &self.components[i])
    }

    pub fn point(&self, u: [f64; 2]) -> Point {
        Point::new(self.param_chart.clone(), u.to_vec())
    }

    /// Pullbacks of the five generators of the embedded model system.
    pub fn pulled_back_generators(&self) -> Result<Vec<(String, Form)>, SolutionError> {
        let emb = embed_model(self.model, &self.chart.to_string())?;
        let mut out = Vec::new();
        for (label, g) in emb.generator_labels.iter().zip(&emb.generators) {
            out.push((label.clone(), g.pullback(&self.param_chart, &self.components)?));
        }
        Ok(out)
    }

    fn jacobian_exprs(&self, comps: &[usize]) -> Vec<[Expr; 2]> {
        comps.iter().map(|&c| [self.components[c].diff(&self.params[0]), self.components[c].diff(&self.params[1])]).collect()
    }

    fn jacobian(&self, comps: &[usize], u: [f64; 2]) -> Result<DMatrix<f64>, SolutionError> {
        eval_jacobian(&self.jacobian_exprs(comps), &self.point(u))
    }

    /// Rank of the Jacobian of all nine components.
    pub fn immersion_rank(&self, u: [f64; 2]) -> Result<usize, SolutionError> {
        let all: Vec<usize> = (0..self.components.len()).collect();
        Ok(abs_rank(&self.jacobian(&all, u)?, RANK_TOL))
    }
}

fn eval_jacobian(j: &[[Expr; 2]], pt: &Point) -> Result<DMatrix<f64>, SolutionError> {
    let mut m = DMatrix::zeros(j.len(), 2);
    for (i, row) in j.iter().enumerate() {
        for k in 0..2 {
            m[(i, k)] = row[k].eval(pt)?;
        }
    }
    Ok(m)
}

pub const RANK_TOL: f64 = 1e-9;

fn abs_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let s = linalg::singular_values(m);
    let top = s.iter().fold(0.0f64, |a, v| a.max(*v));
    s.iter().filter(|v| **v > tol * top.max(1.0)).count()
}

fn int(e: &Expr, x: &str) -> Expr {
    e.antiderivative(x)
}

fn d(e: &Expr, x: &str) -> Expr {
    e.diff(x)
}

/// Wave equation `s = 0` on `V_xt`, from `y(t)` and `z₀(x)`.
pub fn wave_solution_xt(y: &InputFunction, z0: &InputFunction) -> Result<SolutionSurface, SolutionError> {
    let yt = y.at("t", 1)?;
    let zx = z0.at("x", 3)?;
    let t = Expr::var("t");
    let big_y = int(&yt, "t");
    let y2 = int(&yt.mul(&yt), "t");
    let z = Expr::sum(vec![t.mul(&yt.pow(2)).scale(&half()), y2.scale(&half()), yt.mul(&big_y).neg(), zx.clone()]);
    let p = d(&zx, "x");
    let r = d(&p, "x");
    let c = d(&r, "x");
    SolutionSurface::new(
        Model::Wave,
        'B',
        ["x", "t"],
        vec![
            ("x", Expr::var("x")),
            ("y", yt.clone()),
            ("z", z),
            ("p", p),
            ("q", t.mul(&yt).sub(&big_y)),
            ("r", r),
            ("t", t),
            ("B", d(&yt, "t")),
            ("c", c),
        ],
    )
}

fn half() -> num_rational::BigRational {
    num_rational::BigRational::new(1.into(), 2.into())
}

/// Wave equation `s = 0` on `V_rt`, from `x(r)` and `y(t)`.
pub fn wave_solution_rt(x: &InputFunction, y: &InputFunction) -> Result<SolutionSurface, SolutionError> {
    let xr = x.at("r", 1)?;
    let yt = y.at("t", 1)?;
    let (r, t) = (Expr::var("r"), Expr::var("t"));
    let big_x = int(&xr, "r");
    let big_y = int(&yt, "t");
    let x2 = int(&xr.mul(&xr), "r");
    let y2 = int(&yt.mul(&yt), "t");
    let z = Expr::sum(vec![r.mul(&xr.pow(2)), t.mul(&yt.pow(2)), x2, y2])
        .scale(&half())
        .sub(&xr.mul(&big_x).add(&yt.mul(&big_y)));
    SolutionSurface::new(
        Model::Wave,
        'E',
        ["r", "t"],
        vec![
            ("x", xr.clone()),
            ("y", yt.clone()),
            ("z", z),
            ("p", r.mul(&xr).sub(&big_x)),
            ("q", t.mul(&yt).sub(&big_y)),
            ("r", r),
            ("t", t),
            ("A", d(&xr, "r")),
            ("D", d(&yt, "t")),
        ],
    )
}

/// Parabolic equation `r = 0` on `V_st`, from `y(s)` and `x₀(s)`.
pub fn parabolic_solution_st(y: &InputFunction, x0: &InputFunction) -> Result<SolutionSurface, SolutionError> {
    let ys = y.at("s", 2)?;
    let xs = x0.at("s", 1)?;
    let (s, t) = (Expr::var("s"), Expr::var("t"));
    let y1 = d(&ys, "s");
    let big_y = int(&ys, "s");
    let big_x0 = int(&xs, "s");
    let cross = int(&ys.mul(&xs), "s");
    let p = s.mul(&ys).sub(&big_y);
    let z = Expr::sum(vec![
        t.mul(&p).mul(&y1),
        s.mul(&ys).mul(&xs),
        cross,
        xs.mul(&big_y).neg(),
        ys.mul(&big_x0).neg(),
    ]);
    SolutionSurface::new(
        Model::Parabolic,
        'F',
        ["s", "t"],
        vec![
            ("x", t.mul(&y1).add(&xs)),
            ("y", ys.clone()),
            ("z", z),
            ("p", p),
            ("q", Expr::sum(vec![t.mul(&s).mul(&y1), s.mul(&xs), big_x0.neg()])),
            ("s", s),
            ("t", t.clone()),
            ("A", t.mul(&d(&y1, "s")).add(&d(&xs, "s"))),
            ("B", y1),
        ],
    )
}

/// Largest Cauchy-Riemann residual of `u + i v` in `(a, b)` at 20 seeded
/// points of `[-1, 1]²`: `u_a = v_b`, `u_b = -v_a`.
pub fn cauchy_riemann_residual(u: &Expr, v: &Expr, params: [&str; 2]) -> Result<f64, SolutionError> {
    let chart = Arc::new(Chart::new(&params).unwrap());
    let e1 = u.diff(params[0]).sub(&v.diff(params[1]));
    let e2 = u.diff(params[1]).add(&v.diff(params[0]));
    let mut rng = ChaCha8Rng::seed_from_u64(crate::expr::ZERO_TEST_SEED);
    let mut worst = 0.0f64;
    for _ in 0..crate::expr::ZERO_TEST_POINTS {
        let pt = Point::new(chart.clone(), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        worst = worst.max(e1.eval(&pt)?.abs()).max(e2.eval(&pt)?.abs());
    }
    Ok(worst)
}

/// Potential of the closed 1-form `f_a da + f_b db` along the path
/// `(a₀, b₀) → (a, b₀) → (a, b)`; exact when both coefficients are polynomial.
pub fn path_integral(fa: &Expr, fb: &Expr, params: [&str; 2], base: [f64; 2]) -> Expr {
    let (a, b) = (params[0], params[1]);
    let (a0, b0) = (crate::expr::rational_from_f64(base[0]), crate::expr::rational_from_f64(base[1]));
    if let (Some(pa), Some(pb)) = (Poly::from_expr(fa), Poly::from_expr(fb)) {
        let leg1 = pa.at(b, &b0).integrate(a);
        let leg1 = leg1.add(&leg1.at(a, &a0).scale(&(-num_rational::BigRational::from_integer(1.into()))));
        let leg2 = pb.integrate(b);
        let leg2 = leg2.add(&leg2.at(b, &b0).scale(&(-num_rational::BigRational::from_integer(1.into()))));
        return leg1.add(&leg2).to_expr();
    }
    let (ea0, eb0) = (Expr::constant(a0), Expr::constant(b0));
    let leg1 = fa.subst(b, &eb0).antiderivative(a);
    let leg2 = fb.antiderivative(b);
    leg1.sub(&leg1.subst(a, &ea0)).add(&leg2.sub(&leg2.subst(b, &eb0)))
}

/// Same potential along `(a₀, b₀) → (a₀, b) → (a, b)`.
pub fn path_integral_other_way(fa: &Expr, fb: &Expr, params: [&str; 2], base: [f64; 2]) -> Expr {
    path_integral(fb, fa, [params[1], params[0]], [base[1], base[0]])
}

fn check_paths(fa: &Expr, fb: &Expr, params: [&str; 2], base: [f64; 2], chosen: &Expr) -> Result<(), SolutionError> {
    let other = path_integral_other_way(fa, fb, params, base);
    let chart = Arc::new(Chart::new(&params).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(crate::expr::ZERO_TEST_SEED);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let pt = Point::new(chart.clone(), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        worst = worst.max((chosen.eval(&pt)? - other.eval(&pt)?).abs());
    }
    if worst > 1e-8 {
        return Err(SolutionError::PathDependent(worst));
    }
    Ok(())
}

/// Laplace equation `r + t = 0` on `V_rs`, from a holomorphic `f = y + i x` in `r + i s`.
pub fn laplace_solution_rs(y: &Expr, x: &Expr, base: [f64; 2]) -> Result<SolutionSurface, SolutionError> {
    let params = ["r", "s"];
    for v in y.variables().into_iter().chain(x.variables()) {
        if !params.contains(&v.as_str()) {
            return Err(SolutionError::WrongVariable(v, "r, s".into()));
        }
    }
    let cr = cauchy_riemann_residual(y, x, params)?;
    if cr > 1e-10 {
        return Err(SolutionError::CauchyRiemann(cr));
    }
    let (r, s) = (Expr::var("r"), Expr::var("s"));
    let (xr, xs, yr, ys) = (x.diff("r"), x.diff("s"), y.diff("r"), y.diff("s"));
    let pr = r.mul(&xr).add(&s.mul(&yr));
    let ps = r.mul(&xs).add(&s.mul(&ys));
    let qr = s.mul(&xr).sub(&r.mul(&yr));
    let qs = s.mul(&xs).sub(&r.mul(&ys));
    let p = path_integral(&pr, &ps, params, base);
    let q = path_integral(&qr, &qs, params, base);
    check_paths(&pr, &ps, params, base, &p)?;
    check_paths(&qr, &qs, params, base, &q)?;
    let zr = p.mul(&xr).add(&q.mul(&yr));
    let zs = p.mul(&xs).add(&q.mul(&ys));
    let z = path_integral(&zr, &zs, params, base);
    check_paths(&zr, &zs, params, base, &z)?;
    SolutionSurface::new(
        Model::Laplace,
        'D',
        params,
        vec![
            ("x", x.clone()),
            ("y", y.clone()),
            ("z", z),
            ("p", p),
            ("q", q),
            ("r", r),
            ("s", s),
            ("B", yr),
            ("D", ys),
        ],
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub grid: usize,
    pub domain: [[f64; 2]; 2],
    /// `(generator, max |coefficient|)` over the grid
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    /// max of `|d(ι*ϖ₀)|` over the grid
    pub legendrian_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub designated: Option<[f64; 2]>,
    pub corank_at_designated: Option<usize>,
    /// grid points where the projection to `J¹` drops rank, with the corank
    pub rank_drops: Vec<([f64; 2], usize)>,
}

pub const MAX_REPORTED_DROPS: usize = 64;

/// Evaluates the pulled-back generators on an `n × n` grid over `domain`.
pub fn verify_integral_surface(
    surface: &SolutionSurface,
    n: usize,
    domain: [[f64; 2]; 2],
    tol: f64,
) -> Result<VerificationReport, SolutionError> {
    verify_integral_surface_with(surface, n, domain, tol, RANK_TOL)
}

/// As [`verify_integral_surface`], with the rank threshold of the corank scan.
pub fn verify_integral_surface_with(
    surface: &SolutionSurface,
    n: usize,
    domain: [[f64; 2]; 2],
    tol: f64,
    rank_tol: f64,
) -> Result<VerificationReport, SolutionError> {
    let forms = surface.pulled_back_generators()?;
    let legendre = forms[0].1.ext_d();
    let [a, b] = &surface.params;
    let coeffs: Vec<[Expr; 2]> = forms.iter().map(|(_, f)| [f.coeff(&[a]), f.coeff(&[b])]).collect();
    let leg = legendre.coeff(&[a, b]);
    let j1 = surface.jacobian_exprs(&j1_indices(surface));
    let step = |k: usize, i: usize| if n <= 1 { domain[k][0] } else { domain[k][0] + (domain[k][1] - domain[k][0]) * i as f64 / (n - 1) as f64 };
    let rows: Vec<usize> = (0..n).collect();
    type Row = (Vec<f64>, f64, Vec<([f64; 2], usize)>);
    let results: Vec<Result<Row, SolutionError>> = par::map(&rows, |&i| {
        let mut worst = vec![0.0f64; coeffs.len()];
        let mut lw = 0.0f64;
        let mut drops = Vec::new();
        for j in 0..n {
            let u = [step(0, i), step(1, j)];
            let pt = surface.point(u);
            for (k, c) in coeffs.iter().enumerate() {
                worst[k] = worst[k].max(c[0].eval(&pt)?.abs()).max(c[1].eval(&pt)?.abs());
            }
            lw = lw.max(leg.eval(&pt)?.abs());
            let k = 2 - abs_rank(&eval_jacobian(&j1, &pt)?, rank_tol);
            if k > 0 {
                drops.push((u, k));
            }
        }
        Ok((worst, lw, drops))
    });
    let mut worst = vec![0.0f64; coeffs.len()];
    let mut legendrian_residual = 0.0f64;
    let mut rank_drops = Vec::new();
    for r in results {
        let (w, l, d) = r?;
        for k in 0..w.len() {
            worst[k] = worst[k].max(w[k]);
        }
        legendrian_residual = legendrian_residual.max(l);
        rank_drops.extend(d);
    }
    rank_drops.truncate(MAX_REPORTED_DROPS);
    let max_residual = worst.iter().copied().fold(0.0, f64::max);
    let corank_at_designated = surface.designated.map(|u| detect_corank_with(surface, u, rank_tol)).transpose()?;
    Ok(VerificationReport {
        grid: n,
        domain,
        residuals: forms.iter().map(|(l, _)| l.clone()).zip(worst).collect(),
        max_residual,
        legendrian_residual,
        tol,
        pass: max_residual < tol && legendrian_residual < tol,
        designated: surface.designated,
        corank_at_designated,
        rank_drops,
    })
}

fn j1_indices(surface: &SolutionSurface) -> Vec<usize> {
    ["x", "y", "z", "p", "q"].iter().map(|n| surface.names.iter().position(|m| m == n).expect("J1 coordinate")).collect()
}

/// `2 − rank` of the parameter Jacobian of `(x, y, z, p, q)`.
pub fn detect_corank(surface: &SolutionSurface, u: [f64; 2]) -> Result<usize, SolutionError> {
    detect_corank_with(surface, u, RANK_TOL)
}

pub fn detect_corank_with(surface: &SolutionSurface, u: [f64; 2], rank_tol: f64) -> Result<usize, SolutionError> {
    Ok(2 - abs_rank(&surface.jacobian(&j1_indices(surface), u)?, rank_tol))
}
