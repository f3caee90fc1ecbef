//! Contact geometry of the 2-jet space, PDE hypersurfaces and their pointwise type.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse_expr, rational_from_f64, rational_sign, Chart, EvalError, Expr, ParseError, Point};
use crate::forms::Form;
use crate::linalg::{self, RANK_TOL};
use crate::system::{DistributionSample, PfaffianSystem, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("point is off the surface: |F| = {0:.3e}")]
    OffSurface(f64),
    #[error("equation is not regular at the point: (F_r, F_s, F_t) vanishes")]
    NonRegular,
    #[error("degenerate pencil: the two restricted 2-forms are dependent or vanish")]
    DegeneratePencil,
    #[error("could not split the normal form (residual {residual:.3e}, condition {condition:.3e})")]
    Split { residual: f64, condition: f64 },
    #[error("sample has rank {0}, expected 4")]
    NotRank4(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    System(#[from] SystemError),
}

pub const PARABOLIC_BAND: f64 = 1e-9;

/// The J² chart shared by every PDE computation.
pub fn j2_chart() -> Arc<Chart> {
    Arc::new(Chart::j2())
}

/// ϖ0 = dz - p dx - q dy, ϖ1 = dp - r dx - s dy, ϖ2 = dq - s dx - t dy.
pub fn contact_system_j2(chart: &Arc<Chart>) -> [Form; 3] {
    let f = |s: &str| Form::parse_one_form(s, chart).expect("contact form");
    [f("dz - p*dx - q*dy"), f("dp - r*dx - s*dy"), f("dq - s*dx - t*dy")]
}

/// Second-order equation `F(x, y, z, p, q, r, s, t) = 0`.
#[derive(Clone, Debug)]
pub struct PdeSurface {
    pub name: Option<String>,
    pub f: Expr,
    pub chart: Arc<Chart>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
    NonRegular,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub class: PointClass,
    pub delta: f64,
    /// exact discriminant as `num/den` when the equation is polynomial
    pub delta_exact: Option<String>,
    /// inside the parabolic band although the discriminant is not exactly zero
    pub band: bool,
}

impl PdeSurface {
    pub fn parse(text: &str) -> Result<PdeSurface, ContactError> {
        let chart = j2_chart();
        let f = parse_expr(text, &chart)?;
        Ok(PdeSurface { name: None, f, chart })
    }

    pub fn named(mut self, name: &str) -> PdeSurface {
        self.name = Some(name.to_string());
        self
    }

    pub fn gradient_rst(&self) -> [Expr; 3] {
        [self.f.diff("r"), self.f.diff("s"), self.f.diff("t")]
    }

    /// Δ = F_r F_t - F_s²/4.
    pub fn discriminant(&self) -> Expr {
        let [fr, fs, ft] = self.gradient_rst();
        fr.mul(&ft).sub(&fs.pow(2).div(&Expr::int(4)))
    }

    pub fn point(&self, values: [f64; 8]) -> Point {
        Point::new(self.chart.clone(), values.to_vec())
    }

    /// Newton iteration along one coordinate onto `F = 0`.
    pub fn project(&self, pt: &Point, coord: &str) -> Option<Point> {
        let df = self.f.diff(coord);
        let mut p = pt.clone();
        for _ in 0..60 {
            let v = self.f.eval(&p).ok()?;
            if v.abs() < 1e-13 {
                return Some(p);
            }
            let d = df.eval(&p).ok()?;
            if d.abs() < 1e-12 {
                return None;
            }
            let cur = p.get(coord)?;
            p.set(coord, cur - v / d);
        }
        (self.f.eval(&p).ok()?.abs() < 1e-10).then_some(p)
    }

    pub fn classify(&self, pt: &Point) -> Result<Classification, ContactError> {
        self.classify_with_band(pt, PARABOLIC_BAND)
    }

    /// Points with `|Δ| ≤ band · (|F_r F_t| + F_s²)` count as parabolic.
    pub fn classify_with_band(&self, pt: &Point, band: f64) -> Result<Classification, ContactError> {
        let v = self.f.eval(pt)?;
        if v.abs() > 1e-9 {
            return Err(ContactError::OffSurface(v.abs()));
        }
        let [fr, fs, ft] = self.gradient_rst();
        let (gr, gs, gt) = (fr.eval(pt)?, fs.eval(pt)?, ft.eval(pt)?);
        let delta_expr = self.discriminant();
        let delta = delta_expr.eval(pt)?;
        if (gr * gr + gs * gs + gt * gt).sqrt() <= 1e-9 {
            return Ok(Classification { class: PointClass::NonRegular, delta, delta_exact: None, band: false });
        }
        let exact = delta_expr.eval_exact(&|n| pt.get(n).map(rational_from_f64));
        let scale = (gr * gt).abs() + gs * gs;
        let in_band = delta.abs() <= band * scale;
        let sign = match &exact {
            Some(d) => rational_sign(d),
            None if delta > 0.0 => 1,
            None if delta < 0.0 => -1,
            None => 0,
        };
        let class = if in_band || sign == 0 {
            PointClass::Parabolic
        } else if sign < 0 {
            PointClass::Hyperbolic
        } else {
            PointClass::Elliptic
        };
        let band = class == PointClass::Parabolic && sign != 0;
        Ok(Classification { class, delta, delta_exact: exact.as_ref().map(fmt_rational), band })
    }

    /// The induced system on `R`, with complement dx, dy and two of dr, ds, dt
    /// (the one with the largest |F_·| at `near` is dropped).
    pub fn system(&self, near: &Point) -> Result<PfaffianSystem, ContactError> {
        let [fr, fs, ft] = self.gradient_rst();
        let g = [fr.eval(near)?.abs(), fs.eval(near)?.abs(), ft.eval(near)?.abs()];
        if g.iter().all(|v| *v <= 1e-9) {
            return Err(ContactError::NonRegular);
        }
        let drop = (0..3).fold(0, |b, i| if g[i] > g[b] { i } else { b });
        let keep: Vec<&str> = ["r", "s", "t"].iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, n)| *n).collect();
        let ch = &self.chart;
        let complement = vec![
            Form::d_coord(ch, "x"),
            Form::d_coord(ch, "y"),
            Form::d_coord(ch, keep[0]),
            Form::d_coord(ch, keep[1]),
        ];
        Ok(PfaffianSystem {
            name: self.name.clone().unwrap_or_else(|| format!("{{{} = 0}}", self.f)),
            chart: ch.clone(),
            level_sets: vec![self.f.clone()],
            generators: contact_system_j2(ch).to_vec(),
            generator_labels: vec!["w0".into(), "w1".into(), "w2".into()],
            complement,
            complement_labels: vec!["dx".into(), "dy".into(), format!("d{}", keep[0]), format!("d{}", keep[1])],
        })
    }

    /// Pointwise sample of `D = C²|_R` at an on-surface regular point.
    pub fn induced_distribution(&self, pt: &Point) -> Result<DistributionSample, ContactError> {
        let v = self.f.eval(pt)?;
        if v.abs() > 1e-9 {
            return Err(ContactError::OffSurface(v.abs()));
        }
        Ok(self.system(pt)?.sample(pt)?)
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.denom() == &1.into() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// The discriminant as an exact rational, when the equation is polynomial.
pub fn exact_discriminant(pde: &PdeSurface, pt: &Point) -> Option<BigRational> {
    pde.discriminant().eval_exact(&|n| pt.get(n).map(rational_from_f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rank4Kind {
    HyperbolicType,
    ParabolicType,
    EllipticType,
    Degenerate,
}

impl Rank4Kind {
    pub fn matches(self, c: PointClass) -> bool {
        matches!(
            (self, c),
            (Rank4Kind::HyperbolicType, PointClass::Hyperbolic)
                | (Rank4Kind::ParabolicType, PointClass::Parabolic)
                | (Rank4Kind::EllipticType, PointClass::Elliptic)
        )
    }
}

/// Type of a rank-4 distribution read off the Pfaffian pencil.
#[derive(Clone, Debug, Serialize)]
pub struct Rank4Type {
    pub kind: Rank4Kind,
    /// Pf(λ A1 + μ A2) = alpha λ² + beta λμ + gamma μ²
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub discriminant: f64,
    #[serde(skip)]
    pub pencil: [DMatrix<f64>; 2],
    /// rows: weights of the generators in the two pencil forms
    #[serde(skip)]
    pub weights: DMatrix<f64>,
}

fn upper6(m: &DMatrix<f64>) -> [f64; 6] {
    [m[(0, 1)], m[(0, 2)], m[(0, 3)], m[(1, 2)], m[(1, 3)], m[(2, 3)]]
}

/// Pencil coefficients of two 4x4 antisymmetric matrices.
pub fn pencil_coefficients(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> (f64, f64, f64) {
    let alpha = linalg::pfaffian4(a1);
    let gamma = linalg::pfaffian4(a2);
    let beta = linalg::pfaffian4(&(a1 + a2)) - alpha - gamma;
    (alpha, beta, gamma)
}

/// Classifies a pencil by the sign of its discriminant.
pub fn pencil_kind(alpha: f64, beta: f64, gamma: f64) -> Rank4Kind {
    let size = alpha.abs() + beta.abs() + gamma.abs();
    if size <= 1e-9 {
        return Rank4Kind::Degenerate;
    }
    let disc = beta * beta - 4.0 * alpha * gamma;
    if disc.abs() <= 1e-9 * size * size {
        Rank4Kind::ParabolicType
    } else if disc > 0.0 {
        Rank4Kind::HyperbolicType
    } else {
        Rank4Kind::EllipticType
    }
}

/// Type of a rank-4 sample: the two dominant directions among the restricted
/// dθ's (top left singular vectors) span the pencil.
pub fn rank4_type(sample: &DistributionSample) -> Result<Rank4Type, ContactError> {
    if sample.rank() != 4 {
        return Err(ContactError::NotRank4(sample.rank()));
    }
    let k = sample.dgen.len();
    let rows = DMatrix::from_fn(k, 6, |i, j| upper6(&sample.dgen[i])[j]);
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(ContactError::DegeneratePencil);
    }
    let svd = rows.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|a, b| s[*b].partial_cmp(&s[*a]).unwrap());
    if order.len() < 2 || s[order[0]] <= 1e-12 || s[order[1]] <= 1e-9 * s[order[0]] {
        return Err(ContactError::DegeneratePencil);
    }
    let mut weights = DMatrix::zeros(2, k);
    let mut pencil = [DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)];
    for (slot, idx) in order.iter().take(2).enumerate() {
        for i in 0..k {
            weights[(slot, i)] = u[(i, *idx)];
            pencil[slot] += &sample.dgen[i] * u[(i, *idx)];
        }
    }
    let (alpha, beta, gamma) = pencil_coefficients(&pencil[0], &pencil[1]);
    let kind = pencil_kind(alpha, beta, gamma);
    Ok(Rank4Type { kind, alpha, beta, gamma, discriminant: beta * beta - 4.0 * alpha * gamma, pencil, weights })
}

/// Pointwise coframe of `D(w)` realizing the normal form of the structure equations.
#[derive(Clone, Debug)]
pub struct AdaptedCoframe {
    pub kind: Rank4Kind,
    pub labels: [&'static str; 4],
    /// rows: covectors on `D(w)` in sample-basis coordinates
    pub coframe: DMatrix<f64>,
    /// rows: weights of the generators in the two adapted θ's
    pub theta: DMatrix<f64>,
    /// the two dθ's in the dual basis of `coframe`
    pub normal_form: [DMatrix<f64>; 2],
    pub residual: f64,
}

fn wedge2(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() - b * a.transpose()
}

/// Expected matrices of the two dθ's in the basis dual to the adapted coframe.
pub fn normal_form_pattern(kind: Rank4Kind) -> [DMatrix<f64>; 2] {
    let e = |i: usize| {
        let mut v = DVector::zeros(4);
        v[i] = 1.0;
        v
    };
    match kind {
        // (ω1, ω2, π11, π22)
        Rank4Kind::HyperbolicType => [wedge2(&e(0), &e(2)), wedge2(&e(1), &e(3))],
        // (ω1, ω2, π12, π22)
        Rank4Kind::ParabolicType => [wedge2(&e(1), &e(2)), wedge2(&e(0), &e(2)) + wedge2(&e(1), &e(3))],
        // (ω1, ω2, π11, π12)
        Rank4Kind::EllipticType => [
            wedge2(&e(0), &e(2)) + wedge2(&e(1), &e(3)),
            wedge2(&e(0), &e(3)) - wedge2(&e(1), &e(2)),
        ],
        Rank4Kind::Degenerate => [DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)],
    }
}

/// Writes a rank-2 antisymmetric `m` as `u ∧ v` with `u` annihilating the columns of `vert`.
fn split_rank2(m: &DMatrix<f64>, vert: &DMatrix<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let rows = linalg::column_space(&m.transpose(), 1e-8);
    if rows.ncols() != 2 {
        return None;
    }
    let svd = (vert.transpose() * &rows).svd(false, true);
    let vt = svd.v_t?;
    let i = (0..svd.singular_values.len())
        .fold(0, |b, i| if svd.singular_values[i] < svd.singular_values[b] { i } else { b });
    let c = vt.row(i).transpose();
    let u = &rows * &c;
    let b = &rows * DVector::from_vec(vec![-c[1], c[0]]);
    let w = wedge2(&u, &b);
    let (pi, pj) = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .fold((0, 1), |best, ij| if w[ij].abs() > w[best].abs() { ij } else { best });
    Some((u, b * (m[(pi, pj)] / w[(pi, pj)])))
}

fn complex_split(
    m: &DMatrix<Complex64>,
    vert: &DMatrix<f64>,
) -> Option<(DVector<Complex64>, DVector<Complex64>)> {
    let svd = m.transpose().svd(true, false);
    let u = svd.u?;
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|a, b| s[*b].partial_cmp(&s[*a]).unwrap());
    let r0 = u.column(order[0]).into_owned();
    let r1 = u.column(order[1]).into_owned();
    let vc = vert.map(|x| Complex64::new(x, 0.0));
    // a r0 + b r1 annihilating the vertical plane
    let sys = DMatrix::from_fn(vert.ncols(), 2, |i, j| {
        let r = if j == 0 { &r0 } else { &r1 };
        (vc.column(i).transpose() * r)[0]
    });
    let svd2 = sys.svd(false, true);
    let vt = svd2.v_t?;
    let i = (0..svd2.singular_values.len())
        .fold(0, |b, i| if svd2.singular_values[i] < svd2.singular_values[b] { i } else { b });
    let c = vt.row(i).adjoint();
    let uu = &r0 * c[0] + &r1 * c[1];
    let other = if (r0.dotc(&uu)).norm() > 0.9 * uu.norm() { r1.clone() } else { r0.clone() };
    let b = &other - &uu * (uu.dotc(&other) / uu.norm_squared());
    let w = &uu * b.transpose() - &b * uu.transpose();
    let (pi, pj) = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .fold((0, 1), |best, ij| if w[ij].norm() > w[best].norm() { ij } else { best });
    let scale = m[(pi, pj)] / w[(pi, pj)];
    Some((uu, b * scale))
}

fn finish(
    kind: Rank4Kind,
    labels: [&'static str; 4],
    coframe: DMatrix<f64>,
    theta: DMatrix<f64>,
    forms: [DMatrix<f64>; 2],
) -> Result<AdaptedCoframe, ContactError> {
    let condition = {
        let s = linalg::singular_values(&coframe);
        let lo = s.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        let hi = s.iter().fold(0.0f64, |a, v| a.max(*v));
        if lo > 0.0 { hi / lo } else { f64::INFINITY }
    };
    let Some(dual) = coframe.clone().try_inverse() else {
        return Err(ContactError::Split { residual: f64::INFINITY, condition });
    };
    let nf = [dual.transpose() * &forms[0] * &dual, dual.transpose() * &forms[1] * &dual];
    let pattern = normal_form_pattern(kind);
    let residual = (&nf[0] - &pattern[0]).abs().max().max((&nf[1] - &pattern[1]).abs().max());
    if !(residual < 1e-9) {
        return Err(ContactError::Split { residual, condition });
    }
    Ok(AdaptedCoframe { kind, labels, coframe, theta, normal_form: nf, residual })
}

/// Builds ω1, ω2 and the π's at the sample point; the ω's annihilate the vertical plane.
pub fn adapted_coframe(sample: &DistributionSample) -> Result<AdaptedCoframe, ContactError> {
    let ty = rank4_type(sample)?;
    let vert = sample.vertical();
    let [a1, a2] = ty.pencil.clone();
    let (al, be, ga) = (ty.alpha, ty.beta, ty.gamma);
    match ty.kind {
        Rank4Kind::Degenerate => Err(ContactError::DegeneratePencil),
        Rank4Kind::HyperbolicType => {
            let sq = (be * be - 4.0 * al * ga).sqrt();
            // homogeneous roots (λ, μ) of αλ² + βλμ + γμ²
            let q = -0.5 * (be + if be >= 0.0 { sq } else { -sq });
            let roots: [(f64, f64); 2] = [(q, al), (ga, q)];
            let mut cov = Vec::new();
            let mut theta = DMatrix::zeros(2, ty.weights.ncols());
            let mut forms = [DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)];
            for (k, (l, m)) in roots.iter().enumerate() {
                let a = &a1 * *l + &a2 * *m;
                let (u, v) = split_rank2(&a, &vert).ok_or(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY })?;
                cov.push((u, v));
                for j in 0..theta.ncols() {
                    theta[(k, j)] = l * ty.weights[(0, j)] + m * ty.weights[(1, j)];
                }
                forms[k] = a;
            }
            let coframe = DMatrix::from_rows(&[
                cov[0].0.transpose(),
                cov[1].0.transpose(),
                cov[0].1.transpose(),
                cov[1].1.transpose(),
            ]);
            finish(ty.kind, ["omega1", "omega2", "pi11", "pi22"], coframe, theta, forms)
        }
        Rank4Kind::EllipticType => {
            // complex root λ of αλ² + βλ + γ (μ = 1), or of γμ² + βμ + α (λ = 1)
            let sq = Complex64::new(be * be - 4.0 * al * ga, 0.0).sqrt();
            let (l, m) = if al.abs() >= ga.abs() {
                ((Complex64::new(-be, 0.0) + sq) / (2.0 * al), Complex64::new(1.0, 0.0))
            } else {
                (Complex64::new(1.0, 0.0), (Complex64::new(-be, 0.0) + sq) / (2.0 * ga))
            };
            let c = a1.map(|x| Complex64::new(x, 0.0)) * l + a2.map(|x| Complex64::new(x, 0.0)) * m;
            let (u, v) = complex_split(&c, &vert).ok_or(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY })?;
            let coframe = DMatrix::from_rows(&[
                u.map(|z| z.re).transpose(),
                u.map(|z| -z.im).transpose(),
                v.map(|z| z.re).transpose(),
                v.map(|z| z.im).transpose(),
            ]);
            let mut theta = DMatrix::zeros(2, ty.weights.ncols());
            for j in 0..theta.ncols() {
                let w = l * ty.weights[(0, j)] + m * ty.weights[(1, j)];
                theta[(0, j)] = w.re;
                theta[(1, j)] = w.im;
            }
            let forms = [c.map(|z| z.re), c.map(|z| z.im)];
            finish(ty.kind, ["omega1", "omega2", "pi11", "pi12"], coframe, theta, forms)
        }
        Rank4Kind::ParabolicType => {
            let (l, m) = if al.abs() >= ga.abs() { (-be / (2.0 * al), 1.0) } else { (1.0, -be / (2.0 * ga)) };
            let n = (l * l + m * m).sqrt();
            let (l, m) = (l / n, m / n);
            let a = &a1 * l + &a2 * m;
            let b = &a1 * (-m) + &a2 * l;
            let kernel = linalg::null_space(&a, 1e-7);
            if kernel.ncols() != 2 || vert.ncols() != 2 {
                return Err(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY });
            }
            // k2 spans K ∩ V, k1 completes K
            let both = DMatrix::from_columns(&[
                kernel.column(0).into_owned(),
                kernel.column(1).into_owned(),
                -vert.column(0).into_owned(),
                -vert.column(1).into_owned(),
            ]);
            let inter = linalg::null_space(&both, 1e-7);
            if inter.ncols() == 0 {
                return Err(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY });
            }
            let cvec = inter.column(inter.ncols() - 1);
            let k2: DVector<f64> = &kernel * DVector::from_vec(vec![cvec[0], cvec[1]]);
            let k2 = &k2 / k2.norm();
            let k1 = {
                let c0 = kernel.column(0).into_owned();
                let c1 = kernel.column(1).into_owned();
                let pick = if c0.dot(&k2).abs() < c1.dot(&k2).abs() { c0 } else { c1 };
                &pick - &k2 * pick.dot(&k2)
            };
            let e1 = &k1 / k1.norm();
            let e22 = k2.clone();
            let pi12: DVector<f64> = b.transpose() * &e1;
            let omega2: DVector<f64> = -(b.transpose() * &e22);
            // E12 in V with π12(E12) = 1
            let vv = vert.column(0).into_owned();
            let vw = vert.column(1).into_owned();
            let mut e12 = if pi12.dot(&vv).abs() >= pi12.dot(&vw).abs() { vv } else { vw };
            e12 /= pi12.dot(&e12);
            // E2: ω2(E2) = 1, π12(E2) = 0, B(E2, E12) = 0
            let mut e2 = omega2.clone() / omega2.norm_squared();
            e2 -= &e12 * pi12.dot(&e2);
            e2 -= &e1 * (e2.dot(&(&b * &e12)));
            let c = e2.dot(&(&a * &e12));
            if c.abs() < 1e-12 {
                return Err(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY });
            }
            let dual = DMatrix::from_columns(&[e1, e2, e12, e22]);
            let coframe = dual.try_inverse().ok_or(ContactError::Split { residual: f64::INFINITY, condition: f64::INFINITY })?;
            let mut theta = DMatrix::zeros(2, ty.weights.ncols());
            for j in 0..theta.ncols() {
                theta[(0, j)] = (l * ty.weights[(0, j)] + m * ty.weights[(1, j)]) / c;
                theta[(1, j)] = -m * ty.weights[(0, j)] + l * ty.weights[(1, j)];
            }
            finish(ty.kind, ["omega1", "omega2", "pi12", "pi22"], coframe, theta, [a / c, b])
        }
    }
}

/// Dimension of the Cauchy characteristic space of `D` at the sample point.
pub fn cauchy_characteristic_dim(sample: &DistributionSample) -> usize {
    let r = sample.rank();
    let blocks: Vec<&DMatrix<f64>> = sample.dgen.iter().collect();
    let stacked = DMatrix::from_fn(r * blocks.len(), r, |i, j| blocks[i / r][(i % r, j)]);
    linalg::null_space(&stacked, RANK_TOL).ncols()
}
