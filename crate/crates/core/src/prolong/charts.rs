//! The six Grassmann charts of the fiber for each normal form.
//!
//! A chart `U_ab` is labelled by two adapted coframe forms `a, b` that stay
//! independent on the plane. The remaining two forms `c, d` (in coframe order)
//! restrict as `c = p11 a + p12 b`, `d = p21 a + p22 b`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ProlongError;
use crate::contact::Rank4Kind;
use crate::expr::{parse_expr, Chart, Expr};

pub const P_NAMES: [&str; 4] = ["p11", "p12", "p21", "p22"];

/// Chart of the four fiber coordinates `p11, p12, p21, p22`.
pub fn p_chart() -> Arc<Chart> {
    static CHART: OnceLock<Arc<Chart>> = OnceLock::new();
    CHART.get_or_init(|| Arc::new(Chart::new(&P_NAMES).unwrap())).clone()
}

pub fn coframe_labels(kind: Rank4Kind) -> Option<[&'static str; 4]> {
    match kind {
        Rank4Kind::HyperbolicType => Some(["omega1", "omega2", "pi11", "pi22"]),
        Rank4Kind::ParabolicType => Some(["omega1", "omega2", "pi12", "pi22"]),
        Rank4Kind::EllipticType => Some(["omega1", "omega2", "pi11", "pi12"]),
        Rank4Kind::Degenerate => None,
    }
}

/// A chart `U_ab` with `a < b` indexing the adapted coframe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChartId {
    pub a: usize,
    pub b: usize,
}

const NUMERALS: [&str; 6] = ["I", "II", "III", "IV", "V", "VI"];

impl ChartId {
    pub const ALL: [ChartId; 6] = [
        ChartId { a: 0, b: 1 },
        ChartId { a: 0, b: 2 },
        ChartId { a: 0, b: 3 },
        ChartId { a: 1, b: 2 },
        ChartId { a: 1, b: 3 },
        ChartId { a: 2, b: 3 },
    ];

    pub fn new(a: usize, b: usize) -> Option<ChartId> {
        (a < b && b < 4).then_some(ChartId { a, b })
    }

    pub fn position(self) -> usize {
        ChartId::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn numeral(self) -> &'static str {
        NUMERALS[self.position()]
    }

    /// The two remaining coframe indices, in order.
    pub fn rest(self) -> (usize, usize) {
        let mut r = (0..4).filter(|i| *i != self.a && *i != self.b);
        (r.next().unwrap(), r.next().unwrap())
    }

    pub fn label(self, kind: Rank4Kind) -> String {
        match coframe_labels(kind) {
            Some(l) => format!("{}_{}", l[self.a], l[self.b]),
            None => self.numeral().to_string(),
        }
    }

    /// Accepts a roman numeral (`III`) or a label such as `omega1_pi22`.
    pub fn parse(text: &str, kind: Rank4Kind) -> Result<ChartId, ProlongError> {
        if let Some(i) = NUMERALS.iter().position(|n| *n == text) {
            return Ok(ChartId::ALL[i]);
        }
        ChartId::ALL
            .iter()
            .copied()
            .find(|c| c.label(kind) == text)
            .ok_or_else(|| ProlongError::UnknownChart(text.to_string()))
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.numeral())
    }
}

/// Defining functions of the integral planes inside one chart.
#[derive(Clone, Debug)]
pub struct GrassmannChartModel {
    pub kind: Rank4Kind,
    pub chart: ChartId,
    /// `None` when the chart contains no integral plane
    pub f: Option<[Expr; 2]>,
}

impl GrassmannChartModel {
    pub fn is_empty(&self) -> bool {
        self.f.is_none()
    }

    pub fn label(&self) -> String {
        self.chart.label(self.kind)
    }

    /// Values `(f1, f2)` at chart coordinates `p`.
    pub fn eval(&self, p: &[f64; 4]) -> Option<[f64; 2]> {
        let env: [(&str, f64); 4] = [("p11", p[0]), ("p12", p[1]), ("p21", p[2]), ("p22", p[3])];
        let f = self.f.as_ref()?;
        Some([f[0].eval(&env).ok()?, f[1].eval(&env).ok()?])
    }

    pub fn report(&self) -> ChartReport {
        ChartReport {
            id: self.chart.numeral().to_string(),
            label: self.label(),
            f1: self.f.as_ref().map(|f| f[0].to_string()),
            f2: self.f.as_ref().map(|f| f[1].to_string()),
            empty: self.is_empty(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartReport {
    pub id: String,
    pub label: String,
    pub f1: Option<String>,
    pub f2: Option<String>,
    pub empty: bool,
}

const HYPERBOLIC: [Option<(&str, &str)>; 6] = [
    Some(("p12", "p21")),
    None,
    Some(("p22", "p11")),
    Some(("p11", "p22")),
    None,
    Some(("p12", "p21")),
];

const PARABOLIC: [Option<(&str, &str)>; 6] = [
    Some(("p11", "p12 - p21")),
    Some(("p11", "1 + p11*p22 - p12*p21")),
    Some(("p11*p22 - p12*p21", "p11 + p22")),
    None,
    Some(("p22", "1 + p11*p22 - p12*p21")),
    Some(("p22", "p21 - p12")),
];

const ELLIPTIC: [Option<(&str, &str)>; 6] = [
    Some(("p12 - p21", "p11 + p22")),
    Some(("1 + p11*p22 - p12*p21", "-p11 + p22")),
    Some(("p11 + p22", "1 - p11*p22 + p12*p21")),
    Some(("p11 + p22", "p11*p22 - p12*p21 - 1")),
    Some(("1 + p11*p22 - p12*p21", "p11 - p22")),
    Some(("-p12 + p21", "p11 + p22")),
];

pub fn chart_defining_functions(kind: Rank4Kind, chart: ChartId) -> Result<GrassmannChartModel, ProlongError> {
    let table = match kind {
        Rank4Kind::HyperbolicType => &HYPERBOLIC,
        Rank4Kind::ParabolicType => &PARABOLIC,
        Rank4Kind::EllipticType => &ELLIPTIC,
        Rank4Kind::Degenerate => return Err(ProlongError::UnknownChart(chart.numeral().into())),
    };
    let ch = p_chart();
    let f = table[chart.position()].map(|(a, b)| [parse_expr(a, &ch).unwrap(), parse_expr(b, &ch).unwrap()]);
    Ok(GrassmannChartModel { kind, chart, f })
}

/// Charts whose integral planes cover the whole fiber.
pub fn covering_charts(kind: Rank4Kind) -> Vec<ChartId> {
    let pick = |v: &[(usize, usize)]| v.iter().map(|&(a, b)| ChartId { a, b }).collect();
    match kind {
        Rank4Kind::HyperbolicType => pick(&[(0, 1), (0, 3), (1, 2), (2, 3)]),
        Rank4Kind::ParabolicType => pick(&[(0, 1), (0, 3), (2, 3)]),
        Rank4Kind::EllipticType => pick(&[(0, 1), (2, 3)]),
        Rank4Kind::Degenerate => Vec::new(),
    }
}

/// Two vectors spanning the chart point `p`, in coordinates dual to the coframe.
pub fn chart_plane(chart: ChartId, p: &[f64; 4]) -> DMatrix<f64> {
    let (c, d) = chart.rest();
    let mut m = DMatrix::zeros(4, 2);
    m[(chart.a, 0)] = 1.0;
    m[(chart.b, 1)] = 1.0;
    m[(c, 0)] = p[0];
    m[(c, 1)] = p[1];
    m[(d, 0)] = p[2];
    m[(d, 1)] = p[3];
    m
}

/// Chart coordinates of a plane whose columns are given by their coframe values.
/// `None` if `a, b` are (numerically) dependent on the plane.
pub fn chart_coordinates(chart: ChartId, values: &DMatrix<f64>) -> Option<[f64; 4]> {
    let s = DMatrix::from_fn(2, 2, |i, j| values[(if i == 0 { chart.a } else { chart.b }, j)]);
    let size = values.abs().max();
    if size == 0.0 || s.determinant().abs() <= 1e-12 * size * size {
        return None;
    }
    let w = values * s.try_inverse()?;
    let (c, d) = chart.rest();
    Some([w[(c, 0)], w[(c, 1)], w[(d, 0)], w[(d, 1)]])
}

/// Plane of chart point `p` in the basis whose dual is `coframe` (rows).
pub fn plane_in_basis(coframe: &DMatrix<f64>, chart: ChartId, p: &[f64; 4]) -> Option<DMatrix<f64>> {
    Some(coframe.clone().try_inverse()? * chart_plane(chart, p))
}

/// Chart coordinates of a plane given in a basis, using the coframe rows.
pub fn coordinates_in_basis(coframe: &DMatrix<f64>, chart: ChartId, plane: &DMatrix<f64>) -> Option<[f64; 4]> {
    chart_coordinates(chart, &(coframe * plane))
}

/// Change of chart coordinates on the overlap.
pub fn chart_transition(from: ChartId, to: ChartId, p: &[f64; 4]) -> Result<[f64; 4], ProlongError> {
    chart_coordinates(to, &chart_plane(from, p)).ok_or(ProlongError::Overlap)
}

/// Hyperbolic fiber points of `U_{ω1ω2}` (where `p12 = p21 = 0`) in the
/// coordinates `(p12, p21)` of `U_{ω1π22}`.
pub fn hyperbolic_transition(p11: f64, p22: f64) -> Result<(f64, f64), ProlongError> {
    if p22 == 0.0 || !(1.0 / p22).is_finite() {
        return Err(ProlongError::Overlap);
    }
    let q = chart_transition(ChartId { a: 0, b: 1 }, ChartId { a: 0, b: 3 }, &[p11, 0.0, 0.0, p22])?;
    Ok((q[1], q[2]))
}

/// Inverse of [`hyperbolic_transition`].
pub fn hyperbolic_transition_back(p12: f64, p21: f64) -> Result<(f64, f64), ProlongError> {
    if p12 == 0.0 {
        return Err(ProlongError::Overlap);
    }
    let q = chart_transition(ChartId { a: 0, b: 3 }, ChartId { a: 0, b: 1 }, &[0.0, p12, p21, 0.0])?;
    Ok((q[0], q[3]))
}

/// Coordinates of a vector in the dual basis of `coframe`.
pub fn coframe_values(coframe: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    coframe * v
}
