//! Tabulated univariate functions, evaluated through a natural cubic spline.

use std::fmt;

/// Natural cubic spline through strictly increasing abscissae.
#[derive(Clone, PartialEq)]
pub struct Table {
    name: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl fmt::Debug for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Table({}, {} knots)", self.name, self.xs.len())
    }
}

impl Table {
    pub fn new(name: &str, xs: Vec<f64>, ys: Vec<f64>) -> Result<Table, String> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err("a table needs at least 3 samples with matching lengths".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err("table abscissae must be strictly increasing".into());
        }
        let n = xs.len();
        let mut m = vec![0.0; n];
        // tridiagonal solve for the interior second derivatives
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Table { name: name.to_string(), xs, ys, m })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value of the `order`-th derivative at `x` (orders above 3 vanish).
    pub fn eval(&self, order: u8, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }
}
