//! Rank-2 prolongation of a rank-4 Pfaffian system, built symbolically on a
//! chart of the fiber so that it can be iterated.
//!
//! With complement forms `φ_α, φ_β, φ_γ, φ_δ` of `D`, the chart `(α, β)` writes
//! integral planes as `φ_γ = P11 φ_α + P12 φ_β`, `φ_δ = P21 φ_α + P22 φ_β`.
//! The integrality conditions are solved for two of the `P`s; the other two
//! become new coordinates.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::charts::{chart_coordinates, chart_plane, ChartId};
use super::{fiber_topology, is_singular_point, plucker_fiber, stratify, ProlongError, Stratum};
use crate::contact::{rank4_type, Rank4Kind};
use crate::expr::{Expr, Point};
use crate::forms::{Form, VectorField};
use crate::system::{DistributionSample, PfaffianSystem};

/// Value of a 2-form on two vector fields.
pub fn eval_pair(form: &Form, x: &VectorField, y: &VectorField) -> Expr {
    debug_assert_eq!(form.degree(), 2);
    let mut terms = Vec::new();
    for (idx, c) in form.terms() {
        let (i, j) = (idx[0], idx[1]);
        let m = x.comps[i].mul(&y.comps[j]).sub(&x.comps[j].mul(&y.comps[i]));
        if !m.is_zero_const() {
            terms.push(c.mul(&m));
        }
    }
    Expr::sum(terms)
}

/// A prolonged system together with the data of its fiber chart.
#[derive(Clone, Debug)]
pub struct ProlongedSystem {
    pub base: PfaffianSystem,
    pub system: PfaffianSystem,
    pub chart: ChartId,
    /// `P11, P12, P21, P22` as expressions on the prolonged chart
    pub p: [Expr; 4],
    /// indices (into `p`) of the two new coordinates
    pub free: [usize; 2],
    pub free_names: [String; 2],
}

/// How a point of the fiber is specified.
#[derive(Clone, Debug)]
pub enum FiberPoint {
    /// values of the two free fiber coordinates
    Free([f64; 2]),
    /// an integral plane in sample-basis coordinates (columns)
    Plane(DMatrix<f64>),
}

fn level_suffix(system: &PfaffianSystem) -> usize {
    system
        .chart
        .names()
        .iter()
        .filter_map(|n| {
            ["p11_", "p12_", "p21_", "p22_"].iter().find_map(|pre| n.strip_prefix(pre)).and_then(|k| k.parse::<usize>().ok())
        })
        .max()
        .unwrap_or(0)
        + 1
}

/// Builds the prolongation of `base` on the chart `(a, b)` of its complement,
/// linearized at `at`.
pub fn prolong_system(base: &PfaffianSystem, at: &Point, chart: ChartId) -> Result<ProlongedSystem, ProlongError> {
    if base.rank() != 4 || base.complement.len() != 4 {
        return Err(crate::contact::ContactError::NotRank4(base.rank()).into());
    }
    let frames = base.frames(at)?;
    let x = &frames.d_frame;
    let (al, be) = (chart.a, chart.b);
    let (ga, de) = chart.rest();
    let k = level_suffix(base);
    let names: [String; 4] = ["11", "12", "21", "22"].map(|s| format!("p{s}_{k}"));

    // dθ(Yα, Yβ) = c_αβ + P11 c_γβ + P12 c_αγ + P21 c_δβ + P22 c_αδ + (P11 P22 − P12 P21) c_γδ
    let mut rows: Vec<([Expr; 4], Expr)> = Vec::new();
    for g in &base.generators {
        let dg = g.ext_d();
        let c = |i: usize, j: usize| eval_pair(&dg, &x[i], &x[j]);
        let quad = c(ga, de);
        if !quad.is_zero_const() {
            // the quadratic coefficient must vanish near `at`, not only at it
            let worst = (0..3)
                .map(|s| {
                    let mut probe = at.clone();
                    for (i, v) in probe.values.iter_mut().enumerate() {
                        *v += 1e-3 * (((i * 7 + s * 3) % 5) as f64 - 2.0);
                    }
                    quad.eval(&probe).map(f64::abs).unwrap_or(0.0)
                })
                .fold(quad.eval(at).map(f64::abs).unwrap_or(f64::INFINITY), f64::max);
            if worst > 1e-9 {
                return Err(ProlongError::NonlinearChart);
            }
        }
        rows.push(([c(ga, be), c(al, ga), c(de, be), c(al, de)], c(al, be)));
    }

    // choose equations and unknowns by the largest 2x2 minor at `at` (ties: last)
    let vals: Vec<[f64; 4]> = rows
        .iter()
        .map(|(a, _)| {
            let mut v = [0.0; 4];
            for j in 0..4 {
                v[j] = a[j].eval(at).unwrap_or(0.0);
            }
            v
        })
        .collect();
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    for r1 in 0..rows.len() {
        for r2 in r1 + 1..rows.len() {
            for j1 in 0..4 {
                for j2 in j1 + 1..4 {
                    let d = (vals[r1][j1] * vals[r2][j2] - vals[r1][j2] * vals[r2][j1]).abs();
                    if best.map_or(true, |b| d >= b.0 - 1e-12 * b.0.max(1.0)) {
                        best = Some((d, r1, r2, j1, j2));
                    }
                }
            }
        }
    }
    let (det_at, r1, r2, j1, j2) = best.ok_or(ProlongError::Unsolvable(0.0))?;
    if det_at < 1e-9 {
        return Err(ProlongError::Unsolvable(det_at));
    }
    let free: Vec<usize> = (0..4).filter(|j| *j != j1 && *j != j2).collect();
    let free = [free[0], free[1]];
    let free_vars = [Expr::var(&names[free[0]]), Expr::var(&names[free[1]])];
    let rhs = |r: usize| {
        let (a, c) = &rows[r];
        c.add(&a[free[0]].mul(&free_vars[0])).add(&a[free[1]].mul(&free_vars[1])).neg()
    };
    let (a11, a12, a21, a22) = (&rows[r1].0[j1], &rows[r1].0[j2], &rows[r2].0[j1], &rows[r2].0[j2]);
    let (b1, b2) = (rhs(r1), rhs(r2));
    let det = a11.mul(a22).sub(&a12.mul(a21));
    let s1 = b1.mul(a22).sub(&a12.mul(&b2)).div(&det);
    let s2 = a11.mul(&b2).sub(&a21.mul(&b1)).div(&det);
    let mut p: [Expr; 4] = std::array::from_fn(|j| Expr::var(&names[j]));
    p[j1] = s1;
    p[j2] = s2;

    let chart_new = Arc::new(base.chart.extended(&[&names[free[0]], &names[free[1]]]).expect("fresh level suffix"));
    let lift = |f: &Form| f.lift(&chart_new);
    let comp: Vec<Form> = base.complement.iter().map(lift).collect();
    let mut generators: Vec<Form> = base.generators.iter().map(lift).collect();
    generators.push(comp[ga].sub(&comp[al].scale(&p[0])).sub(&comp[be].scale(&p[1])));
    generators.push(comp[de].sub(&comp[al].scale(&p[2])).sub(&comp[be].scale(&p[3])));
    let mut generator_labels = base.generator_labels.clone();
    generator_labels.push(format!("theta_{}_{k}", base.complement_labels[ga]));
    generator_labels.push(format!("theta_{}_{k}", base.complement_labels[de]));
    let complement = vec![
        comp[al].clone(),
        comp[be].clone(),
        Form::d_coord(&chart_new, &names[free[0]]),
        Form::d_coord(&chart_new, &names[free[1]]),
    ];
    let complement_labels = vec![
        base.complement_labels[al].clone(),
        base.complement_labels[be].clone(),
        format!("d{}", names[free[0]]),
        format!("d{}", names[free[1]]),
    ];
    let system = PfaffianSystem {
        name: format!("{}^", base.name),
        chart: chart_new,
        level_sets: base.level_sets.clone(),
        generators,
        generator_labels,
        complement,
        complement_labels,
    };
    Ok(ProlongedSystem {
        base: base.clone(),
        system,
        chart,
        p,
        free,
        free_names: [names[free[0]].clone(), names[free[1]].clone()],
    })
}

impl ProlongedSystem {
    /// The point over `base_pt` with fiber coordinates `free`.
    pub fn lift(&self, base_pt: &Point, free: [f64; 2]) -> Point {
        let mut values = base_pt.values.clone();
        values.extend(free);
        Point::new(self.system.chart.clone(), values)
    }

    /// All four chart coordinates at a lifted point.
    pub fn chart_values(&self, pt: &Point) -> Result<[f64; 4], ProlongError> {
        let mut out = [0.0; 4];
        for (j, e) in self.p.iter().enumerate() {
            out[j] = e.eval(pt).map_err(|e| ProlongError::System(e.into()))?;
        }
        Ok(out)
    }

    /// The plane of a fiber point, in the base sample basis (dual to the base complement).
    pub fn plane(&self, base_pt: &Point, free: [f64; 2]) -> Result<DMatrix<f64>, ProlongError> {
        Ok(chart_plane(self.chart, &self.chart_values(&self.lift(base_pt, free))?))
    }

    /// Free coordinates of a plane given in the base sample basis.
    pub fn free_of_plane(&self, plane: &DMatrix<f64>) -> Option<[f64; 2]> {
        let c = chart_coordinates(self.chart, plane)?;
        Some([c[self.free[0]], c[self.free[1]]])
    }
}

/// Prolongs at one fiber point and returns the prolonged system with its sample there.
pub fn prolong_rank4(
    base: &PfaffianSystem,
    at: &Point,
    chart: ChartId,
    fiber: &FiberPoint,
) -> Result<(ProlongedSystem, DistributionSample), ProlongError> {
    let sample = base.sample(at)?;
    let pf = plucker_fiber(&sample)?;
    let topo = fiber_topology(&pf);
    if let FiberPoint::Plane(plane) = fiber {
        let res = pf.integrality_residual(plane);
        if !(res < 1e-9) {
            return Err(ProlongError::NotIntegral(res));
        }
        if is_singular_point(&pf, &topo, plane) {
            return Err(ProlongError::SingularPoint);
        }
    }
    let pro = prolong_system(base, at, chart)?;
    let free = match fiber {
        FiberPoint::Free(v) => *v,
        FiberPoint::Plane(plane) => pro.free_of_plane(plane).ok_or(ProlongError::OutsideChart)?,
    };
    let plane = pro.plane(at, free)?;
    if is_singular_point(&pf, &topo, &plane) {
        return Err(ProlongError::SingularPoint);
    }
    let res = pf.integrality_residual(&plane);
    if !(res < 1e-9) {
        return Err(ProlongError::NotIntegral(res));
    }
    let new_sample = pro.system.sample(&pro.lift(at, free))?;
    Ok((pro, new_sample))
}

/// One stage of a prolongation tower.
#[derive(Clone, Debug, Serialize)]
pub struct TowerLevel {
    pub level: usize,
    pub ambient_dim: usize,
    pub kind: Rank4Kind,
    pub stratum: Option<Stratum>,
    pub coordinates: Vec<String>,
    pub point: Vec<f64>,
}

/// Prolongs `k` times on the chart `chart`, at random fiber points with free
/// coordinates in `[-1, 1]`.
pub fn tower<R: Rng>(
    base: &PfaffianSystem,
    at: &Point,
    k: usize,
    chart: ChartId,
    rng: &mut R,
) -> Result<Vec<TowerLevel>, ProlongError> {
    let describe = |level: usize, sys: &PfaffianSystem, pt: &Point, stratum| -> Result<TowerLevel, ProlongError> {
        let s = sys.sample(pt)?;
        Ok(TowerLevel {
            level,
            ambient_dim: sys.ambient_dim(),
            kind: rank4_type(&s)?.kind,
            stratum,
            coordinates: sys.chart.names().iter().map(|n| n.to_string()).collect(),
            point: pt.values.clone(),
        })
    };
    let mut out = vec![describe(0, base, at, None)?];
    let mut sys = base.clone();
    let mut pt = at.clone();
    for level in 1..=k {
        let free = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let (pro, _) = prolong_rank4(&sys, &pt, chart, &FiberPoint::Free(free))?;
        let plane = pro.plane(&pt, free)?;
        let stratum = stratify(&plucker_fiber(&sys.sample(&pt)?)?, &plane).ok();
        pt = pro.lift(&pt, free);
        sys = pro.system;
        out.push(describe(level, &sys, &pt, stratum)?);
    }
    Ok(out)
}
