//! Rank-2 prolongation: fibers of integral 2-planes, their topology,
//! Grassmann charts, the Σ(J²) atlas, stratification and the prolongation tower.

pub mod atlas;
pub mod charts;
pub mod mesh;
pub mod tower;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::contact::ContactError;
use crate::forms::FormError;
use crate::linalg::{self, RANK_TOL};
use crate::system::{DistributionSample, SystemError};

pub use atlas::{embed_model, sigma_j2_atlas, Embedding, Model, SigmaJ2Chart};
pub use charts::{chart_defining_functions, chart_transition, ChartId, GrassmannChartModel};
pub use mesh::{fiber_sampler_oracle, MeshReport};
pub use tower::{prolong_rank4, prolong_system, tower, FiberPoint, ProlongedSystem, TowerLevel};

#[derive(Debug, Error)]
pub enum ProlongError {
    #[error("restricted exterior derivatives do not span a 2-dimensional space (rank {0})")]
    DegeneratePencil(usize),
    #[error("plane is not an integral element (residual {0:.3e})")]
    NotIntegral(f64),
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("chart `{0}` contains no integral elements")]
    EmptyChart(String),
    #[error("point is outside the overlap of the charts")]
    Overlap,
    #[error("fiber point is not covered by the chosen chart")]
    OutsideChart,
    #[error("fiber point is the singular point of a pinched fiber")]
    SingularPoint,
    #[error("integrality conditions are not linear in this chart")]
    NonlinearChart,
    #[error("no pair of fiber coordinates can be solved for (best determinant {0:.3e})")]
    Unsolvable(f64),
    #[error("model {model} has no embedding in chart {chart}")]
    UnlistedEmbedding { model: String, chart: String },
    #[error("mesh failure: {0}")]
    Mesh(String),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Index pairs of a 4-dimensional space in Λ² order (01, 02, 03, 12, 13, 23).
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Plücker coordinates of `a ∧ b`.
pub fn bivector(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(6, PAIRS.iter().map(|&(i, j)| a[i] * b[j] - a[j] * b[i]))
}

/// The Klein form: `ξᵀ K ξ = 2(ξ01 ξ23 − ξ02 ξ13 + ξ03 ξ12)`.
pub fn klein_form() -> DMatrix<f64> {
    let mut k = DMatrix::zeros(6, 6);
    for (i, j, v) in [(0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)] {
        k[(i, j)] = v;
        k[(j, i)] = v;
    }
    k
}

/// The 2-plane of a decomposable bivector, as two orthonormal columns.
pub fn plane_of_bivector(xi: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        m[(i, j)] = xi[k];
        m[(j, i)] = -xi[k];
    }
    let cs = linalg::column_space(&m, 1e-6);
    cs.columns(0, cs.ncols().min(2)).into_owned()
}

/// Integral 2-planes of a rank-4 sample as a quadric in the projective 3-space
/// `P(ker L₁ ∩ ker L₂)`.
#[derive(Clone, Debug)]
pub struct PluckerFiber {
    pub sample: DistributionSample,
    /// rows: the two independent functionals on Λ²D(w)
    pub functionals: DMatrix<f64>,
    /// orthonormal columns spanning ker L₁ ∩ ker L₂ in Λ²D(w)
    pub kernel: DMatrix<f64>,
    /// the Klein form restricted to `kernel`
    pub q: DMatrix<f64>,
}

pub fn plucker_fiber(sample: &DistributionSample) -> Result<PluckerFiber, ProlongError> {
    if sample.rank() != 4 {
        return Err(ContactError::NotRank4(sample.rank()).into());
    }
    let k = sample.dgen.len();
    let rows = DMatrix::from_fn(k, 6, |i, j| {
        let (a, b) = PAIRS[j];
        sample.dgen[i][(a, b)]
    });
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(ProlongError::DegeneratePencil(0));
    }
    let r = linalg::rank(&rows, RANK_TOL);
    if r != 2 {
        return Err(ProlongError::DegeneratePencil(r));
    }
    let functionals = linalg::column_space(&rows.transpose(), RANK_TOL).transpose();
    let kernel = linalg::null_space(&rows, RANK_TOL);
    let q = kernel.transpose() * klein_form() * &kernel;
    Ok(PluckerFiber { sample: sample.clone(), functionals, kernel, q })
}

impl PluckerFiber {
    /// Bivector of the fiber point with homogeneous coordinates `c`.
    pub fn bivector(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.kernel * c
    }

    /// The 2-plane (in sample-basis coordinates) of the fiber point `c`.
    pub fn plane(&self, c: &DVector<f64>) -> DMatrix<f64> {
        plane_of_bivector(&self.bivector(c))
    }

    /// Homogeneous coordinates of a plane, normalized; `None` if the plane is degenerate.
    pub fn coordinates(&self, plane: &DMatrix<f64>) -> Option<DVector<f64>> {
        let xi = bivector(&plane.column(0).into_owned(), &plane.column(1).into_owned());
        let n = xi.norm();
        (n > 1e-12).then(|| self.kernel.transpose() * xi / n)
    }

    /// Largest violation of the integral-element conditions for a plane,
    /// relative to the size of its bivector and of the restricted dθ's.
    pub fn integrality_residual(&self, plane: &DMatrix<f64>) -> f64 {
        let xi = bivector(&plane.column(0).into_owned(), &plane.column(1).into_owned());
        let n = xi.norm();
        if n < 1e-300 {
            return f64::INFINITY;
        }
        let top = self.sample.dgen.iter().map(|m| m.abs().max()).fold(0.0, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for m in &self.sample.dgen {
            let v: f64 = PAIRS.iter().enumerate().map(|(k, &(i, j))| m[(i, j)] * xi[k]).sum();
            worst = worst.max(v.abs() / (n * top));
        }
        worst
    }

    /// Draws a point of the fiber: a random line in `P³` meets the quadric `Q = 0`.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        loop {
            let c = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let d = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let a = d.dot(&(&self.q * &d));
            let b = 2.0 * c.dot(&(&self.q * &d));
            let cc = c.dot(&(&self.q * &c));
            let disc = b * b - 4.0 * a * cc;
            if a.abs() < 1e-9 || disc < 0.0 {
                continue;
            }
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let lambda = (-b + sign * disc.sqrt()) / (2.0 * a);
            let x = &c + &d * lambda;
            let n = x.norm();
            if n > 1e-6 {
                return x / n;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TopologyLabel {
    Torus,
    PinchedTorus,
    Sphere,
    Other,
}

/// Topology of one fiber, decided by the inertia of `Q`.
#[derive(Clone, Debug, Serialize)]
pub struct FiberTopology {
    pub signature: (usize, usize, usize),
    pub label: TopologyLabel,
    /// bivectors (Λ² order) of the singular points
    pub singular_points: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

pub fn fiber_topology(pf: &PluckerFiber) -> FiberTopology {
    let sig = linalg::signature(&pf.q, RANK_TOL);
    let label = match sig {
        (2, 2, 0) => TopologyLabel::Torus,
        (3, 1, 0) | (1, 3, 0) => TopologyLabel::Sphere,
        (2, 1, 1) | (1, 2, 1) => TopologyLabel::PinchedTorus,
        _ => TopologyLabel::Other,
    };
    let singular_points = if label == TopologyLabel::PinchedTorus {
        let k = linalg::symmetric_kernel(&pf.q, RANK_TOL);
        vec![pf.bivector(&k.column(0).into_owned()).iter().copied().collect()]
    } else {
        Vec::new()
    };
    let sym = (&pf.q + pf.q.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    FiberTopology { signature: sig, label, singular_points, eigenvalues }
}

/// Whether `plane` is the singular point of a pinched fiber.
pub fn is_singular_point(pf: &PluckerFiber, topo: &FiberTopology, plane: &DMatrix<f64>) -> bool {
    let Some(c) = pf.coordinates(plane) else { return false };
    topo.singular_points.iter().any(|s| {
        let s = DVector::from_column_slice(s);
        let k = pf.kernel.transpose() * &s;
        let k = &k / k.norm();
        1.0 - c.dot(&k).abs() < 1e-9
    })
}

/// `Σᵢ`: integral planes meeting the vertical directions in dimension `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stratum {
    Sigma0,
    Sigma1,
    Sigma2,
}

impl Stratum {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stratum> {
        [Stratum::Sigma0, Stratum::Sigma1, Stratum::Sigma2].get(i).copied()
    }
}

/// Coordinates of `J¹` used to detect vertical directions.
pub const J1_COORDS: [&str; 5] = ["x", "y", "z", "p", "q"];

/// Stratum of an integral plane given in sample-basis coordinates.
pub fn stratify(pf: &PluckerFiber, plane: &DMatrix<f64>) -> Result<Stratum, ProlongError> {
    let res = pf.integrality_residual(plane);
    if !(res < 1e-9) {
        return Err(ProlongError::NotIntegral(res));
    }
    Ok(stratum_of_vectors(&pf.sample, &(&pf.sample.basis * plane)))
}

/// `2 − rank` of the J¹ projection of two ambient tangent vectors.
pub fn stratum_of_vectors(sample: &DistributionSample, ambient: &DMatrix<f64>) -> Stratum {
    let ch = &sample.point.chart;
    let idx: Vec<usize> = J1_COORDS.iter().filter_map(|n| ch.index_of(n)).collect();
    let proj = DMatrix::from_fn(idx.len(), ambient.ncols(), |i, j| ambient[(idx[i], j)]);
    // absolute scale: the plane columns are normalized
    let scale = ambient.column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let s = linalg::singular_values(&(proj / scale));
    let r = s.iter().filter(|v| **v > RANK_TOL).count();
    Stratum::from_index(2 - r.min(2)).unwrap()
}
