//! Independent check of fiber topology: mesh the quadric `Q = 0` on the unit
//! 3-sphere (the boundary of `[-1, 1]⁴`), quotient by `c ↦ -c`, and count.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{PluckerFiber, ProlongError};
use crate::par;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MeshReport {
    pub samples: usize,
    pub grid: usize,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// Euler characteristic of the projective surface
    pub euler_characteristic: f64,
    pub components: usize,
    /// clusters of mesh vertices where the gradient of `Q` nearly vanishes
    pub singular_points: usize,
    pub min_gradient_ratio: f64,
}

/// Meshes the fiber of `pf` using about `samples` grid points.
pub fn fiber_sampler_oracle(pf: &PluckerFiber, samples: usize) -> Result<MeshReport, ProlongError> {
    mesh_quadric(&pf.q, samples)
}

type Grid = [u16; 4];

struct Mesher {
    m: u16,
    q: DMatrix<f64>,
}

impl Mesher {
    fn coords(&self, g: &Grid) -> DVector<f64> {
        // exact under g ↦ m - g, so Q takes identical values at antipodes
        DVector::from_fn(4, |i, _| (2 * g[i] as i32 - self.m as i32) as f64 / self.m as f64)
    }

    fn value(&self, g: &Grid) -> f64 {
        let c = self.coords(g);
        c.dot(&(&self.q * &c))
    }

    fn index(&self, g: &Grid) -> u64 {
        let n = self.m as u64 + 1;
        ((g[0] as u64 * n + g[1] as u64) * n + g[2] as u64) * n + g[3] as u64
    }

    fn antipode(&self, g: &Grid) -> Grid {
        [self.m - g[0], self.m - g[1], self.m - g[2], self.m - g[3]]
    }

    /// Triangles of one facet, each vertex an edge of the grid.
    fn facet(&self, axis: usize, side: u16) -> Vec<[(Grid, Grid); 3]> {
        let free: Vec<usize> = (0..4).filter(|i| *i != axis).collect();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::new();
        let mut cache: HashMap<Grid, f64> = HashMap::new();
        for i in 0..self.m {
            for j in 0..self.m {
                for k in 0..self.m {
                    let mut corner = [0u16; 4];
                    corner[axis] = side;
                    corner[free[0]] = i;
                    corner[free[1]] = j;
                    corner[free[2]] = k;
                    for perm in &perms {
                        let mut tet = [corner; 4];
                        for s in 0..3 {
                            tet[s + 1] = tet[s];
                            tet[s + 1][free[perm[s]]] += 1;
                        }
                        let vals: Vec<f64> =
                            tet.iter().map(|g| *cache.entry(*g).or_insert_with(|| self.value(g))).collect();
                        march(&tet, &vals, &mut out);
                    }
                }
            }
        }
        out
    }
}

fn march(tet: &[Grid; 4], vals: &[f64], out: &mut Vec<[(Grid, Grid); 3]>) {
    let pos: Vec<usize> = (0..4).filter(|i| vals[*i] >= 0.0).collect();
    let neg: Vec<usize> = (0..4).filter(|i| vals[*i] < 0.0).collect();
    let e = |a: usize, b: usize| if tet[a] < tet[b] { (tet[a], tet[b]) } else { (tet[b], tet[a]) };
    match (pos.len(), neg.len()) {
        (1, 3) => out.push([e(pos[0], neg[0]), e(pos[0], neg[1]), e(pos[0], neg[2])]),
        (3, 1) => out.push([e(neg[0], pos[0]), e(neg[0], pos[1]), e(neg[0], pos[2])]),
        (2, 2) => {
            let (a, b, c, d) = (pos[0], pos[1], neg[0], neg[1]);
            out.push([e(a, c), e(a, d), e(b, d)]);
            out.push([e(a, c), e(b, d), e(b, c)]);
        }
        _ => {}
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Meshes `{cᵀ Q c = 0}` in `P³`.
pub fn mesh_quadric(q: &DMatrix<f64>, samples: usize) -> Result<MeshReport, ProlongError> {
    let qn = q.norm();
    if !(qn > 0.0) || !qn.is_finite() {
        return Err(ProlongError::Mesh("quadric is zero or not finite".into()));
    }
    let m = ((samples as f64 / 8.0).cbrt().ceil() as u16).max(4);
    let mesher = Mesher { m, q: (q + q.transpose()) * (0.5 / qn) };
    let facets: Vec<(usize, u16)> = (0..4).flat_map(|a| [(a, 0), (a, m)]).collect();
    let tris: Vec<[(Grid, Grid); 3]> = par::map(&facets, |&(a, s)| mesher.facet(a, s)).into_iter().flatten().collect();
    if tris.is_empty() {
        return Err(ProlongError::Mesh("empty zero set".into()));
    }

    let key = |e: &(Grid, Grid)| (mesher.index(&e.0), mesher.index(&e.1));
    let mut vid: HashMap<(u64, u64), usize> = HashMap::new();
    let mut verts: Vec<(Grid, Grid)> = Vec::new();
    let mut faces = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut f = [0usize; 3];
        for (slot, e) in t.iter().enumerate() {
            let n = verts.len();
            f[slot] = *vid.entry(key(e)).or_insert_with(|| {
                verts.push(*e);
                n
            });
        }
        faces.push(f);
    }
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for f in &faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let chi_cover = verts.len() as f64 - edges.len() as f64 + faces.len() as f64;

    // antipodal identification
    let anti: Vec<Option<usize>> = verts
        .iter()
        .map(|(a, b)| {
            let (x, y) = (mesher.antipode(a), mesher.antipode(b));
            let e = if x < y { (x, y) } else { (y, x) };
            vid.get(&key(&e)).copied()
        })
        .collect();
    if anti.iter().any(Option::is_none) {
        return Err(ProlongError::Mesh("mesh is not antipodally symmetric".into()));
    }
    let mut uf = UnionFind((0..verts.len()).collect());
    for (a, b) in &edges {
        uf.union(*a, *b);
    }
    for (i, a) in anti.iter().enumerate() {
        uf.union(i, a.unwrap());
    }
    let components = (0..verts.len()).filter(|i| uf.find(*i) == *i).count();

    // points where the gradient of Q is small relative to the grid spacing
    let h = 2.0 / m as f64;
    let position = |(a, b): &(Grid, Grid)| {
        let (ca, cb) = (mesher.coords(a), mesher.coords(b));
        let (fa, fb) = (mesher.value(a), mesher.value(b));
        let t = fa / (fa - fb);
        &ca + (&cb - &ca) * t
    };
    let qmax = mesher.q.clone().symmetric_eigenvalues().iter().fold(0.0f64, |x, v| x.max(v.abs()));
    let mut min_ratio = f64::INFINITY;
    let mut flagged: Vec<DVector<f64>> = Vec::new();
    for v in &verts {
        let c = position(v);
        let c = &c / c.norm();
        let ratio = (&mesher.q * &c).norm() / qmax;
        min_ratio = min_ratio.min(ratio);
        if ratio < h {
            flagged.push(c);
        }
    }
    let mut cl = UnionFind((0..flagged.len()).collect());
    for i in 0..flagged.len() {
        for j in i + 1..flagged.len() {
            let d = (&flagged[i] - &flagged[j]).norm().min((&flagged[i] + &flagged[j]).norm());
            if d < 4.0 * h {
                cl.union(i, j);
            }
        }
    }
    let singular_points = (0..flagged.len()).filter(|i| cl.find(*i) == *i).count();

    Ok(MeshReport {
        samples,
        grid: m as usize,
        vertices: verts.len() / 2,
        edges: edges.len() / 2,
        faces: faces.len() / 2,
        euler_characteristic: chi_cover / 2.0,
        components,
        singular_points,
        min_gradient_ratio: min_ratio,
    })
}
