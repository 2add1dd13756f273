//! Discretized domains: an icosahedral geodesic triangulation of S^2 with P1
//! quadrature and per-triangle gradients, and a flat cylinder grid
//! [-L, L] x T^1 that is spectral in theta and second-order finite-difference
//! in t.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Triangulated sphere
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub level: u32,
    /// Flat-triangle areas.
    pub areas: Vec<f64>,
    /// Per-triangle P1 gradient vectors of the three corner hat functions.
    pub hat_grads: Vec<[[f64; 3]; 3]>,
    /// Per-triangle oriented orthonormal tangent pairs (tau1, tau2).
    pub tangent_frames: Vec<[[f64; 3]; 2]>,
    /// Lumped vertex areas (one third of incident triangle areas).
    pub vertex_areas: Vec<f64>,
    /// Maximum edge length.
    pub h_max: f64,
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

impl SurfaceMesh {
    /// Icosahedral geodesic sphere at the given subdivision level:
    /// 20 * 4^level triangles, vertices radially projected to the unit sphere.
    pub fn icosphere(level: u32) -> Self {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let mut vertices: Vec<[f64; 3]> = vec![
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        for v in &mut vertices {
            let n = norm3(v);
            v[0] /= n;
            v[1] /= n;
            v[2] /= n;
        }
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];

        for _ in 0..level {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut new_tris = Vec::with_capacity(triangles.len() * 4);
            for &[a, b, c] in &triangles {
                let mut mid = |i: usize, j: usize, verts: &mut Vec<[f64; 3]>| -> usize {
                    let key = if i < j { (i, j) } else { (j, i) };
                    if let Some(&k) = midpoints.get(&key) {
                        return k;
                    }
                    let p = verts[i];
                    let q = verts[j];
                    let mut m = [
                        (p[0] + q[0]) / 2.0,
                        (p[1] + q[1]) / 2.0,
                        (p[2] + q[2]) / 2.0,
                    ];
                    let n = norm3(&m);
                    m[0] /= n;
                    m[1] /= n;
                    m[2] /= n;
                    let k = verts.len();
                    verts.push(m);
                    midpoints.insert(key, k);
                    k
                };
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                new_tris.push([a, ab, ca]);
                new_tris.push([b, bc, ab]);
                new_tris.push([c, ca, bc]);
                new_tris.push([ab, bc, ca]);
            }
            triangles = new_tris;
        }

        // orient all triangles outward
        for t in &mut triangles {
            let [a, b, c] = *t;
            let e1 = sub3(&vertices[b], &vertices[a]);
            let e2 = sub3(&vertices[c], &vertices[a]);
            let n = cross3(&e1, &e2);
            let centroid = [
                (vertices[a][0] + vertices[b][0] + vertices[c][0]) / 3.0,
                (vertices[a][1] + vertices[b][1] + vertices[c][1]) / 3.0,
                (vertices[a][2] + vertices[b][2] + vertices[c][2]) / 3.0,
            ];
            if dot3(&n, &centroid) < 0.0 {
                t.swap(1, 2);
            }
        }

        Self::from_parts(vertices, triangles, level)
    }

    fn from_parts(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>, level: u32) -> Self {
        let nv = vertices.len();
        let nt = triangles.len();
        let mut areas = Vec::with_capacity(nt);
        let mut hat_grads = Vec::with_capacity(nt);
        let mut tangent_frames = Vec::with_capacity(nt);
        let mut vertex_areas = vec![0.0; nv];
        let mut h_max = 0.0f64;

        for &[a, b, c] in &triangles {
            let pa = vertices[a];
            let pb = vertices[b];
            let pc = vertices[c];
            let e1 = sub3(&pb, &pa);
            let e2 = sub3(&pc, &pa);
            let nvec = cross3(&e1, &e2);
            let twice_area = norm3(&nvec);
            let area = 0.5 * twice_area;
            let nhat = [
                nvec[0] / twice_area,
                nvec[1] / twice_area,
                nvec[2] / twice_area,
            ];
            // P1 hat gradients: grad phi_a = (n x (pc - pb)) / (2 area), cyclic
            let g = |opp_from: &[f64; 3], opp_to: &[f64; 3]| -> [f64; 3] {
                let e = sub3(opp_to, opp_from);
                let gv = cross3(&nhat, &e);
                [gv[0] / twice_area, gv[1] / twice_area, gv[2] / twice_area]
            };
            let ga = g(&pb, &pc);
            let gb = g(&pc, &pa);
            let gc = g(&pa, &pb);
            hat_grads.push([ga, gb, gc]);

            let t1n = norm3(&e1);
            let tau1 = [e1[0] / t1n, e1[1] / t1n, e1[2] / t1n];
            let tau2 = cross3(&nhat, &tau1);
            tangent_frames.push([tau1, tau2]);

            areas.push(area);
            for &v in &[a, b, c] {
                vertex_areas[v] += area / 3.0;
            }
            for (p, q) in [(pa, pb), (pb, pc), (pc, pa)] {
                let l = norm3(&sub3(&q, &p));
                if l > h_max {
                    h_max = l;
                }
            }
        }

        SurfaceMesh {
            vertices,
            triangles,
            level,
            areas,
            hat_grads,
            tangent_frames,
            vertex_areas,
            h_max,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.num_vertices() as i64;
        let f = self.num_triangles() as i64;
        let mut edges = std::collections::HashSet::new();
        for &[a, b, c] in &self.triangles {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                edges.insert(if i < j { (i, j) } else { (j, i) });
            }
        }
        v - edges.len() as i64 + f
    }

    /// P1 quadrature of a vertex-sampled scalar field (exact for piecewise
    /// linear integrands).
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.num_vertices() {
            return Err(Error::Dimension(format!(
                "field has {} entries, mesh has {} vertices",
                field.len(),
                self.num_vertices()
            )));
        }
        let mut s = 0.0;
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            s += self.areas[t] * (field[a] + field[b] + field[c]) / 3.0;
        }
        Ok(s)
    }

    /// Constant per-triangle ambient gradient of a P1 scalar field.
    pub fn gradient(&self, field: &[f64]) -> Result<Vec<[f64; 3]>> {
        if field.len() != self.num_vertices() {
            return Err(Error::Dimension("gradient: field/vertex mismatch".into()));
        }
        let mut out = Vec::with_capacity(self.num_triangles());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let g = &self.hat_grads[t];
            let mut gv = [0.0; 3];
            for k in 0..3 {
                gv[k] = field[a] * g[0][k] + field[b] * g[1][k] + field[c] * g[2][k];
            }
            out.push(gv);
        }
        Ok(out)
    }

    /// Directional derivatives (d_1 u, d_2 u) of an m-component vertex field
    /// along the triangle's oriented orthonormal tangent frame.
    pub fn directional_derivatives(&self, values: &Array2<f64>, tri: usize) -> (Vec<f64>, Vec<f64>) {
        let m = values.ncols();
        let [a, b, c] = self.triangles[tri];
        let g = &self.hat_grads[tri];
        let [tau1, tau2] = &self.tangent_frames[tri];
        let mut d1 = vec![0.0; m];
        let mut d2 = vec![0.0; m];
        for j in 0..m {
            let mut gv = [0.0; 3];
            for k in 0..3 {
                gv[k] = values[[a, j]] * g[0][k] + values[[b, j]] * g[1][k] + values[[c, j]] * g[2][k];
            }
            d1[j] = dot3(&gv, tau1);
            d2[j] = dot3(&gv, tau2);
        }
        (d1, d2)
    }

    /// Apply the P1 stiffness matrix of scalar fields to each component of a
    /// multi-component vertex field (matrix-free).
    pub fn stiffness_apply(&self, values: &Array2<f64>) -> Array2<f64> {
        let m = values.ncols();
        let mut out = Array2::zeros((self.num_vertices(), m));
        for (t, tri) in self.triangles.iter().enumerate() {
            let g = &self.hat_grads[t];
            let area = self.areas[t];
            for i in 0..3 {
                for j in 0..3 {
                    let kij = area * dot3(&g[i], &g[j]);
                    for comp in 0..m {
                        out[[tri[i], comp]] += kij * values[[tri[j], comp]];
                    }
                }
            }
        }
        out
    }

    /// Triangle centroids.
    pub fn centroid(&self, tri: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[tri];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
            (pa[2] + pb[2] + pc[2]) / 3.0,
        ]
    }

    /// Geodesic (angular) distance between unit vectors.
    pub fn geodesic_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
        dot3(a, b).clamp(-1.0, 1.0).acos()
    }
}

// ---------------------------------------------------------------------------
// Mesh cache
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CachedMesh {
    kind: String,
    level: u32,
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

/// Load an icosphere from the cache directory or build and store it.
pub fn icosphere_cached(level: u32, cache_dir: Option<&Path>) -> Result<SurfaceMesh> {
    if let Some(dir) = cache_dir {
        let path = dir.join(format!("icosphere-l{level}.json"));
        if path.exists() {
            let raw = std::fs::read_to_string(&path)?;
            let cached: CachedMesh = serde_json::from_str(&raw)?;
            if cached.kind == "icosphere" && cached.level == level {
                return Ok(SurfaceMesh::from_parts(
                    cached.vertices,
                    cached.triangles,
                    cached.level,
                ));
            }
        }
        let mesh = SurfaceMesh::icosphere(level);
        std::fs::create_dir_all(dir)?;
        let cached = CachedMesh {
            kind: "icosphere".into(),
            level,
            vertices: mesh.vertices.clone(),
            triangles: mesh.triangles.clone(),
        };
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(&cached)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(mesh)
    } else {
        Ok(SurfaceMesh::icosphere(level))
    }
}

// ---------------------------------------------------------------------------
// Flat cylinder [-L, L] x T^1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub half_length: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub dt: f64,
}

impl CylinderGrid {
    pub fn new(half_length: f64, n_t: usize, n_theta: usize) -> Result<Self> {
        if half_length <= 0.0 {
            return Err(Error::Config("cylinder: L must be positive".into()));
        }
        if n_t < 16 || n_theta < 8 {
            return Err(Error::Resolution(format!(
                "cylinder needs n_t >= 16 and n_theta >= 8, got ({n_t}, {n_theta})"
            )));
        }
        if n_theta % 2 != 0 {
            return Err(Error::Resolution("cylinder: n_theta must be even".into()));
        }
        let dt = 2.0 * half_length / (n_t - 1) as f64;
        Ok(CylinderGrid {
            half_length,
            n_t,
            n_theta,
            dt,
        })
    }

    pub fn t(&self, j: usize) -> f64 {
        -self.half_length + self.dt * j as f64
    }

    pub fn theta(&self, l: usize) -> f64 {
        TAU * l as f64 / self.n_theta as f64
    }

    /// Sample a scalar function on the grid, row j = slice t_j.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((self.n_t, self.n_theta), |(j, l)| f(self.t(j), self.theta(l)))
    }

    /// Spectral derivative in theta.
    pub fn d_theta(&self, field: &Array2<f64>) -> Array2<f64> {
        let n = self.n_theta;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut out = Array2::zeros((self.n_t, n));
        let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..self.n_t {
            for l in 0..n {
                buf[l] = Complex64::new(field[[j, l]], 0.0);
            }
            fft.process(&mut buf);
            for (m, b) in buf.iter_mut().enumerate() {
                let freq = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                // zero the Nyquist mode: its derivative is not representable
                let freq = if m == n / 2 { 0.0 } else { freq };
                *b *= Complex64::new(0.0, freq);
            }
            ifft.process(&mut buf);
            for l in 0..n {
                out[[j, l]] = buf[l].re / n as f64;
            }
        }
        out
    }

    /// Second-order finite-difference derivative in t (one-sided at the ends).
    pub fn d_t(&self, field: &Array2<f64>) -> Array2<f64> {
        let nt = self.n_t;
        let dt = self.dt;
        let mut out = Array2::zeros((nt, self.n_theta));
        for l in 0..self.n_theta {
            out[[0, l]] =
                (-3.0 * field[[0, l]] + 4.0 * field[[1, l]] - field[[2, l]]) / (2.0 * dt);
            for j in 1..nt - 1 {
                out[[j, l]] = (field[[j + 1, l]] - field[[j - 1, l]]) / (2.0 * dt);
            }
            out[[nt - 1, l]] = (3.0 * field[[nt - 1, l]] - 4.0 * field[[nt - 2, l]]
                + field[[nt - 3, l]])
                / (2.0 * dt);
        }
        out
    }

    /// Trapezoid-in-t, exact-in-theta integral over the cylinder.
    pub fn integrate(&self, field: &Array2<f64>) -> f64 {
        let dtheta = TAU / self.n_theta as f64;
        let mut s = 0.0;
        for j in 0..self.n_t {
            let w = if j == 0 || j == self.n_t - 1 { 0.5 } else { 1.0 };
            let row: f64 = (0..self.n_theta).map(|l| field[[j, l]]).sum();
            s += w * self.dt * row * dtheta;
        }
        s
    }

    /// Integral over the slice {t_j} x T^1.
    pub fn slice_integral(&self, field: &Array2<f64>, j: usize) -> f64 {
        let dtheta = TAU / self.n_theta as f64;
        (0..self.n_theta).map(|l| field[[j, l]]).sum::<f64>() * dtheta
    }

    /// Mean over the slice {t_j} x T^1.
    pub fn slice_mean(&self, field: &Array2<f64>, j: usize) -> f64 {
        self.slice_integral(field, j) / TAU
    }
}
