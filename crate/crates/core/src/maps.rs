//! Harmonic map families and conformal machinery: rational maps S^2 -> S^2 in
//! stereographic coordinates, Moebius / dilation / neck charts, Dirichlet
//! energy, the harmonic residual, and the Hopf differential.
//!
//! Rational maps are evaluated projectively as homogeneous pairs [p(z) : q(z)]
//! so poles land exactly on the north pole and points near infinity never
//! overflow. Compositions with Moebius charts are carried out on the
//! coefficients, keeping composed maps exactly harmonic.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{CylinderGrid, SurfaceMesh};

// ---------------------------------------------------------------------------
// Stereographic projection from the north pole
// ---------------------------------------------------------------------------

/// sigma(x) = (x1 + i x2) / (1 - x3); the north pole maps to infinity (None).
pub fn stereographic(x: &[f64; 3]) -> Option<Complex64> {
    let denom = 1.0 - x[2];
    if denom.abs() < 1e-14 {
        None
    } else {
        Some(Complex64::new(x[0] / denom, x[1] / denom))
    }
}

/// Inverse stereographic projection; `None` is the north pole.
pub fn inverse_stereographic(z: Option<Complex64>) -> [f64; 3] {
    match z {
        None => [0.0, 0.0, 1.0],
        Some(z) => {
            let r2 = z.norm_sqr();
            let d = r2 + 1.0;
            [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomials over C
// ---------------------------------------------------------------------------

/// Polynomial with ascending complex coefficients, kept trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly(coeffs);
        p.trim();
        p
    }

    pub fn from_reals(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly(vec![])
    }

    pub fn one() -> Self {
        Poly(vec![Complex64::new(1.0, 0.0)])
    }

    fn trim(&mut self) {
        while let Some(c) = self.0.last() {
            if c.norm() < 1e-14 && self.0.len() > 1 {
                self.0.pop();
            } else {
                break;
            }
        }
        if self.0.len() == 1 && self.0[0].norm() < 1e-14 {
            self.0.clear();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 + 1.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, a) in self.0.iter().enumerate() {
            out[i] += a;
        }
        for (i, b) in other.0.iter().enumerate() {
            out[i] += b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    fn pow(&self, k: usize) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Coefficient at degree k, zero-padded.
    fn coeff(&self, k: usize) -> Complex64 {
        self.0.get(k).cloned().unwrap_or(Complex64::new(0.0, 0.0))
    }
}

// ---------------------------------------------------------------------------
// Conformal charts
// ---------------------------------------------------------------------------

/// Conformal reparametrizations of the stereographic plane.
#[derive(Debug, Clone)]
pub enum ConformalChart {
    /// m(z) = (a z + b) / (c z + d), ad - bc != 0.
    Mobius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    /// m(z) = center + scale * z.
    Dilation { center: Complex64, scale: f64 },
    /// n(t + i theta) = center + rho * e^{-(t + i theta)}.
    Neck { center: Complex64, rho: f64 },
}

impl ConformalChart {
    pub fn identity() -> Self {
        ConformalChart::Mobius {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() < 1e-14 {
            return Err(Error::Config("mobius chart with ad - bc = 0".into()));
        }
        Ok(ConformalChart::Mobius { a, b, c, d })
    }

    /// Moebius coefficients of the chart, when it is one.
    pub fn as_mobius(&self) -> Option<(Complex64, Complex64, Complex64, Complex64)> {
        match *self {
            ConformalChart::Mobius { a, b, c, d } => Some((a, b, c, d)),
            ConformalChart::Dilation { center, scale } => Some((
                Complex64::new(scale, 0.0),
                center,
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            )),
            ConformalChart::Neck { .. } => None,
        }
    }

    /// Neck chart value and its w-derivative at w = t + i theta.
    pub fn neck_value(&self, t: f64, theta: f64) -> Result<(Complex64, Complex64)> {
        match *self {
            ConformalChart::Neck { center, rho } => {
                let e = Complex64::new(-t, -theta).exp();
                let z = center + rho * e;
                let dz_dw = -rho * e;
                Ok((z, dz_dw))
            }
            _ => Err(Error::Config("neck_value on a non-neck chart".into())),
        }
    }

    /// Conformal factor |grad n|^2 of the neck chart at axial coordinate t
    /// (the analytic value is 2 rho^2 e^{-2t}).
    pub fn neck_conformal_factor(&self, t: f64) -> Result<f64> {
        match *self {
            ConformalChart::Neck { rho, .. } => Ok(2.0 * rho * rho * (-2.0 * t).exp()),
            _ => Err(Error::Config("neck_conformal_factor on a non-neck chart".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// Rational maps S^2 -> S^2
// ---------------------------------------------------------------------------

/// A rational map p(z)/q(z) acting on the sphere through stereographic
/// coordinates.
#[derive(Debug, Clone)]
pub struct RationalMap {
    pub num: Poly,
    pub den: Poly,
}

impl RationalMap {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() && num.is_zero() {
            return Err(Error::DegenerateMap("0/0 rational map".into()));
        }
        Ok(RationalMap { num, den })
    }

    pub fn from_real_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Poly::from_reals(num), Poly::from_reals(den))
    }

    pub fn identity() -> Self {
        RationalMap {
            num: Poly::from_reals(&[0.0, 1.0]),
            den: Poly::one(),
        }
    }

    pub fn constant(value: Complex64) -> Self {
        RationalMap {
            num: Poly::new(vec![value]),
            den: Poly::one(),
        }
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn is_constant(&self) -> bool {
        // p/q constant iff p*q' - p'*q vanishes
        let w = self
            .num
            .mul(&self.den.derivative())
            .add(&self.den.mul(&self.num.derivative()).scale(Complex64::new(-1.0, 0.0)));
        w.is_zero()
    }

    /// Homogeneous value [P : Q] at z, evaluated in 1/z coordinates outside
    /// the unit disk so nothing overflows.
    pub fn eval_projective(&self, z: Option<Complex64>) -> (Complex64, Complex64) {
        let d = self.degree();
        match z {
            None => (self.num.coeff(d), self.den.coeff(d)),
            Some(z) if z.norm_sqr() <= 1.0 => (self.num.eval(z), self.den.eval(z)),
            Some(z) => {
                let w = z.inv();
                // z^{-d} p(z) = sum_k p_k w^{d-k}
                let rev = |p: &Poly| -> Complex64 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in (0..=d).rev() {
                        acc = acc * w + p.coeff(d - k);
                    }
                    // Horner over w with coefficients p_d, p_{d-1}, ..., p_0
                    acc
                };
                (rev(&self.num), rev(&self.den))
            }
        }
    }

    /// Value on the sphere.
    pub fn sphere_value(&self, z: Option<Complex64>) -> [f64; 3] {
        let (p, q) = self.eval_projective(z);
        homogeneous_to_sphere(p, q)
    }

    /// Value on the sphere together with the differential along a complex
    /// increment zdot of z (the map is treated as R^2 -> R^3).
    pub fn sphere_value_and_push(&self, z: Complex64, zdot: Complex64) -> ([f64; 3], [f64; 3]) {
        // inside the disk evaluate (p, q); outside evaluate in w = 1/z
        if z.norm_sqr() <= 1.0 {
            let p = self.num.eval(z);
            let q = self.den.eval(z);
            let dp = self.num.derivative().eval(z) * zdot;
            let dq = self.den.derivative().eval(z) * zdot;
            sphere_push(p, q, dp, dq)
        } else {
            let d = self.degree();
            let w = z.inv();
            let wdot = -zdot * w * w;
            let rev_poly = |p: &Poly| -> Poly {
                Poly::new((0..=d).map(|k| p.coeff(d - k)).collect())
            };
            let pn = rev_poly(&self.num);
            let qn = rev_poly(&self.den);
            let p = pn.eval(w);
            let q = qn.eval(w);
            let dp = pn.derivative().eval(w) * wdot;
            let dq = qn.derivative().eval(w) * wdot;
            sphere_push(p, q, dp, dq)
        }
    }

    /// Analytic composition with a Moebius (or dilation) chart:
    /// rational o moebius is rational.
    pub fn compose(&self, chart: &ConformalChart) -> Result<RationalMap> {
        let (a, b, c, d) = chart
            .as_mobius()
            .ok_or_else(|| Error::Config("cannot compose a rational map with a neck chart".into()))?;
        if (a * d - b * c).norm() < 1e-14 {
            return Err(Error::Config("non-invertible chart".into()));
        }
        let deg = self.degree();
        let lin1 = Poly::new(vec![b, a]); // a z + b
        let lin2 = Poly::new(vec![d, c]); // c z + d
        let compose_poly = |p: &Poly| -> Poly {
            let mut acc = Poly::zero();
            for k in 0..=deg {
                let ck = p.coeff(k);
                if ck.norm() == 0.0 {
                    continue;
                }
                let term = lin1.pow(k).mul(&lin2.pow(deg - k)).scale(ck);
                acc = acc.add(&term);
            }
            acc
        };
        RationalMap::new(compose_poly(&self.num), compose_poly(&self.den))
    }

    /// Sample onto a sphere mesh.
    pub fn sample(&self, mesh: Arc<SurfaceMesh>) -> MapField {
        let nv = mesh.num_vertices();
        let mut values = Array2::zeros((nv, 3));
        for (i, v) in mesh.vertices.iter().enumerate() {
            let z = stereographic(v);
            let x = self.sphere_value(z);
            for k in 0..3 {
                values[[i, k]] = x[k];
            }
        }
        MapField {
            mesh,
            values,
            provenance: Provenance::Rational(self.clone()),
        }
    }
}

fn homogeneous_to_sphere(p: Complex64, q: Complex64) -> [f64; 3] {
    let pn = p.norm_sqr();
    let qn = q.norm_sqr();
    let d = pn + qn;
    let pq = p * q.conj();
    [2.0 * pq.re / d, 2.0 * pq.im / d, (pn - qn) / d]
}

fn sphere_push(p: Complex64, q: Complex64, dp: Complex64, dq: Complex64) -> ([f64; 3], [f64; 3]) {
    let pn = p.norm_sqr();
    let qn = q.norm_sqr();
    let dd = pn + qn;
    let pq = p * q.conj();
    let x = [2.0 * pq.re / dd, 2.0 * pq.im / dd, (pn - qn) / dd];
    let dpn = 2.0 * (dp * p.conj()).re;
    let dqn = 2.0 * (dq * q.conj()).re;
    let ddd = dpn + dqn;
    let dpq = dp * q.conj() + p * dq.conj();
    let dn = [2.0 * dpq.re, 2.0 * dpq.im, dpn - dqn];
    let n = [2.0 * pq.re, 2.0 * pq.im, pn - qn];
    let mut dx = [0.0; 3];
    for k in 0..3 {
        dx[k] = (dn[k] * dd - n[k] * ddd) / (dd * dd);
    }
    (x, dx)
}

// ---------------------------------------------------------------------------
// Discrete map fields
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Provenance {
    Rational(RationalMap),
    Constant([f64; 3]),
    Numeric,
}

/// Discrete map u: mesh -> N, values per vertex.
#[derive(Debug, Clone)]
pub struct MapField {
    pub mesh: Arc<SurfaceMesh>,
    pub values: Array2<f64>,
    pub provenance: Provenance,
}

impl MapField {
    pub fn constant(mesh: Arc<SurfaceMesh>, value: [f64; 3]) -> Self {
        let nv = mesh.num_vertices();
        let mut values = Array2::zeros((nv, 3));
        for i in 0..nv {
            for k in 0..3 {
                values[[i, k]] = value[k];
            }
        }
        MapField {
            mesh,
            values,
            provenance: Provenance::Constant(value),
        }
    }

    pub fn rational(&self) -> Option<&RationalMap> {
        match &self.provenance {
            Provenance::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// Dirichlet energy E(u) = 1/2 int |grad u|^2.
    pub fn dirichlet_energy(&self) -> f64 {
        dirichlet_energy(&self.mesh, &self.values)
    }

    /// L^2 norm of the tangential part of the weak Laplacian (zero exactly
    /// for harmonic maps in the continuum; decays with refinement for the
    /// analytic families).
    pub fn harmonic_residual(&self) -> f64 {
        let mesh = &self.mesh;
        let nv = mesh.num_vertices();
        let ku = mesh.stiffness_apply(&self.values);
        let mut total = 0.0;
        for i in 0..nv {
            let p = [self.values[[i, 0]], self.values[[i, 1]], self.values[[i, 2]]];
            // tangential projection for the unit sphere target
            let lap = [
                ku[[i, 0]] / mesh.vertex_areas[i],
                ku[[i, 1]] / mesh.vertex_areas[i],
                ku[[i, 2]] / mesh.vertex_areas[i],
            ];
            let pl = lap[0] * p[0] + lap[1] * p[1] + lap[2] * p[2];
            let mut r2 = 0.0;
            for k in 0..3 {
                let t = lap[k] - pl * p[k];
                r2 += t * t;
            }
            total += mesh.vertex_areas[i] * r2;
        }
        total.sqrt()
    }

    /// Compose with a Moebius-type chart. Rational provenance composes
    /// analytically; other provenances are unsupported (the analytic families
    /// cover every shipped experiment).
    pub fn compose(&self, chart: &ConformalChart) -> Result<MapField> {
        match &self.provenance {
            Provenance::Rational(r) => Ok(r.compose(chart)?.sample(self.mesh.clone())),
            Provenance::Constant(v) => Ok(MapField::constant(self.mesh.clone(), *v)),
            Provenance::Numeric => Err(Error::Config(
                "compose requires analytic provenance (interpolation fallback not implemented)"
                    .into(),
            )),
        }
    }
}

/// Dirichlet energy of an arbitrary multi-component vertex field.
pub fn dirichlet_energy(mesh: &SurfaceMesh, values: &Array2<f64>) -> f64 {
    let m = values.ncols();
    let mut e = 0.0;
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let g = &mesh.hat_grads[t];
        let mut density = 0.0;
        for j in 0..m {
            let mut gv = [0.0; 3];
            for k in 0..3 {
                gv[k] = values[[a, j]] * g[0][k]
                    + values[[b, j]] * g[1][k]
                    + values[[c, j]] * g[2][k];
            }
            density += gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2];
        }
        e += 0.5 * mesh.areas[t] * density;
    }
    e
}

// ---------------------------------------------------------------------------
// Cylinder pullbacks and the Hopf differential
// ---------------------------------------------------------------------------

/// A map sampled on the cylinder with exact analytic first derivatives.
#[derive(Debug, Clone)]
pub struct CylinderMap {
    pub grid: CylinderGrid,
    /// (n_t, n_theta, 3)
    pub values: Array3<f64>,
    pub du_dt: Array3<f64>,
    pub du_dtheta: Array3<f64>,
}

impl CylinderMap {
    /// Pull a rational map back through a neck chart, with derivatives
    /// computed by the complex chain rule (no interpolation).
    pub fn pull_back(rational: &RationalMap, chart: &ConformalChart, grid: CylinderGrid) -> Result<Self> {
        let (n_t, n_th) = (grid.n_t, grid.n_theta);
        let mut values = Array3::zeros((n_t, n_th, 3));
        let mut du_dt = Array3::zeros((n_t, n_th, 3));
        let mut du_dtheta = Array3::zeros((n_t, n_th, 3));
        for j in 0..n_t {
            for l in 0..n_th {
                let (z, dz_dw) = chart.neck_value(grid.t(j), grid.theta(l))?;
                // w = t + i theta: dz/dt = dz_dw, dz/dtheta = i dz_dw
                let (x, dxt) = rational.sphere_value_and_push(z, dz_dw);
                let (_, dxth) = rational.sphere_value_and_push(z, Complex64::new(0.0, 1.0) * dz_dw);
                for k in 0..3 {
                    values[[j, l, k]] = x[k];
                    du_dt[[j, l, k]] = dxt[k];
                    du_dtheta[[j, l, k]] = dxth[k];
                }
            }
        }
        Ok(CylinderMap {
            grid,
            values,
            du_dt,
            du_dtheta,
        })
    }

    /// |grad u|^2 on the grid.
    pub fn grad_squared(&self) -> Array2<f64> {
        let (n_t, n_th) = (self.grid.n_t, self.grid.n_theta);
        Array2::from_shape_fn((n_t, n_th), |(j, l)| {
            (0..3)
                .map(|k| {
                    self.du_dt[[j, l, k]] * self.du_dt[[j, l, k]]
                        + self.du_dtheta[[j, l, k]] * self.du_dtheta[[j, l, k]]
                })
                .sum()
        })
    }

    pub fn dirichlet_energy(&self) -> f64 {
        0.5 * self.grid.integrate(&self.grad_squared())
    }

    /// Tangential slice energy e(t_j) = int |d_theta u|^2 dtheta.
    pub fn slice_tangential_energy(&self, j: usize) -> f64 {
        let sq = Array2::from_shape_fn((1, self.grid.n_theta), |(_, l)| {
            (0..3).map(|k| self.du_dtheta[[j, l, k]] * self.du_dtheta[[j, l, k]]).sum()
        });
        self.grid.slice_integral(&sq, 0)
    }

    pub fn slice_axial_energy(&self, j: usize) -> f64 {
        let sq = Array2::from_shape_fn((1, self.grid.n_theta), |(_, l)| {
            (0..3).map(|k| self.du_dt[[j, l, k]] * self.du_dt[[j, l, k]]).sum()
        });
        self.grid.slice_integral(&sq, 0)
    }
}

/// Hopf differential phi = <d_z u, d_z u> with d_z = (d_t - i d_theta)/2,
/// together with the per-slice balance int |d_t u|^2 - int |d_theta u|^2.
pub struct HopfReport {
    /// |phi| on the grid.
    pub abs_phi: Array2<f64>,
    /// max |phi| over the grid.
    pub max_abs_phi: f64,
    /// max |phi| / max |grad u|^2 (scale-free conformality defect).
    pub relative_phi: f64,
    /// per-slice (axial - tangential) energies.
    pub slice_imbalance: Vec<f64>,
    /// max relative per-slice imbalance.
    pub max_relative_imbalance: f64,
}

pub fn hopf_differential(map: &CylinderMap) -> HopfReport {
    let (n_t, n_th) = (map.grid.n_t, map.grid.n_theta);
    let mut abs_phi = Array2::zeros((n_t, n_th));
    let mut max_phi = 0.0f64;
    let mut max_grad = 0.0f64;
    for j in 0..n_t {
        for l in 0..n_th {
            let mut a = 0.0; // <u_t, u_t>
            let mut b = 0.0; // <u_th, u_th>
            let mut c = 0.0; // <u_t, u_th>
            for k in 0..3 {
                let ut = map.du_dt[[j, l, k]];
                let uth = map.du_dtheta[[j, l, k]];
                a += ut * ut;
                b += uth * uth;
                c += ut * uth;
            }
            let phi = Complex64::new(0.25 * (a - b), -0.5 * c);
            abs_phi[[j, l]] = phi.norm();
            max_phi = max_phi.max(phi.norm());
            max_grad = max_grad.max(a + b);
        }
    }
    let mut slice_imbalance = Vec::with_capacity(n_t);
    let mut max_rel = 0.0f64;
    for j in 0..n_t {
        let ax = map.slice_axial_energy(j);
        let tan = map.slice_tangential_energy(j);
        slice_imbalance.push(ax - tan);
        let denom = (ax + tan).max(1e-300);
        if ax + tan > 1e-12 {
            max_rel = max_rel.max((ax - tan).abs() / denom);
        }
    }
    HopfReport {
        abs_phi,
        max_abs_phi: max_phi,
        relative_phi: if max_grad > 0.0 { max_phi / max_grad } else { 0.0 },
        slice_imbalance,
        max_relative_imbalance: max_rel,
    }
}

// ---------------------------------------------------------------------------
// Family spec strings
// ---------------------------------------------------------------------------

fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let err = || Error::Config(format!("cannot parse complex number '{s}'"));
    if let Ok(re) = s.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    if let Some(im) = s.strip_suffix('i') {
        // forms: "bi", "a+bi", "a-bi"
        let im = im.trim();
        for split in 1..im.len() {
            let (head, tail) = im.split_at(split);
            let c = tail.chars().next().unwrap();
            if (c == '+' || c == '-') && !head.ends_with('e') && !head.ends_with('E') {
                let re: f64 = head.parse().map_err(|_| err())?;
                let imv: f64 = if tail == "+" || tail == "-" {
                    if tail == "+" { 1.0 } else { -1.0 }
                } else {
                    tail.parse().map_err(|_| err())?
                };
                return Ok(Complex64::new(re, imv));
            }
        }
        let imv: f64 = if im.is_empty() || im == "+" {
            1.0
        } else if im == "-" {
            -1.0
        } else {
            im.parse().map_err(|_| err())?
        };
        return Ok(Complex64::new(0.0, imv));
    }
    Err(err())
}

fn parse_coeff_list(s: &str) -> Result<Poly> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| Error::Config(format!("coefficient list '{s}' must be bracketed")))?;
    let coeffs: Result<Vec<Complex64>> = inner
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_complex)
        .collect();
    Ok(Poly::new(coeffs?))
}

/// Parse a map family spec:
/// `rational:[c0,c1,...]/[d0,d1,...]` or
/// `compose(<family>, dilation:<p_re>,<p_im>,<r>)` or
/// `compose(<family>, mobius:<a>;<b>;<c>;<d>)`.
pub fn parse_family(spec: &str) -> Result<RationalMap> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("rational:") {
        let (num, den) = rest
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("rational spec '{rest}' needs num/den")))?;
        return RationalMap::new(parse_coeff_list(num)?.0.into(), parse_coeff_list(den)?.0.into())
            .map(|r| r);
    }
    if let Some(rest) = spec.strip_prefix("compose(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Config("unbalanced compose(...)".into()))?;
        // split on the last top-level comma
        let mut depth = 0usize;
        let mut split_at = None;
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' | '[' => depth += 1,
                ')' | ']' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => split_at = Some(i),
                _ => {}
            }
        }
        // the FIRST top-level comma separates family from chart; charts contain
        // commas too, so find the first one instead
        let mut depth = 0usize;
        let mut first = None;
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' | '[' => depth += 1,
                ')' | ']' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    first = Some(i);
                    break;
                }
                _ => {}
            }
        }
        let _ = split_at;
        let i = first.ok_or_else(|| Error::Config("compose needs a chart argument".into()))?;
        let base = parse_family(&inner[..i])?;
        let chart = parse_chart(inner[i + 1..].trim())?;
        return base.compose(&chart);
    }
    Err(Error::Config(format!("unknown family spec '{spec}'")))
}

/// Parse a chart spec: `dilation:<p_re>,<p_im>,<r>` or `mobius:<a>;<b>;<c>;<d>`.
pub fn parse_chart(spec: &str) -> Result<ConformalChart> {
    if let Some(rest) = spec.strip_prefix("dilation:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "dilation spec '{rest}' needs p_re,p_im,r"
            )));
        }
        let pre: f64 = parts[0].trim().parse().map_err(|_| Error::Config("bad dilation center".into()))?;
        let pim: f64 = parts[1].trim().parse().map_err(|_| Error::Config("bad dilation center".into()))?;
        let r: f64 = parts[2].trim().parse().map_err(|_| Error::Config("bad dilation scale".into()))?;
        if r <= 0.0 {
            return Err(Error::Config("dilation scale must be positive".into()));
        }
        return Ok(ConformalChart::Dilation {
            center: Complex64::new(pre, pim),
            scale: r,
        });
    }
    if let Some(rest) = spec.strip_prefix("mobius:") {
        let parts: Vec<&str> = rest.split(';').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!("mobius spec '{rest}' needs a;b;c;d")));
        }
        let vals: Result<Vec<Complex64>> = parts.iter().map(|p| parse_complex(p)).collect();
        let v = vals?;
        return ConformalChart::mobius(v[0], v[1], v[2], v[3]);
    }
    if let Some(rest) = spec.strip_prefix("neck:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("neck spec '{rest}' needs p_re,p_im,rho")));
        }
        let pre: f64 = parts[0].trim().parse().map_err(|_| Error::Config("bad neck center".into()))?;
        let pim: f64 = parts[1].trim().parse().map_err(|_| Error::Config("bad neck center".into()))?;
        let rho: f64 = parts[2].trim().parse().map_err(|_| Error::Config("bad neck rho".into()))?;
        return Ok(ConformalChart::Neck {
            center: Complex64::new(pre, pim),
            rho,
        });
    }
    Err(Error::Config(format!("unknown chart spec '{spec}'")))
}

impl From<Vec<Complex64>> for Poly {
    fn from(v: Vec<Complex64>) -> Self {
        Poly::new(v)
    }
}
