//! Assembly of the bilinear forms driving the index computations: the
//! stiffness K, mass M0, and curvature term C over per-vertex tangent-frame
//! coordinates, with the composites A = K - C (index form) and B = M0 + C
//! (the map-dependent scalar product). A finite-difference second-variation
//! oracle and the polarization-assembled general conformally-invariant form
//! live here too.
//!
//! C is assembled as the exact Hessian of the discrete retracted energy: the
//! nearest-point retraction is second order, its path acceleration at a
//! vertex is A_{u_v}(X_v, X_v), and differentiating the P1 energy gives the
//! block-diagonal form C[(v,a),(v,b)] = -<A_{u_v}(f_a, f_b), (K u)_v>. This
//! agrees with the quadrature of the continuum integrand <A^2_u(X), Y> at
//! O(h^2) (see `curvature_quadrature_form`) while matching the
//! finite-difference oracle to truncation error.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::manifold::{self, Target};
use crate::maps::dirichlet_energy;
use crate::mesh::SurfaceMesh;
use crate::sparse::SymCsr;

/// Per-vertex orthonormal bases of T_{u(v)} N.
#[derive(Debug, Clone)]
pub struct TangentFrameBasis {
    /// frames[v][a] is the a-th frame vector (length m) at vertex v.
    pub frames: Vec<Vec<Vec<f64>>>,
    pub n: usize,
    pub m: usize,
}

impl TangentFrameBasis {
    pub fn num_vertices(&self) -> usize {
        self.frames.len()
    }

    pub fn dof(&self) -> usize {
        self.frames.len() * self.n
    }

    /// Largest orthonormality defect max |<f_a, f_b> - delta_ab| over vertices.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for fs in &self.frames {
            for a in 0..self.n {
                for b in 0..self.n {
                    let d = manifold::dot(&fs[a], &fs[b]) - if a == b { 1.0 } else { 0.0 };
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }
}

/// Deterministic tangent frames along u (projected canonical basis, largest-n
/// selection with index-order tie break, Gram-Schmidt).
pub fn build_frames(target: &dyn Target, values: &Array2<f64>) -> Result<TangentFrameBasis> {
    let m = target.ambient_dim();
    if values.ncols() != m {
        return Err(Error::Dimension(format!(
            "field has {} components, target ambient dimension is {m}",
            values.ncols()
        )));
    }
    let n = target.intrinsic_dim();
    let mut frames = Vec::with_capacity(values.nrows());
    for row in values.rows() {
        let p = target.closest_point(row.as_slice().unwrap());
        frames.push(manifold::tangent_frame(target, &p));
    }
    Ok(TangentFrameBasis { frames, n, m })
}

/// Reconstruct the ambient per-vertex vectors of a frame-coefficient section.
pub fn section_to_ambient(frames: &TangentFrameBasis, coeffs: &[f64]) -> Array2<f64> {
    let nv = frames.num_vertices();
    let mut out = Array2::zeros((nv, frames.m));
    for v in 0..nv {
        for a in 0..frames.n {
            let c = coeffs[v * frames.n + a];
            for k in 0..frames.m {
                out[[v, k]] += c * frames.frames[v][a][k];
            }
        }
    }
    out
}

/// Frame coefficients of an ambient per-vertex field (tangential projection).
pub fn ambient_to_section(frames: &TangentFrameBasis, ambient: &Array2<f64>) -> Vec<f64> {
    let nv = frames.num_vertices();
    let mut out = vec![0.0; nv * frames.n];
    for v in 0..nv {
        for a in 0..frames.n {
            let mut c = 0.0;
            for k in 0..frames.m {
                c += ambient[[v, k]] * frames.frames[v][a][k];
            }
            out[v * frames.n + a] = c;
        }
    }
    out
}

/// The assembled sparse symmetric forms in frame coordinates.
pub struct AssembledForms {
    pub stiffness: SymCsr,
    pub mass: SymCsr,
    pub curvature: SymCsr,
    pub frames: TangentFrameBasis,
    pub dim: usize,
    pub mesh_h: f64,
}

impl AssembledForms {
    /// A = K - C, the index form D^2 E(u).
    pub fn index_form(&self) -> SymCsr {
        self.stiffness.add_scaled(&self.curvature, -1.0)
    }

    /// B = M0 + C, the scalar product << , >>_u.
    pub fn scalar_product(&self) -> SymCsr {
        self.mass.add_scaled(&self.curvature, 1.0)
    }

    /// K + M0, the W^{1,2} pairing (equals A + B identically).
    pub fn w12_form(&self) -> SymCsr {
        self.stiffness.add_scaled(&self.mass, 1.0)
    }
}

/// Which assembled form a cross evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Index,
    Scalar,
    Curvature,
}

/// Bilinear evaluation x^T Form y.
pub fn cross_form(forms: &AssembledForms, x: &[f64], y: &[f64], which: FormKind) -> f64 {
    match which {
        FormKind::Index => forms.index_form().bilinear(x, y),
        FormKind::Scalar => forms.scalar_product().bilinear(x, y),
        FormKind::Curvature => forms.curvature.bilinear(x, y),
    }
}

/// Assemble K, M0, C for a map with values in the target's ambient
/// coordinates.
pub fn assemble(
    mesh: &SurfaceMesh,
    values: &Array2<f64>,
    target: &dyn Target,
) -> Result<AssembledForms> {
    let nv = mesh.num_vertices();
    let m = target.ambient_dim();
    let n = target.intrinsic_dim();
    if values.nrows() != nv || values.ncols() != m {
        return Err(Error::Dimension(format!(
            "assemble: values {}x{} vs mesh {} vertices and ambient dim {m}",
            values.nrows(),
            values.ncols(),
            nv
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("map values (off-manifold u?)".into()));
    }

    let frames = build_frames(target, values)?;
    let dim = nv * n;

    // K and M0: scalar P1 matrices tensored with the frame Gram entries.
    let mut k_trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut m_trip: Vec<(usize, usize, f64)> = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = &mesh.hat_grads[t];
        let area = mesh.areas[t];
        for i in 0..3 {
            for j in 0..3 {
                let kij = area
                    * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                let mij = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                let (vi, vj) = (tri[i], tri[j]);
                for a in 0..n {
                    for b in 0..n {
                        let gram = manifold::dot(&frames.frames[vi][a], &frames.frames[vj][b]);
                        if gram != 0.0 {
                            k_trip.push((vi * n + a, vj * n + b, kij * gram));
                            m_trip.push((vi * n + a, vj * n + b, mij * gram));
                        }
                    }
                }
            }
        }
    }
    let stiffness = SymCsr::from_triplets(dim, k_trip);
    let mass = SymCsr::from_triplets(dim, m_trip);

    // C: block-diagonal exact-Hessian curvature term,
    // C[(v,a),(v,b)] = -<A_{u_v}(f_a, f_b), (K u)_v>.
    let ku = mesh.stiffness_apply(values);
    let mut c_trip: Vec<(usize, usize, f64)> = Vec::new();
    for v in 0..nv {
        let p = target.closest_point(values.row(v).as_slice().unwrap());
        let kuv: Vec<f64> = (0..m).map(|k| ku[[v, k]]).collect();
        for a in 0..n {
            for b in a..n {
                let afab = target.sff(&p, &frames.frames[v][a], &frames.frames[v][b]);
                let entry = -manifold::dot(&afab, &kuv);
                c_trip.push((v * n + a, v * n + b, entry));
                if b != a {
                    c_trip.push((v * n + b, v * n + a, entry));
                }
            }
        }
    }
    let curvature = SymCsr::from_triplets(dim, c_trip);

    Ok(AssembledForms {
        stiffness,
        mass,
        curvature,
        frames,
        dim,
        mesh_h: mesh.h_max,
    })
}

/// Centroid-quadrature evaluation of the continuum curvature integrand
/// int <A(grad u, grad u), A(X, Y)> with P1 gradients and re-projected
/// interpolated frames. Used as an O(h^2) consistency cross-check of the
/// assembled C.
pub fn curvature_quadrature_form(
    mesh: &SurfaceMesh,
    values: &Array2<f64>,
    target: &dyn Target,
    frames: &TangentFrameBasis,
    x: &[f64],
    y: &[f64],
) -> f64 {
    let m = target.ambient_dim();
    let n = frames.n;
    let xa = section_to_ambient(frames, x);
    let ya = section_to_ambient(frames, y);
    let _ = n;
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.areas[t];
        // centroid value of u and the sections
        let mut ubar = vec![0.0; m];
        let mut xbar = vec![0.0; m];
        let mut ybar = vec![0.0; m];
        for &v in tri {
            for k in 0..m {
                ubar[k] += values[[v, k]] / 3.0;
                xbar[k] += xa[[v, k]] / 3.0;
                ybar[k] += ya[[v, k]] / 3.0;
            }
        }
        let pbar = target.closest_point(&ubar);
        let pr = target.tangent_projector(&pbar);
        let project = |w: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|i| (0..m).map(|j| pr[[i, j]] * w[j]).sum())
                .collect()
        };
        let xp = project(&xbar);
        let yp = project(&ybar);
        let (d1, d2) = mesh.directional_derivatives(values, t);
        let grads = vec![d1, d2];
        acc += area * manifold::curvature_pairing(target, &pbar, &grads, &xp, &yp);
    }
    acc
}

/// Central second difference of t -> functional(retract(u + t X)) with
/// Richardson extrapolation (h and h/2).
///
/// `x_ambient` holds per-vertex ambient vectors (tangent along u). Errors if
/// the retraction leaves the tubular neighborhood of the step.
pub fn fd_second_variation(
    functional: &dyn Fn(&Array2<f64>) -> f64,
    values: &Array2<f64>,
    target: &dyn Target,
    x_ambient: &Array2<f64>,
    h: f64,
) -> Result<f64> {
    let retract = |t: f64| -> Result<Array2<f64>> {
        let nv = values.nrows();
        let m = values.ncols();
        let mut out = Array2::zeros((nv, m));
        for v in 0..nv {
            let moved: Vec<f64> = (0..m).map(|k| values[[v, k]] + t * x_ambient[[v, k]]).collect();
            let r = target.closest_point(&moved);
            if r.iter().any(|z| !z.is_finite()) {
                return Err(Error::RetractionStep(format!(
                    "closest point not finite at vertex {v} for step {t}"
                )));
            }
            let step2: f64 = (0..m).map(|k| (moved[k] - values[[v, k]]).powi(2)).sum();
            let jump2: f64 = (0..m).map(|k| (r[k] - values[[v, k]]).powi(2)).sum();
            if jump2 > 4.0 * step2 + 1e-24 {
                return Err(Error::RetractionStep(format!(
                    "vertex {v} jumped {} for a step of {}",
                    jump2.sqrt(),
                    step2.sqrt()
                )));
            }
            for k in 0..m {
                out[[v, k]] = r[k];
            }
        }
        Ok(out)
    };

    let e0 = functional(values);
    let second_diff = |step: f64| -> Result<f64> {
        let ep = functional(&retract(step)?);
        let em = functional(&retract(-step)?);
        Ok((ep - 2.0 * e0 + em) / (step * step))
    };
    let d1 = second_diff(h)?;
    let d2 = second_diff(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

// ---------------------------------------------------------------------------
// General conformally invariant functionals E(u) + int u* varpi
// ---------------------------------------------------------------------------

/// A two-form on the ambient space, given by its coefficient functions
/// varpi = sum_{i<j} coeff(y, i, j) dy^i ^ dy^j.
pub trait TwoForm: Send + Sync {
    fn coeff(&self, y: &[f64], i: usize, j: usize) -> f64;
}

/// The zero form (plain Dirichlet energy).
pub struct ZeroForm;

impl TwoForm for ZeroForm {
    fn coeff(&self, _y: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }
}

/// strength * y^0 dy^1 ^ dy^2 (a volume-form calibration on R^3).
pub struct ScaledVolumeForm {
    pub strength: f64,
}

impl TwoForm for ScaledVolumeForm {
    fn coeff(&self, y: &[f64], i: usize, j: usize) -> f64 {
        if i == 1 && j == 2 {
            self.strength * y[0]
        } else {
            0.0
        }
    }
}

/// int_M u* varpi by centroid quadrature over oriented triangles.
pub fn pullback_integral(mesh: &SurfaceMesh, values: &Array2<f64>, form: &dyn TwoForm) -> f64 {
    let m = values.ncols();
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.areas[t];
        let mut ubar = vec![0.0; m];
        for &v in tri {
            for k in 0..m {
                ubar[k] += values[[v, k]] / 3.0;
            }
        }
        let (d1, d2) = mesh.directional_derivatives(values, t);
        let mut density = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let c = form.coeff(&ubar, i, j);
                if c != 0.0 {
                    density += c * (d1[i] * d2[j] - d2[i] * d1[j]);
                }
            }
        }
        acc += area * density;
    }
    acc
}

/// E(u) + int u* varpi.
pub fn general_energy(mesh: &SurfaceMesh, values: &Array2<f64>, form: &dyn TwoForm) -> f64 {
    dirichlet_energy(mesh, values) + pullback_integral(mesh, values, form)
}

/// Dense second-variation matrix of the general functional, obtained by
/// polarizing the finite-difference oracle over the frame basis. Small
/// meshes only.
pub fn assemble_general(
    mesh: &SurfaceMesh,
    values: &Array2<f64>,
    target: &dyn Target,
    form: &dyn TwoForm,
    h: f64,
) -> Result<Array2<f64>> {
    if mesh.num_vertices() > 2000 {
        return Err(Error::Resolution(format!(
            "assemble_general is dense polarization; mesh has {} vertices (cap 2000)",
            mesh.num_vertices()
        )));
    }
    let frames = build_frames(target, values)?;
    let dim = frames.dof();
    let functional = |vals: &Array2<f64>| general_energy(mesh, vals, form);

    let basis_section = |alpha: usize| -> Array2<f64> {
        let mut coeffs = vec![0.0; dim];
        coeffs[alpha] = 1.0;
        section_to_ambient(&frames, &coeffs)
    };

    let mut q_single = vec![0.0; dim];
    let sections: Vec<Array2<f64>> = (0..dim).map(basis_section).collect();
    for alpha in 0..dim {
        q_single[alpha] =
            fd_second_variation(&functional, values, target, &sections[alpha], h)?;
    }
    let mut g = Array2::zeros((dim, dim));
    for alpha in 0..dim {
        g[[alpha, alpha]] = q_single[alpha];
    }
    for alpha in 0..dim {
        for beta in (alpha + 1)..dim {
            let sum = &sections[alpha] + &sections[beta];
            let q_ab = fd_second_variation(&functional, values, target, &sum, h)?;
            let entry = 0.5 * (q_ab - q_single[alpha] - q_single[beta]);
            g[[alpha, beta]] = entry;
            g[[beta, alpha]] = entry;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{augment, CliffordTorus, Sphere2};
    use crate::maps::{MapField, RationalMap};
    use crate::mesh::SurfaceMesh;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn sphere_mesh(level: u32) -> Arc<SurfaceMesh> {
        Arc::new(SurfaceMesh::icosphere(level))
    }

    fn identity_field(level: u32) -> MapField {
        RationalMap::identity().sample(sphere_mesh(level))
    }

    fn random_section(frames: &TangentFrameBasis, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..frames.dof()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn frames_are_orthonormal_and_tangent() {
        let u = identity_field(2);
        let frames = build_frames(&Sphere2, &u.values).unwrap();
        assert!(frames.orthonormality_residual() <= 1e-12);
        // reconstructed sections are tangent along u
        let x = random_section(&frames, 0);
        let amb = section_to_ambient(&frames, &x);
        for v in 0..u.mesh.num_vertices() {
            let p: Vec<f64> = (0..3).map(|k| u.values[[v, k]]).collect();
            let dot_pu: f64 = (0..3).map(|k| amb[[v, k]] * p[k]).sum();
            assert!(dot_pu.abs() < 1e-10);
        }
    }

    #[test]
    fn constant_map_forms() {
        let mesh = sphere_mesh(2);
        let u = MapField::constant(mesh.clone(), [0.0, 0.0, 1.0]);
        let forms = assemble(&mesh, &u.values, &Sphere2).unwrap();
        assert_eq!(forms.curvature.max_abs(), 0.0);
        // A = K, B = M0
        let a = forms.index_form();
        let k = &forms.stiffness;
        let x = random_section(&forms.frames, 1);
        assert!((a.quadratic(&x) - k.quadratic(&x)).abs() < 1e-12 * k.quadratic(&x).abs());
    }

    #[test]
    fn forms_are_symmetric() {
        let u = identity_field(2);
        let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
        assert!(forms.index_form().asymmetry() <= 1e-12);
        assert!(forms.scalar_product().asymmetry() <= 1e-12);
    }

    #[test]
    fn stiffness_matches_direct_quadrature() {
        // x^T K y equals sum_T area <grad X, grad Y> with the same rule
        let u = identity_field(2);
        let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
        let x = random_section(&forms.frames, 2);
        let y = random_section(&forms.frames, 3);
        let xa = section_to_ambient(&forms.frames, &x);
        let ya = section_to_ambient(&forms.frames, &y);
        let mut direct = 0.0;
        for (t, tri) in u.mesh.triangles.iter().enumerate() {
            let g = &u.mesh.hat_grads[t];
            for comp in 0..3 {
                let mut gx = [0.0; 3];
                let mut gy = [0.0; 3];
                for k in 0..3 {
                    for (i, &v) in tri.iter().enumerate() {
                        gx[k] += xa[[v, comp]] * g[i][k];
                        gy[k] += ya[[v, comp]] * g[i][k];
                    }
                }
                direct += u.mesh.areas[t] * (gx[0] * gy[0] + gx[1] * gy[1] + gx[2] * gy[2]);
            }
        }
        let via_k = forms.stiffness.bilinear(&x, &y);
        assert!((direct - via_k).abs() <= 1e-11 * direct.abs().max(1.0));
    }

    #[test]
    fn fd_oracle_agrees_on_identity_map() {
        let u = identity_field(2);
        let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
        let a = forms.index_form();
        let functional = |vals: &Array2<f64>| dirichlet_energy(&u.mesh, vals);
        for seed in 0..5 {
            let x = random_section(&forms.frames, seed);
            let xa = section_to_ambient(&forms.frames, &x);
            let fd = fd_second_variation(&functional, &u.values, &Sphere2, &xa, 1e-3).unwrap();
            let assembled = a.quadratic(&x);
            let w12 = forms.w12_form().quadratic(&x);
            let tol = (1e-6 * assembled.abs()).max(1e-8 * w12);
            assert!(
                (fd - assembled).abs() <= tol,
                "fd {fd} vs assembled {assembled} (tol {tol})"
            );
        }
    }

    #[test]
    fn fd_oracle_on_constant_map_equals_stiffness() {
        let mesh = sphere_mesh(2);
        let u = MapField::constant(mesh.clone(), [0.0, 0.0, 1.0]);
        let forms = assemble(&mesh, &u.values, &Sphere2).unwrap();
        let functional = |vals: &Array2<f64>| dirichlet_energy(&mesh, vals);
        let x = random_section(&forms.frames, 11);
        let xa = section_to_ambient(&forms.frames, &x);
        let fd = fd_second_variation(&functional, &u.values, &Sphere2, &xa, 1e-3).unwrap();
        let kx = forms.stiffness.quadratic(&x);
        assert!((fd - kx).abs() <= 1e-8 * kx.abs());
    }

    #[test]
    fn fd_oracle_zero_section() {
        let u = identity_field(1);
        let z = Array2::zeros((u.mesh.num_vertices(), 3));
        let functional = |vals: &Array2<f64>| dirichlet_energy(&u.mesh, vals);
        let fd = fd_second_variation(&functional, &u.values, &Sphere2, &z, 1e-3).unwrap();
        assert_eq!(fd, 0.0);
    }

    #[test]
    fn fd_oracle_rejects_huge_steps() {
        let u = identity_field(1);
        let mut x = Array2::zeros((u.mesh.num_vertices(), 3));
        // tangent at the first vertex, preposterous magnitude
        let frames = build_frames(&Sphere2, &u.values).unwrap();
        for k in 0..3 {
            x[[0, k]] = 1e9 * frames.frames[0][0][k];
        }
        let functional = |vals: &Array2<f64>| dirichlet_energy(&u.mesh, vals);
        let err = fd_second_variation(&functional, &u.values, &Sphere2, &x, 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn conformal_fields_are_near_null_for_identity() {
        // X = P(u) e for a fixed ambient vector: D^2 E -> 0 under refinement
        let vals: Vec<f64> = (1..4)
            .map(|level| {
                let u = identity_field(level);
                let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
                let nv = u.mesh.num_vertices();
                let mut amb = Array2::zeros((nv, 3));
                for v in 0..nv {
                    let p: Vec<f64> = (0..3).map(|k| u.values[[v, k]]).collect();
                    let e = [1.0, 0.0, 0.0];
                    let pe: f64 = (0..3).map(|k| e[k] * p[k]).sum();
                    for k in 0..3 {
                        amb[[v, k]] = e[k] - pe * p[k];
                    }
                }
                let x = ambient_to_section(&forms.frames, &amb);
                let a = forms.index_form().quadratic(&x);
                let b = forms.scalar_product().quadratic(&x);
                (a / b).abs()
            })
            .collect();
        assert!(vals[2] < vals[1] && vals[1] < vals[0], "{vals:?}");
        assert!(vals[2] < 0.02, "normalized conformal defect {vals:?}");
    }

    #[test]
    fn curvature_matches_centroid_quadrature_at_order_h2() {
        let errs: Vec<f64> = (2..5)
            .map(|level| {
                let u = identity_field(level);
                let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
                let x = random_section(&forms.frames, 5);
                let y = random_section(&forms.frames, 6);
                let assembled = forms.curvature.bilinear(&x, &y);
                let quad = curvature_quadrature_form(&u.mesh, &u.values, &Sphere2, &forms.frames, &x, &y);
                (assembled - quad).abs() / quad.abs().max(1.0)
            })
            .collect();
        assert!(errs[1] < errs[0] / 2.5, "{errs:?}");
        assert!(errs[2] < errs[1] / 2.5, "{errs:?}");
    }

    #[test]
    fn polarization_identity_holds() {
        let u = identity_field(2);
        let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
        let x = random_section(&forms.frames, 7);
        let y = random_section(&forms.frames, 8);
        for which in [FormKind::Index, FormKind::Scalar, FormKind::Curvature] {
            let cross = cross_form(&forms, &x, &y, which);
            let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let qxy = match which {
                FormKind::Index => forms.index_form().quadratic(&xy),
                FormKind::Scalar => forms.scalar_product().quadratic(&xy),
                FormKind::Curvature => forms.curvature.quadratic(&xy),
            };
            let qx = match which {
                FormKind::Index => forms.index_form().quadratic(&x),
                FormKind::Scalar => forms.scalar_product().quadratic(&x),
                FormKind::Curvature => forms.curvature.quadratic(&x),
            };
            let qy = match which {
                FormKind::Index => forms.index_form().quadratic(&y),
                FormKind::Scalar => forms.scalar_product().quadratic(&y),
                FormKind::Curvature => forms.curvature.quadratic(&y),
            };
            let resid = (2.0 * cross - (qxy - qx - qy)).abs();
            assert!(resid <= 1e-12 * qxy.abs().max(1.0), "{which:?}: {resid}");
        }
    }

    #[test]
    fn scalar_product_spd_identity_on_augmented_sphere() {
        let aug = augment(Arc::new(Sphere2), 1.0, 500, 0).unwrap();
        let u = identity_field(2);
        // embed the field into augmented coordinates
        let nv = u.mesh.num_vertices();
        let mut emb = Array2::zeros((nv, aug.ambient_dim()));
        for v in 0..nv {
            let row: Vec<f64> = (0..3).map(|k| u.values[[v, k]]).collect();
            let e = aug.embed(&row);
            for (k, val) in e.iter().enumerate() {
                emb[[v, k]] = *val;
            }
        }
        let forms = assemble(&u.mesh, &emb, &aug).unwrap();
        let b = forms.scalar_product().to_dense();
        let lam_min = crate::linalg::smallest_eigenvalue(&b).unwrap();
        assert!(lam_min > 0.0, "smallest B eigenvalue {lam_min}");
        // energy identical under base and augmented embeddings
        let e_base = dirichlet_energy(&u.mesh, &u.values);
        let e_aug = dirichlet_energy(&u.mesh, &emb);
        assert!((e_base - e_aug).abs() <= 1e-12 * e_base);
    }

    #[test]
    fn scalar_product_spd_for_clifford_valued_map_after_augmentation() {
        // u: S^2 -> Clifford torus, u(x) = point(pi x3, 2 atan2-ish smooth angles)
        let mesh = sphere_mesh(2);
        let nv = mesh.num_vertices();
        let mut base_vals = Array2::zeros((nv, 4));
        for (i, v) in mesh.vertices.iter().enumerate() {
            let p = CliffordTorus::point(std::f64::consts::PI * v[2], 2.0 * v[0] + v[1]);
            for k in 0..4 {
                base_vals[[i, k]] = p[k];
            }
        }
        let aug = augment(Arc::new(CliffordTorus), 2.0, 500, 0).unwrap();
        let mut emb = Array2::zeros((nv, 12));
        for v in 0..nv {
            let row: Vec<f64> = (0..4).map(|k| base_vals[[v, k]]).collect();
            let e = aug.embed(&row);
            for (k, val) in e.iter().enumerate() {
                emb[[v, k]] = *val;
            }
        }
        let forms = assemble(&mesh, &emb, &aug).unwrap();
        let b = forms.scalar_product().to_dense();
        let lam_min = crate::linalg::smallest_eigenvalue(&b).unwrap();
        assert!(lam_min > 0.0, "smallest B eigenvalue {lam_min}");
        // isometry: energies agree between base and augmented coordinates
        let e_base = dirichlet_energy(&mesh, &base_vals);
        let e_aug = dirichlet_energy(&mesh, &emb);
        assert!((e_base - e_aug).abs() <= 1e-12 * e_base.max(1.0));
    }

    #[test]
    fn general_form_reduces_to_dirichlet_at_zero() {
        let u = identity_field(1);
        let forms = assemble(&u.mesh, &u.values, &Sphere2).unwrap();
        let a_dense = forms.index_form().to_dense();
        let g = assemble_general(&u.mesh, &u.values, &Sphere2, &ZeroForm, 1e-3).unwrap();
        let scale = a_dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                worst = worst.max((g[[i, j]] - a_dense[[i, j]]).abs());
            }
        }
        assert!(worst <= 1e-6 * scale, "max deviation {worst} vs scale {scale}");
    }

    #[test]
    fn general_form_constant_map_deviation_vanishes() {
        let mesh = sphere_mesh(1);
        let u = MapField::constant(mesh.clone(), [0.0, 0.0, 1.0]);
        let form = ScaledVolumeForm { strength: 0.5 };
        let g = assemble_general(&mesh, &u.values, &Sphere2, &form, 1e-3).unwrap();
        let g0 = assemble_general(&mesh, &u.values, &Sphere2, &ZeroForm, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                worst = worst.max((g[[i, j]] - g0[[i, j]]).abs());
            }
        }
        let scale = g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-6 * scale.max(1.0), "deviation {worst}");
    }

    #[test]
    fn general_form_linear_in_calibration_strength() {
        // second variation along a fixed conformal field shifts linearly in H
        let u = identity_field(1);
        let frames = build_frames(&Sphere2, &u.values).unwrap();
        let nv = u.mesh.num_vertices();
        let mut amb = Array2::zeros((nv, 3));
        for v in 0..nv {
            let p: Vec<f64> = (0..3).map(|k| u.values[[v, k]]).collect();
            let e = [0.0, 0.0, 1.0];
            let pe: f64 = (0..3).map(|k| e[k] * p[k]).sum();
            for k in 0..3 {
                amb[[v, k]] = e[k] - pe * p[k];
            }
        }
        let values: Vec<f64> = [0.0, 0.1, 0.2]
            .iter()
            .map(|&hstr| {
                let form = ScaledVolumeForm { strength: hstr };
                let functional = |vals: &Array2<f64>| general_energy(&u.mesh, vals, &form);
                fd_second_variation(&functional, &u.values, &Sphere2, &amb, 1e-3).unwrap()
            })
            .collect();
        let _ = frames;
        let d1 = values[1] - values[0];
        let d2 = values[2] - values[1];
        let denom = d1.abs().max(d2.abs()).max(1e-12);
        assert!(
            (d2 - d1).abs() / denom < 1e-3,
            "increments {d1} vs {d2} (values {values:?})"
        );
        assert!(d1.abs() > 1e-6, "calibration term did not move the value");
    }

    #[test]
    fn general_form_rejects_large_meshes() {
        let mesh = SurfaceMesh::icosphere(5);
        let u = MapField::constant(Arc::new(mesh), [0.0, 0.0, 1.0]);
        let err = assemble_general(&u.mesh, &u.values, &Sphere2, &ZeroForm, 1e-3);
        assert!(err.is_err());
    }
}
