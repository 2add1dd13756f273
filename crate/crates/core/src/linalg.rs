//! Thin bindings to the system LAPACK (via OpenBLAS) for the dense symmetric
//! solvers, plus the small dense helpers used across the crate.
//!
//! LAPACK is column-major; all matrices here are symmetric (or we transpose
//! explicitly), so the row-major `ndarray` buffers can be handed over directly
//! with care taken when reading eigenvectors back (column j of the LAPACK
//! output is row j of the row-major view).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn dsygvd_(
        itype: *const i32,
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        b: *mut f64,
        ldb: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn dpotrf_(
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        info: *mut i32,
    );
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvector `j` stored in row
/// `j` of the returned matrix.
pub fn sym_eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "sym_eigh expects square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let ni = n as i32;
    let mut buf: Vec<f64> = a.iter().cloned().collect();
    let mut w = vec![0.0; n];
    let lwork = (1 + 6 * n + 2 * n * n) as i32;
    let liwork = (3 + 5 * n) as i32;
    let mut work = vec![0.0; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let mut info = 0i32;
    unsafe {
        dsyevd_(
            &b'V',
            &b'L',
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Solver(format!("dsyevd failed with info={info}")));
    }
    // Column-major columns are row-major rows: row j of `vecs` is eigenvector j.
    let vecs = Array2::from_shape_vec((n, n), buf).expect("shape");
    Ok((Array1::from_vec(w), vecs))
}

/// Generalized symmetric-definite eigenproblem `A x = lambda B x` with B SPD.
///
/// Eigenvalues ascending; eigenvector `j` in row `j`, B-orthonormal
/// (`x_i^T B x_j = delta_ij`).
pub fn sym_generalized_eigh(
    a: &Array2<f64>,
    b: &Array2<f64>,
) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n != a.ncols() || b.nrows() != n || b.ncols() != n {
        return Err(Error::Dimension(format!(
            "sym_generalized_eigh expects matching square matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let ni = n as i32;
    let itype = 1i32;
    let mut abuf: Vec<f64> = a.iter().cloned().collect();
    let mut bbuf: Vec<f64> = b.iter().cloned().collect();
    let mut w = vec![0.0; n];
    let lwork = (1 + 6 * n + 2 * n * n) as i32;
    let liwork = (3 + 5 * n) as i32;
    let mut work = vec![0.0; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let mut info = 0i32;
    unsafe {
        dsygvd_(
            &itype,
            &b'V',
            &b'L',
            &ni,
            abuf.as_mut_ptr(),
            &ni,
            bbuf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        if info > ni {
            return Err(Error::NotSpd(format!(
                "dsygvd: B is not positive definite (leading minor {} of its Cholesky failed)",
                info - ni
            )));
        }
        return Err(Error::Solver(format!("dsygvd failed with info={info}")));
    }
    let vecs = Array2::from_shape_vec((n, n), abuf).expect("shape");
    Ok((Array1::from_vec(w), vecs))
}

/// Cholesky test for symmetric positive definiteness.
pub fn is_spd(m: &Array2<f64>) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    let ni = n as i32;
    let mut buf: Vec<f64> = m.iter().cloned().collect();
    let mut info = 0i32;
    unsafe {
        dpotrf_(&b'L', &ni, buf.as_mut_ptr(), &ni, &mut info);
    }
    info == 0
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(m: &Array2<f64>) -> Result<f64> {
    let (w, _) = sym_eigh(m)?;
    Ok(w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn eigh_diagonal() {
        let a = arr2(&[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]);
        let (w, v) = sym_eigh(&a).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-12);
        assert!(w[1].abs() < 1e-12);
        assert!((w[2] - 2.0).abs() < 1e-12);
        // rows are orthonormal eigenvectors
        for i in 0..3 {
            let r = v.row(i);
            assert!((r.dot(&r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generalized_diagonal() {
        // A = diag(-1,0,2), B = diag(4,1,1) -> lambda = (-1/4, 0, 2)
        let a = arr2(&[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]);
        let b = arr2(&[[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let (w, v) = sym_generalized_eigh(&a, &b).unwrap();
        assert!((w[0] + 0.25).abs() < 1e-12);
        assert!(w[1].abs() < 1e-12);
        assert!((w[2] - 2.0).abs() < 1e-12);
        // B-orthonormality
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += v[[i, p]] * b[[p, q]] * v[[j, q]];
                    }
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "B-gram({i},{j}) = {s}");
            }
        }
    }

    #[test]
    fn spd_detection() {
        let good = arr2(&[[2.0, 1.0], [1.0, 2.0]]);
        let bad = arr2(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(is_spd(&good));
        assert!(!is_spd(&bad));
    }
}
