//! Thin wrappers over LAPACK for dense symmetric matrices in column-major
//! `nalgebra` storage.

use nalgebra::DMatrix;

extern crate openblas_src;

fn dim(a: &DMatrix<f64>) -> i32 {
    assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
    i32::try_from(a.nrows()).expect("matrix dimension exceeds i32")
}

fn syevd(jobz: u8, a: &mut DMatrix<f64>) -> Result<Vec<f64>, i32> {
    let n = dim(a);
    let mut w = vec![0.0; n as usize];
    if n == 0 {
        return Ok(w);
    }
    let mut info = 0;
    let mut work = vec![0.0];
    let mut iwork = vec![0];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            n,
            a.as_mut_slice(),
            n,
            &mut w,
            &mut work,
            -1,
            &mut iwork,
            -1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(info);
    }
    let lwork = work[0] as i32;
    let liwork = iwork[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0; liwork.max(1) as usize];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            n,
            a.as_mut_slice(),
            n,
            &mut w,
            &mut work,
            lwork,
            &mut iwork,
            liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(info);
    }
    Ok(w)
}

/// Ascending eigenvalues; `a` is overwritten.
pub fn eigenvalues_in_place(a: &mut DMatrix<f64>) -> Result<Vec<f64>, i32> {
    syevd(b'N', a)
}

/// Ascending eigenvalues; on return `a` holds the orthonormal eigenvectors
/// as columns.
pub fn eigen_in_place(a: &mut DMatrix<f64>) -> Result<Vec<f64>, i32> {
    syevd(b'V', a)
}

/// Lower Cholesky factor in place. `Err(k)` with `k > 0` means the leading
/// minor of order `k` is not positive definite.
pub fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<(), i32> {
    let n = dim(a);
    if n == 0 {
        return Ok(());
    }
    let mut info = 0;
    unsafe {
        lapack::dpotrf(b'L', n, a.as_mut_slice(), n, &mut info);
    }
    if info != 0 {
        Err(info)
    } else {
        Ok(())
    }
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_path_laplacian() {
        let n = 5;
        let mut a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let w = eigenvalues_in_place(&mut a).unwrap();
        for (k, lam) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.0, 0.5, 0.0, 2.0]);
        let mut v = a.clone();
        let w = eigen_in_place(&mut v).unwrap();
        let back = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w)) * v.transpose();
        assert!((back - a).abs().max() < 1e-12);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(cholesky_in_place(&mut a), Err(2));
        let mut b = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        cholesky_in_place(&mut b).unwrap();
        assert_eq!(b[(0, 0)], 2.0);
        assert_eq!(b[(1, 0)], 1.0);
    }
}
