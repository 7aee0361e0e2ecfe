//! Dense complex linear algebra helpers shared by the symbol and energy
//! machinery: matrix exponentials, null spaces, and Hermitian generalized
//! eigenproblems.

use ndarray::prelude::*;
use ndarray_linalg::{Cholesky, Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub fn to_complex(a: &Array2<f64>) -> CMat {
    a.mapv(|x| Complex64::new(x, 0.0))
}

pub fn identity(m: usize) -> CMat {
    Array2::eye(m).mapv(|x: f64| Complex64::new(x, 0.0))
}

/// Conjugate transpose.
pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Hermitian part (A + A^H)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    let ah = adjoint(a);
    (a + &ah).mapv(|z| z * 0.5)
}

pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> Result<f64> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// Matrix exponential by scaling-and-squaring with the degree-13 Pade
/// approximant (Higham's coefficients, without the order selection ladder:
/// inputs here are small 10x10 symbols, so the top-order form is used
/// unconditionally).
pub fn expm(a: &CMat) -> Result<CMat> {
    const THETA_13: f64 = 5.371920351148152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];
    let m = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(0.5f64.powi(s), 0.0);
    let a = a.mapv(|z| z * scale);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(m);
    let w1 = &a6.mapv(|z| z * B[13]) + &a4.mapv(|z| z * B[11]) + &a2.mapv(|z| z * B[9]);
    let w2 = &a6.mapv(|z| z * B[7])
        + &a4.mapv(|z| z * B[5])
        + &a2.mapv(|z| z * B[3])
        + &eye.mapv(|z| z * B[1]);
    let u = a.dot(&(a6.dot(&w1) + &w2));
    let z1 = &a6.mapv(|z| z * B[12]) + &a4.mapv(|z| z * B[10]) + &a2.mapv(|z| z * B[8]);
    let v = a6.dot(&z1)
        + &a6.mapv(|z| z * B[6])
        + &a4.mapv(|z| z * B[4])
        + &a2.mapv(|z| z * B[2])
        + &eye.mapv(|z| z * B[0]);
    let denom = (&v - &u).inv()?;
    let mut r = denom.dot(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Repeated evaluation of e^{-t Phi} for a fixed matrix. Uses the
/// eigendecomposition when the eigenvector matrix is well conditioned and
/// falls back to Pade scaling-and-squaring otherwise.
pub struct Propagator {
    matrix: CMat,
    eig: Option<(CVec, CMat, CMat)>, // (values, vectors, inverse vectors)
}

impl Propagator {
    pub const COND_LIMIT: f64 = 1e8;

    pub fn new(matrix: CMat) -> Result<Self> {
        let eig = match matrix.eig() {
            Ok((vals, vecs)) => match vecs.inv() {
                Ok(vinv) => {
                    let cond = one_norm(&vecs) * one_norm(&vinv);
                    (cond < Self::COND_LIMIT).then_some((vals, vecs, vinv))
                }
                Err(_) => None,
            },
            Err(_) => None,
        };
        Ok(Self { matrix, eig })
    }

    pub fn uses_eig(&self) -> bool {
        self.eig.is_some()
    }

    /// e^{-t Phi}.
    pub fn green(&self, t: f64) -> Result<CMat> {
        match &self.eig {
            Some((vals, vecs, vinv)) => {
                let phases: CVec = vals.mapv(|l| (-l * t).exp());
                let mut scaled = vecs.clone();
                for (mut col, p) in scaled.columns_mut().into_iter().zip(phases.iter()) {
                    col.mapv_inplace(|z| z * p);
                }
                Ok(scaled.dot(vinv))
            }
            None => expm(&self.matrix.mapv(|z| z * Complex64::new(-t, 0.0))),
        }
    }

    /// e^{-t Phi} z without forming the full matrix when possible.
    pub fn apply(&self, t: f64, z: &CVec) -> Result<CVec> {
        match &self.eig {
            Some((vals, vecs, vinv)) => {
                let mut c = vinv.dot(z);
                for (ci, l) in c.iter_mut().zip(vals.iter()) {
                    *ci *= (-l * t).exp();
                }
                Ok(vecs.dot(&c))
            }
            None => Ok(self.green(t)?.dot(z)),
        }
    }
}

/// Orthonormal basis of the null space of `c` (columns), via SVD.
/// Singular values below `rtol * sigma_max` count as zero.
pub fn nullspace(c: &CMat, rtol: f64) -> Result<CMat> {
    let m = c.ncols();
    let (_, s, vt) = c.svd(false, true)?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd did not return V^H".into()))?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&x| x > rtol * smax && smax > 0.0).count();
    let dim = m - rank;
    let mut basis = CMat::zeros((m, dim));
    for (j, row) in vt.rows().into_iter().skip(rank).enumerate() {
        for i in 0..m {
            basis[[i, j]] = row[i].conj();
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the column space of a real matrix.
pub fn column_space(r: &Array2<f64>, rtol: f64) -> Result<Array2<f64>> {
    let (u, s, _) = r.svd(true, false)?;
    let u = u.ok_or_else(|| Error::Linalg("svd did not return U".into()))?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&x| x > rtol * smax && smax > 0.0).count();
    Ok(u.slice(s![.., ..rank]).to_owned())
}

/// Eigenvalues of the Hermitian pencil (A, B) with B positive definite:
/// the stationary values of z^H A z / z^H B z.
pub fn generalized_eigh(a: &CMat, b: &CMat) -> Result<Array1<f64>> {
    let l = b.cholesky(UPLO::Lower)?;
    let linv = l.inv()?;
    let c = linv.dot(a).dot(&adjoint(&linv));
    let c = hermitian_part(&c); // scrub numerical asymmetry
    let (vals, _) = c.eigh(UPLO::Lower)?;
    Ok(vals)
}

/// Sort eigenvalues lexicographically by (Re, Im) with quantization, for
/// multiset comparisons.
pub fn sorted_eigenvalues(vals: &CVec, quantum: f64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = vals.to_vec();
    let q = |x: f64| (x / quantum).round() as i64;
    v.sort_by_key(|z| (q(z.re), q(z.im)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_zero_is_identity() {
        let a = CMat::zeros((4, 4));
        let e = expm(&a).unwrap();
        assert_relative_eq!(frobenius_norm(&(&e - &identity(4))), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_diagonal() {
        let mut a = CMat::zeros((2, 2));
        a[[0, 0]] = c(1.0, 0.0);
        a[[1, 1]] = c(-2.0, 3.0);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[[0, 0]].re, 1f64.exp(), max_relative = 1e-13);
        let want = c(-2.0, 3.0).exp();
        assert_relative_eq!(e[[1, 1]].re, want.re, max_relative = 1e-12);
        assert_relative_eq!(e[[1, 1]].im, want.im, max_relative = 1e-12);
    }

    #[test]
    fn expm_matches_taylor_series() {
        // dense 5x5 with moderate norm; Taylor with rigorous tail cutoff
        let mut a = CMat::zeros((5, 5));
        for i in 0..5 {
            for j in 0..5 {
                a[[i, j]] = c(((i * 5 + j) as f64).sin(), ((i + 2 * j) as f64).cos() * 0.3);
            }
        }
        let e = expm(&a).unwrap();
        let mut taylor = identity(5);
        let mut term = identity(5);
        for k in 1..60 {
            term = term.dot(&a).mapv(|z| z / k as f64);
            taylor = taylor + &term;
        }
        assert!(frobenius_norm(&term) < 1e-16);
        let err = frobenius_norm(&(&e - &taylor)) / frobenius_norm(&taylor);
        assert!(err < 1e-12, "expm vs taylor error {err}");
    }

    #[test]
    fn propagator_semigroup() {
        let mut a = CMat::zeros((3, 3));
        a[[0, 1]] = c(1.0, 0.5);
        a[[1, 0]] = c(-1.0, 0.0);
        a[[2, 2]] = c(0.3, 0.0);
        let p = Propagator::new(a).unwrap();
        let g1 = p.green(0.7).unwrap();
        let g2 = p.green(1.3).unwrap();
        let g12 = p.green(2.0).unwrap();
        let err = frobenius_norm(&(&g1.dot(&g2) - &g12)) / frobenius_norm(&g12);
        assert!(err < 1e-12);
    }

    #[test]
    fn nullspace_of_row() {
        let mut cmat = CMat::zeros((1, 3));
        cmat[[0, 0]] = c(1.0, 0.0);
        cmat[[0, 2]] = c(0.0, 1.0);
        let basis = nullspace(&cmat, 1e-12).unwrap();
        assert_eq!(basis.ncols(), 2);
        let prod = cmat.dot(&basis);
        assert!(frobenius_norm(&prod) < 1e-13);
        // orthonormal columns
        let gram = adjoint(&basis).dot(&basis);
        assert!(frobenius_norm(&(&gram - &identity(2))) < 1e-13);
    }

    #[test]
    fn generalized_eigh_identity_weight() {
        let mut a = CMat::zeros((2, 2));
        a[[0, 0]] = c(2.0, 0.0);
        a[[1, 1]] = c(-1.0, 0.0);
        a[[0, 1]] = c(0.0, 0.5);
        a[[1, 0]] = c(0.0, -0.5);
        let b = identity(2);
        let vals = generalized_eigh(&a, &b).unwrap();
        let (v0, v1) = (vals[0].min(vals[1]), vals[0].max(vals[1]));
        // analytic eigenvalues of [[2, i/2], [-i/2, -1]]
        let disc = (9.0f64 / 4.0 + 0.25).sqrt();
        assert_relative_eq!(v0, 0.5 - disc, max_relative = 1e-12);
        assert_relative_eq!(v1, 0.5 + disc, max_relative = 1e-12);
    }
}
