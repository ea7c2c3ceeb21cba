//! Canonical and Frobenius Hermitian bases of the matrix algebra M_n.
//!
//! The Frobenius basis consists of n^2 Hermitian matrices, orthonormal in the
//! Hilbert-Schmidt inner product, ordered as: n(n-1)/2 symmetric off-diagonal
//! elements, then n(n-1)/2 antisymmetric ones, then n diagonal ones ending
//! with I/sqrt(n). For n = 2 and n = 3 these are the normalized Pauli and
//! Gell-Mann matrices.

use crate::error::{Error, Result};
use crate::mat::{self, CMat, CVec, C64};

/// Ordered Frobenius Hermitian basis of M_n.
#[derive(Clone, Debug)]
pub struct FrobeniusBasis {
    n: usize,
    matrices: Vec<CMat>,
    /// Bijection k -> (mu, nu), mu < nu, shared by the symmetric and
    /// antisymmetric blocks; indices are 0-based.
    pair_map: Vec<(usize, usize)>,
}

/// Matrix unit E_ij: 1 at (i, j), zero elsewhere (0-based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut e = mat::czero(n, n);
    e[(i, j)] = mat::ONE;
    e
}

/// The canonical basis {E_ij} of M_n in row-major order.
pub fn canonical_basis(n: usize) -> Result<Vec<CMat>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(matrix_unit(n, i, j));
        }
    }
    Ok(out)
}

/// Traceless diagonal matrix K_k = (E_11 + ... + E_kk - k E_{k+1,k+1}) / sqrt(k(k+1)),
/// for k = 1..n-1 (1-based k as in the defining formula).
fn diag_k(n: usize, k: usize) -> CMat {
    let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
    let mut m = mat::czero(n, n);
    for j in 0..k {
        m[(j, j)] = mat::scalar(norm);
    }
    m[(k, k)] = mat::scalar(-(k as f64) * norm);
    m
}

/// Build the Frobenius Hermitian basis of M_n.
///
/// Pairs (mu, nu) with mu < nu are enumerated lexicographically, the same
/// enumeration for the symmetric and antisymmetric blocks, so that the two
/// blocks line up index by index.
pub fn build_frobenius_basis(n: usize) -> Result<FrobeniusBasis> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let inv_sqrt2 = mat::scalar(1.0 / 2f64.sqrt());
    let mut pair_map = Vec::with_capacity(n * (n - 1) / 2);
    for mu in 0..n {
        for nu in (mu + 1)..n {
            pair_map.push((mu, nu));
        }
    }

    let mut matrices = Vec::with_capacity(n * n);
    for &(mu, nu) in &pair_map {
        let m = (matrix_unit(n, mu, nu) + matrix_unit(n, nu, mu)).mapv(|z| z * inv_sqrt2);
        matrices.push(m);
    }
    for &(mu, nu) in &pair_map {
        let m = (matrix_unit(n, mu, nu) - matrix_unit(n, nu, mu))
            .mapv(|z| z * inv_sqrt2 * C64::new(0.0, -1.0));
        matrices.push(m);
    }
    for k in 1..n {
        matrices.push(diag_k(n, k));
    }
    matrices.push(mat::eye(n).mapv(|z| z * mat::scalar(1.0 / (n as f64).sqrt())));

    Ok(FrobeniusBasis {
        n,
        matrices,
        pair_map,
    })
}

impl FrobeniusBasis {
    pub fn new(n: usize) -> Result<Self> {
        build_frobenius_basis(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of basis elements, n^2.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of (mu, nu) pairs, n(n-1)/2. The symmetric block occupies
    /// indices 0..d, the antisymmetric block d..2d, the diagonal block 2d..n^2.
    pub fn pair_count(&self) -> usize {
        self.pair_map.len()
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &CMat {
        &self.matrices[i]
    }

    pub fn pair_map(&self) -> &[(usize, usize)] {
        &self.pair_map
    }

    /// The k-th diagonal basis element F^d_k, k = 0..n.
    pub fn diagonal_matrix(&self, k: usize) -> &CMat {
        &self.matrices[2 * self.pair_count() + k]
    }

    /// Hilbert-Schmidt expansion coefficients v_i = tr(F_i^dagger A).
    pub fn expand(&self, a: &CMat) -> Result<CVec> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.nrows(),
            });
        }
        let mut v = CVec::zeros(self.len());
        for (i, f) in self.matrices.iter().enumerate() {
            v[i] = mat::hs_inner(f, a);
        }
        Ok(v)
    }

    /// Inverse of [`expand`]: sum_i v_i F_i.
    pub fn reconstruct(&self, v: &CVec) -> Result<CMat> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let mut a = mat::czero(self.n, self.n);
        for (i, f) in self.matrices.iter().enumerate() {
            a = a + f.mapv(|z| z * v[i]);
        }
        Ok(a)
    }

    /// Unitary change-of-basis matrix whose i-th column is the row-major
    /// flattening of F_i. It maps Frobenius coordinates to canonical ones.
    pub fn change_of_basis(&self) -> CMat {
        let nn = self.len();
        let mut s = mat::czero(nn, nn);
        for (i, f) in self.matrices.iter().enumerate() {
            let col = mat::mat_to_vec(f);
            for p in 0..nn {
                s[(p, i)] = col[p];
            }
        }
        s
    }

    /// Gram matrix [tr(F_i F_j)]; equals the identity for a valid basis.
    pub fn gram(&self) -> CMat {
        let nn = self.len();
        let mut g = mat::czero(nn, nn);
        for i in 0..nn {
            for j in 0..nn {
                g[(i, j)] = mat::hs_inner(&self.matrices[i], &self.matrices[j]);
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{dagger, max_abs, random_cmat};
    use ndarray::Array1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(
            build_frobenius_basis(1),
            Err(Error::InvalidDimension(1))
        ));
        assert!(matches!(canonical_basis(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn n2_is_normalized_pauli() {
        let b = build_frobenius_basis(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        // F_1 = (E_12 + E_21)/sqrt(2) = sigma_x / sqrt(2)
        assert_eq!(b.matrix(0)[(0, 1)], c(s, 0.0));
        assert_eq!(b.matrix(0)[(1, 0)], c(s, 0.0));
        // F_2 = -i(E_12 - E_21)/sqrt(2) = sigma_y / sqrt(2)
        assert_eq!(b.matrix(1)[(0, 1)], c(0.0, -s));
        assert_eq!(b.matrix(1)[(1, 0)], c(0.0, s));
        // F_3 = (E_11 - E_22)/sqrt(2) = sigma_z / sqrt(2)
        assert_eq!(b.matrix(2)[(0, 0)], c(s, 0.0));
        assert_eq!(b.matrix(2)[(1, 1)], c(-s, 0.0));
        // F_4 = I/sqrt(2)
        assert_eq!(b.matrix(3)[(0, 0)], c(s, 0.0));
        assert_eq!(b.matrix(3)[(1, 1)], c(s, 0.0));
    }

    #[test]
    fn n3_diagonal_elements_are_gell_mann() {
        // K_1 = (E_11 - E_22)/sqrt(2), K_2 = (E_11 + E_22 - 2 E_33)/sqrt(6)
        let b = build_frobenius_basis(3).unwrap();
        let k1 = b.diagonal_matrix(0);
        let k2 = b.diagonal_matrix(1);
        let s2 = 1.0 / 2f64.sqrt();
        let s6 = 1.0 / 6f64.sqrt();
        assert!((k1[(0, 0)].re - s2).abs() < 1e-15);
        assert!((k1[(1, 1)].re + s2).abs() < 1e-15);
        assert_eq!(k1[(2, 2)], c(0.0, 0.0));
        assert!((k2[(0, 0)].re - s6).abs() < 1e-15);
        assert!((k2[(1, 1)].re - s6).abs() < 1e-15);
        assert!((k2[(2, 2)].re + 2.0 * s6).abs() < 1e-15);
    }

    #[test]
    fn basis_invariants_for_all_n() {
        for n in 2..=8 {
            let b = build_frobenius_basis(n).unwrap();
            assert_eq!(b.len(), n * n);
            // Hermiticity is exact by construction
            for f in b.matrices() {
                assert_eq!(max_abs(&(f - &dagger(f))), 0.0);
            }
            // orthonormality
            let gram = b.gram();
            assert!(max_abs(&(&gram - &mat::eye(n * n))) < 1e-12);
            // F_{n^2} = I/sqrt(n) exactly, earlier elements traceless
            let last = b.matrix(n * n - 1);
            assert_eq!(
                max_abs(&(last - &mat::eye(n).mapv(|z| z * mat::scalar(1.0 / (n as f64).sqrt())))),
                0.0
            );
            for i in 0..(n * n - 1) {
                assert!(mat::trace(b.matrix(i)).norm() < 1e-12);
            }
            // block ordering: symmetric, antisymmetric, diagonal
            let d = b.pair_count();
            for (k, f) in b.matrices().iter().enumerate() {
                let ft = mat::transpose(f);
                if k < d {
                    assert!(max_abs(&(&ft - f)) < 1e-15, "index {k} not symmetric");
                } else if k < 2 * d {
                    assert!(
                        max_abs(&(&ft + f)) < 1e-15,
                        "index {k} not antisymmetric"
                    );
                } else {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                assert_eq!(f[(i, j)], c(0.0, 0.0));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pair_map_is_lexicographic_bijection() {
        for n in 2..=8 {
            let b = build_frobenius_basis(n).unwrap();
            let pm = b.pair_map();
            assert_eq!(pm.len(), n * (n - 1) / 2);
            let mut seen = std::collections::HashSet::new();
            for &(mu, nu) in pm {
                assert!(mu < nu && nu < n);
                assert!(seen.insert((mu, nu)));
            }
            let mut sorted = pm.to_vec();
            sorted.sort();
            assert_eq!(sorted, pm.to_vec());
        }
    }

    #[test]
    fn canonical_products() {
        let e2 = canonical_basis(2).unwrap();
        assert_eq!(e2.len(), 4);
        // row-major order: E_11, E_12, E_21, E_22
        assert_eq!(e2[1][(0, 1)], c(1.0, 0.0));
        // E_12 E_21 = E_11
        let p = e2[1].dot(&e2[2]);
        assert_eq!(max_abs(&(&p - &e2[0])), 0.0);
        // E_13 E_32 = E_12 for n = 3
        let e3 = canonical_basis(3).unwrap();
        let e13 = &e3[0 * 3 + 2];
        let e32 = &e3[2 * 3 + 1];
        let e12 = &e3[0 * 3 + 1];
        assert_eq!(max_abs(&(&e13.dot(e32) - e12)), 0.0);
    }

    #[test]
    fn expand_examples() {
        let b = build_frobenius_basis(2).unwrap();
        // A = I -> (0, 0, 0, sqrt(2))
        let v = b.expand(&mat::eye(2)).unwrap();
        assert!(v[0].norm() < 1e-15 && v[1].norm() < 1e-15 && v[2].norm() < 1e-15);
        assert!((v[3] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        // A = 0 -> 0
        let v0 = b.expand(&mat::czero(2, 2)).unwrap();
        assert!(v0.iter().all(|z| z.norm() == 0.0));
        // A = E_12 -> (1/sqrt(2), i/sqrt(2), 0, 0)
        let v12 = b.expand(&matrix_unit(2, 0, 1)).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((v12[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((v12[1] - c(0.0, s)).norm() < 1e-15);
        assert!(v12[2].norm() < 1e-15 && v12[3].norm() < 1e-15);
    }

    #[test]
    fn expand_reconstruct_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=8 {
            let b = build_frobenius_basis(n).unwrap();
            for _ in 0..20 {
                let a = random_cmat(n, &mut rng);
                let v = b.expand(&a).unwrap();
                let back = b.reconstruct(&v).unwrap();
                assert!(max_abs(&(&back - &a)) < 1e-12);
            }
        }
    }

    #[test]
    fn expand_rejects_mismatched_dimension() {
        let b = build_frobenius_basis(2).unwrap();
        let a = mat::czero(3, 3);
        assert!(matches!(
            b.expand(&a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn change_of_basis_is_unitary() {
        for n in 2..=5 {
            let b = build_frobenius_basis(n).unwrap();
            let s = b.change_of_basis();
            let defect = max_abs(&(dagger(&s).dot(&s) - mat::eye(n * n)));
            assert!(defect < 1e-13);
        }
    }

    #[test]
    fn reconstruct_rejects_wrong_length() {
        let b = build_frobenius_basis(2).unwrap();
        let v = Array1::zeros(3);
        assert!(b.reconstruct(&v).is_err());
    }
}
