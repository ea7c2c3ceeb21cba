//! Linear maps on M_n represented by coefficient matrices.
//!
//! A map phi acts as phi(A) = sum_ij c_ij B_i A B_j^dagger where {B_i} is
//! either the Frobenius Hermitian basis or the canonical basis {E_ij}. The
//! n^2 x n^2 matrix c determines the map uniquely; it is Hermitian exactly
//! when the map preserves Hermiticity and positive semidefinite exactly when
//! the map is completely positive. The canonical-basis coefficient matrix is
//! the reshuffled Choi matrix.

use ndarray::Array2;

use crate::basis::{self, FrobeniusBasis};
use crate::error::{Error, Result};
use crate::mat::{self, CMat, CVec, C64};

/// Which operator basis the coefficient matrix refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisTag {
    Frobenius,
    Canonical,
}

impl BasisTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisTag::Frobenius => "frobenius",
            BasisTag::Canonical => "canonical",
        }
    }
}

impl std::str::FromStr for BasisTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(BasisTag::Frobenius),
            "canonical" => Ok(BasisTag::Canonical),
            other => Err(Error::InvalidInput(format!(
                "unknown basis tag `{other}` (expected `frobenius` or `canonical`)"
            ))),
        }
    }
}

/// A linear map on M_n stored as its coefficient matrix in a tagged basis.
#[derive(Clone, Debug)]
pub struct MapMatrix {
    n: usize,
    basis: BasisTag,
    c: CMat,
}

/// Report produced by the complete-positivity test.
#[derive(Clone, Copy, Debug)]
pub struct CpReport {
    pub is_cp: bool,
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
}

/// Spectral operator-sum form: phi(A) = sum_k w_k G_k A G_k^dagger with
/// signed real weights and Hilbert-Schmidt-orthonormal operators G_k.
#[derive(Clone, Debug)]
pub struct OperatorSum {
    pub weights: Vec<f64>,
    pub operators: Vec<CMat>,
}

/// Covariant map in the canonical-basis parametrization
/// phi(A) = sum_{i != j} a_ij E_ij A E_ji + sum_ij b_ij E_ii A E_jj.
#[derive(Clone, Debug)]
pub struct CanonicalCovariantForm {
    /// Off-diagonal coefficients a_ij; diagonal entries are ignored.
    pub a: CMat,
    /// Coefficients b_ij of the diagonal-compression part.
    pub b: CMat,
}

/// A decomposable map together with the CP + coCP pair certifying it.
#[derive(Clone, Debug)]
pub struct CertifiedDecomposable {
    pub map: MapMatrix,
    pub cp_part: MapMatrix,
    pub cocp_part: MapMatrix,
}

impl MapMatrix {
    pub fn new(n: usize, basis: BasisTag, c: CMat) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if c.nrows() != n * n || c.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: c.nrows(),
            });
        }
        Ok(MapMatrix { n, basis, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis_tag(&self) -> BasisTag {
        self.basis
    }

    pub fn coefficients(&self) -> &CMat {
        &self.c
    }

    /// The zero map.
    pub fn zero(n: usize, basis: BasisTag) -> Result<Self> {
        Self::new(n, basis, mat::czero(n * n, n * n))
    }

    /// The identity map; in the Frobenius basis c = n e_{n^2} e_{n^2}^T
    /// since I = sqrt(n) F_{n^2}.
    pub fn identity(n: usize) -> Result<Self> {
        let mut c = mat::czero(n * n, n * n);
        c[(n * n - 1, n * n - 1)] = mat::scalar(n as f64);
        Self::new(n, BasisTag::Frobenius, c)
    }

    /// The transposition map tau(A) = A^T. Its Frobenius coefficient matrix
    /// is diagonal: +1 on the symmetric block, -1 on the antisymmetric block,
    /// +1 on the diagonal block.
    pub fn transpose_map(n: usize) -> Result<Self> {
        let d = n * (n - 1) / 2;
        let mut c = mat::czero(n * n, n * n);
        for i in 0..n * n {
            let sign = if i >= d && i < 2 * d { -1.0 } else { 1.0 };
            c[(i, i)] = mat::scalar(sign);
        }
        Self::new(n, BasisTag::Frobenius, c)
    }

    /// Map built from explicit Kraus operators, phi(A) = sum_k X_k A X_k^dagger.
    /// Exact in the Frobenius representation: c = sum_k x_k x_k^dagger with
    /// x_k the basis coordinates of X_k.
    pub fn from_kraus(n: usize, kraus: &[CMat]) -> Result<Self> {
        let fb = FrobeniusBasis::new(n)?;
        let nn = n * n;
        let mut c = mat::czero(nn, nn);
        for x in kraus {
            let coords = fb.expand(x)?;
            for i in 0..nn {
                for j in 0..nn {
                    c[(i, j)] += coords[i] * coords[j].conj();
                }
            }
        }
        Self::new(n, BasisTag::Frobenius, c)
    }

    /// Conjugation map Ad_W(A) = W A W^dagger.
    pub fn ad(w: &CMat) -> Result<Self> {
        Self::from_kraus(w.nrows(), std::slice::from_ref(w))
    }

    /// Build a map from its action on matrices. The result carries the
    /// canonical tag; the coefficient matrix there is the reshuffled Choi
    /// matrix, filled column by column from the images of the matrix units.
    pub fn from_action<F: FnMut(&CMat) -> CMat>(n: usize, mut f: F) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut c = mat::czero(n * n, n * n);
        for k in 0..n {
            for l in 0..n {
                let img = f(&basis::matrix_unit(n, k, l));
                if img.nrows() != n || img.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: img.nrows(),
                    });
                }
                for p in 0..n {
                    for q in 0..n {
                        c[(p * n + k, q * n + l)] = img[(p, q)];
                    }
                }
            }
        }
        Self::new(n, BasisTag::Canonical, c)
    }

    fn basis_matrices(&self) -> Result<Vec<CMat>> {
        match self.basis {
            BasisTag::Frobenius => Ok(FrobeniusBasis::new(self.n)?.matrices().to_vec()),
            BasisTag::Canonical => basis::canonical_basis(self.n),
        }
    }

    /// Apply the map: phi(A) = sum_ij c_ij B_i A B_j^dagger.
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.nrows(),
            });
        }
        let bs = self.basis_matrices()?;
        let nn = self.n * self.n;
        let products: Vec<CMat> = bs.iter().map(|b| b.dot(a)).collect();
        let mut out = mat::czero(self.n, self.n);
        for j in 0..nn {
            let mut pj = mat::czero(self.n, self.n);
            for i in 0..nn {
                let cij = self.c[(i, j)];
                if cij != mat::ZERO {
                    pj = pj + products[i].mapv(|z| z * cij);
                }
            }
            out = out + pj.dot(&mat::dagger(&bs[j]));
        }
        Ok(out)
    }

    /// Convert between the Frobenius and canonical representations; the
    /// change of basis is unitary, c_can = S c_frob S^dagger.
    pub fn with_basis(&self, target: BasisTag) -> Result<Self> {
        if self.basis == target {
            return Ok(self.clone());
        }
        let s = FrobeniusBasis::new(self.n)?.change_of_basis();
        let c = match (self.basis, target) {
            (BasisTag::Frobenius, BasisTag::Canonical) => s.dot(&self.c).dot(&mat::dagger(&s)),
            (BasisTag::Canonical, BasisTag::Frobenius) => mat::dagger(&s).dot(&self.c).dot(&s),
            _ => unreachable!(),
        };
        Self::new(self.n, target, c)
    }

    pub fn to_frobenius(&self) -> Result<Self> {
        self.with_basis(BasisTag::Frobenius)
    }

    pub fn to_canonical(&self) -> Result<Self> {
        self.with_basis(BasisTag::Canonical)
    }

    /// Superoperator matrix S with vec(phi(A)) = S vec(A) in row-major
    /// vectorization. Related to the canonical coefficient matrix by the
    /// index reshuffle S[(p,q),(k,l)] = c_can[(p,k),(q,l)].
    pub fn superoperator(&self) -> Result<CMat> {
        let can = self.to_canonical()?;
        let n = self.n;
        let mut s = mat::czero(n * n, n * n);
        for p in 0..n {
            for q in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s[(p * n + q, k * n + l)] = can.c[(p * n + k, q * n + l)];
                    }
                }
            }
        }
        Ok(s)
    }

    /// Inverse of [`superoperator`]: build the map from its superoperator.
    pub fn from_superoperator(n: usize, s: &CMat) -> Result<Self> {
        if s.nrows() != n * n || s.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: s.nrows(),
            });
        }
        let mut c = mat::czero(n * n, n * n);
        for p in 0..n {
            for q in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        c[(p * n + k, q * n + l)] = s[(p * n + q, k * n + l)];
                    }
                }
            }
        }
        Self::new(n, BasisTag::Canonical, c)
    }

    /// Compose with transposition from the left: returns tau o phi,
    /// (tau o phi)(A) = phi(A)^T. Exact (a row permutation of the
    /// superoperator), preserving the original basis tag.
    pub fn compose_transpose(&self) -> Result<Self> {
        let n = self.n;
        let s = self.superoperator()?;
        let mut st = mat::czero(n * n, n * n);
        for p in 0..n {
            for q in 0..n {
                for col in 0..n * n {
                    // row (p,q) of the composite is row (q,p) of the original
                    st[(p * n + q, col)] = s[(q * n + p, col)];
                }
            }
        }
        Self::from_superoperator(n, &st)?.with_basis(self.basis)
    }

    /// Dual map phi* with tr(A^dagger phi(B)) = tr(phi*(A)^dagger B).
    /// In the Frobenius (Hermitian) basis this is the entrywise conjugate of
    /// c; in the canonical basis the conjugate composed with the index
    /// transposition permutation.
    pub fn dual_map(&self) -> Result<Self> {
        let n = self.n;
        match self.basis {
            BasisTag::Frobenius => Self::new(n, self.basis, mat::conj(&self.c)),
            BasisTag::Canonical => {
                let mut c = mat::czero(n * n, n * n);
                for k in 0..n {
                    for l in 0..n {
                        for k2 in 0..n {
                            for l2 in 0..n {
                                // E_(k,l)^dagger = E_(l,k)
                                c[(l * n + k, l2 * n + k2)] =
                                    self.c[(k * n + l, k2 * n + l2)].conj();
                            }
                        }
                    }
                }
                Self::new(n, self.basis, c)
            }
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        mat::hermiticity_defect(&self.c)
    }

    /// True when the coefficient matrix is Hermitian within `tol`.
    pub fn is_hermiticity_preserving(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Complete positivity test: Hermitize the coefficient matrix, then
    /// demand lambda_min >= -tol together with Hermiticity within tol.
    pub fn cp_report(&self, tol: f64) -> Result<CpReport> {
        let defect = self.hermiticity_defect();
        let min = mat::min_eig_hermitian_part(&self.c)?;
        Ok(CpReport {
            is_cp: defect <= tol && min >= -tol,
            min_eigenvalue: min,
            hermiticity_defect: defect,
        })
    }

    pub fn is_cp(&self, tol: f64) -> Result<bool> {
        Ok(self.cp_report(tol)?.is_cp)
    }

    /// Complete copositivity: tau o phi is CP.
    pub fn cocp_report(&self, tol: f64) -> Result<CpReport> {
        self.compose_transpose()?.cp_report(tol)
    }

    pub fn is_cocp(&self, tol: f64) -> Result<bool> {
        Ok(self.cocp_report(tol)?.is_cp)
    }

    /// Spectral operator-sum form from the eigendecomposition of the
    /// Hermitian coefficient matrix. Eigenvalues of modulus <= `rank_tol`
    /// are dropped. Weights keep their signs, so completely copositive and
    /// indefinite maps are representable.
    pub fn to_operator_sum(&self, rank_tol: f64) -> Result<OperatorSum> {
        let defect = self.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::NotHermiticityPreserving(defect));
        }
        let bs = self.basis_matrices()?;
        let (vals, vecs) = mat::eigh_pairs(&mat::hermitize(&self.c))?;
        let mut weights = Vec::new();
        let mut operators = Vec::new();
        for (k, &w) in vals.iter().enumerate() {
            if w.abs() <= rank_tol {
                continue;
            }
            let mut g = mat::czero(self.n, self.n);
            for (i, b) in bs.iter().enumerate() {
                g = g + b.mapv(|z| z * vecs[(i, k)]);
            }
            weights.push(w);
            operators.push(g);
        }
        Ok(OperatorSum { weights, operators })
    }

    /// Pointwise sum of two maps on the same algebra.
    pub fn add(&self, other: &MapMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let rhs = other.with_basis(self.basis)?;
        Self::new(self.n, self.basis, &self.c + &rhs.c)
    }

    pub fn scale(&self, factor: C64) -> Self {
        MapMatrix {
            n: self.n,
            basis: self.basis,
            c: self.c.mapv(|z| z * factor),
        }
    }

    /// Max-entry distance between the coefficient matrices, after aligning
    /// basis tags.
    pub fn distance(&self, other: &MapMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let rhs = other.with_basis(self.basis)?;
        Ok(mat::max_abs(&(&self.c - &rhs.c)))
    }
}

impl OperatorSum {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Apply sum_k w_k G_k A G_k^dagger.
    pub fn apply(&self, a: &CMat) -> CMat {
        let n = a.nrows();
        let mut out = mat::czero(n, n);
        for (w, g) in self.weights.iter().zip(&self.operators) {
            out = out + g.dot(a).dot(&mat::dagger(g)).mapv(|z| z * mat::scalar(*w));
        }
        out
    }

    /// Fold nonnegative weights into the operators: X_k = sqrt(w_k) G_k.
    /// Fails when a weight is genuinely negative (beyond `tol`).
    pub fn fold_weights(&self, tol: f64) -> Result<Vec<CMat>> {
        let mut out = Vec::with_capacity(self.len());
        for (w, g) in self.weights.iter().zip(&self.operators) {
            if *w < -tol {
                return Err(Error::NotCompletelyPositive(*w));
            }
            let w = w.max(0.0);
            out.push(g.mapv(|z| z * mat::scalar(w.sqrt())));
        }
        Ok(out)
    }
}

impl CanonicalCovariantForm {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

/// Build the map phi(A) = sum_{i != j} a_ij E_ij A E_ji + sum_ij b_ij E_ii A E_jj
/// as a Frobenius-tagged coefficient matrix. Maps of this shape are exactly
/// the ones covariant under the diagonal unitary group.
pub fn from_canonical_covariant(form: &CanonicalCovariantForm) -> Result<MapMatrix> {
    let n = form.a.nrows();
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if form.a.ncols() != n || form.b.nrows() != n || form.b.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: form.b.nrows(),
        });
    }
    let nn = n * n;
    let mut c = mat::czero(nn, nn);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let idx = i * n + j; // E_ij as a canonical basis element
                c[(idx, idx)] += form.a[(i, j)];
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            // E_ii A E_jj = E_ii A (E_jj)^dagger
            c[(i * n + i, j * n + j)] += form.b[(i, j)];
        }
    }
    MapMatrix::new(n, BasisTag::Canonical, c)?.to_frobenius()
}

/// Check the CP + coCP certificate and return the certified sum.
pub fn decomposable_certificate(
    cp: &MapMatrix,
    cocp: &MapMatrix,
    tol: f64,
) -> Result<CertifiedDecomposable> {
    let cp_rep = cp.cp_report(tol)?;
    if !cp_rep.is_cp {
        return Err(Error::CertificateViolation(format!(
            "first summand is not CP (min eigenvalue {:.3e}, hermiticity defect {:.3e})",
            cp_rep.min_eigenvalue, cp_rep.hermiticity_defect
        )));
    }
    let cocp_rep = cocp.cocp_report(tol)?;
    if !cocp_rep.is_cp {
        return Err(Error::CertificateViolation(format!(
            "second summand is not coCP (min eigenvalue {:.3e}, hermiticity defect {:.3e})",
            cocp_rep.min_eigenvalue, cocp_rep.hermiticity_defect
        )));
    }
    let cp_f = cp.to_frobenius()?;
    let cocp_f = cocp.to_frobenius()?;
    let map = cp_f.add(&cocp_f)?;
    Ok(CertifiedDecomposable {
        map,
        cp_part: cp_f,
        cocp_part: cocp_f,
    })
}

impl CertifiedDecomposable {
    pub fn n(&self) -> usize {
        self.map.n()
    }

    /// The certificate with a zero coCP part.
    pub fn from_cp(cp: MapMatrix) -> Result<Self> {
        let cp = cp.to_frobenius()?;
        let zero = MapMatrix::zero(cp.n(), BasisTag::Frobenius)?;
        Ok(CertifiedDecomposable {
            map: cp.clone(),
            cp_part: cp,
            cocp_part: zero,
        })
    }

    /// The certificate with a zero CP part.
    pub fn from_cocp(cocp: MapMatrix) -> Result<Self> {
        let cocp = cocp.to_frobenius()?;
        let zero = MapMatrix::zero(cocp.n(), BasisTag::Frobenius)?;
        Ok(CertifiedDecomposable {
            map: cocp.clone(),
            cp_part: zero,
            cocp_part: cocp,
        })
    }
}

/// Expansion coefficients of `a` in the Frobenius basis, as a column vector.
pub fn frobenius_coords(fb: &FrobeniusBasis, a: &CMat) -> Result<CVec> {
    fb.expand(a)
}

/// Convenience: n^2 x n^2 coefficient matrix from a nested callable on
/// row-major index pairs.
pub fn cmat_from_fn<F: FnMut(usize, usize) -> C64>(nn: usize, mut f: F) -> CMat {
    Array2::from_shape_fn((nn, nn), |(i, j)| f(i, j))
}
