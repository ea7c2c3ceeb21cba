//! Finite-dimensional dilations of CP, coCP and decomposable maps.
//!
//! A CP map factors as phi(a) = V^dagger (a (x) I_r) V through its Kraus
//! family; a coCP map picks up the transpose representation a^T (x) I_r, and
//! a decomposable map the block direct sum of both (a Jordan morphism). For
//! maps covariant under the diagonal unitaries the dilation carries a unitary
//! family W(g) with V U(g) = W(g) V and pi(g(a)) = W(g) pi(a) W(g)^{-1};
//! W(g) = U(g) (x) N(g)^T is assembled from the witness matrix N(g) that
//! rotates the Kraus family under conjugation.

use rand::Rng;

use crate::covariance::{conj_diag_unitary, diag_unitary, TorusElement};
use crate::error::{Error, Result};
use crate::linmap::{MapMatrix, OperatorSum};
use crate::mat::{self, CMat};

/// Numerical Kraus rank cut: eigenvalues of the coefficient matrix below
/// this threshold are treated as zero.
pub const KRAUS_RANK_TOL: f64 = 1e-10;
/// Residual threshold for accepting a covariance intertwiner.
pub const INTERTWINER_TOL: f64 = 1e-9;

/// Which morphism type the dilation carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilationKind {
    Homomorphism,
    Antihomomorphism,
    Jordan,
}

#[derive(Clone, Debug)]
enum Rep {
    /// pi(a) = a (x) I_r; `kraus` is the folded Kraus family of the map.
    Homomorphism { rank: usize, kraus: Vec<CMat> },
    /// pi(a) = a^T (x) I_r; `kraus` is the Kraus family of tau o phi.
    Antihomomorphism { rank: usize, kraus: Vec<CMat> },
    /// Block direct sum of a homomorphism and an antihomomorphism part.
    Jordan(Box<Dilation>, Box<Dilation>),
}

/// A Stinespring/Stormer-type dilation phi(a) = V^dagger pi(a) V.
#[derive(Clone, Debug)]
pub struct Dilation {
    n: usize,
    v: CMat,
    rep: Rep,
}

/// Residual summary of the covariance-intertwiner verification.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceIntertwiner {
    /// max over sampled g of || V U(g) - W(g) V ||_max
    pub intertwine_residual: f64,
    /// max over sampled (g, a) of || pi(g(a)) - W(g) pi(a) W(g)^{-1} ||_max
    pub representation_residual: f64,
    /// max over sampled g of || W(g) W(g)^dagger - I ||_max
    pub unitarity_defect: f64,
    pub samples: usize,
}

/// The matrix N(g) transforming a Kraus family under group conjugation,
/// U(g) X_k U(g)^{-1} = sum_m N_km X_m (conjugate variant: U-bar on the left).
#[derive(Clone, Debug)]
pub struct KrausCovarianceWitness {
    pub n_matrix: CMat,
    /// Frobenius-aggregate least-squares residual.
    pub residual: f64,
    pub unitarity_defect: f64,
    /// Set when the Kraus Gram matrix is numerically singular; N is then
    /// determined only on the span.
    pub rank_deficient: bool,
}

impl Dilation {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the dilation space K.
    pub fn k_dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn kind(&self) -> DilationKind {
        match self.rep {
            Rep::Homomorphism { .. } => DilationKind::Homomorphism,
            Rep::Antihomomorphism { .. } => DilationKind::Antihomomorphism,
            Rep::Jordan(..) => DilationKind::Jordan,
        }
    }

    /// Kraus rank of the underlying operator sum (total over both parts for
    /// the Jordan kind).
    pub fn rank(&self) -> usize {
        match &self.rep {
            Rep::Homomorphism { rank, .. } | Rep::Antihomomorphism { rank, .. } => *rank,
            Rep::Jordan(p1, p2) => p1.rank() + p2.rank(),
        }
    }

    /// Evaluate the representation pi at a.
    pub fn pi(&self, a: &CMat) -> CMat {
        match &self.rep {
            // ndarray's kron cannot take zero-sized factors
            Rep::Homomorphism { rank: 0, .. } | Rep::Antihomomorphism { rank: 0, .. } => {
                mat::czero(0, 0)
            }
            Rep::Homomorphism { rank, .. } => mat::kron(a, &mat::eye(*rank)),
            Rep::Antihomomorphism { rank, .. } => mat::kron(&mat::transpose(a), &mat::eye(*rank)),
            Rep::Jordan(p1, p2) => block_diag(&p1.pi(a), &p2.pi(a)),
        }
    }

    /// phi(a) = V^dagger pi(a) V.
    pub fn reconstruct(&self, a: &CMat) -> CMat {
        mat::dagger(&self.v).dot(&self.pi(a)).dot(&self.v)
    }

    /// Orthogonal projections (P1, P2) onto the two summands of a Jordan
    /// dilation space.
    pub fn jordan_projections(&self) -> Option<(CMat, CMat)> {
        match &self.rep {
            Rep::Jordan(p1, p2) => {
                let k1 = p1.k_dim();
                let k2 = p2.k_dim();
                let k = k1 + k2;
                let mut q1 = mat::czero(k, k);
                let mut q2 = mat::czero(k, k);
                for i in 0..k1 {
                    q1[(i, i)] = mat::ONE;
                }
                for i in 0..k2 {
                    q2[(k1 + i, k1 + i)] = mat::ONE;
                }
                Some((q1, q2))
            }
            _ => None,
        }
    }

    /// Worst residual of the morphism identity on `pairs` random pairs:
    /// pi(ab) = pi(a) pi(b) for homomorphisms, pi(ab) = pi(b) pi(a) for
    /// antihomomorphisms, pi(ab + ba) = pi(a) pi(b) + pi(b) pi(a) for
    /// Jordan morphisms.
    pub fn morphism_residual<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a = mat::random_cmat(self.n, rng);
            let b = mat::random_cmat(self.n, rng);
            let ab = a.dot(&b);
            let res = match self.kind() {
                DilationKind::Homomorphism => {
                    mat::max_abs(&(&self.pi(&ab) - &self.pi(&a).dot(&self.pi(&b))))
                }
                DilationKind::Antihomomorphism => {
                    mat::max_abs(&(&self.pi(&ab) - &self.pi(&b).dot(&self.pi(&a))))
                }
                DilationKind::Jordan => {
                    let sym = &ab + &b.dot(&a);
                    let rhs = &self.pi(&a).dot(&self.pi(&b)) + &self.pi(&b).dot(&self.pi(&a));
                    mat::max_abs(&(&self.pi(&sym) - &rhs))
                }
            };
            worst = worst.max(res);
        }
        worst
    }

    /// The intertwiner W(g) of the dilation; for covariant maps it satisfies
    /// V U(g) = W(g) V and conjugates pi to pi o g.
    pub fn intertwiner_at(&self, g: &TorusElement) -> Result<CMat> {
        match &self.rep {
            Rep::Homomorphism { kraus, .. } => {
                let witness = kraus_family_witness(kraus, g, false)?;
                Ok(mat::kron(
                    &diag_unitary(g),
                    &mat::transpose(&witness.n_matrix),
                ))
            }
            Rep::Antihomomorphism { kraus, .. } => {
                let witness = kraus_family_witness(kraus, g, true)?;
                Ok(mat::kron(
                    &conj_diag_unitary(g),
                    &mat::dagger(&witness.n_matrix),
                ))
            }
            Rep::Jordan(p1, p2) => Ok(block_diag(
                &p1.intertwiner_at(g)?,
                &p2.intertwiner_at(g)?,
            )),
        }
    }
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = mat::czero(ra + rb, ca + cb);
    for i in 0..ra {
        for j in 0..ca {
            out[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..rb {
        for j in 0..cb {
            out[(ra + i, ca + j)] = b[(i, j)];
        }
    }
    out
}

/// V stacking the adjoints of the Kraus family: (V x)_(i,k) = (X_k^dagger x)_i,
/// so that V^dagger (a (x) I_r) V = sum_k X_k a X_k^dagger.
fn stack_kraus_adjoints(n: usize, kraus: &[CMat]) -> CMat {
    let r = kraus.len();
    let mut v = mat::czero(n * r, n);
    for (k, x) in kraus.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                v[(i * r + k, j)] = x[(j, i)].conj();
            }
        }
    }
    v
}

/// Stinespring dilation of a CP map from its spectral Kraus family.
pub fn stinespring(m: &MapMatrix) -> Result<Dilation> {
    let rep = m.cp_report(1e-9)?;
    if !rep.is_cp {
        return Err(Error::NotCompletelyPositive(rep.min_eigenvalue));
    }
    let os = m.to_operator_sum(KRAUS_RANK_TOL)?;
    let kraus = os.fold_weights(1e-9)?;
    Ok(dilation_from_cp_kraus(m.n(), kraus))
}

/// Dilation of a CP map given directly by Kraus operators.
pub fn dilation_from_cp_kraus(n: usize, kraus: Vec<CMat>) -> Dilation {
    let v = stack_kraus_adjoints(n, &kraus);
    Dilation {
        n,
        v,
        rep: Rep::Homomorphism {
            rank: kraus.len(),
            kraus,
        },
    }
}

/// Dilation of a coCP map phi through the transpose trick: dilate the CP map
/// psi = tau o phi with Kraus family (Y_k), then conjugate; the carrier
/// becomes pi(a) = a^T (x) I_r with V stacking the transposes of Y_k.
pub fn costinespring(m: &MapMatrix) -> Result<Dilation> {
    let rep = m.cocp_report(1e-9)?;
    if !rep.is_cp {
        return Err(Error::NotCompletelyCopositive(rep.min_eigenvalue));
    }
    let psi = m.compose_transpose()?;
    let os = psi.to_operator_sum(KRAUS_RANK_TOL)?;
    let kraus = os.fold_weights(1e-9)?;
    Ok(dilation_from_cocp_kraus(m.n(), kraus))
}

/// Dilation of the coCP map tau o psi where psi has the given Kraus family.
pub fn dilation_from_cocp_kraus(n: usize, kraus_of_psi: Vec<CMat>) -> Dilation {
    let r = kraus_of_psi.len();
    // V stacks Y_k^T; then V^dagger (a^T (x) I) V = sum conj(Y_k) a^T Y_k^T
    let mut v = mat::czero(n * r, n);
    for (k, y) in kraus_of_psi.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                v[(i * r + k, j)] = y[(j, i)];
            }
        }
    }
    Dilation {
        n,
        v,
        rep: Rep::Antihomomorphism {
            rank: r,
            kraus: kraus_of_psi,
        },
    }
}

/// Jordan dilation of the decomposable sum m1 + m2: the direct sum of the
/// Stinespring dilation of the CP part and the antihomomorphism dilation of
/// the coCP part, with V = V1 stacked over V2.
pub fn jordan_dilation(m1: &MapMatrix, m2: &MapMatrix) -> Result<Dilation> {
    if m1.n() != m2.n() {
        return Err(Error::DimensionMismatch {
            expected: m1.n(),
            got: m2.n(),
        });
    }
    let d1 = stinespring(m1)?;
    let d2 = costinespring(m2)?;
    let n = m1.n();
    let k1 = d1.k_dim();
    let k2 = d2.k_dim();
    let mut v = mat::czero(k1 + k2, n);
    for i in 0..k1 {
        for j in 0..n {
            v[(i, j)] = d1.v[(i, j)];
        }
    }
    for i in 0..k2 {
        for j in 0..n {
            v[(k1 + i, j)] = d2.v[(i, j)];
        }
    }
    Ok(Dilation {
        n,
        v,
        rep: Rep::Jordan(Box::new(d1), Box::new(d2)),
    })
}

/// Least-squares witness for the transformation of a Kraus family under the
/// group action: minimizes sum_k || L_k - sum_m N_km X_m ||_F^2 where
/// L_k = U(g) X_k U(g)^{-1}, or U-bar(g) X_k U(g)^{-1} in the conjugate case.
pub fn kraus_covariance_witness(
    kraus: &OperatorSum,
    g: &TorusElement,
    conjugate: bool,
) -> Result<KrausCovarianceWitness> {
    let folded = kraus.fold_weights(1e-9)?;
    kraus_family_witness(&folded, g, conjugate)
}

fn kraus_family_witness(
    kraus: &[CMat],
    g: &TorusElement,
    conjugate: bool,
) -> Result<KrausCovarianceWitness> {
    let r = kraus.len();
    if r == 0 {
        return Ok(KrausCovarianceWitness {
            n_matrix: mat::czero(0, 0),
            residual: 0.0,
            unitarity_defect: 0.0,
            rank_deficient: false,
        });
    }
    let n = kraus[0].nrows();
    if g.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.n() });
    }
    let u = diag_unitary(g);
    let u_inv = conj_diag_unitary(g);
    let left = if conjugate { &u_inv } else { &u };

    // row-stacked vectorizations: X (r x n^2), L (r x n^2)
    let mut x = mat::czero(r, n * n);
    let mut l = mat::czero(r, n * n);
    for (k, op) in kraus.iter().enumerate() {
        let xv = mat::mat_to_vec(op);
        let lv = mat::mat_to_vec(&left.dot(op).dot(&u_inv));
        for c in 0..n * n {
            x[(k, c)] = xv[c];
            l[(k, c)] = lv[c];
        }
    }
    let gram = x.dot(&mat::dagger(&x));
    let (vals, vecs) = mat::eigh_pairs(&gram)?;
    let max_val = vals.iter().cloned().fold(0.0f64, f64::max);
    let cut = max_val * 1e-12;
    let mut rank_deficient = false;
    // pseudo-inverse of the Gram matrix
    let mut gram_pinv = mat::czero(r, r);
    for (k, &val) in vals.iter().enumerate() {
        if val <= cut {
            rank_deficient = true;
            continue;
        }
        let inv = mat::scalar(1.0 / val);
        for i in 0..r {
            for j in 0..r {
                gram_pinv[(i, j)] += vecs[(i, k)] * inv * vecs[(j, k)].conj();
            }
        }
    }
    let n_matrix = l.dot(&mat::dagger(&x)).dot(&gram_pinv);
    let residual = mat::fro_norm(&(&l - &n_matrix.dot(&x)));
    let unitarity_defect = mat::max_abs(&(n_matrix.dot(&mat::dagger(&n_matrix)) - mat::eye(r)));
    Ok(KrausCovarianceWitness {
        n_matrix,
        residual,
        unitarity_defect,
        rank_deficient,
    })
}

/// Verify the covariance intertwining relations of a dilation on sampled
/// group elements. Fails with a no-intertwiner error when the residual
/// exceeds the acceptance threshold, which diagnoses a non-covariant map.
pub fn covariance_intertwiner<R: Rng + ?Sized>(
    d: &Dilation,
    samples: usize,
    rng: &mut R,
) -> Result<CovarianceIntertwiner> {
    let n = d.n();
    let mut intertwine = 0.0f64;
    let mut representation = 0.0f64;
    let mut unitarity = 0.0f64;
    let mut gs = vec![TorusElement::distinct(n)];
    for _ in 0..samples {
        gs.push(TorusElement::random(n, rng));
    }
    let count = gs.len();
    for g in gs {
        let u = diag_unitary(&g);
        let w = d.intertwiner_at(&g)?;
        unitarity = unitarity.max(mat::max_abs(
            &(w.dot(&mat::dagger(&w)) - mat::eye(d.k_dim())),
        ));
        let lhs = d.v.dot(&u);
        let rhs = w.dot(&d.v);
        intertwine = intertwine.max(mat::max_abs(&(&lhs - &rhs)));

        let a = mat::random_cmat(n, rng);
        let ga = u.dot(&a).dot(&conj_diag_unitary(&g));
        let conj_pi = w.dot(&d.pi(&a)).dot(&mat::dagger(&w));
        representation = representation.max(mat::max_abs(&(&d.pi(&ga) - &conj_pi)));
    }
    let report = CovarianceIntertwiner {
        intertwine_residual: intertwine,
        representation_residual: representation,
        unitarity_defect: unitarity,
        samples: count,
    };
    if intertwine > INTERTWINER_TOL || representation > INTERTWINER_TOL {
        return Err(Error::NoIntertwiner {
            residual: intertwine.max(representation),
            tol: INTERTWINER_TOL,
        });
    }
    Ok(report)
}
