//! Covariance with respect to the maximal commutative subgroup of U(n).
//!
//! Group elements are points of the n-torus acting through diagonal unitaries
//! U(g) = sum_j e^{i x_j} E_jj. The conjugation action on the Frobenius basis
//! is encoded by the unitary frames alpha(g) (covariance) and beta(g)
//! (conjugate covariance), both of which admit closed block forms. A map is
//! covariant exactly when its Frobenius coefficient matrix commutes with
//! every alpha(g); the commutant is a block pattern from which the
//! classification, projection and sampling routines below all derive.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::FrobeniusBasis;
use crate::error::{Error, Result};
use crate::linmap::{BasisTag, CertifiedDecomposable, MapMatrix};
use crate::mat::{self, CMat, CVec, C64};

/// A point (x_1, ..., x_n) of the n-torus, coordinates reduced to [0, 2pi).
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    x: Vec<f64>,
}

impl TorusElement {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        let x = coords
            .into()
            .into_iter()
            .map(|v| v.rem_euclid(TAU))
            .collect();
        TorusElement { x }
    }

    /// The neutral element.
    pub fn zero(n: usize) -> Self {
        TorusElement { x: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    /// Group law: componentwise sum mod 2pi.
    pub fn compose(&self, other: &TorusElement) -> Self {
        TorusElement::new(
            self.x
                .iter()
                .zip(&other.x)
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>(),
        )
    }

    pub fn inverse(&self) -> Self {
        TorusElement::new(self.x.iter().map(|a| -a).collect::<Vec<_>>())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        TorusElement::new((0..n).map(|_| rng.random::<f64>() * TAU).collect::<Vec<_>>())
    }

    /// A fixed element with pairwise distinct coordinates; the commutant
    /// derivation needs such points, where the phase-difference matrix is
    /// invertible.
    pub fn distinct(n: usize) -> Self {
        TorusElement::new(
            (0..n)
                .map(|j| TAU * (j as f64 + 1.0) / (n as f64 + 2.0 + 0.5))
                .collect::<Vec<_>>(),
        )
    }
}

/// Diagonal unitary U(g) = sum_j e^{i x_j} E_jj.
pub fn diag_unitary(g: &TorusElement) -> CMat {
    let n = g.n();
    let mut u = mat::czero(n, n);
    for (j, &x) in g.coords().iter().enumerate() {
        u[(j, j)] = (mat::I * mat::scalar(x)).exp();
    }
    u
}

/// Conjugate representation U-bar(g) = sum_j e^{-i x_j} E_jj; for the torus
/// this coincides with U(g)^{-1}.
pub fn conj_diag_unitary(g: &TorusElement) -> CMat {
    diag_unitary(&g.inverse())
}

/// Phase differences Delta_k = x_{mu(k)} - x_{nu(k)} over the pair ordering.
fn delta_entries(g: &TorusElement, basis: &FrobeniusBasis) -> Vec<f64> {
    basis
        .pair_map()
        .iter()
        .map(|&(mu, nu)| g.coords()[mu] - g.coords()[nu])
        .collect()
}

/// Phase sums Theta_k = x_{mu(k)} + x_{nu(k)}.
fn theta_entries(g: &TorusElement, basis: &FrobeniusBasis) -> Vec<f64> {
    basis
        .pair_map()
        .iter()
        .map(|&(mu, nu)| g.coords()[mu] + g.coords()[nu])
        .collect()
}

fn frame_from_inner_products(
    basis: &FrobeniusBasis,
    left: &CMat,
    right: &CMat,
) -> CMat {
    // entries <F_i, L F_j R>
    let nn = basis.len();
    let mut frame = mat::czero(nn, nn);
    for j in 0..nn {
        let fj = left.dot(basis.matrix(j)).dot(right);
        for i in 0..nn {
            frame[(i, j)] = mat::hs_inner(basis.matrix(i), &fj);
        }
    }
    frame
}

const FRAME_AGREEMENT_TOL: f64 = 1e-12;

/// The covariance frame alpha(g)_ij = <F_i, U(g)^{-1} F_j U(g)>.
///
/// Computed both from inner products and from the closed block form
/// [[cos D, -sin D, 0], [sin D, cos D, 0], [0, 0, I_n]] with
/// D = diag{x_mu(k) - x_nu(k)}; the two must agree within 1e-12 or an
/// internal-consistency error is raised. The closed form is returned.
pub fn build_alpha(g: &TorusElement, basis: &FrobeniusBasis) -> Result<CMat> {
    check_group_dimension(g, basis)?;
    let d = basis.pair_count();
    let n = basis.n();
    let nn = basis.len();
    let deltas = delta_entries(g, basis);

    let mut closed = mat::czero(nn, nn);
    for (k, &dk) in deltas.iter().enumerate() {
        closed[(k, k)] = mat::scalar(dk.cos());
        closed[(d + k, d + k)] = mat::scalar(dk.cos());
        closed[(k, d + k)] = mat::scalar(-dk.sin());
        closed[(d + k, k)] = mat::scalar(dk.sin());
    }
    for j in 0..n {
        closed[(2 * d + j, 2 * d + j)] = mat::ONE;
    }

    let u = diag_unitary(g);
    let u_inv = conj_diag_unitary(g);
    let from_inner = frame_from_inner_products(basis, &u_inv, &u);
    let disagreement = mat::max_abs(&(&from_inner - &closed));
    if disagreement > FRAME_AGREEMENT_TOL {
        return Err(Error::InternalConsistency(format!(
            "alpha frame: inner products and closed form disagree by {disagreement:.3e}"
        )));
    }
    Ok(closed)
}

/// The conjugate-covariance frame beta(g)_ij = <F_i, U(g) F_j U(g)>, block
/// diagonal diag(e^{i Theta}, e^{i Theta}, R(g)) with R(g) symmetric unitary.
pub fn build_beta(g: &TorusElement, basis: &FrobeniusBasis) -> Result<CMat> {
    check_group_dimension(g, basis)?;
    let d = basis.pair_count();
    let n = basis.n();
    let nn = basis.len();
    let thetas = theta_entries(g, basis);

    let mut closed = mat::czero(nn, nn);
    for (k, &tk) in thetas.iter().enumerate() {
        let phase = (mat::I * mat::scalar(tk)).exp();
        closed[(k, k)] = phase;
        closed[(d + k, d + k)] = phase;
    }
    let r = beta_diagonal_block(g, basis);
    for i in 0..n {
        for j in 0..n {
            closed[(2 * d + i, 2 * d + j)] = r[(i, j)];
        }
    }

    let u = diag_unitary(g);
    let from_inner = frame_from_inner_products(basis, &u, &u);
    let disagreement = mat::max_abs(&(&from_inner - &closed));
    if disagreement > FRAME_AGREEMENT_TOL {
        return Err(Error::InternalConsistency(format!(
            "beta frame: inner products and closed form disagree by {disagreement:.3e}"
        )));
    }
    let sym_defect = mat::max_abs(&(&r - &mat::transpose(&r)));
    let uni_defect = mat::max_abs(&(mat::dagger(&r).dot(&r) - mat::eye(n)));
    if sym_defect > FRAME_AGREEMENT_TOL || uni_defect > FRAME_AGREEMENT_TOL {
        return Err(Error::InternalConsistency(format!(
            "beta frame: R(g) symmetry defect {sym_defect:.3e}, unitarity defect {uni_defect:.3e}"
        )));
    }
    Ok(closed)
}

/// The R(g) block of beta(g): R_ij = sum_k (F^d_i)_kk (F^d_j)_kk e^{2 i x_k},
/// the matrix of A -> U(g) A U(g) restricted to diagonal matrices.
pub fn beta_diagonal_block(g: &TorusElement, basis: &FrobeniusBasis) -> CMat {
    let n = basis.n();
    let mut r = mat::czero(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = mat::ZERO;
            for k in 0..n {
                let phase = (mat::I * mat::scalar(2.0 * g.coords()[k])).exp();
                acc += basis.diagonal_matrix(i)[(k, k)]
                    * basis.diagonal_matrix(j)[(k, k)]
                    * phase;
            }
            r[(i, j)] = acc;
        }
    }
    r
}

/// Anti-Hermitian logarithm A(g) of alpha(g):
/// [[0, -D, 0], [D, 0, 0], [0, 0, 0]] with D = diag{x_mu(k) - x_nu(k)}.
/// Coordinates in [0, 2pi) keep the spectral radius below 2pi.
pub fn alpha_log(g: &TorusElement) -> CMat {
    let n = g.n();
    let basis_pairs: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        for mu in 0..n {
            for nu in (mu + 1)..n {
                v.push((mu, nu));
            }
        }
        v
    };
    let d = basis_pairs.len();
    let nn = n * n;
    let mut a = mat::czero(nn, nn);
    for (k, &(mu, nu)) in basis_pairs.iter().enumerate() {
        let dk = g.coords()[mu] - g.coords()[nu];
        a[(k, d + k)] = mat::scalar(-dk);
        a[(d + k, k)] = mat::scalar(dk);
    }
    a
}

/// True when no two points of `spectrum` differ by a nonzero integer
/// multiple of `z`.
pub fn congruence_free_check(spectrum: &[C64], z: C64) -> Result<bool> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroCongruenceModulus);
    }
    let rel_tol = 1e-9;
    for (i, zi) in spectrum.iter().enumerate() {
        for zj in spectrum.iter().skip(i + 1) {
            let t = (zi - zj) / z;
            let k = t.re.round();
            if k != 0.0 && (t - mat::scalar(k)).norm() <= rel_tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Scaling threshold tau = |z| / diameter(U): every t in (0, tau) makes tU
/// z-congruence free. Returns +infinity for singletons.
pub fn congruence_free_scale(points: &[C64], z: C64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroCongruenceModulus);
    }
    if points.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let mut diameter = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in points.iter().skip(i + 1) {
            diameter = diameter.max((p - q).norm());
        }
    }
    if diameter == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(z.norm() / diameter)
    }
}

/// Outcome of comparing [e^A, B] with [A, B].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutationVerdict {
    /// Both commutators vanish within tolerance.
    BothCommute,
    /// Neither commutator vanishes.
    Neither,
    /// Exactly one vanishes; impossible when spec(A) is 2 pi i-congruence free.
    Violation,
}

/// Classify the pair without checking the congruence precondition.
/// Exposed so the necessity of the hypothesis can be demonstrated on
/// congruent spectra such as diag(0, 2 pi i).
pub fn exp_commutation_classify(a: &CMat, b: &CMat, tol: f64) -> CommutationVerdict {
    let ce = mat::max_abs(&mat::commutator(&mat::expm(a), b));
    let ca = mat::max_abs(&mat::commutator(a, b));
    match (ce <= tol, ca <= tol) {
        (true, true) => CommutationVerdict::BothCommute,
        (false, false) => CommutationVerdict::Neither,
        _ => CommutationVerdict::Violation,
    }
}

/// Check that spec(A) is 2 pi i-congruence free, then report whether
/// [e^A, B] and [A, B] vanish together.
pub fn exp_commutation_equiv(a: &CMat, b: &CMat, tol: f64) -> Result<CommutationVerdict> {
    let spectrum = mat::eigvals(a)?;
    let z = mat::I * mat::scalar(TAU);
    if !congruence_free_check(&spectrum, z)? {
        return Err(Error::CongruenceViolation(format!(
            "spectrum of A contains points differing by a nonzero multiple of 2 pi i: {spectrum:?}"
        )));
    }
    Ok(exp_commutation_classify(a, b, tol))
}

/// Residuals of the two equivalent covariance tests.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceReport {
    /// max over sampled (g, A) of || phi(U A U^-1) - U phi(A) U^-1 ||_max
    pub defining_residual: f64,
    /// max over sampled g of || [c, frame(g)] ||_max
    pub commutation_residual: f64,
}

impl CovarianceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.defining_residual <= tol && self.commutation_residual <= tol
    }
}

fn sample_group_elements<R: Rng + ?Sized>(
    n: usize,
    samples: usize,
    rng: &mut R,
) -> Vec<TorusElement> {
    // always include a deterministic all-distinct point alongside the
    // random draws; the commutant lemmas need invertible Delta there
    let mut gs = vec![TorusElement::distinct(n)];
    for _ in 0..samples {
        gs.push(TorusElement::random(n, rng));
    }
    gs
}

/// Sampled covariance residuals for the defining identity and the
/// commutation criterion [c, alpha(g)] = 0.
pub fn covariance_report<R: Rng + ?Sized>(
    m: &MapMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<CovarianceReport> {
    let n = m.n();
    let basis = FrobeniusBasis::new(n)?;
    let mf = m.to_frobenius()?;
    let mut defining = 0.0f64;
    let mut commutation = 0.0f64;
    for g in sample_group_elements(n, samples, rng) {
        let u = diag_unitary(&g);
        let u_inv = conj_diag_unitary(&g);
        let a = mat::random_cmat(n, rng);
        let lhs = m.apply(&u.dot(&a).dot(&u_inv))?;
        let rhs = u.dot(&m.apply(&a)?).dot(&u_inv);
        defining = defining.max(mat::max_abs(&(&lhs - &rhs)));

        let alpha = build_alpha(&g, &basis)?;
        commutation =
            commutation.max(mat::max_abs(&mat::commutator(mf.coefficients(), &alpha)));
    }
    Ok(CovarianceReport {
        defining_residual: defining,
        commutation_residual: commutation,
    })
}

/// True when the map commutes with the torus action, tested on `samples`
/// random group elements plus a structured all-distinct one.
pub fn is_covariant<R: Rng + ?Sized>(
    m: &MapMatrix,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<bool> {
    Ok(covariance_report(m, samples, rng)?.passes(tol))
}

/// Sampled residuals for conjugate covariance,
/// phi o Ad_{U(g)} = Ad_{U-bar(g)} o phi, with the beta-frame commutation test.
pub fn conjugate_covariance_report<R: Rng + ?Sized>(
    m: &MapMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<CovarianceReport> {
    let n = m.n();
    let basis = FrobeniusBasis::new(n)?;
    let mf = m.to_frobenius()?;
    let mut defining = 0.0f64;
    let mut commutation = 0.0f64;
    for g in sample_group_elements(n, samples, rng) {
        let u = diag_unitary(&g);
        let u_inv = conj_diag_unitary(&g);
        let a = mat::random_cmat(n, rng);
        let lhs = m.apply(&u.dot(&a).dot(&u_inv))?;
        let rhs = u_inv.dot(&m.apply(&a)?).dot(&u);
        defining = defining.max(mat::max_abs(&(&lhs - &rhs)));

        let beta = build_beta(&g, &basis)?;
        commutation =
            commutation.max(mat::max_abs(&mat::commutator(mf.coefficients(), &beta)));
    }
    Ok(CovarianceReport {
        defining_residual: defining,
        commutation_residual: commutation,
    })
}

pub fn is_conjugate_covariant<R: Rng + ?Sized>(
    m: &MapMatrix,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<bool> {
    Ok(conjugate_covariance_report(m, samples, rng)?.passes(tol))
}

/// How to evaluate the Haar average over the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Tensor-product trapezoidal grid, 8 nodes per circle; exact for the
    /// degree <= 2 trigonometric integrand. Restricted to n <= 5.
    Quadrature,
    /// Orthogonal projection onto the commutant block pattern.
    ClosedForm,
}

const QUADRATURE_NODES: usize = 8;
const QUADRATURE_MAX_N: usize = 5;

/// Project a map onto the subspace of covariant maps, either by averaging
/// Ad_{U(g)} o phi o Ad_{U(g)}^{-1} over the group or by masking the
/// coefficient matrix to the commutant pattern. Both modes realize the same
/// orthogonal projection; the basis tag of the input is preserved.
pub fn project_covariant(m: &MapMatrix, mode: ProjectionMode) -> Result<MapMatrix> {
    match mode {
        ProjectionMode::Quadrature => project_quadrature(m),
        ProjectionMode::ClosedForm => project_closed_form(m),
    }
}

fn project_quadrature(m: &MapMatrix) -> Result<MapMatrix> {
    let n = m.n();
    if n > QUADRATURE_MAX_N {
        return Err(Error::QuadratureDimension {
            n,
            max: QUADRATURE_MAX_N,
        });
    }
    let s = m.superoperator()?;
    let nn = n * n;
    // Ad_{U(g)} has a diagonal superoperator with entries e^{i(x_p - x_q)},
    // so each grid term is a diagonal congruence of the superoperator.
    let mut acc = mat::czero(nn, nn);
    let mut node_indices = vec![0usize; n];
    let total = QUADRATURE_NODES.pow(n as u32);
    for _ in 0..total {
        let x: Vec<f64> = node_indices
            .iter()
            .map(|&k| TAU * k as f64 / QUADRATURE_NODES as f64)
            .collect();
        let mut phases = vec![mat::ZERO; nn];
        for p in 0..n {
            for q in 0..n {
                phases[p * n + q] = (mat::I * mat::scalar(x[p] - x[q])).exp();
            }
        }
        for i in 0..nn {
            for j in 0..nn {
                acc[(i, j)] += phases[i] * s[(i, j)] * phases[j].conj();
            }
        }
        // advance the mixed-radix counter
        for slot in node_indices.iter_mut() {
            *slot += 1;
            if *slot < QUADRATURE_NODES {
                break;
            }
            *slot = 0;
        }
    }
    let averaged = acc.mapv(|z| z / mat::scalar(total as f64));
    MapMatrix::from_superoperator(n, &averaged)?.with_basis(m.basis_tag())
}

fn project_closed_form(m: &MapMatrix) -> Result<MapMatrix> {
    let n = m.n();
    let mf = m.to_frobenius()?;
    let masked = mask_to_commutant(mf.coefficients(), n);
    MapMatrix::new(n, BasisTag::Frobenius, masked)?.with_basis(m.basis_tag())
}

/// Orthogonal projection of an n^2 x n^2 matrix onto the commutant pattern
/// [[A1, -A2, 0], [A2, A1, 0], [0, 0, A3]] with A1, A2 diagonal.
fn mask_to_commutant(c: &CMat, n: usize) -> CMat {
    let d = n * (n - 1) / 2;
    let nn = n * n;
    let mut out = mat::czero(nn, nn);
    for k in 0..d {
        let a1 = (c[(k, k)] + c[(d + k, d + k)]) * mat::scalar(0.5);
        let a2 = (c[(d + k, k)] - c[(k, d + k)]) * mat::scalar(0.5);
        out[(k, k)] = a1;
        out[(d + k, d + k)] = a1;
        out[(d + k, k)] = a2;
        out[(k, d + k)] = -a2;
    }
    for i in 0..n {
        for j in 0..n {
            out[(2 * d + i, 2 * d + j)] = c[(2 * d + i, 2 * d + j)];
        }
    }
    out
}

/// Blocks (C1, C2, C3) of a covariant coefficient matrix
/// [[C1, -C2, 0], [C2, C1, 0], [0, 0, C3]], C1 and C2 diagonal.
#[derive(Clone, Debug)]
pub struct CovariantBlocks {
    pub n: usize,
    /// Diagonal entries of C1, length n(n-1)/2.
    pub c1: CVec,
    /// Diagonal entries of C2.
    pub c2: CVec,
    pub c3: CMat,
}

impl CovariantBlocks {
    /// Reassemble the Frobenius coefficient matrix.
    pub fn reassemble(&self) -> Result<MapMatrix> {
        let n = self.n;
        let d = n * (n - 1) / 2;
        let nn = n * n;
        let mut c = mat::czero(nn, nn);
        for k in 0..d {
            c[(k, k)] = self.c1[k];
            c[(d + k, d + k)] = self.c1[k];
            c[(d + k, k)] = self.c2[k];
            c[(k, d + k)] = -self.c2[k];
        }
        for i in 0..n {
            for j in 0..n {
                c[(2 * d + i, 2 * d + j)] = self.c3[(i, j)];
            }
        }
        MapMatrix::new(n, BasisTag::Frobenius, c)
    }
}

/// Outcome of the block-structure classification.
#[derive(Clone, Debug)]
pub enum BlockClassification {
    Covariant(CovariantBlocks),
    NotCovariant { residual: f64 },
}

/// Extract (C1, C2, C3) when the coefficient matrix fits the covariant
/// pattern within `tol` (off-pattern mass measured in the max norm);
/// otherwise report the residual.
pub fn classify_covariant_blocks(m: &MapMatrix, tol: f64) -> Result<BlockClassification> {
    let n = m.n();
    let mf = m.to_frobenius()?;
    let c = mf.coefficients();
    let masked = mask_to_commutant(c, n);
    let residual = mat::max_abs(&(c - &masked));
    if residual > tol {
        return Ok(BlockClassification::NotCovariant { residual });
    }
    let d = n * (n - 1) / 2;
    let mut c1 = CVec::zeros(d);
    let mut c2 = CVec::zeros(d);
    for k in 0..d {
        c1[k] = masked[(k, k)];
        c2[k] = masked[(d + k, k)];
    }
    let mut c3 = mat::czero(n, n);
    for i in 0..n {
        for j in 0..n {
            c3[(i, j)] = masked[(2 * d + i, 2 * d + j)];
        }
    }
    Ok(BlockClassification::Covariant(CovariantBlocks {
        n,
        c1,
        c2,
        c3,
    }))
}

/// CP test for covariant blocks: needs C1 real, C2 imaginary, C3 Hermitian
/// (Hermiticity preservation, enforced), then C1 >= |C2| entrywise and
/// C3 >= 0. The corner spectrum is {C1_k -+ Im(C2_k)}.
pub fn cp_covariant_test(blocks: &CovariantBlocks, tol: f64) -> Result<bool> {
    let mut hp_defect = 0.0f64;
    for k in 0..blocks.c1.len() {
        hp_defect = hp_defect.max(blocks.c1[k].im.abs());
        hp_defect = hp_defect.max(blocks.c2[k].re.abs());
    }
    hp_defect = hp_defect.max(mat::hermiticity_defect(&blocks.c3));
    if hp_defect > tol {
        return Err(Error::NotHermiticityPreserving(hp_defect));
    }
    for k in 0..blocks.c1.len() {
        if blocks.c1[k].re - blocks.c2[k].norm() < -tol {
            return Ok(false);
        }
    }
    let min_c3 = mat::min_eig_hermitian_part(&blocks.c3)?;
    Ok(min_c3 >= -tol)
}

/// Blocks of a conjugate-covariant coefficient matrix
/// [[C11, C12, 0], [C21, C22, 0], [0, 0, C33]] with diagonal corner blocks
/// and C33 generated from a vector a through the kappa relations.
#[derive(Clone, Debug)]
pub struct ConjugateCovariantBlocks {
    pub c11: CVec,
    pub c12: CVec,
    pub c21: CVec,
    pub c22: CVec,
    /// Generating sequence (a_i) of the C33 block.
    pub a: CVec,
}

impl ConjugateCovariantBlocks {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn c33(&self) -> CMat {
        build_c33(&self.a)
    }

    /// Reassemble the Frobenius coefficient matrix of the conjugate-covariant
    /// map these blocks describe.
    pub fn reassemble(&self) -> Result<MapMatrix> {
        let n = self.n();
        let d = n * (n - 1) / 2;
        if self.c11.len() != d || self.c12.len() != d || self.c21.len() != d
            || self.c22.len() != d
        {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.c11.len(),
            });
        }
        let nn = n * n;
        let mut c = mat::czero(nn, nn);
        for k in 0..d {
            c[(k, k)] = self.c11[k];
            c[(k, d + k)] = self.c12[k];
            c[(d + k, k)] = self.c21[k];
            c[(d + k, d + k)] = self.c22[k];
        }
        let c33 = self.c33();
        for i in 0..n {
            for j in 0..n {
                c[(2 * d + i, 2 * d + j)] = c33[(i, j)];
            }
        }
        MapMatrix::new(n, BasisTag::Frobenius, c)
    }
}

/// C33 from the generating sequence via the kappa relations (1-based r, s):
///   kappa_rs = (sum_{i<=r} a_i - r a_{r+1}) / sqrt(r s (r+1)(s+1))   r < s < n
///   kappa_rn = (sum_{i<=r} a_i - r a_{r+1}) / sqrt(n r (r+1))        r < n
///   kappa_rr = (sum_{i<=r} a_i + r^2 a_{r+1}) / (r (r+1))            r < n
///   kappa_nn = (sum_i a_i) / n
/// Equivalently sum_i a_i <r_i, .> r_i with r_i = sum_k (F^d_k)_ii e_k.
pub fn build_c33(a: &CVec) -> CMat {
    let n = a.len();
    let mut c33 = mat::czero(n, n);
    let partial: Vec<C64> = a
        .iter()
        .scan(mat::ZERO, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    for r in 1..=n {
        for s in r..=n {
            let kappa = if r == n && s == n {
                partial[n - 1] / mat::scalar(n as f64)
            } else if r == s {
                (partial[r - 1] + mat::scalar((r * r) as f64) * a[r])
                    / mat::scalar((r * (r + 1)) as f64)
            } else if s == n {
                (partial[r - 1] - mat::scalar(r as f64) * a[r])
                    / mat::scalar(((n * r * (r + 1)) as f64).sqrt())
            } else {
                (partial[r - 1] - mat::scalar(r as f64) * a[r])
                    / mat::scalar(((r * s * (r + 1) * (s + 1)) as f64).sqrt())
            };
            c33[(r - 1, s - 1)] = kappa;
            c33[(s - 1, r - 1)] = kappa;
        }
    }
    c33
}

/// coCP test for a conjugate-covariant coefficient matrix: C11, C22 >= 0,
/// C12 = C21^dagger, |C12_k|^2 <= C11_k C22_k per pair, and all a_i >= 0.
/// These are exactly the positive-semidefiniteness conditions of the
/// reassembled matrix (2x2 principal minors of the corner, spectrum {a_i}
/// of C33).
pub fn cocp_conjugate_test(blocks: &ConjugateCovariantBlocks, tol: f64) -> bool {
    let d = blocks.c11.len();
    for k in 0..d {
        let s = blocks.c11[k];
        let r = blocks.c22[k];
        if s.im.abs() > tol || r.im.abs() > tol || s.re < -tol || r.re < -tol {
            return false;
        }
        if (blocks.c12[k] - blocks.c21[k].conj()).norm() > tol {
            return false;
        }
        let w = blocks.c12[k].norm();
        if w > (s.re.max(0.0) * r.re.max(0.0)).sqrt() + tol {
            return false;
        }
    }
    blocks
        .a
        .iter()
        .all(|ai| ai.im.abs() <= tol && ai.re >= -tol)
}

/// What kind of covariant map to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovariantKind {
    Cp,
    Cocp,
    Decomposable,
}

impl std::str::FromStr for CovariantKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp" => Ok(CovariantKind::Cp),
            "cocp" => Ok(CovariantKind::Cocp),
            "dec" | "decomposable" => Ok(CovariantKind::Decomposable),
            other => Err(Error::InvalidInput(format!(
                "unknown covariant kind `{other}` (expected cp, cocp or dec)"
            ))),
        }
    }
}

fn random_cp_blocks<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CovariantBlocks {
    let d = n * (n - 1) / 2;
    let mut c1 = CVec::zeros(d);
    let mut c2 = CVec::zeros(d);
    for k in 0..d {
        let t: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
        let margin: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
        c1[k] = mat::scalar(t.abs() + margin.abs());
        c2[k] = mat::I * mat::scalar(t);
    }
    CovariantBlocks {
        n,
        c1,
        c2,
        c3: mat::random_psd(n, rng),
    }
}

fn random_conjugate_cp_blocks<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> ConjugateCovariantBlocks {
    let d = n * (n - 1) / 2;
    let mut c11 = CVec::zeros(d);
    let mut c12 = CVec::zeros(d);
    let mut c21 = CVec::zeros(d);
    let mut c22 = CVec::zeros(d);
    for k in 0..d {
        let s = rng.sample::<f64, _>(rand_distr::StandardNormal).abs();
        let r = rng.sample::<f64, _>(rand_distr::StandardNormal).abs();
        let rho: f64 = rng.random::<f64>();
        let phase = TAU * rng.random::<f64>();
        let w = C64::from_polar((s * r).sqrt() * rho, phase);
        c11[k] = mat::scalar(s);
        c22[k] = mat::scalar(r);
        c12[k] = w;
        c21[k] = w.conj();
    }
    let mut a = CVec::zeros(n);
    for i in 0..n {
        a[i] = mat::scalar(rng.sample::<f64, _>(rand_distr::StandardNormal).abs());
    }
    ConjugateCovariantBlocks {
        c11,
        c12,
        c21,
        c22,
        a,
    }
}

/// Sample a random map covariant under the diagonal unitaries, together
/// with its CP + coCP certificate. Deterministic in the seed.
pub fn random_covariant_map(
    kind: CovariantKind,
    n: usize,
    seed: u64,
) -> Result<CertifiedDecomposable> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cp = |rng: &mut ChaCha8Rng| -> Result<MapMatrix> {
        random_cp_blocks(n, rng).reassemble()
    };
    // a covariant coCP map is the transpose composed with a
    // conjugate-covariant CP map
    let cocp = |rng: &mut ChaCha8Rng| -> Result<MapMatrix> {
        random_conjugate_cp_blocks(n, rng)
            .reassemble()?
            .compose_transpose()
    };
    match kind {
        CovariantKind::Cp => CertifiedDecomposable::from_cp(cp(&mut rng)?),
        CovariantKind::Cocp => CertifiedDecomposable::from_cocp(cocp(&mut rng)?),
        CovariantKind::Decomposable => {
            let cp_part = cp(&mut rng)?;
            let cocp_part = cocp(&mut rng)?;
            crate::linmap::decomposable_certificate(&cp_part, &cocp_part, 1e-9)
        }
    }
}

fn check_group_dimension(g: &TorusElement, basis: &FrobeniusBasis) -> Result<()> {
    if g.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: g.n(),
        });
    }
    Ok(())
}
