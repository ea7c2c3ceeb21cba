//! D-divisible quantum dynamics: time-local generators in the normal form
//! L_t = -i[H_t, .] + phi_t - (1/2){phi_t*(I), .} with decomposable phi_t,
//! fixed-step integration of the master equation dLambda/dt = L_t o Lambda_t,
//! propagators, and the covariance equivalences between generators, evolution
//! families and their propagators.

use rand::Rng;

use crate::covariance::{self, diag_unitary, TorusElement};
use crate::error::{Error, Result};
use crate::linmap::{CertifiedDecomposable, MapMatrix};
use crate::mat::{self, CMat, C64};

/// A positive semidefinite matrix of unit trace.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    rho: CMat,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-13), positivity (eigenvalues >= -1e-12) and
    /// normalization (trace 1 within 1e-12).
    pub fn new(rho: CMat) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() < 2 {
            return Err(Error::NotDensityMatrix("matrix must be square, n >= 2".into()));
        }
        let herm = mat::hermiticity_defect(&rho);
        if herm > 1e-13 {
            return Err(Error::NotDensityMatrix(format!(
                "Hermiticity defect {herm:.3e} exceeds 1e-13"
            )));
        }
        let tr = mat::trace(&rho);
        if (tr - mat::ONE).norm() > 1e-12 {
            return Err(Error::NotDensityMatrix(format!(
                "trace {tr} differs from 1 beyond 1e-12"
            )));
        }
        let min = mat::min_eig_hermitian_part(&rho)?;
        if min < -1e-12 {
            return Err(Error::NotDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { rho })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            rho: mat::eye(n).mapv(|z| z / mat::scalar(n as f64)),
        }
    }

    /// Normalized projector onto a ket.
    pub fn pure_state(ket: &[C64]) -> Result<Self> {
        let n = ket.len();
        if n < 2 {
            return Err(Error::NotDensityMatrix("ket needs length >= 2".into()));
        }
        let norm_sq: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Err(Error::NotDensityMatrix("zero ket".into()));
        }
        let mut rho = mat::czero(n, n);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = ket[i] * ket[j].conj() / mat::scalar(norm_sq);
            }
        }
        Ok(DensityMatrix { rho })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let p = mat::random_psd(n, rng);
        let tr = mat::trace(&p).re;
        DensityMatrix {
            rho: p.mapv(|z| z / mat::scalar(tr)),
        }
    }

    pub fn n(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }
}

/// Generator data at one time node, with the cached pieces the integrator
/// needs.
#[derive(Clone, Debug)]
struct GeneratorNode {
    h: CMat,
    phi: CertifiedDecomposable,
    /// phi*(I), computed once.
    phi_star_identity: CMat,
    /// Superoperator of L at this node.
    superop: CMat,
}

/// Time-local generator L_t = -i[H_t, .] + phi_t - (1/2){phi_t*(I), .},
/// constant or piecewise-constant on a sampling grid.
#[derive(Clone, Debug)]
pub struct Generator {
    n: usize,
    /// (time, node) pairs with strictly increasing times; a single entry
    /// means a constant generator.
    nodes: Vec<(f64, GeneratorNode)>,
}

fn build_node(h: &CMat, phi: &CertifiedDecomposable) -> Result<GeneratorNode> {
    let n = phi.n();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.nrows(),
        });
    }
    let herm = mat::hermiticity_defect(h);
    if herm > 1e-13 {
        return Err(Error::NonHermitianHamiltonian(herm));
    }
    // re-verify the certificate rather than trusting the caller
    let cert = crate::linmap::decomposable_certificate(&phi.cp_part, &phi.cocp_part, 1e-9)?;
    if cert.map.distance(&phi.map)? > 1e-10 {
        return Err(Error::CertificateViolation(
            "certificate parts do not sum to the stored map".into(),
        ));
    }
    let phi_star_identity = phi.map.dual_map()?.apply(&mat::eye(n))?;
    let superop = generator_superop(h, &phi.map, &phi_star_identity)?;
    Ok(GeneratorNode {
        h: h.clone(),
        phi: phi.clone(),
        phi_star_identity,
        superop,
    })
}

/// Superoperator of rho -> -i[H, rho] + phi(rho) - (1/2){B, rho} in
/// row-major vectorization.
fn generator_superop(h: &CMat, phi: &MapMatrix, b: &CMat) -> Result<CMat> {
    let n = h.nrows();
    let id = mat::eye(n);
    let comm = mat::kron(h, &id) - mat::kron(&id, &mat::transpose(h));
    let anti = mat::kron(b, &id) + mat::kron(&id, &mat::transpose(b));
    let s_phi = phi.superoperator()?;
    Ok(s_phi - comm.mapv(|z| z * mat::I) - anti.mapv(|z| z * mat::scalar(0.5)))
}

impl Generator {
    /// Constant generator from Hermitian H and a certified decomposable map.
    pub fn new(h: CMat, phi: CertifiedDecomposable) -> Result<Self> {
        let n = phi.n();
        let node = build_node(&h, &phi)?;
        Ok(Generator {
            n,
            nodes: vec![(0.0, node)],
        })
    }

    /// Piecewise-constant generator sampled on a strictly increasing grid;
    /// node k is held on [t_k, t_{k+1}).
    pub fn piecewise(
        times: Vec<f64>,
        hs: Vec<CMat>,
        phis: Vec<CertifiedDecomposable>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != hs.len() || times.len() != phis.len() {
            return Err(Error::InvalidInput(
                "times, Hamiltonians and maps must have equal nonzero length".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        let n = phis[0].n();
        let mut nodes = Vec::with_capacity(times.len());
        for ((t, h), phi) in times.into_iter().zip(hs).zip(phis) {
            if phi.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: phi.n(),
                });
            }
            nodes.push((t, build_node(&h, &phi)?));
        }
        Ok(Generator { n, nodes })
    }

    /// Sample callbacks onto a grid (piecewise-constant hold between nodes).
    pub fn from_callbacks<FH, FP>(grid: &[f64], mut h_fn: FH, mut phi_fn: FP) -> Result<Self>
    where
        FH: FnMut(f64) -> CMat,
        FP: FnMut(f64) -> CertifiedDecomposable,
    {
        let times = grid.to_vec();
        let hs: Vec<CMat> = grid.iter().map(|&t| h_fn(t)).collect();
        let phis: Vec<CertifiedDecomposable> = grid.iter().map(|&t| phi_fn(t)).collect();
        Self::piecewise(times, hs, phis)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_constant(&self) -> bool {
        self.nodes.len() == 1
    }

    fn node_at(&self, t: f64) -> &GeneratorNode {
        let mut current = &self.nodes[0].1;
        for (tk, node) in &self.nodes {
            if *tk <= t + 1e-12 {
                current = node;
            } else {
                break;
            }
        }
        current
    }

    pub fn hamiltonian_at(&self, t: f64) -> &CMat {
        &self.node_at(t).h
    }

    pub fn phi_at(&self, t: f64) -> &CertifiedDecomposable {
        &self.node_at(t).phi
    }

    pub fn phi_star_identity_at(&self, t: f64) -> &CMat {
        &self.node_at(t).phi_star_identity
    }

    pub fn superop_at(&self, t: f64) -> &CMat {
        &self.node_at(t).superop
    }

    /// Apply L_t to a matrix.
    pub fn apply(&self, t: f64, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rho.nrows(),
            });
        }
        let s = self.superop_at(t);
        Ok(mat::vec_to_mat(&s.dot(&mat::mat_to_vec(rho)), self.n))
    }

    /// Operational regularity bound: sup over nodes of ||L||_1.
    pub fn norm_sup(&self) -> f64 {
        self.nodes
            .iter()
            .map(|(_, node)| mat::one_norm(&node.superop))
            .fold(0.0, f64::max)
    }
}

/// One integrated trajectory point.
#[derive(Clone, Debug)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rho: CMat,
    pub trace_residual: f64,
}

/// The integrated family Lambda_t on a uniform grid; Lambda_0 = id exactly.
#[derive(Clone, Debug)]
pub struct EvolutionFamily {
    n: usize,
    step: f64,
    grid: Vec<f64>,
    superops: Vec<CMat>,
    /// sup over the grid of the trace-functional defect of Lambda_t.
    pub trace_residual_sup: f64,
    /// Operational regularity bound of the generator that produced the family.
    pub generator_norm_sup: f64,
}

const BLOWUP_BOUND: f64 = 1e6;
/// Condition-number threshold above which propagator inversion is refused.
pub const PROPAGATOR_COND_MAX: f64 = 1e8;

/// Integrate the map-valued master equation with the classical 4th-order
/// Runge-Kutta scheme at fixed step h over [0, T]. T must sit on the step
/// grid. Returns the family together with the trajectory of rho0.
pub fn evolve(
    gen: &Generator,
    t_final: f64,
    h: f64,
    rho0: &DensityMatrix,
) -> Result<(EvolutionFamily, Vec<TrajectoryPoint>)> {
    let family = evolve_family(gen, t_final, h)?;
    let trajectory = family.trajectory(rho0)?;
    Ok((family, trajectory))
}

/// Integrate the family only.
pub fn evolve_family(gen: &Generator, t_final: f64, h: f64) -> Result<EvolutionFamily> {
    if !(h > 0.0) || t_final < h {
        return Err(Error::InvalidInput(format!(
            "need 0 < h <= T (got h = {h}, T = {t_final})"
        )));
    }
    let steps_f = t_final / h;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "horizon T = {t_final} is not an integer multiple of h = {h}"
        )));
    }
    let n = gen.n();
    let nn = n * n;
    let mut s = mat::eye(nn);
    let mut grid = Vec::with_capacity(steps + 1);
    let mut superops = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    superops.push(s.clone());
    let half = mat::scalar(0.5 * h);
    let full = mat::scalar(h);
    for k in 0..steps {
        let t = k as f64 * h;
        let l0 = gen.superop_at(t);
        let lm = gen.superop_at(t + 0.5 * h);
        let l1 = gen.superop_at(t + h);
        let k1 = l0.dot(&s);
        let k2 = lm.dot(&(&s + &k1.mapv(|z| z * half)));
        let k3 = lm.dot(&(&s + &k2.mapv(|z| z * half)));
        let k4 = l1.dot(&(&s + &k3.mapv(|z| z * full)));
        let incr = (&k1 + &k4 + &(&k2 + &k3).mapv(|z| z * mat::scalar(2.0)))
            .mapv(|z| z * mat::scalar(h / 6.0));
        s = &s + &incr;
        let norm = mat::max_abs(&s);
        if !norm.is_finite() || norm > BLOWUP_BOUND {
            return Err(Error::IntegrationUnstable {
                t: t + h,
                norm,
            });
        }
        grid.push((k + 1) as f64 * h);
        superops.push(s.clone());
    }
    // trace functional defect: Lambda preserves traces iff S^dagger fixes vec(I)
    let id_vec = mat::mat_to_vec(&mat::eye(n));
    let mut trace_residual_sup = 0.0f64;
    for sk in &superops {
        let fixed = mat::dagger(sk).dot(&id_vec);
        let defect = fixed
            .iter()
            .zip(id_vec.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        trace_residual_sup = trace_residual_sup.max(defect);
    }
    Ok(EvolutionFamily {
        n,
        step: h,
        grid,
        superops,
        trace_residual_sup,
        generator_norm_sup: gen.norm_sup(),
    })
}

impl EvolutionFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn superop_at_index(&self, k: usize) -> &CMat {
        &self.superops[k]
    }

    /// Node index of a grid time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.step).round();
        if k < 0.0 {
            return Err(Error::TimeNotOnGrid(t));
        }
        let k = k as usize;
        if k >= self.grid.len() || (self.grid[k] - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::TimeNotOnGrid(t));
        }
        Ok(k)
    }

    /// Lambda_t as a coefficient-matrix map (canonical tag).
    pub fn map_at(&self, t: f64) -> Result<MapMatrix> {
        let k = self.index_of(t)?;
        MapMatrix::from_superoperator(self.n, &self.superops[k])
    }

    /// Trajectory of an initial state along the grid, with per-node trace
    /// residuals.
    pub fn trajectory(&self, rho0: &DensityMatrix) -> Result<Vec<TrajectoryPoint>> {
        if rho0.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rho0.n(),
            });
        }
        let v0 = mat::mat_to_vec(rho0.matrix());
        let tr0 = mat::trace(rho0.matrix());
        let mut out = Vec::with_capacity(self.grid.len());
        for (t, s) in self.grid.iter().zip(&self.superops) {
            let rho = mat::vec_to_mat(&s.dot(&v0), self.n);
            let trace_residual = (mat::trace(&rho) - tr0).norm();
            out.push(TrajectoryPoint {
                t: *t,
                rho,
                trace_residual,
            });
        }
        Ok(out)
    }

    /// Propagator V_{t,s} = Lambda_t o Lambda_s^{-1}; refuses ill-conditioned
    /// inversions (condition number above 1e8).
    pub fn propagator(&self, t: f64, s: f64) -> Result<MapMatrix> {
        let kt = self.index_of(t)?;
        let ks = self.index_of(s)?;
        if ks > kt {
            return Err(Error::InvalidInput(format!(
                "propagator needs s <= t (got s = {s}, t = {t})"
            )));
        }
        let ss = &self.superops[ks];
        let cond = mat::cond_1(ss)?;
        if cond > PROPAGATOR_COND_MAX {
            return Err(Error::IllConditioned { cond });
        }
        let v = self.superops[kt].dot(&mat::inv(ss)?);
        MapMatrix::from_superoperator(self.n, &v)
    }
}

/// Superoperator of Ad_{U(g)} in row-major vectorization: U (x) conj(U).
pub fn adjoint_superop(g: &TorusElement) -> CMat {
    let u = diag_unitary(g);
    mat::kron(&u, &mat::conj(&u))
}

/// Covariance verdict for a generator, split into the Hamiltonian commutant
/// membership and the covariance of the dissipative part.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorCovarianceReport {
    /// max over sampled g and grid nodes of ||[H_t, U(g)]||_max
    pub hamiltonian_residual: f64,
    /// worst covariance residual of phi_t over grid nodes
    pub phi_defining_residual: f64,
    pub phi_commutation_residual: f64,
    pub covariant: bool,
}

/// Test H_t in the commutant of U(G) and phi_t covariant, node by node.
pub fn generator_covariance_report<R: Rng + ?Sized>(
    gen: &Generator,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<GeneratorCovarianceReport> {
    let n = gen.n();
    let mut h_res = 0.0f64;
    let mut phi_def = 0.0f64;
    let mut phi_comm = 0.0f64;
    for (_, node) in &gen.nodes {
        let mut gs = vec![TorusElement::distinct(n)];
        for _ in 0..samples {
            gs.push(TorusElement::random(n, rng));
        }
        for g in gs {
            let u = diag_unitary(&g);
            h_res = h_res.max(mat::max_abs(&mat::commutator(&node.h, &u)));
        }
        let rep = covariance::covariance_report(&node.phi.map, samples, rng)?;
        phi_def = phi_def.max(rep.defining_residual);
        phi_comm = phi_comm.max(rep.commutation_residual);
    }
    Ok(GeneratorCovarianceReport {
        hamiltonian_residual: h_res,
        phi_defining_residual: phi_def,
        phi_commutation_residual: phi_comm,
        covariant: h_res <= tol && phi_def <= tol && phi_comm <= tol,
    })
}

/// Covariance verdict for an evolution family or its propagators.
#[derive(Clone, Copy, Debug)]
pub struct FamilyCovarianceReport {
    pub max_residual: f64,
    pub covariant: bool,
    pub samples: usize,
}

/// Sample (g, t) pairs and test [Lambda_t, Ad_{U(g)}] = 0.
pub fn dynamics_covariance_check<R: Rng + ?Sized>(
    fam: &EvolutionFamily,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> FamilyCovarianceReport {
    let n = fam.n();
    let mut worst = 0.0f64;
    for i in 0..samples {
        let g = if i == 0 {
            TorusElement::distinct(n)
        } else {
            TorusElement::random(n, rng)
        };
        let d = adjoint_superop(&g);
        let k = rng.random_range(0..fam.len());
        let s = fam.superop_at_index(k);
        worst = worst.max(mat::max_abs(&mat::commutator(s, &d)));
    }
    FamilyCovarianceReport {
        max_residual: worst,
        covariant: worst <= tol,
        samples,
    }
}

/// Sample (g, s <= t) triples and test [V_{t,s}, Ad_{U(g)}] = 0.
pub fn propagator_covariance_check<R: Rng + ?Sized>(
    fam: &EvolutionFamily,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<FamilyCovarianceReport> {
    let n = fam.n();
    let mut worst = 0.0f64;
    for i in 0..samples {
        let g = if i == 0 {
            TorusElement::distinct(n)
        } else {
            TorusElement::random(n, rng)
        };
        let d = adjoint_superop(&g);
        let ks = rng.random_range(0..fam.len());
        let kt = rng.random_range(ks..fam.len());
        let v = fam
            .propagator(fam.grid()[kt], fam.grid()[ks])?
            .superoperator()?;
        worst = worst.max(mat::max_abs(&mat::commutator(&v, &d)));
    }
    Ok(FamilyCovarianceReport {
        max_residual: worst,
        covariant: worst <= tol,
        samples,
    })
}

/// Covariance of a constant-generator semigroup, tested on the matrix
/// exponential directly and against the structural conditions on (H, phi);
/// the two verdicts agree for regular generators.
#[derive(Clone, Copy, Debug)]
pub struct SemigroupReport {
    pub exponential_residual: f64,
    pub exponential_covariant: bool,
    pub structural: GeneratorCovarianceReport,
    pub verdicts_agree: bool,
}

pub fn semigroup_structure_check<R: Rng + ?Sized>(
    gen: &Generator,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<SemigroupReport> {
    if !gen.is_constant() {
        return Err(Error::InvalidInput(
            "semigroup check requires a constant generator".into(),
        ));
    }
    let n = gen.n();
    let l = gen.superop_at(0.0);
    let mut worst = 0.0f64;
    for i in 0..samples {
        let t: f64 = 0.1 + 2.9 * rng.random::<f64>();
        let e = mat::expm(&l.mapv(|z| z * mat::scalar(t)));
        let g = if i == 0 {
            TorusElement::distinct(n)
        } else {
            TorusElement::random(n, rng)
        };
        let d = adjoint_superop(&g);
        worst = worst.max(mat::max_abs(&mat::commutator(&e, &d)));
    }
    let structural = generator_covariance_report(gen, samples, tol, rng)?;
    let exponential_covariant = worst <= tol;
    Ok(SemigroupReport {
        exponential_residual: worst,
        exponential_covariant,
        structural,
        verdicts_agree: exponential_covariant == structural.covariant,
    })
}

/// First-order D-divisibility witness: for small h the short-time propagator
/// splits as [id + h(-i[H,.] + phi_cp - (1/2){phi*(I),.})] + h tau o psi, and
/// the bracketed part must be CP up to O(h^2).
pub fn first_order_cp_witness(gen: &Generator, t: f64, h: f64) -> Result<crate::linmap::CpReport> {
    let n = gen.n();
    let node = gen.node_at(t);
    let cp_superop = generator_superop(&node.h, &node.phi.cp_part, &node.phi_star_identity)?;
    let s = mat::eye(n * n) + cp_superop.mapv(|z| z * mat::scalar(h));
    MapMatrix::from_superoperator(n, &s)?.cp_report(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::matrix_unit;
    use crate::covariance::{random_covariant_map, CovariantKind};
    use crate::linmap::{BasisTag, CertifiedDecomposable};
    use crate::mat::{eye, max_abs, random_cmat, scalar, ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sigma_z() -> CMat {
        let mut m = mat::czero(2, 2);
        m[(0, 0)] = ONE;
        m[(1, 1)] = -ONE;
        m
    }

    fn sigma_x() -> CMat {
        let mut m = mat::czero(2, 2);
        m[(0, 1)] = ONE;
        m[(1, 0)] = ONE;
        m
    }

    fn dephasing_generator() -> Generator {
        // H = 0, phi = Ad_{sigma_z}: L(rho) = sigma_z rho sigma_z - rho
        let phi = CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z()).unwrap()).unwrap();
        Generator::new(mat::czero(2, 2), phi).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        DensityMatrix::new(CMat::from_elem((2, 2), scalar(0.5))).unwrap()
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(eye(2).mapv(|z| z * scalar(0.5))).is_ok());
        // wrong trace
        assert!(matches!(
            DensityMatrix::new(eye(2)),
            Err(Error::NotDensityMatrix(_))
        ));
        // non-Hermitian
        let mut bad = eye(2).mapv(|z| z * scalar(0.5));
        bad[(0, 1)] = mat::I;
        assert!(DensityMatrix::new(bad).is_err());
        // negative eigenvalue
        let mut neg = mat::czero(2, 2);
        neg[(0, 0)] = scalar(1.5);
        neg[(1, 1)] = scalar(-0.5);
        assert!(DensityMatrix::new(neg).is_err());
        let mut r = rng(90);
        let d = DensityMatrix::random(3, &mut r);
        assert!((mat::trace(d.matrix()).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_generator_action() {
        // L(rho) = sigma_z rho sigma_z - rho kills the diagonal and doubles
        // the decay of coherences
        let gen = dephasing_generator();
        let rho = plus_state();
        let l = gen.apply(0.0, rho.matrix()).unwrap();
        assert!((l[(0, 0)].norm()) < 1e-14);
        assert!((l[(0, 1)] + ONE).norm() < 1e-14);
        // phi*(I) = I for the unitary Kraus sigma_z
        assert!(max_abs(&(gen.phi_star_identity_at(0.0) - &eye(2))) < 1e-12);
    }

    #[test]
    fn generator_annihilates_traces() {
        let mut r = rng(91);
        for seed in 0..5 {
            let cert = random_covariant_map(CovariantKind::Decomposable, 3, seed).unwrap();
            let h = mat::random_hermitian(3, &mut r);
            let gen = Generator::new(h, cert).unwrap();
            for _ in 0..5 {
                let rho = random_cmat(3, &mut r);
                let l = gen.apply(0.0, &rho).unwrap();
                assert!(mat::trace(&l).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn generator_rejects_bad_inputs() {
        let phi = CertifiedDecomposable::from_cp(MapMatrix::identity(2).unwrap()).unwrap();
        let non_herm = random_cmat(2, &mut rng(92));
        assert!(matches!(
            Generator::new(non_herm, phi.clone()),
            Err(Error::NonHermitianHamiltonian(_))
        ));
        // certificate violation: CP slot holding a non-CP map
        let fake = CertifiedDecomposable {
            map: MapMatrix::transpose_map(2).unwrap(),
            cp_part: MapMatrix::transpose_map(2).unwrap(),
            cocp_part: MapMatrix::zero(2, BasisTag::Frobenius).unwrap(),
        };
        assert!(matches!(
            Generator::new(mat::czero(2, 2), fake),
            Err(Error::CertificateViolation(_))
        ));
    }

    #[test]
    fn hamiltonian_only_generator_is_commutator() {
        let mut r = rng(93);
        let h = mat::random_hermitian(2, &mut r);
        let phi =
            CertifiedDecomposable::from_cp(MapMatrix::zero(2, BasisTag::Frobenius).unwrap())
                .unwrap();
        let gen = Generator::new(h.clone(), phi).unwrap();
        let rho = random_cmat(2, &mut r);
        let expected = mat::commutator(&h, &rho).mapv(|z| z * -mat::I);
        assert!(max_abs(&(&gen.apply(0.0, &rho).unwrap() - &expected)) < 1e-12);
    }

    #[test]
    fn dephasing_matches_closed_form() {
        let gen = dephasing_generator();
        let (fam, traj) = evolve(&gen, 2.0, 1e-3, &plus_state()).unwrap();
        assert!(fam.trace_residual_sup < 1e-8);
        for target in [0.5, 1.0, 2.0] {
            let k = fam.index_of(target).unwrap();
            let point = &traj[k];
            let expected = 0.5 * (-2.0 * target).exp();
            assert!(
                (point.rho[(0, 1)].re - expected).abs() < 1e-6,
                "off-diagonal at t = {target}"
            );
            assert!(point.trace_residual < 1e-8);
        }
    }

    #[test]
    fn unitary_generator_preserves_purity() {
        let h = sigma_z().mapv(|z| z * scalar(0.5));
        let phi =
            CertifiedDecomposable::from_cp(MapMatrix::zero(2, BasisTag::Frobenius).unwrap())
                .unwrap();
        let gen = Generator::new(h.clone(), phi).unwrap();
        let rho0 = plus_state();
        let (fam, traj) = evolve(&gen, 1.0, 1e-3, &rho0).unwrap();
        assert!(fam.trace_residual_sup < 1e-9);
        let last = traj.last().unwrap();
        let purity = mat::trace(&last.rho.dot(&last.rho)).re;
        assert!((purity - 1.0).abs() < 1e-9);
        // rho(t) = e^{-iHt} rho0 e^{iHt}
        let u = mat::expm(&h.mapv(|z| z * -mat::I));
        let expected = u.dot(rho0.matrix()).dot(&mat::dagger(&u));
        assert!(max_abs(&(&last.rho - &expected)) < 1e-9);
    }

    #[test]
    fn zero_generator_freezes_the_family() {
        let phi =
            CertifiedDecomposable::from_cp(MapMatrix::zero(2, BasisTag::Frobenius).unwrap())
                .unwrap();
        let gen = Generator::new(mat::czero(2, 2), phi).unwrap();
        let fam = evolve_family(&gen, 1.0, 0.01).unwrap();
        for k in 0..fam.len() {
            assert!(max_abs(&(fam.superop_at_index(k) - &eye(4))) < 1e-13);
        }
    }

    #[test]
    fn evolve_rejects_bad_grid() {
        let gen = dephasing_generator();
        assert!(evolve_family(&gen, 1.0, -0.1).is_err());
        assert!(evolve_family(&gen, 0.05, 0.1).is_err());
        assert!(matches!(
            evolve_family(&gen, 1.0, 0.3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn integrator_is_fourth_order() {
        // halving h shrinks the terminal error by ~16 against an h/8
        // reference; the generator is rescaled to unit norm so the coarse
        // step is already asymptotic
        let mut r = rng(94);
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 3).unwrap();
        let h_mat = mat::random_hermitian(2, &mut r);
        let raw = Generator::new(h_mat.clone(), cert.clone()).unwrap();
        let s = scalar(1.0 / raw.norm_sup().max(1.0));
        let cert = CertifiedDecomposable {
            map: cert.map.scale(s),
            cp_part: cert.cp_part.scale(s),
            cocp_part: cert.cocp_part.scale(s),
        };
        let gen = Generator::new(h_mat.mapv(|z| z * s), cert).unwrap();
        let t = 0.5;
        let coarse = evolve_family(&gen, t, 0.05).unwrap();
        let fine = evolve_family(&gen, t, 0.025).unwrap();
        let reference = evolve_family(&gen, t, 0.00625).unwrap();
        let sc = coarse.superop_at_index(coarse.len() - 1);
        let sf = fine.superop_at_index(fine.len() - 1);
        let sr = reference.superop_at_index(reference.len() - 1);
        let e_coarse = max_abs(&(sc - sr));
        let e_fine = max_abs(&(sf - sr));
        let ratio = e_coarse / e_fine;
        assert!(
            (ratio - 16.0).abs() <= 0.2 * 16.0,
            "order-4 ratio {ratio:.2}"
        );
    }

    #[test]
    fn propagator_examples() {
        let gen = dephasing_generator();
        let fam = evolve_family(&gen, 1.0, 0.01).unwrap();
        // t = s: identity
        let v = fam.propagator(0.5, 0.5).unwrap();
        let id = MapMatrix::identity(2).unwrap();
        assert!(v.distance(&id).unwrap() < 1e-12);
        // semigroup: V_{t,s} = Lambda_{t-s}
        let v = fam.propagator(0.7, 0.3).unwrap().superoperator().unwrap();
        let direct = fam.map_at(0.4).unwrap().superoperator().unwrap();
        assert!(max_abs(&(&v - &direct)) < 1e-8);
        // composition law V_{t,s} o Lambda_s = Lambda_t
        let vs = fam.propagator(0.9, 0.4).unwrap().superoperator().unwrap();
        let ls = fam.map_at(0.4).unwrap().superoperator().unwrap();
        let lt = fam.map_at(0.9).unwrap().superoperator().unwrap();
        assert!(max_abs(&(&vs.dot(&ls) - &lt)) < 1e-8);
        // dephasing propagators are CP
        let v = fam.propagator(0.8, 0.2).unwrap();
        assert!(v.is_cp(1e-9).unwrap());
        // off-grid time rejected
        assert!(matches!(
            fam.propagator(0.505, 0.2),
            Err(Error::TimeNotOnGrid(_))
        ));
        assert!(fam.propagator(0.2, 0.8).is_err());
    }

    #[test]
    fn semigroup_law_for_constant_generators() {
        let mut r = rng(95);
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 9).unwrap();
        let gen = Generator::new(mat::random_hermitian(2, &mut r), cert).unwrap();
        let fam = evolve_family(&gen, 2.0, 1e-3).unwrap();
        for (t, s) in [(1.5, 0.5), (2.0, 1.0), (0.8, 0.3)] {
            let lt = fam.map_at(t).unwrap().superoperator().unwrap();
            let ls = fam.map_at(s).unwrap().superoperator().unwrap();
            let lts = fam.map_at(t - s).unwrap().superoperator().unwrap();
            assert!(max_abs(&(&lts.dot(&ls) - &lt)) < 1e-8);
        }
    }

    #[test]
    fn generator_covariance_report_examples() {
        let mut r = rng(96);
        // H diagonal + covariant phi: covariant
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 1).unwrap();
        let h_diag = sigma_z();
        let gen = Generator::new(h_diag, cert.clone()).unwrap();
        let rep = generator_covariance_report(&gen, 15, 1e-10, &mut r).unwrap();
        assert!(rep.covariant, "{rep:?}");

        // H = sigma_x breaks the commutant membership
        let gen2 = Generator::new(sigma_x(), cert).unwrap();
        let rep2 = generator_covariance_report(&gen2, 15, 1e-10, &mut r).unwrap();
        assert!(!rep2.covariant);
        assert!(rep2.hamiltonian_residual > 0.5);

        // H = 0, phi non-covariant
        let kraus: Vec<CMat> = (0..2).map(|_| random_cmat(2, &mut r)).collect();
        let messy = CertifiedDecomposable::from_cp(
            MapMatrix::from_kraus(2, &kraus).unwrap(),
        )
        .unwrap();
        let gen3 = Generator::new(mat::czero(2, 2), messy).unwrap();
        let rep3 = generator_covariance_report(&gen3, 15, 1e-10, &mut r).unwrap();
        assert!(!rep3.covariant);
        assert!(rep3.hamiltonian_residual < 1e-14);
    }

    #[test]
    fn family_and_generator_covariance_agree() {
        let mut r = rng(97);
        // covariant: dephasing (diagonal Kraus commutes with U(g))
        let gen = dephasing_generator();
        let fam = evolve_family(&gen, 1.0, 0.01).unwrap();
        let frep = dynamics_covariance_check(&fam, 20, 1e-8, &mut r);
        let grep = generator_covariance_report(&gen, 20, 1e-10, &mut r).unwrap();
        assert!(frep.covariant && grep.covariant);

        // non-covariant: H = sigma_x
        let phi = CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z()).unwrap()).unwrap();
        let gen2 = Generator::new(sigma_x(), phi).unwrap();
        let fam2 = evolve_family(&gen2, 1.0, 0.01).unwrap();
        let frep2 = dynamics_covariance_check(&fam2, 20, 1e-8, &mut r);
        let grep2 = generator_covariance_report(&gen2, 20, 1e-10, &mut r).unwrap();
        assert!(!frep2.covariant && !grep2.covariant);

        // frozen family (L = 0) is trivially covariant
        let zero_phi =
            CertifiedDecomposable::from_cp(MapMatrix::zero(2, BasisTag::Frobenius).unwrap())
                .unwrap();
        let gen3 = Generator::new(mat::czero(2, 2), zero_phi).unwrap();
        let fam3 = evolve_family(&gen3, 0.5, 0.01).unwrap();
        assert!(dynamics_covariance_check(&fam3, 10, 1e-10, &mut r).covariant);
    }

    #[test]
    fn propagator_covariance_matches_family_covariance() {
        let mut r = rng(98);
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 17).unwrap();
        let gen = Generator::new(sigma_z(), cert).unwrap();
        let fam = evolve_family(&gen, 0.5, 0.01).unwrap();
        let prep = propagator_covariance_check(&fam, 15, 1e-7, &mut r).unwrap();
        assert!(prep.covariant, "max residual {:.3e}", prep.max_residual);

        let phi = CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z()).unwrap()).unwrap();
        let gen2 = Generator::new(sigma_x(), phi).unwrap();
        let fam2 = evolve_family(&gen2, 0.5, 0.01).unwrap();
        let prep2 = propagator_covariance_check(&fam2, 15, 1e-7, &mut r).unwrap();
        assert!(!prep2.covariant);
    }

    #[test]
    fn semigroup_check_examples() {
        let mut r = rng(99);
        // covariant structure
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 23).unwrap();
        let gen = Generator::new(sigma_z(), cert.clone()).unwrap();
        let rep = semigroup_structure_check(&gen, 10, 1e-8, &mut r).unwrap();
        assert!(rep.exponential_covariant && rep.structural.covariant && rep.verdicts_agree);

        // broken Hamiltonian
        let gen2 = Generator::new(sigma_x(), cert).unwrap();
        let rep2 = semigroup_structure_check(&gen2, 10, 1e-8, &mut r).unwrap();
        assert!(!rep2.exponential_covariant && !rep2.structural.covariant);
        assert!(rep2.verdicts_agree);

        // L = 0
        let zero_phi =
            CertifiedDecomposable::from_cp(MapMatrix::zero(2, BasisTag::Frobenius).unwrap())
                .unwrap();
        let gen3 = Generator::new(mat::czero(2, 2), zero_phi).unwrap();
        let rep3 = semigroup_structure_check(&gen3, 10, 1e-8, &mut r).unwrap();
        assert!(rep3.exponential_covariant && rep3.verdicts_agree);

        // time-dependent generator is rejected
        let phi_t = CertifiedDecomposable::from_cp(MapMatrix::identity(2).unwrap()).unwrap();
        let gen4 = Generator::piecewise(
            vec![0.0, 0.5],
            vec![mat::czero(2, 2), mat::czero(2, 2)],
            vec![phi_t.clone(), phi_t],
        )
        .unwrap();
        assert!(semigroup_structure_check(&gen4, 5, 1e-8, &mut r).is_err());
    }

    #[test]
    fn piecewise_generator_holds_between_nodes() {
        let phi_a = CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z()).unwrap()).unwrap();
        let phi_b = CertifiedDecomposable::from_cp(MapMatrix::identity(2).unwrap()).unwrap();
        let gen = Generator::piecewise(
            vec![0.0, 1.0],
            vec![mat::czero(2, 2), sigma_z()],
            vec![phi_a, phi_b],
        )
        .unwrap();
        assert!(!gen.is_constant());
        assert!(max_abs(gen.hamiltonian_at(0.5)) < 1e-15);
        assert!(max_abs(&(gen.hamiltonian_at(1.7) - &sigma_z())) < 1e-15);
        // callback sampling produces the same structure
        let gen2 = Generator::from_callbacks(
            &[0.0, 1.0],
            |t| {
                if t < 1.0 {
                    mat::czero(2, 2)
                } else {
                    sigma_z()
                }
            },
            |t| {
                if t < 1.0 {
                    CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z()).unwrap()).unwrap()
                } else {
                    CertifiedDecomposable::from_cp(MapMatrix::identity(2).unwrap()).unwrap()
                }
            },
        )
        .unwrap();
        assert!(max_abs(&(gen2.superop_at(1.2) - gen.superop_at(1.2))) < 1e-13);
    }

    #[test]
    fn first_order_witness_is_cp_for_small_steps() {
        let mut r = rng(100);
        for seed in 40..43 {
            let cert = random_covariant_map(CovariantKind::Decomposable, 2, seed).unwrap();
            let gen = Generator::new(mat::random_hermitian(2, &mut r), cert).unwrap();
            let rep = first_order_cp_witness(&gen, 0.0, 1e-3).unwrap();
            assert!(
                rep.min_eigenvalue >= -1e-6,
                "min eigenvalue {:.3e}",
                rep.min_eigenvalue
            );
        }
    }

    #[test]
    fn evolution_blowup_is_detected() {
        // stiff generator integrated with a far-too-coarse step: the RK4
        // update diverges and the norm guard must trip instead of silently
        // returning garbage
        let phi = CertifiedDecomposable::from_cp(
            MapMatrix::ad(&sigma_z().mapv(|z| z * scalar(100.0))).unwrap(),
        )
        .unwrap();
        let gen = Generator::new(mat::czero(2, 2), phi).unwrap();
        assert!(matches!(
            evolve_family(&gen, 1.0, 0.01),
            Err(Error::IntegrationUnstable { .. })
        ));
        // the same generator integrates fine at an appropriate step
        assert!(evolve_family(&gen, 0.001, 1e-6).is_ok());
        let _ = ZERO;
        let _ = matrix_unit(2, 0, 0);
    }
}
