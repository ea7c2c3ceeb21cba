//! Built-in verification suites, runnable from the CLI. These mirror the
//! full acceptance battery at reduced sample counts so a single command can
//! sanity-check an installation in seconds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::FrobeniusBasis;
use crate::covariance::{
    self, build_alpha, build_beta, classify_covariant_blocks, cocp_conjugate_test,
    cp_covariant_test, exp_commutation_equiv, project_covariant, random_covariant_map,
    BlockClassification, CommutationVerdict, ConjugateCovariantBlocks, CovariantBlocks,
    CovariantKind, ProjectionMode, TorusElement,
};
use crate::dilation::{costinespring, covariance_intertwiner, jordan_dilation, stinespring};
use crate::dynamics::{
    dynamics_covariance_check, evolve_family, generator_covariance_report, Generator,
};
use crate::error::{Error, Result};
use crate::linmap::{BasisTag, CertifiedDecomposable, MapMatrix};
use crate::mat::{self, CMat, CVec, C64};

/// Random constant generator rescaled to roughly unit superoperator norm;
/// rescaling by a positive factor keeps the certificate valid.
pub fn normalized_random_generator(
    n: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Generator> {
    let cert = random_covariant_map(CovariantKind::Decomposable, n, seed)?;
    let h = mat::random_hermitian(n, rng);
    let raw = Generator::new(h.clone(), cert.clone())?;
    let scale = mat::scalar(1.0 / raw.norm_sup().max(1.0));
    let cert_scaled = CertifiedDecomposable {
        map: cert.map.scale(scale),
        cp_part: cert.cp_part.scale(scale),
        cocp_part: cert.cocp_part.scale(scale),
    };
    Generator::new(h.mapv(|z| z * scale), cert_scaled)
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub details: BTreeMap<String, f64>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult {
            name: name.to_string(),
            passed: true,
            details: BTreeMap::new(),
        }
    }

    fn check(&mut self, key: &str, residual: f64, tol: f64) {
        self.details.insert(key.to_string(), residual);
        if !(residual <= tol) {
            self.passed = false;
        }
    }

    fn check_bool(&mut self, key: &str, ok: bool) {
        self.details.insert(key.to_string(), if ok { 0.0 } else { 1.0 });
        if !ok {
            self.passed = false;
        }
    }
}

/// Run all suites at dimension `n` with reduced sample counts.
pub fn run(n: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        basis_suite(&mut rng)?,
        frame_suite(n.min(5), &mut rng)?,
        covariance_equivalence_suite(n, &mut rng)?,
        projector_suite(n.min(4), &mut rng)?,
        structure_theorem_suite(n, &mut rng)?,
        exp_commutation_suite(&mut rng)?,
        dilation_suite(n.min(3), &mut rng)?,
        dynamics_suite(&mut rng)?,
    ])
}

fn basis_suite(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("basis");
    let mut gram_worst = 0.0f64;
    let mut round_trip_worst = 0.0f64;
    for n in 2..=8 {
        let b = FrobeniusBasis::new(n)?;
        gram_worst = gram_worst.max(mat::max_abs(&(&b.gram() - &mat::eye(n * n))));
        for _ in 0..20 {
            let a = mat::random_cmat(n, rng);
            let back = b.reconstruct(&b.expand(&a)?)?;
            round_trip_worst = round_trip_worst.max(mat::max_abs(&(&back - &a)));
        }
    }
    suite.check("gram_deviation", gram_worst, 1e-12);
    suite.check("round_trip", round_trip_worst, 1e-12);
    Ok(suite)
}

fn frame_suite(n_max: usize, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("frames");
    let mut unitarity = 0.0f64;
    let mut symmetry = 0.0f64;
    for n in 2..=n_max.max(2) {
        let basis = FrobeniusBasis::new(n)?;
        for _ in 0..10 {
            let g = TorusElement::random(n, rng);
            // closed form vs inner products is enforced inside the builders
            let alpha = build_alpha(&g, &basis)?;
            let beta = build_beta(&g, &basis)?;
            unitarity = unitarity
                .max(mat::max_abs(&(mat::dagger(&alpha).dot(&alpha) - mat::eye(n * n))))
                .max(mat::max_abs(&(mat::dagger(&beta).dot(&beta) - mat::eye(n * n))));
            let r = covariance::beta_diagonal_block(&g, &basis);
            symmetry = symmetry.max(mat::max_abs(&(&r - &mat::transpose(&r))));
        }
    }
    suite.check("frame_unitarity", unitarity, 1e-12);
    suite.check("r_symmetry", symmetry, 1e-12);
    Ok(suite)
}

fn covariance_equivalence_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("covariance_equivalence");
    let mut structured_worst = 0.0f64;
    let mut disagreements = 0usize;
    for i in 0..10 {
        let cert = random_covariant_map(CovariantKind::Decomposable, n, 1000 + i)?;
        let rep = covariance::covariance_report(&cert.map, 10, rng)?;
        structured_worst = structured_worst
            .max(rep.defining_residual)
            .max(rep.commutation_residual);
        if !rep.passes(1e-10) {
            disagreements += 1;
        }
    }
    for _ in 0..10 {
        let c = mat::random_hermitian(n * n, rng);
        let m = MapMatrix::new(n, BasisTag::Frobenius, c)?;
        let rep = covariance::covariance_report(&m, 10, rng)?;
        let defining_fails = rep.defining_residual > 1e-10;
        let commutation_fails = rep.commutation_residual > 1e-10;
        if defining_fails != commutation_fails || !defining_fails {
            disagreements += 1;
        }
    }
    suite.check("structured_residual", structured_worst, 1e-10);
    suite.check_bool("zero_disagreements", disagreements == 0);
    Ok(suite)
}

fn projector_suite(n_max: usize, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("projector");
    let mut mode_gap = 0.0f64;
    let mut idempotence = 0.0f64;
    let mut cp_floor = 0.0f64;
    for n in 2..=n_max.max(2) {
        for _ in 0..5 {
            let m = MapMatrix::new(n, BasisTag::Frobenius, mat::random_cmat(n * n, rng))?;
            let quad = project_covariant(&m, ProjectionMode::Quadrature)?;
            let closed = project_covariant(&m, ProjectionMode::ClosedForm)?;
            mode_gap = mode_gap.max(quad.distance(&closed)?);
            let twice = project_covariant(&closed, ProjectionMode::ClosedForm)?;
            idempotence = idempotence.max(twice.distance(&closed)?);
        }
        for _ in 0..5 {
            let kraus: Vec<CMat> = (0..2).map(|_| mat::random_cmat(n, rng)).collect();
            let cp = MapMatrix::from_kraus(n, &kraus)?;
            let p = project_covariant(&cp, ProjectionMode::ClosedForm)?;
            cp_floor = cp_floor.min(p.cp_report(1e-9)?.min_eigenvalue);
        }
    }
    suite.check("mode_agreement", mode_gap, 1e-11);
    suite.check("idempotence", idempotence, 1e-11);
    suite.check_bool("cp_preserved", cp_floor >= -1e-9);
    suite.details.insert("cp_min_eigenvalue".into(), cp_floor);
    Ok(suite)
}

fn structure_theorem_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("structure_theorems");
    let d = n * (n - 1) / 2;
    let mut disagreements = 0usize;
    for _ in 0..30 {
        let mut c1 = CVec::zeros(d);
        let mut c2 = CVec::zeros(d);
        for k in 0..d {
            c1[k] = mat::scalar(rng.sample::<f64, _>(rand_distr::StandardNormal));
            c2[k] = mat::I * mat::scalar(rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        let blocks = CovariantBlocks {
            n,
            c1,
            c2,
            c3: mat::random_hermitian(n, rng),
        };
        if cp_covariant_test(&blocks, 1e-10)? != blocks.reassemble()?.is_cp(1e-10)? {
            disagreements += 1;
        }
    }
    for _ in 0..30 {
        let mut c11 = CVec::zeros(d);
        let mut c12 = CVec::zeros(d);
        let mut c21 = CVec::zeros(d);
        let mut c22 = CVec::zeros(d);
        for k in 0..d {
            let s: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
            let t: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
            let w = C64::from_polar(
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                std::f64::consts::TAU * rng.random::<f64>(),
            );
            c11[k] = mat::scalar(s.abs());
            c22[k] = mat::scalar(t.abs());
            c12[k] = w;
            c21[k] = w.conj();
        }
        let mut a = CVec::zeros(n);
        for i in 0..n {
            a[i] = mat::scalar(rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        let blocks = ConjugateCovariantBlocks {
            c11,
            c12,
            c21,
            c22,
            a,
        };
        if cocp_conjugate_test(&blocks, 1e-10) != blocks.reassemble()?.is_cp(1e-10)? {
            disagreements += 1;
        }
    }
    suite.check_bool("block_tests_agree_with_is_cp", disagreements == 0);

    let mut c33_gap = 0.0f64;
    for dim in 2..=8 {
        let basis = FrobeniusBasis::new(dim)?;
        for _ in 0..5 {
            let mut a = CVec::zeros(dim);
            for i in 0..dim {
                a[i] = C64::new(
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                );
            }
            let c33 = covariance::build_c33(&a);
            let mut oracle = mat::czero(dim, dim);
            for i in 0..dim {
                for p in 0..dim {
                    for q in 0..dim {
                        oracle[(p, q)] += a[i]
                            * basis.diagonal_matrix(p)[(i, i)]
                            * basis.diagonal_matrix(q)[(i, i)];
                    }
                }
            }
            c33_gap = c33_gap.max(mat::max_abs(&(&c33 - &oracle)));
        }
    }
    suite.check("c33_oracle_gap", c33_gap, 1e-12);
    Ok(suite)
}

fn exp_commutation_suite(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("exp_commutation");
    let mut violations = 0usize;
    for trial in 0..50 {
        let dim = 2 + (trial % 3);
        let h = mat::random_hermitian(dim, rng);
        let a = h.mapv(|z| z * mat::I * mat::scalar(0.5 / mat::one_norm(&h).max(1.0)));
        let b = if trial % 2 == 0 {
            // commuting partner: polynomial in A
            let a2 = a.dot(&a);
            &a2 + &a.mapv(|z| z * mat::scalar(0.7)) + mat::eye(dim)
        } else {
            mat::random_cmat(dim, rng)
        };
        match exp_commutation_equiv(&a, &b, 1e-10)? {
            CommutationVerdict::Violation => violations += 1,
            _ => {}
        }
    }
    suite.check_bool("no_violations", violations == 0);

    // documented congruent counterexample A = diag(0, 2 pi i)
    let mut a_bad = mat::czero(2, 2);
    a_bad[(1, 1)] = mat::I * mat::scalar(std::f64::consts::TAU);
    let b = crate::basis::matrix_unit(2, 0, 1);
    let precondition_rejects = matches!(
        exp_commutation_equiv(&a_bad, &b, 1e-10),
        Err(Error::CongruenceViolation(_))
    );
    suite.check_bool("congruent_counterexample_rejected", precondition_rejects);
    let e_comm = mat::max_abs(&mat::commutator(&mat::expm(&a_bad), &b));
    let a_comm = mat::max_abs(&mat::commutator(&a_bad, &b));
    suite.check("counterexample_exp_commutator", e_comm, 1e-12);
    suite.check_bool("counterexample_a_commutator_nonzero", a_comm > 1.0);
    Ok(suite)
}

fn dilation_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("dilation");
    let mut reconstruction = 0.0f64;
    let mut intertwine = 0.0f64;
    let canonical = crate::basis::canonical_basis(n)?;
    let recon_check = |d: &crate::dilation::Dilation, m: &MapMatrix| -> Result<f64> {
        let mut worst = 0.0f64;
        for e in &canonical {
            worst = worst.max(mat::max_abs(&(&d.reconstruct(e) - &m.apply(e)?)));
        }
        Ok(worst)
    };
    for i in 0..5 {
        let cp = random_covariant_map(CovariantKind::Cp, n, 2000 + i)?;
        let d = stinespring(&cp.map)?;
        reconstruction = reconstruction.max(recon_check(&d, &cp.map)?);
        let rep = covariance_intertwiner(&d, 10, rng)?;
        intertwine = intertwine
            .max(rep.intertwine_residual)
            .max(rep.representation_residual);

        let cocp = random_covariant_map(CovariantKind::Cocp, n, 2000 + i)?;
        let d2 = costinespring(&cocp.map)?;
        reconstruction = reconstruction.max(recon_check(&d2, &cocp.map)?);
        let rep2 = covariance_intertwiner(&d2, 10, rng)?;
        intertwine = intertwine
            .max(rep2.intertwine_residual)
            .max(rep2.representation_residual);

        let dec = random_covariant_map(CovariantKind::Decomposable, n, 2000 + i)?;
        let d3 = jordan_dilation(&dec.cp_part, &dec.cocp_part)?;
        reconstruction = reconstruction.max(recon_check(&d3, &dec.map)?);
        let rep3 = covariance_intertwiner(&d3, 10, rng)?;
        intertwine = intertwine
            .max(rep3.intertwine_residual)
            .max(rep3.representation_residual);
    }
    suite.check("reconstruction", reconstruction, 1e-10);
    suite.check("intertwiner", intertwine, 1e-9);

    let mut rejected = 0usize;
    for _ in 0..2 {
        let kraus: Vec<CMat> = (0..2).map(|_| mat::random_cmat(n, rng)).collect();
        let m = MapMatrix::from_kraus(n, &kraus)?;
        let d = stinespring(&m)?;
        if matches!(
            covariance_intertwiner(&d, 10, rng),
            Err(Error::NoIntertwiner { .. })
        ) {
            rejected += 1;
        }
    }
    suite.check_bool("non_covariant_controls_rejected", rejected == 2);
    Ok(suite)
}

fn dynamics_suite(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("dynamics");

    // dephasing closed form
    let mut sigma_z = mat::czero(2, 2);
    sigma_z[(0, 0)] = mat::ONE;
    sigma_z[(1, 1)] = -mat::ONE;
    let phi = CertifiedDecomposable::from_cp(MapMatrix::ad(&sigma_z)?)?;
    let gen = Generator::new(mat::czero(2, 2), phi)?;
    let fam = evolve_family(&gen, 2.0, 1e-3)?;
    let rho0 = crate::dynamics::DensityMatrix::new(CMat::from_elem((2, 2), mat::scalar(0.5)))?;
    let traj = fam.trajectory(&rho0)?;
    let mut dephasing_err = 0.0f64;
    for target in [0.5, 1.0, 2.0] {
        let k = fam.index_of(target)?;
        let expected = 0.5 * (-2.0 * target).exp();
        dephasing_err = dephasing_err.max((traj[k].rho[(0, 1)].re - expected).abs());
    }
    suite.check("dephasing_closed_form", dephasing_err, 1e-6);
    suite.check("trace_drift", fam.trace_residual_sup, 1e-8);

    // integrator order on a random constant generator, normalized so the
    // coarse step sits in the asymptotic regime
    let gen2 = normalized_random_generator(2, 5000, rng)?;
    let coarse = evolve_family(&gen2, 0.5, 0.05)?;
    let fine = evolve_family(&gen2, 0.5, 0.025)?;
    let reference = evolve_family(&gen2, 0.5, 0.00625)?;
    let e1 = mat::max_abs(
        &(coarse.superop_at_index(coarse.len() - 1)
            - reference.superop_at_index(reference.len() - 1)),
    );
    let e2 = mat::max_abs(
        &(fine.superop_at_index(fine.len() - 1)
            - reference.superop_at_index(reference.len() - 1)),
    );
    let ratio = e1 / e2;
    suite.details.insert("order_ratio".into(), ratio);
    suite.check_bool("order_four", (ratio - 16.0).abs() <= 0.2 * 16.0);

    // regular-generator covariance equivalence on a small battery
    let mut mismatches = 0usize;
    for i in 0..6 {
        let covariant_structure = i % 2 == 0;
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, 6000 + i)?;
        let (h, phi) = if covariant_structure {
            (sigma_z.clone(), cert)
        } else {
            let mut sigma_x = mat::czero(2, 2);
            sigma_x[(0, 1)] = mat::ONE;
            sigma_x[(1, 0)] = mat::ONE;
            (sigma_x, cert)
        };
        let g = Generator::new(h, phi)?;
        let grep = generator_covariance_report(&g, 10, 1e-10, rng)?;
        let fam = evolve_family(&g, 0.5, 0.01)?;
        let frep = dynamics_covariance_check(&fam, 10, 1e-8, rng);
        if grep.covariant != frep.covariant {
            mismatches += 1;
        }
    }
    suite.check_bool("covariance_equivalence", mismatches == 0);

    // semigroup law for a constant generator
    let cert = random_covariant_map(CovariantKind::Decomposable, 2, 7000)?;
    let gen3 = Generator::new(mat::random_hermitian(2, rng), cert)?;
    let fam3 = evolve_family(&gen3, 1.0, 1e-3)?;
    let mut semigroup_gap = 0.0f64;
    for (t, s) in [(0.8, 0.3), (1.0, 0.5)] {
        let lt = fam3.map_at(t)?.superoperator()?;
        let ls = fam3.map_at(s)?.superoperator()?;
        let lts = fam3.map_at(t - s)?.superoperator()?;
        semigroup_gap = semigroup_gap.max(mat::max_abs(&(&lts.dot(&ls) - &lt)));
    }
    suite.check("semigroup_law", semigroup_gap, 1e-8);

    // classification integration: projector output classifies into blocks
    let m = MapMatrix::new(2, BasisTag::Frobenius, mat::random_cmat(4, rng))?;
    let p = project_covariant(&m, ProjectionMode::ClosedForm)?;
    let classified = matches!(
        classify_covariant_blocks(&p, 1e-10)?,
        BlockClassification::Covariant(_)
    );
    suite.check_bool("projection_classifies", classified);
    Ok(suite)
}
