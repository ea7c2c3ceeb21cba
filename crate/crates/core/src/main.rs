use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use covdec::covariance::{self, CovariantKind, ProjectionMode};
use covdec::dilation::{self, DilationKind};
use covdec::dynamics::{self, DensityMatrix};
use covdec::json::{
    cmat_from_json, cmat_to_json, CertificateJson, GeneratorJson, MapFileJson, MapMatrixJson,
};
use covdec::report::{inputs_digest, Report};
use covdec::{Error, FrobeniusBasis, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "covdec",
    version,
    about = "Covariant decomposable maps on matrix algebras: bases, positivity checks, covariance projections, dilations and D-divisible dynamics"
)]
struct Cli {
    /// Emit machine-readable JSON reports
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the canonical and Frobenius bases of M_n
    Basis {
        #[arg(long)]
        n: usize,
    },
    /// Check map properties: Hermiticity preservation, CP, coCP
    Check {
        #[arg(long)]
        map: PathBuf,
        /// Comma-separated list drawn from hp, cp, cocp
        #[arg(long, default_value = "hp,cp,cocp")]
        props: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Test covariance (or conjugate covariance) under the diagonal unitaries
    Covcheck {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        conjugate: bool,
        #[arg(long, default_value_t = 30)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Project a map onto the covariant subspace
    Project {
        #[arg(long)]
        map: PathBuf,
        /// quadrature | closed
        #[arg(long, default_value = "closed")]
        mode: String,
    },
    /// Sample a random covariant map together with its certificate
    Random {
        /// cp | cocp | dec
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Construct a dilation and optionally verify its covariance intertwiner
    Dilate {
        #[arg(long)]
        map: PathBuf,
        /// auto | cp | cocp | jordan (jordan expects a certificate file)
        #[arg(long, default_value = "auto")]
        kind: String,
        #[arg(long)]
        verify_covariance: bool,
        #[arg(long, default_value_t = 30)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrate the master equation and report on the family
    Evolve {
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        rho0: PathBuf,
        /// Comma-separated list drawn from covariance, trace, divisibility
        #[arg(long, default_value = "trace")]
        report: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit every k-th trajectory node
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Run the built-in verification suites
    Selftest {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<'a, T: serde::Deserialize<'a>>(bytes: &'a [u8], what: &str) -> Result<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| Error::InvalidInput(format!("malformed JSON in {what}: {e}")))
}

fn emit(report: &Report, json: bool) {
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Basis { n } => cmd_basis(*n, cli.json),
        Command::Check { map, props, tol } => cmd_check(map, props, *tol, cli.json),
        Command::Covcheck {
            map,
            conjugate,
            samples,
            tol,
            seed,
        } => cmd_covcheck(map, *conjugate, *samples, *tol, *seed, cli.json),
        Command::Project { map, mode } => cmd_project(map, mode, cli.json),
        Command::Random { kind, n, seed } => cmd_random(kind, *n, *seed, cli.json),
        Command::Dilate {
            map,
            kind,
            verify_covariance,
            samples,
            seed,
        } => cmd_dilate(map, kind, *verify_covariance, *samples, *seed, cli.json),
        Command::Evolve {
            generator,
            t,
            h,
            rho0,
            report,
            samples,
            seed,
            stride,
        } => cmd_evolve(generator, *t, *h, rho0, report, *samples, *seed, *stride, cli.json),
        Command::Selftest { n, seed } => cmd_selftest(*n, *seed, cli.json),
    }
}

fn cmd_basis(n: usize, json: bool) -> Result<bool> {
    let basis = FrobeniusBasis::new(n)?;
    let digest = inputs_digest([format!("basis n={n}").as_bytes()]);
    let mut report = Report::new("basis", digest);
    let gram_dev = covdec::mat::max_abs(&(&basis.gram() - &covdec::mat::eye(n * n)));
    report.verdict("orthonormal", gram_dev < 1e-12, gram_dev, 1e-12);
    let matrices: Vec<_> = basis.matrices().iter().map(cmat_to_json).collect();
    let pair_map: Vec<(usize, usize)> = basis.pair_map().to_vec();
    report.artifacts = Some(serde_json::json!({
        "n": n,
        "matrices": matrices,
        "pair_map": pair_map,
    }));
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_check(map_path: &PathBuf, props: &str, tol: f64, json: bool) -> Result<bool> {
    let bytes = read_file(map_path)?;
    let parsed: MapFileJson = parse_json(&bytes, "--map file")?;
    let m = parsed.primary_map()?;
    let digest = inputs_digest([format!("check props={props} tol={tol}").as_bytes(), &bytes]);
    let mut report = Report::new("check", digest);
    for prop in props.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match prop {
            "hp" => {
                let defect = m.hermiticity_defect();
                report.verdict("hp", defect <= tol, defect, tol);
            }
            "cp" => {
                let rep = m.cp_report(tol)?;
                report.verdict("cp", rep.is_cp, rep.min_eigenvalue, tol);
                report.residual("cp_min_eigenvalue", rep.min_eigenvalue);
            }
            "cocp" => {
                let rep = m.cocp_report(tol)?;
                report.verdict("cocp", rep.is_cp, rep.min_eigenvalue, tol);
                report.residual("cocp_min_eigenvalue", rep.min_eigenvalue);
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown property `{other}` in --props (expected hp, cp, cocp)"
                )))
            }
        }
    }
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_covcheck(
    map_path: &PathBuf,
    conjugate: bool,
    samples: usize,
    tol: f64,
    seed: u64,
    json: bool,
) -> Result<bool> {
    let bytes = read_file(map_path)?;
    let parsed: MapFileJson = parse_json(&bytes, "--map file")?;
    let m = parsed.primary_map()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digest = inputs_digest([
        format!("covcheck conjugate={conjugate} samples={samples} tol={tol} seed={seed}")
            .as_bytes(),
        &bytes,
    ]);
    let mut report = Report::new("covcheck", digest);
    let rep = if conjugate {
        covariance::conjugate_covariance_report(&m, samples, &mut rng)?
    } else {
        covariance::covariance_report(&m, samples, &mut rng)?
    };
    let name = if conjugate { "conjugate_covariant" } else { "covariant" };
    report.verdict(
        name,
        rep.passes(tol),
        rep.defining_residual.max(rep.commutation_residual),
        tol,
    );
    report.residual("defining_residual", rep.defining_residual);
    report.residual("commutation_residual", rep.commutation_residual);
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_project(map_path: &PathBuf, mode: &str, json: bool) -> Result<bool> {
    let bytes = read_file(map_path)?;
    let parsed: MapFileJson = parse_json(&bytes, "--map file")?;
    let m = parsed.primary_map()?;
    let mode_enum = match mode {
        "quadrature" => ProjectionMode::Quadrature,
        "closed" | "closed_form" => ProjectionMode::ClosedForm,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown projection mode `{other}` (expected quadrature or closed)"
            )))
        }
    };
    let projected = covariance::project_covariant(&m, mode_enum)?;
    let digest = inputs_digest([format!("project mode={mode}").as_bytes(), &bytes]);
    let mut report = Report::new("project", digest);
    report.residual("distance_to_input", projected.distance(&m)?);
    // idempotence cross-check through the other route when cheap
    if m.n() <= 4 {
        let other = covariance::project_covariant(
            &m,
            match mode_enum {
                ProjectionMode::Quadrature => ProjectionMode::ClosedForm,
                ProjectionMode::ClosedForm => ProjectionMode::Quadrature,
            },
        )?;
        let gap = projected.distance(&other)?;
        report.verdict("modes_agree", gap <= 1e-11, gap, 1e-11);
    }
    report.artifacts = Some(serde_json::json!({
        "projected": MapMatrixJson::from_map(&projected),
    }));
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_random(kind: &str, n: usize, seed: u64, json: bool) -> Result<bool> {
    let kind_enum: CovariantKind = kind.parse()?;
    let cert = covariance::random_covariant_map(kind_enum, n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let digest = inputs_digest([format!("random kind={kind} n={n} seed={seed}").as_bytes()]);
    let mut report = Report::new("random", digest);
    let rep = covariance::covariance_report(&cert.map, 20, &mut rng)?;
    report.verdict(
        "covariant",
        rep.passes(1e-10),
        rep.defining_residual.max(rep.commutation_residual),
        1e-10,
    );
    report.artifacts = Some(serde_json::to_value(CertificateJson::from_certificate(
        &cert,
        Some(kind.to_string()),
        Some(seed),
    ))
    .expect("certificate serialization cannot fail"));
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_dilate(
    map_path: &PathBuf,
    kind: &str,
    verify_covariance: bool,
    samples: usize,
    seed: u64,
    json: bool,
) -> Result<bool> {
    let bytes = read_file(map_path)?;
    let parsed: MapFileJson = parse_json(&bytes, "--map file")?;
    let digest = inputs_digest([
        format!("dilate kind={kind} verify={verify_covariance} samples={samples} seed={seed}")
            .as_bytes(),
        &bytes,
    ]);
    let mut report = Report::new("dilate", digest);

    let dilation = match kind {
        "cp" => dilation::stinespring(&parsed.primary_map()?)?,
        "cocp" => dilation::costinespring(&parsed.primary_map()?)?,
        "jordan" => match &parsed {
            MapFileJson::Certificate(cert_json) => {
                let cert = cert_json.to_certificate()?;
                dilation::jordan_dilation(&cert.cp_part, &cert.cocp_part)?
            }
            MapFileJson::Bare(_) => {
                return Err(Error::InvalidInput(
                    "--kind jordan needs a certificate file with cp_part and cocp_part".into(),
                ))
            }
        },
        "auto" => {
            let m = parsed.primary_map()?;
            if m.is_cp(1e-9)? {
                dilation::stinespring(&m)?
            } else if m.is_cocp(1e-9)? {
                dilation::costinespring(&m)?
            } else if let MapFileJson::Certificate(cert_json) = &parsed {
                let cert = cert_json.to_certificate()?;
                dilation::jordan_dilation(&cert.cp_part, &cert.cocp_part)?
            } else {
                return Err(Error::InvalidInput(
                    "map is neither CP nor coCP; provide a certificate file for a Jordan dilation"
                        .into(),
                ));
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown dilation kind `{other}` (expected auto, cp, cocp or jordan)"
            )))
        }
    };

    let m = parsed.primary_map()?;
    let mut reconstruction = 0.0f64;
    for e in covdec::canonical_basis(m.n())? {
        let r = covdec::mat::max_abs(&(&dilation.reconstruct(&e) - &m.apply(&e)?));
        reconstruction = reconstruction.max(r);
    }
    report.residual("k_dim", dilation.k_dim() as f64);
    report.residual("kraus_rank", dilation.rank() as f64);
    report.verdict("reconstruction", reconstruction <= 1e-10, reconstruction, 1e-10);

    let mut artifacts = serde_json::Map::new();
    artifacts.insert(
        "kind".into(),
        serde_json::json!(match dilation.kind() {
            DilationKind::Homomorphism => "homomorphism",
            DilationKind::Antihomomorphism => "antihomomorphism",
            DilationKind::Jordan => "jordan",
        }),
    );
    artifacts.insert("v".into(), serde_json::json!(cmat_to_json(dilation.v())));

    if verify_covariance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match dilation::covariance_intertwiner(&dilation, samples, &mut rng) {
            Ok(rep) => {
                report.verdict(
                    "intertwiner",
                    true,
                    rep.intertwine_residual.max(rep.representation_residual),
                    dilation::INTERTWINER_TOL,
                );
                report.residual("intertwine_residual", rep.intertwine_residual);
                report.residual("representation_residual", rep.representation_residual);
                report.residual("unitarity_defect", rep.unitarity_defect);
                let witness =
                    dilation.intertwiner_at(&covariance::TorusElement::distinct(m.n()))?;
                artifacts.insert(
                    "witness_at_distinct_point".into(),
                    serde_json::json!(cmat_to_json(&witness)),
                );
            }
            Err(Error::NoIntertwiner { residual, tol }) => {
                report.verdict("intertwiner", false, residual, tol);
            }
            Err(e) => return Err(e),
        }
    }
    report.artifacts = Some(serde_json::Value::Object(artifacts));
    emit(&report, json);
    Ok(report.all_passed())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    generator_path: &PathBuf,
    t_final: f64,
    h: f64,
    rho0_path: &PathBuf,
    report_spec: &str,
    samples: usize,
    seed: u64,
    stride: usize,
    json: bool,
) -> Result<bool> {
    let gen_bytes = read_file(generator_path)?;
    let gen_json: GeneratorJson = parse_json(&gen_bytes, "--generator file")?;
    let gen = gen_json.to_generator()?;
    let rho_bytes = read_file(rho0_path)?;
    let rho_rows: Vec<Vec<(f64, f64)>> = parse_json(&rho_bytes, "--rho0 file")?;
    let rho0 = DensityMatrix::new(cmat_from_json(&rho_rows)?)?;

    let (fam, traj) = dynamics::evolve(&gen, t_final, h, &rho0)?;
    let stride = stride.max(1);
    for (k, point) in traj.iter().enumerate() {
        if k % stride == 0 || k == traj.len() - 1 {
            let line = serde_json::json!({
                "t": point.t,
                "rho": cmat_to_json(&point.rho),
                "trace_residual": point.trace_residual,
            });
            println!("{line}");
        }
    }

    let digest = inputs_digest([
        format!("evolve t={t_final} h={h} report={report_spec} samples={samples} seed={seed}")
            .as_bytes(),
        &gen_bytes,
        &rho_bytes,
    ]);
    let mut report = Report::new("evolve", digest);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for part in report_spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "trace" => {
                report.verdict(
                    "trace_preserved",
                    fam.trace_residual_sup <= 1e-8,
                    fam.trace_residual_sup,
                    1e-8,
                );
            }
            "covariance" => {
                let grep = dynamics::generator_covariance_report(&gen, samples, 1e-10, &mut rng)?;
                let frep = dynamics::dynamics_covariance_check(&fam, samples, 1e-8, &mut rng);
                report.verdict(
                    "generator_covariant",
                    grep.covariant,
                    grep.hamiltonian_residual
                        .max(grep.phi_defining_residual)
                        .max(grep.phi_commutation_residual),
                    1e-10,
                );
                report.verdict("family_covariant", frep.covariant, frep.max_residual, 1e-8);
                report.verdict(
                    "covariance_verdicts_agree",
                    grep.covariant == frep.covariant,
                    if grep.covariant == frep.covariant { 0.0 } else { 1.0 },
                    0.5,
                );
            }
            "divisibility" => {
                let witness = dynamics::first_order_cp_witness(&gen, 0.0, h.min(1e-3))?;
                report.verdict(
                    "first_order_cp_witness",
                    witness.min_eigenvalue >= -1e-6,
                    witness.min_eigenvalue,
                    1e-6,
                );
                let mid = fam.grid()[fam.len() / 2];
                let v = fam.propagator(t_final, mid)?;
                let comp = v.superoperator()?.dot(&fam.map_at(mid)?.superoperator()?);
                let gap =
                    covdec::mat::max_abs(&(&comp - fam.superop_at_index(fam.len() - 1)));
                report.verdict("propagator_composition", gap <= 1e-8, gap, 1e-8);
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown report section `{other}` (expected covariance, trace, divisibility)"
                )))
            }
        }
    }
    report.residual("generator_norm_sup", fam.generator_norm_sup);
    emit(&report, json);
    Ok(report.all_passed())
}

fn cmd_selftest(n: usize, seed: u64, json: bool) -> Result<bool> {
    let suites = covdec::selftest::run(n, seed)?;
    let digest = inputs_digest([format!("selftest n={n} seed={seed}").as_bytes()]);
    let mut report = Report::new("selftest", digest);
    for suite in &suites {
        let worst = suite
            .details
            .values()
            .cloned()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        report.verdict(&suite.name, suite.passed, worst, f64::NAN);
        for (key, value) in &suite.details {
            report.residual(&format!("{}_{key}", suite.name), *value);
        }
        if !json {
            println!(
                "[{}] {}",
                if suite.passed { "pass" } else { "FAIL" },
                suite.name
            );
        }
    }
    if json {
        println!("{}", report.to_json());
    } else {
        let passed = suites.iter().filter(|s| s.passed).count();
        println!("{passed}/{} suites passed", suites.len());
    }
    Ok(report.all_passed())
}
