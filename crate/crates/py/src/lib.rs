//! Python bindings: the coefficient-matrix calculus, covariance analysis,
//! dilations and master-equation integration, exposed with plain Python
//! types (complex numbers and nested lists).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covdec::covariance::{self, CovariantKind, ProjectionMode, TorusElement};
use covdec::dilation;
use covdec::dynamics::{self, DensityMatrix};
use covdec::linmap::{BasisTag, CanonicalCovariantForm, CertifiedDecomposable};
use covdec::mat::{self, CMat};

type PyMat = Vec<Vec<Complex64>>;

fn err(e: covdec::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_cmat(rows: &[Vec<Complex64>]) -> PyResult<CMat> {
    let r = rows.len();
    if r == 0 {
        return Err(PyValueError::new_err("empty matrix"));
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    let mut m = mat::czero(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &z) in row.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

fn from_cmat(m: &CMat) -> PyMat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// A linear map on M_n stored as its coefficient matrix in a tagged
/// operator basis.
#[pyclass(name = "MapMatrix", from_py_object)]
#[derive(Clone)]
struct PyMapMatrix {
    inner: covdec::MapMatrix,
}

#[pymethods]
impl PyMapMatrix {
    #[new]
    fn new(n: usize, basis: &str, c: PyMat) -> PyResult<Self> {
        let tag: BasisTag = basis.parse().map_err(err)?;
        let inner = covdec::MapMatrix::new(n, tag, to_cmat(&c)?).map_err(err)?;
        Ok(PyMapMatrix { inner })
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: covdec::MapMatrix::identity(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn transpose_map(n: usize) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: covdec::MapMatrix::transpose_map(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_kraus(n: usize, kraus: Vec<PyMat>) -> PyResult<Self> {
        let ops = kraus
            .iter()
            .map(|k| to_cmat(k))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyMapMatrix {
            inner: covdec::MapMatrix::from_kraus(n, &ops).map_err(err)?,
        })
    }

    /// Covariant map from the canonical parametrization (a_ij, b_ij).
    #[staticmethod]
    fn from_canonical_covariant(a: PyMat, b: PyMat) -> PyResult<Self> {
        let form = CanonicalCovariantForm {
            a: to_cmat(&a)?,
            b: to_cmat(&b)?,
        };
        Ok(PyMapMatrix {
            inner: covdec::from_canonical_covariant(&form).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn basis(&self) -> &'static str {
        self.inner.basis_tag().as_str()
    }

    fn coefficients(&self) -> PyMat {
        from_cmat(self.inner.coefficients())
    }

    fn apply(&self, a: PyMat) -> PyResult<PyMat> {
        Ok(from_cmat(&self.inner.apply(&to_cmat(&a)?).map_err(err)?))
    }

    fn to_frobenius(&self) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: self.inner.to_frobenius().map_err(err)?,
        })
    }

    fn to_canonical(&self) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: self.inner.to_canonical().map_err(err)?,
        })
    }

    fn compose_transpose(&self) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: self.inner.compose_transpose().map_err(err)?,
        })
    }

    fn dual(&self) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: self.inner.dual_map().map_err(err)?,
        })
    }

    fn add(&self, other: &PyMapMatrix) -> PyResult<Self> {
        Ok(PyMapMatrix {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_hermiticity_preserving(&self, tol: f64) -> bool {
        self.inner.is_hermiticity_preserving(tol)
    }

    /// Returns (is_cp, min_eigenvalue, hermiticity_defect).
    #[pyo3(signature = (tol = 1e-9))]
    fn is_cp(&self, tol: f64) -> PyResult<(bool, f64, f64)> {
        let rep = self.inner.cp_report(tol).map_err(err)?;
        Ok((rep.is_cp, rep.min_eigenvalue, rep.hermiticity_defect))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_cocp(&self, tol: f64) -> PyResult<(bool, f64, f64)> {
        let rep = self.inner.cocp_report(tol).map_err(err)?;
        Ok((rep.is_cp, rep.min_eigenvalue, rep.hermiticity_defect))
    }

    /// Returns (weights, operators) of the spectral operator-sum form.
    #[pyo3(signature = (rank_tol = 1e-10))]
    fn to_operator_sum(&self, rank_tol: f64) -> PyResult<(Vec<f64>, Vec<PyMat>)> {
        let os = self.inner.to_operator_sum(rank_tol).map_err(err)?;
        let ops = os.operators.iter().map(from_cmat).collect();
        Ok((os.weights, ops))
    }

    #[pyo3(signature = (samples = 30, tol = 1e-10, seed = 0))]
    fn is_covariant(&self, samples: usize, tol: f64, seed: u64) -> PyResult<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        covariance::is_covariant(&self.inner, samples, tol, &mut rng).map_err(err)
    }

    #[pyo3(signature = (samples = 30, tol = 1e-10, seed = 0))]
    fn is_conjugate_covariant(&self, samples: usize, tol: f64, seed: u64) -> PyResult<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        covariance::is_conjugate_covariant(&self.inner, samples, tol, &mut rng).map_err(err)
    }

    /// Project onto the covariant subspace; mode is "closed" or "quadrature".
    #[pyo3(signature = (mode = "closed"))]
    fn project_covariant(&self, mode: &str) -> PyResult<Self> {
        let mode = match mode {
            "quadrature" => ProjectionMode::Quadrature,
            "closed" | "closed_form" => ProjectionMode::ClosedForm,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown projection mode `{other}`"
                )))
            }
        };
        Ok(PyMapMatrix {
            inner: covariance::project_covariant(&self.inner, mode).map_err(err)?,
        })
    }

    /// Returns (c1, c2, c3) when the map fits the covariant block pattern,
    /// None otherwise.
    #[pyo3(signature = (tol = 1e-10))]
    fn classify_covariant_blocks(
        &self,
        tol: f64,
    ) -> PyResult<Option<(Vec<Complex64>, Vec<Complex64>, PyMat)>> {
        match covariance::classify_covariant_blocks(&self.inner, tol).map_err(err)? {
            covariance::BlockClassification::Covariant(b) => Ok(Some((
                b.c1.to_vec(),
                b.c2.to_vec(),
                from_cmat(&b.c3),
            ))),
            covariance::BlockClassification::NotCovariant { .. } => Ok(None),
        }
    }

    fn distance(&self, other: &PyMapMatrix) -> PyResult<f64> {
        self.inner.distance(&other.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "MapMatrix(n={}, basis={})",
            self.inner.n(),
            self.inner.basis_tag().as_str()
        )
    }
}

/// A Stinespring/Stormer-type dilation phi(a) = V^dagger pi(a) V.
#[pyclass(name = "Dilation")]
struct PyDilation {
    inner: dilation::Dilation,
}

#[pymethods]
impl PyDilation {
    #[getter]
    fn k_dim(&self) -> usize {
        self.inner.k_dim()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            dilation::DilationKind::Homomorphism => "homomorphism",
            dilation::DilationKind::Antihomomorphism => "antihomomorphism",
            dilation::DilationKind::Jordan => "jordan",
        }
    }

    #[getter]
    fn kraus_rank(&self) -> usize {
        self.inner.rank()
    }

    fn v(&self) -> PyMat {
        from_cmat(self.inner.v())
    }

    fn pi(&self, a: PyMat) -> PyResult<PyMat> {
        Ok(from_cmat(&self.inner.pi(&to_cmat(&a)?)))
    }

    fn reconstruct(&self, a: PyMat) -> PyResult<PyMat> {
        Ok(from_cmat(&self.inner.reconstruct(&to_cmat(&a)?)))
    }

    /// Verify the covariance intertwining relations; returns
    /// (intertwine_residual, representation_residual, unitarity_defect).
    #[pyo3(signature = (samples = 20, seed = 0))]
    fn verify_covariance(&self, samples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = dilation::covariance_intertwiner(&self.inner, samples, &mut rng).map_err(err)?;
        Ok((
            rep.intertwine_residual,
            rep.representation_residual,
            rep.unitarity_defect,
        ))
    }

    fn intertwiner_at(&self, x: Vec<f64>) -> PyResult<PyMat> {
        let g = TorusElement::new(x);
        Ok(from_cmat(&self.inner.intertwiner_at(&g).map_err(err)?))
    }
}

/// Time-local generator of a D-divisible master equation.
#[pyclass(name = "Generator")]
struct PyGenerator {
    inner: dynamics::Generator,
}

#[pymethods]
impl PyGenerator {
    /// Build from a Hermitian H and the CP / coCP parts of the dissipator.
    #[new]
    fn new(h: PyMat, phi_cp: &PyMapMatrix, phi_cocp: &PyMapMatrix) -> PyResult<Self> {
        let cert = covdec::decomposable_certificate(&phi_cp.inner, &phi_cocp.inner, 1e-9)
            .map_err(err)?;
        Ok(PyGenerator {
            inner: dynamics::Generator::new(to_cmat(&h)?, cert).map_err(err)?,
        })
    }

    /// Apply L to a matrix at time t.
    #[pyo3(signature = (rho, t = 0.0))]
    fn apply(&self, rho: PyMat, t: f64) -> PyResult<PyMat> {
        Ok(from_cmat(&self.inner.apply(t, &to_cmat(&rho)?).map_err(err)?))
    }

    /// Integrate the master equation; returns a list of
    /// (t, rho, trace_residual) trajectory points.
    fn evolve(&self, t_final: f64, h: f64, rho0: PyMat) -> PyResult<Vec<(f64, PyMat, f64)>> {
        let rho0 = DensityMatrix::new(to_cmat(&rho0)?).map_err(err)?;
        let (_, traj) = dynamics::evolve(&self.inner, t_final, h, &rho0).map_err(err)?;
        Ok(traj
            .into_iter()
            .map(|p| (p.t, from_cmat(&p.rho), p.trace_residual))
            .collect())
    }

    /// Returns (covariant, hamiltonian_residual, phi_residual).
    #[pyo3(signature = (samples = 20, tol = 1e-10, seed = 0))]
    fn covariance_report(&self, samples: usize, tol: f64, seed: u64) -> PyResult<(bool, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = dynamics::generator_covariance_report(&self.inner, samples, tol, &mut rng)
            .map_err(err)?;
        Ok((
            rep.covariant,
            rep.hamiltonian_residual,
            rep.phi_defining_residual.max(rep.phi_commutation_residual),
        ))
    }
}

/// The Frobenius Hermitian basis of M_n as a list of matrices.
#[pyfunction]
fn frobenius_basis(n: usize) -> PyResult<Vec<PyMat>> {
    let b = covdec::FrobeniusBasis::new(n).map_err(err)?;
    Ok(b.matrices().iter().map(from_cmat).collect())
}

/// The canonical basis {E_ij} of M_n, row-major.
#[pyfunction]
fn canonical_basis(n: usize) -> PyResult<Vec<PyMat>> {
    Ok(covdec::canonical_basis(n)
        .map_err(err)?
        .iter()
        .map(from_cmat)
        .collect())
}

/// Diagonal unitary U(g) from torus coordinates.
#[pyfunction]
fn diag_unitary(x: Vec<f64>) -> PyMat {
    from_cmat(&covariance::diag_unitary(&TorusElement::new(x)))
}

/// Sample a covariant map; kind is "cp", "cocp" or "dec". Returns
/// (map, cp_part, cocp_part).
#[pyfunction]
#[pyo3(signature = (kind, n, seed = 0))]
fn random_covariant_map(
    kind: &str,
    n: usize,
    seed: u64,
) -> PyResult<(PyMapMatrix, PyMapMatrix, PyMapMatrix)> {
    let kind: CovariantKind = kind.parse().map_err(err)?;
    let cert = covariance::random_covariant_map(kind, n, seed).map_err(err)?;
    Ok((
        PyMapMatrix { inner: cert.map },
        PyMapMatrix {
            inner: cert.cp_part,
        },
        PyMapMatrix {
            inner: cert.cocp_part,
        },
    ))
}

#[pyfunction]
fn stinespring(m: &PyMapMatrix) -> PyResult<PyDilation> {
    Ok(PyDilation {
        inner: dilation::stinespring(&m.inner).map_err(err)?,
    })
}

#[pyfunction]
fn costinespring(m: &PyMapMatrix) -> PyResult<PyDilation> {
    Ok(PyDilation {
        inner: dilation::costinespring(&m.inner).map_err(err)?,
    })
}

#[pyfunction]
fn jordan_dilation(cp: &PyMapMatrix, cocp: &PyMapMatrix) -> PyResult<PyDilation> {
    Ok(PyDilation {
        inner: dilation::jordan_dilation(&cp.inner, &cocp.inner).map_err(err)?,
    })
}

fn certified(cp: &PyMapMatrix, cocp: &PyMapMatrix) -> PyResult<CertifiedDecomposable> {
    covdec::decomposable_certificate(&cp.inner, &cocp.inner, 1e-9).map_err(err)
}

/// Check the CP + coCP certificate; returns the certified sum.
#[pyfunction]
fn decomposable_sum(cp: &PyMapMatrix, cocp: &PyMapMatrix) -> PyResult<PyMapMatrix> {
    Ok(PyMapMatrix {
        inner: certified(cp, cocp)?.map,
    })
}

/// Run the built-in verification suites; returns [(name, passed), ...].
#[pyfunction]
#[pyo3(signature = (n = 3, seed = 0))]
fn selftest(n: usize, seed: u64) -> PyResult<Vec<(String, bool)>> {
    let suites = covdec::selftest::run(n, seed).map_err(err)?;
    Ok(suites.into_iter().map(|s| (s.name, s.passed)).collect())
}

#[pymodule]
fn covdec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMapMatrix>()?;
    m.add_class::<PyDilation>()?;
    m.add_class::<PyGenerator>()?;
    m.add_function(wrap_pyfunction!(frobenius_basis, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_basis, m)?)?;
    m.add_function(wrap_pyfunction!(diag_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(random_covariant_map, m)?)?;
    m.add_function(wrap_pyfunction!(stinespring, m)?)?;
    m.add_function(wrap_pyfunction!(costinespring, m)?)?;
    m.add_function(wrap_pyfunction!(jordan_dilation, m)?)?;
    m.add_function(wrap_pyfunction!(decomposable_sum, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
