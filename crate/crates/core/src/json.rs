//! JSON wire formats. Complex numbers serialize as [re, im] pairs; a map is
//! { "n": ..., "basis": "frobenius" | "canonical", "c": [[[re, im], ...], ...] }.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmap::{BasisTag, CertifiedDecomposable, MapMatrix};
use crate::mat::{self, CMat, C64};

pub type ComplexPair = (f64, f64);

pub fn cmat_to_json(m: &CMat) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

pub fn cmat_from_json(rows: &[Vec<ComplexPair>]) -> Result<CMat> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    let mut m = mat::czero(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &(re, im)) in row.iter().enumerate() {
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

/// Serialized coefficient-matrix map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapMatrixJson {
    pub n: usize,
    pub basis: String,
    pub c: Vec<Vec<ComplexPair>>,
}

impl MapMatrixJson {
    pub fn from_map(m: &MapMatrix) -> Self {
        MapMatrixJson {
            n: m.n(),
            basis: m.basis_tag().as_str().to_string(),
            c: cmat_to_json(m.coefficients()),
        }
    }

    pub fn to_map(&self) -> Result<MapMatrix> {
        let tag: BasisTag = self.basis.parse()?;
        let c = cmat_from_json(&self.c)?;
        if c.nrows() != self.n * self.n || c.ncols() != self.n * self.n {
            return Err(Error::InvalidInput(format!(
                "field `c` must be {0} x {0} for n = {1}, got {2} x {3}",
                self.n * self.n,
                self.n,
                c.nrows(),
                c.ncols()
            )));
        }
        MapMatrix::new(self.n, tag, c)
    }
}

/// A decomposable map with its CP + coCP certificate, as emitted by the
/// `random` subcommand and consumed by `dilate --kind jordan`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub map: MapMatrixJson,
    pub cp_part: MapMatrixJson,
    pub cocp_part: MapMatrixJson,
}

impl CertificateJson {
    pub fn from_certificate(
        cert: &CertifiedDecomposable,
        kind: Option<String>,
        seed: Option<u64>,
    ) -> Self {
        CertificateJson {
            n: cert.n(),
            kind,
            seed,
            map: MapMatrixJson::from_map(&cert.map),
            cp_part: MapMatrixJson::from_map(&cert.cp_part),
            cocp_part: MapMatrixJson::from_map(&cert.cocp_part),
        }
    }

    pub fn to_certificate(&self) -> Result<CertifiedDecomposable> {
        crate::linmap::decomposable_certificate(
            &self.cp_part.to_map()?,
            &self.cocp_part.to_map()?,
            1e-9,
        )
    }
}

/// Generator file: { "H": matrix, "phi_cp": mapmatrix, "phi_cocp": mapmatrix }.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorJson {
    #[serde(rename = "H")]
    pub h: Vec<Vec<ComplexPair>>,
    pub phi_cp: MapMatrixJson,
    pub phi_cocp: MapMatrixJson,
}

impl GeneratorJson {
    pub fn to_generator(&self) -> Result<crate::dynamics::Generator> {
        let h = cmat_from_json(&self.h)?;
        let cert = crate::linmap::decomposable_certificate(
            &self.phi_cp.to_map()?,
            &self.phi_cocp.to_map()?,
            1e-9,
        )?;
        crate::dynamics::Generator::new(h, cert)
    }
}

/// A map file that is either a bare map or a certificate carrying one.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MapFileJson {
    Certificate(CertificateJson),
    Bare(MapMatrixJson),
}

impl MapFileJson {
    pub fn primary_map(&self) -> Result<MapMatrix> {
        match self {
            MapFileJson::Bare(m) => m.to_map(),
            MapFileJson::Certificate(c) => c.map.to_map(),
        }
    }
}
