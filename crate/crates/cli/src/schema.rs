//! JSON file formats. Complex numbers are `[re, im]`; matrices are arrays of
//! rows. Shape problems are reported with the path of the offending field.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use schur_core::freeseries::{FormalSeries, Word};
use schur_core::matops::{c64, zeros, Matrix, C64};
use schur_core::realization::{Colligation, Flavor};
use schur_core::tvsystems::TVSystem;

use crate::CliError;

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn parse<T: DeserializeOwned>(bytes: &[u8], file: &Path) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("{}: at `{path}`: {}", file.display(), e.inner()))
    })
}

pub fn complex(z: &JsonComplex) -> C64 {
    c64(z[0], z[1])
}

pub fn complex_json(z: C64) -> JsonComplex {
    [z.re, z.im]
}

pub fn point(p: &[JsonComplex]) -> Vec<C64> {
    p.iter().map(complex).collect()
}

/// Rectangular matrix from rows. An empty array is a matrix with no rows.
pub fn matrix(m: &JsonMatrix, path: &str) -> Result<Matrix, CliError> {
    let cols = m.first().map_or(0, Vec::len);
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Input(format!(
                "`{path}[{r}]` has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(Matrix::from_fn(m.len(), cols, |r, c| complex(&m[r][c])))
}

/// As [`matrix`] with a required shape; `[]` stands for any matrix with a
/// zero dimension.
pub fn shaped(m: &JsonMatrix, rows: usize, cols: usize, path: &str) -> Result<Matrix, CliError> {
    if m.is_empty() && (rows == 0 || cols == 0) {
        return Ok(zeros(rows, cols));
    }
    let out = matrix(m, path)?;
    if out.nrows() != rows || out.ncols() != cols {
        return Err(CliError::Input(format!(
            "`{path}` is {}x{}, expected {rows}x{cols}",
            out.nrows(),
            out.ncols()
        )));
    }
    Ok(out)
}

pub fn matrix_json(m: &Matrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect())
        .collect()
}

/// Scalar kernel sample (`blocks`) or Schur-function samples (`values`)
/// from which the de Branges-Rovnyak kernel is built.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub points: Vec<Vec<JsonComplex>>,
    #[serde(default)]
    pub blocks: Option<Vec<Vec<JsonMatrix>>>,
    #[serde(default)]
    pub values: Option<Vec<JsonMatrix>>,
}

/// `unit_values[i][j][a*k + b] = 𝕂(ω_i, ω_j)[E_ab]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpKernelFile {
    pub labels: Vec<String>,
    pub alg_dim: usize,
    pub rep_dim: usize,
    pub unit_values: Vec<Vec<Vec<JsonMatrix>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesFile {
    pub points: Vec<Vec<JsonComplex>>,
    pub values: Vec<JsonMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    pub points: Vec<Vec<JsonComplex>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleFile {
    pub blocks: Vec<JsonMatrix>,
    #[serde(default)]
    pub commuting: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTerm {
    pub word: Vec<usize>,
    pub coeff: JsonMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFile {
    pub d: usize,
    pub commutative: bool,
    pub terms: Vec<SeriesTerm>,
    /// Coefficient shape; defaults to that of the first term, or 1x1.
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub cols: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColligationFile {
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "A")]
    pub a: JsonMatrix,
    #[serde(rename = "B")]
    pub b: JsonMatrix,
    #[serde(rename = "C")]
    pub c: JsonMatrix,
    #[serde(rename = "D")]
    pub dmat: JsonMatrix,
    pub flavor: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSystemFile {
    #[serde(rename = "L")]
    pub l: usize,
    pub state_dims: Vec<usize>,
    #[serde(rename = "U_seq")]
    pub u_seq: Vec<JsonMatrix>,
    #[serde(default)]
    pub conservative: bool,
}

#[derive(Debug, Serialize)]
pub struct ValuesFile {
    pub values: Vec<JsonMatrix>,
}

impl SeriesFile {
    pub fn to_series(&self) -> Result<FormalSeries, CliError> {
        let first = self
            .terms
            .first()
            .map(|t| matrix(&t.coeff, "terms[0].coeff"))
            .transpose()?;
        let rows = self.rows.or(first.as_ref().map(|m| m.nrows())).unwrap_or(1);
        let cols = self.cols.or(first.as_ref().map(|m| m.ncols())).unwrap_or(1);
        let mut s = FormalSeries::zero(self.d, rows, cols, self.commutative);
        for (i, t) in self.terms.iter().enumerate() {
            let c = shaped(&t.coeff, rows, cols, &format!("terms[{i}].coeff"))?;
            s.add_term(Word(t.word.clone()), c)
                .map_err(|e| CliError::Input(format!("`terms[{i}]`: {e}")))?;
        }
        Ok(s)
    }
}

impl ColligationFile {
    pub fn to_colligation(&self) -> Result<Colligation, CliError> {
        let (d, n, p, q) = (self.d, self.n, self.p, self.q);
        let flavor =
            Flavor::parse(&self.flavor).map_err(|e| CliError::Input(format!("`flavor`: {e}")))?;
        Colligation::new(
            d,
            n,
            p,
            q,
            shaped(&self.a, d * n, n, "A")?,
            shaped(&self.b, d * n, p, "B")?,
            shaped(&self.c, q, n, "C")?,
            shaped(&self.dmat, q, p, "D")?,
            flavor,
        )
        .map_err(CliError::from)
    }

    pub fn from_colligation(u: &Colligation) -> Self {
        Self {
            d: u.d,
            n: u.n,
            p: u.p,
            q: u.q,
            a: matrix_json(&u.a),
            b: matrix_json(&u.b),
            c: matrix_json(&u.c),
            dmat: matrix_json(&u.dmat),
            flavor: u.flavor.name().to_string(),
        }
    }
}

impl TvSystemFile {
    pub fn to_system(&self) -> Result<TVSystem, CliError> {
        if self.state_dims.len() != self.l + 1 || self.u_seq.len() != self.l {
            return Err(CliError::Input(format!(
                "`L` = {} needs {} state dimensions and {} system matrices",
                self.l,
                self.l + 1,
                self.l
            )));
        }
        let u_seq = self
            .u_seq
            .iter()
            .enumerate()
            .map(|(n, u)| {
                shaped(
                    u,
                    self.state_dims[n + 1] + 1,
                    self.state_dims[n] + 1,
                    &format!("U_seq[{n}]"),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        TVSystem::new(self.state_dims.clone(), u_seq, self.conservative).map_err(CliError::from)
    }

    pub fn from_system(sys: &TVSystem) -> Self {
        Self {
            l: sys.len(),
            state_dims: sys.state_dims.clone(),
            u_seq: sys.u_seq.iter().map(matrix_json).collect(),
            conservative: sys.conservative,
        }
    }
}
