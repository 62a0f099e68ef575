//! JSON schemas shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use superpose::random::substream;
use superpose::{dct_matrix, random_orthogonal, ComponentSpec, DenseMatrix};

use crate::error::{CliError, CliResult};

/// Reads and deserializes a JSON file, reporting the failing field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::Config(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    L1,
    RotatedL1,
    Nuclear,
    #[serde(rename = "ksupport")]
    KSupport,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentJson {
    pub norm: NormName,
    pub radius: f64,
    /// `"identity"`, `"dct"`, `"random"`, or a path to a JSON matrix.
    #[serde(default)]
    pub rotation: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub shape: Option<(usize, usize)>,
    /// Seed for `"rotation": "random"`; defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Where relative paths and default seeds come from.
pub struct Context {
    pub base_dir: PathBuf,
    pub seed: u64,
}

fn load_rotation(name: &str, dim: usize, seed: u64, ctx: &Context) -> CliResult<Option<DenseMatrix>> {
    let q = match name {
        "identity" => return Ok(None),
        "dct" => dct_matrix(dim),
        "random" => random_orthogonal(dim, seed),
        path => {
            let rows: Vec<Vec<f64>> = read_json(&ctx.base_dir.join(path))?;
            DenseMatrix::from_rows(&rows).map_err(CliError::config)?
        }
    };
    Ok(Some(q))
}

impl ComponentJson {
    /// Builds the constraint for vectors of length `dim`.
    pub fn build(&self, dim: usize, index: usize, ctx: &Context) -> CliResult<ComponentSpec> {
        let seed = self.seed.unwrap_or_else(|| substream(ctx.seed, index as u64));
        let rotation = match &self.rotation {
            Some(name) => load_rotation(name, dim, seed, ctx)?,
            None => None,
        };
        let need_k = || {
            self.k
                .ok_or_else(|| CliError::Config(format!("components[{index}]: ksupport needs \"k\"")))
        };
        let spec = match (self.norm, rotation) {
            (NormName::L1, None) => ComponentSpec::l1(dim, self.radius),
            (NormName::L1 | NormName::RotatedL1, Some(q)) => ComponentSpec::rotated_l1(q, self.radius),
            (NormName::RotatedL1, None) => ComponentSpec::rotated_l1(DenseMatrix::identity(dim), self.radius),
            (NormName::KSupport, None) => ComponentSpec::ksupport(dim, need_k()?, self.radius),
            (NormName::KSupport, Some(q)) => ComponentSpec::rotated_ksupport(q, need_k()?, self.radius),
            (NormName::Nuclear, Some(_)) => {
                return Err(CliError::Config(format!("components[{index}]: nuclear takes no rotation")))
            }
            (NormName::Nuclear, None) => {
                let (d1, d2) = self
                    .shape
                    .ok_or_else(|| CliError::Config(format!("components[{index}]: nuclear needs \"shape\"")))?;
                ComponentSpec::nuclear(d1, d2, self.radius)
            }
        }
        .map_err(|e| CliError::Config(format!("components[{index}]: {e}")))?;
        if spec.dim() != dim {
            return Err(CliError::Config(format!(
                "components[{index}]: dimension {} does not match {dim}",
                spec.dim()
            )));
        }
        Ok(spec)
    }
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DenseMatrix> {
    DenseMatrix::from_rows(rows).map_err(|e| CliError::Config(format!("{what}: {e}")))
}
