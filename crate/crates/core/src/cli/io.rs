//! State and channel files.
//!
//! Matrices are row-major arrays of `[re, im]` pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::report::{to_stable_json, CliError, CliResult};
use crate::channels::KrausChannel;
use crate::error::Error;
use crate::matrix::{c64, CMatrix, DensityMatrix};

pub type MatrixEncoding = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
    pub matrix: MatrixEncoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<MatrixEncoding>,
}

pub fn encode_matrix(m: &CMatrix) -> MatrixEncoding {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_value(m: &CMatrix) -> Value {
    serde_json::to_value(encode_matrix(m)).expect("finite matrix entries")
}

fn decode_matrix(rows: &MatrixEncoding, dim: usize, what: &str) -> CliResult<CMatrix> {
    if rows.len() != dim {
        return Err(CliError::Input(format!(
            "{what}: expected {dim} rows, found {}",
            rows.len()
        )));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != dim) {
        return Err(CliError::Input(format!(
            "{what}: row {r} has {} entries, expected {dim}",
            row.len()
        )));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| c64(rows[r][c][0], rows[r][c][1])))
}

/// Tolerances applied when loading a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadTolerances {
    pub hermitian: f64,
    pub trace: f64,
}

/// A validated state together with its raw bytes (for digests).
#[derive(Debug, Clone)]
pub struct LoadedState {
    pub state: DensityMatrix,
    pub dims: Option<[usize; 2]>,
    pub bytes: Vec<u8>,
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_state(bytes: &[u8], tol: LoadTolerances) -> CliResult<(DensityMatrix, Option<[usize; 2]>)> {
    let file: StateFile =
        serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("malformed state file: {e}")))?;
    if file.dim == 0 {
        return Err(CliError::Input("state file: dim must be positive".into()));
    }
    if let Some([da, db]) = file.dims {
        if da * db != file.dim {
            return Err(CliError::Input(format!(
                "state file: dims {da} x {db} do not factor dim {}",
                file.dim
            )));
        }
    }
    let m = decode_matrix(&file.matrix, file.dim, "state file")?;
    let state = DensityMatrix::with_tolerance(m, tol.hermitian, tol.trace).map_err(|e| match e {
        Error::NonHermitian { residual } => CliError::Input(format!(
            "state file: Hermiticity check failed (residual {residual:.3e} > {:.1e})",
            tol.hermitian
        )),
        Error::NotUnitTrace { trace, residual } => CliError::Input(format!(
            "state file: unit-trace check failed (trace {trace}, residual {residual:.3e} > {:.1e})",
            tol.trace
        )),
        other => CliError::Input(format!("state file: {other}")),
    })?;
    Ok((state, file.dims))
}

pub fn load_state(path: &Path, tol: LoadTolerances) -> CliResult<LoadedState> {
    let bytes = read_bytes(path)?;
    let (state, dims) = parse_state(&bytes, tol)?;
    Ok(LoadedState { state, dims, bytes })
}

pub fn parse_channel(bytes: &[u8]) -> CliResult<KrausChannel> {
    let file: ChannelFile =
        serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("malformed channel file: {e}")))?;
    let kraus = file
        .kraus
        .iter()
        .enumerate()
        .map(|(k, m)| decode_matrix(m, file.dim, &format!("Kraus operator {k}")))
        .collect::<CliResult<Vec<_>>>()?;
    KrausChannel::new(kraus).map_err(|e| CliError::Input(format!("channel file: {e}")))
}

pub fn state_file(state: &DensityMatrix, dims: Option<[usize; 2]>) -> StateFile {
    StateFile {
        dim: state.dim(),
        dims,
        matrix: encode_matrix(state.matrix()),
    }
}

pub fn state_bytes(state: &DensityMatrix, dims: Option<[usize; 2]>) -> CliResult<Vec<u8>> {
    to_stable_json(&state_file(state, dims))
}

pub fn channel_bytes(ch: &KrausChannel) -> CliResult<Vec<u8>> {
    to_stable_json(&ChannelFile {
        dim: ch.dim(),
        kraus: ch.kraus().iter().map(encode_matrix).collect(),
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
