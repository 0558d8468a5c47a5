//! Matrix and operation-table files, trajectory export.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qsp_core::dynamics::Trajectory;
use qsp_core::{CubicMatrix, SquareMatrix};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Entries {
    Cubic(Vec<Vec<Vec<f64>>>),
    Square(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    m: usize,
    entries: Entries,
}

#[derive(Debug, Serialize, Deserialize)]
struct OpFile {
    m: usize,
    table: Vec<Vec<usize>>,
}

/// A matrix read from or written to a JSON file.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Cubic(CubicMatrix),
    Square(SquareMatrix),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn shape_error(path: &str, why: String) -> CliError {
    CliError::Usage(format!("{path}: {why}"))
}

pub fn parse_matrix(text: &str, origin: &str) -> Result<MatrixData, CliError> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|source| CliError::Json {
        path: origin.to_string(),
        source,
    })?;
    let m = file.m;
    match file.entries {
        Entries::Cubic(e) => {
            if e.len() != m || e.iter().any(|r| r.len() != m || r.iter().any(|c| c.len() != m)) {
                return Err(shape_error(origin, format!("entries are not {m}x{m}x{m}")));
            }
            let data = e.into_iter().flatten().flatten().collect();
            CubicMatrix::new(m, data)
                .map(MatrixData::Cubic)
                .map_err(|e| shape_error(origin, e.to_string()))
        }
        Entries::Square(e) => {
            if e.len() != m || e.iter().any(|r| r.len() != m) {
                return Err(shape_error(origin, format!("entries are not {m}x{m}")));
            }
            let data = e.into_iter().flatten().collect();
            SquareMatrix::new(m, data)
                .map(MatrixData::Square)
                .map_err(|e| shape_error(origin, e.to_string()))
        }
    }
}

pub fn read_matrix(path: &Path) -> Result<MatrixData, CliError> {
    parse_matrix(&read(path)?, &path.display().to_string())
}

/// Pretty JSON with a trailing newline.
pub fn matrix_json(matrix: &MatrixData) -> String {
    let file = match matrix {
        MatrixData::Cubic(p) => {
            let m = p.m();
            let entries = (0..m)
                .map(|i| (0..m).map(|j| (0..m).map(|k| p.get(i, j, k)).collect()).collect())
                .collect();
            MatrixFile {
                m,
                entries: Entries::Cubic(entries),
            }
        }
        MatrixData::Square(q) => MatrixFile {
            m: q.m(),
            entries: Entries::Square(q.rows().map(<[f64]>::to_vec).collect()),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("matrix serializes");
    text.push('\n');
    text
}

pub fn read_op_table(path: &Path) -> Result<(usize, Vec<Vec<usize>>), CliError> {
    let file: OpFile = serde_json::from_str(&read(path)?).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    Ok((file.m, file.table))
}

/// `t,x_0,..,x_{m-1}` with 17 significant digits.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let m = tr.samples.first().map_or(0, |(_, x)| x.m());
    let mut out = String::from("t");
    for i in 0..m {
        out.push_str(&format!(",x_{i}"));
    }
    out.push('\n');
    for (t, x) in &tr.samples {
        out.push_str(&format!("{t:.16e}"));
        for p in x.probs() {
            out.push_str(&format!(",{p:.16e}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Sample<'a> {
    t: f64,
    x: &'a [f64],
}

#[derive(Serialize)]
struct TrajectoryFile<'a> {
    family: &'a str,
    mode: &'a str,
    chained: bool,
    start: f64,
    samples: Vec<Sample<'a>>,
}

pub fn trajectory_json(tr: &Trajectory, family: &str, mode: &str, chained: bool) -> String {
    let file = TrajectoryFile {
        family,
        mode,
        chained,
        start: tr.start,
        samples: tr
            .samples
            .iter()
            .map(|(t, x)| Sample { t: *t, x: x.probs() })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("trajectory serializes");
    text.push('\n');
    text
}
