//! Output documents and file IO: CSV/JSON encodings and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use qwalk_core::{FockState, Jpd, JpdKind, ModeUnitary, Vertex};
use serde::{Deserialize, Serialize};

pub fn kind_name(kind: JpdKind) -> &'static str {
    match kind {
        JpdKind::Indistinguishable => "indistinguishable",
        JpdKind::Distinguishable => "distinguishable",
        JpdKind::Mixed => "mixed",
    }
}

/// JPD as stored: row-major tensor values over the position axes.
#[derive(Serialize, Deserialize)]
pub struct JpdDoc {
    pub kind: String,
    pub positions: Vec<Vertex>,
    pub walkers: usize,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl JpdDoc {
    pub fn new(jpd: &Jpd) -> Self {
        Self {
            kind: kind_name(jpd.kind()).to_string(),
            positions: jpd.positions().to_vec(),
            walkers: jpd.walkers(),
            shape: jpd.tensor().shape().to_vec(),
            values: jpd.tensor().iter().copied().collect(),
        }
    }
}

#[derive(Serialize)]
pub struct MarginalDoc {
    pub positions: Vec<Vertex>,
    pub values: Vec<f64>,
}

#[derive(Serialize)]
struct UnitaryDoc {
    modes: Vec<(Vertex, Vertex)>,
    matrix: Vec<Vec<(f64, f64)>>,
}

pub fn jpd_csv(jpd: &Jpd) -> Result<String> {
    let matrix = jpd
        .matrix()
        .context("CSV output covers two-walker JPDs; use --emit json for other walker counts")?;
    let positions = jpd.positions();
    let mut out = String::from("row,col,value\n");
    for (r, &row_label) in positions.iter().enumerate() {
        for (c, &col_label) in positions.iter().enumerate() {
            writeln!(out, "{row_label},{col_label},{}", matrix[[r, c]]).expect("string write");
        }
    }
    Ok(out)
}

pub fn marginal_csv(positions: &[Vertex], values: &[f64]) -> String {
    let mut out = String::from("position,value\n");
    for (&position, &value) in positions.iter().zip(values) {
        writeln!(out, "{position},{value}").expect("string write");
    }
    out
}

pub fn json_bytes<T: Serialize>(doc: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(doc).context("serializing JSON output")?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file beside {}", path.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

/// Writes to the path atomically, or to stdout when no path is given.
pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => atomic_write(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing to stdout"),
    }
}

pub fn write_state(path: &Path, state: &FockState) -> Result<()> {
    write_bytes(Some(path), &json_bytes(&state.to_records())?)
}

pub fn write_unitary(path: &Path, u: &ModeUnitary) -> Result<()> {
    let matrix = u.matrix();
    let doc = UnitaryDoc {
        modes: u.modes().to_vec(),
        matrix: (0..u.dim())
            .map(|r| (0..u.dim()).map(|c| (matrix[[r, c]].re, matrix[[r, c]].im)).collect())
            .collect(),
    };
    write_bytes(Some(path), &json_bytes(&doc)?)
}

fn matrix_from_doc(doc: &JpdDoc, path: &Path) -> Result<Array2<f64>> {
    if doc.shape.len() != 2 || doc.shape[0] != doc.shape[1] {
        bail!(
            "--jpd: {} holds a {}-walker JPD; entropy needs a square two-walker matrix",
            path.display(),
            doc.shape.len()
        );
    }
    let n = doc.shape[0];
    if doc.values.len() != n * n {
        bail!(
            "--jpd: {} has {} values for shape {n}x{n}",
            path.display(),
            doc.values.len()
        );
    }
    Ok(Array2::from_shape_vec((n, n), doc.values.clone()).expect("checked shape"))
}

fn matrix_from_long_csv(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut triples: Vec<(i64, i64, f64)> = Vec::new();
    let mut first = true;
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!(
                "--jpd: {} line {}: expected row,col,value",
                path.display(),
                index + 1
            );
        }
        if first && fields[2].parse::<f64>().is_err() {
            first = false;
            continue;
        }
        first = false;
        let parse_label = |field: &str, what: &str| -> Result<i64> {
            field.parse().with_context(|| {
                format!(
                    "--jpd: {} line {}: {what} {field:?} is not an integer",
                    path.display(),
                    index + 1
                )
            })
        };
        let row = parse_label(fields[0], "row")?;
        let col = parse_label(fields[1], "col")?;
        let value: f64 = fields[2].parse().with_context(|| {
            format!(
                "--jpd: {} line {}: value {:?} is not a number",
                path.display(),
                index + 1,
                fields[2]
            )
        })?;
        triples.push((row, col, value));
    }
    if triples.is_empty() {
        bail!("--jpd: {} holds no data rows", path.display());
    }
    let mut labels: Vec<i64> = triples
        .iter()
        .flat_map(|&(r, c, _)| [r, c])
        .collect();
    labels.sort_unstable();
    labels.dedup();
    let index_of = |label: i64| labels.binary_search(&label).expect("label collected");
    let n = labels.len();
    let mut matrix = Array2::<f64>::zeros((n, n));
    for (r, c, v) in triples {
        matrix[[index_of(r), index_of(c)]] = v;
    }
    Ok(matrix)
}

/// Loads a two-walker JPD matrix from a run output, CSV or JSON by extension.
pub fn read_jpd_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("--jpd: cannot read {}", path.display()))?;
    let is_json = path
        .extension()
        .map(|ext| ext.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        let doc: JpdDoc = serde_json::from_str(&text)
            .with_context(|| format!("--jpd: {} is not a JPD JSON document", path.display()))?;
        matrix_from_doc(&doc, path)
    } else {
        matrix_from_long_csv(&text, path)
    }
}
