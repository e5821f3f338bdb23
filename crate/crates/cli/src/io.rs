use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pep_core::stat::Dataset;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reproducibility stamp written into every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn new(seed: u64, config: &impl Serialize) -> CliResult<Self> {
        let bytes = serde_json::to_vec(config)?;
        let digest = Sha256::digest(&bytes);
        let config_hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            tool: "pep",
            version: VERSION,
            seed,
            config_hash,
        })
    }

    /// Comment line heading every CSV output.
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} seed={} config={}\n",
            self.tool, self.version, self.seed, self.config_hash
        )
    }
}

/// Floats are written with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads a CSV with a header row; `#` lines are skipped. The response is
/// picked by name and the covariates default to every other column.
pub fn read_dataset(path: &Path, response: &str, covariates: Option<&[String]>) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column {name:?} not found")))
    };
    let yi = find(response)?;
    let cols: Vec<usize> = match covariates {
        Some(names) => names.iter().map(|n| find(n)).collect::<CliResult<_>>()?,
        None => (0..header.len()).filter(|&j| j != yi).collect(),
    };
    let mut y = Vec::new();
    let mut xs = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> CliResult<f64> {
            let s = rec.get(j).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("row {}: column {:?} is not a finite number: {s:?}", r + 1, header[j])))
        };
        y.push(parse(yi)?);
        for &j in &cols {
            xs.push(parse(j)?);
        }
    }
    if y.is_empty() {
        return Err(CliError::Input("no data rows".into()));
    }
    let x = DMatrix::from_row_slice(y.len(), cols.len(), &xs);
    let names = cols.iter().map(|&j| header[j].clone()).collect();
    Dataset::new(DVector::from_vec(y), x, names).map_err(|e| CliError::Input(e.to_string()))
}

/// Writes a dataset as CSV with the response in a column named `y`.
pub fn write_dataset(path: &Path, ds: &Dataset, meta: &Meta) -> CliResult<()> {
    let mut header = vec!["y".to_string()];
    header.extend(ds.names().iter().cloned());
    let rows = (0..ds.n())
        .map(|i| {
            std::iter::once(num(ds.y()[i]))
                .chain((0..ds.p()).map(|j| num(ds.x()[(i, j)])))
                .collect()
        })
        .collect::<Vec<Vec<String>>>();
    write_csv(path, meta, &header, &rows)
}

pub fn write_csv(path: &Path, meta: &Meta, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(meta.csv_comment().as_bytes())?;
    pep_core::experiments::write_records(&mut out, header, rows)?;
    out.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
