use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use dcf_core::{Matrix64, Sample64};

use crate::error::CliError;

/// A delimited text file of reals, one observation per row.
#[derive(Debug, Clone)]
pub struct CsvSampleFile {
    pub path: PathBuf,
    pub has_header: bool,
    pub delimiter: u8,
}

impl CsvSampleFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            has_header: false,
            delimiter: b',',
        }
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Reads every row as a vector of finite reals. Row numbers in errors are 1-based
/// line numbers of the file.
pub fn read_matrix(file: &CsvSampleFile) -> Result<Matrix64, CliError> {
    let path = display(&file.path);
    let handle = File::open(&file.path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(file.has_header)
        .delimiter(file.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(handle);

    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|source| CliError::Csv {
            path: path.clone(),
            source,
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::Malformed {
                path,
                row: line,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Malformed {
                path: path.clone(),
                row: line,
                message: format!("field {} is not a number: {field:?}", col + 1),
            })?;
            if !value.is_finite() {
                return Err(CliError::Malformed {
                    path: path.clone(),
                    row: line,
                    message: format!("field {} is not finite", col + 1),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    Ok(Matrix64::from_row_major(rows, width.unwrap_or(0), data)?)
}

pub fn load_sample(file: &CsvSampleFile) -> Result<Sample64, CliError> {
    Ok(Sample64::new(read_matrix(file)?)?)
}

/// Writes `m` as comma-separated rows using shortest round-trip formatting.
pub fn write_matrix(path: &Path, m: &Matrix64) -> Result<(), CliError> {
    let err = |source| CliError::Io {
        path: display(path),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(err)?);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(err)?;
    }
    out.flush().map_err(err)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: display(path),
        source,
    })
}
