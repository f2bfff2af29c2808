//! Dataset interchange: CSV matrices plus a JSON sidecar.
//!
//! Factor files carry the header `z0,z1,...` and code files `c0,c1,...`, one
//! sample per row. Values are written in shortest round-trip form, so a
//! write/read cycle reproduces every bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dgp::DgpSpec;
use crate::encoders::{EncodedDataset, EncoderSpec};
use crate::error::{Error, Result};
use crate::matrix::{CodeMatrix, FactorMatrix};

pub const FACTOR_PREFIX: &str = "z";
pub const CODE_PREFIX: &str = "c";

pub fn write_matrix_csv<W: Write>(out: W, prefix: &str, data: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..data.ncols()).map(|j| format!("{prefix}{j}")))?;
    for r in 0..data.nrows() {
        w.write_record((0..data.ncols()).map(|c| data[(r, c)].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a matrix whose header must read `{prefix}0..{prefix}{k-1}`.
pub fn read_matrix_csv<R: Read>(input: R, prefix: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    for (j, h) in header.iter().enumerate() {
        if h.trim() != format!("{prefix}{j}") {
            return Err(Error::Parse(format!(
                "header column {j} is `{h}`, expected `{prefix}{j}`"
            )));
        }
    }
    let cols = header.len();
    if cols == 0 {
        return Err(Error::Empty);
    }
    let mut flat = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}, column {prefix}{j}: `{field}` is not a number", i + 1)))?;
            flat.push(v);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &flat))
}

pub fn read_factors(path: &Path) -> Result<FactorMatrix> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    FactorMatrix::new(read_matrix_csv(f, FACTOR_PREFIX)?)
}

pub fn read_codes(path: &Path) -> Result<CodeMatrix> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    CodeMatrix::new(read_matrix_csv(f, CODE_PREFIX)?)
}

/// Provenance stored next to a written dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub factors_file: String,
    pub codes_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dgp: Option<DgpSpec>,
    pub encoder: EncoderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Paths written by [`write_dataset`].
#[derive(Clone, Debug)]
pub struct DatasetFiles {
    pub factors: PathBuf,
    pub codes: PathBuf,
    pub sidecar: PathBuf,
}

/// Write `{stem}_z.csv`, `{stem}_zhat.csv` and `{stem}.json` into `dir`.
pub fn write_dataset(
    dir: &Path,
    stem: &str,
    ds: &EncodedDataset,
    dgp: Option<&DgpSpec>,
    seed: Option<u64>,
) -> Result<DatasetFiles> {
    std::fs::create_dir_all(dir)?;
    let files = DatasetFiles {
        factors: dir.join(format!("{stem}_z.csv")),
        codes: dir.join(format!("{stem}_zhat.csv")),
        sidecar: dir.join(format!("{stem}.json")),
    };
    write_matrix_csv(File::create(&files.factors)?, FACTOR_PREFIX, ds.z.as_matrix())?;
    write_matrix_csv(File::create(&files.codes)?, CODE_PREFIX, ds.zhat.as_matrix())?;
    let file_name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let sidecar = Sidecar {
        n: ds.n(),
        d: ds.d(),
        m: ds.m(),
        factors_file: file_name(&files.factors),
        codes_file: file_name(&files.codes),
        dgp: dgp.cloned(),
        encoder: ds.spec.clone(),
        seed,
    };
    let mut f = File::create(&files.sidecar)?;
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    f.write_all(b"\n")?;
    Ok(files)
}

/// Read a dataset written by [`write_dataset`] from its sidecar. The codes are
/// read from disk, not re-encoded; [`EncodedDataset::audit`] compares the two.
pub fn read_dataset(sidecar_path: &Path) -> Result<(EncodedDataset, Sidecar)> {
    let text = std::fs::read_to_string(sidecar_path).map_err(|e| Error::Io(format!("{}: {e}", sidecar_path.display())))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let z = read_factors(&dir.join(&sidecar.factors_file))?;
    let zhat = read_codes(&dir.join(&sidecar.codes_file))?;
    if (z.n(), z.d(), zhat.m()) != (sidecar.n, sidecar.d, sidecar.m) {
        return Err(Error::DimensionMismatch(format!(
            "sidecar says n={}, d={}, m={} but files hold n={}, d={}, m={}",
            sidecar.n,
            sidecar.d,
            sidecar.m,
            z.n(),
            z.d(),
            zhat.m()
        )));
    }
    let alignment = sidecar.encoder.alignment();
    let equivalence = sidecar.encoder.equivalence();
    let ds = EncodedDataset {
        z,
        zhat,
        spec: sidecar.encoder.clone(),
        alignment,
        equivalence,
    };
    Ok((ds, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1e-300, 3.0, f64::MAX, 1.0 / 3.0, -0.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, "c", &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("c0,c1,c2\n"));
        let back = read_matrix_csv(buf.as_slice(), "c").unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(read_matrix_csv("z0,z2\n1,2\n".as_bytes(), "z"), Err(Error::Parse(_))));
        assert!(matches!(read_matrix_csv("z0,z1\n1,2\n3\n".as_bytes(), "z"), Err(Error::Parse(_))));
        assert!(matches!(read_matrix_csv("z0\nabc\n".as_bytes(), "z"), Err(Error::Parse(_))));
        assert!(matches!(read_matrix_csv("c0\n1\n".as_bytes(), "z"), Err(Error::Parse(_))));
    }
}
