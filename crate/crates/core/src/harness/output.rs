use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Versioned CSV layouts. The manifest lists the version of every file it
/// wrote.
pub mod schema {
    pub const COVERAGE: (&str, &[&str]) = ("coverage/v1", &["step", "modes_covered"]);
    pub const AUTOCORR: (&str, &[&str]) = ("autocorr/v1", &["lag", "value"]);
    pub const CLASSES: (&str, &[&str]) = ("classes/v1", &["mode", "count", "expected"]);
    pub const BENCH_GAUSSIAN: (&str, &[&str]) = ("bench/v1", &["integrator", "sigma_start", "nfe", "error"]);
    pub const BENCH_MOG: (&str, &[&str]) = ("bench/v1", &["integrator", "sigma_start", "nfe", "fgd"]);
    pub const ABLATION: (&str, &[&str]) = ("ablation/v1", &["eta", "nden_frac", "nfe", "fgd"]);
    pub const SAMPLES: &str = "samples/v1";
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Renders a header and rows as CSV text. Floats use the shortest
/// round-trip representation, so output is stable across runs.
pub fn csv_bytes<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        let r = r.as_ref();
        if r.len() != header.len() {
            return Err(Error::Internal(format!(
                "csv row has {} fields, header has {}",
                r.len(),
                header.len()
            )));
        }
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"x").unwrap();
        write_atomic(&p, b"y").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"y");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let rows = vec![vec!["1".to_string()]];
        assert!(csv_bytes(&["a", "b"], &rows).is_err());
        let ok = csv_bytes(&["a"], &rows).unwrap();
        assert_eq!(ok, b"a\n1\n");
    }
}
