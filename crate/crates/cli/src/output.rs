use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Provenance;
use crate::error::CliError;

/// Round-trip exact (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn opt_int(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Where one command's files go: `<dir>/<prefix>.<ext>`.
#[derive(Debug, Clone)]
pub struct Sink {
    dir: PathBuf,
    prefix: String,
}

impl Sink {
    pub fn new(dir: PathBuf, prefix: String) -> Result<Self, CliError> {
        if prefix.is_empty() || prefix.contains(['/', '\\']) {
            return Err(CliError::validation("prefix", format!("{prefix:?} is not a plain file stem")));
        }
        fs::create_dir_all(&dir)?;
        Ok(Sink { dir, prefix })
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.prefix))
    }

    fn write(&self, ext: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.path(ext);
        fs::write(&p, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn json<C: Serialize, R: Serialize>(
        &self,
        prov: &Provenance<C>,
        result: &R,
    ) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Doc<'a, C: Serialize, R: Serialize> {
            #[serde(flatten)]
            prov: &'a Provenance<C>,
            result: &'a R,
        }
        let mut text = serde_json::to_string_pretty(&Doc { prov, result })?;
        text.push('\n');
        self.write("json", text.as_bytes())
    }

    /// CSV preceded by `#` metadata lines.
    pub fn csv<C: Serialize>(
        &self,
        prov: &Provenance<C>,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        for line in metadata_lines(prov)? {
            buf.extend_from_slice(line.as_bytes());
            buf.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(buf);
        let csv_err = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let buf = w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        self.write("csv", &buf)
    }

    pub fn svg(&self, text: &str) -> Result<PathBuf, CliError> {
        self.write("svg", text.as_bytes())
    }
}

fn metadata_lines<C: Serialize>(prov: &Provenance<C>) -> Result<Vec<String>, CliError> {
    Ok(vec![
        format!("# tool: {} {}", prov.tool, prov.version),
        format!("# prng: {}", prov.prng),
        format!("# config: {}", serde_json::to_string(&prov.config)?),
    ])
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
