use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Output directory that remembers every file written into it.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Records files written by another handle on the same root.
    pub fn adopt(&mut self, files: Vec<String>) {
        self.files.extend(files);
    }

    pub fn into_files(self) -> Vec<String> {
        self.files
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.txt` with the config hash and the files produced.
    pub fn finish(mut self, config_text: &str) -> Result<(), CliError> {
        let hash = config_hash(config_text);
        let files = std::mem::take(&mut self.files);
        self.write("manifest.txt", |w| {
            writeln!(w, "config_sha256={hash}")?;
            for f in &files {
                writeln!(w, "{f}")?;
            }
            Ok(())
        })
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One reported quantity with the tolerance it is judged against.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub tol: String,
    numeric: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<Entry>,
}

fn human(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

impl Report {
    pub fn num(&mut self, key: &str, value: f64, tol: &str) {
        self.entries.push(Entry {
            key: key.into(),
            value: format!("{:e}", value + 0.0),
            tol: tol.into(),
            numeric: true,
        });
    }

    pub fn text(&mut self, key: &str, value: impl ToString) {
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            tol: String::new(),
            numeric: false,
        });
    }

    /// `key=value` lines, numbers rounded for reading.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            let v = match e.value.parse::<f64>() {
                Ok(x) if e.numeric => human(x),
                _ => e.value.clone(),
            };
            writeln!(w, "{}={}", e.key, v)?;
        }
        Ok(())
    }

    /// `key,value,tol` rows at full precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "key,value,tol")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.key, e.value, e.tol)?;
        }
        Ok(())
    }

    pub fn save(&self, out: &mut OutputDir, prefix: &str) -> Result<(), CliError> {
        out.write(&format!("{prefix}report.txt"), |w| self.write_text(w))?;
        out.write(&format!("{prefix}report.csv"), |w| self.write_csv(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_formats() {
        let mut r = Report::default();
        r.num("i1", 2.0000000001, "1e-6");
        r.num("res", 3.2e-15, "1e-14");
        r.text("fit", "already on orbit");
        r.text("steps", 12);
        let mut t = Vec::new();
        r.write_text(&mut t).unwrap();
        assert_eq!(String::from_utf8(t).unwrap(), "i1=2.000000\nres=3.200000e-15\nfit=already on orbit\nsteps=12\n");
        let mut c = Vec::new();
        r.write_csv(&mut c).unwrap();
        let c = String::from_utf8(c).unwrap();
        assert!(c.starts_with("key,value,tol\ni1,2.0000000001e0,1e-6\n"));
        assert_eq!(config_hash("abc").len(), 64);
    }
}
