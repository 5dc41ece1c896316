use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hybrid_qf::C64;

/// Provenance written into every output file.
#[derive(Debug, Clone)]
pub struct Meta {
    pub pairs: Vec<(String, String)>,
}

impl Meta {
    pub fn new(config_hash: &str, command: &str, seed: u64) -> Self {
        Self {
            pairs: vec![
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
                ("config_sha256".into(), config_hash.into()),
                ("command".into(), command.into()),
                ("seed".into(), seed.to_string()),
            ],
        }
    }

    pub fn write_lines<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# hybrid-qf")?;
        for (k, v) in &self.pairs {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }
}

pub fn create(dir: &Path, name: &str) -> std::io::Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// 17 significant digits, stable across runs.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn nums(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(num).collect::<Vec<_>>().join(",")
}

pub fn complex(z: C64) -> String {
    format!("{},{}", num(z.re), num(z.im))
}

/// Simple CSV table with a provenance preamble.
pub struct Table {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, meta: &Meta, columns: &[String]) -> std::io::Result<Self> {
        let (path, mut out) = create(dir, name)?;
        meta.write_lines(&mut out)?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { path, out })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}

pub fn indexed(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}
