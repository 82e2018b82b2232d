use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run. Contains no timestamps, so identical runs produce
/// identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub report: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Files a run reads and writes. Checked up front: outputs must not exist unless forced,
/// and no output may name an input.
pub struct RunFiles {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunFiles {
    pub fn new(inputs: Vec<PathBuf>, outputs: Vec<PathBuf>) -> Self {
        RunFiles { inputs, outputs }
    }

    pub fn check(&self, force: bool) -> Result<()> {
        for inp in &self.inputs {
            if !inp.is_file() {
                bail!(UsageError(format!("input {} does not exist", inp.display())));
            }
        }
        for (k, out) in self.outputs.iter().enumerate() {
            if self.outputs[..k].contains(out) {
                bail!(UsageError(format!("output {} is named twice", out.display())));
            }
            if out.exists() {
                for inp in &self.inputs {
                    if same_file(inp, out) {
                        bail!(UsageError(format!("output {} would overwrite an input", out.display())));
                    }
                }
                if !force {
                    bail!(UsageError(format!(
                        "{} already exists (pass --force to overwrite)",
                        out.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn digests(&self) -> Result<Vec<InputDigest>> {
        self.inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect()
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes the manifest to `path` and echoes it on stdout.
pub fn emit(manifest: &Manifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    let mut f = create(path)?;
    writeln!(f, "{text}")?;
    f.flush()?;
    println!("{text}");
    Ok(())
}
