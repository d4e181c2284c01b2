//! Line-oriented input files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// One SMILES per line; blank lines and `#` comments are skipped.
pub fn parse_smiles_list(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

pub fn read_smiles(path: &Path) -> Result<Vec<String>> {
    Ok(parse_smiles_list(&read_text(path)?))
}

/// `name<TAB>SMILES` lines grouped by name in order of first appearance.
pub fn parse_classes(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut classes: Vec<(String, Vec<String>)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, smiles)) = line.split_once('\t') else {
            bail!("line {}: expected name<TAB>SMILES", n + 1);
        };
        let (name, smiles) = (name.trim(), smiles.trim());
        match classes.iter_mut().find(|c| c.0 == name) {
            Some(c) => c.1.push(smiles.into()),
            None => classes.push((name.into(), vec![smiles.into()])),
        }
    }
    Ok(classes)
}

pub fn read_classes(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    parse_classes(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut s = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Hex SHA-256 of a file's bytes.
pub fn digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
