//! JSON-lines manifests and headerless feature CSVs.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Utterance, Vocab, DEFAULT_FRAME_SHIFT_MS};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Feature CSV path relative to the manifest's directory.
    pub features: String,
    /// Space-separated symbols.
    pub transcript: String,
}

pub fn read_features(path: &Path) -> Result<Matrix<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Ingest(format!("{}:{}: {e}", path.display(), n + 1)))?;
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|_| Error::Ingest(format!("{}: ragged CSV rows", path.display())))
}

pub fn write_features(path: &Path, features: &Matrix<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in features.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads every utterance listed in a manifest, in manifest order.
pub fn load_manifest(path: &Path, vocab: &Vocab, allow_unk: bool) -> Result<Vec<Utterance>> {
    let entries = read_manifest_entries(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut feature_dim = None;
    let mut out = Vec::with_capacity(entries.len());
    for (n, entry) in entries.into_iter().enumerate() {
        let feat_path = base.join(&entry.features);
        if !feat_path.is_file() {
            return Err(Error::Ingest(format!(
                "manifest row {} ({}): feature file {} not found",
                n + 1,
                entry.id,
                feat_path.display()
            )));
        }
        let features = read_features(&feat_path)?;
        if features.rows() == 0 {
            return Err(Error::Ingest(format!("utterance {} has no frames", entry.id)));
        }
        match feature_dim {
            None => feature_dim = Some(features.cols()),
            Some(f) if f != features.cols() => {
                return Err(Error::Ingest(format!(
                    "utterance {} has feature dim {}, corpus uses {f}",
                    entry.id,
                    features.cols()
                )))
            }
            _ => {}
        }
        let transcript = vocab
            .encode(&entry.transcript, allow_unk)
            .map_err(|e| Error::Ingest(format!("manifest row {} ({}): {e}", n + 1, entry.id)))?;
        out.push(Utterance { id: entry.id, features, transcript, frame_shift_ms: DEFAULT_FRAME_SHIFT_MS });
    }
    Ok(out)
}

pub fn read_manifest_entries(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::Ingest(format!("{}:{}: {e}", path.display(), n + 1))))
        .collect()
}

/// Writes utterances as `<dir>/<name>.jsonl` with features under
/// `<dir>/feats/<name>/`. Returns the manifest path.
pub fn write_manifest(dir: &Path, name: &str, utterances: &[Utterance], vocab: &Vocab) -> Result<PathBuf> {
    let feat_dir = dir.join("feats").join(name);
    fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
    let manifest_path = dir.join(format!("{name}.jsonl"));
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    for utt in utterances {
        let rel = format!("feats/{name}/{}.csv", utt.id);
        write_features(&dir.join(&rel), &utt.features)?;
        let entry = ManifestEntry { id: utt.id.clone(), features: rel, transcript: vocab.render(&utt.transcript) };
        let line = serde_json::to_string(&entry).expect("manifest entry serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(&manifest_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
