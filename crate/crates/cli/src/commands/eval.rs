use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ictc_core::data::{edit_distance, read_manifest_entries};
use ictc_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::write_json;

#[derive(Deserialize)]
struct HypRecord {
    id: String,
    tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub cer: f64,
    pub errors: usize,
    pub reference_tokens: usize,
    pub utterances: usize,
}

/// Corpus CER: summed edit distances over summed reference lengths.
/// Every hypothesis must match a manifest id and vice versa.
pub fn evaluate(hyps: &Path, manifest: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(hyps).map_err(|e| Error::io(hyps, e))?;
    let mut by_id: HashMap<String, Vec<String>> = HashMap::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: HypRecord =
            serde_json::from_str(line).map_err(|e| Error::Ingest(format!("{}:{}: {e}", hyps.display(), n + 1)))?;
        if by_id.insert(rec.id.clone(), rec.tokens).is_some() {
            return Err(Error::Ingest(format!("duplicate hypothesis id {:?}", rec.id)));
        }
    }
    let entries = read_manifest_entries(manifest)?;
    let (mut errors, mut reference_tokens) = (0, 0);
    for entry in &entries {
        let hyp = by_id.remove(&entry.id).ok_or_else(|| {
            Error::Ingest(format!("id mismatch: manifest utterance {:?} has no hypothesis", entry.id))
        })?;
        let reference: Vec<&str> = entry.transcript.split_whitespace().collect();
        let hyp: Vec<&str> = hyp.iter().map(String::as_str).collect();
        errors += edit_distance(&reference, &hyp);
        reference_tokens += reference.len();
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::Ingest(format!("id mismatch: hypothesis {extra:?} is not in the manifest")));
    }
    if reference_tokens == 0 {
        return Err(Error::Usage("manifest has no reference tokens".into()));
    }
    Ok(EvalReport { cer: errors as f64 / reference_tokens as f64, errors, reference_tokens, utterances: entries.len() })
}

pub fn run(hyps: &Path, manifest: &Path, out: Option<&Path>) -> Result<()> {
    let report = evaluate(hyps, manifest)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if let Some(out) = out {
        write_json(out, &report)?;
    }
    Ok(())
}
