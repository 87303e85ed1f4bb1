use std::path::Path;

use ictc_core::config::ExperimentConfig;
use ictc_core::model::{examples, load_params};
use ictc_core::{Error, Result};
use serde::Serialize;

use super::{decode_all, parse_modes};
use crate::dataset::{create_dir, DataDir};
use crate::output::{write_csv, write_json};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub p95: f64,
}

impl Spread {
    fn of(mut values: Vec<f64>) -> Spread {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 };
        // nearest rank
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Spread { median, p95: values[rank - 1] }
    }
}

#[derive(Clone, Debug, Serialize)]
struct ModeBench {
    mode: String,
    /// Per-utterance first-pass latency over all timed repetitions.
    decode_latency_ms: Spread,
    rescore_latency_ms: Option<Spread>,
    /// Per-repetition real-time factor.
    rtf: Spread,
}

#[derive(Serialize)]
struct BenchRow {
    mode: String,
    decode_latency_median_ms: f64,
    decode_latency_p95_ms: f64,
    rescore_latency_median_ms: Option<f64>,
    rescore_latency_p95_ms: Option<f64>,
    rtf_median: f64,
    rtf_p95: f64,
}

#[derive(Serialize)]
struct Machine {
    os: &'static str,
    arch: &'static str,
    cpus: usize,
    note: String,
}

#[derive(Serialize)]
struct BenchReport {
    repetitions: usize,
    warmup_repetitions: usize,
    utterances: usize,
    workers: usize,
    machine: Machine,
    modes: Vec<ModeBench>,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    config: &ExperimentConfig,
    workers: usize,
    checkpoint: &Path,
    data: &Path,
    split: &str,
    modes: &[String],
    repetitions: usize,
    out: &Path,
    note: Option<&str>,
) -> Result<()> {
    if repetitions < 3 {
        return Err(Error::Usage(format!("bench needs at least 3 repetitions, got {repetitions}")));
    }
    let modes = parse_modes(modes)?;
    let dir = DataDir::open(data)?;
    let utts = dir.split(split)?;
    let audio_ms: f64 = utts.iter().map(|u| u.duration_ms()).sum();
    let model = load_params::<f64>(checkpoint)?;
    let exs = examples::<f64>(&utts);
    create_dir(out)?;

    let mut results = Vec::new();
    for mode in modes {
        decode_all(&model, &exs, mode, &config.decode, workers)?;
        let (mut dec, mut resc, mut rtf) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..repetitions {
            let decoded = decode_all(&model, &exs, mode, &config.decode, workers)?;
            let mut total = 0.0;
            for d in &decoded {
                dec.push(d.decode_ms);
                total += d.decode_ms;
                if let Some(r) = d.rescore_ms {
                    resc.push(r);
                    total += r;
                }
            }
            rtf.push(total / audio_ms);
        }
        let entry = ModeBench {
            mode: mode.to_string(),
            decode_latency_ms: Spread::of(dec),
            rescore_latency_ms: mode.rescores().then(|| Spread::of(resc)),
            rtf: Spread::of(rtf),
        };
        println!(
            "{mode}: decode median {:.3} ms p95 {:.3} ms, RTF {:.5}",
            entry.decode_latency_ms.median, entry.decode_latency_ms.p95, entry.rtf.median
        );
        results.push(entry);
    }

    let machine_note = note.map(str::to_string).unwrap_or_default();
    let report = BenchReport {
        repetitions,
        warmup_repetitions: 1,
        utterances: utts.len(),
        workers,
        machine: Machine {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            note: machine_note,
        },
        modes: results.clone(),
    };
    let rows: Vec<BenchRow> = results
        .iter()
        .map(|m| BenchRow {
            mode: m.mode.clone(),
            decode_latency_median_ms: m.decode_latency_ms.median,
            decode_latency_p95_ms: m.decode_latency_ms.p95,
            rescore_latency_median_ms: m.rescore_latency_ms.as_ref().map(|s| s.median),
            rescore_latency_p95_ms: m.rescore_latency_ms.as_ref().map(|s| s.p95),
            rtf_median: m.rtf.median,
            rtf_p95: m.rtf.p95,
        })
        .collect();
    write_csv(&out.join("bench.csv"), &rows)?;
    write_json(&out.join("bench.json"), &report)
}
