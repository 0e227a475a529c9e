//! Output files: manifest, hashing and the CSV formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use polystap_core::synthesis::PolyphaseWaveform;
use polystap_core::{CVector, Scenario, C64};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A scenario file together with the hash of its bytes.
pub struct LoadedScenario {
    pub path: PathBuf,
    pub scenario: Scenario,
    pub sha256: String,
    bytes: Vec<u8>,
}

impl LoadedScenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))
            .map_err(CliError::Usage)?;
        let text = std::str::from_utf8(&bytes)
            .with_context(|| format!("scenario file {} is not UTF-8", path.display()))
            .map_err(CliError::Usage)?;
        let scenario = Scenario::from_json_str(text)
            .with_context(|| format!("invalid scenario file {}", path.display()))
            .map_err(CliError::Usage)?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
            scenario,
            bytes,
        })
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_sha256: Option<String>,
    /// Hash over the scenario bytes and the settings below.
    pub inputs_sha256: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub output_dir: String,
    pub deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_unix_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_unix_s: Option<f64>,
}

pub struct ManifestBuilder {
    pub subcommand: &'static str,
    pub scenario: Option<(String, String, Vec<u8>)>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub deterministic: bool,
    pub threads: Option<usize>,
    started: f64,
}

impl ManifestBuilder {
    pub fn new(
        subcommand: &'static str,
        scenario: Option<&LoadedScenario>,
        config: serde_json::Value,
        seed: u64,
        output_dir: &Path,
        global: &crate::Globals,
    ) -> Self {
        Self {
            subcommand,
            scenario: scenario.map(|s| {
                (
                    s.path.display().to_string(),
                    s.sha256.clone(),
                    s.bytes.clone(),
                )
            }),
            config,
            seed,
            output_dir: output_dir.to_path_buf(),
            deterministic: global.deterministic,
            threads: global.threads,
            started: unix_now(),
        }
    }

    pub fn finish(self) -> Manifest {
        let mut h = Sha256::new();
        if let Some((_, _, bytes)) = &self.scenario {
            h.update(bytes);
        }
        h.update(self.subcommand.as_bytes());
        h.update(self.config.to_string().as_bytes());
        h.update(self.seed.to_le_bytes());
        let (started, finished) = if self.deterministic {
            (None, None)
        } else {
            (Some(self.started), Some(unix_now()))
        };
        let (scenario_path, scenario_sha256) = match self.scenario {
            Some((p, s, _)) => (Some(p), Some(s)),
            None => (None, None),
        };
        Manifest {
            tool: "polystap",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            scenario_path,
            scenario_sha256,
            inputs_sha256: hex::encode(h.finalize()),
            config: self.config,
            seed: self.seed,
            output_dir: self.output_dir.display().to_string(),
            deterministic: self.deterministic,
            threads: self.threads,
            started_unix_s: started,
            finished_unix_s: finished,
        }
    }
}

pub fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(CliError::Usage)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.into()))?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Usage)
}

/// Open a CSV file and write the provenance comment line.
pub fn create_csv(path: &Path, seed: u64, scenario_sha256: &str) -> Result<fs::File, CliError> {
    let mut f = fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(CliError::Usage)?;
    writeln!(f, "# seed={seed} scenario_sha256={scenario_sha256}")
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Usage)?;
    Ok(f)
}

/// One row per transmit antenna, two columns per chip: the phase index and
/// the phase in radians.
pub fn write_waveform_csv<W: Write>(out: W, w: &PolyphaseWaveform, n_tx: usize) -> csv::Result<()> {
    let code_length = w.len() / n_tx;
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["antenna".to_string()];
    for l in 0..code_length {
        header.push(format!("chip{l}_index"));
        header.push(format!("chip{l}_rad"));
    }
    wr.write_record(&header)?;
    for t in 0..n_tx {
        let mut row = vec![t.to_string()];
        for l in 0..code_length {
            let i = l * n_tx + t;
            row.push(w.phase_indices()[i].to_string());
            row.push(format!("{:.17e}", w.phase(i)));
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Read a waveform CSV back as samples of amplitude `amplitude`. Only the
/// radian columns are used, so any phase grid is accepted.
pub fn read_waveform_csv(
    path: &Path,
    n_tx: usize,
    code_length: usize,
    amplitude: f64,
) -> Result<CVector> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read waveform file {}", path.display()))?;
    let mut s = CVector::zeros(n_tx * code_length);
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.with_context(|| format!("malformed waveform file {}", path.display()))?;
        if rec.len() != 1 + 2 * code_length {
            bail!(
                "waveform file {} has {} columns, expected {} for code length {code_length}",
                path.display(),
                rec.len(),
                1 + 2 * code_length
            );
        }
        let t: usize = rec[0].trim().parse().context("antenna column")?;
        if t >= n_tx {
            bail!(
                "waveform file {} names antenna {t} but the scenario has {n_tx}",
                path.display()
            );
        }
        for l in 0..code_length {
            let phase: f64 = rec[2 + 2 * l]
                .trim()
                .parse()
                .with_context(|| format!("chip {l} phase"))?;
            s[l * n_tx + t] = C64::from_polar(amplitude, phase);
        }
        rows += 1;
    }
    if rows != n_tx {
        bail!(
            "waveform file {} has {rows} rows, expected {n_tx}",
            path.display()
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_csv_round_trip() {
        let w = PolyphaseWaveform::new(vec![0, 1, 2, 3, 3, 2], 4, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "# seed=1 scenario_sha256=00").unwrap();
        write_waveform_csv(&mut f, &w, 2).unwrap();
        drop(f);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("antenna,chip0_index,chip0_rad,chip1_index"));
        let s = read_waveform_csv(&path, 2, 3, 0.5).unwrap();
        let expect = w.samples();
        assert!((s - expect).norm() < 1e-14);
        assert!(read_waveform_csv(&path, 3, 3, 0.5).is_err());
        assert!(read_waveform_csv(&path, 2, 4, 0.5).is_err());
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
