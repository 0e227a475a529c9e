use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use polystap_core::evaluation::{self, linear_grid, OracleOptions, SweepSpec};
use polystap_core::linalg::to_db;
use polystap_core::optimizer::{design, OptimizerConfig};
use polystap_core::synthesis::{
    barker_waveform, gaussian_draws, select, CandidatePool, SelectionMethod,
};
use polystap_core::validation::{run_suites, Suite, SuiteReport};
use polystap_core::CovarianceModel;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{DesignArgs, OracleArgs, SweepArgs, ValidateArgs};
use crate::artifacts::{
    create_csv, create_out_dir, read_waveform_csv, write_json, write_waveform_csv, LoadedScenario,
    ManifestBuilder,
};
use crate::{core_err, CliError, Globals};

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(anyhow!("{msg}"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(anyhow!(e).context(format!("cannot write {}", path.display())))
}

#[derive(Serialize)]
struct Runtimes {
    design_s: f64,
    synthesis_s: f64,
}

#[derive(Serialize, Deserialize)]
struct SynthesisEntry {
    alphabet: u32,
    selection: u8,
    draws: usize,
    candidate_index: usize,
    selection_score: f64,
    sinr: f64,
    sinr_db: f64,
    waveform_file: String,
    phase_indices: Vec<u32>,
}

#[derive(Serialize)]
struct DesignReport {
    seed: u64,
    scenario_sha256: String,
    rank: usize,
    target_normalized_doppler: f64,
    fast_covariance: bool,
    converged: bool,
    outer_iterations: usize,
    relaxed_sinr: f64,
    relaxed_sinr_db: f64,
    monotonicity_violations: usize,
    max_entry_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    barker_sinr_db: Option<f64>,
    synthesized: Vec<SynthesisEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtimes: Option<Runtimes>,
}

pub fn design_cmd(a: &DesignArgs, g: &Globals) -> Result<(), CliError> {
    let loaded = LoadedScenario::load(&a.scenario)?;
    let mut scenario = loaded.scenario.clone();
    if let Some(f) = a.target_doppler {
        if f.is_nan() || f.abs() > 0.5 {
            return Err(usage(format!(
                "--target-doppler {f} is outside [-0.5, 0.5]"
            )));
        }
        scenario = scenario.with_target_doppler(f);
    }
    if a.alphabet.is_empty() || a.alphabet.iter().any(|&d| d < 2) {
        return Err(usage("--alphabet needs sizes of at least 2"));
    }
    if a.draws == 0 {
        return Err(usage("--draws must be positive"));
    }
    let cfg = OptimizerConfig {
        rank: a.rank,
        seed: a.seed,
        fast_covariance: a.fast_cov.into(),
        max_outer: a.max_outer,
        ..OptimizerConfig::default()
    };
    let d = scenario.dims();
    cfg.validate(d.tx_len()).map_err(core_err)?;
    let method = if a.selection == 1 {
        SelectionMethod::Method1
    } else {
        SelectionMethod::Method2
    };
    create_out_dir(&a.out)?;

    let settings = json!({
        "optimizer": cfg,
        "alphabet": a.alphabet,
        "draws": a.draws,
        "selection": a.selection,
        "target_doppler": scenario.target.normalized_doppler,
    });
    let manifest = ManifestBuilder::new("design", Some(&loaded), settings, a.seed, &a.out, g);

    let clock = Instant::now();
    let (model, out) = design(&scenario, &cfg).map_err(core_err)?;
    let design_s = clock.elapsed().as_secs_f64();
    let rank = cfg.resolved_rank(d.tx_len());
    eprintln!(
        "relaxed SINR {:.4} dB after {} outer iterations ({})",
        out.relaxed_sinr_db(),
        out.trace.outer_iterations(),
        if out.converged {
            "converged"
        } else {
            "iteration cap reached"
        }
    );

    let trace_path = a.out.join("trace.csv");
    let f = create_csv(&trace_path, a.seed, &loaded.sha256)?;
    out.trace
        .write_csv(f, !g.deterministic)
        .map_err(io_err(&trace_path))?;

    let clock = Instant::now();
    let draws = gaussian_draws(&out.factor, a.draws, a.seed);
    let amplitude = model.symbol_power().sqrt();
    let mut synthesized = Vec::new();
    for &alphabet in &a.alphabet {
        let pool =
            CandidatePool::from_draws(&draws, alphabet, amplitude, a.seed).map_err(core_err)?;
        let sel = select(&pool, &model, &out.filter, method).map_err(core_err)?;
        let sinr =
            evaluation::true_sinr(&model, sel.waveform.samples().as_slice()).map_err(core_err)?;
        let name = format!("waveform_d{alphabet}.csv");
        let path = a.out.join(&name);
        let f = create_csv(&path, a.seed, &loaded.sha256)?;
        write_waveform_csv(f, &sel.waveform, d.n_tx).map_err(|e| {
            CliError::Usage(anyhow!(e).context(format!("cannot write {}", path.display())))
        })?;
        println!(
            "D = {alphabet:>2}: synthesized SINR {:.4} dB (candidate {})",
            to_db(sinr),
            sel.index
        );
        synthesized.push(SynthesisEntry {
            alphabet,
            selection: a.selection,
            draws: a.draws,
            candidate_index: sel.index,
            selection_score: sel.score,
            sinr,
            sinr_db: to_db(sinr),
            waveform_file: name,
            phase_indices: sel.waveform.phase_indices().to_vec(),
        });
    }
    let synthesis_s = clock.elapsed().as_secs_f64();

    let barker_sinr_db = match barker_waveform(&scenario) {
        Ok(b) => Some(evaluation::true_sinr_db(&model, b.as_slice()).map_err(core_err)?),
        Err(_) => None,
    };
    let report = DesignReport {
        seed: a.seed,
        scenario_sha256: loaded.sha256.clone(),
        rank,
        target_normalized_doppler: scenario.target.normalized_doppler,
        fast_covariance: model.uses_fast_path(rank),
        converged: out.converged,
        outer_iterations: out.trace.outer_iterations(),
        relaxed_sinr: out.relaxed_sinr,
        relaxed_sinr_db: out.relaxed_sinr_db(),
        monotonicity_violations: out
            .trace
            .monotonicity_violations(polystap_core::validation::MONOTONE_SLACK)
            .len(),
        max_entry_residual: out.trace.max_entry_residual(),
        barker_sinr_db,
        synthesized,
        runtimes: (!g.deterministic).then_some(Runtimes {
            design_s,
            synthesis_s,
        }),
    };
    write_json(&a.out.join("report.json"), &report)?;
    write_json(&a.out.join("manifest.json"), &manifest.finish())?;
    Ok(())
}

pub fn sweep_cmd(a: &SweepArgs, g: &Globals) -> Result<(), CliError> {
    let loaded = LoadedScenario::load(&a.scenario)?;
    if a.points == 0 {
        return Err(usage("Doppler grid is empty (--points 0)"));
    }
    if a.f_min > a.f_max {
        return Err(usage("--f-min exceeds --f-max"));
    }
    let scenario = &loaded.scenario;
    let d = scenario.dims();
    let (waveform, label) = if a.waveform == "barker" {
        (
            barker_waveform(scenario).map_err(core_err)?,
            "barker".to_string(),
        )
    } else {
        let path = Path::new(&a.waveform);
        let s = read_waveform_csv(path, d.n_tx, d.code_length, scenario.symbol_power().sqrt())
            .map_err(CliError::Usage)?;
        let label = path
            .file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .unwrap_or_default();
        (s, label)
    };
    let spec = SweepSpec::new(
        linear_grid(a.f_min, a.f_max, a.points),
        waveform,
        label.clone(),
    )
    .map_err(core_err)?;
    create_out_dir(&a.out)?;
    let settings = json!({
        "waveform": a.waveform,
        "f_min": a.f_min,
        "f_max": a.f_max,
        "points": a.points,
    });
    let manifest = ManifestBuilder::new("sweep", Some(&loaded), settings, a.seed, &a.out, g);
    let model = CovarianceModel::new(scenario.clone()).map_err(core_err)?;
    let points = evaluation::doppler_sweep(&model, &spec).map_err(core_err)?;

    let path = a.out.join("sweep.csv");
    let f = create_csv(&path, a.seed, &loaded.sha256)?;
    let mut wr = csv::Writer::from_writer(f);
    let write = |wr: &mut csv::Writer<_>| -> csv::Result<()> {
        wr.write_record(["f_t", "sinr_db", "waveform_label"])?;
        for p in &points {
            wr.write_record([
                format!("{:.17e}", p.normalized_doppler),
                format!("{:.17e}", p.sinr_db),
                label.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    };
    write(&mut wr).map_err(|e| {
        CliError::Usage(anyhow!(e).context(format!("cannot write {}", path.display())))
    })?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.sinr_db), hi.max(p.sinr_db))
        });
    println!(
        "{} points, SINR from {lo:.3} dB to {hi:.3} dB",
        points.len()
    );
    write_json(&a.out.join("manifest.json"), &manifest.finish())?;
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    seed: u64,
    trials: usize,
    passed: bool,
    suites: &'a [SuiteReport],
}

pub fn validate_cmd(a: &ValidateArgs, g: &Globals) -> Result<(), CliError> {
    let reports = run_suites(&Suite::ALL, a.trials, a.seed).map_err(core_err)?;
    for r in &reports {
        println!("{r}");
    }
    let passed = reports.iter().all(SuiteReport::passed);
    if let Some(dir) = &a.out {
        create_out_dir(dir)?;
        let settings = json!({ "trials": a.trials });
        let manifest = ManifestBuilder::new("validate", None, settings, a.seed, dir, g);
        let report = ValidateReport {
            seed: a.seed,
            trials: a.trials,
            passed,
            suites: &reports,
        };
        write_json(&dir.join("validate.json"), &report)?;
        write_json(&dir.join("manifest.json"), &manifest.finish())?;
    }
    if passed {
        Ok(())
    } else {
        let failures: Vec<String> = reports
            .iter()
            .flat_map(|r| {
                r.failures
                    .iter()
                    .map(move |f| format!("{}: {f}", r.suite.name()))
            })
            .collect();
        Err(CliError::Failed(anyhow!(
            "property suites failed:\n  {}",
            failures.join("\n  ")
        )))
    }
}

/// The part of a design report the oracle needs.
#[derive(Deserialize)]
struct DesignSummary {
    scenario_sha256: String,
    synthesized: Vec<SynthesisEntry>,
}

fn design_gap_source(path: &Path, scenario_sha256: &str, alphabet: u32) -> Option<f64> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "warning: design report {} not readable ({e}); gap omitted",
                path.display()
            );
            return None;
        }
    };
    let summary: DesignSummary = match serde_json::from_str(&text).context("parse") {
        Ok(s) => s,
        Err(_) => {
            eprintln!(
                "warning: {} is not a design report; gap omitted",
                path.display()
            );
            return None;
        }
    };
    if summary.scenario_sha256 != scenario_sha256 {
        eprintln!("warning: design report was produced for a different scenario; gap omitted");
        return None;
    }
    let entry = summary.synthesized.iter().find(|e| e.alphabet == alphabet);
    if entry.is_none() {
        eprintln!("warning: design report has no D = {alphabet} waveform; gap omitted");
    }
    entry.map(|e| e.sinr_db)
}

pub fn oracle_cmd(a: &OracleArgs, g: &Globals) -> Result<(), CliError> {
    let loaded = LoadedScenario::load(&a.scenario)?;
    let model = CovarianceModel::new(loaded.scenario.clone()).map_err(core_err)?;
    let options = OracleOptions {
        phase_classes: a.phase_classes,
        ..OracleOptions::default()
    };
    let report = evaluation::exhaustive_oracle(&model, a.alphabet, options).map_err(core_err)?;
    create_out_dir(&a.out)?;
    let settings = json!({ "alphabet": a.alphabet, "phase_classes": a.phase_classes });
    let manifest = ManifestBuilder::new("oracle", Some(&loaded), settings, a.seed, &a.out, g);

    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Usage(e.into()))?;
    let obj = value
        .as_object_mut()
        .expect("report serializes to an object");
    // u128 counts do not fit JSON numbers portably
    obj.insert("enumerated".into(), json!(report.enumerated.to_string()));
    obj.insert("evaluated".into(), json!(report.evaluated.to_string()));
    obj.insert("seed".into(), json!(a.seed));
    obj.insert("scenario_sha256".into(), json!(loaded.sha256));
    if g.deterministic {
        obj.remove("runtime_s");
    }
    println!(
        "best D = {} waveform: {:.4} dB over {} waveforms",
        a.alphabet, report.best_sinr_db, report.enumerated
    );
    if let Some(path) = &a.design {
        if let Some(synth_db) = design_gap_source(path, &loaded.sha256, a.alphabet) {
            let gap = report.best_sinr_db - synth_db;
            println!("gap to synthesized waveform: {gap:.4} dB");
            obj.insert("synthesized_sinr_db".into(), json!(synth_db));
            obj.insert("gap_db".into(), json!(gap));
        }
    }
    write_json(&a.out.join("oracle.json"), &value)?;
    write_json(&a.out.join("manifest.json"), &manifest.finish())?;
    Ok(())
}
