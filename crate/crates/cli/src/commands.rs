//! Implementations of the pipeline subcommands.

use std::path::{Path, PathBuf};

use antetomo::antedate::{pauli_counts_for_group, process_inputs_for_group, BellGroup};
use antetomo::fixtures as fx;
use antetomo::proctomo::{bootstrap_process_std, chi_from_s, mle_process, ChiMatrix};
use antetomo::qcore::{apply_correction, CorrectionUnitary, JsonMatrix, PureState, StateLabel};
use antetomo::simproto::{aggregate_with_grid, sample_ensemble, BellBin, CountsTable};
use antetomo::statetomo::reconstruct_with_error;
use antetomo::{qcore::BellOutcome, seeds};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::reports::{
    read_json, write_json, ProcessReportEntry, ProcessReportFile, RunManifest, StateReportEntry,
    StateReportFile, PROCESS_REPORT_SCHEMA, STATE_REPORT_SCHEMA,
};
use crate::{CliError, CliResult};

/// Seed-derivation tags for per-entry bootstrap streams.
const TAG_STATE_ENTRY: u64 = 0xB0;
const TAG_PROCESS_ENTRY: u64 = 0xB1;

const STANDARD_BINS: [BellBin; 3] = [
    BellBin::Resolved(BellOutcome::PhiPlus),
    BellBin::Resolved(BellOutcome::PhiMinus),
    BellBin::Unresolved,
];

fn simulate_counts(
    config: &ConfigFile,
    seed_override: Option<u64>,
) -> CliResult<(CountsTable, u64)> {
    let experiment = config.to_experiment(seed_override)?;
    let records = sample_ensemble(&experiment)?;
    let counts = aggregate_with_grid(&records, &experiment.prepared_states, &STANDARD_BINS);
    Ok((counts, experiment.seed))
}

pub fn simulate(config_path: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let config = ConfigFile::load(config_path)?;
    let (counts, seed) = simulate_counts(&config, seed)?;
    let mut manifest = RunManifest::new("simulate", Some(config_path), out, seed);
    println!("unresolved fraction: {:.4}", counts.unresolved_fraction());
    manifest.stages.push("simulate".into());
    manifest
        .outputs
        .push(write_json(out, "counts.json", &counts)?);
    write_json(out, "manifest.json", &manifest)?;
    Ok(())
}

struct CountsSource {
    counts: CountsTable,
    seed: u64,
    config_path: Option<PathBuf>,
    simulated: bool,
}

fn load_or_simulate(
    counts_path: Option<&Path>,
    config_path: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<CountsSource> {
    match (counts_path, config_path) {
        (Some(path), None) => Ok(CountsSource {
            counts: read_json(path)?,
            seed: seed.unwrap_or(0),
            config_path: None,
            simulated: false,
        }),
        (None, Some(path)) => {
            let config = ConfigFile::load(path)?;
            let (counts, seed) = simulate_counts(&config, seed)?;
            Ok(CountsSource {
                counts,
                seed,
                config_path: Some(path.to_path_buf()),
                simulated: true,
            })
        }
        _ => Err(CliError::Validation(
            "exactly one of --counts or --config is required".into(),
        )),
    }
}

/// The pure state a group's reconstruction is compared against: the ideal
/// preparation, conjugated by σ₃ for the Φ⁻ branch (whose ideal channel is
/// the phase flip).
fn group_target(group: BellGroup, label: StateLabel) -> PureState {
    match group {
        BellGroup::PhiMinus => {
            apply_correction(&label.state(), CorrectionUnitary::new(3).expect("in range"))
                .expect("single qubit")
        }
        _ => label.state(),
    }
}

#[derive(Debug, Clone, Serialize)]
struct StateReportError {
    state: String,
    error: String,
}

pub fn reconstruct(
    counts_path: Option<&Path>,
    config_path: Option<&Path>,
    group: BellGroup,
    out: &Path,
    resamples: usize,
    seed: Option<u64>,
) -> CliResult<()> {
    let source = load_or_simulate(counts_path, config_path, seed)?;
    let states = source.counts.states();
    if states.is_empty() {
        return Err(CliError::Validation("counts table is empty".into()));
    }

    let mut entries = Vec::new();
    let mut errors: Vec<StateReportError> = Vec::new();
    let mut unconverged = Vec::new();
    for (index, state) in states.iter().enumerate() {
        let outcome = StateLabel::parse(state).and_then(|label| {
            let cells = pauli_counts_for_group(&source.counts, state, group)?;
            let target = group_target(group, label);
            let entry_seed = seeds::derive(source.seed, TAG_STATE_ENTRY, index as u64);
            reconstruct_with_error(&cells, &target, resamples, entry_seed)
        });
        match outcome {
            Ok(result) => {
                if !result.converged {
                    unconverged.push(state.clone());
                }
                entries.push(StateReportEntry {
                    state: state.clone(),
                    bell_group: group,
                    rho: JsonMatrix(result.rho_est.matrix().clone()),
                    fidelity: result.fidelity,
                    fidelity_std: result.fidelity_std,
                    iterations: result.iterations,
                });
            }
            Err(e) => errors.push(StateReportError {
                state: state.clone(),
                error: e.to_string(),
            }),
        }
    }

    #[derive(Serialize)]
    struct FileWithErrors {
        schema: String,
        entries: Vec<StateReportEntry>,
        errors: Vec<StateReportError>,
    }
    let report = FileWithErrors {
        schema: STATE_REPORT_SCHEMA.into(),
        entries,
        errors,
    };

    if source.counts.has_unresolved() {
        println!(
            "unresolved fraction: {:.4}",
            source.counts.unresolved_fraction()
        );
    }
    let mut manifest = RunManifest::new(
        "reconstruct",
        source.config_path.as_deref(),
        out,
        source.seed,
    );
    if source.simulated {
        manifest.stages.push("simulate".into());
        manifest
            .outputs
            .push(write_json(out, "counts.json", &source.counts)?);
    }
    manifest.stages.push("reconstruct".into());
    manifest
        .outputs
        .push(write_json(out, "state_report.json", &report)?);
    write_json(out, "manifest.json", &manifest)?;

    if report.entries.is_empty() {
        return Err(CliError::Validation(format!(
            "no state could be reconstructed ({} errors)",
            report.errors.len()
        )));
    }
    if !unconverged.is_empty() {
        return Err(CliError::NonConvergence(format!(
            "iteration cap reached for states: {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}

pub fn process(
    counts_path: Option<&Path>,
    config_path: Option<&Path>,
    out: &Path,
    resamples: usize,
    seed: Option<u64>,
) -> CliResult<()> {
    let source = load_or_simulate(counts_path, config_path, seed)?;
    let mut entries = Vec::new();
    let mut unconverged = Vec::new();
    for (index, group) in [BellGroup::PhiPlus, BellGroup::PhiMinus]
        .into_iter()
        .enumerate()
    {
        let data = process_inputs_for_group(&source.counts, group)?;
        let estimate = mle_process(&data)?;
        if !estimate.converged {
            unconverged.push(group.to_string());
        }
        let chi = chi_from_s(&estimate.choi);
        let ideal = ideal_chi_for(group);
        let fidelity = antetomo::proctomo::process_fidelity(&chi, &ideal)?;
        let entry_seed = seeds::derive(source.seed, TAG_PROCESS_ENTRY, index as u64);
        let fidelity_std = bootstrap_process_std(&data, &ideal, resamples, entry_seed)?;
        entries.push(ProcessReportEntry {
            bell_group: group,
            s: JsonMatrix(estimate.choi.matrix().clone()),
            chi: JsonMatrix(chi.matrix().clone()),
            process_fidelity: fidelity,
            fidelity_std,
            iterations: estimate.iterations,
        });
    }
    let report = ProcessReportFile {
        schema: PROCESS_REPORT_SCHEMA.into(),
        entries,
    };

    if source.counts.has_unresolved() {
        println!(
            "unresolved fraction: {:.4}",
            source.counts.unresolved_fraction()
        );
    }
    let mut manifest = RunManifest::new("process", source.config_path.as_deref(), out, source.seed);
    if source.simulated {
        manifest.stages.push("simulate".into());
        manifest
            .outputs
            .push(write_json(out, "counts.json", &source.counts)?);
    }
    manifest.stages.push("process".into());
    manifest
        .outputs
        .push(write_json(out, "process_report.json", &report)?);
    write_json(out, "manifest.json", &manifest)?;

    if !unconverged.is_empty() {
        return Err(CliError::NonConvergence(format!(
            "iteration cap reached for groups: {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}

fn ideal_chi_for(group: BellGroup) -> ChiMatrix {
    match group {
        BellGroup::PhiMinus => fx::chi_minus_ideal(),
        _ => fx::chi_plus_ideal(),
    }
}

fn group_order(g: BellGroup) -> usize {
    match g {
        BellGroup::PhiPlus => 0,
        BellGroup::PhiMinus => 1,
        BellGroup::Combined => 2,
    }
}

fn state_order(s: &str) -> usize {
    StateLabel::ALL
        .iter()
        .position(|l| l.as_str() == s)
        .unwrap_or(StateLabel::ALL.len())
}

fn push_matrix_rows(csv: &mut String, series: &str, group: &str, state: &str, m: &JsonMatrix) {
    for r in 0..m.0.nrows() {
        for col in 0..m.0.ncols() {
            let v = m.0[(r, col)];
            csv.push_str(&format!("{series}_re,{group},{state},{r},{col},{}\n", v.re));
            csv.push_str(&format!("{series}_im,{group},{state},{r},{col},{}\n", v.im));
        }
    }
}

pub fn report(files: &[PathBuf], out: &Path) -> CliResult<()> {
    if files.is_empty() {
        return Err(CliError::Validation("no report files given".into()));
    }
    let mut state_entries: Vec<StateReportEntry> = Vec::new();
    let mut process_entries: Vec<ProcessReportEntry> = Vec::new();
    for path in files {
        let value: serde_json::Value = read_json(path)?;
        let schema = value
            .get("schema")
            .and_then(|s| s.as_str())
            .ok_or_else(|| {
                CliError::Validation(format!("{} carries no schema field", path.display()))
            })?;
        match schema {
            STATE_REPORT_SCHEMA => {
                let file: StateReportFile = serde_json::from_value(value)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                state_entries.extend(file.entries);
            }
            PROCESS_REPORT_SCHEMA => {
                let file: ProcessReportFile = serde_json::from_value(value)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                process_entries.extend(file.entries);
            }
            other => {
                return Err(CliError::Validation(format!(
                    "{}: unsupported schema {other:?} (mixed or unknown versions are rejected)",
                    path.display()
                )))
            }
        }
    }
    if state_entries.is_empty() && process_entries.is_empty() {
        return Err(CliError::Validation(
            "report files contain no entries".into(),
        ));
    }

    state_entries.sort_by_key(|e| (group_order(e.bell_group), state_order(&e.state)));
    process_entries.sort_by_key(|e| group_order(e.bell_group));

    let mut csv = String::from("series,group,state,row,col,value\n");
    println!(
        "{:<10} {:<8} {:>9} {:>9}",
        "group", "state", "fidelity", "std"
    );
    for e in &state_entries {
        println!(
            "{:<10} {:<8} {:>9.4} {:>9.4}",
            e.bell_group.as_str(),
            e.state,
            e.fidelity,
            e.fidelity_std
        );
        push_matrix_rows(&mut csv, "rho", e.bell_group.as_str(), &e.state, &e.rho);
        csv.push_str(&format!(
            "fidelity,{},{},,,{}\n",
            e.bell_group.as_str(),
            e.state,
            e.fidelity
        ));
        csv.push_str(&format!(
            "fidelity_std,{},{},,,{}\n",
            e.bell_group.as_str(),
            e.state,
            e.fidelity_std
        ));
    }
    for e in &process_entries {
        println!(
            "{:<10} {:<8} {:>9.4} {:>9.4}",
            e.bell_group.as_str(),
            "channel",
            e.process_fidelity,
            e.fidelity_std
        );
        push_matrix_rows(&mut csv, "s", e.bell_group.as_str(), "", &e.s);
        push_matrix_rows(&mut csv, "chi", e.bell_group.as_str(), "", &e.chi);
        csv.push_str(&format!(
            "process_fidelity,{},,,,{}\n",
            e.bell_group.as_str(),
            e.process_fidelity
        ));
        csv.push_str(&format!(
            "fidelity_std,{},,,,{}\n",
            e.bell_group.as_str(),
            e.fidelity_std
        ));
    }
    if !state_entries.is_empty() {
        let avg: f64 =
            state_entries.iter().map(|e| e.fidelity).sum::<f64>() / state_entries.len() as f64;
        println!("{:<10} {:<8} {:>9.4}", "average", "", avg);
        csv.push_str(&format!("average_fidelity,all,,,,{avg}\n"));
    }

    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.csv"), csv)?;
    Ok(())
}

pub fn fixtures(out: &Path) -> CliResult<()> {
    #[derive(Serialize)]
    struct SourceFixture {
        description: &'static str,
        matrix: JsonMatrix,
        fidelity: f64,
        fidelity_std: f64,
    }
    #[derive(Serialize)]
    struct StateFixtureOut {
        label: String,
        group: BellGroup,
        description: String,
        rho: JsonMatrix,
        fidelity: f64,
        fidelity_std: f64,
    }
    #[derive(Serialize)]
    struct ProcessFixtureOut {
        group: BellGroup,
        kind: &'static str,
        description: String,
        chi: JsonMatrix,
        #[serde(skip_serializing_if = "Option::is_none")]
        process_fidelity: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        fidelity_std: Option<f64>,
    }
    #[derive(Serialize)]
    struct FixturesFile {
        schema: &'static str,
        source: SourceFixture,
        states: Vec<StateFixtureOut>,
        processes: Vec<ProcessFixtureOut>,
    }

    let mut states = Vec::new();
    for fixture in fx::grouped_state_fixtures()
        .into_iter()
        .chain(fx::combined_state_fixtures())
    {
        states.push(StateFixtureOut {
            label: fixture.label.to_string(),
            group: fixture.group,
            description: format!(
                "reconstructed state for preparation |{}⟩, {} data",
                fixture.label,
                fixture.group.as_str()
            ),
            rho: JsonMatrix(fixture.rho.matrix().clone()),
            fidelity: fixture.fidelity,
            fidelity_std: fixture.fidelity_std,
        });
    }

    let processes = vec![
        ProcessFixtureOut {
            group: BellGroup::PhiPlus,
            kind: "ideal",
            description: "ideal identity time channel".into(),
            chi: JsonMatrix(fx::chi_plus_ideal().matrix().clone()),
            process_fidelity: None,
            fidelity_std: None,
        },
        ProcessFixtureOut {
            group: BellGroup::PhiPlus,
            kind: "mle",
            description: "estimated time channel for the Φ+ branch".into(),
            chi: JsonMatrix(fx::chi_plus_mle().matrix().clone()),
            process_fidelity: Some(fx::PROCESS_FIDELITY_PLUS),
            fidelity_std: Some(fx::PROCESS_FIDELITY_STD),
        },
        ProcessFixtureOut {
            group: BellGroup::PhiMinus,
            kind: "ideal",
            description: "ideal phase-flip time channel".into(),
            chi: JsonMatrix(fx::chi_minus_ideal().matrix().clone()),
            process_fidelity: None,
            fidelity_std: None,
        },
        ProcessFixtureOut {
            group: BellGroup::PhiMinus,
            kind: "mle",
            description: "estimated time channel for the Φ− branch".into(),
            chi: JsonMatrix(fx::chi_minus_mle().matrix().clone()),
            process_fidelity: Some(fx::PROCESS_FIDELITY_MINUS),
            fidelity_std: Some(fx::PROCESS_FIDELITY_STD),
        },
    ];

    let file = FixturesFile {
        schema: "antetomo.fixtures.v1",
        source: SourceFixture {
            description: "reconstructed two-photon source state",
            matrix: JsonMatrix(fx::source_rho_matrix()),
            fidelity: fx::SOURCE_FIDELITY,
            fidelity_std: fx::SOURCE_FIDELITY_STD,
        },
        states,
        processes,
    };

    let mut manifest = RunManifest::new("fixtures", None, out, 0);
    manifest.stages.push("fixtures".into());
    manifest
        .outputs
        .push(write_json(out, "fixtures.json", &file)?);
    write_json(out, "manifest.json", &manifest)?;
    Ok(())
}
