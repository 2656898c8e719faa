mod scenario;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mdiew_core::io::{fmt_sig, outcome_key, parse_outcome, read_basis, read_matrix};
use mdiew_core::protocol::{mdiew_value, probability_table, single_outcome_value};
use mdiew_core::reproduce::{run_reproduce, ReproduceOptions};
use mdiew_core::stats::{
    estimate_value, sample_counts, scheme_comparison, ComparisonSetup, Scheme,
};
use mdiew_core::structure::{
    depth_detection, structure_witness_check, ClassSampler, HarnessMeasurement,
};
use mdiew_core::witness::decompose;
use mdiew_core::{
    outcome_coefficients, AncillaBasis, DensityMatrix, Partition, Seed, SeparableClass, Witness,
    GENERATOR_NAME,
};

use scenario::{witness_from_spec, Scenario, SchemeSpec, WitnessSpec};

/// A p-value below this counts as a detection in simulation reports.
const DETECTION_LEVEL: f64 = 1e-3;

#[derive(Parser)]
#[command(
    name = "mdiew",
    version,
    about = "Measurement-device-independent entanglement witness toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every random draw in the command.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here (CSV traces go next to it).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the published coefficient tables and closed-form values.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_perturbation: f64,
    },
    /// Run the finite-shot pipeline described by a scenario file.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check witness nonnegativity on sampled separable and producible states
    /// under random measurements.
    VerifyMdi {
        #[command(flatten)]
        common: Common,
    },
    /// Entanglement-depth verdicts for the noisy W state.
    Depth {
        /// Mixing parameter of p|W⟩⟨W| + (1-p)I/8.
        #[arg(long, conflicts_with = "state")]
        p: Option<f64>,
        /// Three-qubit density matrix file instead of the noisy W state.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Witness threshold; both standard values are used when omitted.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the coefficient tensor of a witness for one outcome (or all).
    Decompose {
        /// `werner`, `w-state`, `ghz`, or a matrix file.
        #[arg(long)]
        witness: String,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        parties: usize,
        /// Outcome labels, e.g. `1,1,1`.
        #[arg(long)]
        outcome: Option<String>,
        /// Ancilla-basis file; the default basis otherwise.
        #[arg(long)]
        basis: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Reproduce {
            common,
            inject_perturbation,
        } => cmd_reproduce(&common, inject_perturbation),
        Command::Simulate { scenario, common } => cmd_simulate(&scenario, &common),
        Command::VerifyMdi { common } => cmd_verify_mdi(&common),
        Command::Depth {
            p,
            state,
            alpha,
            common,
        } => cmd_depth(p, state.as_deref(), alpha, &common),
        Command::Decompose {
            witness,
            alpha,
            parties,
            outcome,
            basis,
            common,
        } => cmd_decompose(
            &witness,
            alpha,
            parties,
            outcome.as_deref(),
            basis.as_deref(),
            &common,
        ),
    }
}

fn emit(report: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            println!("report written to {}", path.display());
        }
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    Ok(())
}

fn write_csv(out: Option<&Path>, csv: &str) -> Result<()> {
    if let Some(path) = out {
        let csv_path = path.with_extension("csv");
        std::fs::write(&csv_path, csv)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        println!("traces written to {}", csv_path.display());
    }
    Ok(())
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig(*x)).collect();
    format!("[{}]", parts.join(" "))
}

fn cmd_reproduce(common: &Common, perturbation: f64) -> Result<Outcome> {
    let report = run_reproduce(ReproduceOptions { perturbation })?;
    let mut text = String::new();
    for check in &report.checks {
        let _ = writeln!(
            text,
            "{} {}: computed {} expected {} (max |diff| {:.3e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            fmt_values(&check.computed),
            fmt_values(&check.expected),
            check.max_abs_diff
        );
        if let Some(note) = &check.note {
            let _ = writeln!(text, "     note: {note}");
        }
        if let Some(printed) = &check.printed {
            let _ = writeln!(text, "     printed: {}", fmt_values(printed));
        }
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(text, "{passed}/{} checks passed", report.checks.len());
    let _ = std::io::stdout().write_all(text.as_bytes());
    if let Some(out) = &common.out {
        let mut v = serde_json::to_value(&report)?;
        v["command"] = json!("reproduce");
        v["seed"] = json!(common.seed.unwrap_or(0));
        v["generator_name"] = json!(GENERATOR_NAME);
        emit(&v, Some(out))?;
    }
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}

fn cmd_simulate(path: &Path, common: &Common) -> Result<Outcome> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    if let Some(shots) = common.shots {
        scenario.shots = shots;
        scenario.shot_grid = None;
    }
    if let Some(trials) = common.trials {
        scenario.trials = trials;
    }
    let out = common.out.clone().or_else(|| scenario.output.clone());
    if scenario.shots == 0 || scenario.trials == 0 {
        bail!("shots and trials must both be positive");
    }

    let state = scenario.build_state()?;
    let parties = state
        .qubits()
        .context("state dimension is not a power of two")?;
    let witness = scenario.build_witness()?;
    if witness.party_count() != parties {
        bail!(
            "witness acts on {} parties but the state has {parties}",
            witness.party_count()
        );
    }
    let basis = scenario.build_basis(parties)?;
    let model = scenario.build_model(parties)?;
    let seed = Seed(scenario.seed);

    if scenario.scheme == SchemeSpec::Both {
        let grid = scenario
            .shot_grid
            .clone()
            .unwrap_or_else(|| vec![scenario.shots]);
        let label = scenario.state_label();
        let setup = ComparisonSetup {
            state_label: &label,
            state: &state,
            basis: &basis,
            witness: &witness,
            model: &model,
        };
        let report = scheme_comparison(&setup, &grid, scenario.trials, seed)?;
        let mut v = json!({
            "command": "simulate",
            "state": label,
            "witness": witness.name(),
            "measurement": scenario.measurement_label(),
            "scheme": "both",
            "seed": seed.0,
            "generator_name": GENERATOR_NAME,
            "exact_value": report.exact_value,
            "exact_single_value": report.exact_single_value,
            "rows": serde_json::to_value(&report.rows)?,
        });
        if grid.len() >= 2 {
            v["log_p_fit"] = json!({
                "all-outcome": report.log_p_fit(Scheme::AllOutcome)?,
                "single-outcome": report.log_p_fit(Scheme::SingleOutcome)?,
            });
        }
        emit(&v, out.as_deref())?;
        write_csv(out.as_deref(), &report.traces_csv())?;
        return Ok(Outcome::Pass);
    }

    let scheme = match scenario.scheme {
        SchemeSpec::SingleOutcome => Scheme::SingleOutcome,
        _ => Scheme::AllOutcome,
    };
    let coeffs = outcome_coefficients(&witness, &basis)?;
    let table = probability_table(&state, &basis, &model)?;
    let exact = match scheme {
        Scheme::AllOutcome => mdiew_value(&table, &coeffs)?,
        Scheme::SingleOutcome => single_outcome_value(&table, coeffs.by_index(0))?,
    };
    let estimates = (0..scenario.trials)
        .map(|t| {
            let counts = sample_counts(&table, scenario.shots, &mut seed.stream(t as u64))?;
            estimate_value(&counts, &coeffs, scheme)
        })
        .collect::<mdiew_core::Result<Vec<_>>>()?;
    let detections = estimates
        .iter()
        .filter(|e| e.p_value < DETECTION_LEVEL)
        .count();
    let mean = estimates.iter().map(|e| e.value).sum::<f64>() / estimates.len() as f64;
    let mut csv = String::from(
        "trial,value,sigma_hat,p_value,ln_p_value,p_gaussian,ln_p_gaussian,missing_inputs\n",
    );
    for (t, e) in estimates.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{t},{},{},{},{},{},{},{}",
            fmt_sig(e.value),
            fmt_sig(e.sigma_hat),
            fmt_sig(e.p_value),
            fmt_sig(e.ln_p_value),
            fmt_sig(e.p_gaussian),
            fmt_sig(e.ln_p_gaussian),
            e.missing_inputs
        );
    }
    let v = json!({
        "command": "simulate",
        "state": scenario.state_label(),
        "witness": witness.name(),
        "measurement": scenario.measurement_label(),
        "scheme": scheme.name(),
        "G": scenario.shots,
        "trials": scenario.trials,
        "seed": seed.0,
        "generator_name": GENERATOR_NAME,
        "exact_value": exact,
        "mean_value": mean,
        "detection_level": DETECTION_LEVEL,
        "detections": detections,
        "estimates": serde_json::to_value(&estimates)?,
    });
    emit(&v, out.as_deref())?;
    write_csv(out.as_deref(), &csv)?;
    Ok(Outcome::Pass)
}

/// Built-in witness/class pairs checked by `verify-mdi`.
pub fn mdi_batteries() -> Result<Vec<(Witness, ClassSampler, HarnessMeasurement)>> {
    let mut batteries = Vec::new();
    let werner = Witness::werner();
    batteries.push((
        werner.clone(),
        ClassSampler::for_witness(&werner),
        HarnessMeasurement::RandomPovm,
    ));
    for blocks in [vec![vec![0], vec![1, 2]], vec![vec![1], vec![0, 2]]] {
        let partition = Partition::new(3, blocks)?;
        let w = Witness::ghz(3, SeparableClass::Bipartition(partition))?;
        batteries.push((
            w.clone(),
            ClassSampler::for_witness(&w),
            HarnessMeasurement::RandomPovm,
        ));
    }
    let genuine = Witness::w_state(2.0 / 3.0)?;
    batteries.push((
        genuine.clone(),
        ClassSampler::for_witness(&genuine),
        HarnessMeasurement::Ideal,
    ));
    batteries.push((
        genuine.clone(),
        ClassSampler::for_witness(&genuine),
        HarnessMeasurement::RandomPovm,
    ));
    let full = Witness::w_state(4.0 / 9.0)?;
    batteries.push((
        full.clone(),
        ClassSampler::for_witness(&full),
        HarnessMeasurement::RandomPovm,
    ));
    Ok(batteries)
}

fn cmd_verify_mdi(common: &Common) -> Result<Outcome> {
    let trials = common.trials.unwrap_or(1000);
    let seed = Seed(common.seed.unwrap_or(0));
    let mut reports = Vec::new();
    for (i, (w, sampler, measurement)) in mdi_batteries()?.into_iter().enumerate() {
        // each battery draws from its own seed so adding one does not shift the others
        let battery_seed = Seed(seed.0.wrapping_add(i as u64));
        let r = structure_witness_check(&w, &sampler, &measurement, trials, battery_seed)?;
        eprintln!(
            "{} {} vs {} [{}]: min value {} over {} trials, {} violations",
            if r.passed() { "PASS" } else { "FAIL" },
            r.witness,
            r.class,
            r.measurement,
            fmt_sig(r.min_value),
            r.trials,
            r.violations
        );
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed());
    let v = json!({
        "command": "verify-mdi",
        "seed": seed.0,
        "generator_name": GENERATOR_NAME,
        "trials": trials,
        "min_value": reports.iter().map(|r| r.min_value).fold(f64::INFINITY, f64::min),
        "violations": reports.iter().map(|r| r.violations).sum::<usize>(),
        "passed": passed,
        "batteries": serde_json::to_value(&reports)?,
    });
    emit(&v, common.out.as_deref())?;
    Ok(if passed {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}

fn cmd_depth(
    p: Option<f64>,
    state: Option<&Path>,
    alpha: Option<f64>,
    common: &Common,
) -> Result<Outcome> {
    let (rho, label) = match (p, state) {
        (_, Some(path)) => (
            DensityMatrix::new(read_matrix(path)?)?,
            format!("file({})", path.display()),
        ),
        (Some(p), None) => (
            mdiew_core::states::w_state_noise(p)?,
            format!("w-noise(p={p})"),
        ),
        (None, None) => bail!("give either --p or --state"),
    };
    let alphas = match alpha {
        Some(a) => vec![a],
        None => vec![2.0 / 3.0, 4.0 / 9.0],
    };
    let verdicts = alphas
        .iter()
        .map(|&a| depth_detection(&rho, a))
        .collect::<mdiew_core::Result<Vec<_>>>()?;
    for v in &verdicts {
        eprintln!(
            "alpha={}: value {} -> {}",
            fmt_sig(v.alpha),
            fmt_sig(v.value),
            if v.detected {
                v.statement.as_str()
            } else {
                "not detected"
            }
        );
    }
    let v = json!({
        "command": "depth",
        "state": label,
        "seed": common.seed.unwrap_or(0),
        "generator_name": GENERATOR_NAME,
        "verdicts": serde_json::to_value(&verdicts)?,
    });
    emit(&v, common.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn named_witness(name: &str, alpha: f64, parties: usize) -> Result<Witness> {
    let spec = match name {
        "werner" => WitnessSpec::Werner,
        "w-state" | "w" => WitnessSpec::WState { alpha },
        "ghz" => WitnessSpec::Ghz { parties },
        path => {
            if !Path::new(path).exists() {
                bail!("{path:?} is neither a built-in witness (werner, w-state, ghz) nor an existing file");
            }
            WitnessSpec::File { path: path.into() }
        }
    };
    witness_from_spec(&spec)
}

fn cmd_decompose(
    name: &str,
    alpha: f64,
    parties: usize,
    outcome: Option<&str>,
    basis: Option<&Path>,
    common: &Common,
) -> Result<Outcome> {
    let witness = named_witness(name, alpha, parties)?;
    let n = witness.party_count();
    let basis = match basis {
        Some(path) => read_basis(path, n)?,
        None => AncillaBasis::default_basis(n),
    };
    let mut v = json!({
        "command": "decompose",
        "witness": witness.name(),
        "parties": n,
        "seed": common.seed.unwrap_or(0),
        "generator_name": GENERATOR_NAME,
    });
    match outcome {
        Some(o) => {
            let o = parse_outcome(o)?;
            if o.len() != n {
                bail!(
                    "outcome has {} labels but the witness acts on {n} parties",
                    o.len()
                );
            }
            v["outcome"] = json!(outcome_key(&o));
            v["beta"] = decompose(&witness, &basis, &o)?.to_json();
        }
        None => v["beta"] = outcome_coefficients(&witness, &basis)?.to_json(),
    }
    emit(&v, common.out.as_deref())?;
    Ok(Outcome::Pass)
}
