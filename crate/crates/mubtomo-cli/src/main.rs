//! Command-line front end: build and verify MUB tables, score their CNOT
//! complexity, synthesize and verify measurement circuits, run tomography
//! experiments, and emit comparison reports.
//!
//! Every command is deterministic given its arguments (randomness is always
//! seeded), and the process exits nonzero iff an internal verification
//! failed. Floating-point values are written with 12 significant digits in
//! JSON/CSV outputs and 6 in text tables.

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mubtomo::circuit::{synthesize_circuit, verify_basis_circuit, Circuit};
use mubtomo::mub::{verify_mub, MubSet};
use mubtomo::structure::{complexity, complexity_nats, row_cnot_count};
use mubtomo::tables::{
    bipartite_3q_circuits, match_circuits_to_rows, optimal_4q_circuits, TableSelector,
};
use mubtomo::tomography::{
    measurement_budget, predicted_antidiagonal_error, run_experiment, ExperimentSpec, NoiseParams,
    Scheme, ShotsSpec, StateSpec, TomographyResult,
};

#[derive(Parser)]
#[command(
    name = "mubtomo",
    about = "Mutually-unbiased-basis measurement schemes: tables, CNOT costs, circuits, tomography",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a MUB table, verify it, and write it as JSON.
    Build(BuildArgs),
    /// Score a table: structure label, per-row CNOT counts, total C, C in nats.
    Complexity(ComplexityArgs),
    /// Synthesize and verify a measurement circuit for every table row.
    Circuits(CircuitsArgs),
    /// Run one tomography experiment from a spec file.
    Tomography(TomographyArgs),
    /// Compare MUB and standard tomography over a seed sweep.
    Compare(CompareArgs),
    /// Exhaustively enumerate MUB partitions (2 or 3 qubits).
    Search(SearchArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Number of qubits (2..=5).
    #[arg(long)]
    n: usize,
    /// Table selector: standard | optimal.
    #[arg(long)]
    table: String,
    /// Output path for the table JSON (defaults to mub_<table>_<n>q.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format of the verification report: text | json.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Table: standard | optimal | path to a table JSON file.
    #[arg(long)]
    table: String,
    /// Number of qubits (required for the named selectors).
    #[arg(long)]
    n: Option<usize>,
    /// CNOT process fidelity for the nats figure.
    #[arg(long, default_value_t = 0.92)]
    phi_cnot: f64,
    /// Output path for the report JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// text | json.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct CircuitsArgs {
    /// Table: standard | optimal | path to a table JSON file.
    #[arg(long)]
    table: String,
    /// Number of qubits (required for the named selectors).
    #[arg(long)]
    n: Option<usize>,
    /// Directory for the per-row circuit files.
    #[arg(long, default_value = "circuits_out")]
    out: PathBuf,
    /// text | json.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct TomographyArgs {
    /// Experiment spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Override: shots per basis (or "exact").
    #[arg(long)]
    shots: Option<String>,
    /// Override: single-qubit gate fidelity.
    #[arg(long)]
    phi_sg: Option<f64>,
    /// Override: CNOT fidelity.
    #[arg(long)]
    phi_cnot: Option<f64>,
    /// Override: per-qubit readout flip probability.
    #[arg(long)]
    eps: Option<f64>,
    /// Override: master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the result JSON (defaults to tomography_result.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// text | json (format of the stdout summary).
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct CompareArgs {
    /// Comparison spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Override: shots per basis.
    #[arg(long)]
    shots: Option<u64>,
    /// Override: single-qubit gate fidelity.
    #[arg(long)]
    phi_sg: Option<f64>,
    /// Override: CNOT fidelity.
    #[arg(long)]
    phi_cnot: Option<f64>,
    /// Override: per-qubit readout flip probability.
    #[arg(long)]
    eps: Option<f64>,
    /// Override: base seed of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the CSV (defaults to compare.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// text | json (format of the stdout summary).
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct SearchArgs {
    /// Number of qubits (2 or 3).
    #[arg(long)]
    n: usize,
    /// Output path for the summary JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// text | json.
    #[arg(long, default_value = "text")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Complexity(args) => cmd_complexity(args),
        Command::Circuits(args) => cmd_circuits(args),
        Command::Tomography(args) => cmd_tomography(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Search(args) => cmd_search(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

type CmdResult = Result<ExitCode, String>;

fn fail<T>(e: impl std::fmt::Display) -> Result<T, String> {
    Err(e.to_string())
}

/// Rounds to `digits` significant digits.
fn round_sig(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

fn sig6(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{:.5e}", v)
    } else {
        format!("{}", round_sig(v, 6))
    }
}

/// Recursively rounds every float in a JSON value to 12 significant digits.
fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.as_i64().is_none() && n.as_u64().is_none() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(f, 12)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_rounded_json<T: serde::Serialize>(value: &T) -> Result<String, String> {
    let mut v = serde_json::to_value(value).map_err(|e| e.to_string())?;
    round_json(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| e.to_string())
}

fn write_or_print(path: Option<&Path>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
                }
            }
            std::fs::write(p, content).map_err(|e| e.to_string())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

/// Resolves --table into a MubSet: a named selector (with --n) or a file
/// path.
fn resolve_table(table: &str, n: Option<usize>) -> Result<MubSet, String> {
    match table {
        "standard" | "optimal" => {
            let n = n.ok_or("--n is required with a named table selector")?;
            let selector = if table == "standard" {
                TableSelector::Standard
            } else {
                TableSelector::Optimal
            };
            selector.build(n).or_else(fail)
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read table file {path}: {e}"))?;
            let set = MubSet::from_json(&text).or_else(fail)?;
            if let Some(n) = n {
                if n != set.n_qubits() {
                    return Err(format!(
                        "--n {n} does not match the {}-qubit table file",
                        set.n_qubits()
                    ));
                }
            }
            Ok(set)
        }
    }
}

fn cmd_build(args: BuildArgs) -> CmdResult {
    let set = resolve_table(&args.table, Some(args.n))?;
    let report = verify_mub(&set);
    let stem = match args.table.as_str() {
        "standard" | "optimal" => args.table.clone(),
        _ => "custom".to_string(),
    };
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("mub_{stem}_{}q.json", args.n)));
    write_or_print(Some(&out), &set.to_json().or_else(fail)?)?;

    let label = mubtomo::structure::structure_label(&set)
        .map(|l| l.to_string())
        .unwrap_or_else(|_| "unavailable".into());
    if args.format == "json" {
        let mut summary = serde_json::to_value(&report).map_err(|e| e.to_string())?;
        summary["structure"] = Value::String(label.clone());
        summary["table_file"] = Value::String(out.display().to_string());
        round_json(&mut summary);
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?
        );
    } else {
        println!("table: {} ({} rows) -> {}", args.table, set.rows().len(), out.display());
        println!("structure: {label}");
        println!(
            "max overlap deviation: {}",
            report
                .max_cross_overlap_deviation
                .map(sig6)
                .unwrap_or_else(|| "n/a".into())
        );
        println!(
            "disjoint: {}, complete cover: {}",
            report.rows_disjoint, report.covers_all
        );
        println!("verification: {}", if report.passed() { "PASS" } else { "FAIL" });
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_complexity(args: ComplexityArgs) -> CmdResult {
    let set = resolve_table(&args.table, args.n)?;
    let report = complexity(&set).or_else(fail)?;
    let nats = complexity_nats(&report, args.phi_cnot).or_else(fail)?;

    // report JSON: { "structure": [..], "per_row_cnots": [..], "C": int, "C_nats": real }
    let json = serde_json::json!({
        "structure": report.structure.counts(),
        "per_row_cnots": report.per_row_cnots,
        "C": report.total,
        "C_nats": round_sig(nats, 12),
    });
    let rendered = serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?;
    if args.format == "json" || args.out.is_some() {
        write_or_print(args.out.as_deref(), &rendered)?;
    }
    if args.format != "json" {
        println!("structure: {}", report.structure);
        println!(
            "per-row CNOTs: {}",
            report
                .per_row_cnots
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        );
        println!("C = {}", report.total);
        println!("C_nats(phi={}) = {}", args.phi_cnot, sig6(nats));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_circuits(args: CircuitsArgs) -> CmdResult {
    let set = resolve_table(&args.table, args.n)?;
    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    let mut all_ok = true;
    let mut total_cnots = 0usize;
    let mut lines = Vec::new();
    let mut synthesized: Vec<Circuit> = Vec::new();
    for (idx, row) in set.rows().iter().enumerate() {
        let circuit = synthesize_circuit(row).or_else(fail)?;
        let check = verify_basis_circuit(&circuit, row).or_else(fail)?;
        let expected_cnots = row_cnot_count(row).or_else(fail)?;
        let ok = check.diagonalizes && circuit.cnot_count() == expected_cnots;
        all_ok &= ok;
        total_cnots += circuit.cnot_count();
        let path = args.out.join(format!("row_{:02}.json", idx + 1));
        write_or_print(Some(&path), &circuit.to_json().or_else(fail)?)?;
        lines.push(format!(
            "row {:2}: {} CNOTs, off-diagonal {} [{}]",
            idx + 1,
            circuit.cnot_count(),
            sig6(check.max_off_diagonal),
            if ok { "ok" } else { "FAIL" }
        ));
        synthesized.push(circuit);
    }

    // cross-check against the shipped circuit sets where the table is one of
    // the two that have them
    let golden = match set.n_qubits() {
        3 if mubtomo::tables::optimal_table(3).map(|t| t == set).unwrap_or(false) => {
            Some(bipartite_3q_circuits().or_else(fail)?)
        }
        4 if mubtomo::tables::optimal_table(4).map(|t| t == set).unwrap_or(false) => {
            Some(optimal_4q_circuits().or_else(fail)?)
        }
        _ => None,
    };
    if let Some(golden) = golden {
        let assignment = match_circuits_to_rows(&golden, &set).or_else(fail)?;
        for (ci, &row_idx) in assignment.iter().enumerate() {
            if golden[ci].cnot_count() != synthesized[row_idx].cnot_count() {
                all_ok = false;
                lines.push(format!(
                    "golden circuit {} (row {}): CNOT count {} != synthesized {}",
                    ci + 1,
                    row_idx + 1,
                    golden[ci].cnot_count(),
                    synthesized[row_idx].cnot_count()
                ));
            }
        }
        lines.push(format!(
            "golden cross-check: {} circuits matched to rows",
            assignment.len()
        ));
    }

    if args.format == "json" {
        let json = serde_json::json!({
            "rows": set.rows().len(),
            "total_cnots": total_cnots,
            "all_verified": all_ok,
            "out_dir": args.out.display().to_string(),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?
        );
    } else {
        for line in &lines {
            println!("{line}");
        }
        println!("total CNOTs: {total_cnots}");
        println!("verification: {}", if all_ok { "PASS" } else { "FAIL" });
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn apply_overrides(
    spec: &mut ExperimentSpec,
    shots: &Option<String>,
    phi_sg: Option<f64>,
    phi_cnot: Option<f64>,
    eps: Option<f64>,
    seed: Option<u64>,
) -> Result<(), String> {
    if let Some(s) = shots {
        spec.shots = if s == "exact" {
            ShotsSpec::Exact
        } else {
            let n: u64 = s
                .parse()
                .map_err(|_| format!("--shots must be a count or \"exact\", got {s:?}"))?;
            ShotsSpec::PerBasis(n)
        };
    }
    if let Some(v) = phi_sg {
        spec.noise.phi_sg = v;
    }
    if let Some(v) = phi_cnot {
        spec.noise.phi_cnot = v;
    }
    if let Some(v) = eps {
        spec.noise.readout_eps = v;
    }
    if let Some(v) = seed {
        spec.seed = v;
    }
    Ok(())
}

fn budget_line(n: usize) -> Result<String, String> {
    let (standard, mub) = measurement_budget(n).or_else(fail)?;
    Ok(format!("standard: {standard} bases, MUB: {mub} bases"))
}

fn cmd_tomography(args: TomographyArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| format!("cannot read spec {}: {e}", args.spec.display()))?;
    let mut spec = ExperimentSpec::from_json(&text).or_else(fail)?;
    apply_overrides(
        &mut spec,
        &args.shots,
        args.phi_sg,
        args.phi_cnot,
        args.eps,
        args.seed,
    )?;
    let result = run_experiment(&spec).or_else(fail)?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from("tomography_result.json"));
    write_or_print(Some(&out), &to_rounded_json(&result)?)?;

    if args.format == "json" {
        println!("{}", to_rounded_json(&summary_json(&result))?);
    } else {
        println!("scheme: {} ({} bases)", result.scheme, result.n_bases);
        match result.shots_per_basis {
            Some(s) => println!("shots per basis: {s}"),
            None => println!("shots per basis: exact probabilities"),
        }
        println!("fidelity {:.6}", result.metrics.fidelity);
        println!("trace distance {}", sig6(result.metrics.trace_distance));
        println!(
            "max element error {}",
            sig6(result.metrics.max_element_error)
        );
        println!(
            "anti-diagonal RMS {}",
            sig6(result.metrics.antidiagonal_rms)
        );
        if let Some(p) = result.predicted_antidiagonal_error {
            println!("predicted anti-diagonal error {}", sig6(p));
        }
        println!("budget: {}", budget_line(result.n_qubits)?);
        println!("result written to {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn summary_json(result: &TomographyResult) -> Value {
    serde_json::json!({
        "scheme": result.scheme.to_string(),
        "n_bases": result.n_bases,
        "shots_per_basis": result.shots_per_basis,
        "fidelity": result.metrics.fidelity,
        "trace_distance": result.metrics.trace_distance,
        "max_element_error": result.metrics.max_element_error,
        "antidiagonal_rms": result.metrics.antidiagonal_rms,
        "predicted_antidiagonal_error": result.predicted_antidiagonal_error,
        "budget_standard": measurement_budget(result.n_qubits).map(|b| b.0).ok(),
        "budget_mub": measurement_budget(result.n_qubits).map(|b| b.1).ok(),
    })
}

/// Spec file for the compare command.
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareSpec {
    n_qubits: usize,
    /// MUB table selector: "standard" or "optimal".
    #[serde(default)]
    table: Option<String>,
    state: StateSpec,
    /// Shots per basis for both schemes (mutually exclusive with
    /// shots_total; omit both for exact probabilities).
    #[serde(default)]
    shots_per_basis: Option<u64>,
    /// Total shot budget split evenly over each scheme's bases.
    #[serde(default)]
    shots_total: Option<u64>,
    #[serde(default = "noiseless")]
    noise: NoiseParams,
    n_seeds: u64,
    #[serde(default)]
    base_seed: u64,
}

fn noiseless() -> NoiseParams {
    NoiseParams {
        phi_sg: 1.0,
        phi_cnot: 1.0,
        readout_eps: 0.0,
    }
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| format!("cannot read spec {}: {e}", args.spec.display()))?;
    let mut spec: CompareSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if let Some(v) = args.shots {
        spec.shots_per_basis = Some(v);
        spec.shots_total = None;
    }
    if let Some(v) = args.phi_sg {
        spec.noise.phi_sg = v;
    }
    if let Some(v) = args.phi_cnot {
        spec.noise.phi_cnot = v;
    }
    if let Some(v) = args.eps {
        spec.noise.readout_eps = v;
    }
    if let Some(v) = args.seed {
        spec.base_seed = v;
    }
    if spec.shots_per_basis.is_some() && spec.shots_total.is_some() {
        return Err("give shots_per_basis or shots_total, not both".into());
    }

    let mut csv = String::from(
        "scheme,seed,fidelity,trace_distance,max_element_error,antidiagonal_rms,n_bases,shots_per_basis\n",
    );
    let mut summaries = Vec::new();
    for scheme in [Scheme::Mub, Scheme::Standard] {
        let (std_budget, mub_budget) = measurement_budget(spec.n_qubits).or_else(fail)?;
        let n_bases = match scheme {
            Scheme::Mub => mub_budget,
            Scheme::Standard => std_budget,
        };
        let shots = match (spec.shots_per_basis, spec.shots_total) {
            (Some(s), _) => ShotsSpec::PerBasis(s),
            (None, Some(total)) => ShotsSpec::PerBasis((total / n_bases).max(1)),
            (None, None) => ShotsSpec::Exact,
        };
        let mut fidelities = Vec::new();
        let mut antidiags = Vec::new();
        for k in 0..spec.n_seeds {
            let seed = spec.base_seed.wrapping_add(k);
            let exp = ExperimentSpec {
                n_qubits: spec.n_qubits,
                scheme,
                table: spec.table.clone(),
                state: spec.state.clone(),
                shots,
                noise: spec.noise,
                seed,
            };
            let result = run_experiment(&exp).or_else(fail)?;
            let m = result.metrics;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                scheme,
                seed,
                round_sig(m.fidelity, 12),
                round_sig(m.trace_distance, 12),
                round_sig(m.max_element_error, 12),
                round_sig(m.antidiagonal_rms, 12),
                result.n_bases,
                result
                    .shots_per_basis
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "exact".into()),
            );
            fidelities.push(m.fidelity);
            antidiags.push(m.antidiagonal_rms);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let std = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        summaries.push((
            scheme,
            mean(&fidelities),
            std(&fidelities),
            mean(&antidiags),
            std(&antidiags),
        ));
    }

    let out = args.out.unwrap_or_else(|| PathBuf::from("compare.csv"));
    write_or_print(Some(&out), &csv)?;

    if args.format == "json" {
        let json = serde_json::json!({
            "csv": out.display().to_string(),
            "schemes": summaries.iter().map(|(s, fm, fs, am, asd)| serde_json::json!({
                "scheme": s.to_string(),
                "fidelity_mean": fm,
                "fidelity_std": fs,
                "antidiagonal_rms_mean": am,
                "antidiagonal_rms_std": asd,
            })).collect::<Vec<_>>(),
            "predicted_antidiagonal_error": predicted_antidiagonal_error(
                spec.n_qubits, spec.noise.readout_eps).ok(),
        });
        println!("{}", to_rounded_json(&json)?);
    } else {
        for (scheme, fm, fs, am, asd) in &summaries {
            println!(
                "{scheme}: fidelity {} +/- {}, anti-diagonal RMS {} +/- {}",
                sig6(*fm),
                sig6(*fs),
                sig6(*am),
                sig6(*asd)
            );
        }
        if spec.noise.readout_eps > 0.0 {
            println!(
                "predicted anti-diagonal error: {}",
                sig6(
                    predicted_antidiagonal_error(spec.n_qubits, spec.noise.readout_eps)
                        .or_else(fail)?
                )
            );
        }
        println!("measurement budgets (standard vs MUB):");
        for n in 2..=8 {
            let (s, m) = measurement_budget(n).or_else(fail)?;
            println!("  n={n}: {s} vs {m} (ratio {})", sig6(s as f64 / m as f64));
        }
        println!("CSV written to {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_search(args: SearchArgs) -> CmdResult {
    let sets = mubtomo::mub::search_mub_partitions(args.n).or_else(fail)?;
    let mut label_counts: std::collections::BTreeMap<String, usize> = Default::default();
    for set in &sets {
        let label = mubtomo::structure::structure_label(set)
            .or_else(fail)?
            .to_string();
        *label_counts.entry(label).or_default() += 1;
    }
    let json = serde_json::json!({
        "n_qubits": args.n,
        "n_partitions": sets.len(),
        "label_counts": label_counts,
    });
    let rendered = serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?;
    if args.out.is_some() || args.format == "json" {
        write_or_print(args.out.as_deref(), &rendered)?;
    }
    if args.format != "json" {
        println!("partitions: {}", sets.len());
        for (label, count) in &label_counts {
            println!("  {label}: {count}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
