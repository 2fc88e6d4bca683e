//! `bbin`: binarize expression snapshots against a regulatory graph,
//! simulate Boolean networks as Hill ODE systems, validate the
//! binarizer against threshold ground truth, and run parameter sweeps.
//!
//! Exit codes: 0 success, 2 parse/usage error, 3 binarization hit the
//! sweep budget, 4 no steady state under `--require-steady-state`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use bbin_core::*;

mod spec;
use spec::SimulationSpec;

const EXIT_PARSE: u8 = 2;
const EXIT_TRUNCATED: u8 = 3;
const EXIT_NO_STEADY: u8 = 4;

#[derive(Parser)]
#[command(name = "bbin", version, about = "Tri-state expression binarization and Boolean network simulation")]
struct Cli {
    /// Seed for randomized subcommands (overrides config files).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Binarize expression rows against a signed regulatory graph.
    Binarize {
        /// Edge-list graph file (`SOURCE +|- TARGET`).
        graph: PathBuf,
        /// Expression CSV: header of gene names, one row per experiment.
        expression: PathBuf,
        #[command(flatten)]
        bin: BinFlags,
    },
    /// Integrate a Boolean network's Hill ODE system and extract snapshots.
    Simulate {
        /// Logic file (`TARGET = EXPR`).
        network: PathBuf,
        /// Simulation spec JSON (params, x0, integration, snapshots).
        spec: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Simulate, threshold for ground truth, binarize, and report dissimilarity.
    Validate {
        network: PathBuf,
        spec: PathBuf,
        #[command(flatten)]
        bin: BinFlags,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Randomized parameter sweep over kinetic parameters.
    Sweep {
        network: PathBuf,
        /// Sweep config JSON.
        config: PathBuf,
    },
}

#[derive(Args)]
struct BinFlags {
    /// Initialization margin (capped at 0.05).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Harmonization tolerance.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Back-propagate when no defined regulator is consistent, instead
    /// of requiring every regulator NA.
    #[arg(long)]
    relaxed_backward: bool,
    #[arg(long, value_enum)]
    normalization: Option<NormFlag>,
    /// Biomarker prior, `GENE=0` or `GENE=1`; repeatable.
    #[arg(long = "biomarker", value_name = "GENE=0|1")]
    biomarkers: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormFlag {
    Global,
    PerGene,
    PerSample,
}

#[derive(Args)]
struct SimFlags {
    /// Take the last K snapshots instead of the spec's policy.
    #[arg(long, requires = "spacing")]
    snapshots: Option<usize>,
    /// Spacing between snapshots for --snapshots.
    #[arg(long, requires = "snapshots")]
    spacing: Option<f64>,
    /// Fail (exit 4) when no steady state is detected.
    #[arg(long)]
    require_steady_state: bool,
    /// Override the spec's integration step size.
    #[arg(long)]
    dt: Option<f64>,
}

impl BinFlags {
    fn config(&self) -> Result<(BinarizerConfig, Biomarkers), CliError> {
        let mut cfg = BinarizerConfig::default();
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        cfg.max_sweeps = self.max_sweeps;
        cfg.relaxed_backward = self.relaxed_backward;
        if let Some(n) = self.normalization {
            cfg.normalization = match n {
                NormFlag::Global => NormalizationMode::Global,
                NormFlag::PerGene => NormalizationMode::PerGene,
                NormFlag::PerSample => NormalizationMode::PerSample,
            };
        }
        cfg.validate().map_err(CliError::parse)?;
        let mut markers = Biomarkers::new();
        for spec in &self.biomarkers {
            let (gene, value) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("bad --biomarker `{spec}`, want GENE=0|1")))?;
            let gene = GeneId::new(gene).map_err(CliError::parse)?;
            let active = match value {
                "1" => true,
                "0" => false,
                other => {
                    return Err(CliError::Parse(format!(
                        "bad --biomarker value `{other}`, want 0 or 1"
                    )))
                }
            };
            markers.set(gene, active);
        }
        Ok((cfg, markers))
    }
}

impl SimFlags {
    fn policy(&self, spec: &SimulationSpec) -> SnapshotPolicy {
        match (self.snapshots, self.spacing) {
            (Some(k), Some(spacing)) => SnapshotPolicy::LateK { k, spacing },
            _ => spec.snapshots.clone(),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Truncated,
    NoSteadyState,
    Io(String),
}

impl CliError {
    fn parse(e: impl std::fmt::Display) -> Self {
        CliError::Parse(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Truncated => EXIT_TRUNCATED,
            CliError::NoSteadyState => EXIT_NO_STEADY,
            CliError::Io(_) => EXIT_PARSE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Io(m) => write!(f, "{m}"),
            CliError::Truncated => write!(f, "binarization hit the sweep budget before a fixed point"),
            CliError::NoSteadyState => write!(f, "no steady state detected within the time horizon"),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Everything needed to reproduce a run: inputs (with content hashes),
/// effective configuration, and the files written.
#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    inputs: Vec<ManifestInput>,
    config: serde_json::Value,
    seed: Option<u64>,
    format: Format,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct ManifestInput {
    path: String,
    sha256: String,
}

impl RunManifest {
    fn new(subcommand: &'static str, cli_seed: Option<u64>, format: Format) -> Self {
        RunManifest {
            tool: "bbin",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs: Vec::new(),
            config: serde_json::Value::Null,
            seed: cli_seed,
            format,
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path, text: &str) {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        self.inputs.push(ManifestInput {
            path: path.display().to_string(),
            sha256: format!("{:x}", h.finalize()),
        });
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(format!("{}-manifest.json", self.subcommand));
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

struct Out {
    dir: PathBuf,
    format: Format,
}

impl Out {
    fn write(&self, name: &str, body: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        manifest.outputs.push(name.to_string());
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = std::fs::create_dir_all(&cli.output_dir) {
        eprintln!("bbin: cannot create {}: {e}", cli.output_dir.display());
        return ExitCode::from(EXIT_PARSE);
    }
    let out = Out {
        dir: cli.output_dir.clone(),
        format: cli.format,
    };
    let result = match &cli.command {
        Command::Binarize {
            graph,
            expression,
            bin,
        } => cmd_binarize(graph, expression, bin, cli.seed, &out),
        Command::Simulate { network, spec, sim } => {
            cmd_simulate(network, spec, sim, cli.seed, &out)
        }
        Command::Validate {
            network,
            spec,
            bin,
            sim,
        } => cmd_validate(network, spec, bin, sim, cli.seed, &out),
        Command::Sweep { network, config } => cmd_sweep(network, config, cli.seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bbin: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn profiles_csv(genes: &[GeneId], profiles: &[BinaryProfile]) -> String {
    let mut s = String::new();
    let names: Vec<String> = genes.iter().map(|g| g.to_string()).collect();
    let _ = writeln!(s, "{}", names.join(","));
    for p in profiles {
        let row: Vec<String> = genes.iter().map(|g| p.state(g).to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn cmd_binarize(
    graph_path: &Path,
    expr_path: &Path,
    bin: &BinFlags,
    seed: Option<u64>,
    out: &Out,
) -> Result<(), CliError> {
    let (cfg, markers) = bin.config()?;
    let graph_text = read(graph_path)?;
    let expr_text = read(expr_path)?;
    let graph = RegulatoryGraph::parse(&graph_text).map_err(CliError::parse)?;
    let rows = parse_expression_csv(&expr_text).map_err(CliError::parse)?;
    let profiles = binarize_batch(&graph, &rows, &cfg, &markers).map_err(CliError::parse)?;

    let mut manifest = RunManifest::new("binarize", seed, out.format);
    manifest.input(graph_path, &graph_text);
    manifest.input(expr_path, &expr_text);
    manifest.config = serde_json::to_value(&cfg).expect("config serializes");

    let genes: Vec<GeneId> = graph.genes().cloned().collect();
    match out.format {
        Format::Csv => out.write("profiles.csv", &profiles_csv(&genes, &profiles), &mut manifest)?,
        Format::Json => out.write(
            "profiles.json",
            &serde_json::to_string_pretty(&profiles).expect("profiles serialize"),
            &mut manifest,
        )?,
    }
    manifest.write(&out.dir)?;
    if profiles.iter().any(|p| p.truncated) {
        return Err(CliError::Truncated);
    }
    Ok(())
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::new();
    let mut header = vec!["t".to_string()];
    header.extend(traj.genes().iter().map(|g| g.to_string()));
    let _ = writeln!(s, "{}", header.join(","));
    for i in 0..traj.len() {
        let mut row = vec![format!("{}", traj.times()[i])];
        row.extend(traj.state(i).iter().map(|v| format!("{v}")));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn snapshots_csv(genes: &[GeneId], snaps: &[Snapshot]) -> String {
    let mut s = String::new();
    let mut header = vec!["t".to_string()];
    header.extend(genes.iter().map(|g| g.to_string()));
    let _ = writeln!(s, "{}", header.join(","));
    for snap in snaps {
        let mut row = vec![format!("{}", snap.time)];
        row.extend(genes.iter().map(|g| format!("{}", snap.values[g])));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn cmd_simulate(
    network_path: &Path,
    spec_path: &Path,
    sim: &SimFlags,
    seed: Option<u64>,
    out: &Out,
) -> Result<(), CliError> {
    let net_text = read(network_path)?;
    let spec_text = read(spec_path)?;
    let network = BooleanNetwork::parse(&net_text).map_err(CliError::parse)?;
    let mut spec: SimulationSpec = serde_json::from_str(&spec_text).map_err(CliError::parse)?;
    if let Some(dt) = sim.dt {
        spec.integration.dt = dt;
    }
    spec.integration.validate().map_err(CliError::parse)?;

    let system = HillOdeSystem::build(&network, &spec.params).map_err(CliError::parse)?;
    for w in &system.warnings {
        eprintln!("bbin: warning: {w}");
    }
    let traj = integrate_rk4(&system, &spec.x0, &spec.integration).map_err(CliError::parse)?;
    let steady = detect_steady_state(&traj, spec.integration.steady_tol, spec.integration.steady_window);
    if sim.require_steady_state && steady.is_none() {
        return Err(CliError::NoSteadyState);
    }
    let snaps = extract_snapshots(&traj, &sim.policy(&spec)).map_err(CliError::parse)?;

    let mut manifest = RunManifest::new("simulate", seed, out.format);
    manifest.input(network_path, &net_text);
    manifest.input(spec_path, &spec_text);
    manifest.config = serde_json::to_value(&spec).expect("spec serializes");

    match out.format {
        Format::Csv => {
            out.write("trajectory.csv", &trajectory_csv(&traj), &mut manifest)?;
            out.write(
                "snapshots.csv",
                &snapshots_csv(traj.genes(), &snaps),
                &mut manifest,
            )?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SimOutput<'a> {
                steady_time: Option<f64>,
                snapshots: &'a [Snapshot],
            }
            out.write(
                "snapshots.json",
                &serde_json::to_string_pretty(&SimOutput {
                    steady_time: steady,
                    snapshots: &snaps,
                })
                .expect("snapshots serialize"),
                &mut manifest,
            )?;
        }
    }
    manifest.write(&out.dir)
}

fn cmd_validate(
    network_path: &Path,
    spec_path: &Path,
    bin: &BinFlags,
    sim: &SimFlags,
    seed: Option<u64>,
    out: &Out,
) -> Result<(), CliError> {
    let (cfg, markers) = bin.config()?;
    let net_text = read(network_path)?;
    let spec_text = read(spec_path)?;
    let network = BooleanNetwork::parse(&net_text).map_err(CliError::parse)?;
    let mut spec: SimulationSpec = serde_json::from_str(&spec_text).map_err(CliError::parse)?;
    if let Some(dt) = sim.dt {
        spec.integration.dt = dt;
    }
    spec.integration.validate().map_err(CliError::parse)?;

    let report = run_validation(
        &network,
        &spec.params,
        &spec.x0,
        &spec.integration,
        &sim.policy(&spec),
        &cfg,
        &markers,
    )
    .map_err(CliError::parse)?;
    if sim.require_steady_state && report.steady_time.is_none() {
        return Err(CliError::NoSteadyState);
    }

    let mut manifest = RunManifest::new("validate", seed, out.format);
    manifest.input(network_path, &net_text);
    manifest.input(spec_path, &spec_text);
    manifest.config = serde_json::json!({
        "binarizer": serde_json::to_value(&cfg).expect("config serializes"),
        "simulation": serde_json::to_value(&spec).expect("spec serializes"),
    });

    match out.format {
        Format::Csv => {
            let mut s = String::from("t,dissimilarity,mismatches,total\n");
            for snap in &report.snapshots {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    snap.time,
                    snap.dissimilarity,
                    snap.dissimilarity.mismatches,
                    snap.dissimilarity.total
                );
            }
            out.write("report.csv", &s, &mut manifest)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct ValidateOutput<'a> {
                /// e.g. "{0/5, 0/5, 0/5}"
                d: String,
                report: &'a ValidationReport,
            }
            let d = format!(
                "{{{}}}",
                report
                    .snapshots
                    .iter()
                    .map(|s| s.dissimilarity.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            out.write(
                "report.json",
                &serde_json::to_string_pretty(&ValidateOutput { d, report: &report })
                    .expect("report serializes"),
                &mut manifest,
            )?;
        }
    }
    manifest.write(&out.dir)
}

fn cmd_sweep(
    network_path: &Path,
    config_path: &Path,
    seed: Option<u64>,
    out: &Out,
) -> Result<(), CliError> {
    let net_text = read(network_path)?;
    let cfg_text = read(config_path)?;
    let network = BooleanNetwork::parse(&net_text).map_err(CliError::parse)?;
    let mut cfg: SweepConfig = serde_json::from_str(&cfg_text).map_err(CliError::parse)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = parameter_sweep(&network, &cfg).map_err(CliError::parse)?;

    let mut manifest = RunManifest::new("sweep", seed, out.format);
    manifest.input(network_path, &net_text);
    manifest.input(config_path, &cfg_text);
    manifest.config = serde_json::to_value(&cfg).expect("config serializes");

    match out.format {
        Format::Csv => {
            let mut s = String::from("run,outcome,steady_time,mismatches,total\n");
            for r in &report.runs {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.run,
                    match r.outcome {
                        RunOutcome::Reached => "reached",
                        RunOutcome::Skipped => "skipped",
                        RunOutcome::Failed => "failed",
                    },
                    r.steady_time.map(|t| t.to_string()).unwrap_or_default(),
                    r.dissimilarity.map(|d| d.mismatches.to_string()).unwrap_or_default(),
                    r.dissimilarity.map(|d| d.total.to_string()).unwrap_or_default(),
                );
            }
            out.write("sweep.csv", &s, &mut manifest)?;
        }
        Format::Json => out.write(
            "sweep.json",
            &serde_json::to_string_pretty(&report).expect("report serializes"),
            &mut manifest,
        )?,
    }
    manifest.write(&out.dir)
}
