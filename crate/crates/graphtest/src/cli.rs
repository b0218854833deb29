//! Command-line front end: run the two-sample test on graph files, rerun
//! the power experiments, and emit figures and tables as CSV plus SVG.
//!
//! Every command resolves its full configuration (CLI flags override
//! key=value config-file entries, which override built-in defaults), runs,
//! and writes a `run_manifest.json` recording the resolved configuration,
//! master seed, tool version, runtime, and every output path. `replay`
//! re-executes a manifest; because all randomness derives from the master
//! seed, the numeric outputs come back byte-identical.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datasets;
use crate::embedding::ase;
use crate::error::{Error, Result};
use crate::graph::{load_graph, AdjacencyMatrix, GraphFormat, LoadOptions};
use crate::pipeline::{two_sample_graph_test, DimensionSpec, PipelineOptions};
use crate::rng::RngSeed;
use crate::sim::{
    curves_to_csv, hemisphere_test, run_synthetic_power, run_univariate_power, Alignment,
    PairedTestOptions, PowerCurve, SyntheticConfig, UnivariateScenario,
};
use crate::stats::{mgc, MgcParams, StatKind};
use crate::svg::LinePlot;

const DEFAULT_SEED: u64 = 2026;

#[derive(Parser)]
#[command(
    name = "graphtest",
    version,
    about = "Nonparametric two-sample hypothesis tests for random graphs"
)]
struct Cli {
    /// Master seed driving all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Plain key=value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread count (default: GRAPHTEST_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether two observed graphs share a latent position distribution.
    Test(TestArgs),
    /// Run a power experiment (fig1: univariate, fig2: synthetic pairs).
    Simulate(SimulateArgs),
    /// Run the paired-graph comparison over embedding dimensions 1..5.
    ReproduceTable1(Table1Args),
    /// Re-execute a recorded run manifest; outputs reproduce byte-identically.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct TestArgs {
    graph1: PathBuf,
    graph2: PathBuf,
    /// Embedding dimension: a positive integer, or 'auto' for the
    /// profile-likelihood elbow on each graph's spectrum.
    #[arg(long)]
    d: Option<String>,
    /// Alignment: median or otp.
    #[arg(long)]
    align: Option<String>,
    /// Statistic: mgc, dcorr-u, or dcorr-biased.
    #[arg(long)]
    stat: Option<String>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Input format: dense-csv or edge-list.
    #[arg(long)]
    format: Option<String>,
    /// Dense CSV inputs start with a header line.
    #[arg(long)]
    header: bool,
    /// First vertex index in edge-list inputs (0 or 1).
    #[arg(long)]
    index_base: Option<usize>,
    /// Add noise to the larger graph's embedding to match estimation
    /// variance across unequal orders.
    #[arg(long)]
    correct_variance: bool,
    /// Also write the observed MGC local-correlation grid to this CSV
    /// (requires --stat mgc).
    #[arg(long)]
    mgc_grid: Option<PathBuf>,
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment id: fig1 or fig2.
    experiment: String,
    /// Preset: desk (fast) or paper (full size).
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated per-graph vertex counts for fig1.
    #[arg(long)]
    n_grid: Option<String>,
    /// Comma-separated synthetic sample sizes for fig2.
    #[arg(long)]
    m_grid: Option<String>,
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct Table1Args {
    /// First graph file; omit both paths to use the bundled pair.
    graph1: Option<PathBuf>,
    /// Second graph file.
    graph2: Option<PathBuf>,
    #[arg(long)]
    permutations: Option<usize>,
    /// Comma-separated embedding dimensions.
    #[arg(long)]
    d_grid: Option<String>,
    /// Input format: dense-csv or edge-list.
    #[arg(long)]
    format: Option<String>,
    /// Dense CSV inputs start with a header line.
    #[arg(long)]
    header: bool,
    /// First vertex index in edge-list inputs (0 or 1).
    #[arg(long)]
    index_base: Option<usize>,
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Path to a run_manifest.json written by a previous run.
    manifest: PathBuf,
    /// Redirect outputs to a different directory.
    #[arg(long)]
    outdir: Option<PathBuf>,
}

/// Fully resolved, replayable configuration of one command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ResolvedCommand {
    Test { config: TestConfig },
    Simulate { config: SimulateConfig },
    ReproduceTable1 { config: Table1Config },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub graph1: PathBuf,
    pub graph2: PathBuf,
    pub format: GraphFormat,
    pub header: bool,
    pub index_base: usize,
    /// "auto" or a positive integer, as given.
    pub d: String,
    pub align: Alignment,
    pub stat: StatKind,
    pub permutations: usize,
    pub alpha: f64,
    pub correct_variance: bool,
    pub mgc_grid: Option<PathBuf>,
    pub outdir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub experiment: String,
    pub scale: String,
    pub replicates: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub outdir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Config {
    pub graph1: Option<PathBuf>,
    pub graph2: Option<PathBuf>,
    pub format: GraphFormat,
    pub header: bool,
    pub index_base: usize,
    pub permutations: usize,
    pub d_grid: Vec<usize>,
    pub outdir: PathBuf,
}

/// Record of one completed run: enough to reproduce it exactly.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub command: ResolvedCommand,
    pub runtime_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let threads = cli
        .threads
        .or(file.get("threads")?)
        .or_else(|| std::env::var("GRAPHTEST_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(t) = threads {
        // Ignore the error when a pool already exists (repeat calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let seed = cli.seed.or(file.get("seed")?).unwrap_or(DEFAULT_SEED);

    match cli.command {
        Command::Test(args) => {
            let config = resolve_test(args, &file)?;
            file.warn_unused();
            run_and_record(ResolvedCommand::Test { config }, seed)
        }
        Command::Simulate(args) => {
            let config = resolve_simulate(args, &file)?;
            file.warn_unused();
            run_and_record(ResolvedCommand::Simulate { config }, seed)
        }
        Command::ReproduceTable1(args) => {
            let config = resolve_table1(args, &file)?;
            file.warn_unused();
            run_and_record(ResolvedCommand::ReproduceTable1 { config }, seed)
        }
        Command::Replay(args) => {
            file.warn_unused();
            replay(args, seed, cli.seed.is_some())
        }
    }
}

fn run_and_record(command: ResolvedCommand, seed: u64) -> Result<()> {
    let start = Instant::now();
    let outputs = execute(&command, seed)?;
    let manifest = RunManifest {
        schema_version: 1,
        tool: "graphtest".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: seed,
        command,
        runtime_seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    let outdir = manifest_outdir(&manifest.command);
    let path = outdir.join("run_manifest.json");
    write_file(&path, &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")))?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn manifest_outdir(command: &ResolvedCommand) -> PathBuf {
    match command {
        ResolvedCommand::Test { config } => config.outdir.clone(),
        ResolvedCommand::Simulate { config } => config.outdir.clone(),
        ResolvedCommand::ReproduceTable1 { config } => config.outdir.clone(),
    }
}

fn replay(args: ReplayArgs, seed: u64, seed_overridden: bool) -> Result<()> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|source| io_error(&args.manifest, source))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("cannot parse manifest {}: {e}", args.manifest.display())))?;
    let mut command = manifest.command;
    if let Some(outdir) = args.outdir {
        match &mut command {
            ResolvedCommand::Test { config } => config.outdir = outdir,
            ResolvedCommand::Simulate { config } => config.outdir = outdir,
            ResolvedCommand::ReproduceTable1 { config } => config.outdir = outdir,
        }
    }
    // The recorded seed governs unless the caller explicitly overrides it.
    let replay_seed = if seed_overridden { seed } else { manifest.master_seed };
    run_and_record(command, replay_seed)
}

fn execute(command: &ResolvedCommand, seed: u64) -> Result<Vec<PathBuf>> {
    match command {
        ResolvedCommand::Test { config } => cmd_test(config, seed),
        ResolvedCommand::Simulate { config } => match config.experiment.as_str() {
            "fig1" => cmd_fig1(config, seed),
            "fig2" => cmd_fig2(config, seed),
            other => Err(Error::Config(format!(
                "unknown experiment '{other}' (expected fig1 or fig2)"
            ))),
        },
        ResolvedCommand::ReproduceTable1 { config } => cmd_table1(config, seed),
    }
}

// ---------------------------------------------------------------- test

fn cmd_test(config: &TestConfig, seed: u64) -> Result<Vec<PathBuf>> {
    let load_options = LoadOptions {
        format: config.format,
        index_base: config.index_base,
        header: config.header,
    };
    let a = load_input(&config.graph1, &load_options)?;
    let b = load_input(&config.graph2, &load_options)?;
    let options = PipelineOptions {
        dimension: DimensionSpec::parse(&config.d)?,
        alignment: config.align,
        stat: config.stat,
        permutations: config.permutations,
        alpha: config.alpha,
        variance_correction: config.correct_variance,
    };
    let master = RngSeed::new(seed);
    let result = two_sample_graph_test(&a, &b, &options, master)?;

    println!(
        "statistic ({}): {:.6}",
        result.test.stat_kind.name(),
        result.test.statistic
    );
    println!("p-value: {}", result.test.p_value);
    if let Some((da, db)) = result.selected {
        println!("selected dimensions: {da} and {db}; testing at {}", result.dimension);
    }
    println!(
        "decision: {} at alpha = {}",
        if result.reject { "reject equal distributions" } else { "no rejection" },
        result.alpha
    );

    std::fs::create_dir_all(&config.outdir)
        .map_err(|source| io_error(&config.outdir, source))?;
    let mut outputs = Vec::new();
    let result_path = config.outdir.join("test_result.json");
    write_file(&result_path, &format!("{}\n", result.to_json()))?;
    outputs.push(result_path);

    if let Some(grid_path) = &config.mgc_grid {
        if config.stat != StatKind::Mgc {
            return Err(Error::Config("--mgc-grid requires --stat mgc".into()));
        }
        let pooled = crate::pipeline::pooled_sample(&a, &b, &options, master)?;
        let grid = mgc(&pooled.z, &pooled.e, &MgcParams::default())?;
        write_file(grid_path, &grid.grid_csv())?;
        outputs.push(grid_path.clone());
    }
    Ok(outputs)
}

fn load_input(path: &Path, options: &LoadOptions) -> Result<AdjacencyMatrix> {
    let loaded = load_graph(path, options).map_err(|err| match err {
        Error::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Config(format!("file not found: {}", path.display()))
        }
        other => other,
    })?;
    if loaded.dropped_self_loops > 0 {
        eprintln!(
            "note: dropped {} self-loop(s) from {}",
            loaded.dropped_self_loops,
            path.display()
        );
    }
    Ok(loaded.graph)
}

// ------------------------------------------------------------ simulate

fn cmd_fig1(config: &SimulateConfig, seed: u64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&config.outdir)
        .map_err(|source| io_error(&config.outdir, source))?;
    let master = RngSeed::new(seed);
    let mut outputs = Vec::new();
    let scenarios = [
        (UnivariateScenario::Null, "univariate null"),
        (UnivariateScenario::LinearShift, "univariate linear shift"),
        (UnivariateScenario::NonlinearBeta, "univariate nonlinear alternative"),
    ];
    for (si, (scenario, title)) in scenarios.iter().enumerate() {
        // One seed per scenario: both statistics see the same graphs and
        // permutations, so their curves are directly comparable.
        let panel_seed = master.child(si as u64 + 1);
        let mut curves = Vec::new();
        for stat in [StatKind::DcorrUnbiased, StatKind::Mgc] {
            curves.push(run_univariate_power(
                *scenario,
                &config.n_grid,
                config.replicates,
                config.alpha,
                stat,
                config.permutations,
                panel_seed,
            )?);
        }
        let labeled: Vec<(String, &PowerCurve)> =
            curves.iter().map(|c| (c.method.name().to_string(), c)).collect();
        let refs: Vec<&PowerCurve> = curves.iter().collect();
        let stem = format!("fig1_{}", scenario.name());
        let (csv, svg) =
            write_panel(&config.outdir, &stem, title, "vertices per graph", &refs, &labeled)?;
        outputs.push(csv);
        outputs.push(svg);
        println!("wrote {stem}.csv and {stem}.svg");
    }
    Ok(outputs)
}

fn cmd_fig2(config: &SimulateConfig, seed: u64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&config.outdir)
        .map_err(|source| io_error(&config.outdir, source))?;
    let (left, right) = datasets::bundled_pair();
    let sources = [
        ("left", ase(&left, 3)?.positions),
        ("right", ase(&right, 3)?.positions),
    ];
    let master = RngSeed::new(seed);
    let mut outputs = Vec::new();
    for (side_idx, (side, source)) in sources.iter().enumerate() {
        for (rho_idx, rho) in [0.0, 0.5, 1.0].iter().enumerate() {
            // All four series share one panel seed, hence one sequence of
            // synthetic pairs: method differences are paired comparisons.
            let panel_seed = master.child(side_idx as u64 + 1).child(rho_idx as u64 + 1);
            let mut curves = Vec::new();
            for (stat, alignment) in [
                (StatKind::Mgc, Alignment::Otp),
                (StatKind::DcorrUnbiased, Alignment::Otp),
                (StatKind::Mgc, Alignment::Median),
                (StatKind::DcorrUnbiased, Alignment::Median),
            ] {
                let mut cfg = SyntheticConfig::new(source.clone());
                cfg.rho = *rho;
                cfg.r = 1.0;
                cfg.alignment = alignment;
                cfg.stat = stat;
                cfg.replicates = config.replicates;
                cfg.permutations = config.permutations;
                cfg.alpha = config.alpha;
                curves.push(run_synthetic_power(&cfg, &config.m_grid, panel_seed)?);
            }
            let labeled: Vec<(String, &PowerCurve)> = curves
                .iter()
                .map(|c| (format!("{}+{}", c.method.name(), c.alignment.name()), c))
                .collect();
            let refs: Vec<&PowerCurve> = curves.iter().collect();
            let stem = format!("fig2_{side}_rho{rho}");
            let title = format!("synthetic pairs from the {side} graph, rho = {rho}");
            let (csv, svg) =
                write_panel(&config.outdir, &stem, &title, "sampled vertices m", &refs, &labeled)?;
            outputs.push(csv);
            outputs.push(svg);
            println!("wrote {stem}.csv and {stem}.svg");
        }
    }
    Ok(outputs)
}

fn write_panel(
    outdir: &Path,
    stem: &str,
    title: &str,
    x_label: &str,
    curves: &[&PowerCurve],
    labeled: &[(String, &PowerCurve)],
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = outdir.join(format!("{stem}.csv"));
    write_file(&csv_path, &curves_to_csv(curves))?;
    let svg_path = outdir.join(format!("{stem}.svg"));
    let plot = LinePlot::from_power_curves(title, x_label, labeled);
    write_file(&svg_path, &plot.render())?;
    Ok((csv_path, svg_path))
}

// ------------------------------------------------------ reproduce-table1

fn cmd_table1(config: &Table1Config, seed: u64) -> Result<Vec<PathBuf>> {
    let (left, right) = match (&config.graph1, &config.graph2) {
        (Some(a), Some(b)) => {
            let load_options = LoadOptions {
                format: config.format,
                index_base: config.index_base,
                header: config.header,
            };
            (load_input(a, &load_options)?, load_input(b, &load_options)?)
        }
        (None, None) => datasets::bundled_pair(),
        _ => {
            return Err(Error::Config(
                "provide both graph paths or neither (neither uses the bundled pair)".into(),
            ))
        }
    };
    let master = RngSeed::new(seed);
    let combos = [
        (StatKind::Mgc, Alignment::Otp),
        (StatKind::DcorrUnbiased, Alignment::Otp),
        (StatKind::Mgc, Alignment::Median),
        (StatKind::DcorrUnbiased, Alignment::Median),
    ];
    let mut csv = String::from("method,alignment");
    for d in &config.d_grid {
        csv.push_str(&format!(",d{d}"));
    }
    csv.push('\n');
    let header: Vec<String> = config.d_grid.iter().map(|d| format!("d={d}")).collect();
    println!("{:<10} {:<10} {}", "method", "alignment", header.join("   "));
    for (stat, alignment) in combos {
        let options = PairedTestOptions {
            alignment,
            stat,
            permutations: config.permutations,
            variance_correction: false,
        };
        // Same seed for every combination: identical permutation streams,
        // so rows differ only in method.
        let table = hemisphere_test(&left, &right, &config.d_grid, &options, master)?;
        let ps: Vec<String> = table.rows.iter().map(|r| format!("{:.3}", r.p_value)).collect();
        println!("{:<10} {:<10} {}", stat.name(), alignment.name(), ps.join("   "));
        csv.push_str(&format!("{},{}", stat.name(), alignment.name()));
        for row in &table.rows {
            csv.push_str(&format!(",{}", row.p_value));
        }
        csv.push('\n');
    }
    std::fs::create_dir_all(&config.outdir)
        .map_err(|source| io_error(&config.outdir, source))?;
    let path = config.outdir.join("table1.csv");
    write_file(&path, &csv)?;
    Ok(vec![path])
}

// ------------------------------------------------------------ resolution

/// Key=value configuration file: `#` comments and blank lines are skipped.
struct FileConfig {
    map: HashMap<String, String>,
    used: std::cell::RefCell<HashSet<String>>,
    origin: Option<PathBuf>,
}

impl FileConfig {
    fn empty() -> Self {
        FileConfig { map: HashMap::new(), used: Default::default(), origin: None }
    }

    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| io_error(path, source))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { map, used: Default::default(), origin: Some(path.to_path_buf()) })
    }

    /// Typed lookup via FromStr; absent keys yield None.
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(value) => value.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config key '{key}': cannot parse value '{value}'"))
            }),
        }
    }

    fn get_with<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(value) => parse(&value).map(Some),
        }
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn warn_unused(&self) {
        let used = self.used.borrow();
        let mut unused: Vec<&String> =
            self.map.keys().filter(|k| !used.contains(k.as_str())).collect();
        unused.sort();
        if let (Some(origin), false) = (&self.origin, unused.is_empty()) {
            let list: Vec<&str> = unused.iter().map(|s| s.as_str()).collect();
            eprintln!(
                "note: unused config key(s) in {}: {}",
                origin.display(),
                list.join(", ")
            );
        }
    }
}

fn parse_format(s: &str) -> Result<GraphFormat> {
    match s {
        "dense-csv" => Ok(GraphFormat::DenseCsv),
        "edge-list" => Ok(GraphFormat::EdgeList),
        other => Err(Error::Config(format!(
            "unknown format '{other}' (expected dense-csv or edge-list)"
        ))),
    }
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let values = s
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("grid entry '{tok}' is not a positive integer")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if values.is_empty() || values.contains(&0) {
        return Err(Error::Config("grid must list positive integers".into()));
    }
    Ok(values)
}

fn resolve_test(args: TestArgs, file: &FileConfig) -> Result<TestConfig> {
    Ok(TestConfig {
        graph1: args.graph1,
        graph2: args.graph2,
        format: match args.format {
            Some(s) => parse_format(&s)?,
            None => file.get_with("format", parse_format)?.unwrap_or(GraphFormat::DenseCsv),
        },
        header: args.header || file.get("header")?.unwrap_or(false),
        index_base: args.index_base.or(file.get("index-base")?).unwrap_or(0),
        d: match args.d.or(file.raw("d")) {
            Some(s) => {
                DimensionSpec::parse(&s)?;
                s
            }
            None => "3".into(),
        },
        align: match args.align {
            Some(s) => Alignment::parse(&s)?,
            None => file.get_with("align", Alignment::parse)?.unwrap_or(Alignment::Otp),
        },
        stat: match args.stat {
            Some(s) => StatKind::parse(&s)?,
            None => file.get_with("stat", StatKind::parse)?.unwrap_or(StatKind::Mgc),
        },
        permutations: args.permutations.or(file.get("permutations")?).unwrap_or(999),
        alpha: args.alpha.or(file.get("alpha")?).unwrap_or(0.05),
        correct_variance: args.correct_variance || file.get("correct-variance")?.unwrap_or(false),
        mgc_grid: args.mgc_grid.or(file.get("mgc-grid")?),
        outdir: args.outdir.or(file.get("outdir")?).unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn resolve_simulate(args: SimulateArgs, file: &FileConfig) -> Result<SimulateConfig> {
    let scale = match args.scale.or(file.raw("scale")) {
        Some(s) if s == "desk" || s == "paper" => s,
        Some(other) => {
            return Err(Error::Config(format!("unknown scale '{other}' (expected desk or paper)")))
        }
        None => "desk".into(),
    };
    let paper = scale == "paper";
    let fig1 = args.experiment == "fig1";
    // Desk scale targets minutes of runtime; paper scale matches the
    // original study sizes (1000 univariate and 500 synthetic replicates).
    let default_replicates = match (paper, fig1) {
        (false, _) => 200,
        (true, true) => 1000,
        (true, false) => 500,
    };
    let default_permutations = if paper { 1000 } else { 500 };
    let default_n_grid = if paper { vec![50, 100, 150, 200, 250, 300] } else { vec![50, 100, 200] };
    let default_m_grid = if paper { vec![20, 50, 100, 150, 200] } else { vec![50, 100, 200] };
    Ok(SimulateConfig {
        experiment: args.experiment,
        scale,
        replicates: args.replicates.or(file.get("replicates")?).unwrap_or(default_replicates),
        permutations: args.permutations.or(file.get("permutations")?).unwrap_or(default_permutations),
        alpha: args.alpha.or(file.get("alpha")?).unwrap_or(0.05),
        n_grid: match args.n_grid {
            Some(s) => parse_grid(&s)?,
            None => file.get_with("n-grid", parse_grid)?.unwrap_or(default_n_grid),
        },
        m_grid: match args.m_grid {
            Some(s) => parse_grid(&s)?,
            None => file.get_with("m-grid", parse_grid)?.unwrap_or(default_m_grid),
        },
        outdir: args.outdir.or(file.get("outdir")?).unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn resolve_table1(args: Table1Args, file: &FileConfig) -> Result<Table1Config> {
    Ok(Table1Config {
        graph1: args.graph1,
        graph2: args.graph2,
        format: match args.format {
            Some(s) => parse_format(&s)?,
            None => file.get_with("format", parse_format)?.unwrap_or(GraphFormat::DenseCsv),
        },
        header: args.header || file.get("header")?.unwrap_or(false),
        index_base: args.index_base.or(file.get("index-base")?).unwrap_or(0),
        permutations: args.permutations.or(file.get("permutations")?).unwrap_or(999),
        d_grid: match args.d_grid {
            Some(s) => parse_grid(&s)?,
            None => file.get_with("d-grid", parse_grid)?.unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
        },
        outdir: args.outdir.or(file.get("outdir")?).unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| io_error(parent, source))?;
        }
    }
    std::fs::write(path, contents).map_err(|source| io_error(path, source))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_accepts_lists_and_rejects_zero() {
        assert_eq!(parse_grid("50, 100,200").unwrap(), vec![50, 100, 200]);
        assert!(parse_grid("50,0").is_err());
        assert!(parse_grid("abc").is_err());
    }

    #[test]
    fn cli_flag_beats_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "permutations=77\nalpha=0.2\n# comment\n").unwrap();
        let file = FileConfig::load(&cfg).unwrap();
        let args = TestArgs {
            graph1: "a.csv".into(),
            graph2: "b.csv".into(),
            d: None,
            align: None,
            stat: None,
            permutations: Some(11),
            alpha: None,
            format: None,
            header: false,
            index_base: None,
            correct_variance: false,
            mgc_grid: None,
            outdir: None,
        };
        let config = resolve_test(args, &file).unwrap();
        assert_eq!(config.permutations, 11, "flag wins over file");
        assert_eq!(config.alpha, 0.2, "file wins over default");
        assert_eq!(config.d, "3", "default fills the rest");
    }

    #[test]
    fn config_file_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.conf");
        std::fs::write(&cfg, "permutations 500\n").unwrap();
        assert!(FileConfig::load(&cfg).is_err());
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let manifest = RunManifest {
            schema_version: 1,
            tool: "graphtest".into(),
            version: "0.1.0".into(),
            master_seed: 42,
            command: ResolvedCommand::Simulate {
                config: SimulateConfig {
                    experiment: "fig1".into(),
                    scale: "desk".into(),
                    replicates: 5,
                    permutations: 29,
                    alpha: 0.05,
                    n_grid: vec![30, 40],
                    m_grid: vec![50],
                    outdir: "out".into(),
                },
            },
            runtime_seconds: 1.25,
            outputs: vec!["out/fig1_null.csv".into()],
        };
        let text = serde_json::to_string_pretty(&manifest).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.master_seed, 42);
        match back.command {
            ResolvedCommand::Simulate { config } => {
                assert_eq!(config.n_grid, vec![30, 40]);
                assert_eq!(config.permutations, 29);
            }
            _ => panic!("wrong command variant"),
        }
    }

    #[test]
    fn missing_file_reports_file_not_found() {
        let args = TestArgs {
            graph1: "definitely_missing.csv".into(),
            graph2: "also_missing.csv".into(),
            d: None,
            align: None,
            stat: None,
            permutations: Some(9),
            alpha: None,
            format: None,
            header: false,
            index_base: None,
            correct_variance: false,
            mgc_grid: None,
            outdir: None,
        };
        let config = resolve_test(args, &FileConfig::empty()).unwrap();
        let err = cmd_test(&config, 1).unwrap_err();
        assert!(err.to_string().contains("file not found"), "got: {err}");
    }
}
