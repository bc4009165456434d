use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use catalyst_core::grid::GridParams;
use catalyst_core::metrics::{edit_distance_report, frechet_matrix, frechet_points, lcs_report, AlignmentReport, MetricParams};
use catalyst_core::stconn::{parse_edge_list, stconn_seeded, Mode, StconnParams};
use catalyst_core::verify::{run_suite, Suite, SuiteReport};
use catalyst_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "catalyst", version, about = "Catalytic-space reachability, alignment and Fréchet distance")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice (tape contents, primes, σ).
    #[arg(long, global = true, env = "CATALYST_SEED", default_value_t = 0)]
    seed: u64,
    /// Print a JSON report instead of plain lines.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    /// Worker threads for independent trials or suites.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether T is reachable from S in an edge-list graph.
    Stconn {
        graph: PathBuf,
        s: usize,
        t: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Randomized)]
        mode: ModeArg,
    },
    /// Edit distance between two strings.
    Ed(PairArgs),
    /// Length of a longest common subsequence.
    Lcs(PairArgs),
    /// Discrete Fréchet distance between two point sequences.
    Frechet {
        /// CSV files of `x,y` integer points, one per line.
        #[arg(required_unless_present = "matrix", num_args = 2)]
        curves: Vec<PathBuf>,
        /// Whitespace-separated distance matrix instead of point files.
        #[arg(long, conflicts_with = "curves")]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = GridParams::default().eps)]
        eps: f64,
    },
    /// Run a self-check suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
    },
}

#[derive(Args)]
struct PairArgs {
    x: String,
    y: String,
    /// Treat X and Y as paths and read the strings from those files.
    #[arg(long)]
    files: bool,
    #[arg(long, default_value_t = GridParams::default().eps)]
    eps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Randomized,
    Enumerate,
    Exact,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Randomized => Mode::Randomized,
            ModeArg::Enumerate => Mode::Enumerate,
            ModeArg::Exact => Mode::ExactSmallU,
        }
    }
}

#[derive(Serialize)]
struct TrialOut {
    p: u64,
    sigma: String,
    scalar: u64,
    restored: bool,
}

#[derive(Serialize)]
struct RunReport {
    v: u32,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<u64>,
    restored: bool,
    free_bits_peak: usize,
    catalytic_bits: usize,
    queries: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trials: Vec<TrialOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    primes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ms: Option<f64>,
}

impl RunReport {
    fn new(command: &'static str) -> Self {
        RunReport {
            v: SCHEMA_VERSION,
            command,
            verdict: None,
            value: None,
            restored: true,
            free_bits_peak: 0,
            catalytic_bits: 0,
            queries: 0,
            trials: Vec::new(),
            primes: None,
            wall_ms: None,
        }
    }
}

#[derive(Serialize)]
struct VerifyOut<'a> {
    v: u32,
    command: &'static str,
    passed: bool,
    suites: &'a [SuiteReport],
}

enum Failure {
    Input(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } | Error::BudgetExhausted => Failure::Run(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

/// SplitMix64 step, used to give each trial its own seed.
fn mix(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on `0..count` with up to `jobs` threads; results keep index order.
fn parallel<T: Send>(count: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, count.max(1));
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|sc| {
        let chunks: Vec<_> = out.chunks_mut(count.div_ceil(jobs).max(1)).enumerate().collect();
        let width = count.div_ceil(jobs).max(1);
        for (c, chunk) in chunks {
            let f = &f;
            sc.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(f(c * width + k));
                }
            });
        }
    });
    out.into_iter().map(|x| x.expect("worker finished")).collect()
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_stconn(g: &Global, graph: &Path, s: usize, t: usize, eps: f64, trials: usize, mode: ModeArg) -> Result<RunReport, Failure> {
    let file = File::open(graph).map_err(|e| Failure::Input(format!("{}: {e}", graph.display())))?;
    let digraph = parse_edge_list(BufReader::new(file))?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Input(format!("--eps must be positive, got {eps}")));
    }
    let mut report = RunReport::new("stconn");
    let params = StconnParams { eps, trials: 1, mode: mode.into(), ..Default::default() };
    let trials = match mode {
        ModeArg::Enumerate => 1,
        _ => trials.max(1),
    };
    // Each trial is an independent call with its own derived seed, so the
    // report does not depend on --jobs.
    let run = |i: usize| stconn_seeded(&digraph, s, t, &params, mix(g.seed, i as u64));
    let results: Vec<_> = if g.jobs > 1 {
        parallel(trials, g.jobs, run)
    } else {
        let mut v = Vec::new();
        for i in 0..trials {
            let r = run(i);
            let stop = matches!(&r, Ok(rep) if rep.connected) || r.is_err();
            v.push(r);
            if stop {
                break;
            }
        }
        v
    };
    let mut connected = false;
    for r in results {
        let rep = r?;
        for (tr, st) in rep.trials.iter().zip(&rep.stats) {
            report.restored &= tr.restored;
            report.free_bits_peak = report.free_bits_peak.max(st.free_bits_peak);
            report.catalytic_bits = report.catalytic_bits.max(st.catalytic_bits);
            report.queries += st.base_calls;
            report.trials.push(TrialOut { p: tr.p, sigma: tr.sigma.clone(), scalar: tr.scalar, restored: tr.restored });
        }
        connected |= rep.connected;
        if connected {
            break;
        }
    }
    report.verdict = Some(if connected { "connected" } else { "not connected" }.to_string());
    Ok(report)
}

fn metric_params(g: &Global, eps: f64) -> Result<MetricParams, Failure> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Input(format!("--eps must be positive, got {eps}")));
    }
    Ok(MetricParams { grid: GridParams { eps, ..Default::default() }, tape_seed: g.seed })
}

fn cmd_alignment(g: &Global, a: &PairArgs, lcs: bool) -> Result<RunReport, Failure> {
    let (x, y) = if a.files {
        let strip = |s: String| s.trim_end_matches(['\n', '\r']).to_string();
        (strip(read_text(Path::new(&a.x))?), strip(read_text(Path::new(&a.y))?))
    } else {
        (a.x.clone(), a.y.clone())
    };
    let params = metric_params(g, a.eps)?;
    let rep: AlignmentReport =
        if lcs { lcs_report(x.as_bytes(), y.as_bytes(), params)? } else { edit_distance_report(x.as_bytes(), y.as_bytes(), params)? };
    let mut report = RunReport::new(if lcs { "lcs" } else { "ed" });
    report.value = Some(rep.value as u64);
    report.restored = rep.stats.restored;
    report.free_bits_peak = rep.stats.free_bits_peak;
    report.catalytic_bits = rep.stats.catalytic_bits;
    report.queries = rep.stats.oracle_queries;
    report.primes = Some(rep.primes);
    Ok(report)
}

fn parse_points(path: &Path) -> Result<Vec<(i64, i64)>, Failure> {
    let text = read_text(path)?;
    let mut pts = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let bad = || Failure::Input(format!("{}: line {}: expected `x,y` integers", path.display(), k + 1));
        let (a, b) = l.split_once(',').ok_or_else(bad)?;
        pts.push((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?));
    }
    Ok(pts)
}

fn parse_matrix(path: &Path) -> Result<Vec<Vec<u64>>, Failure> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let row = l
            .split_whitespace()
            .map(|f| f.parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Failure::Input(format!("{}: line {}: expected non-negative integers", path.display(), k + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_frechet(g: &Global, curves: &[PathBuf], matrix: Option<&Path>, eps: f64) -> Result<RunReport, Failure> {
    let params = metric_params(g, eps)?;
    let rep = match matrix {
        Some(path) => frechet_matrix(&parse_matrix(path)?, params)?,
        None => frechet_points(&parse_points(&curves[0])?, &parse_points(&curves[1])?, params)?,
    };
    let mut report = RunReport::new("frechet");
    report.value = Some(rep.value);
    report.restored = rep.stats.restored;
    report.free_bits_peak = rep.stats.free_bits_peak;
    report.catalytic_bits = rep.stats.catalytic_bits;
    report.queries = rep.stats.oracle_queries;
    Ok(report)
}

fn cmd_verify(g: &Global, suite: &str, iterations: usize) -> Result<ExitCode, Failure> {
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
    let reports = parallel(suites.len(), g.jobs, |i| run_suite(suites[i], iterations, mix(g.seed, i as u64)));
    let passed = reports.iter().all(SuiteReport::passed);
    let mut out = std::io::stdout().lock();
    if g.json {
        let body = VerifyOut { v: SCHEMA_VERSION, command: "verify", passed, suites: &reports };
        let _ = writeln!(out, "{}", serde_json::to_string(&body).expect("report serializes"));
    } else {
        for r in &reports {
            for c in &r.checks {
                let tag = if c.failed == 0 { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "{tag} {}: {} ({}/{} matched)", r.suite, c.name, c.passed, c.passed + c.failed);
                if let Some(msg) = &c.first_failure {
                    let _ = writeln!(out, "     first failure: {msg}");
                }
            }
        }
        let _ = writeln!(out, "{}", if passed { "pass" } else { "fail" });
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn emit(g: &Global, mut report: RunReport, started: Instant) -> ExitCode {
    if g.timing {
        report.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    let mut out = std::io::stdout().lock();
    if g.json {
        let _ = writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        let line = match (&report.verdict, report.value) {
            (Some(v), _) => v.clone(),
            (None, Some(x)) => x.to_string(),
            (None, None) => String::new(),
        };
        let _ = writeln!(out, "{line}");
        let mut meters = format!(
            "restored={} free_bits_peak={} catalytic_bits={} queries={}",
            report.restored, report.free_bits_peak, report.catalytic_bits, report.queries
        );
        if let Some(ms) = report.wall_ms {
            meters.push_str(&format!(" wall_ms={ms:.1}"));
        }
        eprintln!("{meters}");
    }
    if !report.restored {
        eprintln!("error: catalytic tape was not restored");
        return ExitCode::from(1);
    }
    match report.verdict.as_deref() {
        Some("not connected") => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let started = Instant::now();
    let result = match &cli.cmd {
        Cmd::Stconn { graph, s, t, eps, trials, mode } => cmd_stconn(g, graph, *s, *t, *eps, *trials, *mode).map(|r| emit(g, r, started)),
        Cmd::Ed(a) => cmd_alignment(g, a, false).map(|r| emit(g, r, started)),
        Cmd::Lcs(a) => cmd_alignment(g, a, true).map(|r| emit(g, r, started)),
        Cmd::Frechet { curves, matrix, eps } => cmd_frechet(g, curves, matrix.as_deref(), *eps).map(|r| emit(g, r, started)),
        Cmd::Verify { suite, iterations } => cmd_verify(g, suite, *iterations),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
