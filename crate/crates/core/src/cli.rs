//! Command-line front end. `main` returns the process exit code: 0 on
//! success, 1 for configuration problems, 2 for failures while running.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{run, EngineError, Mode, RunConfig, RunOptions, RunOutput};
use crate::metrics::{compare_runs, emit_comparison_csv, emit_csv, MetricsError};
use crate::mobility::spawn_scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "crnt-sim", version, about = "Beacon piggybacking VANET simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one mode and write its CSV.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<Mode>,
        /// Also write every per-receiver radio outcome.
        #[arg(long)]
        radio_log: bool,
    },
    /// Run baseline and CRNT at one seed and write both CSVs plus the
    /// comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat `compare` over a list of seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds or an inclusive range such as `1..5`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: SeedList,
        /// Seeds run concurrently.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Parse and check a configuration without running it.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<Mode>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name or scenario file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration_s: Option<u32>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    seed_values(s).map(SeedList)
}

fn seed_values(s: &str) -> Result<Vec<u64>, String> {
    let bad = |_| format!("invalid seed list {s:?}");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(bad)).collect()
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl Common {
    /// Defaults, then the file, then flags.
    fn effective(&self, mode: Option<Mode>) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.duration_s {
            cfg.duration_s = d;
        }
        if let Some(m) = mode {
            cfg.mode = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn say(&self, level: u8, line: impl FnOnce() -> String) {
        if self.verbose >= level {
            eprintln!("{}", line());
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn run_csv_path(dir: &Path, out: &RunOutput) -> PathBuf {
    let m = &out.report.meta;
    dir.join(format!("{}_{}_{}.csv", m.scenario, m.mode, m.seed))
}

fn write_radio_log(path: &Path, out: &RunOutput) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["time_us", "frame", "sender", "receiver", "outcome", "sinr_db", "injected"])
        .map_err(fail)?;
    for r in &out.radio_log {
        w.write_record([
            r.time_us.to_string(),
            r.frame.to_string(),
            r.sender.0.to_string(),
            r.receiver.0.to_string(),
            r.outcome.label().to_string(),
            r.outcome.sinr_db().map(|x| format!("{x:.3}")).unwrap_or_default(),
            r.injected.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))
}

fn cmd_run(common: &Common, mode: Option<Mode>, radio_log: bool) -> Result<(), Failure> {
    let cfg = common.effective(mode)?;
    common.say(1, || format!("running {} {} seed {} for {} s", cfg.scenario, cfg.mode, cfg.seed, cfg.duration_s));
    let out = run(
        &cfg,
        RunOptions {
            event_log: common.verbose >= 3,
            radio_log,
        },
    )?;
    for line in &out.event_log {
        eprintln!("{line}");
    }
    create_dir(&common.out_dir)?;
    let path = run_csv_path(&common.out_dir, &out);
    emit_csv(&out.report, &path)?;
    common.say(1, || format!("wrote {}", path.display()));
    if radio_log {
        let m = &out.report.meta;
        let rpath = common.out_dir.join(format!("{}_{}_{}_radio.csv", m.scenario, m.mode, m.seed));
        write_radio_log(&rpath, &out)?;
        common.say(1, || format!("wrote {}", rpath.display()));
    }
    Ok(())
}

fn compare_one(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let baseline = run(
        &RunConfig {
            mode: Mode::Baseline,
            ..cfg.clone()
        },
        RunOptions::default(),
    )?;
    let crnt = run(
        &RunConfig {
            mode: Mode::Crnt,
            ..cfg.clone()
        },
        RunOptions::default(),
    )?;
    let cmp = compare_runs(&baseline.report, &crnt.report)?;
    let mut paths = Vec::new();
    for out in [&baseline, &crnt] {
        let p = run_csv_path(out_dir, out);
        emit_csv(&out.report, &p)?;
        paths.push(p);
    }
    let m = &baseline.report.meta;
    let p = out_dir.join(format!("{}_cmp_{}.csv", m.scenario, m.seed));
    emit_comparison_csv(&cmp, &baseline.report, &p)?;
    paths.push(p);
    Ok(paths)
}

fn cmd_compare(common: &Common) -> Result<(), Failure> {
    let cfg = common.effective(None)?;
    common.say(1, || format!("comparing {} seed {} for {} s", cfg.scenario, cfg.seed, cfg.duration_s));
    create_dir(&common.out_dir)?;
    for p in compare_one(&cfg, &common.out_dir)? {
        common.say(1, || format!("wrote {}", p.display()));
    }
    Ok(())
}

fn cmd_sweep(common: &Common, seeds: &[u64], threads: usize) -> Result<(), Failure> {
    let cfg = common.effective(None)?;
    if seeds.is_empty() {
        return Err(Failure::Config("--seeds must list at least one seed".into()));
    }
    if threads == 0 {
        return Err(Failure::Config("--threads must be at least 1".into()));
    }
    create_dir(&common.out_dir)?;
    let mut results: Vec<(u64, Result<Vec<PathBuf>, Failure>)> = Vec::new();
    for chunk in seeds.chunks(threads) {
        let done: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| {
                    let cfg = RunConfig { seed, ..cfg.clone() };
                    let dir = &common.out_dir;
                    (seed, s.spawn(move || compare_one(&cfg, dir)))
                })
                .collect();
            handles
                .into_iter()
                .map(|(seed, h)| (seed, h.join().unwrap_or_else(|_| Err(Failure::Runtime("worker panicked".into())))))
                .collect()
        });
        results.extend(done);
    }
    for (seed, r) in results {
        let paths = r?;
        common.say(1, || format!("seed {seed}: wrote {} files", paths.len()));
    }
    Ok(())
}

fn cmd_validate(common: &Common, mode: Option<Mode>) -> Result<(), Failure> {
    let cfg = common.effective(mode)?;
    let scenario = cfg.resolve_scenario()?;
    let vehicles = spawn_scenario(&scenario, cfg.seed).map_err(EngineError::from)?;
    println!(
        "ok: scenario {} ({} vehicles, {} segments), mode {}, {} s",
        scenario.name,
        vehicles.len(),
        scenario.segments.len(),
        cfg.mode,
        cfg.duration_s
    );
    Ok(())
}

/// Parses `args` (program name first) and executes the subcommand.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run { common, mode, radio_log } => cmd_run(common, *mode, *radio_log),
        Command::Compare { common } => cmd_compare(common),
        Command::Sweep { common, seeds, threads } => cmd_sweep(common, &seeds.0, *threads),
        Command::ValidateConfig { common, mode } => cmd_validate(common, *mode),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}
