//! The `yde` command line: configuration, dispatch and artifact bookkeeping.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod systems;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::commands::{Ctx, RunOutcome};
use crate::config::{parse_config, ExperimentConfig};
use crate::error::CliError;
use crate::output::{num, sha256_hex, Manifest, Output, RunRecord};

#[derive(Debug, Parser)]
#[command(name = "yde", version, about = "Young differential equations: paths, bounds and random attractors")]
pub struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `noise.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for ensembles, overriding `analysis.workers`.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pullback,
    Forward,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// p-variation of a path (CSV input or a sampled fBm).
    Pvar {
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        /// Also compute greedy times with this budget.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Sample fBm paths on the configured grid.
    Fbm {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Monte Carlo estimate of Γ(p) = (E⦀x⦀^p_{[-1,1]})^{1/p}.
    Gamma {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long = "H")]
        hurst: Option<f64>,
    },
    /// Young integral of one path against another.
    Integrate {
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        levels: Option<u32>,
    },
    /// Solve the configured system along a driver.
    Solve {
        /// Configuration file whose `[system]` replaces the current one.
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        x: Option<PathBuf>,
        /// Initial value, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        mesh: Option<f64>,
    },
    /// Semigroup decay constants of the linear part.
    Constants {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Evaluate the random-attractor criterion.
    Criterion {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long = "H")]
        hurst: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Pullback or forward attractor experiment.
    Attractor {
        #[arg(long, value_enum, default_value_t = Mode::Pullback)]
        mode: Mode,
    },
    /// Distance of the attractor to the noise-free equilibrium as C_g shrinks.
    SweepCg,
    /// Pendulum scenarios: 1 = zero-sigma4, 2 = bounded, 3 = linear.
    Pendulum {
        #[arg(long)]
        case: String,
        /// Configuration file with a pendulum `[system]` section.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Number of driver realizations.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Randomized property suites; exits 1 on any violation.
    Verify {
        /// `gronwall`, `pvar`, `sandwich`, `greedy`, `young`, `bounds` or `all`.
        target: String,
        /// For `bounds`: `apriori`, `twosol`, `ytest` or `gronwall`.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Check artifact integrity and summarize a run directory.
    Report {
        /// Directory to summarize (defaults to the output directory).
        dir: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(CliError::Config)
}

fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number `{v}` in `{s}`"))))
        .collect()
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    let command_line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &command_line, stdout) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json());
            err.exit_code()
        }
    }
}

fn execute(cli: Cli, command_line: &[String], stdout: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.noise.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.analysis.workers = w;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));

    if let Command::Report { dir } = &cli.command {
        let dir = dir.clone().unwrap_or(out_dir);
        let summary = report::summarize(&dir)?;
        let value = serde_json::to_value(&summary).expect("summary serializes");
        let json_path = dir.join("summary.json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&value).expect("json") + "\n").map_err(|e| CliError::io(&json_path, e))?;
        let txt_path = dir.join("summary.txt");
        std::fs::write(&txt_path, summary.lines.join("\n") + "\n").map_err(|e| CliError::io(&txt_path, e))?;
        for l in &summary.lines {
            let _ = writeln!(stdout, "{l}");
        }
        if !summary.integrity_failures.is_empty() {
            return Err(CliError::Integrity(summary.integrity_failures));
        }
        if summary.total_violations > 0 {
            return Err(CliError::Violation { count: summary.total_violations, message: "recorded runs contain bound violations".into() });
        }
        return Ok(0);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.analysis.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let mut out = Output::create(&out_dir, &cfg.output.formats)?;
    let outcome = pool.install(|| dispatch(&cli.command, &mut cfg, &mut out))?;

    let mut manifest = match Manifest::load(&out_dir) {
        Ok(m) => m,
        Err(_) => Manifest::default(),
    };
    manifest.upsert(RunRecord {
        label: outcome.label.clone(),
        command_line: command_line.to_vec(),
        config_sha256: sha256_hex(cfg.dump().as_bytes()),
        seed: cfg.noise.seed,
        violations: outcome.violations,
        summary: outcome.summary,
        artifacts: out.into_artifacts(),
    });
    manifest.save(&out_dir)?;
    let _ = writeln!(stdout, "{}", outcome.text);
    if outcome.violations > 0 {
        return Err(CliError::Violation {
            count: outcome.violations,
            message: format!("{}: {} violation(s)", outcome.label, outcome.violations),
        });
    }
    Ok(0)
}

fn replace_system(cfg: &mut ExperimentConfig, path: &Option<PathBuf>) -> Result<(), CliError> {
    if let Some(p) = path {
        cfg.system = load_config(p)?.system;
    }
    Ok(())
}

fn dispatch(command: &Command, cfg: &mut ExperimentConfig, out: &mut Output) -> Result<RunOutcome, CliError> {
    match command {
        Command::Solve { system, .. } | Command::Constants { system, .. } | Command::Criterion { system, .. } => {
            replace_system(cfg, system)?;
        }
        _ => {}
    }
    if let Command::Criterion { hurst, p, samples, .. } = command {
        if let Some(h) = hurst {
            cfg.noise.hurst = vec![*h];
        }
        if let Some(p) = p {
            cfg.analysis.p = *p;
        }
        if let Some(n) = samples {
            cfg.analysis.gamma_samples = *n;
        }
    }
    let params_cfg = match command {
        Command::Pendulum { params: Some(p), .. } => Some(load_config(p)?),
        _ => None,
    };
    let mut ctx = Ctx { cfg, out };
    match command {
        Command::Pvar { x, p, from, to, gamma } => commands::pvar(&mut ctx, x.as_deref(), *p, *from, *to, *gamma),
        Command::Fbm { count } => commands::fbm(&mut ctx, *count),
        Command::Gamma { p, samples, hurst } => commands::gamma(&mut ctx, *p, *samples, *hurst),
        Command::Integrate { y, x, from, to, levels } => commands::integrate(&mut ctx, y.as_deref(), x.as_deref(), *from, *to, *levels),
        Command::Solve { x, y0, from, to, mesh, .. } => {
            let y0 = y0.as_deref().map(parse_vector).transpose()?;
            commands::solve(&mut ctx, x.as_deref(), y0, *from, *to, *mesh)
        }
        Command::Constants { delta, .. } => commands::constants(&mut ctx, *delta),
        Command::Criterion { .. } => commands::criterion(&mut ctx),
        Command::Attractor { mode } => commands::attractor(&mut ctx, *mode == Mode::Forward),
        Command::SweepCg => commands::sweep_cg(&mut ctx),
        Command::Pendulum { case, seeds, .. } => commands::pendulum(&mut ctx, case, params_cfg.as_ref(), *seeds),
        Command::Verify { target, suite, cases } => verify_command(&mut ctx, target, suite.as_deref(), *cases),
        Command::Report { .. } => unreachable!("handled before dispatch"),
    }
}

fn verify_command(ctx: &mut Ctx, target: &str, suite: Option<&str>, cases: Option<usize>) -> Result<RunOutcome, CliError> {
    let names: Vec<&str> = match (target, suite) {
        ("bounds", Some(s)) => vec![s],
        ("bounds", None) => vec!["apriori", "twosol", "ytest", "gronwall"],
        ("all", _) => verify::SUITES.to_vec(),
        (t, _) if verify::SUITES.contains(&t) => vec![t],
        (t, _) => return Err(CliError::Usage(format!("unknown verify target `{t}`"))),
    };
    let cases = cases.unwrap_or(ctx.cfg.analysis.cases);
    let seed = commands::stream_seed(ctx.cfg.noise.seed);
    let mut results = Vec::new();
    for n in &names {
        results.push(verify::run_suite(n, cases, seed, ctx.cfg.analysis.p)?);
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.check.clone(), r.cases.to_string(), r.violations.to_string(), num(r.worst_slack), (r.passed() as u8).to_string()])
        .collect();
    let label = match (target, suite) {
        ("bounds", Some(s)) => format!("verify-bounds-{s}"),
        _ => format!("verify-{target}"),
    };
    ctx.out.csv(
        &format!("{label}.csv"),
        &[
            ("check", "property suite"),
            ("cases", "random cases generated"),
            ("violations", "cases where the property failed"),
            ("worst_slack", "smallest relative slack over all cases"),
            ("passed", "1 if no case failed"),
        ],
        &rows,
    )?;
    let violations: usize = results.iter().map(|r| r.violations).sum();
    let summary = json!({ "results": serde_json::to_value(&results).expect("json"), "violations": violations });
    ctx.out.json(&format!("{label}.json"), &summary)?;
    let mut text = format!("{:<10} {:>6} {:>10} {:>14}  result", "check", "cases", "violations", "worst slack");
    for r in &results {
        text.push_str(&format!(
            "\n{:<10} {:>6} {:>10} {:>14.6e}  {}",
            r.check,
            r.cases,
            r.violations,
            r.worst_slack,
            if r.passed() { "pass" } else { "FAIL" }
        ));
    }
    Ok(RunOutcome { label, summary, violations, text })
}
