//! `marl-shaping` command line.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use crate::automaton::Ldba;
use crate::bench::{run_experiment, Execution};
use crate::config::{load_automaton, load_grid, ConfigError, ExperimentConfig, ModeSelection};
use crate::metrics::{read_mean_rows, render_svg, write_csv};
use crate::oracle::{build_product, check_equivalence, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "marl-shaping", version, about = "Automaton-shaped multi-agent Q-learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a benchmark and write learning-curve CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<ModeSelection>,
        /// Run seeds one after another on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Load an automaton (and optionally a grid) and report its shape.
    Validate {
        automaton: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Compare the shaping runtime against the explicit product MDP.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Render a learning-curve CSV as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "normalized return")]
        title: String,
    },
}

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    fn validation(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_VALIDATION, error: error.into() }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_IO, error: error.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        if e.is_io() {
            CliError::io(e)
        } else {
            CliError::validation(e)
        }
    }
}

/// Summary of a loaded automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidateReport {
    pub states: usize,
    pub accepting_transitions: usize,
    pub alphabet: Vec<String>,
    /// `(state name, number of ε-moves)` per state.
    pub epsilon_moves: Vec<(String, usize)>,
}

impl ValidateReport {
    pub fn of(ldba: &Ldba) -> Self {
        ValidateReport {
            states: ldba.state_count(),
            accepting_transitions: ldba.accepting_transition_count(),
            alphabet: ldba.aps().to_vec(),
            epsilon_moves: ldba
                .states()
                .iter()
                .enumerate()
                .map(|(i, s)| (s.name.clone().unwrap_or_else(|| i.to_string()), s.epsilons.len()))
                .collect(),
        }
    }

    pub fn headline(&self) -> String {
        format!("{} states, {} accepting transitions", self.states, self.accepting_transitions)
    }
}

pub fn cmd_validate(automaton: &Path, grid: Option<&Path>) -> Result<ValidateReport, CliError> {
    let ldba = load_automaton(automaton)?;
    if let Some(g) = grid {
        let spec = load_grid(g)?;
        spec.label_masks(ldba.aps())
            .map_err(|e| CliError::validation(anyhow!("{}: {e}", g.display())))?;
    }
    Ok(ValidateReport::of(&ldba))
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seeds, out: dir, mode, sequential } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.experiment.seeds = s;
            }
            if let Some(d) = dir {
                cfg.experiment.output_dir = d;
            }
            if let Some(m) = mode {
                cfg.experiment.mode = m;
            }
            cfg.validate()?;
            let exec = if sequential { Execution::Sequential } else { Execution::default() };
            cmd_run(&cfg, exec, out)
        }
        Command::Validate { automaton, grid } => {
            let r = cmd_validate(&automaton, grid.as_deref())?;
            let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(CliError::io);
            w(out, format!("{}: {}", automaton.display(), r.headline()))?;
            w(out, format!("alphabet: {}", r.alphabet.join(" ")))?;
            for (name, n) in &r.epsilon_moves {
                w(out, format!("  state {name}: {n} epsilon-moves"))?;
            }
            if let Some(g) = grid {
                w(out, format!("{}: labels compatible", g.display()))?;
            }
            Ok(())
        }
        Command::Oracle { config, seeds } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.experiment.seeds = s;
            }
            cfg.validate()?;
            cmd_oracle(&cfg, out)
        }
        Command::Plot { csv, out: path, title } => {
            let f = File::open(&csv).with_context(|| format!("{}", csv.display())).map_err(CliError::io)?;
            let rows = read_mean_rows(BufReader::new(f))
                .map_err(|e| CliError::validation(anyhow!("{}: {e}", csv.display())))?;
            fs::write(&path, render_svg(&rows, &title))
                .with_context(|| format!("{}", path.display()))
                .map_err(CliError::io)?;
            writeln!(out, "wrote {}", path.display()).map_err(CliError::io)
        }
    }
}

pub fn cmd_run(cfg: &ExperimentConfig, exec: Execution, out: &mut dyn Write) -> Result<(), CliError> {
    let bench = cfg.benchmark()?;
    let settings = cfg.training(&bench);
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)
        .with_context(|| format!("{}", dir.display()))
        .map_err(CliError::io)?;
    for mode in cfg.experiment.mode.modes() {
        let res = run_experiment(&bench, mode, &settings, &cfg.experiment.seeds, exec)
            .map_err(CliError::validation)?;
        let path = dir.join(format!("{}_{}.csv", bench.name, mode));
        let file = File::create(&path)
            .with_context(|| format!("{}", path.display()))
            .map_err(CliError::io)?;
        let mut w = BufWriter::new(file);
        write_csv(&mut w, &res.curves, cfg.experiment.csv_every)
            .and_then(|_| w.flush())
            .with_context(|| format!("{}", path.display()))
            .map_err(CliError::io)?;
        let line = match res.summary {
            Some(s) => format!(
                "{} {}: final raw mean {:.4}, final normalized mean {:.4}, final-quartile std {:.4} ({})",
                bench.name,
                mode,
                s.final_raw,
                s.final_smoothed,
                s.final_quartile_std,
                path.display()
            ),
            None => format!("{} {}: no episodes ({})", bench.name, mode, path.display()),
        };
        writeln!(out, "{line}").map_err(CliError::io)?;
    }
    Ok(())
}

pub fn cmd_oracle(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let bench = cfg.benchmark()?;
    let shaper = bench.shaper(cfg.shaping_config()).map_err(CliError::validation)?;
    let grids = vec![Arc::clone(&bench.grid); bench.agents];
    let product = build_product(&bench.automaton, &grids, &cfg.shaping_config(), cfg.oracle.state_cap).map_err(
        |e| match e {
            OracleError::CapExceeded { .. } => CliError::validation(anyhow!("{e}")),
            other => CliError::validation(other),
        },
    )?;
    writeln!(out, "product: {} states", product.state_count()).map_err(CliError::io)?;
    let mut diverged = 0;
    for &seed in &cfg.experiment.seeds {
        let report = check_equivalence(&shaper, &product, cfg.oracle.steps, cfg.oracle.episode_length, seed);
        writeln!(out, "{report}").map_err(CliError::io)?;
        if !report.is_equivalent() {
            diverged += 1;
        }
    }
    if diverged > 0 {
        return Err(CliError {
            code: EXIT_DIVERGENCE,
            error: anyhow!("{diverged} of {} seeds diverged", cfg.experiment.seeds.len()),
        });
    }
    Ok(())
}
