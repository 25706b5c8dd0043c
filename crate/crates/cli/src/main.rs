//! `gseq`: validate, run, transform and cross-check machine descriptions.
//!
//! Exit codes: 0 success, 1 error, 2 budget exhausted, 3 cross-check
//! disagreement.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gseq::alpha::{crosscheck, simulate_alpha_as_gseqap, AlphaMachineSpec, AlphaOutcome};
use gseq::ordinal::{OrdinalNotation, OrdinalSet};
use gseq::runtime::{run, Budget, FailReason, Outcome, RunMode};
use gseq::specfile::{parse_spec, print_spec};
use gseq::transforms::{code_pair, compile_tm, compose, dovetail, flip, lift, TmSpec};
use gseq::validator::{check_machine, CheckOptions, MachineSpec, ValidatedMachine};

const EXIT_ERROR: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_DISAGREE: u8 = 3;

#[derive(Parser)]
#[command(name = "gseq", version, about = "Transfinite sequential machines")]
struct Cli {
    /// Accept a finite base set as a surrogate for a limit ordinal.
    #[arg(long, global = true)]
    allow_finite_kappa: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a machine description and print a summary or violation records.
    Validate { spec: PathBuf },
    /// Run a machine on an input set.
    Run {
        spec: PathBuf,
        /// Input set, e.g. `{1,3}` or `co{0}`.
        #[arg(long, default_value = "{}")]
        input: String,
        /// Successor steps allowed per segment between limits.
        #[arg(long, env = "GSEQ_BUDGET", default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 8)]
        limit_jumps: u64,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        /// Write the run trace here, one record per line.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build a new machine description from existing ones.
    Transform {
        #[command(subcommand)]
        kind: Transform,
        /// Output file; standard output when absent.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Compare an α-machine program with its simulation on a range of
    /// inputs `{k}`.
    Crosscheck {
        program: PathBuf,
        /// `a..b`, `a..=b` or a single number.
        #[arg(long, default_value = "0..=12")]
        inputs: String,
        /// Oracle set shared by every input.
        #[arg(long, default_value = "{}")]
        oracle: String,
        /// Use this machine description instead of the built simulation.
        #[arg(long)]
        sim: Option<PathBuf>,
        /// Step cap for the direct α-machine run.
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, env = "GSEQ_BUDGET", default_value_t = 100_000)]
        budget: u64,
    },
}

#[derive(Subcommand)]
enum Transform {
    /// Turing-machine table to machine description.
    CompileTm { tm: PathBuf },
    /// Run the first machine, then the second on its output.
    Compose { first: PathBuf, second: PathBuf },
    /// Complement the output once the machine stops changing.
    Flip { spec: PathBuf },
    /// Collect the βs on which the machine stops for input `⟨{β}, I⟩`.
    Dovetail { spec: PathBuf },
    /// Re-host on a larger base set.
    Lift {
        spec: PathBuf,
        /// Ordinal or `finite:N`.
        #[arg(long)]
        kappa: String,
    },
    /// α-machine program to its simulating machine description.
    Alpha { program: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Short,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = CheckOptions {
        allow_finite_kappa: cli.allow_finite_kappa,
        ..CheckOptions::default()
    };
    let result = match cli.cmd {
        Cmd::Validate { spec } => validate(&spec, &opts),
        Cmd::Run {
            spec,
            input,
            budget,
            limit_jumps,
            mode,
            trace,
        } => run_cmd(&spec, &opts, &input, budget, limit_jumps, mode, trace.as_deref()),
        Cmd::Transform { kind, output } => transform(kind, output.as_deref()),
        Cmd::Crosscheck {
            program,
            inputs,
            oracle,
            sim,
            steps,
            budget,
        } => crosscheck_cmd(&program, &opts, &inputs, &oracle, sim.as_deref(), steps, budget),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_spec(path: &Path) -> Result<MachineSpec> {
    parse_spec(&read(path)?).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Parses and validates, printing violation records on failure.
fn load_machine(path: &Path, opts: &CheckOptions) -> Result<std::result::Result<ValidatedMachine, u8>> {
    let spec = load_spec(path)?;
    Ok(check_machine(&spec, opts).map_err(|violations| {
        for v in violations {
            println!("{}", v.record());
        }
        EXIT_ERROR
    }))
}

fn validate(path: &Path, opts: &CheckOptions) -> Result<u8> {
    match load_machine(path, opts)? {
        Ok(m) => {
            let params: Vec<String> = m.spec.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "ok\tkappa={}\tflavor={}\tsymbols={}\tparams={}",
                m.spec.kappa,
                m.spec.flavor,
                m.spec.sigma.len(),
                params.join(",")
            );
            Ok(0)
        }
        Err(code) => Ok(code),
    }
}

fn run_cmd(
    path: &Path,
    opts: &CheckOptions,
    input: &str,
    steps: u64,
    limit_jumps: u64,
    mode: Mode,
    trace: Option<&Path>,
) -> Result<u8> {
    let m = match load_machine(path, opts)? {
        Ok(m) => m,
        Err(code) => return Ok(code),
    };
    let input: OrdinalSet = input.parse().map_err(|e| anyhow!("bad input set: {e}"))?;
    let budget = Budget {
        max_steps_per_segment: steps,
        max_limit_jumps: limit_jumps,
        ..Budget::default()
    };
    let mode = match mode {
        Mode::Full => RunMode::Full,
        Mode::Short => RunMode::Short,
    };
    let tr = run(&m, &input, &budget, mode)?;
    if let Some(file) = trace {
        fs::write(file, tr.dump()).with_context(|| format!("cannot write {}", file.display()))?;
    }
    for w in &tr.warnings {
        eprintln!("warning: {w}");
    }
    Ok(match &tr.outcome {
        Outcome::Terminated { output, length, .. } => {
            println!("output\t{output}");
            println!("length\t{length}");
            println!("short\t{}", tr.is_short(&m.spec.kappa));
            0
        }
        Outcome::OutOfBudget => {
            println!("out-of-budget\tsteps={}", tr.successor_steps);
            EXIT_BUDGET
        }
        Outcome::LimitUnresolved(at) => {
            println!("limit-unresolved\tat={at}");
            EXIT_BUDGET
        }
        Outcome::Failed(FailReason::NotShort) => {
            println!("not-short\tthe clock reached {}", m.spec.kappa);
            EXIT_ERROR
        }
    })
}

fn parse_kappa(text: &str) -> Result<OrdinalNotation> {
    match text.strip_prefix("finite:") {
        Some(n) => Ok(OrdinalNotation::nat(n.trim().parse().with_context(|| format!("bad size `{n}`"))?)),
        None => text.parse().map_err(|e| anyhow!("bad kappa: {e}")),
    }
}

fn transform(kind: Transform, output: Option<&Path>) -> Result<u8> {
    let spec = match kind {
        Transform::CompileTm { tm } => {
            let tm: TmSpec = read(&tm)?.parse().map_err(|e| anyhow!("{}: {e}", tm.display()))?;
            compile_tm(&tm)
        }
        Transform::Compose { first, second } => compose(&load_spec(&first)?, &load_spec(&second)?)?,
        Transform::Flip { spec } => flip(&load_spec(&spec)?),
        Transform::Dovetail { spec } => dovetail(&load_spec(&spec)?),
        Transform::Lift { spec, kappa } => lift(&load_spec(&spec)?, &parse_kappa(&kappa)?)?,
        Transform::Alpha { program } => simulate_alpha_as_gseqap(&load_program(&program)?),
    };
    let text = print_spec(&spec);
    match output {
        Some(file) => fs::write(file, text).with_context(|| format!("cannot write {}", file.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn load_program(path: &Path) -> Result<AlphaMachineSpec> {
    read(path)?.parse().map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// `a..b`, `a..=b` or `k`.
fn parse_range(text: &str) -> Result<Vec<u64>> {
    let num = |s: &str| s.trim().parse::<u64>().with_context(|| format!("bad range bound `{s}`"));
    if let Some((a, b)) = text.split_once("..=") {
        return Ok((num(a)?..=num(b)?).collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    Ok(vec![num(text)?])
}

fn show(set: &BTreeSet<u64>) -> String {
    let items: Vec<String> = set.iter().map(u64::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn crosscheck_cmd(
    path: &Path,
    opts: &CheckOptions,
    inputs: &str,
    oracle: &str,
    sim: Option<&Path>,
    steps: u64,
    budget: u64,
) -> Result<u8> {
    let program = load_program(path)?;
    let sim_spec = match sim {
        Some(p) => load_spec(p)?,
        None => simulate_alpha_as_gseqap(&program),
    };
    let m = match check_machine(&sim_spec, opts) {
        Ok(m) => m,
        Err(violations) => {
            for v in violations {
                println!("{}", v.record());
            }
            bail!("the simulating machine is not valid");
        }
    };
    let oracle: OrdinalSet = oracle.parse().map_err(|e| anyhow!("bad oracle set: {e}"))?;
    if !oracle.is_finite() {
        bail!("the oracle must be finite");
    }
    let o: BTreeSet<u64> = oracle
        .support
        .iter()
        .map(|a| a.as_nat().ok_or_else(|| anyhow!("oracle element {a} is not below w")))
        .collect::<Result<_>>()?;
    let coded: Vec<BTreeSet<u64>> = parse_range(inputs)?
        .into_iter()
        .map(|k| code_pair(&BTreeSet::from([k]), &o))
        .collect();
    let budget = Budget {
        max_steps_per_segment: budget,
        max_limit_jumps: 2,
        record_events: false,
        ..Budget::default()
    };
    let rows = crosscheck(&program, &m, &coded, steps, &budget)?;
    println!("input\treference\tsimulated\tagree");
    let mut bad = Vec::new();
    for (k, row) in parse_range(inputs)?.into_iter().zip(&rows) {
        let reference = match &row.reference {
            AlphaOutcome::Halted { output, .. } => show(output),
            AlphaOutcome::NotHalted { .. } => "diverges".into(),
        };
        let simulated = row.simulated.as_ref().map_or("no-short-run".into(), show);
        println!("{{{k}}}\t{reference}\t{simulated}\t{}", if row.agree { "yes" } else { "NO" });
        if !row.agree {
            bad.push(k);
        }
    }
    if bad.is_empty() {
        Ok(0)
    } else {
        for k in bad {
            eprintln!("disagreement on input {{{k}}} with oracle {oracle}");
        }
        Ok(EXIT_DISAGREE)
    }
}
