use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fplds::lds::parse_rational;
use fplds::minsky::{self, MinskyMachine};
use fplds::omega::{self, BuchiAutomaton, CheckOptions, Verdict};
use fplds::periodicity::{self, DetectOptions, PeriodicityError};
use fplds::predicates::parse_targets;
use fplds::reach::{self, ReachError, ReachMode, ReachOutcome};
use fplds::structure::{self, PeriodMode};
use fplds::{FpFormat, Lds, TieRule};

const REFUSAL: &str = "refused: the system has negative entries; \
    reachability and model checking are undecidable for such systems in general";

#[derive(Parser)]
#[command(
    name = "fplds",
    version,
    about = "Linear dynamical systems under floating-point rounding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base; must agree with the system file header.
    #[arg(long, global = true)]
    base: Option<u32>,
    /// Precision p; must agree with the system file header.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Tie rule: half-away, half-even, half-up or half-down.
    #[arg(long, global = true)]
    tie: Option<TieRule>,
    /// Step cap for pseudo-period detection.
    #[arg(long, global = true, default_value_t = 100_000)]
    cap: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rounded orbit x(0) .. x(steps).
    Simulate {
        system: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: u64,
    },
    /// Print the SCC decomposition with periods.
    Structure {
        system: PathBuf,
        /// Use the lcm of simple cycle lengths instead of their gcd.
        #[arg(long)]
        cycle_lcm: bool,
    },
    /// Compute and verify a pseudo-period certificate.
    Certificate { system: PathBuf },
    /// Decide whether a vector occurs on the orbit.
    Reach {
        system: PathBuf,
        /// Target vector, whitespace separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Scan only this many steps instead of deciding exactly.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Model check the orbit against a Büchi automaton over target letters.
    Check {
        system: PathBuf,
        targets: PathBuf,
        automaton: PathBuf,
        /// Start the characteristic word at x(1).
        #[arg(long)]
        skip_initial: bool,
    },
    /// Compile a two-counter machine into a rounded system.
    CompileMinsky {
        machine: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a machine and its compiled system side by side.
    Cosim {
        machine: PathBuf,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
    },
}

/// Exit statuses.
const FALSE: u8 = 1;
const USAGE: u8 = 2;
const REFUSED: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn usage(message: impl Display) -> Self {
        Self::new(USAGE, message)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

impl Cli {
    fn load_system(&self, path: &Path) -> Result<Lds, Failure> {
        let lds = Lds::parse(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let fmt = lds.format();
        if let Some(b) = self.base.filter(|&b| b != fmt.base()) {
            return Err(Failure::usage(format!(
                "--base {b} contradicts the file header base={}",
                fmt.base()
            )));
        }
        if let Some(p) = self.precision.filter(|&p| p != fmt.precision()) {
            return Err(Failure::usage(format!(
                "--precision {p} contradicts the file header p={}",
                fmt.precision()
            )));
        }
        match self.tie {
            Some(t) if fmt.tie() != TieRule::default() && fmt.tie() != t => Err(Failure::usage(format!(
                "--tie {t} contradicts the file header tie={}",
                fmt.tie()
            ))),
            Some(t) => {
                let f = FpFormat::with_tie(fmt.base(), fmt.precision(), t).map_err(Failure::usage)?;
                Ok(lds.with_format(f))
            }
            None => Ok(lds),
        }
    }

    fn detect(&self) -> DetectOptions {
        DetectOptions {
            cap: self.cap,
            ..DetectOptions::default()
        }
    }

    fn machine(&self) -> bool {
        self.format == Format::Machine
    }
}

fn periodicity_failure(e: PeriodicityError) -> Failure {
    match e {
        PeriodicityError::NegativeEntries => Failure::new(REFUSED, REFUSAL),
        PeriodicityError::Parse { .. } => Failure::usage(e),
        e => Failure::new(FALSE, e),
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Simulate { system, steps } => {
            let lds = cli.load_system(system)?;
            for pt in lds.orbit().take(*steps as usize + 1) {
                let cells: Vec<String> = pt.v.iter().map(ToString::to_string).collect();
                if cli.machine() {
                    println!("orbit t={} v={}", pt.t, cells.join(","));
                } else {
                    println!("{} {}", pt.t, cells.join(" "));
                }
            }
            Ok(0)
        }
        Command::Structure { system, cycle_lcm } => {
            let lds = cli.load_system(system)?;
            let mode = if *cycle_lcm {
                PeriodMode::SimpleCycleLcm
            } else {
                PeriodMode::Gcd
            };
            let dec = structure::scc_decompose_with(&lds, mode);
            if cli.machine() {
                for c in 0..dec.len() {
                    let vars: Vec<String> = dec.component(c).iter().map(|v| (v + 1).to_string()).collect();
                    let feeders: Vec<String> = dec.feeders(c).iter().map(|f| (f + 1).to_string()).collect();
                    println!(
                        "scc id={} vars={} period={} cyclic={} feeders={}",
                        c + 1,
                        vars.join(","),
                        dec.period(c),
                        dec.is_cyclic(c),
                        feeders.join(",")
                    );
                }
                println!("blowup P={}", dec.common_period());
            } else {
                println!("{dec}");
            }
            Ok(0)
        }
        Command::Certificate { system } => {
            let lds = cli.load_system(system)?;
            let cert = periodicity::assemble_certificate(&lds, cli.detect()).map_err(periodicity_failure)?;
            let verified = periodicity::verify_certificate(&lds, &cert, 3);
            if !cli.machine() {
                print!("{cert}");
            }
            println!("{} verified={verified}", cert.summary());
            Ok(if verified { 0 } else { FALSE })
        }
        Command::Reach { system, target, steps } => {
            let lds = cli.load_system(system)?;
            let y = target
                .split_whitespace()
                .map(|c| parse_rational(c).ok_or_else(|| Failure::usage(format!("bad rational `{c}` in target"))))
                .collect::<Result<Vec<_>, _>>()?;
            let mode = steps.map_or(ReachMode::Certified, ReachMode::Bounded);
            let outcome = reach::point_reach_with(&lds, &y, mode, cli.detect()).map_err(|e| match e {
                ReachError::Periodicity(p) => periodicity_failure(p),
                e => Failure::usage(e),
            })?;
            if mode == ReachMode::Certified {
                let cert = periodicity::assemble_certificate(&lds, cli.detect()).ok();
                if let Some(cert) = cert {
                    println!("certificate {}", cert.summary());
                }
            }
            let (line, code) = match outcome {
                ReachOutcome::Reached(t) => (format!("reached t={t}"), 0),
                ReachOutcome::Never => ("never".to_string(), FALSE),
                ReachOutcome::BoundExhausted => ("not-within-bound".to_string(), FALSE),
            };
            println!("{line}");
            Ok(code)
        }
        Command::Check {
            system,
            targets,
            automaton,
            skip_initial,
        } => {
            let lds = cli.load_system(system)?;
            let targets = parse_targets(&read(targets)?).map_err(|e| Failure::usage(format!("targets: {e}")))?;
            let aut =
                BuchiAutomaton::parse(&read(automaton)?).map_err(|e| Failure::usage(format!("automaton: {e}")))?;
            let sets: Vec<_> = targets.iter().map(|t| t.set.clone()).collect();
            let opts = CheckOptions {
                detect: cli.detect(),
                skip_initial: *skip_initial,
            };
            let report = omega::model_check(&lds, &sets, &aut, opts).map_err(|e| match e {
                omega::OmegaError::Periodicity(p) => periodicity_failure(p),
                e => Failure::usage(e),
            })?;
            let summary = report.certificate.summary();
            if cli.machine() {
                println!("certificate phase_factor={} {summary}", report.phase_factor);
                for (t, z) in targets.iter().zip(&report.hitting_sets) {
                    println!("hitting name={} {z}", t.name);
                }
                println!("lasso {}", report.lasso);
            } else {
                println!("certificate (blow-up factor {}): {summary}", report.phase_factor);
                for (t, z) in targets.iter().zip(&report.hitting_sets) {
                    println!("Z({}) = {z}", t.name);
                }
                println!("word: {}", report.lasso);
            }
            println!("{}", report.verdict);
            Ok(if report.verdict == Verdict::Satisfied { 0 } else { FALSE })
        }
        Command::CompileMinsky { machine, out } => {
            let m = MinskyMachine::parse(&read(machine)?).map_err(Failure::usage)?;
            let compiled = minsky::compile(&m);
            let text = compiled.lds.to_string();
            match out {
                Some(path) => {
                    fs::write(path, &text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    println!(
                        "compiled states={} d={} step_ratio={}",
                        m.num_states(),
                        compiled.lds.dim(),
                        compiled.step_ratio
                    );
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Cosim { machine, steps } => {
            let m = MinskyMachine::parse(&read(machine)?).map_err(Failure::usage)?;
            let report = minsky::cosimulate(&m, *steps).map_err(|e| Failure::new(FALSE, e))?;
            if !cli.machine() {
                for (s, c) in report.trace.iter().enumerate() {
                    println!("{} {}", 4 * s, m.format_config(c));
                }
            }
            match (report.halted_after, report.zero_at) {
                (Some(s), Some(t)) => println!(
                    "agree boundaries={} halted_after={s} zero_at={t}",
                    report.boundaries_checked
                ),
                _ => println!("agree boundaries={} running", report.boundaries_checked),
            }
            Ok(0)
        }
    }
}
