//! Subcommand definitions and execution.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use nfst::epsilon::eliminate_epsilon;
use nfst::fst::{has_errors, validate, Fst, Severity};
use nfst::generate::{
    biased_stream, grid_for, random_compiled, rng_from_seed, GenConfig,
};
use nfst::overlay::{
    compile, image_to_json, load_image, save_image, GridSpec, Neighborhood, OverlayImage,
};
use nfst::resource::{scaling_sweep, to_csv};
use nfst::ruleset::{parse_ruleset, render_ruleset};
use nfst::sim::{
    apply_output_policy, run_stream, EngineState, OutputPolicy, SubSequenceResult,
};
use nfst::verify::{check_stream, VerifyFailure};

use crate::exit::{self, CliError, EXIT_CODE_HELP};
use crate::report::{escape_bytes, RunReport};

/// Compile transducer rulesets onto a PE-array overlay, stream input
/// through the simulated array, verify it against the reference
/// interpreter, and report resource costs.
#[derive(Debug, Parser)]
#[command(name = "nfst", version, after_help = EXIT_CODE_HELP)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    Compile(CompileCmd),
    Run(RunCmd),
    Verify(VerifyCmd),
    Sweep(SweepCmd),
}

/// Compile a ruleset into an overlay image.
///
/// ε-transitions are eliminated automatically before placement. The
/// machine must be length-preserving (one output byte per input byte).
#[derive(Debug, Args)]
struct CompileCmd {
    /// Ruleset file.
    ruleset: PathBuf,
    /// Grid rows.
    #[arg(long, default_value_t = 4)]
    rows: u16,
    /// Grid columns.
    #[arg(long, default_value_t = 4)]
    cols: u16,
    /// Neighbor model for the switch fabric.
    #[arg(long, value_enum, default_value_t = NeighborhoodArg::Moore8)]
    neighborhood: NeighborhoodArg,
    /// Output image path.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write a human-readable JSON dump of the image.
    #[arg(long)]
    json_dump: Option<PathBuf>,
}

/// Run an input stream through a compiled image.
#[derive(Debug, Args)]
struct RunCmd {
    /// Overlay image file.
    image: PathBuf,
    /// Input file, read as raw bytes.
    input: PathBuf,
    /// Sub-sequence (window) length.
    #[arg(short)]
    n: usize,
    /// Report every output per window, or only the smallest.
    #[arg(long, value_enum, default_value_t = PolicyArg::First)]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Print a per-symbol engine trace to stderr (runs windows
    /// sequentially).
    #[arg(long)]
    trace: bool,
}

/// Check overlay-vs-reference equivalence on random inputs.
///
/// With a ruleset, its compiled image (or --image) is exercised against the
/// reference interpreter. With --random, fresh random machines are drawn
/// per case. The seed is printed for reproducibility.
#[derive(Debug, Args)]
struct VerifyCmd {
    /// Ruleset file (omit with --random).
    ruleset: Option<PathBuf>,
    /// Generate a random machine per case instead of reading a ruleset.
    #[arg(long, conflicts_with = "ruleset")]
    random: bool,
    /// Verify this image instead of compiling the ruleset.
    #[arg(long, requires = "ruleset")]
    image: Option<PathBuf>,
    /// Number of random cases.
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest window length to draw.
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    /// Grid rows for compiling the ruleset (default: auto-sized).
    #[arg(long)]
    rows: Option<u16>,
    /// Grid columns for compiling the ruleset (default: auto-sized).
    #[arg(long)]
    cols: Option<u16>,
}

/// Emit a resource-cost table (CSV) over a list of grid sizes.
#[derive(Debug, Args)]
struct SweepCmd {
    /// Comma-separated grid sizes, e.g. 4x4,8x8,16x16.
    sizes: String,
    /// FIFO depth in activation vectors.
    #[arg(long, default_value_t = 4)]
    fifo: u64,
    /// Output CSV path (stdout if omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NeighborhoodArg {
    Moore8,
    Vonneumann4,
}

impl From<NeighborhoodArg> for Neighborhood {
    fn from(a: NeighborhoodArg) -> Neighborhood {
        match a {
            NeighborhoodArg::Moore8 => Neighborhood::Moore8,
            NeighborhoodArg::Vonneumann4 => Neighborhood::VonNeumann4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    All,
    First,
}

impl From<PolicyArg> for OutputPolicy {
    fn from(a: PolicyArg) -> OutputPolicy {
        match a {
            PolicyArg::All => OutputPolicy::All,
            PolicyArg::First => OutputPolicy::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

pub fn execute(cli: Cli) -> i32 {
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Compile(cmd) => cmd_compile(cmd, quiet),
        Command::Run(cmd) => cmd_run(cmd, quiet),
        Command::Verify(cmd) => cmd_verify(cmd, quiet),
        Command::Sweep(cmd) => cmd_sweep(cmd, quiet),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_ruleset(path: &Path) -> Result<Fst, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let fst = parse_ruleset(&text)
        .map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", path.display())))?;
    Ok(fst)
}

/// Parse, validate (warnings to stderr), and eliminate ε-transitions.
fn prepare_machine(path: &Path, quiet: bool) -> Result<Fst, CliError> {
    let fst = load_ruleset(path)?;
    let diags = validate(&fst);
    for d in &diags {
        if d.severity == Severity::Warning && !quiet {
            eprintln!("{d}");
        }
    }
    if has_errors(&diags) {
        let errors: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        return Err(CliError::new(exit::VALIDATE, errors.join("; ")));
    }
    eliminate_epsilon(&fst).map_err(|e| CliError::new(exit::VALIDATE, e.to_string()))
}

fn cmd_compile(cmd: CompileCmd, quiet: bool) -> Result<(), CliError> {
    if cmd.rows == 0 || cmd.cols == 0 {
        return Err(CliError::usage("grid dimensions must be positive"));
    }
    let fst = prepare_machine(&cmd.ruleset, quiet)?;
    let grid = GridSpec::new(cmd.rows, cmd.cols, cmd.neighborhood.into());
    let image = compile(&fst, &grid).map_err(|e| CliError::from(&e))?;
    fs::write(&cmd.out, save_image(&image))
        .map_err(|e| CliError::io(&format!("writing {}", cmd.out.display()), e))?;
    if let Some(path) = &cmd.json_dump {
        fs::write(path, image_to_json(&image))
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
    }
    if !quiet {
        println!("{} PEs occupied, {} replications", image.occupied_count(), image.replication_count());
    }
    Ok(())
}

fn cmd_run(cmd: RunCmd, _quiet: bool) -> Result<(), CliError> {
    if cmd.n == 0 {
        return Err(CliError::usage("window length must be at least 1"));
    }
    let bytes = fs::read(&cmd.image)
        .map_err(|e| CliError::io(&format!("reading {}", cmd.image.display()), e))?;
    let image = load_image(&bytes)?;
    let input = fs::read(&cmd.input)
        .map_err(|e| CliError::io(&format!("reading {}", cmd.input.display()), e))?;

    let (results, total) = if cmd.trace {
        run_traced(&image, &input, cmd.n, cmd.policy.into())?
    } else {
        run_stream(&image, &input, cmd.n, cmd.policy.into())?
    };

    let report = RunReport::new(cmd.n, image.pe_count(), &results, total);
    match cmd.format {
        FormatArg::Text => print!("{}", report.to_text()),
        FormatArg::Json => println!("{}", report.to_json()),
    }
    Ok(())
}

/// Sequential run with per-symbol tracing to stderr.
fn run_traced(
    image: &OverlayImage,
    input: &[u8],
    n: usize,
    policy: OutputPolicy,
) -> Result<(Vec<SubSequenceResult>, u64), CliError> {
    let mut results = Vec::new();
    let mut total = 0u64;
    let mut engine = EngineState::reset(image);
    engine.set_trace(true);
    for (i, window) in nfst::oracle::split_windows(input, n).enumerate() {
        let r = engine
            .run_subsequence(window)
            .map_err(|e| CliError::new(exit::ENGINE, format!("window {i}: {e}")))?;
        for line in engine.take_trace() {
            eprintln!("win={i} {line}");
        }
        total += r.cycles;
        results.push(apply_output_policy(
            SubSequenceResult { window_index: i, ..r },
            policy,
            image,
        ));
    }
    Ok((results, total))
}

fn cmd_verify(cmd: VerifyCmd, quiet: bool) -> Result<(), CliError> {
    if cmd.ruleset.is_none() && !cmd.random {
        return Err(CliError::usage("give a ruleset path or --random"));
    }
    if cmd.max_n == 0 {
        return Err(CliError::usage("--max-n must be at least 1"));
    }
    let mut rng = rng_from_seed(cmd.seed);
    println!("seed={}", cmd.seed);
    if cmd.cases == 0 {
        println!("0/0 pass (warning: no cases requested, vacuous)");
        return Ok(());
    }

    // fixed machine mode: compile once (or load the supplied image)
    let fixed: Option<(Fst, OverlayImage)> = match &cmd.ruleset {
        Some(path) => {
            let fst = prepare_machine(path, quiet)?;
            let image = match &cmd.image {
                Some(image_path) => {
                    let bytes = fs::read(image_path)
                        .map_err(|e| CliError::io(&format!("reading {}", image_path.display()), e))?;
                    load_image(&bytes)?
                }
                None => {
                    let grid = match (cmd.rows, cmd.cols) {
                        (Some(r), Some(c)) => GridSpec::moore(r, c),
                        (None, None) => grid_for(&fst),
                        _ => return Err(CliError::usage("give both --rows and --cols, or neither")),
                    };
                    compile(&fst, &grid).map_err(|e| CliError::from(&e))?
                }
            };
            Some((fst, image))
        }
        None => None,
    };

    let cfg = GenConfig::default();
    let mut failures = 0usize;
    let mut first_failure: Option<(Fst, Vec<u8>, usize, VerifyFailure)> = None;
    for _ in 0..cmd.cases {
        let (fst, image) = match &fixed {
            Some((f, i)) => (f.clone(), i.clone()),
            None => random_compiled(&mut rng, &cfg, 1000),
        };
        let n = rng_range(&mut rng, 1, cmd.max_n);
        let window_count = rng_range(&mut rng, 1, 8);
        let mut input = biased_stream(&mut rng, &fst, n, window_count);
        // sometimes leave a trailing remainder window
        if n > 1 && !input.is_empty() && rng_range(&mut rng, 0, 3) == 0 {
            let cut = rng_range(&mut rng, 1, n - 1);
            input.truncate(input.len().saturating_sub(cut));
        }
        if let Err(failure) = check_stream(&fst, &image, &input, n) {
            failures += 1;
            if first_failure.is_none() {
                first_failure = Some((fst, input, n, failure));
            }
        }
    }

    let passed = cmd.cases - failures;
    if failures == 0 {
        println!("{passed}/{} pass", cmd.cases);
        Ok(())
    } else {
        println!("{passed}/{} pass, {failures} fail", cmd.cases);
        let (fst, input, n, failure) = first_failure.expect("failures > 0");
        println!("first counterexample:");
        println!("  n={n}");
        println!("  input={}", escape_bytes(&input));
        println!("  {failure}");
        println!("  machine:");
        for line in render_ruleset(&fst).lines() {
            println!("    {line}");
        }
        Err(CliError::new(exit::VERIFY_FAILED, format!("{failures} case(s) failed")))
    }
}

fn rng_range(rng: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    rng.random_range(lo..=hi)
}

fn cmd_sweep(cmd: SweepCmd, quiet: bool) -> Result<(), CliError> {
    let sizes = parse_sizes(&cmd.sizes)?;
    let csv = to_csv(&scaling_sweep(&sizes, cmd.fifo));
    match &cmd.out {
        Some(path) => {
            fs::write(path, &csv)
                .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
            if !quiet {
                println!("wrote {} rows to {}", sizes.len(), path.display());
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_sizes(spec: &str) -> Result<Vec<GridSpec>, CliError> {
    let mut sizes = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let Some((r, c)) = part.split_once(['x', 'X']) else {
            return Err(CliError::usage(format!("bad grid size `{part}` (expected RxC)")));
        };
        let rows: u16 = r
            .parse()
            .map_err(|_| CliError::usage(format!("bad grid size `{part}` (expected RxC)")))?;
        let cols: u16 = c
            .parse()
            .map_err(|_| CliError::usage(format!("bad grid size `{part}` (expected RxC)")))?;
        if rows == 0 || cols == 0 {
            return Err(CliError::usage(format!("grid size `{part}` must be positive")));
        }
        sizes.push(GridSpec::moore(rows, cols));
    }
    if sizes.is_empty() {
        return Err(CliError::usage("no grid sizes given"));
    }
    Ok(sizes)
}
