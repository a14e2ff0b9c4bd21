//! Command line front end: ingest problem documents, run the
//! check / build / solve / extract / verify pipeline, generate oracle
//! instances with known ground truth, and emit deterministic reports.
//!
//! Exit codes: 0 success or solved; 1 parse or schema error; 2 necessary
//! condition failure; 3 no canonical solution; 4 undecided (outside the
//! implemented case analysis).

mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use truncmom::extension::{canonical_from_extension, extend_via_solution};
use truncmom::hilbert::{build_space, operator_blocks, AssociatedSpace, OperatorBlocks};
use truncmom::moments::{AtomicMeasure, MomentSequence};
use truncmom::multiindex::AdmissibleSet;
use truncmom::problem;
use truncmom::solver::{necessary_block_checks, solve_canonical, SolveStatus};
use truncmom::spectral::{extract_measure, joint_diagonalize, unit_class_complex, verify_solution};

use report::{CheckReport, MatrixDump, MeasureDump, RoundtripReport, SolveReport, Tolerances};

const EXIT_PARSE: u8 = 1;
const EXIT_CONDITIONS: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;
const EXIT_UNDECIDED: u8 = 4;

#[derive(Parser)]
#[command(name = "truncmom", about = "Canonical solutions of truncated moment problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the necessary solvability conditions and report the space
    /// dimensions.
    Check {
        file: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the full pipeline: check, build, solve, extract the measure and
    /// verify it against the prescribed moments.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Include the solver's branch trail in the report.
        #[arg(long)]
        trace_branches: bool,
    },
    /// Generate a problem document from an explicit or seeded random atomic
    /// measure, along with the ground-truth measure document.
    Oracle(OracleOpts),
    /// Solve, extend the solution to the close extension, rebuild a solution
    /// from the extension and compare moments.
    Roundtrip {
        file: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        trace_branches: bool,
    },
}

#[derive(Args)]
struct CommonOpts {
    /// Relative tolerance for rank decisions.
    #[arg(long, default_value_t = truncmom::RANK_TOL)]
    tol_rank: f64,
    /// Relative tolerance for solver consistency and verification.
    #[arg(long, default_value_t = truncmom::SOLVE_TOL)]
    tol_solve: f64,
    /// Report format.
    #[arg(long, value_parser = ["text", "machine"], default_value = "text")]
    format: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleOpts {
    /// Ambient dimension of the measure.
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    /// Truncation: "triangular:R" or "rectangular:d1,d2,...".
    #[arg(long, default_value = "triangular:2")]
    truncation: String,
    /// Explicit atoms "x1,..,xn,mass;x1,..,xn,mass;...". Overrides --seed.
    #[arg(long)]
    atoms: Option<String>,
    /// Seed for random atom generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random atoms when --atoms is not given.
    #[arg(long, default_value_t = 3)]
    num_atoms: usize,
    /// Half-width of the sampling cube for random atoms.
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    /// Write the problem document here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the generating measure as ground truth.
    #[arg(long)]
    measure_output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check { file, common } => cmd_check(&file, &common),
        Command::Solve { file, common, trace_branches } => cmd_solve(&file, &common, trace_branches),
        Command::Oracle(opts) => cmd_oracle(&opts),
        Command::Roundtrip { file, common, trace_branches } => {
            cmd_roundtrip(&file, &common, trace_branches)
        }
    };
    match code {
        Ok(c) => c,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail<T>(code: u8, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure { code, message: message.into() })
}

fn load_sequence(path: &PathBuf) -> Result<MomentSequence, Failure> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())),
    };
    let doc = match problem::parse_problem(&text) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", path.display())),
    };
    match doc.to_sequence() {
        Ok(s) => Ok(s),
        Err(e) => fail(EXIT_PARSE, format!("{}: {e}", path.display())),
    }
}

fn emit(common: &CommonOpts, text: String, machine: impl serde::Serialize) -> Result<(), Failure> {
    let body = if common.format == "machine" {
        let mut s = serde_json::to_string_pretty(&machine)
            .map_err(|e| Failure { code: EXIT_PARSE, message: e.to_string() })?;
        s.push('\n');
        s
    } else {
        text
    };
    match &common.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure { code: EXIT_PARSE, message: format!("cannot write: {e}") }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

struct Analysis {
    sequence: MomentSequence,
    space: Option<AssociatedSpace>,
    blocks: Option<OperatorBlocks>,
    report: CheckReport,
}

/// Shared check phase: necessary conditions, space dimensions, block checks.
/// Returns the analysis even when checks fail so `check` can still report.
fn analyze(s: MomentSequence, common: &CommonOpts) -> Result<Analysis, Failure> {
    let conditions = s
        .necessary_conditions(common.tol_solve)
        .map_err(|e| Failure { code: EXIT_PARSE, message: e.to_string() })?;
    let space = build_space(&s, common.tol_rank).ok();
    let blocks = space.as_ref().and_then(|sp| operator_blocks(sp, &s).ok());
    let block_checks_ok = blocks.as_ref().and_then(|b| {
        (s.dim() == 2).then(|| necessary_block_checks(b, common.tol_solve))
    });
    let truncation = if s.set().is_triangular() {
        format!("triangular {}", s.set().max_degree())
    } else if let Some(sides) = problem::rectangular_sides(s.set()) {
        let list: Vec<String> = sides.iter().map(|d| d.to_string()).collect();
        format!("rectangular {}", list.join(" "))
    } else {
        format!("explicit ({} elements)", s.set().len())
    };
    let all_ok = conditions.all_ok() && block_checks_ok.unwrap_or(true) && space.is_some();
    let report = CheckReport {
        dimension: s.dim(),
        truncation,
        moment_count: s.set().minkowski_double().len(),
        gamma_size: s.set().len(),
        tolerances: Tolerances { rank: common.tol_rank, solve: common.tol_solve },
        psd_ok: conditions.psd_ok,
        min_eigenvalue: report::round12(conditions.min_eigenvalue),
        kernel_ok: conditions.kernel_ok.clone(),
        dim_h: space.as_ref().map(|sp| sp.dim_h()),
        dim_h0: space.as_ref().map(|sp| sp.dim_h0()),
        index: space.as_ref().map(|sp| sp.index()),
        block_checks_ok,
        all_ok,
    };
    Ok(Analysis { sequence: s, space, blocks, report })
}

fn cmd_check(file: &PathBuf, common: &CommonOpts) -> Result<ExitCode, Failure> {
    let s = load_sequence(file)?;
    let analysis = analyze(s, common)?;
    let mut text = String::new();
    analysis.report.render_text(&mut text);
    emit(common, text, &analysis.report)?;
    Ok(if analysis.report.all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONDITIONS)
    })
}

fn run_solve(analysis: &Analysis, common: &CommonOpts) -> Result<(SolveReport, u8), Failure> {
    if !analysis.report.all_ok {
        return fail(EXIT_CONDITIONS, "necessary conditions failed; run check for details");
    }
    let space = analysis.space.as_ref().expect("all_ok implies the space was built");
    let blocks = analysis
        .blocks
        .as_ref()
        .ok_or_else(|| Failure {
            code: EXIT_UNDECIDED,
            message: "operator blocks unavailable for this indexation".into(),
        })?;
    let outcome = match solve_canonical(space, blocks, common.tol_solve) {
        Ok(o) => o,
        Err(truncmom::Error::NotAdmissible { reason }) => {
            return fail(EXIT_UNDECIDED, format!("outside the implemented case analysis: {reason}"))
        }
        Err(truncmom::Error::DimensionMismatch { .. }) => {
            return fail(
                EXIT_UNDECIDED,
                "the index > 0 search is implemented for two-dimensional problems",
            )
        }
        Err(e) => return fail(EXIT_CONDITIONS, e.to_string()),
    };
    let status = match outcome.status {
        SolveStatus::Solved => "solved",
        SolveStatus::NoCanonicalSolution => "no-canonical-solution",
        SolveStatus::Undecided => "undecided",
    };
    let mut rep = SolveReport {
        check: analysis.report.clone(),
        status: status.into(),
        diagnostics: outcome.diagnostics.clone(),
        corner_blocks: None,
        extensions: None,
        measure: None,
        verification_deviation: None,
        verification_pass: None,
    };
    let code = match outcome.status {
        SolveStatus::Solved => 0,
        SolveStatus::NoCanonicalSolution => EXIT_NO_SOLUTION,
        SolveStatus::Undecided => EXIT_UNDECIDED,
    };
    if outcome.status == SolveStatus::Solved {
        let pair = outcome.certificate.as_ref().expect("solved outcome has corners");
        rep.corner_blocks = Some(vec![
            MatrixDump::from_cmat(&pair.c1),
            MatrixDump::from_cmat(&pair.c2),
        ]);
        let exts = outcome.extensions.as_ref().expect("solved outcome has extensions");
        rep.extensions = Some(exts.iter().map(MatrixDump::from_cmat).collect());
        let spectrum = joint_diagonalize(exts, common.tol_solve)
            .map_err(|e| Failure { code: EXIT_UNDECIDED, message: e.to_string() })?;
        let mu = extract_measure(&spectrum, &unit_class_complex(space))
            .map_err(|e| Failure { code: EXIT_UNDECIDED, message: e.to_string() })?;
        let verification = verify_solution(&mu, &analysis.sequence, common.tol_solve);
        rep.measure = Some(MeasureDump::from_measure(&mu));
        rep.verification_deviation = Some(report::round12(verification.max_deviation));
        rep.verification_pass = Some(verification.pass);
    }
    Ok((rep, code))
}

fn cmd_solve(file: &PathBuf, common: &CommonOpts, trace: bool) -> Result<ExitCode, Failure> {
    let s = load_sequence(file)?;
    let analysis = analyze(s, common)?;
    let (rep, code) = run_solve(&analysis, common)?;
    emit(common, rep.render_text(trace), &rep)?;
    Ok(ExitCode::from(code))
}

fn cmd_roundtrip(file: &PathBuf, common: &CommonOpts, trace: bool) -> Result<ExitCode, Failure> {
    let s = load_sequence(file)?;
    let analysis = analyze(s, common)?;
    let (solve_rep, code) = run_solve(&analysis, common)?;
    let mut rep = RoundtripReport {
        solve: solve_rep,
        extension_dimensionally_stable: None,
        roundtrip_deviation: None,
        roundtrip_pass: None,
        skipped: code != 0,
    };
    let mut final_code = code;
    if code == 0 {
        let measure = rep.solve.measure.as_ref().expect("solved report has a measure");
        let atoms: Vec<(Vec<f64>, f64)> = measure
            .atoms
            .iter()
            .map(|a| (a.point.clone(), a.mass))
            .collect();
        let mu = AtomicMeasure::new(analysis.sequence.dim(), atoms)
            .map_err(|e| Failure { code: EXIT_UNDECIDED, message: e.to_string() })?;
        let ext = extend_via_solution(&mu, analysis.sequence.set())
            .map_err(|e| Failure { code: EXIT_UNDECIDED, message: e.to_string() })?;
        let stable = build_space(ext.extended(), common.tol_rank)
            .map(|sp| sp.is_dimensionally_stable())
            .unwrap_or(false);
        rep.extension_dimensionally_stable = Some(stable);
        if stable {
            match canonical_from_extension(&ext) {
                Ok(back) => {
                    let dev = back.moment_deviation(ext.extended());
                    let pass = dev <= 1e-7 * (1.0 + analysis.sequence.mass());
                    rep.roundtrip_deviation = Some(report::round12(dev));
                    rep.roundtrip_pass = Some(pass);
                    if !pass {
                        final_code = EXIT_UNDECIDED;
                    }
                }
                Err(e) => return fail(EXIT_UNDECIDED, e.to_string()),
            }
        } else {
            final_code = EXIT_UNDECIDED;
        }
    }
    emit(common, rep.render_text(trace), &rep)?;
    Ok(ExitCode::from(final_code))
}

fn parse_truncation(arg: &str, dim: usize) -> Result<AdmissibleSet, Failure> {
    let (kind, args) = arg
        .split_once(':')
        .ok_or_else(|| Failure {
            code: EXIT_PARSE,
            message: "truncation must look like triangular:R or rectangular:d1,d2".into(),
        })?;
    match kind {
        "triangular" => {
            let r: u32 = args.parse().map_err(|_| Failure {
                code: EXIT_PARSE,
                message: format!("bad degree '{args}'"),
            })?;
            Ok(AdmissibleSet::triangular(dim, r))
        }
        "rectangular" => {
            let sides: Result<Vec<u32>, _> = args.split(',').map(|a| a.parse()).collect();
            let sides = sides.map_err(|_| Failure {
                code: EXIT_PARSE,
                message: format!("bad side list '{args}'"),
            })?;
            if sides.len() != dim {
                return fail(EXIT_PARSE, format!("expected {dim} side lengths"));
            }
            Ok(AdmissibleSet::rectangular(&sides))
        }
        other => fail(EXIT_PARSE, format!("unknown truncation kind '{other}'")),
    }
}

fn parse_atoms(arg: &str, dim: usize) -> Result<Vec<(Vec<f64>, f64)>, Failure> {
    let mut atoms = Vec::new();
    for part in arg.split(';') {
        let fields: Result<Vec<f64>, _> = part.split(',').map(|f| f.trim().parse()).collect();
        let fields = fields.map_err(|_| Failure {
            code: EXIT_PARSE,
            message: format!("bad atom '{part}'"),
        })?;
        if fields.len() != dim + 1 {
            return fail(
                EXIT_PARSE,
                format!("atom '{part}' needs {dim} coordinates and a mass"),
            );
        }
        let (point, mass) = fields.split_at(dim);
        atoms.push((point.to_vec(), mass[0]));
    }
    Ok(atoms)
}

fn cmd_oracle(opts: &OracleOpts) -> Result<ExitCode, Failure> {
    if opts.dimension == 0 || opts.dimension > 8 {
        return fail(EXIT_PARSE, "dimension must be between 1 and 8");
    }
    let set = parse_truncation(&opts.truncation, opts.dimension)?;
    let mu = match &opts.atoms {
        Some(arg) => {
            let atoms = parse_atoms(arg, opts.dimension)?;
            AtomicMeasure::new(opts.dimension, atoms)
                .map_err(|e| Failure { code: EXIT_PARSE, message: e.to_string() })?
        }
        None => {
            let mut rng = truncmom::oracle::SeedRng::new(opts.seed);
            truncmom::oracle::random_measure(&mut rng, opts.dimension, opts.num_atoms, opts.extent)
        }
    };
    let s = MomentSequence::from_measure(set, &mu)
        .map_err(|e| Failure { code: EXIT_PARSE, message: e.to_string() })?;
    let doc = problem::write_problem(&s);
    match &opts.output {
        Some(path) => fs::write(path, doc)
            .map_err(|e| Failure { code: EXIT_PARSE, message: format!("cannot write: {e}") })?,
        None => print!("{doc}"),
    }
    if let Some(path) = &opts.measure_output {
        fs::write(path, problem::write_measure(&mu))
            .map_err(|e| Failure { code: EXIT_PARSE, message: format!("cannot write: {e}") })?;
    }
    Ok(ExitCode::SUCCESS)
}
