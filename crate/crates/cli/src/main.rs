//! `ifegr`: convergence studies for immersed finite element methods with
//! gradient recovery.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ifegr_core::benchmark::{make_problem, run_level, validate_levels, ConvergenceTable, ProblemName, ProblemParams, RunOptions, TableRow, DEFAULT_MAX_N};
use ifegr_core::geometry::DEFAULT_EPS_SNAP;
use ifegr_core::system::{EdgeTermSign, Method, DEFAULT_REL_TOL};
use ifegr_core::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemArg {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Scifem,
    Pgifem,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Minus,
    Plus,
}

/// Runs a mesh-refinement study and writes the De / Die / Dre table.
///
/// The thread count follows RAYON_NUM_THREADS.
#[derive(Debug, Parser)]
#[command(name = "ifegr", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "ex1")]
    problem: ProblemArg,
    #[arg(long, value_enum, default_value = "scifem")]
    method: MethodArg,
    /// Coefficient outside the interface (only where it is constant).
    #[arg(long)]
    beta_plus: Option<f64>,
    /// Coefficient inside the interface (only where it is constant).
    #[arg(long)]
    beta_minus: Option<f64>,
    /// Circle radius of ex1.
    #[arg(long, default_value_t = 0.6)]
    r0: f64,
    /// Tip angle of ex2 in degrees.
    #[arg(long, default_value_t = 40.0)]
    theta: f64,
    /// Comma-separated, strictly increasing mesh sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128, 256])]
    n: Vec<usize>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    rel_tol: f64,
    /// Level-set values below eps_snap·h snap vertices onto the interface.
    #[arg(long, default_value_t = DEFAULT_EPS_SNAP)]
    eps_snap: f64,
    /// Sign of the interface-edge terms of the SCIFEM form.
    #[arg(long, value_enum, default_value = "minus")]
    scifem_sign: SignArg,
    /// CSV output (stdout if omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Markdown copy of the table.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// `x y side value gx gy` records of the finest level.
    #[arg(long)]
    emit_fields: Option<PathBuf>,
    /// MatrixMarket dump of the finest constrained system.
    #[arg(long)]
    emit_matrix: Option<PathBuf>,
    /// Permit n above the default limit.
    #[arg(long)]
    allow_large: bool,
    /// Suppress the per-level progress report on stderr.
    #[arg(long, short)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::UnknownProblem(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    validate_levels(&cli.n, cli.allow_large).map_err(|e| match e {
        Error::InvalidArgument(msg) if msg.contains("explicitly") => Failure::Usage(format!("{msg} (pass --allow-large; limit {DEFAULT_MAX_N})")),
        e => e.into(),
    })?;
    if !(cli.rel_tol > 0.0 && cli.rel_tol < 1.0) {
        return Err(Failure::Usage(format!("--rel-tol must lie in (0, 1), got {}", cli.rel_tol)));
    }
    if !(cli.eps_snap >= 0.0 && cli.eps_snap < 0.5) {
        return Err(Failure::Usage(format!("--eps-snap must lie in [0, 0.5), got {}", cli.eps_snap)));
    }
    let name = match cli.problem {
        ProblemArg::Ex1 => ProblemName::Ex1,
        ProblemArg::Ex2 => ProblemName::Ex2,
        ProblemArg::Ex3 => ProblemName::Ex3,
        ProblemArg::Ex4 => ProblemName::Ex4,
    };
    let params = ProblemParams {
        beta_minus: cli.beta_minus,
        beta_plus: cli.beta_plus,
        r0: cli.r0,
        theta_degrees: cli.theta,
    };
    let problem = make_problem(name, params)?;
    let opts = RunOptions {
        method: match cli.method {
            MethodArg::Scifem => Method::Scifem,
            MethodArg::Pgifem => Method::Pgifem,
        },
        edge_sign: match cli.scifem_sign {
            SignArg::Minus => EdgeTermSign::Minus,
            SignArg::Plus => EdgeTermSign::Plus,
        },
        rel_tol: cli.rel_tol,
        eps_snap: cli.eps_snap,
    };

    let mut table = ConvergenceTable::default();
    let mut finest = None;
    for &n in &cli.n {
        let out = run_level(&problem, n, &opts)?;
        let r = &out.result;
        if !cli.quiet {
            eprintln!(
                "{name} {} n={n}: interface elements {}, {:?} {} its, residual {:.1e}, effectivity {:.3}, {:.2}s",
                opts.method,
                r.interface_elements,
                r.solve.method,
                r.solve.iterations,
                r.solve.relative_residual,
                r.effectivity(),
                r.elapsed.as_secs_f64()
            );
        }
        table.rows.push(TableRow {
            n,
            de: r.norms.de,
            die: r.norms.die,
            dre: r.norms.dre,
        });
        finest = Some(out);
    }

    let csv = output::csv(&table);
    match &cli.output {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &cli.markdown {
        write(path, &output::markdown(&table, &format!("{name}, {}", opts.method)))?;
    }
    let finest = finest.expect("at least one level");
    if let Some(path) = &cli.emit_fields {
        write(path, &output::fields(&finest.disc, &finest.solution, &finest.recovered))?;
    }
    if let Some(path) = &cli.emit_matrix {
        write(path, &output::matrix_market(&finest.system.matrix))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
