//! Command-line front end. `run` never exits the process itself so that it
//! can be driven from tests; `main` forwards its return value.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use afc_core::benchmarks::{convergence_study, error_norms, problem_by_name, PROBLEM_NAMES};
use afc_core::{
    classify_and_order, solve, GridId, Iteration, Limiter, Mesh, SolveOptions, WbVariant,
};

use crate::csv::{write_audit, write_report, ReportRow};
use crate::vtk::write_vtk;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Finest admissible level. Level 12 already has about 16.8 million nodes.
const MAX_LEVEL: u32 = 12;

#[derive(Debug, Parser)]
#[command(
    name = "afc",
    version,
    about = "Bound-preserving P1 solver for steady convection-diffusion-reaction benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one benchmark on one mesh level.
    Solve(SingleArgs),
    /// Solve on a range of levels and tabulate errors and convergence rates.
    Convergence(StudyArgs),
    /// Solve and write the maximum-principle audit.
    Audit(SingleArgs),
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    level: u32,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Inclusive level range `first:last`.
    #[arg(long, value_parser = parse_levels)]
    levels: (u32, u32),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PROBLEM_NAMES))]
    problem: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    grid: u32,
    #[arg(long, value_enum, default_value_t = LimiterArg::Wmc)]
    limiter: LimiterArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    wb_variant: VariantArg,
    #[arg(long, value_enum, default_value_t = IterationArg::Picard)]
    iteration: IterationArg,
    /// Anderson mixing depth; 0 disables mixing.
    #[arg(long, default_value_t = 3)]
    anderson: usize,
    /// Overrides the benchmark's diffusion coefficient.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 20000)]
    max_iter: usize,
    /// Relaxation factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    no_vtk: bool,
    #[arg(long)]
    emit_audit: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LimiterArg {
    Galerkin,
    Mc,
    Wmc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Simplified,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IterationArg {
    Picard,
    Jacobi,
}

fn parse_levels(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(':').ok_or("expected first:last")?;
    let a: u32 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u32 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if a > b {
        return Err(format!("empty level range {a}:{b}"));
    }
    Ok((a, b))
}

impl CommonArgs {
    fn options(&self) -> Result<SolveOptions, Error> {
        let options = SolveOptions {
            limiter: match self.limiter {
                LimiterArg::Galerkin => Limiter::Galerkin,
                LimiterArg::Mc => Limiter::Mc,
                LimiterArg::Wmc => Limiter::Wmc,
            },
            wb_variant: match self.wb_variant {
                VariantArg::Full => WbVariant::Full,
                VariantArg::Simplified => WbVariant::Simplified,
            },
            iteration: match self.iteration {
                IterationArg::Picard => Iteration::Picard,
                IterationArg::Jacobi => Iteration::Jacobi,
            },
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            anderson: self.anderson,
            ..SolveOptions::default()
        };
        options
            .validate()
            .map_err(|e| Error::Usage(e.to_string()))?;
        Ok(options)
    }

    fn grid(&self) -> GridId {
        if self.grid == 1 {
            GridId::One
        } else {
            GridId::Two
        }
    }
}

fn check_level(level: u32) -> Result<(), Error> {
    if level > MAX_LEVEL {
        return Err(Error::Usage(format!(
            "level {level} exceeds the maximum {MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn execute(command: &Command) -> Result<(), Error> {
    match command {
        Command::Solve(args) => run_single(args, args.common.emit_audit),
        Command::Audit(args) => run_single(args, true),
        Command::Convergence(args) => run_study(args),
    }
}

fn run_single(args: &SingleArgs, emit_audit: bool) -> Result<(), Error> {
    let common = &args.common;
    let options = common.options()?;
    check_level(args.level)?;
    let spec = problem_by_name(&common.problem, common.epsilon)
        .ok_or_else(|| Error::Usage(format!("unknown problem {}", common.problem)))?
        .map_err(|e| Error::Usage(e.to_string()))?;
    let mesh = classify_and_order(Mesh::uniform(common.grid(), args.level), &spec)?;
    let report = solve(&mesh, &spec, &options)?;

    let (l1, l2) = match &spec.exact {
        Some(exact) => {
            let (l1, l2) = error_norms(&mesh, &report.u, Some(exact))?;
            (Some(l1), Some(l2))
        }
        None => (None, None),
    };
    let row = ReportRow {
        level: args.level,
        ndof: mesh.num_nodes(),
        h: mesh.h,
        l2_error: l2,
        eoc_l2: None,
        l1_error: l1,
        eoc_l1: None,
        iterations: report.iterations,
        converged: report.converged,
    };

    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    write_file(&common.out.join("report.csv"), |w| write_report(&[row], w))?;
    if !common.no_vtk {
        write_file(&common.out.join("solution.vtk"), |w| {
            write_vtk(&mesh, &report.u, w)
        })?;
    }
    if emit_audit {
        write_file(&common.out.join("audit.csv"), |w| {
            write_audit(&report.dmp_audit, w)
        })?;
    }
    let levels = args.level.to_string();
    write_file(&common.out.join("metadata.txt"), |w| {
        write_metadata(w, common, &options, spec.epsilon, &levels)
    })?;
    if !report.converged {
        eprintln!(
            "warning: no convergence after {} iterations (residual {:e})",
            report.iterations,
            report.residual_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn run_study(args: &StudyArgs) -> Result<(), Error> {
    let common = &args.common;
    let options = common.options()?;
    let (first, last) = args.levels;
    check_level(last)?;
    let spec = problem_by_name(&common.problem, common.epsilon)
        .ok_or_else(|| Error::Usage(format!("unknown problem {}", common.problem)))?
        .map_err(|e| Error::Usage(e.to_string()))?;
    if spec.exact.is_none() {
        return Err(Error::Usage(format!(
            "problem {} has no exact solution for a convergence study",
            spec.name
        )));
    }
    let records = convergence_study(&spec, common.grid(), first..=last, &options)?;
    let rows: Vec<ReportRow> = records.iter().map(ReportRow::from).collect();

    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    write_file(&common.out.join("report.csv"), |w| write_report(&rows, w))?;
    let levels = format!("{first}:{last}");
    write_file(&common.out.join("metadata.txt"), |w| {
        write_metadata(w, common, &options, spec.epsilon, &levels)
    })?;
    for r in records.iter().filter(|r| !r.converged) {
        eprintln!(
            "warning: level {} did not converge in {} iterations",
            r.level, r.iterations
        );
    }
    Ok(())
}

fn write_file<F>(path: &Path, body: F) -> Result<(), Error>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| Error::io(path, e))
}

fn write_metadata<W: Write>(
    w: &mut W,
    common: &CommonArgs,
    options: &SolveOptions,
    epsilon: f64,
    levels: &str,
) -> std::io::Result<()> {
    let grid_layout = match common.grid() {
        GridId::One => "two triangles split along the diagonal (0,0)-(1,1)",
        GridId::Two => "four triangles meeting at (0.5,0.5)",
    };
    writeln!(w, "problem={}", common.problem)?;
    writeln!(w, "epsilon={epsilon:e}")?;
    writeln!(w, "grid={}", common.grid)?;
    writeln!(w, "grid_level0={grid_layout}")?;
    writeln!(w, "refinement=uniform red refinement")?;
    writeln!(w, "levels={levels}")?;
    writeln!(w, "limiter={}", options.limiter.name())?;
    writeln!(w, "wb_variant={}", variant_name(options.wb_variant))?;
    writeln!(w, "iteration={}", options.iteration.name())?;
    writeln!(w, "anderson={}", options.anderson)?;
    writeln!(w, "tol={:e}", options.tol)?;
    writeln!(w, "max_iter={}", options.max_iter)?;
    writeln!(w, "damping={}", options.damping)?;
    writeln!(w, "delta={:e}", options.delta)?;
    w.flush()
}

fn variant_name(v: WbVariant) -> &'static str {
    match v {
        WbVariant::Full => "full",
        WbVariant::Simplified => "simplified",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("3:8"), Ok((3, 8)));
        assert_eq!(parse_levels("4:4"), Ok((4, 4)));
        assert!(parse_levels("5:4").is_err());
        assert!(parse_levels("5").is_err());
        assert!(parse_levels("a:4").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(
            run(["afc", "solve", "--problem", "bogus", "--level", "1"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["afc", "solve", "--problem", "equilibrium"]),
            EXIT_USAGE
        );
        assert_eq!(run(["afc", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            run([
                "afc",
                "solve",
                "--problem",
                "equilibrium",
                "--level",
                "1",
                "--grid",
                "3"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            run([
                "afc",
                "solve",
                "--problem",
                "equilibrium",
                "--level",
                "1",
                "--damping",
                "0"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["afc", "solve", "--problem", "equilibrium", "--level", "13"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["afc", "--help"]), EXIT_OK);
    }
}
