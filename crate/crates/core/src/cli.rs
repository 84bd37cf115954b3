//! The `ldl` command-line frontend.
//!
//! Every subcommand reads JSON files, writes JSON (or CSV for
//! `eq5-region`) to `--out` or standard output, and reports failures as a
//! JSON object on standard error. Numbers given on the command line are read
//! as exact decimals; a run switches to floating point as soon as one input
//! file contains a JSON float, unless `--exact` is given.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{LdlError, Result};
use crate::geometry::{certificate_check, check_membership, Membership, MembershipProblem};
use crate::inequality::{default_tol, eq5_region, eval_eq5, region_csv};
use crate::io::{self, Kind, LoadedTable};
use crate::model::{postselect, DetectionBounds, ObservedEfficiencies, PostselectedCorrelation};
use crate::quantum::{born_correlation, hardy_correlation};
use crate::scalar::{parse_rational, Rational, Scalar, FLOAT_TOL};
use crate::schemes::{apply_scheme, ldl_to_mdl, mdl_nonlocality_condition, LocalDistribution, MdlParams, SchemeParams};
use crate::vertices::{enumerate_ldl_vertices, vertex_to_full, DEFAULT_VERTEX_CAP};

/// Largest denominator tried when turning a float certificate into an exact one.
const RECONSTRUCT_DEN: u64 = 1 << 20;

#[derive(Debug, Parser)]
#[command(name = "ldl", version, about = "Limited-detection locality toolkit")]
pub struct Cli {
    /// Numerical tolerance (float mode; exact mode decides exactly).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Force exact rational arithmetic; floats in input files are read exactly.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Seed for all randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of vertices to enumerate.
    #[arg(long, global = true)]
    pub cap: Option<u128>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the LDL vertices of a scenario as full correlation tables.
    Vertices {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        bounds: PathBuf,
    },
    /// Decide whether a postselected correlation has an LDL model.
    Membership {
        #[arg(long)]
        target: PathBuf,
        /// Observed efficiencies; optional when the target is a full table.
        #[arg(long)]
        effs: Option<PathBuf>,
        #[arg(long)]
        bounds: PathBuf,
        /// Re-check a certificate against this many sampled members.
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Evaluate the two-party Hardy-type LDL inequality.
    Eq5 {
        /// Postselected correlation; read from standard input when absent.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        eta_min: String,
        #[arg(long)]
        eta_max: String,
    },
    /// Tabulate the inequality over an (eta_min, eta_max) grid as CSV.
    Eq5Region {
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Quantum correlation with the Hardy zero pattern.
    Hardy {
        #[arg(long)]
        tau: f64,
    },
    /// Born-rule correlation of a two-qubit state under projective settings.
    Born {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        settings: PathBuf,
    },
    /// Apply the partial outcome-assignment scheme.
    Scheme {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eta: String,
        #[arg(long)]
        assign: String,
        /// Alice's local distribution; uniform when absent.
        #[arg(long)]
        local_a: Option<PathBuf>,
        /// Bob's local distribution; uniform when absent.
        #[arg(long)]
        local_b: Option<PathBuf>,
    },
    /// Map LDL bounds onto measurement-dependence parameters.
    MdlMap {
        #[arg(long)]
        l: String,
        #[arg(long)]
        h: String,
        #[arg(long)]
        eta_min: String,
        #[arg(long)]
        eta_max: String,
        /// Treat the bounds as joint detection bounds.
        #[arg(long)]
        joint: bool,
        /// Inputs per party.
        #[arg(long, default_value_t = 2)]
        inputs: usize,
    },
    /// Check positivity and normalization of a correlation file.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            report(stderr, "usage", e.to_string().trim_end());
            return 1;
        }
    };
    match execute(&cli, stdin) {
        Ok(output) => match &cli.out {
            Some(path) => match std::fs::write(path, output) {
                Ok(()) => 0,
                Err(e) => fail(stderr, &io_err(path, e)),
            },
            None => match stdout.write_all(output.as_bytes()) {
                Ok(()) => 0,
                Err(e) => fail(stderr, &LdlError::Io(e)),
            },
        },
        Err(e) => fail(stderr, &e),
    }
}

fn fail(stderr: &mut dyn Write, e: &LdlError) -> i32 {
    report(stderr, e.kind(), &e.to_string());
    e.exit_code()
}

fn report(stderr: &mut dyn Write, kind: &str, message: &str) {
    let _ = writeln!(stderr, "{}", json!({ "error": kind, "message": message }));
}

fn io_err(path: &Path, e: std::io::Error) -> LdlError {
    LdlError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_input(path: Option<&PathBuf>, stdin: &mut dyn Read) -> Result<String> {
    match path {
        Some(p) => read_file(p),
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn input_paths(cmd: &Command) -> Vec<&PathBuf> {
    match cmd {
        Command::Vertices { scenario, bounds } => vec![scenario, bounds],
        Command::Membership { target, effs, bounds, .. } => {
            let mut v = vec![target, bounds];
            v.extend(effs.iter());
            v
        }
        Command::Eq5 { target, .. } | Command::Eq5Region { target, .. } => target.iter().collect(),
        Command::Hardy { .. } | Command::MdlMap { .. } => Vec::new(),
        Command::Born { state, settings } => vec![state, settings],
        Command::Scheme { input, local_a, local_b, .. } => {
            let mut v = vec![input];
            v.extend(local_a.iter());
            v.extend(local_b.iter());
            v
        }
        Command::Validate { input } => vec![input],
    }
}

fn arg_number(name: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| LdlError::InvalidInput(format!("--{name}: {e}")))
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> Result<String> {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(LdlError::InvalidInput(format!("--tol must be positive, got {tol}")));
        }
    }
    if let Some(out) = &cli.out {
        if input_paths(&cli.command).into_iter().any(|p| same_file(p, out)) {
            return Err(LdlError::InvalidInput(format!("--out {} would overwrite an input file", out.display())));
        }
    }
    let cap = cli.cap.unwrap_or(DEFAULT_VERTEX_CAP);

    match &cli.command {
        Command::Vertices { scenario, bounds } => {
            let scenario = io::parse_scenario(&read_file(scenario)?)?;
            let (nums, exact) = io::parse_bounds(&read_file(bounds)?)?;
            if cli.exact || exact {
                vertices::<Rational>(&scenario, &io::bounds_from_numbers(&nums)?, cap)
            } else {
                vertices::<f64>(&scenario, &io::bounds_from_numbers(&nums)?, cap)
            }
        }
        Command::Membership { target, effs, bounds, verify } => {
            let effs = effs.as_ref().map(|p| read_file(p)).transpose()?;
            let opts = MembershipOptions {
                tol: cli.tol.unwrap_or(FLOAT_TOL),
                exact: cli.exact,
                verify: *verify,
                seed: cli.seed,
                cap,
            };
            let report = membership_report(&read_file(target)?, effs.as_deref(), &read_file(bounds)?, &opts)?;
            Ok(io::to_pretty(&report))
        }
        Command::Eq5 { target, eta_min, eta_max } => {
            let table = io::parse_table(&read_input(target.as_ref(), stdin)?)?;
            let (lo, hi) = (arg_number("eta-min", eta_min)?, arg_number("eta-max", eta_max)?);
            if cli.exact || table.exact {
                eq5::<Rational>(&table, &lo, &hi, cli.tol)
            } else {
                eq5::<f64>(&table, &lo, &hi, cli.tol)
            }
        }
        Command::Eq5Region { target, grid } => {
            let table = io::parse_table(&read_input(target.as_ref(), stdin)?)?;
            if cli.exact || table.exact {
                region::<Rational>(&table, *grid, cli.tol)
            } else {
                region::<f64>(&table, *grid, cli.tol)
            }
        }
        Command::Hardy { tau } => Ok(io::to_pretty(&io::postselected_to_value(&hardy_correlation(*tau)?))),
        Command::Born { state, settings } => {
            let state = io::parse_state(&read_file(state)?)?;
            let (a, b) = io::parse_settings(&read_file(settings)?)?;
            Ok(io::to_pretty(&io::postselected_to_value(&born_correlation(&state, &a, &b))))
        }
        Command::Scheme { input, eta, assign, local_a, local_b } => {
            let table = io::parse_table(&read_file(input)?)?;
            let la = local_a.as_ref().map(|p| read_file(p).and_then(|t| io::parse_local(&t))).transpose()?;
            let lb = local_b.as_ref().map(|p| read_file(p).and_then(|t| io::parse_local(&t))).transpose()?;
            let exact =
                cli.exact || (table.exact && la.as_ref().is_none_or(|l| l.1) && lb.as_ref().is_none_or(|l| l.1));
            let args = SchemeArgs {
                eta: arg_number("eta", eta)?,
                assign: arg_number("assign", assign)?,
                local_a: la.map(|l| l.0),
                local_b: lb.map(|l| l.0),
            };
            if exact {
                scheme::<Rational>(&table, &args, cli.tol)
            } else {
                scheme::<f64>(&table, &args, cli.tol)
            }
        }
        Command::MdlMap { l, h, eta_min, eta_max, joint, inputs } => {
            let vals = [
                arg_number("l", l)?,
                arg_number("h", h)?,
                arg_number("eta-min", eta_min)?,
                arg_number("eta-max", eta_max)?,
            ];
            mdl_map(&vals, *joint, *inputs)
        }
        Command::Validate { input } => {
            let table = io::parse_table(&read_file(input)?)?;
            let tol = cli.tol.unwrap_or(if table.exact || cli.exact { 0.0 } else { FLOAT_TOL });
            let verdict = if cli.exact || table.exact {
                validate_table::<Rational>(&table, tol)?
            } else {
                validate_table::<f64>(&table, tol)?
            };
            Ok(io::to_pretty(&io::verdict_to_value(&verdict)))
        }
    }
}

fn vertices<T: Scalar>(scenario: &crate::model::Scenario, bounds: &DetectionBounds<T>, cap: u128) -> Result<String> {
    let list = enumerate_ldl_vertices(scenario, bounds, cap)?;
    let tables: Vec<Value> = list.iter().map(|v| io::full_to_value(&vertex_to_full(scenario, v, bounds))).collect();
    Ok(io::to_pretty(&Value::Array(tables)))
}

/// Settings for [`membership_report`].
#[derive(Debug, Clone)]
pub struct MembershipOptions {
    /// Float-mode acceptance tolerance.
    pub tol: f64,
    /// Solve in rationals even when some input is a float.
    pub exact: bool,
    /// Re-check a certificate against this many feasible samples.
    pub verify: Option<usize>,
    pub seed: u64,
    pub cap: u128,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions { tol: FLOAT_TOL, exact: false, verify: None, seed: 0, cap: DEFAULT_VERTEX_CAP }
    }
}

/// Membership verdict for JSON target, efficiencies and bounds documents, as
/// printed by `ldl membership`. Runs exactly when every input is exact or
/// `opts.exact` is set. `effs` may be omitted for full targets.
pub fn membership_report(target: &str, effs: Option<&str>, bounds: &str, opts: &MembershipOptions) -> Result<Value> {
    let table = io::parse_table(target)?;
    let effs = effs.map(|t| io::parse_effs(t, &table.scenario)).transpose()?;
    let (bnums, bexact) = io::parse_bounds(bounds)?;
    let exact = opts.exact || (table.exact && bexact && effs.as_ref().is_none_or(|e| e.1));
    let effs = effs.as_ref().map(|e| &e.0[..]);
    if exact {
        membership::<Rational>(&table, effs, &bnums, opts)
    } else {
        membership::<f64>(&table, effs, &bnums, opts)
    }
}

fn membership<T: Scalar>(
    table: &LoadedTable,
    effs: Option<&[io::Number]>,
    bounds: &[(io::Number, io::Number)],
    opts: &MembershipOptions,
) -> Result<Value> {
    let (target, effs): (PostselectedCorrelation<T>, ObservedEfficiencies<T>) = match table.kind {
        Kind::Full => {
            let (p, derived) = postselect(&table.full::<T>()?)?;
            match effs {
                Some(nums) => (p, io::effs_from_numbers(&table.scenario, nums)?),
                None => (p, derived),
            }
        }
        Kind::Postselected => {
            let nums =
                effs.ok_or_else(|| LdlError::InvalidInput("--effs is required for postselected targets".into()))?;
            (table.postselected::<T>()?, io::effs_from_numbers(&table.scenario, nums)?)
        }
    };
    let bounds: DetectionBounds<T> = io::bounds_from_numbers(bounds)?;
    let problem = MembershipProblem::enumerate(target, effs, bounds, opts.cap)?;
    let verdict = check_membership(&problem, opts.tol)?;
    let mut out = io::membership_to_value(&verdict, &problem);
    if let Membership::NonMember(cert) = &verdict {
        let m = out.as_object_mut().expect("object");
        if !T::EXACT {
            let cert_f: crate::geometry::Certificate<f64> = crate::geometry::Certificate::new(
                cert.scenario().clone(),
                cert.coefficients().iter().map(|c| c.to_f64_lossy()).collect(),
                cert.bound().to_f64_lossy(),
                cert.violation().to_f64_lossy(),
            )?;
            let exact_problem: MembershipProblem<Rational> = problem.convert();
            if let Some(c) = cert_f.reconstruct_exact(&exact_problem, RECONSTRUCT_DEN) {
                m.insert("exact_certificate".into(), io::certificate_to_value(&c));
            }
        }
        if let Some(samples) = opts.verify {
            let check = certificate_check(cert, &problem, samples, opts.seed, opts.tol)?;
            m.insert("check".into(), io::check_to_value(&check));
        }
    }
    Ok(out)
}

fn postselected_target<T: Scalar>(table: &LoadedTable) -> Result<PostselectedCorrelation<T>> {
    match table.kind {
        Kind::Postselected => table.postselected(),
        Kind::Full => Ok(postselect(&table.full::<T>()?)?.0),
    }
}

fn eq5<T: Scalar>(table: &LoadedTable, lo: &Rational, hi: &Rational, tol: Option<f64>) -> Result<String> {
    let target = postselected_target::<T>(table)?;
    let (lo, hi) = (T::from_rational(lo), T::from_rational(hi));
    let r = eval_eq5(&target, &lo, &hi, tol.unwrap_or_else(default_tol::<T>))?;
    Ok(io::to_pretty(&json!({
        "eta_min": io::number_to_json(&lo),
        "eta_max": io::number_to_json(&hi),
        "lhs": io::number_to_json(&r.lhs),
        "margin": io::number_to_json(&r.margin),
        "violated": r.violated,
    })))
}

fn region<T: Scalar>(table: &LoadedTable, grid: usize, tol: Option<f64>) -> Result<String> {
    let target = postselected_target::<T>(table)?;
    Ok(region_csv(&eq5_region(&target, grid, tol.unwrap_or_else(default_tol::<T>))?))
}

struct SchemeArgs {
    eta: Rational,
    assign: Rational,
    local_a: Option<Vec<Vec<io::Number>>>,
    local_b: Option<Vec<Vec<io::Number>>>,
}

fn scheme<T: Scalar>(table: &LoadedTable, args: &SchemeArgs, tol: Option<f64>) -> Result<String> {
    let p = postselected_target::<T>(table)?;
    let s = p.scenario();
    if s.n_parties() != 2 {
        return Err(LdlError::ScenarioMismatch("the scheme needs exactly two parties".into()));
    }
    let local = |nums: &Option<Vec<Vec<io::Number>>>, party: usize| -> Result<LocalDistribution<T>> {
        match nums {
            Some(rows) => io::local_from_numbers(rows),
            None => Ok(LocalDistribution::uniform(s.inputs()[party], s.outcomes()[party])),
        }
    };
    let params = SchemeParams {
        eta: T::from_rational(&args.eta),
        eta_min_assign: T::from_rational(&args.assign),
        local_a: local(&args.local_a, 0)?,
        local_b: local(&args.local_b, 1)?,
    };
    let tol = tol.unwrap_or(if T::EXACT { 0.0 } else { FLOAT_TOL });
    Ok(io::to_pretty(&io::postselected_to_value(&apply_scheme(&p, &params, tol)?)))
}

fn mdl_map(vals: &[Rational; 4], joint: bool, inputs: usize) -> Result<String> {
    let [l, h, lo, hi] = vals;
    let params = MdlParams::new(l.clone(), h.clone(), inputs)?;
    let mapped = ldl_to_mdl(&params, lo, hi, joint)?;
    let condition = mdl_nonlocality_condition(lo, hi, inputs, l, h)?;
    Ok(io::to_pretty(&json!({
        "l": io::number_to_json(mapped.params.l()),
        "h": io::number_to_json(mapped.params.h()),
        "clamped": mapped.clamped,
        "joint": joint,
        "inputs": inputs,
        "nonlocality_condition": condition,
    })))
}

fn validate_table<T: Scalar>(table: &LoadedTable, tol: f64) -> Result<crate::model::Verdict> {
    Ok(match table.kind {
        Kind::Full => table.full::<T>()?.validate(tol),
        Kind::Postselected => table.postselected::<T>()?.validate(tol),
    })
}
