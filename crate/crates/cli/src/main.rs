//! `suprafix` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input or validation
//! error, 3 non-convergence, 4 certificate refusal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use suprafix::contraction::{all_pairs, grid_pairs, sample_pairs, SelfMap, VerificationReport};
use suprafix::format::{LoadedSpace, MapFile, ProblemFile, SpaceFile, SpecFile};
use suprafix::fredholm::SolveOptions;
use suprafix::picard::{iterate, limit_check, verify_trace_bounds, ConvexRate, StoppingCriteria};
use suprafix::space::{FiniteSpace, Suprametric};
use suprafix::corpus;

const OK: u8 = 0;
const VERIFY_FAILED: u8 = 1;
const INPUT_ERROR: u8 = 2;
const NOT_CONVERGED: u8 = 3;
const CERT_REFUSED: u8 = 4;

const MAX_LISTED: usize = 10;

#[derive(Parser)]
#[command(name = "suprafix", version, about = "Fixed-point verification in suprametric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check identity, symmetry and the relaxed triangle inequality.
    VerifySpace {
        space: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Sample points per interval space.
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Test a contraction condition over a pair set.
    VerifyContraction {
        space: PathBuf,
        map: PathBuf,
        spec: PathBuf,
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run Picard iteration and export the trace.
    Orbit {
        space: PathBuf,
        map: PathBuf,
        /// Start point: a label on a finite space, a number on an interval.
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Displacement tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Convex rate `m,alpha` for a-priori step bounds.
        #[arg(long)]
        bounds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a Fredholm equation of the second kind by Picard iteration.
    SolveFredholm {
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        allow_invalid_certificate: bool,
    },
    /// List, run or export the built-in fixtures.
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Grid points per axis on an interval space.
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// Extra random pairs on an interval space.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true)))]
struct CorpusArgs {
    #[arg(long, group = "mode")]
    list: bool,
    #[arg(long, value_name = "NAME", group = "mode")]
    run: Option<String>,
    #[arg(long, group = "mode")]
    run_all: bool,
    /// Write space, map and spec files for the selected fixtures.
    #[arg(long, value_name = "DIR", conflicts_with = "list")]
    export: Option<PathBuf>,
}

/// An input problem: exit 2 with a message.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<u8, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifySpace { space, tol, grid } => verify_space(&space, tol, grid),
        Command::VerifyContraction { space, map, spec, pairs, tol } => {
            verify_contraction(&space, &map, &spec, &pairs, tol)
        }
        Command::Orbit { space, map, start, max_iters, tol, bounds, out } => {
            orbit(&space, &map, &start, max_iters, tol, bounds.as_deref(), out.as_deref())
        }
        Command::SolveFredholm { problem, out, trace, allow_invalid_certificate } => {
            solve_fredholm(&problem, out.as_deref(), trace.as_deref(), allow_invalid_certificate)
        }
        Command::Corpus(args) => run_corpus(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

/// Shortest decimal within 12 significant digits, so `1.0000000000000002`
/// prints as `1`; exponent form outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let mag = rounded.abs();
    if mag != 0.0 && !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), InputError> {
    fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_space(path: &Path) -> Result<LoadedSpace, InputError> {
    let text = read(path)?;
    let file = SpaceFile::from_json(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(file.build()?)
}

fn verify_space(path: &Path, tol: f64, grid: usize) -> Outcome {
    let space = match load_space(path)? {
        LoadedSpace::Finite(s) => s,
        LoadedSpace::Interval(s) => {
            let xs = s.grid(grid);
            let d = xs.iter().map(|x| xs.iter().map(|y| s.distance(x, y)).collect()).collect();
            let labels = xs.iter().map(|x| num(*x)).collect();
            println!("interval space sampled at {grid} points");
            FiniteSpace::new(labels, d, s.rho())?
        }
    };
    let rep = space.check_axioms(tol);
    let yes = |b: bool| if b { "ok" } else { "FAILED" };
    println!("points = {}", space.len());
    println!("rho = {}", num(space.rho()));
    println!("identity: {}", yes(rep.identity_ok));
    println!("symmetry: {}", yes(rep.symmetry_ok));
    println!("relaxed triangle: {} ({} triples)", yes(rep.supra_ok), rep.triples_checked);
    match rep.minimal_rho {
        Some(r) => println!("minimal rho = {}", num(r)),
        None => println!("minimal rho = n/a (identity or symmetry failed)"),
    }
    if !rep.violations.is_empty() {
        println!("violations: {}", rep.violations.len());
        for v in rep.violations.iter().take(MAX_LISTED) {
            let (i, k, j) = (space.label(v.i), space.label(v.k), space.label(v.j));
            println!("  witness ({i}, {k}, {j}): d({i},{j}) exceeds the bound through {k} by {}", num(v.defect));
        }
    }
    Ok(if rep.all_ok() { OK } else { VERIFY_FAILED })
}

fn print_report<P>(rep: &VerificationReport<P>, show: impl Fn(&P) -> String) {
    println!("condition: {}", rep.condition);
    println!("verdict: {}", rep.verdict);
    println!("pairs tested: {}", rep.pairs_tested);
    println!("rate: {}", num(rep.rate));
    println!("worst ratio = {}", num(rep.worst_ratio));
    if rep.witnesses.is_empty() {
        return;
    }
    println!("witnesses: {} (first {} in test order)", rep.witnesses.len(), rep.witnesses.len().min(MAX_LISTED));
    let line = |w: &suprafix::contraction::Witness<P>| {
        format!(
            "({}, {}): lhs {} > {} * {} (ratio {})",
            show(&w.x),
            show(&w.y),
            num(w.lhs),
            num(rep.rate),
            num(w.rhs_max),
            num(w.ratio)
        )
    };
    for w in rep.witnesses.iter().take(MAX_LISTED) {
        println!("  {}", line(w));
    }
    if let Some(w) = rep.worst_witness() {
        println!("worst witness {}", line(w));
    }
}

fn verify_contraction(space: &Path, map: &Path, spec: &Path, pairs: &PairArgs, tol: f64) -> Outcome {
    let loaded = load_space(space)?;
    let map_file = MapFile::from_json(&read(map)?)?;
    let spec_file = SpecFile::from_json(&read(spec)?)?;
    let code = |satisfied: bool| if satisfied { OK } else { VERIFY_FAILED };
    match loaded {
        LoadedSpace::Finite(s) => {
            let m = map_file.build_finite(&s)?;
            let spec = spec_file.build(Some(s.labels()))?;
            let rep = spec.verify(&m, &s, &all_pairs(s.len()), tol)?;
            print_report(&rep, |p| s.label(*p).to_string());
            Ok(code(rep.is_satisfied()))
        }
        LoadedSpace::Interval(s) => {
            let m = map_file.build_expr()?;
            let spec = spec_file.build(None)?;
            if pairs.grid < 2 && pairs.samples == 0 {
                return Err(InputError("need --grid >= 2 or --samples > 0".into()));
            }
            let mut set = if pairs.grid >= 2 {
                let xs = s.grid(pairs.grid);
                grid_pairs(&xs, &xs)
            } else {
                Vec::new()
            };
            set.extend(sample_pairs(&s, pairs.samples, pairs.seed));
            let rep = spec.verify(&m, &s, &set, tol)?;
            print_report(&rep, |p| num(*p));
            Ok(code(rep.is_satisfied()))
        }
    }
}

fn parse_bounds(src: &str) -> Result<ConvexRate, InputError> {
    let (m, alpha) = src
        .split_once(',')
        .ok_or_else(|| InputError(format!("--bounds expects `m,alpha`, got `{src}`")))?;
    let m: usize = m.trim().parse().map_err(|_| InputError(format!("bad order `{m}`")))?;
    let alpha = suprafix::kexpr::eval_constant(alpha.trim())?;
    Ok(ConvexRate::new(m, alpha)?)
}

fn run_orbit<S, M>(
    space: &S,
    map: &M,
    x0: S::Point,
    stop: &StoppingCriteria,
    rate: Option<ConvexRate>,
    out: Option<&Path>,
) -> Outcome
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let trace = iterate(map, space, x0, stop, rate)?;
    if let Some(path) = out {
        write(path, &trace.to_csv(|p| space.describe(p)))?;
    }
    let show = |p: &S::Point| match space.index_of(p) {
        Some(_) => space.describe(p),
        None => space.describe(p).parse::<f64>().map(num).unwrap_or_else(|_| space.describe(p)),
    };
    let shown: Vec<String> = trace.points.iter().take(MAX_LISTED + 1).map(&show).collect();
    let more = if trace.points.len() > MAX_LISTED + 1 { ", ..." } else { "" };
    println!("orbit: {}{more}", shown.join(", "));
    println!("steps: {}", trace.steps());
    println!("stop: {:?}", trace.stop);
    println!("final point = {}", show(trace.final_point()));
    println!("residual = {}", num(trace.residual));

    let mut code = OK;
    if let Some(r) = rate {
        let rep = verify_trace_bounds(&trace, r.m, r.alpha, 1e-9)?;
        println!("mu = {}; bounds checked at {} steps", num(rep.mu), rep.checked);
        if rep.violations.is_empty() {
            println!("bound violations: none");
        } else {
            println!("bound violations: {}", rep.violations.len());
            for v in rep.violations.iter().take(MAX_LISTED) {
                println!("  n = {}: displacement {} > bound {}", v.n, num(v.displacement), num(v.bound));
            }
            code = VERIFY_FAILED;
        }
    }
    if !trace.converged {
        println!("did not converge");
        return Ok(NOT_CONVERGED);
    }
    let check = limit_check(map, space, &trace, stop.displacement_tol.sqrt());
    if !check.is_fixed_point {
        println!(
            "limit is not a fixed point: candidate {} has residual {}",
            show(&check.candidate),
            num(check.candidate_residual)
        );
        return Ok(NOT_CONVERGED);
    }
    println!("fixed point = {}", show(&check.candidate));
    Ok(code)
}

fn orbit(
    space: &Path,
    map: &Path,
    start: &str,
    max_iters: usize,
    tol: f64,
    bounds: Option<&str>,
    out: Option<&Path>,
) -> Outcome {
    let loaded = load_space(space)?;
    let map_file = MapFile::from_json(&read(map)?)?;
    let rate = bounds.map(parse_bounds).transpose()?;
    let stop = StoppingCriteria { max_iters, displacement_tol: tol, tail_bound_tol: 0.0 };
    stop.validate()?;
    match loaded {
        LoadedSpace::Finite(s) => {
            let m = map_file.build_finite(&s)?;
            let x0 = s.index(start).ok_or_else(|| InputError(format!("unknown start point `{start}`")))?;
            run_orbit(&s, &m, x0, &stop, rate, out)
        }
        LoadedSpace::Interval(s) => {
            let m = map_file.build_expr()?;
            let x0: f64 = start.parse().map_err(|_| InputError(format!("start `{start}` is not a number")))?;
            run_orbit(&s, &m, x0, &stop, rate, out)
        }
    }
}

fn solve_fredholm(path: &Path, out: Option<&Path>, trace_out: Option<&Path>, allow_invalid: bool) -> Outcome {
    let file = ProblemFile::from_json(&read(path)?)?;
    let problem = file.build()?;
    let cert = problem.certify()?;
    println!("kernel bound M = {}", num(cert.m_bound));
    println!("L = M (b - a) = {}", num(cert.l));
    println!("a0 = {}, a1 = {}", num(cert.a0), num(cert.a1));
    println!("certificate: {}", if cert.valid { "valid" } else { "invalid (L >= 1)" });
    if !cert.valid && !allow_invalid {
        println!("refusing to solve without a valid certificate");
        return Ok(CERT_REFUSED);
    }
    let tol = file.tol.unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(InputError(format!("tol = {tol} must be positive")));
    }
    let lambda = problem.lambda_supra;
    let stop = StoppingCriteria {
        max_iters: file.max_iters.unwrap_or(1000),
        // Suprametric step u (u + lambda) at a sup-norm step of tol.
        displacement_tol: tol * (tol + lambda),
        tail_bound_tol: 0.0,
    };
    let opts = SolveOptions { stop, initial: None, allow_invalid_certificate: allow_invalid };
    let sol = problem.solve(&opts)?;
    if let Some(p) = out {
        write(p, &sol.solution.to_csv())?;
    }
    if let Some(p) = trace_out {
        let space = problem.space();
        write(p, &sol.trace.to_csv(|f| space.describe(f)))?;
    }
    println!("iterations: {}", sol.trace.steps());
    println!("residual sup = {}", num(sol.residual_sup));
    println!("solution sup = {}", num(sol.solution.sup_norm()));
    if !cert.valid {
        println!("warning: solved under an invalid certificate");
    }
    if !sol.converged || !(sol.residual_sup <= tol) {
        println!("did not converge to tolerance {}", num(tol));
        return Ok(NOT_CONVERGED);
    }
    Ok(OK)
}

fn export_fixture(dir: &Path, fixture: &corpus::Fixture) -> Result<(), InputError> {
    fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
    let (space, map, spec) = fixture.export();
    for (suffix, text) in [("space", space.to_json()), ("map", map.to_json()), ("spec", spec.to_json())] {
        write(&dir.join(format!("{}.{suffix}.json", fixture.name)), &(text + "\n"))?;
    }
    Ok(())
}

fn run_corpus(args: &CorpusArgs) -> Outcome {
    if args.list {
        for f in corpus::all() {
            println!("{:<24} {}", f.name, f.summary);
        }
        return Ok(OK);
    }
    let fixtures = match &args.run {
        Some(name) => vec![corpus::by_name(name).ok_or_else(|| {
            InputError(format!("unknown fixture `{name}`; known: {}", corpus::NAMES.join(", ")))
        })?],
        None => corpus::all(),
    };
    let mut summary = String::new();
    let (mut passed, mut discrepancies) = (0, 0);
    for f in &fixtures {
        let rep = f.check();
        print!("{}", rep.render());
        if let Some(dir) = &args.export {
            export_fixture(dir, f)?;
        }
        passed += usize::from(rep.passed());
        discrepancies += rep.discrepancies();
        let status = if rep.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            summary,
            "{:<24} {status}  {}/{} facts, {} discrepancies reproduced",
            f.name,
            rep.results.iter().filter(|r| r.pass).count(),
            rep.results.len(),
            rep.discrepancies()
        );
    }
    println!();
    print!("{summary}");
    println!("{passed}/{} fixtures passed, {discrepancies} recorded discrepancies reproduced", fixtures.len());
    Ok(if passed == fixtures.len() { OK } else { VERIFY_FAILED })
}

