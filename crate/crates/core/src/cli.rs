//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 only the
//! trivial solution was found, 3 a hypothesis on `f` or `a` fails,
//! 4 a verification suite fails.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    certificate, validate_hypotheses, Certificate, Classification, Limit, Problem, DEFAULT_SAMPLES,
    DEFAULT_U_MAX,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::kernel::{cone_constants, green_unchecked, kernel_weight, rho, upper_envelope};
use crate::solver::{build_operator, solve_auto, uniform_grid, Attempt, SolveReport};
use crate::verify::{run_all, Scorecard, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TRIVIAL: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_LEMMA: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bvp4", version, about = "Positive solutions of u'''' + f(u) = 0 with an integral boundary condition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find a positive solution and write it with its diagnostics.
    Solve(CommonArgs),
    /// Run the kernel, oracle and cone suites and write a scorecard.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Fault injection: shift G down by 0.01 in the kernel sweep.
        #[arg(long, hide = true)]
        tamper_kernel: bool,
    },
    /// Growth limits, classification and shell thresholds.
    #[command(alias = "certificate")]
    Classify(CommonArgs),
    /// Tabulate G, the full kernel and both envelopes on an m×m grid.
    Green {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 101)]
        m: usize,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nonlinearity f(u).
    #[arg(long = "f", value_name = "EXPR", allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Boundary weight a(t).
    #[arg(long = "a", value_name = "EXPR", allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report to standard output.
    #[arg(long)]
    pub json: bool,
    /// Print the CSV table to standard output.
    #[arg(long)]
    pub csv: bool,
}

impl CommonArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(f) = &self.f {
            cfg.problem.f = Some(f.clone());
        }
        if let Some(a) = &self.a {
            cfg.problem.a = Some(a.clone());
        }
        if let Some(theta) = self.theta {
            cfg.problem.theta = theta;
        }
        if let Some(seed) = self.seed {
            cfg.solver.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::HypothesisViolation(_) | Error::NegativeWeight { .. } => EXIT_HYPOTHESIS,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Solve(c) => cmd_solve(&c.load()?, c),
        Command::Verify { common, tamper_kernel } => cmd_verify(&common.load()?, common, *tamper_kernel),
        Command::Classify(c) => cmd_classify(&c.load()?, c),
        Command::Green { common, m } => cmd_green(&common.load()?, common, *m),
    }
}

fn require<'a>(text: &'a Option<String>, name: &str) -> Result<&'a str> {
    text.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("no {name} given (use --{name} or [problem] {name})")))
}

/// Problem described by the configuration, hypotheses not yet checked.
pub fn problem_from(cfg: &RunConfig) -> Result<Problem> {
    let q = cfg.quadrature_rule()?;
    let f = require(&cfg.problem.f, "f")?;
    let a = require(&cfg.problem.a, "a")?;
    let mut p = Problem::parse(f, a, cfg.problem.theta, &q)?;
    p.declared_f0 = cfg.declared_f0()?;
    p.declared_finf = cfg.declared_finf()?;
    Ok(p)
}

fn write_file(cfg: &RunConfig, name: &str, contents: &str) -> Result<Option<PathBuf>> {
    let Some(path) = cfg.output_path(name) else {
        return Ok(None);
    };
    let io = |e: std::io::Error| Error::InvalidConfig(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(&path, contents).map_err(io)?;
    Ok(Some(path))
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises")
}

#[inline]
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize)]
pub struct SolveOutput<'a> {
    #[serde(flatten)]
    pub report: &'a SolveReport,
    pub attempts: &'a [Attempt],
    pub seed: u64,
}

/// `t,u,Au,fp_residual` at the Nyström nodes.
pub fn solution_csv(report: &SolveReport, au: &[f64]) -> String {
    let mut s = String::from("t,u,Au,fp_residual\n");
    for ((t, u), v) in report.solution.nodes.iter().zip(&report.solution.values).zip(au) {
        let _ = writeln!(s, "{},{},{},{}", num(*t), num(*u), num(*v), num((u - v).abs()));
    }
    s
}

pub fn cmd_solve(cfg: &RunConfig, args: &CommonArgs) -> Result<i32> {
    let p = problem_from(cfg)?;
    let q = cfg.quadrature_rule()?;
    let validation = validate_hypotheses(&p, DEFAULT_U_MAX, DEFAULT_SAMPLES);
    if !validation.passed() {
        for v in &validation.violations {
            eprintln!("{:?} violated: {} ({} samples)", v.hypothesis, v.message, v.count);
        }
        return Ok(EXIT_HYPOTHESIS);
    }
    cone_constants(&p.a, p.theta, &q)?;
    let op = build_operator(&p, &q)?;
    let auto = solve_auto(&op, &cfg.solve_config());
    let report = &auto.report;
    let au = op.apply(&report.solution)?.values;
    let csv = solution_csv(report, &au);
    let json = to_json(&SolveOutput {
        report,
        attempts: &auto.attempts,
        seed: cfg.solver.seed,
    });
    write_file(cfg, &cfg.output.solution_csv, &csv)?;
    write_file(cfg, &cfg.output.report_json, &json)?;
    if args.json {
        print(&json);
    }
    if args.csv {
        print(&csv);
    }
    if !args.json && !args.csv {
        print(&solve_summary(report));
    }
    Ok(if report.positive { EXIT_OK } else { EXIT_TRIVIAL })
}

fn solve_summary(r: &SolveReport) -> String {
    let verdict = if r.positive { "positive solution" } else { "trivial solution only" };
    format!(
        "{verdict}: |u| = {:.9e}, method {:?}, start {:?}, {} iterations\n\
         fp_residual {:.3e}, ode_residual {:.3e}, bc_residuals [{:.3e}, {:.3e}, {:.3e}, {:.3e}], in_cone {}",
        r.norm(),
        r.method,
        r.start,
        r.iterations,
        r.fp_residual,
        r.ode_residual,
        r.bc_residuals[0],
        r.bc_residuals[1],
        r.bc_residuals[2],
        r.bc_residuals[3],
        r.in_cone
    )
}

pub fn verify_options(cfg: &RunConfig, tamper_kernel: bool) -> Result<VerifyOptions> {
    let f = cfg.problem.f.as_deref().map(|t| Expression::parse(t, "u")).transpose()?;
    let a = cfg.problem.a.as_deref().map(|t| Expression::parse(t, "t")).transpose()?;
    Ok(VerifyOptions {
        theta: cfg.problem.theta,
        seed: cfg.solver.seed,
        f,
        a,
        quadrature: cfg.quadrature_rule()?,
        tamper_kernel,
        ..VerifyOptions::default()
    })
}

pub fn cmd_verify(cfg: &RunConfig, args: &CommonArgs, tamper_kernel: bool) -> Result<i32> {
    let card = run_all(&verify_options(cfg, tamper_kernel)?)?;
    let json = to_json(&card);
    write_file(cfg, &cfg.output.scorecard_json, &json)?;
    if args.json {
        print(&json);
    } else {
        print(&scorecard_summary(&card));
    }
    Ok(if card.passed { EXIT_OK } else { EXIT_LEMMA })
}

fn scorecard_summary(card: &Scorecard) -> String {
    let mut s = format!("seed {}, theta {}\n", card.seed, card.theta);
    for suite in &card.suites {
        let _ = writeln!(
            s,
            "{} {:<24} worst margin {:+.3e} over {} checks",
            if suite.passed { "PASS" } else { "FAIL" },
            suite.name,
            suite.worst_margin,
            suite.checks
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateOutput {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub f0: Option<Limit>,
    pub finf: Option<Limit>,
    pub classification: Classification,
    pub epsilon_max: f64,
    pub delta_min: f64,
}

impl CertificateOutput {
    pub fn new(p: &Problem, c: &Certificate) -> Self {
        Self {
            alpha: p.cone.alpha,
            beta: p.cone.beta,
            gamma: p.cone.gamma,
            theta: p.theta,
            f0: c.f0,
            finf: c.finf,
            classification: c.classification,
            epsilon_max: c.epsilon_max,
            delta_min: c.delta_min,
        }
    }
}

pub fn cmd_classify(cfg: &RunConfig, args: &CommonArgs) -> Result<i32> {
    let p = problem_from(cfg)?;
    let out = CertificateOutput::new(&p, &certificate(&p)?);
    let json = to_json(&out);
    write_file(cfg, &cfg.output.certificate_json, &json)?;
    if args.json {
        print(&json);
    } else {
        let show = |l: Option<Limit>| match l {
            Some(Limit::Finite(v)) => format!("{v}"),
            Some(Limit::Infinite) => "inf".into(),
            None => "unsettled".into(),
        };
        print(&format!(
            "{:?}: f0 = {}, finf = {}\nalpha {}, beta {}, gamma {}\nepsilon_max {}, delta_min {}",
            out.classification,
            show(out.f0),
            show(out.finf),
            out.alpha,
            out.beta,
            out.gamma,
            out.epsilon_max,
            out.delta_min
        ));
    }
    Ok(EXIT_OK)
}

/// `t,s,G,kernel,lower_envelope,upper_envelope` on an `m × m` grid. The
/// kernel column is `G` alone when no weight is given.
pub fn green_csv(cfg: &RunConfig, m: usize) -> Result<String> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("m = {m} must be at least 2")));
    }
    let q = cfg.quadrature_rule()?;
    let grid = uniform_grid(m);
    let weights = match cfg.problem.a.as_deref() {
        None => vec![0.0; m],
        Some(text) => {
            let a = Expression::parse(text, "t")?;
            let cone = cone_constants(&a, cfg.problem.theta, &q)?;
            grid.iter()
                .map(|&s| kernel_weight(s, &a, cone.alpha, &q))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut out = String::from("t,s,G,kernel,lower_envelope,upper_envelope\n");
    for &t in &grid {
        let r = rho(t)?;
        for (&s, w) in grid.iter().zip(&weights) {
            let g = green_unchecked(t, s);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                num(t),
                num(s),
                num(g),
                num(g + w),
                num(r * s * (1.0 - s) * (1.0 - s)),
                num(upper_envelope(s))
            );
        }
    }
    Ok(out)
}

pub fn cmd_green(cfg: &RunConfig, args: &CommonArgs, m: usize) -> Result<i32> {
    let csv = green_csv(cfg, m)?;
    let written = write_file(cfg, &cfg.output.green_csv, &csv)?;
    if args.csv || written.is_none() {
        print(&csv);
    }
    Ok(EXIT_OK)
}
