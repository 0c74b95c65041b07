use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use corrected_poisson::bounds::{
    check_classic, check_lower3, check_remark2, check_sandwich, check_theorem2, check_theorem3, check_theta,
    fit_points, rate_point, run_corpus, Approximant, BoundReport, RandomCorpus, RateFit, RateMetric,
};
use corrected_poisson::corrected::{build_phi_nu, CorrectionSpec};
use corrected_poisson::distances::{d2, d2_exact_product, d2_tilde, hellinger, tv, wasserstein, DistanceResult};
use corrected_poisson::exact::{
    c_constant, compare_with_published, gamma::rational_string, q_polynomial, solve_gamma_table,
};
use corrected_poisson::json;
use corrected_poisson::pmf::{factorial_moments_sn, poisson_binomial_pmf, ProbVector};
use corrected_poisson::Error;

#[derive(Parser)]
#[command(name = "corrpois", version, about = "Corrected Poisson approximations for sums of Bernoulli indicators")]
struct Cli {
    /// Output format; scan defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Masses of the order-ν corrected measure.
    Pmf {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Distance between S_n and the order-ν corrected measure.
    Distance {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        metric: Metric,
        /// Product formula for d2 (falls back to the series if domination fails).
        #[arg(long)]
        exact: bool,
        /// Truncation point of the moment series.
        #[arg(long)]
        mmax: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Verify an inequality; exits 1 when any report fails.
    Bounds {
        #[arg(long, value_enum)]
        check: Check,
        #[command(flatten)]
        input: OptionalInput,
        #[arg(long)]
        mmax: Option<usize>,
        /// Largest s for the theta check.
        #[arg(long, default_value_t = 4)]
        smax: usize,
        /// For remark2.
        #[arg(long)]
        lambda: Option<f64>,
        /// For remark2.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
        n_grid: Vec<u64>,
        /// Run the check over this many random vectors instead of one input.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, default_value_t = 0.5)]
        p_max: f64,
    },
    /// Exact γ coefficients for the binomial case.
    GammaTable {
        #[arg(long)]
        nu: usize,
        /// Diff against the embedded published table.
        #[arg(long)]
        compare_paper: bool,
    },
    /// Coefficients of Q_ν, optionally with C_{ν+1}(λ).
    Qpoly {
        #[arg(long)]
        nu: usize,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Distances along an n grid for Bin(n, λ/n) with log-log slope fits.
    Scan {
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<u64>,
        /// Comma list of orders; `phi3-tilde` is also accepted.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<String>,
        #[arg(long, value_enum, default_value = "d2")]
        metric: ScanMetric,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputSource {
    /// Text file with one probability per line, or a JSON array.
    #[arg(long)]
    probs: Option<PathBuf>,
    /// N copies of LAMBDA/N.
    #[arg(long, num_args = 2, value_names = ["N", "LAMBDA"])]
    binomial: Option<Vec<String>>,
}

#[derive(Args)]
struct Input {
    #[command(flatten)]
    source: InputSource,
    #[arg(long, default_value = "1")]
    order: String,
}

#[derive(Args)]
struct OptionalInput {
    #[arg(long, conflicts_with = "binomial")]
    probs: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["N", "LAMBDA"])]
    binomial: Option<Vec<String>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Tv,
    D2,
    D2tilde,
    Wass,
    Hellinger,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanMetric {
    Tv,
    D2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Theorem2,
    Theorem3,
    Sandwich,
    Lower3,
    Theta,
    Remark2,
    Classic,
}

enum Failure {
    Io(String),
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) | Failure::Usage(_) => 2,
            Failure::Lib(Error::ProbabilityOutOfRange { .. } | Error::Parse(_)) => 2,
            Failure::Lib(Error::Domain(_)) => 3,
            Failure::Lib(Error::SignedMeasure(_)) => 4,
            Failure::Lib(Error::InsufficientData(_)) => 5,
            Failure::Lib(Error::Internal(_)) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) | Failure::Usage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// The input vector plus the binomial parameters when it came from --binomial.
struct Loaded {
    p: ProbVector,
    binomial: Option<(u64, f64)>,
}

fn load(probs: Option<&PathBuf>, binomial: Option<&Vec<String>>) -> CliResult<Loaded> {
    if let Some(path) = probs {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        return Ok(Loaded { p: ProbVector::parse(&text)?, binomial: None });
    }
    let args = binomial.ok_or_else(|| Failure::Usage("one of --probs or --binomial is required".into()))?;
    let n: u64 = args[0].parse().map_err(|_| Failure::Usage(format!("bad N '{}'", args[0])))?;
    let lambda: f64 = args[1].parse().map_err(|_| Failure::Usage(format!("bad LAMBDA '{}'", args[1])))?;
    Ok(Loaded { p: ProbVector::equal(n as usize, lambda)?, binomial: Some((n, lambda)) })
}

fn spec_for(input: &Loaded, order: &str) -> CliResult<CorrectionSpec> {
    let approx = Approximant::parse(order)?;
    match (approx, input.binomial) {
        (_, Some((n, lambda))) => Ok(approx.spec(&input.p, n, lambda)?),
        (Approximant::Order(nu), None) if nu >= 4 => Err(Failure::Lib(Error::Domain(format!(
            "order {nu} needs the binomial table; use --binomial"
        )))),
        (_, None) => Ok(approx.spec(&input.p, input.p.len() as u64, input.p.lambda())?),
    }
}

#[derive(Serialize)]
struct PmfOut<'a> {
    support_max: usize,
    mass: &'a [f64],
    tail_bound: f64,
    label: &'a str,
}

fn csv_float(x: f64) -> String {
    if x.is_finite() {
        json::format_float(x)
    } else {
        x.to_string()
    }
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_float).unwrap_or_default()
}

fn cmd_pmf(input: &Input, kmax: Option<usize>, format: Format) -> CliResult<String> {
    let loaded = load(input.source.probs.as_ref(), input.source.binomial.as_ref())?;
    let spec = spec_for(&loaded, &input.order)?;
    let m = build_phi_nu(&spec, kmax)?;
    let pmf = &m.pmf;
    Ok(match format {
        Format::Json => json::to_string(&PmfOut {
            support_max: pmf.support_max(),
            mass: pmf.mass(),
            tail_bound: pmf.tail_bound(),
            label: pmf.label(),
        }),
        Format::Csv => {
            let mut s = String::from("k,mass\n");
            for (k, &x) in pmf.mass().iter().enumerate() {
                writeln!(s, "{k},{}", csv_float(x)).unwrap();
            }
            writeln!(s, "# tail_bound={} label={}", csv_float(pmf.tail_bound()), pmf.label()).unwrap();
            s
        }
    })
}

fn cmd_distance(
    input: &Input,
    metric: Metric,
    exact: bool,
    mmax: Option<usize>,
    kmax: Option<usize>,
    format: Format,
) -> CliResult<String> {
    let loaded = load(input.source.probs.as_ref(), input.source.binomial.as_ref())?;
    let spec = spec_for(&loaded, &input.order)?;
    if exact && !matches!(metric, Metric::D2) {
        return Err(Failure::Usage("--exact applies to --metric d2 only".into()));
    }
    let result: DistanceResult = match metric {
        Metric::D2 if exact => d2_exact_product(&loaded.p, &spec)?,
        Metric::D2 => d2(&factorial_moments_sn(&loaded.p), &spec.moments(), mmax)?,
        Metric::D2tilde => d2_tilde(&factorial_moments_sn(&loaded.p), &spec.moments(), mmax)?,
        pointwise => {
            let g1 = poisson_binomial_pmf(&loaded.p);
            let g2 = build_phi_nu(&spec, kmax)?.pmf;
            match pointwise {
                Metric::Tv => tv(&g1, &g2),
                Metric::Wass => wasserstein(&g1, &g2),
                _ => hellinger(&g1, &g2)?,
            }
        }
    };
    Ok(match format {
        Format::Json => json::to_string(&result),
        Format::Csv => {
            let method = json::to_string(&result.method);
            format!(
                "value,truncation_error,method\n{},{},{}\n",
                csv_float(result.value),
                csv_float(result.truncation_error),
                method.trim_matches('"')
            )
        }
    })
}

fn reports_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from("name,lhs,rhs,holds,slack\n");
    for r in reports {
        writeln!(
            s,
            "\"{}\",{},{},{},{}",
            r.name.replace('"', "\"\""),
            csv_float(r.lhs),
            csv_float(r.rhs),
            r.holds,
            csv_float(r.slack)
        )
        .unwrap();
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    check: Check,
    input: &OptionalInput,
    mmax: Option<usize>,
    smax: usize,
    lambda: Option<f64>,
    n_grid: &[u64],
    random: Option<usize>,
    corpus: (u64, usize, f64),
    format: Format,
) -> CliResult<(String, bool)> {
    if let Check::Remark2 = check {
        let lambda = lambda.ok_or_else(|| Failure::Usage("remark2 needs --lambda".into()))?;
        let report = check_remark2(lambda, n_grid)?;
        let holds = report.as_bound_report().holds;
        return Ok(match format {
            Format::Json => (json::to_string(&report), holds),
            Format::Csv => {
                let mut s = String::from("n,value,limit\n");
                for (n, v) in report.grid.iter().zip(&report.values) {
                    writeln!(s, "{n},{},{}", csv_float(*v), csv_float(report.limit)).unwrap();
                }
                (s, holds)
            }
        });
    }
    let run = |p: &ProbVector| -> corrected_poisson::Result<Vec<BoundReport>> {
        match check {
            Check::Theorem2 => check_theorem2(p),
            Check::Theorem3 => check_theorem3(p),
            Check::Sandwich => check_sandwich(p, mmax.unwrap_or(10)),
            Check::Lower3 => check_lower3(p, mmax.unwrap_or(10)),
            Check::Theta => check_theta(p, mmax.unwrap_or(8), smax),
            Check::Classic => check_classic(p),
            Check::Remark2 => unreachable!(),
        }
    };
    if let Some(count) = random {
        let (seed, n_max, p_max) = corpus;
        let summary = run_corpus(&mut RandomCorpus::new(seed, n_max, p_max)?, count, run)?;
        let holds = summary.failures.is_empty();
        return Ok(match format {
            Format::Json => (json::to_string(&summary), holds),
            Format::Csv => (reports_csv(&summary.failures), holds),
        });
    }
    let loaded = load(input.probs.as_ref(), input.binomial.as_ref())?;
    let reports = run(&loaded.p)?;
    let holds = reports.iter().all(|r| r.holds);
    Ok(match format {
        Format::Json => (json::to_string(&reports), holds),
        Format::Csv => (reports_csv(&reports), holds),
    })
}

#[derive(Serialize)]
struct GammaOut {
    nu: usize,
    gamma: std::collections::BTreeMap<usize, Vec<(usize, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mismatches: Option<Vec<corrected_poisson::exact::TableMismatch>>,
}

fn cmd_gamma_table(nu: usize, compare: bool, format: Format) -> CliResult<String> {
    let table = solve_gamma_table(nu)?;
    let mismatches = if compare {
        Some(compare_with_published(&table).ok_or_else(|| {
            Failure::Lib(Error::Domain(format!("the published table has no column for nu = {nu}")))
        })?)
    } else {
        None
    };
    let export = table.export();
    Ok(match format {
        Format::Json => json::to_string(&GammaOut { nu, gamma: export.gamma, mismatches }),
        Format::Csv => {
            let mut s = String::from("j,power,coefficient\n");
            for (j, terms) in &export.gamma {
                for (power, c) in terms {
                    writeln!(s, "{j},{power},{c}").unwrap();
                }
            }
            for m in mismatches.iter().flatten() {
                writeln!(
                    s,
                    "# mismatch j={} power={} published={} computed={} typo_candidate={}",
                    m.j, m.power, m.published, m.computed, m.typo_candidate
                )
                .unwrap();
            }
            s
        }
    })
}

#[derive(Serialize)]
struct QpolyOut {
    nu: usize,
    coefficients: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<corrected_poisson::exact::CConstant>,
}

fn cmd_qpoly(nu: usize, lambda: Option<f64>, format: Format) -> CliResult<String> {
    let q = q_polynomial(nu)?;
    let coefficients: Vec<String> = q.coeffs().iter().map(rational_string).collect();
    let c = lambda.map(|l| c_constant(nu + 1, l)).transpose()?;
    Ok(match format {
        Format::Json => json::to_string(&QpolyOut { nu, coefficients, c }),
        Format::Csv => {
            let mut s = String::from("power,coefficient\n");
            for (i, coeff) in coefficients.iter().enumerate() {
                writeln!(s, "{i},{coeff}").unwrap();
            }
            if let Some(c) = c {
                writeln!(s, "# C_{}({})={}", c.nu, csv_float(c.lambda), csv_float(c.closed_form)).unwrap();
            }
            s
        }
    })
}

#[derive(Serialize)]
struct ScanOut {
    fits: Vec<RateFit>,
}

fn cmd_scan(lambda: f64, grid: &[u64], orders: &[String], metric: ScanMetric, format: Format) -> CliResult<String> {
    let metric = match metric {
        ScanMetric::Tv => RateMetric::Tv,
        ScanMetric::D2 => RateMetric::D2,
    };
    let approximants = orders.iter().map(|o| Approximant::parse(o)).collect::<Result<Vec<_>, _>>()?;
    if !(lambda > 0.0) {
        return Err(Failure::Lib(Error::Domain("lambda must be positive".into())));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Lib(Error::Domain("n grid must be strictly increasing".into())));
    }
    let mut rows = String::from("n,order,distance,bound\n");
    let mut fits = Vec::new();
    for approx in approximants {
        let mut points = Vec::new();
        for &n in grid.iter().filter(|&&n| n as f64 >= 2.0 * lambda) {
            let pt = rate_point(lambda, n, approx, metric)?;
            writeln!(rows, "{},{},{},{}", n, approx.label(), csv_float(pt.distance), csv_opt(pt.bound)).unwrap();
            points.push(pt);
        }
        fits.push(fit_points(lambda, approx, metric, points)?);
    }
    Ok(match format {
        Format::Json => json::to_string(&ScanOut { fits }),
        Format::Csv => {
            for fit in &fits {
                writeln!(rows, "# {}", json::to_string(fit)).unwrap();
            }
            rows
        }
    })
}

fn run(cli: Cli) -> CliResult<(String, bool)> {
    let fmt = cli.format.unwrap_or(Format::Json);
    let ok = |s: String| (s, true);
    match cli.command {
        Command::Pmf { input, kmax } => cmd_pmf(&input, kmax, fmt).map(ok),
        Command::Distance { input, metric, exact, mmax, kmax } => {
            cmd_distance(&input, metric, exact, mmax, kmax, fmt).map(ok)
        }
        Command::Bounds { check, input, mmax, smax, lambda, n_grid, random, seed, n_max, p_max } => {
            cmd_bounds(check, &input, mmax, smax, lambda, &n_grid, random, (seed, n_max, p_max), fmt)
        }
        Command::GammaTable { nu, compare_paper } => cmd_gamma_table(nu, compare_paper, fmt).map(ok),
        Command::Qpoly { nu, lambda } => cmd_qpoly(nu, lambda, fmt).map(ok),
        Command::Scan { lambda, n_grid, orders, metric } => {
            cmd_scan(lambda, &n_grid, &orders, metric, cli.format.unwrap_or(Format::Csv)).map(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, holds)) => {
            if out.ends_with('\n') {
                print!("{out}");
            } else {
                println!("{out}");
            }
            if holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("corrpois: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
