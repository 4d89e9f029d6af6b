//! Batch front end: sampling, fitting, moment and correlation queries,
//! density grids, and reduction reports over parameter files.
//!
//! Exit codes: 0 success, 2 input error (bad flags, unreadable or
//! malformed files), 3 domain or model error, 4 numerical
//! non-convergence.

mod params;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bibeta::{
    dirichlet_component_reduction, exact_correlation, exact_covariance, fit, joint_density_mc,
    magnussen_approx_correlation, magnussen_approx_covariance, pairwise_bivariate_reduction,
    product_moment, sample_bivariate_beta, sample_correlated_dirichlet, sample_multivariate_beta,
    BivariateBetaParams, Error, RngStream, SampleBatch,
};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use params::{ParamsDocument, ParamsKind};

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: String) -> Self {
        Failure { code: 2, message }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::SeriesDivergent { .. } | Error::SeriesOverflow { .. } => 4,
            _ => 3,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "bibeta",
    version,
    about = "Correlated beta and Dirichlet distributions: sampling, exact moments, fitting",
    after_help = "Parameter files are JSON with exactly one of the keys bivariate, multivariate, \
                  dirichlet, plus optional seed and n defaults. BIBETA_THREADS sets the worker \
                  thread count; --threads overrides it."
)]
struct Cli {
    /// Worker threads for sampling and grids (overrides BIBETA_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples and write them as delimited text
    Sample {
        /// Parameter file (any kind)
        #[arg(long)]
        params: PathBuf,
        /// Number of draws (overrides the file's n)
        #[arg(long)]
        n: Option<usize>,
        /// RNG seed (overrides the file's seed; default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the six-parameter bivariate model to two-column data
    Fit {
        /// Delimited x,y data; a non-numeric first row is treated as a header
        #[arg(long)]
        data: PathBuf,
        /// Output file for the fit report (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covariance and correlation of a parameter set
    Corr {
        /// Parameter file (exact/approx need bivariate; mc takes any kind)
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Draw count for --method mc
        #[arg(long, default_value_t = 1_000_000)]
        mc_n: usize,
        /// RNG seed for --method mc (overrides the file's seed; default 0)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact product moment E(X^k Y^l) of a bivariate parameter set
    Moments {
        #[arg(long)]
        params: PathBuf,
        #[arg(short, long)]
        k: u32,
        #[arg(short, long)]
        l: u32,
    },
    /// Monte-Carlo joint density on a square grid of cell midpoints
    DensityGrid {
        /// Bivariate parameter file
        #[arg(long)]
        params: PathBuf,
        /// Grid resolution per axis, 16 to 1024
        #[arg(long)]
        res: usize,
        /// Latent triples averaged per grid
        #[arg(long, default_value_t = 10_000)]
        n_latent: usize,
        /// RNG seed (overrides the file's seed; default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bivariate reductions of multivariate pairs or Dirichlet components
    Reduce {
        /// Multivariate or dirichlet parameter file
        #[arg(long)]
        params: PathBuf,
        /// 1-based dimension (pair with --j for multivariate, alone for dirichlet);
        /// omitted: report every pair or component
        #[arg(short, long)]
        i: Option<usize>,
        /// 1-based partner dimension (multivariate only)
        #[arg(short, long)]
        j: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Approx,
    Mc,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads(cli.threads)?;
    match cli.cmd {
        Cmd::Sample {
            params,
            n,
            seed,
            out,
        } => cmd_sample(&params, n, seed, out.as_deref()),
        Cmd::Fit { data, out } => cmd_fit(&data, out.as_deref()),
        Cmd::Corr {
            params,
            method,
            mc_n,
            seed,
        } => cmd_corr(&params, method, mc_n, seed),
        Cmd::Moments { params, k, l } => cmd_moments(&params, k, l),
        Cmd::DensityGrid {
            params,
            res,
            n_latent,
            seed,
            out,
        } => cmd_density_grid(&params, res, n_latent, seed, out.as_deref()),
        Cmd::Reduce { params, i, j } => cmd_reduce(&params, i, j),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("BIBETA_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Failure::input(format!(
                    "BIBETA_THREADS must be a positive integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::input(
                "thread count must be at least 1".to_string(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

/// 17 significant digits: enough for a lossless f64 round-trip.
fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            Failure::input(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Failure::input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn print_report<T: Serialize>(report: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Failure::input(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_output(None, &text)
}

fn cmd_sample(
    params_path: &Path,
    n_flag: Option<usize>,
    seed_flag: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let doc = ParamsDocument::load(params_path)?;
    let n = n_flag.or(doc.n).ok_or_else(|| {
        Failure::input("sample needs --n or an n field in the params file".to_string())
    })?;
    let seed = seed_flag.or(doc.seed).unwrap_or(0);
    let mut stream = RngStream::new(seed, 0);
    let table = match doc.resolve()? {
        ParamsKind::Bivariate(p) => {
            let batch = sample_bivariate_beta(&mut stream, &p, n)?;
            let mut table = String::from("x,y\n");
            for i in 0..batch.n {
                let _ = writeln!(
                    table,
                    "{},{}",
                    fmt_value(batch.xs[i]),
                    fmt_value(batch.ys[i])
                );
            }
            table
        }
        ParamsKind::Multivariate(p) => {
            let batch = sample_multivariate_beta(&mut stream, &p, n)?;
            let mut table = header(1..=batch.k, "x");
            for i in 0..batch.n {
                push_row(&mut table, batch.row(i));
            }
            table
        }
        ParamsKind::Dirichlet(p) => {
            let batch = sample_correlated_dirichlet(&mut stream, &p, n)?;
            let mut table = header(1..=batch.k, "x");
            table.pop();
            table.push(',');
            table.push_str(&header(1..=batch.k, "y"));
            for i in 0..batch.n {
                let mut row = Vec::with_capacity(2 * batch.k);
                row.extend_from_slice(batch.x_row(i));
                row.extend_from_slice(batch.y_row(i));
                push_row(&mut table, &row);
            }
            table
        }
    };
    write_output(out, &table)
}

fn header(dims: std::ops::RangeInclusive<usize>, prefix: &str) -> String {
    let cols: Vec<String> = dims.map(|d| format!("{prefix}{d}")).collect();
    format!("{}\n", cols.join(","))
}

fn push_row(table: &mut String, values: &[f64]) {
    let cols: Vec<String> = values.iter().map(|v| fmt_value(*v)).collect();
    table.push_str(&cols.join(","));
    table.push('\n');
}

#[derive(Serialize)]
struct FitReport {
    params: ParamsDocument,
    marginal_x: [f64; 2],
    marginal_y: [f64; 2],
    empirical: EmpiricalReport,
    achieved_corr: f64,
    delta1_max: f64,
    delta2_max: f64,
    objective_value: f64,
    iterations: u32,
    warnings: Vec<&'static str>,
}

#[derive(Serialize)]
struct EmpiricalReport {
    mean_x: f64,
    var_x: f64,
    mean_y: f64,
    var_y: f64,
    corr: f64,
}

fn cmd_fit(data_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (xs, ys) = read_pairs(data_path)?;
    let batch = SampleBatch::from_pairs(xs, ys)?;
    let result = fit(&batch)?;
    let p = &result.params;
    let report = FitReport {
        params: ParamsDocument {
            bivariate: Some(params::BivariateDoc {
                alpha: [p.alpha1(), p.alpha2()],
                beta: [p.beta1(), p.beta2()],
                delta: [p.delta1(), p.delta2()],
            }),
            multivariate: None,
            dirichlet: None,
            seed: None,
            n: None,
        },
        marginal_x: [p.a1(), p.a2()],
        marginal_y: [p.b1(), p.b2()],
        empirical: EmpiricalReport {
            mean_x: result.empirical.mean_x,
            var_x: result.empirical.var_x,
            mean_y: result.empirical.mean_y,
            var_y: result.empirical.var_y,
            corr: result.empirical.corr,
        },
        achieved_corr: result.achieved_corr,
        delta1_max: result.delta1_max,
        delta2_max: result.delta2_max,
        objective_value: result.objective_value,
        iterations: result.iterations,
        warnings: result.warnings.iter().map(|w| w.label()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::input(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_output(out, &text)
}

fn read_pairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read data file {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(values) if values.len() == 2 => {
                xs.push(values[0]);
                ys.push(values[1]);
            }
            Some(values) => {
                return Err(Failure::input(format!(
                    "{}:{}: expected 2 columns, found {}",
                    path.display(),
                    lineno + 1,
                    values.len()
                )));
            }
            // a non-numeric first row is a header; later ones are data errors
            None if lineno == 0 => continue,
            None => {
                return Err(Failure::input(format!(
                    "{}:{}: non-numeric field in {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    if xs.is_empty() {
        return Err(Failure::input(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((xs, ys))
}

#[derive(Serialize)]
struct CorrReport {
    method: &'static str,
    covariance: f64,
    correlation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    flags: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct PairCorrReport {
    pair: [usize; 2],
    covariance: f64,
    correlation: f64,
}

#[derive(Serialize)]
struct ComponentCorrReport {
    component: usize,
    covariance: f64,
    correlation: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum McCorrReport {
    Single(CorrReport),
    Pairs {
        method: &'static str,
        mc_n: usize,
        seed: u64,
        pairs: Vec<PairCorrReport>,
    },
    Components {
        method: &'static str,
        mc_n: usize,
        seed: u64,
        components: Vec<ComponentCorrReport>,
    },
}

fn cmd_corr(
    params_path: &Path,
    method: Method,
    mc_n: usize,
    seed_flag: Option<u64>,
) -> Result<(), Failure> {
    let doc = ParamsDocument::load(params_path)?;
    let kind = doc.resolve()?;
    match method {
        Method::Exact => {
            let p = bivariate_only(&kind, "corr --method exact")?;
            let cov = exact_covariance(p)?;
            let denom = (p.marginal_x().var() * p.marginal_y().var()).sqrt();
            let report = CorrReport {
                method: "exact",
                covariance: cov.value,
                correlation: cov.value / denom,
                converged: Some(cov.converged),
                flags: Vec::new(),
                mc_n: None,
                seed: None,
            };
            print_report(&report)?;
            if !cov.converged {
                return Err(Failure {
                    code: 4,
                    message: "series did not converge to its tolerance".to_string(),
                });
            }
            Ok(())
        }
        Method::Approx => {
            let p = bivariate_only(&kind, "corr --method approx")?;
            let (a1, a2, b1, b2) = (p.a1(), p.a2(), p.b1(), p.b2());
            let cov = magnussen_approx_covariance(a1, a2, b1, b2, p.delta1(), p.delta2())?;
            let r = magnussen_approx_correlation(a1, a2, b1, b2, p.delta1(), p.delta2())?;
            let flags = if r.abs() > 1.0 {
                vec!["OUT_OF_RANGE"]
            } else {
                Vec::new()
            };
            print_report(&CorrReport {
                method: "approx",
                covariance: cov,
                correlation: r,
                converged: None,
                flags,
                mc_n: None,
                seed: None,
            })
        }
        Method::Mc => {
            if mc_n < 2 {
                return Err(Failure::input(
                    "--mc-n must be at least 2 for a correlation".to_string(),
                ));
            }
            let seed = seed_flag.or(doc.seed).unwrap_or(0);
            let mut stream = RngStream::new(seed, 0);
            let report = match kind {
                ParamsKind::Bivariate(p) => {
                    let batch = sample_bivariate_beta(&mut stream, &p, mc_n)?;
                    let (cov, corr) = sample_cov_corr(&batch.xs, &batch.ys);
                    McCorrReport::Single(CorrReport {
                        method: "mc",
                        covariance: cov,
                        correlation: corr,
                        converged: None,
                        flags: Vec::new(),
                        mc_n: Some(mc_n),
                        seed: Some(seed),
                    })
                }
                ParamsKind::Multivariate(p) => {
                    let batch = sample_multivariate_beta(&mut stream, &p, mc_n)?;
                    let k = batch.k;
                    let mut pairs = Vec::new();
                    for i in 0..k {
                        for j in (i + 1)..k {
                            let xs: Vec<f64> =
                                (0..batch.n).map(|r| batch.row(r)[i]).collect();
                            let ys: Vec<f64> =
                                (0..batch.n).map(|r| batch.row(r)[j]).collect();
                            let (cov, corr) = sample_cov_corr(&xs, &ys);
                            pairs.push(PairCorrReport {
                                pair: [i + 1, j + 1],
                                covariance: cov,
                                correlation: corr,
                            });
                        }
                    }
                    McCorrReport::Pairs {
                        method: "mc",
                        mc_n,
                        seed,
                        pairs,
                    }
                }
                ParamsKind::Dirichlet(p) => {
                    let batch = sample_correlated_dirichlet(&mut stream, &p, mc_n)?;
                    let k = batch.k;
                    let mut components = Vec::new();
                    for i in 0..k {
                        let xs: Vec<f64> = (0..batch.n).map(|r| batch.x_row(r)[i]).collect();
                        let ys: Vec<f64> = (0..batch.n).map(|r| batch.y_row(r)[i]).collect();
                        let (cov, corr) = sample_cov_corr(&xs, &ys);
                        components.push(ComponentCorrReport {
                            component: i + 1,
                            covariance: cov,
                            correlation: corr,
                        });
                    }
                    McCorrReport::Components {
                        method: "mc",
                        mc_n,
                        seed,
                        components,
                    }
                }
            };
            print_report(&report)
        }
    }
}

fn bivariate_only<'a>(
    kind: &'a ParamsKind,
    what: &str,
) -> Result<&'a BivariateBetaParams, Failure> {
    match kind {
        ParamsKind::Bivariate(p) => Ok(p),
        _ => Err(Failure::input(format!(
            "{what} needs bivariate parameters"
        ))),
    }
}

fn sample_cov_corr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
        cov += (x - mean_x) * (y - mean_y);
    }
    var_x /= n - 1.0;
    var_y /= n - 1.0;
    cov /= n - 1.0;
    (cov, cov / (var_x * var_y).sqrt())
}

#[derive(Serialize)]
struct MomentReport {
    k: u32,
    l: u32,
    value: f64,
    converged: bool,
}

fn cmd_moments(params_path: &Path, k: u32, l: u32) -> Result<(), Failure> {
    let doc = ParamsDocument::load(params_path)?;
    let kind = doc.resolve()?;
    let p = bivariate_only(&kind, "moments")?;
    let m = product_moment(p, k, l)?;
    print_report(&MomentReport {
        k,
        l,
        value: m.value,
        converged: m.converged,
    })?;
    if !m.converged {
        return Err(Failure {
            code: 4,
            message: "series did not converge to its tolerance".to_string(),
        });
    }
    Ok(())
}

fn cmd_density_grid(
    params_path: &Path,
    res: usize,
    n_latent: usize,
    seed_flag: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if !(16..=1024).contains(&res) {
        return Err(Failure::input(format!(
            "--res must lie in [16, 1024], got {res}"
        )));
    }
    if n_latent == 0 {
        return Err(Failure::input(
            "--n-latent must be at least 1".to_string(),
        ));
    }
    let doc = ParamsDocument::load(params_path)?;
    let kind = doc.resolve()?;
    let p = bivariate_only(&kind, "density-grid")?;
    let seed = seed_flag.or(doc.seed).unwrap_or(0);
    let mut stream = RngStream::new(seed, 0);
    let grid = joint_density_mc(p, res, res, n_latent, &mut stream)?;
    let mut table = String::from("x,y,density\n");
    for iy in 0..grid.ny() {
        for ix in 0..grid.nx() {
            let _ = writeln!(
                table,
                "{},{},{}",
                fmt_value(grid.x_node(ix)),
                fmt_value(grid.y_node(iy)),
                fmt_value(grid.value(ix, iy))
            );
        }
    }
    write_output(out, &table)
}

#[derive(Serialize)]
struct ReductionReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    component: Option<usize>,
    alpha: [f64; 2],
    beta: [f64; 2],
    delta: [f64; 2],
    covariance: f64,
    correlation: f64,
    converged: bool,
}

#[derive(Serialize)]
struct ReduceReport {
    reductions: Vec<ReductionReport>,
}

fn cmd_reduce(
    params_path: &Path,
    i_flag: Option<usize>,
    j_flag: Option<usize>,
) -> Result<(), Failure> {
    let doc = ParamsDocument::load(params_path)?;
    let kind = doc.resolve()?;
    let mut reductions = Vec::new();
    match &kind {
        ParamsKind::Bivariate(_) => {
            return Err(Failure::input(
                "reduce needs multivariate or dirichlet parameters".to_string(),
            ));
        }
        ParamsKind::Multivariate(p) => {
            let k = p.k();
            let pairs: Vec<[usize; 2]> = match (i_flag, j_flag) {
                (Some(i), Some(j)) => {
                    for (name, v) in [("--i", i), ("--j", j)] {
                        if v < 1 || v > k {
                            return Err(Failure::input(format!(
                                "{name} must be a 1-based dimension at most {k}, got {v}"
                            )));
                        }
                    }
                    vec![[i, j]]
                }
                (None, None) => (1..=k)
                    .flat_map(|i| ((i + 1)..=k).map(move |j| [i, j]))
                    .collect(),
                _ => {
                    return Err(Failure::input(
                        "multivariate reduction takes --i and --j together or neither"
                            .to_string(),
                    ));
                }
            };
            for [i, j] in pairs {
                let r = pairwise_bivariate_reduction(p, i - 1, j - 1)?;
                reductions.push(reduction_report(Some([i, j]), None, &r)?);
            }
        }
        ParamsKind::Dirichlet(p) => {
            if j_flag.is_some() {
                return Err(Failure::input(
                    "dirichlet reduction takes --i only".to_string(),
                ));
            }
            let k = p.k();
            let components: Vec<usize> = match i_flag {
                Some(i) => {
                    if i < 1 || i > k {
                        return Err(Failure::input(format!(
                            "--i must be a 1-based component at most {k}, got {i}"
                        )));
                    }
                    vec![i]
                }
                None => (1..=k).collect(),
            };
            for i in components {
                let r = dirichlet_component_reduction(p, i - 1)?;
                reductions.push(reduction_report(None, Some(i), &r)?);
            }
        }
    }
    print_report(&ReduceReport { reductions })
}

fn reduction_report(
    pair: Option<[usize; 2]>,
    component: Option<usize>,
    r: &BivariateBetaParams,
) -> Result<ReductionReport, Failure> {
    let cov = exact_covariance(r)?;
    let corr = exact_correlation(r)?;
    Ok(ReductionReport {
        pair,
        component,
        alpha: [r.alpha1(), r.alpha2()],
        beta: [r.beta1(), r.beta2()],
        delta: [r.delta1(), r.delta2()],
        covariance: cov.value,
        correlation: corr.value,
        converged: cov.converged && corr.converged,
    })
}
