use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diracgap::discretization::{assemble_a, assemble_lmu, assemble_schrodinger, ConjugateSign, DiscreteOperator};
use diracgap::experiments::{
    fit_rate, profile_rows, selftest, sweep_mu, sweep_p, threshold_lattice, write_csv, write_json, ResolutionPolicy,
    SelftestOptions,
};
use diracgap::grid::build_grid;
use diracgap::spectral::{gamma_bound, gap_eigs, minmax_grid, MinMaxReport};
use diracgap::threshold::{
    gauge_symmetrize, matched_solution, pauli_decompose, shoot_threshold, simplicity_check, threshold_report,
    MatrixPotential, SampledPotential, Side,
};
use diracgap::{Error, ModelParams};

#[derive(Parser)]
#[command(name = "diracgap", version, about = "Gap eigenvalues and threshold analysis for linearized Soler operators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Mass.
    #[arg(long, global = true, default_value_t = 1.0)]
    m: f64,
    /// Frequency, in (0, m).
    #[arg(long, global = true, default_value_t = 0.5)]
    omega: f64,
    /// Nonlinearity power.
    #[arg(long, global = true, default_value_t = 1.0)]
    p: f64,
    /// Coupling of the Q term.
    #[arg(long, global = true, default_value_t = 0.0)]
    mu: f64,
    /// Half-length of the domain (default depends on the subcommand).
    #[arg(long, global = true)]
    xmax: Option<f64>,
    /// Node count (default depends on the subcommand).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write a two-column x,y file for plotting.
    #[arg(long, global = true)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorChoice {
    /// A_p in the scaled frame.
    A,
    /// L_mu in the original frame.
    L,
    SchrodingerMinus,
    SchrodingerPlus,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdChoice {
    Plus,
    Minus,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form profiles on a uniform grid.
    Profiles,
    /// Gap eigenvalues of a discretized operator.
    Spectrum {
        #[arg(long, value_enum, default_value_t = OperatorChoice::A)]
        operator: OperatorChoice,
        /// Write the matrix as `row col value` triplets.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Extra eigenvalue of A_p over a list of powers.
    SweepP {
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.85,0.9,0.95,1,1.5,2")]
        p_list: Vec<f64>,
        /// Skip the doubled-resolution validation.
        #[arg(long)]
        no_refine: bool,
    },
    /// Gap eigenvalue counts of L_mu over a list of couplings.
    SweepMu {
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
        mu_list: Vec<f64>,
    },
    /// Threshold classification by shooting.
    Threshold {
        #[arg(long, value_enum, default_value_t = ThresholdChoice::Both)]
        side: ThresholdChoice,
        /// Sampled potential CSV: x,re11,im11,re12,im12,re21,im21,re22,im22.
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Run the exploratory (p, omega) lattice instead of one point.
        #[arg(long)]
        lattice: bool,
    },
    /// Min-max upper bound for the level emerging below m at p = 1 - eps.
    Minmax {
        #[arg(long, value_delimiter = ',', default_value = "0.02,0.01")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Grid spacing.
        #[arg(long, default_value_t = 0.05)]
        h: f64,
    },
    /// Cross-module identity suite.
    Selftest {
        /// Multiply the profile in the first mass form (fault injection).
        #[arg(long, default_value_t = 1.0, hide = true)]
        fault_g_scale: f64,
        /// Coarsest node count of the refinement study.
        #[arg(long, default_value_t = 512)]
        base_n: usize,
    },
}

enum Failure {
    Core(Error),
    Io(io::Error),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Plot = Vec<(f64, f64)>;

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(common: &Common, rows: &[T]) -> Result<(), Failure> {
    let mut out = open_out(&common.out)?;
    match common.format {
        Format::Csv => write_csv(rows, &mut out)?,
        Format::Json => write_json(rows, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn emit_plot(common: &Common, plot: &Plot) -> Result<(), Failure> {
    if let Some(path) = &common.emit_plot_data {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "x,y")?;
        for (x, y) in plot {
            writeln!(out, "{x},{y}")?;
        }
        out.flush()?;
    }
    Ok(())
}

fn params(common: &Common) -> Result<ModelParams, Error> {
    ModelParams::new(common.m, common.omega, common.p, common.mu)
}

fn default_half_length(params: &ModelParams) -> f64 {
    40.0 / params.kappa()
}

fn run_profiles(common: &Common) -> Result<Plot, Failure> {
    let pm = params(common)?;
    let half = common.xmax.unwrap_or(20.0 / (pm.p() * pm.kappa()));
    let rows = profile_rows(&pm, half, common.n.unwrap_or(801))?;
    emit(common, &rows)?;
    Ok(rows.iter().map(|r| (r.x, r.mass)).collect())
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    eigenvalue: f64,
    residual: f64,
    parity: String,
    parity_defect: f64,
    suspect: bool,
    #[serde(rename = "L")]
    half_length: f64,
    n: usize,
}

fn run_spectrum(common: &Common, operator: OperatorChoice, dump: &Option<PathBuf>) -> Result<Plot, Failure> {
    let pm = params(common)?;
    let n = common.n.unwrap_or(4096);
    let op: DiscreteOperator = match operator {
        OperatorChoice::A => assemble_a(&pm, &build_grid(common.xmax.unwrap_or(default_half_length(&pm)), n)?),
        OperatorChoice::L => {
            let half = common.xmax.unwrap_or(default_half_length(&pm) / pm.p());
            assemble_lmu(&pm, &build_grid(half, n)?)
        }
        OperatorChoice::SchrodingerMinus | OperatorChoice::SchrodingerPlus => {
            let sign = if matches!(operator, OperatorChoice::SchrodingerMinus) {
                ConjugateSign::Minus
            } else {
                ConjugateSign::Plus
            };
            let half = common.xmax.unwrap_or(default_half_length(&pm) / pm.p());
            assemble_schrodinger(&pm, &build_grid(half, n)?, sign)
        }
    };
    if let Some(w) = op.domain_warning() {
        eprintln!("warning: {w}");
    }
    if let Some(path) = dump {
        let mut out = BufWriter::new(File::create(path)?);
        op.dump_triplets(&mut out)?;
        out.flush()?;
    }
    let report = gap_eigs(&op)?;
    let rows: Vec<EigenRow> = (0..report.eigenvalues.len())
        .map(|i| EigenRow {
            index: i,
            eigenvalue: report.eigenvalues[i],
            residual: report.residuals[i],
            parity: report.parities[i].to_string(),
            parity_defect: report.parity_defects[i],
            suspect: report.suspect_flags[i],
            half_length: report.half_length,
            n: report.n,
        })
        .collect();
    emit(common, &rows)?;
    Ok(rows.iter().map(|r| (r.index as f64, r.eigenvalue)).collect())
}

fn policy(common: &Common, refine: bool) -> ResolutionPolicy {
    let mut policy = ResolutionPolicy { refine, ..ResolutionPolicy::default() };
    if let Some(n) = common.n {
        policy.base_n = n;
    }
    if let Some(x) = common.xmax {
        policy.max_half_length = x;
    }
    policy
}

fn run_sweep_p(common: &Common, ps: &[f64], refine: bool) -> Result<Plot, Failure> {
    ModelParams::new(common.m, common.omega, 1.0, 0.0)?;
    let records = sweep_p(common.m, common.omega, ps, &policy(common, refine))?;
    emit(common, &records)?;
    if let Ok(fit) = fit_rate(&records) {
        eprintln!(
            "rate fit over p in [{}, {}]: slope {:.4}, r^2 {:.6}, {} points",
            fit.p_range.0, fit.p_range.1, fit.slope, fit.r_squared, fit.points
        );
    }
    Ok(records.iter().filter_map(|r| r.threshold_distance.map(|d| (r.p, d))).collect())
}

fn run_sweep_mu(common: &Common, mus: &[f64]) -> Result<Plot, Failure> {
    let pm = params(common)?;
    let records = sweep_mu(&pm, mus, &policy(common, false))?;
    emit(common, &records)?;
    Ok(records.iter().map(|r| (r.mu, r.count_upper as f64)).collect())
}

#[derive(Serialize)]
struct ThresholdRow {
    source: String,
    lambda: f64,
    classification: String,
    matched: bool,
    match_defect: f64,
    l_minus: f64,
    l_plus: f64,
    decay_exponent: Option<f64>,
    wronskian_drift: f64,
    dimension: usize,
    trivial_branch: bool,
    cutoff: f64,
}

fn run_threshold(
    common: &Common,
    side: ThresholdChoice,
    potential: &Option<PathBuf>,
    lattice: bool,
) -> Result<Plot, Failure> {
    if lattice {
        let ps = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0];
        let omegas: Vec<f64> = [0.2, 0.5, 0.8].iter().map(|w| w * common.m).collect();
        let records = threshold_lattice(common.m, &ps, &omegas, 30.0)?;
        eprintln!("lattice classification is exploratory");
        emit(common, &records)?;
        return Ok(Vec::new());
    }
    let m = common.m;
    let (source, v) = match potential {
        Some(path) => {
            let sampled = MatrixPotential::Sampled(SampledPotential::from_csv(File::open(path)?)?);
            let pauli = pauli_decompose(&sampled, None)?;
            if !pauli.alpha2_real {
                return Err(Error::AssumptionViolated(format!(
                    "alpha_2 is not real (max |Im| = {:.3e})",
                    pauli.alpha2_imag
                ))
                .into());
            }
            (path.display().to_string(), gauge_symmetrize(&sampled)?.potential)
        }
        None => {
            let pm = params(common)?;
            (format!("soler p={} omega={} mu={}", pm.p(), pm.omega(), pm.mu()), MatrixPotential::Soler(pm))
        }
    };
    let lambdas: Vec<f64> = match side {
        ThresholdChoice::Plus => vec![m],
        ThresholdChoice::Minus => vec![-m],
        ThresholdChoice::Both => vec![m, -m],
    };
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let r = threshold_report(&v, m, lambda)?;
        let s = simplicity_check(&v, m, lambda)?;
        rows.push(ThresholdRow {
            source: source.clone(),
            lambda,
            classification: r.classification.to_string(),
            matched: r.matched,
            match_defect: r.match_defect,
            l_minus: r.l_minus.norm(),
            l_plus: r.l_plus.norm(),
            decay_exponent: r.decay_exponent,
            wronskian_drift: r.wronskian_drift,
            dimension: s.dimension,
            trivial_branch: r.trivial_branch,
            cutoff: r.cutoff,
        });
    }
    emit(common, &rows)?;
    let left = shoot_threshold(&v, m, Side::Left, lambdas[0])?;
    let right = shoot_threshold(&v, m, Side::Right, lambdas[0])?;
    let (xs, sol) = matched_solution(&left, &right);
    Ok(xs.into_iter().zip(sol).map(|(x, s)| (x, s[0].norm())).collect())
}

fn run_minmax(common: &Common, eps: &[f64], alpha: f64, h: f64) -> Result<Plot, Failure> {
    let pm = params(common)?.with_p(1.0)?;
    let mut rows: Vec<MinMaxReport> = Vec::new();
    for &e in eps {
        let grid = minmax_grid(&pm, e, alpha, h)?;
        rows.push(gamma_bound(&assemble_a(&pm, &grid), e, alpha)?);
    }
    emit(common, &rows)?;
    Ok(rows.iter().map(|r| (r.epsilon, r.drop_ratio)).collect())
}

fn run_selftest(common: &Common, fault_g_scale: f64, base_n: usize) -> Result<Plot, Failure> {
    let opts = SelftestOptions { m: common.m, omega: common.omega, g_scale: fault_g_scale, base_n };
    let report = selftest(&opts);
    match common.format {
        Format::Json => emit(common, &report.checks)?,
        Format::Csv => {
            let mut out = open_out(&common.out)?;
            for c in &report.checks {
                writeln!(
                    out,
                    "{:<22} {:<4} value {:>10.3e}  tol {:>8.1e}  {}",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.value,
                    c.tolerance,
                    c.detail
                )?;
            }
            out.flush()?;
        }
    }
    if report.passed() {
        Ok(Vec::new())
    } else {
        Err(Failure::ChecksFailed)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let plot = match &cli.command {
        Command::Profiles => run_profiles(common)?,
        Command::Spectrum { operator, dump_matrix } => run_spectrum(common, *operator, dump_matrix)?,
        Command::SweepP { p_list, no_refine } => run_sweep_p(common, p_list, !no_refine)?,
        Command::SweepMu { mu_list } => run_sweep_mu(common, mu_list)?,
        Command::Threshold { side, potential, lattice } => run_threshold(common, *side, potential, *lattice)?,
        Command::Minmax { eps, alpha, h } => run_minmax(common, eps, *alpha, *h)?,
        Command::Selftest { fault_g_scale, base_n } => run_selftest(common, *fault_g_scale, *base_n)?,
    };
    emit_plot(common, &plot)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(Error::InvalidArgument(msg))) => {
            eprintln!("error: invalid argument: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e @ Error::AssumptionViolated(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::ChecksFailed) => {
            eprintln!("selftest failed");
            ExitCode::from(3)
        }
    }
}
