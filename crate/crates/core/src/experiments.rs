//! Parameter sweeps, the emergence-rate fit, the threshold lattice, profile
//! tables and the self-test suite, plus CSV/JSON writers.

use std::io::Write;

use serde::Serialize;

use crate::closed_forms::{
    self, constants, energy_density_forms, g_profile, potential_m_forms, potential_m_forms_with, solitary_wave,
    w_expectation_identity, ThresholdSide,
};
use crate::discretization::{assemble_a, assemble_lmu, assemble_q, identity_between_as_defect};
use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::parallel;
use crate::params::ModelParams;
use crate::spectral::{energy_drop_check, gap_eigs, Parity, SpectrumReport, PARITY_TOL};
use crate::threshold::{
    kneser_check, simplicity_check, threshold_report, Classification, MatrixPotential, ThresholdReport,
};

/// Column order of sweep CSV files.
pub const CSV_HEADER: &str = "p,omega,mu,lambda_extra,threshold_distance,L,n,residual,flag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFlag {
    Ok,
    NoExtra,
    UnexpectedExtra,
    ResolutionInsufficient,
    Unrefined,
    Unresolved,
    TrackingLost,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub p: f64,
    pub omega: f64,
    pub mu: f64,
    /// Extra gap eigenvalue of `A_p` in `(omega, m)`.
    pub lambda_extra: Option<f64>,
    pub threshold_distance: Option<f64>,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub residual: Option<f64>,
    pub flag: SweepFlag,
}

/// Grid selection for `sweep_p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolutionPolicy {
    /// Node count for `p >= 1` and lower bound otherwise.
    pub base_n: usize,
    /// Initial `C` in the distance estimate `C (1-p)^2`.
    pub initial_constant: f64,
    pub max_half_length: f64,
    pub max_h: f64,
    pub max_n: usize,
    /// Recompute every `p < 1` point with twice the nodes.
    pub refine: bool,
    /// Largest eigenvector magnitude allowed at the domain edge, relative.
    pub tail_tol: f64,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self {
            base_n: 4096,
            initial_constant: 0.8,
            max_half_length: 2000.0,
            max_h: 0.05,
            max_n: 1 << 21,
            refine: true,
            tail_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPlan {
    pub half_length: f64,
    pub n: usize,
    /// The policy wanted a larger domain or more nodes than allowed.
    pub capped: bool,
}

impl ResolutionPolicy {
    /// Domain and node count for `A_p` (scaled frame) given the current
    /// distance constant.
    pub fn plan(&self, params: &ModelParams, constant: f64) -> GridPlan {
        let (m, p) = (params.m(), params.p());
        let core = 40.0 / params.kappa();
        if p >= 1.0 {
            return GridPlan { half_length: core, n: self.base_n, capped: false };
        }
        let d = constant * (1.0 - p).powi(2);
        // The derivative in A_p carries a factor p, so decay lengths scale with it.
        let decay = p / (2.0 * m * d).sqrt();
        let wanted = 15.0 * decay;
        let half_length = core.max(wanted.min(self.max_half_length));
        // Keep the suspect band 10 h^2 m^3 below a quarter of the distance.
        let h = self.max_h.min(decay / 20.0).min((d / (40.0 * m.powi(3))).sqrt());
        let mut n = ((2.0 * half_length / h).ceil() as usize).max(self.base_n);
        n += n % 2;
        let mut capped = wanted > self.max_half_length;
        if n > self.max_n {
            n = self.max_n;
            capped = true;
        }
        GridPlan { half_length, n, capped }
    }
}

fn ground_tolerance(params: &ModelParams) -> f64 {
    1e-3 * (params.m() - params.omega())
}

/// Index of the largest eigenvalue in `(omega, m)` clearly away from the
/// ground-state level.
fn extra_index(report: &SpectrumReport, params: &ModelParams) -> Option<usize> {
    let floor = params.omega() + ground_tolerance(params);
    report
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > floor && **e < params.m())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Largest `|v|` at the four outermost chain entries on either end, relative
/// to the sup norm.
fn edge_ratio(v: &[f64]) -> f64 {
    let sup = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let k = 4.min(v.len());
    let edge = v[..k].iter().chain(&v[v.len() - k..]).map(|x| x.abs()).fold(0.0, f64::max);
    edge / sup.max(f64::MIN_POSITIVE)
}

impl GridPlan {
    /// Same spacing on a domain `factor` times wider, within the policy caps.
    fn widened(&self, policy: &ResolutionPolicy, factor: f64) -> GridPlan {
        let half_length = (self.half_length * factor).min(policy.max_half_length);
        let ratio = half_length / self.half_length;
        let mut n = (self.n as f64 * ratio).ceil() as usize;
        n += n % 2;
        let capped = ratio < factor || n > policy.max_n;
        GridPlan { half_length, n: n.min(policy.max_n), capped }
    }
}

/// Domain widenings tried when only the eigenvector tail test fails.
const TAIL_RETRIES: usize = 3;

fn sweep_point(params: &ModelParams, policy: &ResolutionPolicy, constant: f64) -> Result<SweepRecord> {
    let (m, omega) = (params.m(), params.omega());
    let mut plan = policy.plan(params, constant);
    let mut attempt = 0;
    loop {
        let grid = build_grid(plan.half_length, plan.n)?;
        let report = gap_eigs(&assemble_a(params, &grid))?;
        let mut record = SweepRecord {
            p: params.p(),
            omega,
            mu: params.mu(),
            lambda_extra: None,
            threshold_distance: None,
            half_length: plan.half_length,
            n: plan.n,
            residual: Some(report.max_residual()),
            flag: SweepFlag::NoExtra,
        };
        if params.p() >= 1.0 {
            let tol = ground_tolerance(params);
            if report.trusted().iter().any(|e| (e.abs() - omega).abs() > tol) {
                record.flag = SweepFlag::UnexpectedExtra;
            }
            return Ok(record);
        }
        let Some(idx) = extra_index(&report, params) else {
            record.flag = if plan.capped { SweepFlag::ResolutionInsufficient } else { SweepFlag::Unresolved };
            return Ok(record);
        };
        let lambda = report.eigenvalues[idx];
        record.lambda_extra = Some(lambda);
        record.threshold_distance = Some(m - lambda);
        record.residual = Some(report.residuals[idx]);
        let tail_ok = edge_ratio(&report.eigenvectors[idx]) < policy.tail_tol;
        if !tail_ok && !plan.capped && attempt < TAIL_RETRIES {
            attempt += 1;
            plan = plan.widened(policy, 1.25);
            continue;
        }
        if plan.capped || !tail_ok || report.suspect_flags[idx] {
            record.flag = SweepFlag::ResolutionInsufficient;
            return Ok(record);
        }
        record.flag = SweepFlag::Ok;
        if policy.refine {
            let fine = build_grid(plan.half_length, 2 * plan.n)?;
            let fine_report = gap_eigs(&assemble_a(params, &fine))?;
            let agrees = extra_index(&fine_report, params)
                .map(|j| fine_report.eigenvalues[j])
                .is_some_and(|l2| (lambda - l2).abs() < 0.1 * (m - l2));
            if !agrees {
                record.flag = SweepFlag::Unrefined;
            }
        }
        return Ok(record);
    }
}

/// One record per `p`, in input order. The distance constant is calibrated
/// on the first `p < 1` point that resolves; the remaining points run in
/// parallel.
pub fn sweep_p(m: f64, omega: f64, ps: &[f64], policy: &ResolutionPolicy) -> Result<Vec<SweepRecord>> {
    let base = ModelParams::new(m, omega, 1.0, 0.0)?;
    let params: Vec<ModelParams> = ps.iter().map(|&p| base.with_p(p)).collect::<Result<_>>()?;
    let mut constant = policy.initial_constant;
    let mut records: Vec<Option<SweepRecord>> = vec![None; ps.len()];
    for (i, pr) in params.iter().enumerate() {
        if pr.p() >= 1.0 {
            continue;
        }
        let record = sweep_point(pr, policy, constant)?;
        let resolved = record.flag == SweepFlag::Ok;
        if let (true, Some(d)) = (resolved, record.threshold_distance) {
            constant = d / (1.0 - pr.p()).powi(2);
        }
        records[i] = Some(record);
        if resolved {
            break;
        }
    }
    let pending: Vec<usize> = (0..ps.len()).filter(|&i| records[i].is_none()).collect();
    let computed = parallel::map(&pending, |&i| sweep_point(&params[i], policy, constant));
    for (i, r) in pending.into_iter().zip(computed) {
        records[i] = Some(r?);
    }
    Ok(records.into_iter().map(|r| r.expect("every point computed")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub p_range: (f64, f64),
    pub points: usize,
}

/// Least squares of `ln(threshold_distance)` against `ln(1 - p)` over the
/// resolved `p < 1` records.
pub fn fit_rate(records: &[SweepRecord]) -> Result<RateFit> {
    let pts: Vec<(f64, f64, f64)> = records
        .iter()
        .filter(|r| r.p < 1.0 && r.flag == SweepFlag::Ok)
        .filter_map(|r| r.threshold_distance.filter(|d| *d > 0.0).map(|d| (r.p, (1.0 - r.p).ln(), d.ln())))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!("{} resolved records, need at least 4", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|t| t.1).sum::<f64>() / n;
    let my = pts.iter().map(|t| t.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|t| (t.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|t| (t.1 - mx) * (t.2 - my)).sum();
    let syy: f64 = pts.iter().map(|t| (t.2 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all records share one value of p".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let p_lo = pts.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let p_hi = pts.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateFit { slope, intercept: my - slope * mx, r_squared, p_range: (p_lo, p_hi), points: pts.len() })
}

/// Record of the coupling sweep. The first nine columns follow
/// [`CSV_HEADER`]; eigenvalue counts in the two windows and the largest
/// eigenvalue slope in `mu` follow.
#[derive(Debug, Clone, Serialize)]
pub struct MuRecord {
    pub p: f64,
    pub omega: f64,
    pub mu: f64,
    pub lambda_extra: Option<f64>,
    pub threshold_distance: Option<f64>,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub residual: Option<f64>,
    pub flag: SweepFlag,
    /// Eigenvalues in `(-m - omega, -2 omega)`.
    pub count_lower: usize,
    /// Eigenvalues in `(-2 omega, m - omega)`.
    pub count_upper: usize,
    /// Largest `-<v, Q v>` over gap eigenvectors; never positive.
    pub max_slope: f64,
}

/// Distance from `-2 omega` within which an eigenvalue of `L_mu` is taken
/// to be the coupling-independent one at `-2 omega`.
pub fn persistent_tolerance(params: &ModelParams) -> f64 {
    1e-3 * params.omega()
}

/// Gap eigenvalues of `L_mu` along `mus`, on the grid `sweep_p` uses for
/// the same `p` mapped to the original frame (without refinement).
pub fn sweep_mu(params: &ModelParams, mus: &[f64], policy: &ResolutionPolicy) -> Result<Vec<MuRecord>> {
    if mus.iter().any(|mu| !(*mu >= 0.0)) {
        return Err(Error::invalid("coupling values must be nonnegative"));
    }
    let plan = policy.plan(params, policy.initial_constant);
    let grid = build_grid(plan.half_length, plan.n)?.scaled(1.0 / params.p())?;
    let (m, omega) = (params.m(), params.omega());
    let tol = persistent_tolerance(params);
    let per_mu = parallel::map(mus, |&mu| -> Result<(SpectrumReport, f64)> {
        let pm = params.with_mu(mu)?;
        let report = gap_eigs(&assemble_lmu(&pm, &grid))?;
        let q = assemble_q(&pm, &grid);
        let max_slope = report
            .eigenvectors
            .iter()
            .map(|v| -v.iter().zip(q.matvec(v)).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((report, max_slope))
    });
    let mut out = Vec::with_capacity(mus.len());
    let mut previous_count: Option<usize> = None;
    for (&mu, res) in mus.iter().zip(per_mu) {
        let (report, max_slope) = res?;
        let trusted = report.trusted();
        let count_lower = trusted.iter().filter(|e| **e > -m - omega && **e < -2.0 * omega - tol).count();
        let upper: Vec<f64> = trusted.iter().copied().filter(|e| *e > -2.0 * omega + tol && *e < m - omega).collect();
        let count_upper = upper.len();
        let top = (count_upper >= 2).then(|| upper.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let lost =
            report.suspect_flags.iter().any(|s| *s) || previous_count.is_some_and(|c| c != report.eigenvalues.len());
        previous_count = Some(report.eigenvalues.len());
        let residual = top
            .and_then(|t| report.eigenvalues.iter().position(|e| *e == t))
            .map(|i| report.residuals[i])
            .unwrap_or_else(|| report.max_residual());
        out.push(MuRecord {
            p: params.p(),
            omega,
            mu,
            lambda_extra: top.map(|t| t + omega),
            threshold_distance: top.map(|t| m - omega - t),
            half_length: grid.half_length(),
            n: grid.n(),
            residual: Some(residual),
            flag: if lost { SweepFlag::TrackingLost } else { SweepFlag::Ok },
            count_lower,
            count_upper,
            max_slope,
        });
    }
    Ok(out)
}

/// Threshold analysis of the Soler potential at one `(p, omega)` point.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeRecord {
    pub p: f64,
    pub omega: f64,
    pub lambda: f64,
    pub classification: Classification,
    pub matched: bool,
    pub match_defect: f64,
    pub wronskian_drift: f64,
    pub decay_exponent: Option<f64>,
    pub l_minus: f64,
    pub l_plus: f64,
    pub dimension: usize,
    pub kneser_sup: f64,
}

impl LatticeRecord {
    fn from_parts(params: &ModelParams, r: &ThresholdReport, dimension: usize, kneser_sup: f64) -> Self {
        Self {
            p: params.p(),
            omega: params.omega(),
            lambda: r.lambda,
            classification: r.classification,
            matched: r.matched,
            match_defect: r.match_defect,
            wronskian_drift: r.wronskian_drift,
            decay_exponent: r.decay_exponent,
            l_minus: r.l_minus.norm(),
            l_plus: r.l_plus.norm(),
            dimension,
            kneser_sup,
        }
    }
}

/// Both thresholds `+-m` for every `(p, omega)` pair, in row-major order.
/// Kneser sups are taken at `lambda = m^2`, `R = kneser_radius`.
pub fn threshold_lattice(m: f64, ps: &[f64], omegas: &[f64], kneser_radius: f64) -> Result<Vec<LatticeRecord>> {
    let mut tasks = Vec::new();
    for &p in ps {
        for &omega in omegas {
            for lambda in [m, -m] {
                tasks.push((ModelParams::new(m, omega, p, 0.0)?, lambda));
            }
        }
    }
    parallel::map(&tasks, |(params, lambda)| {
        let v = MatrixPotential::Soler(*params);
        let report = threshold_report(&v, params.m(), *lambda)?;
        let dimension = simplicity_check(&v, params.m(), *lambda)?.dimension;
        let kneser = kneser_check(params, params.m() * params.m(), kneser_radius).sup_value;
        Ok(LatticeRecord::from_parts(params, &report, dimension, kneser))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub g: f64,
    pub mass: f64,
    pub v: f64,
    pub u: f64,
    /// Resonance state and threshold energy density, defined for `p = 1`.
    pub psi1: Option<f64>,
    pub psi2: Option<f64>,
    pub energy_density: Option<f64>,
}

pub fn profile_rows(params: &ModelParams, half_length: f64, n: usize) -> Result<Vec<ProfileRow>> {
    if n < 2 || !(half_length > 0.0) {
        return Err(Error::invalid("need n >= 2 and a positive half-length"));
    }
    let unit = params.p() == 1.0;
    (0..n)
        .map(|k| {
            let x = -half_length + 2.0 * half_length * k as f64 / (n - 1) as f64;
            let wave = solitary_wave(params, x)?;
            let psi = unit.then(|| closed_forms::resonance_state(params, x, ThresholdSide::Plus)).transpose()?;
            Ok(ProfileRow {
                x,
                g: g_profile(params, params.p() * x),
                mass: potential_m_forms(params, x).0,
                v: wave.c1,
                u: wave.c2,
                psi1: psi.map(|s| s.c1),
                psi2: psi.map(|s| s.c2),
                energy_density: unit.then(|| energy_density_forms(params, x).1),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub m: f64,
    pub omega: f64,
    /// Multiplies the profile fed to the first mass form (fault injection).
    pub g_scale: f64,
    /// Coarsest node count of the refinement-order study.
    pub base_n: usize,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self { m: 1.0, omega: 0.5, g_scale: 1.0, base_n: 512 }
    }
}

fn check(name: &'static str, value: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult { name, passed: value.is_finite() && value <= tolerance, value, tolerance, detail }
}

fn failed(name: &'static str, err: Error) -> CheckResult {
    CheckResult { name, passed: false, value: f64::NAN, tolerance: 0.0, detail: err.to_string() }
}

fn run_check(name: &'static str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| failed(name, e))
}

/// Largest relative disagreement of the two mass forms on `[-30, 30]` for
/// several powers.
pub fn mass_form_defect(omega_params: &ModelParams, g_scale: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in [0.5, 1.0, 2.0] {
        let params = omega_params.with_p(p)?;
        for k in 0..=2000 {
            let x = -30.0 + 0.03 * k as f64;
            let (a, b) = potential_m_forms_with(&params, x, |y| g_scale * g_profile(&params, y));
            let scale = params.m().max(a.abs()).max(b.abs());
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(worst)
}

/// Error of the discrete ground level `omega` of `A_1` on `n` nodes.
fn ground_level_error(params: &ModelParams, n: usize) -> Result<f64> {
    let grid = build_grid(40.0 / params.kappa(), n)?;
    let report = gap_eigs(&assemble_a(params, &grid))?;
    report
        .eigenvalues
        .iter()
        .map(|e| (e - params.omega()).abs())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::solver("no gap eigenvalue found"))
}

pub fn selftest(opts: &SelftestOptions) -> SelftestReport {
    let base = match ModelParams::new(opts.m, opts.omega, 1.0, 0.0) {
        Ok(p) => p,
        Err(e) => return SelftestReport { checks: vec![failed("parameters", e)] },
    };
    let mut checks = Vec::new();

    checks.push(run_check("mass_forms", || {
        let d = mass_form_defect(&base, opts.g_scale)?;
        Ok(check("mass_forms", d, 1e-12, "profile form vs tanh form, p in {0.5, 1, 2}".into()))
    }));

    checks.push(run_check("identity_between_as", || {
        let grid = build_grid(40.0 / base.kappa(), 512)?;
        let d = identity_between_as_defect(&base, 1.5, 1.0, &grid)?;
        Ok(check("identity_between_as", d, 1e-13, "A_1.5 vs 1.5 A_1 - 0.5 W sigma_3, entrywise".into()))
    }));

    checks.push(run_check("w_expectation", || {
        let (lhs, rhs) = w_expectation_identity(&base)?;
        Ok(check("w_expectation", (lhs - rhs).abs() / rhs, 1e-6, format!("{lhs:.15} vs {rhs:.15}")))
    }));

    checks.push(run_check("energy_identity", || {
        let e = energy_drop_check(&base, 0.0, 0.05)?;
        Ok(check(
            "energy_identity",
            (e.lhs - e.rhs).abs() / e.rhs.abs(),
            1e-9,
            format!("<psi_d, A_1 psi_d> = {:.15}, m |psi_d|^2 = {:.15}", e.lhs, e.rhs),
        ))
    }));

    checks.push(run_check("energy_density_forms", || {
        let mut worst = 0.0f64;
        for k in 0..=2000 {
            let x = -30.0 + 0.03 * k as f64;
            let (a, b) = energy_density_forms(&base, x);
            worst = worst.max((a - b).abs() / base.m().max(a.abs()));
        }
        Ok(check("energy_density_forms", worst, 1e-12, "defining vs expanded form".into()))
    }));

    checks.push(run_check("wronskian_drift", || {
        let r = threshold_report(&MatrixPotential::Soler(base), base.m(), base.m())?;
        Ok(check("wronskian_drift", r.wronskian_drift, 1e-8, format!("classification {}", r.classification)))
    }));

    checks.push(run_check("sigma1_symmetry", || {
        let params = base.with_p(2.0)?;
        let v = MatrixPotential::Soler(params);
        let lower = threshold_report(&v, params.m(), -params.m())?;
        let upper = threshold_report(&v.sigma1_conjugated(), params.m(), params.m())?;
        let d = (lower.match_defect - upper.match_defect)
            .abs()
            .max((lower.l_minus - upper.l_minus).norm())
            .max((lower.l_plus - upper.l_plus).norm());
        let same = lower.classification == upper.classification;
        Ok(check(
            "sigma1_symmetry",
            if same { d } else { f64::INFINITY },
            1e-10,
            format!("-m report vs +m report of -sigma_1 V sigma_1 ({})", lower.classification),
        ))
    }));

    checks.push(run_check("parity", || {
        let grid = build_grid(40.0 / base.kappa(), 2048)?;
        let r = gap_eigs(&assemble_a(&base, &grid))?;
        let labels_ok = r.parities == [Parity::Odd, Parity::Even];
        let worst = r.parity_defects.iter().copied().fold(0.0, f64::max);
        Ok(check(
            "parity",
            if labels_ok { worst } else { f64::INFINITY },
            PARITY_TOL,
            format!("labels {:?}", r.parities.iter().map(|p| p.to_string()).collect::<Vec<_>>()),
        ))
    }));

    checks.push(run_check("refinement_order", || {
        let e1 = ground_level_error(&base, opts.base_n)?;
        let e2 = ground_level_error(&base, 2 * opts.base_n)?;
        let order = (e1 / e2).log2();
        Ok(check(
            "refinement_order",
            (order - 2.0).abs(),
            0.3,
            format!("observed order {order:.3} from n = {} and {}", opts.base_n, 2 * opts.base_n),
        ))
    }));

    checks.push(run_check("constants", || {
        let c = constants(&base)?;
        let d = ((c.c_inf - c.closed_form_c_inf).abs()).max((c.psi_inf_sup - c.closed_form_psi_sup).abs());
        Ok(check("constants", d, 1e-8, c.verdict().join("; ")))
    }));

    SelftestReport { checks }
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
