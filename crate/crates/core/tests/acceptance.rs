//! Acceptance suite. Run with `cargo test -p diracgap-core --test acceptance`.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::process::ExitCode;
use std::time::Instant;

use diracgap::closed_forms::{constants, resonance_state, w_expectation_identity, ThresholdSide};
use diracgap::discretization::{assemble_a, identity_between_as_defect, ConjugateSign};
use diracgap::experiments::{
    fit_rate, mass_form_defect, sweep_p, threshold_lattice, LatticeRecord, ResolutionPolicy, SweepFlag,
};
use diracgap::grid::build_grid;
use diracgap::spectral::{energy_drop_check, gamma_bound, gap_eigs, minmax_grid, trial_delta, MinMaxReport};
use diracgap::threshold::{
    kneser_check, matched_solution, schrodinger_zero_count, shoot_threshold, simplicity_check, threshold_report,
    Classification, MatrixPotential, Side,
};
use diracgap::{ModelParams, Result};

const M: f64 = 1.0;
const OMEGA: f64 = 0.5;
const LATTICE_P: [f64; 6] = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0];
const LATTICE_OMEGA: [f64; 3] = [0.2, 0.5, 0.8];
/// Fine enough that the discretization error of the ground level is below 1e-6.
const FINE_N: usize = 16384;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn reference(p: f64) -> ModelParams {
    ModelParams::new(M, OMEGA, p, 0.0).expect("valid parameters")
}

fn gap_property() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let t = Instant::now();
        let params = reference(p);
        let grid = build_grid(40.0 / params.kappa(), FINE_N)?;
        let op = assemble_a(&params, &grid);
        let margin = op.suspect_margin();
        let r = gap_eigs(&op)?;
        let trusted = r.trusted();
        let pair = trusted.len() == 2 && (trusted[0] + OMEGA).abs() < 1e-6 && (trusted[1] - OMEGA).abs() < 1e-6;
        let others_near_edge =
            r.eigenvalues.iter().filter(|e| (e.abs() - OMEGA).abs() >= 1e-6).all(|e| M - e.abs() <= margin);
        let residual = r.max_residual();
        let secs = t.elapsed().as_secs_f64();
        ok &= pair && others_near_edge && residual < 1e-6 && secs < 60.0;
        lines.push(format!("p={p}: trusted {trusted:.8?} residual {residual:.1e} {secs:.1}s"));
    }
    outcome(ok, lines.join("; "))
}

fn extra_eigenvalue() -> Result<Outcome> {
    let policy = ResolutionPolicy::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [0.80, 0.85, 0.90] {
        let params = reference(p);
        let plan = policy.plan(&params, policy.initial_constant);
        let r = gap_eigs(&assemble_a(&params, &build_grid(plan.half_length, plan.n)?))?;
        let t = r.trusted();
        let symmetric = r.pairing_defect(0.0).unwrap_or(f64::INFINITY);
        let outer_inside = t.len() == 4 && t[3] > OMEGA && t[3] < M && t[0] < -OMEGA && t[0] > -M;
        ok &= t.len() == 4 && symmetric < 1e-8 && outer_inside;
        lines.push(format!(
            "p={p}: {} eigenvalues, outer {:.6e} below m, symmetry {symmetric:.1e}",
            t.len(),
            M - t.last().copied().unwrap_or(f64::NAN)
        ));
    }
    outcome(ok, lines.join("; "))
}

fn emergence_rate() -> Result<Outcome> {
    let t = Instant::now();
    let records = sweep_p(M, OMEGA, &[0.80, 0.85, 0.90, 0.95], &ResolutionPolicy::default())?;
    let all_ok = records.iter().all(|r| r.flag == SweepFlag::Ok);
    let fit = fit_rate(&records)?;
    let secs = t.elapsed().as_secs_f64();
    let ok = all_ok && (1.75..=2.25).contains(&fit.slope) && fit.r_squared > 0.99 && secs < 900.0;
    let flags: Vec<String> = records.iter().map(|r| format!("{:?}", r.flag)).collect();
    outcome(ok, format!("slope {:.4}, r^2 {:.5}, flags {flags:?}, {secs:.1}s", fit.slope, fit.r_squared))
}

fn no_threshold_eigenvalues(lattice: &[LatticeRecord]) -> Result<Outcome> {
    let eig = lattice.iter().filter(|r| r.classification == Classification::Eigenvalue).count();
    let res = lattice.iter().filter(|r| r.classification == Classification::Resonance).count();
    outcome(lattice.len() == 36 && eig == 0, format!("{} runs, {eig} eigenvalue, {res} resonance", lattice.len()))
}

fn resonance_at_unit_power() -> Result<Outcome> {
    let params = reference(1.0);
    let v = MatrixPotential::Soler(params);
    let left = shoot_threshold(&v, M, Side::Left, M)?;
    let right = shoot_threshold(&v, M, Side::Right, M)?;
    let (xs, sol) = matched_solution(&left, &right);
    let exact: Vec<_> = xs.iter().map(|&x| resonance_state(&params, x, ThresholdSide::Plus)).collect::<Result<_>>()?;
    let sup = exact.iter().map(|s| s.norm_sq().sqrt()).fold(0.0, f64::max);
    let overlap: f64 = sol.iter().zip(&exact).map(|(a, b)| a[0].re * b.c1 + a[1].re * b.c2).sum();
    let sign = if overlap < 0.0 { -1.0 } else { 1.0 };
    let deviation = sol
        .iter()
        .zip(&exact)
        .map(|(a, b)| {
            (a[0].re * sign - b.c1 / sup)
                .abs()
                .max((a[1].re * sign - b.c2 / sup).abs())
                .max(a[0].im.abs())
                .max(a[1].im.abs())
        })
        .fold(0.0, f64::max);
    let report = threshold_report(&v, M, M)?;
    let dim = simplicity_check(&v, M, M)?.dimension;
    outcome(
        deviation < 1e-5 && dim == 1 && report.classification == Classification::Resonance,
        format!("deviation {deviation:.2e}, dimension {dim}, classification {}", report.classification),
    )
}

fn simplicity_everywhere(lattice: &[LatticeRecord]) -> Result<Outcome> {
    let max_dim = lattice.iter().map(|r| r.dimension).max().unwrap_or(0);
    let max_drift = lattice.iter().map(|r| r.wronskian_drift).fold(0.0, f64::max);
    outcome(
        !lattice.is_empty() && max_dim <= 1 && max_drift < 1e-8,
        format!("max dimension {max_dim}, max Wronskian drift {max_drift:.1e}"),
    )
}

fn identity_suite(minmax: &[MinMaxReport]) -> Result<Outcome> {
    let base = reference(1.0);
    let mass = mass_form_defect(&base, 1.0)?;
    let grid = build_grid(40.0 / base.kappa(), 4096)?;
    let as_defect = identity_between_as_defect(&base, 1.5, 1.0, &grid)?;
    let (lhs, rhs) = w_expectation_identity(&base)?;
    let w_defect = (lhs - rhs).abs() / rhs;
    let energy = energy_drop_check(&base, 0.0, trial_delta(0.02, 0.25))?.relative_defect();
    let projection_ok = !minmax.is_empty() && minmax.iter().all(|r| r.lambda_lower_check <= r.lambda_lower_bound);
    let projection: Vec<String> =
        minmax.iter().map(|r| format!("{:.3e} <= {:.3e}", r.lambda_lower_check, r.lambda_lower_bound)).collect();
    outcome(
        mass < 1e-12 && as_defect < 1e-13 && w_defect < 1e-6 && energy < 1e-9 && projection_ok,
        format!("(a) {mass:.1e} (b) {as_defect:.1e} (c) {w_defect:.1e} (d) {energy:.1e} (e) {}", projection.join(", ")),
    )
}

fn constants_audit() -> Result<Outcome> {
    let mut ok = true;
    let mut lines = Vec::new();
    for omega in [0.3, 0.5, 0.7] {
        let c = constants(&ModelParams::new(M, omega, 1.0, 0.0)?)?;
        let c_inf = (c.c_inf - c.closed_form_c_inf).abs();
        let sup = (c.psi_inf_sup - c.closed_form_psi_sup).abs();
        ok &= c_inf < 1e-8 && sup < 1e-8;
        lines.push(format!("omega={omega}: c_inf {c_inf:.1e}, sup {sup:.1e}"));
    }
    let c = constants(&reference(1.0))?;
    let verdict = c.verdict();
    lines.push(format!("|E|_1 = {:.10}, E_star = {:.10}", c.e_l1, c.e_star));
    lines.extend(verdict.into_iter().skip(2));
    outcome(ok, lines.join("; "))
}

fn minmax_reports() -> Result<Vec<MinMaxReport>> {
    let params = reference(1.0);
    [0.02, 0.01]
        .iter()
        .map(|&eps| {
            let grid = minmax_grid(&params, eps, 0.25, 0.05)?;
            gamma_bound(&assemble_a(&params, &grid), eps, 0.25)
        })
        .collect()
}

fn minmax_drop(minmax: &[MinMaxReport]) -> Result<Outcome> {
    let e_star = constants(&reference(1.0))?.e_star;
    let ok = !minmax.is_empty()
        && minmax.iter().all(|r| r.drop > 0.0 && r.drop_ratio > e_star / 3.0 && r.drop_ratio < 3.0 * e_star);
    let lines: Vec<String> = minmax
        .iter()
        .map(|r| {
            format!(
                "eps={}: drop {:.3e}, ratio {:.4}, next level m{:+.2e} (margin {:.1e})",
                r.epsilon,
                r.drop,
                r.drop_ratio,
                r.next_level - M,
                r.next_level_margin
            )
        })
        .collect();
    outcome(ok, format!("{}; E_star {e_star:.4}", lines.join("; ")))
}

fn kneser_sturm() -> Result<Outcome> {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut unstable = Vec::new();
    for p in LATTICE_P {
        for omega in LATTICE_OMEGA {
            let params = ModelParams::new(M, omega, p, 0.0)?;
            let k = kneser_check(&params, M * M, 30.0);
            ok &= k.pass;
            worst = worst.max(k.sup_value);
            let half = 40.0 / (p * params.kappa());
            for sign in [ConjugateSign::Minus, ConjugateSign::Plus] {
                let coarse = schrodinger_zero_count(&params, sign, M * M, half, 4001)?;
                let fine = schrodinger_zero_count(&params, sign, M * M, half, 8001)?;
                if coarse != fine {
                    ok = false;
                    unstable.push(format!("p={p} omega={omega} {sign:?}: {coarse} vs {fine}"));
                }
            }
        }
    }
    outcome(ok, format!("max sup x^2 q {worst:.3e}, unstable zero counts {unstable:?}"))
}

fn report(index: usize, name: &str, result: Result<Outcome>, secs: f64) -> bool {
    let (passed, detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("[{}] {index:>2} {name} ({secs:.1}s): {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let (lattice, lattice_secs) = timed(|| threshold_lattice(M, &LATTICE_P, &LATTICE_OMEGA, 30.0));
    let (minmax, minmax_secs) = timed(minmax_reports);
    let lattice_view = |f: fn(&[LatticeRecord]) -> Result<Outcome>| match &lattice {
        Ok(l) => f(l),
        Err(e) => outcome(false, format!("error: {e}")),
    };
    let minmax_view = |f: fn(&[MinMaxReport]) -> Result<Outcome>| match &minmax {
        Ok(r) => f(r),
        Err(e) => outcome(false, format!("error: {e}")),
    };

    let mut all = true;
    let (r, s) = timed(gap_property);
    all &= report(1, "gap property for p >= 1", r, s);
    let (r, s) = timed(extra_eigenvalue);
    all &= report(2, "extra eigenvalue for p < 1", r, s);
    let (r, s) = timed(emergence_rate);
    all &= report(3, "emergence rate", r, s);
    all &= report(4, "no threshold eigenvalues", lattice_view(no_threshold_eigenvalues), lattice_secs);
    let (r, s) = timed(resonance_at_unit_power);
    all &= report(5, "resonance at p = 1", r, s);
    all &= report(6, "simplicity on the lattice", lattice_view(simplicity_everywhere), lattice_secs);
    let (r, s) = timed(|| minmax_view(identity_suite));
    all &= report(7, "identity suite", r, s);
    let (r, s) = timed(constants_audit);
    all &= report(8, "constants audit", r, s);
    all &= report(9, "min-max drop", minmax_view(minmax_drop), minmax_secs);
    let (r, s) = timed(kneser_sturm);
    all &= report(10, "Kneser and zero counts", r, s);

    if all {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("some acceptance criteria failed");
        ExitCode::FAILURE
    }
}
