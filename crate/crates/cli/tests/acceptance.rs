//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use drscert::certify::{
    analytic_params_case1, analytic_params_case2, check_certificate, psd_tol, suggest_lambda_case2, CertCase,
    Certificate,
};
use drscert::prox::recover_subgradient;
use drscert::sdplite::{default_alpha_grid, eig_sym, optimize_rate, sweep_heatmap, DEFAULT_KAPPAS};
use drscert::splitting::{drs_run, lyapunov_series, solve_reference, DrsParams, Schedule, Trace};
use drscert::FunctionClass;
use drscert_cli::problems::{gen_basis_pursuit, gen_lasso, ProblemSpec};
use drscert_cli::rng::SeededRng;
use nalgebra::{DMatrix, DVector};

use common::ORACLE_CASES;

type Check = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn record(&mut self, id: &str, name: &str, budget: Option<Duration>, elapsed: Duration, result: Check) {
        let over = budget.is_some_and(|b| elapsed > b);
        let (verdict, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over time budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            self.failures += 1;
        }
        let time = match budget {
            Some(b) => format!("{elapsed:.2?} of {b:.0?}"),
            None => "timed with its runs".to_string(),
        };
        println!("criterion {id:>2} {verdict} [{name}] {detail} ({time})");
    }

    fn run(&mut self, id: &str, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = f();
        self.record(id, name, Some(budget), start.elapsed(), result);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Side results of the trajectory runs, reported under criteria 9 and 10.
#[derive(Default)]
struct TrajectoryNotes {
    lyapunov: Vec<(&'static str, Result<f64, String>)>,
    identity_worst: f64,
}

impl TrajectoryNotes {
    /// `‖z − y + α(∂f(y) + ∂g(z))‖` and `|fp − α‖∂f(y) + ∂g(z)‖|` relative to `1 + ‖x‖`.
    fn residual_identity(&mut self, trace: &Trace) {
        let alpha = trace.alpha;
        for r in &trace.records {
            let df = recover_subgradient(&r.x, &r.y, alpha);
            let dg = recover_subgradient(&(&r.y * 2.0 - &r.x), &r.z, alpha);
            let sum = &df + &dg;
            let vec_err = (&r.z - &r.y + &sum * alpha).norm();
            let norm_err = (r.fp_residual - alpha * sum.norm()).abs();
            let scale = 1.0 + r.x.norm();
            self.identity_worst = self.identity_worst.max(vec_err.max(norm_err) / scale);
        }
    }

    /// Worst `V_{k+1} − rate·V_k`; must stay ≤ 1e−9.
    fn lyapunov(&mut self, label: &'static str, v: Result<Vec<f64>, drscert::DrsError>, rate: f64) {
        let worst = v.map_err(|e| e.to_string()).map(|v| {
            v.windows(2).map(|w| w[1] - rate * w[0]).fold(f64::NEG_INFINITY, f64::max)
        });
        self.lyapunov.push((label, worst));
    }
}

fn criterion1() -> Check {
    let mut rng = SeededRng::new(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let alpha = 10.0 * (1.0 - rng.uniform());
        let lambda = loop {
            let u = rng.uniform();
            if u > 0.0 {
                break 2.0 * u;
            }
        };
        let p = analytic_params_case1(alpha, lambda).map_err(|e| e.to_string())?;
        let cert = Certificate::assemble(CertCase::Case1, alpha, lambda, Some(p.theta), p.sigma, p.sigma, None)
            .map_err(|e| e.to_string())?;
        worst = worst.max(cert.witness.max_abs());
    }
    ensure(worst <= 1e-12, || format!("max |entry| = {worst:e} > 1e-12"))?;
    Ok(format!("max |entry| over 100 draws = {worst:e}"))
}

fn criterion2() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for alpha in [0.1, 1.0, 10.0] {
        for lambda in [0.5, 1.0, 1.5, 1.9] {
            for l_f in [1.0, 10.0, 100.0] {
                let p = analytic_params_case2(alpha, lambda, l_f).map_err(|e| e.to_string())?;
                let case = CertCase::case2(l_f).map_err(|e| e.to_string())?;
                let cert = Certificate::assemble(case, alpha, lambda, Some(p.theta), p.sigma, p.sigma, None)
                    .map_err(|e| e.to_string())?;
                let (ok, top) = check_certificate(&cert).map_err(|e| e.to_string())?;
                let w = drscert::certify::case_matrix(&cert).map_err(|e| e.to_string())?;
                let rel = top / (1.0 + w.norm_inf());
                worst = worst.max(rel);
                ensure(ok, || format!("alpha={alpha} lambda={lambda} L={l_f}: max_eig {top:e} > {:e}", psd_tol(&w)))?;
            }
        }
    }
    Ok(format!("36 grid points, worst max_eig/(1+|W|inf) = {worst:e}"))
}

fn criterion3(notes: &mut TrajectoryNotes) -> Check {
    let bp = gen_basis_pursuit(&ProblemSpec::basis_pursuit(42)).map_err(|e| e.to_string())?;
    let (alpha, lambda) = (1.0, 1.0);
    let params = DrsParams::new(alpha, lambda).with_max_iters(10_000).with_stop_tol(0.0);
    let x0 = DVector::zeros(100);
    let trace = drs_run(&bp.f, &bp.g, &params, &x0).map_err(|e| e.to_string())?;
    let r = solve_reference(&bp.f, &bp.g, &params, &x0).map_err(|e| e.to_string())?;
    let d0 = (&x0 - &r.x_star).norm_squared();
    let mut running = f64::INFINITY;
    let mut tightest = 0.0_f64;
    for (i, rec) in trace.records.iter().enumerate() {
        let k = i + 1;
        running = running.min(rec.fp_residual * rec.fp_residual);
        let bound = d0 / k as f64;
        tightest = tightest.max(running / bound);
        ensure(running <= bound, || format!("k={k}: {running:e} > {bound:e}"))?;
    }
    notes.residual_identity(&trace);
    let theta = analytic_params_case1(alpha, lambda).map_err(|e| e.to_string())?.theta;
    notes.lyapunov(
        "case 1 basis pursuit",
        lyapunov_series(&trace, CertCase::Case1, &Schedule::Constant(theta), &r.x_star, None),
        1.0,
    );
    Ok(format!("k <= {}, max ratio to bound = {tightest:.3e}", trace.len()))
}

fn criterion4(notes: &mut TrajectoryNotes) -> Check {
    let lasso = gen_lasso(&ProblemSpec::lasso(7).with_rank(20)).map_err(|e| e.to_string())?;
    let case = CertCase::detect(&lasso.class);
    let CertCase::Case2 { l_f } = case else {
        return Err(format!("expected case 2, detected case {case}"));
    };
    let alpha = 1.0;
    let lambda = suggest_lambda_case2(alpha, l_f).map_err(|e| e.to_string())?.lambda;
    let theta = analytic_params_case2(alpha, lambda, l_f).map_err(|e| e.to_string())?.theta;
    let params = DrsParams::new(alpha, lambda).with_max_iters(10_000).with_stop_tol(0.0);
    let x0 = DVector::zeros(40);
    let trace = drs_run(&lasso.f, &lasso.g, &params, &x0).map_err(|e| e.to_string())?;
    let r = solve_reference(&lasso.f, &lasso.g, &params, &x0).map_err(|e| e.to_string())?;
    let f_star = r.f_star.ok_or("reference has no objective value")?;
    let d0 = (&x0 - &r.x_star).norm_squared();
    let mut running = f64::INFINITY;
    let mut tightest = f64::NEG_INFINITY;
    for (i, rec) in trace.records.iter().enumerate() {
        let k = i + 1;
        let gap = rec.objective.ok_or("missing objective")? - f_star;
        running = running.min(gap);
        let bound = d0 / (theta * k as f64);
        tightest = tightest.max(running / bound);
        ensure(running <= (1.0 + 1e-6) * bound, || format!("k={k}: {running:e} > {bound:e}"))?;
    }
    notes.residual_identity(&trace);
    notes.lyapunov(
        "case 2 lasso",
        lyapunov_series(&trace, case, &Schedule::Constant(theta), &r.x_star, r.f_star),
        1.0,
    );
    Ok(format!(
        "lambda={lambda:.4} theta={theta:.4} L_f={l_f:.4}, k <= {}, max ratio to bound = {tightest:.3e}",
        trace.len()
    ))
}

fn criterion5(notes: &mut TrajectoryNotes) -> Check {
    let lasso = gen_lasso(&ProblemSpec::lasso(7)).map_err(|e| e.to_string())?;
    let fc = lasso.class;
    let l = fc.l().finite().ok_or("unbounded smoothness")?;
    let alpha = 1.0 / (fc.m() * l).sqrt();
    let cert = optimize_rate(alpha, &fc).map_err(|e| e.to_string())?;
    let rho_sq = cert.rho_sq.ok_or("no rate")?;
    let params = DrsParams::new(alpha, cert.lambda).with_max_iters(10_000).with_stop_tol(0.0);
    let x0 = DVector::zeros(40);
    let trace = drs_run(&lasso.f, &lasso.g, &params, &x0).map_err(|e| e.to_string())?;
    let r = solve_reference(&lasso.f, &lasso.g, &params, &x0).map_err(|e| e.to_string())?;
    let d0 = (&x0 - &r.x_star).norm_squared();
    let mut checked = 0;
    let mut tightest = 0.0_f64;
    for (k, x) in trace.states().enumerate() {
        let dist_sq = (x - &r.x_star).norm_squared();
        let bound = 1.01 * rho_sq.powi(k as i32) * d0;
        ensure(dist_sq <= bound, || format!("k={k}: {dist_sq:e} > {bound:e}"))?;
        tightest = tightest.max(dist_sq / bound);
        checked = k;
        if dist_sq.sqrt() <= 1e-10 {
            break;
        }
    }
    ensure(checked < trace.len(), || "never reached 1e-10".into())?;
    notes.residual_identity(&trace);
    notes.lyapunov(
        "case 3 lasso",
        lyapunov_series(&trace, CertCase::detect(&fc), &Schedule::Constant(0.0), &r.x_star, None),
        rho_sq,
    );
    Ok(format!(
        "kappa={:.3} alpha={alpha:.4} lambda={:.5} rho={:.5}, {checked} steps to 1e-10, max ratio to bound = {tightest:.3}",
        l / fc.m(),
        cert.lambda,
        rho_sq.sqrt()
    ))
}

fn criterion6() -> Check {
    let mut parts = Vec::new();
    for (alpha, m, l, oracle) in ORACLE_CASES {
        let fc = FunctionClass::smooth(m, l).map_err(|e| e.to_string())?;
        let got = optimize_rate(alpha, &fc).map_err(|e| e.to_string())?.rho_sq.ok_or("no rate")?;
        ensure((got - oracle).abs() <= 1e-2, || {
            format!("({alpha},{m},{l}): rho_sq {got:.6} vs oracle {oracle:.6}")
        })?;
        parts.push(format!("({alpha},{m},{l}) {got:.6} vs {oracle:.6}"));
    }
    Ok(parts.join(", "))
}

fn criterion7() -> Check {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for alpha in [0.05, 0.1, 0.3, 1.0] {
        for kappa in [10.0, 100.0] {
            let fc = FunctionClass::smooth(1.0, kappa).map_err(|e| e.to_string())?;
            let lambda = optimize_rate(alpha, &fc).map_err(|e| e.to_string())?.lambda;
            ensure((1.98..=2.02).contains(&lambda), || {
                format!("alpha={alpha} kappa={kappa}: lambda_opt = {lambda}")
            })?;
            lo = lo.min(lambda);
            hi = hi.max(lambda);
        }
    }
    Ok(format!("lambda_opt in [{lo:.5}, {hi:.5}] over 8 configurations"))
}

fn criterion8() -> Check {
    const SLACK: f64 = 1e-4;
    let alphas = default_alpha_grid();
    let cells = sweep_heatmap(&alphas, &DEFAULT_KAPPAS, 1.0);
    if let Some(c) = cells.iter().find(|c| !(c.feasible && c.rho_opt < 1.0)) {
        return Err(format!("alpha={} kappa={}: rho_opt={} error={:?}", c.alpha, c.kappa, c.rho_opt, c.error));
    }
    let mut argmins = Vec::new();
    for row in cells.chunks(alphas.len()) {
        let r: Vec<f64> = row.iter().map(|c| c.rho_sq()).collect();
        let j = (0..r.len()).min_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(0);
        let kappa = row[0].kappa;
        for i in 0..r.len() - 1 {
            let ok = if i < j { r[i + 1] <= r[i] + SLACK } else { r[i + 1] >= r[i] - SLACK };
            ensure(ok, || format!("kappa={kappa}: not unimodal at alpha index {i}"))?;
        }
        argmins.push((kappa, row[j].alpha));
    }
    ensure(argmins.windows(2).all(|w| w[1].1 <= w[0].1), || format!("argmin alpha not nonincreasing: {argmins:?}"))?;
    let summary: Vec<String> = argmins.iter().map(|(k, a)| format!("{k}:{a:.3}")).collect();
    Ok(format!("150 cells certified, argmin alpha by kappa {}", summary.join(" ")))
}

fn criterion9(notes: &TrajectoryNotes) -> Check {
    let mut parts = Vec::new();
    for (label, worst) in &notes.lyapunov {
        let worst = worst.as_ref().map_err(|e| format!("{label}: {e}"))?;
        ensure(*worst <= 1e-9, || format!("{label}: V_(k+1) - rate V_k reaches {worst:e}"))?;
        parts.push(format!("{label} worst {worst:.2e}"));
    }
    ensure(notes.lyapunov.len() == 3, || "missing trajectory runs".into())?;
    Ok(parts.join(", "))
}

fn criterion10(notes: &TrajectoryNotes) -> Check {
    ensure(notes.identity_worst <= 1e-12, || format!("residual identity error {:e}", notes.identity_worst))?;
    let mut rng = SeededRng::new(10);
    let (mut rec, mut orth) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let a = DMatrix::from_fn(4, 4, |_, _| rng.uniform_in(-1.0, 1.0));
        let m = (&a + a.transpose()) * 0.5;
        let e = eig_sym(&m).map_err(|e| e.to_string())?;
        rec = rec.max((e.reconstruct() - &m).norm() / m.norm());
        orth = orth.max((e.vectors.transpose() * &e.vectors - DMatrix::identity(4, 4)).norm());
    }
    ensure(rec <= 1e-10 && orth <= 1e-10, || format!("reconstruction {rec:e}, orthogonality {orth:e}"))?;
    Ok(format!(
        "identity error {:.2e}, reconstruction {rec:.2e}, orthogonality {orth:.2e}",
        notes.identity_worst
    ))
}

fn main() -> ExitCode {
    let mut suite = Suite { failures: 0 };
    let mut notes = TrajectoryNotes::default();
    suite.run("1", "case-1 zero identity", Duration::from_secs(1), criterion1);
    suite.run("2", "case-2 feasibility grid", Duration::from_secs(1), criterion2);
    suite.run("3", "case-1 residual bound on basis pursuit", Duration::from_secs(10), || criterion3(&mut notes));
    suite.run("4", "case-2 objective bound on rank-deficient lasso", Duration::from_secs(10), || {
        criterion4(&mut notes)
    });
    suite.run("5", "case-3 linear rate on full-rank lasso", Duration::from_secs(10), || criterion5(&mut notes));
    suite.run("6", "rate optimizer vs grid oracle", Duration::from_secs(1), criterion6);
    suite.run("7", "optimal relaxation is 2", Duration::from_secs(30), criterion7);
    suite.run("8", "rate heatmap shape", Duration::from_secs(120), criterion8);
    let start = Instant::now();
    let lyap = criterion9(&notes);
    suite.record("9", "Lyapunov monotonicity on runs 3-5", None, start.elapsed(), lyap);
    suite.run("10", "residual identity and eigensolver", Duration::from_secs(5), || criterion10(&notes));
    println!("acceptance: {} of 10 criteria failed", suite.failures);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
