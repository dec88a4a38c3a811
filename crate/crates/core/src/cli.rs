//! Command orchestration: runs one configured experiment and writes its files.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    cusp_exponent_fit, kernel_norm, lower_bound_check, ratio_bounds, wave_audit_with_norm, LowerBound, RegularityReport,
};
use crate::config::{Command, RunConfig};
use crate::continuation::{branch_follow, eps_homotopy, verify_asymptotics, AsymptoticsReport, Branch, Termination};
use crate::error::{Error, Result};
use crate::kernel::{kernel_fourier_sum, Kernel, KernelSpec};
use crate::output::{
    kernel_check_csv, kernel_csv, read_wave_csv, summary_toml, wave_csv, wave_from_table, write_file, KernelCheck,
    PointRecord,
};
use crate::steady::{BranchPoint, SteadyProblem};

/// Files written by a successful run, in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

/// Validates `config` and executes its command.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let command = config.command.expect("validated");
    log::info!("running {command}");
    let mut files = Vec::new();
    match command {
        Command::Kernel => run_kernel(config, &mut files)?,
        Command::Branch => run_branch(config, &mut files)?,
        Command::Homotopy => run_homotopy(config, &mut files)?,
        Command::VerifyAsymptotics => run_asymptotics(config, &mut files)?,
        Command::Regularity => run_regularity(config, &mut files)?,
        Command::Audit => run_audit(config, &mut files)?,
    }
    Ok(RunOutcome { files })
}

fn emit(config: &RunConfig, files: &mut Vec<PathBuf>, name: &str, contents: &str) -> Result<()> {
    files.push(write_file(&config.output_dir, name, contents)?);
    Ok(())
}

#[derive(Serialize)]
struct KernelSummary {
    alpha: f64,
    gamma_alpha: Option<f64>,
    l1_norm: f64,
    l1_norm_error: f64,
    zero_crossing: f64,
    table_rows: usize,
    checks: usize,
    checks_agree: bool,
    seed: u64,
}

fn run_kernel(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let kernel = Kernel::new(KernelSpec::new(config.alpha))?;
    let rows = kernel.table(config.nodes).map_err(|e| e.in_stage("kernel table"))?;
    emit(config, files, "kernel.csv", &kernel_csv(&rows))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = Vec::with_capacity(config.checks);
    while checks.len() < config.checks {
        let x: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        if x.abs() < 1e-3 {
            continue;
        }
        let quadrature = kernel.eval(x).map_err(|e| e.in_stage(format!("kernel at x = {x:e}")))?;
        let fourier = kernel_fourier_sum(config.alpha, x, config.fourier_terms)?;
        checks.push(KernelCheck {
            x,
            quadrature: quadrature.value,
            quadrature_error: quadrature.error,
            fourier: fourier.value,
            fourier_error: fourier.error(),
        });
    }
    emit(config, files, "kernel_check.csv", &kernel_check_csv(&checks))?;

    let norm = kernel.l1_norm().map_err(|e| e.in_stage("kernel L1 norm"))?;
    let summary = KernelSummary {
        alpha: config.alpha,
        gamma_alpha: kernel.gamma_alpha(),
        l1_norm: norm.value,
        l1_norm_error: norm.error,
        zero_crossing: kernel.zero_crossing()?,
        table_rows: rows.len(),
        checks: checks.len(),
        checks_agree: checks.iter().all(KernelCheck::agrees),
        seed: config.seed,
    };
    emit(config, files, "kernel_summary.toml", &summary_toml(&summary))
}

#[derive(Serialize)]
struct BranchSummary {
    config: RunConfig,
    terminated_reason: Termination,
    kernel_l1_norm: Option<f64>,
    diagnostics: Vec<String>,
    points: Vec<PointRecord>,
    final_regularity: Option<RegularityReport>,
}

fn follow(config: &RunConfig, problem: &SteadyProblem) -> Result<Branch> {
    branch_follow(problem, &config.continuation_config()).map_err(|e| e.in_stage("branch"))
}

fn branch_summary(config: &RunConfig, problem: &SteadyProblem, branch: &Branch) -> BranchSummary {
    let norm = kernel_norm(problem);
    let reports: Vec<RegularityReport> = branch
        .points
        .iter()
        .map(|p| wave_audit_with_norm(p, problem, norm))
        .collect();
    BranchSummary {
        config: config.clone(),
        terminated_reason: branch.terminated_reason,
        kernel_l1_norm: norm,
        diagnostics: branch.diagnostics.clone(),
        points: branch
            .points
            .iter()
            .zip(&reports)
            .map(|(p, r)| PointRecord::new(p, r))
            .collect(),
        final_regularity: reports.last().cloned(),
    }
}

/// Error for a branch that stopped on a numerical failure.
fn branch_failure(branch: &Branch) -> Option<Error> {
    (branch.terminated_reason == Termination::Error).then(|| {
        Error::Convergence {
            iterations: branch.points.len(),
            residual: branch.last().map_or(f64::NAN, |p| p.residual_norm),
        }
        .in_stage(format!(
            "branch: {}",
            branch.diagnostics.last().cloned().unwrap_or_default()
        ))
    })
}

fn run_branch(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let problem = config.problem()?;
    let branch = follow(config, &problem)?;
    let summary = branch_summary(config, &problem, &branch);
    emit(config, files, "branch_summary.toml", &summary_toml(&summary))?;
    if let Some(last) = branch.last() {
        emit(config, files, "wave.csv", &wave_csv(last, &problem)?)?;
    }
    branch_failure(&branch).map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct StageRecord {
    eps: f64,
    terminated_reason: Termination,
    branch_points: usize,
    crest_gap: f64,
    point: PointRecord,
    regularity: RegularityReport,
}

#[derive(Serialize)]
struct FailureRecord {
    eps: f64,
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct HomotopySummary {
    config: RunConfig,
    stages: Vec<StageRecord>,
    failure: Option<FailureRecord>,
}

fn run_homotopy(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let template = config.problem()?;
    let homotopy = eps_homotopy(&template, &config.continuation_config())?;
    let norm = kernel_norm(&template);
    let mut stages = Vec::new();
    let mut waves = Vec::new();
    for (i, stage) in homotopy.stages.iter().enumerate() {
        let problem = template.with_nonlinearity(template.nonlinearity.with_eps(stage.eps))?;
        let report = wave_audit_with_norm(&stage.point, &problem, norm);
        stages.push(StageRecord {
            eps: stage.eps,
            terminated_reason: stage.terminated_reason,
            branch_points: stage.branch_points,
            crest_gap: stage.crest_gap,
            point: PointRecord::new(&stage.point, &report),
            regularity: report,
        });
        waves.push((format!("wave_stage{i}.csv"), wave_csv(&stage.point, &problem)?));
    }
    let summary = HomotopySummary {
        config: config.clone(),
        stages,
        failure: homotopy.failure.as_ref().map(|(eps, e)| FailureRecord {
            eps: *eps,
            kind: e.kind(),
            message: e.to_string(),
        }),
    };
    emit(config, files, "homotopy_summary.toml", &summary_toml(&summary))?;
    for (name, text) in waves {
        emit(config, files, &name, &text)?;
    }
    homotopy.failure.map_or(Ok(()), |(_, e)| Err(e))
}

#[derive(Serialize)]
struct AsymptoticsSummary {
    config: RunConfig,
    report: AsymptoticsReport,
}

fn run_asymptotics(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let problem = config.problem()?;
    let report = verify_asymptotics(&problem, config.k, &config.s_list, config.continuation.newton_tol)
        .map_err(|e| e.in_stage("verify-asymptotics"))?;
    let summary = AsymptoticsSummary {
        config: config.clone(),
        report,
    };
    emit(config, files, "asymptotics.toml", &summary_toml(&summary))
}

#[derive(Serialize)]
struct RegularitySummary {
    config: RunConfig,
    terminated_reason: Termination,
    point: PointRecord,
    report: RegularityReport,
    lower_bound: Option<LowerBound>,
}

/// Audit with the configured window in place of the automatic one.
fn regularity_report(config: &RunConfig, problem: &SteadyProblem, wave: &BranchPoint) -> RegularityReport {
    let mut report = wave_audit_with_norm(wave, problem, kernel_norm(problem));
    if let Some(window) = config.window {
        report.fit_window = window;
        report.alpha_hat = cusp_exponent_fit(wave, problem, window).ok();
        report.ratio_bounds = ratio_bounds(wave, problem, window).unwrap_or((f64::NAN, f64::NAN));
    }
    report
}

fn run_regularity(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let problem = config.problem()?;
    let branch = follow(config, &problem)?;
    if let Some(e) = branch_failure(&branch) {
        return Err(e);
    }
    let wave = branch.last().expect("branch has points");
    let report = regularity_report(config, &problem, wave);
    let summary = RegularitySummary {
        config: config.clone(),
        terminated_reason: branch.terminated_reason,
        point: PointRecord::new(wave, &report),
        lower_bound: lower_bound_check(wave, &problem, report.fit_window, config.lower_bound_floor).ok(),
        report,
    };
    emit(config, files, "regularity.toml", &summary_toml(&summary))?;
    emit(config, files, "wave.csv", &wave_csv(wave, &problem)?)
}

#[derive(Serialize)]
struct AuditSummary {
    config: RunConfig,
    source: String,
    points: Vec<PointRecord>,
    reports: Vec<RegularityReport>,
}

fn run_audit(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let problem = config.problem()?;
    let norm = kernel_norm(&problem);
    let (source, waves) = match &config.wave {
        Some(path) => {
            let table = read_wave_csv(path)?;
            let wave = wave_from_table(&table, &problem, config.k, path)?;
            (path.display().to_string(), vec![wave])
        }
        None => {
            let branch = follow(config, &problem)?;
            if let Some(e) = branch_failure(&branch) {
                return Err(e);
            }
            ("branch".to_string(), branch.points)
        }
    };
    let reports: Vec<RegularityReport> = waves.iter().map(|w| wave_audit_with_norm(w, &problem, norm)).collect();
    let summary = AuditSummary {
        config: config.clone(),
        source,
        points: waves
            .iter()
            .zip(&reports)
            .map(|(w, r)| PointRecord::new(w, r))
            .collect(),
        reports,
    };
    emit(config, files, "audit.toml", &summary_toml(&summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command, dir: &std::path::Path) -> RunConfig {
        RunConfig {
            command: Some(command),
            output_dir: dir.to_path_buf(),
            m: 32,
            ..RunConfig::default()
        }
    }

    #[test]
    fn kernel_command_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(Command::Kernel, dir.path());
        c.nodes = 33;
        c.checks = 3;
        c.fourier_terms = 10_000;
        let out = run(&c).unwrap();
        assert_eq!(out.files.len(), 3);
        let table = std::fs::read_to_string(&out.files[0]).unwrap();
        assert!(table.starts_with("x,K_alpha,singular,regular\n"));
        assert_eq!(table.lines().count(), 33);
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(Command::Branch, dir.path());
        c.p = 0.5;
        let err = run(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }
}
