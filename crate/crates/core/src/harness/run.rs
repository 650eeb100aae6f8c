//! One job from a [`RunConfig`]: build the model, solve or check, write files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::config::{ConfigError, LevelConfig, Mode, RunConfig, TermSpec};
use super::oracle::{chain_vs_hull, oracle_dense_newton, oracle_finite_chain, OracleError};
use crate::continuation::{extend, FrequencyLadder, LadderLevel, LadderReport, LadderState};
use crate::diophantine::{self, DiophantineParams};
use crate::error::{IndexError, SeriesError, SolveError};
use crate::fourier::dump::{self, DumpError};
use crate::fourier::{FourierSeries, FrequencyBasis};
use crate::index_space::{IndexSet, MultiIndex, DEFAULT_CAP};
use crate::long_range::{solve_long, verify_long, InteractionTerm, LongOptions, LongRangeModel};
use crate::report::{Check, Relation, Status, VerificationReport};
use crate::short_range::{self, SolverState};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("hull dump: {0}")]
    Dump(#[from] DumpError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
    #[error("no mode given on the command line or in the config")]
    NoMode,
}

/// What a job produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub mode: Mode,
    pub out: PathBuf,
    pub report: VerificationReport,
    pub files: Vec<PathBuf>,
}

pub fn build_basis(cfg: &RunConfig) -> Result<FrequencyBasis, HarnessError> {
    let alpha = cfg.basis.alpha[..cfg.n()].to_vec();
    Ok(FrequencyBasis::new(alpha, cfg.basis.omega(), cfg.basis.rho, cfg.index.s, cfg.basis.iota)?)
}

pub fn build_set(cfg: &RunConfig) -> Result<Arc<IndexSet>, HarnessError> {
    let cap = cfg.index.cap.unwrap_or(DEFAULT_CAP);
    Ok(Arc::new(IndexSet::enumerate_with_cap(cfg.n(), cfg.index.radius, cfg.index.s, cap)?))
}

pub fn build_long_model(cfg: &RunConfig, basis: &FrequencyBasis, set: &Arc<IndexSet>) -> Result<LongRangeModel, HarnessError> {
    let long = cfg.long.as_ref().ok_or(HarnessError::MissingSection("long"))?;
    let mut terms: Vec<InteractionTerm> = Vec::new();
    if long.short_reduction {
        let v = cfg.potential.potential_series(set)?;
        terms.extend(LongRangeModel::short_range_reduction(&v, basis.clone())?.interactions().iter().cloned());
    }
    if let Some(f) = &long.file {
        let p = cfg.resolve(f);
        let text = std::fs::read_to_string(&p).map_err(|e| HarnessError::Io {
            path: p.clone(),
            reason: e.to_string(),
        })?;
        terms.extend(LongRangeModel::parse_terms(&text)?);
    }
    if let Some(r) = &long.records {
        terms.extend(LongRangeModel::parse_terms(r)?);
    }
    let mut model = LongRangeModel::new(terms, basis.clone(), set.clone())?;
    for d in &long.decay {
        model = model.with_decay_target(d.l, d.target)?;
    }
    Ok(model)
}

pub fn long_options(cfg: &RunConfig) -> Result<LongOptions, HarnessError> {
    let mut o = LongOptions {
        base: cfg.solver.options()?,
        ..LongOptions::default()
    };
    if let Some(l) = &cfg.long {
        o.mean_tol = l.mean_tol.unwrap_or(o.mean_tol);
        o.fixed_point_tol = l.fixed_point_tol.unwrap_or(o.fixed_point_tol);
        o.fixed_point_max = l.fixed_point_max.unwrap_or(o.fixed_point_max);
        o.require_contraction = l.require_contraction.unwrap_or(o.require_contraction);
    }
    Ok(o)
}

fn level_from(cfg: &LevelConfig) -> LadderLevel {
    cfg.force.iter().fold(LadderLevel::new(cfg.alpha, cfg.nu, cfg.tau), |lv, t: &TermSpec| {
        let k = MultiIndex::from_dense(t.k.clone());
        match t.kind {
            super::config::Kind::Cos => lv.with_cos(k, t.amp, t.phase),
            super::config::Kind::Sin => lv.with_sin(k, t.amp, t.phase),
        }
    })
}

pub fn build_ladder(cfg: &RunConfig) -> Result<FrequencyLadder, HarnessError> {
    let l = cfg.ladder.as_ref().ok_or(HarnessError::MissingSection("ladder"))?;
    let ladder = FrequencyLadder {
        levels: l.levels.iter().map(level_from).collect(),
        omega: cfg.basis.omega(),
        rho: cfg.basis.rho,
        rho_inf: l.rho_inf,
        s: cfg.index.s,
        radius: cfg.index.radius,
        iota: cfg.basis.iota,
    };
    ladder.validate()?;
    Ok(ladder)
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    files.push(path.to_path_buf());
    Ok(())
}

fn mkdir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_report(dir: &Path, report: &VerificationReport, files: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    write(&dir.join("report.txt"), &report.to_text(), files)?;
    write(&dir.join("report.kv"), &report.to_kv(), files)
}

/// Adds the configured Diophantine certificate to `report`.
fn push_diophantine(cfg: &RunConfig, basis: &FrequencyBasis, set: &IndexSet, report: &mut VerificationReport) {
    let Some(d) = &cfg.diophantine else { return };
    let params = DiophantineParams {
        nu: d.nu,
        tau: d.tau,
        style: d.style,
        level: None,
    };
    let r = diophantine::check(&params, basis.omega, &basis.alpha, set);
    report.push_value("diophantine_nu", r.nu);
    report.push_value("diophantine_min_divisor", r.min_divisor);
    report.push_check(Check::new("diophantine", r.empirical_nu, Relation::Ge, r.nu));
    if let (Some(k), Some(dv)) = (&r.witness, r.witness_divisor) {
        report.push_value(format!("diophantine_witness[{k}]"), dv);
    }
}

/// Runs `cfg` in `mode` (or the config's own mode), writing into `out`
/// (or the config's output directory, or the current directory).
pub fn run(cfg: &RunConfig, mode: Option<Mode>, out: Option<&Path>) -> Result<RunSummary, HarnessError> {
    let mode = mode.or(cfg.mode).ok_or(HarnessError::NoMode)?;
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.output.as_ref().map(|p| cfg.resolve(p)).unwrap_or_else(|| PathBuf::from(".")),
    };
    mkdir(&out)?;
    let mut files = Vec::new();
    let report = match mode {
        Mode::Short => run_short(cfg, &out, &mut files)?,
        Mode::Long => run_long(cfg, &out, &mut files)?,
        Mode::Ladder => run_ladder_job(cfg, &out, &mut files)?,
        Mode::Verify => run_verify(cfg, &out, &mut files)?,
        Mode::Oracle => run_oracle(cfg, &out, &mut files)?,
    };
    Ok(RunSummary { mode, out, report, files })
}

fn run_short(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<VerificationReport, HarnessError> {
    let basis = build_basis(cfg)?;
    let set = build_set(cfg)?;
    let model = cfg.potential.short_model(&set, &basis)?;
    let opts = cfg.solver.options()?;
    let (fin, mut report) = short_range::solve(&model, &SolverState::zero(&set, basis.rho), &opts)?;
    push_diophantine(cfg, &basis, &set, &mut report);
    report.push_value("lambda", fin.lambda);
    write(&out.join("residual_history.csv"), &report.iterations_csv(), files)?;
    write(&out.join("hull.coeffs"), &dump::to_string(&fin.h, fin.rho_n), files)?;
    write_report(out, &report, files)?;
    Ok(report)
}

fn run_long(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<VerificationReport, HarnessError> {
    let basis = build_basis(cfg)?;
    let set = build_set(cfg)?;
    let model = build_long_model(cfg, &basis, &set)?;
    let opts = long_options(cfg)?;
    let (fin, mut report) = solve_long(&model, &SolverState::zero(&set, basis.rho), &opts)?;
    push_diophantine(cfg, &basis, &set, &mut report);
    write(&out.join("residual_history.csv"), &report.iterations_csv(), files)?;
    write(&out.join("hull.coeffs"), &dump::to_string(&fin.h, fin.rho_n), files)?;
    write(&out.join("model.records"), &model.to_records(), files)?;
    write_report(out, &report, files)?;
    Ok(report)
}

/// Runs the ladder level by level so every level's hull can be dumped.
pub fn ladder_with_hulls(ladder: &FrequencyLadder, opts: &short_range::SolveOptions) -> Result<(LadderReport, Vec<FourierSeries>), HarnessError> {
    let trivial = Arc::new(IndexSet::enumerate(1, 0.5, ladder.s)?);
    let mut state = LadderState {
        level: 0,
        h: FourierSeries::zeros(&trivial),
        lambda: 0.0,
        rho_n: ladder.radius_at(0),
        deltas: Vec::new(),
    };
    let mut report = LadderReport {
        levels: Vec::new(),
        halted: None,
        partial_sums: Vec::new(),
    };
    let mut hulls = Vec::new();
    let mut sum = 0.0;
    while state.level < ladder.levels.len() {
        match extend(&state, ladder, opts) {
            Ok((next, rec)) => {
                sum += rec.delta;
                report.partial_sums.push(sum);
                report.levels.push(rec);
                hulls.push(next.h.clone());
                state = next;
            }
            Err(e) => {
                report.halted = Some((state.level + 1, e.to_string()));
                break;
            }
        }
    }
    Ok((report, hulls))
}

fn run_ladder_job(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<VerificationReport, HarnessError> {
    let ladder = build_ladder(cfg)?;
    let opts = cfg.solver.options()?;
    let (lr, hulls) = ladder_with_hulls(&ladder, &opts)?;
    write(&out.join("ladder.csv"), &lr.to_csv(), files)?;
    let mut report = VerificationReport::new("frequency ladder");
    for (rec, h) in lr.levels.iter().zip(&hulls) {
        let dir = out.join(format!("level_{}", rec.level));
        mkdir(&dir)?;
        write(&dir.join("hull.coeffs"), &dump::to_string(h, rec.rho_end), files)?;
        write_report(&dir, &rec.report, files)?;
        let n = rec.level;
        report.push_value(format!("level{n}.residual"), rec.residual);
        report.push_value(format!("level{n}.observed_constant"), rec.observed_constant);
        report.push_value(format!("level{n}.margin"), rec.margin);
        report.push_check(Check::new(format!("level{n}.drift"), rec.delta, Relation::Le, rec.drift_bound));
        report.push_check(Check::new(
            format!("level{n}.diophantine"),
            rec.diophantine.empirical_nu,
            Relation::Ge,
            rec.diophantine.nu,
        ));
    }
    report.push_value("levels_completed", lr.levels.len() as f64);
    report.push_check(Check::new("levels", lr.levels.len() as f64, Relation::Ge, ladder.levels.len() as f64));
    if let Some(last) = lr.levels.last() {
        report.residual = last.residual;
        report.residual_rho = last.rho_end;
        report.n_plus = last.n_plus;
        report.n_minus = last.n_minus;
        report.twist = last.twist;
        report.min_divisor = last.min_divisor;
    }
    report.status = match &lr.halted {
        Some((level, reason)) => {
            report.title = format!("frequency ladder (halted at level {level}: {reason})");
            Status::Halted
        }
        None => Status::Converged,
    };
    write_report(out, &report, files)?;
    Ok(report)
}

fn run_verify(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<VerificationReport, HarnessError> {
    let v = cfg.verify.as_ref().ok_or(HarnessError::MissingSection("verify"))?;
    let p = cfg.resolve(&v.hull);
    let text = std::fs::read_to_string(&p).map_err(|e| HarnessError::Io {
        path: p.clone(),
        reason: e.to_string(),
    })?;
    let (h, rho) = dump::from_str(&text)?;
    let set = h.set().clone();
    let basis = build_basis(cfg)?.truncated(set.n()).with_rho(rho);
    let state = SolverState::new(h, v.lambda, rho);
    let mut report = if v.long {
        let model = build_long_model(cfg, &basis, &set)?;
        verify_long(&state, &model, &long_options(cfg)?)
    } else {
        let model = cfg.potential.short_model(&set, &basis)?;
        short_range::verify(&model, &state, &cfg.solver.options()?)?
    };
    push_diophantine(cfg, &basis, &set, &mut report);
    write_report(out, &report, files)?;
    Ok(report)
}

fn run_oracle(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<VerificationReport, HarnessError> {
    let o = cfg.oracle.clone().ok_or(HarnessError::MissingSection("oracle"))?;
    let basis = build_basis(cfg)?;
    let set = build_set(cfg)?;
    let model = cfg.potential.short_model(&set, &basis)?;
    let opts = cfg.solver.options()?;
    let (fin, spectral) = short_range::solve(&model, &SolverState::zero(&set, basis.rho), &opts)?;
    let mut report = VerificationReport::new("oracle comparison");
    report.status = spectral.status;
    report.residual = spectral.residual;
    report.residual_rho = spectral.residual_rho;
    report.push_value("spectral_lambda", fin.lambda);
    report.push_check(Check::new("spectral_residual", spectral.residual, Relation::Le, opts.tol));
    if o.dense {
        let k = set.per_dim_bounds().into_iter().max().unwrap_or(0) as usize;
        let grid = o.grid.unwrap_or(4 * k + 16);
        let dense = oracle_dense_newton(&model, &set, grid, o.tol)?;
        report.push_value("dense_iterations", dense.iterations as f64);
        report.push_value("dense_residual", dense.residual);
        report.push_value("dense_lambda", dense.lambda);
        report.push_check(Check::new("dense_sup_coeff", dense.h.sup_diff(&fin.h), Relation::Le, 1e-8));
        report.push_check(Check::new("dense_lambda_gap", (dense.lambda - fin.lambda).abs(), Relation::Le, 1e-8));
        write(&out.join("dense.coeffs"), &dump::to_string(&dense.h, basis.rho), files)?;
    }
    if let (Some(p), Some(q)) = (o.p, o.q) {
        let alpha = basis.alpha.clone();
        let pot = cfg.potential.clone();
        let chain = oracle_finite_chain(|u| pot.eval_line(u, &alpha), p, q, o.tol, None)?;
        let gap = chain_vs_hull(&chain, &fin.h, &alpha, p);
        let detune = (basis.omega - std::f64::consts::TAU * p as f64 / q as f64).abs();
        report.push_value("chain_residual", chain.residual);
        report.push_value("chain_lambda", chain.lambda);
        report.push_value("chain_detuning", detune);
        report.push_check(Check::new("chain_pointwise", gap, Relation::Le, 1e-4));
        let mut csv = String::from("n,u,hull\n");
        for (n, u) in chain.u.iter().enumerate() {
            let theta = std::f64::consts::TAU * p as f64 * n as f64 / q as f64;
            let sigma: Vec<f64> = alpha.iter().map(|a| a * theta).collect();
            csv.push_str(&format!("{n},{u:?},{:?}\n", theta + fin.h.evaluate(&sigma).re));
        }
        write(&out.join("chain.csv"), &csv, files)?;
    }
    write(&out.join("hull.coeffs"), &dump::to_string(&fin.h, fin.rho_n), files)?;
    write_report(out, &report, files)?;
    Ok(report)
}
