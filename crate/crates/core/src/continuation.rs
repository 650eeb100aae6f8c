//! Frequency-by-frequency continuation: a hull found with `n` frequencies
//! seeds the solve with `n + 1`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::diophantine::{self, DiophantineParams, DiophantineReport, DiophantineStyle};
use crate::error::SolveError;
use crate::fourier::{FourierSeries, FrequencyBasis};
use crate::index_space::{IndexSet, MultiIndex};
use crate::report::VerificationReport;
use crate::short_range::{self, residual_of, ShortRangeModel, SolveOptions, SolverState};

/// One rung: the new frequency `alpha_n` and the force `W_n` it brings.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderLevel {
    pub alpha: f64,
    /// Fourier modes of `W_n`; support within frequencies `1..=n`.
    pub force: Vec<(MultiIndex, Complex64)>,
    pub nu: f64,
    pub tau: f64,
}

impl LadderLevel {
    pub fn new(alpha: f64, nu: f64, tau: f64) -> Self {
        Self {
            alpha,
            force: Vec::new(),
            nu,
            tau,
        }
    }

    /// Adds `amp sin(k.sigma + phase)` to `W_n`.
    pub fn with_sin(mut self, k: MultiIndex, amp: f64, phase: f64) -> Self {
        let c = Complex64::new(0.0, -0.5 * amp) * Complex64::from_polar(1.0, phase);
        self.force.push((k.neg(), c.conj()));
        self.force.push((k, c));
        self
    }

    /// Adds `amp cos(k.sigma + phase)` to `W_n`.
    pub fn with_cos(mut self, k: MultiIndex, amp: f64, phase: f64) -> Self {
        let c = Complex64::from_polar(0.5 * amp, phase);
        self.force.push((k.neg(), c.conj()));
        self.force.push((k, c));
        self
    }

    /// `W_n` on `set`; modes outside it are an error.
    pub fn force_on(&self, set: &Arc<IndexSet>) -> Result<FourierSeries, SolveError> {
        let mut out = FourierSeries::zeros(set);
        for (k, c) in &self.force {
            let p = set
                .position(k)
                .ok_or_else(|| SolveError::InvalidModel(format!("force mode [{k}] outside the level index set")))?;
            out.coeffs_mut()[p] += c;
        }
        Ok(out)
    }

    /// `sum |c_k|` of the force modes.
    pub fn size(&self) -> f64 {
        self.force.iter().map(|(_, c)| c.norm()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyLadder {
    pub levels: Vec<LadderLevel>,
    pub omega: f64,
    pub rho: f64,
    pub rho_inf: f64,
    pub s: f64,
    /// Index-set radius shared by all levels.
    pub radius: f64,
    pub iota: f64,
}

impl FrequencyLadder {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(0.0 < self.rho_inf && self.rho_inf < self.rho) {
            return Err(SolveError::InvalidModel(format!(
                "need 0 < rho_inf < rho, got {} and {}",
                self.rho_inf, self.rho
            )));
        }
        if self.levels.is_empty() {
            return Err(SolveError::InvalidModel("ladder has no levels".into()));
        }
        for (i, lv) in self.levels.iter().enumerate() {
            if let Some((k, _)) = lv.force.iter().find(|(k, _)| k.max_position() > i + 1) {
                return Err(SolveError::InvalidModel(format!("level {} force uses mode [{k}]", i + 1)));
            }
        }
        self.basis(self.levels.len())?;
        Ok(())
    }

    /// `rho_n = rho_inf + 2^{-n-1} (rho - rho_inf)`.
    pub fn radius_at(&self, n: usize) -> f64 {
        self.rho_inf + (self.rho - self.rho_inf) * 0.5f64.powi(n as i32 + 1)
    }

    /// Drift budget `(rho - rho_inf) 2^{-n-2}` for the step from level `n` to `n + 1`.
    pub fn drift_bound(&self, n: usize) -> f64 {
        (self.rho - self.rho_inf) * 0.5f64.powi(n as i32 + 2)
    }

    pub fn basis(&self, n: usize) -> Result<FrequencyBasis, SolveError> {
        let alpha = self.levels[..n].iter().map(|l| l.alpha).collect();
        Ok(FrequencyBasis::new(alpha, self.omega, self.rho, self.s, self.iota)?)
    }

    pub fn index_set(&self, n: usize) -> Result<Arc<IndexSet>, SolveError> {
        IndexSet::enumerate(n, self.radius, self.s)
            .map(Arc::new)
            .map_err(|e| SolveError::InvalidModel(e.to_string()))
    }

    /// `U = sum_{j <= n} W_j` on the level-`n` set.
    pub fn model(&self, n: usize, set: &Arc<IndexSet>) -> Result<ShortRangeModel, SolveError> {
        let mut u = FourierSeries::zeros(set);
        for lv in &self.levels[..n] {
            u += &lv.force_on(set)?;
        }
        ShortRangeModel::new(u, self.basis(n)?)
    }
}

/// `h` on the set with one more, inactive, frequency.
pub fn embed(h: &FourierSeries, target: &Arc<IndexSet>) -> FourierSeries {
    h.embed_into(target)
}

#[derive(Clone, Debug)]
pub struct LadderState {
    pub level: usize,
    pub h: FourierSeries,
    pub lambda: f64,
    pub rho_n: f64,
    /// `|h^{n+1} - embed(h^n)|_{rho_{n+1}}` per completed level.
    pub deltas: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub level: usize,
    pub rho_start: f64,
    pub rho_end: f64,
    /// Residual of the embedded guess at the new level.
    pub start_residual: f64,
    pub residual: f64,
    pub delta: f64,
    pub drift_bound: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub twist: f64,
    pub min_divisor: f64,
    pub margin: f64,
    /// `delta / (nu^{-2} (rho_n - rho_{n+1})^{-2 tau} start_residual)`.
    pub observed_constant: f64,
    pub diophantine: DiophantineReport,
    pub report: VerificationReport,
}

#[derive(Clone, Debug)]
pub struct LadderReport {
    pub levels: Vec<LevelRecord>,
    /// `(level, reason)` when a level solve failed.
    pub halted: Option<(usize, String)>,
    /// Running sums of the deltas.
    pub partial_sums: Vec<f64>,
}

impl LadderReport {
    pub fn completed(&self) -> bool {
        self.halted.is_none()
    }

    pub fn drift_ok(&self) -> bool {
        self.levels.iter().all(|l| l.delta <= l.drift_bound)
    }

    /// `level,residual,delta,n_plus,n_minus,c,min_divisor` lines with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,residual,delta,n_plus,n_minus,c,min_divisor\n");
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                l.level, l.residual, l.delta, l.n_plus, l.n_minus, l.twist, l.min_divisor
            );
        }
        out
    }
}

/// Solve level `state.level + 1` from the embedded level-`n` hull.
pub fn extend(state: &LadderState, ladder: &FrequencyLadder, opts: &SolveOptions) -> Result<(LadderState, LevelRecord), SolveError> {
    let n = state.level;
    let next = n + 1;
    if next > ladder.levels.len() {
        return Err(SolveError::InvalidModel(format!("ladder has only {} levels", ladder.levels.len())));
    }
    let set = ladder.index_set(next)?;
    let model = ladder.model(next, &set)?;
    let guess = embed(&state.h, &set);
    let rho_start = ladder.radius_at(n);
    let rho_end = ladder.radius_at(next);
    let start = SolverState::new(guess.clone(), state.lambda, rho_start);
    let start_residual = residual_of(&start.h, start.lambda, &model, rho_start)?.weighted_norm(rho_start);
    let mut level_opts = opts.clone();
    level_opts.rho_limit = Some(rho_end);
    level_opts.report_rho = Some(rho_end);
    let (fin, report) = short_range::solve(&model, &start, &level_opts)?;
    if !report.check("residual").is_some_and(|c| c.passed) {
        return Err(SolveError::Divergence {
            iteration: fin.iteration,
            eps: fin.eps_n,
        });
    }
    let residual = residual_of(&fin.h, fin.lambda, &model, rho_end)?.weighted_norm(rho_end);
    let delta = (&fin.h - &guess).weighted_norm(rho_end);
    let cond = short_range::condition_numbers(&fin, &model, rho_end)?;
    let lv = &ladder.levels[next - 1];
    let b = &model.basis;
    let params = DiophantineParams {
        nu: lv.nu,
        tau: lv.tau,
        style: DiophantineStyle::Power,
        level: Some(next),
    };
    let dio = diophantine::check(&params, b.omega, &b.alpha, &set);
    let gap = rho_start - rho_end;
    let scale = lv.nu.powi(-2) * gap.powf(-2.0 * lv.tau) * start_residual;
    let record = LevelRecord {
        level: next,
        rho_start,
        rho_end,
        start_residual,
        residual,
        delta,
        drift_bound: ladder.drift_bound(n),
        n_plus: cond.n_plus,
        n_minus: cond.n_minus,
        twist: cond.c,
        min_divisor: dio.min_divisor,
        margin: ladder.iota - fin.h.weighted_norm(rho_end),
        observed_constant: if scale > 0.0 { delta / scale } else { 0.0 },
        diophantine: dio,
        report,
    };
    let mut deltas = state.deltas.clone();
    deltas.push(delta);
    let out = LadderState {
        level: next,
        h: fin.h,
        lambda: fin.lambda,
        rho_n: rho_end,
        deltas,
    };
    Ok((out, record))
}

/// Fold [`extend`] over all levels; a failing level halts with the partial result.
pub fn run_ladder(ladder: &FrequencyLadder, opts: &SolveOptions) -> Result<(LadderState, LadderReport), SolveError> {
    ladder.validate()?;
    // level 0 has no frequencies; its hull is the constant zero on the trivial set
    let trivial = Arc::new(IndexSet::enumerate(1, 0.5, ladder.s).map_err(|e| SolveError::InvalidModel(e.to_string()))?);
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
    let mut sum = 0.0;
    while state.level < ladder.levels.len() {
        match extend(&state, ladder, opts) {
            Ok((next, rec)) => {
                sum += rec.delta;
                report.partial_sums.push(sum);
                report.levels.push(rec);
                state = next;
            }
            Err(e) => {
                report.halted = Some((state.level + 1, e.to_string()));
                break;
            }
        }
    }
    Ok((state, report))
}

/// `max_{|m| <= m_max} |u_{m+1} - 2 u_m + u_{m-1} + U(u_m alpha) + lambda|` along `u_m = m omega + h(m omega alpha)`.
pub fn orbit_residual(model: &ShortRangeModel, h: &FourierSeries, lambda: f64, m_max: i64) -> f64 {
    let b = &model.basis;
    let u = |m: i64| {
        let theta = m as f64 * b.omega;
        let sigma: Vec<f64> = b.alpha.iter().map(|a| theta * a).collect();
        theta + h.evaluate(&sigma).re
    };
    let mut worst: f64 = 0.0;
    let mut prev = u(-m_max - 1);
    let mut cur = u(-m_max);
    for m in -m_max..=m_max {
        let nxt = u(m + 1);
        let sigma: Vec<f64> = b.alpha.iter().map(|a| cur * a).collect();
        let r = nxt - 2.0 * cur + prev + model.shell_u.evaluate(&sigma).re + lambda;
        worst = worst.max(r.abs());
        prev = cur;
        cur = nxt;
    }
    worst
}
