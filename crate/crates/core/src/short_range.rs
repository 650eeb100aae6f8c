//! Residual, quasi-Newton step and iteration for the nearest-neighbour chain
//! `u_{n+1} + u_{n-1} - 2 u_n + U(u_n alpha) + lambda = 0`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cohomology::{solve_s, DivisorFloor};
use crate::diophantine::{self, DiophantineStyle};
use crate::error::{SeriesError, SolveError};
use crate::fourier::{compose_shell, FourierSeries, FrequencyBasis, SERIES_TOL};
use crate::index_space::IndexSet;
use crate::report::{Check, IterationRow, Relation, Status, VerificationReport};

#[derive(Clone, Debug)]
pub struct ShortRangeModel {
    pub shell_u: FourierSeries,
    pub shell_v: Option<FourierSeries>,
    pub basis: FrequencyBasis,
}

impl ShortRangeModel {
    pub fn new(shell_u: FourierSeries, basis: FrequencyBasis) -> Result<Self, SolveError> {
        basis.validate()?;
        if shell_u.set().n() != basis.n() {
            return Err(SeriesError::DimensionMismatch {
                expected: basis.n(),
                got: shell_u.set().n(),
            }
            .into());
        }
        Ok(Self {
            shell_u,
            shell_v: None,
            basis,
        })
    }

    /// Gradient force `U = d_alpha V`.
    pub fn gradient(shell_v: FourierSeries, basis: FrequencyBasis) -> Result<Self, SolveError> {
        let u = shell_v.derive_alpha(&basis.alpha);
        let mut m = Self::new(u, basis)?;
        m.shell_v = Some(shell_v);
        Ok(m)
    }

    /// Declares `U = d_alpha V`; rejected unless it holds to `1e-12` in the rho-norm.
    pub fn with_potential(mut self, shell_v: FourierSeries) -> Result<Self, SolveError> {
        let gap = (&shell_v.derive_alpha(&self.basis.alpha) - &self.shell_u).weighted_norm(self.basis.rho);
        if gap > 1e-12 {
            return Err(SolveError::InvalidModel(format!("U differs from d_alpha V by {gap:.3e}")));
        }
        self.shell_v = Some(shell_v);
        Ok(self)
    }

    pub fn set(&self) -> &Arc<IndexSet> {
        self.shell_u.set()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub h: FourierSeries,
    pub lambda: f64,
    pub rho_n: f64,
    pub eps_n: f64,
    pub iteration: usize,
}

impl SolverState {
    pub fn new(h: FourierSeries, lambda: f64, rho: f64) -> Self {
        Self {
            h: h.drop_mean(),
            lambda,
            rho_n: rho,
            eps_n: f64::NAN,
            iteration: 0,
        }
    }

    pub fn zero(set: &Arc<IndexSet>, rho: f64) -> Self {
        Self::new(FourierSeries::zeros(set), 0.0, rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionNumbers {
    pub n_plus: f64,
    pub n_minus: f64,
    /// `|<1 / (l l o T_{-omega alpha})>|`
    pub c: f64,
    /// `<l>`, equal to 1 by construction
    pub mean_l: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// residuals below this never count as divergence
    pub divergence_floor: f64,
    /// caps on `N-` and `1/c`
    pub condition_cap: f64,
    pub floor: DivisorFloor,
    pub reciprocal_tol: f64,
    /// limit of the radius schedule; `3 rho_0 / 4` when unset
    pub rho_limit: Option<f64>,
    /// radius of the final report; `rho_0 / 2` when unset
    pub report_rho: Option<f64>,
    pub tau: f64,
    pub vanish_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 40,
            divergence_floor: 1e-10,
            condition_cap: 1e8,
            floor: DivisorFloor::default(),
            reciprocal_tol: SERIES_TOL,
            rho_limit: None,
            report_rho: None,
            tau: 1.0,
            vanish_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    /// `|e|` at the radius the step started from
    pub eps_before: f64,
    pub delta_norm: f64,
    pub counterterm: f64,
    pub w_bar: Complex64,
    pub conditions: ConditionNumbers,
    pub min_divisor: f64,
    pub clamped: usize,
    /// dropped mass of the step, weighted at the starting radius
    pub loss: f64,
    pub delta: FourierSeries,
    /// residual at the new state
    pub residual: FourierSeries,
}

fn local_basis(model: &ShortRangeModel, rho: f64) -> FrequencyBasis {
    model.basis.with_rho(rho)
}

/// `h o T_{omega alpha} + h o T_{-omega alpha} - 2 h + U(sigma + alpha h) + lambda`.
pub fn residual(state: &SolverState, model: &ShortRangeModel) -> Result<FourierSeries, SeriesError> {
    residual_of(&state.h, state.lambda, model, state.rho_n)
}

pub(crate) fn residual_of(h: &FourierSeries, lambda: f64, model: &ShortRangeModel, rho: f64) -> Result<FourierSeries, SeriesError> {
    let b = local_basis(model, rho);
    let comp = compose_shell(&model.shell_u, h, &b)?;
    let lap = &(&h.shift_orbit(&b, 1.0) + &h.shift_orbit(&b, -1.0)) - &h.scale(2.0);
    Ok((&lap + &comp).add_scalar(lambda))
}

/// `l = 1 + d_alpha h`.
pub fn l_series(h: &FourierSeries, alpha: &[f64]) -> FourierSeries {
    h.derive_alpha(alpha).add_scalar(1.0)
}

pub(crate) struct Twist {
    pub l: FourierSeries,
    pub q: FourierSeries,
    pub cond: ConditionNumbers,
}

pub(crate) fn twist(h: &FourierSeries, basis: &FrequencyBasis, rho: f64, tol: f64) -> Result<Twist, SeriesError> {
    let l = l_series(h, &basis.alpha);
    let linv = l.reciprocal(rho, tol)?;
    let q = linv.multiply(&linv.shift_orbit(basis, -1.0))?;
    let cond = ConditionNumbers {
        n_plus: l.weighted_norm(rho),
        n_minus: linv.weighted_norm(rho),
        c: q.average().norm(),
        mean_l: l.average(),
    };
    Ok(Twist { l, q, cond })
}

pub fn condition_numbers(state: &SolverState, model: &ShortRangeModel, rho: f64) -> Result<ConditionNumbers, SeriesError> {
    Ok(twist(&state.h, &model.basis, rho, SERIES_TOL)?.cond)
}

pub fn newton_step(state: &SolverState, model: &ShortRangeModel, rho_next: f64, opts: &SolveOptions) -> Result<(SolverState, StepDiagnostics), SolveError> {
    let e = residual(state, model)?;
    step_from_residual(state, &e, model, rho_next, opts)
}

pub(crate) fn step_from_residual(
    state: &SolverState,
    e: &FourierSeries,
    model: &ShortRangeModel,
    rho_next: f64,
    opts: &SolveOptions,
) -> Result<(SolverState, StepDiagnostics), SolveError> {
    let rho = state.rho_n;
    let b = local_basis(model, rho);
    let Twist { l, q, cond, .. } = twist(&state.h, &b, rho, opts.reciprocal_tol)?;

    let counter = -l.multiply(e)?.average().re;
    let rhs = l.multiply(&e.clone().add_scalar(counter))?;
    // the mean is zero up to roundoff; drop it before the division
    let rhs = rhs.drop_mean();
    let s1 = solve_s(1, &rhs, &b, &opts.floor)?;
    let w0 = s1.phi;
    let w_bar = -w0.multiply(&q)?.average() / q.average();
    let rhs2 = w0.clone().add_scalar(w_bar).multiply(&q)?.drop_mean();
    let s2 = solve_s(-1, &rhs2, &b, &opts.floor)?;
    let beta_t = s2.phi;
    let beta_bar = -beta_t.multiply(&l)?.average();
    let delta = beta_t.add_scalar(beta_bar).multiply(&l)?;

    let delta_norm = delta.weighted_norm(rho);
    if !delta_norm.is_finite() {
        return Err(SolveError::NonFinite(state.iteration));
    }
    if delta_norm >= b.iota {
        return Err(SolveError::StepTooLarge {
            norm: delta_norm,
            iota: b.iota,
        });
    }
    let loss = e.loss().at(rho) + delta.loss().at(rho);
    let mut h = (&state.h + &delta).drop_mean();
    h.clear_loss();
    let mut next = SolverState {
        h,
        lambda: state.lambda + counter,
        rho_n: rho_next,
        eps_n: f64::NAN,
        iteration: state.iteration + 1,
    };
    let new_e = residual(&next, model)?;
    next.eps_n = new_e.weighted_norm(rho_next);
    let mut delta = delta;
    delta.clear_loss();
    let diag = StepDiagnostics {
        eps_before: e.weighted_norm(rho),
        delta_norm,
        counterterm: counter,
        w_bar,
        conditions: cond,
        min_divisor: s1.min_divisor.min(s2.min_divisor),
        clamped: s1.clamped + s2.clamped,
        loss,
        delta,
        residual: new_e,
    };
    Ok((next, diag))
}

/// `rho_m = limit + (start - limit) 2^{-m}`.
pub fn radius_schedule(start: f64, limit: f64, m: usize) -> f64 {
    limit + (start - limit) * 0.5f64.powi(m as i32)
}

/// Bookkeeping shared by the short- and long-range iterations.
pub(crate) struct Monitor {
    tol: f64,
    floor: f64,
    max_iter: usize,
    increases: usize,
    stalls: usize,
    last: f64,
}

pub(crate) enum Verdict {
    Continue,
    Stop(Status),
}

impl Monitor {
    pub fn new(opts: &SolveOptions) -> Self {
        Self {
            tol: opts.tol,
            floor: opts.divergence_floor,
            max_iter: opts.max_iter,
            increases: 0,
            stalls: 0,
            last: f64::INFINITY,
        }
    }

    /// Judge the residual of iteration `m`.
    pub fn observe(&mut self, m: usize, eps: f64) -> Result<Verdict, SolveError> {
        if !eps.is_finite() {
            return Err(SolveError::NonFinite(m));
        }
        if eps <= self.tol {
            return Ok(Verdict::Stop(Status::Converged));
        }
        if eps >= self.last {
            self.stalls += 1;
            if eps > self.last {
                self.increases += 1;
            } else {
                self.increases = 0;
            }
        } else {
            self.stalls = 0;
            self.increases = 0;
        }
        self.last = eps;
        if self.increases >= 2 && eps > self.floor {
            return Err(SolveError::Divergence { iteration: m, eps });
        }
        if self.stalls >= 2 {
            return Ok(Verdict::Stop(Status::Stagnated));
        }
        if m >= self.max_iter {
            return Ok(Verdict::Stop(Status::MaxIterations));
        }
        Ok(Verdict::Continue)
    }
}

pub(crate) fn check_conditions(cond: &ConditionNumbers, cap: f64) -> Result<(), SolveError> {
    if !(cond.n_minus <= cap) {
        return Err(SolveError::ConditionBlowup {
            name: "N-",
            value: cond.n_minus,
            cap,
        });
    }
    if !(cond.c > 0.0 && 1.0 / cond.c <= cap) {
        return Err(SolveError::ConditionBlowup {
            name: "1/c",
            value: 1.0 / cond.c,
            cap,
        });
    }
    Ok(())
}

/// Iterate quasi-Newton steps on the radius schedule until the residual is below `opts.tol`.
pub fn solve(model: &ShortRangeModel, initial: &SolverState, opts: &SolveOptions) -> Result<(SolverState, VerificationReport), SolveError> {
    let rho0 = initial.rho_n;
    let limit = opts.rho_limit.unwrap_or(0.75 * rho0);
    let mut state = initial.clone();
    state.h = state.h.drop_mean();
    state.iteration = 0;
    let mut e = residual(&state, model)?;
    state.eps_n = e.weighted_norm(rho0);
    let eps0 = state.eps_n;

    let mut report = VerificationReport::new("short-range quasi-Newton solve");
    let mut monitor = Monitor::new(opts);
    let mut delta_norm = 0.0;
    let mut total_loss = e.loss().at(rho0);
    let mut min_div = f64::INFINITY;
    let mut clamped = 0;
    let status = loop {
        let m = state.iteration;
        report.iterations.push(IterationRow {
            iteration: m,
            rho: state.rho_n,
            eps: state.eps_n,
            delta_norm,
            lambda: state.lambda,
        });
        match monitor.observe(m, state.eps_n)? {
            Verdict::Stop(s) => break s,
            Verdict::Continue => {}
        }
        let rho_next = radius_schedule(rho0, limit, m + 1);
        let (next, diag) = step_from_residual(&state, &e, model, rho_next, opts)?;
        check_conditions(&diag.conditions, opts.condition_cap)?;
        delta_norm = diag.delta_norm;
        total_loss += diag.loss;
        min_div = min_div.min(diag.min_divisor);
        clamped += diag.clamped;
        e = diag.residual;
        state = next;
    };

    let report_rho = opts.report_rho.unwrap_or(0.5 * rho0);
    fill_report(&mut report, model, initial, &state, &e, eps0, report_rho, opts)?;
    report.status = status;
    report.truncation_loss = total_loss;
    if min_div.is_finite() {
        report.push_value("min_divisor_used", min_div);
    }
    report.push_value("clamped_divisors", clamped as f64);
    report.push_check(Check::new("divisor_clamping", clamped as f64, Relation::Le, 0.0));
    Ok((state, report))
}

#[allow(clippy::too_many_arguments)]
fn fill_report(
    report: &mut VerificationReport,
    model: &ShortRangeModel,
    initial: &SolverState,
    fin: &SolverState,
    e: &FourierSeries,
    eps0: f64,
    report_rho: f64,
    opts: &SolveOptions,
) -> Result<(), SolveError> {
    let b = &model.basis;
    let set = model.set();
    report.residual = fin.eps_n;
    report.residual_rho = fin.rho_n;
    let cond = twist(&fin.h, b, fin.rho_n, opts.reciprocal_tol)?.cond;
    report.n_plus = cond.n_plus;
    report.n_minus = cond.n_minus;
    report.twist = cond.c;
    if set.len() > 1 {
        let nu = diophantine::empirical_nu(b.omega, &b.alpha, set, opts.tau, DiophantineStyle::Product).unwrap_or(0.0);
        report.empirical_nu = nu;
        report.min_divisor = diophantine::min_divisor(b.omega, &b.alpha, set).map_or(f64::NAN, |(d, _)| d);
    }
    let dh = (&fin.h - &initial.h).weighted_norm(report_rho);
    let dl = (fin.lambda - initial.lambda).abs();
    report.push_value("lambda", fin.lambda);
    report.push_value("residual_at_report_rho", e.weighted_norm(report_rho));
    report.push_value("report_rho", report_rho);
    report.push_value("eps0", eps0);
    report.push_value("h_change", dh);
    report.push_value("lambda_change", dl);
    if eps0 > 0.0 {
        report.push_value("observed_c1", dh / eps0);
        report.push_value("observed_c2", dl / eps0);
    }
    let hn = fin.h.weighted_norm(fin.rho_n);
    report.push_value("h_norm", hn);
    report.push_value("mean_l", cond.mean_l.re);
    report.push_check(Check::new("residual", fin.eps_n, Relation::Le, opts.tol));
    report.push_check(Check::new("empirical_nu", report.empirical_nu, Relation::Gt, 0.0));
    report.push_check(Check::new("n_minus", cond.n_minus, Relation::Le, opts.condition_cap));
    report.push_check(Check::new("twist", cond.c, Relation::Gt, 0.0));
    report.push_check(Check::new("composition_margin", hn, Relation::Lt, b.iota));
    Ok(())
}

/// Report for a given hull without iterating.
pub fn verify(model: &ShortRangeModel, state: &SolverState, opts: &SolveOptions) -> Result<VerificationReport, SolveError> {
    let e = residual(state, model)?;
    let mut report = VerificationReport::new("short-range verification");
    report.status = Status::Checked;
    let report_rho = opts.report_rho.unwrap_or(0.5 * state.rho_n);
    let mut fin = state.clone();
    fin.eps_n = e.weighted_norm(state.rho_n);
    fill_report(&mut report, model, state, &fin, &e, fin.eps_n, report_rho, opts)?;
    report.truncation_loss = e.loss().at(state.rho_n);
    if model.shell_v.is_some() {
        report.push_check(Check::new("vanishing_lambda", fin.lambda.abs(), Relation::Le, opts.vanish_tol));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VanishingReport {
    pub applicable: bool,
    pub lambda: f64,
    pub tol: f64,
    pub passed: bool,
}

/// For gradient models the counterterm of a solution must vanish.
pub fn vanishing_check(model: &ShortRangeModel, fin: &SolverState, tol: f64) -> VanishingReport {
    let applicable = model.shell_v.is_some();
    VanishingReport {
        applicable,
        lambda: fin.lambda,
        tol,
        passed: applicable && fin.lambda.abs() <= tol,
    }
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub scale: f64,
    pub agree: bool,
    pub h_diff: f64,
    pub lambda_diff: f64,
    pub bound: f64,
    pub restart: Option<SolverState>,
    pub error: Option<String>,
}

/// Real zero-average series with `|p|_rho = scale`, modes decaying like `e^{-(rho+1)|k|_s}`.
pub fn random_perturbation(set: &Arc<IndexSet>, rho: f64, scale: f64, seed: u64) -> FourierSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = FourierSeries::zeros(set);
    for i in set.half_positions() {
        let decay = (-(rho + 1.0) * set.weight(i)).exp();
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * decay;
        p.coeffs_mut()[i] = c;
        p.coeffs_mut()[set.neg_position(i)] = c.conj();
    }
    let n = p.weighted_norm(rho);
    if n == 0.0 || scale == 0.0 {
        return FourierSeries::zeros(set);
    }
    p.scale(scale / n)
}

/// Restart the solve from a perturbed solution and compare the two limits.
pub fn uniqueness_probe(model: &ShortRangeModel, fin: &SolverState, scale: f64, seed: u64, opts: &SolveOptions) -> UniquenessReport {
    let rho = model.basis.rho;
    let p = random_perturbation(model.set(), rho, scale, seed);
    let start = SolverState::new(&fin.h + &p, fin.lambda, rho);
    let bound = 10.0 * opts.tol;
    match solve(model, &start, opts) {
        Ok((s, rep)) => {
            let h_diff = s.h.sup_diff(&fin.h);
            let lambda_diff = (s.lambda - fin.lambda).abs();
            UniquenessReport {
                scale,
                agree: rep.status == Status::Converged && h_diff <= bound && lambda_diff <= bound,
                h_diff,
                lambda_diff,
                bound,
                restart: Some(s),
                error: None,
            }
        }
        Err(e) => UniquenessReport {
            scale,
            agree: false,
            h_diff: f64::NAN,
            lambda_diff: f64::NAN,
            bound,
            restart: None,
            error: Some(e.to_string()),
        },
    }
}
