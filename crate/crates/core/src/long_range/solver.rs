use num_complex::Complex64;

use super::interaction::Evaluator;
use super::model::LongRangeModel;
use crate::cohomology::{apply_l, apply_r, solve_s, DivisorFloor, Sign};
use crate::diophantine::{self, DiophantineStyle};
use crate::error::{SeriesError, SolveError};
use crate::fourier::{FourierSeries, FrequencyBasis, SERIES_TOL};
use crate::report::{Check, IterationRow, Relation, Status, VerificationReport};
use crate::short_range::{l_series, radius_schedule, Monitor, SolveOptions, SolverState, Verdict};

/// Options of the long-range iteration on top of the shared [`SolveOptions`].
#[derive(Clone, Debug, PartialEq)]
pub struct LongOptions {
    pub base: SolveOptions,
    /// Relative tolerance on `<l E>` before its projection.
    pub mean_tol: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max: usize,
    /// Refuse the linear solve unless `(N-)^2 T beta < 1/2`.
    pub require_contraction: bool,
}

impl Default for LongOptions {
    fn default() -> Self {
        Self {
            base: SolveOptions::default(),
            mean_tol: 1e-10,
            fixed_point_tol: 1e-15,
            fixed_point_max: 200,
            require_contraction: true,
        }
    }
}

/// `E[h] = sum_L sum_k d^{(k)} H_L(gamma^{(-k)})` at the model's radius.
pub fn residual_long(h: &FourierSeries, model: &LongRangeModel) -> Result<FourierSeries, SeriesError> {
    residual_long_at(h, model, model.basis().rho)
}

pub fn residual_long_at(h: &FourierSeries, model: &LongRangeModel, rho: f64) -> Result<FourierSeries, SeriesError> {
    let b = model.basis().with_rho(rho);
    let mut ev = Evaluator::new(h, &b)?;
    residual_with(&mut ev, model)
}

fn residual_with(ev: &mut Evaluator<'_>, model: &LongRangeModel) -> Result<FourierSeries, SeriesError> {
    let mut out = FourierSeries::zeros(ev.h().set());
    for l in 0..=model.l_max() {
        for k in 0..=l {
            let t = model.first(l, k);
            if !t.is_empty() {
                out += &ev.eval(t, k)?;
            }
        }
    }
    Ok(out)
}

fn c_with(ev: &mut Evaluator<'_>, model: &LongRangeModel, l_hat: &FourierSeries, j: usize, k: usize, range: usize) -> Result<FourierSeries, SeriesError> {
    let term = model.second(range, k, j);
    if term.is_empty() {
        return Ok(FourierSeries::zeros(ev.h().set()));
    }
    let d = ev.eval(term, k)?;
    let shifted = l_hat.shift_orbit(ev.basis(), j as f64 - k as f64);
    d.multiply(&l_hat.multiply(&shifted)?)
}

/// `C_{j,k,L} = d^{(k)} d^{(j)} H_L(gamma^{(-k)}) l (l o T_{(j-k) omega alpha})`.
pub fn c_series(j: usize, k: usize, range: usize, h: &FourierSeries, model: &LongRangeModel) -> Result<FourierSeries, SolveError> {
    if range > model.l_max() || j > range || k > range {
        return Err(SolveError::InvalidModel(format!("C_({j},{k},{range}) outside L_max = {}", model.l_max())));
    }
    let b = model.basis();
    let mut ev = Evaluator::new(h, b)?;
    let l_hat = l_series(h, &b.alpha);
    Ok(c_with(&mut ev, model, &l_hat, j, k, range)?)
}

/// `|d_alpha E - sum_{L,k,j} d^{(j)} d^{(k)} H_L(gamma^{(-k)}) (l o T_{(j-k) omega alpha})|_rho`.
pub fn identity_check_y8(h: &FourierSeries, model: &LongRangeModel) -> Result<f64, SeriesError> {
    let b = model.basis();
    let mut ev = Evaluator::new(h, b)?;
    let e = residual_with(&mut ev, model)?;
    let l_hat = l_series(h, &b.alpha);
    let mut de = FourierSeries::zeros(h.set());
    for range in 0..=model.l_max() {
        for k in 0..=range {
            for j in 0..=range {
                let t = model.second(range, k, j);
                if t.is_empty() {
                    continue;
                }
                let d = ev.eval(t, k)?;
                de += &d.multiply(&l_hat.shift_orbit(b, j as f64 - k as f64))?;
            }
        }
    }
    Ok((&e.derive_alpha(&b.alpha) - &de).weighted_norm(b.rho))
}

/// Everything the linear solve needs at one hull.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub rho: f64,
    pub l: FourierSeries,
    pub c011: FourierSeries,
    pub cinv: FourierSeries,
    /// `(j, k, L, C_{j,k,L})` for `L >= 2`, `j < k`.
    pub far: Vec<(usize, usize, usize, FourierSeries)>,
    pub n_plus: f64,
    pub n_minus: f64,
    /// `|<l^{-1} (l^{-1} o T_{-omega alpha})>|`.
    pub twist: f64,
    pub t_bound: f64,
    pub u_bound: f64,
    pub beta: f64,
}

impl Linearization {
    pub fn new(h: &FourierSeries, model: &LongRangeModel, rho: f64, tol: f64) -> Result<Self, SolveError> {
        let b = model.basis().with_rho(rho);
        let mut ev = Evaluator::new(h, &b)?;
        let l = l_series(h, &b.alpha);
        let linv = l.reciprocal(rho, tol)?;
        let twist = linv.multiply(&linv.shift_orbit(&b, -1.0))?.average().norm();
        if model.l_max() < 1 || model.interaction(1).is_none_or(|t| t.is_empty()) {
            return Err(SolveError::InvalidModel("no range-1 interaction: C_(0,1,1) vanishes".into()));
        }
        let d01 = ev.eval(model.second(1, 1, 0), 1)?;
        let t_bound = d01.reciprocal(rho, tol)?.weighted_norm(rho);
        let c011 = c_with(&mut ev, model, &l, 0, 1, 1)?;
        let cinv = c011.reciprocal(rho, tol)?;
        let u_bound = 1.0 / cinv.average().norm();
        let mut far = Vec::new();
        for range in 2..=model.l_max() {
            for k in 1..=range {
                for j in 0..k {
                    if !model.second(range, k, j).is_empty() {
                        far.push((j, k, range, c_with(&mut ev, model, &l, j, k, range)?));
                    }
                }
            }
        }
        Ok(Self {
            rho,
            n_plus: l.weighted_norm(rho),
            n_minus: linv.weighted_norm(rho),
            l,
            c011,
            cinv,
            far,
            twist,
            t_bound,
            u_bound,
            beta: model.beta(),
        })
    }

    /// `(N-)^2 T beta`.
    pub fn contraction_product(&self) -> f64 {
        self.n_minus * self.n_minus * self.t_bound * self.beta
    }

    /// `(N-)^2 U T`.
    pub fn mean_product(&self) -> f64 {
        self.n_minus * self.n_minus * self.u_bound * self.t_bound
    }

    /// `G x = sum_{L>=2} sum_{j<k} L+_{k-j}(C_{j,k,L} R-_{j-k} x)`.
    pub fn apply_g(&self, x: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<FourierSeries, SolveError> {
        let mut out = FourierSeries::zeros(x.set());
        if x.is_zero() {
            return Ok(out);
        }
        let x = x.clone().drop_mean();
        for (j, k, _, c) in &self.far {
            let n = *j as i32 - *k as i32;
            let r = apply_r(n, Sign::Minus, &x, basis, floor)?;
            out += &apply_l(-n, Sign::Plus, &c.multiply(&r)?, basis, floor)?;
        }
        Ok(out)
    }

    /// Solve `(C_{0,1,1} + G) x = W + W_bar` with zero-average `x`, then `S_{-1} eta = x`.
    pub fn solve(&self, w: &FourierSeries, basis: &FrequencyBasis, opts: &LongOptions) -> Result<LinearSolve, SolveError> {
        let floor = &opts.base.floor;
        let p = self.contraction_product();
        if opts.require_contraction && !(p < 0.5) {
            return Err(SolveError::NoContraction(p));
        }
        let mean_cinv = self.cinv.average();
        let close = |y: &FourierSeries| -> Result<(FourierSeries, Complex64), SolveError> {
            let w_bar = -self.cinv.multiply(y)?.average() / mean_cinv;
            Ok((self.cinv.multiply(&y.clone().add_scalar(w_bar))?.drop_mean(), w_bar))
        };
        let (mut x, mut w_bar) = close(w)?;
        let mut diffs = Vec::new();
        let mut iterations = 1;
        if !self.far.is_empty() && !x.is_zero() {
            loop {
                let y = w - &self.apply_g(&x, basis, floor)?;
                let (next, wb) = close(&y)?;
                let diff = (&next - &x).weighted_norm(self.rho);
                diffs.push(diff);
                x = next;
                w_bar = wb;
                iterations += 1;
                if !diff.is_finite() {
                    return Err(SolveError::NonFinite(iterations));
                }
                if diff <= opts.fixed_point_tol * (1.0 + x.weighted_norm(self.rho)) {
                    break;
                }
                if iterations >= opts.fixed_point_max {
                    return Err(SolveError::FixedPointNotConverged(iterations));
                }
            }
        }
        x.clear_loss();
        let s = solve_s(-1, &x, basis, floor)?;
        let c = -self.l.multiply(&s.phi)?.average();
        let eta = s.phi.add_scalar(c);
        let ratio = diffs
            .windows(2)
            .filter(|d| d[0] > 1e3 * f64::EPSILON)
            .map(|d| d[1] / d[0])
            .fold(0.0, f64::max);
        Ok(LinearSolve {
            eta,
            x,
            w_bar,
            iterations,
            diffs,
            contraction_ratio: ratio,
            min_divisor: s.min_divisor,
            clamped: s.clamped,
        })
    }
}

#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub eta: FourierSeries,
    /// `S_{-1} eta` before the constant is added.
    pub x: FourierSeries,
    pub w_bar: Complex64,
    pub iterations: usize,
    /// `|x_{m+1} - x_m|_rho` per fixed-point sweep.
    pub diffs: Vec<f64>,
    /// Largest observed ratio of successive differences.
    pub contraction_ratio: f64,
    pub min_divisor: f64,
    pub clamped: usize,
}

/// `G x` at the hull `h`.
pub fn apply_g(h: &FourierSeries, x: &FourierSeries, model: &LongRangeModel, floor: &DivisorFloor) -> Result<FourierSeries, SolveError> {
    let b = model.basis();
    let lin = Linearization::new(h, model, b.rho, SERIES_TOL)?;
    lin.apply_g(x, b, floor)
}

/// `eta` with `S_1 W = rhs` and `S_{-1} eta = (C_{0,1,1} + G)^{-1} (W + W_bar)`.
pub fn solve_linearized(h: &FourierSeries, rhs: &FourierSeries, model: &LongRangeModel, opts: &LongOptions) -> Result<LinearSolve, SolveError> {
    let b = model.basis();
    let lin = Linearization::new(h, model, b.rho, opts.base.reciprocal_tol)?;
    let w = solve_s(1, rhs, b, &opts.base.floor)?.phi;
    lin.solve(&w, b, opts)
}

#[derive(Clone, Debug)]
pub struct LongStepDiagnostics {
    pub eps_before: f64,
    pub delta_norm: f64,
    /// `<l E>` before projection.
    pub mean_le: f64,
    pub w_bar: Complex64,
    pub fixed_point_iterations: usize,
    pub contraction_ratio: f64,
    pub contraction_product: f64,
    pub mean_product: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub twist: f64,
    pub min_divisor: f64,
    pub clamped: usize,
    pub loss: f64,
    pub delta: FourierSeries,
    pub residual: FourierSeries,
}

pub fn newton_step_long(state: &SolverState, model: &LongRangeModel, rho_next: f64, opts: &LongOptions) -> Result<(SolverState, LongStepDiagnostics), SolveError> {
    let e = residual_long_at(&state.h, model, state.rho_n)?;
    step_from_residual(state, &e, model, rho_next, opts)
}

fn step_from_residual(
    state: &SolverState,
    e: &FourierSeries,
    model: &LongRangeModel,
    rho_next: f64,
    opts: &LongOptions,
) -> Result<(SolverState, LongStepDiagnostics), SolveError> {
    let rho = state.rho_n;
    let b = model.basis().with_rho(rho);
    let lin = Linearization::new(&state.h, model, rho, opts.base.reciprocal_tol)?;
    let le = lin.l.multiply(e)?;
    let mean = le.average().norm();
    let tolerance = opts.mean_tol * (1.0 + lin.n_plus * e.weighted_norm(rho));
    if mean > tolerance {
        return Err(SolveError::MeanIdentity { average: mean, tolerance });
    }
    let w = solve_s(1, &le.drop_mean(), &b, &opts.base.floor)?;
    let sol = lin.solve(&w.phi, &b, opts)?;
    let delta = lin.l.multiply(&sol.eta)?;

    let delta_norm = delta.weighted_norm(rho);
    if !delta_norm.is_finite() {
        return Err(SolveError::NonFinite(state.iteration));
    }
    if delta_norm >= b.iota {
        return Err(SolveError::StepTooLarge { norm: delta_norm, iota: b.iota });
    }
    let loss = e.loss().at(rho) + delta.loss().at(rho);
    let mut h = (&state.h + &delta).drop_mean();
    h.clear_loss();
    let new_e = residual_long_at(&h, model, rho_next)?;
    let next = SolverState {
        h,
        lambda: 0.0,
        rho_n: rho_next,
        eps_n: new_e.weighted_norm(rho_next),
        iteration: state.iteration + 1,
    };
    let mut delta = delta;
    delta.clear_loss();
    let diag = LongStepDiagnostics {
        eps_before: e.weighted_norm(rho),
        delta_norm,
        mean_le: mean,
        w_bar: sol.w_bar,
        fixed_point_iterations: sol.iterations,
        contraction_ratio: sol.contraction_ratio,
        contraction_product: lin.contraction_product(),
        mean_product: lin.mean_product(),
        n_plus: lin.n_plus,
        n_minus: lin.n_minus,
        twist: lin.twist,
        min_divisor: w.min_divisor.min(sol.min_divisor),
        clamped: w.clamped + sol.clamped,
        loss,
        delta,
        residual: new_e,
    };
    Ok((next, diag))
}

/// Long-range quasi-Newton iteration; `lambda` stays zero throughout.
pub fn solve_long(model: &LongRangeModel, initial: &SolverState, opts: &LongOptions) -> Result<(SolverState, VerificationReport), SolveError> {
    let rho0 = initial.rho_n;
    let limit = opts.base.rho_limit.unwrap_or(0.75 * rho0);
    let mut state = initial.clone();
    state.h = state.h.drop_mean();
    state.lambda = 0.0;
    state.iteration = 0;
    let mut e = residual_long_at(&state.h, model, rho0)?;
    state.eps_n = e.weighted_norm(rho0);
    let eps0 = state.eps_n;

    let mut report = VerificationReport::new("long-range quasi-Newton solve");
    let mut monitor = Monitor::new(&opts.base);
    let mut delta_norm = 0.0;
    let mut total_loss = e.loss().at(rho0);
    let mut max_ratio: f64 = 0.0;
    let mut fp_iters = 0;
    let status = loop {
        let m = state.iteration;
        report.iterations.push(IterationRow {
            iteration: m,
            rho: state.rho_n,
            eps: state.eps_n,
            delta_norm,
            lambda: 0.0,
        });
        match monitor.observe(m, state.eps_n)? {
            Verdict::Stop(s) => break s,
            Verdict::Continue => {}
        }
        let rho_next = radius_schedule(rho0, limit, m + 1);
        let (next, diag) = step_from_residual(&state, &e, model, rho_next, opts)?;
        if !(diag.n_minus <= opts.base.condition_cap) {
            return Err(SolveError::ConditionBlowup {
                name: "N-",
                value: diag.n_minus,
                cap: opts.base.condition_cap,
            });
        }
        delta_norm = diag.delta_norm;
        total_loss += diag.loss;
        max_ratio = max_ratio.max(diag.contraction_ratio);
        fp_iters = fp_iters.max(diag.fixed_point_iterations);
        e = diag.residual;
        state = next;
    };
    let mut fin = verify_long(&state, model, opts);
    fin.title = report.title.clone();
    fin.status = status;
    fin.iterations = report.iterations;
    fin.truncation_loss = total_loss;
    fin.push_value("eps0", eps0);
    fin.push_value("h_change", (&state.h - &initial.h).weighted_norm(state.rho_n));
    fin.push_value("fixed_point_ratio", max_ratio);
    fin.push_value("fixed_point_iterations", fp_iters as f64);
    Ok((state, fin))
}

/// Long-range hypothesis proxies evaluated at `state`.
///
/// Never fails: evaluation errors mark the report halted with a failing check.
pub fn verify_long(state: &SolverState, model: &LongRangeModel, opts: &LongOptions) -> VerificationReport {
    let mut report = VerificationReport::new("long-range verification");
    report.status = Status::Checked;
    if let Err(err) = fill_verify(&mut report, state, model, opts) {
        report.status = Status::Halted;
        report.push_value("evaluation_failed", 1.0);
        report.push_check(Check::new("evaluation", 1.0, Relation::Le, 0.0));
        report.title = format!("{} ({err})", report.title);
    }
    report
}

fn fill_verify(report: &mut VerificationReport, state: &SolverState, model: &LongRangeModel, opts: &LongOptions) -> Result<(), SolveError> {
    let rho = state.rho_n;
    let b = model.basis().with_rho(rho);
    let set = model.set();
    let decay = model.decay_report();
    for (l, m) in decay.iter().enumerate() {
        report.push_value(format!("M_{l}"), *m);
    }
    let hn = state.h.weighted_norm(rho);
    report.push_value("h_norm", hn);
    report.push_check(Check::new("composition_margin", hn, Relation::Lt, b.iota));
    if set.len() > 1 {
        report.empirical_nu = diophantine::empirical_nu(b.omega, &b.alpha, set, opts.base.tau, DiophantineStyle::Product).unwrap_or(0.0);
        report.min_divisor = diophantine::min_divisor(b.omega, &b.alpha, set).map_or(f64::NAN, |(d, _)| d);
        report.push_check(Check::new("empirical_nu", report.empirical_nu, Relation::Gt, 0.0));
    }
    let e = residual_long_at(&state.h, model, rho)?;
    report.residual = e.weighted_norm(rho);
    report.residual_rho = rho;
    report.push_check(Check::new("residual", report.residual, Relation::Le, opts.base.tol));

    let lin = Linearization::new(&state.h, model, rho, opts.base.reciprocal_tol)?;
    report.n_plus = lin.n_plus;
    report.n_minus = lin.n_minus;
    report.twist = lin.twist;
    let mean = lin.l.multiply(&e)?.average().norm();
    let scale = 1.0 + lin.n_plus * report.residual;
    report.push_value("mean_l_e", mean);
    report.push_check(Check::new("mean_identity", mean / scale, Relation::Le, 1e-12));
    report.push_value("beta", lin.beta);
    report.push_value("T", lin.t_bound);
    report.push_value("U", lin.u_bound);
    let p1 = lin.contraction_product();
    let p2 = lin.mean_product();
    report.push_value("h5_contraction_product", p1);
    report.push_value("h5_mean_product", p2);
    report.push_value("h5_ok", (p1 < 0.5 && p2 < 0.5) as u8 as f64);
    report.push_check(Check::new("h5_contraction", p1, Relation::Lt, 0.5));
    report.push_check(Check::new("h5_mean", p2, Relation::Lt, 0.5));
    report.push_check(Check::new("n_minus", lin.n_minus, Relation::Le, opts.base.condition_cap));
    Ok(())
}
