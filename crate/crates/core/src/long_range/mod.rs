//! Chains with interactions of every range `L <= L_max`: residual, the
//! operators `C_{j,k,L}` and `G`, the linear solve and the quasi-Newton iteration.

mod interaction;
mod model;
mod solver;

pub use interaction::{eval_interaction, Evaluator, FourierTerm, GapTerm, InteractionTerm};
pub use model::LongRangeModel;
pub use solver::{
    apply_g, c_series, identity_check_y8, newton_step_long, residual_long, residual_long_at, solve_linearized, solve_long, verify_long,
    LinearSolve, Linearization, LongOptions, LongStepDiagnostics,
};

/// `D E[h] f = sum_{L,k,j} d^{(j)} d^{(k)} H_L(gamma^{(-k)}) (f o T_{(j-k) omega alpha})`.
pub fn apply_derivative(
    h: &crate::fourier::FourierSeries,
    f: &crate::fourier::FourierSeries,
    model: &LongRangeModel,
) -> Result<crate::fourier::FourierSeries, crate::error::SeriesError> {
    let b = model.basis();
    let mut ev = Evaluator::new(h, b)?;
    let mut out = crate::fourier::FourierSeries::zeros(h.set());
    for range in 0..=model.l_max() {
        for k in 0..=range {
            for j in 0..=range {
                let t = model.second(range, k, j);
                if !t.is_empty() {
                    out += &ev.eval(t, k)?.multiply(&f.shift_orbit(b, j as f64 - k as f64))?;
                }
            }
        }
    }
    Ok(out)
}
