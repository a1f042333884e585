//! One-dimensional step selection along a descent ray.
//!
//! A line function is any `FnMut(α) -> (φ(α), φ'(α))`. Only differences
//! `φ(α) - φ(0)` matter, so callers may hand in a function with `φ(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub max_bracket_doublings: u32,
    pub max_bisections: u32,
}

impl Default for WolfeParams {
    fn default() -> Self {
        WolfeParams {
            c1: 1.0 / 3.0,
            c2: 0.5,
            max_bracket_doublings: 200,
            max_bisections: 200,
        }
    }
}

impl WolfeParams {
    /// Parameters with default budgets; requires `0 < c1 < c2 < 1`.
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
            return Err(Error::Domain(format!(
                "Wolfe parameters need 0 < c1 < c2 < 1, got c1={c1}, c2={c2}"
            )));
        }
        Ok(WolfeParams {
            c1,
            c2,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    Wolfe,
    ClosedForm,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub alpha: f64,
    /// Number of line-function evaluations.
    pub evals: usize,
    pub mode: StepMode,
}

fn descent_slope<F: FnMut(f64) -> (f64, f64)>(phi: &mut F) -> Result<(f64, f64)> {
    let (v0, d0) = phi(0.0);
    if !(d0 < 0.0) || !v0.is_finite() {
        return Err(Error::Precondition(format!(
            "not a descent direction: phi'(0) = {d0}"
        )));
    }
    Ok((v0, d0))
}

/// Bracketing then bisecting search for a step satisfying both Wolfe
/// conditions:
///
/// * `φ(α) ≤ φ(0) + α c1 φ'(0)`
/// * `φ'(α) ≥ c2 φ'(0)`
///
/// The step is doubled from 1 while the first condition still holds, then
/// the bracket `[0, α_max]` is bisected. No interpolation is used.
pub fn wolfe_search<F>(mut phi: F, params: &WolfeParams) -> Result<StepResult>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (v0, d0) = descent_slope(&mut phi)?;
    let mut evals = 1;
    let armijo = |a: f64, v: f64| v <= v0 + a * params.c1 * d0;
    let curvature = |d: f64| d >= params.c2 * d0;

    let mut alpha_max = 1.0;
    let mut doublings = 0;
    loop {
        let (v, _) = phi(alpha_max);
        evals += 1;
        if !armijo(alpha_max, v) {
            break;
        }
        if doublings == params.max_bracket_doublings {
            return Err(Error::Convergence {
                lo: alpha_max,
                hi: f64::INFINITY,
            });
        }
        alpha_max *= 2.0;
        doublings += 1;
    }

    let mut alpha_min = 0.0;
    let mut alpha = alpha_max / 2.0;
    for _ in 0..=params.max_bisections {
        let (v, d) = phi(alpha);
        evals += 1;
        let sufficient = armijo(alpha, v);
        if sufficient && curvature(d) {
            return Ok(StepResult {
                alpha,
                evals,
                mode: StepMode::Wolfe,
            });
        }
        if sufficient {
            alpha_min = alpha;
        } else {
            alpha_max = alpha;
        }
        alpha = 0.5 * (alpha_min + alpha_max);
    }
    Err(Error::Convergence {
        lo: alpha_min,
        hi: alpha_max,
    })
}

/// Minimizer `‖∇‖_∞ / (η f)` of the quadratic upper model along the ray.
pub fn closed_form_step(grad_inf_norm: f64, objective: f64, eta: f64) -> Result<f64> {
    if !(objective > 0.0) || !objective.is_finite() {
        return Err(Error::Domain(format!(
            "closed-form step needs a positive objective, got {objective}"
        )));
    }
    if !(grad_inf_norm >= 0.0) || !(eta > 0.0) {
        return Err(Error::Domain(format!(
            "closed-form step needs grad_inf_norm >= 0 and eta > 0, got {grad_inf_norm}, {eta}"
        )));
    }
    Ok(grad_inf_norm / (eta * objective))
}

pub const EXACT_TOL: f64 = 1e-12;
const EXACT_MAX_DOUBLINGS: u32 = 200;
const EXACT_MAX_BISECTIONS: u32 = 2000;

/// Bisection on `φ'` for a point with `|φ'(α)| ≤ tol`.
///
/// `φ` must be strictly convex along the ray. The bracket is grown until
/// `φ'` turns strictly positive; if it never does, the ray has no minimizer
/// and [`Error::Unattained`] is returned.
pub fn exact_search<F>(mut phi: F, tol: f64) -> Result<StepResult>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    descent_slope(&mut phi)?;
    let mut evals = 1;

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    loop {
        let (_, d) = phi(hi);
        evals += 1;
        if d > 0.0 {
            break;
        }
        if doublings == EXACT_MAX_DOUBLINGS {
            return Err(Error::Unattained);
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }

    for _ in 0..EXACT_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (_, d) = phi(mid);
        evals += 1;
        if d.abs() <= tol {
            return Ok(StepResult {
                alpha: mid,
                evals,
                mode: StepMode::Exact,
            });
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Root of 1 - a/3 = e^{-a} on (ln 2, 3) by plain bisection.
    fn armijo_edge_oracle() -> f64 {
        let h = |a: f64| 1.0 - a / 3.0 - (-a).exp();
        let (mut lo, mut hi) = (2.0_f64.ln(), 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn wolfe_on_exponential_ray() {
        let alpha1 = armijo_edge_oracle();
        assert!((alpha1 - 2.821_439_372_122_079).abs() < 1e-9);
        let r = wolfe_search(|a: f64| ((-a).exp(), -(-a).exp()), &WolfeParams::default()).unwrap();
        assert_eq!(r.mode, StepMode::Wolfe);
        assert!(r.alpha >= 2.0_f64.ln() && r.alpha <= alpha1, "{}", r.alpha);
        assert!((-r.alpha).exp() <= 1.0 - r.alpha / 3.0);
        assert!(-(-r.alpha).exp() >= -0.5);
    }

    #[test]
    fn wolfe_on_parabola() {
        let p = WolfeParams::new(1.0 / 3.0, 0.5).unwrap();
        let r = wolfe_search(|a: f64| ((a - 1.0).powi(2), 2.0 * (a - 1.0)), &p).unwrap();
        assert!(r.alpha >= 0.5 && r.alpha <= 4.0 / 3.0);
    }

    #[test]
    fn wolfe_rejects_ascent_direction() {
        let r = wolfe_search(|a: f64| (a, 1.0), &WolfeParams::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn wolfe_budget_exhaustion_reports_interval() {
        let r = wolfe_search(|a: f64| (-a, -1.0), &WolfeParams::default());
        assert!(matches!(r, Err(Error::Convergence { .. })));
        let tight = WolfeParams {
            max_bisections: 1,
            ..WolfeParams::new(0.01, 0.999_999).unwrap()
        };
        let r = wolfe_search(|a: f64| ((a - 0.01).powi(2), 2.0 * (a - 0.01)), &tight);
        match r {
            Err(Error::Convergence { lo, hi }) => assert!(lo < hi),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn wolfe_params_validated() {
        assert!(WolfeParams::new(0.5, 0.5).is_err());
        assert!(WolfeParams::new(0.0, 0.5).is_err());
        assert!(WolfeParams::new(0.2, 1.0).is_err());
        assert!(WolfeParams::new(0.2, 0.9).is_ok());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_step(1.0, 1.0, 1.0).unwrap(), 1.0);
        let eta = 8.0 / (3.0 * 2.0_f64.ln());
        let a = closed_form_step(0.5, 2.0 * 2.0_f64.ln(), eta).unwrap();
        assert!((a - 3.0 / 32.0).abs() < 1e-15);
        assert!(matches!(
            closed_form_step(1.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            closed_form_step(1.0, -2.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exact_examples() {
        let r = exact_search(|a: f64| ((a - 2.0).powi(2), 2.0 * (a - 2.0)), EXACT_TOL).unwrap();
        assert!((r.alpha - 2.0).abs() < 1e-12);
        assert_eq!(r.mode, StepMode::Exact);
        let r = exact_search(|a: f64| ((-a).exp(), -(-a).exp()), EXACT_TOL);
        assert!(matches!(r, Err(Error::Unattained)));
        assert!(matches!(
            exact_search(|a: f64| (a, 1.0), EXACT_TOL),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exact_first_step_on_antisymmetric_pair() {
        // ray along the first coordinate of [[-1, 1], [1, -1], [-1, -1]] from 0
        let phi = |a: f64| {
            let g = crate::losses::softplus;
            let s = crate::losses::sigmoid;
            (2.0 * g(-a) + g(a), -2.0 * s(-a) + s(a))
        };
        let r = exact_search(phi, EXACT_TOL).unwrap();
        assert!((r.alpha - 2.0_f64.ln()).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn accepted_steps_satisfy_both_conditions(
            a in 0.01f64..10.0, b in 0.01f64..5.0, c in 0.0f64..3.0,
            c1 in 0.01f64..0.45, gap in 0.05f64..0.5,
        ) {
            // φ(α) = a e^{-bα} + c α², strictly convex with φ'(0) = -ab < 0
            let phi = |x: f64| (a * (-b * x).exp() + c * x * x, -a * b * (-b * x).exp() + 2.0 * c * x);
            let p = WolfeParams::new(c1, c1 + gap).unwrap();
            let (v0, d0) = phi(0.0);
            let r = wolfe_search(phi, &p);
            prop_assert!(r.is_ok(), "{:?}", r);
            let r = r.unwrap();
            let (v, d) = phi(r.alpha);
            prop_assert!(r.alpha > 0.0);
            prop_assert!(v <= v0 + r.alpha * p.c1 * d0);
            prop_assert!(d >= p.c2 * d0);
        }
    }
}
