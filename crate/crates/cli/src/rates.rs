//! Convergence-rate experiments, one per regime.

use pdboost::boost::{run, LineSearch, RunConfig, Trace};
use pdboost::fit::{fit, RateFit, RateModel, FIRST_FIT_ITERATION};
use pdboost::fixtures::{self, Entries};
use pdboost::linesearch::EXACT_TOL;
use pdboost::losses::{LossKind, LossSpec};
use pdboost::structure::{analyze, gamma_classical, Regime};
use pdboost::{BoostInstance, Error};
use serde::Serialize;

/// Largest accepted residual of the geometric fit on the attainable fixture.
pub const GEOMETRIC_RESIDUAL_MAX: f64 = 0.2;
/// Largest accepted residual of the inverse fit on `S`.
pub const INVERSE_RESIDUAL_MAX: f64 = 0.3;
/// Last iteration of the inverse fit window on `S`.
pub const INVERSE_FIT_LAST: usize = 50;
/// Slack on the per-iteration contraction bound.
pub const CONTRACTION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub fixture: String,
    pub regime: Regime,
    pub loss: LossKind,
    pub line_search: String,
    pub iterations: usize,
    pub final_objective: f64,
    pub optimum: f64,
    pub fit: Option<RateFit>,
    pub checks: Vec<Check>,
}

impl Experiment {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesReport {
    pub experiments: Vec<Experiment>,
}

impl RatesReport {
    pub fn passed(&self) -> bool {
        self.experiments.iter().all(Experiment::passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RatesConfig {
    pub iters: usize,
    /// Number of seeded random weak-learnable instances added to the fixtures.
    pub random: usize,
    pub seed: u64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            iters: 200,
            random: 10,
            seed: 0,
        }
    }
}

fn expect_regime(name: &str, inst: &BoostInstance, want: Regime) -> pdboost::Result<()> {
    let got = analyze(inst)?.regime;
    if got != want {
        return Err(Error::Invariant(format!(
            "fixture {name} classified as {got:?}, expected {want:?}"
        )));
    }
    Ok(())
}

fn suboptimality(trace: &Trace, optimum: f64, first: usize, last: usize) -> Vec<(usize, f64)> {
    (first..=last.min(trace.records.len()))
        .map(|t| (t, trace.objective_at(t) - optimum))
        .collect()
}

/// Per-step contraction `f_{t+1} ≤ f_t (1 - γ²/(6β²η))` on a weak-learnable
/// instance, with `γ` from the classical LP.
pub fn weak_learnable(
    name: &str,
    inst: &BoostInstance,
    loss: LossKind,
    iters: usize,
) -> pdboost::Result<Experiment> {
    expect_regime(name, inst, Regime::WeakLearnable)?;
    let spec = LossSpec::new(loss, inst.m())?;
    let gamma = gamma_classical(inst)?;
    let factor = 1.0 - gamma * gamma / (6.0 * spec.beta * spec.beta * spec.eta);
    let cfg = RunConfig {
        max_iters: iters,
        ..Default::default()
    };
    let trace = run(inst, &spec, &cfg)?;
    let mut worst = f64::NEG_INFINITY;
    let mut first_bad = None;
    for t in 0..trace.records.len() {
        let excess = trace.objective_at(t + 1) - trace.objective_at(t) * factor;
        worst = worst.max(excess);
        if excess > CONTRACTION_SLACK && first_bad.is_none() {
            first_bad = Some(t + 1);
        }
    }
    let pts: Vec<_> = suboptimality(&trace, 0.0, FIRST_FIT_ITERATION, trace.records.len())
        .into_iter()
        .filter(|p| p.1 > 0.0)
        .collect();
    Ok(Experiment {
        fixture: name.to_string(),
        regime: Regime::WeakLearnable,
        loss,
        line_search: "wolfe".into(),
        iterations: trace.records.len(),
        final_objective: trace.final_state.objective,
        optimum: 0.0,
        fit: fit(RateModel::Geometric, &pts).ok(),
        checks: vec![Check {
            name: "per-iteration contraction".into(),
            passed: first_bad.is_none(),
            detail: match first_bad {
                None => format!("gamma {gamma:.6e}, factor {factor:.12}, worst excess {worst:.3e}"),
                Some(t) => format!("bound violated at t = {t}; worst excess {worst:.3e}"),
            },
        }],
    })
}

/// Geometric fit of the suboptimality of a Wolfe run on an attainable
/// instance with known optimum.
pub fn attainable(
    name: &str,
    inst: &BoostInstance,
    loss: LossKind,
    optimum: f64,
    iters: usize,
) -> pdboost::Result<Experiment> {
    expect_regime(name, inst, Regime::Attainable)?;
    let spec = LossSpec::new(loss, inst.m())?;
    let cfg = RunConfig {
        max_iters: iters,
        ..Default::default()
    };
    let trace = run(inst, &spec, &cfg)?;
    let pts = suboptimality(&trace, optimum, FIRST_FIT_ITERATION, iters);
    let fitted = fit(RateModel::Geometric, &pts);
    let check = match &fitted {
        Ok(f) => Check {
            name: "geometric fit".into(),
            passed: f.residual <= GEOMETRIC_RESIDUAL_MAX,
            detail: format!(
                "ratio {:.6}, residual {:.4} (max {GEOMETRIC_RESIDUAL_MAX})",
                f.ratio, f.residual
            ),
        },
        Err(e) => Check {
            name: "geometric fit".into(),
            passed: false,
            detail: e.to_string(),
        },
    };
    Ok(Experiment {
        fixture: name.to_string(),
        regime: Regime::Attainable,
        loss,
        line_search: "wolfe".into(),
        iterations: trace.records.len(),
        final_objective: trace.final_state.objective,
        optimum,
        fit: fitted.ok(),
        checks: vec![check],
    })
}

/// Logistic loss on `S` with exact line search: the `1/(8t)` lower bound at
/// every step and an inverse fit over the early window.
pub fn lower_bound(iters: usize) -> pdboost::Result<Experiment> {
    let inst = fixtures::s();
    expect_regime("s", &inst, Regime::Mixed)?;
    let optimum = 2.0 * std::f64::consts::LN_2;
    let spec = LossSpec::new(LossKind::Logistic, inst.m())?;
    let cfg = RunConfig {
        max_iters: iters,
        line_search: LineSearch::Exact(EXACT_TOL),
        ..Default::default()
    };
    let trace = run(&inst, &spec, &cfg)?;
    let violation = (1..=trace.records.len())
        .find(|&t| trace.objective_at(t) - optimum < 1.0 / (8.0 * t as f64));
    let pts = suboptimality(&trace, optimum, FIRST_FIT_ITERATION, INVERSE_FIT_LAST);
    let fitted = fit(RateModel::Inverse, &pts);
    let fit_check = match &fitted {
        Ok(f) => Check {
            name: "inverse fit".into(),
            passed: f.residual <= INVERSE_RESIDUAL_MAX,
            detail: format!(
                "C {:.6}, residual {:.4} (max {INVERSE_RESIDUAL_MAX})",
                f.fitted_constant, f.residual
            ),
        },
        Err(e) => Check {
            name: "inverse fit".into(),
            passed: false,
            detail: e.to_string(),
        },
    };
    Ok(Experiment {
        fixture: "s".into(),
        regime: Regime::Mixed,
        loss: LossKind::Logistic,
        line_search: "exact".into(),
        iterations: trace.records.len(),
        final_objective: trace.final_state.objective,
        optimum,
        fit: fitted.ok(),
        checks: vec![
            Check {
                name: "lower bound 1/(8t)".into(),
                passed: violation.is_none(),
                detail: match violation {
                    None => format!("holds for t = 1..{}", trace.records.len()),
                    Some(t) => format!("violated at t = {t}"),
                },
            },
            fit_check,
        ],
    })
}

/// All experiments: the weak-learnable fixtures plus `cfg.random` seeded
/// random ones under exponential loss, the skewed attainable fixture and `S`
/// under logistic loss.
pub fn rates(cfg: &RatesConfig) -> pdboost::Result<RatesReport> {
    let mut experiments = Vec::new();
    for name in ["a2", "single"] {
        let f = fixtures::by_name(name).expect("named fixture exists");
        experiments.push(weak_learnable(
            name,
            &f.instance,
            LossKind::Exponential,
            cfg.iters,
        )?);
    }
    for k in 0..cfg.random as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let inst = fixtures::random_in_regime(seed, Regime::WeakLearnable, 6, 6, Entries::Uniform)?;
        experiments.push(weak_learnable(
            &format!("random-{seed}"),
            &inst,
            LossKind::Exponential,
            cfg.iters,
        )?);
    }
    experiments.push(attainable(
        "skewed",
        &fixtures::skewed(),
        LossKind::Logistic,
        fixtures::SKEWED_LOGISTIC_OPTIMUM,
        cfg.iters,
    )?);
    experiments.push(lower_bound(cfg.iters)?);
    Ok(RatesReport { experiments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_report_passes() {
        let report = rates(&RatesConfig::default()).unwrap();
        for e in &report.experiments {
            for c in &e.checks {
                assert!(c.passed, "{} / {}: {}", e.fixture, c.name, c.detail);
            }
        }
    }

    #[test]
    fn mismatched_fixture_is_an_error() {
        let err = weak_learnable("s", &fixtures::s(), LossKind::Exponential, 10).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }
}
