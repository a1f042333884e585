//! The Boost driver: ℓ¹-steepest coordinate descent on `λ ↦ f(Aλ)`.
//!
//! Each iteration picks the column with the largest absolute gradient
//! entry, steps along `±e_j` so the directional derivative equals
//! `-‖Aᵀ∇f(Aλ)‖_∞`, and chooses the step with a line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{fmt_f64, BoostInstance};
use crate::linesearch::{closed_form_step, exact_search, wolfe_search, WolfeParams};
use crate::losses::{risk_value, LossSpec};
use crate::matrix::inf_norm;

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub lambda: Vec<f64>,
    /// `Aλ`.
    pub margins: Vec<f64>,
    /// `f(Aλ)`.
    pub objective: f64,
    /// `∇f(Aλ)`, strictly positive.
    pub dual_weights: Vec<f64>,
    /// `Aᵀ∇f(Aλ)`.
    pub grad: Vec<f64>,
    pub t: usize,
}

impl IterateState {
    /// State at `λ = 0`.
    pub fn initial(inst: &BoostInstance, loss: &LossSpec) -> Result<Self> {
        Self::at(inst, loss, vec![0.0; inst.n()], 0)
    }

    /// Recomputes every derived quantity from `lambda`.
    pub fn at(inst: &BoostInstance, loss: &LossSpec, lambda: Vec<f64>, t: usize) -> Result<Self> {
        check_loss(inst, loss)?;
        let margins = inst.margins(&lambda)?;
        let objective = risk_value(loss.kind, &margins);
        let dual_weights: Vec<f64> = margins.iter().map(|&x| loss.kind.grad(x)).collect();
        let grad = inst.matrix().tr_mul_vec(&dual_weights)?;
        Ok(IterateState {
            lambda,
            margins,
            objective,
            dual_weights,
            grad,
            t,
        })
    }

    pub fn grad_inf_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn check_loss(inst: &BoostInstance, loss: &LossSpec) -> Result<()> {
    if loss.sample_size_m != inst.m() {
        return Err(Error::Dimension {
            expected: inst.m(),
            got: loss.sample_size_m,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Best,
    /// Accepts any coordinate achieving a `c0` fraction of the best slope.
    Approx(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LineSearch {
    Wolfe(WolfeParams),
    ClosedForm,
    Exact(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub selector: Selector,
    pub line_search: LineSearch,
    /// Stop once the objective drops to this value.
    pub target: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grad_tol: 1e-10,
            max_iters: 1000,
            selector: Selector::Best,
            line_search: LineSearch::Wolfe(WolfeParams::default()),
            target: None,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if let Selector::Approx(c0) = self.selector {
            if !(c0 > 0.0 && c0 <= 1.0) {
                return Err(Error::Domain(format!("c0 must lie in (0, 1], got {c0}")));
            }
        }
        Ok(())
    }
}

/// A coordinate and the sign of the step along it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub j: usize,
    pub sign: i8,
}

/// Something that picks a descent coordinate from the full gradient,
/// standing in for a weak learning oracle.
pub trait SelectionRule {
    fn select(&self, grad: &[f64]) -> Result<Choice>;
}

impl SelectionRule for Selector {
    fn select(&self, grad: &[f64]) -> Result<Choice> {
        select_coordinate(grad, *self)
    }
}

/// Largest `|grad_j|` (lowest index on ties), signed so the step descends.
pub fn select_coordinate(grad: &[f64], _selector: Selector) -> Result<Choice> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Domain("gradient has non-finite entries".into()));
    }
    let mut best = 0;
    for (j, g) in grad.iter().enumerate() {
        if g.abs() > grad[best].abs() {
            best = j;
        }
    }
    let g = grad.get(best).copied().unwrap_or(0.0);
    if g == 0.0 {
        return Err(Error::Stationary);
    }
    Ok(Choice {
        j: best,
        sign: if g < 0.0 { 1 } else { -1 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `f(Aλ_t)` after the step.
    pub objective: f64,
    /// `‖Aᵀ∇f(Aλ_{t-1})‖_∞`, the norm that drove this step.
    pub grad_inf: f64,
    pub j: usize,
    pub sign: i8,
    pub alpha: f64,
    /// `f(Aλ_{t-1}) - f(Aλ_t)` evaluated without cancellation.
    pub decrease: f64,
    pub evals: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    GradientBelowTol,
    MaxIters,
    TargetReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial_objective: f64,
    pub records: Vec<TraceRecord>,
    pub status: Status,
    pub final_state: IterateState,
}

impl Trace {
    /// Objective after `t` steps; `t = 0` is the starting point.
    pub fn objective_at(&self, t: usize) -> f64 {
        if t == 0 {
            self.initial_objective
        } else {
            self.records[t - 1].objective
        }
    }

    /// Trace as CSV with header `t,objective,grad_inf,j,sign,alpha`.
    /// Wall times are left out so equal runs give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "objective", "grad_inf", "j", "sign", "alpha"])
            .expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.grad_inf),
                r.j.to_string(),
                r.sign.to_string(),
                fmt_f64(r.alpha),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Rebuilds `λ` for an `n`-column instance by replaying the `(j, sign, alpha)`
/// columns of a trace CSV.
pub fn lambda_from_trace_csv(text: &str, n: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("trace is missing column {name:?}")))
    };
    let (cj, cs, ca) = (col("j")?, col("sign")?, col("alpha")?);
    let mut lambda = vec![0.0; n];
    for rec in rdr.records() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let j: usize = field(cj)
            .parse()
            .map_err(|e| Error::Parse(format!("bad j: {e}")))?;
        let sign: f64 = field(cs)
            .parse()
            .map_err(|e| Error::Parse(format!("bad sign: {e}")))?;
        let alpha: f64 = field(ca)
            .parse()
            .map_err(|e| Error::Parse(format!("bad alpha: {e}")))?;
        if j >= n {
            return Err(Error::Dimension {
                expected: n,
                got: j + 1,
            });
        }
        lambda[j] += sign * alpha;
    }
    Ok(lambda)
}

/// One iteration with the built-in selector.
pub fn boost_step(
    inst: &BoostInstance,
    loss: &LossSpec,
    state: &IterateState,
    cfg: &RunConfig,
) -> Result<(IterateState, TraceRecord)> {
    boost_step_with(inst, loss, state, cfg, &cfg.selector)
}

/// One iteration with an arbitrary selection rule. When `cfg.selector` is
/// `Approx(c0)` the rule's choice must reach a `c0` fraction of the best slope.
pub fn boost_step_with(
    inst: &BoostInstance,
    loss: &LossSpec,
    state: &IterateState,
    cfg: &RunConfig,
    rule: &dyn SelectionRule,
) -> Result<(IterateState, TraceRecord)> {
    cfg.validate()?;
    check_loss(inst, loss)?;
    let started = clock();
    let grad_inf = state.grad_inf_norm();
    if !(grad_inf > cfg.grad_tol) {
        return Err(Error::Precondition(format!(
            "gradient norm {grad_inf} is within tolerance {}",
            cfg.grad_tol
        )));
    }
    let choice = rule.select(&state.grad)?;
    if choice.j >= inst.n() || choice.sign.abs() != 1 {
        return Err(Error::Precondition(format!("invalid choice {choice:?}")));
    }
    let sign = f64::from(choice.sign);
    // slope magnitude along the chosen ray, ‖∇‖_∞ for the exact selector
    let slope = -sign * state.grad[choice.j];
    if let Selector::Approx(c0) = cfg.selector {
        if slope < c0 * grad_inf {
            return Err(Error::Precondition(format!(
                "selected coordinate {} has slope {slope}, below c0 * {grad_inf}",
                choice.j
            )));
        }
    }
    if !(slope > 0.0) {
        return Err(Error::Precondition(
            "selected direction is not a descent direction".into(),
        ));
    }

    let dir: Vec<f64> = inst
        .matrix()
        .column(choice.j)
        .iter()
        .map(|a| sign * a)
        .collect();
    let kind = loss.kind;
    let margins = &state.margins;
    let line = |alpha: f64| {
        let mut dv = 0.0;
        let mut dd = 0.0;
        for (x, d) in margins.iter().zip(&dir) {
            if *d != 0.0 {
                dv += kind.delta(*x, alpha * d);
                dd += kind.grad(x + alpha * d) * d;
            }
        }
        (dv, dd)
    };

    let (alpha, evals) = match cfg.line_search {
        LineSearch::Wolfe(p) => {
            let r = wolfe_search(line, &p)?;
            (r.alpha, r.evals)
        }
        LineSearch::ClosedForm => (closed_form_step(slope, state.objective, loss.eta)?, 0),
        LineSearch::Exact(tol) => {
            let r = exact_search(line, tol)?;
            (r.alpha, r.evals)
        }
    };
    let decrease = -line(alpha).0;

    let mut lambda = state.lambda.clone();
    lambda[choice.j] += sign * alpha;
    let next = IterateState::at(inst, loss, lambda, state.t + 1)?;
    let record = TraceRecord {
        t: next.t,
        objective: next.objective,
        grad_inf,
        j: choice.j,
        sign: choice.sign,
        alpha,
        decrease,
        evals,
        wall_time: elapsed(started),
    };
    Ok((next, record))
}

/// Runs Boost from `λ = 0` until the gradient norm falls to `grad_tol`, the
/// target objective is reached, or `max_iters` steps have been taken.
pub fn run(inst: &BoostInstance, loss: &LossSpec, cfg: &RunConfig) -> Result<Trace> {
    run_with(inst, loss, cfg, &cfg.selector)
}

pub fn run_with(
    inst: &BoostInstance,
    loss: &LossSpec,
    cfg: &RunConfig,
    rule: &dyn SelectionRule,
) -> Result<Trace> {
    cfg.validate()?;
    let mut state = IterateState::initial(inst, loss)?;
    let initial_objective = state.objective;
    let mut records = Vec::new();
    let stop = |s: &IterateState| {
        if cfg.target.is_some_and(|target| s.objective <= target) {
            Some(Status::TargetReached)
        } else if s.grad_inf_norm() <= cfg.grad_tol {
            Some(Status::GradientBelowTol)
        } else {
            None
        }
    };
    let status = loop {
        if let Some(s) = stop(&state) {
            break s;
        }
        if records.len() == cfg.max_iters {
            break Status::MaxIters;
        }
        let (next, rec) = boost_step_with(inst, loss, &state, cfg, rule)?;
        records.push(rec);
        state = next;
    };
    Ok(Trace {
        initial_objective,
        records,
        status,
        final_state: state,
    })
}

#[cfg(not(target_arch = "wasm32"))]
fn clock() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(target_arch = "wasm32")]
fn clock() -> Option<()> {
    None
}

#[cfg(not(target_arch = "wasm32"))]
fn elapsed(start: Option<std::time::Instant>) -> f64 {
    start.map_or(0.0, |s| s.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn elapsed(_: Option<()>) -> f64 {
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linesearch::EXACT_TOL;
    use crate::losses::LossKind;
    use std::f64::consts::LN_2;

    fn inst(rows: &[&[f64]]) -> BoostInstance {
        BoostInstance::from_rows(rows).unwrap()
    }

    fn s() -> BoostInstance {
        inst(&[&[-1.0, 1.0], &[1.0, -1.0], &[-1.0, -1.0]])
    }

    #[test]
    fn select_examples() {
        assert_eq!(
            select_coordinate(&[-3.0, 2.0], Selector::Best).unwrap(),
            Choice { j: 0, sign: 1 }
        );
        assert_eq!(
            select_coordinate(&[2.0, 2.0], Selector::Best).unwrap(),
            Choice { j: 0, sign: -1 }
        );
        assert!(matches!(
            select_coordinate(&[0.0, 0.0], Selector::Best),
            Err(Error::Stationary)
        ));
        assert!(matches!(
            select_coordinate(&[f64::NAN, 1.0], Selector::Best),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn step_on_duplicated_correct_example() {
        let a = inst(&[&[-1.0], &[-1.0]]);
        let loss = LossSpec::new(LossKind::Exponential, 2).unwrap();
        let s0 = IterateState::initial(&a, &loss).unwrap();
        assert_eq!(s0.grad, vec![-2.0]);
        let (s1, rec) = boost_step(&a, &loss, &s0, &RunConfig::default()).unwrap();
        assert_eq!((rec.j, rec.sign), (0, 1));
        assert!(s1.objective < 2.0);
        assert!(s1.lambda[0] > 0.0);
    }

    #[test]
    fn exact_first_step_on_s() {
        let loss = LossSpec::new(LossKind::Logistic, 3).unwrap();
        let s0 = IterateState::initial(&s(), &loss).unwrap();
        let cfg = RunConfig {
            line_search: LineSearch::Exact(EXACT_TOL),
            ..Default::default()
        };
        let (s1, _) = boost_step(&s(), &loss, &s0, &cfg).unwrap();
        assert!((s1.lambda[0] - LN_2).abs() < 1e-10);
        assert_eq!(s1.lambda[1], 0.0);
    }

    #[test]
    fn stationary_state_is_rejected() {
        let a = inst(&[&[-1.0], &[1.0]]);
        let loss = LossSpec::new(LossKind::Logistic, 2).unwrap();
        let s0 = IterateState::initial(&a, &loss).unwrap();
        assert!(matches!(
            boost_step(&a, &loss, &s0, &RunConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn run_on_single_wrong_learner() {
        let a = inst(&[&[1.0]]);
        let loss = LossSpec::new(LossKind::Exponential, 1).unwrap();
        let cfg = RunConfig::default();
        let tr = run(&a, &loss, &cfg).unwrap();
        assert_eq!(tr.status, Status::GradientBelowTol);
        assert!(tr.final_state.lambda[0] < 0.0);
        assert!(tr.records.iter().all(|r| r.sign == -1));
        assert!(tr.final_state.objective < cfg.grad_tol * loss.beta);
        // 1-D closed form: objective equals e^{-|λ|}
        let f = (-tr.final_state.lambda[0].abs()).exp();
        assert!((tr.final_state.objective - f).abs() <= 1e-15);
    }

    #[test]
    fn run_on_contradictory_pair_stays_at_zero() {
        let a = inst(&[&[-1.0], &[1.0]]);
        let loss = LossSpec::new(LossKind::Logistic, 2).unwrap();
        let tr = run(&a, &loss, &RunConfig::default()).unwrap();
        assert_eq!(tr.status, Status::GradientBelowTol);
        // scalar oracle: ln(1+e^{-λ}) + ln(1+e^{λ}) is minimized at λ = 0
        assert!((tr.final_state.objective - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn run_reaches_target_and_iteration_cap() {
        let a = inst(&[&[-1.0, 0.5], &[-0.5, -1.0]]);
        let loss = LossSpec::new(LossKind::Exponential, 2).unwrap();
        let tr = run(
            &a,
            &loss,
            &RunConfig {
                target: Some(1e-3),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(tr.status, Status::TargetReached);
        assert!(tr.final_state.objective <= 1e-3);
        let tr = run(
            &a,
            &loss,
            &RunConfig {
                max_iters: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(tr.status, Status::MaxIters);
        assert_eq!(tr.records.len(), 3);
    }

    #[test]
    fn state_invariants_hold_along_a_run() {
        let loss = LossSpec::new(LossKind::Logistic, 3).unwrap();
        let cfg = RunConfig {
            max_iters: 50,
            ..Default::default()
        };
        let mut state = IterateState::initial(&s(), &loss).unwrap();
        for _ in 0..50 {
            let (next, rec) = boost_step(&s(), &loss, &state, &cfg).unwrap();
            assert!(next.objective < state.objective);
            assert!(rec.decrease > 0.0);
            let direct = s().margins(&next.lambda).unwrap();
            for (x, y) in next.margins.iter().zip(&direct) {
                assert!((x - y).abs() <= 1e-10);
            }
            let g = s().matrix().tr_mul_vec(&next.dual_weights).unwrap();
            for (x, y) in next.grad.iter().zip(&g) {
                assert!((x - y).abs() <= 1e-10);
            }
            assert!(next.dual_weights.iter().all(|&w| w > 0.0));
            state = next;
        }
    }

    struct Worst {
        c0: f64,
    }

    // Picks the weakest coordinate still meeting the c0 requirement.
    impl SelectionRule for Worst {
        fn select(&self, grad: &[f64]) -> Result<Choice> {
            let top = inf_norm(grad);
            let (j, g) = grad
                .iter()
                .enumerate()
                .filter(|(_, g)| g.abs() >= self.c0 * top)
                .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .ok_or(Error::Stationary)?;
            Ok(Choice {
                j,
                sign: if *g < 0.0 { 1 } else { -1 },
            })
        }
    }

    #[test]
    fn approximate_selection_keeps_c0_squared_guarantee() {
        let a = inst(&[
            &[-1.0, 0.2, -0.6],
            &[0.3, -1.0, -0.4],
            &[-0.5, -0.7, 1.0],
            &[0.9, -0.2, -0.8],
        ]);
        for kind in [LossKind::Exponential, LossKind::Logistic] {
            let loss = LossSpec::new(kind, 4).unwrap();
            let c0 = 0.4;
            let cfg = RunConfig {
                selector: Selector::Approx(c0),
                max_iters: 200,
                ..Default::default()
            };
            let tr = run_with(&a, &loss, &cfg, &Worst { c0 }).unwrap();
            for r in &tr.records {
                let f_prev = tr.objective_at(r.t - 1);
                let bound = c0 * c0 * r.grad_inf * r.grad_inf / (6.0 * loss.eta * f_prev);
                assert!(r.decrease >= bound, "t={} {} < {}", r.t, r.decrease, bound);
            }
        }
    }

    #[test]
    fn approximate_selection_rejects_weak_choice() {
        struct Always0;
        impl SelectionRule for Always0 {
            fn select(&self, grad: &[f64]) -> Result<Choice> {
                Ok(Choice {
                    j: 0,
                    sign: if grad[0] < 0.0 { 1 } else { -1 },
                })
            }
        }
        let a = inst(&[&[-0.1, -1.0]]);
        let loss = LossSpec::new(LossKind::Exponential, 1).unwrap();
        let s0 = IterateState::initial(&a, &loss).unwrap();
        let cfg = RunConfig {
            selector: Selector::Approx(0.5),
            ..Default::default()
        };
        assert!(matches!(
            boost_step_with(&a, &loss, &s0, &cfg, &Always0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trace_csv_replays_lambda() {
        let loss = LossSpec::new(LossKind::Logistic, 3).unwrap();
        let cfg = RunConfig {
            max_iters: 20,
            ..Default::default()
        };
        let tr = run(&s(), &loss, &cfg).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,objective,grad_inf,j,sign,alpha\n"));
        assert_eq!(csv.lines().count(), 21);
        let lambda = lambda_from_trace_csv(&csv, 2).unwrap();
        for (x, y) in lambda.iter().zip(&tr.final_state.lambda) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert!(lambda_from_trace_csv("t,objective\n1,2\n", 2).is_err());
    }

    #[test]
    fn loss_dimension_checked() {
        let loss = LossSpec::new(LossKind::Logistic, 2).unwrap();
        assert!(matches!(
            IterateState::initial(&s(), &loss),
            Err(Error::Dimension { .. })
        ));
    }
}
