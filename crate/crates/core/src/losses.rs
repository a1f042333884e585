//! The loss family: exponential and logistic losses, their derivatives,
//! Fenchel conjugates, and the separable empirical risk built on them.
//!
//! Every loss `g` here is positive, strictly increasing, strictly convex and
//! vanishes at `-∞`. The conjugate `g*` is returned over the extended reals:
//! points outside `dom(g*)` evaluate to `+∞`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Exponential,
    Logistic,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(LossKind::Exponential),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::Parse(format!(
                "unknown loss {other:?} (expected \"exp\" or \"logistic\")"
            ))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Exponential => "exp",
            LossKind::Logistic => "logistic",
        })
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-x})` without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// The raw scalar maps below do not validate their input; the checked
// entry points live on `LossSpec`.
impl LossKind {
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            LossKind::Exponential => x.exp(),
            LossKind::Logistic => softplus(x),
        }
    }

    #[inline]
    pub fn grad(self, x: f64) -> f64 {
        match self {
            LossKind::Exponential => x.exp(),
            LossKind::Logistic => sigmoid(x),
        }
    }

    #[inline]
    pub fn hess(self, x: f64) -> f64 {
        match self {
            LossKind::Exponential => x.exp(),
            LossKind::Logistic => sigmoid(x) * sigmoid(-x),
        }
    }

    /// `g(x + h) - g(x)`, computed without cancellation.
    #[inline]
    pub fn delta(self, x: f64, h: f64) -> f64 {
        match self {
            LossKind::Exponential => x.exp() * h.exp_m1(),
            LossKind::Logistic => {
                if h > 700.0 {
                    softplus(x + h) - softplus(x)
                } else {
                    (sigmoid(x) * h.exp_m1()).ln_1p()
                }
            }
        }
    }

    /// Fenchel conjugate `g*(φ)`; `+∞` outside the domain.
    pub fn conj(self, phi: f64) -> f64 {
        match self {
            LossKind::Exponential => {
                if phi > 0.0 && phi.is_finite() {
                    phi * phi.ln() - phi
                } else if phi == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            LossKind::Logistic => {
                if phi > 0.0 && phi < 1.0 {
                    phi * phi.ln() + (1.0 - phi) * (-phi).ln_1p()
                } else if phi == 0.0 || phi == 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether `phi` lies in the interior of `dom(g*)`.
    pub fn conj_interior(self, phi: f64) -> bool {
        match self {
            LossKind::Exponential => phi > 0.0 && phi.is_finite(),
            LossKind::Logistic => phi > 0.0 && phi < 1.0,
        }
    }

    /// Upper end of `dom(g*)` (its lower end is always zero).
    pub fn conj_domain_sup(self) -> f64 {
        match self {
            LossKind::Exponential => f64::INFINITY,
            LossKind::Logistic => 1.0,
        }
    }
}

/// The constants `η` (with `g'' ≤ η g`) and `β` (with `g ≤ β g'`) valid on the
/// initial level set of an `m`-example instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    pub eta: f64,
    pub beta: f64,
    /// Set when `2^m` overflowed and the constants were capped at `+∞`.
    pub saturated: bool,
}

pub fn loss_constants(kind: LossKind, m: usize) -> Result<LossConstants> {
    if m == 0 {
        return Err(Error::Domain("sample size m must be at least 1".into()));
    }
    Ok(match kind {
        LossKind::Exponential => LossConstants {
            eta: 1.0,
            beta: 1.0,
            saturated: false,
        },
        LossKind::Logistic => {
            let pow = if m > 1023 {
                f64::INFINITY
            } else {
                2f64.powi(m as i32)
            };
            LossConstants {
                eta: pow / (m as f64 * std::f64::consts::LN_2),
                beta: 1.0 + pow,
                saturated: pow.is_infinite(),
            }
        }
    })
}

/// A loss together with the constants it satisfies on an `m`-row instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub eta: f64,
    pub beta: f64,
    pub sample_size_m: usize,
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("non-finite argument {x}")))
    }
}

impl LossSpec {
    pub fn new(kind: LossKind, m: usize) -> Result<Self> {
        let c = loss_constants(kind, m)?;
        Ok(LossSpec {
            kind,
            eta: c.eta,
            beta: c.beta,
            sample_size_m: m,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        finite(x).map(|x| self.kind.value(x))
    }

    pub fn grad(&self, x: f64) -> Result<f64> {
        finite(x).map(|x| self.kind.grad(x))
    }

    pub fn hess(&self, x: f64) -> Result<f64> {
        finite(x).map(|x| self.kind.hess(x))
    }

    pub fn conj(&self, phi: f64) -> f64 {
        self.kind.conj(phi)
    }

    /// `∇g*(φ)`, defined only on the interior of `dom(g*)`.
    pub fn conj_grad(&self, phi: f64) -> Result<f64> {
        if !self.kind.conj_interior(phi) {
            return Err(Error::Domain(format!(
                "{phi} is not in the interior of dom(g*) for the {} loss",
                self.kind
            )));
        }
        Ok(match self.kind {
            LossKind::Exponential => phi.ln(),
            LossKind::Logistic => phi.ln() - (-phi).ln_1p(),
        })
    }
}

/// Separable empirical risk `f(x) = Σ g(x_i)` over `m` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskFunction {
    pub loss: LossSpec,
}

impl RiskFunction {
    pub fn new(kind: LossKind, m: usize) -> Result<Self> {
        Ok(RiskFunction {
            loss: LossSpec::new(kind, m)?,
        })
    }

    pub fn m(&self) -> usize {
        self.loss.sample_size_m
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, margins: &[f64]) -> Result<f64> {
        self.check_len(margins)?;
        if let Some(x) = margins.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite margin {x}")));
        }
        Ok(risk_value(self.loss.kind, margins))
    }

    pub fn grad(&self, margins: &[f64]) -> Result<Vec<f64>> {
        self.check_len(margins)?;
        margins.iter().map(|&x| self.loss.grad(x)).collect()
    }

    /// `f*(ψ) = Σ g*(ψ_i)`, `+∞` when any coordinate leaves `dom(g*)`.
    pub fn conj(&self, psi: &[f64]) -> Result<f64> {
        self.check_len(psi)?;
        Ok(psi.iter().map(|&p| self.loss.conj(p)).sum())
    }
}

/// Unchecked `Σ g(x_i)`. For the exponential loss, margins above 30 switch
/// to a max-shifted accumulator.
pub(crate) fn risk_value(kind: LossKind, margins: &[f64]) -> f64 {
    match kind {
        LossKind::Exponential => {
            let top = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top > 30.0 {
                let s: f64 = margins.iter().map(|x| (x - top).exp()).sum();
                top.exp() * s
            } else {
                margins.iter().map(|x| x.exp()).sum()
            }
        }
        LossKind::Logistic => margins.iter().map(|&x| softplus(x)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn exp_loss() -> LossSpec {
        LossSpec::new(LossKind::Exponential, 1).unwrap()
    }

    fn logistic(m: usize) -> LossSpec {
        LossSpec::new(LossKind::Logistic, m).unwrap()
    }

    // ln(1 + e^x) for large x through the alternating series of ln(1 + e^{-x}).
    fn softplus_series(x: f64) -> f64 {
        let q = (-x).exp();
        let mut tail = 0.0;
        let mut term = q;
        for k in 1..40 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            tail += sign * term / k as f64;
            term *= q;
        }
        x + tail
    }

    #[test]
    fn loss_eval_examples() {
        assert!((logistic(1).eval(0.0).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(exp_loss().eval(0.0).unwrap(), 1.0);
        let big = logistic(1).eval(1000.0).unwrap();
        assert!((big - softplus_series(1000.0)).abs() < 1e-9);
        assert!((logistic(1).eval(40.0).unwrap() - softplus_series(40.0)).abs() < 1e-12);
        assert!(logistic(1).eval(-1.0e4).unwrap() >= 0.0);
        assert!(logistic(1).eval(1.0e4).unwrap().is_finite());
    }

    #[test]
    fn non_finite_inputs_rejected() {
        for l in [exp_loss(), logistic(2)] {
            assert!(matches!(l.eval(f64::NAN), Err(Error::Domain(_))));
            assert!(matches!(l.grad(f64::INFINITY), Err(Error::Domain(_))));
            assert!(matches!(l.hess(f64::NEG_INFINITY), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn grad_and_hess_examples() {
        assert_eq!(logistic(1).grad(0.0).unwrap(), 0.5);
        for x in [-3.0, 0.0, 2.0] {
            assert_eq!(exp_loss().grad(x).unwrap(), exp_loss().eval(x).unwrap());
        }
        let h = 1e-5;
        let l = logistic(1);
        let fd = (l.grad(h).unwrap() - l.grad(-h).unwrap()) / (2.0 * h);
        assert!((fd - 0.25).abs() < 1e-9);
        assert_eq!(l.hess(0.0).unwrap(), 0.25);
    }

    #[test]
    fn conj_examples() {
        assert_eq!(exp_loss().conj(1.0), -1.0);
        assert_eq!(exp_loss().conj(0.0), 0.0);
        assert_eq!(exp_loss().conj(-0.1), f64::INFINITY);
        assert_eq!(logistic(1).conj(0.0), 0.0);
        assert_eq!(logistic(1).conj(1.0), 0.0);
        assert_eq!(logistic(1).conj(2.0), f64::INFINITY);
        assert_eq!(logistic(1).conj(f64::NAN), f64::INFINITY);
    }

    #[test]
    fn conj_grad_examples() {
        assert_eq!(exp_loss().conj_grad(1.0).unwrap(), 0.0);
        assert_eq!(logistic(1).conj_grad(0.5).unwrap(), 0.0);
        let phi = logistic(1).grad(1.7).unwrap();
        assert!((logistic(1).conj_grad(phi).unwrap() - 1.7).abs() < 1e-10 * 1.7);
        assert!(matches!(logistic(1).conj_grad(1.0), Err(Error::Domain(_))));
        assert!(matches!(logistic(1).conj_grad(0.0), Err(Error::Domain(_))));
        assert!(matches!(exp_loss().conj_grad(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constants() {
        for m in [1, 7, 5000] {
            let c = loss_constants(LossKind::Exponential, m).unwrap();
            assert_eq!((c.eta, c.beta), (1.0, 1.0));
        }
        let c = loss_constants(LossKind::Logistic, 3).unwrap();
        assert!((c.eta - 8.0 / (3.0 * LN_2)).abs() < 1e-14);
        assert_eq!(c.beta, 9.0);
        let c = loss_constants(LossKind::Logistic, 1).unwrap();
        assert!((c.eta - 2.0 / LN_2).abs() < 1e-14);
        assert_eq!(c.beta, 3.0);
        let c = loss_constants(LossKind::Logistic, 2000).unwrap();
        assert!(c.saturated && c.eta.is_infinite() && c.beta.is_infinite());
        assert!(matches!(
            loss_constants(LossKind::Logistic, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn risk_examples() {
        let rf = RiskFunction::new(LossKind::Logistic, 3).unwrap();
        assert!((rf.eval(&[0.0; 3]).unwrap() - 3.0 * LN_2).abs() < 1e-15);
        let c = rf.conj(&[0.5, 0.5, 0.0]).unwrap();
        assert!((c + 2.0 * LN_2).abs() < 1e-15);
        let rf = RiskFunction::new(LossKind::Exponential, 2).unwrap();
        assert_eq!(rf.grad(&[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            rf.eval(&[0.0; 3]),
            Err(Error::Dimension {
                expected: 2,
                got: 3
            })
        ));
        assert!(matches!(rf.conj(&[0.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn shifted_exponential_accumulator_matches_direct_sum() {
        let x = [31.0, 2.0, -5.0];
        let direct: f64 = x.iter().map(|v: &f64| v.exp()).sum();
        let got = risk_value(LossKind::Exponential, &x);
        assert!((got - direct).abs() <= 1e-14 * direct);
    }

    #[test]
    fn loss_from_str() {
        assert_eq!("exp".parse::<LossKind>().unwrap(), LossKind::Exponential);
        assert_eq!("logistic".parse::<LossKind>().unwrap(), LossKind::Logistic);
        assert!("hinge".parse::<LossKind>().is_err());
    }

    fn kinds() -> impl Strategy<Value = LossKind> {
        prop_oneof![Just(LossKind::Exponential), Just(LossKind::Logistic)]
    }

    proptest! {
        #[test]
        fn fenchel_young_equality(kind in kinds(), x in -30.0f64..5.0) {
            let r = kind.value(x) + kind.conj(kind.grad(x)) - x * kind.grad(x);
            prop_assert!(r.abs() <= 1e-9, "residual {r}");
        }

        #[test]
        fn conj_grad_inverts_grad(kind in kinds(), x in -30.0f64..5.0) {
            let l = LossSpec::new(kind, 1).unwrap();
            let back = l.conj_grad(l.grad(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-10 * x.abs().max(1.0));
        }

        #[test]
        fn derivatives_match_finite_differences(kind in kinds(), x in -20.0f64..3.0) {
            let h = 1e-5 * x.abs().max(1.0);
            let fd1 = (kind.value(x + h) - kind.value(x - h)) / (2.0 * h);
            let fd2 = (kind.grad(x + h) - kind.grad(x - h)) / (2.0 * h);
            prop_assert!((fd1 - kind.grad(x)).abs() <= 1e-6 * kind.grad(x));
            prop_assert!((fd2 - kind.hess(x)).abs() <= 1e-6 * kind.hess(x));
        }

        #[test]
        fn loss_is_positive_increasing_convex(kind in kinds(), x in -700.0f64..700.0) {
            prop_assert!(kind.value(x) > 0.0);
            prop_assert!(kind.grad(x) > 0.0);
            prop_assert!(kind.hess(x) > 0.0);
        }

        #[test]
        fn delta_matches_difference(kind in kinds(), x in -20.0f64..5.0, h in -20.0f64..20.0) {
            let direct = kind.value(x + h) - kind.value(x);
            let d = kind.delta(x, h);
            prop_assert!((d - direct).abs() <= 1e-12 * kind.value(x + h).max(kind.value(x)));
        }

        #[test]
        fn membership_constants_hold(kind in kinds(), m in 1usize..12, u in 0.0f64..1.0) {
            let l = LossSpec::new(kind, m).unwrap();
            // sample the level-set half line (-∞, m g(0)] on a log-ish scale
            let top = m as f64 * kind.value(0.0);
            let x = top - 60.0 * u * u;
            let tol = 1.0 + 1e-12;
            prop_assert!(kind.hess(x) <= l.eta * kind.value(x) * tol);
            prop_assert!(kind.value(x) <= l.beta * kind.grad(x) * tol);
        }
    }

    #[test]
    fn vanishes_at_minus_infinity() {
        for k in [LossKind::Exponential, LossKind::Logistic] {
            assert!(k.value(-50.0) < 1e-20);
        }
    }

    #[test]
    fn conjugate_shape() {
        for k in [LossKind::Exponential, LossKind::Logistic] {
            let top = k.grad(0.0);
            let min = -k.value(0.0);
            assert!((k.conj(top) - min).abs() < 1e-15);
            for i in 1..=100 {
                let phi = top * i as f64 / 101.0;
                assert!(k.conj(phi) < 0.0);
                assert!(k.conj(phi) >= min);
            }
            // beyond g'(0) values stay above the minimum too
            for i in 1..=100 {
                let phi = top + (k.conj_domain_sup().min(2.0) - top) * i as f64 / 101.0;
                assert!(k.conj(phi) > min);
            }
        }
    }
}
