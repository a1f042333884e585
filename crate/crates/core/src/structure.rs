//! Structural classification of an instance through LP feasibility.
//!
//! Every instance splits by rows into a weak-learnable block `A₀` (its only
//! nonnegative kernel weighting of `Aᵀ` is zero) and an attainable block `A₊`
//! (it has a strictly positive one). The rows of `A₊` form the hard core
//! `H(A)`: the rows on which some nonnegative `ψ` with `Aᵀψ = 0` is positive.
//!
//! Strict inequalities are compiled to closed ones with margin 1, which is
//! exact because the feasible sets are cones.

use serde::{Deserialize, Serialize};

use crate::boost::IterateState;
use crate::error::{Error, Result};
use crate::instance::BoostInstance;
use crate::losses::{risk_value, LossSpec};
use crate::lp::{solve, Direction, LinearProgram, LpStatus, Sense, FEAS_TOL};
use crate::matrix::{dot, inf_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    WeakLearnable,
    Attainable,
    Mixed,
}

/// Row partition; `rows_aplus` is the hard core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub rows_a0: Vec<usize>,
    pub rows_aplus: Vec<usize>,
}

/// Row indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub m: usize,
    pub n: usize,
    pub regime: Regime,
    pub hard_core: Vec<usize>,
    pub partition: Partition,
    pub gamma_classical: f64,
    pub witness_primal: Option<Vec<f64>>,
    pub witness_dual: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub psi: Vec<f64>,
    /// `-f*(ψ)`, a lower bound on the optimal risk.
    pub dual_value: f64,
    /// `f(Aλ) + f*(ψ)`, an upper bound on the suboptimality of `λ`.
    pub gap_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub a0: Option<BoostInstance>,
    pub a_plus: Option<BoostInstance>,
    pub partition: Partition,
}

fn lp_error(what: &str, status: LpStatus) -> Error {
    Error::Lp(format!("{what}: unexpected status {status:?}"))
}

/// Whether some `λ` makes every margin strictly negative (`Aλ ≤ -1`),
/// with such a `λ` as witness.
pub fn weak_learnable(inst: &BoostInstance) -> Result<(bool, Option<Vec<f64>>)> {
    let a = inst.matrix();
    let mut lp = LinearProgram::new(Direction::Minimize, vec![0.0; inst.n()]);
    for j in 0..inst.n() {
        lp.free(j);
    }
    for i in 0..inst.m() {
        lp.constrain(a.row(i).to_vec(), Sense::Le, -1.0);
    }
    let out = solve(&lp)?;
    match out.status {
        LpStatus::Optimal => Ok((true, Some(out.x))),
        LpStatus::Infeasible => Ok((false, None)),
        s => Err(lp_error("weak learnability", s)),
    }
}

// Variables ψ ∈ [0,1]^m with Aᵀψ = 0, plus `extra` trailing variables.
fn kernel_box_lp(a: &Matrix, direction: Direction, objective: Vec<f64>) -> LinearProgram {
    let m = a.rows();
    let width = objective.len();
    let mut lp = LinearProgram::new(direction, objective);
    for i in 0..m {
        lp.bound(i, 0.0, 1.0);
    }
    for j in 0..a.cols() {
        let mut row = vec![0.0; width];
        row[..m].copy_from_slice(&a.column(j));
        lp.constrain(row, Sense::Eq, 0.0);
    }
    lp
}

/// Whether a strictly positive `ψ` with `Aᵀψ = 0` exists, with that `ψ`.
pub fn attainable(inst: &BoostInstance) -> Result<(bool, Option<Vec<f64>>)> {
    let m = inst.m();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = kernel_box_lp(inst.matrix(), Direction::Maximize, objective);
    lp.bound(m, 0.0, 1.0);
    for i in 0..m {
        let mut row = vec![0.0; m + 1];
        row[i] = 1.0;
        row[m] = -1.0;
        lp.constrain(row, Sense::Ge, 0.0);
    }
    let out = solve(&lp)?;
    if out.status != LpStatus::Optimal {
        return Err(lp_error("attainability", out.status));
    }
    if out.value > FEAS_TOL {
        Ok((true, Some(out.x[..m].to_vec())))
    } else {
        Ok((false, None))
    }
}

/// Whether some `λ` has `Aλ ≤ 0` with at least one strictly negative entry.
/// This is the alternative to [`attainable`].
pub fn semi_separable(inst: &BoostInstance) -> Result<(bool, Option<Vec<f64>>)> {
    let a = inst.matrix();
    let n = inst.n();
    // maximize Σ(-Aλ)_i over the box |λ_j| ≤ 1
    let objective: Vec<f64> = (0..n)
        .map(|j| -(0..inst.m()).map(|i| a[(i, j)]).sum::<f64>())
        .collect();
    let mut lp = LinearProgram::new(Direction::Maximize, objective);
    for j in 0..n {
        lp.bound(j, -1.0, 1.0);
    }
    for i in 0..inst.m() {
        lp.constrain(a.row(i).to_vec(), Sense::Le, 0.0);
    }
    let out = solve(&lp)?;
    if out.status != LpStatus::Optimal {
        return Err(lp_error("semi-separability", out.status));
    }
    if out.value > FEAS_TOL {
        Ok((true, Some(out.x)))
    } else {
        Ok((false, None))
    }
}

/// Hard core with a dual witness that is positive on every hard-core row.
pub fn hard_core_with_witness(inst: &BoostInstance) -> Result<(Vec<usize>, Option<Vec<f64>>)> {
    let m = inst.m();
    let mut member = vec![false; m];
    let mut witnesses: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        if member[i] {
            continue;
        }
        let mut objective = vec![0.0; m];
        objective[i] = 1.0;
        let lp = kernel_box_lp(inst.matrix(), Direction::Maximize, objective);
        let out = solve(&lp)?;
        if out.status != LpStatus::Optimal {
            return Err(lp_error("hard core", out.status));
        }
        if out.value > FEAS_TOL {
            // any positive coordinate of a feasible ψ is in the hard core
            for (k, &v) in out.x.iter().enumerate() {
                if v > FEAS_TOL {
                    member[k] = true;
                }
            }
            member[i] = true;
            witnesses.push(out.x);
        }
    }
    let core: Vec<usize> = (0..m).filter(|&i| member[i]).collect();
    let witness = if witnesses.is_empty() {
        None
    } else {
        let k = witnesses.len() as f64;
        let mut psi = vec![0.0; m];
        for w in &witnesses {
            for (p, v) in psi.iter_mut().zip(w) {
                *p += v / k;
            }
        }
        Some(psi)
    };
    Ok((core, witness))
}

/// `H(A)`, sorted and 0-based.
pub fn hard_core(inst: &BoostInstance) -> Result<Vec<usize>> {
    Ok(hard_core_with_witness(inst)?.0)
}

/// Splits the rows into `A₀` and `A₊ = A[H(A)]` and checks that `A₀` has no
/// hard core and that `A₊` is attainable.
pub fn decompose(inst: &BoostInstance) -> Result<Decomposition> {
    let core = hard_core(inst)?;
    let rest: Vec<usize> = (0..inst.m()).filter(|i| !core.contains(i)).collect();
    let a0 = inst.select_rows(&rest);
    let a_plus = inst.select_rows(&core);
    if let Some(a0) = &a0 {
        let h = hard_core(a0)?;
        if !h.is_empty() {
            return Err(Error::Invariant(format!(
                "the weak-learnable block has a nonempty hard core {h:?}"
            )));
        }
    }
    if let Some(ap) = &a_plus {
        if !attainable(ap)?.0 {
            return Err(Error::Invariant(
                "the hard-core block is not attainable".into(),
            ));
        }
    }
    Ok(Decomposition {
        a0,
        a_plus,
        partition: Partition {
            rows_a0: rest,
            rows_aplus: core,
        },
    })
}

/// Classical weak learning rate: the least, over distributions `φ` on the
/// rows, of the best edge `‖Aᵀφ‖_∞`.
pub fn gamma_classical(inst: &BoostInstance) -> Result<f64> {
    let (m, n) = (inst.m(), inst.n());
    let a = inst.matrix();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(Direction::Minimize, objective);
    for j in 0..n {
        let mut row = vec![0.0; m + 1];
        row[..m].copy_from_slice(&a.column(j));
        row[m] = -1.0;
        lp.constrain(row.clone(), Sense::Le, 0.0);
        row[m] = 1.0;
        lp.constrain(row, Sense::Ge, 0.0);
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.constrain(simplex, Sense::Eq, 1.0);
    let out = solve(&lp)?;
    if out.status != LpStatus::Optimal {
        return Err(lp_error("weak learning rate", out.status));
    }
    Ok(out.value.max(0.0))
}

/// Orthonormal basis of `Ker(Aᵀ) ⊂ ℝ^m` from a column-pivoted Householder QR
/// of `A`. Each vector is signed so its first non-negligible entry is
/// positive.
pub fn kernel_basis(inst: &BoostInstance) -> Vec<Vec<f64>> {
    let a = inst.matrix();
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    let col_norm = |r: &Matrix, j: usize, from: usize| {
        (from..m).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt()
    };
    let largest = (0..n).map(|j| col_norm(a, j, 0)).fold(0.0, f64::max);
    let rank_tol = 1e-10 * largest;

    let mut rank = 0;
    for k in 0..m.min(n) {
        let (p, norm) = (k..n)
            .map(|j| (j, col_norm(&r, j, k)))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if norm <= rank_tol {
            break;
        }
        if p != k {
            for i in 0..m {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = tmp;
            }
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn > 0.0 {
            v.iter_mut().for_each(|x| *x /= vn);
            // R ← H R on rows k.., Q ← Q H on columns k..
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                for i in k..m {
                    r[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
            for i in 0..m {
                let s: f64 = (k..m).map(|c| q[(i, c)] * v[c - k]).sum();
                for c in k..m {
                    q[(i, c)] -= 2.0 * s * v[c - k];
                }
            }
        }
        rank += 1;
    }

    (rank..m)
        .map(|c| {
            let mut b = q.column(c);
            let lead = b.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
            if lead < 0.0 {
                b.iter_mut().for_each(|x| *x = -*x);
            }
            b
        })
        .collect()
}

/// Projects the dual weights at `state` onto `Ker(Aᵀ)` and, when the result
/// is a nonnegative point of `dom(f*)`, returns it with the implied bound on
/// the duality gap.
pub fn dual_certificate(
    inst: &BoostInstance,
    loss: &LossSpec,
    state: &IterateState,
) -> Option<DualCertificate> {
    let m = inst.m();
    if state.dual_weights.len() != m || loss.sample_size_m != m {
        return None;
    }
    let basis = kernel_basis(inst);
    let mut psi = vec![0.0; m];
    for b in &basis {
        let c = dot(b, &state.dual_weights);
        for (p, v) in psi.iter_mut().zip(b) {
            *p += c * v;
        }
    }
    if psi.iter().any(|&p| p < -1e-10) {
        return None;
    }
    psi.iter_mut().for_each(|p| *p = p.max(0.0));
    let residual = inf_norm(&inst.matrix().tr_mul_vec(&psi).ok()?);
    if residual > FEAS_TOL {
        return None;
    }
    let conj: f64 = psi.iter().map(|&p| loss.kind.conj(p)).sum();
    if !conj.is_finite() {
        return None;
    }
    let primal = risk_value(loss.kind, &state.margins);
    Some(DualCertificate {
        psi,
        dual_value: -conj,
        gap_bound: primal + conj,
    })
}

/// Full structural report: regime, hard core, partition, classical rate and
/// witnesses.
pub fn analyze(inst: &BoostInstance) -> Result<StructureReport> {
    let (core, witness_dual) = hard_core_with_witness(inst)?;
    let decomposition = decompose(inst)?;
    debug_assert_eq!(decomposition.partition.rows_aplus, core);
    let m = inst.m();
    let regime = if core.is_empty() {
        Regime::WeakLearnable
    } else if core.len() == m {
        Regime::Attainable
    } else {
        Regime::Mixed
    };
    let gamma = gamma_classical(inst)?;
    let witness_primal = match regime {
        Regime::WeakLearnable => weak_learnable(inst)?.1,
        Regime::Mixed => mixed_witness(inst, &decomposition.partition)?,
        Regime::Attainable => None,
    };
    Ok(StructureReport {
        m,
        n: inst.n(),
        regime,
        hard_core: core,
        partition: decomposition.partition,
        gamma_classical: gamma,
        witness_primal,
        witness_dual,
    })
}

// λ with A₀λ strictly negative and A₊λ = 0.
fn mixed_witness(inst: &BoostInstance, part: &Partition) -> Result<Option<Vec<f64>>> {
    let a = inst.matrix();
    let mut lp = LinearProgram::new(Direction::Minimize, vec![0.0; inst.n()]);
    for j in 0..inst.n() {
        lp.free(j);
    }
    for &i in &part.rows_a0 {
        lp.constrain(a.row(i).to_vec(), Sense::Le, -1.0);
    }
    for &i in &part.rows_aplus {
        lp.constrain(a.row(i).to_vec(), Sense::Eq, 0.0);
    }
    let out = solve(&lp)?;
    Ok((out.status == LpStatus::Optimal).then_some(out.x))
}
