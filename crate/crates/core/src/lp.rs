//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are small (tens of rows and columns), so the whole tableau is
//! kept in memory and pivoted directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-8;
pub const PIVOT_TOL: f64 = 1e-10;
const REDUCED_COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min/max cᵀx` subject to row constraints and per-variable bounds.
/// Variables default to `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            direction,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self
    }

    pub fn bound(&mut self, j: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[j] = (lo, hi);
        self
    }

    pub fn free(&mut self, j: usize) -> &mut Self {
        self.bound(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.bounds.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp("objective has non-finite entries".into()));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::Lp("constraint has non-finite data".into()));
            }
        }
        for &(lo, hi) in &self.bounds {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Lp(format!("invalid bound [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    /// Objective value at `x`; `±∞`/NaN conventions follow the status.
    pub value: f64,
}

impl LpOutcome {
    fn infeasible() -> Self {
        LpOutcome {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            value: f64::NAN,
        }
    }
}

// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shift { col: usize, lo: f64 },
    Flip { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule pivots over columns `< allowed`. Returns false when
    /// the objective is unbounded below.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let rhs = self.rhs();
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..allowed).find(|&j| self.obj[j] < -REDUCED_COST_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(Error::Lp("pivot limit exceeded".into()))
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    for &(lo, hi) in &lp.bounds {
        if lo > hi {
            return Ok(LpOutcome::infeasible());
        }
        let m = if lo.is_finite() {
            VarMap::Shift { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Flip { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split {
                pos: ncols - 1,
                neg: ncols,
            }
        };
        ncols += 1;
        maps.push(m);
    }

    let sign = match lp.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for (j, m) in maps.iter().enumerate() {
        let c = sign * lp.objective[j];
        match *m {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Flip { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // standardized rows over the nonnegative columns
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for con in &lp.constraints {
        let mut a = vec![0.0; ncols];
        let mut b = con.rhs;
        for (j, m) in maps.iter().enumerate() {
            let v = con.coeffs[j];
            if v == 0.0 {
                continue;
            }
            match *m {
                VarMap::Shift { col, lo } => {
                    a[col] += v;
                    b -= v * lo;
                }
                VarMap::Flip { col, hi } => {
                    a[col] -= v;
                    b -= v * hi;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] += v;
                    a[neg] -= v;
                }
            }
        }
        rows.push((a, con.sense, b));
    }
    for (j, m) in maps.iter().enumerate() {
        if let VarMap::Shift { col, lo } = *m {
            let hi = lp.bounds[j].1;
            if hi.is_finite() {
                let mut a = vec![0.0; ncols];
                a[col] = 1.0;
                rows.push((a, Sense::Le, hi - lo));
            }
        }
    }
    for (a, sense, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let art_start = ncols + nslack;
    let width = art_start + nart;
    let mut tab = Tableau {
        rows: Vec::with_capacity(rows.len()),
        obj: vec![0.0; width + 1],
        basis: Vec::with_capacity(rows.len()),
        width,
    };
    let (mut s, mut t) = (ncols, art_start);
    for (a, sense, b) in &rows {
        let mut row = vec![0.0; width + 1];
        row[..ncols].copy_from_slice(a);
        row[width] = *b;
        match sense {
            Sense::Le => {
                row[s] = 1.0;
                tab.basis.push(s);
                s += 1;
            }
            Sense::Ge => {
                row[s] = -1.0;
                s += 1;
                row[t] = 1.0;
                tab.basis.push(t);
                t += 1;
            }
            Sense::Eq => {
                row[t] = 1.0;
                tab.basis.push(t);
                t += 1;
            }
        }
        tab.rows.push(row);
    }

    // phase 1: minimize the sum of artificials
    if nart > 0 {
        for j in art_start..width {
            tab.obj[j] = 1.0;
        }
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= art_start {
                for (o, v) in tab.obj.iter_mut().zip(&tab.rows[i]) {
                    *o -= v;
                }
            }
        }
        tab.optimize(width)?;
        if -tab.obj[width] > FEAS_TOL {
            return Ok(LpOutcome::infeasible());
        }
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, c);
                }
            }
        }
    }

    // phase 2
    tab.obj.iter_mut().for_each(|v| *v = 0.0);
    tab.obj[..ncols].copy_from_slice(&cost);
    for i in 0..tab.rows.len() {
        let cb = if tab.basis[i] < ncols {
            cost[tab.basis[i]]
        } else {
            0.0
        };
        if cb != 0.0 {
            for (o, v) in tab.obj.iter_mut().zip(&tab.rows[i]) {
                *o -= cb * v;
            }
        }
    }
    if !tab.optimize(art_start)? {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            value: -sign * f64::INFINITY,
        });
    }

    let mut y = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rows[i][width].max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Flip { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        x,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bounded_maximum() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0]);
        lp.constrain(vec![1.0], Sense::Le, 3.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 3.0).abs() < 1e-12);
        assert!((out.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let mut lp = LinearProgram::new(Direction::Minimize, vec![0.0]);
        lp.constrain(vec![1.0], Sense::Le, -1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
        let mut lp = LinearProgram::new(Direction::Minimize, vec![0.0]);
        lp.bound(0, 2.0, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0, 1.0]);
        lp.free(0).free(1);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_of_every_shape() {
        // min x0 - x1 + x2 with x0 in [-2, 5], x1 <= 4, x2 free, x0 + x2 >= 1, x2 <= 7
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0, -1.0, 1.0]);
        lp.bound(0, -2.0, 5.0)
            .bound(1, f64::NEG_INFINITY, 4.0)
            .free(2)
            .constrain(vec![1.0, 0.0, 1.0], Sense::Ge, 1.0)
            .constrain(vec![0.0, 0.0, 1.0], Sense::Le, 7.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - (1.0 - 4.0)).abs() < 1e-9);
        assert!(lp.residual(&out.x) <= 1e-8);
    }

    #[test]
    fn equality_and_redundant_rows() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Sense::Eq, 1.0)
            .constrain(vec![2.0, 2.0], Sense::Eq, 2.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_data_rejected() {
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0]);
        lp.constrain(vec![1.0, 2.0], Sense::Le, 1.0);
        assert!(matches!(solve(&lp), Err(Error::Dimension { .. })));
        let mut lp = LinearProgram::new(Direction::Minimize, vec![f64::NAN]);
        lp.constrain(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(solve(&lp), Err(Error::Lp(_))));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the textbook largest-coefficient rule
        let mut lp = LinearProgram::new(Direction::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.constrain(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0)
            .constrain(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0)
            .constrain(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value + 0.05).abs() < 1e-9);
    }

    #[test]
    fn strong_duality_on_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.gen_range(1..=12);
            let n = rng.gen_range(1..=12);
            // max cᵀx, Ax <= b, x >= 0 with A > 0, b > 0: feasible and bounded
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0.1..2.0)).collect())
                .collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..3.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();

            let mut primal = LinearProgram::new(Direction::Maximize, c.clone());
            for (row, bi) in a.iter().zip(&b) {
                primal.constrain(row.clone(), Sense::Le, *bi);
            }
            // min bᵀy, Aᵀy >= c, y >= 0
            let mut dual = LinearProgram::new(Direction::Minimize, b.clone());
            for j in 0..n {
                dual.constrain(a.iter().map(|r| r[j]).collect(), Sense::Ge, c[j]);
            }
            let p = solve(&primal).unwrap();
            let d = solve(&dual).unwrap();
            assert_eq!(p.status, LpStatus::Optimal);
            assert_eq!(d.status, LpStatus::Optimal);
            assert!(primal.residual(&p.x) <= 1e-8);
            assert!(dual.residual(&d.x) <= 1e-8);
            assert!(
                (p.value - d.value).abs() <= 1e-6,
                "{} vs {}",
                p.value,
                d.value
            );
        }
    }

    #[test]
    fn terminates_on_larger_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (m, n) = (50, 50);
            let mut lp = LinearProgram::new(
                Direction::Minimize,
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            for _ in 0..m {
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let sense = match rng.gen_range(0..3) {
                    0 => Sense::Le,
                    1 => Sense::Ge,
                    _ => Sense::Eq,
                };
                lp.constrain(row, sense, rng.gen_range(-1.0..1.0));
            }
            for j in 0..n {
                lp.bound(j, -5.0, 5.0);
            }
            let out = solve(&lp).unwrap();
            if out.status == LpStatus::Optimal {
                assert!(lp.residual(&out.x) <= 1e-8);
            }
        }
    }
}
