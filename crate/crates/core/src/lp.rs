//! Exact rational linear programming.
//!
//! A dense two-phase tableau simplex with Bland's rule, and exact Gaussian
//! elimination for linear systems. Both are sized for desk-scale instances.

use num_traits::{One, Signed, Zero};

use crate::error::{structural, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// Variable bounds; `None` means infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bound {
    pub fn nonnegative() -> Self {
        Bound { lower: Some(Rational::zero()), upper: None }
    }

    pub fn free() -> Self {
        Bound { lower: None, upper: None }
    }

    pub fn between(lower: Rational, upper: Rational) -> Self {
        Bound { lower: Some(lower), upper: Some(upper) }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    /// `n` nonnegative variables, zero objective, no rows.
    pub fn new(n: usize, sense: Sense) -> Self {
        LinearProgram {
            objective: vec![Rational::zero(); n],
            sense,
            constraints: Vec::new(),
            bounds: vec![Bound::nonnegative(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(structural("bound count differs from variable count"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(structural(format!("constraint {i} has {} coefficients, expected {n}", c.coeffs.len())));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(structural(format!("variable {j} has lower bound above upper bound")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values of the original variables (empty unless optimal).
    pub values: Vec<Rational>,
    /// Shadow price `∂ objective / ∂ rhs` of each original constraint.
    pub duals: Vec<Rational>,
    pub objective: Rational,
    /// Basic columns of the internal standard form, by row.
    pub basis: Vec<usize>,
}

impl LpSolution {
    fn without_solution(status: LpStatus) -> Self {
        LpSolution { status, values: Vec::new(), duals: Vec::new(), objective: Rational::zero(), basis: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How an original variable is expressed in standard-form columns.
enum VarMap {
    /// `x = offset + col`
    Shifted { col: usize, offset: Rational },
    /// `x = offset − col`
    Mirrored { col: usize, offset: Rational },
    /// `x = pos − neg`
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    /// Row-major coefficient rows over structural columns, after sign normalization.
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    relations: Vec<Relation>,
    /// `−1` where a row was negated to make its rhs nonnegative.
    flipped: Vec<bool>,
    cost: Vec<Rational>,
    cost_offset: Rational,
    var_map: Vec<VarMap>,
    num_original_rows: usize,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let mut var_map = Vec::with_capacity(lp.num_vars());
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &lp.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                var_map.push(VarMap::Shifted { col: ncols, offset: l.clone() });
                if let Some(u) = u {
                    bound_rows.push((ncols, u - l));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                var_map.push(VarMap::Mirrored { col: ncols, offset: u.clone() });
                ncols += 1;
            }
            (None, None) => {
                var_map.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }

    let sign = if lp.sense == Sense::Maximize { -Rational::one() } else { Rational::one() };
    let mut cost = vec![Rational::zero(); ncols];
    let mut cost_offset = Rational::zero();
    for (j, c) in lp.objective.iter().enumerate() {
        let c = c * &sign;
        match &var_map[j] {
            VarMap::Shifted { col, offset } => {
                cost_offset += &c * offset;
                cost[*col] += &c;
            }
            VarMap::Mirrored { col, offset } => {
                cost_offset += &c * offset;
                cost[*col] -= &c;
            }
            VarMap::Split { pos, neg } => {
                cost[*pos] += &c;
                cost[*neg] -= &c;
            }
        }
    }

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut relations = Vec::new();
    for con in &lp.constraints {
        let mut row = vec![Rational::zero(); ncols];
        let mut b = con.rhs.clone();
        for (j, a) in con.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &var_map[j] {
                VarMap::Shifted { col, offset } => {
                    b -= a * offset;
                    row[*col] += a;
                }
                VarMap::Mirrored { col, offset } => {
                    b -= a * offset;
                    row[*col] -= a;
                }
                VarMap::Split { pos, neg } => {
                    row[*pos] += a;
                    row[*neg] -= a;
                }
            }
        }
        rows.push(row);
        rhs.push(b);
        relations.push(con.relation);
    }
    let num_original_rows = rows.len();
    for (col, ub) in bound_rows {
        let mut row = vec![Rational::zero(); ncols];
        row[col] = Rational::one();
        rows.push(row);
        rhs.push(ub);
        relations.push(Relation::Le);
    }

    let mut flipped = vec![false; rows.len()];
    for i in 0..rows.len() {
        if rhs[i].is_negative() {
            flipped[i] = true;
            for a in rows[i].iter_mut() {
                *a = -a.clone();
            }
            rhs[i] = -rhs[i].clone();
            relations[i] = match relations[i] {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    StandardForm { rows, rhs, relations, flipped, cost, cost_offset, var_map, num_original_rows }
}

struct Tableau {
    /// `B⁻¹A` rows, each followed by its rhs entry at index `ncols`.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Columns that may never enter (artificials in phase two).
    barred: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [Rational], objective: &mut Rational) {
        let inv = Rational::one() / &self.t[r][c];
        let width = self.ncols + 1;
        for j in 0..width {
            if !self.t[r][j].is_zero() {
                self.t[r][j] *= &inv;
            }
        }
        let nz: Vec<usize> = (0..width).filter(|&j| !self.t[r][j].is_zero()).collect();
        let (before, rest) = self.t.split_at_mut(r);
        let (pivot_row, after) = rest.split_first_mut().expect("pivot row");
        for row in before.iter_mut().chain(after.iter_mut()) {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        }
        if !reduced[c].is_zero() {
            let f = reduced[c].clone();
            for &j in &nz {
                if j < self.ncols {
                    let delta = &f * &pivot_row[j];
                    reduced[j] -= delta;
                }
            }
            // Objective value tracks `c_B x_B`: raised by f * (new rhs).
            *objective += &f * &pivot_row[self.ncols];
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[Rational]) -> (Vec<Rational>, Rational) {
        let mut d: Vec<Rational> = cost.to_vec();
        let mut obj = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.t[i][j].is_zero() {
                    d[j] -= cb * &self.t[i][j];
                }
            }
            obj += cb * self.rhs(i);
        }
        (d, obj)
    }

    /// Runs Bland's rule to optimality; returns `false` when unbounded.
    fn optimize(&mut self, reduced: &mut [Rational], objective: &mut Rational) -> bool {
        loop {
            let Some(c) = (0..self.ncols).find(|&j| !self.barred[j] && reduced[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c, reduced, objective);
        }
    }
}

/// Solves the program exactly; duals are reported for optimal solutions.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let sf = standardize(lp);
    let m = sf.rows.len();
    let nstruct = sf.cost.len();

    // Columns: structural | one slack per inequality | artificials.
    let mut slack_of = vec![None; m];
    let mut ncols = nstruct;
    for i in 0..m {
        if sf.relations[i] != Relation::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut artificial_of = vec![None; m];
    for i in 0..m {
        if sf.relations[i] != Relation::Le {
            artificial_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(ncols + 1);
        row.extend(sf.rows[i].iter().cloned());
        row.resize(ncols + 1, Rational::zero());
        if let Some(s) = slack_of[i] {
            row[s] = if sf.relations[i] == Relation::Le { Rational::one() } else { -Rational::one() };
        }
        if let Some(a) = artificial_of[i] {
            row[a] = Rational::one();
        }
        row[ncols] = sf.rhs[i].clone();
        basis.push(artificial_of[i].or(slack_of[i]).expect("every row has a basic column"));
        t.push(row);
    }
    let is_artificial: Vec<bool> = {
        let mut v = vec![false; ncols];
        for a in artificial_of.iter().flatten() {
            v[*a] = true;
        }
        v
    };
    let mut tab = Tableau { t, basis, ncols, barred: vec![false; ncols] };

    // Phase one.
    if is_artificial.iter().any(|a| *a) {
        let phase1_cost: Vec<Rational> =
            is_artificial.iter().map(|&a| if a { Rational::one() } else { Rational::zero() }).collect();
        let (mut d, mut obj) = tab.reduced_costs(&phase1_cost);
        let bounded = tab.optimize(&mut d, &mut obj);
        debug_assert!(bounded, "phase one is bounded below by zero");
        if obj.is_positive() {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible));
        }
        // Drive artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if is_artificial[tab.basis[i]] {
                if let Some(c) = (0..nstruct + m).find(|&j| j < ncols && !is_artificial[j] && !tab.t[i][j].is_zero()) {
                    let mut scratch = vec![Rational::zero(); ncols];
                    let mut o = Rational::zero();
                    tab.pivot(i, c, &mut scratch, &mut o);
                } else {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        tab.barred = is_artificial.clone();
    }

    // Phase two.
    let mut cost = sf.cost.clone();
    cost.resize(ncols, Rational::zero());
    let (mut d, mut obj) = tab.reduced_costs(&cost);
    if !tab.optimize(&mut d, &mut obj) {
        return Ok(LpSolution::without_solution(LpStatus::Unbounded));
    }

    let mut xs = vec![Rational::zero(); ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        xs[b] = tab.rhs(i).clone();
    }
    let values: Vec<Rational> = sf
        .var_map
        .iter()
        .map(|vm| match vm {
            VarMap::Shifted { col, offset } => offset + &xs[*col],
            VarMap::Mirrored { col, offset } => offset - &xs[*col],
            VarMap::Split { pos, neg } => &xs[*pos] - &xs[*neg],
        })
        .collect();

    // Duals from Bᵀy = c_B over the surviving rows.
    let column = |i: usize, j: usize| -> Rational {
        if j < nstruct {
            sf.rows[i][j].clone()
        } else if Some(j) == slack_of[i] {
            if sf.relations[i] == Relation::Le {
                Rational::one()
            } else {
                -Rational::one()
            }
        } else if Some(j) == artificial_of[i] {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    let mut y_std = vec![Rational::zero(); m];
    if !tab.basis.is_empty() {
        let bt: Vec<Vec<Rational>> = tab.basis.iter().map(|&b| (0..m).map(|i| column(i, b)).collect()).collect();
        let cb: Vec<Rational> = tab.basis.iter().map(|&b| cost[b].clone()).collect();
        match solve_linear_system(&bt, &cb)? {
            LinearSystemSolution::Consistent { particular, .. } => y_std = particular,
            LinearSystemSolution::Inconsistent { .. } => {
                return Err(structural("basis system for duals is inconsistent"));
            }
        }
    }
    debug_assert!((0..ncols).filter(|&j| !is_artificial[j]).all(|j| {
        let yta: Rational = (0..m).fold(Rational::zero(), |acc, i| acc + &y_std[i] * column(i, j));
        !(&cost[j] - yta).is_negative()
    }));
    let sense_sign = if lp.sense == Sense::Maximize { -Rational::one() } else { Rational::one() };
    let duals: Vec<Rational> = (0..sf.num_original_rows)
        .map(|i| {
            let y = &y_std[i] * &sense_sign;
            if sf.flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    let objective = lp.objective.iter().zip(&values).fold(Rational::zero(), |acc, (c, x)| acc + c * x);
    debug_assert_eq!(&(&obj + &sf.cost_offset) * &sense_sign, objective);
    Ok(LpSolution { status: LpStatus::Optimal, values, duals, objective, basis: tab.basis })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearSystemSolution {
    Consistent {
        particular: Vec<Rational>,
        nullspace: Vec<Vec<Rational>>,
    },
    /// `yᵀA = 0` and `yᵀb ≠ 0`.
    Inconsistent {
        certificate: Vec<Rational>,
    },
}

/// Exact Gaussian elimination of `A x = b`, first-nonzero pivoting.
pub fn solve_linear_system(a: &[Vec<Rational>], b: &[Rational]) -> Result<LinearSystemSolution> {
    let m = a.len();
    if b.len() != m {
        return Err(structural("rhs length differs from row count"));
    }
    let n = a.first().map_or(0, |r| r.len());
    if a.iter().any(|r| r.len() != n) {
        return Err(structural("ragged coefficient matrix"));
    }
    // Augmented [A | b | I].
    let width = n + 1 + m;
    let mut rows: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut r = a[i].clone();
            r.push(b[i].clone());
            r.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = Rational::one() / &rows[r][c];
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for j in 0..width {
                if !pivot_row[j].is_zero() {
                    row[j] -= &f * &pivot_row[j];
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    for row in rows.iter().skip(r) {
        if !row[n].is_zero() {
            return Ok(LinearSystemSolution::Inconsistent { certificate: row[n + 1..].to_vec() });
        }
    }
    let mut particular = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = rows[i][n].clone();
    }
    let is_pivot = {
        let mut v = vec![false; n];
        for &c in &pivots {
            v[c] = true;
        }
        v
    };
    let nullspace = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = -rows[i][f].clone();
            }
            v
        })
        .collect();
    Ok(LinearSystemSolution::Consistent { particular, nullspace })
}

/// Exact rank of a list of row vectors.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let zeros = vec![Rational::zero(); rows.len()];
    match solve_linear_system(rows, &zeros) {
        Ok(LinearSystemSolution::Consistent { nullspace, .. }) => rows[0].len() - nullspace.len(),
        _ => unreachable!("homogeneous systems are consistent"),
    }
}
