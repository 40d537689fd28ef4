//! Exact vertex enumeration over square row subsystems.
//!
//! A row subset `xi` of size `n` with invertible `A_xi` yields the candidate
//! `A_xi^{-1} b_xi`; the candidates inside the polytope are exactly its
//! vertices. Rows with a single `+-1` coefficient ("bound rows") are handled
//! structurally: an invertible subsystem picks at most one bound row per
//! variable, so it splits into bound variables `B` and a square block of
//! general rows over the remaining variables `F`. The split enumerates the
//! same subsystems as the naive `C(m, n)` scan while skipping the singular ones.

use super::OracleError;
use crate::factor_graph::{FactorGraph, Sense};
use crate::rational::Rational;
use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyRow {
    pub coeffs: Vec<i64>,
    pub relation: Relation,
    pub rhs: i64,
}

impl PolyRow {
    pub fn ge(coeffs: Vec<i64>, rhs: i64) -> Self {
        PolyRow { coeffs, relation: Relation::Ge, rhs }
    }

    pub fn eq(coeffs: Vec<i64>, rhs: i64) -> Self {
        PolyRow { coeffs, relation: Relation::Eq, rhs }
    }

    /// `(var, coefficient)` when the row has exactly one nonzero coefficient and it is +-1.
    fn bound_of(&self) -> Option<(usize, i64)> {
        let mut nz = self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0);
        let (i, &c) = nz.next()?;
        (nz.next().is_none() && c.abs() == 1).then_some((i, c))
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs = self
            .coeffs
            .iter()
            .zip(x)
            .fold(Rational::zero(), |acc, (&c, v)| acc + v * Rational::from_integer(BigInt::from(c)));
        let rhs = Rational::from_integer(BigInt::from(self.rhs));
        match self.relation {
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// `{x : rows}` with the box `0 <= x_i <= upper_i` included among the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeDescription {
    pub dim: usize,
    pub rows: Vec<PolyRow>,
    /// Objective in the reporting sense.
    pub objective: Vec<Rational>,
    pub sense: Sense,
}

impl PolytopeDescription {
    /// Appends the box rows `x_i >= 0` and `-x_i >= -upper_i` to `constraints`.
    pub fn with_box(
        constraints: Vec<PolyRow>,
        upper: &[i64],
        objective: Vec<Rational>,
        sense: Sense,
    ) -> Self {
        let dim = upper.len();
        assert_eq!(objective.len(), dim);
        assert!(constraints.iter().all(|r| r.coeffs.len() == dim));
        let mut rows = constraints;
        for (i, &u) in upper.iter().enumerate() {
            let mut lo = vec![0; dim];
            lo[i] = 1;
            rows.push(PolyRow::ge(lo, 0));
            let mut hi = vec![0; dim];
            hi[i] = -1;
            rows.push(PolyRow::ge(hi, -u));
        }
        PolytopeDescription { dim, rows, objective, sense }
    }

    /// Unit box `[0, 1]^n` with a zero objective.
    pub fn unit_box(n: usize) -> Self {
        Self::with_box(Vec::new(), &vec![1; n], vec![Rational::zero(); n], Sense::Minimize)
    }

    /// LP relaxation of a graph: every factor row over `[0,1]^n`, plus `x_i = p` for pins.
    pub fn from_graph(graph: &FactorGraph, objective: Vec<Rational>) -> Self {
        let n = graph.num_vars();
        let mut rows = Vec::new();
        let expand = |scope: &[crate::factor_graph::VarId], coeffs: &[i64]| {
            let mut full = vec![0; n];
            for (v, &c) in scope.iter().zip(coeffs) {
                full[v.0] = c;
            }
            full
        };
        for f in graph.factors() {
            for r in f.eq_rows() {
                rows.push(PolyRow::eq(expand(f.scope(), &r.coeffs), r.rhs));
            }
            for r in f.ineq_rows() {
                rows.push(PolyRow::ge(expand(f.scope(), &r.coeffs), r.rhs));
            }
        }
        for (i, pin) in graph.pins().iter().enumerate() {
            if let Some(p) = pin {
                let mut c = vec![0; n];
                c[i] = 1;
                rows.push(PolyRow::eq(c, *p as i64));
            }
        }
        Self::with_box(rows, &vec![1; n], objective, graph.sense())
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim && self.rows.iter().all(|r| r.holds(x))
    }

    pub fn value(&self, x: &[Rational]) -> Rational {
        crate::rational::dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumCaps {
    pub max_dim: usize,
    pub max_rows: usize,
}

impl Default for EnumCaps {
    fn default() -> Self {
        EnumCaps { max_dim: 10, max_rows: 24 }
    }
}

impl EnumCaps {
    pub fn check(&self, p: &PolytopeDescription) -> Result<(), OracleError> {
        if p.dim > self.max_dim {
            return Err(OracleError::CapExceeded {
                what: "dimension",
                value: p.dim,
                cap: self.max_dim,
            });
        }
        if p.rows.len() > self.max_rows {
            return Err(OracleError::CapExceeded {
                what: "rows",
                value: p.rows.len(),
                cap: self.max_rows,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    /// Sorted lexicographically, no duplicates.
    pub vertices: Vec<Vec<Rational>>,
    /// Indices into `vertices` attaining the optimum.
    pub optimal: Vec<usize>,
    pub optimum: Option<Rational>,
}

impl VertexSet {
    pub fn optimal_vertices(&self) -> impl Iterator<Item = &Vec<Rational>> {
        self.optimal.iter().map(|&k| &self.vertices[k])
    }
}

/// Small exact fraction; every quantity here stays far inside i128.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Q {
    n: i128,
    d: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Q {
    fn new(n: i128, d: i128) -> Q {
        assert!(d != 0);
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Q { n: s * n / g, d: s * d / g }
    }
    fn int(n: i128) -> Q {
        Q { n, d: 1 }
    }
    fn is_zero(self) -> bool {
        self.n == 0
    }
    fn sub(self, o: Q) -> Q {
        Q::new(self.n * o.d - o.n * self.d, self.d * o.d)
    }
    fn mul(self, o: Q) -> Q {
        Q::new(self.n * o.n, self.d * o.d)
    }
    fn div(self, o: Q) -> Q {
        Q::new(self.n * o.d, self.d * o.n)
    }
    fn to_rational(self) -> Rational {
        Rational::new(BigInt::from(self.n), BigInt::from(self.d))
    }
}

/// `(L, M)` with `M / L = a^{-1}` and `L > 0`, or `None` if `a` is singular.
fn scaled_inverse(a: &[Vec<i64>]) -> Option<(i128, Vec<Vec<i128>>)> {
    let k = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut v: Vec<Q> = row.iter().map(|&c| Q::int(c as i128)).collect();
            v.extend((0..k).map(|c| Q::int((c == r) as i128)));
            v
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col];
        for c in 0..2 * k {
            m[col][c] = m[col][c].div(p);
        }
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                for c in 0..2 * k {
                    let t = m[col][c].mul(f);
                    m[r][c] = m[r][c].sub(t);
                }
            }
        }
    }
    let mut l: i128 = 1;
    for row in &m {
        for q in &row[k..] {
            l = l / gcd(l, q.d) * q.d;
        }
    }
    let scaled = m
        .iter()
        .map(|row| row[k..].iter().map(|q| q.n * (l / q.d)).collect())
        .collect();
    Some((l, scaled))
}

struct Split<'a> {
    p: &'a PolytopeDescription,
    general: Vec<usize>,
    /// per variable, the bound rows as `(coefficient, rhs)`
    bounds: Vec<Vec<(i64, i64)>>,
}

impl<'a> Split<'a> {
    fn new(p: &'a PolytopeDescription) -> Self {
        let mut general = Vec::new();
        let mut bounds = vec![Vec::new(); p.dim];
        for (k, r) in p.rows.iter().enumerate() {
            match r.bound_of() {
                Some((i, c)) => {
                    if !bounds[i].contains(&(c, r.rhs)) {
                        bounds[i].push((c, r.rhs));
                    }
                }
                None => general.push(k),
            }
        }
        Split { p, general, bounds }
    }

    /// Every (S, F) pair of equal size, with S a subset of the general rows.
    fn blocks(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.p.dim;
        let mut out = Vec::new();
        for k in 0..=n.min(self.general.len()) {
            for s in self.general.iter().copied().combinations(k) {
                for f in (0..n).combinations(k) {
                    out.push((s.clone(), f));
                }
            }
        }
        out
    }

    /// Calls `visit(x_b, F, y, L)` for every bound choice on the complement of
    /// `f`, where `x_F = y / L` solves the block with right-hand side `rhs_of`.
    fn for_each_solution(
        &self,
        s: &[usize],
        f: &[usize],
        rhs_of: impl Fn(usize) -> i128,
        bound_value: impl Fn(i64, i64) -> i128,
        mut visit: impl FnMut(&[i128], &[i128], i128),
    ) {
        let n = self.p.dim;
        let block: Vec<Vec<i64>> = s
            .iter()
            .map(|&r| f.iter().map(|&j| self.p.rows[r].coeffs[j]).collect())
            .collect();
        let Some((l, inv)) = scaled_inverse(&block) else {
            return;
        };
        let in_f: Vec<bool> = (0..n).map(|j| f.contains(&j)).collect();
        let b_vars: Vec<usize> = (0..n).filter(|&j| !in_f[j]).collect();
        if b_vars.iter().any(|&j| self.bounds[j].is_empty()) {
            return;
        }
        let mut choice = vec![0usize; b_vars.len()];
        let mut x_full = vec![0i128; n];
        loop {
            for (t, &j) in b_vars.iter().enumerate() {
                let (c, r) = self.bounds[j][choice[t]];
                x_full[j] = bound_value(c, r);
            }
            let resid: Vec<i128> = s
                .iter()
                .map(|&r| {
                    let row = &self.p.rows[r].coeffs;
                    rhs_of(r) - b_vars.iter().map(|&j| row[j] as i128 * x_full[j]).sum::<i128>()
                })
                .collect();
            let y: Vec<i128> = inv
                .iter()
                .map(|row| row.iter().zip(&resid).map(|(a, b)| a * b).sum())
                .collect();
            visit(&x_full, &y, l);
            // next bound choice, odometer style
            let mut t = 0;
            loop {
                if t == b_vars.len() {
                    return;
                }
                choice[t] += 1;
                if choice[t] < self.bounds[b_vars[t]].len() {
                    break;
                }
                choice[t] = 0;
                t += 1;
            }
        }
    }
}

/// All vertices of the polytope, with the optimal ones marked.
pub fn enumerate_vertices(p: &PolytopeDescription, caps: EnumCaps) -> Result<VertexSet, OracleError> {
    caps.check(p)?;
    let split = Split::new(p);
    let n = p.dim;
    let found: Vec<Vec<Q>> = split
        .blocks()
        .par_iter()
        .map(|(s, f)| {
            let mut local = Vec::new();
            split.for_each_solution(
                s,
                f,
                |r| p.rows[r].rhs as i128,
                |c, r| (c * r) as i128, // c = +-1, so x = r / c = c * r
                |x_b, y, l| {
                    // scaled point: L * x
                    let mut scaled = vec![0i128; n];
                    for j in 0..n {
                        scaled[j] = x_b[j] * l;
                    }
                    for (t, &j) in f.iter().enumerate() {
                        scaled[j] = y[t];
                    }
                    let feasible = p.rows.iter().all(|row| {
                        let lhs: i128 = row.coeffs.iter().zip(&scaled).map(|(&c, &v)| c as i128 * v).sum();
                        let rhs = row.rhs as i128 * l;
                        match row.relation {
                            Relation::Ge => lhs >= rhs,
                            Relation::Eq => lhs == rhs,
                        }
                    });
                    if feasible {
                        local.push(scaled.iter().map(|&v| Q::new(v, l)).collect());
                    }
                },
            );
            local
        })
        .flatten()
        .collect();
    let unique: HashSet<Vec<Q>> = found.into_iter().collect();
    let mut vertices: Vec<Vec<Rational>> = unique
        .into_iter()
        .map(|v| v.into_iter().map(Q::to_rational).collect())
        .collect();
    vertices.sort();
    let values: Vec<Rational> = vertices.iter().map(|v| p.value(v)).collect();
    let optimum = match p.sense {
        Sense::Minimize => values.iter().min().cloned(),
        Sense::Maximize => values.iter().max().cloned(),
    };
    let optimal = match &optimum {
        Some(o) => (0..vertices.len()).filter(|&k| &values[k] == o).collect(),
        None => Vec::new(),
    };
    Ok(VertexSet { vertices, optimal, optimum })
}

/// `K = max over invertible square subsystems of ||A_xi^{-1} 1||_1`, without
/// row normalisation. `None` when no square subsystem is invertible.
pub fn lemma1_constant(p: &PolytopeDescription, caps: EnumCaps) -> Result<Option<Rational>, OracleError> {
    caps.check(p)?;
    let split = Split::new(p);
    let best: Option<Q> = split
        .blocks()
        .par_iter()
        .filter_map(|(s, f)| {
            let mut best: Option<Q> = None;
            split.for_each_solution(
                s,
                f,
                |_| 1,
                |c, _| c as i128, // c * z = 1 with c = +-1
                |_, y, l| {
                    let bound_part = (p.dim - f.len()) as i128;
                    let norm = Q::new(bound_part * l + y.iter().map(|v| v.abs()).sum::<i128>(), l);
                    if best.is_none_or(|b| q_less(b, norm)) {
                        best = Some(norm);
                    }
                },
            );
            best
        })
        .reduce_with(|a, b| if q_less(a, b) { b } else { a });
    Ok(best.map(Q::to_rational))
}

fn q_less(a: Q, b: Q) -> bool {
    a.n * b.d < b.n * a.d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{half, int};

    #[test]
    fn unit_interval_vertices() {
        let v = enumerate_vertices(&PolytopeDescription::unit_box(1), EnumCaps::default()).unwrap();
        assert_eq!(v.vertices, vec![vec![int(0)], vec![int(1)]]);
    }

    #[test]
    fn triangle_matching_polytope_has_half_vertex() {
        // edges 01, 12, 20; every vertex has degree exactly one
        let rows = vec![
            PolyRow::eq(vec![1, 0, 1], 1),
            PolyRow::eq(vec![1, 1, 0], 1),
            PolyRow::eq(vec![0, 1, 1], 1),
        ];
        let p = PolytopeDescription::with_box(rows, &[1, 1, 1], vec![int(1); 3], Sense::Maximize);
        let v = enumerate_vertices(&p, EnumCaps::default()).unwrap();
        assert_eq!(v.vertices, vec![vec![half(), half(), half()]]);
    }

    #[test]
    fn box_constants() {
        let k1 = lemma1_constant(&PolytopeDescription::unit_box(1), EnumCaps::default()).unwrap();
        assert_eq!(k1, Some(int(1)));
        let k2 = lemma1_constant(&PolytopeDescription::unit_box(2), EnumCaps::default()).unwrap();
        assert_eq!(k2, Some(int(2)));
    }

    #[test]
    fn caps_are_enforced() {
        let p = PolytopeDescription::unit_box(11);
        assert!(matches!(
            enumerate_vertices(&p, EnumCaps::default()),
            Err(OracleError::CapExceeded { what: "dimension", .. })
        ));
        let p = PolytopeDescription::with_box(
            vec![PolyRow::ge(vec![1; 10], 1); 5],
            &[1; 10],
            vec![int(0); 10],
            Sense::Minimize,
        );
        assert!(matches!(
            enumerate_vertices(&p, EnumCaps::default()),
            Err(OracleError::CapExceeded { what: "rows", .. })
        ));
    }

    #[test]
    fn general_bounds_and_upper_limits() {
        // 0 <= x <= 3, x + y >= 2, 0 <= y <= 1
        let rows = vec![PolyRow::ge(vec![1, 1], 2)];
        let p = PolytopeDescription::with_box(rows, &[3, 1], vec![int(1), int(1)], Sense::Minimize);
        let v = enumerate_vertices(&p, EnumCaps::default()).unwrap();
        let expected = vec![
            vec![int(1), int(1)],
            vec![int(2), int(0)],
            vec![int(3), int(0)],
            vec![int(3), int(1)],
        ];
        assert_eq!(v.vertices, expected);
        assert_eq!(v.optimum, Some(int(2)));
        assert_eq!(v.optimal.len(), 2);
    }

    #[test]
    fn empty_polytope_has_no_vertices() {
        let rows = vec![PolyRow::ge(vec![1, 1], 3)];
        let p = PolytopeDescription::with_box(rows, &[1, 1], vec![int(0); 2], Sense::Minimize);
        let v = enumerate_vertices(&p, EnumCaps::default()).unwrap();
        assert!(v.vertices.is_empty());
        assert_eq!(v.optimum, None);
    }
}
