use super::{GraphError, VarId};

/// Largest scope the generic enumerative evaluator accepts.
pub const GENERIC_SCOPE_CAP: usize = 25;
/// Largest scope whose local feasibility is checked (and cached) exhaustively.
pub const EXHAUSTIVE_SCOPE_CAP: usize = 20;

/// One integer row `coeffs . x_scope (= or >=) rhs`, coefficients aligned with the scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRow {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<i64>, rhs: i64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn dot(&self, local: &[u8]) -> i64 {
        self.coeffs
            .iter()
            .zip(local)
            .map(|(&c, &x)| c * x as i64)
            .sum()
    }

    fn dot_mask(&self, mask: u32) -> i64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Selects a fast max-marginal routine. The row system stays the source of
/// truth; a hint must describe exactly the same feasible set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hint {
    Generic,
    /// `sum x = d`
    DegreeEq(i64),
    /// `sum x <= b`
    DegreeLe(i64),
    /// `sum x >= b`
    DegreeGe(i64),
    /// `sum signs_j x_j = demand` with every sign in {-1, +1}.
    SignedConservation { demand: i64, signs: Vec<i8> },
    /// Blossom variables of an odd cycle, scope listed in cycle order.
    OddCycleBlossom,
}

/// An indicator factor over a subset of binary variables.
#[derive(Debug, Clone)]
pub struct Factor {
    pub(crate) scope: Vec<VarId>,
    pub(crate) eq_rows: Vec<LinearRow>,
    pub(crate) ineq_rows: Vec<LinearRow>,
    pub(crate) hint: Hint,
    /// Feasible local assignments as bit masks; filled at graph build for
    /// generic factors within the exhaustive cap.
    pub(crate) feasible: Option<Vec<u32>>,
}

impl Factor {
    /// A generic factor `eq_rows . x = rhs`, `ineq_rows . x >= rhs`.
    pub fn new(scope: Vec<VarId>, eq_rows: Vec<LinearRow>, ineq_rows: Vec<LinearRow>) -> Self {
        Self {
            scope,
            eq_rows,
            ineq_rows,
            hint: Hint::Generic,
            feasible: None,
        }
    }

    pub fn degree_eq(scope: Vec<VarId>, degree: i64) -> Self {
        let row = LinearRow::new(vec![1; scope.len()], degree);
        Self {
            eq_rows: vec![row],
            ineq_rows: Vec::new(),
            hint: Hint::DegreeEq(degree),
            feasible: None,
            scope,
        }
    }

    pub fn degree_le(scope: Vec<VarId>, bound: i64) -> Self {
        let row = LinearRow::new(vec![-1; scope.len()], -bound);
        Self {
            eq_rows: Vec::new(),
            ineq_rows: vec![row],
            hint: Hint::DegreeLe(bound),
            feasible: None,
            scope,
        }
    }

    pub fn degree_ge(scope: Vec<VarId>, bound: i64) -> Self {
        let row = LinearRow::new(vec![1; scope.len()], bound);
        Self {
            eq_rows: Vec::new(),
            ineq_rows: vec![row],
            hint: Hint::DegreeGe(bound),
            feasible: None,
            scope,
        }
    }

    /// `sum_out x - sum_in x = demand`; `signs[k]` is +1 for outgoing, -1 for incoming.
    pub fn signed_conservation(scope: Vec<VarId>, signs: Vec<i8>, demand: i64) -> Self {
        let row = LinearRow::new(signs.iter().map(|&s| s as i64).collect(), demand);
        Self {
            eq_rows: vec![row],
            ineq_rows: Vec::new(),
            hint: Hint::SignedConservation { demand, signs },
            feasible: None,
            scope,
        }
    }

    /// Blossom factor of an odd cycle: for every cycle edge the signed
    /// parity sum lies in [0, 2], and at most `|C| - 1` blossom variables are on.
    /// `scope[k]` is the blossom variable of the k-th cycle vertex.
    pub fn odd_cycle_blossom(scope: Vec<VarId>) -> Self {
        let len = scope.len();
        let mut ineq_rows = Vec::with_capacity(2 * len + 1);
        for edge in 0..len {
            let coeffs: Vec<i64> = (0..len)
                .map(|u| {
                    if cycle_vertex_edge_distance(len, u, edge).is_multiple_of(2) {
                        1
                    } else {
                        -1
                    }
                })
                .collect();
            let neg: Vec<i64> = coeffs.iter().map(|c| -c).collect();
            ineq_rows.push(LinearRow::new(coeffs, 0));
            ineq_rows.push(LinearRow::new(neg, -2));
        }
        ineq_rows.push(LinearRow::new(vec![-1; len], -(len as i64 - 1)));
        Self {
            scope,
            eq_rows: Vec::new(),
            ineq_rows,
            hint: Hint::OddCycleBlossom,
            feasible: None,
        }
    }

    /// Replaces the hint; the caller asserts it matches the rows.
    pub fn with_hint(mut self, hint: Hint) -> Self {
        self.hint = hint;
        self
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn len(&self) -> usize {
        self.scope.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scope.is_empty()
    }

    pub fn eq_rows(&self) -> &[LinearRow] {
        &self.eq_rows
    }

    pub fn ineq_rows(&self) -> &[LinearRow] {
        &self.ineq_rows
    }

    pub fn hint(&self) -> &Hint {
        &self.hint
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Indicator value through the row system.
    pub fn eval(&self, local: &[u8]) -> Result<bool, GraphError> {
        if local.len() != self.scope.len() {
            return Err(GraphError::LengthMismatch {
                expected: self.scope.len(),
                got: local.len(),
            });
        }
        Ok(self.eval_rows(local))
    }

    pub(crate) fn eval_rows(&self, local: &[u8]) -> bool {
        self.eq_rows.iter().all(|r| r.dot(local) == r.rhs)
            && self.ineq_rows.iter().all(|r| r.dot(local) >= r.rhs)
    }

    pub(crate) fn eval_rows_mask(&self, mask: u32) -> bool {
        self.eq_rows.iter().all(|r| r.dot_mask(mask) == r.rhs)
            && self.ineq_rows.iter().all(|r| r.dot_mask(mask) >= r.rhs)
    }

    /// Indicator value through the hint's closed form (rows for `Generic`).
    pub fn eval_hint(&self, local: &[u8]) -> bool {
        let ones = local.iter().filter(|&&x| x == 1).count() as i64;
        match &self.hint {
            Hint::Generic => self.eval_rows(local),
            Hint::DegreeEq(d) => ones == *d,
            Hint::DegreeLe(b) => ones <= *b,
            Hint::DegreeGe(b) => ones >= *b,
            Hint::SignedConservation { demand, signs } => {
                signs
                    .iter()
                    .zip(local)
                    .map(|(&s, &x)| s as i64 * x as i64)
                    .sum::<i64>()
                    == *demand
            }
            Hint::OddCycleBlossom => cyclic_runs_even(local),
        }
    }

    /// Exhaustive hint/row agreement; `None` when the scope exceeds the cap.
    pub fn hint_agrees(&self) -> Option<bool> {
        let n = self.scope.len();
        if n > EXHAUSTIVE_SCOPE_CAP {
            return None;
        }
        let mut local = vec![0u8; n];
        Some((0u32..1 << n).all(|mask| {
            fill_local(mask, &mut local);
            self.eval_rows(&local) == self.eval_hint(&local)
        }))
    }

    /// Whether some local assignment satisfies the factor.
    pub(crate) fn locally_feasible(&self) -> Result<bool, usize> {
        let n = self.scope.len();
        if n <= EXHAUSTIVE_SCOPE_CAP {
            return Ok((0u32..1 << n).any(|m| self.eval_rows_mask(m)));
        }
        let n = n as i64;
        match &self.hint {
            Hint::DegreeEq(d) => Ok((0..=n).contains(d)),
            Hint::DegreeLe(b) => Ok(*b >= 0),
            Hint::DegreeGe(b) => Ok(*b <= n),
            Hint::SignedConservation { demand, signs } => {
                let pos = signs.iter().filter(|&&s| s > 0).count() as i64;
                let neg = signs.len() as i64 - pos;
                Ok((-neg..=pos).contains(demand))
            }
            Hint::OddCycleBlossom => Ok(true),
            Hint::Generic if n as usize <= GENERIC_SCOPE_CAP => {
                Ok((0u32..1 << n).any(|m| self.eval_rows_mask(m)))
            }
            Hint::Generic => Err(n as usize),
        }
    }

    pub(crate) fn cache_feasible(&mut self) {
        if self.hint == Hint::Generic && self.scope.len() <= EXHAUSTIVE_SCOPE_CAP {
            let n = self.scope.len();
            self.feasible = Some((0u32..1 << n).filter(|&m| self.eval_rows_mask(m)).collect());
        }
    }

    /// All feasible local assignments as masks (bit k = scope position k).
    /// Panics if the scope exceeds the generic cap.
    pub fn feasible_masks(&self) -> Vec<u32> {
        if let Some(f) = &self.feasible {
            return f.clone();
        }
        let n = self.scope.len();
        assert!(n <= GENERIC_SCOPE_CAP, "scope of {n} exceeds the enumeration cap");
        (0u32..1 << n).filter(|&m| self.eval_rows_mask(m)).collect()
    }

    pub(crate) fn for_each_feasible(&self, mut f: impl FnMut(u32)) {
        match &self.feasible {
            Some(masks) => masks.iter().for_each(|&m| f(m)),
            None => {
                let n = self.scope.len();
                assert!(n <= GENERIC_SCOPE_CAP, "scope of {n} exceeds the enumeration cap");
                for m in 0u32..1 << n {
                    if self.eval_rows_mask(m) {
                        f(m);
                    }
                }
            }
        }
    }
}

pub(crate) fn fill_local(mask: u32, local: &mut [u8]) {
    for (k, x) in local.iter_mut().enumerate() {
        *x = (mask >> k & 1) as u8;
    }
}

/// Graph distance, inside a cycle of `len` vertices, between vertex `u` and
/// the edge joining vertices `edge` and `edge + 1 (mod len)`.
pub fn cycle_vertex_edge_distance(len: usize, u: usize, edge: usize) -> usize {
    let d = |a: usize, b: usize| {
        let diff = a.abs_diff(b);
        diff.min(len - diff)
    };
    d(u, edge).min(d(u, (edge + 1) % len))
}

/// True iff the ones of a cyclic 0/1 sequence split into maximal runs of even
/// length and at least one entry is zero, i.e. the ones are exactly the
/// vertices covered by some matching of the cycle.
pub fn cyclic_runs_even(local: &[u8]) -> bool {
    let n = local.len();
    let Some(start) = local.iter().position(|&x| x == 0) else {
        return false;
    };
    let mut run = 0usize;
    for k in 1..=n {
        if local[(start + k) % n] == 1 {
            run += 1;
        } else {
            if run % 2 == 1 {
                return false;
            }
            run = 0;
        }
    }
    true
}
