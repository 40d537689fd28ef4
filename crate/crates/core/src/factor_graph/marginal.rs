//! Factor max-marginals in log-ratio form.
//!
//! For a pinned position `i` and value `c`, the max-marginal is the best
//! `sum_{j != i, z_j = 1} lambda_j` over feasible local assignments with
//! `z_i = c`. An incoming `+inf` forces `z_j = 1` (and contributes nothing),
//! `-inf` forces `z_j = 0`. No feasible completion gives `NegInf`.

use super::factor::{Factor, Hint};
use crate::ext_real::ExtReal;

struct Split {
    forced_one: Vec<usize>,
    free: Vec<(usize, f64)>,
}

fn split(incoming: &[ExtReal], pin: usize) -> Split {
    let mut forced_one = Vec::new();
    let mut free = Vec::new();
    for (j, &l) in incoming.iter().enumerate() {
        if j == pin {
            continue;
        }
        match l {
            ExtReal::PosInf => forced_one.push(j),
            ExtReal::NegInf => {}
            ExtReal::Finite(x) => free.push((j, x)),
        }
    }
    Split { forced_one, free }
}

fn sorted_desc(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn prefix_sums(sorted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sorted.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for &x in sorted {
        acc += x;
        out.push(acc);
    }
    out
}

impl Factor {
    /// Max-marginal at scope position `pin` with value `c`, using the hint's
    /// specialised routine when available.
    pub fn max_marginal(&self, pin: usize, c: u8, incoming: &[ExtReal]) -> ExtReal {
        assert_eq!(incoming.len(), self.scope.len());
        assert!(pin < self.scope.len() && c <= 1);
        let c = c as i64;
        match &self.hint {
            Hint::Generic => self.generic_max_marginal(pin, c as u8, incoming),
            Hint::DegreeEq(d) => {
                let s = split(incoming, pin);
                let need = d - c - s.forced_one.len() as i64;
                if need < 0 || need as usize > s.free.len() {
                    return ExtReal::NegInf;
                }
                let top = sorted_desc(s.free.iter().map(|p| p.1));
                ExtReal::Finite(top[..need as usize].iter().sum())
            }
            Hint::DegreeLe(b) => {
                let s = split(incoming, pin);
                let cap = b - c - s.forced_one.len() as i64;
                if cap < 0 {
                    return ExtReal::NegInf;
                }
                let top = sorted_desc(s.free.iter().map(|p| p.1));
                ExtReal::Finite(top.iter().take(cap as usize).filter(|&&x| x > 0.0).sum())
            }
            Hint::DegreeGe(b) => {
                let s = split(incoming, pin);
                let need = (b - c - s.forced_one.len() as i64).max(0) as usize;
                if need > s.free.len() {
                    return ExtReal::NegInf;
                }
                let top = sorted_desc(s.free.iter().map(|p| p.1));
                let (forced, rest) = top.split_at(need);
                let total: f64 = forced.iter().chain(rest.iter().filter(|&&x| x > 0.0)).sum();
                ExtReal::Finite(total)
            }
            Hint::SignedConservation { demand, signs } => {
                let s = split(incoming, pin);
                let mut residual = demand - signs[pin] as i64 * c;
                for &j in &s.forced_one {
                    residual -= signs[j] as i64;
                }
                let outs = sorted_desc(s.free.iter().filter(|p| signs[p.0] > 0).map(|p| p.1));
                let ins = sorted_desc(s.free.iter().filter(|p| signs[p.0] < 0).map(|p| p.1));
                let (po, pi) = (prefix_sums(&outs), prefix_sums(&ins));
                // choose p outgoing and q incoming with p - q = residual
                let mut best = ExtReal::NegInf;
                for p in 0..=outs.len() {
                    let q = p as i64 - residual;
                    if q < 0 || q as usize > ins.len() {
                        continue;
                    }
                    best = best.max(ExtReal::Finite(po[p] + pi[q as usize]));
                }
                best
            }
            Hint::OddCycleBlossom => blossom_max_marginal(pin, c == 1, incoming),
        }
    }

    /// Max-marginal by enumerating feasible local assignments.
    pub fn generic_max_marginal(&self, pin: usize, c: u8, incoming: &[ExtReal]) -> ExtReal {
        assert_eq!(incoming.len(), self.scope.len());
        let mut best = ExtReal::NegInf;
        self.for_each_feasible(|mask| {
            if (mask >> pin & 1) as u8 != c {
                return;
            }
            if let Some(v) = completion_value(mask, pin, incoming) {
                best = best.max(ExtReal::Finite(v));
            }
        });
        best
    }

    /// Log-ratio factor-to-variable messages `M_p(1) - M_p(0)` for every scope position.
    pub fn outgoing_log_ratios(&self, incoming: &[ExtReal]) -> Vec<ExtReal> {
        let n = self.scope.len();
        if self.hint == Hint::Generic {
            let mut best = vec![[ExtReal::NegInf; 2]; n];
            self.for_each_feasible(|mask| {
                for (pin, slot) in best.iter_mut().enumerate() {
                    if let Some(v) = completion_value(mask, pin, incoming) {
                        let c = (mask >> pin & 1) as usize;
                        slot[c] = slot[c].max(ExtReal::Finite(v));
                    }
                }
            });
            best.into_iter().map(|[m0, m1]| m1 - m0).collect()
        } else {
            (0..n)
                .map(|p| self.max_marginal(p, 1, incoming) - self.max_marginal(p, 0, incoming))
                .collect()
        }
    }
}

/// Sum of finite incoming values over the ones of `mask` other than `pin`;
/// `None` when the mask contradicts a forced incoming value.
fn completion_value(mask: u32, pin: usize, incoming: &[ExtReal]) -> Option<f64> {
    let mut total = 0.0;
    for (j, &l) in incoming.iter().enumerate() {
        if j == pin {
            continue;
        }
        let on = mask >> j & 1 == 1;
        match (l, on) {
            (ExtReal::PosInf, false) | (ExtReal::NegInf, true) => return None,
            (ExtReal::Finite(x), true) => total += x,
            _ => {}
        }
    }
    Some(total)
}

/// Feasible blossom assignments are exactly the vertex sets covered by a
/// matching of the cycle, so the max-marginal is a max-weight matching on the
/// path left after fixing the pinned vertex.
fn blossom_max_marginal(pin: usize, covered: bool, incoming: &[ExtReal]) -> ExtReal {
    let len = incoming.len();
    let at = |k: usize| (pin + k) % len;
    let value = |j: usize| -> ExtReal {
        match incoming[j] {
            ExtReal::NegInf => ExtReal::NegInf,
            ExtReal::PosInf => ExtReal::ZERO,
            f => f,
        }
    };
    if !covered {
        let path: Vec<usize> = (1..len).map(at).collect();
        return path_matching(&path, incoming, &value);
    }
    // pinned vertex matched to its successor or to its predecessor
    let next = at(1);
    let prev = at(len - 1);
    let with_next: Vec<usize> = (2..len).map(at).collect();
    let with_prev: Vec<usize> = (1..len - 1).map(at).collect();
    let a = value(next) + path_matching(&with_next, incoming, &value);
    let b = value(prev) + path_matching(&with_prev, incoming, &value);
    a.max(b)
}

fn path_matching(path: &[usize], incoming: &[ExtReal], value: &dyn Fn(usize) -> ExtReal) -> ExtReal {
    // best[k]: every vertex among the first k decided
    let mut best = vec![ExtReal::NegInf; path.len() + 1];
    best[0] = ExtReal::ZERO;
    for k in 1..=path.len() {
        let v = path[k - 1];
        let mut b = ExtReal::NegInf;
        if incoming[v] != ExtReal::PosInf {
            b = best[k - 1];
        }
        if k >= 2 {
            let u = path[k - 2];
            b = b.max(best[k - 2] + value(u) + value(v));
        }
        best[k] = b;
    }
    best[path.len()]
}
