use std::collections::BTreeMap;

use crate::model::{Callback, Cmp, Op, Successors};

use super::Path;

/// Window the witness is first searched in, to keep inputs readable.
pub const SOLVER_WINDOW: (i64, i64) = (-1000, 1000);

/// Disjoint, sorted, inclusive integer intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet(Vec<(i64, i64)>);

impl IntervalSet {
    pub fn full() -> Self {
        IntervalSet(vec![(i64::MIN, i64::MAX)])
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        if lo > hi {
            IntervalSet(Vec::new())
        } else {
            IntervalSet(vec![(lo, hi)])
        }
    }

    /// Values satisfying `v cmp c`.
    pub fn atom(cmp: Cmp, c: i64) -> Self {
        let below = |c: i64| c.checked_sub(1).map(|h| (i64::MIN, h));
        let above = |c: i64| c.checked_add(1).map(|l| (l, i64::MAX));
        let parts: Vec<(i64, i64)> = match cmp {
            Cmp::Lt => below(c).into_iter().collect(),
            Cmp::Le => vec![(i64::MIN, c)],
            Cmp::Eq => vec![(c, c)],
            Cmp::Ne => below(c).into_iter().chain(above(c)).collect(),
            Cmp::Gt => above(c).into_iter().collect(),
            Cmp::Ge => vec![(c, i64::MAX)],
        };
        IntervalSet(parts)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            let lo = a.0.max(b.0);
            let hi = a.1.min(b.1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a.1 < b.1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet(out)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> Option<i64> {
        self.0.first().map(|r| r.0)
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Feasible(BTreeMap<String, i64>),
    Infeasible(String),
}

/// Per-variable interval conditions accumulated along a path.
pub fn path_condition(path: &Path, cb: &Callback) -> BTreeMap<String, IntervalSet> {
    let mut cond: BTreeMap<String, IntervalSet> = BTreeMap::new();
    for pair in path.nodes.windows(2) {
        let node = cb.node(&pair[0]).expect("path over callback");
        let (Op::Branch { var, cmp, constant }, Successors::Branch { then, .. }) =
            (&node.op, &node.succ)
        else {
            continue;
        };
        let cmp = if *then == pair[1] { *cmp } else { cmp.negate() };
        let set = cond.entry(var.clone()).or_insert_with(IntervalSet::full);
        *set = set.intersect(&IntervalSet::atom(cmp, *constant));
    }
    cond
}

/// Minimum witness per variable, searched in [`SOLVER_WINDOW`] first. With a
/// `domain`, every parameter is restricted to it and there is no fallback.
/// Parameters the path does not constrain get 0, or the domain minimum when
/// 0 lies outside the domain.
pub fn solve_path_condition(path: &Path, cb: &Callback, domain: Option<(i64, i64)>) -> Solution {
    let cond = path_condition(path, cb);
    let mut inputs = BTreeMap::new();
    for p in &cb.params {
        let set = cond.get(p).cloned().unwrap_or_else(IntervalSet::full);
        let value = match domain {
            Some((lo, hi)) => {
                let restricted = set.intersect(&IntervalSet::range(lo, hi));
                if !cond.contains_key(p) && (lo..=hi).contains(&0) {
                    Some(0)
                } else {
                    restricted.min()
                }
            }
            None if !cond.contains_key(p) => Some(0),
            None => {
                let window = set.intersect(&IntervalSet::range(SOLVER_WINDOW.0, SOLVER_WINDOW.1));
                window.min().or_else(|| set.min())
            }
        };
        match value {
            Some(v) => {
                inputs.insert(p.clone(), v);
            }
            None => return Solution::Infeasible(format!("no value of `{p}` satisfies the path")),
        }
    }
    Solution::Feasible(inputs)
}
