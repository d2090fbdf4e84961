use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::TestgenError;
use crate::digest::{fnv1a64, Digest64};
use crate::model::Callback;

/// One entry-to-exit walk through a callback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path {
    pub callback: String,
    pub nodes: Vec<String>,
    pub path_id: Digest64,
}

/// Digest of node ids joined by `/`.
pub fn path_id<S: AsRef<str>>(ids: &[S]) -> Digest64 {
    let joined = ids.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("/");
    fnv1a64(joined.as_bytes())
}

/// Edges that close a cycle in a depth-first walk from the entry that
/// visits `then` before `else`.
pub fn back_edges(cb: &Callback) -> BTreeSet<(String, String)> {
    let mut back = BTreeSet::new();
    let mut state: BTreeMap<&str, u8> = BTreeMap::new(); // 1 on stack, 2 done
    // Iterative DFS: (node, index of next successor to explore).
    let mut stack: Vec<(&str, usize)> = vec![(cb.entry.as_str(), 0)];
    state.insert(cb.entry.as_str(), 1);
    while let Some((id, i)) = stack.last_mut() {
        let node = cb.node(id).expect("validated callback");
        let targets = node.targets();
        if *i >= targets.len() {
            state.insert(*id, 2);
            stack.pop();
            continue;
        }
        let t = targets[*i];
        let from = *id;
        *i += 1;
        match state.get(t) {
            Some(1) => {
                back.insert((from.to_string(), t.to_string()));
            }
            Some(_) => {}
            None => {
                state.insert(t, 1);
                stack.push((t, 0));
            }
        }
    }
    back
}

/// All entry-to-exit paths that take no back edge more than `loop_bound`
/// times, depth-first with `then` before `else`.
pub fn enumerate_paths(
    cb: &Callback,
    loop_bound: u32,
    max_paths: usize,
) -> Result<Vec<Path>, TestgenError> {
    let back = back_edges(cb);
    let mut walker = Walker {
        cb,
        back: &back,
        loop_bound,
        max_paths,
        taken: BTreeMap::new(),
        current: vec![cb.entry.clone()],
        out: Vec::new(),
    };
    walker.walk(&cb.entry)?;
    Ok(walker.out)
}

struct Walker<'a> {
    cb: &'a Callback,
    back: &'a BTreeSet<(String, String)>,
    loop_bound: u32,
    max_paths: usize,
    taken: BTreeMap<(String, String), u32>,
    current: Vec<String>,
    out: Vec<Path>,
}

impl Walker<'_> {
    fn walk(&mut self, id: &str) -> Result<(), TestgenError> {
        let node = self.cb.node(id).expect("validated callback");
        let targets: Vec<String> = node.targets().into_iter().map(String::from).collect();
        if targets.is_empty() {
            if self.out.len() == self.max_paths {
                return Err(TestgenError::PathExplosion {
                    callback: self.cb.name.clone(),
                    limit: self.max_paths,
                });
            }
            self.out.push(Path {
                callback: self.cb.name.clone(),
                path_id: path_id(&self.current),
                nodes: self.current.clone(),
            });
            return Ok(());
        }
        for t in targets {
            let edge = (id.to_string(), t.clone());
            let is_back = self.back.contains(&edge);
            if is_back {
                let n = self.taken.entry(edge.clone()).or_default();
                if *n >= self.loop_bound {
                    continue;
                }
                *n += 1;
            }
            self.current.push(t.clone());
            let r = self.walk(&t);
            self.current.pop();
            if is_back {
                *self.taken.get_mut(&edge).expect("counted above") -= 1;
            }
            r?;
        }
        Ok(())
    }
}
