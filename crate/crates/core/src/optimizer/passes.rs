//! The classification pipeline.
//!
//! A node is *resolved* once its class is fixed and everything it references
//! is resolved. Passes may reference unresolved nodes as long as no cycle
//! forms; resolution order is then a valid topological order.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::combo;
use super::linalg::{self, check_lincomb, plane_key};
use super::{BlockSet, DependencyClass, DependencyGraph, DependencyNode, Histogram, Owner};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassConfig {
    /// Upper bound on the number of candidate pairs held by the linear
    /// combination search. `None` means every pair of resolved nodes.
    pub lincomb_pair_cap: Option<usize>,
}

pub fn run_passes(blocks: &BlockSet) -> Result<DependencyGraph> {
    run_passes_with(blocks, &PassConfig::default())
}

struct State<'a> {
    values: Vec<&'a [Rational]>,
    negated: Vec<Vec<Rational>>,
    class: Vec<Option<DependencyClass>>,
    resolved: Vec<bool>,
    order: Vec<usize>,
    waiting: Vec<Vec<usize>>,
}

impl<'a> State<'a> {
    fn unmarked(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.class[i].is_none()).collect()
    }

    /// Fixes the class of `i` and resolves it (and anything waiting on it)
    /// as soon as its references are resolved.
    fn mark(&mut self, i: usize, class: DependencyClass) {
        let refs = class.references();
        self.class[i] = Some(class);
        match refs.iter().find(|&&r| !self.resolved[r]) {
            Some(&r) => self.waiting[r].push(i),
            None => self.resolve(i),
        }
    }

    fn resolve(&mut self, i: usize) {
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            if self.resolved[k] {
                continue;
            }
            let refs = self.class[k].as_ref().map(|c| c.references()).unwrap_or_default();
            if let Some(&r) = refs.iter().find(|&&r| !self.resolved[r]) {
                self.waiting[r].push(k);
                continue;
            }
            self.resolved[k] = true;
            self.order.push(k);
            stack.extend(std::mem::take(&mut self.waiting[k]));
        }
    }

    /// Whether `x` reaches `target` through class references.
    fn depends_on(&self, x: usize, target: usize) -> bool {
        let mut stack = vec![x];
        let mut seen = vec![false; self.values.len()];
        while let Some(k) = stack.pop() {
            if k == target {
                return true;
            }
            if std::mem::replace(&mut seen[k], true) {
                continue;
            }
            if let Some(c) = &self.class[k] {
                stack.extend(c.references());
            }
        }
        false
    }

    /// Positions where `v` and `s·w` differ, or `None` past `limit`.
    fn diff_positions(&self, v: usize, w: usize, negate: bool, limit: usize) -> Option<Vec<usize>> {
        let a = self.values[v];
        let b: &[Rational] = if negate { &self.negated[w] } else { self.values[w] };
        let mut out = Vec::with_capacity(limit);
        for (p, (x, y)) in a.iter().zip(b).enumerate() {
            if x != y {
                if out.len() == limit {
                    return None;
                }
                out.push(p);
            }
        }
        Some(out)
    }

    /// Earliest candidate within edit distance `limit` of `v`, trying `+w`
    /// before `-w`. Candidates that already depend on `v` are skipped.
    fn edit_match(&self, v: usize, limit: usize, candidates: &[usize]) -> Option<DependencyClass> {
        for &w in candidates {
            if w == v {
                continue;
            }
            for negate in [false, true] {
                let Some(pos) = self.diff_positions(v, w, negate, limit) else { continue };
                if pos.is_empty() || self.depends_on(w, v) {
                    continue;
                }
                let d = linalg::signed_diff(self.values[v], self.values[w], negate);
                return Some(match pos[..] {
                    [p] => DependencyClass::EditDist1 { of: w, negate, pos: p, delta: d[p].clone() },
                    [p, q] => DependencyClass::EditDist2 {
                        of: w,
                        negate,
                        pos1: p,
                        delta1: d[p].clone(),
                        pos2: q,
                        delta2: d[q].clone(),
                    },
                    _ => unreachable!("limit is at most two"),
                });
            }
        }
        None
    }

    /// Nonzero nodes that already have a class.
    fn marked(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.class[i].is_some() && !linalg::is_zero(self.values[i]))
            .collect()
    }

    /// One sweep over the unmarked nodes; returns whether anything was marked.
    fn edit_sweep(&mut self, limit: usize, among_unmarked: bool) -> bool {
        let mut found = false;
        for v in self.unmarked() {
            let cands = if among_unmarked { self.unmarked() } else { self.marked() };
            let hit = self
                .edit_match(v, 1, &cands)
                .or_else(|| (limit == 2).then(|| self.edit_match(v, 2, &cands)).flatten());
            if let Some(class) = hit {
                self.mark(v, class);
                found = true;
            }
        }
        found
    }
}

fn transpose(v: &[Rational], d: usize) -> Vec<Rational> {
    (0..d * d).map(|k| v[(k % d) * d + k / d].clone()).collect()
}

fn symmetric_part(v: &[Rational], d: usize) -> Vec<Rational> {
    let half = Rational::new(1.into(), 2.into());
    (0..d * d).map(|k| (&v[k] + &v[(k % d) * d + k / d]) * &half).collect()
}

pub fn run_passes_with(blocks: &BlockSet, config: &PassConfig) -> Result<DependencyGraph> {
    let n = blocks.blocks.len();
    for b in &blocks.blocks {
        if b.values.len() != blocks.input_len {
            return Err(Error::Dimension { expected: blocks.input_len, got: b.values.len() });
        }
    }
    let values: Vec<&[Rational]> = blocks.blocks.iter().map(|b| b.values.as_slice()).collect();
    let mut st = State {
        negated: values.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
        values,
        class: vec![None; n],
        resolved: vec![false; n],
        order: Vec::with_capacity(n),
        waiting: vec![Vec::new(); n],
    };

    // Helpers are computed directly and join the reference pool up front.
    for (i, b) in blocks.blocks.iter().enumerate() {
        if matches!(b.owner, Owner::Helper { .. }) {
            st.mark(i, default_class(st.values[i]));
        }
    }

    for i in st.unmarked() {
        if linalg::is_zero(st.values[i]) {
            st.mark(i, DependencyClass::Zero);
        }
    }

    let mut seen: BTreeMap<&[Rational], usize> = BTreeMap::new();
    for i in st.unmarked() {
        match seen.get(st.values[i]) {
            Some(&of) => st.mark(i, DependencyClass::Equal { of }),
            None => {
                seen.insert(st.values[i], i);
            }
        }
    }

    if blocks.symmetric_input && blocks.dim * blocks.dim == blocks.input_len {
        let d = blocks.dim;
        let mut by_sym: BTreeMap<Vec<Rational>, Vec<usize>> = BTreeMap::new();
        for i in st.unmarked() {
            let key = symmetric_part(st.values[i], d);
            let t = transpose(st.values[i], d);
            let hit = by_sym
                .get(&key)
                .and_then(|cands| cands.iter().copied().find(|&c| st.values[c] == t.as_slice()));
            match hit {
                Some(of) => st.mark(i, DependencyClass::TransposeOf { of }),
                None => by_sym.entry(key).or_default().push(i),
            }
        }
    }

    for i in st.unmarked() {
        let nz: Vec<usize> = (0..blocks.input_len).filter(|&p| !st.values[i][p].is_zero()).collect();
        if let [pos] = nz[..] {
            st.mark(i, DependencyClass::OneEntry { pos, coeff: st.values[i][pos].clone() });
        }
    }

    let mut dirs: BTreeMap<Vec<Rational>, usize> = BTreeMap::new();
    for i in st.unmarked() {
        let dir = linalg::direction(st.values[i])?;
        match dirs.get(&dir) {
            Some(&of) => {
                let alpha = linalg::first_nonzero(st.values[i]).expect("nonzero")
                    / linalg::first_nonzero(st.values[of]).expect("nonzero");
                st.mark(i, DependencyClass::Colinear { of, alpha });
            }
            None => {
                dirs.insert(dir, i);
            }
        }
    }

    // Against marked nodes until nothing changes, then once among the
    // remainders, and back again.
    for limit in [1, 2] {
        loop {
            while st.edit_sweep(limit, false) {}
            if !st.edit_sweep(limit, true) {
                break;
            }
        }
    }

    lincomb_pass(&mut st, config);

    for i in st.unmarked() {
        let c = default_class(st.values[i]);
        st.mark(i, c);
    }

    if st.order.len() != n {
        return Err(Error::Internal("dependency graph has unresolved nodes".into()));
    }
    Ok(build_graph(blocks, st))
}

fn default_class(v: &[Rational]) -> DependencyClass {
    DependencyClass::Default {
        terms: v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(p, c)| (p, c.clone())).collect(),
    }
}

/// Plane hashing: every pair of candidate nodes is filed under the canonical
/// key of its span, so `v` lies in some filed span iff `span{v, a}` is filed
/// for a candidate `a`.
///
/// Candidates are all other nonzero blocks, resolved or not; a pair is
/// rejected if either member already depends on `v`.
fn lincomb_pass(st: &mut State<'_>, config: &PassConfig) {
    let n = st.values.len();
    let members: Vec<usize> = (0..n).filter(|&i| !linalg::is_zero(st.values[i])).collect();
    let cap = config.lincomb_pair_cap.unwrap_or(usize::MAX);
    let mut planes: HashMap<Vec<Rational>, Vec<(usize, usize)>> = HashMap::new();
    let mut pairs = 0usize;
    'fill: for (k, &b) in members.iter().enumerate() {
        for &a in &members[..k] {
            if pairs >= cap {
                break 'fill;
            }
            if let Some(key) = plane_key(st.values[a], st.values[b]) {
                planes.entry(key).or_default().push((a, b));
                pairs += 1;
            }
        }
    }

    for v in st.unmarked() {
        let mut hit = None;
        'search: for &a in &members {
            if a == v {
                continue;
            }
            let Some(key) = plane_key(st.values[v], st.values[a]) else { continue };
            let Some(cands) = planes.get(&key) else { continue };
            for &(p, q) in cands {
                if p == v || q == v || st.depends_on(p, v) || st.depends_on(q, v) {
                    continue;
                }
                if let Some((c1, c2)) = check_lincomb(st.values[v], st.values[p], st.values[q]) {
                    hit = Some(DependencyClass::LinComb { of1: p, c1, of2: q, c2 });
                    break 'search;
                }
            }
        }
        if let Some(class) = hit {
            st.mark(v, class);
        }
    }
}

fn build_graph(blocks: &BlockSet, st: State<'_>) -> DependencyGraph {
    let n = blocks.blocks.len();
    let class: Vec<DependencyClass> = st.class.into_iter().map(|c| c.expect("classified")).collect();

    // Unused helpers are dropped.
    let mut used = vec![false; n];
    for (i, b) in blocks.blocks.iter().enumerate() {
        if matches!(b.owner, Owner::Entry { .. }) {
            used[i] = true;
        }
    }
    for &i in st.order.iter().rev() {
        if used[i] {
            for r in class[i].references() {
                used[r] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for i in 0..n {
        if used[i] {
            remap[i] = kept.len();
            kept.push(i);
        }
    }

    let mut histogram = Histogram::default();
    let mut nodes = Vec::with_capacity(kept.len());
    let mut total_maps = 0;
    for &i in &kept {
        let c = remap_class(&class[i], &remap);
        let plan = c.plan();
        let (cost, maps) = (combo::count(&plan), combo::slots(&plan));
        if matches!(blocks.blocks[i].owner, Owner::Entry { .. }) {
            histogram.record(&c);
        }
        total_maps += maps;
        nodes.push(DependencyNode { block: blocks.blocks[i].clone(), class: c, cost, maps });
    }
    let order = st.order.iter().filter(|&&i| used[i]).map(|&i| remap[i]).collect();

    DependencyGraph {
        form: blocks.form,
        degree: blocks.degree,
        dim: blocks.dim,
        nbasis: blocks.nbasis,
        input_len: blocks.input_len,
        symmetric_input: blocks.symmetric_input,
        nodes,
        order,
        total_maps,
        histogram,
    }
}

fn remap_class(c: &DependencyClass, m: &[usize]) -> DependencyClass {
    use DependencyClass::*;
    match c.clone() {
        Equal { of } => Equal { of: m[of] },
        TransposeOf { of } => TransposeOf { of: m[of] },
        Colinear { of, alpha } => Colinear { of: m[of], alpha },
        EditDist1 { of, negate, pos, delta } => EditDist1 { of: m[of], negate, pos, delta },
        EditDist2 { of, negate, pos1, delta1, pos2, delta2 } => {
            EditDist2 { of: m[of], negate, pos1, delta1, pos2, delta2 }
        }
        LinComb { of1, c1, of2, c2 } => LinComb { of1: m[of1], c1, of2: m[of2], c2 },
        other => other,
    }
}
