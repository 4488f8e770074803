//! H0 persistence of a 1D signal under the lower-star filtration.
//!
//! The signal is a path graph: vertex `i` enters at `s[i]` and the edge
//! `(i, i+1)` at `max(s[i], s[i+1])`. Components merge by the elder rule.
//! The component of the global minimum never dies and is closed at the
//! global maximum, so every pair is finite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersistenceError {
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("signal is empty")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn new(birth: f64, death: f64) -> Self {
        PersistencePair { birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of finite `(birth, death)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    /// Index in `pairs` of the finitized essential class, if present.
    essential: Option<usize>,
}

impl PersistenceDiagram {
    /// A diagram whose pairs are all ordinary (no essential class).
    pub fn from_pairs(pairs: Vec<PersistencePair>) -> Self {
        PersistenceDiagram {
            pairs,
            essential: None,
        }
    }

    pub fn with_essential(pairs: Vec<PersistencePair>, essential: usize) -> Self {
        assert!(essential < pairs.len());
        PersistenceDiagram {
            pairs,
            essential: Some(essential),
        }
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn essential_index(&self) -> Option<usize> {
        self.essential
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs sorted by `(birth, death)`, for multiset comparison.
    pub fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.pairs.iter().map(|p| (p.birth, p.death)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    /// Drops pairs with `birth == death`, including a degenerate essential pair.
    pub fn without_zero_persistence(&self) -> Self {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        let mut essential = None;
        for (i, p) in self.pairs.iter().enumerate() {
            if p.death > p.birth {
                if self.essential == Some(i) {
                    essential = Some(pairs.len());
                }
                pairs.push(*p);
            }
        }
        PersistenceDiagram { pairs, essential }
    }

    pub fn total_persistence(&self) -> f64 {
        self.pairs.iter().map(PersistencePair::persistence).sum()
    }

    /// Disjoint union of two diagrams, keeping `self`'s essential marker.
    pub fn union(&self, other: &PersistenceDiagram) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        PersistenceDiagram {
            pairs,
            essential: self.essential,
        }
    }

    /// CSV with header `birth,death,essential`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("birth,death,essential\n");
        for (i, p) in self.pairs.iter().enumerate() {
            let flag = u8::from(self.essential == Some(i));
            writeln!(out, "{},{},{flag}", p.birth, p.death).expect("String write");
        }
        out
    }
}

fn check_finite(s: &[f64]) -> Result<(), PersistenceError> {
    if s.is_empty() {
        return Err(PersistenceError::Empty);
    }
    match s.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(PersistenceError::NonFiniteValue { index }),
        None => Ok(()),
    }
}

struct UnionFind {
    parent: Vec<usize>,
    /// Index of the oldest vertex in each root's component.
    oldest: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            oldest: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// H0 diagram of the lower-star filtration, by union-find over vertices
/// sorted by `(value, index)`.
///
/// When two components with equal birth merge, the one whose minimum has
/// the smaller index survives. Merges at the birth value of the younger
/// component are invisible in the sublevel-set filtration and produce no
/// pair.
pub fn lower_star_h0(s: &[f64]) -> Result<PersistenceDiagram, PersistenceError> {
    check_finite(s)?;
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));

    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    let mut pairs = Vec::new();
    let elder = |a: usize, b: usize| s[a] < s[b] || (s[a] == s[b] && a < b);

    for &v in &order {
        active[v] = true;
        let neighbors = [v.checked_sub(1), (v + 1 < n).then_some(v + 1)];
        for u in neighbors.into_iter().flatten() {
            if !active[u] {
                continue;
            }
            let ru = uf.find(u);
            let rv = uf.find(v);
            if ru == rv {
                continue;
            }
            let (old_u, old_v) = (uf.oldest[ru], uf.oldest[rv]);
            let (survivor, victim) = if elder(old_u, old_v) {
                (ru, rv)
            } else {
                (rv, ru)
            };
            let victim_birth = s[uf.oldest[victim]];
            // v itself starts as a singleton whose birth is s[v]; absorbing it is not a death
            if victim_birth < s[v] {
                pairs.push(PersistencePair::new(victim_birth, s[v]));
            }
            uf.parent[victim] = survivor;
        }
    }

    let (min, max) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    pairs.push(PersistencePair::new(min, max));
    let essential = pairs.len() - 1;
    Ok(PersistenceDiagram::with_essential(pairs, essential))
}

/// Reference H0 diagram by sweeping every distinct value as a threshold and
/// recomputing the connected runs of `{i : s[i] <= t}` from scratch.
///
/// Quadratic in the signal length; intended as an oracle.
pub fn brute_force_h0(s: &[f64]) -> Result<PersistenceDiagram, PersistenceError> {
    check_finite(s)?;
    let mut levels: Vec<f64> = s.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    // live components from the previous threshold: (start, end, birth, birth index)
    let mut live: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut pairs = Vec::new();
    for &t in &levels {
        let mut next = Vec::new();
        let mut i = 0;
        while i < s.len() {
            if s[i] > t {
                i += 1;
                continue;
            }
            let start = i;
            while i < s.len() && s[i] <= t {
                i += 1;
            }
            let end = i;
            let mut contained: Vec<&(usize, usize, f64, usize)> =
                live.iter().filter(|c| c.0 >= start && c.1 <= end).collect();
            if contained.is_empty() {
                let argmin = (start..end)
                    .min_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)))
                    .expect("non-empty run");
                next.push((start, end, t, argmin));
                continue;
            }
            contained.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.3.cmp(&b.3)));
            for dead in &contained[1..] {
                pairs.push(PersistencePair::new(dead.2, t));
            }
            next.push((start, end, contained[0].2, contained[0].3));
        }
        live = next;
    }
    debug_assert_eq!(live.len(), 1);
    let max = *levels.last().expect("non-empty signal");
    pairs.push(PersistencePair::new(live[0].2, max));
    let essential = pairs.len() - 1;
    Ok(PersistenceDiagram::with_essential(pairs, essential))
}

/// Number of local-minimum plateaus: maximal runs of equal values whose
/// neighbours on both sides (where present) are strictly larger.
pub fn count_local_minima(s: &[f64]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < s.len() {
        let start = i;
        while i + 1 < s.len() && s[i + 1] == s[start] {
            i += 1;
        }
        let left_ok = start == 0 || s[start - 1] > s[start];
        let right_ok = i + 1 == s.len() || s[i + 1] > s[start];
        if left_ok && right_ok {
            count += 1;
        }
        i += 1;
    }
    count
}
