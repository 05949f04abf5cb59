//! Littlestone dimension, Apple Littlestone dimension and shattered apple
//! trees, computed exactly on finite classes.
//!
//! An apple tree with budget `(w, d)` is a leaf when `w = 0` or `d = 0`, and
//! otherwise an internal node whose `0`-edge leads to a `(w, d-1)` tree and
//! whose `1`-edge leads to a `(w-1, d-1)` tree. A version space `V` shatters
//! an instance-labeled apple tree when every root-to-leaf path is realized by
//! some member of `V`. Writing `D(V, w)` for the deepest width-`w` tree `V`
//! shatters, the definition unrolls into
//!
//! ```text
//! D(V, w) = max over x splitting V of 1 + min(D(V^0_x, w), D(V^1_x, w-1))
//! ```
//!
//! with `D(V, 0) = ∞` for nonempty `V` and `D(V, w) = 0` if no instance splits
//! `V`. The Littlestone dimension is the same recursion with an unbounded
//! width.
//!
//! A shattered `(w, d)` tree has `Σ_{i ≤ min(w,d)} C(d, i)` leaves, and leaves
//! on distinct paths need distinct hypotheses, which bounds the depth reachable
//! from a version space of a given size. The recursion uses that bound to stop
//! scanning instances early.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::hypothesis::{
    FamilyDimensionEntry, HypothesisClass, Instance, Label, Members, Quantity, VersionSpace,
};
use crate::{Error, Result};

/// Width value standing for "no limit on 1-edges" (complete trees).
pub const UNBOUNDED: u32 = u32::MAX;

/// Caps enforced by [`brute_force_aldim`].
pub const ORACLE_MAX_INSTANCES: usize = 4;
pub const ORACLE_MAX_MEMBERS: usize = 8;

fn narrow(w: u32) -> u32 {
    if w == UNBOUNDED {
        UNBOUNDED
    } else {
        w - 1
    }
}

/// Leaves of the `(w, d)` apple tree shape, saturating.
pub fn apple_tree_paths(w: u32, d: u32) -> u64 {
    let top = w.min(d) as u64;
    let d = d as u64;
    let mut total: u64 = 0;
    let mut binom: u64 = 1;
    for i in 0..=top {
        total = total.saturating_add(binom);
        if i < top {
            binom = binom.saturating_mul(d - i) / (i + 1);
        }
    }
    total
}

/// Deepest `d` whose `(w, d)` shape has at most `n` leaves.
fn depth_upper_bound(n: usize, w: u32) -> u32 {
    if n == 0 {
        return 0;
    }
    if w == 1 {
        return (n - 1) as u32;
    }
    let mut d = 0;
    while apple_tree_paths(w, d + 1) <= n as u64 {
        d += 1;
    }
    d
}

/// Memo of dimension queries against one class.
///
/// Keys are the member bitmask plus the width, so version spaces with equal
/// member sets share entries. Using the cache with a second class clears it.
#[derive(Debug, Default, Clone)]
pub struct DimensionCache {
    class_id: Option<u64>,
    depth: BTreeMap<(Members, u32), u32>,
    shatter: BTreeMap<(Members, u32, u32), bool>,
}

impl DimensionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.depth.len() + self.shatter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.depth.clear();
        self.shatter.clear();
    }

    fn bind(&mut self, class: &HypothesisClass) {
        if self.class_id != Some(class.fingerprint()) {
            self.clear();
            self.class_id = Some(class.fingerprint());
        }
    }

    /// Littlestone dimension of a nonempty version space.
    pub fn ldim(&mut self, class: &HypothesisClass, v: &VersionSpace) -> Result<u32> {
        if v.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        self.bind(class);
        let d = self.depth(class, v.members(), UNBOUNDED);
        self.check_cap(v, d, 0)?;
        Ok(d)
    }

    /// Apple Littlestone dimension at width `w ≥ 1`.
    pub fn aldim(&mut self, class: &HypothesisClass, v: &VersionSpace, w: u32) -> Result<u32> {
        if v.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        if w == 0 {
            return Err(Error::InvalidParameter("width must be at least 1".into()));
        }
        self.bind(class);
        let d = self.depth(class, v.members(), w);
        self.check_cap(v, d, w)?;
        Ok(d)
    }

    fn check_cap(&self, v: &VersionSpace, d: u32, w: u32) -> Result<()> {
        let cap = v.len() as u64 + if w == UNBOUNDED { 0 } else { w as u64 };
        if d as u64 > cap {
            return Err(Error::Invariant(format!(
                "depth {d} above the |V|+w safety cap {cap}"
            )));
        }
        Ok(())
    }

    /// Whether `v` shatters some width-`w`, depth-`d` apple tree.
    ///
    /// Decided by its own recursion (not through [`DimensionCache::aldim`]), so the
    /// two serve as cross-checks of each other.
    pub fn shatters(&mut self, class: &HypothesisClass, v: &VersionSpace, w: u32, d: u32) -> bool {
        self.bind(class);
        self.shatters_rec(class, v.members(), w, d)
    }

    fn depth(&mut self, class: &HypothesisClass, m: &Members, w: u32) -> u32 {
        debug_assert!(w >= 1);
        let n = m.len();
        if n <= 1 {
            return 0;
        }
        if let Some(&d) = self.depth.get(&(m.clone(), w)) {
            return d;
        }
        let ub = depth_upper_bound(n, w);
        let mut best = 0;
        for x in 0..class.instance_count() {
            if best >= ub {
                break;
            }
            let n1 = m.intersection_len(class.ones_at(x));
            if n1 == 0 || n1 == n {
                continue;
            }
            let w1 = narrow(w);
            let bound1 = if w1 == 0 {
                u32::MAX
            } else {
                depth_upper_bound(n1, w1)
            };
            if depth_upper_bound(n - n1, w).min(bound1) < best {
                continue;
            }
            let d1 = if w1 == 0 {
                u32::MAX
            } else {
                let m1 = m.intersection(class.ones_at(x));
                self.depth(class, &m1, w1)
            };
            if d1.saturating_add(1) <= best {
                continue;
            }
            if d1 == 0 {
                best = 1;
                continue;
            }
            let m0 = m.difference(class.ones_at(x));
            let d0 = self.depth(class, &m0, w);
            best = best.max(1 + d0.min(d1));
        }
        self.depth.insert((m.clone(), w), best);
        best
    }

    fn shatters_rec(&mut self, class: &HypothesisClass, m: &Members, w: u32, d: u32) -> bool {
        if m.is_empty() {
            return false;
        }
        if d == 0 || w == 0 {
            return true;
        }
        if (m.len() as u64) < apple_tree_paths(w, d) {
            return false;
        }
        let key = (m.clone(), w, d);
        if let Some(&b) = self.shatter.get(&key) {
            return b;
        }
        let mut found = false;
        for x in 0..class.instance_count() {
            let m1 = m.intersection(class.ones_at(x));
            if m1.is_empty() || m1.len() == m.len() {
                continue;
            }
            if self.shatters_rec(class, &m1, narrow(w), d - 1) {
                let m0 = m.difference(class.ones_at(x));
                if self.shatters_rec(class, &m0, w, d - 1) {
                    found = true;
                    break;
                }
            }
        }
        self.shatter.insert(key, found);
        found
    }

    /// A concrete width-`w`, depth-`d` apple tree shattered by `v`, choosing
    /// the lowest feasible instance at every node. `None` when `v` shatters
    /// no such tree.
    pub fn witness_tree(
        &mut self,
        class: &HypothesisClass,
        v: &VersionSpace,
        w: u32,
        d: u32,
    ) -> Option<AppleTreeWitness> {
        if w == 0 || !self.shatters(class, v, w, d) {
            return None;
        }
        let root = self.build(class, v.members(), w, d);
        Some(AppleTreeWitness {
            width: w,
            depth: d,
            root,
        })
    }

    fn build(&mut self, class: &HypothesisClass, m: &Members, w: u32, d: u32) -> AppleNode {
        if w == 0 || d == 0 {
            return AppleNode::Leaf;
        }
        for x in 0..class.instance_count() {
            let m1 = m.intersection(class.ones_at(x));
            let m0 = m.difference(class.ones_at(x));
            if self.shatters_rec(class, &m1, narrow(w), d - 1)
                && self.shatters_rec(class, &m0, w, d - 1)
            {
                return AppleNode::Internal {
                    instance: x,
                    zero: Box::new(self.build(class, &m0, w, d - 1)),
                    one: Box::new(self.build(class, &m1, narrow(w), d - 1)),
                };
            }
        }
        unreachable!("shatters() held but no instance splits the version space")
    }
}

pub fn ldim(class: &HypothesisClass, v: &VersionSpace) -> Result<u32> {
    DimensionCache::new().ldim(class, v)
}

pub fn aldim(class: &HypothesisClass, v: &VersionSpace, w: u32) -> Result<u32> {
    DimensionCache::new().aldim(class, v, w)
}

pub fn shatters(class: &HypothesisClass, v: &VersionSpace, w: u32, d: u32) -> bool {
    DimensionCache::new().shatters(class, v, w, d)
}

pub fn witness_tree(
    class: &HypothesisClass,
    v: &VersionSpace,
    w: u32,
    d: u32,
) -> Option<AppleTreeWitness> {
    DimensionCache::new().witness_tree(class, v, w, d)
}

/// Effective width of a finite version space, plus the closed-form width of
/// the untruncated family when the class carries one.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EffectiveWidth {
    /// Always 1: the width-1 dimension of a finite class is finite.
    pub finite: u32,
    pub family: Option<FamilyDimensionEntry>,
}

pub fn effective_width(class: &HypothesisClass, v: &VersionSpace) -> Result<EffectiveWidth> {
    if v.is_empty() {
        return Err(Error::EmptyVersionSpace);
    }
    Ok(EffectiveWidth {
        finite: 1,
        family: class
            .family()
            .and_then(|f| f.lookup(Quantity::EffectiveWidth)),
    })
}

/// Node of an instance-labeled apple tree. The `zero` child follows the
/// 0-labeled edge, `one` the 1-labeled edge.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AppleNode {
    Leaf,
    Internal {
        instance: Instance,
        zero: Box<AppleNode>,
        one: Box<AppleNode>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AppleTreeWitness {
    pub width: u32,
    pub depth: u32,
    pub root: AppleNode,
}

impl AppleTreeWitness {
    /// Whether the node shapes follow the `(w, d)` recursion exactly.
    pub fn is_well_formed(&self) -> bool {
        fn check(node: &AppleNode, w: u32, d: u32) -> bool {
            match node {
                AppleNode::Leaf => w == 0 || d == 0,
                AppleNode::Internal { zero, one, .. } => {
                    w > 0 && d > 0 && check(zero, w, d - 1) && check(one, narrow(w), d - 1)
                }
            }
        }
        check(&self.root, self.width, self.depth)
    }

    /// Every root-to-leaf path as its labeled instances.
    pub fn paths(&self) -> Vec<Vec<(Instance, Label)>> {
        fn walk(
            node: &AppleNode,
            prefix: &mut Vec<(Instance, Label)>,
            out: &mut Vec<Vec<(Instance, Label)>>,
        ) {
            match node {
                AppleNode::Leaf => out.push(prefix.clone()),
                AppleNode::Internal {
                    instance,
                    zero,
                    one,
                } => {
                    prefix.push((*instance, Label::Zero));
                    walk(zero, prefix, out);
                    prefix.pop();
                    prefix.push((*instance, Label::One));
                    walk(one, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn internal_nodes(&self) -> usize {
        fn count(node: &AppleNode) -> usize {
            match node {
                AppleNode::Leaf => 0,
                AppleNode::Internal { zero, one, .. } => 1 + count(zero) + count(one),
            }
        }
        count(&self.root)
    }
}

/// Checks every root-to-leaf path of `tree` against the members of `v`.
pub fn verify_shattered(
    class: &HypothesisClass,
    tree: &AppleTreeWitness,
    v: &VersionSpace,
) -> bool {
    if !tree.is_well_formed() {
        return false;
    }
    tree.paths().iter().all(|path| {
        v.members().iter().any(|h| {
            path.iter()
                .all(|&(x, y)| x < class.instance_count() && class.label(h, x) == y)
        })
    })
}

/// Tree shape of budget `(w, d)` flattened for enumeration: internal nodes
/// numbered in preorder, leaves listed as the `(node, label)` edges along
/// their path.
struct Shape {
    internal: usize,
    paths: Vec<Vec<(usize, Label)>>,
}

impl Shape {
    fn new(w: u32, d: u32) -> Self {
        fn walk(
            w: u32,
            d: u32,
            next: &mut usize,
            prefix: &mut Vec<(usize, Label)>,
            paths: &mut Vec<Vec<(usize, Label)>>,
        ) {
            if w == 0 || d == 0 {
                paths.push(prefix.clone());
                return;
            }
            let id = *next;
            *next += 1;
            prefix.push((id, Label::Zero));
            walk(w, d - 1, next, prefix, paths);
            prefix.pop();
            prefix.push((id, Label::One));
            walk(w - 1, d - 1, next, prefix, paths);
            prefix.pop();
        }
        let mut next = 0;
        let mut paths = Vec::new();
        walk(w, d, &mut next, &mut Vec::new(), &mut paths);
        Shape {
            internal: next,
            paths,
        }
    }
}

/// Width-`w` dimension by enumerating every assignment of instances to the
/// internal nodes of each `(w, d)` shape for `d = 1, 2, …` and checking
/// shattering path by path.
///
/// Shapes with more leaves than `|V|` are skipped without enumeration, since
/// leaves on distinct paths need distinct hypotheses. Restricted to
/// `|X| ≤ 4` and `|V| ≤ 8`.
pub fn brute_force_aldim(class: &HypothesisClass, v: &VersionSpace, w: u32) -> Result<u32> {
    if v.is_empty() {
        return Err(Error::EmptyVersionSpace);
    }
    if w == 0 || w == UNBOUNDED {
        return Err(Error::InvalidParameter(
            "oracle width must be a finite w >= 1".into(),
        ));
    }
    let nx = class.instance_count();
    if nx > ORACLE_MAX_INSTANCES || v.len() > ORACLE_MAX_MEMBERS {
        return Err(Error::CapExceeded(format!(
            "oracle handles |X| <= {ORACLE_MAX_INSTANCES} and |V| <= {ORACLE_MAX_MEMBERS}, got |X| = {nx}, |V| = {}",
            v.len()
        )));
    }
    let members: Vec<usize> = v.members().iter().collect();
    let limit = v.len() as u32 + w;
    let mut best = 0;
    for d in 1..=limit {
        let shape = Shape::new(w, d);
        if shape.paths.len() > members.len() {
            break;
        }
        let mut assignment = vec![0usize; shape.internal];
        let mut found = false;
        'enumerate: loop {
            let shattered = shape.paths.iter().all(|path| {
                members.iter().any(|&h| {
                    path.iter()
                        .all(|&(node, y)| class.label(h, assignment[node]) == y)
                })
            });
            if shattered {
                found = true;
                break;
            }
            // odometer increment over base-|X| digits
            for digit in assignment.iter_mut() {
                *digit += 1;
                if *digit < nx {
                    continue 'enumerate;
                }
                *digit = 0;
            }
            break;
        }
        if !found {
            break;
        }
        best = d;
    }
    Ok(best)
}
