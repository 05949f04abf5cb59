//! Finite binary hypothesis classes, version spaces and labeled streams.
//!
//! The instance domain is the index set `0..instance_count`. A class stores,
//! for every instance, the bitmask of hypotheses that label it `1`, so the
//! projections `V^0`, `V^1` of a version space are two word-wise ANDs.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use smallvec::SmallVec;

use crate::{Error, Result};

/// Index of an instance in `0..instance_count`.
pub type Instance = usize;

/// Largest `d` accepted by [`HypothesisClass::powerset`] unless a larger cap
/// is passed explicitly.
pub const DEFAULT_POWERSET_CAP: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "u8", try_from = "u8"))]
#[repr(u8)]
pub enum Label {
    Zero = 0,
    One = 1,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }

    pub fn is_one(self) -> bool {
        self == Label::One
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;
    fn try_from(v: u8) -> core::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Bitmask over hypothesis indices.
///
/// Two inline words cover classes of up to 128 hypotheses without touching
/// the heap. Trailing zero words are never stored, so equal sets compare
/// equal regardless of how they were produced.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Members {
    words: SmallVec<[u64; 2]>,
}

impl Members {
    pub fn empty() -> Self {
        Members::default()
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        let mut words: SmallVec<[u64; 2]> = SmallVec::new();
        let whole = n / 64;
        for _ in 0..whole {
            words.push(u64::MAX);
        }
        let rem = n % 64;
        if rem != 0 {
            words.push((1u64 << rem) - 1);
        }
        Members { words }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut m = Members::empty();
        for i in it {
            m.insert(i);
        }
        m
    }

    pub fn insert(&mut self, i: usize) {
        let w = i / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1u64 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        let w = i / 64;
        if w < self.words.len() {
            self.words[w] &= !(1u64 << (i % 64));
            self.trim();
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        let w = i / 64;
        w < self.words.len() && self.words[w] & (1u64 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn intersection(&self, other: &Members) -> Members {
        let mut words: SmallVec<[u64; 2]> = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a & b)
            .collect();
        trim_words(&mut words);
        Members { words }
    }

    pub fn difference(&self, other: &Members) -> Members {
        let mut words: SmallVec<[u64; 2]> = self
            .words
            .iter()
            .enumerate()
            .map(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0))
            .collect();
        trim_words(&mut words);
        Members { words }
    }

    /// Size of `self ∩ other` without materializing it.
    pub fn intersection_len(&self, other: &Members) -> usize {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, other: &Members) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    fn trim(&mut self) {
        trim_words(&mut self.words);
    }
}

fn trim_words(words: &mut SmallVec<[u64; 2]>) {
    while words.last() == Some(&0) {
        words.pop();
    }
}

impl fmt::Debug for Members {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Named families that have closed-form dimension values.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Family {
    /// `x ↦ 1{x = a}`, truncated to `n` instances.
    Singletons { n: usize },
    /// `x ↦ 1{x ≠ a}`, truncated to `n` instances.
    FlippedSingletons { n: usize },
    /// Indicators of sets of size at most `k` (the empty set included).
    #[cfg_attr(feature = "serde", serde(rename = "kwise"))]
    KWise { n: usize, k: usize },
    /// Every labeling of `d` instances.
    Powerset { d: u32 },
}

/// A dimension quantity that a family table can report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Quantity {
    Ldim,
    Aldim { width: u32 },
    EffectiveWidth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DimValue {
    Finite(u32),
    Infinite,
}

/// Where a table value comes from. `Stated` values are quoted from the
/// literature on the family; `Derived` ones follow from the structural
/// identities of the dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Stated,
    Derived,
}

/// One closed-form value for the untruncated (possibly infinite) family.
///
/// These are metadata only. Dimension queries always run the recursion on
/// the finite truncation and never read this table.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FamilyDimensionEntry {
    pub quantity: Quantity,
    pub value: DimValue,
    pub provenance: Provenance,
    pub note: Option<&'static str>,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Singletons { .. } => "singletons",
            Family::FlippedSingletons { .. } => "flipped_singletons",
            Family::KWise { .. } => "kwise",
            Family::Powerset { .. } => "powerset",
        }
    }

    /// Closed-form values for the family over the natural numbers
    /// (for the powerset: over its `d` instances).
    pub fn dimension_table(&self) -> Vec<FamilyDimensionEntry> {
        use DimValue::*;
        use Provenance::*;
        let e = |quantity, value, provenance, note| FamilyDimensionEntry {
            quantity,
            value,
            provenance,
            note,
        };
        match *self {
            Family::Singletons { .. } => vec![
                e(Quantity::Ldim, Finite(1), Stated, None),
                e(Quantity::Aldim { width: 1 }, Infinite, Stated, None),
                e(Quantity::EffectiveWidth, Finite(2), Stated, None),
                e(
                    Quantity::Aldim { width: 2 },
                    Finite(1),
                    Derived,
                    Some("plateau at width ldim+1"),
                ),
            ],
            Family::FlippedSingletons { .. } => vec![
                e(Quantity::Ldim, Finite(1), Stated, None),
                e(Quantity::Aldim { width: 1 }, Finite(1), Derived, None),
                e(Quantity::EffectiveWidth, Finite(1), Derived, None),
            ],
            Family::KWise { k, .. } => {
                let k = k as u32;
                vec![
                    e(Quantity::Ldim, Finite(k), Derived, None),
                    e(Quantity::Aldim { width: k }, Infinite, Stated, None),
                    e(Quantity::EffectiveWidth, Finite(k + 1), Stated, None),
                    e(
                        Quantity::Aldim { width: k + 1 },
                        Finite(0),
                        Stated,
                        Some("the width recursion evaluates this to k (plateau at width ldim+1) on every truncation with n > k"),
                    ),
                ]
            }
            Family::Powerset { d } => vec![
                e(Quantity::Ldim, Finite(d), Stated, None),
                e(Quantity::Aldim { width: 1 }, Finite(d), Stated, None),
                e(
                    Quantity::EffectiveWidth,
                    Finite(1),
                    Derived,
                    Some("finite class"),
                ),
            ],
        }
    }

    pub fn lookup(&self, q: Quantity) -> Option<FamilyDimensionEntry> {
        self.dimension_table().into_iter().find(|e| e.quantity == q)
    }
}

/// A finite binary hypothesis class given by its `|H| × |X|` matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct HypothesisClass {
    instance_count: usize,
    hypothesis_count: usize,
    /// `ones[x]` holds the hypotheses with `h(x) = 1`.
    ones: Vec<Members>,
    family: Option<Family>,
    fingerprint: u64,
}

impl fmt::Debug for HypothesisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypothesisClass")
            .field("instances", &self.instance_count)
            .field("hypotheses", &self.hypothesis_count)
            .field("family", &self.family)
            .finish()
    }
}

impl HypothesisClass {
    /// Builds a class from binary rows, dropping duplicate rows while keeping
    /// the order of first occurrence.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let width = rows[0].as_ref().len();
        if width == 0 {
            return Err(Error::ZeroInstances);
        }
        let mut kept: Vec<&[u8]> = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: r,
                    expected: width,
                    found: row.len(),
                });
            }
            if let Some((c, &v)) = row.iter().enumerate().find(|(_, &v)| v > 1) {
                return Err(Error::NonBinaryEntry {
                    row: r,
                    column: c,
                    value: v,
                });
            }
            if !kept.contains(&row) {
                kept.push(row);
            }
        }
        let mut ones = vec![Members::empty(); width];
        for (h, row) in kept.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v == 1 {
                    ones[x].insert(h);
                }
            }
        }
        let mut class = HypothesisClass {
            instance_count: width,
            hypothesis_count: kept.len(),
            ones,
            family: None,
            fingerprint: 0,
        };
        class.fingerprint = class.compute_fingerprint();
        Ok(class)
    }

    fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    /// Builds a class directly from per-instance one-sets. Rows must already
    /// be distinct.
    fn from_columns(instance_count: usize, hypothesis_count: usize, ones: Vec<Members>) -> Self {
        let mut class = HypothesisClass {
            instance_count,
            hypothesis_count,
            ones,
            family: None,
            fingerprint: 0,
        };
        class.fingerprint = class.compute_fingerprint();
        class
    }

    pub fn singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("singletons need n >= 1".into()));
        }
        let ones = (0..n).map(|x| Members::from_indices([x])).collect();
        Ok(Self::from_columns(n, n, ones).with_family(Family::Singletons { n }))
    }

    pub fn flipped_singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "flipped singletons need n >= 1".into(),
            ));
        }
        let ones = (0..n)
            .map(|x| {
                let mut m = Members::full(n);
                m.remove(x);
                m
            })
            .collect();
        Ok(Self::from_columns(n, n, ones).with_family(Family::FlippedSingletons { n }))
    }

    /// Indicators of every subset of `0..n` with at most `k` elements, the
    /// empty set first, then by size, each size in lexicographic order.
    pub fn kwise(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "kwise needs 1 <= k <= n, got n={n}, k={k}"
            )));
        }
        let mut sets: Vec<Vec<usize>> = vec![Vec::new()];
        for size in 1..=k {
            let mut comb: Vec<usize> = (0..size).collect();
            loop {
                sets.push(comb.clone());
                // advance to the next combination in lexicographic order
                let mut i = size;
                while i > 0 && comb[i - 1] == n - size + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                comb[i - 1] += 1;
                for j in i..size {
                    comb[j] = comb[j - 1] + 1;
                }
            }
        }
        let mut ones = vec![Members::empty(); n];
        for (h, set) in sets.iter().enumerate() {
            for &x in set {
                ones[x].insert(h);
            }
        }
        Ok(Self::from_columns(n, sets.len(), ones).with_family(Family::KWise { n, k }))
    }

    /// Every labeling of `d` instances; row `h` is the binary expansion of
    /// `h` with instance 0 as the most significant bit.
    pub fn powerset(d: u32, cap: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("powerset needs d >= 1".into()));
        }
        if d > cap {
            return Err(Error::CapExceeded(format!(
                "powerset over {d} instances exceeds cap {cap}"
            )));
        }
        let n = d as usize;
        let count = 1usize << d;
        let mut ones = vec![Members::empty(); n];
        for h in 0..count {
            for (x, col) in ones.iter_mut().enumerate() {
                if (h >> (n - 1 - x)) & 1 == 1 {
                    col.insert(h);
                }
            }
        }
        Ok(Self::from_columns(n, count, ones).with_family(Family::Powerset { d }))
    }

    pub fn from_family(family: &Family) -> Result<Self> {
        match *family {
            Family::Singletons { n } => Self::singletons(n),
            Family::FlippedSingletons { n } => Self::flipped_singletons(n),
            Family::KWise { n, k } => Self::kwise(n, k),
            Family::Powerset { d } => Self::powerset(d, DEFAULT_POWERSET_CAP),
        }
    }

    pub fn instance_count(&self) -> usize {
        self.instance_count
    }

    pub fn len(&self) -> usize {
        self.hypothesis_count
    }

    pub fn is_empty(&self) -> bool {
        self.hypothesis_count == 0
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    /// Hash of the matrix; identifies the class a version space belongs to.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn label(&self, h: usize, x: Instance) -> Label {
        Label::from_bool(self.ones[x].contains(h))
    }

    /// Hypotheses labeling `x` with `1`.
    pub fn ones_at(&self, x: Instance) -> &Members {
        &self.ones[x]
    }

    pub fn row(&self, h: usize) -> Vec<u8> {
        (0..self.instance_count)
            .map(|x| self.label(h, x).as_u8())
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.hypothesis_count).map(|h| self.row(h)).collect()
    }

    pub fn full_space(&self) -> VersionSpace {
        VersionSpace {
            class_id: self.fingerprint,
            members: Members::full(self.hypothesis_count),
        }
    }

    pub fn space(&self, members: Members) -> VersionSpace {
        debug_assert!(members.iter().all(|h| h < self.hypothesis_count));
        VersionSpace {
            class_id: self.fingerprint,
            members,
        }
    }

    pub fn check_instance(&self, x: Instance) -> Result<()> {
        if x < self.instance_count {
            Ok(())
        } else {
            Err(Error::InstanceOutOfRange {
                instance: x,
                instance_count: self.instance_count,
            })
        }
    }

    /// `V^y_x = {h ∈ V : h(x) = y}`.
    pub fn project(&self, v: &VersionSpace, x: Instance, y: Label) -> VersionSpace {
        debug_assert_eq!(v.class_id, self.fingerprint);
        let members = match y {
            Label::One => v.members.intersection(&self.ones[x]),
            Label::Zero => v.members.difference(&self.ones[x]),
        };
        VersionSpace {
            class_id: v.class_id,
            members,
        }
    }

    /// The set `V(x)` as a pair of flags `(some h gives 0, some h gives 1)`.
    pub fn projection_labels(&self, v: &VersionSpace, x: Instance) -> (bool, bool) {
        let n1 = v.members.intersection_len(&self.ones[x]);
        (n1 < v.members.len(), n1 > 0)
    }

    /// Number of mistakes hypothesis `h` makes on `stream`.
    pub fn loss(&self, h: usize, stream: &LabeledStream) -> usize {
        stream
            .rounds
            .iter()
            .filter(|&&(x, y)| self.label(h, x) != y)
            .count()
    }

    /// `min_h Σ 1{h(x_t) ≠ y_t}` by exact scan.
    pub fn best_loss(&self, stream: &LabeledStream) -> usize {
        (0..self.hypothesis_count)
            .map(|h| self.loss(h, stream))
            .min()
            .unwrap_or(0)
    }

    pub fn is_realizable(&self, stream: &LabeledStream) -> bool {
        let mut v = self.full_space();
        for &(x, y) in &stream.rounds {
            v = self.project(&v, x, y);
            if v.is_empty() {
                return false;
            }
        }
        true
    }

    /// The stream `(x_t, h(x_t))` for the given instance sequence.
    pub fn label_stream(&self, h: usize, instances: &[Instance]) -> LabeledStream {
        LabeledStream {
            rounds: instances.iter().map(|&x| (x, self.label(h, x))).collect(),
        }
    }

    /// Calls `visit` once for every distinct realizable stream of exactly
    /// `len` rounds, in lexicographic order of `(instance, label)` pairs.
    pub fn for_each_realizable_stream<F: FnMut(&[(Instance, Label)])>(
        &self,
        len: usize,
        mut visit: F,
    ) {
        fn walk<F: FnMut(&[(Instance, Label)])>(
            class: &HypothesisClass,
            v: &VersionSpace,
            len: usize,
            prefix: &mut Vec<(Instance, Label)>,
            visit: &mut F,
        ) {
            if prefix.len() == len {
                visit(prefix);
                return;
            }
            for x in 0..class.instance_count {
                for y in [Label::Zero, Label::One] {
                    let next = class.project(v, x, y);
                    if next.is_empty() {
                        continue;
                    }
                    prefix.push((x, y));
                    walk(class, &next, len, prefix, visit);
                    prefix.pop();
                }
            }
        }
        walk(
            self,
            &self.full_space(),
            len,
            &mut Vec::with_capacity(len),
            &mut visit,
        );
    }

    fn compute_fingerprint(&self) -> u64 {
        // FNV-1a over dimensions and column words
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for b in v.to_le_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.instance_count as u64);
        feed(self.hypothesis_count as u64);
        for col in &self.ones {
            feed(u64::MAX);
            for &w in col.words.iter() {
                feed(w);
            }
        }
        hash
    }
}

/// A subset of a class's hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VersionSpace {
    class_id: u64,
    members: Members,
}

impl VersionSpace {
    pub fn members(&self) -> &Members {
        &self.members
    }

    pub fn class_id(&self) -> u64 {
        self.class_id
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, h: usize) -> bool {
        self.members.contains(h)
    }
}

/// An ordered sequence of labeled instances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabeledStream {
    pub rounds: Vec<(Instance, Label)>,
}

impl LabeledStream {
    pub fn new(rounds: Vec<(Instance, Label)>) -> Self {
        LabeledStream { rounds }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn instances(&self) -> Vec<Instance> {
        self.rounds.iter().map(|r| r.0).collect()
    }

    pub fn validate(&self, class: &HypothesisClass) -> Result<()> {
        self.rounds
            .iter()
            .try_for_each(|&(x, _)| class.check_instance(x))
    }
}
