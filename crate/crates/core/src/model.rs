//! Shared data model: scored datasets, composite scores, rankings, utility
//! functions and fix configurations.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Opaque item identifier, unique within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub String);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.into())
    }
}

/// Group tag carried by every item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Group(pub String);

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Group {
    fn from(s: &str) -> Self {
        Group(s.into())
    }
}

/// Which of the two audited groups an item belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

/// One input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub group: Group,
    pub label: Option<bool>,
    pub scores: Vec<f64>,
}

impl Item {
    pub fn new(id: impl Into<String>, group: impl Into<String>, label: Option<bool>, scores: Vec<f64>) -> Self {
        Item {
            id: ItemId(id.into()),
            group: Group(group.into()),
            label,
            scores,
        }
    }
}

/// Items with a binary group tag, an optional binary label and `K` component
/// scores each. Scores are stored column-major so a single component can be
/// swapped out cheaply.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    ids: Vec<ItemId>,
    sides: Vec<Side>,
    labels: Option<Vec<bool>>,
    columns: Vec<Vec<f64>>,
    groups: [Group; 2],
}

impl ScoredDataset {
    /// Builds a dataset whose group `A` is the lexicographically first tag.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let tags: BTreeSet<&Group> = items.iter().map(|it| &it.group).collect();
        if tags.len() != 2 {
            return Err(Error::Structure(format!(
                "exactly two distinct groups are required, found {}",
                tags.len()
            )));
        }
        let mut tags = tags.into_iter().cloned();
        let groups = [tags.next().unwrap(), tags.next().unwrap()];
        drop(tags);
        Self::with_group_order(items, groups)
    }

    /// Builds a dataset with an explicit `[A, B]` group order.
    pub fn with_group_order(items: Vec<Item>, groups: [Group; 2]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Structure("dataset is empty".into()));
        }
        if groups[0] == groups[1] {
            return Err(Error::Structure("the two groups must be distinct".into()));
        }
        let k = items[0].scores.len();
        if k == 0 {
            return Err(Error::Structure("at least one score component is required".into()));
        }
        let has_labels = items[0].label.is_some();
        let n = items.len();
        let mut ids = Vec::with_capacity(n);
        let mut sides = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(if has_labels { n } else { 0 });
        let mut columns = vec![Vec::with_capacity(n); k];
        let mut seen = BTreeSet::new();
        for item in items {
            if item.scores.len() != k {
                return Err(Error::Structure(format!(
                    "item `{}` has {} scores, expected {k}",
                    item.id,
                    item.scores.len()
                )));
            }
            if item.label.is_some() != has_labels {
                return Err(Error::Structure(
                    "labels must be present for all items or for none".into(),
                ));
            }
            if let Some((c, _)) = item.scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
                return Err(Error::Input(format!(
                    "item `{}` has a non-finite score in component {c}",
                    item.id
                )));
            }
            let side = if item.group == groups[0] {
                Side::A
            } else if item.group == groups[1] {
                Side::B
            } else {
                return Err(Error::UnknownGroup(item.group.0));
            };
            if !seen.insert(item.id.clone()) {
                return Err(Error::Structure(format!("duplicate item id `{}`", item.id)));
            }
            for (col, s) in columns.iter_mut().zip(&item.scores) {
                col.push(*s);
            }
            if let Some(l) = item.label {
                labels.push(l);
            }
            ids.push(item.id);
            sides.push(side);
        }
        for side in [Side::A, Side::B] {
            if !sides.contains(&side) {
                return Err(Error::Structure(format!(
                    "group `{}` has no items",
                    groups[side.index()]
                )));
            }
        }
        Ok(ScoredDataset {
            ids,
            sides,
            labels: has_labels.then_some(labels),
            columns,
            groups,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of score components.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[ItemId] {
        &self.ids
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side(&self, item: usize) -> Side {
        self.sides[item]
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn column(&self, component: usize) -> &[f64] {
        &self.columns[component]
    }

    pub fn groups(&self) -> &[Group; 2] {
        &self.groups
    }

    pub fn group(&self, side: Side) -> &Group {
        &self.groups[side.index()]
    }

    pub fn side_of(&self, group: &Group) -> Result<Side> {
        if *group == self.groups[0] {
            Ok(Side::A)
        } else if *group == self.groups[1] {
            Ok(Side::B)
        } else {
            Err(Error::UnknownGroup(group.0.clone()))
        }
    }

    pub fn group_size(&self, side: Side) -> usize {
        self.sides.iter().filter(|&&s| s == side).count()
    }

    /// Indices of a group's items, in dataset order.
    pub fn members(&self, side: Side) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.sides[i] == side).collect()
    }

    /// Indices of the items in one label-by-group quadrant, in dataset order.
    pub fn quadrant(&self, side: Side, label: bool) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or(Error::LabelsRequired("quadrant selection"))?;
        Ok((0..self.len())
            .filter(|&i| self.sides[i] == side && labels[i] == label)
            .collect())
    }

    /// Reconstructs row `i`.
    pub fn item(&self, i: usize) -> Item {
        Item {
            id: self.ids[i].clone(),
            group: self.groups[self.sides[i].index()].clone(),
            label: self.labels.as_ref().map(|l| l[i]),
            scores: self.columns.iter().map(|c| c[i]).collect(),
        }
    }

    /// Copy of the dataset with component `component` replaced.
    pub fn with_column(&self, component: usize, values: Vec<f64>) -> Result<Self> {
        if component >= self.k() {
            return Err(Error::Input(format!(
                "component {component} out of range (K = {})",
                self.k()
            )));
        }
        check_override(self.len(), component, &values)?;
        let mut out = self.clone();
        out.columns[component] = values;
        Ok(out)
    }

    /// Keeps the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let items = rows.iter().map(|&i| self.item(i)).collect();
        Self::with_group_order(items, self.groups.clone())
    }
}

fn check_override(n: usize, component: usize, values: &[f64]) -> Result<()> {
    if values.len() != n {
        return Err(Error::Structure(format!(
            "override for component {component} has {} values, dataset has {n} items",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "override for component {component} contains a non-finite value"
        )));
    }
    Ok(())
}

/// Per-item product of the component scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeScore(Vec<f64>);

impl CompositeScore {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Multiplies the component scores of every item. `overrides` substitutes
/// whole components before multiplication, so zero scores never need to be
/// divided out.
pub fn compose(dataset: &ScoredDataset, overrides: &[(usize, &[f64])]) -> Result<CompositeScore> {
    let k = dataset.k();
    let mut sources: Vec<&[f64]> = dataset.columns.iter().map(Vec::as_slice).collect();
    for &(component, values) in overrides {
        if component >= k {
            return Err(Error::Structure(format!(
                "override targets component {component}, dataset has K = {k}"
            )));
        }
        check_override(dataset.len(), component, values)?;
        sources[component] = values;
    }
    let mut out = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let v = sources.iter().fold(1.0, |acc, col| acc * col[i]);
        if !v.is_finite() {
            return Err(Error::Input(format!(
                "composite score of item `{}` overflows",
                dataset.ids[i]
            )));
        }
        out.push(v);
    }
    Ok(CompositeScore(out))
}

/// How items with equal scores are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Tied items share the mean rank of their block (and split its exposure).
    #[default]
    RankShare,
    /// Tied blocks are shuffled with a seeded generator; ranks are positions.
    SeededRandom,
}

/// A maximal run of equal scores in a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieBlock {
    /// Zero-based position of the first item of the block.
    pub start: usize,
    pub len: usize,
}

impl TieBlock {
    /// One-based mean rank of the block's positions.
    pub fn mean_rank(&self) -> f64 {
        self.start as f64 + (self.len as f64 + 1.0) / 2.0
    }
}

/// Items ordered by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    order: Vec<usize>,
    effective_rank: Vec<f64>,
    blocks: Vec<TieBlock>,
    tie_policy: TiePolicy,
}

impl Ranking {
    /// Item indices from best to worst.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// One-based effective rank, indexed by item.
    pub fn effective_rank(&self, item: usize) -> f64 {
        self.effective_rank[item]
    }

    pub fn effective_ranks(&self) -> &[f64] {
        &self.effective_rank
    }

    /// Tie blocks in ranking order. Under [`TiePolicy::SeededRandom`] every
    /// block is a single item.
    pub fn blocks(&self) -> &[TieBlock] {
        &self.blocks
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Builds a ranking directly from an order with every position distinct.
    pub(crate) fn from_permutation(order: Vec<usize>) -> Self {
        let n = order.len();
        let mut effective_rank = vec![0.0; n];
        for (pos, &item) in order.iter().enumerate() {
            effective_rank[item] = (pos + 1) as f64;
        }
        Ranking {
            order,
            effective_rank,
            blocks: (0..n).map(|start| TieBlock { start, len: 1 }).collect(),
            tie_policy: TiePolicy::SeededRandom,
        }
    }
}

/// Orders items by descending score. Equal scores form tie blocks handled per
/// `tie_policy`; `seed` drives [`TiePolicy::SeededRandom`] (default 0).
pub fn rank(scores: &[f64], tie_policy: TiePolicy, seed: Option<u64>) -> Result<Ranking> {
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Input(format!("score of item {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut blocks = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let value = scores[order[start]];
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == value {
            end += 1;
        }
        blocks.push(TieBlock {
            start,
            len: end - start,
        });
        start = end;
    }

    match tie_policy {
        TiePolicy::RankShare => {
            let mut effective_rank = vec![0.0; scores.len()];
            for block in &blocks {
                let r = block.mean_rank();
                for &item in &order[block.start..block.start + block.len] {
                    effective_rank[item] = r;
                }
            }
            Ok(Ranking {
                order,
                effective_rank,
                blocks,
                tie_policy,
            })
        }
        TiePolicy::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
            for block in blocks.iter().filter(|b| b.len > 1) {
                order[block.start..block.start + block.len].shuffle(&mut rng);
            }
            Ok(Ranking::from_permutation(order))
        }
    }
}

/// Position discount `u[x|r]` applied to an item's effective rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    /// `rank^-w` with `w >= 0`.
    Power { w: f64 },
    /// `1 / log2(1 + rank)`, the DCG position discount.
    LogDiscount,
}

impl Default for Utility {
    fn default() -> Self {
        Utility::Power { w: 0.65 }
    }
}

impl Utility {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Utility::Power { w } if !(w.is_finite() && w >= 0.0) => Err(Error::Input(format!(
                "utility exponent must be finite and >= 0, got {w}"
            ))),
            _ => Ok(()),
        }
    }

    /// Utility of an item at one-based effective rank `rank`.
    pub fn eval(&self, rank: f64) -> f64 {
        match *self {
            Utility::Power { w } => libm::pow(rank, -w),
            Utility::LogDiscount => 1.0 / libm::log2(1.0 + rank),
        }
    }
}

impl fmt::Display for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utility::Power { w } => write!(f, "power(w={w})"),
            Utility::LogDiscount => f.write_str("log-discount"),
        }
    }
}

/// Per-component fix transform.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FixMethod {
    #[default]
    None,
    MarginalMatch,
    ConditionalMatch,
    DeltaMatch,
    Normalize,
    ConstantP(f64),
}

impl FixMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FixMethod::None => "none",
            FixMethod::MarginalMatch => "marginal-match",
            FixMethod::ConditionalMatch => "conditional-match",
            FixMethod::DeltaMatch => "delta-match",
            FixMethod::Normalize => "normalize",
            FixMethod::ConstantP(_) => "constant-p",
        }
    }

    pub fn needs_labels(&self) -> bool {
        matches!(
            self,
            FixMethod::ConditionalMatch | FixMethod::DeltaMatch | FixMethod::ConstantP(_)
        )
    }
}

impl fmt::Display for FixMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixMethod::ConstantP(p) => write!(f, "constant-p(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Which fix applies to which component.
#[derive(Debug, Clone, PartialEq)]
pub struct FixConfig {
    pub methods: Vec<FixMethod>,
    /// Group whose distribution is kept fixed by the matching transforms.
    pub reference: Side,
    /// Shift every fixed component by `1 + |min|` so all its scores are positive.
    pub positivity_shift: bool,
}

impl FixConfig {
    pub fn none(k: usize) -> Self {
        Self::uniform(k, FixMethod::None)
    }

    pub fn uniform(k: usize, method: FixMethod) -> Self {
        FixConfig {
            methods: vec![method; k],
            reference: Side::A,
            positivity_shift: false,
        }
    }

    pub fn method(&self, component: usize) -> FixMethod {
        self.methods.get(component).copied().unwrap_or_default()
    }

    /// Checks the configuration against a dataset.
    pub fn validate(&self, dataset: &ScoredDataset) -> Result<()> {
        if self.methods.len() != dataset.k() {
            return Err(Error::Structure(format!(
                "fix config lists {} components, dataset has K = {}",
                self.methods.len(),
                dataset.k()
            )));
        }
        for m in &self.methods {
            if let FixMethod::ConstantP(p) = *m {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Input(format!("constant-p needs 0 < p < 1, got {p}")));
                }
            }
            if m.needs_labels() && !dataset.has_labels() {
                return Err(Error::LabelsRequired(m.name()));
            }
        }
        Ok(())
    }
}
