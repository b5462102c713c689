//! Per-component transforms that simulate a "fixed" component without
//! retraining it.
//!
//! Matching transforms keep the reference group's scores and move the other
//! group onto the reference distribution. Equal-sized groups get an exact
//! sort-and-reassign; unequal sizes use linear interpolation between the
//! reference order statistics. Delta matching works on pairs rather than
//! items and therefore produces a pair-level table instead of item scores.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::{pairwise_gap_from_deltas, PairwiseReport, TieCredit};
use crate::model::{FixMethod, ScoredDataset, Side};

/// A transformed component.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedComponent {
    pub component: usize,
    pub method: FixMethod,
    pub values: FixedValues,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedValues {
    PerItem(alloc::vec::Vec<f64>),
    PairLevel(DeltaMatch),
}

impl FixedComponent {
    /// Per-item scores; `None` for pair-level fixes.
    pub fn scores(&self) -> Option<&[f64]> {
        match &self.values {
            FixedValues::PerItem(v) => Some(v),
            FixedValues::PairLevel(_) => None,
        }
    }

    pub fn into_scores(self) -> Option<Vec<f64>> {
        match self.values {
            FixedValues::PerItem(v) => Some(v),
            FixedValues::PairLevel(_) => None,
        }
    }

    fn per_item(component: usize, method: FixMethod, scores: Vec<f64>) -> Self {
        FixedComponent {
            component,
            method,
            values: FixedValues::PerItem(scores),
        }
    }
}

fn check_component(dataset: &ScoredDataset, component: usize) -> Result<()> {
    if component >= dataset.k() {
        return Err(Error::Input(format!(
            "component {component} out of range (K = {})",
            dataset.k()
        )));
    }
    Ok(())
}

/// Value assigned to sorted position `j` of an `m`-item group when its
/// distribution is moved onto `reference` (ascending, non-empty).
///
/// Equal sizes reassign order statistics one to one. Otherwise position `j`
/// takes the reference quantile at level `(j + 1) / (m + 1)`, interpolated
/// linearly between adjacent order statistics.
fn matched_value(reference: &[f64], m: usize, j: usize) -> f64 {
    let n = reference.len();
    if n == m {
        return reference[j];
    }
    let num = (j + 1) * (n - 1);
    let den = m + 1;
    let lo = (num / den).min(n - 1);
    let rem = num % den;
    if rem == 0 || lo + 1 >= n {
        return reference[lo];
    }
    let frac = rem as f64 / den as f64;
    reference[lo] + frac * (reference[lo + 1] - reference[lo])
}

/// Moves the scores of `targets` onto the empirical distribution of
/// `references`, writing into `out`.
fn match_onto(column: &[f64], references: &[usize], targets: &[usize], out: &mut [f64]) {
    let mut reference: Vec<f64> = references.iter().map(|&i| column[i]).collect();
    reference.sort_by(f64::total_cmp);
    let mut sorted_targets = targets.to_vec();
    sorted_targets.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
    let m = sorted_targets.len();
    for (j, &item) in sorted_targets.iter().enumerate() {
        out[item] = matched_value(&reference, m, j);
    }
}

/// Marginal distribution matching: the non-reference group's scores become
/// the reference group's scores at the same relative rank.
pub fn marginal_match(dataset: &ScoredDataset, component: usize, reference: Side) -> Result<FixedComponent> {
    check_component(dataset, component)?;
    let column = dataset.column(component);
    let refs = dataset.members(reference);
    let targets = dataset.members(reference.other());
    if refs.is_empty() || targets.is_empty() {
        return Err(Error::Input("both groups must be non-empty".into()));
    }
    let mut out = column.to_vec();
    match_onto(column, &refs, &targets, &mut out);
    Ok(FixedComponent::per_item(component, FixMethod::MarginalMatch, out))
}

fn quadrant_name(side: Side, label: bool) -> &'static str {
    match (side, label) {
        (Side::A, false) => "A0",
        (Side::A, true) => "A1",
        (Side::B, false) => "B0",
        (Side::B, true) => "B1",
    }
}

/// Marginal matching applied separately within unclicked and clicked items.
pub fn conditional_match(dataset: &ScoredDataset, component: usize, reference: Side) -> Result<FixedComponent> {
    check_component(dataset, component)?;
    if !dataset.has_labels() {
        return Err(Error::LabelsRequired("conditional matching"));
    }
    let column = dataset.column(component);
    let mut out = column.to_vec();
    for label in [false, true] {
        let refs = dataset.quadrant(reference, label)?;
        let targets = dataset.quadrant(reference.other(), label)?;
        for (q, side) in [(&refs, reference), (&targets, reference.other())] {
            if q.is_empty() {
                return Err(Error::EmptyQuadrant(quadrant_name(side, label)));
            }
        }
        match_onto(column, &refs, &targets, &mut out);
    }
    Ok(FixedComponent::per_item(component, FixMethod::ConditionalMatch, out))
}

/// Per-group standardization to mean 0 and population standard deviation 1.
pub fn normalize(dataset: &ScoredDataset, component: usize) -> Result<FixedComponent> {
    check_component(dataset, component)?;
    let column = dataset.column(component);
    let mut out = column.to_vec();
    for side in [Side::A, Side::B] {
        let members = dataset.members(side);
        let n = members.len() as f64;
        let mean = members.iter().map(|&i| column[i]).sum::<f64>() / n;
        let var = members
            .iter()
            .map(|&i| (column[i] - mean) * (column[i] - mean))
            .sum::<f64>()
            / n;
        let sd = libm::sqrt(var);
        if members.len() < 2 || sd.is_nan() || sd <= 0.0 {
            return Err(Error::Degenerate(dataset.group(side).0.clone()));
        }
        for &i in &members {
            out[i] = (column[i] - mean) / sd;
        }
    }
    Ok(FixedComponent::per_item(component, FixMethod::Normalize, out))
}

/// Sets clicked items to `p` and unclicked items to `1 - p`.
pub fn constant_p(dataset: &ScoredDataset, component: usize, p: f64) -> Result<FixedComponent> {
    check_component(dataset, component)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Input(format!("constant-p needs 0 < p < 1, got {p}")));
    }
    let labels = dataset.labels().ok_or(Error::LabelsRequired("constant-p"))?;
    let out = labels.iter().map(|&l| if l { p } else { 1.0 - p }).collect();
    Ok(FixedComponent::per_item(component, FixMethod::ConstantP(p), out))
}

/// Adds `1 + |min|` to every value so the smallest becomes at least 1.
pub fn positivity_shift(values: &mut [f64]) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        let shift = 1.0 + min.abs();
        values.iter_mut().for_each(|v| *v += shift);
    }
}

/// Sorted multiset of score differences `f(x_i) - f(x_j)` over clicked `x_i`
/// of one group and unclicked `x_j` of the other.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSet {
    values: Vec<f64>,
}

impl DeltaSet {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        DeltaSet { values }
    }

    /// Deltas for the direction whose clicked items come from `positive`.
    pub fn for_direction(dataset: &ScoredDataset, component: usize, positive: Side) -> Result<Self> {
        check_component(dataset, component)?;
        let pos = dataset.quadrant(positive, true)?;
        let neg = dataset.quadrant(positive.other(), false)?;
        let column = dataset.column(component);
        let mut values = Vec::with_capacity(pos.len() * neg.len());
        for &i in &pos {
            for &j in &neg {
                values.push(column[i] - column[j]);
            }
        }
        Ok(Self::from_values(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scores of one (clicked, unclicked) pair after delta matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub positive: usize,
    pub negative: usize,
    pub positive_score: f64,
    pub negative_score: f64,
    /// `positive_score - negative_score` as defined by the fix; kept exactly
    /// rather than recomputed from the rounded scores.
    pub delta: f64,
}

/// Pair-level output of delta matching: the `A1 x B0` pairs untouched, the
/// `B1 x A0` pairs rewritten so their deltas equal the kept multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatch {
    pub kept: Vec<PairScore>,
    pub fixed: Vec<PairScore>,
}

impl DeltaMatch {
    pub fn kept_deltas(&self) -> Vec<f64> {
        self.kept.iter().map(|p| p.delta).collect()
    }

    pub fn fixed_deltas(&self) -> Vec<f64> {
        self.fixed.iter().map(|p| p.delta).collect()
    }

    pub fn pairwise_report(&self, credit: TieCredit) -> Result<PairwiseReport> {
        pairwise_gap_from_deltas(&self.kept_deltas(), &self.fixed_deltas(), credit)
    }
}

/// Delta matching. Every `B1 x A0` pair's delta is replaced by the element of
/// the sorted `A1 x B0` delta multiset at the same rank, realized by moving
/// the clicked `B1` score to `f(x_j) + c` for that pair.
pub fn delta_match(dataset: &ScoredDataset, component: usize) -> Result<FixedComponent> {
    check_component(dataset, component)?;
    if !dataset.has_labels() {
        return Err(Error::LabelsRequired("delta matching"));
    }
    let a0 = dataset.quadrant(Side::A, false)?;
    let a1 = dataset.quadrant(Side::A, true)?;
    let b0 = dataset.quadrant(Side::B, false)?;
    let b1 = dataset.quadrant(Side::B, true)?;
    for (q, name) in [(&a0, "A0"), (&a1, "A1"), (&b0, "B0"), (&b1, "B1")] {
        if q.is_empty() {
            return Err(Error::EmptyQuadrant(name));
        }
    }
    let sizes = [a0.len(), a1.len(), b0.len(), b1.len()];
    if sizes.iter().any(|&s| s != sizes[0]) {
        return Err(Error::QuadrantSizes(sizes));
    }
    let f = dataset.column(component);

    let mut kept = Vec::with_capacity(a1.len() * b0.len());
    for &i in &a1 {
        for &j in &b0 {
            kept.push(PairScore {
                positive: i,
                negative: j,
                positive_score: f[i],
                negative_score: f[j],
                delta: f[i] - f[j],
            });
        }
    }
    let mut target: Vec<f64> = kept.iter().map(|p| p.delta).collect();
    target.sort_by(f64::total_cmp);

    let mut original = Vec::with_capacity(b1.len() * a0.len());
    for &i in &b1 {
        for &j in &a0 {
            original.push((i, j, f[i] - f[j]));
        }
    }
    let mut by_delta: Vec<usize> = (0..original.len()).collect();
    by_delta.sort_by(|&x, &y| original[x].2.total_cmp(&original[y].2).then(x.cmp(&y)));
    let mut fixed = alloc::vec![
        PairScore {
            positive: 0,
            negative: 0,
            positive_score: 0.0,
            negative_score: 0.0,
            delta: 0.0,
        };
        original.len()
    ];
    for (rank, &pair) in by_delta.iter().enumerate() {
        let (i, j, _) = original[pair];
        let c = target[rank];
        fixed[pair] = PairScore {
            positive: i,
            negative: j,
            positive_score: f[j] + c,
            negative_score: f[j],
            delta: c,
        };
    }
    Ok(FixedComponent {
        component,
        method: FixMethod::DeltaMatch,
        values: FixedValues::PairLevel(DeltaMatch { kept, fixed }),
    })
}

/// Applies `method` to one component. `FixMethod::None` returns the
/// original column. The positivity shift applies to per-item fixes only.
pub fn apply_fix(
    dataset: &ScoredDataset,
    component: usize,
    method: FixMethod,
    reference: Side,
    shift: bool,
) -> Result<FixedComponent> {
    let mut fixed = match method {
        FixMethod::None => {
            check_component(dataset, component)?;
            return Ok(FixedComponent::per_item(
                component,
                method,
                dataset.column(component).to_vec(),
            ));
        }
        FixMethod::MarginalMatch => marginal_match(dataset, component, reference)?,
        FixMethod::ConditionalMatch => conditional_match(dataset, component, reference)?,
        FixMethod::DeltaMatch => return delta_match(dataset, component),
        FixMethod::Normalize => normalize(dataset, component)?,
        FixMethod::ConstantP(p) => constant_p(dataset, component, p)?,
    };
    if shift {
        if let FixedValues::PerItem(v) = &mut fixed.values {
            positivity_shift(v);
        }
    }
    Ok(fixed)
}
