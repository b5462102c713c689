//! Counterfactual headroom: how fair would the composed system be if some
//! components were fixed?
//!
//! Fairness improvement is reported as `FI = baseline gap - improved gap`,
//! so a positive FI means the fix helps and the largest FI marks the
//! component with the most headroom.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fixes::{apply_fix, FixedComponent};
use crate::metrics::{exposure_gap, pairwise_gap_with, TieCredit};
use crate::model::{compose, rank, CompositeScore, FixConfig, FixMethod, ScoredDataset, TiePolicy, Utility};

/// Largest K for which every non-empty subset may be enumerated.
pub const MAX_ALL_SUBSETS_K: usize = 16;

/// Metric a counterfactual run is scored on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Exposure {
        utility: Utility,
        top_n: Option<usize>,
        ties: TiePolicy,
        seed: Option<u64>,
    },
    Pairwise {
        credit: TieCredit,
    },
}

impl Default for Target {
    fn default() -> Self {
        Target::Exposure {
            utility: Utility::default(),
            top_n: None,
            ties: TiePolicy::RankShare,
            seed: None,
        }
    }
}

impl Target {
    /// Absolute gap of `scores` on this target.
    pub fn gap(&self, scores: &[f64], dataset: &ScoredDataset) -> Result<f64> {
        match *self {
            Target::Exposure {
                utility,
                top_n,
                ties,
                seed,
            } => {
                let ranking = rank(scores, ties, seed)?;
                Ok(exposure_gap(&ranking, dataset, utility, top_n)?.abs_gap)
            }
            Target::Pairwise { credit } => Ok(pairwise_gap_with(scores, dataset, credit)?.gap),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualSpec {
    pub target: Target,
    pub fixes: FixConfig,
}

impl CounterfactualSpec {
    pub fn validate(&self, dataset: &ScoredDataset) -> Result<()> {
        self.fixes.validate(dataset)?;
        if matches!(self.target, Target::Pairwise { .. }) && !dataset.has_labels() {
            return Err(Error::LabelsRequired("the pairwise gap"));
        }
        if let Target::Exposure { utility, .. } = self.target {
            utility.validate()?;
        }
        Ok(())
    }
}

fn normalized_subset(subset: &[usize], k: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::Input("component subset must be non-empty".into()));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != subset.len() {
        return Err(Error::Input(format!("duplicate component in subset {subset:?}")));
    }
    if let Some(&bad) = s.iter().find(|&&c| c >= k) {
        return Err(Error::Input(format!("component {bad} out of range (K = {k})")));
    }
    Ok(s)
}

fn fix_component(dataset: &ScoredDataset, component: usize, fixes: &FixConfig) -> Result<FixedComponent> {
    let method = fixes.method(component);
    if method == FixMethod::DeltaMatch {
        return Err(Error::UnsupportedFix("delta-match"));
    }
    apply_fix(dataset, component, method, fixes.reference, fixes.positivity_shift)
}

fn compose_with(
    dataset: &ScoredDataset,
    subset: &[usize],
    fixed: &BTreeMap<usize, FixedComponent>,
) -> Result<CompositeScore> {
    let overrides: Vec<(usize, &[f64])> = subset
        .iter()
        .map(|c| (*c, fixed[c].scores().expect("per-item fix")))
        .collect();
    compose(dataset, &overrides)
}

/// Composite score with every component in `subset` replaced by its fixed
/// version and all other components left as they are.
pub fn improved_system(dataset: &ScoredDataset, subset: &[usize], fixes: &FixConfig) -> Result<CompositeScore> {
    fixes.validate(dataset)?;
    let subset = normalized_subset(subset, dataset.k())?;
    let mut fixed = BTreeMap::new();
    for &c in &subset {
        fixed.insert(c, fix_component(dataset, c, fixes)?);
    }
    compose_with(dataset, &subset, &fixed)
}

/// `gap(baseline) - gap(improved)` for the given subset.
pub fn fairness_improvement(dataset: &ScoredDataset, subset: &[usize], spec: &CounterfactualSpec) -> Result<f64> {
    spec.validate(dataset)?;
    let baseline = spec.target.gap(compose(dataset, &[])?.values(), dataset)?;
    let improved = improved_system(dataset, subset, &spec.fixes)?;
    Ok(baseline - spec.target.gap(improved.values(), dataset)?)
}

/// Which component subsets a sweep evaluates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetSelection {
    Singletons,
    /// Every non-empty subset; K must not exceed [`MAX_ALL_SUBSETS_K`].
    All,
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadroomRow {
    /// Component indices, ascending.
    pub subset: Vec<usize>,
    pub baseline_gap: f64,
    pub improved_gap: f64,
    pub fi: f64,
}

/// Rows sorted by FI descending, then subset size, then lexicographic
/// component order.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadroomTable {
    pub baseline_gap: f64,
    pub rows: Vec<HeadroomRow>,
}

fn enumerate(selection: &SubsetSelection, k: usize) -> Result<Vec<Vec<usize>>> {
    match selection {
        SubsetSelection::Singletons => Ok((0..k).map(|c| alloc::vec![c]).collect()),
        SubsetSelection::All => {
            if k > MAX_ALL_SUBSETS_K {
                return Err(Error::Input(format!(
                    "all-subsets sweep supports at most {MAX_ALL_SUBSETS_K} components, got {k}"
                )));
            }
            Ok((1u32..(1 << k))
                .map(|mask| (0..k).filter(|c| mask & (1 << c) != 0).collect())
                .collect())
        }
        SubsetSelection::Explicit(list) => {
            if list.is_empty() {
                return Err(Error::Input("explicit subset list is empty".into()));
            }
            list.iter().map(|s| normalized_subset(s, k)).collect()
        }
    }
}

/// Evaluates every selected subset against one shared baseline. Each
/// component is fixed at most once and reused across rows.
pub fn headroom_sweep(
    dataset: &ScoredDataset,
    spec: &CounterfactualSpec,
    selection: &SubsetSelection,
) -> Result<HeadroomTable> {
    spec.validate(dataset)?;
    let subsets = enumerate(selection, dataset.k())?;
    let baseline_gap = spec.target.gap(compose(dataset, &[])?.values(), dataset)?;

    let mut fixed = BTreeMap::new();
    for c in subsets.iter().flatten() {
        if !fixed.contains_key(c) {
            fixed.insert(*c, fix_component(dataset, *c, &spec.fixes)?);
        }
    }

    let mut rows = subsets
        .into_iter()
        .map(|subset| {
            let composite = compose_with(dataset, &subset, &fixed)?;
            let improved_gap = spec.target.gap(composite.values(), dataset)?;
            Ok(HeadroomRow {
                subset,
                baseline_gap,
                improved_gap,
                fi: baseline_gap - improved_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| {
        y.fi.total_cmp(&x.fi)
            .then(x.subset.len().cmp(&y.subset.len()))
            .then_with(|| x.subset.cmp(&y.subset))
    });
    Ok(HeadroomTable { baseline_gap, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen;
    use crate::fixes::marginal_match;
    use crate::model::{Item, Side};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn exposure_target(w: f64, top_n: Option<usize>) -> Target {
        Target::Exposure {
            utility: Utility::Power { w },
            top_n,
            ties: TiePolicy::RankShare,
            seed: None,
        }
    }

    fn spec(k: usize, method: FixMethod, target: Target) -> CounterfactualSpec {
        CounterfactualSpec {
            target,
            fixes: FixConfig::uniform(k, method),
        }
    }

    #[test]
    fn none_fix_reproduces_baseline() {
        let d = datagen::gen_synthetic_1(100, 1);
        let base = compose(&d, &[]).unwrap();
        let improved = improved_system(&d, &[0, 1], &FixConfig::none(2)).unwrap();
        assert_eq!(improved, base);
        let s = spec(2, FixMethod::None, Target::default());
        assert_eq!(fairness_improvement(&d, &[1], &s).unwrap(), 0.0);
    }

    #[test]
    fn improved_system_is_manual_product() {
        let d = datagen::gen_synthetic_1(20, 2);
        let improved = improved_system(&d, &[0], &FixConfig::uniform(2, FixMethod::MarginalMatch)).unwrap();
        let g0 = marginal_match(&d, 0, Side::A).unwrap().into_scores().unwrap();
        for ((&v, &a), &b) in improved.values().iter().zip(&g0).zip(d.column(1)) {
            assert_eq!(v, 1.0 * a * b);
        }
    }

    #[test]
    fn delta_match_cannot_compose() {
        let d = datagen::pairwise_counterexample();
        let fixes = FixConfig::uniform(2, FixMethod::DeltaMatch);
        assert_eq!(
            improved_system(&d, &[0], &fixes),
            Err(Error::UnsupportedFix("delta-match"))
        );
    }

    #[test]
    fn subset_validation() {
        let d = datagen::gen_synthetic_1(5, 2);
        let f = FixConfig::uniform(2, FixMethod::Normalize);
        assert!(matches!(improved_system(&d, &[], &f), Err(Error::Input(_))));
        assert!(matches!(improved_system(&d, &[0, 0], &f), Err(Error::Input(_))));
        assert!(matches!(improved_system(&d, &[2], &f), Err(Error::Input(_))));
    }

    #[test]
    fn pairwise_target_needs_labels() {
        let d = datagen::gen_synthetic_1(5, 2);
        let s = spec(
            2,
            FixMethod::Normalize,
            Target::Pairwise {
                credit: TieCredit::Strict,
            },
        );
        assert_eq!(
            fairness_improvement(&d, &[0], &s),
            Err(Error::LabelsRequired("the pairwise gap"))
        );
    }

    /// Both groups share per-component marginals, so matching changes nothing,
    /// yet the composite puts an A item on top.
    fn coinciding_marginals() -> ScoredDataset {
        let items = vec![
            Item::new("a0", "A", None, vec![1.0, 1.0]),
            Item::new("a1", "A", None, vec![2.0, 2.0]),
            Item::new("b0", "B", None, vec![1.0, 2.0]),
            Item::new("b1", "B", None, vec![2.0, 1.0]),
        ];
        ScoredDataset::new(items).unwrap()
    }

    #[test]
    fn matching_every_component_does_not_guarantee_zero_gap() {
        let d = coinciding_marginals();
        let s = spec(2, FixMethod::MarginalMatch, exposure_target(0.0, Some(1)));
        let t = headroom_sweep(&d, &s, &SubsetSelection::Explicit(vec![vec![0, 1]])).unwrap();
        assert_eq!(t.baseline_gap, 1.0);
        assert_eq!(t.rows[0].improved_gap, 1.0);
        assert_eq!(t.rows[0].fi, 0.0);
    }

    #[test]
    fn matching_every_component_on_epsilon_example_ties_everything() {
        // Matching moves B onto A's per-component values, after which the
        // composites of all four items coincide.
        let d = datagen::epsilon_example(1.0, 0.5).unwrap();
        let c = improved_system(&d, &[0, 1], &FixConfig::uniform(2, FixMethod::MarginalMatch)).unwrap();
        assert!(c.values().iter().all(|&v| v == c.values()[0]));
        let s = spec(2, FixMethod::MarginalMatch, exposure_target(0.0, Some(2)));
        assert_eq!(fairness_improvement(&d, &[0, 1], &s).unwrap(), 1.0);
    }

    #[test]
    fn synthetic_1_matching_is_monotone() {
        let d = datagen::gen_synthetic_1(1000, 7);
        let s = spec(2, FixMethod::MarginalMatch, Target::default());
        let t = headroom_sweep(&d, &s, &SubsetSelection::All).unwrap();
        let gap = |sub: &[usize]| t.rows.iter().find(|r| r.subset == sub).unwrap().improved_gap;
        assert!(gap(&[0, 1]) < gap(&[0]) && gap(&[0]) < t.baseline_gap);
        assert!(gap(&[0, 1]) < gap(&[1]) && gap(&[1]) < t.baseline_gap);
    }

    #[test]
    fn single_component_sweep() {
        let items = (0..6)
            .map(|i| {
                Item::new(
                    i.to_string(),
                    if i % 3 == 0 { "A" } else { "B" },
                    None,
                    vec![f64::from(i) + 1.0],
                )
            })
            .collect();
        let d = ScoredDataset::new(items).unwrap();
        let s = spec(1, FixMethod::MarginalMatch, Target::default());
        let t = headroom_sweep(&d, &s, &SubsetSelection::Singletons).unwrap();
        assert_eq!(t.rows.len(), 1);
        let direct = improved_system(&d, &[0], &s.fixes).unwrap();
        assert_eq!(t.rows[0].improved_gap, s.target.gap(direct.values(), &d).unwrap());
    }

    #[test]
    fn all_subsets_rows_match_direct_calls() {
        let spec3 = labeled_three_components();
        let s = spec(
            3,
            FixMethod::ConditionalMatch,
            Target::Pairwise {
                credit: TieCredit::Strict,
            },
        );
        let t = headroom_sweep(&spec3, &s, &SubsetSelection::All).unwrap();
        assert_eq!(t.rows.len(), 7);
        for row in &t.rows {
            let c = improved_system(&spec3, &row.subset, &s.fixes).unwrap();
            assert_eq!(row.improved_gap, s.target.gap(c.values(), &spec3).unwrap());
            assert_eq!(row.baseline_gap, t.baseline_gap);
            assert_eq!(row.fi, t.baseline_gap - row.improved_gap);
        }
        for w in t.rows.windows(2) {
            assert!(w[0].fi >= w[1].fi);
        }
    }

    fn labeled_three_components() -> ScoredDataset {
        datagen::gen_labeled(&datagen::LabeledSpec::unequal_separation(60, 3, 9)).unwrap()
    }

    #[test]
    fn all_subsets_limit() {
        let items = vec![
            Item::new("a", "A", None, vec![1.0; 17]),
            Item::new("b", "B", None, vec![2.0; 17]),
        ];
        let d = ScoredDataset::new(items).unwrap();
        let s = spec(17, FixMethod::None, Target::default());
        assert!(matches!(
            headroom_sweep(&d, &s, &SubsetSelection::All),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn ties_in_fi_break_by_size_then_index() {
        let d = coinciding_marginals();
        let s = spec(2, FixMethod::MarginalMatch, exposure_target(0.0, Some(1)));
        let t = headroom_sweep(&d, &s, &SubsetSelection::All).unwrap();
        let order: Vec<Vec<usize>> = t.rows.iter().map(|r| r.subset.clone()).collect();
        assert_eq!(order, vec![vec![0], vec![1], vec![0, 1]]);
    }

    proptest! {
        #[test]
        fn fi_matches_recomputed_difference(
            raw in proptest::collection::vec((0.1f64..5.0, 0.1f64..5.0), 4..40),
            w in 0.0f64..1.0,
        ) {
            let items = raw.iter().enumerate()
                .map(|(i, &(x, y))| Item::new(i.to_string(), if i % 2 == 0 { "A" } else { "B" }, None, vec![x, y]))
                .collect();
            let d = ScoredDataset::new(items).unwrap();
            let s = spec(2, FixMethod::MarginalMatch, exposure_target(w, None));
            let fi = fairness_improvement(&d, &[1], &s).unwrap();
            let base = compose(&d, &[]).unwrap();
            let g1 = marginal_match(&d, 1, Side::A).unwrap().into_scores().unwrap();
            let manual: Vec<f64> = (0..d.len()).map(|i| d.column(0)[i] * g1[i]).collect();
            let oracle = {
                let r = rank(base.values(), TiePolicy::RankShare, None).unwrap();
                let r2 = rank(&manual, TiePolicy::RankShare, None).unwrap();
                exposure_gap(&r, &d, Utility::Power { w }, None).unwrap().abs_gap
                    - exposure_gap(&r2, &d, Utility::Power { w }, None).unwrap().abs_gap
            };
            prop_assert_eq!(fi, oracle);
        }
    }
}
