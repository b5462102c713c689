//! Exposure gap and pairwise ranking gap, plus position sweeps and
//! random-ordering baselines.
//!
//! Exposure sums a position discount over a group's items. Under rank-share
//! ties a block of equal scores contributes `count * u(mean rank)` per group,
//! accumulated block by block in ranking order, so two groups holding the same
//! multiset of scores receive bit-identical exposure. A top-`n` cutoff that
//! falls inside a tie block includes each of its items fractionally.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{rank, Group, Ranking, ScoredDataset, Side, TiePolicy, Utility};

/// Exposure of both groups and the normalized gap between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureReport {
    pub exposure_a: f64,
    pub exposure_b: f64,
    pub share_a: f64,
    pub share_b: f64,
    /// `(E_A - E_B) / (E_A + E_B)`; positive favours group A.
    pub signed_gap: f64,
    pub abs_gap: f64,
    pub utility: Utility,
    pub top_n: Option<usize>,
    /// Signed gap a size-proportional allocation would produce, `(|A| - |B|) / (|A| + |B|)`.
    pub proportional_reference: f64,
}

fn check_ranking(ranking: &Ranking, dataset: &ScoredDataset, top_n: Option<usize>) -> Result<usize> {
    if ranking.len() != dataset.len() {
        return Err(Error::Structure(format!(
            "ranking covers {} items, dataset has {}",
            ranking.len(),
            dataset.len()
        )));
    }
    match top_n {
        Some(t) if t > dataset.len() => Err(Error::Input(format!(
            "top_n = {t} exceeds the item count {}",
            dataset.len()
        ))),
        Some(t) => Ok(t),
        None => Ok(dataset.len()),
    }
}

/// Exposure of groups A and B within the first `cutoff` positions.
fn group_exposures(ranking: &Ranking, sides: &[Side], utility: Utility, cutoff: usize) -> [f64; 2] {
    let order = ranking.order();
    let mut exposure = [0.0f64; 2];
    for block in ranking.blocks() {
        if block.start >= cutoff {
            break;
        }
        let inside = block.len.min(cutoff - block.start);
        let u = utility.eval(block.mean_rank());
        let per_item = if inside == block.len {
            u
        } else {
            u * (inside as f64 / block.len as f64)
        };
        let mut counts = [0usize; 2];
        for &item in &order[block.start..block.start + block.len] {
            counts[sides[item].index()] += 1;
        }
        exposure[0] += counts[0] as f64 * per_item;
        exposure[1] += counts[1] as f64 * per_item;
    }
    exposure
}

/// Sum of `u[x|r]` over `group`'s items within the top `top_n` positions
/// (all positions when `None`).
pub fn exposure(
    ranking: &Ranking,
    dataset: &ScoredDataset,
    group: &Group,
    utility: Utility,
    top_n: Option<usize>,
) -> Result<f64> {
    let side = dataset.side_of(group)?;
    utility.validate()?;
    let cutoff = check_ranking(ranking, dataset, top_n)?;
    Ok(group_exposures(ranking, dataset.sides(), utility, cutoff)[side.index()])
}

pub fn exposure_gap(
    ranking: &Ranking,
    dataset: &ScoredDataset,
    utility: Utility,
    top_n: Option<usize>,
) -> Result<ExposureReport> {
    utility.validate()?;
    let cutoff = check_ranking(ranking, dataset, top_n)?;
    let [ea, eb] = group_exposures(ranking, dataset.sides(), utility, cutoff);
    report_from_exposures(ea, eb, dataset, utility, top_n)
}

fn report_from_exposures(
    ea: f64,
    eb: f64,
    dataset: &ScoredDataset,
    utility: Utility,
    top_n: Option<usize>,
) -> Result<ExposureReport> {
    let total = ea + eb;
    if total <= 0.0 {
        return Err(Error::UndefinedGap);
    }
    let signed_gap = (ea - eb) / total;
    let na = dataset.group_size(Side::A) as f64;
    let nb = dataset.group_size(Side::B) as f64;
    Ok(ExposureReport {
        exposure_a: ea,
        exposure_b: eb,
        share_a: ea / total,
        share_b: eb / total,
        signed_gap,
        abs_gap: signed_gap.abs(),
        utility,
        top_n,
        proportional_reference: (na - nb) / (na + nb),
    })
}

/// Which cross-group pair population a pairwise accuracy is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Clicked items of A against unclicked items of B.
    AOverB,
    /// Clicked items of B against unclicked items of A.
    BOverA,
}

impl Direction {
    fn quadrants(self) -> (Side, &'static str, Side, &'static str) {
        match self {
            Direction::AOverB => (Side::A, "A1", Side::B, "B0"),
            Direction::BOverA => (Side::B, "B1", Side::A, "A0"),
        }
    }
}

/// How score ties inside a pair are credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieCredit {
    /// Ties count as incorrect.
    #[default]
    Strict,
    /// Ties count half.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub correct: u64,
    pub tied: u64,
    pub total: u64,
}

impl PairCounts {
    pub fn accuracy(&self, credit: TieCredit) -> f64 {
        match credit {
            TieCredit::Strict => self.correct as f64 / self.total as f64,
            TieCredit::Half => (2 * self.correct + self.tied) as f64 / (2 * self.total) as f64,
        }
    }
}

fn check_scores(scores: &[f64], dataset: &ScoredDataset) -> Result<()> {
    if scores.len() != dataset.len() {
        return Err(Error::Structure(format!(
            "{} scores supplied for {} items",
            scores.len(),
            dataset.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Input(format!("score of item {i} is NaN")));
    }
    Ok(())
}

/// Counts correctly ordered (clicked above unclicked) cross-group pairs.
/// Sorting the unclicked side gives `O(n log n)` instead of enumerating pairs.
pub fn pair_counts(scores: &[f64], dataset: &ScoredDataset, direction: Direction) -> Result<PairCounts> {
    check_scores(scores, dataset)?;
    let labels = dataset.labels().ok_or(Error::LabelsRequired("pairwise accuracy"))?;
    let (pos_side, pos_name, neg_side, neg_name) = direction.quadrants();
    let sides = dataset.sides();
    let positives: Vec<f64> = (0..scores.len())
        .filter(|&i| sides[i] == pos_side && labels[i])
        .map(|i| scores[i])
        .collect();
    let mut negatives: Vec<f64> = (0..scores.len())
        .filter(|&i| sides[i] == neg_side && !labels[i])
        .map(|i| scores[i])
        .collect();
    if positives.is_empty() {
        return Err(Error::EmptyQuadrant(pos_name));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyQuadrant(neg_name));
    }
    negatives.sort_by(f64::total_cmp);
    let mut counts = PairCounts {
        total: positives.len() as u64 * negatives.len() as u64,
        ..PairCounts::default()
    };
    for s in positives {
        let below = negatives.partition_point(|&x| x < s);
        let not_above = negatives.partition_point(|&x| x <= s);
        counts.correct += below as u64;
        counts.tied += (not_above - below) as u64;
    }
    Ok(counts)
}

/// Fraction of cross-group (clicked, unclicked) pairs where the clicked item
/// scores strictly higher.
pub fn pairwise_accuracy(scores: &[f64], dataset: &ScoredDataset, direction: Direction) -> Result<f64> {
    Ok(pair_counts(scores, dataset, direction)?.accuracy(TieCredit::Strict))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub acc_a_over_b: f64,
    pub acc_b_over_a: f64,
    pub gap: f64,
    /// `(|A1|*|B0|, |B1|*|A0|)`.
    pub pair_counts: (u64, u64),
    pub tie_credit: TieCredit,
}

impl PairwiseReport {
    fn new(ab: PairCounts, ba: PairCounts, credit: TieCredit) -> Self {
        let acc_a_over_b = ab.accuracy(credit);
        let acc_b_over_a = ba.accuracy(credit);
        PairwiseReport {
            acc_a_over_b,
            acc_b_over_a,
            gap: (acc_a_over_b - acc_b_over_a).abs(),
            pair_counts: (ab.total, ba.total),
            tie_credit: credit,
        }
    }
}

pub fn pairwise_gap(scores: &[f64], dataset: &ScoredDataset) -> Result<PairwiseReport> {
    pairwise_gap_with(scores, dataset, TieCredit::Strict)
}

pub fn pairwise_gap_with(scores: &[f64], dataset: &ScoredDataset, credit: TieCredit) -> Result<PairwiseReport> {
    let ab = pair_counts(scores, dataset, Direction::AOverB)?;
    let ba = pair_counts(scores, dataset, Direction::BOverA)?;
    Ok(PairwiseReport::new(ab, ba, credit))
}

fn delta_counts(deltas: &[f64], name: &'static str) -> Result<PairCounts> {
    if deltas.is_empty() {
        return Err(Error::EmptyQuadrant(name));
    }
    let mut c = PairCounts {
        total: deltas.len() as u64,
        ..PairCounts::default()
    };
    for &d in deltas {
        if d > 0.0 {
            c.correct += 1;
        } else if d == 0.0 {
            c.tied += 1;
        }
    }
    Ok(c)
}

/// Pairwise report computed from pair-level score differences
/// (clicked minus unclicked) for each direction, as produced by delta matching.
pub fn pairwise_gap_from_deltas(a_over_b: &[f64], b_over_a: &[f64], credit: TieCredit) -> Result<PairwiseReport> {
    let ab = delta_counts(a_over_b, "A1 x B0")?;
    let ba = delta_counts(b_over_a, "B1 x A0")?;
    Ok(PairwiseReport::new(ab, ba, credit))
}

/// Absolute exposure gap of the top-`t` prefix for a sequence of cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub positions: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Mean gap under random ordering at the same positions, when attached.
    pub reference: Option<Vec<f64>>,
}

impl GapCurve {
    pub fn with_reference(mut self, reference: &RandomOrderReference) -> Result<Self> {
        if reference.positions != self.positions {
            return Err(Error::Structure(
                "reference positions differ from curve positions".into(),
            ));
        }
        self.reference = Some(reference.mean_gap.clone());
        Ok(self)
    }
}

fn check_positions(positions: &[usize], n: usize) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::Input("at least one position is required".into()));
    }
    if let Some(&t) = positions.iter().find(|&&t| t == 0 || t > n) {
        return Err(Error::Input(format!("position {t} outside [1, {n}]")));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("positions must be strictly increasing".into()));
    }
    Ok(())
}

/// Exposure gap of the prefix ending at each position in `positions`.
pub fn gap_curve(
    scores: &[f64],
    dataset: &ScoredDataset,
    utility: Utility,
    positions: &[usize],
    ties: TiePolicy,
    seed: Option<u64>,
) -> Result<GapCurve> {
    check_scores(scores, dataset)?;
    check_positions(positions, dataset.len())?;
    let ranking = rank(scores, ties, seed)?;
    let gaps = positions
        .iter()
        .map(|&t| exposure_gap(&ranking, dataset, utility, Some(t)).map(|r| r.abs_gap))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapCurve {
        positions: positions.to_vec(),
        gaps,
        reference: None,
    })
}

/// Mean absolute exposure gap over uniformly random orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomOrderReference {
    pub positions: Vec<usize>,
    pub mean_gap: Vec<f64>,
    /// Standard error of each mean.
    pub std_error: Vec<f64>,
    pub n_runs: usize,
}

/// Random-ordering baseline. Run `r` draws its permutation from stream `r` of
/// a ChaCha8 generator keyed by `seed`, so runs are independent of evaluation
/// order.
pub fn random_order_reference(
    dataset: &ScoredDataset,
    utility: Utility,
    positions: &[usize],
    n_runs: usize,
    seed: u64,
) -> Result<RandomOrderReference> {
    if n_runs == 0 {
        return Err(Error::Input("n_runs must be at least 1".into()));
    }
    utility.validate()?;
    check_positions(positions, dataset.len())?;
    let n = dataset.len();
    let sides = dataset.sides();
    let mut sum = vec![0.0; positions.len()];
    let mut sum_sq = vec![0.0; positions.len()];
    let mut order: Vec<usize> = (0..n).collect();
    for run in 0..n_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        order.shuffle(&mut rng);
        let ranking = Ranking::from_permutation(order.clone());
        for (j, &t) in positions.iter().enumerate() {
            let [ea, eb] = group_exposures(&ranking, sides, utility, t);
            let g = ((ea - eb) / (ea + eb)).abs();
            sum[j] += g;
            sum_sq[j] += g * g;
        }
    }
    let runs = n_runs as f64;
    let mean_gap: Vec<f64> = sum.iter().map(|s| s / runs).collect();
    let std_error = mean_gap
        .iter()
        .zip(&sum_sq)
        .map(|(m, sq)| {
            if n_runs < 2 {
                0.0
            } else {
                let var = ((sq - runs * m * m) / (runs - 1.0)).max(0.0);
                libm::sqrt(var / runs)
            }
        })
        .collect();
    Ok(RandomOrderReference {
        positions: positions.to_vec(),
        mean_gap,
        std_error,
        n_runs,
    })
}
