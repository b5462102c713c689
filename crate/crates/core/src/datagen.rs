//! Seeded synthetic datasets and the small hand-built fixtures used to show
//! where compositional fairness breaks.
//!
//! Gaussian draws are pinned: a ChaCha8 stream keyed by the seed yields
//! 53-bit uniforms in (0, 1) that go through Wichura's AS241 inverse normal
//! CDF. Draws happen group by group (A then B), item by item, component by
//! component, so datasets built from the same seed share their underlying
//! standard-normal draws.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Group, Item, ScoredDataset};

/// Inverse of the standard normal CDF (AS241, PPND16). Accurate to about
/// 1e-16 relative error on (0, 1); returns infinities at the endpoints and
/// NaN outside [0, 1].
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608_0;
        let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061_0e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083_0e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let x = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_33e-2) * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4) * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5) * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7) * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_053_1e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Pinned sampler: uniform in the open interval (0, 1) with 53-bit
/// resolution, and standard normals by inversion.
#[derive(Debug, Clone)]
pub struct PinnedSampler {
    rng: ChaCha8Rng,
}

impl PinnedSampler {
    pub fn new(seed: u64) -> Self {
        PinnedSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }

    pub fn normal(&mut self, params: Normal) -> f64 {
        params.mean + params.sd * self.standard_normal()
    }
}

/// Mean and standard deviation of a normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

impl Normal {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Normal { mean, sd }
    }
}

/// Per-group, per-component Gaussian scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    /// Items per group.
    pub n: usize,
    /// Component distributions for group A, then group B.
    pub components: [Vec<Normal>; 2],
    /// When set, group B's component 0 is a draw from this distribution
    /// minus B's component 1.
    pub anti_correlated_b: Option<Normal>,
    /// Exponentiate every score, making each component log-normal.
    pub log_scale: bool,
    pub seed: u64,
}

impl GaussianSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Input("n must be at least 1".into()));
        }
        let k = self.components[0].len();
        if k == 0 || self.components[1].len() != k {
            return Err(Error::Input(
                "both groups need the same non-zero number of components".into(),
            ));
        }
        if self.anti_correlated_b.is_some() && k < 2 {
            return Err(Error::Input("anti-correlation needs at least two components".into()));
        }
        let all = self.components.iter().flatten().chain(self.anti_correlated_b.iter());
        for p in all {
            if p.sd.is_nan() || p.sd <= 0.0 || !p.mean.is_finite() || !p.sd.is_finite() {
                return Err(Error::Input(format!("invalid normal parameters {p:?}")));
            }
        }
        Ok(())
    }
}

const GROUP_A: &str = "A";
const GROUP_B: &str = "B";

fn group_pair() -> [Group; 2] {
    [Group::from(GROUP_A), Group::from(GROUP_B)]
}

/// Generates an unlabeled dataset with groups `A` and `B`, `n` items each.
pub fn generate(spec: &GaussianSpec) -> Result<ScoredDataset> {
    spec.validate()?;
    let mut sampler = PinnedSampler::new(spec.seed);
    let width = digits(spec.n);
    let mut items = Vec::with_capacity(2 * spec.n);
    for (g, name) in [GROUP_A, GROUP_B].into_iter().enumerate() {
        let params = &spec.components[g];
        for i in 0..spec.n {
            let z: Vec<f64> = (0..params.len()).map(|_| sampler.standard_normal()).collect();
            let mut scores: Vec<f64> = params.iter().zip(&z).map(|(p, z)| p.mean + p.sd * z).collect();
            if g == 1 {
                if let Some(base) = spec.anti_correlated_b {
                    scores[0] = base.mean + base.sd * z[0] - scores[1];
                }
            }
            if spec.log_scale {
                scores.iter_mut().for_each(|s| *s = libm::exp(*s));
            }
            items.push(Item::new(item_id(name, i, width), name, None, scores));
        }
    }
    ScoredDataset::with_group_order(items, group_pair())
}

fn digits(n: usize) -> usize {
    let mut d = 1;
    let mut m = n.saturating_sub(1);
    while m >= 10 {
        m /= 10;
        d += 1;
    }
    d
}

fn item_id(group: &str, i: usize, width: usize) -> String {
    format!("{}{:0width$}", group.to_lowercase(), i, width = width)
}

/// Group A: `f0 ~ N(10, 0.5)`, `f1 ~ N(5, 0.5)`.
/// Group B: `f0 ~ N(9, 0.5)`, `f1 ~ N(4, 0.1)`.
pub fn synthetic_1_spec(n: usize, seed: u64) -> GaussianSpec {
    GaussianSpec {
        n,
        components: [
            vec![Normal::new(10.0, 0.5), Normal::new(5.0, 0.5)],
            vec![Normal::new(9.0, 0.5), Normal::new(4.0, 0.1)],
        ],
        anti_correlated_b: None,
        log_scale: false,
        seed,
    }
}

/// As [`synthetic_1_spec`] but group B's `f0 = N(13, 0.5) - f1`.
pub fn synthetic_2_spec(n: usize, seed: u64) -> GaussianSpec {
    GaussianSpec {
        anti_correlated_b: Some(Normal::new(13.0, 0.5)),
        ..synthetic_1_spec(n, seed)
    }
}

/// Independent Gaussian components, `n` items per group.
///
/// # Panics
/// If `n == 0`.
pub fn gen_synthetic_1(n: usize, seed: u64) -> ScoredDataset {
    generate(&synthetic_1_spec(n, seed)).expect("n must be at least 1")
}

/// Group B's first component anti-correlated with its second. Shares every
/// underlying draw with [`gen_synthetic_1`] for the same seed.
///
/// # Panics
/// If `n == 0`.
pub fn gen_synthetic_2(n: usize, seed: u64) -> ScoredDataset {
    generate(&synthetic_2_spec(n, seed)).expect("n must be at least 1")
}

/// Log-normal components whose per-group log medians agree while their
/// spreads differ: each log-score is symmetric and so is each group's sum of
/// log-scores.
pub fn symmetric_log_gaussian(n: usize, seed: u64) -> Result<ScoredDataset> {
    generate(&GaussianSpec {
        n,
        components: [
            vec![Normal::new(0.5, 0.3), Normal::new(-0.2, 0.9)],
            vec![Normal::new(0.5, 1.1), Normal::new(-0.2, 0.2)],
        ],
        anti_correlated_b: None,
        log_scale: true,
        seed,
    })
}

/// Labeled data for click-model experiments: per-group click rates and a
/// per-group, per-component separation between clicked and unclicked items.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpec {
    pub n: usize,
    pub k: usize,
    pub click_rate: [f64; 2],
    /// Shift of the clicked items' logit, per group.
    pub separation: [f64; 2],
    pub seed: u64,
}

impl LabeledSpec {
    /// Group B's components separate clicks less well than group A's.
    pub fn unequal_separation(n: usize, k: usize, seed: u64) -> Self {
        LabeledSpec {
            n,
            k,
            click_rate: [0.3, 0.3],
            separation: [1.5, 0.5],
            seed,
        }
    }
}

/// Scores are `sigmoid(N(0, 1) + separation * label)`, so every score lies in
/// (0, 1). Labels are drawn before scores, item by item.
pub fn gen_labeled(spec: &LabeledSpec) -> Result<ScoredDataset> {
    if spec.n == 0 || spec.k == 0 {
        return Err(Error::Input("n and k must be at least 1".into()));
    }
    if spec.click_rate.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::Input("click rates must lie in (0, 1)".into()));
    }
    let mut sampler = PinnedSampler::new(spec.seed);
    let width = digits(spec.n);
    let mut items = Vec::with_capacity(2 * spec.n);
    for (g, name) in [GROUP_A, GROUP_B].into_iter().enumerate() {
        for i in 0..spec.n {
            let label = sampler.uniform() < spec.click_rate[g];
            let shift = if label { spec.separation[g] } else { 0.0 };
            let scores = (0..spec.k)
                .map(|_| {
                    let z = sampler.standard_normal() + shift;
                    1.0 / (1.0 + libm::exp(-z))
                })
                .collect();
            items.push(Item::new(item_id(name, i, width), name, Some(label), scores));
        }
    }
    ScoredDataset::with_group_order(items, group_pair())
}

/// Four books, two per author group; each component ranks the groups
/// alternately but the product puts both `white` books on top.
pub fn motivating_example() -> ScoredDataset {
    let rows = [
        ("book1", "non-white", 0.1, 0.4),
        ("book2", "non-white", 0.4, 0.1),
        ("book3", "white", 0.2, 0.3),
        ("book4", "white", 0.3, 0.2),
    ];
    let items = rows
        .iter()
        .map(|&(id, g, ctr, rating)| Item::new(id, g, None, vec![ctr, rating]))
        .collect();
    ScoredDataset::new(items).expect("fixture is valid")
}

/// Component 0: A = `[a+e, a+4e]`, B = `[a+2e, a+3e]`.
/// Component 1: A = `[a+4e, a+e]`, B = `[a+3e, a+2e]`.
/// Every component's top two holds one item per group, yet both composed
/// B scores exceed both composed A scores.
pub fn epsilon_example(a: f64, eps: f64) -> Result<ScoredDataset> {
    if !(a > 0.0 && eps > 0.0 && a.is_finite() && eps.is_finite()) {
        return Err(Error::Input(format!(
            "need a > 0 and eps > 0, got a = {a}, eps = {eps}"
        )));
    }
    let s = |m: f64| a + m * eps;
    let items = vec![
        Item::new("a0", GROUP_A, None, vec![s(1.0), s(4.0)]),
        Item::new("a1", GROUP_A, None, vec![s(4.0), s(1.0)]),
        Item::new("b0", GROUP_B, None, vec![s(2.0), s(3.0)]),
        Item::new("b1", GROUP_B, None, vec![s(3.0), s(2.0)]),
    ];
    ScoredDataset::with_group_order(items, group_pair())
}

/// Both groups hold `[0, 1]` on component 0; on component 1 group A holds
/// `[0, 1]` and group B `[1, 0]`. After per-group normalization every B
/// composite falls below every A composite.
pub fn normalization_failure() -> ScoredDataset {
    let items = vec![
        Item::new("a0", GROUP_A, None, vec![0.0, 0.0]),
        Item::new("a1", GROUP_A, None, vec![1.0, 1.0]),
        Item::new("b0", GROUP_B, None, vec![0.0, 1.0]),
        Item::new("b1", GROUP_B, None, vec![1.0, 0.0]),
    ];
    ScoredDataset::with_group_order(items, group_pair()).expect("fixture is valid")
}

/// Clicked and unclicked items from both groups, two per quadrant. Each
/// component has pairwise gap 0; the composition has gap 0.5.
pub fn pairwise_counterexample() -> ScoredDataset {
    // (id, group, clicked, f0, f1)
    let rows = [
        ("a1_0", GROUP_A, true, 1.0, 4.0),
        ("a1_1", GROUP_A, true, 4.0, 1.0),
        ("b0_0", GROUP_B, false, 2.0, 3.0),
        ("b0_1", GROUP_B, false, 3.0, 2.0),
        ("b1_0", GROUP_B, true, 1.0, 1.0),
        ("b1_1", GROUP_B, true, 4.0, 4.0),
        ("a0_0", GROUP_A, false, 2.0, 3.0),
        ("a0_1", GROUP_A, false, 3.0, 2.0),
    ];
    let items = rows
        .iter()
        .map(|&(id, g, y, f0, f1)| Item::new(id, g, Some(y), vec![f0, f1]))
        .collect();
    ScoredDataset::with_group_order(items, group_pair()).expect("fixture is valid")
}

/// Every fixed fixture by name. The epsilon example uses `a = 1`, `eps = 0.1`.
pub fn fixtures() -> Vec<(&'static str, ScoredDataset)> {
    vec![
        ("motivating", motivating_example()),
        ("epsilon", epsilon_example(1.0, 0.1).expect("valid parameters")),
        ("normalization-failure", normalization_failure()),
        ("pairwise", pairwise_counterexample()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixes::{normalize, positivity_shift};
    use crate::metrics::exposure_gap;
    use crate::model::{compose, rank, Side, TiePolicy, Utility};
    use proptest::prelude::*;

    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, libm::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n))
    }

    fn group_column(d: &ScoredDataset, side: Side, k: usize) -> Vec<f64> {
        d.members(side).iter().map(|&i| d.column(k)[i]).collect()
    }

    #[test]
    fn inverse_cdf_reference_points() {
        let cases = [
            (0.5, 0.0),
            (0.975, 1.959_963_984_540_054),
            (0.001, -3.090_232_306_167_813_5),
            (0.8, 0.841_621_233_572_914_2),
            (1e-10, -6.361_340_902_404_056),
            (1e-300, -37.047_096_299_361_2),
        ];
        for (p, x) in cases {
            let got = inverse_normal_cdf(p);
            assert!((got - x).abs() <= 1e-13 * x.abs().max(1.0), "p={p}: {got} vs {x}");
        }
        assert_eq!(inverse_normal_cdf(0.0), f64::NEG_INFINITY);
        assert!(inverse_normal_cdf(1.5).is_nan());
    }

    #[test]
    fn inverse_cdf_is_odd_and_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..2000 {
            let p = f64::from(i) / 2000.0;
            let x = inverse_normal_cdf(p);
            assert!(x > prev);
            prev = x;
            assert!((x + inverse_normal_cdf(1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_1_moments() {
        let d = gen_synthetic_1(1000, 11);
        let expected = [[(10.0, 0.5), (5.0, 0.5)], [(9.0, 0.5), (4.0, 0.1)]];
        for side in [Side::A, Side::B] {
            for (k, &(em, esd)) in expected[side.index()].iter().enumerate() {
                let (m, sd) = mean_sd(&group_column(&d, side, k));
                assert!((m - em).abs() < 3.0 * esd / libm::sqrt(1000.0), "{side:?} {k}: {m}");
                assert!((sd - esd).abs() < 0.1 * esd, "{side:?} {k}: {sd}");
            }
        }
    }

    #[test]
    fn synthetic_single_item() {
        let d = gen_synthetic_1(1, 99);
        assert_eq!(d.len(), 2);
        assert_eq!(d.group_size(Side::A), 1);
        assert!(d.column(0).iter().chain(d.column(1)).all(|x| x.is_finite()));
        assert!(generate(&synthetic_1_spec(0, 1)).is_err());
    }

    #[test]
    fn synthetic_2_anti_correlation() {
        let d = gen_synthetic_2(1000, 5);
        let f0 = group_column(&d, Side::B, 0);
        let f1 = group_column(&d, Side::B, 1);
        let (m0, s0) = mean_sd(&f0);
        let (m1, s1) = mean_sd(&f1);
        let cov = f0.iter().zip(&f1).map(|(x, y)| (x - m0) * (y - m1)).sum::<f64>() / 1000.0;
        let rho = cov / (s0 * s1);
        let expected = -0.1 / libm::sqrt(0.1 * 0.1 + 0.5 * 0.5);
        assert!((rho - expected).abs() < 0.05, "rho = {rho}");
        assert!((m0 - 9.0).abs() < 0.05, "mean = {m0}");
    }

    #[test]
    fn synthetic_datasets_share_draws() {
        let d1 = gen_synthetic_1(50, 8);
        let d2 = gen_synthetic_2(50, 8);
        assert_eq!(d1.column(1), d2.column(1));
        for i in d1.members(Side::A) {
            assert_eq!(d1.column(0)[i], d2.column(0)[i]);
        }
        for i in d1.members(Side::B) {
            let z = (d1.column(0)[i] - 9.0) / 0.5;
            let expect = 13.0 + 0.5 * z - d2.column(1)[i];
            assert!((d2.column(0)[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_are_reproducible() {
        assert_eq!(gen_synthetic_1(200, 42), gen_synthetic_1(200, 42));
        assert_ne!(gen_synthetic_1(200, 42), gen_synthetic_1(200, 43));
        let spec = LabeledSpec::unequal_separation(100, 3, 4);
        assert_eq!(gen_labeled(&spec).unwrap(), gen_labeled(&spec).unwrap());
    }

    #[test]
    fn synthetic_1_medians_differ_by_about_one() {
        let d = gen_synthetic_1(1000, 2);
        for k in 0..2 {
            let med = |side| {
                let mut v = group_column(&d, side, k);
                v.sort_by(f64::total_cmp);
                (v[499] + v[500]) / 2.0
            };
            let diff = med(Side::A) - med(Side::B);
            assert!((diff - 1.0).abs() < 0.1, "component {k}: {diff}");
        }
    }

    #[test]
    fn labeled_generator_shape() {
        let d = gen_labeled(&LabeledSpec::unequal_separation(500, 3, 1)).unwrap();
        assert_eq!(d.k(), 3);
        let clicks = d.labels().unwrap().iter().filter(|&&y| y).count();
        assert!((200..400).contains(&clicks), "{clicks}");
        assert!(d.column(2).iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn epsilon_example_composites() {
        let d = epsilon_example(1.0, 0.1).unwrap();
        let c = compose(&d, &[]).unwrap().into_inner();
        assert!((c[0] - 1.54).abs() < 1e-12 && c[0] == c[1]);
        assert!((c[2] - 1.56).abs() < 1e-12 && c[2] == c[3]);
        assert!(epsilon_example(0.0, 0.1).is_err());
    }

    #[test]
    fn normalization_failure_orders_groups() {
        let d = normalization_failure();
        let mut cols = Vec::new();
        for k in 0..2 {
            cols.push(normalize(&d, k).unwrap().into_scores().unwrap());
        }
        let overrides = [(0, cols[0].as_slice()), (1, cols[1].as_slice())];
        let c = compose(&d, &overrides).unwrap().into_inner();
        assert_eq!(c, vec![1.0, 1.0, -1.0, -1.0]);

        for col in cols.iter_mut() {
            positivity_shift(col);
        }
        let overrides = [(0, cols[0].as_slice()), (1, cols[1].as_slice())];
        let c = compose(&d, &overrides).unwrap().into_inner();
        assert_eq!(c, vec![1.0, 9.0, 3.0, 3.0]);
        let r = rank(&c, TiePolicy::RankShare, None).unwrap();
        assert_eq!(r.order()[0], 1);
        assert_eq!(r.order()[3], 0);
    }

    #[test]
    fn fixtures_are_named_and_distinct() {
        let names: Vec<_> = fixtures().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["motivating", "epsilon", "normalization-failure", "pairwise"]);
    }

    proptest! {
        #[test]
        fn epsilon_example_breaks_composition(a in 0.1f64..10.0, eps in 0.01f64..2.0) {
            let d = epsilon_example(a, eps).unwrap();
            let w0 = Utility::Power { w: 0.0 };
            for k in 0..2 {
                let r = rank(d.column(k), TiePolicy::RankShare, None).unwrap();
                prop_assert_eq!(exposure_gap(&r, &d, w0, Some(2)).unwrap().abs_gap, 0.0);
            }
            let c = compose(&d, &[]).unwrap();
            let r = rank(c.values(), TiePolicy::RankShare, None).unwrap();
            prop_assert_eq!(exposure_gap(&r, &d, w0, Some(2)).unwrap().abs_gap, 1.0);
        }
    }
}
