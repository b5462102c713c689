use std::fs;
use std::path::{Path, PathBuf};

use fairchain::ingest::{
    equalize_groups, german_dataset, load_csv, load_german_credit, parse_csv, parse_german_credit, parse_german_line,
    write_csv, ScoreTableSchema, Sex, Truncation,
};
use fairchain::Error;
use fairchain_core::counterfactual::{fairness_improvement, CounterfactualSpec, Target};
use fairchain_core::datagen;
use fairchain_core::metrics::exposure_gap;
use fairchain_core::model::{compose, rank, FixConfig, FixMethod, Item, ScoredDataset, Side, TiePolicy, Utility};
use proptest::prelude::*;

fn german_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data")
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("score_{i}")).collect()
}

fn roundtrip(d: &ScoredDataset) -> ScoredDataset {
    let mut buf = Vec::new();
    write_csv(&mut buf, d, &names(d.k()), &["generated".into()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    parse_csv(&text, &ScoreTableSchema::standard(d.k(), d.has_labels())).unwrap()
}

#[test]
fn motivating_table_loads() {
    let text =
        "item_id,group,pctr,prating\nb1,non-white,0.1,0.4\nb2,non-white,0.4,0.1\nb3,white,0.2,0.3\nb4,white,0.3,0.2\n";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, text).unwrap();
    let schema = ScoreTableSchema::infer(&path).unwrap();
    assert_eq!(schema.scores, ["pctr", "prating"]);
    assert_eq!(schema.label, None);
    let d = load_csv(&path, &schema).unwrap();
    assert_eq!(d.k(), 2);
    assert_eq!(d.groups()[0].0, "non-white");
    assert_eq!(d.groups()[1].0, "white");
    assert_eq!(d.column(0), &[0.1, 0.4, 0.2, 0.3]);
    assert_eq!(d.ids()[2].0, "b3");
}

#[test]
fn empty_data_section_is_rejected() {
    let err = parse_csv("item_id,group,score_0\n", &ScoreTableSchema::standard(1, false)).unwrap_err();
    assert!(
        matches!(err, Error::Core(fairchain_core::Error::Structure(ref m)) if m.contains("empty")),
        "{err}"
    );
}

#[test]
fn generated_file_round_trips_exactly() {
    let d = datagen::gen_synthetic_2(500, 4);
    assert_eq!(d.len(), 1000);
    let back = roundtrip(&d);
    assert_eq!(back, d);
    let labeled = datagen::gen_labeled(&datagen::LabeledSpec::unequal_separation(100, 3, 2)).unwrap();
    assert_eq!(roundtrip(&labeled), labeled);
}

#[test]
fn cell_errors_name_line_and_column() {
    let schema = ScoreTableSchema::standard(1, true);
    let err = parse_csv("# note\nitem_id,group,label,score_0\na,A,1,0.5\nb,B,0,x\n", &schema).unwrap_err();
    match err {
        Error::Cell { line, column, .. } => assert_eq!((line, column.as_str()), (4, "score_0")),
        other => panic!("{other}"),
    }
    let err = parse_csv("item_id,group,label,score_0\na,A,2,0.5\n", &schema).unwrap_err();
    assert!(
        matches!(err, Error::Cell { ref column, .. } if column == "label"),
        "{err}"
    );
    let err = parse_csv("item_id,group,label,score_0\na,A,1,inf\n", &schema).unwrap_err();
    assert!(matches!(err, Error::Cell { .. }), "{err}");
}

#[test]
fn structural_errors() {
    let schema = ScoreTableSchema::standard(1, false);
    let err = parse_csv("item_id,group\na,A\n", &schema).unwrap_err();
    assert!(matches!(err, Error::MissingColumn(ref c) if c == "score_0"), "{err}");
    let err = parse_csv("item_id,group,score_0\na,A,1\na,B,2\n", &schema).unwrap_err();
    assert!(matches!(err, Error::Row { line: 3, .. }), "{err}");
    let err = parse_csv("item_id,group,score_0\na,A,1\nb,A,2\n", &schema).unwrap_err();
    assert!(matches!(err, Error::Core(fairchain_core::Error::Structure(_))), "{err}");
}

#[test]
fn german_file_group_sizes() {
    let d = load_german_credit(&german_path()).unwrap();
    assert_eq!(d.len(), 1000);
    assert_eq!(d.k(), 4);
    assert!(!d.has_labels());
    assert_eq!(d.groups()[0].0, "male");
    assert_eq!((d.group_size(Side::A), d.group_size(Side::B)), (690, 310));
    // First line of the canonical file: A93 (male), 1169 DM, age 67, 2 credits, 1 liable.
    assert_eq!(d.item(0).scores, vec![1169.0, 67.0, 2.0, 1.0]);
    assert_eq!(d.side(0), Side::A);
}

const ROW: &str = "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1";

#[test]
fn german_rows() {
    let r = parse_german_line(&ROW.replace("A93", "A92"), 1).unwrap();
    assert_eq!(r.sex, Sex::Female);
    assert_eq!(r.components(), [1169, 67, 2, 1]);
    assert_eq!(r.attributes.len(), 20);
    assert!(matches!(
        parse_german_line(&ROW.replace("A93", "A99"), 7),
        Err(Error::Row { line: 7, .. })
    ));
    assert!(matches!(
        parse_german_line("A11 6 A34", 2),
        Err(Error::Row { line: 2, .. })
    ));
    assert!(matches!(
        parse_german_line(&ROW.replace(" 67 ", " x "), 3),
        Err(Error::Cell { .. })
    ));
    let records = parse_german_credit(&format!("{ROW}\n\n{}\n", ROW.replace("A93", "A92"))).unwrap();
    let d = german_dataset(&records).unwrap();
    assert_eq!((d.group_size(Side::A), d.group_size(Side::B)), (1, 1));
}

#[test]
fn german_equal_size_baseline_and_credit_amount_improvement() {
    let full = load_german_credit(&german_path()).unwrap();
    let composite = compose(&full, &[]).unwrap();
    let d = equalize_groups(&full, composite.values(), Truncation::FileOrder).unwrap();
    let c = compose(&d, &[]).unwrap();
    let r = rank(c.values(), TiePolicy::RankShare, None).unwrap();
    let report = exposure_gap(&r, &d, Utility::default(), None).unwrap();
    assert!((report.abs_gap - 0.2162).abs() <= 0.02, "{}", report.abs_gap);
    assert!((report.share_a - 0.6081).abs() < 0.001, "{}", report.share_a);
    let spec = CounterfactualSpec {
        target: Target::default(),
        fixes: FixConfig::uniform(4, FixMethod::MarginalMatch),
    };
    let fi = fairness_improvement(&d, &[0], &spec).unwrap();
    assert!((fi - 0.0458).abs() < 0.005, "{fi}");
}

#[test]
fn equalize_keeps_first_members_by_default() {
    let full = load_german_credit(&german_path()).unwrap();
    let composite = compose(&full, &[]).unwrap();
    let d = equalize_groups(&full, composite.values(), Truncation::FileOrder).unwrap();
    assert_eq!((d.group_size(Side::A), d.group_size(Side::B)), (310, 310));
    let males: Vec<&str> = full
        .members(Side::A)
        .iter()
        .take(310)
        .map(|&i| full.ids()[i].0.as_str())
        .collect();
    let kept: Vec<&str> = d.members(Side::A).iter().map(|&i| d.ids()[i].0.as_str()).collect();
    assert_eq!(kept, males);
}

#[test]
fn equalize_top_composite_keeps_highest_males() {
    let full = load_german_credit(&german_path()).unwrap();
    let composite = compose(&full, &[]).unwrap().into_inner();
    let d = equalize_groups(&full, &composite, Truncation::TopComposite).unwrap();
    // Oracle: the 310th highest male composite bounds every kept male from below.
    let mut male: Vec<f64> = full.members(Side::A).iter().map(|&i| composite[i]).collect();
    male.sort_by(|a, b| b.total_cmp(a));
    let threshold = male[309];
    let kept = compose(&d, &[]).unwrap().into_inner();
    let kept_males: Vec<f64> = d.members(Side::A).iter().map(|&i| kept[i]).collect();
    assert_eq!(kept_males.len(), 310);
    assert!(kept_males.iter().all(|&v| v >= threshold));
    let mut sorted = kept_males.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(sorted, male[..310]);
}

#[test]
fn equalize_equal_groups_is_identity() {
    let d = datagen::gen_synthetic_1(20, 1);
    let c = compose(&d, &[]).unwrap();
    for mode in [
        Truncation::FileOrder,
        Truncation::TopComposite,
        Truncation::Random { seed: 3 },
    ] {
        assert_eq!(equalize_groups(&d, c.values(), mode).unwrap(), d);
    }
}

fn uneven(scores: &[(bool, f64)]) -> ScoredDataset {
    let items = scores
        .iter()
        .enumerate()
        .map(|(i, &(a, s))| Item::new(format!("i{i}"), if a { "A" } else { "B" }, None, vec![s]))
        .collect();
    ScoredDataset::new(items).unwrap()
}

proptest! {
    #[test]
    fn equalize_preserves_scores_and_smaller_group(
        rows in proptest::collection::vec((any::<bool>(), 0u8..20), 2..80),
        seed in any::<u64>(),
    ) {
        let rows: Vec<(bool, f64)> = rows.into_iter().map(|(a, s)| (a, f64::from(s))).collect();
        prop_assume!(rows.iter().any(|r| r.0) && rows.iter().any(|r| !r.0));
        let d = uneven(&rows);
        let c = d.column(0).to_vec();
        for mode in [Truncation::FileOrder, Truncation::TopComposite, Truncation::Random { seed }] {
            let e = equalize_groups(&d, &c, mode).unwrap();
            let n = d.group_size(Side::A).min(d.group_size(Side::B));
            prop_assert_eq!(e.group_size(Side::A), n);
            prop_assert_eq!(e.group_size(Side::B), n);
            let smaller = if d.group_size(Side::A) <= d.group_size(Side::B) { Side::A } else { Side::B };
            let small_ids: Vec<_> = d.members(smaller).iter().map(|&i| d.ids()[i].clone()).collect();
            let kept_ids: Vec<_> = e.members(smaller).iter().map(|&i| e.ids()[i].clone()).collect();
            prop_assert_eq!(small_ids, kept_ids);
            for i in 0..e.len() {
                let orig = d.ids().iter().position(|id| *id == e.ids()[i]).unwrap();
                prop_assert_eq!(e.column(0)[i].to_bits(), d.column(0)[orig].to_bits());
            }
            if mode == Truncation::TopComposite {
                let larger = smaller.other();
                let mut all: Vec<f64> = d.members(larger).iter().map(|&i| c[i]).collect();
                all.sort_by(|a, b| b.total_cmp(a));
                let mut kept: Vec<f64> = e.members(larger).iter().map(|&i| e.column(0)[i]).collect();
                kept.sort_by(|a, b| b.total_cmp(a));
                prop_assert_eq!(&kept[..], &all[..n]);
            }
        }
    }

    #[test]
    fn csv_round_trip(rows in proptest::collection::vec((any::<bool>(), any::<bool>(), -1e300f64..1e300, -1e-300f64..1e-300), 2..40)) {
        prop_assume!(rows.iter().any(|r| r.0) && rows.iter().any(|r| !r.0));
        let items = rows.iter().enumerate()
            .map(|(i, &(a, y, s, t))| Item::new(format!("id,{i}"), if a { "grp \"A\"" } else { "B" }, Some(y), vec![s, t]))
            .collect();
        let d = ScoredDataset::new(items).unwrap();
        prop_assert_eq!(roundtrip(&d), d);
    }
}
