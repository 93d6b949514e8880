use std::collections::BTreeMap;

use memesim_core::corpus::{
    attribute_distribution, read_corpus, write_corpus_csv, Attribute, Corpus, Schema,
};
use memesim_core::emotion::{
    classify_lexicon, distribution_from_counts, emotion_distribution, group_emotions, lexicon,
    read_emotion_sidecar, write_emotion_sidecar, Annotation, AnnotationSource, EmotionAnnotations,
    EmotionLabel,
};
use memesim_core::evaluation::{
    agreement_rate, agreement_report, average_agreement, emotion_agreement, load_responses,
    ResponseLog, SurveyResponse,
};
use memesim_core::fixtures::{self, SyntheticSpec, MEMOTION_EMOTION_COUNTS};
use memesim_core::grouping::MemeGroup;
use memesim_core::Error;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PUBLISHED_RATES: [f64; 21] = [
    64.71, 45.10, 70.59, 52.94, 60.78, 70.59, 66.67, 82.35, 78.43, 60.78, 80.39, 70.59, 56.86,
    58.82, 66.67, 68.63, 76.47, 74.51, 60.78, 74.51, 70.59,
];

#[test]
fn published_rates_average() {
    assert!((average_agreement(&PUBLISHED_RATES).unwrap() - 67.23).abs() <= 0.01);
}

#[test]
fn survey_fixture_reproduces_published_table() {
    let report = agreement_report(&fixtures::survey_responses());
    let rates: Vec<f64> = report.per_group.values().copied().collect();
    assert_eq!(rates, PUBLISHED_RATES);
    assert_eq!(report.average, Some(67.23));
    assert_eq!(report.min, Some(45.10));
    assert_eq!(report.max, Some(82.35));
    assert_eq!(report.n_participants, 51);
    assert_eq!(report.n_groups, 21);
}

#[test]
fn published_emotion_percents() {
    let d = distribution_from_counts(&MEMOTION_EMOTION_COUNTS).unwrap();
    assert_eq!(d.total, 6987);
    let want = [
        (EmotionLabel::Joy, 44.65),
        (EmotionLabel::Anger, 33.98),
        (EmotionLabel::Fear, 9.00),
        (EmotionLabel::Sadness, 8.97),
        (EmotionLabel::Surprise, 2.05),
        (EmotionLabel::Love, 1.35),
    ];
    for ((label, pct), row) in want.iter().zip(&d.rows) {
        assert_eq!(row.emotion, *label);
        assert!((row.percent - pct).abs() <= 0.005, "{label}");
        let direct = 100.0 * row.count as f64 / 6987.0;
        assert!((direct - pct).abs() <= 0.005);
    }
}

#[test]
fn lexicon_lists_are_disjoint_and_sized() {
    let lists = lexicon();
    for (i, a) in lists.iter().enumerate() {
        assert!((30..=50).contains(&a.len()));
        for b in &lists[i + 1..] {
            assert!(a.is_disjoint(b));
        }
    }
}

#[test]
fn lexicon_scores_sum_to_one_over_random_strings() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut vocab: Vec<&str> = lexicon().iter().flat_map(|s| s.iter().copied()).collect();
    vocab.sort_unstable();
    vocab.extend(["meme", "the", "lol", "cat", "Monday", "!!!"]);
    for _ in 0..1000 {
        let n = rng.random_range(1..15);
        let text: Vec<&str> = (0..n).map(|_| *vocab.choose(&mut rng).unwrap()).collect();
        let s = classify_lexicon(&text.join(" ")).unwrap();
        let total: f64 = s.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(s.probs().iter().all(|&p| p > 0.0));
    }
}

#[test]
fn lexicon_examples() {
    assert_eq!(classify_lexicon("love").unwrap().argmax(), EmotionLabel::Love);
    let u = classify_lexicon("qwerty zxcv").unwrap();
    assert!(u.probs().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-9));
    assert!(matches!(classify_lexicon("   "), Err(Error::EmptyText)));
    let a = classify_lexicon("I am so happy today").unwrap();
    assert_eq!(a, classify_lexicon("I am so happy today").unwrap());
}

#[test]
fn sidecar_round_trip_keeps_labels() {
    let data = fixtures::synthetic(&SyntheticSpec::default()).unwrap();
    let ann = memesim_core::emotion::annotate_with_lexicon(&data.corpus);
    let mut buf = Vec::new();
    write_emotion_sidecar(&ann, &mut buf).unwrap();
    let back = read_emotion_sidecar(buf.as_slice()).unwrap();
    assert_eq!(back.len(), ann.len());
    for (id, a) in &ann.by_meme {
        assert_eq!(back.label(id), Some(a.label));
    }
    assert_eq!(emotion_distribution(&back).unwrap(), emotion_distribution(&ann).unwrap());
}

#[test]
fn crosstab_marginals_match_distribution() {
    let data = fixtures::synthetic(&SyntheticSpec::default()).unwrap();
    let ann = memesim_core::emotion::annotate_with_lexicon(&data.corpus);
    let t = memesim_core::analytics::crosstab(&ann, &data.corpus, Attribute::Motivational).unwrap();
    let dist = emotion_distribution(&ann).unwrap();
    for (label, total) in t.row_labels.iter().zip(t.row_totals()) {
        let e: EmotionLabel = label.parse().unwrap();
        assert_eq!(dist.get(e).unwrap().count, total);
    }
}

fn ann_of(pairs: &[(&str, EmotionLabel)]) -> EmotionAnnotations {
    EmotionAnnotations {
        by_meme: pairs
            .iter()
            .map(|(id, l)| {
                (id.to_string(), Annotation { label: *l, scores: None, source: AnnotationSource::Sidecar })
            })
            .collect(),
    }
}

#[test]
fn dominant_emotion_rules() {
    use EmotionLabel::*;
    let ann = ann_of(&[("a", Joy), ("b", Joy), ("c", Anger), ("d", Anger), ("e", Joy)]);
    let groups = vec![
        MemeGroup { group_id: 0, members: vec!["a".into(), "b".into(), "c".into()] },
        MemeGroup { group_id: 1, members: vec!["d".into(), "e".into()] },
        MemeGroup { group_id: 2, members: vec!["z".into()] },
    ];
    let g = group_emotions(&groups, &ann);
    assert_eq!(g[&0].dominant, Some(Joy));
    assert_eq!(g[&1].dominant, Some(Joy));
    assert_eq!(g[&2].dominant, None);
    let json = serde_json::to_value(&g[&2]).unwrap();
    assert_eq!(json["dominant"], "unlabeled");
}

#[test]
fn random_humans_agree_about_one_in_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let ann = ann_of(&[("m", EmotionLabel::Fear)]);
    let groups: Vec<MemeGroup> =
        (0..1000).map(|g| MemeGroup { group_id: g, members: vec!["m".into()] }).collect();
    let responses: Vec<SurveyResponse> = (0..1000)
        .map(|g| SurveyResponse {
            participant_id: "p1".into(),
            group_id: g,
            similar: true,
            emotion: Some(*EmotionLabel::ALL.choose(&mut rng).unwrap()),
            timestamp: 0,
        })
        .collect();
    let e = emotion_agreement(&responses, &ann, &groups).unwrap();
    assert!((e.accuracy - 100.0 / 6.0).abs() <= 3.0, "accuracy {}", e.accuracy);
    let col: u64 = (0..6).map(|h| e.confusion[h][EmotionLabel::Fear.index()]).sum();
    assert_eq!(col, 1000);
}

#[test]
fn response_log_persistence_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("responses.jsonl");
    let mut log = ResponseLog::open(&path).unwrap();
    for r in fixtures::survey_responses() {
        log.append(r).unwrap();
    }
    let reloaded = load_responses(&path).unwrap();
    assert_eq!(agreement_report(&reloaded), agreement_report(log.responses()));
    assert_eq!(agreement_report(&reloaded).average, Some(67.23));
    let dup = reloaded[5].clone();
    assert!(matches!(log.append(dup), Err(Error::Conflict(_))));
    assert_eq!(load_responses(&path).unwrap().len(), 21 * 51);
}

#[test]
fn corpus_csv_round_trip() {
    let data = fixtures::synthetic(&SyntheticSpec::default()).unwrap();
    let mut buf = Vec::new();
    write_corpus_csv(&data.corpus, &mut buf).unwrap();
    let back = read_corpus(buf.as_slice(), Schema::Memotion).unwrap();
    assert!(back.warnings.is_empty());
    assert_eq!(back.corpus.records, data.corpus.records);
    for attr in Attribute::ALL {
        let d = attribute_distribution(&back.corpus, attr).unwrap();
        assert_eq!(d.total, 100);
        let pct: f64 = d.rows.iter().map(|r| r.percent).sum();
        assert!((pct - 100.0).abs() < 1e-9);
    }
}

#[test]
fn text_absent_memes_are_not_annotated() {
    let csv = "image_name,text_corrected,humour,sarcasm,offensive,motivational,overall_sentiment\n\
               a.jpg,so happy today,funny,general,not_offensive,motivational,positive\n\
               b.jpg,,not_funny,not_sarcastic,slight,not_motivational,negative\n";
    let corpus: Corpus = read_corpus(csv.as_bytes(), Schema::Memotion).unwrap().corpus;
    let ann = memesim_core::emotion::annotate_with_lexicon(&corpus);
    assert_eq!(ann.len(), 1);
    assert_eq!(corpus.text_present_count(), 1);
}

proptest! {
    #[test]
    fn yes_never_lowers_rate(yes in 0usize..60, no in 0usize..60) {
        prop_assume!(yes + no > 0);
        let base: Vec<bool> = (0..yes).map(|_| true).chain((0..no).map(|_| false)).collect();
        let r = agreement_rate(base.iter().copied()).unwrap();
        prop_assert!((0.0..=100.0).contains(&r));
        let more_yes = agreement_rate(base.iter().copied().chain([true])).unwrap();
        let more_no = agreement_rate(base.iter().copied().chain([false])).unwrap();
        prop_assert!(more_yes >= r);
        prop_assert!(more_no <= r);
    }

    #[test]
    fn average_is_bounded_and_order_free(rates in prop::collection::vec(0.0f64..=100.0, 1..30)) {
        let rates2: Vec<f64> = rates.iter().map(|r| (r * 100.0).round() / 100.0).collect();
        let a = average_agreement(&rates2).unwrap();
        let lo = rates2.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a >= lo - 0.005 && a <= hi + 0.005);
        let rev: Vec<f64> = rates2.iter().rev().copied().collect();
        prop_assert_eq!(a, average_agreement(&rev).unwrap());
    }

    #[test]
    fn distribution_counts_sum(counts in prop::collection::vec(0u64..5000, 6)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let pairs: Vec<(EmotionLabel, u64)> = EmotionLabel::ALL.into_iter().zip(counts.iter().copied()).collect();
        let d = distribution_from_counts(&pairs).unwrap();
        prop_assert_eq!(d.total, counts.iter().sum::<u64>());
        let m: BTreeMap<EmotionLabel, u64> = d.rows.iter().map(|r| (r.emotion, r.count)).collect();
        for (l, c) in pairs {
            prop_assert_eq!(m.get(&l).copied().unwrap_or(0), c);
        }
    }
}
