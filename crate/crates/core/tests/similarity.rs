mod common;

use common::{naive_cosine, random_store, store_from};
use memesim_core::embedding::{EmbeddingMatrix, Modality};
use memesim_core::similarity::{
    contrastive_loss, cosine, pair_scores, pairwise_edges, AggregationMode, KernelOptions,
};
use memesim_core::Error;
use proptest::prelude::*;

fn opts(threads: usize, tile: usize) -> KernelOptions {
    KernelOptions { threads, tile }
}

#[test]
fn kernel_matches_naive_oracle_on_ten_thousand_pairs() {
    // 142 rows give 10,011 pairs.
    for (seed, dim) in [(1u64, 2usize), (2, 64), (3, 512)] {
        let store = random_store(seed, 142, dim);
        let report = pairwise_edges(&store, -1.0, &AggregationMode::Mean, KernelOptions::default()).unwrap();
        assert_eq!(report.edges.len(), 142 * 141 / 2);
        let mut worst = 0.0f64;
        for e in &report.edges {
            let (i, j) = (e.src, e.dst);
            let want = [
                naive_cosine(store.image.row(i), store.image.row(j)),
                naive_cosine(store.text.row(i), store.text.row(j)),
                naive_cosine(store.image.row(i), store.text.row(j)),
                naive_cosine(store.text.row(i), store.image.row(j)),
            ];
            for (got, want) in e.scores.as_array().iter().zip(want) {
                worst = worst.max((got - want).abs());
            }
            let mean = want.iter().sum::<f64>() / 4.0;
            worst = worst.max((e.combined - mean).abs());
        }
        assert!(worst < 1e-7, "D={dim}: max deviation {worst:e}");
    }
}

#[test]
fn identical_memes_form_full_edge_set() {
    let v = [0.6f32, 0.8];
    let rows: Vec<f32> = v.iter().cycle().take(6).copied().collect();
    let store = store_from(2, rows.clone(), rows);
    let r = pairwise_edges(&store, 0.8, &AggregationMode::Mean, KernelOptions::default()).unwrap();
    assert_eq!(r.edges.len(), 3);
    for e in &r.edges {
        assert!((e.combined - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fifty_memes_match_double_loop() {
    let store = random_store(50, 50, 8);
    let r = pairwise_edges(&store, 0.5, &AggregationMode::Mean, KernelOptions::default()).unwrap();
    let mut want = Vec::new();
    for i in 0..50 {
        for j in i + 1..50 {
            let s = [
                naive_cosine(store.image.row(i), store.image.row(j)),
                naive_cosine(store.text.row(i), store.text.row(j)),
                naive_cosine(store.image.row(i), store.text.row(j)),
                naive_cosine(store.text.row(i), store.image.row(j)),
            ];
            if s.iter().sum::<f64>() / 4.0 >= 0.5 {
                want.push((i, j));
            }
        }
    }
    let got: Vec<_> = r.edges.iter().map(|e| (e.src, e.dst)).collect();
    assert_eq!(got, want);
}

#[test]
fn thread_count_and_tile_size_do_not_change_output() {
    let store = random_store(9, 300, 16);
    let base = pairwise_edges(&store, 0.1, &AggregationMode::Mean, opts(1, 256)).unwrap();
    assert!(!base.edges.is_empty());
    for (threads, tile) in [(2, 256), (4, 7), (8, 64), (3, 1), (1, 1000)] {
        let other = pairwise_edges(&store, 0.1, &AggregationMode::Mean, opts(threads, tile)).unwrap();
        assert_eq!(other.edges.len(), base.edges.len());
        for (a, b) in base.edges.iter().zip(&other.edges) {
            assert_eq!((a.src, a.dst), (b.src, b.dst));
            assert_eq!(a.combined.to_bits(), b.combined.to_bits());
            for (x, y) in a.scores.as_array().iter().zip(b.scores.as_array()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

#[test]
fn raising_threshold_never_adds_edges() {
    let store = random_store(11, 120, 4);
    let mut previous: Option<Vec<(usize, usize)>> = None;
    for tau in [-0.5, 0.0, 0.2, 0.4, 0.6, 0.8] {
        let cur: Vec<_> = pairwise_edges(&store, tau, &AggregationMode::Min, KernelOptions::default())
            .unwrap()
            .edges
            .iter()
            .map(|e| (e.src, e.dst))
            .collect();
        if let Some(prev) = &previous {
            assert!(cur.iter().all(|p| prev.contains(p)), "tau={tau}");
        }
        previous = Some(cur);
    }
}

#[test]
fn degenerate_rows_are_skipped_and_reported() {
    let image = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let text = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let store = store_from(2, image, text);
    let r = pairwise_edges(&store, 0.9, &AggregationMode::Mean, KernelOptions::default()).unwrap();
    assert_eq!(r.degenerate, vec!["m0001".to_string()]);
    let pairs: Vec<_> = r.edges.iter().map(|e| (e.src, e.dst)).collect();
    assert_eq!(pairs, vec![(0, 2), (0, 3), (2, 3)]);
}

#[test]
fn threshold_out_of_range_is_config_error() {
    let store = random_store(1, 4, 2);
    for tau in [1.5, -1.01, f64::NAN] {
        assert!(matches!(
            pairwise_edges(&store, tau, &AggregationMode::Mean, KernelOptions::default()),
            Err(Error::Config(_))
        ));
    }
}

#[test]
fn pair_scores_constructed_orthogonality() {
    let store = store_from(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.3, 0.4, 0.3, 0.4]);
    let s = pair_scores(&store, 0, 1).unwrap();
    assert_eq!(s.ii, 0.0);
    assert!((s.tt - 1.0).abs() < 1e-12);
    let back = pair_scores(&store, 1, 0).unwrap();
    assert_eq!(s.it, back.ti);
    assert_eq!(s.ii, back.ii);
}

#[test]
fn pair_scores_match_kernel() {
    let store = random_store(21, 40, 32);
    let r = pairwise_edges(&store, -1.0, &AggregationMode::Mean, KernelOptions::default()).unwrap();
    for e in r.edges.iter().step_by(37) {
        let s = pair_scores(&store, e.src, e.dst).unwrap();
        for (a, b) in s.as_array().iter().zip(e.scores.as_array()) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}

fn softmax_loss_oracle(sims: &[Vec<f64>], t: f64) -> Vec<f64> {
    sims.iter()
        .enumerate()
        .map(|(i, row)| {
            let denom: f64 = row.iter().map(|s| (s / t).exp()).sum();
            -((row[i] / t).exp() / denom).ln()
        })
        .collect()
}

#[test]
fn contrastive_loss_against_direct_softmax() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let dim = 6;
    let img = common::random_values(&mut rng, 5 * dim);
    let txt = common::random_values(&mut rng, 5 * dim);
    let im = EmbeddingMatrix::new(Modality::Image, dim, img.clone(), false).unwrap();
    let tm = EmbeddingMatrix::new(Modality::Text, dim, txt.clone(), false).unwrap();
    let sims: Vec<Vec<f64>> = (0..5)
        .map(|i| (0..5).map(|j| naive_cosine(&img[i * dim..][..dim], &txt[j * dim..][..dim])).collect())
        .collect();
    for t in [1.0, 0.3, 0.07] {
        let got = contrastive_loss(&im, &tm, t).unwrap();
        let want = softmax_loss_oracle(&sims, t);
        for (g, w) in got.per_pair.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "t={t}");
        }
        assert!((got.total - want.iter().sum::<f64>()).abs() < 1e-9);
    }
}

#[test]
fn contrastive_loss_hand_cases() {
    let one_i = EmbeddingMatrix::new(Modality::Image, 2, vec![0.6, 0.8], false).unwrap();
    let one_t = EmbeddingMatrix::new(Modality::Text, 2, vec![-0.8, 0.6], false).unwrap();
    let l = contrastive_loss(&one_i, &one_t, 0.5).unwrap();
    assert_eq!(l.total, 0.0);
    assert_eq!(l.per_pair, vec![0.0]);

    let eye = vec![1.0, 0.0, 0.0, 1.0];
    let i2 = EmbeddingMatrix::new(Modality::Image, 2, eye.clone(), false).unwrap();
    let t2 = EmbeddingMatrix::new(Modality::Text, 2, eye, false).unwrap();
    let l = contrastive_loss(&i2, &t2, 1.0).unwrap();
    let each = (1.0 + (-1.0f64).exp()).ln();
    assert!((l.total - 2.0 * each).abs() < 1e-12);
    assert!((l.total - 0.626524).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        (a, b) in (1usize..40).prop_flat_map(|d| (
            prop::collection::vec(-10.0f32..10.0, d),
            prop::collection::vec(-10.0f32..10.0, d),
        )),
        c in 0.01f32..50.0,
    ) {
        prop_assume!(a.iter().any(|&x| x != 0.0) && b.iter().any(|&x| x != 0.0));
        let ab = cosine(&a, &b).unwrap();
        prop_assert_eq!(ab.to_bits(), cosine(&b, &a).unwrap().to_bits());
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
        let scaled: Vec<f32> = a.iter().map(|x| x * c).collect();
        prop_assert!((cosine(&scaled, &b).unwrap() - ab).abs() < 1e-6);
    }

    #[test]
    fn normalized_cosine_equals_dot(v in prop::collection::vec(-1.0f32..1.0, 2..64)) {
        prop_assume!(v.iter().any(|&x| x.abs() > 1e-3));
        let m = EmbeddingMatrix::new(Modality::Image, v.len(), v.clone(), false).unwrap();
        let u = memesim_core::embedding::l2_normalize(&m).unwrap();
        let w: Vec<f32> = v.iter().rev().copied().collect();
        let wm = memesim_core::embedding::l2_normalize(&EmbeddingMatrix::new(Modality::Image, w.len(), w, false).unwrap());
        prop_assume!(wm.is_ok());
        let wm = wm.unwrap();
        let dot: f64 = u.row(0).iter().zip(wm.row(0)).map(|(&a, &b)| a as f64 * b as f64).sum();
        prop_assert!((cosine(u.row(0), wm.row(0)).unwrap() - dot).abs() < 1e-6);
    }
}
