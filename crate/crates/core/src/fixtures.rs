//! Deterministic fixture data.
//!
//! The survey fixture reproduces the published per-group agreement counts;
//! the synthetic corpus plants clusters in a shared image/text embedding
//! space so grouping has a known answer.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{
    AttributeLabels, Corpus, Humour, MemeRecord, Motivational, Offensive, Sarcasm, Sentiment,
};
use crate::embedding::{EmbeddingManifest, EmbeddingMatrix, Modality};
use crate::emotion::{lexicon, EmotionLabel};
use crate::error::Result;
use crate::evaluation::SurveyResponse;

/// Participants in the published survey.
pub const SURVEY_PARTICIPANTS: u32 = 51;

/// "Similar" answers per group in the published survey, 51 respondents each.
pub const SURVEY_YES_COUNTS: [u32; 21] = [
    33, 23, 36, 27, 31, 36, 34, 42, 40, 31, 41, 36, 29, 30, 34, 35, 39, 38, 31, 38, 36,
];

/// Published emotion label counts over the Memotion corpus.
pub const MEMOTION_EMOTION_COUNTS: [(EmotionLabel, u64); 6] = [
    (EmotionLabel::Joy, 3120),
    (EmotionLabel::Anger, 2374),
    (EmotionLabel::Fear, 629),
    (EmotionLabel::Sadness, 627),
    (EmotionLabel::Surprise, 143),
    (EmotionLabel::Love, 94),
];

pub fn participant_id(k: u32) -> String {
    format!("p{:02}", k + 1)
}

/// One response per (participant, group): participant `k` says "similar"
/// to group `g` iff `k < SURVEY_YES_COUNTS[g]`.
pub fn survey_responses() -> Vec<SurveyResponse> {
    let mut out = Vec::with_capacity(SURVEY_YES_COUNTS.len() * SURVEY_PARTICIPANTS as usize);
    for k in 0..SURVEY_PARTICIPANTS {
        for (g, &yes) in SURVEY_YES_COUNTS.iter().enumerate() {
            out.push(SurveyResponse {
                participant_id: participant_id(k),
                group_id: g,
                similar: k < yes,
                emotion: None,
                timestamp: 1_700_000_000 + (k as i64) * 3600 + g as i64 * 60,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub memes: usize,
    pub dim: usize,
    /// Size of each planted cluster; leftover memes are unclustered.
    pub cluster_size: usize,
    pub clusters: usize,
    /// Per-coordinate noise scale relative to a unit centre.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            memes: 100,
            dim: 64,
            cluster_size: 4,
            clusters: 15,
            noise: 0.02,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub image: EmbeddingMatrix,
    pub text: EmbeddingMatrix,
    pub manifest: EmbeddingManifest,
    /// Planted cluster of each meme, `None` for unclustered memes.
    pub cluster: Vec<Option<usize>>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, normal: &Normal<f64>, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn perturbed(rng: &mut ChaCha8Rng, normal: &Normal<f64>, centre: &[f64], noise: f64) -> Vec<f32> {
    let v: Vec<f64> = centre.iter().map(|c| c + noise * normal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x / n) as f32).collect()
}

fn random_labels(rng: &mut ChaCha8Rng) -> AttributeLabels {
    AttributeLabels {
        humour: *[Humour::Funny, Humour::NotFunny].choose(rng).unwrap(),
        sarcasm: *[Sarcasm::Sarcastic, Sarcasm::NonSarcastic].choose(rng).unwrap(),
        offensive: *[Offensive::Offensive, Offensive::NonOffensive].choose(rng).unwrap(),
        motivational: *[Motivational::Motivational, Motivational::NonMotivational]
            .choose(rng)
            .unwrap(),
        sentiment: *[Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral]
            .choose(rng)
            .unwrap(),
    }
}

const FILLER: [&str; 12] = [
    "when", "the", "monday", "cat", "office", "exam", "pizza", "boss", "dog", "weekend", "code",
    "mom",
];

/// A seeded corpus with planted clusters. Memes of one cluster share an
/// embedding centre for both modalities and a dominant emotion in their
/// caption words.
pub fn synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let words: Vec<Vec<&str>> = lexicon()
        .iter()
        .map(|set| {
            let mut w: Vec<&str> = set.iter().copied().collect();
            w.sort_unstable();
            w
        })
        .collect();

    let planted = (spec.clusters * spec.cluster_size).min(spec.memes);
    let mut cluster: Vec<Option<usize>> = (0..spec.memes)
        .map(|i| (i < planted).then(|| i / spec.cluster_size.max(1)))
        .collect();
    // Interleave so cluster members are not contiguous rows.
    for i in (1..cluster.len()).rev() {
        let j = rng.random_range(0..=i);
        cluster.swap(i, j);
    }

    let centres: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| unit_gaussian(&mut rng, &normal, spec.dim))
        .collect();
    let mut records = Vec::with_capacity(spec.memes);
    let mut image = Vec::with_capacity(spec.memes * spec.dim);
    let mut text = Vec::with_capacity(spec.memes * spec.dim);
    let mut ids = Vec::with_capacity(spec.memes);
    for (i, c) in cluster.iter().enumerate() {
        let centre = match c {
            Some(c) => centres[*c].clone(),
            None => unit_gaussian(&mut rng, &normal, spec.dim),
        };
        image.extend(perturbed(&mut rng, &normal, &centre, spec.noise));
        text.extend(perturbed(&mut rng, &normal, &centre, spec.noise));
        let emotion = c.unwrap_or(i) % 6;
        let mut caption: Vec<&str> = (0..3).map(|_| *words[emotion].choose(&mut rng).unwrap()).collect();
        caption.push(FILLER.choose(&mut rng).unwrap());
        caption.push(FILLER.choose(&mut rng).unwrap());
        let id = format!("image_{}.jpg", i + 1);
        records.push(MemeRecord::new(id.clone(), caption.join(" "), random_labels(&mut rng)));
        ids.push(id);
    }
    Ok(SyntheticData {
        corpus: Corpus::new(records, "synthetic")?,
        image: EmbeddingMatrix::new(Modality::Image, spec.dim, image, true)?,
        text: EmbeddingMatrix::new(Modality::Text, spec.dim, text, true)?,
        manifest: EmbeddingManifest::new(ids)?,
        cluster,
    })
}
