#![allow(dead_code)]

use memesim_core::corpus::{AttributeLabels, Corpus, MemeRecord};
use memesim_core::embedding::{align, AlignPolicy, AlignedStore, EmbeddingManifest, EmbeddingMatrix, Modality};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i:04}")).collect()
}

pub fn store_from(dim: usize, image: Vec<f32>, text: Vec<f32>) -> AlignedStore {
    let n = image.len() / dim;
    let ids = ids(n);
    let corpus = Corpus::new(
        ids.iter().map(|id| MemeRecord::new(id.clone(), "caption", AttributeLabels::default())).collect(),
        "test",
    )
    .unwrap();
    let manifest = EmbeddingManifest::new(ids).unwrap();
    let img = EmbeddingMatrix::new(Modality::Image, dim, image, false).unwrap();
    let txt = EmbeddingMatrix::new(Modality::Text, dim, text, false).unwrap();
    align(&corpus, (&img, &manifest), (&txt, &manifest), AlignPolicy::Strict).unwrap().store
}

pub fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
    (0..len).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

pub fn random_store(seed: u64, n: usize, dim: usize) -> AlignedStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = random_values(&mut rng, n * dim);
    let text = random_values(&mut rng, n * dim);
    store_from(dim, image, text)
}

/// Textbook cosine in f64, one pass per norm.
pub fn naive_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}
