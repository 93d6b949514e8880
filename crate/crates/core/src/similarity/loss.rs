//! Image-text contrastive loss, evaluated as a diagnostic on fixed embeddings.

use serde::{Deserialize, Serialize};

use super::kernel::{dot, UnitRows};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveLoss {
    pub total: f64,
    pub per_pair: Vec<f64>,
}

/// For each row i, the cross-entropy of picking text i among all texts given
/// image i, with cosine logits divided by `temperature`. The total is the sum.
pub fn contrastive_loss(
    image: &EmbeddingMatrix,
    text: &EmbeddingMatrix,
    temperature: f64,
) -> Result<ContrastiveLoss> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if image.len() != text.len() {
        return Err(Error::Dimension {
            expected: image.len(),
            found: text.len(),
        });
    }
    if image.dim() != text.dim() {
        return Err(Error::Dimension {
            expected: image.dim(),
            found: text.dim(),
        });
    }
    let img = UnitRows::new(image);
    let txt = UnitRows::new(text);
    let n = image.len();
    for i in 0..n {
        for (rows, what) in [(&img, "image"), (&txt, "text")] {
            if rows.is_degenerate(i) {
                return Err(Error::DegenerateVector {
                    row: i,
                    id: format!("{what} row {i}"),
                });
            }
        }
    }

    let mut per_pair = Vec::with_capacity(n);
    let mut logits = vec![0.0; n];
    for i in 0..n {
        for (j, l) in logits.iter_mut().enumerate() {
            *l = dot(img.row(i), txt.row(j)) / temperature;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        // log-sum-exp minus the matched logit, split so both terms are >= 0.
        per_pair.push((max - logits[i]) + sum.ln());
    }
    Ok(ContrastiveLoss {
        total: per_pair.iter().sum(),
        per_pair,
    })
}
