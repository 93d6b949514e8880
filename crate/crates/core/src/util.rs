//! Small numeric and text helpers shared across modules.

/// Rounds to two decimal places (half away from zero).
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Two-decimal percentages of `counts` that sum to exactly 100.00.
///
/// Largest-remainder apportionment over hundredths of a percent: every value
/// is within 0.01 of its individually rounded share.
pub fn apportioned_percents(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    const UNITS: u128 = 10_000;
    let mut floors = Vec::with_capacity(counts.len());
    let mut remainders = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let scaled = c as u128 * UNITS;
        floors.push(scaled / total as u128);
        remainders.push((scaled % total as u128, i));
    }
    let assigned: u128 = floors.iter().sum();
    let mut leftover = (UNITS - assigned) as usize;
    // Largest remainder first; ties go to the earlier entry.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &remainders {
        if leftover == 0 {
            break;
        }
        floors[i] += 1;
        leftover -= 1;
    }
    floors.into_iter().map(|u| u as f64 / 100.0).collect()
}

/// Lowercases `text` and splits it on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}
