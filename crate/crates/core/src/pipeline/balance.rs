use super::window::DataPoint;
use crate::error::{Error, Result};
use crate::rng::{seeded, shuffle};

/// Undersamples the larger of the `positive_label` / other groups to the size
/// of the smaller one, then shuffles the union. Selection and order depend
/// only on `seed`.
pub fn balance<T: Clone>(points: Vec<DataPoint<T>>, positive_label: i64, seed: u64) -> Result<Vec<DataPoint<T>>> {
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = points.into_iter().partition(|p| p.label.value() == positive_label);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidInput(format!(
            "balancing needs both classes ({} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = seeded(seed);
    let n = pos.len().min(neg.len());
    shuffle(&mut pos, &mut rng);
    shuffle(&mut neg, &mut rng);
    pos.truncate(n);
    neg.truncate(n);
    pos.append(&mut neg);
    shuffle(&mut pos, &mut rng);
    Ok(pos)
}
