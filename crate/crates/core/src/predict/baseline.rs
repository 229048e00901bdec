use crate::error::Result;
use crate::types::{Dataset, Evaluation, ItemId, Prediction, RatingScale};

use super::{assemble, Estimate, SchemeId};

/// Every item gets the user's own average.
pub fn predict_per_user_average(u: &Evaluation, scale: RatingScale, items: &[ItemId]) -> Result<Prediction> {
    assemble(u, SchemeId::PerUserAverage, scale, items, |_| Estimate::direct(u.mean()))
}

/// User average plus the item's mean offset from its raters' own averages.
pub fn predict_bias_from_mean(u: &Evaluation, dataset: &Dataset, items: &[ItemId]) -> Result<Prediction> {
    assemble(u, SchemeId::BiasFromMean, dataset.scale(), items, |item| bias_from_mean(u, dataset, item))
}

pub(crate) fn bias_from_mean(u: &Evaluation, dataset: &Dataset, item: ItemId) -> Estimate {
    let mut offset = 0.0;
    let mut raters = 0usize;
    for v in dataset.evaluations_with(item) {
        let rating = v.get(item).expect("indexed rater rated the item");
        offset += rating - v.mean();
        raters += 1;
    }
    if raters == 0 {
        Estimate::fallback(u.mean())
    } else {
        Estimate::direct(u.mean() + offset / raters as f64)
    }
}
