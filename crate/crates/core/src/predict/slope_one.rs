//! The three Slope One predictors, all served from precomputed deviation stores.

use crate::error::Result;
use crate::store::{BipolarDeviationStore, DeviationStore, PolarSnapshot};
use crate::types::{Evaluation, ItemId, Prediction, RatingScale};

use super::{assemble, Estimate, SchemeId};

/// `ū` plus the mean deviation of `j` against every rated item that shares
/// at least one co-rater with it. Only the user's mean and the set of rated
/// items matter, not the individual values.
pub fn predict_slope_one(
    u: &Evaluation,
    store: &DeviationStore,
    scale: RatingScale,
    items: &[ItemId],
) -> Result<Prediction> {
    assemble(u, SchemeId::SlopeOne, scale, items, |j| slope_one(u, store, j))
}

fn slope_one(u: &Evaluation, store: &DeviationStore, j: ItemId) -> Estimate {
    let mut deviations = 0.0;
    let mut relevant = 0usize;
    for i in u.items() {
        if i == j {
            continue;
        }
        let (dev, count) = store.deviation(j, i);
        if count > 0 {
            deviations += dev;
            relevant += 1;
        }
    }
    if relevant == 0 {
        Estimate::fallback(u.mean())
    } else {
        Estimate::direct(u.mean() + deviations / relevant as f64)
    }
}

/// Per-item predictions `dev_{j,i} + u_i` averaged with co-rating counts as weights.
pub fn predict_weighted_slope_one(
    u: &Evaluation,
    store: &DeviationStore,
    scale: RatingScale,
    items: &[ItemId],
) -> Result<Prediction> {
    assemble(u, SchemeId::WeightedSlopeOne, scale, items, |j| weighted_slope_one(u, store, j))
}

pub(crate) fn weighted_slope_one(u: &Evaluation, store: &DeviationStore, j: ItemId) -> Estimate {
    let mut weighted = 0.0;
    let mut weight = 0u64;
    for &(i, rating) in u.ratings() {
        if i == j {
            continue;
        }
        let (dev, count) = store.deviation(j, i);
        if count > 0 {
            weighted += (dev + rating) * count as f64;
            weight += u64::from(count);
        }
    }
    if weight == 0 {
        Estimate::fallback(u.mean())
    } else {
        Estimate::direct(weighted / weight as f64)
    }
}

/// Weighted Slope One run separately over the user's liked items (against the
/// like store) and disliked items (against the dislike store), then pooled.
///
/// Falls back to Weighted Slope One when neither polarity yields a co-rated
/// pair.
pub fn predict_bipolar_slope_one(
    u: &Evaluation,
    bipolar: &BipolarDeviationStore,
    plain: &DeviationStore,
    scale: RatingScale,
    items: &[ItemId],
) -> Result<Prediction> {
    let split = PolarSnapshot::of(u);
    assemble(u, SchemeId::BipolarSlopeOne, scale, items, |j| bipolar_slope_one(u, &split, bipolar, plain, j))
}

fn bipolar_slope_one(
    u: &Evaluation,
    split: &PolarSnapshot,
    bipolar: &BipolarDeviationStore,
    plain: &DeviationStore,
    j: ItemId,
) -> Estimate {
    let mut weighted = 0.0;
    let mut weight = 0u64;
    let mut pool = |ratings: &[(ItemId, f64)], lookup: &dyn Fn(ItemId) -> (f64, u32)| {
        for &(i, rating) in ratings {
            if i == j {
                continue;
            }
            let (dev, count) = lookup(i);
            if count > 0 {
                weighted += (dev + rating) * count as f64;
                weight += u64::from(count);
            }
        }
    };
    pool(&split.like, &|i| bipolar.like_deviation(j, i));
    pool(&split.dislike, &|i| bipolar.dislike_deviation(j, i));
    if weight == 0 {
        weighted_slope_one(u, plain, j).deepen()
    } else {
        Estimate::direct(weighted / weight as f64)
    }
}
