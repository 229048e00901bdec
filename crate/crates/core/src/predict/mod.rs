//! Rating predictors behind a common dispatch.

mod baseline;
mod cosine;
mod pearson;
mod slope_one;

use std::fmt;
use std::str::FromStr;

pub use baseline::{predict_bias_from_mean, predict_per_user_average};
pub use cosine::{fit_pair_regression, predict_adjusted_cosine, ItemItemModel, PairFit, Regression};
pub use pearson::{case_amplify, pearson_correlation, predict_pearson, PearsonParams};
pub use slope_one::{predict_bipolar_slope_one, predict_slope_one, predict_weighted_slope_one};

use crate::error::{Error, Result};
use crate::store::{BipolarDeviationStore, DeviationStore};
use crate::types::{Dataset, Evaluation, ItemId, PredictedRating, Prediction, Provenance, RatingScale};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    PerUserAverage,
    BiasFromMean,
    AdjustedCosineItem,
    Pearson,
    SlopeOne,
    WeightedSlopeOne,
    BipolarSlopeOne,
}

impl SchemeId {
    /// All schemes in report order (best-known first, reference schemes last).
    pub const ALL: [SchemeId; 7] = [
        SchemeId::BipolarSlopeOne,
        SchemeId::WeightedSlopeOne,
        SchemeId::SlopeOne,
        SchemeId::BiasFromMean,
        SchemeId::AdjustedCosineItem,
        SchemeId::PerUserAverage,
        SchemeId::Pearson,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::PerUserAverage => "per-user-average",
            SchemeId::BiasFromMean => "bias-from-mean",
            SchemeId::AdjustedCosineItem => "adjusted-cosine-item",
            SchemeId::Pearson => "pearson",
            SchemeId::SlopeOne => "slope-one",
            SchemeId::WeightedSlopeOne => "weighted-slope-one",
            SchemeId::BipolarSlopeOne => "bipolar-slope-one",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            SchemeId::PerUserAverage => "Per User Average",
            SchemeId::BiasFromMean => "Bias From Mean",
            SchemeId::AdjustedCosineItem => "Adjusted Cosine Item-Based",
            SchemeId::Pearson => "Pearson",
            SchemeId::SlopeOne => "Slope One",
            SchemeId::WeightedSlopeOne => "Weighted Slope One",
            SchemeId::BipolarSlopeOne => "Bi-Polar Slope One",
        }
    }

    pub fn is_slope_one(self) -> bool {
        matches!(self, SchemeId::SlopeOne | SchemeId::WeightedSlopeOne | SchemeId::BipolarSlopeOne)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_owned()))
    }
}

/// Borrowed view of whatever trained components are available.
#[derive(Clone, Copy, Debug)]
pub struct ModelBundle<'a> {
    pub scale: RatingScale,
    pub dataset: Option<&'a Dataset>,
    pub plain: Option<&'a DeviationStore>,
    pub bipolar: Option<&'a BipolarDeviationStore>,
    pub item_model: Option<&'a ItemItemModel>,
    pub pearson: PearsonParams,
}

impl<'a> ModelBundle<'a> {
    pub fn new(scale: RatingScale) -> Self {
        ModelBundle {
            scale,
            dataset: None,
            plain: None,
            bipolar: None,
            item_model: None,
            pearson: PearsonParams::default(),
        }
    }

    fn dataset(&self) -> Result<&'a Dataset> {
        self.dataset.ok_or(Error::MissingComponent("dataset"))
    }

    fn plain(&self) -> Result<&'a DeviationStore> {
        self.plain.ok_or(Error::MissingComponent("deviation store"))
    }

    fn bipolar(&self) -> Result<&'a BipolarDeviationStore> {
        self.bipolar.ok_or(Error::MissingComponent("bipolar deviation store"))
    }

    fn item_model(&self) -> Result<&'a ItemItemModel> {
        self.item_model.ok_or(Error::MissingComponent("item-item model"))
    }
}

/// Predicts `items` for the query evaluation `u` with the given scheme.
pub fn predict(
    scheme: SchemeId,
    u: &Evaluation,
    model: &ModelBundle<'_>,
    items: &[ItemId],
) -> Result<Prediction> {
    let scale = model.scale;
    match scheme {
        SchemeId::PerUserAverage => predict_per_user_average(u, scale, items),
        SchemeId::BiasFromMean => predict_bias_from_mean(u, model.dataset()?, items),
        SchemeId::AdjustedCosineItem => {
            predict_adjusted_cosine(u, model.dataset()?, model.item_model()?, items)
        }
        SchemeId::Pearson => predict_pearson(u, model.dataset()?, model.pearson, items),
        SchemeId::SlopeOne => predict_slope_one(u, model.plain()?, scale, items),
        SchemeId::WeightedSlopeOne => predict_weighted_slope_one(u, model.plain()?, scale, items),
        SchemeId::BipolarSlopeOne => {
            predict_bipolar_slope_one(u, model.bipolar()?, model.plain()?, scale, items)
        }
    }
}

/// Unclamped value and fallback depth for one item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Estimate {
    pub value: f64,
    pub depth: u8,
}

impl Estimate {
    pub fn direct(value: f64) -> Self {
        Estimate { value, depth: 0 }
    }

    pub fn fallback(value: f64) -> Self {
        Estimate { value, depth: 1 }
    }

    /// This estimate used as the next fallback level of another scheme.
    pub fn deepen(self) -> Self {
        Estimate { value: self.value, depth: self.depth + 1 }
    }
}

/// Clamps per-item estimates into a [`Prediction`].
pub(crate) fn assemble(
    u: &Evaluation,
    scheme: SchemeId,
    scale: RatingScale,
    items: &[ItemId],
    mut estimate: impl FnMut(ItemId) -> Estimate,
) -> Result<Prediction> {
    if u.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut prediction = Prediction::new();
    for &item in items {
        let Estimate { value, depth } = estimate(item);
        prediction.insert(
            item,
            PredictedRating {
                value: scale.clamp(value)?,
                provenance: Provenance { scheme, fallback_depth: depth },
            },
        );
    }
    Ok(prediction)
}
