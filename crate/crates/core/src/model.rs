use crate::error::Result;
use crate::predict::{predict, ItemItemModel, ModelBundle, PearsonParams, SchemeId};
use crate::store::{ChangeSummary, DeviationStores, RatingChange};
use crate::types::{Dataset, Evaluation, ItemId, Prediction, RatingScale, UserId};

/// A training set together with everything trained from it.
///
/// The deviation stores are always present and are kept current through
/// [`Model::apply_rating_change`]. The item-item model is optional because it
/// is comparatively expensive to fit; when present it is refitted after each
/// change.
#[derive(Clone, Debug)]
pub struct Model {
    dataset: Dataset,
    stores: DeviationStores,
    item_model: Option<ItemItemModel>,
    pearson: PearsonParams,
}

impl Model {
    pub fn train(dataset: Dataset) -> Self {
        let stores = DeviationStores::build(&dataset);
        Model { dataset, stores, item_model: None, pearson: PearsonParams::default() }
    }

    /// Wraps already-built stores, e.g. ones read back from a model file.
    pub fn from_parts(dataset: Dataset, stores: DeviationStores) -> Self {
        Model { dataset, stores, item_model: None, pearson: PearsonParams::default() }
    }

    pub fn fit_item_model(&mut self) {
        self.item_model = Some(ItemItemModel::fit(&self.dataset));
    }

    pub fn with_item_model(mut self) -> Self {
        self.fit_item_model();
        self
    }

    pub fn set_pearson(&mut self, params: PearsonParams) {
        self.pearson = params;
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn stores(&self) -> &DeviationStores {
        &self.stores
    }

    pub fn item_model(&self) -> Option<&ItemItemModel> {
        self.item_model.as_ref()
    }

    pub fn scale(&self) -> RatingScale {
        self.dataset.scale()
    }

    pub fn bundle(&self) -> ModelBundle<'_> {
        ModelBundle {
            scale: self.dataset.scale(),
            dataset: Some(&self.dataset),
            plain: Some(&self.stores.plain),
            bipolar: Some(&self.stores.bipolar),
            item_model: self.item_model.as_ref(),
            pearson: self.pearson,
        }
    }

    pub fn predict(&self, scheme: SchemeId, u: &Evaluation, items: &[ItemId]) -> Result<Prediction> {
        predict(scheme, u, &self.bundle(), items)
    }

    pub fn apply_rating_change(
        &mut self,
        user: UserId,
        item: ItemId,
        change: RatingChange,
    ) -> Result<ChangeSummary> {
        let summary = self.stores.apply_rating_change(&mut self.dataset, user, item, change)?;
        if self.item_model.is_some() {
            self.fit_item_model();
        }
        Ok(summary)
    }

    pub fn into_parts(self) -> (Dataset, DeviationStores) {
        (self.dataset, self.stores)
    }
}
