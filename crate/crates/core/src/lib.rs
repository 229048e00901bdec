//! Slope One collaborative filtering.
//!
//! Rating prediction from item-item deviations that are precomputed once and
//! then maintained incrementally as ratings are added, changed or removed.
//! Alongside the three Slope One predictors (plain, weighted and bi-polar) the
//! crate provides four reference schemes for comparison and an All-But-One
//! MAE harness to benchmark them against each other.
//!
//! ```
//! use slopeone_core::{Dataset, Evaluation, ItemId, Model, RatingScale, SchemeId, UserId};
//!
//! let (i, j) = (ItemId(0), ItemId(1));
//! let train = Dataset::from_evaluations(
//!     RatingScale::new(0.0, 5.0, 0.5).unwrap(),
//!     [
//!         Evaluation::new(UserId(0), [(i, 1.0), (j, 1.5)]).unwrap(),
//!         Evaluation::new(UserId(1), [(i, 2.0)]).unwrap(),
//!     ],
//! )
//! .unwrap();
//! let model = Model::train(train);
//! let query = Evaluation::new(UserId(1), [(i, 2.0)]).unwrap();
//! let p = model.predict(SchemeId::SlopeOne, &query, &[j]).unwrap();
//! assert_eq!(p.value(j), Some(2.5));
//! ```

pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod predict;
pub mod store;
pub mod types;

pub use error::{Error, Result};
pub use model::Model;
pub use predict::{predict, ModelBundle, PearsonParams, SchemeId};
pub use store::{
    BipolarDeviationStore, ChangeSummary, DeviationStore, DeviationStores, PairAccumulator, RatingChange,
};
pub use types::{
    Dataset, Dictionary, Evaluation, ItemId, PredictedRating, Prediction, Provenance, RatingScale, UserId,
};
