//! Python bindings for `slopeone_core`.
//!
//! Users and items are addressed by string ids on the Python side and
//! interned in first-seen order, the same way the command-line tool does it.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use slopeone_core::eval::{self, SelectionOrder, SplitSpec};
use slopeone_core::io::{self as model_io, CorpusFormat, ModelFile};
use slopeone_core::{
    Dataset, DeviationStores, Dictionary, Error, Evaluation, ItemId, Model, PearsonParams, RatingChange,
    RatingScale, SchemeId, UserId,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn scheme(name: &str) -> PyResult<SchemeId> {
    SchemeId::from_str(name).map_err(to_py)
}

/// Rating range and granularity, e.g. `RatingScale(1, 5, 1)`.
#[pyclass(name = "RatingScale", module = "slopeone", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyRatingScale(RatingScale);

#[pymethods]
impl PyRatingScale {
    #[new]
    fn new(min: f64, max: f64, step: f64) -> PyResult<Self> {
        RatingScale::new(min, max, step).map(PyRatingScale).map_err(to_py)
    }

    #[staticmethod]
    fn movielens() -> Self {
        PyRatingScale(RatingScale::movielens())
    }

    #[getter]
    fn min(&self) -> f64 {
        self.0.min()
    }

    #[getter]
    fn max(&self) -> f64 {
        self.0.max()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.0.step()
    }

    fn clamp(&self, value: f64) -> PyResult<f64> {
        self.0.clamp(value).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("RatingScale({}, {}, {})", self.0.min(), self.0.max(), self.0.step())
    }
}

/// A trained model: the ratings plus the plain and bi-polar deviation stores,
/// kept up to date as ratings change.
#[pyclass(name = "Recommender", module = "slopeone")]
struct PyRecommender {
    users: Dictionary,
    items: Dictionary,
    model: Model,
}

impl PyRecommender {
    fn from_file(file: ModelFile) -> Self {
        PyRecommender {
            users: file.users,
            items: file.items,
            model: Model::from_parts(file.dataset, file.stores),
        }
    }

    fn item(&self, name: &str) -> PyResult<ItemId> {
        self.items
            .get(name)
            .map(ItemId)
            .ok_or_else(|| PyValueError::new_err(format!("unknown item {name:?}")))
    }

    fn user(&self, name: &str) -> PyResult<UserId> {
        self.users
            .get(name)
            .map(UserId)
            .ok_or_else(|| PyValueError::new_err(format!("unknown user {name:?}")))
    }

    fn change(&mut self, user: UserId, item: ItemId, change: RatingChange) -> PyResult<(usize, usize)> {
        let s = self.model.apply_rating_change(user, item, change).map_err(to_py)?;
        Ok((s.plain_pairs, s.bipolar_pairs))
    }
}

#[pymethods]
impl PyRecommender {
    /// Trains on `(user, item, rating)` triples. A repeated pair keeps the
    /// last rating.
    #[new]
    #[pyo3(signature = (scale, ratings = Vec::new()))]
    fn new(scale: PyRatingScale, ratings: Vec<(String, String, f64)>) -> PyResult<Self> {
        let mut users = Dictionary::new();
        let mut items = Dictionary::new();
        let mut grouped: BTreeMap<u32, Vec<(ItemId, f64)>> = BTreeMap::new();
        for (user, item, value) in &ratings {
            let u = users.intern(user);
            let i = items.intern(item);
            grouped.entry(u).or_default().push((ItemId(i), *value));
        }
        let evaluations = grouped
            .into_iter()
            .map(|(u, r)| Evaluation::new(UserId(u), r))
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        let dataset = Dataset::from_evaluations(scale.0, evaluations).map_err(to_py)?;
        Ok(PyRecommender { users, items, model: Model::train(dataset) })
    }

    /// Trains on a ratings file. `format` is `movielens-tab` or a delimited
    /// format such as `csv` / `csv-header`.
    #[staticmethod]
    #[pyo3(signature = (path, scale, format = "movielens-tab"))]
    fn from_corpus(path: &str, scale: PyRatingScale, format: &str) -> PyResult<Self> {
        let format = CorpusFormat::from_str(format).map_err(to_py)?;
        let corpus = model_io::load_corpus(path, format, scale.0).map_err(to_py)?;
        Ok(PyRecommender { users: corpus.users, items: corpus.items, model: Model::train(corpus.dataset) })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        model_io::load_model(path).map(Self::from_file).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = ModelFile {
            users: self.users.clone(),
            items: self.items.clone(),
            dataset: self.model.dataset().clone(),
            stores: self.model.stores().clone(),
        };
        model_io::save_model(&file, path).map_err(to_py)
    }

    #[getter]
    fn scale(&self) -> PyRatingScale {
        PyRatingScale(self.model.scale())
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.model.dataset().num_users()
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.model.dataset().num_items()
    }

    #[getter]
    fn num_ratings(&self) -> usize {
        self.model.dataset().num_ratings()
    }

    /// Returns the number of affected `(plain, bipolar)` pair entries.
    fn add_rating(&mut self, user: &str, item: &str, value: f64) -> PyResult<(usize, usize)> {
        // Intern only after the edit is accepted.
        let (mut users, mut items) = (self.users.clone(), self.items.clone());
        let (u, i) = (UserId(users.intern(user)), ItemId(items.intern(item)));
        let summary = self.change(u, i, RatingChange::Add(value))?;
        self.users = users;
        self.items = items;
        Ok(summary)
    }

    fn remove_rating(&mut self, user: &str, item: &str) -> PyResult<(usize, usize)> {
        let (u, i) = (self.user(user)?, self.item(item)?);
        self.change(u, i, RatingChange::Remove)
    }

    fn set_rating(&mut self, user: &str, item: &str, value: f64) -> PyResult<(usize, usize)> {
        let (u, i) = (self.user(user)?, self.item(item)?);
        self.change(u, i, RatingChange::Update(value))
    }

    fn rating(&self, user: &str, item: &str) -> Option<f64> {
        let (u, i) = (self.users.get(user)?, self.items.get(item)?);
        self.model.dataset().rating(UserId(u), ItemId(i))
    }

    /// `(dev, count)` of item `j` relative to item `i`; `kind` is `plain`,
    /// `like` or `dislike`.
    #[pyo3(signature = (j, i, kind = "plain"))]
    fn deviation(&self, j: &str, i: &str, kind: &str) -> PyResult<(f64, u32)> {
        let (j, i) = (self.item(j)?, self.item(i)?);
        let stores = self.model.stores();
        match kind {
            "plain" => Ok(stores.plain.deviation(j, i)),
            "like" => Ok(stores.bipolar.like_deviation(j, i)),
            "dislike" => Ok(stores.bipolar.dislike_deviation(j, i)),
            _ => Err(PyValueError::new_err(format!("unknown store {kind:?}"))),
        }
    }

    /// Predicts ratings for a query user given as `{item: rating}`. Without
    /// `items`, every known item the query has not rated is predicted.
    /// Returns `{item: (prediction, fallback_depth)}`.
    #[pyo3(signature = (ratings, scheme = "weighted-slope-one", items = None, rho = PearsonParams::DEFAULT_RHO))]
    fn predict(
        &mut self,
        ratings: HashMap<String, f64>,
        scheme: &str,
        items: Option<Vec<String>>,
        rho: f64,
    ) -> PyResult<HashMap<String, (f64, u8)>> {
        let scheme = self::scheme(scheme)?;
        // Unknown names get transient ids that never reach the model file.
        let mut names = self.items.clone();
        let query: Vec<(ItemId, f64)> =
            ratings.iter().map(|(name, &v)| (ItemId(names.intern(name)), v)).collect();
        for &(_, v) in &query {
            self.model.scale().validate(v).map_err(to_py)?;
        }
        let user = UserId(u32::try_from(self.users.len()).unwrap_or(u32::MAX));
        let query = Evaluation::new(user, query).map_err(to_py)?;
        let targets: Vec<ItemId> = match &items {
            Some(list) => list.iter().map(|n| ItemId(names.intern(n))).collect(),
            None => self.model.dataset().items().filter(|&i| !query.contains(i)).collect(),
        };
        self.model.set_pearson(PearsonParams::new(rho).map_err(to_py)?);
        if scheme == SchemeId::AdjustedCosineItem && self.model.item_model().is_none() {
            self.model.fit_item_model();
        }
        let prediction = self.model.predict(scheme, &query, &targets).map_err(to_py)?;
        Ok(prediction
            .iter()
            .map(|(item, p)| {
                (names.name(item.0).unwrap_or_default().to_owned(), (p.value, p.provenance.fallback_depth))
            })
            .collect())
    }

    /// True when the stores equal a fresh rebuild from the current ratings.
    fn verify(&self) -> bool {
        DeviationStores::build(self.model.dataset()).approx_eq(self.model.stores(), 1e-9)
    }

    fn __repr__(&self) -> String {
        let d = self.model.dataset();
        format!("Recommender(users={}, items={}, ratings={})", d.num_users(), d.num_items(), d.num_ratings())
    }
}

/// All-But-One MAE of each scheme on a seeded split of a ratings file.
/// Returns one dict per scheme in report order.
#[pyfunction]
#[pyo3(signature = (
    path,
    scale,
    train_ratings,
    test_ratings = None,
    schemes = None,
    divisor = 1.0,
    seed = 0,
    shuffle = true,
    rho = PearsonParams::DEFAULT_RHO,
    format = "movielens-tab",
))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    path: &str,
    scale: PyRatingScale,
    train_ratings: usize,
    test_ratings: Option<usize>,
    schemes: Option<Vec<String>>,
    divisor: f64,
    seed: u64,
    shuffle: bool,
    rho: f64,
    format: &str,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let schemes: Vec<SchemeId> = match schemes {
        Some(list) => list.iter().map(|s| scheme(s)).collect::<PyResult<_>>()?,
        None => SchemeId::ALL.to_vec(),
    };
    let pearson = PearsonParams::new(rho).map_err(to_py)?;
    let format = CorpusFormat::from_str(format).map_err(to_py)?;
    let order = if shuffle { SelectionOrder::Shuffled } else { SelectionOrder::DatasetOrder };
    let spec = SplitSpec { train_ratings, test_ratings, order, seed };

    let report = py
        .detach(|| -> slopeone_core::Result<_> {
            let corpus = model_io::load_corpus(path, format, scale.0)?;
            let split = eval::split(&corpus.dataset, &spec)?;
            eval::compare_schemes(&schemes, &split.train, &split.test, divisor, pearson, seed)
        })
        .map_err(to_py)?;

    let mut rows = Vec::new();
    for outcome in &report.outcomes {
        let row = pyo3::types::PyDict::new(py);
        row.set_item("scheme", outcome.scheme.name())?;
        match &outcome.result {
            Ok(e) => {
                row.set_item("raw_mae", e.raw_mae)?;
                row.set_item("normalized_mae", e.normalized_mae)?;
                row.set_item("divisor", e.divisor)?;
                row.set_item("fallback_counts", e.fallback_counts.to_vec())?;
                row.set_item("users_scored", e.users_scored)?;
                row.set_item("users_skipped", e.users_skipped)?;
            }
            Err(msg) => row.set_item("error", msg)?,
        }
        row.set_item("train_ratings", report.split.train_ratings)?;
        row.set_item("test_ratings", report.split.test_ratings)?;
        rows.push(row);
    }
    Ok(rows)
}

#[pyfunction]
fn schemes() -> Vec<&'static str> {
    SchemeId::ALL.iter().map(|s| s.name()).collect()
}

#[pymodule]
fn slopeone(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRatingScale>()?;
    m.add_class::<PyRecommender>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(schemes, m)?)?;
    Ok(())
}
