//! Domain types shared by the stores, predictors and evaluation harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::predict::SchemeId;

/// Dense handle for an item, assigned by a [`Dictionary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

/// Dense handle for a user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Legal rating range and increment of a corpus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatingScale {
    min: f64,
    max: f64,
    step: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidScale("bounds and step must be finite".into()));
        }
        if min >= max {
            return Err(Error::InvalidScale(format!("min {min} must be below max {max}")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidScale(format!("step {step} must be positive")));
        }
        let steps = (max - min) / step;
        if (steps - steps.round()).abs() * step > 1e-9 {
            return Err(Error::InvalidScale(format!("range {min}..{max} is not a multiple of step {step}")));
        }
        Ok(RatingScale { min, max, step })
    }

    /// The 1..5 integer scale of MovieLens.
    pub fn movielens() -> Self {
        RatingScale { min: 1.0, max: 5.0, step: 1.0 }
    }

    /// The 0..1 scale in increments of 0.2 used by EachMovie.
    pub fn eachmovie() -> Self {
        RatingScale { min: 0.0, max: 1.0, step: 0.2 }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    /// Checks that `value` is a finite rating inside the scale.
    pub fn validate(&self, value: f64) -> Result<f64> {
        if value.is_finite() && self.contains(value) {
            Ok(value)
        } else {
            Err(Error::RatingOutOfScale { value, min: self.min, max: self.max })
        }
    }

    /// Pulls an out-of-range prediction back onto the scale. No snapping to `step`.
    pub fn clamp(&self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::NonFinitePrediction);
        }
        Ok(value.max(self.min).min(self.max))
    }
}

/// One user's incomplete rating array.
///
/// Ratings are kept sorted by item so that overlaps between two evaluations
/// can be computed with a linear merge. The mean is cached at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    user: UserId,
    ratings: Vec<(ItemId, f64)>,
    mean: f64,
}

impl Evaluation {
    /// Builds an evaluation; a repeated item keeps its last value.
    pub fn new<I>(user: UserId, ratings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemId, f64)>,
    {
        let map: BTreeMap<ItemId, f64> = ratings.into_iter().collect();
        Self::from_sorted(user, map.into_iter().collect())
    }

    fn from_sorted(user: UserId, ratings: Vec<(ItemId, f64)>) -> Result<Self> {
        if ratings.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let mean = mean_of(&ratings);
        Ok(Evaluation { user, ratings, mean })
    }

    pub fn user(&self) -> UserId {
        self.user
    }

    /// The user's average rating.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn get(&self, item: ItemId) -> Option<f64> {
        self.ratings.binary_search_by_key(&item, |&(i, _)| i).ok().map(|pos| self.ratings[pos].1)
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.get(item).is_some()
    }

    /// (item, rating) pairs in ascending item order.
    pub fn ratings(&self) -> &[(ItemId, f64)] {
        &self.ratings
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.ratings.iter().map(|&(i, _)| i)
    }

    /// A copy with `item` hidden, or `None` when nothing would remain.
    pub fn without(&self, item: ItemId) -> Option<Evaluation> {
        let ratings: Vec<_> = self.ratings.iter().copied().filter(|&(i, _)| i != item).collect();
        Self::from_sorted(self.user, ratings).ok()
    }

    /// A copy with `item` set to `value` (inserted or replaced).
    pub fn with_rating(&self, item: ItemId, value: f64) -> Evaluation {
        let mut ratings = self.ratings.clone();
        match ratings.binary_search_by_key(&item, |&(i, _)| i) {
            Ok(pos) => ratings[pos].1 = value,
            Err(pos) => ratings.insert(pos, (item, value)),
        }
        Self::from_sorted(self.user, ratings).expect("non-empty by construction")
    }
}

fn mean_of(ratings: &[(ItemId, f64)]) -> f64 {
    ratings.iter().map(|&(_, r)| r).sum::<f64>() / ratings.len() as f64
}

/// The training set: one evaluation per user plus an item → raters index.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    scale: RatingScale,
    evaluations: BTreeMap<UserId, Evaluation>,
    item_index: BTreeMap<ItemId, BTreeSet<UserId>>,
}

impl Dataset {
    pub fn new(scale: RatingScale) -> Self {
        Dataset { scale, evaluations: BTreeMap::new(), item_index: BTreeMap::new() }
    }

    /// Builds a dataset, validating every rating against `scale`. A user that
    /// appears twice keeps the later evaluation.
    pub fn from_evaluations<I>(scale: RatingScale, evaluations: I) -> Result<Self>
    where
        I: IntoIterator<Item = Evaluation>,
    {
        let mut dataset = Dataset::new(scale);
        for evaluation in evaluations {
            dataset.insert_evaluation(evaluation)?;
        }
        Ok(dataset)
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn num_users(&self) -> usize {
        self.evaluations.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_index.len()
    }

    pub fn num_ratings(&self) -> usize {
        self.evaluations.values().map(Evaluation::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn evaluation(&self, user: UserId) -> Option<&Evaluation> {
        self.evaluations.get(&user)
    }

    pub fn evaluations(&self) -> impl Iterator<Item = &Evaluation> + '_ {
        self.evaluations.values()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.item_index.keys().copied()
    }

    pub fn rating(&self, user: UserId, item: ItemId) -> Option<f64> {
        self.evaluations.get(&user).and_then(|e| e.get(item))
    }

    /// Users who rated `item`.
    pub fn raters(&self, item: ItemId) -> impl Iterator<Item = UserId> + '_ {
        self.item_index.get(&item).into_iter().flat_map(|users| users.iter().copied())
    }

    /// All evaluations containing `item`.
    pub fn evaluations_with(&self, item: ItemId) -> impl Iterator<Item = &Evaluation> + '_ {
        self.raters(item).map(move |u| &self.evaluations[&u])
    }

    pub fn num_raters(&self, item: ItemId) -> usize {
        self.item_index.get(&item).map_or(0, BTreeSet::len)
    }

    pub fn item_index(&self) -> &BTreeMap<ItemId, BTreeSet<UserId>> {
        &self.item_index
    }

    /// Recomputes the item index from the evaluations alone.
    pub fn rebuild_item_index(&self) -> BTreeMap<ItemId, BTreeSet<UserId>> {
        let mut index: BTreeMap<ItemId, BTreeSet<UserId>> = BTreeMap::new();
        for evaluation in self.evaluations.values() {
            for item in evaluation.items() {
                index.entry(item).or_default().insert(evaluation.user());
            }
        }
        index
    }

    pub(crate) fn insert_evaluation(&mut self, evaluation: Evaluation) -> Result<()> {
        for &(_, r) in evaluation.ratings() {
            self.scale.validate(r)?;
        }
        self.detach(evaluation.user());
        for item in evaluation.items() {
            self.item_index.entry(item).or_default().insert(evaluation.user());
        }
        self.evaluations.insert(evaluation.user(), evaluation);
        Ok(())
    }

    fn detach(&mut self, user: UserId) -> Option<Evaluation> {
        let previous = self.evaluations.remove(&user)?;
        for item in previous.items() {
            if let Some(users) = self.item_index.get_mut(&item) {
                users.remove(&user);
                if users.is_empty() {
                    self.item_index.remove(&item);
                }
            }
        }
        Some(previous)
    }

    /// Sets or inserts one rating. Unvalidated; callers check the scale.
    pub(crate) fn put_rating(&mut self, user: UserId, item: ItemId, value: f64) {
        let updated = match self.evaluations.get(&user) {
            Some(e) => e.with_rating(item, value),
            None => Evaluation::from_sorted(user, vec![(item, value)]).expect("one rating"),
        };
        self.item_index.entry(item).or_default().insert(user);
        self.evaluations.insert(user, updated);
    }

    /// Removes one rating, dropping the user once their evaluation is empty.
    pub(crate) fn take_rating(&mut self, user: UserId, item: ItemId) {
        let Some(evaluation) = self.evaluations.get(&user) else { return };
        match evaluation.without(item) {
            Some(rest) => {
                self.evaluations.insert(user, rest);
            }
            None => {
                self.evaluations.remove(&user);
            }
        }
        if let Some(users) = self.item_index.get_mut(&item) {
            users.remove(&user);
            if users.is_empty() {
                self.item_index.remove(&item);
            }
        }
    }
}

/// Where a predicted value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub scheme: SchemeId,
    /// 0 when the scheme's own formula produced the value; each step down the
    /// fallback chain adds one.
    pub fallback_depth: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedRating {
    pub value: f64,
    pub provenance: Provenance,
}

/// A prediction vector `P(u)` restricted to the requested items.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prediction {
    entries: BTreeMap<ItemId, PredictedRating>,
}

impl Prediction {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn insert(&mut self, item: ItemId, rating: PredictedRating) {
        self.entries.insert(item, rating);
    }

    pub fn get(&self, item: ItemId) -> Option<&PredictedRating> {
        self.entries.get(&item)
    }

    pub fn value(&self, item: ItemId) -> Option<f64> {
        self.entries.get(&item).map(|p| p.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, &PredictedRating)> + '_ {
        self.entries.iter().map(|(&i, p)| (i, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Interns raw string identifiers into dense integer handles in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = u32::try_from(self.names.len()).expect("dictionary overflow");
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Names in id order.
    pub fn names(&self) -> &[String] {
        &self.names
    }
}
