//! Item-item deviation stores.
//!
//! Every pair of distinct items is kept once, under the canonical key
//! `(hi, lo)` with `hi > lo`, as a running sum of `u_hi - u_lo` over the users
//! who rated both plus the number of such users. The average deviation is
//! derived on read, which keeps both orientations consistent and lets a single
//! rating change be applied by adjusting sums and counts in place.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::types::{Dataset, Evaluation, ItemId, UserId};

/// Running sum of rating differences and co-rating count for one item pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairAccumulator {
    /// Sum of `u_hi - u_lo` over co-rating users.
    pub diff_sum: f64,
    pub count: u32,
}

impl PairAccumulator {
    pub fn deviation(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.diff_sum / self.count as f64
        }
    }
}

type PairMap = HashMap<(ItemId, ItemId), PairAccumulator>;

fn canonical(a: ItemId, b: ItemId) -> (ItemId, ItemId) {
    if a > b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Looks up `(dev_{j,i}, c_{j,i})` in the requested orientation.
fn oriented(map: &PairMap, j: ItemId, i: ItemId) -> (f64, u32) {
    if j == i {
        return (0.0, 0);
    }
    match map.get(&canonical(j, i)) {
        Some(acc) if acc.count > 0 => {
            let dev = acc.deviation();
            (if j > i { dev } else { -dev }, acc.count)
        }
        _ => (0.0, 0),
    }
}

/// Adds (`sign = 1`) or retracts (`sign = -1`) one user's `(rating_a, rating_b)`
/// observation for the pair `(a, b)`.
fn contribute(map: &mut PairMap, a: (ItemId, f64), b: (ItemId, f64), sign: i32) {
    debug_assert_ne!(a.0, b.0);
    let (hi, lo) = if a.0 > b.0 { (a, b) } else { (b, a) };
    let key = (hi.0, lo.0);
    let diff = hi.1 - lo.1;
    if sign > 0 {
        let acc = map.entry(key).or_default();
        acc.diff_sum += diff;
        acc.count += 1;
    } else if let Some(acc) = map.get_mut(&key) {
        acc.count -= 1;
        if acc.count == 0 {
            map.remove(&key);
        } else {
            acc.diff_sum -= diff;
        }
    }
}

/// Adds or retracts every pair formed inside `ratings` (sorted by item).
fn contribute_all(map: &mut PairMap, ratings: &[(ItemId, f64)], sign: i32) -> usize {
    for (b, &hi) in ratings.iter().enumerate() {
        for &lo in &ratings[..b] {
            contribute(map, hi, lo, sign);
        }
    }
    ratings.len() * ratings.len().saturating_sub(1) / 2
}

fn sorted_pairs(map: &PairMap) -> Vec<(ItemId, ItemId, PairAccumulator)> {
    let mut out: Vec<_> = map.iter().map(|(&(hi, lo), &acc)| (lo, hi, acc)).collect();
    out.sort_unstable_by_key(|&(lo, hi, _)| (lo, hi));
    out
}

fn maps_close(a: &PairMap, b: &PairMap, tolerance: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|(key, x)| {
            b.get(key).is_some_and(|y| x.count == y.count && (x.diff_sum - y.diff_sum).abs() <= tolerance)
        })
}

/// The plain deviation matrix: `dev_{j,i}` and `c_{j,i}` for all co-rated pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviationStore {
    pairs: PairMap,
    items: BTreeSet<ItemId>,
}

impl DeviationStore {
    pub fn build(dataset: &Dataset) -> Self {
        let mut pairs = PairMap::new();
        for evaluation in dataset.evaluations() {
            contribute_all(&mut pairs, evaluation.ratings(), 1);
        }
        DeviationStore { pairs, items: dataset.items().collect() }
    }

    /// `(dev_{j,i}, c_{j,i})`; `(0, 0)` when no user rated both or `j == i`.
    pub fn deviation(&self, j: ItemId, i: ItemId) -> (f64, u32) {
        oriented(&self.pairs, j, i)
    }

    /// The stored accumulator for the unordered pair, oriented as `(hi, lo)`.
    pub fn accumulator(&self, a: ItemId, b: ItemId) -> Option<PairAccumulator> {
        self.pairs.get(&canonical(a, b)).copied()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn items(&self) -> &BTreeSet<ItemId> {
        &self.items
    }

    /// `(lo, hi, accumulator)` triples in ascending `(lo, hi)` order.
    pub fn pairs(&self) -> Vec<(ItemId, ItemId, PairAccumulator)> {
        sorted_pairs(&self.pairs)
    }

    pub(crate) fn from_parts(
        pairs: impl IntoIterator<Item = (ItemId, ItemId, PairAccumulator)>,
        items: BTreeSet<ItemId>,
    ) -> Self {
        let pairs = pairs.into_iter().map(|(a, b, acc)| (canonical(a, b), acc)).collect();
        DeviationStore { pairs, items }
    }

    /// Same pairs and counts, diff-sums within `tolerance`.
    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.items == other.items && maps_close(&self.pairs, &other.pairs, tolerance)
    }
}

/// One user's liked and disliked items as last seen by the bipolar store.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarSnapshot {
    pub mean: f64,
    pub like: Vec<(ItemId, f64)>,
    pub dislike: Vec<(ItemId, f64)>,
}

/// Ratings this close to the user's mean count as neither liked nor disliked,
/// so that an evaluation of identical values never splits due to rounding in
/// its mean.
const POLARITY_TOLERANCE: f64 = 1e-9;

impl PolarSnapshot {
    pub fn of(evaluation: &Evaluation) -> Self {
        let mean = evaluation.mean();
        let mut like = Vec::new();
        let mut dislike = Vec::new();
        for &(item, r) in evaluation.ratings() {
            if r - mean > POLARITY_TOLERANCE {
                like.push((item, r));
            } else if mean - r > POLARITY_TOLERANCE {
                dislike.push((item, r));
            }
        }
        PolarSnapshot { mean, like, dislike }
    }
}

/// Separate deviation matrices over liked-liked and disliked-disliked pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BipolarDeviationStore {
    like: PairMap,
    dislike: PairMap,
    snapshots: HashMap<UserId, PolarSnapshot>,
}

impl BipolarDeviationStore {
    pub fn build(dataset: &Dataset) -> Self {
        let mut store = BipolarDeviationStore::default();
        for evaluation in dataset.evaluations() {
            store.subscribe(evaluation);
        }
        store
    }

    fn subscribe(&mut self, evaluation: &Evaluation) -> usize {
        let snapshot = PolarSnapshot::of(evaluation);
        let touched = contribute_all(&mut self.like, &snapshot.like, 1)
            + contribute_all(&mut self.dislike, &snapshot.dislike, 1);
        self.snapshots.insert(evaluation.user(), snapshot);
        touched
    }

    fn unsubscribe(&mut self, user: UserId) -> usize {
        match self.snapshots.remove(&user) {
            Some(s) => {
                contribute_all(&mut self.like, &s.like, -1)
                    + contribute_all(&mut self.dislike, &s.dislike, -1)
            }
            None => 0,
        }
    }

    pub fn like_deviation(&self, j: ItemId, i: ItemId) -> (f64, u32) {
        oriented(&self.like, j, i)
    }

    pub fn dislike_deviation(&self, j: ItemId, i: ItemId) -> (f64, u32) {
        oriented(&self.dislike, j, i)
    }

    pub fn snapshot(&self, user: UserId) -> Option<&PolarSnapshot> {
        self.snapshots.get(&user)
    }

    pub fn like_pairs(&self) -> Vec<(ItemId, ItemId, PairAccumulator)> {
        sorted_pairs(&self.like)
    }

    pub fn dislike_pairs(&self) -> Vec<(ItemId, ItemId, PairAccumulator)> {
        sorted_pairs(&self.dislike)
    }

    pub fn num_like_pairs(&self) -> usize {
        self.like.len()
    }

    pub fn num_dislike_pairs(&self) -> usize {
        self.dislike.len()
    }

    /// Reassembles a store from serialized pair sections. Snapshots are derived
    /// from `dataset`, which must be the dataset the sections were built from.
    pub(crate) fn from_parts(
        like: impl IntoIterator<Item = (ItemId, ItemId, PairAccumulator)>,
        dislike: impl IntoIterator<Item = (ItemId, ItemId, PairAccumulator)>,
        dataset: &Dataset,
    ) -> Self {
        let collect = |it: &mut dyn Iterator<Item = (ItemId, ItemId, PairAccumulator)>| {
            it.map(|(a, b, acc)| (canonical(a, b), acc)).collect::<PairMap>()
        };
        BipolarDeviationStore {
            like: collect(&mut like.into_iter()),
            dislike: collect(&mut dislike.into_iter()),
            snapshots: dataset.evaluations().map(|e| (e.user(), PolarSnapshot::of(e))).collect(),
        }
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.snapshots == other.snapshots
            && maps_close(&self.like, &other.like, tolerance)
            && maps_close(&self.dislike, &other.dislike, tolerance)
    }
}

/// A single-rating edit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatingChange {
    Add(f64),
    Remove,
    Update(f64),
}

/// What an incremental update touched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChangeSummary {
    /// Plain-store pairs whose accumulator was adjusted.
    pub plain_pairs: usize,
    /// Like/dislike pair contributions retracted plus re-added.
    pub bipolar_pairs: usize,
}

/// The plain and bipolar stores, trained together and updated together.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviationStores {
    pub plain: DeviationStore,
    pub bipolar: BipolarDeviationStore,
}

impl DeviationStores {
    pub fn build(dataset: &Dataset) -> Self {
        DeviationStores {
            plain: DeviationStore::build(dataset),
            bipolar: BipolarDeviationStore::build(dataset),
        }
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.plain.approx_eq(&other.plain, tolerance) && self.bipolar.approx_eq(&other.bipolar, tolerance)
    }

    /// Applies one rating edit to `dataset` and both stores. On error nothing
    /// is modified.
    pub fn apply_rating_change(
        &mut self,
        dataset: &mut Dataset,
        user: UserId,
        item: ItemId,
        change: RatingChange,
    ) -> Result<ChangeSummary> {
        let current = dataset.rating(user, item);
        match change {
            RatingChange::Add(value) => {
                dataset.scale().validate(value)?;
                if current.is_some() {
                    return Err(Error::DuplicateRating { user, item });
                }
            }
            RatingChange::Remove | RatingChange::Update(_) => {
                if dataset.evaluation(user).is_none() {
                    return Err(Error::UnknownUser(user));
                }
                if current.is_none() {
                    return Err(Error::MissingRating { user, item });
                }
                if let RatingChange::Update(value) = change {
                    dataset.scale().validate(value)?;
                }
            }
        }

        let mut summary = ChangeSummary::default();
        if let Some(evaluation) = dataset.evaluation(user) {
            for &(other, other_rating) in evaluation.ratings() {
                if other == item {
                    continue;
                }
                match (change, current) {
                    (RatingChange::Add(value), _) => {
                        contribute(&mut self.plain.pairs, (item, value), (other, other_rating), 1);
                    }
                    (RatingChange::Remove, Some(old)) => {
                        contribute(&mut self.plain.pairs, (item, old), (other, other_rating), -1);
                    }
                    (RatingChange::Update(value), Some(old)) => {
                        let delta = value - old;
                        if delta != 0.0 {
                            let acc = self
                                .plain
                                .pairs
                                .get_mut(&canonical(item, other))
                                .expect("co-rated pair is stored");
                            acc.diff_sum += if item > other { delta } else { -delta };
                        }
                    }
                    _ => unreachable!("validated above"),
                }
                summary.plain_pairs += 1;
            }
        }

        match change {
            RatingChange::Add(value) | RatingChange::Update(value) => dataset.put_rating(user, item, value),
            RatingChange::Remove => dataset.take_rating(user, item),
        }
        if dataset.num_raters(item) > 0 {
            self.plain.items.insert(item);
        } else {
            self.plain.items.remove(&item);
        }

        summary.bipolar_pairs += self.bipolar.unsubscribe(user);
        if let Some(evaluation) = dataset.evaluation(user) {
            summary.bipolar_pairs += self.bipolar.subscribe(evaluation);
        }
        Ok(summary)
    }
}
