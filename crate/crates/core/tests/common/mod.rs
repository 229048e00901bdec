//! Brute-force reference implementations used as test oracles.
//!
//! Everything here works on plain `BTreeMap`s and recomputes every quantity
//! from the raw ratings on each call. Nothing is shared with the crate's
//! store-backed code paths except the public data types used to hand results
//! back for comparison.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use slopeone_core::{Dataset, Evaluation, ItemId, RatingScale, SchemeId, UserId};

pub type Ratings = BTreeMap<u32, f64>;

/// Raw training set: user -> (item -> rating).
#[derive(Clone, Debug, Default)]
pub struct RawData {
    pub users: BTreeMap<u32, Ratings>,
}

impl RawData {
    pub fn to_dataset(&self, scale: RatingScale) -> Dataset {
        let evaluations = self.users.iter().filter(|(_, r)| !r.is_empty()).map(|(&u, r)| to_evaluation(u, r));
        Dataset::from_evaluations(scale, evaluations).unwrap()
    }

    pub fn items(&self) -> Vec<u32> {
        let mut items: Vec<u32> = self.users.values().flat_map(|r| r.keys().copied()).collect();
        items.sort_unstable();
        items.dedup();
        items
    }
}

pub fn to_evaluation(user: u32, ratings: &Ratings) -> Evaluation {
    Evaluation::new(UserId(user), ratings.iter().map(|(&i, &r)| (ItemId(i), r))).unwrap()
}

pub fn random_ratings(rng: &mut impl Rng, max_items: u32, min_len: usize) -> Ratings {
    loop {
        let mut r = Ratings::new();
        for item in 0..max_items {
            if rng.random_bool(0.6) {
                r.insert(item, rng.random_range(1..=5) as f64);
            }
        }
        if r.len() >= min_len {
            return r;
        }
    }
}

/// Up to 5 users and 5 items, integer ratings 1..=5.
pub fn random_small_dataset(rng: &mut impl Rng) -> RawData {
    let n_users = rng.random_range(1..=5);
    let mut data = RawData::default();
    for u in 0..n_users {
        data.users.insert(u, random_ratings(rng, 5, 1));
    }
    data
}

pub fn mean(u: &Ratings) -> f64 {
    u.values().sum::<f64>() / u.len() as f64
}

fn clamp(v: f64, scale: RatingScale) -> f64 {
    v.max(scale.min()).min(scale.max())
}

/// (Σ (u_j - u_i) over users with both, number of such users)
fn co_diff(data: &RawData, j: u32, i: u32, filter: impl Fn(&Ratings, u32) -> bool) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for u in data.users.values() {
        if let (Some(uj), Some(ui)) = (u.get(&j), u.get(&i)) {
            if filter(u, j) && filter(u, i) {
                sum += uj - ui;
                n += 1;
            }
        }
    }
    (sum, n)
}

pub fn deviation(data: &RawData, j: u32, i: u32) -> (f64, usize) {
    let (sum, n) = co_diff(data, j, i, |_, _| true);
    (if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

fn likes(u: &Ratings, item: u32) -> bool {
    u[&item] > mean(u)
}

fn dislikes(u: &Ratings, item: u32) -> bool {
    u[&item] < mean(u)
}

pub fn like_deviation(data: &RawData, j: u32, i: u32) -> (f64, usize) {
    let (sum, n) = co_diff(data, j, i, likes);
    (if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

pub fn dislike_deviation(data: &RawData, j: u32, i: u32) -> (f64, usize) {
    let (sum, n) = co_diff(data, j, i, dislikes);
    (if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

pub fn per_user_average(u: &Ratings) -> f64 {
    mean(u)
}

pub fn bias_from_mean(data: &RawData, u: &Ratings, j: u32) -> f64 {
    let raters: Vec<&Ratings> = data.users.values().filter(|v| v.contains_key(&j)).collect();
    if raters.is_empty() {
        return mean(u);
    }
    let offset: f64 = raters.iter().map(|v| v[&j] - mean(v)).sum();
    mean(u) + offset / raters.len() as f64
}

pub fn slope_one(data: &RawData, u: &Ratings, j: u32) -> f64 {
    let devs: Vec<f64> = u
        .keys()
        .filter(|&&i| i != j)
        .filter_map(|&i| {
            let (dev, n) = deviation(data, j, i);
            (n > 0).then_some(dev)
        })
        .collect();
    if devs.is_empty() {
        mean(u)
    } else {
        mean(u) + devs.iter().sum::<f64>() / devs.len() as f64
    }
}

/// The average of the per-item predictions `dev_{j,i} + u_i` over the
/// relevant items, before simplification to `ū + mean dev`.
pub fn slope_one_unsimplified(data: &RawData, u: &Ratings, j: u32) -> Option<f64> {
    let preds: Vec<f64> = u
        .iter()
        .filter(|(&i, _)| i != j)
        .filter_map(|(&i, &ui)| {
            let (dev, n) = deviation(data, j, i);
            (n > 0).then_some(dev + ui)
        })
        .collect();
    (!preds.is_empty()).then(|| preds.iter().sum::<f64>() / preds.len() as f64)
}

pub fn weighted_slope_one(data: &RawData, u: &Ratings, j: u32) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&i, &ui) in u {
        if i == j {
            continue;
        }
        let (dev, c) = deviation(data, j, i);
        num += (dev + ui) * c as f64;
        den += c as f64;
    }
    if den == 0.0 {
        mean(u)
    } else {
        num / den
    }
}

pub fn bipolar_slope_one(data: &RawData, u: &Ratings, j: u32) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&i, &ui) in u {
        if i == j {
            continue;
        }
        let (dev, c) = if likes(u, i) {
            like_deviation(data, j, i)
        } else if dislikes(u, i) {
            dislike_deviation(data, j, i)
        } else {
            continue;
        };
        num += (dev + ui) * c as f64;
        den += c as f64;
    }
    if den == 0.0 {
        weighted_slope_one(data, u, j)
    } else {
        num / den
    }
}

/// Adjusted cosine similarity between items `i` and `j`.
pub fn adjusted_cosine(data: &RawData, i: u32, j: u32) -> f64 {
    let mut cross = 0.0;
    let mut sq_i = 0.0;
    let mut sq_j = 0.0;
    for u in data.users.values() {
        if let (Some(ui), Some(uj)) = (u.get(&i), u.get(&j)) {
            let m = mean(u);
            cross += (ui - m) * (uj - m);
            sq_i += (ui - m) * (ui - m);
            sq_j += (uj - m) * (uj - m);
        }
    }
    let norm = (sq_i * sq_j).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        cross / norm
    }
}

/// Two-pass least squares for `u_i ≈ α u_j + β` over co-raters.
pub fn regression(data: &RawData, i: u32, j: u32) -> (f64, f64) {
    let points: Vec<(f64, f64)> =
        data.users.values().filter_map(|u| Some((*u.get(&j)?, *u.get(&i)?))).collect();
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let x_bar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_bar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, y_bar);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - x_bar) * (p.1 - y_bar)).sum();
    let alpha = sxy / sxx;
    (alpha, y_bar - alpha * x_bar)
}

pub fn adjusted_cosine_predict(data: &RawData, u: &Ratings, i: u32) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&j, &uj) in u {
        if j == i {
            continue;
        }
        let sim = adjusted_cosine(data, i, j).abs();
        if sim == 0.0 {
            continue;
        }
        let (alpha, beta) = regression(data, i, j);
        num += sim * (alpha * uj + beta);
        den += sim;
    }
    if den == 0.0 {
        bias_from_mean(data, u, i)
    } else {
        num / den
    }
}

pub fn pearson_corr(u: &Ratings, w: &Ratings) -> f64 {
    let (mu, mw) = (mean(u), mean(w));
    let common: Vec<u32> = u.keys().filter(|i| w.contains_key(i)).copied().collect();
    let cross: f64 = common.iter().map(|i| (u[i] - mu) * (w[i] - mw)).sum();
    let su: f64 = common.iter().map(|i| (u[i] - mu).powi(2)).sum();
    let sw: f64 = common.iter().map(|i| (w[i] - mw).powi(2)).sum();
    let norm = (su * sw).sqrt();
    if common.is_empty() || norm == 0.0 {
        0.0
    } else {
        cross / norm
    }
}

pub fn pearson_predict(data: &RawData, u: &Ratings, i: u32, rho: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for v in data.users.values().filter(|v| v.contains_key(&i)) {
        let c = pearson_corr(u, v);
        let gamma = c * c.abs().powf(rho - 1.0);
        num += gamma * (v[&i] - mean(v));
        den += gamma.abs();
    }
    if den == 0.0 {
        mean(u)
    } else {
        mean(u) + num / den
    }
}

/// Clamped brute-force prediction of item `j` for the query `u`.
pub fn predict(scheme: SchemeId, data: &RawData, u: &Ratings, j: u32, scale: RatingScale) -> f64 {
    let raw = match scheme {
        SchemeId::PerUserAverage => per_user_average(u),
        SchemeId::BiasFromMean => bias_from_mean(data, u, j),
        SchemeId::AdjustedCosineItem => adjusted_cosine_predict(data, u, j),
        SchemeId::Pearson => pearson_predict(data, u, j, 2.5),
        SchemeId::SlopeOne => slope_one(data, u, j),
        SchemeId::WeightedSlopeOne => weighted_slope_one(data, u, j),
        SchemeId::BipolarSlopeOne => bipolar_slope_one(data, u, j),
    };
    clamp(raw, scale)
}

/// Brute-force All-But-One MAE of `scheme` trained on `train`, skipping
/// single-rating test users.
pub fn all_but_one_mae(scheme: SchemeId, train: &RawData, test: &[Ratings], scale: RatingScale) -> f64 {
    let mut total = 0.0;
    let mut users = 0;
    for u in test.iter().filter(|u| u.len() >= 2) {
        let mut err = 0.0;
        for (&i, &ui) in u {
            let mut hidden = u.clone();
            hidden.remove(&i);
            err += (predict(scheme, train, &hidden, i, scale) - ui).abs();
        }
        total += err / u.len() as f64;
        users += 1;
    }
    total / users as f64
}
