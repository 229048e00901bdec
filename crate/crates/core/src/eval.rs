//! All-But-One MAE evaluation: rating-volume train/test split, hide-one
//! prediction over the test users, and multi-scheme comparison reports.

use std::fmt::Write as _;
use std::io;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::predict::{predict, ModelBundle, PearsonParams, SchemeId};
use crate::types::{Dataset, Evaluation, ItemId, RatingScale, UserId};

/// Deepest fallback level a scheme can report.
pub const MAX_FALLBACK_DEPTH: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionOrder {
    /// Ascending user id, i.e. first-appearance order in the corpus.
    DatasetOrder,
    /// Users shuffled with a seeded generator.
    Shuffled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_ratings: usize,
    /// `None` puts every remaining user into the test set.
    pub test_ratings: Option<usize>,
    pub order: SelectionOrder,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_ratings: usize) -> Self {
        SplitSpec { train_ratings, test_ratings: None, order: SelectionOrder::Shuffled, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Vec<Evaluation>,
    /// False when the corpus ran out before the test target was reached.
    pub test_target_met: bool,
}

impl Split {
    pub fn test_ratings(&self) -> usize {
        self.test.iter().map(Evaluation::len).sum()
    }
}

/// Moves whole evaluations into the training set until it holds at least
/// `train_ratings` ratings, then into the test set until the test target is
/// reached or the corpus is exhausted.
pub fn split(corpus: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let available = corpus.num_ratings();
    if available < spec.train_ratings {
        return Err(Error::InsufficientRatings { required: spec.train_ratings, available });
    }
    let mut order: Vec<UserId> = corpus.evaluations().map(Evaluation::user).collect();
    if spec.order == SelectionOrder::Shuffled {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    }

    let mut users = order.into_iter().map(|u| corpus.evaluation(u).expect("listed user"));
    let mut train = Vec::new();
    let mut train_total = 0;
    while train_total < spec.train_ratings {
        let evaluation = users.next().expect("enough ratings checked above");
        train_total += evaluation.len();
        train.push(evaluation.clone());
    }

    let mut test = Vec::new();
    let mut test_total = 0;
    let mut test_target_met = true;
    match spec.test_ratings {
        None => test.extend(users.cloned()),
        Some(target) => {
            while test_total < target {
                match users.next() {
                    Some(evaluation) => {
                        test_total += evaluation.len();
                        test.push(evaluation.clone());
                    }
                    None => {
                        log::warn!(
                            "test target of {target} ratings not reachable; using all {test_total} remaining"
                        );
                        test_target_met = false;
                        break;
                    }
                }
            }
        }
    }
    Ok(Split { train: Dataset::from_evaluations(corpus.scale(), train)?, test, test_target_met })
}

/// Anything that can predict one hidden rating from the rest of an evaluation.
pub trait HiddenRatingPredictor: Sync {
    /// Returns the prediction and its fallback depth.
    fn predict_hidden(&self, query: &Evaluation, item: ItemId) -> Result<(f64, u8)>;
}

/// Adapts a trained scheme to the harness.
pub struct SchemePredictor<'a> {
    pub scheme: SchemeId,
    pub model: ModelBundle<'a>,
}

impl HiddenRatingPredictor for SchemePredictor<'_> {
    fn predict_hidden(&self, query: &Evaluation, item: ItemId) -> Result<(f64, u8)> {
        let prediction = predict(self.scheme, query, &self.model, &[item])?;
        let entry = prediction.get(item).expect("requested item is predicted");
        Ok((entry.value, entry.provenance.fallback_depth))
    }
}

impl<F> HiddenRatingPredictor for F
where
    F: Fn(&Evaluation, ItemId) -> f64 + Sync,
{
    fn predict_hidden(&self, query: &Evaluation, item: ItemId) -> Result<(f64, u8)> {
        Ok((self(query, item), 0))
    }
}

/// Error statistics for one predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct MaeEntry {
    pub raw_mae: f64,
    pub normalized_mae: f64,
    pub divisor: f64,
    /// Number of predictions that ended at each fallback depth.
    pub fallback_counts: [usize; MAX_FALLBACK_DEPTH + 1],
    pub users_scored: usize,
    /// Test users with a single rating, which leaves nothing to predict from.
    pub users_skipped: usize,
    pub predictions: usize,
}

/// All-But-One MAE: every rating of every test user is hidden in turn and
/// predicted from the user's remaining ratings. Absolute errors are averaged
/// per user first and then across users. Predictions are clamped to `scale`.
pub fn all_but_one_mae(
    predictor: &dyn HiddenRatingPredictor,
    test: &[Evaluation],
    scale: RatingScale,
    divisor: f64,
) -> Result<MaeEntry> {
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(Error::InvalidParameter(format!("divisor must be positive, got {divisor}")));
    }
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }

    struct UserScore {
        mean_error: f64,
        fallbacks: [usize; MAX_FALLBACK_DEPTH + 1],
    }

    let scores: Vec<Option<UserScore>> = test
        .par_iter()
        .map(|u| -> Result<Option<UserScore>> {
            if u.len() < 2 {
                return Ok(None);
            }
            let mut error = 0.0;
            let mut fallbacks = [0; MAX_FALLBACK_DEPTH + 1];
            for &(item, truth) in u.ratings() {
                let hidden = u.without(item).expect("at least one rating remains");
                let (value, depth) = predictor.predict_hidden(&hidden, item)?;
                error += (scale.clamp(value)? - truth).abs();
                fallbacks[usize::from(depth).min(MAX_FALLBACK_DEPTH)] += 1;
            }
            Ok(Some(UserScore { mean_error: error / u.len() as f64, fallbacks }))
        })
        .collect::<Result<_>>()?;

    let mut total = 0.0;
    let mut fallback_counts = [0; MAX_FALLBACK_DEPTH + 1];
    let mut users_scored = 0;
    for score in scores.iter().flatten() {
        total += score.mean_error;
        for (sum, n) in fallback_counts.iter_mut().zip(score.fallbacks) {
            *sum += n;
        }
        users_scored += 1;
    }
    if users_scored == 0 {
        return Err(Error::EmptyTestSet);
    }
    let raw_mae = total / users_scored as f64;
    Ok(MaeEntry {
        raw_mae,
        normalized_mae: raw_mae / divisor,
        divisor,
        fallback_counts,
        users_scored,
        users_skipped: test.len() - users_scored,
        predictions: fallback_counts.iter().sum(),
    })
}

/// Split sizes and seed recorded alongside a report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitSummary {
    pub seed: u64,
    pub train_users: usize,
    pub train_ratings: usize,
    pub test_users: usize,
    pub test_ratings: usize,
}

impl SplitSummary {
    pub fn of(train: &Dataset, test: &[Evaluation], seed: u64) -> Self {
        SplitSummary {
            seed,
            train_users: train.num_users(),
            train_ratings: train.num_ratings(),
            test_users: test.len(),
            test_ratings: test.iter().map(Evaluation::len).sum(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    /// The error message when the scheme could not be evaluated.
    pub result: std::result::Result<MaeEntry, String>,
}

#[derive(Clone, Debug)]
pub struct MaeReport {
    pub outcomes: Vec<SchemeOutcome>,
    pub split: SplitSummary,
}

impl MaeReport {
    pub fn entry(&self, scheme: SchemeId) -> Option<&MaeEntry> {
        self.outcomes.iter().find(|o| o.scheme == scheme).and_then(|o| o.result.as_ref().ok())
    }

    /// Fixed-width table, one row per scheme in report order.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let s = &self.split;
        let _ = writeln!(
            out,
            "All-But-One MAE  (train {} users / {} ratings, test {} users / {} ratings, seed {})",
            s.train_users, s.train_ratings, s.test_users, s.test_ratings, s.seed
        );
        let _ = writeln!(
            out,
            "{:<28} {:>10} {:>10} {:>9} {:>9} {:>9}",
            "Scheme", "MAE", "Norm. MAE", "fb0", "fb1", "fb2"
        );
        for outcome in &self.outcomes {
            match &outcome.result {
                Ok(e) => {
                    let _ = writeln!(
                        out,
                        "{:<28} {:>10.4} {:>10.4} {:>9} {:>9} {:>9}",
                        outcome.scheme.label(),
                        e.raw_mae,
                        e.normalized_mae,
                        e.fallback_counts[0],
                        e.fallback_counts[1],
                        e.fallback_counts[2]
                    );
                }
                Err(msg) => {
                    let _ = writeln!(out, "{:<28} FAILED: {msg}", outcome.scheme.label());
                }
            }
        }
        out
    }

    /// Comma-separated report with a header row.
    pub fn write_delimited<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "scheme,raw_mae,normalized_mae,divisor,fallback_0,fallback_1,fallback_2,users_scored,users_skipped,seed,train_users,train_ratings,test_users,test_ratings,error"
        )?;
        let s = &self.split;
        for outcome in &self.outcomes {
            match &outcome.result {
                Ok(e) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    outcome.scheme,
                    e.raw_mae,
                    e.normalized_mae,
                    e.divisor,
                    e.fallback_counts[0],
                    e.fallback_counts[1],
                    e.fallback_counts[2],
                    e.users_scored,
                    e.users_skipped,
                    s.seed,
                    s.train_users,
                    s.train_ratings,
                    s.test_users,
                    s.test_ratings
                )?,
                Err(msg) => writeln!(
                    out,
                    "{},,,,,,,,,{},{},{},{},{},\"{}\"",
                    outcome.scheme,
                    s.seed,
                    s.train_users,
                    s.train_ratings,
                    s.test_users,
                    s.test_ratings,
                    msg.replace('"', "'")
                )?,
            }
        }
        Ok(())
    }
}

/// Trains every component the listed schemes need once on `train`, then
/// scores each scheme on `test`. A failing scheme is recorded and the rest
/// still run.
pub fn compare_schemes(
    schemes: &[SchemeId],
    train: &Dataset,
    test: &[Evaluation],
    divisor: f64,
    pearson: PearsonParams,
    seed: u64,
) -> Result<MaeReport> {
    let mut model = Model::train(train.clone());
    model.set_pearson(pearson);
    if schemes.contains(&SchemeId::AdjustedCosineItem) {
        model.fit_item_model();
    }
    let mut ordered: Vec<SchemeId> = SchemeId::ALL.into_iter().filter(|s| schemes.contains(s)).collect();
    ordered.dedup();

    let outcomes = ordered
        .into_iter()
        .map(|scheme| {
            let predictor = SchemePredictor { scheme, model: model.bundle() };
            let result = all_but_one_mae(&predictor, test, train.scale(), divisor).map_err(|e| e.to_string());
            if let Err(msg) = &result {
                log::error!("{scheme}: {msg}");
            }
            SchemeOutcome { scheme, result }
        })
        .collect();
    Ok(MaeReport { outcomes, split: SplitSummary::of(train, test, seed) })
}
