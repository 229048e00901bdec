//! Item-based reference scheme: adjusted cosine similarity with per-pair
//! linear regression.

use crate::error::Result;
use crate::types::{Dataset, Evaluation, ItemId, Prediction};

use super::baseline::bias_from_mean;
use super::{assemble, Estimate, SchemeId};

/// Least-squares fit `target ≈ slope * source + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// No co-raters or no spread in the source ratings; the fit is the
    /// target mean (or zero).
    pub degenerate: bool,
}

impl Regression {
    pub fn apply(&self, source_rating: f64) -> f64 {
        self.slope * source_rating + self.intercept
    }
}

/// Similarity and both regression directions for one unordered item pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairFit {
    pub similarity: f64,
    pub support: u32,
    /// Predicts the lower-id item from the higher-id item.
    pub lo_from_hi: Regression,
    /// Predicts the higher-id item from the lower-id item.
    pub hi_from_lo: Regression,
}

/// Running sums over the co-raters of an item pair `(x, y)`.
#[derive(Clone, Copy, Debug, Default)]
struct PairSums {
    n: u32,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
    // centered on each co-rater's own mean
    cxy: f64,
    cxx: f64,
    cyy: f64,
}

impl PairSums {
    fn add(&mut self, x: f64, y: f64, user_mean: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
        let (dx, dy) = (x - user_mean, y - user_mean);
        self.cxy += dx * dy;
        self.cxx += dx * dx;
        self.cyy += dy * dy;
    }

    fn similarity(&self) -> f64 {
        let norm = (self.cxx * self.cyy).sqrt();
        if norm == 0.0 {
            0.0
        } else {
            (self.cxy / norm).clamp(-1.0, 1.0)
        }
    }

    /// Regression of `y` on `x`.
    fn y_from_x(&self) -> Regression {
        solve(self.n, self.sx, self.sxx, self.sy, self.sxy)
    }

    /// Regression of `x` on `y`.
    fn x_from_y(&self) -> Regression {
        solve(self.n, self.sy, self.syy, self.sx, self.sxy)
    }
}

fn solve(n: u32, s_src: f64, s_src_sq: f64, s_tgt: f64, s_cross: f64) -> Regression {
    if n == 0 {
        return Regression { slope: 0.0, intercept: 0.0, degenerate: true };
    }
    let n = n as f64;
    let spread = n * s_src_sq - s_src * s_src;
    // spread is n^2 times the source variance; treat rounding noise as zero
    if spread <= 1e-12 * n * s_src_sq.abs().max(1.0) {
        return Regression { slope: 0.0, intercept: s_tgt / n, degenerate: true };
    }
    let slope = (n * s_cross - s_src * s_tgt) / spread;
    Regression { slope, intercept: (s_tgt - slope * s_src) / n, degenerate: false }
}

/// Least-squares coefficients predicting `target` from `source` over the users
/// who rated both.
pub fn fit_pair_regression(dataset: &Dataset, target: ItemId, source: ItemId) -> Regression {
    let mut sums = PairSums::default();
    if target != source {
        for v in dataset.evaluations_with(target) {
            if let (Some(t), Some(s)) = (v.get(target), v.get(source)) {
                sums.add(s, t, v.mean());
            }
        }
    }
    sums.y_from_x()
}

/// Adjusted cosine similarities and regressions for every co-rated item pair,
/// fitted once from a training set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ItemItemModel {
    // rows[lo] holds (hi, fit) sorted by hi
    rows: Vec<Vec<(ItemId, PairFit)>>,
    num_pairs: usize,
}

impl ItemItemModel {
    pub fn fit(dataset: &Dataset) -> Self {
        let width = dataset.items().last().map_or(0, |i| i.0 as usize + 1);
        let mut rows = vec![Vec::new(); width];
        let mut scratch = vec![PairSums::default(); width];
        let mut touched: Vec<ItemId> = Vec::new();
        let mut num_pairs = 0;

        for lo in dataset.items() {
            for v in dataset.evaluations_with(lo) {
                let ratings = v.ratings();
                let start = ratings.partition_point(|&(i, _)| i <= lo);
                let x = v.get(lo).expect("indexed rater rated the item");
                for &(hi, y) in &ratings[start..] {
                    let sums = &mut scratch[hi.0 as usize];
                    if sums.n == 0 {
                        touched.push(hi);
                    }
                    sums.add(x, y, v.mean());
                }
            }
            touched.sort_unstable();
            let row = &mut rows[lo.0 as usize];
            for &hi in &touched {
                let sums = std::mem::take(&mut scratch[hi.0 as usize]);
                row.push((
                    hi,
                    PairFit {
                        similarity: sums.similarity(),
                        support: sums.n,
                        lo_from_hi: sums.x_from_y(),
                        hi_from_lo: sums.y_from_x(),
                    },
                ));
            }
            num_pairs += touched.len();
            touched.clear();
        }
        ItemItemModel { rows, num_pairs }
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn pair(&self, a: ItemId, b: ItemId) -> Option<&PairFit> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let row = self.rows.get(lo.0 as usize)?;
        row.binary_search_by_key(&hi, |&(i, _)| i).ok().map(|pos| &row[pos].1)
    }

    /// `(sim_{target,source}, regression predicting target from source)`.
    pub fn lookup(&self, target: ItemId, source: ItemId) -> Option<(f64, Regression)> {
        if target == source {
            return None;
        }
        self.pair(target, source).map(|fit| {
            let regression = if target < source { fit.lo_from_hi } else { fit.hi_from_lo };
            (fit.similarity, regression)
        })
    }
}

/// Similarity-weighted average of the per-pair regression predictions from
/// each item the user rated. Falls back to Bias From Mean, then the user mean,
/// when no rated item has non-zero similarity to the target.
pub fn predict_adjusted_cosine(
    u: &Evaluation,
    dataset: &Dataset,
    model: &ItemItemModel,
    items: &[ItemId],
) -> Result<Prediction> {
    assemble(u, SchemeId::AdjustedCosineItem, dataset.scale(), items, |target| {
        let mut weighted = 0.0;
        let mut weight = 0.0;
        for &(source, rating) in u.ratings() {
            if let Some((sim, regression)) = model.lookup(target, source) {
                weighted += sim.abs() * regression.apply(rating);
                weight += sim.abs();
            }
        }
        if weight == 0.0 {
            bias_from_mean(u, dataset, target).deepen()
        } else {
            Estimate::direct(weighted / weight)
        }
    })
}
