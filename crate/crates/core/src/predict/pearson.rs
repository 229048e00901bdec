//! Memory-based user-user scheme: Pearson correlation with case amplification.

use crate::error::{Error, Result};
use crate::types::{Dataset, Evaluation, ItemId, Prediction};

use super::{assemble, Estimate, SchemeId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PearsonParams {
    rho: f64,
}

impl PearsonParams {
    pub const DEFAULT_RHO: f64 = 2.5;

    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(PearsonParams { rho })
        } else {
            Err(Error::InvalidParameter(format!("case amplification power must be positive, got {rho}")))
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Default for PearsonParams {
    fn default() -> Self {
        PearsonParams { rho: Self::DEFAULT_RHO }
    }
}

/// Correlation of two users over their co-rated items, centered on each
/// user's full-evaluation mean. Zero when there is no overlap or either side
/// has no spread on it.
pub fn pearson_correlation(u: &Evaluation, w: &Evaluation) -> f64 {
    let (u_mean, w_mean) = (u.mean(), w.mean());
    let (mut cross, mut u_sq, mut w_sq) = (0.0, 0.0, 0.0);
    let (a, b) = (u.ratings(), w.ratings());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                let du = a[x].1 - u_mean;
                let dw = b[y].1 - w_mean;
                cross += du * dw;
                u_sq += du * du;
                w_sq += dw * dw;
                x += 1;
                y += 1;
            }
        }
    }
    let norm = (u_sq * w_sq).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        (cross / norm).clamp(-1.0, 1.0)
    }
}

/// `corr * |corr|^(rho - 1)`: keeps the sign, shrinks weak correlations.
pub fn case_amplify(corr: f64, rho: f64) -> f64 {
    corr * corr.abs().powf(rho - 1.0)
}

/// `ū` plus the amplified-correlation-weighted mean offset of every rater of
/// the item from their own average.
pub fn predict_pearson(
    u: &Evaluation,
    dataset: &Dataset,
    params: PearsonParams,
    items: &[ItemId],
) -> Result<Prediction> {
    assemble(u, SchemeId::Pearson, dataset.scale(), items, |item| {
        let mut weighted = 0.0;
        let mut weight = 0.0;
        for v in dataset.evaluations_with(item) {
            let gamma = case_amplify(pearson_correlation(u, v), params.rho);
            if gamma != 0.0 {
                let rating = v.get(item).expect("indexed rater rated the item");
                weighted += gamma * (rating - v.mean());
                weight += gamma.abs();
            }
        }
        if weight == 0.0 {
            Estimate::fallback(u.mean())
        } else {
            Estimate::direct(u.mean() + weighted / weight)
        }
    })
}
