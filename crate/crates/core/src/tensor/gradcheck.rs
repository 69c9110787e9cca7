//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Gradients, ParamStore};

/// Denominator floor for the relative error, so coordinates whose true
/// gradient is zero compare on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Finite-difference step, in `(0, 1e-3]`.
    pub step: f64,
    pub tolerance: f64,
    /// Coordinates sampled per parameter tensor; `None` checks all of them.
    pub max_coords_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            max_coords_per_param: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares `analytic` against `(L(θ+h) − L(θ−h)) / 2h` coordinate by
/// coordinate. Each probed value is restored before moving on, so `store`
/// is unchanged on return.
pub fn finite_diff_check<F>(
    store: &mut ParamStore,
    analytic: &Gradients,
    mut loss: F,
    config: &GradCheckConfig,
) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> f64,
{
    assert!(
        config.step > 0.0 && config.step <= 1e-3,
        "finite-difference step must lie in (0, 1e-3]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut max_err = 0.0f64;
    let mut worst = None;
    let mut checked = 0;
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let n = store.get(id).len();
        let coords: Vec<usize> = match config.max_coords_per_param {
            Some(k) if k < n => sample(&mut rng, n, k).into_vec(),
            _ => (0..n).collect(),
        };
        for c in coords {
            let original = store.get(id).data()[c];
            store.get_mut(id).data_mut()[c] = original + config.step;
            let plus = loss(store);
            store.get_mut(id).data_mut()[c] = original - config.step;
            let minus = loss(store);
            store.get_mut(id).data_mut()[c] = original;

            let numeric = (plus - minus) / (2.0 * config.step);
            let a = analytic.param(id).map_or(0.0, |g| g[c]);
            let err = relative_error(a, numeric);
            checked += 1;
            if err > max_err || worst.is_none() {
                max_err = max_err.max(err);
                worst = Some((store.name(id).to_string(), c));
            }
        }
    }
    GradCheckReport {
        max_rel_error: max_err,
        worst,
        checked,
        tolerance: config.tolerance,
        passed: max_err <= config.tolerance,
    }
}
