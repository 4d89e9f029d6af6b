//! Moment-matching inference. Marginal beta parameters come from the
//! classical beta method of moments on each coordinate; the shared
//! shapes come from matching the exact correlation to the empirical
//! one. That match is one-dimensional: delta2 is slaved to delta1 by
//! the ratio of their upper bounds, delta2 = (delta2_max / delta1_max)
//! * delta1, which keeps both inside their feasible boxes with a single
//! knob.

use crate::bivariate::{
    exact_correlation, validate_shape, BetaMarginal, BivariateBetaParams,
};
use crate::error::Error;
use crate::rng::SampleBatch;

/// Fraction of the feasible delta1 interval held back at both ends so
/// the recovered own shapes stay strictly positive.
const EPS_FRAC: f64 = 1e-3;
/// Absolute tolerance on delta1 for the golden-section refinement.
const DELTA1_TOL: f64 = 1e-4;
const SCAN_POINTS: usize = 32;
const DENSE_POINTS: usize = 1024;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Conditions worth surfacing from a fit; none of them aborts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// The sample correlation was zero or negative; the construction
    /// only reaches positive correlations, so delta1 was pinned to the
    /// bottom of its interval.
    NegativeEmpiricalCorrelation,
    /// The sample correlation exceeds the largest value the fitted
    /// marginals admit; delta1 was pinned to the top of its interval.
    CorrelationClippedToAttainable,
    /// The series behind the final achieved-correlation evaluation hit
    /// its term cap before certifying its tolerance.
    SeriesNotConverged,
    /// The coarse objective scan saw more than one interior local
    /// minimum; the fit fell back to a dense grid before refining.
    ObjectiveMultimodal,
    /// Input values exactly 0 or 1 were nudged into the open interval.
    ValuesNudged,
}

impl FitWarning {
    pub fn label(&self) -> &'static str {
        match self {
            FitWarning::NegativeEmpiricalCorrelation => "NEGATIVE_EMPIRICAL_CORRELATION",
            FitWarning::CorrelationClippedToAttainable => "CORRELATION_CLIPPED_TO_ATTAINABLE",
            FitWarning::SeriesNotConverged => "SERIES_NOT_CONVERGED",
            FitWarning::ObjectiveMultimodal => "OBJECTIVE_MULTIMODAL",
            FitWarning::ValuesNudged => "VALUES_NUDGED",
        }
    }
}

/// Sample moments the fit matched against, all with n-1 denominators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_y: f64,
    pub var_y: f64,
    pub corr: f64,
}

/// A fitted parameter set with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: BivariateBetaParams,
    pub empirical: EmpiricalMoments,
    /// Exact correlation of the fitted parameters.
    pub achieved_corr: f64,
    pub delta1_max: f64,
    pub delta2_max: f64,
    /// Squared gap between achieved and empirical correlation.
    pub objective_value: f64,
    /// Correlation evaluations spent locating delta1.
    pub iterations: u32,
    pub warnings: Vec<FitWarning>,
}

/// Beta parameters with the given mean and variance:
/// p = mean * t, q = (1 - mean) * t with t = mean(1 - mean)/var - 1.
/// The variance of a (0, 1) law with this mean is capped at
/// mean(1 - mean); at or beyond that no beta distribution exists.
pub fn fit_beta_marginal(mean: f64, var: f64) -> Result<BetaMarginal, Error> {
    if !mean.is_finite() || !(0.0 < mean && mean < 1.0) {
        return Err(Error::domain(format!(
            "mean must lie strictly inside (0, 1), got {mean}"
        )));
    }
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::infeasible(format!(
            "variance must be positive, got {var}"
        )));
    }
    let bound = mean * (1.0 - mean);
    if var >= bound {
        return Err(Error::infeasible(format!(
            "variance {var} is not below the bound mean(1-mean) = {bound}; \
             no beta distribution has these moments"
        )));
    }
    let t = bound / var - 1.0;
    BetaMarginal::new(mean * t, (1.0 - mean) * t)
}

/// The correlations reachable by varying the shared shapes under fixed
/// marginals (a1, a2) and (b1, b2), as (r_min, r_max). r_min is 0, the
/// independence limit; r_max is the exact correlation at the top of the
/// slaved delta1 interval. Equal marginals push r_max toward 1; the
/// more the marginals differ, the lower it sits.
pub fn attainable_correlation_range(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
) -> Result<(f64, f64), Error> {
    for (label, v) in [("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2)] {
        validate_shape(label, v)?;
    }
    let delta1_max = a1.min(b1);
    let ratio = a2.min(b2) / delta1_max;
    let r_max = corr_at(a1, a2, b1, b2, ratio, (1.0 - EPS_FRAC) * delta1_max)?.0;
    Ok((0.0, r_max))
}

/// Exact correlation with delta2 slaved to delta1; returns the value
/// and whether its series converged.
fn corr_at(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    ratio: f64,
    delta1: f64,
) -> Result<(f64, bool), Error> {
    let params =
        BivariateBetaParams::from_marginals_and_delta(a1, a2, b1, b2, delta1, ratio * delta1)?;
    let r = exact_correlation(&params)?;
    Ok((r.value, r.converged))
}

/// Fit the six-parameter model to paired data by moment matching.
///
/// The marginals are fitted first (beta method of moments, n-1
/// denominators); delta1_max = min(a1, b1) and delta2_max = min(a2, b2)
/// then bound the shared shapes, and delta1 is chosen to minimize
/// (exact correlation - sample correlation)^2 over
/// [EPS * delta1_max, (1 - EPS) * delta1_max] with delta2 slaved. A
/// 32-point scan brackets the minimum (warning and dense-grid fallback
/// if it looks multimodal), golden-section refines it to 1e-4 in
/// delta1, and the own shapes are recovered as alpha = marginal -
/// delta. Out-of-range sample correlations pin delta1 to the matching
/// end of its interval with a warning instead of failing.
pub fn fit(data: &SampleBatch) -> Result<FitResult, Error> {
    if data.n < 10 {
        return Err(Error::domain(format!(
            "fitting needs at least 10 pairs, got {}",
            data.n
        )));
    }
    let mut warnings = Vec::new();
    let mut xs = data.xs.clone();
    let mut ys = data.ys.clone();
    let mut nudged = false;
    for v in xs.iter_mut().chain(ys.iter_mut()) {
        if !v.is_finite() || *v < 0.0 || *v > 1.0 {
            return Err(Error::domain(format!(
                "data values must lie in [0, 1], got {v}"
            )));
        }
        if *v == 0.0 {
            *v = 1e-12;
            nudged = true;
        } else if *v == 1.0 {
            *v = 1.0 - 1e-12;
            nudged = true;
        }
    }
    if nudged {
        warnings.push(FitWarning::ValuesNudged);
    }

    let empirical = sample_moments(&xs, &ys);
    if empirical.var_x <= 0.0 || empirical.var_y <= 0.0 {
        return Err(Error::infeasible(
            "a data column has zero variance; no beta marginal fits it".to_string(),
        ));
    }
    let mx = fit_beta_marginal(empirical.mean_x, empirical.var_x)?;
    let my = fit_beta_marginal(empirical.mean_y, empirical.var_y)?;
    let (a1, a2) = (mx.p(), mx.q());
    let (b1, b2) = (my.p(), my.q());

    let delta1_max = a1.min(b1);
    let delta2_max = a2.min(b2);
    let ratio = delta2_max / delta1_max;
    let lo = EPS_FRAC * delta1_max;
    let hi = (1.0 - EPS_FRAC) * delta1_max;
    let r_hat = empirical.corr;

    let iterations = std::cell::Cell::new(0u32);
    let mut eval = |delta1: f64| -> Result<f64, Error> {
        iterations.set(iterations.get() + 1);
        let (r, _) = corr_at(a1, a2, b1, b2, ratio, delta1)?;
        Ok((r - r_hat) * (r - r_hat))
    };

    let delta1 = if r_hat <= 0.0 {
        warnings.push(FitWarning::NegativeEmpiricalCorrelation);
        lo
    } else {
        let r_max = corr_at(a1, a2, b1, b2, ratio, hi)?.0;
        iterations.set(iterations.get() + 1);
        if r_hat >= r_max {
            warnings.push(FitWarning::CorrelationClippedToAttainable);
            hi
        } else {
            let (bracket_lo, bracket_hi) = {
                let (grid, objs) = scan(lo, hi, SCAN_POINTS, &mut eval)?;
                let interior_minima = objs
                    .windows(3)
                    .filter(|w| w[1] < w[0] && w[1] < w[2])
                    .count();
                if interior_minima > 1 {
                    warnings.push(FitWarning::ObjectiveMultimodal);
                    let (grid, objs) = scan(lo, hi, DENSE_POINTS, &mut eval)?;
                    bracket_around_min(&grid, &objs)
                } else {
                    bracket_around_min(&grid, &objs)
                }
            };
            golden_section(bracket_lo, bracket_hi, &mut eval)?
        }
    };

    let delta2 = ratio * delta1;
    let params = BivariateBetaParams::from_marginals_and_delta(a1, a2, b1, b2, delta1, delta2)?;
    let achieved = exact_correlation(&params)?;
    if !achieved.converged {
        warnings.push(FitWarning::SeriesNotConverged);
    }
    Ok(FitResult {
        params,
        empirical,
        achieved_corr: achieved.value,
        delta1_max,
        delta2_max,
        objective_value: (achieved.value - r_hat) * (achieved.value - r_hat),
        iterations: iterations.get(),
        warnings,
    })
}

fn sample_moments(xs: &[f64], ys: &[f64]) -> EmpiricalMoments {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
        cov += (x - mean_x) * (y - mean_y);
    }
    var_x /= n - 1.0;
    var_y /= n - 1.0;
    cov /= n - 1.0;
    let corr = if var_x > 0.0 && var_y > 0.0 {
        cov / (var_x * var_y).sqrt()
    } else {
        0.0
    };
    EmpiricalMoments {
        mean_x,
        var_x,
        mean_y,
        var_y,
        corr,
    }
}

fn scan(
    lo: f64,
    hi: f64,
    points: usize,
    eval: &mut impl FnMut(f64) -> Result<f64, Error>,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let mut grid = Vec::with_capacity(points);
    let mut objs = Vec::with_capacity(points);
    for i in 0..points {
        let d = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        grid.push(d);
        objs.push(eval(d)?);
    }
    Ok((grid, objs))
}

fn bracket_around_min(grid: &[f64], objs: &[f64]) -> (f64, f64) {
    let best = objs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    (lo, hi)
}

fn golden_section(
    mut a: f64,
    mut b: f64,
    eval: &mut impl FnMut(f64) -> Result<f64, Error>,
) -> Result<f64, Error> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > DELTA1_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
