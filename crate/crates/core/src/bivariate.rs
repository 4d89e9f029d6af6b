//! Parameter container, beta marginals, exact product moments, exact
//! covariance and correlation for the six-parameter bivariate beta
//! distribution, plus the closed-form covariance approximation of
//! Magnussen that motivates the exact treatment.
//!
//! The distribution is built from six independent unit-scale gamma
//! variates A1, A2, B1, B2, D1, D2 with shapes (alpha1, alpha2, beta1,
//! beta2, delta1, delta2):
//!
//!   X = (A1 + D1) / (A1 + A2 + D1 + D2)
//!   Y = (B1 + D1) / (B1 + B2 + D1 + D2)
//!
//! Marginally X ~ Beta(a1, a2) and Y ~ Beta(b1, b2) with a1 = alpha1 +
//! delta1 and so on; sharing D1, D2 makes the pair positively
//! correlated. All moment work routes through the latent decomposition
//! X = X'W1 + (1 - X')W3, Y = Y'W2 + (1 - Y')W3 where the W's are
//! independent betas and (X', Y') is an Olkin-Liu correlated beta pair
//! independent of them.

use crate::accum::NeumaierSum;
use crate::error::Error;
use crate::rng::params_digest;
use crate::special::{self, SeriesEval};

/// Upper bound on accepted shape parameters. Larger shapes make the
/// moment series crawl while the distribution degenerates to a point
/// mass, so they are rejected rather than served badly.
pub const MAX_SHAPE: f64 = 1e4;

/// Relative tolerance for the moment series backing `product_moment`
/// and `exact_covariance`. Much tighter than the accuracy those results
/// claim: the alternating reduction of mixed weight expectations
/// amplifies absolute series error by roughly 3^(k+l), and the
/// covariance subtracts nearly equal quantities near independence.
pub(crate) const INNER_REL_TOL: f64 = 1e-14;

pub(crate) fn validate_shape(label: &str, v: f64) -> Result<(), Error> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::domain(format!(
            "{label} must be positive and finite, got {v}"
        )));
    }
    if v > MAX_SHAPE {
        return Err(Error::domain(format!(
            "{label} = {v} exceeds the supported maximum {MAX_SHAPE}"
        )));
    }
    Ok(())
}

/// The six gamma shape parameters of the bivariate construction.
///
/// Field names follow the generating gammas: `alpha*` feed only X,
/// `beta*` feed only Y, `delta*` are shared by both. The marginal beta
/// parameters are the sums `a1 = alpha1 + delta1` etc., available
/// through accessors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateBetaParams {
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    delta1: f64,
    delta2: f64,
}

impl BivariateBetaParams {
    /// All six shapes must be positive, finite, and at most [`MAX_SHAPE`].
    pub fn new(
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
        delta1: f64,
        delta2: f64,
    ) -> Result<Self, Error> {
        validate_shape("alpha1", alpha1)?;
        validate_shape("alpha2", alpha2)?;
        validate_shape("beta1", beta1)?;
        validate_shape("beta2", beta2)?;
        validate_shape("delta1", delta1)?;
        validate_shape("delta2", delta2)?;
        Ok(BivariateBetaParams {
            alpha1,
            alpha2,
            beta1,
            beta2,
            delta1,
            delta2,
        })
    }

    /// Build from the marginal beta parameters (a1, a2) for X and
    /// (b1, b2) for Y plus the shared shapes. Requires delta1 <
    /// min(a1, b1) and delta2 < min(a2, b2) so the leftover own shapes
    /// stay positive.
    pub fn from_marginals_and_delta(
        a1: f64,
        a2: f64,
        b1: f64,
        b2: f64,
        delta1: f64,
        delta2: f64,
    ) -> Result<Self, Error> {
        for (label, v) in [("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2)] {
            validate_shape(label, v)?;
        }
        if !(delta1 > 0.0 && delta1 < a1.min(b1)) {
            return Err(Error::domain(format!(
                "delta1 = {delta1} must lie strictly between 0 and min(a1, b1) = {}",
                a1.min(b1)
            )));
        }
        if !(delta2 > 0.0 && delta2 < a2.min(b2)) {
            return Err(Error::domain(format!(
                "delta2 = {delta2} must lie strictly between 0 and min(a2, b2) = {}",
                a2.min(b2)
            )));
        }
        Self::new(a1 - delta1, a2 - delta2, b1 - delta1, b2 - delta2, delta1, delta2)
    }

    /// Assembly point for reductions whose shapes are sums of already
    /// validated components; skips the MAX_SHAPE re-check so a valid
    /// high-dimensional model never fails to reduce.
    pub(crate) fn from_parts(
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
        delta1: f64,
        delta2: f64,
    ) -> Self {
        debug_assert!([alpha1, alpha2, beta1, beta2, delta1, delta2]
            .iter()
            .all(|s| s.is_finite() && *s > 0.0));
        BivariateBetaParams {
            alpha1,
            alpha2,
            beta1,
            beta2,
            delta1,
            delta2,
        }
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
    pub fn delta1(&self) -> f64 {
        self.delta1
    }
    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    /// First shape of the X marginal: a1 = alpha1 + delta1.
    pub fn a1(&self) -> f64 {
        self.alpha1 + self.delta1
    }
    pub fn a2(&self) -> f64 {
        self.alpha2 + self.delta2
    }
    pub fn b1(&self) -> f64 {
        self.beta1 + self.delta1
    }
    pub fn b2(&self) -> f64 {
        self.beta2 + self.delta2
    }

    /// Shape sum of the X-only gammas; W1 ~ Beta(alpha1, alpha2) has
    /// total upsilon1 and the weight X' ~ Beta(upsilon1, upsilon3).
    pub fn upsilon1(&self) -> f64 {
        self.alpha1 + self.alpha2
    }
    pub fn upsilon2(&self) -> f64 {
        self.beta1 + self.beta2
    }
    pub fn upsilon3(&self) -> f64 {
        self.delta1 + self.delta2
    }

    pub fn marginal_x(&self) -> BetaMarginal {
        BetaMarginal::unchecked(self.a1(), self.a2())
    }

    pub fn marginal_y(&self) -> BetaMarginal {
        BetaMarginal::unchecked(self.b1(), self.b2())
    }

    /// Opaque identifier of the parameter values, stamped on sample
    /// batches so downstream tooling can detect mismatched inputs.
    pub fn digest(&self) -> u64 {
        params_digest(
            1,
            &[
                self.alpha1,
                self.alpha2,
                self.beta1,
                self.beta2,
                self.delta1,
                self.delta2,
            ],
        )
    }
}

/// A beta distribution on (0, 1) with shapes (p, q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMarginal {
    p: f64,
    q: f64,
}

impl BetaMarginal {
    pub fn new(p: f64, q: f64) -> Result<Self, Error> {
        validate_shape("p", p)?;
        validate_shape("q", q)?;
        Ok(BetaMarginal { p, q })
    }

    pub(crate) fn unchecked(p: f64, q: f64) -> Self {
        debug_assert!(p > 0.0 && q > 0.0);
        BetaMarginal { p, q }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mean(&self) -> f64 {
        self.p / (self.p + self.q)
    }

    pub fn var(&self) -> f64 {
        let s = self.p + self.q;
        self.p * self.q / (s * s * (s + 1.0))
    }

    /// E(W^order) = prod_{i<order} (p + i) / (p + q + i); 1 at order 0.
    pub fn raw_moment(&self, order: u32) -> f64 {
        let mut m = 1.0;
        for i in 0..order {
            m *= (self.p + i as f64) / (self.p + self.q + i as f64);
        }
        m
    }
}

/// A moment (or function of moments) whose value came through a
/// truncated series. `converged` is false when any contributing series
/// hit its term cap before certifying the requested tolerance; the
/// value is still the best available estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentValue {
    pub value: f64,
    pub converged: bool,
}

/// Exact product moment E((X')^k (Y')^l) of the Olkin-Liu correlated
/// beta pair with shape sums (upsilon1, upsilon2, upsilon3). The
/// defining expression is a gamma-ratio prefactor times
/// 3F2(upsilon1 + k, upsilon2 + l, U; U + k, U + l; 1) with
/// U = upsilon1 + upsilon2 + upsilon3, whose convergence margin is
/// upsilon3: hopeless near independence. A Thomae two-term relation
/// turns it into an equivalent series with margin U instead,
///
///   E((X')^k (Y')^l) = (u1)_k (u2)_l / ((u1+u3)_k (u2+u3)_l)
///                      * 3F2(k, l, u3; u1+u3+k, u2+u3+l; 1),
///
/// which is what gets evaluated: all terms positive, fast for every
/// valid shape combination, and exact at k = 0 or l = 0 where the
/// series terminates at 1 and the prefactor is the corresponding beta
/// raw moment.
pub fn olkin_liu_product_moment(
    upsilon1: f64,
    upsilon2: f64,
    upsilon3: f64,
    k: u32,
    l: u32,
    rel_tol: f64,
) -> Result<SeriesEval, Error> {
    validate_shape("upsilon1", upsilon1)?;
    validate_shape("upsilon2", upsilon2)?;
    validate_shape("upsilon3", upsilon3)?;
    let mut pre = 1.0;
    for i in 0..k {
        pre *= (upsilon1 + i as f64) / (upsilon1 + upsilon3 + i as f64);
    }
    for j in 0..l {
        pre *= (upsilon2 + j as f64) / (upsilon2 + upsilon3 + j as f64);
    }
    let series = special::hyp3f2_unit(
        k as f64,
        l as f64,
        upsilon3,
        upsilon1 + upsilon3 + k as f64,
        upsilon2 + upsilon3 + l as f64,
        rel_tol,
    )?;
    Ok(series.scaled(pre))
}

fn binomial(n: u32, r: u32) -> f64 {
    let r = r.min(n - r.min(n));
    let mut c = 1.0;
    for t in 1..=r {
        c = c * (n - r + t) as f64 / t as f64;
    }
    c
}

fn raw_moments(p: f64, q: f64, up_to: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(up_to as usize + 1);
    let mut m = 1.0;
    out.push(m);
    for i in 0..up_to {
        m *= (p + i as f64) / (p + q + i as f64);
        out.push(m);
    }
    out
}

/// Exact product moment E(X^k Y^l).
///
/// Expands (X'W1 + (1 - X')W3)^k (Y'W2 + (1 - Y')W3)^l binomially; the
/// mixed weight expectations E((X')^i (1-X')^(k-i) (Y')^j (1-Y')^(l-j))
/// reduce, by a second alternating binomial expansion, to the plain
/// Olkin-Liu product moments, one series each, evaluated once per
/// (order pair) and reused. Alternation costs roughly 3^(k+l) in error
/// amplification, so relative accuracy degrades for large k + l; orders
/// with k + l <= 8 stay comfortably inside 1e-10.
pub fn product_moment(params: &BivariateBetaParams, k: u32, l: u32) -> Result<MomentValue, Error> {
    let u1 = params.upsilon1();
    let u2 = params.upsilon2();
    let u3 = params.upsilon3();

    let mut plain = vec![vec![0.0; l as usize + 1]; k as usize + 1];
    let mut converged = true;
    for s in 0..=k {
        for t in 0..=l {
            let ev = olkin_liu_product_moment(u1, u2, u3, s, t, INNER_REL_TOL)?;
            converged &= ev.converged;
            plain[s as usize][t as usize] = ev.value;
        }
    }

    let ew1 = raw_moments(params.alpha1(), params.alpha2(), k);
    let ew2 = raw_moments(params.beta1(), params.beta2(), l);
    let ew3 = raw_moments(params.delta1(), params.delta2(), k + l);

    let mut total = NeumaierSum::new();
    for i in 0..=k {
        for j in 0..=l {
            let mut mixed = NeumaierSum::new();
            for r in 0..=(k - i) {
                for s in 0..=(l - j) {
                    let sign = if (r + s) % 2 == 0 { 1.0 } else { -1.0 };
                    mixed.add(
                        sign * binomial(k - i, r)
                            * binomial(l - j, s)
                            * plain[(i + r) as usize][(j + s) as usize],
                    );
                }
            }
            total.add(
                binomial(k, i)
                    * binomial(l, j)
                    * mixed.value()
                    * ew1[i as usize]
                    * ew2[j as usize]
                    * ew3[(k - i + l - j) as usize],
            );
        }
    }
    Ok(MomentValue {
        value: total.value(),
        converged,
    })
}

/// Exact covariance Cov(X, Y) = E(XY) - E(X)E(Y).
///
/// E(XY) uses the four-term latent expansion: with e = E(X'Y'),
/// ex = E(X'), ey = E(Y'),
///
///   E(XY) = e E(W1)E(W2) + (ex - e) E(W1)E(W3)
///         + (ey - e) E(W2)E(W3) + (1 - ex - ey + e) E(W3^2).
///
/// The subtraction is assembled with compensated summation because
/// E(XY) and E(X)E(Y) agree to many digits near independence.
pub fn exact_covariance(params: &BivariateBetaParams) -> Result<MomentValue, Error> {
    let u1 = params.upsilon1();
    let u2 = params.upsilon2();
    let u3 = params.upsilon3();
    let exy = olkin_liu_product_moment(u1, u2, u3, 1, 1, INNER_REL_TOL)?;
    let e = exy.value;
    let ex = u1 / (u1 + u3);
    let ey = u2 / (u2 + u3);
    let ew1 = params.alpha1() / u1;
    let ew2 = params.beta1() / u2;
    let ew3 = params.delta1() / u3;
    let ew3_sq = params.delta1() * (params.delta1() + 1.0) / ((u3 + 1.0) * u3);
    let mean_x = params.marginal_x().mean();
    let mean_y = params.marginal_y().mean();

    let mut acc = NeumaierSum::new();
    acc.add(e * ew1 * ew2);
    acc.add((ex - e) * ew1 * ew3);
    acc.add((ey - e) * ew2 * ew3);
    acc.add((1.0 - ex - ey + e) * ew3_sq);
    acc.add(-(mean_x * mean_y));
    Ok(MomentValue {
        value: acc.value(),
        converged: exy.converged,
    })
}

/// Exact correlation r = Cov(X, Y) / sqrt(Var(X) Var(Y)) using the
/// closed-form beta marginal variances. Always in [0, 1) for valid
/// parameters: sharing D1, D2 cannot produce negative dependence.
pub fn exact_correlation(params: &BivariateBetaParams) -> Result<MomentValue, Error> {
    let cov = exact_covariance(params)?;
    let denom = (params.marginal_x().var() * params.marginal_y().var()).sqrt();
    Ok(MomentValue {
        value: cov.value / denom,
        converged: cov.converged,
    })
}

/// Magnussen's closed-form covariance approximation
///
///   Cov(X, Y) ~ (a1 a2 d2 + (1 + b1)(1 + b2) d1)
///               / ((a1 + b1)(a2 + b2)(1 + a1 + b1)(1 + a2 + b2))
///
/// in terms of the marginal parameters and shared shapes (d1, d2).
/// Kept for comparison: it can overshoot badly, even implying
/// correlations above 1. Requires d1 < min(a1, b1), d2 < min(a2, b2).
pub fn magnussen_approx_covariance(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    delta1: f64,
    delta2: f64,
) -> Result<f64, Error> {
    for (label, v) in [
        ("a1", a1),
        ("a2", a2),
        ("b1", b1),
        ("b2", b2),
        ("delta1", delta1),
        ("delta2", delta2),
    ] {
        validate_shape(label, v)?;
    }
    if delta1 >= a1.min(b1) || delta2 >= a2.min(b2) {
        return Err(Error::domain(format!(
            "approximation requires delta1 < min(a1, b1) and delta2 < min(a2, b2), \
             got delta1 = {delta1}, delta2 = {delta2}"
        )));
    }
    Ok((a1 * a2 * delta2 + (1.0 + b1) * (1.0 + b2) * delta1)
        / ((a1 + b1) * (a2 + b2) * (1.0 + a1 + b1) * (1.0 + a2 + b2)))
}

/// The approximate covariance divided by the true marginal standard
/// deviations. Exposed because the approximation's failure mode is most
/// visible on the correlation scale, where it can exceed 1.
pub fn magnussen_approx_correlation(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    delta1: f64,
    delta2: f64,
) -> Result<f64, Error> {
    let cov = magnussen_approx_covariance(a1, a2, b1, b2, delta1, delta2)?;
    let vx = BetaMarginal::new(a1, a2)?.var();
    let vy = BetaMarginal::new(b1, b2)?.var();
    Ok(cov / (vx * vy).sqrt())
}
