//! Two correlated random simplex vectors: X is built from gammas
//! A_1..A_k plus shared D_1..D_k, Y from B_1..B_k plus the same shared
//! block, giving Dirichlet marginals Dir(alpha + delta) and
//! Dir(beta + delta) coupled through delta. Componentwise (X_i, Y_i) is
//! again the six-parameter bivariate beta after lumping the other
//! dimensions, which yields exact component correlations.

use crate::bivariate::{exact_correlation, validate_shape, BivariateBetaParams, MomentValue};
use crate::error::Error;
use crate::rng::{fill_rows, params_digest, GammaSampler, RngStream, MAX_REDRAWS};

/// Shape parameters of the correlated Dirichlet pair: alpha and beta
/// are the own blocks of X and Y, delta is the shared block.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedDirichletParams {
    k: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    delta: Vec<f64>,
}

impl CorrelatedDirichletParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, delta: Vec<f64>) -> Result<Self, Error> {
        let k = alpha.len();
        if k < 2 {
            return Err(Error::domain(format!(
                "at least 2 components required, got {k}"
            )));
        }
        if beta.len() != k || delta.len() != k {
            return Err(Error::domain(format!(
                "shape blocks must share one length, got alpha: {k}, beta: {}, delta: {}",
                beta.len(),
                delta.len()
            )));
        }
        for (label, block) in [("alpha", &alpha), ("beta", &beta), ("delta", &delta)] {
            for (i, &v) in block.iter().enumerate() {
                validate_shape(&format!("{label}[{i}]"), v)?;
            }
        }
        Ok(Self {
            k,
            alpha,
            beta,
            delta,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Dirichlet shapes of the X marginal, alpha + delta componentwise.
    pub fn marginal_x(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.delta)
            .map(|(a, d)| a + d)
            .collect()
    }

    /// Dirichlet shapes of the Y marginal, beta + delta componentwise.
    pub fn marginal_y(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.delta)
            .map(|(b, d)| b + d)
            .collect()
    }

    pub fn digest(&self) -> u64 {
        let mut flat = vec![self.k as f64];
        flat.extend(&self.alpha);
        flat.extend(&self.beta);
        flat.extend(&self.delta);
        params_digest(3, &flat)
    }
}

/// Paired simplex draws, row-major with k columns per side.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBatch {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub params_digest: u64,
    pub redraws: u64,
}

impl DirichletBatch {
    pub fn x_row(&self, idx: usize) -> &[f64] {
        &self.xs[idx * self.k..(idx + 1) * self.k]
    }

    pub fn y_row(&self, idx: usize) -> &[f64] {
        &self.ys[idx * self.k..(idx + 1) * self.k]
    }
}

/// Draw `n` correlated simplex pairs.
///
/// Per row 3k gammas are drawn in the order A_1..A_k, B_1..B_k,
/// D_1..D_k; then x_i = (A_i + D_i) / (sum A + sum D) and
/// y_i = (B_i + D_i) / (sum B + sum D). Each vector is renormalized by
/// its own sum so rows close to 1 despite rounding; a row with any
/// component on the boundary of (0, 1) is redrawn.
pub fn sample_correlated_dirichlet(
    stream: &mut RngStream,
    params: &CorrelatedDirichletParams,
    n: usize,
) -> Result<DirichletBatch, Error> {
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1".to_string()));
    }
    let k = params.k;
    let samplers: Vec<GammaSampler> = params
        .alpha
        .iter()
        .chain(&params.beta)
        .chain(&params.delta)
        .map(|&s| GammaSampler::new(s).expect("validated shapes"))
        .collect();

    let seed = stream.seed();
    let digest = params.digest();
    // each row carries the x vector then the y vector
    let (values, redraws) = fill_rows(stream, n, 2 * k, |child, row| {
        let mut g = vec![0.0; 3 * k];
        for attempt in 0..MAX_REDRAWS {
            for (gi, s) in g.iter_mut().zip(&samplers) {
                *gi = s.sample(child);
            }
            let (a, rest) = g.split_at(k);
            let (b, d) = rest.split_at(k);
            let sum_ad: f64 = a.iter().sum::<f64>() + d.iter().sum::<f64>();
            let sum_bd: f64 = b.iter().sum::<f64>() + d.iter().sum::<f64>();
            let mut ok = true;
            for i in 0..k {
                row[i] = (a[i] + d[i]) / sum_ad;
                row[k + i] = (b[i] + d[i]) / sum_bd;
            }
            let x_total: f64 = row[..k].iter().sum();
            let y_total: f64 = row[k..].iter().sum();
            for i in 0..k {
                row[i] /= x_total;
                row[k + i] /= y_total;
                if !(row[i] > 0.0 && row[i] < 1.0 && row[k + i] > 0.0 && row[k + i] < 1.0) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(attempt);
            }
        }
        Err(Error::RedrawBudgetExhausted {
            attempts: MAX_REDRAWS,
        })
    })?;

    let mut xs = Vec::with_capacity(n * k);
    let mut ys = Vec::with_capacity(n * k);
    for row in values.chunks_exact(2 * k) {
        xs.extend_from_slice(&row[..k]);
        ys.extend_from_slice(&row[k..]);
    }
    Ok(DirichletBatch {
        xs,
        ys,
        k,
        n,
        seed,
        params_digest: digest,
        redraws,
    })
}

/// Exact six-parameter form of the joint law of (X_i, Y_i): the other
/// dimensions lump into single gamma variates with summed shapes, so
/// the pair has own shapes (alpha_i, sum of the other alphas) and
/// (beta_i, sum of the other betas) with shared
/// (delta_i, sum of the other deltas).
pub fn dirichlet_component_reduction(
    params: &CorrelatedDirichletParams,
    i: usize,
) -> Result<BivariateBetaParams, Error> {
    if i >= params.k {
        return Err(Error::Index(format!(
            "component {i} out of range for k = {}",
            params.k
        )));
    }
    let others = |block: &[f64]| -> f64 {
        block
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v)
            .sum()
    };
    Ok(BivariateBetaParams::from_parts(
        params.alpha[i],
        others(&params.alpha),
        params.beta[i],
        others(&params.beta),
        params.delta[i],
        others(&params.delta),
    ))
}

/// Exact correlation of (X_i, Y_i) via the component reduction.
pub fn dirichlet_component_correlation(
    params: &CorrelatedDirichletParams,
    i: usize,
) -> Result<MomentValue, Error> {
    exact_correlation(&dirichlet_component_reduction(params, i)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed() -> CorrelatedDirichletParams {
        CorrelatedDirichletParams::new(
            vec![2.5, 0.5, 0.5],
            vec![0.5, 0.5, 0.5],
            vec![7.5, 1.5, 1.5],
        )
        .unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    #[test]
    fn construction_rejects_bad_blocks() {
        assert!(CorrelatedDirichletParams::new(vec![1.0], vec![1.0], vec![1.0]).is_err());
        assert!(
            CorrelatedDirichletParams::new(vec![1.0, 1.0], vec![1.0], vec![1.0, 1.0]).is_err()
        );
        assert!(CorrelatedDirichletParams::new(
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0]
        )
        .is_err());
    }

    #[test]
    fn marginal_shapes_add_the_shared_block() {
        let p = skewed();
        assert_eq!(p.marginal_x(), vec![10.0, 2.0, 2.0]);
        assert_eq!(p.marginal_y(), vec![8.0, 2.0, 2.0]);
    }

    #[test]
    fn component_reduction_lumps_other_dimensions() {
        let p = skewed();
        let r = dirichlet_component_reduction(&p, 0).unwrap();
        assert_eq!(
            [r.alpha1(), r.alpha2(), r.beta1(), r.beta2(), r.delta1(), r.delta2()],
            [2.5, 1.0, 0.5, 1.0, 7.5, 3.0]
        );
        let r = dirichlet_component_reduction(&p, 1).unwrap();
        assert_eq!(
            [r.alpha1(), r.alpha2(), r.beta1(), r.beta2(), r.delta1(), r.delta2()],
            [0.5, 3.0, 0.5, 1.0, 1.5, 9.0]
        );
        assert!(dirichlet_component_reduction(&p, 3).is_err());
    }

    #[test]
    fn component_correlations_match_reference_values() {
        let p = skewed();
        let r1 = dirichlet_component_correlation(&p, 0).unwrap();
        assert!(r1.converged);
        assert!(rel_close(r1.value, 0.765850604658141964, 1e-9));
        let r2 = dirichlet_component_correlation(&p, 1).unwrap();
        assert!(rel_close(r2.value, 0.750377280245765431, 1e-9));
        let r3 = dirichlet_component_correlation(&p, 2).unwrap();
        assert!(rel_close(r3.value, r2.value, 1e-12));
    }

    #[test]
    fn tiny_shared_block_kills_correlation() {
        let p = CorrelatedDirichletParams::new(
            vec![2.0, 1.0, 1.5],
            vec![1.0, 2.0, 0.5],
            vec![1e-6, 1e-6, 1e-6],
        )
        .unwrap();
        for i in 0..3 {
            let r = dirichlet_component_correlation(&p, i).unwrap();
            assert!(r.value.abs() < 1e-4);
        }
    }

    #[test]
    fn rows_close_and_stay_interior() {
        let p = skewed();
        let batch = sample_correlated_dirichlet(&mut RngStream::new(5, 1), &p, 400).unwrap();
        assert_eq!(batch.n, 400);
        for idx in 0..batch.n {
            let (x, y) = (batch.x_row(idx), batch.y_row(idx));
            assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(x.iter().chain(y).all(|v| *v > 0.0 && *v < 1.0));
        }
        let again = sample_correlated_dirichlet(&mut RngStream::new(5, 1), &p, 400).unwrap();
        assert_eq!(batch, again);
        assert!(sample_correlated_dirichlet(&mut RngStream::new(5, 1), &p, 0).is_err());
    }

    #[test]
    fn two_component_case_is_bivariate_shaped() {
        let p = CorrelatedDirichletParams::new(
            vec![2.0, 3.0],
            vec![1.5, 2.5],
            vec![1.0, 2.0],
        )
        .unwrap();
        let batch = sample_correlated_dirichlet(&mut RngStream::new(8, 0), &p, 200).unwrap();
        for idx in 0..batch.n {
            let x = batch.x_row(idx);
            assert!((x[0] + x[1] - 1.0).abs() <= 1e-12);
        }
        let r = dirichlet_component_reduction(&p, 0).unwrap();
        assert_eq!(
            [r.alpha1(), r.alpha2(), r.beta1(), r.beta2(), r.delta1(), r.delta2()],
            [2.0, 3.0, 1.5, 2.5, 1.0, 2.0]
        );
    }
}
