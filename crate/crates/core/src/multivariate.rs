//! The k-dimensional generalization: every dimension keeps a private
//! pair of gamma shapes and every unordered pair of dimensions shares
//! one, so coordinate i is built from its own gammas plus one shared
//! gamma per partner. Pairwise joint laws reduce exactly to the
//! six-parameter bivariate form by summing the gamma shapes a
//! coordinate absorbs from its other partners.

use crate::bivariate::{validate_shape, BivariateBetaParams};
use crate::error::Error;
use crate::rng::{fill_rows, params_digest, GammaSampler, RngStream, MAX_REDRAWS};

/// Shape parameters of the k-dimensional construction.
///
/// `own[i]` holds dimension i's private shape pair; `shared` holds one
/// shape pair per unordered dimension pair {i, j}, stored in canonical
/// upper-triangular order (0,1), (0,2), ..., (0,k-1), (1,2), ... All
/// dimension indices in this module are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateBetaParams {
    k: usize,
    own: Vec<[f64; 2]>,
    shared: Vec<[f64; 2]>,
}

impl MultivariateBetaParams {
    pub fn new(own: Vec<[f64; 2]>, shared: Vec<[f64; 2]>) -> Result<Self, Error> {
        let k = own.len();
        if k < 2 {
            return Err(Error::domain(format!(
                "at least 2 dimensions required, got {k}"
            )));
        }
        let pairs = k * (k - 1) / 2;
        if shared.len() != pairs {
            return Err(Error::domain(format!(
                "{k} dimensions need {pairs} shared shape pairs, got {}",
                shared.len()
            )));
        }
        for (i, pair) in own.iter().enumerate() {
            validate_shape(&format!("own[{i}][0]"), pair[0])?;
            validate_shape(&format!("own[{i}][1]"), pair[1])?;
        }
        for (s, pair) in shared.iter().enumerate() {
            validate_shape(&format!("shared[{s}][0]"), pair[0])?;
            validate_shape(&format!("shared[{s}][1]"), pair[1])?;
        }
        Ok(Self { k, own, shared })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn own(&self) -> &[[f64; 2]] {
        &self.own
    }

    pub fn shared(&self) -> &[[f64; 2]] {
        &self.shared
    }

    /// Total number of shape parameters, 2(k + k(k-1)/2).
    pub fn shape_count(&self) -> usize {
        2 * (self.k + self.k * (self.k - 1) / 2)
    }

    /// Position of pair {i, j} in the canonical upper-triangular layout.
    pub fn pair_slot(&self, i: usize, j: usize) -> Result<usize, Error> {
        if i >= self.k || j >= self.k {
            return Err(Error::Index(format!(
                "dimension out of range: ({i}, {j}) with k = {}",
                self.k
            )));
        }
        if i == j {
            return Err(Error::Index(format!(
                "a dimension pair needs two distinct dimensions, got ({i}, {j})"
            )));
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        Ok(lo * (2 * self.k - lo - 1) / 2 + (hi - lo - 1))
    }

    pub fn shared_for(&self, i: usize, j: usize) -> Result<[f64; 2], Error> {
        Ok(self.shared[self.pair_slot(i, j)?])
    }

    pub fn digest(&self) -> u64 {
        let mut flat = vec![self.k as f64];
        flat.extend(self.own.iter().flatten());
        flat.extend(self.shared.iter().flatten());
        params_digest(2, &flat)
    }
}

/// Draws from the k-dimensional construction, row-major with k columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateBatch {
    pub values: Vec<f64>,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub params_digest: u64,
    pub redraws: u64,
}

impl MultivariateBatch {
    pub fn row(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.k..(idx + 1) * self.k]
    }
}

/// Draw `n` rows of the k-dimensional construction.
///
/// Per row the gammas are drawn in a fixed order: own pairs dimension
/// by dimension, then shared pairs in canonical order. Coordinate i is
/// (own1 + sum of its partners' first shared gammas) over (both own
/// gammas + both shared gammas of every partner pair); a row with any
/// coordinate on the boundary of (0, 1) is redrawn.
pub fn sample_multivariate_beta(
    stream: &mut RngStream,
    params: &MultivariateBetaParams,
    n: usize,
) -> Result<MultivariateBatch, Error> {
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1".to_string()));
    }
    let k = params.k;
    let own_samplers: Vec<[GammaSampler; 2]> = params
        .own
        .iter()
        .map(|p| p.map(|s| GammaSampler::new(s).expect("validated shapes")))
        .collect();
    let shared_samplers: Vec<[GammaSampler; 2]> = params
        .shared
        .iter()
        .map(|p| p.map(|s| GammaSampler::new(s).expect("validated shapes")))
        .collect();
    // partner_slots[i] lists the canonical slot of {i, m} for every m != i
    let partner_slots: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&m| m != i)
                .map(|m| params.pair_slot(i, m).expect("distinct in-range dims"))
                .collect()
        })
        .collect();

    let seed = stream.seed();
    let digest = params.digest();
    let n_pairs = params.shared.len();
    let (values, redraws) = fill_rows(stream, n, k, |child, row| {
        let mut g_own = vec![[0.0; 2]; k];
        let mut g_shared = vec![[0.0; 2]; n_pairs];
        for attempt in 0..MAX_REDRAWS {
            for (g, s) in g_own.iter_mut().zip(&own_samplers) {
                g[0] = s[0].sample(child);
                g[1] = s[1].sample(child);
            }
            for (g, s) in g_shared.iter_mut().zip(&shared_samplers) {
                g[0] = s[0].sample(child);
                g[1] = s[1].sample(child);
            }
            let mut ok = true;
            for i in 0..k {
                let mut num = g_own[i][0];
                let mut den = g_own[i][0] + g_own[i][1];
                for &slot in &partner_slots[i] {
                    num += g_shared[slot][0];
                    den += g_shared[slot][0] + g_shared[slot][1];
                }
                let x = num / den;
                if !(x > 0.0 && x < 1.0) {
                    ok = false;
                    break;
                }
                row[i] = x;
            }
            if ok {
                return Ok(attempt);
            }
        }
        Err(Error::RedrawBudgetExhausted {
            attempts: MAX_REDRAWS,
        })
    })?;
    Ok(MultivariateBatch {
        values,
        k,
        n,
        seed,
        params_digest: digest,
        redraws,
    })
}

/// Exact six-parameter form of the joint law of (coordinate i,
/// coordinate j): each coordinate's own shapes absorb the shared pairs
/// it holds with every dimension other than j (resp. i), and the {i, j}
/// pair becomes the shared delta.
pub fn pairwise_bivariate_reduction(
    params: &MultivariateBetaParams,
    i: usize,
    j: usize,
) -> Result<BivariateBetaParams, Error> {
    let delta = params.shared_for(i, j)?;
    let mut alpha = params.own[i];
    let mut beta = params.own[j];
    for m in 0..params.k {
        if m != i && m != j {
            let si = params.shared_for(i, m)?;
            alpha[0] += si[0];
            alpha[1] += si[1];
            let sj = params.shared_for(j, m)?;
            beta[0] += sj[0];
            beta[1] += sj[1];
        }
    }
    Ok(BivariateBetaParams::from_parts(
        alpha[0], alpha[1], beta[0], beta[1], delta[0], delta[1],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivariate::exact_correlation;

    fn three_dim() -> MultivariateBetaParams {
        // own = (alpha, beta, gamma), shared slots = ({0,1}, {0,2}, {1,2})
        MultivariateBetaParams::new(
            vec![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
            vec![[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]],
        )
        .unwrap()
    }

    #[test]
    fn parameter_count_matches_dimension() {
        let p = MultivariateBetaParams::new(
            vec![[1.0, 1.0]; 4],
            vec![[1.0, 1.0]; 6],
        )
        .unwrap();
        assert_eq!(p.shape_count(), 20);
        assert_eq!(three_dim().shape_count(), 12);
    }

    #[test]
    fn construction_rejects_bad_layouts() {
        assert!(MultivariateBetaParams::new(vec![[1.0, 1.0]], vec![]).is_err());
        assert!(
            MultivariateBetaParams::new(vec![[1.0, 1.0]; 3], vec![[1.0, 1.0]; 2]).is_err()
        );
        assert!(MultivariateBetaParams::new(
            vec![[1.0, 0.0], [1.0, 1.0]],
            vec![[1.0, 1.0]]
        )
        .is_err());
    }

    #[test]
    fn pair_slots_enumerate_upper_triangle() {
        let p = three_dim();
        assert_eq!(p.pair_slot(0, 1).unwrap(), 0);
        assert_eq!(p.pair_slot(0, 2).unwrap(), 1);
        assert_eq!(p.pair_slot(1, 2).unwrap(), 2);
        assert_eq!(p.pair_slot(2, 0).unwrap(), 1);
        assert!(p.pair_slot(1, 1).is_err());
        assert!(p.pair_slot(0, 3).is_err());

        let q = MultivariateBetaParams::new(
            vec![[1.0, 1.0]; 4],
            (0..6).map(|s| [s as f64 + 1.0, 1.0]).collect(),
        )
        .unwrap();
        // slots for k=4: (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
        assert_eq!(q.pair_slot(1, 3).unwrap(), 4);
        assert_eq!(q.pair_slot(2, 3).unwrap(), 5);
        assert_eq!(q.shared_for(3, 1).unwrap(), [5.0, 1.0]);
    }

    #[test]
    fn reduction_reads_off_the_three_dim_construction() {
        // pair (0, 1): coordinate 0 absorbs its {0,2} pair, coordinate 1
        // absorbs its {1,2} pair, and {0,1} becomes the shared delta
        let r = pairwise_bivariate_reduction(&three_dim(), 0, 1).unwrap();
        assert_eq!(
            [r.alpha1(), r.alpha2(), r.beta1(), r.beta2(), r.delta1(), r.delta2()],
            [1.3, 2.4, 3.5, 4.6, 0.1, 0.2]
        );
        // swapping the pair swaps the marginal roles
        let s = pairwise_bivariate_reduction(&three_dim(), 1, 0).unwrap();
        assert_eq!(
            [s.alpha1(), s.alpha2(), s.beta1(), s.beta2()],
            [3.5, 4.6, 1.3, 2.4]
        );
        assert!(pairwise_bivariate_reduction(&three_dim(), 1, 1).is_err());
    }

    #[test]
    fn symmetric_parameters_give_identical_reductions() {
        let p = MultivariateBetaParams::new(
            vec![[2.0, 3.0]; 3],
            vec![[0.7, 0.9]; 3],
        )
        .unwrap();
        let r01 = pairwise_bivariate_reduction(&p, 0, 1).unwrap();
        let r02 = pairwise_bivariate_reduction(&p, 0, 2).unwrap();
        let r12 = pairwise_bivariate_reduction(&p, 1, 2).unwrap();
        assert_eq!(r01, r02);
        assert_eq!(r01, r12);
        let r = exact_correlation(&r01).unwrap();
        assert!(r.value > 0.0 && r.value < 1.0 && r.converged);
    }

    #[test]
    fn sampling_is_deterministic_and_interior() {
        let p = three_dim();
        let batch = sample_multivariate_beta(&mut RngStream::new(9, 0), &p, 300).unwrap();
        assert_eq!(batch.n, 300);
        assert_eq!(batch.k, 3);
        assert_eq!(batch.values.len(), 900);
        assert!(batch.values.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert_eq!(batch.row(299).len(), 3);
        let again = sample_multivariate_beta(&mut RngStream::new(9, 0), &p, 300).unwrap();
        assert_eq!(batch, again);
        let other = sample_multivariate_beta(&mut RngStream::new(10, 0), &p, 300).unwrap();
        assert_ne!(batch.values, other.values);
        assert!(sample_multivariate_beta(&mut RngStream::new(9, 0), &p, 0).is_err());
    }

    #[test]
    fn digest_tracks_every_shape() {
        let p = three_dim();
        let mut shared = p.shared().to_vec();
        shared[2][1] += 1e-9;
        let q = MultivariateBetaParams::new(p.own().to_vec(), shared).unwrap();
        assert_ne!(p.digest(), q.digest());
    }
}
