//! Seedable variate generation: uniform, normal, gamma, and the six-gamma
//! construction underlying every sampler in this crate.
//!
//! Batches are filled in fixed-size chunks, each chunk on its own derived
//! stream, so the same (seed, stream_id) reproduces the same batch
//! bit-for-bit regardless of thread count or whether the `parallel`
//! feature is enabled at all.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bivariate::BivariateBetaParams;
use crate::error::Error;

/// Rows per work unit when filling batches. Small enough to parallelize
/// mid-size requests, large enough that stream setup cost is noise.
pub(crate) const CHUNK_ROWS: usize = 8192;

/// Redraw attempts per row before giving up; only pathological shape
/// combinations (deep underflow) can exhaust this.
pub(crate) const MAX_REDRAWS: u32 = 1000;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seedable, splittable random stream.
///
/// Identical (seed, stream_id) reproduces an identical variate sequence
/// bit-for-bit across runs and platforms. Distinct stream ids select
/// distinct counter streams of the same ChaCha key, which the generator
/// family documents as statistically independent.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    chacha: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut chacha = ChaCha12Rng::seed_from_u64(seed);
        chacha.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            chacha,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.chacha.next_u64()
    }

    /// Uniform draw strictly inside (0, 1): 53 random bits centered in
    /// their bucket, so neither endpoint is reachable.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Marsaglia polar, caching the spare).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.open01() - 1.0;
            let v = 2.0 * self.open01() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// One derivation point for a family of child streams. Consumes a
    /// single draw from the parent no matter how many children follow, so
    /// batch size never shifts the parent's subsequent outputs.
    pub(crate) fn fork(&mut self) -> StreamForker {
        StreamForker {
            seed: self.seed,
            base: self.next_u64(),
        }
    }
}

/// Factory for derived child streams; see [`RngStream::fork`].
pub(crate) struct StreamForker {
    seed: u64,
    base: u64,
}

impl StreamForker {
    pub fn stream(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, splitmix64(self.base ^ index.wrapping_mul(GOLDEN)))
    }
}

/// Gamma sampler with unit scale, caching the shape-dependent constants
/// of the Marsaglia-Tsang squeeze/rejection method.
///
/// Shapes below 1 are drawn at shape + 1 and boosted back down by
/// U^(1/shape), keeping the method exact without discretization.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    shape: f64,
    d: f64,
    c: f64,
    boost: bool,
}

impl GammaSampler {
    pub fn new(shape: f64) -> Result<Self, Error> {
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::domain(format!(
                "gamma shape must be positive and finite, got {shape}"
            )));
        }
        let boost = shape < 1.0;
        let effective = if boost { shape + 1.0 } else { shape };
        let d = effective - 1.0 / 3.0;
        Ok(GammaSampler {
            shape,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            boost,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        loop {
            let x = stream.standard_normal();
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v3 = v * v * v;
            let u = stream.open01();
            let x2 = x * x;
            // squeeze first, log test only when it fails
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + self.d * (1.0 - v3 + v3.ln()) {
                let mut g = self.d * v3;
                if self.boost {
                    g *= stream.open01().powf(1.0 / self.shape);
                }
                return g;
            }
        }
    }
}

/// One draw from Gamma(shape, 1).
pub fn gamma_variate(stream: &mut RngStream, shape: f64) -> Result<f64, Error> {
    Ok(GammaSampler::new(shape)?.sample(stream))
}

/// Column-oriented batch of bivariate (x, y) draws together with the seed
/// and a digest of the parameters that produced it.
///
/// Every entry lies strictly inside (0, 1); `redraws` counts tuples that
/// were rejected for producing an unrepresentable ratio and drawn again.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub params_digest: u64,
    pub redraws: u64,
}

impl SampleBatch {
    /// Wrap externally supplied pairs (file input and the like) so they can
    /// be fed to the fitting machinery. Seed and digest are zeroed: nothing
    /// generated them.
    pub fn from_pairs(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, Error> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::domain(
                "paired data requires two equal-length nonempty columns".to_string(),
            ));
        }
        let n = xs.len();
        Ok(SampleBatch {
            xs,
            ys,
            n,
            seed: 0,
            params_digest: 0,
            redraws: 0,
        })
    }
}

/// FNV-1a over a tag byte and the bit patterns of the shapes, used to stamp
/// batches with an opaque identifier of their generating parameters.
pub(crate) fn params_digest(tag: u8, shapes: &[f64]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100_0000_01B3);
    };
    eat(tag);
    for s in shapes {
        for byte in s.to_bits().to_le_bytes() {
            eat(byte);
        }
    }
    h
}

/// Fill `n` rows of `width` values each, chunked across derived streams.
/// `gen` writes one row and returns how many redraws it spent.
pub(crate) fn fill_rows<F>(
    stream: &mut RngStream,
    n: usize,
    width: usize,
    gen: F,
) -> Result<(Vec<f64>, u64), Error>
where
    F: Fn(&mut RngStream, &mut [f64]) -> Result<u32, Error> + Sync,
{
    let forker = stream.fork();
    let n_chunks = n.div_ceil(CHUNK_ROWS);

    let run_chunk = |chunk: usize| -> Result<(Vec<f64>, u64), Error> {
        let rows = (n - chunk * CHUNK_ROWS).min(CHUNK_ROWS);
        let mut child = forker.stream(chunk as u64);
        let mut data = vec![0.0; rows * width];
        let mut redraws = 0u64;
        for row in data.chunks_mut(width) {
            redraws += gen(&mut child, row)? as u64;
        }
        Ok((data, redraws))
    };

    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<(Vec<f64>, u64), Error>> = {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(run_chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<(Vec<f64>, u64), Error>> = (0..n_chunks).map(run_chunk).collect();

    let mut data = Vec::with_capacity(n * width);
    let mut redraws = 0u64;
    for chunk in chunks {
        let (d, r) = chunk?;
        data.extend_from_slice(&d);
        redraws += r;
    }
    Ok((data, redraws))
}

fn interior(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// Draw one six-gamma tuple for `params` and form the (x, y) ratios,
/// redrawing the whole tuple if either ratio is unrepresentable.
fn bivariate_pair(
    stream: &mut RngStream,
    samplers: &[GammaSampler; 6],
) -> Result<(f64, f64, u32), Error> {
    for attempt in 0..MAX_REDRAWS {
        let [ga1, ga2, gb1, gb2, gd1, gd2] =
            [0, 1, 2, 3, 4, 5].map(|i| samplers[i].sample(stream));
        let x = (ga1 + gd1) / (ga1 + ga2 + gd1 + gd2);
        let y = (gb1 + gd1) / (gb1 + gb2 + gd1 + gd2);
        if interior(x) && interior(y) {
            return Ok((x, y, attempt));
        }
    }
    Err(Error::RedrawBudgetExhausted {
        attempts: MAX_REDRAWS,
    })
}

fn bivariate_samplers(params: &BivariateBetaParams) -> [GammaSampler; 6] {
    [
        params.alpha1(),
        params.alpha2(),
        params.beta1(),
        params.beta2(),
        params.delta1(),
        params.delta2(),
    ]
    .map(|s| GammaSampler::new(s).expect("validated shapes"))
}

/// Draw `n` independent (x, y) pairs from the six-gamma construction:
/// x = (A1 + D1) / (A1 + A2 + D1 + D2), y = (B1 + D1) / (B1 + B2 + D1 + D2)
/// with six fresh gamma draws per pair.
pub fn sample_bivariate_beta(
    stream: &mut RngStream,
    params: &BivariateBetaParams,
    n: usize,
) -> Result<SampleBatch, Error> {
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1".to_string()));
    }
    let samplers = bivariate_samplers(params);
    let seed = stream.seed();
    let (data, redraws) = fill_rows(stream, n, 2, |child, row| {
        let (x, y, tries) = bivariate_pair(child, &samplers)?;
        row[0] = x;
        row[1] = y;
        Ok(tries)
    })?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for pair in data.chunks_exact(2) {
        xs.push(pair[0]);
        ys.push(pair[1]);
    }
    Ok(SampleBatch {
        xs,
        ys,
        n,
        seed,
        params_digest: params.digest(),
        redraws,
    })
}

/// One draw of the latent decomposition: the three beta mixing components,
/// the Olkin-Liu weight pair, and the (x, y) they reconstruct.
///
/// All seven values come from a single six-gamma tuple, so
/// x = x_prime * w1 + (1 - x_prime) * w3 holds up to rounding, and (x, y)
/// equals the direct gamma-ratio construction exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latents {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub x_prime: f64,
    pub y_prime: f64,
    pub x: f64,
    pub y: f64,
}

/// Sample the latent variables of one draw: w1 ~ Beta(alpha1, alpha2),
/// w2 ~ Beta(beta1, beta2), w3 ~ Beta(delta1, delta2), and the mixing
/// weights (x', y') with shapes (upsilon1, upsilon2, upsilon3), all
/// consistent with one underlying six-gamma draw.
pub fn sample_latents(
    stream: &mut RngStream,
    params: &BivariateBetaParams,
) -> Result<Latents, Error> {
    let samplers = bivariate_samplers(params);
    for _ in 0..MAX_REDRAWS {
        let [ga1, ga2, gb1, gb2, gd1, gd2] =
            [0, 1, 2, 3, 4, 5].map(|i| samplers[i].sample(stream));
        let u1 = ga1 + ga2;
        let u2 = gb1 + gb2;
        let u3 = gd1 + gd2;
        let l = Latents {
            w1: ga1 / u1,
            w2: gb1 / u2,
            w3: gd1 / u3,
            x_prime: u1 / (u1 + u3),
            y_prime: u2 / (u2 + u3),
            x: (ga1 + gd1) / (u1 + u3),
            y: (gb1 + gd1) / (u2 + u3),
        };
        let vals = [l.w1, l.w2, l.w3, l.x_prime, l.y_prime, l.x, l.y];
        if vals.iter().all(|v| interior(*v)) {
            return Ok(l);
        }
    }
    Err(Error::RedrawBudgetExhausted {
        attempts: MAX_REDRAWS,
    })
}
