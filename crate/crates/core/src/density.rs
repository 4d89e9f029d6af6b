//! Joint density machinery. The unconditional density of (X, Y) has no
//! closed form, but conditional on the latent mixing triple
//! (W1, W2, W3) it does: X = X'W1 + (1 - X')W3 and Y = Y'W2 + (1 - Y')W3
//! are affine images of the Olkin-Liu pair (X', Y'), so the conditional
//! density is the Olkin-Liu density times the Jacobian of that map.
//! Averaging it over latent draws gives a Monte-Carlo estimate of the
//! joint density on a grid, good enough for plotting and normalization
//! checks.

use crate::bivariate::BivariateBetaParams;
use crate::error::Error;
use crate::rng::{GammaSampler, RngStream, MAX_REDRAWS};
use crate::special::log_gamma;

const MAX_GRID_RES: usize = 4096;
// latent triples per derived stream when filling a grid
const TRIPLE_CHUNK: usize = 2048;
// chunks materialized at once; bounds memory at BATCH partial grids
const CHUNK_BATCH: usize = 8;

fn in_open_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// ln of the three-argument beta normalizer
/// B(u1, u2, u3) = gamma(u1) gamma(u2) gamma(u3) / gamma(u1 + u2 + u3).
fn ln_beta3(u1: f64, u2: f64, u3: f64) -> Result<f64, Error> {
    Ok(log_gamma(u1)? + log_gamma(u2)? + log_gamma(u3)? - log_gamma(u1 + u2 + u3)?)
}

/// Density of (X, Y) at (x, y) conditional on the latent triple
/// (w1, w2, w3), evaluated in log space.
///
/// The support is the open rectangle with x strictly between w1 and w3
/// and y strictly between w2 and w3; outside it the value is 0. The
/// value can round to +inf at corners where the conditional density has
/// a singularity (small upsilon exponents). Requires w1 != w3 and
/// w2 != w3; equal values degenerate the affine map.
pub fn conditional_joint_density(
    params: &BivariateBetaParams,
    w1: f64,
    w2: f64,
    w3: f64,
    x: f64,
    y: f64,
) -> Result<f64, Error> {
    for (label, v) in [("w1", w1), ("w2", w2), ("w3", w3), ("x", x), ("y", y)] {
        if !v.is_finite() || !in_open_unit(v) {
            return Err(Error::domain(format!(
                "{label} must lie strictly inside (0, 1), got {v}"
            )));
        }
    }
    if w1 == w3 || w2 == w3 {
        return Err(Error::domain(format!(
            "latent triple is degenerate: w1 = {w1}, w2 = {w2}, w3 = {w3} \
             (w1 and w2 must differ from w3)"
        )));
    }
    let u1 = params.upsilon1();
    let u2 = params.upsilon2();
    let u3 = params.upsilon3();
    let x_p = (x - w3) / (w1 - w3);
    let y_p = (y - w3) / (w2 - w3);
    if !(in_open_unit(x_p) && in_open_unit(y_p)) {
        return Ok(0.0);
    }
    let log_p = (u1 - 1.0) * x_p.ln()
        + (u2 - 1.0) * y_p.ln()
        + (u2 + u3 - 1.0) * (1.0 - x_p).ln()
        + (u1 + u3 - 1.0) * (1.0 - y_p).ln()
        - (u1 + u2 + u3) * (1.0 - x_p * y_p).ln()
        - ln_beta3(u1, u2, u3)?
        - (w1 - w3).abs().ln()
        - (w2 - w3).abs().ln();
    Ok(log_p.exp())
}

/// Joint density values on a rectangular grid of cell centers over
/// (0, 1)^2: node (ix, iy) sits at ((ix + 0.5) / nx, (iy + 0.5) / ny)
/// and `values` is row-major in iy.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_node(&self, ix: usize) -> f64 {
        (ix as f64 + 0.5) / self.nx as f64
    }

    pub fn y_node(&self, iy: usize) -> f64 {
        (iy as f64 + 0.5) / self.ny as f64
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Midpoint-rule integral over the unit square: the mean node value,
    /// since every cell has area 1 / (nx * ny). Near 1 when the grid
    /// resolves the density.
    pub fn mass(&self) -> f64 {
        let mut m = 0.0;
        for v in &self.values {
            m += v;
        }
        m / self.values.len() as f64
    }
}

struct Triple {
    w1: f64,
    w2: f64,
    w3: f64,
}

fn draw_triple(stream: &mut RngStream, samplers: &[GammaSampler; 6]) -> Result<Triple, Error> {
    for _ in 0..MAX_REDRAWS {
        let [ga1, ga2, gb1, gb2, gd1, gd2] =
            [0, 1, 2, 3, 4, 5].map(|i| samplers[i].sample(stream));
        let t = Triple {
            w1: ga1 / (ga1 + ga2),
            w2: gb1 / (gb1 + gb2),
            w3: gd1 / (gd1 + gd2),
        };
        if in_open_unit(t.w1)
            && in_open_unit(t.w2)
            && in_open_unit(t.w3)
            && t.w1 != t.w3
            && t.w2 != t.w3
        {
            return Ok(t);
        }
    }
    Err(Error::RedrawBudgetExhausted {
        attempts: MAX_REDRAWS,
    })
}

/// Node indices whose cell centers fall strictly inside (lo, hi).
fn node_window(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    let first = (lo * n as f64 - 0.5).floor() as isize + 1;
    let last = (hi * n as f64 - 0.5).ceil() as isize - 1;
    let first = first.clamp(0, n as isize) as usize;
    let last = last.clamp(-1, n as isize - 1);
    if last < first as isize {
        first..first
    } else {
        first..(last as usize + 1)
    }
}

/// Accumulate the conditional density of one latent triple into `grid`.
/// Same formula as [`conditional_joint_density`], restructured so the
/// per-row and per-column log factors are computed once: only the cross
/// term varies per node.
fn accumulate_triple(
    grid: &mut [f64],
    nx: usize,
    ny: usize,
    u1: f64,
    u2: f64,
    u3: f64,
    neg_ln_b3: f64,
    t: &Triple,
) {
    let total = u1 + u2 + u3;
    let c0 = neg_ln_b3 - (t.w1 - t.w3).abs().ln() - (t.w2 - t.w3).abs().ln();

    let (x_lo, x_hi) = if t.w1 < t.w3 { (t.w1, t.w3) } else { (t.w3, t.w1) };
    let (y_lo, y_hi) = if t.w2 < t.w3 { (t.w2, t.w3) } else { (t.w3, t.w2) };
    let xs = node_window(x_lo, x_hi, nx);
    let ys = node_window(y_lo, y_hi, ny);
    if xs.is_empty() || ys.is_empty() {
        return;
    }

    let mut col_prime = Vec::with_capacity(xs.len());
    let mut col_log = Vec::with_capacity(xs.len());
    for ix in xs.clone() {
        let x = (ix as f64 + 0.5) / nx as f64;
        let x_p = (x - t.w3) / (t.w1 - t.w3);
        if in_open_unit(x_p) {
            col_prime.push(x_p);
            col_log.push((u1 - 1.0) * x_p.ln() + (u2 + u3 - 1.0) * (1.0 - x_p).ln());
        } else {
            col_prime.push(f64::NAN);
            col_log.push(f64::NEG_INFINITY);
        }
    }

    for iy in ys {
        let y = (iy as f64 + 0.5) / ny as f64;
        let y_p = (y - t.w3) / (t.w2 - t.w3);
        if !in_open_unit(y_p) {
            continue;
        }
        let row_log = c0 + (u2 - 1.0) * y_p.ln() + (u1 + u3 - 1.0) * (1.0 - y_p).ln();
        let row = &mut grid[iy * nx..(iy + 1) * nx];
        for (offset, ix) in xs.clone().enumerate() {
            let cl = col_log[offset];
            if cl == f64::NEG_INFINITY {
                continue;
            }
            let log_p = row_log + cl - total * (1.0 - col_prime[offset] * y_p).ln();
            row[ix] += log_p.exp();
        }
    }
}

/// Monte-Carlo estimate of the joint density on an nx-by-ny grid of
/// cell centers: the average of the conditional density over `n_latent`
/// latent triples drawn from their beta laws.
///
/// All grid nodes share the same latent draws, which keeps the
/// estimated field smooth. The result is deterministic for a given
/// stream state regardless of thread count or the `parallel` feature.
///
/// Small shared shapes concentrate each conditional density into a
/// spike of width comparable to delta1 + delta2 around (w1, w2); once
/// that is narrower than a grid cell the node values become noisy no
/// matter how many latent draws are averaged. Keep the resolution
/// coarser than the spike width in that regime.
pub fn joint_density_mc(
    params: &BivariateBetaParams,
    nx: usize,
    ny: usize,
    n_latent: usize,
    stream: &mut RngStream,
) -> Result<DensityGrid, Error> {
    if !(2..=MAX_GRID_RES).contains(&nx) || !(2..=MAX_GRID_RES).contains(&ny) {
        return Err(Error::domain(format!(
            "grid resolution must be in [2, {MAX_GRID_RES}], got {nx} x {ny}"
        )));
    }
    if n_latent == 0 {
        return Err(Error::domain("n_latent must be at least 1".to_string()));
    }
    let u1 = params.upsilon1();
    let u2 = params.upsilon2();
    let u3 = params.upsilon3();
    let neg_ln_b3 = -ln_beta3(u1, u2, u3)?;
    let samplers = [
        params.alpha1(),
        params.alpha2(),
        params.beta1(),
        params.beta2(),
        params.delta1(),
        params.delta2(),
    ]
    .map(|s| GammaSampler::new(s).expect("validated shapes"));

    let forker = stream.fork();
    let n_chunks = n_latent.div_ceil(TRIPLE_CHUNK);
    let run_chunk = |chunk: usize| -> Result<Vec<f64>, Error> {
        let count = (n_latent - chunk * TRIPLE_CHUNK).min(TRIPLE_CHUNK);
        let mut child = forker.stream(chunk as u64);
        let mut part = vec![0.0; nx * ny];
        for _ in 0..count {
            let t = draw_triple(&mut child, &samplers)?;
            accumulate_triple(&mut part, nx, ny, u1, u2, u3, neg_ln_b3, &t);
        }
        Ok(part)
    };

    let mut values = vec![0.0; nx * ny];
    let mut batch_start = 0;
    while batch_start < n_chunks {
        let batch_end = (batch_start + CHUNK_BATCH).min(n_chunks);

        #[cfg(feature = "parallel")]
        let parts: Vec<Result<Vec<f64>, Error>> = {
            use rayon::prelude::*;
            (batch_start..batch_end).into_par_iter().map(run_chunk).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Result<Vec<f64>, Error>> = (batch_start..batch_end).map(run_chunk).collect();

        // in-order fold keeps the floating-point result thread-invariant
        for part in parts {
            for (v, p) in values.iter_mut().zip(part?) {
                *v += p;
            }
        }
        batch_start = batch_end;
    }
    for v in &mut values {
        *v /= n_latent as f64;
    }
    Ok(DensityGrid { nx, ny, values })
}
