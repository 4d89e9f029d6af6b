mod support;

use bibeta::{
    conditional_joint_density, joint_density_mc, sample_bivariate_beta, BivariateBetaParams,
    RngStream,
};
use support::integrate;

// Tensored adaptive quadrature of the conditional density over its
// support rectangle (x between w1 and w3, y between w2 and w3). The
// density is only C^1 at the (w1, w2) vertex, which makes the
// quadrature error estimate optimistic; request a few orders tighter
// than the accuracy being asserted.
fn conditional_mass(p: &BivariateBetaParams, w1: f64, w2: f64, w3: f64, tol: f64) -> f64 {
    let (x_lo, x_hi) = (w1.min(w3), w1.max(w3));
    let (y_lo, y_hi) = (w2.min(w3), w2.max(w3));
    integrate(
        |y| {
            integrate(
                |x| conditional_joint_density(p, w1, w2, w3, x, y).unwrap(),
                x_lo,
                x_hi,
                tol / 50.0,
            )
        },
        y_lo,
        y_hi,
        tol,
    )
}

#[test]
fn conditional_density_integrates_to_one_over_its_support() {
    let cases = [
        // w3 below both weights
        ((2.0, 3.0, 1.5, 2.5, 1.2, 1.8), (0.7, 0.55, 0.25)),
        // reversed orientation: w3 above both weights
        ((1.5, 1.5, 2.0, 2.5, 1.6, 1.4), (0.3, 0.4, 0.85)),
        // mixed: w3 between w1 and w2
        ((2.2, 1.1, 1.3, 2.4, 1.5, 1.5), (0.8, 0.35, 0.5)),
    ];
    for ((a1, a2, b1, b2, d1, d2), (w1, w2, w3)) in cases {
        let p = BivariateBetaParams::new(a1, a2, b1, b2, d1, d2).unwrap();
        let mass = conditional_mass(&p, w1, w2, w3, 1e-9);
        assert!(
            (mass - 1.0).abs() <= 1e-6,
            "triple ({w1}, {w2}, {w3}): mass {mass}"
        );
    }
}

#[test]
fn grid_mass_is_close_to_one() {
    let p = BivariateBetaParams::new(2.0, 2.0, 2.0, 2.0, 2.0, 2.0).unwrap();
    let mut stream = RngStream::new(414, 0);
    let grid = joint_density_mc(&p, 200, 200, 10_000, &mut stream).unwrap();
    let mass = grid.mass();
    assert!((mass - 1.0).abs() <= 0.02, "grid mass {mass}");
}

#[test]
fn large_shared_shapes_pin_the_density_to_the_diagonal() {
    let p = BivariateBetaParams::new(0.5, 0.5, 0.5, 0.5, 30.0, 30.0).unwrap();
    let mut stream = RngStream::new(415, 0);
    let grid = joint_density_mc(&p, 200, 200, 10_000, &mut stream).unwrap();
    let (mut band, mut total) = (0.0, 0.0);
    for iy in 0..grid.ny() {
        for ix in 0..grid.nx() {
            let v = grid.value(ix, iy);
            total += v;
            if (grid.x_node(ix) - grid.y_node(iy)).abs() < 0.2 {
                band += v;
            }
        }
    }
    assert!(
        band / total > 0.9,
        "diagonal band holds {} of the mass",
        band / total
    );
}

#[test]
fn grid_block_masses_match_the_sampler() {
    // the density grid and the pair sampler describe the same law:
    // compare coarse block masses between the two estimates
    let p = BivariateBetaParams::new(2.0, 3.0, 1.5, 2.5, 1.2, 1.8).unwrap();

    let mut stream = RngStream::new(416, 0);
    let res = 80;
    let blocks = 4;
    let step = res / blocks;
    let grid = joint_density_mc(&p, res, res, 30_000, &mut stream).unwrap();

    let n = 1_000_000;
    let mut stream = RngStream::new(417, 0);
    let batch = sample_bivariate_beta(&mut stream, &p, n).unwrap();
    let mut counts = vec![0u32; blocks * blocks];
    for (&x, &y) in batch.xs.iter().zip(&batch.ys) {
        let bx = ((x * blocks as f64) as usize).min(blocks - 1);
        let by = ((y * blocks as f64) as usize).min(blocks - 1);
        counts[by * blocks + bx] += 1;
    }

    let mut worst = 0.0f64;
    for by in 0..blocks {
        for bx in 0..blocks {
            let mut got = 0.0;
            for iy in by * step..(by + 1) * step {
                for ix in bx * step..(bx + 1) * step {
                    got += grid.value(ix, iy);
                }
            }
            got /= (res * res) as f64;
            let want = counts[by * blocks + bx] as f64 / n as f64;
            worst = worst.max((got - want).abs());
        }
    }
    assert!(worst <= 0.01, "largest block-mass discrepancy {worst}");
}
