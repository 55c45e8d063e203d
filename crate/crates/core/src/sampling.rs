//! Seeded, reproducible sampling helpers shared by the check routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in the box [-radius, radius]^dim.
pub(crate) fn in_box(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect()
}

/// Uniform direction on the unit sphere S^{dim-1}; for dim = 1 a fair sign.
pub(crate) fn unit_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform sample in the Euclidean ball of the given radius.
pub(crate) fn in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let dir = unit_sphere(rng, dim);
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    dir.into_iter().map(|x| x * r).collect()
}
