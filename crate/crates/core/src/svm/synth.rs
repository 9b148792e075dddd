//! Deterministic two-blob synthetic datasets for end-to-end runs: one
//! Gaussian blob per class at `(+c, +c)` and `(-c, -c)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::svm::Dataset;

/// `n_per_class` points per class, class centers at distance
/// `2 * sqrt(2) * center`, isotropic Gaussian noise with the given
/// standard deviation. `center = 3, noise = 0.5` is cleanly separable;
/// `center = 0.6, noise = 1.2` overlaps heavily.
pub fn blobs(n_per_class: usize, center: f64, noise: f64, seed: u64, name: &str) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in [1i8, -1] {
        let c = center * class as f64;
        for _ in 0..n_per_class {
            let (z1, z2) = gaussian_pair(&mut rng);
            features.push(vec![c + noise * z1, c + noise * z2]);
            labels.push(class);
        }
    }
    Dataset {
        features,
        labels,
        name: name.to_string(),
    }
}

/// Box-Muller transform.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}
