//! Shared fixtures for the benchmarks.

use kcoreset::{generate_instance, CenterSet, InstanceSpec, Shape, WeightedPointSet};

/// Three well separated planar blobs.
pub fn blobs(n: usize, seed: u64) -> WeightedPointSet {
    generate_instance(&InstanceSpec {
        n,
        dim: 2,
        seed,
        shape: Shape::Blobs {
            blobs: 3,
            separation: 40.0,
            sigma: 4.0,
        },
    })
    .expect("valid instance spec")
}

/// Uniform sites in `[0, side]^2`.
pub fn uniform_sites(n: usize, side: f64, seed: u64) -> CenterSet {
    generate_instance(&InstanceSpec {
        n,
        dim: 2,
        seed,
        shape: Shape::Uniform { side },
    })
    .expect("valid instance spec")
    .to_centers()
}
