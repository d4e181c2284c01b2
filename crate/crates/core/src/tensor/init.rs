//! Weight initializers.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Tensor;

/// Uniform in `[lo, hi)`.
pub fn uniform<R: Rng + ?Sized>(shape: &[usize], lo: f32, hi: f32, rng: &mut R) -> Tensor {
    let n = shape.iter().product();
    let d: Vec<f32> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::new(shape, d).expect("positive shape")
}

/// Normal with the given std, redrawing anything beyond two std.
pub fn truncated_normal<R: Rng + ?Sized>(shape: &[usize], std: f32, rng: &mut R) -> Tensor {
    let n = shape.iter().product();
    let d: Vec<f32> = (0..n)
        .map(|_| loop {
            let z: f32 = StandardNormal.sample(rng);
            if z.abs() <= 2.0 {
                break z * std;
            }
        })
        .collect();
    Tensor::new(shape, d).expect("positive shape")
}

/// Xavier/Glorot uniform for a `[fan_in×fan_out]` matrix.
pub fn xavier_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let bound = crate::math::sqrt(6.0 / (fan_in + fan_out) as f32);
    uniform(&[fan_in, fan_out], -bound, bound, rng)
}
