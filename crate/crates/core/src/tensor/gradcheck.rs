//! Central finite-difference gradient check.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a - n| / max(|a|, |n|, floor)` over all input elements.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Elements skipped because the objective has a kink within `±eps`
    /// (a ReLU crossing zero, a max-pool winner changing, a clamp edge).
    pub kinks: usize,
    pub passed: bool,
}

/// Denominator floor: relative error is measured against at least this
/// magnitude so that near-zero gradients are compared absolutely.
pub const REL_FLOOR: f64 = 1.0;

/// One-sided slopes that disagree by more than this fraction (of the same
/// floored magnitude) mark a kink. Smooth ops at `eps = 1e-3` disagree by
/// about `eps·|f''|`, far below it.
pub const KINK_RATIO: f64 = 1e-2;

/// Checks the gradient of `f` at `inputs`.
///
/// The output is reduced to a scalar with seeded random weights
/// `r ∈ [-1, 1)`, so every output element contributes. Each input element
/// is perturbed by `±eps`; the forward sum is accumulated in f64.
pub fn grad_check<F>(f: F, inputs: &[Tensor], eps: f32, tolerance: f64, seed: u64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.input(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f32> = (0..tape.value(out).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let grads = tape.backward_with(out, r.clone());
    let analytic: Vec<Vec<f32>> =
        vars.iter().zip(inputs).map(|(&v, t)| grads.wrt(v).map_or_else(|| alloc::vec![0.0; t.len()], |g| g.to_vec())).collect();

    let objective = |xs: &[Tensor]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|t| tape.input(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data().iter().zip(&r).map(|(&o, &w)| o as f64 * w as f64).sum())
    };

    let mut xs: Vec<Tensor> = inputs.to_vec();
    let (mut max_rel, mut max_abs, mut checked, mut kinks) = (0.0f64, 0.0f64, 0, 0);
    for i in 0..xs.len() {
        for (j, &g) in analytic[i].iter().enumerate() {
            let x0 = xs[i].data()[j];
            let (hi, lo) = (x0 + eps, x0 - eps);
            xs[i].data_mut()[j] = hi;
            let fp = objective(&xs)?;
            xs[i].data_mut()[j] = lo;
            let fm = objective(&xs)?;
            xs[i].data_mut()[j] = x0;
            let f0 = objective(&xs)?;
            let up = (fp - f0) / (hi as f64 - x0 as f64);
            let down = (f0 - fm) / (x0 as f64 - lo as f64);
            if (up - down).abs() > KINK_RATIO * up.abs().max(down.abs()).max(REL_FLOOR) {
                kinks += 1;
                continue;
            }
            let numeric = (fp - fm) / (hi as f64 - lo as f64);
            let a = g as f64;
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
            checked += 1;
        }
    }
    Ok(GradCheckReport { max_rel_error: max_rel, max_abs_error: max_abs, checked, kinks, passed: max_rel < tolerance })
}

/// [`grad_check`] at inputs drawn uniformly from `[-1, 1)` with the given shapes.
pub fn grad_check_random<F>(f: F, shapes: &[&[usize]], tolerance: f64, seed: u64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Result<Var, TensorError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let inputs: Vec<Tensor> = shapes.iter().map(|s| super::init::uniform(s, -1.0, 1.0, &mut rng)).collect();
    grad_check(f, &inputs, 1e-3, tolerance, seed)
}
