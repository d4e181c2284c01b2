//! Slice-level numeric kernels shared by the tape and the tape-free
//! inference path. All matrices are row-major.

use crate::math;

/// `c[m×n] += a[m×k] · b[k×n]`.
pub fn matmul_acc(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            axpy(x, &b[p * n..(p + 1) * n], crow);
        }
    }
}

/// `c[k×n] += aᵀ · g` for `a[m×k]`, `g[m×n]`.
pub fn matmul_at_b_acc(a: &[f32], g: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            axpy(x, grow, &mut c[p * n..(p + 1) * n]);
        }
    }
}

/// `c[m×k] += g · bᵀ` for `g[m×n]`, `b[k×n]`.
pub fn matmul_a_bt_acc(g: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            c[i * k + p] += dot(grow, &b[p * n..(p + 1) * n]);
        }
    }
}

#[inline]
pub fn axpy(a: f32, x: &[f32], y: &mut [f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn dot(x: &[f32], y: &[f32]) -> f32 {
    // Four accumulators let the compiler vectorize without reassociation.
    let mut acc = [0.0f32; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += x[c * 4 + l] * y[c * 4 + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Valid 1-D convolution of `x[len×e]` with `w[(width·e)×f]` plus bias,
/// max-pooled over time. Writes the pooled values and the winning window
/// index per filter. `scratch` must hold `f` floats.
#[allow(clippy::too_many_arguments)]
pub fn conv_max_forward(
    x: &[f32],
    len: usize,
    e: usize,
    w: &[f32],
    b: &[f32],
    width: usize,
    out: &mut [f32],
    arg: &mut [usize],
    scratch: &mut [f32],
) {
    let f = b.len();
    let windows = len + 1 - width;
    let span = width * e;
    for t in 0..windows {
        scratch.copy_from_slice(b);
        let win = &x[t * e..t * e + span];
        for (k, &v) in win.iter().enumerate() {
            if v != 0.0 {
                axpy(v, &w[k * f..(k + 1) * f], scratch);
            }
        }
        for j in 0..f {
            if t == 0 || scratch[j] > out[j] {
                out[j] = scratch[j];
                arg[j] = t;
            }
        }
    }
}

/// Backward of [`conv_max_forward`]: routes `g[f]` to the winning windows.
#[allow(clippy::too_many_arguments)]
pub fn conv_max_backward(
    x: &[f32],
    e: usize,
    w: &[f32],
    width: usize,
    arg: &[usize],
    g: &[f32],
    dx: Option<&mut [f32]>,
    dw: Option<&mut [f32]>,
    db: Option<&mut [f32]>,
) {
    let f = g.len();
    let span = width * e;
    if let Some(db) = db {
        for j in 0..f {
            db[j] += g[j];
        }
    }
    if let Some(dw) = dw {
        for j in 0..f {
            if g[j] == 0.0 {
                continue;
            }
            let t = arg[j];
            let win = &x[t * e..t * e + span];
            for (k, &v) in win.iter().enumerate() {
                dw[k * f + j] += v * g[j];
            }
        }
    }
    if let Some(dx) = dx {
        for j in 0..f {
            if g[j] == 0.0 {
                continue;
            }
            let t = arg[j];
            for k in 0..span {
                dx[t * e + k] += w[k * f + j] * g[j];
            }
        }
    }
}

/// Gate activations of one LSTM step, kept for the backward pass.
/// Layout of `gates` is `[i | f | g | o]`, each `units` wide.
pub fn lstm_activate(pre: &mut [f32], c: &[f32], h_out: &mut [f32], c_out: &mut [f32], tanh_c: &mut [f32]) {
    let u = c.len();
    for j in 0..u {
        let i = math::sigmoid(pre[j]);
        let f = math::sigmoid(pre[u + j]);
        let g = math::tanh(pre[2 * u + j]);
        let o = math::sigmoid(pre[3 * u + j]);
        pre[j] = i;
        pre[u + j] = f;
        pre[2 * u + j] = g;
        pre[3 * u + j] = o;
        let cn = f * c[j] + i * g;
        c_out[j] = cn;
        let tc = math::tanh(cn);
        tanh_c[j] = tc;
        h_out[j] = o * tc;
    }
}

/// Gradient of the gate pre-activations given `dh'` and `dc'`. Also
/// returns the gradient flowing into the previous cell state.
pub fn lstm_gate_grads(gates: &[f32], c: &[f32], tanh_c: &[f32], dh: &[f32], dc: &[f32], dpre: &mut [f32], dc_prev: &mut [f32]) {
    let u = c.len();
    for j in 0..u {
        let (i, f, g, o) = (gates[j], gates[u + j], gates[2 * u + j], gates[3 * u + j]);
        let tc = tanh_c[j];
        let dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
        let d_o = dh[j] * tc;
        let d_i = dct * g;
        let d_g = dct * i;
        let d_f = dct * c[j];
        dc_prev[j] = dct * f;
        dpre[j] = d_i * i * (1.0 - i);
        dpre[u + j] = d_f * f * (1.0 - f);
        dpre[2 * u + j] = d_g * (1.0 - g * g);
        dpre[3 * u + j] = d_o * o * (1.0 - o);
    }
}

/// In-place softmax of one row; returns `log Σ exp(x)`.
pub fn softmax_row(x: &mut [f32]) -> f32 {
    let m = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut s = 0.0f32;
    for v in x.iter_mut() {
        *v = math::exp(*v - m);
        s += *v;
    }
    let inv = 1.0 / s;
    for v in x.iter_mut() {
        *v *= inv;
    }
    m + math::ln(s)
}

/// Index of the largest value; the first one on ties.
pub fn argmax(x: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}
