use cdn_core::tensor::{kernels, Tape, Tensor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn lstm_zero_weights_give_zero_state() {
    let mut t = Tape::new();
    let x = t.input(Tensor::vector(vec![0.3, -1.0]));
    let h = t.input(Tensor::zeros(&[3]));
    let c = t.input(Tensor::zeros(&[3]));
    let w = t.input(Tensor::zeros(&[5, 12]));
    let b = t.input(Tensor::zeros(&[12]));
    let (h1, c1) = t.lstm_cell_step(x, h, c, w, b).unwrap();
    assert_eq!(t.value(h1).data(), &[0.0; 3]);
    assert_eq!(t.value(c1).data(), &[0.0; 3]);
}

#[test]
fn lstm_scalar_by_hand() {
    // units = 1, input = 1: w rows are [x, h], columns [i f g o].
    let (x, h, c) = (0.5f64, -0.2f64, 0.7f64);
    let w = [[0.1, 0.2, 0.3, 0.4], [-0.5, 0.6, -0.7, 0.8]];
    let b = [0.01, -0.02, 0.03, -0.04];
    let pre: Vec<f64> = (0..4).map(|k| x * w[0][k] + h * w[1][k] + b[k]).collect();
    let (i, f, g, o) = (sigmoid(pre[0]), sigmoid(pre[1]), pre[2].tanh(), sigmoid(pre[3]));
    let c_next = f * c + i * g;
    let h_next = o * c_next.tanh();

    let mut t = Tape::new();
    let xv = t.input(Tensor::vector(vec![x as f32]));
    let hv = t.input(Tensor::vector(vec![h as f32]));
    let cv = t.input(Tensor::vector(vec![c as f32]));
    let wd: Vec<f32> = w.iter().flatten().map(|&v| v as f32).collect();
    let wv = t.input(Tensor::new(&[2, 4], wd).unwrap());
    let bv = t.input(Tensor::vector(b.iter().map(|&v| v as f32).collect()));
    let (h1, c1) = t.lstm_cell_step(xv, hv, cv, wv, bv).unwrap();
    assert!((t.value(c1).data()[0] as f64 - c_next).abs() < 1e-6);
    assert!((t.value(h1).data()[0] as f64 - h_next).abs() < 1e-6);
}

#[test]
fn cross_entropy_limits() {
    let mut t = Tape::new();
    let l = t.input(Tensor::vector(vec![0.0; 7]));
    let loss = t.softmax_cross_entropy(l, &[3]).unwrap();
    assert!((t.value(loss).data()[0] - (7.0f32).ln()).abs() < 1e-6);

    let l = t.input(Tensor::vector(vec![-50.0, 50.0, -50.0]));
    let loss = t.softmax_cross_entropy(l, &[1]).unwrap();
    assert!(t.value(loss).data()[0] < 1e-6);

    let l = t.input(Tensor::vector(vec![1.0, 2.0]));
    assert!(t.softmax_cross_entropy(l, &[2]).is_err());
}

#[test]
fn cross_entropy_gradient_sums_to_zero() {
    let mut t = Tape::new();
    let l = t.input(Tensor::new(&[2, 4], vec![0.3, -1.0, 2.0, 0.1, 5.0, 4.0, -3.0, 0.0]).unwrap());
    let loss = t.softmax_cross_entropy(l, &[2, 0]).unwrap();
    let g = t.backward(loss);
    let d = g.wrt(l).unwrap();
    for row in d.chunks(4) {
        assert!(row.iter().sum::<f32>().abs() < 1e-6);
    }
}

#[test]
fn kl_closed_form_points() {
    let mut t = Tape::new();
    let mu = t.input(Tensor::vector(vec![0.0, 0.0]));
    let ls = t.input(Tensor::vector(vec![0.0, 0.0]));
    let kl = t.kl_gaussian_to_standard(mu, ls).unwrap();
    assert_eq!(t.value(kl).data()[0], 0.0);
    let mu = t.input(Tensor::vector(vec![1.0]));
    let ls = t.input(Tensor::vector(vec![0.0]));
    let kl = t.kl_gaussian_to_standard(mu, ls).unwrap();
    assert!((t.value(kl).data()[0] - 0.5).abs() < 1e-7);
}

#[test]
fn kl_matches_monte_carlo() {
    // E_q[log q(z) - log p(z)] estimated from 10^6 draws of z ~ q.
    let mu = [0.7f64, -1.2, 0.1];
    let ls = [-0.4f64, 0.3, 0.9];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let mut est = 0.0f64;
    for (&m, &s) in mu.iter().zip(&ls) {
        let sigma = s.exp();
        let q = Normal::new(m, sigma).unwrap();
        let mut acc = 0.0;
        for _ in 0..n {
            let z: f64 = q.sample(&mut rng);
            let log_q = -0.5 * ((z - m) / sigma).powi(2) - s;
            let log_p = -0.5 * z * z;
            acc += log_q - log_p;
        }
        est += acc / n as f64;
    }
    let mut t = Tape::new();
    let mv = t.input(Tensor::vector(mu.iter().map(|&v| v as f32).collect()));
    let sv = t.input(Tensor::vector(ls.iter().map(|&v| v as f32).collect()));
    let kl = t.kl_gaussian_to_standard(mv, sv).unwrap();
    let closed = t.value(kl).data()[0] as f64;
    assert!((closed - est).abs() / closed < 0.02, "closed {closed} mc {est}");
}

#[test]
fn conv_zero_kernel_and_single_window() {
    let mut t = Tape::new();
    let x = t.input(Tensor::new(&[5, 2], vec![1.0; 10]).unwrap());
    let w = t.input(Tensor::zeros(&[6, 1]));
    let b = t.input(Tensor::zeros(&[1]));
    let y = t.conv1d_bank(x, &[(w, b)]).unwrap();
    assert_eq!(t.value(y).data(), &[0.0]);

    // seq_len == width: the single window is the whole sequence.
    let x = t.input(Tensor::new(&[3, 1], vec![1.0, 2.0, 3.0]).unwrap());
    let w = t.input(Tensor::new(&[3, 1], vec![1.0, 10.0, 100.0]).unwrap());
    let b = t.input(Tensor::vector(vec![0.5]));
    let y = t.conv1d_bank(x, &[(w, b)]).unwrap();
    assert_eq!(t.value(y).data(), &[321.5]);

    let w = t.input(Tensor::zeros(&[4, 1]));
    assert!(t.conv1d_bank(x, &[(w, b)]).is_err());
}

#[test]
fn shape_errors() {
    let mut t = Tape::new();
    let a = t.input(Tensor::zeros(&[2, 3]));
    let b = t.input(Tensor::zeros(&[2, 3]));
    assert!(t.matmul(a, b).is_err());
    let v = t.input(Tensor::zeros(&[4]));
    assert!(t.add(a, v).is_err());
    assert!(t.embedding_lookup(a, &[2]).is_err());
}

#[test]
fn forward_is_deterministic() {
    let run = || {
        let mut t = Tape::new();
        let x = t.input(Tensor::new(&[2, 3], vec![0.1, 0.2, -0.3, 0.4, 0.5, 0.6]).unwrap());
        let w = t.input(Tensor::new(&[3, 2], vec![1.0, -1.0, 0.5, 0.25, -2.0, 3.0]).unwrap());
        let y = t.matmul(x, w).unwrap();
        let y = t.tanh(y);
        let s = t.sum(y);
        let g = t.backward(s);
        (t.value(s).clone(), g.wrt(w).unwrap().to_vec())
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn kl_is_nonnegative(pairs in prop::collection::vec((-10.0f32..10.0, -8.0f32..8.0), 1..20)) {
        let mut t = Tape::new();
        let mu = t.input(Tensor::vector(pairs.iter().map(|p| p.0).collect()));
        let ls = t.input(Tensor::vector(pairs.iter().map(|p| p.1).collect()));
        let kl = t.kl_gaussian_to_standard(mu, ls).unwrap();
        prop_assert!(t.value(kl).data()[0] >= 0.0);
    }

    #[test]
    fn softmax_is_a_distribution(row in prop::collection::vec(-30.0f32..30.0, 1..40)) {
        let mut p = row.clone();
        kernels::softmax_row(&mut p);
        prop_assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }
}
