//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's oracle module.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use vpsa_core::{Dataset, ParticleCloud};

/// Law of one coordinate of a real particle of the virtual particle scheme,
/// obtained by propagating the full covariance matrix of
/// `(X, Y^(k), …, Y^(T))` through every affine step. Returns `(mean, var)`
/// at steps `0..=T`. Quadratic case, one coordinate.
pub fn brute_force_vpsa(
    lambda_v: f64,
    alpha: f64,
    sigma: f64,
    eta: f64,
    steps: usize,
    m0: f64,
    v0: f64,
) -> Vec<(f64, f64)> {
    let a = 1.0 - eta * (lambda_v + alpha);
    let b = eta * alpha;
    let q = sigma * sigma * eta;
    // Live entities: real particle first, then virtual k..=T.
    let mut len = steps + 2;
    let mut mean = vec![m0; len];
    let mut cov = vec![0.0; len * len];
    for i in 0..len {
        cov[i * len + i] = v0;
    }
    let mut out = vec![(m0, v0)];
    for _ in 0..steps {
        // Witness is entry 1; survivors are entries 0, 2, 3, ….
        let keep: Vec<usize> = std::iter::once(0).chain(2..len).collect();
        let nl = keep.len();
        let w = 1;
        let sw = |i: usize| cov[i * len + w];
        let sww = cov[w * len + w];
        let mut next = vec![0.0; nl * nl];
        for (p, &i) in keep.iter().enumerate() {
            let siw = sw(i);
            for (r, &j) in keep.iter().enumerate() {
                let mut v = a * a * cov[i * len + j] + a * b * (siw + sw(j)) + b * b * sww;
                if p == r {
                    v += q;
                }
                next[p * nl + r] = v;
            }
        }
        let mw = mean[w];
        mean = keep.iter().map(|&i| a * mean[i] + b * mw).collect();
        cov = next;
        len = nl;
        out.push((mean[0], cov[0]));
    }
    out
}

/// Same for the `n`-particle system with exact empirical drift: the full
/// `n × n` covariance under `X ← (aI + (b/n)11ᵀ)X + σ√η Z`. Returns
/// `(mean, var, cross_cov)` per step.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_pmkv(
    lambda_v: f64,
    alpha: f64,
    sigma: f64,
    eta: f64,
    steps: usize,
    n: usize,
    m0: f64,
    v0: f64,
) -> Vec<(f64, f64, f64)> {
    let a = 1.0 - eta * (lambda_v + alpha);
    let b = eta * alpha;
    let q = sigma * sigma * eta;
    let map: Vec<f64> = (0..n * n)
        .map(|e| if e / n == e % n { a + b / n as f64 } else { b / n as f64 })
        .collect();
    let mut cov: Vec<f64> = (0..n * n).map(|e| if e / n == e % n { v0 } else { 0.0 }).collect();
    let mut mean = m0;
    let mut out = vec![(m0, v0, 0.0)];
    let matmul = |x: &[f64], y: &[f64], ty: bool| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                z[i * n + j] = (0..n)
                    .map(|k| x[i * n + k] * if ty { y[j * n + k] } else { y[k * n + j] })
                    .sum();
            }
        }
        z
    };
    for _ in 0..steps {
        cov = matmul(&matmul(&map, &cov, false), &map, true);
        for i in 0..n {
            cov[i * n + i] += q;
        }
        mean *= a + b;
        let cross = if n > 1 { cov[1] } else { 0.0 };
        out.push((mean, cov[0], cross));
    }
    out
}

/// `KL(N(m1, v1 I) ‖ N(m2, v2 I))` in `d` dimensions, with `m` given as the
/// squared mean difference.
pub fn kl_isotropic(d: usize, mean_gap_sq: f64, v1: f64, v2: f64) -> f64 {
    let d = d as f64;
    0.5 * (d * v1 / v2 + mean_gap_sq / v2 - d + d * (v2 / v1).ln())
}

/// `m` features uniform in the unit disk, labelled by a teacher network of
/// four neurons clustered near `(2, 1)` with activation `amp·tanh`.
pub fn teacher_dataset(m: usize, amp: f64, seed: u64) -> Dataset {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let teacher: Vec<[f64; 2]> = (0..4)
        .map(|_| [2.0 + rng.random_range(-0.5..0.5), 1.0 + rng.random_range(-0.5..0.5)])
        .collect();
    let rows: Vec<(Vec<f64>, f64)> = (0..m)
        .map(|_| {
            let r: f64 = rng.random::<f64>().sqrt();
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let z = vec![r * th.cos(), r * th.sin()];
            let w = teacher.iter().map(|t| amp * (t[0] * z[0] + t[1] * z[1]).tanh()).sum::<f64>() / 4.0;
            (z, w)
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

/// Cloud of `n` points uniform in `[-s, s]^d`.
pub fn uniform_cloud(n: usize, d: usize, s: f64, rng: &mut impl Rng) -> ParticleCloud {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-s..s)).collect()).collect();
    ParticleCloud::from_points(&pts).unwrap()
}

/// Sample mean and unbiased variance of one coordinate.
pub fn moments(cloud: &ParticleCloud, c: usize) -> (f64, f64) {
    let n = cloud.len() as f64;
    let m = cloud.iter().map(|p| p[c]).sum::<f64>() / n;
    let v = cloud.iter().map(|p| (p[c] - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Sample covariance of coordinates `a`, `b` and the standard error of that
/// estimate from the fourth moments.
pub fn covariance_with_se(cloud: &ParticleCloud, a: usize, b: usize) -> (f64, f64) {
    let n = cloud.len() as f64;
    let (ma, _) = moments(cloud, a);
    let (mb, _) = moments(cloud, b);
    let prods: Vec<f64> = cloud.iter().map(|p| (p[a] - ma) * (p[b] - mb)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let mean_prod = prods.iter().sum::<f64>() / n;
    let var_prod = prods.iter().map(|v| (v - mean_prod).powi(2)).sum::<f64>() / (n - 1.0);
    (c, (var_prod / n).sqrt())
}

/// Sample mean and standard deviation of a list.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
