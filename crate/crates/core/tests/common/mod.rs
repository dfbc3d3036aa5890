//! Brute-force oracles shared by the integration tests. Each works on raw
//! matrices with explicit index arithmetic and never calls the library's
//! composition routines.
#![allow(dead_code)]

use kernelcorrupt::decision::LossFunction;
use kernelcorrupt::kernel::MarkovKernel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Column index of `(x, y)` in a kernel reading `reads` (a sub-list of `[X, Y]`).
pub fn arg(reads: &[&str], x: usize, y: usize, ny: usize) -> usize {
    match reads {
        ["X"] => x,
        ["Y"] => y,
        ["X", "Y"] => x * ny + y,
        other => panic!("unexpected domain {other:?}"),
    }
}

pub fn reads(k: &MarkovKernel<f64>) -> Vec<&str> {
    k.domain().factors().iter().map(|f| f.id()).collect()
}

/// `Σ_x̃ τ(args, x̃) Σ_ỹ λ(args, ỹ) ℓ(h(x̃), ỹ)` for every clean `(x, y)`.
pub fn double_sum(
    tau: &MarkovKernel<f64>,
    lambda: &MarkovKernel<f64>,
    loss: &LossFunction,
    h: &MarkovKernel<f64>,
) -> Vec<f64> {
    let (nx, ny) = (tau.rows(), lambda.rows());
    let (rt, rl) = (reads(tau), reads(lambda));
    let mut out = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let (at, al) = (arg(&rt, x, y, ny), arg(&rl, x, y, ny));
            let mut s = 0.0;
            for xt in 0..nx {
                let p: Vec<f64> = (0..ny).map(|k| *h.get(k, xt)).collect();
                for yt in 0..ny {
                    s += tau.get(xt, at) * lambda.get(yt, al) * loss.eval(&p, yt);
                }
            }
            out[x * ny + y] = s;
        }
    }
    out
}

/// Corrupted joint `Σ_{x,y} P(x,y) τ(args, x̃) λ(args, ỹ)` on `[X, Y]`.
pub fn corrupt_oracle(p: &[f64], tau: &MarkovKernel<f64>, lambda: &MarkovKernel<f64>) -> Vec<f64> {
    let (nx, ny) = (tau.rows(), lambda.rows());
    let (rt, rl) = (reads(tau), reads(lambda));
    let mut out = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let (at, al) = (arg(&rt, x, y, ny), arg(&rl, x, y, ny));
            for xt in 0..nx {
                for yt in 0..ny {
                    out[xt * ny + yt] += p[x * ny + y] * tau.get(xt, at) * lambda.get(yt, al);
                }
            }
        }
    }
    out
}

/// `M_b · M_a` for row-major matrices `a: r×c` and `b: s×r`.
pub fn matmul(b: &[f64], a: &[f64], s: usize, r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * c];
    for i in 0..s {
        for j in 0..c {
            for k in 0..r {
                out[i * c + j] += b[i * r + k] * a[k * c + j];
            }
        }
    }
    out
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Exhaustive minimum of `risks` with tie tolerance.
pub fn argmin(risks: &[f64], tie: f64) -> (f64, Vec<usize>) {
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    (best, (0..risks.len()).filter(|&i| risks[i] <= best + tie).collect())
}
