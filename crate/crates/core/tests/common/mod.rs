#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const K15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * K15_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]` with
/// absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: usize) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth - 1) + rec(f, m, b, 0.5 * tol, right, depth - 1)
    }
    rec(f, a, b, tol, gk15(f, a, b), 40)
}

/// Nested adaptive quadrature of `f(x, y)` over a rectangle.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: &F, x: (f64, f64), y: (f64, f64), tol: f64) -> f64 {
    let width = x.1 - x.0;
    let inner = |xv: f64| integrate(&|yv| f(xv, yv), y.0, y.1, tol / width);
    integrate(&inner, x.0, x.1, tol)
}

/// `log ∫∫ exp(log_f)` over a rectangle: the integrand is shifted by its
/// maximum over a coarse grid before integrating.
pub fn log_integrate_2d<F: Fn(f64, f64) -> f64>(log_f: &F, x: (f64, f64), y: (f64, f64), rel_tol: f64) -> f64 {
    let mut shift = f64::NEG_INFINITY;
    let n = 400;
    for i in 0..=n {
        for j in 0..=n {
            let xv = x.0 + (x.1 - x.0) * i as f64 / n as f64;
            let yv = y.0 + (y.1 - y.0) * j as f64 / n as f64;
            shift = shift.max(log_f(xv, yv));
        }
    }
    let area = (x.1 - x.0) * (y.1 - y.0);
    let g = |a: f64, b: f64| (log_f(a, b) - shift).exp();
    let value = integrate_2d(&g, x, y, rel_tol * 1e-3 * area.min(1.0));
    value.ln() + shift
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` draws from the equal-weight mixture of `N(μ_j, sd²)`, cycling
/// through components.
pub fn mixture_sample(means: &[f64], sd: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| Normal::new(means[i % means.len()], sd).unwrap().sample(&mut r))
        .collect()
}

/// Random DNA string of length `len`.
pub fn random_dna<R: Rng>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..4u8)).collect()
}

/// Mutate each site independently with probability `p` to a different letter.
pub fn mutate<R: Rng>(seq: &[u8], p: f64, rng: &mut R) -> Vec<u8> {
    seq.iter()
        .map(|&c| {
            if rng.random::<f64>() < p {
                (c + rng.random_range(1..4u8)) % 4
            } else {
                c
            }
        })
        .collect()
}

pub fn dna_string(seq: &[u8]) -> String {
    seq.iter().map(|&c| b"ACGT"[c as usize] as char).collect()
}

/// Jukes–Cantor transition probability from `a` to `b` over duration `t`
/// at mutation rate θ, from the matrix exponential of the rate matrix
/// with off-diagonal θ/6.
pub fn jc_transition(a: u8, b: u8, theta: f64, t: f64) -> f64 {
    let e = (-4.0 * theta / 6.0 * t).exp();
    if a == b {
        0.25 + 0.75 * e
    } else {
        0.25 - 0.25 * e
    }
}
