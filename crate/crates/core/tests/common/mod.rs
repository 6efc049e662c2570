#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermoshift::treelab::{CoreVertex, Next, Ray, Tail, TreeSystem, WeightSequence};

fn modulus(rng: &mut ChaCha8Rng) -> f64 {
    [0.5, 1.0, 1.5, 2.0, 3.0][rng.gen_range(0..5)]
}

fn phase(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn weight(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = modulus(rng);
    phase(rng, r)
}

fn sequence(rng: &mut ChaCha8Rng) -> WeightSequence {
    let pre = rng.gen_range(0..3);
    let preperiod = (0..pre)
        .map(|_| if rng.gen_bool(0.2) { Complex64::new(0.0, 0.0) } else { weight(rng) })
        .collect();
    let len = rng.gen_range(1..3);
    let period = (0..len).map(|_| weight(rng)).collect();
    WeightSequence::new(preperiod, period).unwrap()
}

/// Random finitely presented system: one to three chains of core vertices, each fed by one or
/// two rays and ending in a tail or leaving the system.
pub fn random_tree(seed: u64) -> TreeSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chains = rng.gen_range(1..4);
    let mut core = Vec::new();
    let mut rays = Vec::new();
    let mut tails = Vec::new();
    for c in 0..chains {
        let len = rng.gen_range(1..3);
        let start = core.len();
        for k in 0..len {
            let i = start + k;
            let next = if k + 1 < len {
                Next::Core(i + 1)
            } else if rng.gen_bool(0.75) {
                tails.push(Tail { name: format!("t{c}"), origin: i, weights: sequence(&mut rng) });
                Next::Tail(tails.len() - 1)
            } else {
                Next::Open
            };
            let w = if rng.gen_bool(0.1) { 0.0 } else { modulus(&mut rng) };
            core.push(CoreVertex { name: format!("c{i}"), weight: phase(&mut rng, w), next });
        }
        rays.push(Ray { name: format!("r{c}"), attach: start, weights: sequence(&mut rng) });
        if rng.gen_bool(0.4) {
            let attach = start + rng.gen_range(0..len);
            rays.push(Ray { name: format!("r{c}b"), attach, weights: sequence(&mut rng) });
        }
    }
    TreeSystem::new(core, rays, tails).unwrap()
}

use std::sync::Arc;
use thermoshift::potentials::{CylinderFunction, ValueKind};
use thermoshift::sft::{classify, TransitionMatrix, ValidateFlags};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 0-1 matrix without zero rows, edge density `p`.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: f64) -> TransitionMatrix {
    loop {
        let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..n).map(|_| rng.gen_bool(p) as u8).collect()).collect();
        if let Ok(a) = TransitionMatrix::validate(&rows, ValidateFlags::default()) {
            return a;
        }
    }
}

/// Random matrix in which every state also has a predecessor, so cocycles exist.
pub fn random_onto_matrix(rng: &mut ChaCha8Rng, n: usize, p: f64) -> TransitionMatrix {
    loop {
        let a = random_matrix(rng, n, p);
        if (0..n).all(|j| a.in_degree(j) > 0) {
            return a;
        }
    }
}

pub fn random_irreducible(rng: &mut ChaCha8Rng, n: usize) -> TransitionMatrix {
    loop {
        let a = random_matrix(rng, n, 0.55);
        if classify(&a).sccs.len() == 1 {
            return a;
        }
    }
}

/// Strictly positive depth-2 weight with values in `[lo, hi]`.
pub fn random_weight(rng: &mut ChaCha8Rng, a: &Arc<TransitionMatrix>, lo: f64, hi: f64) -> CylinderFunction {
    let vals: Vec<f64> = (0..a.edge_count()).map(|_| rng.gen_range(lo..hi)).collect();
    CylinderFunction::from_values(a, 2, ValueKind::NonNegative, vals).unwrap()
}

/// Random depth-2 cocycle: for each state, a random distribution over its predecessors.
pub fn random_cocycle(rng: &mut ChaCha8Rng, a: &Arc<TransitionMatrix>) -> CylinderFunction {
    let n = a.n();
    let mut p = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pre = a.predecessors(j);
        let w: Vec<f64> = pre.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        for (&i, x) in pre.iter().zip(w) {
            p[i][j] = x / s;
        }
    }
    CylinderFunction::from_fn(a, 2, ValueKind::NonNegative, |w| p[w[0]][w[1]]).unwrap()
}

pub fn dense(a: &TransitionMatrix) -> Vec<Vec<f64>> {
    (0..a.n()).map(|i| (0..a.n()).map(|j| a.get(i, j) as u8 as f64).collect()).collect()
}

/// Characteristic polynomial `det(xI - M)` by Faddeev–LeVerrier, coefficients from `x^n` down.
pub fn char_poly(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let mut c = vec![1.0];
    let mut mk = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = &mat * (&mk + nalgebra::DMatrix::identity(n, n) * c[k - 1]);
        c.push(-mk.trace() / k as f64);
    }
    c
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &a| acc * x + a)
}

/// Perron root by exact reachability classes and a bisected root of each class's
/// characteristic polynomial.
pub fn perron_root_by_char_poly(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = m[i][j] > 0.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut best: f64 = 0.0;
    let mut done = vec![false; n];
    for s in 0..n {
        if done[s] || !reach[s][s] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&t| t == s || (reach[s][t] && reach[t][s])).collect();
        for &t in &class {
            done[t] = true;
        }
        let sub: Vec<Vec<f64>> = class.iter().map(|&i| class.iter().map(|&j| m[i][j]).collect()).collect();
        let c = char_poly(&sub);
        // the Perron root is a simple root, the largest real one, and at most the largest row sum;
        // scan down from that bound to the first sign change and bisect there
        let top = sub.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max) * (1.0 + 1e-9) + 1e-12;
        let steps = 1 << 14;
        let mut hi = top;
        let mut lo = top;
        for k in (0..steps).rev() {
            lo = top * k as f64 / steps as f64;
            if poly_eval(&c, lo) <= 0.0 {
                break;
            }
            hi = lo;
        }
        assert!(poly_eval(&c, hi) > 0.0 && poly_eval(&c, lo) <= 0.0, "no sign change below {top}");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly_eval(&c, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        best = best.max(0.5 * (lo + hi));
    }
    best
}
