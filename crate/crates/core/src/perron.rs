//! Perron roots of nonnegative matrices by power iteration with Collatz–Wielandt bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Sparse nonnegative matrix in compressed row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, zeros dropped.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.iter().copied().filter(|e| e.2 != 0.0).collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t.push((i, j, v));
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &t)
    }

    /// Submatrix on `states`, in that order.
    pub fn restrict(&self, states: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (k, &s) in states.iter().enumerate() {
            local[s] = k;
        }
        let mut t = Vec::new();
        for (a, &i) in states.iter().enumerate() {
            for (j, v) in self.row(i) {
                if local[j] != usize::MAX {
                    t.push((a, local[j], v));
                }
            }
        }
        Self::from_triplets(states.len(), &t)
    }

    /// `y = W x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Adjacency lists of the positive entries.
    pub fn support(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.row(i).map(|(j, _)| j).collect()).collect()
    }
}

/// Certified bracket around a Perron root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusEnclosure {
    pub rho: f64,
    pub lo: f64,
    pub hi: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl RadiusEnclosure {
    pub fn zero() -> Self {
        RadiusEnclosure { rho: 0.0, lo: 0.0, hi: 0.0, converged: true, iterations: 0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tol: DEFAULT_TOL, max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

fn effective_tol(tol: f64, hi: f64) -> f64 {
    tol.max(16.0 * f64::EPSILON * hi)
}

/// Power iteration of `W^period` on one cyclic class of an irreducible component.
struct PowerState {
    sub: SparseMatrix,
    comp: Vec<usize>,
    idx0: Vec<usize>,
    period: usize,
    v: Vec<f64>,
    tmp: Vec<f64>,
    u: Vec<f64>,
}

impl PowerState {
    /// `comp` holds the component's states, `class0` the states of the class iterated on.
    fn new(w: &SparseMatrix, comp: &[usize], class0: &[usize], period: usize) -> Self {
        let sub = w.restrict(comp);
        let mut local = vec![usize::MAX; w.n()];
        for (k, &s) in comp.iter().enumerate() {
            local[s] = k;
        }
        let idx0: Vec<usize> = class0.iter().map(|&s| local[s]).collect();
        let m = comp.len();
        let mut v = vec![0.0; m];
        for &k in &idx0 {
            v[k] = 1.0;
        }
        PowerState { sub, comp: comp.to_vec(), idx0, period, v, tmp: vec![0.0; m], u: vec![0.0; m] }
    }

    /// One application of `W^period`; returns the Collatz–Wielandt bounds for the root of `W`.
    fn step(&mut self) -> (f64, f64) {
        self.u.copy_from_slice(&self.v);
        for _ in 0..self.period {
            self.sub.mul_vec(&self.u, &mut self.tmp);
            std::mem::swap(&mut self.u, &mut self.tmp);
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut top: f64 = 0.0;
        for &k in &self.idx0 {
            let ratio = self.u[k] / self.v[k];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            top = top.max(self.u[k]);
        }
        for &k in &self.idx0 {
            self.v[k] = self.u[k] / top;
        }
        let inv_p = 1.0 / self.period as f64;
        (lo.powf(inv_p), hi.powf(inv_p))
    }

    /// Current iterate on the full index range of a matrix of size `n`.
    fn vector(&self, n: usize) -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (k, &s) in self.comp.iter().enumerate() {
            full[s] = self.v[k];
        }
        full
    }
}

/// Iterates all states together, intersecting their brackets, until the width is below `tol`.
fn iterate(states: &mut [PowerState], tol: f64, max_iterations: usize) -> RadiusEnclosure {
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for it in 1..=max_iterations {
        for st in states.iter_mut() {
            let (l, h) = st.step();
            lo = lo.max(l);
            hi = hi.min(h);
        }
        if hi - lo <= effective_tol(tol, hi) {
            return RadiusEnclosure { rho: 0.5 * (lo + hi), lo, hi, converged: true, iterations: it };
        }
    }
    RadiusEnclosure { rho: 0.5 * (lo + hi), lo, hi, converged: false, iterations: max_iterations }
}

struct Component {
    states: Vec<usize>,
    period: usize,
    classes: Vec<Vec<usize>>,
}

fn nontrivial_components(w: &SparseMatrix) -> Vec<Component> {
    let adj = w.support();
    graph::strongly_connected_components(&adj)
        .into_iter()
        .filter(|c| graph::is_nontrivial(&adj, c))
        .map(|states| {
            let (period, class_of) = graph::period_and_classes(&adj, &states);
            let mut classes = vec![Vec::new(); period];
            for (&s, &k) in states.iter().zip(&class_of) {
                classes[k].push(s);
            }
            Component { states, period, classes }
        })
        .collect()
}

/// Spectral radius of a nonnegative matrix: the largest Perron root over its
/// strongly connected components. Components without a cycle contribute 0.
pub fn spectral_radius(w: &SparseMatrix, opts: PowerOptions) -> Result<RadiusEnclosure> {
    let comps = nontrivial_components(w);
    let encl: Vec<RadiusEnclosure> = comps
        .par_iter()
        .map(|c| {
            // row and column bounds bracket the same root; iterating both tightens the bracket
            let wt = w.transpose();
            let mut states = [
                PowerState::new(w, &c.states, &c.classes[0], c.period),
                PowerState::new(&wt, &c.states, &c.classes[0], c.period),
            ];
            iterate(&mut states, opts.tol, opts.max_iterations)
        })
        .collect();
    let mut out = RadiusEnclosure::zero();
    for e in &encl {
        out.lo = out.lo.max(e.lo);
        out.hi = out.hi.max(e.hi);
        out.iterations = out.iterations.max(e.iterations);
        out.converged &= e.converged;
    }
    // the max of several roots is bracketed by the max of the brackets
    out.rho = encl.iter().map(|e| e.rho).fold(0.0, f64::max);
    if !out.converged {
        return Err(Error::MaxIterations { iterations: out.iterations, width: out.width(), enclosure: out });
    }
    Ok(out)
}

/// Perron root with right and left eigenvectors of an irreducible matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronData {
    pub rho: f64,
    /// `W r = rho r`, normalized to `max r = 1`.
    pub r: Vec<f64>,
    /// `l^T W = rho l^T`, normalized to `l . r = 1`.
    pub l: Vec<f64>,
    pub enclosure: RadiusEnclosure,
    pub period: usize,
}

impl PerronData {
    /// Sup-norm residuals of the right and left eigen-equations.
    pub fn residuals(&self, w: &SparseMatrix) -> (f64, f64) {
        let n = w.n();
        let mut y = vec![0.0; n];
        w.mul_vec(&self.r, &mut y);
        let right = y.iter().zip(&self.r).map(|(a, b)| (a - self.rho * b).abs()).fold(0.0, f64::max);
        w.transpose().mul_vec(&self.l, &mut y);
        let left = y.iter().zip(&self.l).map(|(a, b)| (a - self.rho * b).abs()).fold(0.0, f64::max);
        (right, left)
    }
}

/// Fills the remaining cyclic classes from class 0 using `v_{C_j} = W v_{C_{j+1}} / rho`,
/// where `classes` is ordered so that `w` maps class `j` into class `j + 1`.
fn propagate(w: &SparseMatrix, v: &mut [f64], classes: &[Vec<usize>], rho: f64) {
    let p = classes.len();
    for j in (1..p).rev() {
        let succ = (j + 1) % p;
        let in_succ: std::collections::HashSet<usize> = classes[succ].iter().copied().collect();
        for &i in &classes[j] {
            let s: f64 = w.row(i).filter(|(c, _)| in_succ.contains(c)).map(|(c, x)| x * v[c]).sum();
            v[i] = s / rho;
        }
    }
}

pub fn perron_eigendata(w: &SparseMatrix, opts: PowerOptions) -> Result<PerronData> {
    let n = w.n();
    let comps = nontrivial_components(w);
    if comps.len() != 1 || comps[0].states.len() != n {
        return Err(Error::NotIrreducible);
    }
    let c = &comps[0];
    let inner_tol = opts.tol / 10.0;
    let mut right = [PowerState::new(w, &c.states, &c.classes[0], c.period)];
    let enc = iterate(&mut right, inner_tol, opts.max_iterations);
    let mut r = right[0].vector(n);
    if !enc.converged {
        return Err(Error::MaxIterations { iterations: enc.iterations, width: enc.width(), enclosure: enc });
    }
    let rho = enc.rho;
    propagate(w, &mut r, &c.classes, rho);

    // W^T maps class j + 1 into class j; reverse the class order for it
    let wt = w.transpose();
    let rev: Vec<Vec<usize>> = (0..c.period).map(|j| c.classes[(c.period - j) % c.period].clone()).collect();
    let mut left = [PowerState::new(&wt, &c.states, &rev[0], c.period)];
    let enc_t = iterate(&mut left, inner_tol, opts.max_iterations);
    let mut l = left[0].vector(n);
    if !enc_t.converged {
        return Err(Error::MaxIterations { iterations: enc_t.iterations, width: enc_t.width(), enclosure: enc_t });
    }
    propagate(&wt, &mut l, &rev, rho);

    let top = r.iter().copied().fold(0.0, f64::max);
    r.iter_mut().for_each(|x| *x /= top);
    let dot: f64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
    l.iter_mut().for_each(|x| *x /= dot);
    let enclosure = RadiusEnclosure {
        rho,
        lo: enc.lo.max(enc_t.lo),
        hi: enc.hi.min(enc_t.hi),
        converged: true,
        iterations: enc.iterations + enc_t.iterations,
    };
    Ok(PerronData { rho, r, l, enclosure, period: c.period })
}
