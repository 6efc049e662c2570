//! Markov measures, entropy, the variational search and t-entropy.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph;
use crate::perron::RadiusEnclosure;
use crate::potentials::CylinderFunction;
use crate::ruelle::{ruelle_apply, BlockPresentation};
use crate::sft::{admissible_words, TransitionMatrix, ValidateFlags, DEFAULT_DEPTH_CAP};

/// Tolerance for row sums and stationarity of Markov measures.
pub const MEASURE_TOL: f64 = 1e-12;

/// Shift-invariant Markov measure: row-stochastic `Q` on the edges of `A` and `pi Q = pi`.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    matrix: Arc<TransitionMatrix>,
    q: Vec<Vec<f64>>,
    pi: Vec<f64>,
    ergodic: bool,
}

fn check_stochastic(a: &TransitionMatrix, q: &[Vec<f64>]) -> Result<()> {
    let n = a.n();
    if q.len() != n || q.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter(format!("Q must be {n} x {n}")));
    }
    for (i, row) in q.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !(x >= 0.0) {
                return Err(Error::NotStochastic { row: i, sum: row.iter().sum() });
            }
            if x > 0.0 && !a.get(i, j) {
                return Err(Error::OffSupport(i, j));
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(Error::NotStochastic { row: i, sum });
        }
    }
    Ok(())
}

fn support_graph(q: &[Vec<f64>]) -> Vec<Vec<usize>> {
    q.iter().map(|row| (0..row.len()).filter(|&j| row[j] > 0.0).collect()).collect()
}

/// Stationary vector of a row-stochastic matrix.
///
/// Each closed class is solved by power iteration on the lazy chain `(I + Q) / 2`; with several
/// closed classes the uniform mixture is returned and the flag is `false`.
pub fn stationary(q: &[Vec<f64>]) -> Result<(Vec<f64>, bool)> {
    const MAX_ITERATIONS: usize = 1_000_000;
    let n = q.len();
    let adj = support_graph(q);
    let sccs = graph::strongly_connected_components(&adj);
    let comp_of = graph::component_map(&sccs, n);
    let dag = graph::condensation(&adj, &comp_of, sccs.len());
    let closed: Vec<&Vec<usize>> = sccs.iter().enumerate().filter(|(c, _)| dag[*c].is_empty()).map(|(_, s)| s).collect();
    let mut pi = vec![0.0; n];
    for class in &closed {
        let mut x = vec![0.0; n];
        for &s in class.iter() {
            x[s] = 1.0 / class.len() as f64;
        }
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let mut y = vec![0.0; n];
            for &i in class.iter() {
                for &j in &adj[i] {
                    y[j] += x[i] * q[i][j];
                }
            }
            let mut change: f64 = 0.0;
            for &s in class.iter() {
                let next = 0.5 * (x[s] + y[s]);
                change = change.max((y[s] - x[s]).abs());
                x[s] = next;
            }
            if change <= 0.1 * MEASURE_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::MaxIterations {
                iterations: MAX_ITERATIONS,
                width: f64::NAN,
                enclosure: RadiusEnclosure::zero(),
            });
        }
        let s: f64 = x.iter().sum();
        for &k in class.iter() {
            pi[k] += x[k] / s / closed.len() as f64;
        }
    }
    Ok((pi, closed.len() == 1))
}

impl MarkovMeasure {
    /// Validates `Q` and `pi`.
    pub fn new(matrix: Arc<TransitionMatrix>, q: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        check_stochastic(&matrix, &q)?;
        let n = matrix.n();
        if pi.len() != n || pi.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter("pi must be a nonnegative vector over states".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::NotStationary((total - 1.0).abs()));
        }
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let s: f64 = (0..n).map(|i| pi[i] * q[i][j]).sum();
            residual = residual.max((s - pi[j]).abs());
        }
        if residual > MEASURE_TOL {
            return Err(Error::NotStationary(residual));
        }
        let adj = support_graph(&q);
        let sccs = graph::strongly_connected_components(&adj);
        let comp_of = graph::component_map(&sccs, n);
        let mut charged = (0..n).filter(|&i| pi[i] > 0.0).map(|i| comp_of[i]).collect::<Vec<_>>();
        charged.sort_unstable();
        charged.dedup();
        Ok(MarkovMeasure { matrix, q, pi, ergodic: charged.len() == 1 })
    }

    /// Measure with the stationary vector computed by [`stationary`].
    pub fn from_q(matrix: Arc<TransitionMatrix>, q: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic(&matrix, &q)?;
        let (pi, _) = stationary(&q)?;
        Self::new(matrix, q, pi)
    }

    /// Bernoulli measure with the given symbol probabilities on a full shift.
    pub fn bernoulli(matrix: Arc<TransitionMatrix>, p: &[f64]) -> Result<Self> {
        let q = vec![p.to_vec(); matrix.n()];
        Self::new(matrix, q, p.to_vec())
    }

    pub fn matrix(&self) -> &Arc<TransitionMatrix> {
        &self.matrix
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    pub fn cylinder_mass(&self, word: &[usize]) -> Result<f64> {
        if !self.matrix.is_admissible(word) {
            return Err(Error::InadmissibleWord(word.to_vec()));
        }
        Ok(word.windows(2).fold(self.pi[word[0]], |m, e| m * self.q[e[0]][e[1]]))
    }

    /// Kolmogorov–Sinai entropy `-sum_i pi_i sum_j q_ij ln q_ij`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (p, row) in self.pi.iter().zip(&self.q) {
            for &x in row {
                if x > 0.0 && *p > 0.0 {
                    h -= p * x * x.ln();
                }
            }
        }
        h.max(0.0)
    }

    /// `sum_w mu(C_w) f(w)` over the words of `f`; `-inf` if a charged word has `f = -inf`.
    pub fn integrate(&self, f: &CylinderFunction) -> Result<f64> {
        if **f.matrix() != *self.matrix {
            return Err(Error::MatrixMismatch);
        }
        let mut s = 0.0;
        for (w, &v) in f.words().iter().zip(f.values()) {
            let m = self.cylinder_mass(w)?;
            if m > 0.0 {
                if v == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                s += m * v;
            }
        }
        Ok(s)
    }
}

/// Budget and seed of the variational search.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { restarts: 200, steps: 5000, seed: 0 }
    }
}

/// Best Markov measure found by [`variational_search`].
#[derive(Clone, Debug)]
pub struct VariationalResult {
    /// `integrate(b) + entropy` of the best measure.
    pub value: f64,
    /// The measure, on the block graph of depth `block_depth`.
    pub measure: MarkovMeasure,
    pub block_depth: usize,
    pub best_restart: usize,
}

/// One communicating class of finite-weight edges.
struct SearchClass {
    states: Vec<usize>,
    /// Allowed targets (local indices) and weights per local row.
    targets: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Value, stationary vector and bias of a policy on a class.
struct Evaluation {
    value: f64,
    bias: Vec<f64>,
}

fn evaluate(class: &SearchClass, q: &[Vec<f64>]) -> Option<Evaluation> {
    let n = class.states.len();
    let mut reward = vec![0.0; n];
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (k, &j) in class.targets[i].iter().enumerate() {
            let x = q[i][k];
            p[(i, j)] += x;
            if x > 0.0 {
                reward[i] += x * class.weights[i][k] - xlogx(x);
            }
        }
    }
    // stationary vector: pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
    let mut m = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = m.lu().solve(&rhs)?;
    let value: f64 = (0..n).map(|i| pi[i] * reward[i]).sum();
    // bias: (I - P + 1 pi^T) h = reward - value
    let mut z = DMatrix::<f64>::identity(n, n) - &p;
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] += pi[j];
        }
    }
    let r = DVector::from_iterator(n, reward.iter().map(|x| x - value));
    let h = z.lu().solve(&r)?;
    Some(Evaluation { value, bias: h.iter().copied().collect() })
}

/// Euclidean projection onto `{x >= floor, sum x = 1}`.
fn project_simplex(y: &[f64], floor: f64) -> Vec<f64> {
    let k = y.len();
    let mass = 1.0 - floor * k as f64;
    let mut s: Vec<f64> = y.iter().map(|v| v - floor).collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - mass) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - floor - theta).max(0.0) + floor).collect()
}

const FLOOR: f64 = 1e-15;

/// Preconditioned projected gradient ascent from one starting point.
fn ascend(class: &SearchClass, mut q: Vec<Vec<f64>>, steps: usize) -> (f64, Vec<Vec<f64>>) {
    let n = class.states.len();
    let Some(mut eval) = evaluate(class, &q) else {
        return (f64::NEG_INFINITY, q);
    };
    let mut t: f64 = 1.0;
    for _ in 0..steps {
        // direction q_ij (g_ij - mean_q g_i) with g_ij = b_ij - ln q_ij + h_j
        let mut dir = Vec::with_capacity(n);
        for i in 0..n {
            let g: Vec<f64> = class.targets[i]
                .iter()
                .zip(&class.weights[i])
                .zip(&q[i])
                .map(|((&j, &b), &x)| b - x.max(FLOOR).ln() + eval.bias[j])
                .collect();
            let mean: f64 = g.iter().zip(&q[i]).map(|(a, b)| a * b).sum();
            dir.push(g.iter().zip(&q[i]).map(|(a, x)| x * (a - mean)).collect::<Vec<f64>>());
        }
        let mut improved = None;
        let mut step = t;
        for _ in 0..60 {
            let cand: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    if q[i].len() == 1 {
                        return vec![1.0];
                    }
                    let y: Vec<f64> = q[i].iter().zip(&dir[i]).map(|(x, d)| x + step * d).collect();
                    project_simplex(&y, FLOOR)
                })
                .collect();
            if let Some(e) = evaluate(class, &cand) {
                if e.value > eval.value {
                    improved = Some((cand, e));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, e)) = improved else { break };
        let gain = e.value - eval.value;
        q = cand;
        eval = e;
        t = (step * 2.0).min(1.0);
        if gain < 1e-12 {
            break;
        }
    }
    (eval.value, q)
}

fn dirichlet_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    project_simplex(&g.iter().map(|x| x / s).collect::<Vec<_>>(), FLOOR)
}

/// Searches Markov measures on the block graph of `b` for the largest `integrate(b) + entropy`.
///
/// Each restart draws rows from Dirichlet(1, ..., 1) and runs projected gradient ascent. Every
/// value found is that of an actual invariant measure, so it never exceeds the pressure.
pub fn variational_search(b: &CylinderFunction, opts: SearchOptions) -> Result<VariationalResult> {
    let pres = BlockPresentation::for_depth(b.matrix(), b.depth())?;
    let nb = pres.len();
    let mut fin_adj = vec![Vec::new(); nb];
    let mut edge_b = vec![Vec::new(); nb];
    for (u, &(i, j)) in pres.edge_words.words().iter().zip(&pres.edges) {
        let v = b.eval(u)?;
        if v > f64::NEG_INFINITY {
            fin_adj[i].push(j);
            edge_b[i].push((j, v));
        }
    }
    let classes: Vec<SearchClass> = graph::strongly_connected_components(&fin_adj)
        .into_iter()
        .filter(|c| graph::is_nontrivial(&fin_adj, c))
        .map(|states| {
            let mut local = vec![usize::MAX; nb];
            for (k, &s) in states.iter().enumerate() {
                local[s] = k;
            }
            let mut targets = Vec::new();
            let mut weights = Vec::new();
            for &s in &states {
                let (t, w): (Vec<usize>, Vec<f64>) =
                    edge_b[s].iter().filter(|(j, _)| local[*j] != usize::MAX).map(|&(j, v)| (local[j], v)).unzip();
                targets.push(t);
                weights.push(w);
            }
            SearchClass { states, targets, weights }
        })
        .collect();
    if classes.is_empty() {
        return Err(Error::NoAdmissibleSupport);
    }

    let restarts = opts.restarts.max(1);
    let runs: Vec<(f64, usize, usize, Vec<Vec<f64>>)> = (0..restarts * classes.len())
        .into_par_iter()
        .map(|job| {
            let (c, restart) = (job / restarts, job % restarts);
            let class = &classes[c];
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(job as u64);
            let q0: Vec<Vec<f64>> = class.targets.iter().map(|t| dirichlet_row(&mut rng, t.len())).collect();
            let (value, q) = ascend(class, q0, opts.steps);
            (value, c, restart, q)
        })
        .collect();
    // deterministic reduction: best value, ties to the earliest job
    let best = runs
        .iter()
        .enumerate()
        .fold(None::<usize>, |acc, (k, r)| match acc {
            Some(b) if runs[b].0 >= r.0 => Some(b),
            _ if r.0.is_nan() => acc,
            _ => Some(k),
        })
        .ok_or(Error::NoAdmissibleSupport)?;
    let (value, c, restart, ref local_q) = runs[best];
    if value == f64::NEG_INFINITY {
        return Err(Error::NoAdmissibleSupport);
    }
    let class = &classes[c];

    let block_matrix = Arc::new(TransitionMatrix::from_edges(nb, &pres.edges, ValidateFlags::default())?);
    let mut q = vec![vec![0.0; nb]; nb];
    for i in 0..nb {
        let succ = block_matrix.successors(i);
        for &j in succ {
            q[i][j] = 1.0 / succ.len() as f64;
        }
    }
    for (li, &s) in class.states.iter().enumerate() {
        q[s].iter_mut().for_each(|x| *x = 0.0);
        for (k, &lj) in class.targets[li].iter().enumerate() {
            q[s][class.states[lj]] = local_q[li][k];
        }
    }
    let local: Vec<Vec<f64>> = (0..class.states.len())
        .map(|li| {
            let mut row = vec![0.0; class.states.len()];
            for (k, &lj) in class.targets[li].iter().enumerate() {
                row[lj] = local_q[li][k];
            }
            row
        })
        .collect();
    let (local_pi, _) = stationary(&local)?;
    let mut pi = vec![0.0; nb];
    for (li, &s) in class.states.iter().enumerate() {
        pi[s] = local_pi[li];
    }
    let measure = MarkovMeasure::new(block_matrix, q, pi)?;
    Ok(VariationalResult { value, measure, block_depth: pres.block_depth, best_restart: restart })
}

/// `integrate(mu, ln rho) + entropy(mu)`.
pub fn t_entropy(mu: &MarkovMeasure, rho: &CylinderFunction) -> Result<f64> {
    let i = mu.integrate(&rho.ln()?)?;
    if i == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(i + mu.entropy())
}

/// Per-term breakdown of the t-entropy estimate over cylinder partitions.
#[derive(Clone, Debug, PartialEq)]
pub struct TEntropyEstimate {
    pub value: f64,
    /// Iterate count and partition depth attaining the minimum.
    pub best_n: usize,
    pub best_m: usize,
}

/// Estimates t-entropy from its definition, restricted to partitions into `m'`-cylinders.
///
/// Returns the minimum over `1 <= n' <= n` and `1 <= m' <= m` of
/// `(1/n') sum_w mu(C_w) ln(mu(L^{n'} 1_{C_w}) / mu(C_w))`, where `L` is the transfer operator of
/// the cocycle `rho`. Words of zero mass contribute 0; a charged word with
/// `mu(L^{n'} 1_{C_w}) = 0` makes the sum `-inf`.
pub fn t_entropy_definition_estimate(
    mu: &MarkovMeasure,
    rho: &CylinderFunction,
    n: usize,
    m: usize,
) -> Result<TEntropyEstimate> {
    if n == 0 || m == 0 {
        return Err(Error::ZeroDepth);
    }
    let a = mu.matrix().clone();
    let mut best = TEntropyEstimate { value: f64::INFINITY, best_n: 0, best_m: 0 };
    for depth in 1..=m {
        let words = admissible_words(&a, depth, DEFAULT_DEPTH_CAP)?;
        let mut sums = vec![0.0; n];
        for w in &words {
            let mass = mu.cylinder_mass(w)?;
            if mass <= 0.0 {
                continue;
            }
            let mut g = CylinderFunction::indicator(&a, w)?;
            for sum in sums.iter_mut() {
                g = ruelle_apply(rho, &g)?;
                let image = mu.integrate(&g)?;
                *sum += if image > 0.0 { mass * (image / mass).ln() } else { f64::NEG_INFINITY };
            }
        }
        for (k, s) in sums.iter().enumerate() {
            let v = s / (k + 1) as f64;
            if v < best.value {
                best = TEntropyEstimate { value: v, best_n: k + 1, best_m: depth };
            }
        }
    }
    Ok(best)
}
