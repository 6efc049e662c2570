//! Ruelle transfer operators of locally constant weights as matrices on a higher-block graph.
//!
//! Convention: `W[i][j]` is the weight of the block edge `i -> j`, and the transfer operator
//! `L_c f(y) = sum_{x in preimages(y)} c(x) f(x)` acts on block-state vectors as `W^T`.
//! Hence `L_c h = rho h` is solved by the left eigenvector of `W`, and the eigenmeasure
//! `L_c^* nu = rho nu` has block masses given by the right eigenvector.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::MarkovMeasure;
use crate::perron::{perron_eigendata, spectral_radius, PerronData, PowerOptions, RadiusEnclosure, SparseMatrix};
use crate::potentials::{CylinderFunction, ValueKind, WordTable};
use crate::sft::{TransitionMatrix, Word, DEFAULT_DEPTH_CAP};

/// The `m`-block recoding of a shift.
#[derive(Debug)]
pub struct BlockPresentation {
    pub base: Arc<TransitionMatrix>,
    pub block_depth: usize,
    /// Admissible `m`-words; block state `k` is `states.words()[k]`.
    pub states: WordTable,
    /// Admissible `(m+1)`-words; edge `e` joins its prefix block to its suffix block.
    pub edge_words: WordTable,
    pub edges: Vec<(usize, usize)>,
}

impl BlockPresentation {
    /// Presentation suited to potentials of depth `n`: block depth `max(n - 1, 1)`.
    pub fn for_depth(base: &Arc<TransitionMatrix>, n: usize) -> Result<Self> {
        Self::with_block_depth(base, n.saturating_sub(1).max(1))
    }

    pub fn with_block_depth(base: &Arc<TransitionMatrix>, m: usize) -> Result<Self> {
        let states = WordTable::new(base, m, DEFAULT_DEPTH_CAP)?;
        let edge_words = WordTable::new(base, m + 1, DEFAULT_DEPTH_CAP)?;
        let edges = edge_words
            .words()
            .iter()
            .map(|u| {
                let from = states.position(&u[..m]).expect("prefix is admissible");
                let to = states.position(&u[1..]).expect("suffix is admissible");
                (from, to)
            })
            .collect();
        Ok(BlockPresentation { base: base.clone(), block_depth: m, states, edge_words, edges })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn block_words(&self) -> &[Word] {
        self.states.words()
    }

    /// Block path of a base word of length at least `m`.
    pub fn block_path(&self, word: &[usize]) -> Result<Vec<usize>> {
        let m = self.block_depth;
        if word.len() < m {
            return Err(Error::InvalidParameter(format!("word shorter than block depth {m}")));
        }
        word.windows(m)
            .map(|b| self.states.position(b).ok_or_else(|| Error::InadmissibleWord(word.to_vec())))
            .collect()
    }
}

/// Edge-weighted block graph realizing `L_c`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub presentation: Arc<BlockPresentation>,
    /// Weight per edge, in the order of `presentation.edges`; zeros are kept here.
    pub edge_weights: Vec<f64>,
    pub w: SparseMatrix,
}

impl TransferMatrix {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.w.to_dense()
    }

    pub fn len(&self) -> usize {
        self.w.n()
    }

    pub fn is_empty(&self) -> bool {
        self.w.n() == 0
    }
}

fn check_nonnegative(c: &CylinderFunction) -> Result<()> {
    for (w, &v) in c.words().iter().zip(c.values()) {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::NegativeWeight { word: w.clone(), value: v });
        }
    }
    Ok(())
}

pub fn build_transfer(c: &CylinderFunction) -> Result<TransferMatrix> {
    check_nonnegative(c)?;
    let pres = Arc::new(BlockPresentation::for_depth(c.matrix(), c.depth())?);
    let edge_weights: Vec<f64> =
        pres.edge_words.words().iter().map(|u| c.eval(u)).collect::<Result<_>>()?;
    let triplets: Vec<(usize, usize, f64)> =
        pres.edges.iter().zip(&edge_weights).map(|(&(i, j), &x)| (i, j, x)).collect();
    let w = SparseMatrix::from_triplets(pres.len(), &triplets);
    Ok(TransferMatrix { presentation: pres, edge_weights, w })
}

/// `ln rho` of a transfer matrix together with its bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub radius: RadiusEnclosure,
}

impl PressureEstimate {
    pub fn from_radius(radius: RadiusEnclosure) -> Self {
        PressureEstimate { value: radius.rho.ln(), lo: radius.lo.ln(), hi: radius.hi.ln(), radius }
    }
}

/// Topological pressure `ln rho(L_{exp b})`; `-inf` when the radius is 0.
pub fn pressure(b: &CylinderFunction, opts: PowerOptions) -> Result<PressureEstimate> {
    let c = b.exp();
    let t = build_transfer(&c)?;
    spectral_radius(&t.w, opts).map(PressureEstimate::from_radius)
}

/// `(1/n) ln sum_i (W^n)[i][y]`: the growth of weighted preimage sums of block state `y`.
pub fn preimage_sum_estimate(t: &TransferMatrix, y: usize, n: usize) -> Result<f64> {
    if y >= t.len() {
        return Err(Error::StateOutOfRange { index: y, states: t.len() });
    }
    if n == 0 {
        return Err(Error::ZeroDepth);
    }
    let mut v = vec![0.0; t.len()];
    v[y] = 1.0;
    let mut tmp = vec![0.0; t.len()];
    let mut log_scale = 0.0;
    for _ in 0..n {
        t.w.mul_vec(&v, &mut tmp);
        std::mem::swap(&mut v, &mut tmp);
        let top = v.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_scale += top.ln();
        v.iter_mut().for_each(|x| *x /= top);
    }
    let total: f64 = v.iter().sum();
    Ok((log_scale + total.ln()) / n as f64)
}

/// Gibbs measure of a strictly positive weight of depth at most 2 on an irreducible shift.
pub fn gibbs_markov(c: &CylinderFunction, opts: PowerOptions) -> Result<MarkovMeasure> {
    if c.depth() > 2 {
        return Err(Error::InvalidParameter(format!(
            "gibbs_markov needs depth <= 2, got {}; recode through higher blocks",
            c.depth()
        )));
    }
    let t = build_transfer(c)?;
    for (u, &x) in t.presentation.edge_words.words().iter().zip(&t.edge_weights) {
        if x <= 0.0 {
            return Err(Error::ZeroEdgeWeight(u.clone()));
        }
    }
    let pd = perron_eigendata(&t.w, eigen_options(opts))?;
    let n = t.len();
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in q.iter_mut().enumerate() {
        for (j, x) in t.w.row(i) {
            row[j] = x * pd.r[j] / (pd.rho * pd.r[i]);
        }
    }
    let mut pi: Vec<f64> = pd.l.iter().zip(&pd.r).map(|(a, b)| a * b).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    MarkovMeasure::new(c.matrix().clone(), q, pi)
}

/// Options for eigenvector solves: the root is iterated well past the requested width so
/// that eigenvector residuals are far below it.
pub fn eigen_options(opts: PowerOptions) -> PowerOptions {
    PowerOptions { tol: opts.tol * 1e-3, max_iterations: opts.max_iterations }
}

/// Eigendata of the transfer matrix of `c` (which must be irreducible on block states).
pub fn transfer_eigendata(t: &TransferMatrix, opts: PowerOptions) -> Result<PerronData> {
    perron_eigendata(&t.w, eigen_options(opts))
}

/// The eigenfunction `h` with `L_c h = rho h`, as a function of depth `m`.
pub fn eigenfunction(t: &TransferMatrix, pd: &PerronData) -> Result<CylinderFunction> {
    let pres = &t.presentation;
    CylinderFunction::from_fn(&pres.base, pres.block_depth, ValueKind::NonNegative, |w| {
        pd.l[pres.states.position(w).expect("block word")]
    })
}

/// Probability measure with `L_c^* nu = rho nu`, evaluated on cylinders.
#[derive(Clone, Debug)]
pub struct ConformalMeasure {
    pub transfer: TransferMatrix,
    pub rho: f64,
    /// Masses of the block cylinders; sums to 1.
    pub block_mass: Vec<f64>,
}

impl ConformalMeasure {
    pub fn new(t: &TransferMatrix, pd: &PerronData) -> Self {
        let s: f64 = pd.r.iter().sum();
        ConformalMeasure { transfer: t.clone(), rho: pd.rho, block_mass: pd.r.iter().map(|x| x / s).collect() }
    }

    /// Mass of the cylinder of an admissible word of length at least the block depth.
    pub fn mass(&self, word: &[usize]) -> Result<f64> {
        let path = self.transfer.presentation.block_path(word)?;
        let mut m = self.block_mass[*path.last().expect("nonempty path")];
        for e in path.windows(2) {
            m *= self.transfer.w.get(e[0], e[1]) / self.rho;
        }
        Ok(m)
    }

    /// Integral of a cylinder function; shallow functions are lifted to the block depth.
    pub fn integrate(&self, f: &CylinderFunction) -> Result<f64> {
        let d = f.depth().max(self.transfer.presentation.block_depth);
        let f = f.lift_depth(d)?;
        let mut s = 0.0;
        for (w, &v) in f.words().iter().zip(f.values()) {
            let m = self.mass(w)?;
            if m > 0.0 {
                s += m * v;
            }
        }
        Ok(s)
    }
}

/// `L_c f` as a cylinder function of depth `max(N, M) - 1` (at least 1).
pub fn ruelle_apply(c: &CylinderFunction, f: &CylinderFunction) -> Result<CylinderFunction> {
    if !Arc::ptr_eq(c.matrix(), f.matrix()) && **c.matrix() != **f.matrix() {
        return Err(Error::MatrixMismatch);
    }
    let top = c.depth().max(f.depth());
    let out_depth = top.saturating_sub(1).max(1);
    let c = c.lift_depth(out_depth + 1)?;
    let f = f.lift_depth(out_depth + 1)?;
    let a = c.matrix().clone();
    let kind = if c.kind() == ValueKind::Real || f.kind() == ValueKind::Real {
        ValueKind::Real
    } else {
        ValueKind::NonNegative
    };
    let mut buf = vec![0usize; out_depth + 1];
    let table = c.table().clone();
    let mut out = Vec::new();
    for v in crate::sft::admissible_words(&a, out_depth, DEFAULT_DEPTH_CAP)? {
        buf[1..].copy_from_slice(&v);
        let mut s = 0.0;
        for &i in a.predecessors(v[0]) {
            buf[0] = i;
            let k = table.position(&buf).expect("preimage word is admissible");
            let (cv, fv) = (c.values()[k], f.values()[k]);
            if cv != 0.0 && fv != 0.0 {
                s += cv * fv;
            }
        }
        out.push(s);
    }
    CylinderFunction::from_values(&a, out_depth, kind, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::uniform_cocycle;

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn transfer_examples() {
        let full = Arc::new(TransitionMatrix::full_shift(2).unwrap());
        let one = CylinderFunction::constant(&full, 1.0).unwrap();
        assert_eq!(build_transfer(&one).unwrap().dense(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let gm = Arc::new(TransitionMatrix::golden_mean());
        let one = CylinderFunction::constant(&gm, 1.0).unwrap();
        assert_eq!(build_transfer(&one).unwrap().dense(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
        let p = [[0.25, 0.6], [0.75, 0.4]];
        let c = CylinderFunction::from_fn(&full, 2, ValueKind::NonNegative, |w| p[w[0]][w[1]]).unwrap();
        let t = build_transfer(&c).unwrap();
        assert_eq!(t.dense(), vec![vec![0.25, 0.6], vec![0.75, 0.4]]);
    }

    #[test]
    fn pressure_examples() {
        for n in [2usize, 3, 5] {
            let a = Arc::new(TransitionMatrix::full_shift(n).unwrap());
            let b = CylinderFunction::constant(&a, 0.0).unwrap();
            let p = pressure(&b, PowerOptions::default()).unwrap();
            assert!((p.value - (n as f64).ln()).abs() < 1e-10);
        }
        let gm = Arc::new(TransitionMatrix::golden_mean());
        let b = CylinderFunction::constant(&gm, 0.0).unwrap();
        assert!((pressure(&b, PowerOptions::default()).unwrap().value - golden().ln()).abs() < 1e-10);

        let full = Arc::new(TransitionMatrix::full_shift(2).unwrap());
        let b = CylinderFunction::indicator(&full, &[1]).unwrap().ln().unwrap();
        assert!(pressure(&b, PowerOptions::default()).unwrap().value.abs() < 1e-12);
        let b = CylinderFunction::constant(&full, f64::NEG_INFINITY).unwrap();
        assert_eq!(pressure(&b, PowerOptions::default()).unwrap().value, f64::NEG_INFINITY);
    }

    #[test]
    fn preimage_examples() {
        let full = Arc::new(TransitionMatrix::full_shift(2).unwrap());
        let t = build_transfer(&CylinderFunction::constant(&full, 1.0).unwrap()).unwrap();
        assert!((preimage_sum_estimate(&t, 1, 10).unwrap() - 2f64.ln()).abs() < 1e-15);
        let gm = Arc::new(TransitionMatrix::golden_mean());
        let t = build_transfer(&CylinderFunction::constant(&gm, 1.0).unwrap()).unwrap();
        assert!((preimage_sum_estimate(&t, 0, 20).unwrap() - golden().ln()).abs() < 0.05);

        // paths ending in state 0 never leave the loop at 0
        let bridge = Arc::new(
            TransitionMatrix::validate(&[vec![1u8, 1], vec![0, 1]], Default::default()).unwrap(),
        );
        let c = CylinderFunction::from_fn(&bridge, 2, ValueKind::NonNegative, |w| if w == [0, 0] { 3.0 } else { 1.0 })
            .unwrap();
        let t = build_transfer(&c).unwrap();
        assert!((preimage_sum_estimate(&t, 0, 50).unwrap() - 3f64.ln()).abs() < 1e-12);
        let c = CylinderFunction::from_fn(&bridge, 2, ValueKind::NonNegative, |w| if w == [1, 1] { 3.0 } else { 1.0 })
            .unwrap();
        let t = build_transfer(&c).unwrap();
        assert!(preimage_sum_estimate(&t, 0, 50).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let full = Arc::new(TransitionMatrix::full_shift(2).unwrap());
        let u = uniform_cocycle(&full).unwrap();
        let mu = gibbs_markov(&u, PowerOptions::default()).unwrap();
        for row in mu.q() {
            assert!(row.iter().all(|&x| (x - 0.5).abs() < 1e-14));
        }
        assert!(mu.pi().iter().all(|&x| (x - 0.5).abs() < 1e-14));

        let gm = Arc::new(TransitionMatrix::golden_mean());
        let mu = gibbs_markov(&CylinderFunction::constant(&gm, 1.0).unwrap(), PowerOptions::default()).unwrap();
        let g = golden();
        assert!((mu.q()[0][1] - 1.0 / (g * g)).abs() < 1e-12);
        assert!((mu.q()[0][0] - 1.0 / g).abs() < 1e-12);
    }

    #[test]
    fn ruelle_apply_examples() {
        let full = Arc::new(TransitionMatrix::full_shift(2).unwrap());
        let one = CylinderFunction::constant(&full, 1.0).unwrap();
        let l1 = ruelle_apply(&one, &one).unwrap();
        assert!(l1.values().iter().all(|&v| v == 2.0));
        let gm = Arc::new(TransitionMatrix::golden_mean());
        let u = uniform_cocycle(&gm).unwrap();
        let one = CylinderFunction::constant(&gm, 1.0).unwrap();
        assert!(ruelle_apply(&u, &one).unwrap().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }
}
