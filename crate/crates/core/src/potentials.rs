//! Locally constant functions on the shift space.
//!
//! A [`CylinderFunction`] of depth `N` stores one value per admissible `N`-word, in the
//! lexicographic order of [`admissible_words`]. Real functions may take the value `-inf`,
//! which is what `ln 0` produces; `exp(-inf)` is `0`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sft::{admissible_words, TransitionMatrix, Word, DEFAULT_DEPTH_CAP};

/// Admissible words of one depth together with a lookup index.
#[derive(Debug, PartialEq)]
pub struct WordTable {
    depth: usize,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl WordTable {
    pub fn new(a: &TransitionMatrix, depth: usize, cap: usize) -> Result<Self> {
        let words = admissible_words(a, depth, cap)?;
        let index = words.iter().enumerate().map(|(k, w)| (w.clone(), k)).collect();
        Ok(WordTable { depth, words, index })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, word: &[usize]) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// What the stored numbers mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    /// Finite values `>= 0`.
    NonNegative,
    /// Finite values or `-inf`.
    Real,
    /// Moduli of complex weights.
    Modulus,
}

#[derive(Clone, Debug)]
pub struct CylinderFunction {
    matrix: Arc<TransitionMatrix>,
    table: Arc<WordTable>,
    values: Vec<f64>,
    kind: ValueKind,
}

fn check_value(word: &[usize], v: f64, kind: ValueKind) -> Result<()> {
    let ok = match kind {
        ValueKind::NonNegative | ValueKind::Modulus => v.is_finite() && v >= 0.0,
        ValueKind::Real => v.is_finite() || v == f64::NEG_INFINITY,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NegativeWeight { word: word.to_vec(), value: v })
    }
}

impl CylinderFunction {
    /// Builds a function of the given depth by evaluating `f` on every admissible word.
    pub fn from_fn(
        matrix: &Arc<TransitionMatrix>,
        depth: usize,
        kind: ValueKind,
        f: impl Fn(&[usize]) -> f64,
    ) -> Result<Self> {
        let table = Arc::new(WordTable::new(matrix, depth, DEFAULT_DEPTH_CAP)?);
        let values: Vec<f64> = table.words.iter().map(|w| f(w)).collect();
        for (w, &v) in table.words.iter().zip(&values) {
            check_value(w, v, kind)?;
        }
        Ok(CylinderFunction { matrix: matrix.clone(), table, values, kind })
    }

    /// Values listed in the lexicographic order of the admissible `depth`-words.
    pub fn from_values(
        matrix: &Arc<TransitionMatrix>,
        depth: usize,
        kind: ValueKind,
        values: Vec<f64>,
    ) -> Result<Self> {
        let table = Arc::new(WordTable::new(matrix, depth, DEFAULT_DEPTH_CAP)?);
        if values.len() != table.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} admissible words",
                values.len(),
                table.len()
            )));
        }
        for (w, &v) in table.words.iter().zip(&values) {
            check_value(w, v, kind)?;
        }
        Ok(CylinderFunction { matrix: matrix.clone(), table, values, kind })
    }

    /// Complex weights; only the modulus is kept.
    pub fn from_complex_fn(
        matrix: &Arc<TransitionMatrix>,
        depth: usize,
        f: impl Fn(&[usize]) -> Complex64,
    ) -> Result<Self> {
        Self::from_fn(matrix, depth, ValueKind::Modulus, |w| f(w).norm())
    }

    pub fn constant(matrix: &Arc<TransitionMatrix>, value: f64) -> Result<Self> {
        let kind = if value >= 0.0 && value.is_finite() { ValueKind::NonNegative } else { ValueKind::Real };
        Self::from_fn(matrix, 1, kind, |_| value)
    }

    /// Indicator of the cylinder of `word`, with depth equal to the word length.
    pub fn indicator(matrix: &Arc<TransitionMatrix>, word: &[usize]) -> Result<Self> {
        if !matrix.is_admissible(word) {
            return Err(Error::InadmissibleWord(word.to_vec()));
        }
        Self::from_fn(matrix, word.len(), ValueKind::NonNegative, |w| (w == word) as u8 as f64)
    }

    /// Builds a function from explicit values; every admissible word must be present.
    pub fn from_map(
        matrix: &Arc<TransitionMatrix>,
        depth: usize,
        kind: ValueKind,
        map: &HashMap<Word, f64>,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        for w in map.keys() {
            if w.len() != depth || !matrix.is_admissible(w) {
                return Err(Error::InadmissibleWord(w.clone()));
            }
        }
        let table = Arc::new(WordTable::new(matrix, depth, DEFAULT_DEPTH_CAP)?);
        let mut values = Vec::with_capacity(table.len());
        for w in &table.words {
            let v = *map.get(w).ok_or_else(|| Error::MissingWord(w.clone()))?;
            check_value(w, v, kind)?;
            values.push(v);
        }
        Ok(CylinderFunction { matrix: matrix.clone(), table, values, kind })
    }

    pub fn matrix(&self) -> &Arc<TransitionMatrix> {
        &self.matrix
    }

    pub fn table(&self) -> &Arc<WordTable> {
        &self.table
    }

    pub fn depth(&self) -> usize {
        self.table.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.table.words
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    /// Value on the cylinder of `word`; only the first `depth` symbols matter.
    pub fn eval(&self, word: &[usize]) -> Result<f64> {
        if word.len() < self.depth() {
            return Err(Error::InvalidParameter(format!(
                "word of length {} is shorter than depth {}",
                word.len(),
                self.depth()
            )));
        }
        self.table
            .position(&word[..self.depth()])
            .map(|k| self.values[k])
            .ok_or_else(|| Error::InadmissibleWord(word.to_vec()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lift_depth(&self, m: usize) -> Result<Self> {
        self.lift_depth_with_cap(m, DEFAULT_DEPTH_CAP)
    }

    pub fn lift_depth_with_cap(&self, m: usize, cap: usize) -> Result<Self> {
        if m < self.depth() {
            return Err(Error::InvalidParameter(format!(
                "cannot lift depth {} down to {}",
                self.depth(),
                m
            )));
        }
        if m == self.depth() {
            return Ok(self.clone());
        }
        let table = Arc::new(WordTable::new(&self.matrix, m, cap)?);
        let d = self.depth();
        let values = table
            .words
            .iter()
            .map(|w| self.values[self.table.position(&w[..d]).expect("prefix of admissible word")])
            .collect();
        Ok(CylinderFunction { matrix: self.matrix.clone(), table, values, kind: self.kind })
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.matrix, &other.matrix) || *self.matrix == *other.matrix {
            Ok(())
        } else {
            Err(Error::MatrixMismatch)
        }
    }

    fn zip_with(&self, other: &Self, kind: ValueKind, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_space(other)?;
        let d = self.depth().max(other.depth());
        let f = self.lift_depth(d)?;
        let g = other.lift_depth(d)?;
        let values = f.values.iter().zip(&g.values).map(|(&x, &y)| op(x, y)).collect();
        Ok(CylinderFunction { matrix: f.matrix, table: f.table, values, kind })
    }

    fn map(&self, kind: ValueKind, op: impl Fn(f64) -> f64) -> Self {
        CylinderFunction {
            matrix: self.matrix.clone(),
            table: self.table.clone(),
            values: self.values.iter().map(|&x| op(x)).collect(),
            kind,
        }
    }

    fn nonneg_result(a: ValueKind, b: ValueKind) -> ValueKind {
        if a == ValueKind::Real || b == ValueKind::Real {
            ValueKind::Real
        } else {
            ValueKind::NonNegative
        }
    }

    /// Pointwise product. A `-inf` factor times `0` gives `0`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let kind = Self::nonneg_result(self.kind, other.kind);
        self.zip_with(other, kind, |x, y| if x == 0.0 || y == 0.0 { 0.0 } else { x * y })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let kind = Self::nonneg_result(self.kind, other.kind);
        self.zip_with(other, kind, |x, y| x + y)
    }

    pub fn abs(&self) -> Self {
        self.map(ValueKind::NonNegative, f64::abs)
    }

    /// Natural logarithm with `ln 0 = -inf`.
    pub fn ln(&self) -> Result<Self> {
        if let Some(k) = self.values.iter().position(|&x| x < 0.0) {
            return Err(Error::DomainError { word: self.table.words[k].clone(), value: self.values[k] });
        }
        Ok(self.map(ValueKind::Real, |x| if x == 0.0 { f64::NEG_INFINITY } else { x.ln() }))
    }

    pub fn exp(&self) -> Self {
        self.map(ValueKind::NonNegative, f64::exp)
    }

    pub fn scale(&self, t: f64) -> Self {
        let kind = if t >= 0.0 && self.kind != ValueKind::Real { ValueKind::NonNegative } else { ValueKind::Real };
        self.map(kind, |x| if x == 0.0 { 0.0 } else { t * x })
    }

    pub fn square(&self) -> Self {
        self.map(ValueKind::NonNegative, |x| x * x)
    }
}

/// Result of a successful cocycle check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CocycleReport {
    /// All values strictly positive.
    pub strict: bool,
    pub min_value: f64,
    /// Largest deviation of a preimage sum from 1.
    pub max_defect: f64,
}

pub const COCYCLE_TOL: f64 = 1e-12;

/// Checks that the values of `rho` over the preimages of every point sum to 1.
pub fn validate_cocycle(rho: &CylinderFunction) -> Result<CocycleReport> {
    let a = rho.matrix();
    for (w, &v) in rho.words().iter().zip(rho.values()) {
        if !(-COCYCLE_TOL..=1.0 + COCYCLE_TOL).contains(&v) {
            return Err(Error::OutOfRange { word: w.clone(), value: v });
        }
    }
    let n = rho.depth();
    let mut max_defect: f64 = 0.0;
    let mut pre = vec![0usize; n];
    for v in rho.words() {
        pre[1..].copy_from_slice(&v[..n - 1]);
        let mut sum = 0.0;
        for &i in a.predecessors(v[0]) {
            pre[0] = i;
            sum += rho.eval(&pre)?;
        }
        let defect = (sum - 1.0).abs();
        if defect > COCYCLE_TOL {
            return Err(Error::NotNormalized { word: v.clone(), sum });
        }
        max_defect = max_defect.max(defect);
    }
    let min_value = rho.min_value();
    Ok(CocycleReport { strict: min_value > 0.0, min_value, max_defect })
}

/// The cocycle `1 / #preimages`: value `1 / colsum(j)` on the word `(i, j)`.
pub fn uniform_cocycle(a: &Arc<TransitionMatrix>) -> Result<CylinderFunction> {
    if let Some(j) = (0..a.n()).find(|&j| a.in_degree(j) == 0) {
        return Err(Error::ZeroColumn(j));
    }
    CylinderFunction::from_fn(a, 2, ValueKind::NonNegative, |w| 1.0 / a.in_degree(w[1]) as f64)
}

/// Renders a word as a key: plain digits when every state is below 10, else comma separated.
pub fn word_key(word: &[usize]) -> String {
    if word.iter().all(|&s| s < 10) {
        word.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}

pub fn parse_word_key(key: &str) -> Result<Word> {
    let bad = || Error::BadWord(key.to_string());
    let key = key.trim();
    if key.is_empty() {
        return Err(bad());
    }
    if key.contains(',') {
        key.split(',').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect()
    } else {
        key.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect()
    }
}
