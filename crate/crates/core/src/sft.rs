//! Topological Markov shifts given by 0/1 transition matrices.

use crate::error::{Error, Result};
use crate::graph;

/// A finite word of states.
pub type Word = Vec<usize>;

/// Default maximum word length for enumerations.
pub const DEFAULT_DEPTH_CAP: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateFlags {
    /// Also require every column to contain a 1.
    pub cuntz_krieger: bool,
}

/// A validated 0/1 matrix with no zero rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<bool>,
    cuntz_krieger: bool,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl TransitionMatrix {
    /// Validates a square matrix of zeros and ones.
    pub fn validate<T: Copy + Into<f64>>(rows: &[Vec<T>], flags: ValidateFlags) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut entries = vec![false; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
            }
            for (j, &x) in row.iter().enumerate() {
                let x: f64 = x.into();
                if x == 1.0 {
                    entries[i * n + j] = true;
                } else if x != 0.0 {
                    return Err(Error::NonBinaryEntry(i, j));
                }
            }
        }
        Self::from_entries(n, entries, flags)
    }

    /// Builds a matrix from an edge list on `n` states.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], flags: ValidateFlags) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut entries = vec![false; n * n];
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(Error::StateOutOfRange { index, states: n });
                }
            }
            entries[i * n + j] = true;
        }
        Self::from_entries(n, entries, flags)
    }

    fn from_entries(n: usize, entries: Vec<bool>, flags: ValidateFlags) -> Result<Self> {
        let m = Self::build(n, entries, flags.cuntz_krieger);
        if let Some(i) = (0..n).find(|&i| m.succ[i].is_empty()) {
            return Err(Error::ZeroRow(i));
        }
        if flags.cuntz_krieger {
            if let Some(j) = (0..n).find(|&j| m.pred[j].is_empty()) {
                return Err(Error::ZeroColumn(j));
            }
        }
        Ok(m)
    }

    fn build(n: usize, entries: Vec<bool>, cuntz_krieger: bool) -> Self {
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if entries[i * n + j] {
                    succ[i].push(j);
                    pred[j].push(i);
                }
            }
        }
        TransitionMatrix { n, entries, cuntz_krieger, succ, pred }
    }

    /// The full shift on `n` symbols.
    pub fn full_shift(n: usize) -> Result<Self> {
        Self::validate(&vec![vec![1u8; n]; n], ValidateFlags { cuntz_krieger: true })
    }

    /// The golden mean shift `[[1,1],[1,0]]`.
    pub fn golden_mean() -> Self {
        Self::validate(&[vec![1u8, 1], vec![1, 0]], ValidateFlags { cuntz_krieger: true })
            .expect("golden mean matrix is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_cuntz_krieger(&self) -> bool {
        self.cuntz_krieger
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.pred[j]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.succ[i].len()
    }

    /// Column sum, the number of states that can precede `j`.
    pub fn in_degree(&self, j: usize) -> usize {
        self.pred[j].len()
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.succ
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e).count()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect()).collect()
    }

    /// Matrix with states renamed so that new state `k` is old state `order[k]`.
    pub fn relabel(&self, order: &[usize]) -> Result<Self> {
        let n = self.n;
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::InvalidParameter(format!(
                "relabeling has {} entries for {} states",
                order.len(),
                n
            )));
        }
        for &o in order {
            if o >= n || seen[o] {
                return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
            }
            seen[o] = true;
        }
        let mut entries = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                entries[a * n + b] = self.get(order[a], order[b]);
            }
        }
        Ok(Self::build(n, entries, self.cuntz_krieger))
    }

    /// Submatrix on the given states (in the given order). Zero rows are allowed here.
    pub(crate) fn restrict_unchecked(&self, states: &[usize]) -> Self {
        let k = states.len();
        let mut entries = vec![false; k * k];
        for (a, &i) in states.iter().enumerate() {
            for (b, &j) in states.iter().enumerate() {
                entries[a * k + b] = self.get(i, j);
            }
        }
        Self::build(k, entries, false)
    }

    pub fn is_admissible(&self, word: &[usize]) -> bool {
        !word.is_empty()
            && word.iter().all(|&s| s < self.n)
            && word.windows(2).all(|w| self.get(w[0], w[1]))
    }
}

/// Strongly connected components, essential states and the condensation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateClassification {
    /// Components with sorted members, ordered by smallest member.
    pub sccs: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Sorted essential states.
    pub essential: Vec<usize>,
    /// Successor lists of the component graph.
    pub condensation: Vec<Vec<usize>>,
}

impl StateClassification {
    pub fn is_essential(&self, state: usize) -> bool {
        self.essential.binary_search(&state).is_ok()
    }
}

pub fn classify(a: &TransitionMatrix) -> StateClassification {
    let sccs = graph::strongly_connected_components(a.adjacency());
    let component_of = graph::component_map(&sccs, a.n());
    let condensation = graph::condensation(a.adjacency(), &component_of, sccs.len());
    let mut essential: Vec<usize> = sccs
        .iter()
        .enumerate()
        .filter(|(c, _)| condensation[*c].is_empty())
        .flat_map(|(_, comp)| comp.iter().copied())
        .collect();
    essential.sort_unstable();
    StateClassification { sccs, component_of, essential, condensation }
}

/// One irreducible block of essential states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// States of the block in the original labeling, ordered by cyclic class then index.
    pub states: Vec<usize>,
    /// Restriction of the transition matrix to `states`, in that order.
    pub matrix: TransitionMatrix,
    pub period: usize,
    /// Cyclic classes in original labels; class `j` maps into class `j + 1 mod period`.
    pub cyclic_classes: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrreducibleDecomposition {
    pub blocks: Vec<Block>,
    /// New state `k` is old state `relabeling[k]`: block states first, then inessential states.
    pub relabeling: Vec<usize>,
}

impl IrreducibleDecomposition {
    pub fn periods(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.period).collect()
    }
}

pub fn decompose(a: &TransitionMatrix) -> Result<IrreducibleDecomposition> {
    let cls = classify(a);
    // every state reaches a sink component of a finite graph
    assert!(!cls.essential.is_empty(), "finite graph without zero rows has essential states");
    let mut blocks = Vec::new();
    let mut relabeling = Vec::with_capacity(a.n());
    for (c, comp) in cls.sccs.iter().enumerate() {
        if !cls.condensation[c].is_empty() {
            continue;
        }
        let (period, class_of) = graph::period_and_classes(a.adjacency(), comp);
        let mut cyclic_classes = vec![Vec::new(); period];
        for (&s, &k) in comp.iter().zip(&class_of) {
            cyclic_classes[k].push(s);
        }
        let states: Vec<usize> = cyclic_classes.iter().flatten().copied().collect();
        relabeling.extend_from_slice(&states);
        let matrix = a.restrict_unchecked(&states);
        blocks.push(Block { states, matrix, period, cyclic_classes });
    }
    relabeling.extend((0..a.n()).filter(|&s| !cls.is_essential(s)));
    if blocks.is_empty() {
        return Err(Error::NoEssentialStates);
    }
    Ok(IrreducibleDecomposition { blocks, relabeling })
}

/// Sink cycles and the states forced into them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreenessReport {
    pub condition_i: bool,
    pub topologically_free: bool,
    /// Each cycle starts at its smallest state; cycles are ordered by that state.
    pub sink_cycles: Vec<Vec<usize>>,
    /// Off-cycle states with out-degree 1 whose forced path ends in a sink cycle.
    pub feeder_states: Vec<usize>,
}

pub fn freeness(a: &TransitionMatrix) -> FreenessReport {
    let n = a.n();
    let forced = |s: usize| if a.out_degree(s) == 1 { Some(a.successors(s)[0]) } else { None };
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; n];
    let mut on_cycle = vec![false; n];
    let mut feeds = vec![false; n];
    let mut sink_cycles = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut s = start;
        let reaches = loop {
            if state[s] == 2 {
                break on_cycle[s] || feeds[s];
            }
            if state[s] == 1 {
                let pos = path.iter().position(|&p| p == s).expect("state on current path");
                let mut cycle = path[pos..].to_vec();
                for &c in &cycle {
                    on_cycle[c] = true;
                }
                let min_pos = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i);
                cycle.rotate_left(min_pos.unwrap_or(0));
                sink_cycles.push(cycle);
                break true;
            }
            state[s] = 1;
            path.push(s);
            match forced(s) {
                Some(t) => s = t,
                None => break false,
            }
        };
        for &p in &path {
            state[p] = 2;
            if !on_cycle[p] && reaches && a.out_degree(p) == 1 {
                feeds[p] = true;
            }
        }
    }
    sink_cycles.sort_by_key(|c| c[0]);
    let feeder_states = (0..n).filter(|&s| feeds[s]).collect();
    let free = sink_cycles.is_empty();
    FreenessReport { condition_i: free, topologically_free: free, sink_cycles, feeder_states }
}

/// Admissible words of length `n` in lexicographic order.
pub fn admissible_words(a: &TransitionMatrix, n: usize, cap: usize) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::ZeroDepth);
    }
    if n > cap {
        return Err(Error::DepthCapExceeded { depth: n, cap });
    }
    let mut words: Vec<Word> = (0..a.n()).map(|s| vec![s]).collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(words.len() * 2);
        for w in &words {
            let last = *w.last().expect("words are nonempty");
            for &t in a.successors(last) {
                let mut e = Vec::with_capacity(w.len() + 1);
                e.extend_from_slice(w);
                e.push(t);
                next.push(e);
            }
        }
        words = next;
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u8]]) -> TransitionMatrix {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        TransitionMatrix::validate(&rows, ValidateFlags::default()).unwrap()
    }

    #[test]
    fn validation_examples() {
        let full = m(&[&[1, 1], &[1, 1]]);
        assert_eq!(full.edge_count(), 4);
        let err = TransitionMatrix::validate(&[vec![1u8, 1], vec![0, 0]], ValidateFlags::default());
        assert_eq!(err, Err(Error::ZeroRow(1)));
        let ck = ValidateFlags { cuntz_krieger: true };
        assert!(TransitionMatrix::validate(&[vec![0u8, 1], vec![1, 0]], ck).is_ok());
        let err = TransitionMatrix::validate(&[vec![1u8, 0], vec![1, 0]], ck);
        assert_eq!(err, Err(Error::ZeroColumn(1)));
        let err = TransitionMatrix::validate(&[vec![1.0, 0.5], vec![1.0, 0.0]], ck);
        assert_eq!(err, Err(Error::NonBinaryEntry(0, 1)));
        let err = TransitionMatrix::validate(&[vec![1u8, 0]], ck);
        assert!(matches!(err, Err(Error::NotSquare { .. })));
    }

    #[test]
    fn classify_bridge() {
        let cls = classify(&m(&[&[1, 1], &[0, 1]]));
        assert_eq!(cls.sccs, vec![vec![0], vec![1]]);
        assert_eq!(cls.essential, vec![1]);
        let cls = classify(&m(&[&[0, 1], &[1, 0]]));
        assert_eq!(cls.sccs, vec![vec![0, 1]]);
        assert_eq!(cls.essential, vec![0, 1]);
    }

    #[test]
    fn decompose_periods() {
        let a = m(&[
            &[1, 1, 0, 0, 0],
            &[1, 1, 0, 0, 0],
            &[0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 1],
            &[0, 0, 1, 0, 0],
        ]);
        let d = decompose(&a).unwrap();
        assert_eq!(d.periods(), vec![1, 3]);
        assert_eq!(d.blocks[1].cyclic_classes, vec![vec![2], vec![3], vec![4]]);
        assert_eq!(decompose(&TransitionMatrix::golden_mean()).unwrap().periods(), vec![1]);
        let d = decompose(&m(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(d.periods(), vec![2]);
        assert_eq!(d.blocks[0].cyclic_classes, vec![vec![0], vec![1]]);
    }

    #[test]
    fn freeness_examples() {
        assert!(freeness(&TransitionMatrix::full_shift(2).unwrap()).condition_i);
        let r = freeness(&m(&[&[0, 1], &[1, 0]]));
        assert!(!r.condition_i && !r.topologically_free);
        assert_eq!(r.sink_cycles, vec![vec![0, 1]]);
        assert!(freeness(&TransitionMatrix::golden_mean()).condition_i);
        // 0 -> 1 -> 2 -> 1 with 0 also looping
        let r = freeness(&m(&[&[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 1, 0, 0], &[1, 0, 0, 1]]));
        assert_eq!(r.sink_cycles, vec![vec![1, 2]]);
        assert_eq!(r.feeder_states, vec![0]);
    }

    #[test]
    fn word_examples() {
        let full = TransitionMatrix::full_shift(2).unwrap();
        let w = admissible_words(&full, 2, DEFAULT_DEPTH_CAP).unwrap();
        assert_eq!(w, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let gm = TransitionMatrix::golden_mean();
        assert_eq!(admissible_words(&gm, 3, DEFAULT_DEPTH_CAP).unwrap().len(), 5);
        assert_eq!(admissible_words(&gm, 1, DEFAULT_DEPTH_CAP).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(
            admissible_words(&gm, 13, DEFAULT_DEPTH_CAP),
            Err(Error::DepthCapExceeded { depth: 13, cap: 12 })
        );
    }
}
