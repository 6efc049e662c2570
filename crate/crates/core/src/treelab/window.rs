use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::system::{TreeSystem, Vertex};
use crate::error::{Error, Result};

/// The first `n` vertices: the core, then depth by depth with all rays before all tails.
pub fn window_order(t: &TreeSystem, n: usize) -> Vec<Vertex> {
    let mut out: Vec<Vertex> = (0..t.core().len()).map(Vertex::Core).take(n).collect();
    let mut depth = 1;
    while out.len() < n {
        let layer = (0..t.rays().len())
            .map(|r| Vertex::Ray(r, depth))
            .chain((0..t.tails().len()).map(|x| Vertex::Tail(x, depth)));
        for v in layer {
            if out.len() == n {
                break;
            }
            out.push(v);
        }
        depth += 1;
    }
    out
}

/// Compression of `S` to a window of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowTruncation {
    pub vertices: Vec<Vertex>,
    /// `(row, column, weight)` with one entry per row whose image lies in the window.
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl WindowTruncation {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, w) in &self.entries {
            m[(i, j)] = w;
        }
        m
    }
}

/// `M_n`: rows and columns indexed by the first `n` window vertices, `M[v][Phi v] = lambda_v`.
/// Entries are structural, so zero weights appear explicitly.
pub fn truncate(t: &TreeSystem, n: usize) -> Result<WindowTruncation> {
    if n == 0 {
        return Err(Error::InvalidParameter("window size must be at least 1".into()));
    }
    let vertices = window_order(t, n);
    let pos: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let entries = vertices
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let u = t.image(v)?;
            pos.get(&u).map(|&j| (i, j, t.weight(v)))
        })
        .collect();
    Ok(WindowTruncation { vertices, entries })
}

#[cfg(test)]
mod tests {
    use super::super::system::*;
    use super::*;

    #[test]
    fn contrexample_window_of_ten() {
        let w = truncate(&contrexample(), 10).unwrap();
        assert_eq!(w.n(), 10);
        assert_eq!(w.entries.len(), 9);
        assert!(w.entries.iter().all(|e| [0.0, 0.5, 2.0].contains(&e.2.norm())));
        assert_eq!(w.vertices[1], Vertex::Ray(0, 1));
        assert_eq!(w.vertices[3], Vertex::Tail(0, 1));
    }

    #[test]
    fn unilateral_window_is_nilpotent() {
        let m = truncate(&unilateral(1.0), 5).unwrap().dense();
        let mut p = m.clone();
        for _ in 0..4 {
            p *= &m;
        }
        assert!(p.iter().all(|z| z.norm() == 0.0));
        assert!(m.iter().filter(|z| z.norm() > 0.0).count() == 4);
    }

    #[test]
    fn zero_weights_give_zero_matrix() {
        let m = truncate(&bilateral(0.0), 12).unwrap().dense();
        assert!(m.iter().all(|z| z.norm() == 0.0));
        assert!(truncate(&bilateral(1.0), 0).is_err());
    }
}
