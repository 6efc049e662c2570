use std::collections::VecDeque;

use serde::Serialize;

use super::system::{Next, TreeSystem};

/// A `Z`-line: a tail glued through a core path to an inbound ray.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Line {
    pub ray: usize,
    pub tail: usize,
    /// Core vertices from the attach vertex of the ray to the origin of the tail.
    pub core_path: Vec<usize>,
}

/// Vertices not covered by any line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Residual {
    pub core: Vec<usize>,
    pub rays: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantDecomposition {
    pub bijective_components: Vec<Line>,
    pub residual: Residual,
}

impl InvariantDecomposition {
    pub fn n(&self) -> usize {
        self.bijective_components.len()
    }
}

/// Core vertices `u` with `Phi(u) = i`.
pub(crate) fn core_preimages(t: &TreeSystem, i: usize) -> Vec<usize> {
    (0..t.core().len()).filter(|&j| t.core()[j].next == Next::Core(i)).collect()
}

/// Core path from the attach vertex of `ray` to `origin`, if the ray feeds into it.
pub(crate) fn path_from_ray(t: &TreeSystem, ray: usize, origin: usize) -> Option<Vec<usize>> {
    let mut path = vec![t.rays()[ray].attach];
    let mut v = path[0];
    while v != origin {
        match t.core()[v].next {
            Next::Core(j) => {
                v = j;
                path.push(j);
            }
            _ => return None,
        }
    }
    Some(path)
}

/// Rays whose forward orbit passes through core vertex `origin`, ordered by distance then index.
pub(crate) fn rays_feeding(t: &TreeSystem, origin: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut queue = VecDeque::from([origin]);
    while let Some(v) = queue.pop_front() {
        out.extend((0..t.rays().len()).filter(|&r| t.rays()[r].attach == v));
        queue.extend(core_preimages(t, v));
    }
    out
}

/// Splits the vertex set into `Z`-lines on which `Phi` is bijective and a residual part.
///
/// Every tail continues backwards into at least one ray; the line takes the nearest one, with
/// ties broken by ray index. Each ray is used by at most one line since its forward orbit
/// ends in at most one tail.
pub fn decompose_invariant(t: &TreeSystem) -> InvariantDecomposition {
    let mut lines = Vec::new();
    let mut on_line_core = vec![false; t.core().len()];
    let mut on_line_ray = vec![false; t.rays().len()];
    for (k, tail) in t.tails().iter().enumerate() {
        if let Some(&ray) = rays_feeding(t, tail.origin).first() {
            let core_path = path_from_ray(t, ray, tail.origin).expect("ray feeds the origin");
            for &c in &core_path {
                on_line_core[c] = true;
            }
            on_line_ray[ray] = true;
            lines.push(Line { ray, tail: k, core_path });
        }
    }
    InvariantDecomposition {
        bijective_components: lines,
        residual: Residual {
            core: (0..t.core().len()).filter(|&i| !on_line_core[i]).collect(),
            rays: (0..t.rays().len()).filter(|&r| !on_line_ray[r]).collect(),
        },
    }
}
