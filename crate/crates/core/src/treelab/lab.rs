//! Pseudospectrum grids from rectangular finite sections.
//!
//! For a window `W` of vertices the lab computes
//! `sigma_W(z) = min(sigma_min((S - z) P_W), sigma_min((S - z)^* P_W))`, the smallest singular
//! values of the operator and its adjoint restricted to vectors supported on `W`. Both are
//! nonincreasing in `W` and converge to the lower bounds of `S - z` and `(S - z)^*`, so small
//! values certify spectrum and large values certify the resolvent set. Square sections are not
//! used: they turn shifts into nilpotent matrices whose pseudospectra fill the whole disk.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::predict::predicted_spectrum;
use super::sturm::Forest;
use super::system::{TreeSystem, Vertex};
use super::window::window_order;
use crate::error::{Error, Result};
use crate::spectra::SpectrumDescription;

pub const MIN_RADII: usize = 32;
pub const MIN_ANGLES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    In,
    Out,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::In => "IN",
            Verdict::Out => "OUT",
            Verdict::Undecided => "UNDECIDED",
        }
    }
}

/// Polar grid: radii `R k / radii` for `k = 1..=radii` and angles `2 pi j / angles`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub radii: usize,
    pub angles: usize,
    /// Outer radius; `1.1 sup|lambda|` when absent.
    pub radius: Option<f64>,
    /// Additional circles sampled with the same angles.
    pub extra_radii: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { radii: 64, angles: 64, radius: None, extra_radii: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabOptions {
    pub windows: Vec<usize>,
    pub epsilon: f64,
    pub grid: GridSpec,
    /// Radial tolerance for comparing verdicts with the prediction.
    pub tolerance: Option<f64>,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions { windows: vec![100, 200, 400], epsilon: 1e-2, grid: GridSpec::default(), tolerance: None }
    }
}

/// Rectangular sections of `S - z` and `(S - z)^*` on a window.
#[derive(Clone, Debug)]
pub struct Sections {
    /// `(column, preimage, |lambda_preimage|)` with rows indexed after the window.
    forward: Vec<(usize, usize, f64)>,
    forward_rows: usize,
    adjoint: Vec<(usize, usize, f64)>,
    adjoint_rows: usize,
    n: usize,
}

impl Sections {
    pub fn new(t: &TreeSystem, window: &[Vertex]) -> Self {
        let n = window.len();
        let pos: HashMap<Vertex, usize> = window.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut extra: HashMap<Vertex, usize> = HashMap::new();
        let mut forward = Vec::new();
        for (j, &u) in window.iter().enumerate() {
            for v in t.preimages(u) {
                let row = match pos.get(&v) {
                    Some(&i) => i,
                    None => {
                        let k = n + extra.len();
                        *extra.entry(v).or_insert(k)
                    }
                };
                forward.push((j, row, t.weight(v).norm()));
            }
        }
        let forward_rows = n + extra.len();
        extra.clear();
        let mut adjoint = Vec::new();
        for (j, &v) in window.iter().enumerate() {
            if let Some(u) = t.image(v) {
                let row = match pos.get(&u) {
                    Some(&i) => i,
                    None => {
                        let k = n + extra.len();
                        *extra.entry(u).or_insert(k)
                    }
                };
                adjoint.push((j, row, t.weight(v).norm()));
            }
        }
        Sections { forward, forward_rows, adjoint, adjoint_rows: n + extra.len(), n }
    }

    fn one(&self, edges: &[(usize, usize, f64)], rows: usize, r: f64) -> f64 {
        let mut e: Vec<(usize, usize, f64)> = (0..self.n).map(|j| (j, rows + j, r)).collect();
        let mut col2 = vec![r * r; self.n];
        for &(j, row, w) in edges {
            e.push((row, rows + j, w));
            col2[j] += w * w;
        }
        let upper = col2.iter().cloned().fold(f64::INFINITY, f64::min).sqrt();
        Forest::new(rows + self.n, &e).expect("sections of a tree are forests").sigma_min(rows, upper)
    }

    /// `sigma_W(z)` for `|z| = r`.
    pub fn sigma(&self, r: f64) -> f64 {
        let a = self.one(&self.forward, self.forward_rows, r);
        let b = self.one(&self.adjoint, self.adjoint_rows, r);
        a.min(b)
    }
}

/// `sigma_W(z)` for the first `n` window vertices.
pub fn section_sigma(t: &TreeSystem, n: usize, r: f64) -> f64 {
    Sections::new(t, &window_order(t, n)).sigma(r)
}

/// Limit of `sigma` as the window grows, by Aitken extrapolation of the last three values.
///
/// Two values are extrapolated assuming the drop halves with each window; a single value is
/// returned as is. A drop that does not shrink gives `-inf`.
pub fn extrapolated_limit(sigmas: &[f64]) -> f64 {
    let k = sigmas.len();
    let last = sigmas[k - 1];
    match k {
        1 => last,
        2 => last - (sigmas[0] - last).max(0.0),
        _ => {
            let d1 = (sigmas[k - 3] - sigmas[k - 2]).max(0.0);
            let d2 = (sigmas[k - 2] - last).max(0.0);
            if d2 == 0.0 {
                last
            } else if d2 >= d1 {
                f64::NEG_INFINITY
            } else {
                let q = d2 / d1;
                last - d2 * q / (1.0 - q)
            }
        }
    }
}

/// IN when the largest window gives `sigma <= epsilon` and the values never increase; OUT when
/// both the largest-window value and the extrapolated limit are at least `5 epsilon`.
pub fn verdict(sigmas: &[f64], epsilon: f64) -> Verdict {
    let last = *sigmas.last().expect("at least one window");
    let nonincreasing = sigmas.windows(2).all(|p| p[1] <= p[0] + 1e-10);
    if last <= epsilon && nonincreasing {
        Verdict::In
    } else if last >= 5.0 * epsilon && extrapolated_limit(sigmas) >= 5.0 * epsilon {
        Verdict::Out
    } else {
        Verdict::Undecided
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub radius: f64,
    pub angle: f64,
    pub sigma: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudospectrumGrid {
    pub windows: Vec<usize>,
    pub epsilon: f64,
    pub outer_radius: f64,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// Radius-major order.
    pub points: Vec<GridPoint>,
}

impl PseudospectrumGrid {
    /// CSV with one row per point: `radius,angle,sigma_min_n<..>,...,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,angle");
        for n in &self.windows {
            out += &format!(",sigma_min_n{n}");
        }
        out += ",verdict\n";
        for p in &self.points {
            out += &format!("{:.17e},{:.17e}", p.radius, p.angle);
            for s in &p.sigma {
                out += &format!(",{s:.17e}");
            }
            out += &format!(",{}\n", p.verdict.as_str());
        }
        out
    }

    /// Polar heatmap of `log10 sigma` for the largest window.
    pub fn to_svg(&self) -> String {
        let size = 512.0;
        let c = size / 2.0;
        let scale = 0.9 * c / self.outer_radius.max(f64::MIN_POSITIVE);
        let mut out = String::from(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n\
             <rect width=\"512\" height=\"512\" fill=\"white\"/>\n",
        );
        let dot = (0.45 * scale * self.outer_radius / self.radii.len().max(1) as f64).max(1.0);
        for p in &self.points {
            let s = p.sigma.last().copied().unwrap_or(0.0).max(1e-16);
            let t = ((s.log10() - self.epsilon.log10()) / 3.0 + 0.5).clamp(0.0, 1.0);
            let (red, blue) = ((255.0 * (1.0 - t)) as u8, (255.0 * t) as u8);
            out += &format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{dot:.2}\" fill=\"rgb({red},0,{blue})\"/>\n",
                c + scale * p.radius * p.angle.cos(),
                c - scale * p.radius * p.angle.sin()
            );
        }
        out += "</svg>\n";
        out
    }
}

/// Evaluates the grid. Values depend on `z` only through `|z|`, so each radius is computed once.
pub fn pseudospectrum(t: &TreeSystem, opts: &LabOptions) -> Result<PseudospectrumGrid> {
    let g = &opts.grid;
    if g.radii < MIN_RADII || g.angles < MIN_ANGLES {
        return Err(Error::GridTooCoarse { radii: g.radii, angles: g.angles });
    }
    if opts.windows.is_empty() || opts.windows.contains(&0) {
        return Err(Error::InvalidParameter("windows must be a nonempty list of positive sizes".into()));
    }
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let sup = t.sup_weight();
    let required = 1.1 * sup;
    let outer = g.radius.unwrap_or(if sup > 0.0 { required } else { 1.0 });
    if outer < required * (1.0 - 1e-12) || outer <= 0.0 {
        return Err(Error::GridTooSmall { radius: outer, required });
    }
    let mut radii: Vec<f64> = (1..=g.radii).map(|k| outer * k as f64 / g.radii as f64).collect();
    radii.extend(g.extra_radii.iter().copied().filter(|r| r.is_finite() && *r >= 0.0));
    let angles: Vec<f64> = (0..g.angles).map(|j| std::f64::consts::TAU * j as f64 / g.angles as f64).collect();
    let sections: Vec<Sections> = opts.windows.iter().map(|&n| Sections::new(t, &window_order(t, n))).collect();
    let per_radius: Vec<Vec<f64>> =
        radii.par_iter().map(|&r| sections.iter().map(|s| s.sigma(r)).collect()).collect();
    let mut points = Vec::with_capacity(radii.len() * angles.len());
    for (r, sig) in radii.iter().zip(&per_radius) {
        let v = verdict(sig, opts.epsilon);
        for &a in &angles {
            points.push(GridPoint { radius: *r, angle: a, sigma: sig.clone(), verdict: v });
        }
    }
    Ok(PseudospectrumGrid { windows: opts.windows.clone(), epsilon: opts.epsilon, outer_radius: outer, radii, angles, points })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contradiction {
    pub radius: f64,
    pub angle: f64,
    pub verdict: Verdict,
    /// Distance to the predicted set (IN) or to its complement (OUT).
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub predicted: SpectrumDescription,
    pub tolerance: f64,
    pub contradictions: Vec<Contradiction>,
    pub max_radial_discrepancy: f64,
    pub counts: VerdictCounts,
    pub undecided_fraction: f64,
    /// No verdict contradicts the prediction beyond the tolerance.
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub inside: usize,
    pub outside: usize,
    pub undecided: usize,
}

pub const MAX_UNDECIDED_FRACTION: f64 = 0.05;

/// Default radial tolerance: two grid steps or `2 epsilon`, whichever is larger.
pub fn default_tolerance(grid: &PseudospectrumGrid) -> f64 {
    let step = grid.outer_radius / (grid.radii.len().max(1)) as f64;
    (2.0 * step).max(2.0 * grid.epsilon)
}

/// Compares the verdicts with a predicted spectrum.
pub fn certify_against(grid: &PseudospectrumGrid, predicted: &SpectrumDescription, tolerance: f64) -> Certification {
    let mut contradictions = Vec::new();
    let mut counts = VerdictCounts::default();
    let mut worst: f64 = 0.0;
    for p in &grid.points {
        let d = match p.verdict {
            Verdict::In => {
                counts.inside += 1;
                predicted.radial_distance(p.radius)
            }
            Verdict::Out => {
                counts.outside += 1;
                if predicted.contains_radius(p.radius) {
                    predicted.depth_inside(p.radius)
                } else {
                    0.0
                }
            }
            Verdict::Undecided => {
                counts.undecided += 1;
                0.0
            }
        };
        worst = worst.max(d);
        if d > tolerance {
            contradictions.push(Contradiction { radius: p.radius, angle: p.angle, verdict: p.verdict, distance: d });
        }
    }
    let total = grid.points.len().max(1) as f64;
    let undecided_fraction = counts.undecided as f64 / total;
    Certification {
        predicted: predicted.clone(),
        tolerance,
        pass: contradictions.is_empty(),
        contradictions,
        max_radial_discrepancy: worst,
        counts,
        undecided_fraction,
    }
}

/// Runs the grid and compares it with [`predicted_spectrum`].
pub fn certify(t: &TreeSystem, opts: &LabOptions) -> Result<(PseudospectrumGrid, Certification)> {
    let grid = pseudospectrum(t, opts)?;
    let tol = opts.tolerance.unwrap_or_else(|| default_tolerance(&grid));
    let cert = certify_against(&grid, &predicted_spectrum(t), tol);
    Ok((grid, cert))
}
