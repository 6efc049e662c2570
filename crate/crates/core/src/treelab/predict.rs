use super::invariant::{path_from_ray, rays_feeding};
use super::system::{Next, TreeSystem};
use crate::spectra::{Ring, SpectrumDescription};

pub const PREDICTED_LABEL: &str = "derived, lab-certified";

/// Fredholm data of `S - z` for `|z| = r` off the critical circles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionData {
    pub index: i64,
    pub kernel: i64,
}

impl RegionData {
    /// Dimension of the cokernel.
    pub fn cokernel(&self) -> i64 {
        self.kernel - self.index
    }

    pub fn in_spectrum(&self) -> bool {
        self.kernel > 0 || self.cokernel() > 0
    }
}

/// Geometric means of the ray and tail periods; the circles where `S - z` stops being Fredholm.
pub fn critical_radii(t: &TreeSystem) -> Vec<f64> {
    let mut g: Vec<f64> = t
        .rays()
        .iter()
        .map(|r| r.weights.period_mean())
        .chain(t.tails().iter().map(|x| x.weights.period_mean()))
        .filter(|&g| g > 0.0)
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
    g
}

/// Index and kernel dimension of `S - z` at `|z| = r`, for `r > 0` not a critical radius.
///
/// A kernel vector is determined by its value at the start of a tail and decays along the tail
/// when `r < g`. Pulled back through the tree it blows up along every ray with `g >= r` that it
/// reaches without passing a zero weight.
pub fn region_data(t: &TreeSystem, r: f64) -> RegionData {
    let tails_out = t.tails().iter().filter(|x| x.weights.period_mean() > r).count() as i64;
    let rays_out = t.rays().iter().filter(|x| x.weights.period_mean() > r).count() as i64;
    let mut kernel = 0;
    for tail in t.tails() {
        let g = tail.weights.period_mean();
        if g <= r {
            continue;
        }
        if tail.weights.preperiod.iter().any(|w| w.norm() == 0.0) {
            kernel += 1;
            continue;
        }
        let blocked = rays_feeding(t, tail.origin).into_iter().any(|ray| {
            let w = &t.rays()[ray].weights;
            let path = path_from_ray(t, ray, tail.origin).expect("ray feeds the origin");
            !w.has_zero() && w.period_mean() >= r && path.iter().all(|&c| t.core()[c].weight.norm() > 0.0)
        });
        if !blocked {
            kernel += 1;
        }
    }
    RegionData { index: tails_out - rays_out, kernel }
}

/// Whether `S` itself is invertible.
pub fn is_invertible(t: &TreeSystem) -> bool {
    let n = t.core().len();
    let mut fibre = vec![0usize; n];
    for v in t.core() {
        match v.next {
            Next::Core(j) => fibre[j] += 1,
            Next::Open => return false,
            Next::Tail(_) => {}
        }
    }
    for r in t.rays() {
        fibre[r.attach] += 1;
    }
    fibre.iter().all(|&f| f == 1)
        && t.core().iter().all(|v| v.weight.norm() > 0.0)
        && t.rays().iter().all(|r| !r.weights.has_zero())
        && t.tails().iter().all(|x| !x.weights.has_zero())
}

/// Predicted spectrum: every critical circle, the open annular regions where `S - z` has
/// nonzero kernel or cokernel, and the origin when `S` is not invertible.
pub fn predicted_spectrum(t: &TreeSystem) -> SpectrumDescription {
    let crit = critical_radii(t);
    let mut rings: Vec<Ring> = crit
        .iter()
        .map(|&g| Ring { rmin: g, rmax: g, provenance: "critical circle".into() })
        .collect();
    let mut disk = None;
    let mut lo = 0.0;
    for (k, &hi) in crit.iter().enumerate() {
        let mid = 0.5 * (lo + hi);
        if region_data(t, mid).in_spectrum() {
            if k == 0 {
                disk = Some(hi);
            } else {
                rings.push(Ring { rmin: lo, rmax: hi, provenance: "Fredholm region".into() });
            }
        }
        lo = hi;
    }
    if disk.is_none() && !is_invertible(t) {
        disk = Some(0.0);
    }
    SpectrumDescription::normalized(disk, rings, None, PREDICTED_LABEL)
}
