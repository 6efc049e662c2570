//! Spectral radius and spectrum shape of weighted shifts `aT` on shift spaces.
//!
//! `T` is the isometry attached to a cocycle `rho`; the spectral radius of `aT` is the square root
//! of the Perron root of the transfer operator with weight `|a|^2 rho`.

use serde::Serialize;

use crate::error::Result;
use crate::measures::{variational_search, SearchOptions, VariationalResult};
use crate::perron::{spectral_radius, PowerOptions, RadiusEnclosure};
use crate::potentials::{uniform_cocycle, validate_cocycle, CylinderFunction};
use crate::ruelle::build_transfer;
use crate::sft::freeness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub topologically_free: bool,
    pub condition_i: bool,
    /// The whole spectrum is essential spectrum.
    pub essential_equals_full: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ring {
    pub rmin: f64,
    pub rmax: f64,
    pub provenance: String,
}

/// Rotation-symmetric subset of the plane: an optional closed disk plus closed annuli.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumDescription {
    pub disk: Option<f64>,
    pub rings: Vec<Ring>,
    pub radius: f64,
    pub hypotheses: Option<Hypotheses>,
    pub label: String,
}

pub const CERTIFIED_LABEL: &str = "certified";
pub const DIAGNOSTIC_LABEL: &str = "theorem hypotheses not met; diagnostic only";

impl SpectrumDescription {
    /// Sorts the rings and merges radial intervals that touch or overlap.
    pub fn normalized(disk: Option<f64>, rings: Vec<Ring>, hypotheses: Option<Hypotheses>, label: &str) -> Self {
        let mut rings = rings;
        rings.sort_by(|a, b| a.rmin.total_cmp(&b.rmin).then(a.rmax.total_cmp(&b.rmax)));
        let close = |a: f64, b: f64| b <= a + 1e-12 * a.max(1.0);
        let mut disk = disk;
        let mut merged: Vec<Ring> = Vec::new();
        for r in rings {
            if let Some(d) = disk {
                if close(d, r.rmin) {
                    disk = Some(d.max(r.rmax));
                    continue;
                }
            }
            if let Some(last) = merged.last_mut() {
                if close(last.rmax, r.rmin) {
                    last.rmax = last.rmax.max(r.rmax);
                    if !last.provenance.split(" + ").any(|p| p == r.provenance) {
                        last.provenance = format!("{} + {}", last.provenance, r.provenance);
                    }
                    continue;
                }
            }
            merged.push(r);
        }
        // a disk may have swallowed rings that were sorted before it grew
        if let Some(d) = disk {
            merged.retain(|r| r.rmin > d + 1e-12 * d.max(1.0));
        }
        let radius = merged.iter().map(|r| r.rmax).fold(disk.unwrap_or(0.0), f64::max);
        SpectrumDescription { disk, rings: merged, radius, hypotheses, label: label.to_string() }
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        self.disk.is_some() as usize + self.rings.len()
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        self.disk.is_some_and(|d| r <= d) || self.rings.iter().any(|g| g.rmin <= r && r <= g.rmax)
    }

    /// Distance from the circle of radius `r` to the set.
    pub fn radial_distance(&self, r: f64) -> f64 {
        let mut best = f64::INFINITY;
        if let Some(d) = self.disk {
            best = best.min((r - d).max(0.0));
        }
        for g in &self.rings {
            let d = if r < g.rmin {
                g.rmin - r
            } else if r > g.rmax {
                r - g.rmax
            } else {
                0.0
            };
            best = best.min(d);
        }
        best
    }

    /// Distance from the circle of radius `r` to the complement of the set.
    pub fn depth_inside(&self, r: f64) -> f64 {
        if let Some(d) = self.disk {
            if r <= d {
                return d - r;
            }
        }
        self.rings
            .iter()
            .filter(|g| g.rmin <= r && r <= g.rmax)
            .map(|g| (r - g.rmin).min(g.rmax - r))
            .fold(0.0, f64::max)
    }

    /// Concentric rendering, 512 x 512, radii scaled to 90% of the half width.
    pub fn to_svg(&self) -> String {
        let size = 512.0;
        let c = size / 2.0;
        let scale = if self.radius > 0.0 { 0.9 * c / self.radius } else { 1.0 };
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n\
             <rect width=\"512\" height=\"512\" fill=\"white\"/>\n"
        );
        if let Some(d) = self.disk {
            out += &format!(
                "<circle cx=\"{c}\" cy=\"{c}\" r=\"{:.3}\" fill=\"steelblue\" fill-opacity=\"0.8\"/>\n",
                d * scale
            );
        }
        for g in &self.rings {
            let (r0, r1) = (g.rmin * scale, g.rmax * scale);
            if r1 - r0 < 1.0 {
                out += &format!(
                    "<circle cx=\"{c}\" cy=\"{c}\" r=\"{:.3}\" fill=\"none\" stroke=\"darkred\" stroke-width=\"2\"/>\n",
                    0.5 * (r0 + r1)
                );
            } else {
                out += &format!(
                    "<path d=\"M {x1} {c} A {r1} {r1} 0 1 0 {x1m} {c} A {r1} {r1} 0 1 0 {x1} {c} Z \
                     M {x0} {c} A {r0} {r0} 0 1 1 {x0m} {c} A {r0} {r0} 0 1 1 {x0} {c} Z\" \
                     fill=\"darkred\" fill-opacity=\"0.7\" fill-rule=\"evenodd\"/>\n",
                    x1 = c + r1,
                    x1m = c - r1,
                    x0 = c + r0,
                    x0m = c - r0,
                );
            }
        }
        out += &format!(
            "<circle cx=\"{c}\" cy=\"{c}\" r=\"1.5\" fill=\"black\"/>\n<text x=\"8\" y=\"20\" font-family=\"monospace\" \
             font-size=\"12\">r = {:.6}</text>\n</svg>\n",
            self.radius
        );
        out
    }
}

/// `r(aT)` with its bracket and the transfer-matrix root it comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusResult {
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
    /// Perron root of the transfer matrix of `|a|^2 rho`.
    pub transfer_radius: RadiusEnclosure,
}

/// The weight `|a|^2 rho`.
pub fn squared_weight(a: &CylinderFunction, rho: &CylinderFunction) -> Result<CylinderFunction> {
    a.abs().square().mul(rho)
}

/// `r(aT) = exp(P(ln(|a|^2 rho)) / 2)`.
pub fn weighted_shift_radius(a: &CylinderFunction, rho: &CylinderFunction, opts: PowerOptions) -> Result<RadiusResult> {
    validate_cocycle(rho)?;
    let t = build_transfer(&squared_weight(a, rho)?)?;
    let e = spectral_radius(&t.w, opts)?;
    Ok(RadiusResult { radius: e.rho.sqrt(), lo: e.lo.sqrt(), hi: e.hi.sqrt(), transfer_radius: e })
}

/// `exp(v / 2)` where `v` is the best value of the variational search for `ln(|a|^2 rho)`.
pub fn variational_radius(
    a: &CylinderFunction,
    rho: &CylinderFunction,
    opts: SearchOptions,
) -> Result<(f64, VariationalResult)> {
    validate_cocycle(rho)?;
    let b = squared_weight(a, rho)?.ln()?;
    let r = variational_search(&b, opts)?;
    Ok(((0.5 * r.value).exp(), r))
}

/// Spectrum of `aT` on a shift space.
///
/// Without isolated points the spectrum is the disk of radius `r(aT)`. Otherwise each sink cycle
/// gives a circle at the geometric mean of `|a| sqrt(rho)` along its periodic orbit and the rest
/// of the graph a disk; that output is marked diagnostic.
pub fn spectrum_sft(a: &CylinderFunction, rho: &CylinderFunction, opts: PowerOptions) -> Result<SpectrumDescription> {
    validate_cocycle(rho)?;
    let report = freeness(a.matrix());
    if report.condition_i {
        let r = weighted_shift_radius(a, rho, opts)?;
        let hyp = Hypotheses { topologically_free: true, condition_i: true, essential_equals_full: true };
        return Ok(SpectrumDescription::normalized(Some(r.radius), Vec::new(), Some(hyp), CERTIFIED_LABEL));
    }
    let c = squared_weight(a, rho)?;
    let t = build_transfer(&c)?;
    let m = t.presentation.block_depth;
    let d = c.depth().max(m + 1);
    let mut on_cycle = vec![false; a.matrix().n()];
    let mut rings = Vec::new();
    for (k, cycle) in report.sink_cycles.iter().enumerate() {
        let len = cycle.len();
        let mut log_sum = 0.0;
        for start in 0..len {
            on_cycle[cycle[start]] = true;
            let w: Vec<usize> = (0..d).map(|s| cycle[(start + s) % len]).collect();
            log_sum += 0.5 * c.eval(&w)?.ln();
        }
        let r = (log_sum / len as f64).exp();
        rings.push(Ring { rmin: r, rmax: r, provenance: format!("sink cycle {k}") });
    }
    let rest: Vec<usize> =
        (0..t.len()).filter(|&b| !on_cycle[t.presentation.block_words()[b][0]]).collect();
    let disk = if rest.is_empty() {
        None
    } else {
        Some(spectral_radius(&t.w.restrict(&rest), opts)?.rho.sqrt())
    };
    let hyp = Hypotheses { topologically_free: false, condition_i: false, essential_equals_full: false };
    Ok(SpectrumDescription::normalized(disk, rings, Some(hyp), DIAGNOSTIC_LABEL))
}

/// `r(aT)` for the canonical isometry of a Cuntz–Krieger shift (cocycle `1/#preimages`).
pub fn cuntz_krieger_radius(a: &CylinderFunction, opts: PowerOptions) -> Result<RadiusResult> {
    let rho = uniform_cocycle(a.matrix())?;
    weighted_shift_radius(a, &rho, opts)
}
