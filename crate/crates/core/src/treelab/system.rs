//! Finitely presented weighted shifts on directed trees.
//!
//! A [`TreeSystem`] has a finite core, inbound rays and outbound tails. The vertex map `Phi`
//! sends the first vertex of a ray to its attach vertex and moves every other ray vertex one
//! step closer to it; it moves tail vertices one step further out. The operator is
//! `(S h)(v) = lambda_v h(Phi v)` on `l^2(V)`.

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};

/// Eventually periodic weights `w_1, w_2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    pub preperiod: Vec<Complex64>,
    pub period: Vec<Complex64>,
}

impl WeightSequence {
    pub fn new(preperiod: Vec<Complex64>, period: Vec<Complex64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::NonPeriodicWeights);
        }
        Ok(WeightSequence { preperiod, period })
    }

    pub fn constant(w: f64) -> Self {
        WeightSequence { preperiod: Vec::new(), period: vec![Complex64::new(w, 0.0)] }
    }

    /// Weight of the `k`-th vertex, `k >= 1`.
    pub fn at(&self, k: usize) -> Complex64 {
        debug_assert!(k >= 1);
        let i = k - 1;
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// Geometric mean of the moduli over one period (0 if the period contains a zero).
    pub fn period_mean(&self) -> f64 {
        let k = self.period.len() as f64;
        let prod: f64 = self.period.iter().map(|w| w.norm()).product();
        if prod.is_normal() {
            prod.powf(1.0 / k)
        } else {
            let s: f64 = self.period.iter().map(|w| w.norm().ln()).sum();
            (s / k).exp()
        }
    }

    pub fn has_zero(&self) -> bool {
        self.preperiod.iter().chain(&self.period).any(|w| w.norm() == 0.0)
    }

    pub fn sup(&self) -> f64 {
        self.preperiod.iter().chain(&self.period).map(|w| w.norm()).fold(0.0, f64::max)
    }
}

/// Image of a core vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Next {
    Core(usize),
    Tail(usize),
    /// The image lies outside the system; `S h` vanishes at this vertex.
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreVertex {
    pub name: String,
    pub weight: Complex64,
    pub next: Next,
}

/// Inbound ray `x_1 <- x_2 <- ...` with `Phi(x_1) = attach`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub name: String,
    pub attach: usize,
    pub weights: WeightSequence,
}

/// Outbound chain `y_1 -> y_2 -> ...` with `Phi(origin) = y_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tail {
    pub name: String,
    pub origin: usize,
    pub weights: WeightSequence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Core(usize),
    /// `(ray, k)` with `k >= 1`.
    Ray(usize, usize),
    /// `(tail, k)` with `k >= 1`.
    Tail(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeSystem {
    core: Vec<CoreVertex>,
    rays: Vec<Ray>,
    tails: Vec<Tail>,
}

impl TreeSystem {
    /// Checks that the vertex map is well formed, onto, and free of periodic points.
    pub fn new(core: Vec<CoreVertex>, rays: Vec<Ray>, tails: Vec<Tail>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidTree(m));
        let n = core.len();
        if n == 0 {
            return bad("the core is empty".into());
        }
        let mut has_preimage = vec![false; n];
        let mut tail_origin = vec![None; tails.len()];
        for (i, v) in core.iter().enumerate() {
            match v.next {
                Next::Core(j) if j >= n => return bad(format!("core vertex {} maps to missing vertex {j}", v.name)),
                Next::Core(j) => has_preimage[j] = true,
                Next::Tail(t) if t >= tails.len() => return bad(format!("core vertex {} maps to missing tail {t}", v.name)),
                Next::Tail(t) => {
                    if tail_origin[t].is_some() {
                        return bad(format!("tail {t} is entered twice"));
                    }
                    tail_origin[t] = Some(i);
                }
                Next::Open => {}
            }
        }
        for (t, tail) in tails.iter().enumerate() {
            if tail_origin[t] != Some(tail.origin) {
                return bad(format!("tail {} is not entered from its origin", tail.name));
            }
        }
        for r in &rays {
            if r.attach >= n {
                return bad(format!("ray {} attaches to missing vertex {}", r.name, r.attach));
            }
            has_preimage[r.attach] = true;
        }
        if let Some(i) = has_preimage.iter().position(|&p| !p) {
            return bad(format!("core vertex {} has no preimage", core[i].name));
        }
        // core orbits must leave the core: no cycles among core vertices
        for start in 0..n {
            let mut v = start;
            for _ in 0..=n {
                match core[v].next {
                    Next::Core(j) => v = j,
                    _ => break,
                }
                if v == start {
                    return bad(format!("core vertex {} is periodic", core[start].name));
                }
            }
            if let Next::Core(_) = core[v].next {
                return bad("core contains a cycle".into());
            }
        }
        for w in rays.iter().map(|r| &r.weights).chain(tails.iter().map(|t| &t.weights)) {
            if w.period.is_empty() {
                return Err(Error::NonPeriodicWeights);
            }
        }
        Ok(TreeSystem { core, rays, tails })
    }

    pub fn core(&self) -> &[CoreVertex] {
        &self.core
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn tails(&self) -> &[Tail] {
        &self.tails
    }

    pub fn weight(&self, v: Vertex) -> Complex64 {
        match v {
            Vertex::Core(i) => self.core[i].weight,
            Vertex::Ray(r, k) => self.rays[r].weights.at(k),
            Vertex::Tail(t, k) => self.tails[t].weights.at(k),
        }
    }

    /// `Phi(v)`, or `None` when it leaves the system.
    pub fn image(&self, v: Vertex) -> Option<Vertex> {
        match v {
            Vertex::Core(i) => match self.core[i].next {
                Next::Core(j) => Some(Vertex::Core(j)),
                Next::Tail(t) => Some(Vertex::Tail(t, 1)),
                Next::Open => None,
            },
            Vertex::Ray(r, 1) => Some(Vertex::Core(self.rays[r].attach)),
            Vertex::Ray(r, k) => Some(Vertex::Ray(r, k - 1)),
            Vertex::Tail(t, k) => Some(Vertex::Tail(t, k + 1)),
        }
    }

    /// All `u` with `Phi(u) = v`.
    pub fn preimages(&self, v: Vertex) -> Vec<Vertex> {
        match v {
            Vertex::Core(i) => {
                let mut out: Vec<Vertex> = (0..self.core.len())
                    .filter(|&j| self.core[j].next == Next::Core(i))
                    .map(Vertex::Core)
                    .collect();
                out.extend((0..self.rays.len()).filter(|&r| self.rays[r].attach == i).map(|r| Vertex::Ray(r, 1)));
                out
            }
            Vertex::Ray(r, k) => vec![Vertex::Ray(r, k + 1)],
            Vertex::Tail(t, 1) => vec![Vertex::Core(self.tails[t].origin)],
            Vertex::Tail(t, k) => vec![Vertex::Tail(t, k - 1)],
        }
    }

    pub fn sup_weight(&self) -> f64 {
        self.core
            .iter()
            .map(|v| v.weight.norm())
            .chain(self.rays.iter().map(|r| r.weights.sup()))
            .chain(self.tails.iter().map(|t| t.weights.sup()))
            .fold(0.0, f64::max)
    }

    pub fn vertex_name(&self, v: Vertex) -> String {
        match v {
            Vertex::Core(i) => self.core[i].name.clone(),
            Vertex::Ray(r, k) => format!("{}[{k}]", self.rays[r].name),
            Vertex::Tail(t, k) => format!("{}[{k}]", self.tails[t].name),
        }
    }

    /// The same system with every weight replaced by its modulus.
    pub fn moduli(&self) -> Self {
        let abs = |w: &WeightSequence| WeightSequence {
            preperiod: w.preperiod.iter().map(|x| Complex64::new(x.norm(), 0.0)).collect(),
            period: w.period.iter().map(|x| Complex64::new(x.norm(), 0.0)).collect(),
        };
        TreeSystem {
            core: self
                .core
                .iter()
                .map(|v| CoreVertex { weight: Complex64::new(v.weight.norm(), 0.0), ..v.clone() })
                .collect(),
            rays: self.rays.iter().map(|r| Ray { weights: abs(&r.weights), ..r.clone() }).collect(),
            tails: self.tails.iter().map(|t| Tail { weights: abs(&t.weights), ..t.clone() }).collect(),
        }
    }

    /// Checks whether `rho(v) = 1/sqrt(#Phi^{-1}(Phi v))` makes the composition operator an isometry:
    /// the sum of `|rho|^2` over every fibre must be 1. Vertices mapping outside are skipped.
    pub fn isometry_weights_ok(&self) -> bool {
        let fibre = |v: Vertex| self.image(v).map(|u| self.preimages(u).len());
        let mut fibres: Vec<Vertex> = (0..self.core.len()).map(Vertex::Core).collect();
        fibres.extend((0..self.tails.len()).map(|t| Vertex::Tail(t, 1)));
        fibres.extend((0..self.rays.len()).map(|r| Vertex::Ray(r, 1)));
        fibres.iter().all(|&u| {
            let pre = self.preimages(u);
            let s: f64 = pre.iter().map(|&v| 1.0 / fibre(v).unwrap_or(1) as f64).sum();
            (s - 1.0).abs() < 1e-12
        })
    }
}

/// The two-sided line `v_n` with weight 2 and the one-sided chain `w_{-n}` feeding into `v_0`,
/// with weight 0 at `w_{-1}` and 1/2 further out.
pub fn contrexample() -> TreeSystem {
    let c = |x: f64| Complex64::new(x, 0.0);
    TreeSystem::new(
        vec![CoreVertex { name: "v0".into(), weight: c(2.0), next: Next::Tail(0) }],
        vec![
            Ray { name: "v-".into(), attach: 0, weights: WeightSequence::constant(2.0) },
            Ray { name: "w-".into(), attach: 0, weights: WeightSequence { preperiod: vec![c(0.0)], period: vec![c(0.5)] } },
        ],
        vec![Tail { name: "v+".into(), origin: 0, weights: WeightSequence::constant(2.0) }],
    )
    .expect("built-in system is valid")
}

/// Bilateral shift with constant weight `w`.
pub fn bilateral(w: f64) -> TreeSystem {
    TreeSystem::new(
        vec![CoreVertex { name: "x0".into(), weight: Complex64::new(w, 0.0), next: Next::Tail(0) }],
        vec![Ray { name: "x-".into(), attach: 0, weights: WeightSequence::constant(w) }],
        vec![Tail { name: "x+".into(), origin: 0, weights: WeightSequence::constant(w) }],
    )
    .expect("built-in system is valid")
}

/// Unilateral shift with constant weight `w` (the single core vertex maps outside).
pub fn unilateral(w: f64) -> TreeSystem {
    TreeSystem::new(
        vec![CoreVertex { name: "x0".into(), weight: Complex64::new(w, 0.0), next: Next::Open }],
        vec![Ray { name: "x".into(), attach: 0, weights: WeightSequence::constant(w) }],
        Vec::new(),
    )
    .expect("built-in system is valid")
}

/// Looks up a built-in system by name.
pub fn builtin(name: &str) -> Option<TreeSystem> {
    match name {
        "contrexample" => Some(contrexample()),
        "bilateral" => Some(bilateral(1.0)),
        "unilateral" => Some(unilateral(1.0)),
        _ => None,
    }
}

fn parse_complex(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => {
            let re = p[0].as_f64().ok_or_else(|| Error::Config(format!("bad weight {v}")))?;
            let im = p[1].as_f64().ok_or_else(|| Error::Config(format!("bad weight {v}")))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(Error::Config(format!("weight must be a number or [re, im], got {v}"))),
    }
    .and_then(|z| if z.re.is_finite() && z.im.is_finite() { Ok(z) } else { Err(Error::Config(format!("bad weight {v}"))) })
}

fn parse_weights(obj: &Value) -> Result<WeightSequence> {
    let list = |key: &str| -> Result<Vec<Complex64>> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(a)) => a.iter().map(parse_complex).collect(),
            Some(other) => Err(Error::Config(format!("{key} must be a list, got {other}"))),
        }
    };
    WeightSequence::new(list("preperiod")?, list("period")?)
}

fn resolve_core(names: &[String], v: &Value) -> Result<usize> {
    match v {
        Value::Number(x) => x
            .as_u64()
            .map(|i| i as usize)
            .filter(|&i| i < names.len())
            .ok_or_else(|| Error::InvalidTree(format!("no core vertex {v}"))),
        Value::String(s) => {
            names.iter().position(|n| n == s).ok_or_else(|| Error::InvalidTree(format!("no core vertex {s}")))
        }
        _ => Err(Error::InvalidTree(format!("bad core vertex reference {v}"))),
    }
}

/// Parses a system from JSON.
///
/// ```json
/// {"core": [{"name": "v0", "weight": 2}],
///  "rays": [{"attach": "v0", "period": [2]}, {"attach": "v0", "preperiod": [0], "period": [0.5]}],
///  "tails": [{"from": "v0", "period": [2]}]}
/// ```
///
/// A core vertex maps to the core vertex named by its `next` field, to the tail that starts
/// from it, or outside the system when neither is given. Weights are numbers or `[re, im]`.
pub fn parse_tree(v: &Value) -> Result<TreeSystem> {
    let cfg = |m: &str| Error::Config(m.to_string());
    let core_v = v.get("core").and_then(Value::as_array).ok_or_else(|| cfg("missing core list"))?;
    let names: Vec<String> = core_v
        .iter()
        .enumerate()
        .map(|(i, c)| c.get("name").and_then(Value::as_str).map_or_else(|| format!("c{i}"), str::to_string))
        .collect();
    let empty = Vec::new();
    let tails_v = v.get("tails").and_then(Value::as_array).unwrap_or(&empty);
    let rays_v = v.get("rays").and_then(Value::as_array).unwrap_or(&empty);
    let mut tails = Vec::new();
    for (t, tv) in tails_v.iter().enumerate() {
        let from = tv.get("from").or_else(|| tv.get("origin")).ok_or_else(|| cfg("tail without from"))?;
        tails.push(Tail {
            name: tv.get("name").and_then(Value::as_str).map_or_else(|| format!("t{t}"), str::to_string),
            origin: resolve_core(&names, from)?,
            weights: parse_weights(tv)?,
        });
    }
    let mut core = Vec::new();
    for (i, c) in core_v.iter().enumerate() {
        let weight = parse_complex(c.get("weight").ok_or_else(|| cfg("core vertex without weight"))?)?;
        let tail = tails.iter().position(|t| t.origin == i);
        let next = match (c.get("next"), tail) {
            (Some(n), None) if !n.is_null() => Next::Core(resolve_core(&names, n)?),
            (Some(n), Some(_)) if !n.is_null() => {
                return Err(Error::InvalidTree(format!("core vertex {} has both next and a tail", names[i])))
            }
            (_, Some(t)) => Next::Tail(t),
            _ => Next::Open,
        };
        core.push(CoreVertex { name: names[i].clone(), weight, next });
    }
    let mut rays = Vec::new();
    for (r, rv) in rays_v.iter().enumerate() {
        let attach = rv.get("attach").ok_or_else(|| cfg("ray without attach"))?;
        rays.push(Ray {
            name: rv.get("name").and_then(Value::as_str).map_or_else(|| format!("r{r}"), str::to_string),
            attach: resolve_core(&names, attach)?,
            weights: parse_weights(rv)?,
        });
    }
    TreeSystem::new(core, rays, tails)
}
