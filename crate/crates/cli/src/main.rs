mod json;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thermoshift::config::{parse_model, Model, SftModel};
use thermoshift::measures::{
    t_entropy, t_entropy_definition_estimate, SearchOptions, TEntropyEstimate,
};
use thermoshift::perron::{PowerOptions, RadiusEnclosure, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL};
use thermoshift::potentials::validate_cocycle;
use thermoshift::ruelle::{gibbs_markov, pressure};
use thermoshift::sft::{classify, decompose, freeness};
use thermoshift::spectra::{spectrum_sft, variational_radius, weighted_shift_radius, SpectrumDescription};
use thermoshift::treelab::{
    builtin, certify_against, critical_radii, decompose_invariant, default_tolerance, predicted_spectrum,
    pseudospectrum, region_data, Certification, GridSpec, LabOptions, PseudospectrumGrid, TreeSystem, Vertex,
    MAX_UNDECIDED_FRACTION,
};
use thermoshift::Error;

use json::{matrix, num, nums};

#[derive(Parser)]
#[command(name = "thermoshift", version, about = "Pressure, Gibbs measures and weighted shift spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Width of Perron root enclosures [default: 1e-10].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Power iteration budget.
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Restarts of the variational search [default: 200].
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Gradient steps per restart [default: 5000].
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed of the variational search [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pseudospectrum grid as RADIIxANGLES.
    #[arg(long, global = true, default_value = "64x64")]
    grid: String,
    /// Outer grid radius [default: 1.1 sup|weight|].
    #[arg(long, global = true)]
    grid_radius: Option<f64>,
    /// Extra grid circles, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    extra_radii: Vec<f64>,
    #[arg(long, global = true, default_value_t = 1e-2)]
    epsilon: f64,
    /// Window sizes, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "100,200,400")]
    windows: Vec<usize>,
    /// Worker threads for grid sweeps and restarts.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write an SVG rendering here.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Write the pseudospectrum grid here as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Run the pseudospectrum lab against the prediction (tree-spectrum).
    #[arg(long, global = true)]
    certify: bool,
    /// Iterates of the transfer operator in the t-entropy estimate.
    #[arg(long, global = true, default_value_t = 6)]
    iterates: usize,
    /// Cylinder depth of the partitions in the t-entropy estimate.
    #[arg(long, global = true, default_value_t = 6)]
    partition_depth: usize,
}

#[derive(Args)]
struct ModelArg {
    /// Model file, or the name of a built-in tree system.
    model: String,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a model.
    Validate(ModelArg),
    /// Irreducible blocks of a shift, or the invariant decomposition of a tree.
    Decompose(ModelArg),
    /// Sink cycles and condition (I).
    Freeness(ModelArg),
    /// Topological pressure of the potential.
    Pressure(ModelArg),
    /// Gibbs measure of the potential.
    Gibbs(ModelArg),
    /// Spectral radius of the weighted shift.
    Radius(ModelArg),
    /// Spectrum of the weighted shift.
    Spectrum(ModelArg),
    /// t-entropy of the Gibbs measure of the potential.
    Tentropy(ModelArg),
    /// Predicted spectrum of a weighted shift on a tree.
    TreeSpectrum(ModelArg),
    /// Finite-section pseudospectrum grid of a tree system.
    Pseudospectrum(ModelArg),
    /// SVG picture of the spectrum.
    Render(ModelArg),
}

struct Failure {
    code: String,
    detail: String,
    exit: u8,
    enclosure: Option<RadiusEnclosure>,
}

impl Failure {
    fn input(code: &str, detail: impl Into<String>) -> Self {
        Failure { code: code.into(), detail: detail.into(), exit: 2, enclosure: None }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let enclosure = match &e {
            Error::MaxIterations { enclosure, .. } => Some(*enclosure),
            _ => None,
        };
        Failure { code: e.code().into(), detail: e.to_string(), exit: if e.is_numerical() { 3 } else { 2 }, enclosure }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn load(model: &str) -> std::result::Result<Model, Failure> {
    let path = Path::new(model);
    if !path.exists() {
        return builtin(model)
            .map(Model::Tree)
            .ok_or_else(|| Failure::input("Io", format!("{model}: no such file or built-in system")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input("Io", format!("{model}: {e}")))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::input("Parse", format!("{model}: {e}")))?;
    Ok(parse_model(&v)?)
}

fn sft(m: Model) -> std::result::Result<SftModel, Failure> {
    match m {
        Model::Sft(s) => Ok(s),
        Model::Tree(_) => Err(Failure::input("UnsupportedModel", "this command needs a shift model")),
    }
}

fn tree(m: Model) -> std::result::Result<TreeSystem, Failure> {
    match m {
        Model::Tree(t) => Ok(t),
        Model::Sft(_) => Err(Failure::input("UnsupportedModel", "this command needs a tree model")),
    }
}

fn power_options(f: &Flags, m: &SftModel) -> std::result::Result<PowerOptions, Failure> {
    let tol = f.tol.or(m.options.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Failure::input("InvalidParameter", format!("tol must lie in (0, 1), got {tol}")));
    }
    let max_iterations = f.max_iterations.or(m.options.max_iterations).unwrap_or(DEFAULT_MAX_ITERATIONS);
    Ok(PowerOptions { tol, max_iterations })
}

fn search_options(f: &Flags, m: &SftModel) -> SearchOptions {
    let d = SearchOptions::default();
    SearchOptions {
        restarts: f.restarts.or(m.options.restarts).unwrap_or(d.restarts),
        steps: f.steps.or(m.options.steps).unwrap_or(d.steps),
        seed: f.seed.or(m.options.seed).unwrap_or(d.seed),
    }
}

fn lab_options(f: &Flags) -> std::result::Result<LabOptions, Failure> {
    let bad = || Failure::input("InvalidParameter", format!("--grid expects RADIIxANGLES, got {}", f.grid));
    let (r, a) = f.grid.split_once(['x', 'X']).ok_or_else(bad)?;
    let radii = r.trim().parse().map_err(|_| bad())?;
    let angles = a.trim().parse().map_err(|_| bad())?;
    if !(f.epsilon > 0.0) {
        return Err(Failure::input("InvalidParameter", format!("epsilon must be positive, got {}", f.epsilon)));
    }
    Ok(LabOptions {
        windows: f.windows.clone(),
        epsilon: f.epsilon,
        grid: GridSpec { radii, angles, radius: f.grid_radius, extra_radii: f.extra_radii.clone() },
        tolerance: None,
    })
}

fn enclosure(e: &RadiusEnclosure) -> Value {
    json!({"rho": num(e.rho), "lo": num(e.lo), "hi": num(e.hi), "converged": e.converged, "iterations": e.iterations})
}

fn spectrum_json(s: &SpectrumDescription) -> Value {
    let rings: Vec<Value> = s
        .rings
        .iter()
        .map(|r| json!({"rmin": num(r.rmin), "rmax": num(r.rmax), "provenance": r.provenance}))
        .collect();
    let mut v = json!({
        "disk": s.disk.map(num),
        "rings": rings,
        "radius": num(s.radius),
        "components": s.component_count(),
        "label": s.label,
    });
    if let Some(h) = s.hypotheses {
        v["hypotheses"] = json!({
            "condition_I": h.condition_i,
            "topologically_free": h.topologically_free,
            "essential_equals_full": h.essential_equals_full,
        });
    }
    v
}

fn names(t: &TreeSystem, vs: impl IntoIterator<Item = Vertex>) -> Vec<String> {
    vs.into_iter().map(|v| t.vertex_name(v)).collect()
}

fn validate(m: Model) -> Outcome {
    match m {
        Model::Sft(s) => {
            let a = &s.matrix;
            let cls = classify(a);
            let report = validate_cocycle(&s.cocycle)?;
            Ok(json!({
                "valid": true,
                "kind": "sft",
                "states": a.n(),
                "edges": a.edge_count(),
                "cuntz_krieger": a.is_cuntz_krieger(),
                "irreducible": cls.sccs.len() == 1,
                "potential": {"depth": s.potential.depth()},
                "weight": {"depth": s.weight.depth()},
                "cocycle": {
                    "depth": s.cocycle.depth(),
                    "strict": report.strict,
                    "min_value": num(report.min_value),
                    "max_defect": num(report.max_defect),
                },
            }))
        }
        Model::Tree(t) => Ok(json!({
            "valid": true,
            "kind": "tree",
            "core": t.core().len(),
            "rays": t.rays().len(),
            "tails": t.tails().len(),
            "sup_weight": num(t.sup_weight()),
            "isometry_weights": t.isometry_weights_ok(),
        })),
    }
}

fn decompose_cmd(m: Model) -> Outcome {
    match m {
        Model::Sft(s) => {
            let cls = classify(&s.matrix);
            let d = decompose(&s.matrix)?;
            let blocks: Vec<Value> = d
                .blocks
                .iter()
                .map(|b| json!({"states": b.states, "period": b.period, "cyclic_classes": b.cyclic_classes}))
                .collect();
            Ok(json!({
                "sccs": cls.sccs,
                "essential": cls.essential,
                "blocks": blocks,
                "relabeling": d.relabeling,
            }))
        }
        Model::Tree(t) => {
            let d = decompose_invariant(&t);
            let lines: Vec<Value> = d
                .bijective_components
                .iter()
                .map(|l| {
                    json!({
                        "ray": t.rays()[l.ray].name,
                        "tail": t.tails()[l.tail].name,
                        "core_path": names(&t, l.core_path.iter().map(|&i| Vertex::Core(i))),
                    })
                })
                .collect();
            Ok(json!({
                "n": d.n(),
                "bijective_components": lines,
                "residual": {
                    "core": names(&t, d.residual.core.iter().map(|&i| Vertex::Core(i))),
                    "rays": d.residual.rays.iter().map(|&r| t.rays()[r].name.clone()).collect::<Vec<_>>(),
                },
            }))
        }
    }
}

fn freeness_cmd(m: Model) -> Outcome {
    let s = sft(m)?;
    let r = freeness(&s.matrix);
    Ok(json!({
        "condition_I": r.condition_i,
        "topologically_free": r.topologically_free,
        "sink_cycles": r.sink_cycles,
        "feeder_states": r.feeder_states,
    }))
}

fn pressure_cmd(f: &Flags, m: Model) -> Outcome {
    let s = sft(m)?;
    let p = pressure(&s.potential, power_options(f, &s)?)?;
    Ok(json!({"pressure": num(p.value), "enclosure": nums(&[p.lo, p.hi]), "perron_root": enclosure(&p.radius)}))
}

fn gibbs_cmd(f: &Flags, m: Model) -> Outcome {
    let s = sft(m)?;
    let opts = power_options(f, &s)?;
    let c = s.potential.exp();
    let mu = gibbs_markov(&c, opts)?;
    let p = pressure(&s.potential, opts)?;
    let integral = mu.integrate(&s.potential)?;
    let h = mu.entropy();
    Ok(json!({
        "q": matrix(mu.q()),
        "pi": nums(mu.pi()),
        "entropy": num(h),
        "integral": num(integral),
        "free_energy": num(integral + h),
        "pressure": num(p.value),
        "enclosure": nums(&[p.lo, p.hi]),
        "residual": num((integral + h - p.value).abs()),
    }))
}

fn radius_cmd(f: &Flags, m: Model) -> Outcome {
    let s = sft(m)?;
    let r = weighted_shift_radius(&s.weight, &s.cocycle, power_options(f, &s)?)?;
    let variational = match variational_radius(&s.weight, &s.cocycle, search_options(f, &s)) {
        Ok((v, res)) => json!({"radius": num(v), "value": num(res.value), "best_restart": res.best_restart}),
        Err(Error::NoAdmissibleSupport) => json!({"radius": num(0.0), "value": num(f64::NEG_INFINITY)}),
        Err(e) => return Err(e.into()),
    };
    Ok(json!({
        "radius": num(r.radius),
        "enclosure": nums(&[r.lo, r.hi]),
        "transfer_radius": enclosure(&r.transfer_radius),
        "variational": variational,
    }))
}

fn spectrum_cmd(f: &Flags, m: Model) -> Outcome {
    match m {
        Model::Sft(s) => {
            let opts = power_options(f, &s)?;
            let spec = spectrum_sft(&s.weight, &s.cocycle, opts)?;
            let r = weighted_shift_radius(&s.weight, &s.cocycle, opts)?;
            let mut v = spectrum_json(&spec);
            v["enclosure"] = nums(&[r.lo, r.hi]);
            Ok(v)
        }
        Model::Tree(t) => Ok(spectrum_json(&predicted_spectrum(&t))),
    }
}

fn estimate_json(e: &TEntropyEstimate) -> Value {
    json!({"value": num(e.value), "n": e.best_n, "m": e.best_m})
}

fn tentropy_cmd(f: &Flags, m: Model) -> Outcome {
    let s = sft(m)?;
    let mu = gibbs_markov(&s.potential.exp(), power_options(f, &s)?)?;
    validate_cocycle(&s.cocycle)?;
    let tau = t_entropy(&mu, &s.cocycle)?;
    let est = t_entropy_definition_estimate(&mu, &s.cocycle, f.iterates, f.partition_depth)?;
    Ok(json!({
        "t_entropy": num(tau),
        "entropy": num(mu.entropy()),
        "integral_ln_cocycle": num(mu.integrate(&s.cocycle.ln()?)?),
        "measure": {"q": matrix(mu.q()), "pi": nums(mu.pi())},
        "definition_estimate": estimate_json(&est),
        "residual": num(est.value - tau),
    }))
}

fn certification_json(c: &Certification) -> Value {
    let contradictions: Vec<Value> = c
        .contradictions
        .iter()
        .map(|x| json!({"radius": num(x.radius), "angle": num(x.angle), "verdict": x.verdict.as_str(), "distance": num(x.distance)}))
        .collect();
    json!({
        "verdict": if c.pass { "PASS" } else { "FAIL" },
        "tolerance": num(c.tolerance),
        "contradictions": contradictions,
        "max_radial_discrepancy": num(c.max_radial_discrepancy),
        "counts": {"in": c.counts.inside, "out": c.counts.outside, "undecided": c.counts.undecided},
        "undecided_fraction": num(c.undecided_fraction),
        "undecided_within_limit": c.undecided_fraction <= MAX_UNDECIDED_FRACTION,
    })
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::input("Io", format!("{}: {e}", path.display())))
}

/// Runs the grid, writes the CSV and SVG side files and compares with the prediction.
fn lab(f: &Flags, t: &TreeSystem) -> std::result::Result<(PseudospectrumGrid, Certification), Failure> {
    let grid = pseudospectrum(t, &lab_options(f)?)?;
    if let Some(p) = &f.csv {
        write_file(p, &grid.to_csv())?;
    }
    if let Some(p) = &f.svg {
        write_file(p, &grid.to_svg())?;
    }
    let cert = certify_against(&grid, &predicted_spectrum(t), default_tolerance(&grid));
    Ok((grid, cert))
}

fn tree_spectrum_cmd(f: &Flags, m: Model) -> Outcome {
    let t = tree(m)?;
    let spec = predicted_spectrum(&t);
    let crit = critical_radii(&t);
    let mut cuts = vec![0.0];
    cuts.extend(&crit);
    let regions: Vec<Value> = cuts
        .iter()
        .enumerate()
        .map(|(k, &lo)| {
            let hi = cuts.get(k + 1).copied();
            let probe = hi.map_or(lo + 1.0, |h| 0.5 * (lo + h));
            let d = region_data(&t, probe);
            json!({
                "rmin": num(lo),
                "rmax": hi.map(num).unwrap_or_else(|| num(f64::INFINITY)),
                "index": d.index,
                "kernel": d.kernel,
                "cokernel": d.cokernel(),
                "in_spectrum": d.in_spectrum(),
            })
        })
        .collect();
    let mut v = json!({"predicted": spectrum_json(&spec), "critical_radii": nums(&crit), "regions": regions});
    if f.certify {
        let (_, cert) = lab(f, &t)?;
        v["certification"] = certification_json(&cert);
    }
    Ok(v)
}

fn pseudospectrum_cmd(f: &Flags, m: Model) -> Outcome {
    let t = tree(m)?;
    let (grid, cert) = lab(f, &t)?;
    let mut v = json!({
        "windows": grid.windows,
        "epsilon": num(grid.epsilon),
        "outer_radius": num(grid.outer_radius),
        "radii": grid.radii.len(),
        "angles": grid.angles.len(),
        "points": grid.points.len(),
        "comparison": certification_json(&cert),
    });
    if let Some(p) = &f.csv {
        v["csv"] = json!(p.display().to_string());
    }
    if let Some(p) = &f.svg {
        v["svg"] = json!(p.display().to_string());
    }
    Ok(v)
}

/// Returns the SVG text; it is printed unless `--svg` names a file.
fn render_cmd(f: &Flags, m: Model) -> std::result::Result<String, Failure> {
    let spec = match m {
        Model::Sft(s) => spectrum_sft(&s.weight, &s.cocycle, power_options(f, &s)?)?,
        Model::Tree(t) => predicted_spectrum(&t),
    };
    Ok(spec.to_svg())
}

fn emit(f: &Flags, v: Value) -> std::result::Result<(), Failure> {
    let text = json::render(&json::with_schema(v));
    match &f.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let f = &cli.flags;
    if let Some(n) = f.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input("InvalidParameter", format!("--threads: {e}")))?;
    }
    let v = match &cli.command {
        Command::Validate(a) => validate(load(&a.model)?),
        Command::Decompose(a) => decompose_cmd(load(&a.model)?),
        Command::Freeness(a) => freeness_cmd(load(&a.model)?),
        Command::Pressure(a) => pressure_cmd(f, load(&a.model)?),
        Command::Gibbs(a) => gibbs_cmd(f, load(&a.model)?),
        Command::Radius(a) => radius_cmd(f, load(&a.model)?),
        Command::Spectrum(a) => spectrum_cmd(f, load(&a.model)?),
        Command::Tentropy(a) => tentropy_cmd(f, load(&a.model)?),
        Command::TreeSpectrum(a) => tree_spectrum_cmd(f, load(&a.model)?),
        Command::Pseudospectrum(a) => pseudospectrum_cmd(f, load(&a.model)?),
        Command::Render(a) => {
            let svg = render_cmd(f, load(&a.model)?)?;
            return match &f.svg {
                Some(p) => {
                    write_file(p, &svg)?;
                    emit(f, json!({"svg": p.display().to_string()}))
                }
                None => {
                    print!("{svg}");
                    Ok(())
                }
            };
        }
    }?;
    emit(f, v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut v = Map::new();
            v.insert("error".into(), Value::from(e.code));
            v.insert("detail".into(), Value::from(e.detail));
            if let Some(enc) = e.enclosure {
                v.insert("perron_root".into(), enclosure(&enc));
            }
            // errors go to stdout as well so that callers parse one stream
            print!("{}", json::render(&json::with_schema(Value::Object(v))));
            ExitCode::from(e.exit)
        }
    }
}
