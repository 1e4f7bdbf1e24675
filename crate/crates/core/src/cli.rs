//! Command-line front end. Every command reads a map JSON (a bare map or a
//! gallery fixture) and prints a JSON or text report.
//!
//! Exit codes: 0 on success, 1 on a computed negative result, 2 on input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::complex::{Complex, Point};
use crate::covermap::{check_strata_closedness, classify_surjection, Classification, MapError, RawMap, SimplicialSurjection, Verdict, Witness};
use crate::expectation::{check_axioms, expectation, fiber_bound_from_k, minimal_k, Expectation};
use crate::gallery;
use crate::hilbert::{check_norm_equivalence, inner_product, spanning_family, PlFunction, PlJson};
use crate::index::{borel_partition, check_reconstruction, index_element, quasi_basis, IndexError, IndexValue, ReconstructionReport};
use crate::scalar::{cplx, format_rational, int};
use crate::weights::{build_weight, validate_weight, WeightFunction, WeightJson};

#[derive(Parser, Debug)]
#[command(name = "branchcov", version, about = "Classify simplicial surjections and analyse their Hilbert module structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Sample points per edge for pointwise checks.
    #[arg(long, global = true, default_value_t = 256)]
    samples: usize,
    /// Tolerance for floating-point quasi-basis checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the whole pipeline and aggregate the results.
    Check {
        map: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// Openness and covering verdict with a witness.
    Classify { map: PathBuf },
    /// Fiber cardinalities and strata of the target.
    Stratify { map: PathBuf },
    /// Construct a weight function, or validate the one given.
    Weights {
        map: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// The C(X)-valued inner product of two PL functions.
    Gram {
        map: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// The conditional expectation of a PL function, with axiom checks.
    Expectation {
        map: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// Borel pieces, the index element and the reconstruction identity.
    Index {
        map: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long)]
        f: Option<PathBuf>,
    },
    /// Quasi-basis and index of a finite covering.
    Quasibasis { map: PathBuf },
    /// Write the built-in fixtures as JSON files.
    Gallery {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure to compute anything, labelled with the stage that failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> StageError {
    move |e| StageError { stage, message: e.to_string() }
}

/// A command's output and whether its result was positive.
pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&outcome.report).expect("reports serialize"),
                Format::Text => render_text(&outcome.report),
            };
            let _ = writeln!(out, "{text}");
            if outcome.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, StageError> {
    match &cli.command {
        Command::Check { map, mu } => {
            let input = Input::load(map, mu.as_deref())?;
            report_pipeline(&input.map, input.mu.as_ref(), cli.samples, cli.tolerance)
        }
        Command::Classify { map } => {
            let input = Input::load(map, None)?;
            let (c, _) = classify_input(&input.map)?;
            Ok(Outcome { ok: c.verdict.is_branched(), report: classification_json(&c, &input.map) })
        }
        Command::Stratify { map } => {
            let input = Input::load(map, None)?;
            let m = surjection(&input.map)?;
            let strat = m.stratify();
            let closed = check_strata_closedness(m.target(), &strat);
            Ok(Outcome {
                ok: true,
                report: json!({
                    "max_fibers": strat.max_fibers,
                    "strata": strat.table(m.target()),
                    "counts": m.target().ids().map(|c| (m.target().cell_label(c), json!(strat.count(c)))).collect::<Map<String, Value>>(),
                    "strata_closed": closed.closed,
                }),
            })
        }
        Command::Weights { map, mu } => {
            let input = Input::load(map, mu.as_deref())?;
            let m = branched(&input.map)?;
            let (w, source) = weight(&m, input.mu.as_ref())?;
            let report = validate_weight(&m, &w, cli.samples);
            let k = minimal_k(&m, &w);
            Ok(Outcome {
                ok: report.valid,
                report: json!({
                    "weight_source": source,
                    "weight": w.to_json(m.source()),
                    "valid": report.valid,
                    "points_checked": report.points_checked,
                    "min": format_rational(&report.min),
                    "max": format_rational(&report.max),
                    "k_min": format_rational(&k.k_min),
                    "violations": report.violations,
                }),
            })
        }
        Command::Gram { map, f, g, mu } => {
            let input = Input::load(map, mu.as_deref())?;
            let m = branched(&input.map)?;
            let (w, _) = weight(&m, input.mu.as_ref())?;
            let f = load_pl(f, m.source())?;
            let g = match g {
                Some(g) => load_pl(g, m.source())?,
                None => f.clone(),
            };
            let h = inner_product(&m, &w, &f, &g);
            let cont = h.check_continuity(m.target());
            let sup = h.sup_norm(m.target()).map_err(stage("gram"))?;
            Ok(Outcome {
                ok: cont.continuous,
                report: json!({
                    "inner_product": h.to_json(m.target()),
                    "continuous": cont.continuous,
                    "discontinuity": cont.witness.map(|d| json!({"vertex": d.vertex, "edge": d.edge, "gap": d.gap})),
                    "sup_norm": sup.value,
                    "sup_norm_exact": sup.exact.to_string(),
                    "sup_at": sup.label,
                }),
            })
        }
        Command::Expectation { map, f, mu } => {
            let input = Input::load(map, mu.as_deref())?;
            let m = branched(&input.map)?;
            let (w, _) = weight(&m, input.mu.as_ref())?;
            let f = load_pl(f, m.source())?;
            let r = expectation(&m, &w, &f);
            let e = Expectation::new(&m, &w);
            let a = PlFunction::hat(m.target(), 0).map_err(stage("expectation"))?;
            let axioms = check_axioms(&e, &[(a, f.clone())], cli.samples.min(16)).map_err(stage("expectation"))?;
            let k = minimal_k(&m, &w);
            Ok(Outcome {
                ok: r.continuity.continuous && axioms.all_pass(),
                report: json!({
                    "expectation": r.value.to_json(m.target()),
                    "continuous": r.continuity.continuous,
                    "axioms_pass": axioms.all_pass(),
                    "axiom_failures": axioms.failures,
                    "k_min": format_rational(&k.k_min),
                    "k_min_at": k.certificate.location,
                }),
            })
        }
        Command::Index { map, mu, f } => {
            let input = Input::load(map, mu.as_deref())?;
            let m = branched(&input.map)?;
            let (w, _) = weight(&m, input.mu.as_ref())?;
            let f = match f {
                Some(f) => load_pl(f, m.source())?,
                None => default_test_function(m.source())?,
            };
            let (report, ok) = index_report(&m, &w, &f, cli.samples);
            Ok(Outcome { report, ok })
        }
        Command::Quasibasis { map } => {
            let input = Input::load(map, None)?;
            let m = surjection(&input.map)?;
            match quasi_basis(&m) {
                Ok(_) => {
                    let (report, ok) = quasi_basis_report(&m, cli.samples, cli.tolerance)?;
                    Ok(Outcome { report, ok })
                }
                Err(IndexError::NotACovering(v)) => Ok(Outcome { ok: false, report: json!({ "error": "NotACovering", "verdict": v }) }),
                Err(e) => Err(stage("quasibasis")(e)),
            }
        }
        Command::Gallery { out } => {
            fs::create_dir_all(out).map_err(stage("gallery"))?;
            let mut written = Vec::new();
            for fixture in gallery::all() {
                let path = out.join(format!("{}.json", fixture.name));
                fs::write(&path, fixture.to_json() + "\n").map_err(stage("gallery"))?;
                written.push(path.display().to_string());
            }
            Ok(Outcome { ok: true, report: json!({ "written": written }) })
        }
    }
}

struct Input {
    map: RawMap,
    /// From `--mu`, or else a fixture's reference weight.
    mu: Option<(WeightJson, &'static str)>,
}

impl Input {
    fn load(map: &Path, mu: Option<&Path>) -> Result<Input, StageError> {
        let value: Value = read_json(map)?;
        let raw: RawMap = serde_json::from_value(value.clone()).map_err(|e| StageError { stage: "input", message: format!("{}: {e}", map.display()) })?;
        let mu = match mu {
            Some(p) => Some((read_json(p)?, "supplied")),
            None => match value.get("reference_weight") {
                Some(v) if !v.is_null() => Some((serde_json::from_value(v.clone()).map_err(stage("input"))?, "fixture")),
                _ => None,
            },
        };
        Ok(Input { map: raw, mu })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    let text = fs::read_to_string(path).map_err(|e| StageError { stage: "input", message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| StageError { stage: "input", message: format!("{}: {e}", path.display()) })
}

fn load_pl(path: &Path, y: &Complex) -> Result<PlFunction, StageError> {
    let json: PlJson = read_json(path)?;
    PlFunction::from_json(y, &json).map_err(stage("input"))
}

fn surjection(raw: &RawMap) -> Result<SimplicialSurjection, StageError> {
    SimplicialSurjection::from_raw(raw).map_err(stage("validate"))
}

/// Validated surjection that is open, as needed by all weight-based commands.
fn branched(raw: &RawMap) -> Result<SimplicialSurjection, StageError> {
    let m = surjection(raw)?;
    let c = classify_surjection(&m);
    if !c.verdict.is_branched() {
        return Err(StageError { stage: "classify", message: format!("map is {:?}, no weight function exists", c.verdict) });
    }
    Ok(m)
}

fn classify_input(raw: &RawMap) -> Result<(Classification, Option<SimplicialSurjection>), StageError> {
    match SimplicialSurjection::from_raw(raw) {
        Ok(m) => Ok((classify_surjection(&m), Some(m))),
        Err(MapError::DegenerateFibers { simplex }) => Ok((negative(Verdict::DegenerateFibers, "collapsed simplex", Some(simplex), None), None)),
        Err(MapError::NotSurjective { simplex }) => Ok((negative(Verdict::NotSurjective, "target simplex without preimage", None, Some(simplex)), None)),
        Err(e) => Err(stage("validate")(e)),
    }
}

fn negative(verdict: Verdict, kind: &str, source: Option<Vec<String>>, target: Option<Vec<String>>) -> Classification {
    Classification { verdict, witness: Some(Witness { kind: kind.into(), source, target }), n_fold: None, strata: None, components: Vec::new() }
}

fn classification_json(c: &Classification, raw: &RawMap) -> Value {
    let strata = c.strata.as_ref().and_then(|s| Complex::from_raw(&raw.target).ok().map(|x| s.table(&x)));
    json!({
        "verdict": c.verdict,
        "witness": c.witness,
        "n_fold": c.n_fold,
        "max_fibers": c.strata.as_ref().map(|s| s.max_fibers),
        "strata": strata,
        "components": c.components,
    })
}

fn weight(m: &SimplicialSurjection, mu: Option<&(WeightJson, &'static str)>) -> Result<(WeightFunction, &'static str), StageError> {
    match mu {
        Some((json, source)) => Ok((WeightFunction::from_json(m.source(), json).map_err(stage("weights"))?, source)),
        None => Ok((build_weight(m).map_err(stage("weights"))?, "constructed")),
    }
}

/// A level-1 function with distinct complex values, used when none is given.
fn default_test_function(y: &Complex) -> Result<PlFunction, StageError> {
    PlFunction::from_fn(y, 1, |p: &Point| cplx(int(p.carrier.0 as i64 + 1), p.coords[0].clone())).map_err(stage("index"))
}

fn reconstruction_json(r: &ReconstructionReport) -> Value {
    json!({
        "exact": r.exact,
        "samples": r.samples,
        "failures": r.failures.iter().take(5).map(|f| json!({
            "location": f.location,
            "expected": [format_rational(&f.expected.re), format_rational(&f.expected.im)],
            "ratio": f.ratio,
        })).collect::<Vec<_>>(),
    })
}

fn index_report(m: &SimplicialSurjection, w: &WeightFunction, f: &PlFunction, samples: usize) -> (Value, bool) {
    let y = m.source();
    let part = borel_partition(m);
    let el = index_element(w, &part);
    let values: Map<String, Value> = el
        .describe(y, &part)
        .into_iter()
        .map(|(label, v)| {
            let v = match v {
                IndexValue::Constant(r) => json!(format_rational(&r)),
                IndexValue::Reciprocal(profiles) => json!({
                    "reciprocal_of_mu": profiles
                        .into_iter()
                        .map(|(k, knots)| (k, json!(knots.iter().map(|(t, v)| [format_rational(t), format_rational(v)]).collect::<Vec<_>>())))
                        .collect::<Map<String, Value>>(),
                }),
            };
            (label, v)
        })
        .collect();
    let points = y.sample_points(samples);
    let one = PlFunction::constant(y, cplx(int(1), int(0))).expect("1-dimensional source");
    let rec_one = check_reconstruction(m, w, &part, &one, &points);
    let rec_f = check_reconstruction(m, w, &part, f, &points);
    let varying = w.edges().values().any(|k| k.iter().any(|(_, v)| v != &k[0].1));
    let mut report = json!({
        "pieces": part.table(m),
        "partition_problems": part.validate(m),
        "index_element": values,
        "index_element_piecewise": el.to_piecewise(y).map(|p| serde_json::to_value(p.to_json(y)).unwrap()),
        "index_element_continuous": el.check_continuity(y).continuous,
        "reconstruction": { "constant_one": reconstruction_json(&rec_one), "test_function": reconstruction_json(&rec_f) },
    });
    if varying {
        report["note"] = json!("M is computed as 1/mu, the value forced by the reconstruction identity; it differs from 1/sqrt(mu) on every piece where mu != 1");
    }
    (report, rec_one.exact && rec_f.exact && part.validate(m).is_empty())
}

fn quasi_basis_report(m: &SimplicialSurjection, samples: usize, tolerance: f64) -> Result<(Value, bool), StageError> {
    let qb = quasi_basis(m).map_err(stage("quasibasis"))?;
    let (y, x) = (m.source(), m.target());
    let mu = crate::weights::uniform_weight(y, qb.n);
    let mut functions = spanning_family(y).map_err(stage("quasibasis"))?;
    functions.push(default_test_function(y)?);
    let points = y.sample_points(samples);
    let check = qb.check(m, &mu, &functions, &points, tolerance);
    let elements: Vec<Value> = qb
        .elements
        .iter()
        .map(|&(a, k)| {
            json!({
                "cover_set": qb.cover[a].iter().map(|&c| x.cell_label(c)).collect::<Vec<_>>(),
                "sheet": qb.sheets[a][k].iter().map(|&c| y.cell_label(c)).collect::<Vec<_>>(),
                "form": "sqrt(n * phi(p(y))) on the sheet",
            })
        })
        .collect();
    Ok((
        json!({
            "n": qb.n,
            "size": qb.len(),
            "elements": elements,
            "index": qb.n,
            "index_exact": check.index_exact,
            "max_index_error": check.max_index_error,
            "max_reconstruction_error": check.max_error,
            "samples": check.samples,
            "passes": check.passes,
        }),
        check.passes,
    ))
}

/// classify, then for open maps: weight, validation, `K_min`, norm
/// equivalence, the index element and reconstruction, and for coverings the
/// quasi-basis.
pub fn report_pipeline(raw: &RawMap, mu: Option<&(WeightJson, &'static str)>, samples: usize, tolerance: f64) -> Result<Outcome, StageError> {
    let (c, m) = classify_input(raw)?;
    let mut report = json!({ "classification": classification_json(&c, raw) });
    let Some(m) = m.filter(|_| c.verdict.is_branched()) else {
        return Ok(Outcome { report, ok: false });
    };
    let (w, source) = weight(&m, mu)?;
    let validation = validate_weight(&m, &w, samples);
    let k = minimal_k(&m, &w);
    let bound = fiber_bound_from_k(&m, &w).map_err(stage("fiber bound"))?;
    let family = spanning_family(m.source()).map_err(stage("norm equivalence"))?;
    let norms = check_norm_equivalence(&m, &w, &family).map_err(stage("norm equivalence"))?;
    let f = default_test_function(m.source())?;
    let (index, index_ok) = index_report(&m, &w, &f, samples);
    report["weight"] = json!({
        "source": source,
        "valid": validation.valid,
        "violations": validation.violations,
        "min": format_rational(&validation.min),
        "max": format_rational(&validation.max),
    });
    report["k_min"] = json!({
        "value": format_rational(&k.k_min),
        "at": k.certificate.location,
        "attained": k.certificate.attained,
        "fiber_bound_holds": bound.holds,
    });
    report["norm_equivalence"] = json!({
        "max_fibers": norms.max_fibers,
        "worst_ratio": norms.worst_lower,
        "upper_holds": norms.upper_holds,
        "lower_holds_1_over_n": norms.lower_holds,
        "lower_holds_1_over_k": norms.lower_holds_k,
    });
    report["index"] = index;
    let mut ok = validation.valid && bound.holds && index_ok && norms.upper_holds && norms.lower_holds_k;
    if c.verdict == Verdict::Covering {
        let (qb, qb_ok) = quasi_basis_report(&m, samples, tolerance)?;
        report["quasi_basis"] = qb;
        ok &= qb_ok;
    }
    Ok(Outcome { report, ok })
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(a.iter().filter_map(scalar_text).collect::<Vec<_>>().join(", "))
        }
        _ => None,
    }
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        render_into(x, indent + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other).unwrap_or_default())),
    }
}

fn render_text(v: &Value) -> String {
    let mut s = String::new();
    render_into(v, 0, &mut s);
    s.trim_end().to_string()
}
