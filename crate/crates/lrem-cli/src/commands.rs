use std::path::Path;

use lrem::likelihood::{self, Family, GridAxis, LikelihoodSurface, ScanOptions, SimConfig};
use lrem::model::{builtin, Instance, ModelSpec, Params};
use lrem::regularize::{regularized_solve, tikhonov_solve, RegularizedSolution, RegularizerSpec};
use lrem::solver::{self, Classification, Classified};
use lrem::whf::{genericity, verify_factorization, whf_matrix, Certificate};
use serde_json::{json, Value};

use crate::output::{coefficients_json, impulse_table, number, path_table, tolerances, Sink, Table};
use crate::{canonical_name, Failure, Global, ScanArgs, SimulateArgs};

/// The loaded model and the output settings shared by every command.
pub struct Context {
    spec: ModelSpec,
    label: String,
    params: Params,
    sink: Sink,
    seed: u64,
    factor_tol: f64,
}

impl Context {
    pub fn new(g: Global) -> Result<Self, Failure> {
        let (spec, label) = match (&g.model, &g.builtin) {
            (Some(_), Some(_)) => return Err(Failure::usage("--model and --builtin are mutually exclusive")),
            (None, None) => return Err(Failure::usage("give a model with --model FILE or --builtin NAME")),
            (Some(path), None) => (lrem::io::load_model(path)?, path.display().to_string()),
            (None, Some(name)) => (builtin(name)?, name.clone()),
        };
        if !(g.factor_tol.is_finite() && g.factor_tol > 0.0) {
            return Err(Failure::usage("--factor-tol must be positive"));
        }
        let params = spec.resolve(&g.params)?;
        Ok(Self {
            spec,
            label,
            params,
            sink: Sink {
                out: g.out,
                json: g.json,
            },
            seed: g.seed,
            factor_tol: g.factor_tol,
        })
    }

    fn instance(&self) -> Result<Instance, Failure> {
        Ok(self.spec.instantiate(&self.params)?)
    }

    /// Fields every report starts with.
    fn header(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(command));
        m.insert("model".into(), json!(self.label));
        m.insert("parameters".into(), json!(self.params));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("tolerances".into(), tolerances(self.factor_tol));
        m
    }

    fn check_certificate(&self, cert: &Certificate) -> Result<(), Failure> {
        if !cert.certified || cert.relative_residual > self.factor_tol {
            return Err(Failure::new(
                2,
                "factorization-failed",
                format!(
                    "factorization not certified: relative residual {:e} (tolerance {:e}), index sum {}, winding {}",
                    cert.relative_residual, self.factor_tol, cert.index_sum, cert.winding
                ),
            ));
        }
        Ok(())
    }

    fn classified(&self) -> Result<(Instance, Classified), Failure> {
        let inst = self.instance()?;
        let c = solver::classify(&inst)?;
        if let Some(cert) = &c.certificate {
            self.check_certificate(cert)?;
        }
        Ok((inst, c))
    }
}

fn complex_list(points: &[num_complex::Complex64]) -> Value {
    json!(points.iter().map(|p| [p.re, p.im]).collect::<Vec<_>>())
}

/// The exit status a classification carries.
fn unsolvable(c: &Classified) -> Option<Failure> {
    match &c.classification {
        Classification::NoSolutionGeneric => Some(Failure::new(
            4,
            "no-solution-generic",
            format!(
                "partial indices {:?} include a negative index; no stable solution exists",
                c.kappa.as_deref().unwrap_or(&[])
            ),
        )),
        Classification::UnitCircleZero { points, coprime } => Some(Failure::new(
            5,
            "unit-circle-zero",
            format!(
                "det M vanishes on the unit circle at {} point(s); coprime with the forcing: {coprime}",
                points.len()
            ),
        )),
        _ => None,
    }
}

fn classification_fields(report: &mut serde_json::Map<String, Value>, c: &Classified) {
    report.insert("classification".into(), json!(c.classification.tag()));
    match &c.classification {
        Classification::Indeterminate { dim } => {
            report.insert("dim".into(), json!(dim));
        }
        Classification::UniqueSolution => {
            report.insert("dim".into(), json!(0));
        }
        Classification::UnitCircleZero { points, coprime } => {
            report.insert("points".into(), complex_list(points));
            report.insert("coprime".into(), json!(coprime));
        }
        Classification::NoSolutionGeneric => {}
    }
    if let Some(kappa) = &c.kappa {
        let g = genericity(kappa);
        report.insert("kappa".into(), json!(kappa));
        report.insert("generic".into(), json!(g.generic));
        report.insert("sign_class".into(), json!(g.sign_class));
    }
    if let Some(w) = c.winding {
        report.insert("winding".into(), json!(w));
    }
    if let Some(cert) = &c.certificate {
        report.insert("certificate".into(), json!(cert));
    }
}

fn classification_summary(c: &Classified) -> String {
    let mut s = format!("classification: {}\n", c.classification.tag());
    match &c.classification {
        Classification::Indeterminate { dim } => s += &format!("dim: {dim}\n"),
        Classification::UnitCircleZero { points, coprime } => {
            for p in points {
                s += &format!("zero: {} {:+}i\n", p.re, p.im);
            }
            s += &format!("coprime: {coprime}\n");
        }
        _ => {}
    }
    if let Some(kappa) = &c.kappa {
        s += &format!("kappa: {kappa:?}\ngeneric: {}\n", genericity(kappa).generic);
    }
    s
}

pub fn factorize(ctx: &Context) -> Result<(), Failure> {
    let inst = ctx.instance()?;
    let fac = whf_matrix(&inst.symbol)?;
    let cert = verify_factorization(&inst.symbol, &fac)?;
    let g = genericity(&fac.kappa);
    let mut report = ctx.header("factorize");
    report.insert("kappa".into(), json!(fac.kappa));
    report.insert("generic".into(), json!(g.generic));
    report.insert("sign_class".into(), json!(g.sign_class));
    report.insert("backend".into(), json!(fac.backend));
    report.insert("certificate".into(), json!(cert));
    let summary = format!(
        "kappa: {:?}\ngeneric: {}\nwinding: {}\nresidual: {:e} (relative {:e})\ncertified: {}\n",
        fac.kappa,
        g.generic,
        cert.winding,
        cert.residual,
        cert.relative_residual,
        cert.certified && cert.relative_residual <= ctx.factor_tol
    );
    ctx.sink.emit("factorize", &Value::Object(report), &summary, &[])?;
    ctx.check_certificate(&cert)
}

pub fn classify(ctx: &Context) -> Result<(), Failure> {
    let (_, c) = ctx.classified()?;
    let mut report = ctx.header("classify");
    classification_fields(&mut report, &c);
    ctx.sink.emit("classify", &Value::Object(report), &classification_summary(&c), &[])?;
    unsolvable(&c).map_or(Ok(()), Err)
}

fn solvable(ctx: &Context) -> Result<(Instance, Classified), Failure> {
    let (inst, c) = ctx.classified()?;
    match unsolvable(&c) {
        Some(f) => Err(f),
        None => Ok((inst, c)),
    }
}

pub fn solve(ctx: &Context, horizon: usize) -> Result<(), Failure> {
    let (inst, c) = solvable(ctx)?;
    let set = solver::solve(&inst)?;
    let particular = solver::impulse_responses(&set.particular, horizon);
    let kernel: Vec<_> = set.kernel.iter().map(|k| solver::impulse_responses(k, horizon)).collect();
    let kernel_residuals = set
        .kernel
        .iter()
        .map(|k| solver::kernel_residual(&inst, k))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = ctx.header("solve");
    classification_fields(&mut report, &c);
    report.insert("horizon".into(), json!(horizon));
    report.insert("residuals".into(), json!(solver::residuals(&inst, &set.particular)?));
    report.insert("kernel_residuals".into(), json!(kernel_residuals));
    report.insert("particular".into(), coefficients_json(&particular));
    report.insert("kernel".into(), json!(kernel.iter().map(|k| coefficients_json(k)).collect::<Vec<_>>()));

    let mut tables = vec![impulse_table("particular.csv", &particular)];
    tables.extend(kernel.iter().enumerate().map(|(k, h)| impulse_table(&format!("kernel_{}.csv", k + 1), h)));
    if set.dim() > 0 && ctx.sink.out.is_none() && !ctx.sink.json {
        eprintln!(
            "lrem: indeterminate: {} kernel element(s) not shown; use --out or --json",
            set.dim()
        );
    }
    let summary = format!(
        "{}files: {}\n",
        classification_summary(&c),
        tables.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    ctx.sink.emit("solve", &Value::Object(report), &summary, &tables)
}

/// Reads `--regularizer` as a file path when one exists, otherwise as inline JSON.
fn regularizer_arg(arg: Option<&str>, spec: &ModelSpec) -> Result<RegularizerSpec, Failure> {
    let text = match arg {
        None => return Ok(spec.regularizer.clone().unwrap_or(RegularizerSpec::Identity)),
        Some(a) if Path::new(a).is_file() => {
            std::fs::read_to_string(a).map_err(|e| Failure::io(format!("{a}: {e}")))?
        }
        Some(a) => a.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("regularizer: {e}")))
}

fn regularized(inst: &Instance, l: &RegularizerSpec) -> Result<RegularizedSolution, Failure> {
    Ok(match l {
        RegularizerSpec::Identity => tikhonov_solve(inst)?,
        other => regularized_solve(inst, other)?,
    })
}

pub fn regularize(ctx: &Context, horizon: usize, arg: Option<&str>) -> Result<(), Failure> {
    let l = regularizer_arg(arg, &ctx.spec)?;
    let (inst, c) = solvable(ctx)?;
    let sol = regularized(&inst, &l)?;
    let coeffs = solver::impulse_responses(&sol.transfer, horizon);

    let mut report = ctx.header("regularize");
    classification_fields(&mut report, &c);
    report.insert("regularizer".into(), json!(l));
    report.insert("method".into(), json!(sol.method));
    report.insert("unique".into(), json!(sol.unique));
    report.insert("min_gram_eigenvalue".into(), json!(sol.min_gram_eigenvalue));
    report.insert("optimality".into(), json!(sol.optimality));
    report.insert("residuals".into(), json!(sol.residuals));
    report.insert("kernel_weights".into(), complex_list(&sol.kernel_weights));
    report.insert("horizon".into(), json!(horizon));
    report.insert("regularized".into(), coefficients_json(&coeffs));

    if !sol.unique {
        eprintln!("lrem: warning: the penalty does not single out one solution; the minimum-norm choice is reported");
    }
    let summary = format!(
        "{}method: {}\nunique: {}\nfiles: regularized.csv\n",
        classification_summary(&c),
        json!(sol.method).as_str().unwrap_or_default(),
        sol.unique
    );
    ctx.sink
        .emit("regularize", &Value::Object(report), &summary, &[impulse_table("regularized.csv", &coeffs)])
}

fn family_parameter(family: Family, name: &str) -> Result<usize, Failure> {
    family
        .parameter_index(name)
        .or_else(|| name.strip_suffix('0').and_then(|base| family.parameter_index(base)))
        .ok_or_else(|| {
            Failure::usage(format!(
                "{} has parameters {:?}, not '{name}'",
                family.name(),
                family.parameters()
            ))
        })
}

fn surface_table(s: &LikelihoodSurface) -> Table {
    let mut header: Vec<String> = s.parameters.clone();
    header.push("value".into());
    if s.finite_sample.is_some() {
        header.push("finite_sample".into());
    }
    header.extend(["classification".into(), "flags".into()]);
    let opt = |v: Option<f64>| v.map(number).unwrap_or_default();
    let rows = s
        .points
        .iter()
        .map(|p| {
            let mut row: Vec<String> = p.coords.iter().map(|&x| number(x)).collect();
            row.push(opt(p.value));
            if s.finite_sample.is_some() {
                row.push(opt(p.finite_sample));
            }
            row.push(p.classification.clone().unwrap_or_default());
            row.push(p.flags.join(";"));
            row
        })
        .collect();
    Table {
        name: "surface.csv".into(),
        header,
        rows,
    }
}

pub fn scan(ctx: &Context, args: &ScanArgs) -> Result<(), Failure> {
    let name = ctx
        .spec
        .name
        .as_deref()
        .ok_or_else(|| Failure::usage("scan needs a built-in likelihood family (cagan or nongeneric)"))?;
    let family = Family::from_model(name, args.regularized)?;
    let params = family.parameters();

    let mut truth: Vec<Option<f64>> = vec![None; params.len()];
    for (n, v) in &args.truth {
        truth[family_parameter(family, n)?] = Some(*v);
    }
    let truth = truth
        .iter()
        .zip(params)
        .map(|(v, p)| v.ok_or_else(|| Failure::usage(format!("--truth is missing '{p}'"))))
        .collect::<Result<Vec<f64>, _>>()?;
    let axes = args
        .grid
        .iter()
        .map(|a| {
            Ok(GridAxis {
                name: params[family_parameter(family, &canonical_name(&a.name))?].to_string(),
                ..a.clone()
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let options = ScanOptions {
        minimize: !args.no_minimize,
        finite_sample: args.finite_sample.map(|t| SimConfig::new(t, ctx.seed)),
    };
    let surface = likelihood::scan(family, &axes, &truth, &options)?;

    let mut report = ctx.header("scan");
    report.insert("surface".into(), json!(surface));
    let show = |coords: &[f64]| {
        params
            .iter()
            .zip(coords)
            .map(|(p, x)| format!("{p}={x}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut summary = format!("family: {}\n", surface.family);
    if let Some(p) = surface.grid_minimum() {
        summary += &format!("grid minimum: {} value={}\n", show(&p.coords), p.value.unwrap_or(f64::NAN));
    }
    for m in &surface.minima {
        summary += &format!("local minimum: {} value={}\n", show(&m.point), m.value);
    }
    summary += "files: surface.json, surface.csv\n";
    ctx.sink.emit("surface", &Value::Object(report), &summary, &[surface_table(&surface)])
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), Failure> {
    if args.t == 0 || args.reps == 0 {
        return Err(Failure::usage("--T and --reps must be positive"));
    }
    if args.reps > 1 && ctx.sink.out.is_none() && !ctx.sink.json {
        return Err(Failure::usage("more than one replication needs --out DIR or --json"));
    }
    let (inst, c) = solvable(ctx)?;
    let xi = if args.regularized {
        let l = ctx.spec.regularizer.clone().unwrap_or(RegularizerSpec::Identity);
        regularized(&inst, &l)?.transfer
    } else {
        solver::solve(&inst)?.particular
    };
    let cfg = SimConfig {
        t: args.t,
        burn_in: args.burn_in,
        truncation: None,
        seed: ctx.seed,
        replications: args.reps,
    };
    let paths = likelihood::simulate_paths(&xi, &cfg)?;
    let tables: Vec<Table> = if paths.len() == 1 {
        vec![path_table("paths.csv", &paths[0])]
    } else {
        paths
            .iter()
            .enumerate()
            .map(|(k, p)| path_table(&format!("paths_{}.csv", k + 1), p))
            .collect()
    };

    let mut report = ctx.header("simulate");
    classification_fields(&mut report, &c);
    report.insert("solution".into(), json!(if args.regularized { "regularized" } else { "particular" }));
    report.insert("simulation".into(), json!(cfg));
    report.insert("files".into(), json!(tables.iter().map(|t| &t.name).collect::<Vec<_>>()));
    if ctx.sink.out.is_none() {
        let rows: Vec<Vec<Vec<f64>>> = paths
            .iter()
            .map(|p| (0..p.nrows()).map(|t| p.row(t).iter().copied().collect()).collect())
            .collect();
        report.insert("paths".into(), json!(rows));
    }
    let summary = format!(
        "simulated {} path(s) of length {}\nfiles: {}\n",
        paths.len(),
        args.t,
        tables.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    ctx.sink.emit("simulate", &Value::Object(report), &summary, &tables)
}
