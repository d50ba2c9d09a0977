use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cfbounds::bounds::{algorithm1, upper_bound, BoundQuery};
use cfbounds::events::{format_single, parse_single, Assignment};
use cfbounds::graph::{parse_model, Admg, CausalModel, VarId};
use cfbounds::identify::{expr_from_json, expr_to_json, DiscreteDistribution, RenderFormat, SymbolicExpr};
use cfbounds::inequalities::{check_distribution, generate_constraints, Constraint};
use cfbounds::oracle::{bound_width_study, verify_bounds, LatentCardinality, ScmSamplerConfig, VerifyQuery, VERIFY_TOL};
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::{BoundArgs, Command, ConstraintArgs, Format, SamplerArgs, SimulateArgs, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    InFile { context: String, source: cfbounds::Error },
    #[error(transparent)]
    Domain(#[from] cfbounds::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub format: Format,
    pub out_dir: Option<PathBuf>,
}

impl Context {
    fn render(&self) -> RenderFormat {
        match self.format {
            Format::Latex => RenderFormat::Latex,
            _ => RenderFormat::Text,
        }
    }
}

pub fn run(ctx: &Context, cmd: &Command) -> Result<String> {
    match cmd {
        Command::Project { graph } => project(ctx, graph),
        Command::Bound(args) => bound(ctx, args),
        Command::Constraints(args) => constraints(ctx, args),
        Command::Verify(args) => verify(ctx, args),
        Command::Simulate(args) => simulate(ctx, args),
        Command::Evaluate { graph, expr, field, dist } => evaluate(ctx, graph, expr, field.as_deref(), dist),
    }
}

// ---------------------------------------------------------------- inputs

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file(path: &Path) -> impl FnOnce(cfbounds::Error) -> CliError + '_ {
    move |source| CliError::InFile {
        context: path.display().to_string(),
        source,
    }
}

fn load_graph(path: &Path, m: &mut RunManifest) -> Result<CausalModel> {
    let bytes = read(path)?;
    m.input("graph", path, &bytes);
    let src = String::from_utf8_lossy(&bytes);
    parse_model(&src).map_err(in_file(path))
}

/// CSV unless the file name ends in `.json`.
fn load_dist(g: &Admg, path: &Path, role: &str, m: &mut RunManifest) -> Result<DiscreteDistribution> {
    let bytes = read(path)?;
    m.input(role, path, &bytes);
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let d = if is_json {
        DiscreteDistribution::from_json(g, &String::from_utf8_lossy(&bytes))
    } else {
        DiscreteDistribution::from_csv(g, bytes.as_slice())
    };
    d.map_err(in_file(path))
}

fn var_ids(g: &Admg, names: &[String]) -> Result<Vec<VarId>> {
    Ok(names.iter().map(|n| g.var_id(n.trim())).collect::<cfbounds::Result<_>>()?)
}

fn sampler(args: &SamplerArgs) -> Result<ScmSamplerConfig> {
    let latent = match args.latent.as_str() {
        "canonical" => LatentCardinality::Canonical,
        k => LatentCardinality::Fixed(k.parse().map_err(|_| {
            CliError::Usage(format!("--latent expects `canonical` or a number of states, got `{k}`"))
        })?),
    };
    let cfg = ScmSamplerConfig {
        beta_alpha: args.beta,
        dirichlet_alpha: args.dirichlet,
        latent,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn sampler_json(cfg: &ScmSamplerConfig) -> Value {
    let latent = match cfg.latent {
        LatentCardinality::Canonical => json!("canonical"),
        LatentCardinality::Fixed(k) => json!(k),
    };
    json!({ "beta": cfg.beta_alpha, "dirichlet": cfg.dirichlet_alpha, "latent": latent })
}

// ---------------------------------------------------------------- outputs

fn expr_json(g: &Admg, e: &SymbolicExpr) -> Value {
    serde_json::from_str(&expr_to_json(g, e)).expect("expression JSON is valid")
}

fn assignment_json(g: &Admg, a: &Assignment) -> Value {
    a.iter()
        .map(|(v, x)| (g.name(v).to_string(), json!(g.label(v, x))))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn document(m: &RunManifest, body: Value) -> String {
    let mut doc = json!({ "manifest": m });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn number(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v}"))
}

// ---------------------------------------------------------------- commands

fn project(ctx: &Context, path: &Path) -> Result<String> {
    let mut m = RunManifest::new("project", json!({}));
    let model = load_graph(path, &mut m)?;
    let g = &model.admg;
    let directed: Vec<(&str, &str)> = g.directed_edges().map(|(a, b)| (g.name(a), g.name(b))).collect();
    let bidirected: Vec<(&str, &str)> = g.bidirected_edges().map(|(a, b)| (g.name(a), g.name(b))).collect();
    if ctx.format == Format::Json {
        return Ok(document(
            &m,
            json!({
                "variables": g.variables(),
                "directed": directed,
                "bidirected": bidirected,
            }),
        ));
    }
    let (to, both) = match ctx.format {
        Format::Latex => ("\\to", "\\leftrightarrow"),
        _ => ("->", "<->"),
    };
    let mut out = String::new();
    let names: Vec<&str> = g.ids().map(|v| g.name(v)).collect();
    writeln!(out, "nodes: {}", names.join(", ")).unwrap();
    for (a, b) in directed {
        writeln!(out, "{a} {to} {b}").unwrap();
    }
    for (a, b) in bidirected {
        writeln!(out, "{a} {both} {b}").unwrap();
    }
    Ok(out)
}

fn bound(ctx: &Context, args: &BoundArgs) -> Result<String> {
    let mut m = RunManifest::new(
        "bound",
        json!({
            "target": args.target,
            "instrument": args.instrument,
            "upper": args.upper,
            "trace": args.trace,
        }),
    );
    let model = load_graph(&args.graph, &mut m)?;
    let g = &model.admg;
    let target = parse_single(g, &args.target)?;
    let q = BoundQuery::new(g, target, var_ids(g, &args.instrument)?)?;
    let (lower, trace) = algorithm1(g, &q)?;
    let upper = if args.upper { Some(upper_bound(g, &q)?) } else { None };
    let dist = match &args.eval {
        Some(p) => Some(load_dist(g, p, "distribution", &mut m)?),
        None => None,
    };
    let values = dist.as_ref().map(|d| {
        (
            lower.evaluate(d).ok(),
            upper.as_ref().map(|u| u.evaluate(d).ok()),
        )
    });

    if ctx.format == Format::Json {
        let mut body = json!({
            "target": format_single(g, &q.target),
            "instrument": args.instrument,
            "lower": expr_json(g, &lower),
        });
        if let Some(u) = &upper {
            body["upper"] = expr_json(g, u);
        }
        if let Some((lo, hi)) = values {
            body["values"] = json!({ "lower": lo, "upper": hi.flatten() });
        }
        if args.trace {
            body["trace"] = json!(trace.render(g, RenderFormat::Text));
        }
        return Ok(document(&m, body));
    }
    let fmt = ctx.render();
    let mut out = String::new();
    writeln!(out, "target: {}", format_single(g, &q.target)).unwrap();
    writeln!(out, "lower: {}", lower.render(g, fmt)).unwrap();
    if let Some(u) = &upper {
        writeln!(out, "upper: {}", u.render(g, fmt)).unwrap();
    }
    if let Some((lo, hi)) = values {
        writeln!(out, "lower value: {}", number(lo)).unwrap();
        if let Some(hi) = hi {
            writeln!(out, "upper value: {}", number(hi)).unwrap();
        }
    }
    if args.trace {
        out.push('\n');
        out.push_str(&trace.render(g, fmt));
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    Ok(out)
}

fn constraints(ctx: &Context, args: &ConstraintArgs) -> Result<String> {
    let mut m = RunManifest::new(
        "constraints",
        json!({
            "instrument": args.instrument,
            "treatment": args.treatment,
            "outcome": args.outcome,
            "max_size": args.max_size,
        }),
    );
    let model = load_graph(&args.graph, &mut m)?;
    let g = &model.admg;
    let (z, a, y) = (
        var_ids(g, &args.instrument)?,
        var_ids(g, &args.treatment)?,
        var_ids(g, &args.outcome)?,
    );
    if args.max_size == Some(0) {
        return Err(CliError::Usage("--max-size must be at least 1".into()));
    }
    let cs = generate_constraints(g, &z, &a, &y, args.max_size)?;
    let report = match &args.check {
        Some(p) => {
            let d = load_dist(g, p, "distribution", &mut m)?;
            Some(check_distribution(&cs, &d))
        }
        None => None,
    };

    if ctx.format == Format::Json {
        let list: Vec<Value> = cs
            .iter()
            .map(|c| {
                let triples: Vec<Value> = c
                    .triples
                    .triples()
                    .iter()
                    .map(|t| {
                        json!({
                            "z": assignment_json(g, &t.z),
                            "a": assignment_json(g, &t.a),
                            "y": assignment_json(g, &t.y),
                        })
                    })
                    .collect();
                json!({ "rhs": c.rhs, "lhs": expr_json(g, &c.lhs), "triples": triples })
            })
            .collect();
        let mut body = json!({ "constraints": list });
        if let Some(r) = &report {
            let bad: Vec<Value> = r
                .violations(VERIFY_TOL)
                .iter()
                .map(|c| json!({ "index": c.index, "value": c.value, "rhs": c.rhs }))
                .collect();
            body["check"] = json!({ "violations": bad, "undefined": r.undefined() });
        }
        return Ok(document(&m, body));
    }
    let fmt = ctx.render();
    let mut out = String::new();
    for (i, c) in cs.iter().enumerate() {
        writeln!(out, "[{}] {}", i + 1, c.render(g, fmt)).unwrap();
    }
    if cs.is_empty() {
        writeln!(out, "no constraints").unwrap();
    }
    if let Some(r) = &report {
        let bad = r.violations(VERIFY_TOL);
        writeln!(
            out,
            "\n{} of {} constraints violated, {} undefined",
            bad.len(),
            cs.len(),
            r.undefined()
        )
        .unwrap();
        for c in bad {
            writeln!(out, "[{}] value {} > {}", c.index + 1, number(c.value), c.rhs).unwrap();
        }
    }
    Ok(out)
}

fn verify(ctx: &Context, args: &VerifyArgs) -> Result<String> {
    let cfg = sampler(&args.sampler)?;
    let mut m = RunManifest::new(
        "verify",
        json!({
            "target": args.target,
            "instrument": args.instrument,
            "subset": args.subset,
            "constraints": args.constraints,
            "n": args.n,
            "sampler": sampler_json(&cfg),
        }),
    );
    m.seed = Some(cfg.seed);
    let model = load_graph(&args.graph, &mut m)?;
    let g = &model.admg;
    let target = parse_single(g, &args.target)?;
    let query = if !args.instrument.is_empty() {
        VerifyQuery::Algorithm1(BoundQuery::new(g, target.clone(), var_ids(g, &args.instrument)?)?)
    } else if !args.subset.is_empty() {
        VerifyQuery::SubsetInstrument {
            target: target.clone(),
            tilde: var_ids(g, &args.subset)?,
        }
    } else {
        VerifyQuery::Trivial(target.clone())
    };
    let cs: Vec<Constraint> = if args.constraints {
        let z = var_ids(g, &args.instrument)?;
        let a: Vec<VarId> = target.world.vars().collect();
        let y: Vec<VarId> = g.ids().filter(|v| !z.contains(v) && !a.contains(v)).collect();
        generate_constraints(g, &z, &a, &y, None)?
    } else {
        Vec::new()
    };
    let r = verify_bounds(g, &query, args.n, &cfg, &cs)?;

    if ctx.format == Format::Json {
        return Ok(document(
            &m,
            json!({
                "samples": r.samples,
                "evaluated": r.evaluated(),
                "skipped": r.skipped,
                "contained": r.contained,
                "ordered": r.ordered,
                "failures": r.failures,
                "min_slack": r.min_slack,
                "mean_slack": r.mean_slack,
                "constraints": cs.len(),
                "constraint_checks": r.constraint_checks,
                "constraint_violations": r.constraint_violations,
                "worst_violation": r.worst_violation,
                "clean": r.is_clean(),
            }),
        ));
    }
    let mut out = String::new();
    writeln!(out, "samples: {} (seed {})", r.samples, cfg.seed).unwrap();
    writeln!(out, "evaluated: {}, skipped: {}", r.evaluated(), r.skipped).unwrap();
    writeln!(out, "contained: {}", r.contained).unwrap();
    writeln!(out, "ordered: {}", r.ordered).unwrap();
    writeln!(out, "min slack: {}", number(r.min_slack)).unwrap();
    writeln!(out, "mean slack: {}", number(r.mean_slack)).unwrap();
    if args.constraints {
        writeln!(
            out,
            "constraints: {} generated, {} violations in {} checks, worst {}",
            cs.len(),
            r.constraint_violations,
            r.constraint_checks,
            r.worst_violation
        )
        .unwrap();
    }
    if r.is_clean() {
        writeln!(out, "result: clean").unwrap();
    } else {
        writeln!(out, "result: failed on samples {:?}", r.failures).unwrap();
    }
    Ok(out)
}

fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<String> {
    let cfg = sampler(&args.sampler)?;
    let out_path = match (&args.out, &ctx.out_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("study.csv"),
        (None, None) => {
            return Err(CliError::Usage(
                "simulate needs --out, --out-dir or CFBOUNDS_OUT_DIR".into(),
            ))
        }
    };
    let mut m = RunManifest::new(
        "simulate",
        json!({
            "n": args.n,
            "treatment": args.treatment,
            "outcome": args.outcome,
            "instrument": args.instrument,
            "sampler": sampler_json(&cfg),
        }),
    );
    m.seed = Some(cfg.seed);
    let model = load_graph(&args.graph, &mut m)?;
    let g = &model.admg;
    let id = |n: &str| g.var_id(n);
    let (rows, s) = bound_width_study(g, id(&args.treatment)?, id(&args.outcome)?, id(&args.instrument)?, args.n, &cfg)?;

    let io = |source| CliError::Io {
        path: out_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&out_path).map_err(|e| io(e.into()))?;
    w.write_record(["corr", "width", "excludes_zero"]).map_err(|e| io(e.into()))?;
    for r in &rows {
        w.write_record([r.corr.to_string(), r.width.to_string(), r.excludes_zero.to_string()])
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)?;
    let mut sidecar = out_path.clone().into_os_string();
    sidecar.push(".manifest.json");
    let manifest_text = serde_json::to_string_pretty(&m).expect("serializable") + "\n";
    fs::write(&sidecar, manifest_text).map_err(|source| CliError::Io {
        path: sidecar.clone().into(),
        source,
    })?;

    let summary = json!({
        "out": out_path.display().to_string(),
        "rows": s.rows,
        "skipped": s.skipped,
        "mean_width": s.mean_width,
        "sd_width": s.sd_width,
        "excludes_zero_fraction": s.excludes_zero_fraction,
        "spearman": s.spearman,
    });
    if ctx.format == Format::Json {
        return Ok(document(&m, summary));
    }
    let mut out = String::new();
    writeln!(out, "wrote {} rows to {} (seed {})", s.rows, out_path.display(), cfg.seed).unwrap();
    writeln!(out, "skipped: {}", s.skipped).unwrap();
    writeln!(out, "mean width: {}", number(s.mean_width)).unwrap();
    writeln!(out, "sd width: {}", number(s.sd_width)).unwrap();
    writeln!(out, "excludes zero: {}", number(s.excludes_zero_fraction)).unwrap();
    writeln!(out, "spearman(|corr|, width): {}", number(s.spearman)).unwrap();
    Ok(out)
}

fn evaluate(ctx: &Context, graph: &Path, expr: &Path, field: Option<&str>, dist: &Path) -> Result<String> {
    let mut m = RunManifest::new("evaluate", json!({ "field": field }));
    let model = load_graph(graph, &mut m)?;
    let g = &model.admg;
    let bytes = read(expr)?;
    m.input("expression", expr, &bytes);
    let mut text = String::from_utf8_lossy(&bytes).into_owned();
    if let Some(f) = field {
        let doc: Value = serde_json::from_str(&text).map_err(|e| in_file(expr)(e.into()))?;
        let inner = doc
            .get(f)
            .ok_or_else(|| CliError::Usage(format!("{}: no field `{f}`", expr.display())))?;
        text = inner.to_string();
    }
    let e = expr_from_json(g, &text).map_err(in_file(expr))?;
    let d = load_dist(g, dist, "distribution", &mut m)?;
    let value = e.evaluate(&d).ok();
    if ctx.format == Format::Json {
        return Ok(document(&m, json!({ "value": value })));
    }
    Ok(format!("{}\n", number(value)))
}
