use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use linfpair::deraction::{
    check_action_axioms, check_extension, check_properties, check_theta_gamma, cohomology, derivation_bracket,
    derivations, extend_sum, from_theta_gamma, induced_action, kappa_kernel, pair_action, to_theta_gamma, Derivation,
};
use linfpair::graded::MultiTable;
use linfpair::liepair::{build_l3, example_names, example_pair, validate_lie, LieAlgebra, LiePair, LiePairJson};
use linfpair::linalg;
use linfpair::linfty::{brackets_to_codifferential, check_codifferential, Defect};
use linfpair::mc::{gauge_suite, seeded_extension, McContext, Status};

const GAUGE_INSTANCES: usize = 25;

#[derive(Parser)]
#[command(name = "linfpair", version, about = "L<=3 algebras of Lie pairs, derivation actions and gauge calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a built-in Lie pair as JSON
    Example {
        /// sl2, sl3-cartan, sl3-borel-complement, heisenberg, aff1 or abelian:N
        name: String,
    },
    /// Run identity checks on a pair file
    Check {
        kind: CheckKind,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compute derivations, cohomology or a Maurer-Cartan extension
    Compute {
        kind: ComputeKind,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// Lie pair JSON file, or - for standard input
    pair_file: PathBuf,
    #[arg(long, default_value_t = 6)]
    max_arity: usize,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON result to this path
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Jacobi,
    Action,
    Gauge,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComputeKind {
    Derivations,
    Cohomology,
    McExtend,
}

type Failure = (u8, String);

fn fail(code: u8) -> impl Fn(String) -> Failure {
    move |m| (code, m)
}

struct Input {
    label: String,
    digest: String,
    json: LiePairJson,
}

fn read_input(path: &Path) -> Result<Input, Failure> {
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf).map_err(|e| (2, format!("stdin: {e}")))?;
        buf
    } else {
        std::fs::read(path).map_err(|e| (2, format!("{}: {e}", path.display())))?
    };
    let label = path.display().to_string();
    let text = String::from_utf8(bytes.clone()).map_err(|e| (2, format!("{label}: {e}")))?;
    let json = LiePairJson::parse(&text).map_err(|e| (2, format!("{label}: {e}")))?;
    Ok(Input { label, digest: hex::encode(Sha256::digest(&bytes)), json })
}

fn build_pair(input: &Input) -> Result<LiePair, Failure> {
    input.json.build().map_err(|e| (2, format!("{}: {e}", input.label)))
}

fn pair_name(input: &Input) -> String {
    Path::new(&input.label).file_stem().map_or_else(|| input.label.clone(), |s| s.to_string_lossy().into_owned())
}

struct Report {
    checks: Vec<Value>,
    clean: bool,
}

impl Report {
    fn new() -> Self {
        Report { checks: Vec::new(), clean: true }
    }

    fn defects(&mut self, name: &str, started: Instant, defects: Vec<Defect>) {
        eprintln!("{name}: {} defect(s) in {:.2?}", defects.len(), started.elapsed());
        self.clean &= defects.is_empty();
        self.checks.push(json!({
            "name": name,
            "status": if defects.is_empty() { "pass" } else { "fail" },
            "defects": defects,
        }));
    }

    fn error(&mut self, name: &str, message: String) {
        eprintln!("{name}: {message}");
        self.clean = false;
        self.checks.push(json!({ "name": name, "status": "fail", "error": message }));
    }
}

fn jacobi_checks(input: &Input, opts: &Opts, report: &mut Report) -> Option<LiePair> {
    let t = Instant::now();
    let alg = match input.json.algebra_unchecked() {
        Ok(a) => a,
        Err(e) => {
            report.error("lie/parse", e.to_string());
            return None;
        }
    };
    let lie_defects = validate_lie(&alg);
    let broken = !lie_defects.is_empty();
    report.defects("lie/jacobi", t, lie_defects);
    if broken {
        return None;
    }
    let pair = match LieAlgebra::from_table(alg.structure().clone()).and_then(|l| {
        let a: Vec<&str> = input.json.a.iter().map(String::as_str).collect();
        LiePair::new(l, &a)
    }) {
        Ok(p) => p,
        Err(e) => {
            report.error("pair/subalgebra", e.to_string());
            return None;
        }
    };
    let l3 = build_l3(&pair);
    let t = Instant::now();
    report.defects("l3/jacobi", t, l3.algebra().jacobi_sweep(opts.max_arity.min(5)));
    let t = Instant::now();
    match check_codifferential(&brackets_to_codifferential(l3.algebra()), opts.max_arity) {
        Ok(d) => report.defects("l3/codifferential", t, d),
        Err(e) => report.error("l3/codifferential", e.to_string()),
    }
    let t = Instant::now();
    report.defects("l3/closed-formulas", t, pair.route_differences());
    Some(pair)
}

fn action_checks(pair: &LiePair, opts: &Opts, report: &mut Report) {
    let l3 = build_l3(pair);
    let ders = derivations(pair.lie());
    let act = match pair_action(pair, &ders) {
        Ok(a) => a,
        Err(e) => return report.error("action/build", e.to_string()),
    };
    let t = Instant::now();
    report.defects("action/axioms", t, check_action_axioms(l3.algebra(), &act, opts.max_arity.min(4), 3));
    let t = Instant::now();
    match check_properties(pair, &ders) {
        Ok(d) => report.defects("action/properties", t, d),
        Err(e) => report.error("action/properties", e.to_string()),
    }
    let t = Instant::now();
    let q = brackets_to_codifferential(l3.algebra());
    match to_theta_gamma(&act) {
        Ok(tg) => {
            match check_theta_gamma(&q, &tg, opts.max_arity) {
                Ok(d) => report.defects("action/theta-gamma", t, d),
                Err(e) => report.error("action/theta-gamma", e.to_string()),
            }
            match from_theta_gamma(&tg) {
                Ok(back) if back == act => report.defects("action/round-trip", t, vec![]),
                Ok(_) => report.error("action/round-trip", "dictionary does not round-trip".into()),
                Err(e) => report.error("action/round-trip", e.to_string()),
            }
        }
        Err(e) => report.error("action/theta-gamma", e.to_string()),
    }
    let t = Instant::now();
    match extend_sum(l3.algebra(), &act).and_then(|ext| check_extension(l3.algebra(), &ext, opts.max_arity)) {
        Ok(d) => report.defects("action/extension", t, d),
        Err(e) => report.error("action/extension", e.to_string()),
    }
}

fn gauge_checks(name: &str, pair: &LiePair, opts: &Opts, report: &mut Report) {
    let t = Instant::now();
    match gauge_suite(name, pair, opts.order, opts.seed, GAUGE_INSTANCES) {
        Ok(r) => {
            let failed = r.checks.iter().filter(|c| c.status == Status::Fail).count();
            eprintln!("gauge: {failed} failing check(s) in {:.2?}", t.elapsed());
            report.clean &= failed == 0;
            report.checks.push(json!({
                "name": "gauge",
                "status": if failed == 0 { "pass" } else { "fail" },
                "report": r,
            }));
        }
        Err(e) => report.error("gauge", e.to_string()),
    }
}

fn echo(command: &str, kind: &str, opts: &Opts) -> Value {
    json!({
        "command": command,
        "kind": kind,
        "pair_file": opts.pair_file.display().to_string(),
        "max_arity": opts.max_arity,
        "order": opts.order,
        "seed": opts.seed,
    })
}

fn cmd_check(kind: CheckKind, opts: &Opts) -> Result<(Value, bool), Failure> {
    let input = read_input(&opts.pair_file)?;
    let name = pair_name(&input);
    let mut report = Report::new();
    let kind_name = match kind {
        CheckKind::Jacobi => "jacobi",
        CheckKind::Action => "action",
        CheckKind::Gauge => "gauge",
        CheckKind::All => "all",
    };
    if matches!(kind, CheckKind::Jacobi | CheckKind::All) {
        if let Some(pair) = jacobi_checks(&input, opts, &mut report) {
            if matches!(kind, CheckKind::All) {
                action_checks(&pair, opts, &mut report);
                gauge_checks(&name, &pair, opts, &mut report);
            }
        }
    } else {
        let pair = build_pair(&input)?;
        match kind {
            CheckKind::Action => action_checks(&pair, opts, &mut report),
            _ => gauge_checks(&name, &pair, opts, &mut report),
        }
    }
    let out = json!({
        "run": echo("check", kind_name, opts),
        "input": { "path": input.label, "sha256": input.digest },
        "checks": report.checks,
        "status": if report.clean { "pass" } else { "fail" },
    });
    Ok((out, report.clean))
}

fn derivation_json(l: &LieAlgebra, d: &Derivation) -> Value {
    let names = l.basis().names();
    let images: serde_json::Map<String, Value> = d
        .images()
        .iter()
        .zip(names)
        .map(|(row, x)| {
            let v: serde_json::Map<String, Value> = row
                .iter()
                .zip(names)
                .filter(|(c, _)| !c.is_zero())
                .map(|(c, y)| (y.clone(), Value::String(c.to_string())))
                .collect();
            (x.clone(), Value::Object(v))
        })
        .collect();
    json!({ "name": d.name(), "images": images })
}

fn table_json(t: &MultiTable) -> Value {
    let names = t.input().names();
    let out = t.output().names();
    t.entries()
        .map(|(k, v)| {
            let value: serde_json::Map<String, Value> =
                v.iter().map(|(o, c)| (out[*o].clone(), Value::String(c.to_string()))).collect();
            json!({ "left": names[k[0]], "right": names[k[1]], "value": value })
        })
        .collect()
}

fn cmd_compute(kind: ComputeKind, opts: &Opts) -> Result<(Value, bool), Failure> {
    let input = read_input(&opts.pair_file)?;
    let pair = build_pair(&input)?;
    let t = Instant::now();
    let (kind_name, result, clean) = match kind {
        ComputeKind::Derivations => {
            let l = pair.lie();
            let ders = derivations(l);
            let bracket = derivation_bracket(&ders).map_err(|e| fail(1)(e.to_string()))?;
            let ad: Vec<_> = linfpair::deraction::ad_basis(l).iter().map(Derivation::flatten).collect();
            let inner = linalg::rank(&ad, l.dim() * l.dim());
            let value = json!({
                "dim": ders.len(),
                "inner_dim": inner,
                "basis": ders.iter().map(|d| derivation_json(l, d)).collect::<Vec<_>>(),
                "bracket": table_json(&bracket),
            });
            ("derivations", value, true)
        }
        ComputeKind::Cohomology => {
            let l3 = build_l3(&pair);
            let model = cohomology(&l3, opts.seed).map_err(|e| fail(1)(e.to_string()))?;
            let ders = derivations(pair.lie());
            let kernel = kappa_kernel(&pair, &ders).map_err(|e| fail(1)(e.to_string()))?;
            let mut clean = model.defects.is_empty();
            let mut induced = Vec::new();
            for d in &kernel {
                let a = induced_action(&l3, &model, d).map_err(|e| fail(1)(e.to_string()))?;
                clean &= a.defects.is_empty();
                induced.push(json!({ "derivation": derivation_json(pair.lie(), d), "action": a }));
            }
            ("cohomology", json!({ "model": model, "induced": induced }), clean)
        }
        ComputeKind::McExtend => {
            let ctx = McContext::for_pair(&pair, opts.order).map_err(|e| fail(2)(e.to_string()))?;
            let (xi1, ext) = seeded_extension(&ctx, opts.seed).map_err(|e| fail(1)(e.to_string()))?;
            ("mc-extend", json!({ "xi1": xi1, "extension": ext }), true)
        }
    };
    eprintln!("{kind_name}: {:.2?}", t.elapsed());
    let out = json!({
        "run": echo("compute", kind_name, opts),
        "input": { "path": input.label, "sha256": input.digest },
        "result": result,
        "status": if clean { "pass" } else { "fail" },
    });
    Ok((out, clean))
}

fn emit(value: &Value, path: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| (2, e.to_string()))?;
    println!("{text}");
    if let Some(p) = path {
        std::fs::write(p, format!("{text}\n")).map_err(|e| (2, format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Example { name } => {
            let pair = example_pair(&name)
                .map_err(|e| (2, format!("{e}; known examples: {}, abelian:N", example_names().join(", "))))?;
            let value = serde_json::to_value(pair.to_json()).map_err(|e| (2, e.to_string()))?;
            emit(&value, None)?;
            Ok(true)
        }
        Command::Check { kind, opts } => {
            let (value, clean) = cmd_check(kind, &opts)?;
            emit(&value, opts.json.as_deref())?;
            Ok(clean)
        }
        Command::Compute { kind, opts } => {
            let (value, clean) = cmd_compute(kind, &opts)?;
            emit(&value, opts.json.as_deref())?;
            Ok(clean)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
