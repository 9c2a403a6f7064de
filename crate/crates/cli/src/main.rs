mod manifest;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aaflow_core::algebra::{self, StructureSpec};
use aaflow_core::connections;
use aaflow_core::flow::{self, FlowConfig, Sampling};
use aaflow_core::hull_strominger::{self, HSReport};
use aaflow_core::verify::{self, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use manifest::ManifestBuilder;

const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;

#[derive(Parser)]
#[command(name = "aaflow", version, about = "Hermitian geometry and the reduced Anomaly flow on 6-dimensional almost-abelian Lie algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a structure against the Hull–Strominger system.
    Analyze(AnalyzeArgs),
    /// Integrate the bracket flow from a balanced structure.
    Flow(FlowArgs),
    /// Run the randomized cross-check suite.
    Verify(VerifyArgs),
    /// Integrate the metric flow of the nilpotent example and compare with
    /// the closed form.
    Example(ExampleArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Structure JSON file, or `-` for stdin.
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    alpha_prime: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SamplingKind {
    Geometric,
    Linear,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Points {
    /// Requested sample times only.
    Samples,
    /// Every accepted step.
    Steps,
}

#[derive(Args)]
struct FlowArgs {
    /// Structure JSON file, or `-` for stdin.
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    tau: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    alpha_prime: f64,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    initial_step: Option<f64>,
    /// Convergence threshold on ‖A⁺‖.
    #[arg(long, default_value_t = 1e-8)]
    convergence_eps: f64,
    /// ‖Ψ‖⁻² of the fixed metric.
    #[arg(long, default_value_t = 1.0)]
    psi_norm_sq_inv: f64,
    #[arg(long, default_value_t = 1e12)]
    norm_ceiling: f64,
    #[arg(long, value_enum, default_value_t = SamplingKind::Geometric)]
    sampling: SamplingKind,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Points::Samples)]
    points: Points,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Reference {
    /// The printed closed form `a = b = e^{√(2t+1)-1}`, `c = (2t+1)^{-1/2}`.
    Printed,
    /// The exact solution of `a' = ac²`, `b' = bc²`, `c' = -c³`.
    Ode,
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Reference::Printed)]
    reference: Reference,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Write the comparison table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_input(path: &Path) -> Result<Vec<u8>, String> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| format!("reading stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| format!("reading {}: {e}", path.display()))
    }
}

fn parse_input(path: &Path) -> Result<(Vec<u8>, StructureSpec), String> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("input is not UTF-8: {e}"))?;
    let spec = algebra::parse_structure_json(text).map_err(|e| e.to_string())?;
    Ok((bytes, spec))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(builder: ManifestBuilder, out: Option<&Path>, code: u8) -> ExitCode {
    let outputs = out.map(|p| vec![p.to_path_buf()]).unwrap_or_default();
    let m = builder.finish(outputs, code);
    let path = out.map(manifest::manifest_path);
    if let Err(e) = manifest::emit(&m, path.as_deref()) {
        eprintln!("error: writing manifest: {e}");
    }
    ExitCode::from(code)
}

#[derive(Serialize)]
struct Analysis {
    balanced: bool,
    kahler: Option<bool>,
    trivial_canonical: bool,
    integrability_residual: f64,
    d_psi_norm: f64,
    balanced_params: Option<algebra::BalancedParams>,
    tau: f64,
    alpha_prime: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    f: Option<f64>,
    report: Option<HSReport>,
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let config = json!({"input": args.input, "tau": args.tau, "alpha_prime": args.alpha_prime});
    let fail = |msg: String, input: &[u8]| {
        eprintln!("error: {msg}");
        finish(ManifestBuilder::new("analyze", input, config.clone()), None, EXIT_INPUT)
    };
    if !args.tau.is_finite() || args.alpha_prime.is_some_and(|a| !a.is_finite()) {
        return fail("--tau and --alpha-prime must be finite".into(), &[]);
    }
    let (bytes, spec) = match parse_input(&args.input) {
        Ok(x) => x,
        Err(e) => return fail(e, &[]),
    };
    let builder = ManifestBuilder::new("analyze", &bytes, config.clone());
    let s = spec.structure();
    let params = spec.balanced_params();
    let report = params.map(|p| hull_strominger::classify(&p, args.tau));
    let k = params.map(|p| connections::proportionality_K(&p, args.tau));
    let f = match (params, args.alpha_prime) {
        (Some(p), Some(ap)) => Some(flow::slope_f(
            &p,
            &FlowConfig {
                tau: args.tau,
                alpha_prime: ap,
                ..FlowConfig::default()
            },
        )),
        _ => None,
    };
    let analysis = Analysis {
        balanced: s.balanced_check(),
        kahler: params.map(|p| p.kahler_check()),
        trivial_canonical: s.canonical_trivial_check(),
        integrability_residual: s.integrability_residual(),
        d_psi_norm: s.d_psi_norm(),
        balanced_params: params,
        tau: args.tau,
        alpha_prime: args.alpha_prime,
        k,
        f,
        report,
    };
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v}"));
    eprintln!(
        "balanced: {}  kahler: {}  trivial canonical bundle: {}",
        analysis.balanced,
        analysis.kahler.map_or("n/a".into(), |b| b.to_string()),
        analysis.trivial_canonical
    );
    eprintln!("tau = {}  K = {}  f = {}", args.tau, show(k), show(f));
    match &analysis.report {
        Some(r) => eprintln!(
            "classification: {:?}  instanton: {:?}  anomaly residual: {:.3e}",
            r.classification, r.instanton_status, r.anomaly_residual_norm
        ),
        None => eprintln!("classification: n/a (structure is not balanced)"),
    }
    let text = serde_json::to_string_pretty(&analysis).expect("serializes") + "\n";
    if let Err(e) = write_output(args.out.as_deref(), &text) {
        eprintln!("error: {e}");
        return finish(builder, None, EXIT_INPUT);
    }
    finish(builder, args.out.as_deref(), EXIT_OK)
}

fn flow_cmd(args: FlowArgs) -> ExitCode {
    let sampling = match args.sampling {
        SamplingKind::Geometric => Sampling::Geometric {
            count: args.samples,
        },
        SamplingKind::Linear => Sampling::Linear {
            count: args.samples,
        },
    };
    let cfg = FlowConfig {
        tau: args.tau,
        alpha_prime: args.alpha_prime,
        psi_norm_sq_inv: args.psi_norm_sq_inv,
        t_end: args.t_end,
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        max_step: args.max_step,
        initial_step: args.initial_step,
        convergence_eps: args.convergence_eps,
        norm_ceiling: args.norm_ceiling,
        sampling,
        ..FlowConfig::default()
    };
    let config = json!({
        "input": args.input,
        "flow": cfg,
        "format": args.format,
        "points": args.points,
    });
    let fail = |msg: String, input: &[u8], code: u8| {
        eprintln!("error: {msg}");
        finish(ManifestBuilder::new("flow", input, config.clone()), None, code)
    };
    if let Err(e) = cfg.validate() {
        return fail(e.to_string(), &[], EXIT_INPUT);
    }
    let (bytes, spec) = match parse_input(&args.input) {
        Ok(x) => x,
        Err(e) => return fail(e, &[], EXIT_INPUT),
    };
    let Some(p) = spec.balanced_params() else {
        return fail(
            "the bracket flow needs a balanced structure (a = 0, v = 0, tr A = 0, tr JA = 0)".into(),
            &bytes,
            EXIT_INPUT,
        );
    };
    let builder = ManifestBuilder::new("flow", &bytes, config.clone());
    let f0 = flow::slope_f(&p, &cfg);
    eprintln!(
        "f(A_0) = {f0} ({})",
        if f0 > 0.0 {
            "positive"
        } else {
            "non-positive: outside the long-time existence hypotheses"
        }
    );
    let run = match flow::integrate_bracket_flow(&p, &cfg) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string(), &bytes, EXIT_INPUT),
    };
    let points = match args.points {
        Points::Samples => &run.samples,
        Points::Steps => &run.steps,
    };
    let text = match args.format {
        Format::Csv => flow::trajectory_csv(points),
        Format::Json => {
            let doc = json!({
                "status": run.status,
                "outside_hypotheses": run.outside_hypotheses,
                "initial_f": run.initial_f,
                "accepted_steps": run.accepted_steps,
                "rejected_steps": run.rejected_steps,
                "failure": run.failure,
                "trajectory": points,
            });
            serde_json::to_string_pretty(&doc).expect("serializes") + "\n"
        }
    };
    if let Err(e) = write_output(args.out.as_deref(), &text) {
        eprintln!("error: {e}");
        return finish(builder, None, EXIT_INTEGRATION);
    }
    let last = run.last();
    eprintln!(
        "status: {:?}  accepted steps: {}  t = {}  |A+|^2 = {:e}{}",
        run.status,
        run.accepted_steps,
        last.t,
        last.monitors.norm_aplus_sq,
        if run.outside_hypotheses {
            "  [outside-theorem-hypotheses]"
        } else {
            ""
        }
    );
    if let Some(f) = &run.failure {
        eprintln!("failure at t = {}: {}", f.t, f.message);
    }
    let code = if run.status.is_success() {
        EXIT_OK
    } else {
        EXIT_INTEGRATION
    };
    finish(builder, args.out.as_deref(), code)
}

fn verify_cmd(args: VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        seed: args.seed,
        draws: args.draws,
        inject_fault: args.inject_fault,
    };
    let config = serde_json::to_value(&opts).expect("serializes");
    let builder = ManifestBuilder::new("verify", &[], config);
    let report = verify::run_suite(&opts);
    print!("{}", report.table());
    println!(
        "seed {}  draws {}  verdict: {}",
        report.seed,
        report.draws,
        if report.passed { "PASS" } else { "FAIL" }
    );
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&report).expect("serializes") + "\n";
        if let Err(e) = write_output(Some(out), &text) {
            eprintln!("error: {e}");
            return finish(builder, None, EXIT_INPUT);
        }
    }
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    finish(builder, args.out.as_deref(), code)
}

fn example_cmd(args: ExampleArgs) -> ExitCode {
    let config = json!({
        "t_end": args.t_end,
        "samples": args.samples,
        "reference": args.reference,
        "tolerance": args.tolerance,
    });
    let builder = ManifestBuilder::new("example", &[], config);
    if !(args.t_end >= 0.0 && args.t_end.is_finite()) || args.samples < 2 {
        eprintln!("error: --t-end must be finite and >= 0, --samples at least 2");
        return finish(builder, None, EXIT_INPUT);
    }
    let report = match flow::run_example(args.t_end, args.samples) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return finish(builder, None, EXIT_INTEGRATION);
        }
    };
    let mut csv = String::from("t,a,b,c,a_printed,c_printed,a_ode\n");
    println!(
        "{:>8} {:>22} {:>22} {:>22} {:>22} {:>22}",
        "t", "a = b", "c", "printed a", "printed c", "ODE a"
    );
    for r in &report.rows {
        println!(
            "{:>8.3} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e}",
            r.t, r.a, r.c, r.a_closed, r.c_closed, r.a_ode
        );
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.t, r.a, r.b, r.c, r.a_closed, r.c_closed, r.a_ode
        ));
    }
    let dev = match args.reference {
        Reference::Printed => report.max_dev_closed_form,
        Reference::Ode => report.max_dev_ode_solution,
    };
    println!("max |deviation| from printed closed form: {:.3e}", report.max_dev_closed_form);
    println!("max |deviation| of c from printed c_t:    {:.3e}", report.max_dev_c);
    println!("max |deviation| from exact ODE solution:  {:.3e}", report.max_dev_ode_solution);
    println!("max | |Psi|^2 abc - 1 |:                  {:.3e}", report.psi_consistency);
    let passed = dev < args.tolerance && report.status == flow::MetricFlowStatus::ReachedEnd;
    println!(
        "reference {}: max deviation {dev:.3e} vs tolerance {:.1e}: {}",
        match args.reference {
            Reference::Printed => "printed",
            Reference::Ode => "ode",
        },
        args.tolerance,
        if passed { "PASS" } else { "FAIL" }
    );
    if let Some(out) = &args.out {
        if let Err(e) = write_output(Some(out), &csv) {
            eprintln!("error: {e}");
            return finish(builder, None, EXIT_INPUT);
        }
    }
    finish(
        builder,
        args.out.as_deref(),
        if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Flow(a) => flow_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Example(a) => example_cmd(a),
    }
}
