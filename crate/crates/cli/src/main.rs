use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use diskqm::compute::{compute, Choices, Invariant, Record};
use diskqm::spec::{parse_form, parse_path, parse_spec, parse_spec_str, with_parameter};
use diskqm::verify::{run_suite, SuiteReport, SUITES};
use diskqm::{IdentityReport, Quadrature, RunConfig};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_SPEC: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "diskqm",
    version,
    about = "Quasi-morphisms on area-preserving maps of the disk"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Radial Gauss-Legendre nodes.
    #[arg(long, global = true, default_value_t = Quadrature::default().n_r)]
    quad_nr: usize,
    /// Angular nodes.
    #[arg(long, global = true, default_value_t = Quadrature::default().n_theta)]
    quad_ntheta: usize,
    /// Path panels.
    #[arg(long, global = true, default_value_t = Quadrature::default().n_path)]
    quad_npath: usize,
    /// Homogenize at n = 2^kmax.
    #[arg(long, global = true, default_value_t = RunConfig::default().k_max)]
    kmax: u32,
    /// RK4 steps for flow letters.
    #[arg(long, global = true, default_value_t = RunConfig::default().rk4_steps)]
    rk4_steps: usize,
    /// Time panels for R and S.
    #[arg(long, global = true, default_value_t = RunConfig::default().t_steps)]
    t_steps: usize,
    #[arg(long, global = true, default_value_t = RunConfig::default().seed)]
    seed: u64,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one invariant of a map or isotopy spec file.
    Compute {
        invariant: String,
        spec: PathBuf,
        /// Primitive one-form: lambda, lambda+cxy:<c> or lambda+cx2:<c>.
        #[arg(long, default_value = "lambda")]
        form: String,
        /// Path from the origin to the boundary: x_axis, radial:<a>, bent:<b>, segment:<x>,<y>,<a>.
        #[arg(long, default_value = "x_axis")]
        path: String,
    },
    /// Run a verification suite, or `all`.
    Verify { suite: String },
    /// Evaluate an invariant over a range of one spec parameter.
    Sweep {
        invariant: String,
        spec: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// Letter index for map specs.
        #[arg(long, default_value_t = 0)]
        letter: usize,
        #[arg(long, default_value = "lambda")]
        form: String,
        #[arg(long, default_value = "x_axis")]
        path: String,
    },
}

impl GlobalOpts {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            quadrature: Quadrature {
                n_r: self.quad_nr,
                n_theta: self.quad_ntheta,
                n_path: self.quad_npath,
            },
            k_max: self.kmax,
            rk4_steps: self.rk4_steps,
            t_steps: self.t_steps,
            seed: self.seed,
            ..RunConfig::default()
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<diskqm::Error>() {
        Some(e) if !e.is_spec_error() => EXIT_PRECONDITION,
        _ => EXIT_SPEC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let opts = &cli.opts;
    if let Some(n) = opts.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = opts.run_config();
    cfg.validate()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Compute {
            invariant,
            spec,
            form,
            path,
        } => {
            let inv = Invariant::parse(invariant)?;
            let choices = Choices {
                form: parse_form(form)?,
                path: parse_path(path)?,
            };
            let text = read_spec(spec)?;
            let (raw, parsed) = parse_spec_str(&text, cfg.rk4_steps)?;
            let record = compute(inv, &parsed, &raw, &choices, &cfg)?;
            write_records(&mut out, opts.format, &[record])?;
            Ok(0)
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut all_passed = true;
            let mut csv = (opts.format == Format::Csv).then(|| csv::Writer::from_writer(Vec::new()));
            if let Some(w) = csv.as_mut() {
                w.write_record(["suite", "check", "subject", "residual", "bound", "relation", "passed"])?;
            }
            for name in names {
                let report = run_suite(name, &cfg)?;
                all_passed &= report.passed();
                print_table(&report);
                match csv.as_mut() {
                    Some(w) => {
                        for c in &report.checks {
                            w.write_record([
                                report.suite.clone(),
                                c.name.clone(),
                                c.subject.clone(),
                                c.residual.to_string(),
                                c.bound.to_string(),
                                serde_json::to_value(c.relation)?.as_str().unwrap_or_default().to_string(),
                                c.passed.to_string(),
                            ])?;
                        }
                    }
                    None => {
                        for c in &report.checks {
                            let mut v = serde_json::to_value(c)?;
                            v["suite"] = json!(report.suite);
                            v["seed"] = json!(report.seed);
                            writeln!(out, "{}", serde_json::to_string(&v)?)?;
                        }
                    }
                }
            }
            if let Some(w) = csv {
                out.write_all(&w.into_inner()?)?;
            }
            Ok(if all_passed { 0 } else { EXIT_VERIFY_FAILED })
        }
        Command::Sweep {
            invariant,
            spec,
            param,
            from,
            to,
            step,
            letter,
            form,
            path,
        } => {
            let inv = Invariant::parse(invariant)?;
            let choices = Choices {
                form: parse_form(form)?,
                path: parse_path(path)?,
            };
            if !(step.is_finite() && *step > 0.0 && from.is_finite() && to.is_finite() && from <= to) {
                return Err(
                    diskqm::Error::Spec(format!("sweep range {from}..{to} step {step} is empty or invalid")).into(),
                );
            }
            let raw: Value = serde_json::from_str(&read_spec(spec)?)
                .map_err(|e| diskqm::Error::Spec(format!("spec is not valid JSON: {e}")))?;
            // count steps up front so that accumulated rounding never drops the endpoint
            let count = ((to - from) / step + 1e-9).floor() as usize + 1;
            let mut rows = Vec::with_capacity(count);
            for i in 0..count {
                let p = from + step * i as f64;
                let v = with_parameter(&raw, *letter, param, p)?;
                let record = compute(inv, &parse_spec(&v, cfg.rk4_steps)?, &v, &choices, &cfg)?;
                rows.push((p, record));
            }
            write_sweep(&mut out, opts.format, param, &rows)?;
            Ok(0)
        }
    }
}

fn read_spec(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| diskqm::Error::Spec(format!("cannot read {}: {e}", path.display())).into())
}

fn write_records(out: &mut impl Write, format: Format, records: &[Record]) -> Result<()> {
    match format {
        Format::Jsonl => {
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["operation", "value", "error_bound", "inputs"])?;
            for r in records {
                w.write_record([
                    r.operation.clone(),
                    r.value.to_string(),
                    r.error_bound.to_string(),
                    r.inputs.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn write_sweep(out: &mut impl Write, format: Format, param: &str, rows: &[(f64, Record)]) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["param", "value", "error_bound"])?;
            for (p, r) in rows {
                w.write_record([p.to_string(), r.value.to_string(), r.error_bound.to_string()])?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            for (p, r) in rows {
                let mut v = serde_json::to_value(r)?;
                v["param"] = json!({ "name": param, "value": p });
                writeln!(out, "{}", serde_json::to_string(&v)?)?;
            }
        }
    }
    Ok(())
}

fn print_table(report: &SuiteReport) {
    let status = if report.passed() { "PASS" } else { "FAIL" };
    eprintln!("suite {} (seed {}): {status}", report.suite, report.seed);
    for c in &report.checks {
        eprintln!("  {}", table_row(c));
    }
}

fn table_row(c: &IdentityReport) -> String {
    let relation = match c.relation {
        diskqm::isotopy::Relation::AtMost => "<=",
        diskqm::isotopy::Relation::Exceeds => ">",
    };
    let terms: Vec<String> = c.bound_terms.iter().map(|(k, v)| format!("{k} {v:.2e}")).collect();
    format!(
        "{} {:<34} {:<52} residual {:.3e} {relation} {:.3e}  [{}]",
        if c.passed { "ok  " } else { "FAIL" },
        c.name,
        c.subject,
        c.residual,
        c.bound,
        terms.join(", ")
    )
}
