use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcc_core::channel::{run_trials, ChannelConfig};
use qcc_core::kl::SCHEMA_VERSION;
use qcc_core::{
    additive_basis, certify_radius, dualize, kl_check, paste, phase_basis, weyl_basis, BasisKet,
    CodeSpec, Error, KlOptions, Manifest, PatternFamily, PhaseScalar, RegisterState,
};
use serde::{Deserialize, Serialize};

/// Optional directory that relative `--out` paths are resolved against.
const REPORT_DIR_VAR: &str = "QCC_REPORT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "qcc",
    version,
    about = "Qudit code construction, verification and simulation"
)]
struct Cli {
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Numerical tolerance for Knill-Laflamme comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Exact cyclotomic arithmetic (`--exact false` for floating point).
    #[arg(long, global = true, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    exact: bool,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    /// Builtin name or expression such as `paste(dual(spin_conv),spin_conv)`.
    #[arg(long)]
    code: String,
    #[arg(long, default_value_t = 2)]
    n_levels: u32,
    #[arg(long, default_value_t = 1)]
    logical_len: usize,
}

impl CodeArgs {
    fn build(&self) -> qcc_core::Result<CodeSpec> {
        CodeSpec::parse(&self.code, self.n_levels, self.logical_len)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Basis {
    Weyl,
    Additive,
    Phase,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// Window length; defaults to the full code width.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, default_value_t = 1)]
    max_errors: usize,
    #[arg(long, value_enum, default_value_t = Basis::Weyl)]
    basis: Basis,
    /// Restrict error supports to registers `A..=B` (1-based).
    #[arg(long, value_name = "A:B", conflicts_with = "interior")]
    support: Option<String>,
    /// Restrict error supports to registers clear of the code's head and tail.
    #[arg(long)]
    interior: bool,
}

impl FamilyArgs {
    fn build(&self, code: &CodeSpec) -> qcc_core::Result<PatternFamily> {
        let levels = code.levels();
        let basis = match self.basis {
            Basis::Weyl => weyl_basis(levels),
            Basis::Additive => additive_basis(levels),
            Basis::Phase => phase_basis(levels),
        };
        let width = code.width();
        let family =
            PatternFamily::new(width, self.window.unwrap_or(width), self.max_errors, basis)?;
        if self.interior {
            let b = code.boundary();
            if b.head + b.tail >= width {
                return Err(Error::Config(format!(
                    "{} has no interior at width {width}",
                    code.label()
                )));
            }
            return family.restricted_to(b.head + 1, width - b.tail);
        }
        match &self.support {
            Some(range) => {
                let (lo, hi) = parse_range(range)?;
                family.restricted_to(lo, hi)
            }
            None => Ok(family),
        }
    }
}

fn parse_range(s: &str) -> qcc_core::Result<(usize, usize)> {
    let bad = || Error::Config(format!("support range `{s}` is not of the form A:B"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code and emit its manifest.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        /// Include every encoded ket.
        #[arg(long)]
        kets: bool,
    },
    /// Apply the register-wise Fourier transform to a code.
    Dualize {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        kets: bool,
    },
    /// Encode with `--first`, then re-encode with `--second`.
    Paste {
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        #[arg(long, default_value_t = 2)]
        n_levels: u32,
        #[arg(long, default_value_t = 1)]
        logical_len: usize,
        #[arg(long)]
        kets: bool,
    },
    /// Check the Knill-Laflamme condition over an error family.
    VerifyKl {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        family: FamilyArgs,
        /// Stop at the first failing pair.
        #[arg(long)]
        fail_fast: bool,
    },
    /// Emit the Lambda matrix of a passing family.
    Lambda {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Run seeded noisy-channel trials with maximum-likelihood recovery.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        family: FamilyArgs,
        /// Per-register error probability.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Logical basis kets to superpose equally, e.g. `001,110`; digits may be dot-separated.
        #[arg(long, value_delimiter = ',')]
        input: Vec<String>,
    },
    /// Exhaustively certify the classical convolutional code's correction radius.
    CertifyClassical {
        #[arg(long, default_value_t = 2)]
        n_levels: u32,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        max_errors: usize,
    },
}

/// Manifest document written by `construct`, `dualize` and `paste`.
#[derive(Serialize, Deserialize, Debug)]
struct CodeDocument {
    schema_version: u32,
    #[serde(flatten)]
    manifest: Manifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    kets: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize, Debug)]
struct LambdaDocument {
    schema_version: u32,
    code: String,
    family_size: usize,
    summary: qcc_core::kl::LambdaSummary,
    /// Row-major `[re, im]` entries in family enumeration order.
    matrix: Vec<Vec<[f64; 2]>>,
}

enum Outcome {
    Pass,
    Fail,
}

struct Report {
    json: serde_json::Value,
    summary: String,
    outcome: Outcome,
}

fn code_document(code: &CodeSpec, kets: bool) -> Report {
    let doc = CodeDocument {
        schema_version: SCHEMA_VERSION,
        manifest: code.manifest(),
        kets: kets.then(|| code.export_kets()),
    };
    Report {
        json: serde_json::to_value(doc).expect("manifest serializes"),
        summary: format!(
            "{}: N={} width {} rate {} logical dim {}",
            code.label(),
            code.levels(),
            code.width(),
            code.rate(),
            code.logical_dim()
        ),
        outcome: Outcome::Pass,
    }
}

fn parse_logical(levels: u32, symbols: usize, s: &str) -> qcc_core::Result<u128> {
    let digits: Option<Vec<u32>> = if s.contains('.') {
        s.split('.').map(|d| d.parse().ok()).collect()
    } else {
        s.chars().map(|c| c.to_digit(10)).collect()
    };
    let digits =
        digits.ok_or_else(|| Error::Config(format!("logical ket `{s}` is not a digit string")))?;
    if digits.len() != symbols {
        return Err(Error::Config(format!(
            "logical ket `{s}` needs {symbols} symbols"
        )));
    }
    BasisKet::new(levels, digits)?.index(levels)
}

fn simulate_input(code: &CodeSpec, kets: &[String]) -> qcc_core::Result<RegisterState> {
    let levels = code.levels();
    let symbols = code.logical_symbols();
    let indices: Vec<u128> = if kets.is_empty() {
        let top = BasisKet::new(levels, vec![levels - 1; symbols])?.index(levels)?;
        vec![0, top]
    } else {
        kets.iter()
            .map(|k| parse_logical(levels, symbols, k))
            .collect::<qcc_core::Result<_>>()?
    };
    let terms = indices
        .into_iter()
        .map(|i| (i, PhaseScalar::one(levels)))
        .collect();
    RegisterState::from_indexed(levels, symbols, terms)?.normalized()
}

fn run(cli: &Cli) -> qcc_core::Result<Report> {
    let opts = KlOptions {
        tol: cli.tol,
        exact: cli.exact,
        fail_fast: false,
    };
    match &cli.command {
        Command::Construct { code, kets } => Ok(code_document(&code.build()?, *kets)),
        Command::Dualize { code, kets } => Ok(code_document(&dualize(&code.build()?)?, *kets)),
        Command::Paste {
            first,
            second,
            n_levels,
            logical_len,
            kets,
        } => {
            let a = CodeSpec::parse(first, *n_levels, *logical_len)?;
            let b = CodeSpec::parse(second, *n_levels, 1)?;
            Ok(code_document(&paste(&a, &b)?, *kets))
        }
        Command::VerifyKl {
            code,
            family,
            fail_fast,
        } => {
            let code = code.build()?;
            let family = family.build(&code)?;
            let r = kl_check(
                &code,
                &family,
                &KlOptions {
                    fail_fast: *fail_fast,
                    ..opts
                },
            )?;
            let mut summary = format!(
                "{} over {} patterns: {:?}, max deviation {:.3e}, {} boundary failures",
                r.code, r.family.size, r.verdict, r.max_deviation, r.boundary_failures
            );
            if let Some(w) = &r.witness {
                summary.push_str(&format!(
                    "; witness A={} B={} i={:?} j={:?} deviation {:.3}",
                    w.a, w.b, w.i, w.j, w.deviation
                ));
            }
            Ok(Report {
                outcome: if r.verdict.passed() {
                    Outcome::Pass
                } else {
                    Outcome::Fail
                },
                json: serde_json::to_value(&r).expect("report serializes"),
                summary,
            })
        }
        Command::Lambda { code, family } => {
            let code = code.build()?;
            let family = family.build(&code)?;
            let r = kl_check(&code, &family, &opts)?;
            if !r.verdict.passed() {
                return Ok(Report {
                    summary: format!("{}: no Lambda, the family fails Knill-Laflamme", r.code),
                    json: serde_json::to_value(&r).expect("report serializes"),
                    outcome: Outcome::Fail,
                });
            }
            let (Some(matrix), Some(summary)) = (r.lambda, r.lambda_summary) else {
                return Err(Error::Config(format!(
                    "Lambda is only formed for families of at most {} patterns",
                    qcc_core::kl::MAX_LAMBDA_FAMILY
                )));
            };
            let f = matrix.nrows();
            let doc = LambdaDocument {
                schema_version: SCHEMA_VERSION,
                code: code.label().to_string(),
                family_size: f,
                matrix: (0..f)
                    .map(|r| {
                        (0..f)
                            .map(|c| [matrix[(r, c)].re, matrix[(r, c)].im])
                            .collect()
                    })
                    .collect(),
                summary,
            };
            Ok(Report {
                summary: format!(
                    "{}: Lambda {f}x{f}, {:?}, rank {}",
                    doc.code, doc.summary.kind, doc.summary.rank
                ),
                json: serde_json::to_value(&doc).expect("lambda serializes"),
                outcome: Outcome::Pass,
            })
        }
        Command::Simulate {
            code,
            family,
            p,
            trials,
            input,
        } => {
            let seed = cli
                .seed
                .ok_or_else(|| Error::Config("simulate needs an explicit --seed".into()))?;
            let code = code.build()?;
            let family = family.build(&code)?;
            let cfg = ChannelConfig::uniform_weyl(code.levels(), *p, seed, *trials);
            let s = run_trials(&code, &cfg, &family, &simulate_input(&code, input)?)?;
            Ok(Report {
                outcome: if s.in_family_success == s.in_family {
                    Outcome::Pass
                } else {
                    Outcome::Fail
                },
                summary: format!(
                    "{} p={} seed {}: {}/{} in-family trials recovered, {}/{} overall, mean fidelity {:.4}",
                    s.code, s.p, s.seed, s.in_family_success, s.in_family, s.success, s.trials, s.mean_fidelity
                ),
                json: serde_json::to_value(&s).expect("summary serializes"),
            })
        }
        Command::CertifyClassical {
            n_levels,
            max_len,
            window,
            max_errors,
        } => {
            let r = certify_radius(*n_levels, *max_len, *window, *max_errors)?;
            Ok(Report {
                outcome: if r.verdict.passed() {
                    Outcome::Pass
                } else {
                    Outcome::Fail
                },
                summary: format!(
                    "N={} len<={} at most {} per {}: {:?} over {} corruptions",
                    r.levels,
                    r.message_len_max,
                    r.max_errors,
                    r.window,
                    r.verdict,
                    r.corruptions_checked
                ),
                json: serde_json::to_value(&r).expect("report serializes"),
            })
        }
    }
}

fn output_path(out: &PathBuf) -> PathBuf {
    match std::env::var_os(REPORT_DIR_VAR) {
        Some(dir) if out.is_relative() => PathBuf::from(dir).join(out),
        _ => out.clone(),
    }
}

fn emit(cli: &Cli, json: &serde_json::Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(json).expect("json renders");
    match &cli.out {
        Some(out) => {
            let path = output_path(out);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text + "\n")
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("global thread pool is configured once");
    }
    match run(&cli) {
        Ok(report) => {
            if let Err(e) = emit(&cli, &report.json) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            eprintln!("{}", report.summary);
            match report.outcome {
                Outcome::Pass => ExitCode::SUCCESS,
                Outcome::Fail => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
