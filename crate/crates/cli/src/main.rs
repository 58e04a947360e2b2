mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use divcurl::increments::admissible_increments;
use divcurl::inequalities::{run_suite, SuiteConfig};
use divcurl::multiindex::{make_ordering, random_ordering, Ordering, OrderingKind};
use divcurl::operators::{box_coeff_closed_form, box_coeff_tensor, OperatorSpec};
use divcurl::symbol::{
    ellipticity_scan, poly_json, scan_directions, special_directions, vanishes_on_hyperplane, SymbolKind,
    SymbolPolynomials,
};
use divcurl::verify::{run_verify, Fault, Scope, VerifyOptions};

#[derive(Parser, Debug)]
#[command(name = "divcurl", version, about = "Higher-order form complexes: enumeration, operators, symbols and estimate probes")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum KindArg {
    Hybrid,
    Restricted,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ScopeArg {
    Exact,
    Symbol,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FaultArg {
    NegateAdjoint,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Admissible degree increments for (n, k).
    Increments { n: u64, k: u64 },
    /// Coefficient tensor of the Laplacian on q-forms.
    Laplacian {
        n: usize,
        k: u32,
        l: usize,
        q: usize,
        /// lexicographic, diagonal, chained, random[:SEED] or a JSON table file.
        #[arg(long, default_value = "lexicographic")]
        ordering: String,
        /// Also compare with the closed-form tensor.
        #[arg(long)]
        closed_form: bool,
    },
    /// Symbol polynomial and ellipticity scan.
    Symbol {
        n: usize,
        k: u32,
        l: usize,
        q: usize,
        #[arg(long, default_value = "lexicographic")]
        ordering: String,
        #[arg(long, value_enum, default_value_t = KindArg::Hybrid)]
        kind: KindArg,
        /// Sphere samples on top of the special directions.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Exact identity suite and symbol checks.
    Verify {
        #[arg(long, value_enum, default_value_t = ScopeArg::All)]
        scope: ScopeArg,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        max_k: Option<u32>,
        #[arg(long)]
        max_ambient: Option<usize>,
        /// Random probe forms per spec and degree.
        #[arg(long)]
        forms: Option<usize>,
        #[arg(long)]
        random_orderings: Option<usize>,
        #[arg(long)]
        symbol_samples: Option<usize>,
        /// Run with a deliberate defect (harness self-test).
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Inequality probe sweep.
    Ineq {
        /// Suite configuration (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of cases per spec.
        #[arg(long)]
        cases: Option<usize>,
    },
}

/// Invalid input: exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: divcurl::Error) -> anyhow::Error {
    match e {
        divcurl::Error::InvalidArgument(_)
        | divcurl::Error::DimensionMismatch(_)
        | divcurl::Error::DegreeOutOfRange(_)
        | divcurl::Error::Ordering(_) => anyhow::Error::new(Usage(e.to_string())),
        other => anyhow::Error::new(other),
    }
}

struct Output {
    command: &'static str,
    config: Value,
    result: Value,
    table: &'static str,
    ok: bool,
}

fn ambient(n: usize, k: u32, l: usize) -> anyhow::Result<usize> {
    let rep = admissible_increments(n as u64, k as u64).map_err(usage)?;
    rep.ambient_for(l as u64)
        .map(|v| v as usize)
        .ok_or_else(|| anyhow::Error::new(Usage(format!("l = {l} is not admissible for (n, k) = ({n}, {k}); admissible: {:?}", rep.increments()))))
}

fn ordering(n: usize, k: u32, l: usize, arg: &str, seed: u64) -> anyhow::Result<Ordering> {
    let big = ambient(n, k, l)?;
    let kind = match arg {
        "lexicographic" => Some(OrderingKind::Lexicographic),
        "diagonal" => Some(OrderingKind::Diagonal),
        "chained" => Some(OrderingKind::Chained),
        _ => None,
    };
    if let Some(kind) = kind {
        return make_ordering(n, k, l, big, kind).map_err(usage);
    }
    if arg == "random" {
        return random_ordering(n, k, l, big, seed).map_err(usage);
    }
    if let Some(s) = arg.strip_prefix("random:") {
        let s: u64 = s.parse().map_err(|_| Usage(format!("bad ordering seed {s:?}")))?;
        return random_ordering(n, k, l, big, s).map_err(usage);
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading ordering file {arg}"))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))?;
    let o = Ordering::from_json(&v).map_err(usage)?;
    if (o.source_dim(), o.order(), o.increment()) != (n, k, l) {
        bail!(Usage(format!("ordering file {arg} does not match (n, k, l) = ({n}, {k}, {l})")));
    }
    Ok(o)
}

fn run(cli: &Cli) -> anyhow::Result<Output> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.cmd {
        Cmd::Increments { n, k } => {
            let rep = admissible_increments(*n, *k).map_err(usage)?;
            Ok(Output {
                command: "increments",
                config: json!({"n": n, "k": k}),
                result: serde_json::to_value(&rep)?,
                table: "/result/solutions",
                ok: true,
            })
        }
        Cmd::Laplacian {
            n,
            k,
            l,
            q,
            ordering: ord,
            closed_form,
        } => {
            let spec = OperatorSpec::new(ordering(*n, *k, *l, ord, seed)?).map_err(usage)?;
            let tensor = box_coeff_tensor(&spec, *q).map_err(usage)?;
            let mut result = json!({"tensor": tensor.to_json(&spec), "ordering_table": spec.ordering().to_json()});
            if *closed_form {
                let cf = box_coeff_closed_form(&spec, *q).map_err(usage)?;
                let diff = cf.diff(&tensor);
                result["closed_form"] = json!({
                    "agrees": diff.is_empty(),
                    "differing_entries": diff.len(),
                    "tensor": cf.to_json(&spec),
                });
            }
            Ok(Output {
                command: "laplacian",
                config: json!({"n": n, "k": k, "l": l, "q": q, "ordering": ord, "closed_form": closed_form, "seed": seed}),
                result,
                table: "/result/tensor/entries",
                ok: true,
            })
        }
        Cmd::Symbol {
            n,
            k,
            l,
            q,
            ordering: ord,
            kind,
            samples,
        } => {
            let spec = OperatorSpec::new(ordering(*n, *k, *l, ord, seed)?).map_err(usage)?;
            let sk = match kind {
                KindArg::Hybrid => SymbolKind::Hybrid,
                KindArg::Restricted => SymbolKind::Restricted,
            };
            let polys = SymbolPolynomials::build(&spec, *q, sk).map_err(usage)?;
            let scan = ellipticity_scan(&spec, *q, sk, *samples, seed).map_err(usage)?;
            let dirs = scan_directions(&spec, *q, sk, &special_directions(*n)).map_err(usage)?;
            let scalar = polys.scalar();
            let vanishing: Vec<usize> = scalar
                .as_ref()
                .map(|p| (0..*n).filter(|&j| vanishes_on_hyperplane(p, j)).map(|j| j + 1).collect())
                .unwrap_or_default();
            Ok(Output {
                command: "symbol",
                config: json!({"n": n, "k": k, "l": l, "q": q, "ordering": ord, "kind": kind, "samples": samples, "seed": seed}),
                result: json!({
                    "spec": spec.summary(),
                    "scan": scan,
                    "polynomial_terms": scalar.as_ref().map(poly_json),
                    "vanishes_on_hyperplanes": vanishing,
                    "directions": dirs,
                }),
                table: "/result/directions",
                ok: true,
            })
        }
        Cmd::Verify {
            scope,
            max_n,
            max_k,
            max_ambient,
            forms,
            random_orderings,
            symbol_samples,
            inject_fault,
        } => {
            let d = VerifyOptions::default();
            let opts = VerifyOptions {
                scope: match scope {
                    ScopeArg::Exact => Scope::Exact,
                    ScopeArg::Symbol => Scope::Symbol,
                    ScopeArg::All => Scope::All,
                },
                max_n: max_n.unwrap_or(d.max_n),
                max_k: max_k.unwrap_or(d.max_k),
                max_ambient: max_ambient.unwrap_or(d.max_ambient),
                forms: forms.unwrap_or(d.forms),
                random_orderings: random_orderings.unwrap_or(d.random_orderings),
                seed,
                symbol_samples: symbol_samples.unwrap_or(d.symbol_samples),
                fault: inject_fault.map(|FaultArg::NegateAdjoint| Fault::NegateAdjoint),
            };
            let rep = run_verify(&opts).map_err(usage)?;
            let mut result = serde_json::to_value(&rep)?;
            let config = result["options"].take();
            result.as_object_mut().expect("object").remove("options");
            Ok(Output {
                command: "verify",
                config,
                result,
                table: "/result/checks",
                ok: rep.all_pass,
            })
        }
        Cmd::Ineq { config, cases } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<SuiteConfig>(&text).map_err(|e| Usage(format!("{}: {e}", p.display())))?
                }
                None => SuiteConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(c) = cases {
                cfg.cases = *c;
            }
            let rep = run_suite(&cfg);
            let mut result = serde_json::to_value(&rep)?;
            result.as_object_mut().expect("object").remove("config");
            Ok(Output {
                command: "ineq",
                config: serde_json::to_value(&cfg)?,
                result,
                table: "/result/records",
                ok: true,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            };
        }
    };
    let doc = json!({
        "tool": "divcurl",
        "version": env!("CARGO_PKG_VERSION"),
        "command": out.command,
        "format": cli.format,
        "config": out.config,
        "result": out.result,
    });
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&doc).map(|s| s + "\n").map_err(anyhow::Error::from),
        Format::Text => Ok(render::text(&doc)),
        Format::Csv => render::csv(&doc, out.table),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| anyhow!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
