use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use squaremap::decomposition::{
    decompose_with, default_precision, locate_integer, verify_decomposition_with, DecomposeOptions,
    VerifyOptions, DEFAULT_DEPTH, DEFAULT_MAX_SPHERE_RESIDUES,
};
use squaremap::level_graph::{
    build_graph_bounded, cycle_census, cycles, export_dot, unit_cycles, DEFAULT_MAX_NODES,
    DEFAULT_MAX_STREAM_NODES,
};
use squaremap::lift_engine::{an_bn, classify, CycleAtLevel};
use squaremap::numtheory::{is_prime, wieferich_scan};
use squaremap::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

/// Dynamics of x -> x^2 on the p-adic integers.
#[derive(Parser, Debug)]
#[command(name = "squaremap", version, about)]
struct Cli {
    #[command(flatten)]
    bounds: BoundArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Largest functional graph materialized in memory.
    #[arg(long, global = true, env = "SQUAREMAP_MAX_NODES", default_value_t = DEFAULT_MAX_NODES,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: u64,

    /// Largest ring walked by the streaming census.
    #[arg(long, global = true, env = "SQUAREMAP_MAX_STREAM_NODES", default_value_t = DEFAULT_MAX_STREAM_NODES,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_stream_nodes: u64,

    /// Sphere unions with more residues are sampled instead of enumerated.
    #[arg(long, global = true, env = "SQUAREMAP_MAX_SPHERE_RESIDUES", default_value_t = DEFAULT_MAX_SPHERE_RESIDUES,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_sphere_residues: u64,

    /// Soft deadline, checked between levels and spheres.
    #[arg(long, global = true, env = "SQUAREMAP_MAX_SECONDS",
          value_parser = clap::value_parser!(u64).range(1..))]
    max_seconds: Option<u64>,
}

impl BoundArgs {
    fn deadline(&self, start: Instant) -> Option<Instant> {
        self.max_seconds.map(|s| start + Duration::from_secs(s))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decomposition of Z_p into periodic points, minimal components and basin.
    Decompose {
        #[arg(short)]
        p: u64,
        /// Number of spheres per periodic orbit.
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u32,
        /// p-adic digits; defaults to depth + s + 4.
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Functional graph of squaring on Z/p^nZ as Graphviz DOT.
    Graph {
        #[arg(short)]
        p: u64,
        #[arg(short, default_value_t = 1)]
        n: u32,
        /// Write DOT here and print the cycle census to stdout.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Keep only the units.
        #[arg(long)]
        units_only: bool,
    },
    /// Lift class of cycles at level n.
    #[command(group(ArgGroup::new("which").required(true).args(["all", "cycle"])))]
    Classify {
        #[arg(short)]
        p: u64,
        #[arg(short, default_value_t = 1)]
        n: u32,
        /// Every cycle at level n.
        #[arg(long)]
        all: bool,
        /// The cycle through this residue.
        #[arg(long, value_name = "REP")]
        cycle: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check the decomposition against brute force up to a level.
    Verify {
        #[arg(short)]
        p: u64,
        #[arg(long, default_value_t = 3)]
        max_level: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Odd primes below the limit with v_p(2^(p-1) - 1) >= 2.
    Wieferich {
        #[arg(long)]
        limit: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Where a p-adic integer sits in the decomposition.
    Locate {
        #[arg(short)]
        p: u64,
        /// Decimal residue mod p^precision.
        #[arg(short)]
        x: BigUint,
        /// p-adic digits; defaults to 3 + s + 4.
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

enum Failure {
    Invalid(String),
    Lib(Error),
    Verification,
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn require_prime(p: u64) -> Result<(), Failure> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{p} is not a prime")))
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let bounds = &cli.bounds;
    match cli.command {
        Command::Decompose {
            p,
            depth,
            precision,
            format,
            output,
        } => {
            require_prime(p)?;
            let report = decompose_with(
                p,
                DecomposeOptions {
                    depth,
                    precision,
                    max_nodes: bounds.max_nodes,
                    max_sphere_residues: bounds.max_sphere_residues,
                    deadline: bounds.deadline(start),
                },
            )?;
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => json_line(&report.to_json()),
            };
            emit(&text, output.as_ref())
        }
        Command::Graph {
            p,
            n,
            dot,
            units_only,
        } => {
            require_prime(p)?;
            let g = build_graph_bounded(p, n, bounds.max_nodes)?;
            let rendered = export_dot(&g, units_only);
            match dot {
                Some(path) => {
                    std::fs::write(&path, rendered)?;
                    let census = if units_only {
                        squaremap::level_graph::CycleCensus::from_cycles(&unit_cycles(&g))
                    } else {
                        cycle_census(&g)
                    };
                    println!("cycles {census}");
                }
                None => print!("{rendered}"),
            }
            Ok(())
        }
        Command::Classify {
            p,
            n,
            all,
            cycle,
            format,
        } => {
            require_prime(p)?;
            let targets: Vec<CycleAtLevel> = if all {
                let g = build_graph_bounded(p, n, bounds.max_nodes)?;
                cycles(&g)
                    .iter()
                    .map(|c| CycleAtLevel {
                        p,
                        level: n,
                        length: c.length,
                        rep: c.rep,
                    })
                    .collect()
            } else {
                let rep = cycle.expect("clap enforces --all or --cycle");
                vec![CycleAtLevel::through(p, n, rep)?]
            };
            let rows: Vec<(CycleAtLevel, _, _)> = targets
                .into_iter()
                .map(|c| (c, an_bn(&c), classify(&c)))
                .collect();
            let text = match format {
                Format::Text => {
                    let mut out = String::from("cycle\tlength\ta\tb\tclass\n");
                    for (c, ab, class) in &rows {
                        let b = ab.b.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
                        let _ = writeln!(out, "{}\t{}\t{}\t{b}\t{class}", c.rep, c.length, ab.a);
                    }
                    out
                }
                Format::Json => json_line(&serde_json::Value::Array(
                    rows.iter()
                        .map(|(c, ab, class)| {
                            serde_json::json!({
                                "rep": c.rep.to_string(),
                                "level": c.level,
                                "length": c.length,
                                "a": ab.a,
                                "b": ab.b,
                                "class": class,
                            })
                        })
                        .collect(),
                )),
            };
            print!("{text}");
            Ok(())
        }
        Command::Verify {
            p,
            max_level,
            format,
        } => {
            require_prime(p)?;
            let report = verify_decomposition_with(
                p,
                max_level,
                VerifyOptions {
                    max_nodes: bounds.max_nodes,
                    max_stream_nodes: bounds.max_stream_nodes,
                    deadline: bounds.deadline(start),
                },
            )?;
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => print!(
                    "{}",
                    json_line(&serde_json::to_value(&report).expect("report serializes"))
                ),
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Wieferich { limit, format } => {
            let found = wieferich_scan(limit);
            let text = match format {
                Format::Text => {
                    let mut out = String::new();
                    for w in &found {
                        let _ = writeln!(out, "{} {}", w.p, w.s);
                    }
                    out
                }
                Format::Json => json_line(&serde_json::Value::Array(
                    found
                        .iter()
                        .map(|w| serde_json::json!({ "p": w.p, "s": w.s }))
                        .collect(),
                )),
            };
            print!("{text}");
            Ok(())
        }
        Command::Locate {
            p,
            x,
            precision,
            format,
        } => {
            require_prime(p)?;
            let precision = match precision {
                Some(n) => n,
                None => default_precision(p, DEFAULT_DEPTH)?,
            };
            let loc = locate_integer(p, &x, precision)?;
            match format {
                Format::Text => println!("{loc}"),
                Format::Json => print!(
                    "{}",
                    json_line(&serde_json::to_value(&loc).expect("location serializes"))
                ),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Domain(_) => EXIT_INVALID,
                Error::Resource { .. } | Error::Deadline { .. } => EXIT_RESOURCE,
                Error::Precision { .. } | Error::Undecidable { .. } => EXIT_FAILURE,
            })
        }
        Err(Failure::Verification) => {
            eprintln!("error: verification failed");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
