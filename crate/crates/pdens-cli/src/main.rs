use clap::{Parser, Subcommand};
use std::io::{BufRead, Write};
use std::process::ExitCode;

use pdens_cli::dsl::{self, Item, ParseError};
use pdens_cli::run::{self, Context, Options};

#[derive(Parser)]
#[command(name = "pdens", about = "Exact p-adic volumes, densities, cones, and Crofton integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a document and print one JSON report per query.
    Run {
        file: String,
        /// Compact single-line JSON (default).
        #[arg(long)]
        json: bool,
        /// Pretty-printed JSON.
        #[arg(long, conflicts_with = "json")]
        pretty: bool,
        /// Deformation cross-check depth (default 12, env PDENS_DEPTH).
        #[arg(long)]
        depth: Option<u32>,
        /// Refinement bound for the tangent-cone density check.
        #[arg(long)]
        refine_bound: Option<u32>,
        /// Digit precision for approximate p-adic inputs.
        #[arg(long)]
        precision: Option<u32>,
    },
    /// Interactive query loop reading statements from stdin.
    Repl,
}

fn options(depth: Option<u32>, refine_bound: Option<u32>, precision: Option<u32>) -> Options {
    let mut o = Options::default();
    if let Some(d) = depth {
        o.depth = d;
    }
    if let Some(r) = refine_bound {
        o.refine_bound = r;
    }
    if let Some(p) = precision {
        o.precision = p;
    }
    o
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            file,
            json: _,
            pretty,
            depth,
            refine_bound,
            precision,
        } => {
            let source = match std::fs::read_to_string(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("pdens: cannot read {}: {}", file, e);
                    return ExitCode::from(2);
                }
            };
            let doc = match dsl::parse(&source) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("pdens: {}", e);
                    return ExitCode::from(2);
                }
            };
            let outcome = match run::run(&doc, options(depth, refine_bound, precision)) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("pdens: {}", e);
                    return ExitCode::from(2);
                }
            };
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for report in &outcome.reports {
                let line = if pretty {
                    serde_json::to_string_pretty(report).unwrap()
                } else {
                    serde_json::to_string(report).unwrap()
                };
                writeln!(out, "{}", line).unwrap();
            }
            if outcome.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Repl => repl(),
    }
}

fn repl() -> ExitCode {
    let stdin = std::io::stdin();
    let mut ctx: Option<Context> = None;
    let mut all_passed = true;
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("prime") {
            let p: Option<u64> = rest.trim().trim_end_matches(';').trim().parse().ok();
            match p.map(|p| Context::new(p, Options::default())) {
                Some(Ok(c)) => {
                    ctx = Some(c);
                }
                _ => eprintln!("pdens: bad prime declaration"),
            }
            continue;
        }
        let Some(ctx) = ctx.as_mut() else {
            eprintln!("pdens: declare a prime first, e.g. `prime 5;`");
            continue;
        };
        let stmt = if trimmed.ends_with(';') {
            trimmed.to_string()
        } else {
            format!("{};", trimmed)
        };
        match dsl::parse_item(&stmt) {
            Ok(Item::Set(name, e)) => {
                if let Err(err) = ctx.define_set(&name, &e) {
                    eprintln!("pdens: {}", err);
                }
            }
            Ok(Item::Group(name, g)) => {
                if let Err(err) = ctx.define_group(&name, &g) {
                    eprintln!("pdens: {}", err);
                }
            }
            Ok(Item::Query(q)) => {
                let (report, passed) = run::run_query(ctx, &q);
                if passed == Some(false) {
                    all_passed = false;
                }
                println!("{}", serde_json::to_string(&report).unwrap());
            }
            Err(e @ ParseError::Syntax { .. }) | Err(e @ ParseError::Semantic { .. }) => {
                eprintln!("pdens: {}", e)
            }
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
