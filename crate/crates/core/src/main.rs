use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use operad_bar::cli::{self, Outcome, RunConfig, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "operad-bar", version, about = "Operads, W-constructions and Hopf actions on bar complexes over F_p")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// key = value file; flags given on the command line take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    prime: Option<u32>,
    #[arg(long, global = true)]
    arity_max: Option<usize>,
    #[arg(long, global = true)]
    degree_max: Option<i64>,
    #[arg(long, global = true)]
    weight_max: Option<usize>,
    #[arg(long, global = true)]
    bar_length: Option<usize>,
    #[arg(long, global = true)]
    cell_max: Option<usize>,
    /// poly:N[:DEG], ext:K or free:DEG,...:W
    #[arg(long, global = true)]
    fixture: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Axiom, SDR and Hopf checks for C, K, E, W(E), then the relation gate on a fresh table
    CheckOperads {
        /// scale the N-th nonzero table entry by 2 before verifying
        #[arg(long)]
        corrupt: Option<usize>,
    },
    /// Build the table of components ρ_m(ξ)
    BuildRho,
    /// Check relations (a)-(d) on a table
    VerifyRho {
        table: PathBuf,
        #[arg(long)]
        corrupt: Option<usize>,
    },
    /// Evaluate an operation of W(E) on bar words of the fixture
    Act {
        table: PathBuf,
        /// element of W(E) in display form, e.g. "[12](1,2)"
        #[arg(long)]
        q: String,
        /// bar words such as "[x|x^2]"; "[]" is the empty word
        inputs: Vec<String>,
    },
    /// Homology ranks of E:r, W(C):r, W(E):r or bar:<fixture>
    Homology { complex: String },
    /// DOT for a W(E) element or graft:<x>;<i>;<y>
    Draw { object: String },
    /// Show the two differing lines of two tables, if any
    Diff { a: PathBuf, b: PathBuf },
}

fn config(c: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let s = |k: &str, v: Option<String>, cfg: &mut RunConfig| v.map_or(Ok(()), |v| cfg.set(k, &v));
    s("prime", c.prime.map(|x| x.to_string()), &mut cfg)?;
    s("arity-max", c.arity_max.map(|x| x.to_string()), &mut cfg)?;
    s("degree-max", c.degree_max.map(|x| x.to_string()), &mut cfg)?;
    s("weight-max", c.weight_max.map(|x| x.to_string()), &mut cfg)?;
    s("bar-length", c.bar_length.map(|x| x.to_string()), &mut cfg)?;
    s("cell-max", c.cell_max.map(|x| x.to_string()), &mut cfg)?;
    s("fixture", c.fixture.clone(), &mut cfg)?;
    s("seed", c.seed.map(|x| x.to_string()), &mut cfg)?;
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn read(p: &PathBuf) -> Result<String, Outcome> {
    std::fs::read_to_string(p).map_err(|e| Outcome::usage(format!("{}: {}", p.display(), e)))
}

fn run(cli: Cli) -> Outcome {
    let cfg = match config(&cli.common) {
        Ok(c) => c,
        Err(e) => return Outcome::usage(e),
    };
    let outcome = match &cli.cmd {
        Cmd::CheckOperads { corrupt } => cli::check_operads(&cfg, *corrupt),
        Cmd::BuildRho => cli::build_rho(&cfg),
        Cmd::VerifyRho { table, corrupt } => match read(table) {
            Ok(t) => cli::verify_rho(&cfg, &t, *corrupt, cli.common.fixture.as_deref()),
            Err(o) => o,
        },
        Cmd::Act { table, q, inputs } => match read(table) {
            Ok(t) => cli::act(&t, &cfg.fixture, q, inputs),
            Err(o) => o,
        },
        Cmd::Homology { complex } => cli::homology(&cfg, complex),
        Cmd::Draw { object } => cli::draw(&cfg, object),
        Cmd::Diff { a, b } => match (read(a), read(b)) {
            (Ok(x), Ok(y)) => diff(&x, &y),
            (Err(o), _) | (_, Err(o)) => o,
        },
    };
    if outcome.code == EXIT_USAGE {
        return outcome;
    }
    match &cfg.out {
        Some(path) => match std::fs::write(path, &outcome.text) {
            Ok(()) => Outcome { code: outcome.code, text: String::new() },
            Err(e) => Outcome::usage(format!("{}: {}", path.display(), e)),
        },
        None => outcome,
    }
}

fn diff(a: &str, b: &str) -> Outcome {
    let la: Vec<&str> = a.lines().collect();
    let lb: Vec<&str> = b.lines().collect();
    let mut text = String::new();
    for i in 0..la.len().max(lb.len()) {
        let (x, y) = (la.get(i).copied().unwrap_or(""), lb.get(i).copied().unwrap_or(""));
        if x != y {
            text.push_str(&format!("line {}\n< {}\n> {}\n", i + 1, x, y));
        }
    }
    Outcome { code: if text.is_empty() { 0 } else { 1 }, text }
}

fn main() -> ExitCode {
    let outcome = run(Cli::parse());
    // a closed pipe downstream is not an error of ours
    let _ = if outcome.code == EXIT_USAGE {
        std::io::stderr().write_all(outcome.text.as_bytes())
    } else {
        std::io::stdout().write_all(outcome.text.as_bytes())
    };
    ExitCode::from(outcome.code as u8)
}
