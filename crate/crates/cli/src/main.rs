use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ncgabor::frames::figa_sides;
use ncgabor::hilbert_module::min_windows;
use ncgabor::modspace::parse_exponent;
use ncgabor::{
    janssen_representation, module_frame_check, mod_norm, selftest, Error, GaborSystem, Lattice,
    ModNormSpec, Signal, Weight,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ncgabor", version, about = "Finite Gabor analysis on Z_N x Z_N")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Serial evaluation in canonical order.
    #[arg(long, global = true)]
    reference: bool,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    /// Signal length N.
    #[arg(long)]
    n: usize,
    /// Lattice generators, e.g. "(2,0),(0,3)". Empty means the trivial lattice.
    #[arg(long, default_value = "")]
    gens: String,
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// Window as inline JSON, a JSON file, or `gaussian[:width]`, `delta[:t]`, `random[:seed]`.
    #[arg(long = "window")]
    windows: Vec<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Adjoint lattice.
    Adjoint(LatticeArgs),
    /// Lattice volume N/|L| as "p/q".
    Vol(LatticeArgs),
    /// Canonical dual windows.
    Dual {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        windows: WindowArgs,
    },
    /// Canonical tight windows.
    Tight {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        windows: WindowArgs,
    },
    /// Optimal frame bounds.
    Bounds {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        windows: WindowArgs,
    },
    /// Both sides of the fundamental identity of Gabor analysis.
    Figa {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value = "random:1")]
        f1: String,
        #[arg(long, default_value = "random:2")]
        f2: String,
        #[arg(long, default_value = "random:3")]
        g1: String,
        #[arg(long, default_value = "random:4")]
        g2: String,
    },
    /// Janssen coefficients on the adjoint lattice; a second window gives the mixed operator.
    Janssen {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        windows: WindowArgs,
    },
    /// Module-frame report for a window family, or the window-count probe.
    Multiwindow {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// Run the randomized minimum-window probe instead.
        #[arg(long)]
        min_windows: bool,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Weighted mixed modulation norm.
    Modnorm {
        #[arg(long)]
        n: usize,
        /// Signal to measure.
        #[arg(long)]
        f: String,
        #[command(flatten)]
        windows: WindowArgs,
        /// Weight JSON, e.g. '{"family":"polynomial","s":1}'.
        #[arg(long, default_value = r#"{"family":"polynomial","s":0}"#)]
        weight: String,
        #[arg(long, default_value = "1")]
        p: String,
        #[arg(long, default_value = "1")]
        q: String,
        /// Power applied to the weight.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// GRS probe of a weight along the dilations of one point, as CSV.
    Grs {
        #[arg(long)]
        weight: String,
        #[arg(long, default_value = "(1,0)")]
        point: String,
        #[arg(long, default_value_t = 1024)]
        n_max: u64,
        /// Emit the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the invariant suite and print a pass/fail table.
    Selftest {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// All signed integers in `text`, in order.
fn integers(text: &str) -> Result<Vec<i64>, Failure> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<i64>| -> Result<(), Failure> {
        if !cur.is_empty() {
            let v = cur.parse().map_err(|_| invalid(format!("bad integer `{cur}`")))?;
            out.push(v);
            cur.clear();
        }
        Ok(())
    };
    for ch in text.chars() {
        match ch {
            '0'..='9' => cur.push(ch),
            '-' if cur.is_empty() => cur.push(ch),
            '(' | ')' | '[' | ']' | ',' | ' ' => flush(&mut cur, &mut out)?,
            _ => return Err(invalid(format!("unexpected `{ch}` in `{text}`"))),
        }
    }
    flush(&mut cur, &mut out)?;
    Ok(out)
}

fn parse_pairs(text: &str) -> Result<Vec<[i64; 2]>, Failure> {
    let v = integers(text)?;
    if v.len() % 2 != 0 {
        return Err(invalid(format!("`{text}` does not list (k,l) pairs")));
    }
    Ok(v.chunks(2).map(|c| [c[0], c[1]]).collect())
}

fn build_lattice(args: &LatticeArgs) -> Result<Arc<Lattice>, Failure> {
    Ok(Arc::new(Lattice::from_pairs(args.n, &parse_pairs(&args.gens)?)?))
}

fn parse_signal(spec: &str, n: usize) -> Result<Signal, Failure> {
    if n < 2 {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    let trimmed = spec.trim();
    let (head, arg) = trimmed.split_once(':').unwrap_or((trimmed, ""));
    let signal = match head {
        "gaussian" => {
            let width = if arg.is_empty() { 1.0 } else { number(arg)? };
            if !(width.is_finite() && width > 0.0) {
                return Err(invalid(format!("gaussian width must be positive, got {arg}")));
            }
            Signal::gaussian(n, width)
        }
        "delta" => {
            let t: usize = if arg.is_empty() { 0 } else { arg.parse().map_err(|_| invalid(format!("bad delta position `{arg}`")))? };
            if t >= n {
                return Err(invalid(format!("delta position {t} outside 0..{n}")));
            }
            Signal::delta(n, t)
        }
        "zero" => Signal::zeros(n),
        "random" => {
            let seed: u64 = if arg.is_empty() { 0 } else { arg.parse().map_err(|_| invalid(format!("bad seed `{arg}`")))? };
            Signal::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        _ => {
            let text = if trimmed.starts_with('{') {
                trimmed.to_string()
            } else {
                fs::read_to_string(trimmed).map_err(|e| invalid(format!("cannot read window `{trimmed}`: {e}")))?
            };
            let s: Signal = serde_json::from_str(&text).map_err(|e| invalid(format!("invalid signal JSON: {e}")))?;
            if s.n() != n {
                return Err(Error::Dimension { expected: n, found: s.n() }.into());
            }
            s
        }
    };
    Ok(signal)
}

fn number(text: &str) -> Result<f64, Failure> {
    text.parse().map_err(|_| invalid(format!("`{text}` is not a number")))
}

fn windows(args: &WindowArgs, n: usize) -> Result<Vec<Signal>, Failure> {
    if args.windows.is_empty() {
        return Err(invalid("at least one --window is required"));
    }
    args.windows.iter().map(|w| parse_signal(w, n)).collect()
}

fn parse_weight(text: &str) -> Result<Weight, Failure> {
    let w: Weight = serde_json::from_str(text).map_err(|e| invalid(format!("invalid weight JSON: {e}")))?;
    w.validate()?;
    Ok(w)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run(verb: Verb) -> Result<String, Failure> {
    match verb {
        Verb::Adjoint(args) => Ok(to_json(&build_lattice(&args)?.adjoint())),
        Verb::Vol(args) => {
            let l = build_lattice(&args)?;
            Ok(to_json(&json!({"n": l.n(), "size": l.len(), "vol": l.volume()})))
        }
        Verb::Dual { lattice, windows: w } => {
            let l = build_lattice(&lattice)?;
            let sys = GaborSystem::new(windows(&w, l.n())?, l)?;
            Ok(to_json(&sys.canonical_dual()?))
        }
        Verb::Tight { lattice, windows: w } => {
            let l = build_lattice(&lattice)?;
            let sys = GaborSystem::new(windows(&w, l.n())?, l)?;
            Ok(to_json(&sys.canonical_tight()?))
        }
        Verb::Bounds { lattice, windows: w } => {
            let l = build_lattice(&lattice)?;
            let sys = GaborSystem::new(windows(&w, l.n())?, l)?;
            Ok(to_json(&sys.frame_bounds()))
        }
        Verb::Figa { lattice, f1, f2, g1, g2 } => {
            let l = build_lattice(&lattice)?;
            let n = l.n();
            let (f1, f2, g1, g2) = (parse_signal(&f1, n)?, parse_signal(&f2, n)?, parse_signal(&g1, n)?, parse_signal(&g2, n)?);
            let (lhs, rhs) = figa_sides(&f1, &f2, &g1, &g2, &l)?;
            let residual = (lhs - rhs).norm() / (1.0 + lhs.norm());
            Ok(to_json(&json!({
                "lhs": [lhs.re, lhs.im],
                "rhs": [rhs.re, rhs.im],
                "residual": residual,
            })))
        }
        Verb::Janssen { lattice, windows: w } => {
            let l = build_lattice(&lattice)?;
            let ws = windows(&w, l.n())?;
            if ws.len() > 2 {
                return Err(invalid("janssen takes one window, or two for the mixed operator"));
            }
            let h = ws.last().expect("non-empty");
            Ok(to_json(&janssen_representation(&ws[0], h, &l)?))
        }
        Verb::Multiwindow { lattice, windows: w, min_windows: probe, trials, seed } => {
            let l = build_lattice(&lattice)?;
            if probe {
                return Ok(to_json(&min_windows(&l, trials, seed)?));
            }
            Ok(to_json(&module_frame_check(&windows(&w, l.n())?, &l)?))
        }
        Verb::Modnorm { n, f, windows: w, weight, p, q, s } => {
            let f = parse_signal(&f, n)?;
            let ws = windows(&w, n)?;
            if ws.len() != 1 {
                return Err(invalid("modnorm takes exactly one --window"));
            }
            let p = parse_exponent(&p).map_err(invalid)?;
            let q = parse_exponent(&q).map_err(invalid)?;
            let spec = ModNormSpec::new(p, q, parse_weight(&weight)?, s, ws[0].clone())?;
            let value = mod_norm(&f, &spec)?;
            let exp = |x: f64| if x.is_infinite() { json!("inf") } else { json!(x) };
            Ok(to_json(&json!({"p": exp(p), "q": exp(q), "s": s, "value": value})))
        }
        Verb::Grs { weight, point, n_max, json: as_json } => {
            let pts = parse_pairs(&point)?;
            if pts.len() != 1 {
                return Err(invalid(format!("--point needs exactly one pair, got `{point}`")));
            }
            let report = parse_weight(&weight)?.grs_probe((pts[0][0], pts[0][1]), n_max)?;
            if as_json {
                Ok(to_json(&report))
            } else {
                eprintln!("verdict: {}", serde_json::to_value(report.verdict).expect("verdict").as_str().unwrap_or(""));
                Ok(report.to_csv())
            }
        }
        Verb::Selftest { seed } => {
            let results = selftest::run(seed)?;
            let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
            let mut table = String::new();
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                table += &format!("{:<width$}: {tag}  ({:.2e} vs {:.0e})\n", r.name, r.value, r.tolerance);
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            table += &format!("{} checks, {failed} failed\n", results.len());
            if failed > 0 {
                print!("{table}");
                return Err(Failure::Numerical(format!("{failed} selftest checks failed")));
            }
            Ok(table)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = if cli.reference { Some(1) } else { cli.threads };
    if let Some(k) = threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.verb) {
        Ok(text) => {
            if let Some(path) = cli.out {
                if let Err(e) = fs::write(&path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
