//! Command-line front end: field quotients, learning, verification,
//! coordination sequences, and geometry export, communicating via files.

use clap::{Parser, Subcommand};
use grts_core::learner::{learn_loop, LearnConfig, LearnError};
use grts_core::quotient::{
    enumerate_cells, find_good_triples, find_quotients, report_json, schema_from_manifold,
    QuotientError,
};
use grts_core::rts::{export_geometry, Rts};
use grts_core::schema::{builtin_seifert_weber_535, builtin_torus_434, HoneycombSchema};
use grts_core::verifier::{verify, VerifyError};
use grts_core::SchlafliSymbol;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_USAGE: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_CAP: u8 = 4;
const EXIT_PRECISION: u8 = 5;
const EXIT_VERIFY: u8 = 6;

#[derive(Parser)]
#[command(name = "grts", version, about = "Regular honeycombs as geodesic regular tree structures", disable_help_subcommand = true)]
struct Cli {
    /// machine-readable output on standard output
    #[arg(long, global = true)]
    json: bool,
    /// worker thread cap (currently advisory; all stages are single-threaded)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search finite-field quotients for a Schläfli symbol and emit
    /// manifold reports plus one schema file per quotient
    Fieldquotient {
        /// symbol as p,q,r
        #[arg(long)]
        symbol: String,
        /// field characteristic
        #[arg(long)]
        prime: u64,
        /// use the quadratic extension field F_{p^2}
        #[arg(long)]
        squared: bool,
        /// cap on group/coset enumeration sizes
        #[arg(long, default_value_t = 100_000)]
        limit: usize,
        /// output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a verified GRTS from a schema file
    Learn {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// learning iteration cap (ball radius grows by one per iteration)
        #[arg(long, default_value_t = 12)]
        max_iterations: usize,
        /// initial ball radius
        #[arg(long, default_value_t = 4)]
        ball_radius: usize,
        /// transducer state cap during verification
        #[arg(long, default_value_t = 100_000)]
        state_cap: usize,
    },
    /// Verify a GRTS file against its schema
    Verify {
        #[arg(long)]
        grts: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// additionally run the bounded exhaustive distance pass
        #[arg(long)]
        full_dist_check: bool,
        #[arg(long, default_value_t = 100_000)]
        state_cap: usize,
    },
    /// Print the coordination sequence of a GRTS
    Coordseq {
        #[arg(long)]
        grts: PathBuf,
        /// last shell index; prints n+1 terms
        #[arg(long)]
        n: usize,
    },
    /// Export tree geometry in a projective model
    Export {
        #[arg(long)]
        grts: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value = "poincare_ball")]
        model: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in schema file (for Euclidean and hand-made inputs)
    Schema {
        /// one of: torus_434, seifert_weber_535
        #[arg(long)]
        builtin: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match cli.cmd {
        Cmd::Fieldquotient { symbol, prime, squared, limit, out } => {
            cmd_fieldquotient(&symbol, prime, squared, limit, &out, json)
        }
        Cmd::Learn { schema, out, max_iterations, ball_radius, state_cap } => {
            cmd_learn(&schema, &out, max_iterations, ball_radius, state_cap, json)
        }
        Cmd::Verify { grts, schema, full_dist_check, state_cap } => {
            cmd_verify(&grts, &schema, full_dist_check, state_cap, json)
        }
        Cmd::Coordseq { grts, n } => cmd_coordseq(&grts, n, json),
        Cmd::Export { grts, schema, radius, model, out } => {
            cmd_export(&grts, &schema, radius, &model, &out, json)
        }
        Cmd::Schema { builtin, out } => cmd_schema(&builtin, &out, json),
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn parse_symbol(s: &str) -> Option<SchlafliSymbol> {
    let parts: Vec<usize> = s.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
    if parts.len() != 3 {
        return None;
    }
    SchlafliSymbol::new(parts[0], parts[1], parts[2]).ok()
}

fn read_schema(path: &PathBuf) -> Result<HoneycombSchema, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let schema = HoneycombSchema::from_json(&text).map_err(|e| e.to_string())?;
    let report = schema.validate();
    if !report.is_valid() {
        return Err(format!(
            "schema validation failed: {}",
            serde_json::to_string(&report.violations).unwrap_or_default()
        ));
    }
    Ok(schema)
}

fn read_rts(path: &PathBuf) -> Result<Rts, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Rts::deserialize(&text).map_err(|e| e.to_string())
}

fn cmd_fieldquotient(
    symbol: &str,
    prime: u64,
    squared: bool,
    limit: usize,
    out: &PathBuf,
    json: bool,
) -> ExitCode {
    let Some(sym) = parse_symbol(symbol) else {
        return usage(&format!("unsupported symbol {symbol:?} (expected hyperbolic p,q,r)"));
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return usage(&format!("cannot create {}: {e}", out.display()));
    }
    let spec = (prime, if squared { 2 } else { 1 });
    let triples = match find_good_triples(&sym, spec, 16) {
        Ok(ts) => ts,
        Err(QuotientError::Euclidean) => {
            return usage("Euclidean symbols have no finite-field replay; use `grts schema`")
        }
        Err(e) => return usage(&e.to_string()),
    };
    let mut found = 0usize;
    let mut lines = vec![];
    for (i, t) in triples.iter().enumerate() {
        let m = match enumerate_cells(t, limit) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let quotients = match find_quotients(&m, limit) {
            Ok(qs) => qs,
            Err(_) => continue,
        };
        let base =
            format!("{}-{}-{}_f{}_m{}", sym.p, sym.q, sym.r, t.field.size(), i);
        let report_path = out.join(format!("{base}_report.json"));
        if std::fs::write(&report_path, report_json(&m, &quotients) + "\n").is_err() {
            return usage(&format!("cannot write {}", report_path.display()));
        }
        for q in &quotients {
            let Ok((schema, _)) = schema_from_manifold(&m, Some(q)) else { continue };
            let path = out.join(format!("{base}_q{}_schema.json", q.cells));
            if std::fs::write(&path, schema.canonical_json() + "\n").is_err() {
                return usage(&format!("cannot write {}", path.display()));
            }
            found += 1;
            lines.push(format!(
                "{{\"cells\":{},\"quotient_cells\":{},\"schema\":{:?},\"report\":{:?}}}",
                m.num_cells(),
                q.cells,
                path.display().to_string(),
                report_path.display().to_string()
            ));
        }
    }
    if json {
        println!("[{}]", lines.join(","));
    } else {
        println!("{found} quotient schema(s) written to {}", out.display());
    }
    if found == 0 {
        ExitCode::from(EXIT_NOT_FOUND)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_learn(
    schema_path: &PathBuf,
    out: &PathBuf,
    max_iterations: usize,
    ball_radius: usize,
    state_cap: usize,
    json: bool,
) -> ExitCode {
    let schema = match read_schema(schema_path) {
        Ok(s) => s,
        Err(e) => return usage(&e),
    };
    let config = LearnConfig { max_iterations, ball_radius, suffix_check_l: 3, state_cap };
    let t0 = Instant::now();
    let (rts, stats) = match learn_loop(&schema, &config) {
        Ok(out) => out,
        Err(LearnError::IterationCapExceeded(n)) => {
            eprintln!("error: learning did not converge within {n} iterations");
            return ExitCode::from(EXIT_CAP);
        }
        Err(e @ LearnError::Graph(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PRECISION);
        }
        Err(e) => return usage(&e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    if std::fs::write(out, rts.serialize() + "\n").is_err() {
        return usage(&format!("cannot write {}", out.display()));
    }
    if json {
        println!(
            "{{\"iterations\":{},\"radius\":{},\"seconds\":{:.3},\"states\":{}}}",
            stats.iterations,
            stats.final_radius,
            secs,
            rts.states.len()
        );
    } else {
        println!(
            "learned {} states in {} iterations ({:.2}s, final radius {})",
            rts.states.len(),
            stats.iterations,
            secs,
            stats.final_radius
        );
    }
    ExitCode::SUCCESS
}

fn cmd_verify(
    grts_path: &PathBuf,
    schema_path: &PathBuf,
    full_dist_check: bool,
    state_cap: usize,
    json: bool,
) -> ExitCode {
    let schema = match read_schema(schema_path) {
        Ok(s) => s,
        Err(e) => return usage(&e),
    };
    let rts = match read_rts(grts_path) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    if rts.schema_hash != schema.canonical_hash() {
        return usage(&format!(
            "schema hash mismatch: GRTS was learned from {:016x}, schema file hashes to {:016x}",
            rts.schema_hash,
            schema.canonical_hash()
        ));
    }
    let report = match verify(&rts, &schema, state_cap, full_dist_check) {
        Ok(r) => r,
        Err(VerifyError::Precision) => {
            eprintln!("error: {}", VerifyError::Precision);
            return ExitCode::from(EXIT_PRECISION);
        }
        Err(e @ (VerifyError::StateCapExceeded(_) | VerifyError::SearchCapExceeded)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CAP);
        }
        Err(e) => return usage(&e.to_string()),
    };
    if json {
        println!("{}", report.to_json());
    } else if report.ok() {
        println!(
            "verification passed: {} transducers, {} cycles{}",
            report.transducer_sizes.len(),
            report.cycles.len(),
            if full_dist_check {
                format!(", {} words distance-checked", report.dist_checked)
            } else {
                String::new()
            }
        );
    } else {
        println!("verification FAILED");
        for f in &report.failures {
            println!("  {f}");
        }
        for c in report.cycles.iter().filter(|c| !c.ok) {
            println!(
                "  cycle {:?} at type {}: witness {}",
                c.cycle,
                c.cell_type,
                c.witness.as_deref().unwrap_or("(none)")
            );
        }
    }
    if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn cmd_coordseq(grts_path: &PathBuf, n: usize, json: bool) -> ExitCode {
    let rts = match read_rts(grts_path) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    let root_type = rts.states[rts.roots[0]].cell_type;
    let seq = rts.coordination(root_type, n);
    let terms: Vec<String> = seq.iter().map(|x| x.to_string()).collect();
    if json {
        println!("[{}]", terms.join(","));
    } else {
        println!("{}", terms.join(", "));
    }
    ExitCode::SUCCESS
}

fn cmd_export(
    grts_path: &PathBuf,
    schema_path: &PathBuf,
    radius: usize,
    model: &str,
    out: &PathBuf,
    json: bool,
) -> ExitCode {
    if model != "poincare_ball" && model != "klein" {
        return usage(&format!("unknown model {model:?}"));
    }
    let schema = match read_schema(schema_path) {
        Ok(s) => s,
        Err(e) => return usage(&e),
    };
    let rts = match read_rts(grts_path) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    if rts.schema_hash != schema.canonical_hash() {
        return usage("schema hash mismatch between GRTS and schema file");
    }
    let root_type = rts.states[rts.roots[0]].cell_type;
    let text = export_geometry(&schema, &rts, root_type, radius, model);
    if std::fs::write(out, text.clone() + "\n").is_err() {
        return usage(&format!("cannot write {}", out.display()));
    }
    let points = text.split("\"points\":[").nth(1).map_or(0, |s| s.matches('[').count());
    if json {
        println!(
            "{{\"out\":{:?},\"points\":{points},\"radius\":{radius}}}",
            out.display().to_string()
        );
    } else {
        println!("wrote {} ({points} points, radius {radius})", out.display());
    }
    ExitCode::SUCCESS
}

fn cmd_schema(builtin: &str, out: &PathBuf, json: bool) -> ExitCode {
    let schema = match builtin {
        "torus_434" => builtin_torus_434(),
        "seifert_weber_535" => builtin_seifert_weber_535(),
        _ => return usage(&format!("unknown builtin {builtin:?} (torus_434, seifert_weber_535)")),
    };
    if std::fs::write(out, schema.canonical_json() + "\n").is_err() {
        return usage(&format!("cannot write {}", out.display()));
    }
    if json {
        println!(
            "{{\"hash\":\"{:016x}\",\"out\":{:?}}}",
            schema.canonical_hash(),
            out.display().to_string()
        );
    } else {
        println!("wrote {} (hash {:016x})", out.display(), schema.canonical_hash());
    }
    ExitCode::SUCCESS
}
