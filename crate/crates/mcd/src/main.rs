//! `mcd` command-line interface: analysis and refinement of curve systems,
//! certificates, verification of the builtin rational-map families, parameter
//! solving, and basin rendering.

use clap::{Parser, Subcommand};
use mcd::curve_complex::CurveSystem;
use mcd::decomposition::{
    combinatorial_renormalization_data, find_renormalizable_piece, refine_to_dichotomy,
    renormalization_certificate, DecompError,
};
use mcd::numerics::families::{self, EX1_NU, EX2_NU};
use mcd::numerics::maps::{verify_pcf, RationalMap};
use mcd::numerics::poly::Poly;
use mcd::numerics::render::render_basins;
use mcd::numerics::NumericsError;
use mcd::report::analyze;
use num_complex::Complex64;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mcd",
    version,
    about = "Combinatorial decomposition of branched coverings by stable multicurves, \
             with numerical verification of the builtin rational-map families"
)]
struct Cli {
    /// Seed for the root-finder's perturbed starting configuration.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every analysis pass on a curve-system JSON file and print a report.
    Analyze {
        /// Path to a system JSON file, or the name of a bundled fixture.
        input: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine a system to walk classes until every class is constant or coiling.
    Refine {
        input: String,
        /// Walk length; defaults to the distance of the farthest periodic class.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce a renormalization certificate for a piece, or search for one.
    Certify {
        input: String,
        /// Certify this specific piece.
        #[arg(long, conflicts_with = "find")]
        piece: Option<String>,
        /// Search for a renormalizable piece.
        #[arg(long)]
        find: bool,
    },
    /// Verify the critical portraits of the builtin maps of one example set.
    VerifyExample {
        /// Example set: 1 or 2.
        example: u8,
    },
    /// Solve the defining equation of a model parameter and compare digits.
    SolveParam {
        /// Example set: 1 or 2.
        example: u8,
        /// Number of digits required to match the reference value.
        #[arg(long, default_value_t = 13)]
        digits: usize,
    },
    /// Render the attracting basins of a builtin family (or a map JSON file).
    Render {
        /// Family id (e.g. ex2.R) or path to a JSON file with "num"/"den"
        /// coefficient arrays of [re, im] pairs.
        map: String,
        #[arg(long, default_value = "basins.ppm")]
        out: PathBuf,
        /// Window center as "re,im".
        #[arg(long, default_value = "0,0")]
        center: String,
        /// Window side length.
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        /// Image size in pixels (square).
        #[arg(long, default_value_t = 256)]
        px: usize,
        #[arg(long, default_value_t = 10000)]
        maxiter: usize,
        /// Worker threads for scanline rendering.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn log_level() -> u8 {
    match std::env::var("MCD_LOG").as_deref() {
        Ok("quiet") => 0,
        Ok("debug") => 2,
        _ => 1,
    }
}

fn info(msg: &str) {
    if log_level() >= 1 {
        eprintln!("[mcd] {msg}");
    }
}

fn debug(msg: &str) {
    if log_level() >= 2 {
        eprintln!("[mcd:debug] {msg}");
    }
}

/// Exit code 1: validation or argument problems. Exit code 2: numerical
/// non-convergence.
fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn numerics_exit(e: &NumericsError) -> u8 {
    match e {
        NumericsError::NonConvergence(_) => 2,
        _ => 1,
    }
}

fn load_system(input: &str) -> Result<CurveSystem, String> {
    if let Some((_, json)) = mcd::fixtures::ALL.iter().find(|(n, _)| *n == input) {
        debug(&format!("loaded bundled fixture '{input}'"));
        return serde_json::from_str(json).map_err(|e| e.to_string());
    }
    let text = std::fs::read_to_string(input)
        .map_err(|e| format!("cannot read '{input}': {e}"))?;
    CurveSystem::from_json(&text).map_err(|e| format!("cannot parse '{input}': {e}"))
}

fn emit(json: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, json).map_err(|e| e.to_string()),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected re,im but got '{s}'"))?;
    Ok(Complex64::new(
        re.trim().parse().map_err(|e| format!("bad real part: {e}"))?,
        im.trim().parse().map_err(|e| format!("bad imaginary part: {e}"))?,
    ))
}

fn load_map(arg: &str) -> Result<RationalMap, String> {
    if families::FAMILY_IDS.contains(&arg) {
        return families::builtin(arg).map_err(|e| e.to_string());
    }
    #[derive(serde::Deserialize)]
    struct MapFile {
        num: Vec<[f64; 2]>,
        den: Vec<[f64; 2]>,
    }
    let text =
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read '{arg}': {e}"))?;
    let mf: MapFile =
        serde_json::from_str(&text).map_err(|e| format!("cannot parse '{arg}': {e}"))?;
    let to_poly =
        |v: Vec<[f64; 2]>| Poly::new(v.into_iter().map(|[r, i]| Complex64::new(r, i)).collect());
    Ok(RationalMap::new(to_poly(mf.num), to_poly(mf.den)))
}

/// Number of matching leading significant digits of two reals.
fn matching_digits(value: f64, reference: f64, digits: usize) -> usize {
    let a = format!("{value:+.*e}", digits.saturating_sub(1));
    let b = format!("{reference:+.*e}", digits.saturating_sub(1));
    // Mantissas must share sign and exponent to share any digits.
    let (ma, ea) = a.split_once('e').unwrap_or((&a, "0"));
    let (mb, eb) = b.split_once('e').unwrap_or((&b, "0"));
    if ea != eb || ma.starts_with('+') != mb.starts_with('+') {
        return 0;
    }
    ma.chars()
        .zip(mb.chars())
        .take_while(|(x, y)| x == y)
        .filter(|(x, _)| x.is_ascii_digit())
        .count()
}

fn run(cli: Cli) -> ExitCode {
    match cli.cmd {
        Cmd::Analyze { input, out } => {
            let sys = match load_system(&input) {
                Ok(s) => s,
                Err(e) => return fail(1, &e),
            };
            match analyze(&sys) {
                Ok(report) => {
                    let json = serde_json::to_string_pretty(&report).expect("report serializes");
                    if let Err(e) = emit(&json, out.as_ref()) {
                        return fail(1, &e);
                    }
                    info(&format!(
                        "analyzed {} curves: lambda = {:.6}, obstructed = {}",
                        report.curves.len(),
                        report.lambda,
                        report.obstructed
                    ));
                    ExitCode::SUCCESS
                }
                Err(DecompError::Invalid(errors)) => {
                    // The report is still written: it carries the validation
                    // outcome so failures are machine-readable.
                    let json = serde_json::to_string_pretty(&serde_json::json!({
                        "validation": { "errors": errors, "warnings": [] }
                    }))
                    .expect("error report serializes");
                    let _ = emit(&json, out.as_ref());
                    fail(1, "system failed validation; see report")
                }
                Err(e) => fail(1, &e.to_string()),
            }
        }
        Cmd::Refine { input, depth, out } => {
            let sys = match load_system(&input) {
                Ok(s) => s,
                Err(e) => return fail(1, &e),
            };
            match refine_to_dichotomy(&sys, depth) {
                Ok(refinement) => {
                    info(&format!(
                        "refined at depth {}: {} classes, dichotomy = {}",
                        refinement.n,
                        refinement.system.curves.len(),
                        refinement.dichotomy
                    ));
                    let json =
                        serde_json::to_string_pretty(&refinement).expect("refinement serializes");
                    match emit(&json, out.as_ref()) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(1, &e),
                    }
                }
                Err(e) => fail(1, &e.to_string()),
            }
        }
        Cmd::Certify { input, piece, find } => {
            let sys = match load_system(&input) {
                Ok(s) => s,
                Err(e) => return fail(1, &e),
            };
            if let Some(piece) = piece {
                match renormalization_certificate(&sys, &piece) {
                    Ok(Some(mut cert)) => {
                        match combinatorial_renormalization_data(&sys, &piece) {
                            Ok(data_cert) => cert.data = data_cert.data,
                            Err(e) => debug(&format!("no combinatorial data: {e}")),
                        }
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&cert).expect("certificate serializes")
                        );
                        ExitCode::SUCCESS
                    }
                    Ok(None) => fail(
                        1,
                        &format!("piece {piece} is periodic but its boundary is not all coiling"),
                    ),
                    Err(e) => fail(1, &e.to_string()),
                }
            } else if find {
                match find_renormalizable_piece(&sys) {
                    Ok(Some((gamma_prime, piece, cert))) => {
                        let json = serde_json::to_string_pretty(&serde_json::json!({
                            "multicurve": gamma_prime.iter().collect::<Vec<_>>(),
                            "piece": piece,
                            "certificate": cert,
                        }))
                        .expect("certificate serializes");
                        println!("{json}");
                        ExitCode::SUCCESS
                    }
                    Ok(None) => fail(1, "no renormalizable piece found"),
                    Err(e) => fail(1, &e.to_string()),
                }
            } else {
                fail(1, "pass --piece <id> or --find")
            }
        }
        Cmd::VerifyExample { example } => {
            if example != 1 && example != 2 {
                return fail(1, "example must be 1 or 2");
            }
            let ids: Vec<String> = ["R", "g0", "g"]
                .iter()
                .map(|suffix| format!("ex{example}.{suffix}"))
                .collect();
            let mut all_ok = true;
            println!("{:<8} {:>6} {:>10} {:>12}", "family", "degree", "orbits", "residual");
            for id in &ids {
                let m = families::builtin(id).expect("builtin family");
                match verify_pcf(&m, 64, 1e-8, cli.seed) {
                    Ok(portrait) => {
                        println!(
                            "{:<8} {:>6} {:>10} {:>12.3e}",
                            id,
                            portrait.degree,
                            portrait.orbits.len(),
                            portrait.max_residual
                        );
                        for o in &portrait.orbits {
                            debug(&format!(
                                "{id}: critical point {:?} (mult {}) closes after {} steps \
                                 into a {}-cycle, residual {:.3e}",
                                o.point, o.multiplicity, o.cycle_start, o.cycle_len, o.residual
                            ));
                        }
                        if portrait.max_residual >= 1e-8 {
                            all_ok = false;
                        }
                    }
                    Err(e) => {
                        println!("{id:<8} verification failed: {e}");
                        return ExitCode::from(numerics_exit(&e));
                    }
                }
            }
            if all_ok {
                info("all critical orbits verified finite");
                ExitCode::SUCCESS
            } else {
                fail(2, "some orbit residual exceeds 1e-8")
            }
        }
        Cmd::SolveParam { example, digits } => match families::solve_parameter(example) {
            Ok(sol) => {
                let reference = if example == 1 { EX1_NU } else { EX2_NU };
                let matched = matching_digits(sol.nu_re, reference, digits);
                println!("nu = {:.*}", digits.max(1), sol.nu_re);
                println!("residual = {:.3e}", sol.residual);
                println!("{}/{} digits match the reference value", matched.min(digits), digits);
                for r in sol.trace.quadratic_ratios() {
                    debug(&format!("quadratic step ratio {r:.3}"));
                }
                if matched >= digits {
                    ExitCode::SUCCESS
                } else {
                    fail(2, "solved parameter does not reach the requested digits")
                }
            }
            Err(e) => fail(numerics_exit(&e), &e.to_string()),
        },
        Cmd::Render {
            map,
            out,
            center,
            width,
            px,
            maxiter,
            threads,
        } => {
            let m = match load_map(&map) {
                Ok(m) => m,
                Err(e) => return fail(1, &e),
            };
            let center = match parse_complex(&center) {
                Ok(c) => c,
                Err(e) => return fail(1, &e),
            };
            match render_basins(&m, center, width, px, maxiter, 1e-6, threads, cli.seed) {
                Ok(result) => {
                    if let Err(e) = std::fs::write(&out, &result.ppm) {
                        return fail(1, &format!("cannot write '{}': {e}", out.display()));
                    }
                    info(&format!(
                        "wrote {} ({}x{}, {:.1}% classified)",
                        out.display(),
                        px,
                        px,
                        100.0 * result.stats.classified_fraction
                    ));
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&result.stats).expect("stats serialize")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(numerics_exit(&e), &e.to_string()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run(cli)
}
