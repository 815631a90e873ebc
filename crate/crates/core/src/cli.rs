//! Command-line front end: `scan`, `bounds`, `verify` and `power`.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::{
    run_full_suite, run_power_experiment, scenario_seed, McReport, McSpec,
    PowerSpec, Scenario, SigmaField, SuiteOptions, MIN_BOUND_REPLICATIONS, MIN_SCAN_REPLICATIONS,
    SCHEMA,
};
use crate::logconcave::Law;
use crate::loglr::TailBoundKind;
use crate::scan::{run_scan, LengthSpec, ScanConfig, ScanResult, StrideSpec};
use crate::studentized::pivot_tail_exact;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tailscan", version, about = "Self-normalized scan statistics and tail bound checks")]
pub struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a series (one value per line) for an elevated-mean interval.
    Scan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// `dyadic`, `all`, or a comma-separated list of lengths.
        #[arg(long, default_value = "dyadic")]
        lengths: String,
        /// `auto` (a quarter of the length) or a fixed offset step.
        #[arg(long, default_value = "auto")]
        stride: String,
        #[arg(long, default_value_t = 4)]
        min_len: usize,
        #[arg(long)]
        two_sided: bool,
        /// Known bound on the mean-variation ratio; annotates detections
        /// outside the guaranteed range.
        #[arg(long)]
        validity_ratio: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Tabulate the tail bounds over a threshold grid.
    Bounds {
        /// `LO:HI:STEP`.
        #[arg(long, default_value = "0.5:6:0.5")]
        t_grid: String,
        /// Sample sizes for the exact pivot tail, comma-separated.
        #[arg(long, default_value = "10")]
        n: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the Monte Carlo verification suite.
    Verify {
        #[arg(long, env = "TAILSCAN_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Replications per bound check.
        #[arg(long, default_value_t = 1_000_000,
              value_parser = clap::value_parser!(u64).range(MIN_BOUND_REPLICATIONS..))]
        replications: u64,
        /// Multiplies every bound; below 1 gives a negative control.
        #[arg(long, default_value_t = 1.0)]
        bound_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the scan's detection rate against a planted interval.
    Power {
        #[arg(long, default_value_t = 8192)]
        n: usize,
        #[arg(long, default_value_t = 128)]
        len: usize,
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        margin: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// `const:S`, `uniform:LO:HI` or `outside:LO:HI`.
        #[arg(long, default_value = "const:1")]
        sigma_field: String,
        #[arg(long, default_value_t = 200,
              value_parser = clap::value_parser!(u64).range(MIN_SCAN_REPLICATIONS..))]
        reps: u64,
        /// `normal`, `laplace`, `uniform` or `logistic`.
        #[arg(long, default_value = "normal")]
        law: String,
        /// Detection rate required for exit status 0.
        #[arg(long, default_value_t = 0.9)]
        target: f64,
        #[arg(long, env = "TAILSCAN_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses a series: one number per line, blank lines skipped, an optional
/// non-numeric header on the first nonblank line.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    let mut first = true;
    for (k, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => bad.push(k + 1),
            Err(_) if first => {}
            Err(_) => bad.push(k + 1),
        }
        first = false;
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(10).map(|l| l.to_string()).collect();
        let more = if bad.len() > 10 { ", ..." } else { "" };
        return Err(Error::Config(format!(
            "non-numeric or non-finite values on line(s) {}{more}",
            shown.join(", ")
        )));
    }
    if out.is_empty() {
        return Err(Error::Config("input contains no observations".into()));
    }
    Ok(out)
}

pub fn parse_lengths(s: &str) -> Result<LengthSpec> {
    match s.trim() {
        "dyadic" => Ok(LengthSpec::Dyadic),
        "all" => Ok(LengthSpec::All),
        list => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad length '{t}'")))
            })
            .collect::<Result<Vec<_>>>()
            .map(LengthSpec::List),
    }
}

pub fn parse_stride(s: &str) -> Result<StrideSpec> {
    match s.trim() {
        "auto" => Ok(StrideSpec::Auto),
        v => match v.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(StrideSpec::Fixed(k)),
            _ => Err(Error::Config(format!("stride must be 'auto' or a positive integer (got '{v}')"))),
        },
    }
}

/// `LO:HI:STEP` into an inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("grid '{s}' must be LO:HI:STEP")))?;
    let [lo, hi, step] = parts[..] else {
        return Err(Error::Config(format!("grid '{s}' must be LO:HI:STEP")));
    };
    if !(lo > 0.0 && hi >= lo && step > 0.0) || !hi.is_finite() {
        return Err(Error::Config(format!("grid '{s}' needs 0 < LO <= HI and STEP > 0")));
    }
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    if k > 100_000 {
        return Err(Error::Config(format!("grid '{s}' has too many points")));
    }
    Ok((0..=k).map(|i| lo + step * i as f64).collect())
}

fn parse_ns(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(n) if n >= 3 => Ok(n),
            _ => Err(Error::Config(format!("sample size '{t}' must be an integer >= 3"))),
        })
        .collect()
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    schema: &'a str,
    config: &'a ScanConfig,
    #[serde(flatten)]
    result: &'a ScanResult,
}

pub fn scan_csv(res: &ScanResult) -> String {
    let mut s = String::from("offset,len,t,critical,kappa,exceed\n");
    for r in &res.intervals {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.offset, r.len, r.t, r.critical, r.kappa, r.exceed);
    }
    s
}

#[derive(Serialize)]
struct BoundRow {
    t: f64,
    normal_tail: f64,
    loglr_window: f64,
    loglr_split: f64,
    rademacher: f64,
    self_normalized: f64,
    pivot: Vec<f64>,
}

#[derive(Serialize)]
struct BoundsOutput {
    schema: &'static str,
    n: Vec<usize>,
    rows: Vec<BoundRow>,
}

fn bounds_table(grid: &[f64], ns: &[usize]) -> Result<BoundsOutput> {
    let rows = grid
        .iter()
        .map(|&t| {
            Ok(BoundRow {
                t,
                normal_tail: TailBoundKind::NormalTail.eval(t),
                loglr_window: TailBoundKind::LogLrWindow.eval(t),
                loglr_split: TailBoundKind::LogLrSplit.eval(t),
                rademacher: TailBoundKind::Rademacher.eval(t),
                self_normalized: TailBoundKind::SelfNormalized.eval(t),
                pivot: ns.iter().map(|&n| pivot_tail_exact(t, n)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsOutput {
        schema: SCHEMA,
        n: ns.to_vec(),
        rows,
    })
}

fn bounds_csv(b: &BoundsOutput) -> String {
    let mut s = String::from("t,normal_tail,loglr_window,loglr_split,rademacher,self_normalized");
    for n in &b.n {
        let _ = write!(s, ",pivot_n{n}");
    }
    s.push('\n');
    for r in &b.rows {
        let _ = write!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.normal_tail, r.loglr_window, r.loglr_split, r.rademacher, r.self_normalized
        );
        for p in &r.pivot {
            let _ = write!(s, ",{p:e}");
        }
        s.push('\n');
    }
    s
}

fn report_line(r: &McReport) -> String {
    let worst = r
        .rows
        .iter()
        .map(|row| row.empirical - row.bound - 3.0 * row.stderr)
        .fold(f64::NEG_INFINITY, f64::max);
    format!(
        "{} {:<44} reps={:<8} worst(emp-bound-3se)={:+.3e} [{:.1?}]",
        if r.pass { "PASS" } else { "FAIL" },
        r.name,
        r.replications,
        worst,
        r.runtime
    )
}

fn cmd(cli: Cli) -> Result<i32> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Scan {
            input,
            alpha,
            lengths,
            stride,
            min_len,
            two_sided,
            validity_ratio,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", input.display())))?;
            let x = parse_series(&text)?;
            let cfg = ScanConfig {
                alpha,
                lengths: parse_lengths(&lengths)?,
                stride: parse_stride(&stride)?,
                two_sided,
                min_len,
                validity_ratio,
                exec,
            };
            let res = run_scan(&x, &cfg)?;
            let body = match format {
                Format::Json => to_json(&ScanOutput {
                    schema: SCHEMA,
                    config: &cfg,
                    result: &res,
                })?,
                Format::Csv => scan_csv(&res),
            };
            emit(out.as_deref(), &body)?;
            let a = res.argmax;
            eprintln!(
                "{} intervals, {} detections; max T = {:.4} at offset {} length {} (critical {:.4})",
                res.n_intervals,
                res.detections().count(),
                a.t,
                a.offset,
                a.len,
                a.critical
            );
            Ok(EXIT_OK)
        }
        Command::Bounds {
            t_grid,
            n,
            out,
            format,
        } => {
            let table = bounds_table(&parse_grid(&t_grid)?, &parse_ns(&n)?)?;
            let body = match format {
                Format::Json => to_json(&table)?,
                Format::Csv => bounds_csv(&table),
            };
            emit(out.as_deref(), &body)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            seed,
            replications,
            bound_scale,
            out,
        } => {
            if !(bound_scale > 0.0) {
                return Err(Error::Config("bound scale must be positive".into()));
            }
            let opts = SuiteOptions {
                replications,
                bound_scale,
                exec,
                ..SuiteOptions::default()
            };
            let summary = run_full_suite(seed, &opts)?;
            for k in &summary.ks {
                eprintln!(
                    "{} {:<44} D={:.5} critical={:.5}",
                    if k.pass { "PASS" } else { "FAIL" },
                    k.name,
                    k.statistic,
                    k.critical
                );
            }
            for r in &summary.reports {
                eprintln!("{}", report_line(r));
            }
            emit(out.as_deref(), &to_json(&summary)?)?;
            Ok(if summary.all_pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Power {
            n,
            len,
            margin,
            eps,
            alpha,
            sigma_field,
            reps,
            law,
            target,
            seed,
            out,
        } => {
            let ps = PowerSpec {
                n,
                len,
                margin,
                eps,
                alpha,
                sigma: SigmaField::parse(&sigma_field)?,
                law: Law::unit_variance(&law)?,
                target,
                expect_detect: true,
            };
            let name = "power";
            let spec = McSpec::new(name, Scenario::ScanPower(ps), reps, scenario_seed(seed, name), vec![]);
            let report = run_power_experiment(&spec, exec)?;
            if let Some(d) = report.power {
                eprintln!(
                    "detection rate {:.3} (target {target}); planted gap {:.4}, mean T at plant {:.3}, critical {:.3}",
                    report.rows[0].empirical, d.planted_gap, d.mean_t_planted, d.critical
                );
            }
            #[derive(Serialize)]
            struct Out<'a> {
                schema: &'a str,
                root_seed: u64,
                report: &'a McReport,
            }
            emit(
                out.as_deref(),
                &to_json(&Out {
                    schema: SCHEMA,
                    root_seed: seed,
                    report: &report,
                })?,
            )?;
            Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match cmd(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_parsing() {
        assert_eq!(parse_series("value\n1\n 2.5 \n\n-3\n").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_series("4\n5\n").unwrap(), vec![4.0, 5.0]);
        let e = parse_series("x\n1\nfoo\n2\nbar\n").unwrap_err().to_string();
        assert!(e.contains("3, 5"), "{e}");
        assert!(parse_series("").is_err());
        assert!(parse_series("header\n").is_err());
        assert!(parse_series("1\nnan\n").is_err());
    }

    #[test]
    fn grids_and_specs() {
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("2:1:0.5").is_err());
        assert_eq!(parse_lengths("8, 16").unwrap(), LengthSpec::List(vec![8, 16]));
        assert_eq!(parse_stride("3").unwrap(), StrideSpec::Fixed(3));
        assert!(parse_stride("0").is_err());
    }

    #[test]
    fn bounds_columns() {
        let b = bounds_table(&[2.5], &[10]).unwrap();
        let r = &b.rows[0];
        assert!((r.normal_tail - 6.209_665_325_776_132e-3).abs() < 1e-15);
        assert!(r.self_normalized <= 3.18 * r.normal_tail);
        assert_eq!(r.loglr_window, 2.0 * (-3.125f64).exp());
        assert!(bounds_csv(&b).starts_with("t,normal_tail"));
    }
}
