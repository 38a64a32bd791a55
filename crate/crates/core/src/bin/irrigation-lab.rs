use std::io::{self, Write};
use std::process::ExitCode;

use irrigation_core::harness::{self, parse_config, ExperimentSpec, HarnessError, Kind};

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

/// `--key value` / `--key=value` pairs in command-line order.
fn flag_pairs(args: &[String]) -> Result<Vec<(String, String)>, HarnessError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            return Err(usage(format!("unexpected argument `{a}`")));
        };
        let (k, v) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((k.replace('-', "_"), v));
    }
    Ok(out)
}

fn build_spec(args: &[String]) -> Result<ExperimentSpec, HarnessError> {
    let (kind, rest) = match args.first() {
        Some(a) if !a.starts_with("--") => (Some(a.parse::<Kind>().map_err(usage)?), &args[1..]),
        _ => (None, args),
    };
    let pairs = flag_pairs(rest)?;
    let config = pairs.iter().filter(|(k, _)| k == "config").map(|(_, v)| v).last();
    let mut spec = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
            let spec = parse_config(&text)?;
            if let Some(k) = kind {
                if k != spec.kind {
                    return Err(usage(format!("kind `{k}` conflicts with `{}` in {path}", spec.kind)));
                }
            }
            spec
        }
        None => ExperimentSpec::new(kind.ok_or_else(|| usage("missing <kind>; see --help"))?),
    };
    // `of` resets the parameter set, so it is applied before the other flags
    let ordered = pairs
        .iter()
        .filter(|(k, _)| k == "of")
        .chain(pairs.iter().filter(|(k, _)| k != "of" && k != "config"));
    for (k, v) in ordered {
        let key = if k == "replicates" { "reps" } else { k.as_str() };
        spec.set(key, v).map_err(usage)?;
    }
    Ok(spec)
}

fn main_inner(args: &[String]) -> Result<(), HarnessError> {
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h" || a == "help") {
        print!("{}", harness::help_text());
        return if args.is_empty() { Err(usage("missing <kind>")) } else { Ok(()) };
    }
    let spec = build_spec(args)?;
    let output = harness::run(&spec)?;
    match &spec.out {
        Some(path) => harness::write_outputs(&output, path)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            output.table.write_csv(&mut lock).map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
            let _ = lock.flush();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irrigation-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
