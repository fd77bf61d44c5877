//! Command-line front end: run scenario configs, sweep parameters, decode
//! captured traces, and run the built-in demos.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qisim::eavesdrop::{recover_ask, recover_fsk};
use qisim::profiles::{builtin_scenario, parse_scenario, parse_scenario_path, BUILTIN_SCENARIOS};
use qisim::scenario::{run_scenario, sweep, sweep_csv};
use qisim::signal::read_csv_path;

const USAGE: &str = "\
qisim - Qi wireless charging simulator under adapter-side interference

USAGE:
    qisim run <config-file> [--out DIR] [--seed N]
    qisim sweep <config-file> --param NAME --values CSV [--out FILE]
    qisim decode <trace.csv> [--fp HZ]
    qisim demo <scenario-name> [--out DIR] [--seed N]

Scenario names for `demo`:
    baseline_charge eavesdrop_demo voice_injection power_toast
    power_toast_nojam fod_destruction fod_honest countermeasure

Sweepable parameters: m_i (attack depth), f_i (tone frequency, Hz),
charger (profile name), fod_loss_threshold (watts).

Exit codes: 0 success, 2 configuration error, 3 scenario assertion failure.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(args: &[String]) -> Result<ExitCode, String> {
    let Some(command) = args.first() else {
        print!("{USAGE}");
        return Ok(ExitCode::from(2));
    };
    match command.as_str() {
        "run" => cmd_run(&args[1..]),
        "sweep" => cmd_sweep(&args[1..]),
        "decode" => cmd_decode(&args[1..]),
        "demo" => cmd_demo(&args[1..]),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            Ok(ExitCode::SUCCESS)
        }
        other => Err(format!("unknown command `{other}`\n\n{USAGE}")),
    }
}

fn flag_value(args: &[String], name: &str) -> Result<Option<String>, String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == name {
            return match it.next() {
                Some(v) => Ok(Some(v.clone())),
                None => Err(format!("{name} requires a value")),
            };
        }
    }
    Ok(None)
}

fn positional(args: &[String]) -> Vec<&String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a.starts_with("--") {
            skip = true;
            continue;
        }
        out.push(a);
    }
    out
}

fn execute(
    config_text: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    default_out: &str,
) -> Result<ExitCode, String> {
    let mut cfg = parse_scenario(config_text).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out.unwrap_or_else(|| PathBuf::from(default_out));
    let report = run_scenario(&cfg, Some(&out_dir)).map_err(|e| e.to_string())?;
    print!("{}", report.summary);
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_run(args: &[String]) -> Result<ExitCode, String> {
    let pos = positional(args);
    let [config] = pos[..] else {
        return Err("run expects exactly one config file".into());
    };
    let text =
        std::fs::read_to_string(Path::new(config)).map_err(|e| format!("{config}: {e}"))?;
    let out = flag_value(args, "--out")?.map(PathBuf::from);
    let seed = flag_value(args, "--seed")?
        .map(|s| s.parse::<u64>().map_err(|e| format!("bad --seed: {e}")))
        .transpose()?;
    let stem = Path::new(config)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    execute(&text, out, seed, &format!("qisim-out/{stem}"))
}

fn cmd_sweep(args: &[String]) -> Result<ExitCode, String> {
    let pos = positional(args);
    let [config] = pos[..] else {
        return Err("sweep expects exactly one config file".into());
    };
    let param = flag_value(args, "--param")?.ok_or("sweep requires --param NAME")?;
    let values_csv = flag_value(args, "--values")?.ok_or("sweep requires --values CSV")?;
    let values: Vec<String> = values_csv
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let cfg = parse_scenario_path(Path::new(config)).map_err(|e| e.to_string())?;
    let rows = sweep(&cfg, &param, &values).map_err(|e| e.to_string())?;
    let csv = sweep_csv(&param, &rows);
    match flag_value(args, "--out")? {
        Some(path) => {
            std::fs::write(&path, &csv).map_err(|e| e.to_string())?;
            println!("wrote {path}");
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decode(args: &[String]) -> Result<ExitCode, String> {
    let pos = positional(args);
    let [trace_path] = pos[..] else {
        return Err("decode expects exactly one trace file".into());
    };
    let f_p = flag_value(args, "--fp")?
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad --fp: {e}")))
        .transpose()?
        .unwrap_or(140e3);
    let trace = read_csv_path(Path::new(trace_path)).map_err(|e| e.to_string())?;
    let mut messages = Vec::new();
    if trace.sample_rate() >= 20.0 * qisim::codec::F_ASK {
        messages.extend(recover_ask(&trace, qisim::codec::F_ASK));
    }
    if trace.sample_rate() >= 10.0 * 2.0 * f_p {
        messages.extend(recover_fsk(&trace, f_p));
    }
    for m in &messages {
        println!("{}", m.report_line());
    }
    if messages.is_empty() {
        eprintln!("no decodable traffic");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo(args: &[String]) -> Result<ExitCode, String> {
    let pos = positional(args);
    let [name] = pos[..] else {
        return Err(format!(
            "demo expects a scenario name, one of: {}",
            BUILTIN_SCENARIOS.join(" ")
        ));
    };
    let text = builtin_scenario(name).ok_or_else(|| {
        format!("unknown scenario `{name}`; available: {}", BUILTIN_SCENARIOS.join(" "))
    })?;
    let out = flag_value(args, "--out")?.map(PathBuf::from);
    let seed = flag_value(args, "--seed")?
        .map(|s| s.parse::<u64>().map_err(|e| format!("bad --seed: {e}")))
        .transpose()?;
    execute(text, out, seed, &format!("qisim-out/{name}"))
}
