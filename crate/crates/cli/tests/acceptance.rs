//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use slowthink_core::Table;

const BIN: &str = env!("CARGO_BIN_EXE_slowthink");

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&Path) -> Result<String, String>,
}

fn slowthink(args: &[&str], out: &Path, threads: Option<usize>) -> Result<(), String> {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--out").arg(out);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    let output = cmd.output().map_err(|e| e.to_string())?;
    match output.status.code() {
        Some(0) => Ok(()),
        code => Err(format!(
            "exit {code:?}: {}",
            String::from_utf8_lossy(&output.stderr).trim()
        )),
    }
}

/// Runs a preset and returns the detail of every check, failing if any failed.
fn preset(name: &str, dir: &Path) -> Result<String, String> {
    let out = dir.join(name);
    let status = slowthink(&["reproduce", name], &out, None);
    let checks = Table::read_csv(out.join("checks.csv")).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    let mut failed = Vec::new();
    for row in &checks.rows {
        let line = format!("{}: {}", row[0], row[2]);
        if row[1] != "true" {
            failed.push(line.clone());
        }
        details.push(line);
    }
    status?;
    if failed.is_empty() {
        Ok(details.join("; "))
    } else {
        Err(failed.join("; "))
    }
}

fn calibration(dir: &Path) -> Result<String, String> {
    let mut notes = Vec::new();
    for (stats, call, res) in [
        ("4.26,4.54,3.11", 19.40, 6.23),
        ("1.67,9.45,4.00", 15.77, 3.94),
        ("4.56,3.99,3.00", 18.24, 6.08),
    ] {
        let out = dir.join(format!("calibrate_{stats}"));
        slowthink(&["calibrate", "--stats", stats], &out, None)?;
        let t = Table::read_csv(out.join("calibrate.csv")).map_err(|e| e.to_string())?;
        let get = |col: &str| -> f64 { t.rows[0][t.column(col).unwrap()].parse().unwrap() };
        for (got, want) in [(get("n_call"), call), (get("n_res"), res)] {
            let rel = ((got - want) / want).abs();
            if rel > 0.01 {
                return Err(format!("{stats}: {got} vs {want}"));
            }
        }
        notes.push(format!("{:.2}/{:.2}", get("n_call"), get("n_res")));
    }
    preset("calibration", dir)?;
    Ok(notes.join(", "))
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.insert(name, std::fs::read(&path).unwrap());
        }
    }
    files
}

fn determinism(dir: &Path) -> Result<String, String> {
    let runs: [&[&str]; 5] = [
        &["reproduce", "dominance", "--trials", "20000", "--seed", "5"],
        &["reproduce", "hsic", "--repetitions", "5", "--shuffles", "200"],
        &["reproduce", "fano", "--instances", "200"],
        &["simulate", "--lambda", "1", "--L", "3", "--strategy", "beam", "--k", "4", "--b", "2", "--trials", "50000"],
        &["simulate", "--L", "3", "--table", "1,1,0.3679", "--selector", "noisy", "--noise-std", "1", "--sweep-n", "1,2,4,8", "--trials", "20000"],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let first = dir.join(format!("det_{i}_a"));
        let _ = slowthink(args, &first, Some(4));
        let replay = slowthink_cli::replay_argv(&first.join("manifest.json"), &dir.join(format!("det_{i}_b")))
            .map_err(|e| e.to_string())?;
        let second = PathBuf::from(replay.last().unwrap());
        let replay_args: Vec<&str> = replay[1..replay.len() - 2].iter().map(String::as_str).collect();
        let _ = slowthink(&replay_args, &second, Some(1));
        let (a, b) = (csv_bytes(&first), csv_bytes(&second));
        if a.is_empty() {
            return Err(format!("{}: no CSV output", args.join(" ")));
        }
        if a != b {
            return Err(format!("{}: CSV outputs differ", args.join(" ")));
        }
        compared += a.len();
    }
    Ok(format!("{compared} CSV files byte-identical across replays with 4 and 1 threads"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "calibration reproduction", budget: Duration::from_secs(1), run: calibration },
        Criterion { id: 2, name: "fano suite", budget: Duration::from_secs(60), run: |d| preset("fano", d) },
        Criterion { id: 3, name: "bound dominance", budget: Duration::from_secs(600), run: |d| preset("dominance", d) },
        Criterion { id: 4, name: "closed-form spot check", budget: Duration::from_secs(60), run: |d| preset("spot-check", d) },
        Criterion { id: 5, name: "n_min scaling", budget: Duration::from_secs(60), run: |d| preset("nmin", d) },
        Criterion { id: 6, name: "bon versus tree search", budget: Duration::from_secs(900), run: |d| preset("fig3", d) },
        Criterion { id: 7, name: "lookahead optimum", budget: Duration::from_secs(60), run: |d| preset("lookahead", d) },
        Criterion { id: 8, name: "hsic pipeline", budget: Duration::from_secs(60), run: |d| preset("hsic", d) },
        Criterion { id: 9, name: "determinism", budget: Duration::from_secs(600), run: determinism },
    ];
    let dir = tempfile::tempdir().expect("temp dir");
    let mut all = true;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)(dir.path());
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, budget {:?}", c.budget)),
            Err(e) => (false, e),
        };
        all &= ok;
        println!(
            "{} criterion {} ({}) [{:.2?}]: {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed,
            detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
