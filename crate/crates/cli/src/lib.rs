//! Configuration-driven runner for the amplify verification suites.

pub mod config;
pub mod report;
pub mod suites;

use std::path::PathBuf;

use config::ExperimentConfig;
use report::SuiteReport;
use suites::{Context, COMMANDS};

/// Exit statuses of a run.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CERTIFICATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const COMPUTATION: i32 = 3;
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: String,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: i32,
    pub reports: Vec<SuiteReport>,
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl RunOutcome {
    fn fail(status: i32, message: String) -> Self {
        RunOutcome { status, reports: Vec::new(), files: Vec::new(), messages: vec![message] }
    }
}

pub fn suites_for(command: &str) -> Option<Vec<&'static str>> {
    if command == "all" {
        return Some(COMMANDS.to_vec());
    }
    COMMANDS.iter().find(|c| **c == command).map(|c| vec![*c])
}

fn load(opts: &RunOptions) -> Result<ExperimentConfig, String> {
    match &opts.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string()),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Run the suites of one command and write the reports; never panics on bad input.
pub fn run(opts: &RunOptions) -> RunOutcome {
    let Some(names) = suites_for(&opts.command) else {
        return RunOutcome::fail(exit::CONFIG, format!("unknown command {}; expected one of {COMMANDS:?} or all", opts.command));
    };
    let config = match load(opts) {
        Ok(c) => c,
        Err(e) => return RunOutcome::fail(exit::CONFIG, e),
    };
    let threads = opts.threads.or(config.run.threads);
    if threads == Some(0) {
        return RunOutcome::fail(exit::CONFIG, "threads must be positive".into());
    }
    let seed = opts.seed.unwrap_or(config.run.seed);
    let out = opts
        .out
        .clone()
        .or_else(|| config.run.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return RunOutcome::fail(exit::COMPUTATION, format!("cannot start worker pool: {e}")),
    };

    let mut echo = config.clone();
    echo.run.threads = None;
    echo.run.out_dir = None;
    let computed: amplify_core::Result<Vec<SuiteReport>> = pool.install(|| {
        let ctx = Context::new(config, seed)?;
        names
            .iter()
            .map(|name| {
                log::info!("running {name}");
                suites::run_suite(&ctx, name)
            })
            .collect()
    });
    let reports = match computed {
        Ok(r) => r,
        Err(e) => return RunOutcome::fail(exit::COMPUTATION, format!("computation failed: {e}")),
    };

    let meta = serde_json::json!({
        "command": opts.command,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": echo,
    });
    let files = match report::emit_report(&reports, &meta, &opts.command, &out) {
        Ok(f) => f,
        Err(e) => return RunOutcome::fail(exit::COMPUTATION, e.to_string()),
    };
    let messages: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().into_iter().map(move |c| format!("FAIL [{}] {}: {}", r.suite, c.name, c.detail)))
        .collect();
    let status = if messages.is_empty() { exit::OK } else { exit::CERTIFICATION };
    RunOutcome { status, reports, files, messages }
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn opts(command: &str, config: Option<&Path>, out: &Path, threads: Option<usize>) -> RunOptions {
        RunOptions {
            command: command.into(),
            config: config.map(Path::to_path_buf),
            out: Some(out.to_path_buf()),
            threads,
            seed: None,
        }
    }

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("run.toml");
        std::fs::write(&p, body).unwrap();
        p
    }

    fn read_all(files: &[PathBuf]) -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn malformed_config_exits_two_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        for body in ["[algebra\na = ", "[run]\nbogus = 1\n", "[analysis]\nrmax = -1.0\n", "[algebra]\na = 2\nD = 2\n"] {
            let cfg = write_config(dir.path(), body);
            let o = run(&opts("stabilizers", Some(&cfg), &out, None));
            assert_eq!(o.status, exit::CONFIG, "{body}: {:?}", o.messages);
            assert!(o.files.is_empty());
            assert!(!out.exists());
        }
        let o = run(&opts("stabilizers", Some(&dir.path().join("missing.toml")), &out, None));
        assert_eq!(o.status, exit::CONFIG);
        let o = run(&opts("nonsense", None, &out, None));
        assert_eq!(o.status, exit::CONFIG);
        assert!(!out.exists());
    }

    #[test]
    fn reports_are_byte_identical_across_runs_and_threads() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "[run]\nstab_n_max = 200\nm_grid = [1e3, 1e6]\n");
        for command in ["stabilizers", "resonate"] {
            let a = run(&opts(command, Some(&cfg), &dir.path().join("a"), Some(1)));
            let b = run(&opts(command, Some(&cfg), &dir.path().join("b"), Some(1)));
            let c = run(&opts(command, Some(&cfg), &dir.path().join("c"), Some(3)));
            assert_eq!(a.status, exit::OK, "{:?}", a.messages);
            let (fa, fb, fc) = (read_all(&a.files), read_all(&b.files), read_all(&c.files));
            assert!(fa.len() >= 2);
            assert_eq!(fa, fb);
            assert_eq!(fa, fc);
        }
    }

    #[test]
    fn json_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&RunOptions {
            command: "resonate".into(),
            config: None,
            out: Some(dir.path().to_path_buf()),
            threads: None,
            seed: Some(7),
        });
        assert_eq!(o.status, exit::OK, "{:?}", o.messages);
        let json = o.files.iter().find(|f| f.extension().is_some_and(|e| e == "json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(v["meta"]["seed"], 7);
        assert_eq!(v["meta"]["command"], "resonate");
        let echoed: config::ExperimentConfig = serde_json::from_value(v["meta"]["config"].clone()).unwrap();
        assert_eq!(echoed, config::ExperimentConfig::default());
        let suites: Vec<SuiteReport> = serde_json::from_value(v["suites"].clone()).unwrap();
        assert_eq!(suites, o.reports);
        let t = suites[0].table("resonator").unwrap();
        assert!(t.header.iter().any(|h| h == "predictor"));
        let csv = std::fs::read_to_string(dir.path().join("resonate_resonator.csv")).unwrap();
        assert_eq!(csv, t.to_csv());
    }
}
