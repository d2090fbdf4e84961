//! The `decree` command line. Machine-readable results go to files (or
//! standard output where noted); a short human summary goes to standard
//! output.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::arch::{compose_pipeline, load_manifest, run_pipeline, RunOptions, TechniqueManifest};
use crate::compare::{difftest, DifftestOptions};
use crate::diff::diff_apps;
use crate::dsl::{format_script, parse_script, run_script, write_run, FileResolver, RunEnv};
use crate::exec::{parse_unit_test, run_unit_test, Outcome};
use crate::model::{canonical_hash, parse_app_model, serialize_app_model, AppModel};
use crate::repo::{serve_blocking, RunMode, Store};
use crate::testgen::{generate_tests, GenConfig};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// A difftest or unit test failed.
    VerdictFailure,
    /// Bad arguments or unreadable, unparsable input.
    Usage,
    Internal,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::VerdictFailure => 1,
            ExitStatus::Usage => 2,
            ExitStatus::Internal => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "decree", version, about = "Develop, compose and differentially test app instrumentation techniques")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an app model.
    Validate { model: PathBuf },
    /// Print the content id of a model and the hash of each callback.
    Hash { model: PathBuf },
    /// Run a technique's pipeline on a model and write its artifacts.
    Pipeline {
        manifest: PathBuf,
        model: PathBuf,
        #[arg(short = 'o', long)]
        out: PathBuf,
        /// Also write the instrumented model as an app model file.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Print the callback diff of two models as JSON.
    Diff { original: PathBuf, instrumented: PathBuf },
    /// Print the generated test suite as JSON.
    Gen {
        original: PathBuf,
        instrumented: PathBuf,
        #[arg(long)]
        bound: Option<u32>,
        #[arg(long)]
        max_paths: Option<usize>,
    },
    /// Differentially test two models and write the report.
    Difftest {
        original: PathBuf,
        instrumented: PathBuf,
        #[command(flatten)]
        env: EnvFlags,
        /// Metrics to keep in the report (comma-separated).
        #[arg(long, value_delimiter = ',')]
        monitor: Option<Vec<String>>,
        /// Apply this technique's OS policy and runtime settings to the instrumented side.
        #[arg(long)]
        technique: Option<PathBuf>,
        /// Test unchanged callbacks as well.
        #[arg(long)]
        force_all: bool,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
    /// Run a technique unit test.
    Unittest { utest: PathBuf, manifest: PathBuf },
    /// Run a test script; outputs go to <workspace>/runs/<run_id>/.
    Script {
        script: PathBuf,
        /// Directory that file sources are relative to (default: the script's directory).
        #[arg(short = 'w', long)]
        workspace: Option<PathBuf>,
        /// Repository that resolves `pool:` sources.
        #[arg(long)]
        repo: Option<PathBuf>,
    },
    /// Print a script in canonical form.
    Fmt { script: PathBuf },
    /// Serve a repository over HTTP.
    Serve {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Answer run submissions at once and run them in order in the background.
        #[arg(long)]
        queued: bool,
    },
}

/// Mirrors the script environment keys.
#[derive(Args, Default)]
struct EnvFlags {
    #[arg(long)]
    net_latency_ms: Option<String>,
    #[arg(long)]
    net_bandwidth_kbps: Option<String>,
    #[arg(long)]
    battery_pct: Option<String>,
    #[arg(long)]
    battery_drain_pct_per_s: Option<String>,
    #[arg(long)]
    cpu_factor: Option<String>,
    #[arg(long)]
    cache_hit_ms: Option<String>,
    #[arg(long)]
    prefetch_battery_min: Option<String>,
    #[arg(long)]
    loop_bound: Option<String>,
    #[arg(long)]
    max_paths: Option<String>,
    #[arg(long)]
    perf_tolerance: Option<String>,
}

impl EnvFlags {
    fn to_env(&self) -> Result<RunEnv, String> {
        let mut env = RunEnv::default();
        let pairs = [
            ("net_latency_ms", &self.net_latency_ms),
            ("net_bandwidth_kbps", &self.net_bandwidth_kbps),
            ("battery_pct", &self.battery_pct),
            ("battery_drain_pct_per_s", &self.battery_drain_pct_per_s),
            ("cpu_factor", &self.cpu_factor),
            ("cache_hit_ms", &self.cache_hit_ms),
            ("prefetch_battery_min", &self.prefetch_battery_min),
            ("loop_bound", &self.loop_bound),
            ("max_paths", &self.max_paths),
            ("perf_tolerance", &self.perf_tolerance),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                env.set(k, v).map_err(|e| format!("--{}: {e}", k.replace('_', "-")))?;
            }
        }
        Ok(env)
    }
}

struct Failure(ExitStatus, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(ExitStatus::Usage, msg.into())
}

fn internal(msg: impl Into<String>) -> Failure {
    Failure(ExitStatus::Internal, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read `{}`: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| internal(format!("cannot write `{}`: {e}", path.display())))
}

fn model(path: &Path) -> Result<AppModel, Failure> {
    parse_app_model(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn manifest(path: &Path) -> Result<TechniqueManifest, Failure> {
    load_manifest(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Success };
        }
    };
    match run(cli.command) {
        Ok(status) => status,
        Err(Failure(status, msg)) => {
            eprintln!("error: {msg}");
            status
        }
    }
}

fn run(command: Command) -> Result<ExitStatus, Failure> {
    match command {
        Command::Validate { model: path } => {
            let m = model(&path)?;
            println!("{}: valid, {} callbacks", path.display(), m.callbacks.len());
        }
        Command::Hash { model: path } => {
            let m = model(&path)?;
            println!("{}", m.content_id());
            for cb in &m.callbacks {
                println!("{} {}", canonical_hash(cb), cb.name);
            }
        }
        Command::Pipeline {
            manifest: mpath,
            model: path,
            out,
            model_out,
        } => {
            let pipeline = compose_pipeline(&manifest(&mpath)?).map_err(|e| usage(e.to_string()))?;
            let artifacts =
                run_pipeline(&pipeline, &model(&path)?, &RunOptions::default()).map_err(|e| internal(e.to_string()))?;
            write(&out, &artifacts.to_json())?;
            if let Some(path) = model_out {
                let m = artifacts
                    .instrumented_model
                    .as_ref()
                    .ok_or_else(|| usage("the pipeline produced no instrumented model"))?;
                write(&path, &serialize_app_model(m))?;
            }
            println!("{} stages: {}", pipeline.stages.len(), pipeline.stage_names().join(" -> "));
        }
        Command::Diff {
            original,
            instrumented,
        } => {
            let d = diff_apps(&model(&original)?, &model(&instrumented)?);
            print!("{}", json(&d));
        }
        Command::Gen {
            original,
            instrumented,
            bound,
            max_paths,
        } => {
            let (a, b) = (model(&original)?, model(&instrumented)?);
            let defaults = GenConfig::default();
            let config = GenConfig {
                loop_bound: bound.unwrap_or(defaults.loop_bound),
                max_paths: max_paths.unwrap_or(defaults.max_paths),
                ..defaults
            };
            if config.max_paths == 0 {
                return Err(usage("--max-paths must be positive"));
            }
            let suite = generate_tests(&a, &b, &diff_apps(&a, &b), &config).map_err(|e| internal(e.to_string()))?;
            print!("{}", suite.to_json());
        }
        Command::Difftest {
            original,
            instrumented,
            env,
            monitor,
            technique,
            force_all,
            out,
        } => {
            let (a, b) = (model(&original)?, model(&instrumented)?);
            let env = env.to_env().map_err(usage)?;
            let (os_policy, instrumented_runtime) = match technique {
                Some(p) => {
                    let pipeline = compose_pipeline(&manifest(&p)?).map_err(|e| usage(e.to_string()))?;
                    // Only the policy and runtime settings matter here; the
                    // instrumented model is given explicitly.
                    let artifacts =
                        run_pipeline(&pipeline, &a, &RunOptions::default()).map_err(|e| internal(e.to_string()))?;
                    (artifacts.os_policy, artifacts.backend_config)
                }
                None => (None, None),
            };
            let options = DifftestOptions {
                profile: env.profile,
                gen: GenConfig {
                    loop_bound: env.loop_bound,
                    max_paths: env.max_paths,
                    input_domain: None,
                    force_all,
                },
                perf_tolerance: env.perf_tolerance,
                monitor,
                os_policy,
                instrumented_runtime,
            };
            let run = difftest(&a, &b, &options).map_err(|e| match e {
                crate::compare::DifftestError::UnknownMetric(_) => usage(e.to_string()),
                e => internal(e.to_string()),
            })?;
            let report = &run.report;
            write(&out, &report.to_json())?;
            let b = &report.body;
            println!(
                "{} tests, {} compared, {} passed, accuracy {}, digest {}",
                b.suite.generated.len(),
                b.compared,
                b.passed,
                b.accuracy.map_or("n/a".to_string(), |a| a.to_string()),
                report.digest
            );
            if !report.all_passed() {
                return Ok(ExitStatus::VerdictFailure);
            }
        }
        Command::Unittest { utest, manifest: mpath } => {
            let doc = parse_unit_test(&read(&utest)?).map_err(|e| usage(e.to_string()))?;
            let base = utest.parent().map(Path::to_path_buf).unwrap_or_default();
            let r = run_unit_test(&manifest(&mpath)?, &doc, &base).map_err(|e| usage(e.to_string()))?;
            match &r.outcome {
                Outcome::Pass => println!("{}: pass ({:.3} ms)", r.id, r.nfp.execution_time_ms),
                Outcome::Fail(why) => {
                    println!("{}: fail: {why}", r.id);
                    return Ok(ExitStatus::VerdictFailure);
                }
            }
        }
        Command::Script {
            script,
            workspace,
            repo,
        } => {
            let parsed = parse_script(&read(&script)?).map_err(|e| usage(format!("{}:{e}", script.display())))?;
            let workspace = workspace
                .or_else(|| script.parent().map(Path::to_path_buf))
                .unwrap_or_default();
            let store = match repo {
                Some(r) => Some(Store::open(r).map_err(|e| internal(e.to_string()))?),
                None => None,
            };
            let resolver = FileResolver {
                workspace: workspace.clone(),
                pools: store.as_ref().map(|s| s as &dyn crate::dsl::Resolver),
            };
            let run = run_script(&parsed, &resolver).map_err(|e| usage(e.to_string()))?;
            let dir = write_run(&run, &workspace).map_err(|e| internal(e.to_string()))?;
            println!("run {} -> {}", run.run_id, dir.display());
            println!("report digest {}", run.report.digest);
            if !run.report.all_passed() {
                return Ok(ExitStatus::VerdictFailure);
            }
        }
        Command::Fmt { script } => {
            let parsed = parse_script(&read(&script)?).map_err(|e| usage(format!("{}:{e}", script.display())))?;
            print!("{}", format_script(&parsed));
        }
        Command::Serve {
            repo,
            port,
            host,
            queued,
        } => {
            let mode = if queued { RunMode::Queued } else { RunMode::Sync };
            serve_blocking(&repo, SocketAddr::new(host, port), mode, |addr| {
                println!("serving {} on http://{addr}", repo.display())
            })
            .map_err(internal)?;
        }
    }
    Ok(ExitStatus::Success)
}
