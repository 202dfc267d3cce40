//! `symlearn` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use symlearn::abstraction::SymbolicModel;
use symlearn::config::ConfigFile;
use symlearn::explore::{run, Termination};
use symlearn::io::{self, Summary};
use symlearn::synthesis::SafetyController;
use symlearn::tsys::box_members;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_MAX_BATCHES: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_ABORTED: u8 = 5;

#[derive(Parser)]
#[command(name = "symlearn", version, about = "Learn symbolic models and safety controllers by safe exploration")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run exploration and synthesis, writing artifacts to --out.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum)]
        lazy: Option<Switch>,
        #[arg(long = "incremental-pre", value_enum)]
        incremental_pre: Option<Switch>,
        #[arg(long = "max-batches")]
        max_batches: Option<usize>,
        /// Record wall-clock timings (off writes zeros for reproducible files).
        #[arg(long, value_enum)]
        timings: Option<Switch>,
    },
    /// Print statistics of a model, controller, batches/summary file, or run directory.
    Inspect { path: PathBuf },
    /// Re-check the stored artifacts of a run directory.
    Verify { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { config, seed, out, threads, lazy, incremental_pre, max_batches, timings } => {
            cmd_run(&config, &out, RunOverrides { seed, threads, lazy, incremental_pre, max_batches, timings })
        }
        Cmd::Inspect { path } => match cmd_inspect(&path) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_CONFIG
            }
        },
        Cmd::Verify { run_dir } => cmd_verify(&run_dir),
    };
    ExitCode::from(code)
}

struct RunOverrides {
    seed: Option<u64>,
    threads: Option<usize>,
    lazy: Option<Switch>,
    incremental_pre: Option<Switch>,
    max_batches: Option<usize>,
    timings: Option<Switch>,
}

fn apply(mut c: ConfigFile, o: &RunOverrides) -> ConfigFile {
    if let Some(s) = o.seed {
        c.seed = s;
    }
    if let Some(l) = o.lazy {
        c.abstraction.update = if l.on() { "lazy" } else { "full" }.into();
    }
    if let Some(p) = o.incremental_pre {
        c.synthesis.predecessor = if p.on() { "incremental" } else { "plain" }.into();
    }
    if let Some(m) = o.max_batches {
        c.exploration.max_batches = m;
    }
    if let Some(t) = o.timings {
        c.exploration.timings = t.on();
    }
    c
}

fn cmd_run(config: &Path, out: &Path, o: RunOverrides) -> u8 {
    let file = match ConfigFile::load(config) {
        Ok(f) => apply(f, &o),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cfg = match file.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = o.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return EXIT_CONFIG;
        }
    }
    let result = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: run aborted: {e}");
            return EXIT_ABORTED;
        }
    };
    for b in &result.batches {
        println!(
            "batch {:>3}  T_N {:>6}  winning {:>8}  transitions {:>10}  recomputed {:>8}",
            b.n, b.t_n, b.winning, b.transitions, b.recomputed
        );
    }
    println!("termination: {}", result.termination.as_str());
    if let Err(e) = io::write_run(out, &result, &file.to_toml(), &cfg.system, cfg.seed) {
        eprintln!("error: writing artifacts: {e}");
        return EXIT_ABORTED;
    }
    println!("artifacts: {}", out.display());
    match result.termination {
        Termination::Converged => EXIT_OK,
        Termination::MaxBatches => EXIT_MAX_BATCHES,
        Termination::Infeasible => EXIT_INFEASIBLE,
    }
}

fn print_model(m: &SymbolicModel) {
    println!("states: {}", m.n_states());
    println!("safe states: {}", m.safe_states.count());
    println!("inputs: {}", m.n_inputs());
    println!("enabled pairs: {}", m.enabled_count());
    println!("transitions: {}", m.transition_count());
    println!("eps: {}", m.eps);
}

fn print_controller(c: &SafetyController) {
    println!("states: {}", c.state_lattice.len());
    println!("inputs: {}", c.input_lattice.len());
    println!("winning: {}", c.winning.count());
    println!("admissible pairs: {}", c.admissible.iter().map(Vec::len).sum::<usize>());
}

fn print_batches(path: &Path) -> Result<()> {
    let batches = io::read_batches(path)?;
    println!("{:>5} {:>8} {:>10} {:>12} {:>12} {:>12}", "N", "T_N", "winning", "transitions", "abstract_ms", "game_ms");
    for b in batches {
        println!(
            "{:>5} {:>8} {:>10} {:>12} {:>12.1} {:>12.1}",
            b.n, b.t_n, b.winning, b.transitions, b.t_abstract_ms, b.t_game_ms
        );
    }
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    if path.is_dir() {
        let s: Summary = serde_json::from_slice(&std::fs::read(path.join("summary.json"))?)?;
        println!("{}", serde_json::to_string_pretty(&s)?);
        return print_batches(&path.join("batches.json"));
    }
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    match bytes.get(..4) {
        Some(m) if m == io::MODEL_MAGIC => print_model(&io::decode_model(&bytes)?),
        Some(m) if m == io::CONTROLLER_MAGIC => print_controller(&io::decode_controller(&bytes)?),
        _ if path.file_name().is_some_and(|n| n == "batches.json") => print_batches(path)?,
        _ if path.extension().is_some_and(|e| e == "json") => {
            let s: Summary = serde_json::from_slice(&bytes)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        _ => bail!("{}: unrecognized artifact format", path.display()),
    }
    Ok(())
}

fn check_safety(dir: &Path) -> Result<()> {
    let cfg = ConfigFile::load(&dir.join("config.toml"))?.resolve()?;
    let (rows, n, m) = io::read_trajectory(std::fs::File::open(dir.join("trajectory.csv"))?)?;
    if n != cfg.plant.state_dim() || m != cfg.plant.input_dim() {
        bail!("trajectory dimensions {n}/{m} do not match the system");
    }
    for (k, r) in rows.iter().enumerate() {
        if !cfg.safe.contains(&r.x) {
            bail!("step {}: state {:?} is outside the safe set", r.t, r.x);
        }
        let next: Vec<f64> = cfg.plant.nominal(&r.x, &r.u).iter().zip(&r.y).map(|(f, y)| f + y).collect();
        if !cfg.safe.contains(&next) {
            bail!("step {}: successor {:?} is outside the safe set", r.t, next);
        }
        if let Some(nr) = rows.get(k + 1) {
            if next.iter().zip(&nr.x).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs())) {
                bail!("step {}: logged successor does not match row {}", r.t, nr.t);
            }
        }
    }
    Ok(())
}

fn check_fixed_point(dir: &Path) -> Result<()> {
    let model = io::decode_model(&std::fs::read(dir.join("model.bin"))?)?;
    let ctrl = io::decode_controller(&std::fs::read(dir.join("controller.bin"))?)?;
    if ctrl.state_lattice != model.state_lattice || ctrl.input_lattice != model.input_lattice {
        bail!("controller and model lattices differ");
    }
    for s in ctrl.winning.iter() {
        if ctrl.admissible[s].is_empty() {
            bail!("winning state {s} has no admissible input");
        }
        for &u in &ctrl.admissible[s] {
            let Some(b) = model.get(s, u as usize) else { bail!("admissible input {u} is disabled at state {s}") };
            if !box_members(&b, &model.state_lattice, &ctrl.winning) {
                bail!("successors of state {s} under input {u} leave the winning set");
            }
        }
    }
    for (s, adm) in ctrl.admissible.iter().enumerate() {
        if !ctrl.winning.contains(s) && !adm.is_empty() {
            bail!("non-winning state {s} lists admissible inputs");
        }
    }
    Ok(())
}

fn check_containment(dir: &Path) -> Result<()> {
    let paths = io::batch_model_paths(dir)?;
    let mut prev: Option<SymbolicModel> = None;
    for p in &paths {
        let cur = io::decode_model(&std::fs::read(p)?)?;
        if let Some(prev) = &prev {
            for s in 0..prev.n_states() {
                for u in prev.enabled_inputs(s) {
                    let a = prev.get(s, u).unwrap();
                    match cur.get(s, u) {
                        Some(b) if b.is_subset_of(&a) => {}
                        _ => bail!("{}: transition ({s}, {u}) is not contained in the previous batch", p.display()),
                    }
                }
            }
        }
        prev = Some(cur);
    }
    Ok(())
}

fn check_monotone(dir: &Path) -> Result<()> {
    let batches = io::read_batches(&dir.join("batches.json"))?;
    for w in batches.windows(2) {
        if w[1].winning < w[0].winning {
            bail!("winning set shrank from {} to {} at batch {}", w[0].winning, w[1].winning, w[1].n);
        }
    }
    let s: Summary = serde_json::from_slice(&std::fs::read(dir.join("summary.json"))?)?;
    if batches.last().map(|b| b.winning) != Some(s.winning) {
        bail!("summary winning count disagrees with the last batch");
    }
    Ok(())
}

type Check = fn(&Path) -> Result<()>;

fn cmd_verify(dir: &Path) -> u8 {
    let checks: [(&str, Check); 4] = [
        ("trajectory-safety", check_safety),
        ("controller-fixed-point", check_fixed_point),
        ("batch-model-containment", check_containment),
        ("winning-monotone", check_monotone),
    ];
    let mut failed = Vec::new();
    for (name, f) in checks {
        match f(dir) {
            Ok(()) => println!("{name}: pass"),
            Err(e) => {
                println!("{name}: FAIL ({e:#})");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        EXIT_VERIFY
    }
}
