use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gibbs_core::forward::{build_ell_box, EllBoxOptions};
use gibbs_core::harness::{run_experiment, suite_configs, Experiment, ExperimentConfig, TestReport};
use gibbs_core::io;
use gibbs_core::kinetic::{kinetic_residual, solve_kinetic, system_residual, Scheme};
use gibbs_core::sampler::{replica_rng, sample_boundary, simulate, SimOptions};
use gibbs_core::tessellation::{build_tessellation, hopf_evolve, render_svg, SvgStyle, Window};
use gibbs_core::{Error, Result};

#[derive(Parser)]
#[command(name = "gibbs-tess", version, about = "Kinetic solvers, particle sampler and tessellation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Polygonal,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Planar,
    System,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the kinetic equation from the first slice of a kernel.
    KineticSolve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "polygonal")]
        scheme: SchemeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the max-norm residual; exit 0 iff it is below the tolerance.
    KineticResidual {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "planar")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Build the one-point marginal on a box from its lower-left value.
    ForwardSolve {
        #[arg(long)]
        kernel: PathBuf,
        /// JSON array with one density per atom.
        #[arg(long)]
        ell0: PathBuf,
        /// a⁻ a⁺ t₀ t₁
        #[arg(long = "box", num_args = 4, allow_negative_numbers = true)]
        box_: Vec<f64>,
        #[arg(long)]
        max_step: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate replicas and write one event log per replica.
    Sample {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        ell: PathBuf,
        /// a⁻ a⁺ t₀ t₁
        #[arg(long = "box", num_args = 4, allow_negative_numbers = true)]
        box_: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn an event log into a tessellation document.
    Tessellate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a tessellation document as SVG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        legend: bool,
    },
    /// Evolve a height function under a Hamiltonian.
    HjEvolve {
        #[arg(long)]
        g: PathBuf,
        #[arg(long = "H")]
        h: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment; exit 0 iff it passes.
    Test {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every experiment; exit 0 iff all pass.
    All {
        /// Object with an optional shared "seed" and per-run overrides keyed by run name.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for one report per experiment.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn four(v: &[f64]) -> Result<[f64; 4]> {
    v.try_into().map_err(|_| Error::Config("--box takes four numbers".into()))
}

fn summarize(r: &TestReport) {
    let gating = r.tests.iter().filter(|t| !t.informational).count();
    let failed: Vec<_> = r.failures().collect();
    println!(
        "{:<12} {}  {} of {} checks passed  {:.2}s",
        r.experiment,
        if r.pass { "PASS" } else { "FAIL" },
        gating - failed.len(),
        gating,
        r.runtime_s
    );
    for t in failed {
        println!("    {} {} = {:.4e} (threshold {:.4e})", t.name, t.kind, t.statistic, t.threshold);
    }
}

fn experiment_config(name: &str, base: serde_json::Value) -> Result<ExperimentConfig> {
    let experiment: Experiment = serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| Error::Config(format!("unknown experiment {name:?}")))?;
    let mut doc = match base {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Null => serde_json::Map::new(),
        _ => return Err(Error::Config("configuration must be a JSON object".into())),
    };
    doc.insert("experiment".into(), serde_json::to_value(experiment)?);
    ExperimentConfig::from_json(&serde_json::Value::Object(doc).to_string())
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::KineticSolve { input, t, steps, scheme, out } => {
            let h = io::kernel_from_json(&read(&input)?)?;
            let scheme = match scheme {
                SchemeArg::Polygonal => Scheme::Polygonal,
                SchemeArg::Rk4 => Scheme::HomogeneousRk4,
            };
            let f = solve_kinetic(&h, t, steps, scheme)?;
            write(&out, &io::kernel_to_json(&f)?)?;
            Ok(true)
        }
        Command::KineticResidual { input, mode, tol } => {
            let text = read(&input)?;
            let r = match mode {
                ModeArg::Planar => kinetic_residual(&io::kernel_from_json(&text)?)?,
                ModeArg::System => system_residual(&io::system_from_json(&text)?)?,
            };
            println!("{r:.6e}");
            Ok(r < tol)
        }
        Command::ForwardSolve { kernel, ell0, box_, max_step, out } => {
            let f = io::kernel_from_json(&read(&kernel)?)?;
            let ell0: Vec<f64> = serde_json::from_str(&read(&ell0)?)?;
            let opts = EllBoxOptions { max_step, ..EllBoxOptions::default() };
            let ell = build_ell_box(&f, &ell0, four(&box_)?, opts)?;
            write(&out, &io::marginal_to_json(&ell)?)?;
            Ok(true)
        }
        Command::Sample { kernel, ell, box_, replicas, seed, out } => {
            let f = io::kernel_from_json(&read(&kernel)?)?;
            let ell = io::marginal_from_json(&read(&ell)?)?;
            let [a, b, t0, t1] = four(&box_)?;
            let mut corner = vec![0.0; ell.marks().len()];
            ell.eval_all(a, t0, &mut corner)?;
            fs::create_dir_all(&out)?;
            for r in 0..replicas {
                let mut rng = replica_rng(seed, r);
                let q0 = sample_boundary(&f, &corner, t0, [a, b], &mut rng)?;
                let traj = simulate(&q0, &f, &ell, [a, b], [t0, t1], &mut rng, SimOptions::default())?;
                write(&out.join(format!("replica-{r:06}.jsonl")), &io::trajectory_to_jsonl(&traj)?)?;
            }
            Ok(true)
        }
        Command::Tessellate { input, out } => {
            let traj = io::trajectory_from_jsonl(&read(&input)?)?;
            let t = build_tessellation(&traj, &Window::of(&traj)?)?;
            write(&out, &io::tessellation_to_json(&t)?)?;
            Ok(true)
        }
        Command::Render { input, out, legend } => {
            let t = io::tessellation_from_json(&read(&input)?)?;
            write(&out, &render_svg(&t, &SvgStyle { legend, ..SvgStyle::default() }))?;
            Ok(true)
        }
        Command::HjEvolve { g, h, t, out } => {
            let g = io::plc_from_json(&read(&g)?)?;
            let h = io::hamiltonian_from_json(&read(&h)?)?;
            write(&out, &io::plc_to_json(&hopf_evolve(&g, &h, t)?)?)?;
            Ok(true)
        }
        Command::Test { experiment, config, out } => {
            let base = match config {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => serde_json::Value::Null,
            };
            let cfg = experiment_config(&experiment, base)?;
            let report = run_experiment(&cfg)?;
            summarize(&report);
            if let Some(p) = out.or(cfg.out.map(PathBuf::from)) {
                write(&p, &serde_json::to_string_pretty(&report)?)?;
            }
            Ok(report.pass)
        }
        Command::All { config, out } => {
            let doc: serde_json::Value = match config {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => serde_json::Value::Null,
            };
            let mut all = true;
            for (name, cfg) in suite_configs(&doc)? {
                let mut report = run_experiment(&cfg)?;
                report.experiment = name.into();
                summarize(&report);
                if let Some(dir) = &out {
                    write(&dir.join(format!("{name}.json")), &serde_json::to_string_pretty(&report)?)?;
                }
                all &= report.pass;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
