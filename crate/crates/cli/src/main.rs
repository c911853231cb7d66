use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use metawkb_core::classical::{ehrenfest_time, flow, hyperbolic_splitting, DEFAULT_DT_MAX};
use metawkb_core::experiment::{
    builtin_spec, builtin_specs, initial_state, run_experiment, write_outputs, ExperimentSpec,
    KickSide, ModelSpec, PhaseSpec, SampleTime,
};
use metawkb_core::metaplectic::{propagate_thawed_gaussian, ExtendedWkb, Profile, WkbOptions};
use metawkb_core::models::HamiltonianModel;
use metawkb_core::phase_space::{write_wavefunction_csv, GridSpec, PhasePoint, WaveFunction};
use metawkb_core::quantum::{apply_kick, exact_propagate};

#[derive(Parser)]
#[command(name = "metawkb", version, about = "Semiclassical wave-packet propagation experiments")]
struct Cli {
    /// Directory for output files; overrides the spec's `output` key.
    #[arg(long, global = true, env = "METAWKB_OUTPUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a state semiclassically.
    Propagate {
        #[arg(long, value_enum, default_value = "extwkb")]
        method: PropagationMethod,
        #[command(flatten)]
        setup: Setup,
    },
    /// Propagate a state on the grid.
    Exact {
        #[command(flatten)]
        setup: Setup,
    },
    /// Evolve the initial Lagrangian line classically.
    Manifold {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long)]
        t: f64,
        /// Seeds are placed on `[q0 - half_width, q0 + half_width]`.
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        #[arg(long, default_value_t = 401)]
        seeds: usize,
    },
    /// Lyapunov exponent and Ehrenfest time of the kicked oscillator at the origin.
    Lyapunov {
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 0.0008)]
        hbar: f64,
    },
    /// Run builtin experiments by name or spec files by path.
    Run {
        /// Spec names or TOML paths.
        specs: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// List the builtin experiment specs.
    ListSpecs {
        /// Print the TOML of one spec.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PropagationMethod {
    Extwkb,
    Thawed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Free,
    Integrable,
    Barrier,
    Potential,
    Kho,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.0)]
    g: f64,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        match self.model {
            ModelName::Free => ModelSpec::Free,
            ModelName::Integrable => ModelSpec::Integrable { eps: self.eps },
            ModelName::Barrier => ModelSpec::Barrier { v0: self.v0 },
            ModelName::Potential => ModelSpec::Potential { c: self.c, g: self.g },
            ModelName::Kho => ModelSpec::Kho { k: self.k },
        }
    }
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    p0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    q0: f64,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "theta")]
    alpha: Option<f64>,
    /// Slope angle in units of pi/2.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
}

impl PhaseArgs {
    fn spec(&self) -> PhaseSpec {
        PhaseSpec {
            p0: self.p0,
            q0: self.q0,
            alpha: self.alpha,
            theta: self.theta,
        }
    }
}

#[derive(Args)]
struct Setup {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    phase: PhaseArgs,
    #[arg(long)]
    hbar: f64,
    /// Time, with `-` or `+` to pick a side of a kick.
    #[arg(long)]
    t: String,
    #[arg(long, default_value_t = -8.0, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, default_value_t = 8192)]
    n_points: usize,
}

impl Setup {
    fn resolve(&self) -> Result<(HamiltonianModel, metawkb_core::models::QuadraticPhase, SampleTime, GridSpec)> {
        let model = self.model.spec().build()?;
        let phase = self.phase.spec().build()?;
        let t: SampleTime = self.t.parse()?;
        if t.side != KickSide::Plain && !model.is_kicked() {
            bail!("kick sides need the kicked model");
        }
        Ok((model, phase, t, GridSpec::new(self.x_min, self.x_max, self.n_points)?))
    }
}

fn output_dir(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("out").join(default))
}

fn write_state(dir: &Path, psi: &WaveFunction, meta: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_wavefunction_csv(psi, File::create(dir.join("psi.csv"))?)?;
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(meta)? + "\n")?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn kicked(model: &HamiltonianModel, psi: WaveFunction, t: SampleTime) -> WaveFunction {
    if t.side == KickSide::After {
        apply_kick(model, &psi)
    } else {
        psi
    }
}

fn propagate(out: &Option<PathBuf>, method: PropagationMethod, setup: &Setup) -> Result<()> {
    let (model, phase, t, grid) = setup.resolve()?;
    let (psi, meta) = match method {
        PropagationMethod::Extwkb => {
            let wkb = ExtendedWkb::prepare(&model, phase, &Profile::ground(), setup.hbar, grid, &[t.t], WkbOptions::default())?;
            let st = wkb.state(t.t)?;
            (st.psi, serde_json::to_value(&st.meta)?)
        }
        PropagationMethod::Thawed => {
            let b0 = metawkb_core::Complex64::new(phase.alpha, 1.0);
            let th = propagate_thawed_gaussian(&model, phase.center(), b0, setup.hbar, t.t, grid)?;
            let meta = serde_json::json!({
                "t": t.t,
                "center": { "p": th.center.p, "q": th.center.q },
                "b_t": [th.b_t.re, th.b_t.im],
                "action": th.action,
                "ehrenfest_indicator": th.indicator,
                "branch_log": th.branch_log,
            });
            (th.psi, meta)
        }
    };
    let psi = kicked(&model, psi, t);
    let mut meta = meta;
    meta["time"] = serde_json::Value::String(t.to_string());
    meta["norm"] = serde_json::json!(psi.norm());
    write_state(&output_dir(out, "propagate"), &psi, &meta)
}

fn exact(out: &Option<PathBuf>, setup: &Setup) -> Result<()> {
    let (model, phase, t, grid) = setup.resolve()?;
    let psi0 = initial_state(&Profile::ground(), phase, setup.hbar, grid)?;
    let psi = kicked(&model, exact_propagate(&model, &psi0, t.t)?, t);
    let boundary = psi.boundary_mass(0.02);
    let meta = serde_json::json!({
        "t": t.t,
        "time": t.to_string(),
        "norm": psi.norm(),
        "boundary_mass": boundary,
        "mean_q": psi.mean_position(),
        "mean_p": psi.mean_momentum(),
    });
    write_state(&output_dir(out, "exact"), &psi, &meta)?;
    if boundary > 1e-12 {
        bail!("state reached the grid boundary (mass {boundary:e}); widen the grid");
    }
    Ok(())
}

fn manifold(out: &Option<PathBuf>, model: &ModelArgs, phase: &PhaseArgs, t: f64, half_width: f64, seeds: usize) -> Result<()> {
    let model = model.spec().build()?;
    let phase = phase.spec().build()?;
    if seeds < 2 {
        bail!("need at least two seeds");
    }
    let dir = output_dir(out, "manifold");
    fs::create_dir_all(&dir)?;
    let mut w = io::BufWriter::new(File::create(dir.join("manifold.csv"))?);
    writeln!(w, "x,q,p,action,dphi")?;
    for i in 0..seeds {
        let x = phase.q0 - half_width + 2.0 * half_width * i as f64 / (seeds - 1) as f64;
        let f = flow(&model, phase.point(x), t, DEFAULT_DT_MAX)?;
        let dphi = f.tangent.qp() * phase.alpha + f.tangent.qq();
        writeln!(w, "{x},{},{},{},{dphi}", f.end_point.q, f.end_point.p, f.action)?;
    }
    w.flush()?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn lyapunov(k: f64, hbar: f64) -> Result<()> {
    let model = HamiltonianModel::kicked_harmonic(k)?;
    let s = hyperbolic_splitting(&model, PhasePoint::new(0.0, 0.0), 1.0)?;
    let report = serde_json::json!({
        "k": k,
        "hbar": hbar,
        "trace": s.period_map.trace(),
        "multiplier": s.multiplier,
        "lyapunov": s.lyapunov,
        "ehrenfest_time": ehrenfest_time(s.lyapunov, hbar),
        "unstable_slope": s.unstable.slope(),
        "stable_slope": s.stable.slope(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn load_spec(name: &str) -> Result<ExperimentSpec> {
    if let Some(spec) = builtin_spec(name) {
        return Ok(spec);
    }
    let text = fs::read_to_string(name).with_context(|| format!("`{name}` is neither a builtin spec nor a readable file"))?;
    Ok(ExperimentSpec::from_toml(&text)?)
}

/// Returns whether every check passed.
fn run(out: &Option<PathBuf>, names: &[String], all: bool) -> Result<bool> {
    let specs: Vec<ExperimentSpec> = if all {
        builtin_specs()
    } else if names.is_empty() {
        bail!("name at least one spec, or pass --all");
    } else {
        names.iter().map(|n| load_spec(n)).collect::<Result<_>>()?
    };
    let mut ok = true;
    for spec in &specs {
        let report = run_experiment(spec).with_context(|| format!("experiment `{}`", spec.name))?;
        let dir = match (out, &spec.output) {
            (Some(o), _) if specs.len() > 1 => o.join(&spec.name),
            (Some(o), _) => o.clone(),
            (None, Some(p)) => p.clone(),
            (None, None) => PathBuf::from("out").join(&spec.name),
        };
        write_outputs(&report, &dir)?;
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        println!(
            "{}: {} ({} checks, {} failed) -> {}",
            spec.name,
            if report.passed { "PASS" } else { "FAIL" },
            report.checks.len(),
            failed.len(),
            dir.display()
        );
        for c in failed {
            println!("  failed: {} = {} (bound {})", c.name, c.value, c.bound);
        }
        ok &= report.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate { method, setup } => propagate(&cli.out, *method, setup).map(|_| true),
        Command::Exact { setup } => exact(&cli.out, setup).map(|_| true),
        Command::Manifold {
            model,
            phase,
            t,
            half_width,
            seeds,
        } => manifold(&cli.out, model, phase, *t, *half_width, *seeds).map(|_| true),
        Command::Lyapunov { k, hbar } => lyapunov(*k, *hbar).map(|_| true),
        Command::Run { specs, all } => run(&cli.out, specs, *all),
        Command::ListSpecs { show } => list_specs(show.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn list_specs(show: Option<&str>) -> Result<()> {
    match show {
        Some(name) => {
            let spec = builtin_spec(name).with_context(|| format!("no builtin spec `{name}`"))?;
            print!("{}", spec.to_toml()?);
        }
        None => {
            for s in builtin_specs() {
                println!("{}", s.name);
            }
        }
    }
    Ok(())
}
