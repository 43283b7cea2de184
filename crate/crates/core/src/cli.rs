//! Command-line front end shared by the `stackelberg` binary and the tests.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmarks;
use crate::equilibrium::{build_strategies, hamiltonian_residual, pde_residual, value};
use crate::error::{Error, Result};
use crate::export::{gains_csv, paths_csv, plot_csv, trajectory_csv, verification_csv, write_atomic};
use crate::model::{GameSpec, Player};
use crate::riccati::{check_solvability, solve_backward, CaseTag, Method, RiccatiTrajectory, MIN_STEPS};
use crate::sim::{simulate, SimConfig};
use crate::spec_file::{read_game, write_game};
use crate::verify::{curvature_check, stackelberg_inequality_test, PerturbationFamily, PerturbationKind, REPORT_HEADER};

pub const DEFAULT_STEPS: usize = 10_000;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_SIM_STEPS: usize = 1_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_RESIDUAL_POINTS: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "stackelberg", version, about = "Feedback Stackelberg equilibria of LQ stochastic differential games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the Riccati system and export kernels and gains.
    Solve,
    /// Monte-Carlo costs under the equilibrium strategies.
    Simulate,
    /// Check both equilibrium inequalities against perturbed strategies.
    Verify,
    /// Evaluate the value-function PDE residuals at random points.
    Residual,
    /// Write and solve the built-in scalar coupled game.
    Example,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Residual => "residual",
            Command::Example => "example",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// JSON game file.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    #[arg(long, global = true, default_value = "case1")]
    pub case: CaseTag,
    /// Riccati integration steps.
    #[arg(long, global = true, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, global = true, default_value = "rk4")]
    pub method: Method,
    /// Monte-Carlo paths.
    #[arg(long, global = true, default_value_t = DEFAULT_PATHS)]
    pub paths: usize,
    /// Euler–Maruyama steps per path.
    #[arg(long, global = true, default_value_t = DEFAULT_SIM_STEPS)]
    pub sim_steps: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Initial state as comma-separated numbers.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Paths written to `paths.csv` by `simulate`.
    #[arg(long, global = true, default_value_t = 0)]
    pub dump_paths: usize,
    /// Sample points used by `residual`.
    #[arg(long, global = true, default_value_t = DEFAULT_RESIDUAL_POINTS)]
    pub points: usize,
}

/// A parsed and checked invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub options: Options,
}

impl RunConfig {
    pub fn new(command: Command, options: Options) -> Result<Self> {
        if options.steps < MIN_STEPS {
            return Err(Error::Config(format!("--steps must be at least {MIN_STEPS}")));
        }
        if let Some(spec) = &options.spec {
            if !spec.is_file() {
                return Err(Error::Config(format!("spec file {} does not exist", spec.display())));
            }
        }
        if command != Command::Example && options.spec.is_none() {
            return Err(Error::Config(format!("`{}` needs --spec", command.name())));
        }
        if !options.out.is_dir() {
            return Err(Error::Config(format!("output directory {} does not exist", options.out.display())));
        }
        Ok(RunConfig { command, options })
    }

    pub fn from_cli(cli: Cli) -> Result<Self> {
        Self::new(cli.command, cli.options)
    }

    /// One line listing every setting, defaults included.
    pub fn header(&self) -> String {
        let o = &self.options;
        format!(
            "stackelberg {} | spec={} case={} steps={} method={} paths={} sim-steps={} seed={} x0={} out={}",
            self.command.name(),
            o.spec.as_ref().map_or("<built-in>".into(), |p| p.display().to_string()),
            o.case,
            o.steps,
            o.method.as_str(),
            o.paths,
            o.sim_steps,
            o.seed,
            o.x0.as_ref().map_or("<default>".into(), |v| {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }),
            o.out.display()
        )
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    /// Human-readable report for standard output.
    pub report: String,
    /// False when `verify` found a violated inequality.
    pub passed: bool,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: Outcome,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.cfg.options.out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        log::info!("wrote {}", path.display());
        self.out.artifacts.push(path);
        Ok(())
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.out.report.push_str(line.as_ref());
        self.out.report.push('\n');
    }
}

fn initial_states(game: &GameSpec, given: Option<&Vec<f64>>, both_signs: bool) -> Result<Vec<DVector<f64>>> {
    let n = game.dims.n;
    if let Some(v) = given {
        if v.len() != n {
            return Err(Error::dims("--x0", (n, 1), (v.len(), 1)));
        }
        return Ok(vec![DVector::from_column_slice(v)]);
    }
    let basis = |i: usize, sign: f64| {
        let mut e = DVector::zeros(n);
        e[i] = sign;
        e
    };
    Ok(if both_signs {
        (0..n).flat_map(|i| [basis(i, 1.0), basis(i, -1.0)]).collect()
    } else {
        vec![basis(0, 1.0)]
    })
}

fn solve_and_export(ctx: &mut Ctx<'_>, game: &GameSpec, tag: CaseTag) -> Result<RiccatiTrajectory> {
    let o = &ctx.cfg.options;
    let traj = solve_backward(game, tag, o.steps, o.method)?;
    let report = check_solvability(&traj, game, tag);
    let (leader, follower) = build_strategies(&traj, game, tag)?;
    ctx.write("trajectory.csv", &trajectory_csv(&traj))?;
    ctx.write("gains.csv", &gains_csv(&leader, &follower)?)?;
    let min = |f: fn(&crate::riccati::Margins) -> f64| traj.margins.iter().map(f).fold(f64::INFINITY, f64::min);
    ctx.say(format!(
        "{tag}: {} nodes, P1(t0) = {:?}, P2(t0) = {:?}",
        traj.grid.len(),
        traj.p1[0].as_slice(),
        traj.p2[0].as_slice()
    ));
    ctx.say(format!(
        "smallest margins: follower {:e}, leader {:e}; largest pre-symmetrization asymmetry {:e}",
        min(|m| m.follower),
        min(|m| m.leader),
        traj.max_asymmetry
    ));
    for (name, ok) in &report.sufficient_conditions {
        ctx.say(format!("sufficient condition {name}: {}", if *ok { "holds" } else { "fails" }));
    }
    Ok(traj)
}

fn run_simulate(ctx: &mut Ctx<'_>, game: &GameSpec, traj: &RiccatiTrajectory) -> Result<()> {
    let o = ctx.cfg.options.clone();
    let (leader, follower) = build_strategies(traj, game, traj.tag)?;
    let x0 = initial_states(game, o.x0.as_ref(), false)?.remove(0);
    let cfg = SimConfig::new(x0.clone(), game.horizon.t0(), o.paths, o.sim_steps, o.seed).with_stored_paths(o.dump_paths, 1);
    let result = simulate(game, &leader, &follower, &cfg)?;
    let mut csv = String::from("player,J_mean,J_stderr,value,gap\n");
    for player in Player::BOTH {
        let v = value(traj, player, cfg.start_time, &x0)?;
        let mean = result.mean(player);
        csv.push_str(&format!(
            "{},{mean:.16e},{:.16e},{v:.16e},{:.16e}\n",
            player.name(),
            result.stderr(player),
            mean - v
        ));
        ctx.say(format!(
            "{}: J = {mean:.6} ± {:.6}, value {v:.6}, gap {:+.6}",
            player.name(),
            result.stderr(player),
            mean - v
        ));
    }
    ctx.write("simulation.csv", &csv)?;
    if let Some(paths) = &result.paths_stored {
        ctx.write("paths.csv", &paths_csv(paths, game.dims.n, game.dims.m1, game.dims.m2))?;
    }
    Ok(())
}

fn run_verify(ctx: &mut Ctx<'_>, game: &GameSpec, traj: &RiccatiTrajectory) -> Result<()> {
    let o = ctx.cfg.options.clone();
    ctx.say(REPORT_HEADER);
    let mut all_pass = true;
    for (k, x0) in initial_states(game, o.x0.as_ref(), true)?.into_iter().enumerate() {
        let cfg = SimConfig::new(x0, game.horizon.t0(), o.paths, o.sim_steps, o.seed);
        let mut cells = Vec::new();
        for target in Player::BOTH {
            for kind in PerturbationKind::ALL {
                let family = PerturbationFamily::standard(game.dims, target, kind);
                let report = stackelberg_inequality_test(game, traj, &family, &cfg)?;
                let fit = curvature_check(&report)?;
                ctx.out.report.push_str(&report.summary());
                ctx.say(format!("  curvature {:.6e}, residual {:.3e}", fit.curvature, fit.residual));
                all_pass &= report.all_pass();
                cells.extend(report.cells);
            }
        }
        ctx.write(&format!("verify_x0_{k}.csv"), &verification_csv(&cells))?;
    }
    ctx.out.passed = all_pass;
    ctx.say(if all_pass { "all inequalities hold" } else { "some inequality FAILED" });
    Ok(())
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn run_residual(ctx: &mut Ctx<'_>, game: &GameSpec, traj: &RiccatiTrajectory) -> Result<()> {
    let o = ctx.cfg.options.clone();
    let n = game.dims.n;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let half_width = 10.0 / (n as f64).sqrt();
    let mut csv = String::from("s");
    for i in 1..=n {
        csv.push_str(&format!(",x_{i}"));
    }
    csv.push_str(",r1,r2,hamiltonian_r1,hamiltonian_r2\n");
    let mut worst = 0.0f64;
    for _ in 0..o.points {
        let s = uniform(&mut rng, game.horizon.t0(), game.horizon.t_end());
        let x = DVector::from_iterator(n, (0..n).map(|_| uniform(&mut rng, -half_width, half_width)));
        let (r1, r2) = pde_residual(traj, game, traj.tag, s, &x)?;
        let (h1, h2) = hamiltonian_residual(traj, game, s, &x)?;
        let scale = 1.0 + x.norm_squared();
        worst = worst.max(r1.abs().max(r2.abs()) / scale);
        csv.push_str(&format!("{s:.16e}"));
        for v in x.iter().chain([r1, r2, h1, h2].iter()) {
            csv.push_str(&format!(",{v:.16e}"));
        }
        csv.push('\n');
    }
    ctx.write("residual.csv", &csv)?;
    ctx.say(format!("largest |r_i| / (1 + |x|²) over {} points: {worst:e}", o.points));
    Ok(())
}

/// Executes one command, writing its artifacts into the output directory.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let mut ctx = Ctx {
        cfg,
        out: Outcome {
            passed: true,
            ..Outcome::default()
        },
    };
    let o = &cfg.options;
    if cfg.command == Command::Example {
        if o.spec.is_some() {
            log::warn!("`example` ignores --spec and uses the built-in game");
        }
        let game = benchmarks::reference_game();
        let tag = CaseTag::Case1General;
        write_game(&o.out.join("spec.json"), &game)?;
        ctx.out.artifacts.push(o.out.join("spec.json"));
        let traj = solve_and_export(&mut ctx, &game, tag)?;
        ctx.write("plot.csv", &plot_csv(&traj))?;
        return Ok(ctx.out);
    }
    let spec: &Path = o.spec.as_deref().expect("checked in RunConfig::new");
    let game = read_game(spec)?;
    let traj = solve_and_export(&mut ctx, &game, o.case)?;
    match cfg.command {
        Command::Solve => {}
        Command::Simulate => run_simulate(&mut ctx, &game, &traj)?,
        Command::Verify => run_verify(&mut ctx, &game, &traj)?,
        Command::Residual => run_residual(&mut ctx, &game, &traj)?,
        Command::Example => unreachable!("handled above"),
    }
    Ok(ctx.out)
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| {
        println!("{}", cfg.header());
        run(&cfg)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
