use std::error::Error as StdError;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use clbattery_core::audit::audit_table;
use clbattery_core::config::{load_config, RunConfig};
use clbattery_core::gaussian::{mean_energy, normal_mode_frequencies, sub_block, thermal_cm};
use clbattery_core::model::{battery_hamiltonian, build_hamiltonian};
use clbattery_core::output::{
    write_audit_csv, write_extrema_csv, write_oracle_csv, write_protocol_csv, write_reports_csv,
    write_sweep_csv, write_trace_csv, CellStatus, RunManifest,
};
use clbattery_core::{mean_force_cm, sweep, BathSample, CycleEngine, Scenario, SweepTable};

type CliResult<T> = Result<T, Box<dyn StdError + Send + Sync>>;

/// Points per duration in `protocols.csv`.
const PROTOCOL_SAMPLES: usize = 201;

#[derive(Parser, Debug)]
#[command(
    name = "clbattery",
    version,
    about = "Dissipative quantum battery cycles"
)]
struct Cli {
    /// TOML configuration; defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print derived model quantities.
    ModelInspect,
    /// Run one cycle.
    Cycle(CycleArgs),
    /// Run the scenario x t_d x theta grid.
    Sweep(GridArgs),
    /// Battery covariance along the charging stroke after a quench.
    ChargeTrace(ChargeArgs),
    /// Continuum mean-force moments of the battery.
    Oracle,
    /// Sweep and check the thermodynamic invariants on every cell.
    Audit(GridArgs),
}

#[derive(Args, Debug)]
struct CycleArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long, allow_negative_numbers = true)]
    td: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    t_charge: Option<f64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Comma-separated scenarios, replacing `scenarios`.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<Scenario>,
    /// Comma-separated durations, replacing `td_grid`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    td: Vec<f64>,
    /// Comma-separated phases, replacing `theta_grid`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    #[arg(long)]
    t_charge: Option<f64>,
}

#[derive(Args, Debug)]
struct ChargeArgs {
    #[arg(long)]
    t_charge: Option<f64>,
}

impl GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if !self.scenario.is_empty() {
            cfg.scenarios = self.scenario.clone();
        }
        if !self.td.is_empty() {
            cfg.td_grid = self.td.clone();
        }
        if !self.theta.is_empty() {
            cfg.theta_grid = self.theta.clone();
        }
        if let Some(t) = self.t_charge {
            cfg.cycle.t_charge = t;
        }
    }
}

/// Collects written files and the manifest for one command.
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Run {
    fn new(command: &str, cfg: &RunConfig, bath: &BathSample) -> CliResult<Self> {
        std::fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            manifest: RunManifest::new(command, cfg, bath),
            started: Instant::now(),
        })
    }

    fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        self.manifest.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn finish(mut self) -> CliResult<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.manifest.write(&self.dir.join("manifest.json"))?;
        Ok(())
    }
}

fn engine(cfg: &RunConfig) -> CliResult<CycleEngine> {
    Ok(CycleEngine::new(
        &cfg.model,
        &cfg.stepper,
        cfg.protocol.exponent,
        &cfg.cycle,
    )?)
}

fn report_failures(table: &SweepTable) -> usize {
    let failed: Vec<_> = table.failures().collect();
    if !failed.is_empty() {
        eprintln!("{} of {} cells failed:", failed.len(), table.cells.len());
        for c in &failed {
            let theta = c.theta.map(|t| format!(" theta={t}")).unwrap_or_default();
            let msg = c.outcome.as_ref().err().map(String::as_str).unwrap_or("");
            eprintln!("  {} t_d={}{theta}: {msg}", c.scenario, c.t_d);
        }
    }
    failed.len()
}

fn model_inspect(cfg: &RunConfig) -> CliResult<ExitCode> {
    let spec = &cfg.model;
    let bath = BathSample::build(spec)?;
    let h = build_hamiltonian(spec, &bath, 1.0);
    let modes = normal_mode_frequencies(&h)?;
    let h_s = battery_hamiltonian(spec);
    let bare = mean_energy(&h_s, &thermal_cm(&h_s, spec.beta)?)?;
    let marginal = mean_energy(&h_s, &sub_block(&thermal_cm(&h, spec.beta)?, &[0])?)?;
    let run = Run::new("model-inspect", cfg, &bath)?;
    let d = &run.manifest.derived;
    println!("omega_R^2            = {:.9}", d.omega_r_sq);
    println!("omega_R^2 continuum  = {:.9}", d.omega_r_sq_continuum);
    println!("tail rescale         = {:.9}", d.tail_rescale);
    println!("recurrence estimate  = {:.4e}", d.recurrence_estimate);
    println!(
        "bath frequencies     = [{:.6e}, {:.6e}]",
        d.lowest_bath_frequency, d.highest_bath_frequency
    );
    println!(
        "normal modes         = [{:.6e}, {:.6e}] ({})",
        modes.first().copied().unwrap_or(0.0),
        modes.last().copied().unwrap_or(0.0),
        modes.len()
    );
    println!("thermal battery energy = {bare:.9} (bare), {marginal:.9} (coupled marginal)");
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn cycle(cfg: &RunConfig) -> CliResult<ExitCode> {
    let engine = engine(cfg)?;
    let report = engine.run(&cfg.cycle)?;
    let mut run = Run::new("cycle", cfg, engine.bath())?;
    write_reports_csv(run.create("cycle.csv")?, std::slice::from_ref(&report))?;
    let eta = report
        .eta
        .map(|e| format!("{e:.9}"))
        .unwrap_or("undefined".into());
    println!(
        "{} t_d={} W_d={:.9} W_c={:.9} ergotropy={:.9} W_diss={:.9} eta={eta}",
        report.scenario, report.t_d, report.w_d, report.w_c, report.ergotropy, report.w_diss
    );
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn run_grid(cfg: &RunConfig, command: &str, audit: bool) -> CliResult<ExitCode> {
    let engine = engine(cfg)?;
    let table = sweep(&engine, &cfg.grid())?;
    let mut run = Run::new(command, cfg, engine.bath())?;
    write_sweep_csv(run.create("sweep.csv")?, &table)?;
    if !table.extrema.is_empty() {
        write_extrema_csv(run.create("bipartite_extrema.csv")?, &table.extrema)?;
    }
    write_protocol_csv(
        run.create("protocols.csv")?,
        &cfg.td_grid,
        cfg.protocol.exponent,
        PROTOCOL_SAMPLES,
    )?;
    run.manifest.cells = table.cells.iter().map(CellStatus::from).collect();
    let mut violated = false;
    if audit {
        let ergotropy0 = engine.disconnect(0.0)?.extraction.ergotropy;
        let checks = audit_table(&table, ergotropy0, cfg.model.beta);
        write_audit_csv(run.create("audit.csv")?, &checks)?;
        for c in &checks {
            println!(
                "{} {:<22} worst={:.3e} threshold={:.1e} violations={}/{}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.threshold,
                c.violations,
                c.cells
            );
        }
        violated = checks.iter().any(|c| !c.passed());
        run.manifest.checks = checks;
    }
    let failed = report_failures(&table);
    println!(
        "{} cells, {} failed, written to {}",
        table.cells.len(),
        failed,
        run.dir.display()
    );
    run.finish()?;
    Ok(if failed > 0 || violated {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn charge_trace(cfg: &RunConfig) -> CliResult<ExitCode> {
    let engine = engine(cfg)?;
    let mf = mean_force_cm(&cfg.model, &cfg.oracle)?;
    let trace = engine.quench_trace(&mf.cm)?;
    let mut run = Run::new("charge-trace", cfg, engine.bath())?;
    write_trace_csv(run.create("trace.csv")?, &trace, &mf)?;
    println!(
        "late-window deviation from the discrete thermal block: q={:.3e} p={:.3e} offdiag={:.3e}",
        trace.discrete.q, trace.discrete.p, trace.discrete.off_diagonal
    );
    println!(
        "late-window deviation from the continuum oracle:      q={:.3e} p={:.3e} offdiag={:.3e}",
        trace.continuum.q, trace.continuum.p, trace.continuum.off_diagonal
    );
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(cfg: &RunConfig) -> CliResult<ExitCode> {
    let mf = mean_force_cm(&cfg.model, &cfg.oracle)?;
    let bath = BathSample::build(&cfg.model)?;
    let mut run = Run::new("oracle", cfg, &bath)?;
    let row = (cfg.model.clone(), cfg.oracle.clone(), mf.clone());
    write_oracle_csv(run.create("oracle.csv")?, &[row])?;
    println!("<Q0^2> = {:.12e} +- {:.1e}", mf.q2, mf.q2_error);
    println!("<P0^2> = {:.12e} +- {:.1e}", mf.p2, mf.p2_error);
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    match &cli.command {
        Command::Cycle(a) => {
            if let Some(s) = a.scenario {
                cfg.cycle.scenario = s;
            }
            if let Some(t) = a.td {
                cfg.cycle.t_d = t;
            }
            if let Some(t) = a.theta {
                cfg.cycle.theta = t;
            }
            if let Some(t) = a.t_charge {
                cfg.cycle.t_charge = t;
            }
        }
        Command::Sweep(a) | Command::Audit(a) => a.apply(&mut cfg),
        Command::ChargeTrace(a) => {
            if let Some(t) = a.t_charge {
                cfg.cycle.t_charge = t;
            }
        }
        Command::ModelInspect | Command::Oracle => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> CliResult<ExitCode> {
    match &cli.command {
        Command::ModelInspect => model_inspect(cfg),
        Command::Cycle(_) => cycle(cfg),
        Command::Sweep(_) => run_grid(cfg, "sweep", false),
        Command::ChargeTrace(_) => charge_trace(cfg),
        Command::Oracle => oracle(cfg),
        Command::Audit(_) => run_grid(cfg, "audit", true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(k) = cli.jobs {
            pool = pool.num_threads(k);
        }
        pool.build()?.install(|| dispatch(&cli, &cfg))
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
