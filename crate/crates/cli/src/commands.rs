use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use edm::edm::{
    direct_interpolate, edm_basis, interpolate_mode, select_rank, EdmBasis, ModeSide, RankSpec,
};
use edm::interp::Scheme;
use edm::modal::{align, bump_database, pair_modes, sample_spectrum, ModeDatabase, ModeSelection};
use edm::numerics::C64;
use edm::rom::{
    benchmark_strategies, build_rom_at_sample, build_rom_interpolated, characteristic_horizon,
    simulate_full, simulate_rom, solution_interpolation, time_grid, trajectory_error,
    BenchmarkConfig, EdmModel, Schemes, Strategy, DEFAULT_REPETITIONS, DEFAULT_TIME_STEPS,
};
use edm::systems::{equilibrium, HeatRod, SpringChain, SystemSpec};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Grid;
use crate::report::{self, Csv};
use crate::store::{load_database, load_edm, save_database, save_edm, StoredDatabase};

/// Environment variable naming the directory that receives outputs when
/// `--out` is omitted.
pub const OUT_DIR_ENV: &str = "EDM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "edm",
    version,
    about = "Eigen-deformation modes and parameterized modal ROMs"
)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a database from a built-in generator (sampled, paired, aligned).
    Generate(GenerateArgs),
    /// Sample the leading eigenpairs of a system described in JSON.
    Modes(ModesArgs),
    /// Track modes across samples by maximum MAC.
    Pair(InPlaceArgs),
    /// Make signs (real) or phases (complex) consistent across samples.
    Align(InPlaceArgs),
    /// Extract the EDM basis of one mode.
    Edm(EdmArgs),
    /// Interpolate one mode at a new parameter.
    Interp(InterpArgs),
    /// Simulate a reduced-order model.
    Rom(RomArgs),
    /// CSV reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Convert a directory of CSV mode tables into a database.
    #[cfg(feature = "ingest")]
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    HeatRod,
    SpringChain,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    LeadingRealPart,
    LowestFrequency,
}

impl From<SelectionArg> for ModeSelection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::LeadingRealPart => ModeSelection::LeadingRealPart,
            SelectionArg::LowestFrequency => ModeSelection::LowestFrequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Linear,
    CubicSpline,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Linear => Scheme::Linear,
            SchemeArg::CubicSpline => Scheme::CubicSpline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    SolutionInterpolation,
    Direct,
    Edm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::SolutionInterpolation => Strategy::SolutionInterpolation,
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::Edm => Strategy::Edm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Right,
    Left,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub system: Generator,
    /// Nodes (heat rod), masses (spring chain) or grid points (bump).
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampled parameters as start:stop:count.
    #[arg(long)]
    pub mu_grid: Grid,
    /// Modes kept per sample.
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    /// Stop after sampling (no pairing or alignment).
    #[arg(long)]
    pub raw: bool,
    /// Randomly permute modes and flip their signs or phases after sampling.
    #[arg(long)]
    pub scramble: bool,
    #[arg(long)]
    pub h_left: Option<f64>,
    #[arg(long)]
    pub ambient: Option<f64>,
    #[arg(long)]
    pub generation: Option<f64>,
    #[arg(long)]
    pub k_defect: Option<f64>,
    /// Bump width of the first mode; mode i uses width * (1 + i / 2).
    #[arg(long, default_value_t = 0.05)]
    pub width: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    /// JSON system description, e.g. {"kind": "heat-rod", "nodes": 50, ..., "domain": [0, 28]}.
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub mu_grid: Grid,
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    #[arg(long)]
    pub scramble: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InPlaceArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Defaults to rewriting the input database.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EdmArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// One-based mode index.
    #[arg(long)]
    pub mode: usize,
    /// Energy threshold for rank selection (default 0.999).
    #[arg(long, conflicts_with_all = ["rank", "full"])]
    pub energy: Option<f64>,
    #[arg(long, conflicts_with = "full")]
    pub rank: Option<usize>,
    #[arg(long)]
    pub full: bool,
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    pub side: SideArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterpArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub mode: usize,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Direct)]
    pub strategy: StrategyArg,
    /// EDM basis directory (required for --strategy edm).
    #[arg(long)]
    pub edm: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Linear)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RomArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub mu: f64,
    /// Retained modes (default: all stored).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Edm)]
    pub strategy: StrategyArg,
    /// Energy threshold for the EDM bases.
    #[arg(long, default_value_t = edm::edm::DEFAULT_ENERGY_THRESHOLD)]
    pub energy: f64,
    /// Initial state is the equilibrium at this parameter.
    #[arg(long)]
    pub x0_mu: f64,
    /// Time horizon (default: 5 characteristic times of the slowest mode).
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TIME_STEPS)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Linear)]
    pub scheme: SchemeArg,
    /// Also solve the full-order model and report the error.
    #[arg(long)]
    pub reference: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Interpolation error against the true eigenmode over a parameter grid.
    ErrorSweep(ErrorSweepArgs),
    /// Error and timing of the three ROM strategies.
    Benchmark(BenchmarkArgs),
    /// Singular values and energy fractions of every stored mode.
    Energy(EnergyArgs),
}

#[derive(Debug, Args)]
pub struct ErrorSweepArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// EDM basis whose rank is added to the sweep; also fixes the mode.
    #[arg(long)]
    pub edm: Option<PathBuf>,
    /// One-based mode index (taken from --edm when omitted).
    #[arg(long)]
    pub mode: Option<usize>,
    /// Number of validation points spanning the sampled interval.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    /// Comma-separated EDM ranks; "full" means the largest available.
    #[arg(long, default_value = "0,1,2,4,full")]
    pub ranks: String,
    #[arg(long, value_enum, default_value_t = SchemeArg::Linear)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = edm::edm::DEFAULT_ENERGY_THRESHOLD)]
    pub energy: f64,
    /// Validation parameters as start:stop:count (default: 50 points over the samples).
    #[arg(long)]
    pub validation: Option<Grid>,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    pub reps: usize,
    #[arg(long)]
    pub x0_mu: f64,
    #[arg(long, default_value_t = DEFAULT_TIME_STEPS)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Linear)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(feature = "ingest")]
#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of CSV tables (see the guide for the layout).
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn output_path(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) => Path::new(&dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => generate(a, seed),
        Command::Modes(a) => modes(a, seed),
        Command::Pair(a) => rewrite(a, "pair", pair_modes),
        Command::Align(a) => rewrite(a, "align", align),
        Command::Edm(a) => extract_edm(a),
        Command::Interp(a) => interp(a),
        Command::Rom(a) => rom(a),
        Command::Report(ReportCommand::ErrorSweep(a)) => error_sweep(a),
        Command::Report(ReportCommand::Benchmark(a)) => benchmark(a),
        Command::Report(ReportCommand::Energy(a)) => energy(a),
        #[cfg(feature = "ingest")]
        Command::Ingest(a) => ingest(a),
    }
}

/// Random within-sample permutation plus a random sign (real data) or phase
/// (complex data) on every mode.
pub fn scramble(db: &mut ModeDatabase, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complex = db.is_complex();
    for s in &mut db.samples {
        let m = s.m();
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        s.eigenvalues = perm.iter().map(|&j| s.eigenvalues[j]).collect();
        s.right = s.right.select_columns(&perm);
        s.left = s.left.as_ref().map(|l| l.select_columns(&perm));
        for i in 0..m {
            let factor = if complex {
                C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
            } else if rng.random_bool(0.5) {
                C64::new(-1.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            };
            s.right.column_mut(i).apply(|z| *z *= factor);
            if let Some(l) = &mut s.left {
                l.column_mut(i).apply(|z| *z *= factor);
            }
        }
    }
    db.paired = false;
    db.aligned = false;
}

fn default_selection(spec: &SystemSpec) -> ModeSelection {
    match spec {
        SystemSpec::HeatRod { .. } => ModeSelection::LeadingRealPart,
        SystemSpec::SpringChain { .. } => ModeSelection::LowestFrequency,
    }
}

fn generate(a: GenerateArgs, seed: u64) -> Result<()> {
    let mus = a.mu_grid.points();
    let out = output_path(&a.out, "db");
    let (mut db, spec) = match a.system {
        Generator::Bump => {
            let n = a.n.unwrap_or(200);
            let widths: Vec<f64> = (0..a.m).map(|i| a.width * (1.0 + 0.5 * i as f64)).collect();
            (bump_database(n, &widths, &mus)?, None)
        }
        Generator::HeatRod | Generator::SpringChain => {
            let spec = match a.system {
                Generator::HeatRod => {
                    let d = HeatRod::default();
                    SystemSpec::HeatRod {
                        rod: HeatRod {
                            nodes: a.n.unwrap_or(d.nodes),
                            h_left: a.h_left.unwrap_or(d.h_left),
                            ambient: a.ambient.unwrap_or(d.ambient),
                            generation: a.generation.unwrap_or(d.generation),
                            ..d
                        },
                        domain: (a.mu_grid.start, a.mu_grid.stop),
                    }
                }
                _ => {
                    let d = SpringChain::default();
                    SystemSpec::SpringChain {
                        chain: SpringChain {
                            masses: a.n.unwrap_or(d.masses),
                            k_defect: a.k_defect.unwrap_or(d.k_defect),
                            ..d
                        },
                    }
                }
            };
            let sys = spec.build()?;
            let selection = a
                .selection
                .map(Into::into)
                .unwrap_or_else(|| default_selection(&spec));
            (sample_spectrum(&sys, &mus, a.m, selection)?, Some(spec))
        }
    };
    if a.scramble {
        scramble(&mut db, seed);
    }
    if !a.raw {
        db = align(pair_modes(db)?)?;
    }
    report_warnings(&db);
    save_database(&db, spec.as_ref(), &out)?;
    println!(
        "wrote {} (n = {}, p = {}, m = {})",
        out.display(),
        db.n(),
        db.p(),
        db.m()
    );
    Ok(())
}

fn modes(a: ModesArgs, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(&a.system)
        .with_context(|| format!("reading {}", a.system.display()))?;
    let spec: SystemSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.system.display()))?;
    let sys = spec.build()?;
    let selection = a
        .selection
        .map(Into::into)
        .unwrap_or_else(|| default_selection(&spec));
    let mut db = sample_spectrum(&sys, &a.mu_grid.points(), a.m, selection)?;
    if a.scramble {
        scramble(&mut db, seed);
    }
    let out = output_path(&a.out, "db");
    save_database(&db, Some(&spec), &out)?;
    println!(
        "wrote {} (n = {}, p = {}, m = {})",
        out.display(),
        db.n(),
        db.p(),
        db.m()
    );
    Ok(())
}

fn report_warnings(db: &ModeDatabase) {
    for w in &db.warnings {
        warn!("{w}");
    }
    for c in &db.crossings {
        info!(
            "eigenvalue crossing between mu = {} and mu = {}: ranks {:?} -> {:?}",
            c.mu_from, c.mu_to, c.rank_before, c.rank_after
        );
    }
}

fn rewrite(
    a: InPlaceArgs,
    what: &str,
    f: fn(ModeDatabase) -> edm::Result<ModeDatabase>,
) -> Result<()> {
    let StoredDatabase { db, system } = load_database(&a.db)?;
    let db = f(db).with_context(|| format!("{what} failed"))?;
    report_warnings(&db);
    let out = a.out.unwrap_or(a.db);
    save_database(&db, system.as_ref(), &out)?;
    println!(
        "wrote {} ({} crossings, {} warnings)",
        out.display(),
        db.crossings.len(),
        db.warnings.len()
    );
    Ok(())
}

fn mode_index(db: &ModeDatabase, one_based: usize) -> Result<usize> {
    ensure!(
        one_based >= 1 && one_based <= db.m(),
        "--mode must lie in 1..={} (got {one_based})",
        db.m()
    );
    Ok(one_based - 1)
}

fn extract_edm(a: EdmArgs) -> Result<()> {
    let db = load_database(&a.db)?.db;
    let i = mode_index(&db, a.mode)?;
    let (rank, threshold) = match (a.energy, a.rank, a.full) {
        (_, Some(r), _) => (RankSpec::Fixed(r), None),
        (_, _, true) => (RankSpec::Full, None),
        (t, None, false) => {
            let t = t.unwrap_or(edm::edm::DEFAULT_ENERGY_THRESHOLD);
            (RankSpec::Energy(t), Some(t))
        }
    };
    let side = match a.side {
        SideArg::Right => ModeSide::Right,
        SideArg::Left => {
            ensure!(db.has_left(), "database holds no left eigenvectors");
            ModeSide::Left
        }
    };
    let basis = edm_basis(&db, i, side, rank)?;
    let out = output_path(&a.out, &format!("edm-mode{}", a.mode));
    save_edm(&basis, threshold, &out)?;
    println!(
        "wrote {} (mode {}, r = {}, energy fraction = {})",
        out.display(),
        a.mode,
        basis.rank(),
        basis
            .energy_fraction()
            .map(|e| format!("{e:.6}"))
            .unwrap_or_else(|_| "undefined".into())
    );
    Ok(())
}

fn load_basis_for(path: &Path, db: &ModeDatabase, i: usize) -> Result<EdmBasis> {
    let (basis, _) = load_edm(path)?;
    ensure!(
        basis.mode_index == i,
        "EDM basis describes mode {}, not mode {}",
        basis.mode_index + 1,
        i + 1
    );
    ensure!(
        basis.n() == db.n() && basis.sample_mus == db.mus(),
        "EDM basis was built from a different database"
    );
    Ok(basis)
}

fn interp(a: InterpArgs) -> Result<()> {
    let db = load_database(&a.db)?.db;
    let i = mode_index(&db, a.mode)?;
    let scheme = a.scheme.into();
    let mode = match a.strategy {
        StrategyArg::Direct => direct_interpolate(&db, i, a.mu, scheme)?,
        StrategyArg::Edm => {
            let path = a
                .edm
                .as_ref()
                .ok_or_else(|| anyhow!("--strategy edm needs --edm"))?;
            interpolate_mode(&load_basis_for(path, &db, i)?, a.mu, scheme)?
        }
        StrategyArg::SolutionInterpolation => {
            bail!("solution interpolation applies to trajectories, not modes")
        }
    };
    let mut csv = Csv::new(&["index", "re [-]", "im [-]"]);
    for (k, z) in mode.iter().enumerate() {
        csv.row(&[k.to_string(), report::num(z.re), report::num(z.im)]);
    }
    let out = output_path(&a.out, "interp.csv");
    csv.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn require_system(stored: &StoredDatabase) -> Result<edm::systems::FullOrderSystem> {
    let spec = stored
        .system
        .as_ref()
        .ok_or_else(|| anyhow!("database has no generating system; this command needs one"))?;
    Ok(spec.build()?)
}

fn rom(a: RomArgs) -> Result<()> {
    let stored = load_database(&a.db)?;
    let sys = require_system(&stored)?;
    let db = &stored.db;
    let m = a.m.unwrap_or(db.m());
    let horizon = match a.horizon {
        Some(h) => h,
        None => characteristic_horizon(db)?,
    };
    let times = time_grid(horizon, a.steps);
    let x0 = equilibrium(&sys, a.x0_mu)?;
    let strategy: Strategy = a.strategy.into();
    let schemes = Schemes {
        modes: a.scheme.into(),
        ..Schemes::default()
    };
    let traj = match strategy {
        Strategy::SolutionInterpolation => {
            let roms = db
                .samples
                .iter()
                .map(|s| Ok(build_rom_at_sample(db, s.mu, m, equilibrium(&sys, s.mu)?)?))
                .collect::<Result<Vec<_>>>()?;
            solution_interpolation(&roms, a.mu, &x0, &times, schemes.modes)?
        }
        _ => {
            let model = match strategy {
                Strategy::Edm => Some(EdmModel::from_database(db, m, RankSpec::Energy(a.energy))?),
                _ => None,
            };
            let rom = build_rom_interpolated(
                db,
                model.as_ref(),
                a.mu,
                m,
                strategy,
                schemes,
                equilibrium(&sys, a.mu)?,
            )?;
            println!(
                "bi-orthogonality defect = {:.3e}",
                rom.biorthogonality_defect
            );
            simulate_rom(&rom, &x0, &times)?
        }
    };
    if a.reference {
        let full = simulate_full(&sys, a.mu, &x0, &times)?;
        let err = trajectory_error(&full, &traj, db.mass_factor())?;
        println!("time-integrated error = {:.6e}", err.integrated);
    }
    let mut header = vec!["t [time]".to_string()];
    header.extend((0..traj.states.nrows()).map(|k| format!("x{k} [state]")));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (j, t) in traj.times.iter().enumerate() {
        let mut row = vec![report::num(*t)];
        row.extend(traj.states.column(j).iter().map(|v| report::num(*v)));
        csv.row(&row);
    }
    let out = output_path(&a.out, "trajectory.csv");
    csv.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RankChoice {
    Fixed(usize),
    Full,
}

fn parse_ranks(s: &str) -> Result<Vec<RankChoice>> {
    s.split(',')
        .map(|t| match t.trim() {
            "full" => Ok(RankChoice::Full),
            v => v
                .parse()
                .map(RankChoice::Fixed)
                .map_err(|_| anyhow!("bad rank '{v}' in --ranks")),
        })
        .collect()
}

/// `(mu, r, strategy, error)`; `r` is `None` for direct interpolation.
pub type SweepRow = (f64, Option<usize>, String, f64);

/// Rows comparing EDM interpolation at several
/// ranks with direct interpolation against the true tracked eigenmode.
pub fn error_sweep_rows(
    sys: &edm::systems::FullOrderSystem,
    db: &ModeDatabase,
    i: usize,
    ranks: &[usize],
    grid: usize,
    scheme: Scheme,
) -> Result<Vec<SweepRow>> {
    let full = edm_basis(db, i, ModeSide::Right, RankSpec::Full)?;
    let bases = ranks
        .iter()
        .map(|&r| Ok((r, full.truncated(r.min(full.rank()))?)))
        .collect::<Result<Vec<_>>>()?;
    let mus = db.mus();
    let points = Grid {
        start: mus[0],
        stop: mus[mus.len() - 1],
        count: grid.max(2),
    }
    .points();
    let mut rows = Vec::new();
    for mu in points {
        let candidates = edm::modal::spectrum_at(sys, mu, db.selection)?;
        let (_, truth) = edm::modal::track_mode(db, i, mu, &candidates)?;
        let direct = direct_interpolate(db, i, mu, scheme)?;
        rows.push((
            mu,
            None,
            "direct".to_string(),
            edm::edm::interpolation_error(&truth, &direct, db.mass_factor())?,
        ));
        for (r, b) in &bases {
            let pred = interpolate_mode(b, mu, scheme)?;
            rows.push((
                mu,
                Some(*r),
                "edm".to_string(),
                edm::edm::interpolation_error(&truth, &pred, db.mass_factor())?,
            ));
        }
    }
    Ok(rows)
}

fn error_sweep(a: ErrorSweepArgs) -> Result<()> {
    let stored = load_database(&a.db)?;
    let sys = require_system(&stored)?;
    let db = &stored.db;
    let supplied = match &a.edm {
        Some(p) => Some(load_edm(p)?.0),
        None => None,
    };
    let one_based = match (a.mode, &supplied) {
        (Some(k), _) => k,
        (None, Some(b)) => b.mode_index + 1,
        (None, None) => bail!("give --mode or --edm"),
    };
    let i = mode_index(db, one_based)?;
    let max_rank = db.n().min(db.p());
    let mut ranks: Vec<usize> = parse_ranks(&a.ranks)?
        .into_iter()
        .map(|c| match c {
            RankChoice::Fixed(r) => r.min(max_rank),
            RankChoice::Full => max_rank,
        })
        .collect();
    if let Some(path) = &a.edm {
        ranks.push(load_basis_for(path, db, i)?.rank());
    }
    ranks.sort_unstable();
    ranks.dedup();
    let rows = error_sweep_rows(&sys, db, i, &ranks, a.grid, a.scheme.into())?;
    let mut csv = Csv::new(&["mu [-]", "r [EDMs]", "strategy", "error [-]"]);
    for (mu, r, strategy, err) in rows {
        csv.row(&[
            report::num(mu),
            r.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            strategy,
            report::num(err),
        ]);
    }
    let out = output_path(&a.out, "errors.csv");
    csv.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let stored = load_database(&a.db)?;
    let sys = require_system(&stored)?;
    let db = &stored.db;
    let m = a.m.unwrap_or(db.m());
    let model = EdmModel::from_database(db, m, RankSpec::Energy(a.energy))?;
    let mus = db.mus();
    let validation = a
        .validation
        .unwrap_or(Grid {
            start: mus[0],
            stop: mus[mus.len() - 1],
            count: 50,
        })
        .points();
    let config = BenchmarkConfig {
        m,
        schemes: Schemes {
            modes: a.scheme.into(),
            ..Schemes::default()
        },
        repetitions: a.reps,
        times: time_grid(characteristic_horizon(db)?, a.steps),
    };
    let x0 = equilibrium(&sys, a.x0_mu)?;
    let rows = benchmark_strategies(&sys, db, &model, &validation, &x0, &config)?;
    let mut csv = Csv::new(&["mu [-]", "strategy", "error [-]", "seconds [s]"]);
    for r in rows {
        csv.row(&[
            report::num(r.mu),
            r.strategy.to_string(),
            report::num(r.error),
            report::num(r.seconds),
        ]);
    }
    let out = output_path(&a.out, "benchmark.csv");
    csv.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn energy(a: EnergyArgs) -> Result<()> {
    let db = load_database(&a.db)?.db;
    let mut csv = Csv::new(&["mode", "r [EDMs]", "sigma [-]", "energy_fraction [-]"]);
    for i in 0..db.m() {
        let basis = edm_basis(&db, i, ModeSide::Right, RankSpec::Full)?;
        let s = &basis.singular_values;
        for r in 1..=s.len() {
            let frac = edm::edm::energy_fraction(s, r)
                .map(report::num)
                .unwrap_or_else(|_| "nan".into());
            csv.row(&[
                (i + 1).to_string(),
                r.to_string(),
                report::num(s[r - 1]),
                frac,
            ]);
        }
        info!("mode {}: r(0.999) = {}", i + 1, select_rank(s, 0.999));
    }
    let out = output_path(&a.out, "energy.csv");
    csv.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[cfg(feature = "ingest")]
fn ingest(a: IngestArgs) -> Result<()> {
    let db = crate::ingest::ingest_directory(&a.from)?;
    report_warnings(&db);
    let out = output_path(&a.out, "db");
    save_database(&db, None, &out)?;
    println!(
        "wrote {} (n = {}, p = {}, m = {})",
        out.display(),
        db.n(),
        db.p(),
        db.m()
    );
    Ok(())
}
