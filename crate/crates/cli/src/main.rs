use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use braidorbit::braid::{beta, gcd};
use braidorbit::extract::{self, ExtractError, DEFAULT_ANGLES};
use braidorbit::nbody::{self, ProblemSpec, SolverConfig, Trajectory};
use braidorbit::shape::{self, ShapeCheckConfig, ShapeError};
use braidorbit::{stretch, Execution};

#[derive(Debug, Parser)]
#[command(
    name = "braidorbit",
    version,
    about = "Braids, stretch factors and symmetric periodic orbits of the planar 2n-body problem"
)]
struct Cli {
    /// JSON file with one optional section per command (`table`, `braid`,
    /// `solve`, `shape`, `extract`, `verify`). Flags win over the file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory receiving every output file.
    #[arg(
        long,
        global = true,
        env = "BRAIDORBIT_OUT_DIR",
        default_value = ".",
        value_name = "DIR"
    )]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stretch factors and entropies for 2 <= n <= n-max, 1 <= p <= n/2, as CSV.
    Table(TableArgs),
    /// Writes beta(n,p) (or its n/d-th power) as a word file plus its fingerprint.
    Braid(BraidArgs),
    /// Minimizes the action for (n,p); writes loop, trajectory and report JSON.
    Solve(SolveArgs),
    /// Projects a trajectory to the shape sphere and checks the curve properties.
    Shape(ShapeArgs),
    /// Reads a braid word off a trajectory by projection onto a line.
    Extract(ExtractArgs),
    /// Shape checks, braid extraction and type comparison in one verdict.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Largest n in the table [default: 11]
    #[arg(long)]
    n_max: Option<usize>,
    /// Output CSV, relative to the output directory [default: table.csv]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BraidArgs {
    /// Half the number of bodies (n >= 2)
    #[arg(long)]
    n: Option<usize>,
    /// Winding parameter (1 <= p <= n-1)
    #[arg(long)]
    p: Option<usize>,
    /// Write the n/d-th power, the braid of the whole orbit [default: off]
    #[arg(long)]
    power: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Half the number of bodies (n >= 2)
    #[arg(long)]
    n: Option<usize>,
    /// Winding parameter (1 <= p <= n-1)
    #[arg(long)]
    p: Option<usize>,
    /// Fourier truncation K [default: 24n/d]
    #[arg(long)]
    modes: Option<usize>,
    /// Quadrature nodes per period [default: max(8K, 256)]
    #[arg(long)]
    quadrature: Option<usize>,
    /// Seed of the initial loop [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Allow p > n/2, where no existence result is known [default: off]
    #[arg(long)]
    conjectural: bool,
    /// Evaluate the action on one thread [default: off]
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct ShapeArgs {
    /// Trajectory JSON as written by `solve`
    #[arg(long, value_name = "FILE")]
    trajectory: Option<PathBuf>,
    /// Angular ray tolerance in radians [default: pi/(16n)]
    #[arg(long)]
    tol_angle: Option<f64>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Trajectory JSON as written by `solve`
    #[arg(long, value_name = "FILE")]
    trajectory: Option<PathBuf>,
    /// Projection angles tried in order, comma separated
    /// [default: 0.1234,0.2718,-0.1414,0.3271,0.0577,-0.2236]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Start of the window [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    /// End of the window [default: d T / n, one symmetry step]
    #[arg(long)]
    to: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Half the number of bodies; must match the trajectory
    #[arg(long)]
    n: Option<usize>,
    /// Winding parameter; must match the trajectory
    #[arg(long)]
    p: Option<usize>,
    /// Trajectory JSON as written by `solve`
    #[arg(long, value_name = "FILE")]
    trajectory: Option<PathBuf>,
    /// Projection angles, comma separated; all generic ones must agree
    /// [default: 0.1234,0.2718,-0.1414,0.3271,0.0577,-0.2236]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Angular ray tolerance in radians [default: pi/(16n)]
    #[arg(long)]
    tol_angle: Option<f64>,
    /// Allow p > n/2 [default: off]
    #[arg(long)]
    conjectural: bool,
    /// Extract at all angles on one thread [default: off]
    #[arg(long)]
    sequential: bool,
}

/// Contents of `--config`.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    table: TableConfig,
    braid: BraidConfig,
    solve: SolveConfig,
    shape: ShapeConfig,
    extract: ExtractConfig,
    verify: VerifyConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TableConfig {
    n_max: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BraidConfig {
    n: Option<usize>,
    p: Option<usize>,
    power: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveConfig {
    n: Option<usize>,
    p: Option<usize>,
    modes: Option<usize>,
    quadrature: Option<usize>,
    seed: Option<u64>,
    conjectural: bool,
    solver: SolverConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ShapeConfig {
    trajectory: Option<PathBuf>,
    check: ShapeCheckConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExtractConfig {
    trajectory: Option<PathBuf>,
    angles: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyConfig {
    n: Option<usize>,
    p: Option<usize>,
    trajectory: Option<PathBuf>,
    angles: Option<Vec<f64>>,
    conjectural: bool,
    check: ShapeCheckConfig,
    execution: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Code {
    Usage = 2,
    NotConverged = 3,
    Inconsistent = 4,
    Io = 5,
}

#[derive(Debug)]
struct Failure {
    code: Code,
    stage: &'static str,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: Code, stage: &'static str, msg: impl Display) -> Self {
        Self {
            code,
            stage,
            error: anyhow!("{msg}"),
        }
    }
}

trait Staged<T> {
    fn at(self, code: Code, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Staged<T> for Result<T, E> {
    fn at(self, code: Code, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            stage,
            error: e.into(),
        })
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {:#}", f.stage, f.error);
            ExitCode::from(f.code as u8)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let out = Output { dir: cli.out_dir };
    match cli.command {
        Command::Table(a) => cmd_table(a, cfg.table, &out),
        Command::Braid(a) => cmd_braid(a, cfg.braid, &out),
        Command::Solve(a) => cmd_solve(a, cfg.solve, &out),
        Command::Shape(a) => cmd_shape(a, cfg.shape, &out),
        Command::Extract(a) => cmd_extract(a, cfg.extract, &out),
        Command::Verify(a) => cmd_verify(a, cfg.verify, &out),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .at(Code::Io, "config")?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .at(Code::Usage, "config")
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn path(&self, name: &Path) -> PathBuf {
        if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.dir.join(name)
        }
    }

    /// Write-then-rename in the target directory.
    fn write(&self, name: impl AsRef<Path>, contents: &str) -> Outcome {
        let path = self.path(name.as_ref());
        let res = (|| -> anyhow::Result<()> {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            fs::create_dir_all(dir)?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(contents.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(&path)?;
            Ok(())
        })();
        res.with_context(|| format!("cannot write {}", path.display()))
            .at(Code::Io, "write")?;
        println!("{}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: impl AsRef<Path>, value: &T) -> Outcome {
        let mut s = serde_json::to_string_pretty(value).at(Code::Io, "write")?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(config).ok_or_else(|| {
        Failure::new(
            Code::Usage,
            "args",
            format!("--{name} is required (flag or config)"),
        )
    })
}

fn check_pair(n: usize, p: usize) -> Outcome {
    if n < 2 {
        return Err(Failure::new(
            Code::Usage,
            "args",
            format!("need n >= 2, got {n}"),
        ));
    }
    if p < 1 || p >= n {
        return Err(Failure::new(
            Code::Usage,
            "args",
            format!("need 1 <= p <= n-1, got (n, p) = ({n}, {p})"),
        ));
    }
    Ok(())
}

fn gate_conjectural(n: usize, p: usize, allowed: bool) -> Outcome {
    if p > n / 2 && !allowed {
        return Err(Failure::new(
            Code::Usage,
            "args",
            format!(
                "(n, p) = ({n}, {p}) has p > n/2, where no existence result is known; \
                 pass --conjectural to run it as an exploratory case"
            ),
        ));
    }
    Ok(())
}

fn load_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .at(Code::Io, "load")?;
    Trajectory::from_json(&text)
        .with_context(|| format!("malformed trajectory {}", path.display()))
        .at(Code::Io, "load")
}

fn tag(n: usize, p: usize) -> String {
    format!("n{n}_p{p}")
}

fn cmd_table(a: TableArgs, c: TableConfig, out: &Output) -> Outcome {
    let n_max = a.n_max.or(c.n_max).unwrap_or(11);
    if n_max < 2 {
        return Err(Failure::new(
            Code::Usage,
            "args",
            format!("need n-max >= 2, got {n_max}"),
        ));
    }
    let rows = stretch::table(n_max).at(Code::Usage, "table")?;
    let name = a.out.or(c.out).unwrap_or_else(|| "table.csv".into());
    out.write(name, &stretch::table_csv(&rows))
}

#[derive(Serialize)]
struct BraidFile {
    n: usize,
    p: usize,
    power: usize,
    strands: usize,
    length: usize,
    exponent_sum: i64,
    permutation: Vec<Vec<usize>>,
    pure: bool,
    fingerprint: extract::TypeFingerprint,
}

fn cmd_braid(a: BraidArgs, c: BraidConfig, out: &Output) -> Outcome {
    let n = required(a.n, c.n, "n")?;
    let p = required(a.p, c.p, "p")?;
    check_pair(n, p)?;
    let power = if a.power || c.power { n / gcd(n, p) } else { 1 };
    let w = beta(n, p).at(Code::Usage, "braid")?.power(power);
    let fp = extract::fingerprint(&w).at(Code::Usage, "braid")?;
    let stem = if power == 1 {
        format!("beta_{}", tag(n, p))
    } else {
        format!("beta_{}_pow{power}", tag(n, p))
    };
    out.write(format!("{stem}.braid"), &format!("{}\n", w.to_text()))?;
    out.write_json(
        format!("{stem}.fingerprint.json"),
        &BraidFile {
            n,
            p,
            power,
            strands: w.strands(),
            length: w.len(),
            exponent_sum: w.exponent_sum(),
            permutation: w.permutation().cycles(),
            pure: w.is_pure(),
            fingerprint: fp,
        },
    )
}

fn cmd_solve(a: SolveArgs, c: SolveConfig, out: &Output) -> Outcome {
    let n = required(a.n, c.n, "n")?;
    let p = required(a.p, c.p, "p")?;
    check_pair(n, p)?;
    gate_conjectural(n, p, a.conjectural || c.conjectural)?;
    let mut spec = match a.modes.or(c.modes) {
        Some(k) => ProblemSpec::with_modes(n, p, k),
        None => ProblemSpec::new(n, p),
    }
    .at(Code::Usage, "args")?;
    if let Some(q) = a.quadrature.or(c.quadrature) {
        spec.quadrature_samples = q;
        spec.validate().at(Code::Usage, "args")?;
    }
    let seed = a.seed.or(c.seed).unwrap_or(1);
    let mut solver = c.solver;
    if a.sequential {
        solver.execution = Execution::Sequential;
    }
    let res = nbody::solve(&spec, &solver, seed).at(Code::NotConverged, "solve")?;
    let t = tag(n, p);
    out.write(
        format!("loop_{t}.json"),
        &res.loop_.to_json().at(Code::Io, "write")?,
    )?;
    out.write(
        format!("trajectory_{t}.json"),
        &res.trajectory.to_json().at(Code::Io, "write")?,
    )?;
    out.write_json(format!("solve_{t}.json"), &res.report)?;
    if !res.report.converged {
        return Err(Failure::new(
            Code::NotConverged,
            "solve",
            format!("not converged: {}", res.report.message),
        ));
    }
    Ok(())
}

fn shape_failure(e: ShapeError) -> Failure {
    let code = match e {
        ShapeError::Tolerance { .. } => Code::Usage,
        _ => Code::Inconsistent,
    };
    Failure::new(code, "shape", e)
}

fn cmd_shape(a: ShapeArgs, c: ShapeConfig, out: &Output) -> Outcome {
    let path = required(a.trajectory, c.trajectory, "trajectory")?;
    let traj = load_trajectory(&path)?;
    let mut check = c.check;
    if a.tol_angle.is_some() {
        check.tol_angle = a.tol_angle;
    }
    let tol = check
        .tol_angle
        .unwrap_or_else(|| shape::default_tolerance(traj.n));
    let report = shape::check_shape_properties(&traj, &check).map_err(shape_failure)?;
    let curve = shape::shape_curve(&traj, tol).map_err(shape_failure)?;
    for w in &report.warnings {
        eprintln!("warning [shape]: {w}");
    }
    let t = tag(traj.n, traj.p);
    out.write(format!("shape_{t}.csv"), &shape::shape_csv(&curve))?;
    out.write_json(format!("shape_{t}.json"), &report)?;
    if !report.all_pass {
        return Err(Failure::new(
            Code::Inconsistent,
            "shape",
            "shape-curve properties failed; see the report",
        ));
    }
    Ok(())
}

fn extract_failure(e: ExtractError) -> Failure {
    let code = match e {
        ExtractError::Parameter(_) | ExtractError::Span { .. } => Code::Usage,
        _ => Code::Inconsistent,
    };
    Failure::new(code, "extract", e)
}

#[derive(Serialize)]
struct ExtractFile {
    n: usize,
    p: usize,
    from: f64,
    to: f64,
    angle: f64,
    strands: usize,
    letters: Vec<i32>,
    permutation: Vec<Vec<usize>>,
    initial_order: Vec<usize>,
    events: Vec<extract::CrossingEvent>,
}

fn cmd_extract(a: ExtractArgs, c: ExtractConfig, out: &Output) -> Outcome {
    let path = required(a.trajectory, c.trajectory, "trajectory")?;
    let traj = load_trajectory(&path)?;
    let angles = a
        .angles
        .or(c.angles)
        .unwrap_or_else(|| DEFAULT_ANGLES.to_vec());
    let from = a.from.or(c.from).unwrap_or(0.0);
    let to =
        a.to.or(c.to)
            .unwrap_or_else(|| gcd(traj.n, traj.p) as f64 * traj.period / traj.n as f64);
    let ex = extract::extract_with_schedule(&traj, &angles, from, to).map_err(extract_failure)?;
    let t = tag(traj.n, traj.p);
    out.write(
        format!("extract_{t}.braid"),
        &format!("{}\n", ex.word.to_text()),
    )?;
    out.write_json(
        format!("extract_{t}.json"),
        &ExtractFile {
            n: traj.n,
            p: traj.p,
            from,
            to,
            angle: ex.angle,
            strands: ex.word.strands(),
            letters: ex.word.letters().to_vec(),
            permutation: ex.label_permutation().cycles(),
            initial_order: ex.initial_order.clone(),
            events: ex.events.clone(),
        },
    )
}

#[derive(Serialize)]
struct VerifyFile {
    n: usize,
    p: usize,
    conjectural: bool,
    /// `consistent` iff the shape checks and the braid comparison both pass.
    verdict: &'static str,
    shape: shape::ShapeReport,
    braid: extract::Verdict,
}

fn cmd_verify(a: VerifyArgs, c: VerifyConfig, out: &Output) -> Outcome {
    let n = required(a.n, c.n, "n")?;
    let p = required(a.p, c.p, "p")?;
    check_pair(n, p)?;
    gate_conjectural(n, p, a.conjectural || c.conjectural)?;
    let path = required(a.trajectory, c.trajectory, "trajectory")?;
    let traj = load_trajectory(&path)?;
    if (traj.n, traj.p) != (n, p) {
        return Err(Failure::new(
            Code::Usage,
            "metadata",
            format!(
                "{} holds (n, p) = ({}, {}) but ({n}, {p}) was requested",
                path.display(),
                traj.n,
                traj.p
            ),
        ));
    }
    let mut check = c.check;
    if a.tol_angle.is_some() {
        check.tol_angle = a.tol_angle;
    }
    let angles = a
        .angles
        .or(c.angles)
        .unwrap_or_else(|| DEFAULT_ANGLES.to_vec());
    let execution = if a.sequential {
        Execution::Sequential
    } else {
        c.execution
    };

    let shape_report = shape::check_shape_properties(&traj, &check).map_err(shape_failure)?;
    for w in &shape_report.warnings {
        eprintln!("warning [shape]: {w}");
    }
    let braid =
        extract::match_trajectory(&traj, n, p, &angles, execution).map_err(extract_failure)?;
    let consistent = shape_report.all_pass && braid.is_consistent();
    let mut failed = Vec::new();
    if !shape_report.all_pass {
        failed.push("shape");
    }
    if !braid.is_consistent() {
        failed.push("braid");
    }
    out.write_json(
        format!("verify_{}.json", tag(n, p)),
        &VerifyFile {
            n,
            p,
            conjectural: p > n / 2,
            verdict: if consistent {
                "consistent"
            } else {
                "inconsistent"
            },
            shape: shape_report,
            braid,
        },
    )?;
    if !consistent {
        return Err(Failure::new(
            Code::Inconsistent,
            failed[0],
            format!("inconsistent ({} check failed)", failed.join(" and ")),
        ));
    }
    Ok(())
}
