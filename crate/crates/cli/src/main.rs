mod output;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use output::{Format, OutputConfig};
use singrad_core::scenarios::{
    list_scenarios, run_scenario, simulate, sweep, sweep_starts, verify_identities, HDefinition,
    VerifyConfig,
};
use singrad_core::{
    ChartId, Mode, Overrides, Perturbation, Point, Scenario, ScenarioId, ScenarioReport,
};

const EXIT_PASS: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "singrad",
    version,
    about = "Singular gradient flows of degenerate plane metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Integrate one scenario and write its trajectory or report.
    Run(RunArgs),
    /// Run the identity checks and every scenario's default checks.
    Verify(VerifyArgs),
    /// Run a scenario from several starting points at the same radius.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct FlowFlags {
    /// Cartesian start, x coordinate.
    #[arg(long, allow_negative_numbers = true, requires = "y0", conflicts_with_all = ["phi0", "r0"])]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "x0")]
    y0: Option<f64>,
    /// Polar start, angle.
    #[arg(long, allow_negative_numbers = true, requires = "r0")]
    phi0: Option<f64>,
    #[arg(long, requires = "phi0")]
    r0: Option<f64>,
    /// Inner stop radius.
    #[arg(long)]
    rmin: Option<f64>,
    /// Outer stop radius.
    #[arg(long)]
    rmax: Option<f64>,
    /// Relative tolerance of the integrator.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, value_parser = ["xi", "unit"])]
    mode: Option<String>,
    #[arg(long, value_parser = ["zero", "const", "sin", "linear"])]
    perturb: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Significant digits of emitted numbers.
    #[arg(long, hide = true, default_value_t = 12, value_parser = clap::value_parser!(u8).range(6..=17))]
    precision: u8,
}

#[derive(Args)]
struct RunArgs {
    id: String,
    #[command(flatten)]
    flags: FlowFlags,
}

#[derive(Args)]
struct SweepArgs {
    id: String,
    /// Number of start angles, evenly spaced.
    #[arg(long, required_unless_present = "starts", conflicts_with = "starts")]
    grid: Option<usize>,
    /// File of starts in the scenario's chart, one `a b` or `a,b` pair per line.
    #[arg(long, hide = true)]
    starts: Option<PathBuf>,
    #[command(flatten)]
    flags: FlowFlags,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Replaces the tolerance of every identity check.
    #[arg(long)]
    tol: Option<f64>,
    /// Use the printed cross term as the definition of h.
    #[arg(long, hide = true)]
    use_printed_h: bool,
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => cmd_list(),
        Command::Run(args) => cmd_run(&args),
        Command::Verify(args) => Ok(cmd_verify(&args)),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    ExitCode::from(code.unwrap_or_else(|Usage(msg)| {
        eprintln!("error: {msg}");
        EXIT_USAGE
    }))
}

/// Standard output may be closed early by a pager or `head`.
fn print(text: &str) {
    let _ = output::emit(None, text);
}

fn cmd_list() -> Result<u8, Usage> {
    let mut text = String::new();
    for s in list_scenarios() {
        let line = format!(
            "{:<4}{:<19}{:<7}{}\n",
            s.id.code(),
            s.id.name(),
            s.chart.to_string(),
            s.id.description()
        );
        text.push_str(&line);
    }
    print(&text);
    Ok(EXIT_PASS)
}

fn exit_code<'a>(reports: impl IntoIterator<Item = &'a ScenarioReport>) -> u8 {
    let mut code = EXIT_PASS;
    for r in reports {
        if r.numerical_failure() {
            return EXIT_NUMERICAL;
        }
        if !r.passed() {
            code = EXIT_CHECK_FAILED;
        }
    }
    code
}

fn start_point(chart: ChartId, f: &FlowFlags) -> Result<Option<Point>, Usage> {
    let p = match (f.x0.zip(f.y0), f.phi0.zip(f.r0)) {
        (Some((x, y)), _) => match chart {
            ChartId::Plane => [x, y],
            ChartId::Cover if x == 0.0 && y == 0.0 => {
                return Err(Usage(
                    "the origin has no polar angle; give --phi0 and --r0".into(),
                ))
            }
            ChartId::Cover => [y.atan2(x), x.hypot(y)],
        },
        (None, Some((phi, r))) => match chart {
            ChartId::Plane => [r * phi.cos(), r * phi.sin()],
            ChartId::Cover => [phi, r],
        },
        (None, None) => return Ok(None),
    };
    Ok(Some(p))
}

fn overrides(id: ScenarioId, f: &FlowFlags) -> Result<Overrides, Usage> {
    let chart = Scenario::new(id).chart;
    Ok(Overrides {
        start: start_point(chart, f)?,
        rel_tol: f.tol,
        max_steps: f.max_steps,
        mode: f.mode.as_deref().map(str::parse::<Mode>).transpose()?,
        stop_r_min: f.rmin,
        stop_r_max: f.rmax,
        perturbation: f
            .perturb
            .as_deref()
            .map(str::parse::<Perturbation>)
            .transpose()?,
    })
}

fn output_config(f: &FlowFlags) -> OutputConfig {
    OutputConfig {
        format: f.format,
        out_path: f.out.clone(),
        svg_path: f.svg.clone(),
        precision: f.precision as usize,
    }
}

fn print_checks(report: &ScenarioReport) {
    eprintln!("{}", output::check_header());
    for c in &report.checks {
        eprintln!("{}", output::check_line(&report.scenario_id, c));
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
}

fn cmd_run(args: &RunArgs) -> Result<u8, Usage> {
    let id: ScenarioId = args.id.parse()?;
    let ov = overrides(id, &args.flags)?;
    let cfg = output_config(&args.flags);
    let (report, traj) = simulate(id, &ov)?;

    let text = match cfg.format {
        Format::Csv => output::trajectory_csv(&traj, cfg.precision),
        Format::Json => output::json(&report, cfg.precision)?,
    };
    output::emit(cfg.out_path.as_deref(), &text)?;
    if let Some(path) = &cfg.svg_path {
        fs::write(path, svg::render(&[traj.cartesian_points()], id.name()))?;
    }
    print_checks(&report);
    Ok(exit_code([&report]))
}

fn cmd_verify(args: &VerifyArgs) -> u8 {
    let config = VerifyConfig {
        points: args.points.max(1),
        seed: args.seed,
        tol: args.tol,
        h_definition: if args.use_printed_h {
            HDefinition::Printed
        } else {
            HDefinition::Pullback
        },
    };
    let mut reports = Vec::new();
    match verify_identities(&config) {
        Ok(r) => reports.push(r),
        Err(e) => {
            eprintln!("verify: {e}");
            return EXIT_NUMERICAL;
        }
    }
    for id in ScenarioId::ALL {
        match run_scenario(id, &Overrides::default()) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("{id}: {e}");
                return EXIT_NUMERICAL;
            }
        }
    }

    let mut text = output::check_header() + "\n";
    let mut failed = 0;
    for r in &reports {
        for c in &r.checks {
            text.push_str(&output::check_line(&r.scenario_id, c));
            text.push('\n');
            failed += usize::from(!c.pass);
        }
    }
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    text.push_str(&format!("{} of {total} checks passed\n", total - failed));
    print(&text);
    exit_code(&reports)
}

fn read_starts(path: &Path) -> Result<Vec<Point>, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let mut starts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        match fields.as_slice() {
            [a, b] => starts.push([a.parse()?, b.parse()?]),
            _ => {
                return Err(Usage(format!(
                    "{}:{}: expected two numbers",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    if starts.is_empty() {
        return Err(Usage(format!("{}: no starts", path.display())));
    }
    Ok(starts)
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, Usage> {
    let id: ScenarioId = args.id.parse()?;
    let ov = overrides(id, &args.flags)?;
    let cfg = output_config(&args.flags);
    let reports = match (&args.starts, args.grid) {
        (Some(path), _) => sweep_starts(id, &ov, &read_starts(path)?)?,
        (None, Some(grid)) => sweep(id, &ov, grid)?,
        (None, None) => return Err(Usage("give --grid N".into())),
    };

    let (a, b) = match Scenario::new(id).chart {
        ChartId::Plane => ("x0", "y0"),
        ChartId::Cover => ("phi0", "r0"),
    };
    let p = cfg.precision;
    let mut csv = format!("index,{a},{b},winding,crossings,stop_reason,pass\n");
    let mut text = String::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, r) in reports.iter().enumerate() {
        let Some(s) = &r.trajectory_summary else {
            continue;
        };
        lo = lo.min(s.winding);
        hi = hi.max(s.winding);
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        text.push_str(&format!(
            "start {k}: {a}={} {b}={} winding={} crossings={} stop={:?} {verdict}\n",
            output::num(s.start[0], p),
            output::num(s.start[1], p),
            output::num(s.winding, p),
            s.crossings,
            s.stop_reason
        ));
        csv.push_str(&format!(
            "{k},{},{},{},{},{:?},{}\n",
            output::num(s.start[0], p),
            output::num(s.start[1], p),
            output::num(s.winding, p),
            s.crossings,
            s.stop_reason,
            r.passed()
        ));
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    text.push_str(&format!(
        "aggregate: starts={} min_winding={} max_winding={} failed={failed}\n",
        reports.len(),
        output::num(lo, p),
        output::num(hi, p)
    ));
    print(&text);

    if let Some(path) = &cfg.out_path {
        let text = match cfg.format {
            Format::Csv => csv,
            Format::Json => output::json(&reports, p)?,
        };
        fs::write(path, text)?;
    }
    if let Some(path) = &cfg.svg_path {
        let mut paths = Vec::with_capacity(reports.len());
        for r in &reports {
            let start = r.trajectory_summary.as_ref().map(|s| s.start);
            let (_, traj) = simulate(id, &Overrides { start, ..ov })?;
            paths.push(traj.cartesian_points());
        }
        fs::write(path, svg::render(&paths, id.name()))?;
    }
    Ok(exit_code(&reports))
}
