//! Command-line driver: loads system/scenario configurations, runs lifts,
//! kernel evaluations and simulations, and writes CSV/plain-text reports.

use carleman_volterra::{
    build_cascade, build_controller, closed_loop_step, eval_kernel, h1_rational, isci,
    isci_channel, lift, open_loop_compare, shift_to_deviation, simulate_volterra, Complex64,
    Error, InputAffineSystem, ScenarioConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit codes: 0 success, 2 parse, 3 precondition, 4 divergence, 5 internal.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } => 2,
        Error::NotDeviationForm { .. }
        | Error::NotAnEquilibrium { .. }
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::ImproperController { .. }
        | Error::UnstablePlant => 3,
        Error::Divergence { .. } => 4,
        _ => 5,
    }
}

#[derive(Parser)]
#[command(
    name = "carleman-volterra",
    version,
    about = "Bilinear lifting, Volterra models and IMC synthesis for polynomial systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a configured system to its truncated bilinear model and dump the
    /// matrices.
    Lift(LiftArgs),
    /// Run open-loop model comparisons or the closed-loop controller.
    Simulate(SimulateArgs),
    /// Evaluate frequency-domain Volterra kernels over a grid.
    Kernels(KernelArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// System/scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing). The CARLEMAN_VOLTERRA_OUT
    /// environment variable overrides this.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct LiftArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Truncation order of the monomial basis.
    #[arg(long, default_value_t = 2)]
    order: u32,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    OpenLoop,
    ClosedLoop,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Input step amplitude override (deviation units).
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    /// Comma-separated Volterra model orders, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<u32>>,
    /// Horizon override (hours).
    #[arg(long)]
    horizon: Option<f64>,
    /// Integration step override (hours).
    #[arg(long)]
    dt: Option<f64>,
    /// IMC filter time constant override.
    #[arg(long)]
    lambda: Option<f64>,
    /// IMC filter order override.
    #[arg(long)]
    filter_order: Option<u32>,
    /// Closed-loop setpoint step override (output deviation units).
    #[arg(long, allow_negative_numbers = true)]
    setpoint: Option<f64>,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Kernel order to evaluate.
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Frequency grid: `zero`, `log:<lo>:<hi>:<n>` or `lin:<lo>:<hi>:<n>`
    /// (rad per time unit along the imaginary axis; the kernel is evaluated
    /// on the cartesian power of the grid).
    #[arg(long, default_value = "zero")]
    grid: String,
    /// Zero the input-coupling matrix before evaluating.
    #[arg(long, default_value_t = false)]
    zero_coupling: bool,
    /// Lift order for the bilinear model (defaults to the kernel order,
    /// at least 2).
    #[arg(long)]
    lift_order: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lift(args) => cmd_lift(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Kernels(args) => cmd_kernels(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    std::env::var_os("CARLEMAN_VOLTERRA_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| common.out.clone())
}

fn read_config(path: &Path) -> Result<carleman_volterra::config::SystemConfig, Error> {
    let text = fs::read_to_string(path)?;
    carleman_volterra::config::parse_config(&text)
}

fn write_manifest(dir: &Path, command: &str, config: &Path) -> Result<(), Error> {
    let mut f = fs::File::create(dir.join("manifest.txt"))?;
    writeln!(f, "command = {command}")?;
    writeln!(f, "config = {}", config.display())?;
    writeln!(f, "output_dir = {}", dir.display())?;
    writeln!(f, "deterministic = true")?;
    writeln!(f, "version = {}", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

/// The deviation-form system described by the configuration: shifted about
/// the operating point when one is present, taken as-is otherwise.
fn deviation_system(
    cfg: &carleman_volterra::config::SystemConfig,
) -> Result<InputAffineSystem, Error> {
    match &cfg.operating_point {
        Some(op) => shift_to_deviation(&cfg.system, op),
        None => Ok(cfg.system.clone()),
    }
}

fn cmd_lift(args: LiftArgs) -> Result<(), Error> {
    let cfg = read_config(&args.common.config)?;
    let dir = out_dir(&args.common);
    fs::create_dir_all(&dir)?;
    let dev = deviation_system(&cfg)?;
    let bsys = lift(&dev, args.order)?;
    let mut file = fs::File::create(dir.join("bilinear.txt"))?;
    bsys.write_text_dump(&mut file)?;
    write_manifest(&dir, "lift", &args.common.config)?;
    Ok(())
}

fn merged_scenario(cfg: &ScenarioConfig, args: &SimulateArgs) -> ScenarioConfig {
    let mut s = cfg.clone();
    if let Some(v) = args.step {
        s.step_amplitude = v;
    }
    if let Some(orders) = &args.orders {
        let mut orders = orders.clone();
        orders.sort_unstable();
        orders.dedup();
        s.model_orders = orders;
    }
    if let Some(v) = args.horizon {
        s.horizon = v;
    }
    if let Some(v) = args.dt {
        s.dt = v;
    }
    if let Some(v) = args.lambda {
        s.lambda = v;
    }
    if let Some(v) = args.filter_order {
        s.filter_order = v;
    }
    if let Some(v) = args.setpoint {
        s.setpoint = v;
    }
    s
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let cfg = read_config(&args.common.config)?;
    let dir = out_dir(&args.common);
    fs::create_dir_all(&dir)?;
    let scenario = merged_scenario(&cfg.scenario, &args);
    scenario.validate()?;
    let Some(op) = cfg.operating_point.clone() else {
        return Err(Error::InvalidArgument(
            "simulation needs an [operating_point] section".into(),
        ));
    };
    match args.mode {
        Mode::OpenLoop => {
            let comparison = open_loop_compare(&cfg.system, &op, &scenario)?;
            let mut file = fs::File::create(dir.join("comparison.csv"))?;
            comparison.write_csv(&mut file)?;
            fs::write(dir.join("comparison.txt"), comparison.to_text())?;
            let mut file = fs::File::create(dir.join("nonlinear.csv"))?;
            comparison.nonlinear_trace.write_csv(&mut file)?;
            // one cascade trace per requested order, each with its own
            // cumulative output
            let dev = deviation_system(&cfg)?;
            let amp = scenario.step_amplitude;
            for &k in &scenario.model_orders {
                let bsys = lift(&dev, k.max(2))?;
                let cascade = build_cascade(&bsys, k)?;
                let trace = simulate_volterra(&cascade, |_| amp, scenario.horizon, scenario.dt)?;
                let mut file = fs::File::create(dir.join(format!("trace_order{k}.csv")))?;
                trace.write_csv(&mut file)?;
            }
            write_manifest(&dir, "simulate open-loop", &args.common.config)?;
        }
        Mode::ClosedLoop => {
            let dev = deviation_system(&cfg)?;
            let bsys = lift(&dev, scenario.max_order().max(2))?;
            let mut report = String::from("order,isci_deviation,isci_absolute\n");
            for &k in &scenario.model_orders {
                let ctrl = build_controller(&bsys, k, scenario.lambda, scenario.filter_order)?;
                let trace = closed_loop_step(
                    &cfg.system,
                    &op,
                    &ctrl,
                    scenario.setpoint,
                    scenario.horizon,
                    scenario.dt,
                )?;
                let mut file = fs::File::create(dir.join(format!("closedloop_order{k}.csv")))?;
                trace.write_csv(&mut file)?;
                fs::write(dir.join(format!("controller_order{k}.txt")), ctrl.report())?;
                report.push_str(&format!(
                    "{k},{},{}\n",
                    carleman_volterra::fmt_sig12(isci(&trace)?),
                    carleman_volterra::fmt_sig12(isci_channel(&trace, "u_abs")?),
                ));
            }
            fs::write(dir.join("isci.csv"), report)?;
            write_manifest(&dir, "simulate closed-loop", &args.common.config)?;
        }
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    if spec == "zero" {
        return Ok(vec![0.0]);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 || (parts[0] != "log" && parts[0] != "lin") {
        return Err(Error::InvalidArgument(format!(
            "grid spec `{spec}` is not `zero`, `log:<lo>:<hi>:<n>` or `lin:<lo>:<hi>:<n>`"
        )));
    }
    let lo: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid bound `{}`", parts[1])))?;
    let hi: f64 = parts[2]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid bound `{}`", parts[2])))?;
    let n: usize = parts[3]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid count `{}`", parts[3])))?;
    if n < 2 || !(hi > lo) || (parts[0] == "log" && !(lo > 0.0)) {
        return Err(Error::InvalidArgument("degenerate grid".into()));
    }
    Ok((0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if parts[0] == "log" {
                10f64.powf(lo.log10() + f * (hi.log10() - lo.log10()))
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect())
}

fn cmd_kernels(args: KernelArgs) -> Result<(), Error> {
    if args.order == 0 {
        return Err(Error::InvalidArgument("kernel order starts at 1".into()));
    }
    let cfg = read_config(&args.common.config)?;
    let dir = out_dir(&args.common);
    fs::create_dir_all(&dir)?;
    let dev = deviation_system(&cfg)?;
    let lift_order = args.lift_order.unwrap_or(args.order.max(2));
    let mut bsys = lift(&dev, lift_order)?;
    if args.zero_coupling {
        bsys.n_mat.fill(0.0);
    }
    let omegas = parse_grid(&args.grid)?;
    let order = args.order as usize;

    let mut file = fs::File::create(dir.join(format!("kernels_order{}.csv", args.order)))?;
    let mut header = String::from("order");
    for i in 1..=order {
        header.push_str(&format!(",s{i}_re,s{i}_im"));
    }
    header.push_str(",h_re,h_im,status");
    writeln!(file, "{header}")?;

    // cartesian power of the frequency grid along the imaginary axis
    let mut index = vec![0usize; order];
    loop {
        let s: Vec<Complex64> = index.iter().map(|&i| Complex64::new(0.0, omegas[i])).collect();
        let mut row = format!("{}", args.order);
        for v in &s {
            row.push_str(&format!(
                ",{},{}",
                carleman_volterra::fmt_sig12(v.re),
                carleman_volterra::fmt_sig12(v.im)
            ));
        }
        match eval_kernel(&bsys, args.order, &s) {
            Ok(h) => row.push_str(&format!(
                ",{},{},ok",
                carleman_volterra::fmt_sig12(h.re),
                carleman_volterra::fmt_sig12(h.im)
            )),
            Err(Error::PoleHit { .. }) => row.push_str(",,,pole"),
            Err(other) => return Err(other),
        }
        writeln!(file, "{row}")?;
        // advance the mixed-radix counter
        let mut pos = 0;
        loop {
            if pos == order {
                break;
            }
            index[pos] += 1;
            if index[pos] < omegas.len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
        if pos == order {
            break;
        }
    }

    if args.order == 1 {
        let h1 = h1_rational(&bsys)?;
        let num: Vec<String> = h1
            .num()
            .coeffs()
            .iter()
            .map(|&c| carleman_volterra::fmt_sig12(c))
            .collect();
        let den: Vec<String> = h1
            .den()
            .coeffs()
            .iter()
            .map(|&c| carleman_volterra::fmt_sig12(c))
            .collect();
        let text = format!(
            "# ascending coefficient order\nH1 num = {}\nH1 den = {}\n",
            num.join(" "),
            den.join(" ")
        );
        fs::write(dir.join("kernel_h1.txt"), text)?;
    }
    write_manifest(&dir, "kernels", &args.common.config)?;
    Ok(())
}
