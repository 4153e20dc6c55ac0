//! Fixed-step integration of the nonlinear plant, simulation traces, and the
//! open-loop model comparison used to benchmark the Volterra models against
//! the true system.

use crate::carleman::{lift, simulate_bilinear, BilinearSystem};
use crate::error::{Error, Result};
use crate::plant::{find_equilibrium, shift_to_deviation, InputAffineSystem, OperatingPoint};
use crate::realization::{build_cascade, simulate_volterra};
use nalgebra::DVector;
use std::io::Write;

/// Uniformly sampled, named channels recorded during one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    dt: f64,
    channels: Vec<(String, Vec<f64>)>,
}

impl SimulationTrace {
    pub fn new(dt: f64, names: Vec<String>) -> Result<Self> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate channel name `{n}`"
                )));
            }
        }
        Ok(SimulationTrace {
            dt,
            channels: names.into_iter().map(|n| (n, Vec::new())).collect(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.channels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.channels.len(),
                got: row.len(),
            });
        }
        for ((_, col), &v) in self.channels.iter_mut().zip(row) {
            col.push(v);
        }
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    /// CSV with a header row, 12 significant digits, LF line endings.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let header: Vec<&str> = self.names();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .channels
                .iter()
                .map(|(_, v)| crate::fmt_sig12(v[i]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Scenario parameters for the benchmark runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Input step in deviation units (h⁻¹ for the benchmark).
    pub step_amplitude: f64,
    /// Horizon in hours.
    pub horizon: f64,
    /// Integration step in hours.
    pub dt: f64,
    /// Volterra model orders to run.
    pub model_orders: Vec<u32>,
    /// IMC filter time constant.
    pub lambda: f64,
    /// IMC filter order.
    pub filter_order: u32,
    /// Closed-loop setpoint step in output deviation units (mol·l⁻¹).
    pub setpoint: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            step_amplitude: 20.0,
            horizon: 1.0,
            dt: 1e-4,
            model_orders: vec![1, 2, 3],
            lambda: 0.01,
            filter_order: 1,
            setpoint: 0.1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if !(self.dt > 0.0) || self.dt > self.horizon / 100.0 {
            return Err(Error::InvalidArgument(
                "dt must satisfy 0 < dt <= horizon/100".into(),
            ));
        }
        if self.model_orders.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one model order is required".into(),
            ));
        }
        if self.model_orders.iter().any(|&k| k == 0) {
            return Err(Error::InvalidArgument("model orders start at 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument("lambda must be positive".into()));
        }
        if self.filter_order == 0 {
            return Err(Error::InvalidArgument(
                "filter order must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn max_order(&self) -> u32 {
        self.model_orders.iter().copied().max().unwrap_or(1)
    }
}

/// Fixed-step RK4 integration of the nonlinear plant `ẋ = f(x) + g(x)·u(t)`.
/// The trace records `t`, `u`, every state (`x1..xn`) and `y = c·x`.
pub fn integrate_nonlinear<F: Fn(f64) -> f64>(
    sys: &InputAffineSystem,
    x0: &[f64],
    u: F,
    t_end: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    if !(t_end > 0.0) || !(dt > 0.0) || dt >= t_end {
        return Err(Error::InvalidArgument(
            "horizon and step must satisfy 0 < dt < T".into(),
        ));
    }
    let dim = sys.dim();
    let mut names = vec!["t".to_string(), "u".to_string()];
    names.extend((1..=dim).map(|i| format!("x{i}")));
    names.push("y".to_string());
    let mut trace = SimulationTrace::new(dt, names)?;

    let rhs = |x: &DVector<f64>, uv: f64| -> DVector<f64> {
        sys.f.eval(x.as_slice()) + sys.g.eval(x.as_slice()) * uv
    };
    let steps = (t_end / dt).round() as usize;
    let mut x = DVector::from_column_slice(x0);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let uv = u(t);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        let mut row = Vec::with_capacity(dim + 3);
        row.push(t);
        row.push(uv);
        row.extend(x.iter().copied());
        row.push(sys.output(x.as_slice()));
        trace.push_row(&row)?;
        if k == steps {
            break;
        }
        let k1 = rhs(&x, uv);
        let k2 = rhs(&(&x + &k1 * (dt / 2.0)), u(t + dt / 2.0));
        let k3 = rhs(&(&x + &k2 * (dt / 2.0)), u(t + dt / 2.0));
        let k4 = rhs(&(&x + &k3 * dt), u(t + dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(trace)
}

/// Mean of the final window of a channel plus a settledness diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub mean: f64,
    /// max − min over the window.
    pub range: f64,
    /// False when the window still moves by more than 1% of the mean (and more
    /// than 1e−6 absolutely).
    pub settled: bool,
}

/// Reads the steady state of `channel` as the mean over the trailing
/// `window_fraction` of the trace.
pub fn steady_state(
    trace: &SimulationTrace,
    channel: &str,
    window_fraction: f64,
) -> Result<SteadyState> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(Error::InvalidArgument(
            "window fraction must lie in (0, 0.5]".into(),
        ));
    }
    let data = trace.channel(channel)?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let n = data.len();
    let start = n - ((n as f64 * window_fraction).ceil() as usize).clamp(1, n);
    let window = &data[start..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = max - min;
    let settled = !(range > 0.01 * mean.abs() && range > 1e-6);
    Ok(SteadyState {
        mean,
        range,
        settled,
    })
}

/// One row of the open-loop comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub steady_deviation: f64,
    pub settled: bool,
    /// |(model − nonlinear)/nonlinear|·100, absent for the nonlinear row.
    pub pct_difference: Option<f64>,
}

/// Open-loop comparison of the Volterra models against the nonlinear truth.
#[derive(Debug, Clone)]
pub struct OpenLoopComparison {
    pub rows: Vec<ComparisonRow>,
    /// Cascade trace with per-order outputs (`y1..yn`, `y_cum`).
    pub volterra_trace: SimulationTrace,
    /// Nonlinear truth trace in physical coordinates.
    pub nonlinear_trace: SimulationTrace,
    /// Output of the exact equilibrium at the nominal input.
    pub baseline_output: f64,
}

impl OpenLoopComparison {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "model,steady_deviation,settled,pct_difference")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.label,
                crate::fmt_sig12(row.steady_deviation),
                row.settled,
                row.pct_difference
                    .map(crate::fmt_sig12)
                    .unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<18} {:>16} {:>10} {:>12}\n",
            "model", "steady dev", "settled", "% diff"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<18} {:>16.6} {:>10} {:>12}\n",
                row.label,
                row.steady_deviation,
                row.settled,
                row.pct_difference
                    .map(|p| format!("{p:.2}"))
                    .unwrap_or_else(|| "-".into())
            ));
        }
        out
    }
}

/// Window used to read steady states off a trace.
const STEADY_WINDOW: f64 = 0.05;

/// Runs the nonlinear truth and the Volterra cascades for each requested order
/// under the same input step and compares steady-state deviations.
///
/// The lift is taken at the largest requested order so every requested kernel
/// order is exact; the nonlinear run starts from the exact equilibrium at the
/// nominal input and deviations are measured against that equilibrium's
/// output.
pub fn open_loop_compare(
    sys: &InputAffineSystem,
    op: &OperatingPoint,
    cfg: &ScenarioConfig,
) -> Result<OpenLoopComparison> {
    cfg.validate()?;
    let dev = shift_to_deviation(sys, op)?;
    let max_order = cfg.max_order();
    let bsys = lift(&dev, max_order)?;
    let cascade = build_cascade(&bsys, max_order)?;
    let amp = cfg.step_amplitude;
    let volterra_trace = simulate_volterra(&cascade, |_| amp, cfg.horizon, cfg.dt)?;

    let baseline = find_equilibrium(sys, op.u0, &op.x0)?;
    let baseline_output = sys.output(baseline.as_slice());
    let u_abs = op.u0 + amp;
    let nonlinear_trace =
        integrate_nonlinear(sys, baseline.as_slice(), |_| u_abs, cfg.horizon, cfg.dt)?;

    let nl_steady = steady_state(&nonlinear_trace, "y", STEADY_WINDOW)?;
    let nl_dev = nl_steady.mean - baseline_output;

    let mut rows = vec![ComparisonRow {
        label: "nonlinear".to_string(),
        steady_deviation: nl_dev,
        settled: nl_steady.settled,
        pct_difference: None,
    }];
    for &k in &cfg.model_orders {
        let mut mean = 0.0;
        let mut settled = true;
        for j in 1..=k {
            let s = steady_state(&volterra_trace, &format!("y{j}"), STEADY_WINDOW)?;
            mean += s.mean;
            settled &= s.settled;
        }
        let pct = if nl_dev != 0.0 {
            Some(((mean - nl_dev) / nl_dev).abs() * 100.0)
        } else {
            Some(0.0)
        };
        // a zero-amplitude step settles at zero for every model
        let pct = if amp == 0.0 { Some(0.0) } else { pct };
        rows.push(ComparisonRow {
            label: format!("order-{k}"),
            steady_deviation: mean,
            settled,
            pct_difference: pct,
        });
    }
    Ok(OpenLoopComparison {
        rows,
        volterra_trace,
        nonlinear_trace,
        baseline_output,
    })
}

/// Peak model errors for a sequence of halving step amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorScaling {
    pub amplitudes: Vec<f64>,
    pub peak_errors: Vec<f64>,
    /// `peak[i] / peak[i+1]`, one entry per consecutive pair.
    pub ratios: Vec<f64>,
}

/// Measures the truncation quality of a bilinear lift: for each amplitude the
/// deviation-form system and its lift are stepped with the same input and the
/// peak output difference is recorded. `sys` must be the deviation-form
/// system the lift was built from, so both trajectories start at the origin.
pub fn model_error_scaling(
    sys: &InputAffineSystem,
    bsys: &BilinearSystem,
    amplitudes: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<ErrorScaling> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("no amplitudes given".into()));
    }
    for pair in amplitudes.windows(2) {
        if !(pair[0] > 0.0) || (pair[1] - pair[0] / 2.0).abs() > 1e-12 * pair[0] {
            return Err(Error::InvalidArgument(
                "amplitudes must be positive and halve at each step".into(),
            ));
        }
    }
    let origin = vec![0.0; sys.dim()];
    let mut peaks = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        if a == 0.0 {
            peaks.push(0.0);
            continue;
        }
        let nl = integrate_nonlinear(sys, &origin, |_| a, horizon, dt)?;
        let bl = simulate_bilinear(bsys, |_| a, horizon, dt)?;
        let ynl = nl.channel("y")?;
        let ybl = bl.channel("y")?;
        let peak = ynl
            .iter()
            .zip(ybl)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0_f64, f64::max);
        peaks.push(peak);
    }
    let ratios = peaks
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { w[0] / w[1] })
        .collect();
    Ok(ErrorScaling {
        amplitudes: amplitudes.to_vec(),
        peak_errors: peaks,
        ratios,
    })
}
