//! Plain-text configuration format for systems, operating points and
//! scenarios.
//!
//! The format is line-based with three sections. Polynomial entries list one
//! monomial per line: `f x1 = -10 x1^2` adds the coefficient −10 on `x1²` to
//! the drift row of `x1`; a bare coefficient is a constant term.
//!
//! ```text
//! [system]
//! states = x1 x2
//! f x1 = -50 x1
//! f x1 = -10 x1^2
//! g x1 = 10
//! g x1 = -1 x1
//! c = 0 1
//!
//! [operating_point]
//! x0 = 3.0 1.12
//! u0 = 34.3
//! residual_tolerance = 0.5
//!
//! [scenario]
//! step_amplitude = 20
//! horizon = 1.0
//! dt = 1e-4
//! orders = 1 2 3
//! lambda = 0.01
//! filter_order = 1
//! setpoint = 0.1
//! ```

use crate::error::{Error, Result};
use crate::plant::{InputAffineSystem, Monomial, OperatingPoint, PolynomialVectorField};
use crate::simulate::ScenarioConfig;
use std::io::Write;

/// Parsed configuration: the system, optional operating point, and the
/// scenario (defaults merged with whatever the file overrides).
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub state_names: Vec<String>,
    pub system: InputAffineSystem,
    pub operating_point: Option<OperatingPoint>,
    pub scenario: ScenarioConfig,
}

fn parse_err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        column,
        message: message.into(),
    })
}

fn parse_f64(tok: &str, line: usize, column: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse {
            line,
            column,
            message: format!("expected a number, found `{tok}`"),
        })
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                parse_err(line, column, "number must be finite")
            }
        })
}

/// Token with its 1-based column within the line.
fn tokens_with_columns(s: &str, offset: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = offset;
    for tok in s.split_whitespace() {
        let pos = s[col - offset..].find(tok).unwrap() + col - offset;
        out.push((offset + pos, tok));
        col = offset + pos + tok.len();
    }
    out
}

fn parse_monomial(
    tokens: &[(usize, &str)],
    states: &[String],
    line: usize,
) -> Result<Monomial> {
    let mut exps = vec![0u32; states.len()];
    for &(col, tok) in tokens {
        let (name, power) = match tok.split_once('^') {
            Some((n, p)) => {
                let power: u32 = p.parse().map_err(|_| Error::Parse {
                    line,
                    column: col,
                    message: format!("bad exponent in `{tok}`"),
                })?;
                (n, power)
            }
            None => (tok, 1),
        };
        let idx = states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::Parse {
                line,
                column: col,
                message: format!("unknown state `{name}`"),
            })?;
        exps[idx] += power;
    }
    Ok(Monomial::new(exps))
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    System,
    OperatingPoint,
    Scenario,
}

/// Parses the configuration text, reporting 1-based line/column positions on
/// error.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut section = Section::None;
    let mut states: Vec<String> = Vec::new();
    let mut f: Option<PolynomialVectorField> = None;
    let mut g: Option<PolynomialVectorField> = None;
    let mut c: Option<Vec<f64>> = None;
    let mut x0: Option<Vec<f64>> = None;
    let mut u0: Option<f64> = None;
    let mut residual_tolerance = 0.5;
    let mut seen_op_section = false;
    let mut scenario = ScenarioConfig::default();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first_col = line.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
        if let Some(name) = trimmed.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return parse_err(lineno, first_col, "unterminated section header");
            };
            section = match name {
                "system" => Section::System,
                "operating_point" => {
                    seen_op_section = true;
                    Section::OperatingPoint
                }
                "scenario" => Section::Scenario,
                other => {
                    return parse_err(lineno, first_col, format!("unknown section `{other}`"))
                }
            };
            continue;
        }
        let Some(eq) = line.find('=') else {
            return parse_err(lineno, first_col, "expected `key = value`");
        };
        let key_part = &line[..eq];
        let val_part = &line[eq + 1..];
        let key_tokens = tokens_with_columns(key_part, 1);
        let val_tokens = tokens_with_columns(val_part, eq + 2);
        if key_tokens.is_empty() {
            return parse_err(lineno, first_col, "missing key before `=`");
        }
        let (kcol, key) = key_tokens[0];
        match section {
            Section::None => {
                return parse_err(lineno, kcol, "content before any section header");
            }
            Section::System => match key {
                "states" => {
                    if !states.is_empty() {
                        return parse_err(lineno, kcol, "states already declared");
                    }
                    states = val_tokens.iter().map(|(_, t)| t.to_string()).collect();
                    if states.is_empty() {
                        return parse_err(lineno, kcol, "at least one state is required");
                    }
                    f = Some(PolynomialVectorField::zero(states.len()));
                    g = Some(PolynomialVectorField::zero(states.len()));
                }
                "f" | "g" => {
                    if states.is_empty() {
                        return parse_err(lineno, kcol, "declare `states` first");
                    }
                    if key_tokens.len() != 2 {
                        return parse_err(
                            lineno,
                            kcol,
                            format!("`{key}` lines read `{key} <state> = coeff [vars]`"),
                        );
                    }
                    let (scol, sname) = key_tokens[1];
                    let Some(row) = states.iter().position(|s| s == sname) else {
                        return parse_err(lineno, scol, format!("unknown state `{sname}`"));
                    };
                    if val_tokens.is_empty() {
                        return parse_err(lineno, eq + 2, "missing coefficient");
                    }
                    let (ccol, ctok) = val_tokens[0];
                    let coeff = parse_f64(ctok, lineno, ccol)?;
                    let mono = parse_monomial(&val_tokens[1..], &states, lineno)?;
                    let field = if key == "f" {
                        f.as_mut().unwrap()
                    } else {
                        g.as_mut().unwrap()
                    };
                    field.add_term(row, mono, coeff)?;
                }
                "c" => {
                    if states.is_empty() {
                        return parse_err(lineno, kcol, "declare `states` first");
                    }
                    let mut vals = Vec::new();
                    for &(col, tok) in &val_tokens {
                        vals.push(parse_f64(tok, lineno, col)?);
                    }
                    if vals.len() != states.len() {
                        return parse_err(
                            lineno,
                            kcol,
                            format!("output vector needs {} entries", states.len()),
                        );
                    }
                    c = Some(vals);
                }
                other => {
                    return parse_err(lineno, kcol, format!("unknown system key `{other}`"));
                }
            },
            Section::OperatingPoint => match key {
                "x0" => {
                    let mut vals = Vec::new();
                    for &(col, tok) in &val_tokens {
                        vals.push(parse_f64(tok, lineno, col)?);
                    }
                    x0 = Some(vals);
                }
                "u0" => {
                    let (col, tok) = val_tokens
                        .first()
                        .copied()
                        .ok_or(Error::Parse {
                            line: lineno,
                            column: eq + 2,
                            message: "missing value".into(),
                        })?;
                    u0 = Some(parse_f64(tok, lineno, col)?);
                }
                "residual_tolerance" => {
                    let (col, tok) = val_tokens
                        .first()
                        .copied()
                        .ok_or(Error::Parse {
                            line: lineno,
                            column: eq + 2,
                            message: "missing value".into(),
                        })?;
                    residual_tolerance = parse_f64(tok, lineno, col)?;
                }
                other => {
                    return parse_err(
                        lineno,
                        kcol,
                        format!("unknown operating point key `{other}`"),
                    );
                }
            },
            Section::Scenario => {
                let first = val_tokens.first().copied();
                let scalar = |fallback_col: usize| -> Result<f64> {
                    let (col, tok) = first.ok_or(Error::Parse {
                        line: lineno,
                        column: fallback_col,
                        message: "missing value".into(),
                    })?;
                    parse_f64(tok, lineno, col)
                };
                match key {
                    "step_amplitude" => scenario.step_amplitude = scalar(eq + 2)?,
                    "horizon" => scenario.horizon = scalar(eq + 2)?,
                    "dt" => scenario.dt = scalar(eq + 2)?,
                    "lambda" => scenario.lambda = scalar(eq + 2)?,
                    "setpoint" => scenario.setpoint = scalar(eq + 2)?,
                    "filter_order" => {
                        let (col, tok) = first.ok_or(Error::Parse {
                            line: lineno,
                            column: eq + 2,
                            message: "missing value".into(),
                        })?;
                        scenario.filter_order = tok.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            column: col,
                            message: format!("expected a positive integer, found `{tok}`"),
                        })?;
                    }
                    "orders" => {
                        let mut orders = Vec::new();
                        for &(col, tok) in &val_tokens {
                            let k: u32 = tok.parse().map_err(|_| Error::Parse {
                                line: lineno,
                                column: col,
                                message: format!("expected an order, found `{tok}`"),
                            })?;
                            orders.push(k);
                        }
                        if orders.is_empty() {
                            return parse_err(lineno, kcol, "at least one order is required");
                        }
                        orders.sort_unstable();
                        orders.dedup();
                        scenario.model_orders = orders;
                    }
                    other => {
                        return parse_err(lineno, kcol, format!("unknown scenario key `{other}`"));
                    }
                }
            }
        }
    }

    if states.is_empty() {
        return parse_err(1, 1, "missing [system] section with `states`");
    }
    let Some(c) = c else {
        return parse_err(1, 1, "missing output vector `c` in [system]");
    };
    let system = InputAffineSystem::new(f.unwrap(), g.unwrap(), c)?;
    let operating_point = match (x0, u0) {
        (Some(x0), Some(u0)) => {
            if x0.len() != states.len() {
                return parse_err(1, 1, "operating point dimension mismatch");
            }
            Some(OperatingPoint::new(x0, u0, residual_tolerance)?)
        }
        (None, None) if !seen_op_section => None,
        _ => return parse_err(1, 1, "[operating_point] needs both `x0` and `u0`"),
    };
    Ok(SystemConfig {
        state_names: states,
        system,
        operating_point,
        scenario,
    })
}

fn monomial_tokens(m: &Monomial, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exponents().iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(names[i].clone()),
            _ => parts.push(format!("{}^{}", names[i], e)),
        }
    }
    parts.join(" ")
}

/// Serializes a configuration back to the text format; floats use the
/// shortest round-trip representation so parse(write(x)) is exact.
pub fn write_config<W: Write>(cfg: &SystemConfig, w: &mut W) -> Result<()> {
    writeln!(w, "[system]")?;
    writeln!(w, "states = {}", cfg.state_names.join(" "))?;
    let dim = cfg.system.dim();
    for (label, field) in [("f", &cfg.system.f), ("g", &cfg.system.g)] {
        for row in 0..dim {
            for (m, coeff) in field.row(row) {
                let tokens = monomial_tokens(m, &cfg.state_names);
                if tokens.is_empty() {
                    writeln!(w, "{label} {} = {}", cfg.state_names[row], coeff)?;
                } else {
                    writeln!(w, "{label} {} = {} {}", cfg.state_names[row], coeff, tokens)?;
                }
            }
        }
    }
    let c_strs: Vec<String> = cfg.system.c.iter().map(|v| v.to_string()).collect();
    writeln!(w, "c = {}", c_strs.join(" "))?;
    if let Some(op) = &cfg.operating_point {
        writeln!(w)?;
        writeln!(w, "[operating_point]")?;
        let x0: Vec<String> = op.x0.iter().map(|v| v.to_string()).collect();
        writeln!(w, "x0 = {}", x0.join(" "))?;
        writeln!(w, "u0 = {}", op.u0)?;
        writeln!(w, "residual_tolerance = {}", op.residual_tolerance)?;
    }
    let s = &cfg.scenario;
    writeln!(w)?;
    writeln!(w, "[scenario]")?;
    writeln!(w, "step_amplitude = {}", s.step_amplitude)?;
    writeln!(w, "horizon = {}", s.horizon)?;
    writeln!(w, "dt = {}", s.dt)?;
    let orders: Vec<String> = s.model_orders.iter().map(|k| k.to_string()).collect();
    writeln!(w, "orders = {}", orders.join(" "))?;
    writeln!(w, "lambda = {}", s.lambda)?;
    writeln!(w, "filter_order = {}", s.filter_order)?;
    writeln!(w, "setpoint = {}", s.setpoint)?;
    Ok(())
}

/// The van de Vusse benchmark as configuration text, as bundled with the
/// command-line tool.
pub fn van_de_vusse_config_text() -> String {
    let (system, op) = crate::plant::van_de_vusse();
    let cfg = SystemConfig {
        state_names: vec!["x1".into(), "x2".into()],
        system,
        operating_point: Some(op),
        scenario: ScenarioConfig::default(),
    };
    let mut buf = Vec::new();
    write_config(&cfg, &mut buf).expect("writing to a buffer cannot fail");
    String::from_utf8(buf).expect("configuration text is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SAMPLE: &str = "\
# benchmark reactor
[system]
states = x1 x2
f x1 = -50 x1
f x1 = -10 x1^2
g x1 = 10
g x1 = -1 x1
f x2 = 50 x1
f x2 = -100 x2
g x2 = -1 x2
c = 0 1

[operating_point]
x0 = 3.0 1.12
u0 = 34.3
residual_tolerance = 0.5

[scenario]
step_amplitude = 20
orders = 1 2 3
";

    #[test]
    fn parses_benchmark_config() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.state_names, vec!["x1", "x2"]);
        let (expect, op) = crate::plant::van_de_vusse();
        assert_eq!(cfg.system, expect);
        let parsed_op = cfg.operating_point.unwrap();
        assert_eq!(parsed_op.x0, op.x0);
        assert_relative_eq!(parsed_op.u0, op.u0);
        assert_eq!(cfg.scenario.model_orders, vec![1, 2, 3]);
        assert_relative_eq!(cfg.scenario.step_amplitude, 20.0);
        // untouched keys keep defaults
        assert_relative_eq!(cfg.scenario.dt, 1e-4);
    }

    #[test]
    fn parse_error_reports_position() {
        let bad = "[system]\nstates = x1\nf x1 = oops x1\nc = 1\n";
        match parse_config(bad) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 8);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_state_is_rejected() {
        let bad = "[system]\nstates = x1\nf x1 = 1 x2\nc = 1\n";
        match parse_config(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_monomial_lines_accumulate() {
        let text = "[system]\nstates = x1\nf x1 = 1 x1\nf x1 = 2 x1\nc = 1\n";
        let cfg = parse_config(text).unwrap();
        let m = Monomial::new(vec![1]);
        assert_relative_eq!(cfg.system.f.coeff(0, &m), 3.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let text = van_de_vusse_config_text();
        let cfg = parse_config(&text).unwrap();
        let (expect, op) = crate::plant::van_de_vusse();
        assert_eq!(cfg.system, expect);
        let parsed_op = cfg.operating_point.unwrap();
        assert_eq!(parsed_op.x0, op.x0);
        assert_eq!(parsed_op.u0, op.u0);
        assert_eq!(cfg.scenario, ScenarioConfig::default());
    }
}
