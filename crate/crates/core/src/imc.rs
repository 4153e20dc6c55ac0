//! IMC controller synthesis for the Volterra models: all-pass/minimum-phase
//! factorization of the first-order kernel, the IMC filter, the realizable
//! linear controller, and the higher-order correction loop.
//!
//! The controller output is `ũ = C̄·e − (H₁^M)⁻¹[Σ_{k≥2} y_k]` where
//! `C̄ = F·(H₁^M)⁻¹` is the filtered inverse of the minimum-phase part, `e`
//! is the IMC error built from the plant/model mismatch, and the correction
//! subtracts the model-predicted nonlinear output contributions mapped back
//! through the inverse. The improper inverse in the correction path is exact:
//! its polynomial part acts on the stage outputs through their analytic state
//! derivatives, the strictly proper remainder through a small filter state.

use crate::carleman::BilinearSystem;
use crate::error::{Error, Result};
use crate::plant::{InputAffineSystem, OperatingPoint};
use crate::poly::{Polynomial, RationalFunction, StateSpace};
use crate::realization::{build_cascade, CascadeRealization, CascadeState};
use crate::simulate::SimulationTrace;
use crate::volterra::h1_rational;
use nalgebra::DVector;
use num_complex::Complex64;

/// Split of a transfer function into a unit-magnitude all-pass factor holding
/// the right-half-plane zeros and an invertible minimum-phase factor.
#[derive(Debug, Clone)]
pub struct AllPassFactorization {
    pub h_allpass: RationalFunction,
    pub h_minphase: RationalFunction,
}

/// Low-pass IMC filter `F(s) = 1/(1 + λs)^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct IMCFilter {
    pub lambda: f64,
    pub r: u32,
}

impl IMCFilter {
    pub fn new(lambda: f64, r: u32) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "filter time constant must be positive".into(),
            ));
        }
        if r == 0 {
            return Err(Error::InvalidArgument(
                "filter order must be at least one".into(),
            ));
        }
        Ok(IMCFilter { lambda, r })
    }

    /// The filter as a rational function.
    pub fn transfer(&self) -> RationalFunction {
        let mut den = Polynomial::one();
        let factor = Polynomial::new(vec![1.0, self.lambda]);
        for _ in 0..self.r {
            den = den.mul(&factor);
        }
        RationalFunction::new(Polynomial::one(), den).expect("filter denominator is non-zero")
    }
}

const ZERO_REFLECT_TOL: f64 = 1e-9;

/// Factors `h1` into all-pass and minimum-phase parts by reflecting every
/// right-half-plane zero ζ across the imaginary axis: the all-pass part gains
/// the unity-DC factor `(ζ − s)/(ζ + s)` and the minimum-phase part replaces
/// `(s − ζ)` by `(s + ζ)`.
pub fn factor_allpass(h1: &RationalFunction) -> Result<AllPassFactorization> {
    for p in h1.poles()? {
        if p.re >= 0.0 {
            return Err(Error::UnstablePlant);
        }
    }
    let zeros = h1.zeros()?;
    let (rhp, lhp): (Vec<Complex64>, Vec<Complex64>) =
        zeros.into_iter().partition(|z| z.re > 0.0);
    if rhp.is_empty() {
        return Ok(AllPassFactorization {
            h_allpass: RationalFunction::constant(1.0),
            h_minphase: h1.clone(),
        });
    }
    let sign = if rhp.len() % 2 == 0 { 1.0 } else { -1.0 };
    // Π (ζ − s) = (−1)^m Π (s − ζ)
    let ap_num = Polynomial::from_roots(&rhp, sign, ZERO_REFLECT_TOL)?;
    let reflected: Vec<Complex64> = rhp.iter().map(|z| -z).collect();
    let ap_den = Polynomial::from_roots(&reflected, 1.0, ZERO_REFLECT_TOL)?;
    let h_allpass = RationalFunction::new(ap_num, ap_den)?;

    let mut mp_roots = lhp;
    mp_roots.extend(reflected);
    let mp_num = Polynomial::from_roots(&mp_roots, h1.num().leading() * sign, ZERO_REFLECT_TOL)?;
    let h_minphase = RationalFunction::new(mp_num, h1.den().clone())?;
    Ok(AllPassFactorization {
        h_allpass,
        h_minphase,
    })
}

/// The realizable linear controller `C̄ = F·(H₁^M)⁻¹`, reduced and checked for
/// properness.
pub fn linear_controller(
    fact: &AllPassFactorization,
    filt: &IMCFilter,
) -> Result<RationalFunction> {
    let ctrl = filt
        .transfer()
        .mul(&fact.h_minphase.inv()?)?
        .reduced(1e-9)?;
    if !ctrl.is_proper() {
        return Err(Error::ImproperController {
            num_deg: ctrl.num().degree().unwrap_or(0),
            den_deg: ctrl.den().degree().unwrap_or(0),
        });
    }
    Ok(ctrl)
}

/// Exact realization of the improper inverse `(H₁^M)⁻¹ = d₁s + d₀ + R(s)`
/// with `R` strictly proper, applied to cascade stage outputs.
#[derive(Debug, Clone)]
struct InverseMinphase {
    d1: f64,
    d0: f64,
    remainder: Option<StateSpace>,
}

impl InverseMinphase {
    fn build(h_minphase: &RationalFunction) -> Result<Self> {
        // (H^M)^{-1} = den_m / num_m
        let num_m = h_minphase.num();
        let den_m = h_minphase.den();
        let (q, rem) = den_m.div_rem(num_m)?;
        if matches!(q.degree(), Some(d) if d > 1) {
            return Err(Error::InvalidArgument(
                "correction path supports plants of relative degree at most one".into(),
            ));
        }
        let remainder = if rem.is_zero() {
            None
        } else {
            Some(RationalFunction::new(rem, num_m.clone())?.to_state_space()?)
        };
        Ok(InverseMinphase {
            d1: q.coeff(1),
            d0: q.coeff(0),
            remainder,
        })
    }
}

/// IMC-Volterra controller: filtered inverse of the linear model plus the
/// internal Volterra model and the nonlinear correction loop.
#[derive(Debug, Clone)]
pub struct VolterraIMCController {
    /// `C̄ = F·(H₁^M)⁻¹`.
    pub linear_part: RationalFunction,
    pub h1: RationalFunction,
    pub factorization: AllPassFactorization,
    pub filter: IMCFilter,
    /// Internal model, orders `1..=max_order`.
    pub model: CascadeRealization,
    /// Correction cascade; only stage outputs `2..=max_order` feed back.
    pub correction_model: CascadeRealization,
    pub max_order: u32,
    pub correction_enabled: bool,
    ctrl_ss: StateSpace,
    inverse: Option<InverseMinphase>,
}

impl VolterraIMCController {
    /// True when the higher-order correction actually contributes.
    pub fn has_correction(&self) -> bool {
        self.correction_enabled && self.max_order >= 2
    }

    /// Structured text dump of the synthesis chain (12 significant digits).
    pub fn report(&self) -> String {
        let line = |label: &str, p: &Polynomial| -> String {
            let coeffs: Vec<String> = p.coeffs().iter().map(|&c| crate::fmt_sig12(c)).collect();
            format!("{label} = {}\n", coeffs.join(" "))
        };
        let mut out = String::new();
        out.push_str("# ascending coefficient order\n");
        out.push_str(&line("H1 num", self.h1.num()));
        out.push_str(&line("H1 den", self.h1.den()));
        out.push_str(&line("H1_allpass num", self.factorization.h_allpass.num()));
        out.push_str(&line("H1_allpass den", self.factorization.h_allpass.den()));
        out.push_str(&line("H1_minphase num", self.factorization.h_minphase.num()));
        out.push_str(&line("H1_minphase den", self.factorization.h_minphase.den()));
        let f = self.filter.transfer();
        out.push_str(&line("F num", f.num()));
        out.push_str(&line("F den", f.den()));
        out.push_str(&line("C num", self.linear_part.num()));
        out.push_str(&line("C den", self.linear_part.den()));
        out.push_str(&format!("max_order = {}\n", self.max_order));
        out.push_str(&format!(
            "correction_enabled = {}\n",
            self.correction_enabled
        ));
        out
    }
}

/// Builds the IMC-Volterra controller for a bilinear model: first-order kernel
/// → all-pass factorization → filtered inverse, plus the internal model and
/// correction cascades for the requested order.
pub fn build_controller(
    bsys: &BilinearSystem,
    max_order: u32,
    lambda: f64,
    r: u32,
) -> Result<VolterraIMCController> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("model order starts at 1".into()));
    }
    let h1 = h1_rational(bsys)?;
    let factorization = factor_allpass(&h1)?;
    let filter = IMCFilter::new(lambda, r)?;
    let linear_part = linear_controller(&factorization, &filter)?;
    let ctrl_ss = linear_part.to_state_space()?;
    let inverse = if max_order >= 2 {
        Some(InverseMinphase::build(&factorization.h_minphase)?)
    } else {
        None
    };
    Ok(VolterraIMCController {
        linear_part,
        h1,
        factorization,
        filter,
        model: build_cascade(bsys, max_order)?,
        correction_model: build_cascade(bsys, max_order)?,
        max_order,
        correction_enabled: max_order >= 2,
        ctrl_ss,
        inverse,
    })
}

struct RunState {
    ctrl: DVector<f64>,
    model: CascadeState,
    correction: CascadeState,
    remainder: DVector<f64>,
    prev_u: f64,
}

/// Closed-loop step response: the plant runs in physical coordinates, the
/// controller in deviation coordinates around the operating point.
///
/// Per sample: measure the plant output deviation, read the internal model
/// output driven by past controller outputs, form the IMC error
/// `e = setpoint − (ỹ − ŷ)`, subtract the higher-order correction mapped
/// through the minimum-phase inverse (one sample behind, which breaks the
/// algebraic loop), emit `ũ`, and actuate the plant with `u = u_op + ũ` held
/// over the step.
pub fn closed_loop_step(
    plant: &InputAffineSystem,
    op: &OperatingPoint,
    ctrl: &VolterraIMCController,
    setpoint: f64,
    t_end: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    if !(t_end > 0.0) || !(dt > 0.0) || dt >= t_end {
        return Err(Error::InvalidArgument(
            "horizon and step must satisfy 0 < dt < T".into(),
        ));
    }
    if op.x0.len() != plant.dim() {
        return Err(Error::DimensionMismatch {
            expected: plant.dim(),
            got: op.x0.len(),
        });
    }
    let names = vec![
        "t".to_string(),
        "setpoint".to_string(),
        "y".to_string(),
        "u".to_string(),
        "y_model".to_string(),
        "correction".to_string(),
        "u_abs".to_string(),
    ];
    let mut trace = SimulationTrace::new(dt, names)?;
    let y_op = plant.output(&op.x0);
    let rem_dim = ctrl
        .inverse
        .as_ref()
        .and_then(|inv| inv.remainder.as_ref())
        .map_or(0, |ss| ss.dim());
    let mut st = RunState {
        ctrl: DVector::zeros(ctrl.ctrl_ss.dim()),
        model: ctrl.model.zero_state(),
        correction: ctrl.correction_model.zero_state(),
        remainder: DVector::zeros(rem_dim),
        prev_u: 0.0,
    };
    let mut x = DVector::from_column_slice(&op.x0);
    let plant_rhs = |x: &DVector<f64>, u: f64| -> DVector<f64> {
        plant.f.eval(x.as_slice()) + plant.g.eval(x.as_slice()) * u
    };
    let steps = (t_end / dt).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        if !x.iter().all(|v| v.is_finite()) || !st.model.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        let y_dev = plant.output(x.as_slice()) - y_op;
        let y_model = if ctrl.has_correction() {
            ctrl.model.output_range(&st.model, 1, ctrl.max_order)
        } else {
            ctrl.model.stage_output(&st.model, 1)
        };
        let e = setpoint - (y_dev - y_model);
        // higher-order prediction mapped through the minimum-phase inverse
        let (w, correction) = if ctrl.has_correction() {
            let inv = ctrl.inverse.as_ref().expect("built with max_order >= 2");
            let w = ctrl
                .correction_model
                .output_range(&st.correction, 2, ctrl.max_order);
            let wdot: f64 = (2..=ctrl.max_order)
                .map(|j| {
                    ctrl.correction_model
                        .stage_output_derivative(&st.correction, j, st.prev_u)
                })
                .sum();
            let rem_out = inv
                .remainder
                .as_ref()
                .map_or(0.0, |ss| ss.output(&st.remainder, w));
            (w, inv.d1 * wdot + inv.d0 * w + rem_out)
        } else {
            (0.0, 0.0)
        };
        let u_dev = ctrl.ctrl_ss.output(&st.ctrl, e) - correction;
        if !u_dev.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        let u_abs = op.u0 + u_dev;
        trace.push_row(&[t, setpoint, y_dev, u_dev, y_model, correction, u_abs])?;
        if k == steps {
            break;
        }
        // advance everything one step with the sampled signals held
        let k1 = plant_rhs(&x, u_abs);
        let k2 = plant_rhs(&(&x + &k1 * (dt / 2.0)), u_abs);
        let k3 = plant_rhs(&(&x + &k2 * (dt / 2.0)), u_abs);
        let k4 = plant_rhs(&(&x + &k3 * dt), u_abs);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        ctrl.model.step(&mut st.model, u_dev, dt);
        ctrl.correction_model.step(&mut st.correction, u_dev, dt);
        st.ctrl = ctrl.ctrl_ss.rk4_step(&st.ctrl, e, dt);
        if let Some(ss) = ctrl.inverse.as_ref().and_then(|inv| inv.remainder.as_ref()) {
            st.remainder = ss.rk4_step(&st.remainder, w, dt);
        }
        st.prev_u = u_dev;
    }
    Ok(trace)
}

/// Integral Square Control Input over the named channel by the trapezoid rule.
pub fn isci_channel(trace: &SimulationTrace, channel: &str) -> Result<f64> {
    let u = trace.channel(channel)?;
    if u.len() < 2 {
        return Err(Error::InvalidArgument(
            "trace too short for integration".into(),
        ));
    }
    let dt = trace.dt();
    let mut acc = 0.0;
    for pair in u.windows(2) {
        acc += 0.5 * dt * (pair[0] * pair[0] + pair[1] * pair[1]);
    }
    Ok(acc)
}

/// Integral Square Control Input of the deviation input channel `u`.
pub fn isci(trace: &SimulationTrace) -> Result<f64> {
    isci_channel(trace, "u")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::lift;
    use crate::plant::{shift_to_deviation, van_de_vusse};
    use approx::assert_relative_eq;

    fn benchmark_bilinear(order: u32) -> BilinearSystem {
        let (sys, op) = van_de_vusse();
        let dev = shift_to_deviation(&sys, &op).unwrap();
        lift(&dev, order).unwrap()
    }

    #[test]
    fn benchmark_allpass_factorization() {
        let h1 = h1_rational(&benchmark_bilinear(2)).unwrap();
        let f = factor_allpass(&h1).unwrap();
        // minimum-phase part: (1.12 s + 188.384)/(s² + 278.6 s + 19379.49)
        assert_relative_eq!(f.h_minphase.num().coeff(1), 1.12, max_relative = 1e-9);
        assert_relative_eq!(f.h_minphase.num().coeff(0), 188.384, max_relative = 1e-9);
        assert_relative_eq!(f.h_minphase.den().coeff(0), 19379.49, max_relative = 1e-9);
        // all-pass part: (188.384 − 1.12 s)/(188.384 + 1.12 s), checked by value
        let zeta = 188.384 / 1.12;
        for w in [0.0, 1.0, 50.0, 1000.0] {
            let s = Complex64::new(0.0, w);
            let expect = (zeta - s) / (zeta + s);
            let got = f.h_allpass.eval(s);
            assert_relative_eq!(got.re, expect.re, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(got.im, expect.im, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn allpass_unit_modulus_and_product_identity() {
        let h1 = h1_rational(&benchmark_bilinear(2)).unwrap();
        let f = factor_allpass(&h1).unwrap();
        for k in 0..200 {
            let w = 10f64.powf(-2.0 + 6.0 * k as f64 / 199.0);
            let m = f.h_allpass.eval(Complex64::new(0.0, w)).norm();
            assert!((m - 1.0).abs() < 1e-10, "modulus {m} at w={w}");
        }
        let product = f
            .h_allpass
            .mul(&f.h_minphase)
            .unwrap()
            .reduced(1e-9)
            .unwrap();
        let diff_num = product.num().sub(h1.num());
        let diff_den = product.den().sub(h1.den());
        let num_scale = h1.num().coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let den_scale = h1.den().coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for &c in diff_num.coeffs() {
            assert!(c.abs() < 1e-9 * num_scale.max(1.0));
        }
        for &c in diff_den.coeffs() {
            assert!(c.abs() < 1e-9 * den_scale.max(1.0));
        }
    }

    #[test]
    fn minimum_phase_input_passes_through() {
        let h = RationalFunction::new(
            Polynomial::new(vec![1.0, 1.0]),
            Polynomial::new(vec![2.0, 3.0, 1.0]),
        )
        .unwrap();
        let f = factor_allpass(&h).unwrap();
        assert_eq!(f.h_allpass, RationalFunction::constant(1.0));
        assert_eq!(f.h_minphase, h);
    }

    #[test]
    fn synthetic_rhp_zero_is_reflected() {
        // (s − 2)/((s+1)(s+3))
        let h = RationalFunction::new(
            Polynomial::new(vec![-2.0, 1.0]),
            Polynomial::new(vec![3.0, 4.0, 1.0]),
        )
        .unwrap();
        let f = factor_allpass(&h).unwrap();
        // the reflected zero lands at −2; the sign stays with the minimum-phase
        // part so that h_allpass·h_minphase reproduces the input exactly
        assert_relative_eq!(
            f.h_minphase.num().coeff(0) / f.h_minphase.num().coeff(1),
            2.0,
            max_relative = 1e-9
        );
        let product = f
            .h_allpass
            .mul(&f.h_minphase)
            .unwrap()
            .reduced(1e-9)
            .unwrap();
        for k in 0..=2usize {
            assert_relative_eq!(
                product.num().coeff(k),
                h.num().coeff(k),
                epsilon = 1e-9,
                max_relative = 1e-9
            );
            assert_relative_eq!(
                product.den().coeff(k),
                h.den().coeff(k),
                epsilon = 1e-9,
                max_relative = 1e-9
            );
        }
        // all-pass: (2 − s)/(2 + s) with unity DC and unit modulus on the axis
        for k in 0..50 {
            let w = 10f64.powf(-2.0 + 6.0 * k as f64 / 49.0);
            let m = f.h_allpass.eval(Complex64::new(0.0, w)).norm();
            assert!((m - 1.0).abs() < 1e-10);
        }
        assert_relative_eq!(f.h_allpass.eval(Complex64::new(0.0, 0.0)).re, 1.0);
    }

    #[test]
    fn unstable_plant_is_rejected() {
        let h =
            RationalFunction::new(Polynomial::one(), Polynomial::new(vec![-1.0, 1.0])).unwrap();
        assert!(matches!(factor_allpass(&h), Err(Error::UnstablePlant)));
    }

    #[test]
    fn benchmark_linear_controller_coefficients() {
        let h1 = h1_rational(&benchmark_bilinear(2)).unwrap();
        let fact = factor_allpass(&h1).unwrap();
        let filt = IMCFilter::new(0.01, 1).unwrap();
        let ctrl = linear_controller(&fact, &filt).unwrap();
        // (s² + 278.6 s + 19379.49)/(0.0112 s² + 3.00384 s + 188.384), den monic
        assert_relative_eq!(ctrl.num().coeff(2), 1.0 / 0.0112, max_relative = 1e-9);
        assert_relative_eq!(ctrl.num().coeff(1), 278.6 / 0.0112, max_relative = 1e-9);
        assert_relative_eq!(ctrl.num().coeff(0), 19379.49 / 0.0112, max_relative = 1e-9);
        assert_relative_eq!(ctrl.den().coeff(1), 3.00384 / 0.0112, max_relative = 1e-9);
        assert_relative_eq!(ctrl.den().coeff(0), 188.384 / 0.0112, max_relative = 1e-9);
        // cross-check against the published rounded numerator values at 1%
        assert_relative_eq!(ctrl.num().coeff(2), 89.28, max_relative = 1e-2);
        assert_relative_eq!(ctrl.num().coeff(1), 24875.0, max_relative = 1e-2);
        assert_relative_eq!(ctrl.num().coeff(0), 1.729e6, max_relative = 1e-2);
    }

    #[test]
    fn self_cancelling_controller_is_unity() {
        let h_m =
            RationalFunction::new(Polynomial::one(), Polynomial::new(vec![1.0, 1.0])).unwrap();
        let fact = AllPassFactorization {
            h_allpass: RationalFunction::constant(1.0),
            h_minphase: h_m,
        };
        let filt = IMCFilter::new(1.0, 1).unwrap();
        let ctrl = linear_controller(&fact, &filt).unwrap();
        assert_eq!(ctrl.num().degree(), Some(0));
        assert_eq!(ctrl.den().degree(), Some(0));
        assert_relative_eq!(ctrl.dc_gain(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn controller_dc_gain_inverts_minphase() {
        let h1 = h1_rational(&benchmark_bilinear(2)).unwrap();
        let fact = factor_allpass(&h1).unwrap();
        let filt = IMCFilter::new(0.01, 1).unwrap();
        let ctrl = linear_controller(&fact, &filt).unwrap();
        assert_relative_eq!(
            ctrl.dc_gain() * fact.h_minphase.dc_gain(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn too_small_filter_order_is_improper() {
        // minimum-phase part of relative degree two needs r ≥ 2
        let h_m =
            RationalFunction::new(Polynomial::one(), Polynomial::new(vec![2.0, 3.0, 1.0]))
                .unwrap();
        let fact = AllPassFactorization {
            h_allpass: RationalFunction::constant(1.0),
            h_minphase: h_m,
        };
        let filt = IMCFilter::new(0.1, 1).unwrap();
        assert!(matches!(
            linear_controller(&fact, &filt),
            Err(Error::ImproperController { .. })
        ));
    }

    #[test]
    fn first_order_controller_has_no_correction() {
        let ctrl = build_controller(&benchmark_bilinear(2), 1, 0.01, 1).unwrap();
        assert!(!ctrl.has_correction());
        assert_eq!(ctrl.max_order, 1);
    }

    #[test]
    fn setpoint_zero_holds_near_operating_point() {
        let (sys, op) = van_de_vusse();
        let bsys = lift(&shift_to_deviation(&sys, &op).unwrap(), 3).unwrap();
        let ctrl = build_controller(&bsys, 3, 0.01, 1).unwrap();
        let trace = closed_loop_step(&sys, &op, &ctrl, 0.0, 0.3, 1e-4).unwrap();
        let y = trace.channel("y").unwrap();
        let u = trace.channel("u").unwrap();
        assert!(y.iter().all(|v| v.abs() < 4e-3), "output left the band");
        assert!(u.iter().all(|v| v.abs() < 0.5), "input left the band");
        // the residual mismatch settles towards zero deviation
        assert!(y.last().unwrap().abs() < 1e-3);
    }

    #[test]
    fn offset_free_tracking() {
        let (sys, op) = van_de_vusse();
        let bsys = lift(&shift_to_deviation(&sys, &op).unwrap(), 3).unwrap();
        for order in [1u32, 2, 3] {
            let ctrl = build_controller(&bsys, order, 0.01, 1).unwrap();
            for sp in [-0.1, 0.05] {
                let trace = closed_loop_step(&sys, &op, &ctrl, sp, 0.5, 1e-4).unwrap();
                let y = trace.channel("y").unwrap();
                let err = (y.last().unwrap() - sp).abs();
                assert!(
                    err < 0.01 * sp.abs(),
                    "order {order}, setpoint {sp}: offset {err}"
                );
            }
        }
    }

    #[test]
    fn disabled_correction_reduces_to_linear_controller() {
        let (sys, op) = van_de_vusse();
        let bsys = lift(&shift_to_deviation(&sys, &op).unwrap(), 3).unwrap();
        let ctrl1 = build_controller(&bsys, 1, 0.01, 1).unwrap();
        let mut ctrl3 = build_controller(&bsys, 3, 0.01, 1).unwrap();
        ctrl3.correction_enabled = false;
        let t1 = closed_loop_step(&sys, &op, &ctrl1, -0.1, 0.1, 1e-4).unwrap();
        let t3 = closed_loop_step(&sys, &op, &ctrl3, -0.1, 0.1, 1e-4).unwrap();
        for ch in ["y", "u", "y_model", "correction"] {
            let a = t1.channel(ch).unwrap();
            let b = t3.channel(ch).unwrap();
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits(), "channel {ch} diverged");
            }
        }
    }

    #[test]
    fn isci_of_constant_and_ramp() {
        let mut trace = SimulationTrace::new(0.01, vec!["t".into(), "u".into()]).unwrap();
        for k in 0..=1000 {
            trace.push_row(&[k as f64 * 0.01, 1.0]).unwrap();
        }
        assert_relative_eq!(isci(&trace).unwrap(), 10.0, max_relative = 1e-12);

        let mut ramp = SimulationTrace::new(1e-4, vec!["t".into(), "u".into()]).unwrap();
        for k in 0..=10000 {
            let t = k as f64 * 1e-4;
            ramp.push_row(&[t, t]).unwrap();
        }
        assert_relative_eq!(isci(&ramp).unwrap(), 1.0 / 3.0, epsilon = 1e-6);
    }
}
