//! Time-domain realization of Volterra models: the separable-denominator
//! factorization with its partial-fraction expansion (the classical
//! multiplier-network synthesis route), and the bilinear cascade realization
//! used for all simulations.
//!
//! The cascade realizes the order-k homogeneous term of the bilinear model's
//! Volterra series exactly: stage one is the linear model driven by the input,
//! stage k is the same linear dynamics driven by the input multiplied into the
//! previous stage's state.

use crate::carleman::BilinearSystem;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, RationalFunction};
use crate::simulate::SimulationTrace;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Real polynomial in two variables, sparse coefficients keyed by
/// `(degree in s₁, degree in s₂)` in graded order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BivariatePolynomial {
    coeffs: BTreeMap<(u32, u32), f64>,
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        p.add_term(0, 0, c);
        p
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.coeffs.entry((i, j)).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&(i, j));
        }
    }

    pub fn coeff(&self, i: u32, j: u32) -> f64 {
        self.coeffs.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &f64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.coeffs.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0_f64, |a, c| a.max(c.abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(i, j), &c) in &other.coeffs {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        BivariatePolynomial {
            coeffs: self.coeffs.iter().map(|(&k2, &c)| (k2, c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(i1, j1), &c1) in &self.coeffs {
            for (&(i2, j2), &c2) in &other.coeffs {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }

    pub fn eval(&self, s1: Complex64, s2: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| s1.powu(i) * s2.powu(j) * c)
            .sum()
    }

    /// Embeds a univariate polynomial as a function of `s₁`.
    pub fn from_s1(p: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (k, &c) in p.coeffs().iter().enumerate() {
            out.add_term(k as u32, 0, c);
        }
        out
    }

    /// Embeds a univariate polynomial as a function of `s₂`.
    pub fn from_s2(p: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (k, &c) in p.coeffs().iter().enumerate() {
            out.add_term(0, k as u32, c);
        }
        out
    }

    /// Embeds a univariate polynomial evaluated at `s₁ + s₂`.
    pub fn from_sum(p: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (k, &c) in p.coeffs().iter().enumerate() {
            // (s₁+s₂)^k expanded binomially
            let k = k as u32;
            let mut binom = 1.0;
            for i in 0..=k {
                if i > 0 {
                    binom = binom * (k - i + 1) as f64 / i as f64;
                }
                out.add_term(k - i, i, c * binom);
            }
        }
        out
    }

    /// The univariate slice `Q(s, 0)`.
    pub fn slice_s2_zero(&self) -> Polynomial {
        let deg = self
            .coeffs
            .keys()
            .filter(|&&(_, j)| j == 0)
            .map(|&(i, _)| i)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![0.0; deg as usize + 1];
        for (&(i, j), &c) in &self.coeffs {
            if j == 0 {
                coeffs[i as usize] += c;
            }
        }
        Polynomial::new(coeffs)
    }

    /// The univariate slice `Q(0, s)`.
    pub fn slice_s1_zero(&self) -> Polynomial {
        let deg = self
            .coeffs
            .keys()
            .filter(|&&(i, _)| i == 0)
            .map(|&(_, j)| j)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![0.0; deg as usize + 1];
        for (&(i, j), &c) in &self.coeffs {
            if i == 0 {
                coeffs[j as usize] += c;
            }
        }
        Polynomial::new(coeffs)
    }

    /// The univariate slice `Q(s, −s)`.
    pub fn slice_antidiagonal(&self) -> Polynomial {
        let deg = self.total_degree();
        let mut coeffs = vec![0.0; deg as usize + 1];
        for (&(i, j), &c) in &self.coeffs {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(i + j) as usize] += c * sign;
        }
        Polynomial::new(coeffs)
    }
}

impl std::fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), &c) in &self.coeffs {
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
                first = false;
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            let mut printed = false;
            if a != 1.0 || (i == 0 && j == 0) {
                write!(f, "{a}")?;
                printed = true;
            }
            for (var, e) in [("s1", i), ("s2", j)] {
                if e == 0 {
                    continue;
                }
                if printed {
                    write!(f, "*")?;
                }
                if e == 1 {
                    write!(f, "{var}")?;
                } else {
                    write!(f, "{var}^{e}")?;
                }
                printed = true;
            }
        }
        Ok(())
    }
}

/// Factorization `Q₂(s₁,s₂) = scale·Fa(s₁)·Fb(s₂)·Fc(s₁+s₂)` with monic
/// factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableFactorization {
    pub fa: Polynomial,
    pub fb: Polynomial,
    pub fc: Polynomial,
    pub scale: f64,
}

impl SeparableFactorization {
    /// Expands the factorization back to a bivariate polynomial.
    pub fn product(&self) -> BivariatePolynomial {
        BivariatePolynomial::from_s1(&self.fa)
            .mul(&BivariatePolynomial::from_s2(&self.fb))
            .mul(&BivariatePolynomial::from_sum(&self.fc))
            .scale(self.scale)
    }
}

const ROOT_MATCH_TOL: f64 = 1e-8;

fn take_matching(pool: &mut Vec<Complex64>, target: Complex64, tol: f64) -> Option<Complex64> {
    let mut best: Option<(usize, f64)> = None;
    for (i, cand) in pool.iter().enumerate() {
        let d = (cand - target).norm();
        if d <= tol * (1.0 + target.norm()) && best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| pool.remove(i))
}

/// Recovers the separable factorization of `q2` from its three axis slices.
///
/// Roots common to both axis slices are assigned to `Fc`, the remaining roots
/// of `Q(s,0)` to `Fa` and of `Q(0,s)` to `Fb`; the scale comes from matching
/// the largest coefficient, and the product is verified coefficient-wise
/// against the input.
pub fn factor_separable(q2: &BivariatePolynomial) -> Result<SeparableFactorization> {
    if q2.is_zero() {
        return Err(Error::NotSeparable("input polynomial is zero".into()));
    }
    let qa = q2.slice_s2_zero();
    let qb = q2.slice_s1_zero();
    let qc = q2.slice_antidiagonal();
    if qa.is_zero() || qb.is_zero() || qc.is_zero() {
        return Err(Error::NotSeparable(
            "an axis slice vanishes identically".into(),
        ));
    }
    let mut ra = qa.roots()?;
    let mut rb = qb.roots()?;
    // common roots of both axis slices belong to Fc
    let mut fc_roots = Vec::new();
    let mut i = 0;
    while i < ra.len() {
        if take_matching(&mut rb, ra[i], ROOT_MATCH_TOL).is_some() {
            fc_roots.push(ra.remove(i));
        } else {
            i += 1;
        }
    }
    let fa = Polynomial::from_roots(&ra, 1.0, ROOT_MATCH_TOL)?;
    let fb = Polynomial::from_roots(&rb, 1.0, ROOT_MATCH_TOL)?;
    let fc = Polynomial::from_roots(&fc_roots, 1.0, ROOT_MATCH_TOL)?;
    let monic_product = BivariatePolynomial::from_s1(&fa)
        .mul(&BivariatePolynomial::from_s2(&fb))
        .mul(&BivariatePolynomial::from_sum(&fc));
    // scale from the largest-magnitude coefficient of the monic product
    let (&key, &pc) = monic_product
        .terms()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .expect("product of non-zero factors is non-zero");
    let scale = q2.coeff(key.0, key.1) / pc;
    let fact = SeparableFactorization { fa, fb, fc, scale };
    let diff = fact.product().sub(q2);
    let tol = 1e-8 * q2.max_abs_coeff().max(1.0);
    if diff.max_abs_coeff() > tol {
        if !fc_roots.is_empty() {
            return Err(Error::AmbiguousRoots {
                candidates: fc_roots,
            });
        }
        return Err(Error::NotSeparable(format!(
            "product deviates from input by {:e}",
            diff.max_abs_coeff()
        )));
    }
    Ok(fact)
}

/// Splits `num/den` into a constant plus a strictly proper remainder when the
/// top-degree parts of numerator and denominator are proportional:
/// `num = constant·den + remainder`. Returns constant 0 and the numerator
/// unchanged when the tops do not match.
pub fn split_constant(
    num: &BivariatePolynomial,
    den: &BivariatePolynomial,
) -> (f64, BivariatePolynomial) {
    let d = den.total_degree();
    if num.total_degree() != d || d == 0 {
        return (0.0, num.clone());
    }
    let mut ratio: Option<f64> = None;
    for (&(i, j), &c) in den.terms() {
        if i + j < d {
            continue;
        }
        let nc = num.coeff(i, j);
        let r = nc / c;
        match ratio {
            None => ratio = Some(r),
            Some(r0) if (r - r0).abs() <= 1e-9 * (1.0 + r0.abs()) => {}
            Some(_) => return (0.0, num.clone()),
        }
    }
    // the numerator must not carry top-degree terms outside the denominator's
    for (&(i, j), _) in num.terms() {
        if i + j >= d && den.coeff(i, j) == 0.0 && num.coeff(i, j) != 0.0 {
            return (0.0, num.clone());
        }
    }
    let c0 = ratio.unwrap_or(0.0);
    (c0, num.sub(&den.scale(c0)))
}

/// One term `residue / (s − pole)^power` of a partial-fraction expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionTerm {
    pub pole: Complex64,
    pub residue: Complex64,
    pub power: u32,
}

/// Partial-fraction expansion of a univariate rational function.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionExpansion {
    pub polynomial_part: Polynomial,
    pub terms: Vec<PartialFractionTerm>,
}

impl PartialFractionExpansion {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = self.polynomial_part.eval_complex(s);
        for t in &self.terms {
            acc += t.residue / (s - t.pole).powu(t.power);
        }
        acc
    }
}

/// Divides complex-coefficient `p` (ascending) by `(s − root)`, returning the
/// quotient; the remainder is discarded.
fn deflate(p: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let n = p.len();
    let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut carry = p[n - 1];
    for k in (0..n - 1).rev() {
        q[k] = carry;
        carry = p[k] + carry * root;
    }
    q
}

/// Taylor coefficients of `p` (ascending, complex) around `center`, i.e. the
/// coefficients of powers of `(s − center)`.
fn taylor_shift(p: &[Complex64], center: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(p.len());
    let mut work = p.to_vec();
    while !work.is_empty() {
        // synthetic evaluation: remainder of division by (s − center)
        let mut carry = Complex64::new(0.0, 0.0);
        for k in (0..work.len()).rev() {
            carry = work[k] + carry * center;
        }
        out.push(carry);
        if work.len() == 1 {
            break;
        }
        work = deflate(&work, center);
    }
    out
}

const POLE_CLUSTER_TOL: f64 = 1e-6;

/// Expands `r` into a polynomial part plus `Σ residue/(s − pole)^power` terms.
/// Repeated poles are clustered within a relative tolerance and expanded with
/// the full multiplicity structure.
pub fn partial_fractions(r: &RationalFunction) -> Result<PartialFractionExpansion> {
    let den_deg = r.den().degree().ok_or_else(|| {
        Error::InvalidArgument("denominator must have degree at least one".into())
    })?;
    if den_deg == 0 {
        return Err(Error::InvalidArgument(
            "denominator must have degree at least one".into(),
        ));
    }
    let (poly_part, rem) = r.num().div_rem(r.den())?;
    if rem.is_zero() {
        return Ok(PartialFractionExpansion {
            polynomial_part: poly_part,
            terms: vec![],
        });
    }
    let mut roots = r.den().roots()?;
    if roots.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::NumericFailure(
            "denominator root finding produced non-finite poles".into(),
        ));
    }
    // cluster repeated roots
    let mut clusters: Vec<(Complex64, u32)> = Vec::new();
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    for root in roots {
        match clusters.last_mut() {
            Some((center, count))
                if (root - *center).norm() <= POLE_CLUSTER_TOL * (1.0 + center.norm()) =>
            {
                // running mean keeps the cluster centered
                *center = (*center * (*count as f64) + root) / (*count as f64 + 1.0);
                *count += 1;
            }
            _ => clusters.push((root, 1)),
        }
    }
    let rem_c: Vec<Complex64> = rem.coeffs().iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let den_c: Vec<Complex64> = r
        .den()
        .coeffs()
        .iter()
        .map(|&c| Complex64::new(c, 0.0))
        .collect();
    let mut terms = Vec::new();
    for &(pole, mult) in &clusters {
        // deflate the pole out of the denominator
        let mut rest = den_c.clone();
        for _ in 0..mult {
            rest = deflate(&rest, pole);
        }
        // series of num and rest around the pole, divided termwise
        let m = mult as usize;
        let num_series = taylor_shift(&rem_c, pole);
        let den_series = taylor_shift(&rest, pole);
        if den_series[0].norm() == 0.0 {
            return Err(Error::NumericFailure(format!(
                "pole clustering failed near {pole}: deflated denominator vanishes"
            )));
        }
        let mut g = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let mut acc = num_series.get(k).copied().unwrap_or_default();
            for j in 0..k {
                acc -= g[j] * den_series.get(k - j).copied().unwrap_or_default();
            }
            g[k] = acc / den_series[0];
        }
        for j in 1..=m {
            let residue = g[m - j];
            if residue.norm() > 1e-12 {
                terms.push(PartialFractionTerm {
                    pole,
                    residue,
                    power: j as u32,
                });
            }
        }
    }
    Ok(PartialFractionExpansion {
        polynomial_part: poly_part,
        terms,
    })
}

/// Chain of linear stages realizing the homogeneous Volterra terms of a
/// bilinear system: stage one obeys `ż⁽¹⁾ = Az⁽¹⁾ + bu`, stage k obeys
/// `ż⁽ᵏ⁾ = Az⁽ᵏ⁾ + N z⁽ᵏ⁻¹⁾ u`, and `y_k = cᵀz⁽ᵏ⁾`.
#[derive(Debug, Clone)]
pub struct CascadeRealization {
    pub a: DMatrix<f64>,
    pub n_mat: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub max_order: u32,
}

/// Mutable stage states of a cascade run.
#[derive(Debug, Clone)]
pub struct CascadeState {
    stages: Vec<DVector<f64>>,
}

impl CascadeState {
    pub fn stage(&self, k: u32) -> &DVector<f64> {
        &self.stages[(k - 1) as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.stages
            .iter()
            .all(|z| z.iter().all(|v| v.is_finite()))
    }
}

impl CascadeRealization {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn zero_state(&self) -> CascadeState {
        CascadeState {
            stages: vec![DVector::zeros(self.dim()); self.max_order as usize],
        }
    }

    fn rhs(&self, stages: &[DVector<f64>], u: f64) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(stages.len());
        for (k, z) in stages.iter().enumerate() {
            let drive = if k == 0 {
                &self.b * u
            } else {
                (&self.n_mat * &stages[k - 1]) * u
            };
            out.push(&self.a * z + drive);
        }
        out
    }

    /// One RK4 step of the stacked stage dynamics with `u` held constant.
    pub fn step(&self, state: &mut CascadeState, u: f64, dt: f64) {
        let k1 = self.rhs(&state.stages, u);
        let mid1: Vec<DVector<f64>> = state
            .stages
            .iter()
            .zip(&k1)
            .map(|(z, k)| z + k * (dt / 2.0))
            .collect();
        let k2 = self.rhs(&mid1, u);
        let mid2: Vec<DVector<f64>> = state
            .stages
            .iter()
            .zip(&k2)
            .map(|(z, k)| z + k * (dt / 2.0))
            .collect();
        let k3 = self.rhs(&mid2, u);
        let end: Vec<DVector<f64>> = state
            .stages
            .iter()
            .zip(&k3)
            .map(|(z, k)| z + k * dt)
            .collect();
        let k4 = self.rhs(&end, u);
        for (z, (((a, b), c), d)) in state
            .stages
            .iter_mut()
            .zip(k1.into_iter().zip(k2).zip(k3).zip(k4))
        {
            *z += (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0);
        }
    }

    /// Output of the order-k homogeneous term.
    pub fn stage_output(&self, state: &CascadeState, k: u32) -> f64 {
        self.c.dot(state.stage(k))
    }

    /// Time derivative of the order-k output given the current input, i.e.
    /// `cᵀ(Az⁽ᵏ⁾ + N z⁽ᵏ⁻¹⁾u)`.
    pub fn stage_output_derivative(&self, state: &CascadeState, k: u32, u: f64) -> f64 {
        let z = state.stage(k);
        let drive = if k == 1 {
            &self.b * u
        } else {
            (&self.n_mat * state.stage(k - 1)) * u
        };
        self.c.dot(&(&self.a * z + drive))
    }

    /// Sum of the stage outputs for orders `from..=to`.
    pub fn output_range(&self, state: &CascadeState, from: u32, to: u32) -> f64 {
        (from..=to).map(|k| self.stage_output(state, k)).sum()
    }
}

/// Allocates the cascade realization of `bsys` with `max_order` stages.
pub fn build_cascade(bsys: &BilinearSystem, max_order: u32) -> Result<CascadeRealization> {
    if max_order == 0 {
        return Err(Error::InvalidArgument(
            "cascade needs at least one stage".into(),
        ));
    }
    Ok(CascadeRealization {
        a: bsys.a.clone(),
        n_mat: bsys.n_mat.clone(),
        b: bsys.b.clone(),
        c: bsys.c.clone(),
        max_order,
    })
}

/// Fixed-step RK4 simulation of the cascade from zero initial stage states.
/// The trace records `t`, `u`, every homogeneous order (`y1..yn`) and the
/// cumulative output `y_cum`.
pub fn simulate_volterra<F: Fn(f64) -> f64>(
    casc: &CascadeRealization,
    u: F,
    t_end: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    if !(t_end > 0.0) || !(dt > 0.0) || dt >= t_end {
        return Err(Error::InvalidArgument(
            "horizon and step must satisfy 0 < dt < T".into(),
        ));
    }
    let n = casc.max_order;
    let mut names = vec!["t".to_string(), "u".to_string()];
    names.extend((1..=n).map(|k| format!("y{k}")));
    names.push("y_cum".to_string());
    let mut trace = SimulationTrace::new(dt, names)?;
    let mut state = casc.zero_state();
    let steps = (t_end / dt).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let uv = u(t);
        if !state.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        let mut row = Vec::with_capacity(n as usize + 3);
        row.push(t);
        row.push(uv);
        let mut cum = 0.0;
        for j in 1..=n {
            let yj = casc.stage_output(&state, j);
            cum += yj;
            row.push(yj);
        }
        row.push(cum);
        trace.push_row(&row)?;
        if k == steps {
            break;
        }
        casc.step(&mut state, uv, dt);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::lift;
    use crate::plant::{shift_to_deviation, van_de_vusse};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked_example_q2() -> BivariatePolynomial {
        // s₁²s₂ + 4s₁² + 12s₁s₂ + s₁s₂² + 2s₂² + 32s₁ + 20s₂ + 48
        let mut q = BivariatePolynomial::zero();
        q.add_term(2, 1, 1.0);
        q.add_term(2, 0, 4.0);
        q.add_term(1, 1, 12.0);
        q.add_term(1, 2, 1.0);
        q.add_term(0, 2, 2.0);
        q.add_term(1, 0, 32.0);
        q.add_term(0, 1, 20.0);
        q.add_term(0, 0, 48.0);
        q
    }

    fn worked_example_p2() -> BivariatePolynomial {
        let mut p = worked_example_q2();
        p.add_term(1, 0, -20.0);
        p.add_term(0, 1, -20.0);
        p
    }

    #[test]
    fn worked_example_slices() {
        let q = worked_example_q2();
        // Q(0,s) = 2s² + 20s + 48, Q(s,0) = 4s² + 32s + 48, Q(s,−s) = −6s² + 12s + 48
        assert_eq!(q.slice_s1_zero().coeffs(), &[48.0, 20.0, 2.0]);
        assert_eq!(q.slice_s2_zero().coeffs(), &[48.0, 32.0, 4.0]);
        assert_eq!(q.slice_antidiagonal().coeffs(), &[48.0, 12.0, -6.0]);
    }

    #[test]
    fn worked_example_factors() {
        let q = worked_example_q2();
        let f = factor_separable(&q).unwrap();
        assert_relative_eq!(f.scale, 1.0, max_relative = 1e-10);
        let root = |p: &Polynomial| -> f64 {
            assert_eq!(p.degree(), Some(1));
            -p.coeff(0) / p.coeff(1)
        };
        assert_relative_eq!(root(&f.fa), -2.0, max_relative = 1e-8);
        assert_relative_eq!(root(&f.fb), -4.0, max_relative = 1e-8);
        assert_relative_eq!(root(&f.fc), -6.0, max_relative = 1e-8);
    }

    #[test]
    fn constant_factors_as_scale() {
        let q = BivariatePolynomial::constant(3.5);
        let f = factor_separable(&q).unwrap();
        assert_eq!(f.fa, Polynomial::one());
        assert_eq!(f.fb, Polynomial::one());
        assert_eq!(f.fc, Polynomial::one());
        assert_relative_eq!(f.scale, 3.5);
    }

    #[test]
    fn factorization_round_trip_on_random_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let ra: f64 = rng.gen_range(0.5..8.0);
            let rb: f64 = rng.gen_range(0.5..8.0);
            let rc: f64 = rng.gen_range(0.5..8.0);
            let k: f64 = rng.gen_range(0.5..4.0);
            let q = BivariatePolynomial::from_s1(&Polynomial::new(vec![ra, 1.0]))
                .mul(&BivariatePolynomial::from_s2(&Polynomial::new(vec![rb, 1.0])))
                .mul(&BivariatePolynomial::from_sum(&Polynomial::new(vec![rc, 1.0])))
                .scale(k);
            let f = factor_separable(&q).unwrap();
            assert_relative_eq!(f.fa.coeff(0), ra, max_relative = 1e-8);
            assert_relative_eq!(f.fb.coeff(0), rb, max_relative = 1e-8);
            assert_relative_eq!(f.fc.coeff(0), rc, max_relative = 1e-8);
            assert_relative_eq!(f.scale, k, max_relative = 1e-8);
        }
    }

    #[test]
    fn non_separable_is_rejected() {
        // s₁s₂ + 1 has constant axis slices but a genuine cross term
        let mut q = BivariatePolynomial::zero();
        q.add_term(1, 1, 1.0);
        q.add_term(0, 0, 1.0);
        assert!(factor_separable(&q).is_err());
    }

    #[test]
    fn worked_example_constant_split() {
        let (c0, rem) = split_constant(&worked_example_p2(), &worked_example_q2());
        assert_relative_eq!(c0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(rem.coeff(1, 0), -20.0, max_relative = 1e-12);
        assert_relative_eq!(rem.coeff(0, 1), -20.0, max_relative = 1e-12);
        assert_eq!(rem.terms().count(), 2);
    }

    #[test]
    fn textbook_partial_fractions() {
        // 1/((s+1)(s+2)) → 1/(s+1) − 1/(s+2)
        let r = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![2.0, 3.0, 1.0]))
            .unwrap();
        let pf = partial_fractions(&r).unwrap();
        assert!(pf.polynomial_part.is_zero());
        assert_eq!(pf.terms.len(), 2);
        let mut terms = pf.terms.clone();
        terms.sort_by(|a, b| b.pole.re.partial_cmp(&a.pole.re).unwrap());
        assert_relative_eq!(terms[0].pole.re, -1.0, max_relative = 1e-10);
        assert_relative_eq!(terms[0].residue.re, 1.0, max_relative = 1e-10);
        assert_relative_eq!(terms[1].pole.re, -2.0, max_relative = 1e-10);
        assert_relative_eq!(terms[1].residue.re, -1.0, max_relative = 1e-10);
    }

    #[test]
    fn repeated_pole_structure() {
        // (s+3)/(s+1)² = 1/(s+1) + 2/(s+1)²
        let r = RationalFunction::new(
            Polynomial::new(vec![3.0, 1.0]),
            Polynomial::new(vec![1.0, 2.0, 1.0]),
        )
        .unwrap();
        let pf = partial_fractions(&r).unwrap();
        assert_eq!(pf.terms.len(), 2);
        let t1 = pf.terms.iter().find(|t| t.power == 1).unwrap();
        let t2 = pf.terms.iter().find(|t| t.power == 2).unwrap();
        assert_relative_eq!(t1.residue.re, 1.0, max_relative = 1e-9);
        assert_relative_eq!(t2.residue.re, 2.0, max_relative = 1e-9);
        assert_relative_eq!(t1.pole.re, -1.0, max_relative = 1e-6);
    }

    #[test]
    fn improper_function_gets_polynomial_part() {
        // (s² + 3s + 5)/(s + 1) = s + 2 + 3/(s+1)
        let r = RationalFunction::new(
            Polynomial::new(vec![5.0, 3.0, 1.0]),
            Polynomial::new(vec![1.0, 1.0]),
        )
        .unwrap();
        let pf = partial_fractions(&r).unwrap();
        assert_eq!(pf.polynomial_part.coeffs(), &[2.0, 1.0]);
        assert_eq!(pf.terms.len(), 1);
        assert_relative_eq!(pf.terms[0].residue.re, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn reconstruction_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        // mix of real and complex poles plus a polynomial part
        let den = Polynomial::new(vec![2.0, 3.0, 1.0]).mul(&Polynomial::new(vec![5.0, 2.0, 1.0]));
        let num = Polynomial::new(vec![1.0, 4.0, 0.5, 2.0, 0.25]);
        let r = RationalFunction::new(num, den).unwrap();
        let pf = partial_fractions(&r).unwrap();
        for _ in 0..50 {
            let s = Complex64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if r.den().eval_complex(s).norm() < 1e-3 {
                continue;
            }
            let direct = r.eval(s);
            let rebuilt = pf.eval(s);
            assert_relative_eq!(direct.re, rebuilt.re, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(direct.im, rebuilt.im, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    fn benchmark_cascade(lift_order: u32, stages: u32) -> CascadeRealization {
        let (sys, op) = van_de_vusse();
        let dev = shift_to_deviation(&sys, &op).unwrap();
        let bsys = lift(&dev, lift_order).unwrap();
        build_cascade(&bsys, stages).unwrap()
    }

    #[test]
    fn first_stage_is_linear_model() {
        let (sys, op) = van_de_vusse();
        let dev = shift_to_deviation(&sys, &op).unwrap();
        let mut bsys = lift(&dev, 2).unwrap();
        let casc = build_cascade(&bsys, 1).unwrap();
        let trace = simulate_volterra(&casc, |_| 5.0, 0.05, 1e-4).unwrap();
        // zero the coupling and simulate the plain bilinear model: same thing
        bsys.n_mat.fill(0.0);
        let linear = crate::carleman::simulate_bilinear(&bsys, |_| 5.0, 0.05, 1e-4).unwrap();
        let y1 = trace.channel("y1").unwrap();
        let yl = linear.channel("y").unwrap();
        for (a, b) in y1.iter().zip(yl) {
            assert_relative_eq!(a, b, epsilon = 1e-13, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let casc = benchmark_cascade(2, 3);
        let trace = simulate_volterra(&casc, |_| 0.0, 0.01, 1e-4).unwrap();
        for k in 1..=3 {
            let y = trace.channel(&format!("y{k}")).unwrap();
            assert!(y.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn homogeneity_is_exact_for_binary_scalings() {
        let casc = benchmark_cascade(2, 3);
        let base =
            simulate_volterra(&casc, |t| if t < 0.02 { 4.0 } else { 1.0 }, 0.05, 1e-4).unwrap();
        for alpha in [0.5_f64, 2.0, -1.0] {
            let scaled = simulate_volterra(
                &casc,
                |t| alpha * if t < 0.02 { 4.0 } else { 1.0 },
                0.05,
                1e-4,
            )
            .unwrap();
            for k in 1..=3u32 {
                let yb = base.channel(&format!("y{k}")).unwrap();
                let ys = scaled.channel(&format!("y{k}")).unwrap();
                let factor = alpha.powi(k as i32);
                for (b, s) in yb.iter().zip(ys) {
                    let expect = factor * b;
                    assert!(
                        (s - expect).abs() <= 1e-12 * expect.abs(),
                        "homogeneity violated: {s} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn cumulative_steady_outputs_track_benchmark_table() {
        let casc = benchmark_cascade(3, 3);
        let trace = simulate_volterra(&casc, |_| 20.0, 1.0, 1e-4).unwrap();
        let s = |ch: &str| crate::simulate::steady_state(&trace, ch, 0.05).unwrap().mean;
        let y1 = s("y1");
        let y2 = s("y2");
        assert_relative_eq!(y1, 0.1944, epsilon = 1e-3);
        assert_relative_eq!(y1 + y2, 0.09, epsilon = 5e-3);

        let neg = simulate_volterra(&casc, |_| -20.0, 1.0, 1e-4).unwrap();
        let sn = |ch: &str| crate::simulate::steady_state(&neg, ch, 0.05).unwrap().mean;
        assert_relative_eq!(sn("y1"), -0.1944, epsilon = 1e-3);
        assert_relative_eq!(sn("y1") + sn("y2"), -0.2976, epsilon = 5e-3);
    }
}
