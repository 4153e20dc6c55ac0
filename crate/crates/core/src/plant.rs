//! Polynomial input-affine systems, deviation shifts and the van de Vusse
//! benchmark reactor.
//!
//! Systems have the shape `ẋ = f(x) + g(x)·u, y = c·x` with `f` and `g`
//! multivariate polynomial maps stored sparsely as monomial → coefficient
//! tables.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Power product of the state variables, one exponent per variable.
///
/// Monomials are totally ordered by (total degree, maximum exponent,
/// lexicographically descending exponents), which lists products of distinct
/// variables before pure powers within a degree: for two states the degree-two
/// block reads `z1*z2, z1^2, z2^2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    /// The constant monomial (all exponents zero).
    pub fn constant(dim: usize) -> Self {
        Monomial {
            exponents: vec![0; dim],
        }
    }

    /// The single variable `x_i` (zero-based index).
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Monomial { exponents: e }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// ∂m/∂x_i as `(factor, reduced monomial)`, or `None` when the variable is
    /// absent.
    pub fn derivative(&self, i: usize) -> Option<(f64, Monomial)> {
        let e = self.exponents[i];
        if e == 0 {
            return None;
        }
        let mut reduced = self.exponents.clone();
        reduced[i] -= 1;
        Some((e as f64, Monomial { exponents: reduced }))
    }

    /// Renders the monomial with the given variable names, e.g. `z1^2*z2`.
    pub fn label(&self, names: &[String]) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        for (i, &e) in self.exponents.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(names[i].clone()),
                _ => parts.push(format!("{}^{}", names[i], e)),
            }
        }
        parts.join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| {
                let ma = self.exponents.iter().max().copied().unwrap_or(0);
                let mb = other.exponents.iter().max().copied().unwrap_or(0);
                ma.cmp(&mb)
            })
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate polynomial map ℝⁿ → ℝⁿ, one sparse coefficient table per
/// output row. Zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialVectorField {
    dim: usize,
    rows: Vec<BTreeMap<Monomial, f64>>,
}

impl PolynomialVectorField {
    pub fn zero(dim: usize) -> Self {
        PolynomialVectorField {
            dim,
            rows: vec![BTreeMap::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `coeff · monomial` to row `row`, accumulating with any existing
    /// entry and pruning exact zeros.
    pub fn add_term(&mut self, row: usize, monomial: Monomial, coeff: f64) -> Result<()> {
        if monomial.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: monomial.dim(),
            });
        }
        if row >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "row {row} out of range for dimension {}",
                self.dim
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument(
                "non-finite polynomial coefficient".into(),
            ));
        }
        let entry = self.rows[row].entry(monomial.clone()).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.rows[row].remove(&monomial);
        }
        Ok(())
    }

    pub fn row(&self, row: usize) -> &BTreeMap<Monomial, f64> {
        &self.rows[row]
    }

    pub fn coeff(&self, row: usize, monomial: &Monomial) -> f64 {
        self.rows[row].get(monomial).copied().unwrap_or(0.0)
    }

    pub fn eval_row(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row]
            .iter()
            .map(|(m, &c)| c * m.eval(x))
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim, (0..self.dim).map(|r| self.eval_row(r, x)))
    }

    /// Jacobian matrix evaluated at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (m, &c) in &self.rows[r] {
                for i in 0..self.dim {
                    if let Some((factor, reduced)) = m.derivative(i) {
                        jac[(r, i)] += c * factor * reduced.eval(x);
                    }
                }
            }
        }
        jac
    }

    pub fn max_degree(&self) -> u32 {
        self.rows
            .iter()
            .flat_map(|row| row.keys().map(|m| m.degree()))
            .max()
            .unwrap_or(0)
    }

    /// Recenters the map: returns `q` with `q(z) = p(z + x0)` via exact
    /// binomial expansion.
    pub fn shifted(&self, x0: &[f64]) -> Result<PolynomialVectorField> {
        if x0.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x0.len(),
            });
        }
        let mut out = PolynomialVectorField::zero(self.dim);
        for r in 0..self.dim {
            for (m, &c) in &self.rows[r] {
                // expand c · Π (z_i + x0_i)^{e_i}
                let mut terms: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), c)];
                for (i, &e) in m.exponents().iter().enumerate() {
                    let mut next = Vec::with_capacity(terms.len() * (e as usize + 1));
                    for (exps, coeff) in &terms {
                        for k in 0..=e {
                            let mut exps2 = exps.clone();
                            exps2.push(k);
                            let w = binomial(e, k) * x0[i].powi((e - k) as i32);
                            next.push((exps2, coeff * w));
                        }
                    }
                    terms = next;
                }
                for (exps, coeff) in terms {
                    if coeff != 0.0 {
                        out.add_term(r, Monomial::new(exps), coeff)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Scalar-input scalar-output polynomial system `ẋ = f(x) + g(x)·u, y = c·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputAffineSystem {
    pub f: PolynomialVectorField,
    pub g: PolynomialVectorField,
    pub c: Vec<f64>,
}

impl InputAffineSystem {
    pub fn new(f: PolynomialVectorField, g: PolynomialVectorField, c: Vec<f64>) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: g.dim(),
            });
        }
        if c.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: c.len(),
            });
        }
        Ok(InputAffineSystem { f, g, c })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(ci, xi)| ci * xi).sum()
    }

    /// A purely linear system `ẋ = Ax + bu, y = cx` as a polynomial system.
    pub fn from_linear(a: &DMatrix<f64>, b: &DVector<f64>, c: &[f64]) -> Result<Self> {
        let dim = b.len();
        if a.nrows() != dim || a.ncols() != dim || c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.nrows(),
            });
        }
        let mut f = PolynomialVectorField::zero(dim);
        let mut g = PolynomialVectorField::zero(dim);
        for r in 0..dim {
            for j in 0..dim {
                if a[(r, j)] != 0.0 {
                    f.add_term(r, Monomial::variable(dim, j), a[(r, j)])?;
                }
            }
            if b[r] != 0.0 {
                g.add_term(r, Monomial::constant(dim), b[r])?;
            }
        }
        InputAffineSystem::new(f, g, c.to_vec())
    }
}

/// Operating point `(x0, u0)` in physical units, with the residual magnitude
/// allowed when dropping the leftover constant terms of a deviation shift.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub x0: Vec<f64>,
    pub u0: f64,
    pub residual_tolerance: f64,
}

impl OperatingPoint {
    pub fn new(x0: Vec<f64>, u0: f64, residual_tolerance: f64) -> Result<Self> {
        if residual_tolerance <= 0.0 {
            return Err(Error::InvalidArgument(
                "residual tolerance must be positive".into(),
            ));
        }
        Ok(OperatingPoint {
            x0,
            u0,
            residual_tolerance,
        })
    }
}

/// Evaluates `f(x) + g(x)·u`.
pub fn eval_derivative(sys: &InputAffineSystem, x: &[f64], u: f64) -> Result<DVector<f64>> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) || !u.is_finite() {
        return Err(Error::InvalidArgument(
            "non-finite state or input value".into(),
        ));
    }
    Ok(sys.f.eval(x) + sys.g.eval(x) * u)
}

/// Rewrites the system in deviation coordinates `z = x − x0`, `ũ = u − u0`.
///
/// The drift of the shifted system picks up the residual `f(x0) + g(x0)·u0`
/// as constant terms; residuals below the operating point's tolerance are
/// dropped, larger ones are an error since the point is too far from an
/// equilibrium for the deviation model to make sense.
pub fn shift_to_deviation(
    sys: &InputAffineSystem,
    op: &OperatingPoint,
) -> Result<InputAffineSystem> {
    if op.x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: op.x0.len(),
        });
    }
    let g_shifted = sys.g.shifted(&op.x0)?;
    let f_shifted = sys.f.shifted(&op.x0)?;
    // ẋ = f(z+x0) + g(z+x0)(ũ+u0) = [f̃ + g̃·u0] + g̃·ũ
    let dim = sys.dim();
    let mut drift = PolynomialVectorField::zero(dim);
    for r in 0..dim {
        for (m, &c) in f_shifted.row(r) {
            drift.add_term(r, m.clone(), c)?;
        }
        for (m, &c) in g_shifted.row(r) {
            drift.add_term(r, m.clone(), c * op.u0)?;
        }
    }
    // drop or reject residual constants
    let constant = Monomial::constant(dim);
    let mut cleaned = PolynomialVectorField::zero(dim);
    for r in 0..dim {
        for (m, &c) in drift.row(r) {
            if m.is_constant() {
                if c.abs() >= op.residual_tolerance {
                    return Err(Error::NotAnEquilibrium {
                        state: format!("x{}", r + 1),
                        residual: c,
                        tolerance: op.residual_tolerance,
                    });
                }
                continue;
            }
            cleaned.add_term(r, m.clone(), c)?;
        }
        debug_assert_eq!(cleaned.coeff(r, &constant), 0.0);
    }
    InputAffineSystem::new(cleaned, g_shifted, sys.c.clone())
}

/// The van de Vusse reactor in physical coordinates together with its
/// operating point (concentrations in mol·l⁻¹, dilution rate in h⁻¹):
///
/// ẋ₁ = −50·x₁ − 10·x₁² + u·(10 − x₁)
/// ẋ₂ =  50·x₁ − 100·x₂ − u·x₂,   y = x₂
pub fn van_de_vusse() -> (InputAffineSystem, OperatingPoint) {
    let dim = 2;
    let x1 = Monomial::variable(dim, 0);
    let x2 = Monomial::variable(dim, 1);
    let x1sq = Monomial::new(vec![2, 0]);
    let one = Monomial::constant(dim);

    let mut f = PolynomialVectorField::zero(dim);
    f.add_term(0, x1.clone(), -50.0).unwrap();
    f.add_term(0, x1sq, -10.0).unwrap();
    f.add_term(1, x1.clone(), 50.0).unwrap();
    f.add_term(1, x2.clone(), -100.0).unwrap();

    let mut g = PolynomialVectorField::zero(dim);
    g.add_term(0, one, 10.0).unwrap();
    g.add_term(0, x1, -1.0).unwrap();
    g.add_term(1, x2, -1.0).unwrap();

    let sys = InputAffineSystem::new(f, g, vec![0.0, 1.0]).unwrap();
    let op = OperatingPoint::new(vec![3.0, 1.12], 34.3, 0.5).unwrap();
    (sys, op)
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 60;

/// Solves `f(x) + g(x)·u = 0` by damped Newton iteration from `guess`.
pub fn find_equilibrium(
    sys: &InputAffineSystem,
    u_const: f64,
    guess: &[f64],
) -> Result<DVector<f64>> {
    if guess.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: guess.len(),
        });
    }
    if !u_const.is_finite() || !guess.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(
            "non-finite input or guess".into(),
        ));
    }
    let mut x = DVector::from_column_slice(guess);
    let residual = |x: &DVector<f64>| -> DVector<f64> {
        sys.f.eval(x.as_slice()) + sys.g.eval(x.as_slice()) * u_const
    };
    let mut r = residual(&x);
    for _ in 0..NEWTON_MAX_ITER {
        let rnorm = r.norm();
        if rnorm < NEWTON_TOL {
            return Ok(x);
        }
        let jac = sys.f.jacobian(x.as_slice()) + sys.g.jacobian(x.as_slice()) * u_const;
        let delta = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::ConvergenceFailure { residual: rnorm })?;
        // backtracking damping
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &x + &delta * alpha;
            let rt = residual(&trial);
            if rt.norm() < rnorm {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::ConvergenceFailure { residual: rnorm });
        }
    }
    let rnorm = r.norm();
    if rnorm < NEWTON_TOL {
        Ok(x)
    } else {
        Err(Error::ConvergenceFailure { residual: rnorm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, dim: usize, max_deg: u32, constants: bool) -> PolynomialVectorField {
        let mut field = PolynomialVectorField::zero(dim);
        for r in 0..dim {
            for _ in 0..5 {
                let exps: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..=max_deg)).collect();
                let m = Monomial::new(exps);
                if m.degree() > max_deg || (!constants && m.is_constant()) {
                    continue;
                }
                field.add_term(r, m, rng.gen_range(-2.0..2.0)).unwrap();
            }
        }
        field
    }

    #[test]
    fn monomial_order_matches_basis_convention() {
        let z1 = Monomial::new(vec![1, 0]);
        let z2 = Monomial::new(vec![0, 1]);
        let z1z2 = Monomial::new(vec![1, 1]);
        let z1sq = Monomial::new(vec![2, 0]);
        let z2sq = Monomial::new(vec![0, 2]);
        let mut v = vec![z2sq.clone(), z1sq.clone(), z1z2.clone(), z2.clone(), z1.clone()];
        v.sort();
        assert_eq!(v, vec![z1, z2, z1z2, z1sq, z2sq]);
    }

    #[test]
    fn derivative_at_operating_point() {
        let (sys, _) = van_de_vusse();
        let d = eval_derivative(&sys, &[3.0, 1.12], 34.3).unwrap();
        // hand substitution: -50·3 - 10·9 + 34.3·7 = 0.1 ; 50·3 - 100·1.12 - 34.3·1.12 = -0.416
        assert_relative_eq!(d[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(d[1], -0.416, epsilon = 1e-12);
    }

    #[test]
    fn derivative_zero_at_origin_without_constants() {
        let (sys, _) = van_de_vusse();
        // f has no constant terms, g does, so u = 0 keeps the origin fixed
        let d = eval_derivative(&sys, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn derivative_matches_matrix_arithmetic_for_linear_system() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.25, -2.0]);
        let b = DVector::from_column_slice(&[1.0, -1.0]);
        let sys = InputAffineSystem::from_linear(&a, &b, &[1.0, 0.0]).unwrap();
        let x = DVector::from_column_slice(&[0.7, -0.3]);
        let u = 1.3;
        let d = eval_derivative(&sys, x.as_slice(), u).unwrap();
        let expect = &a * &x + &b * u;
        assert_relative_eq!(d[0], expect[0], epsilon = 1e-14);
        assert_relative_eq!(d[1], expect[1], epsilon = 1e-14);
    }

    #[test]
    fn derivative_rejects_dimension_mismatch() {
        let (sys, _) = van_de_vusse();
        assert!(matches!(
            eval_derivative(&sys, &[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn shift_reproduces_deviation_model() {
        let (sys, op) = van_de_vusse();
        let dev = shift_to_deviation(&sys, &op).unwrap();
        let dim = 2;
        let z1 = Monomial::variable(dim, 0);
        let z2 = Monomial::variable(dim, 1);
        let z1sq = Monomial::new(vec![2, 0]);
        let one = Monomial::constant(dim);
        // ż₁ = −144.3 z₁ − 10 z₁² + 7ũ − ũ z₁
        assert_relative_eq!(dev.f.coeff(0, &z1), -144.3, epsilon = 1e-12);
        assert_relative_eq!(dev.f.coeff(0, &z1sq), -10.0, epsilon = 1e-12);
        assert_relative_eq!(dev.g.coeff(0, &one), 7.0, epsilon = 1e-12);
        assert_relative_eq!(dev.g.coeff(0, &z1), -1.0, epsilon = 1e-12);
        // ż₂ = 50 z₁ − 134.3 z₂ − ũ z₂ − 1.12 ũ
        assert_relative_eq!(dev.f.coeff(1, &z1), 50.0, epsilon = 1e-12);
        assert_relative_eq!(dev.f.coeff(1, &z2), -134.3, epsilon = 1e-12);
        assert_relative_eq!(dev.g.coeff(1, &one), -1.12, epsilon = 1e-12);
        assert_relative_eq!(dev.g.coeff(1, &z2), -1.0, epsilon = 1e-12);
        // residual constants dropped
        assert_eq!(dev.f.coeff(0, &one), 0.0);
        assert_eq!(dev.f.coeff(1, &one), 0.0);
    }

    #[test]
    fn zero_shift_is_identity() {
        let (sys, _) = van_de_vusse();
        let op = OperatingPoint::new(vec![0.0, 0.0], 0.0, 1e-9).unwrap();
        let dev = shift_to_deviation(&sys, &op).unwrap();
        assert_eq!(dev, sys);
    }

    #[test]
    fn tight_tolerance_rejects_non_equilibrium() {
        let (sys, _) = van_de_vusse();
        let op = OperatingPoint::new(vec![3.0, 1.12], 34.3, 0.05).unwrap();
        match shift_to_deviation(&sys, &op) {
            Err(Error::NotAnEquilibrium { residual, .. }) => {
                assert!(residual.abs() > 0.05);
            }
            other => panic!("expected NotAnEquilibrium, got {other:?}"),
        }
    }

    #[test]
    fn recentering_is_exact_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let dim = rng.gen_range(1..=3);
            let f = random_field(&mut rng, dim, 3, true);
            let g = random_field(&mut rng, dim, 2, true);
            let mut c = vec![0.0; dim];
            c[0] = 1.0;
            let sys = InputAffineSystem::new(f, g, c).unwrap();
            let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let u0: f64 = rng.gen_range(-1.0..1.0);
            // before constant dropping: the raw recentered fields agree exactly
            let f_sh = sys.f.shifted(&x0).unwrap();
            let g_sh = sys.g.shifted(&x0).unwrap();
            // after dropping: the deviation system differs by the residual only
            let op = OperatingPoint::new(x0.clone(), u0, f64::INFINITY).unwrap();
            let dev = shift_to_deviation(&sys, &op).unwrap();
            let residual = eval_derivative(&sys, &x0, u0).unwrap();
            for _ in 0..5 {
                let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ut: f64 = rng.gen_range(-1.0..1.0);
                let x: Vec<f64> = z.iter().zip(&x0).map(|(zi, xi)| zi + xi).collect();
                let rhs = eval_derivative(&sys, &x, ut + u0).unwrap();
                let raw = f_sh.eval(&z) + g_sh.eval(&z) * (ut + u0);
                let dropped = eval_derivative(&dev, &z, ut).unwrap();
                for i in 0..dim {
                    assert_relative_eq!(raw[i], rhs[i], epsilon = 1e-12, max_relative = 1e-10);
                    assert_relative_eq!(
                        dropped[i] + residual[i],
                        rhs[i],
                        epsilon = 1e-12,
                        max_relative = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn shift_round_trip_restores_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dim = rng.gen_range(1..=3);
            let f = random_field(&mut rng, dim, 3, true);
            let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shifted = f.shifted(&x0).unwrap();
            let neg: Vec<f64> = x0.iter().map(|v| -v).collect();
            let back = shifted.shifted(&neg).unwrap();
            for r in 0..dim {
                for (m, &c) in f.row(r) {
                    assert_relative_eq!(back.coeff(r, m), c, epsilon = 1e-12, max_relative = 1e-10);
                }
                for (m, &c) in back.row(r) {
                    assert_relative_eq!(f.coeff(r, m), c, epsilon = 1e-12, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn equilibrium_matches_quadratic_formula() {
        let (sys, _) = van_de_vusse();
        // steady state of ẋ₁ = 0 at constant input: 10·x₁² + (50+u)·x₁ − 10·u = 0
        let quad = |u: f64| {
            let ca = (-(50.0 + u) + ((50.0 + u).powi(2) + 400.0 * u).sqrt()) / 20.0;
            let cb = 50.0 * ca / (100.0 + u);
            (ca, cb)
        };
        for u in [34.3, 54.3, 14.3] {
            let x = find_equilibrium(&sys, u, &[3.0, 1.1]).unwrap();
            let (ca, cb) = quad(u);
            assert_relative_eq!(x[0], ca, epsilon = 1e-9);
            assert_relative_eq!(x[1], cb, epsilon = 1e-9);
            let r = eval_derivative(&sys, x.as_slice(), u).unwrap();
            assert!(r.norm() < 1e-10, "residual {} too large", r.norm());
        }
    }

    #[test]
    fn equilibrium_of_linear_system_is_direct_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -3.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let sys = InputAffineSystem::from_linear(&a, &b, &[1.0, 0.0]).unwrap();
        let u = 1.7;
        let x = find_equilibrium(&sys, u, &[0.0, 0.0]).unwrap();
        let direct = a.clone().lu().solve(&(-&b * u)).unwrap();
        assert_relative_eq!(x[0], direct[0], epsilon = 1e-10);
        assert_relative_eq!(x[1], direct[1], epsilon = 1e-10);
    }
}
