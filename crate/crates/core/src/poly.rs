//! Univariate real polynomials and rational functions.
//!
//! Coefficients are stored in ascending degree order. Root finding goes through
//! the companion-matrix eigenvalue route, which is robust for the low degrees
//! that transfer functions in this crate reach.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Tolerance used when trimming coefficients that are exactly representable
/// noise (relative to the largest coefficient).
const TRIM_REL: f64 = 1e-13;

/// Real polynomial in one variable, ascending coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Polynomial {
            coeffs: vec![0.0, 1.0],
        }
    }

    fn trim(&mut self) {
        let max = self
            .coeffs
            .iter()
            .fold(0.0_f64, |acc, c| acc.max(c.abs()));
        if max == 0.0 {
            self.coeffs.clear();
            return;
        }
        while let Some(&last) = self.coeffs.last() {
            if last == 0.0 || last.abs() < max * TRIM_REL {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^k` (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, item) in out.iter_mut().enumerate() {
            *item = self.coeff(i) + other.coeff(i);
        }
        Polynomial::new(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Divides by `other`, returning `(quotient, remainder)`.
    pub fn div_rem(&self, other: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if other.is_zero() {
            return Err(Error::InvalidArgument("division by zero polynomial".into()));
        }
        let dd = other.degree().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() < other.coeffs.len() {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        let lead = other.leading();
        for k in (dd..rem.len()).rev() {
            let q = rem[k] / lead;
            quot[k - dd] = q;
            for (j, &c) in other.coeffs.iter().enumerate() {
                rem[k - dd + j] -= q * c;
            }
        }
        rem.truncate(dd);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }

    /// Monic copy (leading coefficient 1).
    pub fn monic(&self) -> Polynomial {
        let lead = self.leading();
        if lead == 0.0 {
            return self.clone();
        }
        self.scale(1.0 / lead)
    }

    /// Complex roots via companion-matrix eigenvalues.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let deg = match self.degree() {
            None => {
                return Err(Error::InvalidArgument(
                    "zero polynomial has no root set".into(),
                ))
            }
            Some(0) => return Ok(vec![]),
            Some(d) => d,
        };
        let lead = self.leading();
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let eig = comp.complex_eigenvalues();
        Ok(eig.iter().copied().collect())
    }

    /// Rebuilds a real-coefficient polynomial from complex roots; conjugate
    /// pairs are matched within `tol` and merged into quadratic factors.
    pub fn from_roots(roots: &[Complex64], leading: f64, tol: f64) -> Result<Polynomial> {
        let mut remaining: Vec<Complex64> = roots.to_vec();
        let mut p = Polynomial::constant(leading);
        while let Some(r) = remaining.pop() {
            if r.im.abs() <= tol * (1.0 + r.re.abs()) {
                p = p.mul(&Polynomial::new(vec![-r.re, 1.0]));
                continue;
            }
            let conj = r.conj();
            let mut best: Option<(usize, f64)> = None;
            for (i, cand) in remaining.iter().enumerate() {
                let d = (cand - conj).norm();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            match best {
                Some((i, d)) if d <= tol * (1.0 + r.norm()) * 100.0 => {
                    remaining.remove(i);
                    // (s - r)(s - r̄) = s² - 2 Re(r) s + |r|²
                    p = p.mul(&Polynomial::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0]));
                }
                _ => {
                    return Err(Error::NumericFailure(format!(
                        "unpaired complex root {r} while rebuilding real polynomial"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
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
            match k {
                0 => write!(f, "{a}")?,
                1 => {
                    if a != 1.0 {
                        write!(f, "{a}")?;
                    }
                    write!(f, "s")?;
                }
                _ => {
                    if a != 1.0 {
                        write!(f, "{a}")?;
                    }
                    write!(f, "s^{k}")?;
                }
            }
        }
        Ok(())
    }
}

/// Ratio of two real polynomials, stored with a monic denominator (any gain is
/// carried by the numerator).
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument(
                "rational function denominator is zero".into(),
            ));
        }
        let lead = den.leading();
        Ok(RationalFunction {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn constant(c: f64) -> Self {
        RationalFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.num.coeff(0) / self.den.coeff(0)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() {
            return Ok(vec![]);
        }
        self.num.roots()
    }

    pub fn mul(&self, other: &RationalFunction) -> Result<RationalFunction> {
        RationalFunction::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn inv(&self) -> Result<RationalFunction> {
        if self.num.is_zero() {
            return Err(Error::InvalidArgument(
                "cannot invert the zero rational function".into(),
            ));
        }
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    /// Denominator degree minus numerator degree.
    pub fn relative_degree(&self) -> i64 {
        let nd = self.num.degree().map_or(0, |d| d as i64);
        let dd = self.den.degree().map_or(0, |d| d as i64);
        if self.num.is_zero() {
            dd
        } else {
            dd - nd
        }
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    /// Cancels numerator/denominator root pairs that agree within `tol`,
    /// returning the reduced function.
    pub fn reduced(&self, tol: f64) -> Result<RationalFunction> {
        if self.num.is_zero() {
            return Ok(self.clone());
        }
        let mut zeros = self.num.roots()?;
        let mut poles = self.den.roots()?;
        let num_lead = self.num.leading();
        let mut cancelled = false;
        let mut i = 0;
        while i < zeros.len() {
            let mut matched = None;
            for (j, p) in poles.iter().enumerate() {
                if (zeros[i] - p).norm() <= tol * (1.0 + p.norm()) {
                    matched = Some(j);
                    break;
                }
            }
            if let Some(j) = matched {
                zeros.remove(i);
                poles.remove(j);
                cancelled = true;
            } else {
                i += 1;
            }
        }
        if !cancelled {
            return Ok(self.clone());
        }
        let num = Polynomial::from_roots(&zeros, num_lead, 1e-9)?;
        let den = Polynomial::from_roots(&poles, 1.0, 1e-9)?;
        RationalFunction::new(num, den)
    }

    /// Controllable-canonical state space `(A, B, C, D)` with `y = Cx + Du`.
    /// Requires a proper function.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        if !self.is_proper() {
            return Err(Error::ImproperController {
                num_deg: self.num.degree().unwrap_or(0),
                den_deg: self.den.degree().unwrap_or(0),
            });
        }
        let n = self.den.degree().unwrap_or(0);
        if n == 0 {
            return Ok(StateSpace {
                a: DMatrix::zeros(0, 0),
                b: DVector::zeros(0),
                c: DVector::zeros(0),
                d: self.dc_gain(),
            });
        }
        // den is already monic
        let d = self.num.coeff(n);
        // strictly proper remainder: num - d * den
        let rem = self.num.sub(&self.den.scale(d));
        let mut a = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -self.den.coeff(n - 1 - j);
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[0] = 1.0;
        let mut c = DVector::<f64>::zeros(n);
        for j in 0..n {
            c[j] = rem.coeff(n - 1 - j);
        }
        Ok(StateSpace { a, b, c, d })
    }
}

impl std::fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// Single-input single-output state space realization.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        self.c.dot(x) + self.d * u
    }

    /// One RK4 step of `ẋ = Ax + Bu` with `u` held constant.
    pub fn rk4_step(&self, x: &DVector<f64>, u: f64, dt: f64) -> DVector<f64> {
        let f = |x: &DVector<f64>| &self.a * x + &self.b * u;
        let k1 = f(x);
        let k2 = f(&(x + &k1 * (dt / 2.0)));
        let k3 = f(&(x + &k2 * (dt / 2.0)));
        let k4 = f(&(x + &k3 * dt));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    }
}
