//! Bilinear lifting of deviation-form polynomial systems over a non-redundant
//! monomial basis, and fixed-step simulation of the lifted model.
//!
//! The lifted state collects every monomial of the original state up to the
//! truncation order; its time derivative follows from the product rule, with
//! monomials above the truncation order discarded. The result is
//! `ż = Az + Nzu + bu, y = cᵀz` where `z` is the monomial vector.

use crate::error::{Error, Result};
use crate::plant::{InputAffineSystem, Monomial};
use crate::simulate::SimulationTrace;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::io::Write;

/// Ordered, duplicate-free collection of the state monomials of degree
/// `1..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    dim: usize,
    order: u32,
    entries: Vec<Monomial>,
    index: BTreeMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Degree of the monomial behind basis position `i`.
    pub fn degree_of(&self, i: usize) -> u32 {
        self.entries[i].degree()
    }

    /// Channel labels such as `z1, z2, z1*z2, ...`.
    pub fn labels(&self) -> Vec<String> {
        let names: Vec<String> = (1..=self.dim).map(|i| format!("z{i}")).collect();
        self.entries.iter().map(|m| m.label(&names)).collect()
    }

    /// Evaluates every basis monomial at the state `z`.
    pub fn eval(&self, z: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.entries.len(), self.entries.iter().map(|m| m.eval(z)))
    }
}

/// Truncated bilinear model `ż = Az + Nzu + bu, y = cᵀz + y_offset` over a
/// monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearSystem {
    pub a: DMatrix<f64>,
    pub n_mat: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub y_offset: f64,
    pub basis: MonomialBasis,
}

impl BilinearSystem {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// The degree-one diagonal block `(A₁₁, b₁, c₁)`, i.e. the linear part of
    /// the model.
    pub fn degree1_block(&self) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let n = self.basis.dim();
        let a11 = self.a.view((0, 0), (n, n)).into_owned();
        let b1 = self.b.rows(0, n).into_owned();
        let c1 = self.c.rows(0, n).into_owned();
        (a11, b1, c1)
    }

    /// Writes the labeled plain-text matrix dump (row-major, 12 significant
    /// digits) used for golden-file comparisons.
    pub fn write_text_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        let fmt = |x: f64| crate::fmt_sig12(x);
        writeln!(w, "dim = {}", self.basis.dim())?;
        writeln!(w, "order = {}", self.basis.order())?;
        writeln!(w, "basis = {}", self.basis.labels().join(" "))?;
        writeln!(w, "A =")?;
        for r in 0..self.a.nrows() {
            let row: Vec<String> = (0..self.a.ncols()).map(|c| fmt(self.a[(r, c)])).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        writeln!(w, "N =")?;
        for r in 0..self.n_mat.nrows() {
            let row: Vec<String> = (0..self.n_mat.ncols())
                .map(|c| fmt(self.n_mat[(r, c)]))
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        writeln!(w, "b =")?;
        let col: Vec<String> = self.b.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{}", col.join(" "))?;
        writeln!(w, "c =")?;
        let row: Vec<String> = self.c.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{}", row.join(" "))?;
        writeln!(w, "y_offset = {}", fmt(self.y_offset))?;
        Ok(())
    }
}

/// Builds the monomial basis of total degree `1..=order` over `dim` variables
/// in the canonical ordering. The length is `C(dim+order, order) − 1`.
pub fn build_basis(dim: usize, order: u32) -> Result<MonomialBasis> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "truncation order must be positive".into(),
        ));
    }
    let mut entries = Vec::new();
    let mut stack: Vec<(Vec<u32>, u32)> = vec![(Vec::new(), 0)];
    while let Some((prefix, used)) = stack.pop() {
        if prefix.len() == dim {
            if used >= 1 {
                entries.push(Monomial::new(prefix));
            }
            continue;
        }
        for e in 0..=(order - used) {
            let mut next = prefix.clone();
            next.push(e);
            stack.push((next, used + e));
        }
    }
    entries.sort();
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    Ok(MonomialBasis {
        dim,
        order,
        entries,
        index,
    })
}

/// Lifts a deviation-form system to the truncated bilinear model.
///
/// For each basis monomial `m`, `ṁ = Σᵢ ∂m/∂zᵢ · żᵢ` is expanded into
/// monomials; terms without the input go into `A`, terms linear in the input
/// go into `N` (or into `b` when the monomial degenerates to a constant), and
/// anything above the truncation order is discarded.
pub fn lift(sys: &InputAffineSystem, order: u32) -> Result<BilinearSystem> {
    let dim = sys.dim();
    let constant = Monomial::constant(dim);
    for r in 0..dim {
        let c0 = sys.f.coeff(r, &constant);
        if c0 != 0.0 {
            return Err(Error::NotDeviationForm {
                state: format!("x{}", r + 1),
                value: c0,
            });
        }
    }
    let basis = build_basis(dim, order)?;
    let n = basis.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut n_mat = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (r, m) in basis.entries().iter().enumerate() {
        for i in 0..dim {
            let Some((factor, base)) = m.derivative(i) else {
                continue;
            };
            for (mono, &coeff) in sys.f.row(i) {
                let target = base.mul(mono);
                if target.degree() <= order {
                    let j = basis.index_of(&target).expect("basis covers degree <= order");
                    a[(r, j)] += factor * coeff;
                }
            }
            for (mono, &coeff) in sys.g.row(i) {
                let target = base.mul(mono);
                if target.is_constant() {
                    b[r] += factor * coeff;
                } else if target.degree() <= order {
                    let j = basis.index_of(&target).expect("basis covers degree <= order");
                    n_mat[(r, j)] += factor * coeff;
                }
            }
        }
    }
    let mut c = DVector::<f64>::zeros(n);
    for i in 0..dim {
        c[i] = sys.c[i];
    }
    Ok(BilinearSystem {
        a,
        n_mat,
        b,
        c,
        y_offset: 0.0,
        basis,
    })
}

/// Fixed-step RK4 integration of the bilinear model from the origin. The
/// trace records `t`, `u`, every lifted state, and `y`.
pub fn simulate_bilinear<F: Fn(f64) -> f64>(
    bsys: &BilinearSystem,
    u: F,
    t_end: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    if !(t_end > 0.0) || !(dt > 0.0) || dt >= t_end {
        return Err(Error::InvalidArgument(
            "horizon and step must satisfy 0 < dt < T".into(),
        ));
    }
    let n = bsys.dim();
    let mut names = vec!["t".to_string(), "u".to_string()];
    names.extend(bsys.basis.labels());
    names.push("y".to_string());
    let mut trace = SimulationTrace::new(dt, names)?;

    let rhs = |z: &DVector<f64>, uv: f64| -> DVector<f64> {
        &bsys.a * z + (&bsys.n_mat * z) * uv + &bsys.b * uv
    };
    let steps = (t_end / dt).round() as usize;
    let mut z = DVector::<f64>::zeros(n);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let uv = u(t);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        let y = bsys.c.dot(&z) + bsys.y_offset;
        let mut row = Vec::with_capacity(n + 3);
        row.push(t);
        row.push(uv);
        row.extend(z.iter().copied());
        row.push(y);
        trace.push_row(&row)?;
        if k == steps {
            break;
        }
        let k1 = rhs(&z, uv);
        let k2 = rhs(&(&z + &k1 * (dt / 2.0)), u(t + dt / 2.0));
        let k3 = rhs(&(&z + &k2 * (dt / 2.0)), u(t + dt / 2.0));
        let k4 = rhs(&(&z + &k3 * dt), u(t + dt));
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(trace)
}
