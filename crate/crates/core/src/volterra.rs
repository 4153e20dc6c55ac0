//! Frequency-domain Volterra kernels of a bilinear system.
//!
//! The order-n kernel is evaluated as
//! `cᵀ·(Σₙ I − A)⁻¹ N ··· N·(s₁ I − A)⁻¹ b` with `Σⱼ = s₁+…+sⱼ`, working
//! right-to-left through linear solves. The first-order kernel is also
//! produced in closed form as a rational function via the Faddeev–LeVerrier
//! resolvent expansion of the degree-one block.

use crate::carleman::BilinearSystem;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, RationalFunction};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Condition-estimate threshold beyond which a resolvent solve is treated as
/// a pole hit.
const POLE_CONDITION_LIMIT: f64 = 1e12;

fn complex_matrix(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

fn complex_vector(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Solves `(shift·I − A)·x = rhs` by partial-pivot LU, rejecting
/// ill-conditioned systems via the pivot-magnitude ratio.
fn resolvent_solve(
    a: &DMatrix<f64>,
    shift: Complex64,
    rhs: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let mut m = complex_matrix(a).scale(-1.0);
    for i in 0..n {
        m[(i, i)] += shift;
    }
    let lu = m.lu();
    let u = lu.u();
    let mut max_p = 0.0_f64;
    let mut min_p = f64::INFINITY;
    for i in 0..n {
        let p = u[(i, i)].norm();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    let condition = if min_p == 0.0 {
        f64::INFINITY
    } else {
        max_p / min_p
    };
    if condition > POLE_CONDITION_LIMIT {
        return Err(Error::PoleHit {
            partial_sum: shift,
            condition,
        });
    }
    lu.solve(rhs).ok_or(Error::PoleHit {
        partial_sum: shift,
        condition: f64::INFINITY,
    })
}

/// Evaluates the order-`order` frequency-domain kernel at the tuple `s`.
pub fn eval_kernel(bsys: &BilinearSystem, order: u32, s: &[Complex64]) -> Result<Complex64> {
    if order == 0 {
        return Err(Error::InvalidArgument("kernel order starts at 1".into()));
    }
    if s.len() != order as usize {
        return Err(Error::DimensionMismatch {
            expected: order as usize,
            got: s.len(),
        });
    }
    if s.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument("non-finite frequency".into()));
    }
    let mut v = resolvent_solve(&bsys.a, s[0], &complex_vector(&bsys.b))?;
    let n_c = complex_matrix(&bsys.n_mat);
    let mut partial = s[0];
    for sj in s.iter().skip(1) {
        partial += sj;
        v = resolvent_solve(&bsys.a, partial, &(&n_c * &v))?;
    }
    let c = complex_vector(&bsys.c);
    Ok(c.dot(&v))
}

/// Closed-form first-order kernel `cᵀ(sI − A₁₁)⁻¹ b₁` from the degree-one
/// block, computed by the Faddeev–LeVerrier recurrence: with `B₀ = I`,
/// `Mᵢ = A·Bᵢ₋₁`, `aᵢ = −tr(Mᵢ)/i`, `Bᵢ = Mᵢ + aᵢI`, the resolvent equals
/// `(Σᵢ s^{k−1−i} Bᵢ) / (s^k + a₁s^{k−1} + … + a_k)`.
pub fn h1_rational(bsys: &BilinearSystem) -> Result<RationalFunction> {
    let (a11, b1, c1) = bsys.degree1_block();
    let k = a11.nrows();
    let mut char_desc = vec![1.0]; // descending: s^k, a1, ..., ak
    let mut num_desc = Vec::with_capacity(k); // descending c·B_i·b
    let mut b_mat = DMatrix::<f64>::identity(k, k);
    for i in 1..=k {
        num_desc.push((c1.transpose() * &b_mat * &b1)[(0, 0)]);
        let m_i = &a11 * &b_mat;
        let a_i = -m_i.trace() / i as f64;
        char_desc.push(a_i);
        b_mat = m_i + DMatrix::<f64>::identity(k, k) * a_i;
    }
    let num = Polynomial::new(num_desc.into_iter().rev().collect());
    let den = Polynomial::new(char_desc.into_iter().rev().collect());
    RationalFunction::new(num, den)
}

/// Real part of the kernel at the origin; the imaginary part must vanish.
pub fn dc_gain(bsys: &BilinearSystem, order: u32) -> Result<f64> {
    let zeros = vec![Complex64::new(0.0, 0.0); order as usize];
    let h = eval_kernel(bsys, order, &zeros)?;
    if h.im.abs() >= 1e-12 {
        return Err(Error::NumericFailure(format!(
            "kernel at the origin has imaginary part {:e}",
            h.im
        )));
    }
    Ok(h.re)
}

/// Steady-state output that the truncated Volterra model predicts for a
/// constant input of amplitude `u_amp`: `Σ_{k=1..max_order} H_k(0,…,0)·u^k`.
pub fn steady_state_prediction(bsys: &BilinearSystem, max_order: u32, u_amp: f64) -> Result<f64> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("order starts at 1".into()));
    }
    let mut acc = 0.0;
    for k in 1..=max_order {
        acc += dc_gain(bsys, k)? * u_amp.powi(k as i32);
    }
    Ok(acc)
}
