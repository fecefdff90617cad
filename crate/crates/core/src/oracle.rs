//! Finite-difference QGT computed directly from evolved states,
//! χ_μν = ⟨∂_μψ|∂_νψ⟩ − ⟨∂_μψ|ψ⟩⟨ψ|∂_νψ⟩, independent of every closed form.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{QgeoError, Result};
use crate::geometry::{check_point, HamiltonianField};
use crate::su2::{evolve, QubitState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    /// (4 D(h/2) − D(h))/3 on central differences.
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSpec {
    step: f64,
    scheme: FdScheme,
}

impl FdSpec {
    pub fn new(step: f64, scheme: FdScheme) -> Result<Self> {
        if !(1e-9..=1e-2).contains(&step) {
            return Err(QgeoError::Domain(format!("finite-difference step {step} outside [1e-9, 1e-2]")));
        }
        Ok(Self { step, scheme })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn scheme(&self) -> FdScheme {
        self.scheme
    }
}

impl Default for FdSpec {
    fn default() -> Self {
        Self { step: 1e-5, scheme: FdScheme::Central }
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rephases `shifted` so that ⟨base|shifted⟩ is real and positive.
fn align(base: &[C64], mut shifted: Vec<C64>) -> Result<Vec<C64>> {
    let ov = inner(base, &shifted);
    let n = ov.norm();
    if n < 1e-3 {
        return Err(QgeoError::StepTooLarge(format!("overlap {n:.3e} with the shifted state")));
    }
    let phase = ov.conj() / n;
    for a in &mut shifted {
        *a *= phase;
    }
    Ok(shifted)
}

fn central<S>(state: &S, base: &[C64], point: &[f64], l: usize, h: f64) -> Result<Vec<C64>>
where
    S: Fn(&[f64]) -> Result<Vec<C64>>,
{
    let mut p = point.to_vec();
    p[l] = point[l] + h;
    let up = align(base, state(&p)?)?;
    p[l] = point[l] - h;
    let down = align(base, state(&p)?)?;
    Ok(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect())
}

/// Gauge-fixed derivatives ∂_ℓψ for every parameter of a state map.
pub fn state_derivatives<S>(state: &S, point: &[f64], spec: FdSpec) -> Result<(Vec<C64>, Vec<Vec<C64>>)>
where
    S: Fn(&[f64]) -> Result<Vec<C64>>,
{
    let base = state(point)?;
    let mut out = Vec::with_capacity(point.len());
    for l in 0..point.len() {
        let d = match spec.scheme {
            FdScheme::Central => central(state, &base, point, l, spec.step)?,
            FdScheme::Richardson => {
                let d1 = central(state, &base, point, l, spec.step)?;
                let d2 = central(state, &base, point, l, 0.5 * spec.step)?;
                d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
            }
        };
        out.push(d);
    }
    Ok((base, out))
}

/// χ assembled from a state and its derivatives.
pub fn qgt_from_derivatives(psi: &[C64], derivs: &[Vec<C64>]) -> DMatrix<C64> {
    let n = derivs.len();
    let proj: Vec<C64> = derivs.iter().map(|d| inner(psi, d)).collect();
    DMatrix::from_fn(n, n, |i, j| inner(&derivs[i], &derivs[j]) - proj[i].conj() * proj[j])
}

/// Finite-difference QGT of an arbitrary state map.
pub fn qgt_fd_states<S>(state: &S, point: &[f64], spec: FdSpec) -> Result<DMatrix<C64>>
where
    S: Fn(&[f64]) -> Result<Vec<C64>>,
{
    let (psi, d) = state_derivatives(state, point, spec)?;
    Ok(qgt_from_derivatives(&psi, &d))
}

/// |ψ̃(λ)⟩ = U(λ)|probe⟩ with the probe held fixed.
pub fn encoded_state<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: &QubitState,
    t: f64,
) -> Result<[C64; 2]> {
    Ok(evolve(field.eval(point)?, t)?.apply(probe.amplitudes()))
}

pub fn qgt_fd<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: &QubitState,
    t: f64,
    spec: FdSpec,
) -> Result<DMatrix<C64>> {
    check_point(field, point)?;
    let state = |p: &[f64]| encoded_state(field, p, probe, t).map(|s| s.to_vec());
    qgt_fd_states(&state, point, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_range_enforced() {
        assert!(FdSpec::new(1e-10, FdScheme::Central).is_err());
        assert!(FdSpec::new(0.1, FdScheme::Central).is_err());
        assert!(FdSpec::new(1e-4, FdScheme::Richardson).is_ok());
    }

    #[test]
    fn orthogonal_shift_is_rejected() {
        let base = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let far = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(align(&base, far), Err(QgeoError::StepTooLarge(_))));
    }
}
