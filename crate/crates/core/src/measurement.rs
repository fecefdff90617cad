//! Projective measurement built from the encoded state and its derivatives,
//! with the classical and quantum Fisher information for two parameters.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{QgeoError, Result};
use crate::geometry::{check_point, gauge_factor, HamiltonianField};
use crate::oracle::FdSpec;
use crate::su2::{evolve, evolve_derivative, state_from_bloch, Vec3};

type Ket = [C64; 2];

fn inner(a: &Ket, b: &Ket) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn norm(a: &Ket) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

fn axpy(a: C64, x: &Ket, y: &Ket) -> Ket {
    [a * x[0] + y[0], a * x[1] + y[1]]
}

/// Imaginary coefficient of Tr[[Ã_μ, Ã_ν] ρ_in]: (|Y_μ||Y_ν|/2)(e_μ×e_ν)·r.
pub fn weak_commutation<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: Vec3,
    t: f64,
    mu: usize,
    nu: usize,
) -> Result<f64> {
    let a = gauge_factor(field, point, mu, t)?.vector();
    let b = gauge_factor(field, point, nu, t)?.vector();
    Ok(0.5 * a.cross(b).dot(probe))
}

/// Encoded state U(λ)|probe⟩ and its parallel-transport derivatives
/// ∂ψ − ⟨ψ|∂ψ⟩ψ (the ω_ℓ of the construction) for the two parameters.
#[derive(Debug, Clone, Copy)]
pub struct Encoding {
    pub state: Ket,
    pub derivatives: [Ket; 2],
}

pub fn encode<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: Vec3,
    t: f64,
    params: [usize; 2],
) -> Result<Encoding> {
    check_point(field, point)?;
    let p = state_from_bloch(probe)?.amplitudes();
    let x = field.eval(point)?;
    let psi = evolve(x, t)?.apply(p);
    let mut d = [[C64::new(0.0, 0.0); 2]; 2];
    for (k, &l) in params.iter().enumerate() {
        let raw = evolve_derivative(x, field.partial(point, l)?, t)?.apply(p);
        d[k] = axpy(-inner(&psi, &raw), &psi, &raw);
    }
    Ok(Encoding { state: psi, derivatives: d })
}

/// Gram–Schmidt coefficient sinθ/(1 + r cosθ) in the printed form.
pub fn printed_gram_schmidt_coefficient(theta: f64, r: f64) -> Result<f64> {
    let den = 1.0 + r * theta.cos();
    if den.abs() < 1e-12 {
        return Err(QgeoError::Singular("1 + r cosθ = 0".into()));
    }
    Ok(theta.sin() / den)
}

#[derive(Debug, Clone)]
pub struct ProjectorSet {
    /// Υ₁ = ψ, Υ₂ = ω_θ, Υ₃ = ω_r − c ω_θ as constructed.
    pub raw: [Ket; 3],
    /// Normalized copies; `None` when Υ_k vanishes (degenerate outcome).
    pub normalized: [Option<Ket>; 3],
    /// c = ⟨ω_θ|ω_r⟩/⟨ω_θ|ω_θ⟩.
    pub gram_schmidt_coefficient: C64,
}

impl ProjectorSet {
    pub fn degenerate(&self) -> Vec<usize> {
        (0..3).filter(|&k| self.normalized[k].is_none()).collect()
    }

    /// P(k|λ) = |⟨Υ̂_k|ψ⟩|², 0 for degenerate outcomes.
    pub fn probabilities(&self, psi: &Ket) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (k, u) in self.normalized.iter().enumerate() {
            if let Some(u) = u {
                p[k] = inner(u, psi).norm_sqr();
            }
        }
        p
    }
}

pub fn build_projectors(encoded: &Ket, d_first: &Ket, d_second: &Ket) -> Result<ProjectorSet> {
    let w1 = axpy(-inner(encoded, d_first), encoded, d_first);
    let w2 = axpy(-inner(encoded, d_second), encoded, d_second);
    let n1 = inner(&w1, &w1).re;
    let scale = 1.0 + norm(d_first) + norm(d_second);
    if n1.sqrt() < 1e-12 * scale {
        return Err(QgeoError::Singular("‖ω_θ‖ = 0, coefficient 1/(1 + r cosθ) undefined".into()));
    }
    let c = inner(&w1, &w2) / n1;
    let y3 = axpy(-c, &w1, &w2);
    let raw = [*encoded, w1, y3];
    let mut normalized = [None; 3];
    for (k, v) in raw.iter().enumerate() {
        let n = norm(v);
        if n > 1e-9 * scale {
            normalized[k] = Some([v[0] / n, v[1] / n]);
        }
    }
    Ok(ProjectorSet { raw, normalized, gram_schmidt_coefficient: c })
}

/// F = 4 Re⟨∂_ℓψ|∂_mψ⟩ + 4⟨∂_ℓψ|ψ⟩⟨∂_mψ|ψ⟩.
pub fn qfim_pure(encoded: &Ket, derivatives: &[Ket; 2]) -> Matrix2<f64> {
    Matrix2::from_fn(|l, m| {
        let a = inner(&derivatives[l], &derivatives[m]).re;
        let b = inner(&derivatives[l], encoded) * inner(&derivatives[m], encoded);
        4.0 * a + 4.0 * b.re
    })
}

#[derive(Debug, Clone)]
pub struct CfimResult {
    pub matrix: Matrix2<f64>,
    /// Optimality residual Im⟨∂_ℓψ|Υ_k⟩⟨Υ_k|ψ⟩/|⟨Υ_k|ψ⟩| per outcome (zero for k = 1
    /// and for degenerate outcomes).
    pub residual: [[f64; 2]; 3],
    pub probabilities: [f64; 3],
    pub probability_sum: f64,
    /// Outcomes with P < 1e-12 evaluated through the φ → λ limit.
    pub limit_outcomes: Vec<usize>,
}

impl CfimResult {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

const P_FLOOR: f64 = 1e-12;

/// CFIM Σ_k ∂_ℓP ∂_mP / P with projectors fixed at λ.
///
/// Outcomes with P ≥ 1e-12 use central differences of P along the encoding;
/// the 0/0 outcomes use the limit 4 Re(Ā_ℓ u) Re(Ā_m u), A_ℓ = ⟨Υ̂_k|∂_ℓψ⟩,
/// approached along the parameter with the larger |A|.
#[allow(clippy::too_many_arguments)]
pub fn cfim<F: HamiltonianField + ?Sized>(
    projectors: &ProjectorSet,
    field: &F,
    point: &[f64],
    probe: Vec3,
    t: f64,
    params: [usize; 2],
    spec: FdSpec,
) -> Result<CfimResult> {
    let enc = encode(field, point, probe, t, params)?;
    let probe_amp = state_from_bloch(probe)?.amplitudes();
    let probs = projectors.probabilities(&enc.state);
    let h = spec.step();
    let mut m = Matrix2::zeros();
    let mut residual = [[0.0; 2]; 3];
    let mut limit_outcomes = Vec::new();
    let mut used = 0;
    for (k, u) in projectors.normalized.iter().enumerate() {
        let Some(u) = u else { continue };
        used += 1;
        let z = inner(u, &enc.state);
        let a = [inner(u, &enc.derivatives[0]), inner(u, &enc.derivatives[1])];
        if probs[k] >= P_FLOOR {
            let mut grad = [0.0; 2];
            for (i, &l) in params.iter().enumerate() {
                let mut p = point.to_vec();
                p[l] = point[l] + h;
                let up = inner(u, &evolve(field.eval(&p)?, t)?.apply(probe_amp)).norm_sqr();
                p[l] = point[l] - h;
                let down = inner(u, &evolve(field.eval(&p)?, t)?.apply(probe_amp)).norm_sqr();
                grad[i] = (up - down) / (2.0 * h);
            }
            m += Matrix2::from_fn(|i, j| grad[i] * grad[j] / probs[k]);
            if k != 0 {
                let zn = z / z.norm();
                residual[k] = [(a[0].conj() * zn).im, (a[1].conj() * zn).im];
            }
        } else {
            limit_outcomes.push(k);
            let lead = if a[0].norm() >= a[1].norm() { a[0] } else { a[1] };
            if lead.norm() == 0.0 {
                continue;
            }
            let un = lead / lead.norm();
            let re = [(a[0].conj() * un).re, (a[1].conj() * un).re];
            m += Matrix2::from_fn(|i, j| 4.0 * re[i] * re[j]);
            if k != 0 {
                residual[k] = [(a[0].conj() * un).im, (a[1].conj() * un).im];
            }
        }
    }
    if used == 0 {
        return Err(QgeoError::UndefinedCfim("every projector is degenerate".into()));
    }
    Ok(CfimResult {
        matrix: m,
        residual,
        probabilities: probs,
        probability_sum: probs.iter().sum(),
        limit_outcomes,
    })
}
