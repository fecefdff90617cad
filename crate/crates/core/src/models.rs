//! The canonical two-band model m = 2H₀(sinθ cosφ, sinθ sinφ, cosθ + r) and
//! the SSH model ν = 2(v + w cos k, w sin k, 0), with their closed forms.
//!
//! Every closed form is written in terms of the regularized gap
//! ξ = (1 − r)² + 4r cos²(θ/2) (resp. ξ′ = (v − w)² + 4vw cos²(k/2)) and
//! sin²(τ√ξ)/ξ = τ² sinc²(τ√ξ), so nothing cancels catastrophically on the
//! approach to the transition.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::error::{ensure_finite, QgeoError, Result};
use crate::geometry::{chern_number, ChernEstimate, GridSpec, HamiltonianField, Rect};
use crate::su2::Vec3;

pub const DEFAULT_TPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalParams {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
    pub h0: f64,
}

impl CanonicalParams {
    /// Checked constructor with H₀ = 1; θ ∈ [0, π], φ ∈ [0, 2π].
    pub fn new(theta: f64, phi: f64, r: f64) -> Result<Self> {
        Self::with_h0(theta, phi, r, 1.0)
    }

    pub fn with_h0(theta: f64, phi: f64, r: f64, h0: f64) -> Result<Self> {
        ensure_finite(&[theta, phi, r, h0], "canonical parameters")?;
        if !(0.0..=PI).contains(&theta) {
            return Err(QgeoError::Domain(format!("theta {theta} outside [0, π]")));
        }
        if !(0.0..=2.0 * PI).contains(&phi) {
            return Err(QgeoError::Domain(format!("phi {phi} outside [0, 2π]")));
        }
        Ok(Self { theta, phi, r, h0 })
    }

    pub fn point(&self) -> [f64; 3] {
        [self.theta, self.phi, self.r]
    }

    pub fn is_tpt(&self, tol: f64) -> bool {
        (self.r - 1.0).abs() < tol && (self.theta - PI).abs() < tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SshParams {
    pub v: f64,
    pub w: f64,
    pub k: f64,
}

impl SshParams {
    pub fn new(v: f64, w: f64, k: f64) -> Result<Self> {
        ensure_finite(&[v, w, k], "SSH parameters")?;
        if v < 0.0 || w < 0.0 {
            return Err(QgeoError::Domain("hopping amplitudes must be non-negative".into()));
        }
        if !(-PI..=PI).contains(&k) {
            return Err(QgeoError::Domain(format!("k {k} outside [−π, π]")));
        }
        Ok(Self { v, w, k })
    }

    pub fn point(&self) -> [f64; 3] {
        [self.v, self.w, self.k]
    }

    pub fn is_tpt(&self, tol: f64) -> bool {
        (self.v - self.w).abs() < tol && (self.k.abs() - PI).abs() < tol
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalField {
    pub h0: f64,
    names: Vec<String>,
}

/// Canonical model as a field over (θ, φ, r).
pub fn canonical_field(h0: f64) -> CanonicalField {
    CanonicalField { h0, names: vec!["theta".into(), "phi".into(), "r".into()] }
}

impl HamiltonianField for CanonicalField {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn eval(&self, p: &[f64]) -> Result<Vec3> {
        crate::geometry::check_point(self, p)?;
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        Ok(Vec3::new(st * cp, st * sp, ct + p[2]) * (2.0 * self.h0))
    }

    fn partial(&self, p: &[f64], index: usize) -> Result<Vec3> {
        crate::geometry::check_point(self, p)?;
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        let d = match index {
            0 => Vec3::new(ct * cp, ct * sp, -st),
            1 => Vec3::new(-st * sp, st * cp, 0.0),
            2 => Vec3::new(0.0, 0.0, 1.0),
            _ => return Err(QgeoError::Domain(format!("parameter index {index} out of range"))),
        };
        Ok(d * (2.0 * self.h0))
    }
}

#[derive(Debug, Clone)]
pub struct SshField {
    names: Vec<String>,
}

/// SSH model as a field over (v, w, k).
pub fn ssh_field() -> SshField {
    SshField { names: vec!["v".into(), "w".into(), "k".into()] }
}

impl HamiltonianField for SshField {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn eval(&self, p: &[f64]) -> Result<Vec3> {
        crate::geometry::check_point(self, p)?;
        let (sk, ck) = p[2].sin_cos();
        Ok(Vec3::new(p[0] + p[1] * ck, p[1] * sk, 0.0) * 2.0)
    }

    fn partial(&self, p: &[f64], index: usize) -> Result<Vec3> {
        crate::geometry::check_point(self, p)?;
        let (sk, ck) = p[2].sin_cos();
        let d = match index {
            0 => Vec3::new(1.0, 0.0, 0.0),
            1 => Vec3::new(ck, sk, 0.0),
            2 => Vec3::new(-p[1] * sk, p[1] * ck, 0.0),
            _ => return Err(QgeoError::Domain(format!("parameter index {index} out of range"))),
        };
        Ok(d * 2.0)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Shared pieces of the canonical closed forms.
struct Canon {
    s: f64,
    xi: f64,
    /// 1 + r cosθ
    onerc: f64,
    /// r + cosθ
    rpc: f64,
    /// τ² sinc²(τ√ξ) = sin²(τ√ξ)/ξ
    s_over_xi: f64,
    tau: f64,
}

fn canon(theta: f64, r: f64, h0: f64, t: f64) -> Result<Canon> {
    ensure_finite(&[theta, r, h0, t], "canonical input")?;
    if t <= 0.0 {
        return Err(QgeoError::Domain(format!("duration must be positive, got {t}")));
    }
    let (s, c) = theta.sin_cos();
    let ch2 = (0.5 * theta).cos().powi(2);
    let sh2 = (0.5 * theta).sin().powi(2);
    let xi = if r >= 0.0 {
        (1.0 - r).powi(2) + 4.0 * r * ch2
    } else {
        (1.0 + r).powi(2) - 4.0 * r * sh2
    };
    let (onerc, rpc) = if c < 0.0 {
        ((1.0 - r) + 2.0 * r * ch2, (r - 1.0) + 2.0 * ch2)
    } else {
        ((1.0 + r) - 2.0 * r * sh2, (r + 1.0) - 2.0 * sh2)
    };
    let tau = h0 * t;
    let sc = sinc(tau * xi.sqrt());
    Ok(Canon { s, xi, onerc, rpc, s_over_xi: tau * tau * sc * sc, tau })
}

const XI_FLOOR: f64 = 1e-300;
/// Below this ξ the gap is under 1e-12 H₀ and the ground state is numerically undefined.
const GAP_FLOOR: f64 = 1e-24;

/// Maximal QMTs (g_θθ, g_φφ, g_rr) for a probe orthogonal to every e_ℓ.
pub fn max_qmt_canonical(p: &CanonicalParams, t: f64) -> Result<[f64; 3]> {
    let k = canon(p.theta, p.r, p.h0, t)?;
    let tau2 = k.tau * k.tau;
    let g_pp = k.s * k.s * k.s_over_xi;
    if k.xi < XI_FLOOR {
        return Ok([tau2, g_pp, tau2]);
    }
    let sinc2 = k.s_over_xi / tau2;
    let g_tt = tau2 * (p.r * p.r * k.s * k.s + k.onerc * k.onerc * sinc2) / k.xi;
    let g_rr = tau2 * (k.rpc * k.rpc + k.s * k.s * sinc2) / k.xi;
    Ok([g_tt, g_pp, g_rr])
}

/// Ground-state-probe QMT matrix over (θ, φ, r), symmetric.
pub fn ground_qmt_matrix_canonical(p: &CanonicalParams, t: f64) -> Result<Matrix3<f64>> {
    let k = canon(p.theta, p.r, p.h0, t)?;
    if k.xi < GAP_FLOOR {
        return Err(QgeoError::Degenerate(
            "exact transition point; evaluate along the limit path θ = π − ε, r = 1 − ε".into(),
        ));
    }
    let a = k.s_over_xi / k.xi;
    let off = -k.onerc * k.s * a;
    Ok(Matrix3::new(
        k.onerc * k.onerc * a, 0.0, off,
        0.0, k.s * k.s * k.s_over_xi, 0.0,
        off, 0.0, k.s * k.s * a,
    ))
}

/// The QMT matrix with the (r, θ) entry sign as printed in the source text.
pub fn ground_qmt_matrix_canonical_printed(p: &CanonicalParams, t: f64) -> Result<Matrix3<f64>> {
    let mut g = ground_qmt_matrix_canonical(p, t)?;
    g[(2, 0)] = -g[(2, 0)];
    Ok(g)
}

/// Ground-state-probe Berry curvature over (θ, φ, r).
///
/// Sign follows the QGT definition; the source prints the opposite global sign.
pub fn ground_berry_matrix_canonical(p: &CanonicalParams, t: f64) -> Result<Matrix3<f64>> {
    let k = canon(p.theta, p.r, p.h0, t)?;
    if k.xi < GAP_FLOOR {
        return Err(QgeoError::Degenerate(
            "exact transition point; evaluate along the limit path θ = π − ε, r = 1 − ε".into(),
        ));
    }
    let b = k.s_over_xi / k.xi.sqrt();
    let tp = -2.0 * k.onerc * k.s * b;
    let pr = -2.0 * k.s * k.s * b;
    Ok(Matrix3::new(0.0, tp, 0.0, -tp, 0.0, pr, 0.0, -pr, 0.0))
}

/// Coarse-grained Berry curvature (sin² → 1/2), same sign convention.
pub fn coarse_berry_canonical(p: &CanonicalParams) -> Result<Matrix3<f64>> {
    let k = canon(p.theta, p.r, p.h0, 1.0)?;
    if k.xi < XI_FLOOR {
        return Err(QgeoError::TransitionPoint("coarse curvature diverges at the transition".into()));
    }
    let d = k.xi * k.xi.sqrt();
    let tp = -k.onerc * k.s / d;
    let pr = -k.s * k.s / d;
    Ok(Matrix3::new(0.0, tp, 0.0, -tp, 0.0, pr, 0.0, -pr, 0.0))
}

/// [sgn(r−1) − 1] sgn(r²−1) / sgn(r−1), as printed.
pub fn coarse_chern_canonical(r: f64) -> Result<f64> {
    ensure_finite(&[r], "r")?;
    if r == 1.0 {
        return Err(QgeoError::TransitionPoint("coarse Chern number undefined at r = 1".into()));
    }
    let sg = |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
    Ok((sg(r - 1.0) - 1.0) * sg(r * r - 1.0) / sg(r - 1.0))
}

/// Coarse Chern number by quadrature of Ω̄_θφ over θ ∈ [0, π], φ ∈ [0, 2π].
pub fn coarse_chern_canonical_quadrature(r: f64, grid: GridSpec) -> Result<ChernEstimate> {
    ensure_finite(&[r], "r")?;
    if r.abs() == 1.0 {
        return Err(QgeoError::TransitionPoint(format!("coarse curvature not integrable at r = {r}")));
    }
    let omega = |theta: f64, phi: f64| {
        coarse_berry_canonical(&CanonicalParams { theta, phi, r, h0: 1.0 })
            .map(|m| m[(0, 1)])
            .unwrap_or(f64::NAN)
    };
    chern_number(omega, Rect { x0: 0.0, x1: PI, y0: 0.0, y1: 2.0 * PI }, grid)
}

struct Ssh {
    s: f64,
    xi: f64,
    /// v + w cos k
    vwc: f64,
    /// w + v cos k
    wvc: f64,
    s_over_xi: f64,
}

fn ssh_terms(p: &SshParams, t: f64) -> Result<Ssh> {
    ensure_finite(&[p.v, p.w, p.k, t], "SSH input")?;
    if t <= 0.0 {
        return Err(QgeoError::Domain(format!("duration must be positive, got {t}")));
    }
    let (v, w) = (p.v, p.w);
    let (s, c) = p.k.sin_cos();
    let ch2 = (0.5 * p.k).cos().powi(2);
    let sh2 = (0.5 * p.k).sin().powi(2);
    let xi = if v * w >= 0.0 {
        (v - w).powi(2) + 4.0 * v * w * ch2
    } else {
        (v + w).powi(2) - 4.0 * v * w * sh2
    };
    let (vwc, wvc) = if c < 0.0 {
        ((v - w) + 2.0 * w * ch2, (w - v) + 2.0 * v * ch2)
    } else {
        ((v + w) - 2.0 * w * sh2, (w + v) - 2.0 * v * sh2)
    };
    let sc = sinc(t * xi.sqrt());
    Ok(Ssh { s, xi, vwc, wvc, s_over_xi: t * t * sc * sc })
}

/// Maximal QMTs (g_vv, g_ww, g_kk). g_kk carries the w² factor on both terms.
pub fn max_qmt_ssh(p: &SshParams, t: f64) -> Result<[f64; 3]> {
    let k = ssh_terms(p, t)?;
    let t2 = t * t;
    let (v, w) = (p.v, p.w);
    if k.xi < XI_FLOOR {
        return Ok([t2, t2, t2 * w * w]);
    }
    let sinc2 = k.s_over_xi / t2;
    let s2 = k.s * k.s;
    Ok([
        t2 * (k.vwc * k.vwc + w * w * s2 * sinc2) / k.xi,
        t2 * (k.wvc * k.wvc + v * v * s2 * sinc2) / k.xi,
        t2 * w * w * (v * v * s2 + k.wvc * k.wvc * sinc2) / k.xi,
    ])
}

/// g_kk exactly as printed (second term without the w² factor).
pub fn max_qmt_ssh_kk_printed(p: &SshParams, t: f64) -> Result<f64> {
    let k = ssh_terms(p, t)?;
    let t2 = t * t;
    if k.xi < XI_FLOOR {
        return Ok(t2 * p.w * p.w);
    }
    let sinc2 = k.s_over_xi / t2;
    Ok(t2 * (p.w * p.w * p.v * p.v * k.s * k.s + k.wvc * k.wvc * sinc2) / k.xi)
}

/// Ground-state-probe QMT matrix over (v, w, k).
pub fn ground_qmt_matrix_ssh(p: &SshParams, t: f64) -> Result<Matrix3<f64>> {
    let k = ssh_terms(p, t)?;
    if k.xi < GAP_FLOOR {
        return Err(QgeoError::Degenerate(
            "exact transition point; evaluate along the limit path k = π − ε, v = w − ε".into(),
        ));
    }
    let (v, w) = (p.v, p.w);
    let a = k.s_over_xi / k.xi;
    let s = k.s;
    let vw = -v * w * s * s * a;
    let wk = -w * w * k.wvc * s * a;
    let vk = v * w * k.wvc * s * a;
    Ok(Matrix3::new(
        w * w * s * s * a, vw, wk,
        vw, v * v * s * s * a, vk,
        wk, vk, w * w * k.wvc * k.wvc * a,
    ))
}

/// Ground-state-probe Berry curvature of the SSH model: every ∂ν lies in the
/// plane of ν, so X̂·(∂_μX × ∂_νX) vanishes identically.
pub fn ground_berry_matrix_ssh(p: &SshParams, t: f64) -> Result<Matrix3<f64>> {
    let k = ssh_terms(p, t)?;
    if k.xi < GAP_FLOOR {
        return Err(QgeoError::Degenerate("exact transition point".into()));
    }
    Ok(Matrix3::zeros())
}

/// The two-parameter slice driven to the transition by the adaptive strategy:
/// (θ, r) for the canonical model, (k, v) for SSH.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TptModel {
    Canonical { phi0: f64, h0: f64 },
    Ssh { w0: f64 },
}

impl TptModel {
    pub fn names(&self) -> [&'static str; 2] {
        match self {
            TptModel::Canonical { .. } => ["theta", "r"],
            TptModel::Ssh { .. } => ["k", "v"],
        }
    }

    /// Critical values (θ, r) = (π, 1) or (k, v) = (π, w₀).
    pub fn critical(&self) -> [f64; 2] {
        match *self {
            TptModel::Canonical { .. } => [PI, 1.0],
            TptModel::Ssh { w0 } => [PI, w0],
        }
    }

    pub fn field_at(&self, x: [f64; 2]) -> Result<Vec3> {
        match *self {
            TptModel::Canonical { phi0, h0 } => canonical_field(h0).eval(&[x[0], phi0, x[1]]),
            TptModel::Ssh { w0 } => ssh_field().eval(&[x[1], w0, x[0]]),
        }
    }

    /// g^(M) of the peak parameter (θ or k) at the adjusted point.
    pub fn peak_qmt(&self, x: [f64; 2], t: f64) -> Result<f64> {
        match *self {
            TptModel::Canonical { phi0, h0 } => {
                let p = CanonicalParams { theta: x[0], phi: phi0, r: x[1], h0 };
                Ok(max_qmt_canonical(&p, t)?[0])
            }
            TptModel::Ssh { w0 } => {
                let p = SshParams { v: x[1], w: w0, k: x[0] };
                Ok(max_qmt_ssh(&p, t)?[2])
            }
        }
    }

    /// Peak value of the QMT: τ² or T²w₀².
    pub fn peak_reference(&self, t: f64) -> f64 {
        match *self {
            TptModel::Canonical { h0, .. } => (h0 * t).powi(2),
            TptModel::Ssh { w0 } => (t * w0).powi(2),
        }
    }

    /// Topological phase label (coarse Chern number or winding number);
    /// `None` on the transition itself.
    pub fn phase(&self, x: [f64; 2]) -> Option<i32> {
        match *self {
            TptModel::Canonical { .. } => coarse_chern_canonical(x[1])
                .ok()
                .filter(|_| x[1] != -1.0)
                .map(|c| c.round() as i32),
            TptModel::Ssh { w0 } => {
                if x[1] == w0 {
                    None
                } else if x[1] < w0 {
                    Some(1)
                } else {
                    Some(0)
                }
            }
        }
    }

    /// Parameter box: θ ∈ [0, π]; k ∈ [−π, π] and v ≥ 0.
    pub fn in_domain(&self, x: [f64; 2]) -> bool {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return false;
        }
        match self {
            TptModel::Canonical { .. } => (0.0..=PI).contains(&x[0]),
            TptModel::Ssh { .. } => (-PI..=PI).contains(&x[0]) && x[1] >= 0.0,
        }
    }
}
