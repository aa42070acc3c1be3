//! Landau dissipation tensor, the Eulerian gradient shift and entropy
//! production.
//!
//! A dissipation tensor B^{aβcδ} maps the gradient G_{cδ} = ∂ψ_c/∂x^δ to
//! ΔT^{aβ} = B^{aβcδ}G_{cδ}. The shift adds δB^{aβcδ} = T^{aβf}C_{fg}T^{gδc},
//! so that δB·G = T^{aβf}(C·divT)_f.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::{Flux, FluxJacobian, LocalFluid, Mode};
use crate::tensor::{self, Mat4, Vec4};

/// Sign s in "explicit shifted tensors = s · (δB·G)".
pub const EXPLICIT_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DissipationCoeffs {
    pub eta: f64,
    pub zeta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    /// Multiplies the whole dissipation tensor.
    pub eps: f64,
}

impl Default for DissipationCoeffs {
    fn default() -> Self {
        Self { eta: 0.1, zeta: 0.0, kappa: 0.02, lambda: 1.0, mu: 1.0, nu: 0.3, eps: 1.0 }
    }
}

impl DissipationCoeffs {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eta, self.zeta, self.kappa, self.lambda, self.mu, self.nu, self.eps];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coefficients {self:?}")));
        }
        Ok(())
    }

    /// Same Landau part, shift removed.
    pub fn landau_only(&self) -> Self {
        Self { lambda: 0.0, mu: 0.0, nu: 0.0, ..*self }
    }

    pub fn with_shift(&self, lambda: f64, mu: f64, nu: f64) -> Self {
        Self { lambda, mu, nu, ..*self }
    }

    /// (λ, μ, ν) multiplied by `s`.
    pub fn scale_shift(&self, s: f64) -> Self {
        self.with_shift(self.lambda * s, self.mu * s, self.nu * s)
    }

    pub fn has_shift(&self) -> bool {
        self.lambda != 0.0 || self.mu != 0.0 || self.nu != 0.0
    }
}

/// G_{cδ} = ∂ψ_c/∂x^δ. Row 4 is zero in barotropic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientField {
    pub g: [[f64; 4]; 5],
    pub mode: Mode,
}

impl GradientField {
    pub fn new(g: [[f64; 4]; 5], mode: Mode) -> Self {
        let mut g = g;
        if mode == Mode::Barotropic {
            g[4] = [0.0; 4];
        }
        Self { g, mode }
    }

    pub fn zeros(mode: Mode) -> Self {
        Self::new([[0.0; 4]; 5], mode)
    }

    /// ψ′ ⊗ ξ: the gradient of a profile depending on x^βξ_β only.
    pub fn planar(dpsi: &[f64], xi: &Vec4, mode: Mode) -> Self {
        let mut g = [[0.0; 4]; 5];
        for (c, d) in dpsi.iter().enumerate().take(mode.fields()) {
            for b in 0..4 {
                g[c][b] = d * xi[b];
            }
        }
        Self::new(g, mode)
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut g = [[0.0; 4]; 5];
        for c in 0..5 {
            for d in 0..4 {
                g[c][d] = a * self.g[c][d] + b * other.g[c][d];
            }
        }
        Self::new(g, self.mode)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.combine(s, self, 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.g.iter().flatten().all(|x| x.is_finite())
    }

    /// Flattened (c, δ) entries, length 4·fields.
    pub fn flat(&self) -> Vec<f64> {
        self.g[..self.mode.fields()].iter().flatten().copied().collect()
    }

    pub fn from_flat(v: &[f64], mode: Mode) -> Self {
        let mut g = [[0.0; 4]; 5];
        for (k, x) in v.iter().enumerate() {
            g[k / 4][k % 4] = *x;
        }
        Self::new(g, mode)
    }

    /// The same gradient seen from the frame related by `lambda`.
    pub fn boosted(&self, lambda: &Mat4) -> Self {
        let cov = tensor::covector_transform(lambda);
        let mut g = [[0.0; 4]; 5];
        for c in 0..4 {
            for d in 0..4 {
                let mut s = 0.0;
                for c1 in 0..4 {
                    for d1 in 0..4 {
                        s += cov[c][c1] * cov[d][d1] * self.g[c1][d1];
                    }
                }
                g[c][d] = s;
            }
        }
        g[4] = tensor::mat_vec(&cov, &self.g[4]);
        Self::new(g, self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TensorKind {
    Landau,
    Shifted { lambda: f64, mu: f64, nu: f64 },
    DeltaOnly { lambda: f64, mu: f64, nu: f64 },
}

/// Dense B^{aβcδ} at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationTensor {
    data: Vec<f64>,
    fields: usize,
    pub kind: TensorKind,
}

#[inline]
fn idx(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 5 + c) * 4 + d
}

impl DissipationTensor {
    fn zeros(fields: usize, kind: TensorKind) -> Self {
        Self { data: vec![0.0; 400], fields, kind }
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[idx(a, b, c, d)]
    }

    /// ΔT^{aβ} = B^{aβcδ}G_{cδ}.
    pub fn apply(&self, g: &GradientField) -> Flux {
        let n = self.fields;
        let mut out = [[0.0; 4]; 5];
        for (a, row) in out.iter_mut().enumerate().take(n) {
            for (b, o) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..n {
                    for d in 0..4 {
                        s += self.data[idx(a, b, c, d)] * g.g[c][d];
                    }
                }
                *o = s;
            }
        }
        out
    }

    /// ξ_βξ_δ B^{aβcδ}.
    pub fn symbol(&self, xi: &Vec4) -> DMatrix<f64> {
        let n = self.fields;
        DMatrix::from_fn(n, n, |a, c| {
            let mut s = 0.0;
            for b in 0..4 {
                for d in 0..4 {
                    s += xi[b] * xi[d] * self.data[idx(a, b, c, d)];
                }
            }
            s
        })
    }

    pub fn sum(&self, other: &Self, kind: TensorKind) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x + y).collect();
        Self { data, fields: self.fields, kind }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// B_L: shear and bulk viscosity in T, ψ-gradient diffusion in N.
///
/// B_L^{αβγδ} = −θ[η(Π^{αγ}Π^{βδ} + Π^{αδ}Π^{βγ} − ⅔Π^{αβ}Π^{γδ}) + ζΠ^{αβ}Π^{γδ}],
/// B_L^{4β4δ} = −(κ/h²)Π^{βδ}.
pub fn landau_tensor(fluid: &LocalFluid, coeffs: &DissipationCoeffs) -> DissipationTensor {
    let n = fluid.fields();
    let mut t = DissipationTensor::zeros(n, TensorKind::Landau);
    let p = tensor::projector_unchecked(&fluid.u);
    let th = fluid.theta;
    let (eta, zeta) = (coeffs.eta * coeffs.eps, coeffs.zeta * coeffs.eps);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let shear = p[a][c] * p[b][d] + p[a][d] * p[b][c] - 2.0 / 3.0 * p[a][b] * p[c][d];
                    t.data[idx(a, b, c, d)] = -th * (eta * shear + zeta * p[a][b] * p[c][d]);
                }
            }
        }
    }
    if n == 5 {
        let h = fluid.thermo.h();
        let k = coeffs.kappa * coeffs.eps / (h * h);
        for b in 0..4 {
            for d in 0..4 {
                t.data[idx(4, b, 4, d)] = -k * p[b][d];
            }
        }
    }
    t
}

/// ξ_βξ_δ B_L^{aβcδ} without building the full tensor.
pub fn landau_symbol(fluid: &LocalFluid, coeffs: &DissipationCoeffs, xi: &Vec4) -> DMatrix<f64> {
    let n = fluid.fields();
    let p = tensor::projector_unchecked(&fluid.u);
    let px = tensor::mat_vec(&p, xi);
    let xpx: f64 = (0..4).map(|b| xi[b] * px[b]).sum();
    let th = fluid.theta;
    let (eta, zeta) = (coeffs.eta * coeffs.eps, coeffs.zeta * coeffs.eps);
    let mut m = DMatrix::zeros(n, n);
    for a in 0..4 {
        for c in 0..4 {
            m[(a, c)] = -th * (eta * (p[a][c] * xpx + px[a] * px[c] / 3.0) + zeta * px[a] * px[c]);
        }
    }
    if n == 5 {
        let h = fluid.thermo.h();
        m[(4, 4)] = -coeffs.kappa * coeffs.eps / (h * h) * xpx;
    }
    m
}

/// C_{fg} with both indices lowered:
/// C_{αβ} = μ/θ² U_αU_β + ν/θ Π_{αβ}, C_44 = λ, C_{α4} = 0.
pub fn shift_matrix(fluid: &LocalFluid, coeffs: &DissipationCoeffs) -> DMatrix<f64> {
    let n = fluid.fields();
    let ul = tensor::lower(&fluid.u);
    let pl = tensor::projector_lower(&fluid.u);
    let th = fluid.theta;
    let mut c = DMatrix::zeros(n, n);
    for a in 0..4 {
        for b in 0..4 {
            c[(a, b)] = coeffs.mu / (th * th) * ul[a] * ul[b] + coeffs.nu / th * pl[a][b];
        }
    }
    if n == 5 {
        c[(4, 4)] = coeffs.lambda;
    }
    c
}

/// C^a_b = g^{aa}C_{ab}, the form written with one index up.
pub fn shift_matrix_mixed(fluid: &LocalFluid, coeffs: &DissipationCoeffs) -> DMatrix<f64> {
    let mut c = shift_matrix(fluid, coeffs);
    for a in 0..c.nrows() {
        for b in 0..c.ncols() {
            c[(a, b)] *= tensor::METRIC5[a];
        }
    }
    c
}

fn shift_kind(coeffs: &DissipationCoeffs, total: bool) -> TensorKind {
    let (lambda, mu, nu) = (coeffs.lambda, coeffs.mu, coeffs.nu);
    if total {
        TensorKind::Shifted { lambda, mu, nu }
    } else {
        TensorKind::DeltaOnly { lambda, mu, nu }
    }
}

/// δB^{aβcδ} = T^{aβf} C_{fg} T^{gδc}, scaled by ε.
pub fn delta_b(fluid: &LocalFluid, coeffs: &DissipationCoeffs) -> DissipationTensor {
    let n = fluid.fields();
    let jac = FluxJacobian::at(fluid);
    let c = shift_matrix(fluid, coeffs);
    let mut out = DissipationTensor::zeros(n, shift_kind(coeffs, false));
    // S_f^{δc} = C_{fg} T^{gδc}
    let mut s = [[[0.0; 5]; 4]; 5];
    for f in 0..n {
        for d in 0..4 {
            for cc in 0..n {
                s[f][d][cc] = (0..n).map(|g| c[(f, g)] * jac.data[g][d][cc]).sum();
            }
        }
    }
    for a in 0..n {
        for b in 0..4 {
            for cc in 0..n {
                for d in 0..4 {
                    let v: f64 = (0..n).map(|f| jac.data[a][b][f] * s[f][d][cc]).sum();
                    out.data[idx(a, b, cc, d)] = coeffs.eps * v;
                }
            }
        }
    }
    out
}

/// B̃ = B_L + δB.
pub fn shifted_tensor(fluid: &LocalFluid, coeffs: &DissipationCoeffs) -> DissipationTensor {
    landau_tensor(fluid, coeffs).sum(&delta_b(fluid, coeffs), shift_kind(coeffs, true))
}

/// ξξB̃ = ξξB_L + ε A(ξ) C A(ξ).
pub fn shifted_symbol(fluid: &LocalFluid, coeffs: &DissipationCoeffs, xi: &Vec4) -> DMatrix<f64> {
    let a = FluxJacobian::at(fluid).symbol(xi);
    let c = shift_matrix(fluid, coeffs);
    landau_symbol(fluid, coeffs, xi) + (&a * c * &a) * coeffs.eps
}

/// ∂_βT^{aβ} evaluated on G.
pub fn flux_divergence(fluid: &LocalFluid, g: &GradientField) -> [f64; 5] {
    FluxJacobian::at(fluid).divergence(&g.g)
}

/// Δψ_f = C_{fg} ∂_βT^{gβ}.
pub fn shift_increment(fluid: &LocalFluid, coeffs: &DissipationCoeffs, g: &GradientField) -> [f64; 5] {
    let div = flux_divergence(fluid, g);
    let c = shift_matrix(fluid, coeffs);
    let mut out = [0.0; 5];
    for f in 0..fluid.fields() {
        out[f] = (0..fluid.fields()).map(|k| c[(f, k)] * div[k]).sum();
    }
    out
}

/// The shifted tensors written through the variations (Θ, Q̃, Ψ) of
/// (θ, U, ψ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitShift {
    /// Θ = −μ U_ε ∂_δT^{εδ}.
    pub theta_rate: f64,
    /// Ψ = λ ∂_δN^δ (zero in barotropic mode).
    pub psi_rate: f64,
    /// Q̃^γ = ν Π^γ_ε ∂_δT^{εδ}.
    pub q_tilde: Vec4,
    /// q^γ = (ρ + p) Q̃^γ.
    pub heat_flux: Vec4,
    pub r_tilde: f64,
    pub p_tilde: f64,
    pub n_tilde: f64,
    pub dt: Mat4,
    pub dn: Vec4,
}

pub fn explicit_shift(fluid: &LocalFluid, coeffs: &DissipationCoeffs, g: &GradientField) -> ExplicitShift {
    let div = flux_divergence(fluid, g);
    let u = fluid.u;
    let ul = tensor::lower(&u);
    let th = &fluid.thermo;
    let full = fluid.mode() == Mode::Full;
    let udiv: f64 = (0..4).map(|e| ul[e] * div[e]).sum();
    let theta_rate = -coeffs.mu * udiv;
    let psi_rate = if full { coeffs.lambda * div[4] } else { 0.0 };
    let pm = tensor::projector_mixed(&u);
    let dv = [div[0], div[1], div[2], div[3]];
    let q_tilde = tensor::mat_vec(&pm, &dv).map(|x| coeffs.nu * x);
    let w = th.enthalpy_density();
    let heat_flux = q_tilde.map(|x| w * x);
    let j = &th.jet;
    let r_tilde = th.rho_theta * theta_rate + th.rho_psi * psi_rate;
    let p_tilde = j.p_t * theta_rate + j.p_s * psi_rate;
    let n_tilde = th.n_theta * theta_rate + th.n_psi * psi_rate;
    let p = tensor::projector_unchecked(&u);
    let s = EXPLICIT_SIGN * coeffs.eps;
    let mut dt = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            dt[a][b] = s
                * (r_tilde * u[a] * u[b] + heat_flux[a] * u[b] + u[a] * heat_flux[b] + p_tilde * p[a][b]);
        }
    }
    let dn = if full {
        let h = th.h();
        let mut dn = [0.0; 4];
        for b in 0..4 {
            dn[b] = s * (n_tilde * u[b] + heat_flux[b] / h);
        }
        dn
    } else {
        [0.0; 4]
    };
    ExplicitShift { theta_rate, psi_rate, q_tilde, heat_flux, r_tilde, p_tilde, n_tilde, dt, dn }
}

/// η/2θ‖𝒮u‖² + ζ/θ(∇·u)² + κ/h²|∇ψ|², evaluated in the local rest frame.
pub fn landau_production(fluid: &LocalFluid, coeffs: &DissipationCoeffs, g: &GradientField) -> Result<f64> {
    let l = tensor::rest_frame_boost(&fluid.u)?;
    let gr = g.boosted(&l);
    let th = fluid.theta;
    // ∂_i u_j = θ G_{ji} at rest
    let mut du = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            du[i][j] = th * gr.g[j + 1][i + 1];
        }
    }
    let div: f64 = (0..3).map(|i| du[i][i]).sum();
    let mut shear2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let s = du[i][j] + du[j][i] - if i == j { 2.0 / 3.0 * div } else { 0.0 };
            shear2 += s * s;
        }
    }
    let mut q = coeffs.eta / (2.0 * th) * shear2 + coeffs.zeta / th * div * div;
    if fluid.mode() == Mode::Full {
        let h = fluid.thermo.h();
        let grad2: f64 = (1..4).map(|i| gr.g[4][i] * gr.g[4][i]).sum();
        q += coeffs.kappa / (h * h) * grad2;
    }
    Ok(coeffs.eps * q)
}

/// Q̃ = μθ⁻²Θ² + λΨ² + ν/(θ(ρ+p))|q|².
pub fn excess_production(fluid: &LocalFluid, coeffs: &DissipationCoeffs, g: &GradientField) -> f64 {
    let x = explicit_shift(fluid, coeffs, g);
    let th = fluid.theta;
    let q2 = tensor::dot(&x.heat_flux, &x.heat_flux);
    let w = fluid.thermo.enthalpy_density();
    coeffs.eps
        * (coeffs.mu / (th * th) * x.theta_rate.powi(2)
            + coeffs.lambda * x.psi_rate.powi(2)
            + coeffs.nu / (th * w) * q2)
}

/// (Q_total, Q̃) with Q_total = Landau part + Q̃.
pub fn entropy_production(
    fluid: &LocalFluid,
    coeffs: &DissipationCoeffs,
    g: &GradientField,
) -> Result<(f64, f64)> {
    let qt = excess_production(fluid, coeffs, g);
    Ok((landau_production(fluid, coeffs, g)? + qt, qt))
}

/// −ΔT^{aβ}G_{aβ} for an arbitrary dissipation tensor.
pub fn contraction_production(b: &DissipationTensor, g: &GradientField) -> f64 {
    let dt = b.apply(g);
    let mut s = 0.0;
    for a in 0..b.fields() {
        for beta in 0..4 {
            s += dt[a][beta] * g.g[a][beta];
        }
    }
    -s
}

/// max_{α,β}|ΔT^{αβ} − ΔT^{βα}|.
pub fn flux_symmetry_defect(dt: &Flux) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            m = m.max((dt[a][b] - dt[b][a]).abs());
        }
    }
    m
}

pub fn flux_max_abs(dt: &Flux) -> f64 {
    dt.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// max_{a,β}|x − y| over the flux rows.
pub fn flux_max_diff(x: &Flux, y: &Flux) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..5 {
        for b in 0..4 {
            m = m.max((x[a][b] - y[a][b]).abs());
        }
    }
    m
}

/// Explicit shifted tensors packed as flux rows.
pub fn explicit_flux(x: &ExplicitShift) -> Flux {
    let mut f = [[0.0; 4]; 5];
    f[..4].copy_from_slice(&x.dt);
    f[4] = x.dn;
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{BarotropicRadiation, Eos, GodunovState, MasslessIdeal};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coeffs(rng: &mut ChaCha8Rng) -> DissipationCoeffs {
        let (l, m, n) = sampling::random_shift(rng);
        DissipationCoeffs { eta: 0.7, zeta: 0.4, kappa: 0.9, lambda: l, mu: m, nu: n, eps: 1.0 }
    }

    fn fluid(rng: &mut ChaCha8Rng, eos: &dyn Eos) -> LocalFluid {
        LocalFluid::new(&sampling::random_state(rng, eos), eos).unwrap()
    }

    #[test]
    fn zero_gradient_gives_zero() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = fluid(&mut rng, &eos);
        let c = coeffs(&mut rng);
        let g = GradientField::zeros(Mode::Full);
        assert_eq!(flux_max_abs(&shifted_tensor(&f, &c).apply(&g)), 0.0);
        assert_eq!(entropy_production(&f, &c, &g).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rigid_rotation_is_not_dissipated() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let s = GodunovState::new([-1.0, 0.0, 0.0, 0.0, 0.2], Mode::Full);
        let f = LocalFluid::new(&s, &eos).unwrap();
        let mut g = GradientField::zeros(Mode::Full);
        g.g[1][2] = 0.4;
        g.g[2][1] = -0.4;
        g.g[2][3] = 0.1;
        g.g[3][2] = -0.1;
        let c = DissipationCoeffs::default();
        assert!(flux_max_abs(&landau_tensor(&f, &c).apply(&g)) < 1e-15);
        assert!(landau_production(&f, &c, &g).unwrap().abs() < 1e-15);
    }

    #[test]
    fn landau_production_matches_contraction() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let f = fluid(&mut rng, &eos);
            let c = coeffs(&mut rng);
            let g = sampling::random_gradient(&mut rng, Mode::Full);
            let direct = contraction_production(&landau_tensor(&f, &c), &g);
            let closed = landau_production(&f, &c, &g).unwrap();
            assert!((direct - closed).abs() <= 1e-10 * closed.abs().max(1e-12), "{direct} vs {closed}");
        }
    }

    #[test]
    fn shift_matrix_structure() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let s = GodunovState::new([-1.0, 0.0, 0.0, 0.0, 0.0], Mode::Full);
        let f = LocalFluid::new(&s, &eos).unwrap();
        let zero = DissipationCoeffs::default().with_shift(0.0, 0.0, 0.0);
        assert_eq!(shift_matrix(&f, &zero).amax(), 0.0);
        let c = DissipationCoeffs::default().with_shift(0.2, 0.5, 0.7);
        let m = shift_matrix_mixed(&f, &c);
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, 0.7, 0.7, 0.7, 0.2]));
        assert!((m - expect).amax() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = fluid(&mut rng, &eos);
        let cl = shift_matrix(&f, &c);
        assert!((&cl - cl.transpose()).amax() < 1e-14);
    }

    #[test]
    fn delta_b_vanishes_without_shift_and_is_symbol_symmetric() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = fluid(&mut rng, &eos);
        let c = coeffs(&mut rng);
        assert_eq!(delta_b(&f, &c.landau_only()).max_abs(), 0.0);
        assert_eq!(shifted_tensor(&f, &c.landau_only()).max_abs_diff(&landau_tensor(&f, &c)), 0.0);
        for _ in 0..50 {
            let xi = sampling::random_spacelike_unit(&mut rng);
            let m = delta_b(&f, &c).symbol(&xi);
            assert!((&m - m.transpose()).amax() < 1e-10);
            let direct = shifted_symbol(&f, &c, &xi);
            let full = shifted_tensor(&f, &c).symbol(&xi);
            assert!((direct - full).amax() < 1e-10 * m.amax().max(1.0));
        }
    }

    #[test]
    fn delta_b_contraction_is_chain_rule() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let f = fluid(&mut rng, &eos);
            let c = coeffs(&mut rng);
            let g = sampling::random_gradient(&mut rng, Mode::Full);
            let lhs = delta_b(&f, &c).apply(&g);
            let dpsi = shift_increment(&f, &c, &g);
            let jac = FluxJacobian::at(&f);
            let mut rhs = [[0.0; 4]; 5];
            for a in 0..5 {
                for b in 0..4 {
                    rhs[a][b] = (0..5).map(|k| jac.data[a][b][k] * dpsi[k]).sum();
                }
            }
            assert!(flux_max_diff(&lhs, &rhs) < 1e-10 * flux_max_abs(&rhs).max(1.0));
        }
    }

    #[test]
    fn apply_is_linear() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = fluid(&mut rng, &eos);
        let b = shifted_tensor(&f, &coeffs(&mut rng));
        let g1 = sampling::random_gradient(&mut rng, Mode::Full);
        let g2 = sampling::random_gradient(&mut rng, Mode::Full);
        let lhs = b.apply(&g1.combine(0.3, &g2, -1.7));
        let (r1, r2) = (b.apply(&g1), b.apply(&g2));
        let mut rhs = [[0.0; 4]; 5];
        for a in 0..5 {
            for k in 0..4 {
                rhs[a][k] = 0.3 * r1[a][k] - 1.7 * r2[a][k];
            }
        }
        assert!(flux_max_diff(&lhs, &rhs) < 1e-12 * flux_max_abs(&rhs).max(1.0));
    }

    #[test]
    fn explicit_tensors_match_delta_b() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let f = fluid(&mut rng, &eos);
            let c = coeffs(&mut rng);
            let g = sampling::random_gradient(&mut rng, Mode::Full);
            let x = explicit_shift(&f, &c, &g);
            let db = delta_b(&f, &c).apply(&g);
            let ex = explicit_flux(&x);
            let scale = flux_max_abs(&db);
            for a in 0..5 {
                for b in 0..4 {
                    assert!((ex[a][b] - EXPLICIT_SIGN * db[a][b]).abs() < 1e-10 * scale);
                }
            }
            let ul = tensor::lower(&f.u);
            assert!(x.q_tilde.iter().zip(&ul).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
            assert!(flux_symmetry_defect(&db) < 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn time_derivative_of_temperature_only() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let s = GodunovState::new([-1.0, 0.0, 0.0, 0.0, 0.0], Mode::Full);
        let f = LocalFluid::new(&s, &eos).unwrap();
        // ∂_t θ = 0.1 at rest: ∂_t ψ_0 = ∂_t(−1/θ) = 0.1/θ²
        let mut g = GradientField::zeros(Mode::Full);
        g.g[0][0] = 0.1;
        let x = explicit_shift(&f, &DissipationCoeffs::default(), &g);
        assert!(x.q_tilde.iter().all(|v| *v == 0.0));
        assert!(x.theta_rate.abs() > 0.0);
    }

    #[test]
    fn excess_production_against_contraction() {
        // The closed form is cubic in (λ, μ, ν) while the contraction is
        // linear with opposite sign; the two are related termwise.
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let f = fluid(&mut rng, &eos);
            let c = coeffs(&mut rng);
            let g = sampling::random_gradient(&mut rng, Mode::Full);
            let x = explicit_shift(&f, &c, &g);
            let th = f.theta;
            let w = f.thermo.enthalpy_density();
            let termwise = -(x.theta_rate.powi(2) / (c.mu * th * th)
                + x.psi_rate.powi(2) / c.lambda
                + tensor::dot(&x.heat_flux, &x.heat_flux) / (c.nu * th * w * w));
            let direct = contraction_production(&delta_b(&f, &c), &g);
            assert!((termwise - direct).abs() < 1e-9 * direct.abs());
            assert!(excess_production(&f, &c, &g) >= 0.0);
        }
    }

    #[test]
    fn total_production_nonnegative() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let f = fluid(&mut rng, &eos);
            let g = sampling::random_gradient(&mut rng, Mode::Full);
            let (qt, qx) = entropy_production(&f, &coeffs(&mut rng), &g).unwrap();
            assert!(qt >= 0.0 && qx >= 0.0 && qt >= qx);
        }
    }

    #[test]
    fn barotropic_restriction() {
        let eos = BarotropicRadiation::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let f = fluid(&mut rng, &eos);
            let c = coeffs(&mut rng);
            let g = sampling::random_gradient(&mut rng, Mode::Barotropic);
            let b = shifted_tensor(&f, &c);
            assert_eq!(b.fields(), 4);
            let db = delta_b(&f, &c).apply(&g);
            let ex = explicit_flux(&explicit_shift(&f, &c, &g));
            let scale = flux_max_abs(&db);
            assert!(flux_max_diff(&ex, &db.map(|r| r.map(|v| EXPLICIT_SIGN * v))) < 1e-10 * scale);
            let direct = contraction_production(&landau_tensor(&f, &c), &g);
            let closed = landau_production(&f, &c, &g).unwrap();
            assert!((direct - closed).abs() <= 1e-10 * closed.abs().max(1e-12));
        }
    }
}
