//! Equations of state in (θ, ψ), Godunov states, perfect-fluid tensors and
//! their flux Jacobians.
//!
//! Godunov variables are ψ_a = (U_α/θ, g/θ); slot 4 carries the particle
//! number equation and the potential ψ. With X^β = p ψ^β the fluxes are
//! T^{aβ} = ∂X^β/∂ψ_a, hence T^{aβc} = ∂T^{aβ}/∂ψ_c is symmetric in (a, c).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, Mat4, Vec4, METRIC};

/// Five-field (θ, U, ψ) or barotropic four-field (θ, U) theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Full,
    Barotropic,
}

impl Mode {
    pub fn fields(self) -> usize {
        match self {
            Mode::Full => 5,
            Mode::Barotropic => 4,
        }
    }
}

/// Admissible box for (θ, ψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub theta_min: f64,
    pub theta_max: f64,
    pub psi_min: f64,
    pub psi_max: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { theta_min: 1e-3, theta_max: 1e3, psi_min: -10.0, psi_max: 10.0 }
    }
}

impl Domain {
    pub fn check(&self, theta: f64, psi: f64, mode: Mode) -> Result<()> {
        if !(theta >= self.theta_min && theta <= self.theta_max) {
            return Err(Error::Domain(format!(
                "theta = {theta} outside [{}, {}]",
                self.theta_min, self.theta_max
            )));
        }
        if mode == Mode::Full && !(psi >= self.psi_min && psi <= self.psi_max) {
            return Err(Error::Domain(format!(
                "psi = {psi} outside [{}, {}]",
                self.psi_min, self.psi_max
            )));
        }
        Ok(())
    }
}

/// p(θ, ψ) with its first and second partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PressureJet {
    pub p: f64,
    pub p_t: f64,
    pub p_s: f64,
    pub p_tt: f64,
    pub p_ts: f64,
    pub p_ss: f64,
}

/// An equation of state. Implementors are immutable after construction.
///
/// `energy_density` and `number_density` are the closed forms the
/// implementation claims; the consistency suite checks them against
/// ρ + p = θ p_θ and n = p_ψ / θ.
pub trait Eos: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn mode(&self) -> Mode;
    fn domain(&self) -> &Domain;
    fn pressure(&self, theta: f64, psi: f64) -> PressureJet;
    fn energy_density(&self, theta: f64, psi: f64) -> f64;
    fn number_density(&self, theta: f64, psi: f64) -> f64;
}

/// p = p₀ θ⁴ e^ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct MasslessIdeal {
    p0: f64,
    domain: Domain,
}

impl MasslessIdeal {
    pub fn new(p0: f64) -> Result<Self> {
        Self::with_domain(p0, Domain::default())
    }

    pub fn with_domain(p0: f64, domain: Domain) -> Result<Self> {
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(Error::InvalidInput(format!("p0 = {p0} must be positive")));
        }
        Ok(Self { p0, domain })
    }
}

impl Eos for MasslessIdeal {
    fn name(&self) -> &str {
        "massless-ideal"
    }

    fn mode(&self) -> Mode {
        Mode::Full
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn pressure(&self, theta: f64, psi: f64) -> PressureJet {
        let p = self.p0 * theta.powi(4) * psi.exp();
        PressureJet {
            p,
            p_t: 4.0 * p / theta,
            p_s: p,
            p_tt: 12.0 * p / (theta * theta),
            p_ts: 4.0 * p / theta,
            p_ss: p,
        }
    }

    fn energy_density(&self, theta: f64, psi: f64) -> f64 {
        3.0 * self.p0 * theta.powi(4) * psi.exp()
    }

    fn number_density(&self, theta: f64, psi: f64) -> f64 {
        self.p0 * theta.powi(3) * psi.exp()
    }
}

/// Barotropic radiation p = a θ⁴.
#[derive(Debug, Clone, PartialEq)]
pub struct BarotropicRadiation {
    a: f64,
    domain: Domain,
}

impl BarotropicRadiation {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_domain(a, Domain::default())
    }

    pub fn with_domain(a: f64, domain: Domain) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("a = {a} must be positive")));
        }
        Ok(Self { a, domain })
    }
}

impl Eos for BarotropicRadiation {
    fn name(&self) -> &str {
        "barotropic-radiation"
    }

    fn mode(&self) -> Mode {
        Mode::Barotropic
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn pressure(&self, theta: f64, _psi: f64) -> PressureJet {
        let p = self.a * theta.powi(4);
        PressureJet {
            p,
            p_t: 4.0 * p / theta,
            p_tt: 12.0 * p / (theta * theta),
            ..PressureJet::default()
        }
    }

    fn energy_density(&self, theta: f64, _psi: f64) -> f64 {
        3.0 * self.a * theta.powi(4)
    }

    fn number_density(&self, _theta: f64, _psi: f64) -> f64 {
        0.0
    }
}

/// Equation of state selected by name in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EosSpec {
    MasslessIdeal {
        #[serde(default = "one")]
        p0: f64,
        #[serde(default)]
        domain: Domain,
    },
    BarotropicRadiation {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        domain: Domain,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for EosSpec {
    fn default() -> Self {
        EosSpec::MasslessIdeal { p0: 1.0, domain: Domain::default() }
    }
}

impl EosSpec {
    pub fn build(&self) -> Result<Arc<dyn Eos>> {
        Ok(match self {
            EosSpec::MasslessIdeal { p0, domain } => Arc::new(MasslessIdeal::with_domain(*p0, *domain)?),
            EosSpec::BarotropicRadiation { a, domain } => {
                Arc::new(BarotropicRadiation::with_domain(*a, *domain)?)
            }
        })
    }

    /// The barotropic counterpart used by `--barotropic`.
    pub fn barotropic(&self) -> EosSpec {
        match self {
            EosSpec::MasslessIdeal { p0, domain } => {
                EosSpec::BarotropicRadiation { a: *p0, domain: *domain }
            }
            other => other.clone(),
        }
    }
}

/// Thermodynamic quantities at (θ, ψ). Derivatives of ρ and n are formed
/// from the pressure jet; ρ and n themselves come from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub theta: f64,
    pub psi: f64,
    pub jet: PressureJet,
    pub p: f64,
    pub rho: f64,
    pub n: f64,
    pub rho_theta: f64,
    pub rho_psi: f64,
    pub n_theta: f64,
    pub n_psi: f64,
}

impl Thermo {
    pub fn at(eos: &dyn Eos, theta: f64, psi: f64) -> Result<Self> {
        let mode = eos.mode();
        let psi = if mode == Mode::Barotropic { 0.0 } else { psi };
        eos.domain().check(theta, psi, mode)?;
        let jet = eos.pressure(theta, psi);
        let rho = eos.energy_density(theta, psi);
        let n = eos.number_density(theta, psi);
        let t = Self {
            theta,
            psi,
            jet,
            p: jet.p,
            rho,
            n,
            rho_theta: theta * jet.p_tt,
            rho_psi: theta * jet.p_ts - jet.p_s,
            n_theta: jet.p_ts / theta - jet.p_s / (theta * theta),
            n_psi: jet.p_ss / theta,
        };
        if !(t.p.is_finite() && t.rho.is_finite() && t.n.is_finite()) {
            return Err(Error::Domain(format!("non-finite thermodynamics at theta={theta}, psi={psi}")));
        }
        if !(t.rho + t.p > 0.0) || (mode == Mode::Full && !(t.n > 0.0)) {
            return Err(Error::Domain(format!(
                "inadmissible thermodynamics at theta={theta}, psi={psi}: rho+p={}, n={}",
                t.rho + t.p,
                t.n
            )));
        }
        Ok(t)
    }

    /// ρ + p.
    pub fn enthalpy_density(&self) -> f64 {
        self.rho + self.p
    }

    /// Enthalpy per particle h = (ρ + p)/n.
    pub fn h(&self) -> f64 {
        self.enthalpy_density() / self.n
    }
}

/// Godunov variables ψ_a; slot 4 is unused (zero) in barotropic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GodunovState {
    comps: [f64; 5],
    mode: Mode,
}

/// (θ, U^α, ψ) recovered from a Godunov state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub theta: f64,
    pub u: Vec4,
    pub psi: f64,
}

impl GodunovState {
    pub fn new(comps: [f64; 5], mode: Mode) -> Self {
        let mut comps = comps;
        if mode == Mode::Barotropic {
            comps[4] = 0.0;
        }
        Self { comps, mode }
    }

    pub fn from_slice(values: &[f64], mode: Mode) -> Result<Self> {
        if values.len() != mode.fields() {
            return Err(Error::InvalidInput(format!(
                "expected {} components, got {}",
                mode.fields(),
                values.len()
            )));
        }
        let mut comps = [0.0; 5];
        comps[..values.len()].copy_from_slice(values);
        Ok(Self::new(comps, mode))
    }

    pub fn encode(theta: f64, u: &Vec4, psi: f64, mode: Mode) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::Domain(format!("theta = {theta} must be positive")));
        }
        tensor::check_unit_timelike(u)?;
        let ul = tensor::lower(u);
        Ok(Self::new([ul[0] / theta, ul[1] / theta, ul[2] / theta, ul[3] / theta, psi], mode))
    }

    /// Rest state boosted to 3-velocity `v`.
    pub fn moving(theta: f64, v: &[f64; 3], psi: f64, mode: Mode) -> Result<Self> {
        Self::encode(theta, &tensor::four_velocity(v)?, psi, mode)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn fields(&self) -> usize {
        self.mode.fields()
    }

    /// The active components (length 4 or 5).
    pub fn comps(&self) -> &[f64] {
        &self.comps[..self.fields()]
    }

    pub fn raw(&self) -> &[f64; 5] {
        &self.comps
    }

    /// ψ_α with the index down.
    pub fn psi_lower(&self) -> Vec4 {
        [self.comps[0], self.comps[1], self.comps[2], self.comps[3]]
    }

    pub fn decode(&self) -> Result<Decoded> {
        if self.comps.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite state {:?}", self.comps)));
        }
        let pl = self.psi_lower();
        let pu = tensor::raise(&pl);
        let norm = tensor::dot(&pu, &pu);
        if !(norm < 0.0) {
            return Err(Error::Domain(format!(
                "psi_alpha is not timelike: psi_alpha psi^alpha = {norm}"
            )));
        }
        let theta = (-norm).powf(-0.5);
        let mut u = pu.map(|x| theta * x);
        if u[0] < 0.0 {
            return Err(Error::Domain("psi_alpha is past-directed".into()));
        }
        // renormalise away rounding so that U.U = -1 holds tightly
        let s = (-tensor::dot(&u, &u)).sqrt();
        u = u.map(|x| x / s);
        Ok(Decoded { theta, u, psi: self.comps[4] })
    }

    /// The state seen from a frame related by the boost `lambda`.
    pub fn boosted(&self, lambda: &Mat4) -> Self {
        let cov = tensor::covector_transform(lambda);
        let p = tensor::mat_vec(&cov, &self.psi_lower());
        Self::new([p[0], p[1], p[2], p[3], self.comps[4]], self.mode)
    }
}

/// State plus thermodynamics, the common input of every tensor builder.
#[derive(Debug, Clone, Copy)]
pub struct LocalFluid {
    pub state: GodunovState,
    pub theta: f64,
    pub u: Vec4,
    pub thermo: Thermo,
}

impl LocalFluid {
    pub fn new(state: &GodunovState, eos: &dyn Eos) -> Result<Self> {
        if state.mode() != eos.mode() {
            return Err(Error::InvalidInput(format!(
                "state mode {:?} does not match equation of state {}",
                state.mode(),
                eos.name()
            )));
        }
        let d = state.decode()?;
        let thermo = Thermo::at(eos, d.theta, d.psi)?;
        Ok(Self { state: *state, theta: d.theta, u: d.u, thermo })
    }

    pub fn mode(&self) -> Mode {
        self.state.mode()
    }

    pub fn fields(&self) -> usize {
        self.state.fields()
    }

    /// ψ^α = U^α/θ.
    pub fn psi_upper(&self) -> Vec4 {
        self.u.map(|x| x / self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectFluid {
    pub t: Mat4,
    pub n: Vec4,
}

/// T^{αβ} = (ρ+p)U^αU^β + p g^{αβ}, N^β = n U^β.
pub fn perfect_fluid_tensors(state: &GodunovState, eos: &dyn Eos) -> Result<PerfectFluid> {
    let f = LocalFluid::new(state, eos)?;
    let th = &f.thermo;
    let w = th.enthalpy_density();
    let mut t = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            t[a][b] = w * f.u[a] * f.u[b] + if a == b { th.p * METRIC[a] } else { 0.0 };
        }
    }
    Ok(PerfectFluid { t, n: f.u.map(|x| th.n * x) })
}

/// Flux rows T^{aβ}: rows 0..3 energy-momentum, row 4 particle current.
pub type Flux = [[f64; 4]; 5];

pub fn flux_rows(state: &GodunovState, eos: &dyn Eos) -> Result<Flux> {
    let pf = perfect_fluid_tensors(state, eos)?;
    let mut out = [[0.0; 4]; 5];
    out[..4].copy_from_slice(&pf.t);
    if state.mode() == Mode::Full {
        out[4] = pf.n;
    }
    Ok(out)
}

/// X^β = p ψ^β.
pub fn generating_potential(state: &GodunovState, eos: &dyn Eos) -> Result<Vec4> {
    let f = LocalFluid::new(state, eos)?;
    Ok(f.psi_upper().map(|x| f.thermo.p * x))
}

/// T^{aβc} = ∂T^{aβ}/∂ψ_c stored as `data[a][β][c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxJacobian {
    pub data: [[[f64; 5]; 4]; 5],
    pub fields: usize,
}

impl FluxJacobian {
    pub fn at(fluid: &LocalFluid) -> Self {
        let th = fluid.theta;
        let j = &fluid.thermo.jet;
        let pu = fluid.psi_upper();
        let th3 = th.powi(3);
        let f = th3 * j.p_t;
        let f_t = 3.0 * th * th * j.p_t + th3 * j.p_tt;
        let g = |a: usize, b: usize| if a == b { METRIC[a] } else { 0.0 };
        let mut data = [[[0.0; 5]; 4]; 5];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    data[a][b][c] = j.p_t * th3 * pu[c] * g(a, b)
                        + f_t * th3 * pu[c] * pu[a] * pu[b]
                        + f * (g(a, c) * pu[b] + pu[a] * g(b, c));
                }
            }
        }
        let fields = fluid.fields();
        if fields == 5 {
            for a in 0..4 {
                for b in 0..4 {
                    let v = j.p_s * g(a, b) + th3 * j.p_ts * pu[a] * pu[b];
                    data[a][b][4] = v;
                    data[4][b][a] = v;
                }
            }
            for b in 0..4 {
                data[4][b][4] = j.p_ss * pu[b];
            }
        }
        Self { data, fields }
    }

    /// ∂_β T^{aβ} evaluated on the gradient G_{cβ}.
    pub fn divergence(&self, g: &[[f64; 4]; 5]) -> [f64; 5] {
        let n = self.fields;
        let mut out = [0.0; 5];
        for (a, o) in out.iter_mut().enumerate().take(n) {
            let mut s = 0.0;
            for b in 0..4 {
                for c in 0..n {
                    s += self.data[a][b][c] * g[c][b];
                }
            }
            *o = s;
        }
        out
    }

    /// A(ξ)^{ac} = ξ_β T^{aβc} for a covector ξ.
    pub fn symbol(&self, xi: &Vec4) -> DMatrix<f64> {
        let n = self.fields;
        DMatrix::from_fn(n, n, |a, c| (0..4).map(|b| xi[b] * self.data[a][b][c]).sum())
    }

    /// max |T^{aβc} − T^{cβa}|.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.fields;
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in 0..4 {
                for c in 0..n {
                    m = m.max((self.data[a][b][c] - self.data[c][b][a]).abs());
                }
            }
        }
        m
    }
}

pub fn flux_jacobian(state: &GodunovState, eos: &dyn Eos) -> Result<FluxJacobian> {
    Ok(FluxJacobian::at(&LocalFluid::new(state, eos)?))
}

/// Relative defects |n − p_ψ/θ| and |ρ + p − θ p_θ| at (θ, ψ).
pub fn consistency_defects(eos: &dyn Eos, theta: f64, psi: f64) -> Result<(f64, f64)> {
    let t = Thermo::at(eos, theta, psi)?;
    let n_ref = t.jet.p_s / theta;
    let dn = if eos.mode() == Mode::Full {
        (t.n - n_ref).abs() / t.n.abs().max(n_ref.abs()).max(1e-300)
    } else {
        0.0
    };
    let w_ref = theta * t.jet.p_t;
    let dw = (t.enthalpy_density() - w_ref).abs() / w_ref.abs().max(1e-300);
    Ok((dn, dw))
}
