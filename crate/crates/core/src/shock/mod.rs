//! Standing planar shocks with normal ξ = e¹: sonic base state, Hugoniot
//! end states, heteroclinic dissipation profiles and their validation.

pub mod profile;
pub mod validate;

pub use profile::{profile_solve, ProfileOptions, ProfileSolution};
pub use validate::{alpha_trend, hausdorff, profile_validate, ProfileReport, TrendRow};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::characteristics::{self, E1};
use crate::error::{Error, Result};
use crate::fluid::{self, Eos, FluxJacobian, GodunovState, LocalFluid, Mode};
use crate::tensor::{linalg, EigTolerances, Vec4};

/// ξ_β T^{aβ}(ψ), length 4 or 5.
pub fn normal_flux(state: &GodunovState, eos: &dyn Eos, xi: &Vec4) -> Result<Vec<f64>> {
    let f = fluid::flux_rows(state, eos)?;
    Ok((0..state.fields()).map(|a| (0..4).map(|b| xi[b] * f[a][b]).sum()).collect())
}

/// A(ψ) = ξ_β T^{aβc}(ψ).
pub fn normal_symbol(state: &GodunovState, eos: &dyn Eos, xi: &Vec4) -> Result<DMatrix<f64>> {
    Ok(fluid::flux_jacobian(state, eos)?.symbol(xi))
}

/// Speed of the acoustic family that is slow in the standing frame.
pub fn acoustic_speed(state: &GodunovState, eos: &dyn Eos) -> Result<f64> {
    let s = characteristics::euler_characteristics(state, eos, &[1.0, 0.0, 0.0])?;
    Ok(s.speeds[0])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct SonicState {
    pub state: GodunovState,
    /// Normal 3-velocity u¹/u⁰.
    pub velocity: f64,
    /// Unit null vector of A(e¹), oriented so that the acoustic speed
    /// increases along it.
    pub r: Vec<f64>,
    pub null_residual: f64,
    pub kernel_dimension: usize,
}

/// The state moving along e¹ at the sound speed, found by bisection on the
/// acoustic speed over normal velocities in [0, 0.99].
pub fn sonic_base_state(eos: &dyn Eos, theta: f64, psi: f64) -> Result<SonicState> {
    let mode = eos.mode();
    let speed_at = |v: f64| -> Result<f64> {
        acoustic_speed(&GodunovState::moving(theta, &[v, 0.0, 0.0], psi, mode)?, eos)
    };
    let (mut lo, mut hi) = (0.0, 0.99);
    let (flo, fhi) = (speed_at(lo)?, speed_at(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Bracket { what: "acoustic speed".into(), lo, hi });
    }
    while hi - lo > 1e-16 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if speed_at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = if speed_at(hi)?.abs() < speed_at(lo)?.abs() { hi } else { lo };
    let state = GodunovState::moving(theta, &[v, 0.0, 0.0], psi, mode)?;
    let a = normal_symbol(&state, eos, &E1)?;
    let e = linalg::sym_eig(&a, &EigTolerances::default())?;
    let k = (0..e.values.len())
        .min_by(|&i, &j| e.values[i].abs().total_cmp(&e.values[j].abs()))
        .unwrap_or(0);
    let mut r: Vec<f64> = e.vectors.column(k).iter().copied().collect();
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let kernel_dimension = svd.singular_values.iter().filter(|s| **s <= 1e-8 * smax).count();
    // orient r by genuine nonlinearity
    let h = 1e-6;
    let shift = |s: f64| -> Result<f64> {
        let mut c = *state.raw();
        for (j, x) in r.iter().enumerate() {
            c[j] += s * x;
        }
        acoustic_speed(&GodunovState::new(c, mode), eos)
    };
    if shift(h)? - shift(-h)? < 0.0 {
        r.iter_mut().for_each(|x| *x = -*x);
    }
    let null_residual = (&a * DVector::from_column_slice(&r)).norm();
    Ok(SonicState { state, velocity: v, r, null_residual, kernel_dimension })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HugoniotOptions {
    /// Largest accepted α (relative state norm).
    pub alpha_cap: f64,
    /// Continuation steps from α = 0.
    pub steps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
}

impl Default for HugoniotOptions {
    fn default() -> Self {
        Self { alpha_cap: 0.2, steps: 4, newton_tol: 1e-14, max_newton: 40, max_halvings: 5 }
    }
}

/// End states of a standing shock: ξ_βT^{aβ}(ψ⁻) = ξ_βT^{aβ}(ψ⁺) = q^a.
#[derive(Debug, Clone, Serialize)]
pub struct ShockData {
    pub minus: GodunovState,
    pub plus: GodunovState,
    pub xi: Vec4,
    pub q: Vec<f64>,
    /// Index of the acoustic family among ascending speeds.
    pub family: usize,
    pub amplitude: f64,
    pub rh_residual: f64,
    pub speed_minus: f64,
    pub speed_plus: f64,
    pub lax: bool,
    pub sonic: GodunovState,
    pub r: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ShockData {
    pub fn mode(&self) -> Mode {
        self.minus.mode()
    }

    pub fn jump(&self) -> f64 {
        let d: Vec<f64> =
            self.minus.comps().iter().zip(self.plus.comps()).map(|(a, b)| a - b).collect();
        norm(&d)
    }
}

struct Hugoniot<'a> {
    eos: &'a dyn Eos,
    mode: Mode,
    star: Vec<f64>,
    r: Vec<f64>,
    /// Columns span the complement of r.
    w: DMatrix<f64>,
    scale: f64,
}

impl Hugoniot<'_> {
    fn n(&self) -> usize {
        self.star.len()
    }

    fn states(&self, z: &[f64]) -> Result<(GodunovState, GodunovState)> {
        let n = self.n();
        Ok((
            GodunovState::from_slice(&z[..n], self.mode)?,
            GodunovState::from_slice(&z[n..], self.mode)?,
        ))
    }

    fn residual(&self, z: &[f64], alpha: f64) -> Result<DVector<f64>> {
        let n = self.n();
        let (sm, sp) = self.states(z)?;
        let (fm, fp) = (normal_flux(&sm, self.eos, &E1)?, normal_flux(&sp, self.eos, &E1)?);
        let mut out = DVector::zeros(2 * n);
        for a in 0..n {
            out[a] = fm[a] - fp[a];
        }
        for k in 0..n - 1 {
            out[n + k] = (0..n).map(|j| self.w[(j, k)] * (0.5 * (z[j] + z[n + j]) - self.star[j])).sum();
        }
        out[2 * n - 1] = (0..n).map(|j| self.r[j] * (z[j] - z[n + j])).sum::<f64>() - alpha * self.scale;
        Ok(out)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n();
        let (sm, sp) = self.states(z)?;
        let (am, ap) = (normal_symbol(&sm, self.eos, &E1)?, normal_symbol(&sp, self.eos, &E1)?);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            for c in 0..n {
                j[(a, c)] = am[(a, c)];
                j[(a, n + c)] = -ap[(a, c)];
            }
        }
        for k in 0..n - 1 {
            for c in 0..n {
                j[(n + k, c)] = 0.5 * self.w[(c, k)];
                j[(n + k, n + c)] = 0.5 * self.w[(c, k)];
            }
        }
        for c in 0..n {
            j[(2 * n - 1, c)] = self.r[c];
            j[(2 * n - 1, n + c)] = -self.r[c];
        }
        Ok(j)
    }

    fn newton(&self, z0: &[f64], alpha: f64, opts: &HugoniotOptions) -> Result<Vec<f64>> {
        let mut z = DVector::from_column_slice(z0);
        for _ in 0..opts.max_newton {
            let r = self.residual(z.as_slice(), alpha)?;
            let jac = self.jacobian(z.as_slice())?;
            let dz = jac.lu().solve(&(-&r)).ok_or_else(|| Error::Newton("singular Hugoniot Jacobian".into()))?;
            z += &dz;
            if !z.iter().all(|x| x.is_finite()) {
                return Err(Error::Newton("non-finite iterate".into()));
            }
            // near α = 0 the Jacobian has O(α) singular values, so the step
            // stalls at rounding level before reaching newton_tol
            let rn = self.residual(z.as_slice(), alpha)?.amax();
            let small_step = dz.amax() <= opts.newton_tol * (1.0 + z.amax());
            if rn <= 1e-14 * (1.0 + self.scale) || (small_step && rn <= 1e-12 * (1.0 + self.scale)) {
                return Ok(z.as_slice().to_vec());
            }
        }
        Err(Error::Newton(format!("no convergence at alpha = {alpha}")))
    }
}

/// Continuation along the Hugoniot locus through the sonic state ψ*, with
/// r·(ψ⁻ − ψ⁺) = α‖ψ*‖.
pub fn hugoniot_continuation(
    sonic: &SonicState,
    eos: &dyn Eos,
    alpha: f64,
    opts: &HugoniotOptions,
) -> Result<ShockData> {
    if !(alpha >= 0.0) || alpha > opts.alpha_cap {
        return Err(Error::InvalidInput(format!("amplitude {alpha} outside [0, {}]", opts.alpha_cap)));
    }
    let mode = sonic.state.mode();
    let star = sonic.state.comps().to_vec();
    let n = star.len();
    let q_star = normal_flux(&sonic.state, eos, &E1)?;
    let s_star = acoustic_speed(&sonic.state, eos)?;
    if alpha == 0.0 {
        return Ok(ShockData {
            minus: sonic.state,
            plus: sonic.state,
            xi: E1,
            q: q_star,
            family: 0,
            amplitude: 0.0,
            rh_residual: 0.0,
            speed_minus: s_star,
            speed_plus: s_star,
            lax: false,
            sonic: sonic.state,
            r: sonic.r.clone(),
            warnings: vec!["degenerate shock".into()],
        });
    }
    // complement of r from an orthonormal basis containing it
    let rr = DVector::from_column_slice(&sonic.r);
    let proj = DMatrix::identity(n, n) - &rr * rr.transpose();
    let e = linalg::sym_eig(&proj, &EigTolerances::default())?;
    let w = e.vectors.columns(1, n - 1).into_owned();
    let scale = norm(&star);
    let h = Hugoniot { eos, mode, star: star.clone(), r: sonic.r.clone(), w, scale };

    let guess = |a: f64| -> Vec<f64> {
        let mut z = vec![0.0; 2 * n];
        for j in 0..n {
            z[j] = star[j] + 0.5 * a * scale * sonic.r[j];
            z[n + j] = star[j] - 0.5 * a * scale * sonic.r[j];
        }
        z
    };
    let mut done = 0.0;
    let mut z = guess(0.0);
    let mut step = alpha / opts.steps.max(1) as f64;
    let mut halvings = 0;
    while done < alpha {
        let target = (done + step).min(alpha);
        // predictor: scale the previous deviation from ψ*
        let pred: Vec<f64> = if done == 0.0 {
            guess(target)
        } else {
            let f = target / done;
            (0..2 * n).map(|k| star[k % n] + f * (z[k] - star[k % n])).collect()
        };
        match h.newton(&pred, target, opts) {
            Ok(sol) => {
                z = sol;
                done = target;
            }
            Err(e) => {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(e);
                }
                step *= 0.5;
            }
        }
    }
    let (mut minus, mut plus) = h.states(&z)?;
    let mut warnings = Vec::new();
    let (mut sm, mut sp) = (acoustic_speed(&minus, eos)?, acoustic_speed(&plus, eos)?);
    if sm < 0.0 && sp > 0.0 {
        std::mem::swap(&mut minus, &mut plus);
        std::mem::swap(&mut sm, &mut sp);
        warnings.push("end states swapped to the entropy-satisfying orientation".into());
    }
    let lax = sm > 0.0 && sp < 0.0;
    if !lax {
        warnings.push(format!("not a Lax shock: acoustic speeds {sm} and {sp}"));
        log::warn!("non-Lax Hugoniot pair at alpha = {alpha}");
    }
    let fm = normal_flux(&minus, eos, &E1)?;
    let fp = normal_flux(&plus, eos, &E1)?;
    let rh_residual = fm.iter().zip(&fp).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let q = fm.iter().zip(&fp).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(ShockData {
        minus,
        plus,
        xi: E1,
        q,
        family: 0,
        amplitude: alpha,
        rh_residual,
        speed_minus: sm,
        speed_plus: sp,
        lax,
        sonic: sonic.state,
        r: sonic.r.clone(),
        warnings,
    })
}

/// B⁻¹A at the end states; used for the one-slow-eigenvalue picture.
pub fn end_spectra(
    shock: &ShockData,
    eos: &dyn Eos,
    coeffs: &crate::dissipation::DissipationCoeffs,
) -> Result<(characteristics::ProfileSpectrum, characteristics::ProfileSpectrum)> {
    let fm = LocalFluid::new(&shock.minus, eos)?;
    let fp = LocalFluid::new(&shock.plus, eos)?;
    Ok((
        characteristics::profile_spectrum(&fm, coeffs, &shock.xi)?,
        characteristics::profile_spectrum(&fp, coeffs, &shock.xi)?,
    ))
}

/// ‖A(ψ*) r‖ through the flux Jacobian, independent of `sonic_base_state`.
pub fn null_defect(state: &GodunovState, eos: &dyn Eos, r: &[f64]) -> Result<f64> {
    let a = FluxJacobian::at(&LocalFluid::new(state, eos)?).symbol(&E1);
    Ok((a * DVector::from_column_slice(r)).norm())
}
