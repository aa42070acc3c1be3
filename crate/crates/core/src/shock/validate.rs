//! Checks on computed profiles and the comparison with the Landau limit.

use rayon::prelude::*;
use serde::Serialize;

use super::profile::{profile_solve, ProfileOptions, ProfileSolution};
use super::{hugoniot_continuation, HugoniotOptions, ShockData, SonicState};
use crate::dissipation::{self, DissipationCoeffs, GradientField};
use crate::error::Result;
use crate::fluid::{Eos, GodunovState, LocalFluid};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2).clamp(0.0, 1.0);
    p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai - t * d).powi(2)).sum::<f64>().sqrt()
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.par_iter()
        .map(|p| {
            if b.len() == 1 {
                return dist(p, &b[0]);
            }
            b.windows(2).map(|w| point_segment(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines in state space.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    /// The profile leaves ψ⁻ as s → −∞ (for ξ = +e¹) and reaches ψ⁺.
    pub orientation_ok: bool,
    /// r·ψ̂ is strictly monotone along the samples.
    pub acoustic_monotone: bool,
    pub endpoint_distance: [f64; 2],
    pub endpoint_rhs: [f64; 2],
    pub endpoints_ok: bool,
    pub max_ode_residual: f64,
    pub rh_residual: f64,
    /// Hausdorff distance to the Landau profile, raw and divided by α.
    pub landau_hausdorff: f64,
    pub landau_hausdorff_normalized: f64,
    /// ∫ Q ds along the profile.
    pub entropy_integral: f64,
    pub entropy_min: f64,
    pub slow: [f64; 2],
    pub intervals: usize,
}

impl ProfileReport {
    pub fn passed(&self, ode_tol: f64) -> bool {
        self.orientation_ok && self.endpoints_ok && self.max_ode_residual < ode_tol && self.entropy_integral >= 0.0
    }
}

fn entropy_along(profile: &ProfileSolution, eos: &dyn Eos, coeffs: &DissipationCoeffs) -> Result<(f64, f64)> {
    let n = profile.s.len();
    if n < 2 {
        return Ok((0.0, 0.0));
    }
    let xi = [0.0, profile.xi_sign, 0.0, 0.0];
    let h = profile.s[1] - profile.s[0];
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        // centred differences in the interior, one-sided at the ends
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let dpsi: Vec<f64> = profile.states[b]
            .iter()
            .zip(&profile.states[a])
            .map(|(x, y)| (x - y) / (h * (b - a) as f64))
            .collect();
        let f = LocalFluid::new(&GodunovState::from_slice(&profile.states[i], profile.mode)?, eos)?;
        let g = GradientField::planar(&dpsi, &xi, profile.mode);
        q.push(dissipation::entropy_production(&f, coeffs, &g)?.0);
    }
    let integral = q.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    Ok((integral, q.iter().copied().fold(f64::INFINITY, f64::min)))
}

/// Validates `profile` for `shock` and compares it with the profile for
/// `landau` coefficients, which is solved here with the same options.
pub fn profile_validate(
    profile: &ProfileSolution,
    shock: &ShockData,
    eos: &dyn Eos,
    coeffs: &DissipationCoeffs,
    landau: &DissipationCoeffs,
    opts: &ProfileOptions,
) -> Result<ProfileReport> {
    let (minus, plus) = (shock.minus.comps(), shock.plus.comps());
    let first = &profile.states[0];
    let last = &profile.states[profile.states.len() - 1];
    let (start, end) = if profile.xi_sign < 0.0 { (plus, minus) } else { (minus, plus) };
    let orientation_ok = profile.left == start
        && profile.right == end
        && dist(first, start) < dist(first, end)
        && dist(last, end) < dist(last, start);
    let coord: Vec<f64> =
        profile.states.iter().map(|y| y.iter().zip(&shock.r).map(|(a, b)| a * b).sum()).collect();
    let sign = (coord[coord.len() - 1] - coord[0]).signum();
    let acoustic_monotone = coord.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0);
    let other = profile_solve(shock, eos, landau, opts)?;
    let d = hausdorff(&profile.states, &other.states);
    let (entropy_integral, entropy_min) = entropy_along(profile, eos, coeffs)?;
    Ok(ProfileReport {
        orientation_ok,
        acoustic_monotone,
        endpoint_distance: profile.endpoint_distance,
        endpoint_rhs: profile.endpoint_rhs,
        endpoints_ok: profile.endpoints_ok(),
        max_ode_residual: profile.max_ode_residual,
        rh_residual: shock.rh_residual,
        landau_hausdorff: d,
        landau_hausdorff_normalized: if shock.amplitude > 0.0 { d / shock.amplitude } else { 0.0 },
        entropy_integral,
        entropy_min,
        slow: profile.slow,
        intervals: profile.intervals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendRow {
    pub alpha: f64,
    pub rh_residual: f64,
    pub hausdorff: f64,
    pub hausdorff_normalized: f64,
    pub max_ode_residual: f64,
    pub endpoint_distance: [f64; 2],
    /// max ‖q − ξT‖ over the two end samples.
    pub endpoint_rhs: f64,
    pub endpoints_ok: bool,
    pub orientation_ok: bool,
    pub entropy_integral: f64,
    /// Ratio to the previous row's distance.
    pub ratio: Option<f64>,
}

/// Shifted-versus-Landau comparison over a sequence of amplitudes, solved
/// in parallel. Rows keep the input order.
pub fn alpha_trend(
    sonic: &SonicState,
    eos: &dyn Eos,
    coeffs: &DissipationCoeffs,
    alphas: &[f64],
    hopts: &HugoniotOptions,
    opts: &ProfileOptions,
) -> Result<Vec<TrendRow>> {
    let landau = coeffs.landau_only();
    let mut rows: Vec<TrendRow> = alphas
        .par_iter()
        .map(|&alpha| {
            let shock = hugoniot_continuation(sonic, eos, alpha, hopts)?;
            let profile = profile_solve(&shock, eos, coeffs, opts)?;
            let rep = profile_validate(&profile, &shock, eos, coeffs, &landau, opts)?;
            Ok(TrendRow {
                alpha,
                rh_residual: shock.rh_residual,
                hausdorff: rep.landau_hausdorff,
                hausdorff_normalized: rep.landau_hausdorff_normalized,
                max_ode_residual: rep.max_ode_residual,
                endpoint_distance: rep.endpoint_distance,
                endpoint_rhs: rep.endpoint_rhs[0].max(rep.endpoint_rhs[1]),
                endpoints_ok: rep.endpoints_ok,
                orientation_ok: rep.orientation_ok,
                entropy_integral: rep.entropy_integral,
                ratio: None,
            })
        })
        .collect::<Result<_>>()?;
    for i in 1..rows.len() {
        rows[i].ratio = Some(rows[i].hausdorff / rows[i - 1].hausdorff);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::MasslessIdeal;
    use crate::shock::sonic_base_state;

    fn coeffs() -> DissipationCoeffs {
        DissipationCoeffs::default()
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert!((hausdorff(&a, &b) - 1.0).abs() < 1e-15);
        let c = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]];
        assert_eq!(hausdorff(&a, &c), 0.0);
    }

    #[test]
    fn shifted_profile_massless() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let s = sonic_base_state(&eos, 1.0, 0.0).unwrap();
        let shock = hugoniot_continuation(&s, &eos, 0.08, &HugoniotOptions::default()).unwrap();
        let opts = ProfileOptions::default();
        let p = profile_solve(&shock, &eos, &coeffs(), &opts).unwrap();
        assert!(p.endpoints_ok(), "{:?}", p.endpoint_distance);
        assert!(p.max_ode_residual < 1e-8, "{}", p.max_ode_residual);
        let rep = profile_validate(&p, &shock, &eos, &coeffs(), &coeffs(), &opts).unwrap();
        assert_eq!(rep.landau_hausdorff, 0.0);
        assert!(rep.orientation_ok && rep.acoustic_monotone);
        assert!(rep.entropy_integral >= 0.0);
    }
}
