//! Special gradient families and the verification suites built on them.
//!
//! "Eulerian" is a pointwise notion: G is Eulerian when the perfect-fluid
//! divergences T^{aβc}G_{cβ} vanish.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dissipation::{self, DissipationCoeffs, GradientField};
use crate::error::{Error, Result};
use crate::fluid::{FluxJacobian, LocalFluid, Mode};
use crate::tensor::{Mat4, Vec4};

/// ∂ψ_γ/∂x^δ = Ω_{γδ}, ∂ψ/∂x^δ = 0.
pub fn make_lte_gradient(omega: &Mat4, mode: Mode) -> Result<GradientField> {
    let scale = omega.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut defect: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            defect = defect.max((omega[i][j] + omega[j][i]).abs());
        }
    }
    if defect > 1e-14 * scale.max(1.0) || omega.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("omega is not antisymmetric (defect {defect:e})")));
    }
    let mut g = [[0.0; 4]; 5];
    g[..4].copy_from_slice(omega);
    Ok(GradientField::new(g, mode))
}

/// The fields×(4·fields) matrix of G ↦ ∂_βT^{aβ}.
pub fn constraint_matrix(fluid: &LocalFluid) -> DMatrix<f64> {
    let n = fluid.fields();
    let jac = FluxJacobian::at(fluid);
    DMatrix::from_fn(n, 4 * n, |a, k| jac.data[a][k % 4][k / 4])
}

#[derive(Debug, Clone, Copy)]
pub struct EulerianProjection {
    pub gradient: GradientField,
    /// Numerical rank of the constraint map.
    pub rank: usize,
    pub rank_deficient: bool,
    /// max_a |∂_βT^{aβ}| on the result, relative to the largest entry of
    /// the constraint matrix.
    pub residual: f64,
}

impl EulerianProjection {
    pub fn kernel_dimension(&self) -> usize {
        4 * self.gradient.mode.fields() - self.rank
    }
}

/// Orthogonal projection of `seed` onto the kernel of the divergence map.
pub fn make_eulerian_gradient(fluid: &LocalFluid, seed: &GradientField) -> Result<EulerianProjection> {
    if seed.mode != fluid.mode() {
        return Err(Error::InvalidInput("gradient and state modes differ".into()));
    }
    let n = fluid.fields();
    let k = constraint_matrix(fluid);
    let svd = k.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * smax).count();
    let mut y = DVector::from_vec(seed.flat());
    // second pass removes the rounding left by the first
    for _ in 0..2 {
        let x = y.clone();
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > 1e-12 * smax {
                let v = v_t.row(i).transpose();
                y -= &v * v.dot(&x);
            }
        }
    }
    let gradient = GradientField::from_flat(y.as_slice(), seed.mode);
    let residual = (&k * &y).amax() / k.amax();
    if rank < n {
        log::warn!("divergence constraint rank {rank} < {n}");
    }
    Ok(EulerianProjection { gradient, rank, rank_deficient: rank < n, residual })
}

/// ‖S·G − C·divT(G)‖ with S^{fβc} = C_{fg}T^{gβc}, the two sides contracted
/// along independent paths.
pub fn verify_equivalence_identity(
    fluid: &LocalFluid,
    coeffs: &DissipationCoeffs,
    g: &GradientField,
) -> f64 {
    let n = fluid.fields();
    let jac = FluxJacobian::at(fluid);
    let c = dissipation::shift_matrix(fluid, coeffs);
    let mut sg = [0.0; 5];
    for (f, out) in sg.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        for b in 0..4 {
            for cc in 0..n {
                let s: f64 = (0..n).map(|k| c[(f, k)] * jac.data[k][b][cc]).sum();
                acc += s * g.g[cc][b];
            }
        }
        *out = acc;
    }
    let cd = dissipation::shift_increment(fluid, coeffs, g);
    (0..n).map(|f| (sg[f] - cd[f]).powi(2)).sum::<f64>().sqrt()
}

/// ‖Δψ̃‖ = ‖C·divT(G)‖.
pub fn shift_increment_norm(fluid: &LocalFluid, coeffs: &DissipationCoeffs, g: &GradientField) -> f64 {
    dissipation::shift_increment(fluid, coeffs, g).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How ε enters a scaling study.
#[derive(Debug, Clone, Copy)]
pub enum GradientFamily {
    /// Projected seed; (λ, μ, ν) ∝ ε.
    Eulerian(GradientField),
    /// Fixed G; (λ, μ, ν) ∝ ε.
    General(GradientField),
    /// G = G_euler + ε G_pert with fixed coefficients.
    Mixed { euler: GradientField, pert: GradientField },
}

impl GradientFamily {
    pub fn label(&self) -> &'static str {
        match self {
            GradientFamily::Eulerian(_) => "eulerian",
            GradientFamily::General(_) => "general",
            GradientFamily::Mixed { .. } => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub q_tilde: f64,
    pub dpsi_norm: f64,
    /// Slope of log Q̃ against the previous row; NaN on the first row.
    pub slope_running: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub family: String,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log Q̃ vs log ε; absent when fewer than two
    /// points survive the underflow filter.
    pub q_slope: Option<f64>,
    pub dpsi_slope: Option<f64>,
    pub dropped: usize,
}

/// Q̃ below this is treated as underflow and dropped from the fit.
pub const UNDERFLOW: f64 = 1e-300;

pub fn scaling_study(
    fluid: &LocalFluid,
    family: &GradientFamily,
    coeffs: &DissipationCoeffs,
    eps_list: &[f64],
) -> Result<ScalingTable> {
    if eps_list.len() < 4 || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("need at least 4 positive eps values".into()));
    }
    let family_g = match family {
        GradientFamily::Eulerian(seed) => GradientFamily::Eulerian(make_eulerian_gradient(fluid, seed)?.gradient),
        other => *other,
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let (c, g) = match &family_g {
            GradientFamily::Eulerian(g) | GradientFamily::General(g) => (coeffs.scale_shift(eps), *g),
            GradientFamily::Mixed { euler, pert } => (*coeffs, euler.combine(1.0, pert, eps)),
        };
        let q = dissipation::excess_production(fluid, &c, &g);
        let d = shift_increment_norm(fluid, &c, &g);
        rows.push(ScalingRow { eps, q_tilde: q, dpsi_norm: d, slope_running: f64::NAN });
    }
    for i in 1..rows.len() {
        let (a, b) = (rows[i - 1], rows[i]);
        if a.q_tilde > UNDERFLOW && b.q_tilde > UNDERFLOW {
            rows[i].slope_running = (b.q_tilde.ln() - a.q_tilde.ln()) / (b.eps.ln() - a.eps.ln());
        }
    }
    let kept: Vec<_> = rows.iter().filter(|r| r.q_tilde > UNDERFLOW).collect();
    let dropped = rows.len() - kept.len();
    if dropped > 0 {
        log::warn!("{dropped} scaling points dropped for underflow");
    }
    let eulerian = matches!(family_g, GradientFamily::Eulerian(_));
    let q_slope = if eulerian || kept.len() < 2 {
        None
    } else {
        Some(fit_slope(
            &kept.iter().map(|r| r.eps).collect::<Vec<_>>(),
            &kept.iter().map(|r| r.q_tilde).collect::<Vec<_>>(),
        ))
    };
    let dk: Vec<_> = rows.iter().filter(|r| r.dpsi_norm > UNDERFLOW).collect();
    let dpsi_slope = if eulerian || dk.len() < 2 {
        None
    } else {
        Some(fit_slope(
            &dk.iter().map(|r| r.eps).collect::<Vec<_>>(),
            &dk.iter().map(|r| r.dpsi_norm).collect::<Vec<_>>(),
        ))
    };
    Ok(ScalingTable { family: family.label().into(), rows, q_slope, dpsi_slope, dropped })
}

/// Least-squares slope of log y against log x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// max |ξ_βξ_δ(B̃^{aβcδ} − B̃^{cβaδ})|.
pub fn symbol_symmetry_check(fluid: &LocalFluid, coeffs: &DissipationCoeffs, xi: &Vec4) -> f64 {
    let m = dissipation::shifted_tensor(fluid, coeffs).symbol(xi);
    (&m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{Eos, MasslessIdeal};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (ChaCha8Rng, LocalFluid) {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sampling::random_state(&mut rng, &eos as &dyn Eos);
        let f = LocalFluid::new(&s, &eos).unwrap();
        (rng, f)
    }

    #[test]
    fn lte_gradient_basics() {
        let (mut rng, f) = setup(1);
        let z = make_lte_gradient(&[[0.0; 4]; 4], Mode::Full).unwrap();
        assert_eq!(z.norm(), 0.0);
        let mut bad = sampling::random_antisymmetric(&mut rng);
        bad[0][1] += 0.1;
        assert!(make_lte_gradient(&bad, Mode::Full).is_err());
        for _ in 0..50 {
            let g = make_lte_gradient(&sampling::random_antisymmetric(&mut rng), Mode::Full).unwrap();
            let div = dissipation::flux_divergence(&f, &g);
            assert!(div.iter().all(|d| d.abs() < 1e-11));
            let p = make_eulerian_gradient(&f, &g).unwrap();
            assert!(p.gradient.combine(1.0, &g, -1.0).norm() < 1e-11);
        }
    }

    #[test]
    fn eulerian_projection() {
        let (mut rng, f) = setup(2);
        for _ in 0..50 {
            let seed = sampling::random_gradient(&mut rng, Mode::Full);
            let p = make_eulerian_gradient(&f, &seed).unwrap();
            assert_eq!(p.kernel_dimension(), 15);
            assert!(!p.rank_deficient);
            assert!(p.residual < 1e-12, "{}", p.residual);
            assert!(p.gradient.norm() > 0.0);
            let again = make_eulerian_gradient(&f, &p.gradient).unwrap();
            assert!(again.gradient.combine(1.0, &p.gradient, -1.0).norm() < 1e-12);
            let c = DissipationCoeffs::default();
            let x = dissipation::explicit_shift(&f, &c, &p.gradient);
            assert!(x.theta_rate.abs() < 1e-12 && x.psi_rate.abs() < 1e-12);
            assert!(dissipation::excess_production(&f, &c, &p.gradient) < 1e-24);
        }
    }

    #[test]
    fn equivalence_identity_and_slopes() {
        let (mut rng, f) = setup(3);
        let c = DissipationCoeffs::default();
        assert_eq!(verify_equivalence_identity(&f, &c, &GradientField::zeros(Mode::Full)), 0.0);
        let g = sampling::random_gradient(&mut rng, Mode::Full);
        assert!(verify_equivalence_identity(&f, &c, &g) < 1e-10);
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let general = scaling_study(&f, &GradientFamily::General(g), &c, &eps).unwrap();
        assert!((general.q_slope.unwrap() - 3.0).abs() < 0.05);
        let euler = make_eulerian_gradient(&f, &sampling::random_gradient(&mut rng, Mode::Full))
            .unwrap()
            .gradient;
        let mixed = scaling_study(&f, &GradientFamily::Mixed { euler, pert: g }, &c, &eps).unwrap();
        assert!((mixed.q_slope.unwrap() - 2.0).abs() < 0.05);
        assert!((mixed.dpsi_slope.unwrap() - 1.0).abs() < 0.02);
        let e = scaling_study(&f, &GradientFamily::Eulerian(g), &c, &eps).unwrap();
        assert!(e.q_slope.is_none());
        assert!(e.rows.iter().all(|r| r.q_tilde < 1e-24));
    }

    #[test]
    fn scaling_needs_four_points() {
        let (mut rng, f) = setup(4);
        let g = sampling::random_gradient(&mut rng, Mode::Full);
        let r = scaling_study(&f, &GradientFamily::General(g), &DissipationCoeffs::default(), &[0.1, 0.01]);
        assert!(r.is_err());
    }

    #[test]
    fn symbol_symmetry() {
        let (mut rng, f) = setup(5);
        let landau = DissipationCoeffs::default().landau_only();
        let xi = sampling::random_spacelike_unit(&mut rng);
        assert!(symbol_symmetry_check(&f, &landau, &xi) < 1e-10);
        let c = DissipationCoeffs::default();
        assert!(symbol_symmetry_check(&f, &c, &[0.0, 1.0, 0.0, 0.0]) < 1e-10);
    }
}
