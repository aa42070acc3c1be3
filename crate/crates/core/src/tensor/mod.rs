//! Minkowski tensor algebra in signature (-,+,+,+), small dense linear
//! algebra and finite-difference oracles.
//!
//! Every index lives in a fixed orthonormal frame, so raising and lowering
//! is multiplication by the diagonal [`METRIC`]. Five-field quantities carry
//! the particle-number slot at index 4 with a trivial `+1` metric entry.

pub mod fd;
pub mod linalg;

pub use fd::fd_jacobian;
pub use linalg::{eigenvalues, gen_eig, sym_eig, EigTolerances, GenEig, RealEigen, SymEig};

use crate::error::{Error, Result};

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

/// Diagonal of g_{αβ} (equal to g^{αβ}).
pub const METRIC: Vec4 = [-1.0, 1.0, 1.0, 1.0];

/// Diagonal of the extended five-slot metric used for C^a_b ↔ C_{ab}.
pub const METRIC5: [f64; 5] = [-1.0, 1.0, 1.0, 1.0, 1.0];

/// Tolerance on U·U = -1 accepted by [`projector`] and friends.
pub const UNIT_TOL: f64 = 1e-12;

pub fn lower(v: &Vec4) -> Vec4 {
    [METRIC[0] * v[0], v[1], v[2], v[3]]
}

pub fn raise(v: &Vec4) -> Vec4 {
    lower(v)
}

/// g_{αβ} a^α b^β.
pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    (0..4).map(|i| METRIC[i] * a[i] * b[i]).sum()
}

pub fn metric_upper() -> Mat4 {
    let mut g = [[0.0; 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = METRIC[i];
    }
    g
}

pub fn check_unit_timelike(u: &Vec4) -> Result<()> {
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite velocity {u:?}")));
    }
    let norm = dot(u, u);
    if (norm + 1.0).abs() > UNIT_TOL * (1.0 + u[0] * u[0]) {
        return Err(Error::InvalidInput(format!(
            "velocity is not unit timelike: U.U = {norm}"
        )));
    }
    if u[0] <= 0.0 {
        return Err(Error::InvalidInput("velocity is past-directed".into()));
    }
    Ok(())
}

/// Spatial projector Π^{αβ} = g^{αβ} + U^α U^β for a unit timelike U^α.
pub fn projector(u: &Vec4) -> Result<Mat4> {
    check_unit_timelike(u)?;
    Ok(projector_unchecked(u))
}

pub(crate) fn projector_unchecked(u: &Vec4) -> Mat4 {
    let mut p = metric_upper();
    for a in 0..4 {
        for b in 0..4 {
            p[a][b] += u[a] * u[b];
        }
    }
    p
}

/// Π_{αβ}, both indices lowered.
pub(crate) fn projector_lower(u: &Vec4) -> Mat4 {
    projector_unchecked(&lower(u))
}

/// Π^α_β, first index up.
pub(crate) fn projector_mixed(u: &Vec4) -> Mat4 {
    let ul = lower(u);
    let mut p = [[0.0; 4]; 4];
    for a in 0..4 {
        p[a][a] = 1.0;
        for b in 0..4 {
            p[a][b] += u[a] * ul[b];
        }
    }
    p
}

pub fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for a in 0..4 {
        out[a] = (0..4).map(|b| m[a][b] * v[b]).sum();
    }
    out
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[j][i];
        }
    }
    out
}

/// Λ T Λᵀ for a rank-2 contravariant tensor.
pub fn transform2(lambda: &Mat4, t: &Mat4) -> Mat4 {
    mat_mul(&mat_mul(lambda, t), &transpose(lambda))
}

/// Pure Lorentz boost Λ^α_β with velocity `v` (|v| < 1) acting on
/// contravariant vectors.
pub fn boost(v: &[f64; 3]) -> Result<Mat4> {
    let v2: f64 = v.iter().map(|x| x * x).sum();
    if !(v2 < 1.0) || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("boost velocity {v:?} not subluminal")));
    }
    let gamma = 1.0 / (1.0 - v2).sqrt();
    let mut l = [[0.0; 4]; 4];
    l[0][0] = gamma;
    for i in 0..3 {
        l[0][i + 1] = gamma * v[i];
        l[i + 1][0] = gamma * v[i];
        for j in 0..3 {
            let k = if v2 > 0.0 { (gamma - 1.0) * v[i] * v[j] / v2 } else { 0.0 };
            l[i + 1][j + 1] = k + if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(l)
}

/// Boost along a unit direction with rapidity `chi`.
pub fn boost_rapidity(direction: &[f64; 3], chi: f64) -> Result<Mat4> {
    let t = chi.tanh();
    boost(&[direction[0] * t, direction[1] * t, direction[2] * t])
}

/// The boost taking the unit timelike `u` to the rest frame (1,0,0,0).
pub fn rest_frame_boost(u: &Vec4) -> Result<Mat4> {
    check_unit_timelike(u)?;
    boost(&[-u[1] / u[0], -u[2] / u[0], -u[3] / u[0]])
}

/// Lower-index transformation for covectors: (Λ⁻¹)ᵀ = g Λ g.
pub fn covector_transform(lambda: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = METRIC[a] * lambda[a][b] * METRIC[b];
        }
    }
    out
}

/// Four-velocity for a 3-velocity.
pub fn four_velocity(v: &[f64; 3]) -> Result<Vec4> {
    let v2: f64 = v.iter().map(|x| x * x).sum();
    if !(v2 < 1.0) {
        return Err(Error::InvalidInput(format!("3-velocity {v:?} not subluminal")));
    }
    let g = 1.0 / (1.0 - v2).sqrt();
    Ok([g, g * v[0], g * v[1], g * v[2]])
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_frame_projector() {
        let p = projector(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let expect = [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert_eq!(p, expect);
    }

    #[test]
    fn projector_rejects_bad_velocity() {
        assert!(projector(&[1.0, 0.5, 0.0, 0.0]).is_err());
        assert!(projector(&[0.0, 1.0, 0.0, 0.0]).is_err());
        assert!(projector(&[f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn projector_transverse_to_velocity() {
        let u = four_velocity(&[0.3, -0.2, 0.4]).unwrap();
        let p = projector(&u).unwrap();
        let pu = mat_vec(&p, &lower(&u));
        assert!(pu.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn boosted_projector_matches_boosted_rest_projector() {
        // oracle: explicit rapidity boost of diag(0,1,1,1)
        let chi: f64 = 0.5;
        let (c, s) = (chi.cosh(), chi.sinh());
        let lambda = [
            [c, s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let rest = projector(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let boosted = transform2(&lambda, &rest);
        let p = projector(&[c, s, 0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&p, &boosted) < 1e-14);
        assert!(max_abs_diff(&boost_rapidity(&[1.0, 0.0, 0.0], chi).unwrap(), &lambda) < 1e-14);
    }

    #[test]
    fn rest_frame_boost_brings_velocity_to_rest() {
        let u = four_velocity(&[0.1, 0.5, -0.3]).unwrap();
        let l = rest_frame_boost(&u).unwrap();
        let r = mat_vec(&l, &u);
        assert!((r[0] - 1.0).abs() < 1e-14);
        assert!(r[1..].iter().all(|x| x.abs() < 1e-14));
        let cov = covector_transform(&l);
        // covectors pair invariantly with vectors
        let w = [0.3, -1.0, 2.0, 0.5];
        let a = (0..4).map(|i| w[i] * u[i]).sum::<f64>();
        let wr = mat_vec(&cov, &w);
        let b = (0..4).map(|i| wr[i] * r[i]).sum::<f64>();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn raising_then_lowering_is_identity() {
        let v = [1.5, -2.0, 0.25, 3.0];
        assert_eq!(raise(&lower(&v)), v);
    }
}
