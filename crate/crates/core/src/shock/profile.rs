//! Heteroclinic profiles of M(ψ)ψ′ = q − ξ_βT^{aβ}(ψ), M = ξ_βξ_δB̃^{aβcδ}.
//!
//! The connection is computed as a boundary-value problem on a truncated
//! line [−L⁻, L⁺]: condensed Hermite–Simpson collocation, projection
//! boundary conditions onto the linearisations at both rest points, a phase
//! condition at s = 0, and damped Newton with a banded LU.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ShockData;
use crate::dissipation::{self, DissipationCoeffs};
use crate::error::{Error, Result};
use crate::fluid::{self, Eos, GodunovState, LocalFluid, Mode};
use crate::tensor::{self, linalg::BandMatrix, RealEigen, Vec4};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileOptions {
    /// δ₀ = delta0_rel · α, the largest accepted ‖ψ̂(s_first) − ψ⁻‖.
    pub delta0_rel: f64,
    /// Largest accepted ‖ψ̂(s_last) − ψ⁺‖.
    pub tol_end: f64,
    /// Largest accepted ‖q − ξT(ψ̂)‖ at either end sample.
    pub rhs_end_tol: f64,
    /// Mesh doubling stops once the ODE residual is below this.
    pub residual_tol: f64,
    pub initial_intervals: usize,
    pub max_intervals: usize,
    pub max_newton: usize,
    /// Trust-ball radius in units of ‖ψ⁻ − ψ⁺‖.
    pub trust_factor: f64,
    /// ξ = xi_sign · e¹.
    pub xi_sign: f64,
    /// Relative weight δ of the term −δ‖B_L‖ k̂k̂ᵀ added to an unshifted
    /// Landau symbol, whose kernel k = (U_γ, 0) is otherwise exact.
    pub landau_regularization: f64,
    pub fd_step: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            delta0_rel: 1e-4,
            tol_end: 1e-6,
            rhs_end_tol: 5e-7,
            residual_tol: 1e-9,
            initial_intervals: 256,
            max_intervals: 1 << 16,
            max_newton: 50,
            trust_factor: 10.0,
            xi_sign: 1.0,
            landau_regularization: 1e-4,
            fd_step: 1e-7,
        }
    }
}

/// The profile vector field at fixed (ξ, q).
pub(crate) struct ProfileSystem<'a> {
    pub eos: &'a dyn Eos,
    pub coeffs: DissipationCoeffs,
    pub xi: Vec4,
    pub q: Vec<f64>,
    pub mode: Mode,
    pub regularization: f64,
}

impl ProfileSystem<'_> {
    pub fn n(&self) -> usize {
        self.mode.fields()
    }

    fn fluid(&self, y: &[f64]) -> Result<LocalFluid> {
        LocalFluid::new(&GodunovState::from_slice(y, self.mode)?, self.eos)
    }

    pub fn symbol(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let f = self.fluid(y)?;
        let mut m = dissipation::shifted_symbol(&f, &self.coeffs, &self.xi);
        if self.regularization > 0.0 {
            let bl = dissipation::landau_symbol(&f, &self.coeffs, &self.xi).norm();
            let k = self.landau_kernel(&f);
            m -= &k * k.transpose() * (self.regularization * bl);
        }
        Ok(m)
    }

    /// Unit k = (U_γ, 0), the kernel of the unshifted Landau symbol.
    fn landau_kernel(&self, f: &LocalFluid) -> DVector<f64> {
        let ul = tensor::lower(&f.u);
        let k = DVector::from_fn(self.n(), |i, _| if i < 4 { ul[i] } else { 0.0 });
        &k / k.norm()
    }

    /// Moves y along k onto kᵀ(q − ξT) = 0, the slow manifold of the
    /// regularised Landau system to leading order.
    fn project_slow(&self, y: &mut [f64], fd: f64) -> Result<()> {
        let k = self.landau_kernel(&self.fluid(y)?);
        let g = |t: f64| -> Result<f64> {
            let z: Vec<f64> = y.iter().zip(k.iter()).map(|(a, b)| a + t * b).collect();
            Ok(k.dot(&self.rhs(&z)?))
        };
        let mut t = 0.0;
        for _ in 0..30 {
            let v = g(t)?;
            let d = (g(t + fd)? - g(t - fd)?) / (2.0 * fd);
            if d == 0.0 {
                break;
            }
            let step = v / d;
            t -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        for (a, b) in y.iter_mut().zip(k.iter()) {
            *a += t * b;
        }
        Ok(())
    }

    /// q − ξ_βT^{aβ}(y).
    pub fn rhs(&self, y: &[f64]) -> Result<DVector<f64>> {
        let s = GodunovState::from_slice(y, self.mode)?;
        let t = fluid::flux_rows(&s, self.eos)?;
        Ok(DVector::from_fn(self.n(), |a, _| {
            self.q[a] - (0..4).map(|b| self.xi[b] * t[a][b]).sum::<f64>()
        }))
    }

    pub fn field(&self, y: &[f64]) -> Result<DVector<f64>> {
        let m = self.symbol(y)?;
        let r = self.rhs(y)?;
        m.lu().solve(&r).filter(|v| v.iter().all(|x| x.is_finite())).ok_or_else(|| {
            Error::SingularSymbol { location: y.to_vec() }
        })
    }

    /// ∂f/∂y = M⁻¹(−A − (∂M/∂y_j) f); only M is differenced, so the
    /// large factor M⁻¹ is not applied to a finite difference.
    pub fn field_jacobian(&self, y: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let fl = self.fluid(y)?;
        let a = fluid::FluxJacobian::at(&fl).symbol(&self.xi);
        let lu = self.symbol(y)?.lu();
        let f = lu.solve(&self.rhs(y)?).ok_or_else(|| Error::SingularSymbol { location: y.to_vec() })?;
        let mut b = -a;
        let mut yp = y.to_vec();
        for j in 0..n {
            let step = h * (1.0 + y[j].abs());
            yp[j] = y[j] + step;
            let mp = self.symbol(&yp)?;
            yp[j] = y[j] - step;
            let mm = self.symbol(&yp)?;
            yp[j] = y[j];
            let dm = (mp - mm) / (2.0 * step);
            let col = b.column(j) - dm * &f;
            b.set_column(j, &col);
        }
        lu.solve(&b).ok_or_else(|| Error::SingularSymbol { location: y.to_vec() })
    }

    /// −M⁻¹A(ξ) at a rest point.
    pub fn linearization(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let f = self.fluid(y)?;
        let a = fluid::FluxJacobian::at(&f).symbol(&self.xi);
        let m = self.symbol(y)?;
        m.lu().solve(&(-a)).ok_or_else(|| Error::SingularSymbol { location: y.to_vec() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSolution {
    pub mode: Mode,
    pub xi_sign: f64,
    /// State approached as s → −∞.
    pub left: Vec<f64>,
    /// State approached as s → +∞.
    pub right: Vec<f64>,
    pub s: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// ‖Mψ̂′ − (q − ξT)‖ per node, ψ̂′ from a five-point stencil.
    pub residuals: Vec<f64>,
    pub max_ode_residual: f64,
    /// ‖ψ̂(s_first) − left‖ and ‖ψ̂(s_last) − right‖.
    pub endpoint_distance: [f64; 2],
    /// ‖q − ξT(ψ̂)‖ at the first and last samples.
    pub endpoint_rhs: [f64; 2],
    pub delta0: f64,
    pub tol_end: f64,
    pub rhs_end_tol: f64,
    pub domain: [f64; 2],
    pub intervals: usize,
    pub newton_iterations: usize,
    /// Spectra of the linearisation −M⁻¹A at left and right.
    pub left_spectrum: Vec<f64>,
    pub right_spectrum: Vec<f64>,
    /// Slow eigenvalues selected at left (unstable) and right (stable).
    pub slow: [f64; 2],
    /// s-positions of interior near-rest points.
    pub anomalies: Vec<f64>,
}

impl ProfileSolution {
    pub fn constant(y: &[f64], mode: Mode, xi_sign: f64) -> Self {
        Self {
            mode,
            xi_sign,
            left: y.to_vec(),
            right: y.to_vec(),
            s: vec![0.0],
            states: vec![y.to_vec()],
            residuals: vec![0.0],
            max_ode_residual: 0.0,
            endpoint_distance: [0.0, 0.0],
            endpoint_rhs: [0.0, 0.0],
            delta0: 0.0,
            tol_end: 0.0,
            rhs_end_tol: 0.0,
            domain: [0.0, 0.0],
            intervals: 0,
            newton_iterations: 0,
            left_spectrum: Vec::new(),
            right_spectrum: Vec::new(),
            slow: [0.0, 0.0],
            anomalies: Vec::new(),
        }
    }

    pub fn endpoints_ok(&self) -> bool {
        self.endpoint_distance[0] <= self.delta0
            && self.endpoint_distance[1] <= self.tol_end
            && self.endpoint_rhs.iter().all(|r| *r <= self.rhs_end_tol)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Boundary data at a rest point: rows of V⁻¹ selecting the modes that
/// must vanish, and the slow eigenvalue aligned with the connection.
struct EndData {
    rows: DMatrix<f64>,
    slow: f64,
    spectrum: Vec<f64>,
}

fn end_data(lin: &DMatrix<f64>, dir: &DVector<f64>, at_left: bool) -> Result<EndData> {
    let e = RealEigen::new(lin)?;
    let n = e.values.len();
    // left: suppress decaying modes, leave along a growing one;
    // right: suppress growing modes, arrive along a decaying one
    let suppressed: Vec<usize> =
        (0..n).filter(|&k| if at_left { e.values[k] < 0.0 } else { e.values[k] > 0.0 }).collect();
    let free: Vec<usize> = (0..n).filter(|k| !suppressed.contains(k)).collect();
    let slow_k = free
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let ca = e.right.column(a).normalize().dot(dir).abs();
            let cb = e.right.column(b).normalize().dot(dir).abs();
            ca.total_cmp(&cb)
        })
        .ok_or_else(|| Error::NoConnection {
            reason: format!("no admissible slow direction; spectrum {:?}", e.values),
            escape: None,
        })?;
    let rows = DMatrix::from_fn(suppressed.len(), n, |i, j| e.left[(suppressed[i], j)]);
    Ok(EndData { rows, slow: e.values[slow_k], spectrum: e.values.clone() })
}

struct Mesh {
    h: f64,
    /// Node index of s = 0.
    mid: usize,
    nodes: usize,
}

impl Mesh {
    fn new(l_minus: f64, l_plus: f64, intervals: usize) -> Self {
        let h = (l_minus + l_plus) / intervals as f64;
        let nm = (l_minus / h).round().max(1.0) as usize;
        let np = (l_plus / h).round().max(1.0) as usize;
        Self { h, mid: nm, nodes: nm + np + 1 }
    }

    fn s(&self, i: usize) -> f64 {
        (i as f64 - self.mid as f64) * self.h
    }

    fn intervals(&self) -> usize {
        self.nodes - 1
    }

    fn refined(&self) -> Self {
        Self { h: 0.5 * self.h, mid: 2 * self.mid, nodes: 2 * self.nodes - 1 }
    }
}

struct Collocation<'a, 'b> {
    sys: &'a ProfileSystem<'b>,
    left: Vec<f64>,
    right: Vec<f64>,
    lrows: DMatrix<f64>,
    rrows: DMatrix<f64>,
    dhat: DVector<f64>,
    center: Vec<f64>,
}

impl Collocation<'_, '_> {
    fn n(&self) -> usize {
        self.sys.n()
    }

    fn node<'y>(&self, y: &'y [f64], i: usize) -> &'y [f64] {
        let n = self.n();
        &y[i * n..(i + 1) * n]
    }

    fn unknowns(&self, mesh: &Mesh) -> usize {
        mesh.nodes * self.n()
    }

    fn interval_row(&self, mesh: &Mesh, i: usize) -> usize {
        self.lrows.nrows() + i * self.n() + usize::from(i >= mesh.mid)
    }

    fn midpoint(&self, yi: &[f64], yj: &[f64], fi: &DVector<f64>, fj: &DVector<f64>, h: f64) -> Vec<f64> {
        (0..self.n()).map(|k| 0.5 * (yi[k] + yj[k]) + h / 8.0 * (fi[k] - fj[k])).collect()
    }

    fn residual(&self, mesh: &Mesh, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let h = mesh.h;
        let mut r = vec![0.0; self.unknowns(mesh)];
        let f: Vec<DVector<f64>> =
            (0..mesh.nodes).map(|i| self.sys.field(self.node(y, i))).collect::<Result<_>>()?;
        self.boundary_rows(mesh, y, &mut r);
        for i in 0..mesh.intervals() {
            let (yi, yj) = (self.node(y, i), self.node(y, i + 1));
            let ym = self.midpoint(yi, yj, &f[i], &f[i + 1], h);
            let fm = self.sys.field(&ym)?;
            let base = self.interval_row(mesh, i);
            for k in 0..n {
                r[base + k] = yj[k] - yi[k] - h / 6.0 * (f[i][k] + 4.0 * fm[k] + f[i + 1][k]);
            }
        }
        Ok(r)
    }

    fn boundary_rows(&self, mesh: &Mesh, y: &[f64], r: &mut [f64]) {
        let n = self.n();
        let y0 = self.node(y, 0);
        for t in 0..self.lrows.nrows() {
            r[t] = (0..n).map(|j| self.lrows[(t, j)] * (y0[j] - self.left[j])).sum();
        }
        let ymid = self.node(y, mesh.mid);
        r[self.lrows.nrows() + mesh.mid * n] =
            (0..n).map(|j| self.dhat[j] * (ymid[j] - self.center[j])).sum();
        let yn = self.node(y, mesh.nodes - 1);
        let first = self.unknowns(mesh) - self.rrows.nrows();
        for t in 0..self.rrows.nrows() {
            r[first + t] = (0..n).map(|j| self.rrows[(t, j)] * (yn[j] - self.right[j])).sum();
        }
    }

    fn jacobian(&self, mesh: &Mesh, y: &[f64], fd: f64) -> Result<BandMatrix> {
        let n = self.n();
        let h = mesh.h;
        let dim = self.unknowns(mesh);
        let mut jac = BandMatrix::zeros(dim, 2 * n, 2 * n);
        let f: Vec<DVector<f64>> =
            (0..mesh.nodes).map(|i| self.sys.field(self.node(y, i))).collect::<Result<_>>()?;
        let df: Vec<DMatrix<f64>> = (0..mesh.nodes)
            .map(|i| self.sys.field_jacobian(self.node(y, i), fd))
            .collect::<Result<_>>()?;
        let eye = DMatrix::<f64>::identity(n, n);
        for t in 0..self.lrows.nrows() {
            for j in 0..n {
                jac.add(t, j, self.lrows[(t, j)]);
            }
        }
        let prow = self.lrows.nrows() + mesh.mid * n;
        for j in 0..n {
            jac.add(prow, mesh.mid * n + j, self.dhat[j]);
        }
        let first = dim - self.rrows.nrows();
        for t in 0..self.rrows.nrows() {
            for j in 0..n {
                jac.add(first + t, (mesh.nodes - 1) * n + j, self.rrows[(t, j)]);
            }
        }
        for i in 0..mesh.intervals() {
            let (yi, yj) = (self.node(y, i), self.node(y, i + 1));
            let ym = self.midpoint(yi, yj, &f[i], &f[i + 1], h);
            let dm = self.sys.field_jacobian(&ym, fd)?;
            let a = -&eye - (&df[i] + &dm * (&eye * 2.0 + &df[i] * (h / 2.0))) * (h / 6.0);
            let b = &eye - (&df[i + 1] + &dm * (&eye * 2.0 - &df[i + 1] * (h / 2.0))) * (h / 6.0);
            let base = self.interval_row(mesh, i);
            for r in 0..n {
                for c in 0..n {
                    jac.add(base + r, i * n + c, a[(r, c)]);
                    jac.add(base + r, (i + 1) * n + c, b[(r, c)]);
                }
            }
        }
        Ok(jac)
    }

    /// Damped Newton. Converged once the full step is at rounding level:
    /// in stiff systems the residual rows carry M⁻¹ and stall above any
    /// fixed absolute threshold.
    fn newton(&self, mesh: &Mesh, y: &mut Vec<f64>, opts: &ProfileOptions) -> Result<usize> {
        let mut r = self.residual(mesh, y)?;
        let mut rn = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for it in 0..opts.max_newton {
            if rn <= 1e-13 {
                return Ok(it);
            }
            let jac = self.jacobian(mesh, y, opts.fd_step)?;
            let minus: Vec<f64> = r.iter().map(|v| -v).collect();
            let dy = jac.solve(&minus).map_err(|e| Error::NoConnection {
                reason: format!("Newton step failed: {e}"),
                escape: None,
            })?;
            let step_norm = dy.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let ymax = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if step_norm <= 1e-12 * (1.0 + ymax) {
                y.iter_mut().zip(&dy).for_each(|(a, b)| *a += b);
                return Ok(it + 1);
            }
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + lambda * b).collect();
                if let Ok(rt) = self.residual(mesh, &trial) {
                    let rtn = rt.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    if rtn < rn {
                        *y = trial;
                        r = rt;
                        rn = rtn;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1.0 / 1024.0 {
                    // rounding floor of the residual: accept a stagnated
                    // iterate whose Newton correction is already negligible
                    if step_norm <= 1e-9 * (1.0 + ymax) {
                        return Ok(it + 1);
                    }
                    return Err(Error::NoConnection {
                        reason: format!("damped Newton stalled at residual {rn:e}"),
                        escape: None,
                    });
                }
            }
        }
        Err(Error::NoConnection { reason: format!("Newton did not converge, residual {rn:e}"), escape: None })
    }

    /// Doubling the mesh: old nodes kept, new ones at collocation midpoints.
    fn refine(&self, mesh: &Mesh, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut out = Vec::with_capacity((2 * mesh.nodes - 1) * n);
        let f: Vec<DVector<f64>> =
            (0..mesh.nodes).map(|i| self.sys.field(self.node(y, i))).collect::<Result<_>>()?;
        for i in 0..mesh.nodes {
            out.extend_from_slice(self.node(y, i));
            if i + 1 < mesh.nodes {
                out.extend(self.midpoint(self.node(y, i), self.node(y, i + 1), &f[i], &f[i + 1], mesh.h));
            }
        }
        Ok(out)
    }

    /// Five-point (one-sided at the ends) derivative, fourth order.
    fn derivative(&self, mesh: &Mesh, y: &[f64], i: usize) -> Vec<f64> {
        let n = self.n();
        let m = mesh.nodes;
        let at = |j: usize, k: usize| y[j * n + k];
        let h12 = 12.0 * mesh.h;
        (0..n)
            .map(|k| {
                if m < 5 {
                    let (a, b) = (i.saturating_sub(1), (i + 1).min(m - 1));
                    return (at(b, k) - at(a, k)) / (mesh.h * (b - a) as f64);
                }
                if i >= 2 && i + 2 < m {
                    (-at(i + 2, k) + 8.0 * at(i + 1, k) - 8.0 * at(i - 1, k) + at(i - 2, k)) / h12
                } else if i == 0 {
                    (-25.0 * at(0, k) + 48.0 * at(1, k) - 36.0 * at(2, k) + 16.0 * at(3, k) - 3.0 * at(4, k)) / h12
                } else if i == 1 {
                    (-3.0 * at(0, k) - 10.0 * at(1, k) + 18.0 * at(2, k) - 6.0 * at(3, k) + at(4, k)) / h12
                } else if i == m - 1 {
                    (25.0 * at(m - 1, k) - 48.0 * at(m - 2, k) + 36.0 * at(m - 3, k) - 16.0 * at(m - 4, k)
                        + 3.0 * at(m - 5, k))
                        / h12
                } else {
                    (3.0 * at(m - 1, k) + 10.0 * at(m - 2, k) - 18.0 * at(m - 3, k) + 6.0 * at(m - 4, k)
                        - at(m - 5, k))
                        / h12
                }
            })
            .collect()
    }

    fn ode_residuals(&self, mesh: &Mesh, y: &[f64]) -> Result<Vec<f64>> {
        (0..mesh.nodes)
            .map(|i| {
                let yi = self.node(y, i);
                let d = DVector::from_vec(self.derivative(mesh, y, i));
                let res = self.sys.symbol(yi)? * d - self.sys.rhs(yi)?;
                Ok(res.norm())
            })
            .collect()
    }
}

/// Connection from `left` (s → −∞) to `right` (s → +∞).
pub(crate) fn solve_connection(
    sys: &ProfileSystem,
    left: &[f64],
    right: &[f64],
    delta0: f64,
    xi_sign: f64,
    opts: &ProfileOptions,
) -> Result<ProfileSolution> {
    let n = sys.n();
    let amp = dist(left, right);
    if amp == 0.0 {
        return Ok(ProfileSolution::constant(left, sys.mode, xi_sign));
    }
    let d = DVector::from_fn(n, |k, _| (right[k] - left[k]) / amp);
    let el = end_data(&sys.linearization(left)?, &d, true)?;
    let er = end_data(&sys.linearization(right)?, &d, false)?;
    if el.rows.nrows() + er.rows.nrows() + 1 != n {
        return Err(Error::NoConnection {
            reason: format!(
                "boundary conditions do not close: {} at left, {} at right for {n} fields; spectra {:?} / {:?}",
                el.rows.nrows(),
                er.rows.nrows(),
                el.spectrum,
                er.spectrum
            ),
            escape: None,
        });
    }
    if !(el.slow > 0.0 && er.slow < 0.0) {
        return Err(Error::NoConnection {
            reason: format!("slow eigenvalues {} / {} have the wrong signs", el.slow, er.slow),
            escape: None,
        });
    }
    let center: Vec<f64> = left.iter().zip(right).map(|(a, b)| 0.5 * (a + b)).collect();
    let col = Collocation {
        sys,
        left: left.to_vec(),
        right: right.to_vec(),
        lrows: el.rows,
        rrows: er.rows,
        dhat: d.clone(),
        center,
    };
    let mut l_minus = (amp / (0.5 * delta0)).ln().max(1.0) / el.slow;
    let mut l_plus = (amp / (0.5 * opts.tol_end)).ln().max(1.0) / er.slow.abs();
    let mut total_newton = 0;
    for _attempt in 0..8 {
        let mut mesh = Mesh::new(l_minus, l_plus, opts.initial_intervals);
        let kappa = 0.25 * (el.slow + er.slow.abs());
        let mut y: Vec<f64> = Vec::with_capacity(mesh.nodes * n);
        for i in 0..mesh.nodes {
            let w = 0.5 * (1.0 + (kappa * mesh.s(i)).tanh());
            let mut node: Vec<f64> = (0..n).map(|k| left[k] + w * (right[k] - left[k])).collect();
            if sys.regularization > 0.0 {
                sys.project_slow(&mut node, opts.fd_step)?;
            }
            y.extend(node);
        }
        let residuals = loop {
            total_newton += col.newton(&mesh, &mut y, opts)?;
            check_trust(&col, &mesh, &y, amp, opts)?;
            let res = col.ode_residuals(&mesh, &y)?;
            let worst = res.iter().fold(0.0_f64, |m, v| m.max(*v));
            if worst <= opts.residual_tol || 2 * mesh.intervals() > opts.max_intervals {
                break res;
            }
            y = col.refine(&mesh, &y)?;
            mesh = mesh.refined();
        };
        let first = col.node(&y, 0);
        let last = col.node(&y, mesh.nodes - 1);
        let ed = [dist(first, left), dist(last, right)];
        let rhs_ends = [sys.rhs(first)?.norm(), sys.rhs(last)?.norm()];
        let short = [ed[0] > delta0 || rhs_ends[0] > opts.rhs_end_tol, ed[1] > opts.tol_end || rhs_ends[1] > opts.rhs_end_tol];
        if short[0] || short[1] {
            if short[0] {
                l_minus *= 1.5;
            }
            if short[1] {
                l_plus *= 1.5;
            }
            log::info!("extending profile domain to [{}, {}]", -l_minus, l_plus);
            continue;
        }
        let states: Vec<Vec<f64>> = (0..mesh.nodes).map(|i| col.node(&y, i).to_vec()).collect();
        let rhs_norms: Vec<f64> =
            states.iter().map(|s| sys.rhs(s).map(|r| r.norm())).collect::<Result<_>>()?;
        let anomalies = interior_rest_points(&states, &rhs_norms, left, right, amp, &mesh);
        return Ok(ProfileSolution {
            mode: sys.mode,
            xi_sign,
            left: left.to_vec(),
            right: right.to_vec(),
            s: (0..mesh.nodes).map(|i| mesh.s(i)).collect(),
            max_ode_residual: residuals.iter().fold(0.0, |m, v| m.max(*v)),
            residuals,
            endpoint_distance: ed,
            endpoint_rhs: [rhs_norms[0], rhs_norms[mesh.nodes - 1]],
            delta0,
            tol_end: opts.tol_end,
            rhs_end_tol: opts.rhs_end_tol,
            domain: [-(mesh.mid as f64) * mesh.h, (mesh.nodes - 1 - mesh.mid) as f64 * mesh.h],
            intervals: mesh.intervals(),
            newton_iterations: total_newton,
            left_spectrum: el.spectrum.clone(),
            right_spectrum: er.spectrum.clone(),
            slow: [el.slow, er.slow],
            anomalies,
            states,
        });
    }
    Err(Error::NoConnection {
        reason: "end states not reached within the tolerances after domain extension".into(),
        escape: None,
    })
}

fn check_trust(col: &Collocation, mesh: &Mesh, y: &[f64], amp: f64, opts: &ProfileOptions) -> Result<()> {
    for i in 0..mesh.nodes {
        let yi = col.node(y, i);
        let r = dist(yi, &col.left).min(dist(yi, &col.right));
        if r > opts.trust_factor * amp || GodunovState::from_slice(yi, col.sys.mode)?.decode().is_err() {
            return Err(Error::NoConnection {
                reason: format!("trajectory left the trust ball at s = {}", mesh.s(i)),
                escape: Some(yi.to_vec()),
            });
        }
    }
    Ok(())
}

/// Local minima of ‖q − ξT‖ well away from both ends.
fn interior_rest_points(
    states: &[Vec<f64>],
    rhs: &[f64],
    left: &[f64],
    right: &[f64],
    amp: f64,
    mesh: &Mesh,
) -> Vec<f64> {
    let peak = rhs.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut out = Vec::new();
    for i in 1..states.len().saturating_sub(1) {
        let far = dist(&states[i], left).min(dist(&states[i], right)) > 0.1 * amp;
        if far && rhs[i] <= 1e-3 * peak && rhs[i] <= rhs[i - 1] && rhs[i] <= rhs[i + 1] {
            out.push(mesh.s(i));
        }
    }
    if !out.is_empty() {
        log::warn!("interior rest points near s = {out:?}");
    }
    out
}

/// Profile of the standing shock for the given coefficients. An unshifted
/// Landau symbol is regularised by `opts.landau_regularization`.
pub fn profile_solve(
    shock: &ShockData,
    eos: &dyn Eos,
    coeffs: &DissipationCoeffs,
    opts: &ProfileOptions,
) -> Result<ProfileSolution> {
    coeffs.validate()?;
    let sigma = if opts.xi_sign < 0.0 { -1.0 } else { 1.0 };
    let (minus, plus) = (shock.minus.comps().to_vec(), shock.plus.comps().to_vec());
    if shock.amplitude == 0.0 || dist(&minus, &plus) == 0.0 {
        return Ok(ProfileSolution::constant(&minus, shock.mode(), sigma));
    }
    if !shock.lax {
        return Err(Error::Precondition(format!("shock is not Lax: {:?}", shock.warnings)));
    }
    let xi = shock.xi.map(|x| sigma * x);
    let sys = ProfileSystem {
        eos,
        coeffs: *coeffs,
        xi,
        q: shock.q.iter().map(|v| sigma * v).collect(),
        mode: shock.mode(),
        regularization: if coeffs.has_shift() { 0.0 } else { opts.landau_regularization },
    };
    let delta0 = opts.delta0_rel * shock.amplitude;
    if sigma > 0.0 {
        solve_connection(&sys, &minus, &plus, delta0, sigma, opts)
    } else {
        solve_connection(&sys, &plus, &minus, opts.tol_end, sigma, &ProfileOptions { tol_end: delta0, ..*opts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{BarotropicRadiation, MasslessIdeal};
    use crate::shock::{hausdorff, hugoniot_continuation, sonic_base_state, HugoniotOptions};

    fn shock(eos: &dyn Eos, alpha: f64) -> ShockData {
        let s = sonic_base_state(eos, 1.0, 0.0).unwrap();
        hugoniot_continuation(&s, eos, alpha, &HugoniotOptions::default()).unwrap()
    }

    #[test]
    fn degenerate_shock_is_constant() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let sh = shock(&eos, 0.0);
        let p = profile_solve(&sh, &eos, &DissipationCoeffs::default(), &ProfileOptions::default()).unwrap();
        assert_eq!(p.states.len(), 1);
        assert_eq!(p.states[0], sh.minus.comps());
    }

    #[test]
    fn non_lax_is_rejected() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let mut sh = shock(&eos, 0.04);
        std::mem::swap(&mut sh.minus, &mut sh.plus);
        sh.lax = false;
        let e = profile_solve(&sh, &eos, &DissipationCoeffs::default(), &ProfileOptions::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn vanishing_symbol_is_reported() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let sh = shock(&eos, 0.04);
        let zero = DissipationCoeffs { eta: 0.0, kappa: 0.0, ..DissipationCoeffs::default() }.landau_only();
        let opts = ProfileOptions { landau_regularization: 0.0, ..Default::default() };
        let e = profile_solve(&sh, &eos, &zero, &opts);
        assert!(matches!(e, Err(Error::SingularSymbol { .. })), "{e:?}");
    }

    #[test]
    fn reflection_swaps_ends() {
        let eos = MasslessIdeal::new(1.0).unwrap();
        let sh = shock(&eos, 0.04);
        let c = DissipationCoeffs::default();
        let p = profile_solve(&sh, &eos, &c, &ProfileOptions::default()).unwrap();
        let r = profile_solve(&sh, &eos, &c, &ProfileOptions { xi_sign: -1.0, ..Default::default() }).unwrap();
        assert_eq!(r.left, p.right);
        assert_eq!(r.right, p.left);
        assert!(r.max_ode_residual < 1e-8);
        assert!(hausdorff(&p.states, &r.states) < 1e-6 * sh.amplitude.max(1.0));
    }

    #[test]
    fn landau_profile_is_monotone() {
        for eos in [
            Box::new(MasslessIdeal::new(1.0).unwrap()) as Box<dyn Eos>,
            Box::new(BarotropicRadiation::new(1.0).unwrap()),
        ] {
            let sh = shock(eos.as_ref(), 0.05);
            let c = DissipationCoeffs::default().landau_only();
            let p = profile_solve(&sh, eos.as_ref(), &c, &ProfileOptions::default()).unwrap();
            assert!(p.endpoints_ok(), "{:?} {:?}", p.endpoint_distance, p.endpoint_rhs);
            assert!(p.max_ode_residual < 1e-8);
            let coord: Vec<f64> =
                p.states.iter().map(|y| y.iter().zip(&sh.r).map(|(a, b)| a * b).sum()).collect();
            assert!(coord.windows(2).all(|w| w[1] < w[0]));
            assert!(p.anomalies.is_empty());
        }
    }
}
