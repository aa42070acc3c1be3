//! Small dense eigenproblems and a banded LU used by the profile solver.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigTolerances {
    /// Largest accepted ‖M − Mᵀ‖ (max-abs) for symmetric routines.
    pub symmetry: f64,
    /// Smallest accepted |det B| for generalized problems.
    pub det_floor: f64,
}

impl Default for EigTolerances {
    fn default() -> Self {
        Self { symmetry: 1e-9, det_floor: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors stored column-wise, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub fn sym_eig(m: &DMatrix<f64>, tol: &EigTolerances) -> Result<SymEig> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let defect = symmetry_defect(m);
    if defect > tol.symmetry {
        return Err(Error::NotSymmetric { defect, tolerance: tol.symmetry });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(SymEig { values, vectors })
}

#[derive(Debug, Clone)]
pub struct GenEig {
    /// Spectrum of B⁻¹A sorted by real part.
    pub values: Vec<Complex<f64>>,
    pub has_complex: bool,
}

/// Largest |Im λ| accepted as real, relative to the spectral scale.
const REAL_TOL: f64 = 1e-9;

fn sorted_complex(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let mut values: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

/// Eigenvalues of a general real matrix sorted by real part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    sorted_complex(m)
}

pub(crate) fn is_real(values: &[Complex<f64>]) -> bool {
    let scale = values.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    values.iter().all(|z| z.im.abs() <= REAL_TOL * scale)
}

/// Spectrum of B⁻¹A. A singular B is an error, never regularized.
pub fn gen_eig(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &EigTolerances) -> Result<GenEig> {
    let lu = b.clone().lu();
    let det = lu.determinant();
    if !(det.abs() > tol.det_floor) {
        return Err(Error::SingularPencil { det, floor: tol.det_floor });
    }
    let m = lu
        .solve(a)
        .ok_or(Error::SingularPencil { det, floor: tol.det_floor })?;
    let values = sorted_complex(&m)?;
    let has_complex = !is_real(&values);
    Ok(GenEig { values, has_complex })
}

/// Eigen-decomposition of a real matrix with real spectrum: right
/// eigenvectors as columns of `right`, and `left = right⁻¹` whose rows are
/// the dual (left) eigenvectors.
#[derive(Debug, Clone)]
pub struct RealEigen {
    pub values: Vec<f64>,
    pub right: DMatrix<f64>,
    pub left: DMatrix<f64>,
}

impl RealEigen {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let spectrum = sorted_complex(m)?;
        if !is_real(&spectrum) {
            return Err(Error::Hyperbolicity(format!("complex spectrum {spectrum:?}")));
        }
        let values: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
        let scale = values.iter().fold(1e-300_f64, |s, v| s.max(v.abs()));
        let mut right = DMatrix::zeros(n, n);
        let mut k = 0;
        while k < n {
            // cluster numerically repeated eigenvalues
            let mut end = k + 1;
            while end < n && (values[end] - values[k]).abs() <= 1e-8 * scale {
                end += 1;
            }
            let mult = end - k;
            let mean = values[k..end].iter().sum::<f64>() / mult as f64;
            let shifted = m - DMatrix::identity(n, n) * mean;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD without V".into()))?;
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
            for (j, &i) in idx.iter().take(mult).enumerate() {
                right.set_column(k + j, &v_t.row(i).transpose());
            }
            k = end;
        }
        let left = right
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("defective eigenvector basis".into()))?;
        Ok(Self { values, right, left })
    }
}

/// Square band matrix with LU by partial pivoting (LAPACK `gbsv` layout:
/// `kl` extra super-diagonals are reserved for pivoting fill-in).
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn solve(mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut b = rhs.to_vec();
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 * scale || !best.is_finite() {
                return Err(Error::Numerical(format!("singular band matrix at column {k}")));
            }
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, c) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, c);
                }
                b.swap(k, p);
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ik] = 0.0;
                for j in k + 1..=jmax {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let jmax = (i + kl + ku).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=jmax {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_sorted() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0, 5.0, 4.0]));
        let e = sym_eig(&m, &EigTolerances::default()).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1e-6;
        assert!(matches!(
            sym_eig(&m, &EigTolerances::default()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
            let m = &a + a.transpose();
            let e = sym_eig(&m, &EigTolerances::default()).unwrap();
            let rec = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
            assert!((rec - &m).amax() < 1e-9 * m.amax().max(1.0));
            for k in 0..5 {
                let v = e.vectors.column(k);
                let res = (&m * v - v * e.values[k]).amax();
                assert!(res <= 1e-9 * m.norm());
            }
        }
    }

    #[test]
    fn generalized_scalar_pencil() {
        let a = DMatrix::identity(5, 5);
        let b = DMatrix::identity(5, 5) * 2.0;
        let g = gen_eig(&a, &b, &EigTolerances::default()).unwrap();
        assert!(!g.has_complex);
        assert!(g.values.iter().all(|z| (z.re - 0.5).abs() < 1e-14 && z.im == 0.0));
    }

    #[test]
    fn singular_pencil_is_error() {
        let a = DMatrix::identity(3, 3);
        let mut b = DMatrix::identity(3, 3);
        b[(2, 2)] = 0.0;
        assert!(matches!(
            gen_eig(&a, &b, &EigTolerances::default()),
            Err(Error::SingularPencil { .. })
        ));
    }

    #[test]
    fn rotation_pencil_flags_complex_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let g = gen_eig(&a, &DMatrix::identity(2, 2), &EigTolerances::default()).unwrap();
        assert!(g.has_complex);
    }

    #[test]
    fn real_eigen_with_repeated_values() {
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 3.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, -1.0]));
        let m = &p * d * p.clone().try_inverse().unwrap();
        let e = RealEigen::new(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-10);
        let rec = &e.right * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone())) * &e.left;
        assert!((rec - m).amax() < 1e-9);
    }

    #[test]
    fn band_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let (kl, ku) = (3, 4);
        let mut dense = DMatrix::zeros(n, n);
        let mut band = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v: f64 = rng.gen_range(-1.0..1.0) + if i == j { 0.1 } else { 0.0 };
                dense[(i, j)] = v;
                band.add(i, j, v);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = band.solve(&rhs).unwrap();
        let xd = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()));
        }
    }
}
