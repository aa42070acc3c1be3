use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Central-difference Jacobian of `f` at `x` with step `h`; error O(h²).
pub fn fd_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {h} must be positive")));
    }
    let probe = |p: &[f64]| -> Result<Vec<f64>> {
        let y = f(p)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: p.to_vec() });
        }
        Ok(y)
    };
    let m = probe(x)?.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = probe(&xp)?;
        xp[j] = x[j] - h;
        let fm = probe(&xp)?;
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map() {
        let j = fd_jacobian(|x| Ok(x.to_vec()), &[0.1, -2.0, 3.0, 4.0, 5.5], 1e-4).unwrap();
        assert!((j - DMatrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn squares() {
        let j = fd_jacobian(|x| Ok(x.iter().map(|v| v * v).collect()), &[1.0, 2.0, 3.0], 1e-5)
            .unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0, 6.0]));
        assert!((j - expect).amax() < 1e-8);
    }

    #[test]
    fn second_order_convergence() {
        let f = |x: &[f64]| Ok(vec![x[0].sin() * x[1].exp(), x[0].powi(3)]);
        let x = [0.7_f64, -0.3];
        let exact = DMatrix::from_row_slice(
            2,
            2,
            &[x[0].cos() * x[1].exp(), x[0].sin() * x[1].exp(), 3.0 * x[0] * x[0], 0.0],
        );
        let e1 = (fd_jacobian(f, &x, 1e-2).unwrap() - &exact).amax();
        let e2 = (fd_jacobian(f, &x, 5e-3).unwrap() - &exact).amax();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn non_finite_reports_probe() {
        let err = fd_jacobian(|x| Ok(vec![1.0 / (x[0] - 1e-3)]), &[0.0], 1e-3).unwrap_err();
        match err {
            Error::NonFinite { point } => assert_eq!(point.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
