//! Shifted Legendre polynomials on `[0, 1]`, projections of sampled fields
//! onto them, and the block matrices that describe how the projections evolve
//! under the transport equation `chi_t = c chi_x`.
//!
//! Normalization is the standard one: `L_l(1) = 1`, `L_l(0) = (-1)^l` and
//! `int_0^1 L_j L_k dx = delta_jk / (2k + 1)`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::quad;

/// Highest degree evaluated through the explicit monomial expansion.
pub const MAX_DEGREE: usize = 10;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomial coefficients of `L_0 .. L_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreBasis {
    coeffs: Vec<Vec<f64>>,
}

impl LegendreBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Domain(format!(
                "Legendre degree {degree} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        let coeffs = (0..=degree)
            .map(|ell| {
                let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
                (0..=ell)
                    .map(|l| {
                        let s = if l % 2 == 0 { sign } else { -sign };
                        s * binomial(ell, l) * binomial(ell + l, l)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of `L_ell`, lowest power first.
    pub fn coefficients(&self, ell: usize) -> &[f64] {
        &self.coeffs[ell]
    }

    /// Horner evaluation; no domain check.
    pub fn value(&self, ell: usize, x: f64) -> f64 {
        self.coeffs[ell].iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    /// Values of `L_ell` on the uniform grid with `n` points.
    pub fn sampled(&self, ell: usize, n: usize) -> Vec<f64> {
        quad::unit_grid(n).into_iter().map(|x| self.value(ell, x)).collect()
    }
}

/// Shifted Legendre polynomial `L_ell(x)` for `x` in `[0, 1]`.
pub fn eval_legendre(ell: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(LegendreBasis::new(ell)?.value(ell, x))
}

/// Weight `l_{k,j}` of `L_j` in the derivative of `L_k`.
pub fn coeff_l(k: usize, j: usize) -> f64 {
    if j > k {
        return 0.0;
    }
    let parity = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
    (2 * j + 1) as f64 * (1.0 - parity)
}

/// Block matrices `L_N`, `1_N` and `bar 1_N` (2x2 identity blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrices {
    pub l: DMatrix<f64>,
    pub ones: DMatrix<f64>,
    pub bar_ones: DMatrix<f64>,
}

pub fn build_structural(order: usize) -> StructuralMatrices {
    let p = 2 * (order + 1);
    let mut l = DMatrix::zeros(p, p);
    let mut ones = DMatrix::zeros(p, 2);
    let mut bar_ones = DMatrix::zeros(p, 2);
    for k in 0..=order {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for d in 0..2 {
            ones[(2 * k + d, d)] = 1.0;
            bar_ones[(2 * k + d, d)] = sign;
            for j in 0..=k {
                l[(2 * k + d, 2 * j + d)] = coeff_l(k, j);
            }
        }
    }
    StructuralMatrices { l, ones, bar_ones }
}

/// Projections `X_0 .. X_N` of a 2-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionStack(pub Vec<Vector2<f64>>);

impl ProjectionStack {
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// `[X_0; X_1; ...; X_N]` as a column of length `2(N + 1)`.
    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len() * 2, self.0.iter().flat_map(|v| [v[0], v[1]]))
    }
}

fn check_samples(chi: &[Vector2<f64>]) -> Result<()> {
    if chi.len() < 2 {
        return Err(Error::Input(format!(
            "projection needs at least 2 samples, got {}",
            chi.len()
        )));
    }
    Ok(())
}

/// `int_0^1 chi(x) L_ell(x) dx` for `chi` sampled on the uniform grid.
pub fn project(chi: &[Vector2<f64>], ell: usize) -> Result<Vector2<f64>> {
    check_samples(chi)?;
    let basis = LegendreBasis::new(ell)?;
    project_with(&basis, chi, ell)
}

fn project_with(basis: &LegendreBasis, chi: &[Vector2<f64>], ell: usize) -> Result<Vector2<f64>> {
    let n = chi.len();
    let w = quad::weights(n, 1.0 / (n - 1) as f64)?;
    let poly = basis.sampled(ell, n);
    Ok(chi
        .iter()
        .zip(w.iter().zip(&poly))
        .fold(Vector2::zeros(), |acc, (v, (wi, pi))| acc + v * (wi * pi)))
}

/// Projections onto `L_0 .. L_order`.
pub fn project_stack(chi: &[Vector2<f64>], order: usize) -> Result<ProjectionStack> {
    check_samples(chi)?;
    let basis = LegendreBasis::new(order)?;
    let stack = (0..=order)
        .map(|ell| project_with(&basis, chi, ell))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionStack(stack))
}

/// Time derivative of the projection stack of a solution of `chi_t = c chi_x`:
/// `c 1_N chi(1) - c bar1_N chi(0) - c L_N X`.
pub fn stack_derivative(
    c: f64,
    structural: &StructuralMatrices,
    chi_at_0: &Vector2<f64>,
    chi_at_1: &Vector2<f64>,
    stack: &DVector<f64>,
) -> DVector<f64> {
    (&structural.ones * chi_at_1 - &structural.bar_ones * chi_at_0 - &structural.l * stack) * c
}

fn check_positive(r: &Matrix2<f64>) -> Result<()> {
    let asym = (r[(0, 1)] - r[(1, 0)]).abs();
    if asym > 1e-12 * r.norm().max(1.0) {
        return Err(Error::Input("R is not symmetric".into()));
    }
    if r[(0, 0)] <= 0.0 || r.determinant() <= 0.0 {
        return Err(Error::Input("R is not positive definite".into()));
    }
    Ok(())
}

/// `int chi^T R chi - sum_l (2l + 1) X_l^T R X_l`, nonnegative up to quadrature error.
pub fn bessel_gap(chi: &[Vector2<f64>], r: &Matrix2<f64>, order: usize) -> Result<f64> {
    check_positive(r)?;
    check_samples(chi)?;
    let quad_form: Vec<f64> = chi.iter().map(|v| v.dot(&(r * v))).collect();
    let full = quad::integrate_unit(&quad_form)?;
    let stack = project_stack(chi, order)?;
    let partial: f64 = stack
        .0
        .iter()
        .enumerate()
        .map(|(ell, x)| (2 * ell + 1) as f64 * x.dot(&(r * x)))
        .sum();
    Ok(full - partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: usize, f: impl Fn(f64) -> Vector2<f64>) -> Vec<Vector2<f64>> {
        quad::unit_grid(n).into_iter().map(f).collect()
    }

    #[test]
    fn first_degree_is_affine() {
        assert_eq!(eval_legendre(1, 0.5).unwrap(), 0.0);
        for x in [0.0, 0.1, 0.7, 1.0] {
            assert!((eval_legendre(1, x).unwrap() - (2.0 * x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoint_values() {
        for ell in 0..=5 {
            assert!((eval_legendre(ell, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((eval_legendre(2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((eval_legendre(3, 0.0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain() {
        assert!(matches!(eval_legendre(2, -0.1), Err(Error::Domain(_))));
        assert!(matches!(eval_legendre(2, 1.5), Err(Error::Domain(_))));
        assert!(matches!(eval_legendre(MAX_DEGREE + 1, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_weights() {
        assert_eq!(coeff_l(0, 0), 0.0);
        assert_eq!(coeff_l(1, 0), 2.0);
        assert_eq!(coeff_l(2, 1), 6.0);
        assert_eq!(coeff_l(3, 0), 2.0);
        assert_eq!(coeff_l(0, 1), 0.0);
    }

    #[test]
    fn derivative_weights_reproduce_polynomial_derivative() {
        // L_k' = sum_j l_{k,j} L_j, checked by central differences.
        let basis = LegendreBasis::new(6).unwrap();
        let h = 1e-6;
        for k in 0..=6 {
            for &x in &[0.13, 0.5, 0.81] {
                let fd = (basis.value(k, x + h) - basis.value(k, x - h)) / (2.0 * h);
                let series: f64 = (0..=k).map(|j| coeff_l(k, j) * basis.value(j, x)).sum();
                assert!((fd - series).abs() < 1e-5, "k = {k}, x = {x}");
            }
        }
    }

    #[test]
    fn structural_small_orders() {
        let s0 = build_structural(0);
        assert_eq!(s0.l, DMatrix::zeros(2, 2));
        assert_eq!(s0.ones, DMatrix::identity(2, 2));
        assert_eq!(s0.bar_ones, DMatrix::identity(2, 2));

        let s1 = build_structural(1);
        let mut l1 = DMatrix::zeros(4, 4);
        l1[(2, 0)] = 2.0;
        l1[(3, 1)] = 2.0;
        assert_eq!(s1.l, l1);
        assert_eq!(
            s1.bar_ones,
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0])
        );

        let s2 = build_structural(2);
        let row: Vec<f64> = s2.l.row(4).iter().copied().collect();
        assert_eq!(row, vec![0.0, 0.0, 6.0, 0.0, 0.0, 0.0]);
        for k in 0..6 {
            assert_eq!(s2.l[(k, k)], 0.0);
        }
    }

    #[test]
    fn projections_of_simple_fields() {
        let n = 101;
        let one = field(n, |_| Vector2::new(1.0, 0.0));
        assert!((project(&one, 0).unwrap() - Vector2::new(1.0, 0.0)).norm() < 1e-13);
        for ell in 1..=4 {
            assert!(project(&one, ell).unwrap().norm() < 1e-13);
        }
        let lin = field(n, |x| Vector2::new(x, 0.0));
        assert!((project(&lin, 1).unwrap() - Vector2::new(1.0 / 6.0, 0.0)).norm() < 1e-13);
        let basis = LegendreBasis::new(2).unwrap();
        let quad2 = field(n, |x| Vector2::new(basis.value(2, x), 0.0));
        assert!((project(&quad2, 2).unwrap() - Vector2::new(0.2, 0.0)).norm() < 1e-12);
        assert!(project(&lin[..1], 0).is_err());
    }

    #[test]
    fn orthogonality_on_401_points() {
        let n = 401;
        let basis = LegendreBasis::new(5).unwrap();
        for j in 0..=5 {
            for k in 0..=5 {
                let pj = basis.sampled(j, n);
                let pk = basis.sampled(k, n);
                let prod: Vec<f64> = pj.iter().zip(&pk).map(|(a, b)| a * b).collect();
                let v = quad::integrate_unit(&prod).unwrap();
                let expected = if j == k { 1.0 / (2 * k + 1) as f64 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10, "({j},{k}): {v}");
            }
        }
    }

    #[test]
    fn bessel_gap_reference_cases() {
        let n = 201;
        let r = Matrix2::identity();
        let constant = field(n, |_| Vector2::new(0.3, -1.2));
        for order in 0..4 {
            assert!(bessel_gap(&constant, &r, order).unwrap().abs() < 1e-12);
        }
        let lin = field(n, |x| Vector2::new(x, 0.0));
        assert!((bessel_gap(&lin, &r, 0).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        assert!(bessel_gap(&lin, &r, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bessel_gap_rejects_bad_weight() {
        let chi = field(11, |x| Vector2::new(x, x));
        let indefinite = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let asymmetric = Matrix2::new(1.0, 0.5, 0.0, 1.0);
        assert!(matches!(bessel_gap(&chi, &indefinite, 1), Err(Error::Input(_))));
        assert!(matches!(bessel_gap(&chi, &asymmetric, 1), Err(Error::Input(_))));
    }

    #[test]
    fn stack_flattening() {
        let s = ProjectionStack(vec![Vector2::new(1.0, 2.0), Vector2::new(3.0, 4.0)]);
        assert_eq!(s.order(), 1);
        assert_eq!(s.flatten().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }
}
