//! Block structure of the decay-rate LMI and the affine map from the decision
//! variables `(P, R, S)` to the symmetric matrix that must be negative definite.
//!
//! The extended vector is `xi = [X; X_0; ...; X_N; w_t(1); w_t(0)]` with
//! `X_N = F xi` its first `m + p` entries, `d/dt X_N = Z xi`,
//! `chi(0) = G_N xi` and `chi(1) = H_N xi`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::legendre::build_structural;
use crate::matrix_io;
use crate::model::{ClosedLoop, PlantParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    /// Projection order `N`.
    pub order: usize,
    /// ODE dimension `n + 2`.
    pub m: usize,
    /// Number of projection coordinates `2(N + 1)`.
    pub p: usize,
    /// Length of `xi`: `m + p + 2`.
    pub dim_xi: usize,
    /// Wave speed.
    pub c: f64,
    pub f_n: DMatrix<f64>,
    /// `[N_N; Zcal_N]`.
    pub z_n: DMatrix<f64>,
    pub g_n: DMatrix<f64>,
    pub h_n: DMatrix<f64>,
}

/// Decision variables of the LMI. Symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVars {
    pub p: DMatrix<f64>,
    pub r: Matrix2<f64>,
    pub s: Matrix2<f64>,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl DecisionVars {
    pub fn new(p: DMatrix<f64>, r: Matrix2<f64>, s: Matrix2<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::Input(format!("P must be square, got {:?}", p.shape())));
        }
        Ok(Self {
            p: symmetrize(&p),
            r: (r + r.transpose()) * 0.5,
            s: (s + s.transpose()) * 0.5,
        })
    }

    pub fn zeros(dim_p: usize) -> Self {
        Self {
            p: DMatrix::zeros(dim_p, dim_p),
            r: Matrix2::zeros(),
            s: Matrix2::zeros(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            p: &self.p * k,
            r: self.r * k,
            s: self.s * k,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            p: &self.p + &other.p,
            r: self.r + other.r,
            s: self.s + other.s,
        }
    }

    pub fn trace(&self) -> f64 {
        self.p.trace() + self.r.trace() + self.s.trace()
    }
}

pub fn assemble(order: usize, cl: &ClosedLoop, plant: &PlantParams) -> LmiProblem {
    let m = cl.m;
    let p = 2 * (order + 1);
    let dim_xi = m + p + 2;
    let c = plant.c;
    let cg = c * plant.g;
    let tail = m + p;

    let mut f_n = DMatrix::zeros(m + p, dim_xi);
    f_n.view_mut((0, 0), (m + p, m + p)).fill_with_identity();

    let mut g_n = DMatrix::zeros(2, dim_xi);
    g_n.view_mut((0, 0), (1, m)).copy_from(&(&cl.c1 * -cg));
    g_n.view_mut((0, tail), (2, 2)).copy_from(&cl.g);

    let mut h_n = DMatrix::zeros(2, dim_xi);
    h_n.view_mut((1, 0), (1, m)).copy_from(&(&cl.c1 * cg));
    h_n.view_mut((0, tail), (2, 2)).copy_from(&cl.h);

    let st = build_structural(order);
    let mut z_n = DMatrix::zeros(m + p, dim_xi);
    z_n.view_mut((0, 0), (m, m)).copy_from(&cl.atil);
    z_n.view_mut((0, tail), (m, 2)).copy_from(&cl.bhat);
    let mut zcal = (&st.ones * &h_n - &st.bar_ones * &g_n) * c;
    {
        let mut mid = zcal.view_mut((0, m), (p, p));
        mid -= &st.l * c;
    }
    z_n.view_mut((m, 0), (p, dim_xi)).copy_from(&zcal);

    LmiProblem {
        order,
        m,
        p,
        dim_xi,
        c,
        f_n,
        z_n,
        g_n,
        h_n,
    }
}

impl LmiProblem {
    /// Side of the `P` block, `m + p`.
    pub fn dim_p(&self) -> usize {
        self.m + self.p
    }

    fn check_dims(&self, vars: &DecisionVars) -> Result<()> {
        if vars.p.shape() != (self.dim_p(), self.dim_p()) {
            return Err(Error::Input(format!(
                "P is {:?}, problem expects {}x{}",
                vars.p.shape(),
                self.dim_p(),
                self.dim_p()
            )));
        }
        Ok(())
    }

    /// `R_N = diag(0_m, R, 3R, ..., (2N+1)R, 0_2)`.
    pub fn r_n(&self, r: &Matrix2<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim_xi, self.dim_xi);
        for ell in 0..=self.order {
            let at = self.m + 2 * ell;
            out.view_mut((at, at), (2, 2)).copy_from(&(r * (2 * ell + 1) as f64));
        }
        out
    }

    pub fn psi(&self, vars: &DecisionVars, alpha: f64) -> Result<DMatrix<f64>> {
        self.check_dims(vars)?;
        let za = &self.z_n + &self.f_n * alpha;
        let t = za.transpose() * &vars.p * &self.f_n;
        let he = &t + t.transpose();
        let c = self.c;
        let gsg = self.g_n.transpose() * vars.s * &self.g_n;
        let hsh = self.h_n.transpose() * (vars.s + vars.r) * &self.h_n;
        let out = he - gsg * c + hsh * (c * (2.0 * alpha / c).exp());
        // He(.) and the congruences are symmetric in exact arithmetic.
        Ok(symmetrize(&out))
    }

    pub fn lmi_matrix(&self, vars: &DecisionVars, alpha: f64) -> Result<DMatrix<f64>> {
        Ok(self.psi(vars, alpha)? - self.r_n(&vars.r) * self.c)
    }

    /// Text dump of every structural matrix.
    pub fn dump(&self) -> String {
        matrix_io::format_matrices([
            ("F_N", &self.f_n),
            ("Z_N", &self.z_n),
            ("G_N", &self.g_n),
            ("H_N", &self.h_n),
        ])
    }
}
