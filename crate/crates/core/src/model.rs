//! Plant and controller parameters, the closed-loop ODE matrices, and the
//! equilibrium quantities of the linearized drilling model.
//!
//! State conventions used throughout the crate:
//!
//! * `X = [X_c; Y]` stacks the controller state (dimension `n`) on top of the
//!   axial error state `Y` (dimension 2), so `m = n + 2`.
//! * The boundary "tail" of the extended state is `[w_t(1); w_t(0)]`, in error
//!   variables (deviation from `Omega_e`).
//! * Riemann coordinates are `chi_1(x) = w_t(x) + c w_x(x)` and
//!   `chi_2(x) = w_t(1 - x) - c w_x(1 - x)`, again in error variables.

use nalgebra::{DMatrix, Matrix2, RowDVector, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the wave equation and of the axial bit dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    /// Wave speed (m/s).
    pub c: f64,
    /// Bit damping (s/m).
    pub k: f64,
    /// Rotary-table damping (s/m).
    pub g: f64,
    /// Torque gain (1/(N m)).
    pub q: f64,
    /// Linearized bit torque (N m).
    #[serde(rename = "Te")]
    pub te: f64,
    /// Target angular speed (rad/s).
    #[serde(rename = "Omega_e")]
    pub omega_e: f64,
    #[serde(rename = "A21")]
    pub a21: f64,
    #[serde(rename = "A22")]
    pub a22: f64,
    /// Axial input gain.
    pub b: f64,
    pub e1: f64,
    pub e2: f64,
}

impl Default for PlantParams {
    /// Reference drilling rig values.
    fn default() -> Self {
        Self {
            c: 2.6892,
            k: 0.1106,
            g: 2.48,
            q: 0.0012,
            te: 7572.4,
            omega_e: 10.0,
            a21: -41.58,
            a22: -0.43,
            b: -0.43,
            e1: -8.35,
            e2: -0.069,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c", self.c),
            ("k", self.k),
            ("g", self.g),
            ("q", self.q),
            ("Te", self.te),
            ("Omega_e", self.omega_e),
            ("A21", self.a21),
            ("A22", self.a22),
            ("b", self.b),
            ("e1", self.e1),
            ("e2", self.e2),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parameter(format!("plant parameter {name} is not finite")));
        }
        if self.c <= 0.0 {
            return Err(Error::Parameter(format!("wave speed c must be > 0, got {}", self.c)));
        }
        if self.omega_e <= 0.0 {
            return Err(Error::Parameter(format!("Omega_e must be > 0, got {}", self.omega_e)));
        }
        Ok(())
    }

    pub fn a(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, self.a21, self.a22)
    }

    pub fn b_vec(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.b)
    }

    pub fn e1_vec(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.e1)
    }

    pub fn e2_vec(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.e2)
    }

    /// `true` when `ck = 1` or `cg = 1`: one boundary absorbs every incoming wave.
    pub fn has_no_neutral_part(&self) -> bool {
        self.c * self.k == 1.0 || self.c * self.g == 1.0
    }
}

/// Strictly proper dynamic controller of order `n`:
///
/// ```text
/// X_c' = Ac X_c + Bc1 Y + Bc2 [w_t(0); w_t(1)]
/// u1   = C1 [X_c; Y]
/// u2   = C2 X_c + K Y
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub ac: DMatrix<f64>,
    pub bc1: DMatrix<f64>,
    pub bc2: DMatrix<f64>,
    pub c1: RowDVector<f64>,
    pub c2: RowDVector<f64>,
    pub k: RowVector2<f64>,
}

impl ControllerParams {
    pub fn new(
        ac: DMatrix<f64>,
        bc1: DMatrix<f64>,
        bc2: DMatrix<f64>,
        c1: RowDVector<f64>,
        c2: RowDVector<f64>,
        k: RowVector2<f64>,
    ) -> Result<Self> {
        let ctrl = Self {
            ac,
            bc1,
            bc2,
            c1,
            c2,
            k,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    /// Feedforward-only operation: `n = 0` and every feedback gain zero.
    pub fn feedforward() -> Self {
        Self {
            ac: DMatrix::zeros(0, 0),
            bc1: DMatrix::zeros(0, 2),
            bc2: DMatrix::zeros(0, 2),
            c1: RowDVector::zeros(2),
            c2: RowDVector::zeros(0),
            k: RowVector2::zeros(),
        }
    }

    /// Second-order reference controller: two first-order low-pass filters on
    /// the boundary velocities plus static axial state feedback.
    pub fn reference_dynamic() -> Self {
        Self {
            ac: DMatrix::from_row_slice(2, 2, &[-800.0, 0.0, 0.0, -150.0]),
            bc1: DMatrix::zeros(2, 2),
            bc2: DMatrix::identity(2, 2),
            c1: RowDVector::from_row_slice(&[800.0, 0.015, 0.01, -0.1]),
            c2: RowDVector::from_row_slice(&[0.0, -0.0718]),
            k: RowVector2::new(-82.2, 10.4),
        }
    }

    /// Controller order `n`.
    pub fn order(&self) -> usize {
        self.ac.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.order();
        let check = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "controller {name} is {}x{}, expected {}x{} for n = {n}",
                    got.0, got.1, want.0, want.1
                )))
            }
        };
        check("Ac", self.ac.shape(), (n, n))?;
        check("Bc1", self.bc1.shape(), (n, 2))?;
        check("Bc2", self.bc2.shape(), (n, 2))?;
        check("C1", self.c1.shape(), (1, n + 2))?;
        check("C2", self.c2.shape(), (1, n))?;
        let all = self
            .ac
            .iter()
            .chain(self.bc1.iter())
            .chain(self.bc2.iter())
            .chain(self.c1.iter())
            .chain(self.c2.iter())
            .chain(self.k.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("controller has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Closed-loop ODE `X' = Atil X + Bhat [w_t(1); w_t(0)]` together with the
/// Riemann boundary matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    /// Extended ODE dimension `n + 2`.
    pub m: usize,
    pub atil: DMatrix<f64>,
    pub bhat: DMatrix<f64>,
    /// `chi(0) = G [w_t(1); w_t(0)] + ...`
    pub g: Matrix2<f64>,
    /// `chi(1) = H [w_t(1); w_t(0)] + ...`
    pub h: Matrix2<f64>,
    pub c1: RowDVector<f64>,
}

pub fn build_closed_loop(plant: &PlantParams, ctrl: &ControllerParams) -> Result<ClosedLoop> {
    plant.validate()?;
    ctrl.validate()?;
    let n = ctrl.order();
    let m = n + 2;

    let a = plant.a();
    let b = plant.b_vec();
    let mut atil = DMatrix::zeros(m, m);
    atil.view_mut((0, 0), (n, n)).copy_from(&ctrl.ac);
    atil.view_mut((0, n), (n, 2)).copy_from(&ctrl.bc1);
    atil.view_mut((n, 0), (2, n)).copy_from(&(b * &ctrl.c2));
    let abk = a + b * ctrl.k;
    atil.view_mut((n, n), (2, 2)).copy_from(&abk);

    // Bc2 acts on [w_t(0); w_t(1)], the tail is [w_t(1); w_t(0)].
    let mut bhat = DMatrix::zeros(m, 2);
    for i in 0..n {
        bhat[(i, 0)] = ctrl.bc2[(i, 1)];
        bhat[(i, 1)] = ctrl.bc2[(i, 0)];
    }
    bhat[(n + 1, 0)] = plant.e1;

    let (ck, cg) = (plant.c * plant.k, plant.c * plant.g);
    Ok(ClosedLoop {
        m,
        atil,
        bhat,
        g: Matrix2::new(0.0, 1.0 + cg, 1.0 + ck, 0.0),
        h: Matrix2::new(1.0 - ck, 0.0, 0.0, 1.0 - cg),
        c1: ctrl.c1.clone(),
    })
}

/// Constant inputs that make the target speed an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedforward {
    /// Rotary-table speed command.
    pub u1: f64,
    /// Axial force command.
    pub u2: f64,
}

pub fn feedforward_controls(plant: &PlantParams) -> Result<Feedforward> {
    if plant.g == 0.0 {
        return Err(Error::SingularParameter("g = 0 in feedforward u1".into()));
    }
    if plant.b == 0.0 {
        return Err(Error::SingularParameter("b = 0 in feedforward u2".into()));
    }
    Ok(Feedforward {
        u1: plant.omega_e * (1.0 + plant.k / plant.g) + plant.q / plant.g * plant.te,
        u2: (plant.te * plant.e2 - plant.omega_e * plant.e1) / plant.b,
    })
}

/// Constant twist gradient `w_x` at equilibrium.
pub fn equilibrium_slope(plant: &PlantParams) -> f64 {
    -plant.k * plant.omega_e - plant.q * plant.te
}

/// Upper bound on any certifiable decay rate, imposed by the neutral
/// (boundary-reflection) part of the wave dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateBound {
    Finite(f64),
    /// `ck = 1` or `cg = 1`: no neutral part, no bound from the boundaries.
    Unbounded,
}

impl RateBound {
    pub fn is_finite(&self) -> bool {
        matches!(self, RateBound::Finite(_))
    }

    /// Finite value, or `cap` for the unbounded sentinel.
    pub fn or_cap(&self, cap: f64) -> f64 {
        match *self {
            RateBound::Finite(v) => v,
            RateBound::Unbounded => cap,
        }
    }

    pub fn admits(&self, alpha: f64) -> bool {
        match *self {
            RateBound::Finite(v) => alpha <= v,
            RateBound::Unbounded => true,
        }
    }
}

impl std::fmt::Display for RateBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateBound::Finite(v) => write!(f, "{v:.4}"),
            RateBound::Unbounded => write!(f, "inf"),
        }
    }
}

pub fn alpha_max(plant: &PlantParams) -> RateBound {
    let (ck, cg) = (plant.c * plant.k, plant.c * plant.g);
    let den = (ck - 1.0) * (cg - 1.0);
    if den == 0.0 {
        return RateBound::Unbounded;
    }
    let ratio = ((ck + 1.0) * (cg + 1.0) / den).abs();
    if ratio == 0.0 {
        return RateBound::Finite(0.0);
    }
    RateBound::Finite((0.5 * plant.c * ratio.ln()).max(0.0))
}

/// Riemann coordinates of error fields sampled on a uniform grid over `[0, 1]`.
///
/// `wt_err` and `wx_err` hold `w_t - Omega_e` and `w_x - sigma_1` at
/// `x_i = i / (n - 1)`; the second component is read in reverse.
pub fn riemann_coordinates(c: f64, wt_err: &[f64], wx_err: &[f64]) -> Vec<Vector2<f64>> {
    let n = wt_err.len();
    debug_assert_eq!(n, wx_err.len());
    (0..n)
        .map(|i| {
            let j = n - 1 - i;
            Vector2::new(wt_err[i] + c * wx_err[i], wt_err[j] - c * wx_err[j])
        })
        .collect()
}
