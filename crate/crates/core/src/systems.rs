//! Closed-loop flow dynamics of a sampled-data implementation.
//!
//! The plant `ẋ_P = f_P(x_P, u)` is driven by a controller `ẋ_C = f_C(x_C, x̂_P)`,
//! `u = g_C(x_C, x̂_P)` that only sees the last transmitted plant state
//! `x̂_P`, while the actuator applies the held input `û`. With
//! `x = (x_P, x_C)` and `e = (x̂_P − x_P, û − u)` the loop becomes
//! `ẋ = f(x, e)`, `ė = g(x, e)`.
//!
//! For a static controller only the measurement is sampled and `e = e_{x_P}`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type VecMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Row-major Jacobian `rows × cols` of a map of two vector arguments.
pub type JacobianMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Inter-sample evolution of a held signal, called with `(x_P, x_C, x̂_P, û)`.
pub type HoldMap = Arc<dyn Fn(&[f64], &[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("dynamic controller without the partial derivative {0}")]
    MissingJacobian(&'static str),
    #[error("non-finite model parameter {name} = {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
}

#[derive(Clone)]
pub struct PlantModel {
    pub n_p: usize,
    pub n_u: usize,
    /// `(x_P, u) ↦ ẋ_P`
    pub f_p: VecMap,
}

#[derive(Clone)]
pub struct Controller {
    /// Zero for a static controller.
    pub n_c: usize,
    /// `(x_C, x̂_P) ↦ ẋ_C`; unused when `n_c == 0`.
    pub f_c: Option<VecMap>,
    /// `(x_C, x̂_P) ↦ u`
    pub g_c: VecMap,
    /// `∂g_C/∂x_C`, `n_u × n_c`.
    pub dgc_dxc: Option<JacobianMap>,
    /// `∂g_C/∂x̂_P`, `n_u × n_p`.
    pub dgc_dxhat: Option<JacobianMap>,
}

impl Controller {
    pub fn static_feedback(g_c: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            n_c: 0,
            f_c: None,
            g_c: Arc::new(move |_, xhat| g_c(xhat)),
            dgc_dxc: None,
            dgc_dxhat: None,
        }
    }

    pub fn is_static(&self) -> bool {
        self.n_c == 0
    }
}

#[derive(Clone, Default)]
pub enum Hold {
    /// Held values stay constant between transmissions.
    #[default]
    ZeroOrder,
    /// `x̂̇_P = f̂_P(…)`, `û̇ = f̂_C(…)`.
    Custom { f_hat_p: HoldMap, f_hat_c: HoldMap },
}

#[derive(Clone)]
pub struct SampledLoop {
    pub plant: PlantModel,
    pub controller: Controller,
    pub hold: Hold,
}

impl fmt::Debug for SampledLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledLoop")
            .field("n_p", &self.plant.n_p)
            .field("n_u", &self.plant.n_u)
            .field("n_c", &self.controller.n_c)
            .field("zoh", &matches!(self.hold, Hold::ZeroOrder))
            .finish()
    }
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), SystemError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(SystemError::Dimension {
            what,
            got: v.len(),
            expected,
        })
    }
}

fn mat_vec(m: &[f64], v: &[f64], rows: usize) -> Vec<f64> {
    let cols = v.len();
    (0..rows)
        .map(|r| (0..cols).map(|c| m[r * cols + c] * v[c]).sum())
        .collect()
}

impl SampledLoop {
    pub fn n_x(&self) -> usize {
        self.plant.n_p + self.controller.n_c
    }

    pub fn n_e(&self) -> usize {
        if self.controller.is_static() {
            self.plant.n_p
        } else {
            self.plant.n_p + self.plant.n_u
        }
    }

    pub fn is_zero_order_hold(&self) -> bool {
        matches!(self.hold, Hold::ZeroOrder)
    }

    /// Returns `(f(x, e), g(x, e))`.
    pub fn composed_flow(&self, x: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SystemError> {
        check_len("x", x, self.n_x())?;
        check_len("e", e, self.n_e())?;
        let (n_p, n_u) = (self.plant.n_p, self.plant.n_u);
        let (x_p, x_c) = x.split_at(n_p);
        let (e_x, e_u) = e.split_at(n_p);

        let xhat: Vec<f64> = x_p.iter().zip(e_x).map(|(a, b)| a + b).collect();
        let mut uhat = (self.controller.g_c)(x_c, &xhat);
        check_len("g_C output", &uhat, n_u)?;
        for (u, eu) in uhat.iter_mut().zip(e_u) {
            *u += eu;
        }

        let xp_dot = (self.plant.f_p)(x_p, &uhat);
        check_len("f_P output", &xp_dot, n_p)?;

        let xc_dot = if self.controller.is_static() {
            Vec::new()
        } else {
            let f_c = self
                .controller
                .f_c
                .as_ref()
                .ok_or(SystemError::MissingJacobian("f_C"))?;
            let v = f_c(x_c, &xhat);
            check_len("f_C output", &v, self.controller.n_c)?;
            v
        };

        let (xhat_dot, uhat_dot) = match &self.hold {
            Hold::ZeroOrder => (vec![0.0; n_p], vec![0.0; n_u]),
            Hold::Custom { f_hat_p, f_hat_c } => {
                let a = f_hat_p(x_p, x_c, &xhat, &uhat);
                check_len("f̂_P output", &a, n_p)?;
                let b = f_hat_c(x_p, x_c, &xhat, &uhat);
                check_len("f̂_C output", &b, n_u)?;
                (a, b)
            }
        };

        let mut edot: Vec<f64> = xhat_dot
            .iter()
            .zip(&xp_dot)
            .map(|(h, f)| h - f)
            .collect();

        if !self.controller.is_static() {
            let dxc = self
                .controller
                .dgc_dxc
                .as_ref()
                .ok_or(SystemError::MissingJacobian("dg_C/dx_C"))?;
            let du_c = mat_vec(&dxc(x_c, &xhat), &xc_dot, n_u);
            let du_x = if xhat_dot.iter().any(|v| *v != 0.0) {
                let dxh = self
                    .controller
                    .dgc_dxhat
                    .as_ref()
                    .ok_or(SystemError::MissingJacobian("dg_C/dx̂_P"))?;
                mat_vec(&dxh(x_c, &xhat), &xhat_dot, n_u)
            } else {
                vec![0.0; n_u]
            };
            edot.extend(
                uhat_dot
                    .iter()
                    .zip(du_c.iter().zip(&du_x))
                    .map(|(ud, (a, b))| ud - a - b),
            );
        }

        let mut xdot = xp_dot;
        xdot.extend(xc_dot);
        Ok((xdot, edot))
    }
}

/// The scalar benchmark plant `ẋ = d·x² − x³ + u` under `u = −2x̂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleVi {
    pub d: f64,
}

impl ExampleVi {
    pub fn new(d: f64) -> Self {
        Self { d }
    }

    /// `f(x, e) = d·x² − x³ − 2(x + e)`.
    pub fn f(&self, x: f64, e: f64) -> f64 {
        self.d * x * x - x * x * x - 2.0 * (x + e)
    }

    pub fn sampled_loop(&self) -> SampledLoop {
        let d = self.d;
        SampledLoop {
            plant: PlantModel {
                n_p: 1,
                n_u: 1,
                f_p: Arc::new(move |x, u| vec![d * x[0] * x[0] - x[0] * x[0] * x[0] + u[0]]),
            },
            controller: Controller::static_feedback(|xhat| vec![-2.0 * xhat[0]]),
            hold: Hold::ZeroOrder,
        }
    }
}

/// Zero-order-hold static loop of the benchmark plant for parameter `d`.
///
/// Values with `|d| ≥ 1` are accepted with a warning.
pub fn example_vi_loop(d: f64) -> Result<SampledLoop, SystemError> {
    if !d.is_finite() {
        return Err(SystemError::NonFiniteParameter { name: "d", value: d });
    }
    if d.abs() >= 1.0 {
        log::warn!("example plant parameter d = {d} lies outside |d| < 1");
    }
    Ok(ExampleVi::new(d).sampled_loop())
}
