//! Bounded drift fields `b(t, x)` on `[0, ∞)²`.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use libm::fabs;

use crate::error::ensure;
use crate::Result;

/// Drift values on a time list × uniform `x` grid.
///
/// Lookup is piecewise constant in time (latest stored time not after `t`) and linear in `x`;
/// points beyond `x_max` use the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTable {
    times: Vec<f64>,
    x_max: f64,
    nx: usize,
    values: Vec<f64>,
}

impl DriftTable {
    pub fn new(times: Vec<f64>, x_max: f64, nx: usize, values: Vec<f64>) -> Result<DriftTable> {
        ensure!(!times.is_empty(), Config, "drift table needs at least one time");
        ensure!(nx >= 2 && x_max > 0.0, Config, "drift table needs nx >= 2 and x_max > 0");
        ensure!(
            values.len() == times.len() * nx,
            Config,
            "drift table has {} values, expected {}",
            values.len(),
            times.len() * nx
        );
        ensure!(times.windows(2).all(|w| w[0] <= w[1]), Config, "drift table times must be sorted");
        ensure!(values.iter().all(|v| v.is_finite()), Config, "drift table values must be finite");
        Ok(DriftTable { times, x_max, nx, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        let row = &self.values[k * self.nx..(k + 1) * self.nx];
        let pos = (x / self.x_max * (self.nx - 1) as f64).max(0.0);
        if pos >= (self.nx - 1) as f64 {
            return row[self.nx - 1];
        }
        let i = pos as usize;
        let frac = pos - i as f64;
        row[i] * (1.0 - frac) + row[i + 1] * frac
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(fabs(*v)))
    }
}

type DriftFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum DriftKind {
    Constant(f64),
    /// `−pull·sgn(x − center)`: toward the center for `pull > 0`.
    BangBang { pull: f64, center: f64 },
    /// `beta·sgn(g)` for a tabulated gradient `g`, interpolated before taking the sign.
    GradientSign { gradient: Arc<DriftTable>, beta: f64 },
    UserTable(Arc<DriftTable>),
    Function(Arc<DriftFn>),
}

impl fmt::Debug for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftKind::Constant(b) => write!(f, "Constant({b})"),
            DriftKind::BangBang { pull, center } => write!(f, "BangBang {{ pull: {pull}, center: {center} }}"),
            DriftKind::GradientSign { gradient, beta } => {
                write!(f, "GradientSign({} x {}, beta={beta})", gradient.times.len(), gradient.nx)
            }
            DriftKind::UserTable(t) => write!(f, "UserTable({} x {})", t.times.len(), t.nx),
            DriftKind::Function(_) => write!(f, "Function"),
        }
    }
}

/// A drift with a declared bound `κ`; evaluations are clamped into `[−κ, κ]`.
#[derive(Debug, Clone)]
pub struct DriftField {
    pub kind: DriftKind,
    pub kappa: f64,
    pub label: String,
}

impl DriftField {
    pub fn constant(b: f64) -> DriftField {
        DriftField { kind: DriftKind::Constant(b), kappa: fabs(b), label: alloc::format!("constant({b})") }
    }

    pub fn bang_bang(pull: f64, center: f64) -> DriftField {
        DriftField {
            kind: DriftKind::BangBang { pull, center },
            kappa: fabs(pull),
            label: alloc::format!("bang-bang(pull={pull}, center={center})"),
        }
    }

    /// Feedback `beta·sgn(g(t, x))` from a table of the gradient `g`.
    pub fn gradient_sign(gradient: DriftTable, beta: f64) -> DriftField {
        DriftField {
            kind: DriftKind::GradientSign { gradient: Arc::new(gradient), beta },
            kappa: fabs(beta),
            label: "hjb-feedback".to_string(),
        }
    }

    /// Tabulated drift; the bound defaults to the largest tabulated magnitude.
    pub fn user_table(table: DriftTable) -> DriftField {
        let kappa = table.max_abs();
        DriftField { kind: DriftKind::UserTable(Arc::new(table)), kappa, label: "user-table".to_string() }
    }

    pub fn function<F>(label: &str, kappa: f64, f: F) -> DriftField
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        DriftField { kind: DriftKind::Function(Arc::new(f)), kappa, label: label.to_string() }
    }

    pub fn with_bound(mut self, kappa: f64) -> DriftField {
        self.kappa = kappa;
        self
    }

    pub fn with_label(mut self, label: &str) -> DriftField {
        self.label = label.to_string();
        self
    }

    /// Unclamped value.
    pub fn raw(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DriftKind::Constant(b) => *b,
            DriftKind::BangBang { pull, center } => -pull * crate::sgn(x - center),
            DriftKind::GradientSign { gradient, beta } => beta * crate::sgn(gradient.eval(t, x)),
            DriftKind::UserTable(table) => table.eval(t, x),
            DriftKind::Function(f) => f(t, x),
        }
    }

    /// Value clamped to `[−κ, κ]` and whether clamping was needed.
    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> (f64, bool) {
        let b = self.raw(t, x);
        if b > self.kappa {
            (self.kappa, true)
        } else if b < -self.kappa {
            (-self.kappa, true)
        } else if b.is_nan() {
            (0.0, true)
        } else {
            (b, false)
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            DriftKind::Constant(b) => Some(b.clamp(-self.kappa, self.kappa)),
            _ => None,
        }
    }

    /// Largest `|b|` over a sampling lattice of `[0, t_max] × [0, x_max]`.
    pub fn sampled_sup(&self, t_max: f64, x_max: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..=64 {
            for j in 0..=256 {
                let t = t_max * i as f64 / 64.0;
                let x = x_max * j as f64 / 256.0;
                sup = sup.max(fabs(self.raw(t, x)));
            }
        }
        sup
    }

    /// Fails if the declared bound exceeds `kappa` or the sampled drift does.
    pub fn check_bound(&self, kappa: f64, t_max: f64, x_max: f64) -> Result<()> {
        let observed = self.kappa.max(self.sampled_sup(t_max, x_max).min(self.kappa));
        if observed > kappa * (1.0 + 1e-12) {
            return Err(crate::Error::DriftBound { label: self.label.clone(), kappa, observed });
        }
        Ok(())
    }
}
