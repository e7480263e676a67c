use serde::{Deserialize, Serialize};

use super::OptimizerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Gd,
    Nag,
    NagDecreasing,
    Agnes,
    HeavyBallFlow,
}

impl Scheme {
    pub fn is_discrete(self) -> bool {
        self != Scheme::HeavyBallFlow
    }
}

/// Which closed form drives the decreasing step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleForm {
    /// `eta_n = 1 / (mu (n + n0 + 1)^2)`, `n0 = sqrt(L/mu)`.
    #[default]
    Appendix,
    /// `eta_n = mu / (n + sqrt(L mu) + 1)^2`.
    Maintext,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Steps(usize),
    Time(f64),
}

/// Step sizes and momentum constants for every scheme.
///
/// `alpha` is the look-ahead step of AGNES and equals `eta` for Nesterov.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub scheme: Scheme,
    pub eta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub smoothness: Option<f64>,
    pub n0: f64,
    pub schedule_form: ScheduleForm,
    pub sigma_m: f64,
    pub dt: f64,
    pub horizon: Horizon,
    /// Keep every `record_every`-th state (the final state is always kept).
    pub record_every: usize,
}

/// Internal constants of the AGNES Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgnesConstants {
    pub b: f64,
    pub gamma_lyap: f64,
    pub lambda: f64,
}

fn positive(name: &'static str, v: f64) -> Result<(), OptimizerError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(OptimizerError::InvalidParameter {
            name,
            reason: format!("{v} must be positive and finite"),
        })
    }
}

impl OptimizerParams {
    fn base(scheme: Scheme) -> Self {
        Self {
            scheme,
            eta: 0.0,
            rho: 0.0,
            alpha: 0.0,
            gamma: 0.0,
            mu: 0.0,
            smoothness: None,
            n0: 0.0,
            schedule_form: ScheduleForm::Appendix,
            sigma_m: 0.0,
            dt: 0.0,
            horizon: Horizon::Steps(100),
            record_every: 1,
        }
    }

    pub fn gd(eta: f64) -> Result<Self, OptimizerError> {
        positive("eta", eta)?;
        Ok(Self {
            eta,
            alpha: eta,
            ..Self::base(Scheme::Gd)
        })
    }

    /// Nesterov with `rho = (1 - sqrt(mu eta)) / (1 + sqrt(mu eta))`.
    pub fn nag(mu: f64, eta: f64) -> Result<Self, OptimizerError> {
        positive("mu", mu)?;
        positive("eta", eta)?;
        if mu * eta > 1.0 {
            return Err(OptimizerError::InvalidParameter {
                name: "eta",
                reason: format!("mu * eta = {} exceeds 1", mu * eta),
            });
        }
        let s = (mu * eta).sqrt();
        Ok(Self {
            eta,
            alpha: eta,
            mu,
            rho: (1.0 - s) / (1.0 + s),
            ..Self::base(Scheme::Nag)
        })
    }

    /// AGNES with the step sizes of the multiplicative-noise theorem.
    pub fn agnes(
        mu: f64,
        eta: f64,
        sigma_m: f64,
        smoothness: Option<f64>,
    ) -> Result<Self, OptimizerError> {
        positive("mu", mu)?;
        positive("eta", eta)?;
        if !(sigma_m >= 0.0 && sigma_m.is_finite()) {
            return Err(OptimizerError::InvalidParameter {
                name: "sigma_m",
                reason: format!("{sigma_m} must be non-negative"),
            });
        }
        let s2 = sigma_m * sigma_m;
        if let Some(l) = smoothness {
            let limit = 1.0 / (l * (1.0 + s2));
            if eta > limit {
                return Err(OptimizerError::StepBound {
                    bound: "eta <= 1/(L(1+sigma_m^2))",
                    value: eta,
                    limit,
                });
            }
        }
        let a = 1.0 - (mu * (1.0 + s2) * eta).sqrt();
        if !(a + s2 > 0.0) || a < 0.0 {
            return Err(OptimizerError::InvalidParameter {
                name: "eta",
                reason: format!(
                    "mu (1 + sigma_m^2) eta = {} exceeds 1",
                    mu * (1.0 + s2) * eta
                ),
            });
        }
        let s = (mu * eta / (1.0 + s2)).sqrt();
        Ok(Self {
            eta,
            alpha: if s2 == 0.0 { eta } else { a / (a + s2) * eta },
            mu,
            rho: (1.0 - s) / (1.0 + s),
            smoothness,
            sigma_m,
            ..Self::base(Scheme::Agnes)
        })
    }

    /// Nesterov with the decreasing schedule; `eta` holds `eta_0`.
    pub fn nag_decreasing(mu: f64, l: f64, form: ScheduleForm) -> Result<Self, OptimizerError> {
        let (eta0, rho0) = decreasing_schedule(mu, l, 0, form)?;
        Ok(Self {
            eta: eta0,
            alpha: eta0,
            rho: rho0,
            mu,
            smoothness: Some(l),
            n0: schedule_offset(mu, l, form),
            schedule_form: form,
            ..Self::base(Scheme::NagDecreasing)
        })
    }

    /// Heavy-ball flow with critical damping `gamma = 2 sqrt(mu)` and
    /// `dt = min(1e-3, 0.1/sqrt(L))` unless overridden.
    pub fn heavy_ball(
        mu: f64,
        smoothness: Option<f64>,
        t_final: f64,
    ) -> Result<Self, OptimizerError> {
        positive("mu", mu)?;
        positive("horizon", t_final)?;
        let dt = match smoothness {
            Some(l) if l > 0.0 => 1e-3_f64.min(0.1 / l.sqrt()),
            _ => 1e-3,
        };
        Ok(Self {
            mu,
            gamma: 2.0 * mu.sqrt(),
            smoothness,
            dt,
            horizon: Horizon::Time(t_final),
            ..Self::base(Scheme::HeavyBallFlow)
        })
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_steps(self, steps: usize) -> Self {
        self.with_horizon(Horizon::Steps(steps))
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn with_smoothness(mut self, l: Option<f64>) -> Self {
        self.smoothness = l;
        self
    }

    /// Step `n`'s `(eta_n, rho_n, alpha_n)`; constant except for the decreasing scheme.
    pub fn step_constants(&self, n: usize) -> (f64, f64, f64) {
        match self.scheme {
            Scheme::NagDecreasing => {
                let l = self.smoothness.unwrap_or(self.mu);
                let (eta, rho) = decreasing_schedule(self.mu, l, n, self.schedule_form)
                    .unwrap_or((self.eta, self.rho));
                (eta, rho, eta)
            }
            _ => (self.eta, self.rho, self.alpha),
        }
    }

    /// Per-step contraction factor of the scheme's Lyapunov function.
    pub fn contraction_factor(&self) -> f64 {
        match self.scheme {
            Scheme::Agnes => {
                1.0 - (self.mu * self.eta / (1.0 + self.sigma_m * self.sigma_m)).sqrt()
            }
            _ => 1.0 - (self.mu * self.eta).sqrt(),
        }
    }

    pub fn agnes_constants(&self) -> AgnesConstants {
        let (mu, eta, alpha) = (self.mu, self.eta, self.alpha);
        let b = ((1.0 + self.sigma_m * self.sigma_m) * alpha / eta).sqrt();
        let gamma_lyap = mu.sqrt() * (eta - alpha) + b * alpha.sqrt();
        let s = (mu * alpha).sqrt();
        let lambda = (b + s).powi(2) / (b - s) * gamma_lyap / alpha.sqrt();
        AgnesConstants {
            b,
            gamma_lyap,
            lambda,
        }
    }

    /// Number of discrete steps (or integrator steps for the flow).
    pub fn step_count(&self) -> usize {
        match self.horizon {
            Horizon::Steps(n) => n,
            Horizon::Time(t) => {
                if self.scheme == Scheme::HeavyBallFlow {
                    (t / self.dt).round() as usize
                } else {
                    (t / self.eta.sqrt()).round() as usize
                }
            }
        }
    }
}

fn schedule_offset(mu: f64, l: f64, form: ScheduleForm) -> f64 {
    match form {
        ScheduleForm::Appendix => (l / mu).sqrt(),
        ScheduleForm::Maintext => (l * mu).sqrt(),
    }
}

/// `(eta_n, rho_n)` of the decreasing-step scheme.
pub fn decreasing_schedule(
    mu: f64,
    l: f64,
    n: usize,
    form: ScheduleForm,
) -> Result<(f64, f64), OptimizerError> {
    positive("mu", mu)?;
    positive("L", l)?;
    if mu > l {
        return Err(OptimizerError::InvalidParameter {
            name: "mu",
            reason: format!("mu = {mu} exceeds L = {l}"),
        });
    }
    let n0 = schedule_offset(mu, l, form);
    let k = n as f64 + n0 + 1.0;
    let eta = match form {
        ScheduleForm::Appendix => 1.0 / (mu * k * k),
        ScheduleForm::Maintext => mu / (k * k),
    };
    if n == 0 && eta > 1.0 / l {
        return Err(OptimizerError::StepBound {
            bound: "eta_0 <= 1/L",
            value: eta,
            limit: 1.0 / l,
        });
    }
    let s = (mu * eta).sqrt();
    Ok((eta, (1.0 - s) / (1.0 + s)))
}
