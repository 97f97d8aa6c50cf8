use std::fmt;

use crate::error::{Error, Result};

/// Physical rates shared by every scheme. All rates are in units of 1/time.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Bit-flip rate per qubit.
    pub gamma: f64,
    /// Cavity energy decay rate.
    pub kappa: f64,
    /// Engineered conversion rate Ω_p.
    pub omega_p: f64,
    /// Dispersive coupling `χ_{a_k b_1}`; the other two qubits get `−χ/2`.
    /// `None` means `100·Ω_p`.
    pub chi: Option<f64>,
    /// Exchange rate of the circulation Hamiltonian; `None` means `Ω_p`.
    pub j_circ: Option<f64>,
    /// Correction rate of the central star block; `None` means `Ω_p²/κ`.
    pub gamma_c_central: Option<f64>,
    /// Correction rate of the outer star blocks; `None` means `Ω_p²/κ`.
    pub gamma_c_outer: Option<f64>,
    /// Half-period of the multiplexed star; `None` means `10/Γ_c`.
    pub switch_period: Option<f64>,
    /// Truncation of each cavity factor.
    pub cavity_dim: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            kappa: 500.0,
            omega_p: 100.0,
            chi: None,
            j_circ: None,
            gamma_c_central: None,
            gamma_c_outer: None,
            switch_period: None,
            cavity_dim: 2,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma", Some(self.gamma)),
            ("kappa", Some(self.kappa)),
            ("omega_p", Some(self.omega_p)),
            ("j_circ", self.j_circ),
            ("gamma_c_central", self.gamma_c_central),
            ("gamma_c_outer", self.gamma_c_outer),
        ];
        for (name, v) in rates {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("{name} must be a finite rate ≥ 0, got {v}")));
                }
            }
        }
        if let Some(chi) = self.chi {
            if !chi.is_finite() {
                return Err(Error::InvalidParameter(format!("chi must be finite, got {chi}")));
            }
        }
        if let Some(t) = self.switch_period {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("switch_period must be > 0, got {t}")));
            }
        }
        if self.cavity_dim < 2 {
            return Err(Error::InvalidParameter("cavity_dim must be at least 2".into()));
        }
        Ok(())
    }

    pub fn chi(&self) -> f64 {
        self.chi.unwrap_or(100.0 * self.omega_p)
    }

    /// Dispersive couplings `(χ_{a_k b_1}, χ_{a_k b_2}, χ_{a_k b_3})`; they sum to zero.
    pub fn chi_triple(&self) -> [f64; 3] {
        let chi = self.chi();
        [chi, -chi / 2.0, -chi / 2.0]
    }

    pub fn j_circ(&self) -> f64 {
        self.j_circ.unwrap_or(self.omega_p)
    }

    pub fn gamma_c_outer(&self) -> Result<f64> {
        self.gamma_c_outer.map_or_else(|| gamma_c(self), Ok)
    }

    pub fn gamma_c_central(&self) -> Result<f64> {
        self.gamma_c_central.map_or_else(|| gamma_c(self), Ok)
    }

    pub fn switch_period(&self) -> Result<f64> {
        match self.switch_period {
            Some(t) => Ok(t),
            None => {
                let g = self.gamma_c_outer()?.min(self.gamma_c_central()?);
                if g <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "switch_period defaults to 10/Γ_c, which needs Γ_c > 0".into(),
                    ));
                }
                Ok(10.0 / g)
            }
        }
    }
}

/// Effective correction rate after eliminating a κ-damped cavity, `Ω_p²/κ`.
pub fn gamma_c(params: &Params) -> Result<f64> {
    if params.kappa <= 0.0 {
        return Err(Error::InvalidParameter("kappa must be > 0 to define Γ_c".into()));
    }
    Ok(params.omega_p * params.omega_p / params.kappa)
}

/// Ratio `b/a` required for `a ≪ b`.
pub const SEPARATION_RATIO: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TimescaleWarning {
    /// `slow ≪ fast` fails: `fast/slow < 5`.
    Violated { slow: &'static str, fast: &'static str, ratio: f64 },
    /// Ω_p is below κ but by less than the separation ratio.
    PumpMarginal { ratio: f64 },
    /// Ω_p ≥ κ: the cavity cannot evacuate entropy that fast.
    PumpExceedsDecay { ratio: f64 },
}

impl fmt::Display for TimescaleWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Violated { slow, fast, ratio } => {
                write!(f, "{slow} ≪ {fast} violated ({fast}/{slow} = {ratio:.3} < {SEPARATION_RATIO})")
            }
            Self::PumpMarginal { ratio } => {
                write!(f, "Ω_p < κ marginal (κ/Ω_p = {ratio:.3} < {SEPARATION_RATIO})")
            }
            Self::PumpExceedsDecay { ratio } => write!(f, "Ω_p < κ violated (κ/Ω_p = {ratio:.3})"),
        }
    }
}

/// Checks `γ ≪ κ ≪ χ`, `Ω_p ≪ χ` and `Ω_p < κ`. Never fails.
pub fn validate_timescales(params: &Params) -> Vec<TimescaleWarning> {
    let mut out = Vec::new();
    let chi = params.chi().abs();
    let mut check = |slow_name, slow: f64, fast_name, fast: f64| {
        if slow > 0.0 && fast / slow < SEPARATION_RATIO {
            out.push(TimescaleWarning::Violated { slow: slow_name, fast: fast_name, ratio: fast / slow });
        }
    };
    check("γ", params.gamma, "κ", params.kappa);
    check("κ", params.kappa, "χ", chi);
    check("Ω_p", params.omega_p, "χ", chi);
    if params.omega_p > 0.0 {
        let ratio = params.kappa / params.omega_p;
        if ratio <= 1.0 {
            out.push(TimescaleWarning::PumpExceedsDecay { ratio });
        } else if ratio < SEPARATION_RATIO {
            out.push(TimescaleWarning::PumpMarginal { ratio });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(omega_p: f64, kappa: f64) -> Params {
        Params { omega_p, kappa, ..Params::default() }
    }

    #[test]
    fn gamma_c_values() {
        assert_eq!(gamma_c(&p(100.0, 500.0)).unwrap(), 20.0);
        assert_eq!(gamma_c(&p(200.0, 500.0)).unwrap(), 80.0);
        assert_eq!(gamma_c(&p(0.0, 500.0)).unwrap(), 0.0);
        assert!(gamma_c(&p(100.0, 0.0)).is_err());
    }

    #[test]
    fn paired_chi_sums_to_zero() {
        let t = Params::default().chi_triple();
        assert_eq!(t.iter().sum::<f64>(), 0.0);
        assert_eq!(t[0], 10_000.0);
    }

    #[test]
    fn reference_regime_is_clean() {
        let params = Params { gamma: 1.0, kappa: 500.0, omega_p: 100.0, chi: Some(10_000.0), ..Params::default() };
        assert!(validate_timescales(&params).is_empty());
    }

    #[test]
    fn weak_separation_warns() {
        let params = Params { gamma: 1.0, kappa: 2.0, omega_p: 0.1, ..Params::default() };
        let w = validate_timescales(&params);
        assert!(w.iter().any(|w| matches!(w, TimescaleWarning::Violated { slow: "γ", fast: "κ", .. })));
        assert!(w[0].to_string().contains("γ ≪ κ violated"));
    }

    #[test]
    fn strong_pump_is_marginal() {
        let w = validate_timescales(&p(400.0, 500.0));
        assert_eq!(w, vec![TimescaleWarning::PumpMarginal { ratio: 1.25 }]);
        assert!(w[0].to_string().starts_with("Ω_p < κ marginal"));
    }

    #[test]
    fn negative_rates_rejected() {
        let params = Params { gamma: -1.0, ..Params::default() };
        assert!(params.validate().is_err());
    }
}
