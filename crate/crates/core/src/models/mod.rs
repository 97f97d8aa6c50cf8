//! Lindblad models for the repetition-code schemes at several levels of
//! approximation.
//!
//! Tiers, from most to least reduced:
//! - [`Tier::Effective`]: qubits only, engineered dissipators `Γ_c D_{c_i}`;
//! - [`Tier::PreElimination`]: qubits plus damped cavities with resonant
//!   conversion couplings `(Ω_p/2)(a_i† c_i + h.c.)`;
//! - [`Tier::Dispersive`]: qubits plus cavities in the dispersive frame, where
//!   the correction arises from resonance conditions set by `χ`.

mod params;
mod star;
mod three_qubit;

use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, TensorSpace};

pub use params::{gamma_c, validate_timescales, Params, TimescaleWarning, SEPARATION_RATIO};
pub use star::{build_star_effective, build_star_multiplexed, star_label, star_space};
pub use three_qubit::{
    build_effective_3q, build_single_cavity_3q, build_tier_b_3q, build_tier_c_3q,
    build_unprotected_qubit, correction_operator, correction_operator_outer_form, three_qubit_cavity_space,
};

const HERMITIAN_TOL: f64 = 1e-12;

/// On/off schedule of a term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Constant,
    /// Active while `t mod period ∈ [on_start, on_end)`.
    Periodic { period: f64, on_start: f64, on_end: f64 },
}

impl Profile {
    pub fn is_active(&self, t: f64) -> bool {
        match *self {
            Profile::Constant => true,
            Profile::Periodic { period, on_start, on_end } => {
                let phase = t.rem_euclid(period);
                phase >= on_start && phase < on_end
            }
        }
    }

    /// Switching times strictly inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match *self {
            Profile::Constant => Vec::new(),
            Profile::Periodic { period, on_start, on_end } => {
                let mut out = Vec::new();
                let k0 = (t0 / period).floor() as i64 - 1;
                let mut k = k0;
                loop {
                    let base = k as f64 * period;
                    if base + on_start >= t1 && base + on_end >= t1 {
                        break;
                    }
                    for edge in [base + on_start, base + on_end] {
                        if edge > t0 && edge < t1 {
                            out.push(edge);
                        }
                    }
                    k += 1;
                }
                out
            }
        }
    }

    /// Fraction of time the profile is active.
    pub fn duty_cycle(&self) -> f64 {
        match *self {
            Profile::Constant => 1.0,
            Profile::Periodic { period, on_start, on_end } => ((on_end - on_start) / period).clamp(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub op: Operator,
    pub profile: Profile,
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub label: String,
    pub rate: f64,
    pub jump: Operator,
    pub profile: Profile,
    pub kind: ChannelKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    /// Engineered correction dissipator.
    Correction,
    /// Cavity photon loss.
    CavityDecay,
    /// Bit-flip noise.
    BitFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    Effective,
    PreElimination,
    Dispersive,
    Bare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Effective3q,
    TierB3q,
    TierC3q,
    SingleCavity3q,
    StarEffective,
    StarMultiplexed,
    UnprotectedQubit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Effective3q => "effective3q",
            Scheme::TierB3q => "tierB3q",
            Scheme::TierC3q => "tierC3q",
            Scheme::SingleCavity3q => "singleCavity3q",
            Scheme::StarEffective => "starEffective",
            Scheme::StarMultiplexed => "starMultiplexed",
            Scheme::UnprotectedQubit => "unprotectedQubit",
        };
        f.write_str(s)
    }
}

/// `dρ/dt = −i[H(t), ρ] + Σ rate·D_jump(ρ)` with piecewise-constant switching.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    space: TensorSpace,
    hamiltonian: Vec<HamiltonianTerm>,
    channels: Vec<Channel>,
    tier: Tier,
    scheme: Scheme,
}

impl LindbladModel {
    pub fn new(space: TensorSpace, tier: Tier, scheme: Scheme) -> Self {
        Self { space, hamiltonian: Vec::new(), channels: Vec::new(), tier, scheme }
    }

    pub fn add_hamiltonian(&mut self, op: Operator, profile: Profile) -> Result<()> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Precondition("Hamiltonian term is not Hermitian".into()));
        }
        self.hamiltonian.push(HamiltonianTerm { op, profile });
        Ok(())
    }

    pub fn add_channel(
        &mut self,
        label: impl Into<String>,
        kind: ChannelKind,
        rate: f64,
        jump: Operator,
        profile: Profile,
    ) -> Result<()> {
        if jump.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("channel rate must be ≥ 0, got {rate}")));
        }
        self.channels.push(Channel { label: label.into(), rate, jump, profile, kind });
        Ok(())
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &[HamiltonianTerm] {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn is_time_independent(&self) -> bool {
        self.hamiltonian.iter().all(|h| h.profile == Profile::Constant)
            && self.channels.iter().all(|c| c.profile == Profile::Constant)
    }

    pub fn has_hamiltonian(&self) -> bool {
        self.hamiltonian.iter().any(|h| h.op.nnz() > 0)
    }

    /// Sorted, deduplicated switching times strictly inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .hamiltonian
            .iter()
            .map(|h| h.profile)
            .chain(self.channels.iter().map(|c| c.profile))
            .flat_map(|p| p.breakpoints(t0, t1))
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        all
    }

    /// Copy with every channel of `kind` removed.
    pub fn without(&self, kind: ChannelKind) -> Self {
        let mut m = self.clone();
        m.channels.retain(|c| c.kind != kind);
        m
    }

    /// Copy with all rates multiplied by `factor` and Hamiltonians scaled too.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for c in &mut m.channels {
            c.rate *= factor;
        }
        for h in &mut m.hamiltonian {
            h.op = h.op.scale(factor);
        }
        m
    }
}
