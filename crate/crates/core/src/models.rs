//! Device physics: the charge-controlled tanh magnetization map, an ideal
//! charge-controlled memristor, and a threshold-switching hysteron magnet.

use thiserror::Error;

/// Initial magnetization magnitudes this close to saturation are rejected:
/// `atanh(m0)` diverges and the state-from-charge map degenerates.
pub const M0_SATURATION_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter `{field}` = {value} violates requirement: {requirement}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

fn require(ok: bool, field: &'static str, value: f64, requirement: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParam { field, value, requirement })
    }
}

/// sech²(x) computed from exponentials so it stays accurate deep into the
/// tails, where `1 - tanh²(x)` cancels to zero long before sech² underflows.
pub fn sech_sq(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// ln(cosh(x)) without overflow for large |x|.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
}

// ---------------------------------------------------------------------------
// Charge-controlled tanh magnetization map
// ---------------------------------------------------------------------------

/// Parameters of the tanh charge-to-magnetization device:
/// m(q) = tanh(q/s_w + atanh(m0)), V = (k_phi/s_w)·sech²(·)·I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTanhParams {
    /// Switching constant (C); charge scale of the magnetization map.
    pub s_w: f64,
    /// Initial normalized magnetization, strictly inside (-1, 1).
    pub m0: f64,
    /// Flux scale μ0·S·M_S (Wb); flux linkage at full magnetization.
    pub k_phi: f64,
}

impl PhiTanhParams {
    pub fn new(s_w: f64, m0: f64, k_phi: f64) -> Result<Self, ModelError> {
        require(s_w > 0.0 && s_w.is_finite(), "s_w", s_w, "s_w > 0")?;
        require(k_phi > 0.0 && k_phi.is_finite(), "k_phi", k_phi, "k_phi > 0")?;
        require(
            m0.abs() < 1.0 - M0_SATURATION_MARGIN,
            "m0",
            m0,
            "|m0| < 1 - 1e-9 (atanh(m0) must stay finite)",
        )?;
        Ok(Self { s_w, m0, k_phi })
    }

    /// Integration constant atanh(m0).
    pub fn offset(&self) -> f64 {
        self.m0.atanh()
    }
}

/// Normalized magnetization at net charge `q`. Strictly inside (-1, 1).
pub fn phi_magnetization(q: f64, p: &PhiTanhParams) -> f64 {
    (q / p.s_w + p.offset()).tanh()
}

/// Small-signal resistance (k_phi/s_w)·sech²(q/s_w + atanh(m0)).
pub fn phi_resistance(q: f64, p: &PhiTanhParams) -> f64 {
    (p.k_phi / p.s_w) * sech_sq(q / p.s_w + p.offset())
}

/// Terminal voltage at charge `q` carrying current `i`.
pub fn phi_voltage(q: f64, i: f64, p: &PhiTanhParams) -> f64 {
    phi_resistance(q, p) * i
}

// ---------------------------------------------------------------------------
// Ideal charge-controlled memristor
// ---------------------------------------------------------------------------

/// Bounded-resistance memristor R(q) = r_mid + d_r·tanh(q/q0).
///
/// The state is the net charge alone, so the device returns to its initial
/// resistance whenever the net charge returns. Setting `d_r = 0` degenerates
/// it into a plain resistor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealMemristorParams {
    /// Center resistance (Ω).
    pub r_mid: f64,
    /// Resistance swing (Ω); may be negative to flip polarity.
    pub d_r: f64,
    /// Charge scale (C).
    pub q0: f64,
}

impl IdealMemristorParams {
    pub fn new(r_mid: f64, d_r: f64, q0: f64) -> Result<Self, ModelError> {
        require(
            r_mid - d_r.abs() > 0.0,
            "r_mid",
            r_mid,
            "r_mid - |d_r| > 0 (resistance stays positive)",
        )?;
        require(q0 > 0.0 && q0.is_finite(), "q0", q0, "q0 > 0")?;
        Ok(Self { r_mid, d_r, q0 })
    }
}

/// Resistance at net charge `q`; bounded in (r_mid - |d_r|, r_mid + |d_r|).
pub fn ideal_resistance(q: f64, p: &IdealMemristorParams) -> f64 {
    p.r_mid + p.d_r * (q / p.q0).tanh()
}

/// Flux linkage ∫V dt expressed as a function of charge:
/// ∫R(q)dq = r_mid·q + d_r·q0·ln cosh(q/q0), zero at q = 0.
pub fn ideal_flux(q: f64, p: &IdealMemristorParams) -> f64 {
    p.r_mid * q + p.d_r * p.q0 * ln_cosh(q / p.q0)
}

// ---------------------------------------------------------------------------
// Threshold hysteron magnet
// ---------------------------------------------------------------------------

/// Bistable magnet with a coercive threshold: below |H| = h_c the
/// magnetization holds; above it, first-order relaxation toward sign(H).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdHysteronParams {
    /// Coercive field (A/m).
    pub h_c: f64,
    /// Switching time constant (s).
    pub tau: f64,
    /// Field per unit current, H = k_h·I (1/m).
    pub k_h: f64,
    /// Flux scale μ0·S·M_S (Wb).
    pub k_phi: f64,
    /// Series wire resistance (Ω).
    pub r_w: f64,
    /// Initial normalized magnetization in [-1, 1].
    pub m_init: f64,
}

impl ThresholdHysteronParams {
    pub fn new(
        h_c: f64,
        tau: f64,
        k_h: f64,
        k_phi: f64,
        r_w: f64,
        m_init: f64,
    ) -> Result<Self, ModelError> {
        require(h_c > 0.0 && h_c.is_finite(), "h_c", h_c, "h_c > 0")?;
        require(tau > 0.0 && tau.is_finite(), "tau", tau, "tau > 0")?;
        require(k_h > 0.0 && k_h.is_finite(), "k_h", k_h, "k_h > 0")?;
        require(k_phi > 0.0 && k_phi.is_finite(), "k_phi", k_phi, "k_phi > 0")?;
        require(r_w > 0.0 && r_w.is_finite(), "r_w", r_w, "r_w > 0")?;
        require(m_init.abs() <= 1.0, "m_init", m_init, "|m_init| <= 1")?;
        Ok(Self { h_c, tau, k_h, k_phi, r_w, m_init })
    }

    /// Loop current magnitude at which |H| reaches the coercive field.
    pub fn threshold_current(&self) -> f64 {
        self.h_c / self.k_h
    }
}

/// dm/dt for the hysteron: zero below the coercive field, first-order
/// relaxation toward sign(H) at and above it.
pub fn hysteron_rate(m: f64, h: f64, p: &ThresholdHysteronParams) -> f64 {
    if h.abs() < p.h_c {
        0.0
    } else {
        (h.signum() - m) / p.tau
    }
}

/// Terminal voltage: switching EMF plus the ohmic wire drop.
pub fn hysteron_voltage(dm_dt: f64, i: f64, p: &ThresholdHysteronParams) -> f64 {
    p.k_phi * dm_dt + p.r_w * i
}

/// Flux linkage at normalized magnetization `m`.
pub fn flux_of(m: f64, k_phi: f64) -> f64 {
    k_phi * m
}

// ---------------------------------------------------------------------------
// Device model union and state
// ---------------------------------------------------------------------------

/// Any device the simulator can drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceModel {
    PhiTanh(PhiTanhParams),
    Ideal(IdealMemristorParams),
    Hysteron(ThresholdHysteronParams),
}

/// Snapshot of a device's internal variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    /// Net charge through the device (C).
    pub q: f64,
    /// Normalized magnetization (dimensionless).
    pub m: f64,
    /// Flux linkage (Wb).
    pub phi: f64,
}

impl DeviceModel {
    /// Initial state at `q = q_init` (and `m = m_init` for the hysteron).
    pub fn initial_state(&self, q_init: f64) -> DeviceState {
        match self {
            DeviceModel::PhiTanh(_) | DeviceModel::Ideal(_) => self.state_for_charge(q_init),
            DeviceModel::Hysteron(p) => DeviceState {
                q: q_init,
                m: p.m_init,
                phi: flux_of(p.m_init, p.k_phi),
            },
        }
    }

    /// State fully determined by charge. Valid for the two resistive-form
    /// devices; the hysteron's magnetization is an independent variable.
    pub fn state_for_charge(&self, q: f64) -> DeviceState {
        match self {
            DeviceModel::PhiTanh(p) => {
                let m = phi_magnetization(q, p);
                DeviceState { q, m, phi: flux_of(m, p.k_phi) }
            }
            DeviceModel::Ideal(p) => DeviceState {
                q,
                m: (q / p.q0).tanh(),
                phi: ideal_flux(q, p),
            },
            DeviceModel::Hysteron(_) => {
                panic!("hysteron state is not a function of charge alone")
            }
        }
    }

    /// Complete a state from its independent variables (q, and m for the
    /// hysteron), recomputing the dependent ones.
    pub fn state_from(&self, q: f64, m: f64) -> DeviceState {
        match self {
            DeviceModel::PhiTanh(_) | DeviceModel::Ideal(_) => self.state_for_charge(q),
            DeviceModel::Hysteron(p) => DeviceState { q, m, phi: flux_of(m, p.k_phi) },
        }
    }

    /// Small-signal resistance seen by the series loop.
    /// For the hysteron this is the wire resistance; the EMF is separate.
    pub fn resistance(&self, state: &DeviceState) -> f64 {
        match self {
            DeviceModel::PhiTanh(p) => phi_resistance(state.q, p),
            DeviceModel::Ideal(p) => ideal_resistance(state.q, p),
            DeviceModel::Hysteron(p) => p.r_w,
        }
    }

    /// True when the terminal law has the form V = R(q)·I.
    pub fn is_resistive_form(&self) -> bool {
        !matches!(self, DeviceModel::Hysteron(_))
    }

    /// Largest resistance the device can present, for RC-tail estimates.
    pub fn max_resistance(&self) -> f64 {
        match self {
            DeviceModel::PhiTanh(p) => p.k_phi / p.s_w,
            DeviceModel::Ideal(p) => p.r_mid + p.d_r.abs(),
            DeviceModel::Hysteron(p) => p.r_w,
        }
    }
}
