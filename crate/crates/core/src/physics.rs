//! Closed-form dielectric models.
//!
//! Everything here is a pure function over small value types: the field
//! inside a homogeneous dielectric sphere, the single-shell cell/electrolyte
//! impedance, the Cole-Cole dispersion law, and the three loss descriptors
//! that the feature pipeline derives from a measured `(f, σ, εr)` triple.
//!
//! Angular frequency is always `ω = 2πf`; callers pass `f` in hertz.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex quantity (impedance in ohms, or a dimensionless permittivity).
///
/// Permittivities follow the engineering sign convention `ε* = ε′ − jε″`,
/// so a lossy material has a negative imaginary part here.
pub type ComplexValue = Complex64;

/// Vacuum permittivity in F/m (CODATA 2018).
pub const EPS0: f64 = 8.8541878128e-12;

/// Fixed physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub eps0: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants { eps0: EPS0 };
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("outside the domain of {operation}: {reason}")]
    Domain {
        operation: &'static str,
        reason: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, PhysicsError>;

fn require(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(PhysicsError::InvalidParameter { name, value, reason })
    }
}

#[inline]
pub fn angular_frequency(f: f64) -> f64 {
    2.0 * PI * f
}

/// Homogeneous dielectric sphere in a uniform applied field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereModel {
    /// Applied field magnitude, V/m.
    pub e0: f64,
    /// Sphere radius, m.
    pub radius: f64,
    /// Relative permittivity of the sphere.
    pub eps_r: f64,
}

impl SphereModel {
    pub fn validate(&self) -> Result<()> {
        require(self.e0.is_finite() && self.e0 >= 0.0, "e0", self.e0, "must be finite and >= 0")?;
        require(
            self.radius.is_finite() && self.radius > 0.0,
            "radius",
            self.radius,
            "must be finite and > 0",
        )?;
        require(
            self.eps_r.is_finite() && self.eps_r > 0.0,
            "eps_r",
            self.eps_r,
            "must be finite and > 0",
        )
    }
}

/// Uniform field magnitude inside the sphere, `3·E0/(εr + 2)`.
pub fn internal_field(m: &SphereModel) -> Result<f64> {
    m.validate()?;
    Ok(3.0 * m.e0 / (m.eps_r + 2.0))
}

/// Surface potential `Φ(θ) = −E_in·R·cos θ`, θ measured from the field axis.
pub fn surface_potential(m: &SphereModel, theta: f64) -> Result<f64> {
    require(theta.is_finite(), "theta", theta, "must be finite")?;
    let e_in = internal_field(m)?;
    Ok(-e_in * m.radius * theta.cos())
}

/// Cartesian field sample, V/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
}

impl FieldSample {
    pub fn new(ex: f64, ey: f64, ez: f64) -> Self {
        FieldSample { ex, ey, ez }
    }
}

/// Euclidean norm of a field sample.
pub fn field_magnitude(s: &FieldSample) -> f64 {
    (s.ex * s.ex + s.ey * s.ey + s.ez * s.ez).sqrt()
}

/// Field of the homogeneous sphere at a Cartesian point, with the applied
/// field along +z. Inside the sphere the field is uniform; outside it is the
/// applied field plus the induced dipole term.
pub fn field_at(m: &SphereModel, x: f64, y: f64, z: f64) -> Result<FieldSample> {
    m.validate()?;
    let r2 = x * x + y * y + z * z;
    let r = r2.sqrt();
    if r <= m.radius {
        return Ok(FieldSample::new(0.0, 0.0, internal_field(m)?));
    }
    // Dipole moment factor K = (εr − 1)/(εr + 2), E_dip = K·E0·R³·(3(ẑ·r̂)r̂ − ẑ)/r³
    let k = (m.eps_r - 1.0) / (m.eps_r + 2.0);
    let scale = k * m.e0 * m.radius.powi(3) / (r2 * r);
    let cz = z / r;
    let (ux, uy, uz) = (x / r, y / r, z / r);
    Ok(FieldSample::new(
        scale * 3.0 * cz * ux,
        scale * 3.0 * cz * uy,
        m.e0 + scale * (3.0 * cz * uz - 1.0),
    ))
}

/// Single-shell equivalent circuit of a cell suspended in electrolyte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Electrolyte resistance, Ω.
    pub r_e: f64,
    /// Cytoplasmic resistance, Ω.
    pub r_i: f64,
    /// Membrane capacitance, F.
    pub c_m: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_e", self.r_e), ("r_i", self.r_i), ("c_m", self.c_m)] {
            require(v.is_finite() && v > 0.0, name, v, "must be finite and > 0")?;
        }
        Ok(())
    }
}

/// Impedance of the cell/electrolyte mixture:
///
/// `Z = R_e(1 + jωR_iC_m) / (jωR_eC_m + (1 + jωR_iC_m)(1 + jωR_eC_m))`
pub fn mixture_impedance(c: &CircuitParams, f: f64) -> Result<ComplexValue> {
    c.validate()?;
    require(f.is_finite(), "f", f, "must be finite")?;
    require(f >= 0.0, "f", f, "must be >= 0")?;
    let w = angular_frequency(f);
    let a = Complex64::new(1.0, w * c.r_i * c.c_m);
    let b = Complex64::new(1.0, w * c.r_e * c.c_m);
    let num = a * c.r_e;
    let den = Complex64::new(0.0, w * c.r_e * c.c_m) + a * b;
    let z = num / den;
    // Past ~1e300 the intermediate products overflow; the limit is a short.
    if !z.re.is_finite() || !z.im.is_finite() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(z)
}

/// Membrane capacitive reactance `1/(2πf·C_m)`.
pub fn capacitive_reactance(c_m: f64, f: f64) -> Result<f64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(PhysicsError::Domain {
            operation: "capacitive_reactance",
            reason: "frequency must be > 0 (membrane blocks DC)",
        });
    }
    if !(c_m.is_finite() && c_m > 0.0) {
        return Err(PhysicsError::Domain {
            operation: "capacitive_reactance",
            reason: "membrane capacitance must be > 0",
        });
    }
    Ok(1.0 / (angular_frequency(f) * c_m))
}

/// Cole-Cole dispersion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColeColeParams {
    pub eps_inf: f64,
    pub eps_s: f64,
    /// Characteristic relaxation time, s.
    pub tau: f64,
    /// Broadening exponent; 0 is Debye.
    pub alpha: f64,
    /// Ionic conductivity, S/m.
    pub sigma_i: f64,
}

impl ColeColeParams {
    pub fn debye(eps_inf: f64, eps_s: f64, tau: f64) -> Self {
        ColeColeParams { eps_inf, eps_s, tau, alpha: 0.0, sigma_i: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.eps_inf.is_finite() && self.eps_inf > 0.0,
            "eps_inf",
            self.eps_inf,
            "must be finite and > 0",
        )?;
        require(
            self.eps_s.is_finite() && self.eps_s >= self.eps_inf,
            "eps_s",
            self.eps_s,
            "must be finite and >= eps_inf",
        )?;
        require(self.tau.is_finite() && self.tau > 0.0, "tau", self.tau, "must be finite and > 0")?;
        require(
            (0.0..=1.0).contains(&self.alpha),
            "alpha",
            self.alpha,
            "must lie in [0, 1]",
        )?;
        require(
            self.sigma_i.is_finite() && self.sigma_i >= 0.0,
            "sigma_i",
            self.sigma_i,
            "must be finite and >= 0",
        )
    }
}

/// Relaxation part of the dispersion, `Δε / (1 + (jωτ)^(1−α))`, without the
/// high-frequency limit and without the conduction term.
fn cole_cole_relaxation(p: &ColeColeParams, w: f64) -> ComplexValue {
    let delta = p.eps_s - p.eps_inf;
    if w == 0.0 {
        return Complex64::new(delta, 0.0);
    }
    // principal branch: (jx)^n = x^n · e^{j nπ/2} for x > 0
    let n = 1.0 - p.alpha;
    let x = w * p.tau;
    let pow = Complex64::from_polar(x.powf(n), n * PI / 2.0);
    Complex64::new(delta, 0.0) / (Complex64::new(1.0, 0.0) + pow)
}

/// Complex relative permittivity under the Cole-Cole law with an ionic
/// conduction term:
///
/// `ε*(ω) = ε∞ + (εs − ε∞)/(1 + (jωτ)^(1−α)) + σi/(jωε0)`
pub fn cole_cole_permittivity(p: &ColeColeParams, f: f64) -> Result<ComplexValue> {
    p.validate()?;
    require(f.is_finite() && f >= 0.0, "f", f, "must be finite and >= 0")?;
    if f == 0.0 && p.sigma_i > 0.0 {
        return Err(PhysicsError::Domain {
            operation: "cole_cole_permittivity",
            reason: "conduction term diverges at f = 0 when sigma_i > 0",
        });
    }
    let w = angular_frequency(f);
    let mut eps = Complex64::new(p.eps_inf, 0.0) + cole_cole_relaxation(p, w);
    if p.sigma_i > 0.0 {
        // σ/(jωε0) = −j σ/(ωε0)
        eps.im -= p.sigma_i / (w * EPS0);
    }
    Ok(eps)
}

/// Conduction-loss imaginary permittivity `ε″ = σ/(ωε0)`.
pub fn imaginary_permittivity(sigma: f64, f: f64) -> Result<f64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(PhysicsError::Domain {
            operation: "imaginary_permittivity",
            reason: "frequency must be > 0",
        });
    }
    require(sigma.is_finite() && sigma >= 0.0, "sigma", sigma, "must be finite and >= 0")?;
    Ok(sigma / (angular_frequency(f) * EPS0))
}

/// Loss tangent `tan δ = ε″/εr`.
pub fn loss_tangent(sigma: f64, eps_r: f64, f: f64) -> Result<f64> {
    if !(eps_r.is_finite() && eps_r > 0.0) {
        return Err(PhysicsError::Domain {
            operation: "loss_tangent",
            reason: "relative permittivity must be > 0",
        });
    }
    Ok(imaginary_permittivity(sigma, f)? / eps_r)
}

/// Maxwell charge relaxation time `τ = ε0·εr/σ`, in seconds.
pub fn charge_relaxation_time(sigma: f64, eps_r: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PhysicsError::Domain {
            operation: "charge_relaxation_time",
            reason: "conductivity must be > 0 (insulating sample has no finite relaxation time)",
        });
    }
    require(eps_r.is_finite() && eps_r > 0.0, "eps_r", eps_r, "must be finite and > 0")?;
    Ok(EPS0 * eps_r / sigma)
}
