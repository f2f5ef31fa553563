//! Synthetic three-class corpus driven by the Cole-Cole dispersion law.
//!
//! Records come from per-class sources (cell lines). Each source draws one
//! set of Cole-Cole parameters at a stratified quantile of its class ranges
//! and measures inside its own frequency window; each record picks a
//! frequency, evaluates the complex permittivity, and reports
//! `ε′` as the relative permittivity and the total loss as a conductivity,
//! `σ = ε″·ωε0`. Optional log-normal noise perturbs both measured columns.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CellClass, DataError, Dataset, Provenance, Result, SpectralRecord, FREQ_MAX_HZ, FREQ_MIN_HZ};
use crate::physics::{angular_frequency, cole_cole_permittivity, ColeColeParams, EPS0};
use crate::rng;

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub const fn new(min: f64, max: f64) -> Self {
        ValueRange { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.min + (self.max - self.min) * rng.random::<f64>()
    }

    fn sample_log<R: Rng>(&self, rng: &mut R) -> f64 {
        self.at_log(rng.random::<f64>())
    }

    /// Point at quantile `u` of the log-uniform distribution on the range.
    fn at_log(&self, u: f64) -> f64 {
        let (lo, hi) = (self.min.log10(), self.max.log10());
        10f64.powf(lo + (hi - lo) * u)
    }
}

/// Dispersion parameter ranges for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub label: CellClass,
    pub count: usize,
    pub eps_inf: ValueRange,
    pub eps_s: ValueRange,
    /// Sampled log-uniformly, s.
    pub tau_s: ValueRange,
    pub alpha: ValueRange,
    /// S/m
    pub sigma_i: ValueRange,
    /// Band the class median of the generated relative permittivity is
    /// calibrated to fall in.
    pub permittivity_band: ValueRange,
    /// Number of distinct sources (cell lines) per class. Each source draws
    /// one parameter set and contributes records at several frequencies.
    /// Absent: every record draws its own parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<usize>,
    /// How strongly σi follows ε∞ within a source, in [0, 1]: 0 draws them
    /// independently, 1 puts both at the same quantile of their ranges.
    #[serde(default)]
    pub sigma_coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub seed: u64,
    /// Relative standard deviation of the log-normal measurement noise.
    pub noise_level: f64,
    /// Sampled log-uniformly, Hz.
    pub frequency_hz: ValueRange,
    /// Width in decades of the frequency window each source measures in.
    /// Window centres are spread over `frequency_hz`. Absent: every record
    /// draws from the whole range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_frequency_decades: Option<f64>,
    pub classes: Vec<ClassProfile>,
}

impl Default for GeneratorSpec {
    /// Calibrated three-class corpus of 535 records whose class medians of
    /// relative permittivity sit near 7.2, 18.3 and 59.15.
    ///
    /// Class ranges overlap by design: every class spans a factor of 16 in
    /// ε∞ around its centre and the sources of different classes interleave,
    /// so a shallow tree cannot separate them while a neighbour search over
    /// tight source clusters can. σi is tied to ε∞ with the same ratio in
    /// every class, which leaves the charge relaxation time uninformative.
    fn default() -> Self {
        let class = |label, count, centre: f64, band: ValueRange, sources| {
            const SPREAD: f64 = 4.0;
            const DISPERSION: f64 = 1.3;
            const SIGMA_PER_EPS: f64 = 0.042;
            let (lo, hi) = (centre / SPREAD, centre * SPREAD);
            ClassProfile {
                label,
                count,
                eps_inf: ValueRange::new(lo, hi),
                eps_s: ValueRange::new(lo * DISPERSION, hi * DISPERSION),
                tau_s: ValueRange::new(1e-9, 1e-7),
                alpha: ValueRange::new(0.05, 0.25),
                sigma_i: ValueRange::new(lo * SIGMA_PER_EPS, hi * SIGMA_PER_EPS),
                permittivity_band: band,
                sources: Some(sources),
                sigma_coupling: 1.0,
            }
        };
        GeneratorSpec {
            schema_version: crate::SCHEMA_VERSION,
            seed: 2024,
            noise_level: 0.02,
            frequency_hz: ValueRange::new(FREQ_MIN_HZ, 1.5e6),
            source_frequency_decades: Some(0.2),
            classes: vec![
                class(CellClass::Normal, 150, 6.0, ValueRange::new(5.4, 9.0), 12),
                class(CellClass::Benign, 110, 15.0, ValueRange::new(13.7, 22.9), 10),
                class(CellClass::Malignant, 275, 50.0, ValueRange::new(44.4, 73.9), 16),
            ],
        }
    }
}

impl GeneratorSpec {
    pub fn total_count(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DataError::InvalidGenerator(m));
        if self.schema_version > crate::SCHEMA_VERSION {
            return bad(format!("schema_version {} is newer than supported", self.schema_version));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return bad(format!("noise_level {} must be >= 0", self.noise_level));
        }
        let f = &self.frequency_hz;
        if !f.is_valid() || f.min < FREQ_MIN_HZ || f.max > FREQ_MAX_HZ {
            return bad(format!(
                "frequency range [{}, {}] must lie within [{FREQ_MIN_HZ}, {FREQ_MAX_HZ}] Hz",
                f.min, f.max
            ));
        }
        if let Some(w) = self.source_frequency_decades {
            if !(w.is_finite() && w >= 0.0) {
                return bad(format!("source_frequency_decades {w} must be >= 0"));
            }
        }
        if self.classes.is_empty() {
            return bad("no classes configured".into());
        }
        let mut seen = [false; 3];
        for c in &self.classes {
            let name = c.label;
            if std::mem::replace(&mut seen[c.label.index()], true) {
                return bad(format!("class {name} configured twice"));
            }
            if c.count == 0 {
                return bad(format!("class {name}: count must be >= 1"));
            }
            if !(0.0..=1.0).contains(&c.sigma_coupling) {
                return bad(format!("class {name}: sigma_coupling must lie in [0, 1]"));
            }
            if let Some(s) = c.sources {
                if s == 0 || s > c.count {
                    return bad(format!("class {name}: sources must lie in [1, count]"));
                }
            }
            for (field, r) in [
                ("eps_inf", c.eps_inf),
                ("eps_s", c.eps_s),
                ("tau_s", c.tau_s),
                ("alpha", c.alpha),
                ("sigma_i", c.sigma_i),
                ("permittivity_band", c.permittivity_band),
            ] {
                if !r.is_valid() {
                    return bad(format!("class {name}: {field} range [{}, {}] is invalid", r.min, r.max));
                }
            }
            if c.eps_inf.min <= 0.0 {
                return bad(format!("class {name}: eps_inf must be > 0"));
            }
            if c.eps_s.min < c.eps_inf.min || c.eps_s.max < c.eps_inf.max {
                return bad(format!("class {name}: eps_s range must not lie below eps_inf range"));
            }
            if c.tau_s.min <= 0.0 {
                return bad(format!("class {name}: tau_s must be > 0"));
            }
            if c.alpha.min < 0.0 || c.alpha.max > 1.0 {
                return bad(format!("class {name}: alpha must lie in [0, 1]"));
            }
            if c.sigma_i.min < 0.0 {
                return bad(format!("class {name}: sigma_i must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Generates a shuffled synthetic corpus. Deterministic under `g.seed`.
pub fn generate(g: &GeneratorSpec) -> Result<Dataset> {
    g.validate()?;
    let mut rng = rng::seeded(g.seed, rng::stream::GENERATOR);
    let mut records = Vec::with_capacity(g.total_count());
    for class in &g.classes {
        let draw = |rng: &mut rng::Rng, u_eps: f64| {
            let tau = class.tau_s.sample_log(rng);
            let alpha = class.alpha.sample(rng);
            let u_sigma = class.sigma_coupling * u_eps + (1.0 - class.sigma_coupling) * rng.random::<f64>();
            ColeColeParams {
                eps_inf: class.eps_inf.at_log(u_eps),
                eps_s: class.eps_s.at_log(u_eps),
                tau,
                alpha,
                sigma_i: class.sigma_i.at_log(u_sigma),
            }
        };
        // sources take one permittivity quantile from each of n equal strata
        let n_sources = class.sources.unwrap_or(0);
        let mut strata: Vec<usize> = (0..n_sources).collect();
        strata.shuffle(&mut rng);
        let sources: Vec<ColeColeParams> = strata
            .iter()
            .map(|&k| {
                let u = (k as f64 + rng.random::<f64>()) / n_sources as f64;
                draw(&mut rng, u)
            })
            .collect();
        // window centres, also one per stratum but shuffled independently
        let mut f_strata: Vec<usize> = (0..n_sources).collect();
        f_strata.shuffle(&mut rng);
        let centres: Vec<f64> =
            f_strata.iter().map(|&k| (k as f64 + rng.random::<f64>()) / n_sources as f64).collect();
        for i in 0..class.count {
            let (params, source_id, centre) = if sources.is_empty() {
                let u = rng.random::<f64>();
                (draw(&mut rng, u), format!("synthetic-{}-{:04}", class.label.roman(), i), None)
            } else {
                let s = i % sources.len();
                (sources[s], format!("synthetic-{}-s{:02}-{:04}", class.label.roman(), s, i), Some(centres[s]))
            };
            let frequency = match (centre, g.source_frequency_decades) {
                (Some(c), Some(w)) => {
                    let f = g.frequency_hz.at_log(c) * 10f64.powf(w * (rng.random::<f64>() - 0.5));
                    f.clamp(g.frequency_hz.min, g.frequency_hz.max)
                }
                _ => g.frequency_hz.sample_log(&mut rng),
            };
            let eps = cole_cole_permittivity(&params, frequency)?;
            let loss = -eps.im;
            let mut eps_r = eps.re;
            let mut sigma = loss * angular_frequency(frequency) * EPS0;
            // always draw, so the stream does not depend on the noise level
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            if g.noise_level > 0.0 {
                eps_r *= (g.noise_level * z1).exp();
                sigma *= (g.noise_level * z2).exp();
            }
            records.push(SpectralRecord {
                frequency,
                conductivity: sigma,
                rel_permittivity: eps_r,
                reported_tau: Some(params.tau),
                label: class.label,
                source_id,
            });
        }
    }
    records.shuffle(&mut rng);
    let rows = records.len();
    Ok(Dataset {
        records,
        provenance: Provenance { source: format!("synthetic(seed={})", g.seed), sha256: None, rows },
    })
}
