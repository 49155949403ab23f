//! Dryden turbulence spectra and the stacked disturbance covariance they induce.
//!
//! Spectra are one-sided in angular frequency: `C(tau) = int_0^inf Phi(w) cos(w tau) dw`,
//! which makes `C(0)` equal the channel intensity squared for the linear channels.

use crate::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrydenChannel {
    Ug,
    Vg,
    Wg,
    Pg,
    Qg,
    Rg,
}

impl DrydenChannel {
    pub const ALL: [DrydenChannel; 6] =
        [DrydenChannel::Ug, DrydenChannel::Vg, DrydenChannel::Wg, DrydenChannel::Pg, DrydenChannel::Qg, DrydenChannel::Rg];

    pub fn name(self) -> &'static str {
        match self {
            DrydenChannel::Ug => "u",
            DrydenChannel::Vg => "v",
            DrydenChannel::Wg => "w",
            DrydenChannel::Pg => "p",
            DrydenChannel::Qg => "q",
            DrydenChannel::Rg => "r",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param("channel", format!("unknown Dryden channel {s:?}")))
    }

    pub fn is_angular(self) -> bool {
        matches!(self, DrydenChannel::Pg | DrydenChannel::Qg | DrydenChannel::Rg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrydenParams {
    /// Mean wind speed, m/s.
    pub mean_wind: f64,
    /// Altitude, m.
    pub altitude: f64,
    /// Vehicle span, m.
    pub span: f64,
    /// Sample period, s.
    pub dt: f64,
    /// Channel order of the disturbance vector at each step.
    pub channels: Vec<DrydenChannel>,
    /// Multiply angular channels by `dt` (rates entering as attitude increments).
    pub scale_angular: bool,
}

impl DrydenParams {
    pub fn new(mean_wind: f64, altitude: f64, span: f64, dt: f64, channels: Vec<DrydenChannel>) -> Result<Self> {
        for (name, v) in [("V0", mean_wind), ("z", altitude), ("b", span), ("dt", dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if channels.is_empty() {
            return Err(Error::param("channels", "at least one channel is required"));
        }
        Ok(Self { mean_wind, altitude, span, dt, channels, scale_angular: false })
    }

    fn low_altitude_factor(&self) -> f64 {
        0.177 + 0.000823 * self.altitude
    }

    pub fn sigma_w(&self) -> f64 {
        0.1 * self.mean_wind
    }

    pub fn sigma_u(&self) -> f64 {
        self.sigma_w() / self.low_altitude_factor().powf(0.4)
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_u()
    }

    pub fn length_u(&self) -> f64 {
        self.altitude / self.low_altitude_factor().powf(1.2)
    }

    pub fn length_v(&self) -> f64 {
        self.length_u()
    }

    pub fn length_w(&self) -> f64 {
        self.altitude
    }

    /// Closed-form lag-0 variance of a linear channel.
    pub fn linear_variance(&self, channel: DrydenChannel) -> Option<f64> {
        match channel {
            DrydenChannel::Ug => Some(self.sigma_u().powi(2)),
            DrydenChannel::Vg => Some(self.sigma_v().powi(2)),
            DrydenChannel::Wg => Some(self.sigma_w().powi(2)),
            _ => None,
        }
    }
}

/// Uniform trapezoid grid on `[0, omega_max]`.
///
/// The default step of 1e-3 rad/s resolves the spectral peak of the slowest
/// channels; the transverse spectra at `V0 = 1`, `z = 10` are only about
/// 7e-3 rad/s wide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub omega_max: f64,
    pub points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { omega_max: 200.0, points: 200_001 }
    }
}

fn transverse(sigma: f64, len: f64, v0: f64, omega: f64) -> f64 {
    let x = len * omega / v0;
    2.0 * sigma * sigma * len / (PI * v0) * (1.0 + 12.0 * x * x) / (1.0 + 4.0 * x * x).powi(2)
}

pub fn dryden_psd(channel: DrydenChannel, omega: f64, p: &DrydenParams) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::param("omega", format!("frequency must be nonnegative, got {omega}")));
    }
    let v0 = p.mean_wind;
    let b = p.span;
    Ok(match channel {
        DrydenChannel::Ug => {
            let (s, l) = (p.sigma_u(), p.length_u());
            2.0 * s * s * l / (PI * v0) / (1.0 + (l * omega / v0).powi(2))
        }
        DrydenChannel::Vg => transverse(p.sigma_v(), p.length_v(), v0, omega),
        DrydenChannel::Wg => transverse(p.sigma_w(), p.length_w(), v0, omega),
        DrydenChannel::Pg => {
            let (s, l) = (p.sigma_w(), p.length_w());
            s * s / (2.0 * v0 * l) * 0.8 * (2.0 * PI * l / (4.0 * b)).powf(1.0 / 3.0)
                / (1.0 + (4.0 * b * omega / (PI * v0)).powi(2))
        }
        DrydenChannel::Qg => {
            let r = (omega / v0).powi(2) / (1.0 + (4.0 * b * omega / (PI * v0)).powi(2));
            r * transverse(p.sigma_w(), p.length_w(), v0, omega)
        }
        DrydenChannel::Rg => {
            let r = (omega / v0).powi(2) / (1.0 + (3.0 * b * omega / (PI * v0)).powi(2));
            r * transverse(p.sigma_v(), p.length_v(), v0, omega)
        }
    })
}

/// Autocovariance of one channel at each lag, by trapezoid quadrature.
pub fn autocovariance(channel: DrydenChannel, lags: &[f64], p: &DrydenParams, quad: Quadrature) -> Result<Vec<f64>> {
    if !(quad.omega_max > 0.0) || quad.points < 2 {
        return Err(Error::param("omega_max", "quadrature range and point count must be positive"));
    }
    let h = quad.omega_max / (quad.points - 1) as f64;
    let mut out = vec![0.0; lags.len()];
    for i in 0..quad.points {
        let w = i as f64 * h;
        let weight = if i == 0 || i == quad.points - 1 { 0.5 * h } else { h };
        let phi = dryden_psd(channel, w, p)? * weight;
        for (o, &tau) in out.iter_mut().zip(lags) {
            *o += phi * (w * tau).cos();
        }
    }
    Ok(out)
}

/// Stacked covariance over `horizon` steps, projected onto the psd cone.
pub fn dryden_covariance(p: &DrydenParams, horizon: usize, quad: Quadrature) -> Result<DMatrix<f64>> {
    Ok(crate::linalg::psd_project(&toeplitz_covariance(p, horizon, quad)?))
}

/// Unprojected stacked covariance: block-Toeplitz within a channel, no
/// cross-channel correlation. Entry order is step-major.
pub fn toeplitz_covariance(p: &DrydenParams, horizon: usize, quad: Quadrature) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(Error::param("N", "horizon must be at least 1"));
    }
    let d = p.channels.len();
    let lags: Vec<f64> = (0..horizon).map(|k| k as f64 * p.dt).collect();
    let mut sigma = DMatrix::zeros(horizon * d, horizon * d);
    for (c, &ch) in p.channels.iter().enumerate() {
        let mut cov = autocovariance(ch, &lags, p, quad)?;
        if p.scale_angular && ch.is_angular() {
            cov.iter_mut().for_each(|v| *v *= p.dt * p.dt);
        }
        for k in 0..horizon {
            for l in 0..horizon {
                sigma[(k * d + c, l * d + c)] = cov[k.abs_diff(l)];
            }
        }
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DrydenParams {
        DrydenParams::new(1.0, 10.0, 0.34, 0.5, DrydenChannel::ALL.to_vec()).unwrap()
    }

    #[test]
    fn zero_frequency_values() {
        let p = params();
        let (s, l, v0) = (p.sigma_u(), p.length_u(), p.mean_wind);
        assert!((dryden_psd(DrydenChannel::Ug, 0.0, &p).unwrap() - 2.0 * s * s * l / (PI * v0)).abs() < 1e-15);
        let (sw, lw) = (p.sigma_w(), p.length_w());
        let pg = sw * sw / (2.0 * v0 * lw) * 0.8 * (2.0 * PI * lw / (4.0 * p.span)).cbrt();
        assert!((dryden_psd(DrydenChannel::Pg, 0.0, &p).unwrap() - pg).abs() < 1e-15);
        assert_eq!(dryden_psd(DrydenChannel::Qg, 0.0, &p).unwrap(), 0.0);
        assert!(dryden_psd(DrydenChannel::Ug, -1.0, &p).is_err());
    }

    #[test]
    fn channel_names() {
        assert_eq!(DrydenChannel::from_name("q").unwrap(), DrydenChannel::Qg);
        assert!(DrydenChannel::from_name("x").is_err());
    }

    #[test]
    fn bad_params_rejected() {
        assert!(DrydenParams::new(0.0, 10.0, 0.34, 0.5, vec![DrydenChannel::Ug]).is_err());
        assert!(DrydenParams::new(1.0, 10.0, 0.34, 0.5, vec![]).is_err());
    }
}
