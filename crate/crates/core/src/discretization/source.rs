//! Sources supported in `B_{R0} ∖ B_{r3}`.

use super::DiscretizationError;
use crate::geometry::{GeometryConfig, Point2};

/// One Fourier component `c cos nθ + s sin nθ` of a ring density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingMode {
    pub n: usize,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    /// Line density `Σ (c_n cos nθ + s_n sin nθ)` on the circle `|x| = radius`.
    Ring { radius: f64, modes: Vec<RingMode> },
    /// `amp·b(|x − c₀|/w) − amp·b(|x − c₁|/w)` with `b(t) = (1 − t²)³`.
    BumpPair { centers: [Point2; 2], width: f64, amplitude: f64 },
    None,
}

impl SourceSpec {
    pub fn ring(radius: f64, modes: &[(usize, f64, f64)]) -> Self {
        SourceSpec::Ring {
            radius,
            modes: modes.iter().map(|&(n, c, s)| RingMode { n, cos_amp: c, sin_amp: s }).collect(),
        }
    }

    /// Check the support and, for `k = 0`, the zero-mean condition.
    pub fn validate(&self, cfg: &GeometryConfig, k: f64) -> Result<(), DiscretizationError> {
        self.validate_within(cfg, k, cfg.r3)
    }

    /// As [`SourceSpec::validate`] with the support required to lie outside
    /// `B_inner` instead of `B_r3`.
    pub fn validate_within(&self, cfg: &GeometryConfig, k: f64, inner: f64) -> Result<(), DiscretizationError> {
        let bad = |m: &str| Err(DiscretizationError::Source(m.to_string()));
        match self {
            SourceSpec::Ring { radius, modes } => {
                if !(*radius > inner && *radius < cfg.source_outer) {
                    return bad(if inner == cfg.r3 { "ring radius must lie in (r3, R0)" } else { "ring radius outside the admitted support" });
                }
                if modes.is_empty() {
                    return bad("ring source without modes");
                }
                for m in modes {
                    if !(m.cos_amp.is_finite() && m.sin_amp.is_finite()) {
                        return bad("non-finite ring amplitude");
                    }
                    if k == 0.0 && m.n == 0 && m.cos_amp != 0.0 {
                        return bad("mode 0 violates the zero-mean condition for k = 0");
                    }
                }
            }
            SourceSpec::BumpPair { centers, width, amplitude } => {
                if !(*width > 0.0 && amplitude.is_finite()) {
                    return bad("bump width must be positive");
                }
                for c in centers {
                    let r = c.norm();
                    if r - width <= inner || r + width >= cfg.source_outer {
                        return bad("bump support must lie in B_R0 minus B_r3");
                    }
                }
                if centers[0].dist(centers[1]) < 2.0 * width {
                    return bad("bumps must not overlap");
                }
            }
            SourceSpec::None => {}
        }
        Ok(())
    }

    /// Ring density at angle `theta`.
    pub fn ring_density(modes: &[RingMode], theta: f64) -> f64 {
        modes
            .iter()
            .map(|m| {
                let a = m.n as f64 * theta;
                m.cos_amp * a.cos() + m.sin_amp * a.sin()
            })
            .sum()
    }

    /// Pointwise value of a bump pair (zero for rings).
    pub fn value(&self, p: Point2) -> f64 {
        match self {
            SourceSpec::BumpPair { centers, width, amplitude } => {
                let b = |c: Point2| {
                    let t2 = p.dist(c).powi(2) / (width * width);
                    if t2 < 1.0 {
                        (1.0 - t2).powi(3)
                    } else {
                        0.0
                    }
                };
                amplitude * (b(centers[0]) - b(centers[1]))
            }
            _ => 0.0,
        }
    }

    /// `L²` norm of the density: area norm for bumps, line norm for rings.
    pub fn norm(&self) -> f64 {
        match self {
            SourceSpec::Ring { radius, modes } => {
                let s: f64 = modes
                    .iter()
                    .map(|m| if m.n == 0 { 2.0 * m.cos_amp * m.cos_amp } else { m.cos_amp.powi(2) + m.sin_amp.powi(2) })
                    .sum();
                (std::f64::consts::PI * radius * s).sqrt()
            }
            SourceSpec::BumpPair { width, amplitude, .. } => {
                let one = std::f64::consts::PI * width * width / 7.0;
                amplitude.abs() * (2.0 * one).sqrt()
            }
            SourceSpec::None => 0.0,
        }
    }

    /// Copy with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            SourceSpec::Ring { radius, modes } => SourceSpec::Ring {
                radius: *radius,
                modes: modes.iter().map(|m| RingMode { n: m.n, cos_amp: m.cos_amp * factor, sin_amp: m.sin_amp * factor }).collect(),
            },
            SourceSpec::BumpPair { centers, width, amplitude } => SourceSpec::BumpPair { centers: *centers, width: *width, amplitude: amplitude * factor },
            SourceSpec::None => SourceSpec::None,
        }
    }

    /// Radius of the circle the mesh must resolve, if any.
    pub fn ring_radius(&self) -> Option<f64> {
        match self {
            SourceSpec::Ring { radius, .. } => Some(*radius),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GeometryConfig {
        GeometryConfig::circular(1.0, 2.0, 5.0, 7.0)
    }

    #[test]
    fn ring_validation() {
        let c = cfg();
        assert!(SourceSpec::ring(4.5, &[(2, 1.0, 0.0)]).validate(&c, 0.0).is_ok());
        assert!(SourceSpec::ring(3.5, &[(2, 1.0, 0.0)]).validate(&c, 0.0).is_err());
        assert!(SourceSpec::ring(4.5, &[(0, 1.0, 0.0)]).validate(&c, 0.0).is_err());
        assert!(SourceSpec::ring(4.5, &[(0, 1.0, 0.0)]).validate(&c, 0.5).is_ok());
    }

    #[test]
    fn bump_pair_has_zero_mean_by_symmetry() {
        let s = SourceSpec::BumpPair { centers: [Point2::new(4.5, 0.0), Point2::new(-4.5, 0.0)], width: 0.4, amplitude: 2.0 };
        assert!(s.validate(&cfg(), 0.0).is_ok());
        assert_eq!(s.value(Point2::new(4.5, 0.0)), 2.0);
        assert_eq!(s.value(Point2::new(-4.5, 0.0)), -2.0);
        assert_eq!(s.value(Point2::new(0.0, 4.5)), 0.0);
        let expect = 2.0 * (2.0 * std::f64::consts::PI * 0.16 / 7.0).sqrt();
        assert!((s.norm() - expect).abs() < 1e-15);
    }

    #[test]
    fn ring_norm_matches_line_integral() {
        let s = SourceSpec::ring(4.5, &[(2, 1.0, 0.5), (3, 0.0, 2.0)]);
        let SourceSpec::Ring { modes, .. } = &s else { unreachable!() };
        let m = 4000;
        let sum: f64 = (0..m)
            .map(|i| SourceSpec::ring_density(modes, std::f64::consts::TAU * i as f64 / m as f64).powi(2))
            .sum::<f64>()
            * std::f64::consts::TAU
            / m as f64
            * 4.5;
        assert!((s.norm() - sum.sqrt()).abs() < 1e-12);
    }
}
