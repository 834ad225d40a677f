use serde::{Deserialize, Serialize};

/// Radial bond profiles `φ(ρ)` with derivatives up to third order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    /// `½ k ρ²`; quadratic in the bond vector.
    Harmonic { stiffness: f64 },
    /// `½ k (sqrt(ρ² + c²) - ρ₀)²`, a spring with a regularised core so the
    /// Hessian stays bounded at the origin.
    Spring {
        stiffness: f64,
        rest: f64,
        core: f64,
    },
    /// Morse well of depth `D`, shifted so that value, slope and curvature
    /// vanish at `cutoff`.
    Morse {
        depth: f64,
        alpha: f64,
        rest: f64,
        cutoff: f64,
    },
}

impl RadialProfile {
    /// `[φ, φ', φ'', φ''']` at `ρ ≥ 0`.
    pub fn derivatives(&self, rho: f64) -> [f64; 4] {
        match *self {
            RadialProfile::Harmonic { stiffness: k } => [0.5 * k * rho * rho, k * rho, k, 0.0],
            RadialProfile::Spring {
                stiffness: k,
                rest,
                core,
            } => {
                let s = (rho * rho + core * core).sqrt();
                let s1 = rho / s;
                let s2 = core * core / (s * s * s);
                let s3 = -3.0 * core * core * rho / s.powi(5);
                let d = s - rest;
                [
                    0.5 * k * d * d,
                    k * d * s1,
                    k * (s1 * s1 + d * s2),
                    k * (3.0 * s1 * s2 + d * s3),
                ]
            }
            RadialProfile::Morse {
                depth,
                alpha,
                rest,
                cutoff,
            } => {
                if rho >= cutoff {
                    return [0.0; 4];
                }
                let m = morse(depth, alpha, rest, rho);
                let c = morse(depth, alpha, rest, cutoff);
                let t = rho - cutoff;
                [
                    m[0] - c[0] - c[1] * t - 0.5 * c[2] * t * t,
                    m[1] - c[1] - c[2] * t,
                    m[2] - c[2],
                    m[3],
                ]
            }
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.derivatives(rho)[0]
    }

    pub fn d1(&self, rho: f64) -> f64 {
        self.derivatives(rho)[1]
    }

    pub fn d2(&self, rho: f64) -> f64 {
        self.derivatives(rho)[2]
    }

    pub fn d3(&self, rho: f64) -> f64 {
        self.derivatives(rho)[3]
    }

    /// `φ'(ρ)/ρ`, continuously extended to `ρ = 0` where that is finite.
    pub fn d1_over_rho(&self, rho: f64) -> f64 {
        match *self {
            RadialProfile::Harmonic { stiffness } => stiffness,
            RadialProfile::Spring {
                stiffness,
                rest,
                core,
            } => {
                let s = (rho * rho + core * core).sqrt();
                stiffness * (s - rest) / s
            }
            RadialProfile::Morse { .. } => self.d1(rho) / rho,
        }
    }

    /// Whether `φ'(ρ)/ρ` stays bounded as `ρ → 0`.
    pub fn regular_at_origin(&self) -> bool {
        !matches!(self, RadialProfile::Morse { .. })
    }

    /// Upper bound of `max(|φ''|, |φ'/ρ|)` on `[lo, hi]` (the transverse term
    /// only when `transverse` is set), by dense sampling with a small margin.
    pub fn hessian_bound(&self, lo: f64, hi: f64, transverse: bool) -> f64 {
        sampled_max(lo, hi, |rho| {
            let mut v = self.d2(rho).abs();
            if transverse && (rho > 0.0 || self.regular_at_origin()) {
                v = v.max(self.d1_over_rho(rho).abs());
            }
            v
        })
    }

    /// Upper bound of `|φ'''|` on `[lo, hi]`.
    pub fn third_derivative_bound(&self, lo: f64, hi: f64) -> f64 {
        sampled_max(lo, hi, |rho| self.d3(rho).abs())
    }
}

fn morse(depth: f64, alpha: f64, rest: f64, rho: f64) -> [f64; 4] {
    let e = (-alpha * (rho - rest)).exp();
    [
        depth * (e * e - 2.0 * e),
        2.0 * alpha * depth * (e - e * e),
        2.0 * alpha * alpha * depth * (2.0 * e * e - e),
        2.0 * alpha.powi(3) * depth * (e - 4.0 * e * e),
    ]
}

const SAMPLES: usize = 4000;
const MARGIN: f64 = 1.0 + 1e-3;

fn sampled_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=SAMPLES {
        let rho = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        best = best.max(f(rho));
    }
    best * MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(p: RadialProfile, rho: f64) {
        let h = 1e-5;
        let d = p.derivatives(rho);
        for k in 0..3 {
            let fd = (p.derivatives(rho + h)[k] - p.derivatives(rho - h)[k]) / (2.0 * h);
            assert!(
                (fd - d[k + 1]).abs() < 1e-6 * (1.0 + d[k + 1].abs()),
                "{p:?} order {k}"
            );
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let profiles = [
            RadialProfile::Harmonic { stiffness: 1.3 },
            RadialProfile::Spring {
                stiffness: 2.0,
                rest: 1.0,
                core: 0.5,
            },
            RadialProfile::Morse {
                depth: 1.0,
                alpha: 1.5,
                rest: 1.0,
                cutoff: 2.5,
            },
        ];
        for p in profiles {
            for rho in [0.7, 1.0, 1.4, 2.1] {
                check_derivatives(p, rho);
            }
        }
    }

    #[test]
    fn morse_cutoff_is_smooth() {
        let p = RadialProfile::Morse {
            depth: 1.0,
            alpha: 1.5,
            rest: 1.0,
            cutoff: 2.5,
        };
        let d = p.derivatives(2.5 - 1e-9);
        assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-8 && d[2].abs() < 1e-6);
        assert_eq!(p.derivatives(3.0), [0.0; 4]);
    }

    #[test]
    fn spring_transverse_term_is_finite_at_origin() {
        let p = RadialProfile::Spring {
            stiffness: 1.0,
            rest: 1.0,
            core: 0.5,
        };
        assert!((p.d1_over_rho(0.0) - (1.0 - 2.0)).abs() < 1e-14);
        assert!((p.d1_over_rho(1e-4) - p.d1(1e-4) / 1e-4).abs() < 1e-8);
    }
}
