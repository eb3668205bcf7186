//! The fused range-intensity homogeneity measure and the merge predicate.
//!
//! A region is characterized by w = (z, phi) where z is its mean axial
//! distance and phi = arctan(d * sqrt(I)) fuses radial distance and active
//! intensity. Under the inverse-square law I ~ 1/d^2 the product d*sqrt(I)
//! is constant per surface, so phi is a depth-invariant surface signature.

use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Per-region homogeneity descriptor w = (z, phi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityDescriptor {
    /// Mean axial distance, meters.
    pub z: f64,
    /// Fused range-intensity measure, radians, in [0, pi/2).
    pub phi: f64,
}

/// Componentwise merge thresholds and homogeneity-distance weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    /// Axial-distance threshold, meters.
    pub t_z: f64,
    /// Fused-measure threshold, radians.
    pub t_phi: f64,
    /// Weight of the z component, 1/meters.
    pub alpha_z: f64,
    /// Weight of the phi component, 1/radians.
    pub alpha_phi: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        MergeParams {
            t_z: 0.04,
            t_phi: 0.009,
            alpha_z: 8.0 / std::f64::consts::PI,
            alpha_phi: 4.0 / 3.0,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_z <= 0.0 || self.t_phi <= 0.0 || self.alpha_z <= 0.0 || self.alpha_phi <= 0.0 {
            return Err(Error::InvalidInput("merge parameters must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Fused measure phi = arctan(d * sqrt(I)).
pub fn phi(d: f64, intensity: f64) -> Result<f64> {
    if d < 0.0 || intensity < 0.0 {
        return Err(Error::InvalidInput(format!("phi inputs must be non-negative, got d={d}, I={intensity}")));
    }
    Ok(phi_unchecked(d, intensity))
}

#[inline]
pub(crate) fn phi_unchecked(d: f64, intensity: f64) -> f64 {
    (d * intensity.sqrt()).atan()
}

/// Baseline linear measure phi = arctan(d / I) on pre-normalized inputs.
///
/// I = 0 yields the limit pi/2 rather than an error.
pub fn phi_baseline(d_norm: f64, i_norm: f64) -> f64 {
    if i_norm == 0.0 {
        return FRAC_PI_2;
    }
    (d_norm / i_norm).atan()
}

/// Componentwise threshold test: |z1-z2| <= t_z and |phi1-phi2| <= t_phi.
#[inline]
pub fn merge_allowed(w1: &HomogeneityDescriptor, w2: &HomogeneityDescriptor, p: &MergeParams) -> bool {
    (w1.z - w2.z).abs() <= p.t_z && (w1.phi - w2.phi).abs() <= p.t_phi
}

/// Weighted L1 homogeneity distance between two descriptors.
#[inline]
pub fn homogeneity_distance(w1: &HomogeneityDescriptor, w2: &HomogeneityDescriptor, p: &MergeParams) -> f64 {
    p.alpha_z * (w1.z - w2.z).abs() + p.alpha_phi * (w1.phi - w2.phi).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn w(z: f64, phi: f64) -> HomogeneityDescriptor {
        HomogeneityDescriptor { z, phi }
    }

    #[test]
    fn phi_known_values() {
        assert_eq!(phi(0.0, 5.0).unwrap(), 0.0);
        assert!((phi(1.0, 1.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        // d*sqrt(I) = 1 again: inverse-square invariance with I = 1/d^2
        assert!((phi(2.0, 0.25).unwrap() - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn phi_rejects_negative() {
        assert!(phi(-1.0, 1.0).is_err());
        assert!(phi(1.0, -0.1).is_err());
    }

    #[test]
    fn phi_baseline_known_values() {
        assert!((phi_baseline(0.5, 0.5) - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(phi_baseline(0.0, 1.0), 0.0);
        assert_eq!(phi_baseline(1.0, 0.0), FRAC_PI_2);
    }

    #[test]
    fn merge_allowed_table1_examples() {
        let p = MergeParams::default();
        assert!(merge_allowed(&w(1.00, 0.800), &w(1.03, 0.805), &p));
        assert!(!merge_allowed(&w(1.00, 0.800), &w(1.05, 0.805), &p));
        assert!(merge_allowed(&w(1.2, 0.4), &w(1.2, 0.4), &p));
    }

    #[test]
    fn distance_single_term() {
        let p = MergeParams::default();
        assert_eq!(homogeneity_distance(&w(1.0, 0.8), &w(1.0, 0.8), &p), 0.0);
        let d = homogeneity_distance(&w(1.0, 0.8), &w(1.04, 0.8), &p);
        assert!((d - 8.0 / std::f64::consts::PI * 0.04).abs() < 1e-12);
        assert!((d - 0.10186).abs() < 1e-4);
    }

    #[test]
    fn inverse_square_invariance() {
        // I = rho * c / d^2 makes phi independent of d
        for rho in [0.3, 1.0, 2.5] {
            let c = 1.0;
            let reference = phi(0.3, rho * c / (0.3f64 * 0.3)).unwrap();
            let mut d = 0.3;
            while d <= 7.5 {
                let p = phi(d, rho * c / (d * d)).unwrap();
                assert!((p - reference).abs() < 1e-9, "d={d}");
                d += 0.1;
            }
        }
    }

    proptest! {
        #[test]
        fn phi_monotone(d in 0.01f64..5.0, i in 0.01f64..5.0, eps in 0.001f64..0.5) {
            prop_assert!(phi(d + eps, i).unwrap() > phi(d, i).unwrap());
            prop_assert!(phi(d, i + eps).unwrap() > phi(d, i).unwrap());
        }

        #[test]
        fn distance_is_weighted_l1(
            z1 in 0.0f64..5.0, p1 in 0.0f64..1.5,
            z2 in 0.0f64..5.0, p2 in 0.0f64..1.5,
            z3 in 0.0f64..5.0, p3 in 0.0f64..1.5,
        ) {
            let p = MergeParams::default();
            let (a, b, c) = (w(z1, p1), w(z2, p2), w(z3, p3));
            let f = |x: &HomogeneityDescriptor, y: &HomogeneityDescriptor| homogeneity_distance(x, y, &p);
            prop_assert_eq!(f(&a, &b), f(&b, &a));
            prop_assert!(f(&a, &b) >= 0.0);
            prop_assert!(f(&a, &c) <= f(&a, &b) + f(&b, &c) + 1e-12);
            prop_assert!(merge_allowed(&a, &b, &p) == merge_allowed(&b, &a, &p));
            prop_assert!(merge_allowed(&a, &a, &p));
        }

        #[test]
        fn thresholds_monotone(
            z1 in 0.0f64..5.0, p1 in 0.0f64..1.5,
            z2 in 0.0f64..5.0, p2 in 0.0f64..1.5,
            s in 1.0f64..4.0,
        ) {
            let p = MergeParams::default();
            let wide = MergeParams { t_z: p.t_z * s, t_phi: p.t_phi * s, ..p };
            if merge_allowed(&w(z1, p1), &w(z2, p2), &p) {
                prop_assert!(merge_allowed(&w(z1, p1), &w(z2, p2), &wide));
            }
        }
    }
}
