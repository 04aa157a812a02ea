//! IRS parametrizations and their reflection maps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equivalent circuit of a varactor-loaded element.
///
/// The element impedance is the bottom-layer inductance `L1` in parallel with
/// the series branch `L2 + C + R`, where `C` is the tunable capacitance:
///
/// ```text
/// Z(C) = jωL1 ∥ (jωL2 + 1/(jωC) + R),   Γ(C) = (Z(C) − Z0) / (Z(C) + Z0)
/// ```
///
/// Capacitances are handled in picofarads so that the optimizer works with
/// O(1) numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaractorModel {
    pub c_min_pf: f64,
    pub c_max_pf: f64,
    pub l1_nh: f64,
    pub l2_nh: f64,
    pub resistance: f64,
    pub frequency_hz: f64,
    pub z0: f64,
}

impl Default for VaractorModel {
    fn default() -> Self {
        Self {
            c_min_pf: 0.5,
            c_max_pf: 6.0,
            l1_nh: 1.5,
            l2_nh: 0.1,
            resistance: 0.5,
            frequency_hz: 2.4e9,
            z0: 377.0,
        }
    }
}

impl VaractorModel {
    pub fn impedance(&self, c_pf: f64) -> Complex64 {
        let w = 2.0 * PI * self.frequency_hz;
        let j = Complex64::i();
        let z1 = j * (w * self.l1_nh * 1e-9);
        let branch = j * (w * self.l2_nh * 1e-9) + 1.0 / (j * (w * c_pf * 1e-12)) + self.resistance;
        z1 * branch / (z1 + branch)
    }

    pub fn reflection(&self, c_pf: f64) -> Complex64 {
        let z = self.impedance(c_pf);
        (z - self.z0) / (z + self.z0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c_min_pf > 0.0
            && self.c_max_pf > self.c_min_pf
            && self.l1_nh > 0.0
            && self.l2_nh >= 0.0
            && self.resistance >= 0.0
            && self.frequency_hz > 0.0
            && self.z0 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid varactor model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Parametrization {
    /// One phase per element, unit amplitude.
    IdealPhase,
    /// Phases followed by amplitudes: θ = [φ_1..φ_S, A_1..A_S].
    PhaseAmplitude,
    /// One capacitance (pF) per element.
    Varactor(VaractorModel),
}

/// The feasible box Θ together with the map θ ↦ γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub kind: Parametrization,
    pub num_elements: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamSpace {
    pub fn new(kind: Parametrization, num_elements: usize) -> Self {
        let s = num_elements;
        let (lo, hi) = match kind {
            Parametrization::IdealPhase => (vec![-2.0 * PI; s], vec![2.0 * PI; s]),
            Parametrization::PhaseAmplitude => {
                let mut lo = vec![-2.0 * PI; s];
                let mut hi = vec![2.0 * PI; s];
                lo.extend(std::iter::repeat_n(0.0, s));
                hi.extend(std::iter::repeat_n(1.0, s));
                (lo, hi)
            }
            Parametrization::Varactor(v) => (vec![v.c_min_pf; s], vec![v.c_max_pf; s]),
        };
        Self { kind, num_elements, lo, hi }
    }

    pub fn ideal_phase(num_elements: usize) -> Self {
        Self::new(Parametrization::IdealPhase, num_elements)
    }

    /// Length of θ.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.check(theta).is_ok()
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "IRS parameters",
                expected: self.dim(),
                got: theta.len(),
            });
        }
        for (i, ((&x, &lo), &hi)) in theta.iter().zip(&self.lo).zip(&self.hi).enumerate() {
            if !(lo..=hi).contains(&x) {
                return Err(Error::InfeasibleParams { index: i, value: x, lo, hi });
            }
        }
        Ok(())
    }

    /// All-zero phases, unit amplitudes, mid-range capacitances.
    pub fn default_theta(&self) -> Vec<f64> {
        let s = self.num_elements;
        match self.kind {
            Parametrization::IdealPhase => vec![0.0; s],
            Parametrization::PhaseAmplitude => {
                let mut t = vec![0.0; s];
                t.extend(std::iter::repeat_n(1.0, s));
                t
            }
            Parametrization::Varactor(v) => vec![0.5 * (v.c_min_pf + v.c_max_pf); s],
        }
    }

    /// Uniform draw from Θ.
    pub fn random_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    /// Reflection coefficients of a feasible θ.
    pub fn reflection(&self, theta: &[f64]) -> Result<Vec<Complex64>> {
        self.check(theta)?;
        Ok(self.probe_reflection(theta).0)
    }

    /// Reflection coefficients of an arbitrary θ ∈ ℝ^dim, as needed for
    /// smoothing probes. Phases are accepted as-is; amplitudes and
    /// capacitances are clamped into their physical range and each clamp
    /// is counted.
    pub fn probe_reflection(&self, theta: &[f64]) -> (Vec<Complex64>, usize) {
        let s = self.num_elements;
        let mut clamps = 0;
        let gamma = match self.kind {
            Parametrization::IdealPhase => theta.iter().map(|&p| Complex64::cis(p)).collect(),
            Parametrization::PhaseAmplitude => (0..s)
                .map(|i| {
                    let a = theta[s + i];
                    let ac = a.clamp(0.0, 1.0);
                    clamps += usize::from(ac != a);
                    Complex64::from_polar(ac, theta[i])
                })
                .collect(),
            Parametrization::Varactor(v) => theta
                .iter()
                .map(|&c| {
                    let cc = c.clamp(v.c_min_pf, v.c_max_pf);
                    clamps += usize::from(cc != c);
                    v.reflection(cc)
                })
                .collect(),
        };
        (gamma, clamps)
    }
}

/// The long-term decision θ together with its feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsParams {
    pub theta: Vec<f64>,
    pub space: ParamSpace,
}

impl IrsParams {
    pub fn new(theta: Vec<f64>, space: ParamSpace) -> Result<Self> {
        space.check(&theta)?;
        Ok(Self { theta, space })
    }
}

/// Per-element complex reflection coefficients γ_s.
pub fn irs_reflection(params: &IrsParams) -> Result<Vec<Complex64>> {
    params.space.reflection(&params.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_phase_is_identity() {
        let p = IrsParams::new(vec![0.0; 5], ParamSpace::ideal_phase(5)).unwrap();
        for g in irs_reflection(&p).unwrap() {
            assert_eq!(g, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn infeasible_rejected() {
        let space = ParamSpace::ideal_phase(2);
        let err = IrsParams::new(vec![0.0, 3.0 * PI], space).unwrap_err();
        assert!(matches!(err, Error::InfeasibleParams { index: 1, .. }));
        let space = ParamSpace::ideal_phase(2);
        assert!(IrsParams::new(vec![0.0], space).is_err());
    }

    #[test]
    fn phase_amplitude_layout() {
        let space = ParamSpace::new(Parametrization::PhaseAmplitude, 2);
        assert_eq!(space.dim(), 4);
        let g = space.reflection(&[PI / 2.0, 0.0, 0.5, 0.25]).unwrap();
        assert!((g[0] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((g[1] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let (_, clamps) = space.probe_reflection(&[0.0, 0.0, 1.1, -0.1]);
        assert_eq!(clamps, 2);
    }

    #[test]
    fn varactor_probe_clamps_are_counted() {
        let v = VaractorModel::default();
        let space = ParamSpace::new(Parametrization::Varactor(v), 3);
        let (g, clamps) = space.probe_reflection(&[0.1, 3.0, 7.0]);
        assert_eq!(clamps, 2);
        assert_eq!(g[0], v.reflection(v.c_min_pf));
        assert_eq!(g[2], v.reflection(v.c_max_pf));
    }

    /// 1000-point sweep of the default circuit: passive, phase monotone and
    /// wide. Frozen reference values were tabulated from the same formula
    /// before the build (span ≈ -346.7°, |Γ| ∈ [0.460, 0.9999]).
    #[test]
    fn varactor_sweep_is_monotone_and_passive() {
        let v = VaractorModel::default();
        let n = 1000;
        let mut phases = Vec::with_capacity(n);
        let (mut amin, mut amax) = (f64::MAX, 0.0f64);
        for i in 0..n {
            let c = v.c_min_pf + (v.c_max_pf - v.c_min_pf) * i as f64 / (n - 1) as f64;
            let g = v.reflection(c);
            assert!(g.norm() <= 1.0);
            amin = amin.min(g.norm());
            amax = amax.max(g.norm());
            phases.push(g.arg());
        }
        let mut unwrapped = vec![phases[0]];
        for w in phases.windows(2) {
            let mut d = w[1] - w[0];
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            unwrapped.push(unwrapped.last().unwrap() + d);
        }
        assert!(unwrapped.windows(2).all(|w| w[1] < w[0]));
        let span = (unwrapped[n - 1] - unwrapped[0]).to_degrees();
        assert!((span - (-346.708)).abs() < 0.01, "span {span}");
        assert!((amin - 0.4601).abs() < 1e-3, "min |Γ| {amin}");
        assert!((amax - 0.99989).abs() < 1e-3, "max |Γ| {amax}");
    }

    proptest! {
        #[test]
        fn ideal_phase_unit_modulus(theta in proptest::collection::vec(-2.0 * PI..2.0 * PI, 1..32)) {
            let space = ParamSpace::ideal_phase(theta.len());
            for g in space.reflection(&theta).unwrap() {
                prop_assert!((g.norm() - 1.0).abs() <= 1e-15);
            }
        }
    }
}
