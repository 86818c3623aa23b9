//! Shared vocabulary: intensities, measurement bases, system parameters, and
//! the small numeric helpers (Poisson statistics, binary entropy) every other
//! module leans on.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),
    #[error("decoy intensities must be strictly increasing")]
    DecoysNotIncreasing,
    #[error("signal intensity must exceed every decoy intensity")]
    SignalNotLargest,
    #[error("basis Bloch vector must be unit norm, |v| = {0}")]
    NonUnitBasis(f64),
    #[error("argument {name} = {value} outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("invalid system parameter {name} = {value}")]
    BadSystemParam { name: &'static str, value: f64 },
}

/// Mean photon number of a phase-randomized weak coherent pulse.
///
/// Zero denotes the vacuum decoy state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Intensity(f64);

impl Intensity {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(ModelError::NegativeIntensity(value));
        }
        Ok(Intensity(value))
    }

    pub const VACUUM: Intensity = Intensity(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_vacuum(self) -> bool {
        self.0 == 0.0
    }
}

/// One party's intensity choices: the decoy sequence plus the signal state.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySet {
    decoys: Vec<Intensity>,
    signal: Intensity,
}

impl IntensitySet {
    pub fn new(decoys: Vec<Intensity>, signal: Intensity) -> Result<Self, ModelError> {
        for pair in decoys.windows(2) {
            if pair[1].value() <= pair[0].value() {
                return Err(ModelError::DecoysNotIncreasing);
            }
        }
        if decoys.iter().any(|d| d.value() >= signal.value()) {
            return Err(ModelError::SignalNotLargest);
        }
        Ok(IntensitySet { decoys, signal })
    }

    pub fn decoys(&self) -> &[Intensity] {
        &self.decoys
    }

    pub fn signal(&self) -> Intensity {
        self.signal
    }

    /// Decoys followed by the signal: the full list indexed by the decoy-state
    /// equations.
    pub fn all(&self) -> Vec<Intensity> {
        let mut v = self.decoys.clone();
        v.push(self.signal);
        v
    }

    pub fn len(&self) -> usize {
        self.decoys.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the signal intensity within `all()`.
    pub fn signal_index(&self) -> usize {
        self.decoys.len()
    }

    /// Replace the signal intensity, keeping the decoys.
    pub fn with_signal(&self, signal: Intensity) -> Result<Self, ModelError> {
        IntensitySet::new(self.decoys.clone(), signal)
    }
}

/// A qubit observable as a Bloch 3-vector. All five protocol bases are real
/// (zero y component) but the type carries the full vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisObservable {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BasisObservable {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, ModelError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(ModelError::NonUnitBasis(norm));
        }
        Ok(BasisObservable { x, y, z })
    }

    /// Alice's Z basis (key basis).
    pub const Z: BasisObservable = BasisObservable { x: 0.0, y: 0.0, z: 1.0 };
    /// Alice's X basis.
    pub const X: BasisObservable = BasisObservable { x: 1.0, y: 0.0, z: 0.0 };

    /// Bob's diagonal basis (-Z-X)/sqrt(2).
    pub fn s_basis() -> BasisObservable {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        BasisObservable { x: -r, y: 0.0, z: -r }
    }

    /// Bob's anti-diagonal basis (Z-X)/sqrt(2).
    pub fn t_basis() -> BasisObservable {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        BasisObservable { x: -r, y: 0.0, z: r }
    }

    pub fn dot(self, other: BasisObservable) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// The four CHSH basis combinations plus the auxiliary key (ZZ) and X-check
/// (XX) combinations. Q = Alice Z, R = Alice X; S and T are Bob's diagonal
/// bases; B0 = Z pairs with A1 = Z for key bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Qs,
    Rs,
    Rt,
    Qt,
    Zz,
    Xx,
}

impl BasisTag {
    pub const CHSH: [BasisTag; 4] = [BasisTag::Qs, BasisTag::Rs, BasisTag::Rt, BasisTag::Qt];

    pub fn label(self) -> &'static str {
        match self {
            BasisTag::Qs => "QS",
            BasisTag::Rs => "RS",
            BasisTag::Rt => "RT",
            BasisTag::Qt => "QT",
            BasisTag::Zz => "ZZ",
            BasisTag::Xx => "XX",
        }
    }

    /// Position of a CHSH tag within `CHSH`; panics for ZZ/XX.
    pub fn chsh_index(self) -> usize {
        match self {
            BasisTag::Qs => 0,
            BasisTag::Rs => 1,
            BasisTag::Rt => 2,
            BasisTag::Qt => 3,
            _ => panic!("{} is not a CHSH combination", self.label()),
        }
    }
}

/// A basis combination: the tag plus both parties' observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisCombination {
    pub tag: BasisTag,
    pub alice_basis: BasisObservable,
    pub bob_basis: BasisObservable,
}

impl BasisCombination {
    pub fn from_tag(tag: BasisTag) -> BasisCombination {
        let (alice, bob) = match tag {
            BasisTag::Qs => (BasisObservable::Z, BasisObservable::s_basis()),
            BasisTag::Rs => (BasisObservable::X, BasisObservable::s_basis()),
            BasisTag::Rt => (BasisObservable::X, BasisObservable::t_basis()),
            BasisTag::Qt => (BasisObservable::Z, BasisObservable::t_basis()),
            BasisTag::Zz => (BasisObservable::Z, BasisObservable::Z),
            BasisTag::Xx => (BasisObservable::X, BasisObservable::X),
        };
        BasisCombination { tag, alice_basis: alice, bob_basis: bob }
    }
}

/// Detector, channel, and reconciliation parameters. `distance` is the total
/// Alice-to-Bob length; the untrusted relay sits at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub dark_count: f64,
    pub det_efficiency: f64,
    pub fiber_loss_db_km: f64,
    pub recon_efficiency: f64,
    pub distance_km: f64,
}

impl SystemParams {
    pub fn validated(self) -> Result<Self, ModelError> {
        if !(self.dark_count >= 0.0 && self.dark_count < 1.0) {
            return Err(ModelError::BadSystemParam { name: "dark_count", value: self.dark_count });
        }
        if !(self.det_efficiency > 0.0 && self.det_efficiency <= 1.0) {
            return Err(ModelError::BadSystemParam {
                name: "det_efficiency",
                value: self.det_efficiency,
            });
        }
        if !(self.fiber_loss_db_km >= 0.0) {
            return Err(ModelError::BadSystemParam {
                name: "fiber_loss_db_km",
                value: self.fiber_loss_db_km,
            });
        }
        if !(self.recon_efficiency >= 1.0) {
            return Err(ModelError::BadSystemParam {
                name: "recon_efficiency",
                value: self.recon_efficiency,
            });
        }
        if !(self.distance_km >= 0.0) {
            return Err(ModelError::BadSystemParam { name: "distance_km", value: self.distance_km });
        }
        Ok(self)
    }

    /// Single-arm transmittance: detector efficiency times fiber loss over
    /// half the total distance.
    pub fn arm_transmittance(&self) -> f64 {
        self.det_efficiency * 10f64.powf(-self.fiber_loss_db_km * (self.distance_km / 2.0) / 10.0)
    }

    pub fn at_distance(mut self, distance_km: f64) -> Self {
        self.distance_km = distance_km;
        self
    }
}

/// The CHSH sign pattern a_ij = (-1)^(i XOR j).
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrelatorSigns;

impl CorrelatorSigns {
    pub fn sign(self, i: usize, j: usize) -> f64 {
        debug_assert!(i < 2 && j < 2);
        if i == j {
            1.0
        } else {
            -1.0
        }
    }
}

/// Everything a single simulation point needs: both intensity sets, the system
/// parameters, and the numeric knobs (photon-number cutoff, phase nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub alice: IntensitySet,
    pub bob: IntensitySet,
    pub params: SystemParams,
    pub cutoff: usize,
    pub phase_nodes: usize,
}

impl ProtocolConfig {
    pub fn with_signal(&self, signal: Intensity) -> Result<Self, ModelError> {
        Ok(ProtocolConfig {
            alice: self.alice.with_signal(signal)?,
            bob: self.bob.with_signal(signal)?,
            params: self.params,
            cutoff: self.cutoff,
            phase_nodes: self.phase_nodes,
        })
    }

    pub fn at_distance(&self, distance_km: f64) -> Self {
        let mut c = self.clone();
        c.params.distance_km = distance_km;
        c
    }
}

const LOG_DOMAIN_THRESHOLD: u32 = 20;

/// P_n(mu) = e^(-mu) mu^n / n!. Uses the log domain for n > 20 so large n
/// cannot overflow the factorial.
pub fn poisson_pmf(intensity: Intensity, n: u32) -> f64 {
    let mu = intensity.value();
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n <= LOG_DOMAIN_THRESHOLD {
        let mut p = (-mu).exp();
        for k in 1..=n {
            p *= mu / k as f64;
        }
        p
    } else {
        let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        (-mu + n as f64 * mu.ln() - ln_fact).exp()
    }
}

/// Joint probability that Alice emits m and Bob emits n photons.
pub fn poisson_joint(mu: Intensity, nu: Intensity, m: u32, n: u32) -> f64 {
    poisson_pmf(mu, m) * poisson_pmf(nu, n)
}

/// Probability mass of photon-number pairs with m > M or n > M: the part of
/// the decoy-state equations dropped by truncation at cutoff M.
pub fn poisson_tail(mu: Intensity, nu: Intensity, cutoff: u32) -> f64 {
    // Kahan summation keeps the captured mass accurate enough that the tiny
    // complement survives the final subtraction.
    let cdf = |intensity: Intensity| -> f64 {
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for n in 0..=cutoff {
            let y = poisson_pmf(intensity, n) - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        sum.min(1.0)
    };
    (1.0 - cdf(mu) * cdf(nu)).max(0.0)
}

/// Binary Shannon entropy in bits, with the continuous extension h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(ModelError::OutOfUnitRange { name: "binary_entropy argument", value: x });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn poisson_vacuum() {
        assert_eq!(poisson_pmf(Intensity::VACUUM, 0), 1.0);
        assert_eq!(poisson_pmf(Intensity::VACUUM, 3), 0.0);
    }

    #[test]
    fn poisson_direct_value() {
        let p = poisson_pmf(Intensity::new(0.5).unwrap(), 1);
        assert_abs_diff_eq!(p, 0.5 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.30327, epsilon = 1e-5);
    }

    #[test]
    fn poisson_log_domain_matches_direct() {
        // n = 20 uses the direct branch, n = 21 the log branch; both must
        // agree with the recurrence P_{n+1} = P_n * mu / (n+1).
        let mu = Intensity::new(0.8).unwrap();
        let p20 = poisson_pmf(mu, 20);
        let p21 = poisson_pmf(mu, 21);
        assert_abs_diff_eq!(p21, p20 * 0.8 / 21.0, epsilon = p21 * 1e-12);
    }

    #[test]
    fn poisson_tail_examples() {
        let z = Intensity::VACUUM;
        assert_eq!(poisson_tail(z, z, 0), 0.0);
        let small = Intensity::new(0.1).unwrap();
        assert!(poisson_tail(small, small, 7) < 1e-10);
        let half = Intensity::new(0.5).unwrap();
        let expected = 1.0 - ((-0.5f64).exp() * 1.5).powi(2);
        assert_abs_diff_eq!(poisson_tail(half, half, 1), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(poisson_tail(half, half, 1), 0.17227, epsilon = 1e-5);
    }

    #[test]
    fn binary_entropy_anchors() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), 0.499916, epsilon = 1e-6);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn correlator_signs_pattern() {
        let a = CorrelatorSigns;
        assert_eq!(a.sign(0, 0), 1.0);
        assert_eq!(a.sign(0, 1), -1.0);
        assert_eq!(a.sign(1, 0), -1.0);
        assert_eq!(a.sign(1, 1), 1.0);
        for i in 0..2usize {
            for j in 0..2usize {
                assert_eq!(a.sign(i, j), (-1f64).powi((i ^ j) as i32));
            }
        }
    }

    #[test]
    fn intensity_set_invariants() {
        let mk = |v: f64| Intensity::new(v).unwrap();
        let ok = IntensitySet::new(vec![mk(0.0), mk(0.01)], mk(0.3)).unwrap();
        assert_eq!(ok.len(), 3);
        assert_eq!(ok.signal_index(), 2);
        assert!(IntensitySet::new(vec![mk(0.02), mk(0.01)], mk(0.3)).is_err());
        assert!(IntensitySet::new(vec![mk(0.0), mk(0.5)], mk(0.3)).is_err());
        assert!(Intensity::new(-0.1).is_err());
    }

    #[test]
    fn basis_vectors_unit_and_real() {
        for tag in [BasisTag::Qs, BasisTag::Rs, BasisTag::Rt, BasisTag::Qt, BasisTag::Zz] {
            let c = BasisCombination::from_tag(tag);
            for b in [c.alice_basis, c.bob_basis] {
                let norm = (b.x * b.x + b.y * b.y + b.z * b.z).sqrt();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
                assert_eq!(b.y, 0.0);
            }
        }
    }

    #[test]
    fn transmittance_model() {
        let params = SystemParams {
            dark_count: 6e-6,
            det_efficiency: 0.145,
            fiber_loss_db_km: 0.2,
            recon_efficiency: 1.16,
            distance_km: 100.0,
        }
        .validated()
        .unwrap();
        // 50 km per arm at 0.2 dB/km = 10 dB = factor 0.1.
        assert_abs_diff_eq!(params.arm_transmittance(), 0.0145, epsilon = 1e-12);
        assert!(params.at_distance(-1.0).validated().is_err());
        let bad = SystemParams { recon_efficiency: 0.9, ..params };
        assert!(bad.validated().is_err());
    }

    proptest! {
        #[test]
        fn poisson_partial_sum_reaches_one(mu in 0.0..1.0f64) {
            let intensity = Intensity::new(mu).unwrap();
            let n_max = (mu + 10.0 * mu.sqrt() + 20.0).ceil() as u32;
            let total: f64 = (0..=n_max).map(|n| poisson_pmf(intensity, n)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn binary_entropy_symmetric(x in 0.0..=1.0f64) {
            let h = binary_entropy(x).unwrap();
            let h2 = binary_entropy(1.0 - x).unwrap();
            prop_assert!((h - h2).abs() < 1e-12);
        }

        #[test]
        fn poisson_tail_monotone(mu in 0.01..0.8f64, nu in 0.01..0.8f64, m in 1u32..6) {
            let a = Intensity::new(mu).unwrap();
            let b = Intensity::new(nu).unwrap();
            prop_assert!(poisson_tail(a, b, m + 1) <= poisson_tail(a, b, m) + 1e-15);
            let bigger = Intensity::new(mu + 0.1).unwrap();
            prop_assert!(poisson_tail(bigger, b, m) >= poisson_tail(a, b, m) - 1e-15);
        }
    }
}
