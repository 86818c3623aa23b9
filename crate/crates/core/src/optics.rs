//! Optical model of the untrusted relay: polarization-encoded pulses from both
//! parties interfere on a balanced beam splitter, each output port passes a
//! polarizing beam splitter, and four threshold detectors watch the modes
//! (D1H, D1V, D2H, D2V).
//!
//! Two routes compute the same physics. `coherent_setting_statistics` is the
//! production path: phase-averaged coherent states, which is what weak
//! coherent pulses actually produce. `fock_setting_statistics` is the exact
//! photon-number oracle used to validate it and to supply ground-truth
//! single-photon yields and correlators.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{
    poisson_pmf, BasisCombination, BasisObservable, BasisTag, CorrelatorSigns, Intensity,
    ProtocolConfig, SystemParams,
};

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("basis Bloch vector must be unit norm with zero y component")]
    BadBasis,
    #[error("quadrature_points must be even and >= 16, got {0}")]
    BadQuadrature(usize),
    #[error("photon-number cutoff must be >= 1")]
    BadCutoff,
}

/// Two-mode field amplitude of a polarization qubit, in units of the square
/// root of mean photon number for a unit preparation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationAmplitude {
    pub h: Complex64,
    pub v: Complex64,
}

impl PolarizationAmplitude {
    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }
}

/// Dark counts plus per-arm transmittance. Detector efficiency is folded into
/// the transmittance: uniform loss commutes with the linear network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub dark_count: f64,
    pub transmittance_alice: f64,
    pub transmittance_bob: f64,
}

impl DetectionModel {
    pub fn from_params(params: &SystemParams) -> DetectionModel {
        let t = params.arm_transmittance();
        DetectionModel {
            dark_count: params.dark_count,
            transmittance_alice: t,
            transmittance_bob: t,
        }
    }

    /// Lossless detection with no dark counts; the singlet-limit reference.
    pub fn ideal() -> DetectionModel {
        DetectionModel { dark_count: 0.0, transmittance_alice: 1.0, transmittance_bob: 1.0 }
    }
}

/// Click-pattern probabilities for one preparation setting.
///
/// `psi_minus_prob` covers the two cross-port cross-polarization patterns
/// (D1H&D2V or D1V&D2H, others silent); `psi_plus_prob` the two same-port
/// patterns (D1H&D1V or D2H&D2V). Only the psi-minus projection feeds the key
/// rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingStatistics {
    pub psi_minus_prob: f64,
    pub psi_plus_prob: f64,
}

/// Eigenvector of the qubit observable x*X + z*Z for the given bit
/// (bit 0 -> eigenvalue +1), mapped as |0> -> H, |1> -> V. Global phase is
/// fixed by making the first nonzero component real and positive.
pub fn eigenstate_amplitudes(
    basis: BasisObservable,
    bit: usize,
) -> Result<PolarizationAmplitude, OpticsError> {
    let norm = (basis.x * basis.x + basis.y * basis.y + basis.z * basis.z).sqrt();
    if (norm - 1.0).abs() > 1e-12 || basis.y != 0.0 {
        return Err(OpticsError::BadBasis);
    }
    // Eigenvector of [[z, x], [x, -z]] for eigenvalue +1; bit 1 negates the
    // observable. Branch on the sign of z for numerical stability.
    let (x, z) = if bit == 0 { (basis.x, basis.z) } else { (-basis.x, -basis.z) };
    let (mut h, mut v) = if z >= 0.0 { (1.0 + z, x) } else { (x, 1.0 - z) };
    let len = (h * h + v * v).sqrt();
    h /= len;
    v /= len;
    if h < 0.0 || (h == 0.0 && v < 0.0) {
        h = -h;
        v = -v;
    }
    Ok(PolarizationAmplitude { h: Complex64::new(h, 0.0), v: Complex64::new(v, 0.0) })
}

fn click_prob(mean_photons: f64, dark_count: f64) -> f64 {
    1.0 - (1.0 - dark_count) * (-mean_photons).exp()
}

/// Probability of the psi-minus (and psi-plus) click patterns for coherent
/// inputs, averaged over the uniform relative phase with a periodic trapezoid
/// rule of `quadrature_points` nodes.
pub fn coherent_setting_statistics(
    amps_a: PolarizationAmplitude,
    amps_b: PolarizationAmplitude,
    mu: Intensity,
    nu: Intensity,
    det: &DetectionModel,
    quadrature_points: usize,
) -> Result<SettingStatistics, OpticsError> {
    if quadrature_points < 16 || quadrature_points % 2 != 0 {
        return Err(OpticsError::BadQuadrature(quadrature_points));
    }
    let sa = (mu.value() * det.transmittance_alice).sqrt();
    let sb = (nu.value() * det.transmittance_bob).sqrt();
    let alpha_h = amps_a.h * sa;
    let alpha_v = amps_a.v * sa;
    let pd = det.dark_count;

    let mut minus = 0.0;
    let mut plus = 0.0;
    for k in 0..quadrature_points {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / quadrature_points as f64;
        let phase = Complex64::from_polar(sb, phi);
        let beta_h = amps_b.h * phase;
        let beta_v = amps_b.v * phase;
        // Balanced beam splitter per polarization: out1 = (A+B)/sqrt2,
        // out2 = (A-B)/sqrt2.
        let l1h = (alpha_h + beta_h).norm_sqr() / 2.0;
        let l1v = (alpha_v + beta_v).norm_sqr() / 2.0;
        let l2h = (alpha_h - beta_h).norm_sqr() / 2.0;
        let l2v = (alpha_v - beta_v).norm_sqr() / 2.0;
        let (c1h, c1v, c2h, c2v) = (
            click_prob(l1h, pd),
            click_prob(l1v, pd),
            click_prob(l2h, pd),
            click_prob(l2v, pd),
        );
        minus += c1h * (1.0 - c1v) * (1.0 - c2h) * c2v + (1.0 - c1h) * c1v * c2h * (1.0 - c2v);
        plus += c1h * c1v * (1.0 - c2h) * (1.0 - c2v) + (1.0 - c1h) * (1.0 - c1v) * c2h * c2v;
    }
    let n = quadrature_points as f64;
    Ok(SettingStatistics { psi_minus_prob: minus / n, psi_plus_prob: plus / n })
}

fn binomial_weight(total: u32, kept: u32, p: f64) -> f64 {
    let mut w = 1.0;
    for i in 0..kept {
        w *= (total - i) as f64 / (i + 1) as f64;
    }
    w * p.powi(kept as i32) * (1.0 - p).powi((total - kept) as i32)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Occupation-number distribution over the four detector modes
/// (D1H, D1V, D2H, D2V) for lossless propagation of m photons in Alice's mode
/// and n in Bob's. Probabilities sum to one.
pub fn fock_occupation_distribution(
    m: u32,
    n: u32,
    amps_a: PolarizationAmplitude,
    amps_b: PolarizationAmplitude,
) -> Vec<([u32; 4], f64)> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // A_H -> (d1H + d2H)/sqrt2, B_H -> (d1H - d2H)/sqrt2, same for V.
    let coef_a = [amps_a.h * r, amps_a.v * r, amps_a.h * r, amps_a.v * r];
    let coef_b = [amps_b.h * r, amps_b.v * r, -amps_b.h * r, -amps_b.v * r];

    let monomials = |deg: u32, coef: &[Complex64; 4]| -> Vec<([u32; 4], Complex64)> {
        let mut out = Vec::new();
        for k1 in 0..=deg {
            for k2 in 0..=(deg - k1) {
                for k3 in 0..=(deg - k1 - k2) {
                    let k4 = deg - k1 - k2 - k3;
                    let ks = [k1, k2, k3, k4];
                    let multinom = factorial(deg)
                        / (factorial(k1) * factorial(k2) * factorial(k3) * factorial(k4));
                    let mut c = Complex64::new(multinom, 0.0);
                    for (idx, &k) in ks.iter().enumerate() {
                        c *= coef[idx].powu(k);
                    }
                    out.push((ks, c));
                }
            }
        }
        out
    };

    let terms_a = monomials(m, &coef_a);
    let terms_b = monomials(n, &coef_b);
    let mut poly: BTreeMap<[u32; 4], Complex64> = BTreeMap::new();
    for (ka, ca) in &terms_a {
        for (kb, cb) in &terms_b {
            let key = [ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]];
            *poly.entry(key).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
        }
    }
    let norm = factorial(m) * factorial(n);
    poly.into_iter()
        .map(|(k, gamma)| {
            let occ_fact: f64 = k.iter().map(|&ki| factorial(ki)).product();
            (k, gamma.norm_sqr() * occ_fact / norm)
        })
        .collect()
}

/// Exact psi-minus / psi-plus pattern probabilities for Fock inputs: binomial
/// thinning for the lossy arms, creation-operator expansion through the
/// network, then threshold detection (an occupied mode clicks with certainty,
/// an empty one with the dark-count probability).
pub fn fock_setting_statistics(
    m: u32,
    n: u32,
    amps_a: PolarizationAmplitude,
    amps_b: PolarizationAmplitude,
    det: &DetectionModel,
) -> SettingStatistics {
    let pd = det.dark_count;
    let mut minus = 0.0;
    let mut plus = 0.0;
    for ma in 0..=m {
        let wa = binomial_weight(m, ma, det.transmittance_alice);
        if wa == 0.0 {
            continue;
        }
        for nb in 0..=n {
            let wb = binomial_weight(n, nb, det.transmittance_bob);
            if wb == 0.0 {
                continue;
            }
            let dist = fock_occupation_distribution(ma, nb, amps_a, amps_b);
            for (occ, p) in dist {
                let click = |k: u32| if k >= 1 { 1.0 } else { pd };
                let silent = |k: u32| if k >= 1 { 0.0 } else { 1.0 - pd };
                let [k1h, k1v, k2h, k2v] = occ;
                let pm = click(k1h) * silent(k1v) * silent(k2h) * click(k2v)
                    + silent(k1h) * click(k1v) * click(k2h) * silent(k2v);
                let pp = click(k1h) * click(k1v) * silent(k2h) * silent(k2v)
                    + silent(k1h) * silent(k1v) * click(k2h) * click(k2v);
                minus += wa * wb * p * pm;
                plus += wa * wb * p * pp;
            }
        }
    }
    SettingStatistics { psi_minus_prob: minus, psi_plus_prob: plus }
}

/// All six basis combinations tracked by the yield table and observed
/// statistics, in storage order.
pub const ALL_TAGS: [BasisTag; 6] =
    [BasisTag::Qs, BasisTag::Rs, BasisTag::Rt, BasisTag::Qt, BasisTag::Zz, BasisTag::Xx];

fn tag_slot(tag: BasisTag) -> usize {
    match tag {
        BasisTag::Qs => 0,
        BasisTag::Rs => 1,
        BasisTag::Rt => 2,
        BasisTag::Qt => 3,
        BasisTag::Zz => 4,
        BasisTag::Xx => 5,
    }
}

/// Ground-truth per-photon-number yields Y_mn^{ij,w} and correlators C_mn^w
/// for all photon numbers up to the cutoff.
#[derive(Debug, Clone)]
pub struct FockYieldTable {
    pub cutoff: usize,
    yields: Vec<f64>,
    correlators: Vec<(f64, bool)>,
}

impl FockYieldTable {
    fn y_index(&self, slot: usize, m: usize, n: usize, i: usize, j: usize) -> usize {
        (((slot * (self.cutoff + 1) + m) * (self.cutoff + 1) + n) * 2 + i) * 2 + j
    }

    pub fn y(&self, tag: BasisTag, m: usize, n: usize, i: usize, j: usize) -> f64 {
        self.yields[self.y_index(tag_slot(tag), m, n, i, j)]
    }

    /// C_mn^w and whether the denominator was nonzero; an undefined
    /// correlator is stored as 0.
    pub fn correlator(&self, tag: BasisTag, m: usize, n: usize) -> (f64, bool) {
        self.correlators[(tag_slot(tag) * (self.cutoff + 1) + m) * (self.cutoff + 1) + n]
    }

    /// Y_mn^{ZZ} = 1/4 sum_ij Y_mn^{ij,ZZ}.
    pub fn y_zz(&self, m: usize, n: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.y(BasisTag::Zz, m, n, i, j);
            }
        }
        s / 4.0
    }

    pub fn y11_zz(&self) -> f64 {
        self.y_zz(1, 1)
    }

    /// Single-photon CHSH value g11 = C^QS + C^RS + C^RT - C^QT at (1,1).
    pub fn g11(&self) -> f64 {
        self.correlator(BasisTag::Qs, 1, 1).0 + self.correlator(BasisTag::Rs, 1, 1).0
            + self.correlator(BasisTag::Rt, 1, 1).0
            - self.correlator(BasisTag::Qt, 1, 1).0
    }

    /// Bit-error rate among psi-minus coincidences at photon numbers (m,n):
    /// the singlet anticorrelates in every basis, so equal raw bits are
    /// errors. Degenerate statistics report 0.5.
    pub fn error_rate(&self, tag: BasisTag, m: usize, n: usize) -> f64 {
        let mut same = 0.0;
        let mut total = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let y = self.y(tag, m, n, i, j);
                total += y;
                if i == j {
                    same += y;
                }
            }
        }
        if total > 0.0 {
            same / total
        } else {
            0.5
        }
    }

    /// Single-photon X-basis error, the quantity bounded by the MDI baseline.
    pub fn e11_xx(&self) -> f64 {
        self.error_rate(BasisTag::Xx, 1, 1)
    }
}

/// Evaluate the Fock oracle for every (m, n, i, j, w) cell up to the cutoff.
pub fn build_fock_yield_table(
    config: &ProtocolConfig,
    cutoff: usize,
) -> Result<FockYieldTable, OpticsError> {
    if cutoff < 1 {
        return Err(OpticsError::BadCutoff);
    }
    let det = DetectionModel::from_params(&config.params);
    let signs = CorrelatorSigns;
    let dim = cutoff + 1;
    let mut table = FockYieldTable {
        cutoff,
        yields: vec![0.0; 6 * dim * dim * 4],
        correlators: vec![(0.0, false); 6 * dim * dim],
    };
    for (slot, &tag) in ALL_TAGS.iter().enumerate() {
        let combo = BasisCombination::from_tag(tag);
        let amps: Vec<(PolarizationAmplitude, PolarizationAmplitude)> = (0..2)
            .flat_map(|i| {
                (0..2).map(move |j| (i, j)).collect::<Vec<_>>()
            })
            .map(|(i, j)| {
                (
                    eigenstate_amplitudes(combo.alice_basis, i).expect("unit basis"),
                    eigenstate_amplitudes(combo.bob_basis, j).expect("unit basis"),
                )
            })
            .collect();
        for m in 0..dim {
            for n in 0..dim {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..2usize {
                    for j in 0..2usize {
                        let (aa, ab) = amps[i * 2 + j];
                        let stats = fock_setting_statistics(m as u32, n as u32, aa, ab, &det);
                        let idx = table.y_index(slot, m, n, i, j);
                        table.yields[idx] = stats.psi_minus_prob;
                        num += signs.sign(i, j) * stats.psi_minus_prob;
                        den += stats.psi_minus_prob;
                    }
                }
                let c = if den > 0.0 { (num / den, true) } else { (0.0, false) };
                table.correlators[(slot * dim + m) * dim + n] = c;
            }
        }
    }
    Ok(table)
}

/// Everything Alice and Bob actually observe: per intensity pair and basis
/// combination, the psi-minus yield of each bit pair, plus the derived gains,
/// error rates, correlator sums, and yield sums that feed the decoy-state
/// constraint systems.
#[derive(Debug, Clone)]
pub struct ObservedStatistics {
    pub alice_intensities: Vec<Intensity>,
    pub bob_intensities: Vec<Intensity>,
    /// [w slot][k][l][i][j] psi-minus probability.
    bit_yields: Vec<f64>,
}

impl ObservedStatistics {
    pub fn num_alice(&self) -> usize {
        self.alice_intensities.len()
    }

    pub fn num_bob(&self) -> usize {
        self.bob_intensities.len()
    }

    fn index(&self, tag: BasisTag, k: usize, l: usize, i: usize, j: usize) -> usize {
        let nb = self.bob_intensities.len();
        (((tag_slot(tag) * self.alice_intensities.len() + k) * nb + l) * 2 + i) * 2 + j
    }

    /// Y_{mu_k nu_l}^{ij,w}: psi-minus probability for eigenstates (i, j).
    pub fn bit_yield(&self, tag: BasisTag, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.bit_yields[self.index(tag, k, l, i, j)]
    }

    /// Q^{ZZ} (or Q^{XX}): the gain, 1/4 of the bit-yield sum.
    pub fn gain(&self, tag: BasisTag, k: usize, l: usize) -> f64 {
        self.yield_sum(tag, k, l) / 4.0
    }

    /// Error rate after the S2 bit flip: fraction of coincidences with equal
    /// raw bits. Returns (rate, degenerate) where degenerate marks zero total
    /// coincidence probability (rate then defaults to 0.5).
    pub fn error_rate(&self, tag: BasisTag, k: usize, l: usize) -> (f64, bool) {
        let total = self.yield_sum(tag, k, l);
        if total <= 0.0 {
            return (0.5, true);
        }
        let same =
            self.bit_yield(tag, k, l, 0, 0) + self.bit_yield(tag, k, l, 1, 1);
        (same / total, false)
    }

    /// sum_ij a_ij Y^{ij,w}: the correlator sum on the left of Eq-style
    /// constraints.
    pub fn corr_sum(&self, tag: BasisTag, k: usize, l: usize) -> f64 {
        let signs = CorrelatorSigns;
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += signs.sign(i, j) * self.bit_yield(tag, k, l, i, j);
            }
        }
        s
    }

    /// sum_ij Y^{ij,w}.
    pub fn yield_sum(&self, tag: BasisTag, k: usize, l: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.bit_yield(tag, k, l, i, j);
            }
        }
        s
    }
}

/// Run the coherent-state model for every (intensity pair, basis combination,
/// bit pair) setting of the protocol.
pub fn observed_statistics(config: &ProtocolConfig) -> Result<ObservedStatistics, OpticsError> {
    let det = DetectionModel::from_params(&config.params);
    let alice = config.alice.all();
    let bob = config.bob.all();
    let (na, nb) = (alice.len(), bob.len());
    let mut bit_yields = vec![0.0; 6 * na * nb * 4];
    for (slot, &tag) in ALL_TAGS.iter().enumerate() {
        let combo = BasisCombination::from_tag(tag);
        for i in 0..2usize {
            for j in 0..2usize {
                let aa = eigenstate_amplitudes(combo.alice_basis, i)?;
                let ab = eigenstate_amplitudes(combo.bob_basis, j)?;
                for (k, &mu) in alice.iter().enumerate() {
                    for (l, &nu) in bob.iter().enumerate() {
                        let stats = coherent_setting_statistics(
                            aa,
                            ab,
                            mu,
                            nu,
                            &det,
                            config.phase_nodes,
                        )?;
                        bit_yields[(((slot * na + k) * nb + l) * 2 + i) * 2 + j] =
                            stats.psi_minus_prob;
                    }
                }
            }
        }
    }
    Ok(ObservedStatistics {
        alice_intensities: alice,
        bob_intensities: bob,
        bit_yields,
    })
}

/// Poisson mixture of the Fock oracle: the independent route the coherent
/// model must match up to the truncation tail.
pub fn poisson_mixture_psi_minus(
    amps_a: PolarizationAmplitude,
    amps_b: PolarizationAmplitude,
    mu: Intensity,
    nu: Intensity,
    det: &DetectionModel,
    cutoff: u32,
) -> f64 {
    let mut total = 0.0;
    for m in 0..=cutoff {
        let pm = poisson_pmf(mu, m);
        if pm == 0.0 {
            continue;
        }
        for n in 0..=cutoff {
            let pn = poisson_pmf(nu, n);
            if pn == 0.0 {
                continue;
            }
            total += pm * pn * fock_setting_statistics(m, n, amps_a, amps_b, det).psi_minus_prob;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{poisson_tail, IntensitySet, SystemParams};
    use approx::assert_abs_diff_eq;

    fn reference_params(distance_km: f64) -> SystemParams {
        SystemParams {
            dark_count: 6e-6,
            det_efficiency: 0.145,
            fiber_loss_db_km: 0.2,
            recon_efficiency: 1.16,
            distance_km,
        }
    }

    fn reference_config(distance_km: f64) -> ProtocolConfig {
        let mk = |v: f64| Intensity::new(v).unwrap();
        let decoys = vec![mk(0.0), mk(0.01), mk(0.02), mk(0.03)];
        let set = IntensitySet::new(decoys, mk(0.3)).unwrap();
        ProtocolConfig {
            alice: set.clone(),
            bob: set,
            params: reference_params(distance_km),
            cutoff: 7,
            phase_nodes: 64,
        }
    }

    #[test]
    fn eigenstates_of_z_and_x() {
        let z0 = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        assert_abs_diff_eq!(z0.h.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z0.v.re, 0.0, epsilon = 1e-15);
        let z1 = eigenstate_amplitudes(BasisObservable::Z, 1).unwrap();
        assert_abs_diff_eq!(z1.v.re, 1.0, epsilon = 1e-15);
        let x0 = eigenstate_amplitudes(BasisObservable::X, 0).unwrap();
        assert_abs_diff_eq!(x0.h.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(x0.v.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn eigenstates_satisfy_eigen_equation() {
        // Independent check: apply [[z, x], [x, -z]] and compare with
        // eigenvalue times the vector, for every protocol basis and bit.
        for tag in ALL_TAGS {
            let combo = BasisCombination::from_tag(tag);
            for basis in [combo.alice_basis, combo.bob_basis] {
                for bit in 0..2usize {
                    let amp = eigenstate_amplitudes(basis, bit).unwrap();
                    let eig = if bit == 0 { 1.0 } else { -1.0 };
                    let oh = basis.z * amp.h + basis.x * amp.v;
                    let ov = basis.x * amp.h - basis.z * amp.v;
                    assert_abs_diff_eq!((oh - eig * amp.h).norm(), 0.0, epsilon = 1e-12);
                    assert_abs_diff_eq!((ov - eig * amp.v).norm(), 0.0, epsilon = 1e-12);
                    assert_abs_diff_eq!(amp.norm_sqr(), 1.0, epsilon = 1e-12);
                }
            }
        }
        assert!(eigenstate_amplitudes(
            BasisObservable { x: 0.5, y: 0.0, z: 0.5 },
            0
        )
        .is_err());
    }

    #[test]
    fn coherent_vacuum_is_pure_dark_counts() {
        let det = DetectionModel { dark_count: 0.01, transmittance_alice: 1.0, transmittance_bob: 1.0 };
        let amp = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let stats = coherent_setting_statistics(
            amp,
            amp,
            Intensity::VACUUM,
            Intensity::VACUUM,
            &det,
            64,
        )
        .unwrap();
        let expected = 2.0 * 0.01f64.powi(2) * 0.99f64.powi(2);
        assert_abs_diff_eq!(stats.psi_minus_prob, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.psi_minus_prob, 1.9602e-4, epsilon = 1e-8);
        assert_abs_diff_eq!(stats.psi_plus_prob, expected, epsilon = 1e-15);
    }

    #[test]
    fn coherent_hv_relabeling_symmetry() {
        let det = DetectionModel::from_params(&reference_params(20.0));
        let h = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let v = eigenstate_amplitudes(BasisObservable::Z, 1).unwrap();
        let mu = Intensity::new(0.2).unwrap();
        let a = coherent_setting_statistics(h, v, mu, mu, &det, 64).unwrap();
        let b = coherent_setting_statistics(v, h, mu, mu, &det, 64).unwrap();
        assert_abs_diff_eq!(a.psi_minus_prob, b.psi_minus_prob, epsilon = 1e-15);
    }

    #[test]
    fn coherent_rejects_bad_quadrature() {
        let amp = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let det = DetectionModel::ideal();
        let mu = Intensity::new(0.1).unwrap();
        assert!(coherent_setting_statistics(amp, amp, mu, mu, &det, 8).is_err());
        assert!(coherent_setting_statistics(amp, amp, mu, mu, &det, 17).is_err());
    }

    #[test]
    fn fock_vacuum_dark_counts() {
        let det = DetectionModel { dark_count: 0.01, transmittance_alice: 1.0, transmittance_bob: 1.0 };
        let amp = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let stats = fock_setting_statistics(0, 0, amp, amp, &det);
        assert_abs_diff_eq!(
            stats.psi_minus_prob,
            2.0 * 0.01f64.powi(2) * 0.99f64.powi(2),
            epsilon = 1e-16
        );
    }

    #[test]
    fn fock_single_photon_pair_yields() {
        let det = DetectionModel::ideal();
        let h = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let v = eigenstate_amplitudes(BasisObservable::Z, 1).unwrap();
        // Identical photons bunch (Hong-Ou-Mandel): no cross-port pattern.
        let same = fock_setting_statistics(1, 1, h, h, &det);
        assert_abs_diff_eq!(same.psi_minus_prob, 0.0, epsilon = 1e-12);
        // Orthogonal photons project onto the singlet with probability 1/2.
        let opposite = fock_setting_statistics(1, 1, h, v, &det);
        assert_abs_diff_eq!(opposite.psi_minus_prob, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fock_occupation_distribution_normalized() {
        let combo = BasisCombination::from_tag(BasisTag::Qs);
        let aa = eigenstate_amplitudes(combo.alice_basis, 0).unwrap();
        let ab = eigenstate_amplitudes(combo.bob_basis, 1).unwrap();
        for (m, n) in [(0, 0), (1, 1), (2, 3), (4, 4), (5, 2)] {
            let dist = fock_occupation_distribution(m, n, aa, ab);
            let total: f64 = dist.iter().map(|(_, p)| p).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn fock_phase_independence() {
        let combo = BasisCombination::from_tag(BasisTag::Rt);
        let aa = eigenstate_amplitudes(combo.alice_basis, 0).unwrap();
        let ab = eigenstate_amplitudes(combo.bob_basis, 1).unwrap();
        let det = DetectionModel::from_params(&reference_params(10.0));
        let reference = fock_setting_statistics(2, 1, aa, ab, &det);
        for phase in [0.3, 1.1, 2.9, 4.2, 5.8] {
            let rotated = PolarizationAmplitude {
                h: ab.h * Complex64::from_polar(1.0, phase),
                v: ab.v * Complex64::from_polar(1.0, phase),
            };
            let stats = fock_setting_statistics(2, 1, aa, rotated, &det);
            assert_abs_diff_eq!(
                stats.psi_minus_prob,
                reference.psi_minus_prob,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn yield_table_singlet_limit() {
        let mut config = reference_config(0.0);
        config.params.dark_count = 0.0;
        config.params.det_efficiency = 1.0;
        let table = build_fock_yield_table(&config, 1).unwrap();
        assert_abs_diff_eq!(table.g11(), 2.0 * std::f64::consts::SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(table.y11_zz(), 0.25, epsilon = 1e-12);
        // (0,0) correlators are undefined without dark counts and stored as 0.
        let (c00, defined) = table.correlator(BasisTag::Qs, 0, 0);
        assert_eq!(c00, 0.0);
        assert!(!defined);
        assert_abs_diff_eq!(table.e11_xx(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn yield_table_dark_count_correlator_is_zero() {
        let table = build_fock_yield_table(&reference_config(10.0), 2).unwrap();
        for tag in BasisTag::CHSH {
            let (c00, defined) = table.correlator(tag, 0, 0);
            assert!(defined);
            assert_abs_diff_eq!(c00, 0.0, epsilon = 1e-12);
        }
        // Tsirelson sanity on a lossy, noisy configuration.
        assert!(table.g11() <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
    }

    #[test]
    fn observed_error_rate_small_at_short_distance() {
        let mut config = reference_config(0.0);
        config.params.dark_count = 0.0;
        let obs = observed_statistics(&config).unwrap();
        let s = config.alice.signal_index();
        let (e_zz, degenerate) = obs.error_rate(BasisTag::Zz, s, s);
        assert!(!degenerate);
        assert!(e_zz < 0.01, "E_ZZ = {e_zz}");
    }

    #[test]
    fn observed_vacuum_pair_yield_sum() {
        let config = reference_config(10.0);
        let obs = observed_statistics(&config).unwrap();
        let pd = config.params.dark_count;
        let floor = 4.0 * 2.0 * pd * pd * (1.0 - pd) * (1.0 - pd);
        for tag in BasisTag::CHSH {
            assert_abs_diff_eq!(obs.yield_sum(tag, 0, 0), floor, epsilon = 1e-18);
        }
    }

    #[test]
    fn observed_corr_bounded_by_yield() {
        let config = reference_config(30.0);
        let obs = observed_statistics(&config).unwrap();
        for tag in BasisTag::CHSH {
            for k in 0..obs.num_alice() {
                for l in 0..obs.num_bob() {
                    assert!(
                        obs.corr_sum(tag, k, l).abs() <= obs.yield_sum(tag, k, l) + 1e-18
                    );
                }
            }
        }
    }

    #[test]
    fn observed_degenerate_statistics_flagged() {
        let mut config = reference_config(0.0);
        config.params.dark_count = 0.0;
        let obs = observed_statistics(&config).unwrap();
        let (e, degenerate) = obs.error_rate(BasisTag::Zz, 0, 0);
        assert!(degenerate);
        assert_eq!(e, 0.5);
    }

    #[test]
    fn poisson_mixture_identity_spot_check() {
        // Full 25-pair sweep lives in the acceptance suite; here one decoy
        // pair and the signal pair at 10 km.
        let config = reference_config(10.0);
        let det = DetectionModel::from_params(&config.params);
        let combo = BasisCombination::from_tag(BasisTag::Zz);
        let aa = eigenstate_amplitudes(combo.alice_basis, 0).unwrap();
        let ab = eigenstate_amplitudes(combo.bob_basis, 1).unwrap();
        for (mu, nu) in [(0.02, 0.03), (0.3, 0.3)] {
            let mu = Intensity::new(mu).unwrap();
            let nu = Intensity::new(nu).unwrap();
            let coherent =
                coherent_setting_statistics(aa, ab, mu, nu, &det, 64).unwrap().psi_minus_prob;
            let mixture = poisson_mixture_psi_minus(aa, ab, mu, nu, &det, 8);
            let tol = poisson_tail(mu, nu, 8) + 1e-8;
            assert!(
                (coherent - mixture).abs() <= tol,
                "coherent {coherent} vs mixture {mixture}, tol {tol}"
            );
        }
    }

    #[test]
    fn phase_quadrature_convergence() {
        let config = reference_config(15.0);
        let det = DetectionModel::from_params(&config.params);
        let combo = BasisCombination::from_tag(BasisTag::Qs);
        let aa = eigenstate_amplitudes(combo.alice_basis, 0).unwrap();
        let ab = eigenstate_amplitudes(combo.bob_basis, 0).unwrap();
        for mu in [0.0, 0.01, 0.02, 0.03, 0.3] {
            for nu in [0.0, 0.01, 0.3] {
                let mu = Intensity::new(mu).unwrap();
                let nu = Intensity::new(nu).unwrap();
                let a = coherent_setting_statistics(aa, ab, mu, nu, &det, 64).unwrap();
                let b = coherent_setting_statistics(aa, ab, mu, nu, &det, 128).unwrap();
                assert!((a.psi_minus_prob - b.psi_minus_prob).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn loss_monotonicity() {
        let amp_h = eigenstate_amplitudes(BasisObservable::Z, 0).unwrap();
        let amp_v = eigenstate_amplitudes(BasisObservable::Z, 1).unwrap();
        let mu = Intensity::new(0.3).unwrap();
        let mut previous = f64::INFINITY;
        for d in [0.0, 20.0, 40.0, 80.0, 120.0, 160.0] {
            let mut params = reference_params(d);
            params.dark_count = 0.0;
            let det = DetectionModel::from_params(&params);
            let p = coherent_setting_statistics(amp_h, amp_v, mu, mu, &det, 64)
                .unwrap()
                .psi_minus_prob;
            assert!(p <= previous + 1e-18);
            previous = p;
        }
    }
}
