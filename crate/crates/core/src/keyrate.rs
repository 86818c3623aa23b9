//! Key-rate evaluation: the CHSH-MDI-QKD rate formula, the decoy MDI-QKD
//! baseline, signal-intensity grid search, and distance scans serialized as
//! CSV curves.

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{
    apply_finite_size, compute_bound_report, compute_mdi_bounds, BoundsError, IntervalObservation,
    TruncationPolicy,
};
use crate::model::{
    binary_entropy, poisson_pmf, BasisTag, Intensity, ModelError, ProtocolConfig,
};
use crate::optics::{build_fock_yield_table, observed_statistics, OpticsError};

#[derive(Debug, Error)]
pub enum KeyRateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("distances must be nonempty and strictly increasing")]
    BadDistances,
    #[error("invalid argument: {0}")]
    BadArgument(&'static str),
}

/// Which protocol's rate formula a scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    ChshMdi,
    Mdi,
}

/// Where single-photon bounds come from: decoy-state LPs on the observable
/// statistics, or the Fock oracle directly (the infinite-intensity benchmark).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    DecoyLp,
    Oracle,
}

/// One evaluated scan point. `rate` is clamped at zero for reporting;
/// `raw_rate` keeps the formula value.
#[derive(Debug, Clone)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub signal: Intensity,
    pub y11_lower: f64,
    /// CHSH g11 lower bound; NaN for the MDI baseline, which bounds the
    /// single-photon error instead (see `e11_upper`).
    pub g11_lower: f64,
    pub e11_upper: Option<f64>,
    pub gain: f64,
    pub error: f64,
    pub raw_rate: f64,
    pub rate: f64,
    pub protocol: Protocol,
    pub source: BoundSource,
    pub pulses: Option<f64>,
}

impl KeyRatePoint {
    pub fn protocol_label(&self) -> &'static str {
        match (self.protocol, self.pulses.is_some()) {
            (Protocol::ChshMdi, false) => "CHSH-MDI",
            (Protocol::ChshMdi, true) => "CHSH-MDI-finite",
            (Protocol::Mdi, _) => "MDI",
        }
    }
}

/// Eq.-(4)-style CHSH-MDI rate: single-photon term scaled by the CHSH privacy
/// factor, minus the reconciliation cost. Returns the raw (unclamped) value.
pub fn chsh_key_rate(
    p11: f64,
    y11_lower: f64,
    g11_lower: f64,
    gain: f64,
    error: f64,
    recon_efficiency: f64,
) -> Result<f64, KeyRateError> {
    if !(-4.0..=4.0).contains(&g11_lower) {
        return Err(KeyRateError::BadArgument("g11_lower outside [-4, 4]"));
    }
    for (v, name) in [(p11, "p11"), (y11_lower, "y11"), (gain, "gain"), (error, "error")] {
        if !(0.0..=1.0).contains(&v) {
            let _ = name;
            return Err(KeyRateError::BadArgument("probability argument outside [0, 1]"));
        }
    }
    if recon_efficiency < 1.0 {
        return Err(KeyRateError::BadArgument("reconciliation efficiency below 1"));
    }
    let privacy = privacy_factor(g11_lower);
    Ok(p11 * y11_lower * privacy - gain * recon_efficiency * binary_entropy(error)?)
}

/// 1 - log2(1 + sqrt(2 - g^2/4)); the square-root argument is clamped at zero
/// for g beyond the Tsirelson bound.
pub fn privacy_factor(g11: f64) -> f64 {
    1.0 - (1.0 + (2.0 - g11 * g11 / 4.0).max(0.0).sqrt()).log2()
}

/// Decoy MDI-QKD baseline rate:
/// R = P11 * Y11^ZZ_low * (1 - h(e11^X_up)) - Q^ZZ f h(E^ZZ).
pub fn mdi_key_rate(
    p11: f64,
    y11_lower: f64,
    e11_upper: f64,
    gain: f64,
    error: f64,
    recon_efficiency: f64,
) -> Result<f64, KeyRateError> {
    for v in [p11, y11_lower, e11_upper, gain, error] {
        if !(0.0..=1.0).contains(&v) {
            return Err(KeyRateError::BadArgument("probability argument outside [0, 1]"));
        }
    }
    Ok(p11 * y11_lower * (1.0 - binary_entropy(e11_upper)?)
        - gain * recon_efficiency * binary_entropy(error)?)
}

/// Run the full pipeline (observe, widen, bound, rate) at one distance and
/// one signal intensity.
pub fn evaluate_point(
    config: &ProtocolConfig,
    protocol: Protocol,
    source: BoundSource,
    pulses: Option<f64>,
) -> Result<KeyRatePoint, KeyRateError> {
    let policy = TruncationPolicy::new(config.cutoff)?;
    let obs = observed_statistics(config)?;
    let intervals = match pulses {
        Some(n) => apply_finite_size(&obs, n),
        None => IntervalObservation::exact(&obs),
    };
    let s = config.alice.signal_index();
    let t = config.bob.signal_index();
    let gain = intervals.gain(BasisTag::Zz, s, t).high.min(1.0);
    let error = intervals.error_rate(BasisTag::Zz, s, t).high.min(0.5);
    let mu_s = config.alice.signal();
    let nu_s = config.bob.signal();
    let p11 = poisson_pmf(mu_s, 1) * poisson_pmf(nu_s, 1);
    let f = config.params.recon_efficiency;

    let (y11, g11, e11, raw) = match (protocol, source) {
        (Protocol::ChshMdi, BoundSource::DecoyLp) => {
            let report = compute_bound_report(&intervals, &policy)?;
            let raw = chsh_key_rate(p11, report.y11_lower, report.g11_lower, gain, error, f)?;
            (report.y11_lower, report.g11_lower, None, raw)
        }
        (Protocol::ChshMdi, BoundSource::Oracle) => {
            // Oracle inputs only read single-photon-pair entries, so a
            // cutoff-1 table suffices and keeps grid searches cheap.
            let table = build_fock_yield_table(config, 1)?;
            let y11 = table.y11_zz();
            let g11 = table.g11().min(2.0 * std::f64::consts::SQRT_2);
            let raw = chsh_key_rate(p11, y11, g11, gain, error, f)?;
            (y11, g11, None, raw)
        }
        (Protocol::Mdi, BoundSource::DecoyLp) => {
            let report = compute_mdi_bounds(&intervals, &policy)?;
            let raw = mdi_key_rate(p11, report.y11_zz_lower, report.e11_xx_upper, gain, error, f)?;
            (report.y11_zz_lower, f64::NAN, Some(report.e11_xx_upper), raw)
        }
        (Protocol::Mdi, BoundSource::Oracle) => {
            let table = build_fock_yield_table(config, 1)?;
            let y11 = table.y_zz(1, 1);
            let e11 = table.e11_xx();
            let raw = mdi_key_rate(p11, y11, e11, gain, error, f)?;
            (y11, f64::NAN, Some(e11), raw)
        }
    };

    Ok(KeyRatePoint {
        distance_km: config.params.distance_km,
        signal: mu_s,
        y11_lower: y11,
        g11_lower: g11,
        e11_upper: e11,
        gain,
        error,
        raw_rate: raw,
        rate: raw.max(0.0),
        protocol,
        source,
        pulses,
    })
}

/// Signal-intensity grid: inclusive range with fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SignalGrid {
    pub const DEFAULT: SignalGrid = SignalGrid { min: 0.01, max: 1.00, step: 0.01 };

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Grid-search the signal intensity (mu_s = nu_s) at one distance; ties break
/// toward the smaller intensity, and an all-zero-rate grid returns its
/// smallest point.
pub fn optimize_signal(
    config: &ProtocolConfig,
    protocol: Protocol,
    source: BoundSource,
    distance_km: f64,
    pulses: Option<f64>,
    grid: SignalGrid,
) -> Result<(Intensity, KeyRatePoint), KeyRateError> {
    let base = config.at_distance(distance_km);
    // Grid points at or below the strongest decoy would invert the
    // decoy/signal ordering; they are simply not candidates.
    let max_decoy = base
        .alice
        .decoys()
        .iter()
        .chain(base.bob.decoys())
        .map(|d| d.value())
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<Result<KeyRatePoint, KeyRateError>> = grid
        .points()
        .into_par_iter()
        .filter(|&mu| mu > max_decoy)
        .map(|mu| {
            let signal = Intensity::new(mu)?;
            let cfg = base.with_signal(signal)?;
            evaluate_point(&cfg, protocol, source, pulses)
        })
        .collect();
    let mut best: Option<KeyRatePoint> = None;
    for candidate in candidates {
        let point = candidate?;
        let replace = match &best {
            None => true,
            Some(b) => point.rate > b.rate,
        };
        if replace {
            best = Some(point);
        }
    }
    let best = best.ok_or(KeyRateError::BadArgument("empty signal grid"))?;
    Ok((best.signal, best))
}

/// Scan metadata echoed into summaries so curves are self-describing.
#[derive(Debug, Clone)]
pub struct ScanMetadata {
    pub protocol: Protocol,
    pub source: BoundSource,
    pub decoys: Vec<f64>,
    pub cutoff: usize,
    pub phase_nodes: usize,
    pub pulses: Option<f64>,
    pub grid: SignalGrid,
}

impl ScanMetadata {
    /// The baseline formula is not restated by the protocol description, so
    /// the output names the exact expression used.
    pub fn formula_note(&self) -> &'static str {
        match self.protocol {
            Protocol::ChshMdi => {
                "R = P11 Y11_low (1 - log2(1 + sqrt(2 - g11_low^2/4))) - Q_zz f h(E_zz)"
            }
            Protocol::Mdi => "R = P11 Y11_low (1 - h(e11x_up)) - Q_zz f h(E_zz)",
        }
    }
}

/// A distance scan: one optimized point per distance, strictly increasing.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub points: Vec<KeyRatePoint>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    /// Largest scanned distance with positive clamped rate, at scan
    /// resolution.
    pub fn secure_distance(&self) -> Option<f64> {
        self.points.iter().filter(|p| p.rate > 0.0).map(|p| p.distance_km).fold(None, |a, d| {
            Some(a.map_or(d, |x: f64| x.max(d)))
        })
    }

    pub fn peak(&self) -> Option<&KeyRatePoint> {
        self.points.iter().max_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap())
    }

    pub const CSV_HEADER: &'static str =
        "distance_km,mu_s,y11_lower,g11_lower,gain,error,rate,protocol,N";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let n = match p.pulses {
                Some(n) => format!("{n:.17e}"),
                None => "inf".to_string(),
            };
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                p.distance_km,
                p.signal.value(),
                p.y11_lower,
                p.g11_lower,
                p.gain,
                p.error,
                p.rate,
                p.protocol_label(),
                n
            ));
        }
        out
    }
}

/// One optimized `KeyRatePoint` per distance.
pub fn distance_scan(
    config: &ProtocolConfig,
    protocol: Protocol,
    source: BoundSource,
    distances: &[f64],
    pulses: Option<f64>,
    grid: SignalGrid,
) -> Result<ScanResult, KeyRateError> {
    if distances.is_empty() || distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KeyRateError::BadDistances);
    }
    let mut points = Vec::with_capacity(distances.len());
    for &d in distances {
        let (_, point) = optimize_signal(config, protocol, source, d, pulses, grid)?;
        points.push(point);
    }
    Ok(ScanResult {
        points,
        metadata: ScanMetadata {
            protocol,
            source,
            decoys: config.alice.decoys().iter().map(|d| d.value()).collect(),
            cutoff: config.cutoff,
            phase_nodes: config.phase_nodes,
            pulses,
            grid,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IntensitySet, SystemParams};
    use approx::assert_abs_diff_eq;

    fn reference_config(num_decoys: usize, signal: f64) -> ProtocolConfig {
        let mk = |v: f64| Intensity::new(v).unwrap();
        let decoys: Vec<_> = (0..num_decoys).map(|i| mk(0.01 * i as f64)).collect();
        let set = IntensitySet::new(decoys, mk(signal)).unwrap();
        ProtocolConfig {
            alice: set.clone(),
            bob: set,
            params: SystemParams {
                dark_count: 6e-6,
                det_efficiency: 0.145,
                fiber_loss_db_km: 0.2,
                recon_efficiency: 1.16,
                distance_km: 0.0,
            },
            cutoff: 7,
            phase_nodes: 64,
        }
    }

    #[test]
    fn privacy_factor_anchors() {
        assert_abs_diff_eq!(privacy_factor(2.0 * std::f64::consts::SQRT_2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(privacy_factor(2.0), 0.0, epsilon = 1e-12);
        // Beyond Tsirelson the argument clamps at zero.
        assert_abs_diff_eq!(privacy_factor(3.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chsh_rate_worked_example() {
        let r = chsh_key_rate(0.1, 0.01, 2.0 * std::f64::consts::SQRT_2, 0.002, 0.01, 1.16)
            .unwrap();
        let expected = 0.001 - 0.002 * 1.16 * binary_entropy(0.01).unwrap();
        assert_abs_diff_eq!(r, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 8.126e-4, epsilon = 1e-6);
        assert!(chsh_key_rate(0.1, 0.01, 5.0, 0.002, 0.01, 1.16).is_err());
        assert!(chsh_key_rate(0.1, 0.01, 2.0, 0.002, 0.01, 0.9).is_err());
    }

    #[test]
    fn mdi_rate_error_at_half_kills_single_photon_term() {
        let r = mdi_key_rate(0.1, 0.01, 0.5, 0.0, 0.0, 1.16).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mdi_oracle_positive_at_zero_distance() {
        let config = reference_config(2, 0.3);
        let point = evaluate_point(&config, Protocol::Mdi, BoundSource::Oracle, None).unwrap();
        assert!(point.rate > 0.0, "rate = {}", point.raw_rate);
    }

    #[test]
    fn optimizer_exhaustive_and_tie_break() {
        let config = reference_config(4, 0.3);
        let grid = SignalGrid { min: 0.05, max: 0.50, step: 0.05 };
        let (signal, best) = optimize_signal(
            &config,
            Protocol::ChshMdi,
            BoundSource::Oracle,
            25.0,
            None,
            grid,
        )
        .unwrap();
        for mu in grid.points() {
            let cfg = config
                .at_distance(25.0)
                .with_signal(Intensity::new(mu).unwrap())
                .unwrap();
            let point =
                evaluate_point(&cfg, Protocol::ChshMdi, BoundSource::Oracle, None).unwrap();
            assert!(best.rate >= point.rate, "grid point {mu} beats optimizer");
        }
        assert!(signal.value() > 0.0);
        // Far beyond the cutoff every rate clamps to zero: smallest grid
        // point wins.
        let (signal, far) = optimize_signal(
            &config,
            Protocol::ChshMdi,
            BoundSource::Oracle,
            400.0,
            None,
            grid,
        )
        .unwrap();
        assert_eq!(far.rate, 0.0);
        assert_abs_diff_eq!(signal.value(), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn scan_validates_distances() {
        let config = reference_config(4, 0.3);
        let grid = SignalGrid { min: 0.1, max: 0.3, step: 0.1 };
        assert!(matches!(
            distance_scan(&config, Protocol::ChshMdi, BoundSource::Oracle, &[], None, grid),
            Err(KeyRateError::BadDistances)
        ));
        assert!(matches!(
            distance_scan(
                &config,
                Protocol::ChshMdi,
                BoundSource::Oracle,
                &[10.0, 10.0],
                None,
                grid
            ),
            Err(KeyRateError::BadDistances)
        ));
    }

    #[test]
    fn scan_with_single_intensity_errors() {
        let config = reference_config(0, 0.3);
        let grid = SignalGrid { min: 0.1, max: 0.3, step: 0.1 };
        let result = distance_scan(
            &config,
            Protocol::ChshMdi,
            BoundSource::DecoyLp,
            &[10.0],
            None,
            grid,
        );
        assert!(matches!(result, Err(KeyRateError::Bounds(BoundsError::TooFewIntensities { .. }))));
    }

    #[test]
    fn oracle_scan_positive_prefix_contiguous() {
        let config = reference_config(4, 0.3);
        let grid = SignalGrid { min: 0.1, max: 0.5, step: 0.1 };
        let distances: Vec<f64> = (0..=10).map(|i| 20.0 * i as f64).collect();
        let scan = distance_scan(
            &config,
            Protocol::ChshMdi,
            BoundSource::Oracle,
            &distances,
            None,
            grid,
        )
        .unwrap();
        let mut seen_zero = false;
        for p in &scan.points {
            assert!(p.rate >= 0.0);
            if p.rate == 0.0 {
                seen_zero = true;
            } else {
                assert!(!seen_zero, "positive rate after cutoff at {} km", p.distance_km);
            }
        }
        assert!(scan.secure_distance().is_some());
        let csv = scan.to_csv();
        assert!(csv.starts_with(ScanResult::CSV_HEADER));
        assert_eq!(csv.lines().count(), distances.len() + 1);
    }
}
