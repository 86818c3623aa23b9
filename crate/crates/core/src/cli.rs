//! Batch front-end: flat key=value run configuration, distance scans emitted
//! as CSV, and a single-distance diagnostic view of bound tightness.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use crate::bounds::{
    apply_finite_size, compute_bound_report, IntervalObservation, TruncationPolicy,
};
use crate::keyrate::{
    distance_scan, optimize_signal, BoundSource, KeyRateError, Protocol, ScanResult, SignalGrid,
};
use crate::model::{poisson_tail, BasisCombination, BasisTag, Intensity, IntensitySet, ProtocolConfig, SystemParams};
use crate::optics::{
    build_fock_yield_table, coherent_setting_statistics, eigenstate_amplitudes, observed_statistics,
    poisson_mixture_psi_minus, DetectionModel,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing mandatory key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("computation failed: {0}")]
    Compute(#[from] KeyRateError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A fully validated run configuration; the single source of truth for a
/// scan or diagnostic invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub decoys: Vec<f64>,
    pub signal_grid: SignalGrid,
    pub dark_count: f64,
    pub det_efficiency: f64,
    pub fiber_loss_db_km: f64,
    pub recon_efficiency: f64,
    /// (start, stop, step) in km; scan points are start, start+step, ... <= stop.
    pub distances: (f64, f64, f64),
    pub pulses: Option<f64>,
    pub cutoff: usize,
    pub phase_nodes: usize,
    pub out: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "protocol",
    "decoys",
    "signal_grid",
    "dark_count",
    "det_efficiency",
    "fiber_loss_db_km",
    "f",
    "distances",
    "N",
    "cutoff",
    "phase_nodes",
    "out",
];

fn parse_number(key: &str, line: usize, text: &str) -> Result<f64, CliError> {
    text.trim().parse::<f64>().map_err(|_| CliError::Parse {
        line,
        message: format!("key `{key}`: malformed number `{}`", text.trim()),
    })
}

fn parse_triple(key: &str, line: usize, text: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Parse {
            line,
            message: format!("key `{key}`: expected min:max:step, got `{text}`"),
        });
    }
    Ok((
        parse_number(key, line, parts[0])?,
        parse_number(key, line, parts[1])?,
        parse_number(key, line, parts[2])?,
    ))
}

/// Parse the flat key=value configuration format. Unknown keys are errors;
/// every module precondition is checked here before any computation starts.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut protocol = None;
    let mut decoys: Option<Vec<f64>> = None;
    let mut signal_grid = SignalGrid::DEFAULT;
    let mut dark_count = None;
    let mut det_efficiency = None;
    let mut fiber_loss = None;
    let mut recon = None;
    let mut distances = None;
    let mut pulses = None;
    let mut cutoff = TruncationPolicy::DEFAULT_CUTOFF;
    let mut phase_nodes = 64usize;
    let mut out = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Parse { line, message: format!("expected key=value, got `{content}`") });
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Parse { line, message: format!("unknown key `{key}`") });
        }
        match key {
            "protocol" => {
                protocol = Some(match value {
                    "chsh-mdi" => Protocol::ChshMdi,
                    "mdi" => Protocol::Mdi,
                    other => {
                        return Err(CliError::Parse {
                            line,
                            message: format!(
                                "key `protocol`: expected chsh-mdi or mdi, got `{other}`"
                            ),
                        })
                    }
                });
            }
            "decoys" => {
                let values: Result<Vec<f64>, CliError> =
                    value.split(',').map(|v| parse_number("decoys", line, v)).collect();
                decoys = Some(values?);
            }
            "signal_grid" => {
                let (min, max, step) = parse_triple("signal_grid", line, value)?;
                signal_grid = SignalGrid { min, max, step };
            }
            "dark_count" => dark_count = Some(parse_number("dark_count", line, value)?),
            "det_efficiency" => det_efficiency = Some(parse_number("det_efficiency", line, value)?),
            "fiber_loss_db_km" => fiber_loss = Some(parse_number("fiber_loss_db_km", line, value)?),
            "f" => recon = Some(parse_number("f", line, value)?),
            "distances" => distances = Some(parse_triple("distances", line, value)?),
            "N" => pulses = Some(parse_number("N", line, value)?),
            "cutoff" => {
                let v = parse_number("cutoff", line, value)?;
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(CliError::Parse {
                        line,
                        message: format!("key `cutoff`: expected a non-negative integer, got `{value}`"),
                    });
                }
                cutoff = v as usize;
            }
            "phase_nodes" => {
                let v = parse_number("phase_nodes", line, value)?;
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(CliError::Parse {
                        line,
                        message: format!(
                            "key `phase_nodes`: expected a non-negative integer, got `{value}`"
                        ),
                    });
                }
                phase_nodes = v as usize;
            }
            "out" => out = Some(PathBuf::from(value)),
            _ => unreachable!(),
        }
    }

    let config = RunConfig {
        protocol: protocol.ok_or(CliError::MissingKey("protocol"))?,
        decoys: decoys.ok_or(CliError::MissingKey("decoys"))?,
        signal_grid,
        dark_count: dark_count.ok_or(CliError::MissingKey("dark_count"))?,
        det_efficiency: det_efficiency.ok_or(CliError::MissingKey("det_efficiency"))?,
        fiber_loss_db_km: fiber_loss.ok_or(CliError::MissingKey("fiber_loss_db_km"))?,
        recon_efficiency: recon.ok_or(CliError::MissingKey("f"))?,
        distances: distances.ok_or(CliError::MissingKey("distances"))?,
        pulses,
        cutoff,
        phase_nodes,
        out: out.ok_or(CliError::MissingKey("out"))?,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Invalid(m));
        if self.decoys.len() < 2 {
            return invalid(format!(
                "key `decoys`: need at least 2 decoy intensities for the decoy-state system, got {}",
                self.decoys.len()
            ));
        }
        if self.decoys.iter().any(|&d| d < 0.0) {
            return invalid("key `decoys`: intensities must be non-negative".into());
        }
        if self.decoys.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("key `decoys`: intensities must be strictly increasing".into());
        }
        let g = self.signal_grid;
        if !(g.step > 0.0) || !(g.min > 0.0) || g.max < g.min {
            return invalid(format!(
                "key `signal_grid`: need 0 < min <= max and step > 0, got {}:{}:{}",
                g.min, g.max, g.step
            ));
        }
        // Grid points at or below the strongest decoy are skipped by the
        // optimizer, so only the top of the grid has to clear it.
        if g.max <= *self.decoys.last().unwrap() {
            return invalid(
                "key `signal_grid`: maximum signal must exceed the largest decoy".into(),
            );
        }
        if !(self.dark_count >= 0.0 && self.dark_count < 1.0) {
            return invalid(format!("key `dark_count`: must be in [0, 1), got {}", self.dark_count));
        }
        if !(self.det_efficiency > 0.0 && self.det_efficiency <= 1.0) {
            return invalid(format!(
                "key `det_efficiency`: must be in (0, 1], got {}",
                self.det_efficiency
            ));
        }
        if self.fiber_loss_db_km < 0.0 {
            return invalid("key `fiber_loss_db_km`: must be non-negative".into());
        }
        if self.recon_efficiency < 1.0 {
            return invalid(format!(
                "key `f`: reconciliation efficiency must be >= 1, got {}",
                self.recon_efficiency
            ));
        }
        let (start, stop, step) = self.distances;
        if !(step > 0.0) || start < 0.0 || stop <= start {
            return invalid(format!(
                "key `distances`: need 0 <= start < stop and step > 0, got {start}:{stop}:{step}"
            ));
        }
        if let Some(n) = self.pulses {
            if !(n > 0.0) {
                return invalid(format!("key `N`: pulse count must be positive, got {n}"));
            }
        }
        if self.cutoff < 2 {
            return invalid(format!("key `cutoff`: must be >= 2, got {}", self.cutoff));
        }
        if self.phase_nodes < 16 || self.phase_nodes % 2 != 0 {
            return invalid(format!(
                "key `phase_nodes`: must be even and >= 16, got {}",
                self.phase_nodes
            ));
        }
        Ok(())
    }

    /// Metadata echo; `parse_config(render(c)) == c` for every valid config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let protocol = match self.protocol {
            Protocol::ChshMdi => "chsh-mdi",
            Protocol::Mdi => "mdi",
        };
        writeln!(s, "protocol={protocol}").unwrap();
        let decoys: Vec<String> = self.decoys.iter().map(|d| d.to_string()).collect();
        writeln!(s, "decoys={}", decoys.join(",")).unwrap();
        writeln!(
            s,
            "signal_grid={}:{}:{}",
            self.signal_grid.min, self.signal_grid.max, self.signal_grid.step
        )
        .unwrap();
        writeln!(s, "dark_count={}", self.dark_count).unwrap();
        writeln!(s, "det_efficiency={}", self.det_efficiency).unwrap();
        writeln!(s, "fiber_loss_db_km={}", self.fiber_loss_db_km).unwrap();
        writeln!(s, "f={}", self.recon_efficiency).unwrap();
        writeln!(s, "distances={}:{}:{}", self.distances.0, self.distances.1, self.distances.2)
            .unwrap();
        if let Some(n) = self.pulses {
            writeln!(s, "N={n}").unwrap();
        }
        writeln!(s, "cutoff={}", self.cutoff).unwrap();
        writeln!(s, "phase_nodes={}", self.phase_nodes).unwrap();
        writeln!(s, "out={}", self.out.display()).unwrap();
        s
    }

    pub fn distance_list(&self) -> Vec<f64> {
        let (start, stop, step) = self.distances;
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    }

    /// Protocol configuration template; the signal slot is filled per grid
    /// point by the optimizer.
    pub fn protocol_config(&self) -> Result<ProtocolConfig, CliError> {
        let decoys: Result<Vec<Intensity>, _> =
            self.decoys.iter().map(|&d| Intensity::new(d)).collect();
        let decoys = decoys.map_err(|e| CliError::Invalid(e.to_string()))?;
        let max_decoy = *self.decoys.last().unwrap();
        let placeholder = self
            .signal_grid
            .points()
            .into_iter()
            .find(|&mu| mu > max_decoy)
            .ok_or_else(|| {
                CliError::Invalid("key `signal_grid`: no grid point exceeds the largest decoy".into())
            })?;
        let signal = Intensity::new(placeholder).map_err(|e| CliError::Invalid(e.to_string()))?;
        let set = IntensitySet::new(decoys, signal).map_err(|e| CliError::Invalid(e.to_string()))?;
        let params = SystemParams {
            dark_count: self.dark_count,
            det_efficiency: self.det_efficiency,
            fiber_loss_db_km: self.fiber_loss_db_km,
            recon_efficiency: self.recon_efficiency,
            distance_km: self.distances.0,
        }
        .validated()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(ProtocolConfig {
            alice: set.clone(),
            bob: set,
            params,
            cutoff: self.cutoff,
            phase_nodes: self.phase_nodes,
        })
    }
}

fn summary_block(config: &RunConfig, scan: &ScanResult) -> String {
    let mut s = String::new();
    match scan.secure_distance() {
        Some(d) => writeln!(s, "secure distance: {d} km (scan resolution)").unwrap(),
        None => writeln!(s, "secure distance: none (rate <= 0 everywhere)").unwrap(),
    }
    if let Some(peak) = scan.peak() {
        writeln!(
            s,
            "peak rate: {:.6e} per pulse pair at {} km (mu_s = {:.2})",
            peak.rate,
            peak.distance_km,
            peak.signal.value()
        )
        .unwrap();
    }
    writeln!(s, "rate formula: {}", scan.metadata.formula_note()).unwrap();
    writeln!(s, "finite-size N convention: pulse pairs per (intensity pair, basis, bit pair) setting").unwrap();
    writeln!(s, "config echo:").unwrap();
    for line in config.render().lines() {
        writeln!(s, "  {line}").unwrap();
    }
    s
}

/// Run the configured distance scan, write the CSV, and print the summary
/// block to `out`.
pub fn run_scan(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let proto = config.protocol_config()?;
    let scan = distance_scan(
        &proto,
        config.protocol,
        BoundSource::DecoyLp,
        &config.distance_list(),
        config.pulses,
        config.signal_grid,
    )?;
    let csv = scan.to_csv();
    std::fs::write(&config.out, csv)
        .map_err(|source| CliError::Io { path: config.out.clone(), source })?;
    let summary = summary_block(config, &scan);
    out.write_all(summary.as_bytes())
        .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
    Ok(())
}

/// Single-distance debugging view: LP bounds against the Fock-oracle truth,
/// every LP status, and the Poisson-mixture residuals of the optics model.
pub fn run_diagnostics(
    config: &RunConfig,
    distance_km: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let proto = config.protocol_config()?;
    let (signal, point) = optimize_signal(
        &proto,
        config.protocol,
        BoundSource::DecoyLp,
        distance_km,
        config.pulses,
        config.signal_grid,
    )?;
    let cfg = proto
        .at_distance(distance_km)
        .with_signal(signal)
        .map_err(KeyRateError::from)?;
    let obs = observed_statistics(&cfg).map_err(KeyRateError::from)?;
    let intervals = match config.pulses {
        Some(n) => apply_finite_size(&obs, n),
        None => IntervalObservation::exact(&obs),
    };
    let policy = TruncationPolicy::new(cfg.cutoff).map_err(KeyRateError::from)?;
    let report = compute_bound_report(&intervals, &policy).map_err(KeyRateError::from)?;
    let table = build_fock_yield_table(&cfg, cfg.cutoff).map_err(KeyRateError::from)?;

    let mut s = String::new();
    writeln!(s, "diagnostics at {distance_km} km, mu_s = {:.2}", signal.value()).unwrap();
    writeln!(s, "oracle Y11^ZZ = {:.12e}  bound = {:.12e}", table.y11_zz(), report.y11_lower)
        .unwrap();
    writeln!(s, "oracle g11    = {:.12e}  bound = {:.12e}", table.g11(), report.g11_lower)
        .unwrap();
    writeln!(s, "gain Q^ZZ = {:.6e}  error E^ZZ = {:.6e}  rate = {:.6e}", point.gain, point.error, point.rate).unwrap();
    s.push_str(&report.diagnostic_text());

    writeln!(s, "poisson-mixture residuals (signal pair, tolerance = tail + 1e-8):").unwrap();
    let det = DetectionModel::from_params(&cfg.params);
    let mu = cfg.alice.signal();
    let nu = cfg.bob.signal();
    let tail = poisson_tail(mu, nu, 8);
    for tag in [BasisTag::Zz, BasisTag::Qs, BasisTag::Rs, BasisTag::Rt, BasisTag::Qt] {
        let combo = BasisCombination::from_tag(tag);
        let aa = eigenstate_amplitudes(combo.alice_basis, 0).map_err(KeyRateError::from)?;
        let ab = eigenstate_amplitudes(combo.bob_basis, 1).map_err(KeyRateError::from)?;
        let coherent = coherent_setting_statistics(aa, ab, mu, nu, &det, cfg.phase_nodes)
            .map_err(KeyRateError::from)?
            .psi_minus_prob;
        let mixture = poisson_mixture_psi_minus(aa, ab, mu, nu, &det, 8);
        writeln!(
            s,
            "  {}: |coherent - mixture| = {:.3e} (tol {:.3e})",
            tag.label(),
            (coherent - mixture).abs(),
            tail + 1e-8
        )
        .unwrap();
    }
    out.write_all(s.as_bytes())
        .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
    Ok(())
}
