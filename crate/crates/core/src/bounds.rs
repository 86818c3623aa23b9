//! Decoy-state bound estimation: translate observed statistics into truncated
//! linear constraint systems, solve for the single-photon yield and the four
//! CHSH correlator terms, compose the g11 lower bound, and widen observations
//! for finite pulse numbers.

use thiserror::Error;

use crate::lp::{
    check_feasible, solve, Constraint, Direction, LinearProgram, LpError, LpStatus, Relation,
};
use crate::model::{poisson_joint, poisson_tail, BasisTag, CorrelatorSigns, Intensity};
use crate::optics::ObservedStatistics;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("cutoff must be >= 2 so the (1,1) cell is interior, got {0}")]
    CutoffTooSmall(usize),
    #[error("need at least 3 intensities per side, got {alice} x {bob}")]
    TooFewIntensities { alice: usize, bob: usize },
    #[error("denominator interval extends below zero: [{low}, {high}]")]
    NegativeDenominator { low: f64, high: f64 },
    #[error("g11 composition needs lower bounds for QS/RS/RT and an upper bound for QT")]
    WrongBoundSense,
    #[error("{0} is not a CHSH basis combination")]
    NotChsh(&'static str),
    #[error("LP solve failed: {0}")]
    Lp(#[from] LpError),
}

/// Photon-number truncation: cutoff M plus the exact dropped probability mass
/// used as one-sided constraint slack, which keeps every bound conservative.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    cutoff: usize,
}

impl TruncationPolicy {
    pub const DEFAULT_CUTOFF: usize = 7;

    pub fn new(cutoff: usize) -> Result<Self, BoundsError> {
        if cutoff < 2 {
            return Err(BoundsError::CutoffTooSmall(cutoff));
        }
        Ok(TruncationPolicy { cutoff })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn tail(&self, mu: Intensity, nu: Intensity) -> f64 {
        poisson_tail(mu, nu, self.cutoff as u32)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { cutoff: Self::DEFAULT_CUTOFF }
    }
}

/// A closed interval [low, high].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(v: f64) -> Interval {
        Interval { low: v, high: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Five-standard-deviation Gaussian widening of an observed probability from
/// N trials, clamped to [0, 1].
pub fn widen_probability(q: f64, pulses: f64) -> Interval {
    let half_width = 5.0 * (q * (1.0 - q) / pulses).sqrt();
    Interval { low: (q - half_width).max(0.0), high: (q + half_width).min(1.0) }
}

/// Observed statistics as intervals: exact (zero-width) in the asymptotic
/// case, widened per bit-pair setting after finite-size analysis. Derived
/// quantities (gains, correlator sums, yield sums) are combined
/// component-wise from the per-setting intervals, the conservative reading.
#[derive(Debug, Clone)]
pub struct IntervalObservation {
    pub alice_intensities: Vec<Intensity>,
    pub bob_intensities: Vec<Intensity>,
    /// Pulse pairs per (intensity pair, basis combination, bit pair) setting;
    /// None for the asymptotic case.
    pub pulses_per_setting: Option<f64>,
    /// [w slot][k][l][i][j], same layout as ObservedStatistics.
    bit_yields: Vec<Interval>,
}

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

impl IntervalObservation {
    fn from_observed(obs: &ObservedStatistics, pulses: Option<f64>) -> IntervalObservation {
        let na = obs.num_alice();
        let nb = obs.num_bob();
        let mut bit_yields = Vec::with_capacity(6 * na * nb * 4);
        for tag in crate::optics::ALL_TAGS {
            for k in 0..na {
                for l in 0..nb {
                    for i in 0..2 {
                        for j in 0..2 {
                            let q = obs.bit_yield(tag, k, l, i, j);
                            bit_yields.push(match pulses {
                                Some(n) => widen_probability(q, n),
                                None => Interval::point(q),
                            });
                        }
                    }
                }
            }
        }
        IntervalObservation {
            alice_intensities: obs.alice_intensities.clone(),
            bob_intensities: obs.bob_intensities.clone(),
            pulses_per_setting: pulses,
            bit_yields,
        }
    }

    /// Zero-width intervals: the asymptotic case.
    pub fn exact(obs: &ObservedStatistics) -> IntervalObservation {
        Self::from_observed(obs, None)
    }

    pub fn bit_yield(&self, tag: BasisTag, k: usize, l: usize, i: usize, j: usize) -> Interval {
        let nb = self.bob_intensities.len();
        let idx =
            (((tag_slot(tag) * self.alice_intensities.len() + k) * nb + l) * 2 + i) * 2 + j;
        self.bit_yields[idx]
    }

    /// Interval on the gain Q^w = 1/4 sum_ij Y^{ij,w}.
    pub fn gain(&self, tag: BasisTag, k: usize, l: usize) -> Interval {
        let s = self.yield_sum(tag, k, l);
        Interval { low: s.low / 4.0, high: s.high / 4.0 }
    }

    /// Interval on sum_ij Y^{ij,w}.
    pub fn yield_sum(&self, tag: BasisTag, k: usize, l: usize) -> Interval {
        let mut low = 0.0;
        let mut high = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let iv = self.bit_yield(tag, k, l, i, j);
                low += iv.low;
                high += iv.high;
            }
        }
        Interval { low, high }
    }

    /// Interval on sum_ij a_ij Y^{ij,w}: each component widened first, then
    /// summed with its sign.
    pub fn corr_sum(&self, tag: BasisTag, k: usize, l: usize) -> Interval {
        let signs = CorrelatorSigns;
        let mut low = 0.0;
        let mut high = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let iv = self.bit_yield(tag, k, l, i, j);
                if signs.sign(i, j) > 0.0 {
                    low += iv.low;
                    high += iv.high;
                } else {
                    low -= iv.high;
                    high -= iv.low;
                }
            }
        }
        Interval { low, high }
    }

    /// Interval on the error-weighted gain Q^w E^w = 1/4 (Y^{00} + Y^{11}).
    pub fn error_gain(&self, tag: BasisTag, k: usize, l: usize) -> Interval {
        let a = self.bit_yield(tag, k, l, 0, 0);
        let b = self.bit_yield(tag, k, l, 1, 1);
        Interval { low: (a.low + b.low) / 4.0, high: (a.high + b.high) / 4.0 }
    }

    /// Conservative interval on the error rate E = (Y00 + Y11)/sum_ij Y.
    /// Degenerate statistics (zero upper total) give [0.5, 0.5].
    pub fn error_rate(&self, tag: BasisTag, k: usize, l: usize) -> Interval {
        let same_low = self.bit_yield(tag, k, l, 0, 0).low + self.bit_yield(tag, k, l, 1, 1).low;
        let same_high =
            self.bit_yield(tag, k, l, 0, 0).high + self.bit_yield(tag, k, l, 1, 1).high;
        let diff_low = self.bit_yield(tag, k, l, 0, 1).low + self.bit_yield(tag, k, l, 1, 0).low;
        let diff_high =
            self.bit_yield(tag, k, l, 0, 1).high + self.bit_yield(tag, k, l, 1, 0).high;
        if same_high + diff_high <= 0.0 {
            return Interval { low: 0.5, high: 0.5 };
        }
        let high = if same_high + diff_low > 0.0 { same_high / (same_high + diff_low) } else { 1.0 };
        let low = if same_low + diff_high > 0.0 { same_low / (same_low + diff_high) } else { 0.0 };
        Interval { low: low.max(0.0), high: high.min(1.0) }
    }

    fn check_sides(&self) -> Result<(), BoundsError> {
        let (na, nb) = (self.alice_intensities.len(), self.bob_intensities.len());
        if na < 3 || nb < 3 {
            return Err(BoundsError::TooFewIntensities { alice: na, bob: nb });
        }
        Ok(())
    }
}

/// Widen every observed bit-pair probability by five standard deviations for
/// N pulse pairs per setting.
pub fn apply_finite_size(obs: &ObservedStatistics, pulses: f64) -> IntervalObservation {
    assert!(pulses > 0.0, "pulse count must be positive");
    IntervalObservation::from_observed(obs, Some(pulses))
}

/// Truncated Eq.-(1)-style constraint system on the per-photon-number yields
/// Y_mn^w for one basis combination (ZZ for the key basis, XX for the MDI
/// baseline check). Objective: minimize Y_11.
pub fn build_yield_lp(
    observed: &IntervalObservation,
    policy: &TruncationPolicy,
    tag: BasisTag,
) -> Result<LinearProgram, BoundsError> {
    observed.check_sides()?;
    let m = policy.cutoff();
    let dim = m + 1;
    let num_vars = dim * dim;
    let var = |mm: usize, nn: usize| mm * dim + nn;

    let mut objective = vec![0.0; num_vars];
    objective[var(1, 1)] = 1.0;
    let mut lp = LinearProgram::minimize(num_vars, objective);

    for (k, &mu) in observed.alice_intensities.iter().enumerate() {
        for (l, &nu) in observed.bob_intensities.iter().enumerate() {
            let mut row = vec![0.0; num_vars];
            for mm in 0..dim {
                for nn in 0..dim {
                    row[var(mm, nn)] = poisson_joint(mu, nu, mm as u32, nn as u32);
                }
            }
            let q = observed.gain(tag, k, l);
            let tail = policy.tail(mu, nu);
            // Q = sum_{<=M} P Y + (tail contribution in [0, tail]).
            lp.constraints.push(Constraint {
                coeffs: row.clone(),
                relation: Relation::Le,
                rhs: q.high,
            });
            lp.constraints.push(Constraint {
                coeffs: row,
                relation: Relation::Ge,
                rhs: q.low - tail,
            });
        }
    }
    Ok(lp)
}

/// Truncated constraint system on the error-weighted yields
/// B_mn = Y_mn^w e_mn^w, used to upper-bound the single-photon error in the
/// MDI baseline. Objective: maximize B_11.
pub fn build_error_yield_lp(
    observed: &IntervalObservation,
    policy: &TruncationPolicy,
    tag: BasisTag,
) -> Result<LinearProgram, BoundsError> {
    observed.check_sides()?;
    let m = policy.cutoff();
    let dim = m + 1;
    let num_vars = dim * dim;
    let var = |mm: usize, nn: usize| mm * dim + nn;

    let mut objective = vec![0.0; num_vars];
    objective[var(1, 1)] = 1.0;
    let mut lp = LinearProgram::minimize(num_vars, objective);
    lp.direction = Direction::Maximize;

    for (k, &mu) in observed.alice_intensities.iter().enumerate() {
        for (l, &nu) in observed.bob_intensities.iter().enumerate() {
            let mut row = vec![0.0; num_vars];
            for mm in 0..dim {
                for nn in 0..dim {
                    row[var(mm, nn)] = poisson_joint(mu, nu, mm as u32, nn as u32);
                }
            }
            let qe = observed.error_gain(tag, k, l);
            let tail = policy.tail(mu, nu);
            lp.constraints.push(Constraint {
                coeffs: row.clone(),
                relation: Relation::Le,
                rhs: qe.high,
            });
            lp.constraints.push(Constraint {
                coeffs: row,
                relation: Relation::Ge,
                rhs: qe.low - tail,
            });
        }
    }
    Ok(lp)
}

/// Which linear functional of the single-photon cell a CHSH LP optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChshTarget {
    /// sum_ij a_ij Y_11^{ij,w}
    Numerator,
    /// sum_ij Y_11^{ij,w}
    Denominator,
}

/// Truncated Eqs.-(2)/(3)-style constraint system on the bit-resolved yields
/// Y_mn^{ij,w} for one CHSH basis combination. The correlator equation is
/// linear because C_mn^w sum_ij Y_mn^{ij,w} = sum_ij a_ij Y_mn^{ij,w}.
pub fn build_chsh_lp(
    observed: &IntervalObservation,
    policy: &TruncationPolicy,
    tag: BasisTag,
    target: ChshTarget,
    direction: Direction,
) -> Result<LinearProgram, BoundsError> {
    if !BasisTag::CHSH.contains(&tag) {
        return Err(BoundsError::NotChsh(tag.label()));
    }
    observed.check_sides()?;
    let m = policy.cutoff();
    let dim = m + 1;
    let num_vars = dim * dim * 4;
    let var = |mm: usize, nn: usize, i: usize, j: usize| ((mm * dim + nn) * 2 + i) * 2 + j;
    let signs = CorrelatorSigns;

    let mut objective = vec![0.0; num_vars];
    for i in 0..2 {
        for j in 0..2 {
            objective[var(1, 1, i, j)] = match target {
                ChshTarget::Numerator => signs.sign(i, j),
                ChshTarget::Denominator => 1.0,
            };
        }
    }
    let mut lp = LinearProgram::minimize(num_vars, objective);
    lp.direction = direction;

    for (k, &mu) in observed.alice_intensities.iter().enumerate() {
        for (l, &nu) in observed.bob_intensities.iter().enumerate() {
            let tail = policy.tail(mu, nu);
            let mut yield_row = vec![0.0; num_vars];
            let mut corr_row = vec![0.0; num_vars];
            for mm in 0..dim {
                for nn in 0..dim {
                    let p = poisson_joint(mu, nu, mm as u32, nn as u32);
                    for i in 0..2 {
                        for j in 0..2 {
                            yield_row[var(mm, nn, i, j)] = p;
                            corr_row[var(mm, nn, i, j)] = p * signs.sign(i, j);
                        }
                    }
                }
            }
            // Yield sum: truncated terms contribute in [0, 4 tail].
            let ys = observed.yield_sum(tag, k, l);
            lp.constraints.push(Constraint {
                coeffs: yield_row.clone(),
                relation: Relation::Le,
                rhs: ys.high,
            });
            lp.constraints.push(Constraint {
                coeffs: yield_row,
                relation: Relation::Ge,
                rhs: ys.low - 4.0 * tail,
            });
            // Correlator sum: truncated terms lie in [-2 tail, +2 tail].
            let cs = observed.corr_sum(tag, k, l);
            lp.constraints.push(Constraint {
                coeffs: corr_row.clone(),
                relation: Relation::Le,
                rhs: cs.high + 2.0 * tail,
            });
            lp.constraints.push(Constraint {
                coeffs: corr_row,
                relation: Relation::Ge,
                rhs: cs.low - 2.0 * tail,
            });
        }
    }
    Ok(lp)
}

/// Which side of C_11^w a term bound certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSense {
    Upper,
    Lower,
}

/// One CHSH correlator term: the LP intervals on numerator and denominator
/// and the resulting one-sided ratio bound.
#[derive(Debug, Clone, Copy)]
pub struct ChshTermBound {
    pub tag: BasisTag,
    pub numerator: Interval,
    pub denominator: Interval,
    pub sense: BoundSense,
    pub ratio: f64,
}

const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Sign-aware interval division of numerator by denominator, clamped to
/// [-1, 1]. A denominator that can reach (numerically) zero degrades the
/// bound to the trivial value.
pub fn bound_chsh_term(
    tag: BasisTag,
    numerator: Interval,
    denominator: Interval,
    sense: BoundSense,
) -> Result<ChshTermBound, BoundsError> {
    if denominator.low < -crate::lp::FEASIBILITY_TOL {
        return Err(BoundsError::NegativeDenominator {
            low: denominator.low,
            high: denominator.high,
        });
    }
    let den = Interval { low: denominator.low.max(0.0), high: denominator.high };
    let ratio = if den.low <= DEGENERATE_DENOMINATOR {
        match sense {
            BoundSense::Upper => 1.0,
            BoundSense::Lower => -1.0,
        }
    } else {
        let raw = match sense {
            BoundSense::Upper => {
                let d = if numerator.high >= 0.0 { den.low } else { den.high };
                numerator.high / d
            }
            BoundSense::Lower => {
                let d = if numerator.low >= 0.0 { den.high } else { den.low };
                numerator.low / d
            }
        };
        raw.clamp(-1.0, 1.0)
    };
    Ok(ChshTermBound { tag, numerator, denominator: den, sense, ratio })
}

/// g11 lower bound: C^QS_low + C^RS_low + C^RT_low - C^QT_high.
pub fn lower_bound_g11(terms: &[ChshTermBound; 4]) -> Result<f64, BoundsError> {
    let mut total = 0.0;
    for want in BasisTag::CHSH {
        let term = terms
            .iter()
            .find(|t| t.tag == want)
            .ok_or(BoundsError::WrongBoundSense)?;
        match want {
            BasisTag::Qt => {
                if term.sense != BoundSense::Upper {
                    return Err(BoundsError::WrongBoundSense);
                }
                total -= term.ratio;
            }
            _ => {
                if term.sense != BoundSense::Lower {
                    return Err(BoundsError::WrongBoundSense);
                }
                total += term.ratio;
            }
        }
    }
    Ok(total)
}

/// Status and objective of one LP solve, for the diagnostic view.
#[derive(Debug, Clone)]
pub struct LpDiagnostic {
    pub label: String,
    pub status: LpStatus,
    pub objective: f64,
    pub max_violation: f64,
}

/// Bounds on the CHSH-MDI-QKD single-photon quantities.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub y11_lower: f64,
    pub g11_lower: f64,
    pub terms: [ChshTermBound; 4],
    pub diagnostics: Vec<LpDiagnostic>,
}

impl BoundReport {
    pub fn csv_header() -> &'static str {
        "y11_lower,g11_lower,c_qs_low,c_rs_low,c_rt_low,c_qt_high"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.y11_lower,
            self.g11_lower,
            self.terms[0].ratio,
            self.terms[1].ratio,
            self.terms[2].ratio,
            self.terms[3].ratio
        )
    }

    pub fn diagnostic_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "y11_lower = {:.12e}", self.y11_lower).unwrap();
        writeln!(s, "g11_lower = {:.12e}", self.g11_lower).unwrap();
        for t in &self.terms {
            writeln!(
                s,
                "C11^{} {}: num [{:.6e}, {:.6e}] den [{:.6e}, {:.6e}] ratio {:.9}",
                t.tag.label(),
                match t.sense {
                    BoundSense::Upper => "upper",
                    BoundSense::Lower => "lower",
                },
                t.numerator.low,
                t.numerator.high,
                t.denominator.low,
                t.denominator.high,
                t.ratio
            )
            .unwrap();
        }
        for d in &self.diagnostics {
            writeln!(
                s,
                "lp {}: {:?} objective {:.12e} violation {:.3e}",
                d.label, d.status, d.objective, d.max_violation
            )
            .unwrap();
        }
        s
    }
}

/// Solves and returns the certified outer value: the attained objective
/// padded outward by the solver's optimality-gap certificate. Every caller
/// uses minima as lower bounds and maxima as upper bounds, so the padding
/// keeps the resulting bounds sound even when pricing stops at tolerance.
fn run_lp(lp: &LinearProgram, label: String, diagnostics: &mut Vec<LpDiagnostic>) -> Result<Option<f64>, BoundsError> {
    let sol = solve(lp)?;
    let (objective, violation) = if sol.status == LpStatus::Optimal {
        (sol.value, check_feasible(lp, &sol.assignment).max_violation)
    } else {
        (f64::NAN, f64::NAN)
    };
    diagnostics.push(LpDiagnostic { label, status: sol.status, objective, max_violation: violation });
    Ok(if sol.status == LpStatus::Optimal {
        Some(match lp.direction {
            Direction::Minimize => sol.value - sol.gap,
            Direction::Maximize => sol.value + sol.gap,
        })
    } else {
        None
    })
}

/// Full CHSH-MDI bound pipeline: the Y11 yield LP plus four LP solves per
/// CHSH combination, composed into the g11 lower bound. Infeasible solves
/// (which do not occur on simulator-generated data) degrade the affected
/// bound to its trivial value and are recorded in the diagnostics.
pub fn compute_bound_report(
    observed: &IntervalObservation,
    policy: &TruncationPolicy,
) -> Result<BoundReport, BoundsError> {
    let mut diagnostics = Vec::new();

    let yield_lp = build_yield_lp(observed, policy, BasisTag::Zz)?;
    let y11_lower = run_lp(&yield_lp, "min Y11^ZZ".into(), &mut diagnostics)?
        .map(|v| v.clamp(0.0, 1.0))
        .unwrap_or(0.0);

    let mut terms: Vec<ChshTermBound> = Vec::with_capacity(4);
    for tag in BasisTag::CHSH {
        let mut value = |target: ChshTarget, direction: Direction| -> Result<Option<f64>, BoundsError> {
            let lp = build_chsh_lp(observed, policy, tag, target, direction)?;
            let label = format!(
                "{} {}^{}",
                match direction {
                    Direction::Minimize => "min",
                    Direction::Maximize => "max",
                },
                match target {
                    ChshTarget::Numerator => "num",
                    ChshTarget::Denominator => "den",
                },
                tag.label()
            );
            run_lp(&lp, label, &mut diagnostics)
        };
        let num_low = value(ChshTarget::Numerator, Direction::Minimize)?;
        let num_high = value(ChshTarget::Numerator, Direction::Maximize)?;
        let den_low = value(ChshTarget::Denominator, Direction::Minimize)?;
        let den_high = value(ChshTarget::Denominator, Direction::Maximize)?;
        let sense = if tag == BasisTag::Qt { BoundSense::Upper } else { BoundSense::Lower };
        let term = match (num_low, num_high, den_low, den_high) {
            (Some(nl), Some(nh), Some(dl), Some(dh)) => bound_chsh_term(
                tag,
                Interval { low: nl, high: nh },
                Interval { low: dl.max(0.0), high: dh },
                sense,
            )?,
            // A failed solve yields the trivial bound.
            _ => ChshTermBound {
                tag,
                numerator: Interval { low: -4.0, high: 4.0 },
                denominator: Interval { low: 0.0, high: 4.0 },
                sense,
                ratio: if sense == BoundSense::Upper { 1.0 } else { -1.0 },
            },
        };
        terms.push(term);
    }
    let terms: [ChshTermBound; 4] = [terms[0], terms[1], terms[2], terms[3]];
    let g11_lower = lower_bound_g11(&terms)?;
    Ok(BoundReport { y11_lower, g11_lower, terms, diagnostics })
}

/// Bounds for the decoy MDI-QKD baseline: Y11^ZZ and Y11^XX lower bounds and
/// the single-photon X-basis error upper bound (error-weighted-gain upper
/// bound divided by the XX yield lower bound).
#[derive(Debug, Clone)]
pub struct MdiBoundReport {
    pub y11_zz_lower: f64,
    pub y11_xx_lower: f64,
    pub e11_xx_upper: f64,
    pub diagnostics: Vec<LpDiagnostic>,
}

pub fn compute_mdi_bounds(
    observed: &IntervalObservation,
    policy: &TruncationPolicy,
) -> Result<MdiBoundReport, BoundsError> {
    let mut diagnostics = Vec::new();
    let zz = build_yield_lp(observed, policy, BasisTag::Zz)?;
    let y11_zz_lower = run_lp(&zz, "min Y11^ZZ".into(), &mut diagnostics)?
        .map(|v| v.clamp(0.0, 1.0))
        .unwrap_or(0.0);
    let xx = build_yield_lp(observed, policy, BasisTag::Xx)?;
    let y11_xx_lower = run_lp(&xx, "min Y11^XX".into(), &mut diagnostics)?
        .map(|v| v.clamp(0.0, 1.0))
        .unwrap_or(0.0);
    let err = build_error_yield_lp(observed, policy, BasisTag::Xx)?;
    let b11_upper = run_lp(&err, "max B11^XX".into(), &mut diagnostics)?
        .map(|v| v.max(0.0))
        .unwrap_or(1.0);
    let e11_xx_upper = if y11_xx_lower <= DEGENERATE_DENOMINATOR {
        0.5
    } else {
        (b11_upper / y11_xx_lower).min(0.5)
    };
    Ok(MdiBoundReport { y11_zz_lower, y11_xx_lower, e11_xx_upper, diagnostics })
}
