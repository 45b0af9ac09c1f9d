//! Point-to-point reachability: does a given vector occur on the rounded orbit?

use num_rational::BigRational;
use thiserror::Error;

use crate::fpnum::{self, Exponent, FpNumber};
use crate::lds::Lds;
use crate::periodicity::{self, DetectOptions, Growth, PeriodicityError, PseudoPeriodCertificate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachError {
    #[error("target has {found} coordinates, the system has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Periodicity(#[from] PeriodicityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachMode {
    /// Exact decision through a pseudo-period certificate; non-negative
    /// systems only.
    Certified,
    /// Scan `x⁽⁰⁾ … x⁽ᵀᵐᵃˣ⁾`.
    Bounded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachOutcome {
    Reached(u64),
    Never,
    BoundExhausted,
}

pub fn point_reach(lds: &Lds, y: &[BigRational], mode: ReachMode) -> Result<ReachOutcome, ReachError> {
    point_reach_with(lds, y, mode, DetectOptions::default())
}

pub fn point_reach_with(
    lds: &Lds,
    y: &[BigRational],
    mode: ReachMode,
    opts: DetectOptions,
) -> Result<ReachOutcome, ReachError> {
    if y.len() != lds.dim() {
        return Err(ReachError::DimensionMismatch {
            expected: lds.dim(),
            found: y.len(),
        });
    }
    let target: Vec<FpNumber> = y.iter().map(|q| fpnum::round(q, lds.format())).collect();
    let representable = target.iter().zip(y).all(|(x, q)| x.to_rational() == *q);
    match mode {
        ReachMode::Bounded(t_max) => {
            if representable {
                for pt in lds.orbit().take(t_max as usize + 1) {
                    if pt.v == target {
                        return Ok(ReachOutcome::Reached(pt.t));
                    }
                }
            }
            Ok(ReachOutcome::BoundExhausted)
        }
        ReachMode::Certified => {
            if !lds.is_non_negative() {
                return Err(PeriodicityError::NegativeEntries.into());
            }
            if !representable {
                return Ok(ReachOutcome::Never);
            }
            match periodicity::assemble_certificate(lds, opts) {
                Ok(cert) => Ok(reach_with_certificate(lds, &cert, &target)),
                Err(PeriodicityError::PhaseGrowthMismatch { .. }) => {
                    // decide on the blown-up system, one phase at a time
                    let pc = periodicity::certify_phased(lds, opts)?;
                    let zero = lds.format().zero();
                    let best = (0..pc.phased.factor())
                        .filter_map(|i| {
                            let lifted = pc.phased.lift_vector(&target, i, zero.clone());
                            match reach_with_certificate(pc.phased.lds(), &pc.certificate, &lifted) {
                                ReachOutcome::Reached(t) => Some(t),
                                _ => None,
                            }
                        })
                        .min();
                    Ok(best.map_or(ReachOutcome::Never, ReachOutcome::Reached))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Earliest `t` with `x⁽ᵗ⁾ = target` under a verified certificate.
pub fn reach_with_certificate(lds: &Lds, cert: &PseudoPeriodCertificate, target: &[FpNumber]) -> ReachOutcome {
    for pt in lds.orbit().take(cert.start as usize) {
        if pt.v == target {
            return ReachOutcome::Reached(pt.t);
        }
    }
    // along phase r the orbit is snapshot[r] scaled by b^{k·α}; each
    // coordinate pins k down or leaves it free
    let mut best: Option<u64> = None;
    'phase: for (r, snap) in cert.snapshot.iter().enumerate() {
        let mut fixed: Option<i64> = None;
        for ((s, y), g) in snap.iter().zip(target).zip(&cert.growth) {
            match (s.exponent(), y.exponent()) {
                (Exponent::NegInf, Exponent::NegInf) => continue,
                (Exponent::Finite(es), Exponent::Finite(ey)) => {
                    if s.digits() != y.digits() || s.is_negative() != y.is_negative() {
                        continue 'phase;
                    }
                    let Growth::Finite(a) = *g else { continue 'phase };
                    let diff = ey - es;
                    let k = if a == 0 {
                        if diff != 0 {
                            continue 'phase;
                        }
                        continue;
                    } else if diff % a == 0 && diff / a >= 0 {
                        diff / a
                    } else {
                        continue 'phase;
                    };
                    match fixed {
                        Some(f) if f != k => continue 'phase,
                        _ => fixed = Some(k),
                    }
                }
                _ => continue 'phase,
            }
        }
        let t = cert.start + r as u64 + fixed.unwrap_or(0) as u64 * cert.period;
        best = Some(best.map_or(t, |b| b.min(t)));
    }
    best.map_or(ReachOutcome::Never, ReachOutcome::Reached)
}
