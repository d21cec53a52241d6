//! Integrated cause and effect information of single units and the system
//! total for two-unit deterministic systems.
//!
//! A unit's effect information is measured on its partner's next state and its
//! cause information on its partner's previous state. Partitioning replaces
//! the source unit by an equiprobable bit. All values are in bits.

use serde::Serialize;
use thiserror::Error;

use crate::model::{DyadState, Tpm2, Unit};

/// Uniform prior over a unit's unconstrained state.
pub const UNCONSTRAINED: [f64; 2] = [0.5, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cause,
    Effect,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("unit {target} does not read unit {input}")]
    DependencyMismatch { input: Unit, target: Unit },
    #[error("no {direction:?} link between unit {unit} and its partner")]
    NotCrossCoupled { unit: Unit, direction: Direction },
    #[error("current state of unit {unit} has zero probability under the rule")]
    ZeroMarginal { unit: Unit },
}

/// Probability distribution over one unit's two states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitRepertoire {
    pub unit: Unit,
    pub direction: Direction,
    pub distribution: [f64; 2],
}

/// Intrinsic difference `p * log2(p / q)` with `0 * log(0 / q) = 0`.
pub fn intrinsic_difference(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).log2()
    }
}

/// Posterior over the partner's previous state given a likelihood table.
/// `None` when the evidence has zero marginal probability.
pub fn bayes_posterior(likelihood: [f64; 2], prior: [f64; 2]) -> Option<[f64; 2]> {
    let marginal: f64 = likelihood.iter().zip(prior).map(|(l, p)| l * p).sum();
    if marginal <= 0.0 {
        return None;
    }
    Some([0, 1].map(|w| likelihood[w] * prior[w] / marginal))
}

/// Probability that `target` takes `target_state` on the next step when its
/// input `source` is replaced by an equiprobable bit.
pub fn noised_effect_prob(
    tpm: &Tpm2,
    source: Unit,
    target: Unit,
    target_state: u8,
) -> Result<f64, PhiError> {
    let rule = tpm.rule(target);
    if rule.source() != Some(source) {
        return Err(PhiError::DependencyMismatch { input: source, target });
    }
    Ok((0..=1u8)
        .map(|x| UNCONSTRAINED[x as usize] * f64::from(rule.respond(x) == target_state))
        .sum())
}

/// Constrained effect repertoire of `unit` over its partner's next state.
pub fn effect_repertoire(
    tpm: &Tpm2,
    unit: Unit,
    state: DyadState,
) -> Result<UnitRepertoire, PhiError> {
    let partner = unit.partner();
    let rule = tpm.rule(partner);
    if rule.source() != Some(unit) {
        return Err(PhiError::NotCrossCoupled {
            unit,
            direction: Direction::Effect,
        });
    }
    let next = rule.respond(state.get(unit));
    Ok(UnitRepertoire {
        unit: partner,
        direction: Direction::Effect,
        distribution: [0, 1].map(|v| f64::from(next == v)),
    })
}

/// Bayes-inverted cause repertoire of `unit` over its partner's previous state.
pub fn cause_repertoire(
    tpm: &Tpm2,
    unit: Unit,
    state: DyadState,
) -> Result<UnitRepertoire, PhiError> {
    let rule = tpm.rule(unit);
    if rule.source() != Some(unit.partner()) {
        return Err(PhiError::NotCrossCoupled {
            unit,
            direction: Direction::Cause,
        });
    }
    let current = state.get(unit);
    let likelihood = [0, 1].map(|w| f64::from(rule.respond(w) == current));
    let posterior =
        bayes_posterior(likelihood, UNCONSTRAINED).ok_or(PhiError::ZeroMarginal { unit })?;
    Ok(UnitRepertoire {
        unit: unit.partner(),
        direction: Direction::Cause,
        distribution: posterior,
    })
}

/// Integrated information in one direction and the partner state it was
/// maximized over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Directed {
    pub bits: f64,
    pub partner_state: u8,
}

fn argmax(terms: [f64; 2]) -> Directed {
    // ties resolve to the lower state
    let w = if terms[1] > terms[0] { 1 } else { 0 };
    Directed {
        bits: terms[w as usize],
        partner_state: w,
    }
}

pub fn phi_effect(tpm: &Tpm2, unit: Unit, state: DyadState) -> Result<Directed, PhiError> {
    let constrained = effect_repertoire(tpm, unit, state)?;
    let partner = unit.partner();
    let mut terms = [0.0; 2];
    for v in 0..=1u8 {
        let noised = noised_effect_prob(tpm, unit, partner, v)?;
        terms[v as usize] = intrinsic_difference(constrained.distribution[v as usize], noised);
    }
    Ok(argmax(terms))
}

pub fn phi_cause(tpm: &Tpm2, unit: Unit, state: DyadState) -> Result<Directed, PhiError> {
    let posterior = cause_repertoire(tpm, unit, state)?.distribution;
    let rule = tpm.rule(unit);
    let current = state.get(unit);
    let likelihood = [0, 1].map(|w| f64::from(rule.respond(w) == current));
    let noised = noised_effect_prob(tpm, unit.partner(), unit, current)?;
    let terms = [0, 1].map(|w| {
        if posterior[w] == 0.0 {
            0.0
        } else {
            posterior[w] * (likelihood[w] / noised).log2()
        }
    });
    Ok(argmax(terms))
}

/// Per-unit breakdown. A direction without a causal link contributes zero
/// and is listed in `missing`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitPhi {
    pub unit: Unit,
    pub phi_effect: f64,
    pub phi_cause: f64,
    pub phi: f64,
    pub effect_partner_state: Option<u8>,
    pub cause_partner_state: Option<u8>,
    /// Partner state on the side that attains the minimum (effect on ties).
    pub maximizer: Option<u8>,
    pub missing: Vec<Direction>,
}

pub fn phi_unit(tpm: &Tpm2, unit: Unit, state: DyadState) -> Result<UnitPhi, PhiError> {
    let mut missing = Vec::new();
    let mut lift = |r: Result<Directed, PhiError>| match r {
        Ok(d) => Ok(Some(d)),
        Err(PhiError::NotCrossCoupled { direction, .. }) => {
            missing.push(direction);
            Ok(None)
        }
        Err(e) => Err(e),
    };
    let effect = lift(phi_effect(tpm, unit, state))?;
    let cause = lift(phi_cause(tpm, unit, state))?;
    let phi_e = effect.map_or(0.0, |d| d.bits);
    let phi_c = cause.map_or(0.0, |d| d.bits);
    let maximizer = if phi_e <= phi_c {
        effect.map(|d| d.partner_state)
    } else {
        cause.map(|d| d.partner_state)
    };
    Ok(UnitPhi {
        unit,
        phi_effect: phi_e,
        phi_cause: phi_c,
        phi: phi_e.min(phi_c),
        effect_partner_state: effect.map(|d| d.partner_state),
        cause_partner_state: cause.map(|d| d.partner_state),
        maximizer,
        missing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizingStates {
    #[serde(rename = "A")]
    pub a: Option<u8>,
    #[serde(rename = "B")]
    pub b: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiFlag {
    pub unit: Unit,
    pub direction: Direction,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub state: DyadState,
    #[serde(rename = "phi_e_A")]
    pub phi_e_a: f64,
    #[serde(rename = "phi_c_A")]
    pub phi_c_a: f64,
    #[serde(rename = "phi_e_B")]
    pub phi_e_b: f64,
    #[serde(rename = "phi_c_B")]
    pub phi_c_b: f64,
    #[serde(rename = "phi_A")]
    pub phi_a: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
    pub big_phi: f64,
    pub maximizing_states: MaximizingStates,
    pub flags: Vec<PhiFlag>,
}

pub fn big_phi(tpm: &Tpm2, state: DyadState) -> Result<PhiReport, PhiError> {
    let a = phi_unit(tpm, Unit::A, state)?;
    let b = phi_unit(tpm, Unit::B, state)?;
    let flags = [&a, &b]
        .iter()
        .flat_map(|u| {
            u.missing.iter().map(|&direction| PhiFlag {
                unit: u.unit,
                direction,
                reason: "NotCrossCoupled",
            })
        })
        .collect();
    Ok(PhiReport {
        state,
        phi_e_a: a.phi_effect,
        phi_c_a: a.phi_cause,
        phi_e_b: b.phi_effect,
        phi_c_b: b.phi_cause,
        phi_a: a.phi,
        phi_b: b.phi,
        big_phi: a.phi + b.phi,
        maximizing_states: MaximizingStates {
            a: a.maximizer,
            b: b.maximizer,
        },
        flags,
    })
}
