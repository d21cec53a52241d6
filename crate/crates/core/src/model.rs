//! State space and update rules of two-unit deterministic systems.
//!
//! States are indexed lexicographically: `(0,0), (0,1), (1,0), (1,1)` map to
//! `0..4` with index `2a + b`. Every vector and matrix in the crate uses this
//! order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid state index {0}, expected 0..=3")]
    InvalidIndex(usize),
    #[error("invalid state `{0}`, expected two binary digits such as `10`")]
    InvalidState(String),
    #[error("unit {0} depends on both input units; only single-input rules are supported")]
    MultiInput(Unit),
}

/// One of the two units (channels) of the dyad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unit {
    A,
    B,
}

impl Unit {
    pub const BOTH: [Unit; 2] = [Unit::A, Unit::B];

    pub fn partner(self) -> Unit {
        match self {
            Unit::A => Unit::B,
            Unit::B => Unit::A,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::A => f.write_str("A"),
            Unit::B => f.write_str("B"),
        }
    }
}

/// Classical configuration `(a, b)` of the dyad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadState {
    a: u8,
    b: u8,
}

impl DyadState {
    /// All four states in lexicographic order.
    pub const ALL: [DyadState; 4] = [
        DyadState { a: 0, b: 0 },
        DyadState { a: 0, b: 1 },
        DyadState { a: 1, b: 0 },
        DyadState { a: 1, b: 1 },
    ];

    pub fn new(a: bool, b: bool) -> Self {
        DyadState {
            a: a as u8,
            b: b as u8,
        }
    }

    pub fn from_index(index: usize) -> Result<Self, ModelError> {
        DyadState::ALL
            .get(index)
            .copied()
            .ok_or(ModelError::InvalidIndex(index))
    }

    pub fn index(self) -> usize {
        2 * self.a as usize + self.b as usize
    }

    pub fn a(self) -> u8 {
        self.a
    }

    pub fn b(self) -> u8 {
        self.b
    }

    pub fn get(self, unit: Unit) -> u8 {
        match unit {
            Unit::A => self.a,
            Unit::B => self.b,
        }
    }

    pub fn with(self, unit: Unit, value: u8) -> Self {
        debug_assert!(value <= 1);
        match unit {
            Unit::A => DyadState { a: value, ..self },
            Unit::B => DyadState { b: value, ..self },
        }
    }

    /// The same configuration with the roles of A and B exchanged.
    pub fn transposed(self) -> Self {
        DyadState {
            a: self.b,
            b: self.a,
        }
    }
}

impl fmt::Display for DyadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a, self.b)
    }
}

impl FromStr for DyadState {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Vec<char> = s.trim().chars().collect();
        match bits.as_slice() {
            [a @ ('0' | '1'), b @ ('0' | '1')] => Ok(DyadState::new(*a == '1', *b == '1')),
            _ => Err(ModelError::InvalidState(s.to_string())),
        }
    }
}

impl Serialize for DyadState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.a, self.b].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DyadState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [a, b] = <[u8; 2]>::deserialize(deserializer)?;
        if a > 1 || b > 1 {
            return Err(serde::de::Error::custom(format!(
                "state entries must be bits, got [{a},{b}]"
            )));
        }
        Ok(DyadState { a, b })
    }
}

/// How one unit's next value is produced from the current configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitRule {
    Constant(u8),
    Copy(Unit),
    Not(Unit),
}

impl UnitRule {
    pub fn eval(self, state: DyadState) -> u8 {
        match self {
            UnitRule::Constant(v) => v,
            UnitRule::Copy(u) => state.get(u),
            UnitRule::Not(u) => 1 - state.get(u),
        }
    }

    /// The input unit this rule reads, if any.
    pub fn source(self) -> Option<Unit> {
        match self {
            UnitRule::Constant(_) => None,
            UnitRule::Copy(u) | UnitRule::Not(u) => Some(u),
        }
    }

    /// Value of the rule when its source unit takes `value`.
    pub fn respond(self, value: u8) -> u8 {
        match self {
            UnitRule::Constant(v) => v,
            UnitRule::Copy(_) => value,
            UnitRule::Not(_) => 1 - value,
        }
    }

    fn infer(column: [u8; 4], unit: Unit) -> Result<UnitRule, ModelError> {
        let states = DyadState::ALL;
        if column.iter().all(|&v| v == column[0]) {
            return Ok(UnitRule::Constant(column[0]));
        }
        for source in Unit::BOTH {
            let copies = states
                .iter()
                .zip(column)
                .all(|(s, v)| s.get(source) == v);
            if copies {
                return Ok(UnitRule::Copy(source));
            }
            let negates = states
                .iter()
                .zip(column)
                .all(|(s, v)| 1 - s.get(source) == v);
            if negates {
                return Ok(UnitRule::Not(source));
            }
        }
        Err(ModelError::MultiInput(unit))
    }
}

/// Deterministic transition rule of a two-unit system in which every unit
/// reads at most one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tpm2 {
    rule_a: UnitRule,
    rule_b: UnitRule,
}

impl Tpm2 {
    pub fn new(rule_a: UnitRule, rule_b: UnitRule) -> Self {
        Tpm2 { rule_a, rule_b }
    }

    /// `(a, b) -> (b, a)`.
    pub fn swap() -> Self {
        Tpm2::new(UnitRule::Copy(Unit::B), UnitRule::Copy(Unit::A))
    }

    /// `(a, b) -> (!b, !a)`.
    pub fn not_swap() -> Self {
        Tpm2::new(UnitRule::Not(Unit::B), UnitRule::Not(Unit::A))
    }

    pub fn identity() -> Self {
        Tpm2::new(UnitRule::Copy(Unit::A), UnitRule::Copy(Unit::B))
    }

    pub fn constant(state: DyadState) -> Self {
        Tpm2::new(
            UnitRule::Constant(state.a()),
            UnitRule::Constant(state.b()),
        )
    }

    /// Builds a rule from its table of output indices, inferring which input
    /// each unit reads.
    pub fn from_outputs(outputs: [usize; 4]) -> Result<Self, ModelError> {
        let mut next = [DyadState::ALL[0]; 4];
        for (slot, &o) in next.iter_mut().zip(&outputs) {
            *slot = DyadState::from_index(o)?;
        }
        let rule_a = UnitRule::infer(next.map(|s| s.a()), Unit::A)?;
        let rule_b = UnitRule::infer(next.map(|s| s.b()), Unit::B)?;
        Ok(Tpm2::new(rule_a, rule_b))
    }

    pub fn outputs(&self) -> [usize; 4] {
        DyadState::ALL.map(|s| self.apply(s).index())
    }

    pub fn rule(&self, unit: Unit) -> UnitRule {
        match unit {
            Unit::A => self.rule_a,
            Unit::B => self.rule_b,
        }
    }

    /// Input unit read by `unit`'s update, if any.
    pub fn dependency(&self, unit: Unit) -> Option<Unit> {
        self.rule(unit).source()
    }

    pub fn apply(&self, s: DyadState) -> DyadState {
        DyadState {
            a: self.rule_a.eval(s),
            b: self.rule_b.eval(s),
        }
    }

    /// Exact preimage of `s`, in lexicographic order.
    pub fn predecessors(&self, s: DyadState) -> Vec<DyadState> {
        DyadState::ALL
            .into_iter()
            .filter(|&p| self.apply(p) == s)
            .collect()
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = [false; 4];
        for s in DyadState::ALL {
            seen[self.apply(s).index()] = true;
        }
        seen.iter().all(|&v| v)
    }

    /// True when each unit's next value is read from the other unit.
    pub fn is_cross_coupled(&self) -> bool {
        Unit::BOTH
            .iter()
            .all(|&u| self.dependency(u) == Some(u.partner()))
    }

    /// The same system with the labels of A and B exchanged.
    pub fn relabeled(&self) -> Self {
        let flip = |r: UnitRule| match r {
            UnitRule::Constant(v) => UnitRule::Constant(v),
            UnitRule::Copy(u) => UnitRule::Copy(u.partner()),
            UnitRule::Not(u) => UnitRule::Not(u.partner()),
        };
        Tpm2::new(flip(self.rule_b), flip(self.rule_a))
    }

    /// Every single-input deterministic rule pair (36 systems).
    pub fn all_single_input() -> Vec<Tpm2> {
        let rules: Vec<UnitRule> = [UnitRule::Constant(0), UnitRule::Constant(1)]
            .into_iter()
            .chain(Unit::BOTH.iter().flat_map(|&u| [UnitRule::Copy(u), UnitRule::Not(u)]))
            .collect();
        rules
            .iter()
            .flat_map(|&ra| rules.iter().map(move |&rb| Tpm2::new(ra, rb)))
            .collect()
    }
}

impl FromStr for Tpm2 {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "swap" => Ok(Tpm2::swap()),
            "not-swap" | "notswap" => Ok(Tpm2::not_swap()),
            "identity" | "id" => Ok(Tpm2::identity()),
            other => Err(ModelError::InvalidState(other.to_string())),
        }
    }
}

impl Serialize for Tpm2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.outputs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tpm2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let outputs = <[usize; 4]>::deserialize(deserializer)?;
        Tpm2::from_outputs(outputs).map_err(serde::de::Error::custom)
    }
}
