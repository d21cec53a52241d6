//! Q-shapes of dyad states and distances between them.
//!
//! A Q-shape is four distributions over the dyad's state space, in the row
//! order A-effect, A-cause, B-effect, B-cause. Each row holds one part fixed,
//! replaces the other unit by an equiprobable bit and propagates the result
//! one step forward (effect) or backward (cause).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DyadState, Tpm2, Unit};
use crate::phi::{self, PhiError};

pub type Distribution4 = [f64; 4];

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QShapeError {
    #[error(transparent)]
    Phi(#[from] PhiError),
    #[error("unit {0} does not read its partner")]
    NotCrossCoupled(Unit),
    #[error("transition rule is not a bijection; cause rows are undefined")]
    NotBijective,
    #[error("not a probability distribution: {0:?}")]
    InvalidDistribution(Distribution4),
    #[error("KL divergence undefined: q[{index}] = 0 where p[{index}] > 0")]
    KlUndefined { index: usize },
    #[error("invalid ground metric: {0}")]
    InvalidGround(&'static str),
    #[error("invalid distance table: {0}")]
    InvalidTable(&'static str),
}

pub fn is_distribution(p: &Distribution4) -> bool {
    p.iter().all(|&x| x >= 0.0 && x.is_finite())
        && (p.iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QShape {
    pub rows: [Distribution4; 4],
    pub source_state: DyadState,
}

impl QShape {
    pub const ROW_LABELS: [&'static str; 4] = ["A-effect", "A-cause", "B-effect", "B-cause"];

    /// Each part as a point in the 8-dimensional space of (effect, cause)
    /// distribution pairs: `[A, B]`.
    pub fn part_coordinates(&self) -> [[f64; 8]; 2] {
        let mut out = [[0.0; 8]; 2];
        for (part, coords) in out.iter_mut().enumerate() {
            coords[..4].copy_from_slice(&self.rows[2 * part]);
            coords[4..].copy_from_slice(&self.rows[2 * part + 1]);
        }
        out
    }
}

fn effect_row(tpm: &Tpm2, fixed: Unit, state: DyadState) -> Distribution4 {
    let mut row = [0.0; 4];
    for v in 0..=1 {
        let noised = state.with(fixed.partner(), v);
        row[tpm.apply(noised).index()] += phi::UNCONSTRAINED[v as usize];
    }
    row
}

fn cause_row(tpm: &Tpm2, fixed: Unit, state: DyadState) -> Distribution4 {
    let mut row = [0.0; 4];
    for v in 0..=1 {
        let current = state.with(fixed.partner(), v);
        let pre = tpm.predecessors(current);
        let share = phi::UNCONSTRAINED[v as usize] / pre.len() as f64;
        for p in pre {
            row[p.index()] += share;
        }
    }
    row
}

fn check_dyad_like(tpm: &Tpm2) -> Result<(), QShapeError> {
    for unit in Unit::BOTH {
        if tpm.dependency(unit) != Some(unit.partner()) {
            return Err(QShapeError::NotCrossCoupled(unit));
        }
    }
    if !tpm.is_bijective() {
        return Err(QShapeError::NotBijective);
    }
    Ok(())
}

pub fn build_qshape(tpm: &Tpm2, state: DyadState) -> Result<QShape, QShapeError> {
    check_dyad_like(tpm)?;
    Ok(QShape {
        rows: [
            effect_row(tpm, Unit::A, state),
            cause_row(tpm, Unit::A, state),
            effect_row(tpm, Unit::B, state),
            cause_row(tpm, Unit::B, state),
        ],
        source_state: state,
    })
}

/// Q-shape in terms of unit φ values and the partner states they were
/// maximized over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QShape4Style {
    #[serde(rename = "phi_A")]
    pub phi_a: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
    /// State of B over which A's φ is attained.
    #[serde(rename = "maximizer_A")]
    pub maximizer_a: u8,
    /// State of A over which B's φ is attained.
    #[serde(rename = "maximizer_B")]
    pub maximizer_b: u8,
}

pub fn build_qshape_iit4(tpm: &Tpm2, state: DyadState) -> Result<QShape4Style, QShapeError> {
    check_dyad_like(tpm)?;
    let a = phi::phi_unit(tpm, Unit::A, state)?;
    let b = phi::phi_unit(tpm, Unit::B, state)?;
    Ok(QShape4Style {
        phi_a: a.phi,
        phi_b: b.phi,
        maximizer_a: a.maximizer.ok_or(QShapeError::NotCrossCoupled(Unit::A))?,
        maximizer_b: b.maximizer.ok_or(QShapeError::NotCrossCoupled(Unit::B))?,
    })
}

/// Distance between two distributions over the four dyad states.
#[derive(Debug, Clone, PartialEq)]
pub enum RowMetric {
    /// `½ Σ |p_i − q_i|`.
    TotalVariation,
    /// Optimal transport cost under the given ground distances.
    EarthMover { ground: [[f64; 4]; 4] },
    /// `Σ p_i log2(p_i / q_i)`, refusing to return infinity.
    GuardedKl,
}

impl Default for RowMetric {
    fn default() -> Self {
        RowMetric::TotalVariation
    }
}

impl RowMetric {
    /// Earth mover's distance with unit cost between distinct states.
    pub fn discrete_emd() -> Self {
        let mut ground = [[1.0; 4]; 4];
        for (i, row) in ground.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        RowMetric::EarthMover { ground }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RowMetric::TotalVariation => "tv",
            RowMetric::EarthMover { .. } => "emd",
            RowMetric::GuardedKl => "kl",
        }
    }

    pub fn is_default(&self) -> bool {
        matches!(self, RowMetric::TotalVariation)
    }
}

impl fmt::Display for RowMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RowMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tv" | "total-variation" => Ok(RowMetric::TotalVariation),
            "emd" => Ok(RowMetric::discrete_emd()),
            "kl" => Ok(RowMetric::GuardedKl),
            other => Err(format!("unknown metric `{other}` (expected tv, emd or kl)")),
        }
    }
}

pub fn row_distance(
    p: &Distribution4,
    q: &Distribution4,
    metric: &RowMetric,
) -> Result<f64, QShapeError> {
    for r in [p, q] {
        if !is_distribution(r) {
            return Err(QShapeError::InvalidDistribution(*r));
        }
    }
    match metric {
        RowMetric::TotalVariation => {
            Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
        }
        RowMetric::EarthMover { ground } => earth_mover(p, q, ground),
        RowMetric::GuardedKl => {
            let mut total = 0.0;
            for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
                if pi > 0.0 {
                    if qi == 0.0 {
                        return Err(QShapeError::KlUndefined { index: i });
                    }
                    total += pi * (pi / qi).log2();
                }
            }
            Ok(total)
        }
    }
}

fn validate_ground(ground: &[[f64; 4]; 4]) -> Result<(), QShapeError> {
    for i in 0..4 {
        if ground[i][i] != 0.0 {
            return Err(QShapeError::InvalidGround("non-zero diagonal"));
        }
        for j in 0..4 {
            if !(ground[i][j] >= 0.0 && ground[i][j].is_finite()) {
                return Err(QShapeError::InvalidGround("entries must be finite and non-negative"));
            }
            if ground[i][j] != ground[j][i] {
                return Err(QShapeError::InvalidGround("not symmetric"));
            }
        }
    }
    Ok(())
}

/// Minimum-cost transport of `p` onto `q` by successive shortest paths on the
/// bipartite supply/demand network.
fn earth_mover(
    p: &Distribution4,
    q: &Distribution4,
    ground: &[[f64; 4]; 4],
) -> Result<f64, QShapeError> {
    validate_ground(ground)?;
    const EPS: f64 = 1e-15;
    // node 0 = source, 1..=4 supply, 5..=8 demand, 9 = sink
    const N: usize = 10;
    let mut cap = [[0.0f64; N]; N];
    let mut cost = [[0.0f64; N]; N];
    for i in 0..4 {
        cap[0][1 + i] = p[i];
        cap[5 + i][9] = q[i];
        for j in 0..4 {
            cap[1 + i][5 + j] = f64::INFINITY;
            cost[1 + i][5 + j] = ground[i][j];
            cost[5 + j][1 + i] = -ground[i][j];
        }
    }
    let mut total_cost = 0.0;
    let mut shipped = 0.0;
    while shipped < 1.0 - EPS {
        let mut dist = [f64::INFINITY; N];
        let mut prev = [usize::MAX; N];
        dist[0] = 0.0;
        for _ in 0..N {
            let mut changed = false;
            for u in 0..N {
                if dist[u].is_infinite() {
                    continue;
                }
                for v in 0..N {
                    if cap[u][v] > EPS && dist[u] + cost[u][v] < dist[v] - 1e-14 {
                        dist[v] = dist[u] + cost[u][v];
                        prev[v] = u;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[9].is_infinite() {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = 9;
        while v != 0 {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = 9;
        while v != 0 {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
        total_cost += bottleneck * dist[9];
        shipped += bottleneck;
    }
    Ok(total_cost.max(0.0))
}

pub fn qshape_distance(q: &QShape, other: &QShape, metric: &RowMetric) -> Result<f64, QShapeError> {
    q.rows
        .iter()
        .zip(&other.rows)
        .map(|(a, b)| row_distance(a, b, metric))
        .sum()
}

/// Symmetric, zero-diagonal table of non-negative distances indexed by dyad
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 4]; 4]", into = "[[f64; 4]; 4]")]
pub struct DistanceTable([[f64; 4]; 4]);

impl DistanceTable {
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self, QShapeError> {
        for i in 0..4 {
            if entries[i][i] != 0.0 {
                return Err(QShapeError::InvalidTable("diagonal must be zero"));
            }
            for j in 0..4 {
                let d = entries[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(QShapeError::InvalidTable("entries must be finite and non-negative"));
                }
                if d != entries[j][i] {
                    return Err(QShapeError::InvalidTable("table must be symmetric"));
                }
            }
        }
        Ok(DistanceTable(entries))
    }

    pub fn zeros() -> Self {
        DistanceTable([[0.0; 4]; 4])
    }

    /// Table with every off-diagonal entry equal to `d`.
    pub fn uniform(d: f64) -> Result<Self, QShapeError> {
        let mut e = [[d; 4]; 4];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        DistanceTable::new(e)
    }

    /// The dyad table as commonly published, with `D(00, 11) = 2`. Computing
    /// the distance from the Q-shapes themselves gives 4 for that pair (see
    /// [`DistanceTable::swap_dyad`]); this table is kept because the classic
    /// twelve-minimizer eigenvalue problem is posed on it.
    pub fn published_swap() -> Self {
        DistanceTable([
            [0.0, 2.0, 2.0, 2.0],
            [2.0, 0.0, 4.0, 2.0],
            [2.0, 4.0, 0.0, 2.0],
            [2.0, 2.0, 2.0, 0.0],
        ])
    }

    /// The SWAP dyad's table computed from its Q-shapes under total variation.
    pub fn swap_dyad() -> Self {
        distance_table(&Tpm2::swap(), &RowMetric::TotalVariation)
            .expect("SWAP is bijective and cross-coupled")
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn between(&self, s: DyadState, t: DyadState) -> f64 {
        self.0[s.index()][t.index()]
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn max_entry(&self) -> f64 {
        self.0.iter().flatten().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<[[f64; 4]; 4]> for DistanceTable {
    type Error = QShapeError;

    fn try_from(value: [[f64; 4]; 4]) -> Result<Self, Self::Error> {
        DistanceTable::new(value)
    }
}

impl From<DistanceTable> for [[f64; 4]; 4] {
    fn from(t: DistanceTable) -> Self {
        t.0
    }
}

pub fn all_qshapes(tpm: &Tpm2) -> Result<[QShape; 4], QShapeError> {
    let shapes = DyadState::ALL
        .iter()
        .map(|&s| build_qshape(tpm, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(shapes.try_into().expect("four states"))
}

pub fn distance_table(tpm: &Tpm2, metric: &RowMetric) -> Result<DistanceTable, QShapeError> {
    let shapes = all_qshapes(tpm)?;
    let mut entries = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = qshape_distance(&shapes[i], &shapes[j], metric)?;
            entries[i][j] = d;
            entries[j][i] = d;
        }
    }
    DistanceTable::new(entries)
}
