use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::Path;

use dyad_core::model::{DyadState, Tpm2};
use dyad_core::optimizer::{self, EigenAssignment, OptimizationResult, OptimizerError};
use dyad_core::phi::{self, PhiError, PhiReport};
use dyad_core::qdyn::{
    self, build_collapse_operator, dyad_input_state, prepare_dyad_superposition, CollapseDynamics,
    DensityMatrix4, Hermitian4, PureState4, QdynError, SdeConfig, C64,
};
use dyad_core::qiit::{self, QiitError, QuantumUnitPhi};
use dyad_core::qshape::{self, DistanceTable, QShapeError, RowMetric};
use serde::{Deserialize, Serialize};

use crate::args::{
    DistancesArgs, DynamicsArgs, Format, Hamiltonian, LindbladArgs, OptimizeArgs, PhiArgs, QphiArgs,
    QshapeArgs, SdeArgs,
};
use crate::output::{write_path, Emitted, PathRow};

/// Failure of a command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<PhiError> for CliError {
    fn from(e: PhiError) -> Self {
        match e {
            PhiError::ZeroMarginal { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<QShapeError> for CliError {
    fn from(e: QShapeError) -> Self {
        match e {
            QShapeError::Phi(p) => p.into(),
            QShapeError::KlUndefined { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InfeasibleTable => CliError::Numerical(e.to_string()),
            OptimizerError::InvalidGrid { .. } => CliError::Usage(e.to_string()),
        }
    }
}

impl From<QdynError> for CliError {
    fn from(e: QdynError) -> Self {
        match e {
            QdynError::StepTooLarge { .. } | QdynError::GridMismatch(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<QiitError> for CliError {
    fn from(e: QiitError) -> Self {
        match e {
            QiitError::Dynamics(d) => d.into(),
            QiitError::InfiniteDivergence | QiitError::NotUnitary(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn parse_state(s: &str) -> Result<DyadState, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("invalid state `{s}`: expected one of 00, 01, 10, 11")))
}

fn parse_tpm(s: &str) -> Result<Tpm2, CliError> {
    if s.contains(',') {
        let outputs: Vec<usize> = s
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("invalid transition rule `{s}`")))?;
        let outputs: [usize; 4] = outputs
            .try_into()
            .map_err(|_| CliError::Usage(format!("transition rule `{s}` needs four successor indices")))?;
        return Tpm2::from_outputs(outputs).map_err(|e| CliError::Usage(e.to_string()));
    }
    s.parse().map_err(|_| {
        CliError::Usage(format!("unknown transition rule `{s}`: expected swap, not-swap, identity or four indices"))
    })
}

fn parse_metric(s: &str) -> Result<RowMetric, CliError> {
    s.parse().map_err(CliError::Usage)
}

#[derive(Serialize)]
struct PhiOutput {
    tpm: Tpm2,
    #[serde(flatten)]
    report: PhiReport,
}

pub fn cmd_phi(args: &PhiArgs) -> Result<Emitted, CliError> {
    let tpm = parse_tpm(&args.tpm)?;
    let state = parse_state(&args.state)?;
    let report = phi::big_phi(&tpm, state)?;
    Emitted::json(&PhiOutput { tpm, report })
}

#[derive(Serialize)]
struct PartPoints {
    #[serde(rename = "A")]
    a: [f64; 8],
    #[serde(rename = "B")]
    b: [f64; 8],
}

#[derive(Serialize)]
struct PairDistance {
    to: DyadState,
    distance: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct QshapeOutput {
    tpm: Tpm2,
    state: DyadState,
    row_labels: [&'static str; 4],
    rows: [[f64; 4]; 4],
    coordinates: PartPoints,
    metric: &'static str,
    default_metric: bool,
    distances: Vec<PairDistance>,
}

fn points(q: &qshape::QShape) -> PartPoints {
    let [a, b] = q.part_coordinates();
    PartPoints { a, b }
}

/// A distance that is undefined for the chosen metric is reported, not fatal.
fn guarded(d: Result<f64, QShapeError>) -> Result<(Option<f64>, Option<String>), CliError> {
    match d {
        Ok(v) => Ok((Some(v), None)),
        Err(e @ QShapeError::KlUndefined { .. }) => Ok((None, Some(e.to_string()))),
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_qshape(args: &QshapeArgs) -> Result<Emitted, CliError> {
    let tpm = parse_tpm(&args.tpm)?;
    let state = parse_state(&args.state)?;
    let metric = parse_metric(&args.metric)?;
    let shapes = qshape::all_qshapes(&tpm)?;
    let q = &shapes[state.index()];
    let mut distances = Vec::new();
    for other in DyadState::ALL {
        if other == state {
            continue;
        }
        let (distance, error) = guarded(qshape::qshape_distance(q, &shapes[other.index()], &metric))?;
        distances.push(PairDistance { to: other, distance, error });
    }
    Emitted::json(&QshapeOutput {
        tpm,
        state,
        row_labels: qshape::QShape::ROW_LABELS,
        rows: q.rows,
        coordinates: points(q),
        metric: metric.name(),
        default_metric: metric.is_default(),
        distances,
    })
}

#[derive(Serialize)]
struct DistancesOutput {
    tpm: Tpm2,
    metric: &'static str,
    default_metric: bool,
    states: [DyadState; 4],
    table: [[Option<f64>; 4]; 4],
    undefined: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coordinates: Option<Vec<PartPoints>>,
}

pub fn cmd_distances(args: &DistancesArgs) -> Result<Emitted, CliError> {
    let tpm = parse_tpm(&args.tpm)?;
    let metric = parse_metric(&args.metric)?;
    let shapes = qshape::all_qshapes(&tpm)?;
    let mut table = [[None; 4]; 4];
    let mut undefined = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let (d, err) = guarded(qshape::qshape_distance(&shapes[i], &shapes[j], &metric))?;
            table[i][j] = d;
            if let Some(e) = err {
                undefined.push(format!("{} -> {}: {e}", DyadState::ALL[i], DyadState::ALL[j]));
            }
        }
    }
    match args.format {
        Format::Json => Emitted::json(&DistancesOutput {
            tpm,
            metric: metric.name(),
            default_metric: metric.is_default(),
            states: DyadState::ALL,
            table,
            undefined,
            coordinates: args.coordinates.then(|| shapes.iter().map(points).collect()),
        }),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["state", "00", "01", "10", "11"]).map_err(csv_err)?;
            for (s, row) in DyadState::ALL.iter().zip(&table) {
                let mut rec = vec![s.to_string()];
                rec.extend(row.iter().map(|d| d.map_or(String::new(), |v| v.to_string())));
                w.write_record(&rec).map_err(csv_err)?;
            }
            Ok(Emitted::Text(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?))
        }
    }
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Serialize)]
struct OracleReport {
    granularity: f64,
    bound: f64,
    minimizers: Vec<EigenAssignment>,
    optimal_sum: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct OptimizeOutput {
    table_source: String,
    table: DistanceTable,
    #[serde(flatten)]
    result: OptimizationResult,
    default_pick: EigenAssignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn load_table(source: &str) -> Result<DistanceTable, CliError> {
    match source {
        "reference" => Ok(DistanceTable::published_swap()),
        "computed" => Ok(DistanceTable::swap_dyad()),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read table `{path}`: {e}")))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid table `{path}`: {e}")))
        }
    }
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<Emitted, CliError> {
    let table = load_table(&args.table)?;
    let result = optimizer::solve(&table)?;
    let oracle = if args.oracle {
        let bound = args.bound.unwrap_or(3.0 * table.max_entry());
        let grid = optimizer::grid_oracle(&table, args.granularity, bound)?;
        Some(OracleReport {
            granularity: args.granularity,
            bound,
            agrees: grid == result,
            minimizers: grid.minimizers,
            optimal_sum: grid.optimal_sum,
        })
    } else {
        None
    };
    Emitted::json(&OptimizeOutput {
        table_source: args.table.clone(),
        table,
        default_pick: result.default_pick(),
        result,
        oracle,
    })
}

#[derive(Serialize)]
struct DynamicsEcho {
    eigenvalues: [f64; 4],
    lambda: f64,
    hamiltonian: &'static str,
    initial: String,
    dt: f64,
    t: f64,
    sample_every: usize,
}

struct Prepared {
    dynamics: CollapseDynamics,
    psi0: PureState4,
    echo: DynamicsEcho,
    pair: Option<(usize, usize)>,
}

fn prepare(d: &DynamicsArgs, t: f64) -> Result<Prepared, CliError> {
    let eigenvalues: [f64; 4] = d
        .eigenvalues
        .clone()
        .try_into()
        .map_err(|_| CliError::Usage("--eigenvalues needs four comma-separated values".into()))?;
    if d.sample_every == 0 {
        return Err(CliError::Usage("--sample-every must be positive".into()));
    }
    let (hamiltonian, h_name) = match d.hamiltonian {
        Hamiltonian::Zero => (Hermitian4::zero(), "zero"),
        Hamiltonian::Swap => (Hermitian4::swap_generator(), "swap"),
    };
    let operator = build_collapse_operator(&EigenAssignment(eigenvalues));
    let dynamics = CollapseDynamics::new(hamiltonian, operator, d.lambda)?;
    let zero = C64::new(0.0, 0.0);
    let (psi0, initial, pair) = if d.uniform {
        (PureState4::new([C64::new(0.5, 0.0); 4])?, "uniform".to_string(), None)
    } else {
        let s = parse_state(&d.pair[0])?;
        let u = parse_state(&d.pair[1])?;
        if s == u {
            return Err(CliError::Usage("--pair needs two different states".into()));
        }
        let mut amps = [zero; 4];
        amps[s.index()] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[u.index()] = C64::new(FRAC_1_SQRT_2, 0.0);
        let (i, k) = (s.index().min(u.index()), s.index().max(u.index()));
        (PureState4::new(amps)?, format!("pair {s} {u}"), Some((i, k)))
    };
    Ok(Prepared {
        dynamics,
        psi0,
        pair,
        echo: DynamicsEcho {
            eigenvalues,
            lambda: d.lambda,
            hamiltonian: h_name,
            initial,
            dt: d.dt,
            t,
            sample_every: d.sample_every,
        },
    })
}

fn row(time: f64, rho: &DensityMatrix4) -> PathRow {
    PathRow {
        time,
        populations: rho.populations(),
        coherences: rho.coherences(),
    }
}

#[derive(Serialize)]
struct PairCoherence {
    pair: [DyadState; 2],
    value: f64,
    /// Closed form for the collapse term alone; absent when H ≠ 0.
    analytic: Option<f64>,
}

#[derive(Serialize)]
struct LindbladOutput {
    kind: &'static str,
    #[serde(flatten)]
    config: DynamicsEcho,
    final_populations: [f64; 4],
    final_coherences: [f64; 6],
    pair_coherence: Option<PairCoherence>,
    files: Vec<String>,
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

pub fn cmd_lindblad(args: &LindbladArgs) -> Result<Emitted, CliError> {
    let p = prepare(&args.dynamics, args.t)?;
    let d = &args.dynamics;
    let rho0 = p.psi0.projector();
    let path = qdyn::lindblad_path(&rho0, &p.dynamics, args.t, d.dt, d.sample_every)?;
    let (_, last) = path.last().expect("path holds the initial state");
    let pair_coherence = p.pair.map(|(i, k)| {
        let gap = p.echo.eigenvalues[i] - p.echo.eigenvalues[k];
        PairCoherence {
            pair: [DyadState::ALL[i], DyadState::ALL[k]],
            value: last.matrix()[(i, k)].norm(),
            analytic: p
                .dynamics
                .hamiltonian
                .is_zero()
                .then(|| 0.5 * (-0.5 * p.dynamics.lambda * gap * gap * args.t).exp()),
        }
    });
    let path_file = format!("lindblad_path.{}", extension(d.format));
    let rows: Vec<PathRow> = path.iter().map(|(t, rho)| row(*t, rho)).collect();
    fs::create_dir_all(&d.out_dir)?;
    write_path(&d.out_dir.join(&path_file), &rows, d.format)?;
    let summary = LindbladOutput {
        kind: "lindblad",
        final_populations: last.populations(),
        final_coherences: last.coherences(),
        config: p.echo,
        pair_coherence,
        files: vec![path_file, "lindblad_summary.json".into()],
    };
    let emitted = Emitted::json(&summary)?;
    emitted.write_to(&d.out_dir.join("lindblad_summary.json"))?;
    Ok(emitted)
}

#[derive(Serialize)]
struct BornCheck {
    state: DyadState,
    expected: f64,
    observed: f64,
    sigma: f64,
    within_3_sigma: bool,
}

#[derive(Serialize)]
struct SdeOutput {
    kind: &'static str,
    #[serde(flatten)]
    config: DynamicsEcho,
    seed: u64,
    trajectories: u64,
    collapse_threshold: f64,
    counts: [u64; 4],
    unresolved: u64,
    frequencies: [f64; 4],
    born: Vec<BornCheck>,
    files: Vec<String>,
}

pub fn cmd_sde(args: &SdeArgs) -> Result<Emitted, CliError> {
    if args.trajectories == 0 {
        return Err(CliError::Usage("--trajectories must be at least 1".into()));
    }
    let p = prepare(&args.dynamics, args.t)?;
    let d = &args.dynamics;
    let config = SdeConfig {
        collapse_threshold: args.collapse_threshold,
        ..SdeConfig::new(d.dt, args.t).with_sample_every(d.sample_every)
    };
    let runs = qdyn::sde_ensemble(&p.psi0, &p.dynamics, &config, args.seed, args.trajectories)?;

    let ext = extension(d.format);
    fs::create_dir_all(&d.out_dir)?;
    let mut files = Vec::new();
    let mean: Vec<PathRow> = runs[0]
        .times
        .iter()
        .map(|&t| qdyn::ensemble_average(&runs, t).map(|rho| row(t, &rho)))
        .collect::<Result<_, _>>()?;
    let mean_file = format!("sde_mean.{ext}");
    write_path(&d.out_dir.join(&mean_file), &mean, d.format)?;
    files.push(mean_file);
    for tr in runs.iter().take(args.record as usize) {
        let rows: Vec<PathRow> = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(&t, psi)| row(t, &psi.projector()))
            .collect();
        let name = format!("sde_trajectory_{}.{ext}", tr.stream);
        write_path(&d.out_dir.join(&name), &rows, d.format)?;
        files.push(name);
    }
    files.push("sde_summary.json".into());

    let mut counts = [0u64; 4];
    for tr in &runs {
        if let Some(s) = tr.outcome {
            counts[s.index()] += 1;
        }
    }
    let n = args.trajectories as f64;
    let frequencies = counts.map(|c| c as f64 / n);
    let expected = p.psi0.populations();
    let born = DyadState::ALL
        .iter()
        .filter(|s| expected[s.index()] > 0.0)
        .map(|&s| {
            let e = expected[s.index()];
            let sigma = (e * (1.0 - e) / n).sqrt();
            BornCheck {
                state: s,
                expected: e,
                observed: frequencies[s.index()],
                sigma,
                within_3_sigma: (frequencies[s.index()] - e).abs() <= 3.0 * sigma,
            }
        })
        .collect();
    let summary = SdeOutput {
        kind: "sde",
        config: p.echo,
        seed: args.seed,
        trajectories: args.trajectories,
        collapse_threshold: args.collapse_threshold,
        unresolved: args.trajectories - counts.iter().sum::<u64>(),
        counts,
        frequencies,
        born,
        files,
    };
    let emitted = Emitted::json(&summary)?;
    emitted.write_to(&d.out_dir.join("sde_summary.json"))?;
    Ok(emitted)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Serialize)]
struct QphiOutput {
    state: String,
    #[serde(rename = "A")]
    a: QuantumUnitPhi,
    #[serde(rename = "B")]
    b: QuantumUnitPhi,
    #[serde(rename = "phi_A")]
    phi_a: f64,
    #[serde(rename = "phi_B")]
    phi_b: f64,
    #[serde(rename = "phi_AB")]
    phi_ab: f64,
    big_phi: f64,
    breakdown: [f64; 3],
}

fn load_amplitudes(path: &Path) -> Result<PureState4, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read amplitudes `{}`: {e}", path.display())))?;
    let amps: Vec<Amplitude> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid amplitudes `{}`: {e}", path.display())))?;
    let amps: [Amplitude; 4] = amps
        .try_into()
        .map_err(|_| CliError::Usage("amplitude file must hold exactly four entries".into()))?;
    let amps = amps.map(|a| match a {
        Amplitude::Real(re) => C64::new(re, 0.0),
        Amplitude::Complex([re, im]) => C64::new(re, im),
    });
    Ok(PureState4::new(amps)?)
}

pub fn cmd_qphi(args: &QphiArgs) -> Result<Emitted, CliError> {
    let (label, psi) = match (&args.state, &args.amplitudes) {
        (Some(s), _) => {
            let psi = match s.as_str() {
                "plus0" => prepare_dyad_superposition(),
                "0plus" => dyad_input_state(),
                other => PureState4::basis(parse_state(other).map_err(|_| {
                    CliError::Usage(format!("invalid state `{other}`: expected 00, 01, 10, 11, plus0 or 0plus"))
                })?),
            };
            (s.clone(), psi)
        }
        (None, Some(path)) => ("amplitudes".to_string(), load_amplitudes(path)?),
        (None, None) => return Err(CliError::Usage("give --state or --amplitudes".into())),
    };
    let report = qiit::quantum_big_phi(&psi.projector())?;
    Emitted::json(&QphiOutput {
        state: label,
        breakdown: report.breakdown(),
        a: report.a,
        b: report.b,
        phi_a: report.phi_a,
        phi_b: report.phi_b,
        phi_ab: report.phi_ab,
        big_phi: report.big_phi,
    })
}
