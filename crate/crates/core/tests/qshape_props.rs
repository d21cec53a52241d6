//! Q-shape rows against a joint-table oracle, row-metric axioms, and the
//! earth mover's distance against exhaustive transport-plan enumeration.

use dyad_core::model::{DyadState, Tpm2};
use dyad_core::qshape::{
    all_qshapes, build_qshape, distance_table, is_distribution, qshape_distance, row_distance,
    Distribution4, QShapeError, RowMetric,
};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn dyad_like() -> Vec<Tpm2> {
    Tpm2::all_single_input()
        .into_iter()
        .filter(|t| t.is_cross_coupled() && t.is_bijective())
        .collect()
}

/// Rows rebuilt from the deterministic transition list with explicit sums:
/// effect rows push the noised configurations forward, cause rows pull the
/// noised configurations back through Bayes' rule with a uniform prior.
fn oracle_rows(tpm: &Tpm2, state: DyadState) -> [Distribution4; 4] {
    let next: Vec<usize> = DyadState::ALL.iter().map(|&s| tpm.apply(s).index()).collect();
    let noised = |keep_a: bool| -> Vec<usize> {
        (0..4)
            .filter(|&i| {
                let s = DyadState::from_index(i).unwrap();
                if keep_a {
                    s.a() == state.a()
                } else {
                    s.b() == state.b()
                }
            })
            .collect()
    };
    let mut rows = [[0.0; 4]; 4];
    for (part, keep_a) in [(0, true), (1, false)] {
        let configs = noised(keep_a);
        for &c in &configs {
            rows[2 * part][next[c]] += 1.0 / configs.len() as f64;
            let preimages: Vec<usize> = (0..4).filter(|&p| next[p] == c).collect();
            for &p in &preimages {
                rows[2 * part + 1][p] += 1.0 / (configs.len() * preimages.len()) as f64;
            }
        }
    }
    rows
}

#[test]
fn rows_match_transition_oracle() {
    let systems = dyad_like();
    assert_eq!(systems.len(), 4);
    for tpm in &systems {
        for state in DyadState::ALL {
            let q = build_qshape(tpm, state).unwrap();
            assert_eq!(q.rows, oracle_rows(tpm, state), "{tpm:?} {state}");
        }
    }
}

#[test]
fn non_dyad_systems_are_rejected() {
    for tpm in Tpm2::all_single_input() {
        let ok = tpm.is_cross_coupled() && tpm.is_bijective();
        assert_eq!(build_qshape(&tpm, DyadState::ALL[0]).is_ok(), ok, "{tpm:?}");
    }
}

#[test]
fn dyad_states_have_distinct_shapes() {
    for tpm in dyad_like() {
        let shapes = all_qshapes(&tpm).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(shapes[i].rows, shapes[j].rows);
                let d = qshape_distance(&shapes[i], &shapes[j], &RowMetric::TotalVariation).unwrap();
                assert!(d > 0.0);
            }
        }
    }
}

#[test]
fn tables_are_symmetric_with_zero_diagonal() {
    for tpm in dyad_like() {
        for metric in [RowMetric::TotalVariation, RowMetric::discrete_emd()] {
            let t = distance_table(&tpm, &metric).unwrap();
            for i in 0..4 {
                assert_eq!(t.get(i, i), 0.0);
                for j in 0..4 {
                    assert_eq!(t.get(i, j), t.get(j, i));
                    assert!([0.0, 2.0, 4.0].contains(&t.get(i, j)));
                }
            }
        }
    }
}

#[test]
fn kl_between_disjoint_rows_is_refused() {
    let shapes = all_qshapes(&Tpm2::swap()).unwrap();
    let err = qshape_distance(&shapes[0], &shapes[3], &RowMetric::GuardedKl).unwrap_err();
    assert!(matches!(err, QShapeError::KlUndefined { .. }));
    assert_eq!(qshape_distance(&shapes[2], &shapes[2], &RowMetric::GuardedKl).unwrap(), 0.0);
}

/// Every transport plan with entries in multiples of `1/k` moving `p` onto
/// `q`, both given as integer counts summing to `k`.
fn cheapest_lattice_plan(p: [usize; 4], q: [usize; 4], k: usize, ground: &[[f64; 4]; 4]) -> f64 {
    fn go(
        cell: usize,
        rows: &mut [usize; 4],
        cols: &mut [usize; 4],
        cost: f64,
        k: f64,
        ground: &[[f64; 4]; 4],
        best: &mut f64,
    ) {
        if cell == 16 {
            if rows.iter().all(|&r| r == 0) && cols.iter().all(|&c| c == 0) {
                *best = best.min(cost);
            }
            return;
        }
        let (i, j) = (cell / 4, cell % 4);
        let limit = rows[i].min(cols[j]);
        for m in 0..=limit {
            rows[i] -= m;
            cols[j] -= m;
            go(cell + 1, rows, cols, cost + m as f64 / k * ground[i][j], k, ground, best);
            rows[i] += m;
            cols[j] += m;
        }
    }
    let mut best = f64::INFINITY;
    go(0, &mut p.clone(), &mut q.clone(), 0.0, k as f64, ground, &mut best);
    best
}

const K: usize = 4;

fn lattice_distribution() -> impl Strategy<Value = [usize; 4]> {
    (0..=K, 0..=K, 0..=K).prop_filter_map("counts exceed K", |(a, b, c)| {
        (a + b + c <= K).then(|| [a, b, c, K - a - b - c])
    })
}

fn as_distribution(counts: [usize; 4]) -> Distribution4 {
    counts.map(|c| c as f64 / K as f64)
}

fn random_distribution() -> impl Strategy<Value = Distribution4> {
    prop::array::uniform4(0.0f64..1.0).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| {
            let mut p = w.map(|x| x / s);
            // land exactly on the simplex
            p[3] = 1.0 - p[0] - p[1] - p[2];
            p
        })
        .filter(|p| p[3] >= 0.0)
    })
}

fn symmetric_ground() -> impl Strategy<Value = [[f64; 4]; 4]> {
    prop::array::uniform6(0u8..6).prop_map(|w| {
        let mut g = [[0.0; 4]; 4];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for ((i, j), x) in pairs.into_iter().zip(w) {
            g[i][j] = x as f64;
            g[j][i] = x as f64;
        }
        g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_rows_are_distributions(idx in 0usize..4, s in 0usize..4) {
        let tpm = dyad_like()[idx];
        let q = build_qshape(&tpm, DyadState::from_index(s).unwrap()).unwrap();
        for row in &q.rows {
            prop_assert!(is_distribution(row));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn total_variation_is_a_metric(p in random_distribution(), q in random_distribution(), r in random_distribution()) {
        let tv = RowMetric::TotalVariation;
        let d = |x: &Distribution4, y: &Distribution4| row_distance(x, y, &tv).unwrap();
        prop_assert!(d(&p, &p).abs() < TOL);
        prop_assert!(d(&p, &q) >= 0.0 && d(&p, &q) <= 1.0 + TOL);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < TOL);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + TOL);
    }

    #[test]
    fn total_variation_axioms_on_qshape_rows(i in 0usize..4, s in 0usize..4, t in 0usize..4, u in 0usize..4) {
        let tpm = dyad_like()[i];
        let shape = |x: usize| build_qshape(&tpm, DyadState::from_index(x).unwrap()).unwrap();
        let (a, b, c) = (shape(s), shape(t), shape(u));
        let tv = RowMetric::TotalVariation;
        for r in 0..4 {
            let d = |x: &Distribution4, y: &Distribution4| row_distance(x, y, &tv).unwrap();
            let (p, q, w) = (&a.rows[r], &b.rows[r], &c.rows[r]);
            prop_assert_eq!(d(p, p), 0.0);
            prop_assert_eq!(d(p, q), d(q, p));
            prop_assert!(d(p, q) == 0.0 || d(p, q) == 1.0);
            prop_assert_eq!(d(p, q) == 0.0, p == q);
            prop_assert!(d(p, w) <= d(p, q) + d(q, w));
        }
    }

    #[test]
    fn discrete_emd_equals_total_variation(p in random_distribution(), q in random_distribution()) {
        let emd = row_distance(&p, &q, &RowMetric::discrete_emd()).unwrap();
        let tv = row_distance(&p, &q, &RowMetric::TotalVariation).unwrap();
        prop_assert!((emd - tv).abs() < 1e-9, "{emd} vs {tv}");
    }

    #[test]
    fn emd_matches_exhaustive_plans(p in lattice_distribution(), q in lattice_distribution(), ground in symmetric_ground()) {
        let got = row_distance(&as_distribution(p), &as_distribution(q), &RowMetric::EarthMover { ground }).unwrap();
        let want = cheapest_lattice_plan(p, q, K, &ground);
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn guarded_kl_is_finite_or_refused(p in random_distribution(), q in random_distribution()) {
        match row_distance(&p, &q, &RowMetric::GuardedKl) {
            Ok(d) => prop_assert!(d.is_finite() && d >= -TOL),
            Err(QShapeError::KlUndefined { index }) => prop_assert!(p[index] > 0.0 && q[index] == 0.0),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
