use spotrank_core::grid::read_csv;
use spotrank_core::{
    emit_csv, generate_events, grid_scores, kendall_tau, simulate, stability_report, AnswerProfile, Bound, GridSpec,
    Maxima, QuestionState, Scorer, ScoringConfig, SiKind, SiTransform, StreamSpec,
};

fn improved(z: f64, p: f64, kind: SiKind, tr: SiTransform) -> Scorer {
    Scorer::Improved(ScoringConfig {
        z,
        p_weight: p,
        si_kind: kind,
        si_transform: tr,
        ..Default::default()
    })
}

fn small(scorer: Scorer) -> GridSpec {
    GridSpec {
        u_range: 100,
        d_range: 100,
        step: 1,
        maxima: Maxima::new(200, 100, 100),
        scorer,
    }
}

#[test]
fn zero_quantile_wilson_is_average_rating() {
    let a = grid_scores(&small(improved(0.0, 1.0, SiKind::Whole, SiTransform::Linear))).unwrap();
    let b = grid_scores(&small(Scorer::AverageRating)).unwrap();
    for ((u, d, x), (_, _, y)) in a.cells().zip(b.cells()) {
        if u + d > 0 {
            assert!((x - y).abs() < 1e-12, "({u},{d})");
        }
    }
}

#[test]
fn wilson_grid_monotone_along_axes() {
    let g = grid_scores(&small(Scorer::OriginalWilson {
        z: 2.0,
        bound: Bound::Lower,
    }))
    .unwrap();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            if i + 1 < g.rows() {
                assert!(g.get(i + 1, j) >= g.get(i, j));
            }
            if j + 1 < g.cols() {
                assert!(g.get(i, j + 1) <= g.get(i, j));
            }
        }
    }
}

#[test]
fn swap_symmetry_of_index_grids() {
    for tr in [
        SiTransform::Linear,
        SiTransform::Logarithmic,
        SiTransform::Polynomial(1.5),
    ] {
        let net = grid_scores(&small(improved(2.0, 0.0, SiKind::Net, tr))).unwrap();
        let whole = grid_scores(&small(improved(2.0, 0.0, SiKind::Whole, tr))).unwrap();
        for i in 0..net.rows() {
            for j in 0..net.cols() {
                assert_eq!(net.get(i, j), -net.get(j, i));
                assert_eq!(whole.get(i, j), whole.get(j, i));
            }
        }
    }
}

#[test]
fn csv_round_trip() {
    let spec = GridSpec {
        step: 7,
        ..small(improved(2.0, 0.5, SiKind::Net, SiTransform::Logarithmic))
    };
    let grid = grid_scores(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    spotrank_core::grid::write_csv_file(&grid, &path).unwrap();
    let back = read_csv(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back.cells.len(), grid.values.len());
    assert_eq!(back.meta("transform"), Some("log"));
    assert_eq!(back.meta("n_max"), Some("200"));
    for ((u, d, s), (u2, d2, s2)) in grid.cells().zip(&back.cells) {
        assert_eq!((u, d), (*u2, *d2));
        assert!((s - s2).abs() < 1e-9);
    }
    let mut buf = Vec::new();
    emit_csv(&grid, &mut buf).unwrap();
    assert_eq!(buf, std::fs::read(&path).unwrap());
}

#[test]
fn step_hundred_gives_eleven_by_eleven() {
    let spec = GridSpec {
        step: 100,
        ..GridSpec::full_scale(improved(2.0, 0.5, SiKind::Whole, SiTransform::Linear))
    };
    assert_eq!(grid_scores(&spec).unwrap().dims(), (11, 11));
}

fn profiles() -> Vec<AnswerProfile> {
    vec![
        AnswerProfile::new("A", 0.5, 10.0),
        AnswerProfile::new("B", 1.0, 1.0),
        AnswerProfile::new("C", 0.8, 3.0),
    ]
}

#[test]
fn simulation_conserves_votes_and_matches_replay() {
    let spec = StreamSpec {
        profiles: profiles(),
        total_events: 2000,
        seed: 99,
    };
    let scorers = [
        Scorer::OriginalWilson {
            z: 2.0,
            bound: Bound::Lower,
        },
        Scorer::AverageRating,
    ];
    let traj = simulate(&spec, &scorers, 37).unwrap();
    let total: u64 = traj.final_state.entries().iter().map(|e| e.tally.total()).sum();
    assert_eq!(total, 2000);

    let events = generate_events(&spec).unwrap();
    for snap in &traj.snapshots {
        // aggregate the prefix from scratch and compare tallies
        let prefix = &events[..snap.event_index as usize];
        let mut counts = std::collections::HashMap::new();
        for e in prefix {
            let c = counts.entry(e.answer_id.clone()).or_insert((0u64, 0u64));
            c.0 += e.up_delta as u64;
            c.1 += e.down_delta as u64;
        }
        for ranking in &snap.rankings {
            for entry in &ranking.entries {
                let (u, d) = counts.get(&entry.answer_id).copied().unwrap_or_default();
                assert_eq!((entry.tally.up, entry.tally.down), (u, d));
            }
            let rebuilt =
                QuestionState::from_tallies("sim", ranking.entries.iter().map(|e| (e.answer_id.clone(), e.tally)))
                    .unwrap();
            assert_eq!(rebuilt.raw_maxima().floored(1), ranking.maxima);
        }
    }
}

#[test]
fn controversial_profile_splits_the_scorers() {
    let spec = StreamSpec {
        profiles: vec![AnswerProfile::new("A", 0.5, 10.0), AnswerProfile::new("B", 1.0, 1.0)],
        total_events: 10_000,
        seed: 2024,
    };
    let scorers = [
        Scorer::OriginalWilson {
            z: 2.0,
            bound: Bound::Lower,
        },
        improved(2.0, 0.5, SiKind::Whole, SiTransform::Linear),
    ];
    let traj = simulate(&spec, &scorers, 500).unwrap();
    let last = &traj.snapshots.last().unwrap().rankings;
    assert_eq!(last[0].ids(), vec!["B", "A"]);
    assert_eq!(last[1].ids(), vec!["A", "B"]);
    let report = stability_report(&traj).unwrap();
    assert_eq!(report.agreement[0].tau, -1.0);
}

#[test]
fn report_taus_stay_in_range() {
    for seed in 0..40u64 {
        let spec = StreamSpec {
            profiles: profiles(),
            total_events: 300,
            seed,
        };
        let traj = simulate(
            &spec,
            &[
                Scorer::OriginalWilson {
                    z: 1.0,
                    bound: Bound::Lower,
                },
                improved(2.0, 0.3, SiKind::Net, SiTransform::Logarithmic),
                Scorer::AverageRating,
            ],
            10,
        )
        .unwrap();
        let report = stability_report(&traj).unwrap();
        for s in &report.scorers {
            assert!((-1.0..=1.0).contains(&s.mean_adjacent_tau));
        }
        assert_eq!(report.agreement.len(), 3);
        for a in &report.agreement {
            assert!((-1.0..=1.0).contains(&a.tau));
        }
    }
}

/// Pair-counting reference for tau-a.
fn tau_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let pos = |v: &[usize], x: usize| v.iter().position(|&y| y == x).unwrap();
    let m = a.len();
    let mut s = 0i64;
    for i in 0..m {
        for j in i + 1..m {
            let (x, y) = (a[i], a[j]);
            s += if (pos(b, x) < pos(b, y)) == (i < j) { 1 } else { -1 };
        }
    }
    s as f64 / (m * (m - 1) / 2) as f64
}

#[test]
fn kendall_identity_reverse_and_reference() {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for m in 2..12usize {
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        let ids: Vec<String> = perm.iter().map(|x| x.to_string()).collect();
        let rev: Vec<String> = ids.iter().rev().cloned().collect();
        assert_eq!(kendall_tau(&ids, &ids).unwrap(), 1.0);
        assert_eq!(kendall_tau(&ids, &rev).unwrap(), -1.0);
        let sorted: Vec<String> = (0..m).map(|x| x.to_string()).collect();
        let want = tau_by_pairs(&perm, &(0..m).collect::<Vec<_>>());
        assert!((kendall_tau(&ids, &sorted).unwrap() - want).abs() < 1e-15);
    }
}
