use proptest::prelude::*;

use vjp_core::config::{preset, preset_names, ConfigError};
use vjp_core::grid::{FieldState, Grid};
use vjp_core::snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};
use vjp_core::SimConfig;

fn overrides() -> impl Strategy<Value = Vec<String>> {
    let one = prop_oneof![
        any::<u32>().prop_map(|s| format!("seed={s}")),
        (0.01f64..0.5).prop_map(|e| format!("epsilon={e}")),
        (0.0f64..5.0).prop_map(|c| format!("chi0={c}")),
        (0.1f64..10.0).prop_map(|s| format!("nondim.sigma0={s}")),
        (1usize..100_000).prop_map(|n| format!("particles={n}")),
        prop_oneof![Just("arithmetic"), Just("harmonic"), Just("upstream")].prop_map(|m| format!("face_mean={m}")),
        prop_oneof![Just("specular"), Just("bounce_back")].prop_map(|m| format!("reflection={m}")),
        any::<bool>().prop_map(|b| format!("growth={b}")),
        any::<bool>().prop_map(|b| format!("noise={b}")),
        (0.05f64..1.0).prop_map(|s| format!("pde.safety={s}")),
        (0.1f64..2.0, 0.1f64..20.0).prop_map(|(a, w)| format!("u0=gaussian({a}, {w})")),
        prop::collection::vec(0.01f64..0.5, 1..4).prop_map(|es| {
            format!("epsilons={}", es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
        }),
    ];
    prop::collection::vec(one, 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn echo_is_a_fixpoint(sets in overrides(), name in prop::sample::select(preset_names().collect::<Vec<_>>())) {
        let text = preset(name).unwrap();
        // dimensional presets derive sigma0 and reject a conflicting value
        let sets: Vec<String> = if text.contains("[dimensional]") {
            sets.into_iter().filter(|s| !s.starts_with("nondim.")).collect()
        } else {
            sets
        };
        let cfg = SimConfig::parse_with_overrides(text, &sets).unwrap();
        let again = SimConfig::parse(&cfg.echo()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.echo(), again.echo());
        prop_assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn any_change_moves_the_hash(seed in 0u64..1_000_000) {
        let a = SimConfig::parse_with_overrides(preset("base").unwrap(), &[format!("seed={seed}")]).unwrap();
        let b = SimConfig::parse_with_overrides(preset("base").unwrap(), &[format!("seed={}", seed + 1)]).unwrap();
        prop_assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn snapshot_round_trip(
        nx in 1usize..12,
        ny in 1usize..12,
        h in 0.01f64..4.0,
        time in 0.0f64..100.0,
        seed in any::<u64>(),
        eps in prop::option::of(0.01f64..1.0),
        bits in prop::collection::vec(any::<u64>(), 0..300),
    ) {
        let grid = Grid::new(2, nx, ny, h, [-1.5, 2.25]).unwrap();
        let n = grid.len();
        let field = |shift: usize| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let x = f64::from_bits(bits.get(k + shift).copied().unwrap_or(k as u64));
                    if x.is_finite() { x } else { k as f64 }
                })
                .collect()
        };
        let mut snap = Snapshot::new("kinetic", &grid, time, seed, "abc123").with_field("rho", field(0)).with_field("v", field(7));
        if let Some(e) = eps {
            snap = snap.with_epsilon(e);
        }
        let bytes = snap.to_bytes().unwrap();
        let back = Snapshot::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        prop_assert_eq!(back.grid().unwrap(), grid);
        for name in ["rho", "v"] {
            let a = snap.field(name).unwrap();
            let b = back.field(name).unwrap();
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn corrupted_payload_is_detected() {
    let grid = Grid::centered(2, 4.0, 1.0).unwrap();
    let state = FieldState::new(grid.clone(), vec![1.0; grid.len()], vec![0.5; grid.len()], 0.25).unwrap();
    let mut bytes = Snapshot::of_state(&state, 3, "h").to_bytes().unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    assert!(matches!(Snapshot::from_bytes(&bytes), Err(SnapshotError::Checksum { .. })));
}

#[test]
fn files_are_not_overwritten_silently() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.snap");
    let grid = Grid::centered(1, 4.0, 0.5).unwrap();
    let state = FieldState::new(grid.clone(), vec![1.0; grid.len()], vec![0.0; grid.len()], 0.0).unwrap();
    let snap = Snapshot::of_state(&state, 1, "h");
    write_snapshot(&snap, &path, false).unwrap();
    assert!(matches!(write_snapshot(&snap, &path, false), Err(SnapshotError::Exists(_))));
    write_snapshot(&snap, &path, true).unwrap();
    assert_eq!(read_snapshot(&path).unwrap().to_bytes().unwrap(), snap.to_bytes().unwrap());
}

#[test]
fn errors_point_at_the_source() {
    let err = SimConfig::parse("[model]\nchi0 = 1\nbogus = 2\n").unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey { .. }));
    assert!(err.to_string().contains("line 3"), "{err}");
    let err = SimConfig::parse_with_overrides(preset("base").unwrap(), &["chi0=-1"]).unwrap_err();
    assert!(err.to_string().contains("--set"), "{err}");
    let err = SimConfig::load("/nonexistent/dir/x.cfg", &[] as &[&str]).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/x.cfg"), "{err}");
}
