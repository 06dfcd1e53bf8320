use eqcnn::data::{adjacency_from_mask, angle_embed, graph_state, permute_adjacency};
use eqcnn::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [GateKind; 10] = [
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
    GateKind::Rot,
    GateKind::CNOT,
    GateKind::CZ,
    GateKind::SWAP,
    GateKind::ZZ,
    GateKind::ControlledRot,
    GateKind::H,
];

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate64 {
    let kind = KINDS[rng.random_range(0..KINDS.len())];
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let params: Vec<f64> = (0..kind.n_params())
        .map(|_| rng.random_range(-4.0..4.0))
        .collect();
    let k = kind.n_targets();
    let mut g = Gate::new(kind, qubits[..k].to_vec(), params);
    let n_controls = if kind == GateKind::ControlledRot {
        1 + rng.random_range(0..2)
    } else {
        rng.random_range(0..2)
    };
    for &c in &qubits[k..k + n_controls] {
        g = g.with_control(if rng.random_bool(0.5) {
            Control::on(c)
        } else {
            Control::off(c)
        });
    }
    g
}

fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> QubitPermutation {
    let mut m: Vec<usize> = (0..n).collect();
    m.shuffle(rng);
    QubitPermutation::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norm_preserved_by_long_random_circuits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = StateVector64::random(8, &mut rng);
        for _ in 0..1000 {
            s.apply_gate_mut(&random_gate(&mut rng, 8)).unwrap();
        }
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn gate_matrices_are_unitary(k in 0..KINDS.len(), a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
        let kind = KINDS[k];
        let m = gate_matrix(kind, &[a, b, c][..kind.n_params()]);
        prop_assert!(m.unitarity_error() < 1e-14);
    }

    #[test]
    fn permutation_action_is_a_homomorphism(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_perm(&mut rng, n), random_perm(&mut rng, n));
        let s = StateVector64::random(n, &mut rng);
        let pq = p.compose(&q).unwrap();
        let lhs = s.apply_qubit_permutation(&pq).unwrap();
        let rhs = s.apply_qubit_permutation(&q).unwrap().apply_qubit_permutation(&p).unwrap();
        prop_assert!(lhs.distance(&rhs) < 1e-15);
        let back = lhs.apply_qubit_permutation(&pq.inverse()).unwrap();
        prop_assert!(back.distance(&s) < 1e-15);
    }

    #[test]
    fn swap_chain_matches_relabeling(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_perm(&mut rng, n);
        let s = StateVector64::random(n, &mut rng);
        let mut chained = s.clone();
        for (a, b) in p.swap_decomposition() {
            chained.apply_gate_mut(&Gate::swap(a, b)).unwrap();
        }
        prop_assert!(chained.distance(&s.apply_qubit_permutation(&p).unwrap()) < 1e-15);
        let product = p.swap_decomposition().iter().fold(QubitPermutation::identity(n), |acc, &ab| {
            QubitPermutation::from_swaps(n, &[ab]).unwrap().compose(&acc).unwrap()
        });
        prop_assert_eq!(product, p);
    }

    #[test]
    fn image_embedding_commutes_with_pixel_maps(pixels in prop::collection::vec(0.0f64..=1.0, 16), mirror in any::<bool>(), m in 0usize..4) {
        let emb = if mirror { Embedding::mirror_symmetric(4, 4).unwrap() } else { Embedding::row_major(4, 4) };
        let map = [PixelMap::MirrorColumns, PixelMap::MirrorRows, PixelMap::HalfTurn, PixelMap::QuarterTurn][m];
        let moved = angle_embed::<f64>(&map.transform(&pixels, 4, 4).unwrap(), &emb).unwrap();
        let perm = emb.induced(map).unwrap();
        let relabeled = angle_embed::<f64>(&pixels, &emb).unwrap().apply_qubit_permutation(&perm).unwrap();
        prop_assert!(moved.distance(&relabeled) < 1e-12);
    }

    #[test]
    fn graph_states_commute_with_vertex_relabeling(mask in 0u64..64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_perm(&mut rng, 4);
        let a = adjacency_from_mask(4, mask);
        let lhs = graph_state::<f64>(&permute_adjacency(&a, &p)).unwrap();
        let rhs = graph_state::<f64>(&a).unwrap().apply_qubit_permutation(&p).unwrap();
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }
}
