//! Randomized equivariance certification and the mixture/circuit oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::architectures::{
    build_sn_eqcnn_circuit, sn_pairs, ArchitectureId, ArchitectureSpec, LayerKind,
};
use crate::circuit::{Circuit, Program};
use crate::error::{domain, Error, Result};
use crate::groups::{GroupName, GroupSpec, QubitPermutation};
use crate::simcore::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Unitary,
    Prediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResidual {
    pub label: String,
    /// `None` once the representation no longer reduces onto the surviving qubits.
    pub residual: Option<f64>,
    pub claimed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementResult {
    /// Action on the input register.
    pub element: QubitPermutation,
    pub max_residual: f64,
    pub stages: Vec<StageResidual>,
    /// Label of the first stage whose output qubits are not mapped onto themselves.
    pub broken_at: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub architecture: ArchitectureId,
    pub group: GroupName,
    pub check: CheckKind,
    pub samples: usize,
    pub tolerance: f64,
    /// Leading layers the check is held to; the rest are reported only.
    pub claimed_layers: usize,
    pub total_layers: usize,
    pub elements: Vec<ElementResult>,
    /// Largest residual over claimed stages.
    pub max_residual: f64,
    pub pass: bool,
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..n).map(|_| rng.random_range(-pi..pi)).collect()
}

fn claimed_depth(arch: &ArchitectureSpec, group: &GroupSpec) -> usize {
    arch.claim(group.name)
        .map_or(arch.layers.len(), |c| c.layers)
}

fn check_group_size(arch: &ArchitectureSpec, group: &GroupSpec) -> Result<()> {
    if group.n_qubits != arch.input_qubits {
        return domain(format!(
            "group acts on {} qubits, {} takes {}-qubit inputs",
            group.n_qubits, arch.id, arch.input_qubits
        ));
    }
    Ok(())
}

fn residual(
    prog_a: &Program<f64>,
    prog_b: &Program<f64>,
    perm: &QubitPermutation,
    params: &[f64],
    psi: &StateVector<f64>,
) -> Result<f64> {
    let lhs = prog_a.forward(params, &psi.apply_qubit_permutation(perm)?)?;
    let rhs = prog_b.forward(params, psi)?.apply_qubit_permutation(perm)?;
    Ok(lhs.distance(&rhs))
}

/// Checks `‖U R(g)ψ − R(g) Uψ‖` layer by layer against the reduced
/// representation on the qubits each layer acts on, plus the claimed prefix
/// as a whole; for a mixture, also every branch convolution and the closure
/// of the branch set.
pub fn check_unitary_equivariance(
    arch: &ArchitectureSpec,
    group: &GroupSpec,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport> {
    if trials == 0 {
        return domain("at least one trial is needed");
    }
    check_group_size(arch, group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = arch.n_qubits;
    let claimed = claimed_depth(arch, group);
    let total = arch.layers.len();
    let layer_progs: Vec<Program<f64>> = (0..total)
        .map(|i| arch.layer_circuit(i).map(|c| c.compile()))
        .collect::<Result<_>>()?;
    let mut prefix = Circuit::new(n, arch.n_params);
    for i in 0..claimed {
        prefix.append(&arch.layer_circuit(i)?)?;
    }
    let prefix = prefix.compile();

    // branch convolutions of a mixture: (kept set, stage)
    let mut branch_convs: Vec<(Vec<usize>, usize)> = Vec::new();
    if let Some(bs) = &arch.branches {
        for b in &bs.branches {
            for (k, kept) in b.kept_chain.iter().enumerate() {
                let key = (kept.clone(), k + 1);
                if !branch_convs.contains(&key) {
                    branch_convs.push(key);
                }
            }
        }
    }

    let elements = group.check_elements(16, &mut rng);
    let mut results = Vec::with_capacity(elements.len());
    for g in &elements {
        let full = g.extend_to(n);
        let mut stages: Vec<StageResidual> = Vec::new();
        let mut reps: Vec<Option<QubitPermutation>> = Vec::with_capacity(total);
        let mut broken_at = None;
        for (i, layer) in arch.layers.iter().enumerate() {
            let rep = if broken_at.is_none() {
                match full.restrict_in_place(&layer.active) {
                    Ok(r) => Some(r),
                    Err(Error::NotReducible { .. }) => {
                        broken_at = Some(if i == 0 {
                            "input".to_string()
                        } else {
                            arch.layers[i - 1].name.clone()
                        });
                        None
                    }
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            reps.push(rep);
        }
        if broken_at.is_none() {
            if let Err(Error::NotReducible { .. }) = full.restrict(&arch.measurement) {
                broken_at = Some(
                    arch.layers
                        .last()
                        .map_or("readout".to_string(), |l| l.name.clone()),
                );
            }
        }
        let mut maxima: Vec<f64> = vec![0.0; total];
        let mut prefix_max = 0.0f64;
        let mut branch_max = vec![0.0f64; branch_convs.len()];
        let branch_progs: Vec<(Program<f64>, Program<f64>)> = branch_convs
            .iter()
            .map(|(kept, stage)| {
                let image = full.map_set(kept);
                Ok((
                    arch.branch_conv::<f64>(&image, *stage)?.compile(),
                    arch.branch_conv::<f64>(kept, *stage)?.compile(),
                ))
            })
            .collect::<Result<_>>()?;
        let mut trial_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        for _ in 0..trials {
            let params = random_params(&mut trial_rng, arch.n_params);
            let psi = StateVector::random(n, &mut trial_rng);
            for (i, rep) in reps.iter().enumerate() {
                if let Some(r) = rep {
                    let prog = &layer_progs[i];
                    maxima[i] = maxima[i].max(residual(prog, prog, r, &params, &psi)?);
                }
            }
            if claimed > 0 {
                prefix_max = prefix_max.max(residual(&prefix, &prefix, &full, &params, &psi)?);
            }
            for (j, (pa, pb)) in branch_progs.iter().enumerate() {
                branch_max[j] = branch_max[j].max(residual(pa, pb, &full, &params, &psi)?);
            }
        }
        for (i, layer) in arch.layers.iter().enumerate() {
            stages.push(StageResidual {
                label: layer.name.clone(),
                residual: reps[i].as_ref().map(|_| maxima[i]),
                claimed: i < claimed,
            });
        }
        stages.push(StageResidual {
            label: "prefix".into(),
            residual: (claimed > 0).then_some(prefix_max),
            claimed: claimed > 0,
        });
        for (j, (kept, stage)) in branch_convs.iter().enumerate() {
            stages.push(StageResidual {
                label: format!("branch conv{} on {kept:?}", stage + 1),
                residual: Some(branch_max[j]),
                claimed: true,
            });
        }
        if let Some(bs) = &arch.branches {
            let set: std::collections::HashSet<_> = bs.branches.iter().cloned().collect();
            let closed = bs.branches.iter().all(|b| {
                let image = crate::architectures::Branch {
                    kept_chain: b.kept_chain.iter().map(|k| full.map_set(k)).collect(),
                    final_qubit: full.image(b.final_qubit),
                };
                set.contains(&image)
            });
            if !closed && broken_at.is_none() {
                broken_at = Some("branches".into());
            }
        }
        let max_residual = stages
            .iter()
            .filter(|s| s.claimed)
            .filter_map(|s| s.residual)
            .fold(0.0, f64::max);
        results.push(ElementResult {
            element: g.clone(),
            max_residual,
            stages,
            broken_at,
        });
    }
    let max_residual = results.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    // a break is acceptable only past a partial claim; a break inside the
    // claimed layers already leaves a claimed stage without a residual
    let pass = results.iter().all(|r| {
        (r.broken_at.is_none() || claimed < total)
            && r.stages
                .iter()
                .filter(|s| s.claimed)
                .all(|s| s.residual.is_some_and(|x| x < tol))
    });
    Ok(EquivarianceReport {
        architecture: arch.id,
        group: group.name,
        check: CheckKind::Unitary,
        samples: trials,
        tolerance: tol,
        claimed_layers: claimed,
        total_layers: total,
        elements: results,
        max_residual,
        pass,
    })
}

/// Checks `|m(R(g)ψ) − m(ψ)| < tol` for the model's scalar output.
pub fn check_prediction_invariance(
    arch: &ArchitectureSpec,
    group: &GroupSpec,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport> {
    if trials == 0 {
        return domain("at least one trial is needed");
    }
    check_group_size(arch, group)?;
    let model = arch.model::<f64>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = group.check_elements(16, &mut rng);
    let mut maxima = vec![0.0f64; elements.len()];
    for _ in 0..trials {
        let params = random_params(&mut rng, arch.n_params);
        let psi = StateVector::random(arch.input_qubits, &mut rng);
        let base = model.expectation(&params, &psi)?;
        for (g, m) in elements.iter().zip(maxima.iter_mut()) {
            let moved = model.expectation(&params, &psi.apply_qubit_permutation(g)?)?;
            *m = m.max((moved - base).abs());
        }
    }
    let results: Vec<ElementResult> = elements
        .into_iter()
        .zip(&maxima)
        .map(|(g, &m)| ElementResult {
            element: g,
            max_residual: m,
            stages: vec![StageResidual {
                label: "prediction".into(),
                residual: Some(m),
                claimed: true,
            }],
            broken_at: None,
        })
        .collect();
    let max_residual = maxima.iter().copied().fold(0.0, f64::max);
    Ok(EquivarianceReport {
        architecture: arch.id,
        group: group.name,
        check: CheckKind::Prediction,
        samples: trials,
        tolerance: tol,
        claimed_layers: arch.layers.len(),
        total_layers: arch.layers.len(),
        elements: results,
        max_residual,
        pass: max_residual < tol,
    })
}

/// Expectation of one branch of the 4-qubit mixture, computed gate by gate:
/// `C₁` on all qubits, the two-qubit symmetric layer on pair `code`, then
/// `⟨Z⟩` on the pair's first (`end = 0`) or second qubit.
pub fn branch_expectation(
    code: usize,
    end: usize,
    params: &[f64],
    input: &StateVector<f64>,
) -> Result<f64> {
    let pairs = sn_pairs(4);
    let Some(&[i, j]) = pairs.get(code) else {
        return domain(format!("pair code {code} out of range"));
    };
    let mut c = Circuit::new(4, 6);
    c.extend(crate::ansatz::sn_layer(
        &[0, 1, 2, 3],
        &crate::circuit::Angle::slots(0),
    )?)?;
    c.extend(crate::ansatz::sn_layer(
        &[i, j],
        &crate::circuit::Angle::slots(3),
    )?)?;
    let out = c.run(params, input)?;
    out.expectation_z(&[if end == 0 { i } else { j }])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub trials: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Compares the ancilla circuit's `⟨Z_{A₂}⟩` with the average of the 12
/// branch expectations on random inputs and parameters.
pub fn check_mixture_circuit_equivalence(
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<MixtureReport> {
    let circuit = build_sn_eqcnn_circuit(4)?.model::<f64>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = 0.0f64;
    for _ in 0..trials {
        let params = random_params(&mut rng, 6);
        let psi = StateVector::random(4, &mut rng);
        let mut mix = 0.0;
        for code in 0..6 {
            for end in 0..2 {
                mix += branch_expectation(code, end, &params, &psi)?;
            }
        }
        mix /= 12.0;
        let circ = circuit.expectation(&params, &psi)?;
        max_residual = max_residual.max((circ - mix).abs());
    }
    Ok(MixtureReport {
        trials,
        tolerance: tol,
        max_residual,
        pass: max_residual < tol,
    })
}

/// Kind of stage a layer is, for report tables.
pub fn stage_kind(arch: &ArchitectureSpec, label: &str) -> Option<LayerKind> {
    arch.layers.iter().find(|l| l.name == label).map(|l| l.kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architectures::build_sn_eqcnn_circuit_with;
    use crate::groups::Embedding;
    use crate::{build_baseline_qcnn, build_sn_eqcnn_mixture, build_sn_eqnn};

    #[test]
    fn trivial_group_has_zero_residual() {
        let arch = build_baseline_qcnn(4).unwrap();
        let r = check_unitary_equivariance(&arch, &GroupSpec::trivial(4), 3, 1e-12, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual, 0.0);
        let p = check_prediction_invariance(&arch, &GroupSpec::trivial(4), 3, 1e-12, 1).unwrap();
        assert_eq!(p.max_residual, 0.0);
    }

    #[test]
    fn sn_models_pass_on_s4() {
        let g = GroupSpec::symmetric(4);
        for arch in [
            build_sn_eqcnn_mixture(4).unwrap(),
            build_sn_eqnn(4).unwrap(),
        ] {
            let u = check_unitary_equivariance(&arch, &g, 10, 1e-9, 2).unwrap();
            assert!(u.pass, "{:?}", u);
            assert_eq!(u.elements.len(), 23);
            let p = check_prediction_invariance(&arch, &g, 10, 1e-10, 3).unwrap();
            assert!(p.pass);
        }
    }

    #[test]
    fn baseline_fails_on_its_small_register() {
        let arch = build_baseline_qcnn(4).unwrap();
        let g = GroupSpec::reflection(&Embedding::row_major(2, 2));
        let u = check_unitary_equivariance(&arch, &g, 5, 1e-9, 4).unwrap();
        assert!(!u.pass);
        assert!(u.max_residual > 1e-3);
    }

    #[test]
    fn circuit_prediction_is_invariant() {
        let arch = build_sn_eqcnn_circuit(4).unwrap();
        let p = check_prediction_invariance(&arch, &GroupSpec::symmetric(4), 5, 1e-10, 5).unwrap();
        assert!(p.pass, "{}", p.max_residual);
    }

    #[test]
    fn mixture_equals_circuit() {
        let r = check_mixture_circuit_equivalence(10, 1e-10, 6).unwrap();
        assert!(r.pass, "{}", r.max_residual);
    }

    #[test]
    fn single_branch_circuit_equals_that_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in [0usize, 5, 11] {
            let model = build_sn_eqcnn_circuit_with(vec![b], 4)
                .unwrap()
                .model::<f64>()
                .unwrap();
            let params = random_params(&mut rng, 6);
            let psi = StateVector::random(4, &mut rng);
            let want = branch_expectation(b >> 1, b & 1, &params, &psi).unwrap();
            assert!((model.expectation(&params, &psi).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn group_size_mismatch_is_domain_error() {
        let arch = build_sn_eqnn(4).unwrap();
        assert!(check_unitary_equivariance(&arch, &GroupSpec::symmetric(3), 1, 1e-9, 0).is_err());
        assert!(check_unitary_equivariance(&arch, &GroupSpec::symmetric(4), 0, 1e-9, 0).is_err());
    }
}
