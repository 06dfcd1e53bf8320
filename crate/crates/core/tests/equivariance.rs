use eqcnn::groups::{Embedding, GroupName, GroupSpec};
use eqcnn::verify::{check_prediction_invariance, check_unitary_equivariance};
use eqcnn::{
    build_baseline_qcnn, build_refl_rot_eqcnn, build_reflection_eqcnn, build_rot_eqcnn_variant,
};

#[test]
fn reflection_eqcnn_is_reflection_equivariant() {
    let arch = build_reflection_eqcnn().unwrap();
    let g = GroupSpec::reflection(arch.embedding.as_ref().unwrap());
    let u = check_unitary_equivariance(&arch, &g, 4, 1e-9, 1).unwrap();
    assert!(u.pass, "{u:#?}");
    assert!(u.elements[0].broken_at.is_none());
    let p = check_prediction_invariance(&arch, &g, 4, 1e-10, 2).unwrap();
    assert!(p.pass);
}

#[test]
fn reflrot_breaks_rotation_only_at_last_pooling() {
    let arch = build_refl_rot_eqcnn().unwrap();
    let e = arch.embedding.clone().unwrap();
    let refl = check_unitary_equivariance(&arch, &GroupSpec::reflection(&e), 3, 1e-9, 3).unwrap();
    assert!(refl.pass, "{refl:#?}");
    let rot =
        check_unitary_equivariance(&arch, &GroupSpec::rotation_as_written(&e), 3, 1e-9, 4).unwrap();
    assert!(rot.pass, "{rot:#?}");
    assert_eq!(rot.claimed_layers, 5);
    assert_eq!(rot.elements[0].broken_at.as_deref(), Some("pool3"));
    let last = &rot.elements[0].stages[5];
    assert!(!last.claimed && last.residual.unwrap() > 1e-3);
    assert_eq!(arch.claim(GroupName::Reflection).unwrap().layers, 6);
}

#[test]
fn rotation_variant_keeps_rotation_to_the_end() {
    let arch = build_rot_eqcnn_variant().unwrap();
    let e = arch.embedding.clone().unwrap();
    let rot =
        check_unitary_equivariance(&arch, &GroupSpec::rotation_as_written(&e), 3, 1e-9, 5).unwrap();
    assert!(rot.pass, "{rot:#?}");
    assert!(rot.elements[0].broken_at.is_none());
}

#[test]
fn baseline_is_not_reflection_equivariant() {
    let arch = build_baseline_qcnn(16).unwrap();
    let g = GroupSpec::reflection(&Embedding::row_major(4, 4));
    let u = check_unitary_equivariance(&arch, &g, 2, 1e-9, 6).unwrap();
    assert!(!u.pass);
    assert!(u.max_residual > 1e-2);
}
