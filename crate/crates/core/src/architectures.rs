//! Complete model descriptions: equivariant QCNNs, the permutation-symmetric
//! mixture and its ancilla circuit, the symmetric QNN, and a plain QCNN.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ring_brick_pairs, Ansatz, ParamGroup, SharedParamLayer};
use crate::circuit::{Circuit, Model, Observable, ParamGate, Term};
use crate::error::{domain, Error, Result};
use crate::groups::{Embedding, GroupName, GroupSpec};
use crate::simcore::{Control, GateKind, StateVector};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureId {
    ReflectionEqcnn,
    ReflrotEqcnn,
    RotEqcnnVariant,
    SnEqcnnMixture,
    SnEqcnnCircuit,
    SnEqnn,
    BaselineQcnn,
}

impl ArchitectureId {
    pub const ALL: [ArchitectureId; 7] = [
        ArchitectureId::ReflectionEqcnn,
        ArchitectureId::ReflrotEqcnn,
        ArchitectureId::RotEqcnnVariant,
        ArchitectureId::SnEqcnnMixture,
        ArchitectureId::SnEqcnnCircuit,
        ArchitectureId::SnEqnn,
        ArchitectureId::BaselineQcnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureId::ReflectionEqcnn => "reflection_eqcnn",
            ArchitectureId::ReflrotEqcnn => "reflrot_eqcnn",
            ArchitectureId::RotEqcnnVariant => "rot_eqcnn_variant",
            ArchitectureId::SnEqcnnMixture => "sn_eqcnn_mixture",
            ArchitectureId::SnEqcnnCircuit => "sn_eqcnn_circuit",
            ArchitectureId::SnEqnn => "sn_eqnn",
            ArchitectureId::BaselineQcnn => "baseline_qcnn",
        }
    }

    /// Builds the architecture for `n` input qubits.
    pub fn build(self, n: usize) -> Result<ArchitectureSpec> {
        let fixed = |want: usize| {
            if n == want {
                Ok(())
            } else {
                Err(Error::Unsupported(format!(
                    "{self} is defined for {want} qubits, not {n}"
                )))
            }
        };
        match self {
            ArchitectureId::ReflectionEqcnn => fixed(16).and_then(|_| build_reflection_eqcnn()),
            ArchitectureId::ReflrotEqcnn => fixed(16).and_then(|_| build_refl_rot_eqcnn()),
            ArchitectureId::RotEqcnnVariant => fixed(16).and_then(|_| build_rot_eqcnn_variant()),
            ArchitectureId::SnEqcnnMixture => build_sn_eqcnn_mixture(n),
            ArchitectureId::SnEqcnnCircuit => build_sn_eqcnn_circuit(n),
            ArchitectureId::SnEqnn => build_sn_eqnn(n),
            ArchitectureId::BaselineQcnn => build_baseline_qcnn(n),
        }
    }
}

impl fmt::Display for ArchitectureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown architecture '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Pool,
    /// Parameter-free routing, e.g. controlled SWAPs into a readout qubit.
    Route,
}

/// Parameter-free gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedGate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerBody {
    Shared(SharedParamLayer),
    Fixed(Vec<FixedGate>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    pub body: LayerBody,
    /// Qubits still in play when the layer acts.
    pub active: Vec<usize>,
}

impl Layer {
    fn shared(name: &str, kind: LayerKind, layer: SharedParamLayer, active: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            kind,
            body: LayerBody::Shared(layer),
            active,
        }
    }

    pub fn gates<T: Real>(&self) -> Result<Vec<ParamGate<T>>> {
        match &self.body {
            LayerBody::Shared(s) => s.gates(),
            LayerBody::Fixed(v) => Ok(v
                .iter()
                .map(|g| {
                    ParamGate::new(g.kind, g.targets.clone(), vec![])
                        .with_controls(g.controls.iter().copied())
                })
                .collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolingStage {
    pub measured: Vec<usize>,
    pub kept: Vec<usize>,
    /// `[measured, kept]` pairs.
    pub pairs: Vec<[usize; 2]>,
}

/// A group the architecture is built to respect for its first `layers` layers.
/// `layers == spec.layers.len()` means end to end, including the readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryClaim {
    pub group: GroupSpec,
    pub layers: usize,
}

/// One QCNN of a mixture: the kept qubit sets after each random trace-out
/// (the convolution after stage `k` acts on `kept_chain[k]`) and the qubit read out.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Branch {
    pub kept_chain: Vec<Vec<usize>>,
    pub final_qubit: usize,
}

/// Equal-weight branches of a mixture model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    pub n: usize,
    pub branches: Vec<Branch>,
}

impl BranchSet {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.branches.len() as f64
    }

    /// Branches sharing a kept chain, with the qubits they read out.
    pub fn by_chain(&self) -> BTreeMap<Vec<Vec<usize>>, Vec<usize>> {
        let mut out: BTreeMap<Vec<Vec<usize>>, Vec<usize>> = BTreeMap::new();
        for b in &self.branches {
            out.entry(b.kept_chain.clone())
                .or_default()
                .push(b.final_qubit);
        }
        out
    }
}

/// Fixed state placed on the qubits after the input register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaPrep {
    /// Uniform superposition over the listed basis states of the ancilla
    /// register (index in ancilla-local big-endian order).
    UniformOver { n_qubits: usize, basis: Vec<usize> },
}

impl AncillaPrep {
    pub fn n_qubits(&self) -> usize {
        match self {
            AncillaPrep::UniformOver { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn state<T: Real>(&self) -> Result<StateVector<T>> {
        match self {
            AncillaPrep::UniformOver { n_qubits, basis } => {
                if basis.is_empty() {
                    return domain("empty ancilla support");
                }
                let dim = 1usize << n_qubits;
                let amp = T::one() / T::of(basis.len() as f64).sqrt();
                let zero = num_complex::Complex::new(T::zero(), T::zero());
                let mut amps = vec![zero; dim];
                for &b in basis {
                    if b >= dim {
                        return domain(format!("ancilla basis index {b} out of range"));
                    }
                    amps[b] = num_complex::Complex::new(amp, T::zero());
                }
                StateVector::from_amplitudes(amps)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub id: ArchitectureId,
    /// Simulated register size, ancillas included.
    pub n_qubits: usize,
    pub input_qubits: usize,
    pub n_params: usize,
    pub embedding: Option<Embedding>,
    pub layers: Vec<Layer>,
    pub pooling_stages: Vec<PoolingStage>,
    /// Mean-Z readout set; for a mixture, the union of branch readouts.
    pub measurement: Vec<usize>,
    pub symmetry: Vec<SymmetryClaim>,
    pub branches: Option<BranchSet>,
    pub ancilla: Option<AncillaPrep>,
}

impl ArchitectureSpec {
    pub fn param_groups(&self) -> Vec<ParamGroup> {
        let mut groups: Vec<ParamGroup> = Vec::new();
        for l in &self.layers {
            if let LayerBody::Shared(s) = &l.body {
                if !groups.iter().any(|g| g.offset == s.param_offset) {
                    groups.push(ParamGroup {
                        name: s.name.clone(),
                        offset: s.param_offset,
                        len: s.n_params(),
                    });
                }
            }
        }
        if let Some(bs) = &self.branches {
            let stages = bs.branches.first().map_or(0, |b| b.kept_chain.len());
            for k in 1..=stages {
                groups.push(ParamGroup {
                    name: format!("conv{}", k + 1),
                    offset: 3 * k,
                    len: 3,
                });
            }
        }
        groups.sort_by_key(|g| g.offset);
        groups
    }

    pub fn claim(&self, name: GroupName) -> Option<&SymmetryClaim> {
        self.symmetry.iter().find(|c| c.group.name == name)
    }

    /// Single-layer circuit on the full register.
    pub fn layer_circuit<T: Real>(&self, index: usize) -> Result<Circuit<T>> {
        let mut c = Circuit::new(self.n_qubits, self.n_params);
        c.extend(self.layers[index].gates()?)?;
        Ok(c)
    }

    /// All layers in order.
    pub fn circuit<T: Real>(&self) -> Result<Circuit<T>> {
        let mut c = Circuit::new(self.n_qubits, self.n_params);
        for l in &self.layers {
            c.extend(l.gates()?)?;
        }
        Ok(c)
    }

    /// Convolution acting on `kept` after pooling stage `stage` (1-based) of a mixture.
    pub fn branch_conv<T: Real>(&self, kept: &[usize], stage: usize) -> Result<Circuit<T>> {
        let mut c = Circuit::new(self.n_qubits, self.n_params);
        c.extend(
            SharedParamLayer::new("", Ansatz::SnLayer, vec![kept.to_vec()], 3 * stage).gates()?,
        )?;
        Ok(c)
    }

    pub fn model<T: Real>(&self) -> Result<Model<T>> {
        let ancilla = self.ancilla.as_ref().map(|a| a.state()).transpose()?;
        let terms = match &self.branches {
            None => vec![Term {
                weight: T::one(),
                program: self.circuit()?.compile(),
                observable: Observable::MeanZ(self.measurement.clone()),
            }],
            Some(bs) => {
                let inv_p = T::of(bs.weight());
                let base = self.circuit::<T>()?;
                bs.by_chain()
                    .into_iter()
                    .map(|(chain, finals)| {
                        let mut c = base.clone();
                        for (k, kept) in chain.iter().enumerate() {
                            c.append(&self.branch_conv(kept, k + 1)?)?;
                        }
                        let mut obs = finals.clone();
                        obs.sort_unstable();
                        Ok(Term {
                            weight: inv_p * T::of(finals.len() as f64),
                            program: c.compile(),
                            observable: Observable::MeanZ(obs),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Model::new(self.input_qubits, self.n_params, ancilla, terms)
    }

    /// Structural checks: kept sets strictly shrink, the readout is
    /// nonempty, and each claimed symmetry maps every kept set within its
    /// claimed depth onto itself.
    pub fn validate(&self) -> Result<()> {
        if self.measurement.is_empty() {
            return domain("empty measurement set");
        }
        let mut size = self.n_qubits;
        for st in &self.pooling_stages {
            if st.kept.len() >= size || st.kept.is_empty() {
                return domain(format!("kept set {:?} does not shrink", st.kept));
            }
            size = st.kept.len();
        }
        for claim in &self.symmetry {
            let mut pool_index = 0;
            for l in self.layers.iter().take(claim.layers) {
                if l.kind == LayerKind::Pool {
                    let kept = &self.pooling_stages[pool_index].kept;
                    pool_index += 1;
                    for g in &claim.group.generators {
                        g.extend_to(self.n_qubits).restrict(kept)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `C(n, n/2)·C(n/2, n/4)···C(2, 1)` for a power of two `n`.
pub fn count_branches(n: usize) -> Result<u64> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "branch counting needs a power of two ≥ 2, got {n}"
        )));
    }
    let mut total: u64 = 1;
    let mut m = n as u64;
    while m >= 2 {
        total = total
            .checked_mul(binomial(m, m / 2).ok_or_else(|| overflow(n))?)
            .ok_or_else(|| overflow(n))?;
        m /= 2;
    }
    Ok(total)
}

fn overflow(n: usize) -> Error {
    Error::Unsupported(format!("branch count for n = {n} overflows u64"))
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    (0..k).try_fold(1u64, |acc, i| acc.checked_mul(n - i).map(|x| x / (i + 1)))
}

fn subsets(set: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if set.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut rest in subsets(&set[1..], k - 1) {
        rest.insert(0, set[0]);
        out.push(rest);
    }
    out.extend(subsets(&set[1..], k));
    out
}

/// Every branch of the `n`-qubit mixture, kept sets in lexicographic order.
pub fn enumerate_branches(n: usize) -> Result<BranchSet> {
    let p = count_branches(n)?;
    if p > 1_000_000 {
        return Err(Error::Unsupported(format!(
            "{p} branches is too many to enumerate"
        )));
    }
    fn walk(current: &[usize], chain: &mut Vec<Vec<usize>>, out: &mut Vec<Branch>) {
        if current.len() == 2 {
            for &q in current {
                out.push(Branch {
                    kept_chain: chain.clone(),
                    final_qubit: q,
                });
            }
            return;
        }
        for kept in subsets(current, current.len() / 2) {
            chain.push(kept.clone());
            walk(&kept, chain, out);
            chain.pop();
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mut branches = Vec::new();
    walk(&all, &mut Vec::new(), &mut branches);
    debug_assert_eq!(branches.len() as u64, p);
    Ok(BranchSet { n, branches })
}

fn one_based(pairs: &[(usize, usize)]) -> Vec<[usize; 2]> {
    pairs.iter().map(|&(a, b)| [a - 1, b - 1]).collect()
}

fn to_vecs(pairs: &[[usize; 2]]) -> Vec<Vec<usize>> {
    pairs.iter().map(|p| p.to_vec()).collect()
}

/// Incrementally assembles a conv/pool stack.
struct Stack {
    n: usize,
    active: Vec<usize>,
    offset: usize,
    layers: Vec<Layer>,
    stages: Vec<PoolingStage>,
    n_conv: usize,
}

impl Stack {
    fn new(n: usize) -> Self {
        Self {
            n,
            active: (0..n).collect(),
            offset: 0,
            layers: Vec::new(),
            stages: Vec::new(),
            n_conv: 0,
        }
    }

    fn conv(&mut self, ansatz: Ansatz, pairs: Vec<[usize; 2]>) {
        self.n_conv += 1;
        let name = format!("conv{}", self.n_conv);
        let s = SharedParamLayer::new(name.clone(), ansatz, to_vecs(&pairs), self.offset);
        self.offset += s.n_params();
        self.layers.push(Layer::shared(
            &name,
            LayerKind::Conv,
            s,
            self.active.clone(),
        ));
    }

    fn pool(&mut self, pairs: Vec<[usize; 2]>) {
        let name = format!("pool{}", self.stages.len() + 1);
        let s = SharedParamLayer::new(name.clone(), Ansatz::Pool2, to_vecs(&pairs), self.offset);
        self.offset += s.n_params();
        self.layers.push(Layer::shared(
            &name,
            LayerKind::Pool,
            s,
            self.active.clone(),
        ));
        let measured: Vec<usize> = pairs.iter().map(|p| p[0]).collect();
        let mut kept: Vec<usize> = self
            .active
            .iter()
            .copied()
            .filter(|q| !measured.contains(q))
            .collect();
        kept.sort_unstable();
        self.active = kept.clone();
        let mut m = measured;
        m.sort_unstable();
        self.stages.push(PoolingStage {
            measured: m,
            kept,
            pairs,
        });
    }

    fn finish(
        self,
        id: ArchitectureId,
        embedding: Option<Embedding>,
        symmetry: Vec<SymmetryClaim>,
    ) -> Result<ArchitectureSpec> {
        let spec = ArchitectureSpec {
            id,
            n_qubits: self.n,
            input_qubits: self.n,
            n_params: self.offset,
            embedding,
            measurement: self.active.clone(),
            layers: self.layers,
            pooling_stages: self.stages,
            symmetry,
            branches: None,
            ancilla: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reflection-equivariant QCNN on a 4×4 image under the mirror-symmetric
/// embedding, where the reflection is `q ↔ 15 − q`.
pub fn build_reflection_eqcnn() -> Result<ArchitectureSpec> {
    let embedding = Embedding::mirror_symmetric(4, 4)?;
    let mut s = Stack::new(16);
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[
        (4, 5),
        (3, 6),
        (2, 7),
        (1, 8),
        (13, 12),
        (14, 11),
        (15, 10),
        (16, 9),
    ]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[(5, 6), (8, 7), (9, 10), (12, 11)]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[(6, 7), (11, 10)]));
    let layers = s.layers.len();
    let claims = vec![SymmetryClaim {
        group: GroupSpec::reflection(&embedding),
        layers,
    }];
    s.finish(ArchitectureId::ReflectionEqcnn, Some(embedding), claims)
}

/// First convolution of the row-major dual-symmetry QCNN: nearest-neighbour
/// bricks within rows, then the pairs linking each row end to the
/// neighbouring row, in two disjoint sublayers closed under both symmetries.
fn reflrot_conv1(with_links: bool) -> Vec<[usize; 2]> {
    let mut pairs = one_based(&[
        (1, 2),
        (3, 4),
        (5, 6),
        (7, 8),
        (9, 10),
        (11, 12),
        (13, 14),
        (15, 16),
        (2, 3),
        (6, 7),
        (10, 11),
        (14, 15),
    ]);
    if with_links {
        pairs.extend(one_based(&[
            (1, 8),
            (4, 5),
            (12, 13),
            (9, 16),
            (8, 9),
            (5, 12),
        ]));
    }
    pairs
}

/// QCNN on a row-major 4×4 image equivariant under the column mirror and the
/// half-turn `q ↔ 15 − q`; the final pooling keeps only the mirror.
pub fn build_refl_rot_eqcnn() -> Result<ArchitectureSpec> {
    let embedding = Embedding::row_major(4, 4);
    let mut s = Stack::new(16);
    s.conv(Ansatz::Conv2SwapSym, reflrot_conv1(true));
    s.pool(one_based(&[
        (1, 5),
        (2, 6),
        (3, 7),
        (4, 8),
        (16, 12),
        (15, 11),
        (14, 10),
        (13, 9),
    ]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[(6, 5), (7, 8), (10, 9), (11, 12)]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    let before_last = s.layers.len();
    s.pool(one_based(&[(9, 8), (12, 5)]));
    let layers = s.layers.len();
    let claims = vec![
        SymmetryClaim {
            group: GroupSpec::reflection(&embedding),
            layers,
        },
        SymmetryClaim {
            group: GroupSpec::rotation_as_written(&embedding),
            layers: before_last,
        },
    ];
    s.finish(ArchitectureId::ReflrotEqcnn, Some(embedding), claims)
}

/// Half-turn-only variant: no row-linking sublayers, final pooling onto {8, 9}.
pub fn build_rot_eqcnn_variant() -> Result<ArchitectureSpec> {
    let embedding = Embedding::row_major(4, 4);
    let mut s = Stack::new(16);
    s.conv(Ansatz::Conv2SwapSym, reflrot_conv1(false));
    s.pool(one_based(&[
        (1, 5),
        (2, 6),
        (3, 7),
        (4, 8),
        (16, 12),
        (15, 11),
        (14, 10),
        (13, 9),
    ]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[(6, 5), (7, 8), (10, 9), (11, 12)]));
    s.conv(Ansatz::Conv2SwapSym, ring_brick_pairs(&s.active.clone()));
    s.pool(one_based(&[(5, 8), (12, 9)]));
    let layers = s.layers.len();
    let claims = vec![SymmetryClaim {
        group: GroupSpec::rotation_as_written(&embedding),
        layers,
    }];
    s.finish(ArchitectureId::RotEqcnnVariant, Some(embedding), claims)
}

/// Non-equivariant QCNN: generic bricks, pooling `r[2k] → r[2k+1]` until one
/// qubit remains.
pub fn build_baseline_qcnn(n: usize) -> Result<ArchitectureSpec> {
    if n != 4 && n != 16 {
        return Err(Error::Unsupported(format!(
            "baseline QCNN is defined for 4 or 16 qubits, not {n}"
        )));
    }
    let embedding = (n == 16).then(|| Embedding::row_major(4, 4));
    let mut s = Stack::new(n);
    while s.active.len() > 1 {
        let reg = s.active.clone();
        s.conv(Ansatz::Conv2Generic, ring_brick_pairs(&reg));
        s.pool(reg.chunks(2).map(|c| [c[0], c[1]]).collect());
    }
    s.finish(ArchitectureId::BaselineQcnn, embedding, Vec::new())
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "needs a power of two ≥ 2 qubits, got {n}"
        )));
    }
    Ok(())
}

fn sn_layer_spec(name: &str, qubits: Vec<usize>, offset: usize) -> Layer {
    Layer::shared(
        name,
        LayerKind::Conv,
        SharedParamLayer::new(name, Ansatz::SnLayer, vec![qubits.clone()], offset),
        qubits,
    )
}

/// Permutation-symmetric QCNN as an equal-weight mixture over every choice
/// of traced-out halves. Each stage after the first convolves the kept set
/// with its own three-parameter symmetric layer.
pub fn build_sn_eqcnn_mixture(n: usize) -> Result<ArchitectureSpec> {
    check_power_of_two(n)?;
    let branches = enumerate_branches(n)?;
    let stages = branches.branches[0].kept_chain.len();
    let all: Vec<usize> = (0..n).collect();
    let spec = ArchitectureSpec {
        id: ArchitectureId::SnEqcnnMixture,
        n_qubits: n,
        input_qubits: n,
        n_params: 3 * (stages + 1),
        embedding: None,
        layers: vec![sn_layer_spec("conv1", all.clone(), 0)],
        pooling_stages: Vec::new(),
        measurement: all,
        symmetry: vec![SymmetryClaim {
            group: GroupSpec::symmetric(n),
            layers: 1,
        }],
        branches: Some(branches),
        ancilla: None,
    };
    spec.validate()?;
    Ok(spec)
}

/// Pairs of a 4-qubit register in lexicographic order; position = A₁ code.
pub fn sn_pairs(n: usize) -> Vec<[usize; 2]> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| [i, j]))
        .collect()
}

/// Ancilla-register realization of the 4-qubit mixture.
///
/// Qubits 0–3 hold the input, 4–7 form A₁ and qubit 8 is A₂. A₁ starts in
/// the uniform superposition of `|c b⟩` for pair codes `c` in 0..6 (qubits
/// 4–6) and end bit `b` (qubit 7). The second convolution on pair `c` is
/// controlled by the code, then a SWAP controlled by all of A₁ moves pair
/// qubit `b` into A₂, which is read out.
pub fn build_sn_eqcnn_circuit(n: usize) -> Result<ArchitectureSpec> {
    build_sn_eqcnn_circuit_with((0..12).collect(), n)
}

/// As [`build_sn_eqcnn_circuit`] with A₁ uniform over `a1_basis` only.
pub fn build_sn_eqcnn_circuit_with(a1_basis: Vec<usize>, n: usize) -> Result<ArchitectureSpec> {
    if n != 4 {
        return Err(Error::Unsupported(format!(
            "the ancilla circuit is built for 4 qubits, not {n}"
        )));
    }
    if a1_basis.iter().any(|&b| b >= 12) {
        return domain("A1 basis states beyond the 12 branch codes");
    }
    let a1 = [4usize, 5, 6, 7];
    let a2 = 8usize;
    let code_controls = |c: usize| -> Vec<Control> {
        (0..3)
            .map(|k| Control {
                qubit: a1[k],
                bit: (c >> (2 - k)) & 1 == 1,
            })
            .collect()
    };
    let mut layers = vec![sn_layer_spec("conv1", vec![0, 1, 2, 3], 0)];
    let mut routes = Vec::new();
    for (c, [i, j]) in sn_pairs(4).into_iter().enumerate() {
        let s = SharedParamLayer::new("conv2", Ansatz::SnLayer, vec![vec![i, j]], 3)
            .with_controls(code_controls(c));
        let mut active = vec![i, j];
        active.extend(a1);
        layers.push(Layer::shared(
            &format!("conv2[{}{}]", i + 1, j + 1),
            LayerKind::Conv,
            s,
            active,
        ));
        for (bit, q) in [(false, i), (true, j)] {
            let mut controls = code_controls(c);
            controls.push(Control { qubit: a1[3], bit });
            routes.push(FixedGate {
                kind: GateKind::SWAP,
                targets: vec![a2, q],
                controls,
            });
        }
    }
    layers.push(Layer {
        name: "route".into(),
        kind: LayerKind::Route,
        body: LayerBody::Fixed(routes),
        active: (0..9).collect(),
    });
    let spec = ArchitectureSpec {
        id: ArchitectureId::SnEqcnnCircuit,
        n_qubits: 9,
        input_qubits: 4,
        n_params: 6,
        embedding: None,
        layers,
        pooling_stages: Vec::new(),
        measurement: vec![a2],
        symmetry: vec![SymmetryClaim {
            group: GroupSpec::symmetric(4),
            layers: 1,
        }],
        branches: None,
        ancilla: Some(AncillaPrep::UniformOver {
            n_qubits: 5,
            basis: a1_basis.into_iter().map(|b| b << 1).collect(),
        }),
    };
    spec.validate()?;
    Ok(spec)
}

/// Two symmetric layers, no pooling, mean Z over every qubit.
pub fn build_sn_eqnn(n: usize) -> Result<ArchitectureSpec> {
    if n != 4 {
        return Err(Error::Unsupported(format!(
            "the symmetric QNN is built for 4 qubits, not {n}"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let spec = ArchitectureSpec {
        id: ArchitectureId::SnEqnn,
        n_qubits: n,
        input_qubits: n,
        n_params: 6,
        embedding: None,
        layers: vec![
            sn_layer_spec("conv1", all.clone(), 0),
            sn_layer_spec("conv2", all.clone(), 3),
        ],
        pooling_stages: Vec::new(),
        measurement: all,
        symmetry: vec![SymmetryClaim {
            group: GroupSpec::symmetric(n),
            layers: 2,
        }],
        branches: None,
        ancilla: None,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    #[test]
    fn branch_counts() {
        assert_eq!(count_branches(2).unwrap(), 2);
        assert_eq!(count_branches(4).unwrap(), 12);
        assert_eq!(count_branches(8).unwrap(), 70 * 6 * 2);
        assert!(count_branches(6).is_err());
        assert!(count_branches(0).is_err());
    }

    #[test]
    fn enumerated_branches_are_distinct() {
        for n in [2, 4, 8] {
            let b = enumerate_branches(n).unwrap();
            assert_eq!(b.len() as u64, count_branches(n).unwrap());
            let set: HashSet<_> = b.branches.iter().cloned().collect();
            assert_eq!(set.len(), b.len());
        }
        let b4 = enumerate_branches(4).unwrap();
        assert!((b4.weight() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(b4.by_chain().len(), 6);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build_reflection_eqcnn().unwrap().n_params, 30);
        assert_eq!(build_refl_rot_eqcnn().unwrap().n_params, 30);
        assert_eq!(build_baseline_qcnn(16).unwrap().n_params, 48);
        assert_eq!(build_baseline_qcnn(4).unwrap().n_params, 24);
        assert_eq!(build_sn_eqcnn_mixture(4).unwrap().n_params, 6);
        assert_eq!(build_sn_eqcnn_circuit(4).unwrap().n_params, 6);
        assert_eq!(build_sn_eqnn(4).unwrap().n_params, 6);
    }

    #[test]
    fn readout_sets() {
        assert_eq!(build_reflection_eqcnn().unwrap().measurement, vec![6, 9]);
        assert_eq!(build_refl_rot_eqcnn().unwrap().measurement, vec![4, 7]);
        assert_eq!(build_rot_eqcnn_variant().unwrap().measurement, vec![7, 8]);
        let b = build_baseline_qcnn(16).unwrap();
        assert_eq!(b.pooling_stages.len(), 4);
        assert_eq!(b.measurement, vec![15]);
        assert_eq!(build_sn_eqcnn_circuit(4).unwrap().n_qubits, 9);
    }

    #[test]
    fn kept_sets() {
        let r = build_reflection_eqcnn().unwrap();
        let kept: Vec<_> = r.pooling_stages.iter().map(|s| s.kept.clone()).collect();
        assert_eq!(
            kept,
            vec![(4..12).collect::<Vec<_>>(), vec![5, 6, 9, 10], vec![6, 9]]
        );
        let rr = build_refl_rot_eqcnn().unwrap();
        let kept: Vec<_> = rr.pooling_stages.iter().map(|s| s.kept.clone()).collect();
        assert_eq!(
            kept,
            vec![(4..12).collect::<Vec<_>>(), vec![4, 7, 8, 11], vec![4, 7]]
        );
    }

    #[test]
    fn ids_round_trip() {
        for id in ArchitectureId::ALL {
            assert_eq!(id.as_str().parse::<ArchitectureId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert!("nope".parse::<ArchitectureId>().is_err());
        assert!(ArchitectureId::ReflectionEqcnn.build(4).is_err());
    }

    #[test]
    fn a1_preparation_amplitudes() {
        let spec = build_sn_eqcnn_circuit(4).unwrap();
        let a = spec.ancilla.unwrap().state::<f64>().unwrap();
        let amps = a.amplitudes();
        // A1 ⊗ A2 with A2 = |0>: A1 index b sits at 2b
        for b in 0..16 {
            let want = if b < 12 { 1.0 / 12f64.sqrt() } else { 0.0 };
            assert!((amps[2 * b].re - want).abs() < 1e-15);
            assert_eq!(amps[2 * b + 1].norm(), 0.0);
        }
    }

    #[test]
    fn sn_eqnn_at_zero_reads_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = build_sn_eqnn(4).unwrap();
        let m = spec.model::<f64>().unwrap();
        let psi = StateVector::random(4, &mut rng);
        let raw = psi.expectation_z(&[0, 1, 2, 3]).unwrap();
        assert!((m.expectation(&[0.0; 6], &psi).unwrap() - raw).abs() < 1e-14);
    }

    #[test]
    fn zero_parameter_mixture_and_circuit_read_plus_one() {
        let psi = StateVector::<f64>::zero_state(4);
        for spec in [
            build_sn_eqcnn_mixture(4).unwrap(),
            build_sn_eqcnn_circuit(4).unwrap(),
        ] {
            let v = spec
                .model::<f64>()
                .unwrap()
                .expectation(&[0.0; 6], &psi)
                .unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn models_evaluate_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for id in ArchitectureId::ALL {
            let n = if matches!(
                id,
                ArchitectureId::ReflectionEqcnn
                    | ArchitectureId::ReflrotEqcnn
                    | ArchitectureId::RotEqcnnVariant
            ) {
                16
            } else {
                4
            };
            let spec = id.build(n).unwrap();
            let model = spec.model::<f64>().unwrap();
            let p: Vec<f64> = (0..spec.n_params)
                .map(|_| rng.random_range(-PI..PI))
                .collect();
            let v = model
                .expectation(&p, &StateVector::random(n, &mut rng))
                .unwrap();
            assert!((-1.0..=1.0).contains(&v), "{id}: {v}");
            let total: usize = spec.param_groups().iter().map(|g| g.len).sum();
            assert_eq!(total, spec.n_params, "{id}");
        }
    }

    #[test]
    fn spec_serializes() {
        let spec = build_reflection_eqcnn().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ArchitectureSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
