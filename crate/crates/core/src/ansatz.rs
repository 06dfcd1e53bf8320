//! Two-qubit convolution and pooling ansatze, the permutation-symmetric
//! layer, and shared-parameter layer descriptions.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Angle, ParamGate};
use crate::error::{domain, Result};
use crate::simcore::{Control, GateKind};
use crate::Real;

/// `Rot(θ₁..θ₃)` on `a`, `Rot(θ₄..θ₆)` on `b`, then `CNOT(a→b)`.
pub fn conv2_generic<T: Real>(a: usize, b: usize, angles: &[Angle<T>; 6]) -> Vec<ParamGate<T>> {
    vec![
        ParamGate::new(GateKind::Rot, vec![a], angles[0..3].to_vec()),
        ParamGate::new(GateKind::Rot, vec![b], angles[3..6].to_vec()),
        ParamGate::new(GateKind::CNOT, vec![a, b], vec![]),
    ]
}

/// `Rot(θ₁..θ₃)` on both qubits, then `ZZ(θ₄)`. Commutes with `SWAP(a, b)`.
pub fn conv2_swapsym<T: Real>(a: usize, b: usize, angles: &[Angle<T>; 4]) -> Vec<ParamGate<T>> {
    vec![
        ParamGate::new(GateKind::Rot, vec![a], angles[0..3].to_vec()),
        ParamGate::new(GateKind::Rot, vec![b], angles[0..3].to_vec()),
        ParamGate::new(GateKind::ZZ, vec![a, b], vec![angles[3]]),
    ]
}

/// Deferred-measurement pooling from `measured` onto `kept`: `Rot(θ₁..θ₃)`
/// where `measured` reads 1, `Rot(θ₄..θ₆)` where it reads 0.
pub fn pool2<T: Real>(
    measured: usize,
    kept: usize,
    angles: &[Angle<T>; 6],
) -> Result<Vec<ParamGate<T>>> {
    if measured == kept {
        return domain(format!("pooling qubit {measured} onto itself"));
    }
    Ok(vec![
        ParamGate::new(GateKind::ControlledRot, vec![kept], angles[0..3].to_vec())
            .with_controls([Control::on(measured)]),
        ParamGate::new(GateKind::ControlledRot, vec![kept], angles[3..6].to_vec())
            .with_controls([Control::off(measured)]),
    ])
}

/// `RX(θ₁)` on every qubit, `RY(θ₂)` on every qubit, `ZZ(θ₃)` on every
/// unordered pair in lexicographic order.
pub fn sn_layer<T: Real>(qubits: &[usize], angles: &[Angle<T>; 3]) -> Result<Vec<ParamGate<T>>> {
    if qubits.len() < 2 {
        return domain("the symmetric layer needs at least two qubits");
    }
    let mut out = Vec::new();
    for &q in qubits {
        out.push(ParamGate::new(GateKind::RX, vec![q], vec![angles[0]]));
    }
    for &q in qubits {
        out.push(ParamGate::new(GateKind::RY, vec![q], vec![angles[1]]));
    }
    for (i, &a) in qubits.iter().enumerate() {
        for &b in &qubits[i + 1..] {
            out.push(ParamGate::new(GateKind::ZZ, vec![a, b], vec![angles[2]]));
        }
    }
    Ok(out)
}

/// Brick pairs on a register: `(r₀,r₁),(r₂,r₃),…` then `(r₁,r₂),(r₃,r₄),…`,
/// closing the ring with `(r_{L−1}, r₀)`. A two-qubit register has one pair.
pub fn ring_brick_pairs(register: &[usize]) -> Vec<[usize; 2]> {
    let l = register.len();
    if l < 2 {
        return Vec::new();
    }
    if l == 2 {
        return vec![[register[0], register[1]]];
    }
    let mut out: Vec<[usize; 2]> = (0..l / 2)
        .map(|i| [register[2 * i], register[2 * i + 1]])
        .collect();
    for i in 0..l / 2 {
        let a = 2 * i + 1;
        let b = (2 * i + 2) % l;
        if a < l && a != b {
            out.push([register[a], register[b]]);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    Conv2Generic,
    Conv2SwapSym,
    /// Placements are `[measured, kept]`.
    Pool2,
    /// One placement covering the whole register.
    SnLayer,
}

impl Ansatz {
    pub fn n_params(self) -> usize {
        match self {
            Ansatz::Conv2Generic | Ansatz::Pool2 => 6,
            Ansatz::Conv2SwapSym => 4,
            Ansatz::SnLayer => 3,
        }
    }
}

/// Layer of one ansatz repeated on several placements, all reading the
/// same parameter slots `param_offset..param_offset + ansatz.n_params()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedParamLayer {
    pub name: String,
    pub ansatz: Ansatz,
    pub placements: Vec<Vec<usize>>,
    pub param_offset: usize,
    /// Extra controls added to every gate of the layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<Control>,
}

impl SharedParamLayer {
    pub fn new(
        name: impl Into<String>,
        ansatz: Ansatz,
        placements: Vec<Vec<usize>>,
        param_offset: usize,
    ) -> Self {
        Self {
            name: name.into(),
            ansatz,
            placements,
            param_offset,
            controls: Vec::new(),
        }
    }

    pub fn with_controls(mut self, controls: Vec<Control>) -> Self {
        self.controls = controls;
        self
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    pub fn param_range(&self) -> Range<usize> {
        self.param_offset..self.param_offset + self.n_params()
    }

    pub fn gates<T: Real>(&self) -> Result<Vec<ParamGate<T>>> {
        let o = self.param_offset;
        let mut out = Vec::new();
        for p in &self.placements {
            let gates = match (self.ansatz, p.as_slice()) {
                (Ansatz::Conv2Generic, &[a, b]) => conv2_generic(a, b, &Angle::slots(o)),
                (Ansatz::Conv2SwapSym, &[a, b]) => conv2_swapsym(a, b, &Angle::slots(o)),
                (Ansatz::Pool2, &[m, k]) => pool2(m, k, &Angle::slots(o))?,
                (Ansatz::SnLayer, qs) => sn_layer(qs, &Angle::slots(o))?,
                (a, qs) => return domain(format!("{a:?} cannot be placed on {qs:?}")),
            };
            out.extend(
                gates
                    .into_iter()
                    .map(|g| g.with_controls(self.controls.iter().copied())),
            );
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGroup {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Flat parameter vector with named slices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector<T> {
    pub values: Vec<T>,
    pub groups: Vec<ParamGroup>,
}

impl<T: Real> ParamVector<T> {
    /// Zero-valued vector; groups must tile `0..total` contiguously.
    pub fn zeros(groups: Vec<ParamGroup>) -> Result<Self> {
        let mut next = 0;
        for g in &groups {
            if g.offset != next {
                return domain(format!(
                    "parameter group {} starts at {}, expected {next}",
                    g.name, g.offset
                ));
            }
            next += g.len;
        }
        Ok(Self {
            values: vec![T::zero(); next],
            groups,
        })
    }

    /// Values drawn independently from `U[−π, π]`.
    pub fn uniform<R: Rng + ?Sized>(groups: Vec<ParamGroup>, rng: &mut R) -> Result<Self> {
        let mut v = Self::zeros(groups)?;
        let pi = std::f64::consts::PI;
        for x in &mut v.values {
            *x = T::of(rng.random_range(-pi..pi));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn group(&self, name: &str) -> Option<&[T]> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .map(|g| &self.values[g.offset..g.offset + g.len])
    }
}
