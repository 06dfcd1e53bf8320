use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{domain, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    /// `RZ(θ₃)·RY(θ₂)·RZ(θ₁)`.
    Rot,
    /// Targets are `[control, target]`.
    CNOT,
    CZ,
    SWAP,
    /// `exp(−iθ Z⊗Z / 2)`.
    ZZ,
    /// A `Rot` that requires at least one control.
    ControlledRot,
    H,
}

impl GateKind {
    pub fn n_targets(self) -> usize {
        match self {
            GateKind::RX
            | GateKind::RY
            | GateKind::RZ
            | GateKind::Rot
            | GateKind::ControlledRot
            | GateKind::H => 1,
            GateKind::CNOT | GateKind::CZ | GateKind::SWAP | GateKind::ZZ => 2,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::ZZ => 1,
            GateKind::Rot | GateKind::ControlledRot => 3,
            GateKind::CNOT | GateKind::CZ | GateKind::SWAP | GateKind::H => 0,
        }
    }

    /// Whether the gate is `exp(−iθG/2)` for a single angle and involutory `G`.
    pub fn is_pauli_rotation(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::ZZ
        )
    }
}

/// Condition on a qubit: the gate acts only where the qubit reads `bit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Control {
    pub qubit: usize,
    pub bit: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self { qubit, bit: true }
    }

    pub fn off(qubit: usize) -> Self {
        Self { qubit, bit: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate<T> {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
    pub params: Vec<T>,
}

impl<T: Real> Gate<T> {
    pub fn new(kind: GateKind, targets: Vec<usize>, params: Vec<T>) -> Self {
        Self {
            kind,
            targets,
            controls: Vec::new(),
            params,
        }
    }

    pub fn rx(q: usize, theta: T) -> Self {
        Self::new(GateKind::RX, vec![q], vec![theta])
    }

    pub fn ry(q: usize, theta: T) -> Self {
        Self::new(GateKind::RY, vec![q], vec![theta])
    }

    pub fn rz(q: usize, theta: T) -> Self {
        Self::new(GateKind::RZ, vec![q], vec![theta])
    }

    pub fn rot(q: usize, theta: [T; 3]) -> Self {
        Self::new(GateKind::Rot, vec![q], theta.to_vec())
    }

    pub fn controlled_rot(q: usize, control: Control, theta: [T; 3]) -> Self {
        Self::new(GateKind::ControlledRot, vec![q], theta.to_vec()).with_control(control)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::CNOT, vec![control, target], vec![])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::CZ, vec![a, b], vec![])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::SWAP, vec![a, b], vec![])
    }

    pub fn zz(a: usize, b: usize, theta: T) -> Self {
        Self::new(GateKind::ZZ, vec![a, b], vec![theta])
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![q], vec![])
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.controls.push(control);
        self
    }

    pub fn with_controls(mut self, controls: impl IntoIterator<Item = Control>) -> Self {
        self.controls.extend(controls);
        self
    }

    /// Checks arity and index constraints against an `n_qubits` register.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.targets.len() != self.kind.n_targets() {
            return domain(format!(
                "{:?} takes {} target(s), got {}",
                self.kind,
                self.kind.n_targets(),
                self.targets.len()
            ));
        }
        if self.params.len() != self.kind.n_params() {
            return domain(format!(
                "{:?} takes {} parameter(s), got {}",
                self.kind,
                self.kind.n_params(),
                self.params.len()
            ));
        }
        if self.kind == GateKind::ControlledRot && self.controls.is_empty() {
            return domain("ControlledRot requires at least one control");
        }
        let mut seen = Vec::with_capacity(self.targets.len() + self.controls.len());
        for q in self
            .targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
        {
            if q >= n_qubits {
                return domain(format!("qubit {q} out of range for {n_qubits} qubits"));
            }
            if seen.contains(&q) {
                return domain(format!("qubit {q} used twice in {:?}", self.kind));
            }
            seen.push(q);
        }
        Ok(())
    }

    /// Unitary on the target qubits only (controls are applied by the caller).
    /// The first target is the most significant bit of the local index.
    pub fn matrix(&self) -> Matrix<T> {
        gate_matrix(self.kind, &self.params)
    }
}

/// Matrix of a gate kind for given angles; see [`Gate::matrix`].
pub fn gate_matrix<T: Real>(kind: GateKind, params: &[T]) -> Matrix<T> {
    let z = Complex::new(T::zero(), T::zero());
    let o = Complex::new(T::one(), T::zero());
    let half = T::of(0.5);
    match kind {
        GateKind::RX => {
            let (s, c) = (params[0] * half).sin_cos();
            let d = Complex::new(c, T::zero());
            let od = Complex::new(T::zero(), -s);
            Matrix::from_rows(&[&[d, od], &[od, d]])
        }
        GateKind::RY => {
            let (s, c) = (params[0] * half).sin_cos();
            let c = Complex::new(c, T::zero());
            let s = Complex::new(s, T::zero());
            Matrix::from_rows(&[&[c, -s], &[s, c]])
        }
        GateKind::RZ => {
            let e = Complex::from_polar(T::one(), -params[0] * half);
            Matrix::diagonal(&[e, e.conj()])
        }
        GateKind::Rot | GateKind::ControlledRot => {
            let first = gate_matrix(GateKind::RZ, &params[0..1]);
            let second = gate_matrix(GateKind::RY, &params[1..2]);
            let third = gate_matrix(GateKind::RZ, &params[2..3]);
            third.mul(&second).mul(&first)
        }
        GateKind::ZZ => {
            let e = Complex::from_polar(T::one(), -params[0] * half);
            Matrix::diagonal(&[e, e.conj(), e.conj(), e])
        }
        GateKind::CNOT => {
            Matrix::from_rows(&[&[o, z, z, z], &[z, o, z, z], &[z, z, z, o], &[z, z, o, z]])
        }
        GateKind::CZ => Matrix::diagonal(&[o, o, o, -o]),
        GateKind::SWAP => {
            Matrix::from_rows(&[&[o, z, z, z], &[z, z, o, z], &[z, o, z, z], &[z, z, z, o]])
        }
        GateKind::H => {
            let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
            Matrix::from_rows(&[&[r, r], &[r, -r]])
        }
    }
}
