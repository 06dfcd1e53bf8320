//! Parameterized circuits, fused execution and exact gradients.
//!
//! A [`Circuit`] is a list of [`ParamGate`]s whose angles are either fixed or
//! read from a shared parameter vector. [`Circuit::compile`] fuses runs of
//! gates acting on at most two qubits (plus a common set of external
//! controls) into [`Program`] blocks, each one dense 2×2 or 4×4 matrix at
//! evaluation time.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::simcore::{gate_matrix, Control, Gate, GateKind, Matrix, StateVector};
use crate::Real;

/// Where a gate angle comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Angle<T> {
    Fixed(T),
    /// Index into the parameter vector.
    Slot(usize),
}

impl<T: Real> Angle<T> {
    #[inline]
    pub fn value(&self, params: &[T]) -> T {
        match *self {
            Angle::Fixed(v) => v,
            Angle::Slot(s) => params[s],
        }
    }

    /// `Slot(offset), …, Slot(offset + N − 1)`.
    pub fn slots<const N: usize>(offset: usize) -> [Angle<T>; N] {
        std::array::from_fn(|i| Angle::Slot(offset + i))
    }

    pub fn fixed<const N: usize>(values: [T; N]) -> [Angle<T>; N] {
        values.map(Angle::Fixed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGate<T> {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
    pub angles: Vec<Angle<T>>,
}

impl<T: Real> ParamGate<T> {
    pub fn new(kind: GateKind, targets: Vec<usize>, angles: Vec<Angle<T>>) -> Self {
        Self {
            kind,
            targets,
            controls: Vec::new(),
            angles,
        }
    }

    pub fn fixed(gate: &Gate<T>) -> Self {
        Self {
            kind: gate.kind,
            targets: gate.targets.clone(),
            controls: gate.controls.clone(),
            angles: gate.params.iter().map(|&p| Angle::Fixed(p)).collect(),
        }
    }

    pub fn with_controls(mut self, controls: impl IntoIterator<Item = Control>) -> Self {
        self.controls.extend(controls);
        self
    }

    pub fn bind(&self, params: &[T]) -> Gate<T> {
        Gate {
            kind: self.kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
            params: self.angles.iter().map(|a| a.value(params)).collect(),
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.angles.iter().filter_map(|a| match a {
            Angle::Slot(s) => Some(*s),
            Angle::Fixed(_) => None,
        })
    }

    fn support(&self) -> Vec<usize> {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T> {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<ParamGate<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n_qubits: usize, n_params: usize) -> Self {
        Self {
            n_qubits,
            n_params,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[ParamGate<T>] {
        &self.gates
    }

    pub fn push(&mut self, gate: ParamGate<T>) -> Result<()> {
        if gate.angles.len() != gate.kind.n_params() {
            return domain(format!(
                "{:?} takes {} angle(s), got {}",
                gate.kind,
                gate.kind.n_params(),
                gate.angles.len()
            ));
        }
        if let Some(s) = gate.slots().find(|&s| s >= self.n_params) {
            return domain(format!(
                "slot {s} outside a {}-parameter circuit",
                self.n_params
            ));
        }
        gate.bind(&vec![T::zero(); self.n_params])
            .validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = ParamGate<T>>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn append(&mut self, other: &Circuit<T>) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return domain("appending a circuit on a different register");
        }
        self.n_params = self.n_params.max(other.n_params);
        self.extend(other.gates.iter().cloned())
    }

    pub fn bind(&self, params: &[T]) -> Result<Vec<Gate<T>>> {
        self.check_params(params)?;
        Ok(self.gates.iter().map(|g| g.bind(params)).collect())
    }

    /// Gate-by-gate reference evaluation.
    pub fn run(&self, params: &[T], state: &StateVector<T>) -> Result<StateVector<T>> {
        self.check_state(state)?;
        let mut s = state.clone();
        for g in self.bind(params)? {
            s.apply_gate_mut(&g)?;
        }
        Ok(s)
    }

    /// Dense unitary, column `j` being the image of basis state `j`. Limited to 12 qubits.
    pub fn unitary(&self, params: &[T]) -> Result<Matrix<T>> {
        if self.n_qubits > 12 {
            return Err(Error::Unsupported(format!(
                "dense unitary of {} qubits",
                self.n_qubits
            )));
        }
        let d = 1usize << self.n_qubits;
        let mut m = Matrix::zeros(d);
        for j in 0..d {
            let col = self.run(params, &StateVector::init_basis_state(self.n_qubits, j)?)?;
            for (i, a) in col.amplitudes().iter().enumerate() {
                m[(i, j)] = *a;
            }
        }
        Ok(m)
    }

    fn check_params(&self, params: &[T]) -> Result<()> {
        if params.len() != self.n_params {
            return domain(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            ));
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector<T>) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return domain(format!(
                "circuit acts on {} qubits, state has {}",
                self.n_qubits,
                state.n_qubits()
            ));
        }
        Ok(())
    }

    pub fn compile(&self) -> Program<T> {
        let mut blocks: Vec<Block<T>> = Vec::new();
        for g in &self.gates {
            let merged = blocks.last_mut().is_some_and(|b| b.try_absorb(g));
            if !merged {
                let mut b = Block::start(g);
                assert!(b.try_absorb(g), "a block always absorbs its first gate");
                blocks.push(b);
            }
        }
        Program {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            blocks,
        }
    }
}

/// Observable measured at the end of a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// Mean of `Z_q` over the listed qubits.
    MeanZ(Vec<usize>),
}

impl Observable {
    pub fn qubits(&self) -> &[usize] {
        match self {
            Observable::MeanZ(q) => q,
        }
    }

    pub fn expectation<T: Real>(&self, state: &StateVector<T>) -> Result<T> {
        match self {
            Observable::MeanZ(q) => state.expectation_z(q),
        }
    }

    /// Diagonal of the observable in the computational basis.
    pub fn diagonal<T: Real>(&self, n_qubits: usize) -> Result<Vec<T>> {
        let q = self.qubits();
        if q.is_empty() || q.iter().any(|&x| x >= n_qubits) {
            return domain(format!(
                "invalid measurement set {q:?} on {n_qubits} qubits"
            ));
        }
        let masks: Vec<usize> = q.iter().map(|&x| 1usize << (n_qubits - 1 - x)).collect();
        let inv = T::one() / T::of(q.len() as f64);
        Ok((0..1usize << n_qubits)
            .map(|i| {
                let ones = masks.iter().filter(|&&m| i & m != 0).count();
                T::of(q.len() as f64 - 2.0 * ones as f64) * inv
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Prim<T> {
    Fixed(Matrix<T>),
    Rotation { kind: GateKind, angle: Angle<T> },
}

/// One primitive inside a block, on block-local positions.
#[derive(Clone, Debug, PartialEq)]
struct Op<T> {
    targets: Vec<usize>,
    controls: Vec<(usize, bool)>,
    prim: Prim<T>,
}

impl<T: Real> Op<T> {
    fn matrix(&self, params: &[T], shift: T) -> Matrix<T> {
        match &self.prim {
            Prim::Fixed(m) => m.clone(),
            Prim::Rotation { kind, angle } => gate_matrix(*kind, &[angle.value(params) + shift]),
        }
    }

    fn is_controlled(&self, block_controls: usize) -> bool {
        block_controls > 0 || !self.controls.is_empty()
    }

    /// Action on the `width`-qubit block space. With `derivative`, the
    /// identity outside the controlled subspace is replaced by zero.
    fn embed(&self, m: &Matrix<T>, width: usize, derivative: bool) -> Matrix<T> {
        let d = 1usize << width;
        let bit = |x: usize, p: usize| (x >> (width - 1 - p)) & 1;
        let tmask: usize = self.targets.iter().map(|&p| 1 << (width - 1 - p)).sum();
        let sub = |x: usize| {
            self.targets
                .iter()
                .fold(0, |acc, &p| (acc << 1) | bit(x, p))
        };
        let mut out = Matrix::zeros(d);
        for r in 0..d {
            let active = self.controls.iter().all(|&(p, b)| bit(r, p) == b as usize);
            for c in 0..d {
                if r & !tmask != c & !tmask {
                    continue;
                }
                out[(r, c)] = if active {
                    m[(sub(r), sub(c))]
                } else if derivative || sub(r) != sub(c) {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::new(T::one(), T::zero())
                };
            }
        }
        out
    }
}

/// Fused run of gates on one or two local qubits under common controls.
#[derive(Clone, Debug, PartialEq)]
struct Block<T> {
    qubits: Vec<usize>,
    controls: Vec<Control>,
    ops: Vec<Op<T>>,
}

impl<T: Real> Block<T> {
    fn start(g: &ParamGate<T>) -> Self {
        let support = g.support();
        if support.len() <= 2 {
            Self {
                qubits: Vec::new(),
                controls: Vec::new(),
                ops: Vec::new(),
            }
        } else {
            Self {
                qubits: Vec::new(),
                controls: g.controls.clone(),
                ops: Vec::new(),
            }
        }
    }

    fn try_absorb(&mut self, g: &ParamGate<T>) -> bool {
        if !self.controls.iter().all(|c| g.controls.contains(c)) {
            return false;
        }
        let external: Vec<usize> = self.controls.iter().map(|c| c.qubit).collect();
        let rest: Vec<usize> = g
            .support()
            .into_iter()
            .filter(|q| !external.contains(q))
            .collect();
        let mut qubits = self.qubits.clone();
        for &q in &rest {
            if !qubits.contains(&q) {
                qubits.push(q);
            }
        }
        if qubits.len() > 2 {
            return false;
        }
        self.qubits = qubits;
        let pos = |q: usize| self.qubits.iter().position(|&x| x == q).expect("local");
        let targets: Vec<usize> = g.targets.iter().map(|&q| pos(q)).collect();
        let controls: Vec<(usize, bool)> = g
            .controls
            .iter()
            .filter(|c| !external.contains(&c.qubit))
            .map(|c| (pos(c.qubit), c.bit))
            .collect();
        let mut push = |t: Vec<usize>, prim: Prim<T>| {
            self.ops.push(Op {
                targets: t,
                controls: controls.clone(),
                prim,
            })
        };
        match g.kind {
            GateKind::Rot | GateKind::ControlledRot => {
                for (kind, angle) in [GateKind::RZ, GateKind::RY, GateKind::RZ]
                    .into_iter()
                    .zip(g.angles.iter().copied())
                {
                    push(targets.clone(), Prim::Rotation { kind, angle });
                }
            }
            k if k.is_pauli_rotation() => push(
                targets,
                Prim::Rotation {
                    kind: k,
                    angle: g.angles[0],
                },
            ),
            k => push(targets, Prim::Fixed(gate_matrix(k, &[]))),
        }
        true
    }

    fn width(&self) -> usize {
        self.qubits.len()
    }

    /// Embedded op matrices at `params`.
    fn op_matrices(&self, params: &[T]) -> Vec<Matrix<T>> {
        self.ops
            .iter()
            .map(|op| op.embed(&op.matrix(params, T::zero()), self.width(), false))
            .collect()
    }

    fn matrix_with(&self, params: &[T], shifted: Option<(usize, T)>) -> Matrix<T> {
        let w = self.width();
        let mut acc = Matrix::identity(1 << w);
        for (j, op) in self.ops.iter().enumerate() {
            let shift = match shifted {
                Some((k, s)) if k == j => s,
                _ => T::zero(),
            };
            acc = op.embed(&op.matrix(params, shift), w, false).mul(&acc);
        }
        acc
    }

    fn apply(&self, state: &mut StateVector<T>, m: &Matrix<T>) {
        state.apply_matrix(&self.qubits, &self.controls, m);
    }
}

/// Compiled form of a [`Circuit`].
#[derive(Clone, Debug, PartialEq)]
pub struct Program<T> {
    n_qubits: usize,
    n_params: usize,
    blocks: Vec<Block<T>>,
}

impl<T: Real> Program<T> {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    fn check(&self, params: &[T], state: &StateVector<T>) -> Result<()> {
        if params.len() != self.n_params {
            return domain(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            ));
        }
        if state.n_qubits() != self.n_qubits {
            return domain(format!(
                "program acts on {} qubits, state has {}",
                self.n_qubits,
                state.n_qubits()
            ));
        }
        Ok(())
    }

    fn matrices(&self, params: &[T]) -> Vec<Matrix<T>> {
        self.blocks
            .iter()
            .map(|b| b.matrix_with(params, None))
            .collect()
    }

    pub fn forward(&self, params: &[T], state: &StateVector<T>) -> Result<StateVector<T>> {
        self.check(params, state)?;
        let mut s = state.clone();
        for (b, m) in self.blocks.iter().zip(self.matrices(params)) {
            b.apply(&mut s, &m);
        }
        Ok(s)
    }

    pub fn expectation(&self, params: &[T], state: &StateVector<T>, obs: &Observable) -> Result<T> {
        obs.expectation(&self.forward(params, state)?)
    }

    /// Value and gradient of `⟨ψ|U†MU|ψ⟩` by one forward and one backward sweep.
    pub fn gradient_adjoint(
        &self,
        params: &[T],
        state: &StateVector<T>,
        obs: &Observable,
    ) -> Result<(T, Vec<T>)> {
        self.check(params, state)?;
        let diag = obs.diagonal::<T>(self.n_qubits)?;
        let mats = self.matrices(params);
        let mut psi = state.clone();
        for (b, m) in self.blocks.iter().zip(&mats) {
            b.apply(&mut psi, m);
        }
        let value: T = psi
            .amplitudes()
            .iter()
            .zip(&diag)
            .map(|(a, &d)| a.norm_sqr() * d)
            .sum();
        let mut lam = psi.clone();
        for (a, &d) in lam.amplitudes_mut().iter_mut().zip(&diag) {
            *a = a.scale(d);
        }
        let mut grad = vec![T::zero(); self.n_params];
        let two = T::of(2.0);
        for (b, m) in self.blocks.iter().zip(&mats).rev() {
            let inv = m.adjoint();
            b.apply(&mut psi, &inv);
            let has_slot = b.ops.iter().any(|op| {
                matches!(
                    op.prim,
                    Prim::Rotation {
                        angle: Angle::Slot(_),
                        ..
                    }
                )
            });
            if has_slot {
                let g = psi.local_overlap(&lam, &b.qubits, &b.controls);
                let ops = b.op_matrices(params);
                let d = 1usize << b.width();
                // suffix[j] = ops[L-1]·…·ops[j+1]; prefix built on the fly
                let mut suffix = vec![Matrix::identity(d); ops.len()];
                for j in (0..ops.len().saturating_sub(1)).rev() {
                    suffix[j] = suffix[j + 1].mul(&ops[j + 1]);
                }
                let mut prefix = Matrix::identity(d);
                for (j, op) in b.ops.iter().enumerate() {
                    if let Prim::Rotation {
                        kind,
                        angle: Angle::Slot(s),
                    } = op.prim
                    {
                        let half = T::of(0.5);
                        let dm = gate_matrix(kind, &[params[s] + T::PI()])
                            .scale(Complex::new(half, T::zero()));
                        let dfull = suffix[j].mul(&op.embed(&dm, b.width(), true)).mul(&prefix);
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for (x, y) in dfull.data().iter().zip(g.data()) {
                            acc = acc + x * y;
                        }
                        grad[s] = grad[s] + two * acc.re;
                    }
                    prefix = ops[j].mul(&prefix);
                }
            }
            b.apply(&mut lam, &inv);
        }
        Ok((value, grad))
    }

    /// Gradient by parameter shifts over every primitive angle occurrence,
    /// summed per shared slot.
    ///
    /// Uncontrolled rotations use the two-term rule at ±π/2. A controlled
    /// rotation has generator spectrum {0, ±½}, so it takes the four-term
    /// rule at ±π/2 and ±3π/2.
    pub fn gradient_param_shift(
        &self,
        params: &[T],
        state: &StateVector<T>,
        obs: &Observable,
    ) -> Result<Vec<T>> {
        self.check(params, state)?;
        obs.diagonal::<T>(self.n_qubits)?;
        let mats = self.matrices(params);
        let half_pi = T::FRAC_PI_2();
        let sqrt2 = T::SQRT_2();
        let c_plus = (sqrt2 + T::one()) / (T::of(4.0) * sqrt2);
        let c_minus = (sqrt2 - T::one()) / (T::of(4.0) * sqrt2);
        let two_term = [(half_pi, T::of(0.5)), (-half_pi, T::of(-0.5))];
        let three_half_pi = T::of(3.0) * half_pi;
        let four_term = [
            (half_pi, c_plus),
            (-half_pi, -c_plus),
            (three_half_pi, -c_minus),
            (-three_half_pi, c_minus),
        ];
        let mut grad = vec![T::zero(); self.n_params];
        let mut prefix = state.clone();
        for (bi, b) in self.blocks.iter().enumerate() {
            for (j, op) in b.ops.iter().enumerate() {
                let Prim::Rotation { angle, .. } = op.prim else {
                    continue;
                };
                let Angle::Slot(s) = angle else { continue };
                let rule: &[(T, T)] = if op.is_controlled(b.controls.len()) {
                    &four_term
                } else {
                    &two_term
                };
                for &(shift, coef) in rule {
                    let mut st = prefix.clone();
                    b.apply(&mut st, &b.matrix_with(params, Some((j, shift))));
                    for (b2, m2) in self.blocks[bi + 1..].iter().zip(&mats[bi + 1..]) {
                        b2.apply(&mut st, m2);
                    }
                    grad[s] = grad[s] + coef * obs.expectation(&st)?;
                }
            }
            b.apply(&mut prefix, &mats[bi]);
        }
        Ok(grad)
    }
}

/// How gradients are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    #[default]
    Adjoint,
    ParameterShift,
}

/// One weighted `(program, observable)` pair of a [`Model`].
#[derive(Clone, Debug)]
pub struct Term<T> {
    pub weight: T,
    pub program: Program<T>,
    pub observable: Observable,
}

/// Scalar-output model `m(θ, ψ) = Σ_t w_t ⟨ψ'|U_t†M_tU_t|ψ'⟩`, where `ψ'` is the
/// input tensored with an optional fixed ancilla state on the trailing qubits.
#[derive(Clone, Debug)]
pub struct Model<T> {
    input_qubits: usize,
    n_params: usize,
    ancilla: Option<StateVector<T>>,
    terms: Vec<Term<T>>,
}

impl<T: Real> Model<T> {
    pub fn new(
        input_qubits: usize,
        n_params: usize,
        ancilla: Option<StateVector<T>>,
        terms: Vec<Term<T>>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return domain("a model needs at least one term");
        }
        let total = input_qubits + ancilla.as_ref().map_or(0, |a| a.n_qubits());
        for t in &terms {
            if t.program.n_qubits() != total || t.program.n_params() != n_params {
                return Err(Error::Domain(format!(
                    "term on {} qubits / {} params does not fit a {total}-qubit, {n_params}-parameter model",
                    t.program.n_qubits(),
                    t.program.n_params()
                )));
            }
            t.observable.diagonal::<T>(total)?;
        }
        Ok(Self {
            input_qubits,
            n_params,
            ancilla,
            terms,
        })
    }

    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn prepare(&self, input: &StateVector<T>) -> Result<StateVector<T>> {
        if input.n_qubits() != self.input_qubits {
            return domain(format!(
                "model takes {}-qubit inputs, got {}",
                self.input_qubits,
                input.n_qubits()
            ));
        }
        Ok(match &self.ancilla {
            Some(a) => input.tensor(a),
            None => input.clone(),
        })
    }

    pub fn expectation(&self, params: &[T], input: &StateVector<T>) -> Result<T> {
        let s = self.prepare(input)?;
        let mut acc = T::zero();
        for t in &self.terms {
            acc = acc + t.weight * t.program.expectation(params, &s, &t.observable)?;
        }
        Ok(acc)
    }

    pub fn gradient(
        &self,
        params: &[T],
        input: &StateVector<T>,
        method: GradientMethod,
    ) -> Result<(T, Vec<T>)> {
        let s = self.prepare(input)?;
        let mut value = T::zero();
        let mut grad = vec![T::zero(); self.n_params];
        for t in &self.terms {
            let (v, g) = match method {
                GradientMethod::Adjoint => t.program.gradient_adjoint(params, &s, &t.observable)?,
                GradientMethod::ParameterShift => (
                    t.program.expectation(params, &s, &t.observable)?,
                    t.program.gradient_param_shift(params, &s, &t.observable)?,
                ),
            };
            value = value + t.weight * v;
            for (a, b) in grad.iter_mut().zip(g) {
                *a = *a + t.weight * b;
            }
        }
        Ok((value, grad))
    }

    /// Central finite differences of [`Model::expectation`].
    pub fn gradient_finite_difference(
        &self,
        params: &[T],
        input: &StateVector<T>,
        h: T,
    ) -> Result<Vec<T>> {
        let mut p = params.to_vec();
        (0..params.len())
            .map(|k| {
                p[k] = params[k] + h;
                let up = self.expectation(&p, input)?;
                p[k] = params[k] - h;
                let down = self.expectation(&p, input)?;
                p[k] = params[k];
                Ok((up - down) / (T::of(2.0) * h))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_circuit(
        rng: &mut ChaCha8Rng,
        n: usize,
        n_gates: usize,
        n_params: usize,
    ) -> Circuit<f64> {
        let mut c = Circuit::new(n, n_params);
        for _ in 0..n_gates {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n);
            while b == a {
                b = rng.random_range(0..n);
            }
            let slot = |rng: &mut ChaCha8Rng| Angle::Slot(rng.random_range(0..n_params));
            let g = match rng.random_range(0..8) {
                0 => ParamGate::new(GateKind::RX, vec![a], vec![slot(rng)]),
                1 => ParamGate::new(GateKind::RY, vec![a], vec![slot(rng)]),
                2 => ParamGate::new(
                    GateKind::Rot,
                    vec![a],
                    vec![slot(rng), slot(rng), Angle::Fixed(0.3)],
                ),
                3 => ParamGate::new(GateKind::ZZ, vec![a, b], vec![slot(rng)]),
                4 => ParamGate::new(GateKind::CNOT, vec![a, b], vec![]),
                5 => ParamGate::new(
                    GateKind::ControlledRot,
                    vec![a],
                    vec![slot(rng), slot(rng), slot(rng)],
                )
                .with_controls([Control {
                    qubit: b,
                    bit: rng.random(),
                }]),
                6 => {
                    let mut c2 = rng.random_range(0..n);
                    while c2 == a || c2 == b {
                        c2 = rng.random_range(0..n);
                    }
                    ParamGate::new(GateKind::RY, vec![a], vec![slot(rng)])
                        .with_controls([Control::on(b), Control::off(c2)])
                }
                _ => ParamGate::new(GateKind::SWAP, vec![a, b], vec![]),
            };
            c.push(g).unwrap();
        }
        c
    }

    fn random_params(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        (0..k).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn fused_program_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let c = random_circuit(&mut rng, 5, 30, 6);
            let p = random_params(&mut rng, 6);
            let psi = StateVector::random(5, &mut rng);
            let a = c.run(&p, &psi).unwrap();
            let b = c.compile().forward(&p, &psi).unwrap();
            assert!(a.distance(&b) < 1e-12);
        }
    }

    #[test]
    fn consecutive_small_gates_fuse() {
        let mut c = Circuit::<f64>::new(3, 4);
        c.extend([
            ParamGate::new(GateKind::Rot, vec![0], Angle::slots::<3>(0).to_vec()),
            ParamGate::new(GateKind::Rot, vec![1], Angle::slots::<3>(0).to_vec()),
            ParamGate::new(GateKind::ZZ, vec![0, 1], vec![Angle::Slot(3)]),
            ParamGate::new(GateKind::CNOT, vec![1, 2], vec![]),
        ])
        .unwrap();
        assert_eq!(c.compile().n_blocks(), 2);
    }

    #[test]
    fn adjoint_matches_parameter_shift_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let c = random_circuit(&mut rng, 4, 25, 5);
            let prog = c.compile();
            let p = random_params(&mut rng, 5);
            let psi = StateVector::random(4, &mut rng);
            let obs = Observable::MeanZ(vec![0, 2]);
            let (v, ga) = prog.gradient_adjoint(&p, &psi, &obs).unwrap();
            assert!((v - prog.expectation(&p, &psi, &obs).unwrap()).abs() < 1e-12);
            let gs = prog.gradient_param_shift(&p, &psi, &obs).unwrap();
            let model = Model::new(
                4,
                5,
                None,
                vec![Term {
                    weight: 1.0,
                    program: prog,
                    observable: obs,
                }],
            )
            .unwrap();
            let gf = model.gradient_finite_difference(&p, &psi, 1e-5).unwrap();
            for k in 0..5 {
                assert!((ga[k] - gs[k]).abs() < 1e-10, "{k}: {} vs {}", ga[k], gs[k]);
                assert!((ga[k] - gf[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn ry_shift_rule_analytic() {
        let mut c = Circuit::<f64>::new(1, 1);
        c.push(ParamGate::new(GateKind::RY, vec![0], vec![Angle::Slot(0)]))
            .unwrap();
        let g = c
            .compile()
            .gradient_param_shift(
                &[PI / 3.0],
                &StateVector::zero_state(1),
                &Observable::MeanZ(vec![0]),
            )
            .unwrap();
        assert!((g[0] + 3f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_term_rule_is_wrong_for_controlled_rotations() {
        // interfering the two control branches exposes a half-frequency term:
        // <Z_0> after H·C-RY(θ)·H is cos(θ/2)
        let mut c = Circuit::<f64>::new(2, 1);
        c.push(ParamGate::new(GateKind::H, vec![0], vec![]))
            .unwrap();
        c.push(
            ParamGate::new(GateKind::RY, vec![1], vec![Angle::Slot(0)])
                .with_controls([Control::on(0)]),
        )
        .unwrap();
        c.push(ParamGate::new(GateKind::H, vec![0], vec![]))
            .unwrap();
        let prog = c.compile();
        let obs = Observable::MeanZ(vec![0]);
        let psi = StateVector::zero_state(2);
        let theta: f64 = 0.7;
        let f = |t: f64| prog.expectation(&[t], &psi, &obs).unwrap();
        assert!((f(theta) - (theta / 2.0).cos()).abs() < 1e-14);
        let exact = -0.5 * (theta / 2.0).sin();
        let g = prog.gradient_param_shift(&[theta], &psi, &obs).unwrap()[0];
        assert!((g - exact).abs() < 1e-14);
        let naive = (f(theta + PI / 2.0) - f(theta - PI / 2.0)) / 2.0;
        assert!((naive - exact).abs() > 1e-3);
    }

    #[test]
    fn shared_slot_sums_placements() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::random(2, &mut rng);
        let obs = Observable::MeanZ(vec![0, 1]);
        let mut shared = Circuit::<f64>::new(2, 1);
        let mut split = Circuit::<f64>::new(2, 2);
        for (q, s) in [(0, 0), (1, 1)] {
            shared
                .push(ParamGate::new(GateKind::RX, vec![q], vec![Angle::Slot(0)]))
                .unwrap();
            split
                .push(ParamGate::new(GateKind::RX, vec![q], vec![Angle::Slot(s)]))
                .unwrap();
        }
        shared
            .push(ParamGate::new(GateKind::CNOT, vec![0, 1], vec![]))
            .unwrap();
        split
            .push(ParamGate::new(GateKind::CNOT, vec![0, 1], vec![]))
            .unwrap();
        let t = 0.4;
        let g1 = shared
            .compile()
            .gradient_param_shift(&[t], &psi, &obs)
            .unwrap();
        let g2 = split
            .compile()
            .gradient_param_shift(&[t, t], &psi, &obs)
            .unwrap();
        assert!((g1[0] - (g2[0] + g2[1])).abs() < 1e-13);
    }

    #[test]
    fn push_rejects_bad_gates() {
        let mut c = Circuit::<f64>::new(2, 1);
        assert!(c
            .push(ParamGate::new(GateKind::RX, vec![0], vec![Angle::Slot(1)]))
            .is_err());
        assert!(c
            .push(ParamGate::new(GateKind::RX, vec![2], vec![Angle::Slot(0)]))
            .is_err());
        assert!(c
            .push(ParamGate::new(GateKind::RX, vec![0], vec![]))
            .is_err());
    }

    #[test]
    fn observable_diagonal() {
        let d = Observable::MeanZ(vec![0, 1]).diagonal::<f64>(2).unwrap();
        assert_eq!(d, vec![1.0, 0.0, 0.0, -1.0]);
        assert!(Observable::MeanZ(vec![]).diagonal::<f64>(2).is_err());
    }
}
