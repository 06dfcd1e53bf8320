use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Control, Gate, Matrix};
use crate::error::{domain, Result};
use crate::groups::QubitPermutation;
use crate::Real;

/// Dense pure state of `n_qubits` qubits.
///
/// Qubit 0 is the most significant bit of the basis index: in a 3-qubit
/// register, basis index `0b100` is `|1⟩|0⟩|0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

#[inline]
pub(crate) fn bit_mask(n_qubits: usize, qubit: usize) -> usize {
    1usize << (n_qubits - 1 - qubit)
}

/// Inserts a zero at bit position `pos`, shifting higher bits up.
#[inline]
fn insert_zero(x: usize, pos: u32) -> usize {
    let low = x & ((1usize << pos) - 1);
    ((x >> pos) << (pos + 1)) | low
}

pub(crate) fn control_mask(n_qubits: usize, controls: &[Control]) -> (usize, usize) {
    controls.iter().fold((0, 0), |(m, v), c| {
        let b = bit_mask(n_qubits, c.qubit);
        (m | b, if c.bit { v | b } else { v })
    })
}

impl<T: Real> StateVector<T> {
    pub fn init_basis_state(n_qubits: usize, bitstring: usize) -> Result<Self> {
        if n_qubits >= usize::BITS as usize {
            return domain(format!("{n_qubits} qubits is too many"));
        }
        let dim = 1usize << n_qubits;
        if bitstring >= dim {
            return domain(format!(
                "basis index {bitstring} out of range for {n_qubits} qubits"
            ));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[bitstring] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    pub fn zero_state(n_qubits: usize) -> Self {
        Self::init_basis_state(n_qubits, 0).expect("index 0 always valid")
    }

    /// `|+⟩^{⊗n}`.
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = T::one() / T::of(dim as f64).sqrt();
        Self {
            n_qubits,
            amps: vec![Complex::new(a, T::zero()); dim],
        }
    }

    /// Wraps amplitudes that must already be unit-norm (within `1e-6`).
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return domain(format!("amplitude count {dim} is not a power of two"));
        }
        let norm: T = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::of(1e-6) {
            return domain(format!("amplitudes have squared norm {norm}, expected 1"));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    /// Normalises arbitrary nonzero amplitudes.
    pub fn from_unnormalized(mut amps: Vec<Complex<T>>) -> Result<Self> {
        let norm: T = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm == T::zero() {
            return domain("cannot normalise the zero vector");
        }
        for a in &mut amps {
            *a = *a / norm;
        }
        Self::from_amplitudes(amps)
    }

    /// Normalised complex-Gaussian random state.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n_qubits)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::of(re), T::of(im))
            })
            .collect();
        Self::from_unnormalized(amps).expect("gaussian sample is nonzero")
    }

    /// Tensor product of single-qubit states, `qubits[0]` being qubit 0.
    pub fn product(qubits: &[[Complex<T>; 2]]) -> Self {
        let mut amps = vec![Complex::new(T::one(), T::zero())];
        for q in qubits {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(*a * q[0]);
                next.push(*a * q[1]);
            }
            amps = next;
        }
        Self {
            n_qubits: qubits.len(),
            amps,
        }
    }

    /// `self ⊗ other`; the qubits of `self` come first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(*a * *b);
            }
        }
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        }
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    #[inline]
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * *b
            })
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    pub fn apply_gate(&self, gate: &Gate<T>) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &Gate<T>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_matrix(&gate.targets, &gate.controls, &gate.matrix());
        Ok(())
    }

    /// Applies `m` to `targets` wherever every control is satisfied.
    ///
    /// Indices are trusted; callers validate them first.
    pub(crate) fn apply_matrix(&mut self, targets: &[usize], controls: &[Control], m: &Matrix<T>) {
        debug_assert_eq!(m.dim(), 1 << targets.len());
        let (cmask, cval) = control_mask(self.n_qubits, controls);
        match targets {
            [a] => self.apply_1q(*a, cmask, cval, m.data()),
            [a, b] => self.apply_2q(*a, *b, cmask, cval, m.data()),
            _ => self.apply_kq(targets, cmask, cval, m),
        }
    }

    fn apply_1q(&mut self, a: usize, cmask: usize, cval: usize, m: &[Complex<T>]) {
        let n = self.n_qubits;
        let pos = (n - 1 - a) as u32;
        let bit = 1usize << pos;
        let (m00, m01, m10, m11) = (m[0], m[1], m[2], m[3]);
        let amps = &mut self.amps;
        for r in 0..amps.len() >> 1 {
            let i0 = insert_zero(r, pos);
            if i0 & cmask != cval {
                continue;
            }
            let i1 = i0 | bit;
            let (x0, x1) = (amps[i0], amps[i1]);
            amps[i0] = m00 * x0 + m01 * x1;
            amps[i1] = m10 * x0 + m11 * x1;
        }
    }

    fn apply_2q(&mut self, a: usize, b: usize, cmask: usize, cval: usize, m: &[Complex<T>]) {
        let n = self.n_qubits;
        let pa = (n - 1 - a) as u32;
        let pb = (n - 1 - b) as u32;
        let (ba, bb) = (1usize << pa, 1usize << pb);
        let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let mut mm = [Complex::new(T::zero(), T::zero()); 16];
        mm.copy_from_slice(&m[..16]);
        let amps = &mut self.amps;
        for r in 0..amps.len() >> 2 {
            let i00 = insert_zero(insert_zero(r, lo), hi);
            if i00 & cmask != cval {
                continue;
            }
            let idx = [i00, i00 | bb, i00 | ba, i00 | ba | bb];
            let x = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for (row, &i) in idx.iter().enumerate() {
                let w = &mm[row * 4..row * 4 + 4];
                amps[i] = w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
            }
        }
    }

    fn apply_kq(&mut self, targets: &[usize], cmask: usize, cval: usize, m: &Matrix<T>) {
        let n = self.n_qubits;
        let k = targets.len();
        let bits: Vec<usize> = targets.iter().map(|&q| bit_mask(n, q)).collect();
        let tmask: usize = bits.iter().sum();
        let local = 1usize << k;
        let offsets: Vec<usize> = (0..local)
            .map(|l| {
                (0..k)
                    .filter(|j| l & (1 << (k - 1 - j)) != 0)
                    .map(|j| bits[j])
                    .sum()
            })
            .collect();
        let mut x = vec![Complex::new(T::zero(), T::zero()); local];
        for base in 0..self.amps.len() {
            if base & tmask != 0 || base & cmask != cval {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                x[l] = self.amps[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (col, xv) in x.iter().enumerate() {
                    acc = acc + m[(row, col)] * *xv;
                }
                self.amps[base | off] = acc;
            }
        }
    }

    /// `G[k][l] = Σ_r conj(bra[r,k])·self[r,l]` over the controlled
    /// subspace, with `k`, `l` the local index of `targets`.
    pub(crate) fn local_overlap(
        &self,
        bra: &Self,
        targets: &[usize],
        controls: &[Control],
    ) -> Matrix<T> {
        let n = self.n_qubits;
        let k = targets.len();
        let (cmask, cval) = control_mask(n, controls);
        let mut positions: Vec<u32> = targets.iter().map(|&q| (n - 1 - q) as u32).collect();
        let bits: Vec<usize> = positions.iter().map(|&p| 1usize << p).collect();
        positions.sort_unstable();
        let local = 1usize << k;
        let offsets: Vec<usize> = (0..local)
            .map(|l| {
                (0..k)
                    .filter(|j| l & (1 << (k - 1 - j)) != 0)
                    .map(|j| bits[j])
                    .sum()
            })
            .collect();
        let zero = Complex::new(T::zero(), T::zero());
        let mut g = vec![zero; local * local];
        let mut bv = vec![zero; local];
        let mut kv = vec![zero; local];
        for r in 0..self.amps.len() >> k {
            let base = positions.iter().fold(r, |x, &p| insert_zero(x, p));
            if base & cmask != cval {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                bv[l] = bra.amps[base | off].conj();
                kv[l] = self.amps[base | off];
            }
            for row in 0..local {
                let b = bv[row];
                for col in 0..local {
                    g[row * local + col] = g[row * local + col] + b * kv[col];
                }
            }
        }
        let mut m = Matrix::zeros(local);
        for row in 0..local {
            for col in 0..local {
                m[(row, col)] = g[row * local + col];
            }
        }
        m
    }

    /// Relabels qubits: the content of qubit `i` moves to qubit `perm[i]`.
    pub fn apply_qubit_permutation(&self, perm: &QubitPermutation) -> Result<Self> {
        let n = self.n_qubits;
        if perm.len() != n {
            return domain(format!(
                "permutation acts on {} qubits, state has {n}",
                perm.len()
            ));
        }
        let src_bits: Vec<usize> = (0..n).map(|q| bit_mask(n, q)).collect();
        let dst_bits: Vec<usize> = perm.mapping().iter().map(|&q| bit_mask(n, q)).collect();
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let mut target = 0;
            for q in 0..n {
                if b & src_bits[q] != 0 {
                    target |= dst_bits[q];
                }
            }
            out[target] = *a;
        }
        Ok(Self {
            n_qubits: n,
            amps: out,
        })
    }

    /// `⟨Z_q⟩` for every qubit.
    pub fn z_expectations(&self) -> Vec<T> {
        let n = self.n_qubits;
        let mut acc = vec![T::zero(); n];
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, e) in acc.iter_mut().enumerate() {
                if b & bit_mask(n, q) == 0 {
                    *e = *e + p;
                } else {
                    *e = *e - p;
                }
            }
        }
        acc
    }

    /// Mean of `⟨Z_q⟩` over `qubits`.
    pub fn expectation_z(&self, qubits: &[usize]) -> Result<T> {
        if qubits.is_empty() {
            return domain("expectation over an empty qubit set");
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return domain(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            ));
        }
        let n = self.n_qubits;
        let masks: Vec<usize> = qubits.iter().map(|&q| bit_mask(n, q)).collect();
        let total: T = self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let ones = masks.iter().filter(|&&m| b & m != 0).count();
                let sign = T::of((qubits.len() as f64) - 2.0 * ones as f64);
                a.norm_sqr() * sign
            })
            .sum();
        Ok(total / T::of(qubits.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::GateKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        Complex::new(re, 0.0)
    }

    fn close(a: &StateVector<f64>, b: &StateVector<f64>, tol: f64) -> bool {
        a.distance(b) < tol
    }

    #[test]
    fn basis_states() {
        let s = StateVector::<f64>::init_basis_state(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.), c(0.)]);
        let s = StateVector::<f64>::init_basis_state(2, 3).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.), c(0.), c(0.), c(1.)]);
        let s = StateVector::<f64>::init_basis_state(4, 5).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        for (i, a) in s.amplitudes().iter().enumerate() {
            assert_eq!(*a, c(if i == 5 { 1. } else { 0. }));
        }
        assert!(StateVector::<f64>::init_basis_state(2, 4).is_err());
    }

    #[test]
    fn ry_pi_flips_zero() {
        let s = StateVector::<f64>::zero_state(1)
            .apply_gate(&Gate::ry(0, PI))
            .unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // |10>: qubit 0 = 1, qubit 1 = 0.
        let s = StateVector::<f64>::init_basis_state(2, 0b10).unwrap();
        let out = s.apply_gate(&Gate::cnot(0, 1)).unwrap();
        assert!(close(
            &out,
            &StateVector::init_basis_state(2, 0b11).unwrap(),
            1e-15
        ));
        let s = StateVector::<f64>::init_basis_state(2, 0b01).unwrap();
        let out = s.apply_gate(&Gate::cnot(0, 1)).unwrap();
        assert!(close(&out, &s, 1e-15));
    }

    #[test]
    fn swap_exchanges_amplitudes() {
        let (alpha, beta) = (Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let z = c(0.);
        let s = StateVector::from_amplitudes(vec![z, alpha, beta, z]).unwrap();
        let out = s.apply_gate(&Gate::swap(0, 1)).unwrap();
        assert_eq!(out.amplitudes(), &[z, beta, alpha, z]);
    }

    #[test]
    fn controls_select_subspace() {
        // X-like RY(pi) on qubit 1 only where qubit 0 is |0>.
        let g = Gate::ry(1, PI).with_control(Control::off(0));
        let s = StateVector::<f64>::init_basis_state(2, 0b10).unwrap();
        assert!(close(&s.apply_gate(&g).unwrap(), &s, 1e-15));
        let s = StateVector::<f64>::init_basis_state(2, 0b00).unwrap();
        let out = s.apply_gate(&g).unwrap();
        assert!((out.amplitudes()[0b01].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_gate_is_domain_error() {
        let s = StateVector::<f64>::zero_state(2);
        let g = Gate::rx(0, 1.0).with_control(Control::on(0));
        assert!(s.apply_gate(&g).is_err());
    }

    #[test]
    fn general_kernel_matches_two_qubit_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::<f64>::random(4, &mut rng);
        let m = Gate::<f64>::new(GateKind::CNOT, vec![3, 1], vec![]).matrix();
        let mut fast = s.clone();
        fast.apply_matrix(&[3, 1], &[Control::on(0)], &m);
        let mut slow = s.clone();
        slow.apply_kq(&[3, 1], bit_mask(4, 0), bit_mask(4, 0), &m);
        assert!(close(&fast, &slow, 1e-15));
    }

    #[test]
    fn z_expectations() {
        let zero = StateVector::<f64>::zero_state(1);
        assert_eq!(zero.expectation_z(&[0]).unwrap(), 1.0);
        let one = StateVector::<f64>::init_basis_state(1, 1).unwrap();
        assert_eq!(one.expectation_z(&[0]).unwrap(), -1.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(vec![c(r), c(0.), c(0.), c(r)]).unwrap();
        assert!(bell.expectation_z(&[0, 1]).unwrap().abs() < 1e-15);
        assert!(bell.expectation_z(&[]).is_err());
    }

    #[test]
    fn mean_z_agrees_with_per_qubit_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = StateVector::<f64>::random(5, &mut rng);
        let all = s.z_expectations();
        let mean = s.expectation_z(&[1, 3, 4]).unwrap();
        assert!((mean - (all[1] + all[3] + all[4]) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_puts_left_qubits_first() {
        let one = StateVector::<f64>::init_basis_state(1, 1).unwrap();
        let zero = StateVector::<f64>::zero_state(2);
        let t = one.tensor(&zero);
        assert_eq!(t.amplitudes()[0b100], c(1.));
    }

    #[test]
    fn f32_state_is_usable() {
        let s = StateVector::<f32>::zero_state(2)
            .apply_gate(&Gate::ry(0, std::f32::consts::PI))
            .unwrap();
        assert!((s.expectation_z(&[0]).unwrap() + 1.0).abs() < 1e-6);
    }
}
