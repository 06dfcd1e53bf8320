//! Qubit-permutation representations of spatial and symmetric groups.
//!
//! Qubits are 0-based everywhere in this module. Helpers with a `one_based`
//! suffix exist for comparing against tables written with 1-based labels.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Bijection on qubit indices; `mapping[i]` is the image of qubit `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QubitPermutation {
    mapping: Vec<usize>,
}

impl TryFrom<Vec<usize>> for QubitPermutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        Self::new(mapping)
    }
}

impl From<QubitPermutation> for Vec<usize> {
    fn from(p: QubitPermutation) -> Self {
        p.mapping
    }
}

impl QubitPermutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return domain(format!("{mapping:?} is not a bijection on 0..{n}"));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    /// Product of disjoint transpositions.
    pub fn from_swaps(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut mapping: Vec<usize> = (0..n).collect();
        let mut touched = HashSet::new();
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b || !touched.insert(a) || !touched.insert(b) {
                return domain(format!(
                    "swap pairs {pairs:?} are not disjoint transpositions on 0..{n}"
                ));
            }
            mapping.swap(a, b);
        }
        Ok(Self { mapping })
    }

    pub fn from_one_based_swaps(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.iter().any(|&(a, b)| a == 0 || b == 0) {
            return domain("one-based labels start at 1");
        }
        let zero: Vec<_> = pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        Self::from_swaps(n, &zero)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    #[inline]
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    #[inline]
    pub fn image(&self, q: usize) -> usize {
        self.mapping[q]
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return domain(format!(
                "cannot compose permutations on {} and {} qubits",
                self.len(),
                other.len()
            ));
        }
        Ok(Self {
            mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }

    pub fn is_involution(&self) -> bool {
        self.mapping
            .iter()
            .enumerate()
            .all(|(i, &m)| self.mapping[m] == i)
    }

    /// Non-trivial cycles, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] || self.mapping[start] == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut q = self.mapping[start];
            while q != start {
                seen[q] = true;
                cycle.push(q);
                q = self.mapping[q];
            }
            out.push(cycle);
        }
        out
    }

    /// Transposition pairs `(a, b)` with `a < b`, if `self` is an involution.
    pub fn swap_pairs(&self) -> Option<Vec<(usize, usize)>> {
        self.is_involution()
            .then(|| self.cycles().into_iter().map(|c| (c[0], c[1])).collect())
    }

    pub fn swap_pairs_one_based(&self) -> Option<Vec<(usize, usize)>> {
        self.swap_pairs()
            .map(|v| v.into_iter().map(|(a, b)| (a + 1, b + 1)).collect())
    }

    /// SWAP gates whose sequential application realises this relabeling.
    pub fn swap_decomposition(&self) -> Vec<(usize, usize)> {
        self.cycles()
            .into_iter()
            .flat_map(|c| {
                let head = c[0];
                c.into_iter().skip(1).map(move |q| (head, q))
            })
            .collect()
    }

    /// Restriction to `kept`, re-indexed so that `kept[j]` becomes `j`.
    pub fn restrict(&self, kept: &[usize]) -> Result<Self> {
        self.check_closed(kept)?;
        let mapping = kept
            .iter()
            .map(|&q| {
                let img = self.mapping[q];
                kept.iter().position(|&k| k == img).expect("closed")
            })
            .collect();
        Ok(Self { mapping })
    }

    /// Restriction to `kept` that keeps global labels and fixes every other qubit.
    pub fn restrict_in_place(&self, kept: &[usize]) -> Result<Self> {
        self.check_closed(kept)?;
        let mut mapping: Vec<usize> = (0..self.len()).collect();
        for &q in kept {
            mapping[q] = self.mapping[q];
        }
        Ok(Self { mapping })
    }

    fn check_closed(&self, kept: &[usize]) -> Result<()> {
        let set: BTreeSet<usize> = kept.iter().copied().collect();
        if set.len() != kept.len() || kept.iter().any(|&q| q >= self.len()) {
            return domain(format!(
                "{kept:?} is not a set of distinct qubits below {}",
                self.len()
            ));
        }
        for &q in kept {
            if !set.contains(&self.mapping[q]) {
                return Err(Error::NotReducible {
                    kept: kept.to_vec(),
                    qubit: q,
                });
            }
        }
        Ok(())
    }

    /// Same permutation on a larger register, fixing qubits `len()..n`.
    pub fn extend_to(&self, n: usize) -> Self {
        let mut mapping = self.mapping.clone();
        mapping.extend(self.len()..n.max(self.len()));
        Self { mapping }
    }

    /// Image of a qubit set, as a sorted list.
    pub fn map_set(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().map(|&q| self.mapping[q]).collect();
        out.sort_unstable();
        out
    }
}

/// [`QubitPermutation::restrict`] under its operation name.
pub fn reduced_representation(perm: &QubitPermutation, kept: &[usize]) -> Result<QubitPermutation> {
    perm.restrict(kept)
}

/// Geometric transformation of an image grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelMap {
    /// Reflection about the vertical axis, `c → cols−1−c`.
    MirrorColumns,
    /// Reflection about the horizontal axis, `r → rows−1−r`.
    MirrorRows,
    /// `(r, c) → (rows−1−r, cols−1−c)`.
    HalfTurn,
    /// Clockwise quarter turn `(r, c) → (c, rows−1−r)`; square grids only.
    QuarterTurn,
}

impl PixelMap {
    pub fn apply(self, (r, c): (usize, usize), rows: usize, cols: usize) -> (usize, usize) {
        match self {
            PixelMap::MirrorColumns => (r, cols - 1 - c),
            PixelMap::MirrorRows => (rows - 1 - r, c),
            PixelMap::HalfTurn => (rows - 1 - r, cols - 1 - c),
            PixelMap::QuarterTurn => (c, rows - 1 - r),
        }
    }

    /// Moves the value at pixel `p` to pixel `map(p)`; row-major layout.
    pub fn transform<V: Copy>(self, pixels: &[V], rows: usize, cols: usize) -> Result<Vec<V>> {
        if pixels.len() != rows * cols {
            return domain(format!("{} pixels for a {rows}×{cols} grid", pixels.len()));
        }
        if self == PixelMap::QuarterTurn && rows != cols {
            return domain("quarter turn needs a square grid");
        }
        let mut out = pixels.to_vec();
        for r in 0..rows {
            for c in 0..cols {
                let (r2, c2) = self.apply((r, c), rows, cols);
                out[r2 * cols + c2] = pixels[r * cols + c];
            }
        }
        Ok(out)
    }
}

/// Assignment of image pixels (row-major positions) to qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub pixel_to_qubit: Vec<usize>,
}

impl Embedding {
    pub fn new(grid_rows: usize, grid_cols: usize, pixel_to_qubit: Vec<usize>) -> Result<Self> {
        if pixel_to_qubit.len() != grid_rows * grid_cols {
            return domain(format!(
                "embedding lists {} qubits for {} pixels",
                pixel_to_qubit.len(),
                grid_rows * grid_cols
            ));
        }
        QubitPermutation::new(pixel_to_qubit.clone())?;
        Ok(Self {
            grid_rows,
            grid_cols,
            pixel_to_qubit,
        })
    }

    /// Pixel `(r, c)` goes to qubit `r·cols + c`.
    pub fn row_major(rows: usize, cols: usize) -> Self {
        Self {
            grid_rows: rows,
            grid_cols: cols,
            pixel_to_qubit: (0..rows * cols).collect(),
        }
    }

    /// Embedding under which the column mirror acts as `q ↔ n−1−q`.
    ///
    /// The left half is enumerated column by column, top to bottom; every
    /// right-half pixel takes the reversed index of its mirror image. For a
    /// 4×4 grid, columns 1–2 fill qubits 0–7 top-to-bottom and columns 3–4
    /// fill qubits 8–15 bottom-to-top.
    pub fn mirror_symmetric(rows: usize, cols: usize) -> Result<Self> {
        if !cols.is_multiple_of(2) {
            return Err(Error::Unsupported(format!(
                "mirror-symmetric embedding needs an even column count, got {cols}"
            )));
        }
        let n = rows * cols;
        let mut p2q = vec![0; n];
        for c in 0..cols / 2 {
            for r in 0..rows {
                let q = c * rows + r;
                p2q[r * cols + c] = q;
                p2q[r * cols + (cols - 1 - c)] = n - 1 - q;
            }
        }
        Self::new(rows, cols, p2q)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.pixel_to_qubit.len()
    }

    pub fn qubit_of(&self, r: usize, c: usize) -> usize {
        self.pixel_to_qubit[r * self.grid_cols + c]
    }

    /// Qubit permutation induced by moving pixel `p` to `map(p)`.
    pub fn induced(&self, map: PixelMap) -> Result<QubitPermutation> {
        if map == PixelMap::QuarterTurn && self.grid_rows != self.grid_cols {
            return domain("quarter turn needs a square grid");
        }
        let mut mapping = vec![0; self.n_qubits()];
        for r in 0..self.grid_rows {
            for c in 0..self.grid_cols {
                let (r2, c2) = map.apply((r, c), self.grid_rows, self.grid_cols);
                mapping[self.qubit_of(r, c)] = self.qubit_of(r2, c2);
            }
        }
        QubitPermutation::new(mapping)
    }
}

/// Qubit permutation of the vertical-axis reflection.
pub fn reflection_perm(embedding: &Embedding) -> QubitPermutation {
    embedding
        .induced(PixelMap::MirrorColumns)
        .expect("column mirror is defined on every grid")
}

/// Qubit permutation of the symmetry printed for the "rotation" group:
/// the half-turn pixel map, which for a row-major 4×4 grid is `q ↔ 15−q`.
pub fn rotation_perm_as_written(embedding: &Embedding) -> QubitPermutation {
    embedding
        .induced(PixelMap::HalfTurn)
        .expect("half turn is defined on every grid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupName {
    Reflection,
    Rotation180AsWritten,
    Symmetric,
    Trivial,
}

impl GroupName {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupName::Reflection => "reflection",
            GroupName::Rotation180AsWritten => "rotation",
            GroupName::Symmetric => "symmetric",
            GroupName::Trivial => "trivial",
        }
    }
}

/// A permutation group given by generators on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: GroupName,
    pub n_qubits: usize,
    pub generators: Vec<QubitPermutation>,
}

impl GroupSpec {
    pub fn reflection(embedding: &Embedding) -> Self {
        Self {
            name: GroupName::Reflection,
            n_qubits: embedding.n_qubits(),
            generators: vec![reflection_perm(embedding)],
        }
    }

    pub fn rotation_as_written(embedding: &Embedding) -> Self {
        Self {
            name: GroupName::Rotation180AsWritten,
            n_qubits: embedding.n_qubits(),
            generators: vec![rotation_perm_as_written(embedding)],
        }
    }

    /// `S_n` stored by its adjacent transpositions `(i i+1)`.
    pub fn symmetric(n: usize) -> Self {
        let generators = (0..n.saturating_sub(1))
            .map(|i| QubitPermutation::from_swaps(n, &[(i, i + 1)]).expect("valid"))
            .collect();
        Self {
            name: GroupName::Symmetric,
            n_qubits: n,
            generators,
        }
    }

    pub fn trivial(n: usize) -> Self {
        Self {
            name: GroupName::Trivial,
            n_qubits: n,
            generators: vec![QubitPermutation::identity(n)],
        }
    }

    /// Closure of the generators, identity first. Refuses groups larger than 8!.
    pub fn elements(&self) -> Result<Vec<QubitPermutation>> {
        const LIMIT: usize = 40_320;
        let id = QubitPermutation::identity(self.n_qubits);
        let mut seen: HashSet<QubitPermutation> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(p) = queue.pop_front() {
            for g in &self.generators {
                let next = g.compose(&p)?;
                if seen.insert(next.clone()) {
                    if seen.len() > LIMIT {
                        return Err(Error::Unsupported(format!(
                            "group generated on {} qubits exceeds {LIMIT} elements",
                            self.n_qubits
                        )));
                    }
                    order.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(order)
    }

    /// Elements an equivariance check should cover: every non-identity
    /// element for groups of order ≤ 24, otherwise the generators plus
    /// `samples` uniformly random permutations from `S_n`.
    pub fn check_elements<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> Vec<QubitPermutation> {
        let small = match self.name {
            GroupName::Symmetric => self.n_qubits <= 4,
            _ => true,
        };
        if small {
            if let Ok(all) = self.elements() {
                if all.len() <= 24 {
                    let nontrivial: Vec<_> = all.into_iter().filter(|p| !p.is_identity()).collect();
                    if nontrivial.is_empty() {
                        return vec![QubitPermutation::identity(self.n_qubits)];
                    }
                    return nontrivial;
                }
            }
        }
        let mut out = self.generators.clone();
        if self.name == GroupName::Symmetric {
            for _ in 0..samples {
                let mut m: Vec<usize> = (0..self.n_qubits).collect();
                m.shuffle(rng);
                out.push(QubitPermutation::new(m).expect("shuffle is a bijection"));
            }
        }
        out
    }
}

/// All `n!` permutations of `n ≤ 8` qubits, by Heap's algorithm.
pub fn symmetric_group_elements(n: usize) -> Result<Vec<QubitPermutation>> {
    if n > 8 {
        return Err(Error::Unsupported(format!(
            "enumerating S_{n} is limited to n ≤ 8"
        )));
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![QubitPermutation { mapping: a.clone() }];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(QubitPermutation { mapping: a.clone() });
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(out)
}
