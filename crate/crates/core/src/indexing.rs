//! The stacked estimate space and the matrices acting on it.
//!
//! Player `i` keeps one estimate per member of its closed interference
//! neighborhood. Stacking the players' blocks in order gives a vector of
//! length `m = Σ (deg(i) + 1)`; the slot of player `i`'s estimate of `j`
//! is `offset(i) + rank of j in Ñ(i)`, which is the 0-based form of
//! `s_ij = Σ_{l ≤ j} B(i,l) + Σ_{r < i} m_r`.
//!
//! A gossip exchange between `i` and `j` averages, for every player `z`
//! both of them track, the two slots holding their estimates of `z`. The
//! dense matrices (`W`, `H`, `H̄`, `Q`, `R`, `W̄`) are materialized for
//! analysis; the engine uses the sparse slot-pair form.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{degree_profile, CommGraph, PlayerGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("player {1} is not in the closed interference neighborhood of player {0}")]
    NotANeighbor(usize, usize),
    #[error("players {0} and {1} are not communication neighbors")]
    NotCommNeighbors(usize, usize),
    #[error("bad pair distribution: {0}")]
    BadDistribution(String),
    #[error("expected a vector of length {expected}, got {got}")]
    Length { expected: usize, got: usize },
}

/// Slot layout of the stacked estimate vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    hoods: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    m_vec: Vec<usize>,
    m: usize,
    owners: Vec<(usize, usize)>,
    /// `holders[j]`: slots holding some player's estimate of `j`.
    holders: Vec<Vec<usize>>,
}

impl IndexMap {
    pub fn new(g_i: &PlayerGraph) -> Self {
        let n = g_i.n();
        let profile = degree_profile(g_i);
        let hoods: Vec<Vec<usize>> = (0..n).map(|i| g_i.closed_neighborhood(i)).collect();
        let mut offsets = Vec::with_capacity(n);
        let mut owners = Vec::with_capacity(profile.m);
        let mut holders = vec![Vec::new(); n];
        for (i, hood) in hoods.iter().enumerate() {
            offsets.push(owners.len());
            for &j in hood {
                holders[j].push(owners.len());
                owners.push((i, j));
            }
        }
        Self {
            hoods,
            offsets,
            m_vec: profile.m_vec,
            m: profile.m,
            owners,
            holders,
        }
    }

    pub fn n(&self) -> usize {
        self.hoods.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_vec(&self) -> &[usize] {
        &self.m_vec
    }

    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.hoods[i]
    }

    /// Slots of player `i`'s block.
    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.m_vec[i]
    }

    /// 0-based slot of player `i`'s estimate of `j`.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        self.hoods[i].binary_search(&j).ok().map(|p| self.offsets[i] + p)
    }

    pub fn own_slot(&self, i: usize) -> usize {
        self.slot(i, i).expect("closed neighborhood contains i")
    }

    /// `(holder, subject)` of a slot.
    pub fn owner(&self, slot: usize) -> (usize, usize) {
        self.owners[slot]
    }

    /// Slots that hold an estimate of player `j`.
    pub fn holders(&self, j: usize) -> &[usize] {
        &self.holders[j]
    }

    /// Players tracked by both `i` and `j`: `Ñ(i) ∩ Ñ(j)`.
    pub fn shared(&self, i: usize, j: usize) -> Vec<usize> {
        self.hoods[i]
            .iter()
            .copied()
            .filter(|z| self.hoods[j].binary_search(z).is_ok())
            .collect()
    }

    /// Slot pairs averaged when `i` and `j` gossip.
    pub fn exchange_pairs(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        self.shared(i, j)
            .into_iter()
            .map(|z| (self.slot(i, z).unwrap(), self.slot(j, z).unwrap()))
            .collect()
    }

    /// `E_j^i`: unit vector at slot `(i, j)`, or zero when `j ∉ Ñ(i)`.
    pub fn unit_selector(&self, i: usize, j: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.m);
        if let Some(s) = self.slot(i, j) {
            e[s] = 1.0;
        }
        e
    }

    /// Actions `x_i`, read from the own-estimate slots.
    pub fn actions(&self, stacked: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| stacked[self.own_slot(i)]).collect()
    }

    /// `z = H̄ x̃`: per-player average of all estimates of that player.
    pub fn average(&self, stacked: &[f64]) -> Vec<f64> {
        self.holders
            .iter()
            .map(|slots| slots.iter().map(|&s| stacked[s]).sum::<f64>() / slots.len() as f64)
            .collect()
    }

    /// `Z = H z`: every slot `(i, j)` replaced by `z_j`.
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        self.owners.iter().map(|&(_, j)| z[j]).collect()
    }

    /// `Z = H H̄ x̃` and `‖x̃ − Z‖`.
    pub fn consensus_residual(&self, stacked: &[f64]) -> Result<(Vec<f64>, f64), IndexError> {
        if stacked.len() != self.m {
            return Err(IndexError::Length {
                expected: self.m,
                got: stacked.len(),
            });
        }
        let z = self.lift(&self.average(stacked));
        let r = stacked
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok((z, r))
    }

    /// `H = [Σ_i E_1^i, …, Σ_i E_N^i]`.
    pub fn h(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.m, self.n());
        for (s, &(_, j)) in self.owners.iter().enumerate() {
            h[(s, j)] = 1.0;
        }
        h
    }

    /// `H̄ = diag(1/m) Hᵀ`.
    pub fn h_bar(&self) -> DMatrix<f64> {
        let mut hb = DMatrix::zeros(self.n(), self.m);
        for (s, &(_, j)) in self.owners.iter().enumerate() {
            hb[(j, s)] = 1.0 / self.m_vec[j] as f64;
        }
        hb
    }

    /// `R = I − H H̄`, the projector onto disagreement.
    pub fn r(&self) -> DMatrix<f64> {
        DMatrix::identity(self.m, self.m) - self.h() * self.h_bar()
    }

    /// Sparse communication matrix of the exchange between `i` and `j`.
    pub fn comm_matrix(&self, g_c: &PlayerGraph, i: usize, j: usize) -> Result<CommMatrix, IndexError> {
        if i == j || !g_c.has_edge(i, j) {
            return Err(IndexError::NotCommNeighbors(i, j));
        }
        Ok(CommMatrix {
            m: self.m,
            pairs: self.exchange_pairs(i, j),
        })
    }

    /// `Q = W − H H̄ W` for one exchange.
    pub fn q_matrix(&self, w: &CommMatrix) -> DMatrix<f64> {
        let w = w.to_dense();
        &w - self.h() * (self.h_bar() * &w)
    }

    /// `W̄ = E[W(k)]` under `dist`.
    pub fn expected_comm_matrix(&self, g_c: &CommGraph, dist: &PairDistribution) -> Result<DMatrix<f64>, IndexError> {
        let mut wbar = DMatrix::zeros(self.m, self.m);
        for (i, j, p) in dist.ordered_probabilities(g_c)? {
            wbar += self.comm_matrix(g_c, i, j)?.to_dense() * p;
        }
        Ok(wbar)
    }

    /// `E[Qᵀ Q]`, summed exactly over the finite pair set.
    pub fn expected_qtq(&self, g_c: &CommGraph, dist: &PairDistribution) -> Result<DMatrix<f64>, IndexError> {
        let mut acc = DMatrix::zeros(self.m, self.m);
        for (i, j, p) in dist.ordered_probabilities(g_c)? {
            let q = self.q_matrix(&self.comm_matrix(g_c, i, j)?);
            acc += q.transpose() * q * p;
        }
        Ok(acc)
    }
}

/// The 0-based form of `s_ij = Σ_{l ≤ j} B(i,l) + Σ_{r < i} m_r`, computed
/// from `B` directly.
pub fn s_index(b: &DMatrix<u8>, i: usize, j: usize) -> Result<usize, IndexError> {
    if b[(i, j)] == 0 {
        return Err(IndexError::NotANeighbor(i, j));
    }
    let within: usize = (0..=j).map(|l| b[(i, l)] as usize).sum();
    let before: usize = (0..i)
        .map(|r| b.row(r).iter().map(|&v| v as usize).sum::<usize>())
        .sum();
    Ok(within + before - 1)
}

/// One gossip exchange: identity except that each listed slot pair is
/// replaced by its mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommMatrix {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl CommMatrix {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `x ← W x` in place.
    pub fn apply(&self, x: &mut [f64]) {
        for &(a, b) in &self.pairs {
            let mean = 0.5 * x[a] + 0.5 * x[b];
            x[a] = mean;
            x[b] = mean;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut w = DMatrix::identity(self.m, self.m);
        for &(a, b) in &self.pairs {
            w[(a, a)] = 0.5;
            w[(b, b)] = 0.5;
            w[(a, b)] = 0.5;
            w[(b, a)] = 0.5;
        }
        w
    }
}

/// Distribution of the gossiping pair `(i_k, j_k)` (ordered: `i_k` wakes
/// up and contacts `j_k`).
/// An unordered `G_C` edge and its selection probability.
pub type EdgeProbability = ((usize, usize), f64);

#[derive(Debug, Clone, PartialEq, Default)]
pub enum PairDistribution {
    /// `i_k` uniform over players, `j_k` uniform over its communication
    /// neighbors. This is what the engine's scheduler does.
    #[default]
    UniformWakeup,
    /// Every directed communication edge equally likely.
    UniformEdge,
    /// Explicit ordered-pair probabilities (0-based players).
    Explicit(Vec<(usize, usize, f64)>),
}

impl PairDistribution {
    pub fn ordered_probabilities(&self, g_c: &PlayerGraph) -> Result<Vec<(usize, usize, f64)>, IndexError> {
        let n = g_c.n();
        match self {
            PairDistribution::UniformWakeup => {
                let mut out = Vec::new();
                for i in 0..n {
                    let d = g_c.degree(i);
                    if d == 0 {
                        return Err(IndexError::BadDistribution(format!(
                            "player {i} has no communication neighbor"
                        )));
                    }
                    for &j in g_c.neighbors(i) {
                        out.push((i, j, 1.0 / (n as f64 * d as f64)));
                    }
                }
                Ok(out)
            }
            PairDistribution::UniformEdge => {
                let directed = 2 * g_c.edge_count();
                if directed == 0 {
                    return Err(IndexError::BadDistribution("communication graph has no edges".into()));
                }
                let p = 1.0 / directed as f64;
                Ok((0..n)
                    .flat_map(|i| g_c.neighbors(i).iter().map(move |&j| (i, j, p)))
                    .collect())
            }
            PairDistribution::Explicit(list) => {
                let mut total = 0.0;
                for &(i, j, p) in list {
                    if !(p >= 0.0) {
                        return Err(IndexError::BadDistribution(format!("negative probability {p}")));
                    }
                    if i >= n || j >= n || !g_c.has_edge(i, j) {
                        return Err(IndexError::NotCommNeighbors(i, j));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(IndexError::BadDistribution(format!("probabilities sum to {total}")));
                }
                Ok(list.clone())
            }
        }
    }

    /// Unordered edge probabilities, keyed `(min, max)`, lexicographic.
    pub fn edge_probabilities(&self, g_c: &PlayerGraph) -> Result<Vec<EdgeProbability>, IndexError> {
        let mut acc: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
        for (i, j, p) in self.ordered_probabilities(g_c)? {
            *acc.entry((i.min(j), i.max(j))).or_default() += p;
        }
        Ok(acc.into_iter().collect())
    }

    /// `p_i = Pr(i ∈ {i_k, j_k})`; sums to 2.
    pub fn participation(&self, g_c: &PlayerGraph) -> Result<Vec<f64>, IndexError> {
        let mut p = vec![0.0; g_c.n()];
        for (i, j, q) in self.ordered_probabilities(g_c)? {
            p[i] += q;
            p[j] += q;
        }
        Ok(p)
    }
}

/// `W̄` from the closed form `I − Σ_i Σ_{j ∈ N_C(i)} Σ_{l ∈ ind(i,j)} v vᵀ / (2 Σ deg)`
/// with `v = E_l^i − E_l^j`. Coincides with
/// [`IndexMap::expected_comm_matrix`] under [`PairDistribution::UniformEdge`].
pub fn expected_comm_matrix_closed_form(map: &IndexMap, g_c: &PlayerGraph) -> DMatrix<f64> {
    let m = map.m();
    let denom = 2.0 * (0..g_c.n()).map(|i| g_c.degree(i)).sum::<usize>() as f64;
    let mut acc = DMatrix::zeros(m, m);
    for i in 0..g_c.n() {
        for &j in g_c.neighbors(i) {
            for l in map.shared(i, j) {
                let v = map.unit_selector(i, l) - map.unit_selector(j, l);
                acc += &v * v.transpose();
            }
        }
    }
    DMatrix::identity(m, m) - acc / denom
}

/// Fully coupled exchange matrix `(I_N − ½ (e_i − e_j)(e_i − e_j)ᵀ) ⊗ I_N`.
pub fn kron_comm_matrix(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut w = DMatrix::<f64>::identity(n, n);
    w[(i, i)] = 0.5;
    w[(j, j)] = 0.5;
    w[(i, j)] = 0.5;
    w[(j, i)] = 0.5;
    w.kronecker(&DMatrix::identity(n, n))
}

/// For a complete interference graph, the position in the Kronecker
/// layout (`holder * N + subject`) of each stacked slot.
pub fn canonical_permutation(map: &IndexMap) -> Vec<usize> {
    let n = map.n();
    (0..map.m())
        .map(|s| {
            let (i, j) = map.owner(s);
            i * n + j
        })
        .collect()
}
