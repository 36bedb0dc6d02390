//! Link kernels per coincidence partition and their contraction with class
//! moments.
//!
//! The NLI variance of channel `i` is a sum over pairs of assignments
//! `(c, c')` of `E[Δ_c Δ_c'*]` minus the part removed by the receiver's
//! complex gain. Writing the expectation over time indices with the Möbius
//! function of the set-partition lattice gives
//!
//! `E[Δ_c Δ_c'*] = Σ_σ K_σ · Σ_{pol} Π_channels Σ_{π ≤ σ} μ(π, σ) M_π`
//!
//! where `σ` runs over partitions of the six field positions into blocks
//! (blocks stay within one channel and hold at least two factors), `K_σ` sums
//! the kernel product over indices constant on the blocks of `σ`, and `M_π` is
//! the moment of the class of `π`. Pairs of assignments sharing only channel
//! `i` cancel exactly against the gain removal, and products of neighbours
//! that spill into the band of `i` are uncorrelated with everything else
//! there, so the variance splits into independent groups: the self-channel
//! term, one cross-phase term per interferer, and the spill-over terms.

use num_complex::Complex64;
use rayon::prelude::*;

use super::cube::{Assignment, KernelCube};
use crate::error::Result;
use crate::link::LinkSpec;
use crate::moments::{Factor, MomentProvider, MomentSet, PatternClass, Pol};
use crate::partition::{set_partitions, SetPartition};

/// Strided view of a dense kernel `S`: the mirrored cross-phase assignment is
/// `S(a, b, c) = S_direct(c, b, a)`, i.e. the same array with reversed strides.
#[derive(Clone, Copy)]
struct View<'a> {
    data: &'a [Complex64],
    strides: [usize; 3],
}

impl<'a> View<'a> {
    fn direct(data: &'a [Complex64], n: usize) -> Self {
        View { data, strides: [n * n, n, 1] }
    }

    fn mirrored(data: &'a [Complex64], n: usize) -> Self {
        View { data, strides: [1, n, n * n] }
    }

    /// Stride of each free index when kernel position `p` carries `labels[p]`.
    fn block_strides(&self, labels: &[u8]) -> [usize; 3] {
        let mut b = [0; 3];
        for (p, &l) in labels.iter().enumerate() {
            b[l as usize] += self.strides[p];
        }
        b
    }
}

fn n_blocks(labels: &[u8]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// `Σ S_l(n0,n1,n2)·conj(S_r(n3,n4,n5))` over indices constant on the blocks
/// given by `labels` (at most three blocks).
fn contract(n: usize, l: View<'_>, r: View<'_>, labels: &[u8]) -> Complex64 {
    let nb = n_blocks(labels);
    assert!(nb <= 3, "contractions with more than three free indices are never needed");
    let range = |b: usize| if b < nb { n } else { 1 };
    let (sl, sr) = (l.block_strides(&labels[..3]), r.block_strides(&labels[3..]));
    let partial: Vec<Complex64> = (0..range(0))
        .into_par_iter()
        .map(|v0| {
            let mut acc = Complex64::new(0.0, 0.0);
            for v1 in 0..range(1) {
                let mut il = v0 * sl[0] + v1 * sl[1];
                let mut ir = v0 * sr[0] + v1 * sr[1];
                for _ in 0..range(2) {
                    acc += l.data[il] * r.data[ir].conj();
                    il += sl[2];
                    ir += sr[2];
                }
            }
            acc
        })
        .collect();
    partial.into_iter().sum()
}

/// `Σ S(n0,n1,n2)` over indices constant on the blocks of `labels`, where
/// `labels[0]` is the receiver's reference symbol pinned at slot 0 and
/// `labels[1..4]` are the three kernel positions.
fn contract_projection(n: usize, s: View<'_>, labels: &[u8]) -> Complex64 {
    let nb = n_blocks(labels);
    let pinned = labels[0] as usize;
    let range = |b: usize| if b < nb && b != pinned { n } else { 1 };
    let st = s.block_strides(&labels[1..]);
    let mut acc = Complex64::new(0.0, 0.0);
    for v0 in 0..range(0) {
        for v1 in 0..range(1) {
            for v2 in 0..range(2) {
                acc += s.data[v0 * st[0] + v1 * st[1] + v2 * st[2]];
            }
        }
    }
    acc
}

/// Factor types of the six positions of `Δ_c·Δ_c'*`: polarization slot
/// (0 = p, 1 = q, 2 = p') and conjugation.
const PAIR_FACTORS: [(usize, bool); 6] = [(0, false), (0, true), (1, false), (2, true), (2, false), (1, true)];
/// Positions of `X*·Δ_c`: reference symbol, then the three kernel positions.
const PROJ_FACTORS: [(usize, bool); 4] = [(1, true), (0, false), (0, true), (1, false)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    SelfChannel,
    CrossPhase(usize),
    /// Products `A_a·A_c*·A_b` of channels whose carriers do not add up to
    /// `f_i` but whose spectra still overlap channel `i`.
    Spill { outer: [usize; 2], conj: usize },
}

#[derive(Debug, Clone)]
struct PairKernels {
    a: usize,
    b: usize,
    /// Multiplicity: an off-diagonal pair stands for itself and its mirror.
    off_diagonal: bool,
    terms: Vec<(SetPartition, Complex64)>,
}

/// Kernels of one interaction group (self-channel, or one interferer).
#[derive(Debug, Clone)]
pub struct GroupKernels {
    pub kind: GroupKind,
    /// Bins (= symbols) per channel used for this group.
    pub n: usize,
    pub assignments: Vec<Assignment>,
    pub weights: Vec<f64>,
    pairs: Vec<PairKernels>,
    projections: Vec<Vec<(SetPartition, Complex64)>>,
}

/// All kernels needed for the NLI of channel `i`.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub channel: usize,
    pub groups: Vec<GroupKernels>,
}

fn pair_channels(a: Assignment, b: Assignment) -> [usize; 6] {
    [a.0[0], a.0[1], a.0[2], b.0[0], b.0[1], b.0[2]]
}

fn weight(link: &LinkSpec, i: usize, a: Assignment) -> f64 {
    let p = &link.grid.powers;
    (p[a.0[0]] * p[a.0[1]] * p[a.0[2]] / (4.0 * p[i])).sqrt()
}

pub(crate) fn group_assignments(i: usize, kind: GroupKind) -> Vec<Assignment> {
    match kind {
        GroupKind::SelfChannel => vec![Assignment([i, i, i])],
        GroupKind::CrossPhase(k) => vec![Assignment([k, k, i]), Assignment([i, k, k])],
        GroupKind::Spill { outer: [a, b], conj } if a == b => vec![Assignment([a, conj, a])],
        GroupKind::Spill { outer: [a, b], conj } => vec![Assignment([a, conj, b]), Assignment([b, conj, a])],
    }
}

fn group(link: &LinkSpec, i: usize, kind: GroupKind, n: usize) -> GroupKernels {
    let assignments = group_assignments(i, kind);
    let dense = KernelCube::build(link, i, assignments[0], n).dense();
    let view = |idx: usize| if idx == 0 { View::direct(&dense, n) } else { View::mirrored(&dense, n) };
    let mut pairs = Vec::new();
    for a in 0..assignments.len() {
        for b in a..assignments.len() {
            let ch = pair_channels(assignments[a], assignments[b]);
            let terms = set_partitions(6, 2, |x, y| ch[x] == ch[y])
                .into_iter()
                .map(|sigma| {
                    let k = contract(n, view(a), view(b), sigma.labels());
                    (sigma, k)
                })
                .collect();
            pairs.push(PairKernels { a, b, off_diagonal: a != b, terms });
        }
    }
    let projections = (0..assignments.len())
        .map(|a| {
            let c = assignments[a].0;
            let ch = [i, c[0], c[1], c[2]];
            set_partitions(4, 2, |x, y| ch[x] == ch[y])
                .into_iter()
                .map(|rho| {
                    let j = contract_projection(n, view(a), rho.labels());
                    (rho, j)
                })
                .collect()
        })
        .collect();
    let weights = assignments.iter().map(|&a| weight(link, i, a)).collect();
    GroupKernels { kind, n, assignments, weights, pairs, projections }
}

/// Kernels for the self-channel term of channel `i` with `n` bins.
pub fn sci_kernels(link: &LinkSpec, i: usize, n: usize) -> GroupKernels {
    group(link, i, GroupKind::SelfChannel, n)
}

/// Kernels for the cross-phase term of interferer `k` on channel `i`.
pub fn xpm_kernels(link: &LinkSpec, i: usize, k: usize, n: usize) -> GroupKernels {
    assert_ne!(i, k, "cross-phase kernels need two distinct channels");
    group(link, i, GroupKind::CrossPhase(k), n)
}

/// `Σ_{π ≤ σ, blocks ≥ 2} μ(π, σ)·M_π` for the positions of one channel.
fn channel_cumulant(m: &MomentSet, factors: &[Factor], sigma_local: &[usize]) -> Result<Complex64> {
    let sigma = SetPartition::from_labels(sigma_local);
    let mut acc = Complex64::new(0.0, 0.0);
    for pi in set_partitions(factors.len(), 2, |x, y| sigma_local[x] == sigma_local[y]) {
        let cls = PatternClass::from_blocks(factors, &pi.blocks());
        acc += m.get(&cls)? * pi.mobius(&sigma) as f64;
    }
    Ok(acc)
}

/// Moment weight of a partition of positions with the given channel, factor
/// types and polarization variables.
fn moment_weight<'m>(
    sigma: &SetPartition,
    channels: &[usize],
    kinds: &[(usize, bool)],
    n_pol_vars: usize,
    moments_of: &dyn Fn(usize) -> &'m MomentSet,
) -> Result<Complex64> {
    let mut distinct: Vec<usize> = channels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut total = Complex64::new(0.0, 0.0);
    for pols in 0..(1usize << n_pol_vars) {
        let pol = |v: usize| if pols >> v & 1 == 0 { Pol::X } else { Pol::Y };
        let mut prod = Complex64::new(1.0, 0.0);
        for &c in &distinct {
            let pos: Vec<usize> = (0..channels.len()).filter(|&p| channels[p] == c).collect();
            let factors: Vec<Factor> = pos.iter().map(|&p| Factor { pol: pol(kinds[p].0), conj: kinds[p].1 }).collect();
            let local: Vec<usize> = pos.iter().map(|&p| sigma.block_of(p)).collect();
            prod *= channel_cumulant(moments_of(c), &factors, &local)?;
            if prod == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        total += prod;
    }
    Ok(total)
}

impl GroupKernels {
    /// Variance contribution `Σ_{c,c'} w_c w_c' V_cc'` (before the `(8/9)²γ²`
    /// prefactor); `moments_of(c)` gives the moments of channel `c`.
    pub fn variance<'m>(&self, i: usize, moments_of: &dyn Fn(usize) -> &'m MomentSet) -> Result<f64> {
        let proj: Vec<Complex64> = self
            .projections
            .iter()
            .enumerate()
            .map(|(a, terms)| {
                let c = self.assignments[a].0;
                let ch = [i, c[0], c[1], c[2]];
                terms.iter().try_fold(Complex64::new(0.0, 0.0), |acc, (rho, j)| {
                    Ok::<_, crate::Error>(acc + moment_weight(rho, &ch, &PROJ_FACTORS, 2, moments_of)? * j)
                })
            })
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        for pk in &self.pairs {
            let ch = pair_channels(self.assignments[pk.a], self.assignments[pk.b]);
            let mut v = Complex64::new(0.0, 0.0);
            for (sigma, k) in &pk.terms {
                v += moment_weight(sigma, &ch, &PAIR_FACTORS, 3, moments_of)? * k;
            }
            v -= proj[pk.a] * proj[pk.b].conj() / 2.0;
            let w = self.weights[pk.a] * self.weights[pk.b];
            total += w * if pk.off_diagonal { 2.0 * v.re } else { v.re };
        }
        Ok(total)
    }
}

/// Resolution settings for the discrete kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Bins per channel for the self-channel term.
    pub n_sci: usize,
    /// Cross-phase terms use `n ≥ resolution·4π·|Δf|·|β2|·R_s/α` bins, so the
    /// walk-off resonance width spans at least this many bins (in units of
    /// 1/π), clamped to `[n_min, n_max]`.
    pub resolution: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Ignore interferers more than this many channels away.
    pub xpm_cutoff: Option<usize>,
    /// Include products of neighbouring channels that spill into the band.
    pub spill: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { n_sci: 65, resolution: 2.5, n_min: 65, n_max: 301, xpm_cutoff: None, spill: true }
    }
}

impl ModelConfig {
    /// Uniform resolution `n` for every group.
    pub fn fixed(n: usize) -> Self {
        ModelConfig { n_sci: n, resolution: 0.0, n_min: n, n_max: n, xpm_cutoff: None, spill: true }
    }

    pub fn xpm_bins(&self, link: &LinkSpec, delta_f: f64) -> usize {
        let f = &link.fiber;
        let need = self.resolution * 4.0 * std::f64::consts::PI * delta_f.abs() * f.beta2.abs() * link.grid.symbol_rate / f.alpha;
        let hi = self.n_max.max(self.n_min);
        let n = (need.ceil() as usize).clamp(self.n_min, hi);
        // odd counts keep the bin grid symmetric about the carrier
        if n % 2 == 0 && n < hi {
            n + 1
        } else {
            n
        }
    }

    /// Bins for a spill-over group whose carrier mismatch is `mismatch`: at
    /// least the cross-phase resolution of `delta_f`, preferring the smallest
    /// count that puts the mismatch on an exact bin. The search keeps the
    /// parity of the cross-phase count.
    pub fn spill_bins(&self, link: &LinkSpec, delta_f: f64, mismatch: f64) -> usize {
        let base = self.xpm_bins(link, delta_f);
        let hi = self.n_max.max(base);
        let ratio = mismatch / link.grid.symbol_rate;
        (base..=hi).step_by(2).find(|&n| ((ratio * n as f64) - (ratio * n as f64).round()).abs() < 1e-9).unwrap_or(base)
    }
}

/// Spill-over groups of channel `i` with neighbour `k`: every product of the
/// two channels other than the self- and cross-phase ones whose spectrum,
/// `3R_s` wide around `f_a + f_b − f_c`, reaches into channel `i`.
pub(crate) fn spill_groups(link: &LinkSpec, i: usize, k: usize) -> Vec<(GroupKind, f64)> {
    let g = &link.grid;
    let reach = 2.0 * g.symbol_rate * (1.0 + g.rolloff);
    [([i, i], k), ([i, k], i), ([k, k], k), ([k, k], i)]
        .into_iter()
        .filter_map(|(outer, conj)| {
            let mismatch = g.center(outer[0]) + g.center(outer[1]) - g.center(conj) - g.center(i);
            (mismatch.abs() > 1e-12 && mismatch.abs() < reach).then_some((GroupKind::Spill { outer, conj }, mismatch))
        })
        .collect()
}

/// Builds every kernel group for channel `i`.
pub fn channel_kernels(link: &LinkSpec, i: usize, cfg: &ModelConfig) -> KernelSet {
    let mut groups = vec![sci_kernels(link, i, cfg.n_sci)];
    for k in 0..link.grid.n_channels() {
        if k == i || cfg.xpm_cutoff.is_some_and(|c| k.abs_diff(i) > c) {
            continue;
        }
        let df = link.grid.center(k) - link.grid.center(i);
        groups.push(xpm_kernels(link, i, k, cfg.xpm_bins(link, df)));
        if cfg.spill {
            for (kind, mismatch) in spill_groups(link, i, k) {
                groups.push(group(link, i, kind, cfg.spill_bins(link, df, mismatch)));
            }
        }
    }
    KernelSet { channel: i, groups }
}

/// η split into self-channel, cross-phase and spill-over parts, in 1/W².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaParts {
    pub sci: f64,
    pub xpm: f64,
    pub spill: f64,
}

impl EtaParts {
    pub fn total(&self) -> f64 {
        self.sci + self.xpm + self.spill
    }
}

impl KernelSet {
    pub fn evaluate(&self, link: &LinkSpec, moments: &dyn MomentProvider) -> Result<EtaParts> {
        let i = self.channel;
        let p = link.grid.powers[i];
        let pref = (8.0f64 / 9.0).powi(2) * link.fiber.gamma.powi(2) / (2.0 * p * p);
        let own = moments.sci(i)?;
        let mut parts = EtaParts { sci: 0.0, xpm: 0.0, spill: 0.0 };
        for g in &self.groups {
            match g.kind {
                GroupKind::SelfChannel => parts.sci += pref * g.variance(i, &|_| &own)?,
                GroupKind::CrossPhase(k) => {
                    let other = moments.xpm(i, k)?;
                    parts.xpm += pref * g.variance(i, &|c| if c == i { &own } else { &other })?;
                }
                GroupKind::Spill { outer, conj } => {
                    let k = if outer[0] != i { outer[0] } else if outer[1] != i { outer[1] } else { conj };
                    // a neighbour's own product keeps that neighbour's self-channel statistics
                    let other = if outer == [k, k] && conj == k { moments.sci(k)? } else { moments.xpm(i, k)? };
                    parts.spill += pref * g.variance(i, &|c| if c == i { &own } else { &other })?;
                }
            }
        }
        Ok(parts)
    }
}
