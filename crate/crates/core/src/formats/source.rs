use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shaping::{quantize_composition, CompositionBlock};
use super::{Constellation4D, Point4};
use crate::error::{config, Result};

/// How constant composition is imposed on a dual-polarization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CcdmLayout {
    /// Each polarization is an independent constant-composition sequence; the
    /// block boundaries of the two polarizations are aligned.
    #[default]
    PerPolarization,
    /// One constant-composition sequence over 4D amplitude classes.
    Joint4D,
}

/// Points grouped into orbits under the real/imaginary sign flips. Only the
/// orbit (amplitude) is fixed by the composition; signs are uniform and
/// independent per slot.
#[derive(Debug, Clone)]
pub struct AmplitudeClasses {
    /// Variants of each class. For the per-polarization layout the unused
    /// polarization is set to 1 so that monomials factor per layer.
    pub variants: Vec<Vec<Point4>>,
    pub probs: Vec<f64>,
}

/// One independently permuted constant-composition layer.
#[derive(Debug, Clone)]
pub struct CcdmLayer {
    pub classes: AmplitudeClasses,
    pub block: CompositionBlock,
}

impl CcdmLayer {
    /// Class index per slot of a block, in canonical (sorted) order.
    fn multiset(&self) -> Vec<usize> {
        self.block
            .counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CcdmSpec {
    pub n: usize,
    pub layout: CcdmLayout,
    pub layers: Vec<CcdmLayer>,
}

fn amp_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|a| (a.abs() * 1e9).round() as i64).collect()
}

fn classes_from(items: Vec<(Vec<f64>, Point4, f64)>, label: &str) -> Result<AmplitudeClasses> {
    let mut groups: BTreeMap<Vec<i64>, Vec<(Point4, f64)>> = BTreeMap::new();
    for (coords, pt, p) in items {
        groups.entry(amp_key(&coords)).or_default().push((pt, p));
    }
    let mut variants = Vec::new();
    let mut probs = Vec::new();
    for (key, members) in groups {
        let orbit = 1usize << key.iter().filter(|&&k| k != 0).count();
        let p0 = members[0].1;
        let total: f64 = members.iter().map(|m| m.1).sum();
        if total <= 0.0 {
            continue;
        }
        if members.len() != orbit || members.iter().any(|m| (m.1 - p0).abs() > 1e-9 * p0.max(1e-300)) {
            return Err(config(format!(
                "{label}: constant-composition sources need a sign-symmetric format (amplitude class {key:?} is incomplete)"
            )));
        }
        variants.push(members.into_iter().map(|m| m.0).collect());
        probs.push(total);
    }
    Ok(AmplitudeClasses { variants, probs })
}

impl CcdmSpec {
    pub fn new(c: &Constellation4D, n: usize, layout: CcdmLayout) -> Result<Self> {
        if n == 0 {
            return Err(config("blocklength must be positive"));
        }
        let one = Complex64::new(1.0, 0.0);
        let layers = match layout {
            CcdmLayout::PerPolarization => {
                if !c.polarizations_independent(1e-9) {
                    return Err(config(format!(
                        "{}: per-polarization constant composition needs independent polarizations; use the joint 4D layout",
                        c.label()
                    )));
                }
                let (mx, my) = c.marginals();
                let x = classes_from(mx.into_iter().map(|(z, p)| (vec![z.re, z.im], Point4::new(z, one), p)).collect(), c.label())?;
                let y = classes_from(my.into_iter().map(|(z, p)| (vec![z.re, z.im], Point4::new(one, z), p)).collect(), c.label())?;
                vec![x, y]
            }
            CcdmLayout::Joint4D => {
                let items = c
                    .points()
                    .iter()
                    .zip(c.probs())
                    .map(|(pt, p)| (vec![pt.x.re, pt.x.im, pt.y.re, pt.y.im], *pt, *p))
                    .collect();
                vec![classes_from(items, c.label())?]
            }
        };
        let layers = layers
            .into_iter()
            .map(|classes| {
                let block = quantize_composition(&classes.probs, n);
                CcdmLayer { classes, block }
            })
            .collect();
        Ok(CcdmSpec { n, layout, layers })
    }

    fn combine(&self, per_layer: &[Point4]) -> Point4 {
        match self.layout {
            CcdmLayout::PerPolarization => Point4::new(per_layer[0].x, per_layer[1].y),
            CcdmLayout::Joint4D => per_layer[0],
        }
    }

    /// The single-slot distribution actually produced (the quantized
    /// composition with uniform signs).
    pub fn effective_constellation(&self, label: &str) -> Result<Constellation4D> {
        let dist = |layer: &CcdmLayer| -> Vec<(Point4, f64)> {
            let f = layer.block.frequencies();
            layer
                .classes
                .variants
                .iter()
                .enumerate()
                .filter(|(c, _)| f[*c] > 0.0)
                .flat_map(|(c, vars)| {
                    let p = f[c] / vars.len() as f64;
                    vars.iter().map(move |pt| (*pt, p))
                })
                .collect()
        };
        let mut pts = Vec::new();
        let mut probs = Vec::new();
        match self.layout {
            CcdmLayout::PerPolarization => {
                let (dx, dy) = (dist(&self.layers[0]), dist(&self.layers[1]));
                for (a, pa) in &dx {
                    for (b, pb) in &dy {
                        pts.push(Point4::new(a.x, b.y));
                        probs.push(pa * pb);
                    }
                }
            }
            CcdmLayout::Joint4D => {
                for (a, pa) in dist(&self.layers[0]) {
                    pts.push(a);
                    probs.push(pa);
                }
            }
        }
        Constellation4D::new(label, pts, probs)
    }
}

#[derive(Debug, Clone)]
pub enum SourceMode {
    Iid,
    ConstantComposition(CcdmSpec),
}

/// Deterministic symbol stream for one channel.
#[derive(Debug, Clone)]
pub struct SymbolSource {
    constellation: Constellation4D,
    mode: SourceMode,
    rng: ChaCha8Rng,
    sampler: WeightedIndex<f64>,
    block_len: usize,
    pending: VecDeque<Point4>,
    seed: u64,
    stream: u64,
}

const IID_BLOCK: usize = 1024;

fn make_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl SymbolSource {
    /// I.i.d. draws from `c`. `stream` selects an independent substream of the
    /// seed (one per channel, frame, ...).
    pub fn iid(c: Constellation4D, seed: u64, stream: u64) -> Self {
        let sampler = WeightedIndex::new(c.probs()).expect("validated probabilities");
        SymbolSource {
            constellation: c,
            mode: SourceMode::Iid,
            rng: make_rng(seed, stream),
            sampler,
            block_len: IID_BLOCK,
            pending: VecDeque::new(),
            seed,
            stream,
        }
    }

    /// Concatenated constant-composition blocks of length `n` whose amplitude
    /// statistics follow `c`.
    pub fn ccdm(c: Constellation4D, n: usize, layout: CcdmLayout, seed: u64, stream: u64) -> Result<Self> {
        let spec = CcdmSpec::new(&c, n, layout)?;
        let mut s = Self::iid(c, seed, stream);
        s.block_len = n;
        s.mode = SourceMode::ConstantComposition(spec);
        Ok(s)
    }

    pub fn constellation(&self) -> &Constellation4D {
        &self.constellation
    }

    pub fn mode(&self) -> &SourceMode {
        &self.mode
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn seed(&self) -> (u64, u64) {
        (self.seed, self.stream)
    }

    /// A copy of this source restarted on another substream.
    pub fn fork(&self, stream: u64) -> Self {
        let mut s = self.clone();
        s.rng = make_rng(self.seed, stream);
        s.stream = stream;
        s.pending.clear();
        s
    }

    /// One block: `n` symbols of a fresh permutation in CCDM mode, a fixed
    /// number of independent draws otherwise.
    pub fn next_block(&mut self) -> Vec<Point4> {
        match &self.mode {
            SourceMode::Iid => {
                let pts = self.constellation.points();
                (0..self.block_len).map(|_| pts[self.rng.sample(&self.sampler)]).collect()
            }
            SourceMode::ConstantComposition(spec) => {
                let per_layer: Vec<Vec<Point4>> = spec
                    .layers
                    .iter()
                    .map(|layer| {
                        let mut idx = layer.multiset();
                        idx.shuffle(&mut self.rng);
                        idx.into_iter()
                            .map(|c| {
                                let v = &layer.classes.variants[c];
                                v[self.rng.random_range(0..v.len())]
                            })
                            .collect()
                    })
                    .collect();
                (0..spec.n)
                    .map(|t| {
                        let slot: Vec<Point4> = per_layer.iter().map(|l| l[t]).collect();
                        spec.combine(&slot)
                    })
                    .collect()
            }
        }
    }

    /// The next `len` symbols of the stream (blocks are concatenated; a
    /// partially used block is continued by the next call).
    pub fn take(&mut self, len: usize) -> Vec<Point4> {
        while self.pending.len() < len {
            let b = self.next_block();
            self.pending.extend(b);
        }
        self.pending.drain(..len).collect()
    }

    /// Uniform integer in `0..n` from this source's generator.
    pub fn random_offset(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}
