//! Set partitions of a handful of labelled positions.
//!
//! A partition is stored as a restricted-growth string: `labels[i]` is the
//! block of position `i`, and block ids appear in order of first use.

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    labels: Vec<u8>,
    n_blocks: usize,
}

impl SetPartition {
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map: Vec<Option<u8>> = vec![None; raw.len().max(raw.iter().copied().max().map_or(0, |m| m + 1))];
        let mut next = 0u8;
        let labels = raw
            .iter()
            .map(|&r| {
                *map[r].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        SetPartition { labels, n_blocks: next as usize }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_of(&self, pos: usize) -> usize {
        self.labels[pos] as usize
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (i, &b) in self.labels.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    /// True if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> bool {
        let mut image = vec![None; self.n_blocks];
        for (a, b) in self.labels.iter().zip(&coarser.labels) {
            match image[*a as usize] {
                None => image[*a as usize] = Some(*b),
                Some(x) if x != *b => return false,
                _ => {}
            }
        }
        true
    }

    /// Möbius function of the partition lattice, `μ(self, coarser)`.
    /// Returns 0 when `self` does not refine `coarser`.
    pub fn mobius(&self, coarser: &SetPartition) -> i64 {
        if !self.refines(coarser) {
            return 0;
        }
        let mut fine_per_block = vec![std::collections::BTreeSet::new(); coarser.n_blocks];
        for (a, b) in self.labels.iter().zip(&coarser.labels) {
            fine_per_block[*b as usize].insert(*a);
        }
        fine_per_block
            .iter()
            .map(|s| {
                let k = s.len() as i64;
                let fact: i64 = (1..k).product();
                if k % 2 == 1 { fact } else { -fact }
            })
            .product()
    }
}

/// All partitions of `n` positions whose blocks have at least `min_block`
/// members and only join positions allowed by `compatible`.
pub fn set_partitions<F: Fn(usize, usize) -> bool>(n: usize, min_block: usize, compatible: F) -> Vec<SetPartition> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    let mut sizes: Vec<usize> = Vec::new();
    fn rec<F: Fn(usize, usize) -> bool>(
        pos: usize,
        labels: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        min_block: usize,
        compatible: &F,
        out: &mut Vec<SetPartition>,
    ) {
        let n = labels.len();
        if pos == n {
            if sizes.iter().all(|&s| s >= min_block) {
                out.push(SetPartition::from_labels(labels));
            }
            return;
        }
        // prune: blocks still short of min_block need enough remaining positions
        let deficit: usize = sizes.iter().map(|&s| min_block.saturating_sub(s)).sum();
        if deficit > n - pos {
            return;
        }
        for b in 0..=sizes.len() {
            if b < sizes.len() && !(0..pos).all(|q| labels[q] != b || compatible(q, pos)) {
                continue;
            }
            labels[pos] = b;
            if b == sizes.len() {
                sizes.push(1);
            } else {
                sizes[b] += 1;
            }
            rec(pos + 1, labels, sizes, min_block, compatible, out);
            if b + 1 == sizes.len() && sizes[b] == 1 {
                sizes.pop();
            } else {
                sizes[b] -= 1;
            }
        }
    }
    rec(0, &mut labels, &mut sizes, min_block, &compatible, &mut out);
    out
}
