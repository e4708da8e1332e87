//! Simulated row-block distribution over `n_ranks` in-process ranks.
//!
//! Assembly codes usually produce matrices in *partial row* form: a rank holds
//! whatever contributions its elements generate, including contributions to
//! rows owned by other ranks. The solver needs *full rows*: each owned row
//! complete on its owner. The conversion is split in two, mirroring how a
//! distributed code would do it:
//!
//! 1. [`discover_halo`] works out, from the sparsity structure alone, which
//!    `(row, col)` contributions every rank must ship to which owner. This
//!    only has to be redone when the structure changes.
//! 2. [`assemble_full_rows`] ships the values along the discovered routes and
//!    sums them on the owner. It can be rerun for every new set of
//!    coefficients, and it refuses to run if the structure no longer matches
//!    the one the halo was discovered on.
//!
//! Messages are recorded explicitly so message counts and volumes can be
//! inspected. Contributions to a row are always summed in ascending rank
//! order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    Contiguous,
    SfcMorton,
}

/// A contribution a rank holds for a row owned by `remote_rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaloEntry {
    pub remote_rank: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangePhase {
    /// Holder announces the `(row, col)` index pairs it will send.
    DiscoveryRequest,
    /// Owner confirms the receive layout back to the holder.
    DiscoveryReply,
    /// Holder ships the values themselves.
    Retrieval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub phase: ExchangePhase,
    /// Number of `(row, col)` index pairs or values carried.
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankPartition {
    n_ranks: usize,
    owner: Vec<usize>,
    local_rows: Vec<Vec<usize>>,
    halo_map: Vec<Vec<HaloEntry>>,
    fingerprint: Option<u64>,
    discovery_messages: Vec<Message>,
}

impl RankPartition {
    /// Builds a partition from an explicit owner map. Ranks may end up empty.
    pub fn from_owner(owner: Vec<usize>, n_ranks: usize) -> Result<Self> {
        if n_ranks == 0 {
            return Err(Error::Partition("at least one rank is required".into()));
        }
        let mut local_rows = vec![Vec::new(); n_ranks];
        for (i, &p) in owner.iter().enumerate() {
            if p >= n_ranks {
                return Err(Error::Partition(format!("row {i} assigned to rank {p} of {n_ranks}")));
            }
            local_rows[p].push(i);
        }
        Ok(Self {
            n_ranks,
            owner,
            local_rows,
            halo_map: vec![Vec::new(); n_ranks],
            fingerprint: None,
            discovery_messages: Vec::new(),
        })
    }

    /// Everything owned by a single rank.
    pub fn single(n: usize) -> Self {
        Self::from_owner(vec![0; n], 1).expect("one rank")
    }

    pub fn n_ranks(&self) -> usize {
        self.n_ranks
    }

    pub fn n(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn owner_of(&self, row: usize) -> usize {
        self.owner[row]
    }

    /// Owned global rows of `rank`, ascending.
    pub fn local_rows(&self, rank: usize) -> &[usize] {
        &self.local_rows[rank]
    }

    pub fn halo_map(&self, rank: usize) -> &[HaloEntry] {
        &self.halo_map[rank]
    }

    pub fn is_discovered(&self) -> bool {
        self.fingerprint.is_some()
    }

    pub fn discovery_messages(&self) -> &[Message] {
        &self.discovery_messages
    }

    /// Diagonal block `A_pp` of every rank, in local numbering.
    pub fn diagonal_blocks(&self, a: &CsrMatrix) -> Vec<CsrMatrix> {
        let mut local_index = vec![0usize; self.n()];
        for rows in &self.local_rows {
            for (k, &i) in rows.iter().enumerate() {
                local_index[i] = k;
            }
        }
        (0..self.n_ranks)
            .map(|p| {
                let col_map: Vec<Option<usize>> = (0..self.n())
                    .map(|j| (self.owner[j] == p).then_some(local_index[j]))
                    .collect();
                a.submatrix(&self.local_rows[p], &col_map, self.local_rows[p].len())
            })
            .collect()
    }

    /// Half-open owned index ranges per rank, the on-disk form of a partition.
    pub fn owned_ranges(&self) -> Vec<Vec<(usize, usize)>> {
        self.local_rows
            .iter()
            .map(|rows| {
                let mut ranges: Vec<(usize, usize)> = Vec::new();
                for &i in rows {
                    match ranges.last_mut() {
                        Some(r) if r.1 == i => r.1 = i + 1,
                        _ => ranges.push((i, i + 1)),
                    }
                }
                ranges
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = PartitionDump {
            n: self.n(),
            n_ranks: self.n_ranks,
            owned_ranges: self.owned_ranges(),
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: PartitionDump = serde_json::from_str(text)?;
        if dump.owned_ranges.len() != dump.n_ranks {
            return Err(Error::Partition(format!(
                "{} rank entries for {} ranks",
                dump.owned_ranges.len(),
                dump.n_ranks
            )));
        }
        let mut owner = vec![usize::MAX; dump.n];
        for (p, ranges) in dump.owned_ranges.iter().enumerate() {
            for &(s, e) in ranges {
                if s > e || e > dump.n {
                    return Err(Error::Partition(format!("range [{s}, {e}) invalid for n = {}", dump.n)));
                }
                for o in &mut owner[s..e] {
                    if *o != usize::MAX {
                        return Err(Error::Partition("owned ranges overlap".into()));
                    }
                    *o = p;
                }
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::Partition("owned ranges do not cover every index".into()));
        }
        Self::from_owner(owner, dump.n_ranks)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionDump {
    n: usize,
    n_ranks: usize,
    owned_ranges: Vec<Vec<(usize, usize)>>,
}

/// Splits `n` indices over `n_ranks`. `grid` is required for
/// [`PartitionScheme::SfcMorton`] and gives the grid extents, fastest index
/// first (`index = x + nx * (y + ny * z)`).
pub fn make_partition(
    n: usize,
    n_ranks: usize,
    scheme: PartitionScheme,
    grid: Option<&[usize]>,
) -> Result<RankPartition> {
    if n_ranks == 0 || n_ranks > n {
        return Err(Error::Partition(format!("cannot split {n} rows over {n_ranks} ranks")));
    }
    let order: Vec<usize> = match scheme {
        PartitionScheme::Contiguous => (0..n).collect(),
        PartitionScheme::SfcMorton => {
            let dims = grid.ok_or_else(|| Error::Partition("sfc_morton needs grid dimensions".into()))?;
            if dims.is_empty() || dims.len() > 3 || dims.iter().product::<usize>() != n {
                return Err(Error::Partition(format!("grid {dims:?} does not describe {n} indices")));
            }
            let mut keyed: Vec<(u64, usize)> = (0..n).map(|i| (morton_code(i, dims), i)).collect();
            keyed.sort_unstable();
            keyed.into_iter().map(|(_, i)| i).collect()
        }
    };
    let (base, extra) = (n / n_ranks, n % n_ranks);
    let mut owner = vec![0usize; n];
    let mut pos = 0;
    for p in 0..n_ranks {
        let len = base + usize::from(p < extra);
        for &i in &order[pos..pos + len] {
            owner[i] = p;
        }
        pos += len;
    }
    RankPartition::from_owner(owner, n_ranks)
}

fn morton_code(index: usize, dims: &[usize]) -> u64 {
    let mut coords = [0u64; 3];
    let mut rest = index;
    for (c, &d) in coords.iter_mut().zip(dims) {
        *c = (rest % d) as u64;
        rest /= d;
    }
    let mut code = 0u64;
    for bit in 0..21 {
        for (axis, c) in coords.iter().enumerate().take(dims.len()) {
            code |= ((c >> bit) & 1) << (bit * dims.len() as u64 + axis as u64);
        }
    }
    code
}

/// Per-rank fragments over global indices; the true matrix is the entrywise
/// sum of all fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRowMatrix {
    n: usize,
    fragments: Vec<CsrMatrix>,
}

impl PartialRowMatrix {
    pub fn new(n: usize, fragments: Vec<CsrMatrix>) -> Result<Self> {
        for (p, f) in fragments.iter().enumerate() {
            if f.nrows() != n || f.ncols() != n {
                return Err(Error::Partition(format!(
                    "fragment of rank {p} is {}x{}, expected global {n}x{n} indexing",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(Self { n, fragments })
    }

    /// Builds fragments from per-rank contribution lists; duplicate
    /// contributions within a rank are summed in list order.
    pub fn from_rank_triplets(n: usize, per_rank: &[Vec<(usize, usize, f64)>]) -> Result<Self> {
        let fragments = per_rank
            .iter()
            .map(|t| CsrMatrix::from_triplets(n, n, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, fragments)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_ranks(&self) -> usize {
        self.fragments.len()
    }

    pub fn fragment(&self, rank: usize) -> &CsrMatrix {
        &self.fragments[rank]
    }

    /// Same structure, new coefficients (one value array per rank).
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != self.fragments.len() {
            return Err(Error::DimensionMismatch("one value array per rank expected".into()));
        }
        let fragments = self
            .fragments
            .iter()
            .zip(values)
            .map(|(f, v)| f.clone().with_values(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: self.n, fragments })
    }

    /// FNV-1a over every fragment's dimensions and index arrays.
    pub fn structure_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: usize| {
            for b in (x as u64).to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.n);
        feed(self.fragments.len());
        for f in &self.fragments {
            f.row_offsets().iter().for_each(|&x| feed(x));
            f.col_indices().iter().for_each(|&x| feed(x));
        }
        h
    }

    /// Entrywise sum of all fragments in ascending rank order; the reference
    /// global matrix.
    pub fn sum_global(&self) -> CsrMatrix {
        let mut triplets = Vec::new();
        for f in &self.fragments {
            triplets.extend(f.iter());
        }
        CsrMatrix::from_triplets(self.n, self.n, &triplets).expect("in-range fragments")
    }
}

/// Complete owned rows per rank (local row `k` of rank `p` is global row
/// `local_rows(p)[k]`), with global column indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRowMatrix {
    n: usize,
    blocks: Vec<CsrMatrix>,
    local_rows: Vec<Vec<usize>>,
    col_halo: Vec<Vec<usize>>,
    retrieval_messages: Vec<Message>,
}

impl FullRowMatrix {
    pub fn block(&self, rank: usize) -> &CsrMatrix {
        &self.blocks[rank]
    }

    pub fn local_rows(&self, rank: usize) -> &[usize] {
        &self.local_rows[rank]
    }

    /// Global columns referenced by `rank`'s rows that it does not own.
    pub fn col_halo(&self, rank: usize) -> &[usize] {
        &self.col_halo[rank]
    }

    pub fn retrieval_messages(&self) -> &[Message] {
        &self.retrieval_messages
    }

    /// Concatenates the owned blocks back into one global matrix.
    pub fn to_global(&self) -> CsrMatrix {
        let mut src = vec![(0usize, 0usize); self.n];
        for (p, rows) in self.local_rows.iter().enumerate() {
            for (k, &i) in rows.iter().enumerate() {
                src[i] = (p, k);
            }
        }
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &(p, k) in &src {
            let (c, v) = self.blocks[p].row(k);
            col_indices.extend_from_slice(c);
            values.extend_from_slice(v);
            row_offsets.push(col_indices.len());
        }
        CsrMatrix::from_parts(self.n, self.n, row_offsets, col_indices, values)
    }
}

/// Fills the halo map: for every rank, the stored contributions it holds for
/// rows owned elsewhere, tagged with the owner. Deterministic and idempotent.
pub fn discover_halo(pm: &PartialRowMatrix, part: &RankPartition) -> Result<RankPartition> {
    if pm.n_ranks() != part.n_ranks() || pm.n() != part.n() {
        return Err(Error::Partition(format!(
            "partial matrix has {} ranks over {} rows, partition has {} ranks over {} rows",
            pm.n_ranks(),
            pm.n(),
            part.n_ranks(),
            part.n()
        )));
    }
    let mut halo_map = vec![Vec::new(); part.n_ranks];
    for (q, frag) in pm.fragments.iter().enumerate() {
        for row in 0..frag.nrows() {
            let p = part.owner[row];
            if p == q {
                continue;
            }
            for &col in frag.row(row).0 {
                halo_map[q].push(HaloEntry { remote_rank: p, row, col });
            }
        }
    }
    let mut messages = Vec::new();
    for (q, entries) in halo_map.iter().enumerate() {
        let mut per_owner = vec![0usize; part.n_ranks];
        for e in entries {
            per_owner[e.remote_rank] += 1;
        }
        for (p, &count) in per_owner.iter().enumerate().filter(|(_, &c)| c > 0) {
            messages.push(Message { from: q, to: p, phase: ExchangePhase::DiscoveryRequest, entries: count });
            messages.push(Message { from: p, to: q, phase: ExchangePhase::DiscoveryReply, entries: count });
        }
    }
    let mut out = part.clone();
    out.halo_map = halo_map;
    out.fingerprint = Some(pm.structure_fingerprint());
    out.discovery_messages = messages;
    Ok(out)
}

/// Ships every halo contribution to its owner and sums each owned row in
/// ascending rank order.
pub fn assemble_full_rows(pm: &PartialRowMatrix, part: &RankPartition) -> Result<FullRowMatrix> {
    let expected = part
        .fingerprint
        .ok_or_else(|| Error::Partition("halo has not been discovered".into()))?;
    let found = pm.structure_fingerprint();
    if expected != found || pm.n_ranks() != part.n_ranks() {
        return Err(Error::StructureChanged { expected, found });
    }
    let n_ranks = part.n_ranks;

    // retrieval: inbox[p] holds (row, from_rank, col, value)
    let mut inbox: Vec<Vec<(usize, usize, usize, f64)>> = vec![Vec::new(); n_ranks];
    let mut retrieval_messages = Vec::new();
    for (q, entries) in part.halo_map.iter().enumerate() {
        let frag = &pm.fragments[q];
        let mut per_owner = vec![0usize; n_ranks];
        for e in entries {
            inbox[e.remote_rank].push((e.row, q, e.col, frag.get(e.row, e.col)));
            per_owner[e.remote_rank] += 1;
        }
        for (p, &count) in per_owner.iter().enumerate().filter(|(_, &c)| c > 0) {
            retrieval_messages.push(Message { from: q, to: p, phase: ExchangePhase::Retrieval, entries: count });
        }
    }

    let n = pm.n();
    let mut marker = vec![usize::MAX; n];
    let mut acc = vec![0.0; n];
    let mut blocks = Vec::with_capacity(n_ranks);
    let mut col_halo = Vec::with_capacity(n_ranks);
    let mut contribs: Vec<(usize, usize, f64)> = Vec::new();
    for p in 0..n_ranks {
        let mail = &mut inbox[p];
        mail.sort_by_key(|e| (e.0, e.1, e.2));
        let own = &pm.fragments[p];
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut halo_cols = Vec::new();
        let mut cursor = 0;
        for (k, &row) in part.local_rows[p].iter().enumerate() {
            contribs.clear();
            let (oc, ov) = own.row(row);
            contribs.extend(oc.iter().zip(ov).map(|(&c, &v)| (p, c, v)));
            while cursor < mail.len() && mail[cursor].0 < row {
                cursor += 1;
            }
            while cursor < mail.len() && mail[cursor].0 == row {
                let (_, q, c, v) = mail[cursor];
                contribs.push((q, c, v));
                cursor += 1;
            }
            contribs.sort_by_key(|e| e.0);
            let start = col_indices.len();
            for &(_, c, v) in contribs.iter() {
                if marker[c] != k + p * n {
                    marker[c] = k + p * n;
                    acc[c] = v;
                    col_indices.push(c);
                } else {
                    acc[c] += v;
                }
            }
            col_indices[start..].sort_unstable();
            for &c in &col_indices[start..] {
                values.push(acc[c]);
                if part.owner[c] != p {
                    halo_cols.push(c);
                }
            }
            row_offsets.push(col_indices.len());
        }
        halo_cols.sort_unstable();
        halo_cols.dedup();
        let nrows = part.local_rows[p].len();
        blocks.push(CsrMatrix::from_parts(nrows, n, row_offsets, col_indices, values));
        col_halo.push(halo_cols);
    }
    Ok(FullRowMatrix {
        n,
        blocks,
        local_rows: part.local_rows.clone(),
        col_halo,
        retrieval_messages,
    })
}
