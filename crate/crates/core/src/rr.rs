//! Signed reverse-reachable (RR) sample pools.
//!
//! An RR sample rooted at `u` is the set of nodes that reach `u` in a random
//! live-edge world. A seed set `S` activates `u` exactly when it intersects
//! that set, so signed coverage counts over a pool estimate the positive,
//! negative and net spread at once:
//!
//! * `RootSample` draws `l` roots uniformly from `V+ ∪ V-` and scales coverage
//!   by `|V+ ∪ V-| / l`.
//! * `World` draws `l` live-edge worlds and, per world, one sample for every
//!   polar root, scaled by `1 / l`. This is the per-node construction used by
//!   the concentration bound and is meant for verification on small graphs.
//!
//! Samples are indexed by node through an inverted index so that coverage and
//! marginal gains only touch samples containing the queried nodes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::opinion::OpinionPartition;
use crate::rng::rng_for;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    RootSample,
    World,
}

/// Number of samples `l` for an `(epsilon, delta)` guarantee over seed sets of size at most `k`:
/// `ceil(((k + 1) ln n + ln(2 / delta)) / (2 epsilon^2))`.
pub fn sample_count(n: usize, k: usize, epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let numer = (k as f64 + 1.0) * (n as f64).ln() + (2.0 / delta).ln();
    let l = (numer / (2.0 * epsilon * epsilon)).ceil();
    Ok((l as usize).max(1))
}

/// `delta = 1 / (scale * k * n)`.
pub fn delta_from_scale(scale: f64, k: usize, n: usize) -> Result<f64> {
    let inv = scale * k as f64 * n as f64;
    if inv.is_nan() || inv <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta scale {scale} with k = {k}, n = {n} does not give delta < 1"
        )));
    }
    Ok(1.0 / inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub epsilon: f64,
    pub delta: f64,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Absent when `l` was fixed directly.
    pub accuracy: Option<Accuracy>,
    pub l: usize,
    pub mode: SamplingMode,
}

impl SamplingPlan {
    pub fn from_accuracy(n: usize, k: usize, epsilon: f64, delta: f64, mode: SamplingMode) -> Result<Self> {
        Ok(SamplingPlan {
            accuracy: Some(Accuracy { epsilon, delta, k }),
            l: sample_count(n, k, epsilon, delta)?,
            mode,
        })
    }

    pub fn fixed(l: usize, mode: SamplingMode) -> Self {
        SamplingPlan {
            accuracy: None,
            l: l.max(1),
            mode,
        }
    }
}

/// Reusable reverse-BFS state.
pub(crate) struct ReverseBfs {
    stamp: Vec<u32>,
    epoch: u32,
}

impl ReverseBfs {
    pub(crate) fn new(n: usize) -> Self {
        ReverseBfs {
            stamp: vec![0; n],
            epoch: 0,
        }
    }

    fn begin(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Lazy sampling: each incoming edge of a dequeued node whose source is not
    /// yet in the sample is tested once with its own draw.
    pub(crate) fn sample<R: Rng>(&mut self, g: &Graph, root: NodeId, rng: &mut R, out: &mut Vec<NodeId>) {
        let epoch = self.begin();
        out.clear();
        out.push(root);
        self.stamp[root as usize] = epoch;
        let mut head = 0;
        while head < out.len() {
            let v = out[head];
            head += 1;
            for (&u, &w) in g.in_neighbors(v).iter().zip(g.in_weights(v)) {
                if self.stamp[u as usize] != epoch && rng.random::<f64>() < w {
                    self.stamp[u as usize] = epoch;
                    out.push(u);
                }
            }
        }
    }

    /// Nodes reaching `root` over edges flagged live.
    fn sample_in_world(&mut self, g: &Graph, root: NodeId, live: &[bool], out: &mut Vec<NodeId>) {
        let epoch = self.begin();
        out.clear();
        out.push(root);
        self.stamp[root as usize] = epoch;
        let mut head = 0;
        while head < out.len() {
            let v = out[head];
            head += 1;
            for (&u, &id) in g.in_neighbors(v).iter().zip(g.in_edge_ids(v)) {
                if live[id as usize] && self.stamp[u as usize] != epoch {
                    self.stamp[u as usize] = epoch;
                    out.push(u);
                }
            }
        }
    }
}

/// One RR sample rooted at `root`, reproducible from `rng_seed`. The root comes first.
pub fn sample_rr_set(g: &Graph, root: NodeId, rng_seed: u64) -> Result<Vec<NodeId>> {
    if !g.contains(root) {
        return Err(Error::node_out_of_range(root, g.n()));
    }
    let mut out = Vec::new();
    ReverseBfs::new(g.n()).sample(g, root, &mut rng_for(rng_seed, 0), &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub root: NodeId,
    pub sign: i8,
    pub members: &'a [NodeId],
}

/// Integer coverage counts behind an estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub pos: u64,
    pub neg: u64,
}

impl Coverage {
    pub fn net(&self) -> i64 {
        self.pos as i64 - self.neg as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma_pos: f64,
    pub sigma_neg: f64,
    pub sigma_net: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignedSamplePool {
    n: usize,
    mode: SamplingMode,
    roots: Vec<NodeId>,
    signs: Vec<i8>,
    offsets: Vec<usize>,
    members: Vec<NodeId>,
    index_offsets: Vec<usize>,
    index: Vec<u32>,
    scale_num: f64,
    scale_den: f64,
}

impl SignedSamplePool {
    /// Assembles a pool from explicit `(root, sign, members)` samples.
    ///
    /// The estimate scale is `scale_num / scale_den`. Every sample must contain
    /// its root, list each member once, and carry sign `+1` or `-1`.
    pub fn from_samples(
        n: usize,
        mode: SamplingMode,
        samples: Vec<(NodeId, i8, Vec<NodeId>)>,
        scale_num: f64,
        scale_den: f64,
    ) -> Result<Self> {
        let mut builder = PoolBuilder::new(n);
        let mut seen = vec![false; n];
        for (root, sign, members) in samples {
            if sign != 1 && sign != -1 {
                return Err(Error::InvalidParameter(format!("sample sign {sign}")));
            }
            if !members.contains(&root) {
                return Err(Error::InvalidParameter(format!("sample does not contain its root {root}")));
            }
            for &m in &members {
                if m as usize >= n {
                    return Err(Error::node_out_of_range(m, n));
                }
                if std::mem::replace(&mut seen[m as usize], true) {
                    return Err(Error::InvalidParameter(format!("node {m} repeated in a sample")));
                }
            }
            members.iter().for_each(|&m| seen[m as usize] = false);
            builder.push(root, sign, &members);
        }
        builder.finish(mode, scale_num, scale_den)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale_num / self.scale_den
    }

    /// Numerator and denominator of the estimate scale.
    pub fn scale_parts(&self) -> (f64, f64) {
        (self.scale_num, self.scale_den)
    }

    /// Converts an integer coverage count into an estimate on the spread scale.
    pub fn scaled(&self, count: i64) -> f64 {
        count as f64 * self.scale_num / self.scale_den
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            root: self.roots[i],
            sign: self.signs[i],
            members: &self.members[self.offsets[i]..self.offsets[i + 1]],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    pub fn sign(&self, i: usize) -> i8 {
        self.signs[i]
    }

    /// Ids of the samples containing `v`, ascending.
    pub fn containing(&self, v: NodeId) -> &[u32] {
        &self.index[self.index_offsets[v as usize]..self.index_offsets[v as usize + 1]]
    }

    /// Total number of sample memberships (the pool's memory footprint in ids).
    pub fn total_members(&self) -> usize {
        self.members.len()
    }

    pub fn coverage(&self, seeds: &[NodeId]) -> Coverage {
        let mut state = CoverState::new(self);
        for &s in seeds {
            state.insert(self, s);
        }
        state.coverage
    }

    /// Scaled coverage of `seeds` over positive and negative samples. The net
    /// value is scaled from the net count, so sets with equal net coverage
    /// get bit-identical estimates.
    pub fn estimate_sigma(&self, seeds: &[NodeId]) -> SigmaEstimate {
        let c = self.coverage(seeds);
        SigmaEstimate {
            sigma_pos: self.scaled(c.pos as i64),
            sigma_neg: self.scaled(c.neg as i64),
            sigma_net: self.scaled(c.net()),
        }
    }

    /// `sigma(S ∪ {v}) - sigma(S)` where `state` tracks the samples covered by `S`.
    pub fn marginal_gain(&self, v: NodeId, state: &CoverState) -> f64 {
        self.scaled(state.marginal_count(self, v))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(POOL_MAGIC)?;
        w.write_all(&[match self.mode {
            SamplingMode::RootSample => 0,
            SamplingMode::World => 1,
        }])?;
        w.write_all(&to_u32(self.n)?.to_le_bytes())?;
        w.write_all(&self.scale_num.to_le_bytes())?;
        w.write_all(&self.scale_den.to_le_bytes())?;
        w.write_all(&to_u32(self.len())?.to_le_bytes())?;
        for s in self.samples() {
            w.write_all(&s.root.to_le_bytes())?;
            w.write_all(&s.sign.to_le_bytes())?;
            w.write_all(&to_u32(s.members.len())?.to_le_bytes())?;
            for m in s.members {
                w.write_all(&m.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact(&mut r, &mut magic)?;
        if &magic != POOL_MAGIC {
            return Err(Error::PoolFormat("bad magic".into()));
        }
        let mut mode = [0u8; 1];
        read_exact(&mut r, &mut mode)?;
        let mode = match mode[0] {
            0 => SamplingMode::RootSample,
            1 => SamplingMode::World,
            m => return Err(Error::PoolFormat(format!("unknown mode byte {m}"))),
        };
        let n = read_u32(&mut r)? as usize;
        let scale_num = read_f64(&mut r)?;
        let scale_den = read_f64(&mut r)?;
        if !(scale_num.is_finite() && scale_den > 0.0 && scale_den.is_finite()) {
            return Err(Error::PoolFormat("invalid scale".into()));
        }
        let count = read_u32(&mut r)?;
        let mut samples = Vec::with_capacity(count.min(1 << 20) as usize);
        for _ in 0..count {
            let root = read_u32(&mut r)?;
            let mut sign = [0u8; 1];
            read_exact(&mut r, &mut sign)?;
            let len = read_u32(&mut r)?;
            let members = (0..len).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
            samples.push((root, sign[0] as i8, members));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::PoolFormat("trailing bytes".into()));
        }
        SignedSamplePool::from_samples(n, mode, samples, scale_num, scale_den)
            .map_err(|e| Error::PoolFormat(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

const POOL_MAGIC: &[u8; 5] = b"OIMP1";

fn to_u32(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::PoolFormat(format!("{x} does not fit in 32 bits")))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::PoolFormat("truncated".into()),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

struct PoolBuilder {
    n: usize,
    roots: Vec<NodeId>,
    signs: Vec<i8>,
    offsets: Vec<usize>,
    members: Vec<NodeId>,
}

impl PoolBuilder {
    fn new(n: usize) -> Self {
        PoolBuilder {
            n,
            roots: Vec::new(),
            signs: Vec::new(),
            offsets: vec![0],
            members: Vec::new(),
        }
    }

    fn push(&mut self, root: NodeId, sign: i8, members: &[NodeId]) {
        self.roots.push(root);
        self.signs.push(sign);
        self.members.extend_from_slice(members);
        self.offsets.push(self.members.len());
    }

    fn finish(self, mode: SamplingMode, scale_num: f64, scale_den: f64) -> Result<SignedSamplePool> {
        if self.roots.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many samples".into()));
        }
        let mut index_offsets = vec![0usize; self.n + 1];
        for &m in &self.members {
            index_offsets[m as usize + 1] += 1;
        }
        for i in 0..self.n {
            index_offsets[i + 1] += index_offsets[i];
        }
        let mut cursor = index_offsets.clone();
        let mut index = vec![0u32; self.members.len()];
        for (s, w) in self.offsets.windows(2).enumerate() {
            for &m in &self.members[w[0]..w[1]] {
                index[cursor[m as usize]] = s as u32;
                cursor[m as usize] += 1;
            }
        }
        Ok(SignedSamplePool {
            n: self.n,
            mode,
            roots: self.roots,
            signs: self.signs,
            offsets: self.offsets,
            members: self.members,
            index_offsets,
            index,
            scale_num,
            scale_den,
        })
    }
}

/// Samples already covered by a growing seed set, with running coverage counts.
#[derive(Clone, Debug)]
pub struct CoverState {
    covered: Vec<bool>,
    coverage: Coverage,
}

impl CoverState {
    pub fn new(pool: &SignedSamplePool) -> Self {
        CoverState {
            covered: vec![false; pool.len()],
            coverage: Coverage::default(),
        }
    }

    pub fn from_set(pool: &SignedSamplePool, seeds: &[NodeId]) -> Self {
        let mut s = Self::new(pool);
        for &v in seeds {
            s.insert(pool, v);
        }
        s
    }

    pub fn is_covered(&self, sample: usize) -> bool {
        self.covered[sample]
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    /// Signed count of not-yet-covered samples containing `v`.
    pub fn marginal_count(&self, pool: &SignedSamplePool, v: NodeId) -> i64 {
        pool.containing(v)
            .iter()
            .filter(|&&i| !self.covered[i as usize])
            .map(|&i| pool.signs[i as usize] as i64)
            .sum()
    }

    /// Marks every sample containing `v` covered; calls `on_new` for each newly covered one.
    pub fn insert_with(&mut self, pool: &SignedSamplePool, v: NodeId, mut on_new: impl FnMut(usize)) {
        for &i in pool.containing(v) {
            let i = i as usize;
            if !std::mem::replace(&mut self.covered[i], true) {
                if pool.signs[i] > 0 {
                    self.coverage.pos += 1;
                } else {
                    self.coverage.neg += 1;
                }
                on_new(i);
            }
        }
    }

    pub fn insert(&mut self, pool: &SignedSamplePool, v: NodeId) {
        self.insert_with(pool, v, |_| {});
    }
}

/// Builds a signed pool according to `plan`. Sample `i` (or world `i`) draws
/// from its own generator seeded by `(master_seed, i)`.
pub fn build_pool(
    g: &Graph,
    part: &OpinionPartition,
    plan: &SamplingPlan,
    master_seed: u64,
) -> Result<SignedSamplePool> {
    if part.len() != g.n() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} nodes, graph has {}",
            part.len(),
            g.n()
        )));
    }
    let polar = part.polar_nodes();
    if polar.is_empty() {
        return Err(Error::EmptyObjective);
    }
    let l = plan.l.max(1);
    let sign = |u: NodeId| part.sign(u) as i8;
    match plan.mode {
        SamplingMode::RootSample => {
            let sets: Vec<(NodeId, Vec<NodeId>)> = (0..l as u64)
                .into_par_iter()
                .map_init(
                    || ReverseBfs::new(g.n()),
                    |bfs, i| {
                        let mut rng = rng_for(master_seed, i);
                        let root = polar[rng.random_range(0..polar.len())];
                        let mut out = Vec::new();
                        bfs.sample(g, root, &mut rng, &mut out);
                        (root, out)
                    },
                )
                .collect();
            let mut b = PoolBuilder::new(g.n());
            for (root, members) in &sets {
                b.push(*root, sign(*root), members);
            }
            b.finish(SamplingMode::RootSample, polar.len() as f64, l as f64)
        }
        SamplingMode::World => {
            let worlds: Vec<Vec<Vec<NodeId>>> = (0..l as u64)
                .into_par_iter()
                .map_init(
                    || ReverseBfs::new(g.n()),
                    |bfs, i| {
                        let mut rng = rng_for(master_seed, i);
                        let live: Vec<bool> = g
                            .edge_weights()
                            .iter()
                            .map(|&w| rng.random::<f64>() < w)
                            .collect();
                        polar
                            .iter()
                            .map(|&root| {
                                let mut out = Vec::new();
                                bfs.sample_in_world(g, root, &live, &mut out);
                                out
                            })
                            .collect()
                    },
                )
                .collect();
            let mut b = PoolBuilder::new(g.n());
            for world in &worlds {
                for (&root, members) in polar.iter().zip(world) {
                    b.push(root, sign(root), members);
                }
            }
            b.finish(SamplingMode::World, 1.0, l as f64)
        }
    }
}

/// Opinion-unaware pool: `l` roots drawn uniformly from all of `V`, every
/// sample signed `+1`, scaled by `n / l` so coverage estimates total spread.
pub fn build_total_pool(g: &Graph, l: usize, master_seed: u64) -> Result<SignedSamplePool> {
    if g.n() == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let l = l.max(1);
    let n = g.n();
    let sets: Vec<(NodeId, Vec<NodeId>)> = (0..l as u64)
        .into_par_iter()
        .map_init(
            || ReverseBfs::new(n),
            |bfs, i| {
                let mut rng = rng_for(master_seed, i);
                let root = rng.random_range(0..n as NodeId);
                let mut out = Vec::new();
                bfs.sample(g, root, &mut rng, &mut out);
                (root, out)
            },
        )
        .collect();
    let mut b = PoolBuilder::new(n);
    for (root, members) in &sets {
        b.push(*root, 1, members);
    }
    b.finish(SamplingMode::RootSample, n as f64, l as f64)
}
