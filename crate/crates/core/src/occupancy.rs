//! Probabilistic voxel map with explicit unknown space.
//!
//! Voxels live in 16x16x16 blocks stored in a hash map keyed by block
//! coordinates; blocks are allocated on first observation. A voxel that was
//! never updated is `Unknown`; observed voxels are `Occupied` when their
//! log-odds exceed the occupancy threshold and `Free` otherwise.

use std::collections::{BTreeSet, HashMap};
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{self, Read, Write};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::sensor::SensorModel;
use crate::{Aabb, Configuration, Vec3};

const BLOCK_BITS: i32 = 4;
const BLOCK_EDGE: i32 = 1 << BLOCK_BITS;
const BLOCK_VOXELS: usize = (BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE) as usize;
const DUMP_MAGIC: &[u8; 8] = b"OCCMAP1\0";

#[derive(Debug, Error)]
pub enum MapError {
    #[error("scan origin {0:?} lies outside the map bounds")]
    OriginOutOfBounds(Vec3),
    #[error("invalid map parameters: {0}")]
    InvalidParams(String),
    #[error("corrupt map dump: {0}")]
    CorruptDump(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoxelState {
    Unknown,
    Free,
    Occupied,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Map geometry and sensor-update constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub resolution: f64,
    pub bounds: Aabb,
    /// Occupancy probability applied for a hit.
    pub prob_hit: f64,
    /// Occupancy probability applied for a pass-through.
    pub prob_miss: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    /// Probability above which a voxel counts as occupied.
    pub occupancy_threshold: f64,
}

impl MapParams {
    pub fn new(resolution: f64, bounds: Aabb) -> Self {
        Self {
            resolution,
            bounds,
            prob_hit: 0.85,
            prob_miss: 0.4,
            clamp_min: -2.0,
            clamp_max: 3.5,
            occupancy_threshold: 0.5,
        }
    }

    pub fn l_hit(&self) -> f64 {
        logit(self.prob_hit)
    }

    /// Magnitude of the free-space decrement.
    pub fn l_miss(&self) -> f64 {
        -logit(self.prob_miss)
    }

    pub fn occupied_log_odds(&self) -> f64 {
        logit(self.occupancy_threshold)
    }

    fn validate(&self) -> Result<(), MapError> {
        let bad = |m: &str| Err(MapError::InvalidParams(m.to_string()));
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad("resolution must be positive");
        }
        let e = self.bounds.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0 && e.is_finite()) {
            return bad("bounds must have positive finite extent");
        }
        if !(self.prob_hit > 0.5 && self.prob_hit < 1.0) {
            return bad("prob_hit must be in (0.5, 1)");
        }
        if !(self.prob_miss > 0.0 && self.prob_miss < 0.5) {
            return bad("prob_miss must be in (0, 0.5)");
        }
        if !(self.clamp_min < 0.0 && self.clamp_max > 0.0) {
            return bad("clamp range must straddle zero");
        }
        if !(self.occupancy_threshold > 0.0 && self.occupancy_threshold < 1.0) {
            return bad("occupancy threshold must be in (0, 1)");
        }
        Ok(())
    }
}

/// Integer voxel coordinates relative to the map's minimum corner.
pub type VoxelKey = [i32; 3];

#[derive(Clone)]
struct Block {
    log_odds: Box<[f64; BLOCK_VOXELS]>,
    counts: Box<[u32; BLOCK_VOXELS]>,
}

impl Block {
    fn new() -> Self {
        Self {
            log_odds: Box::new([0.0; BLOCK_VOXELS]),
            counts: Box::new([0; BLOCK_VOXELS]),
        }
    }
}

/// Multiplicative hash for small integer keys.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ b as u64).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
        }
    }

    fn write_i32(&mut self, v: i32) {
        self.0 = (self.0.rotate_left(5) ^ v as u32 as u64).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

type BlockMap = HashMap<VoxelKey, Block, BuildHasherDefault<KeyHasher>>;

/// One ray of a depth scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRay {
    pub direction: Vec3,
    pub hit: Option<Vec3>,
}

/// Summary of one `integrate_scan` call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScanUpdate {
    pub newly_observed: usize,
    pub free_updates: usize,
    pub occupied_updates: usize,
}

#[derive(Clone)]
pub struct OccupancyMap {
    params: MapParams,
    dims: [i32; 3],
    blocks: BlockMap,
}

impl std::fmt::Debug for OccupancyMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OccupancyMap")
            .field("params", &self.params)
            .field("dims", &self.dims)
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

impl OccupancyMap {
    pub fn new(params: MapParams) -> Result<Self, MapError> {
        params.validate()?;
        let e = params.bounds.extent();
        let cells = |len: f64| ((len / params.resolution) - 1e-9).ceil().max(1.0) as i32;
        Ok(Self {
            params,
            dims: [cells(e.x), cells(e.y), cells(e.z)],
            blocks: BlockMap::default(),
        })
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn resolution(&self) -> f64 {
        self.params.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.params.bounds
    }

    pub fn dims(&self) -> [i32; 3] {
        self.dims
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    pub fn voxel_volume(&self) -> f64 {
        self.params.resolution.powi(3)
    }

    #[inline]
    pub fn in_grid(&self, k: VoxelKey) -> bool {
        (0..3).all(|a| k[a] >= 0 && k[a] < self.dims[a])
    }

    /// Voxel containing `p`, if inside the map.
    #[inline]
    pub fn key_of(&self, p: Vec3) -> Option<VoxelKey> {
        if !self.params.bounds.contains(p) {
            return None;
        }
        let k = self.raw_key(p);
        self.in_grid(k).then_some(k)
    }

    /// Grid coordinates of `p` without bounds checks.
    #[inline]
    pub fn raw_key(&self, p: Vec3) -> VoxelKey {
        let r = self.params.resolution;
        let m = self.params.bounds.min;
        [
            ((p.x - m.x) / r).floor() as i32,
            ((p.y - m.y) / r).floor() as i32,
            ((p.z - m.z) / r).floor() as i32,
        ]
    }

    #[inline]
    pub fn center_of(&self, k: VoxelKey) -> Vec3 {
        let r = self.params.resolution;
        self.params.bounds.min
            + Vec3::new(
                (k[0] as f64 + 0.5) * r,
                (k[1] as f64 + 0.5) * r,
                (k[2] as f64 + 0.5) * r,
            )
    }

    pub fn linear_index(&self, k: VoxelKey) -> u64 {
        (k[0] as u64) + self.dims[0] as u64 * (k[1] as u64 + self.dims[1] as u64 * k[2] as u64)
    }

    fn key_from_linear(&self, i: u64) -> VoxelKey {
        let nx = self.dims[0] as u64;
        let ny = self.dims[1] as u64;
        [(i % nx) as i32, ((i / nx) % ny) as i32, (i / (nx * ny)) as i32]
    }

    #[inline]
    fn split(k: VoxelKey) -> (VoxelKey, usize) {
        let b = [k[0] >> BLOCK_BITS, k[1] >> BLOCK_BITS, k[2] >> BLOCK_BITS];
        let m = BLOCK_EDGE - 1;
        let local = (k[0] & m) + BLOCK_EDGE * ((k[1] & m) + BLOCK_EDGE * (k[2] & m));
        (b, local as usize)
    }

    /// `(log_odds, observation_count)` of a voxel; `None` if never observed.
    #[inline]
    pub fn voxel(&self, k: VoxelKey) -> Option<(f64, u32)> {
        let (b, i) = Self::split(k);
        let block = self.blocks.get(&b)?;
        let c = block.counts[i];
        (c > 0).then(|| (block.log_odds[i], c))
    }

    #[inline]
    pub fn state(&self, k: VoxelKey) -> VoxelState {
        if !self.in_grid(k) {
            return VoxelState::Unknown;
        }
        match self.voxel(k) {
            None => VoxelState::Unknown,
            Some((l, _)) if l > self.params.occupied_log_odds() => VoxelState::Occupied,
            Some(_) => VoxelState::Free,
        }
    }

    /// State of the voxel containing `p`; out-of-bounds points are `Unknown`.
    pub fn state_at(&self, p: Vec3) -> VoxelState {
        self.key_of(p).map_or(VoxelState::Unknown, |k| self.state(k))
    }

    fn apply(&mut self, k: VoxelKey, delta: f64) -> bool {
        let (lo, hi) = (self.params.clamp_min, self.params.clamp_max);
        let (b, i) = Self::split(k);
        let block = self.blocks.entry(b).or_insert_with(Block::new);
        let fresh = block.counts[i] == 0;
        block.log_odds[i] = (block.log_odds[i] + delta).clamp(lo, hi);
        block.counts[i] = block.counts[i].saturating_add(1);
        fresh
    }

    /// Visits the voxels pierced by segment `a -> b` in order, starting with
    /// the voxel of `a` and ending with the voxel of `b` (or where the segment
    /// leaves the grid).
    pub fn walk<F>(&self, a: Vec3, b: Vec3, mut visit: F)
    where
        F: FnMut(VoxelKey) -> ControlFlow<()>,
    {
        let r = self.params.resolution;
        let origin = (a - self.params.bounds.min) / r;
        let end = (b - self.params.bounds.min) / r;
        let d = end - origin;
        let mut k = [origin.x.floor() as i32, origin.y.floor() as i32, origin.z.floor() as i32];
        let last = [end.x.floor() as i32, end.y.floor() as i32, end.z.floor() as i32];
        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for ax in 0..3 {
            let (o, dd) = (origin.get(ax), d.get(ax));
            if dd > 0.0 {
                step[ax] = 1;
                t_delta[ax] = 1.0 / dd;
                t_max[ax] = ((k[ax] as f64 + 1.0) - o) / dd;
            } else if dd < 0.0 {
                step[ax] = -1;
                t_delta[ax] = -1.0 / dd;
                t_max[ax] = (k[ax] as f64 - o) / dd;
            }
        }
        loop {
            if !self.in_grid(k) {
                return;
            }
            if visit(k).is_break() || k == last {
                return;
            }
            let ax = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[ax] > 1.0 {
                // rounding left us short of `last`; the segment ends here
                return;
            }
            k[ax] += step[ax];
            t_max[ax] += t_delta[ax];
        }
    }

    /// Integrates one scan taken from `origin`.
    ///
    /// Each voxel is updated at most once per scan; a voxel that receives a
    /// hit is not also updated as free. Hit points are pushed `1e-6` m along
    /// the ray so a surface on a voxel boundary marks the voxel behind it.
    pub fn integrate_scan(
        &mut self,
        origin: Vec3,
        rays: &[ScanRay],
        max_range: f64,
    ) -> Result<ScanUpdate, MapError> {
        if self.key_of(origin).is_none() {
            return Err(MapError::OriginOutOfBounds(origin));
        }
        let mut occupied: BTreeSet<u64> = BTreeSet::new();
        let mut free: BTreeSet<u64> = BTreeSet::new();
        for ray in rays {
            let Some(dir) = ray.direction.try_normalize() else {
                continue;
            };
            let hit = ray
                .hit
                .filter(|h| h.distance(origin) <= max_range)
                .map(|h| h + dir * 1e-6);
            let end = hit.unwrap_or(origin + dir * max_range);
            let end_key = self.raw_key(end);
            let mut path = Vec::new();
            self.walk(origin, end, |k| {
                path.push(k);
                ControlFlow::Continue(())
            });
            let mut reached_end = false;
            if hit.is_some() {
                if let Some(&lastk) = path.last() {
                    if lastk == end_key {
                        reached_end = true;
                    }
                }
            }
            if reached_end {
                let k = path.pop().expect("non-empty");
                occupied.insert(self.linear_index(k));
            }
            free.extend(path.into_iter().map(|k| self.linear_index(k)));
        }
        let mut update = ScanUpdate::default();
        let (l_hit, l_miss) = (self.params.l_hit(), self.params.l_miss());
        for &i in &occupied {
            let k = self.key_from_linear(i);
            update.newly_observed += self.apply(k, l_hit) as usize;
            update.occupied_updates += 1;
        }
        for &i in free.difference(&occupied) {
            let k = self.key_from_linear(i);
            update.newly_observed += self.apply(k, -l_miss) as usize;
            update.free_updates += 1;
        }
        Ok(update)
    }

    /// `true` when no `Occupied` voxel lies strictly between `from` and the
    /// voxel `target` along the straight line to its center.
    pub fn line_of_sight(&self, from: Vec3, target: VoxelKey) -> bool {
        let mut clear = true;
        self.walk(from, self.center_of(target), |k| {
            if k == target {
                return ControlFlow::Break(());
            }
            if self.state(k) == VoxelState::Occupied {
                clear = false;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        clear
    }

    /// Calls `visit` for every voxel whose center lies in the sensor frustum
    /// and range band at `config` and has line of sight from the sensor.
    /// Unknown voxels do not block sight.
    pub fn for_each_visible<F>(&self, config: &Configuration, sensor: &SensorModel, mut keep: impl FnMut(VoxelState) -> bool, mut visit: F)
    where
        F: FnMut(VoxelKey, VoxelState),
    {
        let frame = sensor.frame(config);
        let reach = Vec3::splat(sensor.d_max);
        let lo = self.raw_key(config.position - reach);
        let hi = self.raw_key(config.position + reach);
        let lo = [lo[0].max(0), lo[1].max(0), lo[2].max(0)];
        let hi = [
            hi[0].min(self.dims[0] - 1),
            hi[1].min(self.dims[1] - 1),
            hi[2].min(self.dims[2] - 1),
        ];
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let k = [x, y, z];
                    let s = self.state(k);
                    if !keep(s) {
                        continue;
                    }
                    if !sensor.contains_point(&frame, self.center_of(k)) {
                        continue;
                    }
                    if self.line_of_sight(config.position, k) {
                        visit(k, s);
                    }
                }
            }
        }
    }

    /// Number of unknown voxels the sensor would see from `config`.
    pub fn count_unknown_visible(&self, config: &Configuration, sensor: &SensorModel) -> usize {
        let mut n = 0;
        self.for_each_visible(config, sensor, |s| s == VoxelState::Unknown, |_, _| n += 1);
        n
    }

    /// Fraction of voxels with centers inside `region` that have been observed.
    pub fn known_fraction(&self, region: &Aabb) -> f64 {
        let (mut total, mut known) = (0usize, 0usize);
        self.for_each_voxel_in(region, |k| {
            total += 1;
            if self.state(k) != VoxelState::Unknown {
                known += 1;
            }
        });
        if total == 0 {
            0.0
        } else {
            known as f64 / total as f64
        }
    }

    /// Visits grid voxels whose centers lie inside `region`.
    pub fn for_each_voxel_in(&self, region: &Aabb, mut f: impl FnMut(VoxelKey)) {
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    let k = [x, y, z];
                    if region.contains(self.center_of(k)) {
                        f(k);
                    }
                }
            }
        }
    }

    /// Observed voxels in ascending linear-index order.
    pub fn observed_voxels(&self) -> Vec<(VoxelKey, f64, u32)> {
        let mut out: Vec<(u64, VoxelKey, f64, u32)> = Vec::new();
        for (bk, block) in &self.blocks {
            for (i, &c) in block.counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let li = i as i32;
                let k = [
                    (bk[0] << BLOCK_BITS) + li % BLOCK_EDGE,
                    (bk[1] << BLOCK_BITS) + (li / BLOCK_EDGE) % BLOCK_EDGE,
                    (bk[2] << BLOCK_BITS) + li / (BLOCK_EDGE * BLOCK_EDGE),
                ];
                out.push((self.linear_index(k), k, block.log_odds[i], c));
            }
        }
        out.sort_by_key(|e| e.0);
        out.into_iter().map(|(_, k, l, c)| (k, l, c)).collect()
    }

    /// ASCII PLY of occupied voxel centers colored by height.
    pub fn write_occupied_ply<W: Write>(&self, mut w: W) -> io::Result<()> {
        let occ: Vec<Vec3> = self
            .observed_voxels()
            .into_iter()
            .filter(|(k, _, _)| self.state(*k) == VoxelState::Occupied)
            .map(|(k, _, _)| self.center_of(k))
            .collect();
        writeln!(w, "ply")?;
        writeln!(w, "format ascii 1.0")?;
        writeln!(w, "element vertex {}", occ.len())?;
        for p in ["x", "y", "z"] {
            writeln!(w, "property float {p}")?;
        }
        for c in ["red", "green", "blue"] {
            writeln!(w, "property uchar {c}")?;
        }
        writeln!(w, "end_header")?;
        let (z0, z1) = (self.params.bounds.min.z, self.params.bounds.max.z);
        for p in occ {
            let [r, g, b] = height_color((p.z - z0) / (z1 - z0));
            writeln!(w, "{:.6} {:.6} {:.6} {r} {g} {b}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    /// Binary dump of `(voxel index, log-odds, count)` triples.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&self.params.resolution.to_le_bytes())?;
        for v in [self.params.bounds.min, self.params.bounds.max] {
            for c in [v.x, v.y, v.z] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        let vox = self.observed_voxels();
        w.write_all(&(vox.len() as u64).to_le_bytes())?;
        for (k, l, c) in vox {
            w.write_all(&self.linear_index(k).to_le_bytes())?;
            w.write_all(&l.to_le_bytes())?;
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    /// Rebuilds a map from [`OccupancyMap::write_dump`] output; update
    /// constants other than geometry come from `template`.
    pub fn read_dump<R: Read>(mut r: R, template: MapParams) -> Result<Self, MapError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(MapError::CorruptDump("bad magic".into()));
        }
        let mut f = || -> Result<f64, MapError> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let resolution = f()?;
        let min = Vec3::new(f()?, f()?, f()?);
        let max = Vec3::new(f()?, f()?, f()?);
        let mut params = template;
        params.resolution = resolution;
        params.bounds = Aabb::new(min, max);
        let mut map = Self::new(params)?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            let idx = u64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let l = f64::from_le_bytes(b8);
            let mut b4 = [0u8; 4];
            r.read_exact(&mut b4)?;
            let c = u32::from_le_bytes(b4);
            if idx >= map.voxel_count() as u64 || c == 0 {
                return Err(MapError::CorruptDump(format!("bad voxel record {idx}")));
            }
            let k = map.key_from_linear(idx);
            let (bk, i) = Self::split(k);
            let block = map.blocks.entry(bk).or_insert_with(Block::new);
            block.log_odds[i] = l;
            block.counts[i] = c;
        }
        Ok(map)
    }
}

/// Blue-to-red ramp for `s` in `[0, 1]`.
fn height_color(s: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0);
    let ch = |c: f64| (255.0 * c.clamp(0.0, 1.0)).round() as u8;
    [ch(1.5 - (4.0 * s - 3.0).abs()), ch(1.5 - (4.0 * s - 2.0).abs()), ch(1.5 - (4.0 * s - 1.0).abs())]
}
