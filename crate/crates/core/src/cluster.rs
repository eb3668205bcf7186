//! Round-synchronous mutual-best-merge clustering over the pixel
//! region-adjacency graph.
//!
//! Every valid pixel starts as its own region. Each round has three
//! barrier-separated phases: every region picks its best admissible
//! neighbor from the frozen pre-round state, mutual pairs are merged
//! (the merged region keeps the greater ID), and neighbor sets are
//! rewritten. Rounds repeat until no pair of adjacent regions passes
//! the merge criterion. The output is bit-identical for any worker
//! count, including one.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::frame::{back_project, Frame, Point3};
use crate::homogeneity::{
    homogeneity_distance, merge_allowed, phi_baseline, phi_unchecked, HomogeneityDescriptor, MergeParams,
};
use crate::{Error, Result};

/// Which fused measure fills the phi component of pixel descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Measure {
    /// arctan(d * sqrt(I)), depth-invariant under the inverse-square law.
    #[default]
    Fused,
    /// arctan(d / I) on per-frame max-normalized inputs (comparison mode).
    Baseline,
}

/// How merged regions combine their descriptor means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DescriptorWeighting {
    /// Pixel-count-weighted mean; merge results are independent of order.
    #[default]
    Area,
    /// Plain mean of the two region means (fidelity experiments).
    Unweighted,
}

/// Valid radial-distance window; pixels outside are ignored for clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipRange {
    pub r_min: f64,
    pub r_max: f64,
}

impl ClipRange {
    /// No clipping beyond the d > 0 validity sentinel.
    pub fn unbounded() -> Self {
        ClipRange { r_min: 0.0, r_max: f64::INFINITY }
    }

    pub fn bounded(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min < r_max) {
            return Err(Error::InvalidInput(format!("clip range requires r_min < r_max, got [{r_min}, {r_max}]")));
        }
        Ok(ClipRange { r_min, r_max })
    }

    pub fn is_unbounded(&self) -> bool {
        self.r_min <= 0.0 && self.r_max.is_infinite()
    }

    /// True for valid pixels: d > 0 and inside [r_min, r_max].
    #[inline]
    pub fn contains(&self, d: f64) -> bool {
        d > 0.0 && d >= self.r_min && d <= self.r_max
    }
}

/// Per-pixel descriptor sample shared by the engine and the round oracle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PixelSample {
    pub z: f64,
    pub d: f64,
    pub phi: f64,
    pub point: Point3,
}

/// Computes descriptors for every valid, unclipped pixel.
pub(crate) fn pixel_samples(frame: &Frame, clip: &ClipRange, measure: Measure) -> Vec<Option<PixelSample>> {
    let k = &frame.intrinsics;
    let (w, h) = (frame.width(), frame.height());
    // baseline mode normalizes by the per-frame max over valid pixels
    let (max_d, max_i) = if measure == Measure::Baseline {
        let mut md = 0.0f64;
        let mut mi = 0.0f64;
        for idx in 0..w * h {
            let d = frame.distance[idx];
            if clip.contains(d) {
                md = md.max(d);
                mi = mi.max(frame.intensity[idx].max(0.0));
            }
        }
        (md, mi)
    } else {
        (0.0, 0.0)
    };

    let mut samples = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let idx = v * w + u;
            let d = frame.distance[idx];
            if !clip.contains(d) {
                samples.push(None);
                continue;
            }
            let intensity = frame.intensity[idx].max(0.0);
            let point = back_project(u as f64, v as f64, d, k);
            let phi = match measure {
                Measure::Fused => phi_unchecked(d, intensity),
                Measure::Baseline => {
                    let dn = if max_d > 0.0 { d / max_d } else { 0.0 };
                    let inorm = if max_i > 0.0 { intensity / max_i } else { 0.0 };
                    phi_baseline(dn, inorm)
                }
            };
            samples.push(Some(PixelSample { z: point.z, d, phi, point }));
        }
    }
    samples
}

#[derive(Debug, Clone)]
struct RegionData {
    pixel_count: u32,
    mean_z: f64,
    mean_d: f64,
    mean_phi: f64,
    centroid: Point3,
    neighbors: Vec<u32>,
}

impl RegionData {
    #[inline]
    fn descriptor(&self) -> HomogeneityDescriptor {
        HomogeneityDescriptor { z: self.mean_z, phi: self.mean_phi }
    }
}

/// A surviving cluster of the converged segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: u32,
    pub pixel_count: u32,
    pub mean_z: f64,
    pub mean_d: f64,
    pub mean_phi: f64,
    pub centroid: Point3,
    pub neighbors: Vec<u32>,
}

impl Region {
    pub fn descriptor(&self) -> HomogeneityDescriptor {
        HomogeneityDescriptor { z: self.mean_z, phi: self.mean_phi }
    }
}

/// Label map plus the surviving region table.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub width: usize,
    pub height: usize,
    /// Region id per pixel; 0 = background/clipped.
    pub labels: Vec<u32>,
    /// Surviving regions, sorted by id.
    pub regions: Vec<Region>,
}

impl Segmentation {
    pub fn region(&self, id: u32) -> Option<&Region> {
        self.regions.binary_search_by_key(&id, |r| r.id).ok().map(|i| &self.regions[i])
    }

    /// Relabels region ids to 1..K in row-major first-pixel order.
    /// Used for cross-run comparison and PGM export only.
    pub fn canonical_labels(&self) -> Vec<u32> {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let mut next = 1u32;
        let mut out = Vec::with_capacity(self.labels.len());
        for &l in &self.labels {
            if l == 0 {
                out.push(0);
                continue;
            }
            let c = *map.entry(l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            });
            out.push(c);
        }
        out
    }

    /// Exhaustive convergence check: no 4-adjacent pair of distinct regions
    /// may still satisfy the merge criterion.
    pub fn converged(&self, p: &MergeParams) -> bool {
        let desc: HashMap<u32, HomogeneityDescriptor> =
            self.regions.iter().map(|r| (r.id, r.descriptor())).collect();
        let (w, h) = (self.width, self.height);
        for v in 0..h {
            for u in 0..w {
                let a = self.labels[v * w + u];
                if a == 0 {
                    continue;
                }
                for (nu, nv) in [(u + 1, v), (u, v + 1)] {
                    if nu >= w || nv >= h {
                        continue;
                    }
                    let b = self.labels[nv * w + nu];
                    if b != 0 && b != a && merge_allowed(&desc[&a], &desc[&b], p) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Writes the canonical label map as 16-bit PGM.
    pub fn write_pgm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let canon = self.canonical_labels();
        if self.regions.len() > u16::MAX as usize {
            return Err(Error::InvalidInput("more than 65535 regions cannot be exported as 16-bit PGM".into()));
        }
        let data: Vec<u16> = canon.iter().map(|&l| l as u16).collect();
        crate::pgm::write_pgm16(path, self.width, self.height, &data)
    }

    /// Writes the region table as CSV.
    pub fn write_region_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        writeln!(f, "id,pixel_count,mean_z,mean_d,mean_phi,centroid_x,centroid_y,centroid_z")?;
        for r in &self.regions {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{}",
                r.id, r.pixel_count, r.mean_z, r.mean_d, r.mean_phi, r.centroid.x, r.centroid.y, r.centroid.z
            )?;
        }
        Ok(())
    }
}

/// Per-phase wall-clock totals of one clustering run.
#[derive(Debug, Clone, Copy, Default)]
pub struct EngineStats {
    pub rounds: u32,
    pub find_mergepartner: Duration,
    pub merge_regions: Duration,
    pub update_values: Duration,
}

/// The mutable merging state: region table, live set and merge forest.
pub struct RegionGraph {
    width: usize,
    height: usize,
    params: MergeParams,
    weighting: DescriptorWeighting,
    /// Region records indexed by id; None = dead or never existed.
    slots: Vec<Option<RegionData>>,
    /// Live ids, ascending.
    live: Vec<u32>,
    /// Merge forest over ids; parent[id] == id for live roots, 0 for
    /// pixels that were never valid.
    parent: Vec<u32>,
}

impl RegionGraph {
    /// One region per valid unclipped pixel; id = row-major index + 1.
    pub fn init_regions(frame: &Frame, clip: &ClipRange, params: &MergeParams, measure: Measure, weighting: DescriptorWeighting) -> Self {
        let samples = pixel_samples(frame, clip, measure);
        Self::from_samples(frame.width(), frame.height(), &samples, params, weighting)
    }

    /// Builds the initial graph from explicit per-pixel samples.
    pub(crate) fn from_samples(
        width: usize,
        height: usize,
        samples: &[Option<PixelSample>],
        params: &MergeParams,
        weighting: DescriptorWeighting,
    ) -> Self {
        let n = width * height;
        let mut slots: Vec<Option<RegionData>> = Vec::with_capacity(n + 1);
        slots.push(None);
        let mut parent = vec![0u32; n + 1];
        let mut live = Vec::new();
        for idx in 0..n {
            let id = idx as u32 + 1;
            match &samples[idx] {
                Some(s) => {
                    let u = idx % width;
                    let v = idx / width;
                    let mut neighbors = Vec::with_capacity(4);
                    // ascending id order: up, left, right, down
                    if v > 0 && samples[idx - width].is_some() {
                        neighbors.push(id - width as u32);
                    }
                    if u > 0 && samples[idx - 1].is_some() {
                        neighbors.push(id - 1);
                    }
                    if u + 1 < width && samples[idx + 1].is_some() {
                        neighbors.push(id + 1);
                    }
                    if v + 1 < height && samples[idx + width].is_some() {
                        neighbors.push(id + width as u32);
                    }
                    slots.push(Some(RegionData {
                        pixel_count: 1,
                        mean_z: s.z,
                        mean_d: s.d,
                        mean_phi: s.phi,
                        centroid: s.point,
                        neighbors,
                    }));
                    parent[id as usize] = id;
                    live.push(id);
                }
                None => slots.push(None),
            }
        }
        RegionGraph { width, height, params: *params, weighting, slots, live, parent }
    }

    pub fn region_count(&self) -> usize {
        self.live.len()
    }

    /// Undirected adjacency count (each edge counted once).
    pub fn adjacency_count(&self) -> usize {
        self.live.iter().map(|&id| self.slots[id as usize].as_ref().unwrap().neighbors.len()).sum::<usize>() / 2
    }

    /// The optimal merge partner of `region_id`: among the neighbors
    /// passing the merge criterion, the one with minimal homogeneity
    /// distance, ties broken by larger id. None if no neighbor passes.
    /// Number of live regions.
    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn best_neighbor(&self, region_id: u32) -> Result<Option<u32>> {
        let valid = (region_id as usize) < self.slots.len() && self.slots[region_id as usize].is_some();
        if !valid {
            return Err(Error::UnknownRegion(region_id));
        }
        let b = self.best_of(region_id);
        Ok(if b == 0 { None } else { Some(b) })
    }

    #[inline]
    fn best_of(&self, id: u32) -> u32 {
        let r = self.slots[id as usize].as_ref().unwrap();
        let wr = r.descriptor();
        let mut best_id = 0u32;
        let mut best_f = f64::INFINITY;
        for &n in &r.neighbors {
            let s = self.slots[n as usize].as_ref().unwrap();
            let ws = s.descriptor();
            if merge_allowed(&wr, &ws, &self.params) {
                let f = homogeneity_distance(&wr, &ws, &self.params);
                if f < best_f || (f == best_f && n > best_id) {
                    best_f = f;
                    best_id = n;
                }
            }
        }
        best_id
    }

    /// Phase 1: best-neighbor selection over the frozen state.
    fn find_mergepartners(&self, workers: usize) -> Vec<u32> {
        let live = &self.live;
        let mut best = vec![0u32; live.len()];
        if workers <= 1 || live.len() < 128 {
            for (out, &id) in best.iter_mut().zip(live.iter()) {
                *out = self.best_of(id);
            }
        } else {
            let chunk = live.len().div_ceil(workers);
            std::thread::scope(|scope| {
                for (ids, out) in live.chunks(chunk).zip(best.chunks_mut(chunk)) {
                    scope.spawn(move || {
                        for (o, &id) in out.iter_mut().zip(ids.iter()) {
                            *o = self.best_of(id);
                        }
                    });
                }
            });
        }
        best
    }

    /// Phase 2: apply exactly the mutual pairs. Returns the pair count.
    fn apply_mutual_merges(&mut self, best: &[u32]) -> usize {
        let mut best_by_id = vec![0u32; self.slots.len()];
        for (i, &id) in self.live.iter().enumerate() {
            best_by_id[id as usize] = best[i];
        }
        let live = std::mem::take(&mut self.live);
        let mut merged = 0usize;
        for &a in &live {
            let b = best_by_id[a as usize];
            if b > a && best_by_id[b as usize] == a {
                self.merge_pair(a, b);
                merged += 1;
            }
        }
        self.live = live;
        merged
    }

    fn merge_pair(&mut self, a: u32, b: u32) {
        debug_assert!(a < b);
        let ra = self.slots[a as usize].take().unwrap();
        let rb = self.slots[b as usize].as_mut().unwrap();
        let n1 = ra.pixel_count as f64;
        let n2 = rb.pixel_count as f64;
        let n = n1 + n2;
        match self.weighting {
            DescriptorWeighting::Area => {
                rb.mean_z = (n1 * ra.mean_z + n2 * rb.mean_z) / n;
                rb.mean_d = (n1 * ra.mean_d + n2 * rb.mean_d) / n;
                rb.mean_phi = (n1 * ra.mean_phi + n2 * rb.mean_phi) / n;
            }
            DescriptorWeighting::Unweighted => {
                rb.mean_z = (ra.mean_z + rb.mean_z) / 2.0;
                rb.mean_d = (ra.mean_d + rb.mean_d) / 2.0;
                rb.mean_phi = (ra.mean_phi + rb.mean_phi) / 2.0;
            }
        }
        // the centroid is geometry, always area-weighted
        rb.centroid = Point3::new(
            (n1 * ra.centroid.x + n2 * rb.centroid.x) / n,
            (n1 * ra.centroid.y + n2 * rb.centroid.y) / n,
            (n1 * ra.centroid.z + n2 * rb.centroid.z) / n,
        );
        rb.pixel_count += ra.pixel_count;
        // stale ids in the combined list are rewritten in the update phase
        rb.neighbors.extend_from_slice(&ra.neighbors);
        self.parent[a as usize] = b;
    }

    /// Phase 3: drop dead regions from the live set and rewrite neighbor
    /// lists through this round's renames.
    fn update_values(&mut self, workers: usize) {
        let mut live = std::mem::take(&mut self.live);
        live.retain(|&id| self.slots[id as usize].is_some());
        self.live = live;

        let rebuilt = {
            let this = &*self;
            let live = &this.live;
            let rebuild = |id: u32| -> Option<Vec<u32>> {
                let r = this.slots[id as usize].as_ref().unwrap();
                let dirty = r.neighbors.iter().any(|&n| n == id || this.slots[n as usize].is_none());
                if !dirty {
                    return None;
                }
                let mut list: Vec<u32> = r
                    .neighbors
                    .iter()
                    .map(|&n| if this.slots[n as usize].is_some() { n } else { this.parent[n as usize] })
                    .filter(|&n| n != id)
                    .collect();
                list.sort_unstable();
                list.dedup();
                Some(list)
            };

            let mut rebuilt: Vec<Option<Vec<u32>>> = vec![None; live.len()];
            if workers <= 1 || live.len() < 128 {
                for (out, &id) in rebuilt.iter_mut().zip(live.iter()) {
                    *out = rebuild(id);
                }
            } else {
                let chunk = live.len().div_ceil(workers);
                let rebuild = &rebuild;
                std::thread::scope(|scope| {
                    for (ids, out) in live.chunks(chunk).zip(rebuilt.chunks_mut(chunk)) {
                        scope.spawn(move || {
                            for (o, &id) in out.iter_mut().zip(ids.iter()) {
                                *o = rebuild(id);
                            }
                        });
                    }
                });
            }
            rebuilt
        };
        for (i, list) in rebuilt.into_iter().enumerate() {
            if let Some(list) = list {
                self.slots[self.live[i] as usize].as_mut().unwrap().neighbors = list;
            }
        }
    }

    /// One full round; all selections read the frozen pre-round state.
    pub fn merge_round(&mut self, workers: usize) -> usize {
        let best = self.find_mergepartners(workers);
        let merged = self.apply_mutual_merges(&best);
        if merged > 0 {
            self.update_values(workers);
        }
        merged
    }

    fn merge_round_timed(&mut self, workers: usize, stats: &mut EngineStats) -> usize {
        let t0 = Instant::now();
        let best = self.find_mergepartners(workers);
        let t1 = Instant::now();
        let merged = self.apply_mutual_merges(&best);
        let t2 = Instant::now();
        if merged > 0 {
            self.update_values(workers);
        }
        let t3 = Instant::now();
        stats.find_mergepartner += t1 - t0;
        stats.merge_regions += t2 - t1;
        stats.update_values += t3 - t2;
        merged
    }

    /// Rounds until convergence. The cap equals the initial region count;
    /// exceeding it indicates an engine bug.
    pub fn run_to_convergence(&mut self, workers: usize) -> Result<EngineStats> {
        let cap = self.live.len().max(1) as u32;
        let mut stats = EngineStats::default();
        loop {
            let merged = self.merge_round_timed(workers, &mut stats);
            stats.rounds += 1;
            if merged == 0 {
                return Ok(stats);
            }
            if stats.rounds > cap {
                return Err(Error::RoundCapExceeded);
            }
        }
    }

    /// Resolves the merge forest into a label map and region table.
    pub fn to_segmentation(&self) -> Segmentation {
        let n = self.width * self.height;
        let mut labels = vec![0u32; n];
        for idx in 0..n {
            let mut id = self.parent[idx + 1];
            if id == 0 {
                continue;
            }
            while self.parent[id as usize] != id {
                id = self.parent[id as usize];
            }
            labels[idx] = id;
        }
        let regions = self
            .live
            .iter()
            .map(|&id| {
                let r = self.slots[id as usize].as_ref().unwrap();
                Region {
                    id,
                    pixel_count: r.pixel_count,
                    mean_z: r.mean_z,
                    mean_d: r.mean_d,
                    mean_phi: r.mean_phi,
                    centroid: r.centroid,
                    neighbors: r.neighbors.clone(),
                }
            })
            .collect();
        Segmentation { width: self.width, height: self.height, labels, regions }
    }
}

/// Clusters one frame to convergence.
pub fn cluster(
    frame: &Frame,
    clip: &ClipRange,
    params: &MergeParams,
    measure: Measure,
    weighting: DescriptorWeighting,
    workers: usize,
) -> Result<Segmentation> {
    cluster_with_stats(frame, clip, params, measure, weighting, workers).map(|(seg, _)| seg)
}

/// Clusters one frame and reports per-phase timings.
pub fn cluster_with_stats(
    frame: &Frame,
    clip: &ClipRange,
    params: &MergeParams,
    measure: Measure,
    weighting: DescriptorWeighting,
    workers: usize,
) -> Result<(Segmentation, EngineStats)> {
    params.validate()?;
    if workers == 0 {
        return Err(Error::InvalidInput("worker count must be at least 1".into()));
    }
    let mut graph = RegionGraph::init_regions(frame, clip, params, measure, weighting);
    let stats = graph.run_to_convergence(workers)?;
    Ok((graph.to_segmentation(), stats))
}
