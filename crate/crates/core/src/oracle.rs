//! Single-threaded round-simulation oracle for the merge engine.
//!
//! Deliberately simple: each round rebuilds the adjacency from the label
//! map, picks best partners from the frozen pre-round stats, and applies
//! the mutual pairs by rewriting the label map. The output must equal the
//! engine's exactly, for any engine worker count.

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::{pixel_samples, ClipRange, DescriptorWeighting, Measure, Region, Segmentation};
use crate::frame::{Frame, Point3};
use crate::homogeneity::{homogeneity_distance, merge_allowed, HomogeneityDescriptor, MergeParams};
use crate::{Error, Result};

#[derive(Clone)]
struct Stats {
    count: u32,
    z: f64,
    d: f64,
    phi: f64,
    centroid: Point3,
    pixels: Vec<usize>,
}

impl Stats {
    fn descriptor(&self) -> HomogeneityDescriptor {
        HomogeneityDescriptor { z: self.z, phi: self.phi }
    }
}

pub fn cluster_oracle(
    frame: &Frame,
    clip: &ClipRange,
    params: &MergeParams,
    measure: Measure,
    weighting: DescriptorWeighting,
) -> Result<Segmentation> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let samples = pixel_samples(frame, clip, measure);

    let mut labels = vec![0u32; w * h];
    let mut stats: BTreeMap<u32, Stats> = BTreeMap::new();
    let mut occupied = Vec::new();
    for (idx, s) in samples.iter().enumerate() {
        if let Some(s) = s {
            let id = idx as u32 + 1;
            labels[idx] = id;
            occupied.push(idx);
            stats.insert(id, Stats { count: 1, z: s.z, d: s.d, phi: s.phi, centroid: s.point, pixels: vec![idx] });
        }
    }

    let cap = stats.len().max(1);
    for _round in 0..=cap {
        let adjacency = build_adjacency(&labels, &occupied, w, h);

        // frozen-state best partner per region
        let mut best: BTreeMap<u32, u32> = BTreeMap::new();
        for (&id, neighbors) in &adjacency {
            let wr = stats[&id].descriptor();
            let mut best_id = 0u32;
            let mut best_f = f64::INFINITY;
            for &n in neighbors {
                let ws = stats[&n].descriptor();
                if merge_allowed(&wr, &ws, params) {
                    let f = homogeneity_distance(&wr, &ws, params);
                    if f < best_f || (f == best_f && n > best_id) {
                        best_f = f;
                        best_id = n;
                    }
                }
            }
            if best_id != 0 {
                best.insert(id, best_id);
            }
        }

        let pairs: Vec<(u32, u32)> = best
            .iter()
            .filter(|&(&a, &b)| a < b && best.get(&b) == Some(&a))
            .map(|(&a, &b)| (a, b))
            .collect();
        if pairs.is_empty() {
            let regions = collect_regions(&stats, &adjacency);
            return Ok(Segmentation { width: w, height: h, labels, regions });
        }

        for (a, b) in pairs {
            let sa = stats.remove(&a).unwrap();
            let sb = stats.get_mut(&b).unwrap();
            let n1 = sa.count as f64;
            let n2 = sb.count as f64;
            let n = n1 + n2;
            match weighting {
                DescriptorWeighting::Area => {
                    sb.z = (n1 * sa.z + n2 * sb.z) / n;
                    sb.d = (n1 * sa.d + n2 * sb.d) / n;
                    sb.phi = (n1 * sa.phi + n2 * sb.phi) / n;
                }
                DescriptorWeighting::Unweighted => {
                    sb.z = (sa.z + sb.z) / 2.0;
                    sb.d = (sa.d + sb.d) / 2.0;
                    sb.phi = (sa.phi + sb.phi) / 2.0;
                }
            }
            sb.centroid = Point3::new(
                (n1 * sa.centroid.x + n2 * sb.centroid.x) / n,
                (n1 * sa.centroid.y + n2 * sb.centroid.y) / n,
                (n1 * sa.centroid.z + n2 * sb.centroid.z) / n,
            );
            sb.count += sa.count;
            for &idx in &sa.pixels {
                labels[idx] = b;
            }
            sb.pixels.extend(sa.pixels);
        }
    }
    Err(Error::RoundCapExceeded)
}

fn build_adjacency(labels: &[u32], occupied: &[usize], w: usize, h: usize) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut adjacency: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for &idx in occupied {
        let (u, v) = (idx % w, idx / w);
        let a = labels[idx];
        adjacency.entry(a).or_default();
        for (nu, nv) in [(u + 1, v), (u, v + 1)] {
            if nu >= w || nv >= h {
                continue;
            }
            let b = labels[nv * w + nu];
            if b != 0 && b != a {
                adjacency.entry(a).or_default().insert(b);
                adjacency.entry(b).or_default().insert(a);
            }
        }
    }
    adjacency
}

fn collect_regions(stats: &BTreeMap<u32, Stats>, adjacency: &BTreeMap<u32, BTreeSet<u32>>) -> Vec<Region> {
    stats
        .iter()
        .map(|(&id, s)| Region {
            id,
            pixel_count: s.count,
            mean_z: s.z,
            mean_d: s.d,
            mean_phi: s.phi,
            centroid: s.centroid,
            neighbors: adjacency.get(&id).map(|ns| ns.iter().copied().collect()).unwrap_or_default(),
        })
        .collect()
}
