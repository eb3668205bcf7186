//! Segmentation and tracking quality metrics, plus the benchmark harness
//! with the per-phase runtime breakdown.

use std::fmt;
use std::time::Instant;

use crate::cluster::{cluster, cluster_with_stats, ClipRange, DescriptorWeighting, Measure, Segmentation};
use crate::frame::Frame;
use crate::homogeneity::MergeParams;
use crate::synth::GroundTruthFrame;
use crate::tracker::{TrackEventKind, TrackLog};
use crate::{Error, Result};

/// Best-overlap score of one ground-truth object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectIou {
    pub identity: u16,
    /// Best-overlapping region id, 0 when no region overlaps.
    pub region_id: u32,
    pub iou: f64,
}

/// Per-frame segmentation quality against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SegScore {
    pub objects: Vec<ObjectIou>,
    /// Regions at or above the size threshold.
    pub cluster_count: usize,
}

impl SegScore {
    pub fn object(&self, identity: u16) -> Option<&ObjectIou> {
        self.objects.iter().find(|o| o.identity == identity)
    }
}

impl fmt::Display for SegScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cluster_count={}", self.cluster_count)?;
        for o in &self.objects {
            writeln!(f, "object={} region={} iou={:.6}", o.identity, o.region_id, o.iou)?;
        }
        Ok(())
    }
}

/// Best-overlap IoU per ground-truth identity.
pub fn segmentation_iou(seg: &Segmentation, gt: &GroundTruthFrame, size_min: u32) -> Result<SegScore> {
    if seg.labels.len() != gt.labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "segmentation has {} pixels, ground truth has {}",
            seg.labels.len(),
            gt.labels.len()
        )));
    }

    use std::collections::HashMap;
    let mut overlap: HashMap<(u16, u32), u64> = HashMap::new();
    let mut gt_size: HashMap<u16, u64> = HashMap::new();
    let mut region_size: HashMap<u32, u64> = HashMap::new();
    for (&g, &r) in gt.labels.iter().zip(&seg.labels) {
        if g != 0 {
            *gt_size.entry(g).or_default() += 1;
        }
        if r != 0 {
            *region_size.entry(r).or_default() += 1;
        }
        if g != 0 && r != 0 {
            *overlap.entry((g, r)).or_default() += 1;
        }
    }

    let objects = gt
        .objects
        .iter()
        .map(|o| {
            let g_size = gt_size.get(&o.identity).copied().unwrap_or(0);
            let mut best = ObjectIou { identity: o.identity, region_id: 0, iou: 0.0 };
            for (&(g, r), &inter) in &overlap {
                if g != o.identity {
                    continue;
                }
                let union = g_size + region_size[&r] - inter;
                let iou = inter as f64 / union as f64;
                if iou > best.iou || (iou == best.iou && r > best.region_id) {
                    best = ObjectIou { identity: o.identity, region_id: r, iou };
                }
            }
            best
        })
        .collect();

    let cluster_count = seg.regions.iter().filter(|r| r.pixel_count >= size_min).count();
    Ok(SegScore { objects, cluster_count })
}

/// Sequence-level tracking quality against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackScore {
    /// Frames where a tracked hand sits nearer to the other ground-truth hand.
    pub id_swaps: u32,
    /// Frames spent occluded or searching while ground truth shows both
    /// hands at or above the size threshold.
    pub lost_frames: u32,
    /// Frames from ground-truth reappearance of the hidden hand to the
    /// reacquisition event; None when no occlusion happened or the hand
    /// was never reacquired.
    pub reacquire_latency: Option<u32>,
    pub init_success: bool,
}

impl fmt::Display for TrackScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "id_swaps={}", self.id_swaps)?;
        writeln!(f, "lost_frames={}", self.lost_frames)?;
        match self.reacquire_latency {
            Some(l) => writeln!(f, "reacquire_latency={l}")?,
            None => writeln!(f, "reacquire_latency=none")?,
        }
        writeln!(f, "init_success={}", self.init_success as u32)
    }
}

/// Scores a track log against per-frame ground truth; the two tracked
/// hand slots correspond to ground-truth identities 1 and 2.
pub fn tracking_metrics(log: &TrackLog, gt: &[GroundTruthFrame], size_min: u32) -> Result<TrackScore> {
    if log.records.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!(
            "log has {} records, ground truth has {} frames",
            log.records.len(),
            gt.len()
        )));
    }

    let mut id_swaps = 0u32;
    let mut lost_frames = 0u32;
    let mut occlusion: Option<(usize, usize)> = None; // (entry frame, missing slot)
    let mut reacquire_latency = None;
    // slot -> ground-truth identity, fixed at the first tracked frame
    // (which tracker slot is "hand 1" is a naming convention, not an error)
    let mut mapping: Option<[u16; 2]> = None;

    for (i, rec) in log.records.iter().enumerate() {
        let g = &gt[i];
        let gt_hand = |identity: u16| g.object(identity).filter(|o| o.pixel_count > 0);
        let both_visible = [1u16, 2].iter().all(|&id| g.object(id).is_some_and(|o| o.pixel_count >= size_min));

        if rec.phase != "initializing" {
            if mapping.is_none() && rec.hands.iter().all(|h| h.visible) {
                if let (Some(g1), Some(g2)) = (gt_hand(1), gt_hand(2)) {
                    let straight = rec.hands[0].pos.distance(&g1.centroid) + rec.hands[1].pos.distance(&g2.centroid);
                    let crossed = rec.hands[0].pos.distance(&g2.centroid) + rec.hands[1].pos.distance(&g1.centroid);
                    mapping = Some(if straight <= crossed { [1, 2] } else { [2, 1] });
                }
            }
            let map = mapping.unwrap_or([1, 2]);
            let mut swapped = false;
            for slot in 0..2 {
                let h = &rec.hands[slot];
                if !h.visible {
                    continue;
                }
                let (own, other) = (gt_hand(map[slot]), gt_hand(map[1 - slot]));
                if let (Some(own), Some(other)) = (own, other) {
                    if h.pos.distance(&other.centroid) < h.pos.distance(&own.centroid) {
                        swapped = true;
                    }
                }
            }
            if swapped {
                id_swaps += 1;
            }
        }

        let searching = rec.phase == "occluded" || rec.kind == TrackEventKind::HandLostSearch;
        if searching && both_visible {
            lost_frames += 1;
        }

        if rec.kind == TrackEventKind::OcclusionEntered && occlusion.is_none() {
            let missing = rec.hands.iter().position(|h| !h.visible).unwrap_or(1);
            occlusion = Some((i, missing));
        }
        if rec.kind == TrackEventKind::Reacquired && reacquire_latency.is_none() {
            if let Some((entry, missing)) = occlusion {
                let identity = mapping.unwrap_or([1, 2])[missing];
                let reappear = (entry..=i)
                    .find(|&f| gt[f].object(identity).is_some_and(|o| o.pixel_count >= size_min))
                    .unwrap_or(i);
                reacquire_latency = Some((i - reappear) as u32);
            }
        }
    }

    Ok(TrackScore { id_swaps, lost_frames, reacquire_latency, init_success: log.init_succeeded() })
}

/// Wall-clock phase breakdown of one clustering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub workers: usize,
    pub rounds: usize,
    pub find_mergepartner_ms: f64,
    pub merge_regions_ms: f64,
    pub update_values_ms: f64,
    pub tracking_ms: f64,
    pub total_ms: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "workers={}", self.workers)?;
        writeln!(f, "rounds={}", self.rounds)?;
        writeln!(f, "find_mergepartner_ms={:.3}", self.find_mergepartner_ms)?;
        writeln!(f, "merge_regions_ms={:.3}", self.merge_regions_ms)?;
        writeln!(f, "update_values_ms={:.3}", self.update_values_ms)?;
        writeln!(f, "tracking_ms={:.3}", self.tracking_ms)?;
        writeln!(f, "total_ms={:.3}", self.total_ms)
    }
}

/// Clusters the frame once per worker count and reports per-phase wall
/// time. Errors out instead of reporting if any worker count produces a
/// different partition than single-worker.
pub fn bench(
    frame: &Frame,
    clip: &ClipRange,
    params: &MergeParams,
    measure: Measure,
    weighting: DescriptorWeighting,
    worker_counts: &[usize],
    tracker_params: Option<&crate::tracker::TrackerParams>,
) -> Result<Vec<BenchReport>> {
    if worker_counts.is_empty() {
        return Err(Error::InvalidInput("no worker counts given".into()));
    }
    let reference = cluster(frame, clip, params, measure, weighting, worker_counts[0])?;
    let mut reports = Vec::with_capacity(worker_counts.len());
    for &workers in worker_counts {
        let start = Instant::now();
        let (seg, stats) = cluster_with_stats(frame, clip, params, measure, weighting, workers)?;
        if seg.canonical_labels() != reference.canonical_labels() {
            return Err(Error::InvalidInput(format!(
                "worker count {workers} produced a different partition than {}",
                worker_counts[0]
            )));
        }
        let track_start = Instant::now();
        let tracking_ms = match tracker_params {
            Some(tp) => {
                let mut tracker = crate::tracker::Tracker::new(*tp, false)?;
                tracker.step(&seg, frame.frame_index);
                track_start.elapsed().as_secs_f64() * 1e3
            }
            None => 0.0,
        };
        reports.push(BenchReport {
            workers,
            rounds: stats.rounds as usize,
            find_mergepartner_ms: stats.find_mergepartner.as_secs_f64() * 1e3,
            merge_regions_ms: stats.merge_regions.as_secs_f64() * 1e3,
            update_values_ms: stats.update_values.as_secs_f64() * 1e3,
            tracking_ms,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Region;
    use crate::frame::Point3;
    use crate::synth::GtObject;
    use crate::tracker::{HandState, TrackRecord};

    fn gt_frame(labels: Vec<u16>, objects: Vec<(u16, u32, Point3)>) -> GroundTruthFrame {
        GroundTruthFrame {
            labels,
            objects: objects
                .into_iter()
                .map(|(identity, pixel_count, centroid)| GtObject {
                    identity,
                    pixel_count,
                    centroid,
                    mean_d: centroid.z,
                })
                .collect(),
        }
    }

    fn seg_from_labels(width: usize, height: usize, labels: Vec<u32>) -> Segmentation {
        use std::collections::BTreeMap;
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for &l in &labels {
            if l != 0 {
                *counts.entry(l).or_default() += 1;
            }
        }
        let regions = counts
            .into_iter()
            .map(|(id, pixel_count)| Region {
                id,
                pixel_count,
                mean_z: 0.0,
                mean_d: 0.0,
                mean_phi: 0.0,
                centroid: Point3::new(0.0, 0.0, 0.0),
                neighbors: Vec::new(),
            })
            .collect();
        Segmentation { width, height, labels, regions }
    }

    #[test]
    fn perfect_seg_scores_one() {
        let gt = gt_frame(vec![0, 1, 1, 2], vec![(1, 2, Point3::new(0.0, 0.0, 1.0)), (2, 1, Point3::new(0.0, 0.0, 1.0))]);
        let seg = seg_from_labels(2, 2, vec![0, 7, 7, 9]);
        let score = segmentation_iou(&seg, &gt, 1).unwrap();
        assert_eq!(score.object(1).unwrap().iou, 1.0);
        assert_eq!(score.object(2).unwrap().iou, 1.0);
        assert_eq!(score.cluster_count, 2);
    }

    #[test]
    fn one_region_over_everything() {
        // 8 pixels: objects 1 and 2 cover 2 px each, background 4 px
        let gt = gt_frame(
            vec![1, 1, 2, 2, 0, 0, 0, 0],
            vec![(1, 2, Point3::new(0.0, 0.0, 1.0)), (2, 2, Point3::new(0.0, 0.0, 1.0))],
        );
        let seg = seg_from_labels(4, 2, vec![3; 8]);
        let score = segmentation_iou(&seg, &gt, 1).unwrap();
        // inter 2, union 2 + 8 - 2 = 8
        assert_eq!(score.object(1).unwrap().iou, 0.25);
        assert_eq!(score.object(2).unwrap().iou, 0.25);
    }

    #[test]
    fn empty_seg_scores_zero() {
        let gt = gt_frame(vec![1, 1, 0, 0], vec![(1, 2, Point3::new(0.0, 0.0, 1.0))]);
        let seg = seg_from_labels(2, 2, vec![0; 4]);
        let score = segmentation_iou(&seg, &gt, 1).unwrap();
        assert_eq!(score.object(1).unwrap().iou, 0.0);
        assert_eq!(score.object(1).unwrap().region_id, 0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let gt = gt_frame(vec![0; 4], vec![]);
        let seg = seg_from_labels(3, 1, vec![0; 3]);
        assert!(segmentation_iou(&seg, &gt, 1).is_err());
    }

    fn record(frame_index: u32, phase: &str, kind: TrackEventKind, p1: Point3, p2: Point3) -> TrackRecord {
        let hand = |id, pos: Point3| HandState { id, phi: 0.8, pos, mean_d: pos.z, visible: true };
        TrackRecord {
            frame_index,
            phase: phase.to_string(),
            kind,
            hands: [hand(1, p1), hand(2, p2)],
            clip: ClipRange::unbounded(),
        }
    }

    fn static_gt(n: usize) -> Vec<GroundTruthFrame> {
        (0..n)
            .map(|_| {
                gt_frame(
                    Vec::new(),
                    vec![(1, 500, Point3::new(-0.2, 0.0, 0.9)), (2, 500, Point3::new(0.2, 0.0, 0.9))],
                )
            })
            .collect()
    }

    #[test]
    fn perfect_static_log_all_zeros() {
        let gt = static_gt(3);
        let log = TrackLog {
            records: (0..3)
                .map(|i| record(i, "tracking", TrackEventKind::Assigned, Point3::new(-0.2, 0.0, 0.9), Point3::new(0.2, 0.0, 0.9)))
                .collect(),
        };
        let score = tracking_metrics(&log, &gt, 200).unwrap();
        assert_eq!(score.id_swaps, 0);
        assert_eq!(score.lost_frames, 0);
        assert_eq!(score.reacquire_latency, None);
        assert!(score.init_success);
    }

    #[test]
    fn exchanged_hands_count_as_swaps() {
        let gt = static_gt(5);
        let mut records = Vec::new();
        for i in 0..5u32 {
            // hands exchanged from frame 2 on
            let (p1, p2) = if i < 2 {
                (Point3::new(-0.2, 0.0, 0.9), Point3::new(0.2, 0.0, 0.9))
            } else {
                (Point3::new(0.2, 0.0, 0.9), Point3::new(-0.2, 0.0, 0.9))
            };
            records.push(record(i, "tracking", TrackEventKind::Assigned, p1, p2));
        }
        let score = tracking_metrics(&TrackLog { records }, &gt, 200).unwrap();
        assert_eq!(score.id_swaps, 3);
    }

    #[test]
    fn latency_counts_from_gt_reappearance() {
        let mut gt = static_gt(8);
        // hand 2 hidden over frames 2..=4
        for f in 2..=4 {
            gt[f].objects[1].pixel_count = 0;
        }
        let p1 = Point3::new(-0.2, 0.0, 0.9);
        let p2 = Point3::new(0.2, 0.0, 0.9);
        let mut records: Vec<TrackRecord> = (0..8).map(|i| record(i, "tracking", TrackEventKind::Assigned, p1, p2)).collect();
        records[2] = record(2, "occluded", TrackEventKind::OcclusionEntered, p1, p2);
        records[2].hands[1].visible = false;
        for f in 3..=6 {
            records[f] = record(f as u32, "occluded", TrackEventKind::Assigned, p1, p2);
            records[f].hands[1].visible = false;
        }
        records[7] = record(7, "tracking", TrackEventKind::Reacquired, p1, p2);
        let score = tracking_metrics(&TrackLog { records }, &gt, 200).unwrap();
        // gt reappears at frame 5, reacquired at 7
        assert_eq!(score.reacquire_latency, Some(2));
        // frames 5 and 6: occluded while both hands visible
        assert_eq!(score.lost_frames, 2);
    }

    #[test]
    fn frame_count_mismatch_rejected() {
        let gt = static_gt(2);
        let log = TrackLog { records: Vec::new() };
        assert!(tracking_metrics(&log, &gt, 200).is_err());
    }
}
