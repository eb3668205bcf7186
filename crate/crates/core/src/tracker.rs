//! Two-hand detection and frame-to-frame tracking over segmentation
//! streams: initialization, range clipping, nearest-neighbor assignment,
//! and the mutual-occlusion protocol with reacquisition.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::cluster::{cluster, ClipRange, DescriptorWeighting, Measure, Region, Segmentation};
use crate::frame::{Frame, Point3};
use crate::homogeneity::MergeParams;
use crate::{Error, Result};

/// Occlusion-window length: how many frames after D was last true the
/// missing-hand check stays armed.
const D_WINDOW: u32 = 5;
/// Consecutive lost-both frames before falling back to initialization.
const LOST_FALLBACK: u32 = 30;
/// Lower clamp for r_min so the invalid-pixel sentinel 0 never lies
/// inside the valid range.
const CLIP_EPS: f64 = 1e-3;

/// Tracking parameters; defaults follow the reference parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    /// Minimum cluster size for hand candidates, pixels.
    pub size_min: u32,
    /// Maximal center distance for hand association/reacquisition, meters.
    pub t_d: f64,
    /// Homogeneity-measure gate for hand candidates, radians.
    pub t_phi_track: f64,
    /// Clip-range margin, meters.
    pub r_th: f64,
    /// Critical XY distance for the occlusion predicate, meters.
    pub d_min: f64,
    /// Length of the initialization phase, frames.
    pub init_frames: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams { size_min: 200, t_d: 0.1, t_phi_track: 0.009, r_th: 0.1, d_min: 0.1, init_frames: 30 }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        if self.size_min == 0
            || self.t_d <= 0.0
            || self.t_phi_track <= 0.0
            || self.r_th <= 0.0
            || self.d_min <= 0.0
            || self.init_frames == 0
        {
            return Err(Error::InvalidInput("tracker parameters must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Last resolved record of one tracked hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandState {
    /// Region id in the current frame's segmentation (logging only; ids
    /// are not stable across frames).
    pub id: u32,
    pub phi: f64,
    pub pos: Point3,
    pub mean_d: f64,
    pub visible: bool,
}

impl HandState {
    fn from_region(r: &Region) -> Self {
        HandState { id: r.id, phi: r.mean_phi, pos: r.centroid, mean_d: r.mean_d, visible: true }
    }

    fn empty() -> Self {
        HandState { id: 0, phi: 0.0, pos: Point3::default(), mean_d: 0.0, visible: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Initializing { frames_done: u32 },
    Tracking,
    Occluded,
}

impl Phase {
    pub fn tag(&self) -> &'static str {
        match self {
            Phase::Initializing { .. } => "initializing",
            Phase::Tracking => "tracking",
            Phase::Occluded => "occluded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackEventKind {
    InitProgress,
    Assigned,
    OcclusionEntered,
    Reacquired,
    HandLostSearch,
    InitFailed,
}

impl TrackEventKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TrackEventKind::InitProgress => "init_progress",
            TrackEventKind::Assigned => "assigned",
            TrackEventKind::OcclusionEntered => "occlusion_entered",
            TrackEventKind::Reacquired => "reacquired",
            TrackEventKind::HandLostSearch => "hand_lost_search",
            TrackEventKind::InitFailed => "init_failed",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        Some(match s {
            "init_progress" => TrackEventKind::InitProgress,
            "assigned" => TrackEventKind::Assigned,
            "occlusion_entered" => TrackEventKind::OcclusionEntered,
            "reacquired" => TrackEventKind::Reacquired,
            "hand_lost_search" => TrackEventKind::HandLostSearch,
            "init_failed" => TrackEventKind::InitFailed,
            _ => return None,
        })
    }
}

/// One per-frame log record: post-step phase, event, hand snapshots, clip.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub frame_index: u32,
    pub phase: String,
    pub kind: TrackEventKind,
    pub hands: [HandState; 2],
    pub clip: ClipRange,
}

/// Append-only per-frame event log; the auditable tracker output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackLog {
    pub records: Vec<TrackRecord>,
}

impl TrackLog {
    pub fn init_succeeded(&self) -> bool {
        self.records.iter().any(|r| r.phase != "initializing")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        for r in &self.records {
            let h = |hs: &HandState| {
                format!(
                    "vis={} id={} phi={} x={} y={} z={} d={}",
                    hs.visible as u8, hs.id, hs.phi, hs.pos.x, hs.pos.y, hs.pos.z, hs.mean_d
                )
            };
            writeln!(
                w,
                "frame={} phase={} event={} h1.{} h2.{} rmin={} rmax={}",
                r.frame_index,
                r.phase,
                r.kind.tag(),
                h(&r.hands[0]).replace(' ', " h1."),
                h(&r.hands[1]).replace(' ', " h2."),
                r.clip.r_min,
                r.clip.r_max
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrackLog> {
        let r = BufReader::new(File::open(path.as_ref())?);
        let mut records = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_record(&line).map_err(|msg| Error::Format {
                offset: lineno as u64,
                msg: format!("track log line {}: {msg}", lineno + 1),
            })?);
        }
        Ok(TrackLog { records })
    }
}

fn parse_record(line: &str) -> std::result::Result<TrackRecord, String> {
    let mut frame = None;
    let mut phase = None;
    let mut kind = None;
    let mut hands = [HandState::empty(), HandState::empty()];
    let mut clip = (0.0f64, f64::INFINITY);
    for tok in line.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| format!("bad token {tok:?}"))?;
        let fval = || val.parse::<f64>().map_err(|_| format!("bad number in {tok:?}"));
        match key {
            "frame" => frame = Some(val.parse::<u32>().map_err(|_| "bad frame index".to_string())?),
            "phase" => phase = Some(val.to_string()),
            "event" => kind = Some(TrackEventKind::from_tag(val).ok_or_else(|| format!("unknown event {val:?}"))?),
            "rmin" => clip.0 = fval()?,
            "rmax" => clip.1 = fval()?,
            _ => {
                let (hand, field) = key.split_once('.').ok_or_else(|| format!("unknown key {key:?}"))?;
                let h = match hand {
                    "h1" => &mut hands[0],
                    "h2" => &mut hands[1],
                    _ => return Err(format!("unknown key {key:?}")),
                };
                match field {
                    "vis" => h.visible = val == "1",
                    "id" => h.id = val.parse().map_err(|_| "bad id".to_string())?,
                    "phi" => h.phi = fval()?,
                    "x" => h.pos.x = fval()?,
                    "y" => h.pos.y = fval()?,
                    "z" => h.pos.z = fval()?,
                    "d" => h.mean_d = fval()?,
                    _ => return Err(format!("unknown hand field {field:?}")),
                }
            }
        }
    }
    Ok(TrackRecord {
        frame_index: frame.ok_or("missing frame")?,
        phase: phase.ok_or("missing phase")?,
        kind: kind.ok_or("missing event")?,
        hands,
        clip: ClipRange { r_min: clip.0, r_max: clip.1 },
    })
}

/// Clip range from the two hand distances: [min - r_th, max + r_th],
/// with the lower bound clamped away from the invalid-pixel sentinel.
pub fn compute_clip(d1: f64, d2: f64, r_th: f64) -> ClipRange {
    let r_min = (d1.min(d2) - r_th).max(CLIP_EPS);
    let r_max = d1.max(d2) + r_th;
    ClipRange { r_min, r_max }
}

/// Critical-area predicate D: XY centroid distance strictly below d_min.
pub fn occlusion_check(pos1: &Point3, pos2: &Point3, d_min: f64) -> bool {
    pos1.xy_distance(pos2) < d_min
}

/// A hand counts as missing if no sufficiently large cluster matches it
/// by phi, or the best match's center is farther than t_d from the
/// hand's last position.
pub fn missing_hand_check(hand: &HandState, seg: &Segmentation, p: &TrackerParams, exclude: Option<u32>) -> bool {
    let best = seg
        .regions
        .iter()
        .filter(|r| r.pixel_count >= p.size_min && Some(r.id) != exclude)
        .filter(|r| (r.mean_phi - hand.phi).abs() <= p.t_phi_track)
        .map(|r| r.centroid.distance(&hand.pos))
        .fold(f64::INFINITY, f64::min);
    best > p.t_d
}

/// Searches the covered hand among the clusters of the current frame.
///
/// A candidate must sit behind the front hand center, lie within t_d of
/// it, and match the stored backhand measure within t_phi; the candidate
/// with minimal phi deviation wins. `behind_literal` flips the depth
/// criterion to the literal z-ordering variant.
pub fn reacquire(
    front: &HandState,
    backhand: &HandState,
    seg: &Segmentation,
    p: &TrackerParams,
    behind_literal: bool,
) -> Option<HandState> {
    let mut best: Option<(f64, &Region)> = None;
    for r in &seg.regions {
        if r.pixel_count < p.size_min || r.id == front.id {
            continue;
        }
        let behind = if behind_literal { r.centroid.z < front.pos.z } else { r.centroid.z > front.pos.z };
        if !behind {
            continue;
        }
        if r.centroid.distance(&front.pos) >= p.t_d {
            continue;
        }
        let dev = (r.mean_phi - backhand.phi).abs();
        if dev >= p.t_phi_track {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, br)) => dev < bd || (dev == bd && r.id > br.id),
        };
        if better {
            best = Some((dev, r));
        }
    }
    best.map(|(_, r)| HandState::from_region(r))
}

/// The whole tracker memory: phase, two hand records, stored backhand,
/// current clip range.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub phase: Phase,
    pub hands: [HandState; 2],
    /// Index and last record of the covered hand while occluded.
    pub backhand: Option<(usize, HandState)>,
    pub clip: ClipRange,
    /// Frames since the occlusion predicate D was last true.
    d_recent: u32,
    lost_streak: u32,
}

impl TrackerState {
    fn new() -> Self {
        TrackerState {
            phase: Phase::Initializing { frames_done: 0 },
            hands: [HandState::empty(), HandState::empty()],
            backhand: None,
            clip: ClipRange::unbounded(),
            d_recent: u32::MAX,
            lost_streak: 0,
        }
    }
}

/// Sequential two-hand tracker consuming one segmentation per frame.
pub struct Tracker {
    params: TrackerParams,
    behind_literal: bool,
    state: TrackerState,
}

impl Tracker {
    pub fn new(params: TrackerParams, behind_literal: bool) -> Result<Self> {
        params.validate()?;
        Ok(Tracker { params, behind_literal, state: TrackerState::new() })
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    /// Clip range to apply to the next frame (unbounded while initializing).
    pub fn clip(&self) -> ClipRange {
        match self.state.phase {
            Phase::Initializing { .. } => ClipRange::unbounded(),
            _ => self.state.clip,
        }
    }

    pub fn step(&mut self, seg: &Segmentation, frame_index: u32) -> TrackRecord {
        let kind = match self.state.phase {
            Phase::Initializing { frames_done } => self.init_step(seg, frames_done),
            Phase::Tracking => self.track_step(seg),
            Phase::Occluded => self.occluded_step(seg),
        };
        TrackRecord {
            frame_index,
            phase: self.state.phase.tag().to_string(),
            kind,
            hands: self.state.hands,
            clip: self.clip(),
        }
    }

    fn qualifying<'a>(&self, seg: &'a Segmentation) -> Vec<&'a Region> {
        seg.regions.iter().filter(|r| r.pixel_count >= self.params.size_min).collect()
    }

    fn init_step(&mut self, seg: &Segmentation, frames_done: u32) -> TrackEventKind {
        let mut qual = self.qualifying(seg);
        if qual.len() < 2 {
            self.state = TrackerState::new();
            return TrackEventKind::InitFailed;
        }
        // the two qualifying clusters closest to the camera
        qual.sort_by(|a, b| a.mean_z.partial_cmp(&b.mean_z).unwrap().then(a.id.cmp(&b.id)));
        let (ca, cb) = (qual[0], qual[1]);

        if frames_done == 0 {
            self.state.hands = [HandState::from_region(ca), HandState::from_region(cb)];
        } else {
            // nearest-neighbor re-association against the previous frame
            let straight = ca.centroid.distance(&self.state.hands[0].pos) + cb.centroid.distance(&self.state.hands[1].pos);
            let crossed = ca.centroid.distance(&self.state.hands[1].pos) + cb.centroid.distance(&self.state.hands[0].pos);
            if straight <= crossed {
                self.state.hands = [HandState::from_region(ca), HandState::from_region(cb)];
            } else {
                self.state.hands = [HandState::from_region(cb), HandState::from_region(ca)];
            }
        }

        let done = frames_done + 1;
        if done >= self.params.init_frames {
            self.state.phase = Phase::Tracking;
            self.state.clip = compute_clip(self.state.hands[0].mean_d, self.state.hands[1].mean_d, self.params.r_th);
            self.update_d_recent();
        } else {
            self.state.phase = Phase::Initializing { frames_done: done };
        }
        TrackEventKind::InitProgress
    }

    fn update_d_recent(&mut self) {
        let d = occlusion_check(&self.state.hands[0].pos, &self.state.hands[1].pos, self.params.d_min);
        self.state.d_recent = if d { 0 } else { self.state.d_recent.saturating_add(1) };
    }

    /// Candidates matching one hand by phi, nearest first by centroid.
    fn hand_candidates<'a>(&self, hand: &HandState, regions: &[&'a Region]) -> Vec<(&'a Region, f64)> {
        let mut v: Vec<(&Region, f64)> = regions
            .iter()
            .filter(|r| (r.mean_phi - hand.phi).abs() <= self.params.t_phi_track)
            .map(|r| (*r, r.centroid.distance(&hand.pos)))
            .collect();
        v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.id.cmp(&a.0.id)));
        v
    }

    fn track_step(&mut self, seg: &Segmentation) -> TrackEventKind {
        let qual = self.qualifying(seg);
        let cand1 = self.hand_candidates(&self.state.hands[0], &qual);
        let cand2 = self.hand_candidates(&self.state.hands[1], &qual);

        // optimal 2-assignment: minimal total centroid distance over
        // distinct candidate pairs, residual ties to larger region ids
        let mut best: Option<(f64, u32, u32, &Region, &Region)> = None;
        for &(c1, d1) in &cand1 {
            for &(c2, d2) in &cand2 {
                if c1.id == c2.id {
                    continue;
                }
                let total = d1 + d2;
                let better = match &best {
                    None => true,
                    Some((bt, b1, b2, ..)) => {
                        total < *bt || (total == *bt && (c1.id, c2.id) > (*b1, *b2))
                    }
                };
                if better {
                    best = Some((total, c1.id, c2.id, c1, c2));
                }
            }
        }

        if let Some((_, _, _, c1, c2)) = best {
            self.state.hands = [HandState::from_region(c1), HandState::from_region(c2)];
            self.state.clip = compute_clip(c1.mean_d, c2.mean_d, self.params.r_th);
            self.state.lost_streak = 0;
            self.update_d_recent();
            return TrackEventKind::Assigned;
        }

        // at most one hand can be assigned
        let pick1 = cand1.first().copied();
        let pick2 = cand2.first().copied();
        let front_slot = match (pick1, pick2) {
            (Some((_, d1)), Some((_, d2))) => {
                if d1 <= d2 {
                    0
                } else {
                    1
                }
            }
            (Some(_), None) => 0,
            (None, Some(_)) => 1,
            (None, None) => return self.lost_frame(),
        };
        let front_region = if front_slot == 0 { pick1.unwrap().0 } else { pick2.unwrap().0 };
        let missing_slot = 1 - front_slot;
        let missing_prev = self.state.hands[missing_slot];

        let armed = self.state.d_recent <= D_WINDOW;
        let d_entry = occlusion_check(&front_region.centroid, &missing_prev.pos, self.params.d_min);
        let d_last_frame = self.state.d_recent == 0;
        let missing = missing_hand_check(&missing_prev, seg, &self.params, Some(front_region.id));

        if armed && (d_entry || d_last_frame) && missing {
            self.state.hands[front_slot] = HandState::from_region(front_region);
            self.state.hands[missing_slot].visible = false;
            self.state.backhand = Some((missing_slot, missing_prev));
            self.state.clip = compute_clip(front_region.mean_d, front_region.mean_d, self.params.r_th);
            self.state.phase = Phase::Occluded;
            self.state.lost_streak = 0;
            TrackEventKind::OcclusionEntered
        } else {
            self.lost_frame()
        }
    }

    fn occluded_step(&mut self, seg: &Segmentation) -> TrackEventKind {
        let (missing_slot, back) = self.state.backhand.clone().unwrap();
        let front_slot = 1 - missing_slot;
        let qual = self.qualifying(seg);

        let front_cands = self.hand_candidates(&self.state.hands[front_slot], &qual);
        let Some(&(front_region, _)) = front_cands.first() else {
            return self.lost_frame();
        };
        self.state.hands[front_slot] = HandState::from_region(front_region);
        self.state.clip = compute_clip(front_region.mean_d, front_region.mean_d, self.params.r_th);
        self.state.lost_streak = 0;

        if let Some(h) = reacquire(&self.state.hands[front_slot], &back, seg, &self.params, self.behind_literal) {
            self.state.hands[missing_slot] = h;
            self.state.backhand = None;
            self.state.phase = Phase::Tracking;
            self.state.clip = compute_clip(self.state.hands[0].mean_d, self.state.hands[1].mean_d, self.params.r_th);
            self.update_d_recent();
            TrackEventKind::Reacquired
        } else {
            TrackEventKind::Assigned
        }
    }

    fn lost_frame(&mut self) -> TrackEventKind {
        self.state.lost_streak += 1;
        if self.state.lost_streak >= LOST_FALLBACK {
            self.state = TrackerState::new();
        }
        TrackEventKind::HandLostSearch
    }
}

/// Clustering + tracking options for a full pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub measure: Measure,
    pub weighting: DescriptorWeighting,
    pub workers: usize,
    pub behind_literal: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            measure: Measure::Fused,
            weighting: DescriptorWeighting::Area,
            workers: 1,
            behind_literal: false,
        }
    }
}

/// Clusters and tracks a whole sequence, one event record per frame.
pub fn run(
    frames: &[Frame],
    merge_params: &MergeParams,
    tracker_params: &TrackerParams,
    opts: &RunOptions,
) -> Result<TrackLog> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("cannot track an empty sequence".into()));
    }
    let mut tracker = Tracker::new(*tracker_params, opts.behind_literal)?;
    let mut log = TrackLog::default();
    for frame in frames {
        let clip = tracker.clip();
        let seg = cluster(frame, &clip, merge_params, opts.measure, opts.weighting, opts.workers)?;
        log.records.push(tracker.step(&seg, frame.frame_index));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(id: u32, n: u32, z: f64, phi: f64, x: f64, y: f64) -> Region {
        Region {
            id,
            pixel_count: n,
            mean_z: z,
            mean_d: z,
            mean_phi: phi,
            centroid: Point3::new(x, y, z),
            neighbors: vec![],
        }
    }

    fn seg_of(regions: Vec<Region>) -> Segmentation {
        let mut regions = regions;
        regions.sort_by_key(|r| r.id);
        Segmentation { width: 1, height: 1, labels: vec![0], regions }
    }

    #[test]
    fn clip_formulas() {
        let c = compute_clip(0.8, 1.0, 0.1);
        assert!((c.r_min - 0.7).abs() < 1e-12 && (c.r_max - 1.1).abs() < 1e-12);
        let c = compute_clip(1.0, 1.0, 0.1);
        assert!((c.r_min - 0.9).abs() < 1e-12 && (c.r_max - 1.1).abs() < 1e-12);
        // lower bound clamps above the invalid-pixel sentinel
        let c = compute_clip(0.05, 1.0, 0.1);
        assert!(c.r_min > 0.0 && (c.r_max - 1.1).abs() < 1e-12);
    }

    #[test]
    fn occlusion_predicate() {
        let o = Point3::new(0.0, 0.0, 1.0);
        assert!(occlusion_check(&o, &Point3::new(0.05, 0.0, 1.2), 0.1));
        assert!(!occlusion_check(&o, &Point3::new(0.2, 0.0, 1.2), 0.1));
        // strict inequality on the boundary
        assert!(!occlusion_check(&o, &Point3::new(0.1, 0.0, 1.2), 0.1));
    }

    #[test]
    fn missing_hand_rules() {
        let p = TrackerParams::default();
        let hand = HandState { id: 1, phi: 0.8, pos: Point3::new(0.0, 0.0, 1.0), mean_d: 1.0, visible: true };
        // matching candidate nearby -> present
        let s = seg_of(vec![region(2, 500, 1.0, 0.805, 0.05, 0.0)]);
        assert!(!missing_hand_check(&hand, &s, &p, None));
        // no phi-matching candidate -> missing
        let s = seg_of(vec![region(2, 500, 1.0, 0.9, 0.05, 0.0)]);
        assert!(missing_hand_check(&hand, &s, &p, None));
        // matching candidate too far -> missing
        let s = seg_of(vec![region(2, 500, 1.0, 0.805, 0.25, 0.0)]);
        assert!(missing_hand_check(&hand, &s, &p, None));
    }

    #[test]
    fn reacquire_criteria_and_argmin() {
        let p = TrackerParams::default();
        let front = HandState { id: 9, phi: 0.8, pos: Point3::new(0.0, 0.0, 0.9), mean_d: 0.9, visible: true };
        let back = HandState { id: 3, phi: 0.8, pos: Point3::new(0.1, 0.0, 0.95), mean_d: 0.95, visible: false };
        // candidate in front of the front hand is rejected
        let s = seg_of(vec![region(4, 500, 0.85, 0.8, 0.02, 0.0)]);
        assert!(reacquire(&front, &back, &s, &p, false).is_none());
        // two qualifying candidates: minimal phi deviation wins
        let s = seg_of(vec![
            region(4, 500, 0.95, 0.8 + 0.007, 0.03, 0.0),
            region(5, 500, 0.95, 0.8 + 0.004, 0.04, 0.0),
        ]);
        let got = reacquire(&front, &back, &s, &p, false).unwrap();
        assert_eq!(got.id, 5);
        // too far from the front hand center is rejected
        let s = seg_of(vec![region(4, 500, 0.95, 0.8, 0.3, 0.0)]);
        assert!(reacquire(&front, &back, &s, &p, false).is_none());
        // literal variant flips the depth criterion
        let s = seg_of(vec![region(4, 500, 0.85, 0.8, 0.02, 0.0)]);
        assert!(reacquire(&front, &back, &s, &p, true).is_some());
    }

    #[test]
    fn init_picks_two_closest() {
        let mut t = Tracker::new(TrackerParams::default(), false).unwrap();
        let s = seg_of(vec![
            region(1, 500, 1.6, 0.8, 0.3, 0.0),
            region(2, 500, 0.9, 0.8, -0.1, 0.0),
            region(3, 500, 1.1, 0.8, 0.1, 0.0),
        ]);
        let rec = t.step(&s, 0);
        assert_eq!(rec.kind, TrackEventKind::InitProgress);
        assert!((t.state().hands[0].pos.z - 0.9).abs() < 1e-12);
        assert!((t.state().hands[1].pos.z - 1.1).abs() < 1e-12);
    }

    #[test]
    fn init_fails_with_one_cluster() {
        let mut t = Tracker::new(TrackerParams::default(), false).unwrap();
        let s2 = seg_of(vec![region(1, 500, 0.9, 0.8, 0.0, 0.0), region(2, 500, 1.1, 0.8, 0.2, 0.0)]);
        for i in 0..5 {
            t.step(&s2, i);
        }
        let s1 = seg_of(vec![region(1, 500, 0.9, 0.8, 0.0, 0.0)]);
        let rec = t.step(&s1, 5);
        assert_eq!(rec.kind, TrackEventKind::InitFailed);
        assert_eq!(t.state().phase, Phase::Initializing { frames_done: 0 });
    }

    #[test]
    fn static_assignment_keeps_ids() {
        let mut t = Tracker::new(TrackerParams { init_frames: 2, ..TrackerParams::default() }, false).unwrap();
        let s = seg_of(vec![region(5, 500, 0.9, 0.8, -0.1, 0.0), region(7, 500, 1.1, 0.8, 0.1, 0.0)]);
        t.step(&s, 0);
        t.step(&s, 1);
        assert_eq!(t.state().phase, Phase::Tracking);
        let rec = t.step(&s, 2);
        assert_eq!(rec.kind, TrackEventKind::Assigned);
        assert_eq!(t.state().hands[0].id, 5);
        assert_eq!(t.state().hands[1].id, 7);
    }

    #[test]
    fn log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.txt");
        let log = TrackLog {
            records: vec![TrackRecord {
                frame_index: 3,
                phase: "tracking".into(),
                kind: TrackEventKind::Assigned,
                hands: [
                    HandState { id: 4, phi: 0.81, pos: Point3::new(0.1, -0.2, 0.9), mean_d: 0.91, visible: true },
                    HandState { id: 6, phi: 0.79, pos: Point3::new(-0.1, 0.2, 1.1), mean_d: 1.12, visible: true },
                ],
                clip: ClipRange { r_min: 0.81, r_max: 1.22 },
            }],
        };
        log.save(&path).unwrap();
        assert_eq!(TrackLog::load(&path).unwrap(), log);
    }
}
