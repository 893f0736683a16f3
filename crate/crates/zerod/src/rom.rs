//! Reduced-order-model generation: converts centerline branch area profiles
//! plus junction connectivity into a lumped network.
//!
//! Branch discretization runs in one of two modes. The automatic mode scans
//! the area profile for relative minima (candidate narrowings), pairs each
//! with its nearest preceding relative maximum, and — when the area ratio is
//! large enough — splits the branch into proximal, stenosis, and distal
//! segments at the extrema flanking the minimum. The fixed mode places a
//! user-chosen number of segments with breakpoints selected by dynamic
//! programming to minimize the squared error of a continuous piecewise-linear
//! interpolant through the chosen sample points.

use crate::elements::{stenosis_coefficient, CoronaryParams, ElementError, FlowBcParams, PressureBcParams, ResistanceBcParams, VesselParams, WindkesselParams};
use crate::model::{
    ElementKind, FluidProperties, ModelError, NetworkBuilder, NetworkModel, TimeSeries,
};
use std::f64::consts::PI;
use thiserror::Error;

/// Default minimum proximal-to-stenosed area ratio for a narrowing to count
/// as a stenosis.
pub const DEFAULT_DETECTION_RATIO: f64 = 1.1;

/// Cross-sectional area along one branch, sampled over path length.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProfile {
    pub id: usize,
    /// (path length s in cm, area in cm²); s strictly increasing from 0.
    samples: Vec<(f64, f64)>,
}

impl BranchProfile {
    pub fn new(id: usize, samples: Vec<(f64, f64)>) -> Result<Self, RomError> {
        if samples.len() < 2 {
            return Err(RomError::InvalidProfile { branch: id, reason: "need at least two samples" });
        }
        if samples[0].0 != 0.0 {
            return Err(RomError::InvalidProfile { branch: id, reason: "path length must start at 0" });
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(RomError::InvalidProfile {
                branch: id,
                reason: "path lengths must be strictly increasing",
            });
        }
        if samples.iter().any(|&(s, a)| !s.is_finite() || !(a > 0.0) || !a.is_finite()) {
            return Err(RomError::InvalidProfile { branch: id, reason: "areas must be positive and finite" });
        }
        Ok(Self { id, samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.samples.last().unwrap().0
    }
}

/// Role of a segment within its branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentRole {
    Proximal,
    Stenosis,
    Distal,
    Plain,
}

/// One tile of a branch discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub s_start: f64,
    pub s_end: f64,
    pub area_start: f64,
    pub area_end: f64,
    pub role: SegmentRole,
    /// Proximal reference area S₀ for the expansion loss; equals
    /// `area_stenosis` outside stenosis segments.
    pub area_proximal: f64,
    /// Governing narrowed area S_s.
    pub area_stenosis: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.s_end - self.s_start
    }

    /// Effective radius: mean of the end radii.
    pub fn effective_radius(&self) -> f64 {
        0.5 * ((self.area_start / PI).sqrt() + (self.area_end / PI).sqrt())
    }

    /// Area of the circle with the effective radius.
    pub fn effective_area(&self) -> f64 {
        let r = self.effective_radius();
        PI * r * r
    }
}

/// Discretization of one branch into contiguous segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub branch: usize,
    pub segments: Vec<Segment>,
}

impl Segmentation {
    /// The stenosis segment, if the branch has one.
    pub fn stenosis(&self) -> Option<&Segment> {
        self.segments.iter().find(|s| s.role == SegmentRole::Stenosis)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RomError {
    #[error("branch {branch}: invalid profile: {reason}")]
    InvalidProfile { branch: usize, reason: &'static str },
    #[error("branch {branch}: {samples} samples cannot support {requested} segments (need at least {})", requested + 1)]
    TooFewSamples { branch: usize, samples: usize, requested: usize },
    #[error("non-positive segment geometry: {0}")]
    NonPositiveGeometry(String),
    #[error("wall stiffness must be positive")]
    InvalidWall,
    #[error("outlet branch {branch} has no boundary condition assignment")]
    MissingOutletBc { branch: usize },
    #[error("junction {junction} references unknown branch {branch}")]
    UnknownBranch { junction: usize, branch: usize },
    #[error("junction {junction} is invalid: {reason}")]
    InvalidJunction { junction: usize, reason: String },
    #[error("branch {branch} is not reachable from the inlet")]
    DisconnectedBranch { branch: usize },
    #[error("branch {branch} start is fed {count} times (expected exactly once)")]
    BranchStartConflict { branch: usize, count: usize },
    #[error("branch {branch} end is consumed {count} times (expected exactly once)")]
    BranchEndConflict { branch: usize, count: usize },
    #[error("unknown inlet branch {branch}")]
    UnknownInlet { branch: usize },
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Vessel wall description: the single stiffness scalar k₀ = Eh/r (dyn/cm²)
/// from which segment compliance is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallModel {
    pub stiffness: f64,
}

impl WallModel {
    pub fn new(stiffness: f64) -> Result<Self, RomError> {
        if !(stiffness > 0.0) || !stiffness.is_finite() {
            return Err(RomError::InvalidWall);
        }
        Ok(Self { stiffness })
    }
}

impl Default for WallModel {
    /// 100 kPa = 10⁶ dyn/cm².
    fn default() -> Self {
        Self { stiffness: 1e6 }
    }
}

/// Branch discretization mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentationMode {
    /// Detect at most one stenosis per branch and split around it.
    Automatic { min_ratio: f64 },
    /// Fixed number of segments with optimally placed breakpoints.
    Fixed { segments: usize },
}

impl Default for SegmentationMode {
    fn default() -> Self {
        SegmentationMode::Automatic { min_ratio: DEFAULT_DETECTION_RATIO }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Extremum {
    index: usize,
    is_max: bool,
}

/// Relative extrema of the sample values with plateaus collapsed to their
/// first index. Branch endpoints are eligible as maxima only.
fn relative_extrema(samples: &[(f64, f64)]) -> Vec<Extremum> {
    // Collapse runs of equal values.
    let mut collapsed: Vec<(usize, f64)> = Vec::with_capacity(samples.len());
    for (i, &(_, v)) in samples.iter().enumerate() {
        match collapsed.last() {
            Some(&(_, last)) if last == v => {}
            _ => collapsed.push((i, v)),
        }
    }
    let m = collapsed.len();
    let mut extrema = Vec::new();
    if m < 2 {
        return extrema;
    }
    if collapsed[0].1 > collapsed[1].1 {
        extrema.push(Extremum { index: collapsed[0].0, is_max: true });
    }
    for j in 1..m - 1 {
        let (prev, here, next) = (collapsed[j - 1].1, collapsed[j].1, collapsed[j + 1].1);
        if here > prev && here > next {
            extrema.push(Extremum { index: collapsed[j].0, is_max: true });
        } else if here < prev && here < next {
            extrema.push(Extremum { index: collapsed[j].0, is_max: false });
        }
    }
    if collapsed[m - 1].1 > collapsed[m - 2].1 {
        extrema.push(Extremum { index: collapsed[m - 1].0, is_max: true });
    }
    extrema
}

/// Candidate narrowing: minimum paired with its flanking maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StenosisCandidate {
    /// Sample index of the minimum.
    pub min_index: usize,
    /// Sample index of the nearest preceding relative maximum.
    pub proximal_index: usize,
    /// Sample index of the nearest following relative maximum.
    pub distal_index: usize,
    /// S₀ / S_s.
    pub ratio: f64,
}

/// All narrowing candidates of a profile, in order of appearance.
pub fn stenosis_candidates(profile: &BranchProfile) -> Vec<StenosisCandidate> {
    let samples = profile.samples();
    let extrema = relative_extrema(samples);
    let mut candidates = Vec::new();
    for (k, ext) in extrema.iter().enumerate() {
        if ext.is_max {
            continue;
        }
        let preceding = extrema[..k].iter().rev().find(|e| e.is_max);
        let following = extrema[k + 1..].iter().find(|e| e.is_max);
        if let (Some(p), Some(f)) = (preceding, following) {
            let s0 = samples[p.index].1;
            let ss = samples[ext.index].1;
            candidates.push(StenosisCandidate {
                min_index: ext.index,
                proximal_index: p.index,
                distal_index: f.index,
                ratio: s0 / ss,
            });
        }
    }
    candidates
}

/// Automatic mode: segments the branch around its most severe narrowing.
///
/// Degenerate profiles and branches whose worst ratio stays below
/// `min_ratio` come back as one plain segment. When the flanking extrema sit
/// on branch ends, the zero-length proximal or distal tile is omitted.
pub fn detect_stenosis(profile: &BranchProfile, min_ratio: f64) -> Segmentation {
    let samples = profile.samples();
    let best = stenosis_candidates(profile)
        .into_iter()
        .filter(|c| c.ratio >= min_ratio)
        .fold(None::<StenosisCandidate>, |best, c| match best {
            Some(b) if b.ratio >= c.ratio => Some(b),
            _ => Some(c),
        });

    let Some(found) = best else {
        return Segmentation { branch: profile.id, segments: vec![plain_segment(samples, 0, samples.len() - 1)] };
    };

    let last = samples.len() - 1;
    let (p, f) = (found.proximal_index, found.distal_index);
    let mut segments = Vec::with_capacity(3);
    if p > 0 {
        let mut seg = plain_segment(samples, 0, p);
        seg.role = SegmentRole::Proximal;
        segments.push(seg);
    }
    let s0 = samples[found.proximal_index].1;
    let ss = samples[found.min_index].1;
    segments.push(Segment {
        s_start: samples[p].0,
        s_end: samples[f].0,
        area_start: samples[p].1,
        area_end: samples[f].1,
        role: SegmentRole::Stenosis,
        area_proximal: s0,
        area_stenosis: ss,
    });
    if f < last {
        let mut seg = plain_segment(samples, f, last);
        seg.role = SegmentRole::Distal;
        segments.push(seg);
    }
    Segmentation { branch: profile.id, segments }
}

fn plain_segment(samples: &[(f64, f64)], a: usize, b: usize) -> Segment {
    let mean = 0.5 * (samples[a].1 + samples[b].1);
    Segment {
        s_start: samples[a].0,
        s_end: samples[b].0,
        area_start: samples[a].1,
        area_end: samples[b].1,
        role: SegmentRole::Plain,
        area_proximal: mean,
        area_stenosis: mean,
    }
}

/// Squared error of the chord through samples `a` and `b` against the
/// interior samples.
fn chord_sse(samples: &[(f64, f64)], a: usize, b: usize) -> f64 {
    let (sa, va) = samples[a];
    let (sb, vb) = samples[b];
    let mut sse = 0.0;
    for &(s, v) in &samples[a + 1..b] {
        let theta = (s - sa) / (sb - sa);
        let fit = va * (1.0 - theta) + vb * theta;
        let d = v - fit;
        sse += d * d;
    }
    sse
}

/// Optimal interior breakpoints (sample indices) for `n` segments and the
/// resulting squared error of the continuous piecewise-linear interpolant
/// through the chosen samples.
///
/// Dynamic programming over candidate breakpoints; among equal-error choices
/// the lexicographically earliest breakpoint set wins.
pub fn optimal_breakpoints(profile: &BranchProfile, n: usize) -> Result<(Vec<usize>, f64), RomError> {
    let samples = profile.samples();
    let m = samples.len();
    if n == 0 {
        return Err(RomError::TooFewSamples { branch: profile.id, samples: m, requested: 0 });
    }
    if m < n + 1 {
        return Err(RomError::TooFewSamples { branch: profile.id, samples: m, requested: n });
    }
    let last = m - 1;
    // best[k][p]: minimum error covering samples p.. with k segments, where
    // segment boundaries are samples and k ranges 1..=n.
    let mut best = vec![vec![f64::INFINITY; m]; n + 1];
    for p in 0..last {
        best[1][p] = chord_sse(samples, p, last);
    }
    for k in 2..=n {
        for p in 0..last {
            let mut acc = f64::INFINITY;
            for q in p + 1..=last - (k - 1) {
                let cost = chord_sse(samples, p, q) + best[k - 1][q];
                if cost < acc {
                    acc = cost;
                }
            }
            best[k][p] = acc;
        }
    }
    let total = best[n][0];

    // Greedy forward reconstruction keeps the lexicographically smallest
    // optimal breakpoint sequence; re-evaluating the same sums keeps the
    // float comparisons exact.
    let mut breakpoints = Vec::with_capacity(n - 1);
    let mut pos = 0usize;
    for k in (2..=n).rev() {
        for q in pos + 1..=last - (k - 1) {
            if chord_sse(samples, pos, q) + best[k - 1][q] == best[k][pos] {
                breakpoints.push(q);
                pos = q;
                break;
            }
        }
    }
    debug_assert_eq!(breakpoints.len(), n - 1);
    Ok((breakpoints, total))
}

/// Fixed mode: `n` segments with breakpoints from [`optimal_breakpoints`].
///
/// Segments narrower than their upstream neighbour (by effective area) carry
/// a stenosis role with the neighbour as the proximal reference, so expansion
/// losses appear wherever the fitted area steps down; the Poiseuille limit is
/// the lower bound elsewhere.
pub fn fit_segments(profile: &BranchProfile, n: usize) -> Result<Segmentation, RomError> {
    let (breakpoints, _) = optimal_breakpoints(profile, n)?;
    let samples = profile.samples();
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0);
    bounds.extend_from_slice(&breakpoints);
    bounds.push(samples.len() - 1);

    let mut segments: Vec<Segment> = Vec::with_capacity(n);
    for w in bounds.windows(2) {
        segments.push(plain_segment(samples, w[0], w[1]));
    }
    for i in 1..segments.len() {
        let upstream = segments[i - 1].effective_area();
        let own = segments[i].effective_area();
        if upstream > own {
            segments[i].role = SegmentRole::Stenosis;
            segments[i].area_proximal = upstream;
            segments[i].area_stenosis = own;
        }
    }
    Ok(Segmentation { branch: profile.id, segments })
}

/// Lumped parameters of one segment: Poiseuille resistance `8μl/(πr⁴)`,
/// compliance `3lπr²/(2k₀)`, inertance `ρl/(πr²)`, and the expansion loss
/// coefficient for stenosis segments. A stenosed area above the proximal
/// reference (sampling noise) clamps the loss to the Poiseuille lower bound.
pub fn vessel_parameters(
    segment: &Segment,
    fluid: &FluidProperties,
    wall: &WallModel,
) -> Result<VesselParams, RomError> {
    let length = segment.length();
    if !(length > 0.0) || !(segment.area_start > 0.0) || !(segment.area_end > 0.0) {
        return Err(RomError::NonPositiveGeometry(format!(
            "segment [{}, {}] with end areas {} and {}",
            segment.s_start, segment.s_end, segment.area_start, segment.area_end
        )));
    }
    if !(wall.stiffness > 0.0) {
        return Err(RomError::InvalidWall);
    }
    let r = segment.effective_radius();
    let r2 = r * r;
    let resistance = 8.0 * fluid.viscosity * length / (PI * r2 * r2);
    let inductance = fluid.density * length / (PI * r2);
    let capacitance = 3.0 * length * PI * r2 / (2.0 * wall.stiffness);
    let ks = if segment.role == SegmentRole::Stenosis && segment.area_stenosis <= segment.area_proximal
    {
        stenosis_coefficient(segment.area_proximal, segment.area_stenosis, fluid.density)?
    } else {
        0.0
    };
    Ok(VesselParams {
        resistance,
        capacitance,
        inductance,
        stenosis_coefficient: ks,
    })
}

/// Connectivity of one tree junction: which branch ends flow in, which
/// branch starts flow out.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeJunction {
    pub id: usize,
    pub inlet_branches: Vec<usize>,
    pub outlet_branches: Vec<usize>,
}

/// Outlet boundary condition assignment for one terminal branch.
#[derive(Debug, Clone, PartialEq)]
pub enum OutletBc {
    Pressure(PressureBcParams),
    Resistance(ResistanceBcParams),
    Windkessel(WindkesselParams),
    Coronary(CoronaryParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutletAssignment {
    pub branch: usize,
    pub name: Option<String>,
    pub bc: OutletBc,
}

/// Branch area profiles plus junction connectivity and boundary-condition
/// assignments: the geometric input to network generation.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterlineTree {
    pub branches: Vec<BranchProfile>,
    pub junctions: Vec<TreeJunction>,
    pub inlet_branch: usize,
    pub inflow: TimeSeries,
    pub outlets: Vec<OutletAssignment>,
}

struct BranchIndex {
    position: Vec<usize>,
}

impl BranchIndex {
    fn new(tree: &CenterlineTree) -> Self {
        let max_id = tree.branches.iter().map(|b| b.id).max().unwrap_or(0);
        let mut position = vec![usize::MAX; max_id + 1];
        for (i, b) in tree.branches.iter().enumerate() {
            position[b.id] = i;
        }
        Self { position }
    }

    fn get(&self, id: usize) -> Option<usize> {
        self.position.get(id).copied().filter(|&p| p != usize::MAX)
    }
}

/// Converts a centerline tree into a validated [`NetworkModel`], running one
/// segmentation per branch and chaining one vessel element per segment.
pub fn build_network(
    tree: &CenterlineTree,
    fluid: FluidProperties,
    wall: WallModel,
    mode: SegmentationMode,
) -> Result<NetworkModel, RomError> {
    let index = BranchIndex::new(tree);
    validate_tree(tree, &index)?;

    let segmentations: Vec<Segmentation> = tree
        .branches
        .iter()
        .map(|profile| match mode {
            SegmentationMode::Automatic { min_ratio } => Ok(detect_stenosis(profile, min_ratio)),
            SegmentationMode::Fixed { segments } => fit_segments(profile, segments),
        })
        .collect::<Result<_, _>>()?;

    let mut builder = NetworkBuilder::new(fluid);

    // Boundary-condition elements first, then vessels, then junctions; this
    // matches the model-file layout so writing and re-reading reproduces the
    // model exactly.
    let inflow_elem = builder.add_element(
        "INFLOW",
        ElementKind::FlowBc(FlowBcParams { flow: tree.inflow.clone() }),
    );
    builder.designate_inlet(inflow_elem);
    let mut outlet_elem_by_branch: Vec<Option<usize>> = vec![None; tree.branches.len()];
    for outlet in &tree.outlets {
        let pos = index.get(outlet.branch).expect("validated");
        let label = outlet.name.clone().unwrap_or_else(|| format!("OUT_{}", outlet.branch));
        let kind = match &outlet.bc {
            OutletBc::Pressure(p) => ElementKind::PressureBc(*p),
            OutletBc::Resistance(p) => ElementKind::ResistanceBc(*p),
            OutletBc::Windkessel(p) => ElementKind::WindkesselBc(*p),
            OutletBc::Coronary(p) => ElementKind::CoronaryBc(p.clone()),
        };
        outlet_elem_by_branch[pos] = Some(builder.add_element(label, kind));
    }

    // Vessel chains; remember each branch's first and last vessel element.
    let mut branch_ends: Vec<(usize, usize)> = Vec::with_capacity(tree.branches.len());
    for (profile, segmentation) in tree.branches.iter().zip(&segmentations) {
        let mut first = None;
        let mut previous: Option<usize> = None;
        for (k, segment) in segmentation.segments.iter().enumerate() {
            let params = vessel_parameters(segment, &fluid, &wall)?;
            let v = builder.add_element(
                format!("branch{}_seg{}", profile.id, k),
                ElementKind::Vessel(params),
            );
            if let Some(prev) = previous {
                builder.connect(prev, 0, v, 0);
            }
            first.get_or_insert(v);
            previous = Some(v);
        }
        branch_ends.push((first.unwrap(), previous.unwrap()));
    }

    // Junction elements and their connections.
    for junction in &tree.junctions {
        let j = builder.add_element(format!("J{}", junction.id), ElementKind::Junction);
        for (slot, branch) in junction.inlet_branches.iter().enumerate() {
            let pos = index.get(*branch).expect("validated");
            builder.connect(branch_ends[pos].1, 0, j, slot);
        }
        for (slot, branch) in junction.outlet_branches.iter().enumerate() {
            let pos = index.get(*branch).expect("validated");
            builder.connect(j, slot, branch_ends[pos].0, 0);
        }
    }

    // Caps.
    let inlet_pos = index.get(tree.inlet_branch).expect("validated");
    builder.connect(inflow_elem, 0, branch_ends[inlet_pos].0, 0);
    for (pos, bc) in outlet_elem_by_branch.iter().enumerate() {
        if let Some(bc) = bc {
            builder.connect(branch_ends[pos].1, 0, *bc, 0);
        }
    }

    let network = builder.build();
    let diagnostics = network.validate();
    if !diagnostics.is_empty() {
        let msg = diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Err(RomError::Model(ModelError::Invalid(msg)));
    }
    Ok(network)
}

fn validate_tree(tree: &CenterlineTree, index: &BranchIndex) -> Result<(), RomError> {
    let n = tree.branches.len();
    if index.get(tree.inlet_branch).is_none() {
        return Err(RomError::UnknownInlet { branch: tree.inlet_branch });
    }
    let mut start_feeds = vec![0usize; n];
    let mut end_consumers = vec![0usize; n];
    start_feeds[index.get(tree.inlet_branch).unwrap()] += 1;
    for junction in &tree.junctions {
        if junction.inlet_branches.is_empty() || junction.outlet_branches.is_empty() {
            return Err(RomError::InvalidJunction {
                junction: junction.id,
                reason: "needs at least one inlet and one outlet branch".into(),
            });
        }
        if junction.inlet_branches.len() + junction.outlet_branches.len() < 3 {
            return Err(RomError::InvalidJunction {
                junction: junction.id,
                reason: "needs at least three attached branches".into(),
            });
        }
        for &b in &junction.inlet_branches {
            let pos = index.get(b).ok_or(RomError::UnknownBranch { junction: junction.id, branch: b })?;
            end_consumers[pos] += 1;
        }
        for &b in &junction.outlet_branches {
            let pos = index.get(b).ok_or(RomError::UnknownBranch { junction: junction.id, branch: b })?;
            start_feeds[pos] += 1;
        }
    }
    for outlet in &tree.outlets {
        let pos = index
            .get(outlet.branch)
            .ok_or(RomError::UnknownBranch { junction: usize::MAX, branch: outlet.branch })?;
        end_consumers[pos] += 1;
    }
    for (pos, branch) in tree.branches.iter().enumerate() {
        if start_feeds[pos] != 1 {
            return Err(RomError::BranchStartConflict { branch: branch.id, count: start_feeds[pos] });
        }
        if end_consumers[pos] == 0 {
            return Err(RomError::MissingOutletBc { branch: branch.id });
        }
        if end_consumers[pos] > 1 {
            return Err(RomError::BranchEndConflict { branch: branch.id, count: end_consumers[pos] });
        }
    }

    // Reachability from the inlet through junctions.
    let mut reached = vec![false; n];
    let mut stack = vec![index.get(tree.inlet_branch).unwrap()];
    reached[stack[0]] = true;
    while let Some(pos) = stack.pop() {
        let id = tree.branches[pos].id;
        for junction in &tree.junctions {
            if junction.inlet_branches.contains(&id) {
                for &b in &junction.outlet_branches {
                    let p = index.get(b).unwrap();
                    if !reached[p] {
                        reached[p] = true;
                        stack.push(p);
                    }
                }
            }
        }
    }
    for (pos, r) in reached.iter().enumerate() {
        if !r {
            return Err(RomError::DisconnectedBranch { branch: tree.branches[pos].id });
        }
    }
    Ok(())
}
