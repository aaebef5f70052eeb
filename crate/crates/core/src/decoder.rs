//! Monotone dynamic-programming decode of a posteriorgram against a known
//! phone sequence, frame-to-time conversion and sub-frame boundary
//! interpolation.
//!
//! The cumulative table is stored with one padding row and column, so cell
//! `(i, t)` holds the cheapest way to cover frames `1..=t` with the first
//! `i` symbols, each symbol taking at least one frame and no frame skipped.

use ndarray::Array2;
use thiserror::Error;

use crate::features::FeatureConfig;
use crate::inventory::PhoneId;
use crate::posteriorgram::Posteriorgram;

/// Cap on `|ln p|`; roughly `|ln|` of the smallest positive double.
pub const DEFAULT_COST_CEILING: f64 = 745.0;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("target sequence is empty")]
    EmptyTargets,
    #[error("cannot align {symbols} symbols to {frames} frames; use a finer frame step or a shorter transcription")]
    Infeasible { symbols: usize, frames: usize },
    #[error(
        "target symbol {symbol} at position {position} is outside the {classes}-class cost matrix"
    )]
    TargetOutOfRange {
        position: usize,
        symbol: usize,
        classes: usize,
    },
    #[error("cost at class {class}, frame {frame} is not finite")]
    NonFiniteCost { class: usize, frame: usize },
    #[error("boundary index must be at least 1")]
    BoundaryIndex,
    #[error("path of {path} frames does not match a cost table over {frames} frames")]
    PathMismatch { path: usize, frames: usize },
}

/// Phone ids to align, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSequence(pub Vec<PhoneId>);

impl TargetSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[PhoneId] {
        &self.0
    }
}

impl From<Vec<usize>> for TargetSequence {
    fn from(v: Vec<usize>) -> Self {
        Self(v.into_iter().map(PhoneId).collect())
    }
}

/// Local frame costs `O[c, t] = min(|ln p[c, t]|, ceiling)`.
pub fn frame_costs(pg: &Posteriorgram, ceiling: f64) -> Array2<f64> {
    pg.probs().mapv(|p| p.ln().abs().min(ceiling))
}

/// For every frame, the position in the target sequence that covers it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPath(pub Vec<usize>);

impl AlignmentPath {
    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based index of the last frame of every symbol except the final one.
    pub fn transitions(&self) -> Vec<usize> {
        self.0
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] != w[0])
            .map(|(u, _)| u + 1)
            .collect()
    }

    /// Checks monotonicity and full coverage of `n` symbols.
    pub fn is_valid(&self, n: usize) -> bool {
        !self.0.is_empty()
            && self.0[0] == 0
            && *self.0.last().unwrap() + 1 == n
            && self.0.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1)
    }

    /// Sum of local costs along the path.
    pub fn cost(&self, local: &Array2<f64>, targets: &TargetSequence) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(t, &pos)| local[[targets.0[pos].0, t]])
            .sum()
    }
}

/// Local costs plus the padded cumulative table of one decode.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    /// `k x T`
    pub local: Array2<f64>,
    /// `(n + 1) x (T + 1)`, padded
    pub cumulative: Array2<f64>,
}

impl CostMatrix {
    pub fn num_frames(&self) -> usize {
        self.local.ncols()
    }

    /// Cost of the optimal path.
    pub fn total(&self) -> f64 {
        let (n, t) = self.cumulative.dim();
        self.cumulative[[n - 1, t - 1]]
    }
}

/// Find the cheapest monotone assignment of `targets` to the frames of
/// `local`. When staying on a symbol and advancing from the previous one
/// cost the same, backtracking stays.
pub fn decode(
    local: &Array2<f64>,
    targets: &TargetSequence,
) -> Result<(AlignmentPath, CostMatrix), DecodeError> {
    let (k, frames) = local.dim();
    let n = targets.len();
    if n == 0 {
        return Err(DecodeError::EmptyTargets);
    }
    if n > frames {
        return Err(DecodeError::Infeasible { symbols: n, frames });
    }
    for (position, id) in targets.0.iter().enumerate() {
        if id.0 >= k {
            return Err(DecodeError::TargetOutOfRange {
                position,
                symbol: id.0,
                classes: k,
            });
        }
    }
    if let Some(((class, frame), _)) = local.indexed_iter().find(|(_, c)| !c.is_finite()) {
        return Err(DecodeError::NonFiniteCost { class, frame });
    }

    let mut m = Array2::from_elem((n + 1, frames + 1), f64::INFINITY);
    m[[0, 0]] = 0.0;
    for i in 1..=n {
        let class = targets.0[i - 1].0;
        for t in 1..=frames {
            let best = m[[i - 1, t - 1]].min(m[[i, t - 1]]);
            m[[i, t]] = local[[class, t - 1]] + best;
        }
    }

    let mut path = vec![0; frames];
    let mut i = n;
    for t in (1..=frames).rev() {
        path[t - 1] = i - 1;
        if t == 1 {
            break;
        }
        // advance only when strictly cheaper than staying
        if m[[i - 1, t - 1]] < m[[i, t - 1]] {
            i -= 1;
        }
    }
    debug_assert_eq!(i, 1);

    Ok((
        AlignmentPath(path),
        CostMatrix {
            local: local.clone(),
            cumulative: m,
        },
    ))
}

/// Time of the boundary after 1-based frame `index`:
/// `(window - step) + step * index`, i.e. `0.015 + 0.01 * index` with the
/// default 25 ms / 10 ms framing.
pub fn boundary_time(index: usize, config: &FeatureConfig) -> Result<f64, DecodeError> {
    if index < 1 {
        return Err(DecodeError::BoundaryIndex);
    }
    Ok((config.window_length - config.frame_step) + config.frame_step * index as f64)
}

/// Intersect the two lines through the rows of `a` (x = 0 at the first
/// column, x = 1 at the second). Returns the crossing abscissa when it lies
/// in `[0, 1]`, `None` if it lies outside or the lines are parallel.
pub fn interpolate_crossing(a: [[f64; 2]; 2]) -> Option<f64> {
    let slope_prev = a[0][1] - a[0][0];
    let slope_next = a[1][1] - a[1][0];
    let denom = slope_prev - slope_next;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let chi = (a[1][0] - a[0][0]) / denom;
    (chi.is_finite() && (0.0..=1.0).contains(&chi)).then_some(chi)
}

/// Which matrix the interpolation lines are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterpolationSource {
    /// Cumulative decode table.
    #[default]
    Cumulative,
    /// Local per-frame costs.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefineOptions {
    pub interpolate: bool,
    pub source: InterpolationSource,
}

impl RefineOptions {
    pub fn interpolated() -> Self {
        Self {
            interpolate: true,
            source: InterpolationSource::Cumulative,
        }
    }
}

/// Boundary times of one decoded utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    /// Interior boundaries followed by the utterance end.
    pub times: Vec<f64>,
    /// Crossing offset used for each interior boundary, if any.
    pub offsets: Vec<Option<f64>>,
    /// Boundaries pulled back to the utterance end.
    pub clamped: usize,
}

impl BoundarySet {
    pub fn interior(&self) -> &[f64] {
        &self.times[..self.times.len() - 1]
    }
}

fn crossing_matrix(
    costs: &CostMatrix,
    path: &AlignmentPath,
    frame: usize,
    source: InterpolationSource,
    targets: Option<&TargetSequence>,
) -> Option<[[f64; 2]; 2]> {
    let prev = path.0[frame - 1];
    match source {
        InterpolationSource::Cumulative => {
            let m = &costs.cumulative;
            if frame + 1 >= m.ncols() {
                return None;
            }
            // padded rows prev + 1 and prev + 2, padded columns frame and frame + 1
            Some([
                [m[[prev + 1, frame]], m[[prev + 1, frame + 1]]],
                [m[[prev + 2, frame]], m[[prev + 2, frame + 1]]],
            ])
        }
        InterpolationSource::Local => {
            let targets = targets?;
            let o = &costs.local;
            if frame >= o.ncols() {
                return None;
            }
            let (a, b) = (targets.0[prev].0, targets.0[prev + 1].0);
            Some([
                [o[[a, frame - 1]], o[[a, frame]]],
                [o[[b, frame - 1]], o[[b, frame]]],
            ])
        }
    }
}

/// Turn a decoded path into boundary times, optionally shifted by the
/// crossing offset scaled by the frame step. `targets` is only needed for
/// [`InterpolationSource::Local`].
pub fn refine_boundaries(
    path: &AlignmentPath,
    costs: &CostMatrix,
    targets: Option<&TargetSequence>,
    config: &FeatureConfig,
    duration: f64,
    options: RefineOptions,
) -> Result<BoundarySet, DecodeError> {
    if path.len() != costs.num_frames() {
        return Err(DecodeError::PathMismatch {
            path: path.len(),
            frames: costs.num_frames(),
        });
    }
    let transitions = path.transitions();
    let bases = transitions
        .iter()
        .map(|&i| boundary_time(i, config))
        .collect::<Result<Vec<_>, _>>()?;

    let mut times = Vec::with_capacity(bases.len() + 1);
    let mut offsets = Vec::with_capacity(bases.len());
    let mut clamped = 0;
    for (j, (&frame, &base)) in transitions.iter().zip(&bases).enumerate() {
        let upper = bases.get(j + 1).copied().unwrap_or(duration);
        let chi = if options.interpolate {
            crossing_matrix(costs, path, frame, options.source, targets)
                .and_then(interpolate_crossing)
        } else {
            None
        };
        let mut time = base;
        let mut used = None;
        if let Some(chi) = chi {
            let shifted = base + config.frame_step * chi;
            if shifted < upper {
                time = shifted;
                used = Some(chi);
            }
        }
        if time > duration {
            log::warn!(
                "boundary at {time:.6} s lies past the utterance end {duration:.6} s; clamped"
            );
            time = duration;
            clamped += 1;
        }
        times.push(time);
        offsets.push(used);
    }
    times.push(duration);
    Ok(BoundarySet {
        times,
        offsets,
        clamped,
    })
}
