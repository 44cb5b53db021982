//! Orthogonal twins and entwined loops.
//!
//! A path with an odd number of corners splits into leg pairs
//! `(l1,l2)(l3,l4)…`. Its orthogonal twin swaps the legs of every pair, so
//! both paths reach the same site at the end of each pair and meet there.
//! Paths with an even corner count are first extended by a mirror copy of
//! their last leg.
//!
//! The entwined loop climbs the first pair of the original, the second pair
//! of the twin, the third of the original and so on up to the last meeting,
//! then walks back down through the sections it skipped. Every climbing move
//! carries Feynman colour blue and every descending move red.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{corner_count, run_lengths, Direction, Leg, Path, Site};

/// Which member of a twin pair a move belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    /// The (extended) original path.
    A,
    /// Its orthogonal twin.
    B,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::A, Channel::B];

    pub fn label(self) -> &'static str {
        match self {
            Channel::A => "A",
            Channel::B => "B",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Direction of travel in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeDir {
    Forward,
    Backward,
}

impl TimeDir {
    #[inline]
    pub fn sign(self) -> i64 {
        match self {
            TimeDir::Forward => 1,
            TimeDir::Backward => -1,
        }
    }
}

/// One unit move of an entwined loop. `space` is the direction actually
/// travelled in `x`, so a backward move over a `+` bond has `space = Minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub space: Direction,
    pub time: TimeDir,
    pub channel: Channel,
}

impl Move {
    /// Direction of the underlying bond when read forward in time.
    #[inline]
    pub fn bond_dir(self) -> Direction {
        match self.time {
            TimeDir::Forward => self.space,
            TimeDir::Backward => self.space.flip(),
        }
    }
}

/// A traversed move together with its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub mv: Move,
    pub from: Site,
    pub to: Site,
}

impl Segment {
    /// `channel,space_dir,time_dir,x_from,t_from,x_to,t_to`
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.mv.channel,
            self.mv.space.sign(),
            self.mv.time.sign(),
            self.from.x,
            self.from.t,
            self.to.x,
            self.to.t
        )
    }
}

/// A closed loop through the origin made of the moves of a path and its twin.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntwinedLoop {
    moves: Vec<Move>,
}

impl EntwinedLoop {
    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Moves with their endpoints, starting from the origin.
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let mut at = Site::ORIGIN;
        self.moves.iter().map(move |&mv| {
            let from = at;
            at = Site::new(at.x + mv.space.sign(), at.t + mv.time.sign());
            Segment { mv, from, to: at }
        })
    }

    pub fn max_t(&self) -> i64 {
        self.segments().map(|s| s.to.t).max().unwrap_or(0)
    }
}

/// Appends a mirrored copy of the last leg when the corner count is even.
/// The result always has an odd number of corners.
pub fn extend_even(path: &Path) -> Path {
    let mut steps = path.steps().to_vec();
    extend_even_into(&mut steps);
    Path::new(steps).expect("extension keeps the path nonempty")
}

fn extend_even_into(steps: &mut Vec<Direction>) {
    if corner_count(steps) % 2 == 1 {
        return;
    }
    let last = steps[steps.len() - 1];
    let last_leg = steps.iter().rev().take_while(|&&d| d == last).count();
    steps.extend(std::iter::repeat_n(last.flip(), last_leg));
}

/// The orthogonal twin of `path`, case by case on the corner count `R`:
///
/// * `R = 0`: `(-l1, l1)`
/// * `R = 1`: `(l2, l1)`
/// * `R` even: `(l2, l1, …, lR, l(R-1), -l(R+1), l(R+1))`
/// * `R` odd: `(l2, l1, l4, l3, …, l(R+1), lR)`
///
/// The twin starts in the opposite direction and ends where
/// [`extend_even`]`(path)` ends.
pub fn orthogonal_twin(path: &Path) -> Path {
    let legs = path.to_legs().into_inner();
    let r = legs.len() - 1;
    let twin: Vec<Leg> = if r == 0 {
        vec![legs[0].reversed(), legs[0]]
    } else if r == 1 {
        vec![legs[1], legs[0]]
    } else if r.is_multiple_of(2) {
        let mut out: Vec<Leg> = legs[..r]
            .chunks_exact(2)
            .flat_map(|pair| [pair[1], pair[0]])
            .collect();
        out.push(legs[r].reversed());
        out.push(legs[r]);
        out
    } else {
        legs.chunks_exact(2)
            .flat_map(|pair| [pair[1], pair[0]])
            .collect()
    };
    expand(&twin)
}

fn expand(legs: &[Leg]) -> Path {
    let steps = legs
        .iter()
        .flat_map(|l| std::iter::repeat_n(l.dir, l.len))
        .collect();
    Path::new(steps).expect("legs are nonempty")
}

/// Sites where `a` (after extension) and its twin `b` meet: the end of every
/// leg pair. The last element is the common endpoint.
pub fn meeting_points(a: &Path, b: &Path) -> Result<Vec<Site>> {
    let extended = extend_even(a);
    if *b != orthogonal_twin(a) {
        return Err(Error::NotTwins);
    }
    let pa = extended.positions();
    let pb = b.positions();
    let meetings: Vec<Site> = pair_bounds(&extended.to_legs().into_inner())
        .into_iter()
        .skip(1)
        .map(|k| pa[k])
        .collect();
    debug_assert!(meetings.iter().all(|m| pb[m.t as usize] == *m));
    Ok(meetings)
}

/// Step offsets of leg-pair boundaries, starting with 0.
fn pair_bounds(legs: &[Leg]) -> Vec<usize> {
    let mut bounds = vec![0];
    let mut total = 0;
    for pair in legs.chunks(2) {
        total += pair.iter().map(|l| l.len).sum::<usize>();
        bounds.push(total);
    }
    bounds
}

/// Colour of step `index` (0-based): blue (`+1`) while the number of corners
/// before it is 0 or 1 mod 4, red (`-1`) for 2 or 3 mod 4.
pub fn feynman_color(path: &Path, index: usize) -> i64 {
    let corners = corner_count(&path.steps()[..=index]);
    color_of(corners)
}

#[inline]
fn color_of(corners: usize) -> i64 {
    if corners % 4 < 2 {
        1
    } else {
        -1
    }
}

/// Builds entwined loops while reusing its buffers between calls.
#[derive(Debug, Default, Clone)]
pub struct Entwiner {
    extended: Vec<Direction>,
    twin: Vec<Direction>,
    legs: Vec<Leg>,
    bounds: Vec<usize>,
}

impl Entwiner {
    pub fn new() -> Entwiner {
        Entwiner::default()
    }

    /// Replaces the contents of `out` with the entwined loop of `steps`.
    pub fn build(&mut self, steps: &[Direction], out: &mut EntwinedLoop) {
        assert!(!steps.is_empty(), "cannot entwine an empty path");
        self.extended.clear();
        self.extended.extend_from_slice(steps);
        extend_even_into(&mut self.extended);

        // after extension the twin is the pairwise leg swap
        self.legs.clear();
        self.legs.extend(run_lengths(&self.extended));
        self.twin.clear();
        self.bounds.clear();
        self.bounds.push(0);
        let mut total = 0;
        for pair in self.legs.chunks_exact(2) {
            for leg in [pair[1], pair[0]] {
                self.twin.extend(std::iter::repeat_n(leg.dir, leg.len));
            }
            total += pair[0].len + pair[1].len;
            self.bounds.push(total);
        }

        let moves = &mut out.moves;
        moves.clear();
        moves.reserve(2 * self.extended.len());
        let sections = self.bounds.len() - 1;
        let (a, b) = (&self.extended, &self.twin);

        for j in 0..sections {
            let (src, channel) = if j % 2 == 0 { (a, Channel::A) } else { (b, Channel::B) };
            for &d in &src[self.bounds[j]..self.bounds[j + 1]] {
                moves.push(Move {
                    space: d,
                    time: TimeDir::Forward,
                    channel,
                });
            }
        }
        for j in (0..sections).rev() {
            let (src, channel) = if j % 2 == 0 { (b, Channel::B) } else { (a, Channel::A) };
            for &d in src[self.bounds[j]..self.bounds[j + 1]].iter().rev() {
                moves.push(Move {
                    space: d.flip(),
                    time: TimeDir::Backward,
                    channel,
                });
            }
        }
    }
}

/// The entwined loop of `path` and its orthogonal twin.
pub fn entwine(path: &Path) -> EntwinedLoop {
    let mut out = EntwinedLoop::default();
    Entwiner::new().build(path.steps(), &mut out);
    out
}

/// Checks every structural property an entwined loop of `path` must have,
/// returning a description of the first violation.
///
/// * it closes at the origin, is continuous and never goes below `t = 0`;
/// * all forward moves come before all backward ones;
/// * channel A covers every bond of the extended path exactly once and
///   channel B every bond of the twin;
/// * each move's time direction is the Feynman colour of its step (negated
///   for the twin);
/// * every slice is crossed upward as often as downward.
pub fn verify_entwined(path: &Path, lp: &EntwinedLoop) -> std::result::Result<(), String> {
    let ext = extend_even(path);
    let twin = orthogonal_twin(path);
    let segs: Vec<Segment> = lp.segments().collect();
    if segs.len() != 2 * ext.len() {
        return Err(format!("{} moves, expected {}", segs.len(), 2 * ext.len()));
    }
    if segs.last().map(|s| s.to) != Some(Site::ORIGIN) {
        return Err("loop does not return to the origin".into());
    }
    if let Some(s) = segs.iter().find(|s| s.to.t < 0) {
        return Err(format!("loop drops below t = 0 at {}", s.to));
    }
    let first_back = segs
        .iter()
        .position(|s| s.mv.time == TimeDir::Backward)
        .unwrap_or(segs.len());
    if segs[first_back..].iter().any(|s| s.mv.time == TimeDir::Forward) {
        return Err("forward move after the descent began".into());
    }

    for (channel, src, color_sign) in [(Channel::A, &ext, 1), (Channel::B, &twin, -1)] {
        let pos = src.positions();
        let mut seen: Vec<Option<i64>> = vec![None; src.len()];
        for s in segs.iter().filter(|s| s.mv.channel == channel) {
            let (lo, hi) = if s.from.t < s.to.t { (s.from, s.to) } else { (s.to, s.from) };
            let k = lo.t as usize;
            if k >= src.len() || pos[k] != lo || pos[k + 1] != hi {
                return Err(format!("{channel} move {lo}->{hi} is not a bond of its path"));
            }
            if seen[k].replace(s.mv.time.sign()).is_some() {
                return Err(format!("{channel} bond at t={k} traversed twice"));
            }
        }
        for (k, time) in seen.into_iter().enumerate() {
            let Some(time) = time else {
                return Err(format!("{channel} bond at t={k} never traversed"));
            };
            if time != color_sign * feynman_color(src, k) {
                return Err(format!("{channel} bond at t={k} has the wrong colour"));
            }
        }
    }

    let max_t = segs.iter().map(|s| s.to.t).max().unwrap_or(0) as usize;
    let mut net = vec![0i64; max_t + 1];
    for s in &segs {
        net[s.from.t.max(s.to.t) as usize] += s.mv.time.sign();
    }
    if let Some(t) = net.iter().position(|&v| v != 0) {
        return Err(format!("slice t={t} is not neutral"));
    }
    Ok(())
}
