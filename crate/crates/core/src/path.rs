//! Chessboard paths on the 1+1 dimensional lattice.
//!
//! A path is stored step-wise: one [`Direction`] per unit of time, so the
//! particle moves diagonally on the lattice. The run-length ("leg") view is
//! derived on demand with [`Path::to_legs`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space direction of a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Minus,
    Plus,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Minus, Direction::Plus];

    pub fn from_sign(sign: i64) -> Option<Direction> {
        match sign {
            1 => Some(Direction::Plus),
            -1 => Some(Direction::Minus),
            _ => None,
        }
    }

    #[inline]
    pub fn sign(self) -> i64 {
        match self {
            Direction::Plus => 1,
            Direction::Minus => -1,
        }
    }

    #[inline]
    pub fn flip(self) -> Direction {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Direction::Plus => '+',
            Direction::Minus => '-',
        }
    }

    /// `+1` / `-1`, the form used in CSV columns.
    pub fn signed_label(self) -> &'static str {
        match self {
            Direction::Plus => "+1",
            Direction::Minus => "-1",
        }
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        self.flip()
    }
}

/// A lattice site in units of the lattice spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub t: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, t: 0 };

    pub fn new(x: i64, t: i64) -> Site {
        Site { x, t }
    }

    /// True when the site lies in the forward light cone of the origin.
    pub fn in_light_cone(self) -> bool {
        self.t >= 0 && self.x.abs() <= self.t && (self.x - self.t).rem_euclid(2) == 0
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.t)
    }
}

/// A maximal run of steps in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Leg {
    pub dir: Direction,
    pub len: usize,
}

impl Leg {
    pub fn new(dir: Direction, len: usize) -> Leg {
        Leg { dir, len }
    }

    /// The same leg with every step reversed.
    pub fn reversed(self) -> Leg {
        Leg {
            dir: self.dir.flip(),
            len: self.len,
        }
    }
}

/// Run-length view of a path. Adjacent legs always point opposite ways.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LegSeq(Vec<Leg>);

impl LegSeq {
    pub fn new(legs: Vec<Leg>) -> Result<LegSeq> {
        if legs.is_empty() {
            return Err(Error::EmptyPath);
        }
        for (index, leg) in legs.iter().enumerate() {
            if leg.len == 0 {
                return Err(Error::ZeroLengthLeg { index });
            }
        }
        if let Some(index) = legs.windows(2).position(|w| w[0].dir == w[1].dir) {
            return Err(Error::NonAlternatingLegs { index });
        }
        Ok(LegSeq(legs))
    }

    pub fn legs(&self) -> &[Leg] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.0.iter().map(|l| l.len).sum()
    }

    pub fn into_inner(self) -> Vec<Leg> {
        self.0
    }

    pub fn to_path(&self) -> Path {
        from_legs(self)
    }
}

/// A chessboard trajectory starting at the origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path(Vec<Direction>);

impl Path {
    pub fn new(steps: Vec<Direction>) -> Result<Path> {
        if steps.is_empty() {
            return Err(Error::EmptyPath);
        }
        Ok(Path(steps))
    }

    pub fn steps(&self) -> &[Direction] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Direction {
        self.0[0]
    }

    pub fn last(&self) -> Direction {
        self.0[self.0.len() - 1]
    }

    pub fn corner_count(&self) -> usize {
        corner_count(&self.0)
    }

    pub fn to_legs(&self) -> LegSeq {
        LegSeq(run_lengths(&self.0))
    }

    pub fn positions(&self) -> Vec<Site> {
        let mut x = 0;
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(Site::ORIGIN);
        for (k, d) in self.0.iter().enumerate() {
            x += d.sign();
            out.push(Site::new(x, k as i64 + 1));
        }
        out
    }

    pub fn endpoint(&self) -> Site {
        let x = self.0.iter().map(|d| d.sign()).sum();
        Site::new(x, self.0.len() as i64)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{}", d.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Path> {
        let steps = s
            .chars()
            .enumerate()
            .map(|(position, c)| match c {
                '+' => Ok(Direction::Plus),
                '-' => Ok(Direction::Minus),
                found => Err(Error::ParsePath { position, found }),
            })
            .collect::<Result<Vec<_>>>()?;
        Path::new(steps)
    }
}

/// Number of sign changes between consecutive steps.
pub fn corner_count(steps: &[Direction]) -> usize {
    steps.windows(2).filter(|w| w[0] != w[1]).count()
}

pub(crate) fn run_lengths(steps: &[Direction]) -> Vec<Leg> {
    let mut legs: Vec<Leg> = Vec::new();
    for &d in steps {
        match legs.last_mut() {
            Some(leg) if leg.dir == d => leg.len += 1,
            _ => legs.push(Leg::new(d, 1)),
        }
    }
    legs
}

pub fn from_legs(legs: &LegSeq) -> Path {
    let mut steps = Vec::with_capacity(legs.total_steps());
    for leg in legs.legs() {
        steps.extend(std::iter::repeat_n(leg.dir, leg.len));
    }
    Path(steps)
}
