//! Finger identities, swipe directions and the capsule finger model shared by
//! the simulator and the sensing pipeline.

use std::fmt;
use std::str::FromStr;

use crate::geometry::Vec2;

/// Fingertip at or below this height counts as touching the surface.
pub const CONTACT_EPS_MM: f64 = 0.1;
/// Capsule radius of a finger.
pub const FINGER_RADIUS_MM: f64 = 6.0;
/// Distance from the tip to the proximal end of the rendered finger segment.
pub const FINGER_LENGTH_MM: f64 = 40.0;
/// Direction the fingers point in, on the surface.
pub const FINGER_AXIS: Vec2 = Vec2::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FingerId(pub u8);

impl FingerId {
    pub const THUMB: FingerId = FingerId(0);
    pub const INDEX: FingerId = FingerId(1);
    pub const MIDDLE: FingerId = FingerId(2);

    pub const ALL: [FingerId; 3] = [Self::THUMB, Self::INDEX, Self::MIDDLE];

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "thumb",
            1 => "index",
            2 => "middle",
            _ => "other",
        }
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

impl fmt::Display for FingerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for FingerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<u8>()
            .map(FingerId)
            .map_err(|_| format!("invalid finger id `{s}`"))
    }
}

/// Surface directions: up is `+y` (away from the user), right is `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Left, Direction::Right, Direction::Up, Direction::Down];

    pub fn unit(self) -> Vec2 {
        match self {
            Direction::Left => Vec2::new(-1.0, 0.0),
            Direction::Right => Vec2::new(1.0, 0.0),
            Direction::Up => Vec2::new(0.0, 1.0),
            Direction::Down => Vec2::new(0.0, -1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }

    /// Dominant axis of a displacement; ties go to the horizontal axis.
    pub fn dominant(d: Vec2) -> Direction {
        if d.x.abs() >= d.y.abs() {
            if d.x >= 0.0 {
                Direction::Right
            } else {
                Direction::Left
            }
        } else if d.y > 0.0 {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            _ => Err(format!("invalid direction `{s}`")),
        }
    }
}

/// Resting tip positions of thumb, index and middle relative to the index tip.
pub fn hand_layout(index_tip: Vec2) -> [Vec2; 3] {
    [
        index_tip + Vec2::new(-40.0, -10.0),
        index_tip,
        index_tip + Vec2::new(40.0, 5.0),
    ]
}
