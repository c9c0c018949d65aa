use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::NodeId;

/// Rectangular arena `[0, width] × [0, height]`, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1])
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        [rng.random_range(0.0..=self.width), rng.random_range(0.0..=self.height)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileNode {
    pub id: NodeId,
    pub position: [f64; 2],
    pub waypoint: [f64; 2],
    /// m/s, never negative.
    pub speed: f64,
    pub range: f64,
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Segments walked before giving up within one step; only reachable when
/// waypoints keep landing on the current position.
const MAX_SEGMENTS: usize = 64;

impl MobileNode {
    /// Random-waypoint motion with zero pause: walk toward the waypoint at
    /// `speed`, draw a fresh uniform waypoint on arrival and keep walking
    /// with the remaining time.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, arena: &Arena, rng: &mut R) {
        if self.speed <= 0.0 || dt <= 0.0 {
            return;
        }
        let mut budget = self.speed * dt;
        for _ in 0..MAX_SEGMENTS {
            let d = distance(self.position, self.waypoint);
            if budget < d {
                let f = budget / d;
                self.position[0] += (self.waypoint[0] - self.position[0]) * f;
                self.position[1] += (self.waypoint[1] - self.position[1]) * f;
                break;
            }
            budget -= d;
            self.position = self.waypoint;
            self.waypoint = arena.random_point(rng);
            if budget <= 0.0 {
                break;
            }
        }
        self.position[0] = self.position[0].clamp(0.0, arena.width);
        self.position[1] = self.position[1].clamp(0.0, arena.height);
    }
}

/// Functional form of [`MobileNode::advance`].
pub fn step<R: Rng + ?Sized>(node: &MobileNode, dt: f64, arena: &Arena, rng: &mut R) -> MobileNode {
    let mut next = node.clone();
    next.advance(dt, arena, rng);
    next
}
