use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::numerics::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    N,
    S,
    E,
    W,
}

impl Heading {
    fn unit(self) -> (f64, f64) {
        match self {
            Heading::N => (0.0, 1.0),
            Heading::S => (0.0, -1.0),
            Heading::E => (1.0, 0.0),
            Heading::W => (-1.0, 0.0),
        }
    }

    fn reverse(self) -> Heading {
        match self {
            Heading::N => Heading::S,
            Heading::S => Heading::N,
            Heading::E => Heading::W,
            Heading::W => Heading::E,
        }
    }

    fn perpendicular(self) -> [Heading; 2] {
        match self {
            Heading::N | Heading::S => [Heading::E, Heading::W],
            Heading::E | Heading::W => [Heading::N, Heading::S],
        }
    }

    /// Lateral unit vector pointing to the right of travel.
    fn right(self) -> (f64, f64) {
        let (dx, dy) = self.unit();
        (dy, -dx)
    }
}

/// A vehicle on a road centreline plus its lane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: (f64, f64),
    pub heading: Heading,
    pub lane: u32,
    pub velocity: f64,
}

/// Decision-point bookkeeping of one move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveLog {
    /// Intersections where going straight was possible.
    pub open_crossings: u32,
    /// Turns taken at such intersections.
    pub turns: u32,
    /// Direction changes forced by the layout edge.
    pub edge_turns: u32,
}

const EPS: f64 = 1e-9;

/// Manhattan road grid with the BS at its centre.
#[derive(Clone, Debug, PartialEq)]
pub struct ManhattanGrid {
    pub width: f64,
    pub height: f64,
    pub block_width: f64,
    pub block_height: f64,
    pub lane_width: f64,
    pub lanes_per_direction: u32,
}

impl Default for ManhattanGrid {
    fn default() -> Self {
        Self { width: 750.0, height: 1299.0, block_width: 250.0, block_height: 433.0, lane_width: 3.5, lanes_per_direction: 2 }
    }
}

impl ManhattanGrid {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self { lanes_per_direction: cfg.lanes_per_direction.max(1), ..Self::default() }
    }

    pub fn bs_position(&self) -> (f64, f64) {
        (self.width / 2.0, self.height / 2.0)
    }

    fn x_lines(&self) -> Vec<f64> {
        grid_lines(self.width, self.block_width)
    }

    fn y_lines(&self) -> Vec<f64> {
        grid_lines(self.height, self.block_height)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= -EPS && p.0 <= self.width + EPS && p.1 >= -EPS && p.1 <= self.height + EPS
    }

    /// Position including the lane offset.
    pub fn physical_position(&self, s: &VehicleState) -> (f64, f64) {
        let (rx, ry) = s.heading.right();
        let off = (s.lane as f64 + 0.5) * self.lane_width;
        (s.position.0 + rx * off, s.position.1 + ry * off)
    }

    pub fn distance_to_bs(&self, s: &VehicleState) -> f64 {
        dist(self.physical_position(s), self.bs_position())
    }

    pub fn max_distance_to_bs(&self) -> f64 {
        let extra = self.lanes_per_direction as f64 * self.lane_width;
        ((self.width / 2.0 + extra).powi(2) + (self.height / 2.0 + extra).powi(2)).sqrt()
    }

    /// Uniform placement over all lanes of all streets.
    pub fn random_state(&self, velocity: f64, rng: &mut RandomStream) -> VehicleState {
        let xs = self.x_lines();
        let ys = self.y_lines();
        let vertical_len = xs.len() as f64 * self.height;
        let horizontal_len = ys.len() as f64 * self.width;
        let lane = rng.index(self.lanes_per_direction as usize) as u32;
        if rng.uniform() * (vertical_len + horizontal_len) < vertical_len {
            let x = xs[rng.index(xs.len())];
            let y = rng.uniform() * self.height;
            let heading = if rng.bernoulli(0.5) { Heading::N } else { Heading::S };
            VehicleState { position: (x, y), heading, lane, velocity }
        } else {
            let y = ys[rng.index(ys.len())];
            let x = rng.uniform() * self.width;
            let heading = if rng.bernoulli(0.5) { Heading::E } else { Heading::W };
            VehicleState { position: (x, y), heading, lane, velocity }
        }
    }

    fn can_move(&self, p: (f64, f64), h: Heading) -> bool {
        match h {
            Heading::N => p.1 < self.height - EPS,
            Heading::S => p.1 > EPS,
            Heading::E => p.0 < self.width - EPS,
            Heading::W => p.0 > EPS,
        }
    }

    /// Advances by `velocity·dt` along the streets, deciding at every
    /// intersection reached: turn with probability `p_turn` where straight
    /// travel is possible, always change direction at the layout edge.
    pub fn advance(&self, state: &VehicleState, dt: f64, p_turn: f64, rng: &mut RandomStream) -> (VehicleState, MoveLog) {
        let mut s = *state;
        let mut log = MoveLog::default();
        let mut remaining = s.velocity * dt;
        let xs = self.x_lines();
        let ys = self.y_lines();

        if !self.can_move(s.position, s.heading) {
            s.heading = self.edge_turn(&s, rng);
            log.edge_turns += 1;
        }

        while remaining > EPS {
            let (dx, dy) = s.heading.unit();
            let (coord, lines, dir) = match s.heading {
                Heading::N | Heading::S => (s.position.1, &ys, dy),
                Heading::E | Heading::W => (s.position.0, &xs, dx),
            };
            let next = if dir > 0.0 {
                lines.iter().copied().find(|l| *l > coord + EPS)
            } else {
                lines.iter().rev().copied().find(|l| *l < coord - EPS)
            };
            let Some(line) = next else { break };
            let gap = (line - coord).abs();
            if remaining < gap {
                s.position = (s.position.0 + dx * remaining, s.position.1 + dy * remaining);
                break;
            }
            s.position = match s.heading {
                Heading::N | Heading::S => (s.position.0, line),
                Heading::E | Heading::W => (line, s.position.1),
            };
            remaining -= gap;

            if self.can_move(s.position, s.heading) {
                log.open_crossings += 1;
                if rng.bernoulli(p_turn) {
                    let options: Vec<Heading> =
                        s.heading.perpendicular().into_iter().filter(|h| self.can_move(s.position, *h)).collect();
                    if !options.is_empty() {
                        s.heading = options[rng.index(options.len())];
                        log.turns += 1;
                    }
                }
            } else {
                s.heading = self.edge_turn(&s, rng);
                log.edge_turns += 1;
            }
        }
        (s, log)
    }

    fn edge_turn(&self, s: &VehicleState, rng: &mut RandomStream) -> Heading {
        let options: Vec<Heading> =
            s.heading.perpendicular().into_iter().filter(|h| self.can_move(s.position, *h)).collect();
        if options.is_empty() {
            s.heading.reverse()
        } else {
            options[rng.index(options.len())]
        }
    }
}

/// Vehicle step on the default Manhattan layout.
pub fn mobility_step(state: &VehicleState, dt: f64, turn_probability: f64, rng: &mut RandomStream) -> VehicleState {
    ManhattanGrid::default().advance(state, dt, turn_probability, rng).0
}

/// Straight freeway along the x axis, `[-half_length, half_length)`, with
/// wrap-around at the ends. The BS sits `bs_offset` metres beyond the
/// outermost lane on one side.
#[derive(Clone, Debug, PartialEq)]
pub struct Freeway {
    pub half_length: f64,
    pub lane_width: f64,
    pub lanes_per_direction: u32,
    pub bs_offset: f64,
}

impl Freeway {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            half_length: cfg.cell_radius_m,
            lane_width: 3.5,
            lanes_per_direction: cfg.lanes_per_direction.max(1),
            bs_offset: cfg.bs_offset_m,
        }
    }

    pub fn bs_position(&self) -> (f64, f64) {
        (0.0, self.bs_offset + self.lanes_per_direction as f64 * self.lane_width)
    }

    pub fn physical_position(&self, s: &VehicleState) -> (f64, f64) {
        let (rx, ry) = s.heading.right();
        let off = (s.lane as f64 + 0.5) * self.lane_width;
        (s.position.0 + rx * off, s.position.1 + ry * off)
    }

    pub fn distance_to_bs(&self, s: &VehicleState) -> f64 {
        dist(self.physical_position(s), self.bs_position())
    }

    pub fn max_distance_to_bs(&self) -> f64 {
        let lateral = self.bs_position().1 + self.lanes_per_direction as f64 * self.lane_width;
        (self.half_length.powi(2) + lateral.powi(2)).sqrt()
    }

    pub fn random_state(&self, velocity: f64, rng: &mut RandomStream) -> VehicleState {
        let x = rng.uniform_range(-self.half_length, self.half_length);
        let heading = if rng.bernoulli(0.5) { Heading::E } else { Heading::W };
        let lane = rng.index(self.lanes_per_direction as usize) as u32;
        VehicleState { position: (x, 0.0), heading, lane, velocity }
    }

    pub fn advance(&self, state: &VehicleState, dt: f64) -> VehicleState {
        let mut s = *state;
        let (dx, _) = s.heading.unit();
        let span = 2.0 * self.half_length;
        let x = s.position.0 + dx * s.velocity * dt + self.half_length;
        s.position.0 = x.rem_euclid(span) - self.half_length;
        s
    }
}

fn grid_lines(extent: f64, block: f64) -> Vec<f64> {
    let n = (extent / block).round() as usize;
    let mut lines: Vec<f64> = (0..n).map(|i| i as f64 * block).collect();
    lines.push(extent);
    lines
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}
