//! Random-walk mobility.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::Point;

pub const MAX_SPEED: f64 = 10.0;
pub const MIN_FLIGHT: f64 = 10.0;
pub const MAX_FLIGHT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    /// m/s
    pub speed: f64,
    /// rad
    pub direction: f64,
    /// s left before the next redraw
    pub flight_timer: f64,
}

impl MobilityState {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            speed: rng.random_range(0.0..=MAX_SPEED),
            direction: rng.random_range(0.0..2.0 * PI),
            flight_timer: rng.random_range(MIN_FLIGHT..=MAX_FLIGHT),
        }
    }

    pub fn displacement(&self, dt: f64) -> (f64, f64) {
        (self.speed * dt * self.direction.cos(), self.speed * dt * self.direction.sin())
    }
}

/// A moving UE (or a D2D pair moving as one) with its own random stream.
#[derive(Debug, Clone)]
pub struct Walker {
    pub state: MobilityState,
    rng: ChaCha8Rng,
}

impl Walker {
    pub fn new(mut rng: ChaCha8Rng) -> Self {
        let state = MobilityState::draw(&mut rng);
        Self { state, rng }
    }

    /// Advance by `dt` seconds. `allowed` gets the proposed displacement and
    /// says whether it stays inside the region; if not the walker stays put
    /// and redraws. Returns the displacement actually applied.
    pub fn step(&mut self, dt: f64, allowed: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let (dx, dy) = self.state.displacement(dt);
        if !allowed(dx, dy) {
            self.state = MobilityState::draw(&mut self.rng);
            return (0.0, 0.0);
        }
        self.state.flight_timer -= dt;
        if self.state.flight_timer <= 0.0 {
            self.state = MobilityState::draw(&mut self.rng);
        }
        (dx, dy)
    }
}

/// Move a single point; convenience over [`Walker::step`].
pub fn step_mobility(walker: &mut Walker, position: Point, dt: f64, inside: impl Fn(Point) -> bool) -> Point {
    let (dx, dy) = walker.step(dt, |dx, dy| inside(position.offset(dx, dy)));
    position.offset(dx, dy)
}
