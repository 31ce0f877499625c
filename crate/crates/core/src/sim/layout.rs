//! 19-cell hexagonal layout with wrap-around.

use std::f64::consts::PI;

use rand::Rng;

use super::SimError;
use crate::model::Point;

pub const NUM_CELLS: usize = 19;

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub inter_site_distance: f64,
    /// Cell 0 is the centre, then the first ring, then the second, each ring
    /// counter-clockwise from the positive x axis.
    pub centers: Vec<Point>,
    /// The six translations that tile the plane with copies of the cluster.
    pub wrap_shifts: [Point; 6],
}

pub fn build_layout(inter_site_distance: f64) -> Result<Layout, SimError> {
    if !(inter_site_distance > 0.0 && inter_site_distance.is_finite()) {
        return Err(SimError::Config(format!("inter-site distance must be positive, got {inter_site_distance}")));
    }
    let d = inter_site_distance;
    let lattice = |q: i32, r: i32| Point::new(d * (q as f64 + r as f64 / 2.0), d * r as f64 * 3f64.sqrt() / 2.0);
    let mut cells: Vec<(i32, f64, Point)> = Vec::new();
    for q in -2i32..=2 {
        for r in -2i32..=2 {
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            if ring <= 2 {
                let p = lattice(q, r);
                let angle = p.y.atan2(p.x).rem_euclid(2.0 * PI);
                cells.push((ring, if ring == 0 { 0.0 } else { angle }, p));
            }
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let base = lattice(3, 2);
    // s[m + 3] = -s[m] exactly, so wrap distance is exactly symmetric
    let half: [Point; 3] = std::array::from_fn(|m| rotate(base, m as f64 * PI / 3.0));
    let wrap_shifts = std::array::from_fn(|m| if m < 3 { half[m] } else { Point::new(-half[m - 3].x, -half[m - 3].y) });
    Ok(Layout { inter_site_distance: d, centers: cells.into_iter().map(|c| c.2).collect(), wrap_shifts })
}

fn rotate(p: Point, a: f64) -> Point {
    Point::new(p.x * a.cos() - p.y * a.sin(), p.x * a.sin() + p.y * a.cos())
}

impl Layout {
    pub fn num_cells(&self) -> usize {
        self.centers.len()
    }

    /// Circumradius of one hexagonal cell.
    pub fn cell_radius(&self) -> f64 {
        self.inter_site_distance / 3f64.sqrt()
    }

    /// Hex norm of `p` relative to the centre of `cell`: 0 at the centre, 1 on the border.
    pub fn hex_norm(&self, cell: usize, p: Point) -> f64 {
        let c = self.centers[cell];
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        let half = self.inter_site_distance / 2.0;
        (0..3)
            .map(|i| {
                let a = i as f64 * PI / 3.0;
                (dx * a.cos() + dy * a.sin()).abs() / half
            })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, cell: usize, p: Point) -> bool {
        self.hex_norm(cell, p) <= 1.0
    }

    /// Uniform point inside `cell`.
    pub fn sample_in_cell<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> Point {
        let c = self.centers[cell];
        let r = self.cell_radius();
        loop {
            let p = Point::new(c.x + rng.random_range(-r..r), c.y + rng.random_range(-r..r));
            if self.contains(cell, p) {
                return p;
            }
        }
    }

    /// Shortest distance between `a` and any wrap-around image of `b`.
    pub fn wrap_distance(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = (a.x - b.x, a.y - b.y);
        self.wrap_shifts
            .iter()
            .map(|s| (dx - s.x).hypot(dy - s.y))
            .fold(dx.hypot(dy), f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nineteen_cells_on_the_grid() {
        let l = build_layout(500.0).unwrap();
        assert_eq!(l.num_cells(), NUM_CELLS);
        assert_eq!(l.centers[0], Point::new(0.0, 0.0));
        let o = Point::default();
        let ring1 = l.centers[1..7].iter().all(|c| (c.distance(&o) - 500.0).abs() < 1e-9);
        assert!(ring1);
        for (i, a) in l.centers.iter().enumerate() {
            for b in &l.centers[i + 1..] {
                assert!(a.distance(b) > 499.0);
            }
        }
        for s in l.wrap_shifts {
            assert!((s.distance(&o) - 500.0 * 19f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn shifted_clusters_tile_the_lattice() {
        let l = build_layout(1.0).unwrap();
        // every lattice point near the cluster is covered by exactly one (cell, image)
        let mut images = l.centers.clone();
        for s in l.wrap_shifts {
            images.extend(l.centers.iter().map(|c| Point::new(c.x + s.x, c.y + s.y)));
        }
        for q in -4i32..=4 {
            for r in -4i32..=4 {
                let p = Point::new(q as f64 + r as f64 / 2.0, r as f64 * 3f64.sqrt() / 2.0);
                if p.distance(&Point::default()) > 3.0 {
                    continue;
                }
                let hits = images.iter().filter(|c| c.distance(&p) < 1e-9).count();
                assert_eq!(hits, 1, "lattice point ({q},{r})");
            }
        }
    }

    #[test]
    fn bad_distance() {
        assert!(build_layout(0.0).is_err());
        assert!(build_layout(f64::NAN).is_err());
    }

    #[test]
    fn samples_stay_inside() {
        let l = build_layout(500.0).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for cell in 0..NUM_CELLS {
            for _ in 0..200 {
                assert!(l.contains(cell, l.sample_in_cell(cell, &mut r)));
            }
        }
    }
}
