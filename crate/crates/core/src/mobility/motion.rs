use rand::Rng;

use super::{Rect, StreetGrid};

/// Direction of travel along a street.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    const ALL: [Heading; 4] = [Heading::East, Heading::North, Heading::West, Heading::South];

    fn step(self) -> (i64, i64) {
        match self {
            Heading::East => (1, 0),
            Heading::North => (0, 1),
            Heading::West => (-1, 0),
            Heading::South => (0, -1),
        }
    }

    fn reverse(self) -> Heading {
        match self {
            Heading::East => Heading::West,
            Heading::North => Heading::South,
            Heading::West => Heading::East,
            Heading::South => Heading::North,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Pattern {
    /// Moving toward grid node `(ix, iy)` with `heading`.
    Street { grid: StreetGrid, heading: Heading, node: (usize, usize) },
    RandomWaypoint { rect: Rect, target: [f64; 2] },
}

/// Kinematic state of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeMotion {
    position: [f64; 2],
    speed_mps: f64,
    pattern: Pattern,
}

impl UeMotion {
    /// Places a UE uniformly on a random street segment with a random heading.
    pub fn on_streets<R: Rng + ?Sized>(grid: &StreetGrid, speed_mps: f64, rng: &mut R) -> Self {
        let (nx, ny) = (grid.xs.len(), grid.ys.len());
        let vertical_segments = nx * (ny - 1);
        let horizontal_segments = ny * (nx - 1);
        let k = rng.random_range(0..vertical_segments + horizontal_segments);
        let u: f64 = rng.random();
        let forward: bool = rng.random();
        let (position, heading, node) = if k < vertical_segments {
            let (ix, iy) = (k / (ny - 1), k % (ny - 1));
            let y = grid.ys[iy] + u * (grid.ys[iy + 1] - grid.ys[iy]);
            if forward {
                ([grid.xs[ix], y], Heading::North, (ix, iy + 1))
            } else {
                ([grid.xs[ix], y], Heading::South, (ix, iy))
            }
        } else {
            let k = k - vertical_segments;
            let (iy, ix) = (k / (nx - 1), k % (nx - 1));
            let x = grid.xs[ix] + u * (grid.xs[ix + 1] - grid.xs[ix]);
            if forward {
                ([x, grid.ys[iy]], Heading::East, (ix + 1, iy))
            } else {
                ([x, grid.ys[iy]], Heading::West, (ix, iy))
            }
        };
        Self { position, speed_mps, pattern: Pattern::Street { grid: grid.clone(), heading, node } }
    }

    /// Places a UE uniformly inside `rect` with a uniform first waypoint.
    pub fn random_waypoint<R: Rng + ?Sized>(rect: Rect, speed_mps: f64, rng: &mut R) -> Self {
        let position = uniform_in(&rect, rng);
        let target = uniform_in(&rect, rng);
        Self { position, speed_mps, pattern: Pattern::RandomWaypoint { rect, target } }
    }

    pub fn position(&self) -> [f64; 2] {
        self.position
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_mps
    }

    pub fn heading(&self) -> Option<Heading> {
        match &self.pattern {
            Pattern::Street { heading, .. } => Some(*heading),
            Pattern::RandomWaypoint { .. } => None,
        }
    }
}

fn uniform_in<R: Rng + ?Sized>(rect: &Rect, rng: &mut R) -> [f64; 2] {
    [rect.x0 + rng.random::<f64>() * (rect.x1 - rect.x0), rect.y0 + rng.random::<f64>() * (rect.y1 - rect.y0)]
}

fn node_position(grid: &StreetGrid, node: (usize, usize)) -> [f64; 2] {
    [grid.xs[node.0], grid.ys[node.1]]
}

fn neighbour(grid: &StreetGrid, node: (usize, usize), h: Heading) -> Option<(usize, usize)> {
    let (dx, dy) = h.step();
    let ix = node.0 as i64 + dx;
    let iy = node.1 as i64 + dy;
    (ix >= 0 && iy >= 0 && (ix as usize) < grid.xs.len() && (iy as usize) < grid.ys.len())
        .then_some((ix as usize, iy as usize))
}

/// Picks the heading leaving an intersection: straight on with probability
/// 1/2 when possible, otherwise a uniformly chosen turn; reverses only at a
/// dead end. Always consumes two draws.
fn choose_heading<R: Rng + ?Sized>(grid: &StreetGrid, node: (usize, usize), current: Heading, rng: &mut R) -> Heading {
    let go_straight: bool = rng.random();
    let pick: f64 = rng.random();
    let straight_ok = neighbour(grid, node, current).is_some();
    if straight_ok && go_straight {
        return current;
    }
    let turns: Vec<Heading> = Heading::ALL
        .into_iter()
        .filter(|&h| h != current && h != current.reverse() && neighbour(grid, node, h).is_some())
        .collect();
    if !turns.is_empty() {
        return turns[((pick * turns.len() as f64) as usize).min(turns.len() - 1)];
    }
    if straight_ok {
        current
    } else {
        current.reverse()
    }
}

/// Advances a UE by `speed · tick_s` along its pattern and returns the new
/// position. Street UEs choose a new heading at every intersection they reach.
pub fn step_ue_motion<R: Rng + ?Sized>(ue: &mut UeMotion, tick_s: f64, rng: &mut R) -> [f64; 2] {
    let mut remaining = ue.speed_mps * tick_s;
    if remaining <= 0.0 {
        return ue.position;
    }
    match &mut ue.pattern {
        Pattern::Street { grid, heading, node } => {
            // Bounded: each loop iteration either finishes or consumes a full segment.
            loop {
                let target = node_position(grid, *node);
                let dist = (target[0] - ue.position[0]).abs() + (target[1] - ue.position[1]).abs();
                if remaining < dist {
                    let (dx, dy) = heading.step();
                    ue.position[0] += dx as f64 * remaining;
                    ue.position[1] += dy as f64 * remaining;
                    break;
                }
                remaining -= dist;
                ue.position = target;
                *heading = choose_heading(grid, *node, *heading, rng);
                *node = neighbour(grid, *node, *heading).expect("chosen heading leads to a node");
                if remaining <= 0.0 {
                    break;
                }
            }
        }
        Pattern::RandomWaypoint { rect, target } => loop {
            let d = [target[0] - ue.position[0], target[1] - ue.position[1]];
            let dist = d[0].hypot(d[1]);
            if remaining < dist {
                ue.position[0] += d[0] / dist * remaining;
                ue.position[1] += d[1] / dist * remaining;
                ue.position = rect.clamp(ue.position);
                break;
            }
            remaining -= dist;
            ue.position = *target;
            *target = uniform_in(rect, rng);
            if remaining <= 0.0 {
                break;
            }
        },
    }
    ue.position
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn grid() -> StreetGrid {
        StreetGrid { xs: vec![0.0, 80.0, 160.0], ys: vec![0.0, 80.0] }
    }

    fn on_grid(g: &StreetGrid, p: [f64; 2]) -> bool {
        let eps = 1e-9;
        let in_x = p[0] >= g.xs[0] - eps && p[0] <= g.xs[g.xs.len() - 1] + eps;
        let in_y = p[1] >= g.ys[0] - eps && p[1] <= g.ys[g.ys.len() - 1] + eps;
        in_x && in_y && (g.xs.iter().any(|x| (p[0] - x).abs() < eps) || g.ys.iter().any(|y| (p[1] - y).abs() < eps))
    }

    #[test]
    fn street_step_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = grid();
        let mut ue = UeMotion::on_streets(&g, 30.0 / 3.6, &mut rng);
        // Place mid-segment so one step cannot reach an intersection.
        ue.position = [40.0, 0.0];
        ue.pattern = Pattern::Street { grid: g, heading: Heading::East, node: (1, 0) };
        let p = step_ue_motion(&mut ue, 0.01, &mut rng);
        assert!((p[0] - 40.0 - 0.083333).abs() < 1e-6 && p[1] == 0.0, "{p:?}");
    }

    #[test]
    fn dead_end_reverses_and_stays_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = StreetGrid { xs: vec![0.0, 80.0], ys: vec![0.0, 1e-3] };
        let mut ue = UeMotion::on_streets(&g, 10.0, &mut rng);
        ue.position = [79.0, 0.0];
        ue.pattern = Pattern::Street { grid: g.clone(), heading: Heading::East, node: (1, 0) };
        step_ue_motion(&mut ue, 0.2, &mut rng);
        assert!(on_grid(&g, ue.position()));
        for _ in 0..10_000 {
            let p = step_ue_motion(&mut ue, 0.05, &mut rng);
            assert!(on_grid(&g, p), "{p:?}");
        }
    }

    #[test]
    fn street_ues_stay_on_streets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid();
        for _ in 0..20 {
            let mut ue = UeMotion::on_streets(&g, 30.0 / 3.6, &mut rng);
            assert!(on_grid(&g, ue.position()));
            let mut prev = ue.position();
            for _ in 0..3000 {
                let p = step_ue_motion(&mut ue, 0.01, &mut rng);
                assert!(on_grid(&g, p), "{p:?}");
                let moved = (p[0] - prev[0]).abs() + (p[1] - prev[1]).abs();
                assert!((moved - 30.0 / 3.6 * 0.01).abs() < 1e-9, "{moved}");
                prev = p;
            }
        }
    }

    #[test]
    fn waypoint_stays_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rect = Rect::new(10.0, 20.0, 30.0, 25.0);
        let mut ue = UeMotion::random_waypoint(rect, 3.0 / 3.6, &mut rng);
        for _ in 0..100_000 {
            assert!(rect.contains(step_ue_motion(&mut ue, 0.01, &mut rng)));
        }
    }

    #[test]
    fn static_ue_does_not_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ue = UeMotion::random_waypoint(Rect::new(0.0, 0.0, 5.0, 5.0), 0.0, &mut rng);
        let p = ue.position();
        assert_eq!(step_ue_motion(&mut ue, 1.0, &mut rng), p);
        let mut ue = UeMotion::on_streets(&grid(), 0.0, &mut rng);
        let p = ue.position();
        assert_eq!(step_ue_motion(&mut ue, 1.0, &mut rng), p);
    }
}
