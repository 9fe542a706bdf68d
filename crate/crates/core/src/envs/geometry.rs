//! Segment walls and collision resolution for the point tasks.

/// Robots stop this far (perpendicular) in front of a wall they run into.
pub const CLEARANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Wall {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b }
    }

    /// Sign of the side of the wall's supporting line that `p` lies on.
    pub fn side(&self, p: [f64; 2]) -> f64 {
        cross(sub(self.b, self.a), sub(p, self.a)).signum()
    }

    /// Motion parameter `t ∈ [0,1]` at which `p → q` first touches the wall.
    /// Collinear overlaps report `t = 0`.
    pub fn hit(&self, p: [f64; 2], q: [f64; 2]) -> Option<f64> {
        let r = sub(q, p);
        let s = sub(self.b, self.a);
        let ap = sub(self.a, p);
        let denom = cross(r, s);
        if denom == 0.0 {
            if cross(ap, r) != 0.0 {
                return None;
            }
            let rr = dot(r, r);
            if rr == 0.0 {
                return None;
            }
            let ta = dot(ap, r) / rr;
            let tb = dot(sub(self.b, p), r) / rr;
            let (lo, hi) = (ta.min(tb), ta.max(tb));
            return (hi >= 0.0 && lo <= 1.0).then_some(0.0);
        }
        let t = cross(ap, s) / denom;
        let u = cross(ap, r) / denom;
        ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn blocked(p: [f64; 2], q: [f64; 2], walls: &[Wall]) -> bool {
    walls.iter().any(|w| w.hit(p, q).is_some())
}

/// Moves from `p` towards `q`, stopping in front of the first wall hit.
///
/// The stopping point is the intersection pushed `CLEARANCE` back along the
/// wall normal towards `p`. If that point is itself unreachable (corners),
/// the robot stays at `p`. Either way the segment from `p` to the result
/// touches no wall.
pub fn resolve_motion(p: [f64; 2], q: [f64; 2], walls: &[Wall]) -> [f64; 2] {
    let first = walls
        .iter()
        .filter_map(|w| w.hit(p, q).map(|t| (t, w)))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    let Some((t, wall)) = first else {
        return q;
    };
    let hit = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
    let s = sub(wall.b, wall.a);
    let len = dot(s, s).sqrt();
    let normal = [-s[1] / len, s[0] / len];
    let toward_p = if dot(normal, sub(p, wall.a)) >= 0.0 { 1.0 } else { -1.0 };
    let candidate = [
        (hit[0] + toward_p * CLEARANCE * normal[0]).clamp(0.0, 1.0),
        (hit[1] + toward_p * CLEARANCE * normal[1]).clamp(0.0, 1.0),
    ];
    if blocked(p, candidate, walls) {
        p
    } else {
        candidate
    }
}
