//! Shortest bounded-curvature paths in the plane.

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Word {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl Word {
    pub const ALL: [Word; 6] = [Word::Lsl, Word::Rsr, Word::Lsr, Word::Rsl, Word::Rlr, Word::Lrl];

    pub fn segments(self) -> [Segment; 3] {
        use Segment::*;
        match self {
            Word::Lsl => [Left, Straight, Left],
            Word::Rsr => [Right, Straight, Right],
            Word::Lsr => [Left, Straight, Right],
            Word::Rsl => [Right, Straight, Left],
            Word::Rlr => [Right, Left, Right],
            Word::Lrl => [Left, Right, Left],
        }
    }
}

/// Planar pose `(x, y, heading)`.
pub type Pose2 = (f64, f64, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsPath {
    pub start: Pose2,
    pub radius: f64,
    pub word: Word,
    /// Segment lengths normalized by the turn radius.
    pub params: [f64; 3],
}

fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Normalized segment lengths of `word` for the canonical problem, if the word exists.
fn word_params(word: Word, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cab = (alpha - beta).cos();
    match word {
        Word::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(-alpha + tmp), p2.sqrt(), mod2pi(beta - tmp)])
        }
        Word::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - tmp), p2.sqrt(), mod2pi(-beta + tmp)])
        }
        Word::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(-alpha + tmp), p, mod2pi(-beta + tmp)])
        }
        Word::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        Word::Rlr => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(alpha - (ca - cb).atan2(d - sa + sb) + p / 2.0);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        Word::Lrl => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(-alpha - (ca - cb).atan2(d + sa - sb) + p / 2.0);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// Advances a planar pose along one unit-radius segment of normalized length `t`.
pub fn advance(seg: Segment, (x, y, h): Pose2, t: f64) -> Pose2 {
    match seg {
        Segment::Left => (x + (h + t).sin() - h.sin(), y - (h + t).cos() + h.cos(), h + t),
        Segment::Right => (x - (h - t).sin() + h.sin(), y + (h - t).cos() - h.cos(), h - t),
        Segment::Straight => (x + t * h.cos(), y + t * h.sin(), h),
    }
}

impl DubinsPath {
    /// Candidate paths for every word that exists, each checked by forward
    /// integration to land on `goal` within `1e-6` (relative to the radius).
    pub fn candidates(start: Pose2, goal: Pose2, radius: f64) -> Vec<DubinsPath> {
        assert!(radius > 0.0);
        let dx = goal.0 - start.0;
        let dy = goal.1 - start.1;
        let d = dx.hypot(dy) / radius;
        let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
        let alpha = mod2pi(start.2 - theta);
        let beta = mod2pi(goal.2 - theta);
        Word::ALL
            .iter()
            .filter_map(|&word| {
                let params = word_params(word, alpha, beta, d)?;
                if params.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                let path = DubinsPath {
                    start,
                    radius,
                    word,
                    params,
                };
                let end = path.sample(path.length());
                let err = (end.0 - goal.0).hypot(end.1 - goal.1) / radius;
                let herr = (mod2pi(end.2 - goal.2 + std::f64::consts::PI) - std::f64::consts::PI).abs();
                (err < 1e-6 && herr < 1e-6).then_some(path)
            })
            .collect()
    }

    /// Shortest valid word, ties broken by word order.
    pub fn shortest(start: Pose2, goal: Pose2, radius: f64) -> Option<DubinsPath> {
        Self::candidates(start, goal, radius)
            .into_iter()
            .fold(None, |best: Option<DubinsPath>, p| match best {
                Some(b) if b.length() <= p.length() => Some(b),
                _ => Some(p),
            })
    }

    pub fn length(&self) -> f64 {
        self.params.iter().sum::<f64>() * self.radius
    }

    /// Pose at arc length `s` (clamped to the path).
    pub fn sample(&self, s: f64) -> Pose2 {
        let mut rem = (s / self.radius).clamp(0.0, self.params.iter().sum());
        let mut q = (0.0, 0.0, self.start.2);
        for (seg, &len) in self.word.segments().iter().zip(&self.params) {
            let t = rem.min(len);
            q = advance(*seg, q, t);
            rem -= t;
            if rem <= 0.0 {
                break;
            }
        }
        (self.start.0 + q.0 * self.radius, self.start.1 + q.1 * self.radius, q.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_ahead() {
        let p = DubinsPath::shortest((0.0, 0.0, 0.0), (10.0, 0.0, 0.0), 0.5).unwrap();
        assert!((p.length() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn u_turn_is_half_circle() {
        // goal one diameter to the left, heading reversed
        let p = DubinsPath::shortest((0.0, 0.0, 0.0), (0.0, 2.0, std::f64::consts::PI), 1.0).unwrap();
        assert!((p.length() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn every_candidate_lands_on_goal() {
        let goal = (1.3, -0.7, 2.2);
        for p in DubinsPath::candidates((0.2, 0.1, -0.4), goal, 0.8) {
            let e = p.sample(p.length());
            assert!((e.0 - goal.0).abs() < 1e-9 && (e.1 - goal.1).abs() < 1e-9, "{:?}", p.word);
        }
    }
}
