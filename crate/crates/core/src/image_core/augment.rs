use serde::{Deserialize, Serialize};

use super::{Cutout, Plane};

/// An element of the dihedral group of the square: optional horizontal and
/// vertical mirrors followed by `quarter_turns` counter-clockwise rotations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Augmentation {
    pub flip_h: bool,
    pub flip_v: bool,
    pub quarter_turns: u8,
}

impl Augmentation {
    pub fn new(flip_h: bool, flip_v: bool, quarter_turns: u8) -> Self {
        Self {
            flip_h,
            flip_v,
            quarter_turns: quarter_turns % 4,
        }
    }

    /// All 16 parameter combinations (each group element appears twice).
    pub fn all() -> impl Iterator<Item = Augmentation> {
        (0..16u8).map(|k| Augmentation::new(k & 1 != 0, k & 2 != 0, k >> 2))
    }

    pub fn is_identity(&self) -> bool {
        // flip_h + flip_v is a half turn.
        let turns = (self.quarter_turns + if self.flip_h && self.flip_v { 2 } else { 0 }) % 4;
        self.flip_h == self.flip_v && turns == 0
    }

    /// Source coordinate of output pixel `(i, j)` on an `n x n` grid.
    fn source(&self, i: usize, j: usize, n: usize) -> (usize, usize) {
        // Undo the rotation: a CCW turn maps out[i][j] = in[j][n-1-i].
        let (mut r, mut c) = (i, j);
        for _ in 0..self.quarter_turns % 4 {
            (r, c) = (c, n - 1 - r);
        }
        if self.flip_v {
            r = n - 1 - r;
        }
        if self.flip_h {
            c = n - 1 - c;
        }
        (r, c)
    }

    pub fn apply_plane(&self, p: &Plane) -> Plane {
        assert_eq!(p.height(), p.width(), "augmentation needs square planes");
        let n = p.height();
        Plane::from_fn(n, n, |i, j| {
            let (r, c) = self.source(i, j, n);
            p.get(r, c)
        })
    }

    /// Transform every band of `c` identically.
    pub fn apply(&self, c: &Cutout) -> Cutout {
        let bands = c.bands().iter().map(|b| self.apply_plane(b)).collect();
        c.with_bands(bands, c.pixel_scale())
            .expect("dihedral transform preserves cutout invariants")
    }
}

/// Apply flips and counter-clockwise quarter turns to a cutout.
pub fn augment(c: &Cutout, flip_h: bool, flip_v: bool, quarter_turns: u8) -> Cutout {
    Augmentation::new(flip_h, flip_v, quarter_turns).apply(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Plane {
        Plane::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn quarter_turn_is_counter_clockwise() {
        let out = Augmentation::new(false, false, 1).apply_plane(&square());
        assert_eq!(out.data(), &[2.0, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn four_turns_and_double_flip_are_identity() {
        let p = Plane::from_fn(5, 5, |i, j| (i * 5 + j) as f64);
        let turn = Augmentation::new(false, false, 1);
        let mut q = p.clone();
        for _ in 0..4 {
            q = turn.apply_plane(&q);
        }
        assert_eq!(q, p);
        let flip = Augmentation::new(true, false, 0);
        assert_eq!(flip.apply_plane(&flip.apply_plane(&p)), p);
        let vflip = Augmentation::new(false, true, 0);
        assert_eq!(vflip.apply_plane(&vflip.apply_plane(&p)), p);
    }

    #[test]
    fn identity_detection_matches_action() {
        let p = Plane::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        for a in Augmentation::all() {
            assert_eq!(a.is_identity(), a.apply_plane(&p) == p, "{a:?}");
        }
    }
}
