//! Small real 2×2 matrices.

use crate::geometry::Point2;

/// Real symmetric 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn scalar(c: f64) -> Self {
        Self { xx: c, xy: 0.0, yy: c }
    }

    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn scale(&self, c: f64) -> Sym2 {
        Sym2::new(self.xx * c, self.xy * c, self.yy * c)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        (m - d, m + d)
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.xx - o.xx).abs().max((self.xy - o.xy).abs()).max((self.yy - o.yy).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// General real 2×2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(self.m[0][0] * v.x + self.m[0][1] * v.y, self.m[1][0] * v.x + self.m[1][1] * v.y)
    }

    /// `self · a · selfᵀ`, symmetrised.
    pub fn congruence(&self, a: &Sym2) -> Sym2 {
        let p = &self.m;
        let row = |i: usize| Point2::new(p[i][0], p[i][1]);
        let (r0, r1) = (row(0), row(1));
        let (a0, a1) = (a.apply(r0), a.apply(r1));
        let xy = 0.5 * (r0.dot(a1) + r1.dot(a0));
        Sym2::new(r0.dot(a0), xy, r1.dot(a1))
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn congruence_of_rotation_preserves_identity() {
        let (s, c) = 0.3f64.sin_cos();
        let r = Mat2::new(c, -s, s, c);
        assert!(r.congruence(&Sym2::IDENTITY).max_abs_diff(&Sym2::IDENTITY) < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let a = Mat2::new(2.0, 1.0, -0.5, 3.0);
        let p = a.mul(&a.inverse().unwrap());
        assert!(p.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        assert_eq!(Sym2::new(3.0, 0.0, 1.0).eigenvalues(), (1.0, 3.0));
    }
}
