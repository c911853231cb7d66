use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A real 2x2 matrix acting on phase-plane displacements `(dp, dq)`.
///
/// Rows are `(dp', dq')`, columns `(dp, dq)`, so the free flow for time `t`
/// reads `[[1, 0], [t, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentMatrix(pub [[f64; 2]; 2]);

impl Default for TangentMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl TangentMatrix {
    pub const fn new(pp: f64, pq: f64, qp: f64, qq: f64) -> Self {
        Self([[pp, pq], [qp, qq]])
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn pp(&self) -> f64 {
        self.0[0][0]
    }
    pub fn pq(&self) -> f64 {
        self.0[0][1]
    }
    pub fn qp(&self) -> f64 {
        self.0[1][0]
    }
    pub fn qq(&self) -> f64 {
        self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.pp() * self.qq() - self.pq() * self.qp()
    }

    pub fn trace(&self) -> f64 {
        self.pp() + self.qq()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        (self.det() - 1.0).abs() < tol
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.qq() / d, -self.pq() / d, -self.qp() / d, self.pp() / d)
    }

    /// Image of the displacement `(dp, dq)`.
    pub fn apply(&self, dp: f64, dq: f64) -> (f64, f64) {
        (
            self.pp() * dp + self.pq() * dq,
            self.qp() * dp + self.qq() * dq,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.pp() - other.pp(),
            self.pq() - other.pq(),
            self.qp() - other.qp(),
            self.qq() - other.qq(),
        )
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Operator norm induced by the Euclidean norm.
    pub fn spectral_norm(&self) -> f64 {
        let (a, b, c, d) = (self.pp(), self.pq(), self.qp(), self.qq());
        0.5 * ((a + d).hypot(c - b) + (a - d).hypot(b + c))
    }

    /// Same map with rows and columns ordered `(q, p)`.
    pub fn to_qp_order(&self) -> [[f64; 2]; 2] {
        [[self.qq(), self.qp()], [self.pq(), self.pp()]]
    }
}

impl Mul for TangentMatrix {
    type Output = TangentMatrix;

    fn mul(self, rhs: TangentMatrix) -> TangentMatrix {
        let a = self.0;
        let b = rhs.0;
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TangentMatrix(c)
    }
}
