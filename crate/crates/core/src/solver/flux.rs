//! Conservative 3x3 stencil for `div(Du/W) + D1 u / W`.
//!
//! Face gradients: the normal component is a two-point difference across
//! the face, the tangential component averages the two adjacent central
//! differences. The source term uses the central gradient at the node.

use crate::grid::GridSpec;

/// Stencil values `u[di + 1][dj + 1]` around a node.
pub(crate) type Block = [[f64; 3]; 3];

struct Face {
    sign: f64,
    axis: usize,
    /// Weights of `(P1, P2)` in units of `1/h`.
    weights: [Block; 2],
}

fn block(entries: &[(isize, isize, f64)]) -> Block {
    let mut b = [[0.0; 3]; 3];
    for &(di, dj, w) in entries {
        b[(di + 1) as usize][(dj + 1) as usize] += w;
    }
    b
}

fn faces() -> [Face; 4] {
    let q = 0.25;
    [
        Face {
            sign: 1.0,
            axis: 0,
            weights: [block(&[(1, 0, 1.0), (0, 0, -1.0)]), block(&[(1, 1, q), (0, 1, q), (1, -1, -q), (0, -1, -q)])],
        },
        Face {
            sign: -1.0,
            axis: 0,
            weights: [block(&[(0, 0, 1.0), (-1, 0, -1.0)]), block(&[(0, 1, q), (-1, 1, q), (0, -1, -q), (-1, -1, -q)])],
        },
        Face {
            sign: 1.0,
            axis: 1,
            weights: [block(&[(1, 1, q), (1, 0, q), (-1, 1, -q), (-1, 0, -q)]), block(&[(0, 1, 1.0), (0, 0, -1.0)])],
        },
        Face {
            sign: -1.0,
            axis: 1,
            weights: [block(&[(1, 0, q), (1, -1, q), (-1, 0, -q), (-1, -1, -q)]), block(&[(0, 0, 1.0), (0, -1, -1.0)])],
        },
    ]
}

fn apply(w: &Block, u: &Block) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += w[a][b] * u[a][b];
        }
    }
    s
}

/// Gathers the 3x3 block around `(i, j)`; `None` if it leaves the grid.
pub(crate) fn gather(values: &[f64], grid: &GridSpec, i: usize, j: usize) -> Option<Block> {
    let mut b = [[0.0; 3]; 3];
    for dj in -1..=1isize {
        for di in -1..=1isize {
            b[(di + 1) as usize][(dj + 1) as usize] = values[grid.offset(i, j, di, dj)?];
        }
    }
    Some(b)
}

#[inline]
fn weight(p: [f64; 2]) -> f64 {
    (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Central gradient at the block center.
pub(crate) fn central_gradient(u: &Block, h: f64) -> [f64; 2] {
    [(u[2][1] - u[0][1]) / (2.0 * h), (u[1][2] - u[1][0]) / (2.0 * h)]
}

/// Discrete `div(Du/W)`.
pub(crate) fn divergence(u: &Block, h: f64) -> f64 {
    let mut s = 0.0;
    for f in faces().iter() {
        let p = [apply(&f.weights[0], u) / h, apply(&f.weights[1], u) / h];
        s += f.sign * p[f.axis] / weight(p);
    }
    s / h
}

/// Discrete translator residual `div(Du/W) + D1 u / W`.
pub(crate) fn residual(u: &Block, h: f64) -> f64 {
    let p = central_gradient(u, h);
    divergence(u, h) + p[0] / weight(p)
}

/// Residual together with its derivative with respect to each block value.
pub(crate) fn residual_jacobian(u: &Block, h: f64) -> (f64, Block) {
    let mut jac = [[0.0; 3]; 3];
    let mut r = 0.0;
    for f in faces().iter() {
        let p = [apply(&f.weights[0], u) / h, apply(&f.weights[1], u) / h];
        let w = weight(p);
        let w3 = w * w * w;
        r += f.sign * p[f.axis] / w;
        // row `axis` of DA(p) = I/W - p p^T / W^3
        let k = f.axis;
        let da = [
            if k == 0 { 1.0 / w } else { 0.0 } - p[k] * p[0] / w3,
            if k == 1 { 1.0 / w } else { 0.0 } - p[k] * p[1] / w3,
        ];
        let scale = f.sign / (h * h);
        for a in 0..3 {
            for b in 0..3 {
                jac[a][b] += scale * (da[0] * f.weights[0][a][b] + da[1] * f.weights[1][a][b]);
            }
        }
    }
    r /= h;
    let p = central_gradient(u, h);
    let w = weight(p);
    let w3 = w * w * w;
    r += p[0] / w;
    let d = [1.0 / w - p[0] * p[0] / w3, -p[0] * p[1] / w3];
    let c = 1.0 / (2.0 * h);
    jac[2][1] += d[0] * c;
    jac[0][1] -= d[0] * c;
    jac[1][2] += d[1] * c;
    jac[1][0] -= d[1] * c;
    (r, jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64, f64) -> f64, h: f64, x: f64, y: f64) -> Block {
        let mut b = [[0.0; 3]; 3];
        for a in 0..3 {
            for c in 0..3 {
                b[a][c] = f(x + (a as f64 - 1.0) * h, y + (c as f64 - 1.0) * h);
            }
        }
        b
    }

    #[test]
    fn affine_data_has_zero_divergence() {
        let u = sample(|x, y| 0.3 * x - 1.7 * y + 2.0, 0.1, 0.4, -0.2);
        assert!(divergence(&u, 0.1).abs() < 1e-13);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = 0.2;
        let u = sample(|x, y| (x * 1.3).sin() + x * y * y - 0.5 * y, h, 0.3, 0.7);
        let (r0, jac) = residual_jacobian(&u, h);
        assert!((r0 - residual(&u, h)).abs() < 1e-13);
        let eps = 1e-6;
        for a in 0..3 {
            for b in 0..3 {
                let mut up = u;
                let mut dn = u;
                up[a][b] += eps;
                dn[a][b] -= eps;
                let fd = (residual(&up, h) - residual(&dn, h)) / (2.0 * eps);
                assert!((fd - jac[a][b]).abs() < 1e-6 * (1.0 + fd.abs()), "{a}{b}: {fd} vs {}", jac[a][b]);
            }
        }
    }

    #[test]
    fn paraboloid_divergence_is_second_order() {
        // u = (x^2 + y^2) / 2 at origin: div(Du/W) = 2
        let err = |h: f64| (divergence(&sample(|x, y| 0.5 * (x * x + y * y), h, 0.0, 0.0), h) - 2.0).abs();
        let order = (err(0.1) / err(0.05)).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
    }
}
