//! Closed-form LCA depth and its gradient.
//!
//! [`crate::hyperbolic::lca_depth`] finds the geodesic segment's closest
//! approach to the origin numerically. Training needs that quantity and its
//! gradient millions of times per run, so this module evaluates it in closed
//! form instead; unit tests pin the two routes together to 1e-9.
//!
//! For non-collinear x, y the geodesic lies on a Euclidean circle orthogonal
//! to the unit sphere, with center `c = alpha x + beta y` solving
//! `c . x = (1+|x|^2)/2`, `c . y = (1+|y|^2)/2` in span{x, y}. Writing
//! `m = |c|^2` and `r = sqrt(m - 1)` for the circle radius, the closest
//! point of the full circle sits at Euclidean distance `rho = sqrt(m) - r`
//! from the origin. If that point falls on the segment's arc the depth is
//! `2 artanh(rho)`; otherwise the segment's minimum is at the endpoint of
//! smaller norm.
//!
//! Since `m` depends on the points only through `a = |x|^2`, `b = |y|^2`
//! and `g = x . y`, the gradient reduces to three scalar partials:
//! `dm/da = alpha(1 - alpha)`, `dm/db = beta(1 - beta)`,
//! `dm/dg = -2 alpha beta`.

use crate::hyperbolic::{dot, norm_sq};

pub struct LcaGrad {
    pub depth: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

struct Geometry {
    alpha: f64,
    beta: f64,
    m: f64,
}

enum Case {
    /// Circle minimum lies on the arc.
    Interior(Geometry),
    /// Minimum at the endpoint of smaller norm; true when x is the smaller.
    EndpointX,
    EndpointY,
    /// Segment passes through (or starts at) the origin.
    Origin,
}

fn classify(x: &[f64], y: &[f64]) -> Case {
    let a = norm_sq(x);
    let b = norm_sq(y);
    let g = dot(x, y);
    let det = a * b - g * g;

    let endpoint = || if a <= b { Case::EndpointX } else { Case::EndpointY };

    if a < 1e-24 || b < 1e-24 {
        return Case::Origin;
    }
    // Collinear points: the geodesic is a diameter segment.
    if det <= 1e-14 * a * b {
        return if g >= 0.0 { endpoint() } else { Case::Origin };
    }

    let hx = (1.0 + a) / 2.0;
    let hy = (1.0 + b) / 2.0;
    let alpha = (hx * b - hy * g) / det;
    let beta = (hy * a - hx * g) / det;
    let m = alpha * hx + beta * hy;
    if m <= 1.0 {
        // Numerically possible only for nearly-collinear inputs.
        return if g >= 0.0 { endpoint() } else { Case::Origin };
    }

    // The circle's closest point lies on the arc iff both barycentric arc
    // coefficients are nonnegative, which reduces to these sign tests.
    let s1 = 1.0 - alpha - beta;
    if s1 != 0.0 && alpha / s1 <= 0.0 && beta / s1 <= 0.0 {
        Case::Interior(Geometry { alpha, beta, m })
    } else {
        endpoint()
    }
}

fn depth_of_norm_sq(n_sq: f64) -> f64 {
    2.0 * n_sq.sqrt().atanh()
}

/// LCA depth, value only.
pub fn lca_depth_cf(x: &[f64], y: &[f64]) -> f64 {
    match classify(x, y) {
        Case::Interior(geo) => {
            let rho = geo.m.sqrt() - (geo.m - 1.0).sqrt();
            2.0 * rho.atanh()
        }
        Case::EndpointX => depth_of_norm_sq(norm_sq(x)),
        Case::EndpointY => depth_of_norm_sq(norm_sq(y)),
        Case::Origin => 0.0,
    }
}

/// LCA depth plus its Euclidean gradient with respect to both points.
pub fn lca_depth_with_grad(x: &[f64], y: &[f64]) -> LcaGrad {
    let dim = x.len();
    match classify(x, y) {
        Case::Interior(Geometry { alpha, beta, m }) => {
            let sqrt_m = m.sqrt();
            let r = (m - 1.0).sqrt();
            let rho = sqrt_m - r;
            let depth = 2.0 * rho.atanh();
            // d depth / d m, chained through rho.
            let drho_dm = 0.5 / sqrt_m - 0.5 / r;
            let dd_dm = 2.0 / (1.0 - rho * rho) * drho_dm;
            let dm_da = alpha * (1.0 - alpha);
            let dm_db = beta * (1.0 - beta);
            let dm_dg = -2.0 * alpha * beta;
            let grad_x = (0..dim)
                .map(|i| dd_dm * (2.0 * dm_da * x[i] + dm_dg * y[i]))
                .collect();
            let grad_y = (0..dim)
                .map(|i| dd_dm * (2.0 * dm_db * y[i] + dm_dg * x[i]))
                .collect();
            LcaGrad { depth, grad_x, grad_y }
        }
        Case::EndpointX => {
            let n_sq = norm_sq(x);
            let n = n_sq.sqrt();
            let scale = 2.0 / ((1.0 - n_sq) * n);
            LcaGrad {
                depth: 2.0 * n.atanh(),
                grad_x: x.iter().map(|v| scale * v).collect(),
                grad_y: vec![0.0; dim],
            }
        }
        Case::EndpointY => {
            let n_sq = norm_sq(y);
            let n = n_sq.sqrt();
            let scale = 2.0 / ((1.0 - n_sq) * n);
            LcaGrad {
                depth: 2.0 * n.atanh(),
                grad_x: vec![0.0; dim],
                grad_y: y.iter().map(|v| scale * v).collect(),
            }
        }
        // Nondifferentiable minimum at the origin; a zero subgradient keeps
        // the optimizer stationary there.
        Case::Origin => LcaGrad {
            depth: 0.0,
            grad_x: vec![0.0; dim],
            grad_y: vec![0.0; dim],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{self, test_support::random_ball_point};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_golden_section_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in [2usize, 3, 8] {
            for _ in 0..300 {
                let x = random_ball_point(&mut rng, dim, 0.97);
                let y = random_ball_point(&mut rng, dim, 0.97);
                assert_abs_diff_eq!(
                    lca_depth_cf(&x, &y),
                    hyperbolic::lca_depth(&x, &y),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn endpoint_branch_agrees_with_golden_section() {
        // Nearly-radial pairs exercise the endpoint case.
        let x = vec![0.3, 0.0];
        let y = vec![0.35, 0.05];
        assert_abs_diff_eq!(
            lca_depth_cf(&x, &y),
            hyperbolic::lca_depth(&x, &y),
            epsilon = 1e-9
        );
    }

    #[test]
    fn collinear_cases() {
        let x = vec![0.2, 0.0];
        let same_ray = vec![0.6, 0.0];
        assert_abs_diff_eq!(lca_depth_cf(&x, &same_ray), 2.0 * 0.2f64.atanh(), epsilon = 1e-12);
        let opposite = vec![-0.6, 0.0];
        assert_eq!(lca_depth_cf(&x, &opposite), 0.0);
        let origin = vec![0.0, 0.0];
        assert_eq!(lca_depth_cf(&x, &origin), 0.0);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = 1e-6;
        let mut checked = 0;
        for dim in [2usize, 4] {
            for _ in 0..200 {
                let x = random_ball_point(&mut rng, dim, 0.9);
                let y = random_ball_point(&mut rng, dim, 0.9);
                let g = lca_depth_with_grad(&x, &y);
                assert_abs_diff_eq!(g.depth, lca_depth_cf(&x, &y), epsilon = 1e-12);
                for i in 0..dim {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (lca_depth_cf(&xp, &y) - lca_depth_cf(&xm, &y)) / (2.0 * h);
                    assert_abs_diff_eq!(g.grad_x[i], fd, epsilon = 1e-5 * (1.0 + fd.abs()));
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[i] += h;
                    ym[i] -= h;
                    let fd = (lca_depth_cf(&x, &yp) - lca_depth_cf(&x, &ym)) / (2.0 * h);
                    assert_abs_diff_eq!(g.grad_y[i], fd, epsilon = 1e-5 * (1.0 + fd.abs()));
                }
                checked += 1;
            }
        }
        assert_eq!(checked, 400);
    }

    #[test]
    fn symmetric_in_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let x = random_ball_point(&mut rng, 3, 0.95);
            let y = random_ball_point(&mut rng, 3, 0.95);
            assert_abs_diff_eq!(lca_depth_cf(&x, &y), lca_depth_cf(&y, &x), epsilon = 1e-12);
        }
    }
}
