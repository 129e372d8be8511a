//! Poincaré ball geometry at curvature -1: distances, geodesics, LCA depth,
//! projection and Riemannian gradient conversion.
//!
//! Points are plain `f64` slices with Euclidean norm strictly below 1.
//! Geodesics are parameterized through Möbius operations so that
//! `d(x, gamma(t)) = t * d(x, y)`.

use crate::error::{Error, Result};

/// Default max-norm clamp: projected points satisfy `norm <= 1 - EPS_BALL`,
/// keeping conformal factors finite.
pub const EPS_BALL: f64 = 1e-5;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

fn check_inside(x: &[f64]) -> Result<()> {
    if norm_sq(x) >= 1.0 {
        return Err(Error::NumericDomain(format!(
            "point has norm {} >= 1",
            norm(x)
        )));
    }
    Ok(())
}

/// Hyperbolic distance: `arcosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))`.
pub fn distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inside(x)?;
    check_inside(y)?;
    let diff_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let arg = 1.0 + 2.0 * diff_sq / ((1.0 - norm_sq(x)) * (1.0 - norm_sq(y)));
    Ok(arg.acosh())
}

/// Distance from the origin, via the radial identity `2 artanh(|x|)`.
pub fn dist_to_origin(x: &[f64]) -> f64 {
    2.0 * norm(x).atanh()
}

/// Möbius addition on the curvature -1 ball.
pub fn mobius_add(u: &[f64], v: &[f64]) -> Vec<f64> {
    let uv = dot(u, v);
    let uu = norm_sq(u);
    let vv = norm_sq(v);
    let denom = 1.0 + 2.0 * uv + uu * vv;
    let cu = (1.0 + 2.0 * uv + vv) / denom;
    let cv = (1.0 - uu) / denom;
    u.iter().zip(v).map(|(a, b)| cu * a + cv * b).collect()
}

/// Möbius scalar multiplication: `tanh(r artanh|v|) v / |v|`.
pub fn mobius_scalar(r: f64, v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        return v.to_vec();
    }
    let scale = (r * n.atanh()).tanh() / n;
    v.iter().map(|a| scale * a).collect()
}

/// Point at parameter `t` on the geodesic with `gamma(0) = x`,
/// `gamma(1) = y`.
pub fn geodesic_point(x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
    check_inside(x)?;
    check_inside(y)?;
    let neg_x: Vec<f64> = x.iter().map(|a| -a).collect();
    let w = mobius_add(&neg_x, y);
    Ok(mobius_add(x, &mobius_scalar(t, &w)))
}

/// `min_t |gamma(t)|^2` by golden-section search; the origin distance along
/// a geodesic segment is unimodal in `t`.
fn min_norm_sq_on_geodesic(x: &[f64], y: &[f64]) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let f = |t: f64| {
        let neg_x: Vec<f64> = x.iter().map(|a| -a).collect();
        let w = mobius_add(&neg_x, y);
        norm_sq(&mobius_add(x, &mobius_scalar(t, &w)))
    };
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(a)).min(f(b))
}

/// Depth of the implied least common ancestor: the hyperbolic distance from
/// the origin to the geodesic segment's closest approach.
pub fn lca_depth(x: &[f64], y: &[f64]) -> f64 {
    if x == y {
        return dist_to_origin(x);
    }
    2.0 * min_norm_sq_on_geodesic(x, y).sqrt().atanh()
}

/// Clamp a point to norm at most `1 - eps_ball`, leaving interior points
/// untouched.
pub fn project(x: &[f64], eps_ball: f64) -> Vec<f64> {
    assert!(eps_ball > 0.0 && eps_ball < 1.0);
    let n = norm(x);
    let max_norm = 1.0 - eps_ball;
    if n <= max_norm {
        x.to_vec()
    } else {
        x.iter().map(|a| a * max_norm / n).collect()
    }
}

/// Convert a Euclidean gradient at `x` into the Riemannian gradient by the
/// squared inverse conformal factor `((1 - |x|^2) / 2)^2`.
pub fn riemannian_grad(euclidean_grad: &[f64], x: &[f64]) -> Vec<f64> {
    let scale = {
        let f = (1.0 - norm_sq(x)) / 2.0;
        f * f
    };
    euclidean_grad.iter().map(|g| scale * g).collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Random point with norm at most `max_norm`, radius uniform in volume.
    pub fn random_ball_point(rng: &mut ChaCha8Rng, dim: usize, max_norm: f64) -> Vec<f64> {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = super::norm(&dir);
        let radius = max_norm * rng.gen::<f64>().powf(1.0 / dim as f64);
        dir.iter().map(|a| a * radius / n.max(1e-300)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use test_support::random_ball_point;

    #[test]
    fn distance_at_origin_is_zero() {
        let o = vec![0.0, 0.0, 0.0];
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
    }

    #[test]
    fn radial_closed_form() {
        let o = vec![0.0, 0.0];
        let x = vec![0.5, 0.0];
        let d = distance(&o, &x).unwrap();
        assert_abs_diff_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 1.0986123, epsilon = 1e-7);
    }

    #[test]
    fn radial_identity_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let x = random_ball_point(&mut rng, 5, 0.999);
            let o = vec![0.0; 5];
            assert_abs_diff_eq!(
                distance(&o, &x).unwrap(),
                2.0 * norm(&x).atanh(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let x = random_ball_point(&mut rng, 4, 0.99);
            let y = random_ball_point(&mut rng, 4, 0.99);
            assert_eq!(distance(&x, &y).unwrap(), distance(&y, &x).unwrap());
        }
    }

    #[test]
    fn distance_rejects_points_outside_ball() {
        let x = vec![1.0, 0.0];
        let o = vec![0.0, 0.0];
        assert!(matches!(distance(&x, &o), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn geodesic_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let x = random_ball_point(&mut rng, 3, 0.95);
            let y = random_ball_point(&mut rng, 3, 0.95);
            let g0 = geodesic_point(&x, &y, 0.0).unwrap();
            let g1 = geodesic_point(&x, &y, 1.0).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(g0[i], x[i], epsilon = 1e-12);
                assert_abs_diff_eq!(g1[i], y[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn antipodal_midpoint_is_origin() {
        let x = vec![0.4, -0.2, 0.1];
        let neg_x: Vec<f64> = x.iter().map(|a| -a).collect();
        let mid = geodesic_point(&x, &neg_x, 0.5).unwrap();
        assert_abs_diff_eq!(norm(&mid), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let x = random_ball_point(&mut rng, 4, 0.95);
            let y = random_ball_point(&mut rng, 4, 0.95);
            let t = rand::Rng::gen::<f64>(&mut rng);
            let g = geodesic_point(&x, &y, t).unwrap();
            let total = distance(&x, &y).unwrap();
            let left = distance(&x, &g).unwrap();
            let right = distance(&g, &y).unwrap();
            assert_abs_diff_eq!(left + right, total, epsilon = 1e-9);
            assert_abs_diff_eq!(left, t * total, epsilon = 1e-9);
        }
    }

    #[test]
    fn lca_depth_of_identical_points() {
        let x = vec![0.3, 0.4];
        assert_abs_diff_eq!(lca_depth(&x, &x), dist_to_origin(&x), epsilon = 1e-12);
    }

    #[test]
    fn lca_depth_of_antipodal_points_is_zero() {
        let x = vec![0.5, 0.2];
        let neg_x: Vec<f64> = x.iter().map(|a| -a).collect();
        assert_abs_diff_eq!(lca_depth(&x, &neg_x), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn lca_depth_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let x = random_ball_point(&mut rng, 3, 0.95);
            let y = random_ball_point(&mut rng, 3, 0.95);
            let mut best = f64::INFINITY;
            for k in 0..=100_000 {
                let t = k as f64 / 100_000.0;
                let g = geodesic_point(&x, &y, t).unwrap();
                best = best.min(dist_to_origin(&g));
            }
            assert_abs_diff_eq!(lca_depth(&x, &y), best, epsilon = 1e-4);
        }
    }

    #[test]
    fn lca_depth_bounded_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let x = random_ball_point(&mut rng, 4, 0.95);
            let y = random_ball_point(&mut rng, 4, 0.95);
            let d = lca_depth(&x, &y);
            assert!(d <= dist_to_origin(&x).min(dist_to_origin(&y)) + 1e-9);
            assert_abs_diff_eq!(d, lca_depth(&y, &x), epsilon = 1e-9);
        }
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let x = random_ball_point(&mut rng, 4, 0.99);
            let y = random_ball_point(&mut rng, 4, 0.99);
            let z = random_ball_point(&mut rng, 4, 0.99);
            let xz = distance(&x, &z).unwrap();
            let xy = distance(&x, &y).unwrap();
            let yz = distance(&y, &z).unwrap();
            assert!(xz <= xy + yz + 1e-9);
        }
    }

    #[test]
    fn project_leaves_interior_untouched() {
        let x = vec![0.5, 0.0];
        assert_eq!(project(&x, 1e-5), x);
    }

    #[test]
    fn project_clamps_to_max_norm() {
        let x = vec![2.0, 0.0];
        let p = project(&x, 1e-5);
        assert_abs_diff_eq!(norm(&p), 1.0 - 1e-5, epsilon = 1e-15);
    }

    #[test]
    fn riemannian_grad_at_origin_scales_by_quarter() {
        let g = vec![4.0, -8.0];
        let o = vec![0.0, 0.0];
        assert_eq!(riemannian_grad(&g, &o), vec![1.0, -2.0]);
    }
}
