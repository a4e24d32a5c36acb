//! Small dense-vector helpers shared by the solvers. Vectors are plain slices
//! so that configuration storage can stay flat.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
}

/// Unit vector, or `None` when the input is (numerically) zero.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Unit vector from `from` towards `to`.
pub fn unit_towards(from: &[f64], to: &[f64]) -> Option<Vec<f64>> {
    normalized(&sub(to, from))
}

/// Component of `a` orthogonal to the unit vector `u`.
pub fn reject(a: &[f64], u: &[f64]) -> Vec<f64> {
    axpy(a, -dot(a, u), u)
}

/// Angle between two vectors in `[0, pi]`.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b) / (norm(a) * norm(b));
    c.clamp(-1.0, 1.0).acos()
}

/// Counterclockwise rotation in the plane.
pub fn rotate2(v: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    vec![c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Counterclockwise angle from `a` to `b` in `[0, 2pi)`.
pub fn ccw_angle(a: &[f64], b: &[f64]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let d = a[0] * b[0] + a[1] * b[1];
    let t = cross.atan2(d);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

/// Twice the signed area of the triangle `a, b, c` (positive when counterclockwise).
pub fn orient2(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Unit vector orthogonal to the unit vector `u`, built from the first
/// coordinate axis that is not parallel to `u`.
pub fn orthogonal_unit(u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let mut best: Option<Vec<f64>> = None;
    for axis in 0..d {
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        let r = reject(&e, u);
        if norm(&r) > 1e-6 {
            return normalized(&r).expect("nonzero rejection");
        }
        if best.is_none() {
            best = normalized(&r);
        }
    }
    best.unwrap_or_else(|| {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    })
}

/// Spherical linear interpolation between unit vectors. Falls back to a
/// normalized chord when the endpoints are nearly identical; antipodal inputs
/// rotate through an arbitrary orthogonal direction.
pub fn slerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let c = dot(a, b).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta < 1e-9 {
        return normalized(&lerp(a, b, t)).unwrap_or_else(|| a.to_vec());
    }
    if std::f64::consts::PI - theta < 1e-9 {
        let o = orthogonal_unit(a);
        let phi = t * std::f64::consts::PI;
        return axpy(&scale(a, phi.cos()), phi.sin(), &o);
    }
    let s = theta.sin();
    let wa = ((1.0 - t) * theta).sin() / s;
    let wb = (t * theta).sin() / s;
    axpy(&scale(a, wa), wb, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ccw_angle_quadrants() {
        assert!((ccw_angle(&[1.0, 0.0], &[0.0, 1.0]) - PI / 2.0).abs() < 1e-15);
        assert!((ccw_angle(&[1.0, 0.0], &[0.0, -1.0]) - 1.5 * PI).abs() < 1e-15);
        assert!((ccw_angle(&[1.0, 0.0], &[-1.0, 0.0]) - PI).abs() < 1e-15);
    }

    #[test]
    fn slerp_endpoints_and_norm() {
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 0.0, 1.0];
        assert_eq!(slerp(&a, &b, 0.0), a.to_vec());
        let m = slerp(&a, &b, 0.5);
        assert!((norm(&m) - 1.0).abs() < 1e-14);
        assert!((m[0] - m[2]).abs() < 1e-14);
        let anti = slerp(&a, &[-1.0, 0.0, 0.0], 0.5);
        assert!((norm(&anti) - 1.0).abs() < 1e-14);
        assert!(dot(&anti, &a).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_unit_is_orthogonal() {
        for u in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.8, 0.0]] {
            let o = orthogonal_unit(&u);
            assert!(dot(&o, &u).abs() < 1e-15);
            assert!((norm(&o) - 1.0).abs() < 1e-15);
        }
    }
}
