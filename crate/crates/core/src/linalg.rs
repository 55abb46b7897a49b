//! Small fixed-size matrix helpers on plain arrays.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Mat4 = [[f64; 4]; 4];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
pub const IDENTITY4: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

#[inline]
pub fn mat3_mul_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn transpose3(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[c][r] = m[r][c];
        }
    }
    out
}

/// Largest absolute entry of `MᵀM − I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    let mtm = mat3_mul(&transpose3(m), m);
    let mut worst: f64 = 0.0;
    for (r, row) in mtm.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let expected = if r == c { 1.0 } else { 0.0 };
            worst = worst.max(libm::fabs(v - expected));
        }
    }
    worst
}

/// Applies a homogeneous 4×4 transform to a 3D point (w = 1).
#[inline]
pub fn transform_point(m: &Mat4, p: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
    }
    out
}

pub fn rotation_part(m: &Mat4) -> Mat3 {
    [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ]
}

pub fn compose_rigid(rotation: &Mat3, translation: &Vec3) -> Mat4 {
    let mut m = IDENTITY4;
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = rotation[r][c];
        }
        m[r][3] = translation[r];
    }
    m
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(v: &Vec3) -> f64 {
    libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_orthonormal() {
        for angle in [0.0, 0.3, 1.7, -2.9] {
            assert!(orthonormality_error(&rot_x(angle)) < 1e-12);
            assert!(orthonormality_error(&rot_y(angle)) < 1e-12);
            assert!(orthonormality_error(&rot_z(angle)) < 1e-12);
        }
        let mut scaled = IDENTITY3;
        scaled[0][0] = 2.0;
        assert!((orthonormality_error(&scaled) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_transform_applies_translation_after_rotation() {
        let m = compose_rigid(&rot_z(core::f64::consts::FRAC_PI_2), &[1.0, 2.0, 3.0]);
        let p = transform_point(&m, &[1.0, 0.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!((p[1] - 3.0).abs() < 1e-12);
        assert!((p[2] - 3.0).abs() < 1e-12);
    }
}
