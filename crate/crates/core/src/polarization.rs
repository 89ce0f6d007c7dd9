//! Jones vectors, 2x2 Jones matrices and the multi-rail state container.
//!
//! Amplitudes are classical field amplitudes and intensities are squared
//! moduli. For the linear elements used here the single-photon expectation
//! values coincide with these classical intensities.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, snapped_sin_cos, to_f64, Real};

fn finite<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// A two-component complex polarization amplitude in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector<T> {
    amp_h: Complex<T>,
    amp_v: Complex<T>,
}

impl<T: Real> JonesVector<T> {
    pub fn new(amp_h: Complex<T>, amp_v: Complex<T>) -> Result<Self> {
        if ![amp_h, amp_v].iter().all(finite) {
            return Err(Error::NonFinite("Jones vector"));
        }
        Ok(Self { amp_h, amp_v })
    }

    /// Builds a unit-intensity vector by rescaling `(amp_h, amp_v)`.
    pub fn normalized(amp_h: Complex<T>, amp_v: Complex<T>) -> Result<Self> {
        let v = Self::new(amp_h, amp_v)?;
        let norm = v.intensity().sqrt();
        if norm == T::zero() {
            return Err(Error::ZeroVector);
        }
        Ok(v.scale(T::one() / norm))
    }

    pub fn from_real(h: T, v: T) -> Result<Self> {
        Self::new(Complex::new(h, T::zero()), Complex::new(v, T::zero()))
    }

    /// Skips the finiteness check; callers propagate already-finite values.
    pub(crate) fn from_parts(amp_h: Complex<T>, amp_v: Complex<T>) -> Self {
        Self { amp_h, amp_v }
    }

    pub fn zero() -> Self {
        Self::from_parts(Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    pub fn horizontal() -> Self {
        Self::from_parts(Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    pub fn vertical() -> Self {
        Self::from_parts(Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    /// +45 degree linear polarization.
    pub fn diagonal() -> Self {
        let a = T::FRAC_1_SQRT_2();
        Self::from_parts(Complex::new(a, T::zero()), Complex::new(a, T::zero()))
    }

    /// -45 degree linear polarization.
    pub fn antidiagonal() -> Self {
        let a = T::FRAC_1_SQRT_2();
        Self::from_parts(Complex::new(a, T::zero()), Complex::new(-a, T::zero()))
    }

    /// Linear polarization at `angle` from horizontal.
    pub fn linear(angle: T) -> Self {
        let (s, c) = snapped_sin_cos(angle);
        Self::from_parts(Complex::new(c, T::zero()), Complex::new(s, T::zero()))
    }

    pub fn amp_h(&self) -> Complex<T> {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex<T> {
        self.amp_v
    }

    pub fn intensity(&self) -> T {
        self.amp_h.norm_sqr() + self.amp_v.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.intensity() - T::one()).abs() <= T::tolerance()
    }

    pub fn is_zero(&self) -> bool {
        self.amp_h.norm_sqr() == T::zero() && self.amp_v.norm_sqr() == T::zero()
    }

    pub fn scale(&self, k: T) -> Self {
        Self::from_parts(self.amp_h * k, self.amp_v * k)
    }

    pub fn scale_complex(&self, k: Complex<T>) -> Self {
        Self::from_parts(self.amp_h * k, self.amp_v * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_parts(self.amp_h + other.amp_h, self.amp_v + other.amp_v)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }

    /// The state orthogonal to `self` with the same intensity.
    pub fn orthogonal(&self) -> Self {
        Self::from_parts(-self.amp_v.conj(), self.amp_h.conj())
    }

    pub fn max_component_diff(&self, other: &Self) -> T {
        (self.amp_h - other.amp_h)
            .norm()
            .max((self.amp_v - other.amp_v).norm())
    }
}

impl<T: Real> fmt::Display for JonesVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.amp_h, self.amp_v)
    }
}

/// A 2x2 complex transfer operator acting on Jones vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix<T> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Real> JonesMatrix<T> {
    pub fn new(
        m_hh: Complex<T>,
        m_hv: Complex<T>,
        m_vh: Complex<T>,
        m_vv: Complex<T>,
    ) -> Result<Self> {
        let m = [[m_hh, m_hv], [m_vh, m_vv]];
        if !m.iter().flatten().all(finite) {
            return Err(Error::NonFinite("Jones matrix"));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_rows(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self::from_rows([[o, z], [z, o]])
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::from_rows([[z, z], [z, z]])
    }

    /// Counter-clockwise rotation `R(theta)`.
    pub fn rotation(theta: T) -> Self {
        let (s, c) = snapped_sin_cos(theta);
        let z = T::zero();
        Self::from_rows([
            [Complex::new(c, z), Complex::new(-s, z)],
            [Complex::new(s, z), Complex::new(c, z)],
        ])
    }

    /// Linear retarder with retardance `delta` and fast axis at `theta` from
    /// H, i.e. `R(theta) diag(e^{-i delta/2}, e^{+i delta/2}) R(-theta)`,
    /// expanded in closed form.
    pub fn retarder(delta: T, theta: T) -> Self {
        let two = lit::<T>(2.0);
        let (s, c) = snapped_sin_cos(delta / two);
        let (s2, c2) = snapped_sin_cos(theta * two);
        let z = T::zero();
        Self::from_rows([
            [Complex::new(c, -s * c2), Complex::new(z, -s * s2)],
            [Complex::new(z, -s * s2), Complex::new(c, s * c2)],
        ])
    }

    /// Orthogonal projector onto the (normalized) state `axis`.
    pub fn projector(axis: &JonesVector<T>) -> Result<Self> {
        if !axis.is_normalized() {
            return Err(Error::NotNormalized {
                intensity: to_f64(axis.intensity()),
            });
        }
        let (a, b) = (axis.amp_h(), axis.amp_v());
        Ok(Self::from_rows([
            [a * a.conj(), a * b.conj()],
            [b * a.conj(), b * b.conj()],
        ]))
    }

    pub fn m_hh(&self) -> Complex<T> {
        self.m[0][0]
    }
    pub fn m_hv(&self) -> Complex<T> {
        self.m[0][1]
    }
    pub fn m_vh(&self) -> Complex<T> {
        self.m[1][0]
    }
    pub fn m_vv(&self) -> Complex<T> {
        self.m[1][1]
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    pub fn apply(&self, v: &JonesVector<T>) -> JonesVector<T> {
        JonesVector::from_parts(
            self.m[0][0] * v.amp_h + self.m[0][1] * v.amp_v,
            self.m[1][0] * v.amp_h + self.m[1][1] * v.amp_v,
        )
    }

    /// `self * rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_rows([
            [self.m[0][0].conj(), self.m[1][0].conj()],
            [self.m[0][1].conj(), self.m[1][1].conj()],
        ])
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z = *z * k);
        out
    }

    pub fn max_entry_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// `M^dagger M = I` elementwise within the scalar tolerance.
    pub fn is_lossless(&self) -> bool {
        self.adjoint().compose(self).max_entry_diff(&Self::identity()) <= T::tolerance()
    }

    /// Equality after removing a global phase from both matrices.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: T) -> bool {
        let (i, j) = (0..4)
            .map(|k| (k / 2, k % 2))
            .max_by(|a, b| {
                self.m[a.0][a.1]
                    .norm()
                    .partial_cmp(&self.m[b.0][b.1].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or((0, 0));
        let (a, b) = (self.m[i][j], other.m[i][j]);
        if a.norm() == T::zero() || b.norm() == T::zero() {
            return self.max_entry_diff(other) <= tol;
        }
        let phase = (a / b) / (a / b).norm();
        let rotated = Self::from_rows([
            [other.m[0][0] * phase, other.m[0][1] * phase],
            [other.m[1][0] * phase, other.m[1][1] * phase],
        ]);
        self.max_entry_diff(&rotated) <= tol
    }
}

impl<T: Real> Mul for JonesMatrix<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<T: Real> Mul<JonesVector<T>> for JonesMatrix<T> {
    type Output = JonesVector<T>;
    fn mul(self, rhs: JonesVector<T>) -> JonesVector<T> {
        self.apply(&rhs)
    }
}

pub fn apply<T: Real>(m: &JonesMatrix<T>, v: &JonesVector<T>) -> JonesVector<T> {
    m.apply(v)
}

/// `m2 * m1`, i.e. `m1` acts first.
pub fn compose<T: Real>(m2: &JonesMatrix<T>, m1: &JonesMatrix<T>) -> JonesMatrix<T> {
    m2.compose(m1)
}

pub fn intensity<T: Real>(v: &JonesVector<T>) -> T {
    v.intensity()
}

/// Splits the intensity of `v` into the part along `reference` and the part
/// along its orthogonal complement. Both parts are clamped at zero.
pub fn analyzer_intensities<T: Real>(
    v: &JonesVector<T>,
    reference: &JonesVector<T>,
) -> Result<(T, T)> {
    if !reference.is_normalized() {
        return Err(Error::NotNormalized {
            intensity: to_f64(reference.intensity()),
        });
    }
    let total = v.intensity();
    let par = reference.inner(v).norm_sqr();
    let perp = (total - par).max(T::zero());
    Ok((par.min(total), perp))
}

/// Removes the global phase: the first component that is not negligible
/// relative to the vector norm is rotated onto the positive real axis.
/// The zero vector is returned unchanged.
pub fn global_phase_normalize<T: Real>(v: &JonesVector<T>) -> JonesVector<T> {
    let norm = v.intensity().sqrt();
    if norm == T::zero() {
        return *v;
    }
    let floor = norm * T::tolerance();
    let real = |x: T| Complex::new(x, T::zero());
    if v.amp_h.norm() > floor {
        let phase = v.amp_h.conj() / v.amp_h.norm();
        JonesVector::from_parts(real(v.amp_h.norm()), v.amp_v * phase)
    } else {
        let phase = v.amp_v.conj() / v.amp_v.norm();
        JonesVector::from_parts(v.amp_h * phase, real(v.amp_v.norm()))
    }
}

/// Integer transverse position of a beam. Rail 0 is the straight-through
/// input mode, rail 1 the recombined output mode, rail 2 the doubly
/// deviated mode.
pub type RailIndex = i32;

/// Multi-rail field: one Jones vector per occupied rail.
#[derive(Debug, Clone, PartialEq)]
pub struct RailState<T> {
    rails: BTreeMap<RailIndex, JonesVector<T>>,
    rail_pitch_mm: T,
    path_length: BTreeMap<RailIndex, u32>,
}

impl<T: Real> RailState<T> {
    pub fn empty(rail_pitch_mm: T) -> Self {
        Self {
            rails: BTreeMap::new(),
            rail_pitch_mm,
            path_length: BTreeMap::new(),
        }
    }

    pub fn single(rail: RailIndex, v: JonesVector<T>, rail_pitch_mm: T) -> Self {
        let mut s = Self::empty(rail_pitch_mm);
        s.accumulate(rail, &v, 0);
        s
    }

    pub fn rail_pitch_mm(&self) -> T {
        self.rail_pitch_mm
    }

    /// Amplitude on `rail`; absent rails are the zero vector.
    pub fn get(&self, rail: RailIndex) -> JonesVector<T> {
        self.rails.get(&rail).copied().unwrap_or_else(JonesVector::zero)
    }

    pub fn rails(&self) -> impl Iterator<Item = (RailIndex, &JonesVector<T>)> {
        self.rails.iter().map(|(r, v)| (*r, v))
    }

    pub fn occupied_rails(&self) -> Vec<RailIndex> {
        self.rails.keys().copied().collect()
    }

    /// Number of lateral deviations accumulated by the light on `rail`.
    pub fn deviation_count(&self, rail: RailIndex) -> Option<u32> {
        self.path_length.get(&rail).copied()
    }

    /// Transverse offset of `rail` from rail 0.
    pub fn offset_mm(&self, rail: RailIndex) -> T {
        self.rail_pitch_mm * lit(rail as f64)
    }

    /// Adds `v` to `rail`. The deviation count of a rail is the largest
    /// count among the amplitudes that reached it.
    pub fn accumulate(&mut self, rail: RailIndex, v: &JonesVector<T>, deviations: u32) {
        if v.is_zero() {
            return;
        }
        let entry = self.rails.entry(rail).or_insert_with(JonesVector::zero);
        *entry = entry.add(v);
        let count = self.path_length.entry(rail).or_insert(deviations);
        *count = (*count).max(deviations);
    }

    pub fn retain_rails(&mut self, keep: impl Fn(RailIndex) -> bool) {
        self.rails.retain(|r, _| keep(*r));
        self.path_length.retain(|r, _| keep(*r));
    }

    /// Applies the same Jones matrix on every rail.
    pub fn map_rails(&self, m: &JonesMatrix<T>) -> Self {
        let mut out = Self::empty(self.rail_pitch_mm);
        for (r, v) in &self.rails {
            out.accumulate(*r, &m.apply(v), self.path_length[r]);
        }
        out
    }

    pub fn total_intensity(&self) -> T {
        self.rails
            .values()
            .fold(T::zero(), |acc, v| acc + v.intensity())
    }

    pub fn max_rail_diff(&self, other: &Self) -> T {
        self.rails
            .keys()
            .chain(other.rails.keys())
            .map(|r| self.get(*r).max_component_diff(&other.get(*r)))
            .fold(T::zero(), T::max)
    }
}

pub fn total_intensity<T: Real>(s: &RailState<T>) -> T {
    s.total_intensity()
}

/// The four analysis states of the characterization protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    Plus,
    Minus,
    H,
    V,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [
        Polarization::Plus,
        Polarization::Minus,
        Polarization::H,
        Polarization::V,
    ];

    pub fn state<T: Real>(self) -> JonesVector<T> {
        match self {
            Polarization::H => JonesVector::horizontal(),
            Polarization::V => JonesVector::vertical(),
            Polarization::Plus => JonesVector::diagonal(),
            Polarization::Minus => JonesVector::antidiagonal(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::Plus => "+",
            Polarization::Minus => "-",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "H" => Some(Polarization::H),
            "V" => Some(Polarization::V),
            "+" => Some(Polarization::Plus),
            "-" => Some(Polarization::Minus),
            _ => None,
        }
    }

    pub fn is_diagonal_basis(self) -> bool {
        matches!(self, Polarization::Plus | Polarization::Minus)
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sigma_x() -> JonesMatrix<f64> {
        JonesMatrix::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)).unwrap()
    }

    /// Gram-Schmidt on two random complex columns, times a random phase.
    fn random_unitary(z: [f64; 9]) -> JonesMatrix<f64> {
        let a = [c(z[0], z[1]), c(z[2], z[3])];
        let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        let u0 = [a[0] / na, a[1] / na];
        let b = [c(z[4], z[5]), c(z[6], z[7])];
        let proj = u0[0].conj() * b[0] + u0[1].conj() * b[1];
        let w = [b[0] - u0[0] * proj, b[1] - u0[1] * proj];
        let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        let u1 = [w[0] / nw, w[1] / nw];
        let ph = Complex::from_polar(1.0, z[8]);
        JonesMatrix::new(u0[0] * ph, u1[0] * ph, u0[1] * ph, u1[1] * ph).unwrap()
    }

    fn unitary_strategy() -> impl Strategy<Value = JonesMatrix<f64>> {
        (
            prop::array::uniform8(-1.0f64..1.0),
            0.0f64..std::f64::consts::TAU,
        )
            .prop_filter("degenerate columns", |(z, _)| {
                z[0].abs() + z[1].abs() + z[2].abs() + z[3].abs() > 1e-3
            })
            .prop_map(|(z, ph)| {
                let mut all = [0.0; 9];
                all[..8].copy_from_slice(&z);
                all[8] = ph;
                random_unitary(all)
            })
            .prop_filter("rank deficient", |m| m.is_lossless())
    }

    fn vector_strategy() -> impl Strategy<Value = JonesVector<f64>> {
        prop::array::uniform4(-2.0f64..2.0)
            .prop_map(|z| JonesVector::new(c(z[0], z[1]), c(z[2], z[3])).unwrap())
    }

    fn matrix_strategy() -> impl Strategy<Value = JonesMatrix<f64>> {
        prop::array::uniform8(-2.0f64..2.0).prop_map(|z| {
            JonesMatrix::new(c(z[0], z[1]), c(z[2], z[3]), c(z[4], z[5]), c(z[6], z[7])).unwrap()
        })
    }

    #[test]
    fn identity_apply_is_noop() {
        let v = JonesVector::new(c(0.3, -0.2), c(0.1, 0.9)).unwrap();
        assert_eq!(apply(&JonesMatrix::identity(), &v), v);
    }

    #[test]
    fn sigma_x_swaps_h_and_v() {
        let out = apply(&sigma_x(), &JonesVector::horizontal());
        assert_eq!(out, JonesVector::vertical());
    }

    #[test]
    fn intensity_examples() {
        assert_eq!(intensity(&JonesVector::<f64>::horizontal()), 1.0);
        let circ = JonesVector::new(c(FRAC_1_SQRT_2, 0.), c(0., FRAC_1_SQRT_2)).unwrap();
        assert!((intensity(&circ) - 1.0).abs() < 1e-15);
        let v = JonesVector::new(c(0.6, 0.), c(0., 0.8)).unwrap();
        assert!((intensity(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_components_are_rejected() {
        assert!(JonesVector::new(c(f64::NAN, 0.), c(0., 0.)).is_err());
        assert!(JonesMatrix::new(c(0., f64::INFINITY), c(0., 0.), c(0., 0.), c(0., 0.)).is_err());
    }

    #[test]
    fn normalized_constructor_rescales() {
        let v = JonesVector::normalized(c(3.0, 0.), c(0., 4.0)).unwrap();
        assert!((v.intensity() - 1.0).abs() <= 1e-12);
        assert_eq!(
            JonesVector::<f64>::normalized(c(0., 0.), c(0., 0.)),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn analyzer_examples() {
        let (p, q) =
            analyzer_intensities(&JonesVector::vertical(), &JonesVector::<f64>::vertical()).unwrap();
        assert_eq!((p, q), (1.0, 0.0));
        let (p, q) =
            analyzer_intensities(&JonesVector::horizontal(), &JonesVector::<f64>::diagonal())
                .unwrap();
        assert!((p - 0.5).abs() < 1e-15 && (q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn analyzer_rejects_unnormalized_reference() {
        let r = JonesVector::from_real(1.0, 1.0).unwrap();
        assert!(matches!(
            analyzer_intensities(&JonesVector::horizontal(), &r),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn total_intensity_examples() {
        let s = RailState::<f64>::empty(4.0);
        assert_eq!(total_intensity(&s), 0.0);
        let s = RailState::<f64>::single(0, JonesVector::horizontal(), 4.0);
        assert_eq!(total_intensity(&s), 1.0);
        let (a, b) = (0.6, 0.8);
        let mut s = RailState::<f64>::single(0, JonesVector::from_real(a, 0.0).unwrap(), 4.0);
        s.accumulate(1, &JonesVector::from_real(0.0, b).unwrap(), 1);
        assert!((total_intensity(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn global_phase_examples() {
        let v = JonesVector::new(c(0., 1.), c(0., 0.)).unwrap();
        assert_eq!(global_phase_normalize(&v), JonesVector::horizontal());
        let v = JonesVector::new(c(0., 0.), c(-1., 0.)).unwrap();
        assert_eq!(global_phase_normalize(&v), JonesVector::vertical());
        let z = JonesVector::<f64>::zero();
        assert_eq!(global_phase_normalize(&z), z);
    }

    #[test]
    fn half_wave_at_45_twice_is_identity_up_to_phase() {
        let hwp = JonesMatrix::retarder(PI, FRAC_PI_4);
        // Direct multiplication: hwp = [[0, -i], [-i, 0]], so hwp^2 = -I.
        let expected = JonesMatrix::new(c(-1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)).unwrap();
        assert!(compose(&hwp, &hwp).max_entry_diff(&expected) < 1e-15);
        assert!(compose(&hwp, &hwp).approx_eq_up_to_phase(&JonesMatrix::identity(), 1e-15));
    }

    #[test]
    fn retarder_is_lossless_for_any_setting() {
        for k in 0..50 {
            let d = k as f64 * 0.37;
            let t = k as f64 * 0.11;
            assert!(JonesMatrix::<f64>::retarder(d, t).is_lossless());
        }
        assert!(JonesMatrix::<f32>::retarder(1.3, 0.2).is_lossless());
    }

    #[test]
    fn retarder_matches_rotation_conjugated_diagonal() {
        for k in 0..20 {
            let (d, t) = (0.31 * k as f64, 0.17 * k as f64 - 1.0);
            let diag = JonesMatrix::new(
                Complex::from_polar(1.0, -d / 2.0),
                c(0., 0.),
                c(0., 0.),
                Complex::from_polar(1.0, d / 2.0),
            )
            .unwrap();
            let oracle = JonesMatrix::rotation(t) * diag * JonesMatrix::rotation(-t);
            assert!(JonesMatrix::retarder(d, t).max_entry_diff(&oracle) < 1e-14);
        }
    }

    #[test]
    fn projector_is_idempotent() {
        let p = JonesMatrix::projector(&JonesVector::<f64>::linear(0.4)).unwrap();
        assert!((p * p).max_entry_diff(&p) < 1e-15);
        assert!(JonesMatrix::projector(&JonesVector::from_real(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn f32_algebra_agrees_with_f64() {
        let m32 = JonesMatrix::<f32>::retarder(FRAC_PI_2 as f32, 0.3);
        let m64 = JonesMatrix::<f64>::retarder(FRAC_PI_2, 0.3);
        let v32 = m32.apply(&JonesVector::diagonal());
        let v64 = m64.apply(&JonesVector::diagonal());
        assert!((v32.amp_h().re as f64 - v64.amp_h().re).abs() < 1e-6);
        assert!((v32.amp_v().im as f64 - v64.amp_v().im).abs() < 1e-6);
        assert!((v32.intensity() - 1.0).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn unitaries_preserve_intensity(u in unitary_strategy(), v in vector_strategy()) {
            prop_assert!((intensity(&apply(&u, &v)) - intensity(&v)).abs() < 1e-12 * (1.0 + intensity(&v)));
        }

        #[test]
        fn unitary_closure(a in unitary_strategy(), b in unitary_strategy()) {
            prop_assert!(compose(&a, &b).is_lossless());
        }

        #[test]
        fn analyzer_partitions_intensity(v in vector_strategy(), r in vector_strategy()) {
            prop_assume!(r.intensity() > 1e-6);
            let r = JonesVector::normalized(r.amp_h(), r.amp_v()).unwrap();
            let (p, q) = analyzer_intensities(&v, &r).unwrap();
            prop_assert!(p >= 0.0 && q >= 0.0);
            prop_assert!((p + q - intensity(&v)).abs() < 1e-12 * (1.0 + intensity(&v)));
        }

        #[test]
        fn compose_is_associative(a in matrix_strategy(), b in matrix_strategy(), m in matrix_strategy()) {
            let left = compose(&compose(&a, &b), &m);
            let right = compose(&a, &compose(&b, &m));
            prop_assert!(left.max_entry_diff(&right) < 1e-12);
        }

        #[test]
        fn phase_normalization_idempotent_and_phase_invariant(v in vector_strategy(), chi in -10.0f64..10.0) {
            prop_assume!(v.intensity() > 1e-6);
            let n = global_phase_normalize(&v);
            prop_assert_eq!(global_phase_normalize(&n), n);
            let rotated = v.scale_complex(Complex::from_polar(1.0, chi));
            prop_assert!(global_phase_normalize(&rotated).max_component_diff(&n) < 1e-12);
            prop_assert!((n.intensity() - v.intensity()).abs() < 1e-12);
        }
    }
}
