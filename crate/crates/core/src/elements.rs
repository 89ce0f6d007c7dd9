//! Optical components acting on multi-rail states, and the shutter device
//! assembled from them.
//!
//! Every element scales all amplitudes by `sqrt(transmission)`; beam
//! displacers additionally route polarization components between rails.

use std::collections::BTreeSet;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::polarization::{JonesMatrix, JonesVector, RailIndex, RailState};
use crate::scalar::{lit, to_f64, Real};

fn check_range<T: Real>(
    name: &'static str,
    value: T,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: to_f64(value),
            expected,
        })
    }
}

fn check_transmission<T: Real>(name: &'static str, t: T) -> Result<()> {
    check_range(name, t, t > T::zero() && t <= T::one(), "(0, 1]")
}

fn check_finite<T: Real>(name: &'static str, x: T) -> Result<()> {
    check_range(name, x, true, "finite values")
}

/// Largest wrong-path fraction a displacer may have.
pub const MAX_LEAKAGE: f64 = 0.05;

/// Calcite beam displacer: H goes straight (ordinary), V is displaced by
/// one rail (extraordinary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamDisplacer<T> {
    /// Phase on the straight path (rad).
    pub chi_o: T,
    /// Phase on the deviated path (rad).
    pub chi_e: T,
    /// Extra deviated-path phase set by tilting the crystal (rad).
    pub tilt_phase: T,
    pub displacement_mm: T,
    pub transmission: T,
    /// Fraction of H intensity sent down the deviated path.
    pub leakage_h: T,
    /// Fraction of V intensity left on the straight path.
    pub leakage_v: T,
}

impl<T: Real> BeamDisplacer<T> {
    pub fn ideal() -> Self {
        Self {
            chi_o: T::zero(),
            chi_e: T::zero(),
            tilt_phase: T::zero(),
            displacement_mm: lit(4.0),
            transmission: T::one(),
            leakage_h: T::zero(),
            leakage_v: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_transmission("displacer.transmission", self.transmission)?;
        let max = lit::<T>(MAX_LEAKAGE);
        for (name, l) in [
            ("displacer.leakage_h", self.leakage_h),
            ("displacer.leakage_v", self.leakage_v),
        ] {
            check_range(name, l, l >= T::zero() && l <= max, "[0, 0.05]")?;
        }
        check_range(
            "displacer.displacement_mm",
            self.displacement_mm,
            self.displacement_mm > T::zero(),
            "positive lengths",
        )?;
        check_finite("displacer.chi_o", self.chi_o)?;
        check_finite("displacer.chi_e", self.chi_e)?;
        check_finite("displacer.tilt_phase", self.tilt_phase)
    }

    pub fn has_leakage(&self) -> bool {
        self.leakage_h > T::zero() || self.leakage_v > T::zero()
    }

    /// `[stay_h, move_h, stay_v, move_v]` amplitude factors of each branch:
    /// the regular path first, then (when there is leakage) the wrong path.
    ///
    /// The two branches end up in distinguishable spatial modes, so their
    /// intensities add rather than their amplitudes.
    pub fn branches(&self) -> Vec<[Complex<T>; 4]> {
        let s = self.transmission.sqrt();
        let straight = Complex::from_polar(s, self.chi_o);
        let deviated = Complex::from_polar(s, self.chi_e + self.tilt_phase);
        let zero = Complex::new(T::zero(), T::zero());
        let one = T::one();
        let mut out = vec![[
            straight * (one - self.leakage_h).sqrt(),
            zero,
            zero,
            deviated * (one - self.leakage_v).sqrt(),
        ]];
        if self.has_leakage() {
            out.push([
                zero,
                deviated * self.leakage_h.sqrt(),
                straight * self.leakage_v.sqrt(),
                zero,
            ]);
        }
        out
    }
}

/// Linear retarder (half-wave plate when `retardance = pi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveplate<T> {
    pub retardance: T,
    /// Fast axis measured from H (rad).
    pub angle: T,
    pub transmission: T,
}

impl<T: Real> Waveplate<T> {
    pub fn half_wave(angle: T) -> Self {
        Self {
            retardance: T::PI(),
            angle,
            transmission: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_transmission("waveplate.transmission", self.transmission)?;
        check_finite("waveplate.retardance", self.retardance)?;
        check_finite("waveplate.angle", self.angle)
    }

    pub fn matrix(&self) -> JonesMatrix<T> {
        waveplate_matrix(self.retardance, self.angle).scale(self.transmission.sqrt())
    }
}

/// Pockels cell frozen at one retardance, axis at 45 degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PockelsStatic<T> {
    pub retardance: T,
    pub transmission: T,
}

impl<T: Real> PockelsStatic<T> {
    pub fn new(retardance: T) -> Self {
        Self {
            retardance,
            transmission: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_transmission("pockels.transmission", self.transmission)?;
        check_finite("pockels.retardance", self.retardance)
    }

    pub fn matrix(&self) -> JonesMatrix<T> {
        waveplate_matrix(self.retardance, T::FRAC_PI_4()).scale(self.transmission.sqrt())
    }
}

/// Spatial filter passing only the listed rails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pinhole {
    pub allowed_rails: BTreeSet<RailIndex>,
}

impl Pinhole {
    pub fn new(rails: impl IntoIterator<Item = RailIndex>) -> Self {
        Self {
            allowed_rails: rails.into_iter().collect(),
        }
    }

    pub fn passes(&self, rail: RailIndex) -> bool {
        self.allowed_rails.contains(&rail)
    }
}

/// Linear polarizer transmitting along `angle` on every rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analyzer<T> {
    pub angle: T,
    pub transmission: T,
}

impl<T: Real> Analyzer<T> {
    pub fn validate(&self) -> Result<()> {
        check_transmission("analyzer.transmission", self.transmission)?;
        check_finite("analyzer.angle", self.angle)
    }

    pub fn matrix(&self) -> JonesMatrix<T> {
        JonesMatrix::projector(&JonesVector::linear(self.angle))
            .expect("linear states are normalized")
            .scale(self.transmission.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element<T> {
    Displacer(BeamDisplacer<T>),
    Pockels(PockelsStatic<T>),
    Waveplate(Waveplate<T>),
    Pinhole(Pinhole),
    Analyzer(Analyzer<T>),
}

impl<T: Real> Element<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Element::Displacer(d) => d.validate(),
            Element::Pockels(p) => p.validate(),
            Element::Waveplate(w) => w.validate(),
            Element::Pinhole(_) => Ok(()),
            Element::Analyzer(a) => a.validate(),
        }
    }

    pub fn transmission(&self) -> T {
        match self {
            Element::Displacer(d) => d.transmission,
            Element::Pockels(p) => p.transmission,
            Element::Waveplate(w) => w.transmission,
            Element::Pinhole(_) => T::one(),
            Element::Analyzer(a) => a.transmission,
        }
    }

    /// Pinholes and analyzers discard light; everything else only absorbs
    /// the scalar `1 - transmission`.
    pub fn is_projective(&self) -> bool {
        matches!(self, Element::Pinhole(_) | Element::Analyzer(_))
    }

    /// Number of mutually incoherent branches the element splits light into.
    pub fn branch_count(&self) -> usize {
        match self {
            Element::Displacer(d) if d.has_leakage() => 2,
            _ => 1,
        }
    }

    /// Applies the element, one output per branch (see [`Self::branch_count`]).
    /// `pc_retardance` overrides the retardance of a Pockels cell and is
    /// ignored by every other element.
    pub fn apply(&self, s: &RailState<T>, pc_retardance: Option<T>) -> Vec<RailState<T>> {
        match self {
            Element::Displacer(d) => displacer_branches(d, s),
            _ => vec![self.apply_coherent(s, pc_retardance)],
        }
    }

    fn apply_coherent(&self, s: &RailState<T>, pc_retardance: Option<T>) -> RailState<T> {
        match self {
            Element::Displacer(d) => displacer_apply(d, s),
            Element::Pockels(p) => {
                let p = PockelsStatic {
                    retardance: pc_retardance.unwrap_or(p.retardance),
                    ..*p
                };
                pockels_apply(&p, s)
            }
            Element::Waveplate(w) => s.map_rails(&w.matrix()),
            Element::Pinhole(ph) => pinhole_apply(ph, s),
            Element::Analyzer(a) => s.map_rails(&a.matrix()),
        }
    }

    /// Dense operators of this element on rails `0..n_rails`, one per
    /// branch; light leaving that range is dropped.
    pub fn rail_operators(&self, n_rails: usize, pc_retardance: Option<T>) -> Vec<RailOperator<T>> {
        let block = |m: JonesMatrix<T>| RailOperator::block_diagonal(n_rails, &m);
        let single = match self {
            Element::Displacer(d) => {
                return d
                    .branches()
                    .into_iter()
                    .map(|[stay_h, move_h, stay_v, move_v]| {
                        let mut op = RailOperator::zero(n_rails);
                        for r in 0..n_rails {
                            op.set(2 * r, 2 * r, stay_h);
                            op.set(2 * r + 1, 2 * r + 1, stay_v);
                            if r + 1 < n_rails {
                                op.set(2 * r + 2, 2 * r, move_h);
                                op.set(2 * r + 3, 2 * r + 1, move_v);
                            }
                        }
                        op
                    })
                    .collect();
            }
            Element::Pockels(p) => block(
                PockelsStatic {
                    retardance: pc_retardance.unwrap_or(p.retardance),
                    ..*p
                }
                .matrix(),
            ),
            Element::Waveplate(w) => block(w.matrix()),
            Element::Analyzer(a) => block(a.matrix()),
            Element::Pinhole(ph) => {
                let mut op = RailOperator::zero(n_rails);
                let one = Complex::new(T::one(), T::zero());
                for r in 0..n_rails {
                    if ph.passes(r as RailIndex) {
                        op.set(2 * r, 2 * r, one);
                        op.set(2 * r + 1, 2 * r + 1, one);
                    }
                }
                op
            }
        };
        vec![single]
    }
}

/// Lossless retarder matrix `R(angle) diag(e^{-i r/2}, e^{i r/2}) R(-angle)`.
pub fn waveplate_matrix<T: Real>(retardance: T, angle: T) -> JonesMatrix<T> {
    JonesMatrix::retarder(retardance, angle)
}

fn route<T: Real>(coeffs: &[Complex<T>; 4], s: &RailState<T>) -> RailState<T> {
    let [stay_h, move_h, stay_v, move_v] = *coeffs;
    let mut out = RailState::empty(s.rail_pitch_mm());
    for (r, v) in s.rails() {
        let count = s.deviation_count(r).unwrap_or(0);
        let stay = JonesVector::from_parts(v.amp_h() * stay_h, v.amp_v() * stay_v);
        let moved = JonesVector::from_parts(v.amp_h() * move_h, v.amp_v() * move_v);
        out.accumulate(r, &stay, count);
        out.accumulate(r + 1, &moved, count + 1);
    }
    out
}

/// Regular path of a displacer: H stays on its rail with the ordinary phase,
/// V moves one rail up with the extraordinary (plus tilt) phase. Amplitudes
/// are reduced by `sqrt(1 - leakage)`; the leaked light is in the second
/// entry of [`displacer_branches`].
pub fn displacer_apply<T: Real>(d: &BeamDisplacer<T>, s: &RailState<T>) -> RailState<T> {
    route(&d.branches()[0], s)
}

/// Regular path, followed by the wrong-path branch when the displacer leaks
/// (`sqrt(leakage_h)` of H moves, `sqrt(leakage_v)` of V stays).
pub fn displacer_branches<T: Real>(d: &BeamDisplacer<T>, s: &RailState<T>) -> Vec<RailState<T>> {
    d.branches().iter().map(|c| route(c, s)).collect()
}

pub fn pockels_apply<T: Real>(p: &PockelsStatic<T>, s: &RailState<T>) -> RailState<T> {
    s.map_rails(&p.matrix())
}

pub fn pinhole_apply<T: Real>(ph: &Pinhole, s: &RailState<T>) -> RailState<T> {
    let mut out = s.clone();
    out.retain_rails(|r| ph.passes(r));
    out
}

/// Result of sending a state through a device.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<T> {
    /// One coherent state per combination of displacer branches; the first
    /// is the path with no leakage anywhere.
    pub branches: Vec<RailState<T>>,
    /// Intensity stopped by pinholes and analyzers, referred to the device
    /// output (i.e. multiplied by the transmissions of later elements), so
    /// that `transmitted + blocked = input * transmission_product`.
    pub blocked: T,
}

fn total<T: Real>(branches: &[RailState<T>]) -> T {
    branches
        .iter()
        .fold(T::zero(), |acc, b| acc + b.total_intensity())
}

impl<T: Real> Propagation<T> {
    pub fn main(&self) -> &RailState<T> {
        &self.branches[0]
    }

    pub fn total_intensity(&self) -> T {
        total(&self.branches)
    }

    /// Field on `rail` in every branch.
    pub fn fields_on(&self, rail: RailIndex) -> Vec<JonesVector<T>> {
        self.branches.iter().map(|b| b.get(rail)).collect()
    }
}

/// Ordered element sequence; light enters on rail 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Device<T> {
    elements: Vec<Element<T>>,
}

impl<T: Real> Device<T> {
    pub fn new(elements: Vec<Element<T>>) -> Result<Self> {
        for e in &elements {
            e.validate()?;
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[Element<T>] {
        &self.elements
    }

    pub fn transmission_product(&self) -> T {
        self.elements
            .iter()
            .fold(T::one(), |acc, e| acc * e.transmission())
    }

    /// Rail spacing of the first displacer, 4 mm when there is none.
    pub fn rail_pitch_mm(&self) -> T {
        self.elements
            .iter()
            .find_map(|e| match e {
                Element::Displacer(d) => Some(d.displacement_mm),
                _ => None,
            })
            .unwrap_or_else(|| lit(4.0))
    }

    pub fn displacer_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::Displacer(_)))
            .count()
    }

    /// Rail read out after the last pinhole (the lowest allowed rail), or
    /// rail 1 when the device has no pinhole.
    pub fn output_rail(&self) -> RailIndex {
        self.elements
            .iter()
            .rev()
            .find_map(|e| match e {
                Element::Pinhole(p) => p.allowed_rails.iter().next().copied(),
                _ => None,
            })
            .unwrap_or(1)
    }

    pub fn input_state(&self, v: JonesVector<T>) -> RailState<T> {
        RailState::single(0, v, self.rail_pitch_mm())
    }

    /// Sequential element-by-element propagation.
    pub fn propagate(&self, input: &RailState<T>, pc_retardance: Option<T>) -> Propagation<T> {
        let mut branches = vec![input.clone()];
        let mut blocked = T::zero();
        for e in &self.elements {
            let t = e.transmission();
            let before = total(&branches);
            branches = branches
                .iter()
                .flat_map(|b| e.apply(b, pc_retardance))
                .collect();
            blocked = blocked * t;
            if e.is_projective() {
                blocked = blocked + (t * before - total(&branches)).max(T::zero());
            }
        }
        Propagation { branches, blocked }
    }

    /// Whole-device operators on rails `0..n_rails`, in the same branch
    /// order as [`Self::propagate`].
    pub fn composed_operators(
        &self,
        n_rails: usize,
        pc_retardance: Option<T>,
    ) -> Vec<RailOperator<T>> {
        self.elements
            .iter()
            .fold(vec![RailOperator::identity(n_rails)], |acc, e| {
                let ops = e.rail_operators(n_rails, pc_retardance);
                acc.iter()
                    .flat_map(|a| ops.iter().map(move |op| op.compose(a)))
                    .collect()
            })
    }

    /// The five-element shutter layout, if this device has it.
    pub fn shutter_params(&self) -> Option<ShutterParams<T>> {
        match self.elements.as_slice() {
            [Element::Displacer(d1), Element::Pockels(p), Element::Displacer(d2), Element::Pinhole(ph), Element::Waveplate(w)] => {
                Some(ShutterParams {
                    displacer_in: *d1,
                    pockels: *p,
                    displacer_out: *d2,
                    pinhole: ph.clone(),
                    hwp: *w,
                })
            }
            _ => None,
        }
    }
}

/// Parameters of the displacer / Pockels cell / displacer / pinhole /
/// half-wave-plate shutter.
#[derive(Debug, Clone, PartialEq)]
pub struct ShutterParams<T> {
    pub displacer_in: BeamDisplacer<T>,
    pub pockels: PockelsStatic<T>,
    pub displacer_out: BeamDisplacer<T>,
    pub pinhole: Pinhole,
    pub hwp: Waveplate<T>,
}

impl<T: Real> ShutterParams<T> {
    pub fn ideal() -> Self {
        Self {
            displacer_in: BeamDisplacer::ideal(),
            pockels: PockelsStatic::new(T::zero()),
            displacer_out: BeamDisplacer::ideal(),
            pinhole: Pinhole::new([1]),
            hwp: Waveplate::half_wave(T::FRAC_PI_4()),
        }
    }

    /// Residual arm phase difference, realized as the output displacer tilt.
    pub fn with_phase_error(mut self, delta_chi: T) -> Self {
        self.displacer_out.tilt_phase = delta_chi;
        self
    }

    /// Relative phase between the two interferometer arms in the ON state.
    pub fn arm_phase_difference(&self) -> T {
        let (d1, d2) = (&self.displacer_in, &self.displacer_out);
        (d1.chi_o + d2.chi_e + d2.tilt_phase) - (d1.chi_e + d1.tilt_phase + d2.chi_o)
    }

    /// Product of the transmissions of every element.
    pub fn transmission_product(&self) -> T {
        self.displacer_in.transmission
            * self.pockels.transmission
            * self.displacer_out.transmission
            * self.hwp.transmission
    }
}

/// `[Displacer, Pockels, Displacer, Pinhole, HWP]`; the Pockels retardance
/// is supplied at simulation time.
pub fn build_shutter<T: Real>(params: &ShutterParams<T>) -> Result<Device<T>> {
    Device::new(vec![
        Element::Displacer(params.displacer_in),
        Element::Pockels(params.pockels),
        Element::Displacer(params.displacer_out),
        Element::Pinhole(params.pinhole.clone()),
        Element::Waveplate(params.hwp),
    ])
}

/// Dense linear map on the `2 n` amplitudes of rails `0..n`
/// (index `2 r` is H on rail `r`, `2 r + 1` is V).
#[derive(Debug, Clone, PartialEq)]
pub struct RailOperator<T> {
    n_rails: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> RailOperator<T> {
    pub fn zero(n_rails: usize) -> Self {
        let dim = 2 * n_rails;
        Self {
            n_rails,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(n_rails: usize) -> Self {
        let mut op = Self::zero(n_rails);
        for i in 0..2 * n_rails {
            op.set(i, i, Complex::new(T::one(), T::zero()));
        }
        op
    }

    pub fn block_diagonal(n_rails: usize, m: &JonesMatrix<T>) -> Self {
        let mut op = Self::zero(n_rails);
        for r in 0..n_rails {
            for i in 0..2 {
                for j in 0..2 {
                    op.set(2 * r + i, 2 * r + j, m.entry(i, j));
                }
            }
        }
        op
    }

    pub fn n_rails(&self) -> usize {
        self.n_rails
    }

    fn dim(&self) -> usize {
        2 * self.n_rails
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim() + col]
    }

    fn set(&mut self, row: usize, col: usize, z: Complex<T>) {
        let dim = self.dim();
        self.data[row * dim + col] = z;
    }

    /// `self * rhs`: `rhs` acts first.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.n_rails, rhs.n_rails, "rail operator size mismatch");
        let dim = self.dim();
        let mut out = Self::zero(self.n_rails);
        for i in 0..dim {
            for k in 0..dim {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..dim {
                    let idx = i * dim + j;
                    out.data[idx] = out.data[idx] + a * rhs.get(k, j);
                }
            }
        }
        out
    }

    /// Applies the operator to the rails of `s` inside `0..n`. Deviation
    /// counts are not tracked on this path.
    pub fn apply(&self, s: &RailState<T>) -> RailState<T> {
        let dim = self.dim();
        let mut input = vec![Complex::new(T::zero(), T::zero()); dim];
        for (r, v) in s.rails() {
            if r >= 0 && (r as usize) < self.n_rails {
                input[2 * r as usize] = v.amp_h();
                input[2 * r as usize + 1] = v.amp_v();
            }
        }
        let mut out = RailState::empty(s.rail_pitch_mm());
        for r in 0..self.n_rails {
            let row = |i: usize| {
                (0..dim).fold(Complex::new(T::zero(), T::zero()), |acc, j| {
                    acc + self.get(i, j) * input[j]
                })
            };
            let v = JonesVector::from_parts(row(2 * r), row(2 * r + 1));
            out.accumulate(r as RailIndex, &v, 0);
        }
        out
    }
}
