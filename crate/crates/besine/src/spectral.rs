//! Spectral machinery for 2x2 canonical systems `Ju' = -zHu`.
//!
//! A system is represented by a [`CoefficientMatrixField`]: a grid of times
//! together with one symmetric PSD matrix per node, read as a piecewise
//! constant coefficient field. Transfer matrices are then products of exact
//! matrix exponentials, which keeps `det T = 1` to rounding regardless of step
//! size. On top of the transfer flow this module builds Weyl-Titchmarsh
//! evaluators (limit-circle and limit-point routes), Stieltjes inversion for
//! point masses, and a certified eigenvalue scan.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{exp_traceless, exp_traceless_real, CMat2, Mat2, Sym2};
use crate::stochastic::TimeGrid;

/// A canonical-system coefficient field sampled on a grid.
///
/// The matrix at node `k` is used on the step `[t_k, t_{k+1})`; the matrix at
/// the last node only matters for diagnostics. `trace_integrable_right`
/// records whether the field's trace is integrable up to the right endpoint,
/// which downstream code uses to decide between limit-circle and limit-point
/// handling there.
#[derive(Debug, Clone)]
pub struct CoefficientMatrixField {
    grid: TimeGrid,
    mats: Vec<Sym2>,
    pub trace_integrable_right: bool,
}

impl CoefficientMatrixField {
    /// Negative eigenvalues up to `-PSD_SLACK * trace` are accepted as rounding.
    const PSD_SLACK: f64 = 1e-10;

    pub fn new(grid: TimeGrid, mats: Vec<Sym2>, trace_integrable_right: bool) -> Result<Self> {
        if mats.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field has {} matrices for {} grid nodes",
                mats.len(),
                grid.len()
            )));
        }
        let mut total = 0.0;
        for (k, m) in mats.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::Integrity {
                    t: grid.nodes()[k],
                    message: "non-finite coefficient matrix".into(),
                });
            }
            let tr = m.trace();
            if m.min_eigenvalue() < -Self::PSD_SLACK * tr.max(1.0) {
                return Err(Error::Integrity {
                    t: grid.nodes()[k],
                    message: format!("coefficient matrix not PSD (min eig {:.3e})", m.min_eigenvalue()),
                });
            }
            total += tr;
        }
        if total <= 0.0 {
            return Err(Error::Usage("coefficient field vanishes identically".into()));
        }
        Ok(CoefficientMatrixField { grid, mats, trace_integrable_right })
    }

    /// Constant field `H = m` on `[0, b]` with `steps` uniform steps. Fixture
    /// helper; the free system is `constant(Sym2::IDENTITY, ..)`.
    pub fn constant(m: Sym2, b: f64, steps: usize, trace_integrable_right: bool) -> Result<Self> {
        let grid = TimeGrid::uniform(0.0, b, steps, crate::stochastic::GridCoord::Native)?;
        let mats = vec![m; grid.len()];
        CoefficientMatrixField::new(grid, mats, trace_integrable_right)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[Sym2] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Right endpoint of the sampled interval.
    pub fn end(&self) -> f64 {
        self.grid.last()
    }
}

/// `J H` for `H = [[a, b], [b, d]]`; traceless with `det = det H`.
fn generator(h: &Sym2) -> Mat2 {
    Mat2::new(-h.b, -h.d, h.a, h.b)
}

/// Value of the fundamental solution `T(t, z)` of `Ju' = -zHu`, `T(0, z) = I`.
#[derive(Debug, Clone, Copy)]
pub struct TransferMatrix {
    pub value: CMat2,
    pub t: f64,
    pub z: Complex64,
}

fn step_exp(h: &Sym2, z: Complex64, dt: f64) -> CMat2 {
    let g = generator(h);
    let s = z * dt;
    let a = CMat2::new(
        s * g.m[0][0],
        s * g.m[0][1],
        s * g.m[1][0],
        s * g.m[1][1],
    );
    exp_traceless(&a)
}

/// Transfer matrix at time `t`. The flow is integrated node by node with exact
/// exponentials of the piecewise-constant generator `z J H_k dt`; `t` may fall
/// strictly inside a step, in which case the last factor uses the partial step.
pub fn transfer_matrix(field: &CoefficientMatrixField, t: f64, z: Complex64) -> Result<TransferMatrix> {
    let nodes = field.grid.nodes();
    let span = field.end() - nodes[0];
    if t < nodes[0] - 1e-12 * span || t > field.end() + 1e-12 * span {
        return Err(Error::range(format!(
            "transfer time {t} outside field interval [{}, {}]",
            nodes[0],
            field.end()
        )));
    }
    let t = t.clamp(nodes[0], field.end());
    let mut acc = CMat2::IDENTITY;
    for k in 0..field.len() - 1 {
        let step_end = nodes[k + 1];
        if step_end <= t {
            acc = step_exp(&field.mats[k], z, step_end - nodes[k]).mul(&acc);
            if step_end == t {
                break;
            }
        } else {
            let dt = t - nodes[k];
            if dt > 0.0 {
                acc = step_exp(&field.mats[k], z, dt).mul(&acc);
            }
            break;
        }
    }
    if !acc.is_finite() {
        return Err(Error::Integration { t, message: "transfer matrix overflowed".into() });
    }
    Ok(TransferMatrix { value: acc, t, z })
}

/// Transfer matrices at every grid node, sharing the partial products.
pub fn transfer_through(field: &CoefficientMatrixField, z: Complex64) -> Result<Vec<CMat2>> {
    let nodes = field.grid.nodes();
    let mut out = Vec::with_capacity(field.len());
    let mut acc = CMat2::IDENTITY;
    out.push(acc);
    for k in 0..field.len() - 1 {
        acc = step_exp(&field.mats[k], z, nodes[k + 1] - nodes[k]).mul(&acc);
        if !acc.is_finite() {
            return Err(Error::Integration {
                t: nodes[k + 1],
                message: "transfer matrix overflowed".into(),
            });
        }
        out.push(acc);
    }
    Ok(out)
}

/// Right boundary condition for a canonical system.
///
/// `Angle(phi)` encodes the vector `(cos phi, sin phi)`; `Vector` a fixed real
/// vector; `ZDependent` an evaluator producing the (generally complex)
/// boundary vector for each spectral parameter, as needed when the boundary
/// data itself comes from a solution of the full-line problem.
#[derive(Clone)]
pub enum BoundaryData {
    Angle(f64),
    Vector([f64; 2]),
    ZDependent(std::sync::Arc<dyn Fn(Complex64) -> Result<[Complex64; 2]> + Send + Sync>),
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Angle(phi) => f.debug_tuple("Angle").field(phi).finish(),
            BoundaryData::Vector(v) => f.debug_tuple("Vector").field(v).finish(),
            BoundaryData::ZDependent(_) => f.write_str("ZDependent(..)"),
        }
    }
}

impl BoundaryData {
    /// Boundary vector at spectral parameter `z`. Errors if the vector is zero.
    pub fn vector_at(&self, z: Complex64) -> Result<[Complex64; 2]> {
        let v = match self {
            BoundaryData::Angle(phi) => {
                let (s, c) = phi.sin_cos();
                [Complex64::new(c, 0.0), Complex64::new(s, 0.0)]
            }
            BoundaryData::Vector(v) => [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)],
            BoundaryData::ZDependent(eval) => eval(z)?,
        };
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Usage("boundary vector is zero or non-finite".into()));
        }
        Ok(v)
    }

    /// Boundary vector at a real spectral parameter, projected to real
    /// components. Z-dependent boundaries must be essentially real there.
    pub fn real_vector_at(&self, lambda: f64) -> Result<[f64; 2]> {
        let v = self.vector_at(Complex64::new(lambda, 0.0))?;
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let im = v[0].im.abs().max(v[1].im.abs());
        if im > 1e-6 * norm {
            return Err(Error::Integrity {
                t: lambda,
                message: format!("boundary vector has imaginary part {im:.3e} at a real spectral parameter"),
            });
        }
        Ok([v[0].re, v[1].re])
    }
}

/// The Moebius kernel `M(T, w) = v_1 / v_2` with `v = T^{-1} w`.
///
/// `v_2 = 0` is a legal value: the function returns infinity (encoded as a
/// complex number with infinite real part) rather than an error, matching the
/// Riemann-sphere reading of the Weyl function.
pub fn weyl_m_value(t_at_b: &CMat2, w: [Complex64; 2]) -> Complex64 {
    let inv = match t_at_b.inverse() {
        Some(inv) => inv,
        None => return Complex64::new(f64::INFINITY, 0.0),
    };
    let v = inv.mul_vec(w);
    if v[1].norm() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    v[0] / v[1]
}

/// Weyl-Titchmarsh evaluator for a limit-circle (or truncated) system: the
/// boundary vector at the right endpoint is pulled back through the transfer
/// flow and read as a Moebius ratio.
pub fn weyl_m_limit_circle<'a>(
    field: &'a CoefficientMatrixField,
    boundary: &'a BoundaryData,
) -> impl Fn(Complex64) -> Result<Complex64> + 'a {
    move |z| {
        let t = transfer_matrix(field, field.end(), z)?;
        let w = boundary.vector_at(z)?;
        Ok(weyl_m_value(&t.value, w))
    }
}

/// Result of a limit-point Weyl evaluation: midpoint of the last two probe
/// values, the final probe disagreement, and the full disagreement trace along
/// the truncation schedule (useful to check disk nesting).
#[derive(Debug, Clone)]
pub struct WeylPoint {
    pub value: Complex64,
    pub radius: f64,
    pub certified: bool,
    pub radii: Vec<f64>,
}

/// Limit-point Weyl function by Weyl-disk contraction.
///
/// Evaluates `M(T(b_n, z), e_phi)` for two probe angles along the truncation
/// schedule `b_n` and stops when the probes agree within `tol`; in the limit
/// point case the value does not depend on the probe, so the disagreement
/// bounds the distance to the true value. If the schedule is exhausted first,
/// the best midpoint is returned flagged `certified: false`.
pub fn weyl_m_limit_point(
    field: &CoefficientMatrixField,
    probes: (f64, f64),
    schedule: &[f64],
    z: Complex64,
    tol: f64,
) -> Result<WeylPoint> {
    if schedule.is_empty() {
        return Err(Error::Usage("empty truncation schedule".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Usage("tolerance must be positive".into()));
    }
    if (probes.0 - probes.1).sin().abs() < 1e-9 {
        return Err(Error::Usage("probe angles coincide modulo pi".into()));
    }
    let w0 = BoundaryData::Angle(probes.0).vector_at(z)?;
    let w1 = BoundaryData::Angle(probes.1).vector_at(z)?;
    let mut prev = f64::INFINITY;
    let mut best = Complex64::new(f64::NAN, f64::NAN);
    let mut radii = Vec::with_capacity(schedule.len());
    for (n, &b) in schedule.iter().enumerate() {
        if n > 0 && b <= schedule[n - 1] {
            return Err(Error::Usage("truncation schedule must be strictly increasing".into()));
        }
        let t = transfer_matrix(field, b, z)?;
        let m0 = weyl_m_value(&t.value, w0);
        let m1 = weyl_m_value(&t.value, w1);
        let r = if m0.is_finite() && m1.is_finite() {
            (m0 - m1).norm()
        } else {
            f64::INFINITY
        };
        radii.push(r);
        if r <= prev || !prev.is_finite() {
            best = (m0 + m1) * 0.5;
            prev = r;
        }
        if r < tol {
            return Ok(WeylPoint { value: (m0 + m1) * 0.5, radius: r, certified: true, radii });
        }
    }
    Ok(WeylPoint { value: best, radius: prev, certified: false, radii })
}

/// Point mass of the measure behind a Herglotz function at location `t`:
/// `mu({t}) = -i lim_{eps -> 0} eps * m(t + i eps)`.
///
/// The limit is taken along `eps_schedule` (decreasing) and the last two
/// entries are Richardson-extrapolated assuming a linear error in `eps`. Tiny
/// negative real parts are clamped to zero; the imaginary part of the
/// extrapolated residue is returned as a diagnostic (it should vanish).
#[derive(Debug, Clone, Copy)]
pub struct AtomMass {
    pub mass: f64,
    pub imag_residue: f64,
}

pub fn stieltjes_atom(
    m: impl Fn(Complex64) -> Result<Complex64>,
    t: f64,
    eps_schedule: &[f64],
) -> Result<AtomMass> {
    if eps_schedule.len() < 2 {
        return Err(Error::Usage("need at least two epsilon values".into()));
    }
    let mut vals = Vec::with_capacity(eps_schedule.len());
    for (i, &eps) in eps_schedule.iter().enumerate() {
        if !(eps > 0.0) || (i > 0 && eps >= eps_schedule[i - 1]) {
            return Err(Error::Usage("epsilon schedule must be positive and strictly decreasing".into()));
        }
        let mz = m(Complex64::new(t, eps))?;
        if !mz.is_finite() {
            return Err(Error::domain(format!("m not finite at {t} + {eps}i")));
        }
        vals.push(Complex64::new(0.0, -eps) * mz);
    }
    let n = vals.len();
    let (e1, v1) = (eps_schedule[n - 2], vals[n - 2]);
    let (e2, v2) = (eps_schedule[n - 1], vals[n - 1]);
    let v0 = (v2 * e1 - v1 * e2) / (e1 - e2);
    Ok(AtomMass { mass: v0.re.max(0.0), imag_residue: v0.im.abs() })
}

/// Default Stieltjes epsilon schedule.
pub const EPS_SCHEDULE: [f64; 2] = [1e-3, 1e-4];

/// Maximal Herglotz violation of `m` over a grid in the upper half-plane:
/// `max(0, -min Im m)`. A genuine Herglotz function gives 0.
pub fn herglotz_violation(
    m: impl Fn(Complex64) -> Result<Complex64>,
    zs: &[Complex64],
) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::Usage("empty z grid".into()));
    }
    let mut min_im = f64::INFINITY;
    for &z in zs {
        if !(z.im > 0.0) {
            return Err(Error::Usage(format!("z = {z} not in the upper half-plane")));
        }
        let mz = m(z)?;
        if !mz.is_finite() {
            return Err(Error::domain(format!("m not finite at {z}")));
        }
        min_im = min_im.min(mz.im);
    }
    Ok((-min_im).max(0.0))
}

/// Final unit vector `u(b, lambda) / |u|` of the real solution with
/// `u(0) = (1, 0)`. Per-step normalization keeps the components in range for
/// long fields; only the direction is meaningful to callers.
fn scan_final_vector(field: &CoefficientMatrixField, lambda: f64) -> Result<[f64; 2]> {
    let nodes = field.grid.nodes();
    let mut u = [1.0f64, 0.0];
    for k in 0..field.len() - 1 {
        let g = generator(&field.mats[k]);
        let dt = nodes[k + 1] - nodes[k];
        let e = exp_traceless_real(&Mat2::new(
            lambda * dt * g.m[0][0],
            lambda * dt * g.m[0][1],
            lambda * dt * g.m[1][0],
            lambda * dt * g.m[1][1],
        ));
        u = e.mul_vec(u);
        let norm = u[0].hypot(u[1]);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Integration {
                t: nodes[k + 1],
                message: format!("eigenfunction scan diverged at lambda = {lambda}"),
            });
        }
        u = [u[0] / norm, u[1] / norm];
    }
    Ok(u)
}

/// `omega(lambda) = <w(lambda), J u(b, lambda)>`; eigenvalues are its roots.
fn omega(field: &CoefficientMatrixField, boundary: &BoundaryData, lambda: f64) -> Result<f64> {
    let u = scan_final_vector(field, lambda)?;
    let w = boundary.real_vector_at(lambda)?;
    Ok(w[1] * u[0] - w[0] * u[1])
}

fn wrap_to_pi(x: f64) -> f64 {
    let mut y = x % (2.0 * std::f64::consts::PI);
    if y > std::f64::consts::PI {
        y -= 2.0 * std::f64::consts::PI;
    } else if y <= -std::f64::consts::PI {
        y += 2.0 * std::f64::consts::PI;
    }
    y
}

#[derive(Clone, Copy)]
struct ScanPoint {
    lam: f64,
    omega: f64,
    theta: f64,
}

fn scan_point(
    field: &CoefficientMatrixField,
    boundary: &BoundaryData,
    lam: f64,
) -> Result<ScanPoint> {
    let u = scan_final_vector(field, lam)?;
    let w = boundary.real_vector_at(lam)?;
    Ok(ScanPoint { lam, omega: w[1] * u[0] - w[0] * u[1], theta: u[1].atan2(u[0]) })
}

/// Relative lambda width below which a scan step is not subdivided further.
const SCAN_WIDTH_FLOOR: f64 = 1e-9;

/// Append refined scan points of (a, b] to `out`. A step is accepted once its
/// wrapped angle advance and that of both halves stay below pi/2 and compose
/// consistently; otherwise both halves are refined, down to the width floor.
fn refine_scan(
    field: &CoefficientMatrixField,
    boundary: &BoundaryData,
    a: ScanPoint,
    b: ScanPoint,
    out: &mut Vec<ScanPoint>,
) -> Result<()> {
    let scale = a.lam.abs().max(b.lam.abs()).max(1.0);
    if b.lam - a.lam <= SCAN_WIDTH_FLOOR * scale {
        out.push(b);
        return Ok(());
    }
    let m = scan_point(field, boundary, 0.5 * (a.lam + b.lam))?;
    let d = wrap_to_pi(b.theta - a.theta);
    let d1 = wrap_to_pi(m.theta - a.theta);
    let d2 = wrap_to_pi(b.theta - m.theta);
    let half_pi = 0.5 * std::f64::consts::PI;
    let small = d.abs() <= half_pi && d1.abs() <= half_pi && d2.abs() <= half_pi;
    let consistent = (d1 + d2 - d).abs() <= 0.25 * std::f64::consts::PI;
    let monotone = d1 >= -0.02 && d2 >= -0.02;
    if small && consistent && monotone {
        out.push(m);
        out.push(b);
        return Ok(());
    }
    refine_scan(field, boundary, a, m, out)?;
    refine_scan(field, boundary, m, b, out)
}

/// Eigenvalues of the truncated system `u(0) = (1, 0)`, right boundary `w`,
/// inside `window`, found by a sign-change scan of `omega` starting at the
/// given resolution and bisection to 1e-10 relative accuracy.
///
/// Certification: the Pruefer angle of `u(b, lambda)` is nondecreasing in
/// `lambda` and a root of `omega` occurs exactly when the angle crosses the
/// boundary direction modulo pi. Fast rotation can alias a fixed-step scan,
/// so every step is subdivided until the wrapped angle advance of the step
/// and of both halves is below pi/2 and the halves compose consistently;
/// each accepted step then brackets at most one root. A step still rotating
/// by more than pi/2 at the relative width floor of 1e-9 is a degenerate
/// cluster and contributes one representative root at its midpoint.
pub fn eigenvalues(
    field: &CoefficientMatrixField,
    boundary: &BoundaryData,
    window: (f64, f64),
    resolution: f64,
) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Usage("window must be finite and nonempty".into()));
    }
    if !(resolution > 0.0) {
        return Err(Error::Usage("resolution must be positive".into()));
    }
    let n = ((hi - lo) / resolution).ceil().max(1.0) as usize;
    let mut pts: Vec<ScanPoint> = Vec::with_capacity(2 * n + 1);
    let mut prev = scan_point(field, boundary, lo)?;
    pts.push(prev);
    for i in 1..=n {
        let lam = lo + (hi - lo) * i as f64 / n as f64;
        let next = scan_point(field, boundary, lam)?;
        refine_scan(field, boundary, prev, next, &mut pts)?;
        prev = next;
    }

    let mut roots: Vec<f64> = Vec::new();
    for pair in pts.windows(2) {
        let (pa, pb) = (pair[0], pair[1]);
        if pa.omega == 0.0 {
            roots.push(pa.lam);
            continue;
        }
        if pb.omega == 0.0 {
            // picked up as the left endpoint of the next step
            continue;
        }
        if pa.omega.signum() == pb.omega.signum() {
            // An even crossing cluster can only hide below the width floor.
            let scale = pa.lam.abs().max(pb.lam.abs()).max(1.0);
            if pb.lam - pa.lam <= 1.01 * SCAN_WIDTH_FLOOR * scale
                && wrap_to_pi(pb.theta - pa.theta).abs() > 0.5 * std::f64::consts::PI
            {
                roots.push(0.5 * (pa.lam + pb.lam));
            }
            continue;
        }
        let (mut a, mut b, mut fa) = (pa.lam, pb.lam, pa.omega);
        while b - a > 1e-10 * a.abs().max(1.0) {
            let mid = 0.5 * (a + b);
            let fm = omega(field, boundary, mid)?;
            if fm == 0.0 {
                a = mid;
                b = mid;
            } else if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if pts.last().expect("nonempty scan").omega == 0.0 {
        roots.push(hi);
    }
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(roots)
}

/// An atomic spectral measure restricted to a window.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    pub window: (f64, f64),
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, window: (f64, f64)) -> Result<Self> {
        for (i, &(loc, mass)) in atoms.iter().enumerate() {
            if !loc.is_finite() || !(mass > 0.0) || mass.is_infinite() {
                return Err(Error::Usage(format!("bad atom ({loc}, {mass})")));
            }
            if i > 0 && loc <= atoms[i - 1].0 {
                return Err(Error::Usage("atom locations must be strictly increasing".into()));
            }
        }
        Ok(SpectralMeasure { atoms, window })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.1).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// Full pipeline for a limit-circle system: locate eigenvalues in `window`,
/// then recover each mass by Stieltjes inversion of the Weyl function at the
/// located root. Atoms whose extrapolated mass clamps to zero are dropped
/// (the epsilon schedule failed to separate them, which the caller can detect
/// by comparing counts with [`eigenvalues`]).
pub fn spectral_measure(
    field: &CoefficientMatrixField,
    boundary: &BoundaryData,
    window: (f64, f64),
    resolution: f64,
    eps_schedule: &[f64],
) -> Result<SpectralMeasure> {
    let locs = eigenvalues(field, boundary, window, resolution)?;
    let m = weyl_m_limit_circle(field, boundary);
    let mut atoms = Vec::with_capacity(locs.len());
    for &loc in &locs {
        let atom = stieltjes_atom(&m, loc, eps_schedule)?;
        if atom.mass > 0.0 {
            atoms.push((loc, atom.mass));
        }
    }
    SpectralMeasure::new(atoms, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn free_field(b: f64, steps: usize) -> CoefficientMatrixField {
        CoefficientMatrixField::constant(Sym2::IDENTITY, b, steps, false).unwrap()
    }

    #[test]
    fn field_validation() {
        let grid = TimeGrid::uniform(0.0, 1.0, 4, crate::stochastic::GridCoord::Native).unwrap();
        assert!(matches!(
            CoefficientMatrixField::new(grid.clone(), vec![Sym2::IDENTITY; 3], false),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            CoefficientMatrixField::new(grid.clone(), vec![Sym2::ZERO; 5], false),
            Err(Error::Usage(_))
        ));
        let indefinite = Sym2::new(1.0, 2.0, 1.0);
        assert!(matches!(
            CoefficientMatrixField::new(grid, vec![indefinite; 5], false),
            Err(Error::Integrity { .. })
        ));
    }

    #[test]
    fn transfer_free_system_closed_form() {
        let field = free_field(2.0, 40);
        // z = 0 freezes the flow.
        for &t in &[0.0, 0.37, 2.0] {
            let tm = transfer_matrix(&field, t, Complex64::new(0.0, 0.0)).unwrap();
            assert!((tm.value.m[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!(tm.value.m[0][1].norm() < 1e-14);
        }
        // T(t, z) = exp(z t J) is a rotation by z t; at z = pi, t = 2 it closes up.
        let tm = transfer_matrix(&field, 2.0, Complex64::new(std::f64::consts::PI, 0.0)).unwrap();
        assert!((tm.value.m[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(tm.value.m[1][0].norm() < 1e-12);
        // A time strictly inside a step still matches the closed form.
        let z = Complex64::new(1.3, 0.0);
        let t = 0.775;
        let tm = transfer_matrix(&field, t, z).unwrap();
        assert_relative_eq!(tm.value.m[0][0].re, (1.3 * t).cos(), epsilon = 1e-13);
        assert_relative_eq!(tm.value.m[1][0].re, (1.3 * t).sin(), epsilon = 1e-13);
        assert!(tm.value.max_im() < 1e-12);
        // Unimodularity at a genuinely complex z.
        let tm = transfer_matrix(&field, 2.0, Complex64::new(1.0, 2.0)).unwrap();
        assert!((tm.value.det() - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        // Out-of-range times are rejected.
        assert!(transfer_matrix(&field, -0.1, z).is_err());
        assert!(transfer_matrix(&field, 2.1, z).is_err());
    }

    #[test]
    fn transfer_through_matches_pointwise() {
        let field = free_field(1.0, 17);
        let z = Complex64::new(0.8, 0.3);
        let all = transfer_through(&field, z).unwrap();
        for (k, &t) in field.grid().nodes().iter().enumerate().step_by(5) {
            let tm = transfer_matrix(&field, t, z).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((all[k].m[i][j] - tm.value.m[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weyl_limit_circle_free_fixture() {
        // H = I on [0, pi], w = (1, 0): m(z) = -cot(pi z).
        let field = free_field(std::f64::consts::PI, 200);
        let boundary = BoundaryData::Vector([1.0, 0.0]);
        let m = weyl_m_limit_circle(&field, &boundary);
        let mi = m(Complex64::new(0.0, 1.0)).unwrap();
        // coth(pi) to machine precision.
        assert!(mi.re.abs() < 1e-10);
        assert_relative_eq!(mi.im, 1.0037418731973098, epsilon = 1e-10);
        assert!(mi.im > 0.0);
        // Conjugate symmetry on a small grid.
        for &z in &[
            Complex64::new(0.3, 0.7),
            Complex64::new(-1.2, 0.4),
            Complex64::new(2.0, 2.0),
        ] {
            let a = m(z).unwrap();
            let b = m(z.conj()).unwrap();
            assert!((a.conj() - b).norm() < 1e-10);
        }
    }

    #[test]
    fn weyl_value_hits_infinity_at_eigenvalues() {
        // At z = 0 the free system with w = (0, 1) has v = w, v_2 = 1: finite.
        // With w = (1, 0) and z such that T^{-1}w aligns with e_1 the ratio is
        // infinite; z = 1 rotates by pi over [0, pi], keeping w on the axis.
        let field = free_field(std::f64::consts::PI, 100);
        let boundary = BoundaryData::Vector([1.0, 0.0]);
        let m = weyl_m_limit_circle(&field, &boundary);
        let v = m(Complex64::new(1.0, 0.0)).unwrap();
        assert!(!v.is_finite() || v.norm() > 1e10);
    }

    #[test]
    fn stieltjes_reference_masses() {
        // Single atom: m(z) = 1 / (lambda0 - z).
        let lambda0 = 0.75;
        let single = |z: Complex64| Ok(Complex64::new(1.0, 0.0) / (Complex64::new(lambda0, 0.0) - z));
        let atom = stieltjes_atom(single, lambda0, &EPS_SCHEDULE).unwrap();
        assert_relative_eq!(atom.mass, 1.0, epsilon = 1e-12);
        assert!(atom.imag_residue < 1e-12);
        let off = stieltjes_atom(single, lambda0 + 0.5, &EPS_SCHEDULE).unwrap();
        assert!(off.mass < 1e-5);

        // m(z) = -cot(pi z) has mass 1/pi at every integer.
        let cot = |z: Complex64| {
            let pz = z * std::f64::consts::PI;
            Ok(-pz.cos() / pz.sin())
        };
        let atom = stieltjes_atom(cot, 3.0, &EPS_SCHEDULE).unwrap();
        assert_relative_eq!(atom.mass, std::f64::consts::FRAC_1_PI, epsilon = 1e-4);

        // No atoms at all.
        let entire = |z: Complex64| Ok(z);
        let atom = stieltjes_atom(entire, 0.3, &EPS_SCHEDULE).unwrap();
        assert!(atom.mass < 1e-10);

        // Schedule validation.
        assert!(stieltjes_atom(entire, 0.0, &[1e-3]).is_err());
        assert!(stieltjes_atom(entire, 0.0, &[1e-4, 1e-3]).is_err());
    }

    #[test]
    fn herglotz_violation_controls() {
        let zs: Vec<Complex64> = (1..6)
            .map(|k| Complex64::new(k as f64 - 3.0, 0.2 * k as f64))
            .collect();
        assert_eq!(herglotz_violation(|z| Ok(z), &zs).unwrap(), 0.0);
        assert_eq!(
            herglotz_violation(|z| Ok(-z.inv()), &zs).unwrap(),
            0.0
        );
        let v = herglotz_violation(|z| Ok(z.conj()), &zs).unwrap();
        assert!(v > 0.0);
        let bad = [Complex64::new(0.0, -1.0)];
        assert!(herglotz_violation(|z| Ok(z), &bad).is_err());
    }

    #[test]
    fn eigenvalues_free_fixture() {
        // omega(lambda) = -sin(pi lambda): roots are the integers.
        let field = free_field(std::f64::consts::PI, 64);
        let boundary = BoundaryData::Vector([1.0, 0.0]);
        let roots = eigenvalues(&field, &boundary, (-5.5, 5.5), 0.05).unwrap();
        assert_eq!(roots.len(), 11);
        for (k, r) in roots.iter().enumerate() {
            assert_relative_eq!(*r, k as f64 - 5.0, epsilon = 1e-8);
        }
        let none = eigenvalues(&field, &boundary, (0.2, 0.8), 0.05).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn eigenvalue_scan_refines_a_coarse_start() {
        // At resolution 1.0 the Pruefer angle advances by pi per scan step;
        // the adaptive subdivision must still recover every root.
        let field = free_field(std::f64::consts::PI, 64);
        let boundary = BoundaryData::Vector([1.0, 0.0]);
        let coarse = eigenvalues(&field, &boundary, (-3.5, 3.5), 1.0).unwrap();
        assert_eq!(coarse.len(), 7);
        for (k, r) in coarse.iter().enumerate() {
            assert_relative_eq!(*r, k as f64 - 3.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn weyl_limit_point_free_fixture() {
        // Half-line free system: m(i) = i, approached through truncations.
        let field = free_field(40.0, 4000);
        let point = weyl_m_limit_point(
            &field,
            (0.0, std::f64::consts::FRAC_PI_3),
            &[5.0, 10.0, 20.0, 40.0],
            Complex64::new(0.0, 1.0),
            1e-6,
        )
        .unwrap();
        assert!(point.certified);
        assert!((point.value - Complex64::new(0.0, 1.0)).norm() < 1e-4);
        assert!(point.value.im >= -1e-9);
        for pair in point.radii.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
        // Exhausted schedule: still a value, not certified.
        let rough = weyl_m_limit_point(
            &field,
            (0.0, std::f64::consts::FRAC_PI_3),
            &[0.5, 1.0],
            Complex64::new(0.0, 1.0),
            1e-12,
        )
        .unwrap();
        assert!(!rough.certified);
        assert!(rough.value.is_finite());
    }

    #[test]
    fn spectral_measure_free_fixture() {
        let field = free_field(std::f64::consts::PI, 128);
        let boundary = BoundaryData::Vector([1.0, 0.0]);
        let mu = spectral_measure(&field, &boundary, (-1.5, 1.5), 0.05, &EPS_SCHEDULE).unwrap();
        assert_eq!(mu.len(), 3);
        for &(loc, mass) in mu.atoms() {
            assert!(loc.round().abs() <= 1.0 && (loc - loc.round()).abs() < 1e-7);
            assert_relative_eq!(mass, std::f64::consts::FRAC_1_PI, epsilon = 5e-4);
        }
        assert_relative_eq!(mu.total_mass(), 3.0 * std::f64::consts::FRAC_1_PI, epsilon = 2e-3);
    }

    #[test]
    fn boundary_data_vectors() {
        let angle = BoundaryData::Angle(std::f64::consts::FRAC_PI_2);
        let v = angle.real_vector_at(0.0).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let zero = BoundaryData::Vector([0.0, 0.0]);
        assert!(zero.vector_at(Complex64::new(0.0, 1.0)).is_err());
        let zdep = BoundaryData::ZDependent(std::sync::Arc::new(|z| {
            Ok([Complex64::new(1.0, 0.0), z])
        }));
        let v = zdep.vector_at(Complex64::new(0.0, 2.0)).unwrap();
        assert_eq!(v[1], Complex64::new(0.0, 2.0));
        let w = zdep.real_vector_at(5.0).unwrap();
        assert_eq!(w, [1.0, 5.0]);
        // A genuinely complex vector at a real lambda is rejected.
        let bad = BoundaryData::ZDependent(std::sync::Arc::new(|_| {
            Ok([Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)])
        }));
        assert!(bad.real_vector_at(5.0).is_err());
    }
}
