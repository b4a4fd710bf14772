//! Test coefficient pairs: a single absorbing disk, a heart-and-lungs
//! arrangement, and the Shepp-Logan head phantom, plus the derived optical
//! fields `D = 0.1 sigma` and `Gamma = 1`.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::scalar::{cast, Scalar};

/// Available phantom geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Disk,
    HeartLung,
    SheppLogan,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 3] = [Self::Disk, Self::HeartLung, Self::SheppLogan];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Disk => "disk",
            Self::HeartLung => "heartlung",
            Self::SheppLogan => "shepplogan",
        }
    }

    /// Background absorption values `(sigma_b, mu_b)` used by the experiments.
    pub fn default_backgrounds<T: Scalar>(&self) -> (T, T) {
        match self {
            Self::SheppLogan => (cast(0.3), cast(0.03)),
            _ => (cast(0.1), cast(0.01)),
        }
    }
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Self::Disk),
            "heartlung" => Ok(Self::HeartLung),
            "shepplogan" => Ok(Self::SheppLogan),
            other => Err(Error::InvalidConfig(format!(
                "unknown phantom '{other}'; valid names: disk, heartlung, shepplogan"
            ))),
        }
    }
}

/// Phantom request: geometry, backgrounds and target grid.
#[derive(Debug, Clone, Copy)]
pub struct PhantomSpec<T: Scalar> {
    pub kind: PhantomKind,
    pub sigma_b: T,
    pub mu_b: T,
    pub grid: Grid2D<T>,
}

impl<T: Scalar> PhantomSpec<T> {
    pub fn new(kind: PhantomKind, grid: Grid2D<T>) -> Self {
        let (sigma_b, mu_b) = kind.default_backgrounds();
        Self { kind, sigma_b, mu_b, grid }
    }
}

/// Build the requested phantom.
pub fn make_phantom<T: Scalar>(spec: &PhantomSpec<T>) -> (ScalarField<T>, ScalarField<T>) {
    match spec.kind {
        PhantomKind::Disk => make_disk(&spec.grid, spec.sigma_b, spec.mu_b),
        PhantomKind::HeartLung => make_heartlung(&spec.grid, spec.sigma_b, spec.mu_b),
        PhantomKind::SheppLogan => make_shepplogan(&spec.grid, spec.sigma_b),
    }
}

/// Disk of radius 0.25 centered at (0.25, 0.25): `sigma = 1`, `mu = 0.1`
/// inside (boundary points count as inside), backgrounds outside.
pub fn make_disk<T: Scalar>(
    grid: &Grid2D<T>,
    sigma_b: T,
    mu_b: T,
) -> (ScalarField<T>, ScalarField<T>) {
    let cx = cast::<T>(0.25);
    let cy = cast::<T>(0.25);
    let r = cast::<T>(0.25);
    let inside = move |x: T, y: T| (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
    let sigma = ScalarField::from_fn(*grid, |x, y| if inside(x, y) { T::one() } else { sigma_b });
    let mu = ScalarField::from_fn(*grid, |x, y| if inside(x, y) { cast(0.1) } else { mu_b });
    (sigma, mu)
}

/// Geometry of the heart-and-lungs phantom; override to move the organs.
#[derive(Debug, Clone, Copy)]
pub struct HeartLungGeometry<T: Scalar> {
    pub lung_centers: [(T, T); 2],
    pub lung_semi_axes: (T, T),
    pub lung_sigma: T,
    pub heart_center: (T, T),
    pub heart_radius: T,
    pub heart_sigma: T,
}

impl<T: Scalar> Default for HeartLungGeometry<T> {
    fn default() -> Self {
        Self {
            lung_centers: [(cast(-0.4), cast(0.1)), (cast(0.4), cast(0.1))],
            lung_semi_axes: (cast(0.25), cast(0.45)),
            lung_sigma: T::one(),
            heart_center: (T::zero(), cast(-0.25)),
            heart_radius: cast(0.2),
            heart_sigma: cast(0.5),
        }
    }
}

/// Two elliptical lungs (`sigma = 1`) and a circular heart (`sigma = 0.5`);
/// `mu = 0.1 sigma` on the inclusions, backgrounds elsewhere.
pub fn make_heartlung<T: Scalar>(
    grid: &Grid2D<T>,
    sigma_b: T,
    mu_b: T,
) -> (ScalarField<T>, ScalarField<T>) {
    make_heartlung_with(grid, sigma_b, mu_b, &HeartLungGeometry::default())
}

pub fn make_heartlung_with<T: Scalar>(
    grid: &Grid2D<T>,
    sigma_b: T,
    mu_b: T,
    geom: &HeartLungGeometry<T>,
) -> (ScalarField<T>, ScalarField<T>) {
    let one = T::one();
    let tenth = cast::<T>(0.1);
    let sigma_at = move |x: T, y: T| {
        let (hx, hy) = geom.heart_center;
        let dx = x - hx;
        let dy = y - hy;
        if dx * dx + dy * dy <= geom.heart_radius * geom.heart_radius {
            return Some(geom.heart_sigma);
        }
        let (a, b) = geom.lung_semi_axes;
        for (cx, cy) in geom.lung_centers {
            let ex = (x - cx) / a;
            let ey = (y - cy) / b;
            if ex * ex + ey * ey <= one {
                return Some(geom.lung_sigma);
            }
        }
        None
    };
    let sigma = ScalarField::from_fn(*grid, |x, y| sigma_at(x, y).unwrap_or(sigma_b));
    let mu = ScalarField::from_fn(*grid, |x, y| sigma_at(x, y).map_or(mu_b, |s| tenth * s));
    (sigma, mu)
}

/// Shepp-Logan ellipse table: (x0, y0, semi-axis a, semi-axis b, angle in
/// degrees, additive intensity). Superposition ranges over [0, 2].
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (0.0, 0.0, 0.69, 0.92, 0.0, 2.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.02),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.02),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.01),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.01),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.01),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.01),
    (0.0, -0.605, 0.023, 0.023, 0.0, 0.01),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.01),
];

/// Sum the ellipse intensities at a point, restricted to the table rows in
/// `rows` (use `0..10` for the full phantom).
fn shepp_logan_intensity<T: Scalar>(x: T, y: T, rows: std::ops::Range<usize>) -> T {
    let mut acc = T::zero();
    for &(x0, y0, a, b, phi_deg, value) in &SHEPP_LOGAN[rows] {
        let phi = cast::<T>(phi_deg.to_radians());
        let (s, c) = phi.sin_cos();
        let dx = x - cast::<T>(x0);
        let dy = y - cast::<T>(y0);
        let xr = (c * dx + s * dy) / cast::<T>(a);
        let yr = (c * dy - s * dx) / cast::<T>(b);
        if xr * xr + yr * yr <= T::one() {
            acc = acc + cast::<T>(value);
        }
    }
    acc
}

/// Shepp-Logan phantom mapped affinely so the exterior equals `sigma_b` and
/// the maximum equals 1; `mu = 0.1 sigma` nodewise.
pub fn make_shepplogan<T: Scalar>(
    grid: &Grid2D<T>,
    sigma_b: T,
) -> (ScalarField<T>, ScalarField<T>) {
    let two = T::one() + T::one();
    let slope = (T::one() - sigma_b) / two;
    let sigma = ScalarField::from_fn(*grid, |x, y| {
        sigma_b + slope * shepp_logan_intensity(x, y, 0..SHEPP_LOGAN.len())
    });
    let mu = sigma.scale(cast(0.1));
    (sigma, mu)
}

/// Derived optical fields: `D = 0.1 sigma` and `Gamma = 1`; rejects
/// nonpositive `sigma` since the diffusion coefficient must stay positive.
pub fn derive_optics<T: Scalar>(sigma: &ScalarField<T>) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let min = sigma.min_value();
    if !(min > T::zero()) {
        return Err(Error::NonPositiveField {
            name: "absorption coefficient",
            min: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((
        sigma.scale(cast(0.1)),
        ScalarField::constant(*sigma.grid(), T::one()),
    ))
}
