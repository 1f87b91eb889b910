//! State representation, equation of state, total-pressure conversions and
//! generation of compatible initial-data families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{apply_ghost_fill, Grid, ParityTable};

/// Hard guard on the recovered physical pressure during runs.
pub const PRESSURE_GUARD: f64 = 10.0;

pub const COMPONENT_NAMES: [&str; 7] = ["q", "v1", "v2", "v3", "h1", "h2", "h3"];

/// The 7-component unknown (q, v, H) at a fixed stiffness parameter.
#[derive(Debug, Clone)]
pub struct StateField {
    pub q: ScalarField,
    pub v: [ScalarField; 3],
    pub h: [ScalarField; 3],
    pub lambda: f64,
}

impl StateField {
    pub fn zeros(grid: &Grid, lambda: f64) -> Self {
        StateField {
            q: ScalarField::zeros(grid),
            v: std::array::from_fn(|_| ScalarField::zeros(grid)),
            h: std::array::from_fn(|_| ScalarField::zeros(grid)),
            lambda,
        }
    }

    pub fn components(&self) -> [&ScalarField; 7] {
        [
            &self.q, &self.v[0], &self.v[1], &self.v[2], &self.h[0], &self.h[1], &self.h[2],
        ]
    }

    pub fn components_mut(&mut self) -> [&mut ScalarField; 7] {
        let StateField { q, v, h, .. } = self;
        let [v1, v2, v3] = v;
        let [h1, h2, h3] = h;
        [q, v1, v2, v3, h1, h2, h3]
    }

    /// Zero the wall-normal components exactly at both wall nodes.
    pub fn apply_wall_bc(&mut self, grid: &Grid) {
        let last = (grid.n1 - 1) as isize;
        for j in 0..grid.n2 {
            self.v[0].set(0, j, 0.0);
            self.v[0].set(last, j, 0.0);
            self.h[0].set(0, j, 0.0);
            self.h[0].set(last, j, 0.0);
        }
    }

    /// Refresh every component's ghost layers with its wall parity.
    pub fn fill_ghosts(&mut self, grid: &Grid) {
        let table = ParityTable::default();
        for (c, comp) in self.components_mut().into_iter().enumerate() {
            apply_ghost_fill(comp, grid, table.components[c]);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.components().iter().all(|c| c.all_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    /// `self += a * other` componentwise.
    pub fn axpy(&mut self, a: f64, other: &StateField) {
        self.q.axpy(a, &other.q);
        for k in 0..3 {
            self.v[k].axpy(a, &other.v[k]);
            self.h[k].axpy(a, &other.h[k]);
        }
    }

    /// `self = a*self + b*other` componentwise.
    pub fn combine(&mut self, a: f64, b: f64, other: &StateField) {
        self.q.combine(a, b, &other.q);
        for k in 0..3 {
            self.v[k].combine(a, b, &other.v[k]);
            self.h[k].combine(a, b, &other.h[k]);
        }
    }
}

/// Barotropic pressure law. The exponential default gives unit reference
/// density and compressibility, so the acoustic speed is exactly lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MaterialLaw {
    Exponential,
    /// rho(p) = rho0 + slope * p; loses hyperbolicity at p <= -rho0/slope.
    Linear { rho0: f64, slope: f64 },
}

impl Default for MaterialLaw {
    fn default() -> Self {
        MaterialLaw::Exponential
    }
}

impl MaterialLaw {
    pub fn rho(&self, p: f64) -> f64 {
        match *self {
            MaterialLaw::Exponential => p.exp(),
            MaterialLaw::Linear { rho0, slope } => rho0 + slope * p,
        }
    }

    pub fn rho_p(&self, p: f64) -> f64 {
        match *self {
            MaterialLaw::Exponential => p.exp(),
            MaterialLaw::Linear { slope, .. } => slope,
        }
    }

    /// rho_p / rho.
    pub fn ratio(&self, p: f64) -> f64 {
        self.rho_p(p) / self.rho(p)
    }

    /// d/dp (rho_p / rho), needed by the chain rule on the mass matrix.
    pub fn ratio_deriv(&self, p: f64) -> f64 {
        match *self {
            MaterialLaw::Exponential => 0.0,
            MaterialLaw::Linear { rho0, slope } => {
                let r = rho0 + slope * p;
                -slope * slope / (r * r)
            }
        }
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho(0.0)
    }

    pub fn rho_p_bar(&self) -> f64 {
        self.rho_p(0.0)
    }

    /// mu1 = (rho_p_bar / rho_bar)^-1.
    pub fn mu1(&self) -> f64 {
        self.rho_bar() / self.rho_p_bar()
    }

    /// mu2 = rho_bar^-1.
    pub fn mu2(&self) -> f64 {
        1.0 / self.rho_bar()
    }

    pub fn tag(&self) -> String {
        match *self {
            MaterialLaw::Exponential => "exp".into(),
            MaterialLaw::Linear { rho0, slope } => format!("linear:{rho0}:{slope}"),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        if tag == "exp" {
            return Ok(MaterialLaw::Exponential);
        }
        if let Some(rest) = tag.strip_prefix("linear:") {
            let mut it = rest.split(':');
            let rho0 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad eos tag {tag}")))?;
            let slope = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad eos tag {tag}")))?;
            return Ok(MaterialLaw::Linear { rho0, slope });
        }
        Err(Error::Format(format!("unknown eos tag {tag}")))
    }
}

/// Evaluate the state equation, rejecting non-hyperbolic points.
pub fn eos(law: &MaterialLaw, p: f64) -> Result<(f64, f64)> {
    let rho = law.rho(p);
    let rho_p = law.rho_p(p);
    if !(rho > 0.0) || !(rho_p > 0.0) {
        return Err(Error::Hyperbolicity(format!(
            "rho = {rho}, rho_p = {rho_p} at p = {p}"
        )));
    }
    Ok((rho, rho_p))
}

/// Total pressure from physical pressure: q = lambda p + |H|^2 / (2 lambda).
pub fn p_to_q(p: f64, h: [f64; 3], lambda: f64) -> f64 {
    lambda * p + (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]) / (2.0 * lambda)
}

/// Physical pressure from total pressure: p = q/lambda - |H/lambda|^2 / 2.
pub fn q_to_p(q: f64, h: [f64; 3], lambda: f64) -> f64 {
    q / lambda - (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]) / (2.0 * lambda * lambda)
}

/// Recovered physical pressure field of a state.
pub fn pressure_field(state: &StateField) -> ScalarField {
    let lambda = state.lambda;
    ScalarField::zip_interior(
        &[&state.q, &state.h[0], &state.h[1], &state.h[2]],
        |vals| q_to_p(vals[0], [vals[1], vals[2], vals[3]], lambda),
    )
}

/// Which total-pressure profile the generator installs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMode {
    /// q0 = 0 (the physical pressure then compensates the magnetic part).
    TotalZero,
    /// p0 = 0, i.e. q0 = |H0|^2 / (2 lambda).
    PhysicalZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    WellPrepared,
    IllPrepared,
}

/// Parameters of the initial-data generator.
///
/// Velocity and magnetic field come from stream functions
/// `psi = amp * chi(x1) * cos(2 pi m x2 / L2 + phase)` with `chi` vanishing
/// to `cutoff_order` at both walls, so the fields are analytically
/// divergence-free with exactly zero wall-normal components. Ill-prepared
/// data add a compact gradient pulse `grad phi` to the velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataFamily {
    pub kind: FamilyKind,
    pub stream_v_amplitude: f64,
    pub stream_v_mode: usize,
    pub stream_h_amplitude: f64,
    pub stream_h_mode: usize,
    pub h3_amplitude: f64,
    /// Uniform tangential magnetic component (guide field).
    pub guide_s2: f64,
    pub guide_s3: f64,
    pub gradient_amplitude: f64,
    pub gradient_center: f64,
    pub gradient_width: f64,
    pub gradient_mode: usize,
    pub q0_amplitude: f64,
    pub pressure_mode: PressureMode,
    pub cutoff_order: u32,
    pub seed: u64,
}

impl DataFamily {
    pub fn well_prepared() -> Self {
        DataFamily {
            kind: FamilyKind::WellPrepared,
            stream_v_amplitude: 0.1,
            stream_v_mode: 1,
            stream_h_amplitude: 0.12,
            stream_h_mode: 1,
            h3_amplitude: 0.0,
            guide_s2: 0.0,
            guide_s3: 0.0,
            gradient_amplitude: 0.0,
            gradient_center: 0.3,
            gradient_width: 0.18,
            gradient_mode: 5,
            q0_amplitude: 0.0,
            pressure_mode: PressureMode::TotalZero,
            cutoff_order: 4,
            seed: 0,
        }
    }

    pub fn ill_prepared() -> Self {
        DataFamily {
            kind: FamilyKind::IllPrepared,
            gradient_amplitude: 0.012,
            ..DataFamily::well_prepared()
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if self.cutoff_order < 4 {
            return Err(Error::DataFamily(format!(
                "cutoff order {} below 4",
                self.cutoff_order
            )));
        }
        if self.kind == FamilyKind::IllPrepared && self.gradient_amplitude != 0.0 {
            let lo = self.gradient_center - self.gradient_width;
            let hi = self.gradient_center + self.gradient_width;
            if lo <= 0.0 || hi >= grid.l1 {
                return Err(Error::DataFamily(format!(
                    "gradient pulse support [{lo}, {hi}] must stay inside (0, {})",
                    grid.l1
                )));
            }
        }
        Ok(())
    }
}

/// chi(x) = (4 x (L-x) / L^2)^c: unit peak, vanishing to order c at both walls.
fn chi(x: f64, l1: f64, c: u32) -> f64 {
    (4.0 * x * (l1 - x) / (l1 * l1)).powi(c as i32)
}

fn chi_deriv(x: f64, l1: f64, c: u32) -> f64 {
    let base = 4.0 * x * (l1 - x) / (l1 * l1);
    let dbase = 4.0 * (l1 - 2.0 * x) / (l1 * l1);
    c as f64 * base.powi(c as i32 - 1) * dbase
}

/// Compact C^4 bump on [center - width, center + width].
pub fn bump(x: f64, center: f64, width: f64) -> f64 {
    let s = (x - center) / width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(5)
    }
}

pub fn bump_deriv(x: f64, center: f64, width: f64) -> f64 {
    let s = (x - center) / width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        -10.0 * s * (1.0 - s * s).powi(4) / width
    }
}

/// Build compatible initial data for the given family on the grid.
pub fn make_initial_data(family: &DataFamily, grid: &Grid, lambda: f64) -> Result<StateField> {
    family.validate(grid)?;
    if lambda < 1.0 {
        return Err(Error::DataFamily(format!("lambda = {lambda} below 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
    let phase_v: f64 = rng.gen_range(0.0..2.0 * PI);
    let phase_h: f64 = rng.gen_range(0.0..2.0 * PI);
    let phase_g: f64 = rng.gen_range(0.0..2.0 * PI);
    let phase_q: f64 = rng.gen_range(0.0..2.0 * PI);

    let l1 = grid.l1;
    let l2 = grid.l2;
    let c = family.cutoff_order;
    let kv = 2.0 * PI * family.stream_v_mode as f64 / l2;
    let kh = 2.0 * PI * family.stream_h_mode as f64 / l2;
    let kg = 2.0 * PI * family.gradient_mode as f64 / l2;

    let av = family.stream_v_amplitude;
    let ah = family.stream_h_amplitude;
    let ag = if family.kind == FamilyKind::IllPrepared {
        family.gradient_amplitude
    } else {
        0.0
    };

    let mut state = StateField::zeros(grid, lambda);

    // velocity: curl of a stream function, plus the gradient pulse
    state.v[0] = ScalarField::from_fn(grid, |x1, x2| {
        let solenoidal = -av * chi(x1, l1, c) * kv * (kv * x2 + phase_v).sin();
        let gradient = ag
            * bump_deriv(x1, family.gradient_center, family.gradient_width)
            * (kg * x2 + phase_g).cos();
        solenoidal + gradient
    });
    state.v[1] = ScalarField::from_fn(grid, |x1, x2| {
        let solenoidal = -av * chi_deriv(x1, l1, c) * (kv * x2 + phase_v).cos();
        let gradient = -ag
            * bump(x1, family.gradient_center, family.gradient_width)
            * kg
            * (kg * x2 + phase_g).sin();
        solenoidal + gradient
    });

    // magnetic field: stream function plus optional uniform guide components
    state.h[0] = ScalarField::from_fn(grid, |x1, x2| {
        -ah * chi(x1, l1, c) * kh * (kh * x2 + phase_h).sin()
    });
    state.h[1] = ScalarField::from_fn(grid, |x1, x2| {
        -ah * chi_deriv(x1, l1, c) * (kh * x2 + phase_h).cos() + family.guide_s2
    });
    state.h[2] = ScalarField::from_fn(grid, |x1, x2| {
        family.h3_amplitude * chi(x1, l1, c) * (kh * x2 + phase_h).cos() + family.guide_s3
    });

    // total pressure
    match family.pressure_mode {
        PressureMode::TotalZero => {
            if family.q0_amplitude != 0.0 {
                let aq = family.q0_amplitude;
                state.q = ScalarField::from_fn(grid, |x1, x2| {
                    aq * chi(x1, l1, c) * (kv * x2 + phase_q).cos()
                });
            }
        }
        PressureMode::PhysicalZero => {
            state.q = ScalarField::zip_interior(
                &[&state.h[0], &state.h[1], &state.h[2]],
                |h| (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]) / (2.0 * lambda),
            );
        }
    }

    state.apply_wall_bc(grid);
    state.fill_ghosts(grid);
    Ok(state)
}

/// Compatibility diagnostics of a candidate initial state.
#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    pub max_wall_v1: f64,
    pub max_wall_h1: f64,
    pub max_div_h: f64,
    pub wall_tolerance: f64,
    pub div_tolerance: f64,
    pub ok: bool,
}

pub fn check_compatibility(state: &StateField, grid: &Grid) -> CompatReport {
    check_compatibility_with(state, grid, 1e-12, 1e-6)
}

pub fn check_compatibility_with(
    state: &StateField,
    grid: &Grid,
    wall_tolerance: f64,
    div_tolerance: f64,
) -> CompatReport {
    let last = (grid.n1 - 1) as isize;
    let mut max_wall_v1 = 0.0f64;
    let mut max_wall_h1 = 0.0f64;
    for j in 0..grid.n2 {
        max_wall_v1 = max_wall_v1
            .max(state.v[0].get(0, j).abs())
            .max(state.v[0].get(last, j).abs());
        max_wall_h1 = max_wall_h1
            .max(state.h[0].get(0, j).abs())
            .max(state.h[0].get(last, j).abs());
    }
    // one-sided stencils: the check makes no parity assumption on the data
    let div = crate::grid::divergence_one_sided(&state.h[0], &state.h[1], grid);
    let max_div_h = div.max_abs();
    CompatReport {
        max_wall_v1,
        max_wall_h1,
        max_div_h,
        wall_tolerance,
        div_tolerance,
        ok: max_wall_v1 <= wall_tolerance
            && max_wall_h1 <= wall_tolerance
            && max_div_h <= div_tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eos_default_values() {
        let law = MaterialLaw::Exponential;
        let (rho, rho_p) = eos(&law, 0.0).unwrap();
        assert_relative_eq!(rho, 1.0);
        assert_relative_eq!(rho_p, 1.0);
        let (rho, rho_p) = eos(&law, 1.0).unwrap();
        assert_relative_eq!(rho, std::f64::consts::E);
        assert_relative_eq!(rho_p, std::f64::consts::E);
        // rho_p / rho is identically one for the exponential law
        for p in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            assert_relative_eq!(law.ratio(p), 1.0);
        }
        assert_relative_eq!(law.mu1(), 1.0);
        assert_relative_eq!(law.mu2(), 1.0);
    }

    #[test]
    fn eos_rejects_nonpositive_density() {
        let law = MaterialLaw::Linear {
            rho0: 1.0,
            slope: 0.5,
        };
        assert!(eos(&law, 0.0).is_ok());
        assert!(eos(&law, -3.0).is_err());
    }

    #[test]
    fn eos_tag_round_trip() {
        for law in [
            MaterialLaw::Exponential,
            MaterialLaw::Linear {
                rho0: 1.5,
                slope: 0.25,
            },
        ] {
            assert_eq!(MaterialLaw::from_tag(&law.tag()).unwrap(), law);
        }
        assert!(MaterialLaw::from_tag("nope").is_err());
    }

    #[test]
    fn total_pressure_examples() {
        assert_relative_eq!(p_to_q(1.0, [0.0, 2.0, 0.0], 2.0), 3.0);
        assert_relative_eq!(q_to_p(3.0, [0.0, 2.0, 0.0], 2.0), 1.0);
        // H = 0 collapses to q = lambda p
        assert_relative_eq!(p_to_q(0.7, [0.0; 3], 5.0), 3.5);
    }

    proptest! {
        #[test]
        fn pressure_round_trip(p in -5.0f64..5.0, h1 in -3.0f64..3.0,
                               h2 in -3.0f64..3.0, h3 in -3.0f64..3.0,
                               lambda in 1.0f64..64.0) {
            let h = [h1, h2, h3];
            let q = p_to_q(p, h, lambda);
            let back = q_to_p(q, h, lambda);
            prop_assert!((back - p).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn generated_data_is_compatible() {
        let grid = build_grid(65, 32, 1.0, 1.0).unwrap();
        let fam = DataFamily::well_prepared();
        let state = make_initial_data(&fam, &grid, 8.0).unwrap();
        let report = check_compatibility(&state, &grid);
        assert_eq!(report.max_wall_v1, 0.0);
        assert_eq!(report.max_wall_h1, 0.0);
        assert!(report.max_div_h < 1e-3, "div H = {}", report.max_div_h);
    }

    #[test]
    fn generated_divergence_refines_at_fourth_order() {
        // discrete div of the analytic stream-function data, measured with
        // the parity-free one-sided stencils
        let fam = DataFamily::well_prepared();
        let mut errs = Vec::new();
        for &(n1, n2) in &[(33usize, 16usize), (65, 32), (129, 64)] {
            let grid = build_grid(n1, n2, 1.0, 1.0).unwrap();
            let state = make_initial_data(&fam, &grid, 4.0).unwrap();
            let div = crate::grid::divergence_one_sided(&state.v[0], &state.v[1], &grid);
            errs.push(div.max_abs());
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 3.5, "orders from errors {errs:?}: {order}");
    }

    #[test]
    fn zero_amplitude_gives_zero_state() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let mut fam = DataFamily::ill_prepared();
        fam.stream_v_amplitude = 0.0;
        fam.stream_h_amplitude = 0.0;
        fam.gradient_amplitude = 0.0;
        let state = make_initial_data(&fam, &grid, 4.0).unwrap();
        assert_eq!(state.max_abs(), 0.0);
    }

    #[test]
    fn cutoff_order_below_four_rejected() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let mut fam = DataFamily::well_prepared();
        fam.cutoff_order = 3;
        assert!(make_initial_data(&fam, &grid, 4.0).is_err());
    }

    #[test]
    fn wall_violation_is_flagged() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let mut state = StateField::zeros(&grid, 4.0);
        state.v[0].set(0, 3, 0.1);
        let report = check_compatibility(&state, &grid);
        assert!(!report.ok);
        assert_relative_eq!(report.max_wall_v1, 0.1);
    }

    #[test]
    fn zero_state_reports_zero() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let state = StateField::zeros(&grid, 4.0);
        let report = check_compatibility(&state, &grid);
        assert_eq!(report.max_wall_v1, 0.0);
        assert_eq!(report.max_wall_h1, 0.0);
        assert_eq!(report.max_div_h, 0.0);
        assert!(report.ok);
    }

    #[test]
    fn physical_zero_mode_sets_q_to_magnetic_part() {
        let grid = build_grid(33, 16, 1.0, 1.0).unwrap();
        let mut fam = DataFamily::well_prepared();
        fam.guide_s2 = 0.4;
        fam.pressure_mode = PressureMode::PhysicalZero;
        let lambda = 8.0;
        let state = make_initial_data(&fam, &grid, lambda).unwrap();
        for i in (0..grid.n1).step_by(7) {
            for j in (0..grid.n2).step_by(3) {
                let h = [
                    state.h[0].get(i as isize, j),
                    state.h[1].get(i as isize, j),
                    state.h[2].get(i as isize, j),
                ];
                let p = q_to_p(state.q.get(i as isize, j), h, lambda);
                assert!(p.abs() < 1e-14);
            }
        }
    }
}
