//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers. The expensive stiffness sweeps are shared
//! across criteria through lazily-initialized fixtures.

use std::sync::OnceLock;

use mhd_slab::acoustic::{acoustic_energy, modal_solution, AcousticMode, LinearAcoustic};
use mhd_slab::checkpoint;
use mhd_slab::field::ScalarField;
use mhd_slab::flux::{assemble_a0_at, assemble_aj_at, cholesky_solve7};
use mhd_slab::grid::{build_grid, Grid};
use mhd_slab::helmholtz::{PoissonProblem, PoissonSolver, SlabProjector};
use mhd_slab::norms::{appendix_battery, norm_spatial, Family, NormSpec};
use mhd_slab::solver::{energy_residual, run, SolverConfig};
use mhd_slab::state::{bump_deriv, make_initial_data, MaterialLaw, StateField};
use mhd_slab_harness::config::RunConfig;
use mhd_slab_harness::sweep::{run_sweep, SweepReport};

const LAW: MaterialLaw = MaterialLaw::Exponential;

/// Default experiment scale: 129 x 64 slab, T = 0.5, lambda in {4,8,16,32}.
fn sweep_config(family_toml: &str) -> RunConfig {
    RunConfig::from_toml(&format!(
        r#"
        [grid]
        n1 = 129
        n2 = 64

        {family_toml}

        [run]
        lambdas = [4.0, 8.0, 16.0, 32.0]
        t_final = 0.5
        outputs = 64
    "#
    ))
    .expect("acceptance config")
}

const ILL_FAMILY: &str = r#"
    [family]
    kind = "ill_prepared"
    stream_v_amplitude = 0.12
    stream_v_mode = 1
    stream_h_amplitude = 0.12
    stream_h_mode = 1
    h3_amplitude = 0.0
    guide_s2 = 0.0
    guide_s3 = 0.0
    gradient_amplitude = 0.006
    gradient_center = 0.3
    gradient_width = 0.18
    gradient_mode = 8
    q0_amplitude = 0.0
    pressure_mode = "total_zero"
    cutoff_order = 4
    seed = 7
"#;

const WP_FAMILY: &str = r#"
    [family]
    kind = "well_prepared"
    stream_v_amplitude = 0.1
    stream_v_mode = 1
    stream_h_amplitude = 0.1
    stream_h_mode = 1
    h3_amplitude = 0.0
    guide_s2 = 0.4
    guide_s3 = 0.2
    gradient_amplitude = 0.0
    gradient_center = 0.3
    gradient_width = 0.18
    gradient_mode = 5
    q0_amplitude = 0.0
    pressure_mode = "physical_zero"
    cutoff_order = 4
    seed = 7
"#;

fn ill_report() -> &'static SweepReport {
    static REPORT: OnceLock<SweepReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        run_sweep(&sweep_config(ILL_FAMILY)).expect("ill-prepared sweep failed")
    })
}

fn wp_report() -> &'static SweepReport {
    static REPORT: OnceLock<SweepReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        run_sweep(&sweep_config(WP_FAMILY)).expect("well-prepared sweep failed")
    })
}

/// Splitmix64: small deterministic generator for the structure checks.
struct SplitMix(u64);
impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

#[test]
fn ac1_structure_checks() {
    let mut rng = SplitMix(0x5eed);
    let mut max_sym: f64 = 0.0;
    let mut max_wall: f64 = 0.0;
    let mut max_scale: f64 = 0.0;
    for _ in 0..1000 {
        let lambda = 1.0 + 31.0 * (rng.next_f64() * 0.5 + 0.5);
        let q = rng.next_f64();
        let v = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
        let h = [rng.next_f64(), rng.next_f64(), rng.next_f64()];

        let a0 = assemble_a0_at(q, h, lambda, &LAW).unwrap();
        // SPD: the explicit Cholesky must factor it
        cholesky_solve7(&a0, &[1.0; 7]).expect("time matrix not SPD");
        for r in 0..7 {
            for c in 0..7 {
                let denom = 1.0f64.max(a0[r][c].abs());
                max_sym = max_sym.max((a0[r][c] - a0[c][r]).abs() / denom);
            }
        }
        for j in 1..=3 {
            let aj = assemble_aj_at(j, q, v, h, lambda, &LAW).unwrap();
            for r in 0..7 {
                for c in 0..7 {
                    let denom = 1.0f64.max(aj[r][c].abs());
                    max_sym = max_sym.max((aj[r][c] - aj[c][r]).abs() / denom);
                }
            }
        }
        // characteristic wall: A1 = 0 on boundary-compatible states
        let vw = [0.0, v[1], v[2]];
        let hw = [0.0, h[1], h[2]];
        let a1 = assemble_aj_at(1, q, vw, hw, lambda, &LAW).unwrap();
        let state_scale = q
            .abs()
            .max(vw.iter().chain(&hw).fold(0.0f64, |m, x| m.max(x.abs())));
        for row in &a1 {
            for &e in row {
                max_wall = max_wall.max(e.abs() / state_scale.max(1e-300));
            }
        }
        // invariance of the time matrix under (u, lambda) -> (c u, c lambda)
        let c = 1.0 + 3.0 * (rng.next_f64() * 0.5 + 0.5);
        let a0s =
            assemble_a0_at(c * q, [c * h[0], c * h[1], c * h[2]], c * lambda, &LAW).unwrap();
        for r in 0..7 {
            for cc in 0..7 {
                let denom = 1.0f64.max(a0[r][cc].abs());
                max_scale = max_scale.max((a0[r][cc] - a0s[r][cc]).abs() / denom);
            }
        }
    }
    assert!(max_sym <= 1e-12, "symmetry defect {max_sym:.3e}");
    assert!(max_wall <= 1e-12, "wall degeneracy defect {max_wall:.3e}");
    assert!(max_scale <= 1e-12, "scaling invariance defect {max_scale:.3e}");
    println!(
        "AC-1 PASS: 1000 states, symmetry {max_sym:.2e}, wall degeneracy {max_wall:.2e}, scaling {max_scale:.2e} (all <= 1e-12)"
    );
}

/// L2 error of a solver run against the exact modal oracle after one
/// period of the (1,1) standing mode at amplitude 1e-6.
fn modal_error(grid: &Grid, lambda: f64, cfl: f64) -> f64 {
    let amp = 1e-6;
    let mode = AcousticMode {
        k1: 1,
        k2: 1,
        amplitude: amp,
        lambda,
        mu1: LAW.mu1(),
        mu2: LAW.mu2(),
    };
    let (q0, v0) = modal_solution(&mode, grid, 0.0);
    let mut state = StateField::zeros(grid, lambda);
    state.q = q0;
    state.v = v0;
    let period = 2.0 * std::f64::consts::PI / mode.frequency(grid);
    let dt0 = mhd_slab::solver::stable_dt(&state, grid, &LAW, cfl);
    let steps = (period / dt0).ceil() as usize;
    let dt = period / steps as f64;
    let mut u = state;
    for _ in 0..steps {
        u = mhd_slab::solver::step_ssprk3(&u, dt, grid, &LAW, 0.0).unwrap();
    }
    let (qe, ve) = modal_solution(&mode, grid, period);
    let mut dq = u.q.clone();
    dq.axpy(-1.0, &qe);
    let mut comps = vec![dq];
    for c in 0..3 {
        let mut dv = u.v[c].clone();
        dv.axpy(-1.0, &ve[c]);
        comps.push(dv);
    }
    let refs: Vec<&ScalarField> = comps.iter().collect();
    grid.l2_norm(&refs) / amp
}

#[test]
fn ac2_solver_verification() {
    // (a) temporal order on a fixed fine grid
    let grid = build_grid(97, 48, 1.0, 1.0).unwrap();
    let cfls = [0.8, 0.4, 0.2];
    let errs: Vec<f64> = cfls.iter().map(|&c| modal_error(&grid, 4.0, c)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (k, o) in orders.iter().enumerate() {
        assert!(
            *o >= 2.7,
            "temporal order {o:.2} below 3 between cfl {} and {} (errors {errs:?})",
            cfls[k],
            cfls[k + 1]
        );
    }

    // (b) simultaneous space-time refinement at fixed cfl
    let ladder = [(33usize, 16usize), (65, 32), (129, 64)];
    let errs2: Vec<f64> = ladder
        .iter()
        .map(|&(n1, n2)| {
            let g = build_grid(n1, n2, 1.0, 1.0).unwrap();
            modal_error(&g, 4.0, 0.4)
        })
        .collect();
    let orders2: Vec<f64> = errs2.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for o in &orders2 {
        assert!(*o >= 2.7, "overall order {o:.2} below 3 (errors {errs2:?})");
    }

    // (c) energy balance on the default smooth run, densely sampled
    let grid = build_grid(129, 64, 1.0, 1.0).unwrap();
    let config = sweep_config(WP_FAMILY);
    let initial = make_initial_data(&config.family, &grid, 8.0).unwrap();
    let projector = SlabProjector::new(&grid);
    let sc = SolverConfig {
        lambda: 8.0,
        cfl: 0.8,
        epsilon: 0.02,
        t_final: 0.1,
        clean_every: 10,
        outputs: 50,
    };
    let traj = run(&sc, &grid, &LAW, &initial, &projector).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..traj.samples.len() - 1 {
        let r = energy_residual(&traj.samples[k - 1..=k + 1], &grid, &LAW, sc.epsilon).unwrap();
        worst = worst.max(r);
    }
    assert!(worst <= 1e-3, "energy residual {worst:.3e} above 1e-3");
    println!(
        "AC-2 PASS: dt orders {orders:?}, overall orders {orders2:?} (>= 3), energy residual {worst:.2e} (<= 1e-3)"
    );
}

#[test]
fn ac3_uniform_bound_surrogate() {
    let report = ill_report();
    assert!(report.blowups.is_empty(), "blow-ups: {:?}", report.blowups);
    let mut weighted: Vec<f64> = Vec::new();
    let mut unweighted: Vec<f64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for s in &report.summaries {
        weighted.push(s.weighted_norm_sup);
        unweighted.push(s.unweighted_norm_sup);
        residuals.push(s.acoustic_residual_sup);
        assert!(
            s.max_div_h <= 1e-7,
            "lambda {}: div H {:.3e} above 1e-7",
            s.lambda,
            s.max_div_h
        );
    }
    let w_ratio = weighted.iter().cloned().fold(f64::MIN, f64::max)
        / weighted.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        w_ratio <= 2.0,
        "weighted norm varies by {w_ratio:.2} across lambda"
    );
    // the unweighted norm must grow with lambda: monotone and clearly so
    for w in unweighted.windows(2) {
        assert!(w[1] > w[0], "unweighted norm not increasing: {unweighted:?}");
    }
    let u_growth = unweighted.last().unwrap() / unweighted.first().unwrap();
    assert!(
        u_growth >= 2.0,
        "unweighted norm grew only {u_growth:.2}x across lambda"
    );
    // desk-scale surrogate of the lambda-independent remainder bound
    let r_ratio = residuals.iter().cloned().fold(f64::MIN, f64::max)
        / residuals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        r_ratio <= 2.0,
        "acoustic remainder varies by {r_ratio:.2} across lambda"
    );
    println!(
        "AC-3 PASS: weighted sup ratio {w_ratio:.3} (<= 2), unweighted growth {u_growth:.1}x, remainder ratio {r_ratio:.3} (<= 2), div H <= 1e-7"
    );
}

#[test]
fn ac4_initial_layer_surrogate() {
    let report = ill_report();
    let layer = report.layer.as_ref().expect("layer report");
    let rows = &layer.per_lambda;
    assert_eq!(rows.len(), 4);

    // reference level: || P_G w0 ||_{L2(K)} from the projector itself
    let config = sweep_config(ILL_FAMILY);
    let grid = build_grid(129, 64, 1.0, 1.0).unwrap();
    let initial = make_initial_data(&config.family, &grid, 4.0).unwrap();
    let projector = SlabProjector::new(&grid);
    let g = projector
        .project_g([&initial.v[0], &initial.v[1], &initial.v[2]], &grid)
        .unwrap();
    let i_max = grid.subdomain_end(0.8);
    let pg_norm = grid.l2_norm_to(&[&g[0], &g[1], &g[2]], i_max);
    assert!(pg_norm > 0.0);

    for r in rows {
        assert!(
            r.e_early >= 0.5 * pg_norm,
            "lambda {}: e_early {:.3e} below half of ||P_G w0|| = {:.3e}",
            r.lambda,
            r.e_early,
            pg_norm
        );
    }
    for w in rows.windows(2) {
        assert!(
            w[1].e_late < w[0].e_late,
            "e_late not strictly decreasing: {rows:?}"
        );
    }
    let halving = rows[3].e_late / rows[0].e_late;
    assert!(
        halving <= 0.5,
        "e_late(32)/e_late(4) = {halving:.3} above 0.5"
    );

    // magnetic convergence at mid-horizon
    let t_half = 0.25;
    let mut err_h = Vec::new();
    for s in &report.summaries {
        let row = report
            .table
            .rows_for(s.lambda)
            .min_by(|a, b| {
                (a.t - t_half)
                    .abs()
                    .partial_cmp(&(b.t - t_half).abs())
                    .unwrap()
            })
            .unwrap();
        err_h.push(row.err_h);
    }
    for w in err_h.windows(2) {
        assert!(w[1] < w[0], "err_H at T/2 not decreasing: {err_h:?}");
    }
    println!(
        "AC-4 PASS: e_early >= {:.3e} for all lambda, e_late {:?} strictly decreasing with ratio {halving:.3} (<= 0.5), err_H(T/2) {err_h:?} decreasing",
        0.5 * pg_norm,
        rows.iter().map(|r| r.e_late).collect::<Vec<_>>()
    );
}

#[test]
fn ac5_strong_convergence_surrogate() {
    let report = wp_report();
    assert!(report.blowups.is_empty(), "blow-ups: {:?}", report.blowups);
    let lambdas: Vec<f64> = report.summaries.iter().map(|s| s.lambda).collect();

    // (2.17) surrogate: the wp metric stays within a factor 2 across lambda
    let mut wp_sups = Vec::new();
    for &l in &lambdas {
        let sup = report
            .table
            .max_in_window(l, 0.0, 0.5, |r| r.wp_metric)
            .unwrap();
        wp_sups.push(sup);
    }
    let wp_ratio = wp_sups.iter().cloned().fold(f64::MIN, f64::max)
        / wp_sups.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        wp_ratio <= 2.0,
        "wp metric varies by {wp_ratio:.2} across lambda: {wp_sups:?}"
    );

    // no layer: the full-window velocity error decreases in lambda
    let mut err_v = Vec::new();
    for &l in &lambdas {
        err_v.push(report.table.max_in_window(l, 0.0, 0.5, |r| r.err_v).unwrap());
    }
    for w in err_v.windows(2) {
        assert!(
            w[1] < w[0],
            "full-window err_v not decreasing: {err_v:?}"
        );
    }

    // total-pressure gradient convergence at mid-horizon
    let t_half = 0.25;
    let mut gq = Vec::new();
    for &l in &lambdas {
        let row = report
            .table
            .rows_for(l)
            .min_by(|a, b| {
                (a.t - t_half)
                    .abs()
                    .partial_cmp(&(b.t - t_half).abs())
                    .unwrap()
            })
            .unwrap();
        gq.push(row.grad_q_err);
    }
    for w in gq.windows(2) {
        assert!(w[1] < w[0], "grad q error not decreasing: {gq:?}");
    }
    let gq32_over_gq8 = gq[3] / gq[1];
    assert!(
        gq32_over_gq8 <= 0.6,
        "grad q error ratio value(32)/value(8) = {gq32_over_gq8:.3} above 0.6"
    );
    println!(
        "AC-5 PASS: wp metric ratio {wp_ratio:.3} (<= 2), err_v {err_v:?} decreasing, grad_q {gq:?} with value(32)/value(8) = {gq32_over_gq8:.3} (<= 0.6)"
    );
}

#[test]
fn ac6_helmholtz_suite() {
    let grid = build_grid(33, 16, 1.0, 1.0).unwrap();
    let projector = SlabProjector::new(&grid);
    let mut rng = SplitMix(0xbeef);
    let mut worst_orth: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    for _ in 0..100 {
        // random admissible band-limited field
        let mut modes = Vec::new();
        for _ in 0..5 {
            modes.push((
                (rng.next_f64().abs() * 4.0).ceil().max(1.0),
                (rng.next_f64().abs() * 3.0).floor(),
                rng.next_f64(),
                rng.next_f64() * std::f64::consts::PI,
            ));
        }
        let pi = std::f64::consts::PI;
        let ms = modes.clone();
        let v1 = ScalarField::from_fn(&grid, move |x1, x2| {
            ms.iter()
                .map(|(n, m, a, ph)| a * (n * pi * x1).sin() * (2.0 * pi * m * x2 + ph).cos())
                .sum()
        });
        let ms = modes.clone();
        let v2 = ScalarField::from_fn(&grid, move |x1, x2| {
            ms.iter()
                .map(|(n, m, a, ph)| a * (n * pi * x1).cos() * (2.0 * pi * m * x2 + ph).sin())
                .sum()
        });
        let v3 = ScalarField::zeros(&grid);
        let v = [&v1, &v2, &v3];
        let norm2: f64 = (0..3).map(|k| grid.inner(v[k], v[k])).sum();
        let g = projector.project_g(v, &grid).unwrap();
        let s = projector.project_s(v, &grid).unwrap();
        // complementarity is exact by construction; measure orthogonality
        let dot: f64 = (0..3).map(|k| grid.inner(&g[k], &s[k])).sum();
        worst_orth = worst_orth.max(dot.abs() / norm2.max(1e-300));
        let ss = projector.project_s([&s[0], &s[1], &s[2]], &grid).unwrap();
        let mut idem: f64 = 0.0;
        for k in 0..3 {
            let mut d = ss[k].clone();
            d.axpy(-1.0, &s[k]);
            idem = idem.max(d.max_abs());
        }
        worst_idem = worst_idem.max(idem / norm2.sqrt().max(1e-300));
    }
    assert!(worst_orth <= 1e-8, "orthogonality {worst_orth:.3e}");
    assert!(worst_idem <= 1e-8, "idempotence {worst_idem:.3e}");

    // manufactured-solution convergence of the Neumann solver
    let pi = std::f64::consts::PI;
    let mut errs = Vec::new();
    for &n1 in &[17usize, 33, 65] {
        let g = build_grid(n1, 16, 1.0, 1.0).unwrap();
        let solver = PoissonSolver::new(&g).unwrap();
        let k = 2.0 * pi;
        let rhs = ScalarField::from_fn(&g, |x1, x2| {
            -pi * pi * (pi * x1).cos() + (1.0 - k * k) * x1.exp() * (k * x2).cos()
        });
        let wall_lo: Vec<f64> = (0..g.n2).map(|j| (k * g.x2(j)).cos()).collect();
        let wall_hi: Vec<f64> = (0..g.n2)
            .map(|j| 1.0f64.exp() * (k * g.x2(j)).cos())
            .collect();
        let prob = PoissonProblem {
            rhs,
            wall_lo,
            wall_hi,
            tol: 1e-6,
        };
        let phi = solver.solve(&prob, &g).unwrap();
        let exact = ScalarField::from_fn(&g, |x1, x2| (pi * x1).cos() + x1.exp() * (k * x2).cos());
        let mean = g.integrate(&exact) / (g.l1 * g.l2);
        let mut err = 0.0f64;
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                err = err
                    .max((phi.get(i as isize, j) - (exact.get(i as isize, j) - mean)).abs());
            }
        }
        errs.push(err);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for o in &orders {
        assert!(*o >= 3.4, "poisson order {o:.2} below 4 (errors {errs:?})");
    }
    println!(
        "AC-6 PASS: orthogonality {worst_orth:.2e}, idempotence {worst_idem:.2e} (<= 1e-8), poisson orders {orders:?}"
    );
}

#[test]
fn ac7_norm_suite() {
    let grid = build_grid(33, 8, 1.0, 1.0).unwrap();
    let mut rng = SplitMix(0xabcd);
    let pi = std::f64::consts::PI;
    let mut worst_hom: f64 = 0.0;
    let mut worst_tri: f64 = 0.0;
    for _ in 0..100 {
        let mk = |rng: &mut SplitMix| {
            let modes: Vec<(f64, f64, f64, f64)> = (0..4)
                .map(|_| {
                    (
                        (rng.next_f64().abs() * 3.0).floor(),
                        (rng.next_f64().abs() * 2.0).floor(),
                        rng.next_f64(),
                        rng.next_f64() * pi,
                    )
                })
                .collect();
            ScalarField::from_fn(&grid, move |x1, x2| {
                modes
                    .iter()
                    .map(|(n, m, a, ph)| {
                        a * (n * pi * x1).cos() * (2.0 * pi * m * x2 + ph).cos()
                    })
                    .sum()
            })
        };
        let u = mk(&mut rng);
        let v = mk(&mut rng);
        let c = rng.next_f64() * 3.0;
        let mut prev = f64::MIN;
        for fam in [Family::Star, Family::Star2, Family::Star3] {
            let spec = NormSpec::new(fam, 2);
            let nu = norm_spatial(&[&u], &spec, &grid).unwrap().total;
            let nv = norm_spatial(&[&v], &spec, &grid).unwrap().total;
            let mut cu = u.clone();
            cu.scale(c);
            let ncu = norm_spatial(&[&cu], &spec, &grid).unwrap().total;
            worst_hom = worst_hom.max((ncu - c.abs() * nu).abs() / (1.0 + nu));
            let mut sum = u.clone();
            sum.axpy(1.0, &v);
            let ns = norm_spatial(&[&sum], &spec, &grid).unwrap().total;
            worst_tri = worst_tri.max((ns - (nu + nv)).max(0.0) / (nu + nv));
            // termwise chain: star <= star2 <= star3
            assert!(
                nu >= prev * (1.0 - 1e-12),
                "family chain violated: {prev} then {nu}"
            );
            prev = nu;
        }
    }
    assert!(worst_hom <= 1e-10, "homogeneity defect {worst_hom:.3e}");
    assert!(worst_tri <= 1e-12, "triangle defect {worst_tri:.3e}");

    let battery = appendix_battery(2, &[(17, 8), (33, 16), (65, 32)], 1.0, 1.0).unwrap();
    assert!(
        battery.characterization_spread <= 0.10,
        "characterization spread {:.3}",
        battery.characterization_spread
    );
    assert!(
        battery.moser_spread <= 0.10,
        "moser spread {:.3}",
        battery.moser_spread
    );
    assert!(
        battery.sigma_division_spread <= 0.10,
        "sigma division spread {:.3}",
        battery.sigma_division_spread
    );
    println!(
        "AC-7 PASS: homogeneity {worst_hom:.2e}, triangle {worst_tri:.2e}, battery spreads ({:.3}, {:.3}, {:.3}) <= 0.10",
        battery.characterization_spread, battery.moser_spread, battery.sigma_division_spread
    );
}

#[test]
fn ac8_acoustic_layer_mechanism() {
    let grid = build_grid(129, 8, 1.0, 1.0).unwrap();
    let lambda = 8.0;
    let center = 0.2;
    let width = 0.12;
    let pi = std::f64::consts::PI;
    // compact gradient pulse plus a solenoidal bystander
    let v0 = [
        ScalarField::from_fn(&grid, |x1, _| 0.05 * bump_deriv(x1, center, width)),
        ScalarField::from_fn(&grid, |x1, x2| {
            0.03 * (pi * x1).cos() * (2.0 * pi * x2).sin()
        }),
        ScalarField::zeros(&grid),
    ];
    let q0 = ScalarField::zeros(&grid);
    let solver = LinearAcoustic::new(&grid, lambda, &LAW);
    let speed = lambda * (LAW.mu1() * LAW.mu2()).sqrt();
    let k_edge = 0.5;
    let t_return = ((grid.l1 - center) + (grid.l1 - k_edge)) / speed;
    let t_measure = 0.9 * t_return;
    let states = solver
        .run_linear(&q0, &v0, &[0.0, t_measure], &grid)
        .unwrap();
    let i_k = grid.subdomain_end(k_edge);

    // energy of the gradient part alone: subtract the static solenoidal part
    let projector = SlabProjector::new(&grid);
    let s_part = projector.project_s([&v0[0], &v0[1], &v0[2]], &grid).unwrap();
    let pulse_energy = |q: &ScalarField, v: &[ScalarField; 3]| -> f64 {
        let mut vg: [ScalarField; 3] = std::array::from_fn(|c| v[c].clone());
        for c in 0..3 {
            vg[c].axpy(-1.0, &s_part[c]);
        }
        acoustic_energy(q, &vg, &LAW, &grid, Some(i_k))
    };
    let e0 = pulse_energy(&states[0].q, &states[0].v);
    let e1 = pulse_energy(&states[1].q, &states[1].v);
    assert!(
        e1 <= 0.5 * e0,
        "interior pulse energy fell only from {e0:.3e} to {e1:.3e}"
    );

    // the solenoidal component is invariant to rounding
    let mut worst: f64 = 0.0;
    let s_final = projector
        .project_s([&states[1].v[0], &states[1].v[1], &states[1].v[2]], &grid)
        .unwrap();
    for c in 0..3 {
        let mut d = s_final[c].clone();
        d.axpy(-1.0, &s_part[c]);
        worst = worst.max(d.max_abs());
    }
    assert!(worst <= 1e-12, "solenoidal part moved by {worst:.3e}");
    println!(
        "AC-8 PASS: interior pulse energy {e0:.3e} -> {e1:.3e} ({:.1}% loss >= 50%) before wall return, P_S drift {worst:.2e}",
        100.0 * (1.0 - e1 / e0)
    );
}

#[test]
fn ac9_determinism_and_io() {
    // identical sweeps give byte-identical CSV
    let toml = format!(
        r#"
        [grid]
        n1 = 33
        n2 = 16

        {ILL_FAMILY}

        [run]
        lambdas = [2.0, 4.0]
        t_final = 0.05
        outputs = 8
    "#
    );
    let config = RunConfig::from_toml(&toml).unwrap();
    let a = run_sweep(&config).unwrap().table.to_csv_string().unwrap();
    let b = run_sweep(&config).unwrap().table.to_csv_string().unwrap();
    assert_eq!(a.as_bytes(), b.as_bytes(), "sweep CSV not byte-identical");

    // bitwise checkpoint round trip of an evolved state
    let grid = build_grid(33, 16, 1.0, 1.0).unwrap();
    let initial = make_initial_data(&config.family, &grid, 4.0).unwrap();
    let projector = SlabProjector::new(&grid);
    let sc = SolverConfig {
        lambda: 4.0,
        cfl: 0.8,
        epsilon: 0.02,
        t_final: 0.02,
        clean_every: 10,
        outputs: 2,
    };
    let traj = run(&sc, &grid, &LAW, &initial, &projector).unwrap();
    let state = &traj.samples.last().unwrap().state;
    let dir = std::env::temp_dir().join(format!("mhdslab_ac9_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("final.ckpt");
    checkpoint::write_state_checkpoint(&path, state, &grid, &LAW, traj.t_end()).unwrap();
    let (back, meta) = checkpoint::read_state_checkpoint(&path).unwrap();
    assert_eq!(meta.lambda, 4.0);
    for (a, b) in state.components().iter().zip(back.components().iter()) {
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                assert_eq!(
                    a.get(i as isize, j).to_bits(),
                    b.get(i as isize, j).to_bits(),
                    "checkpoint not bitwise at ({i},{j})"
                );
            }
        }
    }
    println!("AC-9 PASS: byte-identical sweep CSV across repeated runs, bitwise checkpoint round trip");
}
