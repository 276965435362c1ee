//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Set `FGM_FULL_SCALE=1` to also run the N = 500 tensor-norm tier of
//! criterion 5, and `FGM_CRITERIA=3,5` to run a subset.

use std::time::Instant;

use fgm_core::fem::{
    assemble, element_response, interp_coefficient, newton_solve, pk2_stress, stored_energy, tangent_modulus,
    DofMap, KinematicState, NeoHookeanLaw, NewtonConfig, QuadMesh,
};
use fgm_core::gp::{build_dataset, generate_doe, DatasetConfig, DoeSpec, GpConfig, MaterialSurrogate};
use fgm_core::homog::{
    extract_lame_with, homogenize, tensor_norm, voigt_reuss_bounds, within_bounds, PlaneState,
};
use fgm_core::linalg::dot;
use fgm_core::micro::{
    band_power_fraction, binarize_joint, blend_interfaces, cut_level, juxtapose, levelset_cut,
    reconstruct_phase_field, seam_mismatch, Axis, BinaryMicrostructure, BlendConfig, PhaseField, SdfDescriptor,
};
use fgm_core::topopt::{
    adjoint_gradient, block_average, evaluate, initial_net, optimize, pearson, transfer_infer, DesignNet, Load,
    Mode, ObjectiveKind, OptimizationTrace, OuterConfig, Preset, ToProblem,
};
use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

fn random_f(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
    loop {
        let f = Matrix2::identity() + Matrix2::from_fn(|_, _| rng.random_range(-0.3..0.3));
        if f.determinant() > 0.4 {
            return f;
        }
    }
}

fn energy_at(e: Matrix2<f64>, law: &NeoHookeanLaw) -> f64 {
    stored_energy(&KinematicState::from_green_strain(e).unwrap(), law).unwrap()
}

fn stress_at(e: Matrix2<f64>, law: &NeoHookeanLaw) -> Matrix2<f64> {
    pk2_stress(&KinematicState::from_green_strain(e).unwrap(), law).unwrap()
}

// unit perturbation of Voigt component k (engineering shear for k = 2)
fn voigt_dir(k: usize) -> Matrix2<f64> {
    match k {
        0 => Matrix2::new(1.0, 0.0, 0.0, 0.0),
        1 => Matrix2::new(0.0, 0.0, 0.0, 1.0),
        _ => Matrix2::new(0.0, 0.5, 0.5, 0.0),
    }
}

fn criterion_1() -> Outcome {
    let mut worst_rest = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut worst_c = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for law in [NeoHookeanLaw::A, NeoHookeanLaw::B] {
        let id = KinematicState::from_deformation_gradient(Matrix2::identity()).unwrap();
        let s0 = pk2_stress(&id, &law).unwrap();
        let c0 = tangent_modulus(&id, &law).unwrap();
        let lin = law.linear_modulus();
        worst_rest = worst_rest.max(s0.norm() / law.mu0).max((c0 - lin).norm() / lin.norm());

        let h = 1e-6;
        for _ in 0..50 {
            let kin = KinematicState::from_deformation_gradient(random_f(&mut rng)).unwrap();
            let e = kin.e;
            let s = pk2_stress(&kin, &law).unwrap();
            let c = tangent_modulus(&kin, &law).unwrap();
            // S_ij = ∂Ψ/∂E_ij, symmetric perturbations
            let mut s_fd = Matrix2::zeros();
            for (i, j) in [(0, 0), (1, 1), (0, 1)] {
                let mut d = Matrix2::zeros();
                d[(i, j)] = 1.0;
                d[(j, i)] = 1.0;
                let w = if i == j { 1.0 } else { 2.0 };
                let v = (energy_at(e + h * d, &law) - energy_at(e - h * d, &law)) / (2.0 * h * w);
                s_fd[(i, j)] = v;
                s_fd[(j, i)] = v;
            }
            worst_s = worst_s.max((s - s_fd).norm() / s.norm());
            let mut c_fd = Matrix3::zeros();
            for k in 0..3 {
                let d = voigt_dir(k);
                let ds = (stress_at(e + h * d, &law) - stress_at(e - h * d, &law)) / (2.0 * h);
                c_fd[(0, k)] = ds[(0, 0)];
                c_fd[(1, k)] = ds[(1, 1)];
                c_fd[(2, k)] = ds[(0, 1)];
            }
            worst_c = worst_c.max((c - c_fd).norm() / c.norm());
        }
    }
    check(
        worst_rest <= 1e-12 && worst_s < 1e-5 && worst_c < 1e-5,
        format!("rest state {worst_rest:.1e}, S vs dPsi/dE {worst_s:.1e}, C vs dS/dE {worst_c:.1e} (100 states)"),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mesh = QuadMesh::rectangular(3, 2, 1.2, 0.9).unwrap();
    let ne = mesh.n_elems();
    let n = mesh.n_dofs();
    let laws: Vec<NeoHookeanLaw> = (0..ne)
        .map(|e| if e % 2 == 0 { NeoHookeanLaw::A } else { NeoHookeanLaw::B.scaled(0.3) })
        .collect();
    let kappa: Vec<f64> = (0..ne).map(|e| [0.0, 0.35, 1.0][e % 3]).collect();
    let all = DofMap::all(n);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_k, mut worst_sym) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-0.08..0.08)).collect();
        let a = assemble(&mesh, &laws, &kappa, &u, Some(&all)).unwrap();
        let k = a.tangent.unwrap();
        worst_sym = worst_sym.max(k.symmetry_error());
        let kd = k.to_dense();
        let h = 1e-6;
        let mut fd = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let fp = assemble(&mesh, &laws, &kappa, &up, None).unwrap().f_int;
            let fm = assemble(&mesh, &laws, &kappa, &um, None).unwrap().f_int;
            for i in 0..n {
                fd[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        worst_k = worst_k.max((&kd - &fd).norm() / kd.norm());
    }

    // rigid motions: translation at any state, infinitesimal rotation of
    // the reference tangent, finite rotation of pure Neo-Hookean elements
    let scale = NeoHookeanLaw::A.mu0;
    let trans: Vec<f64> = (0..n).map(|d| if d % 2 == 0 { 0.7 } else { -0.4 }).collect();
    let f_t = assemble(&mesh, &laws, &kappa, &trans, None).unwrap().f_int;
    let zero = vec![0.0; n];
    let k0 = assemble(&mesh, &laws, &kappa, &zero, Some(&all)).unwrap().tangent.unwrap();
    let rot: Vec<f64> = mesh.node_coords.iter().flat_map(|x| [-x[1], x[0]]).collect();
    let k_rot = k0.mul_vec(&rot);
    let th = 0.6f64;
    let (c, s) = (th.cos(), th.sin());
    let big: Vec<f64> = mesh
        .node_coords
        .iter()
        .flat_map(|x| [c * x[0] - s * x[1] - x[0], s * x[0] + c * x[1] - x[1]])
        .collect();
    let ones = vec![1.0; ne];
    let f_r = assemble(&mesh, &laws, &ones, &big, None).unwrap();
    let null = [
        f_t.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale,
        k_rot.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale,
        f_r.f_int.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale,
        f_r.energy.abs() / scale,
    ];
    let null_ok = null.iter().all(|&v| v < 1e-9);
    check(
        worst_k < 1e-5 && worst_sym <= 1e-10 && null_ok,
        format!(
            "K vs FD {worst_k:.1e}, asymmetry {worst_sym:.1e}, rigid-motion residuals {:.1e}",
            null.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mesh = Preset::Cantilever.build(80, 20, Load::Force(1e5)).unwrap();
    let ne = mesh.n_elems();
    let laws = vec![NeoHookeanLaw::A; ne];
    let kappa = vec![1.0; ne];
    let cfg = NewtonConfig::default();
    let sol = newton_solve(&mesh, &laws, &kappa, &cfg).map_err(|e| format!("default solve failed: {e}"))?;
    let last = sol.history.last().unwrap();
    let converged = last.accepted
        && (last.t - 1.0).abs() < 1e-12
        && (last.tolerance - cfg.delta_f).abs() < 1e-15
        && sol.residual_norm <= cfg.delta_f * last.force_scale;

    // a hundredfold load in one full step with a three-iteration cap
    let heavy = Preset::Cantilever.build(80, 20, Load::Force(1e7)).unwrap();
    let reference = newton_solve(&heavy, &laws, &kappa, &cfg).map_err(|e| format!("heavy-load solve failed: {e}"))?;
    let harsh = NewtonConfig {
        dt0: 1.0,
        dt_max: 1.0,
        max_inner_iters: 3,
        ..cfg
    };
    let hs = newton_solve(&heavy, &laws, &kappa, &harsh).map_err(|e| format!("induced-failure solve failed: {e}"))?;
    let h = &hs.history;
    let shrink = h
        .windows(2)
        .any(|w| !w[0].accepted && (w[1].dt - 0.25 * w[0].dt).abs() < 1e-12 && w[1].accepted);
    let hl = h.last().unwrap();
    let recovered = hl.accepted && (hl.t - 1.0).abs() < 1e-12 && hs.residual_norm <= cfg.delta_f * hl.force_scale;
    let tip = mesh.node(80, 0);
    let du = rel(hs.u[2 * tip + 1], reference.u[2 * tip + 1]);
    check(
        converged && shrink && recovered && du < 1e-2,
        format!(
            "{} steps, final residual/scale {:.1e} <= {}; induced: {} rejected, 0.25 shrink then accept = {shrink}, tip deflection agrees to {du:.1e}",
            sol.accepted_steps(),
            sol.residual_norm / last.force_scale,
            cfg.delta_f,
            hs.rejected_steps()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let k0 = interp_coefficient(0.0, 3.0).unwrap();
    let k1 = interp_coefficient(1.0, 3.0).unwrap();
    let ends = k0 == 0.0 && k1 == 1.0;

    // one element, bottom clamped, top pushed below the bottom
    let mut mesh = QuadMesh::unit(1, 1).unwrap();
    for i in 0..2 {
        mesh.fix(mesh.node(i, 0), 0, 0.0).unwrap();
        mesh.fix(mesh.node(i, 0), 1, 0.0).unwrap();
        mesh.fix(mesh.node(i, 1), 1, -1.6).unwrap();
    }
    let rho = 0.01f64;
    let law = NeoHookeanLaw::A.scaled(1e-6 + (1.0 - 1e-6) * rho.powi(3));
    let kappa = interp_coefficient(rho, 3.0).unwrap();
    let cfg = NewtonConfig {
        dt0: 0.05,
        ..NewtonConfig::default()
    };
    let low = newton_solve(&mesh, &[law], &[kappa], &cfg);
    let pure = newton_solve(&mesh, &[law], &[1.0], &cfg);
    let u_e = [0.0, 0.0, 0.0, 0.0, 0.0, -1.6, 0.0, -1.6];
    let direct = element_response(&u_e, &mesh.gauss_points[0], &law, kappa).is_ok();
    check(
        ends && low.is_ok() && pure.is_err() && direct,
        format!(
            "kappa(0) = {k0}, kappa(1) = {k1}; inverting load at rho_M = 0.01: interpolated {}, pure Neo-Hookean {}",
            if low.is_ok() { "solved" } else { "failed" },
            if pure.is_err() { "fails" } else { "solved" }
        ),
    )
}

// ---------------------------------------------------------------- 5

fn c_series(n: usize) -> Vec<f64> {
    [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|&rho_m| {
            let desc = SdfDescriptor {
                rho_m,
                r_out: 20.0,
                d_r: 5.0,
                n,
                seed: 5,
            };
            let micro = levelset_cut(&reconstruct_phase_field(&desc).unwrap(), rho_m).unwrap();
            let h = homogenize(&micro, &NeoHookeanLaw::A, &NeoHookeanLaw::B, PlaneState::Stress).unwrap();
            tensor_norm(&h.tensor)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let (a, b) = (NeoHookeanLaw::A, NeoHookeanLaw::B);
    let uni = BinaryMicrostructure::uniform(64, 1);
    let h = homogenize(&uni, &a, &b, PlaneState::Strain).unwrap();
    let lame = extract_lame_with(&h.tensor, PlaneState::Strain).unwrap();
    let uniform_err = rel(lame.mu_m, 3.70e8).max(rel(lame.lambda_m, 8.64e8));

    let mut bounded = 0;
    let mut total = 0;
    for (k, rho) in [0.2, 0.35, 0.5, 0.65, 0.8].into_iter().enumerate() {
        for plane in [PlaneState::Strain, PlaneState::Stress] {
            let desc = SdfDescriptor {
                rho_m: rho,
                r_out: 12.0 + 2.0 * k as f64,
                d_r: 4.0,
                n: 64,
                seed: 50 + k as u64,
            };
            let micro = levelset_cut(&reconstruct_phase_field(&desc).unwrap(), rho).unwrap();
            let c = homogenize(&micro, &a, &b, plane).unwrap().tensor.c;
            let (voigt, reuss) = voigt_reuss_bounds(micro.achieved_vf, &a, &b, plane);
            total += 1;
            if within_bounds(&c, &voigt, &reuss, 1e-12) {
                bounded += 1;
            }
        }
    }

    let norms = c_series(64);
    let increasing = norms.windows(2).all(|w| w[1] > w[0]);
    let mut detail = format!(
        "uniform-A error {uniform_err:.1e}; {bounded}/{total} within Voigt-Reuss; N = 64 norms {:.3e} {:.3e} {:.3e} {:.3e}",
        norms[0], norms[1], norms[2], norms[3]
    );
    let mut full_ok = true;
    if std::env::var("FGM_FULL_SCALE").is_ok_and(|v| v == "1") {
        let reference = [2.297e8, 3.458e8, 5.921e8, 1.045e9];
        let big = c_series(500);
        let worst = big.iter().zip(&reference).map(|(v, r)| rel(*v, *r)).fold(0.0, f64::max);
        full_ok = worst <= 0.15;
        detail.push_str(&format!("; N = 500 worst deviation {:.1}%", 100.0 * worst));
    }
    check(uniform_err <= 1e-8 && bounded == total && increasing && full_ok, detail)
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 64;
    let (mut worst_band, mut worst_px) = (1.0f64, 0.0f64);
    for s in 0..20 {
        let r_out = rng.random_range(6.0..28.0f64).round();
        let desc = SdfDescriptor {
            rho_m: rng.random_range(0.2..0.8),
            r_out,
            d_r: rng.random_range(0.0..r_out).round(),
            n,
            seed: 600 + s,
        };
        let field = reconstruct_phase_field(&desc).unwrap();
        worst_band = worst_band.min(band_power_fraction(&field, &desc).unwrap());
        let img = levelset_cut(&field, desc.rho_m).unwrap();
        let count = img.pixels.iter().filter(|&&p| p == 1).count() as f64;
        worst_px = worst_px.max((count - desc.rho_m * (n * n) as f64).abs());
    }
    check(
        worst_band >= 0.99 && worst_px <= 1.0,
        format!("lowest in-band power {:.4}%, largest volume error {worst_px:.2} px", 100.0 * worst_band),
    )
}

// ---------------------------------------------------------------- 7

fn column_jump(f: &PhaseField, x: usize) -> f64 {
    (0..f.height).map(|y| (f.at(x, y) - f.at(x - 1, y)).abs()).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let l = 64;
    let tile = |rho_m, r_out, d_r, seed| {
        reconstruct_phase_field(&SdfDescriptor {
            rho_m,
            r_out,
            d_r,
            n: l,
            seed,
        })
        .unwrap()
    };
    let (r1, r2) = (0.4, 0.6);
    let f1 = tile(r1, 12.0, 4.0, 71);
    let f2 = tile(r2, 24.0, 3.0, 72);
    let cfg = BlendConfig::for_tile(l);
    let joint = blend_interfaces(&f1, &f2, &cfg, Axis::Horizontal).unwrap();
    let (_, c1) = cut_level(&f1, r1).unwrap();
    let (_, c2) = cut_level(&f2, r2).unwrap();
    let blended = binarize_joint(&joint, c1, c2, &cfg, Axis::Horizontal).unwrap();
    let raw = juxtapose(&levelset_cut(&f1, r1).unwrap(), &levelset_cut(&f2, r2).unwrap(), Axis::Horizontal).unwrap();
    let (mb, mr) = (seam_mismatch(&blended, Axis::Horizontal, l), seam_mismatch(&raw, Axis::Horizontal, l));

    // the seam step is no larger than the steepest step inside the joint
    let seam = column_jump(&joint, l);
    let interior = (1..2 * l).filter(|&x| x != l).map(|x| column_jump(&joint, x)).fold(0.0, f64::max);
    check(
        mb < mr && seam <= interior,
        format!("seam mismatch {mb} blended vs {mr} unblended; seam step {seam:.3e} vs interior max {interior:.3e}"),
    )
}

// ---------------------------------------------------------------- 8

struct Surrogate {
    model: MaterialSurrogate,
    rrmse: (f64, f64),
    interp: f64,
    raw: f64,
    nugget: f64,
    grad: f64,
    rows: usize,
}

fn build_surrogate() -> Surrogate {
    let spec = DoeSpec {
        n_rho: 8,
        count: Some(250),
        seed: 8,
        ..DoeSpec::default()
    };
    let cfg = DatasetConfig {
        normalization: spec.normalization(),
        seed: 8,
        ..DatasetConfig::default()
    };
    let doe = generate_doe(&spec).unwrap();
    let mut ds = build_dataset(&doe, &cfg).unwrap();
    ds.split(200, 8).unwrap();
    let (model, report) = MaterialSurrogate::fit(&ds, &GpConfig::default()).unwrap();

    // with nugget δ the predictor at a training point is y_i − δα_i exactly
    let (mut interp, mut raw) = (0.0f64, 0.0f64);
    for gp in [&model.mu, &model.lambda] {
        let scale = gp.y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for ((xi, yi), ai) in gp.x.iter().zip(&gp.y).zip(&gp.alpha) {
            let r = gp.predict(xi) - yi;
            raw = raw.max(r.abs() / scale);
            interp = interp.max((r + gp.nugget * ai).abs() / scale);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut grad = 0.0f64;
    for _ in 0..20 {
        let s: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..0.95));
        for gp in [&model.mu, &model.lambda] {
            let g = gp.predict_gradient(&s);
            let h = 1e-4;
            let fd: Vec<f64> = (0..3)
                .map(|k| {
                    let mut p = s;
                    let mut m = s;
                    p[k] += h;
                    m[k] -= h;
                    // fourth-order central stencil
                    let mut p2 = s;
                    let mut m2 = s;
                    p2[k] += 2.0 * h;
                    m2[k] -= 2.0 * h;
                    (8.0 * (gp.predict(&p) - gp.predict(&m)) - (gp.predict(&p2) - gp.predict(&m2))) / (12.0 * h)
                })
                .collect();
            let err = (0..3).map(|k| (g[k] - fd[k]).powi(2)).sum::<f64>().sqrt();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            grad = grad.max(err / norm);
        }
    }
    let nugget = model.mu.nugget.max(model.lambda.nugget);
    Surrogate {
        model,
        rrmse: (report.rrmse_mu.unwrap(), report.rrmse_lambda.unwrap()),
        interp,
        raw,
        nugget,
        grad,
        rows: ds.len(),
    }
}

fn criterion_8(s: &Surrogate) -> Outcome {
    check(
        s.interp < 1e-6 && s.grad < 1e-6 && s.rrmse.0 <= 0.01 && s.rrmse.1 <= 0.01,
        format!(
            "{} rows at N = 64; train residual beyond nugget {:.1e} (raw {:.1e}, nugget {:.0e}); gradient vs FD {:.1e}; held-out RRMSE mu {:.4}, lambda {:.4}",
            s.rows, s.interp, s.raw, s.nugget, s.grad, s.rrmse.0, s.rrmse.1
        ),
    )
}

// ---------------------------------------------------------------- 9

fn adjoint_mesh(load: &str) -> QuadMesh {
    let mut m = QuadMesh::unit(8, 4).unwrap();
    for n in m.left_edge() {
        m.fix(n, 0, 0.0).unwrap();
        m.fix(n, 1, 0.0).unwrap();
    }
    match load {
        "force" => m.load(m.node(8, 0), 1, -2e7).unwrap(),
        "displacement" => m.fix(m.node(8, 2), 1, -0.4).unwrap(),
        _ => {
            m.fix(m.node(8, 2), 1, -0.4).unwrap();
            m.load(m.node(8, 0), 1, -5e6).unwrap();
        }
    }
    m
}

fn directional_error(problem: &ToProblem, seed: u64, n_dir: usize) -> f64 {
    let net = DesignNet::init_random(20, seed);
    let p = 3.0;
    let eval = evaluate(problem, &net, p).unwrap();
    let g = adjoint_gradient(problem, &net, &eval).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let mut worst = 0.0f64;
    for _ in 0..n_dir {
        let d: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d: Vec<f64> = d.iter().map(|v| v / nd).collect();
        let h = 1e-4;
        let at = |s: f64| {
            let w = net.weights.iter().zip(&d).map(|(w, di)| w + s * di).collect();
            let n = DesignNet::from_weights(net.hidden, w).unwrap();
            evaluate(problem, &n, p).unwrap().objective
        };
        // fourth-order central stencil
        let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        worst = worst.max((dot(&g, &d) - fd).abs() / fd.abs());
    }
    worst
}

fn criterion_9(s: &Surrogate) -> Outcome {
    let tight = NewtonConfig {
        delta0: 1e-10,
        delta_f: 1e-10,
        max_inner_iters: 60,
        ..NewtonConfig::default()
    };
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    for mode in [Mode::SingleScale, Mode::Multiscale] {
        for kind in [ObjectiveKind::J1, ObjectiveKind::J2] {
            for load in ["force", "displacement", "mixed"] {
                // with no applied force the end compliance vanishes identically
                if kind == ObjectiveKind::J1 && load == "displacement" {
                    continue;
                }
                let mut prob = ToProblem::new(adjoint_mesh(load), kind, mode);
                prob.newton = tight;
                if mode == Mode::Multiscale {
                    prob.surrogate = Some(s.model.clone());
                }
                let err = directional_error(&prob, 9, 5);
                cases += 1;
                if err >= worst.0 {
                    worst = (err, format!("{mode:?} {kind:?} {load}"));
                }
            }
        }
    }
    check(
        worst.0 < 1e-4,
        format!("{cases} cases x 5 directions, worst relative error {:.1e} ({})", worst.0, worst.1),
    )
}

// ---------------------------------------------------------------- 10, 11

const BUDGET: usize = 600;

struct Runs {
    linear: OptimizationTrace,
    single: OptimizationTrace,
    multi: OptimizationTrace,
    /// Matched pair at the larger load used for the compliance ordering.
    single_hi: OptimizationTrace,
    multi_hi: OptimizationTrace,
    mesh: QuadMesh,
}

fn cantilever_run(mode: Mode, force: f64, s: &Surrogate) -> OptimizationTrace {
    let mesh = Preset::Cantilever.build(40, 10, Load::Force(force)).unwrap();
    let mut prob = ToProblem::new(mesh, ObjectiveKind::J1, mode);
    if mode == Mode::Multiscale {
        prob.surrogate = Some(s.model.clone());
    }
    let net = initial_net(&prob, 20, 1).unwrap();
    let cfg = OuterConfig {
        iterations: BUDGET,
        ..OuterConfig::default()
    };
    optimize(&prob, net, &cfg).unwrap()
}

fn densities(t: &OptimizationTrace) -> Vec<f64> {
    t.theta.iter().map(|th| th[0]).collect()
}

fn bimodal_fraction(rho: &[f64]) -> f64 {
    rho.iter().filter(|&&r| r <= 0.1 || r >= 0.9).count() as f64 / rho.len() as f64
}

/// Peak after the first iteration, then the last tenth of the budget within
/// 2% of its mean.
fn rises_then_plateaus(t: &OptimizationTrace) -> (bool, String) {
    let j: Vec<f64> = t.rows.iter().map(|r| r.objective).collect();
    let (peak_at, peak) = j.iter().enumerate().fold((0, f64::MIN), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
    let tail = &j[j.len() - j.len() / 10..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let spread = tail.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean;
    let last = *j.last().unwrap();
    (
        peak_at > 0 && peak > j[0] && last < peak && spread <= 0.02,
        format!(
            "J0 {:.3e}, peak {peak:.3e} at {peak_at}, final {last:.3e}, tail spread {:.2}%",
            j[0],
            100.0 * spread
        ),
    )
}

fn criterion_10(r: &Runs) -> Outcome {
    let lin = densities(&r.linear);
    let hyp = densities(&r.single);
    let multi = densities(&r.multi);
    let agree = lin.iter().zip(&hyp).filter(|(a, b)| (**a >= 0.5) == (**b >= 0.5)).count() as f64 / lin.len() as f64;
    let g: Vec<f64> = [&r.linear, &r.single, &r.multi].iter().map(|t| t.final_constraint().unwrap()).collect();
    let g_ok = g.iter().all(|v| v.abs() <= 0.02);
    let (bs, bm) = (bimodal_fraction(&hyp), bimodal_fraction(&multi));
    let (js, jm) = (r.single_hi.final_objective().unwrap(), r.multi_hi.final_objective().unwrap());
    let (js5, jm5) = (r.single.final_objective().unwrap(), r.multi.final_objective().unwrap());
    let (shape, shape_detail) = rises_then_plateaus(&r.single);
    let parts = [
        (agree >= 0.85, format!("(a) layout agreement {:.1}%", 100.0 * agree)),
        (g_ok, format!("(b) g linear {:+.4} single {:+.4} multi {:+.4}", g[0], g[1], g[2])),
        (bs >= 0.9 && bm >= 0.9, format!("(c) bimodal single {:.1}% multi {:.1}%", 100.0 * bs, 100.0 * bm)),
        (
            jm <= js,
            format!("(d) F = 1e6: J multi {jm:.4e} vs single {js:.4e} (F = 1e5: {jm5:.4e} vs {js5:.4e})"),
        ),
        (shape, format!("(e) {shape_detail}")),
    ];
    let failed: Vec<&str> = ["a", "b", "c", "d", "e"]
        .iter()
        .zip(&parts)
        .filter(|(_, p)| !p.0)
        .map(|(n, _)| *n)
        .collect();
    let detail = parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join("; ");
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("failing parts {}: {detail}", failed.join(",")))
    }
}

fn criterion_11(r: &Runs) -> Outcome {
    let fine = Preset::Cantilever.build(80, 20, Load::Force(1e5)).unwrap();
    let rho_fine: Vec<f64> = transfer_infer(&r.single.net, &fine).iter().map(|t| t[0]).collect();
    let coarse = block_average(&rho_fine, 80, 20, 2).unwrap();
    let train: Vec<f64> = transfer_infer(&r.single.net, &r.mesh).iter().map(|t| t[0]).collect();
    let c = pearson(&coarse, &train).unwrap();
    check(c >= 0.95, format!("Pearson {c:.4} between block-averaged 80x20 and 40x10 densities"))
}

// ----------------------------------------------------------------

fn report(id: &str, name: &str, start: Instant, out: Outcome, failures: &mut Vec<String>) {
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &out {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {tag} [{secs:7.1} s] {name}: {detail}");
    if out.is_err() {
        failures.push(id.to_string());
    }
}

fn selected(id: &str) -> bool {
    match std::env::var("FGM_CRITERIA") {
        Ok(list) => list.split(',').any(|c| c.trim() == id),
        Err(_) => true,
    }
}

fn main() {
    let mut failures = Vec::new();
    let simple: [(&str, &str, fn() -> Outcome); 7] = [
        ("1", "constitutive oracles", criterion_1),
        ("2", "element/global consistency", criterion_2),
        ("3", "Newton stabilization", criterion_3),
        ("4", "energy interpolation", criterion_4),
        ("5", "homogenization", criterion_5),
        ("6", "reconstruction spectra", criterion_6),
        ("7", "interface blending", criterion_7),
    ];
    for (id, name, f) in simple {
        if selected(id) {
            let t = Instant::now();
            report(id, name, t, f(), &mut failures);
        }
    }

    if !["8", "9", "10", "11"].iter().any(|c| selected(c)) {
        return finish(&failures);
    }
    let t = Instant::now();
    let s = build_surrogate();
    if selected("8") {
        report("8", "surrogate", t, criterion_8(&s), &mut failures);
    }
    if selected("9") {
        let t = Instant::now();
        report("9", "adjoint correctness", t, criterion_9(&s), &mut failures);
    }
    if selected("10") || selected("11") {
        let t = Instant::now();
        let cases = [
            (Mode::Linear, 1e5),
            (Mode::SingleScale, 1e5),
            (Mode::Multiscale, 1e5),
            (Mode::SingleScale, 1e6),
            (Mode::Multiscale, 1e6),
        ];
        let mut traces: Vec<OptimizationTrace> = std::thread::scope(|sc| {
            let handles: Vec<_> = cases
                .iter()
                .map(|&(mode, force)| sc.spawn({
                    let s = &s;
                    move || cantilever_run(mode, force, s)
                }))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut next = || traces.remove(0);
        let runs = Runs {
            linear: next(),
            single: next(),
            multi: next(),
            single_hi: next(),
            multi_hi: next(),
            mesh: Preset::Cantilever.build(40, 10, Load::Force(1e5)).unwrap(),
        };
        if selected("10") {
            report("10", "end-to-end optimization", t, criterion_10(&runs), &mut failures);
        }
        if selected("11") {
            let t = Instant::now();
            report("11", "transfer learning", t, criterion_11(&runs), &mut failures);
        }
    }
    finish(&failures);
}

fn finish(failures: &[String]) {
    if failures.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failures.join(", "));
        std::process::exit(1);
    }
}
