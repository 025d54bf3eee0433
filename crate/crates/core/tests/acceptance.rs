//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are still evaluated and printed as
//! FAIL; they do not abort the run. Any other failure, or a known failure
//! that starts passing, exits non-zero.

use std::process::ExitCode;
use std::time::Instant;

use airy_spline::geometry::{GeometricMapping, Patch, Side};
use airy_spline::harness::cases::{build_case, CaseDefinition, CaseName, Overrides};
use airy_spline::harness::metrics::{case_errors, line_norms, locate, vertical_profile};
use airy_spline::materials::{BodyForcePotential, ComplianceModel};
use airy_spline::model::Model;
use airy_spline::physics::{internal_energy_form, AssemblyOptions, GlobalDofMap};
use airy_spline::quadrature::GaussLegendre;
use airy_spline::solver::{solve, SolveOptions, Solution};
use airy_spline::spline::ControlNet;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that do not hold for this implementation; the README explains why.
const KNOWN_FAILURES: &[u32] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn solved(name: CaseName, o: &Overrides) -> (CaseDefinition, Solution, SolveOptions) {
    let def = build_case(name, o).expect("case builds");
    let mut opts = SolveOptions::default();
    opts.assembly.quadrature = def.quadrature;
    let sol = solve(&def.model, &opts).expect("case solves");
    (def, sol, opts)
}

fn within_factor(got: f64, want: f64, factor: f64) -> bool {
    got > 0.0 && got <= want * factor && got >= want / factor
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (def, sol, opts) = solved(CaseName::BeamUniformLoad, &Overrides::default());
    let e = case_errors(&def, &sol, &opts).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let published = [1.19e-3, 4.91e-5, 1.80e-4];
    let ok = (0..3).all(|c| within_factor(e[c], published[c], 2.5)) && elapsed < 5.0;
    outcome(
        ok,
        format!(
            "errors [{:.4e}, {:.4e}, {:.4e}] vs [1.19e-3, 4.91e-5, 1.80e-4] (x2.5), {elapsed:.3} s \
             (a stray published 2.99e-4 for sigma_yy disagrees with the tabulated 4.91e-5 and is not used)",
            e[0], e[1], e[2]
        ),
    )
}

fn criterion_2() -> Outcome {
    let errs: Vec<[f64; 3]> = [12.0, 24.0, 48.0]
        .iter()
        .map(|&a| {
            let o = Overrides {
                aspect: Some(a),
                ..Overrides::default()
            };
            let (def, sol, opts) = solved(CaseName::BeamUniformLoad, &o);
            case_errors(&def, &sol, &opts).unwrap()
        })
        .collect();
    let mut ok = true;
    let mut ratios = Vec::new();
    for c in 0..3 {
        for k in 0..2 {
            let r = errs[k][c] / errs[k + 1][c];
            ok &= (2.5..=6.0).contains(&r);
            ratios.push(format!("{r:.2}"));
        }
    }
    outcome(ok, format!("reduction per doubling [{}], required in [2.5, 6]", ratios.join(", ")))
}

fn criterion_3() -> Outcome {
    use airy_spline::harness::cases::bar::{C, L};
    let (def, sol, _) = solved(CaseName::BarSelfWeight, &Overrides::default());
    let r = def.reference.unwrap();
    // y is measured from the clamp, so the excluded cross-section is y < c.
    let n = line_norms(&def.model, &sol, 0.5 * C, (C, L), |x, y| r.stress(x, y)).unwrap();
    let rel_yy = n.error[1] / n.reference[1];
    let xx = n.solution[0] / n.reference[1];
    let xy = n.solution[2] / n.reference[1];
    let ok = rel_yy <= 0.05 && xx <= 0.05 && xy <= 0.05;
    outcome(
        ok,
        format!("x = 0.25, y in [c, l]: sigma_yy error {rel_yy:.3e}, |sigma_xx|/|sigma_yy| {xx:.3e}, |sigma_xy|/|sigma_yy| {xy:.3e} (limit 5e-2)"),
    )
}

fn max_stress(model: &Model, sol: &Solution) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..model.patches.len() {
        for i in 0..=40 {
            for j in 0..=40 {
                let s = sol.stress(model, k, i as f64 / 40.0, j as f64 / 40.0).unwrap();
                m = s.sigma.iter().fold(m, |a, v| a.max(v.abs()));
            }
        }
    }
    m
}

fn near_knot(u: f64, breaks: &[f64], margin: f64) -> bool {
    breaks.iter().any(|&b| (u - b).abs() < margin)
}

// Central differences of the stress in physical coordinates. Points sit away
// from knot lines, where stresses of a degree-2 direction may jump.
fn equilibrium_residual(def: &CaseDefinition, sol: &Solution, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    let model = &def.model;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let k = rng.gen_range(0..model.patches.len());
        let patch = &model.patches[k];
        let (xi, eta) = (rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98));
        let bx = patch.net.xi_basis().knots().breakpoints();
        let by = patch.net.eta_basis().knots().breakpoints();
        if near_knot(xi, &bx, 0.01) || near_knot(eta, &by, 0.01) {
            continue;
        }
        let (x, y) = patch.mapping.map_point(xi, eta).unwrap();
        let h = 1e-5 * patch.mapping.scale();
        let at = |x: f64, y: f64| {
            let (kk, s, t) = locate(model, x, y).unwrap();
            assert_eq!(kk, k, "stencil left its patch");
            sol.stress(model, k, s, t).unwrap().sigma
        };
        let (xp, xm, yp, ym) = (at(x + h, y), at(x - h, y), at(x, y + h), at(x, y - h));
        let d = |p: [f64; 3], m: [f64; 3], c: usize| (p[c] - m[c]) / (2.0 * h);
        let f = patch.potential.body_force(x, y);
        let rx = d(xp, xm, 0) + d(yp, ym, 2) + f[0];
        let ry = d(xp, xm, 2) + d(yp, ym, 1) + f[1];
        worst = worst.max(rx.abs()).max(ry.abs());
        done += 1;
    }
    worst
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in CaseName::ALL {
        let (def, sol, _) = solved(name, &Overrides::default());
        let scale = max_stress(&def.model, &sol);
        let r = equilibrium_residual(&def, &sol, &mut rng, 100);
        ok &= r <= 1e-4 * scale;
        parts.push(format!("{name} {:.1e}", r / scale));
    }
    outcome(ok, format!("max residual / max|sigma|: {} (limit 1e-4)", parts.join(", ")))
}

/// `∫ t dy` over the edge `side` of each listed patch, `t = σ n` for a
/// vertical edge with outward normal `(nx, 0)`.
fn vertical_edge_resultant(model: &Model, sol: &Solution, patches: &[usize], side: Side) -> [f64; 2] {
    let nx = if side == Side::Xi0 { -1.0 } else { 1.0 };
    let s = if side == Side::Xi0 { 0.0 } else { 1.0 };
    let g = GaussLegendre::new(10);
    let mut out = [0.0; 2];
    for &k in patches {
        let patch = &model.patches[k];
        for (a, b) in patch.net.eta_basis().spans() {
            for (t, w) in g.on_interval(a, b) {
                let dy = patch.mapping.jacobian(s, t).unwrap()[(1, 1)].abs();
                let st = sol.stress(model, k, s, t).unwrap().sigma;
                out[0] += w * dy * nx * st[0];
                out[1] += w * dy * nx * st[2];
            }
        }
    }
    out
}

fn criterion_5() -> Outcome {
    use airy_spline::harness::cases::bilayer::{H1, L, W};
    let (def, sol, _) = solved(CaseName::BilayerCantilever, &Overrides::default());
    let coupling = sol
        .bc_residuals
        .iter()
        .find(|(l, _)| l == "interface")
        .map(|(_, v)| v.abs())
        .unwrap();
    let coupling_ok = coupling <= 1e-4 * W * W * L;
    let clamp = vertical_edge_resultant(&def.model, &sol, &[0, 1], Side::Xi0)[1];
    let clamp_ok = (clamp - W * L).abs() <= 0.01 * W * L;
    let prof = vertical_profile(&def.model, &sol, 0.5 * L, 41).unwrap();
    let at_interface: Vec<_> = prof.iter().filter(|p| (p.y - H1).abs() < 1e-9).collect();
    let (below, above) = (at_interface[0].sigma[0], at_interface[1].sigma[0]);
    let syy_scale = prof.iter().fold(0.0f64, |a, p| a.max(p.sigma[1].abs()));
    let jump = (above - below).abs();
    let jump_ok = below * above < 0.0 && jump > 10.0 * syy_scale;
    outcome(
        coupling_ok && clamp_ok && jump_ok,
        format!(
            "coupling residual {coupling:.2e} (limit {:.1e}); clamp vertical resultant {clamp:.4} vs {:.1}; \
             sigma_xx at interface {below:.3} / {above:.3}, jump {jump:.3} vs 10 x {syy_scale:.3}",
            1e-4 * W * W * L,
            W * L
        ),
    )
}

fn criterion_6() -> Outcome {
    use airy_spline::harness::cases::parabolic::{L, P, Q};
    let (def, sol, _) = solved(CaseName::ParabolicCantilever, &Overrides::default());
    let r = vertical_edge_resultant(&def.model, &sol, &[0], Side::Xi1);
    let res_ok = (r[0] - Q).abs() <= 0.01 * Q.abs() && (r[1] - P).abs() <= 0.01 * P.abs();
    // Squared-traction residuals, compared as RMS traction.
    let scale = Q.abs() / 0.5;
    let rms = |label: &str| {
        let v = sol.bc_residuals.iter().find(|(l, _)| l == label).unwrap().1;
        (v.abs() / L).sqrt()
    };
    let (top, bottom) = (rms("top"), rms("bottom"));
    let free_ok = top <= 1e-4 * scale && bottom <= 1e-4 * scale;
    let prof = vertical_profile(&def.model, &sol, 0.5 * L, 201).unwrap();
    let syy: Vec<f64> = prof.iter().map(|p| p.sigma[1]).collect();
    let mag = syy.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (lo, hi) = syy.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    // Values within roundoff of zero do not count as a sign.
    let sign_ok = lo < -1e-6 * mag && hi > 1e-6 * mag;
    outcome(
        res_ok && free_ok && sign_ok,
        format!(
            "right resultants ({:.6e}, {:.6e}); top/bottom RMS traction {top:.1e}/{bottom:.1e} (limit {:.1e}); \
             sigma_yy at x = 2.5 spans [{lo:.4e}, {hi:.4e}]{}",
            r[0],
            r[1],
            1e-4 * scale,
            if sign_ok { "" } else { ", no sign change" }
        ),
    )
}

fn criterion_7() -> Outcome {
    let want = [50, 18, 168, 50];
    let mut got = Vec::new();
    for name in CaseName::ALL {
        let def = build_case(name, &Overrides::default()).unwrap();
        got.push(def.model.total_dofs());
    }
    let (_, beam, _) = solved(CaseName::BeamUniformLoad, &Overrides::default());
    let free = beam.partition.free.len();
    outcome(got == want && free == 2, format!("DOFs {got:?} (want {want:?}); beam |D| = {free}"))
}

// Cox-de Boor from its recursive definition.
fn cox_de_boor(t: &[f64], i: usize, p: usize, u: f64) -> f64 {
    if p == 0 {
        let last = t[t.len() - 1];
        let inside = t[i] <= u && u < t[i + 1];
        let closing = u == last && t[i] < t[i + 1] && t[i + 1] == last;
        return if inside || closing { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    if t[i + p] > t[i] {
        v += (u - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, u);
    }
    if t[i + p + 1] > t[i + 1] {
        v += (t[i + p + 1] - u) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, u);
    }
    v
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (e, nu) = (2.5, 0.3);
    let (x0, x1, y0, y1) = (-0.5, 1.5, 0.25, 1.0);
    let (a, b) = (x1 - x0, y1 - y0);
    let patch = Patch::new(
        "oracle",
        GeometricMapping::rectangle(x0, x1, y0, y1).unwrap(),
        ControlNet::open_uniform((3, 2), (5, 4)).unwrap(),
        ComplianceModel::isotropic(e, nu).unwrap(),
        BodyForcePotential::None,
    );
    let ps = vec![patch];
    let dofs = GlobalDofMap::new(&ps);
    let form = internal_energy_form(&ps, &dofs, &AssemblyOptions::default()).unwrap();
    let phi = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
    let net = ps[0].net.with_flat_values(phi.as_slice()).unwrap();
    let density = |s: f64, t: f64| {
        let d = net.partials(s, t).unwrap();
        let sxx = d.d_etaeta / (b * b);
        let syy = d.d_xixi / (a * a);
        let sxy = -d.d_xieta / (a * b);
        0.5 * ((sxx * sxx + syy * syy - 2.0 * nu * sxx * syy) / e + (1.0 + nu) / e * sxy * sxy)
    };
    // All knots lie on the 50-cell grid, so the midpoint error is an even
    // series in h on every cell; Richardson removes h² and h⁴.
    let midpoint = |k: usize| {
        let h = 1.0 / k as f64;
        let mut sum = 0.0;
        for i in 0..k {
            for j in 0..k {
                sum += density((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            }
        }
        sum * h * h * a * b
    };
    let (m1, m2, m3) = (midpoint(50), midpoint(100), midpoint(200));
    let oracle = (16.0 * (4.0 * m3 - m2) / 3.0 - (4.0 * m2 - m1) / 3.0) / 15.0;
    let energy_rel = (form.value(&phi) - oracle).abs() / oracle.abs();

    // Surface values against a brute-force double sum of recursive basis functions.
    let tx = net.xi_basis().knots().values().to_vec();
    let ty = net.eta_basis().knots().values().to_vec();
    let mut value_err: f64 = 0.0;
    let mut deriv_err: f64 = 0.0;
    let vals: &DMatrix<f64> = net.values();
    for _ in 0..50 {
        let (u, v) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let mut direct = 0.0;
        for i in 0..5 {
            for j in 0..4 {
                direct += cox_de_boor(&tx, i, 3, u) * cox_de_boor(&ty, j, 2, v) * vals[(i, j)];
            }
        }
        value_err = value_err.max((net.value(u, v).unwrap() - direct).abs());
        let (u, v) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
        let h = 1e-6;
        let d = net.partials(u, v).unwrap();
        let fd_u = (net.value(u + h, v).unwrap() - net.value(u - h, v).unwrap()) / (2.0 * h);
        let fd_v = (net.value(u, v + h).unwrap() - net.value(u, v - h).unwrap()) / (2.0 * h);
        deriv_err = deriv_err.max((d.d_xi - fd_u).abs()).max((d.d_eta - fd_v).abs());
    }
    let ok = energy_rel <= 1e-10 && value_err <= 1e-13 && deriv_err <= 1e-6;
    outcome(
        ok,
        format!(
            "energy vs 200x200 midpoint (Richardson) {energy_rel:.1e} (limit 1e-10); \
             value vs double sum {value_err:.1e}; first derivatives vs differences {deriv_err:.1e}"
        ),
    )
}

type Check = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        (1, "beam error table", criterion_1),
        (2, "aspect-ratio scaling", criterion_2),
        (3, "bar profile", criterion_3),
        (4, "equilibrium identity", criterion_4),
        (5, "bi-layer cantilever", criterion_5),
        (6, "parabolic cantilever", criterion_6),
        (7, "DOF counts", criterion_7),
        (8, "oracle equivalence", criterion_8),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id} {tag}: {name}: {}", o.detail);
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
