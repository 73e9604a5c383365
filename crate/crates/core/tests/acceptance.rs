//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moebius_lab::config::Tolerances;
use moebius_lab::frames::{
    extended_frame_integrate, lambda_samples, rectangle_loop, structure_residuals, ExtendedFrameOptions, FrameData,
    FrameEvaluator, FrameGrid,
};
use moebius_lab::invariants::{
    transform_invariants, willmore_energy, willmore_energy_with, InvariantData, InvariantOptions,
};
use moebius_lab::lifts::{riccati_constant, LLiftData, MuField};
use moebius_lab::minkowski::random_mobius;
use moebius_lab::report::{default_domain, golden_section, product_torus_energy, resolve_mu, verify, MuChoice};
use moebius_lab::surfaces::{
    apply_coordinate_change, apply_mobius, catalog_defaults, parse_surface, Chart, Clifford, CoordinateChange,
    FiniteDifferenceChart, SurfaceChart,
};
use moebius_lab::{Result, C64};

type Outcome = Result<(bool, String)>;

const POLE: C64 = C64::new(3.0, 3.0);

fn chart(spec: &str) -> SurfaceChart {
    parse_surface(spec).expect("catalog chart")
}

fn random_point(rng: &mut ChaCha8Rng, c: &dyn Chart) -> (f64, f64) {
    let (s, t) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
    c.domain().from_unit(s, t)
}

fn constant_root(c: &dyn Chart) -> Result<MuField> {
    let inv = InvariantData::compute(c, 0.1, 0.2, &InvariantOptions::default())?;
    Ok(MuField::Constant(riccati_constant(&inv.s, 1e-9)?[0]))
}

/// Riccati solutions for every catalog surface.
fn riccati_fixtures() -> Result<Vec<(SurfaceChart, MuField)>> {
    let mut out = vec![
        (chart("clifford"), MuField::Zero),
        (chart("clifford"), MuField::Pole { c: POLE }),
        (chart("great-sphere:n=3"), MuField::StereoDual),
        (chart("great-sphere:n=5"), MuField::StereoDual),
        (chart("veronese"), MuField::StereoDual),
    ];
    for spec in ["product-torus:a=0.8", "flat-torus-s5:a1=0.5,a2=0.6"] {
        let c = chart(spec);
        let mu = constant_root(c.as_ref())?;
        out.push((c, mu));
    }
    Ok(out)
}

fn clifford_values() -> Outcome {
    let c = chart("clifford");
    let inv = InvariantData::compute(c.as_ref(), 0.37, 1.21, &InvariantOptions::default())?;
    let s = inv.s.value().norm();
    let k = (inv.kappa_norm2.value() - 0.125).norm();
    let e = (willmore_energy(c.as_ref(), 64, 64)? - 2.0 * PI * PI).abs();
    let start = Instant::now();
    let (report, _) = verify(c.as_ref(), &MuField::Zero, c.domain(), (64, 64), 16, &Tolerances::default())?;
    let energy = willmore_energy(c.as_ref(), 64, 64)?;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = s < 1e-9 && k < 1e-9 && e < 1e-9 && elapsed < 5.0 && report.passed() && energy.is_finite();
    Ok((ok, format!("|s|={s:.1e} |<k,k>-1/8|={k:.1e} |E-2pi^2|={e:.1e} verify+energy 64x64 in {elapsed:.2}s")))
}

fn product_torus_values() -> Outcome {
    let c = chart("product-torus:a=0.8");
    let inv = InvariantData::compute(c.as_ref(), 0.41, -0.73, &InvariantOptions::default())?;
    let ds = (inv.s.value() - C64::new(-0.3038194, 0.0)).norm();
    let dk = (inv.kappa_norm2.value() - C64::new(0.2712674, 0.0)).norm();
    let dw = (inv.willmore_residual_norm()? - 0.0791196).abs();
    let de = (willmore_energy(c.as_ref(), 64, 64)? - 20.5616754).abs();
    let (a, _) = golden_section(|a| product_torus_energy(a, (32, 32)), 0.55, 0.9, 1e-6)?;
    let da = (a - FRAC_1_SQRT_2).abs();
    let ok = ds < 1e-7 && dk < 1e-7 && dw < 1e-6 && de < 1e-6 && da < 1e-3;
    Ok((ok, format!("ds={ds:.1e} dk={dk:.1e} dW={dw:.1e} dE={de:.1e} argmin a={a:.7} (|a-1/sqrt2|={da:.1e})")))
}

fn flatness_certification() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let clifford = chart("clifford");
    for mu in [MuField::Zero, MuField::Pole { c: POLE }] {
        let domain = default_domain(clifford.as_ref(), &mu);
        let g = FrameGrid::compute(clifford.as_ref(), &mu, domain, 64, 64)?;
        let floor = g.noise_floor()?;
        let mut worst = 0.0f64;
        for l in lambda_samples(16) {
            worst = worst.max(g.flatness_residual(l)?);
        }
        ok &= worst < 10.0 * floor;
        detail.push(format!("clifford {mu}: max {worst:.2e} vs floor {floor:.2e}"));
    }
    let torus = chart("product-torus:a=0.8");
    let mu = constant_root(torus.as_ref())?;
    let g = FrameGrid::compute(torus.as_ref(), &mu, torus.domain(), 64, 64)?;
    let floor = g.noise_floor()?;
    let at_i = g.flatness_residual(C64::i())?;
    ok &= at_i >= 1e3 * floor;
    detail.push(format!("torus lambda=i {at_i:.2e} = {:.1e} x floor", at_i / floor));

    let tol = Tolerances::default();
    let mut disagree = Vec::new();
    for spec in catalog_defaults() {
        let c = chart(spec);
        let (u, v) = c.domain().from_unit(0.5, 0.5);
        let mu = resolve_mu(&MuChoice::Auto, c.as_ref(), u, v, &tol)?;
        let (report, _) = verify(c.as_ref(), &mu, default_domain(c.as_ref(), &mu), (32, 32), 16, &tol)?;
        if !report.agree {
            disagree.push(spec);
        }
    }
    ok &= disagree.is_empty();
    detail.push(format!("classifier disagreements: {disagree:?}"));
    Ok((ok, detail.join("; ")))
}

fn structure_equations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut worst_spec = "";
    for spec in catalog_defaults() {
        let c = chart(spec);
        for _ in 0..100 {
            let (u, v) = random_point(&mut rng, c.as_ref());
            let inv = InvariantData::compute(c.as_ref(), u, v, &InvariantOptions::default())?;
            let r = structure_residuals(&inv)?.max();
            if r > worst {
                worst = r;
                worst_spec = spec;
            }
        }
    }
    Ok((worst < 1e-8, format!("max residual {worst:.2e} ({worst_spec}) over 100 points per chart")))
}

fn random_change(rng: &mut ChaCha8Rng) -> CoordinateChange {
    let kind = rng.random_range(0..3);
    let mut c = |r: f64| C64::new(rng.random_range(-r..r), rng.random_range(-r..r));
    match kind {
        0 => CoordinateChange::Affine(C64::new(1.0, 0.0) + c(0.5), c(1.0)),
        1 => CoordinateChange::Fractional(C64::new(1.0, 0.0) + c(0.3), c(0.5), c(0.3), C64::new(1.0, 0.0) + c(0.2)),
        _ => CoordinateChange::Quadratic(c(0.3)),
    }
}

fn mobius_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let specs = catalog_defaults();
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let c = chart(specs[seed as usize % specs.len()]);
        let m = random_mobius(1000 + seed, c.n())?;
        let moved = apply_mobius(c.clone(), &m)?;
        let (u, v) = random_point(&mut rng, c.as_ref());
        let a = InvariantData::compute(c.as_ref(), u, v, &InvariantOptions::scalars_only())?;
        let b = InvariantData::compute(moved.as_ref(), u, v, &InvariantOptions::scalars_only())?;
        worst = worst
            .max((a.s.value() - b.s.value()).norm())
            .max((a.kappa_norm2.value() - b.kappa_norm2.value()).norm());
    }

    let fixtures = [(chart("product-torus:a=0.8"), None), (chart("clifford"), Some(MuField::Pole { c: POLE }))];
    let mut cov = 0.0f64;
    for k in 0..5 {
        let (base, mu) = &fixtures[k % 2];
        let mu = match mu {
            Some(m) => m.clone(),
            None => constant_root(base.as_ref())?,
        };
        let z = C64::new(rng.random_range(0.1..0.5), rng.random_range(0.1..0.5));
        let change = loop {
            let ch = random_change(&mut rng);
            let round_trip = ch.forward_point(z).and_then(|w| ch.inverse_point(w));
            if ch.check_regular(z).is_ok() && round_trip.is_ok_and(|b| (b - z).norm() < 1e-12) {
                break ch;
            }
        };
        let inv = InvariantData::compute(base.as_ref(), z.re, z.im, &InvariantOptions::default())?;
        let mu0 = mu.jet_at(z.re, z.im, 0)?.value();
        let expected = transform_invariants(inv.s.value(), &inv.kappa.value()?, mu0, &change, z)?;
        let w = change.forward_point(z)?;
        let moved = apply_coordinate_change(base.clone(), change);
        let inv_w = InvariantData::compute(moved.as_ref(), w.re, w.im, &InvariantOptions::default())?;
        let field = MuField::Transformed {
            inner: Box::new(mu),
            change,
        };
        let lift = LLiftData::compute(&inv_w, &field)?;
        cov = cov
            .max((inv_w.s.value() - expected.s).norm())
            .max((&inv_w.kappa.value()? - &expected.kappa).max_abs())
            .max((lift.mu.value() - expected.mu).norm())
            .max(lift.theta.value().norm());
    }
    let ok = worst < 1e-9 && cov < 1e-8;
    Ok((ok, format!("Mobius max drift {worst:.1e}; coordinate covariance max defect {cov:.1e}")))
}

fn moving_frame_corollary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for (c, mu) in riccati_fixtures()? {
        for _ in 0..20 {
            let (u, v) = random_point(&mut rng, c.as_ref());
            let inv = InvariantData::compute(c.as_ref(), u, v, &InvariantOptions::default())?;
            let lift = LLiftData::compute(&inv, &mu)?;
            let frame = FrameData::new(&inv, &lift)?;
            worst = worst.max(frame.corollary_defect(lift.l_square.value()));
        }
    }
    let c = chart("clifford");
    let inv = InvariantData::compute(c.as_ref(), 0.3, 0.8, &InvariantOptions::default())?;
    let lift = LLiftData::compute(&inv, &MuField::Zero)?;
    let frame = FrameData::new(&inv, &lift)?;
    let btb = frame.b.value.transpose() * &frame.b.value;
    let btb_norm = btb.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let rank = frame.b_rank(1e-8);
    let pole = LLiftData::compute(&inv, &MuField::Pole { c: POLE })?;
    let ll = pole.l_square.value().norm();
    let ok = worst < 1e-9 && btb_norm < 1e-12 && rank == 1 && ll > 1e-3;
    Ok((ok, format!("max defect {worst:.1e}; clifford mu=0 |BtB|={btb_norm:.1e} rank {rank}; pole |<L,L>|={ll:.3e}")))
}

fn maurer_cartan_convergence() -> Outcome {
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| FrameGrid::compute(&Clifford, &MuField::Zero, Clifford.domain(), n, n)?.maurer_cartan_error(false))
        .collect::<Result<_>>()?;
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    let in_band = orders.iter().all(|p| (1.8..=2.2).contains(p));

    let opts = ExtendedFrameOptions::default();
    let mut mono = 0.0f64;
    let loops = [
        (chart("clifford"), MuField::Zero, rectangle_loop(0.0, 1.0, 0.0, 1.0)),
        (chart("clifford"), MuField::Pole { c: POLE }, rectangle_loop(0.3, 1.1, 0.3, 1.1)),
    ];
    for (c, mu, path) in &loops {
        let (u0, v0) = path[0];
        let eval = FrameEvaluator::new(c.as_ref(), mu.clone(), u0, v0)?;
        let alpha = |u: f64, v: f64| eval.alpha_prime(u, v);
        let f0 = eval.point(u0, v0)?.frame.f;
        for l in lambda_samples(4) {
            mono = mono.max(extended_frame_integrate(&alpha, l, path, &f0, &opts)?.monodromy_defect());
        }
    }
    let ok = in_band && mono < 1e-5;
    let e = errs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ");
    Ok((ok, format!("errors [{e}] orders {:.3}, {:.3}; max monodromy {mono:.1e}", orders[0], orders[1])))
}

/// Scalars shared by the analytic and finite-difference pipelines, split into
/// those needing at most third derivatives of the position and the two that
/// need fourth derivatives (Willmore residual and L-equation).
fn scalars(c: &dyn Chart, mu: &MuField, u: f64, v: f64, opts: &InvariantOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let inv = InvariantData::compute(c, u, v, opts)?;
    let lift = LLiftData::compute(&inv, mu)?;
    let leq = lift.l_equation(&inv)?.values().iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let (s, k, r, t, l) = (inv.s.value(), inv.kappa_norm2.value(), lift.rho.value(), lift.theta.value(), lift.l_square.value());
    let low = vec![s.re, s.im, k.re, 4.0 * k.re, r.re, r.im, t.re, t.im, l.re, l.im];
    Ok((low, vec![inv.willmore_residual_norm()?, leq]))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let relaxed = InvariantOptions::default().with_conformal_tol(1e-4);
    let exact = InvariantOptions::default();
    let (mut low, mut high, mut fine_high) = (0.0f64, 0.0f64, 0.0f64);
    let mut energy = 0.0f64;
    for (c, mu) in riccati_fixtures()? {
        let fine = FiniteDifferenceChart::new(Arc::clone(&c), 1e-3, 2);
        let coarse = FiniteDifferenceChart::new(Arc::clone(&c), 1e-2, 4);
        for _ in 0..10 {
            let (u, v) = random_point(&mut rng, c.as_ref());
            let (a_low, a_high) = scalars(c.as_ref(), &mu, u, v, &exact)?;
            let (b_low, b_high) = scalars(&fine, &mu, u, v, &relaxed)?;
            let (_, d_high) = scalars(&coarse, &mu, u, v, &relaxed)?;
            low = low.max(max_gap(&a_low, &b_low));
            fine_high = fine_high.max(max_gap(&a_high, &b_high));
            high = high.max(max_gap(&a_high, &d_high));
        }
        let domain = c.domain();
        let ea = willmore_energy_with(c.as_ref(), domain, 16, 16, &InvariantOptions::scalars_only())?;
        let eb = willmore_energy_with(&fine, domain, 16, 16, &InvariantOptions::scalars_only().with_conformal_tol(1e-4))?;
        energy = energy.max((ea - eb).abs());
    }
    let ok = low < 1e-4 && energy < 1e-4 && high < 1e-4;
    Ok((
        ok,
        format!(
            "h=1e-3: scalars {low:.1e}, energy {energy:.1e}; fourth-order scalars at h=1e-2 {high:.1e} (h=1e-3 gives {fine_high:.1e})"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("clifford torus invariants, energy and runtime", clifford_values),
        ("product torus values and energy minimizer", product_torus_values),
        ("lambda-flatness certification and classifier agreement", flatness_certification),
        ("structure equations on every catalog chart", structure_equations),
        ("Mobius invariance and coordinate covariance", mobius_invariance),
        ("moving-frame corollary and isotropy", moving_frame_corollary),
        ("numeric Maurer-Cartan convergence and monodromy", maurer_cartan_convergence),
        ("finite-difference oracle equivalence", oracle_equivalence),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {detail} ({:.2}s)", k + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
