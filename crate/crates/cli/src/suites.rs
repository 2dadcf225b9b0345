//! The verification suites behind each subcommand.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use amplify_core::amplifier::{self, Provenance, QuaternionStabOracle};
use amplify_core::arith::gcd;
use amplify_core::hctransform::orbital::{
    critical_thetas, element_at_normalizer_distance, oscillatory_j, oscillatory_j_direct, phase_hessian,
    relative_geometric_side, stationary_phase_reduction, support_bound,
};
use amplify_core::hctransform::{model_integral, model_phase_hessian, orbital_integral, CutoffB, KnuFamily, ModelCutoff};
use amplify_core::psl2::{cartan_t, dist, make_a, make_k, GroupElement};
use amplify_core::quatorder::{self, BasisOrder};
use amplify_core::Result;

use crate::config::ExperimentConfig;
use crate::report::{Cell, SuiteReport, Table};

pub const COMMANDS: [&str; 8] =
    ["verify-knu", "stationary-phase", "orbital", "counts", "stabilizers", "geometric-sides", "resonate", "budget"];

/// Shared state for one run.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub order: BasisOrder,
    pub family: KnuFamily,
    pub cutoff: CutoffB,
}

impl Context {
    pub fn new(config: ExperimentConfig, seed: u64) -> Result<Self> {
        let order = config.order()?;
        let family = KnuFamily::new(config.knu_settings())?;
        let (_, log_unit) = quatorder::rf_positive_unit(&order)?;
        let cutoff = CutoffB::new(2.0 * log_unit)?;
        Ok(Context { config, seed, order, family, cutoff })
    }

    /// The radius C' of the norm balls.
    pub fn cprime(&self) -> f64 {
        self.config.algebra.cprime.unwrap_or_else(|| support_bound(&self.cutoff, self.family.support).cprime)
    }
}

pub fn run_suite(ctx: &Context, name: &str) -> Result<SuiteReport> {
    match name {
        "verify-knu" => verify_knu(ctx),
        "stationary-phase" => stationary_phase(ctx),
        "orbital" => orbital(ctx),
        "counts" => counts(ctx),
        "stabilizers" => stabilizers(ctx),
        "geometric-sides" => geometric_sides(ctx),
        "resonate" => resonate(ctx),
        "budget" => budget(ctx),
        other => Err(amplify_core::Error::InvalidParameter(format!("unknown suite {other}"))),
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

pub fn verify_knu(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("verify_knu");
    let fam = &ctx.family;
    let step = fam.settings.grid_step;
    let mut t = Table::new(
        "properties",
        &[
            "nu",
            "support_radius",
            "measured_support",
            "window_min",
            "min_value",
            "segment_min",
            "decay_sup4",
            "tail_bound",
            "k_e",
            "k_e_over_nu",
            "geodesic_mass",
        ],
    );
    let (mut supports, mut decays, mut kes) = (Vec::new(), Vec::new(), Vec::new());
    for &nu in &ctx.config.run.nu_grid {
        let e = fam.entry(nu)?;
        let c = &e.certificate;
        t.push(vec![
            nu.into(),
            fam.support.into(),
            c.measured_support.into(),
            c.window_min.into(),
            c.min_value.into(),
            c.segment_min.into(),
            c.decay_sup4.into(),
            c.tail_bound.into(),
            c.k_e.into(),
            c.k_e_over_nu.into(),
            fam.geodesic_mass(nu)?.into(),
        ]);
        let v = c.violations(fam.support, step);
        rep.check(&format!("certificate nu={nu}"), v.is_empty(), if v.is_empty() { "all five properties hold".into() } else { v.join("; ") });
        supports.push(c.measured_support);
        decays.push(c.decay_sup4);
        kes.push(c.k_e_over_nu);
    }
    let width = supports.iter().cloned().fold(f64::MIN, f64::max) - supports.iter().cloned().fold(f64::MAX, f64::min);
    rep.check("support identical across nu", width <= step + 1e-12, format!("spread {width:e}, grid step {step:e}"));
    let d = spread(&decays);
    rep.check("decay constant stable", d - 1.0 < 0.5, format!("max/min of sup hat k (1+|nu-r|)^4 = {d}"));
    let k = spread(&kes);
    rep.check("k_nu(e)/nu band", k <= 1.5, format!("max/min of k_nu(e)/nu = {k}"));
    rep.tables.push(t);
    Ok(rep)
}

/// The element used for the stationary-phase comparison of J.
pub fn j_test_element() -> GroupElement {
    GroupElement::from_gl2_plus(3.0, 1.0, 1.0, 1.0).expect("positive determinant")
}

pub fn stationary_phase(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("stationary_phase");
    let c = ModelCutoff::for_support(ctx.family.support);
    let rows: Vec<(f64, f64)> =
        ctx.config.run.r_grid.par_iter().map(|&r| Ok((r, r * model_integral(r, &c)?))).collect::<Result<_>>()?;
    let mut t = Table::new("model", &["r", "r_L", "four_pi", "abs_diff", "bound", "pass"]);
    for (r, rl) in rows {
        let diff = (rl - 4.0 * PI).abs();
        let pass = diff <= 60.0 / r;
        t.push(vec![r.into(), rl.into(), (4.0 * PI).into(), diff.into(), (60.0 / r).into(), pass.into()]);
        rep.check(&format!("|r L(r) - 4 pi| <= 60/r at r={r}"), pass, format!("{diff:e}"));
    }
    rep.tables.push(t);

    let h = model_phase_hessian(0.0, 0.0);
    let mut ht = Table::new("hessians", &["phase", "theta", "h11", "h12", "h22", "det"]);
    ht.push(vec!["model".into(), 0.0.into(), h[0][0].into(), h[0][1].into(), h[1][1].into(), (h[0][0] * h[1][1] - h[0][1] * h[1][0]).into()]);
    rep.check("model phase is nondegenerate", h[0][0] * h[1][1] - h[0][1] * h[1][0] < 0.0, format!("{h:?}"));

    let g = j_test_element();
    let b = &ctx.cutoff;
    for theta in critical_thetas(&g) {
        if let Some(hh) = phase_hessian(theta, &g) {
            ht.push(vec![
                "orbital".into(),
                theta.into(),
                hh[0][0].into(),
                hh[0][1].into(),
                hh[1][1].into(),
                (hh[0][0] * hh[1][1] - hh[0][1] * hh[1][0]).into(),
            ]);
        }
    }
    rep.tables.push(ht);

    let direct = oscillatory_j_direct(1.0, &g, b, ctx.config.analysis.osc_panels);
    let separated = oscillatory_j(1.0, &g, b)?;
    let dev = (direct.re - separated).abs().max(direct.im.abs());
    rep.check("J separated vs direct triple quadrature at r=1", dev <= 1e-6 * separated.abs().max(1.0), format!("{separated} vs {direct}"));

    let mut jt = Table::new("j", &["r", "j", "stationary_phase", "abs_diff", "abs_diff_r2"]);
    let jrows: Vec<(f64, f64, f64)> = ctx
        .config
        .run
        .j_r_grid
        .par_iter()
        .map(|&r| Ok((r, oscillatory_j(r, &g, b)?, stationary_phase_reduction(r, &g, b).re)))
        .collect::<Result<_>>()?;
    for (r, j, sp) in jrows {
        let d = (j - sp).abs();
        jt.push(vec![r.into(), j.into(), sp.into(), d.into(), (d * r * r).into()]);
    }
    rep.tables.push(jt);
    Ok(rep)
}

/// The grid of elements at prescribed distances from the normalizer.
pub fn decay_grid(ctx: &Context) -> Result<Vec<(f64, f64, GroupElement)>> {
    let r = &ctx.config.run;
    let count = r.orbital_elements;
    (0..count)
        .map(|i| {
            let x = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let d = r.orbital_d_min * (r.orbital_d_max / r.orbital_d_min).powf(x);
            let s0 = 0.2 * (i % 5) as f64 - 0.4;
            Ok((d, s0, element_at_normalizer_distance(d, s0)?))
        })
        .collect()
}

pub fn orbital(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("orbital");
    let grid = decay_grid(ctx)?;
    let b = &ctx.cutoff;
    let mut t = Table::new("decay", &["nu", "d", "s0", "value", "scaled"]);
    let mut scaled_all = Vec::new();
    for &nu in &ctx.config.run.nu_grid {
        let entry = ctx.family.entry(nu)?;
        let vals: Vec<f64> = grid.par_iter().map(|(_, _, g)| orbital_integral(&entry, g, b)).collect::<Result<_>>()?;
        for ((d, s0, _), v) in grid.iter().zip(vals) {
            let scaled = v.abs() * (1.0 + nu * d).sqrt();
            scaled_all.push(scaled);
            t.push(vec![nu.into(), (*d).into(), (*s0).into(), v.into(), scaled.into()]);
        }
    }
    let max = scaled_all.iter().cloned().fold(0.0, f64::max);
    let min = scaled_all.iter().cloned().fold(f64::MAX, f64::min);
    rep.check("max/min of |I|(1+nu d)^(1/2) <= 10", max / min <= 10.0, format!("max {max}, min {min:e}, ratio {}", max / min));
    let bound = ctx.config.run.orbital_decay_constant;
    rep.check("max of |I|(1+nu d)^(1/2) within recorded constant", max <= bound, format!("max {max}, recorded {bound}"));
    rep.tables.push(t);

    let sb = support_bound(b, ctx.family.support);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let nu = ctx.config.run.nu_grid[0];
    let entry = ctx.family.entry(nu)?;
    let mut vt = Table::new("vanishing", &["nu", "cartan", "dist", "value"]);
    let mut all_zero = true;
    for _ in 0..ctx.config.run.vanishing_samples {
        let g = loop {
            let t = sb.cartan + rng.gen_range(0.05..3.0);
            let g = make_k(rng.gen_range(0.0..2.0 * PI)) * make_a(t) * make_k(rng.gen_range(0.0..2.0 * PI));
            if dist(&g, &GroupElement::identity()) > sb.dist {
                break g;
            }
        };
        let v = orbital_integral(&entry, &g, b)?;
        all_zero &= v == 0.0;
        vt.push(vec![nu.into(), cartan_t(&g).into(), dist(&g, &GroupElement::identity()).into(), v.into()]);
    }
    rep.check("I vanishes beyond the support bound", all_zero, format!("cartan bound {}, dist bound {}", sb.cartan, sb.dist));
    rep.tables.push(vt);
    Ok(rep)
}

pub fn counts(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("counts");
    let o = &ctx.order;
    let run = &ctx.config.run;
    let cprime = ctx.cprime();

    let box_c = run.box_scan_cprime;
    let mismatches: Vec<u64> = (1..=run.count_n_max)
        .into_par_iter()
        .map(|n| Ok((n, quatorder::enumerate_norm_ball(o, n, box_c)? == quatorder::enumerate_norm_ball_box(o, n, box_c)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, same)| !same)
        .map(|(n, _)| n)
        .collect();
    rep.check(
        "stratified enumeration equals box scan",
        mismatches.is_empty(),
        format!("n <= {}, C' = {box_c}, mismatches {mismatches:?}", run.count_n_max),
    );

    let deltas = &run.count_deltas;
    let mut mt = Table::new("approx_stabilizers", &["n", "delta", "count", "ratio", "coordinate_count"]);
    let mut dt = Table::new("discriminants", &["n", "ball_size", "violations", "parabolic", "max_ratio"]);
    let mut overlap = 0usize;
    let mut envelope = Vec::new();
    let (mut violations, mut parabolic) = (0u64, 0u64);
    let f2 = (o.f * o.f) as f64;
    let dn = o.d as i128;
    for n in 1..=run.count_n_max {
        let ball = quatorder::enumerate_norm_ball(o, n, cprime)?;
        let (mut viol, mut para, mut worst) = (0u64, 0u64, 0.0f64);
        for p in ball.iter().filter(|p| p.coords[1..] != [0, 0, 0]) {
            match quatorder::class_invariants(o, p) {
                Ok(inv) => {
                    let gap = (inv.trace.abs() - 2.0).abs();
                    let ratio = inv.disc.unsigned_abs() as f64 / ((2.0 * cprime + 2.0) * n as f64 * gap);
                    worst = worst.max(ratio);
                    if ratio > 1.0 {
                        viol += 1;
                    }
                }
                Err(amplify_core::Error::Parabolic) => para += 1,
                Err(e) => return Err(e),
            }
        }
        violations += viol;
        parabolic += para;
        dt.push(vec![n.into(), ball.len().into(), viol.into(), para.into(), worst.into()]);

        if n < 10 {
            continue;
        }
        let near = quatorder::normalizer_distances(o, n, cprime)?;
        overlap += near.iter().filter(|(p, d)| p.stabilizes() || *d <= 0.0).count();
        for &delta in deltas {
            let members: Vec<_> = near.iter().filter(|(_, d)| *d > 0.0 && *d <= delta).collect();
            let count = members.len();
            let coord = members
                .iter()
                .filter(|(p, _)| {
                    let [x0, x1, _, _] = p.coords.map(|v| v as i128);
                    ((x0 * x0 - dn * x1 * x1) as f64 / f2 - n as f64).abs() <= delta * n as f64
                })
                .count();
            let ratio = count as f64 / (delta * n as f64);
            envelope.push((n, ratio));
            mt.push(vec![n.into(), delta.into(), count.into(), ratio.into(), coord.into()]);
        }
    }
    rep.check("M(n, delta) disjoint from stabilizers", overlap == 0, format!("{overlap} overlapping points"));
    let half = run.count_n_max / 2;
    let c_half = envelope.iter().filter(|(n, _)| *n <= half).map(|(_, r)| *r).fold(0.0, f64::max);
    let c_full = envelope.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let drift = c_full / c_half - 1.0;
    rep.check(
        "envelope constant stable when the n-range doubles",
        drift.abs() <= 0.3,
        format!("C(10..{half}) = {c_half}, C(10..{}) = {c_full}, drift {drift:+.3}", run.count_n_max),
    );
    rep.check(
        "discriminant bound |D_O| <= (2C'+2) n ||tr|-2|",
        violations == 0 && parabolic == 0,
        format!("{violations} violations, {parabolic} parabolic, C' = {cprime}"),
    );
    let mut et = Table::new("envelope", &["n_max", "constant"]);
    et.push(vec![half.into(), c_half.into()]);
    et.push(vec![run.count_n_max.into(), c_full.into()]);
    rep.tables.extend([mt, dt, et]);
    Ok(rep)
}

pub fn stabilizers(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("stabilizers");
    let o = &ctx.order;
    let k = o.field();
    let rf = o.rf_order();
    let cond = o.rf_conductor();
    let ((ux, uy), log) = quatorder::rf_positive_unit(o)?;
    let ns: Vec<u64> = (1..=ctx.config.run.stab_n_max).filter(|n| gcd(*n, cond) == 1).collect();
    let rows: Vec<(u64, u64, u64, u64)> = ns
        .par_iter()
        .map(|&n| {
            let exact = quatorder::exact_stabilizer_count(o, n)?;
            let inverse = quatorder::exact_stabilizer_count_with_unit(o, n, (ux, -uy), log)?;
            let principal = amplify_core::quadfield::count_principal_generated(&k, &rf, n)?;
            Ok((n, exact, inverse, principal))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new("counts", &["n", "exact", "exact_inverse_unit", "principal"]);
    let (mut below, mut unit_mismatch) = (Vec::new(), Vec::new());
    for (n, e, ei, p) in rows {
        if e < p {
            below.push(n);
        }
        if e != ei {
            unit_mismatch.push(n);
        }
        t.push(vec![n.into(), e.into(), ei.into(), p.into()]);
    }
    rep.check("exact count >= principal count", below.is_empty(), format!("{} values of n, violations {below:?}", ns.len()));
    rep.check("count independent of the unit representative", unit_mismatch.is_empty(), format!("mismatches {unit_mismatch:?}"));
    rep.tables.push(t);
    Ok(rep)
}

pub fn geometric_sides(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("geometric_sides");
    let run = &ctx.config.run;
    let al = &ctx.config.algebra;
    let nu = run.sides_nu;
    let mut st = Table::new(
        "standard",
        &["nu", "n", "main", "hyperbolic_sum", "elliptic_sum", "classes", "ambiguous_keys", "filon_discrepancy"],
    );
    let mut rt = Table::new("relative", &["nu", "n", "main", "error_sum", "stabilizers", "ball_size", "nonzero_terms", "max_abs_term"]);
    let mut worst_filon: f64 = 0.0;
    for &n in &run.sides_n {
        let s = quatorder::standard_geometric_side(&ctx.order, &ctx.family, nu, n, al.vol_gamma, ctx.cprime(), al.unit_height)?;
        worst_filon = worst_filon.max(s.filon_discrepancy);
        st.push(vec![
            nu.into(),
            n.into(),
            s.main.into(),
            s.hyperbolic_sum.into(),
            s.elliptic_sum.into(),
            s.classes.len().into(),
            s.ambiguous_keys.into(),
            s.filon_discrepancy.into(),
        ]);
        let r = relative_geometric_side(&ctx.order, &ctx.family, nu, n, &ctx.cutoff)?;
        rt.push(vec![
            nu.into(),
            n.into(),
            r.main.into(),
            r.error_sum.into(),
            r.stabilizers.into(),
            r.ball_size.into(),
            r.nonzero_terms.into(),
            r.max_abs_term.into(),
        ]);
    }
    rep.check("hyperbolic integrals: Gauss-Legendre vs Filon", worst_filon <= 1e-6, format!("largest relative gap {worst_filon:e}"));
    rep.tables.extend([st, rt]);
    Ok(rep)
}

fn resonator_context(ctx: &Context) -> Result<(QuaternionStabOracle, Vec<u64>)> {
    let oracle = QuaternionStabOracle::new(&ctx.order);
    let excluded = oracle.excluded_primes()?;
    Ok((oracle, excluded))
}

pub fn resonate(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("resonate");
    let (oracle, excluded) = resonator_context(ctx)?;
    let field = ctx.order.field();
    let c = ctx.config.analysis.error_c;
    let rows = amplifier::resonator_report(&ctx.config.run.m_grid, &field, &excluded, &oracle, c)?;

    let mut t = Table::new("resonator", &["M", "B", "R", "B_L", "R_L", "ratio", "predictor", "truncated"]);
    let mut detail = Table::new(
        "resonator_detail",
        &["M", "support_size", "primes", "sum_a", "sum_a_exponent", "scaled_log_ratio", "two_sqrt_two", "grouped_agreement"],
    );
    let mut prov = Table::new("stab_provenance", &["M", "l", "stab", "provenance"]);
    for r in &rows {
        t.push(vec![r.m.into(), r.b.into(), r.r.into(), r.b_l.into(), r.r_l.into(), r.ratio.into(), r.predictor.into(), r.truncated.into()]);
        let primes: Vec<String> = r.primes.iter().map(|p| p.to_string()).collect();
        detail.push(vec![
            r.m.into(),
            r.support_size.into(),
            primes.join(" ").into(),
            r.sum_a.into(),
            r.sum_a_exponent.into(),
            r.scaled_log_ratio.into(),
            (2.0 * 2f64.sqrt()).into(),
            r.grouped_agreement.into(),
        ]);
        for (l, v, p) in &r.stab_rows {
            prov.push(vec![r.m.into(), (*l).into(), (*v).into(), p.label().into()]);
        }
    }
    let b_ok = rows.iter().all(|r| r.b >= 1.0);
    rep.check("B(a) >= 1", b_ok, format!("min B = {}", rows.iter().map(|r| r.b).fold(f64::MAX, f64::min)));
    let ratio_ok = rows.iter().all(|r| r.ratio >= 1.0);
    rep.check("B_L/B >= 1", ratio_ok, format!("min ratio = {}", rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min)));
    let mono = rows.windows(2).all(|w| w[1].m < w[0].m || w[1].ratio >= w[0].ratio);
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    rep.check("B_L/B nondecreasing in M", mono, format!("{ratios:?}"));
    let agree = rows.iter().map(|r| r.grouped_agreement).fold(0.0, f64::max);
    rep.check("direct and grouped sums agree", agree <= 1e-12, format!("largest relative gap {agree:e}"));
    let truncated = rows.iter().any(|r| r.truncated);
    if truncated {
        log::warn!("prime window clipped at the sieve limit for some M");
    }

    let mut sens = Table::new("error_c_sensitivity", &["M", "C", "R", "R_L"]);
    for &m in &ctx.config.run.m_grid {
        let res = amplifier::build_resonator(m, &field, &excluded)?;
        for &cc in &ctx.config.run.error_c_grid {
            let s = amplifier::compute_sums(&res.sequence, &oracle, cc)?;
            sens.push(vec![m.into(), cc.into(), s.r.into(), s.r_l.into()]);
        }
    }
    let lower = rows.iter().flat_map(|r| &r.stab_rows).filter(|(_, _, p)| *p == Provenance::LowerBound).count();
    log::info!("{lower} stabilizer counts use the principal-ideal lower bound");
    rep.tables.extend([t, detail, prov, sens]);
    Ok(rep)
}

pub fn budget(ctx: &Context) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("budget");
    let (oracle, excluded) = resonator_context(ctx)?;
    let run = &ctx.config.run;
    let b = amplifier::theorem_budget(
        run.budget_nu,
        run.budget_a,
        run.budget_cpp,
        &ctx.order.field(),
        &excluded,
        &oracle,
        ctx.config.analysis.error_c,
    )?;
    let mut t = Table::new(
        "budget",
        &[
            "nu",
            "A",
            "Cpp",
            "M",
            "B",
            "R",
            "B_L",
            "R_L",
            "main_standard",
            "main_relative",
            "standard_error_bound",
            "relative_error_bound",
            "lower_bound_prediction",
            "lower_bound_nu_form",
            "standard_dominates",
            "relative_dominates",
        ],
    );
    t.push(vec![
        b.nu.into(),
        b.a.into(),
        b.cpp.into(),
        b.m.into(),
        b.sums.b.into(),
        b.sums.r.into(),
        b.sums.b_l.into(),
        b.sums.r_l.into(),
        b.main_standard.into(),
        b.main_relative.into(),
        b.standard_error_bound.into(),
        b.relative_error_bound.into(),
        b.lower_bound_prediction.into(),
        b.lower_bound_nu_form.into(),
        b.dominance_flags.standard.into(),
        b.dominance_flags.relative.into(),
    ]);
    rep.check("R(a) <= nu B(a)", b.dominance_flags.standard, format!("R = {}, nu B = {}", b.sums.r, b.main_standard));
    rep.check(
        "nu^(-1/2) R_L(a) <= B_L(a)",
        b.dominance_flags.relative,
        format!("nu^(-1/2) R_L = {}, B_L = {}", b.sums.r_l / b.nu.sqrt(), b.sums.b_l),
    );
    rep.check("A > C''/8", b.a_admissible, format!("A = {}, C'' = {}", b.a, b.cpp));
    rep.tables.push(t);
    Ok(rep)
}

/// Column values of a table as floats.
pub fn floats(t: &Table, col: &str) -> Vec<f64> {
    t.column(col).into_iter().filter_map(Cell::as_f64).collect()
}
