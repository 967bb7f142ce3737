//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use nhscatter::bath::BathSpec;
use nhscatter::error::Error;
use nhscatter::oracle::{
    build_hamiltonian, classify_states, eigenpairs, match_state, mean_abs_position, Boundary, EDResult, StateClass,
};
use nhscatter::selfenergy::{
    branch_jump, sigma_finite_residue, sigma_finite_sum, sum_rule_residual, window, Branch,
};
use nhscatter::solver::{
    bound_states, degenerate_momenta, imk_leading, scattering_momentum, BoundKind, EmitterParams, FineTunedTarget,
};
use nhscatter::wavefn::{
    degenerate_wavefunction, hn_closed_form, ls_wavefunction, neglected_root_weight, nnn_closed_form, Region,
};
use nhscatter::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const L: usize = 801;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn params() -> EmitterParams {
    EmitterParams::new(20.0, 2.14).unwrap()
}

fn hn() -> BathSpec {
    BathSpec::hatano_nelson(6.0, 2.0)
}

fn nnn() -> BathSpec {
    BathSpec::nnn(5.0, 12.0)
}

fn nnn_second_order() -> BathSpec {
    BathSpec::nnn(10.0, 5.0)
}

struct Spectra {
    hn: EDResult,
    nnn: EDResult,
    nnn_second_order: EDResult,
    hn_obc: EDResult,
}

fn diagonalize(bath: &BathSpec, boundary: Boundary) -> EDResult {
    let h = build_hamiltonian(bath, &params(), L, boundary).unwrap();
    let ed = eigenpairs(&h).unwrap();
    classify_states(&ed, bath)
}

fn spectra() -> Spectra {
    std::thread::scope(|s| {
        let a = s.spawn(|| diagonalize(&hn(), Boundary::Pbc));
        let b = s.spawn(|| diagonalize(&nnn(), Boundary::Pbc));
        let d = s.spawn(|| diagonalize(&nnn_second_order(), Boundary::Pbc));
        let o = s.spawn(|| diagonalize(&hn(), Boundary::Obc));
        Spectra {
            hn: a.join().unwrap(),
            nnn: b.join().unwrap(),
            nnn_second_order: d.join().unwrap(),
            hn_obc: o.join().unwrap(),
        }
    })
}

fn check(ok: bool, msg: String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg) }
}

fn match_momenta(name: &str, bath: &BathSpec, want: &[C64], tol: f64) -> Result<(), String> {
    let got: Vec<C64> = bound_states(bath, &params()).iter().map(|b| b.k_tilde).collect();
    let mut missing = Vec::new();
    for w in want {
        if !got.iter().any(|g| (g.re - w.re).abs() <= tol && (g.im - w.im).abs() <= tol) {
            missing.push(*w);
        }
    }
    let fmt = |v: &[C64]| v.iter().map(|k| format!("{:.4}{:+.4}i", k.re, k.im)).collect::<Vec<_>>().join(", ");
    check(
        missing.is_empty() && got.len() == want.len(),
        format!("{name}: expected [{}] not matched; solver returned [{}]", fmt(&missing), fmt(&got)),
    )
}

fn criterion_1() -> Outcome {
    let tol = 5e-3;
    let hn_want = [c(0.0, 1.006), c(PI, 1.102), c(1.175, -0.168)];
    let nnn_want = [c(0.0, 0.064), c(1.729, 0.282), c(0.0, -0.229), c(2.087, -0.862)];
    let mut errs = Vec::new();
    if let Err(e) = match_momenta("HN", &hn(), &hn_want, tol) {
        errs.push(e);
    }
    if let Err(e) = match_momenta("NNN", &nnn(), &nnn_want, tol) {
        errs.push(e);
    }
    if errs.is_empty() {
        Ok("HN 3/3 and NNN 4/4 momenta within 5e-3".into())
    } else {
        Err(errs.join("; "))
    }
}

fn criterion_2(sp: &Spectra) -> Outcome {
    let mut notes = Vec::new();
    for (name, bath, ed, n) in [("HN", hn(), &sp.hn, 3), ("NNN", nnn(), &sp.nnn, 4)] {
        let bound: Vec<C64> = (0..ed.len()).filter(|&i| ed.classes[i] == StateClass::Bound).map(|i| ed.eigenvalues[i]).collect();
        check(bound.len() == n, format!("{name}: {} band-isolated eigenvalues, expected {n}", bound.len()))?;
        let mut worst: f64 = 0.0;
        for b in bound_states(&bath, &params()) {
            let d = bound.iter().map(|e| (e - b.energy).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        check(worst < 1e-6, format!("{name}: bound eigenvalue off E_b by {worst:.3e}"))?;
        notes.push(format!("{name} {n} isolated, max |E_ED - E_b| = {worst:.1e}"));
    }
    Ok(notes.join("; "))
}

// Terms from the other roots of E = h(y) are dropped by the closed forms; keep states where they are negligible.
fn is_generic(bath: &BathSpec, k: C64, energy: C64) -> bool {
    neglected_root_weight(bath, k, energy, L).is_ok_and(|w| w < 1e-6)
}

fn criterion_3(sp: &Spectra) -> Outcome {
    let p = params();
    let mut notes = Vec::new();
    for (name, bath, ed) in [("HN", hn(), &sp.hn), ("NNN", nnn(), &sp.nnn)] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        let mut skipped = 0;
        while checked < 20 {
            let m = rng.gen_range(1..=L);
            let s = match scattering_momentum(&bath, &p, L, m) {
                Ok(s) => s,
                Err(Error::FineTunedInput { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(format!("{name} m={m}: {e}")),
            };
            if !is_generic(&bath, s.k_tilde, s.energy) {
                skipped += 1;
                continue;
            }
            let branch = if rng.gen_bool(0.5) { Branch::Greater } else { Branch::Less };
            let wf = if name == "HN" {
                hn_closed_form(6.0, 2.0, &p, L, s.k_tilde, branch)
            } else {
                let region = Region::of(5.0, 12.0, s.k_tilde.re).ok_or("region undefined")?;
                nnn_closed_form(5.0, 12.0, &p, L, s.k_tilde, region, branch)
            }
            .map_err(|e| format!("{name} m={m}: {e}"))?;
            let (_, err) = match_state(ed, ed.nearest(s.energy), &wf).map_err(|e| e.to_string())?;
            check(err < 1e-4, format!("{name} m={m} ({branch}): relative L2 error {err:.3e}"))?;
            worst = worst.max(err);
            checked += 1;
        }
        notes.push(format!("{name} 20 states, max error {worst:.1e} ({skipped} non-generic draws skipped)"));
    }
    Ok(notes.join("; "))
}

fn correlation(f: &[f64], v: &[C64]) -> f64 {
    let ov: C64 = f.iter().zip(v).map(|(a, b)| a * b).sum();
    let nf: f64 = f.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    ov.norm() / (nf * nv)
}

fn criterion_4(sp: &Spectra) -> Outcome {
    let p = params();
    let b = nnn();
    let si = *b.self_intersections().first().ok_or("no self-intersection found")?;
    let pair = degenerate_momenta(&b, &p, L, &FineTunedTarget::SelfIntersection(si)).map_err(|e| e.to_string())?;
    let wf = degenerate_wavefunction(&b, &p, L, &pair).map_err(|e| e.to_string())?;
    let (_, err) = match_state(&sp.nnn, sp.nnn.nearest(pair.energy()), &wf).map_err(|e| e.to_string())?;
    check(err < 1e-3, format!("self-intersection state error {err:.3e}"))?;
    let mut notes = vec![format!("self-intersection E = {:.6}, error {err:.1e}", pair.energy().re)];

    let b2 = nnn_second_order();
    let (lo, hi) = window(L);
    for m in 1..=2 {
        let pair = degenerate_momenta(&b2, &p, L, &FineTunedTarget::SecondOrderPole { k_r: PI, mode: m })
            .map_err(|e| e.to_string())?;
        // profile on the ring coordinate x mod L in [0, L)
        let f: Vec<f64> = (lo..=hi)
            .map(|x| x.rem_euclid(L as i64) as f64)
            .map(|x| (PI * x).cos() * (m as f64 * PI * x / L as f64).sin())
            .collect();
        let ed_vec = &sp.nnn_second_order.vectors[sp.nnn_second_order.nearest(pair.energy())][1..];
        let wf = degenerate_wavefunction(&b2, &p, L, &pair).map_err(|e| e.to_string())?;
        let c_ed = correlation(&f, ed_vec);
        let c_wf = correlation(&f, &wf.amplitudes);
        check(c_ed > 0.99 && c_wf > 0.99, format!("m={m}: correlation ED {c_ed:.5}, constructed {c_wf:.5}"))?;
        notes.push(format!("m={m} correlation {:.5}", c_ed.min(c_wf)));
    }
    Ok(notes.join("; "))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn criterion_5() -> Outcome {
    let p = params();
    let sizes = [101usize, 201, 401, 801, 1601];
    let mut notes = Vec::new();
    for (name, bath, k) in [("HN", hn(), 1.0), ("NNN", nnn(), 2.5)] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &size in &sizes {
            let m = (k * size as f64 / (2.0 * PI)).round() as usize;
            let s = scattering_momentum(&bath, &p, size, m).map_err(|e| e.to_string())?;
            let lead = imk_leading(&bath, &p, size, s.k_base).map_err(|e| e.to_string())?;
            xs.push((size as f64).ln());
            ys.push((s.k_tilde.im - lead).abs().ln());
        }
        let sl = slope(&xs, &ys);
        check((-2.3..=-1.7).contains(&sl), format!("{name}: slope {sl:.3}"))?;
        notes.push(format!("{name} slope {sl:.3}"));
    }
    Ok(notes.join("; "))
}

fn random_bath(rng: &mut ChaCha8Rng) -> BathSpec {
    loop {
        let p = rng.gen_range(0..=2i64);
        let q = rng.gen_range(0..=2i64);
        if p + q == 0 {
            continue;
        }
        let hops: Vec<(i64, C64)> = (-p..=q)
            .map(|n| (n, c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))))
            .collect();
        if let Ok(b) = BathSpec::new(&hops) {
            return b;
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 4];

    let mut n = 0;
    while n < 50 {
        let b = random_bath(&mut rng);
        let size = rng.gen_range(b.left_range() + b.right_range() + 1..=200);
        let z = c(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
        let (lo, hi) = window(size);
        let x = rng.gen_range(lo..=hi);
        let (Ok(r), Ok(s)) = (sigma_finite_residue(&b, 1.3, size, z, x), sigma_finite_sum(&b, 1.3, size, z, x)) else {
            continue;
        };
        // relative to the magnitude of the summed terms
        let scale: f64 = 1.3 * 1.3 / size as f64 * b.finite_band(size).iter().map(|h| 1.0 / (z - h).norm()).sum::<f64>();
        worst[0] = worst[0].max((r.value - s.value).norm() / scale);
        n += 1;
    }
    check(worst[0] < 1e-10, format!("residue vs direct sum: {:.3e}", worst[0]))?;

    let baths = [hn(), nnn(), nnn_second_order()];
    let mut n = 0;
    while n < 100 {
        let b = &baths[n % 3];
        let k = rng.gen_range(-PI..PI);
        let x = rng.gen_range(-30..=30);
        let Ok(j) = branch_jump(b, 1.7, k, x) else { continue };
        worst[1] = worst[1].max(j.relative_error());
        n += 1;
    }
    check(worst[1] < 1e-10, format!("branch jump: {:.3e}", worst[1]))?;

    let mut n = 0;
    while n < 50 {
        let b = if n % 2 == 0 { random_bath(&mut rng) } else { baths[n % 3].clone() };
        let e = c(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
        let (Ok(r), Ok(roots)) = (sum_rule_residual(&b, e), b.symbol_roots(e)) else { continue };
        let scale: f64 = roots
            .roots
            .iter()
            .map(|y| 1.0 / (y.y * b.symbol_derivative(y.y)).norm())
            .sum::<f64>()
            .max(1.0 / (e - b.hopping(0)).norm());
        worst[2] = worst[2].max(r.norm() / scale);
        n += 1;
    }
    check(worst[2] < 1e-10, format!("sum rule: {:.3e}", worst[2]))?;

    let p = params();
    for (bath, m) in [(hn(), 37usize), (hn(), 512), (nnn(), 90), (nnn(), 700)] {
        let s = scattering_momentum(&bath, &p, L, m).map_err(|e| e.to_string())?;
        let g = ls_wavefunction(&bath, &p, L, s.k_tilde, Branch::Greater).map_err(|e| e.to_string())?;
        let l = ls_wavefunction(&bath, &p, L, s.k_tilde, Branch::Less).map_err(|e| e.to_string())?;
        let (pg, pl) = (g.profile().unwrap(), l.profile().unwrap());
        let d = pg.iter().zip(&pl).map(|(a, b)| (a - b).norm() / b.norm()).fold(0.0, f64::max);
        worst[3] = worst[3].max(d);
    }
    check(worst[3] < 1e-9, format!("branch equivalence: {:.3e}", worst[3]))?;
    Ok(format!(
        "residue {:.1e}, branch jump {:.1e}, sum rule {:.1e}, branch equivalence {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    for (name, bath) in [("HN", hn()), ("NNN", nnn())] {
        let z = bath.dispersion(1.0);
        let v: Vec<f64> = (1..=20)
            .map(|i| sigma_finite_residue(&bath, 20.0, 100 * i, z, 0).map(|s| s.value.norm()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / v.len() as f64).sqrt();
        let cv = sd / mean;
        check(cv > 0.1, format!("{name}: coefficient of variation {cv:.3}"))?;
        notes.push(format!("{name} CV {cv:.2}"));
    }
    Ok(notes.join("; "))
}

fn criterion_8(sp: &Spectra) -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for (bath, boundary, ed) in [
        (hn(), Boundary::Pbc, &sp.hn),
        (nnn(), Boundary::Pbc, &sp.nnn),
        (nnn_second_order(), Boundary::Pbc, &sp.nnn_second_order),
        (hn(), Boundary::Obc, &sp.hn_obc),
    ] {
        check(ed.len() == L + 1, format!("{} eigenvalues, expected {}", ed.len(), L + 1))?;
        worst_res = ed.residuals.iter().fold(worst_res, |a, &b| a.max(b));
        let tr = build_hamiltonian(&bath, &params(), L, boundary).unwrap().matrix.trace();
        let sum: C64 = ed.eigenvalues.iter().sum();
        worst_trace = worst_trace.max((sum - tr).norm() / tr.norm().max(1.0));
    }
    check(worst_res < 1e-8, format!("eigenpair residual {worst_res:.3e}"))?;
    check(worst_trace < 1e-8, format!("trace identity {worst_trace:.3e}"))?;
    let herm = BathSpec::hatano_nelson(6.0, 0.0);
    let ed = eigenpairs(&build_hamiltonian(&herm, &params(), 201, Boundary::Pbc).unwrap()).map_err(|e| e.to_string())?;
    let im = ed.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    check(im < 1e-10, format!("Hermitian spectrum has |Im E| up to {im:.3e}"))?;
    Ok(format!("max residual {worst_res:.1e}, trace {worst_trace:.1e}, Hermitian max |Im E| {im:.1e}"))
}

fn criterion_9(sp: &Spectra) -> Outcome {
    let ed = &sp.hn_obc;
    let conventional: Vec<usize> = bound_states(&hn(), &params())
        .iter()
        .filter(|b| b.kind == BoundKind::Conventional)
        .map(|b| ed.nearest(b.energy))
        .collect();
    let (lo, hi) = window(L);
    let mean_pos = |i: usize| {
        let v = &ed.vectors[i][1..];
        let w: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        (lo..=hi).zip(v).map(|(x, a)| x as f64 * a.norm_sqr()).sum::<f64>() / w
    };
    for &i in &conventional {
        let d = mean_abs_position(&ed.vectors[i], L);
        check(d < 10.0, format!("conventional bound state at E = {:.3} has mean |x| = {d:.2}", ed.eigenvalues[i]))?;
    }
    let scattering: Vec<usize> = (0..ed.len()).filter(|i| !conventional.contains(i)).collect();
    let far = scattering.iter().filter(|&&i| mean_pos(i).abs() > L as f64 / 4.0).count();
    let frac = far as f64 / scattering.len() as f64;
    check(frac > 0.8, format!("only {:.1}% of scattering states displaced past L/4", 100.0 * frac))?;
    Ok(format!("{:.1}% displaced, {} conventional bound states within 10 sites", 100.0 * frac, conventional.len()))
}

fn report(n: usize, outcome: std::thread::Result<Outcome>) -> bool {
    let outcome = outcome.unwrap_or_else(|e| {
        Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    match outcome {
        Ok(msg) => {
            println!("PASS criterion {n}: {msg}");
            true
        }
        Err(msg) => {
            println!("FAIL criterion {n}: {msg}");
            false
        }
    }
}

fn main() -> ExitCode {
    let sp = spectra();
    let results = [
        report(1, catch_unwind(criterion_1)),
        report(2, catch_unwind(AssertUnwindSafe(|| criterion_2(&sp)))),
        report(3, catch_unwind(AssertUnwindSafe(|| criterion_3(&sp)))),
        report(4, catch_unwind(AssertUnwindSafe(|| criterion_4(&sp)))),
        report(5, catch_unwind(criterion_5)),
        report(6, catch_unwind(criterion_6)),
        report(7, catch_unwind(criterion_7)),
        report(8, catch_unwind(AssertUnwindSafe(|| criterion_8(&sp)))),
        report(9, catch_unwind(AssertUnwindSafe(|| criterion_9(&sp)))),
    ];
    let failed = results.iter().filter(|r| !**r).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
