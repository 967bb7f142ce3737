use std::f64::consts::PI;

use nhscatter::bath::BathSpec;
use nhscatter::error::Error;
use nhscatter::oracle::{build_hamiltonian, eigen_residual, eigenpairs, match_state, Boundary};
use nhscatter::selfenergy::{window, Branch};
use nhscatter::solver::{
    bound_states, degenerate_momenta, scattering_momentum, EmitterParams, FineTunedTarget,
};
use nhscatter::wavefn::{
    formal_wavefunction, hn_closed_form, ls_wavefunction, nnn_closed_form, normalize, plane_wave_superposition,
    Region,
};
use nhscatter::C64;

fn params() -> EmitterParams {
    EmitterParams::new(20.0, 2.14).unwrap()
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

#[test]
fn every_eigenvalue_is_accounted_for() {
    let p = params();
    let size = 201;
    for bath in [BathSpec::hatano_nelson(6.0, 2.0), BathSpec::nnn(5.0, 12.0)] {
        let ed = eigenpairs(&build_hamiltonian(&bath, &p, size, Boundary::Pbc).unwrap()).unwrap();
        let scale = bath.scale();
        // bound energies carry a finite-size shift of order exp(-|Im k| L)
        let mut predicted: Vec<(C64, f64)> = bound_states(&bath, &p)
            .iter()
            .map(|b| (b.energy, 1e-6 + 10.0 * scale * (-b.k_tilde.im.abs() * size as f64).exp()))
            .collect();
        for m in 1..=size {
            match scattering_momentum(&bath, &p, size, m) {
                Ok(s) => predicted.push((s.energy, 1e-6)),
                Err(Error::FineTunedInput { .. }) => {}
                Err(e) => panic!("m = {m}: {e}"),
            }
        }
        for si in bath.self_intersections() {
            let pair = degenerate_momenta(&bath, &p, size, &FineTunedTarget::SelfIntersection(si)).unwrap();
            predicted.push((pair.energy(), 1e-6));
        }
        for e in &ed.eigenvalues {
            let hit = predicted.iter().any(|(q, tol)| (q - e).norm() < *tol);
            let d = predicted.iter().map(|(q, _)| (q - e).norm()).fold(f64::INFINITY, f64::min);
            assert!(hit, "eigenvalue {e} unmatched (nearest prediction {d:.3e})");
        }
    }
}

#[test]
fn formal_state_matches_ed_and_solves_eigenproblem() {
    let p = params();
    let size = 401;
    let bath = BathSpec::hatano_nelson(6.0, 2.0);
    let h = build_hamiltonian(&bath, &p, size, Boundary::Pbc).unwrap();
    let ed = eigenpairs(&h).unwrap();
    for m in [17usize, 140, 333] {
        let s = scattering_momentum(&bath, &p, size, m).unwrap();
        let wf = normalize(&formal_wavefunction(&bath, &p, size, s.energy, C64::new(1.0, 0.0)).unwrap()).unwrap();
        let (_, err) = match_state(&ed, ed.nearest(s.energy), &wf).unwrap();
        assert!(err < 1e-6, "m = {m}: {err:.3e}");
        assert!(eigen_residual(&h, &wf).unwrap() < 1e-6);
        let closed = hn_closed_form(6.0, 2.0, &p, size, s.k_tilde, Branch::Greater).unwrap();
        assert!(eigen_residual(&h, &normalize(&closed).unwrap()).unwrap() < 1e-4);
    }
}

#[test]
fn bound_state_profile_decays_at_im_k() {
    let p = params();
    let size = 201;
    let bath = BathSpec::hatano_nelson(6.0, 2.0);
    for b in bound_states(&bath, &p) {
        let wf = formal_wavefunction(&bath, &p, size, b.energy, C64::new(1.0, 0.0)).unwrap();
        // tails on each side decay with the root of E = h(y) that governs that side
        let roots = bath.symbol_roots(b.energy).unwrap();
        let inner = roots.roots.iter().filter(|r| r.y.norm() < 1.0).map(|r| -r.y.norm().ln()).fold(f64::INFINITY, f64::min);
        let outer = roots.roots.iter().filter(|r| r.y.norm() > 1.0).map(|r| r.y.norm().ln()).fold(f64::INFINITY, f64::min);
        // windowed weights average out the beating between roots of equal modulus
        let rate = |sign: i64| {
            let w = |a: i64| (a..a + 10).map(|x| wf.at(sign * x).norm_sqr()).sum::<f64>();
            (w(2) / w(22)).ln() / 40.0
        };
        if inner.is_finite() {
            let r = rate(1);
            assert!((r - inner).abs() < 0.05 * inner, "E = {}: {r} vs {inner}", b.energy);
        }
        if outer.is_finite() {
            let r = rate(-1);
            assert!((r - outer).abs() < 0.05 * outer, "E = {}: {r} vs {outer}", b.energy);
        }
        let im = b.k_tilde.im.abs();
        assert!((im - inner).abs() < 1e-9 || (im - outer).abs() < 1e-9);
    }
}

#[test]
fn hn_amplitude_is_inhomogeneous() {
    let p = params();
    let bath = BathSpec::hatano_nelson(6.0, 2.0);
    for m in [5usize, 60, 120, 190] {
        let s = scattering_momentum(&bath, &p, 201, m).unwrap();
        let wf = hn_closed_form(6.0, 2.0, &p, 201, s.k_tilde, Branch::Greater).unwrap();
        let (lo, hi) = wf.amplitudes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v.norm()), b.max(v.norm())));
        assert!(hi / lo > 1.0 + 1e-3);
    }
}

#[test]
fn decay_length_scales_with_system_size() {
    let p = params();
    let bath = BathSpec::hatano_nelson(6.0, 2.0);
    let sizes = [201usize, 401, 801];
    let mut lengths = Vec::new();
    for &size in &sizes {
        let m = (1.0 * size as f64 / (2.0 * PI)).round() as usize;
        let s = scattering_momentum(&bath, &p, size, m).unwrap();
        let wf = hn_closed_form(6.0, 2.0, &p, size, s.k_tilde, Branch::Greater).unwrap();
        let (_, hi) = window(size);
        let xs: Vec<f64> = (0..=hi).map(|x| x as f64).collect();
        let ys: Vec<f64> = (0..=hi).map(|x| wf.at(x).norm().ln()).collect();
        let (rate, _) = fit(&xs, &ys);
        lengths.push(1.0 / rate.abs());
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| l as f64).collect();
    let (_, r2) = fit(&xs, &lengths);
    assert!(r2 > 0.99, "lengths {lengths:?}, R^2 = {r2}");
}

#[test]
fn nnn_evanescent_factor_is_the_off_circle_root() {
    let p = params();
    let k = C64::new(0.6, 0.001);
    let wf = nnn_closed_form(5.0, 12.0, &p, 101, k, Region::K1, Branch::Less).unwrap();
    let bath = BathSpec::nnn(5.0, 12.0);
    let y0 = (C64::i() * k).exp();
    let y = bath
        .symbol_roots(bath.dispersion_complex(k))
        .unwrap()
        .roots
        .iter()
        .map(|r| r.y)
        .find(|y| (y - y0).norm() > 1e-6)
        .unwrap();
    let plane = |x: i64| (C64::i() * k * x as f64).exp();
    let tail = |x: i64| wf.at(x) - plane(x);
    for x in 0..10 {
        assert!((tail(x + 1) / tail(x) - y).norm() < 1e-10);
    }
}

#[test]
fn degenerate_superpositions_are_eigenstates() {
    let bath = BathSpec::hatano_nelson(1.0, 0.0);
    let p = EmitterParams::new(0.8, 0.3).unwrap();
    let size = 40;
    let h = build_hamiltonian(&bath, &p, size, Boundary::Pbc).unwrap();
    let e = bath.dispersion(2.0 * PI * 7.0 / size as f64);
    for wf in plane_wave_superposition(&bath, size, e).unwrap() {
        assert!(eigen_residual(&h, &wf).unwrap() < 1e-10);
    }
}

#[test]
fn ls_state_is_branch_independent_after_normalization() {
    let p = params();
    for (bath, m) in [(BathSpec::hatano_nelson(6.0, 2.0), 44usize), (BathSpec::nnn(5.0, 12.0), 30)] {
        let s = scattering_momentum(&bath, &p, 201, m).unwrap();
        let g = normalize(&ls_wavefunction(&bath, &p, 201, s.k_tilde, Branch::Greater).unwrap()).unwrap();
        let l = normalize(&ls_wavefunction(&bath, &p, 201, s.k_tilde, Branch::Less).unwrap()).unwrap();
        let phase = l.c_e / g.c_e;
        for (a, b) in g.amplitudes.iter().zip(&l.amplitudes) {
            assert!((a * phase - b).norm() < 1e-9 * b.norm().max(1e-3));
        }
    }
}
