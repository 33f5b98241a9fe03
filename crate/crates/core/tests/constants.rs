//! Bound constants against values frozen from an independent 40-digit
//! evaluation (tests/oracles/constants.py).

#![allow(clippy::excessive_precision, clippy::approx_constant)]

use certirelu::bounds::{derived_constants, sphere_area, GradNorm, SmoothnessCertificate};

fn close(got: f64, want: f64) {
    let rel = ((got - want) / want).abs();
    assert!(rel < 5e-13, "got {got}, want {want}, rel {rel:e}");
}

fn scalar_cert() -> SmoothnessCertificate {
    SmoothnessCertificate { n: 1, k: 4, rho: 2.0, radius: 1.0, p_min: 0.25 }
}

#[test]
fn sphere_areas() {
    let want = [
        2.0,
        6.2831853071795864769,
        12.566370614359172954,
        19.739208802178717238,
        26.318945069571622984,
        31.006276680299820175,
        33.073361792319808187,
    ];
    for (i, w) in want.iter().enumerate() {
        close(sphere_area(i + 1).unwrap(), *w);
    }
}

#[test]
fn scalar_certificate_constants() {
    let r = derived_constants(&scalar_cert()).unwrap();
    close(r.sphere_area, 2.0);
    close(r.beta, 1379.8403282543112868);
    close(r.lipschitz, 732.18564658459233524);
    close(r.kappa1, 5519.3613130172451474);
    close(r.kappa2, 1951.3889061265904014);
    close(r.zeta0, 10106.474906715503226);
    close(r.zeta1, 893.29461755377658037);
    close(r.a_cap, 50.265482457436691815);
    close(r.b_cap, 58.265482457436691815);
    close(r.c_cap(100), 6.3165468166971895161);
}

#[test]
fn scalar_certificate_bounds() {
    let r = derived_constants(&scalar_cert()).unwrap();
    let table = [
        (16, 3881.729455705551352, 4639.3756825099308048, 3346.0914937545104687),
        (100, 1581.2156657060343854, 2325.7700550218639633, 1670.7907726584782572),
        (512, 709.57431788587306364, 1184.0792511910182557, 848.85950409182668386),
        (4096, 255.52315010706249404, 479.59649288150659711, 343.2232753610347858),
    ];
    for (m, f, g2, ginf) in table {
        close(r.rhs_function(m, 0.1).unwrap(), f);
        close(r.rhs_grad(m, 0.1, GradNorm::Two).unwrap(), g2);
        close(r.rhs_grad(m, 0.1, GradNorm::Inf).unwrap(), ginf);
        close(r.rhs_policy_eval(m, 0.1).unwrap(), f.max(g2));
    }
}

#[test]
fn three_dimensional_certificate() {
    let cert = SmoothnessCertificate { n: 3, k: 6, rho: 0.75, radius: 1.5, p_min: 0.01 };
    let r = derived_constants(&cert).unwrap();
    close(r.sphere_area, 12.566370614359172954);
    close(r.beta, 18158.292792243139943);
    close(r.lipschitz, 6158.6331462797597782);
    close(r.kappa1, 72633.171168972559772);
    close(r.kappa2, 44478.551941053285676);
    close(r.zeta0, 189496.40450091568548);
    close(r.zeta1, 14505.29684747765734);
    close(r.a_cap, 118.43525281307230343);
    close(r.b_cap, 196.50243514114721457);
    close(r.rhs_function(1000, 0.05).unwrap(), 9668.8570505178382816);
    close(r.rhs_grad(1000, 0.05, GradNorm::Two).unwrap(), 16754.382580953468739);
    close(r.rhs_grad(1000, 0.05, GradNorm::Inf).unwrap(), 8411.2366453962518876);
}
