use super::*;
use crate::mlf::ml;
use crate::multiplier::{evolve_hom, GridSpec, MultiplierSymbol, StateField, Transform};
use num_complex::Complex64;

fn line(n: usize) -> GridSpec {
    GridSpec::line(n, 10.0).unwrap()
}

fn gaussian(grid: GridSpec) -> StateField {
    StateField::from_fn(grid, 0.0, |x| (-x[0] * x[0]).exp())
}

#[test]
fn composition_with_unit_is_identity() {
    let g = line(16);
    let p_sym = SymbolField::poly_sg();
    let one = SymbolField::polynomial("one", vec![vec![1.0]], (1.0, 1.0)).unwrap();
    let pg = PhaseGrid::new(g, &p_sym).unwrap();
    let c = compose_expand(&pg.tabulate(&p_sym, 2, 2), &pg.tabulate(&one, 2, 2), 2).unwrap();
    for (v, a) in c.iter().zip(pg.symbol()) {
        assert_eq!(*v, Complex64::new(*a, 0.0));
    }
}

#[test]
fn composition_of_xi_and_x() {
    let g = line(16);
    let xi = SymbolField::polynomial("xi", vec![vec![0.0, 1.0]], (1.0, 1.0)).unwrap();
    let x = SymbolField::polynomial("x", vec![vec![0.0], vec![1.0]], (1.0, 1.0)).unwrap();
    let pg = PhaseGrid::new(g, &xi).unwrap();
    let c = compose_expand(&pg.tabulate(&xi, 1, 1), &pg.tabulate(&x, 1, 1), 1).unwrap();
    for (i, ci) in c.iter().enumerate() {
        let (xv, kv) = pg.point(i);
        assert!((ci - Complex64::new(xv * kv, -1.0)).norm() < 1e-14);
    }
    let short = pg.tabulate(&x, 0, 0);
    assert!(matches!(
        compose_expand(&pg.tabulate(&xi, 1, 1), &short, 1),
        Err(SgError::InsufficientDerivOrder { .. })
    ));
}

#[test]
fn composition_order_two_is_exact_for_quadratic_symbols() {
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(line(8), &a).unwrap();
    let t = pg.tabulate(&a, 3, 3);
    assert_eq!(
        compose_expand(&t, &t, 2).unwrap(),
        compose_expand(&t, &t, 3).unwrap()
    );
}

#[test]
fn quantize_identity_and_derivative() {
    let g = line(64);
    let u = gaussian(g);
    let pg = PhaseGrid::new(g, &SymbolField::poly_sg()).unwrap();
    let ones = vec![Complex64::new(1.0, 0.0); pg.len()];
    assert!(quantize(&pg, &ones, &u).unwrap().rel_l2_diff(&u).unwrap() < 1e-12);

    let xi: Vec<Complex64> = (0..pg.len())
        .map(|i| Complex64::new(pg.point(i).1, 0.0))
        .collect();
    let d = quantize(&pg, &xi, &u).unwrap();
    let tr = Transform::new(g);
    let mut spec = tr.forward(&u.values).unwrap();
    spec.iter_mut()
        .enumerate()
        .for_each(|(k, v)| *v *= g.freq(k));
    let reference = StateField {
        grid: g,
        time: 0.0,
        values: tr.inverse(&spec).unwrap(),
    };
    assert!(d.rel_l2_diff(&reference).unwrap() < 1e-12);
    assert!(quantize(&pg, &ones[..10], &u).is_err());
}

#[test]
fn operator_product_matches_composed_symbol() {
    // Op(ξ)∘Op(x) = Op(xξ − i)
    let g = line(128);
    let u = gaussian(g);
    let xi = SymbolField::polynomial("xi", vec![vec![0.0, 1.0]], (1.0, 1.0)).unwrap();
    let x = SymbolField::polynomial("x", vec![vec![0.0], vec![1.0]], (1.0, 1.0)).unwrap();
    let pg = PhaseGrid::new(g, &xi).unwrap();
    let sym = |s: &SymbolField| real_symbol(pg.tabulate(s, 0, 0).get(0, 0).unwrap());
    let lhs = quantize(&pg, &sym(&xi), &quantize(&pg, &sym(&x), &u).unwrap()).unwrap();
    let composed = compose_expand(&pg.tabulate(&xi, 1, 1), &pg.tabulate(&x, 1, 1), 1).unwrap();
    let rhs = quantize(&pg, &composed, &u).unwrap();
    assert!(lhs.rel_l2_diff(&rhs).unwrap() < 1e-10);
}

#[test]
fn corrector_numerators_match_symbolic_expansion() {
    let a = SymbolField::poly_sg();
    // A_2 = −i a_ξ a_x − ½ a_ξξ a_xx by hand; A_3 and A_4 from a computer-algebra expansion
    let cases = [
        (
            (1.0, 1.0),
            [(-8.0, -16.0), (176.0, -128.0), (3104.0, 3520.0)],
        ),
        (
            (0.5, -2.0),
            [(-12.5, 25.0), (387.5, 200.0), (6368.75, -9100.0)],
        ),
    ];
    for ((x, xi), want) in cases {
        let got = corrector_numerators_at(&a, x, xi, 3).unwrap();
        assert_eq!(got.len(), 5);
        assert_eq!(got[0], Complex64::new(1.0, 0.0));
        assert!(got[1].norm() <= 1e-12);
        for (j, (re, im)) in want.iter().enumerate() {
            let w = Complex64::new(*re, *im);
            assert!(
                (got[j + 2] - w).norm() <= 1e-12 * w.norm(),
                "A_{}({x},{xi}) = {} vs {w}",
                j + 2,
                got[j + 2]
            );
        }
    }
}

#[test]
fn sampled_symbol_reproduces_leading_corrector() {
    let exact = SymbolField::poly_sg();
    let fd =
        SymbolField::sampled("fd", |x, xi| (1.0 + x * x) * (1.0 + xi * xi), (2.0, 2.0)).unwrap();
    let e = corrector_numerators_at(&exact, 0.3, 0.8, 1).unwrap();
    let d = corrector_numerators_at(&fd, 0.3, 0.8, 1).unwrap();
    assert!((e[2] - d[2]).norm() < 1e-4 * e[2].norm());
    assert!(matches!(
        corrector_numerators_at(&fd, 0.3, 0.8, 3),
        Err(SgError::InsufficientDerivOrder { .. })
    ));
}

#[test]
fn corrector_count_is_capped() {
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(line(8), &a).unwrap();
    assert!(matches!(
        kernel_expansion(&a, &pg, 0.5, 4),
        Err(SgError::TruncationUnsupported { .. })
    ));
}

#[test]
fn x_independent_symbol_collapses() {
    let g = line(64);
    let a = SymbolField::multiplier_xi2();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let exp = kernel_expansion(&a, &pg, 0.5, 3).unwrap();
    for j in 1..exp.term_count() {
        assert!(exp.max_abs(j) <= 1e-12);
    }
    let par = parametrix_terms(&a, &pg, 0.5, 3, 50.0).unwrap();
    for (c, av) in par.values.iter().zip(pg.symbol()) {
        assert_eq!(*c, Complex64::new(1.0 / (50f64.sqrt() + av), 0.0));
    }
    let u0 = gaussian(g);
    let res = parametrix_residual(&a, &pg, 0.5, 2, 50.0, &u0).unwrap();
    assert!(res <= 1e-10, "{res}");

    let u = solve_var_hom(&a, &u0, 0.5, 1.0, 3).unwrap();
    let v = evolve_hom(&u0, &MultiplierSymbol::laplacian(1.0), 0.5, 1.0).unwrap();
    assert!(u.rel_l2_diff(&v).unwrap() <= 1e-10);

    let k0 = assemble_k0(&exp, &pg, 1.0).unwrap();
    for (k, av) in k0.iter().zip(pg.symbol()) {
        assert!((k - ml(0.5, 1.0, -av, 0).unwrap()).norm() < 1e-15);
    }
}

#[test]
fn a1_vanishes_and_numerators_do_not_depend_on_s() {
    let g = line(32);
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let p1 = parametrix_terms(&a, &pg, 0.5, 3, 100.0).unwrap();
    let p2 = parametrix_terms(&a, &pg, 0.5, 3, 1000.0).unwrap();
    assert!(p1.expansion.max_abs(1) <= 1e-12);
    assert!(p1
        .expansion
        .terms
        .iter()
        .flatten()
        .all(|v| v.re.is_finite()));
    for j in 0..p1.expansion.term_count() {
        for (u, v) in p1.expansion.term(j).iter().zip(p2.expansion.term(j)) {
            assert!((u - v).norm() <= 1e-8 * v.norm().max(1e-300));
        }
    }
    assert!(matches!(
        parametrix_terms(&a, &pg, 0.5, 1, 5.0),
        Err(SgError::InadmissibleS { .. })
    ));
}

#[test]
fn zeroth_parametrix_is_the_reciprocal() {
    let g = line(32);
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let par = parametrix_terms(&a, &pg, 0.5, 0, 10.0).unwrap();
    for (c, av) in par.values.iter().zip(pg.symbol()) {
        assert!((c - 1.0 / (10f64.sqrt() + av)).norm() <= 1e-15 * c.norm());
    }
    assert!(parametrix_residual(&a, &pg, 0.5, 0, 10.0, &gaussian(g)).unwrap() > 1e-3);
}

#[test]
fn residual_hierarchy_at_large_laplace_variable() {
    // s^r = 1000
    let g = GridSpec::line(128, 10.0).unwrap();
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let phi = gaussian(g);
    let s = 1000f64.powf(2.0);
    let res: Vec<f64> = (0..=3)
        .map(|j| parametrix_residual(&a, &pg, 0.5, j, s, &phi).unwrap())
        .collect();
    for w in res.windows(2) {
        assert!(w[1] <= 0.5 * w[0], "{res:?}");
    }
}

#[test]
fn residual_does_not_grow_with_s() {
    let g = GridSpec::line(128, 10.0).unwrap();
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let phi = gaussian(g);
    let lambda = check_hypotheses(&a, &pg).admissible_s(0.5);
    let res: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|m| parametrix_residual(&a, &pg, 0.5, 1, m * lambda, &phi).unwrap())
        .collect();
    assert!(res[1] <= res[0] && res[2] <= res[1], "{res:?}");
}

#[test]
fn kernel_at_zero_time_is_one() {
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(line(16), &a).unwrap();
    let exp = kernel_expansion(&a, &pg, 0.4, 2).unwrap();
    assert!(assemble_k0(&exp, &pg, 0.0)
        .unwrap()
        .iter()
        .all(|k| *k == Complex64::new(1.0, 0.0)));
    assert!(assemble_k1(&exp, &pg, 0.0).is_err());
}

#[test]
fn second_kernel_term_is_built_from_its_factors() {
    // x = 1 is a node for L = 4, n = 8
    let g = GridSpec::line(8, 4.0).unwrap();
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(g, &a).unwrap();
    let i = (0..pg.len()).find(|&i| pg.point(i).0 == 1.0).unwrap();
    let (x, xi) = pg.point(i);
    let r = 0.5;
    let exp = kernel_expansion(&a, &pg, r, 1).unwrap();
    let k_lo = assemble_k0(
        &KernelExpansion {
            terms: exp.terms[..2].to_vec(),
            ..exp.clone()
        },
        &pg,
        1.0,
    )
    .unwrap();
    let k_all = assemble_k0(&exp, &pg, 1.0).unwrap();
    let av = (1.0 + x * x) * (1.0 + xi * xi);
    let a2 = corrector_numerators_at(&a, x, xi, 1).unwrap()[2];
    let expected = a2 * 0.5 * ml(r, 1.0, -av, 2).unwrap();
    assert!((k_all[i] - k_lo[i] - expected).norm() <= 1e-13 * expected.norm());
}

#[test]
fn kernel_stays_bounded_against_its_decay_weight() {
    let a = SymbolField::poly_sg();
    let pg = PhaseGrid::new(GridSpec::line(16, 10.0).unwrap(), &a).unwrap();
    let r = 0.5;
    let exp = kernel_expansion(&a, &pg, r, 3).unwrap();
    let weighted: Vec<f64> = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&t| {
            let k = assemble_k0(&exp, &pg, t).unwrap();
            k.iter()
                .zip(pg.symbol())
                .map(|(kv, av)| kv.norm() * (1.0 + t.powf(r) * av))
                .fold(0.0, f64::max)
        })
        .collect();
    let bound = weighted.iter().copied().fold(0.0, f64::max);
    assert!(bound.is_finite() && bound < 1e3, "{weighted:?}");
}

#[test]
fn variable_solution_returns_to_initial_data() {
    let g = GridSpec::line(64, 10.0).unwrap();
    let a = SymbolField::poly_sg();
    let u0 = gaussian(g);
    let errs: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&t| {
            solve_var_hom(&a, &u0, 0.5, t, 3)
                .unwrap()
                .rel_l2_diff(&u0)
                .unwrap()
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn reference_evolution_matches_multiplier_path_for_x_independent_symbols() {
    let g = GridSpec::line(32, 10.0).unwrap();
    let u0 = gaussian(g);
    let a = SymbolField::multiplier_xi2();
    let reference = reference_evolution(&a, &u0, 0.5, 1.0, 512).unwrap();
    let stepped = crate::multiplier::evolve_hom_stepped(
        &u0,
        &MultiplierSymbol::laplacian(1.0),
        0.5,
        1.0,
        512,
    )
    .unwrap();
    assert!(reference.rel_l2_diff(&stepped).unwrap() < 1e-10);
}
