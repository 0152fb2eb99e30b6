use super::{AssembledOperator, Grid, OperatorKind, OperatorMatrix};
use crate::witten::{WittenContext, EXP_CLAMP};
use crate::{Error, Result};

/// How the potential term of `H = -Δ + V` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PotentialStencil {
    /// `V_i = Σ_axes [e^{-β(U_{i+1}-U_i)/2} + e^{-β(U_{i-1}-U_i)/2} - 2] / h²`,
    /// a second-order approximation of `V` for which `H = A^*A` exactly and
    /// the sampled ground state is annihilated by every interior row.
    #[default]
    GroundStateExact,
    /// `V` evaluated pointwise from the analytic derivatives of `U`.
    Analytic,
}

/// `H = -Δ_h + diag(V)` with Dirichlet boundary, ground-state-exact potential.
pub fn assemble_schrodinger(ctx: &WittenContext, grid: &Grid) -> Result<AssembledOperator> {
    assemble_schrodinger_with(ctx, grid, PotentialStencil::GroundStateExact)
}

pub fn assemble_schrodinger_with(
    ctx: &WittenContext,
    grid: &Grid,
    stencil: PotentialStencil,
) -> Result<AssembledOperator> {
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let n = grid.n();
    let energies = ctx.node_energies(grid)?;
    let potential: Vec<f64> = match stencil {
        PotentialStencil::Analytic => (0..grid.len())
            .map(|k| ctx.effective_potential(&grid.coordinate(k)))
            .collect::<Result<_>>()?,
        PotentialStencil::GroundStateExact => exact_potential(ctx, grid, inv_h2)?,
    };
    let kinetic = 2.0 * grid.dim() as f64 * inv_h2;
    let diag: Vec<f64> = potential.iter().map(|v| kinetic + v).collect();
    let matrix = match grid.dim() {
        1 => OperatorMatrix::Tridiagonal {
            lower: vec![-inv_h2; n - 1],
            diag,
            upper: vec![-inv_h2; n - 1],
        },
        _ => OperatorMatrix::Stencil2d {
            n,
            diag,
            coupling: -inv_h2,
        },
    };
    let weights = energies.iter().map(|u| (-0.5 * ctx.beta * u).exp()).collect();
    Ok(AssembledOperator {
        kind: OperatorKind::Schrodinger,
        beta: ctx.beta,
        grid: *grid,
        matrix,
        energies,
        weights,
    })
}

fn exact_potential(ctx: &WittenContext, grid: &Grid, inv_h2: f64) -> Result<Vec<f64>> {
    let full = ctx.full_energies(grid)?;
    let n = grid.n();
    let m = n + 2;
    let half_beta = 0.5 * ctx.beta;
    let term = |u_nb: f64, u: f64| (-half_beta * (u_nb - u)).min(EXP_CLAMP).exp_m1();
    Ok(match grid.dim() {
        1 => (1..=n)
            .map(|i| (term(full[i + 1], full[i]) + term(full[i - 1], full[i])) * inv_h2)
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for i in 1..=n {
                for j in 1..=n {
                    let u = full[i * m + j];
                    let s = term(full[(i + 1) * m + j], u)
                        + term(full[(i - 1) * m + j], u)
                        + term(full[i * m + j + 1], u)
                        + term(full[i * m + j - 1], u);
                    out.push(s * inv_h2);
                }
            }
            out
        }
    })
}

/// Conservative finite-volume Fokker–Planck generator in one dimension,
/// `(Lf)_i = J_{i+1/2} - J_{i-1/2}` with the midpoint flux
/// `J_{j+1/2} = g_{j+1/2} (r_{j+1} - r_j) / h²`, `r = f e^{βU}` and
/// `g_{j+1/2} = e^{-β(U_j+U_{j+1})/2}`. Only exponentials of energy
/// differences are formed, so nothing overflows where `e^{βU}` would.
pub fn assemble_fokker_planck(ctx: &WittenContext, grid: &Grid) -> Result<AssembledOperator> {
    if grid.dim() != 1 {
        return Err(Error::Config("the Fokker-Planck assembly is one-dimensional".into()));
    }
    let n = grid.n();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let full = ctx.full_energies(grid)?;
    // Flux through midpoint j (between full nodes j, j+1) is
    // (s_j f_{j+1} - f_j / s_j) / h², s_j = e^{β(U_{j+1} - U_j)/2}.
    let (s, inv_s): (Vec<f64>, Vec<f64>) = full
        .windows(2)
        .map(|w| {
            let z = (0.5 * ctx.beta * (w[1] - w[0])).clamp(-EXP_CLAMP, EXP_CLAMP);
            (z.exp(), (-z).exp())
        })
        .unzip();
    let mut lower = Vec::with_capacity(n - 1);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n - 1);
    for i in 1..=n {
        // outgoing flux to the right and incoming flux from the left
        diag.push(-(inv_s[i] + s[i - 1]) * inv_h2);
        if i < n {
            upper.push(s[i] * inv_h2);
            lower.push(inv_s[i] * inv_h2);
        }
    }
    let energies = full[1..=n].to_vec();
    let weights = energies.iter().map(|u| (-0.5 * ctx.beta * u).exp()).collect();
    Ok(AssembledOperator {
        kind: OperatorKind::FokkerPlanck,
        beta: ctx.beta,
        grid: *grid,
        matrix: OperatorMatrix::Tridiagonal { lower, diag, upper },
        energies,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_operator::build_grid;
    use crate::potential::PotentialSpec;
    use crate::spectrum::lowest_eigenpairs;

    fn quartic(beta: f64) -> WittenContext {
        WittenContext::new(PotentialSpec::quartic_double_well(1.0, 1.0).unwrap(), beta).unwrap()
    }

    fn tridiag(op: &AssembledOperator) -> (&[f64], &[f64], &[f64]) {
        match &op.matrix {
            OperatorMatrix::Tridiagonal { lower, diag, upper } => (lower, diag, upper),
            _ => panic!("expected tridiagonal"),
        }
    }

    #[test]
    fn schrodinger_is_exactly_symmetric() {
        let grid = build_grid(-3.0, 3.0, 199, 1).unwrap();
        for stencil in [PotentialStencil::GroundStateExact, PotentialStencil::Analytic] {
            let op = assemble_schrodinger_with(&quartic(4.0), &grid, stencil).unwrap();
            let (l, _, u) = tridiag(&op);
            assert_eq!(l, u);
        }
        let g2 = build_grid(-3.0, 3.0, 20, 2).unwrap();
        let op2 = assemble_schrodinger(&quartic(1.0).clone_with_dim(2), &g2).unwrap();
        let mut max_asym = 0.0f64;
        let trips = op2.triplets();
        let lookup: std::collections::HashMap<(usize, usize), f64> =
            trips.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        for (&(r, c), v) in &lookup {
            max_asym = max_asym.max((v - lookup[&(c, r)]).abs());
        }
        assert_eq!(max_asym, 0.0);
    }

    #[test]
    fn free_laplacian_lowest_mode() {
        // U ≡ 0: the Dirichlet Laplacian on [0, L] has lowest eigenvalue (π/L)².
        let spec = PotentialSpec::tabulated(vec![-1.0, 0.0, 1.0, 2.0], vec![0.0; 4]).unwrap();
        let ctx = WittenContext::new(spec, 3.0).unwrap();
        let grid = build_grid(0.0, 1.0, 999, 1).unwrap();
        let op = assemble_schrodinger(&ctx, &grid).unwrap();
        let res = lowest_eigenpairs(&op, 2).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((res.eigenvalues[0] - pi2).abs() / pi2 < 1e-6);
        assert!((res.eigenvalues[1] - 4.0 * pi2).abs() / (4.0 * pi2) < 1e-5);
    }

    #[test]
    fn exact_potential_is_second_order_accurate() {
        let ctx = quartic(8.0);
        let mut errs = Vec::new();
        for n in [399, 799, 1599] {
            let grid = build_grid(-2.0, 2.0, n, 1).unwrap();
            let a = assemble_schrodinger_with(&ctx, &grid, PotentialStencil::Analytic).unwrap();
            let e = assemble_schrodinger(&ctx, &grid).unwrap();
            let (_, da, _) = tridiag(&a);
            let (_, de, _) = tridiag(&e);
            let m = da.iter().zip(de).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            errs.push(m);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn fokker_planck_annihilates_gibbs_vector() {
        let ctx = quartic(6.0);
        let grid = build_grid(-2.5, 2.5, 499, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let umin = op.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let gibbs: Vec<f64> = op.energies.iter().map(|u| (-ctx.beta * (u - umin)).exp()).collect();
        let mut out = vec![0.0; gibbs.len()];
        op.apply(&gibbs, &mut out);
        let (_, d, _) = tridiag(&op);
        // Compare against the size of the individual terms in each row.
        for i in 1..gibbs.len() - 1 {
            let scale = d[i].abs() * gibbs[i];
            assert!(
                out[i].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE),
                "row {i}: {}",
                out[i]
            );
        }
    }

    #[test]
    fn fokker_planck_columns_conserve_mass() {
        let ctx = quartic(6.0);
        let grid = build_grid(-2.5, 2.5, 499, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let (l, d, u) = tridiag(&op);
        for j in 1..d.len() - 1 {
            let sum = u[j - 1] + d[j] + l[j];
            assert!(sum.abs() <= 1e-12 * d[j].abs(), "column {j}: {sum}");
        }
    }

    #[test]
    fn fokker_planck_similarity_matches_schrodinger() {
        let ctx = quartic(6.0);
        let grid = build_grid(-3.0, 3.0, 599, 1).unwrap();
        let fp = assemble_fokker_planck(&ctx, &grid).unwrap();
        let h = assemble_schrodinger(&ctx, &grid).unwrap();
        let (sd, so) = fp.symmetric_tridiagonal().unwrap();
        let (hd, ho) = h.symmetric_tridiagonal().unwrap();
        for (a, b) in sd.iter().zip(&hd) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in so.iter().zip(&ho) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        let a = lowest_eigenpairs(&fp, 2).unwrap();
        let b = lowest_eigenpairs(&h, 2).unwrap();
        assert!(((a.eigenvalues[1] - b.eigenvalues[1]) / b.eigenvalues[1]).abs() < 1e-6);
    }

    #[test]
    fn fokker_planck_rejects_2d() {
        let grid = build_grid(-1.0, 1.0, 20, 2).unwrap();
        assert!(assemble_fokker_planck(&quartic(1.0), &grid).is_err());
    }

    #[test]
    fn dump_lists_triplets() {
        let grid = build_grid(-1.0, 1.0, 16, 1).unwrap();
        let op = assemble_schrodinger(&quartic(1.0), &grid).unwrap();
        let text = op.dump();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 16 * 3 - 2);
        let first: Vec<&str> = rows[0].split_whitespace().collect();
        assert_eq!(first[..2], ["0", "0"]);
        assert!(text.contains("# kind schrodinger"));
    }

    impl WittenContext {
        fn clone_with_dim(&self, d: usize) -> WittenContext {
            WittenContext::new(self.spec.clone().with_dim(d).unwrap(), self.beta).unwrap()
        }
    }
}
