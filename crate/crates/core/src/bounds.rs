//! Network-wide Lipschitz certificates from per-layer energy bounds.
//!
//! Each layer `m` of an `M`-layer network carries a triple
//! `(b1, b2, b3)` of squared-norm bounds (see [`crate::spectral`]): `b1`
//! caps the combined hidden + feature output energy, `b2` the hidden
//! output alone, `b3` the feature output alone, each relative to the
//! layer's input energy. Chaining those caps yields a linear program over
//!
//! * `y_m` — the squared hidden-energy budget available after layer `m`
//!   (with `y_0 = 1` for a unit-energy input perturbation), and
//! * `z_m` — the squared feature energy emitted by layer `m`,
//!
//! subject to, for every layer,
//!
//! ```text
//! y_m + z_m <= b1_m * y_{m-1}
//! y_m       <= b2_m * y_{m-1}      (m < M; the last layer keeps no hidden state)
//! z_m       <= b3_m * y_{m-1}
//! ```
//!
//! The maximum of `Σ z_m` over that polytope bounds the squared Lipschitz
//! constant of the map from network input to the stacked feature vector;
//! its square root is the certified constant. Two closed-form relaxations
//! ([`corollary_product`], [`corollary_sumprod`]) are provided for
//! comparison — the program never exceeds either.
//!
//! The solver is a dense-tableau simplex specialised to this family:
//! every right-hand side is nonnegative, so the all-slack basis is
//! feasible and no phase-one is needed. Bland's rule keeps the highly
//! degenerate origin vertex (most right-hand sides are zero) from
//! cycling. The [`oracle`] module re-derives optima by brute force for
//! cross-checking the solver on small chains.

use crate::spectral::{layer_bounds, BesselTriple, LayerBound, SpectralOptions};
use crate::{Error, NetworkSpec, Result, Scalar};

/// Outcome of [`simplex_maximize`].
#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    /// Optimal point (structural variables only).
    pub x: Vec<T>,
    /// Objective value at `x`.
    pub value: T,
    /// Pivot count.
    pub iterations: usize,
}

/// Hard cap on simplex pivots; Bland's rule terminates long before this
/// on any sanely sized program, so hitting it signals corrupt input.
const MAX_PIVOTS: usize = 100_000;

/// Maximizes `c·x` subject to `A x <= b`, `x >= 0`.
///
/// Requires `b >= 0` componentwise so the slack basis is feasible from
/// the start. Entering and leaving variables follow Bland's smallest-
/// index rule, which guarantees termination even on degenerate programs.
///
/// # Errors
///
/// Fails on dimension mismatches, negative right-hand sides, an
/// unbounded objective, or pivot-count exhaustion.
pub fn simplex_maximize<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<SimplexResult<T>> {
    let rows = a.len();
    let n = c.len();
    if b.len() != rows {
        return Err(Error::Spec(format!(
            "constraint matrix has {rows} rows but {} right-hand sides",
            b.len()
        )));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Spec(format!(
                "constraint row {i} has {} coefficients, expected {n}",
                row.len()
            )));
        }
        if !(b[i] >= T::zero()) {
            return Err(Error::Numeric(format!(
                "slack-basis simplex requires nonnegative right-hand sides; row {i} has {}",
                b[i]
            )));
        }
    }

    let feas = T::c(1e-10);
    let opt = T::c(1e-9);
    let cols = n + rows + 1;
    let rhs = cols - 1;

    // Tableau: one row per constraint plus the reduced-cost row at the
    // bottom; one column per structural variable, per slack, plus the
    // right-hand side.
    let mut tab = vec![vec![T::zero(); cols]; rows + 1];
    for i in 0..rows {
        tab[i][..n].copy_from_slice(&a[i]);
        tab[i][n + i] = T::one();
        tab[i][rhs] = b[i];
    }
    for j in 0..n {
        tab[rows][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let mut iterations = 0;
    loop {
        // Bland: first column whose reduced cost is meaningfully negative.
        let Some(enter) = (0..n + rows).find(|&j| tab[rows][j] < -opt) else {
            break;
        };
        // Minimum-ratio test; ties resolved toward the smallest basic index.
        let mut leave: Option<(usize, T)> = None;
        for i in 0..rows {
            if tab[i][enter] > feas {
                let ratio = tab[i][rhs] / tab[i][enter];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr || (ratio == lr && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(Error::Numeric(
                "linear program is unbounded: no constraint limits the entering variable".into(),
            ));
        };

        let pivot = tab[pivot_row][enter];
        for v in tab[pivot_row].iter_mut() {
            *v /= pivot;
        }
        let pivot_vals = tab[pivot_row].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r == pivot_row {
                continue;
            }
            let factor = row[enter];
            if factor != T::zero() {
                for (v, &p) in row.iter_mut().zip(&pivot_vals) {
                    *v -= factor * p;
                }
            }
        }
        basis[pivot_row] = enter;

        iterations += 1;
        if iterations >= MAX_PIVOTS {
            return Err(Error::Numeric(format!(
                "simplex exceeded {MAX_PIVOTS} pivots without reaching optimality"
            )));
        }
    }

    let mut x = vec![T::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            // Degenerate pivots can leave a basic value a rounding error
            // below zero; the true variable is nonnegative.
            x[bv] = tab[i][rhs].max(T::zero());
        }
    }
    let value = x.iter().zip(c).fold(T::zero(), |acc, (&xi, &ci)| acc + xi * ci);
    Ok(SimplexResult { x, value, iterations })
}

/// Solution of the chain program for one network.
#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    /// Optimal objective: the certified **squared** Lipschitz constant.
    pub value: T,
    /// Hidden-energy budgets `y_1 .. y_{M-1}` at the optimum.
    pub y: Vec<T>,
    /// Feature energies `z_1 .. z_M` at the optimum.
    pub z: Vec<T>,
    /// Simplex pivot count.
    pub iterations: usize,
}

impl<T: Scalar> LpSolution<T> {
    /// The certified Lipschitz constant itself, `sqrt(value)`.
    pub fn constant(&self) -> T {
        self.value.sqrt()
    }
}

/// Builds the chain program's `(A, b, c)` for a list of layer triples.
///
/// Variable layout: `y_1..y_{M-1}` occupy columns `0..M-1`, `z_1..z_M`
/// occupy columns `M-1..2M-1`.
fn assemble_chain<T: Scalar>(triples: &[BesselTriple<T>]) -> (Vec<Vec<T>>, Vec<T>, Vec<T>) {
    let m_total = triples.len();
    let n = 2 * m_total - 1;
    let yi = |m: usize| m - 1;
    let zi = |m: usize| m_total - 1 + (m - 1);

    let mut a: Vec<Vec<T>> = Vec::with_capacity(3 * m_total - 1);
    let mut b: Vec<T> = Vec::with_capacity(3 * m_total - 1);
    // Layer 1 reads the fixed input budget y_0 = 1, so its bounds land on
    // the right-hand side; later layers couple to y_{m-1} on the left.
    let mut push = |coeffs: Vec<(usize, T)>, m: usize, bound: T| {
        let mut row = vec![T::zero(); n];
        for (j, v) in coeffs {
            row[j] = v;
        }
        if m > 1 {
            row[yi(m - 1)] = -bound;
            b.push(T::zero());
        } else {
            b.push(bound);
        }
        a.push(row);
    };

    for (idx, t) in triples.iter().enumerate() {
        let m = idx + 1;
        let mut joint = vec![(zi(m), T::one())];
        if m < m_total {
            joint.push((yi(m), T::one()));
        }
        push(joint, m, t.b1);
        if m < m_total {
            push(vec![(yi(m), T::one())], m, t.b2);
        }
        push(vec![(zi(m), T::one())], m, t.b3);
    }

    let c: Vec<T> =
        (0..n).map(|j| if j >= m_total - 1 { T::one() } else { T::zero() }).collect();
    (a, b, c)
}

fn check_triples<T: Scalar>(triples: &[BesselTriple<T>]) -> Result<()> {
    if triples.is_empty() {
        return Err(Error::Spec("at least one layer bound is required".into()));
    }
    for (i, t) in triples.iter().enumerate() {
        for (name, v) in [("joint", t.b1), ("hidden", t.b2), ("feature", t.b3)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Validation(format!(
                    "layer {i}: {name} bound must be finite and nonnegative, got {v}"
                )));
            }
        }
    }
    Ok(())
}

/// Solves the chain program for the given layer triples.
///
/// The returned [`LpSolution::value`] bounds the **squared** Lipschitz
/// constant of the input-to-features map; take [`LpSolution::constant`]
/// for the constant itself. For a single layer the program degenerates to
/// `min(b1, b3)`.
pub fn solve_lipschitz_lp<T: Scalar>(triples: &[BesselTriple<T>]) -> Result<LpSolution<T>> {
    check_triples(triples)?;
    let m_total = triples.len();
    let (a, b, c) = assemble_chain(triples);
    let res = simplex_maximize(&a, &b, &c)?;
    Ok(LpSolution {
        value: res.value,
        y: res.x[..m_total - 1].to_vec(),
        z: res.x[m_total - 1..].to_vec(),
        iterations: res.iterations,
    })
}

/// Product relaxation: `Π_m max(1, b1_m)`.
///
/// Follows from granting every layer its full joint budget and never
/// letting a contractive layer shrink it. Valid whenever both partial
/// bounds stay below the joint one (`max(b2, b3) <= b1`), which holds for
/// every triple the spectral stage produces.
pub fn corollary_product<T: Scalar>(triples: &[BesselTriple<T>]) -> T {
    triples.iter().fold(T::one(), |acc, t| acc * t.b1.max(T::one()))
}

/// Sum-of-products relaxation: `Σ_m b3_m · Π_{m'<m} b2_{m'}`.
///
/// Routes the full hidden budget through every prefix and cashes out the
/// feature bound at each layer independently.
pub fn corollary_sumprod<T: Scalar>(triples: &[BesselTriple<T>]) -> T {
    let mut total = T::zero();
    let mut hidden_prefix = T::one();
    for t in triples {
        total = total + t.b3 * hidden_prefix;
        hidden_prefix = hidden_prefix * t.b2;
    }
    total
}

/// A full certificate: per-layer bounds plus the chain-program solution.
#[derive(Debug, Clone)]
pub struct Certificate<T> {
    /// Per-layer triples and the method that produced each.
    pub layers: Vec<LayerBound<T>>,
    /// Chain-program optimum over those triples.
    pub solution: LpSolution<T>,
}

impl<T: Scalar> Certificate<T> {
    /// Certified squared Lipschitz constant.
    pub fn squared(&self) -> T {
        self.solution.value
    }

    /// Certified Lipschitz constant of the input-to-features map.
    pub fn constant(&self) -> T {
        self.solution.constant()
    }

    /// The layer triples alone, in layer order.
    pub fn triples(&self) -> Vec<BesselTriple<T>> {
        self.layers.iter().map(|l| l.triple).collect()
    }
}

/// End-to-end certification: spectral layer bounds, then the chain
/// program over them.
pub fn certify<T: Scalar>(net: &NetworkSpec<T>, opts: &SpectralOptions) -> Result<Certificate<T>> {
    let layers = layer_bounds(net, opts)?;
    let triples: Vec<BesselTriple<T>> = layers.iter().map(|l| l.triple).collect();
    let solution = solve_lipschitz_lp(&triples)?;
    Ok(Certificate { layers, solution })
}

/// Brute-force re-derivations of the chain optimum, used to cross-check
/// the simplex. Both are exponential or near-exponential in chain length
/// and meant for short chains only.
pub mod oracle {
    use super::{assemble_chain, check_triples, BesselTriple};

    /// Chain optimum by enumerating every basic point of the feasible
    /// polytope: all `n`-subsets of the constraint rows (inequalities
    /// plus nonnegativity bounds) are solved as square systems and the
    /// feasible ones scored. Intended for chains of length at most ~4.
    pub fn vertex_enumeration_optimum(triples: &[BesselTriple<f64>]) -> Option<f64> {
        check_triples(triples).ok()?;
        let (mut rows, mut rhs, c) = assemble_chain(triples);
        let n = c.len();
        for j in 0..n {
            let mut bound = vec![0.0; n];
            bound[j] = -1.0;
            rows.push(bound);
            rhs.push(0.0);
        }

        let scale: f64 = 1.0
            + triples
                .iter()
                .map(|t| t.b1.abs().max(t.b2.abs()).max(t.b3.abs()))
                .fold(0.0, f64::max);
        let feas_tol = 1e-9 * scale;

        let mut best: Option<f64> = None;
        let mut combo: Vec<usize> = (0..n).collect();
        loop {
            if let Some(x) = solve_square(&rows, &rhs, &combo) {
                let feasible = rows
                    .iter()
                    .zip(&rhs)
                    .all(|(row, &b)| dot(row, &x) <= b + feas_tol);
                if feasible {
                    let v = dot(&c, &x);
                    best = Some(best.map_or(v, |cur| cur.max(v)));
                }
            }
            if !next_combination(&mut combo, rows.len()) {
                break;
            }
        }
        best
    }

    /// Chain optimum by backward recursion. The program is positively
    /// homogeneous in the incoming budget, so the best value reachable
    /// from layer `m` with unit budget satisfies
    /// `V_m = max { w + u · V_{m+1} }` over the layer's own polygon
    /// `{0 <= u <= b2, 0 <= w <= b3, u + w <= b1}`, a maximum attained at
    /// one of the polygon's handful of vertices; the last layer yields
    /// `V_M = min(b1, b3)`.
    pub fn chain_recursion_optimum(triples: &[BesselTriple<f64>]) -> f64 {
        let last = triples.last().expect("at least one layer bound is required");
        let mut v = last.b1.min(last.b3);
        for t in triples[..triples.len() - 1].iter().rev() {
            let mut best = 0.0f64;
            for (u, w) in layer_polygon_vertices(t.b1, t.b2, t.b3) {
                best = best.max(w + v * u);
            }
            v = best;
        }
        v
    }

    /// Vertices of `{0 <= u <= b2, 0 <= w <= b3, u + w <= b1}` (some
    /// candidates may coincide; infeasible ones are filtered out).
    fn layer_polygon_vertices(b1: f64, b2: f64, b3: f64) -> Vec<(f64, f64)> {
        let candidates = [
            (0.0, 0.0),
            (b2, 0.0),
            (b1, 0.0),
            (0.0, b3),
            (0.0, b1),
            (b2, b3),
            (b2, b1 - b2),
            (b1 - b3, b3),
        ];
        let eps = 1e-12 * (1.0 + b1 + b2 + b3);
        candidates
            .into_iter()
            .filter(|&(u, w)| {
                u >= -eps && w >= -eps && u <= b2 + eps && w <= b3 + eps && u + w <= b1 + eps
            })
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Solves the square subsystem `rows[combo] x = rhs[combo]` by
    /// Gaussian elimination with partial pivoting; `None` when singular.
    fn solve_square(rows: &[Vec<f64>], rhs: &[f64], combo: &[usize]) -> Option<Vec<f64>> {
        let n = combo.len();
        let mut m: Vec<Vec<f64>> = combo
            .iter()
            .map(|&i| {
                let mut row = rows[i].clone();
                row.push(rhs[i]);
                row
            })
            .collect();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
            if m[pivot_row][col].abs() < 1e-10 {
                return None;
            }
            m.swap(col, pivot_row);
            for r in col + 1..n {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
        let mut x = vec![0.0; n];
        for col in (0..n).rev() {
            let mut acc = m[col][n];
            for k in col + 1..n {
                acc -= m[col][k] * x[k];
            }
            x[col] = acc / m[col][col];
        }
        Some(x)
    }

    /// Advances `combo` to the next lexicographic `k`-combination of
    /// `0..n`; `false` once exhausted.
    fn next_combination(combo: &mut [usize], n: usize) -> bool {
        let k = combo.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if combo[i] != i + n - k {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn t64(b1: f64, b2: f64, b3: f64) -> BesselTriple<f64> {
        BesselTriple { b1, b2, b3 }
    }

    #[test]
    fn simplex_solves_a_textbook_program() {
        // max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6).
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let b = vec![4.0, 12.0, 18.0];
        let c = vec![3.0, 5.0];
        let res = simplex_maximize(&a, &b, &c).unwrap();
        assert_abs_diff_eq!(res.value, 36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.x[1], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_works_in_single_precision() {
        let a = vec![vec![1.0f32, 0.0], vec![0.0, 1.0]];
        let b = vec![1.0f32, 2.0];
        let c = vec![1.0f32, 1.0];
        let res = simplex_maximize(&a, &b, &c).unwrap();
        assert_abs_diff_eq!(res.value, 3.0f32, epsilon = 1e-5);
    }

    #[test]
    fn simplex_rejects_unbounded_and_negative_rhs() {
        // max x with no constraint on x.
        let err = simplex_maximize::<f64>(&[], &[], &[1.0]).unwrap_err();
        assert_eq!(err.kind(), "numeric");
        let err =
            simplex_maximize(&[vec![1.0]], &[-1.0], &[1.0]).unwrap_err();
        assert_eq!(err.kind(), "numeric");
    }

    #[test]
    fn single_layer_takes_the_smaller_of_joint_and_feature() {
        let sol = solve_lipschitz_lp(&[t64(2.0, 0.7, 1.25)]).unwrap();
        assert_abs_diff_eq!(sol.value, 1.25, epsilon = 1e-12);
        assert!(sol.y.is_empty());
        let sol = solve_lipschitz_lp(&[t64(0.5, 0.5, 3.0)]).unwrap();
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_layer_optimum_matches_hand_computation() {
        // Layer 2 cashes out min(2.0, 1.5) per unit budget; layer 1 should
        // then push the joint bound into hidden energy: u = 1, w = 0.5.
        let sol = solve_lipschitz_lp(&[t64(1.5, 1.0, 1.0), t64(2.0, 0.5, 1.5)]).unwrap();
        assert_abs_diff_eq!(sol.value, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.y[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.z[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.z[1], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn unit_triples_certify_unit_constant() {
        for m in 1..=10 {
            let triples = vec![t64(1.0, 1.0, 1.0); m];
            let sol = solve_lipschitz_lp(&triples).unwrap();
            assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_hidden_budget_cuts_off_later_layers() {
        let triples = vec![t64(1.0, 0.0, 1.0); 3];
        let sol = solve_lipschitz_lp(&triples).unwrap();
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-12);
        let all_zero = vec![t64(0.0, 0.0, 0.0); 4];
        let sol = solve_lipschitz_lp(&all_zero).unwrap();
        assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_empty_and_invalid_triples() {
        assert!(solve_lipschitz_lp::<f64>(&[]).is_err());
        assert!(solve_lipschitz_lp(&[t64(1.0, -0.1, 1.0)]).is_err());
        assert!(solve_lipschitz_lp(&[t64(f64::NAN, 1.0, 1.0)]).is_err());
        assert!(solve_lipschitz_lp(&[t64(f64::INFINITY, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn corollaries_match_hand_values() {
        let triples =
            vec![t64(1.5, 1.0, 1.0), t64(0.5, 0.25, 0.25), t64(3.0, 2.0, 1.0)];
        // Product: max(1,1.5) * max(1,0.5) * max(1,3) = 4.5.
        assert_abs_diff_eq!(corollary_product(&triples), 4.5, epsilon = 1e-12);
        // Sum-of-products: 1 + 0.25*1 + 1*(1*0.25) = 1.5.
        assert_abs_diff_eq!(corollary_sumprod(&triples), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn oracles_agree_on_fixed_chains() {
        let chains: Vec<Vec<BesselTriple<f64>>> = vec![
            vec![t64(2.0, 0.7, 1.25)],
            vec![t64(1.5, 1.0, 1.0), t64(2.0, 0.5, 1.5)],
            vec![t64(1.0, 1.0, 1.0); 4],
            vec![t64(2.5, 1.5, 1.0), t64(0.8, 0.3, 0.5), t64(1.9, 1.9, 0.0), t64(1.0, 0.0, 1.0)],
        ];
        for triples in chains {
            let lp = solve_lipschitz_lp(&triples).unwrap().value;
            let dp = oracle::chain_recursion_optimum(&triples);
            let ve = oracle::vertex_enumeration_optimum(&triples).unwrap();
            assert_abs_diff_eq!(lp, dp, epsilon = 1e-10);
            assert_abs_diff_eq!(lp, ve, epsilon = 1e-10);
        }
    }

    /// Random triples with the joint bound sampled inside its natural
    /// envelope `[max(b2, b3), b2 + b3]`, as the spectral stage produces.
    fn triple_strategy() -> impl Strategy<Value = BesselTriple<f64>> {
        (0.0f64..2.5, 0.0f64..2.5, 0.0f64..=1.0).prop_map(|(b2, b3, frac)| {
            let lo = b2.max(b3);
            let b1 = lo + frac * (b2 + b3 - lo);
            BesselTriple { b1, b2, b3 }
        })
    }

    fn chain_strategy(max_len: usize) -> impl Strategy<Value = Vec<BesselTriple<f64>>> {
        prop::collection::vec(triple_strategy(), 1..=max_len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn lp_matches_both_oracles(triples in chain_strategy(4)) {
            let lp = solve_lipschitz_lp(&triples).unwrap().value;
            let dp = oracle::chain_recursion_optimum(&triples);
            prop_assert!((lp - dp).abs() <= 1e-8, "lp {lp} vs recursion {dp}");
            let ve = oracle::vertex_enumeration_optimum(&triples).unwrap();
            prop_assert!((lp - ve).abs() <= 1e-8, "lp {lp} vs vertices {ve}");
        }

        #[test]
        fn lp_never_exceeds_either_corollary(triples in chain_strategy(6)) {
            let lp = solve_lipschitz_lp(&triples).unwrap().value;
            prop_assert!(lp <= corollary_product(&triples) + 1e-9);
            prop_assert!(lp <= corollary_sumprod(&triples) + 1e-9);
        }

        #[test]
        fn lp_is_monotone_in_the_bounds(
            triples in chain_strategy(5),
            scale in 1.0f64..1.5,
        ) {
            let lp = solve_lipschitz_lp(&triples).unwrap().value;
            let bigger: Vec<_> = triples
                .iter()
                .map(|t| BesselTriple { b1: t.b1 * scale, b2: t.b2 * scale, b3: t.b3 * scale })
                .collect();
            let lp_big = solve_lipschitz_lp(&bigger).unwrap().value;
            prop_assert!(lp_big >= lp - 1e-9);
        }
    }
}
