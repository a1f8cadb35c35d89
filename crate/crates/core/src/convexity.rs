//! Convex-hull membership of behaviors, with certificates either way.
//!
//! For a target `P` and a finite set `{P_i}` one linear program,
//!
//! `min Σ_j (s⁺_j + s⁻_j)  s.t.  Σ_i λ_i P_i + s⁺ − s⁻ = P,  Σ_i λ_i = 1,  λ, s ≥ 0`,
//!
//! measures the ℓ1 distance from `P` to the hull. Its dual is
//!
//! `max c·P − α  s.t.  c·P_i ≤ α ∀i,  ‖c‖_∞ ≤ 1`,
//!
//! so a zero optimum yields the weights `λ` and a positive optimum yields a
//! separating functional `(c, α)` whose margin equals the distance.
//! Decompositions are then pruned to affinely independent components.

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::correlations::{product_behavior, Alphabet, Behavior, CorrelationError};
use crate::hypothesis::{exact_acceptance, HypothesisError, HypothesisTest};
use crate::lp::{solve, LpError, LpOutcome, StandardForm};
use crate::scalar::Scalar;

/// Largest residual accepted as membership.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest primal/dual objective mismatch accepted from the solver.
pub const DUALITY_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexityError {
    #[error("the behavior set is empty")]
    EmptySet,
    #[error("behavior {index} has alphabet {found:?}, expected {expected:?}")]
    AlphabetMismatch {
        index: usize,
        expected: Alphabet,
        found: Alphabet,
    },
    #[error("target lies in the convex hull (residual {residual:e}); no separating functional exists")]
    NotSeparable { residual: f64 },
    #[error("LP solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDecomposition {
    /// Positive weights summing to 1.
    pub weights: Vec<f64>,
    /// Positions of the components in the input set.
    pub indices: Vec<usize>,
    #[serde(skip)]
    pub components: Vec<Behavior>,
    /// `‖Σ λ_i P_i − P‖_∞`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatingFunctional {
    /// Coefficients `c(a, x)` at `x·A + a`, with `‖c‖_∞ = 1`.
    pub coeffs: Vec<f64>,
    /// `max_i c·P_i`.
    pub alpha: f64,
    /// `c·P − α > 0`.
    pub margin: f64,
}

impl SeparatingFunctional {
    pub fn evaluate(&self, p: &Behavior) -> f64 {
        dot(&self.coeffs, p.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Membership {
    Decomposition(ConvexDecomposition),
    Separation(SeparatingFunctional),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Decomposition(_))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_set(p: &Behavior, set: &[Behavior]) -> Result<(), ConvexityError> {
    if set.is_empty() {
        return Err(ConvexityError::EmptySet);
    }
    for (index, q) in set.iter().enumerate() {
        if q.alphabet() != p.alphabet() {
            return Err(ConvexityError::AlphabetMismatch {
                index,
                expected: p.alphabet(),
                found: q.alphabet(),
            });
        }
    }
    Ok(())
}

fn lift<S: Scalar>(v: f64) -> Result<S, ConvexityError> {
    S::from_f64(v).ok_or(ConvexityError::Lp(LpError::NonFinite))
}

/// Columns: `λ` (m), `s⁺` (d), `s⁻` (d). Rows: one per cell, then `Σλ = 1`.
fn membership_lp<S: Scalar>(p: &Behavior, set: &[Behavior]) -> Result<StandardForm<S>, ConvexityError> {
    let d = p.as_slice().len();
    let m = set.len();
    let cols = m + 2 * d;
    let mut a = Vec::with_capacity(d + 1);
    let mut b = Vec::with_capacity(d + 1);
    for j in 0..d {
        let mut row = vec![S::zero(); cols];
        for (i, q) in set.iter().enumerate() {
            row[i] = lift(q.as_slice()[j])?;
        }
        row[m + j] = S::one();
        row[m + d + j] = -S::one();
        a.push(row);
        b.push(lift(p.as_slice()[j])?);
    }
    let mut sum = vec![S::zero(); cols];
    sum[..m].iter_mut().for_each(|v| *v = S::one());
    a.push(sum);
    b.push(S::one());
    let mut c = vec![S::zero(); cols];
    c[m..].iter_mut().for_each(|v| *v = S::one());
    Ok(StandardForm { a, b, c })
}

/// Vector `μ ≠ 0` with `Σ_k μ_k v_k = 0`, if the columns are dependent.
fn null_vector(columns: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = columns.len();
    let rows = columns.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<f64>> = (0..rows).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..k {
        if r == rows {
            break;
        }
        let best = (r..rows).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[best][col].abs() < 1e-12 {
            continue;
        }
        m.swap(r, best);
        let pv = m[r][col];
        m[r].iter_mut().for_each(|v| *v /= pv);
        for i in 0..rows {
            if i != r && m[i][col] != 0.0 {
                let f = m[i][col];
                for j in 0..k {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free = (0..k).find(|c| !pivot_cols.contains(c))?;
    let mut mu = vec![0.0; k];
    mu[free] = 1.0;
    for (row, &pc) in pivot_cols.iter().enumerate() {
        mu[pc] = -m[row][free];
    }
    Some(mu)
}

/// Carathéodory pruning: while the lifted components `(P_i, 1)` are
/// linearly dependent, shift weight along a null direction until one
/// weight vanishes.
fn caratheodory(mut weights: Vec<f64>, mut indices: Vec<usize>, set: &[Behavior]) -> (Vec<f64>, Vec<usize>) {
    loop {
        let columns: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| {
                let mut v = set[i].as_slice().to_vec();
                v.push(1.0);
                v
            })
            .collect();
        let Some(mu) = null_vector(&columns) else { break };
        // Σμ = 0 and μ ≠ 0, so some entry is positive.
        let (pos, t) = mu
            .iter()
            .zip(&weights)
            .enumerate()
            .filter(|(_, (m, _))| **m > 1e-12)
            .map(|(k, (m, w))| (k, w / m))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("null vectors of lifted points have a positive entry");
        for (w, m) in weights.iter_mut().zip(&mu) {
            *w = (*w - t * m).max(0.0);
        }
        weights[pos] = 0.0;
        let keep: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
        weights = keep.iter().map(|&k| weights[k]).collect();
        indices = keep.iter().map(|&k| indices[k]).collect();
    }
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    (weights, indices)
}

fn decomposition(p: &Behavior, set: &[Behavior], lambda: &[f64]) -> ConvexDecomposition {
    let support: Vec<usize> = (0..set.len()).filter(|&i| lambda[i] > 0.0).collect();
    let weights: Vec<f64> = support.iter().map(|&i| lambda[i]).collect();
    let (weights, indices) = caratheodory(weights, support, set);
    let mut mix = vec![0.0; p.as_slice().len()];
    for (&w, &i) in weights.iter().zip(&indices) {
        for (m, q) in mix.iter_mut().zip(set[i].as_slice()) {
            *m += w * q;
        }
    }
    let residual = mix
        .iter()
        .zip(p.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ConvexDecomposition {
        components: indices.iter().map(|&i| set[i].clone()).collect(),
        weights,
        indices,
        residual,
    }
}

fn normalized_functional(coeffs: Vec<f64>, p: &Behavior, set: &[Behavior]) -> Option<SeparatingFunctional> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale <= 0.0 {
        return None;
    }
    let coeffs: Vec<f64> = coeffs.iter().map(|c| c / scale).collect();
    let alpha = set
        .iter()
        .map(|q| dot(&coeffs, q.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = dot(&coeffs, p.as_slice()) - alpha;
    Some(SeparatingFunctional { coeffs, alpha, margin })
}

/// Explicit margin LP over `c = u − v`, `α = α⁺ − α⁻`, used when the dual
/// read from the membership LP fails its consistency check.
fn separation_lp(p: &Behavior, set: &[Behavior]) -> Result<Option<SeparatingFunctional>, ConvexityError> {
    let d = p.as_slice().len();
    let m = set.len();
    // columns: u (d), v (d), α⁺, α⁻, slack per point (m), slack per bound (2d)
    let cols = 2 * d + 2 + m + 2 * d;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, q) in set.iter().enumerate() {
        let mut row = vec![0.0; cols];
        for j in 0..d {
            row[j] = q.as_slice()[j];
            row[d + j] = -q.as_slice()[j];
        }
        row[2 * d] = -1.0;
        row[2 * d + 1] = 1.0;
        row[2 * d + 2 + i] = 1.0;
        a.push(row);
        b.push(0.0);
    }
    for j in 0..2 * d {
        let mut row = vec![0.0; cols];
        row[j] = 1.0;
        row[2 * d + 2 + m + j] = 1.0;
        a.push(row);
        b.push(1.0);
    }
    let mut c = vec![0.0; cols];
    for j in 0..d {
        c[j] = -p.as_slice()[j];
        c[d + j] = p.as_slice()[j];
    }
    c[2 * d] = 1.0;
    c[2 * d + 1] = -1.0;
    match solve(&StandardForm { a, b, c })? {
        LpOutcome::Optimal(sol) => {
            let coeffs: Vec<f64> = (0..d).map(|j| sol.x[j] - sol.x[d + j]).collect();
            Ok(normalized_functional(coeffs, p, set).filter(|f| f.margin > FEASIBILITY_TOL))
        }
        other => Err(ConvexityError::Solver(format!("separation LP returned {other:?}"))),
    }
}

/// Decides `P ∈ conv(set)`: a pruned decomposition when it is, a separating
/// functional otherwise.
pub fn membership(p: &Behavior, set: &[Behavior]) -> Result<Membership, ConvexityError> {
    check_set(p, set)?;
    let lp = membership_lp::<f64>(p, set)?;
    let sol = match solve(&lp)? {
        LpOutcome::Optimal(sol) => sol,
        other => return Err(ConvexityError::Solver(format!("membership LP returned {other:?}"))),
    };
    let m = set.len();
    let d = p.as_slice().len();
    if sol.value <= FEASIBILITY_TOL {
        let lambda: Vec<f64> = sol.x[..m].iter().map(|&v| v.max(0.0)).collect();
        let dec = decomposition(p, set, &lambda);
        if dec.residual <= FEASIBILITY_TOL {
            return Ok(Membership::Decomposition(dec));
        }
    }
    let dual_value = dot(&sol.duals[..d], p.as_slice()) + sol.duals[d];
    let from_dual = normalized_functional(sol.duals[..d].to_vec(), p, set)
        .filter(|f| (dual_value - sol.value).abs() <= DUALITY_GAP_TOL && f.margin > FEASIBILITY_TOL);
    match from_dual {
        Some(f) => Ok(Membership::Separation(f)),
        None => match separation_lp(p, set)? {
            Some(f) => Ok(Membership::Separation(f)),
            None => Err(ConvexityError::Solver(format!(
                "membership residual {:e} but no separating functional found",
                sol.value
            ))),
        },
    }
}

/// Exact membership over the rationals represented by the inputs: the
/// weights of a decomposition, or `None` if `P` lies outside the hull.
pub fn membership_exact(p: &Behavior, set: &[Behavior]) -> Result<Option<Vec<BigRational>>, ConvexityError> {
    check_set(p, set)?;
    let lp = membership_lp::<BigRational>(p, set)?;
    match solve(&lp)? {
        LpOutcome::Optimal(sol) if Scalar::is_negligible(&sol.value) => Ok(Some(sol.x[..set.len()].to_vec())),
        LpOutcome::Optimal(_) => Ok(None),
        other => Err(ConvexityError::Solver(format!("membership LP returned {other:?}"))),
    }
}

/// Margin-maximizing functional separating `P` from `set` under
/// `‖c‖_∞ ≤ 1`.
pub fn separating_functional(p: &Behavior, set: &[Behavior]) -> Result<SeparatingFunctional, ConvexityError> {
    match membership(p, set)? {
        Membership::Separation(f) => Ok(f),
        Membership::Decomposition(d) => Err(ConvexityError::NotSeparable { residual: d.residual }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremality {
    pub extreme: bool,
    /// Membership of `P` in the hull of the rest of the set; `None` when
    /// nothing else is left.
    pub certificate: Option<Membership>,
}

/// Whether `P` is outside the hull of `set ∖ {P}`.
pub fn is_extreme(p: &Behavior, set: &[Behavior]) -> Result<Extremality, ConvexityError> {
    let rest: Vec<Behavior> = set.iter().filter(|q| q.as_slice() != p.as_slice()).cloned().collect();
    if rest.is_empty() {
        return Ok(Extremality {
            extreme: true,
            certificate: None,
        });
    }
    let cert = membership(p, &rest)?;
    Ok(Extremality {
        extreme: !cert.is_member(),
        certificate: Some(cert),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Row {
    pub n: usize,
    /// `P_T(1|P^{⊗n})`.
    pub target_acceptance: f64,
    /// `max` over component tuples of `P_T(1|P_{i_1}⊗…⊗P_{i_n})`.
    pub max_tuple_acceptance: f64,
    /// Positions in the decomposition of a maximizing tuple.
    pub argmax_tuple: Vec<usize>,
    /// `|P_T(1|P^{⊗n}) − Σ λ_{i_1}…λ_{i_n} P_T(1|P_{i_1}⊗…⊗P_{i_n})|`.
    pub linearity_error: f64,
    pub bound_holds: bool,
}

/// Tabulates, for `n = 1..=n_max`, the acceptance of `P^{⊗n}` against the
/// acceptance of every product of decomposition components.
pub fn prop1_demo(
    family: &dyn Fn(usize) -> Box<dyn HypothesisTest>,
    p: &Behavior,
    decomposition: &ConvexDecomposition,
    n_max: usize,
) -> Result<Vec<Prop1Row>, ConvexityError> {
    let k = decomposition.components.len();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let test = family(n);
        let target = product_behavior(vec![p.clone(); n])?;
        let target_acceptance = exact_acceptance(test.as_ref(), &target)?;
        let mut max_tuple_acceptance = f64::NEG_INFINITY;
        let mut argmax_tuple = Vec::new();
        let mut combination = 0.0;
        for code in 0..k.pow(n as u32) {
            let mut tuple = vec![0; n];
            let mut c = code;
            for slot in tuple.iter_mut().rev() {
                *slot = c % k;
                c /= k;
            }
            let prod = product_behavior(tuple.iter().map(|&i| decomposition.components[i].clone()).collect())?;
            let v = exact_acceptance(test.as_ref(), &prod)?;
            combination += tuple.iter().map(|&i| decomposition.weights[i]).product::<f64>() * v;
            if v > max_tuple_acceptance {
                max_tuple_acceptance = v;
                argmax_tuple = tuple;
            }
        }
        rows.push(Prop1Row {
            n,
            target_acceptance,
            max_tuple_acceptance,
            argmax_tuple,
            linearity_error: (target_acceptance - combination).abs(),
            bound_holds: target_acceptance <= max_tuple_acceptance + 1e-12,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::constant_test;
    use crate::rng::rng_from_seed;
    use crate::scalar::ratio;
    use proptest::prelude::*;
    use rand::Rng;

    fn bit(p: &[f64]) -> Behavior {
        Behavior::new(Alphabet::no_input(2).unwrap(), p.to_vec()).unwrap()
    }

    fn eight(idx: &[(usize, f64)]) -> Behavior {
        let mut v = vec![0.0; 8];
        for &(i, w) in idx {
            v[i] = w;
        }
        Behavior::new(Alphabet::no_input(8).unwrap(), v).unwrap()
    }

    #[test]
    fn midpoint_decomposes_evenly() {
        match membership(&bit(&[0.5, 0.5]), &[bit(&[1.0, 0.0]), bit(&[0.0, 1.0])]).unwrap() {
            Membership::Decomposition(d) => {
                assert_eq!(d.weights, vec![0.5, 0.5]);
                assert_eq!(d.residual, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ghz_point_is_mixture_of_agreeing_points() {
        let pc = eight(&[(0, 0.5), (7, 0.5)]);
        let set = [eight(&[(0, 1.0)]), eight(&[(7, 1.0)])];
        let Membership::Decomposition(d) = membership(&pc, &set).unwrap() else { panic!() };
        assert_eq!(d.indices, vec![0, 1]);
        assert!((d.weights[0] - 0.5).abs() < 1e-12);
        let exact = membership_exact(&pc, &set).unwrap().unwrap();
        assert_eq!(exact, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn non_member_gets_dual_certificate() {
        let p = bit(&[1.0, 0.0]);
        let set = [bit(&[0.0, 1.0]), bit(&[0.5, 0.5])];
        let Membership::Separation(f) = membership(&p, &set).unwrap() else { panic!() };
        // ℓ1 distance to the nearest hull point (1/2, 1/2)
        assert!((f.margin - 1.0).abs() < 1e-9, "{f:?}");
        assert!((f.coeffs[0] - 1.0).abs() < 1e-9 && (f.coeffs[1] + 1.0).abs() < 1e-9);
        assert!(f.alpha.abs() < 1e-9);
        assert!(membership_exact(&p, &set).unwrap().is_none());
    }

    #[test]
    fn separation_of_opposite_vertices() {
        let f = separating_functional(&bit(&[1.0, 0.0]), &[bit(&[0.0, 1.0])]).unwrap();
        assert!((f.margin - 2.0).abs() < 1e-9);
        assert!((f.coeffs[0] - 1.0).abs() < 1e-9 && (f.coeffs[1] + 1.0).abs() < 1e-9);

        let v: Vec<Behavior> = (0..4).map(|a| Behavior::deterministic(Alphabet::no_input(4).unwrap(), a)).collect();
        assert!(separating_functional(&v[0], &v[1..]).unwrap().margin > 0.0);

        let err = separating_functional(&bit(&[0.5, 0.5]), &[bit(&[1.0, 0.0]), bit(&[0.0, 1.0])]);
        assert!(matches!(err, Err(ConvexityError::NotSeparable { .. })));
    }

    #[test]
    fn set_validation() {
        assert!(matches!(membership(&bit(&[0.5, 0.5]), &[]), Err(ConvexityError::EmptySet)));
        let three = Behavior::uniform(Alphabet::no_input(3).unwrap());
        assert!(matches!(
            membership(&bit(&[0.5, 0.5]), &[three]),
            Err(ConvexityError::AlphabetMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn extremality() {
        for x in 1..=4 {
            for a in 2..=8 {
                if x * a > 16 {
                    continue;
                }
                let alph = Alphabet::new(x, a).unwrap();
                let mut set: Vec<Behavior> = (0..a).map(|o| Behavior::deterministic(alph, o)).collect();
                set.push(Behavior::uniform(alph));
                for v in &set[..a] {
                    assert!(is_extreme(v, &set).unwrap().extreme, "X={x} A={a}");
                }
                assert!(!is_extreme(&Behavior::uniform(alph), &set).unwrap().extreme);
            }
        }
        let pc = eight(&[(0, 0.5), (7, 0.5)]);
        let set = [eight(&[(0, 1.0)]), eight(&[(7, 1.0)]), pc.clone()];
        let e = is_extreme(&pc, &set).unwrap();
        assert!(!e.extreme);
        let Some(Membership::Decomposition(d)) = e.certificate else { panic!() };
        assert_eq!(d.weights.len(), 2);
    }

    #[test]
    fn caratheodory_prunes_redundant_components() {
        // uniform over 3 outcomes as a mixture of vertices and edge midpoints
        let alph = Alphabet::no_input(3).unwrap();
        let mut set: Vec<Behavior> = (0..3).map(|a| Behavior::deterministic(alph, a)).collect();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            set.push(set[i].mix(&set[j], 0.5).unwrap());
        }
        let u = Behavior::uniform(alph);
        let Membership::Decomposition(d) = membership(&u, &set).unwrap() else { panic!() };
        assert!(d.weights.len() <= u.support_size() + 1);
        let dec = decomposition(&u, &set, &[0.1, 0.1, 0.1, 0.7 / 3.0, 0.7 / 3.0, 0.7 / 3.0]);
        assert!(dec.weights.len() <= 3, "{dec:?}");
        assert!(dec.residual < 1e-12);
    }

    #[test]
    fn prop1_constant_test() {
        let pc = eight(&[(0, 0.5), (7, 0.5)]);
        let set = [eight(&[(0, 1.0)]), eight(&[(7, 1.0)])];
        let Membership::Decomposition(d) = membership(&pc, &set).unwrap() else { panic!() };
        let family = |n: usize| -> Box<dyn HypothesisTest> { Box::new(constant_test(Alphabet::no_input(8).unwrap(), n, 0.05)) };
        let rows = prop1_demo(&family, &pc, &d, 3).unwrap();
        for r in rows {
            assert!((r.target_acceptance - 0.05).abs() < 1e-15);
            assert!((r.max_tuple_acceptance - 0.05).abs() < 1e-15);
            assert!(r.linearity_error < 1e-15 && r.bound_holds);
        }
    }

    fn random_behavior(alph: Alphabet, rng: &mut crate::rng::SimRng, sparse: bool) -> Behavior {
        let mut v: Vec<f64> = (0..alph.cells())
            .map(|_| if sparse && rng.random_bool(0.4) { 0.0 } else { rng.random::<f64>() + 1e-3 })
            .collect();
        for x in 0..alph.inputs {
            let row = &mut v[x * alph.outputs..(x + 1) * alph.outputs];
            if row.iter().all(|&p| p == 0.0) {
                row[0] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        Behavior::new(alph, v).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn exactly_one_certificate(seed in 0u64..100_000, x in 1usize..=2, a in 2usize..=8, m in 1usize..6, inside in any::<bool>()) {
            prop_assume!(x * a <= 16);
            let alph = Alphabet::new(x, a).unwrap();
            let mut rng = rng_from_seed(seed);
            let set: Vec<Behavior> = (0..m).map(|_| random_behavior(alph, &mut rng, true)).collect();
            let p = if inside {
                let mut acc = set[0].clone();
                for (k, q) in set.iter().enumerate().skip(1) {
                    acc = acc.mix(q, 1.0 - 1.0 / (k as f64 + 1.0)).unwrap();
                }
                acc
            } else {
                random_behavior(alph, &mut rng, false)
            };
            match membership(&p, &set).unwrap() {
                Membership::Decomposition(d) => {
                    prop_assert!(d.residual <= FEASIBILITY_TOL);
                    prop_assert!(d.weights.len() <= p.support_size() + 1);
                    prop_assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    prop_assert!(separating_functional(&p, &set).is_err());
                }
                Membership::Separation(f) => {
                    prop_assert!(!inside);
                    prop_assert!(f.margin > 0.0);
                    let norm = f.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                    prop_assert!((norm - 1.0).abs() < 1e-12);
                    for q in &set {
                        prop_assert!(f.evaluate(q) <= f.alpha + 1e-9);
                    }
                }
            }
        }
    }
}
