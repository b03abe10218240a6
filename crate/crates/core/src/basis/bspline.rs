//! Clamped uniform B-splines evaluated with the Cox-de Boor recursion.
//!
//! Only the `p + 1` functions that are nonzero on the knot span containing `u`
//! are built, level by level from the degree-0 indicator, so each evaluation
//! costs `O(p^2)` regardless of the grid size.

/// `degree + 1` copies of each endpoint around `grid_count - 1` interior knots.
pub fn clamped_knots(grid_count: usize, degree: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut knots = Vec::with_capacity(grid_count + 2 * degree + 1);
    knots.extend(std::iter::repeat_n(lo, degree + 1));
    let h = (hi - lo) / grid_count as f64;
    knots.extend((1..grid_count).map(|k| lo + k as f64 * h));
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    knots
}

/// Index `s` of the knot span `[knots[s], knots[s+1])` holding `u`.
///
/// The right end of the domain belongs to the last non-degenerate span, so
/// `u == hi` is handled as a closed interval.
pub fn find_span(knots: &[f64], degree: usize, u: f64) -> usize {
    let n_basis = knots.len() - degree - 1;
    if u >= knots[n_basis] {
        return n_basis - 1;
    }
    let last_le = knots[..=n_basis].partition_point(|&k| k <= u);
    last_le.saturating_sub(1).clamp(degree, n_basis - 1)
}

/// Writes all `N_{i,p}(u)` (and optionally `dN_{i,p}/du`) into the output
/// buffers, which must hold `knots.len() - degree - 1` entries.
pub fn eval_into(
    knots: &[f64],
    degree: usize,
    u: f64,
    values: &mut [f64],
    derivs: Option<&mut [f64]>,
) {
    let p = degree;
    let span = find_span(knots, p, u);
    values.fill(0.0);

    let mut local = [0.0f64; 16];
    let mut left = [0.0f64; 16];
    let mut right = [0.0f64; 16];
    // degree p - 1 values on this span, needed for the derivative
    let mut lower = [0.0f64; 16];
    let (mut local_vec, mut left_vec, mut right_vec, mut lower_vec);
    let (local, left, right, lower): (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) =
        if p < 16 {
            (&mut local, &mut left, &mut right, &mut lower)
        } else {
            local_vec = vec![0.0; p + 1];
            left_vec = vec![0.0; p + 1];
            right_vec = vec![0.0; p + 1];
            lower_vec = vec![0.0; p + 1];
            (&mut local_vec, &mut left_vec, &mut right_vec, &mut lower_vec)
        };

    local[0] = 1.0;
    for j in 1..=p {
        if j == p {
            lower[..p].copy_from_slice(&local[..p]);
        }
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = local[r] / (right[r + 1] + left[j - r]);
            local[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        local[j] = saved;
    }

    let first = span - p;
    values[first..=span].copy_from_slice(&local[..=p]);

    if let Some(d) = derivs {
        d.fill(0.0);
        if p == 0 {
            return;
        }
        // lower[k] holds N_{span-p+1+k, p-1}
        let lower_at = |i: usize| -> f64 {
            if i + p < span + 1 || i > span {
                0.0
            } else {
                lower[i + p - span - 1]
            }
        };
        let pf = p as f64;
        for i in first..=span {
            let mut acc = 0.0;
            let a = lower_at(i);
            if a != 0.0 {
                acc += a / (knots[i + p] - knots[i]);
            }
            let b = lower_at(i + 1);
            if b != 0.0 {
                acc -= b / (knots[i + p + 1] - knots[i + 1]);
            }
            d[i] = pf * acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct transcription of the recursive definition, with 0/0 := 0 and a
    // closed right end at the last knot.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, u: f64) -> f64 {
        let hi = *knots.last().unwrap();
        if p == 0 {
            let inside = knots[i] <= u && u < knots[i + 1];
            let right_end = u == hi && knots[i + 1] == hi && knots[i] < knots[i + 1];
            return if inside || right_end { 1.0 } else { 0.0 };
        }
        let mut out = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 != 0.0 {
            out += (u - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, u);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 != 0.0 {
            out += (knots[i + p + 1] - u) / d2 * cox_de_boor(knots, i + 1, p - 1, u);
        }
        out
    }

    fn eval(knots: &[f64], p: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
        let n = knots.len() - p - 1;
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n];
        eval_into(knots, p, u, &mut v, Some(&mut d));
        (v, d)
    }

    #[test]
    fn matches_recursive_definition() {
        for (g, p) in [(1, 0), (3, 0), (2, 1), (5, 3), (7, 2), (4, 5)] {
            let knots = clamped_knots(g, p, -1.0, 1.0);
            for k in 0..=400 {
                let u = -1.0 + 2.0 * k as f64 / 400.0;
                let (v, _) = eval(&knots, p, u);
                for (i, &value) in v.iter().enumerate() {
                    let expect = cox_de_boor(&knots, i, p, u);
                    assert!(
                        (value - expect).abs() <= 1e-14,
                        "g={g} p={p} u={u} i={i}: {value} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_zero_is_indicator() {
        let knots = clamped_knots(4, 0, 0.0, 1.0);
        let (v, d) = eval(&knots, 0, 0.3);
        assert_eq!(v, vec![0.0, 1.0, 0.0, 0.0]);
        assert!(d.iter().all(|&x| x == 0.0));
        let (v, _) = eval(&knots, 0, 0.25);
        assert_eq!(v, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hat_functions() {
        let knots = clamped_knots(2, 1, 0.0, 1.0);
        let (v, _) = eval(&knots, 1, 0.25);
        assert_eq!(v, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn closed_right_end() {
        for p in 0..5 {
            let knots = clamped_knots(5, p, -1.0, 1.0);
            let (v, _) = eval(&knots, p, 1.0);
            assert_eq!(*v.last().unwrap(), 1.0);
            assert_eq!(v.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let knots = clamped_knots(5, 3, -1.0, 1.0);
        let h = 1e-6;
        for k in 1..200 {
            let u = -0.995 + 1.99 * k as f64 / 200.0;
            let (_, d) = eval(&knots, 3, u);
            let (vp, _) = eval(&knots, 3, u + h);
            let (vm, _) = eval(&knots, 3, u - h);
            for i in 0..d.len() {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((d[i] - fd).abs() <= 1e-6 * d[i].abs().max(1.0), "u={u} i={i}");
            }
        }
    }

    #[test]
    fn high_degree_uses_heap_buffers() {
        let knots = clamped_knots(3, 17, -1.0, 1.0);
        let (v, _) = eval(&knots, 17, 0.1);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
