//! Derivative-free 1-D minimization: a uniform scan to bracket the minimum,
//! then golden-section refinement inside the bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a bracketed 1-D minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `tol`.
///
/// Assumes `f` is unimodal on the interval. The returned point is the best
/// point evaluated, so it never loses to the interior probes.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Minimum
where
    F: Fn(f64) -> f64,
{
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    // Each step shrinks the bracket by 1/phi; 200 steps is far past f64 resolution.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }

    let mid = 0.5 * (lo + hi);
    let fmid = f(mid);
    [(x1, f1), (x2, f2), (mid, fmid)].into_iter().fold(Minimum { x: mid, value: fmid }, |best, (x, v)| {
        if v < best.value {
            Minimum { x, value: v }
        } else {
            best
        }
    })
}

/// Scans `points` equally spaced samples over `[lo, hi]` (endpoints included),
/// then refines around the best sample with [`golden_section`].
///
/// Endpoint samples are kept as candidates, so a minimum sitting on the
/// boundary is returned exactly.
pub fn scan_then_refine<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Minimum
where
    F: Fn(f64) -> f64,
{
    assert!(points >= 3, "scan needs at least three points");
    let step = (hi - lo) / (points - 1) as f64;
    let at = |i: usize| if i == points - 1 { hi } else { lo + step * i as f64 };

    let (best_i, best_v) =
        (0..points).map(|i| (i, f(at(i)))).fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(points - 1));
    let refined = golden_section(&f, a, b, tol);
    if refined.value < best_v {
        refined
    } else {
        Minimum { x: at(best_i), value: best_v }
    }
}
