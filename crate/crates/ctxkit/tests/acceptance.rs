//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ctxkit::suite::{run_suite, Suite, SuiteConfig, SuiteOutcome};
use ctxkit_core::cycle::{build_cycle, extremal_contextual, extremal_noncontextual, gammas, zetas};
use ctxkit_core::measures::{relative_entropy_of_contextuality, RcOptions};
use ctxkit_core::ncpolytope::{enumerate_strategies, is_noncontextual, mix};
use ctxkit_core::sample::{random_nc_box, random_nd_cycle_box};
use ctxkit_core::{Behavior, BlackBox};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS_LP: f64 = 1e-8;
/// R_C of the 4-cycle PR box in bits, frozen from the grid and exponentiated-gradient oracles.
const R_STAR: f64 = 0.415_037_499_278_843_8;

struct Line {
    ok: bool,
    text: String,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let mut wrong = Vec::new();
    let mut total = 0;
    for b in 3..=6 {
        for g in gammas(b) {
            total += 1;
            let v = is_noncontextual(&extremal_contextual(b, &g).unwrap(), EPS_LP).unwrap();
            if v.noncontextual {
                wrong.push(format!("b = {b}, γ = {g}"));
            }
        }
        for z in zetas(b) {
            total += 1;
            let v = is_noncontextual(&extremal_noncontextual(b, &z).unwrap(), EPS_LP).unwrap();
            if !v.noncontextual {
                wrong.push(format!("b = {b}, ζ = {z}"));
            }
        }
    }
    let t = start.elapsed();
    Line {
        ok: wrong.is_empty() && t < Duration::from_secs(10),
        text: format!(
            "extremal classification: {total} boxes, {} misclassified {:?}, {:.2} s (limit 10 s)",
            wrong.len(),
            wrong.first(),
            secs(t)
        ),
    }
}

fn suite_line(suite: Suite, limit: Duration, what: &str) -> Line {
    let start = Instant::now();
    let o: SuiteOutcome = run_suite(suite, &SuiteConfig::default());
    let t = start.elapsed();
    let worst: Vec<String> = o
        .worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.3e}"))
        .collect();
    Line {
        ok: o.pass && t < limit,
        text: format!(
            "{what}: {} instances, {} failures, worst [{}], {:.2} s (limit {} s){}",
            o.instances,
            o.failures,
            worst.join(", "),
            secs(t),
            limit.as_secs(),
            o.first_failure
                .map(|f| format!("; first failure: {f}"))
                .unwrap_or_default()
        ),
    }
}

fn criterion_6() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = RcOptions::default();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for n in 0..100 {
        let s = Arc::new(build_cycle(3 + n % 4).unwrap());
        let nc = random_nc_box(&s, &mut rng, 1 << 20).unwrap();
        let r = relative_entropy_of_contextuality(&nc.to_box(), &opts).unwrap();
        worst = worst.max(r.value);
        if r.value.is_nan() || r.value > 1e-6 {
            bad += 1;
        }
    }
    let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
    let r = relative_entropy_of_contextuality(&pr, &opts).unwrap();
    let dev = (r.value - R_STAR).abs();
    Line {
        ok: bad == 0 && dev <= 1e-4,
        text: format!(
            "R_C anchors: 100 NC boxes, {bad} above 1e-6 (worst {worst:.3e}); PR box {:.12} vs r* {R_STAR:.12} (|Δ| = {dev:.2e}, limit 1e-4)",
            r.value
        ),
    }
}

// Exact oracle for criterion 7: the dual of the max-norm distance LP,
//   max ⟨c, p⟩ − β  s.t.  ⟨c, v_k⟩ ≤ β for every vertex, ‖c‖₁ ≤ 1,
// solved by a dense rational simplex with Bland's rule.

type Q = BigRational;

/// `max objᵀx` subject to `Ax ≤ b`, `x ≥ 0`, with `b ≥ 0` so the origin is feasible.
fn simplex_max(a: &[Vec<Q>], b: &[Q], obj: &[Q]) -> Q {
    let m = a.len();
    let n = obj.len();
    // tableau rows: [A | I | b], last row: reduced costs
    let mut t: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut z: Vec<Q> = obj.iter().map(|c| -c.clone()).collect();
    z.extend((0..=m).map(|_| Q::zero()));
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(e) = (0..n + m).find(|&j| z[j].is_negative()) else {
            return z[n + m].clone();
        };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if t[i][e].is_positive() {
                let ratio = &t[i][n + m] / &t[i][e];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.expect("the distance LP is bounded");
        let piv = t[r][e].clone();
        for v in t[r].iter_mut() {
            *v /= &piv;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[e].is_zero() {
                let f = row[e].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        if !z[e].is_zero() {
            let f = z[e].clone();
            for (x, y) in z.iter_mut().zip(&prow) {
                *x -= &f * y;
            }
        }
        basis[r] = e;
    }
}

/// Vertex rows of the 3-cycle built from scratch: context `i` holds buttons
/// `{i, i+1 mod 3}`, listed ascending, with the lower button's digit most significant.
fn triangle_vertices() -> Vec<Vec<Q>> {
    (0..8)
        .map(|z: usize| {
            let digit = |i: usize| (z >> (2 - i)) & 1;
            let mut col = vec![Q::zero(); 12];
            for ctx in 0..3 {
                let (lo, hi) = if ctx < 2 { (ctx, ctx + 1) } else { (0, 2) };
                col[4 * ctx + 2 * digit(lo) + digit(hi)] = Q::one();
            }
            col
        })
        .collect()
}

fn exact_distance(vertices: &[Vec<Q>], b: &Behavior) -> Q {
    let p: Vec<Q> = (0..3)
        .flat_map(|j| b.row(j).to_vec())
        .map(|x| Q::from_float(x).expect("finite probability"))
        .collect();
    let rows = p.len();
    // variables: c⁺ (rows), c⁻ (rows), β⁺, β⁻
    let n = 2 * rows + 2;
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    for v in vertices {
        let mut row = vec![Q::zero(); n];
        for r in 0..rows {
            row[r] = v[r].clone();
            row[rows + r] = -v[r].clone();
        }
        row[2 * rows] = -Q::one();
        row[2 * rows + 1] = Q::one();
        a.push(row);
        rhs.push(Q::zero());
    }
    let mut norm = vec![Q::one(); 2 * rows];
    norm.extend([Q::zero(), Q::zero()]);
    a.push(norm);
    rhs.push(Q::one());
    let mut obj: Vec<Q> = p.clone();
    obj.extend(p.iter().map(|x| -x.clone()));
    obj.extend([-Q::one(), Q::one()]);
    simplex_max(&a, &rhs, &obj)
}

fn criterion_7() -> Line {
    let start = Instant::now();
    let eps = Q::from_float(EPS_LP).unwrap();
    let vertices = triangle_vertices();
    let s = Arc::new(build_cycle(3).unwrap());
    // sanity of the hand-built vertex rows against the library's strategy behaviors
    let strategies = enumerate_strategies(&s, 1 << 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = Vec::new();
    let mut contextual = 0;
    let mut check = |bx: &BlackBox, label: String, contextual: &mut usize| {
        let float = is_noncontextual(bx, EPS_LP).unwrap().noncontextual;
        let d = exact_distance(&vertices, bx.behavior());
        let exact = d <= eps;
        if !exact {
            *contextual += 1;
        }
        if float != exact {
            disagreements.push(label);
        }
    };
    for n in 0..1000 {
        let bx = if n % 2 == 0 {
            random_nc_box(&s, &mut rng, 1 << 20).unwrap().to_box()
        } else {
            random_nd_cycle_box(3, &mut rng).unwrap()
        };
        check(&bx, format!("mixture {n}"), &mut contextual);
    }
    // near-facet probes: bisect the float verdict along a segment from an NC
    // mixture to an extremal contextual box, then probe both ends of the bracket
    let gs = gammas(3);
    for line in 0..25 {
        let center = random_nc_box(&s, &mut rng, 1 << 20).unwrap().behavior();
        let g = &gs[rng.gen_range(0..gs.len())];
        let corner = extremal_contextual(3, g).unwrap();
        let corner = Behavior::from_dense(s.clone(), corner.behavior().rows().to_vec()).unwrap();
        let at = |w: f64| {
            BlackBox::from(
                Behavior::convex_combination(&[(1.0 - w, &center), (w, &corner)]).unwrap(),
            )
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if is_noncontextual(&at(mid), EPS_LP).unwrap().noncontextual {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        check(
            &at(lo),
            format!("probe {line} low (w = {lo})"),
            &mut contextual,
        );
        check(
            &at(hi),
            format!("probe {line} high (w = {hi})"),
            &mut contextual,
        );
    }
    let uniform = mix(&s, &strategies, &[1.0 / 8.0; 8]).unwrap();
    let uniform_ok = exact_distance(&vertices, uniform.behavior()).is_zero();
    let pr_like = extremal_contextual(3, &gs[0]).unwrap();
    // P^(γ) on the triangle sits at distance 1/6 from the polytope
    let half = Q::new(BigInt::from(1), BigInt::from(6));
    let pr_ok = exact_distance(&vertices, pr_like.behavior()) == half;
    Line {
        ok: disagreements.is_empty() && uniform_ok && pr_ok,
        text: format!(
            "oracle equivalence on the 3-cycle: 1000 mixtures + 50 near-facet probes, {} exact-contextual, {} disagreements {:?}, oracle anchors ok = {}, {:.2} s",
            contextual,
            disagreements.len(),
            disagreements.first(),
            uniform_ok && pr_ok,
            secs(start.elapsed())
        ),
    }
}

fn criterion_8() -> Line {
    let exe = env!("CARGO_BIN_EXE_ctxkit");
    let run = || {
        Command::new(exe)
            .args(["prop-suite", "--seed", "0"])
            .output()
            .expect("run ctxkit")
    };
    let a = run();
    let b = run();
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    Line {
        ok: same && a.status.success() && b.status.success(),
        text: format!(
            "determinism: two `prop-suite --seed 0` runs, {} bytes each, identical = {same}, exit codes {:?}/{:?}",
            a.stdout.len(),
            a.status.code(),
            b.status.code()
        ),
    }
}

fn main() {
    // libtest-style flags from `cargo test` are ignored
    let lines = [
        ("1", criterion_1()),
        (
            "2",
            suite_line(
                Suite::NdPreservation,
                Duration::from_secs(60),
                "ND preservation under wirings",
            ),
        ),
        (
            "3",
            suite_line(
                Suite::NcPreservation,
                Duration::from_secs(120),
                "NC preservation under wirings, compose vs apply",
            ),
        ),
        (
            "4",
            suite_line(
                Suite::Monotonicity,
                Duration::from_secs(600),
                "R_C monotone under wirings on 3-, 4-, 5-cycles",
            ),
        ),
        (
            "5",
            suite_line(
                Suite::ContextualityBit,
                Duration::from_secs(60),
                "contextuality bit reproduces ND targets",
            ),
        ),
        ("6", criterion_6()),
        ("7", criterion_7()),
        ("8", criterion_8()),
    ];
    let mut all = true;
    for (n, l) in &lines {
        all &= l.ok;
        println!(
            "criterion {n}: {} {}",
            if l.ok { "PASS" } else { "FAIL" },
            l.text
        );
    }
    if !all {
        std::process::exit(1);
    }
}
