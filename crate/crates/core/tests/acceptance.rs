//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the lines always print; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use properclass::classify::{group_lookup, proper_class_count, stability_check, ElementCount};
use properclass::invariants::{
    degree_s2, hopf_invariant_at, proper_class, sphere_invariant, winding_number, ClassOptions, ClassValue,
    HopfOptions, SignPair, DEFAULT_DEGREE_TARGET, HOPF_VALUE_PAIRS,
};
use properclass::map_model::{clamp, radial_extend, suspend_sphere};
use properclass::normalize::{normalize, Homotopy, NormalizeOptions, Stage};
use properclass::pontryagin::{
    extract_framing, pt_construct, preimage_points, preimage_search, realizable_1d, signed_count, standard_basis,
    FramedPoints, SearchBox,
};
use properclass::{Config, MapSpec, SphereMapSpec};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let count = |n, k| proper_class_count(n, k).map_err(|e| e.to_string());
    let name = |n, k| -> Result<String, String> {
        let set = group_lookup(n, k).map_err(|e| e.to_string())?;
        Ok(set.group().map(|g| g.to_string()).unwrap_or_default())
    };
    check(count(1, 1)? == ElementCount::Finite(4), || "(1,1) is not 4 classes".into())?;
    check(count(3, 1)? == ElementCount::Finite(2), || "(3,1) is not 2 classes".into())?;
    check(name(2, 2)? == "Z", || "(2,2) is not Z".into())?;
    check(name(4, 3)? == "Z", || "(4,3) is not Z".into())?;
    check(name(5, 4)? == "Z/2", || "(5,4) is not Z/2".into())?;
    Ok("(1,1): 4, (3,1): 2, (2,2): Z, (4,3): Z, (5,4): Z/2".into())
}

fn criterion_2() -> Outcome {
    let cfg = Config::default();
    let opts = ClassOptions::default();
    let mut cases: Vec<(String, SphereMapSpec, ClassValue)> = Vec::new();
    for d in -5..=5 {
        cases.push((format!("power({d})"), SphereMapSpec::circle_power(d), ClassValue::Integer(d as i64)));
    }
    let sign_pair = |minus, plus| ClassValue::SignPair(SignPair { minus, plus });
    let s0 = |v: f64| SphereMapSpec::constant(0, vec![v]).unwrap();
    cases.push(("id on S^0".into(), SphereMapSpec::identity(0), sign_pair(-1, 1)));
    cases.push(("antipodal on S^0".into(), SphereMapSpec::antipodal(0), sign_pair(1, -1)));
    cases.push(("const +1 on S^0".into(), s0(1.0), sign_pair(1, 1)));
    cases.push(("const -1 on S^0".into(), s0(-1.0), sign_pair(-1, -1)));
    cases.push(("hopf".into(), SphereMapSpec::hopf(), ClassValue::Integer(1)));
    for (label, f, expected) in &cases {
        let direct = sphere_invariant(f, &opts, &cfg).map_err(|e| format!("{label}: {e}"))?.value;
        check(direct == Some(*expected), || format!("{label}: invariant {direct:?}, expected {expected:?}"))?;
        let norm = normalize(&radial_extend(f), &NormalizeOptions::default(), &cfg.tol).map_err(|e| format!("{label}: {e}"))?;
        let round = sphere_invariant(&norm.boundary_map, &opts, &cfg).map_err(|e| format!("{label}: {e}"))?.value;
        check(round == direct, || format!("{label}: boundary map gives {round:?}, f gives {direct:?}"))?;
    }
    Ok(format!("{} boundary maps reproduced exactly", cases.len()))
}

fn criterion_3() -> Outcome {
    let cfg = Config::default();
    // Clamp regimes against the piecewise formula.
    let r = 3.0;
    let inner = [0.3, -0.4];
    let middle = [1.2, 1.6];
    let outer = [6.0, 8.0];
    check(clamp(&inner, r) == inner.to_vec(), || "clamp inside the unit ball".into())?;
    check(clamp(&middle, r) == vec![0.6, 0.8], || format!("clamp on the shell: {:?}", clamp(&middle, r)))?;
    check(clamp(&outer, r) == vec![2.0, 8.0 / 3.0], || format!("clamp outside: {:?}", clamp(&outer, r)))?;
    check(clamp(&[1.0, 0.0], r) == vec![1.0, 0.0] && clamp(&[3.0, 0.0], r) == vec![1.0, 0.0], || {
        "clamp at the regime boundaries".into()
    })?;

    let maps = [
        MapSpec::parse("[x1^3 - 3*x1*x2^2 + x1, 3*x1^2*x2 - x2^3 + x2]", Some(2)).unwrap(),
        radial_extend(&SphereMapSpec::hopf()),
        MapSpec::scale(3, 2.5),
        MapSpec::polynomial(vec![1.0, -2.0, 0.0, 1.0]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut stages = 0;
    for g in maps {
        let g = properclass::map_model::certify_proper(g, 50.0).map_err(|e| e.to_string())?;
        let res = normalize(&g, &NormalizeOptions::default(), &cfg.tol).map_err(|e| e.to_string())?;
        for c in &res.track.certificates {
            check(c.passed(), || format!("stage {} failed the properness check", c.stage))?;
            stages += 1;
        }
        let Some(Stage::Retract { g1 }) = res.track.stages.iter().find(|s| matches!(s, Stage::Retract { .. })) else {
            return Err("no retraction stage".into());
        };
        let stage = Stage::Retract { g1: g1.clone() };
        let n = g.domain_dim();
        for _ in 0..2500 {
            let t: f64 = rng.random();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a = norm(&stage.eval(t, &v).map_err(|e| e.to_string())?);
            let b = norm(&g1.eval(&v).map_err(|e| e.to_string())?);
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-9, || format!("|G1(t,v)| deviates from |g1(v)| by {worst:e}"))?;
    Ok(format!("10000 samples, max norm deviation {worst:.1e}; clamp regimes exact; {stages} stage certificates pass"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn criterion_4() -> Outcome {
    let cfg = Config::default();
    let hopts = HopfOptions::new(&cfg);
    let h = SphereMapSpec::hopf();
    let flipped = SphereMapSpec::compose(h.clone(), SphereMapSpec::reflection(3, 0).unwrap()).unwrap();
    let doubled =
        SphereMapSpec::compose(h.clone(), suspend_sphere(&suspend_sphere(&SphereMapSpec::circle_power(2)))).unwrap();
    let mut seen = Vec::new();
    for (label, g, expected) in [("hopf", &h, 1), ("hopf o reflection", &flipped, -1), ("hopf o degree 2", &doubled, 2)] {
        for (i, [y1, y2]) in HOPF_VALUE_PAIRS.iter().enumerate() {
            let r = hopf_invariant_at(g, y1, y2, &hopts, &cfg).map_err(|e| format!("{label}, pair {i}: {e}"))?;
            check(r.certified, || format!("{label}, pair {i}: fibers not certified"))?;
            check(r.value == expected, || format!("{label}, pair {i}: got {}, expected {expected}", r.value))?;
        }
        seen.push(format!("{label} = {expected}"));
    }
    Ok(format!("{} on all 3 value pairs", seen.join(", ")))
}

fn criterion_5() -> Outcome {
    let cfg = Config::default();
    let sq = MapSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
    let neg = MapSpec::polynomial(vec![0.0, 0.0, -1.0]).unwrap();
    // Each map's unattained side: -1 for x^2, +1 for -x^2.
    for (f, y) in [(&sq, -1.0), (&neg, 1.0)] {
        let s = preimage_search(f, &[y], &SearchBox::default(), &cfg.tol).map_err(|e| e.to_string())?;
        check(s.points.is_empty(), || format!("preimage of {y} is not empty"))?;
    }
    let opts = ClassOptions::default();
    let a = proper_class(&sq, &opts, &cfg).map_err(|e| e.to_string())?.value;
    let b = proper_class(&neg, &opts, &cfg).map_err(|e| e.to_string())?.value;
    let pp = ClassValue::SignPair(SignPair { minus: 1, plus: 1 });
    let mm = ClassValue::SignPair(SignPair { minus: -1, plus: -1 });
    check(a == Some(pp) && b == Some(mm), || format!("classes {a:?} and {b:?}"))?;
    Ok("empty framed preimages at unattained values; classes (+, +) and (-, -)".into())
}

/// Brute force over PL maps with knots at the points and midpoints, knot
/// values in {-1, 0, 1} and end slopes in {-1, 1}: is there one whose zero
/// set is exactly the points, each crossed transversally with the given sign?
fn pl_oracle(signs: &[i32]) -> bool {
    let l = signs.len();
    let knots: Vec<f64> = if l == 0 {
        vec![0.0]
    } else {
        (0..2 * l - 1).map(|i| 1.0 + i as f64 / 2.0).collect()
    };
    let m = knots.len();
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let values: Vec<f64> = (0..m)
            .map(|_| {
                let v = (c % 3) as f64 - 1.0;
                c /= 3;
                v
            })
            .collect();
        for left in [-1.0, 1.0] {
            for right in [-1.0, 1.0] {
                if pl_matches(&knots, &values, left, right, signs) {
                    return true;
                }
            }
        }
    }
    false
}

fn pl_matches(knots: &[f64], values: &[f64], left: f64, right: f64, signs: &[i32]) -> bool {
    // Zeros as (location, slope on the left, slope on the right).
    let m = knots.len();
    let slope = |i: usize| (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    let mut zeros: Vec<(f64, f64, f64)> = Vec::new();
    // Left ray: value v0 + left (x - k0), x < k0.
    if values[0] != 0.0 && values[0] * left > 0.0 {
        zeros.push((knots[0] - values[0] / left, left, left));
    }
    for i in 0..m {
        if values[i] == 0.0 {
            let sl = if i == 0 { left } else { slope(i - 1) };
            let sr = if i + 1 == m { right } else { slope(i) };
            zeros.push((knots[i], sl, sr));
        }
        if i + 1 < m && values[i] * values[i + 1] < 0.0 {
            let s = slope(i);
            zeros.push((knots[i] - values[i] / s, s, s));
        }
        if i + 1 < m && values[i] == 0.0 && values[i + 1] == 0.0 {
            return false;
        }
    }
    if values[m - 1] != 0.0 && values[m - 1] * right < 0.0 {
        zeros.push((knots[m - 1] - values[m - 1] / right, right, right));
    }
    if zeros.len() != signs.len() {
        return false;
    }
    zeros.iter().zip(signs).enumerate().all(|(i, (&(x, sl, sr), &s))| {
        x == (i + 1) as f64 && sl * sr > 0.0 && (sl > 0.0) == (s > 0)
    })
}

fn criterion_6() -> Outcome {
    let cfg = Config::default();
    for signs in [vec![1, 1], vec![1, -1, -1, 1]] {
        let r = realizable_1d(&signs).map_err(|e| e.to_string())?;
        check(!r.realizable && r.certificate.is_some(), || format!("{signs:?} accepted or missing certificate"))?;
    }
    let mut checked = 0;
    let mut accepted = 0;
    for l in 0..=6usize {
        for bits in 0..(1u32 << l) {
            let signs: Vec<i32> = (0..l).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
            let r = realizable_1d(&signs).map_err(|e| e.to_string())?;
            let alternating = signs.windows(2).all(|w| w[0] != w[1]);
            check(r.realizable == alternating, || format!("{signs:?}: realizable = {}", r.realizable))?;
            check(r.realizable == pl_oracle(&signs), || format!("{signs:?}: disagrees with the PL oracle"))?;
            if let Some(w) = &r.witness {
                let pts = preimage_points(w, &[0.0], 8.0, &cfg.tol).map_err(|e| e.to_string())?;
                let fp = extract_framing(w, &pts, &[0.0], &standard_basis(1), &cfg.tol).map_err(|e| e.to_string())?;
                let expected: Vec<Vec<f64>> = (1..=l).map(|i| vec![i as f64]).collect();
                check(pts == expected && fp.signs == signs, || format!("{signs:?}: witness preimage mismatch"))?;
                accepted += 1;
            }
            checked += 1;
        }
    }
    check(checked == 2 * ((1 << 6) - 1) + 1, || format!("checked {checked} sequences"))?;
    Ok(format!("{checked} sequences agree with the PL oracle; {accepted} alternating accepted with verified witnesses"))
}

fn random_framed_points(rng: &mut ChaCha8Rng) -> FramedPoints {
    let n = rng.random_range(1..=3usize);
    let count = rng.random_range(1..=5usize);
    let mut points: Vec<Vec<f64>> = Vec::new();
    while points.len() < count {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if points.iter().all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > 1.0) {
            points.push(p);
        }
    }
    if n == 1 {
        points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }
    let first: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let frames: Vec<Vec<Vec<f64>>> = (0..count)
        .map(|i| loop {
            let cols: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let det = nalgebra::DMatrix::from_fn(n, n, |r, c| cols[c][r]).determinant();
            // On the line only alternating signs are realizable.
            let wanted = if i % 2 == 0 { first } else { -first };
            if det.abs() > 0.2 && (n > 1 || det * wanted > 0.0) {
                break cols;
            }
        })
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    FramedPoints::from_frames(points, frames, y).unwrap()
}

fn criterion_7() -> Outcome {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = Vec::new();
    for case in 0..20 {
        let fp = random_framed_points(&mut rng);
        let f = pt_construct(&fp, 0.3, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let pts = preimage_points(&f, &fp.regular_value, 8.0, &cfg.tol).map_err(|e| format!("case {case}: {e}"))?;
        let back = extract_framing(&f, &pts, &fp.regular_value, &standard_basis(fp.dim()), &cfg.tol)
            .map_err(|e| format!("case {case}: {e}"))?;
        check(back.len() == fp.len(), || format!("case {case}: {} points became {}", fp.len(), back.len()))?;
        check(signed_count(&back) == signed_count(&fp), || {
            format!("case {case}: signed count {} became {}", signed_count(&fp), signed_count(&back))
        })?;
        counts.push(signed_count(&fp));
    }
    Ok(format!("20 sets, signed counts {counts:?} preserved"))
}

fn criterion_8() -> Outcome {
    let b = |m, n, k| stability_check(m, n, k).map(|r| r.diagram_bijective).map_err(|e| e.to_string());
    check(!b(0, 4, 3)?, || "(0,4,3) reported bijective".into())?;
    check(b(0, 1, 2)?, || "(0,1,2) not bijective".into())?;
    check(b(0, 4, 4)?, || "(0,4,4) not bijective".into())?;
    let mut pairs = 0;
    for m in 0..=4 {
        for n in 1..=10 {
            for k in 1..=10 {
                check(!b(m, n, k)? || b(m, n + 1, k + 1)?, || format!("monotonicity fails at ({m},{n},{k})"))?;
                let r = stability_check(m, n, k).map_err(|e| e.to_string())?;
                let l = r.minimal_shift;
                check(b(m, n + l, k + l)? && (l == 0 || !b(m, n + l - 1, k + l - 1)?), || {
                    format!("minimal shift wrong at ({m},{n},{k})")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("examples exact; monotone and minimal shift consistent on {pairs} triples"))
}

fn criterion_9() -> Outcome {
    let cfg = Config::default();
    for d in -5..=5 {
        let g = SphereMapSpec::circle_power(d);
        let w = winding_number(&g, 4096).map_err(|e| e.to_string())?;
        let deg = degree_s2(&suspend_sphere(&g), &DEFAULT_DEGREE_TARGET, &cfg.tol).map_err(|e| e.to_string())?;
        check(w == d as i64 && deg == w, || format!("d = {d}: winding {w}, degree {deg}"))?;
    }
    Ok("winding = degree of the suspension for d = -5..5".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("class counts", criterion_1, Duration::from_secs(1)),
        ("normalization round trip", criterion_2, Duration::from_secs(60)),
        ("homotopy formula contracts", criterion_3, Duration::from_secs(60)),
        ("Hopf separation", criterion_4, Duration::from_secs(300)),
        ("framed invariant incompleteness", criterion_5, Duration::from_secs(1)),
        ("non-realizability certificates", criterion_6, Duration::from_secs(60)),
        ("Pontryagin-Thom round trip", criterion_7, Duration::from_secs(120)),
        ("stability arithmetic", criterion_8, Duration::from_secs(1)),
        ("suspension coherence", criterion_9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({elapsed:.2?}) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({elapsed:.2?}) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
