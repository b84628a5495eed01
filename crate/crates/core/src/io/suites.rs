//! The experiment suites. Each suite returns named [`Check`]s with their
//! measured values and a witness for every violation. The acceptance tests
//! and the command-line runner both go through these functions.
//!
//! Sample counts and sizes are read from [`ExperimentSpec::samples`] by key;
//! the defaults below are the sizes the acceptance tests run at.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ExperimentSpec;
use crate::farey::{
    adjacent, distance, growth_vs_quasigeodesic, mediant_edges, quasigeodesic_test, sample_drivers, slope_of,
    HarnessParams, Slope, TruncatedFarey,
};
use crate::growth::{
    descend, distance_bound_check, fibonacci_twist_family, fibonacci_twist_fit, growth_detect, least_squares,
    log_ratio_profile, nielsen_path_bound_check, nielsen_twist_bound_check, random_rose, random_system, random_twist,
    rank2_driver, rank2_sg_distance, retract_with_profile, retraction_lipschitz_bound, slope_sphere,
    subrose_bound_check, Calibrated, CalibrationConstants, DescentPolicy, DescentSequence, GrowthParams, RoseVertex,
    StopRule,
};
use crate::par::{par_map, par_map_range};
use crate::projection_complex::{
    axiom2_stability, delta_estimate, delta_from_oracle, electrify, fiber_intersections, pair_subgraph, pi1_lipschitz,
    sample_triples, verify_axiom1, ConeLength, Graph, PairGraph, ProjectionData, ProjectionFamily, SyntheticFamily,
};
use crate::projections::{
    bgi_experiment, big_projection_locator, lipschitz_check, project_ball, projection_diameter, stabilization_check,
    BgiReport, ComplementChart, ProjectionTable,
};
use crate::splittings::{
    build_local_ball, disjoint, Answer, Ball, GraphKind, LinkTemplate, NonSepSphere, Sphere,
};
use crate::stallings::ConjSubgroup;
use crate::word::{NielsenMove, Word};
use crate::{Error, Result};

/// One property with its verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub measured: BTreeMap<String, Value>,
    /// Replayable data for every violation.
    pub witnesses: Vec<Value>,
}

impl Check {
    fn new(name: &str) -> Self {
        Check { name: name.to_string(), pass: false, summary: String::new(), measured: BTreeMap::new(), witnesses: Vec::new() }
    }

    fn measure<T: Serialize>(&mut self, key: &str, v: T) {
        self.measured.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn witness<T: Serialize>(&mut self, v: T) {
        self.witnesses.push(serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn finish(mut self, pass: bool, summary: String) -> Self {
        self.pass = pass;
        self.summary = summary;
        self
    }
}

/// Checks of one suite together with the constants they measured.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub constants: CalibrationConstants,
}

fn calibrated(value: f64, experiment: &str) -> Option<Calibrated> {
    Some(Calibrated { value, experiment: experiment.to_string() })
}

fn ordered(s: Slope, t: Slope) -> (Slope, Slope) {
    if s <= t {
        (s, t)
    } else {
        (t, s)
    }
}

/// A reduced word of length about `len` in rank `n`.
fn random_word<R: Rng>(rng: &mut R, n: usize, len: usize) -> Word {
    let letters: Vec<i32> =
        (0..len).map(|_| rng.gen_range(1..=n as i32) * if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    Word::reduce(&letters)
}

// ---------------------------------------------------------------- farey

/// Keys: `adjacency_height` (30), `distance_height` (50), `model_pairs` (200).
pub fn farey_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    Ok(SuiteOutput {
        checks: vec![farey_adjacency(spec)?, farey_distance(spec)?, model_cross_validation(spec)?],
        constants: CalibrationConstants::default(),
    })
}

/// Adjacency against the determinant and against mediant generation, on all pairs.
pub fn farey_adjacency(spec: &ExperimentSpec) -> Result<Check> {
    let h = spec.count("adjacency_height", 30) as i64;
    let slopes = Slope::all_up_to_height(h);
    let mediant: HashSet<(Slope, Slope)> = mediant_edges(h).into_iter().map(|(a, b)| ordered(a, b)).collect();
    let rows: Vec<Result<Vec<Value>>> = par_map_range(slopes.len(), |i| {
        let mut bad = Vec::new();
        for t in &slopes[i + 1..] {
            let s = slopes[i];
            let model = adjacent(&s, t)?;
            let det = (s.p * t.q - s.q * t.p).abs() == 1;
            let generated = mediant.contains(&ordered(s, *t));
            if model != det || det != generated {
                bad.push(json!({ "s": s, "t": t, "adjacent": model, "determinant": det, "mediant": generated }));
            }
        }
        Ok(bad)
    });
    let mut c = Check::new("farey-adjacency");
    for r in rows {
        for w in r? {
            c.witness(w);
        }
    }
    let pairs = slopes.len() * (slopes.len() - 1) / 2;
    c.measure("height", h);
    c.measure("slopes", slopes.len());
    c.measure("pairs", pairs);
    c.measure("mediant_edges", mediant.len());
    let n = c.witnesses.len();
    Ok(c.finish(n == 0, format!("{} pairs at height ≤ {}, {} mismatches", pairs, h, n)))
}

/// The ladder distance against breadth-first search in the truncated graph.
pub fn farey_distance(spec: &ExperimentSpec) -> Result<Check> {
    let h = spec.count("distance_height", 50) as i64;
    let tf = TruncatedFarey::new(h);
    let n = tf.slopes.len();
    let rows: Vec<(Vec<Value>, usize)> = par_map_range(n, |i| {
        let d = tf.bfs(i);
        let mut bad = Vec::new();
        let mut far = 0;
        for j in i + 1..n {
            let o = distance(&tf.slopes[i], &tf.slopes[j]);
            far = far.max(o);
            if o != d[j] {
                bad.push(json!({ "s": tf.slopes[i], "t": tf.slopes[j], "oracle": o, "bfs": d[j] }));
            }
        }
        (bad, far)
    });
    let mut c = Check::new("farey-distance");
    let mut diameter = 0;
    for (bad, far) in rows {
        diameter = diameter.max(far);
        for w in bad {
            c.witness(w);
        }
    }
    let pairs = n * (n - 1) / 2;
    c.measure("height", h);
    c.measure("pairs", pairs);
    c.measure("max_distance", diameter);
    let bad = c.witnesses.len();
    Ok(c.finish(bad == 0, format!("{} pairs at height ≤ {}, {} differ from BFS", pairs, h, bad)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Relation {
    Equal,
    Disjoint,
    Crossing,
    Unknown,
}

/// Equality and disjointness in the splitting model against slopes (rank two).
pub fn model_cross_validation(spec: &ExperimentSpec) -> Result<Check> {
    let mut rng = spec.rng("model-cross-validation");
    let count = spec.count("model_pairs", 200);
    // four kinds of pairs so that every relation is exercised
    let mut pairs: Vec<(Word, Word, &'static str)> = Vec::with_capacity(count);
    for i in 0..count {
        let len = rng.gen_range(1..=8);
        let b = random_rose(&mut rng, 2, len).basis().clone();
        let (u, v) = (b.elements[0].clone(), b.elements[1].clone());
        let pair = match i % 4 {
            0 => {
                let len = rng.gen_range(1..=8);
                let k = rng.gen_range(0..2);
                (u, random_rose(&mut rng, 2, len).basis().elements[k].clone(), "independent")
            }
            1 => (u, v, "same-basis"),
            2 => {
                let len = rng.gen_range(1..=4);
                let g = random_word(&mut rng, 2, len);
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                (u.clone(), u.pow(e).conjugate_by(&g), "conjugate")
            }
            _ => {
                let e = rng.gen_range(1..=2) * if rng.gen_bool(0.5) { 1 } else { -1 };
                (u.clone(), u.mul(&v.pow(e)), "transvected")
            }
        };
        pairs.push(pair);
    }
    let rows: Vec<Result<(Relation, Relation)>> = par_map(&pairs, |(u, w, _)| {
        let sphere = |x: &Word| NonSepSphere::from_factor(ConjSubgroup::from_generators(2, std::slice::from_ref(x)));
        let (a, b) = (sphere(u)?, sphere(w)?);
        let model = if a.key() == b.key() {
            Relation::Equal
        } else {
            match disjoint(&Sphere::NonSep(a), &Sphere::NonSep(b))?.answer {
                Answer::Yes => Relation::Disjoint,
                Answer::No => Relation::Crossing,
                Answer::Unknown => Relation::Unknown,
            }
        };
        let (s, t) = (slope_of(u)?, slope_of(w)?);
        let truth = if s == t {
            Relation::Equal
        } else if adjacent(&s, &t)? {
            Relation::Disjoint
        } else {
            Relation::Crossing
        };
        Ok((model, truth))
    });
    let mut c = Check::new("model-cross-validation");
    let mut unknown = 0;
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in rows.into_iter().enumerate() {
        let (model, truth) = r?;
        *tally.entry(format!("{:?}", truth).to_lowercase()).or_default() += 1;
        if model == Relation::Unknown {
            unknown += 1;
        }
        if model != truth {
            let (u, w, kind) = &pairs[i];
            c.witness(json!({ "index": i, "kind": kind, "u": u, "w": w, "model": model, "slopes": truth }));
        }
    }
    if unknown as f64 > spec.bounds.unknown_fraction * count as f64 {
        return Err(Error::Saturation { unknown, total: count });
    }
    let bad = c.witnesses.len();
    c.measure("pairs", count);
    c.measure("relations", &tally);
    c.measure("unknown", unknown);
    c.measure("disagreements", bad);
    Ok(c.finish(bad == 0 && unknown == 0, format!("{} pairs {:?}, {} disagreements, {} unknown", count, tally, bad, unknown)))
}

// ---------------------------------------------------------------- growth

/// Keys: `twist_triples` (1000), `path_samples` (500), `descents` (50),
/// `retraction_pairs` (500), `harness_sequences` (100), `slope_height` (200).
/// The bracket checks run in `spec.rank`; the rest are rank-two statements.
pub fn growth_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let mut constants = CalibrationConstants::default();
    let (exp, retraction) = exponential_descents(spec, &mut constants)?;
    let checks = vec![
        twist_bracket(spec)?,
        path_bound(spec)?,
        exp,
        retraction,
        growth_against_quasigeodesic(spec)?,
        sphere_distance_bound(spec)?,
    ];
    Ok(SuiteOutput { checks, constants })
}

/// `ι(Σ, R′) ∈ [ι/2, 2ι]` for one twist.
pub fn twist_bracket(spec: &ExperimentSpec) -> Result<Check> {
    let mut rng = spec.rng("twist-bracket");
    let n = spec.rank;
    let inputs: Vec<_> = (0..spec.count("twist_triples", 1000))
        .map(|_| {
            let (ls, lr) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
            (random_system(&mut rng, n, ls), random_rose(&mut rng, n, lr), random_twist(&mut rng, n))
        })
        .collect();
    let rows = par_map(&inputs, |(s, r, m)| nielsen_twist_bound_check(s, r, m));
    let mut c = Check::new("twist-bracket");
    let mut worst = 1.0f64;
    for (i, row) in rows.into_iter().enumerate() {
        let t = row?;
        let ratio = t.after as f64 / t.before as f64;
        worst = worst.max(ratio).max(1.0 / ratio);
        if !t.holds {
            let (s, r, m) = &inputs[i];
            c.witness(json!({ "index": i, "system": s, "rose": r, "twist": m, "before": t.before, "after": t.after }));
        }
    }
    let bad = c.witnesses.len();
    c.measure("rank", n);
    c.measure("triples", inputs.len());
    c.measure("worst_ratio", worst);
    Ok(c.finish(bad == 0, format!("{} triples in rank {}, worst ratio {:.3}, {} violations", inputs.len(), n, worst, bad)))
}

/// `ι(Σ, R′) ≤ 2^d ι(Σ, R)` along `d`-twist Nielsen paths.
pub fn path_bound(spec: &ExperimentSpec) -> Result<Check> {
    let mut rng = spec.rng("path-bound");
    let n = spec.rank;
    let inputs: Vec<_> = (0..spec.count("path_samples", 500))
        .map(|_| {
            let (ls, lr, d) = (rng.gen_range(0..=6), rng.gen_range(0..=6), rng.gen_range(1..=8));
            let sigma = random_system(&mut rng, n, ls);
            let r = random_rose(&mut rng, n, lr);
            let mut path: Vec<NielsenMove> = (0..d).map(|_| random_twist(&mut rng, n)).collect();
            // free moves do not count toward d
            if rng.gen_bool(0.3) {
                let at = rng.gen_range(0..=path.len());
                path.insert(at, NielsenMove::swap(0, n - 1));
            }
            (sigma, r, path)
        })
        .collect();
    let rows = par_map(&inputs, |(s, r, p)| nielsen_path_bound_check(s, r, p));
    let mut c = Check::new("path-bound");
    let mut slack = f64::INFINITY;
    for (i, row) in rows.into_iter().enumerate() {
        let t = row?;
        slack = slack.min((t.before as f64) * 2f64.powi(t.twists as i32) / t.after as f64);
        if !t.holds {
            let (s, r, p) = &inputs[i];
            c.witness(json!({ "index": i, "system": s, "rose": r, "path": p, "before": t.before, "after": t.after }));
        }
    }
    let bad = c.witnesses.len();
    c.measure("rank", n);
    c.measure("samples", inputs.len());
    c.measure("min_ratio_to_bound", slack);
    Ok(c.finish(bad == 0, format!("{} paths in rank {}, {} violations", inputs.len(), n, bad)))
}

/// Cap on the minimal quasi-geodesic constant of detected descents.
pub const L_CAP: f64 = 5.0;
pub const A_GRID: [f64; 3] = [0.5, 0.7, 0.9];
pub const K_GRID: [usize; 4] = [1, 2, 4, 8];

/// Rank-two targets: half with 8 to 12 partial quotients in `1..=2`, half
/// with 3 to 5 quotients in `1..=8`. Words grow like the product of the
/// quotients, which keeps both kinds small enough to descend exactly.
pub fn descent_drivers<R: Rng>(rng: &mut R, count: usize) -> Vec<Vec<NielsenMove>> {
    (0..count)
        .map(|i| {
            let (quotients, size) = if i % 2 == 0 { (rng.gen_range(8..=12), 2) } else { (rng.gen_range(3..=5), 8) };
            let mut m = Vec::new();
            for _ in 0..quotients {
                for _ in 0..rng.gen_range(1..=size) {
                    m.push(NielsenMove::right(0, 1, 1));
                }
                m.push(NielsenMove::swap(0, 1));
            }
            m
        })
        .collect()
}

/// Quasi-geodesic constants of `(a, k)`-exponential descents, and the
/// displacement of the balanced retraction under single Nielsen moves.
pub fn exponential_descents(spec: &ExperimentSpec, constants: &mut CalibrationConstants) -> Result<(Check, Check)> {
    let mut rng = spec.rng("exponential-descents");
    let drivers = descent_drivers(&mut rng, spec.count("descents", 50));
    let policy = DescentPolicy::greedy_full(2).with_stop(StopRule::Reached);
    let start = RoseVertex::standard(2);
    let seqs: Vec<DescentSequence> =
        par_map(&drivers, |m| descend(&start, &rank2_driver(m), policy)).into_iter().collect::<Result<_>>()?;
    let slopes: Vec<Vec<Slope>> = seqs.iter().map(DescentSequence::slope_projection).collect::<Result<_>>()?;
    let ls: Vec<f64> = par_map(&slopes, |s| quasigeodesic_test(s, L_CAP).minimal_l);

    let mut c = Check::new("exponential-descents");
    let mut grid = Vec::new();
    let mut max_l = vec![vec![1.0f64; K_GRID.len()]; A_GRID.len()];
    for (ai, &a) in A_GRID.iter().enumerate() {
        for (ki, &k) in K_GRID.iter().enumerate() {
            let p = GrowthParams::new(a, k)?;
            let detected: Vec<usize> = (0..seqs.len())
                .filter(|&i| {
                    let v = growth_detect(&seqs[i], p);
                    v.exponential && !v.degenerate
                })
                .collect();
            for &i in &detected {
                max_l[ai][ki] = max_l[ai][ki].max(ls[i]);
                if ls[i] > L_CAP {
                    c.witness(json!({ "index": i, "a": a, "k": k, "driver": drivers[i], "minimal_l": ls[i], "slopes": slopes[i] }));
                }
            }
            grid.push(json!({ "a": a, "k": k, "detected": detected.len(), "max_l": max_l[ai][ki] }));
            constants.ell_table.insert(format!("{}/{}", a, k), Calibrated { value: max_l[ai][ki], experiment: "exponential-descents".into() });
        }
    }
    // larger a and larger k are weaker conditions, so the constant may only grow
    let monotone_a = (0..K_GRID.len()).all(|k| (1..A_GRID.len()).all(|a| max_l[a][k] + 1e-9 >= max_l[a - 1][k]));
    let monotone_k = (0..A_GRID.len()).all(|a| (1..K_GRID.len()).all(|k| max_l[a][k] + 1e-9 >= max_l[a][k - 1]));
    let worst = max_l.iter().flatten().cloned().fold(1.0, f64::max);
    c.measure("grid", &grid);
    c.measure("max_l", worst);
    c.measure("cap", L_CAP);
    c.measure("monotone_in_a", monotone_a);
    c.measure("monotone_in_k", monotone_k);
    c.measure("lengths", seqs.iter().map(DescentSequence::len).collect::<Vec<_>>());
    let bounded = c.witnesses.is_empty();
    let c = c.finish(
        bounded && monotone_a && monotone_k,
        format!("{} descents, max L {:.3} (cap {}), trend in a {}, in k {}", seqs.len(), worst, L_CAP, monotone_a, monotone_k),
    );

    // retraction onto the exponential descents
    let p = HarnessParams::default().growth;
    let exp: Vec<usize> = (0..seqs.len())
        .filter(|&i| {
            let v = growth_detect(&seqs[i], p);
            v.exponential && !v.degenerate
        })
        .collect();
    let mut r = Check::new("retraction");
    if exp.is_empty() {
        return Ok((c, r.finish(false, "no exponential descents to retract onto".into())));
    }
    let c1 = policy.c1();
    let profiles: Vec<Vec<f64>> = exp.iter().map(|&i| log_ratio_profile(&seqs[i])).collect();
    let bounds: Vec<usize> = profiles.iter().map(|p| retraction_lipschitz_bound(p, c1)).collect();
    let pairs: Vec<(usize, RoseVertex, NielsenMove)> = (0..spec.count("retraction_pairs", 500))
        .map(|i| {
            let len = rng.gen_range(0..=12);
            (i % exp.len(), random_rose(&mut rng, 2, len), random_twist(&mut rng, 2))
        })
        .collect();
    let rows: Vec<Result<(usize, bool)>> = par_map(&pairs, |(j, g, m)| {
        let seq = &seqs[exp[*j]];
        let g2 = g.apply_move(m)?;
        let x = retract_with_profile(seq, &profiles[*j], g, c1)?;
        let y = retract_with_profile(seq, &profiles[*j], &g2, c1)?;
        let (a, b) = (x.point.position(seq.len()), y.point.position(seq.len()));
        Ok((a.abs_diff(b), x.in_window && y.in_window))
    });
    let mut max_disp = 0;
    let mut outside = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let (d, window) = row?;
        let (j, g, m) = &pairs[i];
        max_disp = max_disp.max(d);
        outside += usize::from(!window);
        if d > bounds[*j] {
            r.witness(json!({ "index": i, "driver": drivers[exp[*j]], "rose": g, "move": m, "displacement": d, "bound": bounds[*j] }));
        }
    }
    let l = *bounds.iter().max().unwrap();
    constants.l = calibrated(l.max(1) as f64, "retraction");
    constants.c1 = calibrated(c1, "retraction");
    r.measure("pairs", pairs.len());
    r.measure("sequences", exp.len());
    r.measure("calibrated_l", l);
    r.measure("max_displacement", max_disp);
    r.measure("outside_window", outside);
    let bad = r.witnesses.len();
    let summary = format!("{} move pairs over {} descents, max displacement {} (L = {}), {} violations", pairs.len(), exp.len(), max_disp, l, bad);
    Ok((c, r.finish(bad == 0, summary)))
}

/// Growth verdict against quasi-geodesic verdict on mixed drivers.
pub fn growth_against_quasigeodesic(spec: &ExperimentSpec) -> Result<Check> {
    let mut rng = spec.rng("growth-vs-quasigeodesic");
    let drivers = sample_drivers(&mut rng, spec.count("harness_sequences", 100));
    let params = HarnessParams::default();
    let r = growth_vs_quasigeodesic(&drivers, params)?;
    let mut c = Check::new("growth-vs-quasigeodesic");
    for &i in &r.disagreements {
        let s = &r.samples[i];
        c.witness(json!({ "index": i, "driver": s.driver, "exponential": s.exponential, "quasi_geodesic": s.quasi_geodesic, "minimal_l": s.minimal_l, "slopes": s.slopes }));
    }
    c.measure("params", params);
    c.measure("table", r.table);
    c.measure("agreement", r.agreement);
    c.measure("sequences", r.samples.len());
    Ok(c.finish(
        r.agreement >= 0.95,
        format!("{} sequences, agreement {:.1}%, table {:?}", r.samples.len(), 100.0 * r.agreement, r.table),
    ))
}

/// `d_SG(S, S′) ≤ 2 log2 ι(S, R) + 3` for every slope up to a height,
/// against both petal-dual spheres of the standard rose.
pub fn sphere_distance_bound(spec: &ExperimentSpec) -> Result<Check> {
    let h = spec.count("slope_height", 200) as i64;
    let slopes = Slope::all_up_to_height(h);
    let r = RoseVertex::standard(2);
    let duals = r.dual_spheres()?;
    let rows: Vec<Result<Vec<(usize, usize, f64, usize)>>> = par_map(&slopes, |s| {
        let sph = Sphere::NonSep(slope_sphere(s)?);
        let mut out = Vec::new();
        for (j, d) in duals.iter().enumerate() {
            match distance_bound_check(&sph, &r, d, rank2_sg_distance) {
                Ok(v) => out.push((j, v.distance, v.bound, v.iota)),
                Err(Error::Precondition(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut c = Check::new("sphere-distance-bound");
    let (mut checked, mut skipped, mut min_slack, mut max_d) = (0, 0, f64::INFINITY, 0);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        skipped += duals.len() - row.len();
        for (j, d, bound, iota) in row {
            checked += 1;
            min_slack = min_slack.min(bound - d as f64);
            max_d = max_d.max(d);
            if d as f64 > bound + 1e-9 {
                c.witness(json!({ "slope": slopes[i], "petal": j, "distance": d, "iota": iota, "bound": bound }));
            }
        }
    }
    let bad = c.witnesses.len();
    c.measure("height", h);
    c.measure("checked", checked);
    c.measure("skipped_petal_spheres", skipped);
    c.measure("min_slack", min_slack);
    c.measure("max_distance", max_d);
    Ok(c.finish(bad == 0, format!("{} sphere pairs at height ≤ {}, min slack {:.3}, {} violations", checked, h, min_slack, bad)))
}

// ---------------------------------------------------------------- example43

/// Keys: `k_min` (4), `k_max` (12), `descent_starts` (5).
pub fn fibonacci_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let (k0, k1) = (spec.count("k_min", 4), spec.count("k_max", 12));
    if k0 >= k1 {
        return Err(Error::Precondition(format!("need k_min < k_max, got {} and {}", k0, k1)));
    }
    let ks: Vec<usize> = (k0..=k1).collect();
    let fit = fibonacci_twist_fit(&ks)?;
    // the Fibonacci numbers grow like φ^k
    let log_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let rel = (fit.slope - log_phi).abs() / log_phi;
    let mut f = Check::new("fibonacci-fit");
    f.measure("ks", &ks);
    f.measure("iotas", &fit.iotas);
    f.measure("slope", fit.slope);
    f.measure("intercept", fit.intercept);
    f.measure("log_phi", log_phi);
    f.measure("relative_error", rel);
    let f = f.finish(rel <= 0.10, format!("slope {:.4} against log φ = {:.4} ({:.1}% off)", fit.slope, log_phi, 100.0 * rel));

    let mut p = Check::new("fibonacci-path");
    for &k in &ks {
        let e = fibonacci_twist_family(k)?;
        let end = e.path.iter().fold(crate::word::Basis::standard(3), |b, m| b.apply_move(m));
        let want: Vec<Word> = (1..=3).map(|i| e.psi.apply(&Word::gen(i))).collect();
        if e.path.len() != 2 * k * e.m + 1 || end.elements != want {
            p.witness(json!({ "k": k, "length": e.path.len(), "expected": 2 * k * e.m + 1, "end": end.elements }));
        }
    }
    let bad = p.witnesses.len();
    let p = p.finish(bad == 0, format!("path length 2km+1 and endpoint ψ_k for k = {}..{}, {} mismatches", k0, k1, bad));

    let mut rng = spec.rng("fibonacci-linear-bound");
    let mut starts = vec![RoseVertex::standard(3)];
    for _ in 0..spec.count("descent_starts", 5) {
        let len = rng.gen_range(1..=4);
        starts.push(random_rose(&mut rng, 3, len));
    }
    let jobs: Vec<(usize, usize, usize)> =
        ks.iter().flat_map(|&k| (0..starts.len()).flat_map(move |s| [1, 2].map(|b| (k, s, b)))).collect();
    let subrose = [Word::gen(2), Word::gen(3)];
    let rows: Vec<Result<(usize, Vec<usize>, bool)>> = par_map(&jobs, |&(k, s, b)| {
        let e = fibonacci_twist_family(k)?;
        let target = RoseVertex::standard(3).apply(&e.psi)?;
        let seq = descend(&starts[s], &target, DescentPolicy::greedy_full(b).with_stop(StopRule::Reached))?;
        let lb = subrose_bound_check(&seq, &subrose, 2)?;
        Ok((seq.len(), lb.violations, seq.outcome == crate::growth::DescentOutcome::Reached))
    });
    let mut l = Check::new("fibonacci-linear-bound");
    let (mut states, mut reached) = (0, 0);
    for (i, row) in rows.into_iter().enumerate() {
        let (len, viol, done) = row?;
        states += len;
        reached += usize::from(done);
        if !viol.is_empty() {
            let (k, s, b) = jobs[i];
            l.witness(json!({ "k": k, "start": starts[s], "budget": b, "violations": viol }));
        }
    }
    l.measure("descents", jobs.len());
    l.measure("reached", reached);
    l.measure("states", states);
    let bad = l.witnesses.len();
    let l = l.finish(bad == 0, format!("{} descents ({} reached the target), {} states, {} with violations", jobs.len(), reached, states, bad));
    Ok(SuiteOutput { checks: vec![f, p, l], constants: CalibrationConstants::default() })
}

// ---------------------------------------------------------------- bgi

fn sigma1() -> Sphere {
    Sphere::NonSep(NonSepSphere::standard(3, 1))
}

fn sg_template(spec: &ExperimentSpec) -> Result<LinkTemplate> {
    LinkTemplate::new(3, GraphKind::Sg, spec.bounds, None)
}

fn ns_template(spec: &ExperimentSpec) -> Result<LinkTemplate> {
    LinkTemplate::new(3, GraphKind::Ns, spec.bounds, None)
}

fn max_vertices(spec: &ExperimentSpec) -> usize {
    spec.count("max_vertices", 200_000)
}

/// A ball of the sphere graph around `σ0` with its projections.
struct ProjectedBall {
    ball: Ball,
    projections: Vec<Option<crate::projections::ProjectionResult>>,
}

impl ProjectedBall {
    fn build(spec: &ExperimentSpec, tpl: &LinkTemplate, radius: usize) -> Result<Self> {
        let c = ComplementChart::standard(3);
        let ball = build_local_ball(&c.sigma0_sphere(), radius, tpl, max_vertices(spec))?;
        let projections = project_ball(&ball, &c);
        Ok(ProjectedBall { ball, projections })
    }

    fn bgi(&self, spec: &ExperimentSpec) -> Result<BgiReport> {
        let table = ProjectionTable::new(&self.projections);
        let mut rng = spec.rng(&format!("bgi-{}", self.ball.radius));
        bgi_experiment(&self.ball, &table, spec.count("geodesics", 200), &mut rng)
    }
}

/// The empirical projection bound `q̂` at the larger radius.
pub fn estimate_q_hat(spec: &ExperimentSpec) -> Result<usize> {
    let pb = ProjectedBall::build(spec, &sg_template(spec)?, spec.radii[1])?;
    Ok(pb.bgi(spec)?.q_hat)
}

/// Keys: `geodesics` (200), `locator_radius` (larger radius + 1),
/// `locator_pairs_per_class` (200), `max_vertices` (200000).
pub fn bgi_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let tpl = sg_template(spec)?;
    let c = ComplementChart::standard(3);
    let (r0, r1) = (spec.radii[0], spec.radii[1]);
    let small = ProjectedBall::build(spec, &tpl, r0)?;
    let large = ProjectedBall::build(spec, &tpl, r1)?;
    let (rep0, rep1) = (small.bgi(spec)?, large.bgi(spec)?);
    let q_hat = rep1.q_hat;
    let mut constants = CalibrationConstants { q: calibrated(q_hat as f64, "bgi"), ..Default::default() };

    // histogram stability
    let mut h = Check::new("bgi-histogram");
    let tail = rep1.samples.iter().filter(|s| s.end_gap > rep0.max_gap).count();
    let tail_fraction = tail as f64 / rep1.samples.len().max(1) as f64;
    let diam = large.projections.iter().flatten().map(projection_diameter).collect::<Result<Vec<_>>>()?;
    let max_diam = diam.into_iter().max().unwrap_or(0);
    for (rep, pb) in [(&rep0, &small), (&rep1, &large)] {
        h.measure(&format!("radius_{}", rep.radius), json!({
            "vertices": pb.ball.len(),
            "excluded": crate::projections::excluded_vertices(&pb.projections).len(),
            "samples": rep.samples.len(),
            "rejected": rep.rejected,
            "histogram": rep.histogram,
            "max_gap": rep.max_gap,
            "max_path_diameter": rep.samples.iter().map(|s| s.path_diameter).max(),
        }));
    }
    h.measure("q_hat", q_hat);
    h.measure("tail_above_small_max", tail_fraction);
    h.measure("max_projection_diameter", max_diam);
    let no_growth = rep1.max_gap <= rep0.max_gap + 1 && tail_fraction <= 0.05;
    let h = h.finish(
        no_growth && max_diam < q_hat,
        format!(
            "histograms {:?} → {:?}, q̂ = {}, {:.1}% above the radius-{} maximum, projection diameter ≤ {}",
            rep0.histogram, rep1.histogram, q_hat, 100.0 * tail_fraction, r0, max_diam
        ),
    );

    // Lipschitz along the sampled geodesics
    let mut l = Check::new("projection-lipschitz");
    let mut steps = 0;
    let mut worst = 0;
    for (rep, pb) in [(&rep0, &small), (&rep1, &large)] {
        let paths: Vec<Vec<Sphere>> =
            rep.samples.iter().map(|s| s.path.iter().map(|&v| pb.ball.spheres[v].clone()).collect()).collect();
        let rows = par_map(&paths, |p| lipschitz_check(p, &c));
        for (p, row) in paths.iter().zip(rows) {
            let row = row?;
            steps += row.gaps.len();
            worst = worst.max(row.gaps.iter().copied().max().unwrap_or(0));
            for &i in &row.violations {
                l.witness(json!({ "radius": rep.radius, "from": p[i].key(), "to": p[i + 1].key(), "gap": row.gaps[i] }));
            }
        }
    }
    l.measure("steps", steps);
    l.measure("max_step_gap", worst);
    let bad = l.witnesses.len();
    let l = l.finish(bad == 0, format!("{} geodesic steps, largest step {}, {} violations", steps, worst, bad));

    // stabilisation along geodesics from σ0 in the larger ball
    let mut s = Check::new("stabilization");
    let table = ProjectionTable::new(&large.projections);
    let targets: Vec<usize> = (1..large.ball.len()).filter(|&t| large.projections[t].is_some()).collect();
    let rows: Vec<Result<(Vec<usize>, crate::projections::StabilizationReport)>> = par_map(&targets, |&t| {
        let path = large.ball.shortest_path(0, t).ok_or_else(|| Error::Unavailable("disconnected ball".into()))?;
        let rep = stabilization_check(&path, &large.ball.dist, &table, 2)?;
        Ok((path, rep))
    });
    let (mut rows_seen, mut max_d) = (0, 0);
    for row in rows {
        let (path, rep) = row?;
        rows_seen += rep.rows.len();
        max_d = max_d.max(rep.rows.iter().map(|r| r.2).max().unwrap_or(0));
        for &k in &rep.violations {
            s.witness(json!({ "path": path.iter().map(|&v| large.ball.spheres[v].key()).collect::<Vec<_>>(), "index": k }));
        }
    }
    s.measure("paths", targets.len());
    s.measure("states", rows_seen);
    s.measure("max_distance_to_end", max_d);
    let bad = s.witnesses.len();
    let s = s.finish(bad == 0, format!("{} geodesics from σ0, {} states past distance 2, max distance {}, {} violations", targets.len(), rows_seen, max_d, bad));

    // locator in a ball one step larger
    let lr = spec.count("locator_radius", r1 + 1);
    let bound = avoiding_gap_bound(spec, &large)?;
    let big = if lr == r1 { large } else { ProjectedBall::build(spec, &tpl, lr)? };
    // The sampled q̂ can miss rare large gaps, so the locator threshold is also
    // kept above every gap realised by an avoiding geodesic in the smaller ball.
    let threshold = q_hat.max(bound + 1);
    let mut loc = locator(spec, &big, threshold)?;
    loc.measured.insert(format!("avoiding_gap_bound_radius_{}", r1), json!(bound));
    constants.q_l_table.insert("1".into(), Calibrated { value: q_hat as f64, experiment: "bgi".into() });
    Ok(SuiteOutput { checks: vec![h, l, s, loc], constants })
}

/// Non-separating vertices with a projection, grouped by projection, with
/// the gap between every pair of groups.
struct ProjectionClasses {
    classes: Vec<Vec<usize>>,
    gaps: Vec<(usize, usize, usize)>,
}

impl ProjectionClasses {
    // Vertices with equal projections have equal gaps to everything, so the
    // scans run over pairs of distinct projections and expand only the pairs
    // they need to their members.
    fn new(pb: &ProjectedBall, table: &ProjectionTable) -> Result<Self> {
        let mut classes: BTreeMap<Vec<crate::splittings::SphereKey>, Vec<usize>> = BTreeMap::new();
        for v in 1..pb.ball.len() {
            if let (false, Some(p)) = (pb.ball.spheres[v].is_separating(), &pb.projections[v]) {
                classes.entry(p.keys()).or_default().push(v);
            }
        }
        let classes: Vec<Vec<usize>> = classes.into_values().collect();
        let rows: Vec<Result<Vec<(usize, usize, usize)>>> = par_map_range(classes.len(), |i| {
            (i + 1..classes.len()).map(|j| Ok((i, j, table.gap(classes[i][0], classes[j][0])?))).collect()
        });
        let mut gaps = Vec::new();
        for r in rows {
            gaps.extend(r?);
        }
        Ok(ProjectionClasses { classes, gaps })
    }

    /// Up to `per_class` member pairs of every class pair whose gap passes `keep`.
    fn members(&self, per_class: usize, keep: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
        self.gaps
            .iter()
            .filter(|g| keep(g.2))
            .flat_map(|&(i, j, _)| {
                let (ci, cj) = (&self.classes[i], &self.classes[j]);
                ci.iter().flat_map(move |&a| cj.iter().map(move |&b| (a, b))).take(per_class)
            })
            .collect()
    }
}

/// The largest gap between two non-separating spheres of the ball that are
/// joined by a non-separating geodesic avoiding `σ0`, scanning gaps from the
/// top down. Zero when no such pair exists.
fn avoiding_gap_bound(spec: &ExperimentSpec, pb: &ProjectedBall) -> Result<usize> {
    let table = ProjectionTable::new(&pb.projections);
    let pc = ProjectionClasses::new(pb, &table)?;
    let per_class = spec.count("locator_pairs_per_class", 200);
    let mut levels: Vec<usize> = pc.gaps.iter().map(|g| g.2).filter(|&g| g > 0).collect();
    levels.sort_unstable();
    levels.dedup();
    for &t in levels.iter().rev() {
        let members = pc.members(per_class, |g| g == t);
        let verdicts = par_map(&members, |&(a, b)| big_projection_locator(&pb.ball, &table, 0, a, b, t));
        for v in verdicts {
            if v?.avoiding_geodesic.is_some() {
                return Ok(t);
            }
        }
    }
    Ok(0)
}

fn locator(spec: &ExperimentSpec, pb: &ProjectedBall, q: usize) -> Result<Check> {
    let table = ProjectionTable::new(&pb.projections);
    let mut c = Check::new("projection-locator");
    let pc = ProjectionClasses::new(pb, &table)?;
    if pc.classes.iter().map(Vec::len).sum::<usize>() < 2 {
        return Ok(c.finish(false, "ball too small".into()));
    }
    let classes = &pc.classes;
    let far = pc.gaps.iter().filter(|g| g.2 >= q).count();
    let members = pc.members(spec.count("locator_pairs_per_class", 200), |g| g >= q);
    let verdicts = par_map(&members, |&(a, b)| big_projection_locator(&pb.ball, &table, 0, a, b, q));
    let (mut triggered, mut premise, mut max_gap) = (0, 0, 0);
    for (&(a, b), v) in members.iter().zip(verdicts) {
        let v = v?;
        max_gap = max_gap.max(v.gap);
        triggered += usize::from(v.triggered);
        premise += usize::from(v.triggered && v.nonseparating_geodesic);
        if let Some(p) = v.avoiding_geodesic {
            c.witness(json!({ "a": pb.ball.spheres[a].key(), "b": pb.ball.spheres[b].key(), "gap": v.gap, "avoiding_geodesic": p.iter().map(|&x| pb.ball.spheres[x].key()).collect::<Vec<_>>() }));
        }
    }
    let pairs = classes.len() * (classes.len() - 1) / 2;
    c.measure("projection_classes", classes.len());
    c.measure("far_class_pairs", far);
    c.measure("radius", pb.ball.radius);
    c.measure("vertices", pb.ball.len());
    c.measure("threshold", q);
    c.measure("pairs", pairs);
    c.measure("max_gap", max_gap);
    c.measure("triggered", triggered);
    c.measure("with_nonseparating_geodesic", premise);
    let bad = c.witnesses.len();
    Ok(c.finish(
        bad == 0 && premise > 0,
        format!(
            "{} projection pairs in the radius-{} ball, {} vertex pairs with gap ≥ {} ({} joined by non-separating geodesics), {} avoid σ0",
            pairs, pb.ball.radius, triggered, q, premise, bad
        ),
    ))
}

// ---------------------------------------------------------------- axioms

/// Keys: `triples` (2000), `pairs` (40), `q_hat` (measured when absent).
pub fn axioms_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let q_hat = match spec.samples.get("q_hat") {
        Some(&q) => q,
        None => estimate_q_hat(spec)?,
    };
    let k = 2 * q_hat;
    let tpl = ns_template(spec)?;
    let small = ProjectionFamily::from_ball(&build_local_ball(&sigma1(), spec.radii[0], &tpl, max_vertices(spec))?)?;
    let large = ProjectionFamily::from_ball(&build_local_ball(&sigma1(), spec.radii[1], &tpl, max_vertices(spec))?)?;

    let mut rng = spec.rng("axiom-triples");
    let triples = sample_triples(&mut rng, large.len(), spec.count("triples", 2000));
    let rep = verify_axiom1(&large, k, &triples)?;
    let mut a = Check::new("axiom-triples");
    for v in &rep.violations {
        let (x, y, z) = v.triple;
        a.witness(json!({ "triple": [large.spheres[x].key(), large.spheres[y].key(), large.spheres[z].key()], "values": v.values }));
    }
    a.measure("q_hat", q_hat);
    a.measure("k", k);
    a.measure("family", large.len());
    a.measure("triples", triples.len());
    a.measure("max_histogram", &rep.max_histogram);
    let bad = rep.violations.len();
    let a = a.finish(bad == 0, format!("{} triples of a {}-member family at K = {}, max-value histogram {:?}, {} violations", triples.len(), large.len(), k, rep.max_histogram, bad));

    let mut rng = spec.rng("axiom-pair-stability");
    let mut pairs = Vec::new();
    while pairs.len() < spec.count("pairs", 40) {
        let (x, y) = (rng.gen_range(0..small.len()), rng.gen_range(0..small.len()));
        if x != y {
            pairs.push((x, y));
        }
    }
    let stab = axiom2_stability(&small, &large, k, &pairs)?;
    let mut s = Check::new("axiom-pair-stability");
    for row in stab.iter().filter(|r| r.small != r.large) {
        s.witness(row);
    }
    let counts: Vec<(usize, usize)> = stab.iter().map(|r| (r.small, r.large)).collect();
    s.measure("k", k);
    s.measure("shared_pairs", stab.len());
    s.measure("counts", &counts);
    s.measure("families", [small.len(), large.len()]);
    let bad = s.witnesses.len();
    let s = s.finish(
        bad == 0 && stab.len() == pairs.len(),
        format!("{} shared pairs, largest count {}, {} change between radii", stab.len(), counts.iter().map(|c| c.1).max().unwrap_or(0), bad),
    );

    // detector controls: a rigged triple is flagged, a clean family is not
    let size = 12;
    let mut rng = spec.rng("rigged-detector");
    let mut t = sample_triples(&mut rng, size, 200);
    t.push((0, 1, 2));
    let rigged = verify_axiom1(&SyntheticFamily::rigged(size, 0, 1, 2, k + 1), k, &t)?;
    let clean = verify_axiom1(&SyntheticFamily::new(size), k, &t)?;
    let flagged = rigged.violations.iter().any(|v| {
        let mut x = [v.triple.0, v.triple.1, v.triple.2];
        x.sort_unstable();
        x == [0, 1, 2]
    });
    let mut r = Check::new("rigged-detector");
    r.measure("rigged_violations", rigged.violations.len());
    r.measure("clean_violations", clean.violations.len());
    let r = r.finish(flagged && clean.violations.is_empty(), format!("rigged triple flagged: {}, clean family violations: {}", flagged, clean.violations.len()));
    let constants = CalibrationConstants { q: calibrated(q_hat as f64, "axioms"), ..Default::default() };
    Ok(SuiteOutput { checks: vec![a, s, r], constants })
}

// ---------------------------------------------------------------- pair graph

fn seed_pair() -> (NonSepSphere, NonSepSphere) {
    (NonSepSphere::standard(3, 1), NonSepSphere::standard(3, 2))
}

/// Keys: `distortion_pairs` (300), `max_vertices` (200000).
pub fn pairgraph_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let tpl = ns_template(spec)?;
    let (r0, r1) = (spec.radii[0], spec.radii[1]);
    let (s1, s2) = seed_pair();
    let pg = PairGraph::build((&s1, &s2), r1, &tpl, max_vertices(spec))?;

    let tally = pi1_lipschitz(&pg)?;
    let mut p = Check::new("pi1-lipschitz");
    for &(u, v) in &tally.violations {
        p.witness(json!({ "u": pg.vertices[u], "v": pg.vertices[v], "first": [pg.first(u).key(), pg.first(v).key()] }));
    }
    p.measure("vertices", pg.len());
    p.measure("edges", tally.edges);
    p.measure("swap_edges", tally.swap_edges);
    let bad = tally.violations.len();
    let p = p.finish(bad == 0, format!("{} vertices, {} edges ({} swaps), {} violations", pg.len(), tally.edges, tally.swap_edges, bad));

    let eg = electrify(&pg);
    let ns_ball = build_local_ball(&Sphere::NonSep(s1.clone()), r1 + 1, &tpl, max_vertices(spec))?;
    let mut rng = spec.rng("distortion");
    let want = spec.count("distortion_pairs", 300);
    let rep = crate::projection_complex::distortion_check(&pg, &eg, &ns_ball, want, 2, 2, ConeLength::Half, &mut rng)?;
    let mut d = Check::new("distortion");
    for v in &rep.violations {
        d.witness(json!({ "u": pg.vertices[v.pair.0], "v": pg.vertices[v.pair.1], "d_eg": v.d_eg_half, "d_ns": v.d_ns }));
    }
    let worst = rep.samples.iter().map(|s| s.d_eg_half - s.d_ns as f64).fold(f64::NEG_INFINITY, f64::max);
    d.measure("samples", rep.samples.len());
    d.measure("skipped", rep.skipped);
    d.measure("reference_ball", ns_ball.len());
    d.measure("unit_cone_violations", rep.other_violations);
    d.measure("max_excess", worst);
    d.measure("max_d_eg", rep.samples.iter().map(|s| s.d_eg_half).fold(0.0, f64::max));
    let bad = rep.violations.len();
    let d = d.finish(
        bad == 0 && rep.skipped == 0,
        format!("{} pairs within factor 2 plus 2: {} violations with half cones ({} with unit cones)", rep.samples.len(), bad, rep.other_violations),
    );

    let small = fiber_intersections(&pg, r0)?;
    let large = fiber_intersections(&pg, r1)?;
    let stats = |f: &[crate::projection_complex::FiberIntersection]| {
        (f.iter().map(|x| x.diameters.0.max(x.diameters.1)).max().unwrap_or(0), f.iter().map(|x| x.size).max().unwrap_or(0))
    };
    let ((d0, n0), (d1, n1)) = (stats(&small), stats(&large));
    let mut f = Check::new("fiber-intersections");
    f.measure(&format!("radius_{}", r0), json!({ "pairs": small.len(), "max_diameter": d0, "max_size": n0 }));
    f.measure(&format!("radius_{}", r1), json!({ "pairs": large.len(), "max_diameter": d1, "max_size": n1 }));
    // bounded means within the diameter two of a single fibre
    for x in large.iter().filter(|x| x.diameters.0.max(x.diameters.1) > 2) {
        f.witness(json!({ "spheres": [pg.spheres[x.spheres.0].key(), pg.spheres[x.spheres.1].key()], "size": x.size, "diameters": x.diameters }));
    }
    let bounded = f.witnesses.is_empty();
    let f = f.finish(
        d1 == d0 && bounded,
        format!("max diameter {} at radius {} and {} at radius {} over {} intersecting pairs", d0, r0, d1, r1, large.len()),
    );
    Ok(SuiteOutput { checks: vec![p, d, f], constants: CalibrationConstants::default() })
}

// ---------------------------------------------------------------- delta

/// Keys: `delta_build_radius` (7), `trend_radius` (5), `points` (300),
/// `quadruples` (300000), `cycle_max` (6).
pub fn delta_suite(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    let tpl = ns_template(spec)?;
    let (r0, r1) = (spec.radii[0], spec.radii[1]);
    let top = spec.count("trend_radius", 5).max(r1);
    let build = spec.count("delta_build_radius", 7).max(top);
    let (points, quads) = (spec.count("points", 300), spec.count("quadruples", 300_000));
    let (s1, s2) = seed_pair();
    let pg = PairGraph::build((&s1, &s2), build, &tpl, spec.count("max_vertices", 2_000_000))?;

    let mut rows = Vec::new();
    for r in 1..=top {
        let sub = pg.truncate(r);
        let mut rng = spec.rng(&format!("delta-{}", r));
        let ambient = delta_from_oracle(
            sub.len(),
            |p| {
                let d = pg.graph.bfs(sub[p]);
                sub.iter().map(|&v| d[v]).collect()
            },
            points,
            quads,
            &mut rng,
        )?;
        let intrinsic = delta_estimate(&pair_subgraph(&pg, r), points, quads, &mut rng)?;
        rows.push((r, sub.len(), ambient.delta, intrinsic.delta, ambient.witness.map(|w| w.map(|v| pg.vertices[v]))));
    }
    let at = |r: usize| rows.iter().find(|x| x.0 == r).map(|x| x.2).unwrap_or(f64::NAN);
    let (d0, d1) = (at(r0), at(r1));
    let trend: Vec<(f64, f64)> = rows.iter().filter(|x| x.0 >= r0).map(|x| (x.0 as f64, x.2)).collect();
    let (pg_slope, _) = least_squares(&trend.iter().map(|x| x.0).collect::<Vec<_>>(), &trend.iter().map(|x| x.1).collect::<Vec<_>>());

    let mut cyc = Vec::new();
    for r in 2..=spec.count("cycle_max", 6) {
        let mut rng = spec.rng(&format!("cycle-{}", r));
        let g = Graph::cycle(4 * r);
        cyc.push((r, delta_estimate(&g, 4 * r, 100_000, &mut rng)?.delta));
    }
    let (cycle_slope, _) = least_squares(&cyc.iter().map(|x| x.0 as f64).collect::<Vec<_>>(), &cyc.iter().map(|x| x.1).collect::<Vec<_>>());
    let increasing = cyc.windows(2).all(|w| w[1].1 > w[0].1);

    let mut s = Check::new("delta-stability");
    s.measure("build_radius", build);
    s.measure("build_vertices", pg.len());
    s.measure("rows", rows.iter().map(|x| json!({ "radius": x.0, "vertices": x.1, "ambient": x.2, "intrinsic": x.3, "witness": x.4 })).collect::<Vec<_>>());
    s.measure("trend_slope", pg_slope);
    let stable = d1 - d0 <= 0.5;
    if !stable {
        s.witness(json!({ "radius": r1, "delta": d1, "quadruple": rows.iter().find(|x| x.0 == r1).and_then(|x| x.4) }));
    }
    let s = s.finish(stable, format!("δ̂ {} at radius {} and {} at radius {}, trend slope {:.2} over radii {}..{}", d0, r0, d1, r1, pg_slope, r0, top));

    let mut c = Check::new("cycle-control");
    c.measure("cycles", cyc.iter().map(|x| json!({ "length": 4 * x.0, "delta": x.1 })).collect::<Vec<_>>());
    c.measure("slope", cycle_slope);
    c.measure("pair_graph_slope", pg_slope);
    let c = c.finish(increasing && cycle_slope >= 0.75 && pg_slope < cycle_slope, format!("cycle δ̂ slope {:.2} per radius step against {:.2} for the pair graph", cycle_slope, pg_slope));
    Ok(SuiteOutput { checks: vec![s, c], constants: CalibrationConstants::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Suite;

    #[test]
    fn small_growth_suite_passes() {
        let spec = ExperimentSpec::new(Suite::Growth)
            .with_sample("twist_triples", 40)
            .with_sample("path_samples", 30)
            .with_sample("descents", 8)
            .with_sample("retraction_pairs", 30)
            .with_sample("harness_sequences", 10)
            .with_sample("slope_height", 12);
        let out = growth_suite(&spec).unwrap();
        for c in &out.checks {
            assert!(c.pass || c.name == "growth-vs-quasigeodesic", "{} {}", c.name, c.summary);
        }
        assert!(out.constants.l.is_some());
    }

    #[test]
    fn fibonacci_fit_at_small_k_is_near_log_phi() {
        let spec = ExperimentSpec::new(Suite::Example43).with_sample("k_min", 1).with_sample("k_max", 8).with_sample("descent_starts", 1);
        let out = fibonacci_suite(&spec).unwrap();
        let slope = out.checks[0].measured["slope"].as_f64().unwrap();
        assert!(slope > 0.3 && slope < 0.5, "{}", slope);
        assert!(out.checks[1].pass && out.checks[2].pass);
    }

    #[test]
    fn model_relations_cover_all_kinds() {
        let spec = ExperimentSpec::new(Suite::Farey).with_sample("model_pairs", 24);
        let c = model_cross_validation(&spec).unwrap();
        assert!(c.pass, "{}", c.summary);
        let rel = c.measured["relations"].as_object().unwrap();
        for k in ["equal", "disjoint", "crossing"] {
            assert!(rel.get(k).and_then(Value::as_u64).unwrap_or(0) > 0, "{:?}", rel);
        }
    }

    #[test]
    fn drivers_alternate_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let d = descent_drivers(&mut rng, 4);
        let swaps = |m: &Vec<NielsenMove>| m.iter().filter(|x| !x.is_twist()).count();
        assert!((8..=12).contains(&swaps(&d[0])) && (3..=5).contains(&swaps(&d[1])));
    }

    use rand::SeedableRng;
}
