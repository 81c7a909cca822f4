//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p rotorbit-core --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rotorbit_core::curves::geodesic_of;
use rotorbit_core::dynamics::{area_check, TorusProfile};
use rotorbit_core::lp::{q, Q};
use rotorbit_core::realization::{periodic_point_search, realize, CandidateConfig, RealizeConfig};
use rotorbit_core::rotation::{
    deviation_stats, direction_net, hausdorff_to_segment, hull_dimension, measure_vector_lebesgue, mz_estimate,
    random_directions, Basepoint, RotationConfig, RotationSetEstimate, SupportTarget, TorusMap,
};
use rotorbit_core::{build_map, filling_check, zoo, GroupWord, LiftedMap, MapSpec, SurfaceGroup, TorusMapSpec};

const RELATOR_TOL: f64 = 1e-9;
const AREA_TOL: f64 = 1e-6;
const EQUIVARIANCE_TOL: f64 = 1e-9;
const EQUIVARIANCE_SAMPLES: usize = 1000;
const EQUIVARIANCE_WORD_LEN: usize = 3;
const TORUS_N: usize = 10_000;
const HAUSDORFF_TOL: f64 = 0.05;
const PERIODIC_TOL: f64 = 1e-6;
const PERIODIC_N_MAX: usize = 16;
const STREAM_STEPS: usize = 100_000;
const DEVIATION_N: usize = 10_000;
const DEVIATION_SAMPLES: usize = 200;
const RANDOM_DIRECTIONS: usize = 8;
const SLOPE_LIMIT: f64 = 0.01;
const JACOBIAN_TOL: f64 = 1e-6;
const JACOBIAN_SAMPLES: usize = 1000;
const LEBESGUE_SAMPLES: usize = 1_000_000;
const HULL_ITERS: usize = 256;
const HULL_SAMPLES: usize = 2000;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = f();
    let el = t.elapsed();
    let in_time = limit.map_or(true, |l| el <= l);
    let pass = out.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {:.0?}", l));
    println!(
        "{} [{id}] {name}: {} ({:.2?}{budget})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        el
    );
    pass
}

fn chain() -> LiftedMap {
    build_map(&MapSpec::genus2_chain(), &SurfaceGroup::standard(2).unwrap()).unwrap()
}

fn hull_config() -> RotationConfig {
    RotationConfig {
        n_iters: HULL_ITERS,
        n_samples: HULL_SAMPLES,
        seed: SEED,
        basepoint: Basepoint::Origin,
    }
}

fn group_construction() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for g in [2, 3, 4] {
        let s = SurfaceGroup::standard(g).unwrap();
        let r = s.relator_residual();
        let a = s.domain.area();
        let err = (a - 4.0 * PI * (g as f64 - 1.0)).abs();
        ok &= r <= RELATOR_TOL && err <= AREA_TOL;
        parts.push(format!("g={g} residual {r:.1e} area err {err:.1e}"));
    }
    check(ok, format!("{} (tol {RELATOR_TOL:e}, {AREA_TOL:e})", parts.join("; ")))
}

fn equivariance() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for z in zoo() {
        let m = build_map(&z.spec, &SurfaceGroup::standard(z.genus).unwrap()).unwrap();
        let c = &m.certificate;
        ok &= c.samples == EQUIVARIANCE_SAMPLES
            && c.max_word_len == EQUIVARIANCE_WORD_LEN
            && c.max_error < EQUIVARIANCE_TOL;
        parts.push(format!("{} {:.1e}", z.name, c.max_error));
    }
    check(ok, format!("{} (tol {EQUIVARIANCE_TOL:e})", parts.join(", ")))
}

fn filling() -> Outcome {
    let g = SurfaceGroup::standard(2).unwrap();
    let classes = |ws: &[&str]| -> Vec<_> {
        ws.iter()
            .map(|w| geodesic_of(&w.parse::<GroupWord>().unwrap(), &g).unwrap())
            .collect()
    };
    let single = filling_check(&classes(&["a1"]), &g).unwrap();
    let gens = filling_check(&classes(&["a1", "b1", "a2", "b2"]), &g).unwrap();
    let five = filling_check(&classes(&rotorbit_core::dynamics::GENUS2_CHAIN), &g).unwrap();
    let chi = five.v as i64 - five.e as i64 + five.f as i64;
    check(
        !single.is_filling && !gens.is_filling && five.is_filling && chi == -2,
        format!(
            "single {}, generators {}, chain {} with V-E+F = {}-{}+{} = {chi}",
            single.is_filling, gens.is_filling, five.is_filling, five.v, five.e, five.f
        ),
    )
}

fn torus_oracle() -> Outcome {
    let map = TorusMap {
        spec: TorusMapSpec {
            horizontal: TorusProfile::Cosine { amplitude: 1.0 },
            vertical: TorusProfile::Zero,
        },
    };
    let cfg = RotationConfig {
        n_iters: TORUS_N,
        n_samples: TORUS_N,
        seed: SEED,
        basepoint: Basepoint::Origin,
    };
    let est = mz_estimate(&map, &cfg).unwrap();
    let h = hausdorff_to_segment(&est.cloud, [0.0, 0.0], [1.0, 0.0]);
    check(h <= HAUSDORFF_TOL, format!("Hausdorff {h:.2e} to [0,1]x{{0}} (tol {HAUSDORFF_TOL})"))
}

struct RationalProbe {
    outcome: Outcome,
    stream: Option<(f64, f64, usize)>,
}

fn rational_probe(map: &LiftedMap, est: &RotationSetEstimate) -> RationalProbe {
    let dim = hull_dimension(est);
    let margin = est.interior_margin(&[0.0; 4]);
    let mut detail = vec![format!("hull dim {dim}, margin of 0 {margin:.4}")];
    let mut ok = dim == 4 && margin > 0.0;

    let cfg = RealizeConfig {
        candidates: CandidateConfig {
            starts: 64_000,
            return_radius: 0.1,
            ..Default::default()
        },
        stream_steps: STREAM_STEPS,
        ..Default::default()
    };
    let mut stream = None;
    match realize(map, &cfg) {
        Ok(run) => {
            let c = &run.certificate;
            let scale: BigInt = &c.a_total * &c.n_product;
            let expected: Vec<Q> = c.v.iter().map(|x| x * Q::from_integer(scale.clone())).collect();
            let exact = c.homology.iter().map(|h| Q::from_integer(h.clone())).collect::<Vec<_>>() == expected
                && c.homology == c.homology_from_words();
            let nonzero = c.v.iter().any(|x| *x != q(0));
            ok &= exact && nonzero && c.verify();
            detail.push(format!(
                "{} data, certificate exact {exact} for v = [{}]",
                run.data.len(),
                c.v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            ));
            stream = Some((run.stream_max_deviation, run.stream_c_star, run.stream_steps));
        }
        Err(e) => {
            ok = false;
            detail.push(format!("realize failed: {e}"));
        }
    }
    let w: GroupWord = "A1".parse().unwrap();
    match periodic_point_search(map, &w, PERIODIC_N_MAX, PERIODIC_TOL) {
        Ok(r) => {
            ok &= r.residual < PERIODIC_TOL;
            detail.push(format!("A1 periodic at N={} residual {:.1e}", r.n, r.residual));
        }
        Err(e) => {
            ok = false;
            detail.push(format!("A1: {e}"));
        }
    }
    RationalProbe {
        outcome: check(ok, format!("{} (tol {PERIODIC_TOL:e})", detail.join("; "))),
        stream,
    }
}

fn deviation(map: &LiftedMap, est: &RotationSetEstimate) -> Outcome {
    let mut dirs = direction_net(4, 0);
    dirs.extend(random_directions(4, RANDOM_DIRECTIONS, SEED));
    let targets: Vec<SupportTarget> = dirs.iter().map(|u| SupportTarget::from_direction(est, u)).collect();
    let cfg = RotationConfig {
        n_iters: DEVIATION_N,
        n_samples: DEVIATION_SAMPLES,
        ..hull_config()
    };
    match deviation_stats(map, &cfg, est, &targets) {
        Ok(reps) => {
            let worst = reps.iter().map(|r| r.slope).fold(f64::NEG_INFINITY, f64::max);
            let max_dev = reps.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
            check(
                reps.len() == 16 && worst < SLOPE_LIMIT,
                format!(
                    "{} directions, worst slope {worst:.2e}, max deviation {max_dev:.2} (limit {SLOPE_LIMIT})",
                    reps.len()
                ),
            )
        }
        Err(e) => check(false, e.to_string()),
    }
}

fn area_and_lebesgue(map: &LiftedMap, est: &RotationSetEstimate) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for z in zoo() {
        let m = build_map(&z.spec, &SurfaceGroup::standard(z.genus).unwrap()).unwrap();
        let r = area_check(&m, JACOBIAN_SAMPLES, SEED).unwrap();
        ok &= r.max_defect < JACOBIAN_TOL && r.samples == JACOBIAN_SAMPLES;
        parts.push(format!("{} {:.1e}", z.name, r.max_defect));
    }
    let cfg = RotationConfig {
        n_iters: 1,
        n_samples: LEBESGUE_SAMPLES,
        ..hull_config()
    };
    let lv = measure_vector_lebesgue(map, &cfg).unwrap();
    let margin = est.interior_margin(&lv.vector);
    ok &= margin > lv.confidence_radius;
    check(
        ok,
        format!(
            "|det-1|: {} (tol {JACOBIAN_TOL:e}); Lebesgue margin {margin:.4} > confidence radius {:.4}",
            parts.join(", "),
            lv.confidence_radius
        ),
    )
}

fn determinism(map: &LiftedMap) -> Outcome {
    let cfg = RotationConfig {
        n_iters: 64,
        n_samples: 300,
        seed: 11,
        basepoint: Basepoint::Shifted { x: 0.1, y: -0.05 },
    };
    let a = serde_json::to_vec(&mz_estimate(map, &cfg).unwrap()).unwrap();
    let b = serde_json::to_vec(&mz_estimate(map, &cfg).unwrap()).unwrap();
    let lcfg = RotationConfig {
        n_samples: 20_000,
        ..cfg.clone()
    };
    let la = serde_json::to_vec(&measure_vector_lebesgue(map, &lcfg).unwrap()).unwrap();
    let lb = serde_json::to_vec(&measure_vector_lebesgue(map, &lcfg).unwrap()).unwrap();
    check(
        a == b && la == lb,
        format!("estimate {} bytes, Lebesgue {} bytes identical across runs", a.len(), la.len()),
    )
}

fn main() {
    let mins = |m: u64| Some(Duration::from_secs(60 * m));
    let secs = |s: u64| Some(Duration::from_secs(s));
    let mut all = true;
    all &= report(1, "group construction", secs(1), group_construction);
    all &= report(2, "equivariance of zoo lifts", secs(10), equivariance);
    all &= report(3, "filling checker", secs(30), filling);
    all &= report(4, "torus oracle", secs(60), torus_oracle);

    let map = chain();
    let est = mz_estimate(&map, &hull_config()).unwrap();
    let mut stream = None;
    all &= report(5, "rational realization", mins(10), || {
        let p = rational_probe(&map, &est);
        stream = p.stream;
        p.outcome
    });
    all &= report(6, "irrational bounded sequence", None, || match stream {
        Some((dev, c_star, steps)) => check(
            steps == STREAM_STEPS && dev < c_star,
            format!("max deviation {dev:.4e} < C* {c_star:.4e} over {steps} steps"),
        ),
        None => check(false, "no realization run"),
    });
    all &= report(7, "supporting-direction deviation", mins(10), || deviation(&map, &est));
    all &= report(8, "area preservation and Lebesgue vector", None, || {
        area_and_lebesgue(&map, &est)
    });
    all &= report(9, "determinism", None, || determinism(&map));
    if !all {
        std::process::exit(1);
    }
}
