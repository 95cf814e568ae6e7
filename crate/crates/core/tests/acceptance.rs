//! Acceptance criteria, one line each. Runs with its own harness so the
//! PASS/FAIL lines always reach the terminal.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use lshade_memetic::autoloop::{
    assemble_observation, run_loop, ExperimentLogEntry, FunctionResult, LandscapeDescriptor, LoopContext, LoopLog,
    LoopState, OperatorConfig, ProposalEnvelope, ScriptedProposer, Status,
};
use lshade_memetic::gnbg::{
    make_instance, save_instance, Component, InstanceSpec, ParamRange, ProblemInstance, TransformParams,
};
use lshade_memetic::harness::{
    aggregate_wins, classify_failure, ea_budget, run_one, run_one_detailed, run_suite,
    runs_csv_string, ClassifierThresholds, FailureLabel, FunctionEntry, RunSettings, SuiteConfig,
};
use lshade_memetic::lshade::{lpsr_size, run_ea, EAConfig, HistoryMemory, Success};
use lshade_memetic::polish::PolishVariant;
use lshade_memetic::{Bounds, Evaluator, RunRng};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// Independent evaluation used as the oracle for the generator.
fn oracle_transform(y: f64, t: &TransformParams) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let l = y.abs().ln();
    if y > 0.0 {
        (l + t.mu_pos * ((t.omega[0] * l).sin() + (t.omega[1] * l).sin())).exp()
    } else {
        -(l + t.mu_neg * ((t.omega[2] * l).sin() + (t.omega[3] * l).sin())).exp()
    }
}

fn oracle_value(x: &[f64], comps: &[Component]) -> f64 {
    comps
        .iter()
        .map(|c| {
            let n = x.len();
            let r = c.rotation();
            let m = c.m();
            let s: f64 = (0..n)
                .map(|i| {
                    let y: f64 = (0..n).map(|j| r[i * n + j] * (x[j] - m[j])).sum();
                    c.widths()[i] * oracle_transform(y, c.transform()).powi(2)
                })
                .sum();
            c.sigma() + s.powf(c.lambda())
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let steps = 501;
    (0..100u64).into_par_iter().try_for_each(|k| -> Result<(), String> {
        let mut rng = RunRng::seed_from_u64(2024 + k);
        let lambda = [0.25, 0.5, 1.0][rng.random_range(0..3)];
        let spec = InstanceSpec {
            dim: 2,
            components: rng.random_range(2..=5),
            lambda: ParamRange::fixed(lambda),
            rotation: rng.random(),
            ..Default::default()
        };
        let inst = make_instance(&spec, k).map_err(|e| e.to_string())?;
        let opt = inst.optimum_value();
        let at = inst.value(inst.optimum_position());
        ensure((at - opt).abs() <= 1e-12, format!("instance {k}: f(optimum_position) = {at}, optimum {opt}"))?;
        let comps = inst.components().to_vec();
        let b = inst.bounds();
        let h = b.width() / (steps - 1) as f64;
        let mut grid_min = f64::INFINITY;
        for i in 0..steps {
            for j in 0..steps {
                let x = [b.lb + i as f64 * h, b.lb + j as f64 * h];
                let v = oracle_value(&x, &comps);
                if (i * steps + j) % 7 == 0 {
                    let lib = inst.value(&x);
                    ensure(
                        (v - lib).abs() <= 1e-9 * v.abs().max(1.0),
                        format!("instance {k}: oracle {v} vs library {lib}"),
                    )?;
                }
                grid_min = grid_min.min(v);
            }
        }
        ensure(grid_min >= opt, format!("instance {k}: grid {grid_min} undercuts optimum {opt}"))?;
        // the nearest grid node to the optimum is at most h/2 away per axis
        let winner = comps.iter().find(|c| c.sigma() == opt).expect("winning component");
        let mu = winner.transform().mu_pos.max(winner.transform().mu_neg);
        let w_max = winner.widths().iter().cloned().fold(0.0, f64::max);
        let slack = (w_max * (4.0 * mu).exp() * 2.0 * h * h / 4.0).powf(winner.lambda());
        ensure(
            grid_min - opt <= slack * (1.0 + 1e-9),
            format!("instance {k}: grid gap {} above bound {slack}", grid_min - opt),
        )
    })?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("100 instances, grid never below optimum, {t:.1?}"))
}

fn smooth_30d() -> ProblemInstance {
    make_instance(
        &InstanceSpec {
            dim: 30,
            components: 1,
            lambda: ParamRange::fixed(1.0),
            mu: ParamRange::fixed(0.0),
            rotation: false,
            ..Default::default()
        },
        30,
    )
    .unwrap()
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let inst = smooth_30d();
    let settings = RunSettings::new(100_000);
    let records: Vec<_> = (0..31u64)
        .into_par_iter()
        .map(|s| run_one(&inst, 1, s, &settings))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let wins = records.iter().filter(|r| r.win).count();
    let t = start.elapsed();
    ensure(wins == 31, format!("{wins}/31 wins"))?;
    ensure(t < Duration::from_secs(300), format!("took {t:?}"))?;
    Ok(format!("31/31 wins, {t:.1?}"))
}

/// A wide shallow decoy and a narrow global basin twenty times smaller.
fn deceptive_30d() -> ProblemInstance {
    let dim = 30;
    let mut rng = RunRng::seed_from_u64(77);
    let decoy_m: Vec<f64> = (0..dim).map(|_| rng.random_range(-60.0..60.0)).collect();
    let global_m: Vec<f64> = (0..dim).map(|_| rng.random_range(-95.0..95.0)).collect();
    let decoy = Component::new(decoy_m, -99.0, vec![1.0; dim], None, 1.0, TransformParams::IDENTITY).unwrap();
    let global = Component::new(global_m, -100.0, vec![400.0; dim], None, 1.0, TransformParams::IDENTITY).unwrap();
    ProblemInstance::from_components(Bounds::new(-100.0, 100.0).unwrap(), vec![decoy, global], 77).unwrap()
}

fn criterion_3() -> Check {
    let inst = deceptive_30d();
    let wins = |variant: PolishVariant| -> Result<(usize, bool), String> {
        let mut s = RunSettings::new(100_000);
        s.variant = variant;
        let recs: Vec<_> = (0..31u64)
            .into_par_iter()
            .map(|seed| run_one(&inst, 1, seed, &s))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok((recs.iter().filter(|r| r.win).count(), recs.iter().all(|r| r.non_compliant)))
    };
    let (leaky, flagged) = wins(PolishVariant::LeakyA)?;
    let (compliant, compliant_flagged) = wins(PolishVariant::CompliantB)?;
    ensure(leaky == 31, format!("leaky {leaky}/31"))?;
    ensure(leaky >= compliant, format!("leaky {leaky} < compliant {compliant}"))?;
    ensure(flagged, "leaky records not flagged non_compliant")?;
    ensure(!compliant_flagged, "compliant records flagged non_compliant")?;
    Ok(format!("leaky {leaky}/31 (flagged), compliant {compliant}/31"))
}

fn criterion_4() -> Check {
    ensure(lpsr_size(0, 10_000, 180, 4) == 180, "lpsr(0) != 180")?;
    ensure(lpsr_size(10_000, 10_000, 180, 4) == 4, "lpsr(cap) != 4")?;
    let inst = make_instance(&InstanceSpec { dim: 10, ..Default::default() }, 4).unwrap();
    let mut eval = Evaluator::new(&inst, 10_000);
    let mut rng = RunRng::seed_from_u64(4);
    let r = run_ea(&mut eval, 10_000, &EAConfig::default(), &Default::default(), &mut rng).map_err(|e| e.to_string())?;
    for p in &r.trace {
        let expect = lpsr_size(p.used, 10_000, 180, 4).min(p.active);
        ensure(p.population == expect, format!("after {} evals: {} vs {expect}", p.used, p.population))?;
    }
    ensure(r.trace.last().map(|p| p.population) == Some(4), "final population is not 4")?;
    Ok(format!("schedule held over {} generations", r.trace.len()))
}

fn criterion_5() -> Check {
    let mut rng = RunRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(1..20);
        let s: Vec<Success> = (0..n)
            .map(|_| Success {
                f: rng.random_range(1e-3..=1.0),
                cr: rng.random_range(1e-3..=1.0),
                delta: 10f64.powf(rng.random_range(-8.0..4.0)),
            })
            .collect();
        let mut mem = HistoryMemory::new(6, 0.5, 0.5);
        mem.update(&s).map_err(|e| e.to_string())?;
        let total: f64 = s.iter().map(|x| x.delta).sum();
        let lehmer = |v: &dyn Fn(&Success) -> f64| {
            let num: f64 = s.iter().map(|x| x.delta / total * v(x) * v(x)).sum();
            let den: f64 = s.iter().map(|x| x.delta / total * v(x)).sum();
            (num / den).min(1.0)
        };
        let ef = lehmer(&|x| x.f);
        let ecr = lehmer(&|x| x.cr);
        worst = worst.max((mem.m_f()[0] - ef).abs()).max((mem.m_cr()[0].unwrap() - ecr).abs());
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    let mut mem = HistoryMemory::new(6, 0.5, 0.5);
    mem.update(&[Success { f: 0.2, cr: 0.5, delta: 1.0 }, Success { f: 0.8, cr: 0.5, delta: 1.0 }])
        .map_err(|e| e.to_string())?;
    ensure(mem.m_f()[0] == 0.68, format!("worked example gave {:?}", mem.m_f()[0]))?;
    Ok(format!("10^4 sets, max deviation {worst:.1e}; worked example = 0.68"))
}

fn criterion_6() -> Check {
    let failures: Vec<String> = (0..1000u64)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = RunRng::seed_from_u64(10_000 + k);
            let budget = rng.random_range(1_000..=50_000u64);
            let spec = InstanceSpec {
                dim: rng.random_range(2..=10),
                components: rng.random_range(1..=3),
                rotation: rng.random(),
                ..Default::default()
            };
            let inst = make_instance(&spec, k).ok()?;
            let mut s = RunSettings::new(budget);
            if rng.random::<f64>() < 0.2 {
                s.variant = PolishVariant::LeakyA;
            }
            let d = match run_one_detailed(&inst, 1, k, &s) {
                Ok(d) => d,
                Err(e) => return Some(format!("run {k}: {e}")),
            };
            let share = ea_budget(budget, 0.95);
            if d.record.evals_used > budget {
                return Some(format!("run {k}: {} > {budget}", d.record.evals_used));
            }
            if d.ea_used != share {
                return Some(format!("run {k}: EA used {} of its {share}", d.ea_used));
            }
            if d.record.evals_used != d.ea_used + d.polish_evals {
                return Some(format!("run {k}: counter disagrees with phase totals"));
            }
            None
        })
        .collect();
    ensure(failures.is_empty(), failures.join("; "))?;
    Ok("1000 runs within budget, polish starts at the 95% mark".into())
}

/// Wins, mean gap and std per function. Std values not given in the table
/// are zero for winning functions; for the high-variance failures they are
/// taken equal to the mean.
const TABLE_1: [(usize, f64, f64, FailureLabel); 24] = {
    use FailureLabel::*;
    [
        (31, 2.27e-13, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (12, 4.50e-2, 0.0, Partial),
        (0, 3.63e-1, 0.025, TightNearMiss),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 3.67e-13, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 4.58e-16, 0.0, MachinePrecision),
        (31, 1.14e-13, 0.0, MachinePrecision),
        (0, 5.22e1, 5.22e1, HighVarianceBasinSearch),
        (0, 8.99e1, 8.99e1, HighVarianceBasinSearch),
        (0, 5.42, 0.16, TightNearMiss),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 2.05e-13, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (31, 0.0, 0.0, MachinePrecision),
        (30, 2.89e-8, 0.0, NearComplete),
        (0, 5.00, 0.0, DeterministicNearMiss),
        (3, 3.53e-3, 0.0, Partial),
        (31, 0.0, 0.0, MachinePrecision),
        (0, 1.68e1, 1.68e1, HighVarianceBasinSearch),
    ]
};

fn criterion_7() -> Check {
    let t = ClassifierThresholds::default();
    for (k, &(wins, mean, std, label)) in TABLE_1.iter().enumerate() {
        let got = classify_failure(wins, 31, mean, std, &t);
        ensure(got == label, format!("f{}: {got} instead of {label}", k + 1))?;
    }
    Ok("24/24 labels reproduced".into())
}

fn criterion_8() -> Check {
    let total = aggregate_wins(TABLE_1.iter().map(|r| r.0));
    ensure(total == 510, format!("sum is {total}"))?;
    ensure(TABLE_1.len() * 31 == 744, "run count")?;
    Ok("510 of 744".into())
}

fn loop_suite(dir: &Path) -> SuiteConfig {
    let inst = make_instance(
        &InstanceSpec {
            dim: 10,
            lambda: ParamRange::fixed(1.0),
            mu: ParamRange::fixed(0.2),
            omega: ParamRange::new(10.0, 50.0),
            rotation: true,
            ..Default::default()
        },
        3,
    )
    .unwrap();
    save_instance(&inst, dir.join("f01.json")).unwrap();
    let mut suite = SuiteConfig::new(vec![FunctionEntry {
        id: 1,
        instance_path: dir.join("f01.json"),
    }]);
    suite.budget_override = Some(20_000);
    suite
}

fn proposals() -> Vec<String> {
    let env = |tag: &str, strategy: &str, config: OperatorConfig| {
        serde_json::to_string(&ProposalEnvelope {
            analysis: "observed wins on the rugged function".into(),
            strategy: strategy.into(),
            experiment_tag: tag.into(),
            config,
        })
        .unwrap()
    };
    vec![
        env(
            "lower_f_memory",
            "start the F memory lower",
            OperatorConfig {
                f_memory_init: 0.2,
                ..Default::default()
            },
        ),
        env(
            "scouts_everywhere",
            "make nearly every individual a scout",
            OperatorConfig {
                scout_fraction: 0.9,
                cma_fraction: 0.0,
                ..Default::default()
            },
        ),
        "{\"analysis\": \"truncated".into(),
    ]
}

fn criterion_9() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let suite = loop_suite(tmp.path());

    // uninterrupted
    let straight = LoopLog::open(tmp.path().join("straight")).map_err(|e| e.to_string())?;
    let ctx = LoopContext::new(suite.clone()).map_err(|e| e.to_string())?;
    let mut p = ScriptedProposer::new(proposals());
    let final_state = run_loop(&ctx, &straight, &mut p, 10).map_err(|e| e.to_string())?;
    let statuses: Vec<Status> = final_state.history.iter().map(|e| e.status).collect();
    ensure(
        statuses == [Status::Keep, Status::Discard, Status::Crash],
        format!("statuses {statuses:?}"),
    )?;
    let tsv = std::fs::read_to_string(straight.tsv_path()).map_err(|e| e.to_string())?;
    ensure(tsv.lines().count() == 3, format!("tsv has {} lines", tsv.lines().count()))?;
    let kept = final_state.kept_wins();
    ensure(kept.windows(2).all(|w| w[1] > w[0]), "kept wins not increasing")?;
    let first: ProposalEnvelope = serde_json::from_str(&proposals()[0]).unwrap();
    ensure(final_state.best_config == first.config, "best config is not the first proposal")?;

    // interrupted after one step, resumed in a fresh context
    let split = tmp.path().join("split");
    {
        let log = LoopLog::open(&split).map_err(|e| e.to_string())?;
        let ctx = LoopContext::new(suite.clone()).map_err(|e| e.to_string())?;
        let mut p = ScriptedProposer::new(proposals());
        run_loop(&ctx, &log, &mut p, 1).map_err(|e| e.to_string())?;
        let after_one = std::fs::read_to_string(log.tsv_path()).map_err(|e| e.to_string())?;
        ensure(tsv.starts_with(&after_one), "partial tsv is not a prefix")?;
    }
    let log = LoopLog::open(&split).map_err(|e| e.to_string())?;
    let ctx = LoopContext::new(suite).map_err(|e| e.to_string())?;
    let resumed_from = log.load_state().map_err(|e| e.to_string())?.ok_or("no state")?;
    let mut p = ScriptedProposer::new(proposals());
    p.skip(resumed_from.iteration as usize);
    let resumed = run_loop(&ctx, &log, &mut p, 10).map_err(|e| e.to_string())?;
    ensure(resumed == final_state, "resumed state differs")?;
    ensure(
        std::fs::read_to_string(log.tsv_path()).map_err(|e| e.to_string())? == tsv,
        "resumed tsv differs",
    )?;

    let scanned = observation_scan()?;
    Ok(format!(
        "keep/discard/crash, kept wins {kept:?}, resume identical, {scanned} payloads clean"
    ))
}

fn json_numbers(v: &serde_json::Value, out: &mut Vec<f64>, keys: &mut Vec<String>) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => out.push(n.as_f64().unwrap()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out, keys)),
        serde_json::Value::Object(o) => {
            for (k, x) in o {
                keys.push(k.clone());
                json_numbers(x, out, keys);
            }
        }
        serde_json::Value::String(s) => {
            out.extend(s.split([',', '\n', '\t', ' ']).filter_map(|t| t.parse::<f64>().ok()).filter(|x| x.fract() != 0.0))
        }
        _ => {}
    }
}

const ALLOWED_KEYS: [&str; 23] = [
    "current_config",
    "results_csv",
    "history",
    "landscapes",
    "scout_fraction",
    "cma_fraction",
    "p_min",
    "stagnation_window",
    "f_memory_init",
    "cr_memory_init",
    "tag",
    "total_wins",
    "hard_wins",
    "status",
    "description",
    "function_id",
    "dim",
    "lb",
    "ub",
    "lambda",
    "omega",
    "rotation_flag",
    "analysis",
];

fn observation_scan() -> Result<usize, String> {
    let mut rng = RunRng::seed_from_u64(9);
    for k in 0..50u64 {
        let lo = rng.random_range(-200.0..-50.0);
        let half = rng.random_range(20.0..200.0);
        let s_lo = rng.random_range(-90.0..-10.0);
        let spec = InstanceSpec {
            dim: rng.random_range(2..=10),
            components: rng.random_range(1..=4),
            lb: lo,
            ub: lo + 2.0 * half,
            sigma: ParamRange::new(s_lo, s_lo + 60.0),
            lambda: ParamRange::new(0.3, 0.9),
            omega: ParamRange::new(1.5, 40.0),
            rotation: rng.random(),
            ..Default::default()
        };
        let insts: Vec<(u32, ProblemInstance)> = (0..rng.random_range(1..4u32))
            .map(|j| (j + 1, make_instance(&spec, k * 10 + j as u64).unwrap()))
            .collect();
        let landscapes: Vec<LandscapeDescriptor> = insts.iter().map(|(id, i)| LandscapeDescriptor::of(*id, i)).collect();
        let state = LoopState {
            iteration: rng.random_range(0..40),
            best_config: OperatorConfig::default(),
            best_total_wins: rng.random_range(0..100),
            best_results: insts
                .iter()
                .map(|(id, _)| FunctionResult {
                    function_id: *id,
                    wins: rng.random_range(0..31),
                    mean_gap: rng.random(),
                    std_gap: rng.random(),
                })
                .collect(),
            hard_subset: vec![1],
            history: (0..rng.random_range(0..30))
                .map(|h| ExperimentLogEntry {
                    tag: format!("exp_{h}"),
                    total_wins: h,
                    hard_wins: 0,
                    status: Status::Discard,
                    description: "tweak".into(),
                })
                .collect(),
            lineage: Vec::new(),
        };
        let payload = assemble_observation(&state, &landscapes);
        let text = serde_json::to_string(&payload).map_err(|e| e.to_string())?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let (mut nums, mut keys) = (Vec::new(), Vec::new());
        json_numbers(&value, &mut nums, &mut keys);
        for key in &keys {
            ensure(ALLOWED_KEYS.contains(&key.as_str()), format!("payload {k}: unexpected key {key}"))?;
        }
        for label in FailureLabel::ALL {
            ensure(!text.contains(label.as_str()), format!("payload {k}: carries a failure label"))?;
        }
        for (_, inst) in &insts {
            let mut withheld = vec![inst.optimum_value()];
            for c in inst.components() {
                withheld.extend_from_slice(c.m());
                withheld.push(c.sigma());
                withheld.extend_from_slice(c.widths());
                // identity entries of unrotated components carry no information
                withheld.extend(c.rotation().iter().filter(|v| v.fract() != 0.0));
            }
            for w in withheld {
                ensure(!nums.contains(&w), format!("payload {k}: withheld value {w} present"))?;
            }
        }
    }
    Ok(50)
}

fn criterion_10() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut entries = Vec::new();
    for (id, spec) in [
        (1, InstanceSpec { dim: 5, components: 3, rotation: true, ..Default::default() }),
        (2, InstanceSpec { dim: 8, components: 1, rotation: true, ..Default::default() }),
    ] {
        let inst = make_instance(&spec, id as u64 + 40).unwrap();
        let path = tmp.path().join(format!("f{id:02}.json"));
        save_instance(&inst, &path).unwrap();
        entries.push(FunctionEntry { id, instance_path: path });
    }
    let mut suite = SuiteConfig::new(entries);
    suite.seeds = (0..6).collect();
    suite.budget_override = Some(8_000);
    let a = run_suite(&suite, PolishVariant::CompliantB, true).map_err(|e| e.to_string())?;
    let b = run_suite(&suite, PolishVariant::CompliantB, true).map_err(|e| e.to_string())?;
    let c = run_suite(&suite, PolishVariant::CompliantB, false).map_err(|e| e.to_string())?;
    let (ca, cb, cc) = (runs_csv_string(&a.runs), runs_csv_string(&b.runs), runs_csv_string(&c.runs));
    ensure(ca == cb, "repeated runs.csv differs")?;
    ensure(ca == cc, "serial and parallel runs.csv differ")?;
    Ok(format!("{} rows byte-identical across repeats and serial/parallel", a.runs.len()))
}

fn criterion_11() -> Check {
    let cases = [
        ("3 components, rotated, n=10", InstanceSpec { dim: 10, components: 3, rotation: true, ..Default::default() }, false),
        ("1 component, unrotated, n=10", InstanceSpec { dim: 10, components: 1, rotation: false, ..Default::default() }, false),
        ("1 component, rotated, n=5", InstanceSpec { dim: 5, components: 1, rotation: true, ..Default::default() }, false),
        ("1 component, rotated, n=6", InstanceSpec { dim: 6, components: 1, rotation: true, ..Default::default() }, true),
    ];
    let mut counts = Vec::new();
    for (name, spec, expect) in cases {
        let inst = make_instance(&spec, 11).unwrap();
        let mut eval = Evaluator::new(&inst, 20_000);
        let mut rng = RunRng::seed_from_u64(11);
        let r = run_ea(&mut eval, 20_000, &EAConfig::default(), &Default::default(), &mut rng).map_err(|e| e.to_string())?;
        let n = r.cma_trials();
        ensure((n > 0) == expect, format!("{name}: {n} CMA samples"))?;
        counts.push(n);
    }
    Ok(format!("CMA samples per case {counts:?}"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        ("generator optimum certification", criterion_1),
        ("smooth-convex pipeline win", criterion_2),
        ("leakage demonstration", criterion_3),
        ("LPSR conformance", criterion_4),
        ("memory-update oracle", criterion_5),
        ("budget accounting", criterion_6),
        ("classifier fidelity", criterion_7),
        ("win aggregation", criterion_8),
        ("loop mechanics", criterion_9),
        ("determinism", criterion_10),
        ("CMA gate soundness", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion_{:02}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
