//! Subcommand bodies. Each writes its artefacts into the output directory and
//! reports whether every enabled check passed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use irregular_orbits::densities::IntegerSet;
use irregular_orbits::dyadic_sets::{
    checkpoints, class_limit, fact0_table, verify_checkpoint_gap, verify_class_limits, verify_counting_bounds,
    verify_lower_density, verify_mass_bound, verify_separation, write_fact0_csv, LevelSet, FACT0_SUP,
};
use irregular_orbits::fhc_vector::{build_c_sequence, build_family, fhc_error_bound, AssembledVector};
use irregular_orbits::scalar::{format_scalar, rational, rational_to_f64};
use irregular_orbits::shift_model::LazyVector;

use crate::config::RunConfig;

/// Levels included in the class-limit check; deeper levels need checkpoints
/// far beyond `q_l = 32` before their ratios settle within 2%.
pub const CLASS_LIMIT_LEVELS: u32 = 3;
/// Largest scale used by the counting-bound check.
pub const COUNTING_SCALE_MAX: u32 = 26;
/// Levels sampled by the approximation check.
pub const APPROX_LEVELS: u32 = 4;
pub const APPROX_SAMPLES: usize = 5;
pub const SIGN_PATTERNS: usize = 50;

pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((BufWriter::new(file), path))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    let (mut w, path) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(path)
}

pub struct Fact0Args {
    pub a_min: u32,
    pub a_max: u32,
    pub b_max: u32,
}

pub fn fact0(cfg: &RunConfig, args: &Fact0Args) -> Result<Outcome> {
    if args.a_min > args.a_max || args.b_max <= args.a_max {
        bail!("empty range: need a_min <= a_max < b_max, got {}..={} and b_max {}", args.a_min, args.a_max, args.b_max);
    }
    let rows = fact0_table(args.a_min..=args.a_max, args.b_max)?;
    let (w, csv_path) = create(&cfg.out, "fact0.csv")?;
    write_fact0_csv(&rows, w)?;
    let sup_ok = rows.iter().all(|r| r.below_sup());
    let tail_ok = rows.iter().all(|r| r.within_tail_bound());
    let max = rows.iter().map(|r| r.sum.clone()).max().expect("non-empty table");
    let summary = json!({
        "command": "fact0",
        "a_min": args.a_min,
        "a_max": args.a_max,
        "b_max": args.b_max,
        "rows": rows.len(),
        "max_sum": max.to_string(),
        "sup": format!("{}/{}", FACT0_SUP.0, FACT0_SUP.1),
        "sup_holds": sup_ok,
        "tail_bound_holds": tail_ok,
        "pass": sup_ok && tail_ok,
    });
    let json_path = write_json(&cfg.out, "fact0.json", &summary)?;
    Ok(Outcome { name: "fact0", pass: sup_ok && tail_ok, files: vec![csv_path, json_path] })
}

#[derive(Serialize)]
struct SetRow {
    s: u32,
    q_l: u32,
    #[serde(rename = "N_l")]
    n_l: u64,
    class: &'static str,
    count: u64,
    ratio_num: String,
    ratio_den: String,
    ratio_float: f64,
    limit_float: f64,
}

pub fn sets(cfg: &RunConfig) -> Result<Outcome> {
    let cps = checkpoints(&cfg.params, cfg.checkpoint_count)?;
    let (w, csv_path) = create(&cfg.out, "sets.csv")?;
    let mut csv = csv::Writer::from_writer(w);
    let mut levels = Vec::new();
    for s in 1..=cfg.s_max {
        let set = LevelSet::restricted(cfg.params, s)?;
        for cp in cps.iter() {
            let count = set.count_up_to(cp.n);
            let r = rational(count as i64, 1) / rational(cp.n as i64, 1);
            csv.serialize(SetRow {
                s,
                q_l: cp.q,
                n_l: cp.n,
                class: cp.class.label(),
                count,
                ratio_num: r.numer().to_string(),
                ratio_den: r.denom().to_string(),
                ratio_float: rational_to_f64(&r),
                limit_float: rational_to_f64(&class_limit(&cfg.params, s, cp.class)),
            })?;
        }
        levels.push(json!({
            "s": s,
            "modulus": cfg.params.modulus(s),
            "first_scale": cfg.params.first_scale(s),
            "first_member": set.successor(1),
            "count_up_to_horizon": set.count_up_to(cfg.horizon),
        }));
    }
    csv.flush()?;
    let summary = json!({ "command": "sets", "config": cfg.record(), "levels": levels, "checkpoints": cps });
    let json_path = write_json(&cfg.out, "sets.json", &summary)?;
    Ok(Outcome { name: "sets", pass: true, files: vec![csv_path, json_path] })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let cps = checkpoints(p, cfg.checkpoint_count)?;
    let vc_levels = cfg.s_max.min(CLASS_LIMIT_LEVELS);
    let reports = vec![
        verify_separation(p, cfg.s_max, cfg.horizon)?,
        verify_checkpoint_gap(p, cfg.s_max, cfg.checkpoint_count)?,
        verify_counting_bounds(p, cfg.s_max, COUNTING_SCALE_MAX)?,
        verify_mass_bound(p, cfg.s_max, cfg.horizon, &cps)?,
        verify_lower_density(p, cfg.s_max, &cps)?,
        verify_class_limits(p, vc_levels, &cps, cfg.tail_from_q, &rational(2, 100))?,
    ];
    let pass = reports.iter().all(|r| r.pass);
    let summary = json!({
        "command": "verify",
        "config": cfg.record(),
        "pass": pass,
        "checks": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    let path = write_json(&cfg.out, "verify.json", &summary)?;
    Ok(Outcome { name: "verify", pass, files: vec![path] })
}

fn assemble(cfg: &RunConfig) -> Result<AssembledVector> {
    let op = cfg.operator()?;
    let eps = |s: u32| op.epsilon(s);
    let cseq = build_c_sequence(&eps, cfg.s_max)?;
    let blocks = build_family(cfg.family, &cseq, cfg.s_max)?;
    Ok(AssembledVector::new(cfg.params, op.clone(), cseq, blocks)?)
}

pub fn vector(cfg: &RunConfig) -> Result<Outcome> {
    let x = assemble(cfg)?;
    let op = x.operator().clone();
    let cseq = x.c_sequence();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let blocks: Vec<Value> = x
        .blocks()
        .iter()
        .map(|b| {
            json!({
                "s": b.level(),
                "bound": b.bound().to_string(),
                "entries": b.entries().map(|(j, a)| json!({ "j": j, "a": format_scalar(a) })).collect::<Vec<_>>(),
            })
        })
        .collect();

    let mut approx = Vec::new();
    let mut approx_ok = true;
    for r in 1..=cfg.s_max.min(APPROX_LEVELS) {
        if x.block(r).is_some_and(|b| b.is_zero()) {
            continue;
        }
        let members = x.level_set(r).expect("level in range").members_up_to(cfg.horizon);
        if members.is_empty() {
            continue;
        }
        for _ in 0..APPROX_SAMPLES {
            let n = members[rng.gen_range(0..members.len())];
            let c = x.verify_fhc_approx(r, n, cfg.tail_tol)?;
            approx_ok &= c.holds;
            approx.push(json!({
                "r": r, "n": n, "norm": c.norm.value, "tail_bound": c.norm.tail_bound,
                "bound": c.bound, "holds": c.holds,
            }));
        }
    }

    let total: f64 = cseq.gamma_total();
    let mut worst: f64 = 0.0;
    let pattern_horizon = cfg.horizon.min(1 << 11);
    for _ in 0..SIGN_PATTERNS {
        let h = rng.gen_range(1..=pattern_horizon);
        let mut sum = LazyVector::zero();
        for s in 1..=cfg.s_max {
            sum = sum.add(&x.signed_level_sum(s, h, &mut |_| rng.gen_bool(0.5))?);
        }
        let n = op.norm(&sum, cfg.tail_tol)?;
        worst = worst.max(n.value + n.tail_bound);
    }
    let uncond_ok = worst <= total + cfg.tail_tol;

    let summary = json!({
        "command": "vector",
        "config": cfg.record(),
        "epsilon": (1..=cfg.s_max).map(|s| op.epsilon(s)).collect::<Vec<_>>(),
        "c_sequence": {
            "rule": "c_s = s",
            "beta": cseq.beta_values,
            "gamma_partial_sums": cseq.gamma_partial_sums,
            "gamma_next_term": cseq.gamma_next_term,
        },
        "error_bounds": (1..=cfg.s_max).map(|r| fhc_error_bound(cseq, &|s| op.epsilon(s), r)).collect::<Vec<_>>(),
        "blocks": blocks,
        "r_values": x.r_values()?,
        "approximation_checks": approx,
        "sign_patterns": { "count": SIGN_PATTERNS, "max_norm": worst, "bound": total, "holds": uncond_ok },
        "pass": approx_ok && uncond_ok,
    });
    let path = write_json(&cfg.out, "vector.json", &summary)?;
    Ok(Outcome { name: "vector", pass: approx_ok && uncond_ok, files: vec![path] })
}

#[derive(Serialize)]
struct PlotRow {
    l: usize,
    #[serde(rename = "N_l")]
    n_l: u64,
    class: &'static str,
    ratio: f64,
    predicted: f64,
}

pub fn orbit(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.numeric_horizon > cfg.horizon {
        bail!("numeric horizon {} exceeds the scan horizon {}", cfg.numeric_horizon, cfg.horizon);
    }
    let x = assemble(cfg)?;
    let cps = checkpoints(&cfg.params, cfg.checkpoint_count)?;
    let exp = x.density_experiment(&cps, cfg.tail_from_q)?;

    let (w, csv_path) = create(&cfg.out, "orbit.csv")?;
    exp.write_csv(w)?;
    let (w, plot_path) = create(&cfg.out, "orbit_plot.csv")?;
    let mut plot = csv::Writer::from_writer(w);
    for row in &exp.rows {
        plot.serialize(PlotRow {
            l: row.checkpoint.l,
            n_l: row.checkpoint.n,
            class: row.checkpoint.class.label(),
            ratio: rational_to_f64(&row.ratio()),
            predicted: rational_to_f64(&row.predicted),
        })?;
    }
    plot.flush()?;

    let cross = x.numeric_oracle(cfg.numeric_horizon)?.cross_check(&x, cfg.tail_tol);
    let rs = x.return_set(cfg.horizon)?;
    let pass = exp.separation_flag() && cross.disagreements == 0 && rs.decomposition_holds();

    let mut summary = exp.summary_json();
    let extra = json!({
        "command": "orbit",
        "config": cfg.record(),
        "cross_oracle": cross,
        "decomposition": rs.decomposition,
        "scanned_members": rs.members.len(),
        "pass": pass,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut summary, extra) {
        a.extend(b);
    }
    let json_path = write_json(&cfg.out, "orbit.json", &summary)?;
    Ok(Outcome { name: "orbit", pass, files: vec![csv_path, plot_path, json_path] })
}

pub fn all(cfg: &RunConfig, fact0_args: &Fact0Args) -> Result<Outcome> {
    let outcomes = vec![fact0(cfg, fact0_args)?, sets(cfg)?, verify(cfg)?, vector(cfg)?, orbit(cfg)?];
    let pass = outcomes.iter().all(|o| o.pass);
    let summary = json!({
        "command": "all",
        "config": cfg.record(),
        "results": outcomes.iter().map(|o| json!({ "command": o.name, "pass": o.pass })).collect::<Vec<_>>(),
        "pass": pass,
    });
    let path = write_json(&cfg.out, "summary.json", &summary)?;
    let mut files: Vec<PathBuf> = outcomes.into_iter().flat_map(|o| o.files).collect();
    files.push(path);
    Ok(Outcome { name: "all", pass, files })
}
