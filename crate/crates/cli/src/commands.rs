use std::io::Write as _;
use std::path::Path;

use scrn::construct::{
    build_shl_multiclass_with, build_shl_separator_with, build_thl_multiclass_with, build_thl_separator_with,
    stack_shl, stack_thl, ConstructOptions,
};
use scrn::data::{gen_polytope_blobs, gen_rings, gen_xor, BlobParams, LabeledDataset, RingParams};
use scrn::decompose::{full_drill_down, shl_decompose, thl_decompose, DecompositionReport, DrillDownReport};
use scrn::geometry::{
    is_convexly_separable, is_linearly_separable, is_mutually_convexly_separable, pairwise_verdicts, PairwiseMode,
    SeparabilityVerdict,
};
use scrn::mm::MmTrace;
use scrn::plot::{render_svg, Overlay};
use scrn::train::{multiclass_train, train_shl, train_thl, Arch, Binary, Init, LossReport, TrainConfig};
use scrn::verify::{check_all, run_suite, Suite, VerifyOptions};
use scrn::{Model, PointSet, ScrnError};
use serde_json::{json, Value};

use super::{
    ArchArg, CheckArgs, CheckMode, ConstructArgs, DecomposeArgs, DecomposeMode, Failure, GenKind, InitArg, Method,
    PlotArgs, SuiteArg, TrainArgs, VerifyArgs,
};

type CmdResult = std::result::Result<(), Failure>;

fn write(path: &Path, text: &str) -> scrn::Result<()> {
    std::fs::write(path, text).map_err(|e| ScrnError::Io(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> scrn::Result<String> {
    std::fs::read_to_string(path).map_err(|e| ScrnError::Io(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path) -> scrn::Result<LabeledDataset> {
    LabeledDataset::from_csv_str(&read(path)?)
}

fn load_model(path: &Path) -> scrn::Result<Model> {
    Model::from_json(&read(path)?)
}

/// Stdout may be a closed pipe (`| head`); that is not an error here.
fn print(v: &Value) {
    let _ = writeln!(
        std::io::stdout(),
        "{}",
        serde_json::to_string_pretty(v).expect("serializable")
    );
}

/// Every label in `0..n_classes` must occur.
fn classes_of(data: &LabeledDataset) -> scrn::Result<Vec<PointSet>> {
    let classes = data.classes();
    if let Some(k) = classes.iter().position(|c| c.is_empty()) {
        return Err(ScrnError::Config(format!("label {k} has no points")));
    }
    Ok(classes)
}

struct Split {
    pos: PointSet,
    neg: PointSet,
    neg_rows: Vec<usize>,
}

fn split(data: &LabeledDataset, positive: usize) -> scrn::Result<Split> {
    let pos_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == positive).collect();
    let neg_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] != positive).collect();
    if pos_rows.is_empty() {
        return Err(ScrnError::Config(format!("no points with label {positive}")));
    }
    if neg_rows.is_empty() {
        return Err(ScrnError::Config(format!("no points outside label {positive}")));
    }
    Ok(Split {
        pos: data.points.subset(&pos_rows),
        neg: data.points.subset(&neg_rows),
        neg_rows,
    })
}

fn verdict_json(v: &SeparabilityVerdict) -> Value {
    let witness = match (&v.witness_w, v.witness_b) {
        (Some(w), Some(b)) => json!({ "w": w, "b": b }),
        _ => Value::Null,
    };
    let mut obj = json!({
        "separable": v.separable,
        "distance": v.distance,
        "witness": witness,
        "tolerance": v.tolerance_used,
    });
    if let Some(i) = v.closest_index {
        obj["closest_index"] = json!(i);
    }
    obj
}

pub(crate) fn gen(kind: GenKind) -> CmdResult {
    let (data, out) = match kind {
        GenKind::Xor { out } => (gen_xor(), out),
        GenKind::Rings {
            inner,
            outer,
            rin,
            rout,
            no_center,
            jitter,
            seed,
            out,
        } => {
            let p = RingParams {
                n_inner: inner,
                n_outer: outer,
                r_inner: rin,
                r_outer: rout,
                include_center: !no_center,
                jitter,
                seed,
            };
            (gen_rings(&p)?, out)
        }
        GenKind::Blobs {
            classes,
            dim,
            per_class,
            separation,
            seed,
            out,
        } => {
            let p = BlobParams {
                classes,
                dim,
                points_per_class: per_class,
                separation,
                seed,
            };
            (gen_polytope_blobs(&p)?, out)
        }
    };
    write(&out, &data.to_csv_string()?)?;
    let classes = data.classes();
    let tol = scrn::DEFAULT_TOL;
    let summary = json!({
        "points": data.len(),
        "dim": data.dim(),
        "classes": classes.len(),
        "pairwise_linear": pairwise_verdicts(&classes, PairwiseMode::Linear, tol)?.all_separable(),
        "pairwise_mutual_convex": pairwise_verdicts(&classes, PairwiseMode::MutualConvex, tol)?.all_separable(),
    });
    print(&summary);
    Ok(())
}

fn parse_pair(s: &str) -> scrn::Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || ScrnError::Config(format!("--classes expects two labels 'a,b', got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].parse().map_err(|_| bad())?;
    let b = parts[1].parse().map_err(|_| bad())?;
    if a == b {
        return Err(ScrnError::Config("--classes needs two different labels".into()));
    }
    Ok((a, b))
}

pub(crate) fn check(args: CheckArgs) -> CmdResult {
    let data = load_data(&args.data)?;
    let tol = args.tol;
    let out = match args.mode {
        CheckMode::PairwiseLinear | CheckMode::PairwiseMutualConvex => {
            let mode = if matches!(args.mode, CheckMode::PairwiseLinear) {
                PairwiseMode::Linear
            } else {
                PairwiseMode::MutualConvex
            };
            let v = pairwise_verdicts(&classes_of(&data)?, mode, tol)?;
            json!({
                "mode": mode,
                "separable": v.all_separable(),
                "verdicts": v.separable,
                "distance": v.distance,
                "witness": Value::Null,
            })
        }
        mode => {
            let (a, b) = parse_pair(&args.classes)?;
            let ca = data.class(a);
            let cb = data.class(b);
            for (k, c) in [(a, &ca), (b, &cb)] {
                if c.is_empty() {
                    return Err(ScrnError::Config(format!("no points with label {k}")).into());
                }
            }
            match mode {
                CheckMode::Linear => {
                    let mut v = verdict_json(&is_linearly_separable(&ca, &cb, tol)?);
                    v["mode"] = json!("linear");
                    v["classes"] = json!([a, b]);
                    v
                }
                CheckMode::Convex => {
                    let mut v = verdict_json(&is_convexly_separable(&ca, &cb, tol)?);
                    v["mode"] = json!("convex");
                    v["classes"] = json!([a, b]);
                    v
                }
                _ => {
                    let m = is_mutually_convexly_separable(&ca, &cb, tol)?;
                    json!({
                        "mode": "mutual_convex",
                        "classes": [a, b],
                        "separable": m.separable,
                        "distance": m.a_from_b.distance.min(m.b_from_a.distance),
                        "witness": Value::Null,
                        "a_from_b": verdict_json(&m.a_from_b),
                        "b_from_a": verdict_json(&m.b_from_a),
                    })
                }
            }
        }
    };
    print(&out);
    Ok(())
}

fn first_output(model: &Model, x: &[f64]) -> scrn::Result<f64> {
    Ok(model.forward(x)?[0])
}

/// Maps an index into the negative set back to its data row.
fn with_row(e: ScrnError, neg_rows: &[usize]) -> Failure {
    let row = match &e {
        ScrnError::NotConvexlySeparable { index, .. } => neg_rows.get(*index).copied(),
        _ => None,
    };
    Failure {
        extra: row.map(|r| ("row", json!(r))),
        error: e,
    }
}

pub(crate) fn construct(args: ConstructArgs) -> CmdResult {
    let data = load_data(&args.data)?;
    let opts = ConstructOptions {
        tol: args.tol,
        merge_nodes: args.merge,
    };
    let (model, summary) = match args.method {
        Method::Shl | Method::Thl => {
            let s = split(&data, args.positive)?;
            let model = if matches!(args.method, Method::Shl) {
                Model::Scrn1(build_shl_separator_with(&s.pos, &s.neg, &opts).map_err(|e| with_row(e, &s.neg_rows))?)
            } else {
                Model::Scrn2(build_thl_separator_with(&s.pos, &s.neg, &opts)?)
            };
            let pos: Vec<f64> = s
                .pos
                .iter()
                .map(|x| first_output(&model, x))
                .collect::<scrn::Result<_>>()?;
            let neg: Vec<f64> = s
                .neg
                .iter()
                .map(|x| first_output(&model, x))
                .collect::<scrn::Result<_>>()?;
            let summary = json!({
                "kind": model.kind(),
                "positive_label": args.positive,
                "min_positive_margin": pos.iter().cloned().fold(f64::INFINITY, f64::min),
                "max_negative_margin": neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                "margins": { "positive": pos, "negative": neg },
            });
            (model, summary)
        }
        Method::ShlMulti | Method::ThlMulti => {
            let classes = classes_of(&data)?;
            let model = if matches!(args.method, Method::ShlMulti) {
                Model::Scrn1(build_shl_multiclass_with(&classes, &opts)?)
            } else {
                Model::Scrn2(build_thl_multiclass_with(&classes, &opts)?)
            };
            let mut own_min = vec![f64::INFINITY; classes.len()];
            let mut off_max = vec![f64::NEG_INFINITY; classes.len()];
            for (x, &l) in data.points.iter().zip(&data.labels) {
                for (k, v) in model.forward(x)?.into_iter().enumerate() {
                    if k == l {
                        own_min[k] = own_min[k].min(v);
                    } else {
                        off_max[k] = off_max[k].max(v);
                    }
                }
            }
            let ok = own_min.iter().all(|&v| v > 0.0) && off_max.iter().all(|&v| v < 0.0);
            let summary = json!({
                "kind": model.kind(),
                "outputs": classes.len(),
                "sign_pattern_ok": ok,
                "min_own_class_output": own_min,
                "max_other_class_output": off_max,
            });
            (model, summary)
        }
    };
    write(&args.out, &model.to_json()?)?;
    print(&summary);
    Ok(())
}

fn parse_hidden(s: &str) -> scrn::Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| ScrnError::Config(format!("bad hidden size '{p}'")))
        })
        .collect()
}

fn trace_json(t: &MmTrace) -> Value {
    json!({
        "initial_objective": t.initial_objective,
        "final_objective": t.final_objective(),
        "steps": t.iterations.len(),
        "converged": t.converged,
        "stop_reason": t.stop_reason,
    })
}

fn loss_json(r: &LossReport, t: &MmTrace) -> Value {
    let mut v = serde_json::to_value(r).expect("serializable");
    v["trace"] = trace_json(t);
    v
}

pub(crate) fn train(args: TrainArgs) -> CmdResult {
    let data = load_data(&args.data)?;
    let hidden = parse_hidden(&args.hidden)?;
    let init = match args.init {
        InitArg::Random => Init::Random { seed: args.seed },
        InitArg::Constructive => Init::Constructive,
        InitArg::Warm => {
            let path = args
                .model
                .as_ref()
                .ok_or_else(|| ScrnError::Config("--init warm needs --model".into()))?;
            Init::Warm(load_model(path)?)
        }
    };
    let cfg = TrainConfig {
        lambda: args.lambda,
        hidden,
        max_outer: args.max_outer,
        inner_budget: args.inner_budget,
        ftol: args.ftol,
        init,
        timing: args.timing,
    };
    let classes = classes_of(&data)?;
    let (model, traces, report, accuracy) = if classes.len() <= 2 {
        let s = split(&data, args.positive)?;
        match args.arch {
            ArchArg::Shl => {
                let r = train_shl(&s.pos, &s.neg, &cfg)?;
                let report = loss_json(&r.report, &r.trace);
                (Model::CanonicalShl(r.model), vec![r.trace], report, r.report.accuracy)
            }
            ArchArg::Thl => {
                let r = train_thl(&s.pos, &s.neg, &cfg)?;
                let report = loss_json(&r.report, &r.trace);
                (
                    Model::Scrn2(r.model.to_scrn2()),
                    vec![r.trace],
                    report,
                    r.report.accuracy,
                )
            }
        }
    } else {
        if matches!(cfg.init, Init::Warm(_)) {
            return Err(ScrnError::Config("warm starts need a two-class dataset".into()).into());
        }
        let arch = match args.arch {
            ArchArg::Shl => Arch::Shl,
            ArchArg::Thl => Arch::Thl,
        };
        let mc = multiclass_train(&classes, arch, &cfg)?;
        let model = match arch {
            Arch::Shl => Model::Scrn1(stack_shl(
                &mc.binaries
                    .iter()
                    .map(|b| match b {
                        Binary::Shl(m) => m.to_scrn1(),
                        Binary::Thl(_) => unreachable!("single-layer run"),
                    })
                    .collect::<Vec<_>>(),
            )?),
            Arch::Thl => Model::Scrn2(stack_thl(
                &mc.binaries
                    .iter()
                    .map(|b| match b {
                        Binary::Thl(m) => m.to_scrn2(),
                        Binary::Shl(_) => unreachable!("two-layer run"),
                    })
                    .collect::<Vec<_>>(),
            )?),
        };
        let accuracy = mc.accuracy(&classes);
        let report = json!({
            "classes": classes.len(),
            "accuracy": accuracy,
            "traces": mc.traces.iter().map(trace_json).collect::<Vec<_>>(),
        });
        (model, mc.traces, report, accuracy)
    };
    write(&args.out, &model.to_json()?)?;
    if let Some(path) = &args.trace {
        let text = if traces.len() == 1 {
            traces[0].to_csv()
        } else {
            // one block per one-vs-rest model, prefixed by its class label
            let mut out = String::from("class,iteration,objective,surrogate_min,time_ms\n");
            for (k, t) in traces.iter().enumerate() {
                for line in t.to_csv().lines().skip(1) {
                    out.push_str(&format!("{k},{line}\n"));
                }
            }
            out
        };
        write(path, &text)?;
    }
    if let Some(path) = &args.report {
        write(path, &serde_json::to_string_pretty(&report).expect("serializable"))?;
    }
    let first = &traces[0];
    print(&json!({
        "kind": model.kind(),
        "accuracy": accuracy,
        "initial_objective": first.initial_objective,
        "final_objective": first.final_objective(),
        "converged": traces.iter().all(|t| t.converged),
    }));
    Ok(())
}

pub(crate) fn decompose(args: DecomposeArgs) -> CmdResult {
    let data = load_data(&args.data)?;
    let model = load_model(&args.model)?;
    let s = split(&data, args.positive)?;
    let wrong_kind = |want: &str| ScrnError::Config(format!("mode needs a {want} model, got {}", model.kind()));
    let (text, summary) = match args.mode {
        DecomposeMode::Shl => {
            let m = match &model {
                Model::Scrn1(m) => m.clone(),
                Model::CanonicalShl(m) => m.to_scrn1(),
                Model::Scrn2(_) => return Err(wrong_kind("single-hidden-layer").into()),
            };
            let r = shl_decompose(&m, &s.pos, &s.neg)?;
            (r.to_json()?, summary_of(&r))
        }
        DecomposeMode::Thl | DecomposeMode::Drill => {
            let Model::Scrn2(m) = &model else {
                return Err(wrong_kind("two-hidden-layer").into());
            };
            if matches!(args.mode, DecomposeMode::Thl) {
                let r = thl_decompose(m, &s.pos, &s.neg, args.tol)?;
                (r.to_json()?, summary_of(&r))
            } else {
                let opts = ConstructOptions {
                    tol: args.tol,
                    merge_nodes: true,
                };
                let r = full_drill_down(&s.pos, &s.neg, m, &opts)?;
                let mut summary = summary_of(&r.stage1);
                summary["leaves"] = json!(r.leaf_count());
                summary["all_verified"] = json!(r.all_verified);
                (r.to_json()?, summary)
            }
        }
    };
    write(&args.out, &text)?;
    print(&summary);
    Ok(())
}

fn summary_of(r: &DecompositionReport) -> Value {
    json!({
        "kind": r.kind,
        "subsets": r.subsets.len(),
        "coverage_ok": r.coverage_ok,
        "truncated": r.truncated,
        "all_verified": r.all_verified,
    })
}

pub(crate) fn plot(args: PlotArgs) -> CmdResult {
    let data = load_data(&args.data)?;
    let model = args.model.as_deref().map(load_model).transpose()?;
    let overlay = match &args.report {
        None => None,
        Some(path) => {
            let text = read(path)?;
            let neg_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] != args.positive).collect();
            let overlay = if let Ok(r) = serde_json::from_str::<DecompositionReport>(&text) {
                Overlay::from_decomposition(&r, &neg_rows)
            } else {
                let r: DrillDownReport =
                    serde_json::from_str(&text).map_err(|e| ScrnError::parse(format!("report: {e}")))?;
                Overlay::from_drill_down(&r, &neg_rows)
            };
            if overlay.subsets.iter().flatten().any(|&r| r >= data.len()) {
                return Err(ScrnError::Config("report does not match the dataset".into()).into());
            }
            Some(overlay)
        }
    };
    let svg = render_svg(&data, model.as_ref(), overlay.as_ref())?;
    write(&args.out, &svg)?;
    Ok(())
}

pub(crate) fn verify(args: VerifyArgs) -> CmdResult {
    let suite = match args.suite {
        SuiteArg::Geometry => Suite::Geometry,
        SuiteArg::Surrogates => Suite::Surrogates,
        SuiteArg::Descent => Suite::Descent,
        SuiteArg::All => Suite::All,
    };
    let opts = VerifyOptions {
        seed: args.seed,
        inject_fault: args.inject_fault,
    };
    let results = run_suite(suite, &opts)?;
    let mut out = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(
            out,
            "{} {}/{} worst={:e} tol={:e} cases={}",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.name,
            r.worst,
            r.tolerance,
            r.cases
        );
    }
    check_all(&results)?;
    Ok(())
}
